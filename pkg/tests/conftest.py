"""Shared fixtures and independent oracles.

The moment oracle integrates monomials over polytopes by signed simplicial
decomposition about a reference point, with each simplex integrated through
the barycentric factorial formula.  It shares no code path with the
boundary-reduction integrator it is used to check.
"""

import itertools
import math

import numpy as np
import pytest

from polyvem import benchmarks, mesh as meshmod


# ---------------------------------------------------------------------------
# Oracle: exact monomial integrals over simplices and polytopes


def _multinomial_terms(vectors, power):
    """Expand (sum_i c_i)^power into monomials of the barycentric weights.

    vectors is a list of per-vertex scalars (the vertex coordinates along
    one axis); yields (coefficient, exponent tuple over vertices).
    """
    k = len(vectors)
    for combo in itertools.combinations_with_replacement(range(k), power):
        counts = [0] * k
        for c in combo:
            counts[c] += 1
        coef = math.factorial(power)
        for c in counts:
            coef //= math.factorial(c)
        value = coef
        for i, c in enumerate(counts):
            value *= vectors[i] ** c
        yield value, tuple(counts)


def simplex_monomial_integral(verts, exponent):
    """Exact integral of x^a y^b (z^c) over a simplex (signed by orientation).

    Expands the monomial in barycentric coordinates and applies
    integral(prod lambda_i^{k_i}) = d! V prod(k_i!) / (sum k_i + d)!.
    """
    verts = np.asarray(verts, dtype=float)
    d = verts.shape[1]
    jac = np.linalg.det(verts[1:] - verts[0])
    vol = jac / math.factorial(d)
    total = 0.0
    # Accumulate products over axes by iterating exponent axes jointly.
    partial = {(0,) * (d + 1): 1.0}
    for axis, power in enumerate(exponent):
        if power == 0:
            continue
        coords = verts[:, axis]
        new = {}
        for counts0, val0 in partial.items():
            for val, counts in _multinomial_terms(list(coords), power):
                key = tuple(a + b for a, b in zip(counts0, counts))
                new[key] = new.get(key, 0.0) + val0 * val
        partial = new
    for counts, coef in partial.items():
        num = 1.0
        for c in counts:
            num *= math.factorial(c)
        total += coef * num / math.factorial(sum(counts) + d)
    return total * math.factorial(d) * vol


def polytope_monomial_oracle(mesh, index, exponent):
    """Signed decomposition about the first vertex of the element."""
    el = mesh.elements[index]
    if mesh.dimension == 2:
        loop = el.loop
        ref = mesh.vertices[loop[0]]
        total = 0.0
        for k in range(1, len(loop) - 1):
            tri = np.array([ref, mesh.vertices[loop[k]],
                            mesh.vertices[loop[k + 1]]])
            total += simplex_monomial_integral(tri, exponent)
        return total
    ref = mesh.vertices[el.node_ids()[0]]
    total = 0.0
    for f in el.faces:
        tet = np.array([ref, *mesh.vertices[list(f)]])
        total += simplex_monomial_integral(tet, exponent)
    return total


def exponents_up_to(dim, max_degree):
    if dim == 2:
        return [(a, b) for a in range(max_degree + 1)
                for b in range(max_degree + 1 - a)]
    return [(a, b, c) for a in range(max_degree + 1)
            for b in range(max_degree + 1 - a)
            for c in range(max_degree + 1 - a - b)]


# ---------------------------------------------------------------------------
# Random well-shaped geometry helpers


def random_rotation(rng):
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_tet_mesh(rng, scale=1.0):
    """A single random tetrahedron with bounded aspect ratio."""
    while True:
        verts = rng.uniform(-1.0, 1.0, size=(4, 3)) * scale
        vol = meshmod.tet_volume(*verts)
        if vol < 0:
            verts[[1, 2]] = verts[[2, 1]]
            vol = -vol
        h = max(np.linalg.norm(a - b) for a in verts for b in verts)
        if vol > 0.05 * h ** 3:
            return meshmod.Mesh(3, verts, [meshmod.tet_element((0, 1, 2, 3))])


# ---------------------------------------------------------------------------
# Cached benchmark meshes (generation is not free; share per session)


@pytest.fixture(scope="session")
def beam_meshes():
    return {
        (case, variant): benchmarks.gen_benchmark(f"beam{case}",
                                                  variant=variant)
        for case in ("A", "B") for variant in ("fem", "vem")
    }


@pytest.fixture(scope="session")
def kite_meshes():
    return {
        (eps, variant): benchmarks.gen_benchmark("kite", eps, variant)
        for eps in (1e-1, 1e-5) for variant in ("fem", "vem")
    }
