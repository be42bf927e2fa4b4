"""Boundary-reduction integration against closed forms and the simplicial
decomposition oracle."""

import numpy as np
import pytest

from polyvem import benchmarks, hni, mesh as meshmod

from conftest import exponents_up_to, polytope_monomial_oracle


def unit_tet_mesh():
    verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])
    return meshmod.Mesh(3, verts, [meshmod.tet_element((0, 1, 2, 3))])


def unit_cube_mesh():
    square = meshmod.Mesh(2, np.array([[0.0, 0], [1, 0], [1, 1], [0, 1]]),
                          [meshmod.Element(loop=(0, 1, 2, 3))])
    return meshmod.extrude(square, 1.0, 1)


def test_unit_tet_basics():
    m = unit_tet_mesh()
    integ = meshmod.element_integrator(m, 0)
    assert integ.integrate((0, 0, 0)) == pytest.approx(1.0 / 6.0, rel=1e-14)
    assert integ.integrate((1, 1, 1)) == pytest.approx(1.0 / 720.0, rel=1e-13)


def test_unit_cube_product_integrals():
    m = unit_cube_mesh()
    integ = meshmod.element_integrator(m, 0)
    assert integ.integrate((1, 0, 0)) == pytest.approx(0.5, rel=1e-14)
    # closed-form product integral of x^2 * y * 1
    assert integ.integrate((2, 1, 0)) == pytest.approx(1.0 / 6.0, rel=1e-14)
    assert integ.integrate((4, 0, 0)) == pytest.approx(0.2, rel=1e-14)


def test_polygon_basics():
    tri = hni.PolygonIntegrator(np.array([[0.0, 0], [1, 0], [0, 1]]))
    assert tri.integrate((0, 0)) == pytest.approx(0.5, rel=1e-14)
    assert tri.integrate((1, 1)) == pytest.approx(1.0 / 24.0, rel=1e-14)
    sq = hni.PolygonIntegrator(np.array([[0.0, 0], [1, 0], [1, 1], [0, 1]]))
    assert sq.integrate((2, 1)) == pytest.approx(1.0 / 6.0, rel=1e-14)


@pytest.mark.parametrize("builder", [
    unit_tet_mesh,
    unit_cube_mesh,
    lambda: benchmarks.gen_benchmark("kite", 0.1, "fem"),
    lambda: benchmarks.gen_benchmark("kite", 0.1, "vem"),
    lambda: benchmarks.gen_benchmark("spireC", 1e-3, "vem"),
])
def test_matches_simplicial_oracle_to_degree_four(builder):
    mesh = builder()
    for e in range(mesh.num_elements):
        integ = meshmod.element_integrator(mesh, e)
        for exponent in exponents_up_to(3, 4):
            got = integ.integrate(exponent)
            want = polytope_monomial_oracle(mesh, e, exponent)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-16)


def test_polygon_matches_oracle():
    mesh = benchmarks.gen_benchmark("tri2d", 0.1, "vem")
    for e in range(mesh.num_elements):
        integ = meshmod.element_integrator(mesh, e)
        for exponent in exponents_up_to(2, 4):
            want = polytope_monomial_oracle(mesh, e, exponent)
            assert integ.integrate(exponent) == pytest.approx(
                want, rel=1e-12, abs=1e-16)


def test_translation_consistency():
    # Integrating scaled monomials on shifted coordinates must agree with
    # the binomial recombination of raw moments.
    mesh = benchmarks.gen_benchmark("kite", 0.1, "vem")
    geom = meshmod.element_geometry(mesh, 0)
    el = mesh.elements[0]
    nodes = el.node_ids()
    local = {g: i for i, g in enumerate(nodes)}
    shifted = mesh.vertices[list(nodes)] - geom.centroid
    faces = [tuple(local[v] for v in f) for f in el.faces]
    direct = hni.PolyhedronIntegrator(shifted, faces)
    h = geom.diameter
    for key, val in geom.scaled_moments.items():
        q = sum(key)
        want = direct.integrate(key) / h ** q
        assert val == pytest.approx(want, rel=1e-13, abs=1e-15)


def test_additivity_under_agglomeration():
    fem = benchmarks.gen_benchmark("kite", 0.1, "fem")
    vem = benchmarks.gen_benchmark("kite", 0.1, "vem")
    merged = meshmod.element_integrator(vem, 0)
    parts = [meshmod.element_integrator(fem, e)
             for e in range(fem.num_elements)]
    for exponent in exponents_up_to(3, 3):
        total = sum(p.integrate(exponent) for p in parts)
        assert merged.integrate(exponent) == pytest.approx(
            total, rel=1e-12, abs=1e-15)


def test_centroid_zeroes_first_scaled_moments():
    mesh = benchmarks.gen_benchmark("spireC", 1e-2, "vem")
    geom = meshmod.element_geometry(mesh, 0)
    for axis in range(3):
        key = tuple(1 if a == axis else 0 for a in range(3))
        assert abs(geom.scaled_moments[key]) < 1e-12 * geom.volume


def test_scaled_moment_example_cube():
    mesh = unit_cube_mesh()
    geom = meshmod.element_geometry(mesh, 0)
    # variance of x over the cube is 1/12; scaling by h^2 = 3 gives 1/36.
    assert geom.scaled_moments[(2, 0, 0)] == pytest.approx(1.0 / 36.0,
                                                           rel=1e-13)


def test_rejects_negative_exponent():
    m = unit_tet_mesh()
    integ = meshmod.element_integrator(m, 0)
    with pytest.raises(ValueError):
        integ.integrate((-1, 0, 0))


def test_degree_six_closed_forms():
    # The reduction is exact at any degree, not just the order the mass
    # matrix needs: spot-check degree 6 against product integrals.
    cube = unit_cube_mesh()
    integ = meshmod.element_integrator(cube, 0)
    assert integ.integrate((6, 0, 0)) == pytest.approx(1.0 / 7.0, rel=1e-13)
    assert integ.integrate((2, 2, 2)) == pytest.approx(1.0 / 27.0, rel=1e-13)
    tet = unit_tet_mesh()
    integ_t = meshmod.element_integrator(tet, 0)
    # simplex factorial formula: a! b! c! d! / (a+b+c+3)! * 6V with d = 0
    import math
    want = (math.factorial(2) ** 3) / math.factorial(9)
    assert integ_t.integrate((2, 2, 2)) == pytest.approx(want, rel=1e-13)
