"""Element and global maximum frequencies; critical-time-step estimates.

The element problems are small symmetric dense matrices, solved with a cyclic
Jacobi iteration (deterministic, no external eigensolver).  The global bound
comes from power iteration on the mass-normalized stiffness with homogeneous
constraints eliminated.  The element-eigenvalue inequality makes
max_E omega_E an upper bound for the global omega, so dt = 2 / max_E omega_E
is a safe explicit step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import fem, mesh as meshmod, vem


def jacobi_eigenvalues(A, tol=1e-14, max_sweeps=60):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Returns eigenvalues in ascending order.  Off-diagonal entries below
    tol * ||A|| are skipped, which keeps the sweep count low on the nearly
    diagonal matrices produced after the first couple of passes.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if n == 1:
        return A[0, :1].copy()
    scale = max(np.abs(A).max(), np.finfo(float).tiny)
    thresh = tol * scale
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= thresh * n:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= thresh:
                    continue
                app = A[p, p]
                aqq = A[q, q]
                theta = 0.5 * (aqq - app) / apq
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1)
                s = t * c
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * rq
                A[q, :] = s * rp + c * rq
                cp = A[:, p].copy()
                cq = A[:, q].copy()
                A[:, p] = c * cp - s * cq
                A[:, q] = s * cp + c * cq
                A[p, q] = 0.0
                A[q, p] = 0.0
    return np.sort(np.diag(A))


def jacobi_eigenvalues_batch(As, tol=1e-14, max_sweeps=60):
    """Cyclic Jacobi on a stack of same-size symmetric matrices.

    Rotations for one (p, q) pair are applied across the whole stack at once;
    matrices whose pivot is already below threshold get the identity rotation.
    Returns eigenvalues sorted ascending, shape (batch, n).
    """
    A = np.array(As, dtype=float)
    if A.ndim == 2:
        A = A[None, :, :]
    nb, n, _ = A.shape
    if n == 1:
        return A[:, 0, :1].copy()
    scale = np.maximum(np.abs(A).reshape(nb, -1).max(axis=1),
                       np.finfo(float).tiny)
    thresh = tol * scale
    for _ in range(max_sweeps):
        lower = np.tril(A, -1)
        off = np.sqrt((lower ** 2).sum(axis=(1, 2)))
        if np.all(off <= thresh * n):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[:, p, q]
                active = np.abs(apq) > thresh
                if not active.any():
                    continue
                safe = np.where(apq == 0.0, 1.0, apq)
                theta = 0.5 * (A[:, q, q] - A[:, p, p]) / safe
                t = np.sign(theta) / (np.abs(theta)
                                      + np.sqrt(theta * theta + 1.0))
                t = np.where(theta == 0.0, 1.0, t)
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rp = A[:, p, :].copy()
                rq = A[:, q, :].copy()
                A[:, p, :] = c[:, None] * rp - s[:, None] * rq
                A[:, q, :] = s[:, None] * rp + c[:, None] * rq
                cp = A[:, :, p].copy()
                cq = A[:, :, q].copy()
                A[:, :, p] = c[:, None] * cp - s[:, None] * cq
                A[:, :, q] = s[:, None] * cp + c[:, None] * cq
                A[active, p, q] = 0.0
                A[active, q, p] = 0.0
    diags = np.diagonal(A, axis1=1, axis2=2)
    return np.sort(diags, axis=1)


def element_max_frequency(K, M_lumped):
    """Largest natural frequency of one element, lumped mass.

    Solves the symmetric standard problem L^-1 K L^-T with L = sqrt(M);
    omega = sqrt(lambda_max).
    """
    ml = np.asarray(M_lumped, float)
    if np.any(ml <= 0.0):
        raise meshmod.ValidationError("non-positive lumped mass entry")
    inv_sqrt = 1.0 / np.sqrt(ml)
    A = K * inv_sqrt[:, None] * inv_sqrt[None, :]
    A = 0.5 * (A + A.T)
    lam = jacobi_eigenvalues(A)[-1]
    return float(np.sqrt(max(lam, 0.0)))


@dataclass
class TimeStepReport:
    """Per-element frequencies and the element-eigenvalue time-step bound."""

    method: str
    lumping: str
    omega_elements: np.ndarray
    omega_star: float
    dt_crit: float
    argmax_element: int

    def rows(self):
        for i, w in enumerate(self.omega_elements):
            dt = 2.0 / w if w > 0 else float("inf")
            yield i, float(w), dt

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("element_id,omega_max,dt_element\n")
            for i, w, dt in self.rows():
                fh.write(f"{i},{w:.17g},{dt:.17g}\n")
            fh.write(f"omega_star,{self.omega_star:.17g},"
                     f"{self.dt_crit:.17g},argmax={self.argmax_element}\n")


def element_system(mesh, index, method, alpha0="unit", lumping="auto"):
    """(K, lumped M, node ids, lumping used) for one element and method."""
    if method == "vem":
        em = vem.element_matrices(mesh, index, alpha0=alpha0, lumping=lumping)
        return em.K, em.M_lumped, em.nodes, em.lumping
    if method == "fem":
        K, M = fem.element_matrices(mesh, index)
        el = mesh.elements[index]
        geom = meshmod.element_geometry(mesh, index)
        convex = meshmod.is_convex(mesh, index)
        ml, used = vem.lump(M, lumping, mesh.material.density, geom.volume,
                            mesh.dimension, convex=convex)
        return K, ml, el.node_ids(), used
    raise ValueError(f"unknown method {method!r}")


def _element_systems(mesh, method, alpha0, lumping, threads=1):
    """Element (K, M_lumped, nodes, mode) tuples, optionally pooled."""
    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(
                lambda i: element_system(mesh, i, method, alpha0, lumping),
                range(mesh.num_elements)))
    return [element_system(mesh, i, method, alpha0, lumping)
            for i in range(mesh.num_elements)]


def critical_dt(mesh, method, alpha0="unit", lumping="auto", threads=1):
    """Element-eigenvalue critical time step for the whole mesh.

    Element problems of equal size are eigensolved as one Jacobi batch.
    With threads > 1 the element matrices are built in a thread pool; the
    ordered gather keeps results identical to the serial sweep.
    """
    omegas = np.zeros(mesh.num_elements)
    modes = set()
    groups = {}
    systems = _element_systems(mesh, method, alpha0, lumping, threads)
    for i, (K, ml, _, used) in enumerate(systems):
        if np.any(ml <= 0.0):
            raise meshmod.ValidationError(
                f"element {i}: non-positive lumped mass entry")
        inv_sqrt = 1.0 / np.sqrt(ml)
        A = K * inv_sqrt[:, None] * inv_sqrt[None, :]
        groups.setdefault(A.shape[0], ([], []))
        groups[A.shape[0]][0].append(i)
        groups[A.shape[0]][1].append(0.5 * (A + A.T))
        modes.add(used)
    for _, (ids, mats) in groups.items():
        lams = jacobi_eigenvalues_batch(np.array(mats))[:, -1]
        omegas[ids] = np.sqrt(np.maximum(lams, 0.0))
    arg = int(np.argmax(omegas))
    omega_star = float(omegas[arg])
    dt = 2.0 / omega_star if omega_star > 0 else float("inf")
    return TimeStepReport(
        method=method,
        lumping=",".join(sorted(modes)),
        omega_elements=omegas,
        omega_star=omega_star,
        dt_crit=dt,
        argmax_element=arg,
    )


def global_max_frequency(K, M_lumped, fixed_dofs=(), tol=1e-6,
                         max_iter=200000, seed=0):
    """Largest global frequency by power iteration on L^-1 K L^-T.

    ``K`` may be dense or scipy-sparse; ``fixed_dofs`` are eliminated before
    iterating.  Returns (omega, converged, iterations).
    """
    n = K.shape[0]
    free = np.setdiff1d(np.arange(n), np.asarray(list(fixed_dofs), dtype=int))
    ml = np.asarray(M_lumped, float)[free]
    if np.any(ml <= 0.0):
        raise meshmod.ValidationError("non-positive lumped mass entry")
    Kff = K[np.ix_(free, free)] if isinstance(K, np.ndarray) else \
        K.tocsr()[free, :][:, free]
    inv_sqrt = 1.0 / np.sqrt(ml)

    def apply(x):
        return inv_sqrt * (Kff @ (inv_sqrt * x))

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(len(free))
    x /= np.linalg.norm(x)
    lam = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        y = apply(x)
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0, True, it
        lam_new = float(x @ y)
        x = y / norm
        if it > 1 and abs(lam_new - lam) <= tol * abs(lam_new):
            lam = lam_new
            converged = True
            break
        lam = lam_new
    return float(np.sqrt(max(lam, 0.0))), converged, it
