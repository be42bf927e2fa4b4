"""Reference linear finite elements: tri3 (plane strain), tet4, prism6.

Dof ordering matches the virtual elements: [all-x | all-y | all-z] over the
element's corner nodes, so FEM and VEM matrices are directly comparable on
simplices.
"""

from __future__ import annotations

import numpy as np

from .mesh import ValidationError
from .vem import constitutive_matrix


def tri3_matrices(verts, C, rho):
    """Constant-strain triangle stiffness and consistent mass."""
    verts = np.asarray(verts, float)
    x = verts[:, 0]
    y = verts[:, 1]
    area2 = (x[1] - x[0]) * (y[2] - y[0]) - (x[2] - x[0]) * (y[1] - y[0])
    if area2 <= 0.0:
        raise ValidationError("triangle is degenerate or clockwise")
    area = 0.5 * area2
    b = np.array([y[1] - y[2], y[2] - y[0], y[0] - y[1]]) / area2
    c = np.array([x[2] - x[1], x[0] - x[2], x[1] - x[0]]) / area2
    B = np.zeros((3, 6))
    B[0, :3] = b
    B[1, 3:] = c
    B[2, :3] = c
    B[2, 3:] = b
    K = area * B.T @ C @ B
    m = rho * area / 12.0 * (np.ones((3, 3)) + np.eye(3))
    M = np.zeros((6, 6))
    M[:3, :3] = m
    M[3:, 3:] = m
    return K, M


def tet4_matrices(verts, C, rho):
    """Linear tetrahedron stiffness and consistent mass."""
    verts = np.asarray(verts, float)
    J = verts[1:] - verts[0]
    vol6 = float(np.linalg.det(J))
    if vol6 <= 0.0:
        raise ValidationError("tetrahedron is inverted or degenerate")
    vol = vol6 / 6.0
    # grad N_i: rows of [ -sum ; inv(J)^T ] in the right arrangement
    invJ = np.linalg.inv(J)
    grads = np.zeros((4, 3))
    grads[1:, :] = invJ.T
    grads[0, :] = -grads[1:, :].sum(axis=0)
    B = np.zeros((6, 12))
    for i in range(4):
        gx, gy, gz = grads[i]
        B[0, i] = gx
        B[1, 4 + i] = gy
        B[2, 8 + i] = gz
        B[3, 4 + i] = gz
        B[3, 8 + i] = gy
        B[4, i] = gz
        B[4, 8 + i] = gx
        B[5, i] = gy
        B[5, 4 + i] = gx
    K = vol * B.T @ C @ B
    m = rho * vol / 20.0 * (np.ones((4, 4)) + np.eye(4))
    M = np.zeros((12, 12))
    for comp in range(3):
        M[4 * comp:4 * comp + 4, 4 * comp:4 * comp + 4] = m
    return K, M


_TRI3_POINTS = [(1 / 6, 1 / 6), (2 / 3, 1 / 6), (1 / 6, 2 / 3)]
_LINE2_POINTS = [-1 / np.sqrt(3.0), 1 / np.sqrt(3.0)]


def prism6_matrices(verts, C, rho):
    """Isoparametric 6-node wedge, 3x2 point quadrature.

    Node order: bottom triangle (0,1,2), top triangle (3,4,5).  The rule is
    exact for prisms with affine (planar, translated) caps, which is all the
    extrusion generator produces.
    """
    verts = np.asarray(verts, float)
    if verts.shape != (6, 3):
        raise ValidationError("prism needs 6 nodes")
    K = np.zeros((18, 18))
    M = np.zeros((18, 18))
    for r, s in _TRI3_POINTS:
        for t in _LINE2_POINTS:
            N, dN = _wedge_shape(r, s, t)
            J = dN.T @ verts
            detJ = float(np.linalg.det(J))
            if detJ <= 0.0:
                raise ValidationError(
                    "prism has non-positive Jacobian at a quadrature point")
            w = detJ * (1.0 / 6.0)  # (1/3 * 1/2) triangle x 1 line weight
            grads = dN @ np.linalg.inv(J).T
            B = np.zeros((6, 18))
            for i in range(6):
                gx, gy, gz = grads[i]
                B[0, i] = gx
                B[1, 6 + i] = gy
                B[2, 12 + i] = gz
                B[3, 6 + i] = gz
                B[3, 12 + i] = gy
                B[4, i] = gz
                B[4, 12 + i] = gx
                B[5, i] = gy
                B[5, 6 + i] = gx
            K += w * B.T @ C @ B
            for comp in range(3):
                sl = slice(6 * comp, 6 * comp + 6)
                M[sl, sl] += w * rho * np.outer(N, N)
    return K, M


def _wedge_shape(r, s, t):
    """Shape values and natural-coordinate gradients of the linear wedge."""
    u = 1.0 - r - s
    lower = 0.5 * (1.0 - t)
    upper = 0.5 * (1.0 + t)
    N = np.array([u * lower, r * lower, s * lower,
                  u * upper, r * upper, s * upper])
    dN = np.zeros((6, 3))
    dN[:, 0] = [-lower, lower, 0.0, -upper, upper, 0.0]
    dN[:, 1] = [-lower, 0.0, lower, -upper, 0.0, upper]
    dN[:, 2] = [-0.5 * u, -0.5 * r, -0.5 * s, 0.5 * u, 0.5 * r, 0.5 * s]
    return N, dN


def element_matrices(mesh, index):
    """Reference-FEM (K, M) for a tri/tet/prism element of a mesh."""
    el = mesh.elements[index]
    C = constitutive_matrix(mesh.material, mesh.dimension)
    rho = mesh.material.density
    if el.kind == "tri":
        return tri3_matrices(mesh.vertices[list(el.nodes)], C, rho)
    if el.kind == "tet":
        return tet4_matrices(mesh.vertices[list(el.nodes)], C, rho)
    if el.kind == "prism":
        return prism6_matrices(mesh.vertices[list(el.nodes)], C, rho)
    raise ValidationError(
        f"element {index} (kind {el.kind!r}) has no reference finite element")
