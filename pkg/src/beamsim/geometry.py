"""Cubic Hermite centerline interpolation for thin beam elements.

An element carries two nodes, each with a position vector ``d`` and a
tangent vector ``t`` (the derivative of the centerline with respect to
the undeformed arc length).  The centerline inside the element is the
C1 cubic Hermite curve

    r(xi) = N_d^1 d1 + N_d^2 d2 + (l_ele/2) * (N_t^1 t1 + N_t^2 t2)

with xi in [-1, 1].  The factor ``l_ele/2`` is the constant Jacobian of
the map between the element coordinate and the undeformed arc length,
so nodal tangents of unit length reproduce an arc-length parameterized
straight line exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateTangent(Exception):
    """Raised when the curve derivative norm falls below tolerance."""


#: Relative tolerance for a degenerate parameter-space tangent.
TOL_TANGENT = 1e-12


def shape_functions(xi: float):
    """Hermite shape polynomials and their xi-derivatives.

    Returns
    -------
    tuple of six (2,) arrays
        ``(n_d, n_t, n_d_xi, n_t_xi, n_d_xixi, n_t_xixi)`` where
        ``n_d[i]`` weights the nodal positions and ``n_t[i]`` the nodal
        tangents (before the ``l_ele/2`` scaling applied in
        :func:`evaluate`).
    """
    n_d = np.array([
        0.25 * (2.0 + xi) * (1.0 - xi) ** 2,
        0.25 * (2.0 - xi) * (1.0 + xi) ** 2,
    ])
    n_t = np.array([
        0.25 * (1.0 + xi) * (1.0 - xi) ** 2,
        -0.25 * (1.0 - xi) * (1.0 + xi) ** 2,
    ])
    n_d_xi = np.array([
        -0.75 * (1.0 - xi * xi),
        0.75 * (1.0 - xi * xi),
    ])
    n_t_xi = np.array([
        0.25 * (1.0 - xi) * (-1.0 - 3.0 * xi),
        -0.25 * (1.0 + xi) * (1.0 - 3.0 * xi),
    ])
    n_d_xixi = np.array([1.5 * xi, -1.5 * xi])
    n_t_xixi = np.array([0.5 * (3.0 * xi - 1.0), 0.5 * (3.0 * xi + 1.0)])
    return n_d, n_t, n_d_xi, n_t_xi, n_d_xixi, n_t_xixi


def hermite_weights(xi: float, l_ele: float):
    """Shape function weights in nodal-block order, tangent scaling included.

    Returns three (4,) arrays ``(w, w_xi, w_xixi)`` ordered as
    ``[node1 position, node1 tangent, node2 position, node2 tangent]``
    such that ``r(xi) = w @ X`` for the (4, 3) nodal matrix ``X`` with
    the same row order.
    """
    n_d, n_t, n_d_xi, n_t_xi, n_d_xixi, n_t_xixi = shape_functions(xi)
    half_l = 0.5 * l_ele
    w = np.array([n_d[0], half_l * n_t[0], n_d[1], half_l * n_t[1]])
    w_xi = np.array([n_d_xi[0], half_l * n_t_xi[0], n_d_xi[1], half_l * n_t_xi[1]])
    w_xixi = np.array(
        [n_d_xixi[0], half_l * n_t_xixi[0], n_d_xixi[1], half_l * n_t_xixi[1]]
    )
    return w, w_xi, w_xixi


def hermite_weight_table(xi, l_ele: float):
    """Hermite weights for a whole array of coordinates at once.

    Vector-valued counterpart of :func:`hermite_weights`: for ``xi`` of
    shape ``(n,)`` returns three ``(n, 4)`` arrays ``(w, w_xi, w_xixi)``
    with the same column order, so ``w @ X`` evaluates the centerline
    at all coordinates in one product.
    """
    xi = np.asarray(xi, dtype=float)
    half_l = 0.5 * l_ele
    one_m = 1.0 - xi
    one_p = 1.0 + xi
    w = np.empty(xi.shape + (4,))
    w[..., 0] = 0.25 * (2.0 + xi) * one_m**2
    w[..., 1] = half_l * (0.25 * one_p * one_m**2)
    w[..., 2] = 0.25 * (2.0 - xi) * one_p**2
    w[..., 3] = half_l * (-0.25 * one_m * one_p**2)
    w_xi = np.empty_like(w)
    w_xi[..., 0] = -0.75 * (1.0 - xi * xi)
    w_xi[..., 1] = half_l * (0.25 * one_m * (-1.0 - 3.0 * xi))
    w_xi[..., 2] = 0.75 * (1.0 - xi * xi)
    w_xi[..., 3] = half_l * (-0.25 * one_p * (1.0 - 3.0 * xi))
    w_xixi = np.empty_like(w)
    w_xixi[..., 0] = 1.5 * xi
    w_xixi[..., 1] = half_l * (0.5 * (3.0 * xi - 1.0))
    w_xixi[..., 2] = -1.5 * xi
    w_xixi[..., 3] = half_l * (0.5 * (3.0 * xi + 1.0))
    return w, w_xi, w_xixi


def weight_outer_block(w_row, w_col, m: np.ndarray) -> np.ndarray:
    """(12, 12) block ``kron(outer(w_row, w_col), m)`` for 4-weight vectors.

    This is the Kronecker structure of vector-valued shape functions:
    entry (3i+k, 3j+l) equals ``w_row[i] * w_col[j] * m[k, l]``.
    """
    return (np.outer(w_row, w_col)[:, None, :, None]
            * m[None, :, None, :]).reshape(12, 12)


@dataclass
class ElementDofs:
    """Nodal degrees of freedom of one element plus its undeformed length."""

    d1: np.ndarray
    t1: np.ndarray
    d2: np.ndarray
    t2: np.ndarray
    l_ele: float

    def __post_init__(self):
        if self.l_ele <= 0.0:
            raise ValueError(f"element length must be positive, got {self.l_ele}")
        self.d1 = np.asarray(self.d1, dtype=float)
        self.t1 = np.asarray(self.t1, dtype=float)
        self.d2 = np.asarray(self.d2, dtype=float)
        self.t2 = np.asarray(self.t2, dtype=float)

    @property
    def nodal_matrix(self) -> np.ndarray:
        """(4, 3) matrix with rows ``[d1, t1, d2, t2]``."""
        return np.vstack([self.d1, self.t1, self.d2, self.t2])

    @property
    def vector(self) -> np.ndarray:
        """Flat 12-vector ``[d1, t1, d2, t2]``."""
        return self.nodal_matrix.ravel()

    @classmethod
    def from_vector(cls, q: np.ndarray, l_ele: float) -> "ElementDofs":
        q = np.asarray(q, dtype=float).reshape(4, 3)
        return cls(q[0], q[1], q[2], q[3], l_ele)

    @property
    def jacobian(self) -> float:
        """Constant map factor d(arc length)/d(xi) of the undeformed element."""
        return 0.5 * self.l_ele


@dataclass
class CurvePoint:
    """Centerline value and its first two xi-derivatives at one point."""

    r: np.ndarray
    r_xi: np.ndarray
    r_xixi: np.ndarray


def evaluate(dofs: ElementDofs, xi: float) -> CurvePoint:
    """Evaluate the Hermite centerline at element coordinate ``xi``."""
    w, w_xi, w_xixi = hermite_weights(xi, dofs.l_ele)
    x = dofs.nodal_matrix
    return CurvePoint(r=w @ x, r_xi=w_xi @ x, r_xixi=w_xixi @ x)


@dataclass
class ArcQuantities:
    """Arc-length derivatives and strain measures at one centerline point.

    ``r_s``/``r_ss`` are derivatives with respect to the undeformed arc
    length.  ``eps`` is the axial strain |r_s| - 1.  ``kappa`` is the
    bending curvature vector r_s x r_ss / |r_s|^2 whose norm enters the
    bending energy, while ``kappa_geom = |r_s x r_ss| / |r_s|^3`` is the
    geometric curvature (inverse radius of the deformed centerline) used
    for projection uniqueness bounds.
    """

    r_s: np.ndarray
    r_ss: np.ndarray
    eps: float
    kappa: np.ndarray
    kappa_geom: float

    norm_r_s: float = field(default=0.0)

    @property
    def unit_tangent(self) -> np.ndarray:
        return self.r_s / self.norm_r_s


def arc_quantities(point: CurvePoint, l_ele: float) -> ArcQuantities:
    """Convert xi-derivatives at a point into arc-length measures.

    Raises
    ------
    DegenerateTangent
        If ``|r_xi|`` falls below ``TOL_TANGENT * l_ele``; downstream
        formulas divide by powers of the tangent norm.
    """
    jac = 0.5 * l_ele
    norm_xi = float(np.linalg.norm(point.r_xi))
    if norm_xi < TOL_TANGENT * l_ele:
        raise DegenerateTangent(
            f"|r_xi| = {norm_xi:.3e} below tolerance {TOL_TANGENT * l_ele:.3e}"
        )
    r_s = point.r_xi / jac
    r_ss = point.r_xixi / jac**2
    norm_s = norm_xi / jac
    cross = np.cross(r_s, r_ss)
    kappa = cross / norm_s**2
    return ArcQuantities(
        r_s=r_s,
        r_ss=r_ss,
        eps=norm_s - 1.0,
        kappa=kappa,
        kappa_geom=float(np.linalg.norm(cross)) / norm_s**3,
        norm_r_s=norm_s,
    )
