"""Element vectors, residuals and tangent stiffness of the beam element.

The element stores the deformation energy

    Pi_int = int over the undeformed length of
             0.5 * EA * eps^2 + 0.5 * EI * kappa^2

with the axial strain ``eps = |r'| - 1`` and the bending curvature
``kappa = |r' x r''| / |r'|^2`` (primes are derivatives with respect to
the undeformed arc length).  Residual and stiffness are the exact
gradient and Hessian of this energy under the same Gauss rule, so the
discrete force field is conservative.

An optional assumed-strain treatment of the axial term interpolates the
strain with quadratic Lagrange polynomials through three collocation
points (xi = -1, 0, 1) before squaring it.  This removes the membrane
locking that otherwise dominates slender elements under bending.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .geometry import (DegenerateTangent, ElementDofs, hermite_weights,
                       weight_outer_block)

__all__ = [
    "Material",
    "NonPerpendicularMoment",
    "element_vectors",
    "element_gradients",
    "internal_force",
    "internal_stiffness",
    "internal_force_and_stiffness",
    "internal_energy",
    "mcs_axial_force",
    "mass_matrix",
    "external_force",
    "external_stiffness",
    "gauss_rule",
]

#: Default Gauss point count for element integrals.
N_GAUSS_ELEMENT = 4

#: Collocation coordinates of the assumed-strain interpolation.
MCS_POINTS = (-1.0, 0.0, 1.0)


class NonPerpendicularMoment(Exception):
    """Raised for a distributed or end moment with an axial component.

    The beam carries no torsion degree of freedom, so moments must stay
    perpendicular to the centerline tangent to be admissible.
    """


@dataclass
class Material:
    """Homogeneous material and circular cross-section properties.

    The section values are tied to the radius: ``A = pi R^2`` and
    ``I = pi R^4 / 4``.  Use :meth:`circular` to construct consistently.
    """

    E: float
    A: float
    I: float
    rho: float
    R: float

    def __post_init__(self):
        if min(self.E, self.A, self.I, self.R) <= 0.0 or self.rho < 0.0:
            raise ValueError("material constants must be positive (rho >= 0)")
        if not math.isclose(self.A, math.pi * self.R**2, rel_tol=1e-9):
            raise ValueError(
                f"cross-section area {self.A} inconsistent with radius {self.R}"
            )
        if not math.isclose(self.I, math.pi * self.R**4 / 4.0, rel_tol=1e-9):
            raise ValueError(
                f"second moment {self.I} inconsistent with radius {self.R}"
            )

    @classmethod
    def circular(cls, E: float, R: float, rho: float = 0.0) -> "Material":
        return cls(E=E, A=math.pi * R**2, I=math.pi * R**4 / 4.0, rho=rho, R=R)


@functools.lru_cache(maxsize=None)
def gauss_rule(n: int):
    """Gauss-Legendre points and weights on [-1, 1].

    The returned arrays are cached and marked read-only; copy before
    mutating.
    """
    points, weights = np.polynomial.legendre.leggauss(n)
    points.setflags(write=False)
    weights.setflags(write=False)
    return points, weights


def _skew(v: np.ndarray) -> np.ndarray:
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def element_vectors(r_s: np.ndarray, r_ss: np.ndarray):
    """Kinematic vectors t1..t4 entering residual and load terms.

    ``t1`` is the axial-strain gradient with respect to ``r'``, ``t2``
    and ``t3`` the bending-curvature gradients with respect to ``r'``
    and ``r''``, and ``t4 = r' / |r'|^2`` maps moments to the tangent
    degrees of freedom.
    """
    nrm2 = float(r_s @ r_s)
    nrm = math.sqrt(nrm2)
    if nrm < 1e-12:
        raise DegenerateTangent("vanishing centerline tangent in element integral")
    dot = float(r_s @ r_ss)
    t1 = r_s * ((nrm - 1.0) / nrm)
    t2 = 2.0 * r_s * dot**2 / nrm2**3 - (r_s * float(r_ss @ r_ss) + r_ss * dot) / nrm2**2
    t3 = r_ss / nrm2 - r_s * (dot / nrm2**2)
    t4 = r_s / nrm2
    return t1, t2, t3, t4


def element_gradients(r_s: np.ndarray, r_ss: np.ndarray):
    """3x3 blocks of the t-vector derivatives.

    Returns ``(a1, a2a, a2b, a3a, a3b, a4)`` such that, with the
    arc-length shape function matrices ``N'`` and ``N''``,

        d t1 / d q = a1  N',
        d t2 / d q = a2a N' + a2b N'',
        d t3 / d q = a3a N' + a3b N'',
        d t4 / d q = a4  N'.
    """
    eye = np.eye(3)
    nrm2 = float(r_s @ r_s)
    nrm = math.sqrt(nrm2)
    if nrm < 1e-12:
        raise DegenerateTangent("vanishing centerline tangent in element integral")
    dot = float(r_s @ r_ss)
    rss2 = float(r_ss @ r_ss)
    op_ss = np.outer(r_s, r_s)
    op_sss = np.outer(r_s, r_ss)
    op_ssr = np.outer(r_ss, r_s)

    a1 = ((nrm - 1.0) / nrm) * eye + op_ss / nrm**3
    a2a = (
        (2.0 * dot**2 / nrm2**3 - rss2 / nrm2**2) * eye
        + (-12.0 * dot**2 / nrm2**4 + 4.0 * rss2 / nrm2**3) * op_ss
        + (4.0 * dot / nrm2**3) * (op_sss + op_ssr)
        - np.outer(r_ss, r_ss) / nrm2**2
    )
    a2b = (
        -(dot / nrm2**2) * eye
        + (4.0 * dot / nrm2**3) * op_ss
        - (2.0 / nrm2**2) * op_sss
        - op_ssr / nrm2**2
    )
    a3a = a2b.T
    a3b = eye / nrm2 - op_ss / nrm2**2
    a4 = eye / nrm2 - 2.0 * op_ss / nrm2**2
    return a1, a2a, a2b, a3a, a3b, a4


def _arc_weight_rows(xi: float, l_ele: float):
    """Value, first and second arc-length derivative weight rows (4,)."""
    jac = 0.5 * l_ele
    w, w_xi, w_xixi = hermite_weights(xi, l_ele)
    return w, w_xi / jac, w_xixi / jac**2


def _lagrange3(xi: float) -> np.ndarray:
    """Quadratic Lagrange polynomials through xi = -1, 0, 1."""
    return np.array([0.5 * xi * (xi - 1.0), 1.0 - xi * xi, 0.5 * xi * (xi + 1.0)])


def _axial_collocation(x: np.ndarray, l_ele: float):
    """Strain values and strain gradients at the collocation points.

    Returns ``eps`` (3,) and ``b`` (3, 12) with rows d eps / d q, plus
    the first-derivative weight rows for the curvature of the strain.
    """
    eps = np.empty(3)
    b = np.empty((3, 12))
    rows = []
    for k, xi in enumerate(MCS_POINTS):
        _, w1, _ = _arc_weight_rows(xi, l_ele)
        r_s = x.T @ w1
        nrm = float(np.linalg.norm(r_s))
        if nrm < 1e-12:
            raise DegenerateTangent("vanishing tangent at strain collocation point")
        eps[k] = nrm - 1.0
        b[k] = np.outer(w1, r_s / nrm).ravel()
        rows.append((w1, r_s, nrm))
    return eps, b, rows


def _mcs_coupling(l_ele: float, n_gauss: int) -> np.ndarray:
    """(3, 3) integrals of Lagrange polynomial products over the element."""
    pts, wts = gauss_rule(max(n_gauss, 3))
    lam = np.zeros((3, 3))
    jac = 0.5 * l_ele
    for xi, w in zip(pts, wts):
        lag = _lagrange3(xi)
        lam += w * jac * np.outer(lag, lag)
    return lam


def mcs_axial_force(dofs: ElementDofs, material: Material, n_gauss: int = N_GAUSS_ELEMENT):
    """Assumed-strain axial residual and stiffness of one element.

    The strain field is replaced by its quadratic re-interpolation
    through the three collocation points before entering the axial
    energy, which decouples the axial and bending responses of slender
    elements.
    """
    x = dofs.nodal_matrix
    ea = material.E * material.A
    eps, b, rows = _axial_collocation(x, dofs.l_ele)
    lam = _mcs_coupling(dofs.l_ele, n_gauss)

    force = ea * b.T @ (lam @ eps)
    stiffness = ea * b.T @ lam @ b
    lam_eps = lam @ eps
    for k, (w1, r_s, nrm) in enumerate(rows):
        proj = (np.eye(3) - np.outer(r_s, r_s) / nrm**2) / nrm
        stiffness += ea * lam_eps[k] * weight_outer_block(w1, w1, proj)
    return force, stiffness


def _standard_terms(dofs: ElementDofs, material: Material, n_gauss: int,
                    include_axial: bool, want_stiffness: bool):
    """Shared Gauss loop of the basic (non assumed-strain) element."""
    x = dofs.nodal_matrix
    jac = dofs.jacobian
    ea = material.E * material.A if include_axial else 0.0
    ei = material.E * material.I
    pts, wts = gauss_rule(n_gauss)
    force = np.zeros(12)
    stiffness = np.zeros((12, 12)) if want_stiffness else None
    for xi, w in zip(pts, wts):
        _, w1, w2 = _arc_weight_rows(xi, dofs.l_ele)
        r_s = x.T @ w1
        r_ss = x.T @ w2
        t1, t2, t3, _ = element_vectors(r_s, r_ss)
        fac = w * jac
        force += fac * (np.outer(w1, ea * t1 + ei * t2) + np.outer(w2, ei * t3)).ravel()
        if want_stiffness:
            a1, a2a, a2b, a3a, a3b, _ = element_gradients(r_s, r_ss)
            stiffness += fac * (
                weight_outer_block(w1, w1, ea * a1 + ei * a2a)
                + weight_outer_block(w1, w2, ei * a2b)
                + weight_outer_block(w2, w1, ei * a3a)
                + weight_outer_block(w2, w2, ei * a3b)
            )
    return force, stiffness


def internal_force_and_stiffness(dofs: ElementDofs, material: Material,
                                 mcs: bool = True, n_gauss: int = N_GAUSS_ELEMENT):
    """Residual vector (12,) and tangent stiffness (12, 12) of one element."""
    force, stiffness = _standard_terms(
        dofs, material, n_gauss, include_axial=not mcs, want_stiffness=True
    )
    if mcs:
        ax_f, ax_k = mcs_axial_force(dofs, material, n_gauss)
        force = force + ax_f
        stiffness = stiffness + ax_k
    return force, stiffness


def internal_force(dofs: ElementDofs, material: Material, mcs: bool = True,
                   n_gauss: int = N_GAUSS_ELEMENT) -> np.ndarray:
    force, _ = _standard_terms(
        dofs, material, n_gauss, include_axial=not mcs, want_stiffness=False
    )
    if mcs:
        ax_f, _ = mcs_axial_force(dofs, material, n_gauss)
        force = force + ax_f
    return force


def internal_stiffness(dofs: ElementDofs, material: Material, mcs: bool = True,
                       n_gauss: int = N_GAUSS_ELEMENT) -> np.ndarray:
    return internal_force_and_stiffness(dofs, material, mcs, n_gauss)[1]


def internal_energy(dofs: ElementDofs, material: Material, mcs: bool = True,
                    n_gauss: int = N_GAUSS_ELEMENT) -> float:
    """Deformation energy matching the residual (its exact gradient)."""
    x = dofs.nodal_matrix
    jac = dofs.jacobian
    ea = material.E * material.A
    ei = material.E * material.I
    pts, wts = gauss_rule(n_gauss)
    if mcs:
        eps_col, _, _ = _axial_collocation(x, dofs.l_ele)
    energy = 0.0
    for xi, w in zip(pts, wts):
        _, w1, w2 = _arc_weight_rows(xi, dofs.l_ele)
        r_s = x.T @ w1
        r_ss = x.T @ w2
        nrm = float(np.linalg.norm(r_s))
        if mcs:
            eps = float(_lagrange3(xi) @ eps_col)
        else:
            eps = nrm - 1.0
        kappa = float(np.linalg.norm(np.cross(r_s, r_ss))) / nrm**2
        energy += w * jac * 0.5 * (ea * eps**2 + ei * kappa**2)
    return energy


def mass_matrix(dofs: ElementDofs, material: Material,
                n_gauss: int = N_GAUSS_ELEMENT) -> np.ndarray:
    """Consistent translational mass matrix rho A int N^T N ds."""
    jac = dofs.jacobian
    pts, wts = gauss_rule(n_gauss)
    mass = np.zeros((12, 12))
    for xi, w in zip(pts, wts):
        w0, _, _ = _arc_weight_rows(xi, dofs.l_ele)
        mass += (w * jac * material.rho * material.A) * weight_outer_block(
            w0, w0, np.eye(3)
        )
    return mass


def _check_moment(m: np.ndarray, r_s: np.ndarray, rel_tol: float):
    nrm_m = float(np.linalg.norm(m))
    if nrm_m == 0.0:
        return
    nrm_t = float(np.linalg.norm(r_s))
    if abs(float(m @ r_s)) > rel_tol * nrm_m * nrm_t:
        raise NonPerpendicularMoment(
            "moment has a component along the centerline tangent; the beam "
            "carries no torsion degree of freedom"
        )


def external_force(dofs: ElementDofs, line_force=None, line_moment=None,
                   end_forces=None, end_moments=None,
                   n_gauss: int = N_GAUSS_ELEMENT,
                   moment_rel_tol: float = 1e-8) -> np.ndarray:
    """Consistent load vector (12,) of distributed and end loads.

    Parameters
    ----------
    line_force, line_moment : (3,) arrays or None
        Loads per undeformed length, constant over the element.
    end_forces, end_moments : dict or None
        Keys -1.0 / 1.0 select the element end, values are (3,) loads.

    Raises
    ------
    NonPerpendicularMoment
        If any moment has a component along the current tangent.
    """
    x = dofs.nodal_matrix
    jac = dofs.jacobian
    pts, wts = gauss_rule(n_gauss)
    load = np.zeros(12)
    if line_force is not None or line_moment is not None:
        for xi, w in zip(pts, wts):
            w0, w1, _ = _arc_weight_rows(xi, dofs.l_ele)
            fac = w * jac
            if line_force is not None:
                load += fac * np.outer(w0, line_force).ravel()
            if line_moment is not None:
                r_s = x.T @ w1
                _check_moment(np.asarray(line_moment, dtype=float), r_s, moment_rel_tol)
                _, _, _, t4 = element_vectors(r_s, x.T @ _arc_weight_rows(xi, dofs.l_ele)[2])
                load += fac * np.outer(w1, np.cross(line_moment, t4)).ravel()
    for xi_end, f in (end_forces or {}).items():
        w0, _, _ = _arc_weight_rows(xi_end, dofs.l_ele)
        load += np.outer(w0, f).ravel()
    for xi_end, m in (end_moments or {}).items():
        _, w1, w2 = _arc_weight_rows(xi_end, dofs.l_ele)
        r_s = x.T @ w1
        _check_moment(np.asarray(m, dtype=float), r_s, moment_rel_tol)
        _, _, _, t4 = element_vectors(r_s, x.T @ w2)
        load += np.outer(w1, np.cross(m, t4)).ravel()
    return load


def external_stiffness(dofs: ElementDofs, line_force=None, line_moment=None,
                       end_forces=None, end_moments=None,
                       n_gauss: int = N_GAUSS_ELEMENT) -> np.ndarray:
    """Derivative of :func:`external_force` with respect to the dofs.

    Only moment loads depend on the deformation (through ``t4``);
    constant forces contribute nothing.
    """
    x = dofs.nodal_matrix
    jac = dofs.jacobian
    pts, wts = gauss_rule(n_gauss)
    stiffness = np.zeros((12, 12))
    if line_moment is not None:
        skew_m = _skew(np.asarray(line_moment, dtype=float))
        for xi, w in zip(pts, wts):
            _, w1, w2 = _arc_weight_rows(xi, dofs.l_ele)
            r_s = x.T @ w1
            a4 = element_gradients(r_s, x.T @ w2)[5]
            stiffness += (w * jac) * np.kron(np.outer(w1, w1), skew_m @ a4)
    for xi_end, m in (end_moments or {}).items():
        _, w1, w2 = _arc_weight_rows(xi_end, dofs.l_ele)
        r_s = x.T @ w1
        a4 = element_gradients(r_s, x.T @ w2)[5]
        stiffness += np.kron(np.outer(w1, w1), _skew(np.asarray(m, dtype=float)) @ a4)
    return stiffness
