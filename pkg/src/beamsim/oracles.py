"""Analytical reference solutions and error metrics.

The references are independent of the discretization: a two-strand
helix whose penalty stiffness follows from a one-dimensional energy
balance, and the constant-gap state of a uniformly pressed patch.
The metrics compare a finite element state against such references
(normalized L2 centerline error, mean relative gap deviation) or
against numerical differentiation (tangent consistency).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assembly_solver import system_matrix
from .geometry import evaluate

__all__ = [
    "InvalidGeometry", "EmptyActiveSet", "HelixReference",
    "helix_reference", "helix_contact_angle", "patch_reference",
    "patch_error_metric", "l2_error", "FDCheckReport", "fd_tangent_check",
]


class InvalidGeometry(Exception):
    """The requested helix cannot close (winding radius too large)."""


class EmptyActiveSet(Exception):
    """A gap statistic was requested but no contact is active."""


def helix_contact_angle(r: float, h: float) -> float:
    """Angle between the two strand tangents at closest approach.

    The strands of a two-start helix of winding radius ``r`` and rise
    ``h`` per unit angle meet diametrically opposed at equal height;
    their tangents enclose ``acos((h^2 - r^2) / (h^2 + r^2))``.
    """
    if r <= 0.0 or h <= 0.0:
        raise InvalidGeometry("need positive winding radius and rise")
    return math.acos((h**2 - r**2) / (h**2 + r**2))


@dataclass(frozen=True)
class HelixReference:
    """Equilibrium double helix of two penalty-coupled beams.

    Two beams of radius ``R`` and length ``length``, pre-stretched by
    ``eps_axial`` and wound around a common axis by one full turn,
    settle at winding radius ``r_helix = R - |g0| / 2`` when the
    linear penalty stiffness equals ``epsilon_penalty``.  The rise of
    the strands is ``h`` per unit winding angle, so the ends travel
    ``u = 2 pi h - length`` along the axis.
    """

    R: float
    length: float
    E: float
    g0: float
    eps_axial: float
    A: float
    I: float
    r_helix: float
    h: float
    u: float
    curvature: float
    epsilon_penalty: float

    @property
    def deformed_length(self) -> float:
        return (1.0 + self.eps_axial) * self.length

    @property
    def geometric_curvature(self) -> float:
        """Inverse bending radius of the deformed strand."""
        return self.r_helix / (self.r_helix**2 + self.h**2)

    @property
    def curvature_ratio(self) -> float:
        """mu = R times the geometric curvature."""
        return self.R * self.geometric_curvature

    @property
    def contact_angle(self) -> float:
        return helix_contact_angle(self.r_helix, self.h)

    def centerline(self, tau, phase: float = 0.0) -> np.ndarray:
        """Strand point at arc-length fraction ``tau`` in [0, 1].

        The strand winds counterclockwise about the z axis starting at
        angle ``phase``, rising from z = 0 to z = 2 pi h.  The second
        strand is the same curve with ``phase`` shifted by pi.
        """
        phi = 2.0 * np.pi * np.asarray(tau, dtype=float)
        return np.stack([
            self.r_helix * np.cos(phi + phase),
            self.r_helix * np.sin(phi + phase),
            self.h * phi,
        ], axis=-1)

    def tangent(self, tau, phase: float = 0.0) -> np.ndarray:
        """Derivative with respect to the undeformed arc length."""
        phi = 2.0 * np.pi * np.asarray(tau, dtype=float)
        scale = 2.0 * np.pi / self.length
        return scale * np.stack([
            -self.r_helix * np.sin(phi + phase),
            self.r_helix * np.cos(phi + phase),
            self.h * np.ones_like(phi),
        ], axis=-1)

    def equilibrium_residual(self) -> float:
        """Relative force imbalance of the stored penalty stiffness.

        Stationarity of the energy per undeformed length
        ``2 (EA eps^2 + EI kappa^2) / 2 + eps_c g^2 / 2`` with respect
        to the winding radius at fixed rise; uses derivative formulas
        that do not enter the stiffness expression itself.
        """
        r, h, length = self.r_helix, self.h, self.length
        chord = math.hypot(r, h)
        eps = 2.0 * np.pi * chord / length - 1.0
        deps = 2.0 * np.pi * r / (length * chord)
        kappa = (1.0 + eps) * r / chord**2
        dkappa = deps * r / chord**2 + (1.0 + eps) * (h**2 - r**2) / chord**4
        gap = 2.0 * (r - self.R)
        elastic = 2.0 * (self.E * self.A * eps * deps
                         + self.E * self.I * kappa * dkappa)
        contact = 2.0 * self.epsilon_penalty * gap
        scale = max(abs(elastic), abs(contact))
        return abs(elastic + contact) / scale


def helix_reference(R: float, l: float, E: float, g0: float,
                    eps_axial: float) -> HelixReference:
    """Closed-form double-helix equilibrium for given penetration.

    Parameters
    ----------
    R : beam cross-section radius
    l : undeformed beam length (one full winding turn)
    E : Young's modulus (circular cross section)
    g0 : prescribed gap at the contact line, negative for penetration
    eps_axial : axial pre-stretch of the strands

    Raises
    ------
    InvalidGeometry
        If the winding radius reaches the deformed quarter-turn radius
        so no positive rise exists.
    """
    if R <= 0.0 or l <= 0.0 or E <= 0.0:
        raise InvalidGeometry("R, l, E must be positive")
    area = np.pi * R**2
    inertia = np.pi * R**4 / 4.0
    r = R - abs(g0) / 2.0
    if r <= 0.0:
        raise InvalidGeometry("penetration swallows the whole radius")
    c = (1.0 + eps_axial) * l / (2.0 * np.pi)
    if r**2 >= c**2:
        raise InvalidGeometry(
            f"winding radius {r:.3e} exceeds the turn radius {c:.3e}")
    h = math.sqrt(c**2 - r**2)
    chord2 = r**2 + h**2
    curvature = (1.0 + eps_axial) * r / chord2
    epsilon_penalty = -(1.0 + eps_axial) * r / (chord2 * g0) * (
        E * area * eps_axial
        + E * inertia * (1.0 + eps_axial) * h**2 / chord2**2)
    return HelixReference(
        R=R, length=l, E=E, g0=g0, eps_axial=eps_axial, A=area, I=inertia,
        r_helix=r, h=h, u=2.0 * np.pi * h - l, curvature=curvature,
        epsilon_penalty=epsilon_penalty)


def patch_reference(p: float, epsilon: float) -> float:
    """Uniform gap of a straight patch pressed with line load ``p``.

    A linear penalty transmits ``-epsilon * g`` per unit length, so a
    constant applied pressure settles at ``g = -p / epsilon``.
    """
    if epsilon <= 0.0:
        raise ValueError("penalty stiffness must be positive")
    return -p / epsilon


def patch_error_metric(gaps, g_ref: float) -> float:
    """Mean gap deviation relative to the reference gap.

    ``sum(g_i - g_ref) / (n * g_ref)`` over the active points; signed,
    so systematic over- and under-penetration keep their direction.
    """
    gaps = np.asarray(gaps, dtype=float)
    if gaps.size == 0:
        raise EmptyActiveSet("no active contact points to compare")
    if g_ref == 0.0:
        raise ValueError("reference gap must be nonzero")
    return float(np.sum(gaps - g_ref) / (gaps.size * g_ref))


def l2_error(mesh, q, beam: int, reference, u_max: float,
             n_gauss: int = 10) -> float:
    """Normalized L2 distance of one beam to a reference centerline.

    ``reference`` maps the undeformed arc-length fraction in [0, 1] to
    a point, so numerical and reference curves are paired at equal
    fractions.  The squared distance is integrated with ``n_gauss``
    Gauss points per element and normalized as
    ``sqrt(integral / length) / u_max``.
    """
    if u_max <= 0.0:
        raise ValueError("need a positive displacement scale")
    from .beam_element import gauss_rule

    beam_obj = mesh.beams[beam]
    integral = 0.0
    pts, wts = gauss_rule(n_gauss)
    for element in beam_obj.elements:
        dofs = mesh.element_dofs(q, element)
        jac = dofs.jacobian
        for xi, w in zip(pts, wts):
            tau = mesh.arc_coordinate(element, xi) / beam_obj.length
            diff = evaluate(dofs, xi).r - reference(tau)
            integral += w * jac * float(diff @ diff)
    return math.sqrt(integral / beam_obj.length) / u_max


@dataclass(frozen=True)
class FDCheckReport:
    """Worst tangent entry of an analytic/numeric comparison."""

    max_deviation: float
    row: int
    col: int
    analytic: float
    numeric: float

    def __str__(self):
        return (f"worst relative deviation {self.max_deviation:.3e} at "
                f"({self.row}, {self.col}): analytic {self.analytic:.6e}, "
                f"numeric {self.numeric:.6e}")


def fd_tangent_check(system, q, h: float = 1e-7) -> FDCheckReport:
    """Compare an assembled tangent with central differences.

    ``system`` maps a state vector to an ``AssembledSystem``.  Each
    state entry is perturbed by ``h * (1 + |q_i|)``; deviations are
    scaled by the largest analytic entry.
    """
    q = np.asarray(q, dtype=float)
    analytic = system_matrix(system(q).blocks, q.size,
                             dense_threshold=q.size + 1)
    numeric = np.empty_like(analytic)
    for j in range(q.size):
        step = h * (1.0 + abs(q[j]))
        plus = q.copy()
        plus[j] += step
        minus = q.copy()
        minus[j] -= step
        numeric[:, j] = (system(plus).residual
                         - system(minus).residual) / (2.0 * step)
    scale = max(np.max(np.abs(analytic)), 1e-30)
    deviation = np.abs(analytic - numeric) / scale
    row, col = np.unravel_index(np.argmax(deviation), deviation.shape)
    return FDCheckReport(
        max_deviation=float(deviation[row, col]), row=int(row),
        col=int(col), analytic=float(analytic[row, col]),
        numeric=float(numeric[row, col]))
