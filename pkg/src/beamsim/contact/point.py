"""Discrete point contact between two beam elements.

A single force pair acts at the closest-point coordinates
(xi_c, eta_c) along the connecting normal ``n = (r1 - r2) / |r1 - r2|``
with magnitude ``f(g)`` from a penalty law, ``g`` being the surface
gap (centerline distance minus both radii).  The consistent tangent
accounts for the movement of the closest points with the nodal degrees
of freedom; the coordinate sensitivities depend on whether each
coordinate is a free projection unknown or pinned to an element end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..geometry import ElementDofs, hermite_weights, weight_outer_block
from ..projection import (
    NoConvergence,
    ProjectionResult,
    SingularJacobian,
    TOL_DET,
    bilateral_cpp,
    contact_angle,
)
from .penalty import PenaltyLaw, penalty_force

__all__ = ["PairBlocks", "contact_blocks", "point_contact"]


@dataclass
class PairBlocks:
    """Residual and tangent contribution of one contact force pair.

    ``r1``/``r2`` are the 12-dof residual blocks of the slave and
    master element; ``k`` is the coupled (24, 24) tangent in the order
    [slave dofs, master dofs].  Inactive pairs carry zero blocks but
    keep the kinematic diagnostics.
    """

    r1: np.ndarray
    r2: np.ndarray
    k: np.ndarray
    xi: float
    eta: float
    gap: float
    force: float
    normal: np.ndarray
    angle: float
    active: bool
    gap_derivative: np.ndarray = field(default=None, repr=False)
    #: Total residual derivative with respect to the slave coordinate,
    #: following the master foot point; set for active pairs with a
    #: pinned slave and a free master coordinate (line contact needs it
    #: to linearize moving integration boundaries).
    dres_dxi: np.ndarray = field(default=None, repr=False)


def _point_rows(dofs: ElementDofs, coord: float):
    w, w_d, w_dd = hermite_weights(coord, dofs.l_ele)
    x = dofs.nodal_matrix
    return w, w_d, x.T @ w, x.T @ w_d, x.T @ w_dd


def _outer12(weights: np.ndarray, vec: np.ndarray) -> np.ndarray:
    return np.outer(weights, vec).ravel()


def contact_blocks(dofs1: ElementDofs, dofs2: ElementDofs, xi: float, eta: float,
                   law: PenaltyLaw, radius_sum: float,
                   xi_free: bool = True, eta_free: bool = True,
                   scale: float = 1.0) -> PairBlocks:
    """Force blocks and consistent tangent at fixed contact coordinates.

    ``xi_free`` / ``eta_free`` select which closest-point coordinates
    follow the deformation through their orthogonality conditions; a
    pinned coordinate (element endpoint) has zero sensitivity.
    ``scale`` multiplies force and tangent (Gauss weight and Jacobian
    for line contact, 1 for discrete point contact).
    """
    w1v, w1d, r1, r1x, r1xx = _point_rows(dofs1, xi)
    w2v, w2d, r2, r2e, r2ee = _point_rows(dofs2, eta)
    diff = r1 - r2
    dist = float(np.linalg.norm(diff))
    gap = dist - radius_sum
    force, dforce = penalty_force(law, gap)
    normal = diff / dist
    angle = contact_angle(r1x, r2e)
    n1n = _outer12(w1v, normal)
    n2n = _outer12(w2v, normal)
    gap_derivative = np.concatenate([n1n, -n2n])

    if force <= 0.0 and dforce >= 0.0:
        zeros = np.zeros(12)
        return PairBlocks(
            r1=zeros, r2=zeros.copy(), k=np.zeros((24, 24)), xi=xi, eta=eta,
            gap=gap, force=0.0, normal=normal, angle=angle, active=False,
            gap_derivative=gap_derivative,
        )
    # At exact touch the linear law carries zero force but full slope;
    # keeping the pair engaged there gives Newton the one-sided tangent
    # of the contact branch, so beams resting at zero gap do not float.

    force *= scale
    dforce *= scale
    res1 = -force * n1n
    res2 = force * n2n

    proj = (np.eye(3) - np.outer(normal, normal)) / dist
    k = np.empty((24, 24))
    k[:12, :12] = -dforce * np.outer(n1n, n1n) - force * weight_outer_block(w1v, w1v, proj)
    k[:12, 12:] = dforce * np.outer(n1n, n2n) + force * weight_outer_block(w1v, w2v, proj)
    k[12:, :12] = dforce * np.outer(n2n, n1n) + force * weight_outer_block(w2v, w1v, proj)
    k[12:, 12:] = -dforce * np.outer(n2n, n2n) - force * weight_outer_block(w2v, w2v, proj)

    dres_dxi = None
    if xi_free or eta_free:
        g_xi = float(normal @ r1x)
        g_eta = -float(normal @ r2e)
        n_xi = proj @ r1x
        n_eta = -(proj @ r2e)
        dres1_dxi = -dforce * g_xi * n1n - force * (_outer12(w1d, normal) + _outer12(w1v, n_xi))
        dres1_deta = -dforce * g_eta * n1n - force * _outer12(w1v, n_eta)
        dres2_dxi = dforce * g_xi * n2n + force * _outer12(w2v, n_xi)
        dres2_deta = dforce * g_eta * n2n + force * (_outer12(w2d, normal) + _outer12(w2v, n_eta))

        dxi_dq, deta_dq = _coordinate_sensitivities(
            w1v, w1d, w2v, w2d, diff, r1x, r1xx, r2e, r2ee, xi_free, eta_free
        )
        if dxi_dq is not None:
            k += np.outer(np.concatenate([dres1_dxi, dres2_dxi]), dxi_dq)
        if deta_dq is not None:
            k += np.outer(np.concatenate([dres1_deta, dres2_deta]), deta_dq)
        if eta_free and not xi_free:
            # Moving the pinned slave coordinate drags the foot point
            # along the master: d eta / d xi = -p2,xi / p2,eta.
            deta_dxi = -float(r1x @ r2e) / (
                -float(r2e @ r2e) + float(diff @ r2ee))
            dres_dxi = (np.concatenate([dres1_dxi, dres2_dxi])
                        + deta_dxi * np.concatenate([dres1_deta, dres2_deta]))

    return PairBlocks(
        r1=res1, r2=res2, k=k, xi=xi, eta=eta, gap=gap, force=force,
        normal=normal, angle=angle, active=True, gap_derivative=gap_derivative,
        dres_dxi=dres_dxi,
    )


def _coordinate_sensitivities(w1v, w1d, w2v, w2d, diff, r1x, r1xx, r2e, r2ee,
                              xi_free, eta_free):
    """d xi_c / d q and d eta_c / d q (each (24,) or None if pinned)."""
    scale1 = float(r1x @ r1x)
    scale2 = float(r2e @ r2e)
    a11 = scale1 + float(diff @ r1xx)
    a22 = -scale2 + float(diff @ r2ee)
    if xi_free:
        p1_q = np.concatenate([
            _outer12(w1d, diff) + _outer12(w1v, r1x), -_outer12(w2v, r1x)
        ])
    if eta_free:
        p2_q = np.concatenate([
            _outer12(w1v, r2e), _outer12(w2d, diff) - _outer12(w2v, r2e)
        ])
    if xi_free and eta_free:
        a12 = -float(r1x @ r2e)
        a21 = float(r1x @ r2e)
        det = a11 * a22 - a12 * a21
        if abs(det) < TOL_DET * scale1 * scale2:
            raise SingularJacobian(
                "projection system singular while linearizing point contact"
            )
        dxi = (-a22 * p1_q + a12 * p2_q) / det
        deta = (a21 * p1_q - a11 * p2_q) / det
        return dxi, deta
    if eta_free:
        if abs(a22) < TOL_DET * scale2:
            raise SingularJacobian(
                "orthogonality condition degenerate while linearizing contact"
            )
        return None, -p2_q / a22
    if xi_free:
        if abs(a11) < TOL_DET * scale1:
            raise SingularJacobian(
                "orthogonality condition degenerate while linearizing contact"
            )
        return -p1_q / a11, None
    return None, None


def point_contact(dofs1: ElementDofs, dofs2: ElementDofs, law: PenaltyLaw,
                  radius1: float, radius2: float,
                  projection: ProjectionResult | None = None) -> PairBlocks:
    """Contact force pair at the bilateral closest points of two elements.

    Raises
    ------
    NoConvergence, SingularJacobian
        If the closest-point projection fails (e.g. parallel straight
        centerlines, where the point formulation is not applicable).
    """
    proj = projection if projection is not None else bilateral_cpp(dofs1, dofs2)
    if proj.singular:
        raise SingularJacobian(
            "no unique closest-point pair (parallel or near-parallel centerlines)"
        )
    if not proj.converged:
        raise NoConvergence("closest-point projection did not converge")
    if not proj.in_range:
        # The stationary pair lies beyond the element ends: no discrete
        # force from this element pair.
        w1v, w1d, r1, r1x, _ = _point_rows(dofs1, max(-1.0, min(1.0, proj.xi)))
        w2v, w2d, r2, r2e, _ = _point_rows(dofs2, max(-1.0, min(1.0, proj.eta)))
        zeros = np.zeros(12)
        return PairBlocks(
            r1=zeros, r2=zeros.copy(), k=np.zeros((24, 24)),
            xi=proj.xi, eta=proj.eta, gap=proj.distance - radius1 - radius2,
            force=0.0, normal=(r1 - r2) / max(proj.distance, 1e-300),
            angle=contact_angle(r1x, r2e), active=False,
        )
    return contact_blocks(
        dofs1, dofs2, proj.xi, proj.eta, law, radius1 + radius2,
        xi_free=True, eta_free=True,
    )
