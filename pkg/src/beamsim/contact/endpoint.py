"""Contact at physical beam endpoints (hemispherical caps).

Interior closest-point projections miss force transfer when the
minimal-distance pair sits at a beam end: the orthogonality residual
is nonzero there, yet the surfaces still touch.  These routines handle
the three boundary cases

* slave endpoint against a master element interior,
* slave element interior against a master endpoint,
* slave endpoint against master endpoint,

with the end cross-section capped by a hemisphere of the beam radius,
so the gap remains ``|r1 - r2| - R1 - R2``.  A case is only active when
the distance is a true boundary minimum, i.e. the distance grows when
the pinned coordinate moves back into the element interior.
"""

from __future__ import annotations

import numpy as np

from ..geometry import ElementDofs, evaluate
from ..projection import ProjectionResult, unilateral_cpp
from .penalty import PenaltyLaw
from .point import PairBlocks, contact_blocks

__all__ = [
    "boundary_minimum",
    "endpoint_to_line",
    "line_to_endpoint",
    "endpoint_to_endpoint",
    "endpoint_contact",
]

#: Signed slack on the boundary-minimum inequality; tiny negative
#: lobes from roundoff at exactly orthogonal ends must not flicker.
TOL_BOUNDARY = 1e-12


def _orthogonality_residuals(dofs1: ElementDofs, dofs2: ElementDofs,
                             xi: float, eta: float) -> tuple[float, float]:
    pt1 = evaluate(dofs1, xi)
    pt2 = evaluate(dofs2, eta)
    diff = pt1.r - pt2.r
    return float(pt1.r_xi @ diff), float(pt2.r_xi @ diff)


def boundary_minimum(dofs1: ElementDofs, dofs2: ElementDofs, xi: float, eta: float,
                     xi_end: int | None = None, eta_end: int | None = None) -> bool:
    """Whether the pinned coordinates sit at a distance minimum.

    At a pinned slave end ``xi_end`` the squared distance decreases
    into the interior unless ``xi_end * p1 <= 0`` with
    ``p1 = r1' . (r1 - r2)``; the master condition mirrors it with
    opposite sign because the difference vector enters as ``-(r1-r2)``.
    """
    p1, p2 = _orthogonality_residuals(dofs1, dofs2, xi, eta)
    scale1 = max(1.0, abs(p1))
    scale2 = max(1.0, abs(p2))
    ok = True
    if xi_end is not None:
        ok = ok and xi_end * p1 <= TOL_BOUNDARY * scale1
    if eta_end is not None:
        ok = ok and eta_end * p2 >= -TOL_BOUNDARY * scale2
    return ok


def _inactive(dofs1: ElementDofs, dofs2: ElementDofs, xi: float, eta: float,
              radius_sum: float) -> PairBlocks:
    pt1 = evaluate(dofs1, xi)
    pt2 = evaluate(dofs2, eta)
    diff = pt1.r - pt2.r
    dist = float(np.linalg.norm(diff))
    zeros = np.zeros(12)
    from ..projection import contact_angle

    return PairBlocks(
        r1=zeros, r2=zeros.copy(), k=np.zeros((24, 24)), xi=xi, eta=eta,
        gap=dist - radius_sum, force=0.0,
        normal=diff / max(dist, 1e-300),
        angle=contact_angle(pt1.r_xi, pt2.r_xi), active=False,
    )


def endpoint_to_line(dofs1: ElementDofs, xi_end: int, dofs2: ElementDofs,
                     law: PenaltyLaw, radius1: float, radius2: float,
                     projection: ProjectionResult | None = None) -> PairBlocks:
    """Slave endpoint cap against the interior of a master element."""
    radius_sum = radius1 + radius2
    proj = projection if projection is not None else unilateral_cpp(dofs1, float(xi_end), dofs2)
    if proj.singular or not proj.converged or not (-1.0 <= proj.eta <= 1.0):
        return _inactive(dofs1, dofs2, float(xi_end), np.clip(proj.eta, -1.0, 1.0), radius_sum)
    if not boundary_minimum(dofs1, dofs2, float(xi_end), proj.eta, xi_end=xi_end):
        return _inactive(dofs1, dofs2, float(xi_end), proj.eta, radius_sum)
    return contact_blocks(
        dofs1, dofs2, float(xi_end), proj.eta, law, radius_sum,
        xi_free=False, eta_free=True,
    )


def line_to_endpoint(dofs1: ElementDofs, dofs2: ElementDofs, eta_end: int,
                     law: PenaltyLaw, radius1: float, radius2: float,
                     projection: ProjectionResult | None = None) -> PairBlocks:
    """Slave element interior against a master endpoint cap.

    The projection reuses the unilateral solver with swapped roles:
    the master end point is dropped perpendicularly onto the slave
    centerline, which solves ``p1(xi, eta_end) = 0`` for ``xi``.
    """
    radius_sum = radius1 + radius2
    if projection is not None:
        proj = projection
        xi_c = proj.xi
    else:
        swapped = unilateral_cpp(dofs2, float(eta_end), dofs1)
        xi_c = swapped.eta
        proj = ProjectionResult(
            xi=xi_c, eta=float(eta_end), converged=swapped.converged,
            distance=swapped.distance, iterations=swapped.iterations,
            singular=swapped.singular,
        )
    if proj.singular or not proj.converged or not (-1.0 <= xi_c <= 1.0):
        return _inactive(dofs1, dofs2, np.clip(xi_c, -1.0, 1.0), float(eta_end), radius_sum)
    if not boundary_minimum(dofs1, dofs2, xi_c, float(eta_end), eta_end=eta_end):
        return _inactive(dofs1, dofs2, xi_c, float(eta_end), radius_sum)
    return contact_blocks(
        dofs1, dofs2, xi_c, float(eta_end), law, radius_sum,
        xi_free=True, eta_free=False,
    )


def endpoint_to_endpoint(dofs1: ElementDofs, xi_end: int, dofs2: ElementDofs,
                         eta_end: int, law: PenaltyLaw,
                         radius1: float, radius2: float) -> PairBlocks:
    """Two endpoint caps against each other (both coordinates pinned)."""
    radius_sum = radius1 + radius2
    if not boundary_minimum(dofs1, dofs2, float(xi_end), float(eta_end),
                            xi_end=xi_end, eta_end=eta_end):
        return _inactive(dofs1, dofs2, float(xi_end), float(eta_end), radius_sum)
    return contact_blocks(
        dofs1, dofs2, float(xi_end), float(eta_end), law, radius_sum,
        xi_free=False, eta_free=False,
    )


def endpoint_contact(dofs1: ElementDofs, dofs2: ElementDofs, law: PenaltyLaw,
                     radius1: float, radius2: float,
                     xi_end: int | None = None,
                     eta_end: int | None = None) -> PairBlocks:
    """Dispatch endpoint contact by which element ends are pinned.

    ``xi_end`` / ``eta_end`` take -1 or +1 for a pinned end of the
    slave / master element and None for a free interior coordinate.
    At least one end must be pinned.
    """
    if xi_end is not None and eta_end is not None:
        return endpoint_to_endpoint(dofs1, xi_end, dofs2, eta_end, law, radius1, radius2)
    if xi_end is not None:
        return endpoint_to_line(dofs1, xi_end, dofs2, law, radius1, radius2)
    if eta_end is not None:
        return line_to_endpoint(dofs1, dofs2, eta_end, law, radius1, radius2)
    raise ValueError("endpoint contact requires at least one pinned element end")
