"""Line contact of one slave element against a master beam.

The distributed contact force is integrated with Gauss quadrature
along the slave element.  Each Gauss point is tied to its
perpendicular foot point on the master beam (Gauss-point-to-segment);
the penalty force density acts along the connecting normal.  The slave
parameter range is segmented at the deformation-dependent locations
where the foot point crosses a master element boundary or falls off a
master beam end, and those segmentation points are linearized
consistently, so one Gauss point couples up to three elements: the
slave, the master element under its foot, and the master element
whose end defines a moving integration boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..beam_element import gauss_rule
from ..geometry import (ElementDofs, evaluate, hermite_weight_table,
                        hermite_weights)
from ..projection import plane_curve_cuts, project_points_to_curve
from .intervals import Interval, SegmentationPoint, build_intervals
from .penalty import PenaltyLaw
from .point import contact_blocks

__all__ = [
    "SLAVE",
    "GaussPointState",
    "LineContactBlocks",
    "segmentation_points",
    "line_contact",
]

#: Dictionary key of the slave element in residual/tangent maps.
SLAVE = -1

#: Below this alignment of slave tangent and master end tangent the
#: boundary crossing is grazing and its location is not well defined.
TOL_TRANSVERSAL = 1e-8

#: Segmentation points this close to the element ends are dropped; the
#: end itself already bounds the integration.
TOL_INSIDE = 1e-9


@dataclass
class GaussPointState:
    """Diagnostics of one slave Gauss point.

    ``force`` is the penalty force density (force per unit reference
    slave length); ``scale`` is the quadrature weight times both
    Jacobians that multiplies the density in the residual.
    """

    xi: float
    master: int
    eta: float
    gap: float
    force: float
    angle: float
    scale: float


@dataclass
class LineContactBlocks:
    """Accumulated residual and tangent of one slave/master-beam pair.

    ``r`` maps element keys (SLAVE or a master element index) to
    12-vectors; ``k`` maps key pairs to (12, 12) blocks.
    """

    r: dict = field(default_factory=dict)
    k: dict = field(default_factory=dict)
    gauss: list = field(default_factory=list)
    intervals: list = field(default_factory=list)

    def add_r(self, key, vec):
        if key in self.r:
            self.r[key] = self.r[key] + vec
        else:
            self.r[key] = np.array(vec)

    def add_k(self, row_key, col_key, block):
        pair = (row_key, col_key)
        if pair in self.k:
            self.k[pair] = self.k[pair] + block
        else:
            self.k[pair] = np.array(block)

    @property
    def active(self) -> bool:
        return bool(self.r)


def segmentation_points(dofs_slave: ElementDofs, masters, active=None,
                        inside_tol: float = TOL_INSIDE):
    """Slave coordinates where the master foot point crosses an end.

    Every master element end (interior nodes once, both beam ends) is
    projected onto the slave along the plane perpendicular to the
    master tangent at that end.  A converged projection strictly
    inside the slave range yields a segmentation point together with
    its linearization chain d xi_B / d q with respect to the slave and
    the owning master element.  ``active`` restricts the candidate
    master elements (broad-phase subset); ends between two active
    elements are visited once.
    """
    if active is None:
        active = range(len(masters))
    index = sorted(active)
    in_set = set(index)
    ends = []
    for m in index:
        if m - 1 not in in_set:
            ends.append((m, -1))
        ends.append((m, 1))
    if not ends:
        return []
    cut_points = [evaluate(masters[m], float(eta_end)) for m, eta_end in ends]
    xi_all, conv_all, _, _, _ = plane_curve_cuts(
        dofs_slave.nodal_matrix, dofs_slave.l_ele,
        [pt.r for pt in cut_points], [pt.r_xi for pt in cut_points])
    points = []
    for (m, eta_end), pt2, xi_b, ok in zip(ends, cut_points, xi_all, conv_all):
        if not ok or abs(xi_b) >= 1.0 - inside_tol:
            continue
        xi_b = float(xi_b)
        pt1 = evaluate(dofs_slave, xi_b)
        diff = pt1.r - pt2.r
        r1x = pt1.r_xi
        r2e = pt2.r_xi
        p2_xi = float(r2e @ r1x)
        if abs(p2_xi) < TOL_TRANSVERSAL * np.linalg.norm(r1x) * np.linalg.norm(r2e):
            continue
        w1v, _, _ = hermite_weights(xi_b, dofs_slave.l_ele)
        w2v, w2d, _ = hermite_weights(float(eta_end), masters[m].l_ele)
        chain = {
            SLAVE: -np.outer(w1v, r2e).ravel() / p2_xi,
            m: -(np.outer(w2d, diff) - np.outer(w2v, r2e)).ravel() / p2_xi,
        }
        points.append(SegmentationPoint(xi=xi_b, master=m, eta_end=eta_end,
                                        chain=chain))
    return points


def _assign_feet(points, masters, active=None):
    """Closest in-range perpendicular foot among the master elements.

    Batched over the slave points; entries are (master index, eta,
    distance) or None where no master offers an admissible foot.
    """
    best = [None] * len(points)
    index = range(len(masters)) if active is None else active
    for m in index:
        master = masters[m]
        eta, conv, dist, _, _ = project_points_to_curve(
            points, master.nodal_matrix, master.l_ele)
        for i in range(len(best)):
            if not conv[i] or abs(eta[i]) > 1.0:
                continue
            if best[i] is None or dist[i] < best[i][2]:
                best[i] = (m, float(eta[i]), float(dist[i]))
    return best


def line_contact(dofs_slave: ElementDofs, masters, law: PenaltyLaw,
                 radius_slave: float, radius_master: float,
                 n_intervals: int = 1, n_gauss: int = 5,
                 active=None, segmentation: bool = True) -> LineContactBlocks:
    """Distributed contact of a slave element with one master beam.

    ``masters`` lists the master elements of a single beam in arc
    order; ``active`` optionally restricts the foot-point search to a
    broad-phase subset of them.  ``n_intervals`` equal base intervals
    per slave element are each integrated with ``n_gauss`` Gauss
    points after inserting the segmentation cuts.  With
    ``segmentation`` off the base grid integrates blindly across any
    foot-point discontinuities (for comparison studies).
    """
    if active is not None:
        active = sorted(active)
        if not active:
            return LineContactBlocks(intervals=build_intervals(n_intervals))
    segs = segmentation_points(dofs_slave, masters, active) if segmentation else []
    intervals = build_intervals(n_intervals, segs)
    xi_bars, gauss_w = gauss_rule(n_gauss)
    out = LineContactBlocks(intervals=intervals)
    j_ele = dofs_slave.jacobian
    radius_sum = radius_slave + radius_master

    quad = [
        (itv, xi_bar, w,
         0.5 * (1.0 - xi_bar) * itv.lo.xi + 0.5 * (1.0 + xi_bar) * itv.hi.xi)
        for itv in intervals if itv.span > 0.0
        for xi_bar, w in zip(xi_bars, gauss_w)
    ]
    if not quad:
        return out
    w_slave, _, _ = hermite_weight_table(np.array([g[3] for g in quad]),
                                         dofs_slave.l_ele)
    feet = _assign_feet(w_slave @ dofs_slave.nodal_matrix, masters, active)

    for (itv, xi_bar, w, xi), foot in zip(quad, feet):
        if foot is not None:
            m, eta, _ = foot
            span = itv.span
            scale = w * j_ele * 0.5 * span
            blocks = contact_blocks(
                dofs_slave, masters[m], xi, eta, law, radius_sum,
                xi_free=False, eta_free=True, scale=scale,
            )
            out.gauss.append(GaussPointState(
                xi=xi, master=m, eta=eta, gap=blocks.gap,
                force=blocks.force / scale, angle=blocks.angle, scale=scale,
            ))
            if not blocks.active:
                continue
            out.add_r(SLAVE, blocks.r1)
            out.add_r(m, blocks.r2)
            out.add_k(SLAVE, SLAVE, blocks.k[:12, :12])
            out.add_k(SLAVE, m, blocks.k[:12, 12:])
            out.add_k(m, SLAVE, blocks.k[12:, :12])
            out.add_k(m, m, blocks.k[12:, 12:])

            lo_chain = itv.lo.seg.chain if itv.lo.movable else None
            hi_chain = itv.hi.seg.chain if itv.hi.movable else None
            if lo_chain is None and hi_chain is None:
                continue
            # The Gauss point location and the interval Jacobian both
            # depend on moving boundaries: d xi / d xi_lo = (1-xi_bar)/2,
            # d xi / d xi_hi = (1+xi_bar)/2, d log J = (d xi_hi - d xi_lo)/span.
            c_lo = 0.5 * (1.0 - xi_bar)
            c_hi = 0.5 * (1.0 + xi_bar)
            res_vec = np.concatenate([blocks.r1, blocks.r2])
            for key in set().union(lo_chain or (), hi_chain or ()):
                dxi = 0.0
                dlogj = 0.0
                if lo_chain is not None and key in lo_chain:
                    dxi = dxi + c_lo * lo_chain[key]
                    dlogj = dlogj - lo_chain[key] / span
                if hi_chain is not None and key in hi_chain:
                    dxi = dxi + c_hi * hi_chain[key]
                    dlogj = dlogj + hi_chain[key] / span
                col = np.outer(blocks.dres_dxi, dxi) + np.outer(res_vec, dlogj)
                out.add_k(SLAVE, key, col[:12])
                out.add_k(m, key, col[12:])
    return out
