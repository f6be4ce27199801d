"""Broad-phase contact search with control-polygon bounding boxes.

A cubic Hermite segment lies inside the convex hull of its Bezier
control points, so an axis-aligned box around those four points
bounds the centerline.  Boxes are inflated by a per-element share of
the pair search radius; overlapping boxes of elements from different
beams become narrow-phase candidates.  The search is deterministic:
pairs come out sorted with the lower beam index first (that beam acts
as the slave).
"""

from __future__ import annotations

import numpy as np

from ..geometry import ElementDofs

__all__ = ["element_hull_points", "element_aabb", "candidate_pairs"]


def element_hull_points(dofs: ElementDofs) -> np.ndarray:
    """Bezier control points of the Hermite segment, shape (4, 3)."""
    third = dofs.l_ele / 3.0
    return np.array([
        dofs.d1,
        dofs.d1 + third * dofs.t1,
        dofs.d2 - third * dofs.t2,
        dofs.d2,
    ])


def element_aabb(dofs: ElementDofs, inflate: float = 0.0) -> np.ndarray:
    """Axis-aligned bounds [[min], [max]] containing the centerline."""
    pts = element_hull_points(dofs)
    return np.array([pts.min(axis=0) - inflate, pts.max(axis=0) + inflate])


def candidate_pairs(mesh, q, radius_of_beam):
    """Element pairs of different beams with overlapping inflated boxes.

    ``radius_of_beam`` maps a beam index to that beam's half share of
    the pair search radius; boxes of a pair are jointly inflated by
    the sum of the two shares.  Returns a sorted list of element index
    pairs (slave element of the lower beam first).
    """
    n = len(mesh.elements)
    if n == 0:
        return []
    lo = np.empty((n, 3))
    hi = np.empty((n, 3))
    beam_of = np.empty(n, dtype=int)
    for e, ele in enumerate(mesh.elements):
        box = element_aabb(mesh.element_dofs(q, e), radius_of_beam(ele.beam))
        lo[e], hi[e] = box
        beam_of[e] = ele.beam

    overlap = np.logical_and(
        (lo[:, None, :] <= hi[None, :, :]).all(axis=2),
        (lo[None, :, :] <= hi[:, None, :]).all(axis=2),
    )
    different = beam_of[:, None] != beam_of[None, :]
    first, second = np.nonzero(np.triu(overlap & different, k=1))
    pairs = []
    for a, b in zip(first.tolist(), second.tolist()):
        if beam_of[a] <= beam_of[b]:
            pairs.append((a, b))
        else:
            pairs.append((b, a))
    pairs.sort()
    return pairs
