"""Integration intervals for line contact over a slave element.

The line-contact integrand is non-smooth in the slave coordinate
wherever the foot point on the master crosses a master element
boundary or leaves the master beam altogether.  Gauss quadrature over
such kinks converges slowly, so the slave parameter range [-1, 1] is
partitioned into a base grid of equal intervals plus extra cuts at the
non-smooth locations.  Those cut positions depend on the deformation;
they carry a linearization chain so the global tangent stays
consistent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["SegmentationPoint", "Boundary", "Interval", "build_intervals"]

#: Cuts closer than this to an existing boundary are dropped.
MERGE_TOL = 1e-9


@dataclass(frozen=True)
class SegmentationPoint:
    """A deformation-dependent cut of the slave parameter range.

    ``master`` indexes the master element whose end (``eta_end`` is -1
    or +1) projects onto the slave at ``xi``.  ``chain`` maps element
    keys (-1 for the slave element, otherwise the master index) to the
    12-vector d xi / d q of that element's degrees of freedom.
    """

    xi: float
    master: int
    eta_end: int
    chain: dict = field(compare=False, repr=False, default=None)


@dataclass(frozen=True)
class Boundary:
    """An interval bound; ``seg`` is None for fixed base-grid cuts."""

    xi: float
    seg: SegmentationPoint | None = None

    @property
    def movable(self) -> bool:
        return self.seg is not None


@dataclass(frozen=True)
class Interval:
    lo: Boundary
    hi: Boundary

    @property
    def span(self) -> float:
        return self.hi.xi - self.lo.xi


def build_intervals(n_base: int, seg_points=(), merge_tol: float = MERGE_TOL):
    """Partition [-1, 1] into base intervals plus segmentation cuts.

    Returns a list of :class:`Interval` in ascending order whose union
    is exactly [-1, 1].  Segmentation points outside (-1, 1) or within
    ``merge_tol`` of an existing boundary are ignored (a cut that
    coincides with a fixed one adds nothing; dropping its chain is
    consistent up to a set of measure zero).
    """
    if n_base < 1:
        raise ValueError("need at least one base interval")
    bounds = [Boundary(xi) for xi in np.linspace(-1.0, 1.0, n_base + 1)]
    for seg in sorted(seg_points, key=lambda s: s.xi):
        if not (-1.0 + merge_tol < seg.xi < 1.0 - merge_tol):
            continue
        if any(abs(b.xi - seg.xi) < merge_tol for b in bounds):
            continue
        bounds.append(Boundary(seg.xi, seg))
    bounds.sort(key=lambda b: b.xi)
    return [Interval(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
