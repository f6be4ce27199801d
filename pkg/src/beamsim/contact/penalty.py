"""Penalty force laws mapping a gap to a repulsive contact force.

The force is positive in compression and acts along the connecting
normal between the centerlines.  Two laws are provided: a plain linear
law with a kink at zero gap, and a quadratically regularized law that
starts acting at a small positive gap ``g_bar`` and reaches the linear
slope at zero gap with a C1-continuous transition.  The regularized law
keeps integrands of line contact smooth where the gap changes sign.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["PenaltyLaw", "penalty_force"]


@dataclass(frozen=True)
class PenaltyLaw:
    """Penalty parameters.

    ``epsilon`` has units force/length^2 for line contact and
    force/length for point contact.  ``g_bar`` is the regularization
    range of the quadratic law; the transition force at zero gap is
    ``f_bar = epsilon * g_bar / 2``.
    """

    kind: str
    epsilon: float
    g_bar: float = 0.0

    def __post_init__(self):
        if self.kind not in ("linear", "quadratic"):
            raise ValueError(f"unknown penalty law kind {self.kind!r}")
        if self.epsilon <= 0.0:
            raise ValueError("penalty parameter must be positive")
        if self.kind == "quadratic" and self.g_bar <= 0.0:
            raise ValueError("quadratic law needs a positive regularization range")

    @property
    def f_bar(self) -> float:
        return 0.5 * self.epsilon * self.g_bar

    @property
    def activation_gap(self) -> float:
        """Largest gap at which the law produces a force."""
        return self.g_bar if self.kind == "quadratic" else 0.0

    def force(self, gap: float):
        return penalty_force(self, gap)


def penalty_force(law: PenaltyLaw, gap: float):
    """Force magnitude and its gap derivative ``(f, df/dg)``."""
    eps = law.epsilon
    if law.kind == "linear":
        if gap <= 0.0:
            return -eps * gap, -eps
        return 0.0, 0.0
    g_bar = law.g_bar
    if gap <= 0.0:
        return law.f_bar - eps * gap, -eps
    if gap <= g_bar:
        quad = 0.5 * eps / g_bar
        return quad * gap * gap - eps * gap + law.f_bar, 2.0 * quad * gap - eps
    return 0.0, 0.0
