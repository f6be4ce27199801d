"""Shared fixtures and factories for the test suite."""

import numpy as np
import pytest

from beamsim.geometry import ElementDofs


def random_unit_vector(rng):
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_element(rng, l_ele=None, bend=0.3, stretch=0.1, origin=None,
                   direction=None):
    """A moderately curved, moderately stretched element.

    Starts from a straight element of length ``l_ele`` along
    ``direction`` and perturbs positions and tangents by fractions of
    the length, keeping the tangent norms within ``1 +- stretch``.
    """
    if l_ele is None:
        l_ele = float(rng.uniform(0.5, 2.0))
    if direction is None:
        direction = random_unit_vector(rng)
    if origin is None:
        origin = rng.uniform(-1.0, 1.0, size=3)
    d1 = np.asarray(origin, dtype=float)
    d2 = d1 + l_ele * direction + bend * l_ele * 0.2 * rng.normal(size=3)
    t1 = direction + bend * rng.normal(size=3)
    t2 = direction + bend * rng.normal(size=3)
    t1 *= (1.0 + stretch * rng.uniform(-1.0, 1.0)) / np.linalg.norm(t1)
    t2 *= (1.0 + stretch * rng.uniform(-1.0, 1.0)) / np.linalg.norm(t2)
    return ElementDofs(d1=d1, t1=t1, d2=d2, t2=t2, l_ele=l_ele)


def crossing_pair(rng, gap=None, bend=0.2, min_angle=0.5):
    """Two mildly curved elements crossing near their midpoints.

    The centerline distance has an interior stationary point close to
    both element centers, separated roughly by ``gap``.
    """
    u1 = random_unit_vector(rng)
    u2 = random_unit_vector(rng)
    u2 = u2 - (u2 @ u1) * u1
    while np.linalg.norm(u2) < np.sin(min_angle):
        u2 = random_unit_vector(rng)
        u2 = u2 - (u2 @ u1) * u1
    u2 = u2 / np.linalg.norm(u2)
    mix = rng.uniform(0.0, np.cos(min_angle))
    u2 = u2 * np.sqrt(1.0 - mix**2) + u1 * mix
    normal = np.cross(u1, u2)
    normal = normal / np.linalg.norm(normal)
    if gap is None:
        gap = rng.uniform(0.1, 0.4)
    mid = 0.5 * rng.normal(size=3)

    def bent(center, direction):
        l_ele = float(rng.uniform(0.8, 1.5))
        wobble1 = bend * rng.normal(size=3)
        wobble2 = bend * rng.normal(size=3)
        return ElementDofs(
            d1=center - 0.5 * l_ele * direction,
            t1=direction + wobble1 - (wobble1 @ direction) * direction,
            d2=center + 0.5 * l_ele * direction,
            t2=direction + wobble2 - (wobble2 @ direction) * direction,
            l_ele=l_ele,
        )

    return bent(mid, u1), bent(mid + gap * normal, u2)


def fd_gradient(func, q, h=1e-7):
    """Central finite-difference gradient of a scalar function of (n,) q."""
    q = np.asarray(q, dtype=float)
    grad = np.zeros_like(q)
    for i in range(q.size):
        step = h * (1.0 + abs(q[i]))
        qp, qm = q.copy(), q.copy()
        qp[i] += step
        qm[i] -= step
        grad[i] = (func(qp) - func(qm)) / (2.0 * step)
    return grad


def fd_jacobian(func, q, h=1e-7):
    """Central finite-difference Jacobian of a vector function of (n,) q."""
    q = np.asarray(q, dtype=float)
    f0 = np.asarray(func(q))
    jac = np.zeros((f0.size, q.size))
    for i in range(q.size):
        step = h * (1.0 + abs(q[i]))
        qp, qm = q.copy(), q.copy()
        qp[i] += step
        qm[i] -= step
        jac[:, i] = (np.asarray(func(qp)) - np.asarray(func(qm))) / (2.0 * step)
    return jac


def relative_deviation(got, ref):
    """Max-norm deviation scaled by the reference magnitude."""
    got = np.asarray(got)
    ref = np.asarray(ref)
    scale = max(np.abs(ref).max(), 1e-30)
    return np.abs(got - ref).max() / scale


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
