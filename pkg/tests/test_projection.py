"""Tests for the closest-point projection solvers.

Oracles:
  * analytic closest points of two skew straight lines,
  * brute-force distance grids (flat 2001 x 2001 and coarse-to-fine),
  * a one-million-sample scan along the master for the unilateral case,
  * closed-form plane/line intersections for the boundary projection.
"""

import math

import numpy as np
import pytest

from beamsim.geometry import ElementDofs
from beamsim.projection import (
    NoConvergence,
    OutOfRange,
    ProjectionResult,
    SingularJacobian,
    alpha_min,
    bilateral_cpp,
    contact_angle,
    endpoint_projection,
    max_curvature_ratio,
    orthogonality,
    unilateral_cpp,
)

from conftest import crossing_pair, random_element


def straight(origin, direction, length):
    origin = np.asarray(origin, dtype=float)
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    return ElementDofs(
        d1=origin, t1=direction,
        d2=origin + length * direction, t2=direction, l_ele=length,
    )


def eval_many(dofs, coords):
    """Vectorized centerline evaluation at an array of coordinates."""
    xi = np.asarray(coords, dtype=float)
    half_l = 0.5 * dofs.l_ele
    w = np.stack([
        0.25 * (2.0 + xi) * (1.0 - xi) ** 2,
        half_l * 0.25 * (1.0 + xi) * (1.0 - xi) ** 2,
        0.25 * (2.0 - xi) * (1.0 + xi) ** 2,
        -half_l * 0.25 * (1.0 - xi) * (1.0 + xi) ** 2,
    ], axis=1)
    return w @ dofs.nodal_matrix


def grid_closest(dofs1, dofs2, n=101, refinements=5):
    """Coarse-to-fine brute-force minimizer of the centerline distance."""
    lo1, hi1, lo2, hi2 = -1.0, 1.0, -1.0, 1.0
    for _ in range(refinements):
        xi = np.linspace(lo1, hi1, n)
        eta = np.linspace(lo2, hi2, n)
        p1 = eval_many(dofs1, xi)
        p2 = eval_many(dofs2, eta)
        dist = np.linalg.norm(p1[:, None, :] - p2[None, :, :], axis=2)
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        span1 = (hi1 - lo1) / (n - 1)
        span2 = (hi2 - lo2) / (n - 1)
        best = (float(xi[i]), float(eta[j]), float(dist[i, j]))
        lo1 = max(-1.0, xi[i] - 2 * span1)
        hi1 = min(1.0, xi[i] + 2 * span1)
        lo2 = max(-1.0, eta[j] - 2 * span2)
        hi2 = min(1.0, eta[j] + 2 * span2)
    return best


def skew_line_closest(p1, u, p2, v):
    """Closed-form closest points of two infinite lines."""
    w0 = p1 - p2
    a, b, c = u @ u, u @ v, v @ v
    d, e = u @ w0, v @ w0
    denom = a * c - b * b
    s = (b * e - c * d) / denom
    t = (a * e - b * d) / denom
    return s, t


class TestBilateral:
    def test_skew_lines_match_closed_form(self):
        dofs1 = straight([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 2.0)
        dofs2 = straight([0.7, -0.9, 0.4], [0.2, 1.0, 0.1], 2.0)
        result = bilateral_cpp(dofs1, dofs2)
        assert result.converged and result.in_range

        u = dofs1.t2  # unit direction
        v = (dofs2.d2 - dofs2.d1) / dofs2.l_ele
        s, t = skew_line_closest(dofs1.d1, u, dofs2.d1, v)
        xi_ref = 2.0 * s / dofs1.l_ele - 1.0
        eta_ref = 2.0 * t / dofs2.l_ele - 1.0
        assert abs(result.xi - xi_ref) < 1e-10
        assert abs(result.eta - eta_ref) < 1e-10

    def test_skew_lines_match_dense_grid(self):
        """Flat 2001 x 2001 brute-force scan as an independent check."""
        dofs1 = straight([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 2.0)
        dofs2 = straight([0.3, -0.5, 0.3], [-0.1, 1.0, 0.0], 2.0)
        result = bilateral_cpp(dofs1, dofs2)

        xi = np.linspace(-1.0, 1.0, 2001)
        pts1 = eval_many(dofs1, xi)
        pts2 = eval_many(dofs2, xi)
        dist = np.linalg.norm(pts1[:, None, :] - pts2[None, :, :], axis=2)
        i, j = np.unravel_index(np.argmin(dist), dist.shape)
        assert abs(result.xi - xi[i]) < 1e-3
        assert abs(result.eta - xi[j]) < 1e-3
        assert abs(result.distance - dist[i, j]) < 1e-6

    def test_curved_pairs_match_refined_grid(self, rng):
        hits = 0
        for _ in range(30):
            dofs1, dofs2 = crossing_pair(rng)
            xi_ref, eta_ref, dist_ref = grid_closest(dofs1, dofs2)
            if max(abs(xi_ref), abs(eta_ref)) > 0.95:
                continue  # boundary minimum: not a stationary point
            result = bilateral_cpp(dofs1, dofs2)
            assert result.converged and result.in_range
            hits += 1
            assert abs(result.distance - dist_ref) < 1e-6
            assert abs(result.xi - xi_ref) < 1e-4
            assert abs(result.eta - eta_ref) < 1e-4
        assert hits >= 20

    def test_parallel_lines_flagged_singular(self):
        dofs1 = straight([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 2.0)
        dofs2 = straight([0.0, 0.5, 0.0], [1.0, 0.0, 0.0], 2.0)
        result = bilateral_cpp(dofs1, dofs2)
        assert not result.converged
        assert result.singular

    def test_out_of_range_solution_reported_not_clamped(self):
        """Shifted crossing: the stationary pair lies beyond the ends."""
        dofs1 = straight([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 1.0)
        dofs2 = straight([1.6, -0.5, 0.2], [0.0, 1.0, 0.2], 1.0)
        result = bilateral_cpp(dofs1, dofs2)
        assert result.converged
        assert not result.in_range
        assert result.xi > 1.0


class TestUnilateral:
    def test_million_sample_scan(self):
        """Fixed slave point against a fine parameter scan of the master."""
        dofs1 = straight([0.0, 0.0, 0.3], [1.0, 0.0, 0.0], 1.0)
        dofs2 = ElementDofs(
            d1=np.array([-0.2, -0.5, 0.0]), t1=np.array([0.3, 1.0, 0.1]),
            d2=np.array([0.4, 0.6, 0.1]), t2=np.array([0.4, 1.0, -0.2]),
            l_ele=1.3,
        )
        xi = 0.2
        result = unilateral_cpp(dofs1, xi, dofs2)
        assert result.converged and result.in_range

        etas = np.linspace(-1.0, 1.0, 1_000_001)
        pts = eval_many(dofs2, etas)
        point = eval_many(dofs1, [xi])[0]
        dist = np.linalg.norm(pts - point, axis=1)
        j = int(np.argmin(dist))
        assert abs(result.eta - etas[j]) < 1e-5
        assert abs(result.distance - dist[j]) < 1e-6

    def test_multiple_roots_resolved_by_distance(self, rng):
        """An S-shaped master has several orthogonality roots; the seeded
        solver must return the closest in-range one."""
        dofs2 = ElementDofs(
            d1=np.array([0.0, 0.0, 0.0]), t1=np.array([1.0, 2.0, 0.0]),
            d2=np.array([1.0, 0.0, 0.0]), t2=np.array([1.0, 2.0, 0.0]),
            l_ele=1.0,
        )
        dofs1 = straight([0.1, 0.8, 0.0], [0.0, 0.0, 1.0], 1.0)
        result = unilateral_cpp(dofs1, -1.0, dofs2)
        assert result.converged

        etas = np.linspace(-1.0, 1.0, 200001)
        pts = eval_many(dofs2, etas)
        point = dofs1.d1
        dist = np.linalg.norm(pts - point, axis=1)
        j = int(np.argmin(dist))
        assert abs(result.distance - dist[j]) < 1e-6

    def test_out_of_range_projection_reported(self):
        """Slave point beyond the master end: eta lands outside [-1, 1]."""
        dofs1 = straight([2.0, 0.4, 0.0], [0.0, 0.0, 1.0], 1.0)
        dofs2 = straight([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 1.0)
        result = unilateral_cpp(dofs1, -1.0, dofs2)
        assert result.converged
        assert result.eta > 1.0
        assert not result.in_range

    def test_warm_start_is_used(self):
        dofs1 = straight([0.0, 0.0, 0.3], [1.0, 0.0, 0.0], 1.0)
        dofs2 = straight([-0.5, -0.5, 0.0], [0.0, 1.0, 0.0], 2.0)
        cold = unilateral_cpp(dofs1, 0.0, dofs2)
        warm = unilateral_cpp(dofs1, 0.0, dofs2, warm_start=cold.eta)
        assert warm.converged
        assert abs(warm.eta - cold.eta) < 1e-12
        assert warm.iterations <= cold.iterations


class TestEndpointProjection:
    def test_parallel_beams_closed_form(self):
        slave = straight([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 2.0)
        master = straight([0.5, 0.1, 0.0], [1.0, 0.0, 0.0], 1.0)
        result = endpoint_projection(slave, master, eta_ep=-1.0)
        assert result.converged and result.in_range
        assert abs(result.xi - (-0.5)) < 1e-10  # x = 0.5 on [0, 2]

    def test_oblique_master_closed_form(self):
        """Cross-section plane of a tilted master end cuts the slave at
        x = x_ep + y_ep * tan(theta)."""
        theta = 0.3
        direction = [math.cos(theta), math.sin(theta), 0.0]
        slave = straight([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 2.0)
        master = straight([0.5, 0.1, 0.0], direction, 1.0)
        result = endpoint_projection(slave, master, eta_ep=-1.0)
        x_expected = 0.5 + 0.1 * math.tan(theta)
        assert result.converged
        assert abs(result.xi - (x_expected - 1.0)) < 1e-10

    def test_no_intersection_reported_out_of_range(self):
        slave = straight([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 1.0)
        master = straight([1.8, 0.1, 0.0], [1.0, 0.0, 0.0], 1.0)
        result = endpoint_projection(slave, master, eta_ep=-1.0)
        assert result.converged
        assert result.xi > 1.0
        assert not result.in_range


class TestAnglesAndBounds:
    def test_orthogonality_signs(self):
        slave = straight([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 2.0)
        master = straight([0.5, 0.2, 0.0], [0.0, 1.0, 0.0], 2.0)
        p1, p2 = orthogonality(slave, master, 0.0, -1.0)
        # Slave midpoint (1, 0, 0); master end (0.5, 0.2, 0).
        # p1 = r1' . (r1 - r2) > 0, p2 = r2' . (r1 - r2) < 0.
        assert p1 > 0.0
        assert p2 < 0.0

    def test_contact_angle_special_cases(self):
        ex = np.array([1.0, 0.0, 0.0])
        ey = np.array([0.0, 1.0, 0.0])
        assert contact_angle(ex, ey) == pytest.approx(math.pi / 2.0)
        assert contact_angle(ex, 2.0 * ex) == pytest.approx(0.0, abs=1e-12)
        assert contact_angle(ex, -ex) == pytest.approx(0.0, abs=1e-12)
        diag = np.array([1.0, 1.0, 0.0])
        assert contact_angle(ex, diag) == pytest.approx(math.pi / 4.0)

    def test_alpha_min_reference_value(self):
        """mu_max = 0.01 gives acos(0.98) = 11.478 degrees."""
        angle = math.degrees(alpha_min(0.01))
        assert angle == pytest.approx(11.478341, abs=1e-4)

    def test_alpha_min_zero_curvature(self):
        assert alpha_min(0.0) == 0.0

    def test_alpha_min_monotone_in_mu(self):
        values = [alpha_min(mu) for mu in (0.0, 0.01, 0.1, 0.5, 0.9)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_alpha_min_k_variants(self):
        """Larger safety distance factor k widens the excluded cone."""
        assert alpha_min(0.01, k=4.0) > alpha_min(0.01, k=2.0)
        with pytest.raises(OutOfRange):
            alpha_min(1.5, k=2.0)
        with pytest.raises(OutOfRange):
            alpha_min(-0.1)

    def test_max_curvature_ratio(self):
        assert max_curvature_ratio(0.01, 2.0) == pytest.approx(0.02)
        with pytest.raises(OutOfRange):
            max_curvature_ratio(-1.0, 1.0)
