"""Closest-point projections between beam centerlines.

All solvers work on the orthogonality residuals

    p1(xi, eta) = r1'(xi)  . (r1(xi) - r2(eta))
    p2(xi, eta) = r2'(eta) . (r1(xi) - r2(eta))

(primes are element-coordinate derivatives; the zeros are unaffected by
the constant arc-length scaling).  The bilateral solver finds a
stationary pair (xi_c, eta_c) of the distance between two curves, the
unilateral solver the foot point eta_c on one curve for a fixed point
of the other, and the boundary projection the slave coordinate xi_b at
which a fixed master point's orthogonal cross-section plane intersects
the slave curve.

Newton iterations start from a deterministic set of equally spaced
seeds ordered by trial distance, so results are reproducible and do
not depend on iteration history.  Solutions outside [-1, 1] are
reported as such, never clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import ElementDofs, hermite_weight_table, hermite_weights

__all__ = [
    "ProjectionResult",
    "NoConvergence",
    "SingularJacobian",
    "OutOfRange",
    "orthogonality",
    "bilateral_cpp",
    "unilateral_cpp",
    "project_point_to_curve",
    "project_points_to_curve",
    "plane_curve_cuts",
    "endpoint_projection",
    "contact_angle",
    "alpha_min",
    "max_curvature_ratio",
    "TOL_PROJ",
    "TOL_DET",
    "MAX_ITER",
    "N_SEEDS",
]

TOL_PROJ = 1e-10
TOL_DET = 1e-12
MAX_ITER = 50
N_SEEDS = 5

#: Coordinates at most this far outside [-1, 1] still count as in range.
RANGE_SLACK = 1e-10


class NoConvergence(Exception):
    """No Newton seed converged for a projection that a caller requires."""


class SingularJacobian(Exception):
    """Projection system is singular (e.g. parallel straight centerlines)."""


class OutOfRange(Exception):
    """Input outside the mathematically admissible domain."""


@dataclass
class ProjectionResult:
    """Outcome of a closest-point solve.

    ``xi`` / ``eta`` are the element coordinates on the two curves
    (whichever were unknowns).  ``distance`` is the centerline distance
    at the solution.  Non-converged or singular outcomes are flagged
    rather than raised so that integration loops can skip them.
    """

    xi: float
    eta: float
    converged: bool
    distance: float
    iterations: int
    singular: bool = False

    @property
    def in_range(self) -> bool:
        return (
            abs(self.xi) <= 1.0 + RANGE_SLACK and abs(self.eta) <= 1.0 + RANGE_SLACK
        )


def _eval(x: np.ndarray, l_ele: float, coord: float):
    """Position, first and second coordinate derivative at ``coord``."""
    w, w_xi, w_xixi = hermite_weights(coord, l_ele)
    return x.T @ w, x.T @ w_xi, x.T @ w_xixi


def orthogonality(dofs1: ElementDofs, dofs2: ElementDofs, xi: float, eta: float):
    """Residuals (p1, p2) at the given coordinate pair."""
    r1, r1_xi, _ = _eval(dofs1.nodal_matrix, dofs1.l_ele, xi)
    r2, r2_eta, _ = _eval(dofs2.nodal_matrix, dofs2.l_ele, eta)
    diff = r1 - r2
    return float(r1_xi @ diff), float(r2_eta @ diff)


def _seed_coords(n: int) -> np.ndarray:
    return np.linspace(-1.0, 1.0, n)


def bilateral_cpp(dofs1: ElementDofs, dofs2: ElementDofs,
                  tol: float = TOL_PROJ, max_iter: int = MAX_ITER,
                  n_seeds: int = N_SEEDS) -> ProjectionResult:
    """Stationary distance pair between two element centerlines.

    Seeds an (n x n) coordinate grid, orders seeds by trial distance
    and Newton-iterates the 2x2 system until both orthogonality
    residuals vanish.  Returns the first converged solution, preferring
    in-range ones; a singular system at every seed is flagged.
    """
    x1, l1 = dofs1.nodal_matrix, dofs1.l_ele
    x2, l2 = dofs2.nodal_matrix, dofs2.l_ele

    coords = _seed_coords(n_seeds)
    trial = []
    for xi in coords:
        r1 = _eval(x1, l1, xi)[0]
        for eta in coords:
            r2 = _eval(x2, l2, eta)[0]
            trial.append((float(np.linalg.norm(r1 - r2)), xi, eta))
    trial.sort()

    best = None
    saw_singular = False
    for _, xi0, eta0 in trial:
        xi, eta = float(xi0), float(eta0)
        for iteration in range(1, max_iter + 1):
            r1, r1_xi, r1_xixi = _eval(x1, l1, xi)
            r2, r2_eta, r2_etaeta = _eval(x2, l2, eta)
            diff = r1 - r2
            p1 = float(r1_xi @ diff)
            p2 = float(r2_eta @ diff)
            dist = float(np.linalg.norm(diff))
            scale1 = float(r1_xi @ r1_xi)
            scale2 = float(r2_eta @ r2_eta)
            res_scale = math.sqrt(scale1 * scale2) * max(dist, 1e-30)
            a11 = scale1 + float(diff @ r1_xixi)
            a12 = -float(r1_xi @ r2_eta)
            a21 = float(r1_xi @ r2_eta)
            a22 = -scale2 + float(diff @ r2_etaeta)
            det = a11 * a22 - a12 * a21
            if abs(det) < TOL_DET * scale1 * scale2:
                saw_singular = True
                break
            if abs(p1) <= tol * res_scale and abs(p2) <= tol * res_scale:
                result = ProjectionResult(xi, eta, True, dist, iteration)
                if result.in_range:
                    return result
                if best is None:
                    best = result
                break
            d_xi = (-p1 * a22 + p2 * a12) / det
            d_eta = (-a11 * p2 + a21 * p1) / det
            step = max(abs(d_xi), abs(d_eta))
            if step > 0.5:
                d_xi *= 0.5 / step
                d_eta *= 0.5 / step
            xi += d_xi
            eta += d_eta
            if abs(xi) > 4.0 or abs(eta) > 4.0:
                break
    if best is not None:
        return best
    return ProjectionResult(
        math.nan, math.nan, False, math.inf, max_iter, singular=saw_singular
    )


def _newton_scan(seeds, residual, max_iter: int):
    """Damped scalar Newton on many independent lanes in lockstep.

    ``residual(coords, lanes)`` evaluates the given live lanes at once
    and returns per-lane arrays ``(p, dp, dist, conv_tol, det_tol)``.
    A lane stops when it converges (``|p| <= conv_tol``), goes singular
    (``|dp| < det_tol``) or leaves ``|coord| <= 4``; steps are clipped
    to 0.5.  Returns final coordinates, convergence flags, distances,
    iteration counts and per-lane singular flags.
    """
    coords = np.array(seeds, dtype=float)
    n = coords.size
    alive = np.ones(n, dtype=bool)
    converged = np.zeros(n, dtype=bool)
    distances = np.full(n, math.inf)
    iterations = np.zeros(n, dtype=int)
    singular = np.zeros(n, dtype=bool)
    for iteration in range(1, max_iter + 1):
        live = np.nonzero(alive)[0]
        if live.size == 0:
            break
        p, dp, dist, conv_tol, det_tol = residual(coords[live], live)
        done = np.abs(p) <= conv_tol
        if done.any():
            hit = live[done]
            converged[hit] = True
            distances[hit] = dist[done]
            iterations[hit] = iteration
            alive[hit] = False
        stuck = ~done & (np.abs(dp) < det_tol)
        if stuck.any():
            sel = live[stuck]
            singular[sel] = True
            alive[sel] = False
        moving = ~done & ~stuck
        if moving.any():
            sel = live[moving]
            coords[sel] += np.clip(-p[moving] / dp[moving], -0.5, 0.5)
            alive[sel] &= np.abs(coords[sel]) <= 4.0
    return coords, converged, distances, iterations, singular


def _select_per_owner(scan, n_owners: int, lanes_per_owner: int,
                      max_iter: int):
    """Per-owner root choice over a lane-partitioned scan result.

    Within each owner's block of lanes, converged in-range roots win
    over out-of-range ones and smaller distances over larger; the
    first lane takes ties, matching the seed-order processing of the
    scalar solvers.
    """
    coords, converged, distances, iterations, singular = scan
    shape = (n_owners, lanes_per_owner)
    in_range = converged & (np.abs(coords) <= 1.0 + RANGE_SLACK)
    owner_rows = np.arange(n_owners)

    def first_min(mask):
        dist = np.where(mask, distances, math.inf).reshape(shape)
        lane = np.argmin(dist, axis=1)
        return lane, dist[owner_rows, lane] < math.inf

    lane_in, found_in = first_min(in_range)
    lane_any, found_any = first_min(converged)
    lane = np.where(found_in, lane_in, lane_any)
    found = found_in | found_any
    flat = owner_rows * lanes_per_owner + lane
    return (
        np.where(found, coords[flat], math.nan),
        found,
        np.where(found, distances[flat], math.inf),
        np.where(found, iterations[flat], max_iter),
        ~found & singular.reshape(shape).any(axis=1),
    )


def project_points_to_curve(points, x: np.ndarray, l_ele: float,
                            tol: float = TOL_PROJ, max_iter: int = MAX_ITER,
                            n_seeds: int = N_SEEDS):
    """Foot point coordinates on one curve for many fixed points.

    Batched :func:`project_point_to_curve` without warm starts: every
    point starts the same seed grid and all Newton lanes advance in
    lockstep, amortizing the curve evaluations over the batch.
    Returns arrays ``(eta, converged, distance, iterations, singular)``
    with one entry per point and the same root selection as the scalar
    solver.
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    n_pts = points.shape[0]
    seeds = np.tile(_seed_coords(n_seeds), n_pts)
    owner = np.repeat(np.arange(n_pts), n_seeds)

    def residual(coords, lanes):
        w, w_eta, w_etaeta = hermite_weight_table(coords, l_ele)
        r_eta = w_eta @ x
        diff = points[owner[lanes]] - w @ x
        p = np.einsum("ij,ij->i", r_eta, diff)
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        scale = np.einsum("ij,ij->i", r_eta, r_eta)
        dp = np.einsum("ij,ij->i", diff, w_etaeta @ x) - scale
        root_scale = np.sqrt(scale)
        conv_tol = (tol * root_scale * np.maximum(dist, 1e-30)
                    * np.maximum(root_scale, 1.0))
        return p, dp, dist, conv_tol, TOL_DET * scale

    scan = _newton_scan(seeds, residual, max_iter)
    return _select_per_owner(scan, n_pts, n_seeds, max_iter)


def plane_curve_cuts(x: np.ndarray, l_ele: float, plane_points,
                     plane_normals, tol: float = TOL_PROJ,
                     max_iter: int = MAX_ITER, n_seeds: int = N_SEEDS):
    """Coordinates where cross-section planes intersect a curve.

    Plane ``i`` passes through ``plane_points[i]`` with (not
    necessarily unit) normal ``plane_normals[i]``; the solved
    condition per plane is ``normal . (r(xi) - point) = 0``.  All
    planes share the seed grid and advance in lockstep.  Returns
    arrays ``(xi, converged, distance, iterations, singular)`` with
    one entry per plane and the same root selection as
    :func:`endpoint_projection`.
    """
    plane_points = np.asarray(plane_points, dtype=float).reshape(-1, 3)
    plane_normals = np.asarray(plane_normals, dtype=float).reshape(-1, 3)
    n_planes = plane_points.shape[0]
    scale2 = np.einsum("ij,ij->i", plane_normals, plane_normals)
    root_scale2 = np.sqrt(scale2)
    conv_scale = tol * root_scale2 * np.maximum(root_scale2, 1.0)
    det_tol_all = TOL_DET * scale2
    seeds = np.tile(_seed_coords(n_seeds), n_planes)
    owner = np.repeat(np.arange(n_planes), n_seeds)

    def residual(coords, lanes):
        which = owner[lanes]
        w, w_xi, _ = hermite_weight_table(coords, l_ele)
        diff = w @ x - plane_points[which]
        normals = plane_normals[which]
        p = np.einsum("ij,ij->i", diff, normals)
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        dp = np.einsum("ij,ij->i", w_xi @ x, normals)
        conv_tol = conv_scale[which] * np.maximum(dist, 1e-30)
        return p, dp, dist, conv_tol, det_tol_all[which]

    scan = _newton_scan(seeds, residual, max_iter)
    return _select_per_owner(scan, n_planes, n_seeds, max_iter)


def _collect_roots(roots, coords, converged, distances, iterations):
    """Append distinct converged roots (1e-8 coordinate tolerance)."""
    for i in range(coords.size):
        if converged[i] and not any(
            abs(coords[i] - e) < 1e-8 for e, *_ in roots
        ):
            roots.append((float(coords[i]), float(distances[i]),
                          int(iterations[i])))
    return roots


def project_point_to_curve(point: np.ndarray, x: np.ndarray, l_ele: float,
                           tol: float = TOL_PROJ, max_iter: int = MAX_ITER,
                           n_seeds: int = N_SEEDS, warm_start=None):
    """Foot point coordinate on a curve for a fixed space point.

    Solves ``r'(eta) . (point - r(eta)) = 0``.  Returns
    ``(eta, converged, distance, iterations, singular)``.  Among all
    converged roots the in-range one with the smallest distance wins,
    falling back to the overall smallest distance.
    """
    roots = []
    saw_singular = False
    if warm_start is not None:
        # A warm start that lands in range keeps tracking the same
        # root the last evaluation used; skip the seed scan for this
        # (by far the most common) case.
        eta = float(warm_start)
        for iteration in range(1, max_iter + 1):
            r, r_eta, r_etaeta = _eval(x, l_ele, eta)
            diff = point - r
            p = float(r_eta @ diff)
            dist = math.sqrt(float(diff @ diff))
            scale = float(r_eta @ r_eta)
            dp = -scale + float(diff @ r_etaeta)
            if abs(p) <= tol * math.sqrt(scale) * max(dist, 1e-30) * max(
                math.sqrt(scale), 1.0
            ):
                if abs(eta) <= 1.0 + RANGE_SLACK:
                    return eta, True, dist, iteration, False
                roots.append((eta, dist, iteration))
                break
            if abs(dp) < TOL_DET * scale:
                saw_singular = True
                break
            step = -p / dp
            if abs(step) > 0.5:
                step = math.copysign(0.5, step)
            eta += step
            if abs(eta) > 4.0:
                break

    def residual(coords, lanes):
        w, w_eta, w_etaeta = hermite_weight_table(coords, l_ele)
        r = w @ x
        diff = point - r
        r_eta = w_eta @ x
        p = np.einsum("ij,ij->i", r_eta, diff)
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        scale = np.einsum("ij,ij->i", r_eta, r_eta)
        dp = np.einsum("ij,ij->i", diff, w_etaeta @ x) - scale
        root_scale = np.sqrt(scale)
        conv_tol = (tol * root_scale * np.maximum(dist, 1e-30)
                    * np.maximum(root_scale, 1.0))
        return p, dp, dist, conv_tol, TOL_DET * scale

    scan = _newton_scan(_seed_coords(n_seeds), residual, max_iter)
    saw_singular |= bool(scan[-1].any())
    _collect_roots(roots, *scan[:-1])
    if not roots:
        return math.nan, False, math.inf, max_iter, saw_singular
    in_range = [r for r in roots if abs(r[0]) <= 1.0 + RANGE_SLACK]
    pick = min(in_range or roots, key=lambda r: r[1])
    return pick[0], True, pick[1], pick[2], False


def unilateral_cpp(dofs1: ElementDofs, xi: float, dofs2: ElementDofs,
                   tol: float = TOL_PROJ, max_iter: int = MAX_ITER,
                   n_seeds: int = N_SEEDS, warm_start=None) -> ProjectionResult:
    """Closest master coordinate eta_c for a fixed slave coordinate xi."""
    point = _eval(dofs1.nodal_matrix, dofs1.l_ele, xi)[0]
    eta, converged, dist, iterations, singular = project_point_to_curve(
        point, dofs2.nodal_matrix, dofs2.l_ele, tol, max_iter, n_seeds, warm_start
    )
    return ProjectionResult(xi, eta, converged, dist, iterations, singular)


def endpoint_projection(dofs_slave: ElementDofs, dofs_master: ElementDofs,
                        eta_ep: float, tol: float = TOL_PROJ,
                        max_iter: int = MAX_ITER,
                        n_seeds: int = N_SEEDS) -> ProjectionResult:
    """Slave coordinate xi_b where a master endpoint's cross-section
    plane (orthogonal to the master tangent at ``eta_ep``) cuts the
    slave centerline; used to split integration intervals there.
    """
    x1, l1 = dofs_slave.nodal_matrix, dofs_slave.l_ele
    r2, r2_eta, _ = _eval(dofs_master.nodal_matrix, dofs_master.l_ele, eta_ep)
    scale2 = float(r2_eta @ r2_eta)
    conv_scale = tol * math.sqrt(scale2) * max(math.sqrt(scale2), 1.0)

    def residual(coords, lanes):
        w, w_xi, _ = hermite_weight_table(coords, l1)
        diff = w @ x1 - r2
        p = diff @ r2_eta
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        dp = (w_xi @ x1) @ r2_eta
        conv_tol = conv_scale * np.maximum(dist, 1e-30)
        return p, dp, dist, conv_tol, np.full(p.shape, TOL_DET * scale2)

    scan = _newton_scan(_seed_coords(n_seeds), residual, max_iter)
    saw_singular = bool(scan[-1].any())
    roots = _collect_roots([], *scan[:-1])
    if not roots:
        return ProjectionResult(
            math.nan, eta_ep, False, math.inf, max_iter, singular=saw_singular
        )
    in_range = [r for r in roots if abs(r[0]) <= 1.0 + RANGE_SLACK]
    pick = min(in_range or roots, key=lambda r: r[1])
    return ProjectionResult(pick[0], eta_ep, True, pick[1], pick[2])


def contact_angle(r1_xi: np.ndarray, r2_eta: np.ndarray) -> float:
    """Intersection angle of two tangents, folded into [0, pi/2]."""
    n1 = float(np.linalg.norm(r1_xi))
    n2 = float(np.linalg.norm(r2_eta))
    if n1 == 0.0 or n2 == 0.0:
        raise OutOfRange("contact angle undefined for a vanishing tangent")
    cosine = abs(float(r1_xi @ r2_eta)) / (n1 * n2)
    return math.acos(min(cosine, 1.0))


def max_curvature_ratio(radius: float, kappa_geom_max: float) -> float:
    """mu_max = R * max curvature, the radius over the smallest bending
    radius occurring on the master beam."""
    if radius <= 0.0 or kappa_geom_max < 0.0:
        raise OutOfRange("radius must be positive and curvature non-negative")
    return radius * kappa_geom_max


def alpha_min(mu_max: float, k: float = 2.0) -> float:
    """Smallest contact angle with a guaranteed unique closest point.

    For contact angles above this bound the bilateral projection onto a
    master beam with curvature ratio ``mu_max`` has a unique solution
    within ``k`` beam radii of the contact zone (``k = 2`` covers every
    configuration that can transmit contact forces).
    """
    if mu_max < 0.0:
        raise OutOfRange("mu_max must be non-negative")
    arg = 1.0 - k * mu_max
    if arg < -1.0:
        raise OutOfRange(
            f"k * mu_max = {k * mu_max:.3g} exceeds 2; no angle guarantees "
            "a unique projection"
        )
    return math.acos(min(arg, 1.0))
