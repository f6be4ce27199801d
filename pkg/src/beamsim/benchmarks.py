"""Benchmark scenes with known reference behavior.

Each builder returns a :class:`~beamsim.scenario.Scenario`:

* ``patch_test``: a loaded two-element beam sliding along a fixed
  rigid support, whose linear penalty bed admits a uniform-gap
  solution ``g = -p/epsilon``.
* ``twist_helix``: two prestretched parallel beams twisted into a
  double helix that matches a closed-form equilibrium.
* ``twist_gap`` / ``twist_shifted``: twisting pairs with sign-changing
  gaps and with axially shifted endpoints forcing integration across
  a contact force jump.
* ``rope_assembly``: a reduced rope of fiber sub-bundles twisted
  stage-wise under axial pretension.
* ``endpoint_stress``: a beam pressed onto the end cap of a post,
  where interior closest-point projections transfer no force at all.

The module also provides mesh-convergence helpers (sampled numerical
references, observed orders) and extraction of per-step gap errors and
contact force profiles from the driver reports.
"""

from __future__ import annotations

import numpy as np

from .assembly_solver import reaction_resultants
from .geometry import evaluate
from .oracles import helix_reference, patch_error_metric
from .scenario import (
    BeamSpec,
    ContactSpec,
    DirichletSpec,
    NodalForce,
    OutputSpec,
    Scenario,
    SolverSpec,
    build,
    run,
)

__all__ = [
    "patch_test", "twist_helix", "twist_gap", "twist_shifted",
    "rope_assembly", "endpoint_stress", "run_scenario", "BeamSampler",
    "observed_orders", "max_displacement", "helix_max_displacement",
    "gap_error_series", "force_profile", "jump_forces", "axial_torque",
    "point_clearance", "PATCH_GAP", "POST_END", "POST_RADIUS_SUM",
]

#: Uniform gap of the patch test bed, -p / epsilon.
PATCH_GAP = -1.0 / 500.0


def patch_test(n_gauss: int = 5, n_intervals: int = 3,
               segmentation: bool = True, n_steps: int = 100) -> Scenario:
    """Loaded beam sliding along a fixed support with a constant gap.

    The support (length 2, three unequal elements, fully fixed) acts
    as the slave beam, so the slider's physical endpoints sweep across
    the support's Gauss points.  The slider (length 0.8) carries a
    constant transverse line load p = 1.0 balanced by a linear penalty
    bed with epsilon = 500, which yields the uniform analytical gap
    ``PATCH_GAP`` under its footprint while its left endpoint is
    displaced by 1.001.
    """
    beams = [
        BeamSpec(start=(0.0, 0.0, 0.0), end=(2.0, 0.0, 0.0), n_elements=3,
                 E=1.0e9, radius=0.005, fractions=(0.25, 0.6)),
        BeamSpec(start=(0.0, 0.0, 0.01), end=(0.8, 0.0, 0.01),
                 n_elements=2, E=1.0e9, radius=0.005,
                 line_load=(0.0, 0.0, -1.0)),
    ]
    dirichlet = [DirichletSpec(beam=0, node=i) for i in range(4)]
    dirichlet += [
        DirichletSpec(beam=1, node="start", kind="ramp", components=(0, 1),
                      delta=(1.001, 0.0, 0.0, 0.0, 0.0, 0.0)),
        DirichletSpec(beam=1, node="end", kind="fixed", components=(1,)),
    ]
    return Scenario(
        name="patch_test",
        beams=beams,
        contact=ContactSpec(law="linear", epsilon=500.0,
                            n_intervals=n_intervals, n_gauss=n_gauss,
                            segmentation=segmentation, formulation="line"),
        dirichlet=dirichlet,
        solver=SolverSpec(n_steps=n_steps),
    )


def _twist_pair(offset: float, n_elements: int, shift: float = 0.0):
    """Two parallel beams along z at x = +-offset, radius 0.01."""
    return [
        BeamSpec(start=(offset, 0.0, 0.0), end=(offset, 0.0, 5.0),
                 n_elements=n_elements, E=1.0e9, radius=0.01),
        BeamSpec(start=(-offset, 0.0, shift), end=(-offset, 0.0, 5.0 + shift),
                 n_elements=n_elements, E=1.0e9, radius=0.01),
    ]


def twist_helix(n_elements: int, n_gauss: int = 5,
                steps_per_turn: int = 24) -> Scenario:
    """Twisting two touching beams into the closed-form double helix.

    The beams start at x = +-0.0095 (gap -0.001).  Both top endpoints
    are stretched axially by u within the first step and then moved on
    a full circle around the z axis.  The tangent x components vanish
    at all four ends, matching the helix boundary conditions.  With
    the matched penalty parameter the final equilibrium is a double
    helix with constant gap -0.001.

    The straight stretched pair is a second (lower-energy) equilibrium
    of the same final boundary conditions, separated from the helix by
    the contact barrier.  Near the half-turn angle, where both beam
    chords become coplanar, large rotation increments can hop across
    that barrier and unwind the wrap, so the turn is resolved with
    15-degree default steps and the Newton increment is capped below
    the barrier width (one beam diameter).
    """
    ref = helix_reference(0.01, 5.0, 1.0e9, -0.001, 0.01)
    dirichlet = []
    for k in (0, 1):
        dirichlet += [
            DirichletSpec(beam=k, node="start", kind="fixed",
                          components=(0, 1, 2, 3)),
            DirichletSpec(beam=k, node="end", kind="ramp", components=(2,),
                          delta=(0.0, 0.0, ref.u, 0.0, 0.0, 0.0),
                          start=0.0, stop=1.0),
            DirichletSpec(beam=k, node="end", kind="circle",
                          components=(0, 1), point=(0.0, 0.0, 0.0),
                          axis=(0.0, 0.0, 1.0), angle=2.0 * np.pi,
                          start=1.0, stop=1.0 + steps_per_turn),
            DirichletSpec(beam=k, node="end", kind="fixed",
                          components=(3,)),
        ]
    return Scenario(
        name="twist_helix",
        beams=_twist_pair(ref.r_helix, n_elements),
        contact=ContactSpec(law="linear", epsilon=ref.epsilon_penalty,
                            n_intervals=1, n_gauss=n_gauss,
                            formulation="line"),
        dirichlet=dirichlet,
        solver=SolverSpec(n_steps=1 + steps_per_turn, max_increment=0.002),
    )


def _twist_dirichlet(squeeze: float = 0.0):
    """Clamped-tangent twisting conditions shared by the gap studies.

    Bottom nodes are pinned, top nodes travel one full circle around
    the z axis; tangent x and y components are clamped at all four
    ends.  With ``squeeze`` the bottom endpoints are additionally
    pushed by -+squeeze along x over the same window, pressing the
    lower beam segments lightly into each other.  The squeeze must
    stay well below the initial clearance plus a beam diameter: the
    anchors may never swap sides, or the lower segments would have to
    slip around each other and the pressed zone would be lost.
    """
    dirichlet = []
    for k, sign in ((0, -1.0), (1, 1.0)):
        if squeeze:
            dirichlet.append(DirichletSpec(
                beam=k, node="start", kind="ramp", components=(0,),
                delta=(sign * squeeze, 0.0, 0.0, 0.0, 0.0, 0.0)))
            fixed_bottom = (1, 2, 3, 4)
        else:
            fixed_bottom = (0, 1, 2, 3, 4)
        dirichlet += [
            DirichletSpec(beam=k, node="start", kind="fixed",
                          components=fixed_bottom),
            DirichletSpec(beam=k, node="end", kind="circle",
                          components=(0, 1), point=(0.0, 0.0, 0.0),
                          axis=(0.0, 0.0, 1.0), angle=2.0 * np.pi),
            DirichletSpec(beam=k, node="end", kind="fixed",
                          components=(2, 3, 4)),
        ]
    return dirichlet


def twist_gap(n_elements: int, law: str = "quadratic", n_gauss: int = 5,
              n_intervals: int = 1, n_steps: int = 24) -> Scenario:
    """Twisting with a sign-changing gap along the beams.

    The pair starts at x = +-0.02 (initial gap 0.02), is twisted by
    one full turn with completely clamped end tangents, and develops
    contact only around midspan, so the gap crosses the activation
    threshold along the length.  The linear force law has a kink at
    that crossing; the smoothed law (g_bar = 0.001) removes it.

    The unwound straight pair satisfies the final boundary conditions
    as well, so the turn is resolved with 15-degree default steps and
    a capped Newton increment, as in :func:`twist_helix`.
    """
    return Scenario(
        name="twist_gap",
        beams=_twist_pair(0.02, n_elements),
        contact=ContactSpec(
            law=law, epsilon=1000.0,
            g_bar=0.001 if law == "quadratic" else None,
            n_intervals=n_intervals, n_gauss=n_gauss, formulation="line"),
        dirichlet=_twist_dirichlet(),
        solver=SolverSpec(n_steps=n_steps, max_increment=0.002),
    )


def twist_shifted(n_elements: int, segmentation: bool = True,
                  n_intervals: int = 2, n_gauss: int = 5) -> Scenario:
    """Twisting with axially shifted, squeezed endpoints.

    One beam of the pair is shifted by 0.02 along z, so the pair's
    bottom endpoints no longer match.  While the top endpoints twist
    one full turn as in :func:`twist_gap`, the bottom endpoints are
    pushed 0.012 toward each other, which presses the lower beam
    segments together with a gap of about -0.004.  The shifted beam's
    bottom endpoint projects onto the other beam at s = 0.02, inside
    that pressed zone, so the contact force jumps there from zero to
    its full value; integrating across that jump is what the interval
    segmentation at master endpoints must handle.
    """
    return Scenario(
        name="twist_shifted",
        beams=_twist_pair(0.02, n_elements, shift=0.02),
        contact=ContactSpec(law="quadratic", epsilon=1000.0, g_bar=0.001,
                            n_intervals=n_intervals, n_gauss=n_gauss,
                            segmentation=segmentation, formulation="line"),
        dirichlet=_twist_dirichlet(squeeze=0.012),
        solver=SolverSpec(n_steps=24, max_increment=0.002),
    )


#: Fiber spacing of the rope: touching cross-sections plus half the
#: smoothing gap, so intra-bundle contacts start lightly prestressed.
ROPE_SPACING = 0.0205
ROPE_SUBBUNDLE_RADIUS = ROPE_SPACING / np.sqrt(3.0)
ROPE_CENTER_RADIUS = 0.024


def rope_fiber_layout():
    """Cross-section layout: (positions (9, 2), sub-bundle centers (3, 2)).

    Three sub-bundles of three fibers each; fibers sit on a triangle
    of circumradius ``ROPE_SUBBUNDLE_RADIUS`` around their sub-bundle
    center, and the centers on a triangle of circumradius
    ``ROPE_CENTER_RADIUS`` around the rope axis.  Nearest fibers of
    neighboring sub-bundles clear each other by about the smoothing
    gap, nearest fibers within a sub-bundle by half of it.
    """
    centers, positions = [], []
    for b in range(3):
        angle_b = np.pi / 2.0 + 2.0 * np.pi * b / 3.0
        center = ROPE_CENTER_RADIUS * np.array(
            [np.cos(angle_b), np.sin(angle_b)])
        centers.append(center)
        for j in range(3):
            angle_f = np.pi / 2.0 + 2.0 * np.pi * j / 3.0
            positions.append(center + ROPE_SUBBUNDLE_RADIUS * np.array(
                [np.cos(angle_f), np.sin(angle_f)]))
    return np.array(positions), np.array(centers)


def rope_assembly(n_elements: int = 8, steps_per_stage: int = 20,
                  tension: float = 1000.0) -> Scenario:
    """Reduced rope: three sub-bundles of three fibers, two twist stages.

    All nine fibers run along z with length 5 and radius 0.01.  Front
    endpoints (z = 5) are held axially and moved on circles: first one
    full turn around their own sub-bundle center, then one full turn
    around the rope axis.  Back endpoints are pinned transversely but
    axially free, pretensioned by a constant axial force per fiber.
    Tangents stay free everywhere (simply supported fibers).
    """
    positions, centers = rope_fiber_layout()
    beams, dirichlet, forces = [], [], []
    n_steps = 2 * steps_per_stage
    for f, (x, y) in enumerate(positions):
        beams.append(BeamSpec(start=(x, y, 0.0), end=(x, y, 5.0),
                              n_elements=n_elements, E=1.0e9, radius=0.01))
        cx, cy = centers[f // 3]
        dirichlet += [
            DirichletSpec(beam=f, node="end", kind="circle",
                          components=(0, 1), point=(cx, cy, 0.0),
                          axis=(0.0, 0.0, 1.0), angle=2.0 * np.pi,
                          start=0.0, stop=float(steps_per_stage)),
            DirichletSpec(beam=f, node="end", kind="circle",
                          components=(0, 1), point=(0.0, 0.0, 0.0),
                          axis=(0.0, 0.0, 1.0), angle=2.0 * np.pi,
                          start=float(steps_per_stage), stop=float(n_steps)),
            DirichletSpec(beam=f, node="end", kind="fixed",
                          components=(2,)),
            DirichletSpec(beam=f, node="start", kind="fixed",
                          components=(0, 1)),
        ]
        forces.append(NodalForce(beam=f, node="start",
                                 force=(0.0, 0.0, -tension)))
    return Scenario(
        name="rope_assembly",
        beams=beams,
        contact=ContactSpec(law="quadratic", epsilon=5.0e5, g_bar=0.001,
                            n_intervals=2, n_gauss=5,
                            formulation="line+endpoints"),
        dirichlet=dirichlet,
        solver=SolverSpec(n_steps=n_steps, tol_residual=1e-6,
                          tol_increment=1e-6),
        forces=forces,
        output=OutputSpec(torque_point=(0.0, 0.0, 0.0),
                          torque_axis=(0.0, 0.0, 1.0)),
    )


#: Free end of the post in the endpoint stress scene and the contact
#: radius sum (post 0.02 + slider 0.03).
POST_END = np.array([0.5, 0.0, 0.0])
POST_RADIUS_SUM = 0.05


def endpoint_stress(enable_endpoints: bool = True) -> Scenario:
    """A beam pressed onto the free end cap of a fixed post.

    The slider crosses 0.005 beyond the post's end, so every interior
    projection onto the post lands outside its parameter range and
    line contact transfers nothing; only the cap of the post can
    resist.  Pressing the slider down by 0.06 therefore either rests
    on the cap (endpoints enabled) or punches through by more than a
    slider radius (endpoints disabled).
    """
    beams = [
        BeamSpec(start=(0.505, -0.45, 0.051), end=(0.505, 0.55, 0.051),
                 n_elements=2, E=1.0e6, radius=0.03),
        BeamSpec(start=(-0.5, 0.0, 0.0), end=(0.5, 0.0, 0.0),
                 n_elements=2, E=1.0e9, radius=0.02),
    ]
    dirichlet = [DirichletSpec(beam=1, node=i) for i in range(3)]
    for node in ("start", "end"):
        dirichlet += [
            DirichletSpec(beam=0, node=node, kind="ramp", components=(2,),
                          delta=(0.0, 0.0, -0.06, 0.0, 0.0, 0.0)),
            DirichletSpec(beam=0, node=node, kind="fixed",
                          components=(0, 1)),
        ]
    formulation = "line+endpoints" if enable_endpoints else "line"
    return Scenario(
        name="endpoint_stress",
        beams=beams,
        contact=ContactSpec(law="quadratic", epsilon=1.0e5, g_bar=0.001,
                            formulation=formulation),
        dirichlet=dirichlet,
        solver=SolverSpec(n_steps=8),
    )


def run_scenario(scenario: Scenario):
    """Build and execute a scenario; returns (setup, states, reports)."""
    setup = build(scenario)
    states, reports = run(setup)
    return setup, states, reports


class BeamSampler:
    """Map arc fractions along a beam to centerline points of a state.

    Instances are valid reference callables for
    :func:`beamsim.oracles.l2_error`, which is how refined numerical
    solutions serve as references in the convergence studies.
    """

    def __init__(self, mesh, q, beam: int = 0):
        self.mesh = mesh
        self.q = q
        self.elements = list(mesh.beams[beam].elements)
        self.s_start = np.array([mesh.elements[e].s_start
                                 for e in self.elements])
        self.l_ele = np.array([mesh.elements[e].l_ele
                               for e in self.elements])
        self.length = mesh.beams[beam].length

    def __call__(self, tau):
        scalar = np.ndim(tau) == 0
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        s = np.clip(tau, 0.0, 1.0) * self.length
        which = np.clip(np.searchsorted(self.s_start, s, side="right") - 1,
                        0, len(self.elements) - 1)
        points = np.empty((s.size, 3))
        for i, (si, ki) in enumerate(zip(s, which)):
            xi = 2.0 * (si - self.s_start[ki]) / self.l_ele[ki] - 1.0
            dofs = self.mesh.element_dofs(self.q, self.elements[ki])
            points[i] = evaluate(dofs, float(np.clip(xi, -1.0, 1.0))).r
        return points[0] if scalar else points


def observed_orders(errors) -> np.ndarray:
    """Convergence orders log2(e_i / e_{i+1}) for halved mesh sizes."""
    errors = np.asarray(errors, dtype=float)
    return np.log2(errors[:-1] / errors[1:])


def max_displacement(mesh, q) -> float:
    """Largest nodal translation relative to the initial state."""
    motion = (q - mesh.initial_state()).reshape(-1, 6)[:, :3]
    return float(np.linalg.norm(motion, axis=1).max())


def peak_displacement(mesh, states) -> float:
    """Largest nodal translation over a whole run history.

    The displacement scale of a load case: for the full-turn twisting
    studies the endpoints return to their start positions, so the
    final state alone understates how far the structure moved.
    """
    return max(max_displacement(mesh, state.q) for state in states)


def helix_max_displacement(ref, phase: float = 0.0,
                           n_samples: int = 2001) -> float:
    """Largest displacement between a straight beam and its helix."""
    tau = np.linspace(0.0, 1.0, n_samples)
    straight = np.stack([
        np.full(n_samples, ref.r_helix * np.cos(phase)),
        np.full(n_samples, ref.r_helix * np.sin(phase)),
        ref.length * tau,
    ], axis=-1)
    return float(np.linalg.norm(ref.centerline(tau, phase) - straight,
                                axis=1).max())


def gap_error_series(reports, g_ref: float) -> np.ndarray:
    """Signed mean relative gap error at active Gauss points per step."""
    return np.array([
        patch_error_metric([g.gap for g in report.gauss if g.force > 0.0],
                           g_ref)
        for report in reports
    ])


def force_profile(report):
    """Gauss point arc positions and force densities, sorted by s."""
    records = sorted(report.gauss, key=lambda g: g.s_slave)
    return (np.array([g.s_slave for g in records]),
            np.array([g.force for g in records]))


def jump_forces(report, s_jump: float, pad: float = 1e-9):
    """Largest force before and first force after a jump position."""
    s, force = force_profile(report)
    before = force[s < s_jump - pad]
    after = force[s >= s_jump - pad]
    return (float(before.max()) if before.size else 0.0,
            float(after[0]) if after.size else 0.0)


def axial_torque(mesh, state, nodes, about=(0.0, 0.0, 0.0),
                 axis=(0.0, 0.0, 1.0)) -> float:
    """Reaction torque of the given nodes' constraints about an axis."""
    dofs = np.concatenate([mesh.node_dof_indices(n) for n in nodes])
    _, moment = reaction_resultants(mesh, state.residual, state.q,
                                    dofs=dofs, about=about)
    return float(np.asarray(axis) @ moment)


def point_clearance(mesh, q, beam: int, point, radius_sum: float,
                    n_samples: int = 400) -> float:
    """Signed clearance between a beam centerline and a fixed point.

    Samples the beam densely and returns min distance minus the radius
    sum; negative values mean the surfaces overlap at that point.
    """
    sampler = BeamSampler(mesh, q, beam)
    tau = np.linspace(0.0, 1.0, n_samples)
    dist = np.linalg.norm(sampler(tau) - np.asarray(point), axis=1)
    return float(dist.min() - radius_sum)
