"""Global assembly, Newton solution, and displacement-driven stepping.

The global residual is the gradient of the total potential: internal
element forces plus contact forces minus external loads.  Prescribed
degrees of freedom are handled by row/column elimination, so Newton
iterates only on the free dofs and prescribed values hold bit-exactly.
Load steps move the prescribed dofs along user-defined paths (ramps,
circles, tables); a step that fails to converge is retried from its
midpoint, up to a fixed halving budget.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.spatial.transform import Rotation

from .beam_element import internal_force_and_stiffness, mass_matrix
from .contact import ContactConfig, ContactManager
from .geometry import arc_quantities, evaluate
from .projection import alpha_min, max_curvature_ratio

__all__ = [
    "SingularSystem", "NoConvergence", "SolverConfig", "GlobalState",
    "AssembledSystem", "assemble", "system_matrix", "linear_solve",
    "newton_solve", "DirichletEntry", "DirichletSchedule",
    "reaction_resultants", "curvature_ratio_bound", "StepReport",
    "load_step_driver",
]

#: Below this dof count the tangent is kept dense and factorized with
#: LAPACK; larger systems go through sparse LU.
DENSE_THRESHOLD = 300


def _attach_context(err, note):
    """Append location context to an exception message in place."""
    if hasattr(err, "add_note"):
        err.add_note(note)
    elif err.args and isinstance(err.args[0], str):
        err.args = (f"{err.args[0]} ({note})",) + err.args[1:]
    else:
        err.args = err.args + (note,)


class SingularSystem(Exception):
    """The tangent matrix could not be factorized (or produced NaNs)."""


class NoConvergence(Exception):
    """Newton iteration exhausted its budget.

    Attributes
    ----------
    residual_norms, increment_norms : list of float
        Max-norm history of the failed iteration.
    """

    def __init__(self, message, residual_norms=(), increment_norms=()):
        super().__init__(message)
        self.residual_norms = list(residual_norms)
        self.increment_norms = list(increment_norms)


@dataclass
class SolverConfig:
    """Newton and load-stepping controls.

    Convergence requires both the residual max-norm and the increment
    max-norm on the free dofs to drop below their tolerances.
    """

    tol_residual: float = 1e-7
    tol_increment: float = 1e-7
    max_iterations: int = 50
    max_halvings: int = 3
    dense_threshold: int = DENSE_THRESHOLD
    mcs: bool = True
    #: Optional max-norm cap on a Newton increment.  Penalty contact
    #: separates equilibrium branches by a thin energy barrier (the
    #: beam diameter); an unguarded iterate can step straight through
    #: it and land on the far branch.  A cap below the barrier width
    #: keeps the iteration on the branch it started from.
    max_increment: float = None


@dataclass
class GlobalState:
    """Converged (or current) global configuration."""

    q: np.ndarray
    step: float = 0.0
    converged: bool = False
    residual_norms: list = field(default_factory=list)
    increment_norms: list = field(default_factory=list)
    contact: object = None
    residual: np.ndarray = None

    @property
    def iterations(self) -> int:
        return len(self.increment_norms)


@dataclass
class AssembledSystem:
    """Residual vector plus the tangent in scatter-block form."""

    residual: np.ndarray
    blocks: list
    contact: object = None


def assemble(mesh, q, contact=None, external_force=None, mcs=True,
             acceleration=None):
    """Residual and tangent blocks of the mesh at state ``q``.

    Parameters
    ----------
    contact : ContactManager or None
        Evaluated at ``q`` when given; its records are kept on the
        returned system for reporting.
    external_force : (n_dof,) array or None
        Consistent global load vector, subtracted from the residual.
    acceleration : (n_dof,) array or None
        Adds the inertia term (consistent mass times acceleration) to
        the residual; the static tangent is returned unchanged.
    """
    n_dof = mesh.n_dof
    residual = np.zeros(n_dof)
    blocks = []
    for beam in mesh.beams:
        for element in beam.elements:
            dofs = mesh.element_dofs(q, element)
            idx = mesh.element_dof_indices(element)
            try:
                r_ele, k_ele = internal_force_and_stiffness(
                    dofs, beam.material, mcs=mcs)
                if acceleration is not None:
                    r_ele = r_ele + mass_matrix(dofs, beam.material) @ \
                        acceleration[idx]
            except Exception as err:
                _attach_context(err, f"while assembling element "
                                     f"{element} of beam {beam.index}")
                raise
            residual[idx] += r_ele
            blocks.append((idx, idx, k_ele))

    evaluation = None
    if contact is not None:
        evaluation = contact.evaluate(q)
        residual += evaluation.residual
        blocks.extend(evaluation.blocks)

    if external_force is not None:
        residual -= external_force
    return AssembledSystem(residual, blocks, evaluation)


def system_matrix(blocks, n_dof, dense_threshold=DENSE_THRESHOLD):
    """Scatter 12x12 blocks into a dense array or a CSR matrix."""
    if n_dof < dense_threshold:
        matrix = np.zeros((n_dof, n_dof))
        for rows, cols, block in blocks:
            matrix[np.ix_(rows, cols)] += block
        return matrix
    size = sum(block.size for _, _, block in blocks)
    data = np.empty(size)
    row_idx = np.empty(size, dtype=np.int64)
    col_idx = np.empty(size, dtype=np.int64)
    at = 0
    for rows, cols, block in blocks:
        n = block.size
        row_idx[at:at + n] = np.repeat(rows, len(cols))
        col_idx[at:at + n] = np.tile(cols, len(rows))
        data[at:at + n] = block.ravel()
        at += n
    return sp.csr_matrix((data, (row_idx, col_idx)), shape=(n_dof, n_dof))


def linear_solve(matrix, rhs):
    """Newton increment solving ``matrix @ delta = -rhs``.

    Dense matrices use LAPACK, sparse ones a direct LU factorization.
    A failed factorization or a non-finite solution raises
    ``SingularSystem`` with a condition-number diagnostic.
    """
    if sp.issparse(matrix):
        try:
            with np.errstate(invalid="ignore", divide="ignore"), \
                    warnings.catch_warnings():
                warnings.simplefilter("ignore", spla.MatrixRankWarning)
                delta = spla.spsolve(matrix.tocsc(), -rhs)
        except RuntimeError as err:
            raise SingularSystem(f"sparse factorization failed: {err}") \
                from err
    else:
        try:
            delta = np.linalg.solve(matrix, -rhs)
        except np.linalg.LinAlgError as err:
            raise SingularSystem(
                f"dense solve failed ({err}); "
                f"condition estimate {_condition_estimate(matrix):.3e}"
            ) from err
    if not np.all(np.isfinite(delta)):
        raise SingularSystem(
            "solution contains non-finite entries; condition estimate "
            f"{_condition_estimate(matrix):.3e}")
    return delta


def _condition_estimate(matrix) -> float:
    try:
        if sp.issparse(matrix):
            matrix = matrix.toarray()
        return float(np.linalg.cond(matrix))
    except Exception:
        return np.inf


def newton_solve(system, q0, free, config=None) -> GlobalState:
    """Newton iteration on the free dofs of ``system``.

    Parameters
    ----------
    system : callable
        Maps a state vector to an ``AssembledSystem``; re-evaluated
        every iteration so contact sets may change.
    q0 : (n_dof,) array
        Start vector with prescribed dofs already set; they are never
        touched.
    free : (n_free,) int array
        Indices of the unknowns.

    Returns
    -------
    GlobalState
        With the norm history and the final contact evaluation.

    Raises
    ------
    NoConvergence
        After ``max_iterations`` without meeting both tolerances.
    SingularSystem
        Propagated from the linear solver.
    """
    config = config or SolverConfig()
    q = np.array(q0, dtype=float)
    free = np.asarray(free, dtype=np.intp)
    state = GlobalState(q=q)
    increment_norm = np.inf
    for _ in range(config.max_iterations):
        assembled = system(q)
        residual_norm = float(np.max(np.abs(assembled.residual[free]),
                                     initial=0.0))
        state.residual_norms.append(residual_norm)
        if (residual_norm < config.tol_residual
                and increment_norm < config.tol_increment):
            state.converged = True
            state.contact = assembled.contact
            state.residual = assembled.residual
            return state
        if free.size == 0:
            delta = np.zeros(0)
        else:
            matrix = system_matrix(assembled.blocks, q.size,
                                   config.dense_threshold)
            if sp.issparse(matrix):
                reduced = matrix[free][:, free]
            else:
                reduced = matrix[np.ix_(free, free)]
            delta = linear_solve(reduced, assembled.residual[free])
            if config.max_increment is not None:
                largest = float(np.max(np.abs(delta), initial=0.0))
                if largest > config.max_increment:
                    delta *= config.max_increment / largest
            q[free] += delta
        increment_norm = float(np.max(np.abs(delta), initial=0.0))
        state.increment_norms.append(increment_norm)
    raise NoConvergence(
        f"no convergence in {config.max_iterations} iterations "
        f"(last residual {state.residual_norms[-1]:.3e}, "
        f"last increment {state.increment_norms[-1]:.3e})",
        state.residual_norms, state.increment_norms)


def _unit(v):
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise ValueError("axis direction must be nonzero")
    return v / nrm


@dataclass(frozen=True)
class DirichletEntry:
    """Prescribed motion of one node.

    Kinds
    -----
    ``fixed``
        Hold the components at their (possibly already transformed)
        values.
    ``ramp``
        Add ``fraction * delta`` to the six nodal values.
    ``circle``
        Rotate position and tangent by ``fraction * angle`` about the
        axis through ``point`` with direction ``axis``.
    ``table``
        Interpolate absolute nodal values between ``(step, value[6])``
        rows.

    ``fraction`` grows linearly from 0 at step ``start`` to 1 at step
    ``stop`` (the whole run by default).  Entries for the same node
    compose in order: a later rotation acts on the ramped/rotated
    values of earlier entries, which is how a sub-bundle twist is
    nested inside a global one.  Only the dofs listed in
    ``components`` are actually constrained.
    """

    node: int
    kind: str = "fixed"
    components: tuple = (0, 1, 2, 3, 4, 5)
    delta: tuple = None
    point: tuple = None
    axis: tuple = None
    angle: float = 0.0
    table: tuple = None
    start: float = 0.0
    stop: float = None

    def __post_init__(self):
        kinds = ("fixed", "ramp", "circle", "table")
        if self.kind not in kinds:
            raise ValueError(f"unknown entry kind {self.kind!r}; "
                             f"choose one of {kinds}")
        if self.kind == "ramp" and self.delta is None:
            raise ValueError("ramp entry needs a delta")
        if self.kind == "circle" and (self.point is None
                                      or self.axis is None):
            raise ValueError("circle entry needs point and axis")
        if self.kind == "table" and self.table is None:
            raise ValueError("table entry needs rows")

    def fraction(self, x, n_steps):
        stop = n_steps if self.stop is None else self.stop
        if stop <= self.start:
            return 1.0 if x >= stop else 0.0
        return float(np.clip((x - self.start) / (stop - self.start),
                             0.0, 1.0))

    def apply(self, values, x, n_steps):
        """Transformed copy of the six nodal values at step ``x``."""
        values = np.array(values, dtype=float)
        if self.kind == "fixed":
            return values
        frac = self.fraction(x, n_steps)
        if self.kind == "ramp":
            return values + frac * np.asarray(self.delta, dtype=float)
        if self.kind == "circle":
            rot = Rotation.from_rotvec(
                _unit(self.axis) * (frac * self.angle)).as_matrix()
            point = np.asarray(self.point, dtype=float)
            values[:3] = point + rot @ (values[:3] - point)
            values[3:] = rot @ values[3:]
            return values
        rows = np.asarray(self.table, dtype=float)
        for k in range(6):
            values[k] = np.interp(x, rows[:, 0], rows[:, 1 + k])
        return values


class DirichletSchedule:
    """Prescribed dof values as a function of a continuous step index.

    The schedule is anchored to the mesh reference state: at step 0
    every entry reproduces the initial values exactly.  Evaluating at
    fractional steps is what makes midpoint retries follow the true
    path (a half step of a circle entry stays on the circle).
    """

    def __init__(self, mesh, entries, n_steps):
        if n_steps < 1:
            raise ValueError("need at least one step")
        self.mesh = mesh
        self.entries = list(entries)
        self.n_steps = int(n_steps)
        q0 = mesh.initial_state()
        self._base = {}
        per_node = {}
        for entry in self.entries:
            if not 0 <= entry.node < mesh.n_nodes:
                raise ValueError(f"entry refers to unknown node "
                                 f"{entry.node}")
            per_node.setdefault(entry.node, []).append(entry)
            self._base[entry.node] = q0[mesh.node_dof_indices(entry.node)]
        self._per_node = per_node
        dofs = []
        for node, entries_here in sorted(per_node.items()):
            comps = sorted({c for e in entries_here for c in e.components})
            dofs.extend(mesh.node_dof_indices(node)[comps])
        self.dofs = np.array(sorted(dofs), dtype=np.intp)

    def free_dofs(self):
        mask = np.ones(self.mesh.n_dof, dtype=bool)
        mask[self.dofs] = False
        return np.nonzero(mask)[0]

    def nodal_values(self, x):
        """Node -> transformed six-vector at (fractional) step ``x``."""
        out = {}
        for node, entries_here in self._per_node.items():
            values = self._base[node].copy()
            for entry in entries_here:
                values = entry.apply(values, x, self.n_steps)
            out[node] = values
        return out

    def apply(self, q, x):
        """Write the prescribed values for step ``x`` into ``q``."""
        for node, values in self.nodal_values(x).items():
            comps = sorted({c for e in self._per_node[node]
                            for c in e.components})
            q[self.mesh.node_dof_indices(node)[comps]] = values[comps]
        return q


def reaction_resultants(mesh, residual, q, dofs=None, about=(0.0, 0.0, 0.0)):
    """Force and moment resultants carried by the given dofs.

    At a converged state the residual on the prescribed dofs equals
    the reaction.  The moment collects ``(d - about) x F_d + t x F_t``
    per node, the torque conjugate to a rigid rotation of the
    constrained positions and tangents.
    """
    picked = np.zeros(mesh.n_dof)
    if dofs is None:
        picked[:] = residual
    else:
        picked[dofs] = residual[dofs]
    force = np.zeros(3)
    moment = np.zeros(3)
    about = np.asarray(about, dtype=float)
    for node in range(mesh.n_nodes):
        idx = mesh.node_dof_indices(node)
        f_d = picked[idx[:3]]
        f_t = picked[idx[3:]]
        force += f_d
        moment += np.cross(q[idx[:3]] - about, f_d)
        moment += np.cross(q[idx[3:]], f_t)
    return force, moment


def curvature_ratio_bound(mesh, q, n_samples=5):
    """Largest radius * geometric curvature over all elements.

    Sampled at ``n_samples`` interior points per element; feeds the
    lower bound on admissible contact angles.
    """
    mu_max = 0.0
    samples = np.linspace(-1.0, 1.0, n_samples + 2)[1:-1]
    for beam in mesh.beams:
        for element in beam.elements:
            dofs = mesh.element_dofs(q, element)
            for xi in samples:
                arc = arc_quantities(evaluate(dofs, xi), dofs.l_ele)
                mu_max = max(mu_max, max_curvature_ratio(
                    beam.radius, arc.kappa_geom))
    return mu_max


@dataclass
class StepReport:
    """Diagnostics of one converged load step."""

    step: float
    iterations: int
    residual_norms: list
    increment_norms: list
    intermediate: bool = False
    halvings_used: int = 0
    n_active: int = 0
    min_gap: float = np.inf
    min_angle: float = np.inf
    alpha_bound: float = 0.0
    gauss: list = field(default_factory=list)
    endpoints: list = field(default_factory=list)
    points: list = field(default_factory=list)
    reaction_force: np.ndarray = None
    reaction_moment: np.ndarray = None


def load_step_driver(mesh, schedule, contact=None, config=None,
                     external_force=None, moment_about=(0.0, 0.0, 0.0)):
    """March the prescribed dofs through the schedule.

    Parameters
    ----------
    contact : ContactConfig, ContactManager, or None
    external_force : (n_dof,) array or None
        Held constant over all steps.

    Returns
    -------
    (states, reports)
        One converged ``GlobalState`` and one ``StepReport`` per
        target reached, including intermediate midpoint targets
        inserted by step halving (flagged on the report).

    Raises
    ------
    NoConvergence
        When a step still fails after ``max_halvings`` midpoint
        insertions (budget counted over the whole run).
    """
    config = config or SolverConfig()
    if isinstance(contact, ContactConfig):
        contact = ContactManager(mesh, contact)
    free = schedule.free_dofs()
    fixed = schedule.dofs

    def system(q):
        return assemble(mesh, q, contact=contact,
                        external_force=external_force, mcs=config.mcs)

    q = mesh.initial_state()
    states, reports = [], []
    targets = [float(k) for k in range(1, schedule.n_steps + 1)]
    halvings_used = 0
    x_prev = 0.0
    while targets:
        x = targets[0]
        q_trial = q.copy()
        schedule.apply(q_trial, x)
        try:
            state = newton_solve(system, q_trial, free, config)
        except NoConvergence as err:
            if halvings_used >= config.max_halvings:
                _attach_context(
                    err, f"step {x:g} failed with the halving budget "
                         f"({config.max_halvings}) exhausted")
                raise
            halvings_used += 1
            targets.insert(0, 0.5 * (x_prev + x))
            continue
        state.step = x
        q = state.q
        x_prev = x
        targets.pop(0)
        report = StepReport(
            step=x,
            iterations=state.iterations,
            residual_norms=state.residual_norms,
            increment_norms=state.increment_norms,
            intermediate=not float(x).is_integer(),
            halvings_used=halvings_used,
        )
        evaluation = state.contact
        if evaluation is not None:
            report.n_active = evaluation.n_active
            report.min_gap = evaluation.min_gap
            report.min_angle = evaluation.min_angle
            report.gauss = evaluation.gauss
            report.endpoints = evaluation.endpoints
            report.points = evaluation.points
            report.alpha_bound = alpha_min(curvature_ratio_bound(mesh, q))
        force, moment = reaction_resultants(mesh, state.residual, q,
                                            dofs=fixed, about=moment_about)
        report.reaction_force = force
        report.reaction_moment = moment
        states.append(state)
        reports.append(report)
    return states, reports
