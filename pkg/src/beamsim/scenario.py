"""Scenario files: declarative run descriptions and their assembly.

A scenario bundles beams (straight segments with material data and
optional loads), the contact configuration, a Dirichlet schedule, and
solver controls into one JSON-serializable object.  ``build`` turns it
into the mesh/schedule/config objects the load-step driver consumes;
``run`` executes it.  Parsing is strict: unknown or ill-typed keys
raise ``ConfigError`` naming the offending key.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .assembly_solver import (
    DirichletEntry,
    DirichletSchedule,
    SolverConfig,
    load_step_driver,
)
from .beam_element import Material, external_force as element_load
from .contact import ContactConfig, ContactManager, PenaltyLaw
from .mesh import Mesh

__all__ = [
    "ConfigError", "BeamSpec", "DirichletSpec", "NodalForce",
    "ContactSpec", "SolverSpec", "OutputSpec", "Scenario",
    "scenario_from_dict", "scenario_to_dict", "load_scenario",
    "save_scenario", "RunSetup", "build", "run",
]


class ConfigError(Exception):
    """A scenario file violates the schema; the message names the key."""


def _require(mapping, key, kind, context):
    if key not in mapping:
        raise ConfigError(f"missing key '{context}{key}'")
    value = mapping[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(
            f"key '{context}{key}' must be {kind.__name__}, "
            f"got {type(value).__name__}")
    return value


def _optional(mapping, key, default=None):
    return mapping.get(key, default)

def _vector(mapping, key, context, size=3, required=True):
    if key not in mapping:
        if required:
            raise ConfigError(f"missing key '{context}{key}'")
        return None
    value = mapping[key]
    if (not isinstance(value, (list, tuple))
            or len(value) != size
            or not all(isinstance(v, (int, float)) for v in value)):
        raise ConfigError(
            f"key '{context}{key}' must be a list of {size} numbers")
    return tuple(float(v) for v in value)


def _check_keys(mapping, allowed, context):
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown key '{context}{key}'")


@dataclass(frozen=True)
class BeamSpec:
    """A straight beam: endpoints, subdivision, and material."""

    start: tuple
    end: tuple
    n_elements: int
    E: float
    radius: float
    rho: float = 0.0
    fractions: tuple = None
    line_load: tuple = None


@dataclass(frozen=True)
class DirichletSpec:
    """One schedule entry addressed by (beam, node-on-beam)."""

    beam: int
    node: object  # "start", "end", or a node index along the beam
    kind: str = "fixed"
    components: tuple = (0, 1, 2, 3, 4, 5)
    delta: tuple = None
    point: tuple = None
    axis: tuple = None
    angle: float = 0.0
    table: tuple = None
    start: float = 0.0
    stop: float = None


@dataclass(frozen=True)
class NodalForce:
    beam: int
    node: object
    force: tuple


@dataclass(frozen=True)
class ContactSpec:
    law: str = "linear"
    epsilon: float = 1.0
    g_bar: float = None
    n_intervals: int = 1
    n_gauss: int = 5
    segmentation: bool = True
    formulation: str = "line+endpoints"
    search_factor: float = 2.0
    search_margin: float = 0.0
    enabled: bool = True


@dataclass(frozen=True)
class SolverSpec:
    n_steps: int = 1
    tol_residual: float = 1e-7
    tol_increment: float = 1e-7
    max_iterations: int = 50
    max_halvings: int = 3
    max_increment: float = None


@dataclass(frozen=True)
class OutputSpec:
    """What the run report collects beyond convergence histories."""

    gauss: bool = True
    endpoints: bool = True
    reactions: bool = True
    l2: dict = None
    torque_point: tuple = None
    torque_axis: tuple = None


@dataclass
class Scenario:
    name: str
    beams: list
    contact: ContactSpec
    dirichlet: list
    solver: SolverSpec = field(default_factory=SolverSpec)
    forces: list = field(default_factory=list)
    output: OutputSpec = field(default_factory=OutputSpec)


_BEAM_KEYS = {"start", "end", "n_elements", "E", "radius", "rho",
              "fractions", "line_load"}
_DIRICHLET_KEYS = {"beam", "node", "kind", "components", "delta", "point",
                   "axis", "angle", "table", "start", "stop"}
_CONTACT_KEYS = {"law", "epsilon", "g_bar", "n_intervals", "n_gauss",
                 "segmentation", "formulation", "search_factor",
                 "search_margin", "enabled"}
_SOLVER_KEYS = {"n_steps", "tol_residual", "tol_increment",
                "max_iterations", "max_halvings", "max_increment"}
_OUTPUT_KEYS = {"gauss", "endpoints", "reactions", "l2", "torque_point",
                "torque_axis"}
_TOP_KEYS = {"name", "beams", "contact", "dirichlet", "solver", "forces",
             "output"}


def _parse_beam(data, i) -> BeamSpec:
    ctx = f"beams[{i}]."
    _check_keys(data, _BEAM_KEYS, ctx)
    n_elements = _require(data, "n_elements", int, ctx)
    if n_elements < 1:
        raise ConfigError(f"key '{ctx}n_elements' must be >= 1")
    radius = _require(data, "radius", float, ctx)
    modulus = _require(data, "E", float, ctx)
    if radius <= 0.0 or modulus <= 0.0:
        raise ConfigError(f"key '{ctx}radius'/'{ctx}E' must be positive")
    fractions = _optional(data, "fractions")
    return BeamSpec(
        start=_vector(data, "start", ctx),
        end=_vector(data, "end", ctx),
        n_elements=n_elements,
        E=modulus,
        radius=radius,
        rho=float(_optional(data, "rho", 0.0)),
        fractions=tuple(fractions) if fractions is not None else None,
        line_load=_vector(data, "line_load", ctx, required=False),
    )


def _parse_node_ref(value, context):
    if value in ("start", "end") or isinstance(value, int):
        return value
    raise ConfigError(
        f"key '{context}node' must be 'start', 'end', or an integer")


def _parse_dirichlet(data, i) -> DirichletSpec:
    ctx = f"dirichlet[{i}]."
    _check_keys(data, _DIRICHLET_KEYS, ctx)
    kind = _optional(data, "kind", "fixed")
    if kind not in ("fixed", "ramp", "circle", "table"):
        raise ConfigError(f"key '{ctx}kind' must be one of "
                          f"fixed/ramp/circle/table, got {kind!r}")
    components = _optional(data, "components", [0, 1, 2, 3, 4, 5])
    if (not isinstance(components, (list, tuple))
            or not all(isinstance(c, int) and 0 <= c < 6
                       for c in components)):
        raise ConfigError(f"key '{ctx}components' must be dof indices 0-5")
    table = _optional(data, "table")
    return DirichletSpec(
        beam=_require(data, "beam", int, ctx),
        node=_parse_node_ref(_require(data, "node", object, ctx), ctx),
        kind=kind,
        components=tuple(components),
        delta=_vector(data, "delta", ctx, size=6,
                      required=False),
        point=_vector(data, "point", ctx, required=False),
        axis=_vector(data, "axis", ctx, required=False),
        angle=float(_optional(data, "angle", 0.0)),
        table=tuple(tuple(row) for row in table) if table else None,
        start=float(_optional(data, "start", 0.0)),
        stop=(float(data["stop"]) if data.get("stop") is not None
              else None),
    )


def _parse_contact(data) -> ContactSpec:
    ctx = "contact."
    _check_keys(data, _CONTACT_KEYS, ctx)
    law = _optional(data, "law", "linear")
    if law not in ("linear", "quadratic"):
        raise ConfigError(f"key '{ctx}law' must be linear or quadratic")
    epsilon = _require(data, "epsilon", float, ctx)
    if epsilon <= 0.0:
        raise ConfigError(f"key '{ctx}epsilon' must be positive")
    formulation = _optional(data, "formulation", "line+endpoints")
    if formulation not in ("point", "line", "line+endpoints"):
        raise ConfigError(f"key '{ctx}formulation' must be point, line, "
                          f"or line+endpoints")
    g_bar = _optional(data, "g_bar")
    if law == "quadratic" and g_bar is None:
        raise ConfigError(f"quadratic law needs key '{ctx}g_bar'")
    return ContactSpec(
        law=law,
        epsilon=epsilon,
        g_bar=float(g_bar) if g_bar is not None else None,
        n_intervals=int(_optional(data, "n_intervals", 1)),
        n_gauss=int(_optional(data, "n_gauss", 5)),
        segmentation=bool(_optional(data, "segmentation", True)),
        formulation=formulation,
        search_factor=float(_optional(data, "search_factor", 2.0)),
        search_margin=float(_optional(data, "search_margin", 0.0)),
        enabled=bool(_optional(data, "enabled", True)),
    )


def scenario_from_dict(data) -> Scenario:
    """Validate a parsed JSON object into a Scenario."""
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object")
    _check_keys(data, _TOP_KEYS, "")
    beams_raw = _require(data, "beams", list, "")
    if not beams_raw:
        raise ConfigError("key 'beams' must list at least one beam")
    beams = [_parse_beam(b, i) for i, b in enumerate(beams_raw)]

    contact = _parse_contact(_require(data, "contact", dict, ""))

    dirichlet = [_parse_dirichlet(d, i)
                 for i, d in enumerate(_require(data, "dirichlet", list,
                                                ""))]
    for i, entry in enumerate(dirichlet):
        if not 0 <= entry.beam < len(beams):
            raise ConfigError(
                f"key 'dirichlet[{i}].beam' refers to unknown beam "
                f"{entry.beam}")

    solver_raw = _optional(data, "solver", {})
    _check_keys(solver_raw, _SOLVER_KEYS, "solver.")
    solver = SolverSpec(
        n_steps=int(_optional(solver_raw, "n_steps", 1)),
        tol_residual=float(_optional(solver_raw, "tol_residual", 1e-7)),
        tol_increment=float(_optional(solver_raw, "tol_increment", 1e-7)),
        max_iterations=int(_optional(solver_raw, "max_iterations", 50)),
        max_halvings=int(_optional(solver_raw, "max_halvings", 3)),
        max_increment=(float(solver_raw["max_increment"])
                       if solver_raw.get("max_increment") is not None
                       else None),
    )
    if solver.n_steps < 1:
        raise ConfigError("key 'solver.n_steps' must be >= 1")

    forces = []
    for i, f in enumerate(_optional(data, "forces", [])):
        ctx = f"forces[{i}]."
        _check_keys(f, {"beam", "node", "force"}, ctx)
        beam = _require(f, "beam", int, ctx)
        if not 0 <= beam < len(beams):
            raise ConfigError(f"key '{ctx}beam' refers to unknown beam "
                              f"{beam}")
        forces.append(NodalForce(
            beam=beam,
            node=_parse_node_ref(_require(f, "node", object, ctx), ctx),
            force=_vector(f, "force", ctx)))

    output_raw = _optional(data, "output", {})
    _check_keys(output_raw, _OUTPUT_KEYS, "output.")
    output = OutputSpec(
        gauss=bool(_optional(output_raw, "gauss", True)),
        endpoints=bool(_optional(output_raw, "endpoints", True)),
        reactions=bool(_optional(output_raw, "reactions", True)),
        l2=_optional(output_raw, "l2"),
        torque_point=_vector(output_raw, "torque_point", "output.",
                             required=False),
        torque_axis=_vector(output_raw, "torque_axis", "output.",
                            required=False),
    )

    return Scenario(
        name=str(_optional(data, "name", "scenario")),
        beams=beams, contact=contact, dirichlet=dirichlet,
        solver=solver, forces=forces, output=output)


def _strip_none(obj):
    if isinstance(obj, dict):
        return {k: _strip_none(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, (list, tuple)):
        return [_strip_none(v) for v in obj]
    return obj


def scenario_to_dict(scenario: Scenario) -> dict:
    data = asdict(scenario)
    data["beams"] = [_strip_none(asdict(b)) for b in scenario.beams]
    data["dirichlet"] = [_strip_none(asdict(d))
                         for d in scenario.dirichlet]
    data["forces"] = [_strip_none(asdict(f)) for f in scenario.forces]
    data["contact"] = _strip_none(asdict(scenario.contact))
    data["solver"] = asdict(scenario.solver)
    data["output"] = _strip_none(asdict(scenario.output))
    return data


def load_scenario(path) -> Scenario:
    with open(path) as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid JSON in {path}: {err}") from err
    return scenario_from_dict(data)


def save_scenario(scenario: Scenario, path):
    with open(path, "w") as handle:
        json.dump(scenario_to_dict(scenario), handle, indent=2)
        handle.write("\n")


@dataclass
class RunSetup:
    """Everything the load-step driver needs, plus the scenario."""

    scenario: Scenario
    mesh: Mesh
    schedule: DirichletSchedule
    contact: ContactConfig
    solver: SolverConfig
    external_force: np.ndarray


def _resolve_node(mesh, beams, spec_beam, spec_node, context):
    nodes = mesh.beams[spec_beam].nodes
    if spec_node == "start":
        return nodes[0]
    if spec_node == "end":
        return nodes[-1]
    if not 0 <= spec_node < len(nodes):
        raise ConfigError(
            f"key '{context}node' is out of range for beam {spec_beam}")
    return nodes[spec_node]


def build(scenario: Scenario) -> RunSetup:
    """Instantiate mesh, schedule, and configs from a scenario."""
    mesh = Mesh()
    for spec in scenario.beams:
        material = Material.circular(E=spec.E, R=spec.radius, rho=spec.rho)
        mesh.add_straight_beam(spec.start, spec.end, spec.n_elements,
                               material, fractions=spec.fractions)

    entries = []
    for i, spec in enumerate(scenario.dirichlet):
        node = _resolve_node(mesh, scenario.beams, spec.beam, spec.node,
                             f"dirichlet[{i}].")
        entries.append(DirichletEntry(
            node=node, kind=spec.kind, components=spec.components,
            delta=spec.delta, point=spec.point, axis=spec.axis,
            angle=spec.angle, table=spec.table, start=spec.start,
            stop=spec.stop))
    schedule = DirichletSchedule(mesh, entries, scenario.solver.n_steps)

    law = PenaltyLaw(scenario.contact.law, scenario.contact.epsilon,
                     g_bar=scenario.contact.g_bar or 0.0)
    contact = ContactConfig(
        law=law,
        n_intervals=scenario.contact.n_intervals,
        n_gauss=scenario.contact.n_gauss,
        segmentation=scenario.contact.segmentation,
        formulation=scenario.contact.formulation,
        search_factor=scenario.contact.search_factor,
        search_margin=scenario.contact.search_margin,
    )

    solver = SolverConfig(
        tol_residual=scenario.solver.tol_residual,
        tol_increment=scenario.solver.tol_increment,
        max_iterations=scenario.solver.max_iterations,
        max_halvings=scenario.solver.max_halvings,
        max_increment=scenario.solver.max_increment,
    )

    q0 = mesh.initial_state()
    load = np.zeros(mesh.n_dof)
    any_load = False
    for beam in mesh.beams:
        spec = scenario.beams[beam.index]
        if spec.line_load is None:
            continue
        any_load = True
        for element in beam.elements:
            dofs = mesh.element_dofs(q0, element)
            load[mesh.element_dof_indices(element)] += element_load(
                dofs, line_force=np.asarray(spec.line_load))
    for i, nodal in enumerate(scenario.forces):
        any_load = True
        node = _resolve_node(mesh, scenario.beams, nodal.beam, nodal.node,
                             f"forces[{i}].")
        load[mesh.node_dof_indices(node)[:3]] += nodal.force

    return RunSetup(
        scenario=scenario, mesh=mesh, schedule=schedule, contact=contact,
        solver=solver, external_force=load if any_load else None)


def run(setup: RunSetup):
    """Execute a built scenario; returns (states, step reports)."""
    manager = None
    if setup.scenario.contact.enabled:
        manager = ContactManager(setup.mesh, setup.contact)
    about = setup.scenario.output.torque_point or (0.0, 0.0, 0.0)
    return load_step_driver(
        setup.mesh, setup.schedule, contact=manager, config=setup.solver,
        external_force=setup.external_force, moment_about=about)
