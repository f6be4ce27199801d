"""Contact orchestration over a mesh.

The manager runs the broad phase, groups candidates by (slave
element, master beam), evaluates line contact with segmented
quadrature plus the endpoint cap cases, and returns the global
residual together with dense 12x12 tangent blocks ready for sparse
assembly.  The beam listed first in the mesh acts as the slave of a
pair; endpoint contacts are deduplicated so one beam end exerts at
most one force pair per opposing beam.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..projection import NoConvergence, SingularJacobian
from .endpoint import endpoint_to_endpoint, endpoint_to_line, line_to_endpoint
from .line import SLAVE, line_contact
from .penalty import PenaltyLaw
from .point import point_contact
from .search import candidate_pairs

__all__ = ["ContactConfig", "GaussRecord", "EndpointRecord",
           "ContactEvaluation", "ContactManager"]


@dataclass
class ContactConfig:
    """Parameters of the contact evaluation.

    The broad-phase pair search radius is
    ``search_factor * (R1 + R2) + activation gap + search_margin``.
    """

    law: PenaltyLaw
    endpoint_law: PenaltyLaw = None
    n_intervals: int = 1
    n_gauss: int = 5
    enable_line: bool = True
    enable_endpoints: bool = True
    enable_point: bool = False
    segmentation: bool = True
    formulation: str = None
    search_factor: float = 2.0
    search_margin: float = 0.0

    def __post_init__(self):
        if self.endpoint_law is None:
            self.endpoint_law = self.law
        if self.n_intervals < 1 or self.n_gauss < 1:
            raise ValueError("need at least one interval and Gauss point")
        if self.formulation is not None:
            modes = {
                "point": (False, False, True),
                "line": (True, False, False),
                "line+endpoints": (True, True, False),
            }
            if self.formulation not in modes:
                raise ValueError(
                    f"unknown contact formulation {self.formulation!r}; "
                    f"choose one of {sorted(modes)}")
            (self.enable_line, self.enable_endpoints,
             self.enable_point) = modes[self.formulation]


@dataclass
class GaussRecord:
    """One slave Gauss point: where it sits and what it carries."""

    element: int
    master_element: int
    s_slave: float
    xi: float
    eta: float
    gap: float
    force: float
    angle: float


@dataclass
class EndpointRecord:
    kind: str
    slave_element: int
    master_element: int
    xi: float
    eta: float
    gap: float
    force: float
    angle: float


@dataclass
class ContactEvaluation:
    residual: np.ndarray
    blocks: list = field(default_factory=list)
    gauss: list = field(default_factory=list)
    endpoints: list = field(default_factory=list)
    points: list = field(default_factory=list)
    pairs: list = field(default_factory=list)

    @property
    def min_gap(self) -> float:
        gaps = ([g.gap for g in self.gauss]
                + [e.gap for e in self.endpoints]
                + [p.gap for p in self.points])
        return min(gaps) if gaps else np.inf

    @property
    def n_active(self) -> int:
        return (sum(1 for g in self.gauss if g.force > 0.0)
                + len(self.endpoints) + len(self.points))

    @property
    def min_angle(self) -> float:
        angles = ([g.angle for g in self.gauss if g.force > 0.0]
                  + [e.angle for e in self.endpoints]
                  + [p.angle for p in self.points])
        return min(angles) if angles else np.inf


class ContactManager:
    def __init__(self, mesh, config: ContactConfig):
        self.mesh = mesh
        self.config = config
        self._local_index = {}
        for beam in mesh.beams:
            for local, element in enumerate(beam.elements):
                self._local_index[element] = local
        self._end_signs = {}
        for beam in mesh.beams:
            for element, sign in mesh.beam_ends(beam.index):
                self._end_signs.setdefault(element, []).append(sign)

    def _half_radius(self, beam: int) -> float:
        cfg = self.config
        return (cfg.search_factor * self.mesh.beams[beam].radius
                + 0.5 * (cfg.law.activation_gap + cfg.search_margin))

    def evaluate(self, q: np.ndarray) -> ContactEvaluation:
        mesh = self.mesh
        cfg = self.config
        out = ContactEvaluation(residual=np.zeros(mesh.n_dof))
        out.pairs = candidate_pairs(mesh, q, self._half_radius)
        if not out.pairs:
            return out

        dofs_cache = {}

        def dofs(e):
            if e not in dofs_cache:
                dofs_cache[e] = mesh.element_dofs(q, e)
            return dofs_cache[e]

        def indices(e):
            return mesh.element_dof_indices(e)

        def add_pair_blocks(e1, e2, pb):
            idx1, idx2 = indices(e1), indices(e2)
            out.residual[idx1] += pb.r1
            out.residual[idx2] += pb.r2
            out.blocks.append((idx1, idx1, pb.k[:12, :12]))
            out.blocks.append((idx1, idx2, pb.k[:12, 12:]))
            out.blocks.append((idx2, idx1, pb.k[12:, :12]))
            out.blocks.append((idx2, idx2, pb.k[12:, 12:]))

        line_groups = {}
        slave_end_groups = {}
        master_end_groups = {}
        end_end_pairs = []
        for e1, e2 in out.pairs:
            beam2 = mesh.elements[e2].beam
            local2 = self._local_index[e2]
            line_groups.setdefault((e1, beam2), set()).add(local2)
            for sign in self._end_signs.get(e1, ()):
                slave_end_groups.setdefault((e1, sign, beam2), set()).add(e2)
            for sign in self._end_signs.get(e2, ()):
                master_end_groups.setdefault((e2, sign,
                                              mesh.elements[e1].beam),
                                             set()).add(e1)
            for s1 in self._end_signs.get(e1, ()):
                for s2 in self._end_signs.get(e2, ()):
                    end_end_pairs.append((e1, s1, e2, s2))

        if cfg.enable_line:
            for (e_s, beam_m), local in sorted(line_groups.items()):
                self._line_pair(out, dofs, indices, e_s, beam_m,
                                sorted(local))

        if cfg.enable_endpoints:
            ep_law = cfg.endpoint_law
            # End-to-end caps go first: when two physical ends touch,
            # the mixed cases below would see the same contact with a
            # projection foot sitting exactly on the touching end, so
            # active end pairs mask those feet to keep one force pair.
            active_end_pairs = set()
            for e1, s1, e2, s2 in sorted(end_end_pairs):
                radius1 = mesh.beams[mesh.elements[e1].beam].radius
                radius2 = mesh.beams[mesh.elements[e2].beam].radius
                pb = endpoint_to_endpoint(dofs(e1), s1, dofs(e2), s2,
                                          ep_law, radius1, radius2)
                if pb.active:
                    active_end_pairs.add((e1, s1, e2, s2))
                    add_pair_blocks(e1, e2, pb)
                    out.endpoints.append(EndpointRecord(
                        kind="end_end", slave_element=e1, master_element=e2,
                        xi=pb.xi, eta=pb.eta, gap=pb.gap, force=pb.force,
                        angle=pb.angle))

            def at_element_end(coord):
                return abs(abs(coord) - 1.0) <= 1e-9

            for (e_end, sign, beam_m), cands in sorted(slave_end_groups.items()):
                radius1 = mesh.beams[mesh.elements[e_end].beam].radius
                radius2 = mesh.beams[beam_m].radius
                best = None
                for e_m in sorted(cands):
                    pb = endpoint_to_line(dofs(e_end), sign, dofs(e_m),
                                          ep_law, radius1, radius2)
                    if not pb.active:
                        continue
                    if (at_element_end(pb.eta) and
                            (e_end, sign, e_m, int(round(pb.eta)))
                            in active_end_pairs):
                        continue
                    if best is None or pb.gap < best[1].gap:
                        best = (e_m, pb)
                if best is not None:
                    e_m, pb = best
                    add_pair_blocks(e_end, e_m, pb)
                    out.endpoints.append(EndpointRecord(
                        kind="slave_end", slave_element=e_end,
                        master_element=e_m, xi=pb.xi, eta=pb.eta, gap=pb.gap,
                        force=pb.force, angle=pb.angle))

            for (e_end, sign, beam_s), cands in sorted(master_end_groups.items()):
                radius2 = mesh.beams[mesh.elements[e_end].beam].radius
                radius1 = mesh.beams[beam_s].radius
                best = None
                for e_s in sorted(cands):
                    pb = line_to_endpoint(dofs(e_s), dofs(e_end), sign,
                                          ep_law, radius1, radius2)
                    if not pb.active:
                        continue
                    if (at_element_end(pb.xi) and
                            (e_s, int(round(pb.xi)), e_end, sign)
                            in active_end_pairs):
                        continue
                    if best is None or pb.gap < best[1].gap:
                        best = (e_s, pb)
                if best is not None:
                    e_s, pb = best
                    add_pair_blocks(e_s, e_end, pb)
                    out.endpoints.append(EndpointRecord(
                        kind="master_end", slave_element=e_s,
                        master_element=e_end, xi=pb.xi, eta=pb.eta,
                        gap=pb.gap, force=pb.force, angle=pb.angle))

        if cfg.enable_point:
            # One force pair per element pair with a unique interior
            # closest point; pairs without one (parallel or diverging
            # projections) transmit nothing in this formulation.
            for e1, e2 in out.pairs:
                radius1 = mesh.beams[mesh.elements[e1].beam].radius
                radius2 = mesh.beams[mesh.elements[e2].beam].radius
                try:
                    pb = point_contact(dofs(e1), dofs(e2), cfg.law,
                                       radius1, radius2)
                except (NoConvergence, SingularJacobian):
                    continue
                if pb.active:
                    add_pair_blocks(e1, e2, pb)
                    out.points.append(EndpointRecord(
                        kind="point", slave_element=e1, master_element=e2,
                        xi=pb.xi, eta=pb.eta, gap=pb.gap, force=pb.force,
                        angle=pb.angle))
        return out

    def _line_pair(self, out, dofs, indices, e_s, beam_m, active_local):
        mesh = self.mesh
        cfg = self.config
        beam = mesh.beams[beam_m]
        masters = [dofs(e) for e in beam.elements]
        radius_s = mesh.beams[mesh.elements[e_s].beam].radius
        blocks = line_contact(
            dofs(e_s), masters, cfg.law, radius_s, beam.radius,
            n_intervals=cfg.n_intervals, n_gauss=cfg.n_gauss,
            active=active_local, segmentation=cfg.segmentation,
        )
        key_to_global = {SLAVE: e_s}
        for local, e_global in enumerate(beam.elements):
            key_to_global[local] = e_global
        for key, vec in blocks.r.items():
            out.residual[indices(key_to_global[key])] += vec
        for (kr, kc), block in blocks.k.items():
            out.blocks.append((indices(key_to_global[kr]),
                               indices(key_to_global[kc]), block))
        for g in blocks.gauss:
            out.gauss.append(GaussRecord(
                element=e_s, master_element=key_to_global[g.master],
                s_slave=mesh.arc_coordinate(e_s, g.xi), xi=g.xi, eta=g.eta,
                gap=g.gap, force=g.force, angle=g.angle))
