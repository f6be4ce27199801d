"""Meshes of beams discretized into Hermite elements.

Each node carries six degrees of freedom: position (3) and tangent
vector (3).  An element couples two consecutive nodes of one beam, so
its 12 local dofs are [d1, t1, d2, t2], matching the element-level
routines.  The global state vector stacks the nodal dofs in node
order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beam_element import Material
from .geometry import ElementDofs

__all__ = ["Element", "Beam", "Mesh"]


@dataclass(frozen=True)
class Element:
    index: int
    beam: int
    nodes: tuple
    l_ele: float
    #: Reference arc coordinate of the first node along its beam.
    s_start: float


@dataclass
class Beam:
    index: int
    nodes: list
    elements: list
    material: Material
    length: float

    @property
    def radius(self) -> float:
        return self.material.R


class Mesh:
    def __init__(self):
        self.beams = []
        self.elements = []
        self._positions = []
        self._tangents = []

    @property
    def n_nodes(self) -> int:
        return len(self._positions)

    @property
    def n_dof(self) -> int:
        return 6 * self.n_nodes

    def add_beam(self, positions, tangents, material, lengths=None) -> Beam:
        """Append a beam through the given nodal positions and tangents.

        ``lengths`` assigns the reference element lengths; by default
        the chord lengths are used (exact for straight beams).
        """
        positions = np.asarray(positions, dtype=float)
        tangents = np.asarray(tangents, dtype=float)
        if positions.ndim != 2 or positions.shape[1] != 3 or len(positions) < 2:
            raise ValueError("need at least two nodes of shape (n, 3)")
        if tangents.shape != positions.shape:
            raise ValueError("tangents must match positions in shape")
        chords = np.linalg.norm(np.diff(positions, axis=0), axis=1)
        if lengths is None:
            lengths = chords
        lengths = np.asarray(lengths, dtype=float)
        if lengths.shape != (len(positions) - 1,) or np.any(lengths <= 0.0):
            raise ValueError("lengths must be positive, one per element")

        first_node = self.n_nodes
        node_ids = list(range(first_node, first_node + len(positions)))
        self._positions.extend(np.array(p) for p in positions)
        self._tangents.extend(np.array(t) for t in tangents)

        beam_index = len(self.beams)
        element_ids = []
        s = 0.0
        for k, l_ele in enumerate(lengths):
            element = Element(
                index=len(self.elements), beam=beam_index,
                nodes=(node_ids[k], node_ids[k + 1]),
                l_ele=float(l_ele), s_start=s,
            )
            self.elements.append(element)
            element_ids.append(element.index)
            s += float(l_ele)
        beam = Beam(index=beam_index, nodes=node_ids, elements=element_ids,
                    material=material, length=s)
        self.beams.append(beam)
        return beam

    def add_straight_beam(self, start, end, n_elements, material,
                          fractions=None) -> Beam:
        """Straight beam from ``start`` to ``end``.

        ``fractions`` optionally places the interior nodes at the given
        increasing arc fractions in (0, 1); by default the nodes are
        equally spaced.
        """
        start = np.asarray(start, dtype=float)
        end = np.asarray(end, dtype=float)
        span = end - start
        length = float(np.linalg.norm(span))
        if length <= 0.0:
            raise ValueError("beam ends coincide")
        if n_elements < 1:
            raise ValueError("need at least one element")
        direction = span / length
        if fractions is None:
            fractions = np.linspace(0.0, 1.0, n_elements + 1)
        else:
            fractions = np.concatenate([[0.0], np.asarray(fractions, float), [1.0]])
            if len(fractions) != n_elements + 1 or np.any(np.diff(fractions) <= 0):
                raise ValueError("fractions must be increasing with "
                                 "n_elements - 1 interior values")
        positions = start + np.outer(fractions, span)
        tangents = np.tile(direction, (n_elements + 1, 1))
        lengths = np.diff(fractions) * length
        return self.add_beam(positions, tangents, material, lengths)

    def initial_state(self) -> np.ndarray:
        q = np.empty(self.n_dof)
        for n in range(self.n_nodes):
            q[6 * n:6 * n + 3] = self._positions[n]
            q[6 * n + 3:6 * n + 6] = self._tangents[n]
        return q

    def node_dof_indices(self, node: int) -> np.ndarray:
        return np.arange(6 * node, 6 * node + 6)

    def element_dof_indices(self, element: int) -> np.ndarray:
        n1, n2 = self.elements[element].nodes
        return np.concatenate([self.node_dof_indices(n1),
                               self.node_dof_indices(n2)])

    def element_dofs(self, q: np.ndarray, element: int) -> ElementDofs:
        ele = self.elements[element]
        n1, n2 = ele.nodes
        return ElementDofs(
            d1=q[6 * n1:6 * n1 + 3], t1=q[6 * n1 + 3:6 * n1 + 6],
            d2=q[6 * n2:6 * n2 + 3], t2=q[6 * n2 + 3:6 * n2 + 6],
            l_ele=ele.l_ele,
        )

    def beam_ends(self, beam: int):
        """The two (element index, end sign) pairs bounding a beam."""
        b = self.beams[beam]
        return [(b.elements[0], -1), (b.elements[-1], 1)]

    def arc_coordinate(self, element: int, xi: float) -> float:
        """Reference arc length along the beam at element coordinate xi."""
        ele = self.elements[element]
        return ele.s_start + 0.5 * (xi + 1.0) * ele.l_ele
