"""Tests for the mesh container and the broad-phase search.

Oracles:
  * direct geometric expectations for straight beams,
  * dense centerline sampling against the bounding boxes (superset
    property of the control-polygon hull),
  * a nested-loop reimplementation of the pair predicate,
  * sampled minimum distances: every pair of curves closer than the
    pair search radius must be returned as a candidate.
"""

import numpy as np
import pytest

from beamsim.beam_element import Material
from beamsim.contact import candidate_pairs, element_aabb, element_hull_points
from beamsim.geometry import evaluate
from beamsim.mesh import Mesh

from conftest import random_element

MAT = Material.circular(E=1e9, R=0.01)


class TestMesh:
    def test_straight_beam_layout(self):
        mesh = Mesh()
        beam = mesh.add_straight_beam([0.0, 0.0, 0.0], [3.0, 0.0, 0.0], 3, MAT)
        assert mesh.n_nodes == 4
        assert mesh.n_dof == 24
        assert beam.length == pytest.approx(3.0)
        assert [e.l_ele for e in mesh.elements] == pytest.approx([1.0, 1.0, 1.0])
        assert mesh.elements[1].nodes == (1, 2)
        np.testing.assert_array_equal(
            mesh.element_dof_indices(1), np.arange(6, 18))

    def test_initial_state_reproduces_centerline(self):
        mesh = Mesh()
        mesh.add_straight_beam([0.0, 1.0, 2.0], [2.0, 1.0, 0.0], 4, MAT)
        q = mesh.initial_state()
        for e in range(4):
            dofs = mesh.element_dofs(q, e)
            for xi in (-1.0, -0.3, 0.5, 1.0):
                s = mesh.arc_coordinate(e, xi)
                expected = np.array([0.0, 1.0, 2.0]) + s / np.sqrt(8.0) * np.array(
                    [2.0, 0.0, -2.0])
                np.testing.assert_allclose(evaluate(dofs, xi).r, expected,
                                           atol=1e-12)

    def test_fractions_and_arc_coordinate(self):
        mesh = Mesh()
        mesh.add_straight_beam([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 3, MAT,
                               fractions=[0.2, 0.5])
        lengths = [e.l_ele for e in mesh.elements]
        assert lengths == pytest.approx([0.2, 0.3, 0.5])
        assert mesh.arc_coordinate(1, -1.0) == pytest.approx(0.2)
        assert mesh.arc_coordinate(1, 1.0) == pytest.approx(0.5)
        assert mesh.arc_coordinate(2, 0.0) == pytest.approx(0.75)

    def test_two_beams_get_disjoint_nodes(self):
        mesh = Mesh()
        mesh.add_straight_beam([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 2, MAT)
        beam = mesh.add_straight_beam([0.0, 1.0, 0.0], [1.0, 1.0, 0.0], 2, MAT)
        assert beam.nodes == [3, 4, 5]
        assert [e.beam for e in mesh.elements] == [0, 0, 1, 1]
        assert mesh.beam_ends(1) == [(2, -1), (3, 1)]

    def test_validation(self):
        mesh = Mesh()
        with pytest.raises(ValueError):
            mesh.add_straight_beam([0.0, 0.0, 0.0], [0.0, 0.0, 0.0], 2, MAT)
        with pytest.raises(ValueError):
            mesh.add_straight_beam([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 0, MAT)
        with pytest.raises(ValueError):
            mesh.add_straight_beam([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 3, MAT,
                                   fractions=[0.5, 0.2])
        with pytest.raises(ValueError):
            mesh.add_beam(np.zeros((3, 3)), np.zeros((2, 3)), MAT)


class TestBoundingBoxes:
    def test_hull_contains_centerline(self, rng):
        xis = np.linspace(-1.0, 1.0, 201)
        for _ in range(50):
            dofs = random_element(rng, bend=0.6, stretch=0.3)
            box = element_aabb(dofs)
            pts = np.array([evaluate(dofs, xi).r for xi in xis])
            assert np.all(pts >= box[0] - 1e-12)
            assert np.all(pts <= box[1] + 1e-12)

    def test_inflation(self, rng):
        dofs = random_element(rng)
        box = element_aabb(dofs)
        inflated = element_aabb(dofs, inflate=0.25)
        np.testing.assert_allclose(inflated[0], box[0] - 0.25)
        np.testing.assert_allclose(inflated[1], box[1] + 0.25)

    def test_hull_points_of_straight_element(self):
        mesh = Mesh()
        mesh.add_straight_beam([0.0, 0.0, 0.0], [3.0, 0.0, 0.0], 1, MAT)
        dofs = mesh.element_dofs(mesh.initial_state(), 0)
        np.testing.assert_allclose(
            element_hull_points(dofs),
            [[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]], atol=1e-14)


def grid_scene(rng, n_beams=3, n_elements=3):
    mesh = Mesh()
    for b in range(n_beams):
        start = rng.uniform(-1.0, 1.0, size=3)
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        end = start + direction * rng.uniform(1.0, 2.0)
        mesh.add_straight_beam(start, end, n_elements,
                               Material.circular(E=1e9, R=0.02))
    return mesh


class TestCandidatePairs:
    def half_radius(self, mesh):
        return lambda b: 2.0 * mesh.beams[b].radius + 0.05

    def oracle(self, mesh, q, half_radius):
        pairs = set()
        for i in range(len(mesh.elements)):
            for j in range(len(mesh.elements)):
                bi = mesh.elements[i].beam
                bj = mesh.elements[j].beam
                if i >= j or bi == bj:
                    continue
                box_i = element_aabb(mesh.element_dofs(q, i), half_radius(bi))
                box_j = element_aabb(mesh.element_dofs(q, j), half_radius(bj))
                if np.all(box_i[0] <= box_j[1]) and np.all(box_j[0] <= box_i[1]):
                    pairs.add((i, j) if bi <= bj else (j, i))
        return sorted(pairs)

    def test_matches_nested_loop_oracle(self, rng):
        for _ in range(20):
            mesh = grid_scene(rng)
            q = mesh.initial_state()
            half = self.half_radius(mesh)
            assert candidate_pairs(mesh, q, half) == self.oracle(mesh, q, half)

    def test_no_same_beam_pairs_and_sorted(self, rng):
        mesh = grid_scene(rng, n_beams=4)
        q = mesh.initial_state()
        pairs = candidate_pairs(mesh, q, self.half_radius(mesh))
        assert pairs == sorted(pairs)
        for e1, e2 in pairs:
            b1 = mesh.elements[e1].beam
            b2 = mesh.elements[e2].beam
            assert b1 < b2

    def test_close_curves_always_included(self, rng):
        # Superset guarantee: boxes contain the curves, so curves
        # within the summed inflation cannot have disjoint boxes.
        xis = np.linspace(-1.0, 1.0, 41)
        for _ in range(10):
            mesh = grid_scene(rng)
            q = mesh.initial_state()
            half = self.half_radius(mesh)
            pairs = set(candidate_pairs(mesh, q, half))
            for i in range(len(mesh.elements)):
                for j in range(i + 1, len(mesh.elements)):
                    bi = mesh.elements[i].beam
                    bj = mesh.elements[j].beam
                    if bi == bj:
                        continue
                    pts_i = np.array([evaluate(mesh.element_dofs(q, i), x).r
                                      for x in xis])
                    pts_j = np.array([evaluate(mesh.element_dofs(q, j), x).r
                                      for x in xis])
                    dist = np.linalg.norm(
                        pts_i[:, None, :] - pts_j[None, :, :], axis=2).min()
                    if dist <= half(bi) + half(bj):
                        key = (i, j) if bi <= bj else (j, i)
                        assert key in pairs

    def test_distant_beams_excluded(self):
        mesh = Mesh()
        mesh.add_straight_beam([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], 2, MAT)
        mesh.add_straight_beam([0.0, 5.0, 0.0], [1.0, 5.0, 0.0], 2, MAT)
        q = mesh.initial_state()
        assert candidate_pairs(mesh, q, lambda b: 0.1) == []
