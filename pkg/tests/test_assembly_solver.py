"""Global assembly, Newton iteration, schedules, and load stepping."""

import numpy as np
import pytest
import scipy.sparse as sp
from scipy.spatial.transform import Rotation

import beamsim.assembly_solver as asm
from beamsim.assembly_solver import (
    AssembledSystem,
    DirichletEntry,
    DirichletSchedule,
    GlobalState,
    NoConvergence,
    SingularSystem,
    SolverConfig,
    assemble,
    linear_solve,
    load_step_driver,
    newton_solve,
    reaction_resultants,
    system_matrix,
)
from beamsim.beam_element import Material, internal_force_and_stiffness, mass_matrix
from beamsim.contact import ContactConfig, ContactManager
from beamsim.geometry import DegenerateTangent
from beamsim.mesh import Mesh

from conftest import fd_jacobian, relative_deviation
from test_manager import LAW, overlap_mesh, tbone_mesh

MAT = Material.circular(E=1.0e7, R=0.01, rho=1200.0)


def cantilever(n_elements=2, length=1.0):
    mesh = Mesh()
    mesh.add_straight_beam((0, 0, 0), (length, 0, 0), n_elements, MAT)
    return mesh


def bend_tip(q, mesh, dz):
    """Displace the last node transversally, leaving its tangent."""
    tip = mesh.n_nodes - 1
    q = q.copy()
    q[mesh.node_dof_indices(tip)[2]] += dz
    return q


class TestAssemble:
    def test_reference_state_is_equilibrium(self):
        """A straight, unstretched beam stores no energy, so the
        residual of the reference configuration vanishes."""
        mesh = cantilever(3)
        system = assemble(mesh, mesh.initial_state())
        assert np.max(np.abs(system.residual)) < 1e-9

    def test_single_element_scatter(self, rng):
        """With one element the global arrays are the element arrays."""
        mesh = cantilever(1)
        q = mesh.initial_state() + 0.05 * rng.standard_normal(12)
        system = assemble(mesh, q)
        r_ele, k_ele = internal_force_and_stiffness(
            mesh.element_dofs(q, 0), MAT)
        assert np.allclose(system.residual, r_ele)
        matrix = system_matrix(system.blocks, mesh.n_dof)
        assert np.allclose(matrix, k_ele)

    def test_external_force_subtracts(self, rng):
        mesh = cantilever(2)
        q = mesh.initial_state() + 0.02 * rng.standard_normal(mesh.n_dof)
        load = rng.standard_normal(mesh.n_dof)
        bare = assemble(mesh, q)
        loaded = assemble(mesh, q, external_force=load)
        assert np.allclose(loaded.residual, bare.residual - load)

    def test_inertia_term(self, rng):
        """The dynamic residual adds consistent mass times acceleration."""
        mesh = cantilever(2)
        q = mesh.initial_state() + 0.02 * rng.standard_normal(mesh.n_dof)
        acc = rng.standard_normal(mesh.n_dof)
        static = assemble(mesh, q)
        dynamic = assemble(mesh, q, acceleration=acc)
        expected = static.residual.copy()
        for element in (0, 1):
            idx = mesh.element_dof_indices(element)
            mass = mass_matrix(mesh.element_dofs(q, element), MAT)
            expected[idx] += mass @ acc[idx]
        assert np.allclose(dynamic.residual, expected)

    def test_stiffness_matches_fd(self, rng):
        """Assembled tangent equals the numerical derivative of the
        assembled residual, contact included."""
        mesh = overlap_mesh()
        manager = ContactManager(mesh, ContactConfig(law=LAW, n_gauss=4))
        q = mesh.initial_state()
        q += 1e-4 * rng.standard_normal(mesh.n_dof)
        system = assemble(mesh, q, contact=manager)
        matrix = system_matrix(system.blocks, mesh.n_dof)
        numeric = fd_jacobian(
            lambda v: assemble(mesh, v, contact=manager).residual, q)
        assert relative_deviation(matrix, numeric) < 1e-5

    def test_stiffness_symmetric_without_contact(self, rng):
        """The elastic energy Hessian is symmetric; only follower-type
        moments or contact may break that."""
        mesh = cantilever(3)
        q = mesh.initial_state() + 0.05 * rng.standard_normal(mesh.n_dof)
        matrix = system_matrix(assemble(mesh, q).blocks, mesh.n_dof)
        scale = np.max(np.abs(matrix))
        assert np.max(np.abs(matrix - matrix.T)) < 1e-10 * scale

    def test_element_error_carries_location(self):
        mesh = cantilever(3)
        q = mesh.initial_state()
        q[mesh.node_dof_indices(2)[3:]] = 0.0
        with pytest.raises(DegenerateTangent) as info:
            assemble(mesh, q)
        assert "element 1 of beam 0" in str(info.value)


class TestLinearAlgebra:
    def test_dense_and_sparse_matrix_agree(self, rng):
        mesh = overlap_mesh()
        q = mesh.initial_state() + 1e-3 * rng.standard_normal(mesh.n_dof)
        blocks = assemble(mesh, q).blocks
        dense = system_matrix(blocks, mesh.n_dof, dense_threshold=10**9)
        sparse = system_matrix(blocks, mesh.n_dof, dense_threshold=1)
        assert sp.issparse(sparse)
        assert np.allclose(sparse.toarray(), dense)

    def test_linear_solve_dense_and_sparse(self, rng):
        matrix = rng.standard_normal((8, 8)) + 8.0 * np.eye(8)
        rhs = rng.standard_normal(8)
        delta = linear_solve(matrix, rhs)
        assert np.allclose(matrix @ delta, -rhs)
        delta_sp = linear_solve(sp.csr_matrix(matrix), rhs)
        assert np.allclose(delta_sp, delta)

    def test_singular_dense_raises(self):
        with pytest.raises(SingularSystem):
            linear_solve(np.zeros((3, 3)), np.ones(3))

    def test_singular_sparse_raises(self):
        matrix = sp.csr_matrix((3, 3))
        with pytest.raises(SingularSystem):
            with np.errstate(all="ignore"):
                linear_solve(matrix, np.ones(3))


class TestNewton:
    def linear_system(self, rng, n=6):
        matrix = rng.standard_normal((n, n))
        matrix = matrix @ matrix.T + n * np.eye(n)
        target = rng.standard_normal(n)

        def system(q):
            residual = matrix @ (q - target)
            return AssembledSystem(residual,
                                   [(np.arange(n), np.arange(n), matrix)])

        return system, target

    def test_linear_problem_two_iterations(self, rng):
        """On a linear problem the first increment lands exactly, so
        the dual check passes at the second iteration."""
        system, target = self.linear_system(rng)
        state = newton_solve(system, np.zeros(6), np.arange(6))
        assert state.converged
        assert state.iterations <= 2
        assert np.allclose(state.q, target, atol=1e-12)

    def test_history_recorded(self, rng):
        system, _ = self.linear_system(rng)
        state = newton_solve(system, np.zeros(6), np.arange(6))
        assert len(state.residual_norms) == state.iterations + 1
        assert state.residual_norms[-1] < 1e-7
        assert state.increment_norms[-1] < 1e-7

    def test_no_convergence_raises_with_history(self):
        def system(q):
            # Gradient of sum(cos(q)), bounded away from zero.
            return AssembledSystem(np.cos(q) + 2.0,
                                   [(np.arange(2), np.arange(2),
                                     np.diag(-np.sin(q) + 3.0))])

        config = SolverConfig(max_iterations=5)
        with pytest.raises(NoConvergence) as info:
            newton_solve(system, np.zeros(2), np.arange(2), config)
        assert len(info.value.residual_norms) == 5

    def test_prescribed_dofs_untouched(self):
        """Row/column elimination: constrained entries stay bit-exact."""
        mesh = cantilever(2)
        q0 = mesh.initial_state()
        q0 = bend_tip(q0, mesh, 0.1)
        free = np.arange(6, mesh.n_dof - 6)
        state = newton_solve(lambda q: assemble(mesh, q), q0, free)
        assert state.converged
        fixed = np.setdiff1d(np.arange(mesh.n_dof), free)
        assert np.array_equal(state.q[fixed], q0[fixed])

    def test_quadratic_local_convergence(self):
        """Close to the solution the residual norm squares each
        iteration; the observed order of the final triple is about 2."""
        mesh = cantilever(2)
        q0 = bend_tip(mesh.initial_state(), mesh, 0.25)
        free = np.arange(6, mesh.n_dof - 6)
        config = SolverConfig(tol_residual=1e-12, tol_increment=1e-12)
        state = newton_solve(lambda q: assemble(mesh, q), q0, free, config)
        norms = [r for r in state.residual_norms if r > 1e-13]
        assert len(norms) >= 3
        orders = []
        for r0, r1, r2 in zip(norms, norms[1:], norms[2:]):
            if r1 < r0 and r2 < r1:
                orders.append(np.log(r2 / r1) / np.log(r1 / r0))
        assert orders and max(orders) > 1.5


class TestDirichletSchedule:
    def test_ramp_window(self):
        mesh = cantilever(1)
        entry = DirichletEntry(node=1, kind="ramp",
                               delta=(1.0, 0, 0, 0, 0, 0),
                               start=2.0, stop=4.0)
        schedule = DirichletSchedule(mesh, [entry], n_steps=6)
        base = mesh.initial_state()[mesh.node_dof_indices(1)]
        for x, frac in [(0, 0.0), (2, 0.0), (3, 0.5), (4, 1.0), (6, 1.0)]:
            values = schedule.nodal_values(x)[1]
            assert np.allclose(values, base + [frac, 0, 0, 0, 0, 0])

    def test_circle_entry_rotates_position_and_tangent(self):
        mesh = cantilever(1)
        entry = DirichletEntry(node=1, kind="circle",
                               point=(0, 0, 0), axis=(0, 0, 1),
                               angle=np.pi / 2)
        schedule = DirichletSchedule(mesh, [entry], n_steps=2)
        values = schedule.nodal_values(2)[1]
        assert np.allclose(values[:3], [0, 1, 0], atol=1e-12)
        assert np.allclose(values[3:], [0, 1, 0], atol=1e-12)
        halfway = schedule.nodal_values(1)[1]
        rot = Rotation.from_rotvec([0, 0, np.pi / 4]).as_matrix()
        assert np.allclose(halfway[:3], rot @ [1, 0, 0], atol=1e-12)

    def test_entries_compose_sequentially(self):
        """A global rotation after a local one acts on the already
        rotated values, like a sub-bundle twist nested in a bundle
        twist."""
        mesh = Mesh()
        mesh.add_straight_beam((1, 0, 0), (2, 0, 0), 1, MAT)
        local = DirichletEntry(node=0, kind="circle", point=(1, 0, 0),
                               axis=(0, 0, 1), angle=0.8)
        wide = DirichletEntry(node=0, kind="circle", point=(0, 0, 0),
                              axis=(0, 0, 1), angle=0.5)
        schedule = DirichletSchedule(mesh, [local, wide], n_steps=1)
        values = schedule.nodal_values(1)[0]
        r_local = Rotation.from_rotvec([0, 0, 0.8]).as_matrix()
        r_wide = Rotation.from_rotvec([0, 0, 0.5]).as_matrix()
        base = mesh.initial_state()[mesh.node_dof_indices(0)]
        expect_d = r_wide @ (np.array([1, 0, 0])
                             + r_local @ (base[:3] - [1, 0, 0]))
        expect_t = r_wide @ (r_local @ base[3:])
        assert np.allclose(values[:3], expect_d, atol=1e-12)
        assert np.allclose(values[3:], expect_t, atol=1e-12)

    def test_apply_touches_only_constrained_components(self):
        mesh = cantilever(1)
        entry = DirichletEntry(node=1, kind="ramp", components=(2,),
                               delta=(0, 0, -0.3, 0, 0, 0))
        schedule = DirichletSchedule(mesh, [entry], n_steps=3)
        q = mesh.initial_state()
        marker = q.copy()
        marker[mesh.node_dof_indices(1)] = 99.0
        out = schedule.apply(marker.copy(), 3)
        idx = mesh.node_dof_indices(1)
        assert out[idx[2]] == q[idx[2]] - 0.3
        others = np.delete(idx, 2)
        assert np.all(out[others] == 99.0)
        assert schedule.dofs.tolist() == [idx[2]]

    def test_table_entry_interpolates(self):
        mesh = cantilever(1)
        rows = [(0.0,) + (0, 0, 0, 1, 0, 0),
                (2.0,) + (0, 4, 0, 1, 0, 0)]
        entry = DirichletEntry(node=0, kind="table", table=rows)
        schedule = DirichletSchedule(mesh, [entry], n_steps=2)
        assert np.allclose(schedule.nodal_values(1)[0],
                           [0, 2, 0, 1, 0, 0])

    def test_validation(self):
        mesh = cantilever(1)
        with pytest.raises(ValueError):
            DirichletEntry(node=0, kind="orbit")
        with pytest.raises(ValueError):
            DirichletEntry(node=0, kind="ramp")
        with pytest.raises(ValueError):
            DirichletSchedule(mesh, [DirichletEntry(node=7)], n_steps=1)


def clamp_both_ends(mesh, beam):
    return [DirichletEntry(node=mesh.beams[beam].nodes[0]),
            DirichletEntry(node=mesh.beams[beam].nodes[-1])]


class TestLoadStepDriver:
    def test_zero_increment_reproduces_state(self):
        """Fixed-only schedules must return the initial state bit-exact
        and twice in a row identically."""
        mesh = cantilever(2)
        schedule = DirichletSchedule(
            mesh, clamp_both_ends(mesh, 0), n_steps=3)
        states, reports = load_step_driver(mesh, schedule)
        again, _ = load_step_driver(mesh, schedule)
        q0 = mesh.initial_state()
        for state, twin in zip(states, again):
            assert np.allclose(state.q, q0, atol=1e-12, rtol=0.0)
            assert np.array_equal(state.q, twin.q)
        assert [r.step for r in reports] == [1.0, 2.0, 3.0]

    def test_uniform_stretch_reaction(self):
        """Stretching a bar by prescribing stretched end positions and
        tangents gives the exact axial reaction EA * u / L."""
        length, u = 1.0, 0.02
        mesh = cantilever(2, length)
        stretch = 1.0 + u / length
        entries = [DirichletEntry(node=0, kind="ramp",
                                  delta=(0, 0, 0, u / length, 0, 0)),
                   DirichletEntry(node=2, kind="ramp",
                                  delta=(u, 0, 0, u / length, 0, 0))]
        schedule = DirichletSchedule(mesh, entries, n_steps=4)
        states, reports = load_step_driver(mesh, schedule)
        tip = states[-1].q[mesh.node_dof_indices(2)]
        assert np.allclose(tip[:3], [length + u, 0, 0])
        assert np.allclose(tip[3:], [stretch, 0, 0])
        reaction = reports[-1].reaction_force
        # Reactions at both ends cancel; check the tip end alone.
        tip_dofs = mesh.node_dof_indices(2)
        force, _ = reaction_resultants(mesh, states[-1].residual,
                                       states[-1].q, dofs=tip_dofs)
        assert np.isclose(force[0], MAT.E * MAT.A * u / length, rtol=1e-8)
        assert np.allclose(reaction, 0.0, atol=1e-8)

    def test_contact_equilibrium(self):
        """Two penetrating beams relax until elastic and contact forces
        balance; all reactions together still sum to zero."""
        mesh = overlap_mesh()
        manager = ContactManager(mesh, ContactConfig(law=LAW, n_gauss=4))
        entries = clamp_both_ends(mesh, 0) + clamp_both_ends(mesh, 1)
        schedule = DirichletSchedule(mesh, entries, n_steps=1)
        states, reports = load_step_driver(mesh, schedule, contact=manager)
        state, report = states[-1], reports[-1]
        assert state.converged
        assert report.n_active > 0
        assert report.min_gap < 0.0
        start_gap = manager.evaluate(mesh.initial_state()).min_gap
        assert report.min_gap > start_gap
        assert np.allclose(report.reaction_force, 0.0, atol=1e-7)
        # This scene is nearly parallel; the recorded smallest contact
        # angle must reflect that and the uniqueness bound must be a
        # sensible angle, but no ordering between them is implied.
        assert 0.0 < report.min_angle < 0.1
        assert 0.0 < report.alpha_bound < np.pi / 2

    def test_endpoint_contact_equilibrium(self):
        mesh = tbone_mesh()
        manager = ContactManager(mesh, ContactConfig(law=LAW, n_gauss=4))
        entries = clamp_both_ends(mesh, 0) + clamp_both_ends(mesh, 1)
        schedule = DirichletSchedule(mesh, entries, n_steps=1)
        states, reports = load_step_driver(mesh, schedule, contact=manager)
        assert states[-1].converged
        kinds = {e.kind for e in reports[-1].endpoints}
        assert "slave_end" in kinds

    def test_dense_and_sparse_paths_agree(self):
        mesh = overlap_mesh()
        manager = ContactManager(mesh, ContactConfig(law=LAW, n_gauss=4))
        entries = clamp_both_ends(mesh, 0) + clamp_both_ends(mesh, 1)
        schedule = DirichletSchedule(mesh, entries, n_steps=1)
        dense, _ = load_step_driver(mesh, schedule, contact=manager)
        sparse, _ = load_step_driver(
            mesh, schedule, contact=manager,
            config=SolverConfig(dense_threshold=1))
        assert np.allclose(dense[-1].q, sparse[-1].q, atol=1e-10)

    def test_step_halving_inserts_midpoints(self, monkeypatch):
        """A failing full step is retried from its midpoint; the
        halving budget spans the whole run."""
        mesh = cantilever(1)
        schedule = DirichletSchedule(
            mesh, [DirichletEntry(node=0)], n_steps=2)
        attempts = []

        def moody(system, q0, free, config=None):
            x = moody.current[0]
            attempts.append(x)
            if attempts.count(x) < 2 and float(x).is_integer():
                raise NoConvergence("synthetic failure")
            return GlobalState(q=np.array(q0), converged=True,
                               residual_norms=[0.0],
                               increment_norms=[0.0],
                               residual=np.zeros(q0.size))

        def spy_apply(q, x):
            moody.current = [x]
            return DirichletSchedule.apply(schedule, q, x)

        moody.current = [None]
        monkeypatch.setattr(asm, "newton_solve", moody)
        monkeypatch.setattr(schedule, "apply", spy_apply)
        states, reports = load_step_driver(mesh, schedule)
        assert attempts == [1.0, 0.5, 1.0, 2.0, 1.5, 2.0]
        assert [r.step for r in reports] == [0.5, 1.0, 1.5, 2.0]
        assert [r.intermediate for r in reports] == [True, False,
                                                     True, False]
        assert reports[-1].halvings_used == 2

    def test_halving_budget_exhausts(self, monkeypatch):
        mesh = cantilever(1)
        schedule = DirichletSchedule(
            mesh, [DirichletEntry(node=0)], n_steps=1)

        def hopeless(system, q0, free, config=None):
            raise NoConvergence("synthetic failure")

        monkeypatch.setattr(asm, "newton_solve", hopeless)
        with pytest.raises(NoConvergence) as info:
            load_step_driver(mesh, schedule,
                             config=SolverConfig(max_halvings=3))
        assert "halving budget" in str(info.value)
