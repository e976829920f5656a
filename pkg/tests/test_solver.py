import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from scherkbench.geometry import Geodesic, Metric
from scherkbench.meshing import build_fermi_rectangle_mesh, build_flat_annulus_mesh
from scherkbench.polygons import IdealPolygon
from scherkbench.solver import (
    EuclideanMetric,
    ScalarField,
    SolverConfig,
    SolverError,
    max_principle_check,
    solve_dirichlet,
    solve_dirichlet_at_infinity,
    solve_ideal_scherk,
    solve_mixed_boundary,
    solve_scherk_sequence,
)

DIAMETER = Geodesic(1.0 + 0.0j, 0.0)
SQUARE = IdealPolygon(tuple(k * math.pi / 2 for k in range(4)))
SMALL = SolverConfig(mesh_rings=6, mesh_side=8, mesh_arc=3, mesh_theta=8)


class TestConfigAndField:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(newton_tol=0.0)
        with pytest.raises(ValueError):
            SolverConfig(max_iter=0)

    def test_field_validation(self):
        mesh = build_flat_annulus_mesh(0.3, 0.6, n_rings=2, n_theta=8)
        with pytest.raises(SolverError):
            ScalarField(mesh, np.zeros(3), EuclideanMetric())
        with pytest.raises(SolverError):
            ScalarField(mesh, np.full(mesh.num_nodes, np.nan), EuclideanMetric())


class TestSolveDirichlet:
    def test_linear_data_flat_metric_is_exact(self):
        # planes solve the minimal-surface equation; for linear data the
        # discrete solution is the linear function itself
        mesh = build_flat_annulus_mesh(0.3, 0.7, n_rings=4, n_theta=16)
        exact = 0.4 * mesh.nodes[:, 0] - 0.3 * mesh.nodes[:, 1]
        bc = {int(n): exact[n] for n in mesh.boundary_nodes()}
        fld = solve_dirichlet(mesh, bc, EuclideanMetric())
        assert np.max(np.abs(fld.values - exact)) <= 1e-9

    def test_constant_data_any_metric(self):
        mesh = build_fermi_rectangle_mesh(DIAMETER, (0.3, 1.3), (-0.5, 0.5), ns=5, nt=5)
        bc = {int(n): 2.5 for n in mesh.boundary_nodes()}
        fld = solve_dirichlet(mesh, bc, Metric(-1.0))
        assert np.max(np.abs(fld.values - 2.5)) <= 1e-10

    def test_missing_boundary_data_rejected(self):
        mesh = build_flat_annulus_mesh(0.3, 0.7, n_rings=2, n_theta=8)
        with pytest.raises(SolverError):
            solve_dirichlet(mesh, {0: 1.0}, EuclideanMetric())

    def test_nonfinite_boundary_data_rejected(self):
        mesh = build_flat_annulus_mesh(0.3, 0.7, n_rings=2, n_theta=8)
        bc = {int(n): math.inf for n in mesh.boundary_nodes()}
        with pytest.raises(SolverError):
            solve_dirichlet(mesh, bc, EuclideanMetric())

    def test_residual_history_recorded(self):
        mesh = build_flat_annulus_mesh(0.3, 0.7, n_rings=3, n_theta=12)
        bc = {int(n): float(np.sin(3 * math.atan2(*mesh.nodes[n][::-1]))) for n in mesh.boundary_nodes()}
        fld = solve_dirichlet(mesh, bc, EuclideanMetric())
        hist = fld.meta["residual_history"]
        assert hist[-1] <= 1e-10


class TestScherkSequence:
    def test_monotone_and_barrier_bounded(self):
        cfg = SolverConfig(mesh_rings=8, mesh_theta=8)
        fields = solve_scherk_sequence(DIAMETER, n_list=(1.5, 2.0), cfg=cfg)
        pts = [(0.1, 0.2), (-0.15, 0.3), (0.0, 0.35)]
        lo = fields[0].interpolate(pts)
        hi = fields[1].interpolate(pts)
        assert np.all(hi >= lo - 1e-8)
        for f in fields:
            assert f.values.min() >= -1e-12
            assert f.values.max() <= f.meta["n"] + 1e-12

    def test_rejects_unsorted_radii(self):
        with pytest.raises(SolverError):
            solve_scherk_sequence(DIAMETER, n_list=(3, 2))


class TestIdealScherk:
    def test_infeasible_polygon_refused(self):
        skew = IdealPolygon((0.0, 0.5 * math.pi, math.pi, 1.2 * math.pi))
        with pytest.raises(SolverError) as err:
            solve_ideal_scherk(skew, cfg=SMALL)
        assert err.value.report is not None

    def test_square_solution_antisymmetric(self):
        fld = solve_ideal_scherk(SQUARE, T=4.0, cfg=SMALL)
        mesh = fld.mesh
        assert abs(fld.values[0]) <= 1e-12  # normalized at the center
        assert fld.values.min() >= -4.0 - 1e-9
        assert fld.values.max() <= 4.0 + 1e-9
        # a quarter turn swaps the +T and -T sides, so u(Rz) = -u(z)
        rot = np.stack([-mesh.nodes[:, 1], mesh.nodes[:, 0]], axis=1)
        d, idx = cKDTree(mesh.nodes).query(rot)
        assert float(d.max()) <= 1e-9
        assert np.max(np.abs(fld.values[idx] + fld.values)) <= 1e-8

    def test_rejects_nonpositive_truncation(self):
        with pytest.raises(SolverError):
            solve_ideal_scherk(SQUARE, T=0.0, cfg=SMALL)


class TestMixedBoundary:
    def test_values_between_extremes(self):
        fld = solve_mixed_boundary(
            SQUARE, [0], [2], {1: 0.0, 3: 0.0}, T=3.0, cfg=SMALL
        )
        assert fld.values.min() >= -3.0 - 1e-9
        assert fld.values.max() <= 3.0 + 1e-9
        # the half turn swapping the +T and -T sides flips the sign
        mesh = fld.mesh
        d, idx = cKDTree(mesh.nodes).query(-mesh.nodes)
        assert float(d.max()) <= 1e-9
        assert np.max(np.abs(fld.values[idx] + fld.values)) <= 1e-8

    def test_every_side_needs_one_assignment(self):
        with pytest.raises(SolverError):
            solve_mixed_boundary(SQUARE, [0], [2], {1: 0.0}, cfg=SMALL)
        with pytest.raises(SolverError):
            solve_mixed_boundary(SQUARE, [0, 1], [1, 2], {3: 0.0}, cfg=SMALL)


class TestDirichletAtInfinity:
    def test_constant_data_reproduced(self):
        cfg = SolverConfig(mesh_rings=5)
        fields = solve_dirichlet_at_infinity(lambda th: 1.25, n_list=(1.5, 2.0), cfg=cfg, n_theta=12)
        for f in fields:
            assert np.max(np.abs(f.values - 1.25)) <= 1e-10


class TestMaxPrinciple:
    def _pair(self, delta):
        mesh = build_flat_annulus_mesh(0.3, 0.7, n_rings=3, n_theta=12)
        th = np.arctan2(mesh.nodes[:, 1], mesh.nodes[:, 0])
        bc_lo = {int(n): float(np.sin(2 * th[n])) for n in mesh.boundary_nodes()}
        bc_hi = {int(n): bc_lo[int(n)] + delta for n in mesh.boundary_nodes()}
        u = solve_dirichlet(mesh, bc_lo, EuclideanMetric())
        v = solve_dirichlet(mesh, bc_hi, EuclideanMetric())
        return u, v

    def test_ordered_data_orders_the_interior(self):
        u, v = self._pair(0.5)
        assert max_principle_check(u, v) is True

    def test_inapplicable_when_boundary_order_fails(self):
        u, v = self._pair(0.5)
        assert max_principle_check(v, u) is None

    def test_rejects_mismatched_meshes(self):
        u, _ = self._pair(0.5)
        other = build_flat_annulus_mesh(0.3, 0.7, n_rings=2, n_theta=8)
        w = ScalarField(other, np.zeros(other.num_nodes), EuclideanMetric())
        with pytest.raises(SolverError):
            max_principle_check(u, w)
