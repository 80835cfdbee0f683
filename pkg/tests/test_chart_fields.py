"""Chart primitives, field evaluators, frames, and collinearity diagnostics."""

import numpy as np
import pytest

from torlink.chart import ChartPoint, SolidTorusDomain, circle_dist, reduce_angle
from torlink.errors import DegenerateFrame, ZeroDenominator
from torlink.fields import (
    FieldPair,
    FieldSpec,
    build_frame,
    collinearity_residual,
    commutator_residual,
    commutator_residual_grid,
    find_collinearity,
    jacobian_at,
    ratio_mu,
)
from conftest import section_samples


def const_field(vec, name="const"):
    vec = np.asarray(vec, dtype=float)
    return FieldSpec(func=lambda p: np.broadcast_to(vec, p.shape).copy(), name=name)


def comp_field(fx, fy, ft, name="f"):
    def func(p):
        x, y, t = p[..., 0], p[..., 1], p[..., 2]
        return np.stack(
            [np.broadcast_to(v, x.shape) for v in (fx(x, y, t), fy(x, y, t), ft(x, y, t))],
            axis=-1,
        ).astype(float)

    return FieldSpec(func=func, name=name)


class TestChart:
    def test_theta_reduced_mod_one(self):
        assert ChartPoint(0, 0, 1.25).theta == pytest.approx(0.25)
        assert ChartPoint(0, 0, -0.25).theta == pytest.approx(0.75)
        assert ChartPoint(0, 0, 3.0).theta == 0.0

    def test_circle_metric(self):
        assert circle_dist(0.1, 0.9) == pytest.approx(0.2)
        assert circle_dist(0.0, 0.5) == pytest.approx(0.5)
        assert ChartPoint(0, 0, 0.95).distance(ChartPoint(0, 0, 0.05)) == pytest.approx(0.1)

    def test_evaluator_theta_periodic(self):
        f = comp_field(lambda x, y, t: np.cos(2 * np.pi * t), lambda x, y, t: x, lambda x, y, t: 0 * x)
        pts = np.random.default_rng(0).random((50, 3))
        shifted = pts.copy()
        shifted[:, 2] += 1.0
        # t + 1.0 itself is off by an ulp, so equality holds to representation noise
        assert np.allclose(f(pts), f(shifted), atol=1e-13, rtol=0)
        exact = pts.copy()
        exact[:, 2] = 0.25
        exact2 = exact.copy()
        exact2[:, 2] = 1.25  # exactly representable shift
        assert np.array_equal(f(exact), f(exact2))

    def test_tilted_fibration_levels_and_rates(self):
        dom = SolidTorusDomain(disc_radius=1.0, tilt=0.3)
        p = dom.section_point(0.4, -0.2, level=0.7)
        assert dom.fibration(p.as_array()) == pytest.approx(0.7)
        e1, e2 = dom.fiber_basis()
        assert dom.fibration_rate(e1) == 0.0
        assert dom.fibration_rate(e2) == 0.0


class TestJacobian:
    def test_constant_field_zero_matrix(self):
        J = jacobian_at(const_field([1, 0, 0]), ChartPoint(0.2, -0.1, 0.6))
        assert np.allclose(J, 0.0, atol=1e-9)

    def test_linear_field_diag(self):
        f = comp_field(lambda x, y, t: x, lambda x, y, t: -y, lambda x, y, t: 0 * x)
        J = jacobian_at(f, ChartPoint(0.3, 0.4, 0.1))
        assert np.allclose(J, np.diag([1.0, -1.0, 0.0]), atol=1e-9)

    def test_fd_matches_analytic_derivative(self):
        # field (0, y^2, 0): the (y, y) entry at y = 0.3 is the analytic 2y = 0.6
        f = comp_field(lambda x, y, t: 0 * x, lambda x, y, t: y**2, lambda x, y, t: 0 * x)
        J = jacobian_at(f, ChartPoint(0.0, 0.3, 0.0))
        assert abs(J[1, 1] - 0.6) < 1e-8


class TestCommutator:
    def test_field_commutes_with_itself(self):
        f = comp_field(lambda x, y, t: x * y, lambda x, y, t: np.sin(2 * np.pi * t), lambda x, y, t: 1 + 0 * x)
        pair = FieldPair(f, f, SolidTorusDomain())
        res = commutator_residual(pair, ChartPoint(0.2, 0.3, 0.4))
        assert res.norm < 1e-9

    def test_radial_and_rotation_commute(self):
        radial = comp_field(lambda x, y, t: x, lambda x, y, t: y, lambda x, y, t: 0 * x)
        rotation = comp_field(lambda x, y, t: -y, lambda x, y, t: x, lambda x, y, t: 0 * x)
        pair = FieldPair(radial, rotation, SolidTorusDomain())
        res = commutator_residual(pair, ChartPoint(0.5, -0.2, 0.9))
        assert res.norm < 1e-9

    def test_tilted_rotation_scenario_commutes(self, scenarios, rng):
        sc, _ = scenarios["tilted-rotation"]
        pts = np.stack([p.as_array() for p in section_samples(sc, rng, 100)])
        pts[:, 2] = rng.random(100)
        assert commutator_residual_grid(sc.pair, pts).max() < 1e-6

    def test_commuting_scenarios_on_grid(self, scenarios):
        for name in ("trivial-suspension", "rigid-rotation", "tilted-rotation",
                     "annulus-col", "normally-contracting"):
            sc, _ = scenarios[name]
            pts = sc.pair.domain.volume_grid(20)
            assert commutator_residual_grid(sc.pair, pts).max() < 1e-6, name


class TestCollinearity:
    def test_proportional_fields(self):
        y = const_field([0.3, -0.2, 1.0])
        x2 = const_field([0.6, -0.4, 2.0])
        pair = FieldPair(x2, y, SolidTorusDomain())
        assert collinearity_residual(pair, ChartPoint(0, 0, 0)) == pytest.approx(0.0, abs=1e-15)

    def test_orthonormal_pair(self):
        pair = FieldPair(const_field([1, 0, 0]), const_field([0, 1, 0]), SolidTorusDomain())
        assert collinearity_residual(pair, ChartPoint(0, 0, 0)) == pytest.approx(1.0)

    def test_annulus_scenario_hand_values(self, scenarios):
        sc, _ = scenarios["annulus-col"]
        assert collinearity_residual(sc.pair, ChartPoint(0.4, 0.0, 0.2)) < 1e-12
        assert abs(collinearity_residual(sc.pair, ChartPoint(0.4, 0.3, 0.2)) - 0.3) < 1e-12

    def test_reconstruction_equivalence(self, scenarios, rng):
        # residual 0 iff X - mu*Y vanishes to relative 1e-10
        sc, _ = scenarios["annulus-col"]
        on_col = ChartPoint(0.4, 0.0, 0.7)
        off_col = ChartPoint(0.4, 0.25, 0.7)
        for p, expect_zero in ((on_col, True), (off_col, False)):
            xv, yv = sc.pair.X(p), sc.pair.Y(p)
            mu = ratio_mu(sc.pair, p)
            err = np.linalg.norm(xv - mu * yv)
            bound = 1e-10 * (np.linalg.norm(xv) + np.linalg.norm(yv))
            assert (collinearity_residual(sc.pair, p) < 1e-12) == expect_zero
            assert (err < bound) == expect_zero


class TestRatio:
    def test_exact_proportionality(self):
        y = const_field([0.1, 0.2, 1.0])
        pair = FieldPair(const_field([0.3, 0.6, 3.0]), y, SolidTorusDomain())
        assert ratio_mu(pair, ChartPoint(0, 0, 0)) == pytest.approx(3.0)

    def test_orthogonal_projection_zero(self):
        pair = FieldPair(const_field([1, 0, 0]), const_field([0, 0, 1]), SolidTorusDomain())
        assert ratio_mu(pair, ChartPoint(0, 0, 0)) == pytest.approx(0.0)

    def test_scenario_values(self, scenarios):
        # tilted-rotation carries the projection ratio x^2 + y^2
        sc, _ = scenarios["tilted-rotation"]
        expect = sc.analytic["projection_ratio"]
        for x, y in ((0.0, 0.0), (0.3, 0.2), (-0.4, 0.1)):
            p = sc.pair.domain.section_point(x, y)
            assert abs(ratio_mu(sc.pair, p) - expect(x, y)) < 1e-8
        # annulus-col: ratio on the collinearity locus is the x coordinate
        ac, _ = scenarios["annulus-col"]
        assert ratio_mu(ac.pair, ChartPoint(0.4, 0.0, 0.2)) == pytest.approx(0.4)

    def test_covariance_and_shift_invariance(self, scenarios, rng):
        sc, _ = scenarios["tilted-rotation"]
        X, Y, dom = sc.pair.X, sc.pair.Y, sc.pair.domain
        p = ChartPoint(0.3, -0.2, 0.6)
        base = ratio_mu(sc.pair, p)
        scaled = FieldPair(FieldSpec(func=lambda q: 2.5 * X(q)), Y, dom)
        assert ratio_mu(scaled, p) == pytest.approx(2.5 * base, rel=1e-12)
        shifted = FieldPair(FieldSpec(func=lambda q: X(q) + 0.0 * Y(q)), Y, dom)
        assert ratio_mu(shifted, p) == pytest.approx(base, rel=1e-12)

    def test_zero_denominator(self):
        pair = FieldPair(const_field([1, 0, 0]), const_field([0, 0, 0]), SolidTorusDomain())
        with pytest.raises(ZeroDenominator):
            ratio_mu(pair, ChartPoint(0, 0, 0))


class TestFindCollinearity:
    def test_identical_fields_return_whole_grid(self):
        y = const_field([0, 0, 1])
        pair = FieldPair(y, y, SolidTorusDomain())
        found = find_collinearity(pair, grid_res=8, refine_tol=1e-8)
        assert len(found) == 8**3  # degenerate everywhere-collinear case, by count

    def test_annulus_locus_localized(self, scenarios):
        sc, _ = scenarios["annulus-col"]
        found = find_collinearity(sc.pair, grid_res=16, refine_tol=1e-8)
        assert found and all(abs(p.y) < 1e-6 for p in found)

    def test_nowhere_collinear_empty(self):
        pair = FieldPair(const_field([1, 0, 0]), const_field([0, 0, 1]), SolidTorusDomain())
        assert find_collinearity(pair, grid_res=8, refine_tol=1e-8) == []


class TestFrame:
    def test_canonical_frame_for_unit_drift(self, scenarios):
        sc, frame = scenarios["trivial-suspension"]
        m = frame.matrix(ChartPoint(0.3, 0.1, 0.2))
        assert np.allclose(m, np.eye(3))

    def test_rotation_suspension_determinant(self):
        y = comp_field(lambda x, y, t: -y, lambda x, y, t: x, lambda x, y, t: np.ones_like(x), name="rot")
        pair = FieldPair(comp_field(lambda x, y, t: x, lambda x, y, t: y, lambda x, y, t: 0 * x), y, SolidTorusDomain())
        frame = build_frame(pair)
        m = frame.matrix(ChartPoint(0.2, 0.0, 0.0))
        assert np.allclose(m[:, 2], [0.0, 0.2, 1.0])
        assert np.linalg.det(m) == pytest.approx(1.0)

    def test_nontransverse_reference_rejected(self):
        flat = const_field([1.0, 0.0, 0.0])
        pair = FieldPair(const_field([0, 1, 0]), flat, SolidTorusDomain())
        with pytest.raises(DegenerateFrame):
            build_frame(pair)

    def test_e3_is_reference_evaluator_and_fiber_tangency(self, scenarios, rng):
        sc, frame = scenarios["tilted-rotation"]
        assert frame.e3 is sc.pair.Y
        pts = rng.random((1000, 3)) * np.array([0.8, 0.8, 1.0]) - np.array([0.4, 0.4, 0])
        dom = sc.pair.domain
        for e in (frame.e1, frame.e2):
            rates = dom.fibration_rate(e(pts))
            assert np.max(np.abs(rates)) < 1e-14

    def test_e1_tangent_to_declared_col(self, scenarios):
        sc, frame = scenarios["normally-contracting"]
        pts = np.stack([np.linspace(-0.5, 0.5, 9), np.zeros(9), np.linspace(0, 0.9, 9)], axis=-1)
        e1_vals = frame.e1(pts)
        assert np.max(np.abs(e1_vals[:, 1])) == 0.0  # no y-component on {y = 0}
