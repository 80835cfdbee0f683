"""Return-map orbits, stable limits, cone ratios, and segment sweeps."""

import numpy as np
import pytest

from torlink.chart import ChartPoint
from torlink.dynamics import cone_ratio, iterate_return, segment_sweep
from torlink.errors import FixedPoint, SegmentMeetsCol
from torlink.section import first_return, holonomy, normal_decompose
from conftest import section_samples


class TestIterateReturn:
    def test_col_point_is_immediately_fixed(self, scenarios):
        sc, frame = scenarios["normally-contracting"]
        p = sc.pair.domain.section_point(0.3, 0.0)
        orbit = iterate_return(sc.pair, frame, p)
        assert orbit.converged and orbit.n_steps == 0
        assert orbit.limit.distance(p) < 1e-9

    def test_trivial_suspension_everything_fixed(self, scenarios):
        sc, frame = scenarios["trivial-suspension"]
        orbit = iterate_return(sc.pair, frame, ChartPoint(0.4, -0.2, 0.0))
        assert orbit.converged and orbit.n_steps == 0

    def test_contracting_orbit_converges_to_col(self, scenarios):
        sc, frame = scenarios["normally-contracting"]
        orbit = iterate_return(sc.pair, frame, ChartPoint(0.3, 0.2, 0.0), tol=1e-9)
        assert orbit.converged
        assert abs(orbit.limit.y) < 1e-6
        # mu is constant along this orbit, so its geometric extrapolation is 0.3
        mu_limit = normal_decompose(sc.pair, frame, orbit.limit).mu
        assert abs(mu_limit - 0.3) < 1e-5
        # the recorded nu sequence contracts at the closed-form rate
        kappa = sc.analytic["multiplier"](0.3)
        ratios = orbit.nu_values[1:6] / orbit.nu_values[0:5]
        assert np.allclose(ratios, kappa, atol=1e-6)

    def test_limits_are_return_fixed(self, scenarios, rng):
        sc, frame = scenarios["normally-contracting"]
        tol = 1e-9
        for p in section_samples(sc, rng, 5, r_lo=0.1, r_hi=0.5, min_abs_y=0.05):
            orbit = iterate_return(sc.pair, frame, p, tol=tol)
            assert orbit.converged
            rec = first_return(sc.pair, frame, orbit.limit)
            assert rec.start.distance(rec.end) < 10 * tol

    def test_mu_nu_ratio_recorded(self, scenarios):
        sc, frame = scenarios["normally-contracting"]
        orbit = iterate_return(sc.pair, frame, ChartPoint(0.3, 0.3, 0.0))
        # mu = x is preserved by the return map here, so the recorded bound is 0
        assert orbit.mu_nu_ratio_max == pytest.approx(0.0, abs=1e-9)
        assert len(orbit.mu_values) == len(orbit.nu_values) == orbit.n_steps + 1


class TestConeRatio:
    def test_zero_when_mu_constant_along_returns(self, scenarios):
        sc, frame = scenarios["normally-contracting"]
        assert cone_ratio(sc.pair, frame, ChartPoint(0.3, 0.2, 0.0)) < 1e-9

    def test_rotation_invariant_mu_gives_zero(self, scenarios):
        sc, frame = scenarios["rigid-rotation"]
        ratio = cone_ratio(sc.pair, frame, ChartPoint(0.3, 0.0, 0.0), flow_tol=1e-12)
        assert ratio < 1e-12

    def test_fixed_point_rejected(self, scenarios):
        sc, frame = scenarios["normally-contracting"]
        with pytest.raises(FixedPoint):
            cone_ratio(sc.pair, frame, sc.pair.domain.section_point(0.3, 0.0))

    def test_trend_measured_toward_col(self, scenarios):
        # measured sequence only; no limit asserted
        sc, frame = scenarios["tilted-rotation"]
        ratios = [
            cone_ratio(sc.pair, frame, sc.pair.domain.section_point(0.0, nu))
            for nu in (0.4, 0.2, 0.1)
        ]
        assert all(np.isfinite(r) for r in ratios)


class TestSegmentSweep:
    def test_fixed_point_degenerate_segment(self, scenarios):
        sc, frame = scenarios["annulus-col"]
        assert segment_sweep(sc.pair, frame, ChartPoint(0.2, 0.3, 0.0)) == 0.0

    def test_rigid_rotation_against_dense_chord_oracle(self, scenarios):
        # oracle: dense sampling of the normal direction along the chord from
        # x to its double rotation, unwrapped with numpy
        sc, frame = scenarios["rigid-rotation"]
        a = sc.analytic["rotation_rate"]
        start = np.array([0.3, 0.0])
        end = 0.3 * np.array([np.cos(2 * a), np.sin(2 * a)])
        w = np.linspace(0.0, 1.0, 20001)[:, None]
        chord = (1 - w) * start + w * end
        ang = np.unwrap(np.arctan2(chord[:, 1], chord[:, 0]))  # N is radial here
        oracle = ang[-1] - ang[0]
        sweep = segment_sweep(sc.pair, frame, ChartPoint(0.3, 0.0, 0.0))
        assert abs(sweep - oracle) < 1e-6

    def test_zero_linking_scenario_sweeps_stay_small(self, scenarios):
        sc, frame = scenarios["normally-contracting"]
        for nu in (0.3, 0.15, 0.08):
            sweep = segment_sweep(sc.pair, frame, sc.pair.domain.section_point(0.3, nu))
            assert abs(sweep) < 2 * np.pi - 0.5

    def test_crossing_segment_rejected(self, scenarios):
        # build a pair whose second return lands on the other side of {y=0}
        sc, frame = scenarios["normally-contracting"]
        from torlink.fields import FieldPair, FieldSpec

        def flipper(pts):
            # strong downward push: P(x, y) crosses the annulus
            return np.stack(
                [0 * pts[..., 0], -2.0 + 0 * pts[..., 0], np.ones_like(pts[..., 0])],
                axis=-1,
            )

        pair = FieldPair(
            sc.pair.X,
            FieldSpec(func=flipper, name="pusher"),
            sc.pair.domain,
            declared_col=sc.pair.declared_col,
        )
        from torlink.fields import build_frame

        fr = build_frame(pair)
        with pytest.raises(SegmentMeetsCol):
            segment_sweep(pair, fr, ChartPoint(0.0, 0.3, 0.0))


class TestNoAntipode:
    def test_holonomy_never_reverses_directions_near_col(self, scenarios, rng):
        # frame coordinates of a unit vector and its holonomy image are never
        # opposite, sampled near the collinearity annulus
        sc, frame = scenarios["normally-contracting"]
        for _ in range(50):
            x = -0.5 + rng.random()
            nu = 0.02 + 0.1 * rng.random()
            p = sc.pair.domain.section_point(x, nu * (1 if rng.random() < 0.5 else -1))
            t = rng.random()
            rec = holonomy(sc.pair, frame, p, t if t > 0.05 else 0.5)
            phi = 2 * np.pi * rng.random()
            u = np.array([np.cos(phi), np.sin(phi)])
            v = rec.dP @ u
            cosang = float(u @ v / np.linalg.norm(v))
            assert cosang > -1.0 + 1e-3
