"""Adaptive flow maps, variational flow, and fiber-crossing events."""

import numpy as np
import pytest

from torlink.chart import ChartPoint, SolidTorusDomain
from torlink.errors import LeftDomain, NoCrossing, NotTransverse
from torlink.fields import FieldSpec
from torlink.flow import cross_fiber, integrate, variational
from conftest import section_samples


def comp_field(fx, fy, ft, name="f"):
    def func(p):
        x, y, t = p[..., 0], p[..., 1], p[..., 2]
        return np.stack(
            [np.broadcast_to(v, x.shape) for v in (fx(x, y, t), fy(x, y, t), ft(x, y, t))],
            axis=-1,
        ).astype(float)

    return FieldSpec(func=func, name=name)


DRIFT = comp_field(lambda x, y, t: 0 * x, lambda x, y, t: 0 * x, lambda x, y, t: 1 + 0 * x)
ROTATION = comp_field(lambda x, y, t: -y, lambda x, y, t: x, lambda x, y, t: 0 * x)


class TestIntegrate:
    def test_constant_angular_drift(self):
        res = integrate(DRIFT, ChartPoint(0.1, 0.2, 0.0), 0.25)
        assert res.endpoint.as_array() == pytest.approx([0.1, 0.2, 0.25], abs=1e-12)

    def test_quarter_rotation_closed_form(self):
        res = integrate(ROTATION, ChartPoint(0.3, 0.0, 0.0), np.pi / 2)
        assert res.endpoint.as_array() == pytest.approx([0.0, 0.3, 0.0], abs=1e-9)

    def test_radial_escape_leaves_domain(self):
        radial = comp_field(lambda x, y, t: x, lambda x, y, t: 0 * x, lambda x, y, t: 0 * x)
        dom = SolidTorusDomain(disc_radius=1.0)
        with pytest.raises(LeftDomain) as err:
            integrate(radial, ChartPoint(0.55, 0.0, 0.0), 10.0, domain=dom)
        # exit when 0.55 * e^t = 1
        assert err.value.time_of_exit == pytest.approx(np.log(1 / 0.55), abs=1e-6)

    def test_time_reversal(self):
        p = ChartPoint(0.3, -0.1, 0.2)
        tol = 1e-10
        fwd = integrate(ROTATION, p, 1.7, tol=tol)
        back = integrate(ROTATION, fwd.endpoint, -1.7, tol=tol)
        assert back.endpoint.distance(p) < 10 * max(tol, 1e-12) + 1e-10

    def test_flow_composition_property(self):
        p = ChartPoint(0.25, 0.1, 0.4)
        tol = 1e-10
        whole = integrate(ROTATION, p, 1.1, tol=tol)
        half = integrate(ROTATION, p, 0.6, tol=tol)
        rest = integrate(ROTATION, half.endpoint, 0.5, tol=tol)
        assert rest.endpoint.distance(whole.endpoint) < 10 * tol + 1e-12


class TestVariational:
    def test_zero_time_identity(self):
        res = variational(ROTATION, ChartPoint(0.2, 0.1, 0.0), 0.0)
        assert np.allclose(res.dflow, np.eye(3))

    def test_linear_hyperbolic_closed_form(self):
        f = comp_field(lambda x, y, t: x, lambda x, y, t: -y, lambda x, y, t: 0 * x)
        res = variational(f, ChartPoint(0.1, 0.1, 0.0), 1.0)
        expect = np.diag([np.e, 1.0 / np.e, 1.0])
        assert np.abs(res.dflow - expect).max() < 1e-7

    def test_quarter_turn_rotation_matrix(self):
        res = variational(ROTATION, ChartPoint(0.3, 0.0, 0.0), np.pi / 2)
        expect = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        assert np.abs(res.dflow - expect).max() < 1e-8

    def test_orientation_preserved(self, scenarios, rng):
        sc, _ = scenarios["tilted-rotation"]
        for p in section_samples(sc, rng, 10):
            t = 0.2 + rng.random()
            res = variational(sc.pair.Y, p, t, domain=sc.pair.domain)
            assert np.linalg.det(res.dflow) > 0

    def test_cocycle_property(self):
        p = ChartPoint(0.2, -0.1, 0.0)
        f = ROTATION
        a = variational(f, p, 0.8)
        b = variational(f, a.endpoint, 0.5)
        whole = variational(f, p, 1.3)
        assert np.abs(b.dflow @ a.dflow - whole.dflow).max() < 1e-8

    def test_commuting_partner_invariance(self, scenarios, rng):
        # transporting X by the derivative flow of Y reproduces X at the endpoint
        for name in ("rigid-rotation", "tilted-rotation"):
            sc, _ = scenarios[name]
            pair = sc.pair
            for p in section_samples(sc, rng, 50):
                for t in (0.1, 0.5, 1.0):
                    res = variational(pair.Y, p, t, domain=pair.domain)
                    lhs = res.dflow @ pair.X(p)
                    rhs = pair.X(res.endpoint)
                    assert np.linalg.norm(lhs - rhs) < 1e-6 * max(
                        np.linalg.norm(pair.X(p)), 1e-12
                    ), (name, p)


class TestCrossFiber:
    def test_unit_speed_full_turn(self):
        ev = cross_fiber(DRIFT, ChartPoint(0.1, 0.2, 0.0), target_level=0.0, min_time=0.5)
        assert abs(ev.time - 1.0) < 1e-10
        assert ev.direction == +1

    def test_double_speed_half_time(self):
        fast = comp_field(lambda x, y, t: 0 * x, lambda x, y, t: 0 * x, lambda x, y, t: 2 + 0 * x)
        ev = cross_fiber(fast, ChartPoint(0.1, 0.2, 0.0), target_level=0.0, min_time=0.1)
        assert abs(ev.time - 0.5) < 1e-10

    def test_tilted_scenario_matches_analytic_return_time(self, scenarios):
        sc, _ = scenarios["tilted-rotation"]
        p = sc.pair.domain.section_point(0.3, 0.0)
        ev = cross_fiber(sc.pair.Y, p, target_level=0.0, min_time=0.5, domain=sc.pair.domain)
        assert abs(ev.time - sc.analytic["return_time"](0.3, 0.0)) < 1e-8
        assert sc.pair.domain.fibration(ev.point.as_array()) == pytest.approx(0.0, abs=1e-10)

    def test_trivial_crossing_at_departure(self):
        p = ChartPoint(0.1, 0.2, 0.0)
        ev = cross_fiber(DRIFT, p, target_level=0.0, min_time=0.0)
        assert ev.time == 0.0 and ev.point == p

    def test_no_crossing_within_horizon(self):
        with pytest.raises(NoCrossing):
            cross_fiber(DRIFT, ChartPoint(0, 0, 0), target_level=0.0, min_time=0.5, horizon=0.4)

    def test_not_transverse_detected(self):
        # angular rate flips sign at x = 1/4 while the target is still ahead
        wobble = comp_field(
            lambda x, y, t: 1 + 0 * x, lambda x, y, t: 0 * x, lambda x, y, t: np.cos(2 * np.pi * x)
        )
        with pytest.raises(NotTransverse):
            cross_fiber(wobble, ChartPoint(-0.2, 0.0, 0.0), target_level=0.35, min_time=0.0)
        backwards = comp_field(lambda x, y, t: 0 * x, lambda x, y, t: 0 * x, lambda x, y, t: -1 + 0 * x)
        with pytest.raises(NotTransverse):
            cross_fiber(backwards, ChartPoint(0.1, 0.0, 0.0), target_level=0.5, min_time=0.0)
