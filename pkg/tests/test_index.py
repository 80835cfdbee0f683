"""Isolated-zero indices, essential-torus indices, linking numbers, spectra."""

import numpy as np
import pytest

from torlink.chart import ChartPoint, SolidTorusDomain
from torlink.errors import LoopMeetsCol, NotFixed, ZeroOnSphere
from torlink.fields import CollinearitySurface, FieldPair, FieldSpec, build_frame
from torlink.index import (
    classify_return_derivative,
    fixed_point_spectrum,
    index_isolated_zero,
    index_region,
    linking_numbers,
    verify_link_index,
)
from torlink.degree import PathSample, circle_degree
from torlink.index import _normalized_fiber_component


def linear_field(s1, s2, s3, center=(0.0, 0.0, 0.5)):
    cx, cy, ct = center

    def f(pts):
        dx = pts[..., 0] - cx
        dy = pts[..., 1] - cy
        dt = (pts[..., 2] - ct + 0.5) % 1.0 - 0.5
        return np.stack([s1 * dx, s2 * dy, s3 * dt], axis=-1)

    return FieldSpec(func=f, name=f"linear({s1},{s2},{s3})")


class TestIsolatedZero:
    @pytest.mark.parametrize(
        "dim_stable,signs",
        [(0, (1, 1, 1)), (1, (1, 1, -1)), (2, (1, -1, -1)), (3, (-1, -1, -1))],
    )
    def test_hyperbolic_index_is_parity_of_stable_dimension(self, dim_stable, signs):
        rep = index_isolated_zero(linear_field(*signs), ChartPoint(0, 0, 0.5), radius=0.1)
        assert rep.value == (-1) ** dim_stable
        assert rep.residual < 0.01

    def test_invariant_under_radius_shrinking(self):
        f = linear_field(1, 1, -1)
        values = {
            index_isolated_zero(f, ChartPoint(0, 0, 0.5), radius=r).value
            for r in (0.2, 0.1, 0.02)
        }
        assert values == {-1}

    def test_chart_orientation_independence(self):
        # recompute in the (x, y)-swapped chart: the integer must not move
        f = linear_field(1, -1, 1)

        def swapped(pts):
            q = pts[:, [1, 0, 2]]
            v = f(q)
            return v[:, [1, 0, 2]]

        g = FieldSpec(func=swapped, name="swapped")
        a = index_isolated_zero(f, ChartPoint(0, 0, 0.5), radius=0.1).value
        b = index_isolated_zero(g, ChartPoint(0, 0, 0.5), radius=0.1).value
        assert a == b == -1

    def test_zero_on_sphere_rejected(self):
        f = linear_field(1, 1, 1)
        ring = FieldSpec(func=lambda pts: f(pts) * (1 - 10 * np.linalg.norm(
            np.stack([pts[..., 0], pts[..., 1], (pts[..., 2] - 0.5 + 0.5) % 1 - 0.5], axis=-1),
            axis=-1, keepdims=True)))
        with pytest.raises(ZeroOnSphere):
            index_isolated_zero(ring, ChartPoint(0, 0, 0.5), radius=0.1)


class TestRegionIndex:
    def test_constant_gauss_map_has_zero_degree(self, scenarios):
        sc, frame = scenarios["trivial-suspension"]
        pair = FieldPair(sc.pair.Y, sc.pair.Y, sc.pair.domain)
        rep = index_region(pair, frame)
        assert rep.value == 0

    def test_model_pullback_region_index(self, scenarios):
        sc, frame = scenarios["model-pullback"]
        rep = index_region(sc.pair, frame)
        assert abs(rep.value) == 3
        assert rep.residual < 0.01
        assert rep.method == "essential-torus"

    def test_split_winding_cross_checked_against_linking(self, scenarios):
        sc, frame = scenarios["split-winding"]
        rep = index_region(sc.pair, frame)
        link = linking_numbers(sc.pair, frame)
        assert abs(rep.value) == abs(link.ell_plus - link.ell_minus) == 1

    def test_homotopy_invariance_along_pencil(self, scenarios):
        sc, frame = scenarios["split-winding"]
        values = set()
        for s in np.linspace(0.0, 0.1, 5):
            shifted = FieldSpec(func=lambda p, s=s: sc.pair.X(p) - s * sc.pair.Y(p))
            values.add(index_region(sc.pair, frame, X=shifted).value)
        assert len(values) == 1


class TestLinking:
    def test_constant_direction_normal(self, scenarios):
        # N = y * (constant planar vector): no winding on either side
        sc, frame = scenarios["annulus-col"]
        rep = linking_numbers(sc.pair, frame)
        assert (rep.ell_plus, rep.ell_minus) == (0, 0)

    def test_one_turn_both_sides(self):
        # N = y * (cos 2 pi theta, sin 2 pi theta): one full turn on each loop
        def f(pts):
            x, y, t = pts[..., 0], pts[..., 1], pts[..., 2]
            return np.stack(
                [y * np.cos(2 * np.pi * t), y * np.sin(2 * np.pi * t), np.ones_like(x)],
                axis=-1,
            )

        pair = FieldPair(
            FieldSpec(func=f, name="turner"),
            FieldSpec(func=lambda p: np.broadcast_to([0.0, 0.0, 1.0], p.shape).copy(), name="drift"),
            SolidTorusDomain(),
            declared_col=CollinearitySurface("y=0"),
        )
        frame = build_frame(pair)
        rep = linking_numbers(pair, frame)
        assert (rep.ell_plus, rep.ell_minus) == (1, 1)

    def test_split_winding_designed_values(self, scenarios):
        sc, frame = scenarios["split-winding"]
        rep = linking_numbers(sc.pair, frame)
        assert (rep.ell_plus, rep.ell_minus) == sc.designed_linking == (1, 0)

    def test_offset_independence_and_noncircular_loop(self, scenarios):
        sc, frame = scenarios["split-winding"]
        a = linking_numbers(sc.pair, frame, y_offset=0.3)
        b = linking_numbers(sc.pair, frame, y_offset=0.55)
        assert (a.ell_plus, a.ell_minus) == (b.ell_plus, b.ell_minus)
        # a wobbling loop homotopic to the circle gives the same winding
        t = np.linspace(0.0, 1.0, 257)
        pts = np.stack(
            [0.08 * np.sin(2 * np.pi * t), 0.4 + 0.08 * np.cos(2 * np.pi * t), t % 1.0],
            axis=-1,
        )
        pts[-1] = pts[0]
        wobble = PathSample(pts, closed=True, wrap_cols=(2,))
        deg = circle_degree(_normalized_fiber_component(sc.pair, frame), wobble)
        assert deg == a.ell_plus

    def test_loop_through_col_rejected(self, scenarios):
        sc, frame = scenarios["split-winding"]
        with pytest.raises(LoopMeetsCol):
            linking_numbers(sc.pair, frame, y_offset=0.0)


class TestVerifyLinkIndex:
    def test_degenerate_everywhere_collinear_reports_precondition(self, scenarios):
        sc, frame = scenarios["trivial-suspension"]
        pair = FieldPair(sc.pair.Y, sc.pair.Y, sc.pair.domain)
        with pytest.raises(LoopMeetsCol):
            verify_link_index(pair, frame)

    def test_normally_contracting_case(self, scenarios):
        sc, frame = scenarios["normally-contracting"]
        rep = verify_link_index(sc.pair, frame)
        assert (rep.linking.ell_plus, rep.linking.ell_minus) == (0, 0)
        assert rep.index.value == 0
        assert rep.identity_holds

    def test_split_winding_identity(self, scenarios):
        sc, frame = scenarios["split-winding"]
        rep = verify_link_index(sc.pair, frame)
        assert abs(rep.index.value) == 1 == abs(rep.linking.ell_plus - rep.linking.ell_minus)
        assert rep.identity_holds

    def test_identity_on_all_builtin_scenarios_with_preconditions(self, scenarios):
        for name in ("annulus-col", "normally-contracting", "split-winding", "model-pullback"):
            sc, frame = scenarios[name]
            rep = verify_link_index(sc.pair, frame)
            assert rep.identity_holds, name


class TestSpectrum:
    def test_trivial_suspension_identity_like(self, scenarios):
        sc, frame = scenarios["trivial-suspension"]
        rep = fixed_point_spectrum(sc.pair, frame, ChartPoint(0.2, 0.1, 0.0))
        assert rep.classification == "identity-like"
        assert np.allclose(rep.eigenvalues, 1.0, atol=1e-8)

    def test_normally_contracting_multiplier(self, scenarios):
        sc, frame = scenarios["normally-contracting"]
        x0 = 0.3
        rep = fixed_point_spectrum(sc.pair, frame, sc.pair.domain.section_point(x0, 0.0))
        expect = sc.analytic["multiplier"](x0)
        assert rep.classification == "partially-hyperbolic"
        err = min(abs(z - expect) for z in rep.eigenvalues)
        assert err < 1e-5
        assert min(abs(z) for z in rep.eigenvalues) < 1 - 1e-3

    def test_constructed_shear_is_parabolic(self):
        eigs, label = classify_return_derivative(np.array([[1.0, 1.0], [0.0, 1.0]]))
        assert label == "parabolic"
        assert np.allclose(eigs, 1.0)

    def test_moving_point_rejected(self, scenarios):
        sc, frame = scenarios["normally-contracting"]
        with pytest.raises(NotFixed):
            fixed_point_spectrum(sc.pair, frame, sc.pair.domain.section_point(0.3, 0.2))
