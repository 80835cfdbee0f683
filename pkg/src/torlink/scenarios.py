"""Built-in scenario library.

Each scenario packages a field pair on the solid torus that isolates one
verifiable identity with an independently computable answer:

* ``trivial-suspension``  -- Y = (0, 0, 1), X radial.  Every section point is
  fixed by the return map; all holonomy derivatives are trivial.
* ``rigid-rotation``      -- Y = (-a y, a x, 1), X = radial + (x^2+y^2) Y with
  a = 0.7.  The pair commutes exactly; the return map is the rigid rotation
  by a, the return time is constant, and the projection ratio x^2 + y^2 is
  rotation-invariant.
* ``tilted-rotation``     -- same fields over the tilted fibration
  sigma = theta - 0.3 x.  The tilt makes the transition time depend on the
  start point, so the return-time identity has both sides nonzero.
* ``annulus-col``         -- Y = (0, 0, 1), X = (0, y, x).  The collinearity
  locus is exactly the flat annulus {y = 0} and the ratio of X over Y on it
  is the x coordinate.
* ``normally-contracting``-- Y = (0, -lambda y, h(x)), X = (0, y, x h(x)) with
  lambda = 0.5 and h(x) = 1 + 0.25 x.  Commutes exactly; {y = 0} is a
  normally contracting invariant annulus, the return time 1/h(x) has
  nonvanishing derivative along it, and the transverse eigenvalue of the
  return map at a point (x0, 0) is exp(-lambda / h(x0)) in closed form.
* ``split-winding``       -- Y = (0, 0, 1) and a deliberately non-commuting X
  whose normalized fiber component winds once around the circle on the
  {y > 0} side of the annulus and not at all on the {y < 0} side, so the
  designed linking numbers are (1, 0) and the region index is +/-1.
* ``model-pullback``      -- the two-exponent model map with windings
  (2, -1) pulled back to a field through the essential-torus parametrization;
  designed linking numbers (2, -1) and region index of absolute value 3.
* ``noncommuting-control``-- X = (1, 0, 0) against the tilted rotation; the
  return-time identity is expected to fail on it, which keeps the identity
  tests honest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .chart import SolidTorusDomain, reduce_angle
from .degree import model_map
from .fields import CollinearitySurface, FieldPair, FieldSpec, Frame, build_frame


@dataclass
class Scenario:
    """A named field pair plus the analytic facts tests can lean on."""

    name: str
    pair: FieldPair
    summary: str
    commuting: bool
    designed_linking: Optional[tuple[int, int]] = None
    analytic: dict = field(default_factory=dict)

    def frame(self) -> Frame:
        return build_frame(self.pair)


def _spec(name, fx, fy, ft, jac=None):
    def func(pts):
        x, y, th = pts[..., 0], pts[..., 1], pts[..., 2]
        return np.stack(
            [np.broadcast_to(c, x.shape) for c in (fx(x, y, th), fy(x, y, th), ft(x, y, th))],
            axis=-1,
        ).astype(float)

    return FieldSpec(func=func, jac=jac, name=name)


def _jac_from_rows(rows: Callable[[np.ndarray, np.ndarray, np.ndarray], list]):
    """Assemble a vectorized (..., 3, 3) Jacobian from row-of-entry callables."""

    def jac(pts):
        x, y, th = pts[..., 0], pts[..., 1], pts[..., 2]
        entries = rows(x, y, th)
        out = np.empty(x.shape + (3, 3), dtype=float)
        for i in range(3):
            for j in range(3):
                out[..., i, j] = entries[i][j]
        return out

    return jac


ROTATION_RATE = 0.7
FIBRATION_TILT = 0.3
CONTRACTION_RATE = 0.5


def _radial_rotation_pair(tilt: float) -> FieldPair:
    a = ROTATION_RATE

    X = _spec(
        "radial-plus-r2-rotation",
        lambda x, y, t: x - a * y * (x**2 + y**2),
        lambda x, y, t: y + a * x * (x**2 + y**2),
        lambda x, y, t: x**2 + y**2,
        jac=_jac_from_rows(
            lambda x, y, t: [
                (1 - 2 * a * x * y, -a * (x**2 + 3 * y**2), 0.0 * x),
                (a * (3 * x**2 + y**2), 1 + 2 * a * x * y, 0.0 * x),
                (2 * x, 2 * y, 0.0 * x),
            ]
        ),
    )
    Y = _spec(
        "rotation-suspension",
        lambda x, y, t: -a * y,
        lambda x, y, t: a * x,
        lambda x, y, t: np.ones_like(x),
        jac=_jac_from_rows(
            lambda x, y, t: [
                (0.0 * x, -a + 0.0 * x, 0.0 * x),
                (a + 0.0 * x, 0.0 * x, 0.0 * x),
                (0.0 * x, 0.0 * x, 0.0 * x),
            ]
        ),
    )
    return FieldPair(X, Y, SolidTorusDomain(disc_radius=1.0, tilt=tilt))


def _rotation_return_time(x: float, y: float, tilt: float, a: float = ROTATION_RATE) -> float:
    """Closed-form return time of the rotation suspension over the tilted fibration.

    The orbit rotates rigidly while theta drifts at unit rate, so the return
    time solves the scalar equation

        tau = 1 + tilt * (x cos(a tau) - y sin(a tau) - x),

    which a bracketing root solve pins to machine precision (independent of
    any ODE integration).
    """

    def g(tau):
        return tau - 1.0 - tilt * (x * np.cos(a * tau) - y * np.sin(a * tau) - x)

    lo, hi = 0.25, 2.5
    return float(brentq(g, lo, hi, xtol=1e-15, rtol=8.9e-16))


def _rotation_return_point(x: float, y: float, tilt: float, a: float = ROTATION_RATE):
    tau = _rotation_return_time(x, y, tilt, a)
    c, s = np.cos(a * tau), np.sin(a * tau)
    return (x * c - y * s, x * s + y * c), tau


def _trivial_suspension() -> Scenario:
    X = _spec(
        "radial",
        lambda x, y, t: x,
        lambda x, y, t: y,
        lambda x, y, t: 0.0 * x,
        jac=_jac_from_rows(
            lambda x, y, t: [
                (np.ones_like(x), 0.0 * x, 0.0 * x),
                (0.0 * x, np.ones_like(x), 0.0 * x),
                (0.0 * x, 0.0 * x, 0.0 * x),
            ]
        ),
    )
    Y = _spec(
        "unit-drift",
        lambda x, y, t: 0.0 * x,
        lambda x, y, t: 0.0 * x,
        lambda x, y, t: np.ones_like(x),
        jac=lambda pts: np.zeros(pts.shape[:-1] + (3, 3)),
    )
    pair = FieldPair(X, Y, SolidTorusDomain(disc_radius=1.0))
    return Scenario(
        name="trivial-suspension",
        pair=pair,
        summary="unit angular drift; every section point is a fixed point of the return map",
        commuting=True,
        designed_linking=(0, 0),
        analytic={"return_time": lambda x, y: 1.0},
    )


def _rigid_rotation() -> Scenario:
    pair = _radial_rotation_pair(tilt=0.0)
    return Scenario(
        name="rigid-rotation",
        pair=pair,
        summary="commuting rotation suspension; return map is the rigid rotation by 0.7 rad",
        commuting=True,
        designed_linking=(0, 0),
        analytic={
            "rotation_rate": ROTATION_RATE,
            "return_time": lambda x, y: 1.0,
            "projection_ratio": lambda x, y: x**2 + y**2,
        },
    )


def _tilted_rotation() -> Scenario:
    pair = _radial_rotation_pair(tilt=FIBRATION_TILT)
    return Scenario(
        name="tilted-rotation",
        pair=pair,
        summary="same commuting pair over the tilted fibration; return time depends on the point",
        commuting=True,
        designed_linking=(0, 0),
        analytic={
            "rotation_rate": ROTATION_RATE,
            "tilt": FIBRATION_TILT,
            "return_time": lambda x, y: _rotation_return_time(x, y, FIBRATION_TILT),
            "return_point": lambda x, y: _rotation_return_point(x, y, FIBRATION_TILT),
            "projection_ratio": lambda x, y: x**2 + y**2,
        },
    )


def _annulus_col() -> Scenario:
    X = _spec(
        "fiber-shear",
        lambda x, y, t: 0.0 * x,
        lambda x, y, t: y,
        lambda x, y, t: x,
        jac=_jac_from_rows(
            lambda x, y, t: [
                (0.0 * x, 0.0 * x, 0.0 * x),
                (0.0 * x, np.ones_like(x), 0.0 * x),
                (np.ones_like(x), 0.0 * x, 0.0 * x),
            ]
        ),
    )
    Y = _spec(
        "unit-drift",
        lambda x, y, t: 0.0 * x,
        lambda x, y, t: 0.0 * x,
        lambda x, y, t: np.ones_like(x),
        jac=lambda pts: np.zeros(pts.shape[:-1] + (3, 3)),
    )
    pair = FieldPair(
        X, Y, SolidTorusDomain(disc_radius=1.0), declared_col=CollinearitySurface("y=0")
    )
    return Scenario(
        name="annulus-col",
        pair=pair,
        summary="collinearity locus is exactly the annulus {y = 0} with ratio mu = x on it",
        commuting=True,
        designed_linking=(0, 0),
        analytic={"mu_on_col": lambda x: x},
    )


def _h(x):
    return 1.0 + 0.25 * x


def _normally_contracting() -> Scenario:
    lam = CONTRACTION_RATE
    X = _spec(
        "fiber-shear-scaled",
        lambda x, y, t: 0.0 * x,
        lambda x, y, t: y,
        lambda x, y, t: x * _h(x),
        jac=_jac_from_rows(
            lambda x, y, t: [
                (0.0 * x, 0.0 * x, 0.0 * x),
                (0.0 * x, np.ones_like(x), 0.0 * x),
                (1.0 + 0.5 * x, 0.0 * x, 0.0 * x),
            ]
        ),
    )
    Y = _spec(
        "contracting-drift",
        lambda x, y, t: 0.0 * x,
        lambda x, y, t: -lam * y,
        lambda x, y, t: _h(x),
        jac=_jac_from_rows(
            lambda x, y, t: [
                (0.0 * x, 0.0 * x, 0.0 * x),
                (0.0 * x, -lam + 0.0 * x, 0.0 * x),
                (0.25 + 0.0 * x, 0.0 * x, 0.0 * x),
            ]
        ),
    )
    pair = FieldPair(
        X, Y, SolidTorusDomain(disc_radius=1.0), declared_col=CollinearitySurface("y=0")
    )
    return Scenario(
        name="normally-contracting",
        pair=pair,
        summary="{y = 0} is a normally contracting annulus; transverse multiplier exp(-lambda/h(x))",
        commuting=True,
        designed_linking=(0, 0),
        analytic={
            "contraction_rate": lam,
            "return_time": lambda x, y=0.0: 1.0 / _h(x),
            "multiplier": lambda x: float(np.exp(-lam / _h(x))),
            "return_map": lambda x, y: (x, y * float(np.exp(-lam / _h(x)))),
            "mu_everywhere": lambda x, y: x,
        },
    )


def _split_winding() -> Scenario:
    def wx(x, y, t):
        return y * (1.0 + (1.0 + y) * np.cos(2 * np.pi * t))

    def wy(x, y, t):
        return y * (1.0 + y) * np.sin(2 * np.pi * t)

    X = _spec(
        "split-winder",
        wx,
        wy,
        lambda x, y, t: x,
        jac=_jac_from_rows(
            lambda x, y, t: [
                (
                    0.0 * x,
                    1.0 + (1.0 + 2.0 * y) * np.cos(2 * np.pi * t),
                    -2 * np.pi * y * (1.0 + y) * np.sin(2 * np.pi * t),
                ),
                (
                    0.0 * x,
                    (1.0 + 2.0 * y) * np.sin(2 * np.pi * t),
                    2 * np.pi * y * (1.0 + y) * np.cos(2 * np.pi * t),
                ),
                (np.ones_like(x), 0.0 * x, 0.0 * x),
            ]
        ),
    )
    Y = _spec(
        "unit-drift",
        lambda x, y, t: 0.0 * x,
        lambda x, y, t: 0.0 * x,
        lambda x, y, t: np.ones_like(x),
        jac=lambda pts: np.zeros(pts.shape[:-1] + (3, 3)),
    )
    pair = FieldPair(
        X, Y, SolidTorusDomain(disc_radius=1.0), declared_col=CollinearitySurface("y=0")
    )
    return Scenario(
        name="split-winding",
        pair=pair,
        summary="fiber component winds once on {y > 0} and not at all on {y < 0}",
        commuting=False,
        designed_linking=(1, 0),
    )


def _model_pullback(d_plus: int = 2, d_minus: int = -1) -> Scenario:
    phi = model_map(d_plus, d_minus)

    def func(pts):
        x, y, t = pts[..., 0], pts[..., 1], pts[..., 2]
        s = reduce_angle(np.arctan2(y, x) / (2 * np.pi))
        params = np.stack([s, t], axis=-1)
        return phi(params)

    X = FieldSpec(func=func, name=f"model-pullback({d_plus},{d_minus})")
    Y = _spec(
        "unit-drift",
        lambda x, y, t: 0.0 * x,
        lambda x, y, t: 0.0 * x,
        lambda x, y, t: np.ones_like(x),
        jac=lambda pts: np.zeros(pts.shape[:-1] + (3, 3)),
    )
    pair = FieldPair(
        X, Y, SolidTorusDomain(disc_radius=1.0), declared_col=CollinearitySurface("y=0")
    )
    return Scenario(
        name="model-pullback",
        pair=pair,
        summary=f"two-exponent model field with windings ({d_plus}, {d_minus}) around the core",
        commuting=False,
        designed_linking=(d_plus, d_minus),
        analytic={"d_plus": d_plus, "d_minus": d_minus},
    )


def _noncommuting_control() -> Scenario:
    a = 1.0
    X = _spec(
        "constant-x",
        lambda x, y, t: np.ones_like(x),
        lambda x, y, t: 0.0 * x,
        lambda x, y, t: 0.0 * x,
        jac=lambda pts: np.zeros(pts.shape[:-1] + (3, 3)),
    )
    Y = _spec(
        "unit-rotation-suspension",
        lambda x, y, t: -a * y,
        lambda x, y, t: a * x,
        lambda x, y, t: np.ones_like(x),
        jac=_jac_from_rows(
            lambda x, y, t: [
                (0.0 * x, -a + 0.0 * x, 0.0 * x),
                (a + 0.0 * x, 0.0 * x, 0.0 * x),
                (0.0 * x, 0.0 * x, 0.0 * x),
            ]
        ),
    )
    pair = FieldPair(X, Y, SolidTorusDomain(disc_radius=1.0, tilt=FIBRATION_TILT))
    return Scenario(
        name="noncommuting-control",
        pair=pair,
        summary="non-commuting pair on which the return-time identity must visibly fail",
        commuting=False,
        analytic={
            "return_time": lambda x, y: _rotation_return_time(x, y, FIBRATION_TILT, a=a),
        },
    )


_BUILDERS: dict[str, Callable[[], Scenario]] = {
    "trivial-suspension": _trivial_suspension,
    "rigid-rotation": _rigid_rotation,
    "tilted-rotation": _tilted_rotation,
    "annulus-col": _annulus_col,
    "normally-contracting": _normally_contracting,
    "split-winding": _split_winding,
    "model-pullback": _model_pullback,
    "noncommuting-control": _noncommuting_control,
}


def builtin_names() -> list[str]:
    return list(_BUILDERS)


def builtin(name: str) -> Scenario:
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise KeyError(
            f"unknown scenario '{name}'; available: {', '.join(_BUILDERS)}"
        ) from None
    scenario = builder()
    scenario.pair.validate()
    return scenario
