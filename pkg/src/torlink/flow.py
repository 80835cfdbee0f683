"""Flow maps, variational (derivative) flows, and fiber-crossing events.

Integration uses the embedded Runge-Kutta 5(4) pair (Dormand-Prince, scipy's
``RK45``) with matched absolute/relative tolerances.  The angular state is
kept unwrapped during integration so the lifted fibration coordinate
``sigma = theta - tilt*x`` is continuous along orbits; crossings of a target
fiber are then located by scipy's event machinery (bracketing plus root
refinement on the local interpolant), which pins the event to the interpolant
at machine precision.

The variational system is integrated jointly with the base orbit as a
12-dimensional state so both ride the same step sequence.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from .chart import ChartPoint, SolidTorusDomain, reduce_angle
from .errors import LeftDomain, NoCrossing, NonFinite, NotTransverse, StepUnderflow
from .fields import FieldSpec, _as_points

DEFAULT_TOL = 1e-10


@dataclass
class FlowResult:
    """Endpoint of a flow computation, optionally with the derivative flow."""

    endpoint: ChartPoint
    time: float
    dflow: Optional[np.ndarray]
    steps: int
    est_error: float


@dataclass
class CrossingEvent:
    """A located crossing of a target fiber."""

    point: ChartPoint
    time: float
    direction: int


def _base_rhs(f: FieldSpec):
    def rhs(t, y):
        return f(y)

    return rhs


def _joint_rhs(f: FieldSpec):
    def rhs(t, y):
        p = y[:3]
        v = f(p)
        J = f.jacobian(p)
        dmat = J @ y[3:].reshape(3, 3)
        return np.concatenate([v, dmat.ravel()])

    return rhs


def _domain_event(domain: SolidTorusDomain):
    r2 = domain.disc_radius**2

    def event(t, y):
        return r2 - (y[0] ** 2 + y[1] ** 2)

    event.terminal = True
    event.direction = -1
    return event


def _run(f, y0, t_span, tol, events, max_step=np.inf):
    try:
        sol = solve_ivp(
            f,
            t_span,
            y0,
            method="RK45",
            rtol=tol,
            atol=tol,
            events=events,
            max_step=max_step,
            dense_output=False,
        )
    except (FloatingPointError, ValueError) as exc:
        raise NonFinite(f"integration failed: {exc}") from exc
    if sol.status == -1:
        raise StepUnderflow(sol.message)
    return sol


def integrate(
    f: FieldSpec,
    p,
    t: float,
    tol: float = DEFAULT_TOL,
    domain: Optional[SolidTorusDomain] = None,
) -> FlowResult:
    """Flow a point for time t.  Raises LeftDomain if the orbit exits the torus."""
    y0 = _as_points(p).astype(float)
    events = [_domain_event(domain)] if domain is not None else None
    sol = _run(_base_rhs(f), y0, (0.0, t), tol, events)
    if events is not None and sol.t_events[0].size:
        raise LeftDomain(float(sol.t_events[0][0]))
    end = ChartPoint.from_array(sol.y[:, -1])
    return FlowResult(end, t, None, steps=len(sol.t) - 1, est_error=tol)


def variational(
    f: FieldSpec,
    p,
    t: float,
    tol: float = DEFAULT_TOL,
    domain: Optional[SolidTorusDomain] = None,
) -> FlowResult:
    """Flow a point and the 3x3 derivative of the flow map, from the identity."""
    y0 = np.concatenate([_as_points(p).astype(float), np.eye(3).ravel()])
    events = [_domain_event(domain)] if domain is not None else None
    sol = _run(_joint_rhs(f), y0, (0.0, t), tol, events)
    if events is not None and sol.t_events[0].size:
        raise LeftDomain(float(sol.t_events[0][0]))
    yend = sol.y[:, -1]
    end = ChartPoint.from_array(yend[:3])
    return FlowResult(end, t, yend[3:].reshape(3, 3), steps=len(sol.t) - 1, est_error=tol)


def _flow_to_fiber(
    f: FieldSpec,
    p,
    delta_sigma: float,
    domain: SolidTorusDomain,
    tol: float,
    with_derivative: bool,
    horizon: float,
):
    """Shared engine: integrate until the lifted fibration gains delta_sigma.

    Requires sigma strictly increasing along the orbit.  Returns the event
    time, the event state, and the accepted step count.
    """
    p0 = _as_points(p).astype(float)
    rate0 = domain.fibration_rate(f(p0))
    if rate0 <= 0:
        raise NotTransverse(
            f"fibration rate {rate0:.3g} at the start point is not positive"
        )
    sigma_target = domain.fibration_lift(p0) + delta_sigma

    def crossing(t, y):
        return domain.fibration_lift(y[:3]) - sigma_target

    crossing.terminal = True
    crossing.direction = 1

    def transversality(t, y):
        return domain.fibration_rate(f(y[:3]))

    transversality.terminal = True
    transversality.direction = -1

    if with_derivative:
        y0 = np.concatenate([p0, np.eye(3).ravel()])
        rhs = _joint_rhs(f)
    else:
        y0 = p0
        rhs = _base_rhs(f)

    events = [crossing, transversality, _domain_event(domain)]
    sol = _run(rhs, y0, (0.0, horizon), tol, events)
    if sol.t_events[1].size and not sol.t_events[0].size:
        raise NotTransverse(
            f"fibration rate changed sign at t = {sol.t_events[1][0]:.6g}"
        )
    if sol.t_events[2].size and not sol.t_events[0].size:
        raise LeftDomain(float(sol.t_events[2][0]))
    if not sol.t_events[0].size:
        raise NoCrossing(horizon)
    t_ev = float(sol.t_events[0][0])
    y_ev = sol.y_events[0][0]
    return t_ev, y_ev, len(sol.t) - 1


def cross_fiber(
    f: FieldSpec,
    p,
    target_level: float,
    min_time: float = 0.0,
    tol: float = DEFAULT_TOL,
    domain: Optional[SolidTorusDomain] = None,
    horizon: float = 100.0,
) -> CrossingEvent:
    """First crossing of the fiber Sigma_target along the orbit of f.

    ``min_time > 0`` excludes the trivial crossing at departure when the start
    point already lies on the target fiber (the orbit then runs a full loop).
    """
    if domain is None:
        domain = SolidTorusDomain()
    p0 = _as_points(p)
    delta = float(reduce_angle(target_level - domain.fibration(p0)))
    if delta == 0.0:
        if min_time <= 0.0:
            return CrossingEvent(ChartPoint.from_array(p0), 0.0, direction=+1)
        delta = 1.0
    t_ev, y_ev, _ = _flow_to_fiber(
        f, p0, delta, domain, tol, with_derivative=False, horizon=horizon
    )
    return CrossingEvent(ChartPoint.from_array(y_ev[:3]), t_ev, direction=+1)
