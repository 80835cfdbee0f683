"""Holonomy between disc fibers, transition times, and the normal split of X.

Following the orbit of the transverse field Y from the fiber Sigma_0 to
Sigma_t defines the holonomy P_t with transition time tau_t, so that
P_t(x) = Y_{tau_t(x)}(x); t = 1 gives the first return map P.

The derivative data come from one variational solve plus a 3x3 linear solve:
for a fiber-tangent v, the chain rule for an event-located map gives

    DP_t(x) v = DY_{tau_t(x)}(x) v + (Dtau_t(x) v) * Y(P_t(x)),

so decomposing DY.v in the frame at the arrival point yields DP_t.v from the
fiber-tangent components and -Dtau_t.v from the component along e3 = Y.  This
is both cheaper and less noisy than finite-differencing the located map.

The normal split X = N + mu*Y solves the frame system X = alpha e1 + beta e2
+ mu e3 pointwise; N = alpha e1 + beta e2 is tangent to the fiber and
vanishes exactly on the collinearity locus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chart import ChartPoint
from .errors import DegenerateFrame
from .fields import FieldPair, Frame, _as_points
from .flow import DEFAULT_TOL, _flow_to_fiber


@dataclass
class HolonomyRecord:
    """Holonomy endpoint, transition time, and first derivatives.

    ``dP`` is 2x2 in frame coordinates (e1, e2), domain frame taken at the
    start point and codomain frame at the end point; ``dtau`` is the 1x2
    differential of the transition time in the same start-frame coordinates.
    """

    start: ChartPoint
    end: ChartPoint
    tau: float
    dP: np.ndarray
    dtau: np.ndarray


@dataclass
class NormalDecomposition:
    """Coefficients of X in the frame: X = alpha e1 + beta e2 + mu e3."""

    alpha: float
    beta: float
    mu: float
    n_vec: np.ndarray  # chart components of N = alpha e1 + beta e2

    @property
    def n_frame(self) -> np.ndarray:
        return np.array([self.alpha, self.beta])


def holonomy(
    pair: FieldPair,
    frame: Frame,
    x,
    t: float,
    tol: float = DEFAULT_TOL,
    horizon: float = 100.0,
) -> HolonomyRecord:
    """Holonomy of Y from the fiber of x to Sigma_t, with dP and dtau.

    ``t`` is the target fiber level; t = 1 from a point of Sigma_0 is the
    first return map.  A target equal to the start fiber (t = 0 from Sigma_0)
    returns the trivial identity record.
    """
    snap = 1e-9
    x0 = _as_points(x).astype(float)
    start = ChartPoint.from_array(x0)
    sigma0 = float(pair.domain.fibration(x0))
    if sigma0 > 1.0 - snap:
        sigma0 -= 1.0  # start numerically on the section from below
    delta = t - sigma0
    if abs(delta) <= snap:
        # target fiber equals the start fiber: the trivial holonomy
        return HolonomyRecord(start, start, 0.0, np.eye(2), np.zeros(2))
    if delta < 0.0:
        delta += 1.0

    tau, y_ev, _ = _flow_to_fiber(
        pair.Y, x0, delta, pair.domain, tol, with_derivative=True, horizon=horizon
    )
    end_arr = y_ev[:3]
    dflow = y_ev[3:].reshape(3, 3)
    end = ChartPoint.from_array(end_arr)

    basis_start = frame.matrix(x0)
    basis_end = frame.matrix(end_arr)
    try:
        coeffs = np.linalg.solve(basis_end, dflow @ basis_start[:, :2])
    except np.linalg.LinAlgError as exc:
        raise DegenerateFrame(f"frame singular at the arrival point: {exc}") from exc
    dP = coeffs[:2, :].copy()
    dtau = -coeffs[2, :].copy()
    return HolonomyRecord(start, end, tau, dP, dtau)


def first_return(pair: FieldPair, frame: Frame, x, tol: float = DEFAULT_TOL) -> HolonomyRecord:
    """The first return map P of Y on Sigma_0 (holonomy over one full turn)."""
    return holonomy(pair, frame, x, t=1.0, tol=tol)


def frame_coordinates(pair: FieldPair, frame: Frame, pts) -> np.ndarray:
    """Vectorized (alpha, beta, mu) coefficients of X in the frame at pts."""
    pts = np.asarray(pts, dtype=float)
    basis = frame.matrix(pts)
    xv = pair.X(pts)
    try:
        return np.linalg.solve(basis, xv[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise DegenerateFrame(f"frame matrix singular: {exc}") from exc


def normal_decompose(pair: FieldPair, frame: Frame, x) -> NormalDecomposition:
    """Split X(x) = alpha e1 + beta e2 + mu e3 and assemble N = alpha e1 + beta e2."""
    x0 = _as_points(x)
    coeff = frame_coordinates(pair, frame, x0)
    alpha, beta, mu = (float(c) for c in coeff)
    basis = frame.matrix(x0)
    n_vec = alpha * basis[:, 0] + beta * basis[:, 1]
    return NormalDecomposition(alpha=alpha, beta=beta, mu=mu, n_vec=n_vec)


def return_identity_residual(
    pair: FieldPair,
    frame: Frame,
    x,
    tol: float = DEFAULT_TOL,
) -> float:
    """|(-dtau . (alpha, beta)) - (mu(P(x)) - mu(x))| for the first return map.

    Small for commuting pairs; both sides vanish on the collinearity locus,
    where P fixes x and N(x) = 0.
    """
    rec = first_return(pair, frame, x, tol=tol)
    d_start = normal_decompose(pair, frame, rec.start)
    d_end = normal_decompose(pair, frame, rec.end)
    lhs = -float(rec.dtau @ d_start.n_frame)
    rhs = d_end.mu - d_start.mu
    return abs(lhs - rhs)
