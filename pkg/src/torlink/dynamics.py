"""Iteration of the first return map, stable limits, and angular sweeps.

Orbits of the return map P on the section Sigma_0 are iterated until the
step length drops below tolerance; the limit is then produced by Aitken
extrapolation of the last iterates (near-parabolic fixed points converge
slowly, and raw iteration wastes budget).  Alongside each orbit the fiber
coefficient mu and the transverse coordinate nu (the y coordinate when the
declared collinearity surface is {y = 0}) are recorded, including the maximal
observed ratio |d mu| / |d nu| between consecutive iterates; the ratio is a
measurement, not an assertion, since its smallness is scenario-dependent.

``cone_ratio`` measures |mu(P(x)) - mu(x)| / d(P(x), x) at a single point and
``segment_sweep`` the angular variation of the normalized fiber component
along the straight section segment [x, P^2(x)], after checking by sampled
sign changes of nu (plus bisection) that the segment stays clear of the
collinearity locus.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chart import ChartPoint
from .degree import PathSample, angular_variation
from .errors import FixedPoint, SegmentMeetsCol
from .fields import FieldPair, Frame, collinearity_residual, _as_points
from .flow import DEFAULT_TOL
from .index import _normalized_fiber_component
from .section import first_return, normal_decompose


def _nu_values(pair: FieldPair, pts) -> np.ndarray:
    if pair.declared_col is not None:
        return pair.declared_col.nu(pts)
    # no declared surface: fall back to the (unsigned) collinearity residual
    return collinearity_residual(pair, pts)


@dataclass
class OrbitRecord:
    """A return-map orbit with its mu / nu bookkeeping."""

    points: list[ChartPoint]
    mu_values: np.ndarray
    nu_values: np.ndarray
    converged: bool
    limit: Optional[ChartPoint]
    step_sizes: np.ndarray
    mu_nu_ratio_max: float

    @property
    def n_steps(self) -> int:
        return len(self.points) - 1


def _aitken(seq: np.ndarray) -> float:
    """Aitken delta-squared extrapolation of the last three terms."""
    a, b, c = seq[-3], seq[-2], seq[-1]
    denom = c - 2 * b + a
    if abs(denom) < 1e-300:
        return float(c)
    return float(a - (b - a) ** 2 / denom)


def iterate_return(
    pair: FieldPair,
    frame: Frame,
    x,
    n_max: int = 400,
    tol: float = 1e-9,
    flow_tol: float = DEFAULT_TOL,
) -> OrbitRecord:
    """Iterate the first return map from x until the step length is below tol.

    Convergence means ||P(x_k) - x_k|| < tol in the chart metric; the limit is
    the Aitken extrapolation of the disc coordinates, placed back on the
    section.
    """
    pts: list[ChartPoint] = [ChartPoint.from_array(_as_points(x))]
    mus: list[float] = [normal_decompose(pair, frame, pts[0]).mu]
    nus: list[float] = [float(_nu_values(pair, pts[0].as_array()))]
    steps: list[float] = []
    converged = False

    for _ in range(n_max):
        rec = first_return(pair, frame, pts[-1], tol=flow_tol)
        step = rec.start.distance(rec.end)
        if step < tol:
            converged = True
            break
        pts.append(rec.end)
        mus.append(normal_decompose(pair, frame, rec.end).mu)
        nus.append(float(_nu_values(pair, rec.end.as_array())))
        steps.append(step)

    limit = None
    if converged:
        if len(pts) >= 3:
            xs = np.array([p.x for p in pts])
            ys = np.array([p.y for p in pts])
            limit = pair.domain.section_point(_aitken(xs), _aitken(ys))
        else:
            limit = pts[-1]

    mu_arr, nu_arr = np.array(mus), np.array(nus)
    dmu = np.abs(np.diff(mu_arr))
    dnu = np.abs(np.diff(nu_arr))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(dnu > 0, dmu / np.where(dnu > 0, dnu, 1.0), 0.0)
    return OrbitRecord(
        points=pts,
        mu_values=mu_arr,
        nu_values=nu_arr,
        converged=converged,
        limit=limit,
        step_sizes=np.array(steps),
        mu_nu_ratio_max=float(ratios.max()) if len(ratios) else 0.0,
    )


def cone_ratio(
    pair: FieldPair,
    frame: Frame,
    x,
    flow_tol: float = DEFAULT_TOL,
    fixed_tol: float = 1e-10,
) -> float:
    """|mu(P(x)) - mu(x)| / d(P(x), x); undefined at fixed points of P."""
    rec = first_return(pair, frame, x, tol=flow_tol)
    dist = rec.start.distance(rec.end)
    if dist < fixed_tol:
        raise FixedPoint(f"return displacement {dist:.3g} below {fixed_tol:.3g}")
    mu0 = normal_decompose(pair, frame, rec.start).mu
    mu1 = normal_decompose(pair, frame, rec.end).mu
    return abs(mu1 - mu0) / dist


def _section_segment(pair: FieldPair, a: ChartPoint, b: ChartPoint, n: int) -> PathSample:
    """Straight segment in the disc coordinates of Sigma_0, lifted to the section."""
    w = np.linspace(0.0, 1.0, n + 1)
    xs = (1 - w) * a.x + w * b.x
    ys = (1 - w) * a.y + w * b.y
    pts = np.stack(
        [xs, ys, (pair.domain.tilt * xs) % 1.0], axis=-1
    )
    return PathSample(pts, closed=False, wrap_cols=(2,))


def segment_sweep(
    pair: FieldPair,
    frame: Frame,
    x,
    samples: int = 256,
    flow_tol: float = DEFAULT_TOL,
    col_floor: float = 1e-9,
) -> float:
    """Angular variation of the normalized fiber component along [x, P^2(x)].

    Returns 0 for a (numerically) fixed point of P^2, where the segment
    degenerates.  Raises SegmentMeetsCol when the sampled transverse
    coordinate changes sign along the segment or vanishes at a sample
    (bisection localizes the offending crossing for the error message).
    """
    p0 = ChartPoint.from_array(_as_points(x))
    r1 = first_return(pair, frame, p0, tol=flow_tol)
    r2 = first_return(pair, frame, r1.end, tol=flow_tol)
    if p0.distance(r2.end) < 1e-12:
        return 0.0
    path = _section_segment(pair, p0, r2.end, samples)
    nu = _nu_values(pair, path.points)
    sign_change = np.nonzero(nu[:-1] * nu[1:] < 0)[0]
    if np.min(np.abs(nu)) < col_floor or sign_change.size:
        if sign_change.size:
            i = int(sign_change[0])
            lo, hi = path.points[i], path.points[i + 1]
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if float(_nu_values(pair, mid)) * float(_nu_values(pair, lo)) > 0:
                    lo = mid
                else:
                    hi = mid
            where = ChartPoint.from_array(0.5 * (lo + hi))
            raise SegmentMeetsCol(
                f"segment crosses the collinearity locus near ({where.x:.4f}, {where.y:.4f})"
            )
        raise SegmentMeetsCol("segment touches the collinearity locus")
    return angular_variation(_normalized_fiber_component(pair, frame), path)
