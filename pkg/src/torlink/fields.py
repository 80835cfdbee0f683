"""Vector-field evaluators, frames, and commutation/collinearity diagnostics.

A ``FieldSpec`` wraps a vectorized evaluator on the chart together with an
optional analytic Jacobian; central finite differences stand in when no
Jacobian is supplied.  Everything downstream (flows, holonomies, degrees)
consumes fields through this interface only, so swapping analytic for
finite-difference derivatives never changes call sites.

The commutation diagnostic is the Lie bracket [X, Y] = DY.X - DX.Y, the
collinearity diagnostic the chart cross-product norm ||X x Y||, and the
ratio of X over Y the orthogonal projection <X, Y>/<Y, Y>.  On the locus
where X and Y are collinear the projection reproduces X exactly; off it,
it is one valid C^1 extension.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .chart import ChartPoint, SolidTorusDomain, TangentVector, reduce_angle
from .errors import DegenerateFrame, NonFinite, ZeroDenominator


def _as_points(p) -> np.ndarray:
    if isinstance(p, ChartPoint):
        return p.as_array()
    return np.asarray(p, dtype=float)


@dataclass
class FieldSpec:
    """A vector field on the solid torus chart.

    ``func`` maps an (..., 3) array of chart points to an (..., 3) array of
    chart components.  Theta is reduced mod 1 before every call, which makes
    the evaluator periodic by construction.  ``jac`` (optional) maps points to
    (..., 3, 3) Jacobians; when absent, central differences with step
    ``fd_step`` substitute for it.
    """

    func: Callable[[np.ndarray], np.ndarray]
    jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    fd_step: float = 1e-5
    name: str = ""

    def __call__(self, pts) -> np.ndarray:
        pts = np.array(_as_points(pts), dtype=float, copy=True)
        pts[..., 2] = reduce_angle(pts[..., 2])
        out = np.asarray(self.func(pts), dtype=float)
        if out.shape != pts.shape:
            raise ValueError(
                f"field '{self.name}' returned shape {out.shape} for input {pts.shape}"
            )
        return out

    def at(self, p: ChartPoint) -> TangentVector:
        v = self(p)
        return TangentVector(p, v[0], v[1], v[2])

    def jacobian(self, pts) -> np.ndarray:
        """Analytic Jacobian when supplied, else vectorized central differences."""
        pts = _as_points(pts)
        if self.jac is not None:
            out = np.asarray(self.jac(np.asarray(pts, dtype=float)), dtype=float)
        else:
            h = self.fd_step
            cols = []
            for k in range(3):
                dp = np.zeros(3)
                dp[k] = h
                # theta shifts wrap automatically through the mod-1 reduction
                cols.append((self(pts + dp) - self(pts - dp)) / (2.0 * h))
            out = np.stack(cols, axis=-1)
        if not np.all(np.isfinite(out)):
            raise NonFinite(f"Jacobian of field '{self.name}' is not finite")
        return out


def jacobian_at(f: FieldSpec, p) -> np.ndarray:
    """3x3 derivative matrix of f at a point (analytic or finite-difference)."""
    J = f.jacobian(_as_points(p))
    return np.asarray(J, dtype=float)


@dataclass(frozen=True)
class CollinearitySurface:
    """A declared collinearity surface with a signed transverse coordinate.

    Only the flat annulus {y = 0} is shipped; its transverse coordinate nu is
    the y chart coordinate, positive on the upper component.
    """

    name: str = "y=0"

    def nu(self, pts) -> np.ndarray:
        return np.asarray(_as_points(pts), dtype=float)[..., 1]


@dataclass
class FieldPair:
    """Two fields over a common domain, with an optional declared Col surface."""

    X: FieldSpec
    Y: FieldSpec
    domain: SolidTorusDomain = field(default_factory=SolidTorusDomain)
    declared_col: Optional[CollinearitySurface] = None

    def validate(self, grid_res: int = 8, y_floor: float = 1e-9) -> None:
        """Sampled invariants: Y nonvanishing, Y transverse to the fibers."""
        pts = self.domain.volume_grid(grid_res)
        yv = self.Y(pts)
        if not np.all(np.isfinite(yv)):
            raise NonFinite(f"field '{self.Y.name}' is not finite on the sample grid")
        norms = np.linalg.norm(yv, axis=-1)
        if norms.min() < y_floor:
            raise ZeroDenominator(
                f"reference field '{self.Y.name}' vanishes on the sample grid "
                f"(min norm {norms.min():.3g})"
            )


@dataclass
class Frame:
    """Ordered basis (e1, e2, e3) with e3 = Y and e1, e2 tangent to the fibers."""

    e1: Callable[[np.ndarray], np.ndarray]
    e2: Callable[[np.ndarray], np.ndarray]
    e3: Callable[[np.ndarray], np.ndarray]

    def matrix(self, pts) -> np.ndarray:
        """Basis matrix with columns (e1, e2, e3); shape (..., 3, 3)."""
        pts = _as_points(pts)
        cols = [np.asarray(e(pts), dtype=float) for e in (self.e1, self.e2, self.e3)]
        return np.stack(cols, axis=-1)

    def basis_at(self, p: ChartPoint) -> tuple[TangentVector, TangentVector, TangentVector]:
        m = self.matrix(p)
        return tuple(TangentVector(p, *m[:, k]) for k in range(3))


class _ConstantField:
    def __init__(self, vec: np.ndarray):
        self.vec = np.asarray(vec, dtype=float)

    def __call__(self, pts) -> np.ndarray:
        pts = _as_points(pts)
        return np.broadcast_to(self.vec, pts.shape).copy()


def build_frame(
    pair: FieldPair,
    det_threshold: float = 1e-6,
    sample_res: int = 10,
) -> Frame:
    """Canonical chart frame: e1, e2 span the fiber tangent planes, e3 = Y.

    For the tilt-c fibration the fiber basis is e1 = (1, 0, c), e2 = (0, 1, 0);
    e1 has no y-component, so wherever the declared Col surface is {y = 0} it
    is automatically tangent to it.  Raises DegenerateFrame when the sampled
    determinant (the transverse component of Y) drops below the threshold.
    """
    b1, b2 = pair.domain.fiber_basis()
    frame = Frame(e1=_ConstantField(b1), e2=_ConstantField(b2), e3=pair.Y)
    pts = pair.domain.volume_grid(sample_res)
    dets = np.linalg.det(frame.matrix(pts))
    worst = np.abs(dets).min()
    if worst < det_threshold:
        raise DegenerateFrame(
            f"frame determinant {worst:.3g} below threshold {det_threshold:.3g}; "
            f"'{pair.Y.name}' is not transverse to the fibers"
        )
    return frame


def commutator_residual(pair: FieldPair, p) -> TangentVector:
    """Lie bracket [X, Y](p) = DY(p) X(p) - DX(p) Y(p); zero for commuting pairs."""
    pt = _as_points(p)
    xv, yv = pair.X(pt), pair.Y(pt)
    bracket = pair.Y.jacobian(pt) @ xv - pair.X.jacobian(pt) @ yv
    if not np.all(np.isfinite(bracket)):
        raise NonFinite("commutator evaluation is not finite")
    base = p if isinstance(p, ChartPoint) else ChartPoint.from_array(pt)
    return TangentVector(base, *bracket)


def commutator_residual_grid(pair: FieldPair, pts) -> np.ndarray:
    """Norms of the bracket on an (n, 3) batch of points."""
    pts = np.asarray(pts, dtype=float)
    xv, yv = pair.X(pts), pair.Y(pts)
    jx, jy = pair.X.jacobian(pts), pair.Y.jacobian(pts)
    bracket = np.einsum("...ij,...j->...i", jy, xv) - np.einsum("...ij,...j->...i", jx, yv)
    return np.linalg.norm(bracket, axis=-1)


def collinearity_residual(pair: FieldPair, p):
    """Chart cross-product norm ||X(p) x Y(p)||; 0 iff the values are dependent."""
    pts = _as_points(p)
    cross = np.cross(pair.X(pts), pair.Y(pts))
    res = np.linalg.norm(np.atleast_2d(cross), axis=-1)
    return float(res[0]) if pts.ndim == 1 else res.reshape(pts.shape[:-1])


def ratio_mu(pair: FieldPair, p, y_floor: float = 1e-12):
    """Projection coefficient <X, Y>/<Y, Y> in the chart metric.

    Reproduces the proportionality factor on the collinearity locus and
    extends it off the locus by orthogonal projection.
    """
    pts = _as_points(p)
    xv, yv = pair.X(pts), pair.Y(pts)
    denom = np.einsum("...i,...i->...", yv, yv)
    if np.any(denom < y_floor**2):
        raise ZeroDenominator("ratio undefined where the reference field vanishes")
    mu = np.einsum("...i,...i->...", xv, yv) / denom
    return float(mu) if pts.ndim == 1 else mu


def find_collinearity(
    pair: FieldPair,
    grid_res: int = 16,
    refine_tol: float = 1e-8,
    max_bisect: int = 60,
) -> list[ChartPoint]:
    """Locate points of the collinearity locus by grid scan plus edge bisection.

    Grid vertices already below ``refine_tol`` are kept directly.  Along grid
    edges where the cross product X x Y reverses direction (the sign proxy for
    the smallest singular value passing through zero), bisection refines the
    crossing; refined points are kept when their residual clears the
    tolerance.  Output is deduplicated within chart distance ``refine_tol``
    and ordered by grid index, so it is deterministic however the scan is
    scheduled.  An empty result is not an error.
    """
    if grid_res < 8:
        raise ValueError("grid_res must be at least 8")
    r = pair.domain.disc_radius * 0.95 / np.sqrt(2.0)
    axis = np.linspace(-r, r, grid_res)
    thetas = np.linspace(0.0, 1.0, grid_res, endpoint=False)
    xx, yy, tt = np.meshgrid(axis, axis, thetas, indexing="ij")
    pts = np.stack([xx, yy, tt], axis=-1)
    flat = pts.reshape(-1, 3)

    cross = np.cross(pair.X(flat), pair.Y(flat)).reshape(grid_res, grid_res, grid_res, 3)
    res = np.linalg.norm(cross, axis=-1)

    found: list[np.ndarray] = [flat[i] for i in np.nonzero(res.ravel() < refine_tol)[0]]

    # Edges along each axis where the cross product flips direction.
    def _edge_candidates(axis_id: int):
        sl_a = [slice(None)] * 3
        sl_b = [slice(None)] * 3
        sl_a[axis_id] = slice(None, -1)
        sl_b[axis_id] = slice(1, None)
        ca, cb = cross[tuple(sl_a)], cross[tuple(sl_b)]
        dots = np.einsum("...i,...i->...", ca, cb)
        mask = dots < 0
        pa = pts[tuple(sl_a)][mask]
        pb = pts[tuple(sl_b)][mask]
        return pa, pb

    for axis_id in range(3):
        pa, pb = _edge_candidates(axis_id)
        if len(pa) == 0:
            continue
        ca = np.cross(pair.X(pa), pair.Y(pa))
        lo, hi = pa.copy(), pb.copy()
        for _ in range(max_bisect):
            mid = 0.5 * (lo + hi)
            cm = np.cross(pair.X(mid), pair.Y(mid))
            same_side = np.einsum("ij,ij->i", cm, ca) > 0
            lo[same_side] = mid[same_side]
            hi[~same_side] = mid[~same_side]
        mid = 0.5 * (lo + hi)
        keep = collinearity_residual(pair, mid) < refine_tol
        found.extend(mid[keep])

    # Deduplicate within chart distance refine_tol, preserving scan order.
    out: list[ChartPoint] = []
    kept: list[np.ndarray] = []
    for arr in found:
        cp = ChartPoint.from_array(arr)
        if any(cp.distance(ChartPoint.from_array(k)) <= refine_tol for k in kept):
            continue
        kept.append(arr)
        out.append(cp)
    return out
