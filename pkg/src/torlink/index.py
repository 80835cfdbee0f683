"""Poincare-Hopf indices, essential-torus Gauss maps, and linking numbers.

The index of an isolated zero is the degree of the normalized field on a
small chart sphere around it.  The index of the whole region comes from the
essential torus {x^2 + y^2 = r0^2}: expressing X in the frame as
(alpha, beta, mu), normalizing to the unit sphere, and taking the degree of
that Gauss map.  The linking numbers ell+ / ell- are the winding numbers of
the normalized fiber component (alpha, beta) along core-parallel loops on
either side of the declared collinearity surface, and the two computations
are tied together by the identity |Ind| = |ell+ - ell-|.

Signed degrees are reported throughout; the identity checks compare absolute
values because the sign depends on orientation conventions (chart orientation
(x, y, theta) and parameter orientation (s, t) of the essential torus are
fixed here, and all reported numbers are relative to the canonical chart
frame).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chart import ChartPoint, reduce_angle
from .degree import (
    DegreeResult,
    MeshMap,
    PathSample,
    chart_loop,
    circle_degree,
    icosphere,
    sphere_degree_detailed,
    torus_grid_mesh,
)
from .errors import LoopMeetsCol, NotFixed, ZeroOnSphere, ZeroOnTorus
from .fields import FieldPair, FieldSpec, Frame, collinearity_residual, _as_points
from .flow import DEFAULT_TOL
from .section import frame_coordinates, first_return

_NORM_FLOOR = 1e-9


@dataclass
class IndexReport:
    """An integer index with its degree residual and mesh statistics."""

    value: int
    residual: float
    n_triangles: int
    max_image_diameter: float
    method: str

    @classmethod
    def from_degree(cls, res: DegreeResult, method: str) -> "IndexReport":
        return cls(
            value=res.value,
            residual=res.residual,
            n_triangles=res.n_triangles,
            max_image_diameter=res.max_image_diameter,
            method=method,
        )


@dataclass
class LinkingReport:
    """Winding numbers of the normalized fiber component on both sides of Col."""

    ell_plus: int
    ell_minus: int
    loop_plus: PathSample
    loop_minus: PathSample


def index_isolated_zero(
    X: FieldSpec,
    p,
    radius: float = 0.1,
    mesh_level: int = 3,
    zero_threshold: float = 1e-9,
) -> IndexReport:
    """Index of an isolated zero: degree of X/||X|| on a chart sphere around p.

    The sphere lives in lifted chart coordinates centered at p (theta offsets
    stay within a half-turn for any sensible radius), so chart periodicity
    never folds the probe surface.
    """
    p0 = _as_points(p).astype(float)

    def gauss(units: np.ndarray) -> np.ndarray:
        pts = p0 + radius * np.asarray(units, dtype=float)
        vals = np.asarray(X(pts), dtype=float)
        norms = np.linalg.norm(vals, axis=-1, keepdims=True)
        if norms.min() < zero_threshold:
            raise ZeroOnSphere(
                f"field norm {norms.min():.3g} on the probing sphere of radius {radius}"
            )
        return vals / norms

    mesh = icosphere(mesh_level, map_fn=gauss)
    res = sphere_degree_detailed(mesh)
    return IndexReport.from_degree(res, method="sphere-of-zero")


def essential_torus_params_to_points(params: np.ndarray, r0: float, tilt: float) -> np.ndarray:
    """Map (s, t) parameters to chart points of the torus {x^2 + y^2 = r0^2}."""
    params = np.asarray(params, dtype=float)
    s, t = params[..., 0], params[..., 1]
    x = r0 * np.cos(2 * np.pi * s)
    y = r0 * np.sin(2 * np.pi * s)
    theta = reduce_angle(t + tilt * x)
    return np.stack([x, y, theta], axis=-1)


def index_region(
    pair: FieldPair,
    frame: Frame,
    torus_radius: float = 0.5,
    grid: int = 96,
    zero_threshold: float = 1e-9,
    X: FieldSpec | None = None,
) -> IndexReport:
    """Index of X on the solid torus via the Gauss map of the essential torus.

    The torus is the parameter grid (s, t) on {x^2 + y^2 = r0^2}; at every
    grid point X is decomposed in the frame and the unit vector
    (alpha, beta, mu)/norm is fed to the degree engine.  ``X`` overrides the
    pair's first field (used by the homotopy-invariance check on X - s*Y).
    """
    field_x = pair.X if X is None else X
    probe = FieldPair(field_x, pair.Y, pair.domain, pair.declared_col)
    tilt = pair.domain.tilt

    def gauss(params: np.ndarray) -> np.ndarray:
        pts = essential_torus_params_to_points(params, torus_radius, tilt)
        coeffs = frame_coordinates(probe, frame, pts)
        norms = np.linalg.norm(coeffs, axis=-1, keepdims=True)
        if norms.min() < zero_threshold:
            raise ZeroOnTorus(
                f"frame coefficients of '{field_x.name}' vanish on the essential torus "
                f"(min norm {norms.min():.3g})"
            )
        return coeffs / norms

    mesh = torus_grid_mesh(gauss, n_s=grid, n_t=grid)
    res = sphere_degree_detailed(mesh)
    return IndexReport.from_degree(res, method="essential-torus")


def _normalized_fiber_component(pair: FieldPair, frame: Frame):
    def n_hat(pts: np.ndarray) -> np.ndarray:
        coeffs = frame_coordinates(pair, frame, pts)
        planar = coeffs[..., :2]
        norms = np.linalg.norm(planar, axis=-1, keepdims=True)
        if norms.min() < _NORM_FLOOR:
            raise LoopMeetsCol(
                f"fiber component norm {norms.min():.3g} along the loop"
            )
        return planar / norms

    return n_hat


def linking_numbers(
    pair: FieldPair,
    frame: Frame,
    y_offset: float = 0.35,
    loop_x: float = 0.0,
    samples: int = 256,
    check_second_offset: bool = True,
) -> LinkingReport:
    """Winding of the normalized fiber component along loops at y = +/- offset.

    Both loops are core-parallel circles {(x0, +/-y0)} x R/Z.  The result must
    not depend on the offset within a component; with
    ``check_second_offset`` a second pair of loops midway to the boundary is
    computed and compared, and a mismatch raises LoopMeetsCol (the loop family
    crossed something it should not have).
    """
    col_floor = 1e-8

    def wind(y0: float) -> tuple[int, PathSample]:
        loop = chart_loop(loop_x, y0, n=samples, tilt=pair.domain.tilt)
        res = collinearity_residual(pair, loop.points)
        if np.min(res) < col_floor:
            raise LoopMeetsCol(
                f"loop at y = {y0:+.3f} meets the collinearity locus "
                f"(min residual {np.min(res):.3g})"
            )
        return circle_degree(_normalized_fiber_component(pair, frame), loop), loop

    ell_plus, loop_plus = wind(+abs(y_offset))
    ell_minus, loop_minus = wind(-abs(y_offset))

    if check_second_offset:
        r = pair.domain.disc_radius
        y2 = 0.5 * (abs(y_offset) + np.sqrt(max(r**2 - loop_x**2, 0.0)) * 0.9)
        lp2, _ = wind(+y2)
        lm2, _ = wind(-y2)
        if (lp2, lm2) != (ell_plus, ell_minus):
            raise LoopMeetsCol(
                f"linking numbers changed between offsets {abs(y_offset):.3f} and "
                f"{y2:.3f}: ({ell_plus}, {ell_minus}) vs ({lp2}, {lm2})"
            )
    return LinkingReport(ell_plus, ell_minus, loop_plus, loop_minus)


@dataclass
class LinkIndexReport:
    """Joint index / linking verification."""

    index: IndexReport
    linking: LinkingReport
    identity_holds: bool


def verify_link_index(
    pair: FieldPair,
    frame: Frame,
    torus_radius: float = 0.5,
    grid: int = 96,
    y_offset: float = 0.35,
) -> LinkIndexReport:
    """Check |Ind(X, U)| against |ell+ - ell-| on the same pair and frame."""
    idx = index_region(pair, frame, torus_radius=torus_radius, grid=grid)
    link = linking_numbers(pair, frame, y_offset=y_offset)
    holds = abs(idx.value) == abs(link.ell_plus - link.ell_minus)
    return LinkIndexReport(index=idx, linking=link, identity_holds=holds)


def classify_return_derivative(dP: np.ndarray, tol: float = 1e-6) -> tuple[np.ndarray, str]:
    """Eigenvalues of a 2x2 return-map derivative and their diagnostic class.

    identity-like: both eigenvalues within tol of 1 and the matrix itself is
    the identity to tol; parabolic: eigenvalues at 1 but the matrix is not the
    identity (a shear); partially-hyperbolic: some eigenvalue off 1 by more
    than tol.  The tolerance is scaled by the condition number of dP.
    """
    dP = np.asarray(dP, dtype=float)
    eigvals = np.linalg.eigvals(dP)
    scale = tol * max(1.0, float(np.linalg.cond(dP)))
    off_one = np.abs(eigvals - 1.0)
    if np.all(off_one <= scale):
        if np.max(np.abs(dP - np.eye(2))) <= scale:
            label = "identity-like"
        else:
            label = "parabolic"
    else:
        label = "partially-hyperbolic"
    return eigvals, label


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    classification: str
    dP: np.ndarray
    tau: float


def fixed_point_spectrum(
    pair: FieldPair,
    frame: Frame,
    x,
    fixed_tol: float = 1e-8,
    class_tol: float = 1e-6,
    tol: float = DEFAULT_TOL,
) -> SpectrumReport:
    """Spectrum of the first-return derivative at a fixed point of P."""
    rec = first_return(pair, frame, x, tol=tol)
    moved = rec.start.distance(rec.end)
    if moved > fixed_tol:
        raise NotFixed(f"point moved by {moved:.3g} under the return map")
    eigvals, label = classify_return_derivative(rec.dP, tol=class_tol)
    return SpectrumReport(eigenvalues=eigvals, classification=label, dP=rec.dP, tau=rec.tau)
