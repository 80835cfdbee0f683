"""Winding numbers of plane-vector maps and degrees of sphere-valued maps.

Angular variation along a path is computed by sampling, wrapping successive
angle differences to (-pi, pi], and adaptively bisecting any segment whose
observed jump reaches pi/2 (a deliberately stricter bound than the
mathematical pi, guarding against aliasing on coarse samplings).  The total
of the validated lift is exact for the sampled curve, so once validation
passes the result is refinement-independent.

The degree of a sphere-valued map on a closed triangulated surface is the sum
of signed solid angles of the image triangles over 4*pi.  The solid angle of
a spherical triangle (A, B, C) uses the two-argument arctangent form

    Omega = 2 * atan2(det[A, B, C], 1 + A.B + B.C + C.A),

valid while each triangle image stays well inside a hemisphere; meshes are
refined (uniformly, so the telescoping sum stays crack-free) until image
edges are short enough.  Contributions are accumulated with compensated
summation in a fixed order, making reported residuals reproducible
bit-for-bit regardless of how evaluation was scheduled.

The distance from the raw degree to the nearest integer doubles as an error
estimate; exceeding the 0.05 threshold is an error, never a warning, because
downstream identity checks consume exact integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .chart import reduce_angle
from .errors import (
    AtPole,
    DegenerateTriangle,
    NonIntegral,
    ParseError,
    UnwrapFailure,
)

DEGREE_RESIDUAL_MAX = 0.05
UNWRAP_BOUND = np.pi / 2
_VALUE_FLOOR = 1e-12


@dataclass
class PathSample:
    """A sampled path of points with interpolation-aware refinement.

    ``wrap_cols`` lists coordinates living on R/Z (interpolated along the
    shortest arc); all others interpolate linearly.  Chart paths wrap column
    2 (theta); parameter-torus paths are stored unwrapped and wrap nothing.
    A closed path must repeat its first point at the end.
    """

    points: np.ndarray
    closed: bool = False
    wrap_cols: tuple[int, ...] = ()
    refine_depth: int = 0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or len(self.points) < 2:
            raise ValueError("a path needs a 2-d (n, d) array with n >= 2")

    def midpoints(self) -> np.ndarray:
        a, b = self.points[:-1], self.points[1:]
        mid = 0.5 * (a + b)
        for c in self.wrap_cols:
            d = reduce_angle(b[:, c] - a[:, c])
            d = np.where(d > 0.5, d - 1.0, d)
            mid[:, c] = reduce_angle(a[:, c] + 0.5 * d)
        return mid

    def refined(self, mask=None) -> "PathSample":
        """Insert midpoints on the masked segments (all segments by default)."""
        mid = self.midpoints()
        if mask is None:
            mask = np.ones(len(mid), dtype=bool)
        rows = []
        for i in range(len(mid)):
            rows.append(self.points[i])
            if mask[i]:
                rows.append(mid[i])
        rows.append(self.points[-1])
        return PathSample(
            np.array(rows),
            closed=self.closed,
            wrap_cols=self.wrap_cols,
            refine_depth=self.refine_depth + 1,
        )


def chart_loop(x: float, y: float, n: int = 256, tilt: float = 0.0) -> PathSample:
    """The closed loop {(x, y)} x R/Z sampled n times (chart path, theta wraps)."""
    t = np.linspace(0.0, 1.0, n + 1)
    pts = np.stack(
        [np.full(n + 1, x), np.full(n + 1, y), reduce_angle(tilt * x + t)], axis=-1
    )
    pts[-1] = pts[0]
    return PathSample(pts, closed=True, wrap_cols=(2,))


def segment_path(a, b, n: int = 256) -> PathSample:
    """A straight segment between two points, interpolating all columns linearly."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    w = np.linspace(0.0, 1.0, n + 1)[:, None]
    return PathSample((1 - w) * a + w * b, closed=False)


@dataclass
class AngleLift:
    """An unwrapped angle sequence along a path (radians)."""

    values: np.ndarray

    @property
    def total(self) -> float:
        return float(self.values[-1] - self.values[0])


def _angles_of(map_fn: Callable[[np.ndarray], np.ndarray], pts: np.ndarray) -> np.ndarray:
    vals = np.asarray(map_fn(pts), dtype=float)
    norms = np.hypot(vals[:, 0], vals[:, 1])
    if norms.min() < _VALUE_FLOOR:
        raise UnwrapFailure(
            f"map value norm {norms.min():.3g} vanishes on the path; direction undefined"
        )
    return np.arctan2(vals[:, 1], vals[:, 0])


def angle_lift(
    map_fn: Callable[[np.ndarray], np.ndarray],
    path: PathSample,
    depth_cap: int = 24,
) -> tuple[AngleLift, PathSample]:
    """Unwrapped angles of a plane-vector map along a path, with validation.

    Segments whose observed angle jump reaches pi/2 are bisected until every
    jump validates or the depth cap is hit (UnwrapFailure).
    """
    current = path
    angles = _angles_of(map_fn, current.points)
    for _ in range(depth_cap + 1):
        diffs = np.mod(np.diff(angles) + np.pi, 2 * np.pi) - np.pi
        bad = np.abs(diffs) >= UNWRAP_BOUND
        if not bad.any():
            lifted = angles[0] + np.concatenate([[0.0], np.cumsum(diffs)])
            return AngleLift(lifted), current
        current = current.refined(mask=bad)
        angles = _angles_of(map_fn, current.points)
    raise UnwrapFailure(
        f"angle jumps still exceed pi/2 after {depth_cap} refinement passes"
    )


def angular_variation(
    map_fn: Callable[[np.ndarray], np.ndarray],
    path: PathSample,
    depth_cap: int = 24,
) -> float:
    """Total lifted angle swept by the map along the path, in radians."""
    lift, _ = angle_lift(map_fn, path, depth_cap=depth_cap)
    return lift.total


def circle_degree(
    map_fn: Callable[[np.ndarray], np.ndarray],
    closed_path: PathSample,
    depth_cap: int = 24,
) -> int:
    """Winding number of a plane-vector map along a closed path."""
    if not closed_path.closed:
        raise ValueError("circle_degree needs a closed path")
    raw = angular_variation(map_fn, closed_path, depth_cap=depth_cap) / (2 * np.pi)
    deg = int(np.rint(raw))
    residual = abs(raw - deg)
    if residual >= DEGREE_RESIDUAL_MAX:
        raise NonIntegral(raw, residual)
    return deg


def meridian_project(p, pole_threshold: float = 1e-12) -> np.ndarray:
    """Project unit 3-vectors to the equator circle along meridians."""
    arr = np.asarray(p, dtype=float)
    h2 = arr[..., 0] ** 2 + arr[..., 1] ** 2
    if np.any(h2 <= pole_threshold):
        raise AtPole("meridian projection undefined at a pole")
    scale = 1.0 / np.sqrt(h2)
    return np.stack([arr[..., 0] * scale, arr[..., 1] * scale], axis=-1)


# ---------------------------------------------------------------------------
# Triangulated surfaces carrying sphere-valued maps
# ---------------------------------------------------------------------------


@dataclass
class MeshMap:
    """A triangulated closed surface with a unit 3-vector per vertex.

    ``vertices`` are domain coordinates: torus parameters (n, 2) or sphere
    points (n, 3); they are only needed to refine.  ``map_fn`` (optional)
    re-evaluates values at new domain vertices; without it the mesh cannot be
    refined.  ``wrap_vertex_cols`` marks periodic domain coordinates.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    values: np.ndarray
    map_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    wrap_vertex_cols: tuple[int, ...] = ()

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        vals = np.asarray(self.values, dtype=float)
        norms = np.linalg.norm(vals, axis=-1, keepdims=True)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError("mesh values must be unit 3-vectors")
        self.values = vals / norms  # renormalize residual 1e-12-level drift

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def image_edge_arcs(self) -> np.ndarray:
        """Great-circle lengths of all image triangle edges, shape (m, 3)."""
        v = self.values[self.triangles]
        arcs = []
        for a, b in ((0, 1), (1, 2), (2, 0)):
            chord = np.linalg.norm(v[:, a] - v[:, b], axis=-1)
            arcs.append(2.0 * np.arcsin(np.clip(chord / 2.0, 0.0, 1.0)))
        return np.stack(arcs, axis=-1)

    def max_image_diameter(self) -> float:
        return float(self.image_edge_arcs().max())

    def refined(self) -> "MeshMap":
        """Uniform 1-to-4 refinement through edge midpoints (map re-evaluated)."""
        if self.map_fn is None:
            raise DegenerateTriangle(
                "mesh carries no generating map, cannot refine further"
            )
        verts = list(self.vertices)
        edge_mid: dict[tuple[int, int], int] = {}

        def midpoint_index(i: int, j: int) -> int:
            key = (i, j) if i < j else (j, i)
            if key in edge_mid:
                return edge_mid[key]
            a, b = self.vertices[i].copy(), self.vertices[j].copy()
            mid = 0.5 * (a + b)
            for c in self.wrap_vertex_cols:
                d = reduce_angle(b[c] - a[c])
                d = d - 1.0 if d > 0.5 else d
                mid[c] = reduce_angle(a[c] + 0.5 * d)
            edge_mid[key] = len(verts)
            verts.append(mid)
            return edge_mid[key]

        tris = []
        for i, j, k in self.triangles:
            ij = midpoint_index(i, j)
            jk = midpoint_index(j, k)
            ki = midpoint_index(k, i)
            tris.extend([(i, ij, ki), (ij, j, jk), (ki, jk, k), (ij, jk, ki)])
        new_vertices = np.array(verts)
        new_values = np.asarray(self.map_fn(new_vertices), dtype=float)
        return MeshMap(
            new_vertices,
            np.array(tris, dtype=np.int64),
            new_values,
            map_fn=self.map_fn,
            wrap_vertex_cols=self.wrap_vertex_cols,
        )


def signed_solid_angles(values: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Signed solid angle of each image spherical triangle."""
    v = values[triangles]
    a, b, c = v[:, 0], v[:, 1], v[:, 2]
    num = np.einsum("ij,ij->i", a, np.cross(b, c))
    den = (
        1.0
        + np.einsum("ij,ij->i", a, b)
        + np.einsum("ij,ij->i", b, c)
        + np.einsum("ij,ij->i", c, a)
    )
    return 2.0 * np.arctan2(num, den)


@dataclass
class DegreeResult:
    value: int
    raw: float
    residual: float
    n_triangles: int
    max_image_diameter: float


def sphere_degree_detailed(
    mesh: MeshMap,
    max_image_edge: float = 1.0,
    max_refinements: int = 4,
    residual_max: float = DEGREE_RESIDUAL_MAX,
) -> DegreeResult:
    """Degree of the mesh map with residual and mesh statistics."""
    current = mesh
    for _ in range(max_refinements + 1):
        arcs = current.image_edge_arcs()
        worst = float(arcs.max(initial=0.0))
        if worst <= max_image_edge:
            break
        if current.map_fn is None:
            if worst >= np.pi / 2:
                raise DegenerateTriangle(
                    f"image triangle edge arc {worst:.3f} rad is ambiguous "
                    "and the mesh cannot be refined"
                )
            break
        current = current.refined()
    else:
        raise DegenerateTriangle(
            f"image triangles still too large after {max_refinements} refinements"
        )

    omegas = signed_solid_angles(current.values, current.triangles)
    raw = math.fsum(omegas.tolist()) / (4.0 * np.pi)
    value = int(np.rint(raw))
    residual = abs(raw - value)
    if residual >= residual_max:
        raise NonIntegral(raw, residual)
    return DegreeResult(
        value=value,
        raw=raw,
        residual=residual,
        n_triangles=current.n_triangles,
        max_image_diameter=current.max_image_diameter(),
    )


def sphere_degree(mesh: MeshMap, **kwargs) -> int:
    """Brouwer degree of a sphere-valued map on a closed triangulated surface."""
    return sphere_degree_detailed(mesh, **kwargs).value


# ---------------------------------------------------------------------------
# Built-in domain meshes
# ---------------------------------------------------------------------------


def icosphere(level: int = 3, map_fn: Optional[Callable] = None) -> MeshMap:
    """Icosahedral sphere mesh with 20 * 4^level outward-oriented triangles.

    Without ``map_fn`` the carried values are the vertex positions (the
    identity map of the sphere).
    """
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    raw = np.array(
        [
            (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
            (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
            (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
        ],
        dtype=float,
    )
    verts = raw / np.linalg.norm(raw, axis=1, keepdims=True)
    tris = np.array(
        [
            (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
            (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
            (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
            (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
        ],
        dtype=np.int64,
    )
    verts_list = list(verts)
    for _ in range(level):
        edge_mid: dict[tuple[int, int], int] = {}

        def midpoint_index(i: int, j: int) -> int:
            key = (i, j) if i < j else (j, i)
            if key not in edge_mid:
                m = verts_list[i] + verts_list[j]
                edge_mid[key] = len(verts_list)
                verts_list.append(m / np.linalg.norm(m))
            return edge_mid[key]

        new_tris = []
        for i, j, k in tris:
            ij, jk, ki = midpoint_index(i, j), midpoint_index(j, k), midpoint_index(k, i)
            new_tris.extend([(i, ij, ki), (ij, j, jk), (ki, jk, k), (ij, jk, ki)])
        tris = np.array(new_tris, dtype=np.int64)
    verts = np.array(verts_list)
    values = verts if map_fn is None else np.asarray(map_fn(verts), dtype=float)
    return MeshMap(verts, tris, values, map_fn=map_fn)


def torus_grid_mesh(
    map_fn: Callable[[np.ndarray], np.ndarray],
    n_s: int = 64,
    n_t: int = 64,
) -> MeshMap:
    """Parameter-grid mesh of the torus (s, t) in [0,1)^2 carrying map values."""
    s = np.arange(n_s) / n_s
    t = np.arange(n_t) / n_t
    ss, tt = np.meshgrid(s, t, indexing="ij")
    params = np.stack([ss.ravel(), tt.ravel()], axis=-1)

    def vid(i, j):
        return (i % n_s) * n_t + (j % n_t)

    tris = []
    for i in range(n_s):
        for j in range(n_t):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            tris.append((a, b, c))
            tris.append((a, c, d))
    values = np.asarray(map_fn(params), dtype=float)
    return MeshMap(
        params,
        np.array(tris, dtype=np.int64),
        values,
        map_fn=map_fn,
        wrap_vertex_cols=(0, 1),
    )


# ---------------------------------------------------------------------------
# Built-in model maps
# ---------------------------------------------------------------------------


def model_map(d_plus: int, d_minus: int) -> Callable[[np.ndarray], np.ndarray]:
    """The two-exponent torus-to-sphere model map.

    On the half s in [0, 1/2] the longitude winds d_plus times, on [1/2, 1]
    d_minus times; the latitude factor |sin(2 pi s)| pinches the image to the
    north pole exactly on {s = 0} and to the south pole exactly on {s = 1/2}:

        (s, t) -> (|sin 2 pi s| cos(2 pi d t), |sin 2 pi s| sin(2 pi d t), cos 2 pi s).

    Restricted to {s = 1/4} (resp. {s = 3/4}) and projected along meridians it
    winds exactly d_plus (resp. d_minus) times.
    """

    def fn(params: np.ndarray) -> np.ndarray:
        params = np.asarray(params, dtype=float)
        s = reduce_angle(params[..., 0])
        t = params[..., 1]
        d = np.where(s < 0.5, float(d_plus), float(d_minus))
        lat = np.abs(np.sin(2 * np.pi * s))
        lon = 2 * np.pi * d * t
        return np.stack(
            [lat * np.cos(lon), lat * np.sin(lon), np.cos(2 * np.pi * s)], axis=-1
        )

    return fn


def longitude_multiplier_map(k: int) -> Callable[[np.ndarray], np.ndarray]:
    """Rotation-symmetric sphere self-map multiplying longitude by k.

    Fixes both poles with one-point preimages (for k != 0), so its degree can
    be read off the meridian-projected equator restriction.
    """

    def fn(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        lon = np.arctan2(points[..., 1], points[..., 0])
        h = np.hypot(points[..., 0], points[..., 1])
        return np.stack(
            [h * np.cos(k * lon), h * np.sin(k * lon), points[..., 2]], axis=-1
        )

    return fn


def model_torus_path(s_level: float, n: int = 512) -> PathSample:
    """The parameter circle {s = s_level} traversed once with increasing t."""
    t = np.linspace(0.0, 1.0, n + 1)
    pts = np.stack([np.full(n + 1, s_level), t], axis=-1)
    return PathSample(pts, closed=True)


# ---------------------------------------------------------------------------
# Mesh import/export (indexed triangle text format)
# ---------------------------------------------------------------------------


def save_mesh(mesh: MeshMap, path) -> None:
    """Write 'v x y z' value lines and 'f i j k' 1-based face lines."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# torlink mesh: v <unit value vector>, f <1-based indices>\n")
        for v in mesh.values:
            fh.write(f"v {float(v[0])!r} {float(v[1])!r} {float(v[2])!r}\n")
        for t in mesh.triangles:
            fh.write(f"f {int(t[0]) + 1} {int(t[1]) + 1} {int(t[2]) + 1}\n")


def load_mesh(path) -> MeshMap:
    """Read the indexed-triangle text format written by save_mesh."""
    values: list[list[float]] = []
    faces: list[list[int]] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            try:
                if parts[0] == "v" and len(parts) == 4:
                    values.append([float(p) for p in parts[1:]])
                elif parts[0] == "f" and len(parts) == 4:
                    faces.append([int(p) - 1 for p in parts[1:]])
                else:
                    raise ValueError(f"unrecognized record {parts[0]!r}")
            except ValueError as exc:
                raise ParseError(f"bad mesh line: {exc}", line=lineno) from exc
    if not values or not faces:
        raise ParseError("mesh file contains no vertices or no faces")
    vals = np.array(values)
    tris = np.array(faces, dtype=np.int64)
    if tris.min() < 0 or tris.max() >= len(vals):
        raise ParseError("face index out of range")
    return MeshMap(vertices=vals, triangles=tris, values=vals)
