"""Points, tangent vectors, and the fibered solid-torus chart.

The ambient domain is the solid torus D^2 x (R/Z) in a single global chart
``(x, y, theta)``: two disc coordinates and an angular coordinate stored in
units of full turns, reduced mod 1.  Distances use the flat chart metric with
the circle metric ``min(|d|, 1 - |d|)`` in theta.

A one-parameter family of disc fibrations is supported: the level sets of
``sigma(x, y, theta) = theta - tilt * x  (mod 1)`` are graphs over the disc,
hence discs.  ``tilt = 0`` gives the plain theta-projection.  The tilt is what
makes transition times between fibers position-dependent, so it is a
first-class citizen rather than an afterthought.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def reduce_angle(theta):
    """Reduce an angle (in turns) to [0, 1). Works on scalars and arrays."""
    return np.asarray(theta) - np.floor(theta)


def circle_dist(a, b):
    """Distance on R/Z between angles in turns: min(|d|, 1 - |d|)."""
    d = np.abs(reduce_angle(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))
    return np.minimum(d, 1.0 - d)


def circle_lerp(a, b, w):
    """Interpolate between angles a -> b along the shortest arc (turns)."""
    a = np.asarray(a, dtype=float)
    delta = reduce_angle(np.asarray(b, dtype=float) - a)
    delta = np.where(delta > 0.5, delta - 1.0, delta)
    return reduce_angle(a + w * delta)


@dataclass(frozen=True)
class ChartPoint:
    """A point of the solid torus in chart coordinates; theta stored mod 1."""

    x: float
    y: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", float(reduce_angle(self.theta)))

    @classmethod
    def from_array(cls, arr) -> "ChartPoint":
        arr = np.asarray(arr, dtype=float)
        return cls(arr[0], arr[1], arr[2])

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta], dtype=float)

    @property
    def disc_radius(self) -> float:
        return float(np.hypot(self.x, self.y))

    def distance(self, other: "ChartPoint") -> float:
        return float(
            np.sqrt(
                (self.x - other.x) ** 2
                + (self.y - other.y) ** 2
                + circle_dist(self.theta, other.theta) ** 2
            )
        )


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector at a chart point, components in the flat chart metric."""

    base: ChartPoint
    vx: float
    vy: float
    vtheta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.vx, self.vy, self.vtheta], dtype=float)

    @property
    def norm(self) -> float:
        return float(np.sqrt(self.vx**2 + self.vy**2 + self.vtheta**2))


def chart_distance(p, q) -> float:
    """Distance between two points given as arrays or ChartPoints."""
    if isinstance(p, ChartPoint):
        p = p.as_array()
    if isinstance(q, ChartPoint):
        q = q.as_array()
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return float(
        np.sqrt((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 + circle_dist(p[2], q[2]) ** 2)
    )


@dataclass(frozen=True)
class SolidTorusDomain:
    """The compact domain D^2(R) x (R/Z) together with its disc fibration.

    ``tilt`` selects the fibration sigma = theta - tilt*x (mod 1).  Fibers are
    graphs over the disc for every tilt, so the level-set invariant holds by
    construction.
    """

    disc_radius: float = 1.0
    tilt: float = 0.0

    def contains(self, pts, margin: float = 0.0):
        pts = np.asarray(pts, dtype=float)
        r2 = pts[..., 0] ** 2 + pts[..., 1] ** 2
        return r2 <= (self.disc_radius - margin) ** 2

    def fibration(self, pts):
        """sigma(p) in [0, 1): the fiber level through each point."""
        pts = np.asarray(pts, dtype=float)
        return reduce_angle(pts[..., 2] - self.tilt * pts[..., 0])

    def fibration_lift(self, pts_unwrapped):
        """Lifted sigma for states whose theta has NOT been reduced mod 1."""
        pts = np.asarray(pts_unwrapped, dtype=float)
        return pts[..., 2] - self.tilt * pts[..., 0]

    def fibration_rate(self, vecs):
        """d(sigma) applied to tangent vectors: vtheta - tilt * vx."""
        vecs = np.asarray(vecs, dtype=float)
        return vecs[..., 2] - self.tilt * vecs[..., 0]

    def fiber_basis(self) -> tuple[np.ndarray, np.ndarray]:
        """Two constant vector fields spanning ker(d sigma) at every point."""
        return (
            np.array([1.0, 0.0, self.tilt]),
            np.array([0.0, 1.0, 0.0]),
        )

    def section_point(self, x: float, y: float, level: float = 0.0) -> ChartPoint:
        """The point of the fiber Sigma_level over disc coordinates (x, y)."""
        return ChartPoint(x, y, reduce_angle(level + self.tilt * x))

    def section_grid(self, n: int, fill: float = 0.85) -> np.ndarray:
        """A square grid on Sigma_0 clipped to the disc; rows are chart points."""
        r = self.disc_radius * fill
        axis = np.linspace(-r, r, n)
        xx, yy = np.meshgrid(axis, axis, indexing="ij")
        keep = xx**2 + yy**2 <= r**2
        x, y = xx[keep], yy[keep]
        theta = reduce_angle(self.tilt * x)
        return np.stack([x, y, theta], axis=-1)

    def volume_grid(self, n: int, fill: float = 0.7) -> np.ndarray:
        """An n^3 chart grid (all points inside the disc of radius fill*R)."""
        r = self.disc_radius * fill / np.sqrt(2.0)
        axis = np.linspace(-r, r, n)
        thetas = np.linspace(0.0, 1.0, n, endpoint=False)
        xx, yy, tt = np.meshgrid(axis, axis, thetas, indexing="ij")
        return np.stack([xx.ravel(), yy.ravel(), tt.ravel()], axis=-1)
