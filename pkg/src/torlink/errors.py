"""Exception hierarchy shared by the toolkit.

Every failure mode of the numerical operations maps to a dedicated class so
callers (and the experiment runner) can react per condition instead of
pattern-matching messages.
"""

from __future__ import annotations


class ToolkitError(Exception):
    """Base class for all torlink errors."""


class NonFinite(ToolkitError):
    """A field evaluation or derivative produced NaN or Inf."""


class ZeroDenominator(ToolkitError):
    """Projection ratio requested where the reference field is (numerically) zero."""


class DegenerateFrame(ToolkitError):
    """Frame determinant fell below the configured threshold."""


class LeftDomain(ToolkitError):
    """An orbit exited the solid torus; carries the exit time."""

    def __init__(self, time_of_exit: float):
        super().__init__(f"orbit left the domain at t = {time_of_exit:.6g}")
        self.time_of_exit = time_of_exit


class StepUnderflow(ToolkitError):
    """The adaptive step controller stalled."""


class NoCrossing(ToolkitError):
    """No section crossing found within the time horizon."""

    def __init__(self, horizon: float):
        super().__init__(f"no crossing within horizon t = {horizon:.6g}")
        self.horizon = horizon


class NotTransverse(ToolkitError):
    """The fibration coordinate is not monotone along the orbit."""


class UnwrapFailure(ToolkitError):
    """Angle unwrapping could not be validated (map too wild or has a zero on the path)."""


class NonIntegral(ToolkitError):
    """A raw degree landed too far from an integer."""

    def __init__(self, raw: float, residual: float):
        super().__init__(
            f"degree residual {residual:.3g} exceeds threshold (raw value {raw:.6g})"
        )
        self.raw = raw
        self.residual = residual


class AtPole(ToolkitError):
    """Meridian projection requested at (or too close to) a pole."""


class DegenerateTriangle(ToolkitError):
    """A mesh triangle image is too large or numerically ambiguous on the sphere."""


class ZeroOnSphere(ToolkitError):
    """The field (numerically) vanishes on the probing sphere."""


class ZeroOnTorus(ToolkitError):
    """The field (numerically) vanishes on the essential torus."""


class LoopMeetsCol(ToolkitError):
    """A linking loop passes through the collinearity locus."""


class SegmentMeetsCol(ToolkitError):
    """The straight segment crosses the collinearity locus."""


class FixedPoint(ToolkitError):
    """Ratio undefined: the point is fixed by the return map."""


class NotFixed(ToolkitError):
    """Spectrum requested at a point that the return map moves."""


class ParseError(ToolkitError):
    """Config or expression syntax error with position information."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc += f" at line {line}"
        if column is not None:
            loc += f", column {column}"
        super().__init__(f"{message}{loc}")
        self.line = line
        self.column = column


class ValidationError(ToolkitError):
    """Config validation failure; lists every violation at once."""

    def __init__(self, violations: list[str]):
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(violations))
        self.violations = list(violations)
