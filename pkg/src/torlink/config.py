"""Scenario configuration files.

The on-disk format is flat ``key = value`` pairs grouped into sections (INI
syntax via configparser, case preserved).  Field definitions are either a
reference to a built-in scenario or three comma-separated component
expressions in the tiny arithmetic language of :mod:`torlink.expr`
(expression-defined fields fall back to finite-difference Jacobians):

    [scenario]
    name = my-scenario
    radius = 1.0
    tilt = 0.0
    seed = 20260810
    declared_col = y=0          ; optional

    [fields]
    builtin = rigid-rotation
    ; or explicit components over x, y, theta:
    ; X = x, y, 0
    ; Y = 0, 0, 1

    [tolerances]
    flow = 1e-10

    [run]
    experiments = commutation, linking

    [experiment.commutation]
    assert = true
    grid = 20
    tol = 1e-6

Parsing reports syntax problems with line positions (ParseError); validation
collects every violation before failing (ValidationError).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .chart import SolidTorusDomain
from .errors import ParseError, ValidationError
from .expr import compile_expression, compile_field_components
from .fields import CollinearitySurface, FieldPair, FieldSpec
from . import scenarios as scenario_lib

DEFAULT_SEED = 20260810


@dataclass
class ExperimentSpec:
    """One experiment entry: a kind, raw parameters, and the assert flag."""

    kind: str
    params: dict[str, str] = dc_field(default_factory=dict)
    asserted: bool = True

    def get_float(self, key: str, default: float) -> float:
        return float(self.params.get(key, default))

    def get_int(self, key: str, default: int) -> int:
        return int(self.params.get(key, default))

    def get_bool(self, key: str, default: bool) -> bool:
        raw = self.params.get(key)
        if raw is None:
            return default
        return raw.strip().lower() in ("1", "true", "yes", "on")

    def get_expr(self, key: str, default: float | None = None) -> float | None:
        """Numeric parameter written as an expression (constants only)."""
        raw = self.params.get(key)
        if raw is None:
            return default
        return float(compile_expression(raw)(0.0, 0.0, 0.0))


@dataclass
class ScenarioConfig:
    """A validated scenario: fields, domain, tolerances, experiment list."""

    name: str
    pair: FieldPair
    seed: int
    flow_tol: float
    crossing_tol: float
    experiments: list[ExperimentSpec]
    echo: dict
    source: str = ""

    @property
    def domain(self) -> SolidTorusDomain:
        return self.pair.domain


def _line_of_key(text: str, section: str, key: str) -> int | None:
    in_section = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            in_section = stripped[1:-1].strip() == section
        elif in_section and stripped.split("=", 1)[0].strip() == key:
            return lineno
    return None


def _field_from_components(name: str, raw: str, text: str, errors: list[str]) -> FieldSpec | None:
    components = [c.strip() for c in raw.split(",")]
    try:
        func = compile_field_components(components)
    except ParseError as exc:
        line = _line_of_key(text, "fields", name)
        errors.append(f"[fields] {name}: {exc}" + (f" (line {line})" if line else ""))
        return None
    return FieldSpec(func=func, name=f"{name}<expr>")


def parse_config(path) -> ScenarioConfig:
    """Load and validate a scenario config file."""
    path = Path(path)
    if not path.exists():
        raise ParseError(f"config file not found: {path}")
    text = path.read_text(encoding="utf-8")

    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), strict=True)
    parser.optionxform = str  # keep key case
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ParseError(str(exc).splitlines()[0], line=line) from exc

    errors: list[str] = []

    def get(section: str, key: str, default=None):
        if parser.has_option(section, key):
            return parser.get(section, key)
        return default

    name = get("scenario", "name") or path.stem
    try:
        radius = float(get("scenario", "radius", 1.0))
        if radius <= 0:
            errors.append("[scenario] radius must be positive")
    except ValueError:
        errors.append("[scenario] radius is not a number")
        radius = 1.0
    try:
        tilt = float(get("scenario", "tilt", 0.0))
    except ValueError:
        errors.append("[scenario] tilt is not a number")
        tilt = 0.0
    try:
        seed = int(get("scenario", "seed", DEFAULT_SEED))
    except ValueError:
        errors.append("[scenario] seed is not an integer")
        seed = DEFAULT_SEED

    declared_raw = get("scenario", "declared_col")
    declared = None
    if declared_raw:
        declared_raw = declared_raw.strip()
        if declared_raw.replace(" ", "") == "y=0":
            declared = CollinearitySurface("y=0")
        else:
            errors.append(
                f"[scenario] unsupported declared_col {declared_raw!r} (only 'y=0' is shipped)"
            )

    pair: FieldPair | None = None
    builtin_name = get("fields", "builtin")
    if builtin_name:
        builtin_name = builtin_name.strip()
        try:
            scenario = scenario_lib.builtin(builtin_name)
            pair = scenario.pair
            if declared is None:
                declared = pair.declared_col
            pair = FieldPair(
                pair.X,
                pair.Y,
                SolidTorusDomain(disc_radius=radius, tilt=tilt if parser.has_option("scenario", "tilt") else pair.domain.tilt),
                declared_col=declared,
            )
        except KeyError as exc:
            errors.append(f"[fields] {exc.args[0]}")
    else:
        raw_x = get("fields", "X")
        raw_y = get("fields", "Y")
        if raw_x is None or raw_y is None:
            errors.append("[fields] needs either 'builtin = <name>' or both 'X' and 'Y'")
        else:
            fx = _field_from_components("X", raw_x, text, errors)
            fy = _field_from_components("Y", raw_y, text, errors)
            if fx is not None and fy is not None:
                pair = FieldPair(
                    fx,
                    fy,
                    SolidTorusDomain(disc_radius=radius, tilt=tilt),
                    declared_col=declared,
                )

    try:
        flow_tol = float(get("tolerances", "flow", 1e-10))
        crossing_tol = float(get("tolerances", "crossing", 1e-10))
    except ValueError:
        errors.append("[tolerances] entries must be numbers")
        flow_tol, crossing_tol = 1e-10, 1e-10

    from .experiments import EXPERIMENT_KINDS  # local import to avoid a cycle

    experiments: list[ExperimentSpec] = []
    listed = get("run", "experiments", "")
    for kind in [k.strip() for k in listed.split(",") if k.strip()]:
        section = f"experiment.{kind}"
        params = dict(parser.items(section)) if parser.has_section(section) else {}
        asserted = params.pop("assert", "true").strip().lower() in ("1", "true", "yes", "on")
        if kind not in EXPERIMENT_KINDS:
            errors.append(
                f"[run] unknown experiment {kind!r}; known: {', '.join(sorted(EXPERIMENT_KINDS))}"
            )
            continue
        experiments.append(ExperimentSpec(kind=kind, params=params, asserted=asserted))

    if pair is not None:
        # expressions must evaluate finitely on a probe grid
        probe = pair.domain.volume_grid(8)
        for f in (pair.X, pair.Y):
            vals = f(probe)
            if not np.all(np.isfinite(vals)):
                errors.append(f"[fields] {f.name} is not finite on the probe grid")

    if errors:
        raise ValidationError(errors)
    assert pair is not None

    echo = {s: dict(parser.items(s)) for s in parser.sections()}
    return ScenarioConfig(
        name=name,
        pair=pair,
        seed=seed,
        flow_tol=flow_tol,
        crossing_tol=crossing_tol,
        experiments=experiments,
        echo=echo,
        source=str(path),
    )
