"""Experiment registry: named, parameterized checks over a scenario.

Every experiment receives the scenario context plus its own seeded generator
and returns a JSON-ready dict.  Identity checks always report both sides and
the residual, never a bare boolean.  ``passed`` is True/False for asserted
checks and None for pure measurements.
"""

from __future__ import annotations

import csv
import os
import tempfile
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .chart import ChartPoint
from .config import ExperimentSpec, ScenarioConfig
from .degree import icosphere, sphere_degree_detailed, model_map, torus_grid_mesh
from .degree import circle_degree, meridian_project, model_torus_path
from .dynamics import cone_ratio, iterate_return, segment_sweep
from .errors import FixedPoint, ToolkitError
from .fields import FieldSpec, build_frame, commutator_residual_grid, find_collinearity
from .flow import variational
from .index import (
    classify_return_derivative,
    index_isolated_zero,
    index_region,
    linking_numbers,
    verify_link_index,
    fixed_point_spectrum,
)
from .section import first_return, holonomy, normal_decompose


@dataclass
class RunContext:
    config: ScenarioConfig
    frame: object
    out_dir: Optional[Path]
    base_seed: int

    def rng(self, kind: str) -> np.random.Generator:
        return np.random.default_rng([self.base_seed, zlib.crc32(kind.encode())])

    def csv_path(self, stem: str) -> Optional[Path]:
        if self.out_dir is None:
            return None
        return Path(self.out_dir) / f"{self.config.name}_{stem}.csv"


def write_csv_atomic(path: Path, header: list[str], rows: list[list]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _section_samples(
    ctx: RunContext,
    rng: np.random.Generator,
    n: int,
    r_lo: float = 0.15,
    r_hi: float = 0.8,
    min_abs_nu: float = 0.0,
) -> list[ChartPoint]:
    """Random points on Sigma_0 in a radius band, optionally clear of Col."""
    domain = ctx.config.domain
    pts: list[ChartPoint] = []
    guard = 0
    while len(pts) < n and guard < 100 * n:
        guard += 1
        r = domain.disc_radius * (r_lo + (r_hi - r_lo) * rng.random())
        phi = 2 * np.pi * rng.random()
        x, y = r * np.cos(phi), r * np.sin(phi)
        if min_abs_nu and abs(y) < min_abs_nu * domain.disc_radius:
            continue
        pts.append(domain.section_point(x, y))
    return pts


# --- individual experiments -------------------------------------------------


def exp_commutation(ctx: RunContext, spec: ExperimentSpec) -> dict:
    grid = spec.get_int("grid", 20)
    tol = spec.get_float("tol", 1e-6)
    pts = ctx.config.domain.volume_grid(grid)
    residuals = commutator_residual_grid(ctx.config.pair, pts)
    worst = float(residuals.max())
    return {
        "passed": worst < tol,
        "max_residual": worst,
        "tol": tol,
        "grid": grid,
        "n_points": int(len(pts)),
    }


def exp_tangent_flow_invariance(ctx: RunContext, spec: ExperimentSpec) -> dict:
    n = spec.get_int("points", 50)
    tol = spec.get_float("tol", 1e-6)
    rng = ctx.rng("tangent_flow_invariance")
    pair = ctx.config.pair
    worst = 0.0
    samples = []
    for p in _section_samples(ctx, rng, n, r_lo=0.1, r_hi=0.7):
        t = 0.1 + 0.9 * rng.random()
        res = variational(pair.Y, p, t, tol=ctx.config.flow_tol, domain=pair.domain)
        lhs = res.dflow @ pair.X(p)
        rhs = pair.X(res.endpoint)
        rel = float(np.linalg.norm(lhs - rhs) / max(np.linalg.norm(pair.X(p)), 1e-30))
        samples.append({"t": t, "residual": rel})
        worst = max(worst, rel)
    return {
        "passed": worst < tol,
        "max_residual": worst,
        "tol": tol,
        "n_points": n,
        "first_samples": samples[:3],
    }


def exp_holonomy_invariance(ctx: RunContext, spec: ExperimentSpec) -> dict:
    n = spec.get_int("points", 50)
    tol = spec.get_float("tol", 1e-6)
    times = [float(t) for t in spec.params.get("times", "0.25,0.5,1.0").split(",")]
    rng = ctx.rng("holonomy_invariance")
    pair, frame = ctx.config.pair, ctx.frame
    worst = 0.0
    for p in _section_samples(ctx, rng, n, min_abs_nu=0.05):
        d0 = normal_decompose(pair, frame, p)
        scale = max(float(np.linalg.norm(d0.n_frame)), 1e-30)
        for t in times:
            rec = holonomy(pair, frame, p, t, tol=ctx.config.flow_tol)
            d1 = normal_decompose(pair, frame, rec.end)
            rel = float(np.linalg.norm(rec.dP @ d0.n_frame - d1.n_frame)) / scale
            worst = max(worst, rel)
    return {
        "passed": worst < tol,
        "max_residual": worst,
        "tol": tol,
        "n_points": n,
        "times": times,
    }


def exp_return_time_identity(ctx: RunContext, spec: ExperimentSpec) -> dict:
    n = spec.get_int("points", 120)
    mode = spec.params.get("mode", "relative").strip()
    expect = spec.params.get("expect", "hold").strip()
    tol = spec.get_float("tol", 1e-5 if mode == "relative" else 1e-10)
    min_mag = spec.get_float("min_magnitude", 1e-3)
    min_count = spec.get_int("min_count", max(1, (2 * n) // 3) if mode == "relative" else 0)
    violate_floor = spec.get_float("violate_floor", 1e-3)
    rng = ctx.rng("return_time_identity")
    pair, frame = ctx.config.pair, ctx.frame

    rows = []
    for p in _section_samples(ctx, rng, n, r_lo=0.2, r_hi=0.8):
        rec = first_return(pair, frame, p, tol=ctx.config.flow_tol)
        d0 = normal_decompose(pair, frame, rec.start)
        d1 = normal_decompose(pair, frame, rec.end)
        lhs = -float(rec.dtau @ d0.n_frame)
        rhs = d1.mu - d0.mu
        rows.append((lhs, rhs, abs(lhs - rhs)))

    if mode == "relative":
        qualifying = [
            (lhs, rhs, res / max(1.0, abs(rhs)))
            for lhs, rhs, res in rows
            if abs(lhs) >= min_mag and abs(rhs) >= min_mag
        ]
        worst = max((q[2] for q in qualifying), default=0.0)
        enough = len(qualifying) >= min_count
        holds = enough and worst < tol
    else:
        qualifying = [(lhs, rhs, res) for lhs, rhs, res in rows]
        worst = max((q[2] for q in qualifying), default=0.0)
        enough = True
        holds = worst < tol

    worst_anywhere = max((res / max(1.0, abs(rhs)) for _, rhs, res in rows), default=0.0)
    passed = holds if expect == "hold" else (worst_anywhere > violate_floor)
    return {
        "passed": passed,
        "expect": expect,
        "mode": mode,
        "tol": tol,
        "n_points": n,
        "n_qualifying": len(qualifying),
        "max_residual": worst,
        "max_residual_anywhere": worst_anywhere,
        "first_sides": [
            {"lhs": lhs, "rhs": rhs, "residual": res} for lhs, rhs, res in rows[:3]
        ],
    }


def exp_linking(ctx: RunContext, spec: ExperimentSpec) -> dict:
    y_offset = spec.get_float("y_offset", 0.35)
    expect = spec.params.get("expect")
    rep = linking_numbers(ctx.config.pair, ctx.frame, y_offset=y_offset)
    out = {
        "ell_plus": rep.ell_plus,
        "ell_minus": rep.ell_minus,
        "y_offset": y_offset,
        "passed": None,
    }
    if expect is not None:
        want = tuple(int(v) for v in expect.split(","))
        out["expected"] = list(want)
        out["passed"] = (rep.ell_plus, rep.ell_minus) == want
    return out


def exp_region_index(ctx: RunContext, spec: ExperimentSpec) -> dict:
    rep = index_region(
        ctx.config.pair,
        ctx.frame,
        torus_radius=spec.get_float("torus_radius", 0.5),
        grid=spec.get_int("grid", 96),
    )
    out = {
        "index": rep.value,
        "residual": rep.residual,
        "n_triangles": rep.n_triangles,
        "max_image_diameter": rep.max_image_diameter,
        "passed": None,
    }
    if "expect_abs" in spec.params:
        want = spec.get_int("expect_abs", 0)
        out["expected_abs"] = want
        out["passed"] = abs(rep.value) == want
    return out


def exp_verify_link_index(ctx: RunContext, spec: ExperimentSpec) -> dict:
    rep = verify_link_index(
        ctx.config.pair,
        ctx.frame,
        torus_radius=spec.get_float("torus_radius", 0.5),
        grid=spec.get_int("grid", 96),
        y_offset=spec.get_float("y_offset", 0.35),
    )
    lhs = abs(rep.index.value)
    rhs = abs(rep.linking.ell_plus - rep.linking.ell_minus)
    passed = rep.identity_holds
    if "expect_abs" in spec.params:
        passed = passed and lhs == spec.get_int("expect_abs", 0)
    return {
        "passed": passed,
        "index": rep.index.value,
        "index_residual": rep.index.residual,
        "ell_plus": rep.linking.ell_plus,
        "ell_minus": rep.linking.ell_minus,
        "abs_index": lhs,
        "abs_linking_difference": rhs,
        "identity_holds": rep.identity_holds,
    }


def exp_homotopy_invariance(ctx: RunContext, spec: ExperimentSpec) -> dict:
    s_max = spec.get_float("s_max", 0.1)
    count = spec.get_int("count", 5)
    pair, frame = ctx.config.pair, ctx.frame
    values = []
    for s in np.linspace(0.0, s_max, count):
        shifted = FieldSpec(
            func=lambda pts, s=s: pair.X(pts) - s * pair.Y(pts),
            name=f"{pair.X.name}-{s:.4g}*Y",
        )
        rep = index_region(
            pair,
            frame,
            torus_radius=spec.get_float("torus_radius", 0.5),
            grid=spec.get_int("grid", 96),
            X=shifted,
        )
        values.append({"s": float(s), "index": rep.value, "residual": rep.residual})
    indices = {v["index"] for v in values}
    return {
        "passed": len(indices) == 1,
        "indices": values,
        "constant": len(indices) == 1,
    }


def exp_fixed_point_spectrum(ctx: RunContext, spec: ExperimentSpec) -> dict:
    x0 = spec.get_float("x0", 0.3)
    p = ctx.config.domain.section_point(x0, 0.0)
    rep = fixed_point_spectrum(
        ctx.config.pair, ctx.frame, p, tol=ctx.config.flow_tol
    )
    eigs = sorted(rep.eigenvalues, key=lambda z: abs(z - 1.0))
    out = {
        "eigenvalues": [[float(np.real(z)), float(np.imag(z))] for z in rep.eigenvalues],
        "classification": rep.classification,
        "tau": rep.tau,
        "passed": None,
    }
    expect_mult = spec.get_expr("expect_multiplier")
    expect_class = spec.params.get("expect_class")
    checks = []
    if expect_mult is not None:
        err = min(abs(z - expect_mult) for z in rep.eigenvalues)
        out["expected_multiplier"] = expect_mult
        out["multiplier_error"] = float(err)
        checks.append(err < spec.get_float("tol", 1e-5))
    if expect_class is not None:
        out["expected_class"] = expect_class
        checks.append(rep.classification == expect_class.strip())
    if checks:
        out["passed"] = all(checks)
    return out


def exp_iterate_return(ctx: RunContext, spec: ExperimentSpec) -> dict:
    seeds = spec.get_int("seeds", 20)
    tol = spec.get_float("tol", 1e-9)
    n_max = spec.get_int("n_max", 400)
    nu_max = spec.get_float("nu_max", 1e-6)
    fixed_max = spec.get_float("fixed_max", 1e-8)
    dump = spec.get_bool("dump", False)
    rng = ctx.rng("iterate_return")
    pair, frame = ctx.config.pair, ctx.frame

    table = []
    csv_rows = []
    all_ok = True
    for k, p in enumerate(_section_samples(ctx, rng, seeds, r_lo=0.1, r_hi=0.6, min_abs_nu=0.05)):
        orbit = iterate_return(pair, frame, p, n_max=n_max, tol=tol, flow_tol=ctx.config.flow_tol)
        entry = {
            "seed_index": k,
            "start": [p.x, p.y],
            "converged": orbit.converged,
            "steps": orbit.n_steps,
            "mu_nu_ratio_max": orbit.mu_nu_ratio_max,
        }
        if orbit.converged and orbit.limit is not None:
            nu_lim = float(abs(orbit.limit.y)) if pair.declared_col else 0.0
            back = first_return(pair, frame, orbit.limit, tol=ctx.config.flow_tol)
            drift = back.start.distance(back.end)
            entry.update({"nu_limit": nu_lim, "limit_drift": drift})
            ok = orbit.converged and nu_lim < nu_max and drift < fixed_max
        else:
            ok = False
        entry["ok"] = ok
        all_ok = all_ok and ok
        table.append(entry)
        if dump:
            for i, pt in enumerate(orbit.points):
                csv_rows.append(
                    [k, i, repr(pt.x), repr(pt.y), repr(pt.theta),
                     repr(float(orbit.mu_values[i])), repr(float(orbit.nu_values[i]))]
                )
    out = {
        "passed": all_ok,
        "seeds": seeds,
        "tol": tol,
        "nu_max": nu_max,
        "fixed_max": fixed_max,
        "orbits": table,
    }
    path = ctx.csv_path("orbits")
    if dump and path is not None:
        write_csv_atomic(path, ["seed", "step", "x", "y", "theta", "mu", "nu"], csv_rows)
        out["csv"] = path.name
    return out


def exp_cone_ratio_profile(ctx: RunContext, spec: ExperimentSpec) -> dict:
    x0 = spec.get_float("x0", 0.3)
    nus = [float(v) for v in spec.params.get("nu_values", "0.4,0.2,0.1,0.05,0.025").split(",")]
    pair, frame = ctx.config.pair, ctx.frame
    ratios = []
    for nu in nus:
        p = ctx.config.domain.section_point(x0, nu)
        try:
            ratios.append({"nu": nu, "ratio": cone_ratio(pair, frame, p, flow_tol=ctx.config.flow_tol)})
        except FixedPoint:
            ratios.append({"nu": nu, "ratio": None, "note": "fixed point"})
    out: dict = {"profile": ratios, "passed": None}
    if "expect_zero_tol" in spec.params:
        tolz = spec.get_float("expect_zero_tol", 1e-10)
        vals = [r["ratio"] for r in ratios if r["ratio"] is not None]
        out["passed"] = bool(vals) and max(vals) < tolz
        out["expect_zero_tol"] = tolz
    path = ctx.csv_path("cone_ratio")
    if path is not None and spec.get_bool("dump", False):
        write_csv_atomic(
            path,
            ["nu", "ratio"],
            [[repr(r["nu"]), repr(r["ratio"])] for r in ratios],
        )
        out["csv"] = path.name
    return out


def exp_segment_sweep_profile(ctx: RunContext, spec: ExperimentSpec) -> dict:
    x0 = spec.get_float("x0", 0.3)
    nus = [float(v) for v in spec.params.get("nu_values", "0.3,0.2,0.1").split(",")]
    pair, frame = ctx.config.pair, ctx.frame
    sweeps = []
    for nu in nus:
        p = ctx.config.domain.section_point(x0, nu)
        sweeps.append({"nu": nu, "sweep_radians": segment_sweep(pair, frame, p, flow_tol=ctx.config.flow_tol)})
    out: dict = {"profile": sweeps, "passed": None}
    if "max_allowed" in spec.params:
        cap = spec.get_float("max_allowed", 2 * np.pi)
        out["max_allowed"] = cap
        out["passed"] = max(s["sweep_radians"] for s in sweeps) < cap
    return out


def exp_collinearity_locus(ctx: RunContext, spec: ExperimentSpec) -> dict:
    grid_res = spec.get_int("grid", 16)
    refine_tol = spec.get_float("refine_tol", 1e-8)
    nu_max = spec.get_float("nu_max", 1e-6)
    found = find_collinearity(ctx.config.pair, grid_res=grid_res, refine_tol=refine_tol)
    out: dict = {"n_found": len(found), "passed": None}
    if ctx.config.pair.declared_col is not None and found:
        worst = max(abs(p.y) for p in found)
        out["max_abs_nu"] = worst
        out["passed"] = worst < nu_max
    return out


def exp_sphere_basics(ctx: RunContext, spec: ExperimentSpec) -> dict:
    level = spec.get_int("level", 3)
    ident = sphere_degree_detailed(icosphere(level))
    anti = sphere_degree_detailed(icosphere(level, map_fn=lambda v: -v))
    passed = ident.value == 1 and anti.value == -1
    return {
        "passed": passed,
        "identity": {"degree": ident.value, "residual": ident.residual},
        "antipodal": {"degree": anti.value, "residual": anti.residual},
        "n_triangles": ident.n_triangles,
    }


def exp_model_map_table(ctx: RunContext, spec: ExperimentSpec) -> dict:
    d_range = spec.get_int("d_range", 2)
    grid = spec.get_int("grid", 64)
    table = []
    ok = True
    for dp in range(-d_range, d_range + 1):
        for dm in range(-d_range, d_range + 1):
            fn = model_map(dp, dm)
            res = sphere_degree_detailed(torus_grid_mesh(fn, grid, grid))
            proj = lambda params, fn=fn: meridian_project(fn(params))
            wp = circle_degree(proj, model_torus_path(0.25))
            wm = circle_degree(proj, model_torus_path(0.75))
            good = abs(res.value) == abs(dp - dm) and wp == dp and wm == dm
            ok = ok and good
            table.append(
                {
                    "d_plus": dp,
                    "d_minus": dm,
                    "degree": res.value,
                    "residual": res.residual,
                    "winding_quarter": wp,
                    "winding_three_quarter": wm,
                    "ok": good,
                }
            )
    return {"passed": ok, "pairs": table, "grid": grid}


def exp_hyperbolic_indices(ctx: RunContext, spec: ExperimentSpec) -> dict:
    radius = spec.get_float("radius", 0.1)
    level = spec.get_int("level", 3)
    center = np.array([0.0, 0.0, 0.5])

    def linear_field(signs):
        def f(pts):
            d = pts - center
            d2 = (pts[..., 2] - center[2] + 0.5) % 1.0 - 0.5
            return np.stack(
                [signs[0] * d[..., 0], signs[1] * d[..., 1], signs[2] * d2], axis=-1
            )

        return FieldSpec(func=f, name=f"linear{signs}")

    cases = [
        (0, (1, 1, 1)),
        (1, (1, 1, -1)),
        (2, (1, -1, -1)),
        (3, (-1, -1, -1)),
    ]
    rows = []
    ok = True
    for dim_stable, signs in cases:
        rep = index_isolated_zero(
            linear_field(signs), ChartPoint(*center), radius=radius, mesh_level=level
        )
        want = (-1) ** dim_stable
        good = rep.value == want
        ok = ok and good
        rows.append(
            {
                "dim_stable": dim_stable,
                "index": rep.value,
                "expected": want,
                "residual": rep.residual,
                "ok": good,
            }
        )
    return {"passed": ok, "cases": rows}


EXPERIMENT_KINDS: dict[str, Callable[[RunContext, ExperimentSpec], dict]] = {
    "commutation": exp_commutation,
    "tangent_flow_invariance": exp_tangent_flow_invariance,
    "holonomy_invariance": exp_holonomy_invariance,
    "return_time_identity": exp_return_time_identity,
    "linking": exp_linking,
    "region_index": exp_region_index,
    "verify_link_index": exp_verify_link_index,
    "homotopy_invariance": exp_homotopy_invariance,
    "fixed_point_spectrum": exp_fixed_point_spectrum,
    "iterate_return": exp_iterate_return,
    "cone_ratio_profile": exp_cone_ratio_profile,
    "segment_sweep_profile": exp_segment_sweep_profile,
    "collinearity_locus": exp_collinearity_locus,
    "sphere_basics": exp_sphere_basics,
    "model_map_table": exp_model_map_table,
    "hyperbolic_indices": exp_hyperbolic_indices,
}


def run_experiment(ctx: RunContext, spec: ExperimentSpec) -> dict:
    """Execute one experiment, capturing toolkit errors as structured failures."""
    try:
        result = EXPERIMENT_KINDS[spec.kind](ctx, spec)
        status = "ok"
    except ToolkitError as exc:
        result = {"passed": False if spec.asserted else None, "error": str(exc)}
        status = "error"
    result = {"name": spec.kind, "asserted": spec.asserted, "status": status, **result}
    return result
