"""Command line entry points.

    torlink run <config> [--out DIR] [--jobs N] [--tol X]
    torlink list-scenarios
    torlink degree --mesh FILE

``run`` accepts either a path to a config file or the name of a shipped
scenario.  Exit status is 0 iff every asserted experiment passed.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from .config import parse_config
from .degree import load_mesh, sphere_degree_detailed
from .errors import ToolkitError
from .runner import run


def _shipped_configs() -> dict[str, Path]:
    root = resources.files("torlink").joinpath("data")
    out = {}
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".cfg"):
            out[entry.name[: -len(".cfg")]] = Path(str(entry))
    return out


def _resolve_config(arg: str) -> Path:
    p = Path(arg)
    if p.exists():
        return p
    shipped = _shipped_configs()
    if arg in shipped:
        return shipped[arg]
    raise ToolkitError(
        f"no config file or shipped scenario named {arg!r}; "
        f"shipped: {', '.join(shipped)}"
    )


def cmd_run(args) -> int:
    config = parse_config(_resolve_config(args.config))
    if args.tol is not None:
        config.flow_tol = args.tol
        config.crossing_tol = args.tol
    out_dir = Path(args.out) if args.out else None
    report, code = run(config, out_dir=out_dir, jobs=args.jobs)
    for entry in report["experiments"]:
        mark = {True: "pass", False: "FAIL", None: "info"}[entry.get("passed")]
        flag = "assert" if entry["asserted"] else "record"
        print(f"[{mark}] {report['scenario']}::{entry['name']} ({flag})")
    print(f"overall: {'pass' if report['overall_pass'] else 'FAIL'}")
    if out_dir is not None:
        print(f"report: {out_dir / (report['scenario'] + '_report.json')}")
    return code


def cmd_list_scenarios(args) -> int:
    from .scenarios import _BUILDERS

    shipped = _shipped_configs()
    for name, path in shipped.items():
        print(name)
        if args.verbose and name in _BUILDERS:
            print(f"    {_BUILDERS[name]().summary}")
    return 0


def cmd_degree(args) -> int:
    mesh = load_mesh(args.mesh)
    res = sphere_degree_detailed(mesh)
    print(
        json.dumps(
            {
                "degree": res.value,
                "residual": res.residual,
                "n_triangles": res.n_triangles,
                "max_image_diameter": res.max_image_diameter,
            },
            indent=2,
            sort_keys=True,
        )
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="torlink", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario config")
    p_run.add_argument("config", help="config file path or shipped scenario name")
    p_run.add_argument("--out", default=None, help="directory for reports and CSV data")
    p_run.add_argument("--jobs", type=int, default=1, help="concurrent experiments")
    p_run.add_argument("--tol", type=float, default=None, help="override flow tolerance")
    p_run.set_defaults(func=cmd_run)

    p_list = sub.add_parser("list-scenarios", help="list shipped scenario configs")
    p_list.add_argument("-v", "--verbose", action="store_true")
    p_list.set_defaults(func=cmd_list_scenarios)

    p_deg = sub.add_parser("degree", help="degree of a mesh map from a file")
    p_deg.add_argument("--mesh", required=True, help="indexed-triangle mesh file")
    p_deg.set_defaults(func=cmd_degree)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
