"""Command-line interface.

    ziglin probe  --system henon_heiles --reference -o hh.json
    ziglin scan   --config sat.json --csv nodes.csv --jobs 4
    ziglin check  hh.json
    ziglin systems --json

A run can be described by a JSON config file; flags override its keys.
Complex numbers are ``[re, im]`` pairs in files and ``1+2j`` / ``1+2i`` on
the command line.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

from . import __version__, kernel
from .monodromy import Classification, ProbeOptions, ScanReport, probe_report, scan
from .obstruction import VerdictOptions, verdict
from .odeint import IntegratorOptions
from .system import SystemSyntaxError, parse_system
from .systems import CATALOG, jsonable, get_entry

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ALL_ABORTED = 3

CSV_HEADER = ["re(t)", "im(t)", "classification", "traversals", "return_residual",
              "det_residual", "symplectic_residual"]


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------- values

def _complex(v, what: str) -> complex:
    """A complex from ``[re, im]``, a real number, or (flags only) a string."""
    if isinstance(v, bool):
        raise ConfigError(f"{what}: expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(p, (int, float)) and not isinstance(p, bool) for p in v):
        return complex(v[0], v[1])
    raise ConfigError(f"{what}: expected [re, im], got {v!r}")


def _flag_complex(text: str) -> complex:
    s = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _pair(z: complex) -> list[float]:
    return [z.real, z.imag]


# ---------------------------------------------------------------- config

def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be an object")
    return cfg


def _merge_flags(cfg: dict, args: argparse.Namespace) -> dict:
    cfg = json.loads(json.dumps(cfg))  # deep copy
    system = cfg.setdefault("system", {})
    if args.system:
        system.clear()
        system["name"] = args.system
    if args.system_file:
        system.clear()
        try:
            system["source"] = Path(args.system_file).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read system file: {exc}") from None
    for item in args.param or []:
        key, eq, val = item.partition("=")
        if not eq:
            raise ConfigError(f"--param expects NAME=VALUE, got {item!r}")
        system.setdefault("params", {})[key.strip()] = _pair(_flag_complex(val))
    if args.x0 is not None:
        cfg["x0"] = [_pair(z) for z in args.x0]
    if args.t0 is not None:
        cfg["t0"] = _pair(args.t0)
    if getattr(args, "candidate", None):
        cfg["candidates"] = [_pair(z) for z in args.candidate]
    if getattr(args, "domain", None):
        cfg["domain"] = list(args.domain)
    if getattr(args, "grid", None):
        cfg["grid"] = list(args.grid)
    sections = {
        "integrator": ["rel_tol", "abs_tol", "max_steps", "checkpoint_stride"],
        "probe": ["radius", "orientation", "max_traversals", "return_tol", "matrix_tol"],
        "obstruction": ["comm_tol", "pair_tol", "k_max"],
    }
    for sec, keys in sections.items():
        for k in keys:
            v = getattr(args, k, None)
            if v is not None:
                cfg.setdefault(sec, {})[k] = v
    if getattr(args, "waypoint", None):
        cfg.setdefault("probe", {})["waypoints"] = [_pair(z) for z in args.waypoint]
    out = cfg.setdefault("output", {})
    if args.output:
        out["report"] = args.output
    if getattr(args, "csv", None):
        out["csv"] = args.csv
    if args.jobs is not None:
        cfg["jobs"] = args.jobs
    if args.backend:
        cfg["backend"] = args.backend
    if args.reference:
        _fill_reference(cfg)
    return cfg


def _fill_reference(cfg: dict) -> None:
    name = cfg.get("system", {}).get("name")
    if not name:
        raise ConfigError("--reference needs a catalog system")
    conv = jsonable(dict(_entry(name).reference))
    for key in ("x0", "t0", "candidates", "domain", "grid"):
        if key in conv and key not in cfg:
            cfg[key] = conv[key]
    if "radius" in conv:
        cfg.setdefault("probe", {}).setdefault("radius", conv["radius"])


def _entry(name: str):
    try:
        return get_entry(name)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None


def _build_system(spec: dict):
    if not isinstance(spec, dict) or not spec:
        raise ConfigError("missing field 'system'")
    has_name, has_src = "name" in spec, "source" in spec
    if has_name == has_src:
        raise ConfigError("field 'system' needs exactly one of 'name' or 'source'")
    params = {k: _complex(v, f"system.params.{k}") for k, v in spec.get("params", {}).items()}
    params = {k: (v.real if v.imag == 0 else v) for k, v in params.items()}
    try:
        if has_name:
            return _entry(spec["name"]).build(**params)
        return parse_system(spec["source"], params)
    except (SystemSyntaxError, ValueError) as exc:
        raise ConfigError(f"system: {exc}") from None


def _options(cfg: dict) -> tuple[ProbeOptions, VerdictOptions]:
    try:
        integ = IntegratorOptions(backend=cfg.get("backend"), **cfg.get("integrator", {}))
        p = dict(cfg.get("probe", {}))
        p["waypoints"] = tuple(_complex(w, "probe.waypoints") for w in p.get("waypoints", []))
        popts = ProbeOptions(integrator=integ, **p)
        vopts = VerdictOptions(**cfg.get("obstruction", {}))
    except TypeError as exc:
        raise ConfigError(f"unknown option: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return popts, vopts


def _require(cfg: dict, key: str):
    if key not in cfg or cfg[key] is None:
        raise ConfigError(f"missing field '{key}'")
    return cfg[key]


# ---------------------------------------------------------------- output

def _fmt(z: complex) -> str:
    return f"{z.real:.6g}{z.imag:+.6g}i"


def _num(v) -> str:
    return "" if v is None or (isinstance(v, float) and math.isinf(v)) else repr(float(v))


def write_csv(report: ScanReport, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for o in report.outcomes:
            w.writerow([repr(o.candidate.real), repr(o.candidate.imag), o.classification.value,
                        o.traversals_used, _num(o.return_residual), _num(o.det_residual),
                        _num(o.symplectic_residual)])


def _print_outcomes(report: ScanReport, out) -> None:
    for o in report.outcomes:
        line = f"{_fmt(o.candidate):>24}  {o.classification.value:<12}"
        if o.classification in (Classification.TRIVIAL, Classification.GENERATOR):
            line += f" laps={o.traversals_used} return={o.return_residual:.2e}"
            line += f" |T-I|={o.matrix_deviation:.3e} |det-1|={o.det_residual:.2e}"
        elif o.classification is Classification.NON_RETURNING:
            line += f" laps={o.traversals_used} return={o.return_residual:.3e}"
        elif o.abort_reason:
            line += f" {o.abort_reason}"
        print(line, file=out)


def _print_verdict(v: dict, out) -> None:
    print(f"verdict: {v['conclusion']}", file=out)
    for w in v["witnesses"]:
        i, j = w["pair"]
        print(f"  witness generators ({i}, {j}): |[T_i, T_j]| = {w['norm']:.6g}"
              f" (relative {w['relative']:.3g})", file=out)
    for note in v["notes"]:
        print(f"  note: {note}", file=out)


def _write_report(report: ScanReport, path: str) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------- commands

def _run(args, mode: str) -> int:
    cfg = _merge_flags(_load_config(args.config), args)
    cfg["mode"] = mode
    sysdef = _build_system(cfg.get("system"))
    x0 = [_complex(z, "x0") for z in _require(cfg, "x0")]
    if len(x0) != sysdef.n:
        raise ConfigError(f"x0 has length {len(x0)}, system {sysdef.name} has dimension "
                          f"{sysdef.n}")
    t0 = _complex(_require(cfg, "t0"), "t0")
    popts, vopts = _options(cfg)
    jobs = int(cfg.get("jobs", 1) or 1)
    if mode == "probe":
        cands = [_complex(c, "candidates") for c in _require(cfg, "candidates")]
        if not cands:
            raise ConfigError("field 'candidates' is empty")
        report = probe_report(sysdef, x0, t0, cands, popts, jobs=jobs)
    else:
        domain = _require(cfg, "domain")
        grid = _require(cfg, "grid")
        if len(domain) != 4 or len(grid) != 2:
            raise ConfigError("domain is [re_min, re_max, im_min, im_max], grid is [nx, ny]")
        try:
            report = scan(sysdef, x0, t0, domain, grid, popts, jobs=jobs)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    cfg["backend"] = kernel.get_backend(cfg.get("backend")).NAME
    report.config = cfg
    v = verdict(report, vopts)
    report.verdict = v.to_dict()

    out = sys.stdout
    if not args.quiet:
        print(f"system {sysdef.name} (dimension {sysdef.n}), t0 = {_fmt(t0)}, "
              f"backend {cfg['backend']}", file=out)
        _print_outcomes(report, out)
        _print_verdict(report.verdict, out)
    outputs = cfg.get("output", {})
    path = outputs.get("report", "report.json")
    _write_report(report, path)
    if outputs.get("csv"):
        write_csv(report, outputs["csv"])
    if not args.quiet:
        print(f"report written to {path}", file=out)
    classes = [o.classification for o in report.outcomes]
    if classes and all(c is Classification.ABORTED for c in classes):
        print("error: every probe aborted", file=sys.stderr)
        return EXIT_ALL_ABORTED
    return EXIT_OK


def cmd_probe(args) -> int:
    return _run(args, "probe")


def cmd_scan(args) -> int:
    return _run(args, "scan")


def cmd_check(args) -> int:
    try:
        with open(args.report, encoding="utf-8") as fh:
            data = json.load(fh)
        report = ScanReport.from_dict(data)
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"invalid report {args.report}: {exc}") from None
    stored = (data.get("config") or {}).get("obstruction", {})
    flags = {k: getattr(args, k) for k in ("comm_tol", "pair_tol", "k_max")
             if getattr(args, k) is not None}
    try:
        vopts = VerdictOptions(**{**stored, **flags})
    except TypeError as exc:
        raise ConfigError(f"invalid obstruction options: {exc}") from None
    v = verdict(report, vopts).to_dict()
    if args.json:
        json.dump(v, sys.stdout, indent=2)
        print()
    else:
        print(f"{len(report.generators)} generator(s) from {len(report.outcomes)} probe(s)")
        _print_verdict(v, sys.stdout)
    return EXIT_OK


def cmd_systems(args) -> int:
    schemas = [e.schema() for e in CATALOG.values()]
    if args.json:
        json.dump(schemas, sys.stdout, indent=2)
        print()
        return EXIT_OK
    for s in schemas:
        params = ", ".join(f"{k}={v}" for k, v in s["parameters"].items()) or "none"
        print(f"{s['name']:<20} dim {s['dimension']}  {s['description']}")
        print(f"{'':<20} state ({', '.join(s['state'])}); parameters: {params}")
        ref = s["reference"]
        if ref:
            cands = ", ".join(_fmt(complex(*c)) for c in ref.get("candidates", []))
            print(f"{'':<20} reference: t0 = {_fmt(complex(*ref['t0']))}, candidates {cands}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def _add_run_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("system and initial data")
    g.add_argument("--config", "-c", help="JSON run configuration")
    g.add_argument("--system", help="catalog system name")
    g.add_argument("--system-file", help="system definition in the text format")
    g.add_argument("--param", action="append", metavar="NAME=VALUE",
                   help="override a system parameter (repeatable)")
    g.add_argument("--x0", nargs="+", type=_flag_complex, help="initial state")
    g.add_argument("--t0", type=_flag_complex, help="base time")
    g.add_argument("--reference", action="store_true",
                   help="fill missing data from the catalog reference setup")
    g = p.add_argument_group("integrator")
    g.add_argument("--rel-tol", type=float)
    g.add_argument("--abs-tol", type=float)
    g.add_argument("--max-steps", type=int)
    g.add_argument("--checkpoint-stride", type=float)
    g.add_argument("--backend", choices=["cython", "python"])
    g = p.add_argument_group("probes")
    g.add_argument("--radius", type=float)
    g.add_argument("--orientation", type=int, choices=[1, -1])
    g.add_argument("--waypoint", action="append", type=_flag_complex,
                   help="approach waypoint (repeatable)")
    g.add_argument("--max-traversals", type=int)
    g.add_argument("--return-tol", type=float)
    g.add_argument("--matrix-tol", type=float)
    g.add_argument("--jobs", "-j", type=int, help="parallel probes")
    _add_verdict_flags(p)
    g = p.add_argument_group("output")
    g.add_argument("--output", "-o", help="report path (default report.json)")
    g.add_argument("--quiet", "-q", action="store_true")


def _add_verdict_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("obstruction")
    g.add_argument("--comm-tol", type=float)
    g.add_argument("--pair-tol", type=float)
    g.add_argument("--k-max", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ziglin", description="Monodromy generators and commutator tests along "
                                   "loops in complex time.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("probe", help="probe an explicit list of candidate points")
    _add_run_flags(p)
    p.add_argument("--candidate", action="append", type=_flag_complex,
                   help="candidate singularity (repeatable)")
    p.add_argument("--csv", help="also write a per-probe CSV")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("scan", help="probe every node of a rectangular grid")
    _add_run_flags(p)
    p.add_argument("--domain", nargs=4, type=float, metavar=("RE0", "RE1", "IM0", "IM1"))
    p.add_argument("--grid", nargs=2, type=int, metavar=("NX", "NY"))
    p.add_argument("--csv", help="also write a per-node CSV")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("check", help="recompute the verdict of a saved report")
    p.add_argument("report")
    p.add_argument("--json", action="store_true", help="print the verdict as JSON")
    _add_verdict_flags(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("systems", help="list built-in systems")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_systems)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
