"""Command-line interface: ``fracdim <subcommand> ...``.

Exit status is 0 on success, 1 on invalid input and 2 when a checked
inequality or experiment sanity check fails. Reports are JSON with a
``manifest`` (what was run) and a ``result`` (the numbers); outputs are
written to a temporary file and renamed into place only after everything
succeeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .bounds import BoundError, verify_concentration, verify_energy_lower_bound
from .dimension import DimensionError, estimate_dimension
from .energy import EnergyError, count_close_pairs, resolve_threads, s_energy_sweep
from .generators import (
    CantorParams,
    WeierstrassParams,
    from_params,
    gen_adversarial_lattice,
    gen_cantor,
    gen_cantor_product,
    gen_lattice,
    gen_weierstrass_graph,
)
from .geometry import GeometryError, PointFamily, PointSet, RegionSpec, load_csv, save_csv
from .pca import PcaError, pca, pca_compare, project
from .repro import ALIASES, EXPERIMENTS, run_experiment

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_FAILED = 2

_INPUT_ERRORS = (GeometryError, EnergyError, DimensionError, BoundError, PcaError, OSError, json.JSONDecodeError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunManifest:
    command: str
    params: dict
    inputs: dict = field(default_factory=dict)
    version: str = __version__
    seed: int | None = None
    wall_time: float = 0.0

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "params": self.params,
            "inputs": self.inputs,
            "version": self.version,
            "seed": self.seed,
            "wall_time_s": self.wall_time,
        }


# --------------------------------------------------------------------------- output


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _rows_csv(rows: Sequence[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "series"])
    for x, y, label in rows:
        w.writerow([repr(float(x)), repr(float(y)), label])
    return buf.getvalue()


def _points_csv(ps: PointSet) -> str:
    with tempfile.TemporaryDirectory() as tmp:
        p = Path(tmp) / "pts.csv"
        save_csv(ps, p)
        return p.read_text()


class _Outputs:
    """Collects output files and writes them together at the end."""

    def __init__(self) -> None:
        self.files: list[tuple[Path, str]] = []

    def add(self, path: str | None, text: str) -> None:
        if path:
            self.files.append((Path(path), text))

    def commit(self) -> None:
        for path, text in self.files:
            _atomic_write(path, text)


def _report(manifest: RunManifest, result: dict, started: float) -> dict:
    manifest.wall_time = round(time.perf_counter() - started, 6)
    return {"manifest": manifest.to_json(), "result": result}


def _load(path: str, manifest: RunManifest) -> PointSet:
    ps = load_csv(path)
    manifest.inputs[str(path)] = ps.content_hash
    return ps


# --------------------------------------------------------------------------- subcommands


def _cmd_generate(args, out: _Outputs) -> int:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "out", "json", "threads") and v is not None}
    manifest = RunManifest("generate", params, seed=args.seed)
    started = time.perf_counter()
    if args.params:
        record = json.loads(Path(args.params).read_text())
        manifest.inputs[args.params] = record
        ps = from_params(record)
    else:
        ps = _generate(args)
    out.add(args.out, _points_csv(ps))
    if args.json:
        out.add(args.json, _json_text(_report(manifest, {"n": ps.n, "dim": ps.dim, "content_hash": ps.content_hash}, started)))
    return EXIT_OK


def _need(args, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"--type {args.type} requires {', '.join(missing)}")


def _generate(args) -> PointSet:
    kind = args.type
    if kind == "cantor":
        _need(args, "m", "n", "k")
        return gen_cantor(CantorParams(args.m, args.n, args.k, tuple(args.kept or ())))
    if kind == "cantor-product":
        _need(args, "factors", "k")
        factors = []
        for item in args.factors.split(";"):
            try:
                m, n = (int(x) for x in item.split(","))
            except ValueError as exc:
                raise UsageError(f"--factors expects 'm,n;m,n;...', got {args.factors!r}") from exc
            factors.append(CantorParams(m, n, args.k))
        return gen_cantor_product(factors)
    if kind == "lattice":
        _need(args, "d", "q")
        return gen_lattice(args.d, args.q)
    if kind == "adversarial-lattice":
        _need(args, "d", "q", "k", "m")
        return gen_adversarial_lattice(args.d, args.q, args.k, args.m)
    if kind == "weierstrass":
        _need(args, "a", "b", "q")
        wp = WeierstrassParams(args.a, args.b, truncation=args.truncation or 0, seed=args.seed)
        return gen_weierstrass_graph(wp, args.d or 2, args.q, rescale=not args.no_rescale)
    raise UsageError("give --type or --params")


def _float_list(items: Sequence[str] | None, flag: str) -> list[float]:
    vals = []
    for item in items or ():
        for part in item.split(","):
            try:
                vals.append(float(part))
            except ValueError as exc:
                raise UsageError(f"{flag} expects numbers, got {part!r}") from exc
    return vals


def _s_values(args) -> list[float]:
    vals = _float_list(args.s, "--s")
    if not vals:
        raise UsageError("give at least one --s")
    return vals


def _cmd_energy(args, out: _Outputs) -> int:
    s_values = _s_values(args)
    manifest = RunManifest("energy", {"s": s_values, "method": args.method})
    started = time.perf_counter()
    ps = _load(args.input, manifest)
    results = s_energy_sweep(ps, s_values, threads=args.threads, method=args.method)
    result = {"n": ps.n, "results": [r.to_json() for r in results]}
    out.add(args.json, _json_text(_report(manifest, result, started)))
    out.add(args.csv, _rows_csv([(r.s, r.value, "energy") for r in results]))
    if not args.json:
        for r in results:
            print(f"s={r.s:g}\tI_s={r.value!r}")
    return EXIT_OK


def _cmd_pair_count(args, out: _Outputs) -> int:
    radii = _float_list(args.r, "--r")
    manifest = RunManifest("pair-count", {"r": radii})
    started = time.perf_counter()
    ps = _load(args.input, manifest)
    counts = [{"r": r, "count": count_close_pairs(ps, r, threads=args.threads)} for r in radii]
    out.add(args.json, _json_text(_report(manifest, {"n": ps.n, "counts": counts}, started)))
    out.add(args.csv, _rows_csv([(c["r"], c["count"], "pairs") for c in counts]))
    if not args.json:
        for c in counts:
            print(f"r={c['r']:g}\tpairs={c['count']}")
    return EXIT_OK


def _family_paths(spec: Sequence[str]) -> list[Path]:
    paths: list[Path] = []
    for item in spec:
        p = Path(item)
        if p.is_dir():
            paths += sorted(p.glob("*.csv"))
        else:
            paths.append(p)
    if not paths:
        raise UsageError("no CSV files found for --family")
    return paths


def _cmd_estimate_dim(args, out: _Outputs) -> int:
    params = {
        "s_min": args.s_min,
        "s_max": args.s_max,
        "step": args.step,
        "tau": args.tau,
        "method": args.method,
    }
    manifest = RunManifest("estimate-dim", params)
    started = time.perf_counter()
    members = [_load(str(p), manifest) for p in _family_paths(args.family)]
    members.sort(key=lambda ps: ps.n)
    family = PointFamily(tuple(members))
    est = estimate_dimension(
        family, args.s_min, args.s_max, args.step, args.tau, method=args.method, threads=args.threads
    )
    result = est.to_json()
    out.add(args.json, _json_text(_report(manifest, result, started)))
    rows = [(f.s, f.slope, "log-log slope") for f in est.slopes]
    rows += [(f.s, v, "increment slope") for f, v in zip(est.slopes, est.increment_slopes) if v is not None]
    out.add(args.csv, _rows_csv(rows))
    flag = "" if est.boundary == "none" else f" ({est.boundary} boundary)"
    print(f"dimension estimate {est.value:.4f}{flag}")
    return EXIT_OK


def _cmd_check_bound(args, out: _Outputs) -> int:
    eps: str | float = args.eps
    if eps not in ("exact", "auto"):
        try:
            eps = float(eps)
        except ValueError as exc:
            raise UsageError(f"--eps must be 'exact', 'auto' or a number, got {args.eps!r}") from exc
    manifest = RunManifest("check-bound", {"s": args.s, "eps": args.eps, "kind": args.kind})
    started = time.perf_counter()
    ps = _load(args.input, manifest)
    region_obj = json.loads(Path(args.region).read_text())
    manifest.inputs[args.region] = region_obj
    region = RegionSpec.from_json(region_obj)
    if args.kind == "concentration":
        report = verify_concentration(ps, region, args.s, eps, threads=args.threads)
    else:
        if eps == "auto":
            raise UsageError("--kind energy takes --eps exact or a number")
        report = verify_energy_lower_bound(ps, region, args.s, 0.0 if eps == "exact" else eps, threads=args.threads)
    out.add(args.json, _json_text(_report(manifest, report.to_json(), started)))
    verdict = "holds" if report.satisfied else "VIOLATED"
    print(f"{report.bound}: {report.lhs!r} {report.relation} {report.rhs!r} {verdict}")
    return EXIT_OK if report.satisfied else EXIT_FAILED


def _cmd_pca(args, out: _Outputs) -> int:
    manifest = RunManifest("pca", {"components": args.project})
    started = time.perf_counter()
    a = _load(args.input, manifest)
    if args.compare:
        b = _load(args.compare, manifest)
        result = pca_compare(a, b).to_json()
    else:
        result = pca(a).to_json()
    if args.project is not None:
        if not args.out:
            raise UsageError("--project needs --out")
        out.add(args.out, _points_csv(project(a, args.project)))
    out.add(args.json, _json_text(_report(manifest, result, started)))
    if not args.json:
        print(_json_text(result), end="")
    return EXIT_OK


def _cmd_repro(args, out: _Outputs) -> int:
    name = args.figure or args.experiment
    if name is None:
        raise UsageError("name an experiment: " + ", ".join(EXPERIMENTS))
    name = ALIASES.get(name, name)
    if name not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {name!r}; choose from {', '.join(EXPERIMENTS)}")
    manifest = RunManifest("repro", {"experiment": name, "level": args.level})
    started = time.perf_counter()
    try:
        payload, rows, ok = run_experiment(name, args.level, args.threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    payload["check_passed"] = ok
    report = _report(manifest, payload, started)
    out.add(args.json, _json_text(report))
    out.add(args.csv, _rows_csv(rows))
    if not args.json and not args.csv:
        print(_json_text(payload), end="")
    return EXIT_OK if ok else EXIT_FAILED


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="fracdim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fracdim {__version__}")
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: FRACDIM_THREADS or CPU count)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="write a synthetic point set as CSV")
    g.add_argument("--type", choices=["cantor", "cantor-product", "lattice", "adversarial-lattice", "weierstrass"])
    g.add_argument("--params", help="JSON parameter file instead of flags")
    g.add_argument("--m", type=int, help="kept subintervals (cantor) or points on the plane (adversarial)")
    g.add_argument("--n", type=int, help="subintervals per level (cantor)")
    g.add_argument("--k", type=int, help="level (cantor) or plane dimension (adversarial)")
    g.add_argument("--kept", type=int, nargs="+", help="kept subinterval indices (cantor)")
    g.add_argument("--factors", help="cantor-product factors as 'm,n;m,n'")
    g.add_argument("--d", type=int, help="ambient dimension")
    g.add_argument("--q", type=int, help="grid points per axis")
    g.add_argument("--a", type=float)
    g.add_argument("--b", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--truncation", type=int)
    g.add_argument("--no-rescale", action="store_true", help="keep raw graph values")
    g.add_argument("--out", required=True)
    g.add_argument("--json")
    g.set_defaults(func=_cmd_generate)

    e = sub.add_parser("energy", parents=[common], help="discrete s-energies of a point set")
    e.add_argument("--input", required=True)
    e.add_argument("--s", action="append", help="exponents, comma separated (repeatable)")
    e.add_argument("--method", choices=["auto", "blocked", "product"], default="auto")
    e.add_argument("--json")
    e.add_argument("--csv")
    e.set_defaults(func=_cmd_energy)

    c = sub.add_parser("pair-count", parents=[common], help="ordered pairs within distance r")
    c.add_argument("--input", required=True)
    c.add_argument("--r", action="append", required=True, help="radii, comma separated (repeatable)")
    c.add_argument("--json")
    c.add_argument("--csv")
    c.set_defaults(func=_cmd_pair_count)

    d = sub.add_parser("estimate-dim", parents=[common], help="dimension estimate of a family of point sets")
    d.add_argument("--family", nargs="+", required=True, help="directory of CSVs or CSV files")
    d.add_argument("--s-min", type=float, default=0.0)
    d.add_argument("--s-max", type=float, default=None)
    d.add_argument("--step", type=float, default=0.05)
    d.add_argument("--tau", type=float, default=None)
    d.add_argument("--method", choices=["increment", "threshold"], default="increment")
    d.add_argument("--json")
    d.add_argument("--csv")
    d.set_defaults(func=_cmd_estimate_dim)

    b = sub.add_parser("check-bound", parents=[common], help="check an energy or concentration bound")
    b.add_argument("--input", required=True)
    b.add_argument("--region", required=True, help="region JSON with shape, k and C_E")
    b.add_argument("--s", type=float, required=True)
    b.add_argument("--eps", default="exact", help="'exact', 'auto' or a number")
    b.add_argument("--kind", choices=["concentration", "energy"], default="concentration")
    b.add_argument("--json")
    b.set_defaults(func=_cmd_check_bound)

    a = sub.add_parser("pca", parents=[common], help="principal components of a point set")
    a.add_argument("--input", required=True)
    a.add_argument("--compare")
    a.add_argument("--project", type=int, help="number of components to keep")
    a.add_argument("--out", help="CSV for the projected points")
    a.add_argument("--json")
    a.set_defaults(func=_cmd_pca)

    r = sub.add_parser("repro", parents=[common], help="regenerate an experiment's data")
    r.add_argument("experiment", nargs="?")
    r.add_argument("--figure", help="experiment id (same as the positional argument)")
    r.add_argument("--level", type=int, help="largest level / size index")
    r.add_argument("--json")
    r.add_argument("--csv")
    r.set_defaults(func=_cmd_repro)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    out = _Outputs()
    try:
        args = build_parser().parse_args(argv)
        if args.threads is not None:
            resolve_threads(args.threads)
        code = args.func(args, out)
        out.commit()
        return code
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INVALID


if __name__ == "__main__":
    raise SystemExit(main())
