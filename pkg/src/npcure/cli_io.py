"""Dataset ingestion, serialization and the ``npcure`` command line.

Subcommands::

    npcure simulate  --model 1 --n 100 --seed 7 --out data.csv
    npcure fit       data.csv --h 5 --b 20 --out fit.csv
    npcure fit       data.csv --select --pilot local --smooth --out fit.csv
    npcure diagnose  data.csv
    npcure benchmark plan.json --out-dir results/

Exit codes: 0 success, 2 usage error, 3 parse error, 4 numerical failure.
Set ``NPCURE_WORKERS`` (or ``--workers``) to parallelize; outputs do not
depend on it.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import inspect
import json
import logging
import math
import platform
import sys
import time
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from ._parallel import ordered_map, resolve_workers
from ._random import SEED_SCHEME_VERSION, STREAM_SAMPLE, substream
from .bandwidth_select import BootstrapConfig, PilotRule, select_bandwidth, smooth_bandwidths
from .beran import SurvivalSample
from .cure_estimators import cure_fit, identifiability_diagnostic, incidence
from .exceptions import CuredSlice, EmptyNeighborhood, NpcureError
from .sim_engine import (
    ExperimentPlan,
    gen_sample,
    mc_bootstrap_bandwidth_study,
    mc_incidence_mse,
    mc_latency_mise,
)
from .truth_oracle import get_model

log = logging.getLogger("npcure")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_NUMERIC = 4

REQUIRED_COLUMNS = ("time", "status", "covariate")


class ParseError(NpcureError):
    pass


class UsageError(NpcureError):
    pass


# -- number formatting ---------------------------------------------------------


def fmt(v) -> str:
    """17 significant digits, so every double round-trips; NaN as empty."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return ""
    return format(v, ".17g")


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def write_json(path, obj):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


# -- datasets ------------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """Parsed CSV: one :class:`SurvivalSample` per group (``""`` if ungrouped)."""

    groups: dict
    has_group_column: bool

    @property
    def labels(self):
        return list(self.groups)


def read_dataset(path) -> Dataset:
    """Read a CSV with columns ``time``, ``status``, ``covariate`` and optional ``group``.

    Raises
    ------
    ParseError
        With the offending line number for malformed rows.
    """
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    with fh:
        reader = csv.DictReader(fh)
        fields = [f.strip() for f in (reader.fieldnames or [])]
        missing = [c for c in REQUIRED_COLUMNS if c not in fields]
        if missing:
            raise ParseError(f"{path}: missing column(s) {', '.join(missing)}")
        reader.fieldnames = fields
        has_group = "group" in fields
        data: dict = {}
        for row in reader:
            line = reader.line_num

            def num(col):
                raw = (row.get(col) or "").strip()
                try:
                    v = float(raw)
                except ValueError:
                    raise ParseError(f"{path}:{line}: non-numeric {col} {raw!r}") from None
                if not math.isfinite(v):
                    raise ParseError(f"{path}:{line}: non-finite {col} {raw!r}")
                return v

            t = num("time")
            if t < 0:
                raise ParseError(f"{path}:{line}: negative time {t}")
            st = num("status")
            if st not in (0.0, 1.0):
                raise ParseError(f"{path}:{line}: status must be 0 or 1, got {row['status']!r}")
            x = num("covariate")
            g = (row.get("group") or "").strip() if has_group else ""
            data.setdefault(g, []).append((x, t, int(st)))
    total = sum(len(v) for v in data.values())
    if total < 2:
        raise ParseError(f"{path}: need at least 2 data rows, found {total}")
    groups = {}
    for g, rows in data.items():
        arr = np.asarray(rows, dtype=float)
        groups[g] = SurvivalSample(x=arr[:, 0], t=arr[:, 1], delta=arr[:, 2].astype(int))
    return Dataset(groups, has_group)


def write_dataset(path, sample: SurvivalSample, group: Optional[str] = None):
    """Write a sample in input order with full-precision numbers."""
    header = ["covariate", "time", "status"] + (["group"] if group is not None else [])
    rows = []
    for x, t, d in zip(sample.x, sample.t, sample.delta):
        rows.append([x, t, int(d)] + ([group] if group is not None else []))
    write_csv(path, header, rows)


# -- run configuration ---------------------------------------------------------

FIT_KEYS = {
    "h": float, "b": float, "select": bool, "pilot": str, "k": int, "smooth": bool,
    "seed": int, "resamples1": int, "resamples2": int, "grid1": int, "grid2": int,
    "search_range": str, "one_stage": bool, "x_grid": str, "grid_size": int, "t_grid": str,
    "group": str,
}

PLAN_KEYS = {
    "model": int, "sample_sizes": list, "replications": int, "x_grid": (list, str),
    "h_grid": (list, str), "b_grid": (list, str), "time_points": int, "seed": int,
    "estimator": str, "studies": list, "stage1_resamples": int, "stage2_resamples": int,
    "stage1_grid_size": int, "stage2_grid_size": int, "stage1_range": (list, type(None)),
    "pilot": str, "pilot_k": (int, type(None)), "two_stage": bool, "bootstrap_seed": int,
}


def load_flat_config(path, allowed: dict) -> dict:
    """Load a flat JSON object, rejecting unknown keys and nested objects."""
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(obj, dict):
        raise ParseError(f"{path}: expected a JSON object of key/value pairs")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ParseError(f"{path}: unknown key(s) {', '.join(unknown)}")
    for k, v in obj.items():
        if isinstance(v, dict):
            raise ParseError(f"{path}: key {k!r} must not be nested")
        types = allowed[k] if isinstance(allowed[k], tuple) else (allowed[k],)
        if float in types and isinstance(v, int) and not isinstance(v, bool):
            continue
        if not isinstance(v, types) or (isinstance(v, bool) and bool not in types):
            names = "/".join(t.__name__ for t in types)
            raise ParseError(f"{path}: key {k!r} expects {names}, got {type(v).__name__}")
    return obj


def parse_grid(spec, default=None):
    """Parse ``"lin:lo:hi:num"``, ``"log:lo:hi:num"``, ``"a,b,c"`` or a list."""
    if spec is None:
        return default
    if isinstance(spec, (list, tuple)):
        return np.asarray(spec, dtype=float)
    spec = str(spec).strip()
    try:
        if spec.startswith(("lin:", "log:")):
            kind, lo, hi, num = spec.split(":")
            f = np.linspace if kind == "lin" else np.geomspace
            return f(float(lo), float(hi), int(num))
        return np.asarray([float(v) for v in spec.split(",") if v.strip()], dtype=float)
    except ValueError:
        raise UsageError(f"bad grid specification {spec!r}") from None


# -- commands ------------------------------------------------------------------


def cmd_simulate(model, n: int, seed: int, out_path) -> dict:
    """Write a simulated sample and a JSON sidecar with its provenance."""
    if n < 1:
        raise UsageError("n must be >= 1")
    try:
        truth = get_model(model)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    sample = gen_sample(truth, n, substream(seed, STREAM_SAMPLE, n, 0))
    out_path = Path(out_path)
    write_dataset(out_path, sample)
    meta = dict(
        command="simulate", model=truth.name, params=truth.params, n=n, seed=seed,
        seed_derivation=f"SeedSequence(seed, spawn_key=({STREAM_SAMPLE}, n, 0))",
        seed_scheme_version=SEED_SCHEME_VERSION, censoring_rate=truth.censoring_rate,
        covariate_law=[truth.x_low, truth.x_high], version=__version__,
    )
    write_json(out_path.with_suffix(".json"), meta)
    return meta


def _fit_task(args):
    sample, x, cfg, key = args
    try:
        res = select_bandwidth(sample, x, cfg, key=key)
    except NpcureError as exc:
        return None, None, type(exc).__name__
    return res.selected, res.pilot, "grid_boundary" if res.at_boundary else ""


def _fit_config(resamples1, resamples2, grid1, grid2, search_range, pilot, k, seed, one_stage):
    return BootstrapConfig(
        stage1_resamples=resamples1, stage2_resamples=resamples2,
        stage1_grid_size=grid1, stage2_grid_size=grid2, stage1_range=search_range,
        pilot=PilotRule(pilot, k), master_seed=seed, two_stage=not one_stage,
    )


def _is_equispaced(g):
    d = np.diff(g)
    return d.size > 0 and np.allclose(d, d[0], rtol=1e-9, atol=0)


def cmd_fit(
    data,
    out_path,
    h: Optional[float] = None,
    select: bool = False,
    b: Optional[float] = None,
    x_grid=None,
    grid_size: int = 20,
    group: Optional[str] = None,
    pilot: str = "local",
    k: Optional[int] = None,
    smooth: bool = False,
    seed: int = 0,
    resamples1: int = 1000,
    resamples2: int = 1000,
    grid1: int = 21,
    grid2: int = 5,
    search_range=None,
    one_stage: bool = True,
    t_grid=None,
    latency_out=None,
    workers=None,
):
    """Fit the cure probability (and latency if ``b`` is given) per group.

    Warnings are written as a column; a failure at one cell never aborts
    the run.  Returns the fit rows.
    """
    if (h is None) == (not select):
        raise UsageError("give exactly one of a fixed bandwidth (h) or select=True")
    if h is not None and not h > 0:
        raise UsageError("h must be positive")
    if b is not None and not b > 0:
        raise UsageError("b must be positive")
    ds = data if isinstance(data, Dataset) else read_dataset(data)
    labels = ds.labels
    if group is not None:
        if group not in ds.groups:
            raise UsageError(f"group {group!r} not found; available: {', '.join(map(repr, labels))}")
        labels = [group]
    rng_tuple = None
    if search_range is not None:
        if isinstance(search_range, str):
            try:
                lo, hi = (float(v) for v in search_range.split(","))
            except ValueError:
                raise UsageError(f"bad search range {search_range!r}; expected 'lo,hi'") from None
        else:
            lo, hi = search_range
        rng_tuple = (lo, hi)
    try:
        cfg = _fit_config(resamples1, resamples2, grid1, grid2, rng_tuple, pilot, k, seed, one_stage)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    fit_rows, lat_rows = [], []
    for gi, label in enumerate(ds.labels):
        if label not in labels:
            continue
        sample = ds.groups[label]
        if sample.n < 2:
            log.warning("group %r has fewer than 2 rows; skipped", label)
            continue
        ident = identifiability_diagnostic(sample)
        grid = parse_grid(x_grid)
        if grid is None:
            grid = np.linspace(sample.x.min(), sample.x.max(), grid_size + 1)
        if select:
            tasks = [(sample, float(x), cfg, (gi, j)) for j, x in enumerate(grid)]
            sel = ordered_map(_fit_task, tasks, workers)
            h_boot = np.array([np.nan if s[0] is None else s[0] for s in sel])
            g_used = [s[1] for s in sel]
            notes = [s[2] for s in sel]
            h_used = h_boot
            if smooth:
                if not _is_equispaced(grid):
                    raise UsageError("bandwidth smoothing needs an equispaced covariate grid")
                if np.any(np.isnan(h_boot)):
                    raise UsageError("cannot smooth: bandwidth selection failed at some grid points")
                h_used = smooth_bandwidths(h_boot)
        else:
            h_boot = np.full(grid.size, np.nan)
            h_used = np.full(grid.size, float(h))
            g_used = [None] * grid.size
            notes = [""] * grid.size
        for j, x in enumerate(grid):
            warn = [w for w in (notes[j],) if w]
            if ident.warning:
                warn.append("identifiability")
            elif ident.largest_uncensored_time is None:
                warn.append("identifiability_no_uncensored")
            cure = float("nan")
            if not np.isnan(h_used[j]):
                try:
                    cure = incidence(sample, float(x), float(h_used[j]))
                except EmptyNeighborhood:
                    warn.append("empty_neighborhood")
            row = [label, x, h_used[j], g_used[j], cure, ";".join(warn)]
            if select and smooth:
                row.insert(3, h_boot[j])
            fit_rows.append(row)
            if b is not None:
                times = parse_grid(t_grid)
                if times is None:
                    times = np.unique(sample.t)
                try:
                    fit = cure_fit(sample, float(x), float(h_used[j]) if not np.isnan(h_used[j]) else float(b), b)
                    s0 = fit.latency_curve(times)
                    lw = ""
                except CuredSlice:
                    s0, lw = np.full(times.size, np.nan), "cured_slice"
                except EmptyNeighborhood:
                    s0, lw = np.full(times.size, np.nan), "empty_neighborhood"
                lat_rows.extend([label, x, b, t, v, lw] for t, v in zip(times, s0))
    header = ["group", "x", "h_used", "g_used", "cure_probability", "warnings"]
    if select and smooth:
        header.insert(3, "h_bootstrap")
    out_path = Path(out_path)
    write_csv(out_path, header, fit_rows)
    if b is not None:
        lat_path = Path(latency_out) if latency_out else out_path.with_name(out_path.stem + "_latency.csv")
        write_csv(lat_path, ["group", "x", "b", "t", "S0_hat", "warnings"], lat_rows)
    return fit_rows


def cmd_diagnose(data, group: Optional[str] = None, out_path=None):
    """Per-group censoring summary and identifiability flag."""
    ds = data if isinstance(data, Dataset) else read_dataset(data)
    labels = ds.labels
    if group is not None:
        if group not in ds.groups:
            raise UsageError(f"group {group!r} not found; available: {', '.join(map(repr, labels))}")
        labels = [group]
    rows = []
    for label in labels:
        s = ds.groups[label]
        if s.n < 2:
            log.warning("group %r has fewer than 2 rows; skipped", label)
            continue
        rep = identifiability_diagnostic(s)
        cens = int(np.sum(s.delta == 0))
        rows.append([
            label, s.n, cens, round(100.0 * cens / s.n, 2), rep.largest_uncensored_time,
            rep.n_censored_beyond, int(rep.warning),
        ])
    header = ["group", "n", "censored", "censoring_pct", "t1max", "censored_beyond_t1max", "warning"]
    if out_path is not None:
        write_csv(out_path, header, rows)
    return header, rows


def _stage1_range(cfg):
    if "stage1_range" not in cfg:
        return (0.2, 50.0)
    r = cfg["stage1_range"]
    return None if r is None else tuple(float(v) for v in r)


def plan_from_config(cfg: dict):
    """Build an :class:`ExperimentPlan`, a :class:`BootstrapConfig` and the study list."""
    defaults = ExperimentPlan()
    kw = {}
    for key in ("model", "replications", "time_points", "seed", "estimator"):
        if key in cfg:
            kw[key] = cfg[key]
    if "sample_sizes" in cfg:
        kw["sample_sizes"] = tuple(cfg["sample_sizes"])
    for key in ("x_grid", "h_grid", "b_grid"):
        if key in cfg:
            kw[key] = tuple(parse_grid(cfg[key]).tolist())
    try:
        plan = ExperimentPlan(**kw)
        boot = BootstrapConfig(
            stage1_resamples=cfg.get("stage1_resamples", 80),
            stage2_resamples=cfg.get("stage2_resamples", 1000),
            stage1_grid_size=cfg.get("stage1_grid_size", 21),
            stage2_grid_size=cfg.get("stage2_grid_size", 5),
            stage1_range=_stage1_range(cfg),
            pilot=PilotRule(cfg.get("pilot", "global"), cfg.get("pilot_k")),
            master_seed=cfg.get("bootstrap_seed", cfg.get("seed", defaults.seed)),
            two_stage=cfg.get("two_stage", True),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"invalid plan: {exc}") from None
    studies = cfg.get("studies", ["mse", "mise", "bootstrap"])
    bad = set(studies) - {"mse", "mise", "bootstrap"}
    if bad:
        raise ParseError(f"unknown studies {sorted(bad)}")
    return plan, boot, studies


def cmd_benchmark(plan_path, out_dir, workers=None) -> dict:
    """Run the Monte Carlo studies of a plan file and write the result tables."""
    cfg = load_flat_config(plan_path, PLAN_KEYS)
    plan, boot, studies = plan_from_config(cfg)
    plan = replace(plan, workers=resolve_workers(workers))
    out_dir = Path(out_dir)
    start = time.perf_counter()
    files = []
    mse_rep = None
    if "mse" in studies or "bootstrap" in studies:
        mse_rep = mc_incidence_mse(plan)
        rows = [[r[1], r[2], r[3], int(r[0]), int(r[4]), int(r[5])] for r in mse_rep.mse]
        write_csv(out_dir / "mse.csv", ["x", "h", "mse", "n", "m", "failed"], rows)
        files.append("mse.csv")
    if "mise" in studies:
        rep = mc_latency_mise(plan)
        rows = [[r[1], r[2], r[3], int(r[0]), int(r[4]), int(r[5])] for r in rep.mise]
        write_csv(out_dir / "mise.csv", ["x", "b", "mise", "n", "m", "failed"], rows)
        files.append("mise.csv")
    if "bootstrap" in studies:
        rep = mc_bootstrap_bandwidth_study(plan, boot, mse_rep)
        header = ["x", "n", "q25", "median", "q75", "mse_q25", "mse_median", "mse_q75",
                  "h_mse", "mse_oracle", "boundary_hits"]
        rows = [[r[1], int(r[0]), *r[2:10], int(r[10])] for r in rep.bootstrap]
        write_csv(out_dir / "bootstrap.csv", header, rows)
        files.append("bootstrap.csv")
    plan_echo = asdict(plan)
    plan_echo.pop("workers")
    manifest = dict(
        command="benchmark", plan=plan_echo, bootstrap=asdict(boot), studies=studies,
        seed=plan.seed, seed_scheme_version=SEED_SCHEME_VERSION, files=files,
        versions=dict(npcure=__version__, numpy=np.__version__, scipy=scipy.__version__,
                      python=platform.python_version()),
        wall_time_s=round(time.perf_counter() - start, 3),
    )
    write_json(out_dir / "manifest.json", manifest)
    return manifest


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="npcure", description="Nonparametric mixture cure model estimation.")
    p.add_argument("--workers", type=int, default=None, help="worker processes (default $NPCURE_WORKERS or 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate a sample from a benchmark model")
    s.add_argument("--model", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    f = sub.add_parser("fit", help="estimate cure probability and latency on a covariate grid")
    f.add_argument("data")
    f.add_argument("--config", help="flat JSON file with default values for the options below")
    bw = f.add_mutually_exclusive_group()
    bw.add_argument("--h", type=float, help="fixed incidence bandwidth")
    bw.add_argument("--select", action="store_true", default=None, help="bootstrap bandwidth per grid point")
    f.add_argument("--b", type=float, help="latency bandwidth; writes a latency table")
    f.add_argument("--x-grid", dest="x_grid", help="lin:lo:hi:num, log:lo:hi:num or comma list")
    f.add_argument("--grid-size", dest="grid_size", type=int, help="m for the default grid x_0..x_m over the data range")
    f.add_argument("--t-grid", dest="t_grid", help="latency evaluation times (default: observed times)")
    f.add_argument("--group")
    f.add_argument("--pilot", choices=("global", "local"))
    f.add_argument("--k", type=int, help="neighbour rank of the local pilot (default round(n/4))")
    f.add_argument("--smooth", action="store_true", default=None)
    f.add_argument("--seed", type=int)
    f.add_argument("--resamples1", type=int)
    f.add_argument("--resamples2", type=int)
    f.add_argument("--grid1", type=int)
    f.add_argument("--grid2", type=int)
    f.add_argument("--range", dest="search_range", help="first search range 'lo,hi' (default 0.2, covariate range)")
    stages = f.add_mutually_exclusive_group()
    stages.add_argument("--one-stage", dest="one_stage", action="store_true", default=None)
    stages.add_argument("--two-stage", dest="one_stage", action="store_false")
    f.add_argument("--out", required=True)
    f.add_argument("--latency-out", dest="latency_out")

    d = sub.add_parser("diagnose", help="censoring summary and identifiability check")
    d.add_argument("data")
    d.add_argument("--group")
    d.add_argument("--out")

    b = sub.add_parser("benchmark", help="run a Monte Carlo plan")
    b.add_argument("plan")
    b.add_argument("--out-dir", dest="out_dir", required=True)
    return p


def _run(args) -> int:
    if args.command == "simulate":
        cmd_simulate(args.model, args.n, args.seed, args.out)
    elif args.command == "fit":
        opts = load_flat_config(args.config, FIT_KEYS) if args.config else {}
        for key in FIT_KEYS:
            v = getattr(args, key, None)
            if v is not None:
                opts[key] = v
        if "h" in opts and opts.get("select"):
            raise UsageError("give either h or select, not both")
        opts.setdefault("select", False)
        out = Path(args.out)
        cmd_fit(args.data, out, latency_out=args.latency_out, workers=args.workers, **opts)
        effective = {
            k: v.default for k, v in inspect.signature(cmd_fit).parameters.items()
            if k in FIT_KEYS and v.default is not inspect.Parameter.empty
        }
        effective.update(opts)
        digest = hashlib.sha256(Path(args.data).read_bytes()).hexdigest()
        write_json(out.with_suffix(".json"), dict(command="fit", data=str(args.data), data_sha256=digest,
                                                  config=effective, seed_scheme_version=SEED_SCHEME_VERSION,
                                                  version=__version__))
    elif args.command == "diagnose":
        header, rows = cmd_diagnose(args.data, args.group, args.out)
        if args.out is None:
            w = csv.writer(sys.stdout, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([fmt(v) if not isinstance(v, str) else v for v in r])
    elif args.command == "benchmark":
        cmd_benchmark(args.plan, args.out_dir, args.workers)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="npcure: %(message)s")
    try:
        return _run(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"npcure: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"npcure: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NpcureError, ArithmeticError, FloatingPointError) as exc:
        print(f"npcure: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
