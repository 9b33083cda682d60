"""Command-line front end: ``mean``, ``diagnose`` and ``experiment``.

Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or
configuration error.  CSV numbers are written with 17 significant digits;
CSV bodies depend only on the config bytes and the seed.
"""

import argparse
import csv
import datetime as _dt
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import (FamilyMoments, ReportThresholds, local_lindeberg,
                          clt_condition_report)
from .errors import ConfigError, FrechetCLTError, InvalidPoint, UnsupportedManifold
from .experiments import config_from_dict, config_hash, run_experiment
from .families import family_from_config
from .frechet import Sample, SolverOptions, frechet_mean
from .manifolds import make_manifold

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def fmt(x):
    """17-significant-digit text for CSV cells."""
    if x is None:
        return "nan"
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def dump_json(obj, path):
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    Path(path).write_text(buf.getvalue())


def load_config(path):
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError(f"config {path} must be a JSON object")
    return cfg


def read_points(path, manifold):
    """Parse a points file: one point per line, whitespace-separated coordinates.

    Blank lines and lines starting with ``#`` are skipped.  Complex projective
    points are written as real parts followed by imaginary parts.
    """
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read points file {path}: {exc}") from exc
    width = manifold.to_real(manifold.base_point()).shape[-1]
    pts = []
    for no, line in enumerate(lines, start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            vals = [float(t) for t in s.split()]
        except ValueError:
            raise UsageError(f"{path}: line {no}: non-numeric coordinate") from None
        if len(vals) != width or not all(math.isfinite(v) for v in vals):
            raise UsageError(f"{path}: line {no}: expected {width} finite coordinates, got {len(vals)}")
        try:
            pts.append(manifold.check_point(manifold.from_real(np.array(vals)), tol=1e-8))
        except InvalidPoint as exc:
            raise UsageError(f"{path}: line {no}: {exc}") from None
    if not pts:
        raise UsageError(f"{path}: no points")
    return np.stack(pts)


def _manifest(command, args, cfg, outputs, started):
    return {
        "command": command,
        "config_path": str(args.config),
        "config_hash": config_hash(cfg),
        "root_seed": args.seed if args.seed is not None else cfg.get("seed", 0),
        "started": started,
        "finished": _now(),
        "library_version": __version__,
        "outputs": sorted(str(p) for p in outputs),
    }


def _now():
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


# commands ---------------------------------------------------------------------

def cmd_mean(args, cfg, out):
    try:
        mcfg = cfg["manifold"]
        m = make_manifold(mcfg["family"], mcfg["dim"], mcfg.get("kappa"))
        pfile = Path(cfg["points_file"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"mean config needs manifold and points_file: {exc}") from exc
    if not pfile.is_absolute():
        pfile = Path(args.config).parent / pfile
    pts = read_points(pfile, m)
    sol = cfg.get("solver", {})
    center = sol.get("ball_center")
    opts = SolverOptions(
        max_iters=int(sol.get("max_iters", 500)),
        grad_tol=float(sol.get("grad_tol", 1e-9)),
        step_shrink=float(sol.get("step_shrink", 0.5)),
        ball_center=None if center is None else m.from_real(np.asarray(center, float)),
        ball_radius=sol.get("ball_radius"),
    )
    x0 = cfg.get("x0")
    x0 = None if x0 is None else m.from_real(np.asarray(x0, float))
    rep = frechet_mean(Sample(m, pts), x0, opts, sol.get("method", "gd"))
    path = out / "mean.json"
    dump_json(rep.to_dict(m), path)
    write_csv(out / "mean.csv", ["coordinate", "value"],
              [(i, v) for i, v in enumerate(m.to_real(rep.estimate))])
    return [path, out / "mean.csv"]


def cmd_diagnose(args, cfg, out):
    fam = family_from_config(cfg.get("family") or _missing("family"))
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    mom = FamilyMoments(fam, int(cfg.get("oracle_draws", 50_000)), seed)
    sched = [int(n) for n in cfg.get("n_schedule", (16, 64, 256, 1024))]
    eps = [float(e) for e in cfg.get("epsilon_list", (0.1, 0.01))]
    rho = [float(r) for r in cfg.get("rho_list", (0.05, 0.1))]
    th = ReportThresholds(**cfg.get("thresholds", {}))
    o = fam.center
    report = clt_condition_report(mom, o, fam.frame, rho, sched, eps, th)
    dump_json(report.to_dict(), out / "report.json")
    header = ["n", "phi_n", "phi_se", "C1"]
    for e in eps:
        header += [f"lindeberg@{e!r}", f"lindeberg@{e!r}_se", f"lindeberg_halved@{e!r}",
                   f"lindeberg_halved@{e!r}_se"]
    rows = []
    for row in report.rows:
        n = row["n"]
        line = [n, row["phi_n"], row["phi_se"], row["C1"]]
        for e in eps:
            if row.get("degenerate"):
                line += [float("nan")] * 4
            else:
                line += list(local_lindeberg(mom, o, e, n, halved=False, return_se=True))
                line += list(local_lindeberg(mom, o, e, n, halved=True, return_se=True))
        rows.append(line)
    write_csv(out / "lindeberg.csv", header, rows)
    return [out / "report.json", out / "lindeberg.csv"]


EXPERIMENT_COLUMNS = ["n", "w1", "w1_se", "baseline", "baseline_se", "mean_error", "ratio"]


def cmd_experiment(args, cfg, out):
    if args.mode is not None:
        cfg = {**cfg, "mode": args.mode}
    ecfg = config_from_dict(cfg, seed=args.seed, threads=args.threads)
    res = run_experiment(ecfg)
    lind = [f"lindeberg@{e!r}" for e in ecfg.epsilon_list]
    extra = ["mean_error_se", "ratio_se", "excess_se"]
    header = EXPERIMENT_COLUMNS + lind + ["failures"] + extra
    rows = [[r.get(k, float("nan")) for k in header] for r in res.rows]
    write_csv(out / "results.csv", header, rows)
    dump_json({"mode": res.mode, "rows": res.rows, "provenance": res.provenance, "report": res.report},
              out / "result.json")
    return [out / "results.csv", out / "result.json"]


def _missing(key):
    raise ConfigError(f"config is missing {key!r}")


COMMANDS = {"mean": cmd_mean, "diagnose": cmd_diagnose, "experiment": cmd_experiment}


def build_parser():
    p = argparse.ArgumentParser(prog="frechet-clt", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path)
        s.add_argument("--seed", type=int, default=None)
        s.add_argument("--out", type=Path, default=Path("."))
        s.add_argument("--threads", type=int, default=1, help="worker threads (0 = one per CPU)")
        if name == "experiment":
            s.add_argument("--mode", default=None, help="wlln, euclidean or clt (overrides the config)")
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        parser.error("--seed must be an unsigned 64-bit integer")
    if args.threads < 0:
        parser.error("--threads must be >= 0")
    started = _now()
    try:
        cfg = load_config(args.config)
        args.out.mkdir(parents=True, exist_ok=True)
        outputs = COMMANDS[args.command](args, cfg, args.out)
        dump_json(_manifest(args.command, args, cfg, outputs, started), args.out / "manifest.json")
    except (UsageError, ConfigError, UnsupportedManifold) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FrechetCLTError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
