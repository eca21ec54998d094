"""Command-line entry point.

Exit codes: 0 success, 1 input or configuration error, 2 run ended early on
a guard (stats for the completed part are still written).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from userfollow import __version__
from userfollow.config import build_scenario, config_hash, load_config_file, resolve, resolve_config_path
from userfollow.controller import solve_lqr
from userfollow.errors import DidNotConverge, EmptyWindow, UserFollowError
from userfollow.plant import ActuatorParams
from userfollow.sim.engine import run_simulation
from userfollow.sim.stats import compute_stats, format_comparison, format_stats, reductions
from userfollow.sysid import fit_actuator, load_sysid_csv, simulate_response, write_sysid_csv

EXIT_OK, EXIT_INPUT, EXIT_GUARD = 0, 1, 2
TOOL = "userfollow"
CONTROLLERS = ("pid", "proposed")


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; argparse's default of 2 would collide
    # with the guard exit code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_INPUT


def _dump_json(obj, path: Path):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_manifest(out: Path, command: str, cfg: dict, file_sha, outputs) -> Path:
    manifest = {
        "tool": TOOL,
        "version": __version__,
        "command": command,
        "config": cfg,
        "config_hash": config_hash(cfg),
        "config_file_sha256": file_sha,
        "outputs": sorted(outputs),
    }
    path = out / "manifest.json"
    _dump_json(manifest, path)
    return path


def _resolved_config(args, extra_overrides=()):
    """Merge defaults, the config file (or manifest) and overrides."""
    if args.config and args.manifest:
        raise UserFollowError("--config and --manifest are mutually exclusive")
    source = args.manifest or args.config
    file_cfg, sha = {}, None
    if source:
        path = Path(source) if args.manifest else resolve_config_path(source)
        if not path.exists():
            raise UserFollowError(f"file not found: {path}")
        file_cfg, sha = load_config_file(path)
    return resolve(file_cfg, list(extra_overrides) + list(args.set or ())), sha


def _stats_record(log, cfg):
    try:
        stats = compute_stats(log, cfg.window_start)
    except EmptyWindow as exc:
        return None, str(exc)
    return stats, None


# -- run --------------------------------------------------------------------

def cmd_run(args) -> int:
    pre = []
    if args.scenario:
        pre += ["trajectory.source=generator", f"trajectory.name={args.scenario}"]
    if args.trajectory:
        pre += ["trajectory.source=csv", f"trajectory.path={args.trajectory}"]
    if args.controller:
        pre.append(f"controller.kind={args.controller}")
    try:
        raw, sha = _resolved_config(args, pre)
        cfg = build_scenario(raw)
        log = run_simulation(cfg)
    except UserFollowError as exc:
        return _fail(str(exc))
    except OSError as exc:
        return _fail(str(exc))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = [log.to_csv(out / "simlog.csv").name]
    stats, note = _stats_record(log, cfg)
    report = {
        "scenario": log.scenario, "controller": log.controller, "completed": log.completed,
        "failure": log.failure, "failure_time": log.failure_time, "units": "cm",
        "stats": None if stats is None else stats.as_dict(), "note": note,
    }
    text = [f"scenario = {log.scenario}", f"controller = {log.controller}",
            f"completed = {log.completed}"]
    if log.failure:
        text += [f"failure = {log.failure}", f"failure_time = {log.failure_time:.6g}"]
    body = "\n".join(text) + "\n" + (format_stats(stats) if stats else f"stats = unavailable ({note})\n")
    (out / "stats.txt").write_text(body, encoding="utf-8")
    _dump_json(report, out / "stats.json")
    outputs += ["stats.txt", "stats.json"]

    if not args.no_plots and len(log):
        from userfollow import plotting

        title = f"{log.scenario} / {log.controller}"
        ws = stats.window_start if stats else None
        outputs.append(plotting.plot_tracking_errors({log.controller: log}, out / "errors.png", title, ws).name)
        outputs.append(plotting.plot_paths({log.controller: log}, out / "paths.png", title).name)
        if log.controller == "proposed":
            outputs.append(plotting.plot_disturbance(log, out / "disturbance.png", title).name)
    _write_manifest(out, "run", raw, sha, outputs + ["manifest.json"])
    sys.stdout.write(body)
    if log.failure:
        print(f"run stopped early: {log.failure}", file=sys.stderr)
        return EXIT_GUARD
    return EXIT_OK


# -- compare ----------------------------------------------------------------

def _compare_job(raw: dict, label: str, overrides: tuple, controller: str):
    cfg = build_scenario(resolve(raw, list(overrides) + [f"controller.kind={controller}"]))
    return label, controller, run_simulation(cfg), cfg.window_start


def _compare_cases(raw: dict):
    """(label, overrides) per scenario; a CSV trajectory is a single case."""
    if raw["trajectory"]["source"] == "csv":
        return [(Path(str(raw["trajectory"]["path"])).stem, ())]
    names = raw["compare"]["scenarios"]
    if isinstance(names, str):
        names = [names]
    if not names:
        raise UserFollowError("compare.scenarios must name at least one scenario")
    return [(n, (f"trajectory.name={n}",)) for n in names]


def cmd_compare(args) -> int:
    pre = []
    if args.scenarios:
        pre.append(f"compare.scenarios=[{','.join(args.scenarios)}]")
    if args.jobs is not None:
        pre.append(f"compare.jobs={args.jobs}")
    try:
        raw, sha = _resolved_config(args, pre)
        cases = _compare_cases(raw)
        # validate every case before spending time on simulations
        for _, ov in cases:
            for c in CONTROLLERS:
                build_scenario(resolve(raw, list(ov) + [f"controller.kind={c}"]))
        jobs = raw["compare"]["jobs"]
        if isinstance(jobs, bool) or not isinstance(jobs, int) or jobs < 1:
            raise UserFollowError(f"compare.jobs must be a positive integer, got {jobs!r}")
        work = [(raw, label, ov, c) for label, ov in cases for c in CONTROLLERS]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_compare_job, *zip(*work)))
        else:
            results = [_compare_job(*w) for w in work]
    except (UserFollowError, OSError) as exc:
        return _fail(str(exc))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    logs = {}
    for label, controller, log, ws in results:
        logs.setdefault(label, {})[controller] = (log, ws)

    outputs, text, summary = [], [], {}
    guard_hit = False
    for label, _ in cases:
        entry = {}
        stats = {}
        for c in CONTROLLERS:
            log, ws = logs[label][c]
            outputs.append(log.to_csv(out / f"{label}_{c}.csv").name)
            try:
                stats[c] = compute_stats(log, ws)
            except EmptyWindow:
                stats[c] = None
            entry[c] = {"completed": log.completed, "failure": log.failure,
                        "failure_time": log.failure_time,
                        "stats": None if stats[c] is None else stats[c].as_dict()}
            if log.failure:
                guard_hit = True
        entry["reduction_percent"] = (reductions(stats["pid"], stats["proposed"])
                                      if stats["pid"] and stats["proposed"] else None)
        summary[label] = entry
        block = format_comparison(label, stats["pid"], stats["proposed"])
        for c in CONTROLLERS:
            if entry[c]["failure"]:
                block += f"  {c} stopped early at t={entry[c]['failure_time']:.3f} s: {entry[c]['failure']}\n"
        text.append(block)
        if not args.no_plots:
            from userfollow import plotting

            pair = {c: logs[label][c][0] for c in CONTROLLERS if len(logs[label][c][0])}
            if pair:
                ws = stats["proposed"].window_start if stats["proposed"] else None
                outputs.append(plotting.plot_tracking_errors(pair, out / f"{label}_errors.png", label, ws).name)
                outputs.append(plotting.plot_paths(pair, out / f"{label}_paths.png", label).name)

    report = "\n".join(text)
    (out / "compare.txt").write_text(report, encoding="utf-8")
    _dump_json({"units": "cm", "scenarios": summary}, out / "compare.json")
    outputs += ["compare.txt", "compare.json", "manifest.json"]
    _write_manifest(out, "compare", raw, sha, outputs)
    sys.stdout.write(report)
    return EXIT_GUARD if guard_hit else EXIT_OK


# -- gains ------------------------------------------------------------------

def _parse_weight(text: str, name: str) -> np.ndarray:
    """Scalar (times I), two diagonal entries, or a full 2x2 nested list."""
    try:
        val = yaml.safe_load(text)
        arr = np.asarray(val, dtype=float)
    except (yaml.YAMLError, TypeError, ValueError):
        raise UserFollowError(f"{name}: cannot parse {text!r}") from None
    if arr.ndim == 0:
        return float(arr) * np.eye(2)
    if arr.shape == (2,):
        return np.diag(arr)
    if arr.shape == (2, 2):
        return arr
    raise UserFollowError(f"{name}: expected scalar, [a, b] or [[a, b], [c, d]], got shape {arr.shape}")


def cmd_gains(args) -> int:
    try:
        Q = _parse_weight(args.Q, "Q")
        R = _parse_weight(args.R, "R")
        g = solve_lqr(Q, R)
    except UserFollowError as exc:
        return _fail(str(exc))
    if args.json:
        print(json.dumps({"K_e": g.K_e.tolist(), "P": g.P.tolist(), "residual": g.residual,
                          "k_x": g.k_x, "k_y": g.k_y}, indent=2))
        return EXIT_OK

    def rows(M):
        return "\n".join("  [" + ", ".join(f"{a:12.6f}" for a in r) + "]" for r in M)

    print(f"K_e =\n{rows(g.K_e)}")
    print(f"P =\n{rows(g.P)}")
    print(f"k_x = {g.k_x:.6f}")
    print(f"k_y = {g.k_y:.6f}")
    print(f"residual = {g.residual:.3e}")
    return EXIT_OK


# -- sysid ------------------------------------------------------------------

def _fit_report(res) -> dict:
    return {
        "converged": res.converged,
        "rmse": res.rmse,
        "iterations": res.iterations,
        "wheels": {side: {"gain_K": w.gain, "time_constant_tau": w.tau, "rmse": w.rmse,
                          "iterations": w.iterations, "converged": w.converged,
                          "gradient_norm": w.gradient_norm}
                   for side, w in zip(("left", "right"), res.wheels)},
    }


def cmd_sysid(args) -> int:
    try:
        log = load_sysid_csv(args.log)
        guess = ActuatorParams((args.gain, args.gain), (args.tau, args.tau), args.wheel_track)
    except (UserFollowError, OSError) as exc:
        return _fail(str(exc))
    except ValueError as exc:
        return _fail(f"initial guess: {exc}")
    status = EXIT_OK
    try:
        res = fit_actuator(log, guess, strict=True, max_iter=args.max_iter)
    except DidNotConverge as exc:
        res = exc.result
        status = EXIT_INPUT
        print(f"error: {exc}", file=sys.stderr)
    except UserFollowError as exc:
        return _fail(str(exc))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    predicted = simulate_response(res.params, log)
    report = _fit_report(res)
    lines = [f"converged = {res.converged}", f"rmse = {res.rmse:.6g}", f"iterations = {res.iterations}"]
    for side, w in report["wheels"].items():
        lines += [f"{side}.{k} = {v:.6g}" if isinstance(v, float) else f"{side}.{k} = {v}"
                  for k, v in w.items()]
    text = "\n".join(lines) + "\n"
    outputs = [write_sysid_csv(log, out / "sysid_predicted.csv", predicted).name, "sysid.txt", "sysid.json"]
    (out / "sysid.txt").write_text(text, encoding="utf-8")
    _dump_json(report, out / "sysid.json")
    if not args.no_plots:
        from userfollow import plotting

        outputs.append(plotting.plot_sysid(log, predicted, out / "sysid.png", Path(args.log).name).name)
    inputs = {"log": str(args.log), "initial_gain": args.gain, "initial_tau": args.tau,
              "wheel_track": args.wheel_track, "max_iter": args.max_iter}
    _write_manifest(out, "sysid", inputs, None, outputs + ["manifest.json"])
    sys.stdout.write(text)
    return status


# -- parser -----------------------------------------------------------------

def _common(p, out_default):
    p.add_argument("--config", help="YAML config file (path, or name under $USERFOLLOW_CONFIG_DIR)")
    p.add_argument("--manifest", help="replay the resolved config of an earlier manifest.json")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="dotted config override, repeatable (e.g. controller.x_d=0.6)")
    p.add_argument("--out", default=out_default, help=f"output directory (default: {out_default})")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog=TOOL, description="Robot user-following simulation, comparison and identification.")
    ap.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="simulate one scenario with one controller")
    _common(p, "out/run")
    p.add_argument("--scenario", choices=("in_place", "straight_accel", "slalom", "stop_go"),
                   help="synthetic human trajectory")
    p.add_argument("--trajectory", metavar="CSV", help="replay a t,x,y,theta CSV instead")
    p.add_argument("--controller", choices=CONTROLLERS, help="controller to run")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="PID versus proposed controller on each scenario")
    _common(p, "out/compare")
    p.add_argument("--scenarios", nargs="+", metavar="NAME",
                   choices=("in_place", "straight_accel", "slalom", "stop_go"),
                   help="subset of scenarios (default: all four)")
    p.add_argument("--jobs", type=int, help="parallel worker processes")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gains", help="LQR gain synthesis for the decoupled error dynamics")
    p.add_argument("--Q", default="200", help="state weight: scalar, [a, b] or [[a, b], [c, d]] (default 200)")
    p.add_argument("--R", default="1", help="input weight, same forms as --Q (default 1)")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_gains)

    p = sub.add_parser("sysid", help="fit first-order wheel models to a voltage / speed log")
    p.add_argument("log", help="CSV with header t,u_left,u_right,v_left,v_right")
    p.add_argument("--gain", type=float, default=0.12, help="initial gain guess, m/s per V")
    p.add_argument("--tau", type=float, default=0.35, help="initial time constant guess, s")
    p.add_argument("--wheel-track", type=float, default=0.55, help="wheel track carried into the result, m")
    p.add_argument("--max-iter", type=int, default=200, help="Levenberg-Marquardt iteration cap")
    p.add_argument("--out", default="out/sysid", help="output directory (default: out/sysid)")
    p.add_argument("--no-plots", action="store_true", help="skip the PNG figure")
    p.set_defaults(func=cmd_sysid)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
