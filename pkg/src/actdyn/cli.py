"""Command-line pipeline: ingest, analyze, estimate, simulate, metrics, synth.

Every command is file-in/file-out and deterministic given its inputs and
seed; a JSON run manifest (input/output digests plus the full effective
configuration) can be written alongside any result for reproducibility.
Exit codes: 0 success, 1 input error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .dynamics import DynamicsParams, classify_stability, euler_integrate
from .errors import InputError, NumericalError
from .estimate import (
    EstimationConfig,
    ObjectiveKind,
    ObjectiveSpec,
    align_series_to_network,
    predict_weeks,
    read_ratio_series_csv,
    sliding_window_fit,
)
from .graph import (
    build_qa_network,
    build_wiki_network,
    read_edge_list,
    read_events_csv,
    write_edge_list,
)
from .metrics import momentum, normalized_ratio_sd, rmse_per_user_week
from .preprocess import read_activity_csv, write_activity_csv
from .spectral import largest_eigenvalue
from .synth import ScenarioKind, ScenarioSpec, karate_club, random_initial_activity, scenario_series

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2

CONFIG_KEYS = {
    "seed": int,
    "dtau": float,
    "tau_per_step": float,
    "T_weeks": int,
    "eta": float,
    "eps": float,
    "max_iter": int,
    "objective": str,
    "gamma": float,
}


def _read_config_file(path: str) -> dict:
    """Flat key = value file; '#' starts a comment."""
    values: dict = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise InputError(
                f"{path}:{lineno}: unknown key {key!r} "
                f"(known: {', '.join(sorted(CONFIG_KEYS))})"
            )
        try:
            values[key] = CONFIG_KEYS[key](raw)
        except ValueError:
            raise InputError(f"{path}:{lineno}: bad value for {key}: {raw!r}") from None
    return values


def _effective_settings(args) -> dict:
    """Config-file values overridden by explicitly passed flags."""
    settings = {
        "seed": 0,
        "dtau": 0.01,
        "tau_per_step": 1.0,
        "T_weeks": 4,
        "eta": 1e-4,
        "eps": 1e-12,
        "max_iter": 20_000,
        "objective": "aggregate",
        "gamma": 0.0,
    }
    if getattr(args, "config", None):
        settings.update(_read_config_file(args.config))
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            settings[key] = flag
    return settings


def _estimation_config(settings: dict) -> EstimationConfig:
    return EstimationConfig(
        T_weeks=settings["T_weeks"],
        learning_rate_eta=settings["eta"],
        convergence_eps=settings["eps"],
        max_iterations=settings["max_iter"],
        dtau=settings["dtau"],
        tau_per_step=settings["tau_per_step"],
    )


def _objective_spec(settings: dict) -> ObjectiveSpec:
    kind = {
        "aggregate": ObjectiveKind.AGGREGATE_SUM,
        "peruser": ObjectiveKind.PER_USER,
    }.get(settings["objective"])
    if kind is None:
        raise InputError(
            f"objective must be aggregate or peruser, got {settings['objective']!r}"
        )
    return ObjectiveSpec(kind=kind, regularization_gamma=settings["gamma"])


def _sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def _write_manifest(
    path: str | Path,
    command: str,
    settings: dict,
    inputs: list[str | Path],
    outputs: list[str | Path],
    started: float,
) -> None:
    manifest = {
        "tool": "actdyn",
        "version": __version__,
        "command": command,
        "settings": settings,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
        "wall_clock_seconds": round(time.monotonic() - started, 3),
        "finished_utc": datetime.now(timezone.utc).isoformat(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_json(path: str | None, payload: dict) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- commands -----------------------------------------------------------------


def cmd_ingest(args) -> int:
    started = time.monotonic()
    events = read_events_csv(args.events)
    builder = build_qa_network if args.mode == "qa" else build_wiki_network
    net = builder(events)
    out = Path(args.out)
    write_edge_list(net, out)
    result = largest_eigenvalue(net)
    summary = {
        "n": net.n,
        "m": net.m,
        "isolated_node_count": net.isolated_node_count,
        "kappa1": result.kappa1,
    }
    summary_path = out.with_suffix(out.suffix + ".summary.json")
    _write_json(str(summary_path), summary)
    print(f"ingested {len(events)} events -> {net}", file=sys.stderr)
    if args.manifest:
        _write_manifest(
            args.manifest, "ingest", {"mode": args.mode}, [args.events],
            [out, summary_path], started,
        )
    return EXIT_OK


def cmd_analyze(args) -> int:
    net = read_edge_list(args.network)
    result = largest_eigenvalue(net)
    _write_json(
        args.out,
        {
            "n": net.n,
            "m": net.m,
            "isolated_node_count": net.isolated_node_count,
            "kappa1": result.kappa1,
            "power_iterations": result.iterations,
            "residual": result.residual,
        },
    )
    return EXIT_OK


def cmd_estimate(args) -> int:
    started = time.monotonic()
    settings = _effective_settings(args)
    net = read_edge_list(args.network)
    series = read_activity_csv(args.activity)
    cfg = _estimation_config(settings)
    spec = _objective_spec(settings)
    ratios = sliding_window_fit(series, net, cfg, spec)
    ratios.write_csv(args.out)
    failed = [e.target_week.isoformat() for e in ratios.entries if not e.ok]
    if failed:
        print(f"warning: {len(failed)} window(s) failed: {failed}", file=sys.stderr)
    print(
        f"fitted {len(ratios.ok_entries())}/{len(ratios)} ratios -> {args.out}",
        file=sys.stderr,
    )
    manifest = args.manifest or str(Path(args.out).with_suffix(".manifest.json"))
    _write_manifest(
        manifest, "estimate", settings, [args.network, args.activity],
        [args.out], started,
    )
    return EXIT_OK


def _load_initial_state(args, net, settings) -> np.ndarray:
    if args.init == "random":
        return random_initial_activity(
            net, args.init_lo, args.init_hi, seed=settings["seed"]
        )
    values = np.zeros(net.n)
    with open(args.init, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["user", "value"]:
            raise InputError(f"{args.init}: expected header user,value")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise InputError(f"{args.init}:{lineno}: expected 2 fields")
            user, raw = row[0].strip(), row[1].strip()
            try:
                values[net.index_of(user)] = float(raw)
            except ValueError:
                raise InputError(f"{args.init}:{lineno}: bad value {raw!r}") from None
    return values


def cmd_simulate(args) -> int:
    started = time.monotonic()
    settings = _effective_settings(args)
    net = read_edge_list(args.network)
    kappa1 = largest_eigenvalue(net).kappa1
    out = Path(args.out)
    inputs: list = [args.network]

    if args.ratios:
        if not args.activity:
            raise InputError("--ratios requires --activity to seed each week")
        ratio_series = read_ratio_series_csv(args.ratios)
        series = read_activity_csv(args.activity)
        cfg = _estimation_config(settings)
        trace = predict_weeks(series, net, ratio_series, cfg, chain=args.chain)
        inputs += [args.ratios, args.activity]
        ratio_values = ratio_series.ratios()
        mean_ratio = float(ratio_values.mean()) if ratio_values.size else float("nan")
        aligned = align_series_to_network(series, net)
        week_index = {w: i for i, w in enumerate(aligned.weeks)}
        target_idx = [week_index[w] for w in ratio_series.target_weeks]
        empirical_targets = aligned.window(min(target_idx), max(target_idx) + 1)
        summary = {
            "mode": "predict",
            "kappa1": kappa1,
            "mean_ratio": mean_ratio,
            "stable": bool(classify_stability(kappa1, mean_ratio).stable)
            if np.isfinite(mean_ratio)
            else None,
            "diverged": trace.diverged,
            "negativity_events": trace.negativity_events,
            "weeks": len(trace.states),
            "rmse_per_user_week": rmse_per_user_week(empirical_targets, trace)
            if empirical_targets.n_weeks == len(trace.states)
            else None,
        }
    else:
        if args.weeks < 1:
            raise InputError("--weeks must be >= 1")
        params = DynamicsParams(
            ratio=args.ratio, dtau=settings["dtau"],
            tau_per_step=settings["tau_per_step"],
        )
        x0 = _load_initial_state(args, net, settings)
        trace = euler_integrate(net, x0, params, n_steps=args.weeks)
        classification = classify_stability(kappa1, args.ratio)
        summary = {
            "mode": "free-run",
            "ratio": args.ratio,
            "kappa1": kappa1,
            "stable": classification.stable,
            "marginal": classification.marginal,
            "diverged": trace.diverged,
            "negativity_events": trace.negativity_events,
            "weeks": args.weeks,
            "final_aggregate": float(trace.aggregate[-1]),
        }

    trace.write_aggregate_csv(out)
    outputs = [out]
    if args.per_user:
        trace.write_per_user_csv(args.per_user, net.users)
        outputs.append(args.per_user)
    summary_path = args.summary or str(out.with_suffix(out.suffix + ".summary.json"))
    _write_json(summary_path, summary)
    outputs.append(summary_path)
    if args.manifest:
        _write_manifest(args.manifest, "simulate", settings, inputs, outputs, started)
    return EXIT_NUMERICAL if trace.diverged else EXIT_OK


def cmd_metrics(args) -> int:
    ratio_series = read_ratio_series_csv(args.ratios)
    series = read_activity_csv(args.activity)
    values = ratio_series.ratios()
    if values.size < 2:
        raise InputError("need at least 2 successful ratios")
    rho = normalized_ratio_sd(values, args.kappa1)
    if rho == 0.0:
        raise InputError("zero variance: mass undefined")
    weekly = series.aggregate()
    report = momentum(rho, weekly)
    if args.json:
        report.to_json(args.json)
    print(report.render_table(label=args.label))
    return EXIT_OK


def cmd_synth(args) -> int:
    started = time.monotonic()
    net = karate_club()
    spec = ScenarioSpec(
        kind=ScenarioKind(args.scenario),
        n_weeks=args.weeks,
        seed=args.seed if args.seed is not None else 0,
        base_level=args.base,
        step=args.step,
    )
    series = scenario_series(spec, net)
    prefix = Path(args.out)
    activity_path = prefix.with_suffix(".activity.csv")
    network_path = prefix.with_suffix(".edges")
    write_activity_csv(series, activity_path)
    write_edge_list(net, network_path)
    print(
        f"wrote {args.scenario} scenario ({spec.n_weeks} weeks) -> "
        f"{activity_path}, {network_path}",
        file=sys.stderr,
    )
    if args.manifest:
        _write_manifest(
            args.manifest, "synth",
            {"scenario": args.scenario, "weeks": args.weeks, "seed": spec.seed,
             "base": args.base, "step": args.step},
            [], [activity_path, network_path], started,
        )
    return EXIT_OK


# -- parser ---------------------------------------------------------------------


def _add_shared_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--dtau", type=float, default=None)
    parser.add_argument("--tau-per-step", dest="tau_per_step", type=float, default=None)
    parser.add_argument("--T", dest="T_weeks", type=int, default=None)
    parser.add_argument("--eta", type=float, default=None)
    parser.add_argument("--eps", type=float, default=None)
    parser.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    parser.add_argument(
        "--objective", choices=["aggregate", "peruser"], default=None
    )
    parser.add_argument("--gamma", type=float, default=None)
    parser.add_argument("--manifest", help="write a JSON run manifest here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="actdyn",
        description="Model, simulate, and estimate activity dynamics on "
        "collaboration networks.",
    )
    parser.add_argument("--version", action="version", version=f"actdyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build a collaboration network from an event log")
    p.add_argument("events", help="CSV: timestamp,user,kind,artifact,parent")
    p.add_argument("--mode", choices=["qa", "wiki"], required=True)
    p.add_argument("--out", required=True, help="edge-list output path")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("analyze", help="report n, m, and the spectral radius")
    p.add_argument("network", help="edge-list file")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("estimate", help="fit sliding-window ratios to activity")
    p.add_argument("network", help="edge-list file")
    p.add_argument("activity", help="CSV: user,week_start,value")
    p.add_argument("--out", default="ratios.csv")
    _add_shared_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="integrate the dynamics on a network")
    p.add_argument("network", help="edge-list file")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--ratio", type=float, help="single ratio, free-run mode")
    group.add_argument("--ratios", help="ratios CSV, per-week prediction mode")
    p.add_argument("--activity", help="empirical activity CSV (prediction mode)")
    p.add_argument("--chain", action="store_true",
                   help="seed each week from the previous prediction")
    p.add_argument("--init", default="random", help="'random' or CSV user,value")
    p.add_argument("--init-lo", type=float, default=0.0)
    p.add_argument("--init-hi", type=float, default=0.1)
    p.add_argument("--weeks", type=int, default=52)
    p.add_argument("--out", default="trace.csv")
    p.add_argument("--per-user", dest="per_user", help="wide per-user CSV path")
    p.add_argument("--summary", help="summary JSON path")
    _add_shared_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="system mass and activity momentum")
    p.add_argument("ratios", help="ratios CSV from estimate")
    p.add_argument("activity", help="raw weekly activity CSV")
    p.add_argument("--kappa1", type=float, required=True)
    p.add_argument("--json", help="write the report JSON here")
    p.add_argument("--label", default="dataset")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("synth", help="generate synthetic scenario fixtures")
    p.add_argument(
        "--scenario", choices=[k.value for k in ScenarioKind], required=True
    )
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--weeks", type=int, default=13)
    p.add_argument("--base", type=float, default=10.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
