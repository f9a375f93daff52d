"""Config-driven experiment runner: models + engine + limits + harness in batch.

Every run is reproducible from (config, seed): replica seeds are derived by
counter from the root seed, output CSV rows are written sorted, and every
output file embeds the config hash and the seed.  Exit status: 0 on success
(verification modes additionally require every embedded report to pass),
2 for configuration problems, 1 for runtime faults.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import jsonschema

from . import figures, stats
from .core import ConfigurationError, replica_seed
from .engine import (
    EngineConfig,
    empty_summary,
    format_index,
    merge_summaries,
    path_csv_rows,
    path_summary,
    summary_to_json,
    write_paths_csv,
)
from .models import MODEL_DEFAULTS, MODEL_NAMES, PARAM_SCHEMAS, build_model
from .parallel import map_replicas

MODES = ("simulate", "limit", "converge-sweep", "verify", "explosion-gap", "extinction")

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "model": {"enum": list(MODEL_NAMES)},
        "params": {"type": "object"},
        "mode": {"enum": list(MODES)},
        "n": {"type": "integer", "minimum": 1},
        "n_grid": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "replicas": {"type": "integer", "minimum": 1},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "max_jumps": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "times": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "k_guard": {"type": "integer", "minimum": 1},
        "n_jumps": {"type": "integer", "minimum": 1, "maximum": 5},
        "windows": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "ks_threshold": {"type": "number", "exclusiveMinimum": 0},
        "tv_threshold": {"type": "number", "exclusiveMinimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "out_dir": {"type": "string"},
    },
    "required": ["model", "mode"],
    "additionalProperties": False,
}

DEFAULTS = {
    "params": {},
    "n": 64,
    "replicas": 1000,
    "horizon": 1.0,
    "max_jumps": 10**6,
    "seed": 0,
    "k_guard": 50,
    "ks_threshold": 0.02,
    "tv_threshold": 0.02,
}


class ConfigProblem(Exception):
    pass


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigProblem(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "config"
        raise ConfigProblem(f"config schema violation at '{where}': {exc.message}") from exc
    model = raw["model"]
    try:
        jsonschema.validate(raw.get("params", {}), PARAM_SCHEMAS[model])
    except jsonschema.ValidationError as exc:
        where = ".".join(str(p) for p in exc.absolute_path) or "params"
        raise ConfigProblem(
            f"params schema violation for {model} at '{where}': {exc.message}"
        ) from exc
    cfg = dict(DEFAULTS)
    cfg.update(raw)
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _provenance(cfg: dict) -> dict:
    return {"config_hash": config_hash(cfg), "seed": cfg["seed"], "model": cfg["model"]}


def _provenance_line(cfg: dict) -> str:
    return f"model={cfg['model']} config_hash={config_hash(cfg)} seed={cfg['seed']}"


FORMAT_VERSION = 1  # version of the CSV columns and JSON keys


def _write_json(payload: dict, cfg: dict, path: Path):
    payload = dict(payload)
    payload["provenance"] = _provenance(cfg)
    payload["format_version"] = FORMAT_VERSION
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _dump_reports(reports, cfg, out: Path, fmt: str):
    payload = {"reports": [r.to_json() for r in reports], "all_passed": all(r.passed for r in reports)}
    _write_json(payload, cfg, out / "reports.json")
    if fmt == "csv":
        with open(out / "reports.csv", "w") as fh:
            fh.write(f"# {_provenance_line(cfg)}\n")
            fh.write("model,mode,name,statistic,value,threshold,passed\n")
            for r in reports:
                fh.write(
                    f"{cfg['model']},{cfg['mode']},\"{r.name}\",{r.statistic},"
                    f"{r.value:.6g},{r.threshold:.6g},{int(r.passed)}\n"
                )
    figures.save_report_bars(reports, out / "reports.png", title=f"{cfg['model']} {cfg['mode']}")


def _simulate_mode(cfg, model, out: Path, workers: int, fmt: str, limit_side: bool):
    econf = EngineConfig(horizon=cfg["horizon"], max_jumps=cfg["max_jumps"])

    def task(r, rseed):
        if limit_side:
            rec = stats.run_limit_path(model, cfg["horizon"], cfg["max_jumps"], rseed)
        else:
            rec = stats.run_path(model, cfg["n"], econf, rseed)
        return path_csv_rows(rec, r), path_summary(rec)

    results = map_replicas(task, cfg["replicas"], cfg["seed"], workers)
    rows = [row for rows_k, _ in results for row in rows_k]
    summary = empty_summary()
    for _, s in results:
        summary = merge_summaries(summary, s)

    if fmt != "json":
        with open(out / "paths.csv", "w", newline="") as fh:
            write_paths_csv(rows, fh, provenance=_provenance_line(cfg))

    # a small deterministic sample of full records for the figure
    sample = []
    for r in range(min(20, cfg["replicas"])):
        if limit_side:
            sample.append(
                stats.run_limit_path(model, cfg["horizon"], cfg["max_jumps"], stats_seed(cfg, r))
            )
        else:
            sample.append(stats.run_path(model, cfg["n"], econf, stats_seed(cfg, r)))

    payload = {
        "mode": cfg["mode"],
        "n": None if limit_side else cfg["n"],
        "summary": summary_to_json(summary),
    }
    if limit_side:
        from .limits import limit_table_json

        seen = sorted({i for rec in sample for _, i in rec.index_path}, key=format_index)
        payload["limit_spec"] = limit_table_json(model.limit, seen)
    _write_json(payload, cfg, out / "summary.json")
    figures.save_index_paths(sample, out / "index_paths.png", horizon=cfg["horizon"])
    figures.save_jump_histogram(
        summary_to_json(summary)["jump_count_histogram"], out / "jump_histogram.png"
    )

    term = summary_to_json(summary)["terminations"]
    print(f"{cfg['mode']}: {cfg['replicas']} replicas, terminations {term}")
    return 0


def stats_seed(cfg, r):
    return replica_seed(cfg["seed"], r)


def _converge_mode(cfg, model, out: Path, workers: int, fmt: str):
    n_grid = cfg.get("n_grid") or [1, 4, 16, 64]
    reports = stats.jump_time_convergence(
        model,
        n_grid,
        cfg["replicas"],
        cfg["horizon"],
        cfg["seed"],
        thresholds={n: cfg["ks_threshold"] for n in n_grid},
        workers=workers,
    )
    _dump_reports(reports, cfg, out, fmt)
    figures.save_ks_sweep(reports, out / "ks_sweep.png")
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.value:.4f} <= {r.threshold:.4f}")
    return 0 if all(r.passed for r in reports) else 1


def _verify_mode(cfg, model, out: Path, workers: int, fmt: str):
    reports = stats.jump_time_convergence(
        model,
        [cfg["n"]],
        cfg["replicas"],
        cfg["horizon"],
        cfg["seed"],
        thresholds={cfg["n"]: cfg["ks_threshold"]},
        workers=workers,
    )
    n_jumps = cfg.get("n_jumps", 1)
    windows = cfg.get("windows") or [cfg["horizon"]] * n_jumps
    reports += stats.jump_chain_convergence(
        model,
        cfg["n"],
        n_jumps,
        windows,
        cfg["replicas"],
        cfg["seed"] + 101,
        tv_threshold=cfg["tv_threshold"],
        workers=workers,
    )
    times = cfg.get("times") or [cfg["horizon"] / 2, cfg["horizon"]]
    reports += stats.fixed_time_marginal_test(
        model,
        times,
        cfg["n"],
        cfg["k_guard"],
        cfg["replicas"],
        cfg["seed"] + 202,
        tv_threshold=cfg["tv_threshold"],
        workers=workers,
    )
    _dump_reports(reports, cfg, out, fmt)
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: {r.value:.4f} <= {r.threshold:.4f}")
    return 0 if all(r.passed for r in reports) else 1


def _explosion_mode(cfg, model, out: Path, workers: int, fmt: str):
    result = stats.explosion_gap(
        model,
        cfg["horizon"],
        cfg["n"],
        cfg["max_jumps"],
        cfg["replicas"],
        cfg["seed"],
        workers=workers,
    )
    _write_json({"mode": "explosion-gap", "result": result}, cfg, out / "summary.json")
    figures.save_fraction_pair(result, out / "explosion_gap.png")
    print(
        f"explosion-gap: prelimit {result['prelimit_fraction']:.4f} "
        f"(99% CI {result['prelimit_ci99']}), limit {result['limit_fraction']:.4f} "
        f"(99% CI {result['limit_ci99']})"
    )
    return 0


def _extinction_mode(cfg, model, out: Path, workers: int, fmt: str):
    econf = EngineConfig(horizon=cfg["horizon"], max_jumps=cfg["max_jumps"], record_points=False)

    def task(_r, rseed):
        rec = stats.run_path(model, cfg["n"], econf, rseed)
        final = "cemetery" if rec.final_index is None else format_index(rec.final_index)
        return (0 if final == "0" or final == "cemetery" else rec.final_index, rec.termination)

    outcomes = map_replicas(task, cfg["replicas"], cfg["seed"], workers)
    result = stats.extinction_probability(outcomes)
    _write_json({"mode": "extinction", "result": result}, cfg, out / "summary.json")
    figures.save_extinction(result, out / "extinction.png")
    lo, hi = result["ci99"]
    print(
        f"extinction: {result['estimate']:.4f} (99% CI [{lo:.4f}, {hi:.4f}]) "
        f"from {result['replicas']} paths"
    )
    return 0


def run(cfg: dict, workers_override=None, out_override=None, fmt: str = "csv") -> int:
    model = build_model(cfg["model"], cfg.get("params"))
    workers = workers_override or cfg.get("workers", 1)
    out = Path(out_override or cfg.get("out_dir") or os.environ.get("ERGOJUMP_OUT", "."))
    out.mkdir(parents=True, exist_ok=True)

    mode = cfg["mode"]
    if mode == "simulate":
        return _simulate_mode(cfg, model, out, workers, fmt, limit_side=False)
    if mode == "limit":
        if model.limit is None:
            raise ConfigProblem(f"model {cfg['model']} has no limit sampler")
        return _simulate_mode(cfg, model, out, workers, fmt, limit_side=True)
    if mode == "converge-sweep":
        return _converge_mode(cfg, model, out, workers, fmt)
    if mode == "verify":
        return _verify_mode(cfg, model, out, workers, fmt)
    if mode == "explosion-gap":
        return _explosion_mode(cfg, model, out, workers, fmt)
    if mode == "extinction":
        return _extinction_mode(cfg, model, out, workers, fmt)
    raise ConfigProblem(f"unhandled mode {mode}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ergojump",
        description="Monte Carlo runner for two-timescale jump processes and their limits",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a configured experiment")
    p_run.add_argument("--config", required=True, help="path to a JSON experiment config")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--workers", type=int, default=None, help="worker processes")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.add_argument("--format", choices=("csv", "json"), default="csv")

    p_list = sub.add_parser("list-models", help="enumerate built-in models")
    p_list.add_argument("--json", action="store_true", help="machine-readable catalog")

    sub.add_parser("schema", help="print the experiment config JSON schema")

    args = parser.parse_args(argv)

    if args.command == "list-models":
        if args.json:
            catalog = {
                name: {"defaults": MODEL_DEFAULTS[name], "params_schema": PARAM_SCHEMAS[name]}
                for name in MODEL_NAMES
            }
            print(json.dumps(catalog, indent=2, sort_keys=True))
        else:
            for name in MODEL_NAMES:
                print(name)
        return 0

    if args.command == "schema":
        print(json.dumps(CONFIG_SCHEMA, indent=2, sort_keys=True))
        return 0

    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
    except ConfigProblem as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        return run(cfg, workers_override=args.workers, out_override=args.out, fmt=args.format)
    except (ConfigProblem, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime fault with context
        print(f"runtime fault in mode {cfg.get('mode')}: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
