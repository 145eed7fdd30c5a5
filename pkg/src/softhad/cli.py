"""Command-line surface: generate data, score, evaluate, sweep.

Every command persists its resolved configuration as a flat key=value
document plus a manifest with a config hash and seed, so a run is
reproducible (byte-identical outputs) from its persisted config.  Errors
surface as a machine-readable JSON line on stderr with a nonzero exit
status.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from .baselines import qda_scores
from .datasets import (
    Dataset,
    load_dataset,
    load_mixture_config,
    load_ordinal_csv,
    load_preset,
    save_dataset,
    synthetic_benchmark,
)
from .experiments import ALL_METHODS, ExperimentConfig, sweep
from .fileio import atomic_write_text, dump_json
from .metrics import agreement_score
from .scoring import (
    PipelineConfig,
    apply_task_scaler,
    fit_task_scaler,
    prepare_model,
    score_with_model,
)

OUTPUT_DIR_ENV = "SOFTHAD_OUTPUT_DIR"

HISTOGRAM_BINS = 50
HISTOGRAM_RANGE = (0.0, 2.0)

_DEFAULTS = {
    "gen": {
        "preset": None,
        "mixture_config": None,
        "n_per_class": 500,
        "m_per_class": None,
        "flip_rate": 0.03,
        "seed": 0,
    },
    "score": {
        "data": None,
        "csv": None,
        "response_column": None,
        "csv_flip_rate": 0.03,
        "method": "softhad",
        "k": 75,
        "c_l": 1.0,
        "gamma_g": 1.0,
        "k_per_class": None,
        "sigma": None,
        "feature_weights": "wilcoxon",
        "tol": 1e-10,
        "max_iter": None,
        "scale": False,
        "seed": 0,
    },
    "eval": {
        "report": None,
        "truth": None,
    },
    "sweep": {
        "preset": None,
        "mixture_config": None,
        "axis": "gamma_g",
        "grid": None,
        "runs": 5,
        "method": "softhad",
        "n_per_class": 250,
        "m_per_class": None,
        "flip_rate": 0.03,
        "k": 75,
        "c_l": 1.0,
        "gamma_g": 1.0,
        "k_per_class": None,
        "feature_weights": "uniform",
        "seed": 0,
    },
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 2
    try:
        config = _resolve_config(args)
        out_dir = _output_dir(args)
        handler = {
            "gen": cmd_gen,
            "score": cmd_score,
            "eval": cmd_eval,
            "sweep": cmd_sweep,
        }[args.command]
        handler(config, out_dir)
        return 0
    except Exception as exc:  # surfaced as machine-readable error
        sys.stderr.write(
            json.dumps(
                {"error": type(exc).__name__, "message": str(exc)}, sort_keys=True
            )
            + "\n"
        )
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softhad",
        description="Conditional anomaly detection on similarity graphs.",
    )
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--config", help="flat key=value config file to preload")
        p.add_argument("--out", help=f"output directory (default ${OUTPUT_DIR_ENV} or ./softhad_out)")

    p = sub.add_parser("gen", help="generate a synthetic benchmark dataset")
    common(p)
    p.add_argument("--preset", choices=("d1", "d2", "d3"))
    p.add_argument("--mixture-config", dest="mixture_config", help="mixture model JSON")
    p.add_argument("--n-per-class", dest="n_per_class", type=int)
    p.add_argument("--m-per-class", dest="m_per_class", type=int)
    p.add_argument("--flip-rate", dest="flip_rate", type=float)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("score", help="score the recent split of a dataset")
    common(p)
    p.add_argument("--data", help="dataset snapshot directory from 'gen'")
    p.add_argument("--csv", help="ordinal-response CSV instead of a snapshot")
    p.add_argument("--response-column", dest="response_column")
    p.add_argument("--csv-flip-rate", dest="csv_flip_rate", type=float)
    p.add_argument("--method", choices=ALL_METHODS)
    p.add_argument("--k", type=int)
    p.add_argument("--c-l", dest="c_l", type=float)
    p.add_argument("--gamma-g", dest="gamma_g", type=float)
    p.add_argument("--k-per-class", dest="k_per_class", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--feature-weights", dest="feature_weights", choices=("wilcoxon", "uniform"))
    p.add_argument("--tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--scale", action="store_const", const=True, default=None)
    p.add_argument("--no-scale", dest="scale", action="store_const", const=False)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("eval", help="rank-agreement table for score reports")
    common(p)
    p.add_argument("--report", action="append", help="report.csv (repeatable)")
    p.add_argument("--truth", help="dataset snapshot directory with true scores")

    p = sub.add_parser("sweep", help="repeat scoring over a parameter grid")
    common(p)
    p.add_argument("--preset", choices=("d1", "d2", "d3"))
    p.add_argument("--mixture-config", dest="mixture_config")
    p.add_argument("--axis", choices=("gamma_g", "graph_size"))
    p.add_argument("--grid", help="comma-separated grid values")
    p.add_argument("--runs", type=int)
    p.add_argument("--method", choices=ALL_METHODS)
    p.add_argument("--n-per-class", dest="n_per_class", type=int)
    p.add_argument("--m-per-class", dest="m_per_class", type=int)
    p.add_argument("--flip-rate", dest="flip_rate", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--c-l", dest="c_l", type=float)
    p.add_argument("--gamma-g", dest="gamma_g", type=float)
    p.add_argument("--k-per-class", dest="k_per_class", type=int)
    p.add_argument("--feature-weights", dest="feature_weights", choices=("wilcoxon", "uniform"))
    p.add_argument("--seed", type=int)
    return parser


def _resolve_config(args) -> dict:
    """defaults <- config file <- explicit flags."""
    config = dict(_DEFAULTS[args.command])
    if getattr(args, "config", None):
        for key, value in _read_flat_config(args.config).items():
            if key == "command":
                continue
            if key not in config:
                raise ValueError(f"unknown config key {key!r} for command {args.command!r}")
            config[key] = value
    for key in config:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    config["command"] = args.command
    return config


def _read_flat_config(path) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw_line in fh:
            line = raw_line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {raw_line.rstrip()}")
            key, _, value = line.partition("=")
            values[key.strip()] = _parse_flat_value(value.strip())
    return values


def _parse_flat_value(text: str):
    if text.lower() in ("none", ""):
        return None
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _flat_config_text(config: dict) -> str:
    lines = [f"{key} = {_format_flat_value(config[key])}" for key in sorted(config)]
    return "\n".join(lines) + "\n"


def _format_flat_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return str(value)


def _config_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _output_dir(args) -> Path:
    out = getattr(args, "out", None) or os.environ.get(OUTPUT_DIR_ENV) or "softhad_out"
    return Path(out)


def _write_run_metadata(out_dir: Path, config: dict, extra: dict) -> str:
    text = _flat_config_text(config)
    atomic_write_text(out_dir / "config.txt", text)
    manifest = {"command": config["command"], "config_hash": _config_hash(text)}
    manifest.update(extra)
    dump_json(out_dir / "manifest.json", manifest)
    return manifest["config_hash"]


def _resolve_model(config: dict):
    if config.get("preset"):
        return load_preset(config["preset"])
    if config.get("mixture_config"):
        return load_mixture_config(config["mixture_config"])
    raise ValueError("provide either --preset or --mixture-config")


def cmd_gen(config: dict, out_dir: Path) -> None:
    model = _resolve_model(config)
    ds = synthetic_benchmark(
        model,
        config["n_per_class"],
        config["m_per_class"],
        config["flip_rate"],
        config["seed"],
    )
    save_dataset(ds, out_dir)
    _write_run_metadata(
        out_dir,
        config,
        {
            "seed": config["seed"],
            "n": int(ds.n),
            "n_past": int(len(ds.past_indices)),
            "n_recent": int(len(ds.recent_indices)),
            "flipped_indices": ds.flipped_indices.tolist(),
        },
    )


def _load_score_input(config: dict) -> Dataset:
    if config.get("data"):
        ds = load_dataset(config["data"])
        if ds.past_indices is None or ds.recent_indices is None:
            raise ValueError("dataset snapshot has no past/recent split")
        return ds
    if config.get("csv"):
        if not config.get("response_column"):
            raise ValueError("--response-column is required with --csv")
        return load_ordinal_csv(
            config["csv"],
            config["response_column"],
            flip_rate=config["csv_flip_rate"],
            seed=config["seed"],
        )
    raise ValueError("provide either --data or --csv")


def cmd_score(config: dict, out_dir: Path) -> None:
    ds = _load_score_input(config)
    past, recent = ds.past, ds.recent
    method = config["method"]
    pipeline = PipelineConfig(
        k=config["k"],
        c_l=config["c_l"],
        gamma_g=config["gamma_g"],
        k_per_class=config["k_per_class"],
        sigma=config["sigma"],
        feature_weights=config["feature_weights"],
        tol=config["tol"],
        max_iter=config["max_iter"],
        seed=config["seed"],
    )

    if method == "qda":
        scores = qda_scores(past, recent)
        recent_raw = scores.raw
        train_raw = qda_scores(past, past).raw
    else:
        model = prepare_model(past.X, past.y, pipeline)
        recent_raw, train_raw = score_with_model(
            model, recent.X, recent.y, pipeline, methods=(method,)
        )[method]

    scaled = None
    if config["scale"]:
        scaled = apply_task_scaler(fit_task_scaler(train_raw), recent_raw)

    instance_ids = ds.recent_indices
    ranking = np.argsort(-recent_raw, kind="stable")
    rank_of = np.empty(len(recent_raw), dtype=int)
    rank_of[ranking] = np.arange(1, len(recent_raw) + 1)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance_id", "raw", "scaled", "rank", "task"])
    for i in range(len(recent_raw)):
        writer.writerow(
            [
                int(instance_ids[i]),
                repr(float(recent_raw[i])),
                "" if scaled is None else repr(float(scaled[i])),
                int(rank_of[i]),
                0,
            ]
        )
    atomic_write_text(out_dir / "report.csv", buf.getvalue())

    counts, edges = np.histogram(
        np.clip(recent_raw, *HISTOGRAM_RANGE), bins=HISTOGRAM_BINS, range=HISTOGRAM_RANGE
    )
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["bin_left", "bin_right", "count"])
    for b in range(HISTOGRAM_BINS):
        writer.writerow([repr(float(edges[b])), repr(float(edges[b + 1])), int(counts[b])])
    atomic_write_text(out_dir / "histogram.csv", buf.getvalue())

    _write_run_metadata(
        out_dir,
        config,
        {"seed": config["seed"], "method": method, "n_scored": int(len(recent_raw))},
    )


def _read_report(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        ids, raw = [], []
        for row in reader:
            ids.append(int(row["instance_id"]))
            raw.append(float(row["raw"]))
    return np.asarray(ids), np.asarray(raw)


def cmd_eval(config: dict, out_dir: Path) -> None:
    reports = config["report"]
    if not reports:
        raise ValueError("provide at least one --report")
    if isinstance(reports, str):
        reports = [r.strip() for r in reports.split(",") if r.strip()]
    if not config.get("truth"):
        raise ValueError("provide --truth (dataset snapshot directory)")
    truth_ds = load_dataset(config["truth"])
    if truth_ds.true_scores is None or truth_ds.recent_indices is None:
        raise ValueError("truth dataset must carry true scores and a split")
    truth_ids = truth_ds.recent_indices
    truth_scores = truth_ds.true_scores[truth_ids]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["report", "agreement", "n_pairs"])
    for path in reports:
        ids, raw = _read_report(path)
        if not np.array_equal(ids, truth_ids):
            raise ValueError(
                f"report {path} instance ids do not match the truth dataset's recent split"
            )
        result = agreement_score(raw, truth_scores)
        writer.writerow([Path(path).stem, repr(result.score), result.n_pairs])
    atomic_write_text(out_dir / "eval.csv", buf.getvalue())
    _write_run_metadata(out_dir, config, {"n_reports": len(reports)})


def cmd_sweep(config: dict, out_dir: Path) -> None:
    model = _resolve_model(config)
    if not config.get("grid"):
        raise ValueError("provide --grid as comma-separated values")
    grid = [float(v) for v in str(config["grid"]).split(",") if v.strip()]
    pipeline = PipelineConfig(
        k=config["k"],
        c_l=config["c_l"],
        gamma_g=config["gamma_g"],
        k_per_class=config["k_per_class"],
        feature_weights=config["feature_weights"],
        seed=config["seed"],
    )
    experiment = ExperimentConfig(
        model=model,
        n_per_class=config["n_per_class"],
        m_per_class=config["m_per_class"],
        flip_rate=config["flip_rate"],
        methods=(config["method"],),
        pipeline=pipeline,
        seed=config["seed"],
    )
    rows = sweep(experiment, config["axis"], grid, config["runs"])

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["axis", "value", "method", "mean", "variance"])
    for value, method, mean, variance in rows:
        writer.writerow([config["axis"], repr(value), method, repr(mean), repr(variance)])
    atomic_write_text(out_dir / "curve.csv", buf.getvalue())
    _write_run_metadata(
        out_dir, config, {"seed": config["seed"], "runs": config["runs"]}
    )


if __name__ == "__main__":
    sys.exit(main())
