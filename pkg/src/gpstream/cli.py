"""Experiment driver: model comparison, window-proportion and active-learning
sweeps, and interpretability histograms, written as JSON + CSV.

Every invocation writes one output directory containing results.json plus
per-model roc_<model>.csv, f1_trajectory_<model>.csv, and (for the additive
models) importance_<model>.csv. All randomness flows from --seed, so repeated
invocations produce byte-identical results up to the timing fields.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .agp import contribution_breakdown_batch
from .datasets import (
    Dataset,
    StreamSplit,
    load_dataset,
    make_synthetic,
    split_stream,
    standardize_split,
)
from .errors import DomainError, GpstreamError
from .metrics import f1_score, importance_histogram, roc_and_auc
from .neural import nam_contributions_batch
from .online import MODEL_KINDS, OnlineConfig, OnlineRunResult, run_online
from scipy.special import expit

_SPLIT_SEED_OFFSET = 7919


@dataclass(frozen=True)
class ExperimentConfig:
    out: Path
    data: str | None = None
    synthetic: tuple[int, int] | None = None
    models: tuple[str, ...] = MODEL_KINDS
    window_proportion: float = 0.2
    al_fraction: float = 1.0
    window_grid: tuple[float, ...] = ()
    al_grid: tuple[float, ...] = ()
    recent_fraction: float = 0.5
    batch_min: int = 50
    batch_max: int = 100
    retrain_every: int = 1
    test_fraction: float = 0.2
    initial_fraction: float = 0.2
    seed: int = 0
    standardize: bool = False
    prequential: bool = False
    label_column: str | int = -1
    drop_columns: tuple[str, ...] = ("Index", "index", "id", "Id")
    epochs: int = 50
    learning_rate: float = 1e-3
    opt_budget_initial: int = 25
    opt_budget_update: int = 5
    opt_subsample: int = 256
    shared_lengthscale: bool = False

    def __post_init__(self):
        if not self.models:
            raise DomainError("model list must not be empty")
        unknown = [m for m in self.models if m not in MODEL_KINDS]
        if unknown:
            raise DomainError(f"unknown models {unknown}; choose from {MODEL_KINDS}")
        if self.data is None and self.synthetic is None:
            raise DomainError("either a data path or a synthetic size is required")

    def online_config(self, **overrides) -> OnlineConfig:
        kwargs = dict(
            window_proportion=self.window_proportion,
            batch_min=self.batch_min,
            batch_max=self.batch_max,
            al_fraction=self.al_fraction,
            seed=self.seed,
            retrain_every=self.retrain_every,
            recent_fraction=self.recent_fraction,
            opt_budget_initial=self.opt_budget_initial,
            opt_budget_update=self.opt_budget_update,
            opt_subsample=self.opt_subsample,
            shared_lengthscale=self.shared_lengthscale,
            epochs=self.epochs,
            learning_rate=self.learning_rate,
        )
        kwargs.update(overrides)
        return OnlineConfig(**kwargs)


def _load(config: ExperimentConfig) -> Dataset:
    if config.data is not None:
        return load_dataset(
            config.data, label_column=config.label_column, drop_columns=config.drop_columns
        )
    n, p = config.synthetic
    return make_synthetic(n, p, seed=config.seed)


def _split(config: ExperimentConfig, dataset: Dataset) -> StreamSplit:
    rng = np.random.default_rng([config.seed, _SPLIT_SEED_OFFSET])
    split = split_stream(
        dataset,
        config.test_fraction,
        config.initial_fraction,
        (config.batch_min, config.batch_max),
        rng,
    )
    return standardize_split(split) if config.standardize else split


def _interpretability(model_kind: str, run: OnlineRunResult, test_X: np.ndarray, p: int):
    """Top-contributor and top-variance pick histograms over the test set."""
    if model_kind == "agp":
        _, _, means, variances = contribution_breakdown_batch(run.model.state, test_X)
        contrib_picks = np.argmax(np.abs(means), axis=1)
        variance_picks = np.argmax(variances, axis=1)
    elif model_kind == "nam":
        contrib = nam_contributions_batch(run.model.params, test_X)
        g = expit(contrib)
        contrib_picks = np.argmax(np.abs(contrib), axis=1)
        variance_picks = np.argmax(g * (1.0 - g), axis=1)
    else:
        return None
    return {
        "importance_pct": importance_histogram(contrib_picks, p).tolist(),
        "variance_importance_pct": importance_histogram(variance_picks, p).tolist(),
    }


def _evaluate_model(
    model_kind: str, run: OnlineRunResult, split: StreamSplit, prequential: bool
) -> dict:
    if prequential and split.batches:
        scores = np.concatenate([r.predictions for r in run.records[1:]])
        labels = np.concatenate([yb for _, yb in split.batches])
    else:
        scores = run.model.predict_proba(split.test_X)
        labels = split.test_y
    roc, auc = roc_and_auc(scores, labels)
    entry = {
        "auc": auc,
        "f1": f1_score(scores, labels),
        "roc": {
            "fpr": roc.fpr.tolist(),
            "tpr": roc.tpr.tolist(),
            "thresholds": [_json_float(t) for t in roc.thresholds],
        },
        "f1_trajectory": [r.f1 for r in run.records],
        "accuracy_trajectory": [r.accuracy for r in run.records],
        "acquisition": "latent_variance" if model_kind in ("gp", "agp") else "p_times_1_minus_p",
        "capacity": run.capacity,
        "timings": {
            "fit_seconds": run.fit_seconds,
            "opt_seconds": run.opt_seconds,
        },
    }
    extra = _interpretability(model_kind, run, split.test_X, split.test_X.shape[1])
    if extra is not None:
        entry.update(extra)
    return entry


def _json_float(v: float):
    if np.isposinf(v):
        return "inf"
    if np.isneginf(v):
        return "-inf"
    return float(v)


def _config_echo(config: ExperimentConfig) -> dict:
    echo = asdict(config)
    echo["out"] = str(config.out)
    echo["models"] = list(config.models)
    echo["drop_columns"] = list(config.drop_columns)
    echo["window_grid"] = list(config.window_grid)
    echo["al_grid"] = list(config.al_grid)
    echo["synthetic"] = list(config.synthetic) if config.synthetic else None
    return echo


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def _write_model_files(out: Path, name: str, entry: dict, feature_names: list[str]) -> None:
    roc = entry["roc"]
    _write_csv(
        out / f"roc_{name}.csv",
        ["threshold", "fpr", "tpr"],
        zip(roc["thresholds"], roc["fpr"], roc["tpr"]),
    )
    _write_csv(
        out / f"f1_trajectory_{name}.csv",
        ["step", "f1", "accuracy"],
        zip(range(len(entry["f1_trajectory"])), entry["f1_trajectory"], entry["accuracy_trajectory"]),
    )
    if "importance_pct" in entry:
        _write_csv(
            out / f"importance_{name}.csv",
            ["feature_index", "feature_name", "top_contributor_pct", "top_variance_pct"],
            zip(
                range(len(feature_names)),
                feature_names,
                entry["importance_pct"],
                entry["variance_importance_pct"],
            ),
        )


def cmd_run(config: ExperimentConfig, write: bool = True) -> dict:
    """Run every configured model over the identical split; evaluate and dump."""
    t_start = time.perf_counter()
    dataset = _load(config)
    split = _split(config, dataset)
    online_cfg = config.online_config()
    document = {
        "command": "run",
        "config": _config_echo(config),
        "dataset": {
            "n_rows": dataset.n_rows,
            "n_features": dataset.n_features,
            "feature_names": dataset.feature_names,
            "n_test": int(split.test_y.shape[0]),
            "n_initial": int(split.initial_y.shape[0]),
            "n_batches": len(split.batches),
        },
        "models": {},
    }
    for kind in dict.fromkeys(config.models):
        run = run_online(kind, split, online_cfg)
        document["models"][kind] = _evaluate_model(kind, run, split, config.prequential)
    document["total_seconds"] = time.perf_counter() - t_start
    if write:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.json").write_text(_dumps(document))
        for name, entry in document["models"].items():
            _write_model_files(out, name, entry, dataset.feature_names)
    return document


def _sweep(config: ExperimentConfig, grid: tuple[float, ...], param: str, label: str) -> dict:
    if not grid:
        raise DomainError(f"{label} sweep needs a non-empty grid")
    t_start = time.perf_counter()
    runs = {}
    table: dict[str, dict[str, dict]] = {m: {} for m in dict.fromkeys(config.models)}
    for value in grid:
        sub = replace(
            config,
            out=Path(config.out) / f"{param}_{value:g}",
            **{param: value},
            window_grid=(),
            al_grid=(),
        )
        doc = cmd_run(sub, write=True)
        runs[f"{value:g}"] = doc
        for name, entry in doc["models"].items():
            fits = entry["timings"]["fit_seconds"]
            table[name][f"{value:g}"] = {
                "f1": entry["f1"],
                "auc": entry["auc"],
                "mean_fit_seconds": float(np.mean(fits)) if fits else 0.0,
            }
    document = {
        "command": label,
        "config": _config_echo(config),
        "grid": [float(v) for v in grid],
        "table": table,
        "runs": runs,
        "total_seconds": time.perf_counter() - t_start,
    }
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.json").write_text(_dumps(document))
    return document


def cmd_sweep_window(config: ExperimentConfig) -> dict:
    """cmd_run once per window proportion; tabulate F1 and retrain timings."""
    return _sweep(config, config.window_grid, "window_proportion", "sweep-window")


def cmd_sweep_al(config: ExperimentConfig) -> dict:
    """cmd_run once per active-learning fraction; tabulate F1."""
    return _sweep(config, config.al_grid, "al_fraction", "sweep-al")


def _dumps(document: dict) -> str:
    return json.dumps(document, sort_keys=True, indent=2) + "\n"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gpstream", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "train, stream, and evaluate the configured models"),
        ("sweep-window", "repeat run over a grid of window proportions"),
        ("sweep-al", "repeat run over a grid of active-learning fractions"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--data", help="headered numeric CSV with a label column")
        p.add_argument(
            "--synthetic",
            nargs=2,
            type=int,
            metavar=("N", "P"),
            help="generate an additive synthetic dataset instead of reading --data",
        )
        p.add_argument("--models", default="nn,gp,nam,agp", help="comma-separated subset of nn,gp,nam,agp")
        p.add_argument("--window-proportion", type=float, default=0.2)
        p.add_argument("--window-grid", default="", help="comma-separated proportions (sweep-window)")
        p.add_argument("--al-fraction", type=float, default=1.0)
        p.add_argument("--al-grid", default="", help="comma-separated fractions (sweep-al)")
        p.add_argument("--recent-fraction", type=float, default=0.5)
        p.add_argument("--batch-min", type=int, default=50)
        p.add_argument("--batch-max", type=int, default=100)
        p.add_argument("--retrain-every", type=int, default=1)
        p.add_argument("--test-fraction", type=float, default=0.2)
        p.add_argument("--initial-fraction", type=float, default=0.2)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--standardize", action="store_true", help="z-score by initial-window stats")
        p.add_argument("--prequential", action="store_true", help="score incoming batches instead of the test set")
        p.add_argument("--label-column", default="-1", help="label column name or index (default: last)")
        p.add_argument("--drop-columns", default="Index,index,id,Id", help="columns to ignore if present")
        p.add_argument("--epochs", type=int, default=50)
        p.add_argument("--learning-rate", type=float, default=1e-3)
        p.add_argument("--opt-budget-initial", type=int, default=25)
        p.add_argument("--opt-budget-update", type=int, default=5)
        p.add_argument("--opt-subsample", type=int, default=256)
        p.add_argument("--shared-lengthscale", action="store_true")
    return parser


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    label_column = args.label_column
    try:
        label_column = int(label_column)
    except ValueError:
        pass
    return ExperimentConfig(
        out=Path(args.out),
        data=args.data,
        synthetic=tuple(args.synthetic) if args.synthetic else None,
        models=tuple(m.strip() for m in args.models.split(",") if m.strip()),
        window_proportion=args.window_proportion,
        al_fraction=args.al_fraction,
        window_grid=_floats(args.window_grid),
        al_grid=_floats(args.al_grid),
        recent_fraction=args.recent_fraction,
        batch_min=args.batch_min,
        batch_max=args.batch_max,
        retrain_every=args.retrain_every,
        test_fraction=args.test_fraction,
        initial_fraction=args.initial_fraction,
        seed=args.seed,
        standardize=args.standardize,
        prequential=args.prequential,
        label_column=label_column,
        drop_columns=tuple(c.strip() for c in args.drop_columns.split(",") if c.strip()),
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        opt_budget_initial=args.opt_budget_initial,
        opt_budget_update=args.opt_budget_update,
        opt_subsample=args.opt_subsample,
        shared_lengthscale=args.shared_lengthscale,
    )


_COMMANDS = {
    "run": cmd_run,
    "sweep-window": cmd_sweep_window,
    "sweep-al": cmd_sweep_al,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = config_from_args(args)
    except _UsageError as exc:
        print(f"gpstream: usage error: {exc}", file=sys.stderr)
        return 1
    except DomainError as exc:
        print(f"gpstream: usage error: {exc}", file=sys.stderr)
        return 1
    try:
        document = _COMMANDS[args.command](config)
    except GpstreamError as exc:
        print(f"gpstream: {args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"gpstream: {args.command} failed: {exc}", file=sys.stderr)
        return 2
    for name, entry in sorted(document.get("models", {}).items()):
        print(f"{name}: auc={entry['auc']:.4f} f1={entry['f1']:.4f} ({entry['acquisition']})")
    if "table" in document:
        for name, cells in document["table"].items():
            marks = " ".join(f"{k}:f1={v['f1']:.4f}" for k, v in cells.items())
            print(f"{name}: {marks}")
    print(f"results written to {config.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
