"""Synthetic Gaussian-mixture benchmarks and ordinal-response CSV ingestion.

A benchmark dataset bundles features, -1/+1 labels, optional ground-truth
anomaly scores and a past/recent split.  For mixture data the true anomaly
score of an example is the posterior probability that its observed label is
wrong under the generating model; for ordinal-response data it is the
absolute gap between the scaled response and the (possibly flipped) label.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .fileio import atomic_write_text, dump_json, load_json
from .validation import check_binary_labels, check_feature_matrix

PRESET_NAMES = ("d1", "d2", "d3")


@dataclass(frozen=True)
class GaussianComponent:
    weight: float
    mean: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True)
class MixtureModel:
    """Per-class Gaussian mixtures with class priors."""

    positive: tuple[GaussianComponent, ...]
    negative: tuple[GaussianComponent, ...]
    prior_positive: float = 0.5

    def __post_init__(self):
        if not 0 < self.prior_positive < 1:
            raise ValueError(f"prior_positive must be in (0, 1), got {self.prior_positive}")
        for label, comps in (("+1", self.positive), ("-1", self.negative)):
            if not comps:
                raise ValueError(f"class {label} has no mixture components")
            total = sum(c.weight for c in comps)
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"class {label} component weights sum to {total}, not 1")
            for c in comps:
                cov = np.asarray(c.cov, dtype=float)
                if not np.allclose(cov, cov.T, atol=1e-12):
                    raise ValueError("covariance must be symmetric")
                try:
                    np.linalg.cholesky(cov)
                except np.linalg.LinAlgError as exc:
                    raise ValueError("covariance must be positive definite") from exc

    @property
    def dim(self) -> int:
        return np.asarray(self.positive[0].mean).shape[0]

    def components_for(self, label: int) -> tuple[GaussianComponent, ...]:
        return self.positive if label == 1 else self.negative

    def prior_for(self, label: int) -> float:
        return self.prior_positive if label == 1 else 1.0 - self.prior_positive


@dataclass(frozen=True)
class Dataset:
    """Features, labels and optional ground truth / split bookkeeping."""

    X: np.ndarray
    y: np.ndarray
    true_scores: np.ndarray | None = None
    past_indices: np.ndarray | None = None
    recent_indices: np.ndarray | None = None
    flipped_indices: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices)
        return Dataset(
            X=self.X[indices],
            y=self.y[indices],
            true_scores=None if self.true_scores is None else self.true_scores[indices],
        )

    @property
    def past(self) -> "Dataset":
        if self.past_indices is None:
            raise ValueError("dataset has no past/recent split")
        return self.subset(self.past_indices)

    @property
    def recent(self) -> "Dataset":
        if self.recent_indices is None:
            raise ValueError("dataset has no past/recent split")
        return self.subset(self.recent_indices)


def _component_log_density(X: np.ndarray, comp: GaussianComponent) -> np.ndarray:
    mean = np.asarray(comp.mean, dtype=float)
    cov = np.asarray(comp.cov, dtype=float)
    chol = np.linalg.cholesky(cov)
    diff = X - mean
    solved = np.linalg.solve(chol, diff.T)
    quad = np.sum(solved * solved, axis=0)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    d = mean.shape[0]
    return np.log(comp.weight) - 0.5 * (d * np.log(2.0 * np.pi) + logdet + quad)


def _class_log_density(model: MixtureModel, X: np.ndarray, label: int) -> np.ndarray:
    parts = np.stack([_component_log_density(X, c) for c in model.components_for(label)])
    return logsumexp(parts, axis=0)


def true_anomaly_score(model: MixtureModel, x, y_observed) -> np.ndarray | float:
    """Posterior probability that the observed label is wrong, in log space."""
    X = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y_observed))
    log_pos = _class_log_density(model, X, 1) + np.log(model.prior_for(1))
    log_neg = _class_log_density(model, X, -1) + np.log(model.prior_for(-1))
    log_total = np.logaddexp(log_pos, log_neg)
    log_observed = np.where(y == 1, log_pos, log_neg)
    scores = -np.expm1(log_observed - log_total)
    scores = np.clip(scores, 0.0, 1.0)
    if np.isscalar(y_observed) or np.asarray(y_observed).ndim == 0:
        return float(scores[0])
    return scores


def sample_mixture(model: MixtureModel, n_per_class: int, seed) -> Dataset:
    """Draw ``n_per_class`` points from each class mixture, deterministically."""
    if n_per_class < 1:
        raise ValueError(f"n_per_class must be >= 1, got {n_per_class}")
    rng = np.random.default_rng(seed)
    blocks = []
    labels = []
    for label in (-1, 1):
        comps = model.components_for(label)
        weights = np.array([c.weight for c in comps])
        choice = rng.choice(len(comps), size=n_per_class, p=weights)
        points = np.empty((n_per_class, model.dim))
        for ci, comp in enumerate(comps):
            idx = np.flatnonzero(choice == ci)
            if idx.size == 0:
                continue
            chol = np.linalg.cholesky(np.asarray(comp.cov, dtype=float))
            z = rng.standard_normal((idx.size, model.dim))
            points[idx] = np.asarray(comp.mean, dtype=float) + z @ chol.T
        blocks.append(points)
        labels.append(np.full(n_per_class, label))
    X = np.vstack(blocks)
    y = np.concatenate(labels)
    return Dataset(X=X, y=y, true_scores=true_anomaly_score(model, X, y))


def flip_labels(ds: Dataset, rate: float, seed) -> Dataset:
    """Flip exactly ``round(rate * n)`` labels, chosen uniformly without
    replacement; true scores are complemented at the flipped rows (valid
    when they are label posteriors)."""
    if not 0 <= rate < 1:
        raise ValueError(f"flip rate must be in [0, 1), got {rate}")
    n_flips = int(round(rate * ds.n))
    rng = np.random.default_rng(seed)
    flipped = np.sort(rng.choice(ds.n, size=n_flips, replace=False))
    y = ds.y.copy()
    y[flipped] = -y[flipped]
    scores = None
    if ds.true_scores is not None:
        scores = ds.true_scores.copy()
        scores[flipped] = 1.0 - scores[flipped]
    return replace(ds, y=y, true_scores=scores, flipped_indices=flipped)


def synthetic_benchmark(
    model: MixtureModel,
    n_per_class: int,
    m_per_class: int | None = None,
    flip_rate: float = 0.03,
    seed=0,
) -> Dataset:
    """Past + recent samples from one model, with labels flipped at
    ``flip_rate`` across the pooled rows."""
    if m_per_class is None:
        m_per_class = n_per_class
    seeds = np.random.SeedSequence(seed).spawn(3)
    train = sample_mixture(model, n_per_class, seeds[0])
    test = sample_mixture(model, m_per_class, seeds[1])
    combined = Dataset(
        X=np.vstack([train.X, test.X]),
        y=np.concatenate([train.y, test.y]),
        true_scores=np.concatenate([train.true_scores, test.true_scores]),
        past_indices=np.arange(train.n),
        recent_indices=np.arange(train.n, train.n + test.n),
    )
    return flip_labels(combined, flip_rate, seeds[2])


def _model_from_dict(payload: dict) -> MixtureModel:
    def comps(key):
        return tuple(
            GaussianComponent(
                weight=float(c["weight"]),
                mean=np.asarray(c["mean"], dtype=float),
                cov=np.asarray(c["cov"], dtype=float),
            )
            for c in payload[key]
        )

    return MixtureModel(
        positive=comps("positive"),
        negative=comps("negative"),
        prior_positive=float(payload.get("prior_positive", 0.5)),
    )


def load_preset(name: str) -> MixtureModel:
    """One of the built-in 2-D mixture presets (d1, d2, d3)."""
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
    text = resources.files("softhad.presets").joinpath(f"{name}.json").read_text("utf-8")
    return _model_from_dict(json.loads(text))


def preset_models() -> tuple[MixtureModel, MixtureModel, MixtureModel]:
    return tuple(load_preset(name) for name in PRESET_NAMES)


def load_mixture_config(path) -> MixtureModel:
    """Mixture model from a JSON file using the preset schema."""
    return _model_from_dict(load_json(path))


def load_ordinal_csv(path, response_column: str, flip_rate: float = 0.0, seed=0) -> Dataset:
    """Build a benchmark from a CSV with a numeric ordinal response.

    The response is min-max scaled to [-1, +1]; the label is +1 where the
    scaled response is >= 0.  After flipping ``flip_rate`` of the labels,
    the true anomaly score is |scaled response - label|.  Rows are split
    (2/3 past, 1/3 recent) uniformly under the seed.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise ValueError("CSV must have a header row")
        header = [h.strip() for h in header]
        if response_column not in header:
            raise ValueError(
                f"response column {response_column!r} not found in header {header}"
            )
        r_col = header.index(response_column)
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(f"row {line_no} has {len(row)} cells, expected {len(header)}")
            parsed = []
            for col, cell in zip(header, row):
                try:
                    parsed.append(float(cell))
                except ValueError as exc:
                    raise ValueError(
                        f"non-numeric value {cell!r} at row {line_no}, column {col!r}"
                    ) from exc
            rows.append(parsed)
    if len(rows) < 2:
        raise ValueError("need at least 2 data rows")
    data = np.asarray(rows, dtype=float)
    response = data[:, r_col]
    lo, hi = response.min(), response.max()
    if hi == lo:
        raise ValueError("response column is constant")
    scaled = 2.0 * (response - lo) / (hi - lo) - 1.0
    y = np.where(scaled >= 0, 1, -1)
    features = np.delete(data, r_col, axis=1)

    n = len(y)
    rng = np.random.default_rng(seed)
    n_flips = int(round(flip_rate * n))
    flipped = np.sort(rng.choice(n, size=n_flips, replace=False))
    y[flipped] = -y[flipped]
    true_scores = np.abs(scaled - y)

    n_past = int(round(n * 2 / 3))
    perm = rng.permutation(n)
    return Dataset(
        X=features,
        y=y,
        true_scores=true_scores,
        past_indices=np.sort(perm[:n_past]),
        recent_indices=np.sort(perm[n_past:]),
        flipped_indices=flipped,
    )


def save_dataset(ds: Dataset, directory) -> None:
    """Snapshot: ``features.csv`` plus a ``dataset.json`` sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id"] + [f"x{j}" for j in range(ds.X.shape[1])])
    for i in range(ds.n):
        writer.writerow([i] + [repr(float(v)) for v in ds.X[i]])
    atomic_write_text(directory / "features.csv", buf.getvalue())

    sidecar = {
        "n": int(ds.n),
        "d": int(ds.X.shape[1]),
        "labels": ds.y.astype(int).tolist(),
        "true_scores": None if ds.true_scores is None else ds.true_scores.tolist(),
        "past_indices": None if ds.past_indices is None else ds.past_indices.tolist(),
        "recent_indices": None
        if ds.recent_indices is None
        else ds.recent_indices.tolist(),
        "flipped_indices": None
        if ds.flipped_indices is None
        else ds.flipped_indices.tolist(),
    }
    dump_json(directory / "dataset.json", sidecar)


def load_dataset(directory) -> Dataset:
    directory = Path(directory)
    sidecar = load_json(directory / "dataset.json")
    with open(directory / "features.csv", "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        X = np.asarray([[float(v) for v in row[1:]] for row in reader])
    X = check_feature_matrix(X)
    y = check_binary_labels(np.asarray(sidecar["labels"]), n=sidecar["n"])

    def _opt(key):
        value = sidecar.get(key)
        return None if value is None else np.asarray(value)

    return Dataset(
        X=X,
        y=y,
        true_scores=_opt("true_scores"),
        past_indices=_opt("past_indices"),
        recent_indices=_opt("recent_indices"),
        flipped_indices=_opt("flipped_indices"),
    )
