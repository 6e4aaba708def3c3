"""Classifier parameter selection against external ground-truth labels.

Ground truth arrives as per-sample label files aligned to each recording
(any richer taxonomy binarized to fixation vs everything else). Accuracy is
sample-level agreement; grid points are ranked by mean per-recording
accuracy with ties broken toward smaller parameters.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

import numpy as np
from sklearn.base import clone
from sklearn.model_selection import ParameterGrid

from .classify import FixationClassifier, make_classifier
from .core import Recording
from .stream import fill_positions

DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "ivt": {"velocity_threshold_deg_s": [20.0, 30.0, 40.0]},
    "idt": {
        "dispersion_threshold_dva": [0.5, 0.75, 1.0],
        "min_duration_ms": [20.0, 30.0, 40.0, 50.0, 60.0],
    },
    "ikf": {
        "chi2_threshold": [1.0 + 0.25 * i for i in range(20)],
        "window_size": [3, 5, 7],
        "deviation": [500.0, 1000.0, 1500.0, 2000.0],
    },
}


def write_labels_csv(
    t_ms: np.ndarray, labels: np.ndarray, target: str | Path | IO
) -> None:
    """Per-sample label dump: t_ms,label with label in {F, N}."""
    if isinstance(target, (str, Path)):
        handle = open(target, "w", encoding="utf-8", newline="")
        owned = True
    else:
        handle, owned = target, False
    try:
        writer = csv.writer(handle)
        writer.writerow(["t_ms", "label"])
        for t, lab in zip(t_ms, labels):
            writer.writerow([int(t), "F" if lab else "N"])
    finally:
        if owned:
            handle.close()


def read_labels_csv(source: str | Path | IO) -> tuple[np.ndarray, np.ndarray]:
    """Read a label file; returns (t_ms, boolean labels)."""
    if isinstance(source, (str, Path)):
        handle = open(source, "r", encoding="utf-8", newline="")
        owned = True
    else:
        handle, owned = source, False
    try:
        reader = csv.DictReader(handle)
        ts: list[int] = []
        labs: list[bool] = []
        for row in reader:
            ts.append(int(row["t_ms"]))
            labs.append(row["label"].strip().upper() == "F")
    finally:
        if owned:
            handle.close()
    return np.asarray(ts, dtype=np.int64), np.asarray(labs, dtype=bool)


def label_accuracy(predicted: np.ndarray, truth: np.ndarray) -> float:
    """Fraction of samples whose labels agree."""
    predicted = np.asarray(predicted, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if predicted.shape != truth.shape:
        raise ValueError(
            f"label length mismatch: predicted {predicted.shape} vs truth {truth.shape}"
        )
    if predicted.size == 0:
        raise ValueError("empty label sequences")
    return float(np.count_nonzero(predicted == truth)) / predicted.size


@dataclass(frozen=True)
class GridPoint:
    """One ranked grid-search result."""

    rank: int
    params: dict
    mean_accuracy: float


class MissingTruthError(FileNotFoundError):
    """A corpus recording has no matching ground-truth label file."""


def _check_truth(recording: Recording, t_ms: np.ndarray, labels: np.ndarray) -> np.ndarray:
    if len(labels) != recording.n_samples or not np.array_equal(t_ms, recording.t_ms):
        raise ValueError(
            f"truth labels for {recording.key} do not align with the recording samples"
        )
    return labels


def grid_search(
    corpus: Sequence[tuple[Recording, np.ndarray]],
    algorithm: str,
    grid: dict[str, list] | None = None,
) -> list[GridPoint]:
    """Rank a parameter grid by mean per-recording label accuracy.

    ``corpus`` pairs each recording with its aligned truth labels. Ties rank
    the lexicographically smaller parameter values first; results do not
    depend on corpus ordering.
    """
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    if grid is None:
        grid = DEFAULT_GRIDS[algorithm.lower()]
    base = make_classifier(algorithm)
    prepared = []
    for recording, truth in corpus:
        truth = _check_truth(recording, recording.t_ms, np.asarray(truth, dtype=bool))
        x, y = fill_positions(recording)
        prepared.append((np.column_stack([x, y]), recording.t_ms, recording.rate_hz, truth))

    scored: list[tuple[float, tuple, dict]] = []
    for params in ParameterGrid(grid):
        accs = []
        for X, t_ms, rate_hz, truth in prepared:
            est: FixationClassifier = clone(base).set_params(rate_hz=rate_hz, **params)
            labels, _ = est.segment(X, t_ms)
            accs.append(label_accuracy(labels, truth))
        mean_acc = float(sum(accs)) / len(accs)
        order_key = tuple(params[k] for k in sorted(params))
        scored.append((mean_acc, order_key, dict(params)))

    scored.sort(key=lambda item: (-item[0], item[1]))
    return [
        GridPoint(rank=i + 1, params=params, mean_accuracy=acc)
        for i, (acc, _, params) in enumerate(scored)
    ]


def load_truth_for(
    recording_path: Path, truth_dir: str | Path | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Locate and read <stem>_labels.csv next to a recording (or in truth_dir)."""
    directory = Path(truth_dir) if truth_dir is not None else recording_path.parent
    candidate = directory / f"{recording_path.stem}_labels.csv"
    if not candidate.exists():
        raise MissingTruthError(f"no truth label file for {recording_path.name}: {candidate}")
    return read_labels_csv(candidate)


def write_tuner_report(points: Sequence[GridPoint], target: str | Path | IO) -> None:
    """Ranked grid results: one row per point, parameter columns first."""
    if len(points) == 0:
        raise ValueError("no grid points")
    param_names = sorted(points[0].params)
    if isinstance(target, (str, Path)):
        handle = open(target, "w", encoding="utf-8", newline="")
        owned = True
    else:
        handle, owned = target, False
    try:
        writer = csv.writer(handle)
        writer.writerow(param_names + ["mean_accuracy", "rank"])
        for p in points:
            writer.writerow([repr(p.params[k]) for k in param_names] + [repr(p.mean_accuracy), p.rank])
    finally:
        if owned:
            handle.close()
