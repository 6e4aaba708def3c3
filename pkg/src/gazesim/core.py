"""Domain types and shared numeric primitives.

All positions are degrees of visual angle (dva), signed relative to screen
center; all times are integer milliseconds from recording start.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterator, Sequence

import numpy as np


@dataclass(frozen=True, slots=True)
class GazeSample:
    """One timestamped monocular gaze point.

    ``valid`` is False when the raw sample was missing before forward fill.
    """

    t_ms: int
    x_dva: float
    y_dva: float
    valid: bool = True


@dataclass(frozen=True, slots=True)
class TargetSegment:
    """One stimulus target: constant position over [onset_ms, offset_ms)."""

    index: int
    x_dva: float
    y_dva: float
    onset_ms: int
    offset_ms: int

    def __post_init__(self) -> None:
        if not self.onset_ms < self.offset_ms:
            raise ValueError(
                f"target {self.index}: onset {self.onset_ms} must precede offset {self.offset_ms}"
            )


@dataclass(frozen=True, slots=True)
class FixationRun:
    """Maximal contiguous span of samples classified as fixation (inclusive)."""

    start_idx: int
    end_idx: int
    start_ms: int
    end_ms: int

    @property
    def duration_ms(self) -> int:
        return self.end_ms - self.start_ms

    @property
    def n_samples(self) -> int:
        return self.end_idx - self.start_idx + 1


@dataclass(frozen=True, slots=True)
class TriggerEvent:
    """The dwell window selected for one target.

    ``contaminated_samples`` counts window samples whose raw value was missing
    and got forward-filled before classification.
    """

    target_index: int
    window_start_ms: int
    window_end_ms: int
    centroid_x_dva: float
    centroid_y_dva: float
    distance_dva: float
    angular_offset_deg: float
    onset_latency_ms: int
    contaminated_samples: int = 0


OFFSET_MODES = ("arccos3d", "planar")


@dataclass
class SimConfig:
    """Full configuration of one interaction simulation.

    ``classifier`` is a fixation-classifier estimator (see ``gazesim.classify``);
    any object with ``algorithm``, ``get_params()`` and ``segment()`` works.
    """

    classifier: Any
    dwell_ms: int = 100
    buffer_ms: int = 1000
    offset_mode: str = "arccos3d"

    def __post_init__(self) -> None:
        if not 0 < self.dwell_ms <= self.buffer_ms:
            raise ValueError(
                f"need 0 < dwell_ms <= buffer_ms, got dwell={self.dwell_ms} buffer={self.buffer_ms}"
            )
        if self.offset_mode not in OFFSET_MODES:
            raise ValueError(f"offset_mode must be one of {OFFSET_MODES}, got {self.offset_mode!r}")

    def to_dict(self) -> dict:
        return {
            "algorithm": self.classifier.algorithm,
            "classifier_params": dict(sorted(self.classifier.get_params().items())),
            "dwell_ms": self.dwell_ms,
            "buffer_ms": self.buffer_ms,
            "offset_mode": self.offset_mode,
        }


@dataclass(eq=False)
class Recording:
    """One parsed recording: columnar sample arrays plus target segments.

    Missing raw samples keep NaN coordinates and valid=False; they are only
    filled by the stream layer. Treated as immutable after construction.
    """

    subject_id: str
    session_id: str
    rate_hz: float
    t_ms: np.ndarray
    x_dva: np.ndarray
    y_dva: np.ndarray
    valid: np.ndarray
    targets: tuple[TargetSegment, ...] = ()

    def __post_init__(self) -> None:
        self.t_ms = np.asarray(self.t_ms, dtype=np.int64)
        self.x_dva = np.asarray(self.x_dva, dtype=np.float64)
        self.y_dva = np.asarray(self.y_dva, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        self.targets = tuple(self.targets)
        n = len(self.t_ms)
        if not (len(self.x_dva) == len(self.y_dva) == len(self.valid) == n):
            raise ValueError("sample arrays must share one length")
        if n and np.any(np.diff(self.t_ms) <= 0):
            raise ValueError("timestamps must be strictly increasing")
        ok = self.valid
        if not (np.all(np.isfinite(self.x_dva[ok])) and np.all(np.isfinite(self.y_dva[ok]))):
            raise ValueError("valid samples must have finite coordinates")
        for prev, cur in zip(self.targets, self.targets[1:]):
            if cur.onset_ms < prev.offset_ms:
                raise ValueError("target segments must be disjoint and ordered by onset")

    @property
    def n_samples(self) -> int:
        return len(self.t_ms)

    @property
    def data_loss_pct(self) -> float:
        if self.n_samples == 0:
            return 0.0
        return 100.0 * float(np.count_nonzero(~self.valid)) / self.n_samples

    @property
    def key(self) -> str:
        return f"{self.subject_id}/{self.session_id}"

    def sample(self, i: int) -> GazeSample:
        return GazeSample(
            int(self.t_ms[i]), float(self.x_dva[i]), float(self.y_dva[i]), bool(self.valid[i])
        )

    def iter_samples(self) -> Iterator[GazeSample]:
        for i in range(self.n_samples):
            yield self.sample(i)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Recording):
            return NotImplemented
        return (
            self.subject_id == other.subject_id
            and self.session_id == other.session_id
            and self.rate_hz == other.rate_hz
            and np.array_equal(self.t_ms, other.t_ms)
            and np.array_equal(self.x_dva, other.x_dva, equal_nan=True)
            and np.array_equal(self.y_dva, other.y_dva, equal_nan=True)
            and np.array_equal(self.valid, other.valid)
            and self.targets == other.targets
        )


def euclidean_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Planar Euclidean distance between two dva points."""
    return math.hypot(a[0] - b[0], a[1] - b[1])


def centroid(samples: Sequence[GazeSample]) -> tuple[float, float]:
    """Arithmetic mean position of a non-empty sample window."""
    if len(samples) == 0:
        raise ValueError("empty window")
    n = len(samples)
    return (
        sum(s.x_dva for s in samples) / n,
        sum(s.y_dva for s in samples) / n,
    )


def dwell_sample_count(duration_ms: float, rate_hz: float) -> int:
    """Samples a window needs before it counts as ``duration_ms`` long.

    Discrete sampling cannot produce exact durations; a window of N samples
    at rate r qualifies when N >= ceil(duration_ms * r / 1000).
    """
    if duration_ms <= 0 or rate_hz <= 0:
        raise ValueError("duration and rate must be positive")
    return max(1, math.ceil(duration_ms * rate_hz / 1000.0))
