"""Online fixation classifiers: velocity, dispersion, and Kalman chi-square.

All three are causal single-pass state machines: the label at index i uses
samples 0..i only (the dispersion method commits a run when it ends). They
are exposed as sklearn-style estimators so they compose with grid search and
pipelines.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array

from .core import FixationRun, dwell_sample_count


def dispersion(x: np.ndarray, y: np.ndarray) -> float:
    """Spread of a gaze window: [max(x) - min(x)] + [max(y) - min(y)]."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size == 0:
        raise ValueError("empty window")
    return float((x.max() - x.min()) + (y.max() - y.min()))


def labels_to_runs(labels: np.ndarray, t_ms: np.ndarray) -> list[FixationRun]:
    """Materialize maximal contiguous fixation spans from per-sample labels."""
    lab = np.asarray(labels, dtype=bool)
    t = np.asarray(t_ms)
    if len(lab) != len(t):
        raise ValueError("one label per timestamp required")
    if len(lab) == 0:
        return []
    edges = np.diff(lab.astype(np.int8))
    starts = np.flatnonzero(edges == 1) + 1
    ends = np.flatnonzero(edges == -1)
    if lab[0]:
        starts = np.concatenate([[0], starts])
    if lab[-1]:
        ends = np.concatenate([ends, [len(lab) - 1]])
    return [
        FixationRun(int(s), int(e), int(t[s]), int(t[e]))
        for s, e in zip(starts, ends)
    ]


# ---------------------------------------------------------------------------
# Velocity threshold


def ivt_labels(
    x: np.ndarray, y: np.ndarray, velocity_threshold_deg_s: float, rate_hz: float
) -> np.ndarray:
    """Per-sample fixation labels from backward-difference velocity.

    A sample is fixation when its velocity magnitude falls below the
    threshold. The first sample has no backward difference and inherits the
    second sample's label.
    """
    if velocity_threshold_deg_s <= 0:
        raise ValueError("velocity threshold must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        raise ValueError("insufficient samples")
    v = np.hypot(np.diff(x), np.diff(y)) * rate_hz
    labels = np.empty(len(x), dtype=bool)
    labels[1:] = v < velocity_threshold_deg_s
    labels[0] = labels[1]
    return labels


# ---------------------------------------------------------------------------
# Dispersion threshold


def idt_runs(
    x: np.ndarray,
    y: np.ndarray,
    t_ms: np.ndarray,
    dispersion_threshold_dva: float,
    min_duration_ms: float,
    rate_hz: float,
) -> list[FixationRun]:
    """Causal window-growing fixation detection.

    Seed a window of the minimum duration; if its dispersion stays at or
    below the threshold, extend one sample at a time until the dispersion
    exceeds it, then emit the run without the breaking sample and re-seed at
    that sample. A seed that fails slides forward by one sample. A window
    still open at end of stream is emitted (flush), so trailing fixations
    are kept.
    """
    if dispersion_threshold_dva <= 0:
        raise ValueError("dispersion threshold must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    t = np.asarray(t_ms)
    n = len(x)
    seed = dwell_sample_count(min_duration_ms, rate_hz)
    if n < seed:
        return []

    wx = sliding_window_view(x, seed)
    wy = sliding_window_view(y, seed)
    seed_disp = (wx.max(axis=1) - wx.min(axis=1)) + (wy.max(axis=1) - wy.min(axis=1))

    runs: list[FixationRun] = []
    xl = x.tolist()
    yl = y.tolist()
    i = 0
    last_seed = n - seed
    while i <= last_seed:
        if seed_disp[i] > dispersion_threshold_dva:
            i += 1
            continue
        sl = slice(i, i + seed)
        xmn, xmx = float(x[sl].min()), float(x[sl].max())
        ymn, ymx = float(y[sl].min()), float(y[sl].max())
        j = i + seed
        while j < n:
            xv, yv = xl[j], yl[j]
            nxmn = xv if xv < xmn else xmn
            nxmx = xv if xv > xmx else xmx
            nymn = yv if yv < ymn else ymn
            nymx = yv if yv > ymx else ymx
            if (nxmx - nxmn) + (nymx - nymn) > dispersion_threshold_dva:
                break
            xmn, xmx, ymn, ymx = nxmn, nxmx, nymn, nymx
            j += 1
        runs.append(FixationRun(i, j - 1, int(t[i]), int(t[j - 1])))
        i = j
    return runs


def idt_labels(
    x: np.ndarray,
    y: np.ndarray,
    t_ms: np.ndarray,
    dispersion_threshold_dva: float,
    min_duration_ms: float,
    rate_hz: float,
) -> np.ndarray:
    labels = np.zeros(len(np.asarray(x)), dtype=bool)
    for run in idt_runs(x, y, t_ms, dispersion_threshold_dva, min_duration_ms, rate_hz):
        labels[run.start_idx : run.end_idx + 1] = True
    return labels


# ---------------------------------------------------------------------------
# Kalman filter with chi-square change detection


@dataclass
class ChannelState:
    """Constant-velocity Kalman filter state for one gaze channel.

    State is [position, velocity]; covariance starts at identity, gain at
    zero, measurement noise variance 1, process noise covariance identity.
    """

    pos: float = 0.0
    vel: float = 0.0
    p00: float = 1.0
    p01: float = 0.0
    p10: float = 0.0
    p11: float = 1.0
    k0: float = 0.0
    k1: float = 0.0

    def step(self, z: float, dt: float) -> tuple[float, float]:
        """Predict then update with measurement z.

        Returns (position innovation, predicted velocity); the innovation is
        z minus the predicted position.
        """
        pred_pos = self.pos + dt * self.vel
        pred_vel = self.vel
        p00 = self.p00 + dt * (self.p01 + self.p10) + dt * dt * self.p11 + 1.0
        p01 = self.p01 + dt * self.p11
        p10 = self.p10 + dt * self.p11
        p11 = self.p11 + 1.0
        s = p00 + 1.0
        k0 = p00 / s
        k1 = p10 / s
        innovation = z - pred_pos
        self.pos = pred_pos + k0 * innovation
        self.vel = pred_vel + k1 * innovation
        self.p00 = (1.0 - k0) * p00
        self.p01 = (1.0 - k0) * p01
        self.p10 = p10 - k1 * p00
        self.p11 = p11 - k1 * p01
        self.k0, self.k1 = k0, k1
        return innovation, pred_vel

    @property
    def covariance(self) -> np.ndarray:
        return np.array([[self.p00, self.p01], [self.p10, self.p11]])


@dataclass
class KalmanState:
    """Two independent per-channel filters sharing one time step."""

    dt: float
    x: ChannelState = field(default_factory=ChannelState)
    y: ChannelState = field(default_factory=ChannelState)

    def step(self, measurement: tuple[float, float]) -> tuple[float, float]:
        """Advance both channels; returns per-channel position innovations."""
        ix, _ = self.x.step(measurement[0], self.dt)
        iy, _ = self.y.step(measurement[1], self.dt)
        return ix, iy


class Chi2Tracker:
    """Windowed chi-square statistic over per-step residual energy.

    Each push adds (rx^2 + ry^2) / deviation to a running cumulative sum;
    ``delta`` is the difference between the cumulative value now and
    ``window_size`` steps ago, i.e. the exact sum of the last window of
    increments.
    """

    def __init__(self, window_size: int, deviation: float):
        if window_size < 2:
            raise ValueError("window_size must be >= 2")
        if deviation <= 0:
            raise ValueError("deviation must be positive")
        self.window_size = int(window_size)
        self.deviation = float(deviation)
        self.cumulative = 0.0
        self._window: deque[float] = deque(maxlen=self.window_size)

    def push(self, residual_x: float, residual_y: float) -> float:
        q = (residual_x * residual_x + residual_y * residual_y) / self.deviation
        self.cumulative += q
        self._window.append(q)
        return self.delta

    @property
    def delta(self) -> float:
        # fsum keeps the window total exactly equal to the closed form on
        # constant-residual streams
        return math.fsum(self._window)


_GAIN_CACHE: dict[float, tuple[np.ndarray, np.ndarray]] = {}


def _gain_schedule(dt: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Kalman gains per step; measurement-independent, so cached per dt."""
    cached = _GAIN_CACHE.get(dt)
    if cached is not None and len(cached[0]) >= n:
        return cached[0][:n], cached[1][:n]
    size = max(n, 4096)
    k0s = np.empty(size)
    k1s = np.empty(size)
    p00, p01, p10, p11 = 1.0, 0.0, 0.0, 1.0
    for i in range(size):
        q00 = p00 + dt * (p01 + p10) + dt * dt * p11 + 1.0
        q01 = p01 + dt * p11
        q10 = p10 + dt * p11
        q11 = p11 + 1.0
        s = q00 + 1.0
        k0 = q00 / s
        k1 = q10 / s
        p00 = (1.0 - k0) * q00
        p01 = (1.0 - k0) * q01
        p10 = q10 - k1 * q00
        p11 = q11 - k1 * q01
        k0s[i] = k0
        k1s[i] = k1
    _GAIN_CACHE[dt] = (k0s, k1s)
    return k0s[:n], k1s[:n]


def _velocity_residuals(z: np.ndarray, dt: float) -> np.ndarray:
    """Predicted-minus-observed velocity per step for one channel.

    Observed velocity is the backward difference scaled to deg/s (zero at the
    first step, matching the zero-initialized measurement); predicted velocity
    is the filter's estimate before the update.
    """
    n = len(z)
    if n == 0:
        return np.empty(0)
    k0a, k1a = _gain_schedule(dt, n)
    zl = np.asarray(z, dtype=float).tolist()
    k0l = k0a.tolist()
    k1l = k1a.tolist()
    rate = 1.0 / dt
    out = [0.0] * n
    pos = 0.0
    vel = 0.0
    prev = 0.0
    for i in range(n):
        zi = zl[i]
        pred_pos = pos + dt * vel
        v_obs = (zi - prev) * rate if i > 0 else 0.0
        out[i] = vel - v_obs
        innovation = zi - pred_pos
        pos = pred_pos + k0l[i] * innovation
        vel = vel + k1l[i] * innovation
        prev = zi
    return np.asarray(out)


def ikf_labels(
    x: np.ndarray,
    y: np.ndarray,
    chi2_threshold: float,
    window_size: int,
    deviation: float,
    rate_hz: float,
) -> np.ndarray:
    """Per-sample fixation labels from the Kalman chi-square detector.

    A sample is fixation when the windowed chi-square value stays below the
    threshold.
    """
    if chi2_threshold <= 0:
        raise ValueError("chi2 threshold must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    dt = 1.0 / rate_hz
    rx = _velocity_residuals(x, dt).tolist()
    ry = _velocity_residuals(y, dt).tolist()
    tracker = Chi2Tracker(window_size, deviation)
    push = tracker.push
    return np.fromiter(
        (push(a, b) < chi2_threshold for a, b in zip(rx, ry)), dtype=bool, count=len(rx)
    )


# ---------------------------------------------------------------------------
# Estimator API


class FixationClassifier(BaseEstimator):
    """Base class for the fixation classifiers.

    ``predict`` maps an (n, 2) array of gaze positions to boolean per-sample
    fixation labels; ``segment`` additionally returns the fixation runs the
    interaction layer consumes. ``fit`` only validates (the algorithms carry
    no learned state) and is provided for pipeline compatibility.
    """

    algorithm = ""

    def fit(self, X, y=None):
        self._check_params()
        X = self._check_X(X)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X) -> np.ndarray:
        labels, _ = self.segment(X)
        return labels

    def segment(self, X, t_ms: np.ndarray | None = None) -> tuple[np.ndarray, list[FixationRun]]:
        """Classify one stream causally; returns (labels, fixation runs)."""
        self._check_params()
        X = self._check_X(X)
        if t_ms is None:
            t_ms = np.round(np.arange(len(X)) * 1000.0 / self.rate_hz).astype(np.int64)
        return self._segment(X[:, 0], X[:, 1], np.asarray(t_ms))

    def _check_X(self, X) -> np.ndarray:
        X = check_array(X, dtype=np.float64, ensure_2d=True)
        if X.shape[1] != 2:
            raise ValueError(f"expected (n, 2) gaze positions, got shape {X.shape}")
        return X

    def _check_params(self) -> None:
        if self.rate_hz <= 0:
            raise ValueError("rate_hz must be positive")

    def _segment(self, x, y, t_ms):
        labels = self._classify(x, y)
        return labels, labels_to_runs(labels, t_ms)

    def _classify(self, x, y) -> np.ndarray:
        raise NotImplementedError


class IVTClassifier(FixationClassifier):
    """Fixation when instantaneous velocity stays below a threshold (deg/s)."""

    algorithm = "ivt"

    def __init__(self, velocity_threshold_deg_s: float = 30.0, rate_hz: float = 1000.0):
        self.velocity_threshold_deg_s = velocity_threshold_deg_s
        self.rate_hz = rate_hz

    def _check_params(self) -> None:
        super()._check_params()
        if self.velocity_threshold_deg_s <= 0:
            raise ValueError("velocity_threshold_deg_s must be positive")

    def _classify(self, x, y):
        return ivt_labels(x, y, self.velocity_threshold_deg_s, self.rate_hz)


class IDTClassifier(FixationClassifier):
    """Fixation runs grown while window dispersion stays within a threshold."""

    algorithm = "idt"

    def __init__(
        self,
        dispersion_threshold_dva: float = 0.5,
        min_duration_ms: float = 30.0,
        rate_hz: float = 1000.0,
    ):
        self.dispersion_threshold_dva = dispersion_threshold_dva
        self.min_duration_ms = min_duration_ms
        self.rate_hz = rate_hz

    def _check_params(self) -> None:
        super()._check_params()
        if self.dispersion_threshold_dva <= 0:
            raise ValueError("dispersion_threshold_dva must be positive")
        if self.min_duration_ms <= 0:
            raise ValueError("min_duration_ms must be positive")

    def _segment(self, x, y, t_ms):
        runs = idt_runs(
            x, y, t_ms, self.dispersion_threshold_dva, self.min_duration_ms, self.rate_hz
        )
        labels = np.zeros(len(x), dtype=bool)
        for run in runs:
            labels[run.start_idx : run.end_idx + 1] = True
        return labels, runs

    def _classify(self, x, y):
        raise NotImplementedError("IDT segments runs directly")


class IKFClassifier(FixationClassifier):
    """Fixation while the windowed Kalman chi-square stays below a threshold."""

    algorithm = "ikf"

    def __init__(
        self,
        chi2_threshold: float = 3.75,
        window_size: int = 5,
        deviation: float = 1000.0,
        rate_hz: float = 1000.0,
    ):
        self.chi2_threshold = chi2_threshold
        self.window_size = window_size
        self.deviation = deviation
        self.rate_hz = rate_hz

    def _check_params(self) -> None:
        super()._check_params()
        if self.chi2_threshold <= 0:
            raise ValueError("chi2_threshold must be positive")
        if self.window_size < 2:
            raise ValueError("window_size must be >= 2")
        if self.deviation <= 0:
            raise ValueError("deviation must be positive")

    def _classify(self, x, y):
        return ikf_labels(
            x, y, self.chi2_threshold, self.window_size, self.deviation, self.rate_hz
        )


CLASSIFIERS = {
    "ivt": IVTClassifier,
    "idt": IDTClassifier,
    "ikf": IKFClassifier,
}


def make_classifier(algorithm: str, **params) -> FixationClassifier:
    """Instantiate a classifier by name with keyword parameter overrides."""
    try:
        cls = CLASSIFIERS[algorithm.lower()]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}, expected one of {sorted(CLASSIFIERS)}")
    return cls(**params)
