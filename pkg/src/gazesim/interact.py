"""Dwell-window enumeration and trigger-event selection per target.

For each target, every dwell-length sub-window of every fixation run inside
the buffer interval is a selection candidate; the one whose gaze centroid
lies closest to the target becomes that target's trigger event. Classifier
state runs continuously across target boundaries, as a live system's would.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.base import clone

from .core import FixationRun, Recording, SimConfig, TargetSegment, TriggerEvent, dwell_sample_count
from .metrics import angular_offset
from .stream import fill_positions


@dataclass(frozen=True, slots=True)
class CandidateWindow:
    """One dwell-length all-fixation window inside a target's buffer."""

    start_idx: int
    end_idx: int
    centroid_x_dva: float
    centroid_y_dva: float
    distance_dva: float


def _candidate_arrays(
    runs: Sequence[FixationRun],
    x: np.ndarray,
    y: np.ndarray,
    lo: int,
    hi: int,
    window: int,
    tx: float,
    ty: float,
) -> Iterator[tuple[int, np.ndarray, np.ndarray, np.ndarray]]:
    """Per clipped run: (first start index, window means x, means y, distances).

    Window means use the same per-window reduction as np.mean over the slice,
    so candidate centroids are identical whichever way they are enumerated.
    """
    for run in runs:
        s0 = max(run.start_idx, lo)
        e0 = min(run.end_idx, hi - 1)
        if e0 - s0 + 1 < window:
            continue
        mx = sliding_window_view(x[s0 : e0 + 1], window).mean(axis=1)
        my = sliding_window_view(y[s0 : e0 + 1], window).mean(axis=1)
        dist = np.hypot(mx - tx, my - ty)
        yield s0, mx, my, dist


def enumerate_candidates(
    runs: Sequence[FixationRun],
    x: np.ndarray,
    y: np.ndarray,
    t_ms: np.ndarray,
    target: TargetSegment,
    dwell_ms: int,
    buffer_ms: int,
    rate_hz: float,
) -> list[CandidateWindow]:
    """All dwell-length fixation windows inside [onset, onset + buffer).

    Runs that began before the target's onset contribute their clipped
    portion; ordering is by window start.
    """
    if dwell_ms > buffer_ms:
        raise ValueError("dwell_ms must not exceed buffer_ms")
    w = dwell_sample_count(dwell_ms, rate_hz)
    lo, hi = np.searchsorted(t_ms, [target.onset_ms, target.onset_ms + buffer_ms], side="left")
    out: list[CandidateWindow] = []
    for s0, mx, my, dist in _candidate_arrays(runs, x, y, int(lo), int(hi), w, target.x_dva, target.y_dva):
        for k in range(len(dist)):
            out.append(
                CandidateWindow(
                    start_idx=s0 + k,
                    end_idx=s0 + k + w - 1,
                    centroid_x_dva=float(mx[k]),
                    centroid_y_dva=float(my[k]),
                    distance_dva=float(dist[k]),
                )
            )
    return out


def select_closest(candidates: Sequence[CandidateWindow]) -> CandidateWindow | None:
    """The candidate with the smallest distance; earliest start wins ties."""
    best: CandidateWindow | None = None
    for cand in candidates:
        if best is None or cand.distance_dva < best.distance_dva:
            best = cand
    return best


def _best_window(
    runs: Sequence[FixationRun],
    x: np.ndarray,
    y: np.ndarray,
    lo: int,
    hi: int,
    window: int,
    tx: float,
    ty: float,
) -> tuple[int, float, float, float] | None:
    """(start_idx, centroid_x, centroid_y, distance) of the closest window."""
    best = None
    for s0, mx, my, dist in _candidate_arrays(runs, x, y, lo, hi, window, tx, ty):
        k = int(np.argmin(dist))
        d = float(dist[k])
        if best is None or d < best[3]:
            best = (s0 + k, float(mx[k]), float(my[k]), d)
    return best


def define_triggers(
    recording: Recording,
    runs: Sequence[FixationRun],
    x: np.ndarray,
    y: np.ndarray,
    dwell_ms: int,
    buffer_ms: int,
    offset_mode: str,
) -> list[TriggerEvent | None]:
    """Select one trigger event (or none) per target from fixed runs."""
    w = dwell_sample_count(dwell_ms, recording.rate_hz)
    t = recording.t_ms
    events: list[TriggerEvent | None] = []
    for target in recording.targets:
        lo, hi = np.searchsorted(t, [target.onset_ms, target.onset_ms + buffer_ms], side="left")
        best = _best_window(runs, x, y, int(lo), int(hi), w, target.x_dva, target.y_dva)
        if best is None:
            events.append(None)
            continue
        s, cx, cy, dist = best
        e = s + w - 1
        events.append(
            TriggerEvent(
                target_index=target.index,
                window_start_ms=int(t[s]),
                window_end_ms=int(t[e]),
                centroid_x_dva=cx,
                centroid_y_dva=cy,
                distance_dva=dist,
                angular_offset_deg=angular_offset((cx, cy), (target.x_dva, target.y_dva), offset_mode),
                onset_latency_ms=int(t[e]) - target.onset_ms,
                contaminated_samples=int(np.count_nonzero(~recording.valid[s : e + 1])),
            )
        )
    return events


def simulate_recording(recording: Recording, config: SimConfig) -> list[TriggerEvent | None]:
    """Run the full pipeline on one recording: fill, classify, select.

    The classifier is cloned and retuned to the recording's sampling rate;
    classification is one continuous causal pass, so fixations crossing
    target boundaries carry over and only the buffer clipping constrains
    candidates.
    """
    x, y = fill_positions(recording)
    est = clone(config.classifier).set_params(rate_hz=recording.rate_hz)
    _, runs = est.segment(np.column_stack([x, y]), recording.t_ms)
    return define_triggers(
        recording, runs, x, y, config.dwell_ms, config.buffer_ms, config.offset_mode
    )


def write_triggers_csv(
    events: Sequence[TriggerEvent | None], target: str | Path | IO
) -> None:
    """Dump the defined trigger events of one recording."""
    if isinstance(target, (str, Path)):
        handle = open(target, "w", encoding="utf-8", newline="")
        owned = True
    else:
        handle, owned = target, False
    try:
        writer = csv.writer(handle)
        writer.writerow(
            [
                "target_index",
                "window_start_ms",
                "window_end_ms",
                "centroid_x",
                "centroid_y",
                "distance_dva",
                "angular_offset_deg",
                "onset_latency_ms",
                "contaminated_samples",
            ]
        )
        for e in events:
            if e is None:
                continue
            writer.writerow(
                [
                    e.target_index,
                    e.window_start_ms,
                    e.window_end_ms,
                    repr(e.centroid_x_dva),
                    repr(e.centroid_y_dva),
                    repr(e.distance_dva),
                    repr(e.angular_offset_deg),
                    e.onset_latency_ms,
                    e.contaminated_samples,
                ]
            )
    finally:
        if owned:
            handle.close()
