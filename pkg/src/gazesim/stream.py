"""Replay a recording as a causal sample stream with online gap filling.

Missing samples are replaced with the most recent valid point (or (0, 0)
when the stream starts on a gap). Fill state is global to the recording: a
gap crossing a target boundary is filled from before the boundary, exactly
as a live system would experience it.
"""
from __future__ import annotations

import time
from typing import Iterator

import numpy as np

from .core import GazeSample, Recording


def fill_positions(recording: Recording) -> tuple[np.ndarray, np.ndarray]:
    """Forward-filled (x, y) arrays for the whole recording.

    Equivalent to draining a StreamCursor; the value at index i depends only
    on raw samples 0..i.
    """
    n = recording.n_samples
    if n == 0:
        return np.empty(0), np.empty(0)
    idx = np.where(recording.valid, np.arange(n), -1)
    np.maximum.accumulate(idx, out=idx)
    has_src = idx >= 0
    src = np.where(has_src, idx, 0)
    x = np.where(has_src, recording.x_dva[src], 0.0)
    y = np.where(has_src, recording.y_dva[src], 0.0)
    return x, y


class StreamCursor:
    """Single-consumer iterator emitting filled samples in time order.

    With ``pace=True`` the cursor sleeps out the inter-sample interval so the
    replay approximates wall-clock rate; evaluation runs leave it off.
    """

    def __init__(self, recording: Recording, pace: bool = False):
        self.recording = recording
        self.pace = pace
        self._i = 0
        self._last_valid = (0.0, 0.0)
        self._prev_t: int | None = None

    def __iter__(self) -> Iterator[GazeSample]:
        return self

    def __next__(self) -> GazeSample:
        sample = self.next_sample()
        if sample is None:
            raise StopIteration
        return sample

    def next_sample(self) -> GazeSample | None:
        rec = self.recording
        if self._i >= rec.n_samples:
            return None
        i = self._i
        self._i += 1
        t = int(rec.t_ms[i])
        if self.pace and self._prev_t is not None:
            time.sleep((t - self._prev_t) / 1000.0)
        self._prev_t = t
        if rec.valid[i]:
            x, y = float(rec.x_dva[i]), float(rec.y_dva[i])
            self._last_valid = (x, y)
            return GazeSample(t, x, y, True)
        x, y = self._last_valid
        return GazeSample(t, x, y, False)


def stream_window(recording: Recording, from_ms: int, to_ms: int) -> list[GazeSample]:
    """Filled samples with from_ms <= t_ms < to_ms.

    Fill state is consistent with a single pass from the stream start, so a
    window opening inside a gap carries the pre-window fill value.
    """
    if from_ms > to_ms:
        raise ValueError("from_ms must not exceed to_ms")
    x, y = fill_positions(recording)
    lo, hi = np.searchsorted(recording.t_ms, [from_ms, to_ms], side="left")
    return [
        GazeSample(int(recording.t_ms[i]), float(x[i]), float(y[i]), bool(recording.valid[i]))
        for i in range(lo, hi)
    ]
