"""Deterministic synthetic recordings in the jumping-target protocol.

A target jumps around a rectangular range, dwelling at each spot; the
simulated gaze holds the previous position through a reaction latency, ramps
linearly to the new target, then fixates on it with optional Gaussian noise,
a constant calibration bias, and random sample dropout. The generator also
returns its own ground-truth fixation labels for classifier tuning tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Recording, TargetSegment


@dataclass(frozen=True)
class SynthConfig:
    """Parameters of one synthetic recording."""

    n_targets: int = 10
    target_dwell_ms: int = 1000
    target_x_range_dva: float = 15.0
    target_y_range_dva: float = 9.0
    min_displacement_dva: float = 2.0
    saccade_latency_ms: int = 200
    saccade_duration_ms: int = 30
    fixation_noise_sd_dva: float = 0.0
    drift_deg_s: float = 0.0
    nan_rate: float = 0.0
    calibration_offset_dva: tuple[float, float] = (0.0, 0.0)
    rng_seed: int = 0
    rate_hz: float = 1000.0

    def __post_init__(self) -> None:
        if self.n_targets < 1:
            raise ValueError("n_targets must be >= 1")
        if self.target_x_range_dva <= 0 or self.target_y_range_dva <= 0:
            raise ValueError("target ranges must be positive")
        if not 0 <= self.nan_rate < 1:
            raise ValueError("nan_rate must be in [0, 1)")
        if self.fixation_noise_sd_dva < 0:
            raise ValueError("fixation_noise_sd_dva must be non-negative")
        if self.drift_deg_s < 0:
            raise ValueError("drift_deg_s must be non-negative")
        if self.min_displacement_dva < 0:
            raise ValueError("min_displacement_dva must be non-negative")
        period = 1000.0 / self.rate_hz
        if abs(period - round(period)) > 1e-9:
            raise ValueError("rate_hz must divide 1000 (integer-ms timeline)")
        n_lat = math.ceil(self.saccade_latency_ms / period)
        n_sac = math.ceil(self.saccade_duration_ms / period)
        n_seg = round(self.target_dwell_ms / period)
        if n_lat + n_sac >= n_seg:
            raise ValueError(
                "saccade latency + duration must leave room for a fixation within the target dwell"
            )


def _draw_targets(cfg: SynthConfig, rng: np.random.Generator) -> np.ndarray:
    xr, yr = cfg.target_x_range_dva, cfg.target_y_range_dva
    max_jump = math.hypot(2 * xr, 2 * yr)
    if cfg.min_displacement_dva >= max_jump:
        raise ValueError("min displacement exceeds the target range diagonal")
    positions = np.empty((cfg.n_targets, 2))
    prev = None
    for i in range(cfg.n_targets):
        for attempt in range(1000):
            cand = np.array([rng.uniform(-xr, xr), rng.uniform(-yr, yr)])
            if prev is None or math.hypot(*(cand - prev)) >= cfg.min_displacement_dva:
                positions[i] = cand
                prev = cand
                break
        else:
            raise ValueError("could not satisfy the displacement constraint in 1000 draws")
    return positions


def synthesize_labeled_recording(
    cfg: SynthConfig,
    subject_id: str = "synth",
    session_id: str = "1",
) -> tuple[Recording, np.ndarray]:
    """Build a recording plus its ground-truth fixation labels.

    Truth marks the linear ramp samples (the ones whose backward difference
    carries the jump) as non-fixation and everything else as fixation, so a
    velocity-aligned classifier can reach exact agreement on noise-free data.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    period = int(round(1000.0 / cfg.rate_hz))
    n_seg = round(cfg.target_dwell_ms / (1000.0 / cfg.rate_hz))
    n_lat = math.ceil(cfg.saccade_latency_ms / (1000.0 / cfg.rate_hz))
    n_sac = math.ceil(cfg.saccade_duration_ms / (1000.0 / cfg.rate_hz))
    n = cfg.n_targets * n_seg

    centers = _draw_targets(cfg, rng)
    x = np.empty(n)
    y = np.empty(n)
    truth = np.ones(n, dtype=bool)
    prev = np.zeros(2)
    for i, center in enumerate(centers):
        base = i * n_seg
        # hold the previous fixation through the reaction latency
        x[base : base + n_lat] = prev[0]
        y[base : base + n_lat] = prev[1]
        # linear ramp onto the new target over n_sac samples
        ramp = np.linspace(0.0, 1.0, n_sac + 1)[1:]
        x[base + n_lat : base + n_lat + n_sac] = prev[0] + ramp * (center[0] - prev[0])
        y[base + n_lat : base + n_lat + n_sac] = prev[1] + ramp * (center[1] - prev[1])
        truth[base + n_lat : base + n_lat + n_sac] = False
        # fixate on the target for the rest of the segment
        x[base + n_lat + n_sac : base + n_seg] = center[0]
        y[base + n_lat + n_sac : base + n_seg] = center[1]
        prev = center

    if cfg.fixation_noise_sd_dva > 0:
        noise = rng.normal(0.0, cfg.fixation_noise_sd_dva, size=(n, 2))
        ramp_mask = ~truth
        noise[ramp_mask] = 0.0
        x = x + noise[:, 0]
        y = y + noise[:, 1]
    if cfg.drift_deg_s > 0:
        # slow smooth ocular wander: piecewise-constant velocity per segment,
        # far below saccade speeds but visible to dispersion over long windows
        vel = rng.normal(0.0, cfg.drift_deg_s, size=(cfg.n_targets, 2))
        steps = np.repeat(vel, n_seg, axis=0) / cfg.rate_hz
        drift = np.cumsum(steps, axis=0)
        x = x + drift[:, 0]
        y = y + drift[:, 1]
    x = x + cfg.calibration_offset_dva[0]
    y = y + cfg.calibration_offset_dva[1]

    valid = np.ones(n, dtype=bool)
    if cfg.nan_rate > 0:
        valid = rng.random(n) >= cfg.nan_rate
        x = np.where(valid, x, np.nan)
        y = np.where(valid, y, np.nan)

    t_ms = np.arange(n, dtype=np.int64) * period
    targets = tuple(
        TargetSegment(
            index=i,
            x_dva=float(centers[i, 0]),
            y_dva=float(centers[i, 1]),
            onset_ms=int(i * n_seg * period),
            offset_ms=int((i + 1) * n_seg * period),
        )
        for i in range(cfg.n_targets)
    )
    recording = Recording(
        subject_id=subject_id,
        session_id=session_id,
        rate_hz=cfg.rate_hz,
        t_ms=t_ms,
        x_dva=x,
        y_dva=y,
        valid=valid,
        targets=targets,
    )
    return recording, truth


def synthesize_recording(
    cfg: SynthConfig, subject_id: str = "synth", session_id: str = "1"
) -> Recording:
    """Build a synthetic recording (see synthesize_labeled_recording)."""
    return synthesize_labeled_recording(cfg, subject_id, session_id)[0]
