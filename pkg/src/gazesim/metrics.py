"""Selection-quality metrics: success rate, angular offset, percentile tiers.

Spatial accuracy is the angular offset between the selected dwell window's
gaze centroid and the target center. Per-user error percentiles (E50/E75/E95)
are pooled across a subject's sessions; population tiers (U50/U75/U95) are
percentiles taken over those per-user values.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .core import SimConfig, TriggerEvent

E_TIERS = (50, 75, 95)
U_TIERS = (50, 75, 95)


def angular_offset(
    gaze: Sequence[float], target: Sequence[float], mode: str = "arccos3d"
) -> float:
    """Angular distance in degrees between a gaze point and a target.

    "arccos3d" reconstructs 3D view directions from the dva coordinates via
    the tangent map and measures the angle between them; "planar" is the
    small-angle surrogate, the plain Euclidean distance in dva.
    """
    if mode == "planar":
        return math.hypot(gaze[0] - target[0], gaze[1] - target[1])
    if mode != "arccos3d":
        raise ValueError(f"unknown offset mode {mode!r}")
    gx = math.tan(math.radians(gaze[0]))
    gy = math.tan(math.radians(gaze[1]))
    tx = math.tan(math.radians(target[0]))
    ty = math.tan(math.radians(target[1]))
    dot = gx * tx + gy * ty + 1.0
    norm = math.sqrt((gx * gx + gy * gy + 1.0) * (tx * tx + ty * ty + 1.0))
    cosine = min(1.0, max(-1.0, dot / norm))
    return math.degrees(math.acos(cosine))


def success_rate_recording(events: Sequence[TriggerEvent | None]) -> float:
    """Percent of targets with a defined trigger event, for one recording."""
    if len(events) == 0:
        raise ValueError("recording has no targets")
    defined = sum(1 for e in events if e is not None)
    return 100.0 * defined / len(events)


def success_rate_overall(per_recording_rates: Sequence[float]) -> float:
    """Arithmetic mean of per-recording success rates."""
    if len(per_recording_rates) == 0:
        raise ValueError("no recordings")
    return float(sum(per_recording_rates)) / len(per_recording_rates)


def percentile(values: Sequence[float], p: float) -> float:
    """Linear-interpolation percentile (rank = p/100 * (n-1))."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("empty values")
    if not 0 <= p <= 100:
        raise ValueError("p must be in [0, 100]")
    return float(np.percentile(arr, p, method="linear"))


@dataclass(frozen=True)
class UserErrorSummary:
    """Angular-offset percentiles for one subject, pooled across sessions."""

    subject_id: str
    e50: float
    e75: float
    e95: float
    n_events: int

    def to_dict(self) -> dict:
        return {
            "subject_id": self.subject_id,
            "E50": self.e50,
            "E75": self.e75,
            "E95": self.e95,
            "n_events": self.n_events,
        }


@dataclass(frozen=True)
class RecordingResult:
    """Per-target trigger events of one simulated recording."""

    subject_id: str
    session_id: str
    events: tuple[TriggerEvent | None, ...]

    @property
    def key(self) -> str:
        return f"{self.subject_id}/{self.session_id}"

    @property
    def n_targets(self) -> int:
        return len(self.events)

    @property
    def defined_events(self) -> tuple[TriggerEvent, ...]:
        return tuple(e for e in self.events if e is not None)


@dataclass
class QualityReport:
    """Aggregate quality of one simulation configuration over a corpus."""

    config: dict
    n_recordings: int
    n_targets: int
    n_trigger_events: int
    success_rate_pct: float
    per_recording_success_pct: dict[str, float]
    user_summaries: tuple[UserErrorSummary, ...]
    u_tiers: dict[str, float]
    onset_median_ms: float | None
    onset_sd_ms: float | None
    diagnostics: dict

    @property
    def fingerprint(self) -> str:
        blob = json.dumps(self.config, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "config_fingerprint": self.fingerprint,
            "n_recordings": self.n_recordings,
            "n_targets": self.n_targets,
            "n_trigger_events": self.n_trigger_events,
            "success_rate_pct": self.success_rate_pct,
            "per_recording_success_pct": dict(sorted(self.per_recording_success_pct.items())),
            "users": [u.to_dict() for u in self.user_summaries],
            "u_tiers": self.u_tiers,
            "onset_median_ms": self.onset_median_ms,
            "onset_sd_ms": self.onset_sd_ms,
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def build_report(results: Sequence[RecordingResult], config: SimConfig) -> QualityReport:
    """Aggregate per-recording trigger events into one quality report.

    Subjects with zero events under a harsh configuration contribute no user
    summary; they are counted in the diagnostics block instead. Onset spread
    uses the population standard deviation.
    """
    if len(results) == 0:
        raise ValueError("no recordings")
    ordered = sorted(results, key=lambda r: (r.subject_id, r.session_id))

    per_rec = {r.key: success_rate_recording(r.events) for r in ordered}
    overall = success_rate_overall([per_rec[r.key] for r in ordered])

    by_subject: dict[str, list[float]] = {}
    onsets: list[float] = []
    n_events = 0
    n_targets = 0
    n_contaminated = 0
    for r in ordered:
        offsets = by_subject.setdefault(r.subject_id, [])
        n_targets += r.n_targets
        for e in r.defined_events:
            offsets.append(e.angular_offset_deg)
            onsets.append(float(e.onset_latency_ms))
            n_events += 1
            if e.contaminated_samples > 0:
                n_contaminated += 1

    summaries = []
    silent_subjects = []
    for subject in sorted(by_subject):
        offs = by_subject[subject]
        if not offs:
            silent_subjects.append(subject)
            continue
        summaries.append(
            UserErrorSummary(
                subject_id=subject,
                e50=percentile(offs, 50),
                e75=percentile(offs, 75),
                e95=percentile(offs, 95),
                n_events=len(offs),
            )
        )

    u_tiers: dict[str, float] = {}
    if summaries:
        for e_tier in E_TIERS:
            per_user = [getattr(s, f"e{e_tier}") for s in summaries]
            for u_tier in U_TIERS:
                u_tiers[f"u{u_tier}_e{e_tier}"] = percentile(per_user, u_tier)

    onset_median = percentile(onsets, 50) if onsets else None
    onset_sd = float(np.std(np.asarray(onsets))) if onsets else None

    return QualityReport(
        config=config.to_dict(),
        n_recordings=len(ordered),
        n_targets=n_targets,
        n_trigger_events=n_events,
        success_rate_pct=overall,
        per_recording_success_pct=per_rec,
        user_summaries=tuple(summaries),
        u_tiers=u_tiers,
        onset_median_ms=onset_median,
        onset_sd_ms=onset_sd,
        diagnostics={
            "n_contaminated_events": n_contaminated,
            "n_targets_without_event": n_targets - n_events,
            "n_subjects_without_events": len(silent_subjects),
            "subjects_without_events": silent_subjects,
        },
    )


def write_report_json(report: QualityReport, path: str | Path) -> None:
    Path(path).write_text(report.to_json(), encoding="utf-8")


def write_users_csv(report: QualityReport, target: str | Path | IO) -> None:
    """Per-user error percentiles: subject_id, E50, E75, E95."""
    _write_csv(
        target,
        ["subject_id", "E50", "E75", "E95"],
        (
            [u.subject_id, repr(u.e50), repr(u.e75), repr(u.e95)]
            for u in report.user_summaries
        ),
    )


def write_sweep_csv(
    rows: Sequence[tuple[int, int, str, float]], target: str | Path | IO
) -> None:
    """Sweep table: one row per (buffer_ms, dwell_ms, algorithm) cell."""
    _write_csv(
        target,
        ["buffer_ms", "dwell_ms", "algorithm", "success_rate_pct"],
        ([b, d, algo, repr(rate)] for b, d, algo, rate in rows),
    )


def _write_csv(target: str | Path | IO, header: list[str], rows) -> None:
    if isinstance(target, (str, Path)):
        handle = open(target, "w", encoding="utf-8", newline="")
        owned = True
    else:
        handle, owned = target, False
    try:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if owned:
            handle.close()
