"""Parse and serialize recording CSVs and segment target sequences.

The default layout has a header row with columns n (timestamp ms), x, y
(gaze, dva), xT, yT (target, dva); missing gaze is the literal "NaN"
(case-insensitive) or an empty field. Column names are overridable because
exported files differ between tools.
"""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Sequence

import numpy as np

from .core import Recording, TargetSegment


class ParseError(ValueError):
    """Malformed recording file; message carries the offending line."""


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for recording CSVs."""

    time: str = "n"
    x: str = "x"
    y: str = "y"
    target_x: str = "xT"
    target_y: str = "yT"
    missing_tokens: tuple[str, ...] = ("nan", "")

    def __post_init__(self) -> None:
        cols = [self.time, self.x, self.y, self.target_x, self.target_y]
        if len(set(cols)) != len(cols):
            raise ValueError(f"schema columns must be distinct, got {cols}")

    @classmethod
    def from_dict(cls, d: dict) -> "CsvSchema":
        kwargs = dict(d)
        if "missing_tokens" in kwargs:
            kwargs["missing_tokens"] = tuple(t.lower() for t in kwargs["missing_tokens"])
        return cls(**kwargs)


DEFAULT_SCHEMA = CsvSchema()

_FILENAME_ID = re.compile(r"^S_(?P<subject>[A-Za-z0-9]+)_S(?P<session>[0-9]+)")


def ids_from_name(name: str) -> tuple[str, str]:
    """Subject/session ids from a file stem; falls back to (stem, "1")."""
    m = _FILENAME_ID.match(name)
    if m:
        return m.group("subject"), m.group("session")
    return name, "1"


def segment_targets(
    t_ms: Sequence[int],
    target_x: Sequence[float],
    target_y: Sequence[float],
    period_ms: int = 1,
) -> tuple[TargetSegment, ...]:
    """Maximal runs of constant target position.

    Exact equality defines a run: stimulus positions are program-generated,
    so no epsilon applies. The last segment is closed one sample period after
    the final timestamp.
    """
    t = np.asarray(t_ms)
    tx = np.asarray(target_x, dtype=float)
    ty = np.asarray(target_y, dtype=float)
    if len(t) == 0:
        raise ValueError("empty target sequence")
    if not (np.all(np.isfinite(tx)) and np.all(np.isfinite(ty))):
        raise ValueError("target positions must be finite")
    changes = np.flatnonzero((np.diff(tx) != 0) | (np.diff(ty) != 0)) + 1
    starts = np.concatenate([[0], changes])
    ends_t = np.concatenate([t[changes], [t[-1] + period_ms]])
    return tuple(
        TargetSegment(
            index=k,
            x_dva=float(tx[s]),
            y_dva=float(ty[s]),
            onset_ms=int(t[s]),
            offset_ms=int(e),
        )
        for k, (s, e) in enumerate(zip(starts, ends_t))
    )


def _open_source(source: str | Path | IO) -> tuple[IO, bool]:
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline=""), True
    if isinstance(source, (io.RawIOBase, io.BufferedIOBase)):
        return io.TextIOWrapper(source, encoding="utf-8", newline=""), False
    return source, False


def parse_recording(
    source: str | Path | IO,
    schema: CsvSchema = DEFAULT_SCHEMA,
    subject_id: str | None = None,
    session_id: str | None = None,
    rate_hz: float = 1000.0,
) -> Recording:
    """Parse one recording CSV.

    Missing gaze samples keep valid=False with NaN coordinates; timestamps
    are normalized to recording-relative time. Raises ParseError with the
    line number on malformed rows, non-monotone timestamps, or fewer than 2
    samples.
    """
    if subject_id is None or session_id is None:
        stem = Path(source).stem if isinstance(source, (str, Path)) else "unknown"
        sub, sess = ids_from_name(stem)
        subject_id = subject_id or sub
        session_id = session_id or sess
    handle, owned = _open_source(source)
    try:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise ParseError("empty file: missing header row")
        needed = [schema.time, schema.x, schema.y, schema.target_x, schema.target_y]
        missing_cols = [c for c in needed if c not in reader.fieldnames]
        if missing_cols:
            raise ParseError(f"header is missing columns {missing_cols}")
        missing = set(schema.missing_tokens)

        t_ms: list[int] = []
        xs: list[float] = []
        ys: list[float] = []
        valid: list[bool] = []
        txs: list[float] = []
        tys: list[float] = []
        for row in reader:
            line_no = reader.line_num
            try:
                t = float(row[schema.time])
                raw_x = (row[schema.x] or "").strip()
                raw_y = (row[schema.y] or "").strip()
                tx = float(row[schema.target_x])
                ty = float(row[schema.target_y])
            except (TypeError, ValueError, KeyError) as exc:
                raise ParseError(f"line {line_no}: malformed row ({exc})") from exc
            if not (math.isfinite(t) and math.isfinite(tx) and math.isfinite(ty)):
                raise ParseError(f"line {line_no}: non-finite timestamp or target")
            is_missing = raw_x.lower() in missing or raw_y.lower() in missing
            if not is_missing:
                try:
                    x = float(raw_x)
                    y = float(raw_y)
                except ValueError as exc:
                    raise ParseError(f"line {line_no}: malformed gaze value ({exc})") from exc
                if math.isnan(x) or math.isnan(y):
                    is_missing = True
            if is_missing:
                xs.append(math.nan)
                ys.append(math.nan)
                valid.append(False)
            else:
                xs.append(x)
                ys.append(y)
                valid.append(True)
            t_ms.append(int(round(t)))
            txs.append(tx)
            tys.append(ty)
    finally:
        if owned:
            handle.close()

    if len(t_ms) < 2:
        raise ParseError(f"fewer than 2 samples ({len(t_ms)})")
    t_arr = np.asarray(t_ms, dtype=np.int64)
    if np.any(np.diff(t_arr) <= 0):
        bad = int(np.flatnonzero(np.diff(t_arr) <= 0)[0])
        raise ParseError(f"non-monotone timestamps at sample {bad + 1}")
    t_arr = t_arr - t_arr[0]
    period = int(round(1000.0 / rate_hz))
    targets = segment_targets(t_arr, txs, tys, period_ms=max(period, 1))
    return Recording(
        subject_id=subject_id,
        session_id=session_id,
        rate_hz=rate_hz,
        t_ms=t_arr,
        x_dva=np.asarray(xs),
        y_dva=np.asarray(ys),
        valid=np.asarray(valid, dtype=bool),
        targets=targets,
    )


def _target_positions(recording: Recording) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample target coordinates reconstructed from the segments."""
    tx = np.empty(recording.n_samples)
    ty = np.empty(recording.n_samples)
    tx.fill(np.nan)
    ty.fill(np.nan)
    for seg in recording.targets:
        sel = (recording.t_ms >= seg.onset_ms) & (recording.t_ms < seg.offset_ms)
        tx[sel] = seg.x_dva
        ty[sel] = seg.y_dva
    if np.any(np.isnan(tx)):
        raise ValueError("target segments do not cover every sample")
    return tx, ty


def serialize_recording(
    recording: Recording,
    target: str | Path | IO,
    schema: CsvSchema = DEFAULT_SCHEMA,
) -> None:
    """Write a recording in the canonical CSV layout; round-trips exactly."""
    tx, ty = _target_positions(recording)
    if isinstance(target, (str, Path)):
        handle = open(target, "w", encoding="utf-8", newline="")
        owned = True
    else:
        handle, owned = target, False
    try:
        writer = csv.writer(handle)
        writer.writerow([schema.time, schema.x, schema.y, schema.target_x, schema.target_y])
        for i in range(recording.n_samples):
            if recording.valid[i]:
                gx = repr(float(recording.x_dva[i]))
                gy = repr(float(recording.y_dva[i]))
            else:
                gx = gy = "NaN"
            writer.writerow(
                [
                    int(recording.t_ms[i]),
                    gx,
                    gy,
                    repr(float(tx[i])),
                    repr(float(ty[i])),
                ]
            )
    finally:
        if owned:
            handle.close()


def discover_recordings(corpus_dir: str | Path) -> list[Path]:
    """Recording CSVs in a corpus directory, sorted; label files excluded."""
    corpus = Path(corpus_dir)
    if not corpus.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {corpus}")
    return sorted(
        p for p in corpus.glob("*.csv") if not p.stem.endswith("_labels")
    )
