"""Command-line surface: validate, run, sweep, synth, tune.

Exit codes: 0 success, 1 partial per-recording failures, 2 invalid inputs.
Runs are deterministic for fixed inputs and seeds regardless of --jobs.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from sklearn.base import clone

from .classify import CLASSIFIERS, make_classifier
from .core import SimConfig
from .ingest import CsvSchema, DEFAULT_SCHEMA, discover_recordings, parse_recording, serialize_recording
from .interact import define_triggers, simulate_recording, write_triggers_csv
from .metrics import (
    QualityReport,
    RecordingResult,
    build_report,
    write_report_json,
    write_sweep_csv,
    write_users_csv,
)
from .stream import StreamCursor, fill_positions
from .synth import SynthConfig, synthesize_labeled_recording
from .tune import DEFAULT_GRIDS, MissingTruthError, grid_search, load_truth_for, write_labels_csv, write_tuner_report


@dataclass
class RunManifest:
    """Everything one simulation run needs."""

    corpus_dir: str
    schema: CsvSchema
    config: SimConfig
    out_dir: str
    jobs: int
    pace: bool = False


class _InputError(Exception):
    """Unusable inputs (bad schema file, unreadable corpus); exits with 2."""


def _load_schema(path: str | None) -> CsvSchema:
    if path is None:
        return DEFAULT_SCHEMA
    try:
        return CsvSchema.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, ValueError, TypeError) as exc:
        raise _InputError(f"bad schema file {path}: {exc}") from exc


def _parallel_map(fn, tasks: list, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (jobs * 4) or 1)))


# ---------------------------------------------------------------------------
# validate


def _validate_one(task) -> tuple[str, dict | None, str | None]:
    path, schema = task
    try:
        rec = parse_recording(path, schema)
        return (
            str(path),
            {
                "recording": Path(path).name,
                "n_samples": rec.n_samples,
                "n_targets": len(rec.targets),
                "data_loss_pct": rec.data_loss_pct,
            },
            None,
        )
    except Exception as exc:
        return str(path), None, str(exc)


def cmd_validate(args) -> int:
    schema = _load_schema(args.schema)
    paths = discover_recordings(args.corpus)
    if not paths:
        print(f"gazesim validate: no recordings in {args.corpus}", file=sys.stderr)
        return 2
    results = _parallel_map(_validate_one, [(p, schema) for p in paths], args.jobs)
    results.sort(key=lambda r: r[0])
    ok = [info for _, info, err in results if info is not None]
    failures = [(p, err) for p, info, err in results if info is None]
    for info in ok:
        print(
            f"{info['recording']}: {info['n_samples']} samples, "
            f"{info['n_targets']} targets, loss {info['data_loss_pct']:.2f}%"
        )
    for path, err in failures:
        print(f"FAILED {path}: {err}", file=sys.stderr)
    if ok:
        losses = np.asarray([info["data_loss_pct"] for info in ok])
        print(
            f"corpus: {len(ok)} recordings, {sum(i['n_targets'] for i in ok)} targets | "
            f"data loss median {np.median(losses):.2f}% "
            f"SD {np.std(losses):.2f}% max {losses.max():.2f}%"
        )
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# run


def _run_one(task):
    path, schema, config, pace = task
    try:
        rec = parse_recording(path, schema)
        if pace:
            for _ in StreamCursor(rec, pace=True):
                pass
        events = simulate_recording(rec, config)
        return str(path), RecordingResult(rec.subject_id, rec.session_id, tuple(events)), None
    except Exception as exc:
        return str(path), None, str(exc)


def _collect_results(manifest: RunManifest, paths) -> tuple[list, list]:
    tasks = [(p, manifest.schema, manifest.config, manifest.pace) for p in paths]
    raw = _parallel_map(_run_one, tasks, manifest.jobs)
    raw.sort(key=lambda r: r[0])
    results = [(p, res) for p, res, err in raw if res is not None]
    failures = [(p, err) for p, res, err in raw if res is None]
    return results, failures


def _write_failures(out_dir: Path, failures) -> None:
    payload = [{"recording": p, "error": e} for p, e in failures]
    (out_dir / "failures.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def cmd_run(args) -> int:
    schema = _load_schema(args.schema)
    paths = discover_recordings(args.corpus)
    if not paths:
        print(f"gazesim run: no recordings in {args.corpus}", file=sys.stderr)
        return 2
    config = SimConfig(
        classifier=make_classifier(args.algo),
        dwell_ms=args.dwell_ms,
        buffer_ms=args.buffer_ms,
        offset_mode=args.offset_mode,
    )
    manifest = RunManifest(
        corpus_dir=args.corpus,
        schema=schema,
        config=config,
        out_dir=args.out,
        jobs=args.jobs,
        pace=args.pace,
    )
    out = Path(manifest.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    results, failures = _collect_results(manifest, paths)
    if results:
        triggers_dir = out / "triggers"
        triggers_dir.mkdir(exist_ok=True)
        for path, res in results:
            write_triggers_csv(res.events, triggers_dir / f"{Path(path).stem}.csv")
        report = build_report([res for _, res in results], config)
        write_report_json(report, out / "report.json")
        write_users_csv(report, out / "users.csv")
        print(
            f"{len(results)} recordings | success rate {report.success_rate_pct:.1f}% | "
            f"{report.n_trigger_events}/{report.n_targets} trigger events"
        )
    for path, err in failures:
        print(f"FAILED {path}: {err}", file=sys.stderr)
    if failures:
        _write_failures(out, failures)
        return 1
    return 0


# ---------------------------------------------------------------------------
# sweep


def _sweep_one(task):
    """One recording under one algorithm, all (dwell, buffer) cells.

    Classification does not depend on dwell or buffer, so it runs once per
    recording; each cell then selects its own windows, which is exactly
    equivalent to independent runs.
    """
    path, schema, algo, dwells, buffers, offset_mode = task
    try:
        rec = parse_recording(path, schema)
        est = clone(make_classifier(algo)).set_params(rate_hz=rec.rate_hz)
        x, y = fill_positions(rec)
        _, runs = est.segment(np.column_stack([x, y]), rec.t_ms)
        cells = {}
        for dwell in dwells:
            for buffer_ms in buffers:
                if dwell > buffer_ms:
                    continue
                events = define_triggers(rec, runs, x, y, dwell, buffer_ms, offset_mode)
                cells[(dwell, buffer_ms)] = RecordingResult(
                    rec.subject_id, rec.session_id, tuple(events)
                )
        return str(path), cells, None
    except Exception as exc:
        return str(path), None, str(exc)


def cmd_sweep(args) -> int:
    schema = _load_schema(args.schema)
    paths = discover_recordings(args.corpus)
    if not paths:
        print(f"gazesim sweep: no recordings in {args.corpus}", file=sys.stderr)
        return 2
    algos = [a.strip().lower() for a in args.algo.split(",") if a.strip()]
    unknown = [a for a in algos if a not in CLASSIFIERS]
    if not algos or unknown:
        print(f"gazesim sweep: unknown algorithms {unknown}", file=sys.stderr)
        return 2
    dwells = args.dwell_list
    buffers = args.buffer_list
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports_dir = out / "reports"
    reports_dir.mkdir(exist_ok=True)

    all_failures = []
    rows = []
    reports: dict[tuple[str, int, int], QualityReport] = {}
    for algo in algos:
        tasks = [(p, schema, algo, dwells, buffers, args.offset_mode) for p in paths]
        raw = _parallel_map(_sweep_one, tasks, args.jobs)
        raw.sort(key=lambda r: r[0])
        ok = [(p, cells) for p, cells, err in raw if cells is not None]
        all_failures.extend((p, err) for p, cells, err in raw if cells is None)
        for dwell in dwells:
            for buffer_ms in buffers:
                if dwell > buffer_ms:
                    continue
                config = SimConfig(
                    classifier=make_classifier(algo),
                    dwell_ms=dwell,
                    buffer_ms=buffer_ms,
                    offset_mode=args.offset_mode,
                )
                cell_results = [cells[(dwell, buffer_ms)] for _, cells in ok]
                if not cell_results:
                    continue
                report = build_report(cell_results, config)
                reports[(algo, dwell, buffer_ms)] = report
                write_report_json(report, reports_dir / f"{algo}_d{dwell}_b{buffer_ms}.json")

    for buffer_ms in sorted(buffers, reverse=True):
        for dwell in sorted(dwells):
            for algo in algos:
                report = reports.get((algo, dwell, buffer_ms))
                if report is not None:
                    rows.append((buffer_ms, dwell, algo, report.success_rate_pct))
    write_sweep_csv(rows, out / "sweep.csv")
    print(f"wrote {len(rows)} sweep cells to {out / 'sweep.csv'}")
    for path, err in all_failures:
        print(f"FAILED {path}: {err}", file=sys.stderr)
    if all_failures:
        _write_failures(out, all_failures)
        return 1
    return 0


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    offset = (0.0, 0.0)
    if args.calibration_offset:
        try:
            ox, oy = (float(v) for v in args.calibration_offset.split(","))
            offset = (ox, oy)
        except ValueError:
            print("gazesim synth: --calibration-offset expects 'x,y'", file=sys.stderr)
            return 2
    for i in range(args.count):
        subject = f"{i + 1:04d}"
        cfg = SynthConfig(
            n_targets=args.n_targets,
            target_dwell_ms=args.target_dwell_ms,
            fixation_noise_sd_dva=args.noise_sd,
            drift_deg_s=args.drift_deg_s,
            nan_rate=args.nan_rate,
            calibration_offset_dva=offset,
            saccade_latency_ms=args.saccade_latency_ms,
            saccade_duration_ms=args.saccade_duration_ms,
            rng_seed=args.seed + i,
        )
        rec, truth = synthesize_labeled_recording(cfg, subject_id=subject, session_id="1")
        stem = f"S_{subject}_S1_RAN"
        serialize_recording(rec, out / f"{stem}.csv")
        write_labels_csv(rec.t_ms, truth, out / f"{stem}_labels.csv")
    print(f"wrote {args.count} recording/label pairs to {out}")
    return 0


# ---------------------------------------------------------------------------
# tune


def cmd_tune(args) -> int:
    schema = _load_schema(args.schema)
    paths = discover_recordings(args.corpus)
    if not paths:
        print(f"gazesim tune: no recordings in {args.corpus}", file=sys.stderr)
        return 2
    corpus = []
    for path in paths:
        rec = parse_recording(path, schema)
        try:
            _, labels = load_truth_for(path, args.truth)
        except MissingTruthError as exc:
            print(f"gazesim tune: {exc}", file=sys.stderr)
            return 2
        corpus.append((rec, labels))
    points = grid_search(corpus, args.algo, None)
    if args.out:
        write_tuner_report(points, args.out)
    best = points[0]
    print(f"best {args.algo} params: {best.params} (accuracy {best.mean_accuracy:.4f})")
    return 0


# ---------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gazesim",
        description="Replay gaze recordings as a real-time stream and score dwell-based selection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    jobs_default = os.cpu_count() or 1

    def add_common(p):
        p.add_argument("--corpus", required=True, help="directory of recording CSVs")
        p.add_argument("--schema", default=None, help="JSON file overriding the CSV column names")
        p.add_argument("--jobs", type=int, default=jobs_default, help="parallel workers")

    p = sub.add_parser("validate", help="parse a corpus and report data-loss statistics")
    add_common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="simulate one configuration over a corpus")
    add_common(p)
    p.add_argument("--algo", choices=sorted(CLASSIFIERS), default="ivt")
    p.add_argument("--dwell-ms", type=int, default=100)
    p.add_argument("--buffer-ms", type=int, default=1000)
    p.add_argument("--offset-mode", choices=["arccos3d", "planar"], default="arccos3d")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--pace", action="store_true", help="replay each recording at wall-clock rate")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="grid of (algorithm, dwell, buffer) cells")
    add_common(p)
    p.add_argument("--algo", default="ivt,idt,ikf", help="comma-separated algorithm list")
    p.add_argument("--dwell-list", type=_int_list, default=[100, 150, 200, 250, 300])
    p.add_argument("--buffer-list", type=_int_list, default=[400, 500, 600, 700, 800, 900, 1000])
    p.add_argument("--offset-mode", choices=["arccos3d", "planar"], default="arccos3d")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="generate synthetic recordings plus truth labels")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-targets", type=int, default=10)
    p.add_argument("--target-dwell-ms", type=int, default=1000)
    p.add_argument("--noise-sd", type=float, default=0.0)
    p.add_argument("--drift-deg-s", type=float, default=0.0)
    p.add_argument("--nan-rate", type=float, default=0.0)
    p.add_argument("--calibration-offset", default=None, help="constant gaze bias as 'x,y' dva")
    p.add_argument("--saccade-latency-ms", type=int, default=200)
    p.add_argument("--saccade-duration-ms", type=int, default=30)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("tune", help="grid-search classifier parameters against truth labels")
    add_common(p)
    p.add_argument("--algo", choices=sorted(DEFAULT_GRIDS), required=True)
    p.add_argument("--truth", default=None, help="directory of *_labels.csv files (default: corpus)")
    p.add_argument("--out", default=None, help="ranked results CSV")
    p.set_defaults(func=cmd_tune)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (_InputError, FileNotFoundError) as exc:
        print(f"gazesim: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"gazesim: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
