"""Real-time gaze interaction simulation over offline recordings.

Pipeline: parse or synthesize a recording, replay it as a causal stream with
online gap filling, classify fixations per sample, pick the dwell window
closest to each target as its trigger event, and aggregate success-rate and
angular-offset quality metrics.
"""
from .classify import (
    CLASSIFIERS,
    Chi2Tracker,
    FixationClassifier,
    IDTClassifier,
    IKFClassifier,
    IVTClassifier,
    KalmanState,
    dispersion,
    idt_runs,
    ikf_labels,
    ivt_labels,
    labels_to_runs,
    make_classifier,
)
from .core import (
    FixationRun,
    GazeSample,
    Recording,
    SimConfig,
    TargetSegment,
    TriggerEvent,
    centroid,
    dwell_sample_count,
    euclidean_distance,
)
from .ingest import CsvSchema, ParseError, parse_recording, segment_targets, serialize_recording
from .interact import (
    CandidateWindow,
    define_triggers,
    enumerate_candidates,
    select_closest,
    simulate_recording,
)
from .metrics import (
    QualityReport,
    RecordingResult,
    UserErrorSummary,
    angular_offset,
    build_report,
    percentile,
    success_rate_overall,
    success_rate_recording,
)
from .stream import StreamCursor, fill_positions, stream_window
from .synth import SynthConfig, synthesize_labeled_recording, synthesize_recording
from .tune import DEFAULT_GRIDS, GridPoint, grid_search, label_accuracy

__version__ = "0.1.0"

__all__ = [
    "CLASSIFIERS",
    "CandidateWindow",
    "Chi2Tracker",
    "CsvSchema",
    "DEFAULT_GRIDS",
    "FixationClassifier",
    "FixationRun",
    "GazeSample",
    "GridPoint",
    "IDTClassifier",
    "IKFClassifier",
    "IVTClassifier",
    "KalmanState",
    "ParseError",
    "QualityReport",
    "Recording",
    "RecordingResult",
    "SimConfig",
    "StreamCursor",
    "SynthConfig",
    "TargetSegment",
    "TriggerEvent",
    "UserErrorSummary",
    "angular_offset",
    "build_report",
    "centroid",
    "define_triggers",
    "dispersion",
    "dwell_sample_count",
    "enumerate_candidates",
    "euclidean_distance",
    "fill_positions",
    "grid_search",
    "idt_runs",
    "ikf_labels",
    "ivt_labels",
    "label_accuracy",
    "labels_to_runs",
    "make_classifier",
    "parse_recording",
    "percentile",
    "segment_targets",
    "select_closest",
    "serialize_recording",
    "simulate_recording",
    "stream_window",
    "success_rate_overall",
    "success_rate_recording",
    "synthesize_labeled_recording",
    "synthesize_recording",
]
