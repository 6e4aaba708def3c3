import numpy as np
import pytest

from gazesim.core import (
    GazeSample,
    Recording,
    SimConfig,
    TargetSegment,
    centroid,
    dwell_sample_count,
    euclidean_distance,
)
from gazesim.classify import IVTClassifier


def test_euclidean_distance_examples():
    assert euclidean_distance((0, 0), (0, 0)) == 0.0
    assert euclidean_distance((1, 0), (0, 0)) == 1.0
    assert euclidean_distance((3, 4), (0, 0)) == 5.0


def test_euclidean_distance_symmetric_and_triangle():
    rng = np.random.default_rng(42)
    for _ in range(200):
        a, b, c = (tuple(rng.uniform(-20, 20, 2)) for _ in range(3))
        assert euclidean_distance(a, b) == euclidean_distance(b, a)
        assert euclidean_distance(a, c) <= euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-12


def _samples(points):
    return [GazeSample(i, x, y) for i, (x, y) in enumerate(points)]


def test_centroid_examples():
    assert centroid(_samples([(1, 1)])) == (1.0, 1.0)
    assert centroid(_samples([(0, 0), (2, 2)])) == (1.0, 1.0)
    assert centroid(_samples([(0, 0), (0, 0), (3, 0)])) == (1.0, 0.0)


def test_centroid_empty_window():
    with pytest.raises(ValueError, match="empty window"):
        centroid([])


def test_centroid_translation_equivariance():
    rng = np.random.default_rng(3)
    for _ in range(50):
        pts = rng.uniform(-10, 10, size=(rng.integers(1, 20), 2))
        vx, vy = rng.uniform(-5, 5, 2)
        cx, cy = centroid(_samples(pts))
        sx, sy = centroid(_samples(pts + [vx, vy]))
        assert sx == pytest.approx(cx + vx, abs=1e-9)
        assert sy == pytest.approx(cy + vy, abs=1e-9)


def test_dwell_sample_count():
    assert dwell_sample_count(100, 1000) == 100
    assert dwell_sample_count(30, 1000) == 30
    assert dwell_sample_count(30, 500) == 15
    assert dwell_sample_count(25, 60) == 2  # 1.5 samples rounds up
    with pytest.raises(ValueError):
        dwell_sample_count(0, 1000)


def test_target_segment_validation():
    with pytest.raises(ValueError):
        TargetSegment(index=0, x_dva=0, y_dva=0, onset_ms=10, offset_ms=10)


def test_recording_validation():
    t = np.array([0, 1, 2])
    x = np.array([0.0, 1.0, 2.0])
    ok = np.ones(3, dtype=bool)
    rec = Recording("s", "1", 1000.0, t, x, x, ok)
    assert rec.n_samples == 3
    assert rec.data_loss_pct == 0.0
    with pytest.raises(ValueError, match="strictly increasing"):
        Recording("s", "1", 1000.0, np.array([0, 1, 1]), x, x, ok)
    with pytest.raises(ValueError, match="finite"):
        Recording("s", "1", 1000.0, t, np.array([0.0, np.nan, 2.0]), x, ok)
    # NaN allowed where the sample is invalid
    rec = Recording("s", "1", 1000.0, t, np.array([0.0, np.nan, 2.0]), x, np.array([True, False, True]))
    assert rec.data_loss_pct == pytest.approx(100 / 3)


def test_recording_sample_access_and_equality():
    t = np.array([0, 1])
    rec = Recording("s", "1", 1000.0, t, np.array([1.0, 2.0]), np.array([3.0, 4.0]), np.ones(2, bool))
    assert rec.sample(0) == GazeSample(0, 1.0, 3.0, True)
    assert list(rec.iter_samples())[1].x_dva == 2.0
    same = Recording("s", "1", 1000.0, t, np.array([1.0, 2.0]), np.array([3.0, 4.0]), np.ones(2, bool))
    assert rec == same


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(classifier=IVTClassifier(), dwell_ms=500, buffer_ms=400)
    with pytest.raises(ValueError):
        SimConfig(classifier=IVTClassifier(), dwell_ms=0, buffer_ms=400)
    with pytest.raises(ValueError):
        SimConfig(classifier=IVTClassifier(), offset_mode="spherical")
    cfg = SimConfig(classifier=IVTClassifier(velocity_threshold_deg_s=20.0))
    d = cfg.to_dict()
    assert d["algorithm"] == "ivt"
    assert d["classifier_params"]["velocity_threshold_deg_s"] == 20.0
