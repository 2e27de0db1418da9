from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fovea_dvs.events import EventStream, polarity_counts
from fovea_dvs.framing import CoverageError, Dataset, accumulate, build_dataset, downsample, normalize
from fovea_dvs.stimulus import generate_recording


def test_accumulate_empty():
    assert accumulate(EventStream(), 100).shape == (0, 128, 128)


def test_accumulate_cancels_opposite_events():
    s = EventStream(4, 4, [(10, 1, 2, 1), (20, 1, 2, -1)])
    f = accumulate(s, 100)
    assert f.shape == (1, 4, 4)
    assert f[0, 2, 1] == 0


def test_accumulate_frame_count_and_windows():
    s = EventStream(4, 4, [(0, 0, 0, 1), (99, 1, 0, 1), (100, 2, 0, -1), (250, 3, 3, 1)])
    f = accumulate(s, 100)
    assert f.shape[0] == 3  # ceil(251 / 100)
    assert f[0, 0, 0] == 1 and f[0, 0, 1] == 1 and f[1, 0, 2] == -1 and f[2, 3, 3] == 1


def test_accumulate_rejects_zero_period():
    with pytest.raises(ValueError):
        accumulate(EventStream(), 0)


def test_accumulate_matches_dict_tally():
    s, _ = generate_recording(1, num_frames=6)
    f = accumulate(s, 10_000)
    tally = Counter()
    for e in s:
        tally[(e.t_us // 10_000, e.y, e.x)] += e.polarity
    expected = np.zeros_like(f)
    for (k, y, x), v in tally.items():
        expected[k, y, x] = v
    assert np.array_equal(f, expected)


def test_accumulate_fixed_length_pads_silent_recordings():
    s, _ = generate_recording(6, num_frames=5)
    assert len(s) == 0
    assert accumulate(s, 10_000, num_frames=5).shape == (5, 128, 128)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(
        st.tuples(st.integers(0, 500), st.integers(0, 7), st.integers(0, 7), st.sampled_from([-1, 1])),
        max_size=40,
    )
)
def test_accumulate_conserves_net_polarity(evs):
    evs.sort(key=lambda e: e[0])
    s = EventStream(8, 8, evs)
    on, off = polarity_counts(s)
    assert accumulate(s, 37).sum() == on - off


def test_normalize():
    z = np.zeros((2, 3, 3))
    assert np.array_equal(normalize(z), z)
    x = np.zeros((1, 2, 2))
    x[0, 0, 0] = -4
    x[0, 1, 1] = 2
    n = normalize(x)
    assert n[0, 0, 0] == -1.0 and n[0, 1, 1] == 0.5
    small = np.full((1, 2, 2), 0.5)
    assert np.array_equal(normalize(small), small)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000))
def test_normalize_peak_and_idempotence(seed):
    x = np.random.default_rng(seed).normal(0, 5, (3, 4, 4))
    n = normalize(x)
    if np.abs(x).max() > 1:
        assert np.abs(n).max() == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_array_equal(normalize(n), n)


def recordings(num_frames):
    return [generate_recording(k, num_frames=num_frames) for k in range(7)]


def test_build_dataset_split_arithmetic():
    ds = build_dataset(recordings(100), 10_000, seed=42, num_frames=100)
    assert len(ds) == 700
    assert ds.frames.shape == (700, 128, 128) and ds.frames.dtype == np.float32
    assert ds.is_test.sum() == 70
    for c in range(7):
        mask = ds.labels == c
        assert ds.is_test[mask].sum() == 10
    train_x, train_y = ds.split("train")
    test_x, test_y = ds.split("test")
    assert len(train_y) + len(test_y) == len(ds)


def test_build_dataset_deterministic():
    recs = recordings(20)
    a = build_dataset(recs, 10_000, seed=42, num_frames=20)
    b = build_dataset(recs, 10_000, seed=42, num_frames=20)
    assert np.array_equal(a.is_test, b.is_test)
    assert a.frames.tobytes() == b.frames.tobytes()
    c = build_dataset(recs, 10_000, seed=7, num_frames=20)
    assert not np.array_equal(a.is_test, c.is_test)


def test_per_class_test_fraction_within_one_frame():
    recs = recordings(23)
    ds = build_dataset(recs, 10_000, seed=1, num_frames=23)
    for c in range(7):
        n = int((ds.labels == c).sum())
        n_test = int(ds.is_test[ds.labels == c].sum())
        assert abs(n_test - n / 10) <= 1
        assert n_test >= 1


def test_missing_label_is_coverage_error():
    recs = recordings(3)[:6]
    with pytest.raises(CoverageError):
        build_dataset(recs, 10_000, seed=0, num_frames=3)


def test_silent_class_without_fixed_length_is_coverage_error():
    with pytest.raises(CoverageError):
        build_dataset(recordings(3), 10_000, seed=0)


def test_index_csv_round_trip(tmp_path):
    ds = build_dataset(recordings(10), 10_000, seed=3, num_frames=10)
    path = tmp_path / "index.csv"
    with open(path, "w", newline="") as fh:
        ds.write_index_csv(fh)
    assert path.read_text().splitlines()[0] == "frame_idx,label,split"
    with open(path) as fh:
        labels, is_test = Dataset.read_index_csv(fh)
    assert np.array_equal(labels, ds.labels) and np.array_equal(is_test, ds.is_test)


def test_downsample_block_means():
    x = np.arange(2 * 8 * 8, dtype=np.float32).reshape(2, 8, 8)
    d = downsample(x, 2)
    assert d.shape == (2, 2, 2) and d.dtype == np.float32
    for n in range(2):
        for i in range(2):
            for j in range(2):
                assert d[n, i, j] == x[n, 4 * i : 4 * i + 4, 4 * j : 4 * j + 4].mean()
    assert np.array_equal(downsample(x, 8), x)
    with pytest.raises(ValueError):
        downsample(x, 3)
