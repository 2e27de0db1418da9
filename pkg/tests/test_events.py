import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fovea_dvs.events import EVENT_DTYPE, DvsEvent, EventStream, polarity_counts, sort_events, validate
from fovea_dvs.stimulus import generate_recording


def make_stream(events, width=128, height=128):
    return EventStream(width, height, events)


def linear_scan_violations(stream):
    bad = []
    prev = None
    for i, e in enumerate(stream):
        if not (0 <= e.x < stream.width and 0 <= e.y < stream.height):
            bad.append(i)
        if e.polarity not in (1, -1):
            bad.append(i)
        if prev is not None and e.t_us < prev:
            bad.append(i)
        prev = e.t_us
    return bad


def test_event_record_is_thirteen_packed_bytes():
    assert EVENT_DTYPE.itemsize == 13


def test_validate_empty():
    assert validate(EventStream()) == []


def test_validate_reports_inversion_index():
    s = make_stream([(5, 0, 0, 1), (3, 0, 0, 1)])
    problems = validate(s)
    assert len(problems) == 1
    assert problems[0].startswith("event 1:")


def test_validate_bounds_and_polarity():
    s = make_stream([(0, 128, 0, 1), (1, 0, 200, 1), (2, 3, 3, 0)])
    problems = validate(s)
    assert [p.split(":")[0] for p in problems] == ["event 0", "event 1", "event 2"]


def test_validate_emulator_output_matches_linear_scan():
    s, _ = generate_recording(0, num_frames=4)
    s = EventStream(s.width, s.height, s.events[:1000])
    assert len(s) == 1000
    assert validate(s) == []
    assert linear_scan_violations(s) == []


def test_sort_identity_and_reverse():
    evs = [(1, 0, 0, 1), (2, 1, 0, -1), (3, 2, 0, 1)]
    s = make_stream(evs)
    assert sort_events(s) == s
    assert sort_events(make_stream(evs[::-1])) == s


def test_sort_random_permutation_matches_python_sort():
    rng = np.random.default_rng(3)
    evs = [(int(t), int(i % 128), 0, 1) for i, t in enumerate(rng.integers(0, 20, 100))]
    expected = sorted(evs, key=lambda e: e[0])  # Python's sort is stable
    got = [tuple(e) for e in sort_events(make_stream(evs))]
    assert got == expected


def test_polarity_counts():
    assert polarity_counts(EventStream()) == (0, 0)
    s = make_stream([(0, 0, 0, 1)] * 3 + [(0, 0, 0, -1)] * 2)
    assert polarity_counts(s) == (3, 2)


def test_polarity_counts_bar_sweep_matches_tally():
    s, _ = generate_recording(1, num_frames=10)
    on = sum(1 for e in s if e.polarity == 1)
    off = sum(1 for e in s if e.polarity == -1)
    assert polarity_counts(s) == (on, off)


def test_neuron_index_and_iteration():
    s = make_stream([(5, 1, 2, 1)])
    assert s.neuron_index().tolist() == [257]
    assert list(s) == [DvsEvent(5, 1, 2, 1)]
    assert s[0].polarity == 1


events_strategy = st.lists(
    st.tuples(
        st.integers(0, 1000), st.integers(0, 15), st.integers(0, 15), st.sampled_from([-1, 1])
    ),
    max_size=60,
)


@settings(max_examples=100, deadline=None)
@given(events_strategy)
def test_sort_properties(evs):
    s = make_stream(evs, 16, 16)
    once = sort_events(s)
    assert sort_events(once) == once
    assert validate(once) == []
    assert polarity_counts(once) == polarity_counts(s)
