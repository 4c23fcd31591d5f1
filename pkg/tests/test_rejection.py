import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dropcal.binned_metrics import PredictionRecord, Records
from dropcal.errors import DomainError, InvalidInputError
from dropcal.rejection import default_thresholds, reject_sweep


def test_default_thresholds():
    t = default_thresholds()
    assert len(t) == 101 and t[0] == 1.0 and t[-1] == 0.0
    assert np.all(np.diff(t) < 0)


def test_no_rejection(uce_example):
    curve = reject_sweep(uce_example, [1.0])
    assert curve.retained_count[0] == 4
    assert curve.top1_error[0] == pytest.approx(0.75)


def test_total_rejection(uce_example):
    curve = reject_sweep(uce_example, [0.0])
    assert curve.retained_count[0] == 0
    assert np.isnan(curve.top1_error[0])


def test_half_threshold(uce_example):
    curve = reject_sweep(uce_example, [0.5])
    assert curve.retained_count[0] == 2
    assert curve.top1_error[0] == 0.5


def test_records_at_threshold_are_kept():
    recs = [PredictionRecord(0.4, 1.0, 0, 1), PredictionRecord(0.9, 0.3, 1, 1)]
    curve = reject_sweep(recs, [1.0, 0.3])
    assert curve.retained_count.tolist() == [2, 1]


def test_errors(uce_example):
    with pytest.raises(DomainError):
        reject_sweep([])
    with pytest.raises(InvalidInputError):
        reject_sweep(uce_example, [1.5])


@given(st.lists(st.tuples(st.floats(0, 1), st.booleans()), min_size=1, max_size=80))
def test_monotone_and_consistent(rows):
    recs = Records(
        np.ones(len(rows)),
        np.array([u for u, _ in rows]),
        np.array([int(w) for _, w in rows]),
        np.zeros(len(rows), dtype=np.int64),
    )
    curve = reject_sweep(recs)
    assert np.all(np.diff(curve.retained_count) <= 0)
    np.testing.assert_array_equal(curve.retained_fraction, curve.retained_count / len(rows))
    for thr, count, err in zip(curve.thresholds, curve.retained_count, curve.top1_error):
        kept = [w for u, w in rows if u <= thr]
        assert count == len(kept)
        if kept:
            assert err == pytest.approx(np.mean(kept), abs=1e-12)
        else:
            assert np.isnan(err)
