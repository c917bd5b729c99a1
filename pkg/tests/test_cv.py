import pytest
from hypothesis import given, settings, strategies as st

from semforecast.errors import PlanError
from semforecast.evaluate import CvPlan, time_slice_folds


def test_worked_example():
    folds = time_slice_folds(20, CvPlan(folds=4, initial=12, validation=2))
    assert [f.train[-1] + 1 for f in folds] == [12, 14, 16, 18]
    assert [(f.val[0], f.val[-1] + 1) for f in folds] == [(12, 14), (14, 16), (16, 18), (18, 20)]
    assert all(f.train[0] == 0 for f in folds)


def test_infeasible_plan_names_minimum():
    with pytest.raises(PlanError, match="minimal feasible row count is 32"):
        time_slice_folds(14, CvPlan(folds=10, initial=12, validation=2))


def test_default_geometry_uses_half_for_initial_window():
    folds = time_slice_folds(100)
    assert len(folds) == 10
    assert folds[0].train.size == 50
    assert all(f.val.size == 5 for f in folds)
    assert folds[-1].val[-1] == 99


def test_default_geometry_remainder_goes_to_initial_window():
    init, val = CvPlan().resolve(57)
    assert val == 2 and init == 37


def test_default_minimum_rows():
    plan = CvPlan()
    assert plan.min_rows() == 19
    assert time_slice_folds(19, plan)[0].train.size == 9
    with pytest.raises(PlanError, match="19"):
        time_slice_folds(18, plan)


def test_rolling_window_keeps_length():
    folds = time_slice_folds(20, CvPlan(folds=4, initial=12, validation=2, expanding=False))
    assert all(f.train.size == 12 for f in folds)
    assert [f.train[0] for f in folds] == [0, 2, 4, 6]


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 12), st.integers(1, 40), st.integers(1, 10), st.integers(0, 30),
       st.booleans())
def test_training_always_precedes_validation(folds, init, val, extra, expanding):
    n = init + folds * val + extra
    out = time_slice_folds(n, CvPlan(folds, init, val, expanding))
    assert len(out) == folds
    for f in out:
        assert f.train.max() < f.val.min()
        assert f.val.max() < n
