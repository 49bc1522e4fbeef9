from __future__ import annotations

import json
import math

import numpy as np
import pytest
from scipy import stats as sps
from hypothesis import given
from hypothesis import strategies as st

from annealbench.errors import InsufficientData
from annealbench.stats import (RunRecord, ScalingFit, bootstrap_median, compute_pgs, compute_tts,
                               fit_scaling, json_safe, pool_records, read_rows_csv, tts_value,
                               write_fits_json, write_json, write_rows_csv)
import oracles


def rec(hits, anneals=100, iid="a", jf=-1.0):
    return RunRecord(iid, 1.0, jf, "sa", anneals, hits)


@pytest.mark.parametrize("hits,p", [(0, 0.0), (100, 1.0), (37, 0.37)])
def test_pgs(hits, p):
    assert compute_pgs(rec(hits)) == p


def test_record_validation_and_pooling():
    with pytest.raises(ValueError):
        rec(101)
    with pytest.raises(ValueError):
        compute_pgs(rec(0, 0))
    pooled = pool_records([rec(3), rec(5, 50)])
    assert (pooled.total_anneals, pooled.ground_hits) == (150, 8)
    with pytest.raises(ValueError):
        pool_records([rec(3), rec(3, iid="b")])
    assert RunRecord.from_dict(rec(4).to_dict()) == rec(4)


def test_tts_examples():
    assert compute_tts(0.99, 1.0).tts == 1.0
    assert compute_tts(0.99, 7.5).tts == 7.5
    assert compute_tts(0.0, 20).tts == math.inf and not compute_tts(0.0, 20).finite
    assert compute_tts(1.0, 20).tts == 20
    v = compute_tts(0.5, 20).tts
    assert v == pytest.approx(132.877, abs=5e-4)
    assert abs(v - float(oracles.tts_highprec("0.5", 20))) / v < 1e-12


@given(st.floats(1e-6, 1 - 1e-6), st.floats(0.01, 1000))
def test_tts_matches_high_precision(p, t):
    # floats convert to mpmath exactly; decimal strings would not near p = 1
    ref = float(oracles.tts_highprec(p, t))
    assert tts_value(p, t) == pytest.approx(ref, rel=1e-12)


@given(st.floats(1e-6, 0.999), st.floats(1e-6, 0.999))
def test_tts_decreases_with_success(p, q):
    if p < q:
        assert tts_value(p, 5) >= tts_value(q, 5)


def test_tts_rejects_bad_input():
    for p, t in ((-0.1, 1), (1.1, 1), (0.5, 0)):
        with pytest.raises(ValueError):
            tts_value(p, t)


# -- bootstrap ----------------------------------------------------------------------


def test_constant_bootstrap():
    b = bootstrap_median([5, 5, 5, 5], resamples=200)
    assert (b.mean, b.low, b.high, b.median) == (5, 5, 5, 5)


def test_ci_bounds_are_percentiles_of_medians():
    x = np.random.default_rng(1).lognormal(3, 1, 100)
    b = bootstrap_median(x, resamples=5000, confidence=0.95, seed=2)
    assert len(b.medians) == 5000
    assert b.low == pytest.approx(np.percentile(b.medians, 2.5))
    assert b.high == pytest.approx(np.percentile(b.medians, 97.5))
    assert b.mean == pytest.approx(np.mean(b.medians))
    assert b.median == np.median(x)


def test_bootstrap_reproducible():
    x = np.arange(30.0)
    assert bootstrap_median(x, 300, seed=4).summary() == bootstrap_median(x, 300, seed=4).summary()


def test_majority_infinite_gives_infinite_median():
    x = [1.0] * 49 + [math.inf] * 51
    b = bootstrap_median(x, 500)
    assert b.median == math.inf and b.high == math.inf and b.mean == math.inf


def test_few_infinite_values_keep_finite_median():
    x = list(range(1, 91)) + [math.inf] * 10
    b = bootstrap_median(x, 1000)
    assert math.isfinite(b.median) and math.isfinite(b.low) and math.isfinite(b.high)


@given(st.lists(st.floats(0.1, 1e4), min_size=1, max_size=40), st.integers(0, 1000))
def test_inf_safe_percentiles_agree_on_finite_data(values, seed):
    b = bootstrap_median(values, 200, seed=seed)
    assert b.low == pytest.approx(np.percentile(b.medians, 2.5))
    assert b.high == pytest.approx(np.percentile(b.medians, 97.5))
    assert b.low <= b.high


def test_bootstrap_rejects_bad_input():
    with pytest.raises(ValueError):
        bootstrap_median([])
    with pytest.raises(ValueError):
        bootstrap_median([1.0, math.nan])
    with pytest.raises(ValueError):
        bootstrap_median([1.0], confidence=1.0)


# -- scaling fits ----------------------------------------------------------------------


def test_exact_exponential_data():
    pts = [(n, math.exp(0.5 * n)) for n in range(8, 17, 2)]
    f = fit_scaling(pts)
    assert abs(f.alpha - 0.5) / 0.5 < 1e-9
    assert f.t0 == pytest.approx(1.0, rel=1e-9)
    assert f.stderr_alpha == pytest.approx(0.0, abs=1e-9)


def test_two_point_slope():
    f = fit_scaling([(8, 10.0), (16, 100.0)])
    assert f.alpha == pytest.approx(math.log(10) / 8, rel=1e-12)
    assert f.alpha == pytest.approx(0.2878, abs=1e-4)
    assert math.isnan(f.stderr_alpha)


@given(st.lists(st.tuples(st.integers(4, 40), st.floats(0.5, 1e6)), min_size=2, max_size=10))
def test_slope_matches_closed_form(points):
    sizes = {n for n, _ in points}
    if len(sizes) < 2:
        return
    f = fit_scaling(points)
    slope, intercept = oracles.least_squares_slope([n for n, _ in points], [math.log(v) for _, v in points])
    assert f.alpha == pytest.approx(slope, rel=1e-9, abs=1e-12)
    assert f.intercept == pytest.approx(intercept, rel=1e-9, abs=1e-9)


def test_infinite_sizes_are_excluded():
    f = fit_scaling([(8, 10.0), (10, 20.0), (12, 40.0), (14, math.inf)])
    assert f.excluded == (14,) and f.sizes == (8, 10, 12)
    with pytest.raises(InsufficientData):
        fit_scaling([(8, 10.0), (10, math.inf)])
    with pytest.raises(ValueError):
        fit_scaling([(8, 0.0), (10, 1.0)])


def test_noisy_fit_within_three_standard_errors():
    rng = np.random.default_rng(0)
    sizes = np.arange(8, 17, 2)
    trials = 100
    alphas, inside = [], 0
    for _ in range(trials):
        tts = np.exp(0.5 * sizes) * np.exp(rng.normal(0, 0.1, sizes.size))
        f = fit_scaling(zip(sizes, tts))
        alphas.append(f.alpha)
        inside += abs(f.alpha - 0.5) <= 3 * f.stderr_alpha
    # with n - 2 residual degrees of freedom the slope error is t distributed
    expected = 1 - 2 * sps.t.sf(3, sizes.size - 2)
    assert inside >= trials * expected - 3 * math.sqrt(trials * expected * (1 - expected))
    assert abs(np.mean(alphas) - 0.5) <= 3 * np.std(alphas, ddof=1) / math.sqrt(trials)


def test_fit_serialisation(tmp_path):
    f = fit_scaling([(8, 10.0), (16, 100.0)], label="x")
    back = ScalingFit.from_dict(json.loads(json.dumps(f.to_dict())))
    assert back.alpha == f.alpha and math.isnan(back.stderr_alpha) and back.label == "x"
    data = json.loads(write_fits_json([f], tmp_path / "fits.json").read_text())
    assert data[0]["stderr"] is None


def test_table_helpers(tmp_path):
    rows = [{"a": 1, "b": math.inf}, {"a": 2, "b": 0.5}]
    back = read_rows_csv(write_rows_csv(rows, tmp_path / "t.csv", ["a", "b"]))
    assert back == [{"a": "1", "b": "inf"}, {"a": "2", "b": "0.5"}]
    assert json_safe({"x": [math.inf, math.nan, np.float64(2.0)]}) == {"x": ["inf", "nan", 2.0]}
    text = write_json({"v": -math.inf}, tmp_path / "j.json").read_text()
    assert json.loads(text) == {"v": "-inf"}
