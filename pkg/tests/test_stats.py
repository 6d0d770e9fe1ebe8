import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kernel_response.estimators import ErgodicConfig, ergodic_estimator
from kernel_response.models import build_ar1
from kernel_response.stats import (
    BatchSums,
    CompensatedSum,
    LagCrossAccumulator,
    NotEnoughBatchesError,
    StreamingMoments,
    autocorrelation,
    batch_se,
    fit_decay_rate,
    merge,
    naive_lag_sum,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def test_merge_with_empty_is_identity():
    x = StreamingMoments.from_values([1.0, 5.0, 2.0])
    m = merge(x, StreamingMoments())
    assert (m.count, m.mean, m.m2) == (x.count, x.mean, x.m2)
    m = merge(StreamingMoments(), x)
    assert (m.count, m.mean, m.m2) == (x.count, x.mean, x.m2)


def test_merge_halves_example():
    m = merge(StreamingMoments.from_values([1, 2]), StreamingMoments.from_values([3, 4]))
    assert m.mean == 2.5
    assert m.variance == pytest.approx(5 / 3, rel=1e-15)


@given(st.lists(finite, min_size=2, max_size=200), st.data())
def test_merge_equals_concatenated_stream(values, data):
    cut = data.draw(st.integers(0, len(values)))
    m = merge(StreamingMoments.from_values(values[:cut]), StreamingMoments.from_values(values[cut:]))
    arr = np.array(values)
    scale = max(1.0, float(np.max(np.abs(arr))))
    assert m.count == arr.size
    assert m.mean == pytest.approx(arr.mean(), rel=1e-12, abs=1e-12 * scale)
    assert m.variance == pytest.approx(arr.var(ddof=1), rel=1e-9, abs=1e-9 * scale**2)


@settings(max_examples=30)
@given(st.integers(0, 2**31), st.integers(2, 8))
def test_merge_order_permutation(seed, parts):
    rng = np.random.default_rng(seed)
    chunks = [rng.normal(3.0, 2.0, rng.integers(1, 100)) for _ in range(parts)]
    accs = [StreamingMoments.from_values(c) for c in chunks]
    fwd, rev = StreamingMoments(), StreamingMoments()
    for a in accs:
        fwd.merge_in(a)
    for a in reversed(accs):
        rev.merge_in(a)
    assert fwd.mean == pytest.approx(rev.mean, rel=1e-12)
    assert fwd.m2 == pytest.approx(rev.m2, rel=1e-12)


def test_streaming_matches_two_pass():
    rng = np.random.default_rng(3)
    acc = StreamingMoments()
    data = rng.normal(1e3, 1.0, 10**5)
    for c in np.array_split(data, 37):
        acc.update(c)
    assert acc.mean == pytest.approx(data.mean(), rel=1e-12)
    assert acc.variance == pytest.approx(data.var(ddof=1), rel=1e-10)
    assert acc.variance >= 0


def test_batch_se_iid_normal():
    x = np.random.default_rng(0).standard_normal(10**6)
    assert abs(batch_se(x, 100) / 1e-3 - 1) < 0.1


def test_batch_se_constant_stream():
    assert batch_se(np.full(1000, 4.2), 10) == 0.0


def test_batch_se_needs_ten_batches():
    with pytest.raises(NotEnoughBatchesError, match="longer"):
        batch_se(np.ones(99), 10)


def test_batch_se_matches_independent_repetitions():
    p = build_ar1(0.5, 0.0, 0.3)
    phis, ses = [], []
    for k in range(100):
        r = ergodic_estimator(p.system, p.noise, p.observable,
                              ErgodicConfig(W=10, L=20_000, M_pre=200, seed=1000 + k))
        phis.append(r.phi_avg)
        ses.append(r.se_phi)
    assert abs(np.mean(ses) / np.std(phis, ddof=1) - 1) < 0.2


def test_compensated_sum_recovers_small_terms():
    acc = CompensatedSum()
    acc.add(1e16)
    for _ in range(1000):
        acc.add(1.0)
    acc.add(-1e16)
    assert acc.value == 1000.0


def test_batch_sums_groups_per_chain_in_order():
    bs = BatchSums(2, 3)
    data = np.arange(14, dtype=float).reshape(2, 7)
    bs.update(data[:, :2])
    bs.update(data[:, 2:])
    np.testing.assert_array_equal(bs.sums(), [[0 + 1 + 2, 3 + 4 + 5], [7 + 8 + 9, 10 + 11 + 12]])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.integers(0, 2**31), st.lists(st.integers(1, 60), min_size=1, max_size=12))
def test_lag_accumulator_matches_naive_sum(window, seed, chunks):
    rng = np.random.default_rng(seed)
    n = sum(chunks)
    scores, phis = rng.normal(size=n), rng.random(n)
    acc = LagCrossAccumulator(window)
    lo = 0
    for c in chunks:
        acc.update(scores[lo:lo + c], phis[lo:lo + c])
        lo += c
    n_terms = max(n - window + 1, 0)
    assert acc.completed == n_terms
    a, b = naive_lag_sum(scores, phis, window, n_terms)
    assert acc.a[0] == pytest.approx(a, rel=1e-10, abs=1e-10)
    assert acc.b[0] == pytest.approx(b, rel=1e-10, abs=1e-10)


def test_lag_accumulator_long_stream():
    rng = np.random.default_rng(5)
    W, n_terms = 7, 10**4
    scores, phis = rng.normal(size=n_terms + W - 1), rng.random(n_terms + W - 1)
    acc = LagCrossAccumulator(W)
    acc.update(scores, phis)
    a, b = naive_lag_sum(scores, phis, W, n_terms)
    assert abs(acc.a[0] - a) <= 1e-10 * abs(a)
    phi_avg = phis[:n_terms].mean()
    literal = -sum((phis[t + k] - phi_avg) * scores[t] for t in range(n_terms) for k in range(W)) / n_terms
    assert acc.estimate(phi_avg) == pytest.approx(literal, rel=1e-10)


def test_lag_accumulator_multichain_equals_separate_chains():
    rng = np.random.default_rng(6)
    s, p = rng.normal(size=(3, 500)), rng.random((3, 500))
    joint = LagCrossAccumulator(5, 3)
    joint.update(s[:, :123], p[:, :123])
    joint.update(s[:, 123:], p[:, 123:])
    for c in range(3):
        single = LagCrossAccumulator(5)
        single.update(s[c], p[c])
        assert joint.a[c] == pytest.approx(single.a[0], rel=1e-13)


def test_autocorrelation_of_ar1_stream():
    rng = np.random.default_rng(7)
    y = rng.standard_normal(200_000)
    x = np.empty_like(y)
    x[0] = y[0]
    for k in range(1, y.size):
        x[k] = 0.6 * x[k - 1] + y[k]
    rho = autocorrelation(x, 3)
    np.testing.assert_allclose(rho, [1, 0.6, 0.36, 0.216], atol=0.01)
    assert fit_decay_rate(x) == pytest.approx(0.6, abs=0.03)


def test_decay_rate_of_white_noise_is_small():
    x = np.random.default_rng(8).standard_normal(10**5)
    assert fit_decay_rate(x) < 0.05
    assert not math.isnan(fit_decay_rate(x))
