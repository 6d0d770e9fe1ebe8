"""Streaming statistics used by the estimators."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class StreamingMoments:
    """Single-pass count / mean / sum of squared deviations (Chan et al. merge)."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def update(self, values) -> "StreamingMoments":
        values = np.asarray(values, dtype=float).ravel()
        if values.size:
            self.merge_in(StreamingMoments.from_values(values))
        return self

    @classmethod
    def from_values(cls, values) -> "StreamingMoments":
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0:
            return cls()
        mean = float(np.mean(values))
        return cls(values.size, mean, float(np.sum((values - mean) ** 2)))

    def merge_in(self, other: "StreamingMoments") -> "StreamingMoments":
        merged = merge(self, other)
        self.count, self.mean, self.m2 = merged.count, merged.mean, merged.m2
        return self

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1) if self.count > 1 else 0.0

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    @property
    def sem(self) -> float:
        return self.std / math.sqrt(self.count) if self.count > 0 else math.inf


def merge(a: StreamingMoments, b: StreamingMoments) -> StreamingMoments:
    if a.count == 0:
        return StreamingMoments(b.count, b.mean, b.m2)
    if b.count == 0:
        return StreamingMoments(a.count, a.mean, a.m2)
    n = a.count + b.count
    delta = b.mean - a.mean
    mean = a.mean + delta * b.count / n
    m2 = a.m2 + b.m2 + delta * delta * a.count * b.count / n
    return StreamingMoments(n, mean, m2)


class NotEnoughBatchesError(ValueError):
    pass


def batch_se(values, batch_length: int, min_batches: int = 10) -> float:
    """Standard error of the mean of a correlated stream by non-overlapping batch means.

    Trailing values that do not fill a batch are dropped.
    """
    values = np.asarray(values, dtype=float).ravel()
    nb = values.size // batch_length
    if nb < min_batches:
        raise NotEnoughBatchesError(
            f"only {nb} batches of length {batch_length}; need {min_batches}, run a longer orbit"
        )
    # shifting by a sample value leaves the SE unchanged and keeps a constant stream exactly at 0
    shifted = values[: nb * batch_length] - values[0]
    means = shifted.reshape(nb, batch_length).mean(axis=1)
    return float(np.std(means, ddof=1) / math.sqrt(nb))


def se_of_batch_means(means) -> float:
    means = np.asarray(means, dtype=float).ravel()
    if means.size < 2:
        return math.nan
    return float(np.std(means, ddof=1) / math.sqrt(means.size))


class CompensatedSum:
    """Neumaier summation over a sequence of (possibly vector) partial sums."""

    def __init__(self, shape=()):
        self.total = np.zeros(shape)
        self._c = np.zeros(shape)

    def add(self, value):
        value = np.asarray(value, dtype=float)
        t = self.total + value
        big = np.abs(self.total) >= np.abs(value)
        self._c += np.where(big, (self.total - t) + value, (value - t) + self.total)
        self.total = t

    @property
    def value(self):
        return self.total + self._c


class BatchSums:
    """Groups a lockstep multi-chain stream into per-chain batches of fixed length."""

    def __init__(self, n_chains: int, batch_length: int):
        self.n_chains = int(n_chains)
        self.batch_length = int(batch_length)
        self._part = np.zeros(self.n_chains)
        self._part_n = 0
        self._full: list[np.ndarray] = []

    def update(self, values):
        values = np.asarray(values, dtype=float).reshape(self.n_chains, -1)
        b = self.batch_length
        k = values.shape[1]
        pos = 0
        if self._part_n:
            take = min(b - self._part_n, k)
            self._part += values[:, :take].sum(axis=1)
            self._part_n += take
            pos = take
            if self._part_n == b:
                self._full.append(self._part[:, None].copy())
                self._part[:] = 0.0
                self._part_n = 0
        nfull = (k - pos) // b
        if nfull:
            end = pos + nfull * b
            self._full.append(values[:, pos:end].reshape(self.n_chains, nfull, b).sum(axis=2))
            pos = end
        if pos < k:
            self._part += values[:, pos:].sum(axis=1)
            self._part_n += k - pos

    def sums(self) -> np.ndarray:
        """Full-batch sums, shape ``(n_chains, n_batches)``; a trailing partial batch is excluded."""
        if not self._full:
            return np.empty((self.n_chains, 0))
        return np.concatenate(self._full, axis=1)


class LagCrossAccumulator:
    """Windowed cross sum between score terms and later observable values.

    Streams ``(I_t, Phi_t)`` pairs, for ``n_chains`` orbits in lockstep, and
    accumulates

        A = sum_t I_t * (Phi_t + Phi_{t+1} + ... + Phi_{t+W-1})
        B = sum_t I_t

    over every ``t`` whose window has been completely observed. Terms whose
    window is still open when the stream ends are discarded. Only the last
    ``W - 1`` pairs are retained between calls.

    With ``batch_length`` set, completed terms are also grouped per chain, in
    stream order, into batches for batch-means error bars.
    """

    def __init__(self, window: int, n_chains: int = 1, batch_length: int | None = None):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = int(window)
        self.n_chains = int(n_chains)
        self._carry_i = np.empty((self.n_chains, 0))
        self._carry_phi = np.empty((self.n_chains, 0))
        self._a = CompensatedSum(self.n_chains)
        self._b = CompensatedSum(self.n_chains)
        self.completed = 0
        self._batch_a = BatchSums(self.n_chains, batch_length) if batch_length else None
        self._batch_b = BatchSums(self.n_chains, batch_length) if batch_length else None

    def update(self, scores, phis):
        """Push a chunk; ``scores`` and ``phis`` have shape ``(n_chains, t)`` or ``(t,)``."""
        scores = np.asarray(scores, dtype=float).reshape(self.n_chains, -1)
        phis = np.asarray(phis, dtype=float).reshape(self.n_chains, -1)
        if scores.shape != phis.shape:
            raise ValueError("scores and phis must have the same shape")
        i_all = np.concatenate([self._carry_i, scores], axis=1)
        phi_all = np.concatenate([self._carry_phi, phis], axis=1)
        w = self.window
        n = i_all.shape[1]
        k = n - w + 1
        if k > 0:
            csum = np.zeros((self.n_chains, n + 1))
            np.cumsum(phi_all, axis=1, out=csum[:, 1:])
            win = csum[:, w : w + k] - csum[:, :k]
            prod = i_all[:, :k] * win
            self._a.add(prod.sum(axis=1))
            self._b.add(i_all[:, :k].sum(axis=1))
            self.completed += k
            if self._batch_a is not None:
                self._batch_a.update(prod)
                self._batch_b.update(i_all[:, :k])
        keep = min(n, w - 1)
        self._carry_i = i_all[:, n - keep :].copy()
        self._carry_phi = phi_all[:, n - keep :].copy()

    @property
    def a(self) -> np.ndarray:
        """Per-chain ``A`` totals."""
        return self._a.value

    @property
    def b(self) -> np.ndarray:
        """Per-chain ``B`` totals."""
        return self._b.value

    def batches(self):
        """Per-chain full-batch sums of the ``A`` and ``B`` summands."""
        if self._batch_a is None:
            raise ValueError("accumulator was built without batch_length")
        return self._batch_a.sums(), self._batch_b.sums()

    def estimate(self, phi_avg: float, count: int | None = None, centralize: bool = True) -> float:
        """``-(A - phi_avg * W * B) / L`` summed over chains."""
        count = self.completed * self.n_chains if count is None else count
        a = math.fsum(self.a)
        b = math.fsum(self.b)
        shift = phi_avg * self.window * b if centralize else 0.0
        return -(a - shift) / count


def naive_lag_sum(scores, phis, window: int, n_terms: int) -> tuple[float, float]:
    """Direct ``O(W * L)`` evaluation of ``A`` and ``B`` on a single stream (test oracle)."""
    a = 0.0
    b = 0.0
    for t in range(n_terms):
        s = 0.0
        for n in range(window):
            s += phis[t + n]
        a += scores[t] * s
        b += scores[t]
    return a, b


def autocorrelation(x, max_lag: int) -> np.ndarray:
    """Sample autocorrelation at lags ``0..max_lag`` (FFT based)."""
    x = np.asarray(x, dtype=float).ravel()
    x = x - x.mean()
    n = x.size
    nfft = 1 << int(np.ceil(np.log2(2 * n)))
    fx = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(fx * np.conj(fx), nfft)[: max_lag + 1] / n
    return acov / acov[0]


def fit_decay_rate(x, max_lag: int = 50) -> float:
    """Estimate a geometric correlation-decay rate ``theta`` from a pilot stream.

    Least squares of ``log|rho(k)|`` on ``k`` through the origin over lags
    ``1..max_lag``, truncated at the first lag where ``|rho|`` falls below the
    white-noise floor ``2 / sqrt(n)``. A rough guide, not a certified rate.
    """
    x = np.asarray(x, dtype=float).ravel()
    rho = autocorrelation(x, max_lag)[1:]
    floor = 2.0 / math.sqrt(x.size)
    below = np.nonzero(np.abs(rho) < floor)[0]
    stop = below[0] if below.size else rho.size
    if stop == 0:
        return min(floor, 0.99)
    lags = np.arange(1, stop + 1, dtype=float)
    slope = float(np.dot(lags, np.log(np.abs(rho[:stop]))) / np.dot(lags, lags))
    return float(min(math.exp(slope), 0.999))
