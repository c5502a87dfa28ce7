"""Stein operators for NB, its perturbations, and waiting times.

Test functions live on 0..R with g(0) = 0 and g = 0 beyond R. Every sum
in the operators then stops at R, so operators are evaluated exactly and
E[A g(X)] needs the law of X only on 0..R.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dist import Pmf
from .errors import TruncationError
from .k1k2 import K1K2Config, b_coeffs
from .matching import NbParams, ThreeParamFit


@dataclass(frozen=True)
class TestFunction:
    """g(0..R) with g(0) = 0; g is zero off the stored range."""

    __test__ = False  # not a pytest class

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 2:
            raise ValueError("a test function needs g(0) and at least g(1)")
        if v[0] != 0.0:
            raise ValueError("g(0) must be 0")
        if not np.all(np.isfinite(v)):
            raise ValueError("g must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def random(cls, rng: np.random.Generator, R: int, scale: float = 1.0) -> TestFunction:
        v = rng.uniform(-scale, scale, R + 1)
        v[0] = 0.0
        return cls(v)

    @classmethod
    def indicator(cls, j: int, R: int | None = None) -> TestFunction:
        if j < 1:
            raise ValueError("g(0) = 0 rules out j = 0")
        v = np.zeros((j if R is None else R) + 1)
        v[j] = 1.0
        return cls(v)

    @property
    def R(self) -> int:
        return self.values.size - 1

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __call__(self, m):
        m = np.asarray(m)
        ok = (m >= 0) & (m <= self.R)
        out = np.zeros(m.shape)
        out[ok] = self.values[m[ok]]
        return out if out.ndim else float(out)

    def __add__(self, other: TestFunction) -> TestFunction:
        n = max(self.values.size, other.values.size)
        return TestFunction(_pad(self.values, n) + _pad(other.values, n))

    def __mul__(self, c: float) -> TestFunction:
        return TestFunction(c * self.values)

    __rmul__ = __mul__


def _pad(v, n):
    out = np.zeros(n)
    out[: v.size] = v
    return out


def _m_array(m):
    arr = np.asarray(m, dtype=np.int64)
    if np.any(arr < 0):
        raise ValueError("m must be nonnegative")
    return arr


def _scalarize(out, m):
    return float(out) if np.ndim(m) == 0 else out


def _shift_sum(g: TestFunction, m, weights, first: int):
    """sum_j weights[j] g(m + first + j) for each m (weights array, j >= 0)."""
    m = np.atleast_1d(m)
    w = np.asarray(weights, dtype=np.float64)
    out = np.zeros(m.shape)
    for idx, mi in enumerate(m):
        lo = mi + first
        if lo > g.R or w.size == 0:
            continue
        n = min(w.size, g.R - lo + 1)
        out[idx] = math.fsum(w[:n] * g.values[lo : lo + n])
    return out


def _needed(g: TestFunction, m) -> int:
    """Longest coefficient run any sum needs for these m (at least 1)."""
    return max(1, g.R - int(np.min(np.atleast_1d(m))))


def _check_length(L, need):
    if L is not None and L < need:
        raise TruncationError(f"L = {L} is shorter than the {need} terms this test function needs")


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def nb_stein_apply(params: NbParams, g: TestFunction, m):
    """q (alpha + m) g(m+1) - m g(m)."""
    mm = _m_array(m)
    out = params.q * (params.alpha + mm) * g(mm + 1) - mm * g(mm)
    return _scalarize(out, m)


def y_stein_apply(mixture, params: NbParams, g: TestFunction, m, L: int | None = None):
    """NB operator plus (sum a_{i,1} - alpha q) g(m+1) + sum_i sum_l g(m+l+1)(a_{i,l+1} - q a_{i,l})."""
    mm = _m_array(m)
    need = _needed(g, mm)
    _check_length(L, need)
    out = np.atleast_1d(nb_stein_apply(params, g, mm)).astype(np.float64)
    first = sum(c.count * float(c.a_coeffs(1)[0]) for c in mixture)
    out = out + (first - params.alpha_q) * np.atleast_1d(g(mm + 1))
    for c in mixture:
        d = c.a_diffs(params.q, need)  # entry l-1 pairs with g(m + l + 1)
        out = out + c.count * _shift_sum(g, np.atleast_1d(mm), d, 2)
    return _scalarize(out.reshape(mm.shape), m)


def y_perturbation_apply(mixture, params: NbParams, g: TestFunction, m):
    """sum_i sum_{j>=1} Delta g(m+j) sum_{l>=j} (a_{i,l+1} - q a_{i,l}).

    Equals y_stein_apply minus nb_stein_apply when alpha q / p is the
    mixture mean. Each tail sum is the full sum p mu_i - a_{i,1} minus a
    finite head, so nothing is truncated.
    """
    mm = np.atleast_1d(_m_array(m))
    need = _needed(g, mm)
    dg = np.diff(g.values, append=0.0)  # Delta g(x) = g(x+1) - g(x), x = 0..R
    delta = TestFunction(np.concatenate([[0.0], dg[1:]])) if dg.size > 1 else None
    out = np.zeros(mm.shape, dtype=np.float64)
    for c in mixture:
        d = c.a_diffs(params.q, need)
        total = params.p * c.moments()[0] - float(c.a_coeffs(1)[0])
        tails = total - np.concatenate([[0.0], np.cumsum(d)[:-1]])  # sum_{l>=j} d_l, j = 1..need
        # j >= 1 pairs with Delta g(m + j); Delta g(0) only appears for m = 0, j = 0, which is excluded
        out = out + c.count * _shift_sum(delta, mm, tails, 1)
    return _scalarize(out.reshape(np.shape(m)) if np.ndim(m) else out[0], m)


def v_stein_apply(fit: ThreeParamFit, g: TestFunction, m, L: int | None = None):
    """q (alpha + 1 + m) g(m+1) - m g(m) + (q_hat - q) sum_{l>=0} g(m+l+1) q_hat^l."""
    mm = _m_array(m)
    need = _needed(g, mm)
    _check_length(L, need)
    q, qh = fit.q, fit.q_hat
    out = q * (fit.alpha + 1.0 + mm) * g(mm + 1) - mm * g(mm)
    if qh != q and qh > 0:
        w = qh ** np.arange(need, dtype=np.float64)
        out = np.atleast_1d(out) + (qh - q) * _shift_sum(g, np.atleast_1d(mm), w, 1)
    return _scalarize(np.reshape(out, mm.shape), m)


def k1k2_stein_apply(cfg: K1K2Config, params: NbParams, g: TestFunction, m, L: int | None = None):
    """Waiting-time operator for n events, written around NB(alpha, p):

    q(alpha+m) g(m+1) - m g(m) + (n - alpha q) g(m+1)
      + n sum_{l>=1} g(m+l+1) (b_l - q b_{l-1})
      - n k a sum_{l>=k-1} g(m+l+1) b_{l-k+1}
      + n q k a sum_{l>=k} g(m+l+1) b_{l-k}.
    """
    mm = _m_array(m)
    need = _needed(g, mm)
    _check_length(L, need)
    n, k, a, q = cfg.n, cfg.k, cfg.a, params.q
    b = b_coeffs(cfg, need + k).b
    flat = np.atleast_1d(mm)
    out = np.atleast_1d(nb_stein_apply(params, g, flat)) + (n - params.alpha_q) * np.atleast_1d(g(flat + 1))
    out = out + n * _shift_sum(g, flat, b[1 : need + 1] - q * b[:need], 2)
    out = out - n * k * a * _shift_sum(g, flat, b[:need], k)
    out = out + n * q * k * a * _shift_sum(g, flat, b[:need], k + 1)
    return _scalarize(out.reshape(mm.shape), m)


# ---------------------------------------------------------------------------
# expectations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SteinExpectation:
    value: float
    tail_bound: float

    def __float__(self):
        return self.value


def stein_expectation(op: Callable, pmf: Pmf, g: TestFunction) -> SteinExpectation:
    """sum_m op(g, m) P(m), with a bound on the part the PMF does not cover.

    op(g, m) vanishes for m > R, so the only unknown contribution comes from
    m in [len(pmf), R] and is at most max |op| there times the tail mass.
    """
    L = len(pmf)
    m = np.arange(min(L, g.R + 1))
    vals = np.asarray(op(g, m), dtype=np.float64)
    value = math.fsum(vals * pmf.probs[: m.size])
    tail = 0.0
    if g.R >= L and pmf.tail_mass > 0:
        rest = np.asarray(op(g, np.arange(L, g.R + 1)), dtype=np.float64)
        tail = float(np.max(np.abs(rest))) * pmf.tail_mass
    return SteinExpectation(value, tail)
