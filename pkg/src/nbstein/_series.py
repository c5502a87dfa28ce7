"""Truncated weighted absolute series with a geometric tail estimate.

A sequence d_1, d_2, ... whose magnitudes eventually shrink by a factor rho
per step has tail

    sum_{j >= 1} w(L + j) |d_{L+j}|  ~  |d_L| sum_{j >= 1} w(L + j) rho^j,

which is a finite combination of sum_j j^k rho^j for a polynomial weight w.
"""
from __future__ import annotations

import math
import os

import numpy as np
from numpy.polynomial import Polynomial

from .errors import NonDecayingSeries

ONE = Polynomial([1.0])
LINEAR = Polynomial([0.0, 1.0])
PAIR = Polynomial([0.0, -1.0, 1.0])  # l(l-1)
HALF_PAIR = PAIR / 2.0
TRIPLE = Polynomial([0.0, 1.0 / 3.0, -0.5, 1.0 / 6.0])  # l(l-1)(l-2)/6


def power_sums(rho: float, degree: int) -> np.ndarray:
    """[sum_{j>=1} j^k rho^j for k = 0..degree], degree at most 3."""
    if not 0.0 <= rho < 1.0:
        raise NonDecayingSeries(f"ratio {rho} does not give a convergent tail")
    if degree > 3:
        raise ValueError("weights of degree above 3 are not supported")
    u = 1.0 - rho
    sums = [
        rho / u,
        rho / u**2,
        rho * (1.0 + rho) / u**3,
        rho * (1.0 + 4.0 * rho + rho * rho) / u**4,
    ]
    return np.array(sums[: degree + 1])


def tail_estimate(last: float, weight: Polynomial, L: int, rho: float) -> float:
    """|last| * sum_{j>=1} weight(L + j) rho^j."""
    if last == 0.0 or rho == 0.0:
        return 0.0
    shifted = weight(Polynomial([float(L), 1.0]))
    coef = np.abs(shifted.coef)  # tail bound, so no cancellation credit
    return abs(last) * math.fsum(coef * power_sums(rho, coef.size - 1))


def empirical_ratio(d: np.ndarray, window: int = 8) -> float:
    """Largest recent successive-magnitude ratio; 0 if the sequence has died out."""
    mag = np.abs(np.asarray(d, dtype=np.float64))
    tail = mag[-(window + 1):]
    if tail.size < 2 or tail[-1] == 0.0:
        return 0.0
    prev = tail[:-1]
    ok = prev > 0
    if not ok.any():
        return 0.0
    return float(np.max(tail[1:][ok] / prev[ok]))


def weighted_abs_sum(d, weight: Polynomial, *, start: int = 1, ratio: float | None = None):
    """Return (sum_l weight(l) |d_l|, tail_estimate), where d[0] holds d_start.

    ``ratio`` is the asymptotic magnitude ratio of successive terms; when
    omitted it is read off the last few stored terms.
    """
    d = np.asarray(d, dtype=np.float64)
    if d.size == 0:
        return 0.0, 0.0
    l = np.arange(start, start + d.size, dtype=np.float64)
    value = math.fsum(weight(l) * np.abs(d))
    rho = empirical_ratio(d) if ratio is None else abs(ratio)
    if rho >= 1.0 and d[-1] != 0.0:
        raise NonDecayingSeries(f"terms are not decaying at l = {start + d.size - 1} (ratio {rho:.6g})")
    tail = tail_estimate(d[-1], weight, start + d.size - 1, rho)
    return value, tail


DEFAULT_TRUNCATION = 3000
TRUNCATION_ENV = "NB_STEIN_TRUNCATION"


def resolve_truncation(L: int | None) -> int:
    """Explicit L, else the environment override, else 3000."""
    if L is not None:
        return int(L)
    raw = os.environ.get(TRUNCATION_ENV)
    if raw is None or not raw.strip():
        return DEFAULT_TRUNCATION
    value = int(raw)
    if value < 10:
        raise ValueError(f"{TRUNCATION_ENV} must be at least 10, got {value}")
    return value
