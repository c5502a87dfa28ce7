"""Truncated convolution of PMFs with tail-mass bookkeeping."""
from __future__ import annotations

import math

import numpy as np
from scipy.signal import fftconvolve

from .dist import Pmf

DIRECT_LIMIT = 4096


def _raw_convolve(x, y):
    if min(x.size, y.size) <= DIRECT_LIMIT // 16 or x.size * y.size <= DIRECT_LIMIT**2 // 4:
        return np.convolve(x, y)
    return fftconvolve(x, y)


def convolve(x: Pmf, y: Pmf, length: int | None = None) -> Pmf:
    """Law of X + Y for independent X, Y, kept on 0..length-1.

    The tail is P(X >= Lx or Y >= Ly) plus any mass the full product pushes
    past ``length``; FFT round-off below zero is clamped and recorded.
    """
    if length is None:
        length = min(len(x), len(y))
    full = _raw_convolve(x.probs, y.probs)
    kept = full[:length]
    pushed = math.fsum(full[length:]) if full.size > length else 0.0
    if kept.size < length:
        kept = np.concatenate([kept, np.zeros(length - kept.size)])
    tail = x.tail_mass + y.tail_mass - x.tail_mass * y.tail_mass + max(pushed, 0.0)
    neg = kept < 0
    clamped = float(-kept[neg].sum()) if neg.any() else 0.0
    kept = np.where(neg, 0.0, kept)
    return Pmf(kept, min(tail, 1.0), clamped)


def convolve_power(x: Pmf, n: int, length: int | None = None) -> Pmf:
    """n-fold self-convolution by binary powering."""
    if n < 1:
        raise ValueError("n must be positive")
    if length is None:
        length = len(x)
    result = None
    base = x if len(x) == length else Pmf(x.padded(length), x.tail_mass + max(0.0, math.fsum(x.probs[length:])))
    while n:
        if n & 1:
            result = base if result is None else convolve(result, base, length)
        n >>= 1
        if n:
            base = convolve(base, base, length)
    return result
