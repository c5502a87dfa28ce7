"""Waiting times for (k1, k2)-events and their negative binomial bounds.

A (k1, k2)-event is a run of k1 failures immediately followed by k2
successes in Bernoulli(p_bar) trials, counted without overlap. With
a = (1 - p_bar)^k1 p_bar^k2 and k = k1 + k2, the number of non-event trials
before the first event has PGF a / (1 - z + a z^k), and b_m are the power
series coefficients of 1 / (1 - z + a z^k).

The bound series need D_l = b_l - q b_{l-1}. For small p_bar the two terms
agree to many digits, so D is generated by its own recursion
D_l = D_{l-1} - a D_{l-k} from an analytically supplied head instead of
by subtraction.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import _kernels, _series
from ._conv import convolve_power
from .bounds import SQRT_2_OVER_PI, BoundReport, Scheme
from .dist import Pmf
from .errors import InvalidParams, NbSteinError
from .matching import NbParams

P_BARS = (0.25, 0.125, 0.0625)
TABLE_NS = (50, 100)
TABLE_GRID = (
    (1, 4), (1, 5), (1, 6), (1, 7), (1, 8), (1, 9),
    (2, 4), (2, 5), (2, 6), (2, 7), (2, 8),
    (3, 4), (3, 5), (3, 6), (3, 7),
    (4, 4), (4, 5), (4, 6),
    (5, 4), (5, 5),
    (6, 4),
)


@dataclass(frozen=True)
class K1K2Config:
    k1: int
    k2: int
    p_bar: float
    n: int = 1

    def __post_init__(self):
        for name in ("k1", "k2"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {v}")
        if self.k1 == 0 and self.k2 == 0:
            raise ValueError("(k1, k2) = (0, 0) is excluded")
        if not 0.0 < self.p_bar < 1.0:
            raise ValueError(f"p_bar must lie in (0, 1), got {self.p_bar}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")

    @property
    def k(self) -> int:
        return self.k1 + self.k2

    @property
    def q_bar(self) -> float:
        return 1.0 - self.p_bar

    @property
    def a(self) -> float:
        return self.q_bar**self.k1 * self.p_bar**self.k2

    def hypothesis_flags(self) -> tuple[str, ...]:
        # a pure run F^k1 or S^k2 can overlap a shifted copy of itself, so the
        # renewal PGF above no longer describes the counting process
        if self.k1 == 0 or self.k2 == 0:
            return ("pattern is a pure run (k1 = 0 or k2 = 0); waiting-time PGF does not apply",)
        return ()


@dataclass(frozen=True)
class BSeries:
    b: np.ndarray
    a: float
    k: int

    def partial_sum(self) -> float:
        return math.fsum(self.b)


def b_coeffs(cfg: K1K2Config, L: int) -> BSeries:
    """b_0..b_L of 1/(1 - z + a z^k) by the linear recursion."""
    k = cfg.k
    if L < k:
        raise ValueError(f"L must be at least k = {k}")
    b = _kernels.recurrence(np.ones(k), cfg.a, k, L + 1)
    b.setflags(write=False)
    return BSeries(b=b, a=cfg.a, k=k)


def b_closed_form(cfg: K1K2Config, m_max: int) -> np.ndarray:
    """sum_{l <= m/k} (-1)^l C(m - l(k-1), l) a^l for m = 0..m_max."""
    k, a = cfg.k, cfg.a
    out = np.empty(m_max + 1)
    for m in range(m_max + 1):
        terms = [(-1) ** l * math.comb(m - l * (k - 1), l) * a**l for l in range(m // k + 1)]
        out[m] = math.fsum(terms)
    return out


def dominant_root_offset(a: float, k: int) -> float:
    """u = z0 - 1 for the smallest positive root z0 of 1 - z + a z^k.

    u solves u = a (1 + u)^k. It is returned as is because for small a the
    root z0 itself cannot hold u to full relative precision.
    """
    if k == 1:
        return a / (1.0 - a)
    z_turn = (1.0 / (k * a)) ** (1.0 / (k - 1))
    if 1.0 - z_turn + a * z_turn**k >= 0:
        raise NbSteinError(f"1 - z + a z^k has no positive root for a = {a}, k = {k}")
    return brentq(lambda u: u - a * (1.0 + u) ** k, 0.0, z_turn - 1.0, xtol=1e-300, rtol=1e-15)


def dominant_ratio(a: float, k: int) -> float:
    """1/z0; b_m and D_m shrink by this factor per step once the other roots have died out."""
    return 1.0 / (1.0 + dominant_root_offset(a, k))


# ---------------------------------------------------------------------------
# matching
# ---------------------------------------------------------------------------


def one_param_params(cfg: K1K2Config) -> NbParams:
    """p = a/(1 - k a) with alpha q = n."""
    a, k = cfg.a, cfg.k
    if not (k + 1) * a < 1.0:
        raise InvalidParams(f"(k + 1) a = {(k + 1) * a:.6g} must be below 1")
    p = a / (1.0 - k * a)
    return NbParams(cfg.n / (1.0 - p), p)


def two_param_params(cfg: K1K2Config) -> NbParams:
    a, k = cfg.a, cfg.k
    h = 1.0 - 2.0 * k * a + k * a * a
    if not h > 0:
        raise InvalidParams(f"1 - 2ka + ka^2 = {h:.6g} must be positive")
    den = 1.0 - (2 * k - 1) * a
    if not den > 0:
        raise InvalidParams("1 - (2k - 1) a must be positive")
    p = (1.0 - k * a) * a / den
    return NbParams(cfg.n * (1.0 - k * a) ** 2 / h, p)


def _head_gap(cfg: K1K2Config, scheme: Scheme) -> tuple[float, float]:
    """(p, p - a) for the scheme, with p - a in cancellation-free form."""
    a, k = cfg.a, cfg.k
    if scheme == Scheme.K1K2_ONE:
        p = one_param_params(cfg).p
        return p, k * a * a / (1.0 - k * a)
    p = two_param_params(cfg).p
    return p, (k - 1) * a * a / (1.0 - (2 * k - 1) * a)


def b_differences(cfg: K1K2Config, L: int, scheme: Scheme | str = Scheme.K1K2_ONE) -> np.ndarray:
    """D_0..D_L with D_l = b_l - q b_{l-1} (D_0 = b_0 = 1) for the scheme's q."""
    scheme = Scheme(scheme)
    k = cfg.k
    if L < k:
        raise ValueError(f"L must be at least k = {k}")
    p, gap = _head_gap(cfg, scheme)
    head = np.empty(k + 1)
    head[0] = 1.0
    head[1:k] = p
    head[k] = gap
    d = np.empty(L + 1)
    # D_l for l >= k+1 only depends on D_{l-1} and D_{l-k} with l - k >= 1
    d[1:] = _kernels.recurrence(head[1:], cfg.a, k, L)
    d[0] = 1.0
    return d


# ---------------------------------------------------------------------------
# event counts and waiting-time laws
# ---------------------------------------------------------------------------


def order_k1k2_table(cfg: K1K2Config, n_trials: int) -> np.ndarray:
    """P[x, t] = P(x events in t trials) for t = 0..n_trials, x = 0..n_trials//k."""
    if n_trials < 0:
        raise ValueError("n_trials must be nonnegative")
    return _kernels.event_count_table(cfg.a, cfg.k, n_trials)


def order_k1k2_pmf(cfg: K1K2Config, x: int, n_trials: int) -> float:
    """P(exactly x non-overlapping (k1, k2)-events in n_trials trials)."""
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x > n_trials // cfg.k:
        return 0.0
    return float(order_k1k2_table(cfg, n_trials)[x, n_trials])


def single_waiting_pmf(cfg: K1K2Config, L: int) -> Pmf:
    """Non-event trials before the first event: P(m) = a b_m, tail b_{L+k-1}."""
    bs = b_coeffs(cfg, L + cfg.k - 1)
    probs = cfg.a * bs.b[:L]
    return Pmf.from_raw(probs, float(bs.b[L + cfg.k - 1]))


def waiting_pmf(cfg: K1K2Config, L: int) -> Pmf:
    """Non-event trials before the n-th event, on 0..L-1."""
    if L < 1:
        raise ValueError("L must be at least 1")
    return convolve_power(single_waiting_pmf(cfg, L), cfg.n, L)


def waiting_moments(cfg: K1K2Config) -> tuple[float, float]:
    """Mean and variance of the n-event waiting time."""
    a, k, n = cfg.a, cfg.k, cfg.n
    return n * (1.0 - k * a) / a, n * (1.0 - (2 * k - 1) * a) / a**2


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------

FORMS = ("tabulated", "printed")


def _check_bound_form(form):
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")


def _sums(d, rho):
    """Weighted sums of |D_1..D_L| and their tail estimates."""
    tail = d[1:]
    out = {}
    for name, w in (("S0", _series.ONE), ("S1", _series.LINEAR), ("S2", _series.HALF_PAIR)):
        out[name] = _series.weighted_abs_sum(tail, w, start=1, ratio=rho)
    return out


def one_param_bound_k1k2(cfg: K1K2Config, L: int | None = None, *, form: str = "tabulated") -> BoundReport:
    """Mean-matched bound with alpha q = n and p = a/(1 - k a).

    ``form="tabulated"`` is the expression that generates the published table,
    (1 - ka) S1 + k(k-1) a + k(k-1) a S0; ``form="printed"`` is the stated
    inequality, whose last term is k a (S0 + 1). Here S0 and S1 are the
    plain and l-weighted sums of |D_l| over l = 1..L.

    Over the full series (1 - ka) sum l D_l = 1, so the untruncated value is
    never below 1; values below 1 come from stopping at L, and the reported
    tail estimate shows how much is missing.
    """
    _check_bound_form(form)
    L = _series.resolve_truncation(L)
    params = one_param_params(cfg)
    a, k = cfg.a, cfg.k
    d = b_differences(cfg, L, Scheme.K1K2_ONE)
    rho = dominant_ratio(a, k)
    s = _sums(d, rho)
    (s0, t0), (s1, t1) = s["S0"], s["S1"]
    terms = {"first order": (1.0 - k * a) * s1, "k(k-1)a": k * (k - 1) * a}
    if form == "tabulated":
        terms["shift"] = k * (k - 1) * a * s0
        tail = (1.0 - k * a) * t1 + k * (k - 1) * a * t0
    else:
        terms["shift"] = k * a * (s0 + 1.0)
        tail = (1.0 - k * a) * t1 + k * a * t0
    return BoundReport.from_terms(
        Scheme.K1K2_ONE, params, terms,
        truncation_L=L,
        tail_estimate=tail,
        hypothesis_flags=cfg.hypothesis_flags(),
        notes={"form": form, "ratio": rho, "a": a},
    )


def _weighted_shifted(d, k, rho):
    """sum_{l=k}^{L} l(l-1)/2 |D_{l-k+1}|, as a series in j = l - k + 1."""
    shift = _series.HALF_PAIR(np.polynomial.Polynomial([k - 1.0, 1.0]))
    body = d[1 : d.size - (k - 1)]
    return _series.weighted_abs_sum(body, shift, start=1, ratio=rho)


def two_param_smoothing(cfg: K1K2Config) -> float:
    """sqrt(2/pi) (1/4 + n(1 - (a/2)(1 + a)))^(-1/2) as used for the table."""
    a = cfg.a
    return SQRT_2_OVER_PI / math.sqrt(0.25 + cfg.n * (1.0 - 0.5 * a * (1.0 + a)))


def two_param_bound_k1k2(cfg: K1K2Config, L: int | None = None, *, form: str = "tabulated") -> BoundReport:
    """Mean- and variance-matched bound.

    Both forms share the prefactor (n / alpha q) times :func:`two_param_smoothing`.
    The bracket is, with S2 = sum l(l-1)/2 |D_l|, S1 = sum l |D_l|,
    S0 = sum |D_l| and w = (k-1)(k-2)/2:

    * ``"tabulated"``: (1 - ka) S2 + k a (k-1) S1 + k a w (1 + S0)
    * ``"printed"``: S2 + k(k-1)(k-2)/2 a + k a sum_{l>=k} l(l-1)/2 |D_{l-k+1}|
    """
    _check_bound_form(form)
    L = _series.resolve_truncation(L)
    params = two_param_params(cfg)
    a, k, n = cfg.a, cfg.k, cfg.n
    d = b_differences(cfg, L, Scheme.K1K2_TWO)
    rho = dominant_ratio(a, k)
    c = n / params.alpha_q * two_param_smoothing(cfg)
    s = _sums(d, rho)
    (s0, t0), (s1, t1), (s2, t2) = s["S0"], s["S1"], s["S2"]
    w = (k - 1) * (k - 2) / 2.0
    if form == "tabulated":
        terms = {
            "second order": c * (1.0 - k * a) * s2,
            "first order": c * k * a * (k - 1) * s1,
            "shift": c * k * a * w * (1.0 + s0),
        }
        tail = c * ((1.0 - k * a) * t2 + k * a * (k - 1) * t1 + k * a * w * t0)
    else:
        sh, th = _weighted_shifted(d, k, rho)
        terms = {
            "second order": c * s2,
            "k(k-1)(k-2)/2 a": c * k * (k - 1) * (k - 2) / 2.0 * a,
            "shift": c * k * a * sh,
        }
        tail = c * (t2 + k * a * th)
    return BoundReport.from_terms(
        Scheme.K1K2_TWO, params, terms,
        truncation_L=L,
        tail_estimate=tail,
        hypothesis_flags=cfg.hypothesis_flags(),
        notes={"form": form, "ratio": rho, "a": a, "smoothing": two_param_smoothing(cfg)},
    )


# ---------------------------------------------------------------------------
# tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TableCell:
    k1: int
    k2: int
    p_bar: float
    n: int | None
    scheme: Scheme
    report: BoundReport | None
    error: str | None = None

    @property
    def bound(self) -> float:
        return self.report.bound if self.report is not None else math.nan


def _cell(job):
    k1, k2, p_bar, n, scheme, L, form = job
    cfg = K1K2Config(k1, k2, p_bar, n or 1)
    fn = one_param_bound_k1k2 if scheme == Scheme.K1K2_ONE else two_param_bound_k1k2
    try:
        return TableCell(k1, k2, p_bar, n, scheme, fn(cfg, L, form=form))
    except NbSteinError as exc:
        return TableCell(k1, k2, p_bar, n, scheme, None, f"{type(exc).__name__}: {exc}")


def _run(jobs, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_cell, jobs))  # map keeps input order
    return [_cell(j) for j in jobs]


def table1(grid=TABLE_GRID, p_bars=P_BARS, L: int | None = None, *, form="tabulated", workers=None):
    """Mean-matched bounds over (k1, k2) x p_bar; the bound does not depend on n."""
    L = _series.resolve_truncation(L)
    jobs = [(k1, k2, pb, None, Scheme.K1K2_ONE, L, form) for k1, k2 in grid for pb in p_bars]
    return _run(jobs, workers)


def table2(grid=TABLE_GRID, p_bars=P_BARS, ns=TABLE_NS, L: int | None = None, *, form="tabulated", workers=None):
    """Mean- and variance-matched bounds over (k1, k2) x p_bar x n."""
    L = _series.resolve_truncation(L)
    jobs = [
        (k1, k2, pb, n, Scheme.K1K2_TWO, L, form)
        for k1, k2 in grid for pb in p_bars for n in ns
    ]
    return _run(jobs, workers)
