"""Independent ground truth: exact PMFs, total variation, Monte Carlo.

Nothing here reuses the bound series. Approximand laws come from direct
convolution of component PMFs or from the waiting-time recursion, and the
approximant NB laws come from an accurate log-PMF.

Exact TV for a (k1, k2) waiting time comes from one of two engines:

``expansion`` (default)
    one waiting time has law c Ge(p1) + e, where e is a signed measure on
    a short head (p1 from the dominant root). Expanding (c Ge(p1) + e)^{*n}
    binomially in e makes every retained term a shifted NB law, so the sum of
    |P - Q| between sign changes reduces to NB CDF increments. This reaches
    waiting times with means of 1e10 and beyond in milliseconds.
``stream``
    walk both PMFs in one pass, without storing them, until the rigorous
    Chernoff tail is negligible (numba kernel; the numpy fallback stores
    and convolves). Used to cross-check the expansion where it is feasible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats
from scipy.optimize import brentq, minimize_scalar

from . import _kernels
from ._accel import JIT_ENABLED
from ._conv import convolve, convolve_power
from .bounds import BoundReport, Scheme, theorem_one, theorem_three, theorem_two
from .dist import Pmf, total_count
from .errors import DominationViolated
from .k1k2 import (
    K1K2Config,
    dominant_root_offset,
    one_param_bound_k1k2,
    one_param_params,
    two_param_bound_k1k2,
    two_param_params,
    waiting_moments,
)
from .matching import NbParams, ThreeParamFit, match_one_param, match_three_param, match_two_param
from .moments import aggregate

__all__ = [
    "convolve",
    "convolve_power",
    "lgamma_ratio",
    "nb_logpmf",
    "nb_pmf",
    "nb_tv",
    "tv_distance",
    "mixture_pmf",
    "v_pmf",
    "waiting_pmf_exact",
    "waiting_tv",
    "WaitingTV",
    "SimulationRun",
    "simulate_k1k2",
    "DominationReport",
    "verify_domination",
]


# ---------------------------------------------------------------------------
# negative binomial
# ---------------------------------------------------------------------------


def _stirling_remainder(z):
    z2 = 1.0 / (z * z)
    return (1.0 / 12.0 - z2 * (1.0 / 360.0 - z2 * (1.0 / 1260.0 - z2 / 1680.0))) / z


def lgamma_ratio(x, h):
    """log Gamma(x + h) - log Gamma(x) without cancelling two huge numbers.

    For x >= 30 the Stirling series is differenced term by term, which is
    accurate when |h| is not much larger than x. ``h`` may be an array.
    """
    x, h = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(h, dtype=np.float64))
    out = np.empty(x.shape)
    small = x < 30.0
    out[small] = special.gammaln(x[small] + h[small]) - special.gammaln(x[small])
    xs, hs = x[~small], h[~small]
    y = xs + hs
    out[~small] = (xs - 0.5) * np.log1p(hs / xs) + hs * np.log(y) - hs + (_stirling_remainder(y) - _stirling_remainder(xs))
    return out


def nb_logpmf(m, alpha: float, p: float):
    """log P(Z = m) for Z ~ NB(alpha, p); m may be real (continuous extension)."""
    m = np.asarray(m, dtype=np.float64)
    # log C(m + alpha - 1, m), differenced around whichever of m + 1, alpha is larger
    around_m = lgamma_ratio(m + 1.0, alpha - 1.0) - special.gammaln(alpha)
    around_alpha = lgamma_ratio(alpha, m) - special.gammaln(m + 1.0)
    comb = np.where(m + 1.0 >= alpha, around_m, around_alpha)
    return alpha * math.log(p) + m * math.log1p(-p) + comb


NB_ANCHOR_STRIDE = 512
SUBNORMAL_LOG = math.log(np.finfo(np.float64).tiny)


def _nb_probs(params: NbParams, L: int) -> np.ndarray:
    # the ratio recurrence, restarted every NB_ANCHOR_STRIDE steps from the
    # accurate log-PMF so rounding cannot accumulate and p^alpha may underflow
    m = np.arange(L, dtype=np.float64)
    ratios = np.empty(L)
    ratios[0] = 1.0
    ratios[1:] = params.q * (params.alpha + m[1:] - 1.0) / m[1:]
    starts = np.arange(0, L, NB_ANCHOR_STRIDE)
    log_anchors = nb_logpmf(starts, params.alpha, params.p)
    anchors = np.exp(log_anchors)
    out = np.empty(L)
    for i, s in enumerate(starts):
        if log_anchors[i] < SUBNORMAL_LOG:
            # a subnormal anchor has too few digits to carry a block
            out[s : s + NB_ANCHOR_STRIDE] = np.exp(nb_logpmf(m[s : s + NB_ANCHOR_STRIDE], params.alpha, params.p))
            continue
        block = ratios[s : s + NB_ANCHOR_STRIDE].copy()
        block[0] = 1.0
        out[s : s + block.size] = anchors[i] * np.cumprod(block)
    return out


def nb_pmf(params: NbParams, L: int) -> Pmf:
    """NB(alpha, p) on 0..L-1; the tail is the exact survival function."""
    if L < 1:
        raise ValueError("L must be at least 1")
    probs = _nb_probs(params, L)
    tail = float(stats.nbinom.sf(L - 1, params.alpha, params.p))
    return Pmf(probs, tail)


def _nb_mass(params: NbParams, s: float, t: float) -> float:
    """P(s <= Z < t) for integer s and integer or infinite t."""
    if t <= s:
        return 0.0
    a, p = params.alpha, params.p
    sf_s = 1.0 if s <= 0 else float(stats.nbinom.sf(s - 1, a, p))
    if sf_s < 0.5:
        sf_t = 0.0 if math.isinf(t) else float(stats.nbinom.sf(t - 1, a, p))
        return max(sf_s - sf_t, 0.0)
    cdf_t = 1.0 if math.isinf(t) else float(stats.nbinom.cdf(t - 1, a, p))
    cdf_s = 0.0 if s <= 0 else float(stats.nbinom.cdf(s - 1, a, p))
    return max(cdf_t - cdf_s, 0.0)


# ---------------------------------------------------------------------------
# total variation
# ---------------------------------------------------------------------------


def tv_distance(x: Pmf, y: Pmf) -> tuple[float, float]:
    """(1/2 sum_{m<L} |x_m - y_m|, 1/2 (x.tail + y.tail)) on the common range."""
    L = max(len(x), len(y))
    value = 0.5 * math.fsum(np.abs(x.padded(L) - y.padded(L)))
    return value, 0.5 * (x.tail_mass + y.tail_mass) + 0.5 * (x.clamped_mass + y.clamped_mass)


def _sign_segments(f, fprime, lo: float, hi: float) -> list[float]:
    """Real zeros of f on [lo, hi] when f' is monotone there (at most two)."""
    cuts = [lo]
    dlo, dhi = fprime(lo), fprime(hi)
    if dlo * dhi < 0:
        cuts.append(brentq(fprime, lo, hi, xtol=1e-9, rtol=1e-14))
    cuts.append(hi)
    roots = []
    for u, v in zip(cuts[:-1], cuts[1:]):
        fu, fv = f(u), f(v)
        if fu == 0.0:
            roots.append(u)
        elif fu * fv < 0:
            roots.append(brentq(f, u, v, xtol=1e-9, rtol=1e-14))
    return sorted(set(roots))


def _integer_breaks(roots, start: int) -> list[int]:
    return sorted({max(start, math.ceil(r)) for r in roots})


def _nb_reach(params: NbParams, sds: float = 40.0) -> float:
    return params.mean + sds * math.sqrt(params.variance) + 200.0


def nb_tv(x: NbParams, y: NbParams) -> tuple[float, float]:
    """Exact d_TV between two NB laws, returned as (value, error).

    log P_x(m) - log P_y(m) has a monotone derivative in m, so it changes
    sign at most twice; between sign changes the sum of |P_x - P_y| is a
    difference of CDF increments.
    """
    if x == y:
        return 0.0, 0.0

    def f(m):
        return float(nb_logpmf(m, x.alpha, x.p) - nb_logpmf(m, y.alpha, y.p))

    def fp(m):
        return (math.log1p(-x.p) - math.log1p(-y.p)) + float(special.digamma(m + x.alpha) - special.digamma(m + y.alpha))

    hi = max(_nb_reach(x), _nb_reach(y))
    breaks = [0] + _integer_breaks(_sign_segments(f, fp, 0.0, hi), 0) + [math.inf]
    total = []
    for s, t in zip(breaks[:-1], breaks[1:]):
        if t <= s:
            continue
        total.append(abs(_nb_mass(x, s, t) - _nb_mass(y, s, t)))
    value = 0.5 * math.fsum(total)
    return min(value, 1.0), 4 * len(total) * 1e-15 + 1e-16


# ---------------------------------------------------------------------------
# reference laws
# ---------------------------------------------------------------------------


def mixture_pmf(mixture, L: int) -> Pmf:
    """Law of the sum of all components (with multiplicity), on 0..L-1."""
    result = None
    for comp in mixture:
        part = convolve_power(comp.pmf(L), comp.count, L)
        result = part if result is None else convolve(result, part, L)
    if result is None:
        return Pmf.point_mass(0, L)
    return result


def v_pmf(fit: ThreeParamFit, L: int) -> Pmf:
    """NB(alpha, p) convolved with Ge(p_hat); p_hat = 1 leaves the NB unchanged."""
    base = nb_pmf(fit.nb, L)
    if fit.p_hat >= 1.0:
        return base
    m = np.arange(L, dtype=np.float64)
    geo = Pmf(fit.p_hat * fit.q_hat**m, fit.q_hat**L)
    return convolve(base, geo, L)


def waiting_pmf_exact(cfg: K1K2Config, L: int) -> Pmf:
    """n-event waiting time on 0..L-1 by its own order-k recursion.

    (m+1) P_{m+1} = (m+n) P_m - a (m-k+1+nk) P_{m-k+1}, P_0 = a^n, which
    follows from differentiating the PGF (a / (1 - z + a z^k))^n.
    """
    a, k, n = cfg.a, cfg.k, cfg.n
    P = np.zeros(L)
    P[0] = a**n
    for m in range(L - 1):
        lag = P[m - k + 1] if m - k + 1 >= 0 else 0.0
        P[m + 1] = ((m + n) * P[m] - a * (m - k + 1 + n * k) * lag) / (m + 1)
    return Pmf.from_raw(P, max(0.0, 1.0 - math.fsum(P)))


# ---------------------------------------------------------------------------
# exact TV for waiting times
# ---------------------------------------------------------------------------

# absolute accuracy of either engine: ~1e-13 relative PMF error summed over
# all the mass, plus CDF rounding
TV_ACCURACY_FLOOR = 5e-12
STREAM_LIMIT = 1 << 27 if JIT_ENABLED else 1 << 22


@dataclass(frozen=True)
class WaitingTV:
    value: float
    error: float
    method: str
    details: dict = field(default_factory=dict)


def _chernoff_tail(cfg: K1K2Config, L: int) -> float:
    """Rigorous bound on P(T >= L) from min_z E[z^T] z^-L over 1 < z < z0."""
    a, k, n = cfg.a, cfg.k, cfg.n
    log_z0 = math.log1p(dominant_root_offset(a, k))

    def log_bound(t):
        z = math.exp(t)
        den = -math.expm1(t) + a * z**k
        if den <= 0:
            return math.inf
        return n * (math.log(a) - math.log(den)) - L * t

    res = minimize_scalar(log_bound, bounds=(0.0, log_z0 * (1 - 1e-12)), method="bounded",
                          options={"xatol": log_z0 * 1e-10})
    return min(1.0, math.exp(min(res.fun, 0.0)))


def _stream_length(cfg: K1K2Config, params: NbParams, tail: float = 1e-15) -> int:
    """Smallest power-of-two-ish L where both tails are below ``tail``."""
    mean, var = waiting_moments(cfg)
    L = int(mean + 8.0 * math.sqrt(var)) + 64
    while _chernoff_tail(cfg, L) > tail:
        L = int(L * 1.25)
    q_reach = int(stats.nbinom.isf(tail, params.alpha, params.p)) + 1
    return max(L, q_reach) + 64


def _stream_tv(cfg: K1K2Config, params: NbParams, L: int) -> WaitingTV:
    stride = NB_ANCHOR_STRIDE
    starts = np.arange(0, L, stride, dtype=np.float64)
    anchors = nb_logpmf(starts, params.alpha, params.p)
    s, mass_p, mass_q = _kernels.waiting_nb_tv(cfg.a, cfg.k, cfg.n, params.alpha, params.p, L, anchors, stride)
    tail_p = _chernoff_tail(cfg, L)
    tail_q = float(stats.nbinom.sf(L - 1, params.alpha, params.p))
    # mass defects beyond what the tails can explain are rounding in the walk
    defect = max(0.0, abs(1.0 - mass_p) - tail_p) + max(0.0, abs(1.0 - mass_q) - tail_q)
    err = 0.5 * (tail_p + tail_q) + defect + TV_ACCURACY_FLOOR
    return WaitingTV(0.5 * s, err, "stream", {"L": L, "mass_p": mass_p, "mass_q": mass_q})


@dataclass(frozen=True)
class _SingleEventSplit:
    """Law of one waiting time as c Ge(p1) + e, e a signed measure on 0..M-1."""

    c: float
    p1: float
    e: np.ndarray


def _single_event_split(cfg: K1K2Config) -> _SingleEventSplit:
    a, k = cfg.a, cfg.k
    u = dominant_root_offset(a, k)
    log_rho = -math.log1p(u)
    p1 = u / (1.0 + u)
    # residue of a / (1 - z + a z^k) at z0, as a coefficient of rho^m
    A = a / ((1.0 - k * a * (1.0 + u) ** (k - 1)) * (1.0 + u))
    L = 256
    while True:
        b = _kernels.recurrence(np.ones(k), a, k, L)
        model = A * np.exp(np.arange(L) * log_rho)
        rel = np.abs(a * b / model - 1.0)
        bad = np.nonzero(rel > 1e-13)[0]
        M = int(bad[-1]) + 1 if bad.size else 0
        if M + 4 * k < L:
            return _SingleEventSplit(A / p1, p1, a * b[:M] - model[:M])
        if L > 1 << 22:
            raise RuntimeError("single-event PMF never settles to its geometric tail")
        L *= 4


EXPANSION_GRID = 40001
EXPANSION_REMAINDER = 1e-16
EXPANSION_NOISE = 1e-12


def _expansion_tv(cfg: K1K2Config, params: NbParams) -> WaitingTV:
    """sum |P - Q| for the n-event waiting time via (c G + e)^{*n}.

    Expanding binomially in the small signed measure e, every retained term
    is a shifted NB(n - j, p1) law, so between sign changes of P - Q the sum
    of the difference is a combination of NB CDF increments. Sign changes are
    located on a dense grid and refined by root finding.
    """
    n = cfg.n
    split = _single_event_split(cfg)
    c, p1, e = split.c, split.p1, split.e
    e_norm = math.fsum(np.abs(e))
    # smallest J whose dropped terms sum to at most EXPANSION_REMAINDER
    J, remainder = n, 0.0
    log_c = math.log(c)
    terms = [math.exp(special.gammaln(n + 1) - special.gammaln(j + 1) - special.gammaln(n - j + 1)
                      + (n - j) * log_c + j * math.log(e_norm)) if e_norm > 0 else 0.0
             for j in range(1, n + 1)]
    tails = np.cumsum(terms[::-1])[::-1]
    for j in range(n):
        if tails[j] <= EXPANSION_REMAINDER:
            J, remainder = j, float(tails[j])
            break
    comps = []  # (weight array over shifts, r)
    conv = np.array([1.0])
    for j in range(J + 1):
        if j:
            conv = np.convolve(conv, e)
        w = math.exp(special.gammaln(n + 1) - special.gammaln(j + 1) - special.gammaln(n - j + 1) + (n - j) * log_c)
        comps.append((w * conv, n - j))
    head = max(1, max(len(wt) for wt, _ in comps))

    def approx_at(m):
        m = np.asarray(m, dtype=np.float64)
        out = np.zeros_like(m)
        for wt, r in comps:
            for i, wi in enumerate(wt):
                if wi == 0.0:
                    continue
                x = m - i
                if r == 0:
                    out += wi * (x == 0)
                    continue
                ok = x >= 0
                out[ok] += wi * np.exp(nb_logpmf(x[ok], float(r), p1))
        return out

    def diff_at(m):
        m = np.asarray(m, dtype=np.float64)
        return approx_at(m) - np.exp(nb_logpmf(m, params.alpha, params.p))

    parts = [math.fsum(np.abs(diff_at(np.arange(head))))]
    far = 1e-20
    hi = float(max(stats.nbinom.isf(far, params.alpha, params.p),
                   stats.nbinom.isf(far, max(n - J, 1), p1) + head)) + 2.0
    lo = float(head)
    grid = np.unique(np.concatenate([
        np.linspace(lo, hi, EXPANSION_GRID),
        np.geomspace(lo, hi, EXPANSION_GRID // 20),
    ]))
    approx_vals = approx_at(grid)
    vals = approx_vals - np.exp(nb_logpmf(grid, params.alpha, params.p))
    # flips inside rounding noise carry no mass worth splitting for
    noise = EXPANSION_NOISE * (approx_vals + np.abs(vals))
    keep = np.nonzero(np.abs(vals) > noise)[0]
    sign = np.sign(vals[keep])
    cuts = []
    for idx in np.nonzero(sign[:-1] * sign[1:] < 0)[0]:
        g0, g1 = grid[keep[idx]], grid[keep[idx + 1]]
        root = brentq(lambda x: float(diff_at([x])[0]), g0, g1, xtol=1e-6, rtol=1e-14)
        cuts.append(math.ceil(root))
    breaks = sorted({head, *[max(head, x) for x in cuts]}) + [math.inf]
    q_law = params
    for s, t in zip(breaks[:-1], breaks[1:]):
        if t <= s:
            continue
        pieces = [-_nb_mass(q_law, s, t)]
        for wt, r in comps:
            if r == 0:
                continue  # atoms sit inside the directly summed head
            law = NbParams(float(r), p1)
            pieces.extend(wi * _nb_mass(law, s - i, t - i) for i, wi in enumerate(wt) if wi != 0.0)
        parts.append(abs(math.fsum(pieces)))
    total = math.fsum(parts)
    # rounding in each CDF increment, dropped expansion terms, pieces of e
    # absorbed into the geometric tail, and sign flips treated as noise
    err = 2e-15 * len(parts) * (1 + len(comps)) + remainder + n * 1e-13 + 2 * EXPANSION_NOISE + 2 * TV_ACCURACY_FLOOR
    details = {"J": J, "e_norm": e_norm, "transient": e.size, "segments": len(breaks) - 1, "p1": p1}
    return WaitingTV(0.5 * total, 0.5 * err, "expansion", details)


def waiting_tv(cfg: K1K2Config, params: NbParams, *, method: str | None = None) -> WaitingTV:
    """d_TV(waiting time of cfg.n events, NB(params)) with an error allowance.

    ``method`` is "expansion" (default) or "stream"; the latter is an
    independent check limited to moderate reach.
    """
    method = method or "expansion"
    if method == "stream":
        L = _stream_length(cfg, params)
        if L > STREAM_LIMIT:
            raise ValueError(f"streaming needs L = {L}, above the limit {STREAM_LIMIT}")
        return _stream_tv(cfg, params, L)
    if method == "expansion":
        return _expansion_tv(cfg, params)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------

SIMULATION_CHUNK = 1 << 16
MIN_EXPECTED_COUNT = 10.0


@dataclass(frozen=True)
class SimulationRun:
    seed: int
    trials: int
    empirical: Pmf
    std_errors: np.ndarray
    config: K1K2Config | None = None

    def standardized_deviation(self, reference, min_expected: float = MIN_EXPECTED_COUNT) -> np.ndarray:
        """(empirical - reference) / se, se = sqrt(r (1 - r) / trials).

        Bins expecting fewer than ``min_expected`` hits are pooled into one
        final bin (together with all mass past the stored range), since a
        single hit in a bin expecting 0.01 would read as a 10-sigma event.
        """
        reference = np.asarray(reference, dtype=np.float64)
        L = max(len(self.empirical), reference.size)
        emp = self.empirical.padded(L)
        ref = np.zeros(L)
        ref[: reference.size] = reference
        big = ref * self.trials >= min_expected
        r = np.append(ref[big], max(0.0, 1.0 - math.fsum(ref[big])))
        e = np.append(emp[big], max(0.0, 1.0 - math.fsum(emp[big])))
        se = np.sqrt(r * (1.0 - r) / self.trials)
        out = np.zeros_like(r)
        ok = se > 0
        out[ok] = (e[ok] - r[ok]) / se[ok]
        out[~ok & (np.abs(e - r) > 0)] = np.inf
        return out


def simulate_k1k2(cfg: K1K2Config, trials: int, seed: int) -> SimulationRun:
    """Simulate non-event trials before the n-th non-overlapping event.

    Trials are split into fixed chunks, each driven by its own child of
    ``SeedSequence(seed)``, so results depend only on (seed, trials).
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    seed = int(seed) & ((1 << 64) - 1)
    children = np.random.SeedSequence(seed).spawn((trials + SIMULATION_CHUNK - 1) // SIMULATION_CHUNK)
    samples = []
    done = 0
    for child in children:
        size = min(SIMULATION_CHUNK, trials - done)
        sub_seed = int(child.generate_state(1, np.uint32)[0])
        samples.append(_kernels.simulate_waiting(cfg.k1, cfg.k2, cfg.p_bar, cfg.n, size, sub_seed))
        done += size
    values = np.concatenate(samples)
    counts = np.bincount(values)
    probs = counts / trials
    se = np.sqrt(probs * (1.0 - probs) / trials)
    return SimulationRun(seed, trials, Pmf(probs, 0.0), se, cfg)


# ---------------------------------------------------------------------------
# domination
# ---------------------------------------------------------------------------

DEFAULT_ORACLE_L = 2000
CONVOLUTION_ROUNDING = 1e-15


@dataclass(frozen=True)
class DominationReport:
    bound: float
    tv: float
    tv_error: float
    method: str
    report: BoundReport
    details: dict = field(default_factory=dict)

    @property
    def margin(self) -> float:
        """bound - (tv + tv_error); negative means the check failed."""
        return self.bound - (self.tv + self.tv_error)

    @property
    def violated(self) -> bool:
        return self.tv > self.bound + self.tv_error

    def as_dict(self) -> dict:
        return {
            "bound": self.bound,
            "tv": self.tv,
            "tv_error": self.tv_error,
            "margin": self.margin,
            "method": self.method,
            **self.details,
        }


def _scheme(value) -> Scheme:
    return value if isinstance(value, Scheme) else Scheme(value)


def _mixture_domination(mixture, scheme: Scheme, L, params, truncation):
    mixture = list(mixture)
    m = aggregate(mixture)
    if scheme is Scheme.ONE_PARAM:
        params = params or match_one_param(m, alpha=float(total_count(mixture)))
        report = theorem_one(mixture, params, truncation)
        nb = params
    elif scheme is Scheme.TWO_PARAM:
        params = params or match_two_param(m)
        report = theorem_two(mixture, params, truncation)
        nb = params
    elif scheme is Scheme.THREE_PARAM:
        params = params or match_three_param(m)
        report = theorem_three(mixture, params, truncation)
        nb = params.nb
    else:
        raise ValueError(f"scheme {scheme.value} applies to waiting times, not mixtures")
    if L is None:
        sd = math.sqrt(max(m.sigma2, nb.variance))
        L = max(DEFAULT_ORACLE_L, int(max(m.mu, nb.mean) + 40 * sd) + 64)
    exact = mixture_pmf(mixture, L)
    approx = v_pmf(params, L) if scheme is Scheme.THREE_PARAM else nb_pmf(nb, L)
    tv, err = tv_distance(exact, approx)
    # FFT/direct convolution rounding, a few ulps per entry times log2 L
    err += CONVOLUTION_ROUNDING * L * math.log2(L)
    return report, tv, err, "convolution", {"L": L}


def verify_domination(target, scheme, *, params=None, L: int | None = None, truncation: int | None = None,
                      form: str = "tabulated", method: str | None = None, raise_on_violation: bool = True) -> DominationReport:
    """Check exact d_TV(approximand, approximant) <= reported bound + TV error.

    ``target`` is a mixture (sequence of components) or a :class:`K1K2Config`.
    A failure raises :class:`DominationViolated` carrying the report, unless
    ``raise_on_violation`` is false.
    """
    scheme = _scheme(scheme)
    if isinstance(target, K1K2Config):
        if scheme in (Scheme.K1K2_ONE, Scheme.ONE_PARAM):
            report = one_param_bound_k1k2(target, truncation, form=form)
            nb = params or one_param_params(target)
        elif scheme in (Scheme.K1K2_TWO, Scheme.TWO_PARAM):
            report = two_param_bound_k1k2(target, truncation, form=form)
            nb = params or two_param_params(target)
        else:
            raise ValueError(f"scheme {scheme.value} does not apply to waiting times")
        w = waiting_tv(target, nb, method=method)
        tv, err, how, details = w.value, w.error, w.method, dict(w.details)
    else:
        report, tv, err, how, details = _mixture_domination(target, scheme, L, params, truncation)
    dom = DominationReport(report.bound, tv, err, how, report, details)
    if dom.violated and raise_on_violation:
        raise DominationViolated(
            f"exact TV {tv:.6g} (+/- {err:.2g}) exceeds bound {report.bound:.6g} [{how}]", report=dom
        )
    return dom
