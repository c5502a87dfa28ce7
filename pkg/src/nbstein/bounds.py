"""Total-variation bounds for negative binomial approximation of sums.

The series bounds take a truncation length L and report the summed head
together with an estimate of the neglected tail; the tail is never added to
the bound itself. Closed-form corollaries exist for the geometric, Poisson
and binomial mixtures listed in :data:`COROLLARY_KINDS`.

Each corollary accepts ``form="consistent"`` (default), which is the exact
closed-form evaluation of the parent series bound, or ``form="printed"``,
which reproduces the published expressions literally. Where the two differ
the difference is noted on the function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from . import _series
from .dist import Binomial, Geometric, Poisson, binomial_shift_approx, hypothesis_flags
from .errors import InvalidParams, OverdispersedRequired, PerturbationTooLarge, UnsupportedComposition
from .matching import NbParams, ThreeParamFit
from .moments import aggregate

PARAM_RTOL = 1e-8
SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)


class Scheme(str, Enum):
    ONE_PARAM = "one-param"
    TWO_PARAM = "two-param"
    THREE_PARAM = "three-param"
    K1K2_ONE = "k1k2-one"
    K1K2_TWO = "k1k2-two"


@dataclass(frozen=True)
class BoundReport:
    """A bound value with its ingredients.

    ``terms`` maps labels to additive contributions; ``bound`` is their sum.
    ``tail_estimate`` is the estimated contribution of series terms beyond
    ``truncation_L`` (0 for closed forms).
    """

    scheme: Scheme
    params: object
    bound: float
    terms: dict
    truncation_L: int | None = None
    tail_estimate: float = 0.0
    hypothesis_flags: tuple = ()
    notes: dict = field(default_factory=dict)

    @classmethod
    def from_terms(cls, scheme, params, terms, **kw):
        terms = dict(terms)
        bound = math.fsum(terms.values())
        if not (bound >= 0.0 and math.isfinite(bound)):
            raise ValueError(f"bound {bound} is not a finite nonnegative number")
        return cls(scheme=Scheme(scheme), params=params, bound=bound, terms=terms, **kw)


@dataclass(frozen=True)
class SeriesResult:
    value: float
    tail: float
    parts: tuple  # per-component (label, value, tail), count already applied


def _label(i, comp):
    return f"{comp.kind}[{i}]"


def series_term(mixture, q: float, weight, L: int | None = None) -> SeriesResult:
    """sum_i count_i sum_{l=1}^{L} weight(l) |a_{i,l+1} - q a_{i,l}|."""
    L = _series.resolve_truncation(L)
    if L < 1:
        raise ValueError("L must be at least 1")
    parts = []
    for i, comp in enumerate(mixture):
        d = comp.a_diffs(q, L)
        value, tail = _series.weighted_abs_sum(d, weight, ratio=comp.diff_ratio())
        parts.append((_label(i, comp), comp.count * value, comp.count * tail))
    return SeriesResult(
        value=math.fsum(p[1] for p in parts),
        tail=math.fsum(p[2] for p in parts),
        parts=tuple(parts),
    )


# ---------------------------------------------------------------------------
# smoothing constants
# ---------------------------------------------------------------------------


def mattner_roos(mixture) -> float:
    """Upper bound on d_TV(Y, Y + 1), capped at 1."""
    s = math.fsum(c.count * (1.0 - c.dtv_shift()) for c in mixture)
    return min(1.0, SQRT_2_OVER_PI / math.sqrt(0.25 + s))


def psi(mixture) -> float:
    return math.fsum(c.count * min(0.5, 1.0 - c.dtv_shift()) for c in mixture)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _check_mean(m, params):
    if _rel(params.mean, m.mu) > PARAM_RTOL:
        raise InvalidParams(f"params mean {params.mean:.10g} does not match mixture mean {m.mu:.10g}")


def _check_variance(m, params):
    if not m.mu2 > 0:
        raise OverdispersedRequired(f"variance {m.sigma2:.6g} does not exceed mean {m.mu:.6g}")
    if _rel(params.variance, m.sigma2) > PARAM_RTOL:
        raise InvalidParams("params variance does not match mixture variance")


# ---------------------------------------------------------------------------
# theorems
# ---------------------------------------------------------------------------


def theorem_one(mixture, params: NbParams, L: int | None = None) -> BoundReport:
    """Mean-matched NB(alpha, p): (1/(alpha q)) sum sum l |a_{i,l+1} - q a_{i,l}|."""
    mixture = list(mixture)
    _check_mean(aggregate(mixture), params)
    L = _series.resolve_truncation(L)
    s = series_term(mixture, params.q, _series.LINEAR, L)
    c = 1.0 / params.alpha_q
    return BoundReport.from_terms(
        Scheme.ONE_PARAM,
        params,
        {label: c * v for label, v, _ in s.parts},
        truncation_L=L,
        tail_estimate=c * s.tail,
        hypothesis_flags=hypothesis_flags(mixture),
    )


def theorem_two(mixture, params: NbParams, L: int | None = None) -> BoundReport:
    """Mean- and variance-matched NB(alpha, p), second-order series with smoothing."""
    mixture = list(mixture)
    m = aggregate(mixture)
    _check_mean(m, params)
    _check_variance(m, params)
    L = _series.resolve_truncation(L)
    s = series_term(mixture, params.q, _series.PAIR, L)
    c = mattner_roos(mixture) / params.alpha_q
    return BoundReport.from_terms(
        Scheme.TWO_PARAM,
        params,
        {label: c * v for label, v, _ in s.parts},
        truncation_L=L,
        tail_estimate=c * s.tail,
        hypothesis_flags=hypothesis_flags(mixture),
        notes={"smoothing": mattner_roos(mixture)},
    )


def _three_param_denominator(fit: ThreeParamFit) -> float:
    delta1 = abs(fit.q_hat - fit.q) * fit.q_hat / fit.p_hat**2
    den = fit.r * fit.q - delta1
    if not den > 0:
        raise PerturbationTooLarge(f"r q = {fit.r * fit.q:.6g} does not exceed {delta1:.6g}")
    return den


def _geometric_part(fit: ThreeParamFit) -> float:
    return abs(fit.q_hat - fit.q) * fit.q_hat**3 / fit.p_hat**4


def theorem_three(mixture, fit: ThreeParamFit, L: int | None = None) -> BoundReport:
    """NB(alpha, p) convolved with Ge(p_hat), third-order series."""
    mixture = list(mixture)
    m = aggregate(mixture)
    if not m.mu2 > 0:
        raise OverdispersedRequired(f"variance {m.sigma2:.6g} does not exceed mean {m.mu:.6g}")
    got = fit.matched_moments()
    if max(_rel(g, t) for g, t in zip(got, (m.mu, m.mu2, m.mu3 / 2.0))) > PARAM_RTOL:
        raise InvalidParams("fit does not match the mixture's first three moments")
    den = _three_param_denominator(fit)
    L = _series.resolve_truncation(L)
    s = series_term(mixture, fit.q, _series.TRIPLE, L)
    c = 16.0 / (psi(mixture) * den)
    terms = {label: c * v for label, v, _ in s.parts}
    terms["geometric part"] = c * _geometric_part(fit)
    return BoundReport.from_terms(
        Scheme.THREE_PARAM,
        fit,
        terms,
        truncation_L=L,
        tail_estimate=c * s.tail,
        hypothesis_flags=hypothesis_flags(mixture),
        notes={"psi": psi(mixture), "denominator": den},
    )


# ---------------------------------------------------------------------------
# corollaries (closed forms)
# ---------------------------------------------------------------------------

COROLLARY_KINDS = {
    "one": ({"geometric"}, {"poisson", "geometric"}, {"binomial", "geometric"}, {"poisson", "binomial"}),
    "two": ({"geometric"}, {"poisson", "geometric"}, {"binomial", "geometric"}),
    "three": ({"geometric"}, {"poisson", "geometric"}, {"binomial", "geometric"}),
}


def _composition(mixture, which):
    kinds = {c.kind for c in mixture}
    for allowed in COROLLARY_KINDS[which]:
        if kinds <= allowed:
            return kinds
    raise UnsupportedComposition(f"no closed form for component kinds {sorted(kinds)}")


def _check_form(form):
    if form not in ("consistent", "printed"):
        raise ValueError(f"form must be 'consistent' or 'printed', got {form!r}")


def _binomial_side_condition(mixture):
    bsum = math.fsum(c.count * c.n * c.p**2 for c in mixture if isinstance(c, Binomial))
    gsum = math.fsum(c.count * (c.q / c.p) ** 2 for c in mixture if isinstance(c, Geometric))
    if any(isinstance(c, Binomial) for c in mixture) and not bsum < gsum:
        return ("binomial side condition n*sum(p^2) < sum(q^2/p^2) fails",)
    return ()


def corollary_one(mixture, params: NbParams, *, form: str = "consistent") -> BoundReport:
    """Closed form of the mean-matched bound.

    Per geometric component: |p - p_i| q_i / p_i^2; Poisson: q lambda;
    binomial: n (r + q) r / (1 - r)^2 with r = p/(1-p).
    The printed binomial-geometric expression multiplies the geometric sum by
    an extra factor q; ``form="printed"`` keeps it.
    """
    _check_form(form)
    mixture = list(mixture)
    kinds = _composition(mixture, "one")
    _check_mean(aggregate(mixture), params)
    p, q = params.p, params.q
    extra_q = form == "printed" and kinds == {"binomial", "geometric"}
    c = 1.0 / params.alpha_q
    terms = {}
    for i, comp in enumerate(mixture):
        if isinstance(comp, Geometric):
            v = abs(p - comp.p) * comp.q / comp.p**2
            if extra_q:
                v *= q
        elif isinstance(comp, Poisson):
            v = q * comp.lam
        else:
            v = comp.n * (comp.ratio + q) * comp.p * comp.q / (1.0 - 2.0 * comp.p) ** 2
        terms[_label(i, comp)] = c * comp.count * v
    return BoundReport.from_terms(
        Scheme.ONE_PARAM, params, terms,
        hypothesis_flags=hypothesis_flags(mixture),
        notes={"form": form},
    )


def corollary_two(mixture, params: NbParams, *, form: str = "consistent") -> BoundReport:
    """Closed form of the mean- and variance-matched bound.

    Per geometric component: 2 |p - p_i| q_i^2 / p_i^3; binomial:
    2 n (r + q) p~^2 q~ / (1 - 2 p~)^3. The printed binomial-geometric
    expression has p~^2 q~ / (1 - 2 q~)^3 for the binomial weight and uses the
    mode mass minus half the top mass as the binomial shift distance;
    ``form="printed"`` keeps both and drops the cap of the smoothing constant
    at 1.
    """
    _check_form(form)
    mixture = list(mixture)
    kinds = _composition(mixture, "two")
    m = aggregate(mixture)
    _check_mean(m, params)
    _check_variance(m, params)
    p, q = params.p, params.q
    printed = form == "printed"
    if printed:
        s = 0.0
        for comp in mixture:
            if isinstance(comp, Binomial):
                s += comp.count * (1.0 - binomial_shift_approx(comp))
            else:
                s += comp.count * (1.0 - comp.dtv_shift())
        smooth = SQRT_2_OVER_PI / math.sqrt(0.25 + s)
    else:
        smooth = mattner_roos(mixture)
    c = smooth / params.alpha_q
    terms = {}
    for i, comp in enumerate(mixture):
        if isinstance(comp, Geometric):
            v = 2.0 * abs(p - comp.p) * comp.q**2 / comp.p**3
        elif isinstance(comp, Poisson):
            v = 0.0
        elif printed:
            if not comp.q < 0.5:
                raise InvalidParams("printed binomial weight needs 1 - 2(1 - p~) > 0")
            v = comp.n * (comp.ratio + q) * comp.p**2 * comp.q / (1.0 - 2.0 * comp.q) ** 3
        else:
            v = 2.0 * comp.n * (comp.ratio + q) * comp.p**2 * comp.q / (1.0 - 2.0 * comp.p) ** 3
        terms[_label(i, comp)] = c * comp.count * v
    flags = hypothesis_flags(mixture)
    if "binomial" in kinds:
        flags += _binomial_side_condition(mixture)
    return BoundReport.from_terms(
        Scheme.TWO_PARAM, params, terms,
        hypothesis_flags=flags,
        notes={"form": form, "smoothing": smooth},
    )


def corollary_three(mixture, fit: ThreeParamFit, *, form: str = "consistent") -> BoundReport:
    """Closed form of the three-parameter bound.

    Per geometric component: p |1/p - 1/p_i| (q_i/p_i)^3; binomial:
    n (r + q) p~^3 q~ / (1 - 2 p~)^4; geometric part of the approximant:
    p |1/p - 1/p_hat| (q_hat/p_hat)^3. The printed expressions equal this
    divided by p^2, and for a purely geometric mixture replace Psi by
    sum(q_i); ``form="printed"`` reproduces them.
    """
    _check_form(form)
    mixture = list(mixture)
    kinds = _composition(mixture, "three")
    m = aggregate(mixture)
    if not m.mu2 > 0:
        raise OverdispersedRequired(f"variance {m.sigma2:.6g} does not exceed mean {m.mu:.6g}")
    den = _three_param_denominator(fit)
    p = fit.p
    printed = form == "printed"
    if printed and kinds == {"geometric"}:
        smooth = math.fsum(c.count * c.q for c in mixture)
    else:
        smooth = psi(mixture)
    c = 16.0 / (smooth * den)
    if printed:
        c /= p * p
    terms = {}
    for i, comp in enumerate(mixture):
        if isinstance(comp, Geometric):
            v = p * abs(1.0 / p - 1.0 / comp.p) * (comp.q / comp.p) ** 3
        elif isinstance(comp, Poisson):
            v = 0.0
        else:
            v = comp.n * (comp.ratio + fit.q) * comp.p**3 * comp.q / (1.0 - 2.0 * comp.p) ** 4
        terms[_label(i, comp)] = c * comp.count * v
    terms["geometric part"] = c * p * abs(1.0 / p - 1.0 / fit.p_hat) * (fit.q_hat / fit.p_hat) ** 3
    flags = hypothesis_flags(mixture)
    if "binomial" in kinds:
        flags += _binomial_side_condition(mixture)
    return BoundReport.from_terms(
        Scheme.THREE_PARAM, fit, terms,
        hypothesis_flags=flags,
        notes={"form": form, "psi": smooth, "denominator": den},
    )


def nonnegative_difference_bound(mixture, params: NbParams) -> float:
    """Mean-matched bound when every a_{i,l+1} - q a_{i,l} is nonnegative.

    The sums telescope to (mu2 - q sigma2) / (alpha q) = sigma2/mu - 1/p.
    """
    m = aggregate(mixture)
    return m.sigma2 / m.mu - 1.0 / params.p


# ---------------------------------------------------------------------------
# perturbation lemma
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PerturbationEstimate:
    delta1: float
    delta2: float
    alpha_q: float

    def __post_init__(self):
        if self.delta1 < 0 or self.delta2 < 0:
            raise ValueError("perturbation norms must be nonnegative")


def perturbation_bound(e: PerturbationEstimate) -> float:
    """delta2 / (alpha q - delta1)."""
    den = e.alpha_q - e.delta1
    if not den > 0:
        raise PerturbationTooLarge(f"alpha q = {e.alpha_q:.6g} does not exceed delta1 = {e.delta1:.6g}")
    return e.delta2 / den
