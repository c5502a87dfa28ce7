"""Moment matching for negative binomial approximants."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidParams, OverdispersedRequired
from .moments import AggregateMoments, EtaDiagnostics, eta as compute_eta

FIT_RTOL = 1e-8


@dataclass(frozen=True)
class NbParams:
    """NB(alpha, p): P(Z = m) = C(alpha + m - 1, m) p^alpha q^m."""

    alpha: float
    p: float

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise InvalidParams(f"alpha must be positive and finite, got {self.alpha}")
        if not 0.0 < self.p < 1.0:
            raise InvalidParams(f"p must lie in (0, 1), got {self.p}")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def alpha_q(self) -> float:
        return self.alpha * self.q

    @property
    def mean(self) -> float:
        return self.alpha * self.q / self.p

    @property
    def variance(self) -> float:
        return self.alpha * self.q / self.p**2


@dataclass(frozen=True)
class ThreeParamFit:
    """NB(alpha, p) convolved with Ge(p_hat); p_hat = 1 means the geometric part is 0."""

    nb: NbParams
    p_hat: float
    r: float
    eta: EtaDiagnostics

    @property
    def q_hat(self) -> float:
        return 1.0 - self.p_hat

    @property
    def alpha(self) -> float:
        return self.nb.alpha

    @property
    def p(self) -> float:
        return self.nb.p

    @property
    def q(self) -> float:
        return self.nb.q

    def matched_moments(self) -> tuple[float, float, float]:
        """(mean, mu2, mu3/2) of the fitted law."""
        a, p, q = self.nb.alpha, self.nb.p, self.nb.q
        h = self.q_hat / self.p_hat
        return (
            a * q / p + h,
            a * q**2 / p**2 + h**2,
            a * q**3 / p**3 + h**3,
        )


def match_one_param(m: AggregateMoments, *, alpha: float | None = None, p: float | None = None) -> NbParams:
    """Fix one of alpha or p and solve the other from alpha*q/p = mu."""
    if (alpha is None) == (p is None):
        raise ValueError("supply exactly one of alpha or p")
    if not m.mu > 0:
        raise InvalidParams("mean must be positive")
    if alpha is not None:
        if not alpha > 0:
            raise InvalidParams(f"alpha must be positive, got {alpha}")
        return NbParams(alpha, alpha / (alpha + m.mu))
    if not 0.0 < p < 1.0:
        raise InvalidParams(f"p must lie in (0, 1), got {p}")
    return NbParams(m.mu * p / (1.0 - p), p)


def match_two_param(m: AggregateMoments) -> NbParams:
    """Match mean and variance: p = mu/sigma2, alpha = mu^2/mu2."""
    if not m.mu2 > 0:
        raise OverdispersedRequired(f"variance {m.sigma2:.6g} does not exceed mean {m.mu:.6g}")
    return NbParams(m.mu**2 / m.mu2, m.mu / m.sigma2)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def match_three_param(m: AggregateMoments) -> ThreeParamFit:
    """Match mean, mu2 and mu3 with NB(alpha, p) + Ge(p_hat).

    The fitted moments are checked against the targets and any relative
    residual above 1e-8 raises :class:`InvalidParams`.
    """
    if not m.mu2 > 0:
        raise OverdispersedRequired(f"variance {m.sigma2:.6g} does not exceed mean {m.mu:.6g}")
    diag = compute_eta(m)
    e = diag.eta
    x = e / (3.0 * m.mu)  # q_hat / p_hat
    p_hat = 3.0 * m.mu / (3.0 * m.mu + e)
    q_hat = 1.0 - p_hat
    num = m.mu - x
    den2 = m.mu2 - x * x
    den_p = m.sigma2 - x * (x + 1.0)
    if not (num > 0 and den2 > 0 and den_p > 0):
        raise InvalidParams(f"eta = {e:.6g} leaves no room for the negative binomial part")
    alpha = num * num / den2
    p = num / den_p
    if not (0.0 < p_hat <= 1.0):
        raise InvalidParams(f"p_hat = {p_hat} outside (0, 1]")
    nb = NbParams(alpha, p)
    r = alpha + 1.0 + (q_hat - nb.q) / (nb.q * p_hat)
    fit = ThreeParamFit(nb=nb, p_hat=p_hat, r=r, eta=diag)
    targets = (m.mu, m.mu2, m.mu3 / 2.0)
    got = fit.matched_moments()
    worst = max(_rel(g, t) for g, t in zip(got, targets))
    if worst > FIT_RTOL:
        raise InvalidParams(f"three-moment fit residual {worst:.3e} exceeds {FIT_RTOL}")
    return fit
