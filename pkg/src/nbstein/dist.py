"""Component distributions on the nonnegative integers.

Every summand X of a sum Y is described through the power-series
coefficients of the log-derivative of its probability generating function,

    M'(z) / M(z) = sum_{m >= 0} a_{m+1} z^m,

together with its PMF and the smoothness quantity d_TV(X, X + 1). The
``count`` field stores how many i.i.d. copies of the component enter Y.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np
from scipy import stats

from .errors import NonDecayingSeries

PMF_MASS_TOL = 1e-12
NEGATIVE_CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class Pmf:
    """Truncated probability vector on {0, 1, ...} with the missing mass tracked.

    ``probs[m]`` is P(X = m) for m < len(probs); ``tail_mass`` is P(X >= len).
    ``clamped_mass`` records how much negative round-off was set to zero when
    the vector was built with :meth:`from_raw`.
    """

    probs: np.ndarray
    tail_mass: float = 0.0
    clamped_mass: float = 0.0

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probs must be a nonempty 1-D sequence")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("probs must be finite and nonnegative")
        tail = float(self.tail_mass)
        if -NEGATIVE_CLAMP_TOL <= tail < 0:
            tail = 0.0
        if not 0.0 <= tail <= 1.0:
            raise ValueError(f"tail_mass {tail} outside [0, 1]")
        total = math.fsum(probs) + tail
        if abs(total - 1.0) > PMF_MASS_TOL + self.clamped_mass:
            raise ValueError(f"probs + tail_mass = {total!r}, expected 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "tail_mass", tail)

    @classmethod
    def from_raw(cls, values, tail_mass):
        """Build from values that may carry tiny negative round-off."""
        values = np.array(values, dtype=np.float64)
        neg = values < 0
        clamped = 0.0
        if neg.any():
            if values[neg].min() < -NEGATIVE_CLAMP_TOL:
                raise ValueError(f"probability {values[neg].min()} is not round-off")
            clamped = float(-values[neg].sum())
            values[neg] = 0.0
        return cls(values, tail_mass, clamped)

    @classmethod
    def point_mass(cls, at=0, length=None):
        length = at + 1 if length is None else length
        probs = np.zeros(length)
        if at < length:
            probs[at] = 1.0
            return cls(probs, 0.0)
        return cls(probs, 1.0)

    def __len__(self):
        return self.probs.size

    def padded(self, length):
        """Probabilities on 0..length-1, zero beyond the stored range."""
        out = np.zeros(length)
        n = min(length, self.probs.size)
        out[:n] = self.probs[:n]
        return out

    def mean(self):
        m = np.arange(self.probs.size)
        return math.fsum(m * self.probs)


# ---------------------------------------------------------------------------
# components
# ---------------------------------------------------------------------------


def _check_prob(name, value):
    if not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie strictly inside (0, 1), got {value}")


def _check_count(count):
    if int(count) != count or count < 1:
        raise ValueError(f"count must be a positive integer, got {count}")


@dataclass(frozen=True)
class Component:
    """Shared interface; use one of the concrete kinds below."""

    kind: ClassVar[str] = "component"

    def a_coeffs(self, length: int) -> np.ndarray:
        """Array whose entry m is a_{m+1}, for m < length."""
        raise NotImplementedError

    def a_diffs(self, q: float, length: int) -> np.ndarray:
        """Entry l-1 is a_{l+1} - q a_l for l = 1..length."""
        a = self.a_coeffs(length + 1)
        return a[1:] - q * a[:-1]

    def diff_ratio(self) -> float | None:
        """Exact geometric ratio of successive a_diffs, when the kind has one."""
        return None

    def moments(self) -> tuple[float, float, float]:
        raise NotImplementedError

    def pmf(self, length: int) -> Pmf:
        raise NotImplementedError

    def dtv_shift(self) -> float:
        raise NotImplementedError

    @property
    def hypothesis_ok(self) -> bool:
        return True

    def hypothesis_flags(self) -> tuple[str, ...]:
        return ()


@dataclass(frozen=True)
class Geometric(Component):
    """Number of failures before the first success, success probability ``p``."""

    p: float
    count: int = 1
    kind: ClassVar[str] = "geometric"

    def __post_init__(self):
        _check_prob("p", self.p)
        _check_count(self.count)

    @property
    def q(self):
        return 1.0 - self.p

    def a_coeffs(self, length):
        return self.q ** np.arange(1, length + 1, dtype=np.float64)

    def a_diffs(self, q, length):
        # q_i^l (q_i - q): no cancellation between neighbouring coefficients
        return self.q ** np.arange(1, length + 1, dtype=np.float64) * (self.q - q)

    def diff_ratio(self):
        return self.q

    def moments(self):
        r = self.q / self.p
        return r, r * r, 2.0 * r**3

    def pmf(self, length):
        m = np.arange(length, dtype=np.float64)
        return Pmf(self.p * self.q**m, self.q**length)

    def dtv_shift(self):
        return self.p

    @property
    def hypothesis_ok(self):
        return self.q < 0.5

    def hypothesis_flags(self):
        if self.hypothesis_ok:
            return ()
        return (f"geometric(p={self.p:g}): q >= 1/2",)


@dataclass(frozen=True)
class Poisson(Component):
    lam: float
    count: int = 1
    kind: ClassVar[str] = "poisson"

    def __post_init__(self):
        if not self.lam > 0 or not math.isfinite(self.lam):
            raise ValueError(f"lam must be a positive real, got {self.lam}")
        _check_count(self.count)

    def a_coeffs(self, length):
        a = np.zeros(length)
        if length:
            a[0] = self.lam
        return a

    def a_diffs(self, q, length):
        d = np.zeros(length)
        if length:
            d[0] = -q * self.lam
        return d

    def diff_ratio(self):
        return 0.0

    def moments(self):
        return self.lam, 0.0, 0.0

    def pmf(self, length):
        m = np.arange(length)
        return Pmf(stats.poisson.pmf(m, self.lam), float(stats.poisson.sf(length - 1, self.lam)))

    def dtv_shift(self):
        mode = math.floor(self.lam)
        return math.exp(-self.lam + mode * math.log(self.lam) - math.lgamma(mode + 1))


@dataclass(frozen=True)
class Binomial(Component):
    n: int
    p: float
    count: int = 1
    kind: ClassVar[str] = "binomial"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        _check_prob("p", self.p)
        _check_count(self.count)

    @property
    def q(self):
        return 1.0 - self.p

    @property
    def ratio(self):
        return self.p / self.q

    def a_coeffs(self, length):
        m = np.arange(length, dtype=np.float64)
        sign = np.where(m % 2 == 0, 1.0, -1.0)
        return sign * np.exp(math.log(self.n) + (m + 1) * math.log(self.ratio))

    def a_diffs(self, q, length):
        # n (-1)^l r^l (r + q), magnitude in log space
        l = np.arange(1, length + 1, dtype=np.float64)
        sign = np.where(l % 2 == 0, 1.0, -1.0)
        return sign * np.exp(math.log(self.n) + l * math.log(self.ratio)) * (self.ratio + q)

    def diff_ratio(self):
        return self.ratio

    def moments(self):
        n, p = self.n, self.p
        return n * p, -n * p * p, 2.0 * n * p**3

    def pmf(self, length):
        m = np.arange(length)
        return Pmf(stats.binom.pmf(m, self.n, self.p), float(stats.binom.sf(length - 1, self.n, self.p)))

    def dtv_shift(self):
        probs = stats.binom.pmf(np.arange(self.n + 1), self.n, self.p)
        return 0.5 * math.fsum(np.abs(np.diff(probs, prepend=0.0, append=0.0)))

    @property
    def hypothesis_ok(self):
        return self.p < 0.5

    def hypothesis_flags(self):
        if self.hypothesis_ok:
            return ()
        return (f"binomial(n={self.n}, p={self.p:g}): p >= 1/2",)


@dataclass(frozen=True)
class Generic(Component):
    """Arbitrary law given by its a-sequence (a_1, a_2, ...) and its PMF.

    The two descriptions are checked against each other through the
    coefficient form of M' = M * G, i.e.
    (m+1) P(m+1) = sum_{l<=m} P(l) a_{m-l+1}.
    """

    a: tuple
    pmf_values: Pmf
    count: int = 1
    kind: ClassVar[str] = "generic"
    consistency_tol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        a = np.array(self.a, dtype=np.float64)
        if a.ndim != 1 or a.size == 0 or not np.all(np.isfinite(a)):
            raise ValueError("a must be a nonempty finite sequence")
        a.setflags(write=False)
        object.__setattr__(self, "a", a)
        if not isinstance(self.pmf_values, Pmf):
            object.__setattr__(self, "pmf_values", Pmf(self.pmf_values))
        _check_count(self.count)
        residual = pgf_identity_residual(self.pmf_values.probs, a)
        if residual.size and np.max(np.abs(residual)) > self.consistency_tol:
            raise ValueError(
                f"a-sequence inconsistent with pmf (max residual {np.max(np.abs(residual)):.3e})"
            )

    def a_coeffs(self, length):
        out = np.zeros(length)
        n = min(length, self.a.size)
        out[:n] = self.a[:n]
        return out

    def moments(self):
        a = self.a
        m = np.arange(a.size, dtype=np.float64)
        sums = []
        for w in (np.ones_like(m), m, m * (m - 1)):
            terms = w * a
            total = math.fsum(terms)
            cut = max(1, a.size // 10)
            if a.size > 1 and abs(math.fsum(terms[-cut:])) > 1e-10 * max(1.0, abs(total)):
                raise NonDecayingSeries("generic a-sequence has not converged at its stored length")
            sums.append(total)
        g1, g1p, g1pp = sums
        return g1, g1p, g1pp

    def pmf(self, length):
        probs = self.pmf_values.probs
        if length >= probs.size:
            return Pmf(self.pmf_values.padded(length), self.pmf_values.tail_mass)
        return Pmf(probs[:length], math.fsum(probs[length:]) + self.pmf_values.tail_mass)

    def dtv_shift(self):
        probs = self.pmf_values.probs
        if self.pmf_values.tail_mass > 0.0:
            # last step into the unstored tail is unknown; this is a lower bound
            diffs = np.diff(probs, prepend=0.0)
        else:
            diffs = np.diff(probs, prepend=0.0, append=0.0)
        return 0.5 * math.fsum(np.abs(diffs))


def pgf_identity_residual(probs, a, max_m=50):
    """Residuals (m+1) P(m+1) - sum_{l<=m} P(l) a_{m-l+1} for m below max_m."""
    probs = np.asarray(probs, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    top = min(max_m, probs.size - 1, a.size)
    res = np.empty(max(top, 0))
    for m in range(top):
        conv = math.fsum(probs[: m + 1] * a[m::-1][: m + 1])
        res[m] = (m + 1) * probs[m + 1] - conv
    return res


# ---------------------------------------------------------------------------
# functional surface
# ---------------------------------------------------------------------------


def a_coeff(spec: Component, m: int) -> float:
    """a_{m+1} of the component; zero past a generic component's stored length."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    return float(spec.a_coeffs(m + 1)[m])


def component_pmf(spec: Component, length: int) -> Pmf:
    if length < 1:
        raise ValueError("length must be at least 1")
    return spec.pmf(length)


def dtv_self_shift(spec: Component) -> float:
    """d_TV(X, X + 1)."""
    return spec.dtv_shift()


def component_moments(spec: Component) -> tuple[float, float, float]:
    """(G(1), G'(1), G''(1)) for G = M'/M."""
    return spec.moments()


def binomial_shift_approx(spec: Binomial) -> float:
    """Mode mass minus half the top mass, C(n,M) p^M q^(n-M) - p^n / 2.

    This combination enters the printed binomial-geometric smoothing
    constant; ``dtv_self_shift`` returns the exact mode mass instead.
    """
    mode = math.floor((spec.n + 1) * spec.p)
    mode = min(mode, spec.n)
    return float(stats.binom.pmf(mode, spec.n, spec.p)) - spec.p**spec.n / 2.0


def total_count(mixture) -> int:
    return sum(c.count for c in mixture)


def hypothesis_flags(mixture) -> tuple[str, ...]:
    flags = []
    for c in mixture:
        flags.extend(c.hypothesis_flags())
    return tuple(dict.fromkeys(flags))
