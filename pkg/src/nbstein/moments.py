"""Aggregate factorial-cumulant moments of a sum and the eta quantities used by
three-parameter matching."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import InadmissibleEta

IMAG_TOL = 1e-9
DISCRIMINANT_TOL = 1e-10
NEGATIVE_ETA_TOL = 1e-9


@dataclass(frozen=True)
class AggregateMoments:
    mu: float
    mu2: float
    mu3: float
    sigma2: float

    @classmethod
    def from_moments(cls, mu, mu2, mu3):
        return cls(float(mu), float(mu2), float(mu3), float(mu) + float(mu2))


def aggregate(mixture) -> AggregateMoments:
    """Sum count-weighted (G(1), G'(1), G''(1)) over the components."""
    mixture = list(mixture)
    if not mixture:
        raise ValueError("mixture must contain at least one component")
    cols = np.array([[c.count * v for v in c.moments()] for c in mixture])
    mu, mu2, mu3 = (math.fsum(cols[:, j]) for j in range(3))
    return AggregateMoments.from_moments(mu, mu2, mu3)


@dataclass(frozen=True)
class EtaDiagnostics:
    """Intermediate quantities of the eta computation.

    ``branch`` is ``"real"`` when the discriminant 4*eta1**3 + eta2**2 is
    nonnegative (real cube root taken, so ``eta3`` may be negative) and
    ``"complex"`` otherwise (principal complex cube root, ``eta3`` holds its
    real part).
    """

    eta1: float
    eta2: float
    eta3: float
    eta3_imag_residual: float
    eta: float
    admissible: bool
    discriminant: float
    branch: str
    cubic_residual: float
    reason: str = ""


def eta_cubic(m: AggregateMoments, x: float) -> float:
    """Cubic whose root is eta; zero iff the three-moment fit closes."""
    mu, mu2, mu3 = m.mu, m.mu2, m.mu3
    return (
        x**3
        - 6.0 * mu2 * x**2
        + 4.5 * mu * mu3 * x
        + 27.0 * mu**2 * mu2**2
        - 13.5 * mu**3 * mu3
    )


def _cubic_scale(m: AggregateMoments, x: float) -> float:
    mu, mu2, mu3 = m.mu, m.mu2, abs(m.mu3)
    return max(
        abs(x) ** 3,
        6.0 * mu2 * x * x,
        4.5 * mu * mu3 * abs(x),
        27.0 * mu**2 * mu2**2,
        13.5 * mu**3 * mu3,
        1e-300,
    )


def eta(m: AggregateMoments, *, strict: bool = True) -> EtaDiagnostics:
    """Compute eta1, eta2, eta3 and eta.

    With ``strict`` an inadmissible result raises :class:`InadmissibleEta`;
    otherwise the diagnostics are returned with ``admissible=False``.
    """
    mu, mu2, mu3 = m.mu, m.mu2, m.mu3
    if not (mu > 0 and mu2 > 0):
        diag = EtaDiagnostics(
            math.nan, math.nan, math.nan, math.nan, math.nan, False, math.nan,
            "none", math.nan, "requires mu > 0 and mu2 > 0",
        )
        if strict:
            raise InadmissibleEta(diag.reason)
        return diag

    eta1 = 1.5 * mu * mu3 - 4.0 * mu2**2
    eta2 = 27.0 * mu**2 * mu2**2 - 16.0 * mu2**3 - 13.5 * mu**3 * mu3 + 9.0 * mu * mu2 * mu3
    disc = 4.0 * eta1**3 + eta2**2
    # i.i.d. geometric sums sit exactly on disc = 0; round-off lands either side
    if abs(disc) <= DISCRIMINANT_TOL * (4.0 * abs(eta1) ** 3 + eta2**2):
        disc = 0.0

    if disc >= 0.0:
        branch = "real"
        root = math.sqrt(disc)
        s_plus = 0.5 * (eta2 + root)
        s_minus = 0.5 * (eta2 - root)
        if eta2 < 0 and s_minus != 0.0:
            # s_plus cancels here; s_plus * s_minus = -eta1**3 recovers it
            s_plus = -(eta1**3) / s_minus
        eta3 = float(np.cbrt(s_plus))
        if eta3 != 0.0:
            value = 2.0 * mu2 + eta1 / eta3 - eta3
        else:
            # Cardano pair: eta1/eta3 = -cbrt(s_minus)
            value = 2.0 * mu2 - float(np.cbrt(s_minus))
        imag = 0.0
    else:
        branch = "complex"
        s = 0.5 * (eta2 + cmath.sqrt(disc))
        e3 = s ** (1.0 / 3.0)
        z = 2.0 * mu2 + eta1 / e3 - e3
        eta3, imag, value = e3.real, abs(z.imag), z.real

    scale = max(1.0, abs(value))
    reason = ""
    if value < 0 and abs(value) <= NEGATIVE_ETA_TOL * mu2:
        value = 0.0
    if imag > IMAG_TOL * scale:
        reason = f"eta has imaginary part {imag:.3e}"
    elif not math.isfinite(value):
        reason = "eta is not finite"
    elif value < 0:
        reason = f"eta = {value:.6g} is negative"
    cubic_res = abs(eta_cubic(m, value)) / _cubic_scale(m, value) if math.isfinite(value) else math.nan

    diag = EtaDiagnostics(
        eta1=eta1,
        eta2=eta2,
        eta3=eta3,
        eta3_imag_residual=imag,
        eta=value,
        admissible=not reason,
        discriminant=disc,
        branch=branch,
        cubic_residual=cubic_res,
        reason=reason,
    )
    if strict and not diag.admissible:
        raise InadmissibleEta(reason)
    return diag
