import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from nbstein.dist import (
    Binomial,
    Generic,
    Geometric,
    Pmf,
    Poisson,
    a_coeff,
    component_moments,
    component_pmf,
    dtv_self_shift,
    hypothesis_flags,
    pgf_identity_residual,
)
from nbstein.errors import NonDecayingSeries

probs = st.floats(0.05, 0.95)


def brute_dtv_shift(pmf):
    p = pmf.padded(len(pmf) + 1)
    shifted = np.concatenate([[0.0], p[:-1]])
    return 0.5 * np.abs(p - shifted).sum() + 0.5 * pmf.tail_mass


class TestACoeff:
    def test_geometric(self):
        assert a_coeff(Geometric(0.5), 0) == pytest.approx(0.5)

    def test_poisson(self):
        assert a_coeff(Poisson(2.0), 0) == pytest.approx(2.0)
        assert a_coeff(Poisson(2.0), 1) == 0.0

    def test_binomial(self):
        assert a_coeff(Binomial(3, 0.25), 1) == pytest.approx(-1.0 / 3.0, rel=1e-14)

    def test_negative_index(self):
        with pytest.raises(ValueError):
            a_coeff(Geometric(0.5), -1)

    @given(p=st.floats(0.55, 0.95))
    def test_geometric_magnitude_decreases(self, p):
        a = np.abs(Geometric(p).a_coeffs(40))
        assert np.all(np.diff(a) < 0)

    @given(n=st.integers(1, 30), p=st.floats(0.05, 0.45))
    def test_binomial_magnitude_decreases(self, n, p):
        a = np.abs(Binomial(n, p).a_coeffs(40))
        a = a[a > 1e-300]
        assert np.all(np.diff(a) < 0)

    def test_large_binomial_is_finite(self):
        a = Binomial(10_000, 0.3).a_coeffs(500)
        assert np.all(np.isfinite(a))


class TestPmf:
    def test_geometric(self):
        pmf = component_pmf(Geometric(0.5), 3)
        np.testing.assert_allclose(pmf.probs, [0.5, 0.25, 0.125], rtol=1e-15)
        assert pmf.tail_mass == pytest.approx(0.125)

    def test_binomial(self):
        pmf = component_pmf(Binomial(2, 0.5), 3)
        np.testing.assert_allclose(pmf.probs, [0.25, 0.5, 0.25], rtol=1e-15)
        assert pmf.tail_mass == pytest.approx(0.0, abs=1e-15)

    def test_poisson(self):
        pmf = component_pmf(Poisson(1.0), 2)
        e = math.exp(-1.0)
        np.testing.assert_allclose(pmf.probs, [e, e], rtol=1e-15)
        assert pmf.tail_mass == pytest.approx(1 - 2 * e, rel=1e-13)

    def test_large_binomial_against_scipy(self):
        pmf = component_pmf(Binomial(5000, 0.4), 2500)
        ref = stats.binom.pmf(np.arange(2500), 5000, 0.4)
        np.testing.assert_allclose(pmf.probs, ref, rtol=1e-10, atol=1e-300)

    def test_mass_mismatch_rejected(self):
        with pytest.raises(ValueError):
            Pmf([0.5, 0.4], 0.0)

    def test_round_off_clamped_and_reported(self):
        pmf = Pmf.from_raw([1.0, -1e-15], 0.0)
        assert pmf.probs[1] == 0.0
        assert pmf.clamped_mass == pytest.approx(1e-15)

    def test_real_negative_rejected(self):
        with pytest.raises(ValueError):
            Pmf.from_raw([1.1, -0.1], 0.0)

    @given(spec=st.one_of(
        st.builds(Geometric, probs),
        st.builds(Poisson, st.floats(0.1, 20.0)),
        st.builds(Binomial, st.integers(1, 40), st.floats(0.05, 0.45)),
    ))
    def test_pgf_identity(self, spec):
        pmf = component_pmf(spec, 60)
        assert np.max(np.abs(pgf_identity_residual(pmf.probs, spec.a_coeffs(60), max_m=50))) <= 1e-10


class TestShiftDistance:
    def test_geometric(self):
        assert dtv_self_shift(Geometric(0.5)) == pytest.approx(0.5)

    def test_poisson(self):
        assert dtv_self_shift(Poisson(1.0)) == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_point_mass(self):
        g = Generic(a=(0.0,) * 8, pmf_values=Pmf([1.0]))
        assert dtv_self_shift(g) == pytest.approx(1.0)

    @given(spec=st.one_of(
        st.builds(Geometric, probs),
        st.builds(Poisson, st.floats(0.1, 30.0)),
        st.builds(Binomial, st.integers(1, 60), probs),
    ))
    def test_closed_form_matches_summation(self, spec):
        pmf = component_pmf(spec, 4000)
        assert dtv_self_shift(spec) == pytest.approx(brute_dtv_shift(pmf), abs=1e-10)


class TestMoments:
    def test_geometric(self):
        assert component_moments(Geometric(0.5)) == pytest.approx((1.0, 1.0, 2.0))

    def test_poisson(self):
        assert component_moments(Poisson(3.0)) == pytest.approx((3.0, 0.0, 0.0))

    def test_binomial(self):
        # third entry is G''(1) = sum m(m-1) a_{m+1}, summed directly here
        spec = Binomial(2, 0.25)
        a = spec.a_coeffs(200)
        m = np.arange(200)
        direct = (math.fsum(a), math.fsum(m * a), math.fsum(m * (m - 1) * a))
        assert direct[:2] == pytest.approx((0.5, -0.125), rel=1e-14)
        assert component_moments(spec) == pytest.approx(direct, rel=1e-13)

    @given(spec=st.one_of(
        st.builds(Geometric, st.floats(0.3, 0.95)),
        st.builds(Binomial, st.integers(1, 40), st.floats(0.05, 0.45)),
    ))
    def test_closed_forms_match_series(self, spec):
        a = spec.a_coeffs(3000)
        m = np.arange(3000)
        direct = (math.fsum(a), math.fsum(m * a), math.fsum(m * (m - 1) * a))
        assert component_moments(spec) == pytest.approx(direct, rel=1e-10, abs=1e-12)

    @pytest.mark.parametrize("spec", [Geometric(0.7), Binomial(4, 0.3), Poisson(2.5)])
    @pytest.mark.parametrize("L", [100, 1000])
    def test_a_series_sums_to_mean(self, spec, L):
        assert math.fsum(spec.a_coeffs(L)) == pytest.approx(component_moments(spec)[0], rel=1e-12)

    def test_generic_matches_geometric(self):
        geo = Geometric(0.6)
        gen = Generic(a=tuple(geo.a_coeffs(200)), pmf_values=component_pmf(geo, 200))
        assert component_moments(gen) == pytest.approx(component_moments(geo), rel=1e-10)

    def test_generic_not_decaying(self):
        geo = Geometric(0.02)
        gen = Generic(a=tuple(geo.a_coeffs(30)), pmf_values=component_pmf(geo, 30))
        with pytest.raises(NonDecayingSeries):
            component_moments(gen)


class TestValidation:
    @pytest.mark.parametrize("bad", [
        lambda: Geometric(0.0), lambda: Geometric(1.0), lambda: Poisson(-1.0),
        lambda: Binomial(0, 0.3), lambda: Binomial(3, 1.2), lambda: Geometric(0.5, count=0),
    ])
    def test_rejected(self, bad):
        with pytest.raises(ValueError):
            bad()

    def test_generic_inconsistent(self):
        with pytest.raises(ValueError):
            Generic(a=tuple(Geometric(0.5).a_coeffs(50)), pmf_values=component_pmf(Geometric(0.6), 50))

    def test_flags(self):
        assert hypothesis_flags([Geometric(0.6)]) == ()
        assert len(hypothesis_flags([Geometric(0.4), Binomial(5, 0.6)])) == 2
