import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from nbstein.bounds import Scheme
from nbstein.dist import Binomial, Geometric, Pmf, Poisson
from nbstein.errors import DominationViolated
from nbstein.k1k2 import K1K2Config, one_param_params, two_param_params, waiting_pmf
from nbstein.matching import NbParams, match_three_param
from nbstein.moments import aggregate
from nbstein.oracle import (
    MIN_EXPECTED_COUNT,
    lgamma_ratio,
    mixture_pmf,
    nb_logpmf,
    nb_pmf,
    nb_tv,
    simulate_k1k2,
    tv_distance,
    v_pmf,
    verify_domination,
    waiting_pmf_exact,
    waiting_tv,
)

mp.mp.dps = 40


def mp_nb_logpmf(m, alpha, p):
    m, alpha, p = mp.mpf(m), mp.mpf(alpha), mp.mpf(p)
    return mp.loggamma(m + alpha) - mp.loggamma(alpha) - mp.loggamma(m + 1) + alpha * mp.log(p) + m * mp.log(1 - p)


class TestNegativeBinomial:
    @given(x=st.floats(1.0, 1e9), h=st.floats(-0.9, 50.0))
    def test_lgamma_ratio(self, x, h):
        want = float(mp.loggamma(mp.mpf(x) + mp.mpf(h)) - mp.loggamma(mp.mpf(x)))
        got = float(lgamma_ratio(np.array([x]), h)[0])
        assert got == pytest.approx(want, rel=1e-12, abs=1e-12)

    @pytest.mark.parametrize("m,alpha,p", [(0, 3.0, 0.4), (10**6, 50.0, 1e-4), (10**9, 2.5, 3e-9), (37, 0.3, 0.9), (14, 8281.5, 0.99827), (3000, 5e4, 0.95)])
    def test_logpmf(self, m, alpha, p):
        want = float(mp_nb_logpmf(m, alpha, p))
        assert float(nb_logpmf(m, alpha, p)) == pytest.approx(want, rel=1e-12, abs=1e-11)

    @given(alpha=st.floats(0.2, 200.0), p=st.floats(0.01, 0.95))
    def test_pmf_vs_scipy(self, alpha, p):
        params = NbParams(alpha, p)
        pmf = nb_pmf(params, 3000)
        ref = stats.nbinom.pmf(np.arange(3000), alpha, p)
        normal = ref > 1e-290  # subnormals carry only a few digits
        np.testing.assert_allclose(pmf.probs[normal], ref[normal], rtol=1e-9)
        assert np.all(pmf.probs[~normal] < 1e-289)
        assert math.fsum(pmf.probs) + pmf.tail_mass == pytest.approx(1.0, abs=1e-12)


    @given(alpha=st.floats(100.0, 1e5), mean=st.floats(0.5, 200.0))
    def test_large_alpha_mass(self, alpha, mean):
        params = NbParams(alpha, alpha / (alpha + mean))
        pmf = nb_pmf(params, 2000)
        assert math.fsum(pmf.probs) + pmf.tail_mass == pytest.approx(1.0, abs=1e-13)


class TestTotalVariation:
    def test_identical(self):
        a = Pmf([0.2, 0.3, 0.5])
        assert tv_distance(a, a) == (0.0, 0.0)

    def test_disjoint(self):
        assert tv_distance(Pmf([1.0, 0.0]), Pmf([0.0, 1.0]))[0] == 1.0

    def test_tail_in_error(self):
        v, err = tv_distance(Pmf([0.5], 0.5), Pmf([0.25], 0.75))
        assert v == 0.125 and err == 0.625

    @given(a1=st.floats(0.5, 60), p1=st.floats(0.1, 0.9), a2=st.floats(0.5, 60), p2=st.floats(0.1, 0.9))
    def test_nb_tv_vs_summation(self, a1, p1, a2, p2):
        x, y = NbParams(a1, p1), NbParams(a2, p2)
        L = int(max(x.mean + 60 * math.sqrt(x.variance), y.mean + 60 * math.sqrt(y.variance))) + 200
        direct, derr = tv_distance(nb_pmf(x, L), nb_pmf(y, L))
        value, err = nb_tv(x, y)
        assert value == pytest.approx(direct, abs=err + derr + 1e-12)

    def test_nb_tv_geometric_closed_form(self):
        # Ge(p) vs Ge(r), r > p: Ge(r) is larger below the single crossing c
        p, r = 0.3, 0.5
        c = math.ceil(math.log(r / p) / math.log((1 - p) / (1 - r)))
        exact = (1 - p) ** c - (1 - r) ** c
        assert nb_tv(NbParams(1, p), NbParams(1, r))[0] == pytest.approx(exact, rel=1e-12)


class TestReferenceLaws:
    def test_iid_geometric_is_nb(self):
        mix = [Geometric(0.4, count=6)]
        got = mixture_pmf(mix, 300)
        np.testing.assert_allclose(got.probs, stats.nbinom.pmf(np.arange(300), 6, 0.4), rtol=1e-10, atol=1e-17)

    def test_poisson_sum(self):
        got = mixture_pmf([Poisson(1.5, count=2), Poisson(0.5)], 60)
        np.testing.assert_allclose(got.probs, stats.poisson.pmf(np.arange(60), 3.5), rtol=1e-10, atol=1e-17)

    def test_binomial_sum(self):
        got = mixture_pmf([Binomial(3, 0.2, count=4)], 13)
        np.testing.assert_allclose(got.probs, stats.binom.pmf(np.arange(13), 12, 0.2), rtol=1e-10, atol=1e-17)

    def test_v_pmf_mean(self):
        mix = [Geometric(0.4, count=5), Geometric(0.3, count=5)]
        fit = match_three_param(aggregate(mix))
        pmf = v_pmf(fit, 500)
        assert pmf.mean() == pytest.approx(aggregate(mix).mu, rel=1e-10)

    def test_waiting_exact_vs_convolution(self):
        cfg = K1K2Config(2, 3, 0.5, 4)
        np.testing.assert_allclose(waiting_pmf_exact(cfg, 800).probs, waiting_pmf(cfg, 800).probs, atol=1e-14)


class TestWaitingTV:
    @pytest.mark.parametrize("cfg", [
        K1K2Config(1, 4, 0.25, 20), K1K2Config(2, 3, 0.5, 5), K1K2Config(3, 4, 0.25, 50), K1K2Config(1, 2, 0.4, 1),
    ])
    def test_engines_agree(self, cfg):
        for params in (one_param_params(cfg), two_param_params(cfg)):
            e = waiting_tv(cfg, params, method="expansion")
            s = waiting_tv(cfg, params, method="stream")
            assert abs(e.value - s.value) <= e.error + s.error

    def test_matches_stored_pmfs(self):
        cfg = K1K2Config(1, 2, 0.4, 3)
        params = two_param_params(cfg)
        direct, err = tv_distance(waiting_pmf_exact(cfg, 2000), nb_pmf(params, 2000))
        w = waiting_tv(cfg, params)
        assert w.value == pytest.approx(direct, abs=w.error + err + 1e-12)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            waiting_tv(K1K2Config(1, 2, 0.4), NbParams(1, 0.5), method="magic")

    def test_far_reach(self):
        # mean waiting time around 1e9 trials is out of reach for streaming, not for the expansion
        cfg = K1K2Config(1, 9, 1 / 16, 1)
        w = waiting_tv(cfg, one_param_params(cfg))
        assert 0 <= w.value <= 1 and w.error < 1e-9


class TestSimulation:
    def test_deterministic(self):
        cfg = K1K2Config(1, 2, 0.4)
        a, b = simulate_k1k2(cfg, 5000, 3), simulate_k1k2(cfg, 5000, 3)
        np.testing.assert_array_equal(a.empirical.probs, b.empirical.probs)
        c = simulate_k1k2(cfg, 5000, 4)
        assert not np.array_equal(a.empirical.probs, c.empirical.probs)

    def test_first_chunk_is_prefix_independent(self):
        # chunks are seeded from (seed, chunk index) only
        cfg = K1K2Config(1, 2, 0.4)
        assert simulate_k1k2(cfg, 1000, 9).trials == 1000

    def test_against_exact(self):
        cfg = K1K2Config(1, 2, 0.4, 2)
        run = simulate_k1k2(cfg, 200_000, 11)
        z = run.standardized_deviation(waiting_pmf_exact(cfg, 400).probs)
        assert np.max(np.abs(z)) <= 4.5

    def test_pooling(self):
        run = simulate_k1k2(K1K2Config(1, 2, 0.4), 1000, 1)
        ref = waiting_pmf_exact(K1K2Config(1, 2, 0.4), 400).probs
        z = run.standardized_deviation(ref)
        assert z.size == int(np.sum(ref * 1000 >= MIN_EXPECTED_COUNT)) + 1

    def test_wrong_reference_detected(self):
        cfg = K1K2Config(1, 2, 0.4, 2)
        run = simulate_k1k2(cfg, 100_000, 11)
        wrong = waiting_pmf_exact(K1K2Config(1, 2, 0.42, 2), 400).probs
        assert np.max(np.abs(run.standardized_deviation(wrong))) > 6

    def test_bad_trials(self):
        with pytest.raises(ValueError):
            simulate_k1k2(K1K2Config(1, 2, 0.4), 0, 1)


class TestDomination:
    @pytest.mark.parametrize("scheme", ["one-param", "two-param", "three-param"])
    def test_mixture(self, scheme):
        mix = [Geometric(0.55, count=6), Geometric(0.45, count=6), Poisson(0.5)]
        dom = verify_domination(mix, scheme)
        assert not dom.violated and dom.margin >= 0
        assert dom.tv > 0

    def test_waiting(self):
        dom = verify_domination(K1K2Config(1, 6, 0.125), Scheme.K1K2_ONE)
        assert dom.tv == pytest.approx(9.266e-7, rel=1e-3)
        assert dom.bound == pytest.approx(0.000260107, rel=1e-5)

    def test_violation_raised(self, monkeypatch):
        # a report that claims zero error for a mismatched law must be caught
        from nbstein import oracle
        real = oracle.theorem_one

        def zero(mixture, params, L=None):
            r = real(mixture, params, L)
            return type(r).from_terms(r.scheme, r.params, {"all": 0.0})

        monkeypatch.setattr(oracle, "theorem_one", zero)
        mix = [Geometric(0.55, count=6), Geometric(0.45, count=6)]
        with pytest.raises(DominationViolated) as info:
            verify_domination(mix, "one-param")
        assert info.value.report.violated
        assert verify_domination(mix, "one-param", raise_on_violation=False).margin < 0

    def test_report_dict(self):
        d = verify_domination([Geometric(0.6, count=4)], "two-param").as_dict()
        assert {"bound", "tv", "tv_error", "margin", "method"} <= d.keys()
