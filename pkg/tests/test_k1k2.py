import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nbstein.bounds import Scheme
from nbstein.errors import InvalidParams
from nbstein.k1k2 import (
    K1K2Config,
    TABLE_GRID,
    b_closed_form,
    b_coeffs,
    b_differences,
    dominant_ratio,
    one_param_bound_k1k2,
    one_param_params,
    order_k1k2_pmf,
    order_k1k2_table,
    single_waiting_pmf,
    table1,
    table2,
    two_param_bound_k1k2,
    two_param_params,
    waiting_moments,
    waiting_pmf,
)
from nbstein.oracle import waiting_pmf_exact

configs = st.builds(
    K1K2Config,
    st.integers(1, 4),
    st.integers(1, 4),
    st.sampled_from([0.25, 0.5, 0.125, 0.3]),
    st.integers(1, 3),
)


def enumerate_counts(k1, k2, p_bar, t):
    """P(x non-overlapping F^k1 S^k2 events in t trials), by listing all 2^t sequences."""
    pattern = "F" * k1 + "S" * k2
    k = k1 + k2
    out = np.zeros(t // k + 1)
    for seq in itertools.product("FS", repeat=t):
        s = "".join(seq)
        x, i = 0, 0
        while i + k <= t:
            if s[i : i + k] == pattern:
                x, i = x + 1, i + k
            else:
                i += 1
        # a sequence only counts events completed after the last one, left to right
        prob = p_bar ** s.count("S") * (1 - p_bar) ** s.count("F")
        out[x] += prob
    return out


def enumerate_first_wait(k1, k2, p_bar, m):
    """P(first event ends at trial m + k), by enumeration."""
    k = k1 + k2
    t = m + k
    pattern = "F" * k1 + "S" * k2
    total = 0.0
    for seq in itertools.product("FS", repeat=t):
        s = "".join(seq)
        if s.endswith(pattern) and pattern not in s[:-1]:
            total += p_bar ** s.count("S") * (1 - p_bar) ** s.count("F")
    return total


class TestConfig:
    def test_a(self):
        cfg = K1K2Config(1, 4, 0.25)
        assert cfg.a == pytest.approx(3 / 1024, rel=1e-15)
        assert cfg.k == 5

    @pytest.mark.parametrize("args", [(0, 0, 0.5), (1, 2, 0.0), (1, 2, 1.0), (-1, 2, 0.5), (1, 2, 0.5, 0)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            K1K2Config(*args)

    def test_pure_run_flagged(self):
        assert K1K2Config(0, 3, 0.5).hypothesis_flags()
        assert not K1K2Config(1, 3, 0.5).hypothesis_flags()


class TestBCoefficients:
    def test_first_steps(self):
        b = b_coeffs(K1K2Config(1, 4, 0.25), 10).b
        assert b[0] == 1.0
        np.testing.assert_array_equal(b[:5], 1.0)
        assert b[5] == pytest.approx(1021 / 1024, rel=1e-15)

    @pytest.mark.parametrize("k1,k2", TABLE_GRID)
    @pytest.mark.parametrize("p_bar", [0.25, 0.125, 0.0625])
    def test_closed_form(self, k1, k2, p_bar):
        cfg = K1K2Config(k1, k2, p_bar)
        np.testing.assert_allclose(b_coeffs(cfg, 200).b, b_closed_form(cfg, 200), rtol=0, atol=1e-10)

    @given(cfg=configs)
    def test_no_event_probability(self, cfg):
        b = b_coeffs(cfg, 300).b
        assert np.all(b >= 0) and np.all(b <= 1)
        assert np.all(np.diff(b[cfg.k - 1 :]) <= 1e-15)
        table = order_k1k2_table(cfg, 40)
        np.testing.assert_allclose(b[:41], table[0], rtol=1e-12, atol=1e-15)

    @pytest.mark.parametrize("k1,k2", TABLE_GRID)
    @pytest.mark.parametrize("p_bar", [0.25, 0.125, 0.0625])
    def test_partial_sums(self, k1, k2, p_bar):
        cfg = K1K2Config(k1, k2, p_bar)
        b = b_coeffs(cfg, 3000).b
        s = np.cumsum(b)
        assert np.all(np.diff(s) >= 0) and s[-1] < 1 / cfg.a
        # b_m is eventually geometric with ratio rho, which prices the missing tail
        rho = dominant_ratio(cfg.a, cfg.k)
        tail = b[-1] * rho / (1 - rho)
        assert 1 / cfg.a - s[-1] == pytest.approx(tail, rel=1e-6)
        # and a long enough run reaches 1/a itself
        if cfg.a > 1e-4:
            long_ = math.fsum(b_coeffs(cfg, int(60 / cfg.a)).b)
            assert long_ == pytest.approx(1 / cfg.a, rel=1e-10)

    def test_differences(self):
        cfg = K1K2Config(2, 5, 0.125)
        b = b_coeffs(cfg, 500).b
        for scheme, params in ((Scheme.K1K2_ONE, one_param_params(cfg)), (Scheme.K1K2_TWO, two_param_params(cfg))):
            d = b_differences(cfg, 500, scheme)
            np.testing.assert_allclose(d[1:], b[1:] - params.q * b[:-1], rtol=0, atol=1e-15)


class TestEventCounts:
    def test_short(self):
        cfg = K1K2Config(1, 2, 0.3)
        assert order_k1k2_pmf(cfg, 0, 2) == 1.0
        assert order_k1k2_pmf(cfg, 1, 3) == pytest.approx(cfg.a, rel=1e-15)

    @pytest.mark.parametrize("k1,k2,p_bar,t", [(1, 2, 0.3, 12), (2, 1, 0.6, 11), (1, 1, 0.5, 10), (2, 2, 0.4, 13)])
    def test_enumeration(self, k1, k2, p_bar, t):
        cfg = K1K2Config(k1, k2, p_bar)
        table = order_k1k2_table(cfg, t)
        np.testing.assert_allclose(table[:, t], enumerate_counts(k1, k2, p_bar, t), rtol=1e-12, atol=1e-16)

    @pytest.mark.parametrize("k1,k2", TABLE_GRID)
    def test_normalised(self, k1, k2):
        table = order_k1k2_table(K1K2Config(k1, k2, 0.25), 60)
        np.testing.assert_allclose(table.sum(axis=0), 1.0, atol=1e-12)


class TestWaiting:
    @pytest.mark.parametrize("k1,k2,p_bar", [(1, 2, 0.3), (2, 1, 0.6), (1, 3, 0.5)])
    def test_enumeration(self, k1, k2, p_bar):
        cfg = K1K2Config(k1, k2, p_bar)
        pmf = single_waiting_pmf(cfg, 9)
        want = [enumerate_first_wait(k1, k2, p_bar, m) for m in range(9)]
        np.testing.assert_allclose(pmf.probs, want, rtol=1e-12)
        assert pmf.probs[0] == pytest.approx(cfg.a)

    def test_two_events_start(self):
        cfg = K1K2Config(1, 4, 0.25, 2)
        assert waiting_pmf(cfg, 10).probs[0] == pytest.approx(cfg.a**2, rel=1e-14)

    @given(cfg=configs)
    def test_convolution_vs_recurrence(self, cfg):
        a, b = waiting_pmf(cfg, 400), waiting_pmf_exact(cfg, 400)
        np.testing.assert_allclose(a.probs, b.probs, rtol=0, atol=1e-13)
        assert a.tail_mass == pytest.approx(b.tail_mass, abs=1e-12)

    @given(cfg=configs)
    def test_moments(self, cfg):
        mean, var = waiting_moments(cfg)
        L = int(mean + 60 * math.sqrt(var)) + 100
        pmf = waiting_pmf_exact(cfg, L)
        m = np.arange(L)
        got_mean = math.fsum(m * pmf.probs)
        assert got_mean == pytest.approx(mean, rel=1e-9)
        assert math.fsum((m - got_mean) ** 2 * pmf.probs) == pytest.approx(var, rel=1e-8)

    def test_matching(self):
        cfg = K1K2Config(2, 4, 0.25, 7)
        mean, var = waiting_moments(cfg)
        one, two = one_param_params(cfg), two_param_params(cfg)
        assert one.alpha_q == pytest.approx(cfg.n)
        assert one.mean == pytest.approx(mean, rel=1e-12)
        assert two.mean == pytest.approx(mean, rel=1e-12)
        assert two.variance == pytest.approx(var, rel=1e-12)


class TestBounds:
    @pytest.mark.parametrize("k1,k2,p_bar,want", [
        (1, 4, 1 / 4, 1.05816), (1, 9, 1 / 16, 1.84173e-9), (6, 4, 1 / 8, 0.0582122),
    ])
    def test_one_param(self, k1, k2, p_bar, want):
        assert one_param_bound_k1k2(K1K2Config(k1, k2, p_bar)).bound == pytest.approx(want, rel=1e-5)

    @pytest.mark.parametrize("k1,k2,p_bar,n,want", [
        (1, 4, 1 / 4, 50, 1.1293), (3, 5, 1 / 8, 50, 0.000631458), (2, 6, 1 / 16, 100, 9.35125e-7),
    ])
    def test_two_param(self, k1, k2, p_bar, n, want):
        assert two_param_bound_k1k2(K1K2Config(k1, k2, p_bar, n)).bound == pytest.approx(want, rel=1e-5)

    def test_one_param_independent_of_n(self):
        a = one_param_bound_k1k2(K1K2Config(2, 5, 0.125, 1)).bound
        b = one_param_bound_k1k2(K1K2Config(2, 5, 0.125, 40)).bound
        assert a == pytest.approx(b, rel=1e-14)

    def test_printed_form_differs(self):
        cfg = K1K2Config(2, 5, 0.125, 50)
        for fn in (one_param_bound_k1k2, two_param_bound_k1k2):
            t, p = fn(cfg), fn(cfg, form="printed")
            assert p.bound > 0 and p.bound != t.bound

    def test_inadmissible(self):
        with pytest.raises(InvalidParams):
            one_param_params(K1K2Config(0, 2, 0.9))
        with pytest.raises(InvalidParams):
            two_param_bound_k1k2(K1K2Config(0, 2, 0.9, 10))

    def test_untruncated_one_param_is_at_least_one(self):
        # (1 - ka) sum l D_l = 1 over the full series
        cfg = K1K2Config(1, 4, 0.25)
        r = one_param_bound_k1k2(cfg, 200_000)
        assert r.bound >= 1 - 1e-9
        short = one_param_bound_k1k2(cfg, 3000)
        assert r.bound - short.bound <= short.tail_estimate * 1.05 + 1e-12

    def test_terms_sum(self):
        r = two_param_bound_k1k2(K1K2Config(3, 5, 0.125, 50))
        assert math.fsum(r.terms.values()) == pytest.approx(r.bound, abs=1e-12)


class TestTables:
    def test_shapes(self):
        # 21 (k1, k2) rows, three p_bar columns, two n per column in the second table
        assert len(table1()) == 63
        t2 = table2()
        assert len(t2) == 126
        assert {c.n for c in t2} == {50, 100}
        assert all(c.error is None for c in t2)

    def test_workers_keep_order(self):
        a = [c.bound for c in table2(workers=1)]
        b = [c.bound for c in table2(workers=4)]
        assert a == b
