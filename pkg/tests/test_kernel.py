import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import comb, logsumexp
from scipy.stats import poisson

from subtree_align.errors import CapacityError
from subtree_align.kernel import (
    enumerate_partial_matching_sum,
    log_f0_general,
    log_f1_general,
    log_f_er,
    log_partial_matching_sum,
)


def _random_log_matrix(rng, l, l2, p_neginf=0.1):
    m = rng.normal(scale=1.5, size=(l, l2))
    m[rng.random((l, l2)) < p_neginf] = -np.inf
    return m


def _close(a, b, tol):
    a, b = np.asarray(a), np.asarray(b)
    same_inf = np.isneginf(a) == np.isneginf(b)
    fin = np.isfinite(a) & np.isfinite(b)
    return bool(np.all(same_inf) and np.all(np.abs(a[fin] - b[fin]) < tol))


def brute_f1(l, l2, m, u, u2, log_q):
    """Literal sum over subsets I, I' and bijections sigma."""
    terms = []
    for k in range(min(l, l2) + 1):
        lb, lr = l - k, l2 - k
        if lb >= log_q.shape[0] or lr >= log_q.shape[1] or k >= log_q.shape[2]:
            continue
        w = log_q[lb, lr, k] - math.log(comb(l, k) * comb(l2, k) * math.factorial(k))
        if w == -np.inf:
            continue
        for rows in itertools.combinations(range(l), k):
            for cols in itertools.permutations(range(l2), k):
                t = w + sum(m[r, c] for r, c in zip(rows, cols))
                t += sum(u[i] for i in range(l) if i not in rows)
                t += sum(u2[j] for j in range(l2) if j not in cols)
                terms.append(t)
    return logsumexp(terms) if terms else -np.inf


def brute_f0(l, u, v, log_q2):
    terms = []
    for k in range(l + 1):
        if l - k >= log_q2.shape[0] or k >= log_q2.shape[1]:
            continue
        w = log_q2[l - k, k] - math.log(comb(l, k))
        for chosen in itertools.combinations(range(l), k):
            terms.append(w + sum(u[i] if i in chosen else v[i] for i in range(l)))
    return logsumexp(terms) if terms else -np.inf


def poisson_log_table(lam, s, size=12):
    a = poisson.logpmf(np.arange(size), lam * (1 - s))
    b = poisson.logpmf(np.arange(size), lam * s)
    return a[:, None, None] + a[None, :, None] + b[None, None, :]


class TestPartialMatchingSums:
    def test_one_by_one(self):
        out = log_partial_matching_sum([[math.log(3.0)]])
        assert out[0] == 0.0
        assert out[1] == pytest.approx(math.log(3.0))

    def test_two_by_two_all_ones(self):
        out = log_partial_matching_sum(np.zeros((2, 2)))
        assert out == pytest.approx([0.0, math.log(4), math.log(2)])

    def test_empty_matrix(self):
        assert list(log_partial_matching_sum(np.zeros((0, 3)))) == [0.0]

    def test_two_hundred_random_matrices_against_enumeration(self):
        rng = np.random.default_rng(11)
        worst = 0.0
        for _ in range(200):
            l, l2 = rng.integers(0, 6), rng.integers(0, 7)
            if min(l, l2) > 5:
                continue
            m = _random_log_matrix(rng, l, l2)
            got = log_partial_matching_sum(m)
            ref = enumerate_partial_matching_sum(m)
            assert _close(got, ref, 1e-10)
            fin = np.isfinite(ref)
            if fin.any():
                worst = max(worst, float(np.max(np.abs(got[fin] - ref[fin]))))
        assert worst < 1e-10

    def test_capacity_guard(self):
        with pytest.raises(CapacityError):
            log_partial_matching_sum(np.zeros((4, 4)), degree_cap=3)

    @given(st.integers(0, 4), st.integers(0, 4), st.floats(-3, 3), st.integers(0, 2**31))
    @settings(max_examples=60, deadline=None)
    def test_constant_shift_scales_by_k(self, l, l2, c, seed):
        m = _random_log_matrix(np.random.default_rng(seed), l, l2, 0.0)
        base = log_partial_matching_sum(m)
        shifted = log_partial_matching_sum(m + c)
        k = np.arange(base.size)
        assert np.allclose(shifted, base + k * c, atol=1e-10)

    def test_log_weight_is_per_matched_pair(self):
        m = _random_log_matrix(np.random.default_rng(2), 3, 4, 0.0)
        assert np.allclose(log_partial_matching_sum(m, 0.7),
                           log_partial_matching_sum(m + 0.7), atol=1e-12)


class TestFEr:
    def test_empty(self):
        assert log_f_er(0, 0, np.zeros((0, 0)), 1.4, 0.8) == pytest.approx(1.12)

    def test_one_zero(self):
        assert log_f_er(1, 0, np.zeros((1, 0)), 1.4, 0.8) == pytest.approx(1.12 + math.log(0.2))

    def test_one_one(self):
        lam, s = 1.4, 0.8
        expect = lam * s + math.log((1 - s) ** 2 + s / lam)
        assert log_f_er(1, 1, np.zeros((1, 1)), lam, s) == pytest.approx(expect, abs=1e-12)

    def test_perfect_correlation_mismatch(self):
        assert log_f_er(2, 3, np.zeros((2, 3)), 1.4, 1.0) == -np.inf

    def test_closed_form_all_ones(self):
        lam, s = 1.7, 0.6
        for l in range(5):
            for l2 in range(5):
                w = s / (lam * (1 - s) ** 2)
                tot = sum(w ** k * comb(l, k) * comb(l2, k) * math.factorial(k)
                          for k in range(min(l, l2) + 1))
                expect = lam * s + (l + l2) * math.log(1 - s) + math.log(tot)
                assert log_f_er(l, l2, np.zeros((l, l2)), lam, s) == pytest.approx(expect, abs=1e-12)

    @given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**31),
           st.floats(0.05, 0.95), st.floats(0.01, 2.0))
    @settings(max_examples=60, deadline=None)
    def test_monotone_in_entries(self, l, l2, seed, s, bump):
        rng = np.random.default_rng(seed)
        m = _random_log_matrix(rng, l, l2, 0.0)
        i, j = rng.integers(l), rng.integers(l2)
        m2 = m.copy()
        m2[i, j] += bump
        assert log_f_er(l, l2, m2, 1.3, s) > log_f_er(l, l2, m, 1.3, s)

    @pytest.mark.parametrize("l", [0, 1, 2, 3])
    def test_continuity_at_full_correlation(self, l):
        m = _random_log_matrix(np.random.default_rng(l), l, l, 0.0)
        near = log_f_er(l, l, m, 1.5, 1 - 1e-9)
        at = log_f_er(l, l, m, 1.5, 1.0)
        assert abs(near - at) < 1e-5


class TestGeneralKernels:
    def test_f1_reduces_to_er(self):
        rng = np.random.default_rng(5)
        lam, s = 1.5, 0.7
        log_q = poisson_log_table(lam, s)
        for _ in range(50):
            l, l2 = rng.integers(0, 5, size=2)
            m = _random_log_matrix(rng, l, l2, 0.0)
            got = log_f1_general(l, l2, m, np.zeros(l), np.zeros(l2), log_q)
            # f_ER carries exp(lam) relative to f1 built from P1 / (P0 P0) with unit messages
            ref = log_f_er(l, l2, m, lam, s)
            p0 = (-lam + l * math.log(lam) - math.lgamma(l + 1)
                  - lam + l2 * math.log(lam) - math.lgamma(l2 + 1))
            assert got - p0 == pytest.approx(ref, abs=1e-10)

    def test_f1_empty(self):
        log_q = np.log(np.full((2, 2, 2), 1 / 8))
        assert log_f1_general(0, 0, np.zeros((0, 0)), [], [], log_q) == pytest.approx(math.log(1 / 8))

    def test_f1_against_enumeration_asymmetric_law(self):
        rng = np.random.default_rng(9)
        for _ in range(80):
            q = rng.random((5, 4, 4))
            q[rng.random(q.shape) < 0.2] = 0
            q /= q.sum()
            with np.errstate(divide="ignore"):
                log_q = np.log(q)
            l, l2 = rng.integers(0, 5), rng.integers(0, 5)
            m = _random_log_matrix(rng, l, l2)
            u, u2 = rng.normal(size=l), rng.normal(size=l2)
            got = log_f1_general(l, l2, m, u, u2, log_q)
            ref = brute_f1(l, l2, m, u, u2, log_q)
            assert _close(got, ref, 1e-10)

    def test_f0_empty(self):
        log_q2 = np.log(np.array([[0.25, 0.75]]))
        assert log_f0_general(0, [], [], log_q2) == pytest.approx(math.log(0.25))

    def test_f0_equal_arguments(self):
        rng = np.random.default_rng(3)
        q2 = rng.random((6, 6))
        q2 /= q2.sum()
        for l in range(6):
            u = rng.normal(size=l)
            expect = math.log(sum(q2[l - k, k] for k in range(l + 1))) + u.sum()
            assert log_f0_general(l, u, u, np.log(q2)) == pytest.approx(expect, abs=1e-10)

    def test_f0_against_enumeration(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            q2 = rng.random((5, 5))
            q2 /= q2.sum()
            l = int(rng.integers(0, 5))
            u, v = rng.normal(size=l), rng.normal(size=l)
            assert log_f0_general(l, u, v, np.log(q2)) == pytest.approx(
                brute_f0(l, u, v, np.log(q2)), abs=1e-10)
