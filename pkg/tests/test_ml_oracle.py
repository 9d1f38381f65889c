import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from erasure_lab.channel import (ErasurePattern, GilbertElliott, Memoryless, Table,
                                 enumerate_patterns, transmit)
from erasure_lab.codecs import (Codebook, CodeParams, is_mds, mds_codebook, random_codebook,
                                repetition_codebook, rs_code)
from erasure_lab.galois import field_of_order
from erasure_lab.ml_oracle import (NoConsistentCodeword, bin_profile, exact_ml_error,
                                   exact_ml_error_by_weight, ml_decode, near_clone_codebook,
                                   occupied_bin_counts, singleton_lower_bound,
                                   verify_proposition_one)


def params(N, K, q):
    return CodeParams(N, K, field_of_order(q))


def brute_ml_error(words, q, K, pattern_prob):
    """Per-codeword route: success = sum_c sum_e P(e) / (q^K |bin(c)|)."""
    N = len(words[0])
    qk = q**K
    success = Fraction(0)
    for idx in range(2**N):
        e = ErasurePattern.from_index(idx, N)
        kept = [j for j in range(N) if not e.bits[j]]
        keys = [tuple(w[j] for j in kept) for w in words]
        for key in keys:
            success += Fraction(pattern_prob(e)) / (qk * keys.count(key))
    return 1 - success


def test_mds_3_2_gf3_half():
    cb = rs_code(params(3, 2, 3)).codebook()
    ch = Memoryless(Fraction(1, 2))
    expect = Fraction(3, 8) * Fraction(2, 3) + Fraction(1, 8) * Fraction(8, 9)
    assert exact_ml_error(cb, ch) == expect
    assert singleton_lower_bound(cb.params, ch) == expect
    assert float(expect) == pytest.approx(0.3611111111)


def test_mds_3_2_gf3_three_tenths():
    cb = rs_code(params(3, 2, 3)).codebook()
    ch = Memoryless(Fraction(3, 10))
    assert exact_ml_error(cb, ch) == Fraction(3, 20)
    assert singleton_lower_bound(cb.params, ch) == Fraction(3, 20)


@pytest.mark.parametrize("seed", range(6))
def test_against_bruteforce_oracle(seed):
    rng = np.random.default_rng(seed)
    q, N, K = [(2, 3, 2), (3, 3, 1), (2, 4, 2), (3, 4, 2), (4, 3, 2), (2, 5, 3)][seed]
    cb = random_codebook(params(N, K, q), rng)
    ch = Memoryless(Fraction(2, 7))
    words = [tuple(int(v) for v in w) for w in cb.words]
    assert exact_ml_error(cb, ch) == brute_ml_error(words, q, K, ch.pattern_prob)
    assert exact_ml_error(cb, Memoryless(2 / 7)) == pytest.approx(float(exact_ml_error(cb, ch)),
                                                                  abs=1e-14)


def test_zero_erasure_and_identical_codewords():
    cb = rs_code(params(4, 2, 5)).codebook()
    assert exact_ml_error(cb, Memoryless(0.0)) == 0.0
    same = Codebook(params(3, 2, 3), np.zeros((9, 3), dtype=np.int64))
    assert exact_ml_error(same, Memoryless(Fraction(1, 5))) == 1 - Fraction(1, 9)


def test_lower_bound_limits():
    p = params(4, 3, 5)
    assert singleton_lower_bound(p, Memoryless(1.0)) == pytest.approx(1 - 5**-3)
    assert singleton_lower_bound(p, Memoryless(1e-6)) < 1e-10
    # memoryless closed form against pattern enumeration through a Table
    ch = Memoryless(0.27)
    _, probs = enumerate_patterns(4, ch)
    tab = Table(4, tuple(probs / probs.sum()))
    assert singleton_lower_bound(p, tab) == pytest.approx(singleton_lower_bound(p, ch), abs=1e-14)


def test_bin_profiles():
    p = params(4, 2, 5)
    cb = rs_code(p).codebook()
    all_erased = bin_profile(cb, ErasurePattern((1, 1, 1, 1)))
    assert all_erased.occupied == 1 and all_erased.total == 25
    for idx in range(16):
        e = ErasurePattern.from_index(idx, 4)
        prof = bin_profile(cb, e)
        assert prof.total == 25
        assert prof.occupied <= min(25, 5 ** (4 - e.weight))
        if e.weight >= 2:
            assert set(prof.bin_sizes.values()) == {5 ** (2 - 4 + e.weight)}
        else:
            assert set(prof.bin_sizes.values()) == {1}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([(2, 3, 1), (2, 4, 2), (3, 3, 2), (3, 4, 2), (4, 3, 1)]))
def test_error_at_least_lower_bound(seed, shape):
    q, N, K = shape
    rng = np.random.default_rng(seed)
    cb = random_codebook(params(N, K, q), rng)
    ch = Memoryless(Fraction(int(rng.integers(1, 10)), 10))
    assert exact_ml_error(cb, ch) >= singleton_lower_bound(cb.params, ch)
    counts = occupied_bin_counts(cb)
    weights = np.array([bin(i).count("1") for i in range(2**N)])
    assert np.all(counts <= np.minimum(q**K, float(q) ** (N - weights)))


def test_weight_grouped_formula():
    rng = np.random.default_rng(5)
    for q, N, K in [(2, 5, 2), (3, 4, 2), (4, 4, 3)]:
        cb = random_codebook(params(N, K, q), rng)
        ch = Memoryless(0.31)
        assert abs(exact_ml_error_by_weight(cb, ch) - exact_ml_error(cb, ch)) <= 1e-12


def test_ml_decode_behaviour():
    rng = np.random.default_rng(0)
    cb = rs_code(params(3, 2, 3)).codebook()
    for i, w in enumerate(cb.words):
        y, e = transmit(w, Memoryless(0.0), rng)
        assert ml_decode(cb, y, e, rng) == i
    # bin of size B: success 1/B
    e = ErasurePattern((1, 1, 0))
    y = np.where(e.mask(), 0, cb.words[4])
    hits = sum(ml_decode(cb, y, e, rng) == 4 for _ in range(100_000))
    B = 3
    sigma = math.sqrt((1 / B) * (1 - 1 / B) / 1e5)
    assert abs(hits / 1e5 - 1 / B) < 3 * sigma
    e_all = ErasurePattern((1, 1, 1))
    hits = sum(ml_decode(cb, np.zeros(3), e_all, rng) == 4 for _ in range(90_000))
    assert abs(hits / 9e4 - 1 / 9) < 3 * math.sqrt((1 / 9) * (8 / 9) / 9e4)
    with pytest.raises(NoConsistentCodeword):
        ml_decode(cb, np.array([0, 0, 1]), ErasurePattern((0, 0, 0)), rng)


def test_near_clone_not_mds():
    cb = mds_codebook(params(3, 2, 3))
    rng = np.random.default_rng(2)
    for _ in range(50):
        assert not is_mds(near_clone_codebook(cb, rng))


@pytest.mark.parametrize("pi", [Fraction(3, 10), Fraction(1, 2)])
@pytest.mark.parametrize("q,N,K", [(3, 3, 2), (2, 3, 1)])
def test_verify_proposition_one(q, N, K, pi):
    rep = verify_proposition_one(params(N, K, q), Memoryless(pi), 200, np.random.default_rng(0))
    assert rep["passed"] and rep["mds_equals_bound"] and rep["all_non_mds_strictly_worse"]
    assert rep["sampled_non_mds"] == 200


def test_repetition_code_equals_bound():
    p = params(3, 1, 2)
    cb = repetition_codebook(p)
    ch = Memoryless(Fraction(1, 2))
    assert exact_ml_error(cb, ch) == singleton_lower_bound(p, ch)


def test_strictness_only_with_full_support():
    p = params(3, 2, 3)
    bad = Codebook(p, np.array([[a, b, (a + b) % 3] for a in range(3) for b in range(3)]))
    words = bad.words.copy()
    words[1] = words[0]
    words[1, 2] = (words[1, 2] + 1) % 3
    non_mds = Codebook(p, words)
    ch = Memoryless(Fraction(3, 10))
    assert exact_ml_error(non_mds, ch) > exact_ml_error(bad, ch)
    # channel that never erases: every codebook without duplicates ties
    probs = [Fraction(0)] * 8
    probs[0] = Fraction(1)
    rep = verify_proposition_one(p, Table(3, tuple(probs)), 20, np.random.default_rng(1),
                                 extra_codebooks=[non_mds])
    assert not rep["strictness_asserted"]
    assert rep["passed"]


def test_ge_channel_bound_holds():
    ch = GilbertElliott(0.1, 0.3, 0.05, 0.6)
    p = params(4, 2, 4)
    mds = exact_ml_error(rs_code(p).codebook(), ch)
    assert mds == pytest.approx(singleton_lower_bound(p, ch), abs=1e-14)
    for s in range(10):
        cb = random_codebook(p, np.random.default_rng(s))
        assert exact_ml_error(cb, ch) >= mds - 1e-12
