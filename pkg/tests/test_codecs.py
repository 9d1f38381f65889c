import itertools

import numpy as np
import pytest

from erasure_lab.channel import ErasurePattern
from erasure_lab.codecs import (Codebook, CodeParams, DuplicateEvalPoints, GeneratorMatrix,
                                InconsistentSystem, NotEnoughSymbols, RankDeficient,
                                TooLargeToEnumerate, TooLongForField, TooManyErasures,
                                all_messages, is_mds, linear_codebook, linear_encode,
                                linear_erasure_decode, linear_random_generator, min_distance,
                                mds_codebook, parity_check_codebook, random_codebook,
                                repetition_codebook, rs_code, rs_erasure_decode)
from erasure_lab.galois import field_of_order


def params(N, K, q):
    return CodeParams(N, K, field_of_order(q))


def all_patterns(N, max_weight=None):
    for i in range(2**N):
        e = ErasurePattern.from_index(i, N)
        if max_weight is None or e.weight <= max_weight:
            yield e


def test_rs_examples():
    code = rs_code(params(3, 2, 3))
    assert code.encode([1, 1]).tolist() == [1, 2, 0]
    rep = rs_code(params(5, 1, 7))
    assert rep.encode([4]).tolist() == [4] * 5
    cb = rs_code(params(4, 2, 5)).codebook()
    assert len(cb) == 25 and min_distance(cb) == 3 and is_mds(cb)


def test_rs_matches_polynomial_evaluation():
    F = field_of_order(16)
    code = rs_code(params(10, 4, 16))
    rng = np.random.default_rng(0)
    for _ in range(50):
        m = F.sample_uniform(rng, 4)
        expect = []
        for x in range(10):
            acc = 0
            for k in reversed(range(4)):  # Horner
                acc = F.add(F.mul(acc, x), int(m[k]))
            expect.append(acc)
        assert code.encode(m).tolist() == expect


@pytest.mark.parametrize("N,K,q", [(3, 2, 3), (4, 2, 4), (5, 3, 5), (4, 1, 4), (6, 3, 7)])
def test_rs_decode_exhaustive(N, K, q):
    code = rs_code(params(N, K, q))
    cb = code.codebook()
    msgs = all_messages(q, K)
    for e in all_patterns(N):
        for m, c in zip(msgs, cb.words):
            y = np.where(e.mask(), 0, c)
            if e.weight > N - K:
                with pytest.raises(TooManyErasures):
                    rs_erasure_decode(y, e, code)
                break
            assert np.array_equal(rs_erasure_decode(y, e, code), m)


def test_rs_any_k_subset_suffices():
    N, K, q = 7, 3, 8
    G = rs_code(params(N, K, q)).generator.entries
    F = field_of_order(q)
    from erasure_lab._kernels import rank_batch
    subsets = list(itertools.combinations(range(N), K))
    ranks = rank_batch(F, np.stack([G[:, list(s)] for s in subsets]))
    assert np.all(ranks == K)


@pytest.mark.parametrize("N,K,q", [(3, 2, 3), (4, 2, 5), (5, 2, 8), (4, 3, 4), (7, 3, 7)])
def test_rs_is_mds(N, K, q):
    assert is_mds(rs_code(params(N, K, q)).codebook())


def test_rs_validation():
    with pytest.raises(TooLongForField):
        rs_code(params(6, 2, 5))
    with pytest.raises(DuplicateEvalPoints):
        rs_code(params(3, 2, 5), eval_points=[1, 1, 2])
    custom = rs_code(params(3, 2, 5), eval_points=[4, 2, 3])
    assert is_mds(custom.codebook())


def test_small_mds_families():
    assert min_distance(repetition_codebook(params(4, 1, 2))) == 4
    spc = parity_check_codebook(params(3, 2, 2))
    assert min_distance(spc) == 2 and is_mds(spc)
    last_zero = Codebook(params(3, 2, 2), np.array([[a, b, 0] for a in (0, 1) for b in (0, 1)]))
    assert min_distance(last_zero) == 1 and not is_mds(last_zero)
    dup = Codebook(params(2, 1, 2), np.array([[0, 1], [0, 1]]))
    assert min_distance(dup) == 0
    assert is_mds(mds_codebook(params(3, 1, 2)))
    assert is_mds(mds_codebook(params(4, 3, 3)))


def test_random_codebook():
    p = params(2, 1, 2)
    a = random_codebook(p, np.random.default_rng(4))
    b = random_codebook(p, np.random.default_rng(4))
    assert a.words.shape == (2, 2) and np.array_equal(a.words, b.words)
    counts = np.zeros(3)
    for s in range(200):
        counts += np.bincount(random_codebook(params(4, 2, 3), np.random.default_rng(s)).words.ravel(),
                              minlength=3)
    n = counts.sum()
    assert np.all(np.abs(counts / n - 1 / 3) < 3 * np.sqrt(2 / 9 / n))
    dists = []
    for s in range(100):
        w = random_codebook(params(8, 4, 2), np.random.default_rng(s)).words
        d = (w[:, None, :] != w[None, :, :]).sum(axis=2)
        dists.append(d[np.triu_indices(16, 1)].mean())
    assert abs(np.mean(dists) - 4) < 0.05
    with pytest.raises(TooLargeToEnumerate):
        random_codebook(params(20, 11, 4), np.random.default_rng(0))


def test_linear_generator_statistics():
    # K = N is outside CodeParams, so the 2 x 2 case is the first two columns of a 2 x 3 draw
    p = params(3, 2, 2)
    F = field_of_order(2)
    from erasure_lab._kernels import rank_batch
    Gs = F.sample_uniform(np.random.default_rng(0), (100_000, 2, 2))
    singular = np.mean(rank_batch(F, Gs) < 2)
    drawn = np.stack([linear_random_generator(p, np.random.default_rng(s)).entries[:, :2]
                      for s in range(20_000)])
    assert abs(np.mean(rank_batch(F, drawn) < 2) - 0.625) < 0.02
    assert abs(singular - 0.625) < 0.01
    g1 = linear_random_generator(p, np.random.default_rng(8)).entries
    g2 = linear_random_generator(p, np.random.default_rng(8)).entries
    assert np.array_equal(g1, g2)
    rows = [linear_random_generator(params(3, 1, 3), np.random.default_rng(s)).entries[0]
            for s in range(27 * 200)]
    idx = np.array([r[0] * 9 + r[1] * 3 + r[2] for r in rows])
    from scipy.stats import chisquare
    assert chisquare(np.bincount(idx, minlength=27)).pvalue > 0.001


def test_linear_encode_examples():
    p = params(3, 2, 2)
    G = GeneratorMatrix(np.array([[1, 0, 1], [0, 1, 1]]), p)
    assert linear_encode([1, 1], G).tolist() == [1, 1, 0]
    assert linear_encode([0, 0], G).tolist() == [0, 0, 0]
    F = field_of_order(5)
    rng = np.random.default_rng(1)
    p5 = params(6, 3, 5)
    G5 = GeneratorMatrix(np.hstack([np.eye(3, dtype=np.int64), F.sample_uniform(rng, (3, 3))]), p5)
    b = F.sample_uniform(rng, 3)
    assert np.array_equal(linear_encode(b, G5)[:3], b)


def test_linear_decode_errors():
    # unerased columns form [[1, 0], [1, 0]]: rank 1
    G = GeneratorMatrix(np.array([[1, 0, 1], [1, 1, 1]]), params(3, 2, 2))
    with pytest.raises(RankDeficient):
        linear_erasure_decode([0, 0, 0], ErasurePattern((0, 1, 0)), G)
    with pytest.raises(NotEnoughSymbols):
        linear_erasure_decode([0, 0, 0], ErasurePattern((1, 1, 0)), G)
    G2 = GeneratorMatrix(np.array([[1, 0, 1], [0, 1, 1]]), params(3, 2, 2))
    with pytest.raises(InconsistentSystem):
        linear_erasure_decode([1, 1, 1], ErasurePattern((0, 0, 0)), G2)


@pytest.mark.parametrize("q,N,K", [(2, 5, 3), (3, 4, 2), (4, 5, 2), (5, 4, 3)])
def test_linear_decode_never_misdecodes(q, N, K):
    rng = np.random.default_rng(q * 100 + N)
    p = params(N, K, q)
    for _ in range(10):
        G = linear_random_generator(p, rng)
        cb = linear_codebook(G)
        msgs = all_messages(q, K)
        for e in all_patterns(N):
            for m, c in zip(msgs[::3], cb.words[::3]):
                y = np.where(e.mask(), 0, c)
                try:
                    got = linear_erasure_decode(y, e, G)
                except (NotEnoughSymbols, RankDeficient):
                    continue
                assert np.array_equal(got, m)


def test_rank_deficient_rate_weight_two():
    F = field_of_order(2)
    from erasure_lab import _kernels
    rng = np.random.default_rng(3)
    T = 100_000
    G = F.sample_uniform(rng, (T, 2, 4))
    erased = np.zeros((T, 4), dtype=bool)
    erased[:, :2] = True
    status, _, _ = _kernels.solve_batch(F, G, np.zeros((T, 4), dtype=np.int64), erased)
    assert abs(np.mean(status == _kernels.RANK_DEFICIENT) - 0.625) < 0.01


def test_params_validation():
    with pytest.raises(ValueError):
        params(3, 3, 2)
    with pytest.raises(ValueError):
        params(3, 0, 2)
    p = params(15, 11, 16)
    assert p.overhead == pytest.approx(4 / 15)
    assert p.rate == pytest.approx(11 / 15 * np.log(16))
