import itertools
import math

import numpy as np
import pytest
from scipy import stats

from poqlab import rom
from poqlab.rom import (KWiseHash, OracleTable, bit_projection, in_restricted_class, prefix_restrict, sample_kwise,
                        sample_oracle, xor_shift)


def test_same_seed_same_table():
    a = sample_oracle(7, 25, 4)
    b = sample_oracle(7, 25, 4)
    assert (a.table() == b.table()).all()
    assert (sample_oracle(8, 25, 4).table() != a.table()).any()


def test_lazy_agrees_with_explicit_and_counts():
    H = sample_oracle(3, 81, 5)
    L = sample_oracle(3, 81, 5, mode="lazy")
    for x in [0, 5, 5, 80, 17, 5]:
        assert (L.query(x) == H.query(x)).all()
    assert L.queries == 4
    assert L.calls == 6
    assert (L.as_explicit().table() == H.table()).all()
    with pytest.raises(ValueError):
        L.table()
    with pytest.raises(ValueError):
        L.query(81)


def test_seeds_differ_whp():
    base = sample_oracle(0, 16, 4).table()
    assert all((sample_oracle(s, 16, 4).table() != base).any() for s in range(1, 200))


def test_bit_projection():
    H = sample_oracle(1, 9, 3)
    parts = np.stack([bit_projection(H, i).values() for i in (1, 2, 3)], axis=1)
    assert (parts == H.table()).all()
    G = OracleTable.constant(4, 3, "100")
    assert bit_projection(G, 1)(2) == 1 and bit_projection(G, 2)(2) == 0
    with pytest.raises(IndexError):
        bit_projection(G, 0)


def test_xor_shift_algebra(rng):
    H = sample_oracle(2, 16, 4)
    zero = KWiseHash(3, 16, 4, (0, 0, 0))
    assert (xor_shift(H, zero).table() == H.table()).all()
    f = sample_kwise(3, 16, 4, rng)
    twice = xor_shift(xor_shift(H, f), f)
    assert (twice.table() == H.table()).all()
    shifted = xor_shift(H, f)
    for i in range(1, 5):
        expect = bit_projection(H, i).values() ^ f.evaluate(np.arange(16))[:, i - 1]
        assert (bit_projection(shifted, i).values() == expect).all()


def test_xor_shift_uniform_over_keys(rng):
    H = sample_oracle(5, 16, 3)
    counts = np.zeros(8, dtype=np.int64)
    for _ in range(4000):
        f = sample_kwise(2, 16, 3, rng)
        v = xor_shift(H, f).query(6)
        counts[int("".join(map(str, v)), 2)] += 1
    assert stats.chisquare(counts).pvalue > 0.01


@pytest.mark.parametrize("k", [1, 2, 3])
def test_kwise_independence_exhaustive(k):
    """Over all keys, any k distinct points map to uniformly distributed k-tuples."""
    w = 3
    keys = list(itertools.product(range(2 ** w), repeat=k))
    for pts in itertools.combinations(range(2 ** w), k):
        counts = {}
        for key in keys:
            out = KWiseHash(k, 2 ** w, w, key).evaluate(list(pts))
            tag = out.tobytes()
            counts[tag] = counts.get(tag, 0) + 1
        assert len(counts) == 2 ** (w * k)
        assert set(counts.values()) == {1}


def test_prefix_restrict():
    H = sample_oracle(9, 32, 8, mode="lazy")
    assert prefix_restrict(H, b"") is H
    a = prefix_restrict(H, b"s1")
    b = prefix_restrict(H, b"s1")
    assert all((a.query(x) == b.query(x)).all() for x in range(32))
    fixed = OracleTable.constant(4, 2, "11")
    assert prefix_restrict(fixed, b"abc") is fixed


def test_prefix_restrict_independent_salts():
    H = sample_oracle(11, 64, 6, mode="lazy")
    trials, hits = 3000, 0
    for s in range(trials):
        a = prefix_restrict(H, b"A" + s.to_bytes(4, "big"))
        b = prefix_restrict(H, b"B" + s.to_bytes(4, "big"))
        hits += bool((a.query(s % 64) == b.query(s % 64)).all())
    p = 2 ** -6
    assert abs(hits / trials - p) <= 3 * math.sqrt(p * (1 - p) / trials)


def test_restricted_class_examples():
    assert not in_restricted_class(OracleTable.constant(8, 3))
    balanced = np.zeros((8, 3), dtype=np.uint8)
    balanced[:4] = 1
    assert in_restricted_class(OracleTable.from_bits(balanced))
    # boundaries are excluded: 1/3 of 9 points
    edge = np.zeros((9, 1), dtype=np.uint8)
    edge[:3] = 1
    assert not in_restricted_class(OracleTable.from_bits(edge))


def test_restricted_class_fraction():
    """|Sigma| = 32, n = 4: exact rate (P[11 <= Bin(32, 1/2) <= 21])^4 vs sampling."""
    exact = (sum(math.comb(32, c) for c in range(11, 22)) / 2 ** 32) ** 4
    trials = 20000
    hits = sum(in_restricted_class(sample_oracle(s, 32, 4)) for s in range(trials))
    assert abs(hits / trials - exact) <= 0.01


def test_oracle_dump_round_trip(tmp_path):
    H = sample_oracle(4, 25, 4)
    path = tmp_path / "oracle.txt"
    rom.dump_oracle(H, path)
    assert open(path).readline() == f"0\t{rom.bits_to_str(H.query(0))}\n"
    assert (rom.load_oracle(path).table() == H.table()).all()


def test_random_oracle_stream_lengths():
    ro = rom.RandomOracle(1)
    assert len(ro.bits(b"x", 700)) == 700
    assert (ro.bits(b"x", 100) == ro.bits(b"x", 700)[:100]).all()
