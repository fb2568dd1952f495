import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from poqlab.gf_core import (FieldSpec, GF, VectorSpace, default_spec, field, fold, hamming_weight, is_irreducible,
                            multiplicative_order, prime_power, unfold)

SMALL_Q = [2, 3, 4, 5, 7, 8, 9, 11, 13, 16, 25, 27, 32, 49, 64]


def _poly_mul_ref(a, b, p, mod):
    """Schoolbook product of coefficient tuples reduced by a monic modulus."""
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = (out[i + j] + x * y) % p
    r = len(mod) - 1
    for d in range(len(out) - 1, r - 1, -1):
        c = out[d]
        if c:
            for t in range(r + 1):
                out[d - r + t] = (out[d - r + t] - c * mod[t]) % p
    return tuple((out + [0] * r)[:r])


def test_prime_power():
    assert prime_power(9) == (3, 2)
    assert prime_power(256) == (2, 8)
    with pytest.raises(ValueError):
        prime_power(12)


@pytest.mark.parametrize("q", SMALL_Q)
def test_spec_invariants(q):
    spec = default_spec(q)
    spec.validate()
    gf = field(q)
    powers = gf.power_of_gamma(np.arange(q - 1))
    assert sorted(powers.tolist()) == list(range(1, q))
    assert multiplicative_order(spec.gamma, spec) == q - 1


def test_modulus_is_smallest_irreducible():
    # F_4: x^2+x+1, F_8: x^3+x+1, F_9: x^2+1
    assert default_spec(4).modulus == (1, 1, 1)
    assert default_spec(8).modulus == (1, 1, 0, 1)
    assert default_spec(9).modulus == (1, 0, 1)
    assert not is_irreducible((1, 0, 1), 2)


def test_spec_round_trip():
    spec = default_spec(27)
    assert FieldSpec.from_dict(spec.to_dict()) == spec


@pytest.mark.parametrize("q", [4, 8, 9, 16, 25, 27])
def test_mul_matches_schoolbook(q):
    gf = field(q)
    a, b = np.meshgrid(np.arange(q), np.arange(q), indexing="ij")
    got = gf.mul(a, b)
    mod = gf.spec.modulus
    for x, y in itertools.product(range(q), repeat=2):
        ref = _poly_mul_ref(gf.to_coeffs(x), gf.to_coeffs(y), gf.p, mod)
        assert gf.to_coeffs(got[x, y]) == ref


@pytest.mark.parametrize("q", SMALL_Q)
def test_field_axioms(q):
    gf = field(q)
    x = np.arange(1, q)
    assert (gf.mul(x, gf.inv(x)) == 1).all()
    assert (gf.add(x, gf.neg(x)) == 0).all()
    a = np.arange(q)
    assert (gf.sub(gf.add(a[:, None], a[None, :]), a[None, :]) == a[:, None]).all()


def test_trace_examples():
    f4 = field(4)
    assert f4.trace(0) == 0
    assert f4.trace(f4.spec.gamma) == 1
    assert field(9).trace(1) == 2


@pytest.mark.parametrize("q", [q for q in SMALL_Q if q <= 64])
def test_trace_in_prime_field_and_frobenius(q):
    gf = field(q)
    t = gf.trace(np.arange(q))
    assert ((0 <= t) & (t < gf.p)).all()
    assert (gf.pow(t, gf.p) == t).all()
    # Tr is the sum of conjugates
    a = np.arange(q)
    s = np.zeros(q, dtype=np.int64)
    for i in range(gf.r):
        s = gf.add(s, gf.pow(a, gf.p ** i))
    assert (s == t).all()


@pytest.mark.parametrize("q", [q for q in SMALL_Q if q <= 16])
def test_trace_additive_exhaustive(q):
    gf = field(q)
    a, b = np.meshgrid(np.arange(q), np.arange(q), indexing="ij")
    assert (gf.trace(gf.add(a, b)) == (gf.trace(a) + gf.trace(b)) % gf.p).all()


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([64, 81, 121, 125, 243, 256, 1024]), st.data())
def test_trace_additive_random(q, data):
    gf = field(q)
    x = data.draw(st.integers(0, q - 1))
    y = data.draw(st.integers(0, q - 1))
    c = data.draw(st.integers(0, gf.p - 1))
    assert gf.trace(gf.add(x, y)) == (gf.trace(x) + gf.trace(y)) % gf.p
    assert gf.trace(gf.scale_int(c, x)) == (c * gf.trace(x)) % gf.p


def test_dot_examples(rng):
    f5 = field(5)
    assert f5.dot([1, 2], [3, 4]) == 1
    y = rng.integers(0, 5, size=6)
    assert f5.dot(np.zeros(6, dtype=int), y) == 0
    x = rng.integers(0, 5, size=6)
    assert f5.dot(x, y) == f5.dot(y, x)
    with pytest.raises(ValueError):
        f5.dot([1, 2], [1, 2, 3])


def test_phase_examples():
    f2 = field(2)
    assert f2.phase([1], [1]) == -1
    f9 = field(9)
    z = np.array([3, 7])
    assert f9.phase([0, 0], z) == 1
    assert abs(abs(f9.phase([1, 2], z)) - 1) < 1e-12


@pytest.mark.parametrize("q,n", [(2, 8), (3, 5), (4, 4), (5, 3), (8, 3), (9, 3), (16, 2), (16, 3), (27, 2)])
def test_character_orthogonality(q, n):
    gf = field(q)
    space = VectorSpace(gf, n)
    ys = space.all_vectors()
    for xi in range(1, space.size):
        x = space.to_vec(xi)
        total = gf.phase(np.broadcast_to(x, ys.shape), ys).sum()
        assert abs(total) < 1e-9 * space.size


def test_hamming_weight():
    assert hamming_weight(np.zeros(6, dtype=int)) == 0
    assert hamming_weight([1, 2, 3, 4]) == 4
    assert hamming_weight([0, 0, 1, 0], chunk=2) == 1
    with pytest.raises(ValueError):
        hamming_weight([1, 2, 3], chunk=2)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([(3, 2, 3), (4, 3, 2), (5, 1, 4), (8, 7, 1)]), st.data())
def test_fold_round_trip_and_index(params, data):
    q, m, n = params
    gf = field(q)
    vec = np.array(data.draw(st.lists(st.integers(0, q - 1), min_size=m * n, max_size=m * n)))
    assert (unfold(fold(vec, m)) == vec).all()
    space = VectorSpace(gf, m * n)
    assert (space.to_vec(space.to_index(vec)) == vec).all()
