import math

import numpy as np
import pytest

from poqlab import protocol, qsim, rom
from poqlab.codes import codewords, decode_dual, decode_table, folded_rs
from poqlab.gf_core import default_spec, field
from poqlab.qsim import (BadSetReport, StateVector, apply_u_add, apply_u_decode, bad_set_report, basis_state,
                         code_superposition, measure, postselected_state, qft, state_distance, two_register)


def _random_state(folded, rng, regs=1):
    D = folded.sigma ** folded.n
    a = rng.normal(size=D ** regs) + 1j * rng.normal(size=D ** regs)
    return StateVector(a / np.linalg.norm(a), folded.inner.spec, folded.m, folded.n, regs)


# -- dense reference operators -------------------------------------------------------

def _dense_qft(folded):
    gf, space = folded.gf, folded.space
    v = space.all_vectors()
    D = space.size
    F = np.empty((D, D), dtype=np.complex128)
    for z in range(D):
        F[z] = gf.phase(v, np.broadcast_to(v[z], v.shape)) / math.sqrt(D)
    return F


def _dense_add(folded):
    space = folded.space
    D = space.size
    U = np.zeros((D * D, D * D))
    for x in range(D):
        for e in range(D):
            U[x * D + space.add_index(x, e), x * D + e] = 1
    return U


def _dense_decode(folded):
    space = folded.space
    D = space.size
    U = np.zeros((D * D, D * D))
    for b in range(D):
        got = decode_dual(space.to_vec(b), folded)
        c = 0 if got is None else int(space.to_index(got))
        for a in range(D):
            U[space.sub_index(a, c) * D + b, a * D + b] = 1
    return U


@pytest.mark.parametrize("q,m,k", [(3, 1, 0), (3, 2, 0)])
def test_pipeline_matches_dense_matrices(q, m, k):
    folded = folded_rs(q, m, k=k, warn=False)
    D = folded.space.size
    assert D == 9
    F = _dense_qft(folded)
    I = np.eye(D)
    rng = np.random.default_rng(q * 10 + m)
    for seed in range(5):
        H = rom.sample_oracle(seed, folded.sigma, folded.n)
        hits = H.table() == 1
        if (hits.sum(axis=0) == 0).any():
            continue
        psi = code_superposition(folded)
        phi = qsim.product_state([qsim.uniform_over(hits[:, i], folded.inner.spec, m, 1) for i in range(folded.n)])
        start = np.kron(psi.amps, phi.amps)
        dense = np.kron(I, F.conj().T) @ _dense_decode(folded) @ _dense_add(folded) @ np.kron(F, F) @ start
        fast = protocol.run_circuit(psi, phi, decode_table(folded))
        assert np.abs(fast.amps - dense).max() < 1e-12
    # random two-register inputs too
    st = _random_state(folded, rng, regs=2)
    dense = np.kron(I, F.conj().T) @ _dense_decode(folded) @ _dense_add(folded) @ np.kron(F, F) @ st.amps
    step = qsim.qft(qsim.qft(st, 1), 2)
    step = apply_u_decode(apply_u_add(step), decode_table(folded))
    assert np.abs(qft(step, 2, inverse=True).amps - dense).max() < 1e-12


@pytest.mark.parametrize("q,m,n", [(2, 1, 5), (4, 1, 3), (5, 2, 1), (8, 1, 2), (9, 1, 2)])
def test_qft_matches_dense(q, m, n, rng):
    folded_like = type("F", (), {})()
    spec = default_spec(q)
    from poqlab.gf_core import VectorSpace
    space = VectorSpace(field(q), m * n)
    folded_like.gf, folded_like.space = field(q), space
    F = _dense_qft(folded_like)
    a = rng.normal(size=space.size) + 1j * rng.normal(size=space.size)
    st = StateVector(a, spec, m, n)
    assert np.abs(qft(st).amps - F @ a).max() < 1e-10
    assert np.abs(qft(qft(st), inverse=True).amps - a).max() < 1e-10
    assert abs(np.linalg.norm(qft(st).amps) - np.linalg.norm(a)) < 1e-9


def test_code_superposition():
    folded = folded_rs(5, 2, k=1, warn=False)
    st = code_superposition(folded)
    assert st.norm == pytest.approx(1.0)
    assert np.count_nonzero(st.amps) == folded.size
    assert st.amps[0] == pytest.approx(1 / math.sqrt(folded.size))


@pytest.mark.parametrize("q,m,k", [(4, 1, 1), (5, 1, 2), (7, 2, 3), (8, 7, 2)])
def test_qft_of_code_is_dual(q, m, k):
    folded = folded_rs(q, m, k=k, warn=False)
    out = qft(code_superposition(folded))
    want = qsim.uniform_over(qsim.dual_mask(folded), folded.inner.spec, m, folded.n)
    assert np.abs(out.amps - want.amps).max() < 1e-12


def test_postselected_state(rng):
    spec = default_spec(4)
    st, trials = postselected_state(np.ones(4, dtype=int), 1, 8, rng, spec, 1)
    assert trials == 1 and np.allclose(st.amps, 0.5)
    st, trials = postselected_state(np.zeros(4, dtype=int), 1, 8, rng, spec, 1)
    assert st is None and trials == 8
    vals = np.array([0, 1, 0, 1])
    runs = 20000
    aborts = sum(postselected_state(vals, 1, 8, rng, spec, 1)[0] is None for _ in range(runs))
    p = 2 ** -8
    assert abs(aborts / runs - p) <= 3 * math.sqrt(p * (1 - p) / runs) + 1 / runs
    assert qsim.postselection_success(0.5, 8) == 1 - 2 ** -8


def test_u_add(rng):
    folded = folded_rs(5, 1, k=1, warn=False)
    space = folded.space
    D = space.size
    for _ in range(20):
        x, e = (int(v) for v in rng.integers(0, D, size=2))
        out = apply_u_add(basis_state(folded, x * D + e, regs=2))
        assert np.flatnonzero(out.amps).tolist() == [x * D + int(space.add_index(x, e))]
    x = 77
    assert np.flatnonzero(apply_u_add(basis_state(folded, x * D, regs=2)).amps).tolist() == [x * D + x]
    st = _random_state(folded, rng, regs=2)
    assert np.allclose(apply_u_add(apply_u_add(st), inverse=True).amps, st.amps)


def test_u_decode(rng):
    folded = folded_rs(5, 1, k=1, warn=False)
    D = folded.space.size
    st = _random_state(folded, rng, regs=2)
    assert np.allclose(apply_u_decode(st, np.zeros(D, dtype=int)).amps, st.amps)
    table = decode_table(folded)
    out = apply_u_decode(st, table)
    assert out.norm == pytest.approx(st.norm, abs=1e-12)
    assert np.allclose(apply_u_decode(out, table, inverse=True).amps, st.amps)
    good = qsim.good_errors(folded, table)
    space = folded.space
    for x in np.flatnonzero(qsim.dual_mask(folded))[:10]:
        for e in np.flatnonzero(good)[:10]:
            z = int(space.add_index(x, e))
            got = apply_u_decode(basis_state(folded, int(x) * D + z, regs=2), table)
            assert np.flatnonzero(got.amps).tolist() == [z]


def test_measure(rng):
    folded = folded_rs(3, 1, k=0, warn=False)
    b = basis_state(folded, 5)
    out, post = measure(b, 1, rng)
    assert out.tolist() == qsim.symbols_of(5, 3, 2).tolist() and post.norm == pytest.approx(1)
    amps = np.zeros(9, dtype=complex)
    amps[[1, 7]] = 1 / math.sqrt(2)
    st = StateVector(amps, folded.inner.spec, 1, 2)
    hits = sum(qsim.index_of(measure(st, 1, rng)[0], 3) == 1 for _ in range(10000))
    assert abs(hits / 10000 - 0.5) <= 0.02
    two = _random_state(folded, rng, regs=2)
    _, post = measure(two, 2, rng)
    assert post.norm == pytest.approx(1.0)


def _bad_set_reference(v, w, dual, good, space):
    """Direct double loop over (x, e)."""
    D = space.size
    eps = 0.0
    conv = np.zeros(D, dtype=complex)
    for x in range(D):
        for e in range(D):
            if dual[x] and good[e]:
                continue
            eps += abs(v[x] * w[e]) ** 2
            conv[space.add_index(x, e)] += v[x] * w[e]
    return eps, float((np.abs(conv) ** 2).sum())


def test_bad_set_report(rng):
    folded = folded_rs(5, 1, k=1, warn=False)
    space = folded.space
    D = space.size
    dual = qsim.dual_mask(folded)
    v = np.where(dual, 1 / math.sqrt(dual.sum()), 0)
    w_factors = [rng.normal(size=5) + 1j * rng.normal(size=5) for _ in range(folded.n)]
    w_factors = [f / np.linalg.norm(f) for f in w_factors]
    r = bad_set_report(v, w_factors, dual, np.ones(D, dtype=bool), space)
    assert r.eps == 0 and r.delta == 0
    r = bad_set_report(v, w_factors, dual, np.zeros(D, dtype=bool), space)
    assert r.eps == pytest.approx(1.0)
    v2 = rng.normal(size=D) + 1j * rng.normal(size=D)
    v2 /= np.linalg.norm(v2)
    good = rng.random(D) < 0.6
    r = bad_set_report(v2, w_factors, dual, good, space)
    eps, delta = _bad_set_reference(v2, qsim.product_spectrum(w_factors), dual, good, space)
    assert r.eps == pytest.approx(eps, abs=1e-12) and r.delta == pytest.approx(delta, abs=1e-12)
    assert BadSetReport(0.04, 0.01).residual_bound == pytest.approx(0.3)


def test_lemma_residual_small_instances():
    for q, m, k in [(4, 1, 1), (5, 1, 1), (5, 1, 2), (3, 2, 0)]:
        params = protocol.ProtocolParams(folded_rs(q, m, k=k, warn=False))
        for seed in range(4):
            H = rom.sample_oracle(seed, params.sigma, params.n)
            if (H.table().sum(axis=0) == 0).any():
                continue
            dist, rep = protocol.lemma_report(params, H)
            assert dist <= rep.residual_bound + 1e-7


def test_state_distance(rng):
    folded = folded_rs(3, 1, k=0, warn=False)
    a, b, c = (_random_state(folded, rng) for _ in range(3))
    assert state_distance(a, a) == 0
    assert state_distance(basis_state(folded, 0), basis_state(folded, 1)) == pytest.approx(math.sqrt(2))
    assert state_distance(a, c) <= state_distance(a, b) + state_distance(b, c) + 1e-15
    with pytest.raises(ValueError):
        state_distance(a, two_register(a, b))


def test_cap():
    folded = folded_rs(5, 1, k=1, warn=False)
    with pytest.raises(qsim.CapExceeded):
        code_superposition(folded, cap=100)


def test_dump_round_trip(tmp_path, rng):
    folded = folded_rs(4, 3, k=1, warn=False)
    st = _random_state(folded, rng, regs=2)
    path = tmp_path / "state.qsv"
    qsim.dump_state(st, path)
    raw = open(path, "rb").read()
    assert raw[:4] == b"QSV1" and len(raw) == 16 + 16 * st.amps.size
    back = qsim.load_state(path, folded.inner.spec, 3)
    assert back.regs == 2 and (back.amps == st.amps).all()


def test_group_convolution_direct(rng):
    spec = default_spec(9)
    from poqlab.gf_core import VectorSpace
    space = VectorSpace(field(9), 2)
    f = rng.normal(size=81) + 1j * rng.normal(size=81)
    g = rng.normal(size=81) + 1j * rng.normal(size=81)
    ref = np.zeros(81, dtype=complex)
    for x in range(81):
        ref[x] = sum(f[y] * g[space.sub_index(x, y)] for y in range(81))
    assert np.abs(qsim.group_convolution(f, g, spec, 2) - ref).max() < 1e-10


@pytest.mark.parametrize("q,m,n", [(2, 3, 2), (3, 1, 4), (4, 2, 2), (7, 1, 2), (16, 1, 2)])
def test_fourier_selftest(q, m, n, rng):
    err = qsim.fourier_selftest(q, m, n, rng, samples=30)
    assert max(err.values()) < 1e-8
