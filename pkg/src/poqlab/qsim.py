"""Dense amplitude simulation over Sigma^n with one or two registers.

Register amplitudes are indexed by the big-endian symbol index, which is
also the big-endian F_q^(nm) index, so each register factors into nm axes
of size q (and each F_q axis into r axes of size p for the additive group).
"""
from __future__ import annotations

import functools
import math
import struct
from dataclasses import dataclass, field as dc_field

import numpy as np

from .codes import FoldedCode, codewords, dual_code
from .gf_core import GF, FieldSpec, VectorSpace, _field_cache

AMPLITUDE_CAP = 1 << 24
_MAGIC = b"QSV1"


class CapExceeded(MemoryError):
    pass


@dataclass(eq=False)
class StateVector:
    amps: np.ndarray
    spec: FieldSpec
    m: int
    n: int
    regs: int = 1
    _norm: float | None = dc_field(default=None, repr=False)

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=np.complex128).reshape(-1)
        if self.regs not in (1, 2):
            raise ValueError("regs must be 1 or 2")
        if self.amps.size != self.dim ** self.regs:
            raise ValueError(f"{self.amps.size} amplitudes do not fit {self.regs} register(s) of {self.dim}")

    @property
    def q(self) -> int:
        return self.spec.q

    @property
    def gf(self) -> GF:
        return _field_cache(self.spec)

    @property
    def sigma(self) -> int:
        return self.q ** self.m

    @property
    def dim(self) -> int:
        """Size of one register, |Sigma|^n."""
        return self.sigma ** self.n

    @property
    def space(self) -> VectorSpace:
        return _space(self.spec, self.n * self.m)

    @property
    def norm(self) -> float:
        if self._norm is None:
            self._norm = float(np.linalg.norm(self.amps))
        return self._norm

    def matrix(self) -> np.ndarray:
        """Two-register amplitudes as (register 1, register 2)."""
        return self.amps.reshape(self.dim, self.dim)

    def like(self, amps, regs: int | None = None) -> "StateVector":
        return StateVector(amps, self.spec, self.m, self.n, self.regs if regs is None else regs)


@functools.lru_cache(maxsize=None)
def _space(spec: FieldSpec, length: int) -> VectorSpace:
    return VectorSpace(_field_cache(spec), length)


def _check_cap(size: int, cap: int | None) -> None:
    cap = AMPLITUDE_CAP if cap is None else cap
    if size > cap:
        raise CapExceeded(f"{size} amplitudes exceed cap {cap}")


def symbols_of(idx: int, sigma: int, n: int) -> np.ndarray:
    """Register index to its n symbol indices."""
    pw = sigma ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (np.int64(idx) // pw) % sigma


def index_of(symbols, sigma: int) -> int:
    out = 0
    for s in np.asarray(symbols, dtype=np.int64):
        out = out * sigma + int(s)
    return out


# -- construction -------------------------------------------------------------------

def basis_state(folded: FoldedCode, idx: int, regs: int = 1) -> StateVector:
    dim = folded.sigma ** folded.n
    amps = np.zeros(dim ** regs, dtype=np.complex128)
    amps[idx] = 1
    return StateVector(amps, folded.inner.spec, folded.m, folded.n, regs)


def code_superposition(folded: FoldedCode, cap: int | None = None) -> StateVector:
    """Uniform superposition over the codewords of C."""
    dim = folded.sigma ** folded.n
    _check_cap(dim, cap)
    words = codewords(folded.inner)
    amps = np.zeros(dim, dtype=np.complex128)
    amps[folded.space.to_index(words)] = 1 / math.sqrt(len(words))
    return StateVector(amps, folded.inner.spec, folded.m, folded.n)


def uniform_over(mask, spec: FieldSpec, m: int, n: int) -> StateVector:
    mask = np.asarray(mask, dtype=bool)
    amps = mask / math.sqrt(mask.sum())
    return StateVector(amps.astype(np.complex128), spec, m, n)


def postselection_success(fraction: float, lam: int) -> float:
    """Exact probability that one of lam trials lands in T_i."""
    return 1 - (1 - fraction) ** lam


def postselected_state(values, y_i: int, lam: int, rng: np.random.Generator,
                       spec: FieldSpec, m: int) -> tuple[StateVector | None, int]:
    """Prepare the uniform state over T = {x : H_i(x) = y_i} by measuring H_i.

    Each trial measures the bit register of sum_x |x>|H_i(x)>, landing on
    y_i with probability |T|/|Sigma|.  Returns (state, trials used) or
    (None, lam) after lam failures.
    """
    if hasattr(values, "values"):
        values = values.values()
    values = np.asarray(values)
    hit = values == y_i
    frac = hit.mean()
    for trial in range(1, lam + 1):
        if rng.random() < frac:
            return uniform_over(hit, spec, m, 1), trial
    return None, lam


def product_state(states) -> StateVector:
    """Tensor product of single-symbol states, first factor most significant."""
    amps = functools.reduce(np.kron, [s.amps for s in states])
    s0 = states[0]
    return StateVector(amps, s0.spec, s0.m, len(states))


def two_register(a: StateVector, b: StateVector, cap: int | None = None) -> StateVector:
    _check_cap(a.dim * b.dim, cap)
    return StateVector(np.outer(a.amps, b.amps).reshape(-1), a.spec, a.m, a.n, 2)


# -- Fourier transform ----------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def fourier_matrix(spec: FieldSpec, inverse: bool = False) -> np.ndarray:
    """q x q matrix omega_p^Tr(xz) / sqrt(q)."""
    gf = _field_cache(spec)
    x = np.arange(gf.q)
    F = gf.roots[gf.trace(gf.mul(x[:, None], x[None, :]))] / math.sqrt(gf.q)
    F = F.conj() if inverse else F
    F.setflags(write=False)
    return F


def fourier(f, spec: FieldSpec, length: int, inverse: bool = False, lead: int = 0) -> np.ndarray:
    """Transform over F_q^length applied to the F_q axes lead .. lead+length-1.

    f has shape (..., size) where size is a power of q; leading axes are a batch.
    """
    q = spec.q
    F = fourier_matrix(spec, inverse)
    a = np.asarray(f, dtype=np.complex128)
    shape = a.shape
    size = shape[-1]
    for ax in range(length):
        post = size // q ** (lead + ax + 1)
        a = F @ a.reshape(-1, q, post)
    return a.reshape(shape)


def _zp_dft(a: np.ndarray, p: int, axes: int, inverse: bool = False) -> np.ndarray:
    """Unnormalised DFT of Z_p on each of the trailing `axes` base-p digit axes."""
    k = np.arange(p)
    W = np.exp((2j if inverse else -2j) * np.pi * np.outer(k, k) / p)
    shape = a.shape
    size = shape[-1]
    for ax in range(axes):
        post = size // p ** (ax + 1)
        a = W @ a.reshape(-1, p, post)
    return a.reshape(shape)


def group_convolution(f, g, spec: FieldSpec, length: int) -> np.ndarray:
    """(f * g)(x) = sum_y f(y) g(x - y) over F_q^length.

    Field addition is digit-wise mod p on the index, so this is a cyclic
    convolution over Z_p^(r length), computed with the Z_p DFT.
    """
    f = np.asarray(f, dtype=np.complex128)
    g = np.asarray(g, dtype=np.complex128)
    axes = spec.r * length
    F = _zp_dft(f, spec.p, axes)
    G = _zp_dft(g, spec.p, axes)
    return _zp_dft(F * G, spec.p, axes, inverse=True) / f.shape[-1]


def qft(state: StateVector, register: int = 1, inverse: bool = False) -> StateVector:
    """Symbol-wise transform |x> -> |Sigma|^(-n/2) sum_z omega^Tr(x.z) |z> on one register."""
    if not 1 <= register <= state.regs:
        raise ValueError(f"register {register} out of range")
    L = state.n * state.m
    out = fourier(state.amps, state.spec, L, inverse, lead=(register - 1) * L)
    return state.like(out)


# -- unitaries ------------------------------------------------------------------------

def _row_blocks(dim: int, width: int, budget: int = 1 << 22):
    step = max(1, budget // max(1, dim * width))
    for start in range(0, dim, step):
        yield np.arange(start, min(dim, start + step))


def apply_u_add(state: StateVector, inverse: bool = False) -> StateVector:
    """|x>|e> -> |x>|x+e> (inverse: |x>|z> -> |x>|z-x>)."""
    if state.regs != 2:
        raise ValueError("U_add acts on two registers")
    space, gf, dim = state.space, state.gf, state.dim
    digits = space.all_vectors()
    old = state.matrix()
    new = np.empty_like(old)
    op = gf.add if inverse else gf.sub
    for rows in _row_blocks(dim, space.length):
        # new[x, z] = old[x, z - x]
        src = space.to_index(op(digits[None, :, :], digits[rows, None, :]))
        new[rows] = np.take_along_axis(old[rows], src, axis=1)
    return state.like(new.reshape(-1))


def total_decoder(table) -> np.ndarray:
    """Decode table with no-unique-answer entries sent to the zero word."""
    table = np.asarray(table, dtype=np.int64)
    return np.where(table < 0, 0, table)


def apply_u_decode(state: StateVector, table, inverse: bool = False) -> StateVector:
    """|a>|b> -> |a - F(b)>|b> for the total decoder F given as a word-index table."""
    if state.regs != 2:
        raise ValueError("U_decode acts on two registers")
    F = total_decoder(table)
    space, dim = state.space, state.dim
    old = state.matrix()
    new = np.empty_like(old)
    rows = np.arange(dim)
    for c in np.unique(F):
        cols = np.flatnonzero(F == c)
        # new[a, b] = old[a + F(b), b]
        src = space.sub_index(rows, c) if inverse else space.add_index(rows, c)
        new[:, cols] = old[np.ix_(src, cols)]
    return state.like(new.reshape(-1))


# -- measurement ----------------------------------------------------------------------

def marginal(state: StateVector, register: int = 1) -> np.ndarray:
    p = np.abs(state.amps) ** 2
    if state.regs == 1:
        return p
    p = p.reshape(state.dim, state.dim)
    return p.sum(axis=1 if register == 1 else 0)


def measure(state: StateVector, register: int, rng: np.random.Generator) -> tuple[np.ndarray, StateVector]:
    """Sample a register in the computational basis; returns (symbols, collapsed state)."""
    if not 1 <= register <= state.regs:
        raise ValueError(f"register {register} out of range")
    p = marginal(state, register)
    total = p.sum()
    if total <= 0:
        raise ValueError("cannot measure a zero-norm state")
    outcome = int(rng.choice(p.size, p=p / total))
    if state.regs == 1:
        amps = np.zeros_like(state.amps)
        amps[outcome] = state.amps[outcome] / abs(state.amps[outcome])
    else:
        mat = np.zeros((state.dim, state.dim), dtype=np.complex128)
        src = state.matrix()
        if register == 1:
            mat[outcome] = src[outcome] / math.sqrt(p[outcome])
        else:
            mat[:, outcome] = src[:, outcome] / math.sqrt(p[outcome])
        amps = mat.reshape(-1)
    return symbols_of(outcome, state.sigma, state.n), state.like(amps)


# -- technical-lemma error terms ------------------------------------------------------

@dataclass(frozen=True)
class BadSetReport:
    eps: float
    delta: float

    @property
    def residual_bound(self) -> float:
        return math.sqrt(self.eps) + math.sqrt(self.delta)


def product_spectrum(factors) -> np.ndarray:
    """W-hat(e) = prod_i W_i-hat(e_i) as a flat array over Sigma^n."""
    return functools.reduce(np.kron, [np.asarray(f, dtype=np.complex128) for f in factors])


def dual_mask(folded: FoldedCode) -> np.ndarray:
    space = folded.space
    mask = np.zeros(space.size, dtype=bool)
    if folded.k == folded.N - 1:
        mask[0] = True
    else:
        mask[space.to_index(codewords(dual_code(folded.inner)))] = True
    return mask


def good_errors(folded: FoldedCode, table) -> np.ndarray:
    """G = {e : Decode(x + e) = x for every dual codeword x}."""
    space = folded.space
    table = np.asarray(table, dtype=np.int64)
    duals = np.flatnonzero(dual_mask(folded))
    e = np.arange(space.size)
    good = np.ones(space.size, dtype=bool)
    for x in duals:
        good &= table[space.add_index(e, x)] == x
    return good


def bad_set_report(v_hat, w_factors, dual: np.ndarray, good: np.ndarray, space: VectorSpace,
                   cap: int = 1 << 16) -> BadSetReport:
    """eps and delta over BAD = complement of (C-perp x G), summed exactly.

    eps   = sum_{(x,e) in BAD} |V(x) W(e)|^2
    delta = sum_z |sum_{(x,e) in BAD, x+e=z} V(x) W(e)|^2
    """
    if space.size > cap:
        raise CapExceeded(f"|Sigma|^n = {space.size} exceeds enumeration cap {cap}")
    v = np.asarray(v_hat, dtype=np.complex128)
    w = product_spectrum(w_factors)
    dual = np.asarray(dual, dtype=bool)
    good = np.asarray(good, dtype=bool)
    pv, pw = np.abs(v) ** 2, np.abs(w) ** 2
    eps = pv[~dual].sum() * pw.sum() + pv[dual].sum() * pw[~good].sum()
    w_bad = np.where(good, 0, w)
    digits = space.all_vectors()
    conv = np.zeros(space.size, dtype=np.complex128)
    for x in np.flatnonzero(v):
        shifted = space.to_index(space.gf.sub(digits, digits[x]))
        conv += v[x] * (w_bad if dual[x] else w)[shifted]
    delta = float((np.abs(conv) ** 2).sum())
    return BadSetReport(float(eps), delta)


def lemma_target(v: StateVector, w: StateVector) -> StateVector:
    """|0> (x) |Sigma|^(n/2) sum_z (V.W)(z) |z>."""
    mat = np.zeros((v.dim, v.dim), dtype=np.complex128)
    mat[0] = math.sqrt(v.dim) * v.amps * w.amps
    return StateVector(mat.reshape(-1), v.spec, v.m, v.n, 2)


def state_distance(a: StateVector, b: StateVector) -> float:
    if a.amps.shape != b.amps.shape:
        raise ValueError("states have different dimensions")
    return float(np.linalg.norm(a.amps - b.amps))


# -- dump format ----------------------------------------------------------------------

def dump_state(state: StateVector, path) -> None:
    """16-byte header {"QSV1", |Sigma|, n, regs} then little-endian (re, im) doubles."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIII", _MAGIC, state.sigma, state.n, state.regs))
        fh.write(state.amps.astype("<c16").tobytes())


def load_state(path, spec: FieldSpec, m: int) -> StateVector:
    with open(path, "rb") as fh:
        magic, sigma, n, regs = struct.unpack("<4sIII", fh.read(16))
        if magic != _MAGIC:
            raise ValueError("not a QSV1 state file")
        if sigma != spec.q ** m:
            raise ValueError(f"file alphabet {sigma} does not match q^m = {spec.q ** m}")
        amps = np.frombuffer(fh.read(), dtype="<c16")
    return StateVector(amps.astype(np.complex128), spec, m, n, regs)


# -- Fourier identity self-test -------------------------------------------------------

def fourier_grid(limit: int = 1 << 12, max_q: int = 16) -> list[tuple[int, int, int]]:
    """All (q, m, n) with q a prime power <= max_q and q^(mn) <= limit."""
    from .gf_core import prime_power
    out = []
    for q in range(2, max_q + 1):
        try:
            prime_power(q)
        except ValueError:
            continue
        for m in range(1, 64):
            if q ** m > limit:
                break
            for n in range(1, 64):
                if q ** (m * n) > limit:
                    break
                out.append((q, m, n))
    return out


def _random_functions(rng, count: int, size: int) -> np.ndarray:
    return rng.normal(size=(count, size)) + 1j * rng.normal(size=(count, size))


def _random_linear_code(gf: GF, length: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Masks over F_q^length of a random subspace and of its dual (via nullspace)."""
    space = _space(gf.spec, length)
    k = int(rng.integers(0, length + 1))
    gen = rng.integers(0, gf.q, size=(k, length))
    words = space.all_vectors()
    # rows of par span the dual; C is their common kernel
    par = gf.nullspace(gen) if k else np.eye(length, dtype=np.int64)
    mask = np.ones(space.size, dtype=bool)
    for row in par:
        mask &= gf.dot(words, row) == 0
    dual = np.ones(space.size, dtype=bool)
    for row in (gen if k else np.zeros((0, length), dtype=np.int64)):
        dual &= gf.dot(words, row) == 0
    return mask, dual


def fourier_selftest(q: int, m: int, n: int, rng: np.random.Generator, samples: int = 100) -> dict:
    """Largest deviation seen for each Fourier identity over random inputs."""
    from .gf_core import default_spec
    spec = default_spec(q)
    gf = _field_cache(spec)
    L = m * n
    D = q ** L
    sigma = q ** m
    scale = math.sqrt(D)
    qf = lambda a: fourier(a, spec, L)
    f, g, h = (_random_functions(rng, samples, D) for _ in range(3))
    f /= np.linalg.norm(f, axis=1, keepdims=True)
    fh, gh, hh = qf(f), qf(g), qf(h)
    conv = lambda a, b: group_convolution(a, b, spec, L)
    err = {}
    err["parseval"] = float(np.abs(np.linalg.norm(fh, axis=1) - 1).max())
    err["inverse"] = float(np.abs(fourier(fh, spec, L, inverse=True) - f).max())
    factors = [_random_functions(rng, samples, sigma) for _ in range(n)]
    prod = functools.reduce(lambda a, b: (a[:, :, None] * b[:, None, :]).reshape(samples, -1), factors)
    fprod = functools.reduce(lambda a, b: (a[:, :, None] * b[:, None, :]).reshape(samples, -1),
                             [fourier(x, spec, m) for x in factors])
    err["product"] = float(np.abs(qf(prod) - fprod).max() / max(1.0, np.abs(fprod).max()))
    lhs = qf(f * g)
    err["conv_product"] = float(np.abs(lhs - conv(fh, gh) / scale).max())
    lhs = qf(conv(f, g))
    err["conv_sum"] = float(np.abs(lhs - scale * fh * gh).max() / max(1.0, np.abs(lhs).max()))
    lhs = qf(f * conv(g, h))
    err["conv_mixed"] = float(np.abs(lhs - conv(fh, gh * hh)).max() / max(1.0, np.abs(lhs).max()))
    words = _space(spec, L).all_vectors()
    worst = 0.0
    for x in rng.integers(1, D, size=min(samples, D - 1)):
        s = gf.roots[gf.trace(gf.dot(words, words[x]))].sum()
        worst = max(worst, abs(s))
    err["orthogonality"] = float(worst / D)
    worst = 0.0
    for _ in range(max(1, samples // 10)):
        mask, dual = _random_linear_code(gf, L, rng)
        psi = mask / math.sqrt(mask.sum())
        want = dual / math.sqrt(dual.sum())
        worst = max(worst, float(np.abs(qf(psi) - want).max()))
    err["dual_code"] = worst
    return err
