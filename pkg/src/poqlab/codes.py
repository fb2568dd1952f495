"""Reed-Solomon, generalized RS and folded RS codes with their decoders.

Codewords are numpy int arrays of field elements (integer encoding from
gf_core), length N = q - 1 in the unfolded view.  The folded view groups m
consecutive coordinates into one symbol of Sigma = F_q^m.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .gf_core import GF, FieldSpec, VectorSpace, default_spec, fold, hamming_weight, _field_cache
from . import gs

ENUM_CAP = 1 << 20


class RegimeWarning(UserWarning):
    """Parameters outside the asymptotic regime the construction is analysed in."""


class EnumerationCapError(ValueError):
    pass


@dataclass(frozen=True)
class RSCode:
    """Evaluations of polynomials of degree <= k at gamma, gamma^2, ..., gamma^N."""

    spec: FieldSpec
    k: int

    def __post_init__(self):
        if not 0 <= self.k < self.N:
            raise ValueError(f"degree parameter k={self.k} outside [0, {self.N})")

    @property
    def gf(self) -> GF:
        return _field_cache(self.spec)

    @property
    def N(self) -> int:
        return self.spec.q - 1

    @property
    def rank(self) -> int:
        return self.k + 1

    @property
    def multipliers(self) -> np.ndarray:
        return np.ones(self.N, dtype=np.int64)

    @property
    def points(self) -> np.ndarray:
        return self.gf.power_of_gamma(np.arange(1, self.N + 1))

    @property
    def size(self) -> int:
        return self.spec.q ** self.rank


@dataclass(frozen=True)
class GRSCode(RSCode):
    """RS code with column i scaled by the nonzero multiplier v_i."""

    v: tuple[int, ...] = ()

    def __post_init__(self):
        super().__post_init__()
        if len(self.v) != self.N or any(x == 0 for x in self.v):
            raise ValueError("multipliers must be N nonzero field elements")

    @property
    def multipliers(self) -> np.ndarray:
        return np.array(self.v, dtype=np.int64)


def rs_code(q: int, k: int) -> RSCode:
    return RSCode(default_spec(q), k)


def rs_encode(msg, code: RSCode) -> np.ndarray:
    """Codeword (v_1 f(gamma), ..., v_N f(gamma^N)) of f = sum msg[i] X^i."""
    msg = np.asarray(msg, dtype=np.int64)
    if msg.shape[-1] != code.rank:
        raise ValueError(f"message length {msg.shape[-1]} != k+1 = {code.rank}")
    return code.gf.vecmat(msg, generator_matrix(code))


@functools.lru_cache(maxsize=256)
def _generator(code: RSCode) -> np.ndarray:
    gf = code.gf
    exps = np.outer(np.arange(code.rank), np.arange(1, code.N + 1))
    g = gf.mul(gf.power_of_gamma(exps), code.multipliers[None, :])
    g.setflags(write=False)
    return g


def generator_matrix(code: RSCode) -> np.ndarray:
    """Rows f = X^i evaluated (and scaled) at the code's points."""
    return _generator(code)


@functools.lru_cache(maxsize=256)
def dual_code(code: RSCode) -> GRSCode:
    """The dual of a (G)RS code with degree parameter k is GRS with N - k - 2.

    The multipliers v are obtained by solving sum_j v_j gamma^(j t) u_j = 0 for
    t = 0..N-2 (u are the code's own multipliers), and the result is checked
    against an independently computed basis of the orthogonal complement.
    """
    N, k, gf = code.N, code.k, code.gf
    if k > N - 2:
        raise ValueError("the full code (k = N-1) has a trivial dual")
    d = N - k - 2
    gen = generator_matrix(code)
    basis = gf.nullspace(gen)  # orthogonality system for the dual basis
    moments = gf.mul(gf.power_of_gamma(np.outer(np.arange(N - 1), np.arange(1, N + 1))),
                     code.multipliers[None, :])
    sol = gf.nullspace(moments)
    if sol.shape[0] != 1:
        raise AssertionError("multiplier system is not one-dimensional")
    v = sol[0]
    if (v == 0).any():
        raise AssertionError("dual multipliers must be nonzero")
    v = gf.mul(v, gf.inv(v[0]))
    dual = GRSCode(code.spec, d, tuple(int(x) for x in v))
    dgen = generator_matrix(dual)
    if gf.matmul(gen, dgen.T).any():
        raise AssertionError("dual generator is not orthogonal to the code")
    if gf.rank(np.vstack([basis, dgen])) != N - k - 1 or basis.shape[0] != N - k - 1:
        raise AssertionError("dual code does not span the orthogonal complement")
    return dual


@functools.lru_cache(maxsize=256)
def parity_check_matrix(code: RSCode) -> np.ndarray:
    if code.k == code.N - 1:
        return np.zeros((0, code.N), dtype=np.int64)
    return generator_matrix(dual_code(code))


def contains(code: RSCode, word) -> np.ndarray | bool:
    """Membership of one word or of each row of a 2-d array."""
    word = np.asarray(word, dtype=np.int64)
    if word.shape[-1] != code.N:
        return False
    h = parity_check_matrix(code)
    if h.shape[0] == 0:
        return np.ones(word.shape[:-1], dtype=bool) if word.ndim > 1 else True
    syn = code.gf.vecmat(word, h.T)
    ok = ~syn.any(axis=-1)
    return ok if word.ndim > 1 else bool(ok)


@functools.lru_cache(maxsize=32)
def _enumerate(code: RSCode) -> np.ndarray:
    gf = code.gf
    words = np.zeros((1, code.N), dtype=np.int64)
    elems = np.arange(gf.q, dtype=np.int64)
    for row in generator_matrix(code):
        shift = gf.mul(elems[:, None], row[None, :])
        words = gf.add(words[:, None, :], shift[None, :, :]).reshape(-1, code.N)
    words = words[np.lexsort(words.T[::-1])]
    words.setflags(write=False)
    return words


def codewords(code: RSCode, cap: int = ENUM_CAP) -> np.ndarray:
    """All codewords, lexicographically sorted."""
    if code.size > cap:
        raise EnumerationCapError(f"|C| = {code.size} exceeds enumeration cap {cap}")
    return _enumerate(code)


def _sorted_rows(words: np.ndarray) -> np.ndarray:
    if len(words) == 0:
        return words
    words = np.unique(words, axis=0)
    return words[np.lexsort(words.T[::-1])]


def brute_force_list_decode(z, code: RSCode, radius: int, cap: int = ENUM_CAP) -> np.ndarray:
    """Every codeword within Hamming distance `radius` of z, by enumeration."""
    z = np.asarray(z, dtype=np.int64)
    words = codewords(code, cap)
    dist = (words != z[None, :]).sum(axis=1)
    return words[dist <= radius]


def gs_list_decode(z, code: RSCode, radius: int, s: int | None = None) -> np.ndarray:
    """Guruswami-Sudan list decoding: all codewords within `radius` of z.

    Refuses radius >= N - sqrt(dN).  Rows are sorted lexicographically.
    """
    z = np.asarray(z, dtype=np.int64)
    if z.shape != (code.N,):
        raise ValueError(f"word length {z.shape} != ({code.N},)")
    if not gs.within_bound(code.N, code.k, radius):
        raise ValueError(f"radius {radius} is not below N - sqrt(dN) = "
                         f"{code.N - math.sqrt(code.k * code.N):.3f}")
    if code.k == 0:
        # constant messages: q candidates, nothing to interpolate
        return brute_force_list_decode(z, code, radius)
    gf = code.gf
    ys = gf.div(z, code.multipliers)
    polys = gs.gs_candidates(gf, code.points, ys, code.k, radius, s)
    if len(polys) == 0:
        return np.zeros((0, code.N), dtype=np.int64)
    words = gf.vecmat(polys, generator_matrix(code))
    dist = (words != z[None, :]).sum(axis=1)
    return _sorted_rows(words[dist <= radius])


# -- folded codes -------------------------------------------------------------

def default_epsilon(alpha: float) -> float:
    return -0.25 + 0.3 * alpha


@dataclass(frozen=True)
class FoldedCode:
    """An (inner) RS/GRS code over F_q read as n = N/m symbols of Sigma = F_q^m.

    zeta, ell and L are the list-recovery analysis parameters; they are
    recorded for reports and never enforced.
    """

    inner: RSCode
    m: int
    alpha: float
    epsilon: float
    zeta: float = 0.1
    ell: int = 0
    L: int = 0

    def __post_init__(self):
        if self.m < 1 or self.inner.N % self.m:
            raise ValueError(f"m={self.m} does not divide N={self.inner.N}")

    @property
    def gf(self) -> GF:
        return self.inner.gf

    @property
    def q(self) -> int:
        return self.inner.spec.q

    @property
    def N(self) -> int:
        return self.inner.N

    @property
    def k(self) -> int:
        return self.inner.k

    @property
    def n(self) -> int:
        return self.inner.N // self.m

    @property
    def sigma(self) -> int:
        return self.q ** self.m

    @property
    def size(self) -> int:
        return self.inner.size

    @property
    def space(self) -> VectorSpace:
        return _space(self.inner.spec, self.N)

    @property
    def dual(self) -> "FoldedCode":
        if self.k == self.N - 1:
            raise ValueError("the full code has a trivial dual")
        return FoldedCode(dual_code(self.inner), self.m, self.alpha, self.epsilon)

    @property
    def decode_radius(self) -> int:
        return math.floor((0.5 + self.epsilon) * self.N + 1e-12)

    def describe(self) -> dict:
        return {"q": self.q, "m": self.m, "n": self.n, "k": self.k,
                "alpha": self.alpha, "epsilon": self.epsilon}


@functools.lru_cache(maxsize=None)
def _space(spec: FieldSpec, length: int) -> VectorSpace:
    return VectorSpace(_field_cache(spec), length)


def folded_rs(q: int, m: int, k: int | None = None, alpha: float | None = None,
              epsilon: float | None = None, zeta: float = 0.1, warn: bool = True) -> FoldedCode:
    """Folded RS code; give either k or alpha (k = floor(alpha N))."""
    N = q - 1
    if (k is None) == (alpha is None):
        raise ValueError("give exactly one of k and alpha")
    if k is None:
        k = math.floor(alpha * N)
    else:
        alpha = k / N
    if epsilon is None:
        epsilon = default_epsilon(alpha)
    code = FoldedCode(rs_code(q, k), m, float(alpha), float(epsilon), zeta)
    if warn and (alpha <= 5 / 6 or 2 * code.n >= code.sigma):
        warnings.warn(f"q={q}, m={m}, k={k}: alpha={alpha:.3f}, 2n={2 * code.n}, |Sigma|={code.sigma} "
                      "outside the asymptotic regime", RegimeWarning, stacklevel=2)
    return code


def folded_contains(folded: FoldedCode, symbols) -> bool:
    """Membership of a word given as n symbol indices."""
    symbols = np.asarray(symbols, dtype=np.int64)
    if symbols.shape[-1] != folded.n or (symbols < 0).any() or (symbols >= folded.sigma).any():
        return False
    return contains(folded.inner, symbols_to_vector(symbols, folded.m, folded.q))


def decode_dual(z, folded: FoldedCode, decoder: str = "auto") -> np.ndarray | None:
    """Decode_{C-perp}: the unique dual codeword within floor((1/2+eps)N) of z, else None.

    `decoder` is "gs", "brute" or "auto" (GS when the radius is below the
    Johnson bound, brute force otherwise).
    """
    z = np.asarray(z, dtype=np.int64).reshape(-1)
    dual = dual_code(folded.inner) if folded.k < folded.N - 1 else None
    radius = folded.decode_radius
    if dual is None:
        return np.zeros(folded.N, dtype=np.int64)
    if radius < 0:
        return None
    if decoder == "auto":
        decoder = "gs" if gs.within_bound(dual.N, dual.k, radius) and \
            gs.gs_parameters(dual.N, dual.k, radius) is not None else "brute"
    if decoder == "gs":
        found = gs_list_decode(z, dual, radius)
    elif decoder == "brute":
        found = brute_force_list_decode(z, dual, radius)
    else:
        raise ValueError(f"unknown decoder {decoder!r}")
    if len(found) != 1:
        return None
    return found[0]


@functools.lru_cache(maxsize=16)
def _decode_table(folded: FoldedCode) -> np.ndarray:
    space = folded.space
    words = space.all_vectors()
    radius = folded.decode_radius
    if folded.k == folded.N - 1:
        return np.zeros(space.size, dtype=np.int64)
    duals = codewords(dual_code(folded.inner))
    dual_idx = space.to_index(duals)
    out = np.full(space.size, -1, dtype=np.int64)
    hits = np.zeros(space.size, dtype=np.int64)
    for cw, ci in zip(duals, dual_idx):
        close = (words != cw[None, :]).sum(axis=1) <= radius
        hits += close
        out[close] = ci
    out[hits != 1] = -1
    out.setflags(write=False)
    return out


def decode_table(folded: FoldedCode, cap: int = 1 << 24) -> np.ndarray:
    """Decode_{C-perp} for every word of F_q^N, as indices (-1 for no unique answer).

    Same rule as decode_dual, evaluated by scanning the dual codewords.
    """
    if folded.space.size > cap:
        raise EnumerationCapError(f"|Sigma|^n = {folded.space.size} exceeds cap {cap}")
    return _decode_table(folded)


# -- error distribution ----------------------------------------------------------

@dataclass(frozen=True)
class ErrorDistribution:
    """n i.i.d. symbols: 0 with probability 1/2, else uniform on Sigma minus 0."""

    sigma: int
    n: int

    def symbol_pmf(self) -> np.ndarray:
        pmf = np.full(self.sigma, 0.5 / (self.sigma - 1))
        pmf[0] = 0.5
        return pmf


def sample_error(dist: ErrorDistribution, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Symbol indices in [0, |Sigma|) with symbol 0 meaning the zero vector."""
    shape = (dist.n,) if size is None else (size, dist.n)
    zero = rng.random(shape) < 0.5
    other = rng.integers(1, dist.sigma, size=shape)
    return np.where(zero, 0, other)


def symbols_to_vector(sym, m: int, q: int) -> np.ndarray:
    """Symbol indices (big-endian base q digits) to the unfolded F_q vector."""
    sym = np.asarray(sym, dtype=np.int64)
    pw = q ** np.arange(m - 1, -1, -1, dtype=np.int64)
    digits = (sym[..., None] // pw) % q
    return digits.reshape(sym.shape[:-1] + (sym.shape[-1] * m,))


def vector_to_symbols(vec, m: int, q: int) -> np.ndarray:
    vec = fold(vec, m)
    pw = q ** np.arange(m - 1, -1, -1, dtype=np.int64)
    return vec @ pw


# -- combinatorial checkers --------------------------------------------------------

def list_recovery_count(sets: Sequence[Sequence[int]], folded: FoldedCode, zeta: float,
                        cap: int = ENUM_CAP) -> int:
    """|{x in C : x_i in S_i for at least (1 - zeta) n positions}| (symbols as indices)."""
    if len(sets) != folded.n:
        raise ValueError("need one candidate set per position")
    words = codewords(folded.inner, cap)
    syms = vector_to_symbols(words, folded.m, folded.q)
    hits = np.zeros(len(words), dtype=np.int64)
    for i, s in enumerate(sets):
        if len(s):
            hits += np.isin(syms[:, i], np.asarray(list(s), dtype=np.int64))
    need = math.ceil((1 - zeta) * folded.n - 1e-12)
    return int((hits >= need).sum())


def weight_enumerator(folded: FoldedCode, cap: int = ENUM_CAP) -> np.ndarray:
    """Counts A[w] of codewords with w nonzero symbols, w = 0..n."""
    words = codewords(folded.inner, cap)
    w = hamming_weight(words, folded.m)
    return np.bincount(w, minlength=folded.n + 1).astype(np.int64)


def weight_distribution(folded: FoldedCode, cap: int = ENUM_CAP) -> list[Fraction]:
    """Exact Pr[hw(x) = n - j] for j = 0..n under a uniform codeword."""
    counts = weight_enumerator(folded, cap)
    total = int(counts.sum())
    n = folded.n
    return [Fraction(int(counts[n - j]), total) for j in range(n + 1)]


# -- text format -------------------------------------------------------------------

_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


def format_symbol(sym: int, m: int, gf: GF) -> str:
    """m coordinates, each as r base-p digits, highest coefficient first."""
    if gf.p > len(_DIGITS):
        raise ValueError("text format supports p <= 36")
    coords = [(sym // gf.q ** (m - 1 - j)) % gf.q for j in range(m)]
    return "".join(_DIGITS[d] for c in coords for d in gf.to_coeffs(c)[::-1])


def parse_symbol(text: str, m: int, gf: GF) -> int:
    text = text.strip()
    if len(text) != m * gf.r:
        raise ValueError(f"symbol {text!r} should have {m * gf.r} digits")
    digits = [_DIGITS.index(ch) for ch in text.lower()]
    if any(d >= gf.p for d in digits):
        raise ValueError(f"digit out of range in {text!r}")
    sym = 0
    for j in range(m):
        chunk = digits[j * gf.r:(j + 1) * gf.r][::-1]
        sym = sym * gf.q + gf.from_coeffs(chunk)
    return sym


def format_codeword(symbols, m: int, gf: GF) -> str:
    return ",".join(format_symbol(int(s), m, gf) for s in symbols)


def parse_codeword(line: str, m: int, gf: GF) -> np.ndarray:
    return np.array([parse_symbol(t, m, gf) for t in line.strip().split(",")], dtype=np.int64)


def write_codewords(path, rows, m: int, gf: GF) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write(format_codeword(row, m, gf) + "\n")


def read_codewords(path, m: int, gf: GF) -> np.ndarray:
    with open(path) as fh:
        return np.array([parse_codeword(ln, m, gf) for ln in fh if ln.strip()], dtype=np.int64)
