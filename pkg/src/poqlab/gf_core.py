"""Arithmetic in F_q = F_{p^r}, symbol vectors over F_q^m, trace and phase.

Field elements are encoded as integers 0 <= x < q: the polynomial-basis
coefficient vector (c_0, ..., c_{r-1}) maps to sum_i c_i p^i.  Integer order
is therefore the coefficient-lexicographic order (highest coefficient first).
All vectorized operations accept numpy integer arrays.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

TABLE_LIMIT = 1 << 16  # log/antilog tables up to this order
ADD_TABLE_LIMIT = 1 << 10
MAX_ORDER = 1 << 20


def prime_power(q: int) -> tuple[int, int]:
    """Return (p, r) with q = p^r, or raise ValueError."""
    if q < 2:
        raise ValueError(f"{q} is not a prime power")
    p = next(d for d in range(2, q + 1) if q % d == 0)
    r, t = 0, q
    while t % p == 0:
        t //= p
        r += 1
    if t != 1:
        raise ValueError(f"{q} is not a prime power")
    return p, r


def prime_factors(n: int) -> list[int]:
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


# -- polynomials over F_p as coefficient lists, low degree first -----------

def _poly_trim(a: list[int]) -> list[int]:
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_mod(a: Sequence[int], b: Sequence[int], p: int) -> list[int]:
    a = _poly_trim(list(a))
    b = _poly_trim(list(b))
    inv_lead = pow(b[-1], p - 2, p)
    while len(a) >= len(b):
        c = a[-1] * inv_lead % p
        shift = len(a) - len(b)
        for i, bi in enumerate(b):
            a[shift + i] = (a[shift + i] - c * bi) % p
        _poly_trim(a)
    return a


def _monic_polys(deg: int, p: int) -> Iterable[list[int]]:
    for low in range(p ** deg):
        coeffs = [(low // p ** i) % p for i in range(deg)]
        yield coeffs + [1]


def is_irreducible(f: Sequence[int], p: int) -> bool:
    """Exhaustive trial division by every monic polynomial of degree <= deg/2."""
    deg = len(f) - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for g in _monic_polys(d, p):
            if not _poly_mod(f, g, p):
                return False
    return True


@functools.lru_cache(maxsize=None)
def smallest_irreducible(p: int, r: int) -> tuple[int, ...]:
    """Lexicographically smallest monic irreducible of degree r over F_p."""
    for f in _monic_polys(r, p):
        if is_irreducible(f, p):
            return tuple(f)
    raise AssertionError("no irreducible polynomial found")


def _mulmod_scalar(a: int, b: int, p: int, r: int, modulus: Sequence[int]) -> int:
    da = [(a // p ** i) % p for i in range(r)]
    db = [(b // p ** i) % p for i in range(r)]
    prod = [0] * (2 * r - 1)
    for i, x in enumerate(da):
        if x:
            for j, y in enumerate(db):
                prod[i + j] = (prod[i + j] + x * y) % p
    rem = _poly_mod(prod, modulus, p) if r > 1 else [prod[0] % p]
    return sum(c * p ** i for i, c in enumerate(rem))


def _powmod_scalar(a: int, e: int, p: int, r: int, modulus: Sequence[int]) -> int:
    result, base = 1, a
    while e:
        if e & 1:
            result = _mulmod_scalar(result, base, p, r, modulus)
        base = _mulmod_scalar(base, base, p, r, modulus)
        e >>= 1
    return result


@dataclass(frozen=True)
class FieldSpec:
    """F_{p^r} with a fixed modulus (low-degree-first coefficients) and generator."""

    p: int
    r: int
    modulus: tuple[int, ...]
    gamma: int

    @property
    def q(self) -> int:
        return self.p ** self.r

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "r": self.r,
            "modulus": list(self.modulus),
            "gamma": [(self.gamma // self.p ** i) % self.p for i in range(self.r)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FieldSpec":
        p, r = int(d["p"]), int(d["r"])
        gamma = sum(int(c) * p ** i for i, c in enumerate(d["gamma"]))
        spec = cls(p, r, tuple(int(c) for c in d["modulus"]), gamma)
        spec.validate()
        return spec

    def validate(self) -> None:
        p, r = self.p, self.r
        if prime_power(p) != (p, 1):
            raise ValueError(f"p={p} is not prime")
        if len(self.modulus) != r + 1 or self.modulus[-1] != 1:
            raise ValueError("modulus must be monic of degree r")
        if not is_irreducible(self.modulus, p):
            raise ValueError("modulus is reducible")
        if multiplicative_order(self.gamma, self) != self.q - 1:
            raise ValueError("gamma does not generate the multiplicative group")


def multiplicative_order(x: int, spec: FieldSpec) -> int:
    q = spec.q
    if x == 0:
        return 0
    order = q - 1
    for ell in prime_factors(q - 1):
        while order % ell == 0 and _powmod_scalar(x, order // ell, spec.p, spec.r, spec.modulus) == 1:
            order //= ell
    return order


@functools.lru_cache(maxsize=None)
def default_spec(q: int) -> FieldSpec:
    p, r = prime_power(q)
    if q > MAX_ORDER:
        raise ValueError(f"field order {q} above supported maximum {MAX_ORDER}")
    modulus = smallest_irreducible(p, r)
    tmp = FieldSpec(p, r, modulus, 1)
    for g in range(1, q):
        if multiplicative_order(g, tmp) == q - 1:
            return FieldSpec(p, r, modulus, g)
    raise AssertionError("no generator found")


class GF:
    """Vectorized arithmetic for one field.  Immutable after construction."""

    def __init__(self, spec: FieldSpec):
        self.spec = spec
        self.p, self.r, self.q = spec.p, spec.r, spec.q
        p, r, q = self.p, self.r, self.q
        self._pw = p ** np.arange(r, dtype=np.int64)
        # digit table: element -> coefficient vector
        self.digits = (np.arange(q, dtype=np.int64)[:, None] // self._pw) % p
        self.neg_tab = ((-self.digits) % p) @ self._pw
        self.add_tab = None
        if p != 2 and r > 1 and q <= ADD_TABLE_LIMIT:
            self.add_tab = ((self.digits[:, None, :] + self.digits[None, :, :]) % p) @ self._pw
        self.exp = self.log = None
        if q <= TABLE_LIMIT:
            self._build_log_tables()
        self.trace_tab = self._trace_table()
        self.roots = np.exp(2j * np.pi * np.arange(p) / p)
        self.roots[0] = 1.0
        if p == 2:
            self.roots[1] = -1.0
        for arr in (self.digits, self.neg_tab, self.trace_tab, self.roots):
            arr.setflags(write=False)

    @classmethod
    def of_order(cls, q: int) -> "GF":
        return _field_cache(default_spec(q))

    def __repr__(self) -> str:
        return f"GF({self.q})"

    def __reduce__(self):
        return (_field_cache, (self.spec,))

    # -- table construction ------------------------------------------------
    def _mul_direct(self, a, b):
        """Polynomial multiply-and-reduce, vectorized over arrays."""
        p, r = self.p, self.r
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        a, b = np.broadcast_arrays(a, b)
        da = (a[..., None] // self._pw) % p
        db = (b[..., None] // self._pw) % p
        prod = np.zeros(a.shape + (2 * r - 1,), dtype=np.int64)
        for i in range(r):
            prod[..., i:i + r] += da[..., i:i + 1] * db
        prod %= p
        mod = np.array(self.spec.modulus, dtype=np.int64)
        for top in range(2 * r - 2, r - 1, -1):
            c = prod[..., top:top + 1].copy()
            prod[..., top - r:top + 1] = (prod[..., top - r:top + 1] - c * mod) % p
        return prod[..., :r] @ self._pw

    def _build_log_tables(self) -> None:
        q = self.q
        n = q - 1
        block = max(1, math.isqrt(n))
        head = np.empty(block, dtype=np.int64)
        head[0] = 1
        for i in range(1, block):
            head[i] = _mulmod_scalar(int(head[i - 1]), self.spec.gamma, self.p, self.r, self.spec.modulus)
        step = _mulmod_scalar(int(head[-1]), self.spec.gamma, self.p, self.r, self.spec.modulus)
        chunks = [head]
        cur = head
        while sum(len(c) for c in chunks) < n:
            cur = self._mul_direct(cur, step)
            chunks.append(cur)
        exp = np.concatenate(chunks)[:n]
        log = np.full(q, -1, dtype=np.int64)
        log[exp] = np.arange(n)
        if (log[1:] < 0).any():
            raise AssertionError("gamma is not a generator")
        self.exp = np.concatenate([exp, exp])
        self.log = log
        self.exp.setflags(write=False)
        self.log.setflags(write=False)

    def _trace_table(self) -> np.ndarray:
        x = np.arange(self.q, dtype=np.int64)
        acc = x.copy()
        cur = x
        for _ in range(self.r - 1):
            cur = self.pow(cur, self.p)
            acc = self.add(acc, cur)
        if (acc >= self.p).any():
            raise AssertionError("trace left the prime subfield")
        return acc

    # -- elementwise ops ----------------------------------------------------
    def add(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.p == 2:
            return a ^ b
        if self.r == 1:
            return (a + b) % self.p
        if self.add_tab is not None:
            return self.add_tab[a, b]
        return (((a[..., None] // self._pw) + (b[..., None] // self._pw)) % self.p) @ self._pw

    def neg(self, a):
        return self.neg_tab[np.asarray(a, dtype=np.int64)]

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.exp is None:
            return self._mul_direct(a, b)
        a, b = np.broadcast_arrays(a, b)
        out = self.exp[self.log[a] + self.log[b]]
        return np.where((a == 0) | (b == 0), 0, out)

    def inv(self, a):
        a = np.asarray(a, dtype=np.int64)
        if (a == 0).any():
            raise ZeroDivisionError("inverse of zero")
        if self.exp is None:
            return self.pow(a, self.q - 2)
        return self.exp[(self.q - 1 - self.log[a]) % (self.q - 1)]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, e: int):
        a = np.asarray(a, dtype=np.int64)
        if e < 0:
            return self.pow(self.inv(a), -e)
        if self.exp is not None:
            if e == 0:
                return np.ones_like(a)
            out = self.exp[(self.log[a] * e) % (self.q - 1)]
            return np.where(a == 0, 0, out)
        result = np.ones_like(a)
        base = a
        while e:
            if e & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            e >>= 1
        return result

    def sum(self, a, axis=-1):
        """Field sum along an axis."""
        a = np.asarray(a, dtype=np.int64)
        if self.p == 2:
            return np.bitwise_xor.reduce(a, axis=axis)
        if self.r == 1:
            return a.sum(axis=axis) % self.p
        d = (a[..., None] // self._pw) % self.p
        return (d.sum(axis=axis if axis >= 0 else axis - 1) % self.p) @ self._pw

    def scale_int(self, c: int, a):
        """Integer multiple c*a, i.e. a added to itself c times."""
        return self.mul(c % self.p, a)

    def power_of_gamma(self, i):
        i = np.asarray(i, dtype=np.int64) % (self.q - 1)
        if self.exp is not None:
            return self.exp[i]
        vals = [_powmod_scalar(self.spec.gamma, int(k), self.p, self.r, self.spec.modulus) for k in i.ravel()]
        return np.array(vals, dtype=np.int64).reshape(i.shape)

    # -- trace, dot, phase ----------------------------------------------------
    def trace(self, a):
        return self.trace_tab[np.asarray(a, dtype=np.int64)]

    def dot(self, x, y):
        x = np.asarray(x, dtype=np.int64)
        y = np.asarray(y, dtype=np.int64)
        if x.shape[-1] != y.shape[-1]:
            raise ValueError(f"length mismatch {x.shape[-1]} != {y.shape[-1]}")
        return self.sum(self.mul(x, y), axis=-1)

    def phase(self, x, z):
        """omega_p ** Tr(x . z) for vectors along the last axis."""
        return self.roots[self.trace(self.dot(x, z))]

    # -- coefficient views ----------------------------------------------------
    def to_coeffs(self, x: int) -> tuple[int, ...]:
        return tuple(int(c) for c in self.digits[int(x)])

    def from_coeffs(self, coeffs: Sequence[int]) -> int:
        if len(coeffs) != self.r:
            raise ValueError("wrong coefficient length")
        return int(sum((int(c) % self.p) * self.p ** i for i, c in enumerate(coeffs)))

    # -- linear algebra over F_q ------------------------------------------------
    def rref(self, mat) -> tuple[np.ndarray, list[int]]:
        """Reduced row echelon form and pivot columns."""
        a = np.array(mat, dtype=np.int64, copy=True)
        if a.ndim != 2:
            raise ValueError("matrix expected")
        rows, cols = a.shape
        pivots: list[int] = []
        r = 0
        for c in range(cols):
            if r == rows:
                break
            nz = np.nonzero(a[r:, c])[0]
            if nz.size == 0:
                continue
            piv = r + nz[0]
            if piv != r:
                a[[r, piv]] = a[[piv, r]]
            a[r] = self.mul(a[r], self.inv(a[r, c]))
            factors = a[:, c].copy()
            factors[r] = 0
            mask = factors != 0
            if mask.any():
                a[mask] = self.sub(a[mask], self.mul(factors[mask, None], a[r][None, :]))
            pivots.append(c)
            r += 1
        return a, pivots

    def rank(self, mat) -> int:
        return len(self.rref(mat)[1])

    def nullspace(self, mat) -> np.ndarray:
        """Basis (rows) of {v : mat @ v = 0}."""
        mat = np.asarray(mat, dtype=np.int64)
        cols = mat.shape[1]
        red, pivots = self.rref(mat)
        free = [c for c in range(cols) if c not in set(pivots)]
        basis = np.zeros((len(free), cols), dtype=np.int64)
        for i, f in enumerate(free):
            basis[i, f] = 1
            for row, pc in enumerate(pivots):
                basis[i, pc] = self.neg(red[row, f])
        return basis

    def matmul(self, a, b):
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        return self.sum(self.mul(a[..., :, :, None], b[..., None, :, :]), axis=-2)

    def vecmat(self, v, m):
        """Row vector(s) times matrix."""
        v = np.asarray(v, dtype=np.int64)
        m = np.asarray(m, dtype=np.int64)
        return self.sum(self.mul(v[..., :, None], m), axis=-2)


@functools.lru_cache(maxsize=None)
def _field_cache(spec: FieldSpec) -> GF:
    return GF(spec)


def field(q: int) -> GF:
    """The cached default field of order q."""
    return GF.of_order(q)


# -- symbol vectors -------------------------------------------------------------

def fold(vec, m: int) -> np.ndarray:
    """View a length-(n*m) F_q vector as n symbols of m coordinates."""
    vec = np.asarray(vec, dtype=np.int64)
    if vec.shape[-1] % m:
        raise ValueError(f"length {vec.shape[-1]} not divisible by {m}")
    return vec.reshape(vec.shape[:-1] + (vec.shape[-1] // m, m))


def unfold(sym) -> np.ndarray:
    sym = np.asarray(sym, dtype=np.int64)
    return sym.reshape(sym.shape[:-2] + (sym.shape[-2] * sym.shape[-1],))


def hamming_weight(vec, chunk: int = 1):
    """Number of nonzero chunks of `chunk` consecutive coordinates."""
    vec = np.asarray(vec)
    if vec.shape[-1] % chunk:
        raise ValueError(f"length {vec.shape[-1]} not divisible by chunk {chunk}")
    return (fold(vec, chunk) != 0).any(axis=-1).sum(axis=-1)


class VectorSpace:
    """F_q^L with the big-endian index encoding idx = sum_j x_j q^(L-1-j).

    With L = n*m this is also Sigma^n: symbol j occupies coordinates
    j*m .. j*m+m-1, and the symbol index is the base-|Sigma| digit of idx.
    """

    def __init__(self, gf: GF, length: int):
        self.gf = gf
        self.length = length
        self.size = gf.q ** length
        self._pw = gf.q ** np.arange(length - 1, -1, -1, dtype=np.int64)
        self._all = None

    def to_vec(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return (idx[..., None] // self._pw) % self.gf.q

    def to_index(self, vec):
        vec = np.asarray(vec, dtype=np.int64)
        if vec.shape[-1] != self.length:
            raise ValueError("length mismatch")
        return vec @ self._pw

    def all_vectors(self) -> np.ndarray:
        if self._all is None:
            self._all = self.to_vec(np.arange(self.size))
            self._all.setflags(write=False)
        return self._all

    def add_index(self, a, b):
        return self.to_index(self.gf.add(self.to_vec(a), self.to_vec(b)))

    def sub_index(self, a, b):
        return self.to_index(self.gf.sub(self.to_vec(a), self.to_vec(b)))

    def neg_index(self, a):
        return self.to_index(self.gf.neg(self.to_vec(a)))
