"""Random oracles H: Sigma -> {0,1}^n, explicit or lazily sampled.

Domain points are symbol indices 0 <= x < |Sigma|.  Outputs are uint8 bit
arrays with bit 1 (the first bit of the string) at column 0.  Seeded oracles
are restrictions of one wide keyed function, so prefixing (salting) is a
change of message prefix.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gf_core import field

EXPLICIT_CAP = 1 << 26  # table entries (points * bits)


@dataclass(frozen=True)
class RandomOracle:
    """Keyed pseudo-random function from byte strings to bit strings."""

    seed: int

    def bits(self, message: bytes, n: int) -> np.ndarray:
        key = (self.seed % (1 << 64)).to_bytes(8, "big")
        out = bytearray()
        block = 0
        while len(out) * 8 < n:
            h = hashlib.blake2b(message + block.to_bytes(4, "big"), key=key, digest_size=64)
            out += h.digest()
            block += 1
        return np.unpackbits(np.frombuffer(bytes(out), dtype=np.uint8))[:n]

    def table(self, prefix: bytes, points: Sequence[int], n: int) -> np.ndarray:
        rows = [self.bits(prefix + int(x).to_bytes(8, "big"), n) for x in points]
        return np.array(rows, dtype=np.uint8).reshape(len(rows), n)


class OracleTable:
    """H: Sigma -> {0,1}^n.

    Explicit mode holds the full immutable table.  Lazy mode answers from a
    memo, sampling new points on first query.  `queries` counts distinct
    answered points, `calls` counts every query.
    """

    def __init__(self, domain: int, n: int, *, seed: int | None = None, prefix: bytes = b"",
                 mode: str = "explicit", table: np.ndarray | None = None, shifts: tuple = ()):
        if mode not in ("explicit", "lazy"):
            raise ValueError(f"unknown oracle mode {mode!r}")
        if (seed is None) == (table is None):
            raise ValueError("give exactly one of seed and table")
        self.domain = int(domain)
        self.n = int(n)
        self.seed = seed
        self.prefix = bytes(prefix)
        self.mode = mode
        self.shifts = tuple(shifts)
        self._fixed = None
        if table is not None:
            t = np.array(table, dtype=np.uint8)
            if t.shape != (self.domain, self.n) or (t > 1).any():
                raise ValueError("table must be a 0/1 array of shape (domain, n)")
            t.setflags(write=False)
            self._fixed = t
        self._memo: dict[int, np.ndarray] = {}
        self.calls = 0
        self._table = None
        if mode == "explicit":
            if self.domain * self.n > EXPLICIT_CAP:
                raise MemoryError(f"explicit oracle of {self.domain}x{self.n} bits exceeds cap")
            self._table = self._compute(np.arange(self.domain))
            self._table.setflags(write=False)

    @classmethod
    def from_bits(cls, table) -> "OracleTable":
        """Fixed explicit oracle.  Restricting it to a prefix returns itself."""
        t = np.asarray(table, dtype=np.uint8)
        return cls(t.shape[0], t.shape[1], table=t)

    @classmethod
    def constant(cls, domain: int, n: int, bits: Sequence[int] | str = ()) -> "OracleTable":
        row = _as_bits(bits, n) if len(bits) else np.zeros(n, dtype=np.uint8)
        return cls.from_bits(np.tile(row, (domain, 1)))

    def _compute(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=np.int64)
        if self._fixed is not None:
            out = self._fixed[points].copy()
        else:
            out = RandomOracle(self.seed).table(self.prefix, points, self.n)
        for f in self.shifts:
            out ^= f.evaluate(points)
        return out

    @property
    def seeded(self) -> bool:
        return self._fixed is None

    @property
    def queries(self) -> int:
        return len(self._memo) if self.mode == "lazy" else self.domain

    def query(self, x: int) -> np.ndarray:
        x = int(x)
        if not 0 <= x < self.domain:
            raise ValueError(f"point {x} outside the domain")
        self.calls += 1
        if self._table is not None:
            return self._table[x]
        if x not in self._memo:
            self._memo[x] = self._compute([x])[0]
        return self._memo[x]

    def bit(self, i: int, x: int) -> int:
        """H_i(x), 1-indexed."""
        if not 1 <= i <= self.n:
            raise IndexError(f"bit index {i} outside 1..{self.n}")
        return int(self.query(x)[i - 1])

    def table(self) -> np.ndarray:
        if self._table is None:
            raise ValueError("lazy oracle has no explicit table; use as_explicit()")
        return self._table

    def as_explicit(self) -> "OracleTable":
        """Explicit oracle agreeing pointwise with this one."""
        if self.mode == "explicit":
            return self
        return OracleTable(self.domain, self.n, seed=self.seed, prefix=self.prefix,
                           table=self._fixed, shifts=self.shifts)

    def answered(self) -> dict[int, np.ndarray]:
        return dict(self._memo)


def _as_bits(bits, n: int) -> np.ndarray:
    if isinstance(bits, str):
        arr = np.array([int(c) for c in bits], dtype=np.uint8)
    else:
        arr = np.asarray(bits, dtype=np.uint8)
    if arr.shape != (n,) or (arr > 1).any():
        raise ValueError(f"expected {n} bits")
    return arr


def bits_to_str(bits) -> str:
    return "".join(str(int(b)) for b in bits)


def sample_oracle(seed: int, domain: int, n: int, mode: str = "explicit") -> OracleTable:
    return OracleTable(domain, n, seed=int(seed), mode=mode)


class BitProjection:
    """H_i: Sigma -> {0,1}, the i-th output bit of H (1-indexed)."""

    def __init__(self, H: OracleTable, i: int):
        if not 1 <= i <= H.n:
            raise IndexError(f"bit index {i} outside 1..{H.n}")
        self.H, self.i = H, i

    def __call__(self, x: int) -> int:
        return self.H.bit(self.i, x)

    def values(self) -> np.ndarray:
        return self.H.table()[:, self.i - 1]


def bit_projection(H: OracleTable, i: int) -> BitProjection:
    return BitProjection(H, i)


def prefix_restrict(H: OracleTable, salt: bytes) -> OracleTable:
    """x -> H(salt || x).  Fixed tables ignore the salt."""
    salt = bytes(salt)
    if not salt or not H.seeded:
        return H
    if H.shifts:
        raise ValueError("restrict before shifting")
    return OracleTable(H.domain, H.n, seed=H.seed, prefix=H.prefix + salt, mode=H.mode)


def xor_shift(H: OracleTable, f: "KWiseHash") -> OracleTable:
    """x -> H(x) xor f_K(x)."""
    if f.domain != H.domain or f.n != H.n:
        raise ValueError("hash and oracle disagree on domain or range")
    shifts = H.shifts + (f,)
    if H.seeded:
        return OracleTable(H.domain, H.n, seed=H.seed, prefix=H.prefix, mode=H.mode, shifts=shifts)
    return OracleTable(H.domain, H.n, table=H._fixed, mode=H.mode, shifts=shifts)


def in_restricted_class(H: OracleTable) -> bool:
    """Every bit projection has preimage-of-1 fraction strictly inside (1/3, 2/3)."""
    if H.mode != "explicit":
        raise ValueError("class membership needs an explicit oracle")
    counts = H.table().sum(axis=0).astype(np.int64)
    return bool(((3 * counts > H.domain) & (3 * counts < 2 * H.domain)).all())


@dataclass(frozen=True)
class KWiseHash:
    """f_K(x) = top n bits of sum_i K_i x^i over GF(2^w), a k-wise independent family."""

    k: int
    domain: int
    n: int
    key: tuple[int, ...]

    @property
    def w(self) -> int:
        return hash_width(self.domain, self.n)

    def evaluate(self, points) -> np.ndarray:
        gf = field(2 ** self.w)
        x = np.asarray(points, dtype=np.int64)
        acc = np.zeros_like(x)
        for c in reversed(self.key):
            acc = gf.add(gf.mul(acc, x), c)
        shifts = np.arange(self.w - 1, self.w - 1 - self.n, -1)
        return ((acc[:, None] >> shifts[None, :]) & 1).astype(np.uint8)

    def __call__(self, x: int) -> np.ndarray:
        return self.evaluate([x])[0]


def hash_width(domain: int, n: int) -> int:
    return max(1, n, math.ceil(math.log2(max(domain, 2))))


def sample_kwise(k: int, domain: int, n: int, rng: np.random.Generator) -> KWiseHash:
    w = hash_width(domain, n)
    key = tuple(int(v) for v in rng.integers(0, 2 ** w, size=k))
    return KWiseHash(k, domain, n, key)


def dump_oracle(H: OracleTable, path, format_symbol=str) -> None:
    """One line per domain point: symbol<TAB>n-bit string."""
    table = H.table()
    with open(path, "w") as fh:
        for x in range(H.domain):
            fh.write(f"{format_symbol(x)}\t{bits_to_str(table[x])}\n")


def load_oracle(path, parse_symbol=int) -> OracleTable:
    rows = {}
    with open(path) as fh:
        for line in fh:
            if line.strip():
                sym, bits = line.rstrip("\n").split("\t")
                rows[parse_symbol(sym)] = [int(c) for c in bits]
    domain = len(rows)
    if sorted(rows) != list(range(domain)):
        raise ValueError("oracle dump does not cover a contiguous domain")
    return OracleTable.from_bits(np.array([rows[x] for x in range(domain)], dtype=np.uint8))
