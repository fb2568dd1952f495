"""Output-distribution estimation, min-entropy, proofs of min-entropy and extraction."""
from __future__ import annotations

import functools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Hashable

import numpy as np

from . import protocol
from .codes import folded_rs
from .gf_core import prime_factors

CHERNOFF_C = 3.0

Sampler = Callable[[np.random.Generator, int], "np.ndarray | list"]


@dataclass(frozen=True)
class DistributionEstimate:
    counts: dict
    N: int
    eps: float
    delta: float

    @property
    def table(self) -> dict:
        return {z: c / self.N for z, c in self.counts.items()}

    def prob(self, z: Hashable) -> float:
        return self.counts.get(z, 0) / self.N

    def dump(self, path, width: int = 1) -> None:
        """Two columns: hex outcome, probability."""
        with open(path, "w") as fh:
            for z in sorted(self.counts):
                fh.write(f"{int(z):0{width}x}\t{self.counts[z] / self.N!r}\n")


def run_count(ell: int, eps: float, delta: float, C: float = CHERNOFF_C) -> int:
    """N = ceil(C * ell * ln(1/delta) / eps^2)."""
    if not (0 < eps < 1 and 0 < delta < 1):
        raise ValueError("eps and delta must lie in (0, 1)")
    return math.ceil(C * max(ell, 1) * math.log(1 / delta) / eps ** 2)


def _key(z) -> Hashable:
    if isinstance(z, np.ndarray):
        return tuple(int(v) for v in z)
    if isinstance(z, (np.integer,)):
        return int(z)
    return z


def approx_distribution(sampler: Sampler, ell: int, eps: float, delta: float,
                        rng: np.random.Generator) -> DistributionEstimate:
    """Empirical frequencies over N runs of an ell-bit-output sampler.

    sampler(rng, count) returns `count` outcomes (ints or rows).
    """
    N = run_count(ell, eps, delta)
    out = sampler(rng, N)
    if isinstance(out, np.ndarray) and out.ndim == 1:
        vals, cnt = np.unique(out, return_counts=True)
        counts = {int(v): int(c) for v, c in zip(vals, cnt)}
    else:
        counts = dict(Counter(_key(z) for z in out))
    if sum(counts.values()) != N:
        raise ValueError(f"sampler returned {sum(counts.values())} outcomes, expected {N}")
    return DistributionEstimate(counts, N, eps, delta)


def min_entropy_estimate(est: DistributionEstimate) -> float:
    if not est.counts:
        raise ValueError("empty estimate")
    return -math.log2(max(est.counts.values()) / est.N)


def min_entropy(probs) -> float:
    return -math.log2(float(np.max(probs)))


# -- proofs of min-entropy --------------------------------------------------------------

# Registered parameter sets (q, m, k), in increasing output entropy.  The
# capacity of a set is log2|C| - n, the expected log-size of C intersect T.
LEVELS = ((4, 1, 1), (5, 1, 2), (5, 1, 3))


def level_capacity(q: int, m: int, k: int) -> float:
    n = (q - 1) // m
    return (k + 1) * math.log2(q) - n


def leveled_params(h: float, seed: int = 0, lam: int = 8) -> protocol.ProtocolParams:
    """Smallest registered parameter set whose capacity reaches h."""
    for q, m, k in LEVELS:
        if level_capacity(q, m, k) >= h:
            return protocol.ProtocolParams(folded_rs(q, m, k=k, warn=False), seed=seed, lam=lam)
    raise ValueError(f"no registered parameter set reaches min-entropy {h}")


def pom_prove(params: protocol.ProtocolParams, H, h: float, rng) -> protocol.Proof:
    lp = leveled_params(h, params.seed, params.lam)
    return protocol.prove(lp, H, None, rng)


def pom_verify(params: protocol.ProtocolParams, H, h: float, proof: protocol.Proof):
    """The proof itself when the PoQ verifier accepts, else None."""
    lp = leveled_params(h, params.seed, params.lam)
    return np.asarray(proof.pi) if protocol.verify(lp, H, proof) else None


# -- extractor --------------------------------------------------------------------------

def _clmul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def _polymod(a: int, f: int) -> int:
    df = f.bit_length() - 1
    while a.bit_length() - 1 >= df:
        a ^= f << (a.bit_length() - 1 - df)
    return a


def _polygcd(a: int, b: int) -> int:
    while b:
        a, b = b, _polymod(a, b)
    return a


def _x_pow2k(k: int, f: int) -> int:
    """x^(2^k) mod f."""
    r = 2
    for _ in range(k):
        r = _polymod(_clmul(r, r), f)
    return r


def is_irreducible_gf2(f: int) -> bool:
    """Rabin's test for a polynomial over GF(2) given as a bit mask."""
    w = f.bit_length() - 1
    if w < 1:
        return False
    if _x_pow2k(w, f) != _polymod(2, f):
        return False
    return all(_polygcd(_x_pow2k(w // p, f) ^ 2, f) == 1 for p in prime_factors(w))


@functools.lru_cache(maxsize=None)
def irreducible_gf2(w: int) -> int:
    """Lexicographically smallest irreducible of degree w."""
    for tail in range(1, 1 << w, 2):
        f = (1 << w) | tail
        if is_irreducible_gf2(f):
            return f
    raise ValueError(f"no irreducible of degree {w}")


@dataclass(frozen=True)
class ExtractorSpec:
    """h_{a,b}(x) = top `out_len` bits of a*x + b over GF(2^in_len)."""

    in_len: int
    out_len: int
    error: float = 0.01

    @property
    def seed_len(self) -> int:
        return 2 * self.in_len

    @property
    def modulus(self) -> int:
        return irreducible_gf2(self.in_len)

    @classmethod
    def for_source(cls, in_len: int, min_entropy: float, error: float) -> "ExtractorSpec":
        """Longest output the leftover hash lemma allows."""
        h = math.floor(min_entropy - 2 * math.log2(1 / error))
        return cls(in_len, max(0, min(h, in_len)), error)

    def within_budget(self, min_entropy: float) -> bool:
        return self.out_len <= min_entropy - 2 * math.log2(1 / self.error)


def _to_int(bits) -> int:
    if isinstance(bits, str):
        return int(bits, 2) if bits else 0
    return int(bits)


def extract(spec: ExtractorSpec, source, seed, h: int | None = None) -> str:
    """h-bit output of the pairwise-independent hash keyed by seed (int or hex string)."""
    h = spec.out_len if h is None else h
    if not 0 <= h <= spec.in_len:
        raise ValueError(f"h={h} outside 0..{spec.in_len}")
    if isinstance(source, str) and len(source) < spec.in_len:
        raise ValueError(f"source has {len(source)} bits, spec needs {spec.in_len}")
    x = _to_int(source) & ((1 << spec.in_len) - 1)
    seed = int(seed, 16) if isinstance(seed, str) else int(seed)
    a, b = seed >> spec.in_len, seed & ((1 << spec.in_len) - 1)
    a &= (1 << spec.in_len) - 1
    y = _polymod(_clmul(a, x), spec.modulus) ^ b
    if h == 0:
        return ""
    return format(y >> (spec.in_len - h), f"0{h}b")


def proof_bits(params: protocol.ProtocolParams, proof: protocol.Proof) -> str:
    """Fixed-width binary encoding of the accepted codeword."""
    width = max(1, math.ceil(math.log2(params.sigma)))
    return "".join(format(int(s), f"0{width}b") for s in proof.pi)


# -- threshold adversaries -------------------------------------------------------------

def thresholds(eps_A: float) -> list[float]:
    M = math.ceil(4 / eps_A)
    return [eps_A / 2 * (1 + (2 * i - 1) / (2 * M)) for i in range(1, M + 1)]


def threshold_adversary(sampler: Sampler, verifier: Callable[[Hashable], bool], eps_A: float, i: int,
                        rng: np.random.Generator, ell: int = 1):
    """A_i: the lexicographically smallest accepted outcome with estimated mass above t_i, else None."""
    M = math.ceil(4 / eps_A)
    if not 1 <= i <= M:
        raise ValueError(f"i={i} outside 1..{M}")
    est = approx_distribution(sampler, ell, eps_A / (4 * M), 1 / 5, rng)
    t = eps_A / 2 * (1 + (2 * i - 1) / (2 * M))
    qualified = [z for z, c in est.counts.items() if c / est.N > t and verifier(z)]
    return min(qualified) if qualified else None


def categorical_sampler(outcomes, probs) -> Sampler:
    outcomes = np.asarray(outcomes)
    probs = np.asarray(probs, dtype=float)

    def sample(rng, count):
        return outcomes[rng.choice(len(outcomes), size=count, p=probs)]
    return sample


def prover_sampler(params: protocol.ProtocolParams, H, y=None) -> Sampler:
    """Honest prover outcomes as symbol-vector indices (-1 for rejected or aborted runs).

    Draws are vectorized from the exact outcome law of prove(): abort with
    the exact abort probability, else the register-2 marginal.
    """
    a = protocol.analyze(params, H, y)
    if not a.feasible:
        return lambda rng, count: np.full(count, -1, dtype=np.int64)
    probs = a.outcome_probs()
    probs = probs / probs.sum()
    accept = a.accept

    def sample(rng, count):
        idx = rng.choice(probs.size, size=count, p=probs)
        ok = (rng.random(count) < a.nonabort) & accept[idx]
        return np.where(ok, idx, -1)
    return sample
