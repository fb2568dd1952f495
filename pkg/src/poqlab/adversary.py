"""Classical baselines under a query budget and exact combinatorics for the separation.

A classical query asks for one bit H_i(x).  Adversaries only see a
BudgetedOracle, whose memo of answered (i, x) pairs is the budget counter.
Results are measured baselines, not security proofs.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import protocol
from .codes import ENUM_CAP, EnumerationCapError, FoldedCode, codewords, vector_to_symbols, weight_distribution
from .rom import OracleTable

WILSON_Z = 1.96


class BudgetExceeded(RuntimeError):
    pass


@dataclass
class QueryBudget:
    Q: int
    used: int = 0

    def charge(self) -> None:
        if self.used >= self.Q:
            raise BudgetExceeded(f"query budget {self.Q} exhausted")
        self.used += 1

    @property
    def remaining(self) -> int:
        return self.Q - self.used


class BudgetedOracle:
    """Classical per-bit access to a lazy oracle; repeated questions are free."""

    def __init__(self, H: OracleTable, budget: QueryBudget):
        self._H = H
        self.budget = budget
        self.domain, self.n = H.domain, H.n
        self._known: dict[tuple[int, int], int] = {}

    def bit(self, i: int, x: int) -> int:
        """H_i(x), 1-indexed."""
        key = (int(i), int(x))
        if key not in self._known:
            self.budget.charge()
            self._known[key] = self._H.bit(i, x)
        return self._known[key]

    def known(self, i: int, x: int) -> int | None:
        return self._known.get((int(i), int(x)))

    @property
    def queries(self) -> int:
        return len(self._known)

    def simulation_access(self) -> OracleTable:
        """Full explicit table, for the simulated quantum prover only."""
        return self._H.as_explicit()


def _codeword_symbols(folded: FoldedCode) -> np.ndarray:
    return vector_to_symbols(codewords(folded.inner), folded.m, folded.q)


# -- attackers ----------------------------------------------------------------------------

def random_search_adversary(params: protocol.ProtocolParams, oracle: BudgetedOracle, y,
                            rng: np.random.Generator) -> protocol.Proof:
    """Try uniformly random codewords, checking every position of each.

    Each trial reads all n positions, so with no shared symbols ⌊Q/n⌋ trials
    fit in the budget.  Bits already known are reused at no cost.
    """
    y = params.target(y)
    words = _codeword_symbols(params.folded)
    n = params.n
    rejected = np.zeros(len(words), dtype=bool)
    while oracle.budget.remaining > 0 and not rejected.all():
        j = int(rng.integers(len(words)))
        x = words[j]
        unknown = sum(oracle.known(i + 1, x[i]) is None for i in range(n))
        if unknown > oracle.budget.remaining:
            break
        if all([oracle.bit(i + 1, x[i]) == y[i] for i in range(n)]):
            return protocol.Proof(x.copy())
        rejected[j] = True
    raise BudgetExceeded("random search ran out of queries")


def greedy_position_adversary(params: protocol.ProtocolParams, oracle: BudgetedOracle, y,
                              rng: np.random.Generator) -> protocol.Proof:
    """Grow per-position sets S_i = {x : H_i(x) = y_i} from random distinct symbols.

    After each round of one query per position, any codeword with at least
    ceil((1 - zeta) n) positions in S_i and no known mismatch is tested on its
    remaining positions; a fully matching codeword is returned.
    """
    y = params.target(y)
    folded = params.folded
    n, sigma = params.n, params.sigma
    words = _codeword_symbols(folded)
    need = math.ceil((1 - folded.zeta) * n - 1e-12)
    orders = [rng.permutation(sigma) for _ in range(n)]
    cursor = [0] * n
    good = np.zeros((n, sigma), dtype=bool)
    bad = np.zeros((n, sigma), dtype=bool)
    pos = np.arange(n)[None, :]

    def read(i, x):
        b = oracle.bit(i + 1, x) == y[i]
        (good if b else bad)[i, x] = True
        return b

    while True:
        hits = good[pos, words]
        alive = ~bad[pos, words].any(axis=1)
        full = np.flatnonzero(alive & hits.all(axis=1))
        if len(full):
            return protocol.Proof(words[full[0]].copy())
        count = hits.sum(axis=1)
        cand = np.flatnonzero(alive & (count >= need))
        if len(cand):
            # test the most complete candidate on its first unknown position
            c = cand[np.argmax(count[cand])]
            i = int(np.flatnonzero(~hits[c])[0])
            read(i, int(words[c, i]))
            continue
        progressed = False
        for i in range(n):
            while cursor[i] < sigma and (good[i, orders[i][cursor[i]]] or bad[i, orders[i][cursor[i]]]):
                cursor[i] += 1
            if cursor[i] < sigma:
                read(i, int(orders[i][cursor[i]]))
                cursor[i] += 1
                progressed = True
        if not progressed:
            raise BudgetExceeded("every symbol queried without a match")


def honest_prover_adversary(params: protocol.ProtocolParams, oracle: BudgetedOracle, y,
                            rng: np.random.Generator) -> protocol.Proof:
    """The simulated quantum prover, plugged into the classical harness."""
    return protocol.prove(params, oracle.simulation_access(), y, rng)


def zero_query_adversary(params, oracle, y, rng) -> protocol.Proof:
    """Outputs a fixed codeword without querying."""
    return protocol.Proof(np.zeros(params.n, dtype=np.int64))


# -- experiments --------------------------------------------------------------------------

def wilson_interval(successes: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class SoundnessReport:
    params: dict
    adversary: str
    Q: int
    trials: int
    successes: int
    queries_used: list

    @property
    def rate(self) -> float:
        return self.successes / self.trials if self.trials else 0.0

    @property
    def wilson(self) -> tuple[float, float]:
        return wilson_interval(self.successes, self.trials)

    def record(self) -> dict:
        lo, hi = self.wilson
        return {"params": self.params, "adversary": self.adversary, "Q": self.Q, "trials": self.trials,
                "successes": self.successes, "wilson_low": lo, "wilson_high": hi}

    def to_json(self) -> str:
        return json.dumps(self.record(), sort_keys=True)


Adversary = Callable[[protocol.ProtocolParams, BudgetedOracle, object, np.random.Generator], protocol.Proof]


def soundness_trial(adversary: Adversary, params: protocol.ProtocolParams, Q: int, y,
                    oracle_seed: int, rng: np.random.Generator) -> tuple[bool, int]:
    """One attack on a fresh lazy oracle: (accepted, queries used)."""
    H = OracleTable(params.sigma, params.n, seed=int(oracle_seed), mode="lazy")
    view = BudgetedOracle(H, QueryBudget(Q))
    try:
        proof = adversary(params, view, y, rng)
    except BudgetExceeded:
        proof = protocol.Proof(None, abort=True)
    return protocol.verify(params, H, proof, y), view.queries


def soundness_experiment(adversary: Adversary, params: protocol.ProtocolParams, trials: int,
                         rng: np.random.Generator, Q: int, y=None, oracle_seeds=None) -> SoundnessReport:
    """Fresh lazy oracle per trial; success iff verify accepts within the budget."""
    successes, used = 0, []
    for t in range(trials):
        seed = int(rng.integers(0, 2 ** 63)) if oracle_seeds is None else int(oracle_seeds[t])
        ok, q = soundness_trial(adversary, params, Q, y, seed, rng)
        successes += ok
        used.append(q)
    return SoundnessReport(params.describe(), getattr(adversary, "__name__", str(adversary)), Q, trials,
                           successes, used)


ADVERSARIES = {
    "random": random_search_adversary,
    "greedy": greedy_position_adversary,
    "honest": honest_prover_adversary,
    "zero": zero_query_adversary,
}


def random_search_closed_form(n: int, Q: int) -> float:
    """1 - (1 - 2^-n)^floor(Q/n), the independent-trials baseline."""
    return 1 - (1 - 2.0 ** -n) ** (Q // n)


# -- collision probability -----------------------------------------------------------------

@dataclass(frozen=True)
class CollisionReport:
    """Col = 2^-scale_exp * S, with S exact (the common factor is kept as an exponent)."""

    scale_exp: int
    identity: Fraction
    enumeration: Fraction | None
    bound: Fraction | None
    terms: tuple

    @property
    def relative_gap(self) -> float:
        if self.enumeration is None:
            return 0.0
        return float(abs(self.identity - self.enumeration) / self.identity)

    @property
    def within_bound(self) -> bool | None:
        return None if self.bound is None else self.identity <= self.bound

    @property
    def log2_col(self) -> float:
        return math.log2(self.identity) - self.scale_exp

    def col(self, which: str = "identity") -> Fraction:
        """The full exact value; only sensible for small |Sigma| n."""
        return getattr(self, which) / 2 ** self.scale_exp


def collision_bound(sigma: int, n: int, size: int) -> tuple[Fraction | None, tuple]:
    """2^-((|Sigma|+1) n) (1 + 2^n/|C| + r/(1-r)) with r = 2n/|Sigma|, scaled by 2^(|Sigma| n).

    None when r >= 1.
    """
    r = Fraction(2 * n, sigma)
    terms = (Fraction(1), Fraction(2 ** n, size), r / (1 - r) if r < 1 else None)
    if r >= 1:
        return None, terms
    return Fraction(1, 2 ** n) * sum(terms), terms


def collision_probability_exact(params_or_code, cap: int = ENUM_CAP) -> CollisionReport:
    """Col(H, y) for uniform H and y = f^H(x), x uniform in C, by two independent paths.

    Identity path: sum_j Pr[hw = n - j] 2^-(n-j) from the weight distribution.
    Enumeration path: average of 2^-d(x, x') over all codeword pairs.
    """
    folded = params_or_code.folded if isinstance(params_or_code, protocol.ProtocolParams) else params_or_code
    sigma, n = folded.sigma, folded.n
    dist = weight_distribution(folded, cap)
    col_id = sum(dist[j] * Fraction(1, 2 ** (n - j)) for j in range(n + 1))
    col_enum = None
    size = folded.size
    if size * size <= cap:
        syms = _codeword_symbols(folded)
        counts = np.zeros(n + 1, dtype=np.int64)
        step = max(1, (1 << 22) // (size * n))
        for start in range(0, size, step):
            block = syms[start:start + step]
            d = (block[:, None, :] != syms[None, :, :]).sum(axis=2)
            counts += np.bincount(d.reshape(-1), minlength=n + 1)
        col_enum = sum(Fraction(int(counts[d]), 2 ** d) for d in range(n + 1)) / (size * size)
    elif size > cap:
        raise EnumerationCapError(f"|C| = {size} exceeds cap {cap}")
    bound, terms = collision_bound(sigma, n, size)
    return CollisionReport(sigma * n, col_id, col_enum, bound, terms)


# -- inverter uniformity -------------------------------------------------------------------

def inverter_uniformity_test(params: protocol.ProtocolParams, H: OracleTable, y, trials: int,
                             rng: np.random.Generator) -> dict:
    """TV distance of accepted prove() outputs from uniform over {x in C : f(x) = y}."""
    pre = protocol.preimages(params, H, y)
    if len(pre) == 0:
        raise ValueError("target has no preimage in the code")
    index = {tuple(int(v) for v in row): j for j, row in enumerate(pre)}
    counts = np.zeros(len(pre), dtype=np.int64)
    for _ in range(trials):
        proof = protocol.prove(params, H, y, rng)
        if protocol.verify(params, H, proof, y):
            counts[index[tuple(int(v) for v in proof.pi)]] += 1
    outs, probs = protocol.honest_outputs(params, H, y)
    exact = np.zeros(len(pre))
    for row, p in zip(outs, probs):
        exact[index[tuple(int(v) for v in row)]] = p
    uniform = np.full(len(pre), 1 / len(pre))
    accepted = int(counts.sum())
    empirical = counts / accepted if accepted else np.zeros(len(pre))
    return {"preimages": len(pre), "trials": trials, "accepted": accepted,
            "tv_exact": float(0.5 * np.abs(exact - uniform).sum()),
            "tv_empirical": float(0.5 * np.abs(empirical - uniform).sum()) if accepted else None,
            "exact_probs": exact.tolist(), "counts": counts.tolist()}
