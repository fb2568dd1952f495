"""Prove/Verify, the shifted worst-case variant, and the derived OWF and CRH.

The honest prover is simulated exactly: the final two-register state depends
only on (code, H, y), so it is computed once and cached, and each prove()
call samples the postselection trials and the register-2 measurement.
"""
from __future__ import annotations

import hashlib
import json
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from . import qsim, rom
from .codes import FoldedCode, codewords, decode_table, folded_contains, format_codeword, parse_codeword
from .rom import OracleTable, RandomOracle


@dataclass(frozen=True)
class ProtocolParams:
    folded: FoldedCode
    seed: int = 0
    lam: int = 8
    t: int = 4
    salt_len: int = 0

    def __post_init__(self):
        if self.t < 1 or self.lam < 1 or self.salt_len < 0:
            raise ValueError("need t >= 1, lam >= 1 and salt_len >= 0")

    @property
    def n(self) -> int:
        return self.folded.n

    @property
    def sigma(self) -> int:
        return self.folded.sigma

    @property
    def k_hash(self) -> int:
        return 2 * (self.lam * self.n + 1)

    def target(self, y=None) -> np.ndarray:
        if y is None:
            return np.ones(self.n, dtype=np.uint8)
        return rom._as_bits(y, self.n)

    def oracle(self, mode: str = "explicit") -> OracleTable:
        return rom.sample_oracle(self.seed, self.sigma, self.n, mode)

    def describe(self) -> dict:
        return {"field": self.folded.inner.spec.to_dict(), **self.folded.describe(),
                "seed": self.seed, "lam": self.lam, "t": self.t, "salt_len": self.salt_len}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.describe(), sort_keys=True).encode()).hexdigest()


@dataclass(frozen=True)
class Proof:
    pi: np.ndarray | None
    abort: bool = False

    def to_bytes(self) -> bytes:
        if self.abort or self.pi is None:
            return b"abort"
        return b"".join(int(s).to_bytes(8, "big") for s in self.pi)


@dataclass(frozen=True)
class WorstCaseProof:
    key: rom.KWiseHash
    proofs: tuple[Proof, ...]


# -- exact analysis of the honest prover ----------------------------------------------

@dataclass
class ProverAnalysis:
    """Everything the prover does, computed exactly for one (code, H, y)."""

    fractions: np.ndarray        # |T_i| / |Sigma|
    nonabort: float
    psi: qsim.StateVector | None
    phis: list | None
    final: qsim.StateVector | None
    accept: np.ndarray | None    # mask of C intersect T over register 2

    @property
    def feasible(self) -> bool:
        return self.final is not None

    def outcome_probs(self) -> np.ndarray:
        return qsim.marginal(self.final, 2)

    def pass_mass(self) -> float:
        return float(self.outcome_probs()[self.accept].sum()) if self.feasible else 0.0

    def zero_projection(self) -> float:
        if not self.feasible:
            return 0.0
        row = self.final.matrix()[0]
        return float((np.abs(row[self.accept]) ** 2).sum())


_ANALYSIS_CACHE: OrderedDict = OrderedDict()
_CACHE_SIZE = 32


def _require_explicit(H: OracleTable) -> np.ndarray:
    if H.mode != "explicit":
        raise ValueError("the quantum prover needs an explicit oracle table")
    return H.table()


def analyze(params: ProtocolParams, H: OracleTable, y=None, cap: int | None = None) -> ProverAnalysis:
    folded = params.folded
    y = params.target(y)
    table = _require_explicit(H)
    key = (folded, params.lam, table.tobytes(), y.tobytes())
    if key in _ANALYSIS_CACHE:
        _ANALYSIS_CACHE.move_to_end(key)
        return _ANALYSIS_CACHE[key]
    hits = table == y[None, :]
    fractions = hits.mean(axis=0)
    nonabort = float(np.prod([qsim.postselection_success(f, params.lam) for f in fractions]))
    if (fractions == 0).any():
        out = ProverAnalysis(fractions, 0.0, None, None, None, None)
    else:
        spec = folded.inner.spec
        qsim._check_cap(folded.space.size ** 2, cap)
        psi = qsim.code_superposition(folded)
        phis = [qsim.uniform_over(hits[:, i], spec, folded.m, 1) for i in range(folded.n)]
        phi = qsim.product_state(phis)
        final = run_circuit(psi, phi, decode_table(folded), cap)
        sym = _all_symbols(folded)
        in_t = hits[sym, np.arange(folded.n)[None, :]].all(axis=1)
        accept = (psi.amps != 0) & in_t
        out = ProverAnalysis(fractions, nonabort, psi, phis, final, accept)
    _ANALYSIS_CACHE[key] = out
    if len(_ANALYSIS_CACHE) > _CACHE_SIZE:
        _ANALYSIS_CACHE.popitem(last=False)
    return out


def _all_symbols(folded: FoldedCode) -> np.ndarray:
    idx = np.arange(folded.space.size, dtype=np.int64)
    pw = folded.sigma ** np.arange(folded.n - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // pw) % folded.sigma


def run_circuit(psi: qsim.StateVector, phi: qsim.StateVector, table, cap: int | None = None) -> qsim.StateVector:
    """(I x QFT^-1) U_decode U_add (QFT x QFT) |psi>|phi>."""
    st = qsim.two_register(psi, phi, cap)
    st = qsim.qft(qsim.qft(st, 1), 2)
    st = qsim.apply_u_decode(qsim.apply_u_add(st), table)
    return qsim.qft(st, 2, inverse=True)


def prove_success_probability(params: ProtocolParams, H: OracleTable, y=None) -> float:
    """Exact probability that prove() returns an accepted proof.

    The non-abort probability times the register-2 marginal mass on
    {x in C : H_i(x_i) = y_i for all i}.
    """
    a = analyze(params, H, y)
    return a.nonabort * a.pass_mass()


def lemma_report(params: ProtocolParams, H: OracleTable, y=None) -> tuple[float, qsim.BadSetReport]:
    """(distance of the final state from the ideal target, bad-set report)."""
    a = analyze(params, H, y)
    if not a.feasible:
        raise ValueError("some T_i is empty")
    folded = params.folded
    target = qsim.lemma_target(a.psi, qsim.product_state(a.phis))
    table = decode_table(folded)
    report = qsim.bad_set_report(qsim.qft(a.psi).amps, [qsim.qft(p).amps for p in a.phis],
                                 qsim.dual_mask(folded), qsim.good_errors(folded, table), folded.space)
    return qsim.state_distance(a.final, target), report


# -- protocol -------------------------------------------------------------------------

def prove(params: ProtocolParams, H: OracleTable, y=None, rng: np.random.Generator | None = None) -> Proof:
    rng = np.random.default_rng() if rng is None else rng
    folded = params.folded
    y = params.target(y)
    table = _require_explicit(H)
    for i in range(folded.n):
        state, _ = qsim.postselected_state(table[:, i], int(y[i]), params.lam, rng,
                                           folded.inner.spec, folded.m)
        if state is None:
            return Proof(None, abort=True)
    a = analyze(params, H, y)
    probs = a.outcome_probs()
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
    return Proof(qsim.symbols_of(min(idx, probs.size - 1), folded.sigma, folded.n))


def verify(params: ProtocolParams, H: OracleTable, proof: Proof, y=None) -> bool:
    """Accept iff pi is a codeword and H_i(pi_i) = y_i for every position (n queries)."""
    if proof.abort or proof.pi is None:
        return False
    pi = np.asarray(proof.pi, dtype=np.int64)
    if pi.shape != (params.n,) or (pi < 0).any() or (pi >= params.sigma).any():
        return False
    y = params.target(y)
    bits_ok = all([H.bit(i + 1, int(pi[i])) == y[i] for i in range(params.n)])
    return bits_ok and folded_contains(params.folded, pi)


# -- worst-case variant ---------------------------------------------------------------

def _salt(j: int) -> bytes:
    return b"rep" + j.to_bytes(4, "big")


def shifted_oracle(H: OracleTable, key: rom.KWiseHash, j: int) -> OracleTable:
    """H-tilde_K^(j)(x) = H(j || x) xor f_K(x)."""
    return rom.xor_shift(rom.prefix_restrict(H, _salt(j)), key)


def prove_wc(params: ProtocolParams, H: OracleTable, rng: np.random.Generator) -> WorstCaseProof:
    key = rom.sample_kwise(params.k_hash, params.sigma, params.n, rng)
    proofs = tuple(prove(params, shifted_oracle(H, key, j), None, rng) for j in range(1, params.t + 1))
    return WorstCaseProof(key, proofs)


def verify_wc(params: ProtocolParams, H: OracleTable, proof: WorstCaseProof) -> bool:
    if len(proof.proofs) != params.t or proof.key.k != params.k_hash:
        return False
    return all([verify(params, shifted_oracle(H, proof.key, j), p)
                for j, p in enumerate(proof.proofs, start=1)])


def union_bound_report(params: ProtocolParams) -> dict:
    """Soundness union bound |K| 2^(-t lam) for the shift family, reported only."""
    w = rom.hash_width(params.sigma, params.n)
    log2_keys = params.k_hash * w
    return {"log2_keys": log2_keys, "log2_bound": log2_keys - params.t * params.lam}


# -- derived primitives ---------------------------------------------------------------

def owf_eval(params: ProtocolParams, H: OracleTable, x) -> str:
    """f(x) = (H_1(x_1), ..., H_n(x_n)) on codewords."""
    x = np.asarray(x, dtype=np.int64)
    if not folded_contains(params.folded, x):
        raise ValueError("input is not a codeword")
    return "".join(str(H.bit(i + 1, int(x[i]))) for i in range(params.n))


def invert(params: ProtocolParams, H: OracleTable, y, rng: np.random.Generator) -> Proof:
    """Quantum preimage search: prove() against target y."""
    return prove(params, H, y, rng)


def poq_oracle(params: ProtocolParams, wide: RandomOracle) -> OracleTable:
    return OracleTable(params.sigma, params.n, seed=wide.seed, prefix=b"poq")


def crh_eval(params: ProtocolParams, wide: RandomOracle, x: str, proof: Proof) -> str:
    """x if the PoQ verifier accepts proof, else H(x, proof) truncated to len(x) bits."""
    if any(c not in "01" for c in x):
        raise ValueError("x must be a bit string")
    if verify(params, poq_oracle(params, wide), proof):
        return x
    return rom.bits_to_str(wide.bits(b"crh" + x.encode() + b"|" + proof.to_bytes(), len(x)))


def sample_salt(params: ProtocolParams, rng: np.random.Generator) -> bytes:
    return bytes(rng.integers(0, 256, size=params.salt_len, dtype=np.uint8).tolist())


def salted_oracle(H: OracleTable, salt: bytes) -> OracleTable:
    return rom.prefix_restrict(H, b"salt" + salt if salt else b"").as_explicit()


def salt_owf(params: ProtocolParams, H: OracleTable, salt: bytes, x) -> tuple[bytes, str]:
    return salt, owf_eval(params, salted_oracle(H, salt), x)


def salt_poq_prove(params: ProtocolParams, H: OracleTable, salt: bytes, rng, y=None) -> Proof:
    return prove(params, salted_oracle(H, salt), y, rng)


def salt_poq_verify(params: ProtocolParams, H: OracleTable, salt: bytes, proof: Proof, y=None) -> bool:
    return verify(params, salted_oracle(H, salt), proof, y)


# -- proof files ----------------------------------------------------------------------

def write_proof(path, params: ProtocolParams, proof: Proof, y=None) -> None:
    folded = params.folded
    body = "abort" if proof.abort else format_codeword(proof.pi, folded.m, folded.gf)
    with open(path, "w") as fh:
        fh.write("poqlab-proof 1\n")
        fh.write(f"params {params.digest()}\n")
        fh.write(f"target {rom.bits_to_str(params.target(y))}\n")
        fh.write(body + "\n")


def read_proof(path, params: ProtocolParams) -> tuple[Proof, str, str]:
    """Returns (proof, target bits, params digest recorded in the file)."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if len(lines) < 4 or lines[0] != "poqlab-proof 1":
        raise ValueError("not a proof file")
    digest = lines[1].split(" ", 1)[1]
    target = lines[2].split(" ", 1)[1]
    if lines[3] == "abort":
        return Proof(None, abort=True), target, digest
    folded = params.folded
    return Proof(parse_codeword(lines[3], folded.m, folded.gf)), target, digest


def honest_outputs(params: ProtocolParams, H: OracleTable, y=None) -> tuple[np.ndarray, np.ndarray]:
    """Accepted prover outputs and their exact probabilities given acceptance."""
    a = analyze(params, H, y)
    if not a.feasible:
        return np.zeros((0, params.n), dtype=np.int64), np.zeros(0)
    probs = a.outcome_probs() * a.accept
    idx = np.flatnonzero(probs > 0)
    return _all_symbols(params.folded)[idx], probs[idx] / probs[idx].sum()


def preimages(params: ProtocolParams, H: OracleTable, y=None) -> np.ndarray:
    """{x in C : f(x) = y} as symbol rows."""
    folded = params.folded
    y = params.target(y)
    table = _require_explicit(H)
    words = codewords(folded.inner)
    syms = _all_symbols(folded)[folded.space.to_index(words)]
    ok = (table[syms, np.arange(folded.n)[None, :]] == y[None, :]).all(axis=1)
    return syms[ok]
