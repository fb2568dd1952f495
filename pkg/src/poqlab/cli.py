"""Command-line front end.

Exit codes: 0 success or acceptance, 1 rejection, 2 invalid configuration,
3 a size cap was exceeded.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np
import yaml

from . import adversary, codes, protocol, qsim, randomness, rom
from .gf_core import prime_power

EXIT_OK, EXIT_REJECT, EXIT_CONFIG, EXIT_CAP = 0, 1, 2, 3

EXPERIMENTS = ("fourier-selftest", "soundness", "collision", "inverter-uniformity", "decode-bench",
               "completeness")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    q: int = 5
    m: int = 1
    k: int | None = 2
    alpha: float | None = None
    epsilon: float | None = None
    seed: int = 0
    lam: int = 8
    t: int = 4
    attempts: int = 16
    salt_len: int = 0
    experiment: str = "fourier-selftest"
    trials: int = 100
    out: str = "runs"
    cap_amplitudes: int = qsim.AMPLITUDE_CAP
    workers: int = 1
    Q: int = 64
    adversary: str = "greedy"
    target: str | None = None
    proof: str | None = None
    entropy: float = 1.0
    extractor_bits: int | None = None
    extractor_error: float = 0.25
    extractor_seed: str | None = None
    prover: str = "honest"
    eps: float = 0.1
    delta: float = 0.1
    selftest_limit: int = 256
    decode_q: int = 16
    decode_alpha: float = 0.9
    oracles: int = 5

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg = cls(**data)
        if "alpha" in data and data["alpha"] is not None and "k" not in data:
            cfg.k = None
        cfg.validate()
        return cfg

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)
        for name in ("q", "m", "seed", "lam", "t", "attempts", "salt_len", "trials", "cap_amplitudes", "workers", "Q",
                     "selftest_limit", "decode_q", "oracles"):
            need(isinstance(getattr(self, name), int) and not isinstance(getattr(self, name), bool),
                 f"{name} must be an integer")
        try:
            prime_power(self.q)
        except ValueError:
            raise ConfigError(f"q={self.q} is not a prime power")
        N = self.q - 1
        need(self.m >= 1 and N % self.m == 0, f"m={self.m} must divide N={N}")
        need((self.k is None) != (self.alpha is None), "give exactly one of k and alpha")
        if self.k is not None:
            need(isinstance(self.k, int) and 0 <= self.k < N, f"k={self.k} must satisfy 0 <= k < N={N}")
        else:
            need(0 <= self.alpha < 1, "alpha must lie in [0, 1)")
        need(0 <= self.seed < 2 ** 64, "seed must be an unsigned 64-bit integer")
        need(self.lam >= 1 and self.t >= 1 and self.attempts >= 1 and self.trials >= 1 and self.workers >= 1, "counts must be positive")
        need(self.salt_len >= 0 and self.Q >= 0, "salt_len and Q must be non-negative")
        need(self.experiment in EXPERIMENTS, f"unknown experiment {self.experiment!r}")
        need(self.adversary in adversary.ADVERSARIES, f"unknown adversary {self.adversary!r}")
        need(self.prover in ("honest", "stub"), "prover must be honest or stub")
        need(0 < self.eps < 1 and 0 < self.delta < 1, "eps and delta must lie in (0, 1)")
        need(self.extractor_bits is None or (isinstance(self.extractor_bits, int) and self.extractor_bits >= 0),
             "extractor_bits must be a non-negative integer")
        need(self.entropy >= 0, "entropy must be non-negative")
        need(0 < self.extractor_error < 1, "extractor_error must lie in (0, 1)")
        if self.target is not None:
            need(isinstance(self.target, str) and len(self.target) == N // self.m
                 and set(self.target) <= {"0", "1"}, f"target must be {N // self.m} bits")
        try:
            prime_power(self.decode_q)
        except ValueError:
            raise ConfigError(f"decode_q={self.decode_q} is not a prime power")
        need(0 <= self.decode_alpha < 1, "decode_alpha must lie in [0, 1)")
        if self.experiment == "decode-bench":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", codes.RegimeWarning)
                dk = codes.folded_rs(self.decode_q, 1, alpha=self.decode_alpha).k
            need(dk < self.decode_q - 2, f"decode_q={self.decode_q}, decode_alpha={self.decode_alpha} "
                 "gives the full code, whose dual is trivial")

    def folded(self) -> codes.FoldedCode:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", codes.RegimeWarning)
            return codes.folded_rs(self.q, self.m, k=self.k, alpha=None if self.k is not None else self.alpha,
                                   epsilon=self.epsilon)

    def params(self) -> protocol.ProtocolParams:
        return protocol.ProtocolParams(self.folded(), self.seed, self.lam, self.t, self.salt_len)


def load_config(path: str | None, overrides: dict) -> RunConfig:
    data = {}
    if path:
        try:
            with open(path) as fh:
                data = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config: {exc}")
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.from_dict(data)


def trial_rngs(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _check_caps(cfg: RunConfig) -> None:
    size = (cfg.q ** cfg.m) ** ((cfg.q - 1) // cfg.m)
    if size * size > cfg.cap_amplitudes:
        raise qsim.CapExceeded(f"two registers of {size} amplitudes exceed cap {cfg.cap_amplitudes}")


def _out(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    return os.path.join(cfg.out, name)


def _write_jsonl(path: str, records) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def _write_csv(path: str, rows: list[dict]) -> None:
    keys = sorted({k for r in rows for k in r})
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


# -- prove / verify / invert ------------------------------------------------------------

def cmd_prove(cfg: RunConfig, invert: bool = False) -> int:
    _check_caps(cfg)
    params = cfg.params()
    H = params.oracle()
    y = cfg.target if invert else None
    rng = trial_rngs(cfg.seed, 1)[0]
    # the prover may check its own output (n classical queries) and rerun
    for attempt in range(1, cfg.attempts + 1):
        proof = protocol.prove(params, H, y, rng)
        ok = protocol.verify(params, H, proof, y)
        if ok:
            break
    p1 = protocol.prove_success_probability(params, H, y)
    path = cfg.proof or _out(cfg, "proof.txt")
    protocol.write_proof(path, params, proof, y)
    report = {"command": "invert" if invert else "prove", "params": params.describe(),
              "measured": {"abort": proof.abort, "verified": ok, "attempts": attempt},
              "exact": {"success_probability": p1, "success_within_attempts": 1 - (1 - p1) ** cfg.attempts},
              "proof_file": os.path.basename(path)}
    _write_jsonl(_out(cfg, ("invert" if invert else "prove") + ".jsonl"), [report])
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK if ok else EXIT_REJECT


def cmd_verify(cfg: RunConfig) -> int:
    params = cfg.params()
    path = cfg.proof or _out(cfg, "proof.txt")
    try:
        proof, target, digest = protocol.read_proof(path, params)
    except (OSError, ValueError, IndexError) as exc:
        print(json.dumps({"command": "verify", "accepted": False, "error": str(exc)}))
        return EXIT_REJECT
    if digest != params.digest():
        raise ConfigError("proof was produced under different parameters")
    try:
        ok = protocol.verify(params, params.oracle("lazy"), proof, target)
    except ValueError:
        ok = False
    print(json.dumps({"command": "verify", "accepted": ok, "target": target}, sort_keys=True))
    return EXIT_OK if ok else EXIT_REJECT


# -- experiments ------------------------------------------------------------------------

def _selftest_job(args):
    q, m, n, seed = args
    err = qsim.fourier_selftest(q, m, n, np.random.default_rng(seed), samples=20)
    return {"q": q, "m": m, "n": n, **err, "pass": all(v < 1e-8 for v in err.values())}


def exp_fourier(cfg: RunConfig):
    grid = qsim.fourier_grid(cfg.selftest_limit)
    seeds = np.random.SeedSequence(cfg.seed).generate_state(len(grid), dtype=np.uint64)
    recs = _map(_selftest_job, [(q, m, n, int(s)) for (q, m, n), s in zip(grid, seeds)], cfg.workers)
    summary = {"experiment": "fourier-selftest", "sets": len(recs), "all_pass": all(r["pass"] for r in recs)}
    return recs, [summary]


def _soundness_job(args):
    cfg_dict, seq = args
    cfg = RunConfig(**cfg_dict)
    params = cfg.params()
    rng = np.random.default_rng(seq)
    oracle_seed = int(rng.integers(0, 2 ** 63))
    ok, used = adversary.soundness_trial(adversary.ADVERSARIES[cfg.adversary], params, cfg.Q, cfg.target,
                                         oracle_seed, rng)
    return {"oracle_seed": oracle_seed, "success": bool(ok), "queries": used}


def exp_soundness(cfg: RunConfig):
    seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.trials)
    recs = _map(_soundness_job, [(cfg.to_dict(), s) for s in seqs], cfg.workers)
    for i, r in enumerate(recs):
        r["trial"] = i
    wins = sum(r["success"] for r in recs)
    lo, hi = adversary.wilson_interval(wins, cfg.trials)
    summary = {"experiment": "soundness", "adversary": cfg.adversary, "Q": cfg.Q, "trials": cfg.trials,
               "successes": wins, "wilson_low": lo, "wilson_high": hi, "params": cfg.params().describe()}
    return recs, [summary]


def exp_collision(cfg: RunConfig):
    rep = adversary.collision_probability_exact(cfg.folded())
    rec = {"experiment": "collision", "scale_exp": rep.scale_exp, "scaled_identity": str(rep.identity),
           "scaled_enumeration": None if rep.enumeration is None else str(rep.enumeration),
           "scaled_bound": None if rep.bound is None else str(rep.bound), "relative_gap": rep.relative_gap,
           "within_bound": rep.within_bound, "log2_col": rep.log2_col}
    summary = {k: rec[k] for k in ("experiment", "scale_exp", "relative_gap", "within_bound", "log2_col")}
    return [rec], [summary]


def exp_inverter(cfg: RunConfig):
    _check_caps(cfg)
    params = cfg.params()
    H = params.oracle()
    y = cfg.target
    rng = trial_rngs(cfg.seed, 1)[0]
    rep = adversary.inverter_uniformity_test(params, H, y, cfg.trials, rng)
    summary = {"experiment": "inverter-uniformity", "measured_tv": rep["tv_empirical"], "exact_tv": rep["tv_exact"],
               "preimages": rep["preimages"], "accepted": rep["accepted"], "trials": rep["trials"]}
    return [rep], [summary]


def exact_decode_rate(N: int, radius: int, trials: int = 0) -> float:
    """P(Binomial(N, 1/2) <= radius): the in-radius rate of D-distributed errors."""
    return sum(math.comb(N, j) for j in range(radius + 1)) / 2 ** N


def _decode_job(args):
    q, alpha, seq = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", codes.RegimeWarning)
        folded = codes.folded_rs(q, 1, alpha=alpha)
    rng = np.random.default_rng(seq)
    dual = codes.dual_code(folded.inner)
    msg = rng.integers(0, q, size=dual.rank)
    x = codes.rs_encode(msg, dual)
    e = codes.sample_error(codes.ErrorDistribution(q, folded.N), rng)
    got = codes.decode_dual(folded.gf.add(x, e), folded)
    return {"weight": int((e != 0).sum()), "success": got is not None and bool((got == x).all())}


def exp_decode(cfg: RunConfig):
    seqs = np.random.SeedSequence(cfg.seed).spawn(cfg.trials)
    recs = _map(_decode_job, [(cfg.decode_q, cfg.decode_alpha, s) for s in seqs], cfg.workers)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", codes.RegimeWarning)
        folded = codes.folded_rs(cfg.decode_q, 1, alpha=cfg.decode_alpha)
    wins = sum(r["success"] for r in recs)
    lo, hi = adversary.wilson_interval(wins, cfg.trials)
    summary = {"experiment": "decode-bench", "q": cfg.decode_q, "alpha": cfg.decode_alpha, "k": folded.k,
               "radius": folded.decode_radius, "trials": cfg.trials, "measured_rate": wins / cfg.trials,
               "wilson_low": lo, "wilson_high": hi,
               "exact_in_radius_rate": exact_decode_rate(folded.N, folded.decode_radius)}
    return recs, [summary]


def exp_completeness(cfg: RunConfig):
    _check_caps(cfg)
    params = cfg.params()
    recs, rows = [], []
    rngs = trial_rngs(cfg.seed, cfg.oracles)
    for j in range(cfg.oracles):
        # condition on the restricted class by rejection sampling
        while True:
            oracle_seed = int(rngs[j].integers(0, 2 ** 63))
            H = rom.sample_oracle(oracle_seed, params.sigma, params.n)
            if rom.in_restricted_class(H):
                break
        exact = protocol.prove_success_probability(params, H, cfg.target)
        wins = sum(protocol.verify(params, H, protocol.prove(params, H, cfg.target, rngs[j]), cfg.target)
                   for _ in range(cfg.trials))
        rec = {"oracle": j, "oracle_seed": oracle_seed, "exact": exact,
               "measured": wins / cfg.trials, "trials": cfg.trials}
        recs.append(rec)
        rows.append(rec)
    return recs, rows


RUNNERS = {"fourier-selftest": exp_fourier, "soundness": exp_soundness, "collision": exp_collision,
           "inverter-uniformity": exp_inverter, "decode-bench": exp_decode, "completeness": exp_completeness}


def cmd_experiment(cfg: RunConfig) -> int:
    recs, summary = RUNNERS[cfg.experiment](cfg)
    _write_jsonl(_out(cfg, cfg.experiment + ".jsonl"), recs)
    _write_csv(_out(cfg, cfg.experiment + ".csv"), summary)
    for row in summary:
        print(json.dumps(row, sort_keys=True))
    return EXIT_OK


# -- entropy ----------------------------------------------------------------------------

def cmd_entropy(cfg: RunConfig) -> int:
    try:
        params = randomness.leveled_params(cfg.entropy, cfg.seed, cfg.lam)
    except ValueError as exc:
        raise ConfigError(str(exc))
    _check_caps(dataclasses.replace(cfg, q=params.folded.q, m=params.folded.m, k=params.folded.k, alpha=None))
    H = params.oracle()
    width = max(1, math.ceil(math.log2(params.sigma)))
    ell = width * params.n
    if cfg.prover == "stub":
        sampler = lambda rng, count: np.zeros(count, dtype=np.int64)
        exact = 0.0
    else:
        sampler = randomness.prover_sampler(params, H)
        _, probs = protocol.honest_outputs(params, H)
        exact = abs(randomness.min_entropy(probs)) if len(probs) else None
    rng = trial_rngs(cfg.seed, 1)[0]
    est = randomness.approx_distribution(sampler, ell, cfg.eps, cfg.delta, rng)
    accepted = {z: c for z, c in est.counts.items() if z >= 0}
    total = sum(accepted.values())
    measured = abs(-math.log2(max(accepted.values()) / total)) if total else None
    bits = math.floor(cfg.entropy) if cfg.extractor_bits is None else cfg.extractor_bits
    spec = randomness.ExtractorSpec(ell, min(bits, ell), cfg.extractor_error)
    seed_bits = int.from_bytes(rng.bytes((spec.seed_len + 7) // 8), "big") & ((1 << spec.seed_len) - 1)
    seed_hex = cfg.extractor_seed or format(seed_bits, f"0{(spec.seed_len + 3) // 4}x")
    if cfg.prover == "stub":
        proof = protocol.Proof(np.zeros(params.n, dtype=np.int64))
    else:
        proof = randomness.pom_prove(params, H, cfg.entropy, rng)
    accepted_proof = randomness.pom_verify(params, H, cfg.entropy, proof) is not None
    source = randomness.proof_bits(params, proof) if accepted_proof else None
    output = None if source is None else randomness.extract(spec, source, seed_hex)
    report = {"command": "entropy", "requested_h": cfg.entropy, "params": params.describe(), "runs": est.N,
              "accepted_runs": total, "measured": {"min_entropy": measured}, "exact": {"min_entropy": exact},
              "estimate_eps": cfg.eps, "estimate_delta": cfg.delta,
              "proof_accepted": accepted_proof, "extractor": {"bits": spec.out_len, "seed": seed_hex, "output": output,
                            "within_budget": None if measured is None else spec.within_budget(measured)}}
    _write_jsonl(_out(cfg, "entropy.jsonl"), [report])
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


# -- entry point ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="poqlab", description="Proof-of-quantumness desk-scale lab")
    ap.add_argument("--config", help="YAML config file")
    ap.add_argument("--seed", type=int, help="64-bit seed")
    ap.add_argument("--workers", type=int, help="parallel worker processes")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--cap-amplitudes", dest="cap_amplitudes", type=int, help="amplitude cap for two registers")
    ap.add_argument("--trials", type=int, help="trial count")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("print-defaults", help="dump the default config as YAML")
    p = sub.add_parser("prove", help="run the honest prover and write a proof file")
    p.add_argument("--proof", help="proof file path")
    p = sub.add_parser("verify", help="verify a proof file (exit 0 on acceptance)")
    p.add_argument("--proof", help="proof file path")
    p = sub.add_parser("invert", help="find a preimage of --target")
    p.add_argument("--target", help="n-bit target")
    p.add_argument("--proof", help="output file path")
    p = sub.add_parser("experiment", help="run a named experiment")
    p.add_argument("name", nargs="?", help=", ".join(EXPERIMENTS))
    p = sub.add_parser("entropy", help="proof of min-entropy and extraction report")
    p.add_argument("--h", dest="entropy", type=float, help="min-entropy threshold")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.command == "print-defaults":
        sys.stdout.write(yaml.safe_dump(RunConfig().to_dict(), sort_keys=True))
        return EXIT_OK
    overrides = {k: getattr(args, k, None) for k in ("seed", "workers", "out", "cap_amplitudes", "trials",
                                                      "proof", "target", "entropy")}
    if args.command == "experiment":
        overrides["experiment"] = args.name
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "prove":
            return cmd_prove(cfg)
        if args.command == "invert":
            return cmd_prove(cfg, invert=True)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "experiment":
            return cmd_experiment(cfg)
        return cmd_entropy(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (qsim.CapExceeded, codes.EnumerationCapError, MemoryError) as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
