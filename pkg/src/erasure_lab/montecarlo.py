"""Seeded Monte Carlo campaigns for the erasure decoders.

Trials are processed in fixed-size chunks.  Chunk ``c`` draws from its own
stream ``SeedSequence(seed, spawn_key=(0, c))``, so results do not depend on
how many workers run the chunks, and the per-chunk tallies are reduced in
chunk order.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import binomtest

from . import _kernels, analytics
from .channel import ChannelSpec, GilbertElliott, Memoryless, enumerate_patterns, transmit
from .codecs import (CodeParams, MAX_CODEWORDS, linear_random_generator,
                     random_codebook, rs_code)
from .galois import field_of_order
from .ml_oracle import exact_ml_error, ml_decode, singleton_lower_bound

CHUNK = 1 << 15
FAMILIES = ("rs", "linear_random", "random_oracle_scale")
THREADS_ENV = "ERASURE_LAB_THREADS"

CSV_COLUMNS = ["family", "N", "K", "q", "channel", "trials", "seed", "resample_generator",
               "errors", "p_hat", "wilson_lo", "wilson_hi", "reference", "passed"]


class ConfigError(ValueError):
    pass


class ParamMismatch(ValueError):
    pass


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class CampaignConfig:
    family: str
    N: int
    K: int
    q: int
    channel: ChannelSpec
    trials: int
    seed: int = 0
    resample_generator: bool = True
    backend: str | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not 1 <= self.K < self.N:
            raise ConfigError(f"need 1 <= K < N, got N={self.N}, K={self.K}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.family == "rs" and self.N > self.q:
            raise ConfigError(f"Reed-Solomon needs N <= q, got N={self.N}, q={self.q}")
        if self.family == "random_oracle_scale" and self.q**self.K > MAX_CODEWORDS:
            raise ConfigError(f"q^K = {self.q**self.K} exceeds the enumeration ceiling")


@dataclass
class CampaignResult:
    family: str
    N: int
    K: int
    q: int
    channel: str
    trials: int
    seed: int
    resample_generator: bool
    errors: int
    breakdown: dict
    p_hat: float
    wilson95: tuple
    reference: float | None
    lower_bound: float | None
    upper_bound: float | None
    invariant_violations: dict
    verdict: dict = field(default_factory=dict)
    wall_time: float = field(default=0.0, compare=False)

    def to_dict(self, timing: bool = False) -> dict:
        d = asdict(self)
        d["wilson95"] = list(self.wilson95)
        if not timing:
            d.pop("wall_time")
        return d

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.to_dict(timing), indent=2, sort_keys=True) + "\n"

    def csv_row(self) -> list:
        return [self.family, self.N, self.K, self.q, self.channel, self.trials, self.seed,
                int(self.resample_generator), self.errors, _g(self.p_hat),
                _g(self.wilson95[0]), _g(self.wilson95[1]),
                "" if self.reference is None else _g(self.reference),
                int(bool(self.verdict.get("passed")))]


def _g(x: float) -> str:
    return format(float(x), ".12g")


def wilson_interval(errors: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(errors, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def worker_count() -> int:
    env = os.environ.get(THREADS_ENV)
    n = os.cpu_count() or 1
    if env:
        n = min(n, max(1, int(env)))
    return n


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, chunk)))


def _generator_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))


# --- erasure weight law and analytic references ---------------------------------------

def weight_distribution(N: int, ch: ChannelSpec) -> np.ndarray:
    """P{w(e) = m} for m = 0..N."""
    if isinstance(ch, Memoryless):
        return np.exp(analytics.log_received_pmf(N, float(ch.pi)))[::-1].copy()
    if isinstance(ch, GilbertElliott):
        trans = np.array([[1 - ch.p_gb, ch.p_gb], [ch.p_bg, 1 - ch.p_bg]])
        erase = np.array([ch.pi_good, ch.pi_bad])
        # dist[m, s]: probability of m erasures so far and current state s
        dist = np.zeros((N + 1, 2))
        dist[0] = [1 - ch.stationary_bad, ch.stationary_bad]
        for j in range(N):
            if j:
                dist = dist @ trans
            nxt = dist * (1 - erase)
            nxt[1:] += dist[:-1] * erase
            dist = nxt
        return dist.sum(axis=1)
    patterns, probs = enumerate_patterns(N, ch)
    return np.bincount(patterns.sum(axis=1), weights=probs, minlength=N + 1)


def _references(cfg: CampaignConfig, params: CodeParams, codebook=None) -> tuple:
    """(exact, lower, upper) analytic references for a campaign, None where unknown."""
    N, K, q = cfg.N, cfg.K, cfg.q
    ch = cfg.channel
    memoryless = isinstance(ch, Memoryless)
    pi = float(ch.pi) if memoryless else None
    lower = float(singleton_lower_bound(params, ch, exact=False)) if (memoryless or N <= 20) else None
    wd = weight_distribution(N, ch)
    exact = upper = None
    if cfg.family == "rs":
        exact = analytics.mds_tail_exact(N, K, pi) if memoryless else math.fsum(wd[N - K + 1:])
        if memoryless and (N - K) / N > pi:
            upper = analytics.mds_tail_bounds(N, K, pi)[1]
    elif cfg.family == "linear_random":
        if cfg.resample_generator:
            if memoryless:
                exact = analytics.lin_tail_exact(N, K, q, pi)
                upper = analytics.lin_error_bound(N, K, q, pi)
            else:
                terms = list(wd[N - K + 1:])
                terms += [wd[m] * analytics.lin_conditional_error(N, K, m, q)[0]
                          for m in range(N - K + 1)]
                exact = math.fsum(terms)
    elif codebook is not None and N <= 20:
        exact = float(exact_ml_error(codebook, ch, exact=False))
    return exact, lower, upper


# --- chunk workers ---------------------------------------------------------------------

def _run_linear_chunk(cfg, params, G_fixed, chunk, n):
    F = params.field
    rng = chunk_rng(cfg.seed, chunk)
    msgs = F.sample_uniform(rng, (n, cfg.K))
    erased = cfg.channel.sample(cfg.N, n, rng)
    if G_fixed is None:
        G = F.sample_uniform(rng, (n, cfg.K, cfg.N))
    else:
        G = G_fixed
    words = _kernels.encode_batch(F, msgs, G, cfg.backend)
    y = np.where(erased, 0, words)
    status, decoded, _ = _kernels.solve_batch(F, G, y, erased, cfg.backend)
    ok = status == _kernels.OK
    wrong = int(np.count_nonzero(ok & np.any(decoded != msgs, axis=1)))
    counts = np.bincount(status, minlength=4)
    violations = {"misdecoded": wrong, "inconsistent": int(counts[_kernels.INCONSISTENT])}
    if cfg.family == "rs":
        too_many = erased.sum(axis=1) > cfg.N - cfg.K
        violations["rs_failure_mismatch"] = int(np.count_nonzero(too_many != ~ok))
    return counts, violations


def _run_oracle_chunk(cfg, params, cb_fixed, chunk, n):
    rng = chunk_rng(cfg.seed, chunk)
    errors = 0
    for _ in range(n):
        cb = random_codebook(params, rng) if cb_fixed is None else cb_fixed
        sent = int(rng.integers(len(cb)))
        y, e = transmit(cb.words[sent], cfg.channel, rng)
        if ml_decode(cb, y, e, rng) != sent:
            errors += 1
    return errors


def run_campaign(cfg: CampaignConfig) -> CampaignResult:
    """Simulate ``cfg.trials`` transmissions and tally decoder failures.

    Decoder failures are counted, never raised.  Invariant breaches (a
    linear decoder returning the wrong message, an RS failure that does not
    coincide with more than N-K erasures) are recorded and raise
    :class:`InvariantViolation` after the tally.
    """
    t0 = time.perf_counter()
    params = CodeParams(cfg.N, cfg.K, field_of_order(cfg.q))
    sizes = [min(CHUNK, cfg.trials - s) for s in range(0, cfg.trials, CHUNK)]
    codebook = None
    breakdown: dict = {}
    violations: dict = {}
    if cfg.family == "random_oracle_scale":
        if not cfg.resample_generator:
            codebook = random_codebook(params, _generator_rng(cfg.seed))
        job = lambda c: _run_oracle_chunk(cfg, params, codebook, c, sizes[c])  # noqa: E731
        with ThreadPoolExecutor(worker_count()) as pool:
            errs = list(pool.map(job, range(len(sizes))))
        errors = int(sum(errs))
        breakdown["ml_error"] = errors
    else:
        if cfg.family == "rs":
            G = rs_code(params).generator.entries
        elif not cfg.resample_generator:
            G = linear_random_generator(params, _generator_rng(cfg.seed)).entries
        else:
            G = None
        job = lambda c: _run_linear_chunk(cfg, params, G, c, sizes[c])  # noqa: E731
        with ThreadPoolExecutor(worker_count()) as pool:
            parts = list(pool.map(job, range(len(sizes))))
        counts = np.sum([p[0] for p in parts], axis=0)
        for key in parts[0][1]:
            violations[key] = int(sum(p[1][key] for p in parts))
        if cfg.family == "rs":
            breakdown["too_many_erasures"] = int(counts[_kernels.NOT_ENOUGH_SYMBOLS])
        else:
            breakdown["not_enough_symbols"] = int(counts[_kernels.NOT_ENOUGH_SYMBOLS])
        breakdown["rank_deficient"] = int(counts[_kernels.RANK_DEFICIENT])
        errors = int(counts[1:].sum())
    exact, lower, upper = _references(cfg, params, codebook)
    result = CampaignResult(
        family=cfg.family, N=cfg.N, K=cfg.K, q=cfg.q, channel=cfg.channel.describe(),
        trials=cfg.trials, seed=cfg.seed, resample_generator=cfg.resample_generator,
        errors=errors, breakdown=breakdown, p_hat=errors / cfg.trials,
        wilson95=wilson_interval(errors, cfg.trials), reference=exact,
        lower_bound=lower, upper_bound=upper, invariant_violations=violations,
    )
    result.verdict = compare_to_analytic(result)
    result.wall_time = time.perf_counter() - t0
    if any(violations.values()):
        raise InvariantViolation(f"decoder invariants broken: {violations}")
    return result


def compare_to_analytic(result: CampaignResult, references: dict | None = None,
                        z: float = 3.0) -> dict:
    """Judge a campaign against exact values and bounds.

    ``references`` may carry ``N``, ``K``, ``q`` (checked against the result)
    and any of ``exact``, ``lower``, ``upper``; missing values fall back to
    those stored on the result.  The exact value must sit inside the Wilson
    interval at ``z`` standard deviations; bounds are violated only when
    crossed by more than 4 sigma.  When the expected error rate is below
    10 / trials the campaign is flagged undetectable instead of failed.
    """
    refs = dict(references or {})
    for key in ("N", "K", "q"):
        if key in refs and refs[key] != getattr(result, key):
            raise ParamMismatch(f"{key}: reference {refs[key]} != result {getattr(result, key)}")
    exact = refs.get("exact", result.reference)
    lower = refs.get("lower", result.lower_bound)
    upper = refs.get("upper", result.upper_bound)
    n = result.trials
    p = result.p_hat
    conf = math.erf(z / math.sqrt(2))
    lo, hi = wilson_interval(result.errors, n, conf)
    verdict = {"z": z, "diagnostics": []}
    expected = exact if exact is not None else upper
    verdict["undetectable"] = expected is not None and expected < 10 / n
    if exact is not None:
        verdict["exact_inside"] = lo <= exact <= hi
        if not verdict["exact_inside"] and not verdict["undetectable"]:
            verdict["diagnostics"].append(
                f"exact value {exact:.6g} outside [{lo:.6g}, {hi:.6g}] at z={z}")
    if upper is not None:
        ub = min(max(upper, 0.0), 1.0)
        sigma = math.sqrt(ub * (1 - ub) / n)
        verdict["below_upper"] = p <= upper + 4 * sigma
        if not verdict["below_upper"]:
            verdict["diagnostics"].append(f"p_hat {p:.6g} exceeds upper bound {upper:.6g} by > 4 sigma")
    if lower is not None:
        lb = min(max(lower, 0.0), 1.0)
        sigma = math.sqrt(lb * (1 - lb) / n)
        verdict["above_lower"] = p >= lower - 4 * sigma
        if not verdict["above_lower"]:
            verdict["diagnostics"].append(f"p_hat {p:.6g} below lower bound {lower:.6g} by > 4 sigma")
    exact_ok = verdict.get("exact_inside", True) or verdict["undetectable"]
    verdict["passed"] = bool(exact_ok and verdict.get("below_upper", True)
                             and verdict.get("above_lower", True)
                             and not any(result.invariant_violations.values()))
    return verdict
