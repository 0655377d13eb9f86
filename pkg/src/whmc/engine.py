"""Path-functional simulation from the factor laws.

One simulation step draws S (a supremum-factor variate, >= 0) and then I
(minus an infimum-factor variate, <= 0) and advances

    V <- V + S + I                      terminal value
    J <- max(J, V_prev + S)             running max (exact pair law with V)
    K <- min(K, V)                      running min, positively biased
    Jt <- max(Jt, V)                    running max, negatively biased
    Kt <- min(Kt, V_prev + I)           running min (exact pair law with V)

With n steps at rate lam = n/t, (V, J) is distributed as the process and its
supremum at a Gamma(n, n/t) time; the biased triple variants bound two-sided
functionals from both sides.

The compound-Poisson extension thins a rate lam+gamma clock: each step is
"marked" with probability lam/(lam+gamma) and unmarked steps add an extra
jump to V; a path finishes when n marked steps have accumulated.

Randomness: a counter-based Philox generator per fixed-size path chunk
(spawned deterministically from the run seed), variates consumed in the
fixed order S, I, Bernoulli, jump within each step. Results are therefore
bit-reproducible for a given (seed, chunk layout) regardless of worker
count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import ndtri

from .factorization import FactorizationPair, FactorLaw, factor_laws
from .models import LevyModel

__all__ = [
    "SimConfig",
    "PathFunctionalSample",
    "Estimate",
    "JumpAugmentation",
    "two_sided_exponential",
    "normal_jumps",
    "empirical_jumps",
    "simulate_pair",
    "simulate_triple",
    "simulate_jump_augmented",
    "pair_sampler",
    "triple_sampler",
    "jump_augmented_sampler",
    "estimate_functional",
    "convergence_study",
    "stream_samples_csv",
]

_UCLIP = 1e-16


@dataclass(frozen=True)
class SimConfig:
    """Monte-Carlo run configuration; lam = n_steps / t is the factor rate."""

    t: float = 1.0
    n_steps: int = 100
    n_paths: int = 100_000
    seed: int = 0
    truncation: int = 128
    chunk_size: int = 1 << 16
    workers: int = 1

    def __post_init__(self):
        if self.t <= 0 or self.n_steps < 1 or self.n_paths < 1:
            raise ValueError("t > 0, n_steps >= 1, n_paths >= 1 required")

    @property
    def lam(self) -> float:
        return self.n_steps / self.t


@dataclass(frozen=True)
class PathFunctionalSample:
    """One realization of the five path functionals."""

    V: float
    J: float
    K: float
    Jt: float
    Kt: float


@dataclass(frozen=True)
class Estimate:
    value: float
    std_error: float
    n_paths: int
    n_steps: int

    def within(self, target: float, n_se: float = 4.0) -> bool:
        return abs(self.value - target) <= n_se * self.std_error


# --------------------------------------------------------------------------- #
# jump size distributions for the compound-Poisson extension
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class JumpAugmentation:
    """Poisson intensity gamma plus a quantile-transform jump sampler."""

    gamma: float
    jump_ppf: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")


def normal_jumps(mu: float, sigma: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda u: mu + sigma * ndtri(u)


def two_sided_exponential(p_up: float, eta_up: float, eta_down: float):
    """Kou-style jump law: up Exp(eta_up) w.p. p_up, else minus Exp(eta_down)."""
    if not (0.0 <= p_up <= 1.0) or eta_up <= 0 or eta_down <= 0:
        raise ValueError("need p_up in [0,1], eta_up > 0, eta_down > 0")
    q = 1.0 - p_up

    def ppf(u):
        down = u < q
        x = np.where(
            down,
            np.log(np.maximum(u, 1e-300) / max(q, 1e-300)) / eta_down,
            -np.log(np.maximum((1.0 - u) / max(p_up, 1e-300), 1e-300)) / eta_up,
        )
        return x

    return ppf


def empirical_jumps(values: Sequence[float], probs: Sequence[float]):
    v = np.asarray(values, dtype=float)
    p = np.asarray(probs, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("probs must be nonnegative and sum to 1")
    cum = np.cumsum(p)
    return lambda u: v[np.searchsorted(cum, u, side="right").clip(0, len(v) - 1)]


# --------------------------------------------------------------------------- #
# batch kernels
# --------------------------------------------------------------------------- #

def _draw(law: FactorLaw, rng, m: int) -> np.ndarray:
    u = np.clip(rng.random(m), _UCLIP, 1.0 - _UCLIP)
    return law.quantile(u)


def _pair_chunk(pair: FactorizationPair, n: int, rng, m: int):
    V = np.zeros(m)
    J = np.zeros(m)
    for _ in range(n):
        S = _draw(pair.sup_law, rng, m)
        I = -_draw(pair.inf_law, rng, m)
        np.maximum(J, V + S, out=J)
        V += S + I
    return V, J


def _triple_chunk(pair: FactorizationPair, n: int, rng, m: int):
    V = np.zeros(m)
    J = np.zeros(m)
    K = np.zeros(m)
    Jt = np.zeros(m)
    Kt = np.zeros(m)
    for _ in range(n):
        S = _draw(pair.sup_law, rng, m)
        I = -_draw(pair.inf_law, rng, m)
        np.maximum(J, V + S, out=J)
        np.minimum(Kt, V + I, out=Kt)
        V += S + I
        np.minimum(K, V, out=K)
        np.maximum(Jt, V, out=Jt)
    return V, J, K, Jt, Kt


def _jump_chunk(pair: FactorizationPair, aug: JumpAugmentation, n: int,
                lam: float, rng, m: int):
    """Thinned recursion; pair must be built at rate lam + gamma."""
    if aug.gamma == 0.0:
        # degenerate thinning: identical stream discipline to the plain pair
        V, J = _pair_chunk(pair, n, rng, m)
        return V, J, np.full(m, n, dtype=np.int64)
    p_mark = lam / (lam + aug.gamma)
    V = np.zeros(m)
    J = np.zeros(m)
    T = np.zeros(m, dtype=np.int64)
    marks = np.zeros(m, dtype=np.int64)
    active = np.ones(m, dtype=bool)
    while np.any(active):
        S = _draw(pair.sup_law, rng, m)
        I = -_draw(pair.inf_law, rng, m)
        u_mark = rng.random(m)
        u_jump = np.clip(rng.random(m), _UCLIP, 1.0 - _UCLIP)
        xi = aug.jump_ppf(u_jump)
        marked = u_mark < p_mark
        Vp = V.copy()
        step = S + I + np.where(marked, 0.0, xi)
        V = np.where(active, V + step, V)
        J = np.where(active, np.maximum(np.maximum(J, Vp + S), V), J)
        T = T + active
        marks = marks + (active & marked)
        active = marks < n
    return V, J, T


# --------------------------------------------------------------------------- #
# single-draw operations
# --------------------------------------------------------------------------- #

def sample_gamma_time(n: int, lam: float, rng, m: int = 1):
    """Diagnostic draw of the randomized horizon (sum of n Exp(lam)).

    The simulation itself never needs it; the per-step recursions already
    realize the joint law at this horizon."""
    g = rng.standard_gamma(float(n), size=m) / lam
    return float(g[0]) if m == 1 else g


def simulate_pair(pair_laws: FactorizationPair, n: int, rng):
    """One draw of (V, J) after n steps."""
    V, J = _pair_chunk(pair_laws, n, rng, 1)
    return float(V[0]), float(J[0])


def simulate_triple(pair_laws: FactorizationPair, n: int, rng) -> PathFunctionalSample:
    V, J, K, Jt, Kt = _triple_chunk(pair_laws, n, rng, 1)
    return PathFunctionalSample(float(V[0]), float(J[0]), float(K[0]),
                                float(Jt[0]), float(Kt[0]))


def simulate_jump_augmented(pair_laws_at_lambda_plus_gamma: FactorizationPair,
                            aug: JumpAugmentation, n: int, lam: float, rng):
    V, J = _jump_chunk(pair_laws_at_lambda_plus_gamma, aug, n, lam, rng, 1)
    return float(V[0]), float(J[0])


# --------------------------------------------------------------------------- #
# chunked estimation
# --------------------------------------------------------------------------- #

def pair_sampler(pair: FactorizationPair, n: int):
    def run(rng, m):
        V, J = _pair_chunk(pair, n, rng, m)
        return {"V": V, "J": J}
    return run


def triple_sampler(pair: FactorizationPair, n: int):
    def run(rng, m):
        V, J, K, Jt, Kt = _triple_chunk(pair, n, rng, m)
        return {"V": V, "J": J, "K": K, "Jt": Jt, "Kt": Kt}
    return run


def jump_augmented_sampler(pair: FactorizationPair, aug: JumpAugmentation,
                           n: int, lam: float):
    def run(rng, m):
        V, J = _jump_chunk(pair, aug, n, lam, rng, m)
        return {"V": V, "J": J}
    return run


def _chunk_layout(config: SimConfig):
    sizes = []
    left = config.n_paths
    while left > 0:
        take = min(config.chunk_size, left)
        sizes.append(take)
        left -= take
    children = np.random.SeedSequence(config.seed).spawn(len(sizes))
    return sizes, children


def _chunk_rng(child):
    return np.random.Generator(np.random.Philox(child))


def estimate_functional(sampler, payoff, config: SimConfig) -> Estimate:
    """Mean and standard error of payoff(sample-batch) over config.n_paths.

    Non-finite payoff values are rejected and counted; more than 0.1%
    rejections aborts the run. Accumulation is per-chunk in chunk order, so
    results are bit-identical for a fixed (seed, chunk layout) regardless of
    worker count.
    """
    sizes, children = _chunk_layout(config)

    def one(args):
        size, child = args
        vals = np.asarray(payoff(sampler(_chunk_rng(child), size)), dtype=float)
        good = np.isfinite(vals)
        v = vals[good]
        return v.sum(), np.square(v).sum(), good.sum(), size - good.sum()

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(one, zip(sizes, children)))
    else:
        parts = [one(a) for a in zip(sizes, children)]

    s = ss = 0.0
    n_ok = n_rej = 0
    for ps, pss, pn, pr in parts:      # merged in chunk order
        s += ps
        ss += pss
        n_ok += int(pn)
        n_rej += int(pr)
    if n_rej > 0.001 * config.n_paths:
        raise RuntimeError(
            f"{n_rej} non-finite payoff values out of {config.n_paths} paths"
        )
    mean = s / n_ok
    var = max(ss / n_ok - mean * mean, 0.0)
    return Estimate(value=mean, std_error=math.sqrt(var / n_ok),
                    n_paths=n_ok, n_steps=config.n_steps)


def estimate_many(sampler, payoffs: dict, config: SimConfig) -> dict:
    """Estimates for several payoffs from one simulation pass.

    payoffs maps name -> callable(batch) -> array; rejection accounting is
    per payoff. Chunk discipline identical to estimate_functional.
    """
    sizes, children = _chunk_layout(config)
    names = list(payoffs)

    def one(args):
        size, child = args
        batch = sampler(_chunk_rng(child), size)
        out = []
        for nm in names:
            vals = np.asarray(payoffs[nm](batch), dtype=float)
            good = np.isfinite(vals)
            v = vals[good]
            out.append((v.sum(), np.square(v).sum(), good.sum(), size - good.sum()))
        return out

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(one, zip(sizes, children)))
    else:
        parts = [one(a) for a in zip(sizes, children)]

    result = {}
    for j, nm in enumerate(names):
        s = ss = 0.0
        n_ok = n_rej = 0
        for chunk in parts:
            ps, pss, pn, pr = chunk[j]
            s += ps
            ss += pss
            n_ok += int(pn)
            n_rej += int(pr)
        if n_rej > 0.001 * config.n_paths:
            raise RuntimeError(f"{n_rej} non-finite values for payoff {nm!r}")
        mean = s / n_ok
        var = max(ss / n_ok - mean * mean, 0.0)
        result[nm] = Estimate(mean, math.sqrt(var / n_ok), n_ok, config.n_steps)
    return result


def convergence_study(model: LevyModel, payoff, t: float,
                      n_list: Sequence[int], n_paths: int = 100_000,
                      seed: int = 0, truncation: int = 128,
                      workers: int = 1):
    """Per-n estimates of E payoff(V, J) for bias-rate fitting.

    Returns a list of (n, value, std_error) rows; the factor pair for each n
    is built at rate n/t.
    """
    rows = []
    for n in n_list:
        pair = factor_laws(model, n / t, K=truncation)
        cfg = SimConfig(t=t, n_steps=int(n), n_paths=n_paths, seed=seed,
                        truncation=truncation, workers=workers)
        est = estimate_functional(pair_sampler(pair, int(n)), payoff, cfg)
        rows.append((int(n), est.value, est.std_error))
    return rows


def stream_samples_csv(sampler, config: SimConfig, path,
                       columns: Sequence[str] = ("V", "J", "K", "Jt", "Kt")):
    """Write one row per path with the requested functional columns."""
    sizes, children = _chunk_layout(config)
    names = None
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for size, child in zip(sizes, children):
            batch = sampler(_chunk_rng(child), size)
            if names is None:
                names = [c for c in columns if c in batch]
                writer.writerow(names)
            writer.writerows(np.column_stack([batch[c] for c in names]).tolist())
    return path
