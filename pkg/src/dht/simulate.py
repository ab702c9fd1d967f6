"""Block-memoryless encoding + typicality detection, sampled and exact.

Each trial draws j source blocks, encodes every block independently with
the configured stochastic encoder, transmits over the memoryless channel,
and accepts the null hypothesis iff the empirical type of the j received
super-letters (Y^n, V^k, Z^k) is robustly typical for the null output
distribution at width delta_j = delta0 * j**(-delta_exponent).

Type-2 errors decay exponentially, so Monte Carlo is complemented by exact
enumeration of typical types with their alternative-hypothesis mass
computed from log-multinomial weights.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

from .channel import cell_budget
from .errors import (
    BudgetExceeded,
    DegenerateTrialCount,
    HelpersExceeded,
    InsufficientData,
    InvalidDistribution,
)
from .multiletter import ORACLE_CELL_BUDGET, EncoderSpec, _compose
from .rng import TAG_SIMULATE, derive_rng
from .singleletter import TaciInstance

CHUNK_TRIALS = 4096
H0, H1 = "H0", "H1"


@dataclass(frozen=True)
class SimConfig:
    instance: TaciInstance
    encoder: EncoderSpec
    j_values: tuple[int, ...]
    delta0: float = 0.3
    delta_exponent: float = 1.0 / 3.0
    trials: int = 10_000
    seed: int = 0
    budget: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "j_values", tuple(int(j) for j in self.j_values))
        if self.instance.L != 1:
            raise HelpersExceeded("simulation supports a single observer")
        if self.trials < 1:
            raise DegenerateTrialCount("need at least one trial")
        js = self.j_values
        if not js or any(j < 1 for j in js) or any(b <= a for a, b in zip(js, js[1:])):
            raise InvalidDistribution("j_values must be strictly increasing positive integers")
        if not self.delta0 > 0:
            raise InvalidDistribution("delta0 must be positive")
        if not 0 < self.delta_exponent < 0.5:
            raise InvalidDistribution("delta_exponent must lie in (0, 1/2)")

    def delta_j(self, j: int) -> float:
        return self.delta0 * j ** (-self.delta_exponent)

    @staticmethod
    def default_encoder(instance: TaciInstance, k: int = 1) -> EncoderSpec:
        ch = instance.channels[0]
        n = int(math.floor(instance.tau * k + 1e-12))
        return EncoderSpec.identity_like(k, n, instance.p_joint.axes[0].size, ch.input.size)


@dataclass
class SimEstimate:
    j: int
    delta: float
    trials: int
    alpha_hat: float | None = None
    alpha_ci: float | None = None
    beta_hat: float | None = None
    beta_ci: float | None = None
    exact_beta_exponent: float | None = None


@dataclass(frozen=True)
class ExactBetaResult:
    beta: float
    exponent: float
    typical_count: int
    min_type_divergence: float


@dataclass(frozen=True)
class ExponentFit:
    slope: float  # extrapolated exponent, bits per source sample
    intercept: float  # finite-block 1/j correction coefficient
    j_range: tuple[int, int]
    r_squared: float
    points_used: int


def wilson_interval(p_hat: float, n: int, z: float = 1.96) -> tuple[float, float]:
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (p_hat + z2 / (2 * n)) / denom
    margin = z * math.sqrt(p_hat * (1 - p_hat) / n + z2 / (4 * n * n)) / denom
    return max(centre - margin, 0.0), min(centre + margin, 1.0)


class _SimContext:
    """Frozen sampling tables shared by every trial of a configuration."""

    def __init__(self, cfg: SimConfig):
        from .channel import super_channel
        from .infomath import grouped_power

        inst = cfg.instance
        enc = cfg.encoder
        limit = cell_budget(cfg.budget, default=ORACLE_CELL_BUDGET)
        p_y, q_y, _ = _compose(inst, (enc,), cfg.budget)
        if p_y.size > limit:
            raise BudgetExceeded("super-letter alphabet exceeds the cell budget")
        self.k, self.n = enc.k, enc.n
        self.n_y, self.n_v, self.n_z = p_y.shape
        self.p_w = p_y.reshape(-1)
        self.q_w = q_y.reshape(-1)
        self.m = self.p_w.size

        p_k = grouped_power(inst.p_joint, self.k)
        q_k = grouped_power(inst.q_joint, self.k)
        self.n_u = p_k.axes[0].size
        self.src_cum = {
            H0: np.cumsum(p_k.probs.reshape(-1)),
            H1: np.cumsum(q_k.probs.reshape(-1)),
        }
        self.enc_cum = np.cumsum(enc.matrix, axis=1)
        wn = (
            super_channel(inst.channels[0], self.n, budget=cfg.budget).matrix
            if self.n >= 1
            else np.ones((1, 1))
        )
        self.ch_cum = np.cumsum(wn, axis=1)


def _categorical(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, cum.size - 1).astype(np.int64)


def _row_categorical(cum_rows: np.ndarray, rows: np.ndarray, u: np.ndarray) -> np.ndarray:
    out = (cum_rows[rows] <= u[..., None]).sum(axis=-1)
    return np.minimum(out, cum_rows.shape[1] - 1).astype(np.int64)


def _typical_mask(counts: np.ndarray, j: int, p_w: np.ndarray, delta: float) -> np.ndarray:
    freqs = counts / j
    ok = np.all(np.abs(freqs - p_w[None, :]) <= delta + 1e-12, axis=1)
    off_support = p_w[None, :] == 0
    ok &= ~np.any((counts > 0) & off_support, axis=1)
    return ok


def run_trials(cfg: SimConfig, hypothesis: str, threads: int = 1) -> list[SimEstimate]:
    """Monte-Carlo error estimates per block count for one hypothesis.

    Under H0 the type-1 error (rejection rate) is filled in; under H1 the
    type-2 error (acceptance rate).  Identical seeds give identical results
    for any thread count: every fixed-size chunk of trials owns a stream
    derived from (seed, hypothesis, j, chunk index).
    """
    if hypothesis not in (H0, H1):
        raise InvalidDistribution(f"hypothesis must be {H0!r} or {H1!r}")
    ctx = _SimContext(cfg)
    hyp_i = 0 if hypothesis == H0 else 1
    sizes = [CHUNK_TRIALS] * (cfg.trials // CHUNK_TRIALS)
    if cfg.trials % CHUNK_TRIALS:
        sizes.append(cfg.trials % CHUNK_TRIALS)

    out: list[SimEstimate] = []
    for j in cfg.j_values:
        delta = cfg.delta_j(j)

        def chunk_accepts(args):
            idx, n_trials = args
            rng = derive_rng(cfg.seed, TAG_SIMULATE, hyp_i, j, idx)
            counts = _draw_counts(ctx, hypothesis, j, n_trials, rng)
            return int(_typical_mask(counts, j, ctx.p_w, delta).sum())

        jobs = list(enumerate(sizes))
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                accepts = sum(pool.map(chunk_accepts, jobs))
        else:
            accepts = sum(map(chunk_accepts, jobs))

        rate = accepts / cfg.trials
        lo, hi = wilson_interval(rate if hyp_i else 1 - rate, cfg.trials)
        half = (hi - lo) / 2
        est = SimEstimate(j=j, delta=delta, trials=cfg.trials)
        if hypothesis == H0:
            est.alpha_hat = 1 - rate
            est.alpha_ci = half
        else:
            est.beta_hat = rate
            est.beta_ci = half
        out.append(est)
    return out


def _draw_counts(ctx: _SimContext, hypothesis: str, j: int, n_trials: int, rng) -> np.ndarray:
    size = (n_trials, j)
    src = _categorical(ctx.src_cum[hypothesis], rng.random(size))
    blk_v = ctx.n_v * ctx.n_z
    u_idx = src // blk_v
    v_idx = (src % blk_v) // ctx.n_z
    z_idx = src % ctx.n_z
    x_idx = _row_categorical(ctx.enc_cum, u_idx, rng.random(size))
    y_idx = _row_categorical(ctx.ch_cum, x_idx, rng.random(size))
    w_idx = (y_idx * ctx.n_v + v_idx) * ctx.n_z + z_idx
    offsets = np.arange(n_trials, dtype=np.int64)[:, None] * ctx.m
    counts = np.bincount((w_idx + offsets).ravel(), minlength=n_trials * ctx.m)
    return counts.reshape(n_trials, ctx.m)


def exact_typical_set_beta(
    cfg: SimConfig, j: int, type_budget: int = 20_000_000
) -> ExactBetaResult:
    """Alternative-hypothesis mass of the typical set by exact type enumeration.

    Enumerates every type of length j inside the per-coordinate typicality
    windows and sums exact log-multinomial masses.  Returns beta, the
    per-source-sample exponent -log2(beta)/(k*j), the number of typical
    types, and the smallest divergence D(type || Q) among them.
    """
    ctx = _SimContext(cfg)
    delta = cfg.delta_j(j)
    support = np.flatnonzero(ctx.p_w > 0)
    p = ctx.p_w[support]
    q = ctx.q_w[support]
    m = support.size
    lo = np.maximum(np.ceil((p - delta) * j - 1e-12 * j - 1e-9), 0).astype(np.int64)
    hi = np.minimum(np.floor((p + delta) * j + 1e-12 * j + 1e-9), j).astype(np.int64)
    if np.any(lo > hi):
        return ExactBetaResult(0.0, float("inf"), 0, float("nan"))
    if m == 1:
        counts = np.array([[j]]) if lo[0] <= j <= hi[0] else np.empty((0, 1), dtype=np.int64)
    else:
        head_sizes = (hi[:-1] - lo[:-1] + 1).astype(np.int64)
        volume = int(np.prod(head_sizes.astype(np.float64)))
        if volume > type_budget:
            raise BudgetExceeded(
                f"typicality window holds up to {volume} types, budget {type_budget}"
            )
        grids = np.meshgrid(
            *[np.arange(lo[i], hi[i] + 1) for i in range(m - 1)], indexing="ij"
        )
        head = np.stack([g.ravel() for g in grids], axis=1)
        last = j - head.sum(axis=1)
        ok = (last >= lo[-1]) & (last <= hi[-1])
        counts = np.concatenate([head[ok], last[ok, None]], axis=1)
    if counts.shape[0] == 0:
        return ExactBetaResult(0.0, float("inf"), 0, float("nan"))

    log_mass = (
        gammaln(j + 1.0)
        - gammaln(counts + 1.0).sum(axis=1)
        + (counts * np.log(q)[None, :]).sum(axis=1)
    )
    ln_beta = float(logsumexp(log_mass))
    beta = float(np.exp(ln_beta))
    exponent = -ln_beta / np.log(2.0) / (ctx.k * j)
    freqs = counts / j
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(freqs > 0, freqs * np.log2(np.where(freqs > 0, freqs, 1.0) / q[None, :]), 0.0)
    min_div = float(terms.sum(axis=1).min())
    return ExactBetaResult(beta, exponent, int(counts.shape[0]), min_div)


def merge_estimates(
    h0: list[SimEstimate], h1: list[SimEstimate], exact: dict[int, float] | None = None
) -> list[SimEstimate]:
    """Combine per-hypothesis runs into one row per block count."""
    by_j = {e.j: e for e in h0}
    out = []
    for e1 in h1:
        e0 = by_j.get(e1.j)
        merged = SimEstimate(
            j=e1.j,
            delta=e1.delta,
            trials=e1.trials,
            alpha_hat=None if e0 is None else e0.alpha_hat,
            alpha_ci=None if e0 is None else e0.alpha_ci,
            beta_hat=e1.beta_hat,
            beta_ci=e1.beta_ci,
            exact_beta_exponent=(exact or {}).get(e1.j),
        )
        out.append(merged)
    return out


def simulate_errors(cfg: SimConfig, threads: int = 1, exact: bool = True) -> list[SimEstimate]:
    """Both error estimates per block count, plus exact exponents when affordable."""
    h0 = run_trials(cfg, H0, threads=threads)
    h1 = run_trials(cfg, H1, threads=threads)
    exacts: dict[int, float] = {}
    if exact:
        for j in cfg.j_values:
            try:
                exacts[j] = exact_typical_set_beta(cfg, j).exponent
            except BudgetExceeded:
                continue
    return merge_estimates(h0, h1, exacts)


def fit_exponent(estimates: list[SimEstimate], k: int) -> ExponentFit:
    """Extrapolate -log2(beta)/(k*j) against 1/j to the large-block limit.

    Only block counts with at least 10 observed type-2 errors enter the fit;
    fewer than three usable points raises InsufficientData.
    """
    usable = [
        e
        for e in estimates
        if e.beta_hat is not None and e.beta_hat * e.trials >= 10 - 1e-9
    ]
    if len(usable) < 3:
        raise InsufficientData(f"{len(usable)} usable points, need >= 3")
    x = np.array([1.0 / e.j for e in usable])
    y = np.array([-math.log2(max(e.beta_hat, 1e-300)) / (k * e.j) for e in usable])
    coef = np.polyfit(x, y, 1)
    pred = np.polyval(coef, x)
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    flat = ss_tot <= 1e-16 * (1.0 + float((y**2).sum()))
    r2 = 1.0 if flat else 1.0 - ss_res / ss_tot
    return ExponentFit(
        slope=float(coef[1]),
        intercept=float(coef[0]),
        j_range=(usable[0].j, usable[-1].j),
        r_squared=r2,
        points_used=len(usable),
    )
