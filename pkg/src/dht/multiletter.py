"""Brute-force block-level oracle at tiny blocklengths.

theta(k, tau) maximizes D(P_{Y^n V^k Z^k} || Q_{Y^n V^k Z^k}) / k over
encoders U^k -> X^n with n = floor(tau * k).  The divergence is jointly
convex in the pair of composed output distributions and each of those is
affine in an encoder's law, so the maximum is attained at deterministic
encoders; those are enumerated exactly, with an optional stochastic grid
and a projected-gradient polish as cross-checks.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channel import Dmc, cell_budget, super_channel
from .errors import (
    AxisMismatch,
    BlocklengthViolation,
    BudgetExceeded,
    HelpersExceeded,
)
from .infomath import LOG2E, Alphabet, CondPmf, grouped_power
from .singleletter import TaciInstance

ORACLE_CELL_BUDGET = 10**6


@dataclass(frozen=True)
class EncoderSpec:
    """Stochastic block encoder from U^k to X^n for one observer."""

    k: int
    n: int
    law: CondPmf

    def __post_init__(self):
        if self.k < 1 or self.n < 0:
            raise BlocklengthViolation("need k >= 1 and n >= 0")

    @property
    def matrix(self) -> np.ndarray:
        return self.law.matrix

    @staticmethod
    def from_matrix(k: int, n: int, rows: np.ndarray, u_size: int, x_size: int) -> "EncoderSpec":
        u = Alphabet("u_block", u_size**k)
        x = Alphabet("x_block", max(x_size**n, 1))
        return EncoderSpec(k, n, CondPmf((u,), (x,), rows))

    @staticmethod
    def deterministic(k: int, n: int, assignment: np.ndarray, u_size: int, x_size: int) -> "EncoderSpec":
        n_in = u_size**k
        n_out = max(x_size**n, 1)
        rows = np.zeros((n_in, n_out))
        rows[np.arange(n_in), np.asarray(assignment, dtype=np.int64)] = 1.0
        return EncoderSpec.from_matrix(k, n, rows, u_size, x_size)

    @staticmethod
    def identity_like(k: int, n: int, u_size: int, x_size: int) -> "EncoderSpec":
        """Symbol-wise identity on the first min(k, n) positions, constant elsewhere."""
        if x_size < u_size:
            raise AxisMismatch("identity-like encoder needs |X| >= |U|")
        n_in = u_size**k
        assignment = np.zeros(n_in, dtype=np.int64)
        for u_block in range(n_in):
            digits = _digits(u_block, u_size, k)
            x_digits = [digits[j] if j < k else 0 for j in range(n)]
            assignment[u_block] = _undigits(x_digits, x_size)
        return EncoderSpec.deterministic(k, n, assignment, u_size, x_size)


def _digits(index: int, base: int, length: int) -> list[int]:
    out = []
    for _ in range(length):
        out.append(index % base)
        index //= base
    return out[::-1]  # first symbol most significant


def _undigits(digits, base: int) -> int:
    out = 0
    for d in digits:
        out = out * base + d
    return out


def _super_matrix(ch: Dmc, n: int, budget: int | None) -> np.ndarray:
    if n == 0:
        return np.ones((1, 1))
    return super_channel(ch, n, budget=budget).matrix


@dataclass
class OracleResult:
    theta_k_tau: float
    r_k: float
    best_encoder: tuple[EncoderSpec, ...]
    grid_resolution: float
    enumerated: int


@dataclass(frozen=True)
class OracleOpts:
    res: int = 16  # grid denominator per encoder-row coordinate
    grid_budget: int = 200_000
    det_budget: int = 1_000_000
    cell_budget: int | None = None
    polish_iters: int = 60
    max_helpers: int = 1
    chunk: int = 2048


def _normalize_encoders(inst: TaciInstance, encs) -> tuple[EncoderSpec, ...]:
    if isinstance(encs, EncoderSpec):
        encs = (encs,)
    encs = tuple(encs)
    if len(encs) != inst.L:
        raise AxisMismatch(f"{inst.L} observers but {len(encs)} encoders")
    if len({(e.k, e.n) for e in encs}) != 1:
        raise AxisMismatch("all encoders must share the same (k, n)")
    return encs


def _compose(inst: TaciInstance, encs: tuple[EncoderSpec, ...], budget: int | None):
    """Output-side joints (P_yvz, Q_yvz, k) with one flattened Y axis per observer."""
    k, n = encs[0].k, encs[0].n
    if n > inst.tau * k + 1e-9:
        raise BlocklengthViolation(f"n={n} exceeds tau*k={inst.tau * k}")
    limit = cell_budget(budget, default=ORACLE_CELL_BUDGET)
    y_cells = 1
    for ch in inst.channels:
        y_cells *= max(ch.output.size**n, 1)
    v_size = inst.p_joint.axis("v").size
    z_size = inst.p_joint.axis("z").size
    if y_cells * (v_size**k) * (z_size**k) > limit:
        raise BudgetExceeded(
            f"composed output joint needs {y_cells * v_size**k * z_size**k} cells, budget {limit}"
        )
    p_k = grouped_power(inst.p_joint, k)
    q_k = grouped_power(inst.q_joint, k)
    mats = []
    for l, (ch, enc) in enumerate(zip(inst.channels, encs)):
        u_size = inst.p_joint.axes[l].size
        want = (u_size**k, max(ch.input.size**n, 1))
        if enc.matrix.shape != want:
            raise AxisMismatch(f"encoder {l}: law shape {enc.matrix.shape}, want {want}")
        mats.append(enc.matrix @ _super_matrix(ch, n, budget))
    if inst.L == 1:
        p_y = np.einsum("uvz,uy->yvz", p_k.probs, mats[0])
        q_y = np.einsum("uvz,uy->yvz", q_k.probs, mats[0])
    else:
        p_y = np.einsum("abvz,am,bn->mnvz", p_k.probs, mats[0], mats[1])
        q_y = np.einsum("abvz,am,bn->mnvz", q_k.probs, mats[0], mats[1])
        p_y = p_y.reshape(-1, p_y.shape[-2], p_y.shape[-1])
        q_y = q_y.reshape(-1, q_y.shape[-2], q_y.shape[-1])
    return p_y, q_y, k


def _kl_bits(p: np.ndarray, q: np.ndarray) -> float:
    mask = p > 0
    return float((p[mask] * np.log2(p[mask] / q[mask])).sum())


def _entropy_bits(t: np.ndarray) -> float:
    t = t[t > 0]
    return float(-(t * np.log2(t)).sum())


def divergence_for_encoder(inst: TaciInstance, encs, budget: int | None = None) -> float:
    """Exact per-sample divergence D(P_{Y V Z} || Q_{Y V Z}) / k for the given encoders."""
    if inst.L > 2:
        raise HelpersExceeded("oracle composition supports at most two observers")
    encs = _normalize_encoders(inst, encs)
    p_y, q_y, k = _compose(inst, encs, budget)
    return _kl_bits(p_y, q_y) / k


def verify_compinf_identity(inst: TaciInstance, encs, budget: int | None = None):
    """Return (divergence term, residual-rate term, identity residual).

    The first term is D(P||Q)/k computed through the alternative-composition
    path, the second is H(V^k | Y^n, Z^k)/k from the null-composition path;
    for conditional-independence instances they must sum to H(V|Z).
    """
    encs = _normalize_encoders(inst, encs)
    p_y, q_y, k = _compose(inst, encs, budget)
    theta_term = _kl_bits(p_y, q_y) / k
    h_yvz = _entropy_bits(p_y)
    h_yz = _entropy_bits(p_y.sum(axis=-2))
    r_term = (h_yvz - h_yz) / k
    residual = abs(theta_term + r_term - inst.h_v_given_z)
    return theta_term, r_term, residual


def _batch_divergence(p_k, q_k, mats_batch) -> np.ndarray:
    """KL per encoder for a batch of composite (U^k x Y^n) matrices (L = 1)."""
    p_y = np.einsum("uvz,buy->byvz", p_k, mats_batch)
    q_y = np.einsum("uvz,buy->byvz", q_k, mats_batch)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p_y > 0, p_y * np.log2(np.where(p_y > 0, p_y, 1.0) / np.where(q_y > 0, q_y, 1.0)), 0.0)
    return terms.reshape(terms.shape[0], -1).sum(axis=1)


def _det_assignments(n_in: int, n_out: int):
    """Iterate deterministic maps in lexicographic order as index arrays."""
    for combo in itertools.product(range(n_out), repeat=n_in):
        yield np.array(combo, dtype=np.int64)


def theta_multiletter(inst: TaciInstance, k: int, opts: OracleOpts | None = None) -> OracleResult:
    """Best per-sample divergence over block encoders at blocklength k."""
    opts = opts or OracleOpts()
    if inst.L > opts.max_helpers:
        raise HelpersExceeded(
            f"L={inst.L} observers; raise max_helpers (currently {opts.max_helpers}) to allow"
        )
    if inst.L > 2:
        raise HelpersExceeded("oracle supports at most two observers")
    n = int(math.floor(inst.tau * k + 1e-12))
    if inst.L == 2:
        return _theta_multiletter_two(inst, k, n, opts)

    ch = inst.channels[0]
    u_size = inst.p_joint.axes[0].size
    n_in = u_size**k
    n_out = max(ch.output.size**n, 1)
    n_x = max(ch.input.size**n, 1)
    p_k = grouped_power(inst.p_joint, k)
    q_k = grouped_power(inst.q_joint, k)
    wn = _super_matrix(ch, n, opts.cell_budget)
    limit = cell_budget(opts.cell_budget, default=ORACLE_CELL_BUDGET)
    if n_out * p_k.axes[1].size * p_k.axes[2].size > limit:
        raise BudgetExceeded("composed output joint exceeds the cell budget")

    det_count = n_x**n_in
    if det_count > opts.det_budget:
        raise BudgetExceeded(
            f"{det_count} deterministic encoders exceed det_budget={opts.det_budget}"
        )

    best_val = -np.inf
    best_rows: np.ndarray | None = None
    enumerated = 0

    # deterministic maps, exact vertices of the encoder polytope
    batch_rows = []
    for assignment in _det_assignments(n_in, n_x):
        rows = np.zeros((n_in, n_x))
        rows[np.arange(n_in), assignment] = 1.0
        batch_rows.append(rows)
        if len(batch_rows) == opts.chunk:
            best_val, best_rows = _scan_batch(batch_rows, wn, p_k, q_k, best_val, best_rows)
            enumerated += len(batch_rows)
            batch_rows = []
    if batch_rows:
        best_val, best_rows = _scan_batch(batch_rows, wn, p_k, q_k, best_val, best_rows)
        enumerated += len(batch_rows)

    # stochastic grid, auto-coarsened to the budget
    res = opts.res
    while res >= 2 and _grid_size(res, n_x, n_in) > opts.grid_budget:
        res //= 2
    used_res = 0.0
    if res >= 2:
        used_res = 1.0 / res
        rows = _simplex_grid(res, n_x)
        idx = np.indices((rows.shape[0],) * n_in).reshape(n_in, -1).T
        for start in range(0, idx.shape[0], opts.chunk):
            sel = idx[start : start + opts.chunk]
            batch = rows[sel]
            best_val, best_rows = _scan_batch(list(batch), wn, p_k, q_k, best_val, best_rows)
            enumerated += sel.shape[0]

    # gradient polish from the best point (no-op at a vertex optimum)
    law = best_rows.copy()
    val = best_val
    eta = 0.25
    for _ in range(opts.polish_iters):
        grad = _divergence_gradient(law, wn, p_k.probs, q_k.probs)
        grad -= grad.mean(axis=1, keepdims=True)
        improved = False
        for _ in range(15):
            cand = _project_rows_matrix(law + eta * grad)
            cval = float(_batch_divergence(p_k.probs, q_k.probs, (cand @ wn)[None])[0])
            if cval > val + 1e-13:
                law, val = cand, cval
                eta = min(eta * 1.3, 2.0)
                improved = True
                break
            eta *= 0.5
        if not improved:
            break

    enc = EncoderSpec.from_matrix(k, n, law, u_size, ch.input.size)
    p_y, q_y, _ = _compose(inst, (enc,), opts.cell_budget)
    theta = _kl_bits(p_y, q_y) / k
    r_k = (_entropy_bits(p_y) - _entropy_bits(p_y.sum(axis=-2))) / k
    assert abs(theta + r_k - inst.h_v_given_z) <= 1e-9
    return OracleResult(theta, r_k, (enc,), used_res, enumerated)


def _scan_batch(batch_rows, wn, p_k, q_k, best_val, best_rows):
    laws = np.stack(batch_rows)
    vals = _batch_divergence(p_k.probs, q_k.probs, laws @ wn)
    i = int(np.argmax(vals))
    if vals[i] > best_val + 1e-15:
        return float(vals[i]), laws[i].copy()
    return best_val, best_rows


def _grid_size(res: int, n_out: int, n_in: int) -> int:
    per_row = math.comb(res + n_out - 1, n_out - 1)
    return per_row**n_in


def _simplex_grid(res: int, parts: int) -> np.ndarray:
    out = []
    for dividers in itertools.combinations(range(res + parts - 1), parts - 1):
        prev = -1
        counts = []
        for d in dividers:
            counts.append(d - prev - 1)
            prev = d
        counts.append(res + parts - 2 - prev)
        out.append(counts)
    return np.asarray(out, dtype=np.float64) / res


def _project_rows_matrix(m: np.ndarray) -> np.ndarray:
    v = m
    mu = np.sort(v, axis=1)[:, ::-1]
    cs = np.cumsum(mu, axis=1)
    ks = np.arange(1, v.shape[1] + 1)
    rho = ((mu * ks) > (cs - 1.0)).sum(axis=1)
    shift = (cs[np.arange(v.shape[0]), rho - 1] - 1.0) / rho
    return np.maximum(v - shift[:, None], 0.0)


def _divergence_gradient(law, wn, p_k, q_k) -> np.ndarray:
    m = law @ wn
    p_y = np.einsum("uvz,uy->yvz", p_k, m)
    q_y = np.einsum("uvz,uy->yvz", q_k, m)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.where(
            p_y > 0,
            np.log2(np.where(p_y > 0, p_y, 1.0) / np.where(q_y > 0, q_y, 1.0)),
            0.0,
        )
        ratio = np.where(q_y > 0, p_y / np.where(q_y > 0, q_y, 1.0), 0.0)
    a = np.einsum("uvz,yvz->uy", p_k, log_ratio + LOG2E)
    b = np.einsum("uvz,yvz->uy", q_k, ratio) * LOG2E
    return (a - b) @ wn.T


def _theta_multiletter_two(inst: TaciInstance, k: int, n: int, opts: OracleOpts) -> OracleResult:
    """Two observers: exact enumeration over pairs of deterministic encoders."""
    sizes = [inst.p_joint.axes[l].size for l in range(2)]
    n_ins = [s**k for s in sizes]
    n_xs = [max(ch.input.size**n, 1) for ch in inst.channels]
    total = (n_xs[0] ** n_ins[0]) * (n_xs[1] ** n_ins[1])
    if total > opts.det_budget:
        raise BudgetExceeded(f"{total} encoder pairs exceed det_budget={opts.det_budget}")
    best = (-np.inf, None, None)
    enumerated = 0
    for a1 in _det_assignments(n_ins[0], n_xs[0]):
        e1 = EncoderSpec.deterministic(k, n, a1, sizes[0], inst.channels[0].input.size)
        for a2 in _det_assignments(n_ins[1], n_xs[1]):
            e2 = EncoderSpec.deterministic(k, n, a2, sizes[1], inst.channels[1].input.size)
            val = divergence_for_encoder(inst, (e1, e2), opts.cell_budget)
            enumerated += 1
            if val > best[0] + 1e-15:
                best = (val, e1, e2)
    val, e1, e2 = best
    p_y, q_y, _ = _compose(inst, (e1, e2), opts.cell_budget)
    r_k = (_entropy_bits(p_y) - _entropy_bits(p_y.sum(axis=-2))) / k
    assert abs(val + r_k - inst.h_v_given_z) <= 1e-9
    return OracleResult(val, r_k, (e1, e2), 0.0, enumerated)
