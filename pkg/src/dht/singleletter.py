"""Single-letter exponent computation.

For one helper the optimal type-2 exponent is

    theta(tau) = max I(V;W|Z)   over stochastic maps U -> W
                 s.t. I(U;W|Z) <= tau * C,

with a cardinality bound |W| <= |U| + 4.  The optimizer is a multistart
projected-gradient ascent over the unconstrained working channel, scored by
the value obtained after mixing the channel down to the capacity budget
with a fresh constant symbol (the mixing is exactly information-linear, so
the score of any working channel is a value genuinely achieved by a
feasible auxiliary channel).  An exhaustive low-resolution grid provides a
lower-bound certificate for small helper alphabets.

For two helpers the inner bound optimizes product-form auxiliary channels
against the worst subset functional F_S; the outer bound additionally
searches jointly distributed auxiliaries with a quadratic penalty on the
per-helper Markov violations and is flagged Experimental.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .channel import CapacityResult, Dmc, capacity_blahut_arimoto
from .errors import (
    AxisMismatch,
    DhtError,
    HelpersExceeded,
    InvalidDistribution,
    QNotPositiveWarning,
    ZeroZMass,
)
from .infomath import (
    LOG2E,
    Alphabet,
    CondPmf,
    JointPmf,
    conditional_entropy,
    conditional_mutual_information,
)
from .rng import TAG_SOLVER, derive_rng

STATUS_CONVERGED = "Converged"
STATUS_GRID_ONLY = "GridOnly"
STATUS_EXPERIMENTAL = "Experimental"
STATUS_FAILED = "Failed"


def build_taci_q(p_joint: JointPmf) -> JointPmf:
    """Conditional-independence alternative: Q(u..,v,z) = P(u..|z) P(v|z) P(z).

    Every single-axis marginal of Q equals the corresponding marginal of P.
    Warns with QNotPositiveWarning if Q has zero cells.
    """
    names = p_joint.names
    if "v" not in names or "z" not in names:
        raise AxisMismatch(f"expected axes named 'v' and 'z', got {names}")
    u_names = tuple(n for n in names if n not in ("v", "z"))
    if names != u_names + ("v", "z"):
        raise AxisMismatch(f"axes must be ordered (u.., v, z), got {names}")
    p_z = p_joint.marginal(["z"]).probs
    if np.any(p_z == 0):
        raise ZeroZMass("some side-information symbol has zero probability")
    p_uz = p_joint.probs.sum(axis=-2)  # (u.., z)
    p_vz = p_joint.marginal(["v", "z"]).probs  # (v, z)
    q = p_uz[..., None, :] * (p_vz / p_z)[(None,) * len(u_names)]
    if np.any(q == 0):
        warnings.warn("derived alternative distribution has zero cells", QNotPositiveWarning)
    return JointPmf(p_joint.axes, q)


@dataclass(frozen=True)
class TaciInstance:
    """Hypothesis pair for testing against conditional independence.

    p_joint has axes (u1, .., uL, v, z); the alternative Q is derived.  One
    channel per observer; tau is the bandwidth ratio (channel uses per
    source sample).
    """

    p_joint: JointPmf
    channels: tuple[Dmc, ...]
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        names = self.p_joint.names
        want = tuple(f"u{i + 1}" for i in range(len(names) - 2)) + ("v", "z")
        if names != want:
            raise AxisMismatch(f"instance axes must be {want}, got {names}")
        if len(self.channels) != len(names) - 2:
            raise AxisMismatch(
                f"{len(names) - 2} observers but {len(self.channels)} channels"
            )
        if self.tau < 0:
            raise InvalidDistribution("bandwidth ratio tau must be >= 0")
        q = build_taci_q(self.p_joint)
        if np.any(q.probs == 0):
            raise InvalidDistribution(
                "derived alternative distribution must be strictly positive"
            )
        object.__setattr__(self, "_q_joint", q)

    @property
    def L(self) -> int:
        return len(self.channels)

    @property
    def q_joint(self) -> JointPmf:
        return self._q_joint

    @property
    def u_names(self) -> tuple[str, ...]:
        return tuple(f"u{i + 1}" for i in range(self.L))

    @cached_property
    def capacities(self) -> tuple[CapacityResult, ...]:
        return tuple(capacity_blahut_arimoto(ch) for ch in self.channels)

    def budget(self, l: int = 0) -> float:
        """Information budget tau * C_l for observer l (0-based)."""
        return self.tau * self.capacities[l].capacity

    @cached_property
    def h_v_given_z(self) -> float:
        return conditional_entropy(self.p_joint, ["v"], ["z"])

    def with_tau(self, tau: float) -> "TaciInstance":
        inst = TaciInstance(self.p_joint, self.channels, tau)
        if "capacities" in self.__dict__:
            inst.__dict__["capacities"] = self.__dict__["capacities"]
        return inst

    def helper_marginal(self, l: int) -> "TaciInstance":
        """Single-helper sub-instance over (u_{l+1}, v, z), axis renamed to u1."""
        sub = self.p_joint.marginal([self.u_names[l], "v", "z"])
        axes = (Alphabet("u1", sub.axes[0].size),) + sub.axes[1:]
        inst = TaciInstance(JointPmf(axes, sub.probs), (self.channels[l],), self.tau)
        if "capacities" in self.__dict__:
            inst.__dict__["capacities"] = (self.__dict__["capacities"][l],)
        return inst

    @staticmethod
    def dsbs(q: float, channel: Dmc, tau: float) -> "TaciInstance":
        """Doubly symmetric binary source: uniform U, V = U xor Bern(q); trivial Z."""
        if not 0.0 <= q <= 1.0:
            raise InvalidDistribution("dsbs noise must be in [0,1]")
        probs = np.array([[(1 - q) / 2, q / 2], [q / 2, (1 - q) / 2]]).reshape(2, 2, 1)
        axes = (Alphabet("u1", 2), Alphabet("v", 2), Alphabet("z", 1))
        return TaciInstance(JointPmf(axes, probs), (channel,), tau)


@dataclass(frozen=True)
class AuxChannel:
    """Auxiliary quantization channel P(W_l | U_l) for one observer (0-based)."""

    observer: int
    law: CondPmf

    @property
    def w_size(self) -> int:
        return self.law.output_axes[0].size


@dataclass
class ExponentResult:
    """Outcome of a single-letter solve.

    value is always the exponent quantity in bits (theta for the one-helper
    solve; the exponent bound H(V|Z) - R for the Berger-Tung bounds, whose
    rate value is reported in rate_bound).
    """

    value: float
    achiever: tuple[AuxChannel, ...]
    constraint_slack: dict[tuple[int, ...], float]
    restarts_used: int
    status: str
    rate_bound: float | None = None
    grid_value: float | None = None
    iterations: int = 0
    work_laws: tuple[np.ndarray, ...] = field(default=(), repr=False)


@dataclass(frozen=True)
class SolverOpts:
    restarts: int = 64
    restarts_bt: int = 12
    max_iters: int = 400
    stall_patience: int = 30
    seed: int = 0
    w_size: int | None = None  # achiever cardinality cap, default |U|+4
    certificate: bool | None = None  # default: on when |U| <= 3
    certificate_resolution: int | None = None  # grid denominator, default 32 / 8
    penalty_weight: float = 1e3
    warm_start: tuple[np.ndarray, ...] = ()


# ---------------------------------------------------------------------------
# batched primitives


def _batch_entropy(t: np.ndarray) -> np.ndarray:
    """Entropy in bits along all axes but the first."""
    flat = t.reshape(t.shape[0], -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(flat > 0, flat * np.log2(np.where(flat > 0, flat, 1.0)), 0.0)
    return -terms.sum(axis=1)


def _project_rows(laws: np.ndarray) -> np.ndarray:
    """Euclidean projection of every row onto the probability simplex."""
    shape = laws.shape
    v = laws.reshape(-1, shape[-1])
    mu = np.sort(v, axis=1)[:, ::-1]
    cs = np.cumsum(mu, axis=1)
    ks = np.arange(1, shape[-1] + 1)
    rho = ((mu * ks) > (cs - 1.0)).sum(axis=1)
    shift = (cs[np.arange(v.shape[0]), rho - 1] - 1.0) / rho
    return np.maximum(v - shift[:, None], 0.0).reshape(shape)


class _HelperProblem:
    """Batched objective/constraint evaluation for the one-helper solve."""

    def __init__(self, p_zvu: np.ndarray, budget: float):
        self.p_zvu = p_zvu
        self.p_zu = p_zvu.sum(axis=1)
        self.p_u = self.p_zu.sum(axis=0)
        self.budget = budget
        self.h_vz = _batch_entropy(p_zvu.sum(axis=2)[None])[0]
        self.h_uz = _batch_entropy(self.p_zu[None])[0]
        self.h_z = _batch_entropy(p_zvu.sum(axis=(1, 2))[None])[0]

    def informations(self, laws: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """I(V;W|Z) and I(U;W|Z) for a batch of working channels (r, u, w)."""
        j = np.einsum("zvu,ruw->rzvw", self.p_zvu, laws)
        h_zw = _batch_entropy(j.sum(axis=2))
        h_zvw = _batch_entropy(j)
        k = self.p_zu[None, :, :, None] * laws[:, None, :, :]
        h_zuw = _batch_entropy(k)
        i_v = self.h_vz + h_zw - h_zvw - self.h_z
        i_c = self.h_uz + h_zw - h_zuw - self.h_z
        return i_v, i_c

    def score(self, i_v: np.ndarray, i_c: np.ndarray) -> np.ndarray:
        """Value after mixing down to the budget: I_V * min(1, budget / I_C)."""
        factor = np.where(
            i_c > self.budget, self.budget / np.maximum(i_c, 1e-300), 1.0
        )
        return np.maximum(i_v, 0.0) * factor

    def gradients(self, laws: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        j = np.einsum("zvu,ruw->rzvw", self.p_zvu, laws)
        denom = j.sum(axis=2, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_v = np.where(j > 0, np.log2(j / np.where(denom > 0, denom, 1.0)), 0.0)
        g_v = np.einsum("zvu,rzvw->ruw", self.p_zvu, log_v)
        k = self.p_zu[None, :, :, None] * laws[:, None, :, :]
        denom_k = k.sum(axis=2, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_c = np.where(k > 0, np.log2(k / np.where(denom_k > 0, denom_k, 1.0)), 0.0)
        g_c = (self.p_zu[None, :, :, None] * log_c).sum(axis=1)
        return g_v, g_c

    def score_gradient(self, laws: np.ndarray, i_v, i_c) -> np.ndarray:
        g_v, g_c = self.gradients(laws)
        infeasible = i_c > self.budget
        if not infeasible.any():
            return g_v
        safe = np.maximum(i_c, 1e-30)
        a = np.where(infeasible, self.budget / safe, 1.0)
        b = np.where(infeasible, self.budget * np.maximum(i_v, 0.0) / safe**2, 0.0)
        return a[:, None, None] * g_v - b[:, None, None] * g_c


def _compositions(total: int, parts: int) -> np.ndarray:
    """All count vectors of the given length summing to total."""
    out = []
    for dividers in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        counts = []
        for d in dividers:
            counts.append(d - prev - 1)
            prev = d
        counts.append(total + parts - 2 - prev)
        out.append(counts)
    return np.array(out, dtype=np.float64)


def _grid_certificate(
    problem: _HelperProblem, n_u: int, denominator: int, chunk: int = 8192
) -> tuple[float, np.ndarray]:
    """Exhaustive feasible-value maximum over grid channels with |W| = |U|."""
    while denominator > 2 and math.comb(denominator + n_u - 1, n_u - 1) ** n_u > 2_000_000:
        denominator //= 2  # keep the certificate affordable for larger alphabets
    rows = _compositions(denominator, n_u) / denominator
    n_rows = rows.shape[0]
    idx = np.indices((n_rows,) * n_u).reshape(n_u, -1).T
    best_val = -np.inf
    best_law = None
    for start in range(0, idx.shape[0], chunk):
        sel = idx[start : start + chunk]
        laws = rows[sel]  # (b, u, u) rows indexed per input symbol
        i_v, i_c = problem.informations(laws)
        vals = problem.score(i_v, i_c)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val = float(vals[k])
            best_law = laws[k].copy()
    return best_val, best_law


def _canonical_starts(n_u: int, w_work: int, inst, opts) -> list[np.ndarray]:
    # warm starts first: with few restarts the tail of this list is dropped,
    # and warm starts carry the sweep's monotonicity guarantee
    starts: list[np.ndarray] = []
    for warm in opts.warm_start:
        if warm.ndim == 2 and warm.shape[0] == n_u:
            padded = np.zeros((n_u, w_work))
            cols = min(w_work, warm.shape[1])
            padded[:, :cols] = warm[:, :cols]
            rs = padded.sum(axis=1, keepdims=True)
            if np.all(rs > 0):
                starts.append(padded / rs)
    if w_work >= n_u:
        ident = np.zeros((n_u, w_work))
        ident[np.arange(n_u), np.arange(n_u)] = 1.0
        starts.append(ident)
    ch = inst.channels[0]
    if ch.input.size >= n_u and ch.output.size <= w_work:
        comp = np.zeros((n_u, w_work))
        comp[:, : ch.output.size] = ch.matrix[:n_u]
        starts.append(comp)
    const = np.zeros((n_u, w_work))
    const[:, 0] = 1.0
    starts.append(const)
    starts.append(np.full((n_u, w_work), 1.0 / w_work))
    return starts


def theta_single_helper(inst: TaciInstance, opts: SolverOpts | None = None) -> ExponentResult:
    """Optimal one-helper exponent theta(tau) with achieving auxiliary channel."""
    if inst.L != 1:
        raise HelpersExceeded("theta_single_helper requires exactly one observer")
    opts = opts or SolverOpts()
    n_u = inst.p_joint.axes[0].size
    w_size = opts.w_size if opts.w_size is not None else n_u + 4
    if w_size < 2:
        raise InvalidDistribution("w_size must be >= 2")
    w_work = w_size - 1  # one symbol is reserved for the budget mixing

    # tensor (z, v, u)
    p_zvu = np.transpose(inst.p_joint.probs, (2, 1, 0))
    budget = inst.budget(0)
    problem = _HelperProblem(p_zvu, budget)
    u_axis = inst.p_joint.axes[0]

    if budget <= 1e-15:
        law = np.zeros((n_u, w_size))
        law[:, 0] = 1.0
        aux = AuxChannel(0, CondPmf((u_axis,), (Alphabet("w1", w_size),), law))
        return ExponentResult(
            value=0.0,
            achiever=(aux,),
            constraint_slack={(1,): 0.0},
            restarts_used=0,
            status=STATUS_CONVERGED,
            iterations=0,
            work_laws=(law[:, :w_work] if w_work >= 1 else law,),
        )

    do_cert = opts.certificate if opts.certificate is not None else n_u <= 3
    grid_value = None
    grid_law = None
    if do_cert:
        denom = opts.certificate_resolution or (32 if n_u <= 2 else 8)
        grid_value, grid_law = _grid_certificate(problem, n_u, denom)

    starts = _canonical_starts(n_u, w_work, inst, opts)
    if grid_law is not None and w_work >= n_u:
        padded = np.zeros((n_u, w_work))
        padded[:, :n_u] = grid_law
        starts.insert(len(opts.warm_start), padded)
    n_random = max(opts.restarts - len(starts), 0)
    rng = derive_rng(opts.seed, TAG_SOLVER, 0)
    if n_random:
        rand = rng.gamma(1.0, size=(n_random, n_u, w_work))
        rand /= rand.sum(axis=2, keepdims=True)
        laws = np.concatenate([np.stack(starts), rand], axis=0)
    else:
        laws = np.stack(starts[: max(opts.restarts, 1)])

    laws, vals, converged, iters = _ascend(problem, laws, opts)

    order = np.argmax(vals)  # ties resolve to the lowest restart index
    best_law = laws[order]
    if grid_value is not None and float(vals[order]) < grid_value - 1e-12:
        # certified grid point beats the ascent (should not happen; keep it honest)
        padded = np.zeros((n_u, max(w_work, n_u)))
        padded[:, :n_u] = grid_law
        best_law = padded
        converged = False
    i_v, i_c = problem.informations(best_law[None])
    value = float(problem.score(i_v, i_c)[0])
    raw_aux = AuxChannel(
        0, CondPmf((u_axis,), (Alphabet("w1", best_law.shape[1]),), best_law)
    )
    aux = mix_to_constraint(raw_aux, float(i_c[0]), budget)
    ach_i_c = _aux_constraint_value(inst, aux)
    slack = budget - ach_i_c
    assert slack >= -1e-9, f"achiever violates the budget by {-slack}"
    assert value <= min(budget, _instance_iuv(inst)) + 1e-9

    status = STATUS_CONVERGED if converged else STATUS_GRID_ONLY
    return ExponentResult(
        value=value,
        achiever=(aux,),
        constraint_slack={(1,): float(slack)},
        restarts_used=int(laws.shape[0]),
        status=status,
        grid_value=grid_value,
        iterations=iters,
        work_laws=(best_law.copy(),),
    )


def _ascend(problem: _HelperProblem, laws: np.ndarray, opts: SolverOpts):
    laws = _project_rows(laws)
    i_v, i_c = problem.informations(laws)
    vals = problem.score(i_v, i_c)
    n = laws.shape[0]
    eta = np.full(n, 0.5)
    since_improve = np.zeros(n, dtype=np.int64)
    converged = False
    it = 0
    for it in range(1, opts.max_iters + 1):
        grad = problem.score_gradient(laws, i_v, i_c)
        grad -= grad.mean(axis=2, keepdims=True)
        active = np.ones(n, dtype=bool)
        improved = np.zeros(n, dtype=bool)
        eta_try = eta.copy()
        for _ in range(22):
            if not active.any():
                break
            rows = np.flatnonzero(active)
            cand = _project_rows(laws[rows] + eta_try[rows, None, None] * grad[rows])
            cv, cc = problem.informations(cand)
            cvals = problem.score(cv, cc)
            better = cvals > vals[rows] + 1e-14
            hit = rows[better]
            laws[hit] = cand[better]
            vals[hit] = cvals[better]
            i_v[hit] = cv[better]
            i_c[hit] = cc[better]
            improved[hit] = True
            active[hit] = False
            eta_try[rows[~better]] *= 0.5
        eta = np.where(improved, np.minimum(eta_try * 1.3, 4.0), np.maximum(eta_try, 1e-9))
        since_improve = np.where(improved, 0, since_improve + 1)
        if int(since_improve.min()) >= opts.stall_patience:
            converged = True
            break
    return laws, vals, converged, it


def _aux_constraint_value(inst: TaciInstance, aux: AuxChannel) -> float:
    joint = inst.p_joint.extend(aux.law)
    return conditional_mutual_information(joint, [inst.u_names[aux.observer]], [aux.law.output_axes[0].name], ["z"])


def _instance_iuv(inst: TaciInstance) -> float:
    return conditional_mutual_information(inst.p_joint, list(inst.u_names), ["v"], ["z"])


def mix_to_constraint(aux: AuxChannel, i_uw_given_z: float, budget: float) -> AuxChannel:
    """Mix W with a fresh constant symbol so that I(U;Wbar|Z) meets the budget.

    With probability 1-p emit W, else the fresh symbol; p = 1 - budget/I.
    Both I(U;Wbar|Z) and I(V;Wbar|Z) scale exactly by (1-p).
    """
    if budget < 0:
        raise InvalidDistribution("budget must be >= 0")
    if i_uw_given_z <= budget or i_uw_given_z <= 0:
        return aux
    p = 1.0 - budget / i_uw_given_z
    law = aux.law.matrix
    mixed = np.concatenate([(1.0 - p) * law, np.full((law.shape[0], 1), p)], axis=1)
    w = aux.law.output_axes[0]
    new_w = Alphabet(w.name, w.size + 1)
    return AuxChannel(aux.observer, CondPmf(aux.law.input_axes, (new_w,), mixed))


# ---------------------------------------------------------------------------
# Berger-Tung bounds (two helpers; one helper reduces to the solve above)

_AXL = "zvabwx"  # z, v, u1, u2, w1, w2

# entropy-combination recipes: each functional is sum_T coeff * H(marginal on T)
def _fs_terms(subset: frozenset[int]) -> list[tuple[str, float]]:
    if subset == frozenset():
        return [("vwxz", 1.0), ("wxz", -1.0)]
    if subset == frozenset({1}):
        return [("avxz", 1.0), ("vwxz", 1.0), ("avwxz", -1.0), ("xz", -1.0)]
    if subset == frozenset({2}):
        return [("bvwz", 1.0), ("vwxz", 1.0), ("bvwxz", -1.0), ("wz", -1.0)]
    return [("abvz", 1.0), ("vwxz", 1.0), ("abvwxz", -1.0), ("z", -1.0)]


def _gs_terms(subset: frozenset[int]) -> list[tuple[str, float]]:
    if subset == frozenset({1}):
        return [("avxz", 1.0), ("vwxz", 1.0), ("avwxz", -1.0), ("vxz", -1.0)]
    if subset == frozenset({2}):
        return [("bvwz", 1.0), ("vwxz", 1.0), ("bvwxz", -1.0), ("vwz", -1.0)]
    return [("abvz", 1.0), ("vwxz", 1.0), ("abvwxz", -1.0), ("vz", -1.0)]


def _entropy_of(joint: np.ndarray, keep: str, cache: dict) -> float:
    if keep in cache:
        return cache[keep]
    axes = tuple(i for i, c in enumerate(_AXL) if c not in keep)
    m = joint.sum(axis=axes) if axes else joint
    h = _batch_entropy(m[None])[0]
    cache[keep] = h
    return h


def _logterm_of(joint: np.ndarray, keep: str, cache: dict) -> np.ndarray:
    """-(log2 M_T + log2 e), broadcast back to the full axis order."""
    key = "L" + keep
    if key in cache:
        return cache[key]
    axes = tuple(i for i, c in enumerate(_AXL) if c not in keep)
    m = joint.sum(axis=axes, keepdims=True) if axes else joint
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -(np.where(m > 0, np.log2(np.where(m > 0, m, 1.0)), 0.0) + LOG2E)
    cache[key] = out
    return out


class _TwoHelperProblem:
    """Product-form Berger-Tung inner functional for L = 2."""

    def __init__(self, inst: TaciInstance):
        self.p = np.transpose(inst.p_joint.probs, (3, 2, 0, 1))  # (z, v, a, b)
        self.tau_c = {1: inst.budget(0), 2: inst.budget(1)}
        self.h_v_z = inst.h_v_given_z
        self.subsets = [frozenset(), frozenset({1}), frozenset({2}), frozenset({1, 2})]

    def joint(self, law1: np.ndarray, law2: np.ndarray) -> np.ndarray:
        return np.einsum("zvab,aw,bx->zvabwx", self.p, law1, law2)

    def f_values(self, j: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cache: dict = {}
        fs = np.empty(4)
        gs = np.empty(4)
        for i, s in enumerate(self.subsets):
            fs[i] = sum(c * _entropy_of(j, t, cache) for t, c in _fs_terms(s))
            fs[i] -= sum(self.tau_c[l] for l in s)
            gs[i] = (
                sum(c * _entropy_of(j, t, cache) for t, c in _gs_terms(s)) if s else 0.0
            )
        return fs, gs

    def budgets(self) -> np.ndarray:
        return np.array([sum(self.tau_c[l] for l in s) for s in self.subsets])

    def objective(self, law1, law2) -> float:
        fs, _ = self.f_values(self.joint(law1, law2))
        return float(fs.max())

    def grad_of_terms(self, j, law1, law2, terms) -> tuple[np.ndarray, np.ndarray]:
        cache: dict = {}
        acc = np.zeros_like(j)
        for keep, coeff in terms:
            acc += coeff * _logterm_of(j, keep, cache)
        g1 = np.einsum("zvabwx,zvab,bx->aw", acc, self.p, law2)
        g2 = np.einsum("zvabwx,zvab,aw->bx", acc, self.p, law1)
        return g1, g2

    def mix_feasible(self, law1, law2, rounds: int = 40):
        """Mix helpers toward constants until every subset constraint holds."""
        budgets = self.budgets()
        for _ in range(rounds):
            _, gs = self.f_values(self.joint(law1, law2))
            viol = gs - budgets
            worst = int(np.argmax(viol))
            if viol[worst] <= 1e-11:
                return law1, law2
            subset = self.subsets[worst]

            def mixed(p):
                l1 = _mix_toward_constant(law1, p) if 1 in subset else law1
                l2 = _mix_toward_constant(law2, p) if 2 in subset else law2
                return l1, l2

            lo, hi = 0.0, 1.0
            for _ in range(50):
                mid = 0.5 * (lo + hi)
                _, gm = self.f_values(self.joint(*mixed(mid)))
                if gm[worst] > budgets[worst]:
                    lo = mid
                else:
                    hi = mid
            law1, law2 = mixed(hi)
        return law1, law2


def _mix_toward_constant(law: np.ndarray, p: float, col: int = 0) -> np.ndarray:
    out = (1.0 - p) * law
    out[:, col] += p
    return out


def _bt_inner_two(inst: TaciInstance, opts: SolverOpts) -> ExponentResult:
    prob = _TwoHelperProblem(inst)
    n1, n2 = inst.p_joint.axes[0].size, inst.p_joint.axes[1].size
    w1 = (opts.w_size or (n1 + 4)) - 1
    w2 = (opts.w_size or (n2 + 4)) - 1

    starts: list[tuple[np.ndarray, np.ndarray]] = []
    sub_opts = replace(opts, warm_start=(), restarts=max(8, opts.restarts_bt))
    helper_laws = []
    for l in range(2):
        res = theta_single_helper(inst.helper_marginal(l), sub_opts)
        helper_laws.append(res.work_laws[0])

    def embed(mat, rows, cols):
        out = np.zeros((rows, cols))
        cc = min(cols, mat.shape[1])
        out[:, :cc] = mat[:, :cc]
        s = out.sum(axis=1, keepdims=True)
        out[s[:, 0] == 0, 0] = 1.0
        return out / out.sum(axis=1, keepdims=True)

    starts.append((embed(helper_laws[0], n1, w1), embed(helper_laws[1], n2, w2)))
    ident1, ident2 = np.zeros((n1, w1)), np.zeros((n2, w2))
    ident1[np.arange(n1), np.minimum(np.arange(n1), w1 - 1)] = 1.0
    ident2[np.arange(n2), np.minimum(np.arange(n2), w2 - 1)] = 1.0
    starts.append((ident1, ident2))
    c1, c2 = np.zeros((n1, w1)), np.zeros((n2, w2))
    c1[:, 0] = 1.0
    c2[:, 0] = 1.0
    starts.append((c1, c2))
    rng = derive_rng(opts.seed, TAG_SOLVER, 1)
    while len(starts) < opts.restarts_bt:
        r1 = rng.gamma(1.0, size=(n1, w1))
        r2 = rng.gamma(1.0, size=(n2, w2))
        starts.append((r1 / r1.sum(1, keepdims=True), r2 / r2.sum(1, keepdims=True)))

    best_val = np.inf
    best = None
    iters_total = 0
    all_converged = True
    for law1, law2 in starts:
        law1, law2 = prob.mix_feasible(law1.copy(), law2.copy())
        val = prob.objective(law1, law2)
        eta = 0.25
        stall = 0
        for it in range(opts.max_iters):
            j = prob.joint(law1, law2)
            fs, _ = prob.f_values(j)
            s_star = prob.subsets[int(np.argmax(fs))]
            g1, g2 = prob.grad_of_terms(j, law1, law2, _fs_terms(s_star))
            g1 -= g1.mean(axis=1, keepdims=True)
            g2 -= g2.mean(axis=1, keepdims=True)
            ok = False
            for _ in range(18):
                c1m = _project_rows(law1 - eta * g1)
                c2m = _project_rows(law2 - eta * g2)
                c1m, c2m = prob.mix_feasible(c1m, c2m)
                cval = prob.objective(c1m, c2m)
                if cval < val - 1e-13:
                    law1, law2, val = c1m, c2m, cval
                    eta = min(eta * 1.3, 2.0)
                    ok = True
                    break
                eta *= 0.5
            stall = 0 if ok else stall + 1
            if stall >= 8:
                break
            iters_total += 1
        else:
            all_converged = False
        if val < best_val:
            best_val = val
            best = (law1, law2)

    law1, law2 = best
    fs, gs = prob.f_values(prob.joint(law1, law2))
    budgets = prob.budgets()
    slack = {
        tuple(sorted(s)): float(budgets[i] - gs[i])
        for i, s in enumerate(prob.subsets)
        if s
    }
    u_axes = inst.p_joint.axes[:2]
    ach = tuple(
        AuxChannel(l, CondPmf((u_axes[l],), (Alphabet(f"w{l + 1}", law.shape[1]),), law))
        for l, law in enumerate((law1, law2))
    )
    exponent = max(inst.h_v_given_z - best_val, 0.0)
    return ExponentResult(
        value=exponent,
        achiever=ach,
        constraint_slack=slack,
        restarts_used=len(starts),
        status=STATUS_CONVERGED if all_converged else STATUS_GRID_ONLY,
        rate_bound=float(best_val),
        iterations=iters_total,
        work_laws=(law1.copy(), law2.copy()),
    )


def bt_inner_bound(inst: TaciInstance, opts: SolverOpts | None = None) -> ExponentResult:
    """Berger-Tung inner bound R^i(tau); value is the exponent bound H(V|Z) - R^i.

    For one helper the bound is tight and coincides with the direct solve.
    """
    opts = opts or SolverOpts()
    if inst.L == 1:
        res = theta_single_helper(inst, opts)
        res.rate_bound = inst.h_v_given_z - res.value
        return res
    if inst.L != 2:
        raise HelpersExceeded(f"inner bound implemented for L <= 2, got L={inst.L}")
    return _bt_inner_two(inst, opts)


def _markov_violations(j6: np.ndarray) -> tuple[float, float]:
    """I(W1;U2|U1) and I(W2;U1|U2) of the joint (z,v,a,b,w,x)."""
    m = j6.sum(axis=(0, 1))  # (a, b, w, x)
    def h(t):
        return _batch_entropy(t[None])[0]
    ab = m.sum(axis=(2, 3))
    v1 = h(ab) + h(m.sum(axis=(1, 3))) - h(m.sum(axis=3)) - h(ab.sum(axis=1))
    v2 = h(ab) + h(m.sum(axis=(0, 2))) - h(m.sum(axis=2)) - h(ab.sum(axis=0))
    return max(v1, 0.0), max(v2, 0.0)


def bt_outer_bound(inst: TaciInstance, opts: SolverOpts | None = None) -> ExponentResult:
    """Berger-Tung outer bound; value is the exponent bound H(V|Z) - R^o.

    For one helper the Markov conditions coincide with the inner bound's, so
    the inner result is returned.  For two helpers the search runs over
    jointly distributed auxiliaries with a quadratic penalty on the marginal
    Markov violations; the result is flagged Experimental.
    """
    opts = opts or SolverOpts()
    if inst.L == 1:
        return bt_inner_bound(inst, opts)
    if inst.L != 2:
        raise HelpersExceeded(f"outer bound implemented for L <= 2, got L={inst.L}")

    inner = _bt_inner_two(inst, opts)
    prob = _TwoHelperProblem(inst)
    n1, n2 = inst.p_joint.axes[0].size, inst.p_joint.axes[1].size
    w1 = inner.work_laws[0].shape[1]
    w2 = inner.work_laws[1].shape[1]

    def tensor_joint(t):  # t: (a, b, w, x)
        return np.einsum("zvab,abwx->zvabwx", prob.p, t)

    def gs_of(t):
        _, gs = prob.f_values(tensor_joint(t))
        return gs

    def mix_feasible_joint(t, rounds=40):
        budgets = prob.budgets()
        for _ in range(rounds):
            gs = gs_of(t)
            viol = gs - budgets
            worst = int(np.argmax(viol))
            if viol[worst] <= 1e-11:
                return t
            subset = prob.subsets[worst]

            def mixed(p):
                out = t
                if 1 in subset:
                    marg = out.sum(axis=2, keepdims=True)  # over w
                    const = np.zeros_like(out)
                    const[:, :, 0:1, :] = marg
                    out = (1 - p) * out + p * const
                if 2 in subset:
                    marg = out.sum(axis=3, keepdims=True)
                    const = np.zeros_like(out)
                    const[:, :, :, 0:1] = marg
                    out = (1 - p) * out + p * const
                return out

            lo, hi = 0.0, 1.0
            for _ in range(50):
                mid = 0.5 * (lo + hi)
                if gs_of(mixed(mid))[worst] > budgets[worst]:
                    lo = mid
                else:
                    hi = mid
            t = mixed(hi)
        return t

    def penalized(t, weight):
        j = tensor_joint(t)
        fs, _ = prob.f_values(j)
        v1, v2 = _markov_violations(j)
        return float(fs.max()) + weight * (v1**2 + v2**2), float(fs.max()), max(v1, v2)

    # starts: the (penalty-free) product inner solution plus random joints
    t0 = np.einsum("aw,bx->abwx", inner.work_laws[0], inner.work_laws[1])
    rng = derive_rng(opts.seed, TAG_SOLVER, 2)
    starts = [t0]
    for _ in range(max(opts.restarts_bt // 2, 3)):
        r = rng.gamma(1.0, size=(n1, n2, w1, w2))
        starts.append(r / r.sum(axis=(2, 3), keepdims=True))

    best_rate = inner.rate_bound
    weight = opts.penalty_weight
    for t in starts:
        t = mix_feasible_joint(t.copy())
        w_now = weight
        for _ in range(4):
            t, obj, viol = _descend_joint(
                prob, tensor_joint, mix_feasible_joint, penalized, t, w_now, opts
            )
            if viol <= 1e-6:
                break
            w_now *= 2.0
        if viol <= 1e-6 and obj < best_rate:
            best_rate = obj

    exponent = max(inst.h_v_given_z - best_rate, 0.0)
    result = ExponentResult(
        value=exponent,
        achiever=inner.achiever,
        constraint_slack=inner.constraint_slack,
        restarts_used=len(starts),
        status=STATUS_EXPERIMENTAL,
        rate_bound=float(best_rate),
        iterations=inner.iterations,
        work_laws=inner.work_laws,
    )
    return result


def _descend_joint(prob, tensor_joint, mix_feasible_joint, penalized, t, weight, opts):
    val, obj, viol = penalized(t, weight)
    eta = 0.2
    stall = 0
    for _ in range(opts.max_iters):
        j = tensor_joint(t)
        fs, _ = prob.f_values(j)
        s_star = prob.subsets[int(np.argmax(fs))]
        cache: dict = {}
        acc = np.zeros_like(j)
        for keep, coeff in _fs_terms(s_star):
            acc += coeff * _logterm_of(j, keep, cache)
        # penalty gradient: d/dT of weight * sum viol_l^2
        v1, v2 = _markov_violations(j)
        for viol_l, terms in (
            (v1, [("ab", 1.0), ("aw", 1.0), ("abw", -1.0), ("a", -1.0)]),
            (v2, [("ab", 1.0), ("bx", 1.0), ("abx", -1.0), ("b", -1.0)]),
        ):
            for keep, coeff in terms:
                acc += (2.0 * weight * viol_l) * coeff * _logterm_of(j, keep, cache)
        grad = np.einsum("zvabwx,zvab->abwx", acc, prob.p)
        flat = grad.reshape(grad.shape[0] * grad.shape[1], -1)
        flat -= flat.mean(axis=1, keepdims=True)
        grad = flat.reshape(grad.shape)
        ok = False
        for _ in range(18):
            cand = t - eta * grad
            cand = _project_rows(cand.reshape(cand.shape[0] * cand.shape[1], -1)).reshape(cand.shape)
            cand = mix_feasible_joint(cand)
            cval, cobj, cviol = penalized(cand, weight)
            if cval < val - 1e-13:
                t, val, obj, viol = cand, cval, cobj, cviol
                eta = min(eta * 1.3, 2.0)
                ok = True
                break
            eta *= 0.5
        stall = 0 if ok else stall + 1
        if stall >= 6:
            break
    return t, obj, viol


# ---------------------------------------------------------------------------
# tau sweeps


@dataclass(frozen=True)
class SweepRow:
    tau: float
    value: float
    lower_bound: float
    upper_bound: float
    status: str
    restarts_used: int


def sweep_tau(inst: TaciInstance, tau_grid, opts: SolverOpts | None = None) -> list[SweepRow]:
    """Solve along a strictly increasing tau grid, warm-starting each point."""
    opts = opts or SolverOpts()
    grid = [float(t) for t in tau_grid]
    if any(t < 0 for t in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidDistribution("tau grid must be strictly increasing and non-negative")
    rows: list[SweepRow] = []
    warm: tuple[np.ndarray, ...] = opts.warm_start
    for tau in grid:
        point_opts = replace(opts, warm_start=warm)
        try:
            inst_t = inst.with_tau(tau)
            if inst.L == 1:
                res = theta_single_helper(inst_t, point_opts)
                rows.append(
                    SweepRow(tau, res.value, res.value, res.value, res.status, res.restarts_used)
                )
                warm = res.work_laws
            else:
                inner = bt_inner_bound(inst_t, point_opts)
                outer = bt_outer_bound(inst_t, point_opts)
                rows.append(
                    SweepRow(
                        tau,
                        inner.value,
                        inner.value,
                        outer.value,
                        inner.status,
                        inner.restarts_used,
                    )
                )
                warm = inner.work_laws
        except DhtError:
            rows.append(
                SweepRow(tau, float("nan"), float("nan"), float("nan"), STATUS_FAILED, 0)
            )
    return rows
