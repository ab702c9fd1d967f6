"""Exact information measures over named finite alphabets.

Probability objects are immutable dense float64 tensors.  All information
quantities are in bits.  Conventions: 0*log(0) = 0, and mass of p outside
the support of q raises SupportViolation instead of returning infinity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AxisMismatch,
    EmptySequence,
    InvalidDistribution,
    OverlappingAxisSets,
    SupportViolation,
    SymbolOutOfRange,
)

LOG2E = float(np.log2(np.e))

#: mass may deviate from 1 by this much before the input is rejected
MASS_TOL = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    out.setflags(write=False)
    return out


def _check_mass(probs: np.ndarray, what: str) -> np.ndarray:
    if np.any(probs < 0):
        raise InvalidDistribution(f"{what}: negative probability entry")
    total = float(probs.sum())
    if abs(total - 1.0) > MASS_TOL:
        raise InvalidDistribution(f"{what}: mass {total!r} deviates from 1 by more than {MASS_TOL}")
    return probs / total


@dataclass(frozen=True)
class Alphabet:
    """Finite alphabet with symbols 0..size-1."""

    name: str
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise InvalidDistribution(f"alphabet {self.name!r}: size must be >= 1")


@dataclass(frozen=True)
class Pmf:
    """Probability mass function over a single alphabet."""

    alphabet: Alphabet
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.shape != (self.alphabet.size,):
            raise AxisMismatch(
                f"pmf over {self.alphabet.name!r}: got {probs.shape}, want ({self.alphabet.size},)"
            )
        object.__setattr__(self, "probs", _frozen(_check_mass(probs, f"pmf {self.alphabet.name!r}")))


@dataclass(frozen=True)
class JointPmf:
    """Dense joint distribution over an ordered tuple of alphabets."""

    axes: tuple[Alphabet, ...]
    probs: np.ndarray

    def __post_init__(self):
        axes = tuple(self.axes)
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise AxisMismatch(f"duplicate axis names in {names}")
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.shape != tuple(a.size for a in axes):
            raise AxisMismatch(
                f"joint over {names}: shape {probs.shape} does not match alphabet sizes"
            )
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "probs", _frozen(_check_mass(probs, f"joint {names}")))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.axes)

    def axis(self, name: str) -> Alphabet:
        for a in self.axes:
            if a.name == name:
                return a
        raise AxisMismatch(f"no axis named {name!r} in {self.names}")

    def _indices(self, names: Iterable[str]) -> list[int]:
        pos = {a.name: i for i, a in enumerate(self.axes)}
        out = []
        for n in names:
            if n not in pos:
                raise AxisMismatch(f"no axis named {n!r} in {self.names}")
            out.append(pos[n])
        return out

    def marginal(self, names: Iterable[str]) -> "JointPmf":
        """Marginal over the named axes, in this joint's axis order."""
        keep = set(self._indices(names))
        drop = tuple(i for i in range(len(self.axes)) if i not in keep)
        probs = self.probs.sum(axis=drop) if drop else self.probs
        axes = tuple(a for i, a in enumerate(self.axes) if i in keep)
        return JointPmf(axes, probs)

    def flatten(self, name: str) -> Pmf:
        """Single Pmf over the lexicographic product alphabet (first axis most significant)."""
        return Pmf(Alphabet(name, int(self.probs.size)), self.probs.reshape(-1))

    def extend(self, cond: "CondPmf") -> "JointPmf":
        """Append cond's output axes: P'(..., y) = P(...) * cond(y | matching input axes)."""
        in_names = [a.name for a in cond.input_axes]
        self._indices(in_names)  # existence check
        for a in cond.input_axes:
            mine = self.axis(a.name)
            if mine.size != a.size:
                raise AxisMismatch(f"axis {a.name!r}: size {mine.size} != {a.size}")
        for a in cond.output_axes:
            if a.name in self.names:
                raise AxisMismatch(f"output axis {a.name!r} already present")
        letters = {}
        for a in self.axes:
            letters[a.name] = chr(ord("a") + len(letters))
        for a in cond.output_axes:
            letters[a.name] = chr(ord("a") + len(letters))
        lhs = "".join(letters[a.name] for a in self.axes)
        rhs = "".join(letters[a.name] for a in cond.input_axes) + "".join(
            letters[a.name] for a in cond.output_axes
        )
        out = lhs + "".join(letters[a.name] for a in cond.output_axes)
        probs = np.einsum(f"{lhs},{rhs}->{out}", self.probs, cond.probs)
        return JointPmf(self.axes + cond.output_axes, probs)


@dataclass(frozen=True)
class CondPmf:
    """Stochastic map: each input-index slice is a pmf over the output axes."""

    input_axes: tuple[Alphabet, ...]
    output_axes: tuple[Alphabet, ...]
    probs: np.ndarray

    def __post_init__(self):
        in_axes = tuple(self.input_axes)
        out_axes = tuple(self.output_axes)
        probs = np.asarray(self.probs, dtype=np.float64)
        shape = tuple(a.size for a in in_axes) + tuple(a.size for a in out_axes)
        if probs.shape != shape:
            raise AxisMismatch(f"conditional pmf: shape {probs.shape}, want {shape}")
        if np.any(probs < 0):
            raise InvalidDistribution("conditional pmf: negative entry")
        n_in = int(np.prod([a.size for a in in_axes], dtype=np.int64))
        rows = probs.reshape(n_in, -1)
        sums = rows.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > MASS_TOL):
            raise InvalidDistribution("conditional pmf: some row does not sum to 1")
        rows = rows / sums[:, None]
        object.__setattr__(self, "input_axes", in_axes)
        object.__setattr__(self, "output_axes", out_axes)
        object.__setattr__(self, "probs", _frozen(rows.reshape(shape)))

    @property
    def matrix(self) -> np.ndarray:
        """Row-stochastic (inputs x outputs) view, lexicographic index order."""
        n_in = int(np.prod([a.size for a in self.input_axes], dtype=np.int64))
        return self.probs.reshape(n_in, -1)


@dataclass(frozen=True)
class TypeClass:
    """Empirical type: symbol counts of a length-m sequence."""

    base_alphabet: Alphabet
    counts: np.ndarray = field(repr=True)

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (self.base_alphabet.size,):
            raise AxisMismatch("type counts do not match alphabet size")
        if np.any(counts < 0):
            raise InvalidDistribution("negative count")
        if counts.sum() < 1:
            raise EmptySequence("type of an empty sequence")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def length(self) -> int:
        return int(self.counts.sum())

    @property
    def freqs(self) -> np.ndarray:
        return self.counts / self.length

    def induced_pmf(self) -> Pmf:
        return Pmf(self.base_alphabet, self.freqs)


# ---------------------------------------------------------------------------
# information quantities


def _xlog2x_sum(p: np.ndarray) -> float:
    p = p[p > 0]
    return float((p * np.log2(p)).sum())


def entropy_bits(joint: JointPmf | Pmf, names: Iterable[str] | None = None) -> float:
    """Shannon entropy in bits of the (marginal) distribution."""
    if isinstance(joint, Pmf):
        return -_xlog2x_sum(joint.probs)
    probs = joint.marginal(names).probs if names is not None else joint.probs
    return -_xlog2x_sum(probs)


def conditional_entropy(joint: JointPmf, target: Iterable[str], given: Iterable[str] = ()) -> float:
    """H(target | given) in bits."""
    target = tuple(target)
    given = tuple(given)
    if set(target) & set(given):
        raise OverlappingAxisSets(f"target {target} and given {given} overlap")
    h_tg = entropy_bits(joint, target + given)
    h_g = entropy_bits(joint, given) if given else 0.0
    return h_tg - h_g


def conditional_mutual_information(
    joint: JointPmf,
    a: Iterable[str],
    b: Iterable[str],
    given: Iterable[str] = (),
) -> float:
    """I(A;B|C) in bits; with given=() this is plain mutual information."""
    a, b, given = tuple(a), tuple(b), tuple(given)
    sets = [set(a), set(b), set(given)]
    for i in range(3):
        for j in range(i + 1, 3):
            if sets[i] & sets[j]:
                raise OverlappingAxisSets(f"axis sets {a}, {b}, given={given} overlap")
    joint._indices(a + b + given)
    h_ac = entropy_bits(joint, a + given)
    h_bc = entropy_bits(joint, b + given)
    h_abc = entropy_bits(joint, a + b + given)
    h_c = entropy_bits(joint, given) if given else 0.0
    val = h_ac + h_bc - h_abc - h_c
    return 0.0 if -1e-9 < val < 0.0 else val


def _aligned_pair(p: JointPmf | Pmf, q: JointPmf | Pmf) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(p, Pmf) and isinstance(q, Pmf):
        if p.alphabet != q.alphabet:
            raise AxisMismatch(f"pmf alphabets differ: {p.alphabet} vs {q.alphabet}")
        return p.probs, q.probs
    if isinstance(p, JointPmf) and isinstance(q, JointPmf):
        if p.axes != q.axes:
            raise AxisMismatch(f"joint axes differ: {p.names} vs {q.names}")
        return p.probs, q.probs
    raise AxisMismatch("cannot compare a Pmf with a JointPmf")


def kl_divergence(p: JointPmf | Pmf, q: JointPmf | Pmf) -> float:
    """D(p||q) in bits.  Raises SupportViolation if p has mass where q = 0."""
    pa, qa = _aligned_pair(p, q)
    mask = pa > 0
    if np.any(qa[mask] == 0):
        raise SupportViolation("p has positive mass outside the support of q")
    return float((pa[mask] * np.log2(pa[mask] / qa[mask])).sum())


def empirical_type(seq: Sequence[int] | np.ndarray, alphabet: Alphabet) -> TypeClass:
    """Symbol counts of seq over the alphabet."""
    seq = np.asarray(seq, dtype=np.int64)
    if seq.size == 0:
        raise EmptySequence("cannot take the type of an empty sequence")
    if seq.min() < 0 or seq.max() >= alphabet.size:
        raise SymbolOutOfRange(
            f"symbols must lie in [0, {alphabet.size}) for alphabet {alphabet.name!r}"
        )
    counts = np.bincount(seq, minlength=alphabet.size)
    return TypeClass(alphabet, counts)


def is_typical(type_class: TypeClass, ref: Pmf, delta: float) -> bool:
    """Robust typicality: entrywise |freq - ref| <= delta and no mass off ref's support."""
    if type_class.base_alphabet != ref.alphabet:
        raise AxisMismatch("type and reference pmf use different alphabets")
    if delta < 0:
        raise InvalidDistribution("delta must be >= 0")
    freqs = type_class.freqs
    if np.any(freqs[ref.probs == 0] > 0):
        return False
    return bool(np.all(np.abs(freqs - ref.probs) <= delta + 1e-12))


# ---------------------------------------------------------------------------
# divergence minimization over a type ball


def _project_box_simplex(v: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {x: lo <= x <= hi, sum x = 1} by bisection on the shift."""
    a = float(np.min(v - hi)) - 1.0
    b = float(np.max(v - lo)) + 1.0
    for _ in range(100):
        mid = 0.5 * (a + b)
        if np.clip(v - mid, lo, hi).sum() > 1.0:
            a = mid
        else:
            b = mid
    return np.clip(v - 0.5 * (a + b), lo, hi)


def _ball_objective(x: np.ndarray, q: np.ndarray) -> float:
    mask = x > 0
    return float((x[mask] * np.log2(x[mask] / q[mask])).sum())


def min_divergence_over_type_ball(p: Pmf, q: Pmf, delta: float) -> float:
    """min D(p~ || q) over pmfs with |p~ - p| <= delta entrywise and supp(p~) within supp(p).

    Convex program; solved by projected gradient descent on the box-simplex
    intersection, with a grid refinement cross-check for supports of size <= 3.
    """
    if p.alphabet != q.alphabet:
        raise AxisMismatch("p and q use different alphabets")
    if delta < 0:
        raise InvalidDistribution("delta must be >= 0")
    pv, qv = p.probs, q.probs
    lo = np.maximum(pv - delta, 0.0)
    hi = np.minimum(pv + delta, 1.0)
    hi[pv == 0] = 0.0  # ball members keep p's null support
    if np.any(lo[qv == 0] > 0):
        raise SupportViolation("every ball member puts mass outside the support of q")
    hi[qv == 0] = 0.0  # optimal members avoid q's null support
    if lo.sum() > 1 + 1e-12 or hi.sum() < 1 - 1e-12:
        raise InfeasibleBall("box does not intersect the simplex")

    free = hi > 0
    x = _project_box_simplex(pv.copy(), lo, hi)
    best = _ball_objective(x, qv)
    if np.all(qv[pv > 0] > 0) and _ball_objective(pv, qv) <= best:
        x, best = pv.copy(), _ball_objective(pv, qv)  # centre is always feasible
    step = 0.25
    for _ in range(600):
        grad = np.zeros_like(x)
        xf = np.maximum(x[free], 1e-300)
        grad[free] = np.log2(xf / qv[free]) + LOG2E
        improved = False
        for _ in range(40):
            cand = _project_box_simplex(x - step * grad, lo, hi)
            val = _ball_objective(cand, qv)
            if val < best - 1e-15:
                x, best = cand, val
                step = min(step * 1.3, 2.0)
                improved = True
                break
            step *= 0.5
        if not improved:
            break

    if int(free.sum()) <= 3:
        best = min(best, _ball_grid_min(pv, qv, lo, hi, free))
    return max(best, 0.0)


def _ball_grid_min(pv, qv, lo, hi, free, levels=4, n=33):
    """Coarse-to-fine grid scan over <= 2 free coordinates (last one closes the simplex)."""
    idx = np.flatnonzero(free)
    if idx.size == 1:
        return _ball_objective(np.clip(pv, lo, hi), qv)
    head, last = idx[:-1], idx[-1]
    lo_h, hi_h = lo[head], hi[head]
    best = np.inf
    for _ in range(levels):
        grids = [np.linspace(lo_h[i], hi_h[i], n) for i in range(head.size)]
        mesh = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, head.size)
        rest = 1.0 - mesh.sum(axis=1)
        ok = (rest >= lo[last] - 1e-12) & (rest <= hi[last] + 1e-12)
        if not np.any(ok):
            break
        pts = np.zeros((int(ok.sum()), pv.size))
        pts[:, head] = mesh[ok]
        pts[:, last] = np.clip(rest[ok], lo[last], hi[last])
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(pts > 0, pts * np.log2(np.maximum(pts, 1e-300) / qv), 0.0)
        vals = terms.sum(axis=1)
        k = int(np.argmin(vals))
        if vals[k] < best:
            best = float(vals[k])
            centre = pts[k][head]
            width = (hi_h - lo_h) / (n - 1)
            lo_h = np.maximum(centre - width, lo[head])
            hi_h = np.minimum(centre + width, hi[head])
    return best


# ---------------------------------------------------------------------------
# product construction helpers shared by the block-level modules


def product_joint(parts: Sequence[JointPmf]) -> JointPmf:
    """Independent product; axis names must be globally unique."""
    axes: list[Alphabet] = []
    probs = np.array(1.0)
    for part in parts:
        axes.extend(part.axes)
        probs = np.multiply.outer(probs, part.probs)
    return JointPmf(tuple(axes), probs.reshape([a.size for a in axes]))


def grouped_power(joint: JointPmf, k: int) -> JointPmf:
    """k-fold iid product with each original axis collapsed to one super axis.

    Axis order inside a super symbol is lexicographic with the first copy most
    significant; this matches the channel module's super-letter convention.
    """
    if k < 1:
        raise InvalidDistribution("k must be >= 1")
    n_ax = len(joint.axes)
    letters = [
        [chr(ord("a") + copy * n_ax + i) for i in range(n_ax)] for copy in range(k)
    ]
    lhs = ",".join("".join(group) for group in letters)
    out = "".join(letters[copy][i] for i in range(n_ax) for copy in range(k))
    probs = np.einsum(f"{lhs}->{out}", *([joint.probs] * k))
    axes = tuple(Alphabet(a.name, a.size**k) for a in joint.axes)
    return JointPmf(axes, probs.reshape([a.size for a in axes]))
