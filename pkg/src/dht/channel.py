"""Discrete memoryless channels: capacity, sampling, block products.

Super-letter index convention (shared with every other module): blocks are
flattened lexicographically with the first symbol most significant.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BudgetExceeded,
    ConfigError,
    InvalidBlocklength,
    SymbolOutOfRange,
)
from .infomath import Alphabet, CondPmf, Pmf

DEFAULT_CELL_BUDGET = 10**7
BUDGET_ENV_VAR = "DHT_BUDGET_CELLS"


def cell_budget(override: int | None = None, default: int = DEFAULT_CELL_BUDGET) -> int:
    if override is not None:
        return int(override)
    env = os.environ.get(BUDGET_ENV_VAR)
    return int(env) if env else default


@dataclass(frozen=True)
class Dmc:
    """Memoryless channel P(output | input) between two finite alphabets."""

    input: Alphabet
    output: Alphabet
    law: CondPmf

    def __post_init__(self):
        if self.law.input_axes != (self.input,) or self.law.output_axes != (self.output,):
            raise ConfigError("channel law axes do not match the declared alphabets")

    @property
    def matrix(self) -> np.ndarray:
        return self.law.matrix

    @staticmethod
    def from_matrix(rows: np.ndarray, in_name: str = "x", out_name: str = "y") -> "Dmc":
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2:
            raise ConfigError("channel matrix must be two-dimensional")
        x = Alphabet(in_name, rows.shape[0])
        y = Alphabet(out_name, rows.shape[1])
        return Dmc(x, y, CondPmf((x,), (y,), rows))

    @staticmethod
    def bsc(p: float) -> "Dmc":
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"bsc crossover probability must be in [0,1], got {p!r}")
        return Dmc.from_matrix([[1 - p, p], [p, 1 - p]])

    @staticmethod
    def bec(e: float) -> "Dmc":
        """Binary erasure channel; output symbol 2 is the erasure."""
        if not 0.0 <= e <= 1.0:
            raise ConfigError(f"bec erasure probability must be in [0,1], got {e!r}")
        return Dmc.from_matrix([[1 - e, 0.0, e], [0.0, 1 - e, e]])


def parse_channel_spec(spec: str, base_dir: str | Path | None = None) -> Dmc:
    """Parse the mini-language: bsc:<p>, bec:<e>, matrix:<csv path>."""
    kind, sep, arg = spec.partition(":")
    if not sep:
        raise ConfigError(f"channel spec {spec!r}: expected kind:value")
    if kind == "bsc" or kind == "bec":
        try:
            value = float(arg)
        except ValueError:
            raise ConfigError(f"channel spec {spec!r}: {arg!r} is not a number") from None
        return Dmc.bsc(value) if kind == "bsc" else Dmc.bec(value)
    if kind == "matrix":
        path = Path(arg)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        try:
            rows = np.loadtxt(path, delimiter=",", ndmin=2)
        except OSError as exc:
            raise ConfigError(f"channel spec {spec!r}: {exc}") from None
        return Dmc.from_matrix(rows)
    raise ConfigError(f"channel spec {spec!r}: unknown kind {kind!r}")


@dataclass(frozen=True)
class CapacityResult:
    capacity: float
    optimal_input: Pmf
    iterations: int
    gap: float
    converged: bool


def capacity_blahut_arimoto(ch: Dmc, tol: float = 1e-9, max_iter: int = 100_000) -> CapacityResult:
    """Channel capacity in bits with a certified lower/upper bracket.

    Iterates from the uniform input; stops once the classical bracket
    (lower bound from the update normalizer, upper bound from the worst-row
    divergence) closes below tol.  On hitting max_iter, the best bracket so
    far is returned with converged=False.
    """
    if tol <= 0:
        raise ConfigError("tol must be positive")
    if max_iter < 1:
        raise ConfigError("max_iter must be >= 1")
    w = ch.matrix
    nx = w.shape[0]
    r = np.full(nx, 1.0 / nx)
    lower = 0.0
    upper = np.inf
    mask = w > 0
    logw = np.zeros_like(w)
    logw[mask] = np.log2(w[mask])
    it = 0
    prev_lower = -np.inf
    for it in range(1, max_iter + 1):
        qy = r @ w
        # per-input divergence D(w_x || qy), finite because qy covers every used column
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(mask, w * (logw - np.log2(np.where(qy > 0, qy, 1.0))[None, :]), 0.0).sum(
                axis=1
            )
        lower = float(np.log2(np.dot(r, np.exp2(d))))
        upper = float(d.max())
        # iterate lower bounds are non-decreasing up to roundoff
        assert lower >= prev_lower - 1e-9
        prev_lower = lower
        if upper - lower <= tol:
            return CapacityResult(
                max(lower, 0.0), Pmf(ch.input, r), it, max(upper - lower, 0.0), True
            )
        r = r * np.exp2(d)
        r = r / r.sum()
    return CapacityResult(max(lower, 0.0), Pmf(ch.input, r), it, max(upper - lower, 0.0), False)


def channel_sample(ch: Dmc, input_seq: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Memoryless transmission: one output symbol drawn per input symbol."""
    seq = np.asarray(input_seq, dtype=np.int64)
    if seq.size and (seq.min() < 0 or seq.max() >= ch.input.size):
        raise SymbolOutOfRange(f"input symbols must lie in [0, {ch.input.size})")
    cum = np.cumsum(ch.matrix, axis=1)
    u = rng.random(seq.shape)
    out = (cum[seq] <= u[..., None]).sum(axis=-1)
    return np.minimum(out, ch.output.size - 1).astype(np.int64)


def super_channel(ch: Dmc, n: int, budget: int | None = None) -> Dmc:
    """n-fold block channel on lexicographic super-letters."""
    if n < 1:
        raise InvalidBlocklength(f"block length must be >= 1, got {n}")
    cells = (ch.input.size ** n) * (ch.output.size ** n)
    limit = cell_budget(budget)
    if cells > limit:
        raise BudgetExceeded(f"super channel needs {cells} cells, budget is {limit}")
    law = ch.matrix
    out = law
    for _ in range(n - 1):
        out = np.kron(out, law)
    x = Alphabet(ch.input.name, ch.input.size**n)
    y = Alphabet(ch.output.name, ch.output.size**n)
    return Dmc(x, y, CondPmf((x,), (y,), out))
