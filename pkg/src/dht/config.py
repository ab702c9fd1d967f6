"""Strict JSON run configuration.

A single document describes the hypothesis-pair instance plus per-command
options.  Unknown keys are hard errors so typos in probability fields
cannot be silently ignored.  Joint pmf cells are flat arrays in
lexicographic axis order (u1, .., uL, v, z), first axis most significant,
matching the super-letter convention used for CSV outputs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import parse_channel_spec
from .errors import ConfigError, DhtError
from .infomath import Alphabet, JointPmf
from .multiletter import EncoderSpec
from .singleletter import SolverOpts, TaciInstance

_REQUIRED = ("u_sizes", "v_size", "z_size", "p_joint", "channels", "tau")
_OPTIONAL = {
    "tau_grid": None,
    "seed": 0,
    "trials": 10_000,
    "j_values": [25, 50, 100, 200],
    "delta0": 0.3,
    "delta_exponent": 1.0 / 3.0,
    "restarts": 64,
    "restarts_bt": 12,
    "w_size": None,
    "grid_res": 1.0 / 16.0,
    "k": 1,
    "encoder": "identity",
    "threads": 1,
    "budget_cells": None,
}


@dataclass
class RunConfig:
    u_sizes: list[int]
    v_size: int
    z_size: int
    p_joint: list[float]
    channels: list[str]
    tau: float
    tau_grid: list[float] | None
    seed: int
    trials: int
    j_values: list[int]
    delta0: float
    delta_exponent: float
    restarts: int
    restarts_bt: int
    w_size: int | None
    grid_res: float
    k: int
    encoder: object
    threads: int
    budget_cells: int | None
    base_dir: Path = field(default_factory=Path)


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    unknown = set(doc) - set(_REQUIRED) - set(_OPTIONAL)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = [key for key in _REQUIRED if key not in doc]
    if missing:
        raise ConfigError(f"missing config keys: {missing}")

    merged = dict(_OPTIONAL)
    merged.update(doc)

    u_sizes = merged["u_sizes"]
    _require(
        isinstance(u_sizes, list) and u_sizes and all(isinstance(s, int) and s >= 1 for s in u_sizes),
        "u_sizes: must be a non-empty list of positive integers",
    )
    for key in ("v_size", "z_size"):
        _require(isinstance(merged[key], int) and merged[key] >= 1, f"{key}: must be a positive integer")
    _require(isinstance(merged["channels"], list) and len(merged["channels"]) == len(u_sizes),
             "channels: need exactly one channel spec per observer")
    _require(isinstance(merged["tau"], (int, float)) and merged["tau"] >= 0, "tau: must be >= 0")
    cells = int(np.prod(u_sizes)) * merged["v_size"] * merged["z_size"]
    pj = merged["p_joint"]
    _require(isinstance(pj, list) and len(pj) == cells,
             f"p_joint: expected {cells} cells for the declared alphabet sizes, got {len(pj) if isinstance(pj, list) else type(pj).__name__}")
    _require(all(isinstance(x, (int, float)) for x in pj), "p_joint: entries must be numbers")
    if merged["tau_grid"] is not None:
        tg = merged["tau_grid"]
        _require(isinstance(tg, list) and all(isinstance(x, (int, float)) for x in tg),
                 "tau_grid: must be a list of numbers")
    _require(isinstance(merged["seed"], int), "seed: must be an integer")
    _require(isinstance(merged["trials"], int) and merged["trials"] >= 1, "trials: must be a positive integer")
    jv = merged["j_values"]
    _require(isinstance(jv, list) and all(isinstance(j, int) and j >= 1 for j in jv),
             "j_values: must be a list of positive integers")
    _require(merged["delta0"] > 0, "delta0: must be positive")
    _require(0 < merged["delta_exponent"] < 0.5, "delta_exponent: must lie in (0, 1/2)")
    _require(isinstance(merged["restarts"], int) and merged["restarts"] >= 1, "restarts: must be >= 1")
    _require(isinstance(merged["restarts_bt"], int) and merged["restarts_bt"] >= 1, "restarts_bt: must be >= 1")
    if merged["w_size"] is not None:
        _require(isinstance(merged["w_size"], int) and merged["w_size"] >= 2, "w_size: must be >= 2")
    _require(0 < merged["grid_res"] <= 0.5, "grid_res: must lie in (0, 1/2]")
    _require(isinstance(merged["k"], int) and merged["k"] >= 1, "k: must be a positive integer")
    _require(isinstance(merged["threads"], int) and merged["threads"] >= 1, "threads: must be >= 1")
    if merged["budget_cells"] is not None:
        _require(isinstance(merged["budget_cells"], int) and merged["budget_cells"] >= 1,
                 "budget_cells: must be a positive integer")
    enc = merged["encoder"]
    _require(enc == "identity" or isinstance(enc, list), "encoder: must be \"identity\" or a matrix")

    merged["base_dir"] = path.parent
    return RunConfig(**merged)


def build_instance(cfg: RunConfig, tau: float | None = None) -> TaciInstance:
    axes = tuple(
        Alphabet(f"u{i + 1}", s) for i, s in enumerate(cfg.u_sizes)
    ) + (Alphabet("v", cfg.v_size), Alphabet("z", cfg.z_size))
    shape = [a.size for a in axes]
    try:
        joint = JointPmf(axes, np.asarray(cfg.p_joint, dtype=np.float64).reshape(shape))
        channels = tuple(parse_channel_spec(s, cfg.base_dir) for s in cfg.channels)
        return TaciInstance(joint, channels, cfg.tau if tau is None else float(tau))
    except DhtError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_encoder(cfg: RunConfig, inst: TaciInstance, k: int) -> EncoderSpec:
    n = int(math.floor(inst.tau * k + 1e-12))
    u_size = inst.p_joint.axes[0].size
    x_size = inst.channels[0].input.size
    if cfg.encoder == "identity":
        return EncoderSpec.identity_like(k, n, u_size, x_size)
    rows = np.asarray(cfg.encoder, dtype=np.float64)
    want = (u_size**k, max(x_size**n, 1))
    if rows.shape != want:
        raise ConfigError(f"encoder: matrix shape {rows.shape} does not match {want}")
    return EncoderSpec.from_matrix(k, n, rows, u_size, x_size)


def solver_opts(cfg: RunConfig, seed: int | None = None, grid_res: float | None = None) -> SolverOpts:
    res = grid_res if grid_res is not None else None
    denom = None if res is None else max(int(round(1.0 / res)), 2)
    return SolverOpts(
        restarts=cfg.restarts,
        restarts_bt=cfg.restarts_bt,
        seed=cfg.seed if seed is None else seed,
        w_size=cfg.w_size,
        certificate_resolution=denom,
    )
