"""Shared oracles and instance generators for the test suite.

Closed forms here are independent of the library's optimizers: binary
entropy and its inverse by bisection, and the convolution-based exponent
for the symmetric binary source, which pins the optimizer's targets.
"""

import math

import numpy as np

from dht.channel import Dmc
from dht.infomath import Alphabet, JointPmf
from dht.singleletter import TaciInstance


def binary_entropy(a: float) -> float:
    if a <= 0.0 or a >= 1.0:
        return 0.0
    return -a * math.log2(a) - (1 - a) * math.log2(1 - a)


def binary_entropy_inv(y: float) -> float:
    """Inverse of binary entropy on [0, 1/2]."""
    lo, hi = 0.0, 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if binary_entropy(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


BSC01_CAPACITY = 1.0 - binary_entropy(0.1)  # 0.5310044064107188


def gerber_exponent(q: float, capacity: float, tau: float) -> float:
    """Optimal symmetric-binary exponent: 1 - h2(a * q) with h2(a) = 1 - tau*C."""
    budget = tau * capacity
    if budget >= 1.0:
        return 1.0 - binary_entropy(q)
    a = binary_entropy_inv(1.0 - budget)
    return 1.0 - binary_entropy(a * (1 - q) + (1 - a) * q)


def random_l1_instance(rng: np.random.Generator, tau: float = 1.0, floor: float = 0.05,
                       max_size: int = 3) -> TaciInstance:
    nu, nv, nz = (int(s) for s in rng.integers(2, max_size + 1, size=3))
    probs = rng.gamma(1.0, size=(nu, nv, nz)) + floor
    probs /= probs.sum()
    axes = (Alphabet("u1", nu), Alphabet("v", nv), Alphabet("z", nz))
    return TaciInstance(JointPmf(axes, probs), (random_channel(rng),), tau)


def random_binary_instance(rng: np.random.Generator, tau: float, floor: float = 0.05) -> TaciInstance:
    probs = rng.gamma(1.0, size=(2, 2, 2)) + floor
    probs /= probs.sum()
    axes = (Alphabet("u1", 2), Alphabet("v", 2), Alphabet("z", 2))
    return TaciInstance(JointPmf(axes, probs), (random_binary_channel(rng),), tau)


def random_channel(rng: np.random.Generator, max_size: int = 3, floor: float = 0.05) -> Dmc:
    nx, ny = (int(s) for s in rng.integers(2, max_size + 1, size=2))
    rows = rng.gamma(1.0, size=(nx, ny)) + floor
    rows /= rows.sum(axis=1, keepdims=True)
    return Dmc.from_matrix(rows)


def random_binary_channel(rng: np.random.Generator, floor: float = 0.05) -> Dmc:
    rows = rng.gamma(1.0, size=(2, 2)) + floor
    rows /= rows.sum(axis=1, keepdims=True)
    return Dmc.from_matrix(rows)


def dsbs_pair_instance(q1: float, q2: float, ch1: Dmc, ch2: Dmc, tau: float) -> TaciInstance:
    """Two independent symmetric binary pairs; V carries both partner bits."""
    def pair(q):
        return np.array([[(1 - q) / 2, q / 2], [q / 2, (1 - q) / 2]])

    probs = np.einsum("av,bw->abvw", pair(q1), pair(q2)).reshape(2, 2, 4, 1)
    axes = (Alphabet("u1", 2), Alphabet("u2", 2), Alphabet("v", 4), Alphabet("z", 1))
    return TaciInstance(JointPmf(axes, probs), (ch1, ch2), tau)


def random_l2_instance(rng: np.random.Generator, tau: float = 1.0, floor: float = 0.08) -> TaciInstance:
    probs = rng.gamma(1.0, size=(2, 2, 2, 2)) + floor
    probs /= probs.sum()
    axes = (Alphabet("u1", 2), Alphabet("u2", 2), Alphabet("v", 2), Alphabet("z", 2))
    return TaciInstance(
        JointPmf(axes, probs), (random_binary_channel(rng), random_binary_channel(rng)), tau
    )
