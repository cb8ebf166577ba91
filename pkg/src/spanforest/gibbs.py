"""The critical-regime partition as a Gibbs partition of type 1/2.

EPPF: ``p(n_1..n_r) = V(l, r, c) * prod w(n_i)`` with ``w(m) = (2m-3)!!/2^(m-1)``
and ``V(l, r, c) = 2^(l-r) I(l, r, c)``.  The sequential sampler grows a
bouquet one label at a time (a "tree restaurant"): a label either opens a
new singleton tree or joins an existing tree at a uniform edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import integrate

from .combinatorics import (
    BinaryShape,
    BouquetConfig,
    PartitionOfL,
    Tree,
    double_factorial_odd,
    graft,
    set_partitions,
)
from .limit_laws import I


def block_weight(m: int) -> Fraction:
    if m < 1:
        raise ValueError(f"block size must be positive, got {m}")
    return Fraction(double_factorial_odd(m), 2 ** (m - 1))


def V(l: int, r: int, c: float) -> float:
    return 2.0 ** (l - r) * I(l, r, c)


def eppf(sizes: Sequence[int], c: float) -> float:
    sizes = list(sizes)
    if not sizes or any(n < 1 for n in sizes):
        raise ValueError(f"block sizes must be a nonempty list of positive integers, got {sizes}")
    w = math.prod(block_weight(n) for n in sizes)
    return V(sum(sizes), len(sizes), c) * float(w)


@dataclass
class GibbsState:
    c: float
    shapes: list[Tree] = field(default_factory=list)

    @property
    def sizes(self) -> list[int]:
        return [len(BinaryShape(t).leaf_set) for t in self.shapes]

    @property
    def l(self) -> int:
        return sum(self.sizes)

    @property
    def r(self) -> int:
        return len(self.shapes)


def insertion_probabilities(state: GibbsState) -> list[float]:
    """Join-block-i probabilities for each block, then the new-block probability."""
    l, r, c = state.l, state.r, state.c
    if r == 0:
        return [1.0]
    v = V(l, r, c)
    stay = V(l + 1, r, c) / v
    return [(n - 0.5) * stay for n in state.sizes] + [V(l + 1, r + 1, c) / v]


def new_block_probability(l: int, r: int, c: float) -> float:
    """theta_{l,r}(c)."""
    return V(l + 1, r + 1, c) / V(l, r, c)


def _grafts(tree: Tree, label: int) -> list[Tree]:
    return [BinaryShape(g).tree for g in graft(tree, label)]


def sequential_sample(l: int, c: float, rng: np.random.Generator) -> tuple[PartitionOfL, tuple[BinaryShape, ...]]:
    """Insert labels 1..l; returns the partition and one binary shape per block."""
    if l < 1:
        raise ValueError(f"l must be positive, got {l}")
    state = GibbsState(c)
    for label in range(1, l + 1):
        probs = insertion_probabilities(state)
        k = int(rng.choice(len(probs), p=np.asarray(probs) / math.fsum(probs)))
        if k == state.r:
            state.shapes.append(label)
        else:
            sites = _grafts(state.shapes[k], label)
            state.shapes[k] = sites[int(rng.integers(len(sites)))]
    config = BouquetConfig(tuple(BinaryShape(t) for t in state.shapes))
    return config.blocks, config.shapes


def exact_sequential_law(l: int, c: float) -> dict[str, float]:
    """Law of the sampler's output by summing over every insertion history."""
    law: dict[str, float] = {}

    def rec(state: GibbsState, label: int, mass: float):
        if label > l:
            key = str(BouquetConfig(tuple(BinaryShape(t) for t in state.shapes)))
            law[key] = law.get(key, 0.0) + mass
            return
        probs = insertion_probabilities(state)
        for k, p in enumerate(probs):
            if k == state.r:
                rec(GibbsState(c, state.shapes + [label]), label + 1, mass * p)
            else:
                sites = _grafts(state.shapes[k], label)
                for s in sites:
                    shapes = list(state.shapes)
                    shapes[k] = s
                    rec(GibbsState(c, shapes), label + 1, mass * p / len(sites))

    rec(GibbsState(c), 1, 1.0)
    return law


def partition_law(l: int, c: float) -> dict[PartitionOfL, float]:
    """EPPF value of every set partition of {1..l}."""
    return {blocks: eppf([len(b) for b in blocks], c) for blocks in set_partitions(range(1, l + 1))}


def _rising(x: float, k: int, step: float = 1.0) -> float:
    return math.prod(x + i * step for i in range(k))


def mixture_closed_form(l: int, r: int, beta: float) -> float:
    """Average of I(l, r, C) over C with density proportional to c^beta exp(-c^2/2)."""
    if not beta > -1:
        raise ValueError(f"beta must exceed -1, got {beta}")
    if not 1 <= r <= l:
        raise ValueError(f"need 1 <= r <= l, got l={l}, r={r}")
    return 2.0 ** (-(l - r)) * _rising((beta + 1) / 2, r - 1, 0.5) / _rising(beta / 2 + 1, l - 1)


def mixture_density(c: float, beta: float) -> float:
    z = 2 ** ((beta - 1) / 2) * math.gamma((beta + 1) / 2)
    return c**beta * math.exp(-c * c / 2) / z


def mixture_integrated(l: int, r: int, beta: float) -> float:
    if not beta > -1:
        raise ValueError(f"beta must exceed -1, got {beta}")
    f = lambda c: I(l, r, c) * mixture_density(c, beta)
    val, _ = integrate.quad(f, 0.0, 40.0, points=[1.0, 3.0], epsabs=1e-13, epsrel=1e-12, limit=400)
    return val


def pd_mixture_check(l: int, r: int, beta: float) -> tuple[float, float]:
    return mixture_closed_form(l, r, beta), mixture_integrated(l, r, beta)


def pitman_yor_eppf(sizes: Sequence[int], alpha: float, theta: float) -> float:
    """Two-parameter Poisson-Dirichlet EPPF."""
    n, r = sum(sizes), len(sizes)
    v = _rising(theta + alpha, r - 1, alpha) / _rising(theta + 1, n - 1)
    return v * math.prod(_rising(1 - alpha, m - 1) for m in sizes)


def mixed_eppf(sizes: Sequence[int], beta: float) -> float:
    l, r = sum(sizes), len(sizes)
    return mixture_closed_form(l, r, beta) * math.prod(double_factorial_odd(m) for m in sizes)
