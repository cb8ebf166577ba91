"""Wilson's algorithm with killing on K_N, stopped after the marked vertices.

The walk from ``x`` jumps to DELTA with probability kappa/(kappa+N-1) and
otherwise to a uniform vertex of ``{1..N} - {x}``.  Loop erasure keeps the
last exit from every visited vertex, so one step costs O(1) and nothing of
size N is cleared between samples except the vertices actually added.

Only the first ``l`` walks are run: once every marked vertex is absorbed,
the tree built so far is exactly the marked subtree.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .exact_model import ModelParams
from .trees import DELTA, RootedSpanningSubtree

DEFAULT_STEP_BUDGET = 10**9


class StepBudgetExceeded(RuntimeError):
    """A walk ran longer than the configured step budget."""


def rng_stream(seed: int, stream_id: int) -> np.random.Generator:
    """Independent PCG64 stream for replicate ``stream_id`` of a run seeded by ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.PCG64(ss))


@njit(cache=True)
def _step(x, n, p_kill, rng):
    u = rng.random()
    if u < p_kill:
        return 0
    j = 1 + int((u - p_kill) / (1.0 - p_kill) * (n - 1))
    if j > n - 1:
        j = n - 1
    if j >= x:
        j += 1
    return j


@njit(cache=True)
def _walk(start, n, p_kill, rng, in_tree, nxt, budget):
    """Run the killed walk from ``start`` until it hits ``in_tree``; fill ``nxt``.

    Returns the number of steps, or -1 when ``budget`` is exhausted.
    """
    x = start
    steps = 0
    while not in_tree[x]:
        if steps >= budget:
            return -1
        y = _step(x, n, p_kill, rng)
        nxt[x] = y
        x = y
        steps += 1
    return steps


@njit(cache=True)
def _grow(l, n, p_kill, rng, in_tree, nxt, verts, parents, budget):
    """Add loop-erased branches from 1..l; returns (vertex count, total steps).

    Vertex count -1 flags an exhausted budget.  ``in_tree`` is restored to
    DELTA-only before returning.
    """
    d = 0
    total = 0
    failed = False
    for s in range(1, l + 1):
        if in_tree[s]:
            continue
        k = _walk(s, n, p_kill, rng, in_tree, nxt, budget - total)
        if k < 0:
            failed = True
            break
        total += k
        x = s
        while not in_tree[x]:
            in_tree[x] = True
            verts[d] = x
            parents[d] = nxt[x]
            d += 1
            x = nxt[x]
    for i in range(d):
        in_tree[verts[i]] = False
    if failed:
        return -1, total
    return d, total


class WilsonSampler:
    """Reusable work buffers for repeated sampling at fixed (N, kappa, l)."""

    def __init__(self, params: ModelParams, step_budget: int = DEFAULT_STEP_BUDGET):
        self.params = params
        self.step_budget = int(step_budget)
        n = params.N
        self._in_tree = np.zeros(n + 1, dtype=np.bool_)
        self._in_tree[DELTA] = True
        self._nxt = np.zeros(n + 1, dtype=np.int64)
        self._verts = np.zeros(n, dtype=np.int64)
        self._parents = np.zeros(n, dtype=np.int64)
        self.last_steps = 0

    def sample(self, rng: np.random.Generator) -> RootedSpanningSubtree:
        p = self.params
        d, steps = _grow(
            p.l, p.N, p.kill_probability, rng, self._in_tree, self._nxt,
            self._verts, self._parents, self.step_budget,
        )
        self.last_steps = steps
        if d < 0:
            raise StepBudgetExceeded(f"walk exceeded {self.step_budget} steps (N={p.N}, kappa={p.kappa})")
        parent = dict(zip(self._verts[:d].tolist(), self._parents[:d].tolist()))
        return RootedSpanningSubtree(parent, tuple(range(1, p.l + 1)))


def sample_reduced_subtree(
    params: ModelParams, rng: np.random.Generator, step_budget: int = DEFAULT_STEP_BUDGET
) -> RootedSpanningSubtree:
    """One draw of the subtree spanned by ``{1..l}`` and DELTA."""
    return WilsonSampler(params, step_budget).sample(rng)


def killed_lerw(
    start: int,
    occupied,
    params: ModelParams,
    rng: np.random.Generator,
    step_budget: int = DEFAULT_STEP_BUDGET,
) -> list[int]:
    """Loop-erased killed walk from ``start`` to the first vertex in ``occupied``.

    The returned path starts at ``start`` and ends at the absorbing vertex.
    """
    occupied = set(occupied)
    if DELTA not in occupied:
        raise ValueError("occupied set must contain DELTA")
    if start in occupied:
        raise ValueError(f"start vertex {start} is already occupied")
    n = params.N
    in_tree = np.zeros(n + 1, dtype=np.bool_)
    in_tree[list(occupied)] = True
    nxt = np.zeros(n + 1, dtype=np.int64)
    if _walk(start, n, params.kill_probability, rng, in_tree, nxt, step_budget) < 0:
        raise StepBudgetExceeded(f"walk exceeded {step_budget} steps")
    path = [start]
    while not in_tree[path[-1]]:
        path.append(int(nxt[path[-1]]))
    return path
