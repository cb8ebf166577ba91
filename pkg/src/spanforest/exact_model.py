"""Exact finite-N law of the marked subtree on K_N with killing kappa.

All closed forms come from the Green matrix ``(kappa I + J) / (kappa (N + kappa))``
of the killed walk on the complete graph.  The brute-force oracle enumerates
every spanning tree of ``K_N + DELTA`` through Pruefer sequences and never
uses those formulas.
"""

from __future__ import annotations

import csv
import heapq
import io
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product

from .trees import DELTA, ReducedObservation, reduce_observation, subtree_spanned

ORACLE_MAX_N = 8


@dataclass(frozen=True)
class ModelParams:
    N: int
    kappa: float
    l: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if not 1 <= self.l <= self.N:
            raise ValueError(f"need 1 <= l <= N, got l={self.l}, N={self.N}")

    @property
    def kill_probability(self) -> float:
        return self.kappa / (self.kappa + self.N - 1)


def green_submatrix_det(N: int, kappa: float, d: int) -> float:
    """Determinant of the leading d x d block of the Green matrix."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    if not 0 < d <= N:
        raise ValueError(f"need 0 < d <= N, got d={d}, N={N}")
    if d == N:
        return math.exp(-math.log(kappa) - (N - 1) * math.log(N + kappa))
    return math.exp(math.log(d + kappa) - math.log(kappa) - d * math.log(N + kappa))


def log_embedded_tree_probability(d: int, r: int, N: int, kappa: float) -> float:
    if not 1 <= d <= N:
        raise ValueError(f"need 1 <= d <= N, got d={d}, N={N}")
    if not 1 <= r <= d:
        raise ValueError(f"need 1 <= r <= d, got r={r}, d={d}")
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return (r - 1) * math.log(kappa) + math.log(d + kappa) - d * math.log(N + kappa)


def embedded_tree_probability(d: int, r: int, N: int, kappa: float) -> float:
    """P(marked subtree = Y) for one embedded tree Y with d vertices and r root edges."""
    return math.exp(log_embedded_tree_probability(d, r, N, kappa))


def class_probability(obs: ReducedObservation, params: ModelParams) -> float:
    """Probability of the whole relabelling class of ``obs``.

    Unmarked vertices of the class (branch points and degree-two vertices)
    can carry any distinct labels from ``{l+1..N}``: a falling factorial.
    """
    N, l = params.N, params.l
    if obs.l != l:
        raise ValueError(f"observation has l={obs.l}, params have l={l}")
    inner = obs.inner_count
    if inner > N - l:
        return 0.0
    log_labels = math.fsum(math.log(N - l - i) for i in range(inner))
    return math.exp(log_embedded_tree_probability(obs.d, obs.r, N, params.kappa) + log_labels)


def binary_mass(params: ModelParams) -> float:
    """Total probability that the marked subtree reduces to a binary bouquet.

    A bouquet with r trees has 2l - r branches; the class probability only
    depends on the total extension s = sum(u), which has C(s + k - 1, k - 1)
    compositions.
    """
    from .combinatorics import count_bouquets

    N, l, kappa = params.N, params.l, params.kappa
    terms = []
    for r in range(1, l + 1):
        k = 2 * l - r
        log_c = math.log(count_bouquets(l, r))
        for s in range(0, N - l - (l - r) + 1):
            inner = s + l - r
            log_p = (
                log_c
                + math.lgamma(s + k) - math.lgamma(s + 1) - math.lgamma(k)
                + log_embedded_tree_probability(l + inner, r, N, kappa)
                + math.lgamma(N - l + 1) - math.lgamma(N - l - inner + 1)
            )
            terms.append(math.exp(log_p))
            if s > 50 and terms[-1] < 1e-20 * terms[0]:
                break
    return math.fsum(terms)


def _prufer_parents(seq: tuple[int, ...], n_vertices: int) -> dict[int, int]:
    """Decode a Pruefer sequence over ``0..n_vertices-1`` and root the tree at 0."""
    degree = [1] * n_vertices
    for x in seq:
        degree[x] += 1
    leaves = [v for v in range(n_vertices) if degree[v] == 1]
    heapq.heapify(leaves)
    adj: list[list[int]] = [[] for _ in range(n_vertices)]
    for x in seq:
        leaf = heapq.heappop(leaves)
        adj[leaf].append(x)
        adj[x].append(leaf)
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    a, b = heapq.heappop(leaves), heapq.heappop(leaves)
    adj[a].append(b)
    adj[b].append(a)
    parent: dict[int, int] = {}
    stack = [DELTA]
    seen = {DELTA}
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                parent[w] = v
                stack.append(w)
    return parent


@lru_cache(maxsize=32)
def _oracle_classes(N: int, l: int) -> dict[str, tuple[ReducedObservation, tuple[tuple[int, int], ...]]]:
    """key -> (observation, ((deg DELTA, number of spanning trees), ...)).

    Independent of kappa: the tree weight is kappa ** deg(DELTA).
    """
    labels = range(1, l + 1)
    groups: dict[str, tuple[ReducedObservation, Counter]] = {}
    for seq in product(range(N + 1), repeat=N - 1):
        deg = 1 + seq.count(DELTA)
        parent = _prufer_parents(seq, N + 1)
        obs = reduce_observation(subtree_spanned(parent, labels))
        entry = groups.get(obs.key)
        if entry is None:
            entry = groups[obs.key] = (obs, Counter())
        entry[1][deg] += 1
    return {k: (obs, tuple(sorted(c.items()))) for k, (obs, c) in groups.items()}


def _exact_masses(params: ModelParams) -> dict[str, Fraction]:
    if params.N > ORACLE_MAX_N:
        raise ValueError(f"brute-force oracle limited to N <= {ORACLE_MAX_N}, got {params.N}")
    k = Fraction(params.kappa)
    z = k * (params.N + k) ** (params.N - 1)
    return {
        key: sum((cnt * k**deg for deg, cnt in degs), Fraction(0)) / z
        for key, (_, degs) in _oracle_classes(params.N, params.l).items()
    }


def brute_force_reduced_distribution(params: ModelParams) -> dict[str, float]:
    """Class key -> probability, by enumerating all (N+1)^(N-1) spanning trees.

    Masses are accumulated exactly (a float kappa is converted to its exact
    binary fraction) and rounded once at the end.
    """
    return {key: float(m) for key, m in _exact_masses(params).items()}


def oracle_observations(params: ModelParams) -> dict[str, ReducedObservation]:
    return {key: obs for key, (obs, _) in _oracle_classes(params.N, params.l).items()}


def oracle_csv(params: ModelParams) -> str:
    dist = brute_force_reduced_distribution(params)
    obs = oracle_observations(params)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["canonical_key", "r", "d", "probability"])
    for key in sorted(dist):
        w.writerow([key, obs[key].r, obs[key].d, repr(dist[key])])
    return buf.getvalue()
