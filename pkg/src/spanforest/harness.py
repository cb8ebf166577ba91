"""Monte Carlo experiments: sampling, aggregation, and comparison with theory."""

from __future__ import annotations

import json
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np
from scipy import stats
from scipy.special import gammaincc

from .combinatorics import count_binary_shapes, enumerate_bouquets
from .exact_model import ORACLE_MAX_N, ModelParams, brute_force_reduced_distribution
from .limit_laws import I, block_count_limit
from .trees import reduce_observation
from .wilson import DEFAULT_STEP_BUDGET, StepBudgetExceeded, WilsonSampler, rng_stream

SCHEMA_VERSION = 1
CHUNK = 2000
MIN_EXPECTED = 5.0
HIST_EDGES = np.round(np.arange(0.0, 6.01, 0.1), 10)


@dataclass(frozen=True)
class ExperimentConfig:
    N: int
    l: int
    replicates: int
    seed: int
    kappa: Optional[float] = None
    c: Optional[float] = None
    workers: int = 1
    step_budget: int = DEFAULT_STEP_BUDGET

    def __post_init__(self):
        if (self.kappa is None) == (self.c is None):
            raise ValueError("give exactly one of kappa (fixed regime) or c (kappa = c sqrt(N))")
        if self.replicates < 1 or self.workers < 1:
            raise ValueError("replicates and workers must be positive")
        self.params  # validates N, l, kappa

    @property
    def mode(self) -> str:
        return "fixed" if self.kappa is not None else "critical"

    @property
    def resolved_kappa(self) -> float:
        return float(self.kappa) if self.kappa is not None else float(self.c) * math.sqrt(self.N)

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.N, self.resolved_kappa, self.l)


@dataclass
class DistributionComparison:
    chi2: float
    dof: int
    p_value: float
    tv: float
    n: int
    cells: int

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in ("chi2", "dof", "p_value", "tv", "n", "cells")}


def chi2_pvalue(chi2: float, dof: int) -> float:
    """Upper tail of the chi-square law via the regularized upper incomplete gamma."""
    if dof <= 0:
        return 1.0
    if math.isinf(chi2):
        return 0.0
    return float(gammaincc(dof / 2.0, chi2 / 2.0))


def compare_distributions(empirical: Mapping, theoretical: Mapping[str, float]) -> DistributionComparison:
    """Pearson chi-square and total variation between counts and probabilities.

    Pooling: every cell with expected count below 5 goes into one pooled
    cell, together with the theoretical remainder ``1 - sum(theoretical)``
    and any observed key the theory does not list.  If the pooled cell still
    has expected count below 5 it is merged into the smallest kept cell.
    """
    n = sum(empirical.values())
    if n <= 0:
        raise ValueError("empirical counts are empty")
    p_total = math.fsum(theoretical.values())
    if p_total > 1 + 1e-9:
        raise ValueError(f"theoretical probabilities sum to {p_total} > 1")
    remainder = max(0.0, 1.0 - p_total)

    extra_obs = sum(v for k, v in empirical.items() if k not in theoretical)
    tv = 0.5 * (
        math.fsum(abs(empirical.get(k, 0) / n - p) for k, p in theoretical.items())
        + abs(extra_obs / n - remainder)
    )

    kept: list[tuple[float, int]] = []
    pooled_exp, pooled_obs = remainder * n, extra_obs
    for k in sorted(theoretical):
        e, o = theoretical[k] * n, empirical.get(k, 0)
        if e >= MIN_EXPECTED:
            kept.append((e, o))
        else:
            pooled_exp += e
            pooled_obs += o
    if pooled_exp >= MIN_EXPECTED or not kept:
        if pooled_exp > 0 or pooled_obs > 0:
            kept.append((pooled_exp, pooled_obs))
    elif pooled_exp > 0 or pooled_obs > 0:
        i = min(range(len(kept)), key=lambda j: kept[j][0])
        kept[i] = (kept[i][0] + pooled_exp, kept[i][1] + pooled_obs)

    chi2 = 0.0
    for e, o in kept:
        if e == 0:
            chi2 = math.inf if o else chi2
        else:
            chi2 += (o - e) ** 2 / e
    dof = len(kept) - 1
    return DistributionComparison(chi2, dof, chi2_pvalue(chi2, dof), tv, n, len(kept))


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov distance between the empirical law of ``samples`` and ``cdf``."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("no samples")
    return float(stats.kstest(samples, cdf).statistic)


def _blocks_key(blocks) -> str:
    return "|".join(",".join(map(str, b)) for b in blocks)


@dataclass
class _Chunk:
    class_counts: Counter = field(default_factory=Counter)
    shape_counts: Counter = field(default_factory=Counter)
    classification: Counter = field(default_factory=Counter)
    block_counts: Counter = field(default_factory=Counter)
    partitions: Counter = field(default_factory=Counter)
    sigma: list = field(default_factory=list)
    depth1: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    steps: int = 0
    failures: list = field(default_factory=list)


def _run_chunk(params: ModelParams, seed: int, start: int, stop: int, budget: int, keep_rows: bool) -> _Chunk:
    out = _Chunk()
    sampler = WilsonSampler(params, budget)
    root_n = math.sqrt(params.N)
    for rep in range(start, stop):
        try:
            tree = sampler.sample(rng_stream(seed, rep))
        except StepBudgetExceeded:
            out.failures.append(rep)
            out.steps += sampler.last_steps
            continue
        out.steps += sampler.last_steps
        obs = reduce_observation(tree)
        if params.N <= ORACLE_MAX_N:
            out.class_counts[obs.key] += 1
        out.shape_counts[obs.shape_key] += 1
        out.classification[obs.classification] += 1
        out.block_counts[obs.r] += 1
        out.partitions[_blocks_key(obs.blocks)] += 1
        out.sigma.append(sum(obs.u) / root_n)
        depth, x = 0, 1
        while x != 0:
            x, depth = tree.parent[x], depth + 1
        out.depth1.append(depth)
        if keep_rows:
            out.rows.append((rep, obs.classification, obs.shape_key, obs.r, obs.u, obs.d))
    return out


def _merge(chunks: list[_Chunk]) -> _Chunk:
    total = _Chunk()
    for ch in chunks:
        for name in ("class_counts", "shape_counts", "classification", "block_counts", "partitions"):
            getattr(total, name).update(getattr(ch, name))
        total.sigma.extend(ch.sigma)
        total.depth1.extend(ch.depth1)
        total.rows.extend(ch.rows)
        total.steps += ch.steps
        total.failures.extend(ch.failures)
    return total


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    counts: _Chunk
    exact: Optional[dict]
    limit_shapes: dict
    limit_blocks: dict
    runtime_seconds: float

    @property
    def n(self) -> int:
        return sum(self.counts.classification.values())

    def frequencies(self, counter: Mapping) -> dict:
        n = self.n
        return {str(k): v / n for k, v in sorted(counter.items(), key=lambda kv: str(kv[0]))}

    @property
    def sigma(self) -> np.ndarray:
        return np.asarray(self.counts.sigma)

    @property
    def depth1(self) -> np.ndarray:
        return np.asarray(self.counts.depth1)

    def shape_frequency_given_single_tree(self) -> dict[str, float]:
        """Frequencies of r = 1 binary shapes among samples that are r = 1 binary trees."""
        keys = [str(b) for b in enumerate_bouquets(range(1, self.config.l + 1), 1)]
        m = sum(self.counts.shape_counts.get(k, 0) for k in keys)
        return {k: self.counts.shape_counts.get(k, 0) / m if m else 0.0 for k in keys}

    def exact_comparison(self) -> Optional[DistributionComparison]:
        if self.exact is None:
            return None
        return compare_distributions(self.counts.class_counts, self.exact)

    def limit_shape_comparison(self) -> DistributionComparison:
        return compare_distributions(self.counts.shape_counts, self.limit_shapes)

    def limit_block_comparison(self) -> DistributionComparison:
        return compare_distributions({str(k): v for k, v in self.counts.block_counts.items()}, self.limit_blocks)

    def to_dict(self, include_timing: bool = True) -> dict:
        cfg = self.config
        hist, _ = np.histogram(np.clip(self.sigma, 0, HIST_EDGES[-1]), bins=HIST_EDGES)
        d = {
            "schema_version": SCHEMA_VERSION,
            "config": {
                "N": cfg.N, "l": cfg.l, "mode": cfg.mode, "kappa": cfg.resolved_kappa,
                "c": cfg.c, "replicates": cfg.replicates, "seed": cfg.seed, "step_budget": cfg.step_budget,
            },
            "n_samples": self.n,
            "budget_failures": list(self.counts.failures),
            "total_steps": self.counts.steps,
            "classification_counts": dict(sorted(self.counts.classification.items())),
            "block_count_frequencies": self.frequencies(self.counts.block_counts),
            "partition_frequencies": self.frequencies(self.counts.partitions),
            "shape_counts": dict(sorted(self.counts.shape_counts.items())),
            "limit_shape_probabilities": self.limit_shapes,
            "limit_block_probabilities": self.limit_blocks,
            "rescaled_length_histogram": {"edges": HIST_EDGES.tolist(), "counts": hist.tolist()},
            "tests": {},
        }
        if self.n == 0:
            # every replicate hit the step budget; nothing to compare
            if include_timing:
                d["timing"] = {"runtime_seconds": self.runtime_seconds}
            return d
        d["tests"]["limit_shapes"] = self.limit_shape_comparison().to_dict()
        d["tests"]["limit_blocks"] = self.limit_block_comparison().to_dict()
        if cfg.l == 1:
            d["tests"]["ks_rescaled_length"] = ks_distance(
                self.sigma, lambda x: 1 - np.exp(-x * x / 2 - (cfg.c or 0.0) * x))
        if self.exact is not None:
            d["class_counts"] = dict(sorted(self.counts.class_counts.items()))
            d["exact_probabilities"] = dict(sorted(self.exact.items()))
            d["tests"]["exact"] = self.exact_comparison().to_dict()
        if include_timing:
            d["timing"] = {"runtime_seconds": self.runtime_seconds}
        return d

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n"

    def observation_rows(self) -> list[list]:
        width = max((len(r[4]) for r in self.counts.rows), default=0)
        out = [["replicate", "classification", "canonical_key", "r", *[f"u_{i + 1}" for i in range(width)], "d"]]
        for rep, cls, key, r, u, d in self.counts.rows:
            out.append([rep, cls, key, r, *u, *[""] * (width - len(u)), d])
        return out


def limit_probabilities(cfg: ExperimentConfig) -> tuple[dict, dict]:
    l = cfg.l
    if cfg.mode == "fixed":
        p = 1.0 / count_binary_shapes(l)
        shapes = {str(b): p for b in enumerate_bouquets(range(1, l + 1), 1)}
        return shapes, {"1": 1.0}
    shapes = {}
    for r in range(1, l + 1):
        i = I(l, r, cfg.c)
        shapes.update({str(b): i for b in enumerate_bouquets(range(1, l + 1), r)})
    blocks = {str(r): p for r, p in enumerate(block_count_limit(l, cfg.c), start=1)}
    return shapes, blocks


def run_monte_carlo(cfg: ExperimentConfig, keep_rows: bool = False) -> ExperimentReport:
    """Sample ``cfg.replicates`` marked subtrees; replicate i always uses stream i."""
    t0 = time.perf_counter()
    params = cfg.params
    spans = [(a, min(a + CHUNK, cfg.replicates)) for a in range(0, cfg.replicates, CHUNK)]
    args = [(params, cfg.seed, a, b, cfg.step_budget, keep_rows) for a, b in spans]
    if cfg.workers > 1 and len(spans) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            chunks = list(pool.map(_run_chunk, *zip(*args)))
    else:
        chunks = [_run_chunk(*a) for a in args]
    counts = _merge(chunks)
    exact = brute_force_reduced_distribution(params) if params.N <= ORACLE_MAX_N else None
    shapes, blocks = limit_probabilities(cfg)
    return ExperimentReport(cfg, counts, exact, shapes, blocks, time.perf_counter() - t0)
