"""Exit criteria for the whole package, runnable from pytest or ``spanforest validate``."""

from __future__ import annotations

import math
import time
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import gibbs, limit_laws
from .combinatorics import BinaryShape, BouquetConfig, count_binary_shapes, enumerate_bouquets
from .exact_model import (
    ModelParams,
    _exact_masses,
    binary_mass,
    brute_force_reduced_distribution,
    class_probability,
    oracle_observations,
)
from .harness import ExperimentConfig, ks_distance, run_monte_carlo
from .trees import contour_decode, contour_encode, excursion_count, excursion_partition, plane_shape, reduce_observation
from .wilson import WilsonSampler, rng_stream

SEED = 20_261_017


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.number:2d}. {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(number, name, budget_s, fn) -> CriterionResult:
    t0 = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t0
    if budget_s is not None and dt >= budget_s:
        ok, detail = False, f"{detail}; runtime {dt:.1f}s over {budget_s}s budget"
    return CriterionResult(number, name, bool(ok), detail, dt)


def oracle_equivalence():
    worst_diff = worst_sum = 0.0
    for N in (3, 5, 6):
        for kappa in (0.5, 1.0, 2.0):
            for l in (1, 2, 3):
                p = ModelParams(N, kappa, l)
                dist = brute_force_reduced_distribution(p)
                obs = oracle_observations(p)
                worst_diff = max(worst_diff, max(abs(dist[k] - class_probability(obs[k], p)) for k in dist))
                worst_sum = max(worst_sum, abs(math.fsum(dist.values()) - 1.0))
    hand = sorted(_exact_masses(ModelParams(3, 1, 2)).values())
    hand_ok = hand == sorted([Fraction(3, 16)] * 3 + [Fraction(1, 16)] * 7)
    ok = worst_diff <= 1e-12 and worst_sum <= 1e-12 and hand_ok
    return ok, f"max |oracle - formula| = {worst_diff:.2e}, max |sum - 1| = {worst_sum:.2e}, N=3 table exact: {hand_ok}"


def sampler_vs_oracle():
    rep = run_monte_carlo(ExperimentConfig(N=6, kappa=2.0, l=2, replicates=10**5, seed=SEED + 2))
    cmp = rep.exact_comparison()
    return cmp.p_value > 1e-3, f"chi2 = {cmp.chi2:.1f} on {cmp.dof} dof, p = {cmp.p_value:.3g}"


def uniform_binary_shapes():
    cfg = ExperimentConfig(N=10**4, kappa=1.0, l=3, replicates=10**4, seed=SEED + 3)
    rep = run_monte_carlo(cfg)
    freqs = rep.shape_frequency_given_single_tree()
    dev = max(abs(f - 1 / 3) for f in freqs.values())
    degenerate = rep.counts.classification.get("degenerate", 0) / rep.n
    exact = 1.0 - binary_mass(cfg.params)
    ok = dev <= 0.02 and degenerate < 0.05
    shown = ", ".join(f"{k}: {v:.4f}" for k, v in freqs.items())
    return ok, (f"shape freqs {shown} (max dev {dev:.4f}); non-binary frequency {degenerate:.4f} "
                f"(need < 0.05; exact finite-N mass {exact:.4f})")


def distance_density_ks():
    rep = run_monte_carlo(ExperimentConfig(N=10**4, kappa=1.0, l=1, replicates=10**4, seed=SEED + 4))
    d = ks_distance(rep.sigma, lambda x: limit_laws.distance_cdf(x))
    return d < 0.03, f"KS distance {d:.4f}"


def normalization_identities():
    cs = (0.1, 0.5, 1.0, 2.0, 10.0)
    s_err = max(abs(limit_laws.normalization_sum(l, c) - 1) for l in range(1, 11) for c in cs)
    eq_err = max(
        abs(limit_laws.I(l, r, c) - limit_laws.I_two_term(l, r, c))
        for l in range(1, 11) for r in range(1, l + 1) for c in (0.1, 1.0, 10.0)
    )
    rec_err = 0.0
    for c in (0.1, 1.0, 10.0):
        q = [limit_laws.quad_A(n, c) for n in range(22)]
        rec_err = max(rec_err, max(abs(q[n + 1] - (n * q[n - 1] - c * q[n])) / max(1.0, q[n + 1]) for n in range(1, 21)))
    br_err = max(
        abs((2 * l - r - 2) * limit_laws.I(l, r, c) + limit_laws.I(l, r + 1, c) - limit_laws.I(l - 1, r, c))
        for l in range(2, 11) for r in range(1, l) for c in cs
    )
    ok = s_err <= 1e-8 and eq_err <= 1e-10 and rec_err <= 1e-9 and br_err <= 1e-10
    return ok, f"S_l {s_err:.1e}, two forms of I {eq_err:.1e}, A-recursion {rec_err:.1e}, bracket {br_err:.1e}"


def critical_block_counts():
    r2 = run_monte_carlo(ExperimentConfig(N=4 * 10**4, c=1.0, l=2, replicates=10**4, seed=SEED + 6))
    p2 = r2.counts.block_counts.get(2, 0) / r2.n
    i22 = limit_laws.I(2, 2, 1.0)
    r3 = run_monte_carlo(ExperimentConfig(N=4 * 10**4, c=1.0, l=3, replicates=10**4, seed=SEED + 60))
    lim3 = limit_laws.block_count_limit(3, 1.0)
    emp3 = [r3.counts.block_counts.get(r, 0) / r3.n for r in (1, 2, 3)]
    dev3 = max(abs(a - b) for a, b in zip(emp3, lim3))
    ok = abs(p2 - i22) <= 0.02 and dev3 <= 0.03
    return ok, (f"l=2: P(r=2) = {p2:.4f} vs {i22:.4f}; l=3: "
                f"{', '.join(f'{e:.4f}' for e in emp3)} vs {', '.join(f'{x:.4f}' for x in lim3)}")


def convergence_rate():
    shape = BouquetConfig((BinaryShape(1),))
    lim = limit_laws.fixed_kappa_density([1.0])
    e1 = abs(limit_laws.finite_n_scaled_pmf(shape, [1.0], 10**4, 1.0) - lim)
    e2 = abs(limit_laws.finite_n_scaled_pmf(shape, [1.0], 4 * 10**4, 1.0) - lim)
    ratio = e2 / e1
    return 0.35 <= ratio <= 0.7, f"errors {e1:.3e} -> {e2:.3e}, ratio {ratio:.3f}"


def _size_multisets(l):
    def rec(rem, maxpart):
        if rem == 0:
            yield ()
            return
        for k in range(min(rem, maxpart), 0, -1):
            for rest in rec(rem - k, k):
                yield (k, *rest)
    yield from rec(l, l)


def gibbs_exactness():
    worst_part = worst_uniform = worst_sum = 0.0
    for c in (0.5, 1.0, 2.0):
        for l in range(1, 6):
            law = gibbs.exact_sequential_law(l, c)
            by_partition = defaultdict(list)
            for r in range(1, l + 1):
                for cfg in enumerate_bouquets(range(1, l + 1), r):
                    by_partition[cfg.blocks].append(law.get(str(cfg), 0.0))
            for blocks, masses in by_partition.items():
                target = gibbs.eppf([len(b) for b in blocks], c)
                worst_part = max(worst_part, abs(math.fsum(masses) - target))
                each = target / math.prod(count_binary_shapes(len(b)) for b in blocks)
                worst_uniform = max(worst_uniform, max(abs(m - each) for m in masses))
        for l in range(1, 11):
            for sizes in _size_multisets(l):
                state = gibbs.GibbsState(c, [_comb(n, start) for n, start in _layout(sizes)])
                worst_sum = max(worst_sum, abs(math.fsum(gibbs.insertion_probabilities(state)) - 1))
    ok = worst_part <= 1e-10 and worst_uniform <= 1e-10 and worst_sum <= 1e-12
    return ok, f"partition mass {worst_part:.1e}, within-partition uniformity {worst_uniform:.1e}, insertion sums {worst_sum:.1e}"


def _layout(sizes):
    start = 1
    for n in sizes:
        yield n, start
        start += n


def _comb(n, start):
    t = start
    for x in range(start + 1, start + n):
        t = (t, x)
    return t


def mixture_identity():
    worst = 0.0
    for beta in (0.0, 1.0, 2.0):
        for l in range(1, 6):
            for r in range(1, l + 1):
                a, b = gibbs.pd_mixture_check(l, r, beta)
                worst = max(worst, abs(a - b))
    return worst <= 1e-6, f"max |closed - quadrature| = {worst:.1e}"


DYCK_REGIMES = (
    (ModelParams(6, 2.0, 3), 2500),
    (ModelParams(10**4, 1.0, 3), 2500),
    (ModelParams(4 * 10**4, 200.0, 3), 2500),
    (ModelParams(1000, 1000.0, 4), 2500),
)


def dyck_structure():
    failures = total = 0
    for i, (params, reps) in enumerate(DYCK_REGIMES):
        sampler = WilsonSampler(params)
        for k in range(reps):
            tree = sampler.sample(rng_stream(SEED + 10 + i, k))
            obs = reduce_observation(tree)
            path = contour_encode(tree)
            ok = True
            try:
                path.validate()
            except ValueError:
                ok = False
            ok = ok and len(path.steps) == 2 * obs.d
            ok = ok and plane_shape(contour_decode(path)) == plane_shape(tree)
            ok = ok and excursion_partition(path) == obs.blocks
            ok = ok and excursion_count(path) == obs.r
            failures += not ok
            total += 1
    return failures == 0, f"{total - failures}/{total} trees passed round-trip and excursion checks"


def trivial_regimes():
    lo, hi = limit_laws.I(2, 2, 0.01), limit_laws.I(2, 2, 100.0)
    sub = run_monte_carlo(ExperimentConfig(N=10**4, kappa=1.0, l=2, replicates=10**4, seed=SEED + 11))
    joined = sub.counts.block_counts.get(1, 0) / sub.n
    sup = run_monte_carlo(ExperimentConfig(N=10**4, kappa=1e4, l=2, replicates=10**4, seed=SEED + 111))
    split = sup.counts.block_counts.get(2, 0) / sup.n
    mean_dist = float(np.mean(sup.depth1)) / math.sqrt(10**4)
    ok = lo < 0.02 and hi > 0.98 and joined > 0.95 and split > 0.95 and mean_dist < 0.05
    return ok, (f"I22(0.01) = {lo:.4f}, I22(100) = {hi:.4f}; kappa=1: P(1~2) = {joined:.4f}; "
                f"kappa=1e4: P(1!~2) = {split:.4f}, mean distance/sqrt(N) = {mean_dist:.4f}")


CRITERIA = (
    (1, "exact law vs Pruefer oracle", 60, oracle_equivalence),
    (2, "Wilson sampler vs oracle (N=6)", 60, sampler_vs_oracle),
    (3, "uniform binary shapes, fixed kappa", 120, uniform_binary_shapes),
    (4, "distance density x exp(-x^2/2)", None, distance_density_ks),
    (5, "normalization and recursion identities", 10, normalization_identities),
    (6, "critical block-count law", 120, critical_block_counts),
    (7, "1/sqrt(N) convergence rate", None, convergence_rate),
    (8, "Gibbs sequential construction exactness", None, gibbs_exactness),
    (9, "PD(1/2, beta/2) mixture identity", None, mixture_identity),
    (10, "Dyck path / excursion structure", None, dyck_structure),
    (11, "sub- and supercritical regimes", None, trivial_regimes),
)


def run_criterion(number: int) -> CriterionResult:
    for num, name, budget, fn in CRITERIA:
        if num == number:
            return _timed(num, name, budget, fn)
    raise KeyError(number)


def run_all(echo=print) -> list[CriterionResult]:
    results = []
    for num, *_ in CRITERIA:
        res = run_criterion(num)
        if echo:
            echo(res.line())
        results.append(res)
    return results
