"""Limiting quantities as N -> infinity.

``A(n, c) = int_0^inf s^n exp(-s^2/2 - c s) ds`` is the building block.  It is
evaluated from the complementary error function for n = 0, then by the
upward recursion ``A(n+1) = n A(n-1) - c A(n)``.  The recursion cancels
about 2n log10(1 + c) digits, so it runs in extended precision sized to that
loss and the result is rounded to float once at the end.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

import mpmath
import numpy as np
from scipy import integrate

from .combinatorics import BouquetConfig, count_binary_shapes, count_bouquets
from .exact_model import ModelParams, class_probability
from .trees import ReducedObservation

QUAD_EPSREL = 1e-13
GUARD_DIGITS = 25


def _check_c(c: float) -> None:
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")


def sigma_max(n: int) -> float:
    """Upper integration limit where s^n exp(-s^2/2) is below 1e-16."""
    return max(10.0, math.sqrt(2 * n)) + 6.0


def quad_A(n: int, c: float) -> float:
    """A(n, c) by adaptive Gauss-Kronrod quadrature only."""
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    peak = (-c + math.sqrt(c * c + 4 * n)) / 2
    upper = sigma_max(n)
    f = lambda s: s**n * math.exp(-s * s / 2 - c * s)
    pts = [peak] if 0 < peak < upper else None
    val, _ = integrate.quad(f, 0.0, upper, points=pts, epsabs=0.0, epsrel=QUAD_EPSREL, limit=400)
    return val


@lru_cache(maxsize=4096)
def _A_table(nmax: int, c: float) -> tuple[float, ...]:
    dps = GUARD_DIGITS + int(2 * nmax * math.log10(1.0 + c)) + 1
    with mpmath.workdps(dps):
        x = mpmath.mpf(c)
        a0 = mpmath.sqrt(mpmath.pi / 2) * mpmath.exp(x * x / 2) * mpmath.erfc(x / mpmath.sqrt(2))
        vals = [a0, 1 - x * a0]
        for n in range(1, nmax):
            vals.append(n * vals[n - 1] - x * vals[n])
        return tuple(float(v) for v in vals[: nmax + 1])


def A(n: int, c: float) -> float:
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    _check_c(c)
    return _A_table(max(n, 1), float(c))[n]


def _check_lr(l: int, r: int) -> None:
    if l < 1 or not 1 <= r <= l:
        raise ValueError(f"need 1 <= r <= l, got l={l}, r={r}")


def I(l: int, r: int, c: float) -> float:
    """Limit probability of each individual r-tree bouquet on l marked vertices."""
    _check_lr(l, r)
    _check_c(c)
    if l == 1:
        return 1.0
    m = 2 * l - r - 2
    return c ** (r - 1) / math.factorial(m) * A(m, c)


def I_two_term(l: int, r: int, c: float) -> float:
    """The same limit written with A(m+2) + c A(m+1), valid for every l >= 1."""
    _check_lr(l, r)
    _check_c(c)
    m = 2 * l - r - 2
    return c ** (r - 1) / math.factorial(m + 1) * (A(m + 2, c) + c * A(m + 1, c))


def I_quad(l: int, r: int, c: float) -> float:
    """I by direct one-dimensional quadrature of (s + c) s^k exp(-s^2/2 - c s) / k!."""
    _check_lr(l, r)
    k = 2 * l - r - 1
    f = lambda s: (s + c) * s**k * math.exp(-s * s / 2 - c * s)
    val, _ = integrate.quad(f, 0.0, sigma_max(k + 1), epsabs=0.0, epsrel=QUAD_EPSREL, limit=400)
    return c ** (r - 1) / math.factorial(k) * val


def normalization_sum(l: int, c: float) -> float:
    """S_l(c) = sum_r C_{l,r} I_{l,r}(c); identically 1."""
    return math.fsum(count_bouquets(l, r) * I(l, r, c) for r in range(1, l + 1))


def block_count_limit(l: int, c: float) -> list[float]:
    """Limit law of the number of blocks of the induced partition, r = 1..l."""
    return [count_bouquets(l, r) * I(l, r, c) for r in range(1, l + 1)]


def fixed_kappa_density(t: Sequence[float]) -> float:
    s = float(np.sum(t))
    if np.any(np.asarray(t) < 0):
        raise ValueError("extension coordinates must be nonnegative")
    return s * math.exp(-s * s / 2)


def critical_density(t: Sequence[float], r: int, c: float) -> float:
    if np.any(np.asarray(t) < 0):
        raise ValueError("extension coordinates must be nonnegative")
    s = float(np.sum(t))
    return c ** (r - 1) * (s + c) * math.exp(-s * s / 2 - c * s)


def simplex_integral(radial, dim: int) -> float:
    """Integral over R_+^dim of radial(sum t): the slice {sum t = s} has volume s^(dim-1)/(dim-1)!."""
    f = lambda s: s ** (dim - 1) * radial(s)
    val, _ = integrate.quad(f, 0.0, sigma_max(dim + 1) + 10, epsabs=0.0, epsrel=QUAD_EPSREL, limit=400)
    return val / math.factorial(dim - 1)


def fixed_kappa_mass(l: int) -> float:
    """Integral of the fixed-kappa density over R_+^(2l-1); equals 1/c_l."""
    return simplex_integral(lambda s: s * math.exp(-s * s / 2), 2 * l - 1)


def uniform_shape_limit(l: int) -> float:
    return 1.0 / count_binary_shapes(l)


def distance_density(x: float, c: float | None = None) -> float:
    """Limit density of (distance to DELTA)/sqrt(N); c=None is the fixed-kappa case."""
    if x < 0:
        return 0.0
    c = 0.0 if c is None else c
    return (x + c) * math.exp(-x * x / 2 - c * x)


def distance_cdf(x, c: float | None = None):
    x = np.maximum(np.asarray(x, dtype=float), 0.0)
    c = 0.0 if c is None else c
    return 1.0 - np.exp(-x * x / 2 - c * x)


def distance_tail(t: float, c: float) -> float:
    """lim P(U_N / sqrt(N) >= t) at kappa = c sqrt(N)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    _check_c(c)
    return math.exp(-t * t / 2 - c * t)


def finite_n_scaled_pmf(config: BouquetConfig, t: Sequence[float], N: int, kappa: float) -> float:
    """N^(k/2) P(Q_L = config, u = floor(t sqrt(N))), k = len(t) = 2l - r."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be componentwise nonnegative")
    u = np.floor(t * math.sqrt(N)).astype(int)
    obs = ReducedObservation.from_bouquet(config, u.tolist())
    p = class_probability(obs, ModelParams(N, kappa, config.l))
    return N ** (len(t) / 2) * p


def limit_table(lmax: int, cs: Sequence[float]) -> list[dict]:
    rows = []
    for c in cs:
        for l in range(1, lmax + 1):
            s = normalization_sum(l, c)
            for r in range(1, l + 1):
                C, i = count_bouquets(l, r), I(l, r, c)
                rows.append({"l": l, "r": r, "c": c, "C_lr": C, "I_lr": i, "CI_lr": C * i, "S_l": s})
    return rows
