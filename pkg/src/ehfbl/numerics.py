"""Special functions, Gauss-Hermite quadrature and reproducible random streams.

Everything else in the package draws its Gaussian CDF/quantile, its moment
integrals and its random numbers from here, so accuracy and determinism
guarantees are concentrated in one place.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy import special, stats

from .exceptions import DomainError

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)
LOG2E = math.log2(math.e)

_MASK64 = (1 << 64) - 1

# Rational approximation of the normal quantile (P. J. Acklam), rel. error ~1.2e-9
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def std_normal_cdf(x):
    """Standard normal CDF, ``0.5 * erfc(-x / sqrt(2))``.

    Accepts scalars or arrays; scalars come back as ``float``.
    """
    out = 0.5 * special.erfc(-np.asarray(x, dtype=float) / SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def std_normal_pdf(x):
    out = np.exp(-0.5 * np.square(np.asarray(x, dtype=float))) / SQRT2PI
    return float(out) if np.ndim(out) == 0 else out


def _acklam(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log1p(-p))
        return -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
        (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)


def std_normal_quantile(p: float) -> float:
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1).

    A rational first guess is polished with one Newton step on the CDF.
    In the upper half the residual is taken against the upper tail so that
    the step does not lose digits to cancellation.

    Raises
    ------
    DomainError
        If ``p`` is not strictly inside (0, 1).
    """
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile requires 0 < p < 1, got {p!r}")
    if p == 0.5:
        return 0.0
    x = _acklam(p)
    if p < 0.5:
        resid = 0.5 * math.erfc(-x / SQRT2) - p
    else:
        resid = (1.0 - p) - 0.5 * math.erfc(x / SQRT2)
    return x - resid * SQRT2PI * math.exp(0.5 * x * x)


def std_normal_quantile_derivative(p: float) -> float:
    """d/dp of the normal quantile, ``1 / pdf(quantile(p))``."""
    x = std_normal_quantile(p)
    return SQRT2PI * math.exp(0.5 * x * x)


@dataclass(frozen=True)
class QuadratureRule:
    """Physicists' Gauss-Hermite rule for weight ``exp(-t**2)``."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=32)
def gauss_hermite_rule(order: int) -> QuadratureRule:
    if order < 2:
        raise DomainError(f"quadrature order must be >= 2, got {order}")
    nodes, weights = hermgauss(order)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return QuadratureRule(order, nodes, weights)


def gauss_hermite_expect(f: Callable, mean: float, variance: float, order: int = 64) -> float:
    """E[f(V)] for V ~ Normal(mean, variance) by Gauss-Hermite quadrature.

    Exact for polynomials of degree up to ``2*order - 1``. ``f`` must accept
    a numpy array.
    """
    if not variance > 0:
        raise DomainError(f"variance must be positive, got {variance!r}")
    rule = gauss_hermite_rule(order)
    pts = mean + math.sqrt(2.0 * variance) * rule.nodes
    return float(np.dot(rule.weights, f(pts)) / math.sqrt(math.pi))


def gauss_hermite_expect_2d(f: Callable, mean: tuple[float, float],
                            variance: tuple[float, float], order: int = 64) -> float:
    """E[f(U, V)] for independent Gaussians U, V on a tensor-product grid."""
    if not (variance[0] > 0 and variance[1] > 0):
        raise DomainError(f"variances must be positive, got {variance!r}")
    rule = gauss_hermite_rule(order)
    u = mean[0] + math.sqrt(2.0 * variance[0]) * rule.nodes
    v = mean[1] + math.sqrt(2.0 * variance[1]) * rule.nodes
    uu, vv = np.meshgrid(u, v, indexing="ij")
    w = np.outer(rule.weights, rule.weights)
    return float(np.sum(w * f(uu, vv)) / math.pi)


@dataclass
class RngStream:
    """Counter-based random stream keyed by ``(seed, stream_index)``.

    The Philox key packs both 64-bit words, so every trial index gets its own
    independent stream and any trial can be replayed in isolation. Instances
    carry generator state and must not be shared between threads.
    """

    seed: int
    stream_index: int
    gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("seed", "stream_index"):
            v = getattr(self, name)
            if not 0 <= v <= _MASK64:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {v}")
        key = (int(self.stream_index) << 64) | int(self.seed)
        self.gen = np.random.Generator(np.random.Philox(key=key))

    def normal(self, mean: float = 0.0, variance: float = 1.0, size=None):
        return self.gen.normal(mean, math.sqrt(variance), size)


def derive_stream(seed: int, index: int) -> RngStream:
    return RngStream(int(seed), int(index))


def clopper_pearson(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact binomial confidence interval for ``successes / trials``."""
    if trials <= 0:
        raise DomainError("trials must be positive")
    alpha = 1.0 - confidence
    lo = 0.0 if successes == 0 else float(stats.beta.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(stats.beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


def dkw_epsilon(samples: int, alpha: float = 0.01) -> float:
    """Dvoretzky-Kiefer-Wolfowitz band half-width at level ``1 - alpha``."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * samples))


def ks_distance_to_normal(samples: np.ndarray) -> float:
    """Sup-distance between the empirical CDF of ``samples`` and Phi."""
    x = np.sort(np.asarray(samples, dtype=float))
    m = x.size
    cdf = std_normal_cdf(x)
    upper = np.arange(1, m + 1) / m - cdf
    lower = cdf - np.arange(0, m) / m
    return float(max(upper.max(), lower.max()))
