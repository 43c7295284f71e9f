"""Harvest processes, the save phase and the buffer random walk.

The buffer evolves as ``B_{k+1} = B_k + Y_k - X_k^2``. After a save phase
that gathered ``E0n`` energy, transmission is feasible up to step k as long
as every prefix sum ``S_l = sum_{j<=l} (Y_j - X_j^2)`` stays at or above
``-E0n``. Outage is the strict event ``S_k < -E0n`` for some k.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._parallel import chunked_map
from .bounds import ChannelParams
from .exceptions import DomainError
from .kernels import walk_stats
from .numerics import RngStream, clopper_pearson, derive_stream

HARVEST_KINDS = ("constant", "exponential", "uniform", "bernoulli_scaled")


@dataclass(frozen=True)
class HarvestModel:
    """I.i.d. nonnegative energy arrivals with mean ``mean``.

    ``extra`` is the interval width for ``uniform`` (default ``2*mean``,
    centred on the mean) and the success probability for
    ``bernoulli_scaled`` (default 0.5; each arrival is 0 or ``mean/p``).
    """

    kind: str
    mean: float
    extra: float | None = None

    def __post_init__(self):
        if self.kind not in HARVEST_KINDS:
            raise DomainError(f"unknown harvest kind {self.kind!r}; expected one of {HARVEST_KINDS}")
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise DomainError(f"harvest mean must be positive, got {self.mean!r}")
        if self.kind == "uniform" and self.extra is not None:
            if not 0 <= self.extra <= 2 * self.mean:
                raise DomainError("uniform width must lie in [0, 2*mean] to keep arrivals nonnegative")
        if self.kind == "bernoulli_scaled" and self.extra is not None:
            if not 0 < self.extra <= 1:
                raise DomainError("bernoulli_scaled probability must lie in (0, 1]")
        if self.kind in ("constant", "exponential") and self.extra is not None:
            raise DomainError(f"{self.kind} harvest takes no extra parameter")

    @property
    def width(self) -> float:
        return 2.0 * self.mean if self.extra is None else float(self.extra)

    @property
    def prob(self) -> float:
        return 0.5 if self.extra is None else float(self.extra)

    @property
    def var(self) -> float:
        if self.kind == "constant":
            return 0.0
        if self.kind == "exponential":
            return self.mean ** 2
        if self.kind == "uniform":
            return self.width ** 2 / 12.0
        p = self.prob
        return self.mean ** 2 * (1.0 - p) / p


def sample_harvest(model: HarvestModel, stream: RngStream, count: int) -> np.ndarray:
    if count < 0:
        raise DomainError(f"count must be nonnegative, got {count}")
    g = stream.gen
    if model.kind == "constant":
        return np.full(count, float(model.mean))
    if model.kind == "exponential":
        return g.exponential(model.mean, count)
    if model.kind == "uniform":
        half = model.width / 2.0
        return g.uniform(model.mean - half, model.mean + half, count)
    p = model.prob
    return (model.mean / p) * (g.random(count) < p)


def chebyshev_bound_E0(N_n: int, E0n: float, mean: float, var_Y: float) -> float:
    """Chebyshev bound on gathering less than ``E0n`` in ``N_n`` slots."""
    gap = N_n * mean - E0n
    if not (E0n > 0 and gap > 0):
        raise DomainError(f"need 0 < E0n < N_n*mean, got E0n={E0n}, N_n*mean={N_n * mean}")
    return min(1.0, N_n * var_Y / gap ** 2)


class SavePhase(NamedTuple):
    gathered: float
    success: bool


def simulate_save_phase(model: HarvestModel, N_n: int, E0n: float,
                        stream: RngStream) -> SavePhase:
    if N_n < 1:
        raise DomainError(f"N_n must be >= 1, got {N_n}")
    gathered = float(np.sum(sample_harvest(model, stream, N_n)))
    return SavePhase(gathered, gathered >= E0n)


@dataclass(frozen=True)
class WalkResult:
    min_S: float
    outage: bool
    outage_index: int | None
    final_S: float


def buffer_walk(harvests, energy_uses, E0n: float) -> WalkResult:
    """Run the walk ``S_k`` and flag the first k with ``S_k < -E0n`` (1-based)."""
    harvests = np.asarray(harvests, dtype=float)
    energy_uses = np.asarray(energy_uses, dtype=float)
    if harvests.shape != energy_uses.shape:
        raise DomainError(f"length mismatch: {harvests.size} harvests vs {energy_uses.size} uses")
    if np.any(energy_uses < 0):
        raise DomainError("energy uses must be nonnegative")
    min_S, first, final_S = walk_stats(harvests, energy_uses, E0n)
    return WalkResult(min_S, first > 0, first or None, final_S)


def gated_uses(energy_uses, walk: WalkResult) -> np.ndarray:
    """Energies actually spent when transmission stops at the first outage."""
    out = np.array(energy_uses, dtype=float)
    if walk.outage:
        out[walk.outage_index - 1:] = 0.0
    return out


def kolmogorov_bound_E1(n: int, E0n: float, var_Z: float) -> float:
    """Kolmogorov maximal-inequality bound on walk outage in ``n`` steps."""
    if not E0n > 0:
        raise DomainError(f"E0n must be positive, got {E0n}")
    return min(1.0, n * var_Z / E0n ** 2)


class OutageEstimate(NamedTuple):
    rate: float
    ci_low: float
    ci_high: float
    count: int
    trials: int


def _outage_flags(model, params, n, E0n, seed, start, stop):
    flags = np.zeros(stop - start, dtype=bool)
    for t in range(start, stop):
        y = sample_harvest(model, derive_stream(seed, 2 * t), n)
        x = derive_stream(seed, 2 * t + 1).normal(0.0, params.harvest_mean, n)
        flags[t - start] = walk_stats(y, x * x, E0n)[1] > 0
    return flags


def estimate_outage(model: HarvestModel, params: ChannelParams, n: int, E0n: float,
                    trials: int, seed: int, threads: int | None = None) -> OutageEstimate:
    """Monte Carlo outage frequency of the ungated walk, with a 95% CP interval.

    Trial ``t`` draws harvests from stream ``2t`` and Gaussian codeword
    amplitudes from stream ``2t + 1``.
    """
    if trials < 100:
        raise DomainError(f"need at least 100 trials, got {trials}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    parts = chunked_map(lambda a, b: _outage_flags(model, params, n, E0n, seed, a, b),
                        trials, threads)
    count = int(sum(int(p.sum()) for p in parts))
    lo, hi = clopper_pearson(count, trials)
    return OutageEstimate(count / trials, lo, hi, count, trials)
