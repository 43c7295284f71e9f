"""Save-and-transmit coding over the energy-harvesting AWGN channel.

Random Gaussian codebook, energy-gated encoder, AWGN channel and the
information-density threshold decoder, plus the per-trial error-event
simulation that checks the analytic event bounds. Message indices are
1-based and message 1 is always the one sent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import chunked_map
from .bounds import (
    ChannelParams,
    MomentSet,
    Schedule,
    berry_esseen_bound_E3,
    shannon_bound_E2,
)
from .ehmodel import (
    HarvestModel,
    buffer_walk,
    chebyshev_bound_E0,
    kolmogorov_bound_E1,
    sample_harvest,
)
from .exceptions import DomainError
from .kernels import info_densities, walk_stats
from .numerics import RngStream, clopper_pearson, derive_stream

MAX_CODEBOOK_ENTRIES = 10 ** 8
EVENTS = ("e0", "e1", "e2", "e3", "error")


@dataclass(frozen=True)
class Codebook:
    M: int
    n: int
    symbols: np.ndarray = field(repr=False)
    input_var: float

    def codeword(self, m: int) -> np.ndarray:
        return self.symbols[m - 1]


def _check_size(M, n):
    if M < 1 or n < 1:
        raise DomainError(f"need M >= 1 and n >= 1, got M={M}, n={n}")
    if M * n > MAX_CODEBOOK_ENTRIES:
        raise DomainError(f"codebook of {M}x{n} entries exceeds the {MAX_CODEBOOK_ENTRIES} guard")


def draw_codebook(M: int, n: int, input_var: float, stream: RngStream) -> Codebook:
    _check_size(M, n)
    symbols = stream.normal(0.0, input_var, (M, n))
    symbols.flags.writeable = False
    return Codebook(M, n, symbols, input_var)


def generate_codebook(M: int, n: int, input_var: float, seed: int,
                      stream_index: int = 0) -> Codebook:
    """I.i.d. N(0, input_var) codebook, reproducible from ``(seed, stream_index)``."""
    _check_size(M, n)
    return draw_codebook(M, n, input_var, derive_stream(seed, stream_index))


def encode_gated(codeword, harvests, E0n: float) -> np.ndarray:
    """Send symbol k only while every prefix of the ungated walk stays >= -E0n.

    Since the constraint sets are nested, this truncates the codeword at the
    first outage step.
    """
    codeword = np.asarray(codeword, dtype=float)
    harvests = np.asarray(harvests, dtype=float)
    if codeword.shape != harvests.shape:
        raise DomainError(f"length mismatch: codeword {codeword.size} vs harvests {harvests.size}")
    first = walk_stats(harvests, codeword * codeword, E0n)[1]
    out = codeword.copy()
    if first:
        out[first - 1:] = 0.0
    return out


def awgn_transmit(x, noise_var: float, stream: RngStream) -> np.ndarray:
    if not noise_var > 0:
        raise DomainError(f"noise_var must be positive, got {noise_var}")
    x = np.asarray(x, dtype=float)
    return x + stream.normal(0.0, noise_var, x.shape)


def info_density(x, w, params: ChannelParams) -> float:
    """i(x; w) in bits against the N(0, (E[Y] + sigma^2) I) output law."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    if x.shape != w.shape:
        raise DomainError(f"length mismatch: x {x.size} vs w {w.size}")
    out_var = params.harvest_mean + params.noise_var
    return float(info_densities(x[None, :], w, params.noise_var, out_var)[0])


def density_sums(params: ChannelParams, n: int, samples: int, stream: RngStream,
                 block: int = 4096) -> np.ndarray:
    """``samples`` draws of sum_i G_i over n letters, X ~ N(0, E[Y]).

    Stands in for decoding at exponentially large M: the E3 event only
    involves the sent codeword, so its statistics need no codebook.
    """
    if n < 1 or samples < 1:
        raise DomainError(f"need n >= 1 and samples >= 1, got n={n}, samples={samples}")
    ey, s2 = params.harvest_mean, params.noise_var
    out = np.empty(samples)
    for start in range(0, samples, block):
        rows = min(block, samples - start)
        x = stream.normal(0.0, ey, (rows, n))
        z = stream.normal(0.0, s2, (rows, n))
        w = x + z
        quad = (w * w).sum(axis=1) / (2 * (ey + s2)) - (z * z).sum(axis=1) / (2 * s2)
        out[start:start + rows] = 0.5 * n * math.log2((ey + s2) / s2) + quad * math.log2(math.e)
    return out


def threshold_decode(w, book: Codebook, log_M_bits: float, eta_n: float,
                     params: ChannelParams) -> frozenset:
    """Messages whose density clears ``log_M_bits + n * eta_n``."""
    w = np.asarray(w, dtype=float)
    if w.shape[0] != book.n:
        raise DomainError(f"received length {w.shape[0]} != codebook length {book.n}")
    dens = info_densities(book.symbols, w, params.noise_var,
                          params.harvest_mean + params.noise_var)
    thr = log_M_bits + book.n * eta_n
    return frozenset(int(m) + 1 for m in np.flatnonzero(dens > thr))


@dataclass(frozen=True)
class TrialConfig:
    """Everything one end-to-end trial needs.

    ``log_M_bits`` defaults to log2 M. With ``codebook`` unset a fresh
    codebook is drawn per trial, so rates average over the random-coding
    ensemble as the event bounds do.
    """

    model: HarvestModel
    params: ChannelParams
    n: int
    N_n: int
    E0n: float
    eta_n: float
    M: int
    log_M_bits: float | None = None
    codebook: Codebook | None = None

    @classmethod
    def from_schedule(cls, model, params, sched: Schedule, M: int, **kw):
        return cls(model, params, sched.n, sched.N_n, sched.E0n, sched.eta_n, M, **kw)

    @property
    def threshold_bits(self) -> float:
        lm = math.log2(self.M) if self.log_M_bits is None else self.log_M_bits
        return lm + self.n * self.eta_n


@dataclass(frozen=True)
class TrialOutcome:
    e0: bool
    e1: bool
    e2: bool
    e3: bool
    decoded: int | None
    error: bool
    gated: bool = False


def run_trial(config: TrialConfig, trial_index: int, seed: int) -> TrialOutcome:
    """Save phase, gated encoding of message 1, channel, threshold decoding.

    A short save phase does not abort the trial: the encoder gates on
    ``min(gathered, E0n)`` so that it never spends energy it does not have,
    while ``e1`` is evaluated on the ungated walk against ``E0n``. Any decode
    other than the unique message 1 counts as an error.
    """
    c = config
    hs = derive_stream(seed, 2 * trial_index)
    cs = derive_stream(seed, 2 * trial_index + 1)
    gathered = float(np.sum(sample_harvest(c.model, hs, c.N_n))) if c.N_n > 0 else 0.0
    y = sample_harvest(c.model, hs, c.n)
    book = c.codebook if c.codebook is not None else draw_codebook(c.M, c.n, c.params.harvest_mean, cs)
    x = book.symbols[0]
    e1 = buffer_walk(y, x * x, c.E0n).outage
    sent = encode_gated(x, y, min(gathered, c.E0n))
    w = awgn_transmit(sent, c.params.noise_var, cs)
    dens = info_densities(book.symbols, w, c.params.noise_var,
                          c.params.harvest_mean + c.params.noise_var)
    passing = dens > c.threshold_bits
    e3 = not passing[0]
    e2 = bool(passing[1:].any())
    hits = np.flatnonzero(passing)
    decoded = int(hits[0]) + 1 if hits.size == 1 else None
    return TrialOutcome(gathered < c.E0n, e1, e2, e3, decoded, decoded != 1,
                        gated=not np.array_equal(sent, x))


@dataclass(frozen=True)
class McResult:
    trials: int
    counts: dict
    rates: dict
    ci: dict
    gated_count: int = 0

    def std_error(self, event: str) -> float:
        p = self.rates[event]
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.trials)


def _trial_block(config, seed, start, stop):
    out = np.zeros((stop - start, len(EVENTS) + 1), dtype=bool)
    for t in range(start, stop):
        o = run_trial(config, t, seed)
        out[t - start] = (o.e0, o.e1, o.e2, o.e3, o.error, o.gated)
    return out


def monte_carlo(config: TrialConfig, trials: int, seed: int,
                threads: int | None = None) -> McResult:
    """Aggregate ``trials`` independent runs; counts do not depend on threading."""
    if trials < 100:
        raise DomainError(f"need at least 100 trials, got {trials}")
    blocks = chunked_map(lambda a, b: _trial_block(config, seed, a, b), trials, threads)
    flags = np.concatenate(blocks)
    counts = {e: int(flags[:, i].sum()) for i, e in enumerate(EVENTS)}
    rates = {e: k / trials for e, k in counts.items()}
    ci = {e: clopper_pearson(k, trials) for e, k in counts.items()}
    return McResult(trials, counts, rates, ci, int(flags[:, -1].sum()))


def error_budget(config: TrialConfig, moments: MomentSet) -> dict:
    """The four analytic event bounds for ``config`` and their sum."""
    c = config
    lm = math.log2(c.M) if c.log_M_bits is None else c.log_M_bits
    b = {
        "e0": chebyshev_bound_E0(c.N_n, c.E0n, c.params.harvest_mean, c.model.var),
        "e1": kolmogorov_bound_E1(c.n, c.E0n, moments.varZ),
        "e2": shannon_bound_E2(c.n, c.eta_n),
        "e3": berry_esseen_bound_E3(c.n, lm, c.eta_n, moments),
    }
    b["total"] = sum(b.values())
    return b
