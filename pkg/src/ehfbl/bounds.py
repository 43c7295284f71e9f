"""Capacities, dispersions, the error budget and the achievable log M.

All public quantities are in bits: capacities in bits per channel use,
dispersions in bits^2 per use, code sizes as log2 M. The natural-log
dispersion E[Y]/(E[Y]+sigma^2) is converted with (log2 e)^2.

Two achievability results live here:

* :func:`achievable_log_M` evaluates the exact finite-n pipeline
  ``n C + sqrt(n V) Phi^-1(eps_n) - n eta_n - 1`` for a given save schedule.
* :func:`theorem1_closed_form` evaluates the asymptotic closed form in the
  total blocklength ``n_hat = n + N_n``. Its additive O(1) remainder has no
  known constant and is dropped, so the value is "up to an additive O(1)".
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError, NumericInconsistencyError, RegimeError
from .numerics import (
    LOG2E,
    derive_stream,
    gauss_hermite_expect_2d,
    std_normal_cdf,
    std_normal_quantile,
    std_normal_quantile_derivative,
)

TERM_LABELS = ("capacity_term", "dispersion_term", "slack_term",
               "save_penalty", "taylor_term", "log_term")

# E|A|^3 for A ~ N(0, 1) is 2*sqrt(2/pi); the centred per-letter density is
# sqrt(V) * A * B with A, B i.i.d. N(0, 1), hence abs3 = V^(3/2) * 8/pi.
_ABS3_OVER_VAR32 = 8.0 / math.pi


@dataclass(frozen=True)
class ChannelParams:
    noise_var: float
    harvest_mean: float

    def __post_init__(self):
        if not (self.noise_var > 0 and math.isfinite(self.noise_var)):
            raise DomainError(f"noise_var must be positive, got {self.noise_var!r}")
        if not (self.harvest_mean > 0 and math.isfinite(self.harvest_mean)):
            raise DomainError(f"harvest_mean must be positive, got {self.harvest_mean!r}")

    @property
    def snr(self) -> float:
        return self.harvest_mean / self.noise_var


@dataclass(frozen=True)
class MomentSet:
    """Moments of the per-letter information density G_i, in bits.

    ``varZ`` is Var(Y - X^2), the per-step variance of the buffer walk.
    ``std_errors`` is filled only for Monte Carlo estimates.
    """

    mean_bits: float
    var_bits2: float
    abs3_bits3: float
    K: float
    varZ: float
    method: str = "quadrature"
    std_errors: dict | None = None


@dataclass(frozen=True)
class Schedule:
    n: int
    a: float
    N_n: int
    E0n: float
    eta_n: float

    @property
    def n_hat(self) -> int:
        return self.n + self.N_n


@dataclass
class BoundReport:
    """Term-by-term breakdown of a lower bound on log2 M*.

    ``log_M_bits`` equals ``sum(terms.values())`` whenever it is present.
    ``variants`` carries diagnostic side values (alternative coefficients,
    the Taylor constant, the matched blocklength split) that are not part of
    the sum.
    """

    log_M_bits: float | None
    epsilon_n: float
    terms: dict = field(default_factory=dict)
    feasible: bool = True
    variants: dict = field(default_factory=dict)


def _check_positive(**kw):
    for k, v in kw.items():
        if not v > 0:
            raise DomainError(f"{k} must be positive, got {v!r}")


def _check_eps(eps):
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")


def awgn_capacity(P: float, noise_var: float) -> float:
    _check_positive(P=P, noise_var=noise_var)
    return 0.5 * math.log2(1.0 + P / noise_var)


def awgn_dispersion(P: float, noise_var: float) -> float:
    _check_positive(P=P, noise_var=noise_var)
    return P * (P + 2.0 * noise_var) / (2.0 * (P + noise_var) ** 2) * LOG2E ** 2


def normal_approx_log_M(n: int, eps: float, P: float, noise_var: float) -> float:
    """Classical AWGN normal approximation with the O(log n) term dropped."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    _check_eps(eps)
    return n * awgn_capacity(P, noise_var) + \
        math.sqrt(n * awgn_dispersion(P, noise_var)) * std_normal_quantile(eps)


def eh_capacity(params: ChannelParams) -> float:
    return awgn_capacity(params.harvest_mean, params.noise_var)


def eh_dispersion(params: ChannelParams) -> float:
    return params.harvest_mean / (params.harvest_mean + params.noise_var) * LOG2E ** 2


def var_z(params: ChannelParams, var_Y: float) -> float:
    """Var(Y - X^2) with X ~ N(0, E[Y]) independent of Y."""
    if var_Y < 0:
        raise DomainError(f"var_Y must be nonnegative, got {var_Y!r}")
    return var_Y + 2.0 * params.harvest_mean ** 2


def _density_fn(params: ChannelParams):
    P, s2 = params.harvest_mean, params.noise_var
    c0 = 0.5 * math.log2((P + s2) / s2)

    def g(x, z):
        w = x + z
        return c0 + LOG2E * (w * w / (2.0 * (P + s2)) - z * z / (2.0 * s2))

    return g


def _quadrature_moments(params: ChannelParams, order: int) -> tuple[float, float]:
    g = _density_fn(params)
    mv = ((0.0, 0.0), (params.harvest_mean, params.noise_var))
    mean = gauss_hermite_expect_2d(g, *mv, order=order)
    var = gauss_hermite_expect_2d(lambda x, z: (g(x, z) - mean) ** 2, *mv, order=order)
    return mean, var


def info_density_moments(params: ChannelParams, method: str = "quadrature",
                         order_or_trials: int = 64, var_Y: float = 0.0,
                         seed: int = 0) -> MomentSet:
    """Mean, variance and centred absolute third moment of G_i.

    ``quadrature`` integrates the mean and variance on a tensor Gauss-Hermite
    grid over (X, noise); both integrands are polynomials so the grid is exact
    and a doubled-order rerun must agree to 1e-9. The absolute third moment
    has a kink at the mean, so it is taken from the product representation
    of the centred density instead (ratio 8/pi to var^(3/2)).

    ``monte_carlo`` draws ``order_or_trials`` letters from stream ``(seed, 0)``
    and raises :class:`NumericInconsistencyError` when any moment sits more
    than 5 standard errors from the quadrature value.
    """
    varZ = var_z(params, var_Y)
    if method == "quadrature":
        order = int(order_or_trials)
        mean, var = _quadrature_moments(params, order)
        mean2, var2 = _quadrature_moments(params, 2 * order)
        if abs(mean - mean2) > 1e-9 or abs(var - var2) > 1e-9:
            raise NumericInconsistencyError(
                f"Gauss-Hermite order {order} vs {2 * order} disagree: "
                f"mean {mean} vs {mean2}, var {var} vs {var2}")
        abs3 = _ABS3_OVER_VAR32 * var ** 1.5
        return MomentSet(mean, var, abs3, abs3 / (2.0 * var ** 1.5), varZ)
    if method != "monte_carlo":
        raise DomainError(f"unknown moment method {method!r}")

    trials = int(order_or_trials)
    if trials < 2:
        raise DomainError("monte_carlo needs at least 2 trials")
    stream = derive_stream(seed, 0)
    x = stream.normal(0.0, params.harvest_mean, trials)
    z = stream.normal(0.0, params.noise_var, trials)
    g = _density_fn(params)(x, z)
    mean = float(g.mean())
    d = g - mean
    d2 = d * d
    var = float(d2.mean())
    a3 = np.abs(d) ** 3
    abs3 = float(a3.mean())
    se = {
        "mean_bits": float(math.sqrt(var / trials)),
        "var_bits2": float(d2.std() / math.sqrt(trials)),
        "abs3_bits3": float(a3.std() / math.sqrt(trials)),
    }
    ref = info_density_moments(params, "quadrature", 64, var_Y)
    got = {"mean_bits": mean, "var_bits2": var, "abs3_bits3": abs3}
    for name, s in se.items():
        want = getattr(ref, name)
        if abs(got[name] - want) > 5.0 * s:
            raise NumericInconsistencyError(
                f"{name}: Monte Carlo {got[name]:.6g} vs quadrature {want:.6g} "
                f"differ by more than 5 standard errors ({s:.3g})")
    return MomentSet(mean, var, abs3, abs3 / (2.0 * var ** 1.5), varZ,
                     method="monte_carlo", std_errors=se)


def save_length(n: int, a: float) -> int:
    """N_n = ceil(sqrt(n) * (ln n)^a)."""
    return math.ceil(math.sqrt(n) * math.log(n) ** a)


def make_schedule(n: int, a: float, params: ChannelParams) -> Schedule:
    if n < 2:
        raise DomainError(f"schedule needs n >= 2, got {n}")
    _check_positive(a=a)
    N_n = save_length(n, a)
    return Schedule(n=int(n), a=float(a), N_n=N_n,
                    E0n=N_n * params.harvest_mean / 2.0,
                    eta_n=math.log2(n) / n)


def split_blocklength(n_hat: int, a: float) -> int:
    """Largest transmission length n with n + N_n <= n_hat."""
    _check_positive(a=a)
    if n_hat < 2 + save_length(2, a):
        raise DomainError(f"n_hat={n_hat} too short for any save phase at a={a}")
    lo, hi = 2, int(n_hat)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if mid + save_length(mid, a) <= n_hat:
            lo = mid
        else:
            hi = mid - 1
    return lo


def budget_penalties(sched: Schedule, moments: MomentSet, var_Y: float,
                     params: ChannelParams) -> dict:
    """The four subtracted terms of eps_n, uncapped."""
    n = sched.n
    return {
        "save": sched.N_n * var_Y / (sched.N_n * params.harvest_mean - sched.E0n) ** 2,
        "outage": n * moments.varZ / sched.E0n ** 2,
        "confusion": 2.0 ** (-n * sched.eta_n),
        "berry_esseen": moments.K / math.sqrt(n),
    }


def epsilon_n(n: int, eps: float, sched: Schedule, moments: MomentSet,
              var_Y: float, params: ChannelParams) -> float:
    """eps minus the four analytic error-event penalties; may be <= 0."""
    _check_eps(eps)
    if sched.n != n:
        raise DomainError(f"schedule built for n={sched.n}, evaluated at n={n}")
    return eps - sum(budget_penalties(sched, moments, var_Y, params).values())


def achievable_log_M(n: int, eps: float, sched: Schedule, moments: MomentSet,
                     var_Y: float, params: ChannelParams) -> BoundReport:
    en = epsilon_n(n, eps, sched, moments, var_Y, params)
    variants = {"n": n, "N_n": sched.N_n, "n_hat": sched.n_hat}
    if en <= 0:
        return BoundReport(None, en, {}, False, variants)
    terms = {
        "capacity_term": n * moments.mean_bits,
        "dispersion_term": math.sqrt(n * moments.var_bits2) * std_normal_quantile(en),
        "slack_term": -n * sched.eta_n,
        "save_penalty": 0.0,
        "taylor_term": 0.0,
        "log_term": -1.0,
    }
    return BoundReport(math.fsum(terms.values()), en, terms, True, variants)


def first_feasible_n(eps: float, a: float, moments: MomentSet, var_Y: float,
                     params: ChannelParams, n_max: int = 10 ** 15) -> int:
    """Smallest n with eps_n > 0 under the standard schedule.

    Doubling search followed by bisection; eps_n is increasing in n up to
    ceiling jitter in N_n, which bisection tolerates.
    """
    def ok(n):
        return epsilon_n(n, eps, make_schedule(n, a, params), moments, var_Y, params) > 0

    hi = 2
    while not ok(hi):
        hi *= 2
        if hi > n_max:
            raise DomainError(f"eps_n stays nonpositive up to n={n_max}")
    lo = max(2, hi // 2)
    if ok(lo):
        return lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def theorem1_closed_form(n_hat: int, eps: float, a: float, moments: MomentSet,
                         var_Y: float, params: ChannelParams,
                         n0: int | None = None) -> BoundReport:
    """Closed-form lower bound on log2 M* at total blocklength ``n_hat``.

    The Taylor constant uses ``f_hat = max(q'(eps_n0), q'(eps))`` where ``q``
    is the normal quantile and ``n0`` is the smallest feasible transmission
    length of the evaluation (pass it for grids; by default the matched ``n``
    when feasible, otherwise the first feasible n found by search).

    The dispersion coefficient follows the case split that keeps the value a
    valid lower bound: sqrt(n_hat V) for eps < 1/2, sqrt(n_hat V / 2)
    otherwise. The single-coefficient sqrt(n_hat V / 2) form is reported in
    ``variants["half_disp_log_M_bits"]``.

    ``log_M_bits`` is always populated; ``feasible`` reports whether eps_n is
    positive at the matched split, i.e. whether the exact pipeline certifies
    anything at this blocklength.

    Raises
    ------
    RegimeError
        If the save phase takes half of the blocklength or more.
    """
    _check_eps(eps)
    n = split_blocklength(n_hat, a)
    sched = make_schedule(n, a, params)
    if sched.N_n / n_hat >= 0.5:
        raise RegimeError(
            f"asymptotic regime not reached: N_n/n_hat = {sched.N_n}/{n_hat} >= 1/2")
    en = epsilon_n(n, eps, sched, moments, var_Y, params)
    if n0 is None:
        n0 = n if en > 0 else first_feasible_n(eps, a, moments, var_Y, params)
    en0 = epsilon_n(n0, eps, make_schedule(n0, a, params), moments, var_Y, params)
    if en0 <= 0:
        raise DomainError(f"n0={n0} is not feasible (eps_n0={en0:.6g})")
    f_hat = max(std_normal_quantile_derivative(en0), std_normal_quantile_derivative(eps))
    C, V = moments.mean_bits, moments.var_bits2
    C_hat = 4.0 * math.sqrt(V) * moments.varZ * f_hat / params.harvest_mean ** 2
    q = std_normal_quantile(eps)
    rn = math.sqrt(n_hat)
    disp_half = math.sqrt(n_hat * V / 2.0) * q
    disp_full = math.sqrt(n_hat * V) * q
    terms = {
        "capacity_term": n_hat * C,
        "dispersion_term": disp_full if eps < 0.5 else disp_half,
        "slack_term": 0.0,
        "save_penalty": -rn * math.log(n_hat) ** a * C,
        "taylor_term": -rn * C_hat / math.log(n_hat / 2.0) ** (2.0 * a),
        "log_term": -math.log2(n_hat),
    }
    total = math.fsum(terms.values())
    half_disp = total - terms["dispersion_term"] + disp_half
    variants = {
        "half_disp_log_M_bits": half_disp,
        "dispersion_half": disp_half,
        "dispersion_full": disp_full,
        "f_hat": f_hat,
        "C_hat": C_hat,
        "n0": n0,
        "n": n,
        "N_n": sched.N_n,
    }
    return BoundReport(total, en, terms, en > 0, variants)


def shannon_bound_E2(n: int, eta_n: float) -> float:
    """Union bound on a wrong codeword passing the threshold, 2^(-n eta_n)."""
    return min(1.0, 2.0 ** (-n * eta_n))


def berry_esseen_bound_E3(n: int, log_M_bits: float, eta_n: float,
                          moments: MomentSet) -> float:
    """Bound on the sent codeword failing the threshold test."""
    u = (log_M_bits + n * (eta_n - moments.mean_bits)) / math.sqrt(n * moments.var_bits2)
    return min(1.0, std_normal_cdf(u) + moments.K / math.sqrt(n))


def backoff_ratio(log_M_bits: float, n_hat: int, a: float, capacity: float) -> float:
    """(C - log M / n_hat) * sqrt(n_hat) / (ln n_hat)^a."""
    return (capacity - log_M_bits / n_hat) * math.sqrt(n_hat) / math.log(n_hat) ** a
