"""Experiment configs, grid sweeps and result files.

A config is a single JSON object::

    {
      "channel": {"noise_var": 1.0, "harvest_mean": 1.0},
      "harvest": {"kind": "exponential", "mean": 1.0, "extra": null},
      "n": [1024, 4096],            # or "n_hat": [...], exactly one of them
      "eps": [0.1],
      "a": [1.0],                   # default [1.0]
      "trials": 10000,              # default 10000
      "seed": 0,                    # default 0
      "mode": "sweep",              # bounds | moments | simulate | sweep
      "M": 16,                      # desk-scale codebook size for Monte Carlo
      "moments": {"method": "quadrature", "order": 64}
    }

``harvest.mean`` defaults to ``channel.harvest_mean`` (and vice versa); when
both are given they must agree. Unknown keys are rejected.

Rows are flat dicts keyed by :data:`COLUMNS`; grid order is a-major, then
eps, then n, so every (eps, a) series is contiguous.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .bounds import (
    ChannelParams,
    achievable_log_M,
    backoff_ratio,
    berry_esseen_bound_E3,
    eh_capacity,
    eh_dispersion,
    info_density_moments,
    make_schedule,
    normal_approx_log_M,
    shannon_bound_E2,
    split_blocklength,
    theorem1_closed_form,
)
from .codec import EVENTS, TrialConfig, monte_carlo
from .ehmodel import HarvestModel, chebyshev_bound_E0, kolmogorov_bound_E1
from .exceptions import (
    ConfigParseError,
    ConfigValidationError,
    EhfblError,
    ValidationError,
)

MODES = ("bounds", "moments", "simulate", "sweep")
DEFAULT_TRIALS = 10_000

_TOP_KEYS = {"channel", "harvest", "n", "n_hat", "eps", "a", "trials", "seed",
             "mode", "M", "moments"}
_CHANNEL_KEYS = {"noise_var", "harvest_mean"}
_HARVEST_KEYS = {"kind", "mean", "extra"}
_MOMENT_KEYS = {"method", "order", "trials"}

COLUMNS = (
    "mode", "seed", "noise_var", "harvest_mean", "harvest_kind", "harvest_extra",
    "var_Y", "var_Z", "n", "n_hat", "N_n", "E0n", "eta_n", "eps", "a",
    "C_EG", "V_EG", "K",
    "epsilon_n", "feasible", "log_M_bits", "rate_bits_per_use",
    "capacity_term", "dispersion_term", "slack_term", "save_penalty",
    "taylor_term", "log_term",
    "closed_form_log_M_bits", "closed_form_half_disp_log_M_bits",
    "closed_form_rate", "closed_form_n0", "f_hat", "C_hat", "backoff_ratio",
    "normal_approx_log_M_bits",
    "bound_e0", "bound_e1", "bound_e2", "bound_e3", "bound_total",
    "M", "trials",
    "mc_e0", "mc_e0_lo", "mc_e0_hi", "mc_e1", "mc_e1_lo", "mc_e1_hi",
    "mc_e2", "mc_e2_lo", "mc_e2_hi", "mc_e3", "mc_e3_lo", "mc_e3_hi",
    "mc_error", "mc_error_lo", "mc_error_hi",
    "error",
)


@dataclass(frozen=True)
class ExperimentConfig:
    channel: ChannelParams
    harvest: HarvestModel
    n: tuple | None = None
    n_hat: tuple | None = None
    eps: tuple = ()
    a: tuple = (1.0,)
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    mode: str = "sweep"
    M: int | None = None
    moments: dict = field(default_factory=lambda: {"method": "quadrature", "order": 64})

    @property
    def grid(self) -> tuple:
        return self.n if self.n is not None else self.n_hat


def _reject_unknown(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigParseError(f"{where}: expected a JSON object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigParseError(f"{where}: unknown key(s) {', '.join(map(repr, extra))}")


def _grid(raw, name, cast, check, why):
    if not isinstance(raw, list) or not raw:
        raise ConfigValidationError(name, "must be a nonempty list")
    out = []
    for v in raw:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigValidationError(name, f"non-numeric entry {v!r}")
        v = cast(v)
        if not check(v):
            raise ConfigValidationError(name, f"{v!r} {why}")
        out.append(v)
    return tuple(out)


def config_from_dict(raw: dict) -> ExperimentConfig:
    _reject_unknown(raw, _TOP_KEYS, "config")
    for key in ("channel", "harvest", "eps"):
        if key not in raw:
            raise ConfigValidationError(key, "is required")
    _reject_unknown(raw["channel"], _CHANNEL_KEYS, "channel")
    _reject_unknown(raw["harvest"], _HARVEST_KEYS, "harvest")
    ch, hv = raw["channel"], raw["harvest"]

    mean = ch.get("harvest_mean", hv.get("mean"))
    if mean is None:
        raise ConfigValidationError("channel.harvest_mean", "is required (or harvest.mean)")
    if "harvest_mean" in ch and "mean" in hv and ch["harvest_mean"] != hv["mean"]:
        raise ConfigValidationError("harvest.mean", "disagrees with channel.harvest_mean")
    try:
        channel = ChannelParams(float(ch.get("noise_var", float("nan"))), float(mean))
    except (EhfblError, TypeError, ValueError) as e:
        raise ConfigValidationError("channel", str(e)) from None
    try:
        harvest = HarvestModel(hv.get("kind"), float(mean), hv.get("extra"))
    except (EhfblError, TypeError, ValueError) as e:
        raise ConfigValidationError("harvest", str(e)) from None

    if ("n" in raw) == ("n_hat" in raw):
        raise ConfigValidationError("n", "give exactly one of 'n' or 'n_hat'")
    n = n_hat = None
    if "n" in raw:
        n = _grid(raw["n"], "n", int, lambda v: v >= 2, "must be >= 2")
    else:
        n_hat = _grid(raw["n_hat"], "n_hat", int, lambda v: v >= 4, "must be >= 4")
    eps = _grid(raw["eps"], "eps", float, lambda v: 0 < v < 1, "must lie in (0, 1)")
    a = _grid(raw.get("a", [1.0]), "a", float, lambda v: v > 0, "must be positive")

    mode = raw.get("mode", "sweep")
    if mode not in MODES:
        raise ConfigValidationError("mode", f"{mode!r} not in {MODES}")
    trials = raw.get("trials", DEFAULT_TRIALS)
    if isinstance(trials, bool) or not isinstance(trials, int) or trials < 1:
        raise ConfigValidationError("trials", f"must be a positive integer, got {trials!r}")
    if mode == "simulate" and trials < 100:
        raise ConfigValidationError("trials", "must be >= 100 in simulate mode")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise ConfigValidationError("seed", "must be a 64-bit unsigned integer")
    M = raw.get("M")
    if M is not None and (isinstance(M, bool) or not isinstance(M, int) or M < 1):
        raise ConfigValidationError("M", "must be a positive integer")
    if mode == "simulate" and M is None:
        raise ConfigValidationError("M", "is required in simulate mode")

    _reject_unknown(raw.get("moments", {}), _MOMENT_KEYS, "moments")
    mom = dict(raw.get("moments", {}))
    mom.setdefault("method", "quadrature")
    if mom["method"] not in ("quadrature", "monte_carlo"):
        raise ConfigValidationError("moments.method", f"unknown method {mom['method']!r}")
    mom.setdefault("order", 64)
    mom.setdefault("trials", 10 ** 6)
    return ExperimentConfig(channel, harvest, n, n_hat, eps, a, trials, seed, mode, M, mom)


def load_raw(path) -> dict:
    """Read a config file as a JSON object without validating it."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigParseError(f"cannot read config {path}: {e}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigParseError(f"{path}: malformed JSON: {e}") from None


def load_config(path) -> ExperimentConfig:
    """Parse and validate a JSON config file.

    Raises :class:`ConfigParseError` for malformed JSON or unknown keys and
    :class:`ConfigValidationError` for invariant breaches.
    """
    return config_from_dict(load_raw(path))


def config_moments(cfg: ExperimentConfig):
    m = cfg.moments
    if m["method"] == "quadrature":
        return info_density_moments(cfg.channel, "quadrature", m["order"], cfg.harvest.var)
    return info_density_moments(cfg.channel, "monte_carlo", m["trials"], cfg.harvest.var,
                                seed=cfg.seed)


def _split(cfg, value, a):
    if cfg.n is not None:
        sched = make_schedule(value, a, cfg.channel)
        return sched, sched.n_hat
    return make_schedule(split_blocklength(value, a), a, cfg.channel), value


def _series_n0(cfg, eps, a, moments):
    """Smallest feasible transmission length among the grid points of a series."""
    best = None
    for v in cfg.grid:
        try:
            sched, _ = _split(cfg, v, a)
        except EhfblError:
            continue
        rep = achievable_log_M(sched.n, eps, sched, moments, cfg.harvest.var, cfg.channel)
        if rep.feasible and (best is None or sched.n < best):
            best = sched.n
    return best


def _row(cfg, value, eps, a, moments, n0, run_mc, threads):
    p, hv = cfg.channel, cfg.harvest
    row = dict.fromkeys(COLUMNS)
    row.update(mode=cfg.mode, seed=cfg.seed, noise_var=p.noise_var, harvest_mean=p.harvest_mean,
               harvest_kind=hv.kind, harvest_extra=hv.extra, var_Y=hv.var, var_Z=moments.varZ,
               eps=eps, a=a, C_EG=moments.mean_bits, V_EG=moments.var_bits2, K=moments.K)
    errors = []
    try:
        sched, n_hat = _split(cfg, value, a)
    except EhfblError as e:
        row["n" if cfg.n is not None else "n_hat"] = value
        row["feasible"] = False
        row["error"] = str(e)
        return row
    row.update(n=sched.n, n_hat=n_hat, N_n=sched.N_n, E0n=sched.E0n, eta_n=sched.eta_n)

    rep = achievable_log_M(sched.n, eps, sched, moments, hv.var, p)
    row.update(epsilon_n=rep.epsilon_n, feasible=rep.feasible, log_M_bits=rep.log_M_bits)
    if rep.feasible:
        row.update(rep.terms)
        row["rate_bits_per_use"] = rep.log_M_bits / n_hat
        row.update(
            bound_e0=chebyshev_bound_E0(sched.N_n, sched.E0n, p.harvest_mean, hv.var),
            bound_e1=kolmogorov_bound_E1(sched.n, sched.E0n, moments.varZ),
            bound_e2=shannon_bound_E2(sched.n, sched.eta_n),
            bound_e3=berry_esseen_bound_E3(sched.n, rep.log_M_bits, sched.eta_n, moments),
        )
        row["bound_total"] = sum(row[f"bound_e{i}"] for i in range(4))

    try:
        cf = theorem1_closed_form(n_hat, eps, a, moments, hv.var, p, n0=n0)
        row.update(closed_form_log_M_bits=cf.log_M_bits,
                   closed_form_half_disp_log_M_bits=cf.variants["half_disp_log_M_bits"],
                   closed_form_rate=cf.log_M_bits / n_hat,
                   closed_form_n0=cf.variants["n0"], f_hat=cf.variants["f_hat"],
                   C_hat=cf.variants["C_hat"],
                   backoff_ratio=backoff_ratio(cf.log_M_bits, n_hat, a, moments.mean_bits))
    except EhfblError as e:
        errors.append(f"closed form: {e}")
    row["normal_approx_log_M_bits"] = normal_approx_log_M(n_hat, eps, p.harvest_mean, p.noise_var)

    if run_mc:
        row.update(M=cfg.M, trials=cfg.trials)
        try:
            tc = TrialConfig.from_schedule(hv, p, sched, cfg.M)
            mc = monte_carlo(tc, cfg.trials, cfg.seed, threads)
            for ev in EVENTS:
                key = "mc_" + ev
                row[key] = mc.rates[ev]
                row[key + "_lo"], row[key + "_hi"] = mc.ci[ev]
        except EhfblError as e:
            errors.append(f"monte carlo: {e}")
    if errors:
        row["error"] = "; ".join(errors)
    return row


def run_sweep(cfg: ExperimentConfig, threads: int | None = None) -> list[dict]:
    """One row per (a, eps, n) grid point; failures are recorded, not raised."""
    moments = config_moments(cfg)
    run_mc = cfg.M is not None and cfg.mode in ("simulate", "sweep")
    rows = []
    for a in cfg.a:
        for eps in cfg.eps:
            n0 = _series_n0(cfg, eps, a, moments)
            for v in cfg.grid:
                rows.append(_row(cfg, v, eps, a, moments, n0, run_mc, threads))
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in COLUMNS])
    return buf.getvalue()


def _write(path, text):
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise OSError(f"cannot write {path}: {e.strerror or e}") from e


def emit_csv(rows, path) -> None:
    """Fixed :data:`COLUMNS` header; floats with 12 significant digits."""
    _write(path, rows_to_csv(rows))


def rows_to_json(rows) -> str:
    return json.dumps([{c: r.get(c) for c in COLUMNS} for r in rows], indent=1) + "\n"


def emit_json(rows, path) -> None:
    _write(path, rows_to_json(rows))


def _parse_cell(text):
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_rows(path) -> list[dict]:
    """Load rows written by :func:`emit_csv` or :func:`emit_json`."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("["):
        return json.loads(text)
    return [{k: _parse_cell(v) for k, v in r.items()} for r in csv.DictReader(io.StringIO(text))]


def plot_data(rows, x: str, ys) -> str:
    ys = [ys] if isinstance(ys, str) else list(ys)
    known = set(COLUMNS) | (set(rows[0]) if rows else set())
    for col in [x, *ys]:
        if col not in known:
            raise ValidationError("column", f"unknown column {col!r}")
    series = {}
    for r in rows:
        series.setdefault((r.get("eps"), r.get("a")), []).append(r)
    out = [f"# x={x} y={' '.join(ys)}"]
    blocks = []
    for (eps, a), group in series.items():
        group = sorted((r for r in group if r.get(x) is not None), key=lambda r: r[x])
        lines = [f"# eps={_fmt(eps)} a={_fmt(a)}", f"# {x} {' '.join(ys)}"]
        for r in group:
            vals = [r.get(c) for c in ys]
            lines.append(" ".join([_fmt(r[x])] + ["NaN" if v is None else _fmt(v) for v in vals]))
        blocks.append("\n".join(lines))
    return "\n".join(out) + "\n" + "\n\n".join(blocks) + "\n"


def emit_plot_data(rows, x: str, ys, path) -> None:
    """Gnuplot-style whitespace table, one blank-line separated block per (eps, a)."""
    _write(path, plot_data(rows, x, ys))


def moments_report(cfg: ExperimentConfig, trials: int | None = None) -> dict:
    """Quadrature moments next to a Monte Carlo cross-check."""
    quad = info_density_moments(cfg.channel, "quadrature", cfg.moments["order"], cfg.harvest.var)
    mc = info_density_moments(cfg.channel, "monte_carlo", trials or cfg.moments["trials"],
                              cfg.harvest.var, seed=cfg.seed)
    fields = ("mean_bits", "var_bits2", "abs3_bits3", "K", "varZ")
    return {
        "quadrature": {f: getattr(quad, f) for f in fields},
        "monte_carlo": {**{f: getattr(mc, f) for f in fields}, "std_errors": mc.std_errors},
        "closed_form": {"C_EG_bits": eh_capacity(cfg.channel),
                        "V_EG_bits2": eh_dispersion(cfg.channel), "K": 4.0 / math.pi},
    }
