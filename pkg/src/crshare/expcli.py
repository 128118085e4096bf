"""Experiment runner: reproduce the published figure datasets as CSV.

Named experiments carry the figure parameter sets as defaults; a flat
key = value config file selects the experiment and overrides anything.  Every
row of the long-format output holds one sweep point of one curve: the
analytic value(s), the Monte Carlo estimate with its standard error, and
capacity bounds where they apply.  A header comment block records the fully
resolved spec and code version, so a CSV regenerates bit-identically from its
own header (fixed seed, stream-indexed replications, order-preserving merge).

Subcommands: run <config>, list-experiments, selftest, plot <csv>.
Exit codes: 0 ok, 1 config error, 2 numeric-tolerance failure, 3 I/O error.
CRSHARE_WORKERS overrides the sweep worker-pool size.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from . import capmoments as cm
from . import extremes, fading, meancap, mcsim, moschopoulos as mos, scheduler
from .fading import db_to_linear
from .mcsim import SeedSpec

EXPERIMENT_NAMES = ("fig2a", "fig2b", "fig3", "fig4", "fig5", "fig6", "fig7",
                    "fig8", "outage", "custom")

CSV_FIELDS = ("sweep_var", "sweep_value", "curve", "analytic", "gamma_fit",
              "mc_mean", "mc_se", "naive_lo", "tight_lo", "tight_hi", "naive_hi")

_SCALAR_KEYS = {
    "F": int, "Fs": int, "Pm_dB": float, "psi_dB": float, "eta": float,
    "M": int, "M_hat": int, "replications": int, "seed": int, "h": int,
    "Np": int,
}
_LIST_KEYS = {"Fp": int, "Pn_dB": float}
_SWEEPABLE = ("Pm_dB", "psi_dB", "F", "Fs", "M")


class ConfigError(ValueError):
    """Config file rejected; message carries the offending line."""


class ToleranceError(RuntimeError):
    """An analytic/Monte Carlo cross-check exceeded its tolerance."""


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved experiment: parameters, sweep, curves, seeds, output."""

    name: str
    F: int
    Fs: int
    Fp: tuple[int, ...]
    Pm_dB: float
    Pn_dB: tuple[float, ...]
    psi_dB: float
    eta: float
    M: int
    M_hat: int
    replications: int
    seed: int
    h: int
    Np: int
    out: str
    sweep_var: str = ""
    sweep_grid: tuple[float, ...] = ()
    family_var: str = ""
    family_grid: tuple[float, ...] = ()

    def config(self, **overrides) -> meancap.SystemConfig:
        """SystemConfig at this spec's operating point (dB -> linear here)."""
        vals = {
            "F": self.F, "Fs": self.Fs, "Fp": self.Fp,
            "Pm": db_to_linear(self.Pm_dB),
            "Pn": tuple(db_to_linear(p) for p in self.Pn_dB),
            "psi": db_to_linear(self.psi_dB), "eta": self.eta,
        }
        vals.update(overrides)
        return meancap.make_config(**vals)


# defaults shared by the capacity-sweep figures: Fs=20, Fp=30, F=128, Pn=10 dB
_FIG45_BASE = dict(F=128, Fs=20, Fp=(30,), Pn_dB=(10.0,), eta=1.0)

_DEFAULTS: dict[str, dict] = {
    "fig2a": dict(F=128, Fs=20, Fp=(30,), Pm_dB=20.0, Pn_dB=(10.0,),
                  psi_dB=0.0, eta=1.0, replications=10**5),
    "fig2b": dict(F=128, Fs=20, Fp=(30,), Pm_dB=40.0, Pn_dB=(0.0,),
                  psi_dB=20.0, eta=0.01, replications=10**5),
    "fig3": dict(F=128, Fs=20, Fp=(30,), Pm_dB=20.0, Pn_dB=(10.0,),
                 psi_dB=0.0, eta=1.0, replications=10**5),
    "fig4": dict(**_FIG45_BASE, Pm_dB=20.0, psi_dB=0.0,
                 sweep_var="Pm_dB", sweep_grid=tuple(np.arange(-5.0, 30.5, 2.5)),
                 family_var="psi_dB", family_grid=(-5.0, 0.0, 5.0),
                 replications=4000),
    "fig5": dict(**_FIG45_BASE, Pm_dB=10.0, psi_dB=0.0,
                 sweep_var="psi_dB", sweep_grid=tuple(np.arange(-15.0, 20.5, 2.5)),
                 family_var="Pm_dB", family_grid=(0.0, 10.0, 20.0),
                 replications=4000),
    "fig6": dict(F=128, Fs=20, Fp=(10,), Pm_dB=10.0, Pn_dB=(5.0,), psi_dB=-5.0,
                 eta=1.0, sweep_var="Pm_dB",
                 sweep_grid=tuple(np.arange(-5.0, 30.5, 2.5)),
                 family_var="N", family_grid=(2.0, 6.0, 12.0),
                 replications=4000),
    "fig7": dict(F=128, Fs=20, Fp=(30,), Pm_dB=10.0, Pn_dB=(5.0,), psi_dB=-5.0,
                 eta=1.0, sweep_var="F",
                 sweep_grid=tuple(float(2**k) for k in range(6, 17)),
                 replications=4000),
    "fig8": dict(F=100, Fs=10, Fp=(40,), Pm_dB=10.0, Pn_dB=(10.0,), psi_dB=0.0,
                 eta=1.0, M=40, M_hat=5, sweep_var="Pm_dB",
                 sweep_grid=tuple(np.arange(-5.0, 31.0, 5.0)),
                 replications=300),
    "outage": dict(F=128, Fs=20, Fp=(30,), Pm_dB=20.0, Pn_dB=(10.0,),
                   psi_dB=0.0, eta=1.0, replications=10**5),
    "custom": dict(F=128, Fs=20, Fp=(30,), Pm_dB=10.0, Pn_dB=(10.0,),
                   psi_dB=0.0, eta=1.0, replications=2000),
}

_BASE_DEFAULTS = dict(M=10, M_hat=5, seed=20120423, h=25, Np=50, out="")


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def _parse_scalar(key: str, raw: str, lineno: int):
    caster = _SCALAR_KEYS[key]
    try:
        return caster(float(raw)) if caster is int else caster(raw)
    except ValueError:
        raise ConfigError(f"line {lineno}: {key} expects a number, got {raw!r}")


def validate_config(text: str) -> ExperimentSpec:
    """Parse a flat key = value document into a resolved ExperimentSpec.

    Named experiments pre-populate the published parameter sets; explicit
    keys override them.  Comma lists on Fp / Pn_dB are per-PU values; a comma
    list on one sweepable scalar key replaces that experiment's sweep grid.
    """
    seen: dict[str, int] = {}
    values: dict[str, object] = {}
    list_values: dict[str, tuple] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, _, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if key in seen:
            raise ConfigError(
                f"line {lineno}: duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        if key == "experiment":
            if raw not in EXPERIMENT_NAMES:
                raise ConfigError(
                    f"line {lineno}: unknown experiment {raw!r}; "
                    f"choose from {', '.join(EXPERIMENT_NAMES)}")
            values["experiment"] = raw
        elif key == "out":
            values["out"] = raw
        elif key in _LIST_KEYS:
            caster = _LIST_KEYS[key]
            try:
                list_values[key] = tuple(caster(float(v)) for v in raw.split(","))
            except ValueError:
                raise ConfigError(f"line {lineno}: {key} expects numbers, got {raw!r}")
        elif key in _SCALAR_KEYS:
            if "," in raw:
                if key not in _SWEEPABLE:
                    raise ConfigError(
                        f"line {lineno}: {key} does not accept a list")
                try:
                    grid = tuple(float(v) for v in raw.split(","))
                except ValueError:
                    raise ConfigError(
                        f"line {lineno}: {key} expects numbers, got {raw!r}")
                list_values[key] = grid
            else:
                values[key] = _parse_scalar(key, raw, lineno)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")

    name = values.pop("experiment", None)
    if name is None:
        raise ConfigError("missing required key 'experiment'")

    merged: dict = dict(_BASE_DEFAULTS)
    merged.update(_DEFAULTS[name])
    merged.setdefault("sweep_var", "")
    merged.setdefault("sweep_grid", ())
    merged.setdefault("family_var", "")
    merged.setdefault("family_grid", ())
    merged.update(values)
    for key, grid in list_values.items():
        if key in _LIST_KEYS:
            merged[key] = grid
        elif key == merged.get("family_var"):
            merged["family_grid"] = grid
        else:
            if merged.get("sweep_var") and merged["sweep_var"] != key \
                    and name != "custom":
                raise ConfigError(
                    f"{name} sweeps {merged['sweep_var']}; a list on {key!r} "
                    "is not supported")
            if name == "custom" and merged.get("sweep_var") not in ("", key):
                raise ConfigError("custom experiments take at most one swept key")
            merged["sweep_var"] = key
            merged["sweep_grid"] = grid
            merged.setdefault(key, grid[0])
    if not merged.get("out"):
        merged["out"] = f"{name}.csv"
    merged["name"] = name

    spec = ExperimentSpec(**{
        k: merged[k] for k in (
            "name", "F", "Fs", "Fp", "Pm_dB", "Pn_dB", "psi_dB", "eta", "M",
            "M_hat", "replications", "seed", "h", "Np", "out", "sweep_var",
            "sweep_grid", "family_var", "family_grid")
    })
    try:
        spec.config()  # surfaces SystemConfig/SubcarrierPool invariant messages
    except ValueError as exc:
        raise ConfigError(f"invalid parameter combination: {exc}") from exc
    if spec.replications < 0:
        raise ConfigError("replications must be nonnegative")
    return spec


# ---------------------------------------------------------------------------
# row machinery
# ---------------------------------------------------------------------------

def _row(sweep_var, sweep_value, curve, analytic=None, gamma_fit=None,
         mc_mean=None, mc_se=None, bounds=None, slack=None):
    """One output row; ``slack`` is the private analytic-vs-MC tolerance the
    generator grants this row (binomial/model-based where the empirical SE
    degenerates, plus any documented approximation budget)."""
    naive_lo = tight_lo = tight_hi = naive_hi = None
    if bounds is not None:
        naive_lo, naive_hi, tight_lo, tight_hi = bounds
    return {
        "sweep_var": sweep_var, "sweep_value": sweep_value, "curve": curve,
        "analytic": analytic, "gamma_fit": gamma_fit,
        "mc_mean": mc_mean, "mc_se": mc_se,
        "naive_lo": naive_lo, "tight_lo": tight_lo,
        "tight_hi": tight_hi, "naive_hi": naive_hi,
        "_slack": slack,
    }


def _bin_rows(sweep_var, curve, edges, cdf_vals, gamma_cdf_vals, samples):
    """Rows of bin-averaged densities: analytic, fitted, and histogram."""
    rows = []
    n = len(samples)
    counts, _ = np.histogram(samples, bins=edges)
    widths = np.diff(edges)
    centers = 0.5 * (edges[:-1] + edges[1:])
    for i, c in enumerate(centers):
        p_bin = cdf_vals[i + 1] - cdf_vals[i]
        g_bin = (gamma_cdf_vals[i + 1] - gamma_cdf_vals[i]) \
            if gamma_cdf_vals is not None else None
        p_hat = counts[i] / n if n else None
        model_se = math.sqrt(max(p_bin, 0.0) * (1 - min(p_bin, 1.0)) / n) \
            / widths[i] if n else None
        rows.append(_row(
            sweep_var, float(c), curve,
            analytic=p_bin / widths[i],
            gamma_fit=None if g_bin is None else g_bin / widths[i],
            mc_mean=None if p_hat is None else p_hat / widths[i],
            mc_se=(None if p_hat is None
                   else math.sqrt(p_hat * (1 - p_hat) / n) / widths[i]),
            slack=None if model_se is None else 5.0 * model_se + 1e-12,
        ))
    return rows


def _capacity_cdf_from_sinr(sinr_cdf, lp):
    return lambda x: sinr_cdf(np.expm1(np.asarray(x, dtype=float)), lp)


def _gamma_cdf(fit):
    from .specfun import regularized_gamma_p
    return lambda x: regularized_gamma_p(fit.alpha, np.asarray(x) / fit.beta)


def _run_fig2(spec: ExperimentSpec):
    lp = spec.config().links[0]
    n = spec.replications
    rows = []
    for curve, interference, sinr_cdf in (
        ("capacity_pdf_interference", True, fading.cdf_sinr_interference),
        ("capacity_pdf_nointerference", False, fading.cdf_sinr_nointerference),
    ):
        moments = (cm.capacity_moments_interference(lp, spec.Np) if interference
                   else cm.capacity_moments_nointerference(lp, spec.Np))
        fit = cm.match_gamma(moments)
        x_max = moments.mean + 6.0 * math.sqrt(moments.variance)
        edges = np.linspace(0.0, x_max, 61)
        cdf = _capacity_cdf_from_sinr(sinr_cdf, lp)
        rng = SeedSpec(spec.seed, 0 if interference else 1).rng()
        samples = mcsim.subcarrier_capacity_samples(lp, rng, n, interference) \
            if n else np.empty(0)
        rows += _bin_rows("capacity", curve, edges, cdf(edges),
                          _gamma_cdf(fit)(edges), samples)
    return rows


def _run_fig3(spec: ExperimentSpec):
    component_sets = {
        "S4": [(1.0, 0.5), (1.5, 0.6), (2.0, 0.8), (2.5, 1.0)],
        "S2": [(1.0, 1.0), (2.0, 2.0)],
    }
    rows = []
    n = spec.replications
    for stream, (label, comps) in enumerate(component_sets.items()):
        s = mos.build_series(comps, h=spec.h)
        mean = s.mean
        sd = math.sqrt(sum(a * b * b for a, b in comps))
        edges = np.linspace(0.0, mean + 6 * sd, 61)
        rng = SeedSpec(spec.seed, stream).rng()
        samples = mos.sample(s, rng, n) if n else np.empty(0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", mos.TruncationWarning)
            cdf_vals = mos.series_cdf(s, edges)
            rows += _bin_rows("value", f"pdf_{label}", edges, cdf_vals, None, samples)
            if n:
                emp = mcsim.EmpiricalDistribution(samples)
                for x in edges[1:]:
                    p = float(mos.series_cdf(s, x))
                    p_hat = float(emp.ecdf(x))
                    rows.append(_row(
                        "value", float(x), f"cdf_{label}", analytic=p,
                        mc_mean=p_hat,
                        mc_se=math.sqrt(max(p_hat * (1 - p_hat), 1e-12) / n),
                        slack=5.0 * math.sqrt(p * (1 - p) / n) + 1e-12))
    return rows


def _mean_capacity_rows(spec, sweep_value, curve, cfg):
    """One capacity sweep point: analytic mean, bounds, Monte Carlo."""
    if cfg.n_pu == 1:
        analytic = meancap.avg_capacity_single_pu(cfg, 0, spec.Np)
        bounds = meancap.capacity_bounds(cfg, 0, spec.Np)
    else:
        analytic = meancap.avg_capacity_multi_pu(cfg, spec.Np)
        means_i, mean_ni = meancap.subcarrier_means(cfg, spec.Np)
        tight_lo, tight_hi = meancap.capacity_bounds_multi_pu(cfg, spec.Np)
        bounds = (cfg.Fs * min(means_i), cfg.Fs * mean_ni, tight_lo, tight_hi)
    n = spec.replications
    mc_mean = mc_se = None
    if n:
        idx = _point_stream_index(spec, sweep_value, curve)
        samples = mcsim.capacity_samples(cfg, SeedSpec(spec.seed, idx).rng(), n)
        mc_mean = float(samples.mean())
        mc_se = float(samples.std(ddof=1) / math.sqrt(n))
    return _row(spec.sweep_var, sweep_value, curve, analytic=analytic,
                mc_mean=mc_mean, mc_se=mc_se, bounds=bounds)


def _point_stream_index(spec, sweep_value, curve) -> int:
    """Stable stream id per (sweep point, curve): independent of scheduling."""
    key = f"{spec.sweep_var}={sweep_value!r}/{curve}"
    return int.from_bytes(key.encode(), "little") % (2**31)


def _run_family_sweep(spec: ExperimentSpec):
    rows = []
    family = spec.family_grid or (None,)
    for fam_val in family:
        for sweep_value in spec.sweep_grid:
            overrides = {spec.sweep_var: sweep_value}
            if fam_val is not None:
                overrides[spec.family_var] = fam_val
            cfg = _config_at(spec, overrides)
            curve = (f"{spec.family_var}={fam_val:g}" if fam_val is not None
                     else "capacity")
            rows.append(_mean_capacity_rows(spec, sweep_value, curve, cfg))
    return rows


def _config_at(spec: ExperimentSpec, overrides: dict) -> meancap.SystemConfig:
    params = dict(F=spec.F, Fs=spec.Fs, Fp=spec.Fp,
                  Pm=db_to_linear(spec.Pm_dB),
                  Pn=tuple(db_to_linear(p) for p in spec.Pn_dB),
                  psi=db_to_linear(spec.psi_dB), eta=spec.eta)
    for key, val in overrides.items():
        if key == "Pm_dB":
            params["Pm"] = db_to_linear(val)
        elif key == "psi_dB":
            params["psi"] = db_to_linear(val)
        elif key == "N":
            n = int(val)
            params["Fp"] = (spec.Fp[0],) * n
            params["Pn"] = (db_to_linear(spec.Pn_dB[0]),) * n
        elif key in ("F", "Fs", "M"):
            params[key] = int(val)
        else:
            raise ConfigError(f"cannot sweep {key!r}")
    params.pop("M", None)
    return meancap.make_config(**params)


def _run_fig7(spec: ExperimentSpec):
    rows = _run_family_sweep(spec)
    # the blind-allocation limit: all subcarriers collision-free
    _, mean_ni = meancap.subcarrier_means(spec.config(), spec.Np)
    for sweep_value in spec.sweep_grid:
        rows.append(_row(spec.sweep_var, sweep_value, "limit",
                         analytic=spec.Fs * mean_ni))
    return rows


def _run_fig8(spec: ExperimentSpec):
    rows = []
    n = spec.replications
    variants = [
        ("opportunistic_M40", scheduler.run_opportunistic, 40),
        ("opportunistic_M10", scheduler.run_opportunistic, 10),
        ("arbitrary", scheduler.run_arbitrary, spec.M),
        ("colliding_M10", scheduler.run_colliding_baseline, 10),
        ("colliding_M40", scheduler.run_colliding_baseline, 40),
    ]
    for sweep_value in spec.sweep_grid:
        cfg = _config_at(spec, {spec.sweep_var: sweep_value})
        for curve, runner, M in variants:
            analytic = None
            if runner is scheduler.run_opportunistic:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", UserWarning)
                    analytic = scheduler.sum_capacity_approximation(
                        cfg, M, spec.M_hat, spec.h, spec.Np)
            mc_mean = mc_se = None
            if n:
                base = _point_stream_index(spec, sweep_value, curve)
                vals = np.empty(n)
                for i in range(n):
                    rng = SeedSpec(spec.seed, (base + 2 * i) % 2**31).rng()
                    chan = SeedSpec(spec.seed + 1, (base + 2 * i + 1) % 2**31).rng()
                    vals[i] = runner(cfg, M, spec.M_hat, rng, chan).sum_capacity
                mc_mean = float(vals.mean())
                mc_se = float(vals.std(ddof=1) / math.sqrt(n))
            rows.append(_row(spec.sweep_var, sweep_value, curve,
                             analytic=analytic, mc_mean=mc_mean, mc_se=mc_se))
    return rows


def _run_outage(spec: ExperimentSpec):
    cfg = spec.config()
    fits = cm.fit_capacity_gammas(cfg.links, spec.Np)
    mean = mos.marginal_capacity_mean(cfg, fits)
    thresholds = np.linspace(0.05 * mean, 2.0 * mean, 25)
    n = spec.replications
    samples = (mcsim.capacity_samples(cfg, SeedSpec(spec.seed, 0).rng(), n)
               if n else None)
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", mos.TruncationWarning)
        cdf = mos.marginal_capacity_cdf(cfg, fits, spec.h)
        for thr in thresholds:
            p = float(cdf(thr))
            mc_mean = mc_se = slack = None
            if samples is not None:
                p_hat = float((samples < thr).mean())
                mc_mean = p_hat
                mc_se = math.sqrt(max(p_hat * (1 - p_hat), 1e-12) / n)
                # the marginal law is the moment-matched approximation; its
                # documented distributional error budget is 0.05 in probability
                slack = 0.05 + 5.0 * math.sqrt(p * (1 - p) / n)
            rows.append(_row("threshold", float(thr), "outage",
                             analytic=p, mc_mean=mc_mean, mc_se=mc_se,
                             slack=slack))
    return rows


def _run_custom(spec: ExperimentSpec):
    if not spec.sweep_var:
        spec = replace(spec, sweep_var="Pm_dB", sweep_grid=(spec.Pm_dB,))
    return _run_family_sweep(spec)


_RUNNERS = {
    "fig2a": _run_fig2, "fig2b": _run_fig2, "fig3": _run_fig3,
    "fig4": _run_family_sweep, "fig5": _run_family_sweep,
    "fig6": _run_family_sweep, "fig7": _run_fig7, "fig8": _run_fig8,
    "outage": _run_outage, "custom": _run_custom,
}


def run_experiment(spec: ExperimentSpec):
    """Produce the row table for a resolved spec (deterministic per seed)."""
    workers = int(os.environ.get("CRSHARE_WORKERS", "1"))
    runner = _RUNNERS[spec.name]
    if workers > 1 and spec.name in ("fig4", "fig5", "fig6", "fig8"):
        # sweep points are independent and stream-indexed, so per-point
        # results match the serial run regardless of the pool size; family
        # curves regroup because map preserves order
        points = [replace(spec, sweep_grid=(v,)) for v in spec.sweep_grid]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(runner, points))
        rows: list[dict] = []
        family = spec.family_grid or (None,)
        per_fam = [[] for _ in family]
        for chunk in chunks:
            for j in range(len(family)):
                per_fam[j].extend(chunk[j::len(family)])
        for fam_rows in per_fam:
            rows.extend(fam_rows)
        return rows
    return runner(spec)


def check_tolerances(rows, spec: ExperimentSpec) -> list[str]:
    """Cross-check analytic vs Monte Carlo columns; return violation messages."""
    problems = []
    for row in rows:
        analytic, mc, se = row["analytic"], row["mc_mean"], row["mc_se"]
        if analytic is None or mc is None:
            continue
        if spec.name == "fig8":
            # the sum-capacity column is an asymptotic approximation
            if mc > 0 and abs(analytic - mc) / mc > 0.25:
                problems.append(
                    f"{row['curve']} at {row['sweep_value']}: asymptote "
                    f"{analytic:.4g} vs simulation {mc:.4g} beyond 25%")
            continue
        slack = row["_slack"]
        if slack is None:
            slack = 4.0 * se + 1e-12 if se else 1e-9
        if abs(analytic - mc) > slack:
            problems.append(
                f"{row['curve']} at {row['sweep_value']}: analytic "
                f"{analytic:.6g} vs MC {mc:.6g} +- {se:.2g}")
    return problems


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_csv(path: str, spec: ExperimentSpec, rows) -> None:
    lines = [f"# crshare {__version__} experiment dataset"]
    for key in ("name", "F", "Fs", "Fp", "Pm_dB", "Pn_dB", "psi_dB", "eta",
                "M", "M_hat", "replications", "seed", "h", "Np",
                "sweep_var", "sweep_grid", "family_var", "family_grid"):
        lines.append(f"# {key} = {getattr(spec, key)}")
    if spec.name == "fig8":
        lines.append("# note: 'arbitrary' selects SUs in fixed index order")
    lines.append(",".join(CSV_FIELDS))
    for row in rows:
        lines.append(",".join(_fmt(row[k]) for k in CSV_FIELDS))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------

def selftest(verbose: bool = True) -> int:
    """Condensed invariant battery; returns the number of failed checks."""
    from .specfun import gcq_rule, regularized_gamma_p, upper_incomplete_gamma
    from . import collision as col

    checks = []

    def check(name, fn):
        try:
            fn()
            checks.append((name, None))
        except AssertionError as exc:
            checks.append((name, str(exc) or "assertion failed"))

    def quadrature():
        rule = gcq_rule(50)
        err = abs(float(np.sum(rule.weights * np.exp(-rule.nodes))) - 1.0)
        assert err < 1e-6, f"gcq e^-s error {err:.2e}"

    def gamma_identities():
        for a in (0.5, 3.0, 40.0):
            x = np.logspace(-4, 2, 20)
            q = upper_incomplete_gamma(a, x) / math.gamma(a)
            assert np.allclose(regularized_gamma_p(a, x) + q, 1.0, atol=1e-12)

    def collision_law():
        pool = col.SubcarrierPool(F=12, Fp=(3, 4))
        total = sum(col.mvhypergeom_pmf(5, pool, kv)
                    for kv in col.mvhypergeom_support(5, pool))
        assert abs(total - 1.0) < 1e-10, f"pmf normalization {total}"
        mean = col.hypergeom_mean(20, 30, 128)
        assert abs(mean - 4.6875) < 1e-12

    def fading_family():
        lp = fading.LinkParams(Pm=100.0, Pn=10.0, psi=1.0, eta=1.0)
        rng = SeedSpec(1, 0).rng()
        s = np.sort(mcsim.subcarrier_capacity_samples(lp, rng, 20000, True))
        model = fading.cdf_sinr_interference(np.expm1(s), lp)
        i = np.arange(1, len(s) + 1)
        ks = np.max(np.maximum(i / len(s) - model, model - (i - 1) / len(s)))
        assert ks < mcsim.dkw_band(len(s), 0.001), f"DKW violated: {ks:.4f}"

    def capacity_identity():
        lp = fading.LinkParams(Pm=100.0, Pn=10.0, psi=2.0, eta=1.0)
        m = cm.capacity_moments_interference(lp)
        fit = cm.match_gamma(m)
        assert abs(fit.mean - m.mean) < 1e-12
        assert abs(fit.variance - m.variance) < 1e-12

    def series_collapse():
        s = mos.build_series([(1.5, 2.0), (2.5, 2.0)], h=10)
        y = np.linspace(0.1, 20, 30)
        want = np.exp(3.0 * np.log(y) - y / 2 - 4 * math.log(2.0)
                      - math.lgamma(4.0))
        assert np.allclose(mos.series_pdf(s, y), want, rtol=1e-12)
        s2 = mos.build_series([(1.0, 1.0), (1.0, 2.0)], h=80)
        want2 = math.exp(-0.5) - math.exp(-1.0)
        assert abs(mos.series_pdf(s2, 1.0) - want2) < 1e-8

    def extremes_closed_form():
        gp = extremes.gumbel_params(
            lambda x: -math.expm1(-x), lambda x: math.exp(-x), 100)
        assert abs(gp.bM - math.log(100)) < 1e-10
        assert abs(gp.aM - 1.0) < 1e-8

    def scheduler_orthogonality():
        cfg = meancap.make_config(F=30, Fs=5, Fp=10, Pm=10.0, Pn=3.0,
                                  psi=1.0, eta=1.0)
        rng = SeedSpec(5, 0).rng()
        for _ in range(200):
            scheduler.run_opportunistic(cfg, 8, 4, rng, check=True)

    check("quadrature accuracy", quadrature)
    check("incomplete-gamma complement identity", gamma_identities)
    check("collision-law normalization and mean", collision_law)
    check("fading family vs Monte Carlo (DKW)", fading_family)
    check("gamma moment matching", capacity_identity)
    check("sum-of-gamma series identities", series_collapse)
    check("extreme-value closed forms", extremes_closed_form)
    check("scheduler orthogonality", scheduler_orthogonality)

    failed = 0
    for name, err in checks:
        ok = err is None
        failed += 0 if ok else 1
        if verbose:
            print(f"[{'ok' if ok else 'FAIL'}] {name}" + ("" if ok else f": {err}"))
    return failed


# ---------------------------------------------------------------------------
# plotting (optional, out of the numeric core)
# ---------------------------------------------------------------------------

def plot_csv(path: str, out: str | None = None) -> str:
    import csv

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    curves: dict[str, dict[str, list]] = {}
    sweep_var = "x"
    with open(path, encoding="utf-8") as fh:
        reader = csv.DictReader(r for r in fh if not r.startswith("#"))
        for row in reader:
            curve = curves.setdefault(row["curve"], {"x": [], "y": [], "mc": []})
            sweep_var = row["sweep_var"]
            curve["x"].append(float(row["sweep_value"]))
            curve["y"].append(float(row["analytic"]) if row["analytic"] else None)
            curve["mc"].append(float(row["mc_mean"]) if row["mc_mean"] else None)
    fig, ax = plt.subplots(figsize=(7, 5))
    for name, data in curves.items():
        if any(v is not None for v in data["y"]):
            ax.plot(data["x"], [v if v is not None else np.nan for v in data["y"]],
                    label=name)
        if any(v is not None for v in data["mc"]):
            ax.plot(data["x"], [v if v is not None else np.nan for v in data["mc"]],
                    "o", ms=3, label=f"{name} (sim)")
    ax.set_xlabel(sweep_var)
    ax.set_ylabel("value")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    out = out or os.path.splitext(path)[0] + ".png"
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="crshare",
        description="Spectrum-sharing capacity experiments (analytic + Monte Carlo)")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config to CSV")
    p_run.add_argument("config", help="path to a key = value config file")
    p_run.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
    sub.add_parser("list-experiments", help="list named experiments")
    sub.add_parser("selftest", help="run the condensed invariant battery")
    p_plot = sub.add_parser("plot", help="render a CSV produced by `run`")
    p_plot.add_argument("csv")
    p_plot.add_argument("--out", default=None)
    args = parser.parse_args(argv)

    if args.command == "list-experiments":
        for name in EXPERIMENT_NAMES:
            defaults = _DEFAULTS[name]
            keys = ", ".join(
                f"{k}={v}" for k, v in defaults.items()
                if k in ("F", "Fs", "Fp", "Pm_dB", "Pn_dB", "psi_dB", "eta"))
            print(f"{name:7s} {keys}")
        return 0

    if args.command == "selftest":
        failed = selftest()
        return 2 if failed else 0

    if args.command == "plot":
        try:
            out = plot_csv(args.csv, args.out)
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return 3
        print(out)
        return 0

    # run
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    try:
        spec = validate_config(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    rows = run_experiment(spec)
    problems = check_tolerances(rows, spec)
    try:
        write_csv(spec.out, spec, rows)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {spec.out} ({len(rows)} rows)")
    if problems:
        for p in problems:
            print(f"tolerance violation: {p}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
