"""Command-line front end.

    levy-sync run <config-file> [--seed N] [--output DIR] [--no-plots]
    levy-sync validate <config-file>
    levy-sync list-drifts

Config files are flat INI documents with sections [run], [spec], [mc];
unknown keys are errors, not warnings. See docs/formats.md for the schema
and the CSV / manifest column contracts.

Exit codes: 0 success, 2 acceptance-check failure (e.g. a convergence
curve that is not monotone within bands), 1 execution error. Failed runs
leave a FAILED marker file next to any partial outputs.
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .averaging import mixing_rate
from .errors import LevySyncError, ParseError, ValidationError
from .mc import (
    Estimate,
    ExperimentReport,
    MCConfig,
    attractor_diameter,
    averaging_convergence,
    moment_uniformity,
    synchronization_persistence,
)
from .plots import emit_plot
from .sde import PathGrid, SamplePath, holder_increment_estimate
from .stable_noise import (
    Convention,
    StableLaw,
    empirical_char_function,
    make_stream,
    sample_standard,
)
from .synchro import CoupledSpec, DRIFT_LIBRARY, make_drift
from ._engine import EnsembleSystem, simulate_paths

EXPERIMENTS = (
    "sampler-check",
    "averaging",
    "persistence",
    "moments",
    "attractor",
    "mixing",
    "holder",
)

SCHEMA_VERSION = 1

_PLOT_KINDS = {
    "sampler-check": "linear",
    "averaging": "loglog",
    "persistence": "loglog",
    "moments": "semilogx",
    "attractor": "semilogy",
    "mixing": "loglog",
    "holder": "loglog",
}


@dataclass
class RunConfig:
    """Validated experiment configuration."""

    experiment: str
    spec: CoupledSpec
    mc: MCConfig
    output_dir: Path
    emit_plots: bool = True
    x0: float = 1.0
    y0: float = 1.0
    integrator: str = "euler"
    ic_count: int = 8
    ic_lo: float = -5.0
    ic_hi: float = 5.0
    y1: float = 1.0
    y2: float = -1.0


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

_SCHEMA = {
    "run": {
        "schema", "experiment", "output_dir", "emit_plots", "integrator",
    },
    "spec": {
        "f", "f_params", "g", "g_params", "sigma1", "sigma2", "alpha",
        "scale", "dim", "convention", "nu", "x0", "y0",
        "ic_count", "ic_lo", "ic_hi", "y1", "y2",
    },
    "mc": {
        "p", "n_paths", "t", "master_seed", "epsilon_list", "nu_list",
        "delta_rule", "delta_value", "h_coeff", "mesh_points", "n_workers",
        "include_auxiliary",
    },
}


class _Section:
    def __init__(self, parser: configparser.ConfigParser, name: str):
        self.name = name
        self.raw = dict(parser[name]) if parser.has_section(name) else {}

    def _pop(self, key: str):
        return self.raw.pop(key, None)

    def get_str(self, key, default=None, choices=None):
        raw = self._pop(key)
        value = default if raw is None else raw.strip()
        if value is None:
            raise ValidationError(f"[{self.name}] {key} is required")
        if choices is not None and value not in choices:
            raise ValidationError(
                f"[{self.name}] {key} = {value!r} not one of {sorted(choices)}"
            )
        return value

    def get_float(self, key, default=None):
        raw = self._pop(key)
        if raw is None:
            if default is None:
                raise ValidationError(f"[{self.name}] {key} is required")
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise ParseError(f"[{self.name}] {key} = {raw!r} is not a number") from exc

    def get_int(self, key, default=None):
        raw = self._pop(key)
        if raw is None:
            if default is None:
                raise ValidationError(f"[{self.name}] {key} is required")
            return default
        try:
            return int(raw)
        except ValueError as exc:
            raise ParseError(f"[{self.name}] {key} = {raw!r} is not an integer") from exc

    def get_bool(self, key, default):
        raw = self._pop(key)
        if raw is None:
            return default
        text = raw.strip().lower()
        if text in ("true", "yes", "1", "on"):
            return True
        if text in ("false", "no", "0", "off"):
            return False
        raise ParseError(f"[{self.name}] {key} = {raw!r} is not a boolean")

    def get_floats(self, key, default):
        raw = self._pop(key)
        if raw is None:
            return default
        parts = [p for p in raw.replace(",", " ").split() if p]
        try:
            return tuple(float(p) for p in parts)
        except ValueError as exc:
            raise ParseError(f"[{self.name}] {key} = {raw!r} is not a number list") from exc

    def reject_unknown(self):
        known = _SCHEMA[self.name]
        for key in self.raw:
            raise ValidationError(f"unknown key {key!r} in [{self.name}]")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config document; unknown keys are errors."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ParseError(str(exc)) from exc
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ValidationError(f"unknown section [{section}]")
    if not parser.has_section("run"):
        raise ValidationError("missing required section [run]")

    run = _Section(parser, "run")
    schema = run.get_int("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ValidationError(f"[run] schema = {schema} is not supported (expected {SCHEMA_VERSION})")
    experiment = run.get_str("experiment", choices=set(EXPERIMENTS))
    output_dir = Path(run.get_str("output_dir", "out"))
    emit_plots = run.get_bool("emit_plots", True)
    integrator = run.get_str("integrator", "euler", choices={"euler", "ou-exact"})
    run.reject_unknown()

    spec_sec = _Section(parser, "spec")
    f_name = spec_sec.get_str("f", "tanh")
    f_params = spec_sec.get_floats("f_params", ())
    g_name = spec_sec.get_str("g", "tanh")
    g_params = spec_sec.get_floats("g_params", ())
    for name in (f_name, g_name):
        if name not in DRIFT_LIBRARY:
            raise ValidationError(
                f"[spec] drift {name!r} is not in the built-in library "
                f"(see `levy-sync list-drifts`)"
            )
    sigma1 = spec_sec.get_float("sigma1", 1.0)
    sigma2 = spec_sec.get_float("sigma2", 0.2)
    alpha = spec_sec.get_float("alpha", 1.5)
    scale = spec_sec.get_float("scale", 1.0)
    dim = spec_sec.get_int("dim", 1)
    convention = spec_sec.get_str("convention", "unit", choices={"unit", "paper-c1"})
    nu = spec_sec.get_float("nu", 1.0)
    x0 = spec_sec.get_float("x0", 1.0)
    y0 = spec_sec.get_float("y0", 1.0)
    ic_count = spec_sec.get_int("ic_count", 8)
    ic_lo = spec_sec.get_float("ic_lo", -5.0)
    ic_hi = spec_sec.get_float("ic_hi", 5.0)
    y1 = spec_sec.get_float("y1", 1.0)
    y2 = spec_sec.get_float("y2", -1.0)
    spec_sec.reject_unknown()

    mc_sec = _Section(parser, "mc")
    try:
        law = StableLaw(alpha=alpha, dim=dim, scale=scale,
                        convention=Convention(convention))
        spec = CoupledSpec(
            f=make_drift(f_name, f_params),
            g=make_drift(g_name, g_params),
            sigma1=sigma1,
            sigma2=sigma2,
            nu=nu,
            law=law,
        )
        mc = MCConfig(
            p=mc_sec.get_float("p", 1.2),
            n_paths=mc_sec.get_int("n_paths", 10_000),
            T=mc_sec.get_float("t", 5.0),
            master_seed=mc_sec.get_int("master_seed", 0),
            epsilon_list=mc_sec.get_floats("epsilon_list", (0.1, 0.05, 0.02, 0.01)),
            nu_list=mc_sec.get_floats("nu_list", (1.0, 4.0, 16.0, 64.0)),
            delta_rule=mc_sec.get_str("delta_rule", "paper", choices={"paper", "fixed"}),
            delta_value=(lambda v: None if v == 0.0 else v)(mc_sec.get_float("delta_value", 0.0)),
            h_coeff=mc_sec.get_float("h_coeff", 1e-3),
            mesh_points=mc_sec.get_int("mesh_points", 25),
            n_workers=(lambda v: None if v == 0 else v)(mc_sec.get_int("n_workers", 0)),
            include_auxiliary=mc_sec.get_bool("include_auxiliary", False),
        )
    except (ValueError, TypeError) as exc:
        if isinstance(exc, (ParseError, ValidationError)):
            raise
        raise ValidationError(str(exc)) from exc
    mc_sec.reject_unknown()

    if mc.p >= alpha:
        raise ValidationError(
            f"[mc] p = {mc.p} must be strictly below alpha = {alpha}: "
            "L^p moments are infinite for p >= alpha"
        )
    if ic_count < 8:
        raise ValidationError("[spec] ic_count must be at least 8")
    return RunConfig(
        experiment=experiment,
        spec=spec,
        mc=mc,
        output_dir=output_dir,
        emit_plots=emit_plots,
        x0=x0,
        y0=y0,
        integrator=integrator,
        ic_count=ic_count,
        ic_lo=ic_lo,
        ic_hi=ic_hi,
        y1=y1,
        y2=y2,
    )


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)


# ---------------------------------------------------------------------------
# Experiment runners not already provided by the mc module
# ---------------------------------------------------------------------------

_ECF_FREQUENCIES = (0.5, 1.0, 2.0, 3.0)


def _run_sampler_check(config: RunConfig) -> ExperimentReport:
    """Empirical characteristic function of the raw sampler against
    exp(-|u|^alpha), plus the variance reduction check at alpha = 2."""
    spec, mc = config.spec, config.mc
    law = spec.law
    n = max(mc.n_paths, 100_000)
    rng = make_stream(mc.master_seed, 0, f"sampler-check:{law.alpha!r}")
    samples = sample_standard(law, rng, size=n)
    band = 4.0 / math.sqrt(n)
    report = ExperimentReport("sampler-check")
    for u in _ECF_FREQUENCIES:
        uvec = np.full(law.dim, u / math.sqrt(law.dim))
        target = math.exp(-(law.unit_scale() ** law.alpha) * np.sum(np.abs(uvec) ** law.alpha))
        err = abs(empirical_char_function(samples, uvec) - target)
        report.add(u, "ecf_abs_error", Estimate(err, 0.0, band, n_effective=n))
        if err > band:
            report.failures.append(f"sampler:u={u!r}:ecf error {err:.3g} > band {band:.3g}")
    med = float(np.median(np.linalg.norm(samples, axis=-1) * np.sign(samples[:, 0])))
    report.add(0.0, "median", Estimate(med, -0.01, 0.01, n_effective=n))
    if abs(med) > 0.01:
        report.failures.append(f"sampler:median {med:.4g} exceeds 0.01")
    if law.alpha == 2.0:
        var = float(np.var(samples))
        target = 2.0 * law.unit_scale() ** 2
        report.add(2.0, "sample_variance", Estimate(var, target - 0.01 * target, target + 0.01 * target, n_effective=n))
        if abs(var - target) > 0.01 * target:
            report.failures.append(
                f"sampler:variance {var:.4g} deviates from {target} by more than 1%"
            )
    report.manifest = _manifest_for(config, n_samples=n, sweep="frequency")
    report.manifest["sweep"] = "frequency"
    return report


def _run_mixing(config: RunConfig) -> ExperimentReport:
    """Contraction rate of the frozen fast process across the epsilon sweep,
    gated by the Gronwall envelope 2/eps -+ (L_f + L_g)/2."""
    spec, mc = config.spec, config.mc
    report = ExperimentReport("mixing")
    n_paths = min(mc.n_paths, 2048)
    for eps in mc.epsilon_list:
        t_grid = np.linspace(0.1 * eps, eps, 10)
        est = mixing_rate(
            spec, config.x0, eps, config.y1, config.y2, mc.p,
            n_paths=n_paths, t_grid=t_grid, master_seed=mc.master_seed,
            n_workers=mc.n_workers,
        )
        report.add(eps, "contraction_rate", Estimate(est.rate, est.rate, est.rate, n_effective=n_paths))
        base = 2.0 / eps
        lf = spec.f.lipschitz
        lg = spec.g.lipschitz
        if lf is not None and lg is not None:
            halfwidth = 0.5 * (lf + lg) + 0.01 * base
            if not (base - halfwidth <= est.rate <= base + halfwidth):
                report.failures.append(
                    f"mixing:eps={eps!r}:rate {est.rate:.4g} outside envelope "
                    f"{base - halfwidth:.4g}..{base + halfwidth:.4g}"
                )
    report.manifest = _manifest_for(
        config, sweep="epsilon_list", y1=config.y1, y2=config.y2,
        n_paths_used=n_paths,
    )
    return report


def _run_holder(config: RunConfig) -> ExperimentReport:
    """Holder slope of the slow-path increments at the two extremes:
    pure stable noise (slope 1/alpha) and pure bounded drift (slope 1)."""
    spec, mc = config.spec, config.mc
    h = 1e-3
    grid = PathGrid(0.0, 1.0, int(round(1.0 / h)))
    lags = [2 * h, 5 * h, 10 * h, 20 * h, 50 * h, 100 * h]
    report = ExperimentReport("holder")
    sigma = 0.5 * (spec.sigma1 + spec.sigma2)

    def zero_field(x, t):
        return np.zeros_like(x)

    n_noise = min(mc.n_paths, 2048)
    mesh_idx = np.arange(0, grid.n_steps + 1)
    mesh, diverged = simulate_paths(
        EnsembleSystem(zero_field, sigma, np.zeros((1, spec.law.dim))),
        spec.law, grid, mesh_idx, n_noise, mc.master_seed,
        purpose="holder-noise", n_workers=mc.n_workers,
    )
    paths = [
        SamplePath(grid=grid, values=mesh[i, :, 0, :])
        for i in range(n_noise)
        if not diverged[i]
    ]
    norms, slope_noise = holder_increment_estimate(paths, mc.p, lags, spec.alpha)
    for lag, val in norms:
        report.add(lag, "lp_increment_noise", Estimate(val, val, val, n_effective=len(paths)))
    report.add(0.0, "holder_slope_noise", Estimate(slope_noise, slope_noise, slope_noise, n_effective=len(paths)))

    def avg_field(x, t, _spec=spec):
        return 0.5 * (_spec.f(x) + _spec.g(x))

    mesh_d, _ = simulate_paths(
        EnsembleSystem(avg_field, 0.0, np.full((1, spec.law.dim), config.x0)),
        spec.law, grid, mesh_idx, 1, mc.master_seed,
        purpose="holder-drift", n_workers=1,
    )
    drift_path = SamplePath(grid=grid, values=mesh_d[0, :, 0, :])
    norms_d, slope_drift = holder_increment_estimate([drift_path], mc.p, lags, spec.alpha)
    for lag, val in norms_d:
        report.add(lag, "lp_increment_drift", Estimate(val, val, val, n_effective=1))
    report.add(0.0, "holder_slope_drift", Estimate(slope_drift, slope_drift, slope_drift, n_effective=1))

    lo_gate = 0.85 * min(1.0 / spec.alpha, 1.0)
    for name, slope in (("noise", slope_noise), ("drift", slope_drift)):
        if not lo_gate <= slope <= 1.1:
            report.failures.append(
                f"holder:{name}:slope {slope:.4g} outside [{lo_gate:.4g}, 1.1]"
            )
    report.manifest = _manifest_for(config, lags=lags, sweep="time")
    return report


def _run_attractor(config: RunConfig) -> ExperimentReport:
    spec, mc = config.spec, config.mc
    ics = np.linspace(config.ic_lo, config.ic_hi, config.ic_count)
    ics = np.repeat(ics[:, None], spec.law.dim, axis=1)
    report = attractor_diameter(spec, ics, mc, integrator=config.integrator)
    rows = report.rows_for("mean_diameter_lp")
    initial = rows[0].value
    final = rows[-1].value
    if config.integrator == "ou-exact":
        a = spec.f.params[0]
        for r in rows:
            target = initial * math.exp(-a * r.sweep_value)
            if target > 1e-280 and abs(r.value - target) > 1e-8 * target:
                report.failures.append(
                    f"attractor:t={r.sweep_value!r}:diameter {r.value!r} "
                    f"deviates from exact decay {target!r}"
                )
    else:
        if final > 1e-3 * initial:
            report.failures.append(
                f"attractor:final diameter {final:.4g} exceeds 1e-3 of initial {initial:.4g}"
            )
    return report


def _manifest_for(config: RunConfig, **extra) -> dict:
    from .mc import _base_manifest

    payload = _base_manifest(config.experiment, config.spec, config.mc, **extra)
    payload["x0"] = config.x0
    payload["y0"] = config.y0
    return payload


def _warn_hypotheses(spec: CoupledSpec) -> None:
    """Probe the drift hypotheses; violations warn instead of aborting
    (running anyway is the user's override, and the probes are advisory)."""
    import warnings

    from .errors import HypothesisViolation
    from .synchro import validate_hypotheses

    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            validate_hypotheses(spec)
        for w in caught:
            print(f"hypothesis warning: {w.message}", file=sys.stderr)
    except HypothesisViolation as exc:
        print(f"hypothesis warning: {exc}; proceeding anyway", file=sys.stderr)


def execute(config: RunConfig) -> ExperimentReport:
    """Run the configured experiment and return its report."""
    if config.experiment == "sampler-check":
        return _run_sampler_check(config)
    if config.experiment in ("averaging", "moments"):
        # certify at the weakest coupling of the sweep
        _warn_hypotheses(config.spec.with_nu(1.0 / max(config.mc.epsilon_list)))
    elif config.experiment == "persistence":
        _warn_hypotheses(config.spec.with_nu(min(config.mc.nu_list)))
    if config.experiment == "averaging":
        return averaging_convergence(config.spec, config.mc, config.x0, config.y0)
    if config.experiment == "persistence":
        return synchronization_persistence(config.spec, config.mc, config.x0, config.y0)
    if config.experiment == "moments":
        return moment_uniformity(config.spec, config.mc, config.x0, config.y0)
    if config.experiment == "attractor":
        return _run_attractor(config)
    if config.experiment == "mixing":
        return _run_mixing(config)
    if config.experiment == "holder":
        return _run_holder(config)
    raise ValidationError(f"unknown experiment {config.experiment!r}")


# ---------------------------------------------------------------------------
# Output emission
# ---------------------------------------------------------------------------


def _atomic_write(path: Path, data: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_outputs(report: ExperimentReport, config: RunConfig) -> None:
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    _atomic_write(out / "report.csv", report.to_csv())
    _atomic_write(out / "manifest.jsonl", report.manifest_jsonl())
    if config.emit_plots:
        kind = _PLOT_KINDS[config.experiment]
        for estimator in sorted({r.estimator for r in report.rows}):
            svg = emit_plot(report, kind=kind, estimator=estimator)
            safe = estimator.replace("/", "-")
            _atomic_write(out / f"{config.experiment}_{safe}.svg", svg)


def run(config: RunConfig) -> int:
    """Execute an experiment, emit outputs, map the result to an exit code."""
    try:
        report = execute(config)
    except LevySyncError as exc:
        _mark_failed(config.output_dir, f"error: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return 1
    write_outputs(report, config)
    if report.failures:
        _mark_failed(config.output_dir, "\n".join(report.failures))
        for failure in report.failures:
            print(f"acceptance failure: {failure}", file=sys.stderr)
        return 2
    marker = config.output_dir / "FAILED"
    if marker.exists():
        marker.unlink()
    return 0


def _mark_failed(output_dir: Path, reason: str) -> None:
    try:
        output_dir.mkdir(parents=True, exist_ok=True)
        _atomic_write(output_dir / "FAILED", reason + "\n")
    except OSError:
        pass


# ---------------------------------------------------------------------------
# argparse entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levy-sync",
        description="Monte Carlo experiments for coupled SDEs under alpha-stable noise",
    )
    parser.add_argument("--version", action="version", version=f"levy-sync {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config", help="path to the INI config document")
    p_run.add_argument("--seed", type=int, default=None, help="override [mc] master_seed")
    p_run.add_argument("--output", default=None, help="override [run] output_dir")
    p_run.add_argument("--no-plots", action="store_true", help="skip SVG emission")

    p_val = sub.add_parser("validate", help="parse and validate a config file")
    p_val.add_argument("config", help="path to the INI config document")

    sub.add_parser("list-drifts", help="list the built-in drift library")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "list-drifts":
        for name in sorted(DRIFT_LIBRARY):
            print(DRIFT_LIBRARY[name][1])
        return 0
    try:
        config = load_config(args.config)
    except LevySyncError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.command == "validate":
        print(f"ok: {config.experiment} experiment, output -> {config.output_dir}")
        return 0
    if args.seed is not None:
        config.mc = MCConfig(**{**_mc_asdict(config.mc), "master_seed": args.seed})
    if args.output is not None:
        config.output_dir = Path(args.output)
    if args.no_plots:
        config.emit_plots = False
    return run(config)


def _mc_asdict(mc: MCConfig) -> dict:
    return {
        "p": mc.p,
        "n_paths": mc.n_paths,
        "T": mc.T,
        "master_seed": mc.master_seed,
        "epsilon_list": mc.epsilon_list,
        "nu_list": mc.nu_list,
        "delta_rule": mc.delta_rule,
        "delta_value": mc.delta_value,
        "h_coeff": mc.h_coeff,
        "mesh_points": mc.mesh_points,
        "n_workers": mc.n_workers,
        "include_auxiliary": mc.include_auxiliary,
    }


if __name__ == "__main__":
    sys.exit(main())
