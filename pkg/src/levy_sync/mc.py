"""Monte Carlo experiment harness.

Every experiment is a pure function of (spec, MCConfig): paths draw from
counter-based streams keyed by (master_seed, path index, experiment:sweep
tag), so reruns are bit-identical and worker count never matters.

Error estimators only ever compare path families that were generated from
the same seed manifest; shared noise is enforced by construction inside the
engine and checked explicitly in `lp_error_at_time`.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import ks_2samp

from . import __version__
from ._engine import (
    CoupledSystem,
    EnsembleSystem,
    SlowFastSystem,
    mesh_indices,
    simulate_paths,
)
from .averaging import estimate_invariant_measure, stationary_lp_moment
from .errors import DivergenceError, MomentOrderError, NotRelaxed, SeedMismatchError
from .sde import PathGrid, SamplePath, default_step
from .stable_noise import SeedKey, StableLaw, make_stream, _cms_standard
from .stats import Estimate, lp_norm_estimate, median_of_means, non_increasing_within_bands
from .synchro import CoupledSpec, slow_intensity

MAX_EXCLUDED_FRACTION = 1e-3


# ---------------------------------------------------------------------------
# Configuration and report types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MCConfig:
    """Knobs of one experiment run.

    p must satisfy 1 < p < alpha strictly; that is checked against the spec
    at experiment entry. The default step rule is h = h_coeff * min(1, eps).
    """

    p: float = 1.2
    n_paths: int = 10_000
    T: float = 5.0
    master_seed: int = 0
    epsilon_list: tuple = (0.1, 0.05, 0.02, 0.01)
    nu_list: tuple = (1.0, 4.0, 16.0, 64.0)
    delta_rule: str = "paper"  # "paper": eps*(-ln eps)^(1/2); "fixed": delta_value
    delta_value: Optional[float] = None
    h_coeff: float = 1e-3
    mesh_points: int = 25
    n_workers: Optional[int] = None
    include_auxiliary: bool = False

    def __post_init__(self):
        if self.p <= 1.0:
            raise ValueError(f"p must exceed 1, got {self.p}")
        if self.n_paths < 1000:
            raise ValueError(f"n_paths must be at least 1e3, got {self.n_paths}")
        if self.T <= 0.0:
            raise ValueError("T must be positive")
        if any(b >= a for a, b in zip(self.epsilon_list, self.epsilon_list[1:])):
            raise ValueError("epsilon_list must be strictly decreasing")
        if any(e <= 0.0 or e >= 1.0 for e in self.epsilon_list):
            raise ValueError("epsilon values must lie in (0, 1)")
        if any(b <= a for a, b in zip(self.nu_list, self.nu_list[1:])):
            raise ValueError("nu_list must be strictly increasing")
        if any(v <= 0.0 for v in self.nu_list):
            raise ValueError("nu values must be positive")
        if self.delta_rule not in ("paper", "fixed"):
            raise ValueError(f"unknown delta_rule {self.delta_rule!r}")
        if self.delta_rule == "fixed" and (self.delta_value is None or self.delta_value <= 0.0):
            raise ValueError("delta_rule = fixed requires a positive delta_value")

    def delta_for(self, epsilon: float) -> float:
        if self.delta_rule == "fixed":
            return float(self.delta_value)
        return delta_schedule(epsilon)


@dataclass(frozen=True)
class ReportRow:
    sweep_value: float
    estimator: str
    value: float
    lo: float
    hi: float
    n_effective: int
    excluded: int


CSV_HEADER = "sweep_value,estimator,value,lo,hi,n_effective,excluded"


@dataclass
class ExperimentReport:
    """Convergence-curve rows plus the manifest that reproduces them."""

    experiment: str
    rows: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def add(self, sweep_value: float, estimator: str, est: Estimate) -> None:
        self.rows.append(
            ReportRow(
                sweep_value=float(sweep_value),
                estimator=estimator,
                value=float(est.value),
                lo=float(est.lo),
                hi=float(est.hi),
                n_effective=int(est.n_effective),
                excluded=int(est.excluded),
            )
        )

    def rows_for(self, estimator: str) -> list:
        return [r for r in self.rows if r.estimator == estimator]

    def estimates_for(self, estimator: str) -> list:
        return [
            Estimate(r.value, r.lo, r.hi, r.n_effective, r.excluded)
            for r in self.rows_for(estimator)
        ]

    def to_csv(self) -> str:
        lines = [CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.sweep_value!r},{r.estimator},{r.value!r},{r.lo!r},{r.hi!r},"
                f"{r.n_effective},{r.excluded}"
            )
        return "\n".join(lines) + "\n"

    def manifest_jsonl(self) -> str:
        payload = dict(self.manifest)
        payload["experiment"] = self.experiment
        payload["failures"] = list(self.failures)
        return json.dumps(payload, sort_keys=True) + "\n"

    def check_excluded(self, sweep_value: float, n_paths: int, excluded: int) -> None:
        if excluded > MAX_EXCLUDED_FRACTION * n_paths:
            self.failures.append(
                f"excluded:{sweep_value!r}:{excluded}/{n_paths} paths diverged"
            )

    def check_non_increasing(self, estimator: str) -> None:
        bad = non_increasing_within_bands(self.estimates_for(estimator))
        for k in bad:
            self.failures.append(f"monotonicity:{estimator}:rows {k}->{k + 1}")


class Role(enum.Enum):
    SLOW_STATIONARY = "slow"  # time marginal of the slow component
    AVERAGED_STATIONARY = "averaged"
    FAST_STATIONARY = "fast"  # frozen-fast marginal


@dataclass
class StationaryEstimate:
    """Time-t marginal collected after at least ten relaxation times."""

    time_marginal_samples: np.ndarray
    role: Role
    sampled_at: tuple
    ks_pvalue: float


# ---------------------------------------------------------------------------
# Small operations
# ---------------------------------------------------------------------------


def delta_schedule(epsilon: float) -> float:
    """Knot spacing delta = eps * (-ln eps)^(1/2) for the auxiliary process."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if epsilon > math.exp(-1.0):
        warnings.warn(
            f"delta schedule degenerates for epsilon = {epsilon} > 1/e "
            "(delta < epsilon)",
            stacklevel=2,
        )
    return epsilon * math.sqrt(-math.log(epsilon))


def _check_p(p: float, alpha: float) -> None:
    if not 1.0 < p < alpha:
        raise MomentOrderError(f"need 1 < p < alpha = {alpha}, got p = {p}")


def lp_error_at_time(paths_a, paths_b, p: float, t: float) -> Estimate:
    """Median-of-means estimate of (E|A_t - B_t|^p)^(1/p) over matched paths.

    Path families must be seed-matched pair by pair (shared noise);
    anything else raises SeedMismatchError. Diverged pairs are excluded and
    counted in the returned estimate.
    """
    if isinstance(paths_a, SamplePath):
        paths_a = [paths_a]
    if isinstance(paths_b, SamplePath):
        paths_b = [paths_b]
    if len(paths_a) != len(paths_b) or not paths_a:
        raise SeedMismatchError("path families differ in size or are empty")
    law = paths_a[0].law or paths_b[0].law
    if law is not None:
        _check_p(p, law.alpha)
    grid = paths_a[0].grid
    k = int(round((t - grid.t0) / grid.h))
    if not 0 <= k <= grid.n_steps:
        raise ValueError(f"time {t} outside the grid")
    vals = []
    excluded = 0
    for a, b in zip(paths_a, paths_b):
        if a.seed_key != b.seed_key:
            raise SeedMismatchError(
                f"unmatched seed keys {a.seed_key} vs {b.seed_key}"
            )
        if a.grid != b.grid:
            raise ValueError("paths live on different grids")
        if (a.diverged_at is not None and a.diverged_at <= k) or (
            b.diverged_at is not None and b.diverged_at <= k
        ):
            excluded += 1
            continue
        diff = np.atleast_1d(a.values[k] - b.values[k])
        vals.append(np.linalg.norm(diff.ravel()) ** p)
    if not vals:
        raise DivergenceError("all pairs diverged before the requested time")
    return lp_norm_estimate(np.asarray(vals), p, excluded=excluded)


# ---------------------------------------------------------------------------
# Shared pieces of the experiments
# ---------------------------------------------------------------------------


def _base_manifest(experiment: str, spec: CoupledSpec, mc: MCConfig, **extra) -> dict:
    payload = {
        "schema": 1,
        "package": "levy-sync",
        "version": __version__,
        "spec": spec.describe(),
        "mc": {
            "p": mc.p,
            "n_paths": mc.n_paths,
            "T": mc.T,
            "master_seed": mc.master_seed,
            "epsilon_list": list(mc.epsilon_list),
            "nu_list": list(mc.nu_list),
            "delta_rule": mc.delta_rule,
            "delta_value": mc.delta_value,
            "h_coeff": mc.h_coeff,
            "mesh_points": mc.mesh_points,
            "include_auxiliary": mc.include_auxiliary,
        },
    }
    payload.update(extra)
    return payload


def _grid_for(epsilon: float, mc: MCConfig) -> PathGrid:
    h = default_step(epsilon, mc.h_coeff)
    return PathGrid(t0=0.0, t_end=mc.T, n_steps=int(round(mc.T / h)))


def _pairwise_lp_sup(mesh, ok, ch_a: int, ch_b: int, p: float, excluded: int) -> Estimate:
    """Sup over mesh times of the L^p norm of the channel difference."""
    diffs = np.linalg.norm(mesh[ok, :, ch_a, :] - mesh[ok, :, ch_b, :], axis=-1) ** p
    best: Optional[Estimate] = None
    for m in range(diffs.shape[1]):
        est = lp_norm_estimate(diffs[:, m], p, excluded=excluded)
        if best is None or est.value > best.value:
            best = est
    return best


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def averaging_convergence(
    spec: CoupledSpec, mc: MCConfig, x0=1.0, y0=1.0
) -> ExperimentReport:
    """L^p gap between the slow component and the averaged equation,
    swept over epsilon with shared slow noise.

    Rows are non-increasing in epsilon within bands when the averaging
    principle holds; violations are recorded as failures, not raised.
    With include_auxiliary, the knotted auxiliary system runs on the same
    noise and its gaps to the true slow/fast components are reported too.
    """
    _check_p(mc.p, spec.alpha)
    report = ExperimentReport("averaging")
    h_used, delta_used = {}, {}
    for eps in mc.epsilon_list:
        grid = _grid_for(eps, mc)
        h_used[repr(eps)] = grid.h
        knot_stride = None
        if mc.include_auxiliary:
            delta = mc.delta_for(eps)
            stride = delta / grid.h
            if mc.delta_rule == "fixed" and abs(stride - round(stride)) > 1e-9 * max(1.0, stride):
                raise ValueError(
                    f"grid step {grid.h} does not divide fixed delta {delta}"
                )
            knot_stride = max(1, int(round(stride)))
            delta_used[repr(eps)] = knot_stride * grid.h
        system = SlowFastSystem(
            spec, eps, x0, y0, with_averaged=True, knot_stride=knot_stride
        )
        mesh_idx = mesh_indices(grid.n_steps, mc.mesh_points)
        mesh, diverged = simulate_paths(
            system, spec.law, grid, mesh_idx, mc.n_paths, mc.master_seed,
            purpose=f"averaging:{eps!r}", n_workers=mc.n_workers,
        )
        ok = ~diverged
        excl = int(np.count_nonzero(diverged))
        report.check_excluded(eps, mc.n_paths, excl)
        report.add(eps, "slow_vs_averaged_lp", _pairwise_lp_sup(mesh, ok, 0, 2, mc.p, excl))
        if knot_stride is not None:
            report.add(eps, "aux_slow_gap_lp", _pairwise_lp_sup(mesh, ok, 0, 3, mc.p, excl))
            # Integral over [0, T] of the fast gap norm, trapezoid on the mesh.
            times = grid.t0 + grid.h * np.asarray(mesh_idx, dtype=float)
            gaps = np.linalg.norm(mesh[ok, :, 1, :] - mesh[ok, :, 4, :], axis=-1) ** mc.p
            curve = np.array(
                [lp_norm_estimate(gaps[:, m], mc.p).value for m in range(len(mesh_idx))]
            )
            integral = float(np.trapezoid(curve, times))
            report.add(eps, "aux_fast_gap_integral", Estimate(integral, integral, integral, int(ok.sum()), excl))
    report.check_non_increasing("slow_vs_averaged_lp")
    report.manifest = _base_manifest(
        "averaging", spec, mc, x0=x0, y0=y0, h=h_used, delta=delta_used,
        sweep="epsilon_list",
    )
    return report


def synchronization_persistence(
    spec: CoupledSpec, mc: MCConfig, x0=1.0, y0=1.0
) -> ExperimentReport:
    """Late-time gap E|X - Xhat|^p + E|Y - Xhat|^p of the coupled pair to
    the averaged equation, swept over the coupling strength nu.

    The averaged system starts at (x0 + y0)/2 and rides the same noise.
    The estimator is averaged over the mesh times in the last fifth of
    [0, T], after the transient has relaxed.
    """
    _check_p(mc.p, spec.alpha)
    report = ExperimentReport("persistence")
    h_used = {}
    for nu in mc.nu_list:
        eps = 1.0 / nu
        grid = _grid_for(min(1.0, eps), mc)
        h_used[repr(nu)] = grid.h
        system = CoupledSystem(spec.with_nu(nu), x0, y0, with_averaged=True)
        mesh_idx = mesh_indices(grid.n_steps, mc.mesh_points)
        mesh, diverged = simulate_paths(
            system, spec.law, grid, mesh_idx, mc.n_paths, mc.master_seed,
            purpose=f"persistence:{nu!r}", n_workers=mc.n_workers,
        )
        ok = ~diverged
        excl = int(np.count_nonzero(diverged))
        report.check_excluded(nu, mc.n_paths, excl)
        times = grid.t0 + grid.h * np.asarray(mesh_idx, dtype=float)
        late = times >= grid.t0 + 0.8 * (grid.t_end - grid.t0)
        gx = np.linalg.norm(mesh[ok][:, late, 0, :] - mesh[ok][:, late, 2, :], axis=-1) ** mc.p
        gy = np.linalg.norm(mesh[ok][:, late, 1, :] - mesh[ok][:, late, 2, :], axis=-1) ** mc.p
        per_path = (gx + gy).mean(axis=1)
        est = median_of_means(per_path)
        report.add(nu, "stationary_gap_lp", Estimate(est.value, est.lo, est.hi, int(ok.sum()), excl))
    report.check_non_increasing("stationary_gap_lp")
    report.manifest = _base_manifest(
        "persistence", spec, mc, x0=x0, y0=y0, h=h_used, sweep="nu_list",
    )
    return report


def moment_uniformity(spec: CoupledSpec, mc: MCConfig, x0=1.0, y0=1.0) -> ExperimentReport:
    """Sup-over-time L^p norms of the slow and fast components, plus the
    frozen-fast stationary norm, across the epsilon sweep.

    Uniform boundedness shows up as a common band: the max over the sweep
    staying within 2x of the min is recorded (violation -> failure entry).
    """
    _check_p(mc.p, spec.alpha)
    report = ExperimentReport("moments")
    h_used = {}
    for eps in mc.epsilon_list:
        grid = _grid_for(eps, mc)
        h_used[repr(eps)] = grid.h
        system = SlowFastSystem(spec, eps, x0, y0, with_averaged=False)
        mesh_idx = mesh_indices(grid.n_steps, mc.mesh_points)
        mesh, diverged = simulate_paths(
            system, spec.law, grid, mesh_idx, mc.n_paths, mc.master_seed,
            purpose=f"moments:{eps!r}", n_workers=mc.n_workers,
        )
        ok = ~diverged
        excl = int(np.count_nonzero(diverged))
        report.check_excluded(eps, mc.n_paths, excl)
        for ch, name in ((0, "slow_sup_lp"), (1, "fast_sup_lp")):
            vals = np.linalg.norm(mesh[ok][:, :, ch, :], axis=-1) ** mc.p
            best = None
            for m in range(vals.shape[1]):
                est = lp_norm_estimate(vals[:, m], mc.p, excluded=excl)
                if best is None or est.value > best.value:
                    best = est
            report.add(eps, name, best)
        measure = estimate_invariant_measure(
            spec, np.broadcast_to(np.asarray(x0, dtype=float), (spec.law.dim,)),
            eps, n_samples=4096,
            seed_key=SeedKey(mc.master_seed, 0, f"moments-chi:{eps!r}"),
        )
        report.add(eps, "fast_stationary_lp", stationary_lp_moment(measure, mc.p))
    for name in ("slow_sup_lp", "fast_sup_lp", "fast_stationary_lp"):
        vals = [r.value for r in report.rows_for(name)]
        if vals and max(vals) > 2.0 * min(vals):
            report.failures.append(
                f"uniformity:{name}:max/min = {max(vals) / min(vals):.3g} exceeds 2"
            )
    report.manifest = _base_manifest(
        "moments", spec, mc, x0=x0, y0=y0, h=h_used, sweep="epsilon_list",
    )
    return report


def attractor_diameter(
    spec: CoupledSpec,
    ic_set,
    mc: MCConfig,
    integrator: str = "euler",
) -> ExperimentReport:
    """Diameter decay of an initial-condition ensemble under shared noise.

    All initial conditions ride the same noise path, so pairwise
    differences are noise-free and the diameter curve is a singleton
    diagnostic for the averaged system: diameter -> 0 means the random
    attractor collapses to one point.

    integrator "ou-exact" demands a linear f = g spec and steps the exact
    stochastic convolution, so the diameter contracts by exp(-a h) per
    step to rounding accuracy.
    """
    _check_p(mc.p, spec.alpha)
    ics = np.asarray(ic_set, dtype=float)
    if ics.ndim == 1:
        ics = ics[:, None]
    if ics.shape[0] < 8:
        raise ValueError("need at least 8 initial conditions")
    if ics.shape[1] != spec.law.dim:
        raise ValueError("initial conditions have the wrong dimension")
    h = min(default_step(1.0, mc.h_coeff), mc.T / 100.0)
    grid = PathGrid(0.0, mc.T, int(round(mc.T / h)))
    mesh_idx = mesh_indices(grid.n_steps, mc.mesh_points)
    mesh_idx = np.concatenate([[0], mesh_idx])  # include t = 0 for the ratio
    sigma = slow_intensity(spec)
    if integrator == "ou-exact":
        if not (
            spec.f.name == "linear"
            and spec.g.name == "linear"
            and spec.f.params == spec.g.params
        ):
            raise ValueError("ou-exact integrator requires a linear f = g spec")
        a = spec.f.params[0]
        if a <= 0.0:
            raise ValueError("ou-exact integrator requires a contractive drift")
        mesh, diverged = _ou_exact_ensemble(
            spec.law, a, sigma, ics, grid, mesh_idx, mc
        )
    elif integrator == "euler":
        def avg_field(x, t, _spec=spec):
            return 0.5 * (_spec.f(x) + _spec.g(x))

        system = EnsembleSystem(avg_field, sigma, ics)
        mesh, diverged = simulate_paths(
            system, spec.law, grid, mesh_idx, mc.n_paths, mc.master_seed,
            purpose="attractor", n_workers=mc.n_workers,
        )
    else:
        raise ValueError(f"unknown integrator {integrator!r}")
    report = ExperimentReport("attractor")
    ok = ~diverged
    excl = int(np.count_nonzero(diverged))
    report.check_excluded(0.0, mc.n_paths, excl)
    # diameter per realization per mesh time: max pairwise distance
    pts = mesh[ok]
    pair = pts[:, :, :, None, :] - pts[:, :, None, :, :]
    diam = np.linalg.norm(pair, axis=-1).max(axis=(2, 3))
    times = grid.t0 + grid.h * np.asarray(mesh_idx, dtype=float)
    for m, t in enumerate(times):
        report.add(t, "mean_diameter_lp", lp_norm_estimate(diam[:, m] ** mc.p, mc.p, excluded=excl))
    report.manifest = _base_manifest(
        "attractor", spec, mc, h=grid.h, integrator=integrator,
        ic_set=[list(map(float, row)) for row in ics], sweep="time",
    )
    return report


def _ou_exact_ensemble(law: StableLaw, lam: float, sigma: float, ics, grid, mesh_idx, mc):
    """Exact stochastic-convolution stepping for an IC ensemble, one shared
    stable draw per path per step."""
    n_ics, dim = ics.shape
    b = mc.n_paths
    states = np.tile(ics[None, :, :], (b, 1, 1))
    decay = math.exp(-lam * grid.h)
    step_scale = ((1.0 - math.exp(-law.alpha * lam * grid.h)) / (law.alpha * lam)) ** (
        1.0 / law.alpha
    )
    c = sigma * law.unit_scale() * step_scale
    rngs = [make_stream(mc.master_seed, i, "attractor-ou") for i in range(b)]
    mesh_map = {int(k): j for j, k in enumerate(mesh_idx)}
    mesh = np.empty((b, len(mesh_idx), n_ics, dim))
    if 0 in mesh_map:
        mesh[:, mesh_map[0]] = states
    chunk = CHUNK = 2048
    k = 0
    xi = np.empty((b, chunk, dim))
    while k < grid.n_steps:
        m = min(chunk, grid.n_steps - k)
        for i, rng in enumerate(rngs):
            xi[i, :m] = _cms_standard(law.alpha, rng, m * dim).reshape(m, dim)
        for j in range(m):
            states = decay * states + (c * xi[:, j])[:, None, :]
            pos = mesh_map.get(k + j + 1)
            if pos is not None:
                mesh[:, pos] = states
        k += m
    return mesh, np.zeros(b, dtype=bool)


def stationary_marginal(
    spec: CoupledSpec,
    mc: MCConfig,
    role: Role,
    x0=1.0,
    epsilon: Optional[float] = None,
) -> StationaryEstimate:
    """Time-t marginal collected after >= 10 relaxation times, together
    with a two-time KS check that the cloud is actually stationary.

    Clouds at 10 and 20 relaxation times must be indistinguishable at the
    1% level, otherwise NotRelaxed is raised.
    """
    _check_p(mc.p, spec.alpha)
    dim = spec.law.dim
    x0v = np.broadcast_to(np.asarray(x0, dtype=float), (dim,))
    if role is Role.FAST_STATIONARY:
        if epsilon is None:
            epsilon = spec.epsilon
        relax = epsilon / 2.0
        h = epsilon / 100.0
        system = SlowFastSystem(spec, epsilon, x0v, np.zeros(dim), with_averaged=False)
        channel = 1
        tag = f"stationary-fast:{epsilon!r}"
    else:
        rates = [spec.f.relaxation_rate, spec.g.relaxation_rate]
        rates = [r for r in rates if r is not None]
        if not rates:
            raise ValueError(
                "no relaxation-time estimate available from the drift's "
                "dissipativity; declare relaxation_rate on the drift fields"
            )
        relax = 1.0 / min(rates)
        h = min(1e-3 * max(1.0, relax), relax / 100.0)
        if role is Role.AVERAGED_STATIONARY:
            def avg_field(x, t, _spec=spec):
                return 0.5 * (_spec.f(x) + _spec.g(x))

            system = EnsembleSystem(avg_field, slow_intensity(spec), x0v[None, :])
            channel = 0
            tag = "stationary-averaged"
        else:
            if epsilon is None:
                epsilon = spec.epsilon
            system = SlowFastSystem(spec, epsilon, x0v, np.zeros(dim), with_averaged=False)
            channel = 0
            tag = f"stationary-slow:{epsilon!r}"
    t1 = 10.0 * relax
    t2 = 20.0 * relax
    n_steps = int(round(t2 / h))
    grid = PathGrid(0.0, t2, n_steps)
    k1, k2 = int(round(t1 / h)), n_steps
    mesh, diverged = simulate_paths(
        system, spec.law, grid, [k1, k2], mc.n_paths, mc.master_seed,
        purpose=tag, n_workers=mc.n_workers,
    )
    ok = ~diverged
    cloud1 = mesh[ok][:, 0, channel, :]
    cloud2 = mesh[ok][:, 1, channel, :]
    a = cloud1[:, 0] if dim == 1 else np.linalg.norm(cloud1, axis=-1)
    b = cloud2[:, 0] if dim == 1 else np.linalg.norm(cloud2, axis=-1)
    ks = ks_2samp(a, b)
    if ks.pvalue < 0.01:
        raise NotRelaxed(
            f"marginals at t = {t1:.4g} and t = {t2:.4g} differ "
            f"(KS p = {ks.pvalue:.4g} < 0.01)"
        )
    return StationaryEstimate(
        time_marginal_samples=cloud2,
        role=role,
        sampled_at=(t1, t2),
        ks_pvalue=float(ks.pvalue),
    )
