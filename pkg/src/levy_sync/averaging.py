"""Empirical invariant measure of the frozen fast process, Monte Carlo
averaged drifts, and mixing-rate estimation.

The invariant measure is represented purely as a sample cloud; every
downstream use is an integral against a Lipschitz function, so no density
estimation is attempted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DivergenceError, FitError, MomentOrderError
from .stable_noise import SeedKey, make_stream, _cms_standard
from .stats import Estimate, lp_norm_estimate, median_of_means
from .synchro import CoupledSpec, fast_intensity, frozen_fast_drift

MAX_BAD_STEP_FRACTION = 1e-3


@dataclass
class EmpiricalMeasure:
    """Weighted-sample approximation of the frozen-fast invariant law.

    Samples are drawn along stationary trajectories after a burn-in of ten
    relaxation times (5 eps) and thinned by one relaxation time (eps/2),
    which pushes initialization bias far below the Monte Carlo bands.
    """

    samples: np.ndarray  # (n_samples, dim)
    thinning: int  # stride in steps
    burn_in: float  # time discarded
    frozen_x: np.ndarray
    epsilon: float
    alpha: float

    def __post_init__(self):
        if self.samples.shape[0] < 1000:
            raise ValueError("need at least 1e3 samples for a usable cloud")
        if self.burn_in < 10.0 * (self.epsilon / 2.0) - 1e-12:
            raise ValueError("burn-in shorter than ten relaxation times")

    def to_csv(self, fileobj) -> None:
        """Debug export, one sample per row."""
        for row in self.samples:
            fileobj.write(",".join(repr(float(v)) for v in np.atleast_1d(row)) + "\n")


@dataclass(frozen=True)
class MixingEstimate:
    """Fitted exponential contraction of the frozen-fast coupling."""

    rate: float
    prefactor: float
    fit_residual: float


def _simulate_frozen_fast(
    spec: CoupledSpec,
    x,
    epsilon: float,
    h: float,
    n_steps: int,
    n_replicas: int,
    seed_key: SeedKey,
    y0=None,
    record_stride: Optional[int] = None,
    record_from: int = 0,
):
    """Euler-Maruyama for the frozen fast equation, vectorized over replicas.

    Returns (recorded states, bad step count). Replica r draws from the
    stream (seed_key.master_seed, r, seed_key.purpose), so the result does
    not depend on how replicas are grouped.
    """
    dim = spec.law.dim
    x = np.broadcast_to(np.asarray(x, dtype=float), (dim,))
    y = np.zeros((n_replicas, dim)) if y0 is None else np.tile(
        np.asarray(y0, dtype=float).reshape(1, dim), (n_replicas, 1)
    )
    sig = fast_intensity(spec, epsilon)
    dt_scale = h ** (1.0 / spec.alpha) * spec.law.unit_scale()
    rngs = [
        make_stream(seed_key.master_seed, seed_key.path_index + r, seed_key.purpose)
        for r in range(n_replicas)
    ]
    recorded = []
    bad_steps = 0
    alive = np.ones(n_replicas, dtype=bool)
    chunk = 2048
    k = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while k < n_steps:
            m = min(chunk, n_steps - k)
            inc = np.empty((n_replicas, m, dim))
            for r, rng in enumerate(rngs):
                inc[r] = _cms_standard(spec.alpha, rng, m * dim).reshape(m, dim)
            inc *= sig * dt_scale
            for j in range(m):
                y = y + frozen_fast_drift(x, spec, y, epsilon) * h + inc[:, j, :]
                finite = np.isfinite(y).all(axis=1)
                newly_bad = alive & ~finite
                if newly_bad.any():
                    alive &= finite
                    y[~alive] = 0.0  # frozen out; excluded below
                bad_steps += int(np.count_nonzero(~alive))
                step_index = k + j + 1
                if (
                    record_stride is not None
                    and step_index >= record_from
                    and (step_index - record_from) % record_stride == 0
                ):
                    recorded.append(y.copy())
            k += m
    total = n_steps * n_replicas
    if bad_steps > MAX_BAD_STEP_FRACTION * total:
        raise DivergenceError(
            f"{bad_steps}/{total} frozen-fast steps went non-finite"
        )
    return recorded, alive, bad_steps


def estimate_invariant_measure(
    spec: CoupledSpec,
    x,
    epsilon: float,
    n_samples: int,
    seed_key: SeedKey,
    n_replicas: int = 64,
    h: Optional[float] = None,
    burn_in: Optional[float] = None,
) -> EmpiricalMeasure:
    """Sample cloud approximating the frozen-fast invariant measure at x.

    Simulates the frozen fast equation with h <= eps/100, discards at least
    ten relaxation times of burn-in, and thins by one relaxation time.
    Replica chains are independent seed streams aggregated in order.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if h is None:
        h = epsilon / 100.0
    if h > epsilon / 100.0 + 1e-15:
        raise ValueError("invariant-measure estimation requires h <= epsilon/100")
    relax = epsilon / 2.0
    if burn_in is None:
        burn_in = 10.0 * relax
    elif burn_in < 10.0 * relax - 1e-12:
        raise ValueError("burn-in must cover at least ten relaxation times")
    burn_steps = int(round(burn_in / h))
    stride = max(1, int(round(relax / h)))
    per_replica = -(-n_samples // n_replicas)  # ceil
    n_steps = burn_steps + per_replica * stride
    recorded, alive, _ = _simulate_frozen_fast(
        spec,
        x,
        epsilon,
        h,
        n_steps,
        n_replicas,
        seed_key,
        record_stride=stride,
        record_from=burn_steps + stride,
    )
    # recorded: list of (n_replicas, dim); keep replicas that stayed finite.
    cloud = np.concatenate([snap[alive] for snap in recorded], axis=0)
    return EmpiricalMeasure(
        samples=cloud[: max(n_samples, 1000)],
        thinning=stride,
        burn_in=burn_in,
        frozen_x=np.atleast_1d(np.asarray(x, dtype=float)),
        epsilon=epsilon,
        alpha=spec.alpha,
    )


@dataclass(frozen=True)
class VectorEstimate:
    """Componentwise estimate with bands, for vector-valued integrals."""

    value: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    n_effective: int


def _componentwise_mom(values: np.ndarray) -> VectorEstimate:
    cols = [median_of_means(values[:, j]) for j in range(values.shape[1])]
    return VectorEstimate(
        value=np.array([c.value for c in cols]),
        lo=np.array([c.lo for c in cols]),
        hi=np.array([c.hi for c in cols]),
        n_effective=values.shape[0],
    )


def averaged_drift_mc(
    spec: CoupledSpec, x, epsilon: float, measure: EmpiricalMeasure
) -> tuple[VectorEstimate, VectorEstimate]:
    """Monte Carlo averaged coefficients (F_bar(x, eps), G_bar(x, eps)).

    Sample averages of f(x + eps^(1/a) y) and g(x - eps^(1/a) y) over the
    cloud, aggregated by median-of-means with a band attached.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.allclose(measure.frozen_x, x, rtol=0.0, atol=1e-12):
        raise ValueError("measure was estimated at a different frozen state")
    scale = epsilon ** (1.0 / spec.alpha)
    y = measure.samples
    f_vals = spec.f(x[None, :] + scale * y)
    g_vals = spec.g(x[None, :] - scale * y)
    return _componentwise_mom(f_vals), _componentwise_mom(g_vals)


def stationary_lp_moment(measure: EmpiricalMeasure, p: float) -> Estimate:
    """Median-of-means estimate of (int |y|^p mu(dy))^(1/p)."""
    if not 1.0 < p < measure.alpha:
        raise MomentOrderError(
            f"need 1 < p < alpha = {measure.alpha}, got p = {p}"
        )
    norms = np.linalg.norm(measure.samples, axis=1)
    return lp_norm_estimate(norms**p, p)


def mixing_rate(
    spec: CoupledSpec,
    x,
    epsilon: float,
    y1,
    y2,
    p: float,
    n_paths: int,
    t_grid: Sequence[float],
    master_seed: int = 0,
    h: Optional[float] = None,
    n_workers: Optional[int] = None,
) -> MixingEstimate:
    """Fitted L^p contraction rate of two frozen-fast starts under shared noise.

    Runs coupled paths from y1 and y2 driven by the same increments,
    computes the contraction curve (E|Y(y1) - Y(y2)|^p)^(1/p) on t_grid and
    fits a log-linear decay. For Lipschitz drifts the rate sits within the
    Gronwall envelope 2/eps -+ (L_f + L_g)/2. Coinciding starts return the
    +inf sentinel.
    """
    from ._engine import EnsembleSystem, simulate_paths
    from .sde import PathGrid

    if not 1.0 < p < spec.alpha:
        raise MomentOrderError(f"need 1 < p < alpha = {spec.alpha}, got p = {p}")
    dim = spec.law.dim
    y1 = np.broadcast_to(np.asarray(y1, dtype=float), (dim,)).astype(float)
    y2 = np.broadcast_to(np.asarray(y2, dtype=float), (dim,)).astype(float)
    gap0 = float(np.linalg.norm(y1 - y2))
    if gap0 == 0.0:
        return MixingEstimate(rate=math.inf, prefactor=0.0, fit_residual=0.0)
    if h is None:
        h = epsilon / 200.0
    t_grid = np.asarray(sorted(t_grid), dtype=float)
    if t_grid[0] <= 0.0:
        raise ValueError("t_grid times must be positive")
    n_steps = int(round(t_grid[-1] / h))
    grid = PathGrid(0.0, n_steps * h, n_steps)
    grid_idx = np.round(t_grid / h).astype(int)
    x_frozen = np.broadcast_to(np.asarray(x, dtype=float), (dim,))

    def field(y, t, _x=x_frozen, _spec=spec, _eps=epsilon):
        return frozen_fast_drift(_x, _spec, y, _eps)

    system = EnsembleSystem(field, fast_intensity(spec, epsilon), np.stack([y1, y2]))
    mesh, diverged = simulate_paths(
        system, spec.law, grid, grid_idx, n_paths, master_seed,
        purpose="mixing", n_workers=n_workers,
    )
    ok = ~diverged
    gaps = np.linalg.norm(mesh[ok][:, :, 0, :] - mesh[ok][:, :, 1, :], axis=-1)
    ests = [lp_norm_estimate(gaps[:, m] ** p, p) for m in range(len(grid_idx))]
    curve = np.array([e.value for e in ests])
    positive = curve > 0.0
    if np.count_nonzero(positive) < 2:
        raise FitError("contraction curve collapsed to zero; shrink t_grid")
    logs = np.log(curve[positive])
    ts = t_grid[positive]
    # the curve must decay; an increase beyond the Monte Carlo bands (plus a
    # 1% discretization allowance) means there is no contraction to fit
    rel_band = np.array(
        [(e.hi - e.lo) / (2.0 * e.value) if e.value > 0 else 0.0 for e in ests]
    )[positive]
    allowed = np.log(1.0 + 2.0 * (rel_band[:-1] + rel_band[1:]) + 0.01)
    if np.any(np.diff(logs) > allowed):
        raise FitError("contraction curve is non-monotone beyond noise level")
    slope, intercept = np.polyfit(ts, logs, 1)
    resid = float(np.max(np.abs(logs - (slope * ts + intercept))))
    return MixingEstimate(rate=float(-slope), prefactor=float(np.exp(intercept)) / gap0, fit_residual=resid)
