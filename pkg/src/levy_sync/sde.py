"""Time grids, Levy noise paths, and Euler-Maruyama integration.

The integrator is fixed-step explicit Euler-Maruyama. Adaptive stepping is
deliberately absent: shared noise paths across systems (and across coupling
strengths) require a common grid.

A path that reaches a non-finite value is flagged as diverged rather than
raising: heavy tails make large excursions legitimate, only NaN/Inf aborts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import MomentOrderError
from .stable_noise import SeedKey, StableLaw, increment


@dataclass(frozen=True)
class PathGrid:
    """Uniform time grid on [t0, t_end] with n_steps steps."""

    t0: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if self.t_end <= self.t0:
            raise ValueError("t_end must exceed t0")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")

    @property
    def h(self) -> float:
        return (self.t_end - self.t0) / self.n_steps

    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n_steps + 1)


def default_step(epsilon: float, coeff: float = 1e-3) -> float:
    """Default slow-fast step size h = coeff * min(1, epsilon).

    The fast equation has time constant epsilon/2; resolving it needs
    h much smaller than epsilon.
    """
    return coeff * min(1.0, epsilon)


@dataclass(frozen=True)
class NoisePath:
    """Precomputed alpha-stable increments on a fixed grid.

    Regenerating with the same seed_key reproduces the identical array;
    this is what lets several systems consume the same driving noise.
    """

    grid: PathGrid
    increments: np.ndarray  # (n_steps, dim)
    law: StableLaw
    seed_key: SeedKey

    def __post_init__(self):
        if self.increments.shape != (self.grid.n_steps, self.law.dim):
            raise ValueError(
                f"increments shape {self.increments.shape} does not match "
                f"(n_steps, dim) = ({self.grid.n_steps}, {self.law.dim})"
            )


@dataclass
class SamplePath:
    """Discretized trajectory on a grid.

    values has shape (n_steps + 1, dim) for a single path, or
    (n_steps + 1, batch, dim) for a batch integrated against shared noise.
    diverged_at is the first step index at which a non-finite value
    appeared, or None.
    """

    grid: PathGrid
    values: np.ndarray
    diverged_at: Optional[int] = None
    seed_key: Optional[SeedKey] = None
    law: Optional[StableLaw] = None

    def __post_init__(self):
        if self.values.shape[0] != self.grid.n_steps + 1:
            raise ValueError("values must have n_steps + 1 entries")

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None

    def write_csv(self, fileobj) -> None:
        """Debug dump, columns t, x1..x_dim. Not a stability contract."""
        vals = self.values.reshape(self.values.shape[0], -1)
        header = "t," + ",".join(f"x{i+1}" for i in range(vals.shape[1]))
        fileobj.write(header + "\n")
        for t, row in zip(self.grid.times(), vals):
            fileobj.write(",".join(repr(float(v)) for v in (t, *row)) + "\n")


@dataclass(frozen=True)
class DriftField:
    """Pure evaluation handle (state, time) -> derivative.

    fn must be vectorized over leading axes of the state array and must not
    keep hidden state. lipschitz is an optional declared certificate;
    relaxation_rate an optional dissipativity rate used to size burn-in.
    """

    fn: Callable[[np.ndarray, float], np.ndarray]
    name: str = "custom"
    params: tuple = ()
    lipschitz: Optional[float] = None
    relaxation_rate: Optional[float] = None

    def __call__(self, x: np.ndarray, t: float = 0.0) -> np.ndarray:
        return self.fn(x, t)

    def describe(self) -> str:
        if self.params:
            return f"{self.name}({', '.join(repr(p) for p in self.params)})"
        return self.name


def generate_noise_path(law: StableLaw, grid: PathGrid, seed_key: SeedKey) -> NoisePath:
    """n_steps independent increments, each distributed over one step h."""
    rng = seed_key.stream()
    inc = increment(law, grid.h, rng, size=grid.n_steps)
    return NoisePath(grid=grid, increments=inc, law=law, seed_key=seed_key)


def euler_maruyama(
    drift: DriftField,
    sigma,
    x0,
    grid: PathGrid,
    noise: NoisePath,
) -> SamplePath:
    """Explicit Euler-Maruyama for dX = drift(X, t) dt + sigma dL.

    values[k+1] = values[k] + drift(values[k], t_k) h + sigma * dL_k.
    x0 may be (dim,) or (batch, dim); a batch shares the single noise path,
    which is exactly the shared-noise coupling used for synchronization
    diagnostics. With sigma = 0 this is the deterministic Euler method.
    """
    if noise.grid != grid:
        raise ValueError("noise was generated on a different grid")
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    sigma = np.asarray(sigma, dtype=float)
    h = grid.h
    times = grid.times()
    values = np.empty((grid.n_steps + 1,) + x0.shape)
    values[0] = x0
    x = x0.copy()
    diverged_at = None
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(grid.n_steps):
            x = x + drift(x, times[k]) * h + sigma * noise.increments[k]
            values[k + 1] = x
            if diverged_at is None and not np.isfinite(x).all():
                diverged_at = k + 1
    return SamplePath(
        grid=grid,
        values=values,
        diverged_at=diverged_at,
        seed_key=noise.seed_key,
        law=noise.law,
    )


def ou_exact_path(
    lam: float,
    sigma: float,
    law: StableLaw,
    x0,
    grid: PathGrid,
    seed_key: SeedKey,
) -> SamplePath:
    """Exact-in-distribution stepping for dY = -lam Y dt + sigma dL.

    values[k+1] = exp(-lam h) values[k] + sigma * xi_k, where xi_k is
    alpha-stable with scale ((1 - exp(-alpha lam h)) / (alpha lam))^(1/alpha)
    times the law's unit scale. This matches the stochastic-convolution
    form of the solution and serves as the integrator oracle.
    """
    if lam <= 0.0:
        raise ValueError(f"lam must be positive, got {lam}")
    rng = seed_key.stream()
    a = law.alpha
    h = grid.h
    decay = np.exp(-lam * h)
    step_scale = ((1.0 - np.exp(-a * lam * h)) / (a * lam)) ** (1.0 / a)
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    values = np.empty((grid.n_steps + 1,) + x0.shape)
    values[0] = x0
    x = x0.copy()
    c = sigma * law.unit_scale() * step_scale
    from .stable_noise import _cms_standard

    for k in range(grid.n_steps):
        xi = _cms_standard(a, rng, x.size).reshape(x.shape)
        x = decay * x + c * xi
        values[k + 1] = x
    return SamplePath(grid=grid, values=values, seed_key=seed_key, law=law)


def holder_increment_estimate(
    paths: Sequence[SamplePath] | SamplePath,
    p: float,
    h_list: Sequence[float],
    alpha: float,
):
    """Empirical sup-over-t L^p increment norms and fitted Holder slope.

    For each lag h in h_list (a multiple of the grid step) returns
    max_t (E|X_{t+h} - X_t|^p)^(1/p), estimated over the path ensemble,
    together with the log-log slope theta_hat fitted across the lags.
    """
    if not 1.0 < p < alpha:
        raise MomentOrderError(f"need 1 < p < alpha, got p={p}, alpha={alpha}")
    if isinstance(paths, SamplePath):
        paths = [paths]
    grid = paths[0].grid
    stacked = np.stack([pt.values.reshape(grid.n_steps + 1, -1) for pt in paths])
    step = grid.h
    # median-of-means over paths: a raw mean of |D|^p samples has tail index
    # alpha/p and its sup over start times is dominated by single jumps
    n_paths = stacked.shape[0]
    n_blocks = min(16, n_paths)
    usable = (n_paths // n_blocks) * n_blocks
    results = []
    for lag in h_list:
        k = lag / step
        k_int = int(round(k))
        if k_int < 1 or abs(k - k_int) > 1e-9 * max(1.0, k):
            raise ValueError(f"lag {lag} is not a positive multiple of the grid step {step}")
        diffs = stacked[:usable, k_int:, :] - stacked[:usable, :-k_int, :]
        norms = np.linalg.norm(diffs, axis=-1) ** p
        blocks = norms.reshape(n_blocks, usable // n_blocks, -1).mean(axis=1)
        lp = np.median(blocks, axis=0) ** (1.0 / p)  # one value per start time
        results.append((float(lag), float(np.max(lp))))
    lags = np.array([r[0] for r in results])
    vals = np.array([r[1] for r in results])
    if np.any(vals <= 0.0):
        theta_hat = float("nan")  # constant paths: no slope to fit
    else:
        theta_hat = float(np.polyfit(np.log(lags), np.log(vals), 1)[0])
    return results, theta_hat
