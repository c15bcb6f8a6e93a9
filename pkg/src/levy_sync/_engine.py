"""Batched shared-noise integration engine for the experiment harness.

Paths are independent work units: path i always draws from the stream
(master_seed, i, purpose) no matter how paths are split across workers, so
reports are bit-identical for any worker count. Workers get contiguous
path blocks; each block is integrated vectorized over paths and chunked in
time to bound memory.

Within one path, every channel (slow, fast, averaged, auxiliary, ...)
consumes the SAME alpha-stable increment scaled by its own intensity;
this is the shared-noise coupling the whole artifact is built on.
"""

from __future__ import annotations

import os
from typing import Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from .sde import PathGrid
from .stable_noise import StableLaw, _cms_standard, make_stream
from .synchro import CoupledSpec, fast_intensity, slow_intensity

CHUNK_STEPS = 2048


def worker_count(requested: Optional[int] = None) -> int:
    """Worker count: explicit argument, else LEVY_SYNC_WORKERS, else cores."""
    if requested is not None and requested > 0:
        return requested
    env = os.environ.get("LEVY_SYNC_WORKERS", "")
    if env.strip():
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


class SlowFastSystem:
    """Channels [X_eps, Y_eps (, X_bar) (, X_aux, Y_aux)] under one driver.

    The averaged channel integrates dXb = (f(Xb)+g(Xb))/2 dt + s_slow dL.
    The auxiliary channels freeze the slow argument of F and G at the most
    recent knot value of the TRUE slow channel (refreshed every knot_stride
    steps by the engine).
    """

    def __init__(self, spec: CoupledSpec, epsilon: float, x0, y0,
                 with_averaged: bool = True, knot_stride: Optional[int] = None):
        self.spec = spec
        self.epsilon = float(epsilon)
        self.scale = self.epsilon ** (1.0 / spec.alpha)
        self.with_averaged = with_averaged
        self.knot_stride = knot_stride
        dim = spec.law.dim
        x0 = np.broadcast_to(np.asarray(x0, dtype=float), (dim,))
        y0 = np.broadcast_to(np.asarray(y0, dtype=float), (dim,))
        s_slow = slow_intensity(spec)
        s_fast = fast_intensity(spec, self.epsilon)
        channels = [x0, y0]
        sigmas = [s_slow, s_fast]
        if with_averaged:
            channels.append(x0)
            sigmas.append(s_slow)
        if knot_stride is not None:
            channels.extend([x0, y0])
            sigmas.extend([s_slow, s_fast])
        self.x0 = np.stack(channels)
        self.sigma = np.asarray(sigmas, dtype=float)
        self._knot = None

    def set_knot(self, states: np.ndarray) -> None:
        self._knot = states[:, 0].copy()

    def drift(self, s: np.ndarray, t: float) -> np.ndarray:
        spec, c, eps = self.spec, self.scale, self.epsilon
        x, y = s[:, 0], s[:, 1]
        F = spec.f(x + c * y)
        G = spec.g(x - c * y)
        out = np.empty_like(s)
        out[:, 0] = 0.5 * (F + G)
        out[:, 1] = 0.5 * (F - G) / c - (2.0 / eps) * y
        k = 2
        if self.with_averaged:
            xb = s[:, k]
            out[:, k] = 0.5 * (spec.f(xb) + spec.g(xb))
            k += 1
        if self.knot_stride is not None:
            xa, ya = s[:, k], s[:, k + 1]
            xk = self._knot
            Fa = spec.f(xk + c * ya)
            Ga = spec.g(xk - c * ya)
            out[:, k] = 0.5 * (Fa + Ga)
            out[:, k + 1] = 0.5 * (Fa - Ga) / c - (2.0 / eps) * ya
        return out


class CoupledSystem:
    """Channels [X, Y (, X_hat)]: the coupled pair and the averaged SDE."""

    def __init__(self, spec: CoupledSpec, x0, y0, with_averaged: bool = True):
        self.spec = spec
        self.with_averaged = with_averaged
        self.knot_stride = None
        dim = spec.law.dim
        x0 = np.broadcast_to(np.asarray(x0, dtype=float), (dim,))
        y0 = np.broadcast_to(np.asarray(y0, dtype=float), (dim,))
        channels = [x0, y0]
        sigmas = [spec.sigma1, spec.sigma2]
        if with_averaged:
            channels.append(0.5 * (x0 + y0))
            sigmas.append(slow_intensity(spec))
        self.x0 = np.stack(channels)
        self.sigma = np.asarray(sigmas, dtype=float)

    def drift(self, s: np.ndarray, t: float) -> np.ndarray:
        spec = self.spec
        x, y = s[:, 0], s[:, 1]
        out = np.empty_like(s)
        out[:, 0] = spec.f(x) + spec.nu * (y - x)
        out[:, 1] = spec.g(y) + spec.nu * (x - y)
        if self.with_averaged:
            xh = s[:, 2]
            out[:, 2] = 0.5 * (spec.f(xh) + spec.g(xh))
        return out


class EnsembleSystem:
    """One drift field evolved from several initial conditions (channels)
    under identical noise; pairwise differences are then noise-free."""

    def __init__(self, drift_field, sigma: float, ics: np.ndarray):
        self.field = drift_field
        self.knot_stride = None
        ics = np.asarray(ics, dtype=float)
        if ics.ndim == 1:
            ics = ics[:, None]
        self.x0 = ics
        self.sigma = np.full(ics.shape[0], float(sigma))

    def drift(self, s: np.ndarray, t: float) -> np.ndarray:
        return self.field(s, t)


def _run_block(system, law: StableLaw, grid: PathGrid, mesh_idx, lo: int, hi: int,
               master_seed: int, purpose: str, chunk: int):
    b = hi - lo
    dim = law.dim
    n_ch = system.x0.shape[0]
    states = np.tile(system.x0[None, :, :], (b, 1, 1))
    rngs = [make_stream(master_seed, i, purpose) for i in range(lo, hi)]
    mesh_map = {int(k): j for j, k in enumerate(mesh_idx)}
    mesh_states = np.empty((b, len(mesh_idx), n_ch, dim))
    if 0 in mesh_map:
        mesh_states[:, mesh_map[0]] = states
    alive = np.ones(b, dtype=bool)
    h = grid.h
    amp = h ** (1.0 / law.alpha) * law.unit_scale()
    sig = system.sigma[None, :, None]
    if system.knot_stride is not None:
        system.set_knot(states)
    inc = np.empty((b, chunk, dim))
    k = 0
    with np.errstate(over="ignore", invalid="ignore"):
        while k < grid.n_steps:
            m = min(chunk, grid.n_steps - k)
            for i, rng in enumerate(rngs):
                inc[i, :m] = _cms_standard(law.alpha, rng, m * dim).reshape(m, dim)
            for j in range(m):
                t = grid.t0 + (k + j) * h
                states = states + system.drift(states, t) * h + (amp * inc[:, j])[:, None, :] * sig
                step = k + j + 1
                if system.knot_stride is not None and step % system.knot_stride == 0:
                    system.set_knot(states)
                pos = mesh_map.get(step)
                if pos is not None:
                    mesh_states[:, pos] = states
            finite = np.isfinite(states).all(axis=(1, 2))
            newly_bad = alive & ~finite
            if newly_bad.any():
                states[newly_bad] = 0.0  # frozen out; excluded from statistics
                alive &= finite
            k += m
    return mesh_states, ~alive


def simulate_paths(
    system,
    law: StableLaw,
    grid: PathGrid,
    mesh_idx: Sequence[int],
    n_paths: int,
    master_seed: int,
    purpose: str,
    n_workers: Optional[int] = None,
    chunk: int = CHUNK_STEPS,
):
    """Integrate n_paths independent realizations of a multi-channel system.

    Returns (mesh_states, diverged): mesh_states has shape
    (n_paths, len(mesh_idx), n_channels, dim); diverged is a boolean mask of
    paths that reached a non-finite value and must be excluded.
    """
    w = worker_count(n_workers)
    w = min(w, n_paths)
    if w <= 1:
        return _run_block(system, law, grid, mesh_idx, 0, n_paths, master_seed, purpose, chunk)
    bounds = np.linspace(0, n_paths, w + 1).astype(int)
    jobs = (
        delayed(_run_block)(system, law, grid, mesh_idx, int(lo), int(hi),
                            master_seed, purpose, chunk)
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    )
    parts = Parallel(n_jobs=w, backend="loky")(jobs)
    mesh = np.concatenate([p[0] for p in parts], axis=0)
    diverged = np.concatenate([p[1] for p in parts], axis=0)
    return mesh, diverged


def mesh_indices(n_steps: int, n_points: int) -> np.ndarray:
    """n_points step indices spread over (0, n_steps], always ending at T."""
    idx = np.unique(np.round(np.linspace(0, n_steps, n_points + 1)).astype(int))
    return idx[idx > 0]
