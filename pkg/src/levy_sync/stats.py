"""Robust estimators for heavy-tailed Monte Carlo output.

Raw means of |X|^p samples with p close to alpha fluctuate wildly; every
estimator here aggregates by median-of-means instead. Bands are 2x the
median absolute deviation of the block means: not a calibrated coverage
statement, but comparable across sweep points, which is all the
monotonicity gates need.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_BLOCKS = 16


@dataclass(frozen=True)
class Estimate:
    """Point estimate with a robust confidence band."""

    value: float
    lo: float
    hi: float
    n_effective: int = 0
    excluded: int = 0

    @property
    def band(self) -> float:
        return 0.5 * (self.hi - self.lo)


def median_of_means(samples, n_blocks: int = N_BLOCKS) -> Estimate:
    """Median of block means with a 2*MAD band.

    Blocks are taken in sample order, which is deterministic because every
    caller orders samples by path index.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n == 0:
        raise ValueError("no samples")
    blocks = min(n_blocks, n)
    usable = (n // blocks) * blocks
    means = x[:usable].reshape(blocks, -1).mean(axis=1)
    est = float(np.median(means))
    spread = float(np.median(np.abs(means - est)))
    return Estimate(value=est, lo=est - 2.0 * spread, hi=est + 2.0 * spread, n_effective=n)


def lp_norm_estimate(diffs_pth, p: float, excluded: int = 0) -> Estimate:
    """(E|D|^p)^(1/p) from per-path samples of |D|^p."""
    mom = median_of_means(diffs_pth)
    root = 1.0 / p
    value = max(mom.value, 0.0) ** root
    lo = max(mom.lo, 0.0) ** root
    hi = max(mom.hi, 0.0) ** root
    return Estimate(value=value, lo=lo, hi=hi, n_effective=mom.n_effective, excluded=excluded)


def non_increasing_within_bands(estimates) -> list[int]:
    """Indices k where estimate k+1 exceeds estimate k beyond joint bands."""
    bad = []
    for k in range(len(estimates) - 1):
        a, b = estimates[k], estimates[k + 1]
        if b.value > a.value + (a.band + b.band):
            bad.append(k)
    return bad
