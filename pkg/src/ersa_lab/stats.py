import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo probability with its Wilson interval."""
    value: float
    ci_lo: float
    ci_hi: float
    trials: int
    successes: int
    dense_failures: int = 0

    @property
    def sigma(self) -> float:
        """Binomial standard error at the point estimate."""
        return math.sqrt(max(self.value * (1.0 - self.value), 0.0) / self.trials)

    def straddles(self, target: float) -> bool:
        return self.ci_lo <= target <= self.ci_hi


@dataclass(frozen=True)
class PairedDifference:
    """Mean of per-trial paired differences with its standard error."""
    mean: float
    stderr: float
    trials: int

    @property
    def ci_lo(self) -> float:
        return self.mean - 2.0 * self.stderr

    @property
    def ci_hi(self) -> float:
        return self.mean + 2.0 * self.stderr


def wilson_interval(successes: int, trials: int, z: float) -> "tuple[float, float]":
    """
    Wilson score interval for a binomial proportion.

    Stays inside [0, 1] and keeps nonzero width at 0 and 1 successes.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    phat = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (phat + z2 / (2.0 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1.0 - phat) / trials + z2 / (4.0 * trials * trials))
    return max(0.0, centre - half), min(1.0, centre + half)


def estimate_from_hits(hits: np.ndarray, z: float, dense_failures: int = 0) -> Estimate:
    hits = np.asarray(hits, dtype=bool)
    trials = int(hits.size)
    successes = int(hits.sum())
    lo, hi = wilson_interval(successes, trials, z)
    value = successes / trials
    # Wilson bounds always bracket phat; clamp against float rounding
    return Estimate(value=value, ci_lo=min(lo, value), ci_hi=max(hi, value), trials=trials, successes=successes, dense_failures=int(dense_failures))


def paired_difference(values: np.ndarray) -> PairedDifference:
    values = np.asarray(values, dtype=float)
    n = int(values.size)
    stderr = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return PairedDifference(mean=float(values.mean()), stderr=stderr, trials=n)
