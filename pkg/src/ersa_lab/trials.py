"""
ersa_lab.trials
===============

Trial execution for every Monte Carlo estimator.

Trial ``t`` of stream ``s`` under seed ``S`` draws from
``default_rng(SeedSequence(S, spawn_key=(s, t, attempt)))``. ``attempt`` only moves
when a trial hits a positive-time tie (ResampleError), which happens with probability
zero for continuous variates but is still retried rather than silently skewed.

With ``workers > 1`` the trial range is cut into ``chunk_size`` chunks and mapped over a
process pool; ``Executor.map`` preserves order, so the returned array is the same for any
worker count.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np

from .base import ResampleError
from .config import ErsaConfig

TrialFn = Callable[..., Any]


def trial_rng(seed: int, stream: int, trial: int, attempt: int = 0) -> np.random.Generator:
    """Independent generator for one (seed, stream, trial, attempt) tuple."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(trial), int(attempt))))


def _run_chunk(fn: TrialFn, args: Tuple[Any, ...], seed: int, stream: int, start: int, stop: int, max_resamples: int) -> List[Any]:
    """Run trials [start, stop). Module-level so it pickles for the process pool."""
    out: List[Any] = []
    for trial in range(start, stop):
        attempt = 0
        while True:
            try:
                out.append(fn(trial_rng(seed, stream, trial, attempt), *args))
                break
            except ResampleError as e:
                if attempt >= max_resamples:
                    raise RuntimeError(f"Trial {trial} (stream {stream}) hit ties {max_resamples + 1} times; giving up.") from e
                attempt += 1
    return out


class TrialRunner:
    """
    Runs independent seeded trials, in-process or on a process pool.

    Example: runner.run(_crossing_trial, seed=42, stream=0, trials=10_000, args=(setup,))
    """

    def __init__(self, cfg: ErsaConfig, logger: Optional[logging.Logger] = None):
        self.cfg = cfg
        self.logger = logger or logging.getLogger("ersa-lab")

    def rng(self, seed: int, stream: int, trial: int, attempt: int = 0) -> np.random.Generator:
        return trial_rng(seed, stream, trial, attempt)

    def chunks(self, trials: int) -> List[Tuple[int, int]]:
        size = self.cfg.chunk_size
        return [(start, min(start + size, trials)) for start in range(0, trials, size)]

    def run(self, fn: TrialFn, *, seed: int, stream: int, trials: int, args: Sequence[Any] = ()) -> np.ndarray:
        """
        Call ``fn(rng, *args)`` once per trial and stack the results.

        ``fn`` and ``args`` must be picklable (module-level functions, plain data) when
        workers > 1. Returns a float array of shape (trials,) or (trials, k).
        """
        if trials < 1:
            raise ValueError(f"trials must be >= 1, got {trials}")
        args = tuple(args)
        chunks = self.chunks(trials)
        max_resamples = self.cfg.max_resamples

        if self.cfg.workers == 1 or len(chunks) == 1:
            results: List[Any] = []
            for start, stop in chunks:
                results.extend(_run_chunk(fn, args, seed, stream, start, stop, max_resamples))
                self.logger.debug("stream %s: %d/%d trials done", stream, stop, trials)
        else:
            n = len(chunks)
            with ProcessPoolExecutor(max_workers=self.cfg.workers) as pool:
                parts = pool.map(
                    _run_chunk,
                    [fn] * n,
                    [args] * n,
                    [seed] * n,
                    [stream] * n,
                    [c[0] for c in chunks],
                    [c[1] for c in chunks],
                    [max_resamples] * n,
                )
                results = []
                for part in parts:
                    results.extend(part)
            self.logger.debug("stream %s: %d trials done on %d workers", stream, trials, self.cfg.workers)

        return np.asarray(results, dtype=float)
