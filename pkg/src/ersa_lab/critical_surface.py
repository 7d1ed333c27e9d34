"""
ersa_lab.critical_surface
=========================

Duality residuals and CI-aware bisection of the pseudo-critical curve at fixed size.

Design decisions
----------------
- The pseudo-critical point is where the crossing estimate of R(2n, rho) meets a fixed
  target (0.5 by default). It is a finite-size proxy; nothing here extrapolates n.
- Every bisection point reuses the same trial stream, so the estimate is monotone in the
  bisected parameter sample by sample.
- A midpoint whose CI straddles the target is re-estimated with twice the trials, up to
  cfg.max_trials; past that the current bracket is returned with converged=False.
- rho defaults to 1: the self-dual point lambda=1 at p=1/2 and the dual-grid products
  lambda_c(p) * lambda_c(1-p) = 1 only hold on the square. Pass rho=3 explicitly for h_3.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .base import DomainError, ErsaObjectBase
from .percolation import Percolation, crossing_setup, has_crossing
from .rsa_process import Params, colour_faces, draw_arrivals, jam
from .stats import Estimate, PairedDifference, paired_difference

# Default bracket for lambda bisection
LAMBDA_BRACKET: Tuple[float, float] = (0.05, 20.0)


@dataclass(frozen=True)
class DualityResidual:
    value: float
    stderr: float
    h_primal: float
    h_dual: float
    trials: int
    buffer: int


@dataclass(frozen=True)
class BisectionRow:
    """One CSV row: p, n, lambda_lo, lambda_hi, h_at_mid, ci_lo, ci_hi, trials, seed."""
    p: float
    n: int
    lambda_lo: float
    lambda_hi: float
    h_at_mid: float
    ci_lo: float
    ci_hi: float
    trials: int
    seed: int
    converged: bool = True
    monotone_ok: bool = True

    @property
    def mid(self) -> float:
        return 0.5 * (self.lambda_lo + self.lambda_hi)

    def as_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass(frozen=True)
class PBisectionRow:
    lam: float
    n: int
    p_lo: float
    p_hi: float
    h_at_mid: float
    ci_lo: float
    ci_hi: float
    trials: int
    seed: int
    converged: bool = True

    def as_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass(frozen=True)
class DualitySetup:
    setup: object
    dual_params: Params


def duality_trial(rng: np.random.Generator, ds: DualitySetup) -> Tuple[float, float]:
    """(I(lambda, p), I(1/lambda, 1-p)) on one field."""
    setup = ds.setup
    f = draw_arrivals(setup.window, setup.params, rng)
    primal = has_crossing(setup.spec, colour_faces(jam(f.times(), setup.window.periodic), f))
    g = f.with_params(ds.dual_params)
    dual = has_crossing(setup.spec, colour_faces(jam(g.times(), setup.window.periodic), g))
    return float(primal), float(dual)


@dataclass
class CriticalSurface(ErsaObjectBase):
    """
    Duality and pseudo-critical-point tracing.

    Factory usage:
        cs = ErsaLab(cfg).critical_surface()
        row = cs.bisect_lambda_c(0.5, n=16, trials=2000, rho=1.0)
    """

    def _percolation(self) -> Percolation:
        return Percolation(cfg=self.cfg, runner=self.runner, logger=self.logger)

    # ---------- duality ----------

    def duality_residual(self, n: int, params: Params, trials: int, seed: Optional[int] = None, *,
                         buffer_scale: int = 1, stream: int = 0) -> DualityResidual:
        """|h_1(n, lambda, p) + h_1(n, 1/lambda, 1-p) - 1| on the square, both sides on the same fields."""
        seed = self._seed(seed)
        if buffer_scale < 1:
            raise DomainError(f"buffer_scale must be >= 1, got {buffer_scale}")
        setup = crossing_setup(n, 1.0, params, buffer_factor=self.cfg.buffer_factor * buffer_scale, track_dense=False)
        out = self.runner.run(duality_trial, seed=seed, stream=stream, trials=trials,
                              args=(DualitySetup(setup, params.dual()),))
        diff: PairedDifference = paired_difference(out[:, 0] + out[:, 1] - 1.0)
        h_primal, h_dual = float(out[:, 0].mean()), float(out[:, 1].mean())
        residual = DualityResidual(abs(diff.mean), diff.stderr, h_primal, h_dual, trials, setup.buffer)
        self.logger.info("duality residual at %s: %.6f +/- %.6f (buffer %d)", params, residual.value, residual.stderr, setup.buffer)
        return residual

    # ---------- bisection ----------

    def _estimate(self, n: int, rho: float, params: Params, trials: int, seed: int) -> Estimate:
        perc = self._percolation()
        return perc.estimate_setup(perc.setup(n, rho, params, track_dense=False), trials, seed)

    def _refine(self, n: int, rho: float, params: Params, trials: int, seed: int, target: float) -> Tuple[Estimate, int]:
        """Estimate at *params*, doubling trials while the CI straddles *target*."""
        est = self._estimate(n, rho, params, trials, seed)
        while est.straddles(target) and trials * 2 <= self.cfg.max_trials:
            trials *= 2
            self.logger.warning("CI straddles %.3f at %s; escalating to %d trials", target, params, trials)
            est = self._estimate(n, rho, params, trials, seed)
        return est, trials

    def _bisect(self, make_params, lo: float, hi: float, n: int, rho: float, trials: int, seed: int,
                target: float, tol: float) -> Tuple[float, float, Estimate, int, bool]:
        if not lo < hi:
            raise DomainError(f"invalid bracket [{lo}, {hi}]")
        est_lo = self._estimate(n, rho, make_params(lo), trials, seed)
        est_hi = self._estimate(n, rho, make_params(hi), trials, seed)
        if not (est_lo.ci_hi < target < est_hi.ci_lo):
            raise DomainError(
                f"bracket [{lo}, {hi}] does not separate target {target}: "
                f"h(lo) CI [{est_lo.ci_lo:.4f}, {est_lo.ci_hi:.4f}], h(hi) CI [{est_hi.ci_lo:.4f}, {est_hi.ci_hi:.4f}]"
            )
        est_mid = est_lo
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            est_mid, used = self._refine(n, rho, make_params(mid), trials, seed, target)
            trials = max(trials, used)
            if est_mid.ci_lo > target:
                hi = mid
            elif est_mid.ci_hi < target:
                lo = mid
            else:
                self.logger.warning("bisection stopped at [%.4f, %.4f]: CI still straddles %.3f at %d trials", lo, hi, target, trials)
                return lo, hi, est_mid, trials, False
            self.logger.info("bisection bracket [%.4f, %.4f] (h(mid)=%.4f)", lo, hi, est_mid.value)
        mid = 0.5 * (lo + hi)
        est_mid = self._estimate(n, rho, make_params(mid), trials, seed)
        return lo, hi, est_mid, trials, True

    def bisect_lambda_c(self, p: float, n: int, trials: int, target: float = 0.5, tol: float = 0.2,
                        seed: Optional[int] = None, *, bracket: Tuple[float, float] = LAMBDA_BRACKET,
                        rho: float = 1.0, delta: float = 0.0) -> BisectionRow:
        """Bracket of width <= tol around the lambda where h_rho(n, lambda, p) meets *target*."""
        seed = self._seed(seed)
        lo, hi, est, used, ok = self._bisect(lambda lam: Params(lam, p, delta), bracket[0], bracket[1],
                                             n, rho, trials, seed, target, tol)
        return BisectionRow(p, n, lo, hi, est.value, est.ci_lo, est.ci_hi, used, seed, converged=ok)

    def bisect_p_c(self, lam: float, n: int, trials: int, target: float = 0.5, tol: float = 0.05,
                   seed: Optional[int] = None, *, bracket: Tuple[float, float] = (0.0, 1.0),
                   rho: float = 1.0, delta: float = 0.0) -> PBisectionRow:
        """Bracket around the p where h_rho(n, lambda, p) meets *target*."""
        seed = self._seed(seed)
        if not 0.0 <= bracket[0] < bracket[1] <= 1.0:
            raise DomainError(f"invalid p bracket {bracket}")
        lo, hi, est, used, ok = self._bisect(lambda p: Params(lam, p, delta), bracket[0], bracket[1],
                                             n, rho, trials, seed, target, tol)
        return PBisectionRow(lam, n, lo, hi, est.value, est.ci_lo, est.ci_hi, used, seed, converged=ok)

    def trace_surface(self, p_grid: Sequence[float], n: int, trials: int, seed: Optional[int] = None, *,
                      target: float = 0.5, tol: float = 0.2, rho: float = 1.0,
                      bracket: Tuple[float, float] = LAMBDA_BRACKET) -> List[BisectionRow]:
        """lambda_c(p) over *p_grid*; rows flag failed points and monotonicity breaks."""
        seed = self._seed(seed)
        rows: List[BisectionRow] = []
        for p in sorted(p_grid):
            if not 0.0 < p < 1.0:
                raise DomainError(f"p grid values must lie in (0, 1), got {p}")
            try:
                row = self.bisect_lambda_c(p, n, trials, target, tol, seed, bracket=bracket, rho=rho)
            except DomainError as e:
                self.logger.warning("bisection failed at p=%s: %s", p, e)
                row = BisectionRow(p, n, math.nan, math.nan, math.nan, math.nan, math.nan, trials, seed, converged=False)
            rows.append(row)
        return flag_monotone(rows)

    def dual_products(self, rows: Sequence[BisectionRow], *, rho: float = 1.0) -> List[Tuple[float, float, float, float]]:
        """Dual-grid products; lambda_c(p) * lambda_c(1-p) = 1 is only expected on the square (rho=1)."""
        if rho != 1.0:
            self.logger.warning("dual products at rho=%s: lambda_c(p) * lambda_c(1-p) = 1 holds only for rho=1", rho)
        return dual_products(rows)


def flag_monotone(rows: Sequence[BisectionRow]) -> List[BisectionRow]:
    """lambda_c must not increase with p beyond the brackets: a row whose lo exceeds an earlier hi is flagged."""
    out: List[BisectionRow] = []
    best_hi = math.inf
    for row in sorted(rows, key=lambda r: r.p):
        ok = not (row.lambda_lo > best_hi)
        if not math.isnan(row.lambda_hi):
            best_hi = min(best_hi, row.lambda_hi)
        out.append(BisectionRow(**{**row.as_dict(), "monotone_ok": ok}))
    return out


def dual_products(rows: Sequence[BisectionRow]) -> List[Tuple[float, float, float, float]]:
    """(p, product of midpoints, product of lows, product of highs) for every p paired with 1-p."""
    by_p = {round(r.p, 12): r for r in rows}
    out = []
    for r in sorted(rows, key=lambda r: r.p):
        other = by_p.get(round(1.0 - r.p, 12))
        if other is None or r.p > other.p:
            continue
        out.append((r.p, r.mid * other.mid, r.lambda_lo * other.lambda_lo, r.lambda_hi * other.lambda_hi))
    return out
