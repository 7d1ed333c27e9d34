# tests/UnitTests/critical_surface_unit_test.py
"""
Unit tests for duality residuals, CI-aware bisection and the row post-processing helpers.
"""

import inspect
import logging
import math
from dataclasses import replace

import pytest

from ersa_lab.base import DomainError
from ersa_lab.critical_surface import LAMBDA_BRACKET, BisectionRow, CriticalSurface, dual_products, flag_monotone
from ersa_lab.percolation import crossing_setup, crossing_trial
from ersa_lab.rsa_process import Params
from ersa_lab.trials import trial_rng


def row(p: float, lo: float, hi: float) -> BisectionRow:
    return BisectionRow(p, 8, lo, hi, 0.5, 0.45, 0.55, 400, 0)


# ═══════════════════════════════════════════════════════════════════════════
# 1.  Row helpers
# ═══════════════════════════════════════════════════════════════════════════

class TestRows:

    def test_mid_and_dict(self):
        r = row(0.3, 1.0, 2.0)
        assert r.mid == 1.5
        assert r.as_dict()["lambda_hi"] == 2.0
        assert r.as_dict()["monotone_ok"] is True

    def test_flag_monotone(self):
        rows = flag_monotone([row(0.5, 3.5, 4.0), row(0.2, 2.0, 3.0), row(0.8, 0.5, 1.0)])
        assert [r.p for r in rows] == [0.2, 0.5, 0.8]
        assert [r.monotone_ok for r in rows] == [True, False, True]

    def test_flag_monotone_skips_failed_rows(self):
        failed = BisectionRow(0.4, 8, math.nan, math.nan, math.nan, math.nan, math.nan, 400, 0, converged=False)
        rows = flag_monotone([row(0.2, 2.0, 3.0), failed, row(0.6, 2.5, 2.9)])
        assert all(r.monotone_ok for r in rows)

    def test_dual_products(self):
        out = dual_products([row(0.3, 1.0, 2.0), row(0.7, 0.4, 0.6), row(0.5, 0.9, 1.1)])
        assert out[0] == pytest.approx((0.3, 0.75, 0.4, 1.2))
        assert out[1] == pytest.approx((0.5, 1.0, 0.81, 1.21))
        assert len(out) == 2

    def test_unpaired_rows_are_skipped(self):
        assert dual_products([row(0.3, 1.0, 2.0)]) == []


# ═══════════════════════════════════════════════════════════════════════════
# 2.  Duality
# ═══════════════════════════════════════════════════════════════════════════

class TestDuality:

    def test_self_dual_point(self, cfg):
        res = CriticalSurface(cfg=cfg).duality_residual(2, Params(1.0, 0.5), trials=60)
        assert res.h_primal == res.h_dual
        assert res.value == pytest.approx(abs(2.0 * res.h_primal - 1.0))
        assert res.trials == 60

    def test_buffer_scale(self, cfg):
        cs = CriticalSurface(cfg=cfg)
        assert cs.duality_residual(2, Params(2.0, 0.3), trials=10, buffer_scale=2).buffer == 8
        with pytest.raises(DomainError):
            cs.duality_residual(2, Params(2.0, 0.3), trials=10, buffer_scale=0)


# ═══════════════════════════════════════════════════════════════════════════
# 3.  Bisection
# ═══════════════════════════════════════════════════════════════════════════

class TestBisection:

    def test_inverted_bracket(self, cfg):
        with pytest.raises(DomainError, match="invalid bracket"):
            CriticalSurface(cfg=cfg).bisect_lambda_c(0.5, 2, 50, bracket=(2.0, 1.0), rho=1.0)

    def test_bracket_must_separate_target(self, cfg):
        with pytest.raises(DomainError, match="does not separate"):
            CriticalSurface(cfg=cfg).bisect_lambda_c(0.5, 2, 100, bracket=(1.0, 1.0001), rho=1.0)

    def test_p_bracket_checked(self, cfg):
        with pytest.raises(DomainError):
            CriticalSurface(cfg=cfg).bisect_p_c(1.0, 2, 50, bracket=(0.5, 1.5))

    def test_lambda_bisection_at_p_zero(self, cfg):
        cs = CriticalSurface(cfg=replace(cfg, max_trials=400))
        r = cs.bisect_lambda_c(0.0, 2, 200, tol=2.0, rho=1.0)
        assert LAMBDA_BRACKET[0] <= r.lambda_lo < r.lambda_hi <= LAMBDA_BRACKET[1]
        assert r.seed == 1234
        assert r.trials >= 200
        if r.converged:
            assert r.lambda_hi - r.lambda_lo <= 2.0

    def test_trace_surface_records_failures(self, cfg):
        rows = CriticalSurface(cfg=cfg).trace_surface([0.5], 2, 50, bracket=(1.0, 1.0001), rho=1.0)
        assert len(rows) == 1
        assert not rows[0].converged
        assert math.isnan(rows[0].lambda_lo)

    def test_trace_surface_grid_checked(self, cfg):
        with pytest.raises(DomainError):
            CriticalSurface(cfg=cfg).trace_surface([0.0, 0.5], 2, 50)

    def test_rho_defaults_to_the_square(self):
        for method in (CriticalSurface.bisect_lambda_c, CriticalSurface.bisect_p_c, CriticalSurface.trace_surface):
            assert inspect.signature(method).parameters["rho"].default == 1.0

    def test_dual_products_warn_off_the_square(self, cfg, caplog):
        rows = [row(0.3, 1.0, 2.0), row(0.7, 0.4, 0.6)]
        cs = CriticalSurface(cfg=cfg)
        with caplog.at_level(logging.WARNING, logger="ersa-lab"):
            assert cs.dual_products(rows) == dual_products(rows)
        assert not caplog.records
        with caplog.at_level(logging.WARNING, logger="ersa-lab"):
            cs.dual_products(rows, rho=3.0)
        assert "holds only for rho=1" in caplog.text

    def test_bisection_ignores_min_trials(self, cfg):
        r = CriticalSurface(cfg=replace(cfg, max_trials=100)).bisect_lambda_c(0.5, 2, 50, tol=20.0)
        assert r.trials == 50


# ═══════════════════════════════════════════════════════════════════════════
# 4.  Monotone coupling in lambda
# ═══════════════════════════════════════════════════════════════════════════

class TestLambdaCoupling:

    def test_crossing_nondecreasing_in_lambda(self):
        setups = [crossing_setup(3, 3.0, Params(lam, 0.5), buffer_factor=2, track_dense=False) for lam in (0.5, 1.0, 2.0, 4.0)]
        assert len({s.window for s in setups}) == 1
        non_monotone = 0
        for t in range(300):
            hits = [crossing_trial(trial_rng(1234, 0, t), s)[0] for s in setups]
            non_monotone += any(a > b for a, b in zip(hits, hits[1:]))
        assert non_monotone == 0
