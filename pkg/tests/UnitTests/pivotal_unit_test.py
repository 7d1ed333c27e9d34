# tests/UnitTests/pivotal_unit_test.py
"""
Unit tests for pivotality, exact phi values and the Margulis-Russo checks.
"""

import math

import numpy as np
import pytest

from ersa_lab.base import DomainError
from ersa_lab.lattice import Rect, Site, Window
from ersa_lab.percolation import CrossingSpec
from ersa_lab.pivotal import (
    Pivotal,
    PivotalQuery,
    SiteClass,
    check_mra_exact,
    check_mrb_exact,
    exact_diamond_phi,
    exact_odd_phi,
    is_pivotal,
)
from ersa_lab.rsa_process import ArrivalField, Params


def two_path(even_time: float, odd_time: float) -> ArrivalField:
    w = Window.plane(0, 0, 2, 1)
    return ArrivalField(w, Params(1.0, 0.5), exp=np.array([[even_time], [odd_time]]), u=np.ones((2, 1)),
                        diamond_u=np.ones((1, 0)))


SPAN = CrossingSpec(Rect(0, 1, 0, 0))


# ═══════════════════════════════════════════════════════════════════════════
# 1.  Queries and single-field pivotality
# ═══════════════════════════════════════════════════════════════════════════

class TestPivotalQuery:

    @pytest.mark.parametrize("site, expected", [
        (Site.octagon(0, 0), SiteClass.EVEN_OCTAGON),
        (Site.octagon(1, 0), SiteClass.ODD_OCTAGON),
        (Site.diamond(0, 0), SiteClass.DIAMOND),
    ])
    def test_class_inferred(self, site, expected):
        assert PivotalQuery(site, SPAN).site_class is expected

    def test_class_mismatch(self):
        with pytest.raises(DomainError):
            PivotalQuery(Site.octagon(1, 0), SPAN, SiteClass.EVEN_OCTAGON)


class TestIsPivotal:

    def test_odd_site_moved_to_zero(self):
        # even wins the race, so both faces are black; a zero odd time flips both to white
        assert is_pivotal(PivotalQuery(Site.octagon(1, 0), SPAN), two_path(0.5, 0.8))

    def test_odd_site_already_first(self):
        assert not is_pivotal(PivotalQuery(Site.octagon(1, 0), SPAN), two_path(0.5, 0.3))

    def test_even_site_delay(self):
        q = PivotalQuery(Site.octagon(0, 0), SPAN)
        f = two_path(0.5, 0.8)
        assert is_pivotal(q, f, aux=0.5)
        assert not is_pivotal(q, f, aux=0.1)

    def test_even_site_needs_delay(self):
        with pytest.raises(DomainError):
            is_pivotal(PivotalQuery(Site.octagon(0, 0), SPAN), two_path(0.5, 0.8))

    def test_diamond_on_four_cycle_is_never_pivotal(self):
        # jammed 4-cycles are all black or all white, so the diamond never matters
        w = Window.plane(0, 0, 2, 2)
        q = PivotalQuery(Site.diamond(0, 0), CrossingSpec(Rect(0, 1, 0, 1)))
        rng = np.random.default_rng(0)
        for _ in range(20):
            f = ArrivalField(w, Params(1.0, 0.5), rng.standard_exponential(w.shape), rng.random(w.shape),
                             rng.random(w.diamond_shape))
            assert not is_pivotal(q, f)


# ═══════════════════════════════════════════════════════════════════════════
# 2.  Exact identities on oracle instances
# ═══════════════════════════════════════════════════════════════════════════

class TestExactIdentities:

    def test_odd_phi_on_two_path(self):
        phi = exact_odd_phi(Window.plane(0, 0, 2, 1), Params(1.0, 0.5), SPAN, Site.octagon(1, 0))
        assert phi == pytest.approx(0.5)

    def test_diamond_phi_on_four_cycle(self):
        poly = exact_diamond_phi(Window.plane(0, 0, 2, 2), Params(1.0, 0.5), CrossingSpec(Rect(0, 1, 0, 1)),
                                 Site.diamond(0, 0))
        assert np.allclose(poly.coef, 0.0)

    @pytest.mark.parametrize("shape, params", [((3, 2), Params(1.0, 0.5)), ((3, 3), Params(2.0, 0.4)),
                                               ((2, 3), Params(0.7, 0.5, 0.3))])
    def test_mra_exact(self, shape, params):
        w = Window.plane(0, 0, *shape)
        _, _, ok = check_mra_exact(w, params, CrossingSpec(w.rect))
        assert ok

    @pytest.mark.parametrize("params", [Params(1.0, 0.5, 0.3), Params(2.0, 0.6, 0.0)])
    def test_mrb_exact(self, params):
        w = Window.plane(0, 0, 2, 2)
        lhs, rhs = check_mrb_exact(w, params, CrossingSpec(w.rect))
        assert lhs == pytest.approx(rhs, abs=1e-6)
        assert rhs <= 0.0

    def test_mrb_on_two_path(self):
        # h(delta) = 1/2 exp(-delta) when lambda = 1
        lhs, rhs = check_mrb_exact(Window.plane(0, 0, 2, 1), Params(1.0, 0.5, 0.2), SPAN)
        assert lhs == pytest.approx(-0.5 * math.exp(-0.2), abs=1e-6)
        assert rhs == pytest.approx(-0.5 * math.exp(-0.2))


# ═══════════════════════════════════════════════════════════════════════════
# 3.  Estimator
# ═══════════════════════════════════════════════════════════════════════════

class TestPivotalEstimator:

    def test_query(self, cfg):
        q = Pivotal(cfg=cfg).query(Site.diamond(0, 0), 2, 1.0)
        assert q.site_class is SiteClass.DIAMOND
        assert q.spec.rect == Rect(-2, 1, -2, 1)

    @pytest.mark.parametrize("site", [Site.diamond(0, 0), Site.octagon(0, 0), Site.octagon(1, 0)])
    def test_estimate_phi(self, cfg, site):
        piv = Pivotal(cfg=cfg)
        est = piv.estimate_phi(piv.query(site, 2, 1.0), Params(1.0, 0.5), trials=40, buffer=1)
        assert est.trials == 40
        assert 0.0 <= est.value <= 1.0

    def test_russo_residuals_shape_and_signs(self, cfg):
        res = Pivotal(cfg=cfg).russo_residuals(2, 1.0, Params(1.0, 0.5), trials=30, buffer=1)
        assert [t.name for t in res.terms()] == ["p", "lambda", "delta"]
        assert all(t.residual.trials == 30 for t in res.terms())
        assert res.r_p.pivotal_sum.mean >= 0.0
        assert res.r_lambda.pivotal_sum.mean >= 0.0
        assert res.r_delta.pivotal_sum.mean <= 0.0
        assert res.r_p.value == abs(res.r_p.residual.mean)
