# tests/UnitTests/percolation_unit_test.py
"""
Unit tests for crossing detection (labelling and union-find backends), exact crossing
polynomials and the Percolation estimator.
"""

from dataclasses import replace

import numpy as np
import pytest
from numpy.polynomial import Polynomial

from ersa_lab.base import DomainError
from ersa_lab.lattice import Rect, Window
from ersa_lab.oracle import polynomials_close
from ersa_lab.percolation import (
    Colour,
    CrossingSpec,
    Orientation,
    Percolation,
    crosses,
    crossing_polynomial,
    crossing_setup,
    harris_fkg_gap,
    has_crossing,
    has_crossing_uf,
    refined_grid,
)
from ersa_lab.rsa_process import FaceColouring, Params


def random_colouring(w: Window, rng: np.random.Generator, p: float = 0.5) -> FaceColouring:
    return FaceColouring(window=w, octagon_black=rng.random(w.shape) < p, diamond_black=rng.random(w.diamond_shape) < p)


# ═══════════════════════════════════════════════════════════════════════════
# 1.  Crossing detection
# ═══════════════════════════════════════════════════════════════════════════

class TestCrosses:

    def test_refined_grid_links(self):
        octa = np.array([[True, True], [True, False]])
        g = refined_grid(octa, np.array([[False]]))
        assert g.shape == (3, 3)
        assert g[1, 0] and g[0, 1]
        assert not g[2, 1] and not g[1, 2] and not g[1, 1]

    def test_full_black_crosses(self):
        assert crosses(np.ones((3, 2), dtype=bool), np.zeros((2, 1), dtype=bool))

    def test_blocked_column(self):
        octa = np.ones((3, 2), dtype=bool)
        octa[1, :] = False
        assert not crosses(octa, np.ones((2, 1), dtype=bool))

    def test_diagonal_needs_the_diamond(self):
        octa = np.array([[True, False], [False, True]])
        assert not crosses(octa, np.array([[False]]))
        assert crosses(octa, np.array([[True]]))

    def test_diamond_is_never_an_endpoint(self):
        octa = np.zeros((2, 2), dtype=bool)
        assert not crosses(octa, np.array([[True]]))

    def test_single_octagon_rect(self):
        w = Window.plane(0, 0, 1, 1)
        c = FaceColouring(w, np.array([[True]]), np.zeros((0, 0), dtype=bool))
        assert has_crossing(CrossingSpec(Rect(0, 0, 0, 0)), c)
        assert not has_crossing(CrossingSpec(Rect(0, 0, 0, 0), colour=Colour.WHITE), c)

    def test_empty_rect_rejected(self):
        with pytest.raises(DomainError):
            CrossingSpec(Rect(1, 0, 0, 0))


class TestBackendsAgree:

    @pytest.mark.parametrize("orientation", list(Orientation))
    @pytest.mark.parametrize("colour", list(Colour))
    def test_label_and_union_find(self, orientation, colour):
        rng = np.random.default_rng(7)
        w = Window.plane(0, 0, 7, 6)
        spec = CrossingSpec(Rect(1, 5, 0, 4), orientation, colour)
        for _ in range(150):
            c = random_colouring(w, rng, p=rng.uniform(0.3, 0.7))
            assert has_crossing(spec, c) == has_crossing_uf(spec, c)

    def test_torus_window_extract(self):
        rng = np.random.default_rng(3)
        w = Window.torus(6)
        spec = CrossingSpec(Rect(4, 7, 4, 7))
        for _ in range(50):
            c = random_colouring(w, rng)
            assert has_crossing(spec, c) == has_crossing_uf(spec, c)

    def test_black_horizontal_xor_white_vertical(self):
        # three faces meet at every vertex of the tiling
        rng = np.random.default_rng(11)
        w = Window.plane(0, 0, 5, 4)
        rect = Rect(0, 4, 0, 3)
        for _ in range(200):
            c = random_colouring(w, rng)
            black = has_crossing(CrossingSpec(rect, Orientation.HORIZONTAL, Colour.BLACK), c)
            white = has_crossing(CrossingSpec(rect, Orientation.VERTICAL, Colour.WHITE), c)
            assert black != white


# ═══════════════════════════════════════════════════════════════════════════
# 2.  Exact crossing probabilities
# ═══════════════════════════════════════════════════════════════════════════

class TestExactCrossings:

    def test_two_path_is_the_even_race(self):
        # either the even site jams first (both faces black) or the odd one does (both white)
        poly = crossing_polynomial(Window.plane(0, 0, 2, 1), Params(1.0, 0.5), CrossingSpec(Rect(0, 1, 0, 0)))
        assert polynomials_close(poly, Polynomial([0.5]))

    def test_four_cycle(self):
        poly = crossing_polynomial(Window.plane(0, 0, 2, 2), Params(3.0, 0.5), CrossingSpec(Rect(0, 1, 0, 1)))
        assert polynomials_close(poly, Polynomial([0.75]))

    def test_polynomial_in_unit_interval(self):
        poly = crossing_polynomial(Window.plane(0, 0, 3, 3), Params(1.0, 0.5), CrossingSpec(Rect(0, 2, 0, 2)))
        for p in np.linspace(0.0, 1.0, 11):
            assert -1e-12 <= poly(p) <= 1.0 + 1e-12
        assert poly(1.0) >= poly(0.0)

    @pytest.mark.parametrize("params", [Params(1.0, 0.5), Params(2.0, 0.3), Params(0.5, 0.8, 0.2)])
    def test_harris_fkg(self, params):
        assert harris_fkg_gap(Window.plane(0, 0, 3, 3), params, Rect(0, 2, 0, 2)) >= -1e-12


# ═══════════════════════════════════════════════════════════════════════════
# 3.  Monte Carlo estimator
# ═══════════════════════════════════════════════════════════════════════════

class TestCrossingSetup:

    def test_default_buffer(self):
        setup = crossing_setup(4, 1.0, Params(1.0, 0.5), buffer_factor=2)
        assert setup.spec.rect == Rect(-4, 3, -4, 3)
        assert setup.buffer == 6
        assert setup.window.rect == Rect(-11, 10, -11, 10)

    def test_default_buffer_follows_the_width(self):
        # width 2 floor(rho n) = 4, height 8
        assert crossing_setup(4, 0.5, Params(1.0, 0.5), buffer_factor=2).buffer == 4
        assert crossing_setup(4, 3.0, Params(1.0, 0.5), buffer_factor=2).buffer == 10

    def test_zero_buffer_uses_the_rect(self):
        setup = crossing_setup(2, 1.0, Params(1.0, 0.5), buffer_factor=2, buffer=0)
        assert setup.window.rect == setup.spec.rect

    def test_negative_buffer_rejected(self):
        with pytest.raises(DomainError):
            crossing_setup(2, 1.0, Params(1.0, 0.5), buffer_factor=2, buffer=-1)


class TestPercolation:

    def test_estimate_h(self, cfg):
        est = Percolation(cfg=cfg).estimate_h(2, 1.0, Params(1.0, 0.5), trials=120)
        assert est.trials == 120
        assert est.ci_lo <= est.value <= est.ci_hi
        assert 0 <= est.dense_failures <= 120

    def test_few_trials_rejected(self, cfg):
        perc = Percolation(cfg=cfg)
        with pytest.raises(DomainError, match="min_trials"):
            perc.estimate_h(2, 1.0, Params(1.0, 0.5), trials=99, buffer=1)
        with pytest.raises(DomainError, match="min_trials"):
            perc.estimate_h_white(2, 1.0, Params(1.0, 0.5), trials=10, buffer=1)
        with pytest.raises(DomainError, match="min_trials"):
            perc.estimate_curve(2, 1.0, [Params(1.0, 0.5)], trials=10, buffer=1)

    def test_min_trials_opt_out(self, cfg):
        est = Percolation(cfg=replace(cfg, min_trials=1)).estimate_h(2, 1.0, Params(1.0, 0.5), trials=10, buffer=1)
        assert est.trials == 10

    def test_same_seed_same_estimate(self, cfg):
        perc = Percolation(cfg=cfg)
        a = perc.estimate_h(2, 1.0, Params(1.0, 0.5), trials=100, seed=5, buffer=1)
        b = perc.estimate_h(2, 1.0, Params(1.0, 0.5), trials=100, seed=5, buffer=1)
        assert a == b

    def test_curve_is_monotone_in_lambda(self, cfg):
        curve = Percolation(cfg=cfg).estimate_curve(
            3, 1.0, [Params(0.5, 0.5), Params(1.0, 0.5), Params(2.0, 0.5)], trials=150, buffer=1,
        )
        successes = [est.successes for est in curve]
        assert successes == sorted(successes)

    def test_white_crossing(self, cfg):
        est = Percolation(cfg=cfg).estimate_h_white(2, 1.0, Params(1.0, 0.0), trials=100, buffer=0)
        assert 0.0 <= est.value <= 1.0
