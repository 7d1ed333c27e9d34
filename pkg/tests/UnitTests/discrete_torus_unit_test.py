# tests/UnitTests/discrete_torus_unit_test.py
"""
Unit tests for block marginals, X-fields, the witness, the crude event and the torus/plane gap.
"""

import math
import re

import numpy as np
import pytest

from ersa_lab.base import DomainError
from ersa_lab.discrete_torus import (
    DiscreteTorus,
    XField,
    block_vectors,
    crude_event,
    crude_rectangles,
    default_delta,
    discrete_marginals,
    e_fast,
    f_event,
    project_to_x,
    sample_x_field,
    symmetry_order,
    witness_ticks,
)
from ersa_lab.lattice import Rect, Window
from ersa_lab.rsa_process import Params, draw_arrivals
from ersa_lab.trials import trial_rng


def constant_field(value: int, n: int = 1, delta: float = 0.5) -> XField:
    K = int(math.floor(n / delta))
    return XField(np.full((20 * n, 20 * n, K + 2), value, dtype=np.int8), n, delta, 4.0, 1.0, 0.5)


# ═══════════════════════════════════════════════════════════════════════════
# 1.  Marginals
# ═══════════════════════════════════════════════════════════════════════════

class TestMarginals:

    def test_default_delta(self):
        assert default_delta(4) == pytest.approx(1.0 / math.sqrt(math.log(4.0)))
        with pytest.raises(DomainError):
            default_delta(1)

    def test_values(self):
        vec = discrete_marginals(4.0, 0.5, 1.0, 0.05)
        e0, e1 = math.exp(-0.2), math.exp(-0.05)
        np.testing.assert_allclose(vec, [1 - e1, e1 - 0.5, 0.5 + e0 - 1, 1 - e0])
        assert vec.sum() == pytest.approx(1.0)

    @pytest.mark.parametrize("p_tilde, bad", [(0.99, "P[X=1]"), (0.1, "P[X=2]")])
    def test_infeasible(self, p_tilde, bad):
        with pytest.raises(DomainError, match=re.escape(bad)):
            discrete_marginals(4.0, p_tilde, 1.0, 0.05)

    def test_block_vectors(self):
        pv, qv, gamma = block_vectors(1.0, 0.5, 0.1, 0.05)
        assert pv.k == 3 and qv.k == 3
        assert gamma > 0.0
        assert gamma == pytest.approx(min(pv.entries[0] - qv.entries[0], qv.entries[3] - pv.entries[3]))

    def test_symmetry_order(self):
        assert symmetry_order(40) == 800


# ═══════════════════════════════════════════════════════════════════════════
# 2.  X-fields
# ═══════════════════════════════════════════════════════════════════════════

class TestXField:

    def test_sample_shape(self):
        X = sample_x_field(1, 1.0, 0.5, np.random.default_rng(0), delta=0.5)
        assert X.values.shape == (20, 20, 4)
        assert X.blocks == 3
        assert X.side == 20
        assert set(np.unique(X.values)) <= {0, 1, 2, 3}

    def test_cell_wraps_and_bump_caps(self):
        X = constant_field(2)
        bumped = X.bumped(-1, 21, 0)
        assert bumped.cell(19, 1, 0) == 3
        assert X.cell(19, 1, 0) == 2
        assert bumped.bumped(19, 1, 0).cell(19, 1, 0) == 3

    def test_projection_matches_first_arrivals(self):
        rng = np.random.default_rng(5)
        f = draw_arrivals(Window.torus(20), Params(1.0, 0.5), trial_rng(5, 0, 0))
        X = project_to_x(f, 1, rng, delta=0.5)
        _, first3 = witness_ticks(X)
        even = f.window.even_mask()
        block = np.floor(f.times() / 0.5).astype(int)
        expected = np.where(block <= X.blocks - 1, block, -1)
        np.testing.assert_array_equal(first3[even], expected[even])
        np.testing.assert_array_equal(X.values[:, :, 0] >= 2, f.diamond_black())

    def test_projection_needs_matching_torus(self):
        f = draw_arrivals(Window.torus(10), Params(1.0, 0.5), trial_rng(0, 0, 0))
        with pytest.raises(DomainError):
            project_to_x(f, 1, np.random.default_rng(0), delta=0.5)


# ═══════════════════════════════════════════════════════════════════════════
# 3.  Witness and events
# ═══════════════════════════════════════════════════════════════════════════

class TestWitness:

    def test_no_arrivals_means_late_ticks(self):
        ticks, first3 = witness_ticks(constant_field(1))
        even = Window.torus(20).even_mask()
        assert np.all(first3 == -1)
        # odd sites go before even ones when nothing arrives
        assert np.all(ticks[even] == 20.0)
        assert np.all(ticks[~even] == 19.0)
        assert not e_fast(constant_field(1))

    def test_even_delay(self):
        X = constant_field(3)
        ticks, first3 = witness_ticks(X)
        even = X.window.even_mask()
        assert np.all(first3[even] == 0)
        assert np.all(ticks[even] == 4.0)
        assert np.all(witness_ticks(X, even_delay_ticks=0)[0][even] == 0.0)
        assert e_fast(X)

    def test_all_even_first_is_all_black(self):
        # every block is 3: evens arrive at their block start, odds never get a 0 block
        X = constant_field(3)
        assert crude_event(X)
        assert f_event(X)

    def test_crude_rectangles(self):
        rects = crude_rectangles(2)
        assert len(rects) == 40
        assert rects[0] == Rect(0, 35, 0, 3)
        assert all(r.width == 36 and r.height == 4 for r in rects)

    def test_crude_implies_f_event(self):
        for t in range(6):
            X = sample_x_field(1, 6.0, 0.5, trial_rng(21, 0, t), delta=0.05)
            if crude_event(X):
                assert f_event(X)


# ═══════════════════════════════════════════════════════════════════════════
# 4.  Estimators
# ═══════════════════════════════════════════════════════════════════════════

class TestDiscreteTorus:

    def test_crude_frequency(self, cfg):
        crude, f = DiscreteTorus(cfg=cfg).crude_event_frequency(1, 6.0, 0.5, trials=4, delta=0.05)
        assert 0.0 <= crude <= f <= 1.0

    def test_gap(self, cfg):
        gap = DiscreteTorus(cfg=cfg).torus_plane_gap(32, Rect(30, 33, 30, 33), Params(1.0, 0.5), trials=20)
        assert gap.trials == 20
        assert 0.0 <= gap.gap <= 1.0
        assert gap.gap == pytest.approx(abs(gap.h_torus - gap.h_plane))

    @pytest.mark.parametrize("rect", [Rect(0, 40, 0, 0), Rect(60, 63, 60, 66)])
    def test_gap_rect_checked(self, cfg, rect):
        with pytest.raises(DomainError):
            DiscreteTorus(cfg=cfg).torus_plane_gap(32, rect, Params(1.0, 0.5), trials=5)
