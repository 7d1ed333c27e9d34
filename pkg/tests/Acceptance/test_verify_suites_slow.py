# tests/Acceptance/test_verify_suites_slow.py
"""
Acceptance runs: every verify suite at full scale.

Slow tier (marked automatically from the file name). Run with:

    pytest -m slow tests/Acceptance/test_verify_suites_slow.py
"""

import pytest

from ersa_lab.client import ErsaLab
from ersa_lab.config import ErsaConfig
from ersa_lab.discrete_torus import block_vectors, symmetry_order
from ersa_lab.sharp_threshold import sharpnm_hypothesis
from ersa_lab.verify import SUITES, run_suite

SEED = 20240601


# ═══════════════════════════════════════════════════════════════════════════
# 1.  Suites
# ═══════════════════════════════════════════════════════════════════════════

@pytest.mark.parametrize("suite", SUITES)
def test_suite_passes_at_full_scale(suite):
    lab = ErsaLab(ErsaConfig(seed=SEED, workers=4))
    results = run_suite(lab, suite, "full")
    failed = [f"{r.name}: {r.detail}" for r in results if not r.passed]
    assert results
    assert not failed, "\n".join(failed)


def test_fourier_suite_quick_scale():
    results = run_suite(ErsaLab(ErsaConfig(seed=SEED)), "fourier", "quick")
    assert all(r.passed for r in results)


# ═══════════════════════════════════════════════════════════════════════════
# 2.  Out of desk reach
# ═══════════════════════════════════════════════════════════════════════════

def test_sharp_bound_needs_astronomical_symmetry_order():
    pv, qv, gamma = block_vectors(1.0, 0.5, 0.1, 0.05)
    m = symmetry_order(128)
    report = sharpnm_hypothesis(pv, qv, gamma, m, 0.25)
    assert not report
    assert "sharp_bound" in report.reasons
    assert report.min_m > m
