"""
Shared pytest configuration for the whole test suite.

The suite has two tiers:

	Unit tier   - tests/UnitTests/*  (tiny windows, exact enumeration, seconds in total)
	Slow tier   - tests/**/*_slow.py (acceptance-size Monte Carlo runs and bisections)

Every slow test file follows the '*_slow.py' naming convention, so this hook marks
them automatically at collection time instead of decorating each test by hand.

pytest.ini deselects the 'slow' marker by default, which keeps a bare 'pytest' run
quick. The slow tier is opt-in:

	pytest -m slow tests/Acceptance/test_symmetry_slow.py
	pytest -m slow
"""

import pytest

from ersa_lab.config import ErsaConfig


def pytest_collection_modifyitems(config, items):
	"""Automatically apply the 'slow' marker to tests in *_slow.py files."""
	for item in items:
		# item.path is the file the test was collected from.
		if item.path is not None and item.path.name.endswith("_slow.py"):
			item.add_marker(pytest.mark.slow)


@pytest.fixture()
def cfg() -> ErsaConfig:
	"""Deterministic single-worker config."""
	return ErsaConfig(seed=1234)
