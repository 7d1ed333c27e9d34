# tests/UnitTests/client_unit_test.py
"""
Unit tests for the ErsaLab factory.
"""

import logging

from ersa_lab import ErsaConfig, ErsaLab
from ersa_lab.critical_surface import CriticalSurface
from ersa_lab.discrete_torus import DiscreteTorus
from ersa_lab.percolation import Percolation
from ersa_lab.pivotal import Pivotal
from ersa_lab.rsa_process import RsaProcess


class TestErsaLab:

    def test_default_config(self):
        lab = ErsaLab()
        assert lab.cfg == ErsaConfig()
        assert lab.logger.name == "ersa-lab"

    def test_factories_share_state(self):
        cfg = ErsaConfig(seed=3, workers=2)
        logger = logging.getLogger("ersa-lab.test")
        lab = ErsaLab(cfg, logger=logger)
        objects = [lab.rsa(), lab.percolation(), lab.pivotal(), lab.critical_surface(), lab.discrete_torus()]
        kinds = [RsaProcess, Percolation, Pivotal, CriticalSurface, DiscreteTorus]
        for obj, kind in zip(objects, kinds):
            assert isinstance(obj, kind)
            assert obj.cfg is cfg
            assert obj.runner is lab.runner
            assert obj.logger is logger

    def test_runner_uses_config(self):
        lab = ErsaLab(ErsaConfig(chunk_size=7))
        assert lab.runner.chunks(10) == [(0, 7), (7, 10)]
