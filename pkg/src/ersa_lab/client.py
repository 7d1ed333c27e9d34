import logging
from typing import Optional

from .config import ErsaConfig
from .critical_surface import CriticalSurface
from .discrete_torus import DiscreteTorus
from .percolation import Percolation
from .pivotal import Pivotal
from .rsa_process import RsaProcess
from .trials import TrialRunner


class ErsaLab:
    """
    Central factory / context object.
    Owns config, logger and the trial runner every estimator shares.
    """

    def __init__(self, cfg: Optional[ErsaConfig] = None, logger: Optional[logging.Logger] = None):
        self.cfg = cfg or ErsaConfig()
        self.logger = logger or logging.getLogger("ersa-lab")
        self.runner = TrialRunner(self.cfg, logger=self.logger)

    def rsa(self) -> RsaProcess:
        return RsaProcess(cfg=self.cfg, runner=self.runner, logger=self.logger)

    def percolation(self) -> Percolation:
        return Percolation(cfg=self.cfg, runner=self.runner, logger=self.logger)

    def pivotal(self) -> Pivotal:
        return Pivotal(cfg=self.cfg, runner=self.runner, logger=self.logger)

    def critical_surface(self) -> CriticalSurface:
        return CriticalSurface(cfg=self.cfg, runner=self.runner, logger=self.logger)

    def discrete_torus(self) -> DiscreteTorus:
        return DiscreteTorus(cfg=self.cfg, runner=self.runner, logger=self.logger)
