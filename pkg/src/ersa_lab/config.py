import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from scipy.stats import norm

# Environment fallback for the default seed (flags and config files win).
SEED_ENV_VAR = "ERSA_SEED"


@dataclass(frozen=True)
class ErsaConfig:
	"""
	Configuration settings for ersa-lab.

	Every tunable has a default, so ErsaConfig() is a working configuration.
	Helpers read from the config they were built with; nothing is global.
	"""
	# None means "resolve from ERSA_SEED, else 0" (see resolve_seed)
	seed: Optional[int] = None

	# Trial parallelism. 1 runs in-process; results do not depend on this.
	workers: int = 1
	chunk_size: int = 256

	# Wilson interval confidence level
	confidence: float = 0.95

	# Crossing windows get buffer_factor * ceil(sqrt(width)) sites of margin
	buffer_factor: int = 2

	# Positive-time ties trigger a resample; give up after this many
	max_resamples: int = 5

	# Exact enumeration caps
	oracle_max_sites: int = 9
	table_cap: int = 2 ** 20
	wht_max_m: int = 20
	l_cap: int = 64

	# Finite-difference / pivotal-sum settings
	h_step: float = 0.05
	pivot_sites_per_trial: int = 16
	max_fd_stderr: float = 5.0

	# Bisection escalates trials up to this many while the CI straddles the target
	max_trials: int = 64_000

	# Fewest trials a crossing estimate accepts; lower it only for smoke runs
	min_trials: int = 100

	# Significant digits for floats written to CSV
	float_digits: int = 12

	def __post_init__(self) -> None:
		if self.seed is not None and self.seed < 0:
			raise ValueError(f"seed must be nonnegative, got {self.seed}")
		if self.workers < 1:
			raise ValueError(f"workers must be >= 1, got {self.workers}")
		if self.chunk_size < 1:
			raise ValueError(f"chunk_size must be >= 1, got {self.chunk_size}")
		if not 0.0 < self.confidence < 1.0:
			raise ValueError(f"confidence must lie in (0, 1), got {self.confidence}")
		if self.buffer_factor < 0:
			raise ValueError(f"buffer_factor must be >= 0, got {self.buffer_factor}")
		if self.h_step <= 0:
			raise ValueError(f"h_step must be positive, got {self.h_step}")
		if self.pivot_sites_per_trial < 1:
			raise ValueError(f"pivot_sites_per_trial must be >= 1, got {self.pivot_sites_per_trial}")
		if self.min_trials < 1:
			raise ValueError(f"min_trials must be >= 1, got {self.min_trials}")

	@property
	def z(self) -> float:
		"""Two-sided normal quantile for the configured confidence level."""
		return float(norm.ppf(0.5 + self.confidence / 2.0))

	def resolve_seed(self, seed: Optional[int] = None) -> int:
		"""
		Explicit argument → config value → ERSA_SEED → 0.
		"""
		if seed is not None:
			return int(seed)
		if self.seed is not None:
			return int(self.seed)
		env = os.environ.get(SEED_ENV_VAR, "").strip()
		if env:
			try:
				return int(env)
			except ValueError:
				raise ValueError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from None
		return 0

	@classmethod
	def from_mapping(cls, mapping: Mapping[str, Any]) -> "ErsaConfig":
		"""Build a config from a flat mapping; unknown keys are rejected."""
		known = {f.name for f in fields(cls)}
		unknown = sorted(set(mapping) - known)
		if unknown:
			raise ValueError(f"Unknown config keys: {unknown}")
		return cls(**dict(mapping))


def load_config(path: Union[str, Path]) -> dict:
	"""
	Read a flat JSON object of config keys (and CLI flag defaults) from *path*.

	Returned as a plain dict so the CLI can split config keys from flag values.
	"""
	text = Path(path).read_text(encoding="utf-8")
	data = json.loads(text) if text.strip() else {}
	if not isinstance(data, dict):
		raise ValueError(f"Config file {path} must contain a JSON object")
	for key, value in data.items():
		if isinstance(value, (dict, list)):
			raise ValueError(f"Config file {path}: key {key!r} must be a scalar (flat key-value format)")
	return data
