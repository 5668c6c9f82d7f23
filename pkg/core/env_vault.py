import os
from dataclasses import dataclass

from dotenv import load_dotenv

from core.errors import ConfigError


@dataclass
class SolverVault:
    """Environment-backed solver defaults; CLI flags override them."""

    tol: float = 1e-10
    max_iter: int = 0
    episodes: int = 10_000
    horizon: int = 0
    seed: int = 0
    workers: int = 1
    log_level: str = "INFO"

    @classmethod
    def from_env(cls, dotenv_path: str | None = None) -> "SolverVault":
        load_dotenv(dotenv_path)
        try:
            return cls(
                tol=float(os.getenv("SCPR_TOL", "1e-10")),
                # 0 means "derive from the state space"
                max_iter=int(os.getenv("SCPR_MAX_ITER", "0")),
                episodes=int(os.getenv("SCPR_EPISODES", "10000")),
                horizon=int(os.getenv("SCPR_HORIZON", "0")),
                seed=int(os.getenv("SCPR_SEED", "0")),
                workers=int(os.getenv("SCPR_WORKERS", "1")),
                log_level=os.getenv("SCPR_LOG_LEVEL", "INFO").upper(),
            )
        except ValueError as exc:
            raise ConfigError(f"malformed SCPR_* environment value: {exc}") from exc

    def validate(self) -> bool:
        """Validates all solver parameters"""
        if not self.tol > 0:
            raise ConfigError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 0:
            raise ConfigError(f"max_iter must be >= 0, got {self.max_iter}")
        if self.horizon < 0:
            raise ConfigError(f"horizon must be >= 0, got {self.horizon}")
        if self.episodes < 1:
            raise ConfigError(f"episodes must be >= 1, got {self.episodes}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        return True
