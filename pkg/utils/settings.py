import logging
import os
from dataclasses import dataclass, replace
from typing import Final

from modules.errors import ConfigError

LOGGER: Final = logging.getLogger(__name__)

LOG_LEVELS: Final = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')


def get_setting(key, default=''):
    """Get a setting from the environment"""
    return os.environ.get(key, default)


def _integer(key, default, low=None, high=None):
    """Integer setting within [low, high], ConfigError otherwise"""
    raw = get_setting(key, str(default)).strip()
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw!r}") from None
    if (low is not None and value < low) or (high is not None and value > high):
        span = f"[{low}, {high}]" if high is not None else f">= {low}"
        raise ConfigError(f"{key} must be {span}, got {value}")
    return value


@dataclass(frozen=True)
class Settings:
    cap: int = 6
    verify_size: int = 3
    translate_node_limit: int = 40
    brute_max_size: int = 4
    seed: int = 0
    jobs: int = 1
    log_level: str = 'WARNING'

    def __post_init__(self):
        if self.cap < 1:
            raise ConfigError(f"cap must be >= 1, got {self.cap}")
        if not 1 <= self.verify_size <= 4:
            raise ConfigError(f"verify size must be in [1, 4], got {self.verify_size}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if self.log_level not in LOG_LEVELS:
            raise ConfigError(f"unknown log level {self.log_level}")

    def override(self, **values):
        """Copy with the given (non-None) values replaced"""
        return replace(self, **{k: v for k, v in values.items() if v is not None})


def load_settings():
    """Settings from UF1_* environment variables over built-in defaults"""
    settings = Settings(
        cap=_integer('UF1_CAP', 6, low=1),
        verify_size=_integer('UF1_VERIFY_SIZE', 3, low=1, high=4),
        translate_node_limit=_integer('UF1_TRANSLATE_NODES', 40, low=1),
        brute_max_size=_integer('UF1_BRUTE_MAX', 4, low=1),
        seed=_integer('UF1_SEED', 0),
        jobs=_integer('UF1_JOBS', 1, low=1),
        log_level=get_setting('UF1_LOG_LEVEL', 'WARNING').strip().upper(),
    )
    LOGGER.debug("settings: %s", settings)
    return settings
