import numpy as np

from structures.errors import ConfigError


def seed_sequence(seed: int, replica: int = 0, m: int = 1) -> np.random.SeedSequence:
    """Stream for replica r at inflation m: SeedSequence([seed, r, m])"""
    for name, value in (("seed", seed), ("replica", replica), ("inflation", m)):
        if value < 0:
            raise ConfigError(name, f"must be non-negative, got {value}")
    return np.random.SeedSequence([seed, replica, m])


def make_rng(seed: int, replica: int = 0, m: int = 1) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(seed, replica, m))
