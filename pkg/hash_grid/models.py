from dataclasses import dataclass

import numpy as np

from core.exceptions import ConfigError, ShapeMismatch

PRIMES = (1, 2654435761, 805459861)


@dataclass(frozen=True)
class HashGridConfig:
    levels: int = 16
    r_min: int = 16
    r_max: int = 1024
    table_size: int = 2**16
    feature_dim: int = 4
    primes: tuple[int, int, int] = PRIMES
    # hash every level, including coarse ones that would fit a dense table
    always_hash: bool = False
    init_scale: float = 1e-4

    def __post_init__(self):
        if self.levels < 2:
            raise ConfigError("a hash grid needs at least two levels")
        if self.r_min < 1 or self.r_max <= self.r_min:
            raise ConfigError(f"resolutions must satisfy 1 <= r_min < r_max, got {self.r_min}, {self.r_max}")
        if self.table_size < 1 or self.table_size & (self.table_size - 1):
            raise ConfigError(f"table_size must be a power of two, got {self.table_size}")
        if self.feature_dim < 1:
            raise ConfigError("feature_dim must be >= 1")
        if len(self.primes) != 3:
            raise ConfigError("exactly three hashing multipliers are required")

    @property
    def descriptor_dim(self) -> int:
        return self.levels * self.feature_dim


@dataclass
class HashGrid:
    config: HashGridConfig
    tables: np.ndarray
    # row 0 is the lower corner, row 1 the upper corner
    bbox: np.ndarray

    def __post_init__(self):
        cfg = self.config
        expected = (cfg.levels, cfg.table_size, cfg.feature_dim)
        if self.tables.shape != expected:
            raise ShapeMismatch(f"tables have shape {self.tables.shape}, expected {expected}")
        self.bbox = np.asarray(self.bbox, dtype=np.float32).reshape(2, 3)
        if np.any(self.bbox[1] <= self.bbox[0]):
            raise ShapeMismatch("bounding box must have positive extent on every axis")

    def copy(self) -> "HashGrid":
        return HashGrid(self.config, self.tables.copy(), self.bbox.copy())
