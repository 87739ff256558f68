import math
from dataclasses import dataclass
from enum import Enum

from core.exceptions import ConfigError, IndexOutOfRange, ShiftOverflow


class BitMode(Enum):
    QUANTIZED_INTEGER = "quantized-integer"
    FLOAT_BIT_PATTERN = "float-bit-pattern"


@dataclass(frozen=True)
class QuantParams:
    """Lattice ``c_min + q * delta`` for ``q`` in ``[0, 2**gamma_bits)``."""

    c_min: float = -8.0
    delta: float = 2.0**-20
    gamma_bits: int = 24

    def __post_init__(self):
        if self.gamma_bits not in (24, 32):
            raise ConfigError(f"gamma_bits must be 24 or 32, got {self.gamma_bits}")
        if self.delta <= 0 or math.frexp(self.delta)[0] != 0.5:
            raise ConfigError(f"delta must be a power of two, got {self.delta}")

    @property
    def levels(self) -> int:
        return 1 << self.gamma_bits

    @property
    def c_max(self) -> float:
        """Exclusive upper bound of the representable range."""
        return self.c_min + self.levels * self.delta


@dataclass(frozen=True)
class BitPlan:
    k: int = 13
    n: int = 16
    gamma_bits: int = 24
    mode: BitMode = BitMode.QUANTIZED_INTEGER
    # False gives the uniform-shift ablation: every coefficient uses shift k
    graded: bool = True

    def __post_init__(self):
        if math.isqrt(self.n) ** 2 != self.n or self.n < 1:
            raise ConfigError(f"n must be a perfect square, got {self.n}")
        if self.k < 0 or self.gamma_bits < 1:
            raise ConfigError("k must be >= 0 and gamma_bits >= 1")
        if self.mode is BitMode.FLOAT_BIT_PATTERN and self.gamma_bits != 32:
            raise ConfigError("float-bit-pattern mode works on 32-bit patterns")

    def freq_order(self, j: int) -> int:
        if not 0 <= j < self.n:
            raise IndexOutOfRange(f"coefficient index {j} outside [0, {self.n})")
        return math.isqrt(j)

    def shift(self, j: int) -> int:
        shift = self.k + (self.freq_order(j) if self.graded else 0)
        if shift >= self.gamma_bits:
            raise ShiftOverflow(f"shift {shift} for j={j} does not fit {self.gamma_bits} bits")
        return shift

    def validate(self) -> None:
        for j in range(self.n):
            self.shift(j)
