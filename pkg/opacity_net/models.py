from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from core.exceptions import ConfigError, NonFiniteValue, ShapeMismatch
from hash_grid.models import HashGrid
from sh_codec.models import BitPlan, QuantParams

# descriptor + public opacity + three DC coefficients
EXTRA_INPUTS = 4
KEY_VERSION = 1


class Encoder(Enum):
    HASH_GRID = "hashgrid"
    # position-free ablation: only public opacity and DC reach the MLP
    NONE = "none"


@dataclass
class MlpWeights:
    """Dense layers ``x @ W + b``; ReLU between layers and a sigmoid head."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if not self.weights or len(self.weights) != len(self.biases):
            raise ShapeMismatch("an MLP needs one bias per weight matrix")
        for index, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ShapeMismatch(f"layer {index}: weight {w.shape} and bias {b.shape} do not match")
            if index and self.weights[index - 1].shape[1] != w.shape[0]:
                raise ShapeMismatch(f"layer {index} expects {w.shape[0]} inputs, previous layer gives {self.weights[index - 1].shape[1]}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NonFiniteValue(f"layer {index} holds non-finite parameters", index)

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def astype(self, dtype) -> "MlpWeights":
        return MlpWeights([w.astype(dtype) for w in self.weights], [b.astype(dtype) for b in self.biases])

    def copy(self) -> "MlpWeights":
        return self.astype(self.weights[0].dtype)


@dataclass(frozen=True)
class MappingConfig:
    encoder: Encoder = Encoder.HASH_GRID
    hidden: tuple[int, ...] = (64, 64)
    epochs: int = 4000
    lr: float = 5e-3
    seed: int = 0
    log_every: int = 500

    def __post_init__(self):
        if self.epochs < 1 or self.lr <= 0:
            raise ConfigError("mapping training needs epochs >= 1 and lr > 0")
        if not self.hidden or min(self.hidden) < 1:
            raise ConfigError(f"hidden layer widths must be positive, got {self.hidden}")


@dataclass(frozen=True)
class TrainingFingerprint:
    seed: int
    epochs: int
    final_loss: float


@dataclass
class StegoKey:
    plan: BitPlan
    quant: QuantParams
    encoder: Encoder
    grid: HashGrid | None
    mlp: MlpWeights
    fingerprint: TrainingFingerprint
    version: int = KEY_VERSION

    def __post_init__(self):
        if (self.grid is None) != (self.encoder is Encoder.NONE):
            raise ShapeMismatch(f"encoder {self.encoder.value} does not match the presence of a hash grid")
        if self.mlp.dims[0] != self.input_dim:
            raise ShapeMismatch(f"MLP takes {self.mlp.dims[0]} inputs, mapping produces {self.input_dim}")

    @property
    def input_dim(self) -> int:
        descriptor = 0 if self.grid is None else self.grid.config.descriptor_dim
        return descriptor + EXTRA_INPUTS


@dataclass
class AdamState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first: list[np.ndarray] = field(default_factory=list)
    second: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: list[np.ndarray], lr: float, **kwargs) -> "AdamState":
        return cls(lr, first=[np.zeros_like(p) for p in params], second=[np.zeros_like(p) for p in params], **kwargs)
