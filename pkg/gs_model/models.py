"""Domain types of 3DGS assets.

A cloud is stored structure-of-arrays: primitive ``i`` is row ``i`` of every array.
SH coefficients are ``(N, 16, 3)``: row ``j`` is the basis index, column the colour channel.
"""

from dataclasses import dataclass, field, replace
from typing import Iterator

import numpy as np

from core.exceptions import IndexOutOfRange, NonFiniteValue, ShapeMismatch

SH_COEFFS = 16
MAX_SH_DEGREE = 3
QUATERNION_TOLERANCE = 1e-4
# float32 quaternions closer than this to unit norm are kept bit-for-bit
RENORMALIZE_EPS = 1e-6


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.clip(np.asarray(x, dtype=np.float64), -500.0, 500.0)))


def inverse_sigmoid(p):
    p = np.asarray(p, dtype=np.float64)
    return np.log(p / (1.0 - p))


def _frozen(values, shape: tuple, name: str) -> np.ndarray:
    array = np.array(values, copy=True)
    if not np.issubdtype(array.dtype, np.floating):
        array = array.astype(np.float64)
    if array.shape[1:] != shape[1:] or (shape[0] is not None and array.shape[0] != shape[0]):
        raise ShapeMismatch(f"{name} has shape {array.shape}, expected {shape}")
    bad = ~np.isfinite(array.reshape(array.shape[0], -1)).all(axis=1) if array.size else np.zeros(0, bool)
    if bad.any():
        raise NonFiniteValue(f"non-finite {name}", int(np.flatnonzero(bad)[0]))
    array.setflags(write=False)
    return array


def normalize_quaternions(rotations: np.ndarray) -> np.ndarray:
    rotations = np.asarray(rotations)
    norms = np.linalg.norm(rotations.astype(np.float64), axis=1)
    zero = norms == 0.0
    if zero.any():
        raise NonFiniteValue("zero quaternion cannot be normalized", int(np.flatnonzero(zero)[0]))
    off = np.abs(norms - 1.0) > RENORMALIZE_EPS
    if not off.any():
        return rotations
    fixed = rotations.astype(np.float64, copy=True)
    fixed[off] /= norms[off, None]
    return fixed.astype(rotations.dtype)


@dataclass(frozen=True)
class GaussianPrimitive:
    position: np.ndarray
    rotation: np.ndarray
    log_scale: np.ndarray
    opacity_logit: float
    sh: np.ndarray

    @property
    def opacity(self) -> float:
        return float(sigmoid(self.opacity_logit))

    @property
    def scale(self) -> np.ndarray:
        return np.exp(np.asarray(self.log_scale, dtype=np.float64))


@dataclass(frozen=True)
class Geometry:
    positions: np.ndarray
    rotations: np.ndarray
    log_scales: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "positions", _frozen(self.positions, (None, 3), "positions"))
        n = len(self.positions)
        if n < 1:
            raise ShapeMismatch("a cloud needs at least one primitive")
        rotations = normalize_quaternions(_frozen(self.rotations, (n, 4), "rotations"))
        object.__setattr__(self, "rotations", _frozen(rotations, (n, 4), "rotations"))
        object.__setattr__(self, "log_scales", _frozen(self.log_scales, (n, 3), "log_scales"))

    def __len__(self) -> int:
        return len(self.positions)

    def subset(self, indices) -> "Geometry":
        return Geometry(self.positions[indices], self.rotations[indices], self.log_scales[indices])


@dataclass(frozen=True)
class GaussianCloud:
    positions: np.ndarray
    rotations: np.ndarray
    log_scales: np.ndarray
    opacity_logits: np.ndarray
    sh: np.ndarray
    sh_degree: int = MAX_SH_DEGREE

    def __post_init__(self):
        geometry = Geometry(self.positions, self.rotations, self.log_scales)
        n = len(geometry)
        object.__setattr__(self, "positions", geometry.positions)
        object.__setattr__(self, "rotations", geometry.rotations)
        object.__setattr__(self, "log_scales", geometry.log_scales)
        object.__setattr__(self, "opacity_logits", _frozen(self.opacity_logits, (n,), "opacity_logits"))
        object.__setattr__(self, "sh", _frozen(self.sh, (n, SH_COEFFS, 3), "sh"))
        if not 0 <= int(self.sh_degree) <= MAX_SH_DEGREE:
            raise ShapeMismatch(f"sh_degree must be in [0, {MAX_SH_DEGREE}], got {self.sh_degree}")
        object.__setattr__(self, "sh_degree", int(self.sh_degree))

    @classmethod
    def from_parts(cls, geometry: Geometry, opacity_logits, sh, sh_degree: int = MAX_SH_DEGREE) -> "GaussianCloud":
        return cls(geometry.positions, geometry.rotations, geometry.log_scales, opacity_logits, sh, sh_degree)

    def __len__(self) -> int:
        return len(self.positions)

    def __iter__(self) -> Iterator[GaussianPrimitive]:
        return (self.primitive(i) for i in range(len(self)))

    def primitive(self, i: int) -> GaussianPrimitive:
        if not 0 <= i < len(self):
            raise IndexOutOfRange(f"primitive {i} out of range for cloud of {len(self)}")
        return GaussianPrimitive(
            self.positions[i], self.rotations[i], self.log_scales[i], float(self.opacity_logits[i]), self.sh[i]
        )

    @property
    def geometry(self) -> Geometry:
        return Geometry(self.positions, self.rotations, self.log_scales)

    @property
    def opacities(self) -> np.ndarray:
        return sigmoid(self.opacity_logits)

    def replace(self, **changes) -> "GaussianCloud":
        return replace(self, **changes)

    def subset(self, indices) -> "GaussianCloud":
        indices = np.asarray(indices)
        return GaussianCloud(
            self.positions[indices],
            self.rotations[indices],
            self.log_scales[indices],
            self.opacity_logits[indices],
            self.sh[indices],
            self.sh_degree,
        )

    def astype(self, dtype) -> "GaussianCloud":
        return GaussianCloud(
            self.positions.astype(dtype),
            self.rotations.astype(dtype),
            self.log_scales.astype(dtype),
            self.opacity_logits.astype(dtype),
            self.sh.astype(dtype),
            self.sh_degree,
        )


@dataclass(frozen=True)
class AttributeSet:
    opacity_logits: np.ndarray
    sh: np.ndarray

    def __post_init__(self):
        logits = _frozen(self.opacity_logits, (None,), "opacity_logits")
        object.__setattr__(self, "opacity_logits", logits)
        object.__setattr__(self, "sh", _frozen(self.sh, (len(logits), SH_COEFFS, 3), "sh"))

    @property
    def opacities(self) -> np.ndarray:
        return sigmoid(self.opacity_logits)


@dataclass(frozen=True)
class DualCloud:
    """Shared geometry with a public (scene) and a hidden (message) attribute set."""

    geometry: Geometry
    scene: AttributeSet
    message: AttributeSet
    sh_degree: int = MAX_SH_DEGREE

    def __post_init__(self):
        n = len(self.geometry)
        for name, attrs in (("scene", self.scene), ("message", self.message)):
            if len(attrs.opacity_logits) != n:
                raise ShapeMismatch(f"{name} attributes cover {len(attrs.opacity_logits)} primitives, geometry has {n}")

    def __len__(self) -> int:
        return len(self.geometry)

    def scene_cloud(self) -> GaussianCloud:
        return GaussianCloud.from_parts(self.geometry, self.scene.opacity_logits, self.scene.sh, self.sh_degree)

    def message_cloud(self) -> GaussianCloud:
        return GaussianCloud.from_parts(self.geometry, self.message.opacity_logits, self.message.sh, self.sh_degree)


@dataclass(frozen=True)
class ActivatedView:
    alpha: np.ndarray = field(repr=False)
    scale: np.ndarray = field(repr=False)


def activated_view(cloud: GaussianCloud) -> ActivatedView:
    return ActivatedView(alpha=sigmoid(cloud.opacity_logits), scale=np.exp(cloud.log_scales.astype(np.float64)))
