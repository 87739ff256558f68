from dataclasses import dataclass, field

import numpy as np

from core.exceptions import MalformedRecord, ShapeMismatch

# low-pass added to every projected covariance, in px^2
COVARIANCE_BLUR = 0.3
MAX_DELTA = 0.99
MIN_TRANSMITTANCE = 1e-4
RECORD_FIELDS = ("R", "t", "fx", "fy", "cx", "cy", "w", "h")


@dataclass(frozen=True)
class Camera:
    """Pinhole camera: ``p_cam = rotation @ x + translation``, pixel ``(fx*X/Z + cx, fy*Y/Z + cy)``."""

    rotation: np.ndarray
    translation: np.ndarray
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    near: float = 0.01

    def __post_init__(self):
        rotation = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        translation = np.array(self.translation, dtype=np.float64).reshape(3)
        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)
        if self.fx <= 0 or self.fy <= 0:
            raise ShapeMismatch(f"focal lengths must be positive, got {self.fx}, {self.fy}")
        if int(self.width) < 1 or int(self.height) < 1:
            raise ShapeMismatch(f"image size must be at least 1x1, got {self.width}x{self.height}")
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))

    @property
    def center(self) -> np.ndarray:
        return -self.rotation.T @ self.translation

    @classmethod
    def look_at(cls, eye, target, width: int, height: int, focal: float, up=(0.0, 1.0, 0.0)) -> "Camera":
        """Camera at ``eye`` facing ``target`` with image y pointing away from ``up``."""
        eye = np.asarray(eye, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - eye
        forward = forward / np.linalg.norm(forward)
        up = np.asarray(up, dtype=np.float64)
        down = -up + (up @ forward) * forward
        down = down / np.linalg.norm(down)
        rotation = np.stack([np.cross(down, forward), down, forward])
        return cls(rotation, -rotation @ eye, focal, focal, width / 2, height / 2, width, height)

    def to_record(self) -> dict:
        return {
            "R": self.rotation.ravel().tolist(),
            "t": self.translation.tolist(),
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "w": self.width,
            "h": self.height,
        }

    @classmethod
    def from_record(cls, record: dict) -> "Camera":
        try:
            values = [record[name] for name in RECORD_FIELDS]
        except (KeyError, TypeError) as exc:
            raise MalformedRecord(f"camera record is missing {exc}") from exc
        rotation, translation, fx, fy, cx, cy, width, height = values
        if len(rotation) != 9 or len(translation) != 3:
            raise MalformedRecord("camera record needs 9 rotation and 3 translation values")
        try:
            return cls(rotation, translation, float(fx), float(fy), float(cx), float(cy), int(width), int(height))
        except (TypeError, ValueError) as exc:
            raise MalformedRecord(f"invalid camera record: {exc}") from exc


@dataclass(frozen=True)
class Splat2D:
    mean: np.ndarray
    cov: np.ndarray
    conic: np.ndarray
    depth: float
    # inclusive pixel rectangle (x0, y0, x1, y1), clipped to the image
    rect: tuple[int, int, int, int]
    radius: int
    index: int


@dataclass(frozen=True)
class RenderProduct:
    image: np.ndarray
    # per primitive: sum over pixels of delta * transmittance
    v_raw: np.ndarray
    # per pixel: sum of blend weights, and transmittance left for the background
    accumulated: np.ndarray
    transmittance: np.ndarray
    fingerprint: str = field(repr=False)


@dataclass(frozen=True)
class RenderGradients:
    """Gradients of a scalar loss with respect to activated opacity and SH coefficients."""

    d_opacity: np.ndarray
    d_sh: np.ndarray

    def d_logits(self, opacity_logits: np.ndarray) -> np.ndarray:
        alpha = 1.0 / (1.0 + np.exp(-np.asarray(opacity_logits, dtype=np.float64)))
        return self.d_opacity * alpha * (1.0 - alpha)
