"""Synthetic scene pairs sharing one geometry, for desk-scale runs and acceptance tests.

Layout written by ``make_fixture``::

    <out>/scene/cameras.json, view_000.png, ...
    <out>/message/cameras.json, view_000.png, ...
    <out>/geometry.ply      fixed geometry, neutral attributes
    <out>/scene_gt.ply      public scene ground truth
    <out>/message_gt.ply    hidden scene ground truth
"""

import logging
from dataclasses import dataclass
from os import PathLike
from pathlib import Path

import numpy as np

from core.exceptions import ConfigError
from gs_model.models import SH_COEFFS, GaussianCloud, Geometry, inverse_sigmoid
from gs_model.ply import save_ply
from splat_render.imageio import save_views
from splat_render.models import Camera
from splat_render.rasterizer import render_views
from splat_render.sh import C0
from stego_train.trainer import initial_attributes

logger = logging.getLogger(__name__)

ORBIT_RADIUS = 3.5
FIELD_OF_VIEW = np.deg2rad(50.0)


@dataclass(frozen=True)
class FixtureSpec:
    primitives: int = 2000
    views: int = 8
    # defaults to ``views``; 1 gives the single-image message case
    message_views: int | None = None
    width: int = 64
    height: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.primitives < 1 or self.views < 1 or (self.message_views is not None and self.message_views < 1):
            raise ConfigError("a fixture needs at least one primitive and one view per scene")
        if min(self.width, self.height) < 11:
            raise ConfigError("fixture views must be at least 11x11 pixels")


def synthetic_geometry(n: int, rng: np.random.Generator) -> Geometry:
    """Primitives filling the unit ball."""
    directions = rng.normal(size=(n, 3))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    positions = directions * rng.uniform(size=(n, 1)) ** (1.0 / 3.0)
    rotations = rng.normal(size=(n, 4))
    rotations /= np.linalg.norm(rotations, axis=1, keepdims=True)
    return Geometry(positions, rotations, np.log(rng.uniform(0.04, 0.09, size=(n, 3))))


def _appearance(colors: np.ndarray, alphas: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n = len(colors)
    sh = np.zeros((n, SH_COEFFS, 3))
    sh[:, 0, :] = (colors - 0.5) / C0
    sh[:, 1:, :] = rng.normal(scale=0.02, size=(n, SH_COEFFS - 1, 3))
    return inverse_sigmoid(alphas), sh


def scene_cloud(geometry: Geometry, rng: np.random.Generator) -> GaussianCloud:
    """Smoothly varying colours and mostly opaque primitives."""
    p = geometry.positions
    colors = 0.5 + 0.35 * np.sin(2.5 * p + np.array([0.0, 2.0, 4.0]))
    logits, sh = _appearance(colors, rng.uniform(0.55, 0.95, size=len(p)), rng)
    return GaussianCloud.from_parts(geometry, logits, sh)


def message_cloud(geometry: Geometry, rng: np.random.Generator) -> GaussianCloud:
    """A different colour field with a half-space opacity pattern."""
    p = geometry.positions
    colors = 0.5 + 0.4 * np.cos(3.0 * p[:, [2, 0, 1]])
    alphas = np.where(p[:, 1] + 0.3 * p[:, 0] > 0.0, 0.9, 0.15)
    logits, sh = _appearance(colors, alphas, rng)
    return GaussianCloud.from_parts(geometry, logits, sh)


def orbit(count: int, width: int, height: int, phase: float = 0.0) -> list[Camera]:
    """Cameras around the origin at alternating elevations."""
    focal = 0.5 * width / np.tan(0.5 * FIELD_OF_VIEW)
    cameras = []
    for i in range(count):
        angle = phase + 2.0 * np.pi * i / count
        elevation = 0.35 if i % 2 == 0 else -0.2
        eye = ORBIT_RADIUS * np.array([np.cos(elevation) * np.sin(angle), np.sin(elevation), -np.cos(elevation) * np.cos(angle)])
        cameras.append(Camera.look_at(eye, np.zeros(3), width, height, focal))
    return cameras


def make_fixture(out_dir: str | PathLike, spec: FixtureSpec = FixtureSpec(), threads: int | None = None) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    geometry = synthetic_geometry(spec.primitives, rng)
    # clouds go through float32 so renders of the saved PLYs match the views exactly
    scene = scene_cloud(geometry, rng).astype(np.float32)
    message = message_cloud(geometry, rng).astype(np.float32)
    neutral = initial_attributes(spec.primitives)

    paths = {
        "scene": out / "scene",
        "message": out / "message",
        "geometry": out / "geometry.ply",
        "scene_gt": out / "scene_gt.ply",
        "message_gt": out / "message_gt.ply",
    }
    scene_cameras = orbit(spec.views, spec.width, spec.height)
    message_cameras = orbit(spec.message_views or spec.views, spec.width, spec.height, phase=np.pi / max(spec.views, 1))
    save_views(paths["scene"], scene_cameras, render_views(scene, scene_cameras, threads=threads))
    save_views(paths["message"], message_cameras, render_views(message, message_cameras, threads=threads))
    save_ply(GaussianCloud.from_parts(scene.geometry, neutral.opacity_logits, neutral.sh), paths["geometry"])
    save_ply(scene, paths["scene_gt"])
    save_ply(message, paths["message_gt"])
    logger.info("wrote fixture with %d primitives and %d/%d views to %s", spec.primitives, len(scene_cameras), len(message_cameras), out)
    return paths
