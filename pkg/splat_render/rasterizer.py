"""Tile-based CPU rasterizer with exact front-to-back compositing and its reverse pass.

Splats are sorted once per view by (depth, primitive index). Every pixel composites the
splats whose rectangle contains it, in that global order, so tiling changes nothing but
the amount of work. Only opacity and SH coefficients receive gradients.
"""

import hashlib
import logging
import struct
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from core.exceptions import EmptyViews, ShapeMismatch, StaleProduct
from core.parallel import ordered_map
from gs_model.models import GaussianCloud, sigmoid
from splat_render.models import MAX_DELTA, MIN_TRANSMITTANCE, Camera, RenderGradients, RenderProduct
from splat_render.projection import project
from splat_render.sh import sh_basis

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class _Scene:
    """Visible splats of one view in compositing order."""

    indices: np.ndarray
    means: np.ndarray
    conics: np.ndarray
    radii: np.ndarray
    rects: np.ndarray
    alphas: np.ndarray
    basis: np.ndarray
    raw_colors: np.ndarray
    colors: np.ndarray


@dataclass(frozen=True)
class _Blend:
    local: np.ndarray
    pixels: tuple[np.ndarray, np.ndarray]
    gauss: np.ndarray
    delta: np.ndarray
    unclamped: np.ndarray
    before: np.ndarray
    weights: np.ndarray
    final: np.ndarray


def _background(background) -> np.ndarray:
    return np.broadcast_to(np.asarray(background, dtype=np.float64), (3,)).copy()


def fingerprint(cloud: GaussianCloud, cam: Camera, background) -> str:
    digest = hashlib.sha256()
    for array in (cloud.positions, cloud.rotations, cloud.log_scales, cloud.opacity_logits, cloud.sh):
        digest.update(str(array.dtype).encode())
        digest.update(np.ascontiguousarray(array).tobytes())
    digest.update(struct.pack("<i", cloud.sh_degree))
    digest.update(cam.rotation.tobytes() + cam.translation.tobytes())
    digest.update(struct.pack("<5d2i", cam.fx, cam.fy, cam.cx, cam.cy, cam.near, cam.width, cam.height))
    digest.update(_background(background).tobytes())
    return digest.hexdigest()


def _prepare(cloud: GaussianCloud, cam: Camera) -> _Scene:
    proj = project(cloud.positions, cloud.rotations, cloud.log_scales, cam)
    order = np.lexsort((proj.indices, proj.depths))
    indices = proj.indices[order]
    dirs = np.asarray(cloud.positions, dtype=np.float64)[indices] - cam.center
    dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-12)
    coeffs = (cloud.sh_degree + 1) ** 2
    basis = sh_basis(dirs)[:, :coeffs]
    raw = 0.5 + np.einsum("mj,mjc->mc", basis, np.asarray(cloud.sh, dtype=np.float64)[indices, :coeffs])
    return _Scene(
        indices,
        proj.means[order],
        proj.conics[order],
        proj.radii[order],
        proj.rects[order],
        sigmoid(cloud.opacity_logits[indices]),
        basis,
        raw,
        np.clip(raw, 0.0, 1.0),
    )


def _tiles(cam: Camera, tile_size: int | None) -> list[tuple[int, int, int, int]]:
    size = tile_size or settings.SPLAT_TILE_SIZE
    return [
        (y0, min(y0 + size, cam.height), x0, min(x0 + size, cam.width))
        for y0 in range(0, cam.height, size)
        for x0 in range(0, cam.width, size)
    ]


def _blend(scene: _Scene, tile: tuple[int, int, int, int]) -> _Blend:
    y0, y1, x0, x1 = tile
    rects = scene.rects
    local = np.flatnonzero((rects[:, 0] < x1) & (rects[:, 2] >= x0) & (rects[:, 1] < y1) & (rects[:, 3] >= y0))
    ys, xs = np.mgrid[y0:y1, x0:x1]
    dx = xs.reshape(-1, 1) - scene.means[local, 0]
    dy = ys.reshape(-1, 1) - scene.means[local, 1]
    radii = scene.radii[local]
    inside = (np.abs(dx) <= radii) & (np.abs(dy) <= radii)
    conic = scene.conics[local]
    power = -0.5 * (conic[:, 0, 0] * dx * dx + 2.0 * conic[:, 0, 1] * dx * dy + conic[:, 1, 1] * dy * dy)
    gauss = np.where(inside, np.exp(np.minimum(power, 0.0)), 0.0)
    raw_delta = scene.alphas[local] * gauss
    delta = np.minimum(raw_delta, MAX_DELTA)
    survive = 1.0 - delta
    before = np.ones_like(delta)
    if local.size:
        before[:, 1:] = np.cumprod(survive, axis=1)[:, :-1]
    include = before >= MIN_TRANSMITTANCE
    weights = np.where(include, delta * before, 0.0)
    final = np.where(include, survive, 1.0).prod(axis=1)
    return _Blend(local, (ys.ravel(), xs.ravel()), gauss, delta, include & (raw_delta < MAX_DELTA), np.where(include, before, 0.0), weights, final)


def render(
    cloud: GaussianCloud, cam: Camera, background=(0.0, 0.0, 0.0), threads: int | None = None, tile_size: int | None = None
) -> RenderProduct:
    bg = _background(background)
    scene = _prepare(cloud, cam)

    def composite(tile):
        blend = _blend(scene, tile)
        color = blend.weights @ scene.colors[blend.local] + blend.final[:, None] * bg
        return blend.local, blend.pixels, color, blend.weights.sum(axis=0), blend.weights.sum(axis=1), blend.final

    image = np.zeros((cam.height, cam.width, 3))
    accumulated = np.zeros((cam.height, cam.width))
    transmittance = np.ones((cam.height, cam.width))
    v_raw = np.zeros(len(cloud))
    for local, (ys, xs), color, v, acc, final in ordered_map(composite, _tiles(cam, tile_size), threads):
        image[ys, xs] = color
        accumulated[ys, xs] = acc
        transmittance[ys, xs] = final
        v_raw[scene.indices[local]] += v
    return RenderProduct(image, v_raw, accumulated, transmittance, fingerprint(cloud, cam, bg))


def render_backward(
    product: RenderProduct,
    cloud: GaussianCloud,
    cam: Camera,
    upstream: np.ndarray,
    background=(0.0, 0.0, 0.0),
    threads: int | None = None,
    tile_size: int | None = None,
) -> RenderGradients:
    """Gradients of ``sum(upstream * image)`` with respect to activated opacity and SH."""
    bg = _background(background)
    if product.fingerprint != fingerprint(cloud, cam, bg):
        raise StaleProduct("render product does not belong to this cloud, camera and background")
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != product.image.shape:
        raise ShapeMismatch(f"upstream gradient has shape {upstream.shape}, image is {product.image.shape}")
    scene = _prepare(cloud, cam)

    def reverse(tile):
        blend = _blend(scene, tile)
        grad = upstream[blend.pixels]
        colors = scene.colors[blend.local]
        d_color = blend.weights.T @ grad
        weighted = blend.weights[:, :, None] * colors[None]
        # light arriving from everything behind splat k, background included
        behind = weighted.sum(axis=1, keepdims=True) - np.cumsum(weighted, axis=1) + blend.final[:, None, None] * bg
        d_delta = blend.before[:, :, None] * colors[None] - behind / (1.0 - blend.delta)[:, :, None]
        d_delta = np.where(blend.before > 0, np.einsum("pkc,pc->pk", d_delta, grad), 0.0)
        d_alpha = (d_delta * blend.gauss * blend.unclamped).sum(axis=0)
        return blend.local, d_alpha, d_color

    d_alpha_sorted = np.zeros(len(scene.indices))
    d_color_sorted = np.zeros((len(scene.indices), 3))
    for local, d_alpha, d_color in ordered_map(reverse, _tiles(cam, tile_size), threads):
        d_alpha_sorted[local] += d_alpha
        d_color_sorted[local] += d_color

    d_opacity = np.zeros(len(cloud))
    d_opacity[scene.indices] = d_alpha_sorted
    d_sh = np.zeros((len(cloud), cloud.sh.shape[1], 3))
    active = (scene.raw_colors > 0.0) & (scene.raw_colors < 1.0)
    d_sh[scene.indices, : scene.basis.shape[1]] = scene.basis[:, :, None] * (d_color_sorted * active)[:, None, :]
    return RenderGradients(d_opacity, d_sh)


def render_views(cloud: GaussianCloud, cameras: list[Camera], background=(0.0, 0.0, 0.0), threads: int | None = None) -> list[np.ndarray]:
    return [render(cloud, cam, background, threads).image for cam in cameras]


def raw_visibility(cloud: GaussianCloud, cameras: list[Camera], threads: int | None = None) -> np.ndarray:
    if not cameras:
        raise EmptyViews("visibility needs at least one camera")
    total = np.zeros(len(cloud))
    for cam in cameras:
        total += render(cloud, cam, threads=threads).v_raw
    return total


def visibility_weights(cloud: GaussianCloud, cameras: list[Camera], threads: int | None = None) -> np.ndarray:
    """Accumulated blend weight per primitive over all cameras, scaled so the largest is 1."""
    total = raw_visibility(cloud, cameras, threads)
    peak = total.max()
    if peak <= 0.0:
        return np.zeros_like(total)
    return total / peak
