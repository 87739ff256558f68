"""Structural attacks on a stego asset. Every attack returns a new cloud."""

import logging
import math

import numpy as np

from attacks.models import AttackKind, AttackSpec, check_ratio
from gs_model.models import GaussianCloud
from splat_render.models import Camera
from splat_render.rasterizer import raw_visibility

logger = logging.getLogger(__name__)


def prune_lowest(cloud: GaussianCloud, scores: np.ndarray, ratio: float) -> GaussianCloud:
    """Drop the ``floor(N * ratio)`` lowest-scoring primitives; on ties the higher index goes first."""
    ratio = check_ratio(ratio)
    n = len(cloud)
    count = math.floor(n * ratio)
    if count == 0:
        return cloud
    order = np.lexsort((-np.arange(n), np.asarray(scores, dtype=np.float64)))
    keep = np.sort(order[count:])
    logger.info("pruned %d of %d primitives", count, n)
    return cloud.subset(keep)


def opacity_prune(cloud: GaussianCloud, ratio: float) -> GaussianCloud:
    return prune_lowest(cloud, cloud.opacities, ratio)


def contribution_prune(cloud: GaussianCloud, cameras: list[Camera], ratio: float, threads: int | None = None) -> GaussianCloud:
    check_ratio(ratio)
    return prune_lowest(cloud, raw_visibility(cloud, cameras, threads), ratio)


def sh_noise(cloud: GaussianCloud, sigma: float, seed: int = 0) -> GaussianCloud:
    """Add i.i.d. ``N(0, sigma^2)`` to every SH coefficient."""
    if sigma == 0:
        return cloud
    noise = np.random.default_rng(seed).normal(0.0, sigma, size=cloud.sh.shape)
    return cloud.replace(sh=(cloud.sh.astype(np.float64) + noise).astype(cloud.sh.dtype))


ATTACKS = {
    AttackKind.OPACITY_PRUNE: lambda cloud, spec, cameras, threads: opacity_prune(cloud, spec.ratio),
    AttackKind.CONTRIBUTION_PRUNE: lambda cloud, spec, cameras, threads: contribution_prune(cloud, cameras, spec.ratio, threads),
    AttackKind.SH_NOISE: lambda cloud, spec, cameras, threads: sh_noise(cloud, spec.sigma, spec.seed),
}


def apply_attack(cloud: GaussianCloud, spec: AttackSpec, cameras: list[Camera] | None = None, threads: int | None = None) -> GaussianCloud:
    return ATTACKS[spec.kind](cloud, spec, cameras or [], threads)
