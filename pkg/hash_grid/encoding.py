"""Multi-resolution hash-grid encoding of positions, with its adjoint for table training."""

import math
from dataclasses import dataclass

import numpy as np

from core.exceptions import IndexOutOfRange, ShapeMismatch
from hash_grid.models import PRIMES, HashGrid, HashGridConfig

BBOX_MARGIN = 0.05
# corner c of a cell sits at offset (c & 1, (c >> 1) & 1, (c >> 2) & 1)
CORNER_OFFSETS = np.array([[c & 1, (c >> 1) & 1, (c >> 2) & 1] for c in range(8)], dtype=np.int64)


@dataclass(frozen=True)
class Corners:
    """Table rows and trilinear weights touched by a batch of positions, per level: ``(L, N, 8)``."""

    indices: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class TableGradient:
    """Sparse gradient: for each level the sorted unique rows touched and their ``(rows, F)`` values."""

    rows: list[np.ndarray]
    values: list[np.ndarray]

    def dense(self, config: HashGridConfig) -> np.ndarray:
        grad = np.zeros((config.levels, config.table_size, config.feature_dim))
        for level, (rows, values) in enumerate(zip(self.rows, self.values)):
            grad[level, rows] = values
        return grad


def level_resolution(level: int, cfg: HashGridConfig) -> int:
    if not 0 <= level < cfg.levels:
        raise IndexOutOfRange(f"level {level} outside [0, {cfg.levels})")
    growth = math.exp((math.log(cfg.r_max) - math.log(cfg.r_min)) / (cfg.levels - 1))
    # the epsilon keeps exact products such as 16 * 64 from flooring to 1023
    return math.floor(cfg.r_min * growth**level + 1e-9)


def hash_index(v, table_size: int, primes=PRIMES):
    """Spatial hash ``(v0*p0 ^ v1*p1 ^ v2*p2) mod T`` in 64-bit wrapping arithmetic."""
    v = np.asarray(v, dtype=np.uint64)
    with np.errstate(over="ignore"):
        mixed = v[..., 0] * np.uint64(primes[0])
        mixed = mixed ^ (v[..., 1] * np.uint64(primes[1]))
        mixed = mixed ^ (v[..., 2] * np.uint64(primes[2]))
    index = mixed % np.uint64(table_size)
    return int(index) if index.ndim == 0 else index.astype(np.int64)


def bbox_for(positions: np.ndarray, margin: float = BBOX_MARGIN) -> np.ndarray:
    positions = np.asarray(positions, dtype=np.float64)
    low, high = positions.min(axis=0), positions.max(axis=0)
    pad = np.maximum(high - low, 1e-6) * margin
    return np.stack([low - pad, high + pad]).astype(np.float32)


def normalize(positions: np.ndarray, bbox: np.ndarray) -> np.ndarray:
    bbox = np.asarray(bbox, dtype=np.float64)
    unit = (np.asarray(positions, dtype=np.float64) - bbox[0]) / (bbox[1] - bbox[0])
    return np.clip(unit, 0.0, 1.0)


def init_grid(cfg: HashGridConfig, bbox: np.ndarray, rng: np.random.Generator) -> HashGrid:
    tables = rng.uniform(-cfg.init_scale, cfg.init_scale, size=(cfg.levels, cfg.table_size, cfg.feature_dim))
    return HashGrid(cfg, tables, bbox)


def _vertex_rows(vertices: np.ndarray, resolution: int, cfg: HashGridConfig) -> np.ndarray:
    side = resolution + 1
    if not cfg.always_hash and side**3 <= cfg.table_size:
        return vertices[..., 0] + side * vertices[..., 1] + side * side * vertices[..., 2]
    return hash_index(vertices, cfg.table_size, cfg.primes)


def locate(positions: np.ndarray, grid: HashGrid) -> Corners:
    cfg = grid.config
    unit = normalize(np.atleast_2d(positions), grid.bbox)
    indices = np.empty((cfg.levels, len(unit), 8), dtype=np.int64)
    weights = np.empty((cfg.levels, len(unit), 8))
    for level in range(cfg.levels):
        resolution = level_resolution(level, cfg)
        scaled = unit * resolution
        cell = np.clip(np.floor(scaled), 0, resolution - 1).astype(np.int64)
        frac = scaled - cell
        vertices = cell[:, None, :] + CORNER_OFFSETS[None, :, :]
        indices[level] = _vertex_rows(vertices, resolution, cfg)
        per_axis = np.where(CORNER_OFFSETS[None, :, :] == 1, frac[:, None, :], 1.0 - frac[:, None, :])
        weights[level] = per_axis.prod(axis=2)
    return Corners(indices, weights)


def interpolate(tables, corners: Corners) -> np.ndarray:
    """Descriptors ``(N, L * F)`` for precomputed corners.

    ``tables`` is anything indexable by level yielding ``(rows, F)`` arrays, so compacted
    per-level tables (see ``compact``) work as well as the full ``(L, T, F)`` block.
    """
    levels, n, _ = corners.indices.shape
    features = np.empty((n, levels, tables[0].shape[1]))
    for level in range(levels):
        fetched = tables[level][corners.indices[level]]
        features[:, level, :] = np.einsum("nc,ncf->nf", corners.weights[level], fetched)
    return features.reshape(n, -1)


def scatter(corners: Corners, upstream: np.ndarray, feature_dim: int) -> TableGradient:
    """Adjoint of ``interpolate``: rows are merged in sorted order so the sum is reproducible."""
    levels, n, _ = corners.indices.shape
    upstream = np.asarray(upstream, dtype=np.float64).reshape(n, levels, feature_dim)
    rows, values = [], []
    for level in range(levels):
        flat_rows = corners.indices[level].ravel()
        contributions = (corners.weights[level][:, :, None] * upstream[:, level, None, :]).reshape(-1, feature_dim)
        unique, inverse = np.unique(flat_rows, return_inverse=True)
        summed = np.zeros((len(unique), feature_dim))
        np.add.at(summed, inverse, contributions)
        rows.append(unique)
        values.append(summed)
    return TableGradient(rows, values)


def compact(corners: Corners) -> tuple[Corners, list[np.ndarray]]:
    """Renumber touched rows per level to ``0..k-1``.

    Returns the renumbered corners and, per level, the original table rows in sorted order.
    For a fixed batch, training only ever touches these rows.
    """
    indices = np.empty_like(corners.indices)
    rows = []
    for level in range(corners.indices.shape[0]):
        unique, inverse = np.unique(corners.indices[level], return_inverse=True)
        indices[level] = inverse.reshape(corners.indices[level].shape)
        rows.append(unique)
    return Corners(indices, corners.weights), rows


def encode(x: np.ndarray, grid: HashGrid) -> np.ndarray:
    """Descriptor of one position ``(L * F,)`` or of a batch ``(N, L * F)``."""
    x = np.asarray(x, dtype=np.float64)
    descriptors = interpolate(grid.tables, locate(x, grid))
    return descriptors[0] if x.ndim == 1 else descriptors


def encode_backward(x: np.ndarray, grid: HashGrid, upstream: np.ndarray) -> TableGradient:
    x = np.asarray(x, dtype=np.float64)
    upstream = np.asarray(upstream, dtype=np.float64)
    batch = np.atleast_2d(x)
    if upstream.reshape(len(batch), -1).shape[1] != grid.config.descriptor_dim:
        raise ShapeMismatch(f"upstream gradient must have {grid.config.descriptor_dim} entries per position")
    return scatter(locate(batch, grid), upstream, grid.config.feature_dim)
