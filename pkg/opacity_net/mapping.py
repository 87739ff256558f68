"""Opacity mapping: hash-grid descriptor + public appearance -> hidden opacity.

The mapping is trained full batch on a frozen DualCloud and shipped inside the StegoKey.
Recovery runs the same feature construction on a stego asset.
"""

import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import DivergenceDetected, IndexOutOfRange, ShapeMismatch
from core.progress import progress
from gs_model.models import DualCloud, GaussianCloud, inverse_sigmoid, sigmoid
from hash_grid.encoding import bbox_for, compact, init_grid, interpolate, locate, scatter
from hash_grid.models import HashGrid, HashGridConfig
from opacity_net.mlp import forward, init_mlp, mlp_backward
from opacity_net.models import EXTRA_INPUTS, AdamState, Encoder, MappingConfig, MlpWeights, StegoKey
from opacity_net.optim import adam_step
from sh_codec.codec import extract_cloud

logger = logging.getLogger(__name__)

OPACITY_EPS = 1e-6


@dataclass(frozen=True)
class MappingResult:
    grid: HashGrid | None
    mlp: MlpWeights
    final_loss: float
    history: list[float]


def appearance_inputs(opacity_logits: np.ndarray, sh: np.ndarray) -> np.ndarray:
    """Activated public opacity followed by the three DC coefficients, ``(N, 4)``."""
    alpha = sigmoid(opacity_logits)[:, None]
    return np.hstack([alpha, np.asarray(sh, dtype=np.float64)[:, 0, :]])


def mapping_inputs(positions: np.ndarray, opacity_logits: np.ndarray, sh: np.ndarray, grid: HashGrid | None) -> np.ndarray:
    extra = appearance_inputs(opacity_logits, sh)
    if grid is None:
        return extra
    return np.hstack([interpolate(grid.tables, locate(positions, grid)), extra])


def build_input(i: int, cloud: DualCloud, grid: HashGrid | None) -> np.ndarray:
    if not 0 <= i < len(cloud):
        raise IndexOutOfRange(f"primitive {i} outside [0, {len(cloud)})")
    positions = cloud.geometry.positions[i : i + 1]
    return mapping_inputs(positions, cloud.scene.opacity_logits[i : i + 1], cloud.scene.sh[i : i + 1], grid)[0]


def init_mapping(cfg: MappingConfig, grid_config: HashGridConfig, bbox: np.ndarray, rng: np.random.Generator):
    grid = None
    if cfg.encoder is Encoder.HASH_GRID:
        grid = init_grid(grid_config, bbox, rng)
    descriptor = 0 if grid is None else grid_config.descriptor_dim
    mlp = init_mlp((descriptor + EXTRA_INPUTS, *cfg.hidden, 1), rng)
    return grid, mlp


def train_mapping(
    dual: DualCloud,
    cfg: MappingConfig = MappingConfig(),
    grid_config: HashGridConfig = HashGridConfig(),
    public_sh: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
) -> MappingResult:
    """Fit tables and MLP so the mapping predicts the message opacity from public attributes.

    ``public_sh`` overrides the scene SH used as input; callers pass the stego SH so recovery
    sees exactly the training inputs.
    """
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    positions = np.asarray(dual.geometry.positions, dtype=np.float64)
    public_sh = dual.scene.sh if public_sh is None else public_sh
    if np.shape(public_sh) != dual.scene.sh.shape:
        raise ShapeMismatch(f"public SH shape {np.shape(public_sh)} does not match the cloud")
    targets = np.clip(dual.message.opacities, OPACITY_EPS, 1.0 - OPACITY_EPS)
    extra = appearance_inputs(dual.scene.opacity_logits, public_sh)

    grid, mlp = init_mapping(cfg, grid_config, bbox_for(positions), rng)
    tables, corners, rows = [], None, []
    if grid is not None:
        corners, rows = compact(locate(positions, grid))
        tables = [grid.tables[level, level_rows].copy() for level, level_rows in enumerate(rows)]
    params = tables + mlp.params()
    state = AdamState.for_params(params, cfg.lr)

    n = len(targets)
    descriptor_dim = 0 if grid is None else grid.config.descriptor_dim
    history = []

    def inputs():
        if grid is None:
            return extra
        return np.hstack([interpolate(tables, corners), extra])

    for epoch in progress(range(cfg.epochs), desc="mapping"):
        cache = forward(inputs(), mlp)
        residual = cache.output - targets
        loss = float(np.mean(residual**2))
        if not np.isfinite(loss):
            raise DivergenceDetected(f"mapping loss became non-finite at epoch {epoch}")
        history.append(loss)
        if cfg.log_every and epoch % cfg.log_every == 0:
            logger.info("mapping epoch %d: mse %.3e", epoch, loss)

        mlp_grads, input_grads = mlp_backward(cache, mlp, 2.0 * residual / n)
        table_grads = []
        if grid is not None:
            table_grads = scatter(corners, input_grads[:, :descriptor_dim], grid.config.feature_dim).values
        adam_step(params, table_grads + mlp_grads, state)

    final_loss = float(np.mean((forward(inputs(), mlp).output - targets) ** 2))
    if not np.isfinite(final_loss):
        raise DivergenceDetected("mapping loss became non-finite after the last update")
    logger.info("mapping trained for %d epochs: final mse %.3e", cfg.epochs, final_loss)

    trained = None
    if grid is not None:
        trained = grid.copy()
        for level, level_rows in enumerate(rows):
            trained.tables[level, level_rows] = tables[level]
    return MappingResult(trained, mlp, final_loss, history)


def recover_opacity(stego: GaussianCloud, key: StegoKey) -> np.ndarray:
    """Hidden opacity estimate in ``[1e-6, 1 - 1e-6]`` for every primitive of ``stego``."""
    grid = key.grid
    if grid is not None:
        grid = HashGrid(grid.config, np.asarray(grid.tables, dtype=np.float64), grid.bbox)
    features = mapping_inputs(stego.positions, stego.opacity_logits, stego.sh, grid)
    if features.shape[1] != key.mlp.dims[0]:
        raise ShapeMismatch(f"key expects {key.mlp.dims[0]} mapping inputs, asset gives {features.shape[1]}")
    alpha = forward(features, key.mlp.astype(np.float64)).output
    return np.clip(alpha, OPACITY_EPS, 1.0 - OPACITY_EPS)


def reveal(stego: GaussianCloud, key: StegoKey) -> GaussianCloud:
    """Hidden cloud: stego geometry, extracted SH and recovered opacity (stored as logits)."""
    sh = extract_cloud(stego, key.plan, key.quant)
    logits = inverse_sigmoid(recover_opacity(stego, key))
    return stego.replace(opacity_logits=logits, sh=sh)
