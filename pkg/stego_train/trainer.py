"""Joint optimisation of the public and hidden attribute sets over fixed geometry."""

import logging
from dataclasses import dataclass
from os import PathLike

import numpy as np
import pandas as pd

from core.exceptions import DivergenceDetected, EmptyViews, IoFailure, ShapeMismatch
from core.progress import progress
from gs_model.models import SH_COEFFS, AttributeSet, DualCloud, GaussianCloud, Geometry, inverse_sigmoid
from opacity_net.models import AdamState
from opacity_net.optim import adam_step
from splat_render.models import Camera
from splat_render.rasterizer import render, render_backward, visibility_weights
from stego_train.losses import consistency_grad, gate, recon_loss_with_grad
from stego_train.models import LossBreakdown, TrainConfig

logger = logging.getLogger(__name__)

INITIAL_OPACITY = 0.1

View = tuple[Camera, np.ndarray]


@dataclass(frozen=True)
class StepGradients:
    """Logit and SH gradients of one iteration, split by the loss term that produced them."""

    scene_logits: np.ndarray
    scene_sh: np.ndarray
    message_logits: np.ndarray
    message_sh: np.ndarray
    cons_scene_logits: np.ndarray
    cons_message_logits: np.ndarray

    @property
    def total(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return (
            self.scene_logits + self.cons_scene_logits,
            self.scene_sh,
            self.message_logits + self.cons_message_logits,
            self.message_sh,
        )


@dataclass(frozen=True)
class TrainResult:
    dual: DualCloud
    history: list[LossBreakdown]


def initial_attributes(n: int) -> AttributeSet:
    """Grey, faint primitives."""
    return AttributeSet(np.full(n, inverse_sigmoid(INITIAL_OPACITY)), np.zeros((n, SH_COEFFS, 3)))


def _check_views(views: list[View], side: str) -> None:
    if not views:
        raise EmptyViews(f"{side} training needs at least one view")
    for index, (cam, image) in enumerate(views):
        if np.shape(image) != (cam.height, cam.width, 3):
            raise ShapeMismatch(f"{side} view {index} is {np.shape(image)}, camera expects {(cam.height, cam.width, 3)}")


def _view_schedule(count: int, iterations: int, seed: int) -> np.ndarray:
    """Shuffled passes over the views; equal seeds and counts give equal schedules."""
    rng = np.random.default_rng(seed)
    passes = -(-iterations // count)
    return np.concatenate([rng.permutation(count) for _ in range(passes)])[:iterations]


def step_gradients(
    scene: GaussianCloud, message: GaussianCloud, scene_view: View, message_view: View, visibility: np.ndarray, cfg: TrainConfig, threads: int | None = None
) -> tuple[tuple[float, float, float], StepGradients]:
    """Losses and gradients of one iteration on one view per side."""
    bg = cfg.background
    cam, target = scene_view
    product = render(scene, cam, bg, threads)
    scene_loss, d_image = recon_loss_with_grad(product.image, target, cfg.ssim_weight)
    scene_grads = render_backward(product, scene, cam, d_image, bg, threads)

    cam, target = message_view
    product = render(message, cam, bg, threads)
    message_loss, d_image = recon_loss_with_grad(product.image, target, cfg.ssim_weight)
    message_grads = render_backward(product, message, cam, cfg.lambda_message * d_image, bg, threads)

    # gate on the detached public-opacity gradient of the reconstruction loss
    g = gate(scene_grads.d_opacity)
    cons, d_cons_s, d_cons_m = consistency_grad(scene.opacity_logits, message.opacity_logits, g, visibility)
    grads = StepGradients(
        scene_grads.d_logits(scene.opacity_logits),
        scene_grads.d_sh,
        message_grads.d_logits(message.opacity_logits),
        message_grads.d_sh,
        cfg.lambda_cons * d_cons_s,
        cfg.lambda_cons * d_cons_m,
    )
    return (scene_loss, message_loss, cons), grads


def train_pair(
    scene_views: list[View],
    message_views: list[View],
    geometry: Geometry,
    cfg: TrainConfig = TrainConfig(),
    init: DualCloud | None = None,
    threads: int | None = None,
) -> TrainResult:
    _check_views(scene_views, "scene")
    _check_views(message_views, "message")
    n = len(geometry)
    if init is None:
        init = DualCloud(geometry, initial_attributes(n), initial_attributes(n))
    elif len(init) != n:
        raise ShapeMismatch(f"initial attributes cover {len(init)} primitives, geometry has {n}")

    logits = [np.array(init.scene.opacity_logits, dtype=np.float64), np.array(init.message.opacity_logits, dtype=np.float64)]
    sh = [np.array(attrs.sh, dtype=np.float64) for attrs in (init.scene, init.message)]
    dc = [s[:, :1].copy() for s in sh]
    rest = [s[:, 1:].copy() for s in sh]
    groups = [
        (logits, AdamState.for_params(logits, cfg.lr_opacity)),
        (dc, AdamState.for_params(dc, cfg.lr_sh_dc)),
        (rest, AdamState.for_params(rest, cfg.lr_sh_rest)),
    ]

    def cloud(side: int) -> GaussianCloud:
        return GaussianCloud.from_parts(geometry, logits[side], np.concatenate([dc[side], rest[side]], axis=1), init.sh_degree)

    scene_order = _view_schedule(len(scene_views), cfg.iterations, cfg.seed)
    message_order = _view_schedule(len(message_views), cfg.iterations, cfg.seed)
    scene_cameras = [cam for cam, _ in scene_views]
    history = []
    visibility = None

    for it in progress(range(cfg.iterations), desc="train"):
        scene, message = cloud(0), cloud(1)
        if it % cfg.visibility_every == 0:
            visibility = visibility_weights(scene, scene_cameras, threads)
        (scene_loss, message_loss, cons), grads = step_gradients(
            scene, message, scene_views[scene_order[it]], message_views[message_order[it]], visibility, cfg, threads
        )
        losses = LossBreakdown.combine(it, scene_loss, message_loss, cons, cfg)
        if not np.isfinite(losses.total):
            raise DivergenceDetected(f"training loss became non-finite at iteration {it}")
        history.append(losses)
        if cfg.log_every and it % cfg.log_every == 0:
            logger.info("iteration %d: scene %.4f message %.4f cons %.3e total %.4f", it, scene_loss, message_loss, cons, losses.total)

        d_scene_logits, d_scene_sh, d_message_logits, d_message_sh = grads.total
        adam_step(logits, [d_scene_logits, d_message_logits], groups[0][1])
        adam_step(dc, [d_scene_sh[:, :1], d_message_sh[:, :1]], groups[1][1])
        adam_step(rest, [d_scene_sh[:, 1:], d_message_sh[:, 1:]], groups[2][1])
        if not all(np.all(np.isfinite(p)) for params, _ in groups for p in params):
            raise DivergenceDetected(f"attributes became non-finite at iteration {it}")

    scene, message = cloud(0), cloud(1)
    dual = DualCloud(geometry, AttributeSet(scene.opacity_logits, scene.sh), AttributeSet(message.opacity_logits, message.sh), init.sh_degree)
    logger.info("trained %d iterations: final total loss %.4f", cfg.iterations, history[-1].total)
    return TrainResult(dual, history)


def write_history(history: list[LossBreakdown], path: str | PathLike) -> None:
    frame = pd.DataFrame([losses.as_row() for losses in history], columns=["iteration", "scene", "message", "consistency", "total"])
    try:
        frame.to_csv(path, index=False)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def smoothed(values, window: int = 100) -> np.ndarray:
    """Trailing-window mean used to judge training progress."""
    values = np.asarray(values, dtype=np.float64)
    window = max(1, min(window, len(values)))
    cumulative = np.concatenate([[0.0], np.cumsum(values)])
    return (cumulative[window:] - cumulative[:-window]) / window
