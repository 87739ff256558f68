"""Workflows behind the management commands. Each returns the paths it wrote."""

import logging
from os import PathLike
from pathlib import Path

import numpy as np

from attacks.evaluation import append_table, evaluate, write_reports
from attacks.models import AttackSpec
from attacks.perturb import apply_attack
from core.exceptions import ConfigError
from gs_model.dualfile import load_dual, save_dual
from gs_model.models import AttributeSet, DualCloud
from gs_model.ply import load_ply, save_ply
from opacity_net.keyfile import key_from_mapping, load_key, save_key
from opacity_net.mapping import reveal, train_mapping
from sh_codec.codec import embed_cloud, fit_quant_params
from splat_render.imageio import CAMERAS_FILE, load_cameras, load_views, save_views
from splat_render.rasterizer import render_views
from stego_train.trainer import train_pair, write_history
from workflows.config import RunConfig, write_lock

logger = logging.getLogger(__name__)

DUAL_FILE = "dual.bin"
LOSS_FILE = "loss.csv"


def run_train_pair(scene_dir, message_dir, out_dir, run: RunConfig, geometry: str | PathLike | None = None) -> list[Path]:
    geometry = geometry or run.io.geometry
    if not geometry:
        raise ConfigError("no geometry source: pass --geometry or set io.geometry")
    scene_views = load_views(scene_dir)
    message_views = load_views(message_dir)
    shape = load_ply(geometry).geometry
    result = train_pair(scene_views, message_views, shape, run.train, threads=run.io.worker_threads)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_dual(result.dual, out / DUAL_FILE)
    write_history(result.history, out / LOSS_FILE)
    return [out / DUAL_FILE, out / LOSS_FILE, write_lock(run, out)]


def embed_dual(dual: DualCloud, run: RunConfig):
    """Stego cloud (float32, as stored) and its key for a trained DualCloud."""
    public = dual.scene_cloud().astype(np.float32)
    quant = run.quant
    if run.auto_fit_quant:
        quant = fit_quant_params(dual.scene.sh, dual.message.sh, qp=quant)
    stego = embed_cloud(public, dual.message.sh, run.bitplan, quant).astype(np.float32)
    training_pair = DualCloud(public.geometry, AttributeSet(public.opacity_logits, stego.sh), dual.message, dual.sh_degree)
    result = train_mapping(training_pair, run.mapping, run.hashgrid)
    return stego, key_from_mapping(result, run.bitplan, quant, run.mapping)


def run_embed(dual_path, stego_path, key_path, run: RunConfig) -> list[Path]:
    stego, key = embed_dual(load_dual(dual_path), run)
    save_ply(stego, stego_path)
    save_key(key, key_path)
    logger.info("embedded %d primitives; mapping mse %.3e", len(stego), key.fingerprint.final_loss)
    return [Path(stego_path), Path(key_path), write_lock(run, Path(stego_path).parent)]


def run_extract(stego_path, key_path, out_path, run: RunConfig) -> list[Path]:
    hidden = reveal(load_ply(stego_path), load_key(key_path))
    save_ply(hidden, out_path)
    return [Path(out_path), write_lock(run, Path(out_path).parent)]


def run_render(ply_path, cameras_path, out_dir, run: RunConfig) -> list[Path]:
    cloud = load_ply(ply_path)
    cameras = load_cameras(cameras_path)
    images = render_views(cloud, cameras, run.train.background, run.io.worker_threads)
    save_views(out_dir, cameras, images)
    return [Path(out_dir) / CAMERAS_FILE, write_lock(run, out_dir)]


def run_attack_eval(stego_path, key_path, scene_dir, message_dir, report_path, specs: list[AttackSpec], run: RunConfig, table_path=None) -> list[Path]:
    stego = load_ply(stego_path)
    key = load_key(key_path)
    scene_views = load_views(scene_dir)
    message_views = load_views(message_dir)
    cameras = [cam for cam, _ in scene_views]
    threads = run.io.worker_threads

    reports = []
    for spec in specs:
        attacked = apply_attack(stego, spec, cameras, threads)
        reports.append(evaluate(stego, key, attacked, scene_views, message_views, spec, run.train.background, threads))
    write_reports(reports, report_path)
    written = [Path(report_path)]
    if table_path:
        append_table(reports, table_path)
        written.append(Path(table_path))
    written.append(write_lock(run, Path(report_path).parent))
    return written
