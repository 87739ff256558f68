"""Before/after quality of the public scene and the recovered message under one attack."""

import json
import logging
from os import PathLike
from pathlib import Path

import numpy as np
import pandas as pd

from attacks.metrics import psnr, relative_decay, robustness_score
from attacks.models import DOMAINS, METRICS, AttackSpec, MetricScores, RobustnessReport
from core.exceptions import EmptyViews, IoFailure
from gs_model.models import GaussianCloud
from opacity_net.mapping import reveal
from opacity_net.models import StegoKey
from splat_render.models import Camera
from splat_render.rasterizer import render_views
from stego_train.losses import ssim

logger = logging.getLogger(__name__)

View = tuple[Camera, np.ndarray]


def score_views(cloud: GaussianCloud, views: list[View], background=(0.0, 0.0, 0.0), threads: int | None = None) -> dict[str, float]:
    """Mean PSNR and SSIM of ``cloud`` rendered at every view against the view image."""
    if not views:
        raise EmptyViews("scoring needs at least one ground-truth view")
    images = render_views(cloud, [cam for cam, _ in views], background, threads)
    return {
        "psnr": float(np.mean([psnr(image, gt) for image, (_, gt) in zip(images, views)])),
        "ssim": float(np.mean([ssim(image, gt) for image, (_, gt) in zip(images, views)])),
    }


def build_report(attack: AttackSpec, primitives: tuple[int, int], before: dict, after: dict) -> RobustnessReport:
    """Assemble a report from ``{domain: {metric: value}}`` scores taken before and after the attack."""
    scores = {domain: {m: MetricScores(before[domain][m], after[domain][m]) for m in METRICS} for domain in DOMAINS}
    decay = {domain: {m: relative_decay(s.original, s.attacked) for m, s in scores[domain].items()} for domain in DOMAINS}
    score = {
        m: robustness_score(
            (scores["scene"][m].original, scores["scene"][m].attacked),
            (scores["message"][m].original, scores["message"][m].attacked),
        )
        for m in METRICS
    }
    return RobustnessReport(attack, primitives, scores["scene"], scores["message"], decay, score)


def evaluate(
    stego: GaussianCloud,
    key: StegoKey,
    attacked: GaussianCloud,
    scene_gt_views: list[View],
    message_gt_views: list[View],
    attack: AttackSpec = AttackSpec(),
    background=(0.0, 0.0, 0.0),
    threads: int | None = None,
) -> RobustnessReport:
    before, after = {}, {}
    for scores, cloud in ((before, stego), (after, attacked)):
        scores["scene"] = score_views(cloud, scene_gt_views, background, threads)
        scores["message"] = score_views(reveal(cloud, key), message_gt_views, background, threads)
    report = build_report(attack, (len(stego), len(attacked)), before, after)
    logger.info(
        "%s: scene psnr %.3f -> %.3f, message psnr %.3f -> %.3f, S_R %.2f",
        attack.label,
        report.scene["psnr"].original,
        report.scene["psnr"].attacked,
        report.message["psnr"].original,
        report.message["psnr"].attacked,
        report.score["psnr"],
    )
    return report


def write_reports(reports: list[RobustnessReport], path: str | PathLike) -> None:
    payload = [report.as_dict() for report in reports]
    try:
        Path(path).write_text(json.dumps({"reports": payload}, indent=2))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def append_table(reports: list[RobustnessReport], path: str | PathLike) -> None:
    """Append one row per report, writing the header when the file is new."""
    path = Path(path)
    frame = pd.DataFrame([report.table_row() for report in reports])
    try:
        frame.to_csv(path, mode="a", header=not path.exists(), index=False, float_format="%.4f")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
