"""PNG views (gamma 2.2) and ``cameras.json`` records."""

import json
from os import PathLike
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from core.exceptions import EmptyViews, IoFailure, MalformedRecord, ShapeMismatch
from splat_render.models import Camera

GAMMA = 2.2
CAMERAS_FILE = "cameras.json"


def view_name(index: int) -> str:
    return f"view_{index:03d}.png"


def encode_png(image: np.ndarray) -> Image.Image:
    image = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    return Image.fromarray(np.rint(255.0 * image ** (1.0 / GAMMA)).astype(np.uint8))


def save_png(image: np.ndarray, path: str | PathLike) -> None:
    try:
        encode_png(image).save(path, format="PNG")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_png(path: str | PathLike) -> np.ndarray:
    """Linear RGB in ``[0, 1]``, shape ``(H, W, 3)``."""
    try:
        with Image.open(path) as img:
            pixels = np.asarray(img.convert("RGB"), dtype=np.float64)
    except (OSError, UnidentifiedImageError) as exc:
        raise IoFailure(f"cannot read image {path}: {exc}") from exc
    return (pixels / 255.0) ** GAMMA


def save_cameras(cameras: list[Camera], path: str | PathLike) -> None:
    try:
        Path(path).write_text(json.dumps([cam.to_record() for cam in cameras], indent=2))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_cameras(path: str | PathLike) -> list[Camera]:
    try:
        records = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedRecord(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(records, list):
        raise MalformedRecord(f"{path} must hold a list of camera records")
    if not records:
        raise EmptyViews(f"{path} lists no cameras")
    cameras = []
    for index, record in enumerate(records):
        try:
            cameras.append(Camera.from_record(record))
        except MalformedRecord as exc:
            raise MalformedRecord(f"{path}, camera {index}: {exc}") from exc
    return cameras


def load_views(directory: str | PathLike) -> list[tuple[Camera, np.ndarray]]:
    """Cameras of ``directory/cameras.json`` paired with ``view_NNN.png`` images."""
    directory = Path(directory)
    views = []
    for index, cam in enumerate(load_cameras(directory / CAMERAS_FILE)):
        image = load_png(directory / view_name(index))
        if image.shape != (cam.height, cam.width, 3):
            raise ShapeMismatch(f"{directory / view_name(index)} is {image.shape[1]}x{image.shape[0]}, camera expects {cam.width}x{cam.height}")
        views.append((cam, image))
    return views


def save_views(directory: str | PathLike, cameras: list[Camera], images: list[np.ndarray]) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_cameras(cameras, directory / CAMERAS_FILE)
    for index, image in enumerate(images):
        save_png(image, directory / view_name(index))
