"""Binary little-endian PLY in the vanilla 3DGS 62-property vertex schema.

SH storage: ``f_dc_0..2`` hold the three j=0 coefficients; ``f_rest_*`` hold rows j=1..15
channel-major, i.e. ``f_rest_{ch * 15 + (j - 1)} = sh[j, ch]`` (all channel-0 rows first),
the order written by the reference 3DGS exporter.
"""

import io
import logging
from os import PathLike

import numpy as np
from plyfile import PlyData, PlyElement

from core.exceptions import IoFailure, MalformedHeader, NonFiniteValue, TruncatedPayload
from gs_model.models import SH_COEFFS, GaussianCloud

logger = logging.getLogger(__name__)

REST_PER_CHANNEL = SH_COEFFS - 1
PLY_PROPERTIES = (
    ["x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"]
    + [f"f_rest_{i}" for i in range(3 * REST_PER_CHANNEL)]
    + ["opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"]
)
RECORD_BYTES = len(PLY_PROPERTIES) * 4
FLOAT_TYPES = {"float", "float32"}
END_HEADER = b"end_header\n"


def _split_header(data: bytes) -> tuple[list[str], int]:
    if not data.startswith(b"ply\n"):
        raise MalformedHeader("missing 'ply' magic line")
    end = data.find(END_HEADER)
    if end < 0:
        raise MalformedHeader("missing end_header")
    try:
        text = data[:end].decode("ascii")
    except UnicodeDecodeError as exc:
        raise MalformedHeader("header is not ASCII") from exc
    lines = [line.strip() for line in text.split("\n")[1:] if line.strip()]
    return [line for line in lines if not line.startswith(("comment", "obj_info"))], end + len(END_HEADER)


def _vertex_count(lines: list[str]) -> int:
    if not lines or lines[0] != "format binary_little_endian 1.0":
        raise MalformedHeader("only 'format binary_little_endian 1.0' is supported")
    element = lines[1].split() if len(lines) > 1 else []
    if len(element) != 3 or element[:2] != ["element", "vertex"] or not element[2].isdigit():
        raise MalformedHeader("expected a single 'element vertex N' declaration")
    properties = lines[2:]
    names = []
    for line in properties:
        parts = line.split()
        if len(parts) != 3 or parts[0] != "property" or parts[1] not in FLOAT_TYPES:
            raise MalformedHeader(f"unexpected header line {line!r}")
        names.append(parts[2])
    if names != PLY_PROPERTIES:
        raise MalformedHeader("vertex properties do not match the vanilla 3DGS schema")
    return int(element[2])


def load_ply(path: str | PathLike) -> GaussianCloud:
    try:
        with open(path, "rb") as handle:
            data = handle.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc

    lines, header_bytes = _split_header(data)
    count = _vertex_count(lines)
    payload = len(data) - header_bytes
    if payload != count * RECORD_BYTES:
        raise TruncatedPayload(f"{path}: payload has {payload} bytes, expected {count} x {RECORD_BYTES}")

    vertex = PlyData.read(io.BytesIO(data))["vertex"].data
    columns = np.stack([np.asarray(vertex[name], dtype=np.float32) for name in PLY_PROPERTIES], axis=1)
    bad = ~np.isfinite(columns).all(axis=1)
    if bad.any():
        raise NonFiniteValue(f"{path}: NaN/Inf in payload", int(np.flatnonzero(bad)[0]))

    sh = np.empty((count, SH_COEFFS, 3), dtype=np.float32)
    sh[:, 0, :] = columns[:, 6:9]
    sh[:, 1:, :] = columns[:, 9:54].reshape(count, 3, REST_PER_CHANNEL).transpose(0, 2, 1)
    cloud = GaussianCloud(
        positions=columns[:, 0:3],
        rotations=columns[:, 58:62],
        log_scales=columns[:, 55:58],
        opacity_logits=columns[:, 54],
        sh=sh,
    )
    logger.debug("loaded %d primitives from %s", count, path)
    return cloud


def save_ply(cloud: GaussianCloud, path: str | PathLike) -> None:
    n = len(cloud)
    columns = np.zeros((n, len(PLY_PROPERTIES)), dtype=np.float32)
    columns[:, 0:3] = cloud.positions
    columns[:, 6:9] = cloud.sh[:, 0, :]
    columns[:, 9:54] = cloud.sh[:, 1:, :].transpose(0, 2, 1).reshape(n, 3 * REST_PER_CHANNEL)
    columns[:, 54] = cloud.opacity_logits
    columns[:, 55:58] = cloud.log_scales
    columns[:, 58:62] = cloud.rotations

    elements = np.empty(n, dtype=[(name, "<f4") for name in PLY_PROPERTIES])
    for index, name in enumerate(PLY_PROPERTIES):
        elements[name] = columns[:, index]
    ply = PlyData([PlyElement.describe(elements, "vertex")], text=False, byte_order="<")
    try:
        with open(path, "wb") as handle:
            ply.write(handle)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    logger.debug("saved %d primitives to %s", n, path)
