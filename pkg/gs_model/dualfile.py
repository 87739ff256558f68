"""``dual.bin``: little-endian float32 dump of a DualCloud produced by joint training."""

import struct
from os import PathLike

import numpy as np

from core.exceptions import IoFailure, MalformedHeader, TruncatedPayload
from gs_model.models import SH_COEFFS, AttributeSet, DualCloud, Geometry

MAGIC = b"SNSD"
VERSION = 1
HEADER = struct.Struct("<4sIII")
# positions, rotations, log_scales, then (logit, sh) for scene and message
FLOATS_PER_PRIMITIVE = 3 + 4 + 3 + 2 * (1 + SH_COEFFS * 3)


def dump_dual(dual: DualCloud) -> bytes:
    parts = [
        dual.geometry.positions,
        dual.geometry.rotations,
        dual.geometry.log_scales,
        dual.scene.opacity_logits,
        dual.scene.sh,
        dual.message.opacity_logits,
        dual.message.sh,
    ]
    body = b"".join(np.ascontiguousarray(part, dtype="<f4").tobytes() for part in parts)
    return HEADER.pack(MAGIC, VERSION, len(dual), dual.sh_degree) + body


def parse_dual(data: bytes) -> DualCloud:
    if len(data) < HEADER.size:
        raise TruncatedPayload("dual file shorter than its header")
    magic, version, n, sh_degree = HEADER.unpack_from(data)
    if magic != MAGIC or version != VERSION:
        raise MalformedHeader(f"not a version {VERSION} dual file")
    if len(data) - HEADER.size != n * FLOATS_PER_PRIMITIVE * 4:
        raise TruncatedPayload(f"dual file payload does not hold {n} primitives")

    values = np.frombuffer(data, dtype="<f4", offset=HEADER.size).astype(np.float32)
    offset = 0

    def take(*shape):
        nonlocal offset
        size = int(np.prod(shape))
        block = values[offset : offset + size].reshape(shape)
        offset += size
        return block

    geometry = Geometry(take(n, 3), take(n, 4), take(n, 3))
    scene = AttributeSet(take(n), take(n, SH_COEFFS, 3))
    message = AttributeSet(take(n), take(n, SH_COEFFS, 3))
    return DualCloud(geometry, scene, message, sh_degree)


def save_dual(dual: DualCloud, path: str | PathLike) -> None:
    try:
        with open(path, "wb") as handle:
            handle.write(dump_dual(dual))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_dual(path: str | PathLike) -> DualCloud:
    try:
        with open(path, "rb") as handle:
            return parse_dual(handle.read())
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
