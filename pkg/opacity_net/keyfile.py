"""Binary StegoKey container.

Layout (little-endian): magic ``SNS2``, u32 version, bit plan, quant params, encoder kind,
then for hash-grid keys the bbox (6 x f32), grid config and tables, then MLP dims and
weights, the training fingerprint, and a CRC32 of everything before it.
"""

import struct
import zlib
from os import PathLike

import numpy as np

from core.exceptions import ChecksumMismatch, IoFailure, KeyVersionMismatch
from hash_grid.models import HashGrid, HashGridConfig
from opacity_net.models import KEY_VERSION, Encoder, MlpWeights, StegoKey, TrainingFingerprint
from sh_codec.models import BitMode, BitPlan, QuantParams

MAGIC = b"SNS2"
PREAMBLE = struct.Struct("<4sI")
BITPLAN = struct.Struct("<BBIII")
QUANT = struct.Struct("<ddI")
ENCODER = struct.Struct("<B")
BBOX = struct.Struct("<6f")
GRID = struct.Struct("<IIIIIB3Qd")
LAYERS = struct.Struct("<I")
LAYER = struct.Struct("<II")
FINGERPRINT = struct.Struct("<QId")
CRC = struct.Struct("<I")

_MODES = [BitMode.QUANTIZED_INTEGER, BitMode.FLOAT_BIT_PATTERN]
_ENCODERS = [Encoder.NONE, Encoder.HASH_GRID]


def _floats(array) -> bytes:
    return np.ascontiguousarray(array, dtype="<f4").tobytes()


def dump_key(key: StegoKey) -> bytes:
    plan, qp = key.plan, key.quant
    parts = [
        PREAMBLE.pack(MAGIC, key.version),
        BITPLAN.pack(_MODES.index(plan.mode), plan.graded, plan.k, plan.gamma_bits, plan.n),
        QUANT.pack(qp.c_min, qp.delta, qp.gamma_bits),
        ENCODER.pack(_ENCODERS.index(key.encoder)),
    ]
    if key.grid is not None:
        cfg = key.grid.config
        parts += [
            BBOX.pack(*key.grid.bbox.ravel().tolist()),
            GRID.pack(cfg.levels, cfg.r_min, cfg.r_max, cfg.table_size, cfg.feature_dim, cfg.always_hash, *cfg.primes, cfg.init_scale),
            _floats(key.grid.tables),
        ]
    parts.append(LAYERS.pack(len(key.mlp.weights)))
    for weight, bias in zip(key.mlp.weights, key.mlp.biases):
        parts += [LAYER.pack(*weight.shape), _floats(weight), _floats(bias)]
    fp = key.fingerprint
    parts.append(FINGERPRINT.pack(fp.seed, fp.epochs, fp.final_loss))
    body = b"".join(parts)
    return body + CRC.pack(zlib.crc32(body))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def unpack(self, layout: struct.Struct) -> tuple:
        if self.offset + layout.size > len(self.data):
            raise ChecksumMismatch("key file ends inside a record")
        values = layout.unpack_from(self.data, self.offset)
        self.offset += layout.size
        return values

    def floats(self, *shape) -> np.ndarray:
        count = int(np.prod(shape))
        end = self.offset + 4 * count
        if end > len(self.data):
            raise ChecksumMismatch("key file ends inside an array")
        array = np.frombuffer(self.data, dtype="<f4", count=count, offset=self.offset).astype(np.float32)
        self.offset = end
        return array.reshape(shape)


def parse_key(data: bytes) -> StegoKey:
    if len(data) < PREAMBLE.size + CRC.size:
        raise ChecksumMismatch("key file is too short")
    magic, version = PREAMBLE.unpack_from(data)
    if magic != MAGIC:
        raise ChecksumMismatch("not a key file")
    if version != KEY_VERSION:
        raise KeyVersionMismatch(f"key version {version} is not supported (expected {KEY_VERSION})")
    body, (crc,) = data[: -CRC.size], CRC.unpack(data[-CRC.size :])
    if zlib.crc32(body) != crc:
        raise ChecksumMismatch("key file checksum does not match its contents")

    reader = _Reader(body)
    reader.offset = PREAMBLE.size
    mode, graded, k, gamma_bits, n = reader.unpack(BITPLAN)
    plan = BitPlan(k=k, n=n, gamma_bits=gamma_bits, mode=_MODES[mode], graded=bool(graded))
    c_min, delta, quant_bits = reader.unpack(QUANT)
    quant = QuantParams(c_min=c_min, delta=delta, gamma_bits=quant_bits)
    (encoder_index,) = reader.unpack(ENCODER)
    encoder = _ENCODERS[encoder_index]

    grid = None
    if encoder is Encoder.HASH_GRID:
        bbox = np.array(reader.unpack(BBOX), dtype=np.float32).reshape(2, 3)
        levels, r_min, r_max, table_size, feature_dim, always_hash, *rest = reader.unpack(GRID)
        config = HashGridConfig(
            levels=levels,
            r_min=r_min,
            r_max=r_max,
            table_size=table_size,
            feature_dim=feature_dim,
            always_hash=bool(always_hash),
            primes=tuple(rest[:3]),
            init_scale=rest[3],
        )
        grid = HashGrid(config, reader.floats(levels, table_size, feature_dim), bbox)

    (layer_count,) = reader.unpack(LAYERS)
    weights, biases = [], []
    for _ in range(layer_count):
        fan_in, fan_out = reader.unpack(LAYER)
        weights.append(reader.floats(fan_in, fan_out))
        biases.append(reader.floats(fan_out))
    seed, epochs, final_loss = reader.unpack(FINGERPRINT)
    if reader.offset != len(body):
        raise ChecksumMismatch("unexpected trailing bytes in key file")
    return StegoKey(plan, quant, encoder, grid, MlpWeights(weights, biases), TrainingFingerprint(seed, epochs, final_loss), version)


def save_key(key: StegoKey, path: str | PathLike) -> None:
    try:
        with open(path, "wb") as handle:
            handle.write(dump_key(key))
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def load_key(path: str | PathLike) -> StegoKey:
    try:
        with open(path, "rb") as handle:
            data = handle.read()
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return parse_key(data)


def key_from_mapping(result, plan: BitPlan, quant: QuantParams, cfg) -> StegoKey:
    """Freeze a MappingResult into a float32 key."""
    grid = None
    if result.grid is not None:
        grid = HashGrid(result.grid.config, result.grid.tables.astype(np.float32), result.grid.bbox)
    fingerprint = TrainingFingerprint(cfg.seed, cfg.epochs, result.final_loss)
    return StegoKey(plan, quant, cfg.encoder, grid, result.mlp.astype(np.float32), fingerprint)
