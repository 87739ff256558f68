"""Importance-graded bit-plane embedding of hidden SH coefficients into public ones.

Carrier coefficient ``j`` keeps its high bits and receives, in its low ``shift(j)`` bits, the
top ``shift(j)`` bits of hidden coefficient ``n - 1 - j``. Shift grows with the frequency order
of ``j``, so the most important (low-order) hidden coefficients get the most bits.
"""

import logging
import math

import numpy as np

from core.exceptions import OutOfRange, ShapeMismatch
from gs_model.models import SH_COEFFS, GaussianCloud
from sh_codec.models import BitMode, BitPlan, QuantParams

logger = logging.getLogger(__name__)


def freq_order(j: int, n: int = SH_COEFFS) -> int:
    return BitPlan(n=n).freq_order(j)


def quantize(c, qp: QuantParams, clip: bool = False):
    """Map coefficients onto the integer lattice; round-half-to-even."""
    values = np.asarray(c, dtype=np.float64)
    if not clip and (np.any(values < qp.c_min) or np.any(values >= qp.c_max)):
        raise OutOfRange(f"coefficient outside [{qp.c_min}, {qp.c_max}); widen the quantization range")
    q = np.clip(np.rint((values - qp.c_min) / qp.delta), 0, qp.levels - 1).astype(np.uint64)
    return int(q) if q.ndim == 0 else q


def dequantize(q, qp: QuantParams):
    values = qp.c_min + np.asarray(q, dtype=np.float64) * qp.delta
    return float(values) if values.ndim == 0 else values


def embed_coeff(c_q, hidden_q, j: int, plan: BitPlan):
    shift = plan.shift(j)
    mask = np.uint64((1 << shift) - 1)
    carrier = np.asarray(c_q, dtype=np.uint64)
    hidden = np.asarray(hidden_q, dtype=np.uint64)
    stego = (carrier & ~mask) ^ (hidden >> np.uint64(plan.gamma_bits - shift))
    return int(stego) if stego.ndim == 0 else stego


def extract_coeff(stego_q, j: int, plan: BitPlan):
    """Estimate of hidden coefficient ``n - 1 - j`` from stego coefficient ``j``."""
    shift = plan.shift(j)
    mask = np.uint64((1 << shift) - 1)
    estimate = (np.asarray(stego_q, dtype=np.uint64) & mask) << np.uint64(plan.gamma_bits - shift)
    return int(estimate) if estimate.ndim == 0 else estimate


def _to_lattice(values: np.ndarray, plan: BitPlan, qp: QuantParams, clip: bool = False) -> np.ndarray:
    if plan.mode is BitMode.FLOAT_BIT_PATTERN:
        return np.ascontiguousarray(values, dtype=np.float32).view(np.uint32).astype(np.uint64)
    return quantize(values, qp, clip=clip)


def _from_lattice(q: np.ndarray, plan: BitPlan, qp: QuantParams) -> np.ndarray:
    if plan.mode is BitMode.FLOAT_BIT_PATTERN:
        return np.ascontiguousarray(q, dtype=np.uint64).astype(np.uint32).view(np.float32)
    return dequantize(q, qp)


def fit_quant_params(*sh_arrays, qp: QuantParams = QuantParams()) -> QuantParams:
    """Widen ``[c_min, c_max)`` to the next symmetric power-of-two range covering every coefficient."""
    peak = max(float(np.max(np.abs(np.asarray(a, dtype=np.float64)))) for a in sh_arrays)
    if qp.c_min <= -peak and peak < qp.c_max:
        return qp
    exponent = max(0, math.ceil(math.log2(peak)))
    if 2.0**exponent <= peak:
        exponent += 1
    fitted = QuantParams(c_min=-(2.0**exponent), delta=2.0 ** (exponent + 1 - qp.gamma_bits), gamma_bits=qp.gamma_bits)
    logger.info("widened SH lattice to [%g, %g) with delta 2^%d", fitted.c_min, fitted.c_max, exponent + 1 - qp.gamma_bits)
    return fitted


def embed_cloud(public: GaussianCloud, hidden_sh, plan: BitPlan, qp: QuantParams) -> GaussianCloud:
    hidden_sh = np.asarray(hidden_sh)
    if hidden_sh.shape != public.sh.shape:
        raise ShapeMismatch(f"hidden SH shape {hidden_sh.shape} does not match carrier {public.sh.shape}")
    if plan.n > SH_COEFFS:
        raise ShapeMismatch(f"bit plan covers {plan.n} coefficients, clouds carry {SH_COEFFS}")
    plan.validate()

    carrier = _to_lattice(public.sh[:, : plan.n, :], plan, qp)
    hidden = _to_lattice(hidden_sh[:, : plan.n, :], plan, qp)
    stego = carrier.copy()
    for j in range(plan.n):
        stego[:, j, :] = embed_coeff(carrier[:, j, :], hidden[:, plan.n - 1 - j, :], j, plan)

    sh = np.array(public.sh, dtype=np.float32)
    sh[:, : plan.n, :] = _from_lattice(stego, plan, qp)
    return public.replace(sh=sh)


def extract_cloud(stego: GaussianCloud, plan: BitPlan, qp: QuantParams) -> np.ndarray:
    """Hidden SH estimate ``(N, 16, 3)``; coefficients beyond ``plan.n`` are zero.

    Stego values pushed off the lattice range by an attack are clipped to it.
    """
    if plan.n > SH_COEFFS:
        raise ShapeMismatch(f"bit plan covers {plan.n} coefficients, clouds carry {SH_COEFFS}")
    plan.validate()
    stego_q = _to_lattice(stego.sh[:, : plan.n, :], plan, qp, clip=True)
    hidden = np.zeros_like(stego_q)
    for j in range(plan.n):
        hidden[:, plan.n - 1 - j, :] = extract_coeff(stego_q[:, j, :], j, plan)
    estimate = np.zeros(stego.sh.shape, dtype=np.float64)
    estimate[:, : plan.n, :] = _from_lattice(hidden, plan, qp)
    return estimate
