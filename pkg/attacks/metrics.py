import numpy as np

from core.exceptions import ShapeMismatch, ZeroBaseline

PSNR_CAP = 99.0
MSE_FLOOR = 1e-10


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB for images in ``[0, 1]``, capped at 99 dB."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"images differ in shape: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse < MSE_FLOOR:
        return PSNR_CAP
    return float(10.0 * np.log10(1.0 / mse))


def relative_decay(m_orig: float, m_attacked: float) -> float:
    if m_orig == 0:
        raise ZeroBaseline("relative decay is undefined for a zero baseline")
    return abs(m_orig - m_attacked) / m_orig


def robustness_score(scene: tuple[float, float], message: tuple[float, float]) -> float:
    """Scene decay minus message decay, in percent; near 0 when the message holds up like the scene."""
    return (relative_decay(*scene) - relative_decay(*message)) * 100.0
