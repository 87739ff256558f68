"""Reconstruction, gate and consistency terms of the joint objective, with their gradients."""

import numpy as np

from core.exceptions import ImageTooSmall, ShapeMismatch
from gs_model.models import sigmoid

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2
KL_EPS = 1e-6


def _window() -> np.ndarray:
    offsets = np.arange(SSIM_WINDOW) - SSIM_WINDOW // 2
    weights = np.exp(-(offsets**2) / (2.0 * SSIM_SIGMA**2))
    return weights / weights.sum()


def _filter(x: np.ndarray) -> np.ndarray:
    """Separable Gaussian blur over the first two axes with zero padding, same size."""
    kernel = _window()
    half = SSIM_WINDOW // 2
    h, w = x.shape[:2]
    padded = np.pad(x, ((half, half), (0, 0), (0, 0)))
    rows = sum(kernel[k] * padded[k : k + h] for k in range(SSIM_WINDOW))
    padded = np.pad(rows, ((0, 0), (half, half), (0, 0)))
    return sum(kernel[k] * padded[:, k : k + w] for k in range(SSIM_WINDOW))


def _check_pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeMismatch(f"images differ in shape: {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a, b = a[:, :, None], b[:, :, None]
    return a, b


def _ssim_terms(a: np.ndarray, b: np.ndarray):
    if a.shape[0] < SSIM_WINDOW or a.shape[1] < SSIM_WINDOW:
        raise ImageTooSmall(f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {a.shape[1]}x{a.shape[0]}")
    mu_a, mu_b = _filter(a), _filter(b)
    var_a = _filter(a * a) - mu_a**2
    var_b = _filter(b * b) - mu_b**2
    cov = _filter(a * b) - mu_a * mu_b
    a1 = 2.0 * mu_a * mu_b + SSIM_C1
    a2 = 2.0 * cov + SSIM_C2
    b1 = mu_a**2 + mu_b**2 + SSIM_C1
    b2 = var_a + var_b + SSIM_C2
    return mu_a, mu_b, a1, a2, b1, b2


def ssim_map(a, b) -> np.ndarray:
    a, b = _check_pair(a, b)
    _, _, a1, a2, b1, b2 = _ssim_terms(a, b)
    return (a1 * a2) / (b1 * b2)


def ssim(a, b) -> float:
    """Mean local SSIM, 11x11 Gaussian window (sigma 1.5), averaged over pixels and channels."""
    return float(np.mean(ssim_map(a, b)))


def ssim_with_grad(a, b) -> tuple[float, np.ndarray]:
    """SSIM and its gradient with respect to ``a``."""
    shape = np.shape(a)
    a, b = _check_pair(a, b)
    mu_a, mu_b, a1, a2, b1, b2 = _ssim_terms(a, b)
    denom = b1 * b2
    s = (a1 * a2) / denom
    scale = 1.0 / s.size
    # partials with respect to the local moments mu_a, E[a^2] and E[ab]
    d_mu = 2.0 * mu_b * (a2 - a1) / denom - 2.0 * mu_a * s * (1.0 / b1 - 1.0 / b2)
    d_sq = -s / b2
    d_cross = 2.0 * a1 / denom
    grad = _filter(scale * d_mu) + 2.0 * a * _filter(scale * d_sq) + b * _filter(scale * d_cross)
    return float(np.mean(s)), grad.reshape(shape)


def recon_loss(pred, gt, w: float) -> float:
    pred, gt = _check_pair(pred, gt)
    l1 = float(np.mean(np.abs(pred - gt)))
    if w == 0.0:
        return l1
    return (1.0 - w) * l1 + w * (1.0 - ssim(pred, gt))


def recon_loss_with_grad(pred, gt, w: float) -> tuple[float, np.ndarray]:
    shape = np.shape(pred)
    pred, gt = _check_pair(pred, gt)
    diff = pred - gt
    loss = (1.0 - w) * float(np.mean(np.abs(diff)))
    grad = (1.0 - w) * np.sign(diff) / diff.size
    if w != 0.0:
        value, d_ssim = ssim_with_grad(pred, gt)
        loss += w * (1.0 - value)
        grad = grad - w * d_ssim
    return loss, grad.reshape(shape)


def gate(grad_norm):
    """``exp(-|grad|)`` per primitive; 1 where the reconstruction gradient vanishes."""
    return np.exp(-np.abs(np.asarray(grad_norm, dtype=np.float64)))


def bern_sym_kl(p, q):
    p = np.clip(np.asarray(p, dtype=np.float64), KL_EPS, 1.0 - KL_EPS)
    q = np.clip(np.asarray(q, dtype=np.float64), KL_EPS, 1.0 - KL_EPS)
    value = (p - q) * (np.log(p / q) - np.log((1.0 - p) / (1.0 - q)))
    return float(value) if value.ndim == 0 else value


def bern_sym_kl_grad(p, q) -> tuple[np.ndarray, np.ndarray]:
    """Partial derivatives of ``bern_sym_kl`` in ``p`` and ``q``; zero where clamping is active."""
    p_raw = np.asarray(p, dtype=np.float64)
    q_raw = np.asarray(q, dtype=np.float64)
    p = np.clip(p_raw, KL_EPS, 1.0 - KL_EPS)
    q = np.clip(q_raw, KL_EPS, 1.0 - KL_EPS)
    log_ratio = np.log(p / q) - np.log((1.0 - p) / (1.0 - q))
    d_p = log_ratio + (p - q) / (p * (1.0 - p))
    d_q = -log_ratio - (p - q) / (q * (1.0 - q))
    return d_p * (p == p_raw), d_q * (q == q_raw)


def _check_gates(alpha_s, alpha_m, g, v):
    alpha_s, alpha_m, g, v = (np.asarray(x, dtype=np.float64) for x in (alpha_s, alpha_m, g, v))
    n = len(alpha_s)
    if not (alpha_m.shape == g.shape == v.shape == alpha_s.shape == (n,)):
        raise ShapeMismatch(f"opacity, gate and visibility arrays must share one length, got {alpha_s.shape}, {alpha_m.shape}, {g.shape}, {v.shape}")
    if n == 0:
        raise ShapeMismatch("consistency loss needs at least one primitive")
    return alpha_s, alpha_m, g, v


def consistency_loss(dual, g, v) -> float:
    """Mean over primitives of ``g * v * bern_sym_kl(alpha_scene, alpha_message)``."""
    alpha_s, alpha_m, g, v = _check_gates(dual.scene.opacities, dual.message.opacities, g, v)
    return float(np.mean(g * v * bern_sym_kl(alpha_s, alpha_m)))


def consistency_grad(scene_logits, message_logits, g, v) -> tuple[float, np.ndarray, np.ndarray]:
    """Consistency loss and its gradients with respect to both opacity logit arrays.

    ``g`` and ``v`` are treated as constants.
    """
    alpha_s, alpha_m, g, v = _check_gates(sigmoid(scene_logits), sigmoid(message_logits), g, v)
    weight = g * v / len(alpha_s)
    d_p, d_q = bern_sym_kl_grad(alpha_s, alpha_m)
    loss = float(np.sum(weight * bern_sym_kl(alpha_s, alpha_m)))
    return loss, weight * d_p * alpha_s * (1.0 - alpha_s), weight * d_q * alpha_m * (1.0 - alpha_m)
