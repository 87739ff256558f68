"""Real spherical harmonics to degree 3, with the sign convention of the 3DGS reference renderer."""

import numpy as np

from gs_model.models import SH_COEFFS

C0 = 0.28209479177387814
C1 = 0.4886025119029199
C2 = (1.0925484305920792, -1.0925484305920792, 0.31539156525252005, -1.0925484305920792, 0.5462742152960396)
C3 = (
    -0.5900435899266435,
    2.890611442640554,
    -0.4570457994644658,
    0.3731763325901154,
    -0.4570457994644658,
    1.445305721320277,
    -0.5900435899266435,
)


def sh_basis(dirs: np.ndarray) -> np.ndarray:
    """Basis values ``(M, 16)`` for unit directions ``(M, 3)``."""
    dirs = np.atleast_2d(np.asarray(dirs, dtype=np.float64))
    x, y, z = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    xx, yy, zz = x * x, y * y, z * z
    basis = np.empty((len(dirs), SH_COEFFS))
    basis[:, 0] = C0
    basis[:, 1] = -C1 * y
    basis[:, 2] = C1 * z
    basis[:, 3] = -C1 * x
    basis[:, 4] = C2[0] * x * y
    basis[:, 5] = C2[1] * y * z
    basis[:, 6] = C2[2] * (2.0 * zz - xx - yy)
    basis[:, 7] = C2[3] * x * z
    basis[:, 8] = C2[4] * (xx - yy)
    basis[:, 9] = C3[0] * y * (3.0 * xx - yy)
    basis[:, 10] = C3[1] * x * y * z
    basis[:, 11] = C3[2] * y * (4.0 * zz - xx - yy)
    basis[:, 12] = C3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy)
    basis[:, 13] = C3[4] * x * (4.0 * zz - xx - yy)
    basis[:, 14] = C3[5] * z * (xx - yy)
    basis[:, 15] = C3[6] * x * (xx - 3.0 * yy)
    return basis


def sh_colors(sh: np.ndarray, dirs: np.ndarray, degree: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Unclamped ``0.5 + sum sh * Y`` and the clamped RGB, both ``(M, 3)``.

    Coefficients above ``degree`` are ignored.
    """
    basis = sh_basis(dirs)[:, : (degree + 1) ** 2]
    raw = 0.5 + np.einsum("mj,mjc->mc", basis, np.asarray(sh, dtype=np.float64)[:, : (degree + 1) ** 2])
    return raw, np.clip(raw, 0.0, 1.0)


def eval_sh(coeffs: np.ndarray, direction: np.ndarray) -> np.ndarray:
    return sh_colors(np.asarray(coeffs)[None], np.asarray(direction)[None])[1][0]
