"""Closed-form largest eigenvalue of symmetric 2x2 and 3x3 matrices."""
from __future__ import annotations

import numpy as np

from .fields import sym_index, sym_pack


def lambda_max_packed(S, d):
    """Largest eigenvalue of packed symmetric tensors ``S`` (leading component axis).

    d = 2 uses the quadratic formula; d = 3 the trigonometric Cardano form on
    the deviatoric part, with the arccos argument clamped to [-1, 1].
    """
    S = np.asarray(S, dtype=float)
    if d == 2:
        a, b, c = S[0], S[1], S[2]
        return 0.5 * (a + c) + np.sqrt(0.25 * (a - c) ** 2 + b ** 2)
    if d != 3:
        raise ValueError(f"dimension must be 2 or 3, got {d}")
    a00, a01, a02, a11, a12, a22 = (S[sym_index(i, j, 3)] for i, j in
                                    ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)))
    q = (a00 + a11 + a22) / 3.0
    b00, b11, b22 = a00 - q, a11 - q, a22 - q
    p2 = (b00 ** 2 + b11 ** 2 + b22 ** 2 + 2.0 * (a01 ** 2 + a02 ** 2 + a12 ** 2)) / 6.0
    p = np.sqrt(p2)
    safe = np.where(p > 0, p, 1.0)
    det = (b00 * (b11 * b22 - a12 ** 2) - a01 * (a01 * b22 - a12 * a02)
           + a02 * (a01 * a12 - b11 * a02))
    r = np.clip(det / (2.0 * safe ** 3), -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    return np.where(p > 0, q + 2.0 * p * np.cos(phi), q)


def lambda_max_sym(A, atol=1e-12):
    """Largest eigenvalue of symmetric matrices ``A`` of shape ``(..., d, d)``.

    Raises ``ValueError`` when the asymmetry exceeds ``atol``.
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[-1]
    if A.shape[-2] != d or d not in (2, 3):
        raise ValueError(f"expected (..., d, d) with d in (2, 3), got {A.shape}")
    if np.any(np.abs(A - np.swapaxes(A, -1, -2)) > atol):
        raise ValueError("matrix is not symmetric")
    full = np.moveaxis(np.moveaxis(A, -1, 0), -1, 0)
    out = lambda_max_packed(sym_pack(full), d)
    return float(out) if out.ndim == 0 else out
