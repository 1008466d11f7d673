"""Rotation angles of transport matrices around closed curves."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np
from scipy.linalg import polar


def orthonormal_frame(g: np.ndarray) -> Optional[np.ndarray]:
    """Lower-triangular L with g = L L^T, or None when g is not positive definite."""
    try:
        return np.linalg.cholesky(np.asarray(g, dtype=float))
    except np.linalg.LinAlgError:
        return None


def rotation_angle(H: np.ndarray, g: Optional[np.ndarray] = None) -> float:
    """Angle in (-pi, pi] of the orthogonal factor of a 2x2 transport matrix.

    With a positive-definite metric ``g`` at the base point, ``H`` is first
    expressed in the g-orthonormal frame obtained by Cholesky factorization,
    so coordinate stretching does not leak into the angle.
    """
    H = np.asarray(H, dtype=float)
    if H.shape != (2, 2):
        raise ValueError("rotation angle is defined for 2x2 blocks only")
    if g is not None:
        L = orthonormal_frame(g)
        if L is not None:
            H = L.T @ H @ np.linalg.inv(L.T)
    U, _ = polar(H)
    return math.atan2(U[1, 0], U[0, 0])


def wrap_angle(a: float) -> float:
    """Map to (-pi, pi]."""
    w = math.remainder(a, 2 * math.pi)
    return math.pi if w == -math.pi else w
