"""Polarization triads, the 3x2 quasi-unitary matrix, helicity matrices.

The triad attached to a constant unit vector I is

    v = (I x k) / |I x k|,   u = v x k/|k|,   w = k/|k|,

which is undefined on the singular line w = +/-I. The columns (u, v) form
the real 3x2 matrix with orthonormal columns whose range is the transverse
plane at k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularLine
from .kgrid import KGrid

__all__ = [
    "SIGMA",
    "ALPHA",
    "SINGULAR_TOL",
    "Frame",
    "polarization_frame",
    "frame_vectors",
    "quasi_unitary",
    "varpi_field",
    "circular_varpi",
    "helicity_matrix_lab",
    "frame_rotation_angle",
    "rotation_angle_field",
    "rotation_matrix",
]

#: Helicity operator in the two-component representation.
SIGMA = np.array([[0.0, -1.0j], [1.0j, 0.0]])

#: Helicity eigenvectors, SIGMA @ ALPHA[s] == s * ALPHA[s].
ALPHA = {
    +1: np.array([1.0, 1.0j]) / np.sqrt(2.0),
    -1: np.array([1.0, -1.0j]) / np.sqrt(2.0),
}

#: Nodes with |I x k|/|k| below this are treated as on the singular line.
SINGULAR_TOL = 1e-9


@dataclass(frozen=True)
class Frame:
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    I: np.ndarray
    k: np.ndarray


def _as_unit(I) -> np.ndarray:
    I = np.asarray(I, dtype=float)
    return I / np.linalg.norm(I)


def frame_vectors(I, K: np.ndarray, mask: np.ndarray | None = None):
    """Vectorized triad (u, v, w) at wavevectors K of shape (N, 3).

    Rows flagged in ``mask`` get a placeholder (but finite) triad instead
    of raising; any unmasked row on the singular line raises SingularLine.
    """
    I = _as_unit(I)
    K = np.atleast_2d(np.asarray(K, dtype=float))
    k = np.linalg.norm(K, axis=1)
    if np.any(k == 0):
        raise SingularLine("k = 0 has no polarization frame")
    w = K / k[:, None]
    cross = np.cross(np.broadcast_to(I, K.shape), K)
    cnorm = np.linalg.norm(cross, axis=1)
    bad = cnorm / k < SINGULAR_TOL
    if np.any(bad):
        if mask is None or np.any(bad & ~mask):
            raise SingularLine(
                f"{int(np.sum(bad if mask is None else bad & ~mask))} "
                "unmasked wavevectors lie on the singular line"
            )
        # placeholder frame at masked nodes keeps downstream values finite
        fallback = np.array([1.0, 0.0, 0.0])
        if abs(I[0]) > 0.9:
            fallback = np.array([0.0, 1.0, 0.0])
        cross = cross.copy()
        cross[bad] = np.cross(fallback, K[bad])
        cnorm = np.linalg.norm(cross, axis=1)
    v = cross / cnorm[:, None]
    u = np.cross(v, w)
    return u, v, w


def polarization_frame(I, k) -> Frame:
    """Triad at a single wavevector."""
    u, v, w = frame_vectors(I, np.asarray(k, dtype=float)[None, :])
    return Frame(u[0], v[0], w[0], _as_unit(I), np.asarray(k, dtype=float))


def quasi_unitary(frame: Frame) -> np.ndarray:
    """The real 3x2 matrix with columns (u, v)."""
    return np.stack([frame.u, frame.v], axis=1)


def varpi_field(I, grid: KGrid) -> np.ndarray:
    """Quasi-unitary matrices at every grid node, shape (N, 3, 2)."""
    u, v, _ = frame_vectors(I, grid.nodes, mask=grid.mask)
    return np.stack([u, v], axis=2)


def circular_varpi(varpi: np.ndarray) -> np.ndarray:
    """Circular-column variant (u+iv, u-iv)/sqrt(2) of a real varpi."""
    T = np.array([[1.0, 1.0], [1.0j, -1.0j]]) / np.sqrt(2.0)
    return varpi @ T


def helicity_matrix_lab(w) -> np.ndarray:
    """Helicity operator in the vector representation at direction w.

    Componentwise (Sigma_w)_ij = -i eps_ijk w_k; Hermitian with spectrum
    {+1, -1, 0}, the null direction being w itself.
    """
    w = np.asarray(w, dtype=float)
    return 1j * np.array(
        [
            [0.0, -w[2], w[1]],
            [w[2], 0.0, -w[0]],
            [-w[1], w[0], 0.0],
        ]
    )


def rotation_matrix(phi: float) -> np.ndarray:
    """exp(-i sigma phi) = [[cos, -sin], [sin, cos]], real 2x2."""
    c, s = np.cos(phi), np.sin(phi)
    return np.array([[c, -s], [s, c]])


def frame_rotation_angle(I, I_prime, k) -> float:
    """Angle phi in (-pi, pi] with varpi_I' = varpi_I @ rotation_matrix(phi)."""
    fa = polarization_frame(I, k)
    fb = polarization_frame(I_prime, k)
    return float(np.arctan2(fb.u @ fa.v, fb.u @ fa.u))


def rotation_angle_field(I, I_prime, grid: KGrid) -> np.ndarray:
    """Vectorized frame rotation angle at every node, shape (N,)."""
    ua, va, _ = frame_vectors(I, grid.nodes, mask=grid.mask)
    ub, _, _ = frame_vectors(I_prime, grid.nodes, mask=grid.mask)
    return np.arctan2(np.sum(ub * va, axis=1), np.sum(ub * ua, axis=1))
