"""The two classes of frame-change transformations and phase extraction.

Changing the frame axis I -> I' rotates the polarization pair about k by
an angle phi(k). That single rotation induces two distinct maps:

* first class  -- rotate the two-component wavefunction, exp(i sigma phi);
  the 3-component wavefunction (and the fields) stay fixed;
* second class -- rotate the 3-component wavefunction about w by +phi(k);
  the two-component wavefunction stays fixed, and a helicity eigenstate
  only picks up the phase exp(-i sigma phi).

The connection shifts by the gradient of phi under the same change.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AmplitudeTooSmall, MaskInsufficient, NotEigenstate, NotTransverse
from .frames import frame_vectors, rotation_angle_field
from .kgrid import KGrid
from .operators import ObservableReport, _require_mask, berry_potential, make_report
from .states import TwoCompState, VectorState, transversality_residual

__all__ = [
    "GaugeField",
    "gauge_field",
    "first_class",
    "second_class",
    "gauge_shift_residual",
    "berry_phase_extract",
    "helicity_eigen_residual",
]

#: Amplitude floor (relative to the peak) below which phases are skipped.
AMPLITUDE_FLOOR = 1e-6


@dataclass(frozen=True)
class GaugeField:
    grid: KGrid
    phi: np.ndarray      # (N,) rotation angle in (-pi, pi]
    I: np.ndarray
    I_prime: np.ndarray

    def export_rows(self):
        """(kx, ky, kz, phi) rows over unmasked nodes, for CSV dumps."""
        keep = ~self.grid.mask
        return np.column_stack([self.grid.nodes[keep], self.phi[keep]])


def gauge_field(I, I_prime, grid: KGrid) -> GaugeField:
    """Rotation-angle field between the frames of I and I'."""
    I = _require_mask(I, grid, exc=MaskInsufficient)
    I_prime = _require_mask(I_prime, grid, exc=MaskInsufficient)
    phi = rotation_angle_field(I, I_prime, grid)
    return GaugeField(grid, phi, I, I_prime)


def first_class(s: TwoCompState, I_prime) -> TwoCompState:
    """f~' = exp(i sigma phi) f~, relabeled to I'; lab wavefunction fixed."""
    gf = gauge_field(s.I, I_prime, s.grid)
    c, sn = np.cos(gf.phi), np.sin(gf.phi)
    # exp(i sigma phi) = [[cos, sin], [-sin, cos]]
    a, b = s.values[:, 0], s.values[:, 1]
    values = np.stack([c * a + sn * b, -sn * a + c * b], axis=1)
    return TwoCompState(s.grid, values, gf.I_prime, s.t)


def second_class(s: VectorState, I, I_prime) -> VectorState:
    """f' = exp(-i Sigma_w phi) f: rotate f about w by +phi(k) nodewise."""
    res = transversality_residual(s)
    if res > 1e-8:
        raise NotTransverse(f"transversality residual {res:.3e}")
    gf = gauge_field(I, I_prime, s.grid)
    _, _, w = frame_vectors(I, s.grid.nodes, mask=s.grid.mask)
    f = s.values
    c = np.cos(gf.phi)[:, None]
    sn = np.sin(gf.phi)[:, None]
    wf = np.sum(w * f, axis=1)[:, None]
    rotated = c * f + sn * np.cross(np.broadcast_to(w, f.shape), f) + (1.0 - c) * wf * w
    return VectorState(s.grid, rotated, s.t)


def gauge_shift_residual(I, I_prime, grid: KGrid) -> ObservableReport:
    """max |A_I' - A_I - grad phi| over unmasked interior nodes.

    grad phi is evaluated as Im(e^{-i phi} grad e^{i phi}) so branch jumps
    of the wrapped angle do not pollute the finite differences.
    """
    gf = gauge_field(I, I_prime, grid)
    A = berry_potential(gf.I, grid).A
    A_p = berry_potential(gf.I_prime, grid).A
    expphi = np.exp(1j * gf.phi)
    grad = grid.gradient(expphi)
    grad_phi = np.imag(np.conj(expphi)[:, None] * grad)
    keep = grid.meta["interior"] & ~grid.mask
    resid = np.abs(A_p - A - grad_phi)[keep]
    h = float(np.max(grid.meta["spacing"])) if grid.kind == "box" else 0.0
    order = grid.config.fd_order
    # connection magnitudes scale like 1/k near the shell in use
    scale = float(np.max(np.abs(grad_phi[keep]))) + 1.0
    tol = 20.0 * h**order * scale if grid.kind == "box" else 1e-8
    return make_report("gauge_shift_residual", float(np.max(resid)), 0.0, tol)


def helicity_eigen_residual(s: VectorState, sigma: int) -> float:
    """max relative residual of Sigma_w f = sigma f over significant nodes."""
    g = s.grid
    k = g.k_norm
    w = g.nodes / k[:, None]
    sig_f = 1j * np.cross(w, s.values)
    amp = np.linalg.norm(s.values, axis=1)
    keep = (~g.mask) & (amp > AMPLITUDE_FLOOR * np.max(amp))
    resid = np.linalg.norm(sig_f - sigma * s.values, axis=1)
    return float(np.max(resid[keep] / amp[keep]))


def berry_phase_extract(
    f_I: VectorState, f_Iprime: VectorState, sigma: int, gf: GaugeField
) -> ObservableReport:
    """Pointwise phase of f'/f against -sigma * phi, modulo 2 pi.

    Works on the largest-amplitude component at each node; nodes below the
    amplitude floor are excluded (error if none survive).
    """
    for vs in (f_I, f_Iprime):
        res = helicity_eigen_residual(vs, sigma)
        if res > 1e-8:
            raise NotEigenstate(f"helicity eigen-residual {res:.3e}")
    amp = np.linalg.norm(f_I.values, axis=1)
    keep = (~gf.grid.mask) & (amp > AMPLITUDE_FLOOR * np.max(amp))
    if not np.any(keep):
        raise AmplitudeTooSmall("no nodes above the amplitude floor")
    a = np.argmax(np.abs(f_I.values[keep]), axis=1)
    rows = np.nonzero(keep)[0]
    ratio = f_Iprime.values[rows, a] / f_I.values[rows, a]
    extracted = np.angle(ratio)
    expected = -sigma * gf.phi[rows]
    dev = np.angle(np.exp(1j * (extracted - expected)))
    return make_report("berry_phase", float(np.max(np.abs(dev))), 0.0, 1e-8)
