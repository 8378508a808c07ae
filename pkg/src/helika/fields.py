"""Real-space E, H, and Coulomb-gauge A from the k-space wavefunction.

The spectrum is assembled Hermitian-symmetrically on an FFT lattice (each
k-node contributes its conjugate at -k), so the inverse transform is real
by construction. Divergence and curl checks are spectral on the same
lattice; time derivatives use symmetric two-snapshot differences of the
free evolution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoxLeakage, GridMismatch, NyquistViolation
from .kgrid import KGrid
from .states import VectorState, evolve

__all__ = [
    "RealGrid",
    "FieldSnapshot",
    "reconstruct",
    "vector_potential",
    "spectral_divergence",
    "spectral_curl",
    "realspace_energy",
    "realspace_angular_momentum",
    "kspace_energy",
    "maxwell_residuals",
    "save_snapshot",
]

_COMMENSURATE_TOL = 1e-9


@dataclass(frozen=True)
class RealGrid:
    """FFT-compatible real-space box matched to a uniform k-space box."""

    nfft: int
    dk: np.ndarray        # (3,) k spacing
    dx: np.ndarray        # (3,) real spacing, dk * dx = 2 pi / nfft
    axes: tuple           # monotonic centered coordinates per axis
    indices: np.ndarray   # (N, 3) integer k indices of the source grid

    @classmethod
    def from_kgrid(cls, grid: KGrid, nfft: int | None = None) -> "RealGrid":
        if grid.kind != "box":
            raise GridMismatch("field reconstruction needs a uniform box grid")
        dk = grid.meta["spacing"]
        m = grid.nodes / dk
        idx = np.rint(m).astype(int)
        if np.max(np.abs(m - idx)) > _COMMENSURATE_TOL:
            raise NyquistViolation(
                "k nodes are not integer multiples of the grid spacing; "
                "use an odd point count with a commensurate box center"
            )
        need = 2 * int(np.max(np.abs(idx))) + 2
        if nfft is None:
            nfft = need
        if nfft < need:
            raise NyquistViolation(f"nfft={nfft} aliases the spectrum; need >= {need}")
        dx = 2.0 * np.pi / (nfft * dk)
        axes = tuple(
            np.fft.fftshift(np.fft.fftfreq(nfft, d=1.0 / (nfft * dx[i])))
            for i in range(3)
        )
        return cls(nfft, dk, dx, axes, idx)


@dataclass(frozen=True)
class FieldSnapshot:
    rgrid: RealGrid
    E: np.ndarray        # (n, n, n, 3) real, fftshifted (monotonic axes)
    H: np.ndarray
    t: float
    imag_residual: float
    config: object = None  # constants of the source grid


def _assemble(rg: RealGrid, grid: KGrid, coef: np.ndarray) -> np.ndarray:
    """Sum of coef e^{ikX} + c.c. on the real lattice, shape (n,n,n,3)."""
    n = rg.nfft
    keep = ~grid.mask
    idx = rg.indices[keep] % n
    cidx = (-rg.indices[keep]) % n
    out = np.empty((n, n, n, 3), dtype=complex)
    spec = np.zeros((n, n, n), dtype=complex)
    for comp in range(3):
        spec[:] = 0.0
        np.add.at(spec, (idx[:, 0], idx[:, 1], idx[:, 2]), coef[keep, comp])
        np.add.at(
            spec, (cidx[:, 0], cidx[:, 1], cidx[:, 2]), np.conj(coef[keep, comp])
        )
        out[..., comp] = n**3 * np.fft.ifftn(spec)
    return out


def _to_real(raw: np.ndarray) -> tuple[np.ndarray, float]:
    scale = np.max(np.abs(raw.real))
    resid = float(np.max(np.abs(raw.imag)) / scale) if scale > 0 else 0.0
    return np.fft.fftshift(raw.real, axes=(0, 1, 2)), resid


def reconstruct(s: VectorState, rg: RealGrid) -> FieldSnapshot:
    """E and H of the radiation field encoded by the wavefunction."""
    grid = s.grid
    cfg = grid.config
    omega = cfg.omega(grid.k_norm)
    measure = grid.weights * (2.0 * np.pi) ** -1.5
    coef_e = (np.sqrt(cfg.hbar * omega / (2.0 * cfg.eps0)) * measure)[:, None] * s.values
    w = grid.nodes / grid.k_norm[:, None]
    wxf = np.cross(w, s.values)
    coef_h = (np.sqrt(cfg.hbar * omega / (2.0 * cfg.mu0)) * measure)[:, None] * wxf
    E, res_e = _to_real(_assemble(rg, grid, coef_e))
    H, res_h = _to_real(_assemble(rg, grid, coef_h))
    return FieldSnapshot(rg, E, H, s.t, max(res_e, res_h), cfg)


def vector_potential(s: VectorState, rg: RealGrid) -> np.ndarray:
    """Coulomb-gauge A; E = -dA/dt and mu0 H = curl A hold spectrally."""
    grid = s.grid
    cfg = grid.config
    omega = cfg.omega(grid.k_norm)
    measure = grid.weights * (2.0 * np.pi) ** -1.5
    a = -1j * np.sqrt(cfg.hbar / (cfg.eps0 * omega))[:, None] * s.values
    coef = (measure / np.sqrt(2.0))[:, None] * a
    A, _ = _to_real(_assemble(rg, grid, coef))
    return A


def _k_lattice(rg: RealGrid):
    n = rg.nfft
    return tuple(np.fft.fftfreq(n, d=1.0 / (n * rg.dk[i])) for i in range(3))


def spectral_divergence(rg: RealGrid, F: np.ndarray) -> np.ndarray:
    raw = np.fft.ifftshift(F, axes=(0, 1, 2))
    kx, ky, kz = _k_lattice(rg)
    div = np.zeros(raw.shape[:3], dtype=complex)
    for comp, kv, ax in ((0, kx, 0), (1, ky, 1), (2, kz, 2)):
        spec = np.fft.fftn(raw[..., comp], axes=(0, 1, 2))
        shape = [1, 1, 1]
        shape[ax] = rg.nfft
        div += np.fft.ifftn(1j * kv.reshape(shape) * spec, axes=(0, 1, 2))
    return np.fft.fftshift(div.real, axes=(0, 1, 2))


def spectral_curl(rg: RealGrid, F: np.ndarray) -> np.ndarray:
    raw = np.fft.ifftshift(F, axes=(0, 1, 2))
    kx, ky, kz = _k_lattice(rg)
    kvecs = []
    for ax, kv in enumerate((kx, ky, kz)):
        shape = [1, 1, 1]
        shape[ax] = rg.nfft
        kvecs.append(kv.reshape(shape))
    spec = [np.fft.fftn(raw[..., c], axes=(0, 1, 2)) for c in range(3)]
    curl = np.empty_like(raw)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        curl[..., i] = np.fft.ifftn(
            1j * (kvecs[j] * spec[k] - kvecs[k] * spec[j]), axes=(0, 1, 2)
        ).real
    return np.fft.fftshift(curl, axes=(0, 1, 2))


def _boundary_peak_ratio(density: np.ndarray) -> float:
    peak = float(np.max(density))
    faces = [
        density[0], density[-1],
        density[:, 0], density[:, -1],
        density[:, :, 0], density[:, :, -1],
    ]
    return max(float(np.max(f)) for f in faces) / peak


def realspace_energy(snap: FieldSnapshot) -> float:
    """Integral of (eps0 E^2 + mu0 H^2)/2 over the real-space box."""
    cfg = snap.config
    dens = 0.5 * (
        cfg.eps0 * np.sum(snap.E**2, axis=-1) + cfg.mu0 * np.sum(snap.H**2, axis=-1)
    )
    if _boundary_peak_ratio(dens) > 1e-8:
        raise BoxLeakage("energy density has not decayed at the box boundary")
    return float(np.sum(dens) * np.prod(snap.rgrid.dx))


def realspace_angular_momentum(snap: FieldSnapshot) -> np.ndarray:
    """eps0 mu0 * integral of X x (E x H) over the real-space box."""
    cfg = snap.config
    S = np.cross(snap.E, snap.H)
    dens = np.linalg.norm(S, axis=-1)
    if _boundary_peak_ratio(dens + 1e-300) > 1e-6:
        raise BoxLeakage("momentum density has not decayed at the box boundary")
    ax = snap.rgrid.axes
    X = np.stack(np.meshgrid(ax[0], ax[1], ax[2], indexing="ij"), axis=-1)
    j_dens = np.cross(X, S)
    return cfg.eps0 * cfg.mu0 * np.sum(j_dens, axis=(0, 1, 2)) * np.prod(snap.rgrid.dx)


def kspace_energy(s: VectorState) -> float:
    """Reference energy: integral of hbar omega f^dag f over k."""
    cfg = s.grid.config
    dens = cfg.hbar * cfg.omega(s.grid.k_norm) * np.sum(np.abs(s.values) ** 2, axis=1)
    return float(np.real(s.grid.integrate(dens)))


def maxwell_residuals(s: VectorState, rg: RealGrid, dt: float | None = None) -> dict:
    """Relative residuals of the free-space Maxwell pairs.

    Divergences are spectral; the two curl equations compare the symmetric
    dt-difference of the reconstructed fields with the spectral curls.
    """
    snap = reconstruct(s, rg)
    cfg = snap.config
    if dt is None:
        dt = 1e-3 / float(np.max(cfg.omega(s.grid.k_norm)))
    plus = reconstruct(evolve(s, dt), rg)
    minus = reconstruct(evolve(s, -dt), rg)
    dE = (plus.E - minus.E) / (2.0 * dt)
    dH = (plus.H - minus.H) / (2.0 * dt)
    curl_h = spectral_curl(rg, snap.H)
    curl_e = spectral_curl(rg, snap.E)
    scale_e = float(np.max(np.abs(snap.E)))
    scale_h = float(np.max(np.abs(snap.H)))
    return {
        "div_E": float(np.max(np.abs(spectral_divergence(rg, snap.E)))) / (
            scale_e * float(np.max(s.grid.k_norm))
        ),
        "div_H": float(np.max(np.abs(spectral_divergence(rg, snap.H)))) / (
            scale_h * float(np.max(s.grid.k_norm))
        ),
        "curl_E_pair": float(np.max(np.abs(cfg.eps0 * dE - curl_h)))
        / float(np.max(np.abs(curl_h))),
        "curl_H_pair": float(np.max(np.abs(cfg.mu0 * dH + curl_e)))
        / float(np.max(np.abs(curl_e))),
        "imag_residual": snap.imag_residual,
        "dt": dt,
    }


def save_snapshot(path, snap: FieldSnapshot) -> None:
    """Binary volume dump: header (shape, spacing, time) + components."""
    np.savez(
        path,
        shape=np.array(snap.E.shape[:3]),
        dx=snap.rgrid.dx,
        t=np.float64(snap.t),
        E=snap.E,
        H=snap.H,
    )
