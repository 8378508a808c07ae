"""Photon wavefunction containers, builders, transforms, evolution.

Two containers: ``VectorState`` holds the 3-component transverse
wavefunction (laboratory representation); ``TwoCompState`` holds the
unconstrained 2-component wavefunction labeled by its frame axis I
(intrinsic representation). The quasi-unitary matrix field maps between
them nodewise and is a pointwise isometry.

Delta-normalized continuum states are replaced by square-integrable
envelopes; all states are normalized to 1 in the discrete quadrature.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import erf, sph_harm_y

from .errors import EnvelopeClipped, GridMismatch, NotTransverse
from .frames import ALPHA, varpi_field
from .kgrid import KGrid, grid_from_json, grid_to_json

__all__ = [
    "VectorState",
    "TwoCompState",
    "GaussianPacket",
    "SphericalMode",
    "PlaneWaveProxy",
    "build_state",
    "to_lab",
    "to_intrinsic",
    "evolve",
    "inner",
    "norm",
    "transversality_residual",
    "save_state",
    "load_state",
]

#: Minimum fraction of squared envelope mass the grid must capture.
MASS_FLOOR = 1.0 - 1e-8

#: Transversality residual above which to_intrinsic refuses its input.
TRANSVERSE_TOL = 1e-8


@dataclass(frozen=True)
class VectorState:
    grid: KGrid
    values: np.ndarray  # (N, 3) complex
    t: float = 0.0


@dataclass(frozen=True)
class TwoCompState:
    grid: KGrid
    values: np.ndarray  # (N, 2) complex
    I: np.ndarray       # (3,) unit vector labeling the representation
    t: float = 0.0


@dataclass(frozen=True)
class GaussianPacket:
    k0: tuple
    widths: tuple
    amps: tuple  # complex pair in the (u, v) basis

    def __post_init__(self):
        if np.linalg.norm(np.asarray(self.amps, dtype=complex)) == 0:
            raise ValueError("amps must be nonzero")
        if np.any(np.asarray(self.widths, dtype=float) <= 0):
            raise ValueError("widths must be positive")


@dataclass(frozen=True)
class SphericalMode:
    sigma: int
    lam: int
    mu: int
    k0: float
    shell_width: float

    def __post_init__(self):
        if self.sigma not in (+1, -1):
            raise ValueError("sigma must be +1 or -1")
        if self.lam < 0 or abs(self.mu) > self.lam:
            raise ValueError(f"need |mu| <= lambda, got ({self.lam}, {self.mu})")
        if self.shell_width <= 0:
            raise ValueError("shell_width must be positive")
        if self.k0 <= 0:
            raise ValueError("k0 must be positive")


@dataclass(frozen=True)
class PlaneWaveProxy:
    """Narrow Gaussian packet standing in for a plane-wave state.

    The default width, 1% of |k0|, keeps closed-form eigenvalue checks
    accurate to second order in the width.
    """

    k0: tuple
    sigma: int
    widths: tuple | None = None

    def __post_init__(self):
        if self.sigma not in (+1, -1):
            raise ValueError("sigma must be +1 or -1")

    def effective_widths(self) -> np.ndarray:
        if self.widths is not None:
            return np.asarray(self.widths, dtype=float)
        return np.full(3, 0.01 * np.linalg.norm(self.k0))


def _gaussian_mass_fraction(lo, hi, mu, sigma) -> float:
    """Fraction of a unit Gaussian (std sigma) inside [lo, hi]."""
    z = lambda x: (x - mu) / (sigma * np.sqrt(2.0))
    return 0.5 * (erf(z(hi)) - erf(z(lo)))


def _check_box_mass(grid, k0, widths):
    if grid.kind != "box":
        raise GridMismatch("Gaussian packets need a box grid")
    lo = grid.meta["center"] - grid.meta["half_widths"]
    hi = grid.meta["center"] + grid.meta["half_widths"]
    frac = np.prod(
        [_gaussian_mass_fraction(lo[i], hi[i], k0[i], widths[i]) for i in range(3)]
    )
    if frac < MASS_FLOOR:
        raise EnvelopeClipped(
            f"only {frac:.10f} of the envelope mass lies inside the grid"
        )


def build_state(grid: KGrid, spec, I) -> TwoCompState:
    """Normalized two-component state for one of the mode families."""
    I = np.asarray(I, dtype=float)
    I = I / np.linalg.norm(I)
    if isinstance(spec, PlaneWaveProxy):
        spec = GaussianPacket(
            tuple(spec.k0),
            tuple(spec.effective_widths()),
            tuple(ALPHA[spec.sigma]),
        )
    if isinstance(spec, GaussianPacket):
        k0 = np.asarray(spec.k0, dtype=float)
        widths = np.asarray(spec.widths, dtype=float)
        _check_box_mass(grid, k0, widths)
        d = grid.nodes - k0
        env = np.exp(-np.sum(d**2 / (4.0 * widths**2), axis=1))
        amps = np.asarray(spec.amps, dtype=complex)
        values = env[:, None] * amps[None, :]
    elif isinstance(spec, SphericalMode):
        if grid.kind != "sphere":
            raise GridMismatch("SphericalMode needs a spherical product grid")
        k_min, k_max = grid.meta["k_min"], grid.meta["k_max"]
        frac = _gaussian_mass_fraction(k_min, k_max, spec.k0, spec.shell_width)
        if frac < MASS_FLOOR:
            raise EnvelopeClipped(
                f"radial shell mass inside [{k_min}, {k_max}] is only {frac:.10f}"
            )
        k = grid.k_norm
        g = np.exp(-((k - spec.k0) ** 2) / (4.0 * spec.shell_width**2))
        Y = sph_harm_y(spec.lam, spec.mu, grid.meta["theta"], grid.meta["phi_nodes"])
        values = (g * Y)[:, None] * ALPHA[spec.sigma][None, :]
    else:
        raise TypeError(f"unknown mode spec {type(spec).__name__}")
    s = TwoCompState(grid, values, I, 0.0)
    return replace(s, values=values / np.sqrt(norm(s).real))


def norm(s) -> complex:
    return inner(s, s)


def inner(a, b) -> complex:
    """Quadrature inner product of two same-representation states."""
    if a.grid is not b.grid and a.grid.n_nodes != b.grid.n_nodes:
        raise GridMismatch("states live on different grids")
    return complex(a.grid.integrate(np.sum(np.conj(a.values) * b.values, axis=1)))


def transversality_residual(s: VectorState) -> float:
    """max |f^dag k| / (|f| |k|) over unmasked nodes."""
    keep = ~s.grid.mask
    f = s.values[keep]
    k = s.grid.nodes[keep]
    num = np.abs(np.sum(np.conj(f) * k, axis=1))
    den = np.linalg.norm(f, axis=1) * np.linalg.norm(k, axis=1)
    ok = den > 0
    if not np.any(ok):
        return 0.0
    return float(np.max(num[ok] / den[ok]))


def to_lab(s: TwoCompState) -> VectorState:
    """f = varpi_I f~ nodewise; preserves the norm pointwise."""
    varpi = varpi_field(s.I, s.grid)
    f = np.einsum("nij,nj->ni", varpi, s.values)
    return VectorState(s.grid, f, s.t)


def to_intrinsic(s: VectorState, I) -> TwoCompState:
    """f~ = varpi_I^dag f nodewise; requires a transverse input."""
    res = transversality_residual(s)
    if res > TRANSVERSE_TOL:
        raise NotTransverse(f"transversality residual {res:.3e}")
    I = np.asarray(I, dtype=float)
    I = I / np.linalg.norm(I)
    varpi = varpi_field(I, s.grid)
    ft = np.einsum("nij,ni->nj", varpi, s.values)
    return TwoCompState(s.grid, ft, I, s.t)


def evolve(s, dt: float):
    """Free evolution: multiply by exp(-i omega dt), omega = c |k|."""
    phase = np.exp(-1j * s.grid.config.omega(s.grid.k_norm) * dt)
    return replace(s, values=phase[:, None] * s.values, t=s.t + dt)


# -- serialization ---------------------------------------------------------


def save_state(path, s) -> None:
    """Bit-exact dump: JSON header plus binary component columns."""
    header = {
        "grid": json.loads(grid_to_json(s.grid)),
        "t": s.t,
        "representation": "intrinsic" if isinstance(s, TwoCompState) else "lab",
    }
    if isinstance(s, TwoCompState):
        header["I"] = s.I.tolist()
    np.savez(
        path,
        header=json.dumps(header, sort_keys=True),
        values=np.ascontiguousarray(s.values),
        t=np.float64(s.t),
    )


def load_state(path):
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        grid = grid_from_json(json.dumps(header["grid"]))
        t = float(data["t"])
        if header["representation"] == "intrinsic":
            return TwoCompState(grid, data["values"], np.asarray(header["I"]), t)
        return VectorState(grid, data["values"], t)
