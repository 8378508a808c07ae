"""Sampled k-space domains: quadrature, differentiation, singular-line mask.

Two grid kinds are supported:

* ``box`` -- uniform Cartesian lattice with trapezoidal quadrature and
  finite-difference derivatives (order 2 or 4, one-sided at the faces);
* ``sphere`` -- product grid of Gauss-Legendre radial nodes, Gauss-Legendre
  nodes in cos(theta) and a uniform periodic azimuth, with barycentric
  differentiation matrices in r and cos(theta) and spectral differentiation
  in the azimuth.

Nodes whose direction lies within ``mask_angle`` of the axis ``+/-I_ref``
are masked: their values stay defined but never enter quadrature.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Any

import numpy as np

from .config import Config
from .errors import (
    BadShellBounds,
    BoxContainsOrigin,
    DegenerateAxis,
    GridMismatch,
    GridTooCoarse,
)

__all__ = [
    "KGrid",
    "Field",
    "build_box_grid",
    "build_spherical_grid",
    "quadrature",
    "gradient",
    "grid_to_json",
    "grid_from_json",
    "save_field",
    "load_field",
]

# Desingularized polar derivatives are only used while the pole factor
# (1 - x^2)^(-|m|/2) stays below this bound; higher azimuthal modes carry
# no physical content on resolvable states and would amplify roundoff.
_POLE_FACTOR_CAP = 1e6


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("zero vector cannot be normalized")
    return v / n


def _fd_weights(xs: np.ndarray, x0: float) -> np.ndarray:
    """First-derivative stencil weights at x0 for the nodes xs."""
    n = len(xs)
    d = xs - x0
    A = np.vander(d, n, increasing=True).T
    b = np.zeros(n)
    b[1] = 1.0
    return np.linalg.solve(A, b)


def _fd_matrix(x: np.ndarray, order: int) -> np.ndarray:
    """Banded first-derivative matrix of the given order on a 1-D axis.

    Interior rows use a centered (order+1)-point stencil; rows near the
    ends slide the window so it stays inside the axis.
    """
    n = len(x)
    width = order + 1
    if n < width:
        raise GridTooCoarse(f"axis has {n} points, stencil needs {width}")
    D = np.zeros((n, n))
    half = order // 2
    for i in range(n):
        lo = min(max(i - half, 0), n - width)
        sl = slice(lo, lo + width)
        D[i, sl] = _fd_weights(x[sl], x[i])
    return D


def _barycentric_diff_matrix(x: np.ndarray) -> np.ndarray:
    """Spectral differentiation matrix for the full node set x."""
    n = len(x)
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    w = 1.0 / np.prod(dx, axis=1)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


@dataclass(frozen=True)
class KGrid:
    """Immutable sampled k-space domain."""

    kind: str                 # "box" | "sphere"
    nodes: np.ndarray         # (N, 3)
    weights: np.ndarray       # (N,)
    shape: tuple              # (n1, n2, n3)
    mask: np.ndarray          # (N,) bool, True = excluded
    I_ref: np.ndarray         # (3,) unit vector
    mask_angle: float
    config: Config
    meta: dict = dc_field(default_factory=dict, repr=False)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def k_norm(self) -> np.ndarray:
        return self.meta["k_norm"]

    def integrate(self, values: np.ndarray):
        """Weighted sum over unmasked nodes; fixed summation order."""
        v = np.asarray(values)
        keep = ~self.mask
        w = self.weights[keep]
        if v.ndim == 1:
            return np.sum(w * v[keep])
        return np.tensordot(w, v[keep], axes=(0, 0))

    def gradient(self, values: np.ndarray) -> np.ndarray:
        """Cartesian nabla_k of nodewise values.

        ``values`` has shape (N,) or (N, m); the result appends a length-3
        axis of d/dk_x, d/dk_y, d/dk_z. Values at masked nodes are used by
        neighbouring stencils but outputs there are not meaningful.
        """
        v = np.asarray(values, dtype=complex)
        single = v.ndim == 1
        v2 = v[:, None] if single else v
        if self.kind == "box":
            out = self._gradient_box(v2)
        else:
            out = self._gradient_sphere(v2)
        return out[:, 0, :] if single else out

    # -- box derivatives ---------------------------------------------------

    def _gradient_box(self, v: np.ndarray) -> np.ndarray:
        n1, n2, n3 = self.shape
        m = v.shape[1]
        cube = v.reshape(n1, n2, n3, m)
        out = np.empty((n1, n2, n3, m, 3), dtype=complex)
        for ax in range(3):
            D = self.meta["diff"][ax]
            out[..., ax] = np.moveaxis(
                np.tensordot(D, np.moveaxis(cube, ax, 0), axes=(1, 0)), 0, ax
            )
        return out.reshape(-1, m, 3)

    # -- spherical derivatives --------------------------------------------

    def _gradient_sphere(self, v: np.ndarray) -> np.ndarray:
        nr, nt, na = self.shape
        m = v.shape[1]
        meta = self.meta
        x = meta["x_pol"]
        st = meta["sin_pol"]
        Dr, Dx = meta["diff_r"], meta["diff_x"]
        cube = v.reshape(nr, nt, na, m)

        dr = np.einsum("ab,bjkm->ajkm", Dr, cube)

        fm = np.fft.fft(cube, axis=2)
        mm = np.fft.fftfreq(na, 1.0 / na)
        dphi = np.fft.ifft(1j * mm[None, None, :, None] * fm, axis=2)

        # d/dx per azimuthal mode: factor out the (1-x^2)^(|m|/2) pole
        # behaviour of smooth fields so spherical harmonics differentiate
        # exactly; fall back to the plain matrix for high modes.
        dxm = np.empty_like(fm)
        for i, mu in enumerate(mm):
            am = abs(mu)
            h = fm[:, :, i, :]
            if am > 0 and (1.0 - x.max() ** 2) ** (-am / 2.0) < _POLE_FACTOR_CAP:
                s = st**am
                p = h / s[None, :, None]
                dp = np.einsum("ab,ibm->iam", Dx, p)
                dxm[:, :, i, :] = s[None, :, None] * dp - am * x[None, :, None] * h / (
                    st[None, :, None] ** 2
                )
            else:
                dxm[:, :, i, :] = np.einsum("ab,ibm->iam", Dx, h)
        dx = np.fft.ifft(dxm, axis=2)

        r = meta["r_nodes"][:, None, None, None]
        stb = st[None, :, None, None]
        dth = -stb * dx                      # d/dtheta = -sin(theta) d/dx
        rad = dr
        pol = dth / r
        azi = dphi / (r * stb)

        rh, th, ph = meta["unit_r"], meta["unit_theta"], meta["unit_phi"]
        out = (
            rad.reshape(-1, m)[:, :, None] * rh[:, None, :]
            + pol.reshape(-1, m)[:, :, None] * th[:, None, :]
            + azi.reshape(-1, m)[:, :, None] * ph[:, None, :]
        )
        return out


@dataclass(frozen=True)
class Field:
    """Nodewise values aligned with a grid."""

    grid: KGrid
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape[0] != self.grid.n_nodes:
            raise GridMismatch(
                f"{self.values.shape[0]} values for {self.grid.n_nodes} nodes"
            )


def _mask_from_axis(nodes: np.ndarray, I_ref: np.ndarray, mask_angle: float):
    k = np.linalg.norm(nodes, axis=1)
    cosang = np.abs(nodes @ I_ref) / k
    return np.arccos(np.clip(cosang, -1.0, 1.0)) < mask_angle


def build_box_grid(
    center,
    half_widths,
    npts,
    I_ref,
    mask_angle: float = 0.0,
    config: Config | None = None,
) -> KGrid:
    """Uniform Cartesian k-space lattice with trapezoidal weights."""
    config = config or Config()
    center = np.asarray(center, dtype=float)
    half_widths = np.asarray(half_widths, dtype=float)
    npts = tuple(int(n) for n in np.atleast_1d(npts) * np.ones(3, dtype=int))
    if np.any(half_widths <= 0):
        raise DegenerateAxis(f"half_widths must be positive, got {half_widths}")
    if min(npts) < 8:
        raise GridTooCoarse(f"need at least 8 points per axis, got {npts}")
    if not (0 <= mask_angle < np.pi / 4):
        raise ValueError("mask_angle must lie in [0, pi/4)")
    lo, hi = center - half_widths, center + half_widths
    if np.all(lo <= 0) and np.all(hi >= 0):
        raise BoxContainsOrigin(f"box [{lo}, {hi}] contains k = 0")

    axes, wts1d = [], []
    for c, h, n in zip(center, half_widths, npts):
        ax = np.linspace(c - h, c + h, n)
        w = np.full(n, ax[1] - ax[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        axes.append(ax)
        wts1d.append(w)
    K1, K2, K3 = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([K1.ravel(), K2.ravel(), K3.ravel()], axis=1)
    W1, W2, W3 = np.meshgrid(*wts1d, indexing="ij")
    weights = (W1 * W2 * W3).ravel()

    I_ref = _unit(I_ref)
    mask = _mask_from_axis(nodes, I_ref, mask_angle)
    spacing = np.array([ax[1] - ax[0] for ax in axes])
    order = config.fd_order
    meta = {
        "center": center,
        "half_widths": half_widths,
        "axes": axes,
        "spacing": spacing,
        "diff": [_fd_matrix(ax, order) for ax in axes],
        "k_norm": np.linalg.norm(nodes, axis=1),
        "interior": _box_interior(npts, order),
    }
    return KGrid("box", nodes, weights, npts, mask, I_ref, mask_angle, config, meta)


def _box_interior(npts, order) -> np.ndarray:
    """Nodes whose stencils (twice applied) avoid one-sided boundary rows."""
    depth = order  # two applications of a half-width order//2 stencil
    keep = np.zeros(npts, dtype=bool)
    sl = tuple(slice(depth, n - depth) for n in npts)
    keep[sl] = True
    return keep.ravel()


def build_spherical_grid(
    k_min: float,
    k_max: float,
    n_rad: int,
    n_pol: int,
    n_az: int,
    I_ref,
    mask_angle: float = 0.0,
    config: Config | None = None,
) -> KGrid:
    """Gauss-Legendre (r, cos theta) x uniform azimuth product grid.

    Quadrature weights follow the w_r * w_theta * w_phi * k^2 convention in
    the d^3k = k^2 dk d(cos theta) d(phi) measure. Poles are never sampled.
    """
    config = config or Config()
    if k_min <= 0 or k_min >= k_max:
        raise BadShellBounds(f"need 0 < k_min < k_max, got [{k_min}, {k_max}]")
    if min(n_rad, n_pol) < 4 or n_az < 4:
        raise GridTooCoarse("spherical grid needs at least 4 nodes per factor")

    xr, wr = np.polynomial.legendre.leggauss(n_rad)
    r = 0.5 * (k_max - k_min) * xr + 0.5 * (k_max + k_min)
    wr = 0.5 * (k_max - k_min) * wr
    x, wx = np.polynomial.legendre.leggauss(n_pol)
    phi = 2.0 * np.pi * np.arange(n_az) / n_az
    wphi = 2.0 * np.pi / n_az

    R, X, PH = np.meshgrid(r, x, phi, indexing="ij")
    ST = np.sqrt(1.0 - X**2)
    nodes = np.stack(
        [
            (R * ST * np.cos(PH)).ravel(),
            (R * ST * np.sin(PH)).ravel(),
            (R * X).ravel(),
        ],
        axis=1,
    )
    weights = (wr[:, None, None] * wx[None, :, None] * wphi * R**2).ravel()

    I_ref = _unit(I_ref)
    mask = (
        _mask_from_axis(nodes, I_ref, mask_angle)
        if mask_angle > 0
        else np.zeros(nodes.shape[0], dtype=bool)
    )
    st = np.sqrt(1.0 - x**2)
    unit_r = np.stack(
        [(ST * np.cos(PH)).ravel(), (ST * np.sin(PH)).ravel(), X.ravel()], axis=1
    )
    unit_theta = np.stack(
        [(X * np.cos(PH)).ravel(), (X * np.sin(PH)).ravel(), (-ST).ravel()], axis=1
    )
    unit_phi = np.stack(
        [(-np.sin(PH)).ravel(), np.cos(PH).ravel(), np.zeros(R.size)], axis=1
    )
    meta = {
        "k_min": k_min,
        "k_max": k_max,
        "r_nodes": r,
        "x_pol": x,
        "sin_pol": st,
        "phi": phi,
        "diff_r": _barycentric_diff_matrix(r),
        "diff_x": _barycentric_diff_matrix(x),
        "unit_r": unit_r,
        "unit_theta": unit_theta,
        "unit_phi": unit_phi,
        "k_norm": R.ravel(),
        "theta": np.arccos(X).ravel(),
        "phi_nodes": PH.ravel(),
        "interior": np.ones(nodes.shape[0], dtype=bool),
    }
    return KGrid(
        "sphere",
        nodes,
        weights,
        (n_rad, n_pol, n_az),
        mask,
        I_ref,
        mask_angle,
        config,
        meta,
    )


def quadrature(field: Field):
    """Integral of the field over the grid (unmasked nodes only)."""
    return field.grid.integrate(field.values)


def gradient(field: Field) -> Field:
    """Componentwise Cartesian gradient; see KGrid.gradient."""
    return Field(field.grid, field.grid.gradient(field.values))


# -- serialization ---------------------------------------------------------


def grid_to_json(grid: KGrid) -> str:
    d: dict[str, Any] = {
        "kind": grid.kind,
        "I_ref": grid.I_ref.tolist(),
        "mask_angle": grid.mask_angle,
        "constants": {
            "hbar": grid.config.hbar,
            "c": grid.config.c,
            "eps0": grid.config.eps0,
            "fd_order": grid.config.fd_order,
            "tol_quad": grid.config.tol_quad,
            "tol_fd": grid.config.tol_fd,
        },
    }
    if grid.kind == "box":
        d["center"] = grid.meta["center"].tolist()
        d["half_widths"] = grid.meta["half_widths"].tolist()
        d["npts"] = list(grid.shape)
    else:
        d["k_min"] = grid.meta["k_min"]
        d["k_max"] = grid.meta["k_max"]
        d["shape"] = list(grid.shape)
    return json.dumps(d, sort_keys=True)


def grid_from_json(doc: str) -> KGrid:
    d = json.loads(doc)
    config = Config(**d["constants"])
    if d["kind"] == "box":
        return build_box_grid(
            d["center"], d["half_widths"], d["npts"], d["I_ref"], d["mask_angle"], config
        )
    n_rad, n_pol, n_az = d["shape"]
    return build_spherical_grid(
        d["k_min"], d["k_max"], n_rad, n_pol, n_az, d["I_ref"], d["mask_angle"], config
    )


def save_field(path, field: Field) -> None:
    """Binary column dump: grid descriptor + per-node component values."""
    np.savez(
        path,
        descriptor=grid_to_json(field.grid),
        values=np.ascontiguousarray(field.values),
    )


def load_field(path) -> Field:
    with np.load(path, allow_pickle=False) as data:
        grid = grid_from_json(str(data["descriptor"]))
        return Field(grid, data["values"])
