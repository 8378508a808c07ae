"""Observables on two-component states and commutator expectations.

Vector-valued operators (momentum, positions, spin, the orbital pieces)
return one applied state per Cartesian component. Expectations are
quadratures of f~^dag (op f~); commutator expectations use two nested
applications with boundary stencil rows dropped from the final quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Callable

import numpy as np

from .errors import GridTooCoarse, MaskMismatch
from .frames import SIGMA, frame_vectors
from .kgrid import KGrid
from .states import TwoCompState, VectorState, to_lab

__all__ = [
    "BerryConnection",
    "ObservableReport",
    "berry_potential",
    "berry_curvature",
    "closed_form_curvature",
    "monopole_flux",
    "plane_wave_barycenter",
    "VECTOR_OPS",
    "SCALAR_OPS",
    "COMMUTATOR_PAIRS",
    "apply",
    "expect",
    "barycenter",
    "commutator_expect",
    "fd_commutator_tolerance",
    "spin_alignment_residual",
    "sigma_w_gradient_expect",
]

VECTOR_OPS = (
    "momentum",
    "canonical_position",
    "position_lab",
    "berry_connection",
    "spin",
    "oam_lambda",
    "oam_m",
    "oam_total",
    "j_total",
)
SCALAR_OPS = ("helicity",)

# Empirical truncation-error coefficient of the nested finite-difference
# commutators, calibrated on the canonical-pair case; tolerances scale as
# coeff * h^fd_order relative to the operator magnitudes involved.
FD_COMMUTATOR_COEFF = {2: 0.5, 4: 0.12}


@dataclass(frozen=True)
class BerryConnection:
    grid: KGrid
    A: np.ndarray  # (N, 3) real, zero at masked nodes
    I: np.ndarray


@dataclass(frozen=True)
class ObservableReport:
    name: str
    value: object
    reference: object
    abs_err: float
    rel_err: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("value", "reference"):
            v = d[key]
            if isinstance(v, np.ndarray):
                d[key] = v.tolist()
            elif isinstance(v, complex):
                d[key] = [v.real, v.imag]
        return d


def make_report(name, value, reference, tolerance) -> ObservableReport:
    va = np.asarray(value)
    rf = np.asarray(reference)
    abs_err = float(np.max(np.abs(va - rf)))
    scale = float(np.max(np.abs(rf)))
    rel_err = abs_err / scale if scale > 0 else abs_err
    return ObservableReport(
        name,
        value,
        reference,
        abs_err,
        rel_err,
        float(tolerance),
        bool(abs_err <= tolerance or rel_err <= tolerance),
    )


# -- Berry potential and curvature ----------------------------------------


def _require_mask(I, grid: KGrid, exc=MaskMismatch):
    """Unmasked nodes must stay clear of the singular line of I."""
    I = np.asarray(I, dtype=float)
    I = I / np.linalg.norm(I)
    k = grid.k_norm
    cnorm = np.linalg.norm(np.cross(np.broadcast_to(I, grid.nodes.shape), grid.nodes), axis=1)
    if np.any((cnorm / k < 1e-9) & ~grid.mask):
        raise exc(f"grid mask leaves nodes on the singular line of I={I}")
    return I


def berry_potential(I, grid: KGrid) -> BerryConnection:
    """A(k) = ((I.k)/(k |I x k|)) v_I(k); zeroed at masked nodes."""
    I = _require_mask(I, grid)
    _, v, _ = frame_vectors(I, grid.nodes, mask=grid.mask)
    k = grid.k_norm
    cross = np.linalg.norm(
        np.cross(np.broadcast_to(I, grid.nodes.shape), grid.nodes), axis=1
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        mag = (grid.nodes @ I) / (k * cross)
    A = mag[:, None] * v
    A[grid.mask] = 0.0
    return BerryConnection(grid, A, I)


def berry_curvature(conn: BerryConnection) -> np.ndarray:
    """Numeric curl of the Berry potential, shape (N, 3)."""
    dA = conn.grid.gradient(conn.A)  # (N, 3 comp, 3 deriv)
    curl = np.stack(
        [
            dA[:, 2, 1] - dA[:, 1, 2],
            dA[:, 0, 2] - dA[:, 2, 0],
            dA[:, 1, 0] - dA[:, 0, 1],
        ],
        axis=1,
    )
    return curl.real


def closed_form_curvature(K: np.ndarray) -> np.ndarray:
    """Unit-strength monopole field -w / k^2."""
    K = np.atleast_2d(np.asarray(K, dtype=float))
    k = np.linalg.norm(K, axis=1)
    return -K / (k**3)[:, None]


def monopole_flux(radius: float, n_pol: int = 32, n_az: int = 64) -> float:
    """Gauss-Legendre flux of the closed-form curvature through |k| = R."""
    x, wx = np.polynomial.legendre.leggauss(n_pol)
    phi = 2.0 * np.pi * np.arange(n_az) / n_az
    wphi = 2.0 * np.pi / n_az
    X, PH = np.meshgrid(x, phi, indexing="ij")
    st = np.sqrt(1.0 - X**2)
    w = np.stack(
        [(st * np.cos(PH)).ravel(), (st * np.sin(PH)).ravel(), X.ravel()], axis=1
    )
    H = closed_form_curvature(radius * w)
    area_w = (wx[:, None] * wphi * np.ones_like(PH)).ravel() * radius**2
    return float(np.sum(area_w * np.sum(H * w, axis=1)))


def plane_wave_barycenter(I, k0, sigma: int) -> np.ndarray:
    """Closed-form barycenter eigenvalue of the plane-wave state at k0."""
    I = np.asarray(I, dtype=float)
    I = I / np.linalg.norm(I)
    k0 = np.asarray(k0, dtype=float)
    cross = np.cross(I, k0)
    return sigma * (I @ k0) / (np.linalg.norm(k0) * (cross @ cross)) * cross


# -- operator application --------------------------------------------------


def _sigma_apply(values: np.ndarray) -> np.ndarray:
    return values @ SIGMA.T


class _OpContext:
    """Per-state cache of frame fields and the Berry potential."""

    def __init__(self, s: TwoCompState):
        self.grid = s.grid
        self.I = _require_mask(s.I, s.grid)
        self.hbar = s.grid.config.hbar
        self.u, self.v, self.w = frame_vectors(self.I, s.grid.nodes, mask=s.grid.mask)
        self.A = berry_potential(self.I, s.grid).A
        k = s.grid.k_norm
        cross = np.linalg.norm(
            np.cross(np.broadcast_to(self.I, s.grid.nodes.shape), s.grid.nodes), axis=1
        )
        with np.errstate(divide="ignore", invalid="ignore"):
            self.m_mag = (s.grid.nodes @ self.I) / cross
        self.m_mag[s.grid.mask] = 0.0

    def components(self, op_id: str, values: np.ndarray) -> list[np.ndarray]:
        """The three (N, 2) component fields of a vector operator."""
        g = self.grid
        K = g.nodes
        hbar = self.hbar
        if op_id == "momentum":
            return [hbar * K[:, i, None] * values for i in range(3)]
        if op_id == "canonical_position":
            grad = g.gradient(values)
            return [1j * grad[:, :, i] for i in range(3)]
        if op_id == "berry_connection":
            sv = _sigma_apply(values)
            return [self.A[:, i, None] * sv for i in range(3)]
        if op_id == "position_lab":
            grad = g.gradient(values)
            sv = _sigma_apply(values)
            return [1j * grad[:, :, i] + self.A[:, i, None] * sv for i in range(3)]
        if op_id == "spin":
            sv = _sigma_apply(values)
            return [hbar * self.w[:, i, None] * sv for i in range(3)]
        if op_id == "oam_lambda":
            grad = g.gradient(values)
            return [
                -1j
                * hbar
                * (
                    K[:, (i + 1) % 3, None] * grad[:, :, (i + 2) % 3]
                    - K[:, (i + 2) % 3, None] * grad[:, :, (i + 1) % 3]
                )
                for i in range(3)
            ]
        if op_id == "oam_m":
            sv = _sigma_apply(values)
            return [
                hbar * (self.m_mag * self.u[:, i])[:, None] * sv for i in range(3)
            ]
        if op_id == "oam_total":
            lam = self.components("oam_lambda", values)
            m = self.components("oam_m", values)
            return [a + b for a, b in zip(lam, m)]
        if op_id == "j_total":
            l = self.components("oam_total", values)
            s = self.components("spin", values)
            return [a + b for a, b in zip(l, s)]
        raise ValueError(f"unknown vector operator {op_id!r}")


def apply(op_id: str, s: TwoCompState):
    """Apply a named operator; vector operators return a 3-tuple of states."""
    if op_id == "helicity":
        return TwoCompState(s.grid, _sigma_apply(s.values), s.I, s.t)
    ctx = _OpContext(s)
    comps = ctx.components(op_id, s.values)
    return tuple(TwoCompState(s.grid, c, s.I, s.t) for c in comps)


def expect(op_id: str, s: TwoCompState, reference=None, tolerance=None):
    """Expectation value; a report when a reference is given.

    Without a reference the report checks hermiticity: the imaginary part
    of the quadrature must stay below 10 * tol_quad.
    """
    g = s.grid
    conj = np.conj(s.values)
    if op_id == "helicity":
        raw = [complex(g.integrate(np.sum(conj * _sigma_apply(s.values), axis=1)))]
    else:
        ctx = _OpContext(s)
        raw = [
            complex(g.integrate(np.sum(conj * c, axis=1)))
            for c in ctx.components(op_id, s.values)
        ]
    value = raw[0].real if op_id == "helicity" else np.array([r.real for r in raw])
    imag = max(abs(r.imag) for r in raw)
    if reference is None:
        # hermiticity check only: imaginary residual of the quadrature
        return make_report(op_id + "_herm", imag, 0.0, 10.0 * g.config.tol_quad)
    return make_report(op_id, value, reference, tolerance)


def expect_value(op_id: str, s: TwoCompState):
    """Real part of the expectation, as a scalar or length-3 array."""
    g = s.grid
    conj = np.conj(s.values)
    if op_id == "helicity":
        return complex(g.integrate(np.sum(conj * _sigma_apply(s.values), axis=1))).real
    ctx = _OpContext(s)
    return np.array(
        [
            complex(g.integrate(np.sum(conj * c, axis=1))).real
            for c in ctx.components(op_id, s.values)
        ]
    )


def barycenter(s: TwoCompState):
    """(<b_I>, <xi>): intrinsic-origin position and canonical center."""
    return expect_value("berry_connection", s), expect_value("canonical_position", s)


# -- commutators -----------------------------------------------------------

COMMUTATOR_PAIRS = {
    # pair_id: (op A, op B, reference builder)
    "canonical_pair": ("canonical_position", "momentum", "delta"),
    "canonical_position": ("canonical_position", "canonical_position", "zero"),
    "position_lab": ("position_lab", "position_lab", "curvature_sigma"),
    "oam": ("oam_total", "oam_total", "l_minus_s"),
    "oam_spin": ("oam_total", "spin", "s"),
    "j": ("j_total", "j_total", "j"),
    "spin_lab": ("spin", "spin", "zero"),
    "lambda": ("oam_lambda", "oam_lambda", "lambda"),
    "m": ("oam_m", "oam_m", "zero"),
}

_EPS = np.zeros((3, 3, 3))
_EPS[0, 1, 2] = _EPS[1, 2, 0] = _EPS[2, 0, 1] = 1.0
_EPS[0, 2, 1] = _EPS[2, 1, 0] = _EPS[1, 0, 2] = -1.0


def _commutator_reference(kind: str, s: TwoCompState, i: int, j: int) -> complex:
    hbar = s.grid.config.hbar
    if kind == "zero":
        return 0.0
    if kind == "delta":
        return 1j * hbar if i == j else 0.0
    if kind == "curvature_sigma":
        # i eps_ijk <H_k sigma>, H = -w/k^2
        H = closed_form_curvature(s.grid.nodes)
        sv = _sigma_apply(s.values)
        dens = np.sum(np.conj(s.values) * sv, axis=1)
        Hk = np.array([complex(s.grid.integrate(H[:, k] * dens)) for k in range(3)])
        return 1j * complex(_EPS[i, j] @ Hk)
    if kind in ("l_minus_s", "s", "j", "lambda"):
        if kind == "l_minus_s":
            vec = expect_value("oam_total", s) - expect_value("spin", s)
        elif kind == "s":
            vec = expect_value("spin", s)
        elif kind == "j":
            vec = expect_value("j_total", s)
        else:
            vec = expect_value("oam_lambda", s)
        return 1j * hbar * float(_EPS[i, j] @ vec)
    raise ValueError(kind)


def state_feature_scale(s: TwoCompState) -> float:
    """Smallest per-axis standard deviation of the probability density."""
    g = s.grid
    dens = np.sum(np.abs(s.values) ** 2, axis=1) * g.weights
    dens = dens / np.sum(dens)
    mean = dens @ g.nodes
    var = dens @ (g.nodes - mean) ** 2
    return float(np.sqrt(np.min(var)))


def fd_commutator_tolerance(s: TwoCompState, scale: float = 1.0) -> float:
    """Truncation-limited tolerance of nested derivative commutators.

    Truncation error grows with the grid spacing measured against the
    state's narrowest spectral feature, (h / sigma)^order; the prefactor
    is calibrated on Gaussian packets with a ~4x safety margin.
    """
    g = s.grid
    order = g.config.fd_order
    if g.kind == "box":
        h = float(np.max(g.meta["spacing"]))
        ratio = h / state_feature_scale(s)
        return FD_COMMUTATOR_COEFF[order] * ratio**order * scale
    # spectral differentiation: quadrature-limited
    return 100.0 * g.config.tol_quad * scale


def commutator_expect(
    pair_id: str, s: TwoCompState, i: int, j: int, tolerance: float | None = None
) -> ObservableReport:
    """<[A_i, B_j]> by nested application, against the pair's reference.

    Boundary stencil rows (where one-sided differences degrade twice-applied
    derivatives) are dropped from the quadrature; the state's envelope is
    required to have decayed there.
    """
    op_a, op_b, ref_kind = COMMUTATOR_PAIRS[pair_id]
    ctx = _OpContext(s)
    if s.grid.kind == "box" and np.count_nonzero(s.grid.meta["interior"]) == 0:
        raise GridTooCoarse("no interior nodes survive two stencil applications")
    b_first = ctx.components(op_b, s.values)[j]
    a_first = ctx.components(op_a, s.values)[i]
    ab = ctx.components(op_a, b_first)[i]
    ba = ctx.components(op_b, a_first)[j]
    comm = ab - ba
    dens = np.sum(np.conj(s.values) * comm, axis=1)
    interior = s.grid.meta["interior"] & ~s.grid.mask
    value = complex(np.sum(s.grid.weights[interior] * dens[interior]))
    reference = _commutator_reference(ref_kind, s, i, j)
    if tolerance is None:
        hbar = s.grid.config.hbar
        deriv_free = {"spin_lab", "m"}
        tolerance = (
            1e-13 * hbar
            if pair_id in deriv_free
            else fd_commutator_tolerance(s, scale=hbar * _commutator_scale(pair_id, s))
        )
    return make_report(f"[{pair_id}]_{i}{j}", value, reference, tolerance)


def _commutator_scale(pair_id: str, s: TwoCompState) -> float:
    """Magnitude prefactor of the pair's truncation error."""
    kmax = float(np.max(s.grid.k_norm[~s.grid.mask]))
    if pair_id in ("canonical_pair", "canonical_position", "position_lab"):
        return 1.0
    # angular-momentum pairs pick up two powers of k from k x grad
    return kmax**2


# -- spin diagnostics ------------------------------------------------------


def spin_alignment_residual(s: TwoCompState) -> tuple[float, float]:
    """(lab-vs-intrinsic spin mismatch, relative norm of k x (S f)).

    The first entry compares <S> = hbar <w sigma> with the laboratory-side
    quadrature of f^dag (hbar w Sigma_w) f. The second is the transversality
    of the spin density: k x (S f) vanishes identically on transverse states,
    which is also why the Pryce correction k x S / k^2 is inert.
    """
    vs = to_lab(s)
    g = s.grid
    hbar = g.config.hbar
    _, _, w = frame_vectors(s.I, g.nodes, mask=g.mask)
    f = vs.values
    # Sigma_w f = i (w x f)
    sig_f = 1j * np.cross(np.broadcast_to(w, f.shape), f)
    lab = np.array(
        [
            complex(g.integrate(hbar * w[:, i] * np.sum(np.conj(f) * sig_f, axis=1))).real
            for i in range(3)
        ]
    )
    intr = expect_value("spin", s)
    mismatch = float(np.max(np.abs(lab - intr)))
    # S f has components (S_i f)_a = hbar w_i (Sigma_w f)_a; k x S over the
    # operator index i is hbar (k x w) (Sigma_w f) = 0 exactly.
    kxw = np.cross(g.nodes, w)
    dens = np.sum(
        np.abs(kxw[:, :, None] * sig_f[:, None, :] * hbar) ** 2, axis=(1, 2)
    )
    num = float(np.abs(g.integrate(dens)))
    den = float(np.abs(g.integrate(np.sum(np.abs(f) ** 2, axis=1))))
    return mismatch, num / den


def sigma_w_gradient_expect(s: TwoCompState) -> float:
    """max_i |<f| ((w x Sigma) x w)_i / k |f>| on the paired lab state.

    The matrix identity d_i Sigma_w = (Sigma_i - w_i Sigma_w)/k combines
    with w x Sigma = 0 on transverse states to make this vanish.
    """
    vs = to_lab(s)
    g = s.grid
    f = vs.values
    k = g.k_norm
    w = g.nodes / k[:, None]
    # (Sigma_i f)_a = -i eps_abi f_b;  Sigma_w f = i (w x f)
    sig_i_f = -1j * np.einsum("abi,nb->nai", _EPS, f)
    sig_w_f = 1j * np.cross(w, f)
    worst = 0.0
    for i in range(3):
        dens = np.sum(
            np.conj(f) * (sig_i_f[:, :, i] - w[:, i, None] * sig_w_f), axis=1
        ) / k
        worst = max(worst, abs(complex(g.integrate(dens))))
    return worst
