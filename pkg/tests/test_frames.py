import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helika.errors import SingularLine
from helika.frames import (
    ALPHA,
    SIGMA,
    frame_rotation_angle,
    frame_vectors,
    helicity_matrix_lab,
    polarization_frame,
    quasi_unitary,
    rotation_matrix,
    varpi_field,
)


def test_triad_oracle():
    # axis along z, wavevector along x
    fr = polarization_frame((0, 0, 1), (1.0, 0.0, 0.0))
    assert np.allclose(fr.v, (0, 1, 0))
    assert np.allclose(fr.u, (0, 0, -1))
    assert np.allclose(fr.w, (1, 0, 0))


def test_singular_direction_raises():
    with pytest.raises(SingularLine):
        polarization_frame((0, 0, 1), (0.0, 0.0, 2.0))


def test_sigma_eigenvectors():
    for sgn in (+1, -1):
        assert np.allclose(SIGMA @ ALPHA[sgn], sgn * ALPHA[sgn])
    assert np.allclose(np.conj(ALPHA[+1]) @ ALPHA[-1], 0.0)


def test_rotation_angle_oracle():
    # a quarter-turn of the axis seen from the y direction
    phi = frame_rotation_angle((0, 0, 1), (1, 0, 0), (0.0, 1.0, 0.0))
    assert np.isclose(phi, np.pi / 2)
    assert np.isclose(frame_rotation_angle((0, 0, 1), (0, 0, 1), (0.0, 1.0, 0.0)), 0.0)


def test_rotation_matrix_is_exp_of_sigma():
    phi = 0.7321
    expected = np.eye(2) * np.cos(phi) - 1j * SIGMA * np.sin(phi)
    assert np.allclose(rotation_matrix(phi), expected.real)
    assert np.allclose(rotation_matrix(phi) @ rotation_matrix(-phi), np.eye(2))


_unit3 = st.tuples(*[st.floats(-1, 1) for _ in range(3)]).filter(
    lambda t: 0.1 < np.linalg.norm(t) <= np.sqrt(3.0)
)


@settings(max_examples=200, deadline=None)
@given(_unit3, _unit3)
def test_triad_properties(i_vec, k_vec):
    I = np.asarray(i_vec) / np.linalg.norm(i_vec)
    k = np.asarray(k_vec, dtype=float)
    if np.linalg.norm(np.cross(I, k)) / np.linalg.norm(k) < 1e-6:
        return  # singular line; covered by the raising test
    fr = polarization_frame(I, k)
    for a, b in ((fr.u, fr.v), (fr.v, fr.w), (fr.w, fr.u)):
        assert abs(a @ b) < 1e-12
    assert np.allclose(np.cross(fr.u, fr.v), fr.w, atol=1e-12)
    assert abs(fr.v @ I) < 1e-12
    varpi = quasi_unitary(fr)
    assert np.allclose(varpi.T @ varpi, np.eye(2), atol=1e-12)
    assert np.allclose(varpi @ varpi.T, np.eye(3) - np.outer(fr.w, fr.w), atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(_unit3, _unit3, _unit3)
def test_rotation_reconstruction_property(i_vec, ip_vec, k_vec):
    I = np.asarray(i_vec) / np.linalg.norm(i_vec)
    Ip = np.asarray(ip_vec) / np.linalg.norm(ip_vec)
    k = np.asarray(k_vec, dtype=float)
    kn = np.linalg.norm(k)
    if min(np.linalg.norm(np.cross(I, k)), np.linalg.norm(np.cross(Ip, k))) / kn < 1e-6:
        return
    va = quasi_unitary(polarization_frame(I, k))
    vb = quasi_unitary(polarization_frame(Ip, k))
    phi = frame_rotation_angle(I, Ip, k)
    assert np.max(np.abs(vb - va @ rotation_matrix(phi))) < 1e-10


@settings(max_examples=100, deadline=None)
@given(_unit3)
def test_helicity_matrix_property(w_vec):
    w = np.asarray(w_vec) / np.linalg.norm(w_vec)
    sig = helicity_matrix_lab(w)
    assert np.allclose(sig, np.conj(sig.T))
    assert np.allclose(np.sort(np.linalg.eigvalsh(sig)), (-1, 0, 1), atol=1e-12)
    assert np.allclose(sig @ w, 0.0, atol=1e-12)


def test_helicity_action_on_circular_columns():
    fr = polarization_frame((0, 0, 1), (1.0, 2.0, 0.5))
    varpi = quasi_unitary(fr)
    sig = helicity_matrix_lab(fr.w)
    for sgn in (+1, -1):
        e = varpi @ ALPHA[sgn]
        assert np.max(np.abs(sig @ e - sgn * e)) < 1e-12


def test_varpi_field_matches_pointwise(small_grid):
    varpi = varpi_field((0, 0, 1), small_grid)
    n = small_grid.n_nodes // 3
    expected = quasi_unitary(polarization_frame((0, 0, 1), small_grid.nodes[n]))
    assert np.allclose(varpi[n], expected)


def test_frame_vectors_masked_rows_are_placeholder():
    K = np.array([[0.0, 0.0, 2.0], [1.0, 0.0, 0.0]])
    mask = np.array([True, False])
    u, v, w = frame_vectors((0, 0, 1), K, mask=mask)
    assert np.all(np.isfinite(u)) and np.all(np.isfinite(v))
    assert np.allclose(w[1], (1, 0, 0))
