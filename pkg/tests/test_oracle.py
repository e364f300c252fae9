import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wgscatter.dispersion import varpi, varpi_mode
from wgscatter.errors import DomainError, QuadratureError
from wgscatter.oracle import (
    Slab1D,
    branch_split_quadrature,
    dense_expm,
    interface_transfer,
    slab_interior,
    slab_rt,
    varpi_matrix,
    well_varpi_matrix_element,
)


def test_slab_validation():
    with pytest.raises(DomainError):
        Slab1D(1.0, 1.0, 1, 1)
    with pytest.raises(DomainError):
        interface_transfer(Slab1D(0, 1, 0, 1))


def test_interface_transfer_homogeneous_is_pure_phase():
    q, a = 1.3, 2.0
    M = interface_transfer(Slab1D(0.5, 0.5 + a, q, q))
    assert np.allclose(M, np.diag([1, 1]), atol=1e-14)  # re-referenced amplitudes cancel the phase
    M = interface_transfer(Slab1D(0.0, a, q, q))
    assert np.allclose(M, np.diag([1, 1]), atol=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 5), st.floats(0.1, 5), st.floats(-3, 3), st.floats(0.1, 4))
def test_interface_transfer_unit_determinant(q, kap2, x0, L):
    kap = complex(np.sqrt(complex(kap2 - 2.0)))
    if abs(kap) < 1e-6:
        return
    M = interface_transfer(Slab1D(x0, x0 + L, kap, q))
    assert np.linalg.det(M) == pytest.approx(1, abs=1e-10 * np.abs(M).max() ** 2)


def test_interface_transfer_composition():
    q = 1.7
    M1 = interface_transfer(Slab1D(0.0, 1.0, 0.9, q))
    M2 = interface_transfer(Slab1D(1.0, 2.5, 0.9, q))
    M = interface_transfer(Slab1D(0.0, 2.5, 0.9, q))
    assert np.abs(M2 @ M1 - M).max() <= 1e-12 * np.abs(M).max()


def test_slab_flux_and_thick_limit():
    r, t = slab_rt(Slab1D(0, 3, 1.1, 2.0))
    assert abs(r) ** 2 + abs(t) ** 2 == pytest.approx(1, abs=1e-13)
    # very thick evanescent slab: the single-interface reflection and no overflow
    r, t = slab_rt(Slab1D(0, 500, 2j, 1.0))
    assert r == pytest.approx((1 - 2j) / (1 + 2j))
    assert abs(t) < 1e-300
    r2, _ = slab_rt(Slab1D(0, 100, 2j, 1.0))
    assert r2 == pytest.approx(r, abs=1e-15)


def test_slab_interior_matches_faces():
    sl = Slab1D(-0.5, 1.5, 0.7 + 0.1j, 1.9)
    r, t, al, be = slab_interior(sl)
    L = sl.x_right - sl.x_left
    kap, q = sl.wavevector_inside, sl.wavevector_outside
    # value and slope continuity at both faces
    assert al + be * np.exp(1j * kap * L) == pytest.approx(1 + r)
    assert 1j * kap * (al - be * np.exp(1j * kap * L)) == pytest.approx(1j * q * (1 - r))
    assert al * np.exp(1j * kap * L) + be == pytest.approx(t)
    assert 1j * kap * (al * np.exp(1j * kap * L) - be) == pytest.approx(1j * q * t)


def test_dense_expm_basics():
    assert np.array_equal(dense_expm(np.zeros((3, 3))), np.eye(3))
    N = np.array([[0.5, 0.5], [-0.5, -0.5]])
    assert np.abs(dense_expm(N, 2.0 - 1j) - (np.eye(2) + (2.0 - 1j) * N)).max() <= 1e-15
    rng = np.random.default_rng(1)
    A = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    assert np.abs(dense_expm(A) @ dense_expm(A, -1) - np.eye(5)).max() <= 1e-12
    from scipy.linalg import expm

    B = A * 10 / np.linalg.norm(A)
    assert np.abs(dense_expm(B) - expm(B)).max() <= 1e-12 * np.abs(expm(B)).max()
    with pytest.raises(OverflowError):
        dense_expm(np.eye(2) * 1e6)
    with pytest.raises(DomainError):
        dense_expm(np.array([[np.inf]]))


def test_branch_split_quadrature_semicircle():
    val = branch_split_quadrature(lambda p: varpi(p, 1.0), 1.0, -2.0, 2.0)
    assert val.real == pytest.approx(math.pi / 2, abs=1e-10)
    # imaginary part: 2 int_1^2 sqrt(p^2 - 1) dp = 2 sqrt(3) - ln(2 + sqrt(3))
    assert val.imag == pytest.approx(2 * math.sqrt(3) - math.log(2 + math.sqrt(3)), abs=1e-10)
    half = branch_split_quadrature(lambda p: varpi(p, 1.0), 1.0, 0.0, 2.0)
    assert val == pytest.approx(2 * half, abs=1e-10)


def test_branch_split_quadrature_reports_failure():
    with pytest.raises(QuadratureError) as exc:
        branch_split_quadrature(lambda p: 1 / math.sqrt(abs(p - 0.3)) * math.sin(1e4 * p), 1.0, -1.0, 1.0, tol=1e-14, limit=5)
    assert exc.value.panels


def test_varpi_matrix_structure():
    P = varpi_matrix(math.pi, 4, 2.5)
    assert P[0, 1] == 0 and P[1, 2] == 0
    assert np.allclose(P, P.T)
    assert abs(P[0, 2]) > 1e-3


def test_varpi_element_against_brute_force():
    from scipy import integrate

    from wgscatter.wells import phi_tilde

    b, k = 2.0, 1.7
    f = lambda p: (np.conj(phi_tilde(1, p, b)) * varpi(p, k) * phi_tilde(3, p, b))
    re = integrate.quad(lambda p: f(p).real, -k, k, limit=400)[0]
    im = 2 * integrate.quad(lambda p: f(p).imag, k, 400, limit=4000)[0]
    val = well_varpi_matrix_element(b, 1, 3, k)
    assert val.real == pytest.approx(re / (2 * math.pi), abs=1e-9)
    # the brute-force tail past p = 400 is ~ 1/400^2, so compare loosely there
    assert val.imag == pytest.approx(im / (2 * math.pi), abs=1e-4)


@pytest.mark.xfail(strict=True, reason="free-space varpi between well modes is not diagonal on them; see decisions ledger")
def test_varpi_quadrature_reproduces_mode_value():
    val = well_varpi_matrix_element(math.pi, 1, 1, 2.5)
    assert val == pytest.approx(varpi_mode(1, 2.5, math.pi), abs=1e-8)
