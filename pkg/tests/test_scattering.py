import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wgscatter.dispersion import Incidence
from wgscatter.engine import WellBasis, assemble_gamma_general
from wgscatter.errors import DomainError, GrazingModeError, TruncationError
from wgscatter.oracle import Slab1D, slab_rt
from wgscatter.scattering import (
    ModeKind,
    Regime,
    Truncation,
    amplitudes,
    classify_regime,
    coefficient_arrays,
    coefficient_set,
    default_theta_grid,
    gamma_kernel,
    gamma_kernel_large_a,
    interior_s_matrix,
    mode_injection,
    per_mode_coefficients,
    wall_terms,
)
from wgscatter.wells import WaveguideSpec, eta, make_mode, phi_tilde

PI = math.pi


def coeffs(n, k, spec):
    return per_mode_coefficients(make_mode(n, k, spec), k, spec)


def test_empty_guide_coefficients():
    spec = WaveguideSpec(0, 2, PI, 0.0)
    c = coeffs(1, 2.5, spec)
    assert c.kind is ModeKind.PROPAGATING
    assert c.c_plus == pytest.approx(np.exp(2j * math.sqrt(5.25)))
    assert c.c_minus == 0
    ev = coeffs(4, 2.5, spec)
    assert ev.kind is ModeKind.EVANESCENT and ev.c_minus == 0
    assert ev.t_n == pytest.approx(0, abs=1e-15)


def test_empty_guide_exceptional_mode_transmits_fully():
    spec = WaveguideSpec(0, 5, PI, 0.0)
    assert coeffs(1, 1.0, spec).c_plus == 1


def test_flux_example():
    c = coeffs(1, 2.5, WaveguideSpec(0, 2, PI, 1.0))
    assert c.flux == pytest.approx(1, abs=1e-10)


def test_coefficients_match_oracle():
    spec = WaveguideSpec(-0.3, 1.9, 2.0, 1.7)
    for n in (1, 2, 3, 6):
        m = make_mode(n, 2.9, spec)
        c = per_mode_coefficients(m, 2.9, spec)
        r, t = slab_rt(Slab1D(spec.a_minus, spec.a_plus, m.w_n, m.varpi_n))
        # the reflection-like coefficient carries the opposite sign to the face reflection
        assert c.c_plus == pytest.approx(t, rel=1e-10, abs=1e-300)
        assert c.c_minus == pytest.approx(-r, rel=1e-10)


def test_exceptional_limit_branch():
    k = math.sqrt(5)
    spec = WaveguideSpec(0, 2, PI, 1.0)
    c = coeffs(2, k, spec)
    assert c.kind is ModeKind.EXCEPTIONAL
    assert c.c_plus == pytest.approx(1 / (1 - 1j))
    assert c.c_minus == c.c_plus - 1


def test_grazing_mode_raises():
    with pytest.raises(GrazingModeError):
        coeffs(3, 3.0, WaveguideSpec(0, 1, PI, 1.0))
    with pytest.raises(GrazingModeError):
        gamma_kernel(0.1, 0.2, 3.0, WaveguideSpec(0, 1, PI, 1.0))


def test_complex_filling_flux_and_oracle():
    # with exp(-i omega t) time dependence Im V0 < 0 absorbs and Im V0 > 0 amplifies
    n = np.arange(1, 3)
    for V0, lossy in ((1.0 - 0.4j, True), (1.0 + 0.4j, False)):
        spec = WaveguideSpec(0, 2, PI, V0)
        cp, cm = coefficient_arrays(2.5, spec, n)
        assert np.all((np.abs(cp) ** 2 + np.abs(cm) ** 2 < 1) == lossy)
        for i, m in enumerate(n):
            mode = make_mode(int(m), 2.5, spec)
            r, t = slab_rt(Slab1D(0, 2, mode.w_n, mode.varpi_n))
            assert cp[i] == pytest.approx(t, rel=1e-10) and cm[i] == pytest.approx(-r, rel=1e-10)


def test_gamma_minus_vanishes_for_empty_guide():
    spec = WaveguideSpec(0, 1, PI, 0.0)
    p = np.linspace(-2.4, 2.4, 7)
    kv = gamma_kernel(p, 0.3, 2.5, spec)
    assert np.abs(kv.gamma_minus).max() == 0


def test_gamma_kernel_swap_symmetry():
    spec = WaveguideSpec(0, 2, PI, 1.0)
    for p, p0 in [(0.3, -1.1), (2.0, 0.4), (-0.7, -0.7)]:
        a = gamma_kernel(p, p0, 2.5, spec)
        b = gamma_kernel(-p0, -p, 2.5, spec)
        assert a.gamma_plus == pytest.approx(b.gamma_plus, abs=1e-12)
        assert a.gamma_minus == pytest.approx(b.gamma_minus, abs=1e-12)


def test_gamma_kernel_value():
    kv = gamma_kernel(0.3, 0.3, 2.5, WaveguideSpec(0, 2, PI, 1.0))
    assert kv.gamma_plus == pytest.approx(-0.2263 - 0.3053j, abs=1e-4)
    assert kv.gamma_minus == pytest.approx(-0.02914 + 0.01586j, abs=1e-5)
    assert kv.n_used == 330 and kv.tail_estimate <= 1e-10


def test_gamma_kernel_matches_general_assembly():
    spec = WaveguideSpec(0, 2, PI, 1.0)
    kv = gamma_kernel(0.3, 0.3, 2.5, spec)
    gp, gm = assemble_gamma_general(WellBasis(PI, 1.0), 2.5, spec, kv.n_used)
    f = np.abs(phi_tilde(np.arange(1, kv.n_used + 1), 0.3, PI)) ** 2 / (2 * PI)
    assert (np.diag(gp) * f).sum() == pytest.approx(kv.gamma_plus, abs=1e-8)
    assert (np.diag(gm) * f).sum() == pytest.approx(kv.gamma_minus, abs=1e-8)


def test_gamma_kernel_domain_and_truncation_errors():
    spec = WaveguideSpec(0, 2, PI, 1.0)
    with pytest.raises(DomainError):
        gamma_kernel(2.5, 0.0, 2.5, spec)
    with pytest.raises(TruncationError) as exc:
        gamma_kernel(0.3, 0.3, 2.5, spec, Truncation(max_modes=40))
    assert exc.value.n_used == 40 and exc.value.tail_estimate > 0


def test_large_a_approximation():
    b, k, V0 = PI, 2.5, 1.0
    spec = WaveguideSpec(0, 40, b, V0)
    ratio = spec.a * eta(k, b, V0) / b
    assert ratio >= 10
    p = np.linspace(-2.4, 2.4, 9)
    full, approx = gamma_kernel(p, 0.3, k, spec), gamma_kernel_large_a(p, 0.3, k, spec)
    # the analytic bound sits below double precision here, so allow a rounding floor
    scale = np.abs(full.gamma_plus).max()
    bound = max(10 * math.exp(-math.sqrt(2) * PI * ratio), 64 * np.finfo(float).eps * scale)
    assert np.abs(full.gamma_plus - approx.gamma_plus).max() <= bound
    assert np.abs(full.gamma_minus - approx.gamma_minus).max() <= bound


def test_wall_terms():
    spec = WaveguideSpec(-1.3, 0.7, PI, 4.0)
    inc = Incidence.from_degrees(2.0, 25)
    c0 = inc.cos0
    smooth, delta = wall_terms(PI - inc.theta0, inc, spec)
    assert abs(smooth) == pytest.approx(2.0 * c0 * PI / (2 * PI))
    phase = np.exp(2j * spec.a_minus * 2.0 * c0)
    assert smooth == pytest.approx(-2.0 * c0 * PI / (2 * PI) * phase)
    assert delta.theta_sing == pytest.approx(PI - inc.theta0)
    assert delta.coeff == pytest.approx(-1j * phase)
    # independent of the filling
    s2, _ = wall_terms(PI - inc.theta0, inc, WaveguideSpec(-1.3, 0.7, PI, 0.0))
    assert s2 == smooth
    right = Incidence.from_degrees(2.0, 180 - 25)
    sr, dr = wall_terms(0.2, right, spec)
    assert dr.coeff == pytest.approx(-1j * np.exp(2j * spec.a_plus * 2.0 * right.cos0))
    assert dr.theta_sing == pytest.approx(inc.theta0)
    with pytest.raises(DomainError):
        wall_terms(0.2, inc, spec)


def test_empty_guide_reflection_is_wall_only():
    spec = WaveguideSpec(-0.5, 1.5, PI, 0.0)
    inc = Incidence.from_degrees(2.5, 10)
    A = amplitudes(inc, spec, default_theta_grid(points=31))
    wall, _ = wall_terms(A.R.theta, inc, spec)
    assert np.abs(A.R.smooth - (-1j * math.sqrt(2 * PI) * wall)).max() <= 1e-13


def test_amplitude_reciprocity_of_interior_terms():
    spec = WaveguideSpec(-0.5, 1.5, PI, 1.0)
    th = default_theta_grid(points=11)
    left = amplitudes(Incidence.from_degrees(2.5, 15), spec, th)
    right = amplitudes(Incidence.from_degrees(2.5, 165), spec, PI - th)
    # same Gamma_+ factor, phases with a_minus and a_plus swapped
    k, c0, c = 2.5, math.cos(math.radians(15)), np.cos(th)
    gl = left.T.smooth / np.exp(1j * k * (spec.a_minus * c0 - spec.a_plus * c))
    gr = right.T.smooth / np.exp(1j * k * (spec.a_plus * -c0 - spec.a_minus * -c))
    assert np.abs(gl - gr).max() <= 1e-12 * np.abs(gl).max()


def test_filter_regime_suppresses_transmission():
    spec = WaveguideSpec(0, 20, PI, 10.0)
    assert classify_regime(0.5, spec).regime is Regime.FILTER
    A = amplitudes(Incidence.from_degrees(0.5, 0), spec)
    assert np.abs(A.T.smooth).max() <= 1e-4


def test_continuity_across_exceptional_point():
    spec = WaveguideSpec(0, 2, PI, 1.0)
    ks = math.sqrt(5)
    th = np.linspace(-1.4, 1.4, 21)
    ref = amplitudes(Incidence(ks, math.radians(20)), spec, th)
    for eps in (1e-6, -1e-6):
        A = amplitudes(Incidence(ks + eps, math.radians(20)), spec, th)
        assert np.abs(A.R.smooth - ref.R.smooth).max() <= 1e-4
        assert np.abs(A.T.smooth - ref.T.smooth).max() <= 1e-4


def test_amplitudes_reject_bad_grid():
    spec = WaveguideSpec(0, 1, PI, 1.0)
    with pytest.raises(DomainError):
        amplitudes(Incidence.from_degrees(2.5, 10), spec, [PI / 2])
    with pytest.raises(DomainError):
        amplitudes(Incidence.from_degrees(2.5, 10), spec, [PI - 0.2])


def test_coefficient_set_support():
    spec = WaveguideSpec(0, 1, PI, 1.0)
    p = np.array([-3.0, -1.0, 0.0, 2.0, 2.6])
    cs = coefficient_set(Incidence.from_degrees(2.5, 10), spec, p)
    outside = np.abs(p) >= 2.5
    assert np.all(cs.A_plus[1][outside] == 0) and np.all(cs.B_minus[1][outside] == 0)
    assert np.all(cs.A_plus[1][~outside] != 0)


def test_interior_s_matrix():
    s0 = interior_s_matrix(2.5, WaveguideSpec(0, 2, PI, 0.0), 8)
    assert np.all(s0[:, 0, 1] == 0) and np.all(s0[:, 1, 0] == 0)
    spec = WaveguideSpec(0.5, 2.5, PI, 1.0)
    ks = math.sqrt(5)
    S = interior_s_matrix(ks, spec, 8)
    assert np.array_equal(S[:, 0, 0], S[:, 1, 1])
    vp = make_mode(2, ks, spec).varpi_n
    assert S[1, 0, 0] == pytest.approx(np.exp(-2j * vp) / (1 - 1j * vp), abs=1e-14)


def test_mode_injection():
    assert mode_injection(1, 1.0, WaveguideSpec(0, 3, PI, 0.0)) == (1, 0)
    spec = WaveguideSpec(0, 2, PI, 1.0)
    ks = math.sqrt(5)
    t, r = mode_injection(2, ks, spec)
    vp = 1.0
    assert t == pytest.approx(np.exp(-2j * vp) / (1 - 1j * vp), abs=1e-12)
    assert r == pytest.approx(1j * vp / (1 - 1j * vp), abs=1e-12)
    S = interior_s_matrix(ks, spec, 4)
    assert t == pytest.approx(S[1, 0, 0], abs=1e-12) and r == pytest.approx(S[1, 1, 0], abs=1e-12)
    with pytest.raises(DomainError):
        mode_injection(0, 1.0, spec)


def test_classify_regime():
    assert classify_regime(1.3, WaveguideSpec(0, 1, PI, 0.0)).regime is Regime.EMPTY
    rep = classify_regime(math.sqrt(5), WaveguideSpec(0, 1, PI, 1.0))
    assert rep.regime is Regime.EXCEPTIONAL and rep.exceptional_mode == 2
    rep = classify_regime(0.5, WaveguideSpec(0, 20, PI, 10.0))
    assert rep.regime is Regime.FILTER and rep.filter_margin >= 2 and rep.n_star == 0
    assert classify_regime(2.5, WaveguideSpec(0, 40, PI, 1.0)).regime is Regime.LARGE_A_PROPAGATING
    assert classify_regime(2.5, WaveguideSpec(0, 1, PI, 1.0)).regime is Regime.GENERIC
    rep = classify_regime(2.5, WaveguideSpec(0, 1, PI, 1.0 + 0.2j))
    assert rep.notes


@settings(max_examples=80, deadline=None)
@given(st.floats(0.3, 6), st.floats(1, 5), st.floats(0.5, 10), st.floats(-3, 8), st.integers(1, 12))
def test_unitarity_property(k, b, a, V0, n):
    spec = WaveguideSpec(0, a, b, V0)
    m = make_mode(n, k, spec)
    if abs(m.varpi_n) < 1e-6 * k or abs(a * m.w_n) < 1e-3:
        return
    if not (m.varpi_n.imag == 0 and m.w_n.imag == 0):
        return
    c = per_mode_coefficients(m, k, spec)
    assert c.flux == pytest.approx(1, abs=1e-10)
