"""Observables for the filled guide: per-mode Fabry-Perot coefficients, the
Gamma kernels, wall terms, angular amplitudes and regime classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .dispersion import Incidence, Side, is_exceptional, n_star
from .engine import EP_SWITCH, GRAZING_TOL
from .errors import DomainError, GrazingModeError, TruncationError
from .wells import eta, lambda_kernel, make_mode, mode_arrays, phi_tilde

SQRT_2PI = math.sqrt(2 * math.pi)


class ModeKind(str, enum.Enum):
    PROPAGATING = "propagating"
    EVANESCENT = "evanescent"
    EXCEPTIONAL = "exceptional"


@dataclass(frozen=True)
class PerModeCoefficients:
    """Transmission-like ``c_plus`` and reflection-like ``c_minus`` of one mode.

    Both are referenced to the guide faces: ``c_plus`` maps the wave entering
    at ``a_minus`` to the one leaving at ``a_plus`` and ``c_minus`` the wave
    entering at ``a_minus`` to the one reflected there. ``t_n`` is the
    large-length limit of ``c_minus`` for an evanescent mode (``None``
    otherwise).
    """

    n: int
    kind: ModeKind
    c_plus: complex
    c_minus: complex
    t_n: complex | None

    @property
    def flux(self):
        return abs(self.c_plus) ** 2 + abs(self.c_minus) ** 2


def coefficient_arrays(k, spec, n):
    """Vectorised ``(c_plus, c_minus)`` for an integer array of mode indices.

    A single formula with the upper-half-plane root ``w_n`` covers the
    propagating, evanescent and complex-filling cases; ``|a w_n| < 1e-4``
    switches to the exceptional-point limit.
    """
    n = np.atleast_1d(np.asarray(n))
    _, w, vp = mode_arrays(k, spec, n)
    a, V0 = spec.a, spec.V0
    if V0 == 0:
        return np.exp(1j * a * vp), np.zeros_like(vp)
    if np.any(np.abs(vp) <= GRAZING_TOL * k):
        bad = n[np.abs(vp) <= GRAZING_TOL * k]
        raise GrazingModeError(f"grazing mode(s) {bad.tolist()} at k={k}")
    ep = np.abs(a * w) < EP_SWITCH
    e1 = np.exp(1j * a * w)
    e2 = e1 * e1
    s = w + vp
    # (w - vp) = -V0 / (w + vp) avoids cancellation when V0 is small
    D = s * s - (V0 / s) ** 2 * e2
    cp = 4 * vp * w * e1 / D
    cm = -V0 * (1 - e2) / D
    lim = 1 / (1 - 0.5j * a * vp)
    cp = np.where(ep, lim, cp)
    cm = np.where(ep, lim - 1, cm)
    return cp, cm


def large_a_t(k, spec, n):
    """``(|w_n| + i varpi_n) / (|w_n| - i varpi_n)``, the long-guide reflection of an evanescent mode."""
    _, w, vp = mode_arrays(k, spec, np.atleast_1d(n))
    aw = np.abs(w)
    return (aw + 1j * vp) / (aw - 1j * vp)


def _kind(mode, a):
    if abs(a * mode.w_n) < EP_SWITCH:
        return ModeKind.EXCEPTIONAL
    if mode.w_n.imag == 0 and mode.w_n.real > 0:
        return ModeKind.PROPAGATING
    return ModeKind.EVANESCENT


def per_mode_coefficients(mode, k, spec):
    """Coefficients of one :class:`~wgscatter.wells.ModeRecord`."""
    if spec.V0 != 0 and abs(mode.varpi_n) <= GRAZING_TOL * k:
        raise GrazingModeError(f"mode {mode.n} is grazing at k={k}")
    kind = _kind(mode, spec.a)
    cp, cm = coefficient_arrays(k, spec, [mode.n])
    t_n = complex(large_a_t(k, spec, mode.n)[0]) if kind is ModeKind.EVANESCENT else None
    return PerModeCoefficients(mode.n, kind, complex(cp[0]), complex(cm[0]), t_n)


# ---------------------------------------------------------------------------
# mode sums


@dataclass(frozen=True)
class Truncation:
    """Adaptive mode-sum control.

    Summation runs in blocks of ``block`` modes from a floor of
    ``max(4 n_star, n_star + 32)`` (or ``min_modes``) and stops once the
    latest block changes the sum by less than ``tol`` relative.
    """

    tol: float = 1e-10
    max_modes: int = 20000
    min_modes: int | None = None
    block: int = 8

    def __post_init__(self):
        if not self.tol > 0:
            raise DomainError("tol must be positive")
        if self.max_modes < 1 or self.block < 1:
            raise DomainError("max_modes and block must be positive")

    def floor(self, k, spec):
        ns = n_star(k, spec.b, spec.V0)
        base = max(4 * ns, ns + 32) if self.min_modes is None else self.min_modes
        return min(base, self.max_modes)


def default_truncation(k, spec):
    """Default number of retained modes, ``max(4 n_star, n_star + 32)``."""
    ns = n_star(k, spec.b, spec.V0)
    return max(4 * ns, ns + 32)


@dataclass(frozen=True)
class KernelValue:
    gamma_plus: complex
    gamma_minus: complex
    n_used: int
    tail_estimate: float


def _kernel_sum(p, p0, k, spec, truncation, coeffs):
    p = np.atleast_1d(np.asarray(p, dtype=float))
    p0 = float(p0)
    tr = truncation or Truncation()
    N = tr.floor(k, spec)

    def terms(n_lo, n_hi):
        n = np.arange(n_lo, n_hi + 1)
        cp, cm = coeffs(n)
        prod = np.conj(phi_tilde(n, p0, spec.b))[None, :] * phi_tilde(n[None, :], p[:, None], spec.b)
        return (prod * cp).sum(axis=1), (prod * cm).sum(axis=1)

    gp, gm = terms(1, N)
    n_used = N
    while True:
        hi = min(n_used + tr.block, tr.max_modes)
        if hi <= n_used:
            scale = np.maximum(np.abs(gp), np.abs(gm)).max()
            raise TruncationError(
                f"mode sum not converged within {tr.max_modes} modes", n_used=n_used, tail_estimate=float(last / max(scale, 1e-300))
            )
        dp, dm = terms(n_used + 1, hi)
        gp, gm = gp + dp, gm + dm
        n_used = hi
        last = float(max(np.abs(dp).max(), np.abs(dm).max()))
        scale = float(max(np.abs(gp).max(), np.abs(gm).max()))
        if last <= tr.tol * max(scale, 1e-300) or last == 0:
            break
    return gp / (2 * math.pi), gm / (2 * math.pi), n_used, last / max(scale, 1e-300)


def gamma_kernel(p, p0, k, spec, truncation=None):
    """``(Gamma_+(p, p0), Gamma_-(p, p0))`` by an adaptive sum over well modes.

    ``p`` may be an array; the result then holds arrays. Raises
    :class:`TruncationError` when ``truncation.max_modes`` is not enough.
    """
    for q in np.atleast_1d(p).tolist() + [p0]:
        if not abs(q) < k:
            raise DomainError(f"transverse momentum {q} outside (-k, k)")
    gp, gm, n_used, tail = _kernel_sum(p, p0, k, spec, truncation, lambda n: coefficient_arrays(k, spec, n))
    if np.ndim(p) == 0:
        return KernelValue(complex(gp[0]), complex(gm[0]), n_used, tail)
    return KernelValue(gp, gm, n_used, tail)


def large_a_coefficients(k, spec, n):
    """Long-guide approximation: exact for propagating modes, ``(0, t_n)`` for evanescent ones."""
    n = np.atleast_1d(np.asarray(n))
    cp, cm = coefficient_arrays(k, spec, n)
    ev = n > n_star(k, spec.b, spec.V0)
    if np.any(ev):
        cp = np.where(ev, 0, cp)
        cm = np.where(ev, large_a_t(k, spec, n), cm)
    return cp, cm


def gamma_kernel_large_a(p, p0, k, spec, truncation=None):
    """Gamma kernels with evanescent modes replaced by their long-guide limits."""
    gp, gm, n_used, tail = _kernel_sum(p, p0, k, spec, truncation, lambda n: large_a_coefficients(k, spec, n))
    if np.ndim(p) == 0:
        return KernelValue(complex(gp[0]), complex(gm[0]), n_used, tail)
    return KernelValue(gp, gm, n_used, tail)


# ---------------------------------------------------------------------------
# angular amplitudes


@dataclass(frozen=True)
class DeltaDescriptor:
    """``coeff * sqrt(2 pi) * delta(theta - theta_sing)``."""

    theta_sing: float
    coeff: complex


@dataclass(frozen=True)
class AmplitudeWithDelta:
    theta: np.ndarray
    smooth: np.ndarray
    delta: DeltaDescriptor

    @property
    def delta_coeff(self):
        return self.delta.coeff

    @property
    def theta_sing(self):
        return self.delta.theta_sing


def _wrap(theta):
    return math.remainder(theta, 2 * math.pi)


def specular_angle(incidence):
    """Mirror of the incidence direction in the reflection sector."""
    return _wrap(math.pi - incidence.theta0)


def wall_terms(theta, incidence, spec):
    """Smooth wall contribution and the specular delta for reflection angles ``theta``.

    The smooth part is ``-+k cos(theta0) Lambda(k sin theta, k sin theta0) / 2 pi``
    (upper sign for left incidence) times ``exp(2i a_face k cos(theta0))``,
    the face being the one hit by the incident wave. It enters the
    reflection amplitude as ``-i sqrt(2 pi)`` times this value and does not
    depend on the filling.
    """
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    c = np.cos(th)
    if incidence.side is Side.LEFT:
        if np.any(c >= 0):
            raise DomainError("left-incidence reflection needs cos(theta) < 0")
        face, sign = spec.a_minus, -1.0
    else:
        if np.any(c <= 0):
            raise DomainError("right-incidence reflection needs cos(theta) > 0")
        face, sign = spec.a_plus, 1.0
    k, c0 = incidence.k, incidence.cos0
    phase = np.exp(2j * face * k * c0)
    smooth = sign * k * c0 * phase * lambda_kernel(incidence.k * np.sin(th), incidence.p0, spec.b) / (2 * math.pi)
    delta = DeltaDescriptor(specular_angle(incidence), complex(-1j * phase))
    smooth = smooth if np.ndim(theta) else complex(smooth[0])
    return smooth, delta


def default_theta_grid(side=Side.LEFT, points=721, band_deg=0.5):
    """Transmission-sector angles avoiding ``band_deg`` around ``+-pi/2``."""
    half = math.pi / 2 - math.radians(band_deg)
    th = np.linspace(-half, half, points)
    return th if Side(side) is Side.LEFT else np.array([_wrap(math.pi - t) for t in th])


@dataclass(frozen=True)
class Amplitudes:
    R: AmplitudeWithDelta
    T: AmplitudeWithDelta
    n_used: int


def amplitudes(incidence, spec, theta_grid=None, truncation=None):
    """Reflection and transmission amplitudes.

    ``theta_grid`` holds transmission-sector angles (the side of the guide
    opposite the source). ``T`` is sampled there and ``R`` at the mirrored
    angles ``pi - theta``, which share the transverse momentum.
    """
    th = default_theta_grid(incidence.side) if theta_grid is None else np.asarray(theta_grid, dtype=float)
    c = np.cos(th)
    if np.any(np.abs(c) < 1e-6):
        raise DomainError("theta grid touches +-pi/2")
    left = incidence.side is Side.LEFT
    if np.any(c <= 0 if left else c >= 0):
        raise DomainError("theta grid must lie in the transmission sector")
    k, c0 = incidence.k, incidence.cos0
    p = k * np.sin(th)
    kv = gamma_kernel(p, incidence.p0, k, spec, truncation)
    am, ap = spec.a_minus, spec.a_plus
    if left:
        T = -1j * SQRT_2PI * k * c * np.exp(1j * k * (am * c0 - ap * c)) * kv.gamma_plus
        th_r = np.array([_wrap(math.pi - t) for t in th])
        cr = np.cos(th_r)
        R_int = 1j * SQRT_2PI * k * cr * np.exp(1j * am * k * (c0 - cr)) * kv.gamma_minus
    else:
        T = 1j * SQRT_2PI * k * c * np.exp(1j * k * (ap * c0 - am * c)) * kv.gamma_plus
        th_r = np.array([_wrap(math.pi - t) for t in th])
        cr = np.cos(th_r)
        R_int = -1j * SQRT_2PI * k * cr * np.exp(1j * ap * k * (c0 - cr)) * kv.gamma_minus
    wall, delta = wall_terms(th_r, incidence, spec)
    R = R_int - 1j * SQRT_2PI * wall
    return Amplitudes(
        R=AmplitudeWithDelta(th_r, R, delta),
        T=AmplitudeWithDelta(th, T, DeltaDescriptor(incidence.theta0, 1j)),
        n_used=kv.n_used,
    )


@dataclass(frozen=True)
class CoefficientSet:
    """Asymptotic coefficient functions on a grid of transverse momenta.

    Normalised so that the field left of the guide is
    ``(1/2pi) int varpi^-1 [A_minus e^{i varpi x} + B_minus e^{-i varpi x}] e^{ipy} dp``
    (likewise on the right). Each entry is ``(delta, smooth)``: ``delta``
    multiplies ``2 pi delta(p - p0)`` and ``smooth`` is sampled on ``p``.
    The projected sets vanish for ``|p| >= k``.
    """

    p: np.ndarray
    A_minus: tuple
    B_plus: tuple
    A_plus: tuple
    B_minus: tuple


def coefficient_set(incidence, spec, p, truncation=None):
    """Incoming and outgoing coefficient functions for left incidence."""
    if incidence.side is not Side.LEFT:
        raise DomainError("coefficient sets are built for left incidence; mirror the guide for the right")
    p = np.asarray(p, dtype=float)
    k = incidence.k
    inside = np.abs(p) < k
    kv = gamma_kernel(np.where(inside, p, 0.0), incidence.p0, k, spec, truncation)
    vp = np.sqrt(np.clip(k * k - p * p, 0, None))
    vp0 = k * incidence.cos0
    am, ap = spec.a_minus, spec.a_plus
    mirror = vp0 * np.exp(2j * am * vp0)
    Ap = np.where(inside, 2 * math.pi * vp * np.exp(1j * (am * vp0 - ap * vp)) * kv.gamma_plus, 0)
    Bm = 2 * math.pi * vp * np.exp(1j * am * (vp0 + vp)) * kv.gamma_minus
    Bm = np.where(inside, Bm - mirror * lambda_kernel(p, incidence.p0, spec.b), 0)
    zero = np.zeros_like(p, dtype=complex)
    return CoefficientSet(
        p=p,
        A_minus=(complex(vp0), zero),
        B_plus=(0j, zero),
        A_plus=(0j, Ap),
        B_minus=(complex(mirror), Bm),
    )


# ---------------------------------------------------------------------------
# single-mode views


def interior_s_matrix(k, spec, N=None):
    """Per-mode 2x2 blocks ``[[T, R_right], [R_left, T]]`` of the interior S-matrix."""
    N = default_truncation(k, spec) if N is None else N
    n = np.arange(1, N + 1)
    cp, cm = coefficient_arrays(k, spec, n)
    _, _, vp = mode_arrays(k, spec, n)
    a, am, ap = spec.a, spec.a_minus, spec.a_plus
    out = np.empty((N, 2, 2), dtype=complex)
    out[:, 0, 0] = out[:, 1, 1] = np.exp(-1j * a * vp) * cp
    out[:, 0, 1] = np.exp(-2j * ap * vp) * cm
    out[:, 1, 0] = np.exp(2j * am * vp) * cm
    return out


def mode_injection(n, k, spec):
    """``(transmission, reflection)`` multipliers for a wave injected in mode ``n`` from the left."""
    if n < 1:
        raise DomainError("mode index must be >= 1")
    mode = make_mode(n, k, spec)
    c = per_mode_coefficients(mode, k, spec)
    if spec.V0 == 0:
        # free propagation: e^{-ia varpi} e^{ia varpi} is exactly 1
        return 1 + 0j, 0j
    vp = mode.varpi_n
    return complex(np.exp(-1j * spec.a * vp) * c.c_plus), complex(np.exp(2j * spec.a_minus * vp) * c.c_minus)


# ---------------------------------------------------------------------------
# regimes


class Regime(str, enum.Enum):
    EMPTY = "empty"
    EXCEPTIONAL = "exceptional"
    FILTER = "filter"
    LARGE_A_PROPAGATING = "large_a_propagating"
    GENERIC = "generic"


@dataclass(frozen=True)
class RegimeReport:
    regime: Regime
    n_star: int
    eta: float | None
    min_evanescent_aw: float | None
    exceptional_mode: int | None
    filter_margin: float | None
    large_a_ratio: float | None
    notes: tuple = field(default=())


def classify_regime(k, spec):
    """Classify ``(k, spec)``; precedence empty > exceptional > filter > large-a > generic.

    Filter: ``V0 > 1/a^2 - (pi/b)^2`` and ``2k <= sqrt(V0 + (pi/b)^2 - 1/a^2)``
    (the factor two is the safety margin). Large-a: at least one propagating
    mode and ``a eta / b >= 10``. Complex fillings use ``Re V0``.
    """
    if not k > 0:
        raise DomainError("k must be positive")
    V0, a, b = spec.V0_real, spec.a, spec.b
    ns = n_star(k, b, V0)
    et = eta(k, b, V0)
    n_ev = np.arange(ns + 1, ns + 4)
    _, w_ev, _ = mode_arrays(k, spec, n_ev)
    min_aw = float(np.min(a * np.abs(w_ev)))
    ep = is_exceptional(k, b, spec.V0)
    thr = V0 + (math.pi / b) ** 2 - 1 / a**2
    filter_margin = math.sqrt(thr) / k if thr > 0 else None
    ratio = a * et / b if et is not None else None
    notes = []
    if not spec.is_real:
        notes.append("classified with Re(V0)")
    if spec.V0 == 0:
        regime = Regime.EMPTY
    elif ep is not None:
        regime = Regime.EXCEPTIONAL
    elif V0 > 1 / a**2 - (math.pi / b) ** 2 and filter_margin is not None and filter_margin >= 2:
        regime = Regime.FILTER
    elif k * k >= (math.pi / b) ** 2 + V0 and ratio is not None and ratio >= 10:
        regime = Regime.LARGE_A_PROPAGATING
    else:
        regime = Regime.GENERIC
    return RegimeReport(regime, ns, et, min_aw, ep, filter_margin, ratio, tuple(notes))
