"""Independent numerical references.

Nothing here uses the closed-form propagator or the Fabry-Perot formulas:
the 1D transfer matrix comes from continuity of the field and its
derivative, the exponential from a truncated Taylor series with scaling
and squaring, and integrals from adaptive quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .dispersion import varpi
from .errors import DomainError, QuadratureError


@dataclass(frozen=True)
class Slab1D:
    """Uniform layer on ``[x_left, x_right]`` in a uniform background."""

    x_left: float
    x_right: float
    wavevector_inside: complex
    wavevector_outside: complex

    def __post_init__(self):
        if not self.x_right > self.x_left:
            raise DomainError("need x_right > x_left")


def _matching(q):
    # columns: exp(iqx), exp(-iqx) evaluated at x=0; rows: value, derivative
    return np.array([[1.0, 1.0], [1j * q, -1j * q]], dtype=complex)


def _matching_inv(q):
    return np.array([[1.0, -1j / q], [1.0, 1j / q]], dtype=complex) / 2


def _phase(q, x):
    return np.diag([np.exp(1j * q * x), np.exp(-1j * q * x)])


def interface_transfer(slab):
    """Map outside amplitudes ``(A, B)`` on the left to those on the right.

    Outside, the field is ``A exp(iqx) + B exp(-iqx)`` with ``q`` the outer
    wavevector; the same convention holds on both sides of the slab.
    """
    q = complex(slab.wavevector_outside)
    kap = complex(slab.wavevector_inside)
    if q == 0 or kap == 0:
        raise DomainError("singular matching: zero wavevector")
    L = slab.x_right - slab.x_left
    # amplitudes re-referenced to the left face, matched, propagated, matched back
    inner = _matching_inv(kap) @ _matching(q)
    outer = _matching_inv(q) @ _matching(kap)
    core = outer @ _phase(kap, L) @ inner
    return _phase(q, -slab.x_right) @ core @ _phase(q, slab.x_left)


#: Im(kappa) * L beyond which the slab is treated as two uncoupled interfaces
_DECOUPLED = 600.0


def slab_rt(slab):
    """Left-incidence ``(r, t)`` of a slab: reflected and transmitted amplitudes.

    ``r`` is referenced to the left face and ``t`` relates the outgoing wave at
    the right face to the incoming one at the left face. Very thick evanescent
    slabs, where the transfer matrix would overflow, use the single-interface
    reflection and the leading tunnelling term (exact to ``exp(-2 Im(kappa) L)``).
    """
    q = complex(slab.wavevector_outside)
    kap = complex(slab.wavevector_inside)
    L = slab.x_right - slab.x_left
    if kap.imag * L > _DECOUPLED:
        if q == 0 or kap == 0:
            raise DomainError("singular matching: zero wavevector")
        return (q - kap) / (q + kap), 4 * q * kap * np.exp(1j * kap * L) / (q + kap) ** 2
    M = interface_transfer(slab)
    t_plane = 1 / M[1, 1]
    r_plane = -M[1, 0] / M[1, 1]
    r = r_plane * np.exp(-2j * q * slab.x_left)
    t = t_plane * np.exp(1j * q * L)
    return complex(r), complex(t)


def slab_interior(slab):
    """Interior field of a left-incident slab problem with unit incoming wave at the left face.

    Returns ``(r, t, alpha, beta)`` such that inside the slab
    ``psi(x) = alpha exp(i kappa (x - x_left)) + beta exp(-i kappa (x - x_right))``.
    ``alpha`` is matched at the left face and ``beta`` at the right face, so both
    stay well conditioned for thick evanescent slabs.
    """
    q = complex(slab.wavevector_outside)
    kap = complex(slab.wavevector_inside)
    r, t = slab_rt(slab)
    left = _matching_inv(kap) @ _matching(q) @ np.array([1.0, r])
    right = _matching_inv(kap) @ _matching(q) @ np.array([t, 0.0])
    return r, t, complex(left[0]), complex(right[1])


def dense_expm(M, scale=1.0, order=18):
    """``exp(scale * M)`` by Taylor series with scaling and squaring."""
    A = np.asarray(M, dtype=complex)
    if not np.all(np.isfinite(A)):
        raise DomainError("non-finite matrix")
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DomainError("square matrix required")
    A = A * scale
    nrm = np.linalg.norm(A, 1)
    if nrm > 700 * A.shape[0]:
        raise OverflowError(f"norm {nrm:.3g} too large for a reliable exponential")
    s = max(0, int(math.ceil(math.log2(nrm / 0.25)))) if nrm > 0.25 else 0
    A = A / 2.0**s
    n = A.shape[0]
    term = np.eye(n, dtype=complex)
    out = np.eye(n, dtype=complex)
    for j in range(1, order + 1):
        term = term @ A / j
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def _quad_complex(f, lo, hi, tol, limit):
    re, er_re, info_re = integrate.quad(lambda p: f(p).real, lo, hi, epsabs=tol, epsrel=0, limit=limit, full_output=1)[:3]
    im, er_im, info_im = integrate.quad(lambda p: f(p).imag, lo, hi, epsabs=tol, epsrel=0, limit=limit, full_output=1)[:3]
    return complex(re, im), math.hypot(er_re, er_im), (info_re["last"], info_im["last"])


def branch_split_quadrature(f, k, lo=-math.inf, hi=math.inf, tol=1e-10, limit=2000, return_error=False):
    """Integrate a complex ``f(p)`` over ``[lo, hi]`` with panels split at ``+-k``.

    Raises QuadratureError when the estimated error exceeds ``tol`` by more
    than a factor of ten.
    """
    cuts = [c for c in (-k, k) if lo < c < hi]
    edges = [lo, *cuts, hi]
    total, err, panels = 0j, 0.0, []
    for a, b in zip(edges[:-1], edges[1:]):
        val, e, used = _quad_complex(f, a, b, tol / len(edges), limit)
        total += val
        err += e
        panels.append({"interval": (a, b), "estimate": e, "subintervals": used})
    if not err <= 10 * tol:
        raise QuadratureError(f"quadrature error estimate {err:.3g} above tol {tol:.3g}", panels)
    return (total, err) if return_error else total


def _quad_real(f, lo, hi, tol, **kw):
    val, err = integrate.quad(f, lo, hi, epsabs=tol, epsrel=0, limit=2000, **kw)[:2]
    if not err <= 10 * tol:
        raise QuadratureError(f"quadrature error estimate {err:.3g} above tol {tol:.3g}", [{"interval": (lo, hi), "estimate": err}])
    return val


def well_varpi_matrix_element(b, m, n, k, tol=1e-10):
    """``<phi_m| varpi(p) |phi_n> = int conj(phi_t_m) varpi phi_t_n dp / 2pi`` for
    infinite-well modes of width ``b``.

    The integrand is even in ``p``. Up to a cut-off past the last pole it is
    integrated as is; beyond, the mode product is the explicit rational
    function ``c (2 - 2 sigma cos(pb)) / ((p^2 - al_m^2)(p^2 - al_n^2))`` and
    the cosine part is done with a Fourier-weighted rule to infinity.
    """
    from .wells import phi_tilde

    if (m + n) % 2:
        return 0j
    al_m, al_n = math.pi * m / b, math.pi * n / b
    sigma = (-1) ** m
    c = 2 / b * al_m * al_n
    L = 2 * max(k, al_m, al_n) + 4 * math.pi / b

    def prod(p):
        return (np.conj(phi_tilde(m, p, b)) * phi_tilde(n, p, b)).real

    re = _quad_real(lambda p: math.sqrt(max(k * k - p * p, 0.0)) * prod(p), 0.0, k, tol, points=[x for x in (al_m, al_n) if x < k] or None)
    im = _quad_real(lambda p: math.sqrt(max(p * p - k * k, 0.0)) * prod(p), k, L, tol, points=[x for x in (al_m, al_n) if k < x < L] or None)

    def rat(p):
        return c * 2 * math.sqrt(p * p - k * k) / ((p * p - al_m**2) * (p * p - al_n**2))

    im += _quad_real(rat, L, math.inf, tol)
    im -= sigma * _quad_real(rat, L, math.inf, tol, weight="cos", wvar=b)
    return complex(re, im) / math.pi


def varpi_matrix(b, N, k, tol=1e-10):
    """Dense ``N x N`` matrix of the free-space ``varpi(p)`` between well modes.

    Modes of opposite parity about the guide centre do not couple.
    """
    P = np.zeros((N, N), dtype=complex)
    for m in range(1, N + 1):
        for n in range(m, N + 1, 2):
            P[m - 1, n - 1] = P[n - 1, m - 1] = well_varpi_matrix_element(b, m, n, k, tol)
    return P
