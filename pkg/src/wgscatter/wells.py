"""Infinite rectangular well across the guide: modes, their Fourier transforms,
the interior projector kernel and the evanescent-gap bound."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import mode_energy, n_star, varpi_mode, w_mode
from .errors import DomainError


@dataclass(frozen=True)
class WaveguideSpec:
    """Guide occupying ``a_minus <= x <= a_plus`` and ``0 <= y <= b``.

    ``V0`` is the (possibly complex) potential of the filling.
    """

    a_minus: float
    a_plus: float
    b: float
    V0: complex = 0.0

    def __post_init__(self):
        if not self.a_plus > self.a_minus:
            raise DomainError(f"need a_plus > a_minus, got {self.a_minus}, {self.a_plus}")
        if not self.b > 0:
            raise DomainError(f"width b must be positive, got {self.b}")
        V0 = complex(self.V0)
        object.__setattr__(self, "V0", V0.real if V0.imag == 0 else V0)

    @property
    def a(self):
        return self.a_plus - self.a_minus

    @property
    def is_real(self):
        return not isinstance(self.V0, complex)

    @property
    def V0_real(self):
        return complex(self.V0).real

    def mirrored(self):
        """The guide reflected through ``x = 0``."""
        return WaveguideSpec(-self.a_plus, -self.a_minus, self.b, self.V0)


@dataclass(frozen=True)
class ModeRecord:
    n: int
    k: float
    E_n: complex
    w_n: complex
    varpi_n: complex


def make_mode(n, k, spec):
    """Mode ``n`` of the guide at wavenumber ``k``."""
    if n < 1:
        raise DomainError(f"mode index must be >= 1, got {n}")
    E = mode_energy(n, spec.b, spec.V0)
    return ModeRecord(int(n), float(k), E, complex(w_mode(E, k)), complex(varpi_mode(n, k, spec.b)))


def modes(k, spec, N):
    """Modes ``1..N`` generated on demand."""
    return [make_mode(n, k, spec) for n in range(1, N + 1)]


def mode_arrays(k, spec, n):
    """Vectorised ``(E_n, w_n, varpi_n)`` for an integer array ``n``."""
    n = np.asarray(n)
    E = mode_energy(n, spec.b, spec.V0)
    return E, np.asarray(w_mode(E, k), dtype=complex), np.asarray(varpi_mode(n, k, spec.b), dtype=complex)


def _expm1_over(z):
    """``(exp(-i z) - 1) / z`` with the removable point handled."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-6
    zs = np.where(small, 1.0, z)
    big = np.expm1(-1j * zs) / zs
    series = -1j - z / 2 + 1j * z * z / 6
    return np.where(small, series, big)


def phi_tilde(n, p, b):
    """Fourier transform ``int exp(-i p y) phi_n(y) dy`` of the normalised mode.

    ``phi_n(y) = sqrt(2/b) sin(pi n y / b)`` on ``[0, b]``. Both removable
    points ``p = +-pi n / b`` are evaluated without cancellation. Broadcasts
    over ``n`` and ``p``.
    """
    n = np.asarray(n)
    p = np.asarray(p, dtype=float)
    pn = math.pi * n
    u = b * p - pn
    v = b * p + pn
    # exp(-iu) == exp(-iv) because u and v differ by 2*pi*n
    use_u = np.abs(u) <= np.abs(v)
    num = np.where(use_u, _expm1_over(u), _expm1_over(v))
    den = np.where(use_u, v, u)
    out = pn * math.sqrt(2 * b) * num / den
    return out[()] if out.ndim == 0 else out


def phi(n, y, b):
    """Mode profile across the guide, zero outside ``[0, b]``."""
    y = np.asarray(y, dtype=float)
    inside = (y >= 0) & (y <= b)
    return np.where(inside, math.sqrt(2 / b) * np.sin(math.pi * np.asarray(n) * y / b), 0.0)


def lambda_kernel(p, p0, b):
    """``int_0^b exp(i (p0 - p) y) dy``: ``2 pi <p|Lambda|p0>`` in closed form."""
    q = np.asarray(p0, dtype=float) - np.asarray(p, dtype=float)
    out = 1j * b * _expm1_over(-q * b)
    out = np.asarray(out)
    return out[()] if out.ndim == 0 else out


def mode_sum_kernel(p, p0, b, N):
    """Partial sum ``sum_{n<=N} conj(phi_tilde_n(p0)) phi_tilde_n(p)``."""
    n = np.arange(1, N + 1)
    return np.sum(np.conj(phi_tilde(n, p0, b)) * phi_tilde(n, p, b))


def appendix_bound_check(k, b, V0, n, a=1.0):
    """Check ``a |w_n| > sqrt(2) pi a eta(k) / b`` for an evanescent mode ``n``.

    Requires real ``V0``, ``k^2 >= (pi/b)^2 + V0`` and ``n > n_star``.
    Returns ``(lhs, rhs, holds)``.
    """
    V0 = complex(V0)
    if V0.imag != 0:
        raise DomainError("the gap bound is stated for a real filling")
    V0 = V0.real
    if k * k < (math.pi / b) ** 2 + V0:
        raise DomainError("need k^2 >= (pi/b)^2 + V0")
    ns = n_star(k, b, V0)
    if n <= ns:
        raise DomainError(f"mode {n} is not evanescent (n_star={ns})")
    eta2 = ns + 1 - b / math.pi * math.sqrt(k * k - V0)
    if not 0 < eta2 <= 1:
        raise DomainError(f"eta^2={eta2} outside (0, 1]")
    lhs = a * abs(complex(w_mode(mode_energy(n, b, V0), k)))
    rhs = math.sqrt(2) * math.pi * a * math.sqrt(eta2) / b
    return lhs, rhs, lhs > rhs


def eta(k, b, V0):
    """Fractional distance to the next cut-off, ``sqrt(n_star + 1 - b/pi sqrt(k^2 - V0))``."""
    V0 = complex(V0).real
    if k * k < V0:
        return None
    return math.sqrt(n_star(k, b, V0) + 1 - b / math.pi * math.sqrt(k * k - V0))
