"""Branch-correct longitudinal wavenumbers and exceptional-wavenumber arithmetic.

Every square root returned here lives on the closed upper half-plane:
either a non-negative real number or a number with positive imaginary
part, so that ``exp(1j * root * x)`` stays bounded for ``x >= 0``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

#: smallest admissible |cos(theta0)| for an incident plane wave
GRAZING_COS_MIN = 1e-6


def upper_sqrt(z):
    """Square root of ``z`` with ``Im >= 0`` (and ``Re >= 0`` when ``Im == 0``)."""
    z = np.asarray(z, dtype=complex)
    r = np.sqrt(z)
    flip = (r.imag < 0) | ((r.imag == 0) & (r.real < 0))
    r = np.where(flip, -r, r)
    # sqrt of a negative real carrying -0.0j lands on -i*sqrt(x); normalise
    r = np.where(r.imag == 0, r.real + 0j, r)
    return r[()] if r.ndim == 0 else r


def varpi(p, k):
    """Longitudinal wavenumber ``sqrt(k^2 - p^2)`` in free space.

    Real for ``|p| < k`` and ``i*sqrt(p^2 - k^2)`` otherwise. Accepts scalars
    or arrays for ``p``.
    """
    p = np.asarray(p, dtype=float)
    d = k * k - p * p
    d = np.where(np.abs(d) <= 8 * np.finfo(float).eps * k * k, 0.0, d)
    out = np.where(d >= 0, np.sqrt(np.abs(d)) + 0j, 1j * np.sqrt(np.abs(d)))
    return out[()] if out.ndim == 0 else out


def w_mode(E_n, k):
    """Mode wavenumber ``sqrt(k^2 - E_n)`` inside the guide.

    For real ``E_n`` this is the usual real/imaginary split; for complex
    ``E_n`` (absorbing or amplifying filling) the upper-half-plane root.
    """
    E = np.asarray(E_n)
    if np.iscomplexobj(E) and np.any(E.imag != 0):
        return upper_sqrt(k * k - E)
    E = E.real.astype(float) if np.iscomplexobj(E) else E.astype(float)
    d = k * k - E
    # k^2 == E_n up to rounding: an exceptional point, not a tiny root
    d = np.where(np.abs(d) <= 8 * np.finfo(float).eps * np.maximum(k * k, np.abs(E)), 0.0, d)
    out = np.where(d >= 0, np.sqrt(np.abs(d)) + 0j, 1j * np.sqrt(np.abs(d)))
    return out[()] if out.ndim == 0 else out


def varpi_mode(n, k, b):
    """Free-space longitudinal wavenumber of the transverse mode ``n``."""
    return varpi(math.pi * np.asarray(n) / b, k)


def mode_energy(n, b, V0):
    """Eigenvalue ``(pi n / b)^2 + V0`` of the infinite well of width ``b``."""
    return (math.pi * np.asarray(n) / b) ** 2 + V0


def n_star(k, b, V0):
    """Number of propagating modes, ``floor(b/pi * sqrt(k^2 - V0))``.

    Returns 0 when ``k^2 < V0``. For complex ``V0`` the real part is used.
    """
    V0 = complex(V0).real
    if k * k < V0:
        return 0
    x = b / math.pi * math.sqrt(k * k - V0)
    n = math.floor(x)
    # guard against sqrt rounding just below an exact integer
    if math.isclose(x, n + 1, rel_tol=0, abs_tol=4 * np.finfo(float).eps * max(1.0, x)):
        n += 1
    return int(n)


def exceptional_wavenumber(n, b, V0):
    """The wavenumber at which mode ``n`` has ``w_n = 0``; ``None`` if ``E_n <= 0``."""
    E = mode_energy(n, b, complex(V0).real)
    return math.sqrt(E) if E > 0 else None


def exceptional_wavenumbers(k_min, k_max, b, V0):
    """All ``(k_star, n)`` with ``k_min < k_star <= k_max``, ascending in ``k``.

    The range is half-open so that adjacent ranges never report the same
    point twice. Complex fillings have no exceptional points and yield an
    empty list.
    """
    if not 0 <= k_min < k_max:
        raise DomainError(f"need 0 <= k_min < k_max, got {k_min}, {k_max}")
    if complex(V0).imag != 0:
        return []
    V0 = float(complex(V0).real)
    out = []
    n = 1
    while True:
        E = mode_energy(n, b, V0)
        if E > k_max * k_max:
            break
        if E > 0:
            ks = math.sqrt(E)
            if k_min < ks <= k_max:
                out.append((ks, n))
        n += 1
    return out


def is_exceptional(k, b, V0, rel_tol=1e-9):
    """Mode index ``n`` whose exceptional wavenumber is within ``rel_tol*k`` of ``k``."""
    if rel_tol <= 0:
        raise DomainError("rel_tol must be positive")
    if complex(V0).imag != 0:
        return None
    V0 = float(complex(V0).real)
    # candidate modes around b/pi*sqrt(k^2 - V0)
    if k * k - V0 < 0:
        return None
    x = b / math.pi * math.sqrt(k * k - V0)
    for n in (math.floor(x), math.ceil(x), math.floor(x) + 1):
        if n < 1:
            continue
        ks = exceptional_wavenumber(n, b, V0)
        if ks is not None and abs(k - ks) <= rel_tol * k:
            return n
    return None


class Side(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class Incidence:
    """An incident plane wave of wavenumber ``k`` at angle ``theta0`` (radians).

    Left incidence has ``theta0`` in ``(-pi/2, pi/2)``, right incidence in
    ``(pi/2, 3pi/2)``. ``side`` may be omitted and is then inferred.
    """

    k: float
    theta0: float
    side: Side | None = None
    p0: float = field(init=False)

    def __post_init__(self):
        k, th = float(self.k), float(self.theta0)
        if not k > 0:
            raise DomainError(f"wavenumber must be positive, got {k}")
        c = math.cos(th)
        if abs(c) < GRAZING_COS_MIN:
            raise DomainError(f"incidence angle {th} too close to +-pi/2")
        inferred = Side.LEFT if c > 0 else Side.RIGHT
        side = inferred if self.side is None else Side(self.side)
        if side is not inferred:
            raise DomainError(f"theta0={th} is not a {side.value}-incidence angle")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "theta0", th)
        object.__setattr__(self, "side", side)
        object.__setattr__(self, "p0", k * math.sin(th))

    @classmethod
    def from_degrees(cls, k, theta0_deg, side=None):
        return cls(k, math.radians(theta0_deg), side)

    @property
    def cos0(self):
        return math.cos(self.theta0)
