"""Near-field reconstruction on a rectangular grid.

Left of the guide the field is the incident wave, its mirror image in the
wall line ``x = a_minus`` and the wave radiated by the aperture; right of
the guide only the radiated transmitted wave remains. Aperture data come
from per-mode 1D slab problems solved by interface matching, and the
radiated waves

    G_n(d, y) = (1 / 2 pi) int phi_tilde_n(p) exp(i varpi(p) d + i p y) dp

are integrated with Gauss-Legendre panels: ``p = k sin(theta)`` on the
propagating window and ``p = +-k cosh(u)`` on the evanescent tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import Incidence, Side
from .engine import EP_SWITCH, sin_over
from .errors import DomainError
from .oracle import Slab1D, slab_interior
from .scattering import default_truncation
from .wells import WaveguideSpec, make_mode, phi, phi_tilde

#: relative size of exp(-|varpi| d) at which evanescent tails are dropped
TAIL_CUTOFF = 1e-12
#: hard cap on the tail length in units of 1/b
P_CAP_B = 4000.0
_GL_HI = np.polynomial.legendre.leggauss(12)
_GL_LO = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class ModeSolution:
    """Per-mode 1D data: face value ``u``, face slope ``v`` and reflection/transmission."""

    n: np.ndarray
    c: np.ndarray  # incident content of each mode at the left face
    r: np.ndarray
    t: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    w: np.ndarray
    ep: np.ndarray  # modes treated with the linear (w = 0) interior form
    u: np.ndarray
    v: np.ndarray


def _solve_modes(k, spec, N, c):
    n = np.arange(1, N + 1)
    r = np.empty(N, complex)
    t = np.empty(N, complex)
    al = np.empty(N, complex)
    be = np.empty(N, complex)
    w = np.empty(N, complex)
    vp = np.empty(N, complex)
    ep = np.zeros(N, bool)
    a = spec.a
    for i, m in enumerate(n):
        mode = make_mode(int(m), k, spec)
        q, kap = mode.varpi_n, mode.w_n
        w[i], vp[i] = kap, q
        if spec.V0 == 0:
            r[i], t[i] = 0, np.exp(1j * q * a)
            al[i], be[i] = 1, 0
        elif abs(kap * a) < EP_SWITCH:
            # matching is singular at w = 0; the field is linear in x there
            tp = 1 / (1 - 0.5j * a * q)
            r[i], t[i] = 1 - tp, tp
            ep[i] = True
        else:
            if q == 0:
                raise DomainError(f"mode {m} is grazing at k={k}")
            r[i], t[i], al[i], be[i] = slab_interior(Slab1D(spec.a_minus, spec.a_plus, kap, q))
    u = c * (1 + r)
    v = 1j * vp * c * (1 - r)
    return ModeSolution(n, c, r, t, al * c, be * c, w, ep, u, v)


def _panel_nodes(edges, gl):
    x, wts = gl
    lo, hi = edges[:-1, None], edges[1:, None]
    half = (hi - lo) / 2
    nodes = (lo + hi) / 2 + half * x[None, :]
    return nodes.ravel(), (half * wts[None, :]).ravel()


def _radiated(amps, d, y, k, b, rtol):
    """``sum_n amps_n G_n(d, y)`` for a fixed ``d >= 0`` and an array ``y``.

    Returns ``(values, ok)``; ``ok`` is False where the two quadrature
    resolutions or the tail truncation disagree beyond ``rtol``.
    """
    n = np.arange(1, len(amps) + 1)
    if d == 0:
        vals = (amps[:, None] * phi(n[:, None], y[None, :], b)).sum(axis=0)
        return vals, np.ones(y.shape, bool)
    scale = max(np.abs(amps).sum(), 1e-300)
    span = np.abs(y).max() + b + d
    p_cap = k + P_CAP_B / b
    kap_max = -math.log(TAIL_CUTOFF) / d
    p_max = min(math.sqrt(k * k + kap_max**2), p_cap)

    def spectral(p):
        return (amps[:, None] * phi_tilde(n[:, None], p[None, :], b)).sum(axis=0)

    def integrate(gl):
        # propagating window in theta, panels sized by the phase span
        m_th = max(8, int(math.ceil(k * span * math.pi / 2)))
        th, wth = _panel_nodes(np.linspace(-math.pi / 2, math.pi / 2, m_th + 1), gl)
        p = k * np.sin(th)
        jac = wth * k * np.cos(th)
        ph = np.exp(1j * (k * np.cos(th)[:, None] * d + p[:, None] * y[None, :]))
        total = ((spectral(p) * jac)[:, None] * ph).sum(axis=0)
        # evanescent tails in u, p = +-k cosh(u), with p-panels of bounded phase
        u_max = math.acosh(p_max / k)
        m_p = max(4, int(math.ceil((p_max - k) * span / 2)))
        p_edges = k + (p_max - k) * np.linspace(0, 1, m_p + 1) ** 2
        u_edges = np.arccosh(np.clip(p_edges / k, 1, None))
        u_edges[-1] = u_max
        uu, wu = _panel_nodes(u_edges, gl)
        pt = k * np.cosh(uu)
        decay = np.exp(-k * np.sinh(uu) * d)
        jac_t = wu * k * np.sinh(uu) * decay
        for sgn in (1.0, -1.0):
            pp = sgn * pt
            total = total + ((spectral(pp) * jac_t)[:, None] * np.exp(1j * pp[:, None] * y[None, :])).sum(axis=0)
        return total / (2 * math.pi)

    hi = integrate(_GL_HI)
    lo = integrate(_GL_LO)
    # neglected tail: |phi_tilde_n(p)| <= 2 sqrt(2b) pi n / (b p)^2 beyond the poles
    nmax = len(amps)
    tail = 0.0
    if p_max > math.pi * nmax / b:
        tail = np.abs(amps).sum() * 2 * math.sqrt(2 * b) * math.pi * nmax / b**2 * math.exp(-math.sqrt(p_max**2 - k * k) * d) / p_max**2 / math.pi
    err = np.abs(hi - lo) + tail
    ok = err <= rtol * scale
    return hi, ok


@dataclass(frozen=True)
class FieldMap:
    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray  # shape (len(x), len(y))
    n_modes: int
    failures: int
    face_l2_tail: float
    wall_max: float


def _left_field(incidence, spec, x, y, N, rtol, inject_mode):
    k = incidence.k
    vp0 = k * incidence.cos0
    p0 = incidence.p0
    b, am, ap = spec.b, spec.a_minus, spec.a_plus
    n = np.arange(1, N + 1)
    if inject_mode is None:
        c = np.exp(1j * vp0 * am) * np.conj(phi_tilde(n, p0, b))
    else:
        if not 1 <= inject_mode <= N:
            raise DomainError(f"injected mode {inject_mode} outside 1..{N}")
        c = (n == inject_mode).astype(complex)
    sol = _solve_modes(k, spec, N, c)
    psi = np.full((len(x), len(y)), np.nan + 0j)
    ok_all = np.ones(psi.shape, bool)
    in_guide = (y >= 0) & (y <= b)
    for i, xi in enumerate(x):
        if xi <= am:
            rad, ok = _radiated(sol.u if inject_mode is None else sol.u - c, am - xi, y, k, b, rtol)
            if inject_mode is None:
                inc = np.exp(1j * (vp0 * xi + p0 * y)) - np.exp(1j * (vp0 * (2 * am - xi) + p0 * y))
            else:
                inc = 0
            psi[i] = inc + rad
            ok_all[i] = ok
        elif xi >= ap:
            rad, ok = _radiated(sol.c * sol.t, xi - ap, y, k, b, rtol)
            psi[i] = rad
            ok_all[i] = ok
        else:
            s = xi - am
            amp = np.where(
                sol.ep,
                sol.u * np.cos(sol.w * s) + sol.v * sin_over(sol.w, s),
                sol.alpha * np.exp(1j * sol.w * s) + sol.beta * np.exp(1j * sol.w * (spec.a - s)),
            )
            vals = (amp[:, None] * phi(n[:, None], y[None, :], b)).sum(axis=0)
            psi[i] = np.where(in_guide, vals, 0)
    psi = np.where(ok_all, psi, np.nan + 0j)
    tail = math.sqrt(max(b - float(np.sum(np.abs(phi_tilde(n, p0, b)) ** 2)), 0.0))
    return psi, int((~ok_all).sum()), tail


def field_map(incidence, spec, x, y, N=None, rtol=1e-7, inject_mode=None):
    """Total field on the tensor grid ``x`` by ``y``.

    ``N`` retained modes (default ``max(4 n_star, n_star + 32)``). With
    ``inject_mode`` the incident plane wave is replaced by a unit wave in that
    mode entering at the left face; the left exterior then holds only the
    reflected wave. Samples whose quadrature fails are NaN and counted in
    ``failures``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1 or len(x) < 1 or len(y) < 1:
        raise DomainError("x and y must be non-empty 1D arrays")
    N = default_truncation(incidence.k, spec) if N is None else int(N)
    if N < 1:
        raise DomainError("need at least one mode")
    if incidence.side is Side.RIGHT:
        if inject_mode is not None:
            raise DomainError("mode injection is defined from the left")
        mirrored = Incidence(incidence.k, math.remainder(math.pi - incidence.theta0, 2 * math.pi))
        psi, fails, tail = _left_field(mirrored, spec.mirrored(), -x, y, N, rtol, None)
    else:
        psi, fails, tail = _left_field(incidence, spec, x, y, N, rtol, inject_mode)
    a_face = spec.a_minus if incidence.side is Side.LEFT else spec.a_plus
    wall = (np.abs(x - a_face) < 1e-14)[:, None] & ((y < 0) | (y > spec.b))[None, :]
    wall_max = float(np.nanmax(np.abs(psi[wall]))) if wall.any() else 0.0
    return FieldMap(x, y, psi, N, fails, tail, wall_max)


def field_grid(incidence, spec, box, grid, **kw):
    """Field on ``grid = (nx, ny)`` points spanning ``box = (x0, x1, y0, y1)``."""
    x0, x1, y0, y1 = box
    nx, ny = grid
    if nx < 2 or ny < 2:
        raise DomainError("grid needs at least 2 x 2 points")
    if not (x1 > x0 and y1 > y0):
        raise DomainError("empty field box")
    return field_map(incidence, spec, np.linspace(x0, x1, nx), np.linspace(y0, y1, ny), **kw)
