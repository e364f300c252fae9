"""The non-Hermitian generator of x-translations and what follows from it.

Per transverse mode the generator acts on C^2 as a 2x2 matrix

    H_n = (V0 / 2 varpi_n) K - varpi_n sigma_3,    K = [[1, 1], [-1, -1]],

with eigenvalues ``+-w_n``; it is defective (a Jordan block) exactly where
``w_n = 0``. For a general transverse basis the same algebra holds with
``varpi`` a dense matrix and ``W = diag(w_n)``; those builds live in
:class:`TruncatedOperator` with the basis index ``(n, s)`` stored at
position ``2 * (n - 1) + s`` (``s = 0`` for the upper component).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dispersion import upper_sqrt
from .errors import DomainError, ExceptionalPointError, GrazingModeError, InternalResonanceError
from .oracle import varpi_matrix
from .wells import phi_tilde

I2 = np.eye(2, dtype=complex)
SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)
K = np.array([[1, 1], [-1, -1]], dtype=complex)
KT = K.T.copy()

#: |a w_n| below which the exceptional-point limits are used
EP_SWITCH = 1e-4
#: |varpi_n| / k below which a mode counts as grazing
GRAZING_TOL = 1e-12


def sin_over(w, x):
    """``sin(w x) / w``, equal to ``x`` at ``w = 0`` and analytic in ``w^2``."""
    w = np.asarray(w, dtype=complex)
    z = w * x
    small = np.abs(z) < 1e-4
    ws = np.where(small, 1.0, w)
    series = x * (1 - z * z / 6 + z**4 / 120)
    out = np.where(small, series, np.sin(ws * x) / ws)
    return out[()] if out.ndim == 0 else out


def _check_grazing(mode, V0):
    if V0 != 0 and abs(mode.varpi_n) <= GRAZING_TOL * mode.k:
        raise GrazingModeError(f"mode {mode.n} is grazing at k={mode.k}: varpi_n = 0")


def _k_coeff(mode, V0):
    # V0 / (2 varpi); the K term is absent altogether for an empty guide
    return 0j if V0 == 0 else V0 / (2 * mode.varpi_n)


def build_H_mode(mode, V0):
    """2x2 block of the generator for one transverse mode."""
    _check_grazing(mode, V0)
    return _k_coeff(mode, V0) * K - mode.varpi_n * SIGMA3


@dataclass(frozen=True)
class BiorthoPair:
    """Right eigenvectors ``psi_*`` of H and left ones ``phi_*`` (of H^dagger)."""

    psi_plus: np.ndarray
    psi_minus: np.ndarray
    phi_plus: np.ndarray
    phi_minus: np.ndarray

    def gram(self):
        """``<phi_mu|psi_nu>`` for mu, nu in (+, -)."""
        phis = (self.phi_plus, self.phi_minus)
        psis = (self.psi_plus, self.psi_minus)
        return np.array([[np.vdot(f, s) for s in psis] for f in phis])

    def resolution(self):
        """``sum |psi><phi|``, the identity when the pair is complete."""
        return np.outer(self.psi_plus, self.phi_plus.conj()) + np.outer(self.psi_minus, self.phi_minus.conj())


def biortho_eigensystem(mode, k):
    """Biorthonormal eigenvectors of the mode block away from exceptional points."""
    w, vp = mode.w_n, mode.varpi_n
    if abs(vp) <= GRAZING_TOL * k:
        raise GrazingModeError(f"mode {mode.n} is grazing")
    if w == 0:
        raise ExceptionalPointError("exceptional point: use jordan_block_system")
    iv, iw = np.conj(1 / vp), np.conj(1 / w)
    return BiorthoPair(
        psi_plus=np.array([vp - w, vp + w]) / (2 * k),
        psi_minus=np.array([vp + w, vp - w]) / (2 * k),
        phi_plus=k / 2 * np.array([iv - iw, iv + iw]),
        phi_minus=k / 2 * np.array([iv + iw, iv - iw]),
    )


def jordan_block_system(mode, k):
    """Eigenvector, generalised eigenvector and their duals at ``w_n = 0``.

    ``psi_plus`` spans the kernel of H, ``H psi_minus = k psi_plus``, and the
    duals satisfy ``<phi_mu|psi_nu> = delta``.
    """
    if mode.w_n != 0:
        raise DomainError(f"mode {mode.n} is not at an exceptional point (w_n={mode.w_n})")
    vp = mode.varpi_n
    if abs(vp) <= GRAZING_TOL * k:
        raise GrazingModeError("empty guide at its exceptional point: the block is zero, not defective")
    return BiorthoPair(
        psi_plus=np.array([vp, vp]) / (2 * k),
        psi_minus=np.array([-1, 1], dtype=complex) / 2,
        phi_plus=k * np.array([1, 1]) * np.conj(1 / vp),
        phi_minus=np.array([-1, 1], dtype=complex),
    )


def propagator_mode(mode, x, V0):
    """``exp(-i x H_n)`` from cosines and ``sin(w x)/w``; exact at ``w_n = 0``."""
    _check_grazing(mode, V0)
    w, vp = mode.w_n, mode.varpi_n
    C = np.cos(w * x)
    S = sin_over(w, x)
    w2_over_vp = vp - 2 * _k_coeff(mode, V0)
    return C * I2 + 0.5j * S * (w2_over_vp * K + vp * KT)


def transfer_entries_mode(mode, spec):
    """``(M11, M12, M21, M22)`` of the transfer matrix restricted to one mode."""
    if not (mode.varpi_n.imag == 0 and mode.varpi_n.real > 0):
        raise DomainError(f"mode {mode.n} is not propagating outside the guide")
    P = propagator_mode(mode, spec.a, spec.V0)
    vp = mode.varpi_n
    left = np.diag([np.exp(-1j * spec.a_plus * vp), np.exp(1j * spec.a_plus * vp)])
    right = np.diag([np.exp(1j * spec.a_minus * vp), np.exp(-1j * spec.a_minus * vp)])
    M = left @ P @ right
    return M[0, 0], M[0, 1], M[1, 0], M[1, 1]


def slab_transfer_mode(mode, a_minus, a_plus, V0):
    """Transfer matrix of a filled slab ``[a_minus, a_plus]`` as a 2x2 array.

    Unlike :func:`transfer_entries_mode` this does not require the mode to be
    propagating outside, which is convenient for composition checks.
    """
    P = propagator_mode(mode, a_plus - a_minus, V0)
    vp = mode.varpi_n
    left = np.diag([np.exp(-1j * a_plus * vp), np.exp(1j * a_plus * vp)])
    right = np.diag([np.exp(1j * a_minus * vp), np.exp(-1j * a_minus * vp)])
    return left @ P @ right


def q_intertwiner_mode(mode, V0, x):
    """Intertwiner ``Q`` and the relative residual of ``Q e^{-ixH} = e^{-ixw sigma_3} Q``.

    The residual is scaled by the norm of the right-hand side, which is at
    least ``||Q||`` and follows the ``e^{x |w_n|}`` growth of evanescent modes.
    """
    _check_grazing(mode, V0)
    w, vp = mode.w_n, mode.varpi_n
    Q = np.array([[w - vp, w + vp], [w + vp, w - vp]])
    lhs = Q @ propagator_mode(mode, x, V0)  # scalar varpi conjugation drops out
    rhs = np.diag([np.exp(-1j * x * w), np.exp(1j * x * w)]) @ Q
    scale = np.linalg.norm(rhs)
    return Q, float(np.linalg.norm(lhs - rhs) / scale) if scale else 0.0


# ---------------------------------------------------------------------------
# general transverse bases


class WellBasis:
    """Infinite-well modes with ``varpi`` diagonal, ``varpi phi_n = varpi_n phi_n``."""

    closed_form = True

    def __init__(self, b, V0):
        self.b = b
        self.V0 = V0

    def E_n(self, n):
        return (math.pi * np.asarray(n) / self.b) ** 2 + self.V0

    def phi_tilde(self, n, p):
        return phi_tilde(n, p, self.b)

    def varpi_matrix(self, N, k):
        from .dispersion import varpi_mode

        return np.diag(np.asarray(varpi_mode(np.arange(1, N + 1), k, self.b), dtype=complex))


class QuadratureWellBasis(WellBasis):
    """Infinite-well modes with ``varpi`` taken as the free-space ``varpi(p)``
    sandwiched between mode functions and integrated numerically.

    The resulting matrix is dense on modes of equal parity and does not
    commute with ``W``, which makes it a useful non-trivial general basis.
    """

    closed_form = False

    def __init__(self, b, V0, tol=1e-10):
        super().__init__(b, V0)
        self.tol = tol
        self._cache = {}

    def varpi_matrix(self, N, k):
        key = (N, k)
        if key not in self._cache:
            self._cache[key] = varpi_matrix(self.b, N, k, tol=self.tol)
        return self._cache[key]


@dataclass(frozen=True)
class TruncatedOperator:
    """A ``2N x 2N`` operator on ``C^2 (x) span{phi_1..phi_N}``.

    Entry ``[2*(m-1)+s, 2*(n-1)+t]`` couples component ``s`` of mode ``m``
    with component ``t`` of mode ``n``.
    """

    N: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2 * self.N, 2 * self.N):
            raise DomainError(f"expected shape {(2 * self.N,) * 2}, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DomainError("non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def block(self, m, n):
        return self.matrix[2 * (m - 1) : 2 * m, 2 * (n - 1) : 2 * n]

    def __matmul__(self, other):
        return TruncatedOperator(self.N, self.matrix @ other.matrix)


def _general_parts(basis, k, N):
    P = np.asarray(basis.varpi_matrix(N, k), dtype=complex)
    w = np.asarray(upper_sqrt(k * k - np.asarray(basis.E_n(np.arange(1, N + 1)), dtype=complex)))
    return P, w


def truncated_H(basis, k, N):
    """Generator on N modes with ``V = varpi^2 - W^2`` in the truncated algebra."""
    P, w = _general_parts(basis, k, N)
    Pinv = np.linalg.inv(P)
    V = P @ P - np.diag(w * w)
    return TruncatedOperator(N, np.kron(0.5 * V @ Pinv, K) - np.kron(P, SIGMA3))


def truncated_propagator(basis, k, N, x):
    """Closed-form ``exp(-ixH)`` on N modes from ``cos(xW)`` and ``sin(xW)/W``."""
    P, w = _general_parts(basis, k, N)
    Pinv = np.linalg.inv(P)
    C = np.diag(np.cos(w * x))
    S = np.diag(sin_over(w, x))
    W2 = np.diag(w * w)
    m = 0.5 * (
        np.kron(P @ C @ Pinv, I2 + SIGMA1)
        + np.kron(C, I2 - SIGMA1)
        + 1j * (np.kron(W2 @ S @ Pinv, K) + np.kron(P @ S, KT))
    )
    return TruncatedOperator(N, m)


def truncated_intertwining_residual(basis, k, N, x):
    """Relative residual of ``Q varpi^-1 e^{-ixH} varpi = e^{-ixW sigma_3} Q`` on N modes.

    Scaled by the norm of the right-hand side: evanescent entries of
    ``e^{-ixW sigma_3}`` grow like ``e^{x |w_n|}``, so ``||Q||`` alone is not a
    meaningful yardstick once ``N`` is large.
    """
    P, w = _general_parts(basis, k, N)
    W = np.diag(w)
    Q = np.kron(W - P, I2) + np.kron(W + P, SIGMA1)
    Pbig = np.kron(P, I2)
    U = truncated_propagator(basis, k, N, x).matrix
    lhs = Q @ np.linalg.solve(Pbig, U @ Pbig)
    rhs = np.kron(np.diag(np.exp(-1j * x * w)), np.diag([1, 0])) + np.kron(np.diag(np.exp(1j * x * w)), np.diag([0, 1]))
    rhs = rhs @ Q
    return float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))


def _solve(A, B, what):
    # rows of evanescent modes carry cosh-size factors; equilibrate before judging
    d = np.abs(A).max(axis=1)
    d = np.where(d > 0, d, 1.0)
    A, B = A / d[:, None], B / d[:, None]
    cond = np.linalg.cond(A)
    if not np.isfinite(cond) or cond > 1e13:
        raise InternalResonanceError(
            f"internal resonance of truncated operator ({what}, cond={cond:.3g}); refine N or perturb k"
        )
    return np.linalg.solve(A, B)


def assemble_gamma_general(basis, k, spec, N):
    """``(Gamma_+, Gamma_-)`` as ``N x N`` matrices in the mode basis.

    Built from ``Omega_1 = W cos(aW/2) +- i sin(aW/2) varpi`` and
    ``Omega_2 = cos(aW/2) varpi +- i W sin(aW/2)``, operator order kept as
    written. ``Omega_1`` is divided by ``W`` on the left so that the
    construction survives ``w_n = 0``; the quotient is unchanged.
    """
    P, w = _general_parts(basis, k, N)
    a = spec.a
    c = np.diag(np.cos(a * w / 2))
    s_over = np.diag(sin_over(w, a / 2))  # sin(aW/2)/W
    ws = np.diag(w * np.sin(a * w / 2))  # W sin(aW/2)
    om1p, om1m = c + 1j * s_over @ P, c - 1j * s_over @ P
    om2p, om2m = c @ P + 1j * ws, c @ P - 1j * ws
    r1 = _solve(om1m, om1p, "Omega_1-")
    r2 = _solve(om2m, om2p, "Omega_2-")
    return 0.5 * (r1 + r2), 0.5 * (r1 - r2)
