"""Fermionic Gaussian states as Majorana covariance matrices.

The covariance matrix ``G_jk = 1/2 Tr(rho [w_j, w_k])`` is purely imaginary,
antisymmetric (hence Hermitian) and has spectrum in ``[-1, 1]``.  The global
Majorana convention, fixed here once and validated against the dense oracle,
is

    w_{2j-1} = c_j + c_j^dag,   w_{2j} = i (c_j - c_j^dag),

with sites ordered ``1..n`` and fermions realized through the Jordan-Wigner
strings ``w_{2j-1} = Z^{(j-1)} X_j``, ``w_{2j} = Z^{(j-1)} Y_j``, so that
``sigma^z_j = -i w_{2j-1} w_{2j}``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    NormExceedsOne,
    NotAntisymmetric,
    NotHermitian,
    PureModePresent,
    TooManyModes,
)

EPS_PURE = 1e-12


@dataclass(frozen=True)
class CovarianceMatrix:
    """Validated two-point Majorana correlation matrix."""

    n_modes: int
    gamma: np.ndarray

    @property
    def dim(self) -> int:
        return 2 * self.n_modes


@dataclass(frozen=True)
class EigenmodeDecomposition:
    """Canonical form ``G = Q (+)_k [[0, i g_k], [-i g_k, 0]] Q^T``."""

    q: np.ndarray
    gammas: np.ndarray

    def reassemble(self) -> np.ndarray:
        n = self.gammas.size
        d = np.zeros((2 * n, 2 * n), dtype=complex)
        for k, g in enumerate(self.gammas):
            d[2 * k, 2 * k + 1] = 1j * g
            d[2 * k + 1, 2 * k] = -1j * g
        return self.q @ d @ self.q.T


def as_gamma(state) -> np.ndarray:
    """Accept either a raw matrix or a CovarianceMatrix."""
    if isinstance(state, CovarianceMatrix):
        return state.gamma
    return np.asarray(state, dtype=complex)


def validate(gamma) -> CovarianceMatrix:
    """Check all physicality conditions and wrap the matrix.

    Raises the exception naming the violated condition: NotHermitian,
    NotAntisymmetric or NormExceedsOne.
    """
    g = np.asarray(gamma, dtype=complex)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2 != 0:
        raise DimensionMismatch(f"covariance matrix must be square of even size, got {g.shape}")
    scale = max(np.max(np.abs(g)), 1e-14)
    if np.max(np.abs(g - g.conj().T)) > 1e-12 * scale:
        raise NotHermitian("gamma is not Hermitian")
    if np.max(np.abs(g + g.T)) > 1e-12 * scale:
        raise NotAntisymmetric("gamma is not antisymmetric")
    top = np.max(np.abs(np.linalg.eigvalsh(g))) if g.size else 0.0
    if top > 1.0 + 1e-10:
        raise NormExceedsOne(f"spectral norm {top:.12f} exceeds 1")
    return CovarianceMatrix(n_modes=g.shape[0] // 2, gamma=g)


def eigenmodes(gamma) -> EigenmodeDecomposition:
    """Real orthogonal canonical form of a covariance matrix.

    Writes ``G = i A`` with ``A`` real antisymmetric and block-diagonalizes
    ``A`` by its real Schur form, which stays orthogonal through degenerate
    and zero modes (where pairing complex eigenvectors of the Hermitian
    matrix breaks down).  Blocks are canonicalized to ``g_k >= 0`` and
    sorted descending; the eigenmode Majoranas are ``z = Q^T w``.
    """
    import scipy.linalg as sla

    g = as_gamma(gamma)
    dim = g.shape[0]
    a = np.imag(g)
    t, q = sla.schur(a, output="real")
    tol = 1e-12 * max(1.0, np.max(np.abs(a)) if a.size else 0.0)
    pairs: list[tuple[float, int, int]] = []
    singles: list[int] = []
    i = 0
    while i < dim:
        if i + 1 < dim and abs(t[i + 1, i]) > tol:
            s = t[i, i + 1]
            if s >= 0.0:
                pairs.append((s, i, i + 1))
            else:
                pairs.append((-s, i + 1, i))
            i += 2
        else:
            singles.append(i)
            i += 1
    for j in range(0, len(singles) - 1, 2):
        pairs.append((0.0, singles[j], singles[j + 1]))
    pairs.sort(key=lambda p: -p[0])
    q_out = np.zeros((dim, dim))
    gammas = np.zeros(dim // 2)
    for k, (gk, c1, c2) in enumerate(pairs):
        gammas[k] = gk
        q_out[:, 2 * k] = q[:, c1]
        q_out[:, 2 * k + 1] = q[:, c2]
    return EigenmodeDecomposition(q=q_out, gammas=gammas)


def mode_occupations(gamma) -> np.ndarray:
    """The n nonnegative canonical eigenvalues ``g_k`` of the covariance."""
    g = as_gamma(gamma)
    vals = np.linalg.eigvalsh(g)
    n = g.shape[0] // 2
    return np.sort(np.abs(vals[:n]))[::-1]


def purity(gamma) -> float:
    """``Tr rho^2 = sqrt(det((1 + G^2)/2)) = prod_k (1 + g_k^2)/2``."""
    gs = mode_occupations(gamma)
    return float(np.prod((1.0 + gs**2) / 2.0))


def omega_from_gamma(gamma) -> np.ndarray:
    """Invert ``G = tanh(i Omega / 2)`` for the real antisymmetric kernel.

    Raises PureModePresent when any ``|g_k| >= 1 - 1e-12`` (the kernel entry
    diverges; the covariance parameterisation remains regular there).
    """
    g = as_gamma(gamma)
    vals, vecs = np.linalg.eigh(g)
    if np.max(np.abs(vals)) >= 1.0 - EPS_PURE:
        raise PureModePresent("a mode is (numerically) pure; Omega diverges")
    omega = vecs @ np.diag(-2j * np.arctanh(vals)) @ vecs.conj().T
    return np.real(omega)


def gamma_from_omega(omega: np.ndarray) -> np.ndarray:
    """Forward map ``G = tanh(i Omega / 2)`` for real antisymmetric input."""
    om = np.asarray(omega, dtype=float)
    herm = 1j * om / 2.0
    vals, vecs = np.linalg.eigh(herm)
    return vecs @ np.diag(np.tanh(vals)) @ vecs.conj().T


def pfaffian(a: np.ndarray) -> complex:
    """Pfaffian of an even-dimensional antisymmetric matrix (Parlett-Reid LTL)."""
    m = np.array(a, dtype=complex)
    n = m.shape[0]
    if n % 2 == 1:
        return 0.0
    pf = 1.0 + 0.0j
    for k in range(0, n - 1, 2):
        pivot = k + 1 + int(np.argmax(np.abs(m[k + 1 :, k])))
        if np.abs(m[pivot, k]) < 1e-300:
            return 0.0
        if pivot != k + 1:
            m[[k + 1, pivot], :] = m[[pivot, k + 1], :]
            m[:, [k + 1, pivot]] = m[:, [pivot, k + 1]]
            pf = -pf
        pf *= m[k, k + 1]
        if k + 2 < n:
            tau = m[k, k + 2 :] / m[k, k + 1]
            col = m[k + 2 :, k + 1]
            m[k + 2 :, k + 2 :] += np.outer(tau, col) - np.outer(col, tau)
    return complex(pf)


def wick_expectation(gamma, indices: Sequence[int]) -> complex:
    """Moment ``Tr(rho w_{i1} ... w_{i2p})`` from Wick contractions.

    Indices are 1-based Majorana labels, repeated labels allowed.  For
    ``p = 2`` this is ``a_jk a_lm - a_jl a_km + a_jm a_kl`` with
    ``a = G + 1``; the general case is the Pfaffian of the antisymmetric
    matrix of ordered pair contractions.
    """
    g = as_gamma(gamma)
    dim = g.shape[0]
    idx = [int(i) - 1 for i in indices]
    if len(idx) % 2 != 0:
        return 0.0
    if any(i < 0 or i >= dim for i in idx):
        raise IndexOutOfRange(f"indices must lie in 1..{dim}")
    if len(idx) > dim:
        raise IndexOutOfRange(f"requested a {len(idx)//2}-pair moment with only {dim//2} modes")
    a = g + np.eye(dim)
    if len(idx) == 4:
        j, k, l, m = idx
        return complex(a[j, k] * a[l, m] - a[j, l] * a[k, m] + a[j, m] * a[k, l])
    p2 = len(idx)
    b = np.zeros((p2, p2), dtype=complex)
    for r in range(p2):
        for s in range(r + 1, p2):
            b[r, s] = a[idx[r], idx[s]]
            b[s, r] = -b[r, s]
    return pfaffian(b)


# --- dense (Jordan-Wigner) bridge --------------------------------------------

_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def _kron_chain(ops: Sequence[np.ndarray]) -> np.ndarray:
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def majorana_operators(n_modes: int) -> list[np.ndarray]:
    """Dense JW Majoranas ``w_1 .. w_2n`` on ``2^n`` dimensions."""
    ops = []
    eye = np.eye(2, dtype=complex)
    for j in range(n_modes):
        before = [_PAULI_Z] * j
        after = [eye] * (n_modes - j - 1)
        ops.append(_kron_chain(before + [_PAULI_X] + after))
        ops.append(_kron_chain(before + [_PAULI_Y] + after))
    return ops


def gamma_from_dense(rho: np.ndarray, majoranas: Sequence[np.ndarray] | None = None) -> np.ndarray:
    """Recompute ``G_jk = 1/2 Tr(rho [w_j, w_k])`` from a dense state."""
    rho = np.asarray(rho, dtype=complex)
    n = int(np.log2(rho.shape[0]))
    w = majoranas if majoranas is not None else majorana_operators(n)
    dim = 2 * n
    g = np.zeros((dim, dim), dtype=complex)
    for j in range(dim):
        for k in range(j + 1, dim):
            val = 0.5 * np.trace(rho @ (w[j] @ w[k] - w[k] @ w[j]))
            g[j, k] = val
            g[k, j] = -val
    return g


def dense_state_from_gamma(gamma, max_modes: int = 7):
    """Materialize ``rho = prod_k (1 - i g_k z_{2k-1} z_{2k}) / 2`` densely.

    ``z = Q^T w`` are the eigenmode Majoranas in the JW representation (the
    transpose pairing makes the z-covariance exactly the canonical block
    form of ``G = Q D Q^T``).  Returns a :class:`nessgeom.oracle.DenseState`.
    """
    from .oracle import DenseState  # deferred to avoid a module cycle

    cov = gamma if isinstance(gamma, CovarianceMatrix) else validate(gamma)
    n = cov.n_modes
    if n > max_modes:
        raise TooManyModes(f"{n} modes exceed the dense limit of {max_modes}")
    modes = eigenmodes(cov.gamma)
    w = majorana_operators(n)
    z = [sum(modes.q[j, i] * w[j] for j in range(2 * n)) for i in range(2 * n)]
    rho = np.eye(2**n, dtype=complex)
    for k, gk in enumerate(modes.gammas):
        rho = rho @ (np.eye(2**n) - 1j * gk * (z[2 * k] @ z[2 * k + 1])) / 2.0
    return DenseState(dim=2**n, rho=rho)
