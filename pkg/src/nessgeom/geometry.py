"""Geometry of Gaussian states from covariance-matrix data.

The generalized quantum geometric tensor of a Gaussian family is assembled
in the eigenbasis of the covariance matrix G (eigenvalues ``g_j``):

    Q_mn = (1/8) sum_jk (1 - g_j)(1 + g_k) (d_m G)_jk (d_n G)_kj / (1 - g_j g_k)^2

with terms where ``g_j g_k -> 1`` set to zero by continuity (both modes
pure; the vanishing prefactors make the combined formula stable exactly
where forming the transport kernel first would not be).  The Bures metric
is ``Re Q``, the mean Uhlmann curvature ``2 Im Q``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    EvaluationFailure,
    RankChangeSingularity,
    SingularFisher,
    ZeroGap,
)
from .numerics import hermitize_antisymmetric

DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class TangentSet:
    """Covariance derivatives d_mu G, one per parameter label."""

    parameters: tuple[str, ...]
    d_gamma: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.parameters) != len(self.d_gamma):
            raise EvaluationFailure("one tangent matrix per parameter required")

    @property
    def n_params(self) -> int:
        return len(self.parameters)


@dataclass(frozen=True)
class GeometryResult:
    """Bures metric g, MUC u and QGT q = g + (i/2) u at one family point."""

    parameters: tuple[str, ...]
    g: np.ndarray
    u: np.ndarray
    q: np.ndarray
    r_ratio: float | None

    @property
    def fisher(self) -> np.ndarray:
        return 4.0 * self.g

    def gmax(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(self.g))))

    def umax(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvalsh(1j * self.u))))


def make_tangents(parameters: Sequence[str], d_gammas: Sequence[np.ndarray]) -> TangentSet:
    """Wrap tangent matrices, projecting out non-(Hermitian-antisymmetric) noise."""
    cleaned = tuple(hermitize_antisymmetric(np.asarray(d, dtype=complex)) for d in d_gammas)
    return TangentSet(parameters=tuple(parameters), d_gamma=cleaned)


def _eigenframe(gamma) -> tuple[np.ndarray, np.ndarray]:
    from .gaussian import as_gamma

    g = as_gamma(gamma)
    vals, vecs = np.linalg.eigh(g)
    return vals, vecs


def transport_kernel(gamma, d_gamma: np.ndarray) -> np.ndarray:
    """Parallel-transport kernel K solving the discrete Lyapunov relation
    ``G K G - K = dG``.

    In the eigenbasis of G, ``K_jk = (dG)_jk / (g_j g_k - 1)``.  Raises
    RankChangeSingularity when the state changes rank along the direction
    (``|1 - g_j g_k|`` below tolerance with a non-negligible ``(dG)_jk``).
    """
    vals, vecs = _eigenframe(gamma)
    d = vecs.conj().T @ np.asarray(d_gamma, dtype=complex) @ vecs
    denom = np.outer(vals, vals) - 1.0
    scale = max(np.max(np.abs(d_gamma)), 1e-300)
    degenerate = np.abs(denom) < DEGENERACY_TOL
    if np.any(degenerate & (np.abs(d) > 1e-8 * scale)):
        raise RankChangeSingularity(
            "tangent has weight on a pure-pure mode pair: rank changes along this direction"
        )
    k = np.where(degenerate, 0.0, d / np.where(degenerate, 1.0, denom))
    k = vecs @ k @ vecs.conj().T
    return hermitize_antisymmetric(k)


def qgt(gamma, tangents: TangentSet, *, check_rank: bool = True) -> GeometryResult:
    """Generalized QGT (Bures metric + mean Uhlmann curvature) of a family.

    ``check_rank=False`` skips the rank-change flag so that limits toward
    the pure manifold can be probed; the continuity rule still zeroes the
    degenerate pair terms.
    """
    vals, vecs = _eigenframe(gamma)
    pref = np.outer(1.0 - vals, 1.0 + vals)
    denom = (1.0 - np.outer(vals, vals)) ** 2
    degenerate = np.abs(1.0 - np.outer(vals, vals)) < DEGENERACY_TOL
    weight = np.where(degenerate, 0.0, pref / np.where(degenerate, 1.0, denom))
    p = tangents.n_params
    mats = []
    for d_g in tangents.d_gamma:
        d = vecs.conj().T @ np.asarray(d_g, dtype=complex) @ vecs
        if check_rank:
            scale = max(np.max(np.abs(d_g)), 1e-300)
            if np.any(degenerate & (np.abs(d) > 1e-8 * scale)):
                raise RankChangeSingularity(
                    "tangent has weight on a pure-pure mode pair: the state changes "
                    "rank along this direction and the continuity rule does not apply"
                )
        mats.append(d)
    q = np.zeros((p, p), dtype=complex)
    for mu in range(p):
        for nu in range(mu, p):
            q[mu, nu] = 0.125 * np.sum(weight * mats[mu] * mats[nu].T)
            if nu != mu:
                q[nu, mu] = np.conj(q[mu, nu])
    g = np.real(q)
    g = 0.5 * (g + g.T)
    u = 2.0 * np.imag(q)
    u = 0.5 * (u - u.T)
    q_exact = g + 0.5j * u
    r = None
    try:
        r = incompatibility_ratio(g, u)
    except SingularFisher:
        r = None
    return GeometryResult(parameters=tangents.parameters, g=g, u=u, q=q_exact, r_ratio=r)


def incompatibility_ratio(g: np.ndarray, u: np.ndarray) -> float:
    """Asymptotic incompatibility ``R = || 2i J^{-1} U ||_inf`` with ``J = 4g``.

    Evaluated through the similar Hermitian form ``2i J^{-1/2} U J^{-1/2}``
    whose spectral radius it equals; for two parameters this reduces to
    ``sqrt(det(2U) / det(J))``.  Raises SingularFisher when J is singular
    (the ratio is then undefined, not zero).
    """
    g = np.asarray(g, dtype=float)
    u = np.asarray(u, dtype=float)
    j = 4.0 * g
    vals, vecs = np.linalg.eigh(j)
    scale = max(np.max(np.abs(vals)), 1e-300)
    if np.min(vals) <= 1e-12 * scale:
        raise SingularFisher("Fisher matrix singular: incompatibility ratio undefined")
    inv_sqrt = (vecs / np.sqrt(vals)) @ vecs.conj().T
    herm = 2j * inv_sqrt @ u @ inv_sqrt
    r = float(np.max(np.abs(np.linalg.eigvalsh(herm))))
    return r


def tangents_finite_difference(
    model_eval: Callable[[np.ndarray], np.ndarray],
    point: Sequence[float],
    parameters: Sequence[str] | None = None,
    steps: float | Sequence[float] | None = None,
) -> TangentSet:
    """Central-difference covariance tangents of ``lambda -> G(lambda)``.

    Default step ``1e-5 * max(1, |lambda_mu|)`` per direction; results are
    projected back onto the Hermitian-antisymmetric subspace to kill
    rounding noise.
    """
    point = np.asarray(point, dtype=float)
    p = point.size
    if parameters is None:
        parameters = [f"l{i}" for i in range(p)]
    if steps is None:
        hs = [1e-5 * max(1.0, abs(point[mu])) for mu in range(p)]
    elif np.isscalar(steps):
        hs = [float(steps)] * p
    else:
        hs = [float(s) for s in steps]
    d_gammas = []
    for mu in range(p):
        up, dn = point.copy(), point.copy()
        up[mu] += hs[mu]
        dn[mu] -= hs[mu]
        try:
            g_up = np.asarray(model_eval(up), dtype=complex)
            g_dn = np.asarray(model_eval(dn), dtype=complex)
        except Exception as exc:  # noqa: BLE001 - wrapped for the caller
            raise EvaluationFailure(f"model evaluation failed at parameter {mu}: {exc}") from exc
        d_gammas.append((g_up - g_dn) / (2.0 * hs[mu]))
    return make_tangents(parameters, d_gammas)


def transport_fidelity_weight(gamma) -> float:
    """``P_G = (1/8) || (1+G) (x) (1+G) / (1 + G (x) G) ||`` without the Kronecker blowup.

    In the eigenbasis of G every factor diagonalizes, so the norm is the
    maximum of ``(1+g_j)(1+g_k) / (1+g_j g_k)`` over mode pairs; pairs with
    ``1 + g_j g_k -> 0`` approach the bounded limit 2.
    """
    vals, _ = _eigenframe(gamma)
    num = np.outer(1.0 + vals, 1.0 + vals)
    den = 1.0 + np.outer(vals, vals)
    tiny = den < 1e-12
    ratio = np.where(tiny, 2.0, np.abs(num) / np.where(tiny, 1.0, den))
    return 0.125 * float(np.max(ratio))


def qgt_gap_bound(
    q_value: complex,
    gamma,
    x: np.ndarray,
    y: np.ndarray,
    dx: np.ndarray,
    dy: np.ndarray,
    delta: float,
) -> tuple[float, float, bool]:
    """Check ``|Q_mn| / n <= 2 P_G Delta^-2 (||dY|| + 2 ||dX||)^2``.

    ``q_value`` is the QGT component for the direction whose shape-matrix
    derivatives are ``dx, dy``; ``delta`` is the dissipative gap.
    """
    if delta <= 0.0:
        raise ZeroGap(f"gap bound needs a positive gap, got {delta}")
    from .gaussian import as_gamma

    g = as_gamma(gamma)
    n = g.shape[0] // 2
    p_gamma = transport_fidelity_weight(g)
    dy_norm = float(np.linalg.norm(np.asarray(dy), 2))
    dx_norm = float(np.linalg.norm(np.asarray(dx), 2))
    lhs = float(np.abs(q_value)) / n
    rhs = 2.0 * p_gamma / delta**2 * (dy_norm + 2.0 * dx_norm) ** 2
    return lhs, rhs, bool(lhs <= rhs * (1.0 + 1e-8))
