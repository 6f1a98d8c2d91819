"""Dense linear-algebra and analysis kernels.

Continuous Lyapunov solves (Schur-based, so defective drift matrices need no
special casing), eigendecompositions, polynomial roots with cluster
detection, periodic quadrature with point doubling, and log-log power-law
fits.  All tolerances are relative to input norms with an absolute floor of
1e-14.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import (
    ConvergenceFailure,
    DegenerateInput,
    DimensionMismatch,
    NoConvergence,
    NonPositiveValue,
    SingularSylvester,
)

ABS_FLOOR = 1e-14


def _as_square(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    return a


def hermitize_antisymmetric(a: np.ndarray) -> np.ndarray:
    """Project onto the Hermitian-antisymmetric (purely imaginary) subspace."""
    im = np.imag(a)
    return 1j * 0.5 * (im - im.T)


def _quasi_triangular_eigenvalues(t: np.ndarray) -> np.ndarray:
    """Eigenvalues of a real Schur form by scanning its 1x1 / 2x2 blocks."""
    n = t.shape[0]
    scale = max(np.max(np.abs(t)) if t.size else 0.0, ABS_FLOOR)
    eigs = np.empty(n, dtype=complex)
    i = 0
    while i < n:
        if i + 1 < n and abs(t[i + 1, i]) > 1e-14 * scale:
            a, b = t[i, i], t[i, i + 1]
            c, d = t[i + 1, i], t[i + 1, i + 1]
            tr, det = a + d, a * d - b * c
            disc = complex(tr * tr / 4.0 - det) ** 0.5
            eigs[i] = tr / 2.0 + disc
            eigs[i + 1] = tr / 2.0 - disc
            i += 2
        else:
            eigs[i] = t[i, i]
            i += 1
    return eigs


class LyapunovSolver:
    """Schur-factored solver for ``X G + G X^T = Y`` with a fixed real drift.

    The Bartels-Stewart back-substitution runs on the real Schur form, so a
    defective (Jordan-like) drift needs no special casing.  Factoring once
    and reusing the triangular solve is what makes steady state plus
    tangent sweeps cheap.
    """

    def __init__(self, x: np.ndarray):
        x = np.real(_as_square(x, "x"))
        self.x = x
        self.t, self.u = sla.schur(x, output="real")
        self.spectrum = _quasi_triangular_eigenvalues(self.t)
        scale = max(np.max(np.abs(self.spectrum)), ABS_FLOOR)
        self.pair_min = float(
            np.min(np.abs(self.spectrum[:, None] + self.spectrum[None, :]))
        )
        self._singular = self.pair_min <= max(1e-12 * scale, ABS_FLOOR)
        self._trsyl = sla.get_lapack_funcs(("trsyl",), (x,))[0]

    def solve(self, y: np.ndarray) -> np.ndarray:
        if self._singular:
            raise SingularSylvester(
                f"min |x_i + x_j| = {self.pair_min:.3e} below tolerance; "
                "Lyapunov equation has no unique solution"
            )
        y = np.asarray(y, dtype=complex)
        rhs = self.u.T @ y @ self.u
        zr, scale_r, info_r = self._trsyl(self.t, self.t, np.real(rhs), tranb="T")
        zi, scale_i, info_i = self._trsyl(self.t, self.t, np.imag(rhs), tranb="T")
        if info_r < 0 or info_i < 0:  # pragma: no cover - argument error
            raise SingularSylvester(f"trsyl failed with info={(info_r, info_i)}")
        g = self.u @ (zr / scale_r + 1j * zi / scale_i) @ self.u.T
        res = np.linalg.norm(self.x @ g + g @ self.x.T - y)
        bound = 1e-10 * (np.linalg.norm(self.x) * np.linalg.norm(g) + np.linalg.norm(y))
        if res > max(bound, ABS_FLOOR):
            raise SingularSylvester(
                f"Lyapunov residual {res:.3e} exceeds {bound:.3e}; equation is near singular"
            )
        return g


def solve_continuous_lyapunov(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Solve ``X G + G X^T = Y`` for the covariance matrix ``G``.

    ``x`` is real with spectrum in the closed right half plane; ``y`` is
    Hermitian antisymmetric, and so is the returned ``G``.

    Raises
    ------
    SingularSylvester
        when ``min_{ij} |x_i + x_j|`` is below tolerance (the equation has
        no unique solution) or the residual check fails.
    """
    x = _as_square(x, "x")
    y = _as_square(y, "y")
    if x.shape != y.shape:
        raise DimensionMismatch(f"x {x.shape} and y {y.shape} differ")
    solver = LyapunovSolver(x)
    return hermitize_antisymmetric(solver.solve(y))


def hermitian_eigendecomposition(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix."""
    a = _as_square(a)
    scale = max(np.max(np.abs(a)), ABS_FLOOR)
    if np.max(np.abs(a - a.conj().T)) > 1e-12 * scale:
        raise DimensionMismatch("input is not Hermitian")
    vals, vecs = np.linalg.eigh(a)
    return vals, vecs


def general_eigendecomposition(a: np.ndarray) -> tuple[np.ndarray, float]:
    """Eigenvalues of a real square matrix plus a defectiveness estimate.

    The condition estimate is the condition number of the eigenvector
    matrix; values ``>~ 1e8`` flag a nearly defective (Jordan-like)
    spectrum.
    """
    a = _as_square(a)
    try:
        vals, vecs = sla.eig(np.asarray(a, dtype=float))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(f"eigendecomposition failed: {exc}") from exc
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(vecs))
    if not np.isfinite(cond):
        cond = np.inf
    return vals, cond


def polynomial_roots(coefficients: Sequence[complex]) -> np.ndarray:
    """Roots of ``sum_k c_k z^k`` (coefficients in ascending order)."""
    c = np.atleast_1d(np.asarray(coefficients, dtype=complex))
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale == 0.0:
        raise DegenerateInput("all polynomial coefficients are zero")
    # trim trailing (leading-power) zeros relative to the coefficient scale
    nz = np.nonzero(np.abs(c) > ABS_FLOOR * scale)[0]
    c = c[: nz[-1] + 1]
    if c.size == 1:
        return np.array([], dtype=complex)
    return np.roots(c[::-1])


def cluster_roots(roots: np.ndarray, rtol: float = 1e-6) -> list[list[int]]:
    """Group root indices whose mutual distance is below ``rtol`` (relative).

    Downstream residue code treats clusters of size > 1 as non-simple poles
    and switches to contour integration.
    """
    roots = np.asarray(roots)
    n = roots.size
    scale = max(np.max(np.abs(roots)) if n else 0.0, 1.0)
    unassigned = list(range(n))
    clusters: list[list[int]] = []
    while unassigned:
        i = unassigned.pop(0)
        group = [i]
        for j in unassigned[:]:
            if np.abs(roots[i] - roots[j]) <= rtol * scale:
                group.append(j)
                unassigned.remove(j)
        clusters.append(sorted(group))
    return clusters


def polynomial_from_roots(roots: Sequence[complex]) -> np.ndarray:
    """Monic polynomial coefficients (ascending) with the given roots."""
    return np.polynomial.polynomial.polyfromroots(np.asarray(roots, dtype=complex))


def periodic_quadrature(
    f: Callable[[np.ndarray], np.ndarray],
    tolerance: float,
    *,
    initial_points: int = 32,
    max_points: int = 1 << 21,
) -> complex:
    """Integrate ``f`` over one period ``[-pi, pi)`` by trapezoid doubling.

    For a periodic integrand the trapezoid rule on equispaced points is the
    rectangle rule and converges spectrally for smooth ``f``.  Points are
    doubled (reusing previous evaluations) until two successive estimates
    differ by less than ``max(tolerance * max(1, |I|), 1e-14)``.
    """
    m = int(initial_points)
    phis = -np.pi + 2.0 * np.pi * np.arange(m) / m
    vals = np.asarray(f(phis), dtype=complex)
    total = np.sum(vals)
    estimate = 2.0 * np.pi * total / m
    while m < max_points:
        mids = -np.pi + 2.0 * np.pi * (np.arange(m) + 0.5) / m
        total = total + np.sum(np.asarray(f(mids), dtype=complex))
        m *= 2
        new_estimate = 2.0 * np.pi * total / m
        if np.abs(new_estimate - estimate) <= max(
            tolerance * max(1.0, np.abs(new_estimate)), ABS_FLOOR
        ):
            estimate = new_estimate
            return complex(estimate) if np.iscomplexobj(vals) else float(estimate.real)
        estimate = new_estimate
    raise NoConvergence(
        f"periodic quadrature did not settle within {max_points} points "
        "(near-critical integrand?)",
        last_estimate=complex(estimate),
    )


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit of ``value = prefactor * n**exponent``."""

    exponent: float
    prefactor: float
    r_squared: float
    n_range: tuple[int, int]


def fit_power_law(samples: Sequence[tuple[int, float]]) -> PowerLawFit:
    """Fit a power law through ``(n, value)`` samples in log-log space."""
    samples = list(samples)
    if len(samples) < 4:
        raise NonPositiveValue(f"need at least 4 samples, got {len(samples)}")
    ns = np.array([s[0] for s in samples], dtype=float)
    vs = np.array([s[1] for s in samples], dtype=float)
    if np.any(vs <= 0.0) or np.any(ns <= 0):
        raise NonPositiveValue("power-law fit requires positive sizes and values")
    ln_n, ln_v = np.log(ns), np.log(vs)
    a = np.vstack([ln_n, np.ones_like(ln_n)]).T
    (slope, intercept), *_ = np.linalg.lstsq(a, ln_v, rcond=None)
    fitted = a @ np.array([slope, intercept])
    ss_res = float(np.sum((ln_v - fitted) ** 2))
    ss_tot = float(np.sum((ln_v - np.mean(ln_v)) ** 2))
    r2 = 1.0 if ss_tot <= ABS_FLOOR else 1.0 - ss_res / ss_tot
    return PowerLawFit(
        exponent=float(slope),
        prefactor=float(np.exp(intercept)),
        r_squared=float(min(max(r2, 0.0), 1.0)),
        n_range=(int(np.min(ns)), int(np.max(ns))),
    )
