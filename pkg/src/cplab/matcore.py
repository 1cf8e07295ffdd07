"""Dense complex matrix kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; :func:`as_cmat`
is the single validation gate (square-or-not, finite entries).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EigenvalueCollision,
    NonConvergence,
    NonFiniteInput,
    SingularOperator,
)

SEP_MIN = 1e-8
EIG_TOL = 1e-10
SYLVESTER_RTOL = 1e-12


def as_cmat(a, *, square: bool = True, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D complex array (a copy only if needed)."""
    m = np.asarray(a, dtype=complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {m.shape}")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteInput(f"{name} has non-finite entries")
    return m


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = as_cmat(a, name="a")
    b = as_cmat(b, name="b")
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    return a, b


def commutator(a, b) -> np.ndarray:
    """``ab - ba``."""
    a, b = _pair(a, b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    """``ab + ba``."""
    a, b = _pair(a, b)
    return a @ b + b @ a


def fro(a) -> float:
    return float(np.linalg.norm(a))


def min_separation(values) -> float:
    """Smallest pairwise distance of a vector of complex numbers (inf if < 2)."""
    v = np.asarray(values, dtype=complex).ravel()
    if v.size < 2:
        return float("inf")
    d = np.abs(v[:, None] - v[None, :])
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())


def canonical_order(values) -> np.ndarray:
    """Indices sorting complex values lexicographically by (Re, Im)."""
    v = np.asarray(values, dtype=complex)
    return np.lexsort((v.imag, v.real))


@dataclass(frozen=True)
class EigDecomp:
    V: np.ndarray
    lam: np.ndarray
    cond_estimate: float

    def reassemble(self) -> np.ndarray:
        return self.V @ np.diag(self.lam) @ np.linalg.inv(self.V)


def eig_diagonalize(m, sep_min: float = SEP_MIN, tol: float = EIG_TOL) -> EigDecomp:
    """Eigendecomposition of a diagonalizable complex matrix.

    Eigenvalues come back sorted by (Re, Im); each eigenvector column has unit
    norm and its largest entry real positive, so the output is deterministic.

    Raises
    ------
    EigenvalueCollision
        Two eigenvalues closer than ``sep_min`` (includes Jordan blocks).
    NonConvergence
        LAPACK failure, or the residual ``|MV - V diag(lam)|`` exceeds
        ``tol * |M|``.
    """
    m = as_cmat(m)
    try:
        lam, V = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise NonConvergence(str(exc)) from exc

    order = canonical_order(lam)
    lam = lam[order]
    V = V[:, order]

    sep = min_separation(lam)
    if sep < sep_min:
        raise EigenvalueCollision(f"eigenvalue separation {sep:.3e} below {sep_min:.1e}")

    V = V / np.linalg.norm(V, axis=0)
    lead = np.abs(V).argmax(axis=0)
    phase = V[lead, np.arange(V.shape[1])]
    V = V * (np.abs(phase) / phase)

    scale = fro(m)
    resid = fro(m @ V - V * lam)
    if resid > tol * max(scale, np.finfo(float).tiny):
        raise NonConvergence(f"eigen residual {resid:.3e} exceeds {tol:.1e}*|M|")
    cond = float(np.linalg.cond(V))
    if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
        raise EigenvalueCollision("eigenvector matrix is numerically singular")
    return EigDecomp(V=V, lam=lam, cond_estimate=cond)


def ad_shifted_operator(k) -> np.ndarray:
    """Dense ``n^2 x n^2`` matrix of ``Y -> Y + kY - Yk`` on column-major vec(Y)."""
    k = as_cmat(k, name="k")
    n = k.shape[0]
    eye = np.eye(n)
    return np.eye(n * n) + np.kron(eye, k) - np.kron(k.T, eye)


def sylvester_ad_solve(k, r, singular_tol: float = 1e-10) -> np.ndarray:
    """Solve ``Y + [k, Y] = r``.

    Works in the eigenbasis of ``k`` where the operator is the entrywise
    multiplier ``1 + kappa_i - kappa_j``; a dense Kronecker solve takes over
    when that route misses the residual target (near-defective ``k``).
    Every result is checked by substitution to ``1e-12`` relative.
    """
    k, r = _pair(k, r)
    n = k.shape[0]
    rnorm = fro(r)
    if rnorm == 0.0:
        return np.zeros_like(r)

    def residual(y):
        return fro(y + k @ y - y @ k - r)

    if np.count_nonzero(k - np.diag(np.diag(k))) == 0:
        kap = np.diag(k)
        denom = 1.0 + kap[:, None] - kap[None, :]
        _check_factors(denom, singular_tol, k)
        return r / denom

    lam, V = np.linalg.eig(k)
    denom = 1.0 + lam[:, None] - lam[None, :]
    _check_factors(denom, singular_tol, k)

    y = None
    if np.linalg.cond(V) < 1e8:
        rhat = np.linalg.solve(V, r @ V)
        y = V @ (rhat / denom) @ np.linalg.inv(V)
    if y is None or residual(y) > SYLVESTER_RTOL * rnorm:
        L = ad_shifted_operator(k)
        vec_r = r.reshape(-1, order="F")
        v = np.linalg.solve(L, vec_r)
        v = v + np.linalg.solve(L, vec_r - L @ v)
        y = v.reshape(n, n, order="F")
    res = residual(y)
    if res > SYLVESTER_RTOL * rnorm:
        raise SingularOperator(f"substitution residual {res / rnorm:.3e} (relative) after dense solve")
    return y


def _check_factors(denom: np.ndarray, singular_tol: float, k: np.ndarray) -> None:
    worst = float(np.abs(denom).min())
    if worst < singular_tol * max(1.0, fro(k)):
        raise SingularOperator(f"Id + ad_k is singular: min |1 + k_i - k_j| = {worst:.3e}")
