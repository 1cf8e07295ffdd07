"""Stokes data of the noncommutative second Painleve system.

Stokes operators ``A, B, C`` and the formal-monodromy factor
``Q = exp(i pi [p, q])`` are treated as given ``n x n`` matrices; this
module evaluates the algebraic relations among them, the monodromy
product around ``z = 0`` and the commutative (scalar) limit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import serialize as ser
from .errors import InvalidInput, SingularQ
from .matcore import as_cmat, commutator, fro, sylvester_ad_solve

Q_COND_MAX = 1e12
INTEGER_TOL = 1e-12


class Parity(str, enum.Enum):
    QPLUS = "Qplus"
    QMINUS = "Qminus"
    MIXED = "Mixed"


@dataclass(frozen=True)
class StokesData:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Q: np.ndarray
    theta: complex

    def __post_init__(self):
        mats = [as_cmat(getattr(self, k), name=k) for k in "ABCQ"]
        if len({m.shape for m in mats}) != 1:
            raise InvalidInput(f"A, B, C, Q differ in shape: {[m.shape for m in mats]}")
        for k, m in zip("ABCQ", mats):
            object.__setattr__(self, k, m)
        object.__setattr__(self, "theta", complex(self.theta))
        if not np.isfinite(self.theta):
            raise InvalidInput("theta is not finite")
        if np.linalg.cond(self.Q) > Q_COND_MAX:
            raise SingularQ("Q is singular or numerically not invertible")

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @classmethod
    def scalar(cls, a, b, c, q, theta) -> "StokesData":
        return cls([[a]], [[b]], [[c]], [[q]], theta)

    @classmethod
    def from_json(cls, doc: dict) -> "StokesData":
        if not isinstance(doc, dict):
            raise InvalidInput("Stokes input must be a JSON object")
        allowed = {"A", "B", "C", "Q", "theta", "n"}
        unknown = set(doc) - allowed
        missing = {"A", "B", "C", "Q", "theta"} - set(doc)
        if unknown or missing:
            raise InvalidInput(f"Stokes input: unknown keys {sorted(unknown)}, missing keys {sorted(missing)}")
        n = doc.get("n")
        if n is None:
            n = int(round(np.sqrt(len(doc["Q"]))))
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise InvalidInput("n must be a positive integer")
        mats = {k: ser.matrix_from_json(doc[k], n, k) for k in "ABCQ"}
        return cls(theta=ser.from_cpair(doc["theta"], "theta"), **mats)


@dataclass(frozen=True)
class FormalJet:
    Y12: np.ndarray
    Y13: np.ndarray


def formal_jet(q, p, t: complex, theta: complex) -> FormalJet:
    """First coefficients of the formal solution at infinity.

    ``Y12 = -q`` and ``Y13`` solves ``Y + [[q, p], Y] = -i(q^4 - p^2 + t q^2 + 2 theta q)``.
    """
    q = as_cmat(q, name="q")
    p = as_cmat(p, name="p")
    q2 = q @ q
    rhs = -1j * (q2 @ q2 - p @ p + complex(t) * q2 + 2 * complex(theta) * q)
    return FormalJet(Y12=-q, Y13=sylvester_ad_solve(commutator(q, p), rhs))


def _sin_term(sd: StokesData) -> np.ndarray:
    return 2j * np.sin(np.pi * sd.theta) * np.eye(sd.n)


def _mm(*mats):
    """Complex matrix product assembled from real products.

    Real multiplication and addition commute exactly, so commuting
    diagonal factors give bitwise-equal products in either order; the
    complex BLAS kernels do not guarantee this.
    """
    out = mats[0]
    for Y in mats[1:]:
        Xr, Xi, Yr, Yi = out.real, out.imag, Y.real, Y.imag
        z = np.empty(out.shape[:1] + Y.shape[1:], dtype=complex)
        z.real = Xr @ Yr - Xi @ Yi
        z.imag = Xr @ Yi + Xi @ Yr
        out = z
    return out


def relation_matrices(sd: StokesData) -> tuple[np.ndarray, ...]:
    """Left-minus-right sides of the five Stokes relations, in order."""
    A, B, C, Q = sd.A, sd.B, sd.C, sd.Q
    Qi = np.linalg.inv(Q)
    I = np.eye(sd.n)
    s = _sin_term(sd)
    return (
        _mm(A + C + _mm(A, B, C), Q) + _mm(Qi, B) - s,
        _mm(_mm(A, B) + I, Q) - _mm(Qi, _mm(B, A) + I),
        _mm(C, Q, A) - _mm(A, Qi, C) + Q - Qi,
        _mm(_mm(B, C) + I, Q) - _mm(Qi, _mm(C, B) + I),
        _mm(B, Q) + _mm(Qi, A + C + _mm(C, B, A)) - s,
    )


def stokes_residuals(sd: StokesData) -> tuple[float, float, float, float, float]:
    """Frobenius norms of the five relations."""
    return tuple(fro(m) for m in relation_matrices(sd))


def _upper(X):
    n = X.shape[0]
    return np.block([[np.eye(n), X], [np.zeros((n, n)), np.eye(n)]])


def _lower(X):
    n = X.shape[0]
    return np.block([[np.eye(n), np.zeros((n, n))], [X, np.eye(n)]])


def sigma1_hat(n: int) -> np.ndarray:
    z = np.zeros((n, n))
    return np.block([[z, np.eye(n)], [np.eye(n), z]])


def square_root_factor(sd: StokesData) -> np.ndarray:
    """``G = U(A) L(B) U(C) diag(Q, Q) sigma1``; the monodromy product is ``sigma1 G^2 sigma1``."""
    D = np.kron(np.eye(2), sd.Q)
    return _upper(sd.A) @ _lower(sd.B) @ _upper(sd.C) @ D @ sigma1_hat(sd.n)


def monodromy_product(sd: StokesData) -> np.ndarray:
    """Eight-factor product ``L(A) U(B) L(C) D U(A) L(B) U(C) D`` (equal to ``M0^{-1}``)."""
    D = np.kron(np.eye(2), sd.Q)
    return (_lower(sd.A) @ _upper(sd.B) @ _lower(sd.C) @ D
            @ _upper(sd.A) @ _lower(sd.B) @ _upper(sd.C) @ D)


def scalar_cubic_residual(a, b, c, nu) -> complex:
    """``a + b + c + abc + 2i sin(pi nu)``."""
    a, b, c, nu = (complex(v) for v in (a, b, c, nu))
    return a + b + c + a * b * c + 2j * np.sin(np.pi * nu)


def solve_cubic_for_c(a, b, nu) -> complex:
    """The ``c`` completing a scalar solution ``a + b + c + abc = -2i sin(pi nu)``."""
    a, b, nu = complex(a), complex(b), complex(nu)
    denom = 1 + a * b
    if abs(denom) < 1e-12:
        raise InvalidInput("1 + ab = 0: c is undetermined")
    return (-2j * np.sin(np.pi * nu) - a - b) / denom


def commutative_point(rng: np.random.Generator, n: int, theta: complex, sign: int = 1,
                      scale: float = 1.0) -> StokesData:
    """Random diagonal Stokes data with ``Q = sign * I`` solving the scalar cubic entrywise.

    ``Q = I`` pairs with ``nu = -theta``, ``Q = -I`` with ``nu = theta``.
    """
    if sign not in (1, -1):
        raise InvalidInput("sign must be +1 or -1")
    nu = -theta if sign == 1 else theta
    a = scale * (rng.normal(size=n) + 1j * rng.normal(size=n))
    b = scale * (rng.normal(size=n) + 1j * rng.normal(size=n))
    c = np.array([solve_cubic_for_c(ai, bi, nu) for ai, bi in zip(a, b)])
    return StokesData(np.diag(a), np.diag(b), np.diag(c), sign * np.eye(n), theta)


def _near_integer(r: complex) -> int | None:
    k = round(r.real)
    if abs(r - k) <= INTEGER_TOL * max(1.0, abs(r)):
        return int(k)
    return None


def coupling_parity(g: complex, n: int) -> Parity:
    """Classify ``exp(i pi ig (1 - v^T v))`` as ``+1``, ``-1`` or neither.

    The exponent has eigenvalues ``ig`` (multiplicity ``n - 1``) and
    ``ig (1 - n)``; for ``n = 1`` only the latter, zero, occurs.
    """
    if n < 1:
        raise InvalidInput("n must be >= 1")
    r = 1j * complex(g)
    exps = [r * (1 - n)] + ([r] if n > 1 else [])
    ks = [_near_integer(e) for e in exps]
    if any(k is None for k in ks):
        return Parity.MIXED
    if all(k % 2 == 0 for k in ks):
        return Parity.QPLUS
    if all(k % 2 == 1 for k in ks):
        return Parity.QMINUS
    return Parity.MIXED


def orbit_q(g: complex, n: int) -> np.ndarray:
    """``Q = exp(i pi ig (1 - v^T v))`` via the spectral projectors of ``v^T v``."""
    r = 1j * complex(g)
    P = np.ones((n, n)) / n
    return np.exp(1j * np.pi * r) * (np.eye(n) - P) + np.exp(1j * np.pi * r * (1 - n)) * P


def q_parity(Q, tol: float = 1e-10) -> Parity:
    """Parity read off a given ``Q``."""
    Q = as_cmat(Q, name="Q")
    I = np.eye(Q.shape[0])
    if fro(Q - I) <= tol * np.sqrt(Q.shape[0]):
        return Parity.QPLUS
    if fro(Q + I) <= tol * np.sqrt(Q.shape[0]):
        return Parity.QMINUS
    return Parity.MIXED


def stokes_report(sd: StokesData) -> dict:
    return {
        "residuals": list(stokes_residuals(sd)),
        "parity": q_parity(sd.Q).value,
        "theta": ser.cpair(sd.theta),
        "n": sd.n,
    }


@dataclass(frozen=True)
class SearchResult:
    data: StokesData | None
    residual: float
    converged: bool
    restarts_used: int


def search_noncommutative(Q, theta: complex, seed: int, restarts: int = 50, max_iter: int = 200,
                          tol: float = 1e-12) -> SearchResult:
    """Look for ``A, B, C`` satisfying all five relations for the given ``Q``.

    Damped Gauss-Newton (Levenberg-Marquardt) on the stacked residual with
    random restarts. Non-convergence is reported in the result.
    """
    Q = as_cmat(Q, name="Q")
    n = Q.shape[0]
    rng = np.random.default_rng(seed)
    m = n * n

    def resid(z):
        sd = StokesData(z[:m].reshape(n, n), z[m:2 * m].reshape(n, n), z[2 * m:].reshape(n, n), Q, theta)
        return np.concatenate([r.ravel() for r in relation_matrices(sd)])

    def jac(z, h=1e-7):
        cols = []
        for k in range(z.size):
            e = np.zeros_like(z)
            e[k] = h
            cols.append((resid(z + e) - resid(z - e)) / (2 * h))
        return np.array(cols).T

    best_z, best_r = None, np.inf
    for attempt in range(restarts):
        z = rng.normal(size=3 * m) + 1j * rng.normal(size=3 * m)
        lam = 1e-3
        r = resid(z)
        nr = np.linalg.norm(r)
        for _ in range(max_iter):
            if nr <= tol:
                break
            J = jac(z)
            JH = J.conj().T
            H = JH @ J
            grad = JH @ r
            while True:
                step = np.linalg.solve(H + lam * np.diag(np.diag(H).real + 1e-12), -grad)
                z_new = z + step
                r_new = resid(z_new)
                n_new = np.linalg.norm(r_new)
                if n_new < nr:
                    z, r, nr = z_new, r_new, n_new
                    lam = max(lam / 3, 1e-12)
                    break
                lam *= 4
                if lam > 1e12:
                    break
            if lam > 1e12:
                break
        if nr < best_r:
            best_z, best_r = z, nr
        if nr <= tol:
            sd = StokesData(z[:m].reshape(n, n), z[m:2 * m].reshape(n, n), z[2 * m:].reshape(n, n), Q, theta)
            return SearchResult(sd, float(nr), True, attempt + 1)
    sd = None
    if best_z is not None:
        sd = StokesData(best_z[:m].reshape(n, n), best_z[m:2 * m].reshape(n, n),
                        best_z[2 * m:].reshape(n, n), Q, theta)
    return SearchResult(sd, float(best_r), False, restarts)
