"""Reduction of the matrix flows to Calogero-type particle systems.

On the orbit ``[p, q] = ig(1 - v^T v)``, ``v = (1, ..., 1)``, a generic
diagonalizable ``q`` is brought to ``X = diag(x)`` by a gauge ``C`` that
also preserves ``v``; then ``Y = C^{-1} p C`` has off-diagonal entries
``ig / (x_j - x_k)`` and the eigenvalues ``x_j`` move under the reduced
Hamiltonian

    H = sum_j h(x_j, y_j, t) + g^2 sum_{j<k} w(x_j, x_k, t).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import serialize as ser
from .errors import (
    DegenerateScaling,
    DimensionMismatch,
    ForbiddenTime,
    GridMismatch,
    OffOrbit,
    ParticleCollision,
)
from .flows import Trajectory, eigen_tracks, match_to
from .matcore import SEP_MIN, eig_diagonalize, fro, min_separation
from .ode import check_path, integrate_segment, uniform_grid
from .systems import FORBIDDEN_TIMES, SINGULAR_EPS, ParamSet, SystemId, raw_fields

ORBIT_TOL = 1e-8
SCALING_FLOOR = 1e-12


@dataclass(frozen=True)
class ParticleState:
    x: np.ndarray
    y: np.ndarray
    t: complex
    g: complex

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=complex)).ravel()
        y = np.atleast_1d(np.asarray(self.y, dtype=complex)).ravel()
        if x.size == 0 or x.shape != y.shape:
            raise DimensionMismatch(f"x and y must be non-empty and equal length, got {x.size}, {y.size}")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ParticleCollision("non-finite particle coordinates")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "t", complex(self.t))
        object.__setattr__(self, "g", complex(self.g))

    @property
    def n(self) -> int:
        return self.x.size

    def to_json(self) -> dict:
        return {
            "t_re": self.t.real,
            "t_im": self.t.imag,
            "x": [ser.cpair(v) for v in self.x],
            "y": [ser.cpair(v) for v in self.y],
        }


@dataclass(frozen=True)
class OrbitFrame:
    C: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    g: complex

    @property
    def x(self) -> np.ndarray:
        return np.diag(self.X).copy()

    def to_json(self) -> dict:
        return {
            "C": ser.matrix_to_json(self.C),
            "X": ser.matrix_to_json(self.X),
            "Y": ser.matrix_to_json(self.Y),
            "g": ser.cpair(self.g),
        }


@dataclass(frozen=True)
class FMatrix:
    F: np.ndarray
    K: complex


def orbit_matrix(n: int, g: complex) -> np.ndarray:
    """``ig (1 - v^T v)``."""
    return 1j * complex(g) * (np.eye(n) - np.ones((n, n)))


def _check_distinct(x: np.ndarray, sep_min: float = SEP_MIN) -> None:
    sep = min_separation(x)
    if sep < sep_min:
        raise ParticleCollision(f"particles collide: min separation {sep:.3e}")


def orbit_embed(ps: ParticleState, sep_min: float = SEP_MIN) -> tuple[np.ndarray, np.ndarray]:
    """``X = diag(x)`` and ``Y`` with diagonal ``y``, off-diagonal ``ig/(x_j - x_k)``."""
    _check_distinct(ps.x, sep_min)
    d = ps.x[:, None] - ps.x[None, :]
    np.fill_diagonal(d, 1.0)
    Y = 1j * ps.g / d
    np.fill_diagonal(Y, ps.y)
    return np.diag(ps.x), Y


def stabilizer_gauge(rng: np.random.Generator, n: int, scale: float = 0.5) -> np.ndarray:
    """Random ``G`` with ``G v^T = v^T`` and ``v G = v``; conjugation by it keeps the orbit."""
    m = scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    m = m - m.mean(axis=0, keepdims=True) - m.mean(axis=1, keepdims=True) + m.mean()
    return np.eye(n) + m


def kks_normalize(q, p, g: complex, sep_min: float = SEP_MIN) -> OrbitFrame:
    """Gauge ``(q, p)`` on the orbit into the Calogero frame ``(X, Y)``.

    With ``q = C0 X C0^{-1}`` and ``a`` the row sums of ``C0^{-1}``, the
    gauge ``C = C0 diag(a)`` keeps ``C^{-1} v^T = v^T``; ``C`` is finally
    rescaled to unit determinant, which changes neither X nor Y.
    """
    q = np.asarray(q, dtype=complex)
    p = np.asarray(p, dtype=complex)
    n = q.shape[0]
    g = complex(g)
    target = orbit_matrix(n, g)
    miss = fro(p @ q - q @ p - target)
    if miss > ORBIT_TOL * max(1.0, fro(target)):
        raise OffOrbit(f"[p, q] misses ig(1 - v^T v) by {miss:.3e}")
    dec = eig_diagonalize(q, sep_min=sep_min)
    C0 = dec.V
    a = np.linalg.solve(C0, np.ones(n))
    if np.abs(a).min() < SCALING_FLOOR * max(1.0, np.abs(a).max()):
        raise DegenerateScaling(f"gauge scaling vanishes: min |a_j| = {np.abs(a).min():.3e}")
    C = C0 * a
    C = C / np.linalg.det(C) ** (1.0 / n)
    Cinv = np.linalg.inv(C)
    X = np.diag(dec.lam)
    Y = Cinv @ p @ C
    return OrbitFrame(C=C, X=X, Y=Y, g=g)


# ---------------------------------------------------------------------------
# F matrix

def _f_offdiag(sys_id: SystemId, xi, xj, t, g):
    d2 = (xi - xj) ** 2
    ig = 1j * g
    if sys_id in (SystemId.PII, SystemId.PI):
        return -ig / d2
    if sys_id is SystemId.PIV:
        return -ig * (xi + xj) / d2
    if sys_id is SystemId.PIII_D6:
        return -ig / t * (xi**2 + xj**2) / d2
    if sys_id in (SystemId.PIII_D7, SystemId.PIII_D8):
        return -2 * ig / t * xi * xj / d2
    if sys_id is SystemId.PV:
        return -ig / t * (xi**2 + xj**2 - xi - xj) / d2
    c = (t - xi) * xi * (xi - 1) + (t - xj) * xj * (xj - 1)
    return ig / (t * (t - 1)) * (c / d2 + xi + xj - 1)


def _check_time(sys_id: SystemId, t: complex) -> None:
    for ft in FORBIDDEN_TIMES[sys_id]:
        if abs(t - ft) < SINGULAR_EPS:
            raise ForbiddenTime(f"{sys_id.value} is singular at t = {ft}")


def f_matrix(sys_id, par: ParamSet, x, t: complex, g: complex) -> FMatrix:
    """Gauge-correction matrix ``F`` with the row law ``F_jj = -sum_{k!=j} F_jk + K``."""
    sys_id = SystemId.parse(sys_id)
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    t = complex(t)
    _check_time(sys_id, t)
    _check_distinct(x)
    n = x.size
    F = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            if i != j:
                F[i, j] = _f_offdiag(sys_id, x[i], x[j], t, complex(g))
    off = F.sum()
    K = off / n
    np.fill_diagonal(F, K - F.sum(axis=1))
    return FMatrix(F=F, K=complex(K))


# ---------------------------------------------------------------------------
# reduced Hamiltonians: h(x, y, t) with h_x, h_y and pair weights w(a, b, t), w_a

@dataclass(frozen=True)
class _Reduced:
    h: Callable
    h_x: Callable
    h_y: Callable
    w: Callable
    w_a: Callable


def _pvi_L(P, x, t):
    return P["thetat"] * x * (x - 1) + P["theta1"] * x * (x - t) + P["theta0"] * (x - 1) * (x - t)


def _pvi_dL(P, x, t):
    return P["thetat"] * (2 * x - 1) + P["theta1"] * (2 * x - t) + P["theta0"] * (2 * x - 1 - t)


def _cubic(x, t):
    return x * (x - 1) * (x - t)


def _dcubic(x, t):
    return 3 * x**2 - 2 * (1 + t) * x + t


def _pvi_const(P):
    return 0.25 * (P["theta"] ** 2 - P["k"] ** 2)


def _inv_sq(a, b, t):
    return 1.0 / (a - b) ** 2


def _inv_sq_a(a, b, t):
    return -2.0 / (a - b) ** 3


def _prod(a, b, t):
    return 2.0 / t * a * b / (a - b) ** 2


def _prod_a(a, b, t):
    return -2.0 / t * b * (a + b) / (a - b) ** 3


_REDUCED = {
    SystemId.PII: _Reduced(
        h=lambda P, x, y, t: 0.5 * y**2 - 0.5 * (x**2 + 0.5 * t) ** 2 - P["theta"] * x,
        h_x=lambda P, x, y, t: -2 * x * (x**2 + 0.5 * t) - P["theta"],
        h_y=lambda P, x, y, t: y,
        w=_inv_sq, w_a=_inv_sq_a,
    ),
    SystemId.PI: _Reduced(
        h=lambda P, x, y, t: 0.5 * y**2 - 0.5 * x**3 - 0.25 * t * x,
        h_x=lambda P, x, y, t: -1.5 * x**2 - 0.25 * t,
        h_y=lambda P, x, y, t: y,
        w=_inv_sq, w_a=_inv_sq_a,
    ),
    SystemId.PIV: _Reduced(
        h=lambda P, x, y, t: x * y**2 - (x**2 + t * x - P["theta0"]) * y - (P["theta0"] + P["theta1"]) * x,
        h_x=lambda P, x, y, t: y**2 - (2 * x + t) * y - (P["theta0"] + P["theta1"]),
        h_y=lambda P, x, y, t: 2 * x * y - (x**2 + t * x - P["theta0"]),
        w=lambda a, b, t: (a + b) / (a - b) ** 2,
        w_a=lambda a, b, t: (-a - 3 * b) / (a - b) ** 3,
    ),
    SystemId.PIII_D6: _Reduced(
        h=lambda P, x, y, t: (x**2 * y**2 + (-(x**2) + (P["theta1"] - P["theta0"]) * x + t) * y - P["theta1"] * x) / t,
        h_x=lambda P, x, y, t: (2 * x * y**2 + (-2 * x + P["theta1"] - P["theta0"]) * y - P["theta1"]) / t,
        h_y=lambda P, x, y, t: (2 * x**2 * y - x**2 + (P["theta1"] - P["theta0"]) * x + t) / t,
        w=_prod, w_a=_prod_a,
    ),
    SystemId.PIII_D7: _Reduced(
        h=lambda P, x, y, t: (x**2 * y**2 + (t - P["theta"] * x) * y + x) / t,
        h_x=lambda P, x, y, t: (2 * x * y**2 - P["theta"] * y + 1) / t,
        h_y=lambda P, x, y, t: (2 * x**2 * y + t - P["theta"] * x) / t,
        w=_prod, w_a=_prod_a,
    ),
    SystemId.PIII_D8: _Reduced(
        h=lambda P, x, y, t: (x**2 * y**2 + x * y - x - t / x) / t,
        h_x=lambda P, x, y, t: (2 * x * y**2 + y - 1 + t / x**2) / t,
        h_y=lambda P, x, y, t: (2 * x**2 * y + x) / t,
        w=_prod, w_a=_prod_a,
    ),
    SystemId.PV: _Reduced(
        h=lambda P, x, y, t: (x**2 - x) / t * y**2
        + (x**2 + ((P["theta0"] - P["theta2"] - t) * x + P["theta2"]) / t) * y
        + (P["theta0"] + P["theta1"]) * x,
        h_x=lambda P, x, y, t: (2 * x - 1) / t * y**2
        + (2 * x + (P["theta0"] - P["theta2"] - t) / t) * y
        + (P["theta0"] + P["theta1"]),
        h_y=lambda P, x, y, t: 2 * (x**2 - x) / t * y + x**2 + ((P["theta0"] - P["theta2"] - t) * x + P["theta2"]) / t,
        w=lambda a, b, t: (2 * a * b - a - b) / (t * (a - b) ** 2),
        w_a=lambda a, b, t: (-2 * a * b - 2 * b**2 + a + 3 * b) / (t * (a - b) ** 3),
    ),
    SystemId.PVI: _Reduced(
        h=lambda P, x, y, t: (_cubic(x, t) * y**2 - _pvi_L(P, x, t) * y + _pvi_const(P) * x) / (t * (t - 1)),
        h_x=lambda P, x, y, t: (_dcubic(x, t) * y**2 - _pvi_dL(P, x, t) * y + _pvi_const(P)) / (t * (t - 1)),
        h_y=lambda P, x, y, t: (2 * _cubic(x, t) * y - _pvi_L(P, x, t)) / (t * (t - 1)),
        w=lambda a, b, t: ((_cubic(a, t) + _cubic(b, t)) / (a - b) ** 2 - a - b) / (t * (t - 1)),
        w_a=lambda a, b, t: (
            (_dcubic(a, t) * (a - b) - 2 * (_cubic(a, t) + _cubic(b, t))) / (a - b) ** 3 - 1
        ) / (t * (t - 1)),
    ),
}

# Particles must stay off these points, where the reduced Hamiltonian or
# the associated matrix flow degenerates.
def _particle_poles(sys_id: SystemId, t: complex) -> tuple[complex, ...]:
    if sys_id is SystemId.PVI:
        return (0.0, 1.0, t)
    if sys_id in (SystemId.PV, SystemId.PIII_D6, SystemId.PIII_D7, SystemId.PIII_D8):
        return (0.0,)
    return ()


def validate_particles(sys_id: SystemId, ps: ParticleState, sep_min: float = SEP_MIN) -> None:
    _check_time(sys_id, ps.t)
    _check_distinct(ps.x, sep_min)
    for pole in _particle_poles(sys_id, ps.t):
        d = np.abs(ps.x - pole).min()
        if d < sep_min:
            raise ParticleCollision(f"a particle sits at the singular point {pole} (distance {d:.2e})")


def reduced_hamiltonian(sys_id, par: ParamSet, ps: ParticleState) -> complex:
    """Multi-particle Hamiltonian, prefactors ``t`` or ``t(t-1)`` divided out."""
    sys_id = SystemId.parse(sys_id)
    validate_particles(sys_id, ps)
    R = _REDUCED[sys_id]
    x, y, t = ps.x, ps.y, ps.t
    total = complex(np.sum(R.h(par, x, y, t)))
    n = ps.n
    for j in range(n):
        for k in range(j + 1, n):
            total += ps.g**2 * R.w(x[j], x[k], t)
    return total


def trace_offset(sys_id, n: int, g: complex, t: complex) -> complex:
    """``Tr H(X, Y) - H_reduced``: a phase-space constant, nonzero for D6, PV and PVI."""
    sys_id = SystemId.parse(sys_id)
    pairs = n * (n - 1) / 2
    if sys_id in (SystemId.PIII_D6, SystemId.PV):
        return g**2 * pairs / t
    if sys_id is SystemId.PVI:
        return g**2 * pairs / (t * (t - 1))
    return 0.0


def _particle_rhs_arrays(R: _Reduced, par, x, y, t, g):
    dx = R.h_y(par, x, y, t) * np.ones_like(x)
    dy = -R.h_x(par, x, y, t) * np.ones_like(x)
    if x.size > 1:
        a = x[:, None]
        b = x[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            wa = R.w_a(a, b, t) * np.ones((x.size, x.size))
        np.fill_diagonal(wa, 0.0)
        dy = dy - g**2 * wa.sum(axis=1)
    return dx, dy


def particle_flow_fields(sys_id, par: ParamSet, ps: ParticleState) -> tuple[np.ndarray, np.ndarray]:
    """``xdot_i = dH/dy_i``, ``ydot_i = -dH/dx_i`` from analytic derivatives."""
    sys_id = SystemId.parse(sys_id)
    validate_particles(sys_id, ps)
    return _particle_rhs_arrays(_REDUCED[sys_id], par, ps.x, ps.y, ps.t, ps.g)


def integrate_particle_flow(
    sys_id,
    par: ParamSet,
    ps0: ParticleState,
    t1: complex,
    tol: float = 1e-10,
    max_steps: int = 100_000,
    n_samples: int = 21,
    sep_min: float = SEP_MIN,
) -> list[ParticleState]:
    sys_id = SystemId.parse(sys_id)
    validate_particles(sys_id, ps0, sep_min)
    t1 = complex(t1)
    check_path(ps0.t, t1, FORBIDDEN_TIMES[sys_id])
    R = _REDUCED[sys_id]
    n, g = ps0.n, ps0.g

    def rhs(t, u):
        dx, dy = _particle_rhs_arrays(R, par, u[:n], u[n:], t, g)
        return np.concatenate([dx, dy])

    def check(t, u):
        sep = min_separation(u[:n])
        if sep < sep_min:
            raise ParticleCollision(f"particles collide near t = {t} (separation {sep:.2e})")

    times, us = integrate_segment(
        rhs, np.concatenate([ps0.x, ps0.y]), ps0.t, t1, tol,
        max_steps=max_steps, grid=uniform_grid(n_samples), check=check,
    )
    return [ParticleState(u[:n], u[n:], t, g) for t, u in zip(times, us)]


def spectral_match(tr: Trajectory, pr: list[ParticleState]) -> float:
    """Largest distance between eig(q(t)) and the particle positions.

    Eigenvalues are paired with particles by an optimal assignment at the
    first sample and by continuity afterwards.
    """
    if len(tr.samples) != len(pr):
        raise GridMismatch(f"{len(tr.samples)} matrix samples vs {len(pr)} particle samples")
    if len(pr) == 0:
        return 0.0
    t_err = max(abs(s.t - ps.t) for s, ps in zip(tr.samples, pr))
    if t_err > 1e-12 * max(1.0, max(abs(ps.t) for ps in pr)):
        raise GridMismatch(f"time grids differ by up to {t_err:.3e}")
    worst = 0.0
    prev_lam = None
    for s, ps in zip(tr.samples, pr):
        lam = np.linalg.eigvals(s.q)
        # continue the previous labelling, then compare labels with particles
        lam = match_to(ps.x if prev_lam is None else prev_lam, lam)
        prev_lam = lam
        worst = max(worst, float(np.abs(lam - ps.x).max()))
    return worst


def central_derivative(values: np.ndarray, h: complex) -> np.ndarray:
    """Sixth-order central derivative at interior points (drops 3 at each end)."""
    v = values
    return (-v[:-6] + 9 * v[1:-5] - 45 * v[2:-4] + 45 * v[4:-2] - 9 * v[5:-1] + v[6:]) / (60 * h)


def gauge_equation_residual(tr: Trajectory, g: complex) -> float:
    """``max |Xdot - Acal(X, Y, t) - [X, F]|`` along a matrix trajectory on the orbit.

    ``Xdot`` comes from sixth-order central differences of the eigenvalue
    tracks, so the trajectory needs a uniform grid of at least 7 samples.
    """
    if len(tr.samples) < 7:
        raise GridMismatch("need at least 7 samples for the central differences")
    ts = tr.times
    h = ts[1] - ts[0]
    if np.abs(np.diff(ts) - h).max() > 1e-9 * max(1.0, abs(h)):
        raise GridMismatch("trajectory grid is not uniform")
    tracks = eigen_tracks(tr)
    xdot = central_derivative(tracks, h)
    worst = 0.0
    for k, s in enumerate(tr.samples[3:-3]):
        frame = kks_normalize(s.q, s.p, g)
        # frame eigenvalues are (Re, Im)-sorted; align them to the tracks
        order = [int(np.argmin(np.abs(frame.x - v))) for v in tracks[k + 3]]
        X = frame.X[np.ix_(order, order)]
        Y = frame.Y[np.ix_(order, order)]
        x = np.diag(X)
        A, _ = raw_fields(tr.sys, tr.par, X, Y, s.t)
        F = f_matrix(tr.sys, tr.par, x, s.t, g).F
        resid = np.diag(xdot[k]) - A - (X @ F - F @ X)
        worst = max(worst, fro(resid) / max(1.0, fro(A)))
    return worst
