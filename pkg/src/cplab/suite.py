"""Named numerical checks run by ``cplab verify``.

Every check takes a :class:`Setup` and returns a nonnegative number; the
caller compares it against a threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import canonical, elliptic, monodromy, reduction
from .flows import commutator_drift, integrate_matrix_flow
from .matcore import fro, sylvester_ad_solve
from .reduction import ParticleState, kks_normalize, orbit_embed, stabilizer_gauge
from .systems import (
    MatrixState,
    ParamSet,
    SystemId,
    gradient_consistency_residual,
    spectral_poles,
    zero_curvature_residual,
)

# Particle layouts: centre, radius of the circle the initial positions sit on,
# and the relative radius growth per particle beyond two (keeps larger
# ensembles away from close encounters inside the default window).
_LAYOUT = {
    SystemId.PVI: (2.0 + 0.5j, 0.8, 0.0),
    SystemId.PV: (1.3 + 0.3j, 0.5, 0.0),
    SystemId.PIII_D6: (1.3 + 0.3j, 0.5, 0.3),
    SystemId.PIII_D7: (1.3 + 0.3j, 0.5, 0.3),
    SystemId.PIII_D8: (1.3 + 0.3j, 0.5, 0.3),
    SystemId.PIV: (0.6 + 0.3j, 0.4, 0.3),
    SystemId.PII: (0.1 + 0.1j, 0.5, 0.0),
    SystemId.PI: (0.1 + 0.1j, 0.5, 0.0),
}


@dataclass(frozen=True)
class Setup:
    sys: SystemId
    par: ParamSet
    n: int
    g: complex
    t0: complex
    t1: complex
    tol: float
    seed: int
    x0: np.ndarray | None = None
    y0: np.ndarray | None = None

    def rng(self, salt: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])

    def particles(self) -> ParticleState:
        if self.x0 is not None:
            return ParticleState(self.x0, self.y0, self.t0, self.g)
        return default_particles(self.sys, self.n, self.g, self.t0, self.rng(1))


def default_particles(sys_id: SystemId, n: int, g: complex, t0: complex,
                      rng: np.random.Generator) -> ParticleState:
    """Positions on a circle (with a small random jitter), small momenta."""
    c, rho, grow = _LAYOUT[sys_id]
    rho *= 1.0 + grow * max(0, n - 2)
    ang = 2 * np.pi * np.arange(n) / n + 0.3
    x = c + (rho * np.exp(1j * ang) if n > 1 else 0.0) + 0.02 * (rng.normal(size=n) + 1j * rng.normal(size=n))
    y = 0.1 * (rng.normal(size=n) + 1j * rng.normal(size=n))
    return ParticleState(x, y, t0, g)


def orbit_state(ps: ParticleState, rng: np.random.Generator) -> MatrixState:
    X, Y = orbit_embed(ps)
    G = stabilizer_gauge(rng, ps.n)
    Gi = np.linalg.inv(G)
    return MatrixState(G @ X @ Gi, G @ Y @ Gi, ps.t)


def random_state(sys_id: SystemId, n: int, t: complex, rng: np.random.Generator) -> MatrixState:
    noise = lambda: 0.3 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))  # noqa: E731
    return MatrixState(np.eye(n) + noise(), noise(), t)


def regular_z(sys_id: SystemId, t: complex, rng: np.random.Generator, margin: float = 0.2) -> complex:
    while True:
        z = complex(rng.uniform(-2, 2), rng.uniform(-2, 2))
        if all(abs(z - pole) > margin for pole in spectral_poles(sys_id, t)):
            return z


def check_gradient_consistency(s: Setup) -> float:
    rng = s.rng(2)
    return max(gradient_consistency_residual(s.sys, s.par, random_state(s.sys, s.n, s.t0, rng))
               for _ in range(5))


def check_zero_curvature(s: Setup) -> float:
    rng = s.rng(3)
    st = orbit_state(s.particles(), rng)
    tr = integrate_matrix_flow(s.sys, s.par, st, s.t1, tol=s.tol, n_samples=3)
    worst = 0.0
    for sample in tr.samples:
        z = regular_z(s.sys, sample.t, rng)
        worst = max(worst, zero_curvature_residual(s.sys, s.par, sample, z))
    return worst


def check_commutator_drift(s: Setup) -> float:
    st = orbit_state(s.particles(), s.rng(4))
    return commutator_drift(integrate_matrix_flow(s.sys, s.par, st, s.t1, tol=s.tol))


def check_kks_reduction(s: Setup) -> float:
    ps = s.particles()
    X, Y = orbit_embed(ps)
    rng = s.rng(5)
    worst = 0.0
    order = np.lexsort((ps.x.imag, ps.x.real))
    x_sorted = ps.x[order]
    for _ in range(20):
        G = stabilizer_gauge(rng, s.n)
        Gi = np.linalg.inv(G)
        fr = kks_normalize(G @ X @ Gi, G @ Y @ Gi, s.g)
        worst = max(worst, float(np.abs(fr.x - x_sorted).max()), y_law_error(fr))
    return worst


def y_law_error(fr: reduction.OrbitFrame) -> float:
    x = fr.x
    n = x.size
    worst = 0.0
    for j in range(n):
        for k in range(n):
            if j != k:
                law = 1j * fr.g / (x[j] - x[k])
                worst = max(worst, abs(fr.Y[j, k] - law) / max(1.0, abs(law)))
    return worst


# Finite-difference checks refine the sample grid while the estimate keeps
# improving at close to the stencil order; the last value is reported.
REFINE_SAMPLES = (201, 801, 3201)
REFINE_FLOOR = 1e-7


def _refined(residual_at: Callable[[int], float]) -> float:
    prev = None
    for ns in REFINE_SAMPLES:
        v = residual_at(ns)
        if v < REFINE_FLOOR or (prev is not None and v > prev / 8):
            return v
        prev = v
    return v


def check_gauge_equation(s: Setup) -> float:
    st = orbit_state(s.particles(), s.rng(6))
    tol = min(s.tol, 1e-12)
    return _refined(lambda ns: reduction.gauge_equation_residual(
        integrate_matrix_flow(s.sys, s.par, st, s.t1, tol=tol, n_samples=ns), s.g))


def check_spectral_match(s: Setup) -> float:
    ps = s.particles()
    st = orbit_state(ps, s.rng(7))
    tr = integrate_matrix_flow(s.sys, s.par, st, s.t1, tol=s.tol, n_samples=41)
    pr = reduction.integrate_particle_flow(s.sys, s.par, ps, s.t1, tol=s.tol, n_samples=41)
    return reduction.spectral_match(tr, pr)


def check_f_row_law(s: Setup) -> float:
    ps = s.particles()
    fm = reduction.f_matrix(s.sys, s.par, ps.x, ps.t, s.g)
    F = fm.F
    off = F - np.diag(np.diag(F))
    return float(np.abs(np.diag(F) + off.sum(axis=1) - fm.K).max())


def check_symplectic(s: Setup) -> float:
    base = s.particles()
    rng = s.rng(8)
    worst = 0.0
    frame = canonical.PVIFrame.at_time(s.t0) if s.sys is SystemId.PVI else None
    for _ in range(10):
        jitter = 0.05 * (rng.normal(size=s.n) + 1j * rng.normal(size=s.n))
        ps = ParticleState(base.x + jitter, base.y + jitter[::-1], s.t0, s.g)
        worst = max(worst, canonical.symplectic_residual(s.sys, s.par, ps, frame=frame))
    return worst


def check_pushforward(s: Setup) -> float:
    ps = s.particles()
    tol = min(s.tol, 1e-12)
    return _refined(lambda ns: canonical.pushforward_dynamics_residual(
        s.sys, s.par, reduction.integrate_particle_flow(s.sys, s.par, ps, s.t1, tol=tol, n_samples=ns)))


def check_stokes_commutative(s: Setup) -> float:
    rng = s.rng(9)
    worst = 0.0
    for k in range(50):
        theta = complex(rng.normal(), 0.3 * rng.normal())
        sd = monodromy.commutative_point(rng, s.n, theta, sign=1 if k % 2 == 0 else -1)
        worst = max(worst, max(monodromy.stokes_residuals(sd)))
    return worst


def check_sylvester(s: Setup) -> float:
    rng = s.rng(10)
    worst = 0.0
    for _ in range(100):
        k = 0.2 * (rng.normal(size=(s.n, s.n)) + 1j * rng.normal(size=(s.n, s.n)))
        r = rng.normal(size=(s.n, s.n)) + 1j * rng.normal(size=(s.n, s.n))
        y = sylvester_ad_solve(k, r)
        worst = max(worst, fro(y + k @ y - y @ k - r) / fro(r))
    return worst


def check_elliptic(s: Setup) -> float:
    worst = 0.0
    for tau in (1j, 0.5 + 1j, 2j):
        ctx = elliptic.EllipticContext(tau)
        worst = max(worst, ctx.e_sum_error, elliptic.cubic_residual(ctx, 0.3 + 0.2j))
    return worst


CHECKS: dict[str, tuple[Callable[[Setup], float], float]] = {
    "commutator_drift": (check_commutator_drift, 1e-8),
    "elliptic": (check_elliptic, 1e-8),
    "f_row_law": (check_f_row_law, 1e-12),
    "gauge_equation": (check_gauge_equation, 1e-6),
    "gradient_consistency": (check_gradient_consistency, 1e-6),
    "kks_reduction": (check_kks_reduction, 1e-8),
    "pushforward": (check_pushforward, 1e-4),
    "spectral_match": (check_spectral_match, 1e-6),
    "stokes_commutative": (check_stokes_commutative, 1e-12),
    "sylvester": (check_sylvester, 1e-12),
    "symplectic": (check_symplectic, 1e-6),
    "zero_curvature": (check_zero_curvature, 1e-6),
}
