"""Canonical changes of variables to physical coordinates.

Every map acts particle by particle, ``(x_j, y_j, t) -> (q_j, p_j, T)``,
and preserves ``dy ^ dx`` at fixed time. Multivalued functions use their
principal branches.

Physical Hamiltonians are used with their own normalizations (``p^2``
rather than ``p^2/2`` for PIV, PV and PIII); PI and PII are already in
physical form and map by the identity.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import elliptic as ell
from .errors import BranchDomain, GridMismatch
from .reduction import ParticleState, central_derivative, reduced_hamiltonian
from .systems import ParamSet, SystemId

BRANCH_EPS = 1e-12
GRAD_STEP = 1e-6


def _on_negative_axis(z: complex) -> bool:
    return z.real <= 0 and abs(z.imag) <= BRANCH_EPS * max(1.0, abs(z))


def _principal_arg(name: str, z: complex) -> None:
    if abs(z) < BRANCH_EPS:
        raise BranchDomain(f"{name} = {z} is at the branch point 0")
    if _on_negative_axis(z):
        raise BranchDomain(f"{name} = {z} lies on the principal branch cut")


@dataclass(frozen=True)
class PhysicalPoint:
    q: np.ndarray
    p: np.ndarray
    T: complex


# ---------------------------------------------------------------------------
# PVI context: the lattice parameter tau is tied to t by t = (e3 - e1)/(e2 - e1)

@dataclass(frozen=True)
class PVIFrame:
    ctx: ell.EllipticContext
    t: complex

    @classmethod
    def at_time(cls, t: complex, tau_seed: complex | None = None, N: int = ell.DEFAULT_N) -> "PVIFrame":
        tau = ell.tau_from_time(t, seed=tau_seed, N=N)
        return cls(ell.EllipticContext(tau, N), complex(t))

    @property
    def tau(self) -> complex:
        return self.ctx.tau


def pvi_couplings(par: ParamSet, n: int, g: complex, *, tabulated: bool = False
                  ) -> tuple[complex, complex, complex, complex]:
    """``(g0, g1, g2, g3)`` of the elliptic potential.

    ``tabulated=True`` gives the tabulated block
    ``g0 = (k^2 - 60 g^2 (n-1))/2, g3 = (thetat^2 + 1)/2``. The default gives
    the constants for which the mapped flow obeys Hamilton's equations:
    ``g0 = k^2/2`` and ``g3 = (thetat + 1)^2 / 2`` (the pair interaction then
    carries :func:`pvi_pair_coefficient`).
    """
    k, t0, t1, tt = par["k"], par["theta0"], par["theta1"], par["thetat"]
    g = complex(g)
    if tabulated:
        return (0.5 * (k**2 - 60 * g**2 * (n - 1)), 0.5 * t0**2, 0.5 * t1**2, 0.5 * (tt**2 + 1))
    return (0.5 * k**2, 0.5 * t0**2, 0.5 * t1**2, 0.5 * (tt + 1) ** 2)


def pvi_pair_coefficient(g: complex, *, tabulated: bool = False) -> complex:
    """Coefficient of ``wp(q_j - q_k) + wp(q_j + q_k)``: tabulated ``(4g)^2``, consistent ``g^2``."""
    g = complex(g)
    return (4 * g) ** 2 if tabulated else g**2


def _pvi_shift(par: ParamSet, frame: PVIFrame, u: complex) -> tuple[complex, complex, complex]:
    """``(wp(u), wp'(u), R(u))`` where ``y = (e2 - e1) p / wp' + R``."""
    ctx = frame.ctx
    e1, e2, e3 = ctx.e
    f, df = ell.wp_jet(ctx, u)
    ftau = ell.reduced_wp_dtau(ctx.tau, u, ctx.N)
    R = (2j * np.pi * (e2 - e1) ** 2 / df**2 * ftau
         + 0.5 * (e2 - e1) * (par["theta0"] / (f - e1) + par["theta1"] / (f - e2) + par["thetat"] / (f - e3)))
    return f, df, R


def _pvi_forward(par, x, y, frame: PVIFrame, seed=None):
    e1, e2, _ = frame.ctx.e
    u = ell.wp_inverse(frame.ctx, e1 + (e2 - e1) * x, seed=seed)
    f, df, R = _pvi_shift(par, frame, u)
    return u, (y - R) * df / (e2 - e1)


def _pvi_inverse(par, q, p, frame: PVIFrame):
    e1, e2, _ = frame.ctx.e
    f, df, R = _pvi_shift(par, frame, q)
    return (f - e1) / (e2 - e1), (e2 - e1) / df * p + R


# ---------------------------------------------------------------------------
# coordinatewise maps for the rational systems

def _piv_forward(par, x, y, t):
    _principal_arg("x", x)
    s = cmath.sqrt(x)
    return 2 * s, s * y - 0.5 * s * (x + t - par["theta0"] / x)


def _piv_inverse(par, q, p, t):
    s = q / 2
    if abs(s) < BRANCH_EPS:
        raise BranchDomain("q = 0 maps to the branch point x = 0")
    x = s * s
    return x, (p + 0.5 * s * (x + t - par["theta0"] / x)) / s


def _log_forward(shift: Callable):
    def forward(par, x, y, t):
        _principal_arg("x", x)
        return cmath.log(x), x * y + shift(par, x, t)
    return forward


def _log_inverse(shift: Callable):
    def inverse(par, q, p, t):
        x = cmath.exp(q)
        return x, (p - shift(par, x, t)) / x
    return inverse


def _d6_shift(par, x, t):
    return -x / 2 + t / (2 * x) + 0.5 * (par["theta1"] - par["theta0"])


def _d7_shift(par, x, t):
    return t / (2 * x) - par["theta"] / 2


def _d8_shift(par, x, t):
    return 0.5


def pv_intermediate(par: ParamSet, x: complex, y: complex) -> tuple[complex, complex]:
    """First step of the PV map: ``x = Q/(Q - 1)`` with the conjugate momentum ``P``."""
    x, y = complex(x), complex(y)
    if abs(x) < BRANCH_EPS or abs(x - 1) < BRANCH_EPS:
        raise BranchDomain(f"x = {x} is a singular point of the PV map")
    Q = x / (x - 1)
    P = -(y + (par["theta0"] + par["theta1"]) * (Q - 1)) / (Q - 1) ** 2
    return Q, P


def _pv_forward(par, x, y, t):
    Q, P = pv_intermediate(par, x, y)
    _principal_arg("Q", Q)
    rQ = cmath.sqrt(Q)
    w = -1 / rQ
    if abs(w.imag) <= BRANCH_EPS and abs(w.real) >= 1:
        raise BranchDomain(f"-1/sqrt(Q) = {w} lies on the atanh branch cut")
    q = 2 * cmath.atanh(w)
    a = par["theta0"] + 2 * par["theta1"] + par["theta2"]
    p = (P - 0.5 * (par["theta2"] / Q - a / (Q - 1) + t / (Q - 1) ** 2)) * rQ * (Q - 1)
    return q, p


def _pv_inverse(par, q, p, t):
    rQ = -1 / cmath.tanh(q / 2)
    Q = rQ * rQ
    a = par["theta0"] + 2 * par["theta1"] + par["theta2"]
    P = p / (rQ * (Q - 1)) + 0.5 * (par["theta2"] / Q - a / (Q - 1) + t / (Q - 1) ** 2)
    x = Q / (Q - 1)
    y = -((Q - 1) ** 2) * P - (par["theta0"] + par["theta1"]) * (Q - 1)
    return x, y


def _identity(par, a, b, t):
    return a, b


_COORD = {
    SystemId.PIV: (_piv_forward, _piv_inverse),
    SystemId.PIII_D6: (_log_forward(_d6_shift), _log_inverse(_d6_shift)),
    SystemId.PIII_D7: (_log_forward(_d7_shift), _log_inverse(_d7_shift)),
    SystemId.PIII_D8: (_log_forward(_d8_shift), _log_inverse(_d8_shift)),
    SystemId.PV: (_pv_forward, _pv_inverse),
    SystemId.PII: (_identity, _identity),
    SystemId.PI: (_identity, _identity),
}


def time_map(sys_id, t: complex, frame: PVIFrame | None = None) -> complex:
    """Physical time: ``ln t`` for PV and PIII, ``tau`` for PVI, ``t`` otherwise."""
    sys_id = SystemId.parse(sys_id)
    t = complex(t)
    if sys_id in (SystemId.PV, SystemId.PIII_D6, SystemId.PIII_D7, SystemId.PIII_D8):
        _principal_arg("t", t)
        return cmath.log(t)
    if sys_id is SystemId.PVI:
        return (frame or PVIFrame.at_time(t)).tau
    return t


def map_to_physical(sys_id, par: ParamSet, ps: ParticleState, frame: PVIFrame | None = None,
                    seeds: Sequence[complex] | None = None) -> PhysicalPoint:
    """Apply the canonical map particle by particle.

    For PVI, ``frame`` fixes the lattice (computed from ``ps.t`` if absent)
    and ``seeds`` optionally start the Newton inversion of ``wp``.
    """
    sys_id = SystemId.parse(sys_id)
    q = np.empty(ps.n, dtype=complex)
    p = np.empty(ps.n, dtype=complex)
    if sys_id is SystemId.PVI:
        frame = frame or PVIFrame.at_time(ps.t)
        for j in range(ps.n):
            seed = None if seeds is None else seeds[j]
            q[j], p[j] = _pvi_forward(par, ps.x[j], ps.y[j], frame, seed)
        return PhysicalPoint(q, p, frame.tau)
    fwd = _COORD[sys_id][0]
    for j in range(ps.n):
        q[j], p[j] = fwd(par, ps.x[j], ps.y[j], ps.t)
    return PhysicalPoint(q, p, time_map(sys_id, ps.t))


def map_from_physical(sys_id, par: ParamSet, pt: PhysicalPoint, t: complex, g: complex,
                      frame: PVIFrame | None = None) -> ParticleState:
    """Local inverse of :func:`map_to_physical` at reduced time ``t``."""
    sys_id = SystemId.parse(sys_id)
    x = np.empty(pt.q.size, dtype=complex)
    y = np.empty(pt.q.size, dtype=complex)
    for j in range(pt.q.size):
        if sys_id is SystemId.PVI:
            x[j], y[j] = _pvi_inverse(par, pt.q[j], pt.p[j], frame or PVIFrame.at_time(t))
        else:
            x[j], y[j] = _COORD[sys_id][1](par, pt.q[j], pt.p[j], complex(t))
    return ParticleState(x, y, t, g)


def _coord_forward(sys_id, par, x, y, t, frame, seed):
    if sys_id is SystemId.PVI:
        return _pvi_forward(par, x, y, frame, seed)
    return _COORD[sys_id][0](par, x, y, t)


def symplectic_residual(sys_id, par: ParamSet, ps: ParticleState, h: float = 1e-6,
                        frame: PVIFrame | None = None) -> float:
    """``max_j |det d(q_j, p_j)/d(x_j, y_j) - 1|`` by central differences at fixed t."""
    sys_id = SystemId.parse(sys_id)
    if sys_id in (SystemId.PI, SystemId.PII):
        return 0.0  # identity map, unit Jacobian exactly
    if sys_id is SystemId.PVI:
        frame = frame or PVIFrame.at_time(ps.t)
    worst = 0.0
    for j in range(ps.n):
        x, y = ps.x[j], ps.y[j]
        base = _coord_forward(sys_id, par, x, y, ps.t, frame, None)
        seed = base[0]

        def f(dx, dy):
            return np.array(_coord_forward(sys_id, par, x + dx, y + dy, ps.t, frame, seed))

        jx = (f(h, 0) - f(-h, 0)) / (2 * h)
        jy = (f(0, h) - f(0, -h)) / (2 * h)
        det = jx[0] * jy[1] - jx[1] * jy[0]
        worst = max(worst, abs(det - 1))
    return float(worst)


# ---------------------------------------------------------------------------
# physical Hamiltonians H~(q, p, T)

def _pair_sum(q, fn):
    total = 0.0j
    for j in range(q.size):
        for k in range(j + 1, q.size):
            total += fn(q[j], q[k])
    return total


def _sinh_m2(z):
    return 1 / np.sinh(z) ** 2


def physical_hamiltonian(sys_id, par: ParamSet, q, p, T: complex, g: complex,
                         frame: PVIFrame | None = None) -> complex:
    """Physical Hamiltonian in the mapped coordinates, as a function of ``T``.

    For PVI the returned value is ``H~`` itself (the elliptic potential is
    divided by ``2 pi i``) on the lattice of ``frame``.
    """
    sys_id = SystemId.parse(sys_id)
    q = np.asarray(q, dtype=complex)
    p = np.asarray(p, dtype=complex)
    g = complex(g)
    T = complex(T)
    if sys_id is SystemId.PIV:
        t0, t1 = par["theta0"], par["theta1"]
        single = (p**2 - q**6 / 256 - T * q**4 / 32
                  - 0.25 * (t1 + t0 / 2 + T**2 / 4 - 0.5) * q**2 - t0**2 / q**2)
        pair = 2 * g**2 * _pair_sum(q, lambda a, b: 1 / (a - b) ** 2 + 1 / (a + b) ** 2)
        return complex(single.sum() + pair)
    if sys_id in (SystemId.PIII_D6, SystemId.PIII_D7, SystemId.PIII_D8):
        eT = np.exp(T)
        if sys_id is SystemId.PIII_D6:
            t0, t1 = par["theta0"], par["theta1"]
            single = (p**2 - 0.25 * (np.exp(q) - eT * np.exp(-q)) ** 2 - 0.5 * (t1 + t0) * np.exp(q)
                      + 0.5 * (t0 - t1 + 1) * eT * np.exp(-q))
        elif sys_id is SystemId.PIII_D7:
            th = par["theta"]
            single = p**2 + np.exp(q) + 0.5 * (th + 1) * eT * np.exp(-q) - 0.25 * np.exp(2 * T - 2 * q)
        else:
            single = p**2 - np.exp(q) - eT * np.exp(-q)
        pair = 0.5 * g**2 * _pair_sum(q, lambda a, b: _sinh_m2((a - b) / 2))
        return complex(single.sum() + pair)
    if sys_id is SystemId.PV:
        t0, t1, t2 = par["theta0"], par["theta1"], par["theta2"]
        eT = np.exp(T)
        single = (p**2 - eT**2 / 32 * np.cosh(2 * q) + eT * (t0 + 2 * t1 + t2 - 1) / 4 * np.cosh(q)
                  - t0**2 / 4 * _sinh_m2(q / 2) + t2**2 / 4 / np.cosh(q / 2) ** 2)
        pair = 0.5 * g**2 * _pair_sum(q, lambda a, b: _sinh_m2((a - b) / 2) + _sinh_m2((a + b) / 2))
        return complex(single.sum() + pair)
    if sys_id is SystemId.PVI:
        if frame is None or abs(frame.tau - T) > 1e-12:
            frame = PVIFrame(ell.EllipticContext(T, frame.ctx.N if frame else ell.DEFAULT_N), ell.pvi_time(T))
        ctx = frame.ctx
        gs = pvi_couplings(par, q.size, g)
        total = 0.0j
        for qj, pj in zip(q, p):
            total += pj**2 / 2 - sum(gl * ell.wp(ctx, qj + w) for gl, w in zip(gs, ctx.omegas))
        total += pvi_pair_coefficient(g) * _pair_sum(q, lambda a, b: ell.wp(ctx, a - b) + ell.wp(ctx, a + b))
        return complex(total / (2j * np.pi))
    # PI and PII: the reduced Hamiltonian itself
    return reduced_hamiltonian(sys_id, par, ParticleState(q, p, T, g))


def physical_fields(sys_id, par: ParamSet, q, p, T, g, h: float = GRAD_STEP,
                    frame: PVIFrame | None = None) -> tuple[np.ndarray, np.ndarray]:
    """``(dH~/dp, -dH~/dq)`` by central differences (H~ is holomorphic)."""
    q = np.asarray(q, dtype=complex)
    p = np.asarray(p, dtype=complex)
    dq = np.empty_like(q)
    dp = np.empty_like(p)
    for j in range(q.size):
        e = np.zeros_like(q)
        e[j] = h
        dq[j] = (physical_hamiltonian(sys_id, par, q, p + e, T, g, frame)
                 - physical_hamiltonian(sys_id, par, q, p - e, T, g, frame)) / (2 * h)
        dp[j] = -(physical_hamiltonian(sys_id, par, q + e, p, T, g, frame)
                  - physical_hamiltonian(sys_id, par, q - e, p, T, g, frame)) / (2 * h)
    return dq, dp


def map_trajectory(sys_id, par: ParamSet, pr: Sequence[ParticleState]) -> list[PhysicalPoint]:
    """Map every sample, continuing PVI roots and lattice parameters from the previous sample."""
    sys_id = SystemId.parse(sys_id)
    out: list[PhysicalPoint] = []
    frame = None
    for ps in pr:
        if sys_id is SystemId.PVI:
            frame = PVIFrame.at_time(ps.t, tau_seed=None if frame is None else frame.tau)
            seeds = None if not out else out[-1].q
            out.append(map_to_physical(sys_id, par, ps, frame, seeds))
        else:
            out.append(map_to_physical(sys_id, par, ps))
    return out


def pushforward_dynamics_residual(sys_id, par: ParamSet, pr: Sequence[ParticleState],
                                  h: float = GRAD_STEP) -> float:
    """Mismatch between the mapped trajectory and Hamilton's equations of ``H~``.

    ``dq/dT`` and ``dp/dT`` are sixth-order central differences along the
    uniform sample grid, divided by ``dT/ds``; the residual is normalised
    by ``max(1, |field|)`` and maximised over interior samples.
    """
    sys_id = SystemId.parse(sys_id)
    if len(pr) < 7:
        raise GridMismatch("need at least 7 uniformly spaced samples")
    ts = np.array([ps.t for ps in pr])
    step = ts[1] - ts[0]
    if step == 0 or np.abs(np.diff(ts) - step).max() > 1e-9 * abs(step):
        raise GridMismatch("samples must lie on a uniform time grid")
    g = pr[0].g
    mapped = map_trajectory(sys_id, par, pr)
    Q = np.array([m.q for m in mapped])
    P = np.array([m.p for m in mapped])
    Ts = np.array([m.T for m in mapped])
    dQ = central_derivative(Q, 1.0)
    dP = central_derivative(P, 1.0)
    dT = central_derivative(Ts, 1.0)
    worst = 0.0
    for k in range(dQ.shape[0]):
        idx = k + 3
        frame = None
        if sys_id is SystemId.PVI:
            frame = PVIFrame(ell.EllipticContext(Ts[idx]), pr[idx].t)
        fq, fp = physical_fields(sys_id, par, Q[idx], P[idx], Ts[idx], g, h, frame)
        rq = dQ[k] / dT[k] - fq
        rp = dP[k] / dT[k] - fp
        scale = max(1.0, float(np.abs(np.concatenate([fq, fp])).max()))
        worst = max(worst, float(np.abs(np.concatenate([rq, rp])).max()) / scale)
    return worst
