"""Catalog of the eight matrix Painleve systems.

For each system: the 2x2-block Lax pair ``A(z), B(z)`` (``dPhi/dz = A Phi``,
``dPhi/dt = B Phi``), the matrix Hamilton equations ``qdot = Acal``,
``pdot = Bcal`` and the scalar Hamiltonian ``Tr H``. Scalars inside blocks
stand for multiples of the identity.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

from .errors import InvalidParams, InvalidState, SingularSpectralPoint
from .matcore import anticommutator as ac
from .matcore import as_cmat, fro

SINGULAR_EPS = 1e-12
Q_SV_FLOOR = 1e-10


class SystemId(str, enum.Enum):
    PVI = "PVI"
    PV = "PV"
    PIV = "PIV"
    PIII_D6 = "PIII_D6"
    PIII_D7 = "PIII_D7"
    PIII_D8 = "PIII_D8"
    PII = "PII"
    PI = "PI"

    @classmethod
    def parse(cls, name) -> "SystemId":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).upper())
        except ValueError:
            raise InvalidParams(f"unknown system {name!r}; expected one of {[s.value for s in cls]}") from None


PARAM_NAMES: Mapping[SystemId, tuple[str, ...]] = MappingProxyType({
    SystemId.PVI: ("theta0", "theta1", "thetat", "k", "theta"),
    SystemId.PV: ("theta0", "theta1", "theta2"),
    SystemId.PIV: ("theta0", "theta1"),
    SystemId.PIII_D6: ("theta0", "theta1"),
    SystemId.PIII_D7: ("theta",),
    SystemId.PIII_D8: (),
    SystemId.PII: ("theta",),
    SystemId.PI: (),
})

FORBIDDEN_TIMES: Mapping[SystemId, tuple[complex, ...]] = MappingProxyType({
    SystemId.PVI: (0.0, 1.0),
    SystemId.PV: (0.0,),
    SystemId.PIV: (),
    SystemId.PIII_D6: (0.0,),
    SystemId.PIII_D7: (0.0,),
    SystemId.PIII_D8: (0.0,),
    SystemId.PII: (),
    SystemId.PI: (),
})

# Default integration windows, away from the fixed singular times.
DEFAULT_WINDOWS: Mapping[SystemId, tuple[float, float]] = MappingProxyType({
    SystemId.PVI: (0.3, 0.4),
    SystemId.PV: (1.0, 2.0),
    SystemId.PIII_D6: (1.0, 2.0),
    SystemId.PIII_D7: (1.0, 2.0),
    SystemId.PIII_D8: (1.0, 2.0),
    SystemId.PIV: (0.0, 1.0),
    SystemId.PII: (0.0, 1.0),
    SystemId.PI: (0.0, 1.0),
})


@dataclass(frozen=True)
class ParamSet:
    """Named complex constants of one system.

    Unspecified constants default to 0. For PVI, ``theta`` is derived as
    ``theta0 + thetat + theta1``; passing an inconsistent ``theta`` fails.
    """

    system: SystemId
    values: Mapping[str, complex] = field(default_factory=dict)

    def __post_init__(self):
        sys_id = SystemId.parse(self.system)
        object.__setattr__(self, "system", sys_id)
        allowed = PARAM_NAMES[sys_id]
        unknown = set(self.values) - set(allowed)
        if unknown:
            raise InvalidParams(f"{sys_id.value} has no parameters {sorted(unknown)}; allowed: {allowed}")
        vals = {}
        for key in allowed:
            v = complex(self.values.get(key, 0.0))
            if not np.isfinite(v):
                raise InvalidParams(f"parameter {key} is not finite")
            vals[key] = v
        if sys_id is SystemId.PVI:
            derived = vals["theta0"] + vals["thetat"] + vals["theta1"]
            if "theta" in self.values and abs(vals["theta"] - derived) > 1e-12 * max(1.0, abs(derived)):
                raise InvalidParams(
                    f"PVI requires theta = theta0 + thetat + theta1 = {derived}, got {vals['theta']}"
                )
            vals["theta"] = derived
        object.__setattr__(self, "values", MappingProxyType(vals))

    @classmethod
    def of(cls, system, **values) -> "ParamSet":
        return cls(SystemId.parse(system), values)

    def __getitem__(self, key: str) -> complex:
        return self.values[key]

    def to_dict(self) -> dict[str, complex]:
        return dict(self.values)


@dataclass(frozen=True)
class MatrixState:
    q: np.ndarray
    p: np.ndarray
    t: complex

    def __post_init__(self):
        q = as_cmat(self.q, name="q")
        p = as_cmat(self.p, name="p")
        if q.shape != p.shape:
            raise InvalidState(f"q and p differ in shape: {q.shape} vs {p.shape}")
        t = complex(self.t)
        if not np.isfinite(t):
            raise InvalidState("t is not finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "t", t)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.q.ravel(), self.p.ravel()])

    @classmethod
    def from_vector(cls, y: np.ndarray, n: int, t: complex) -> "MatrixState":
        return cls(y[: n * n].reshape(n, n), y[n * n:].reshape(n, n), t)


@dataclass(frozen=True)
class LaxValue:
    A: np.ndarray
    B: np.ndarray
    z: complex

    def blocks(self, which: str = "A") -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        m = self.A if which == "A" else self.B
        n = m.shape[0] // 2
        return m[:n, :n], m[:n, n:], m[n:, :n], m[n:, n:]


def validate_state(sys_id: SystemId, st: MatrixState, q_floor: float = Q_SV_FLOOR) -> None:
    """Raise :class:`InvalidState` unless ``st`` is admissible for ``sys_id``."""
    for ft in FORBIDDEN_TIMES[sys_id]:
        if abs(st.t - ft) < SINGULAR_EPS:
            raise InvalidState(f"{sys_id.value} is singular at t = {ft}")
    if sys_id is SystemId.PIII_D8:
        smin = np.linalg.svd(st.q, compute_uv=False).min()
        if smin < q_floor:
            raise InvalidState(f"PIII_D8 needs invertible q; smallest singular value {smin:.2e}")


# ---------------------------------------------------------------------------
# per-system formulas: fields(par, q, p, t), ham(par, q, p, t), lax(par, q, p, t, z)

def _blk(a, b, c, d):
    return np.block([[a, b], [c, d]])


def _pvi_fields(P, q, p, t):
    E = np.eye(q.shape[0])
    t0, t1, tt, k, th = P["theta0"], P["theta1"], P["thetat"], P["k"], P["theta"]
    qpq = q @ p @ q
    A = (-t0 * t * E + (t0 + tt) * q + (t0 + t1) * t * q - th * q @ q - 2 * qpq
         + t * ac(p, q) - ac(t * p, q @ q) + ac(qpq, q))
    B = (0.25 * (k**2 - th**2) * E - (t0 + tt) * p - (t0 + t1) * t * p + th * ac(q, p)
         - t * p @ p + t * ac(q, p @ p) + p @ (2 * q - q @ q) @ p - ac(q, p @ q @ p))
    s = t * (t - 1)
    return A / s, B / s


def _pvi_ham(P, q, p, t):
    t0, t1, tt, k, th = P["theta0"], P["theta1"], P["thetat"], P["k"], P["theta"]
    pq = p @ q
    expr = (q @ p @ q @ p @ q - t * p @ q @ q @ p + t * p @ q @ p - pq @ pq - th * q @ p @ q
            + t * (t0 + t1) * pq + (t0 + tt) * pq - t0 * t * p - 0.25 * (k**2 - th**2) * q)
    return np.trace(expr) / (t * (t - 1))


def _pvi_lax(P, q, p, t, z):
    n = q.shape[0]
    E, Z = np.eye(n), np.zeros((n, n))
    t0, k, th, tt = P["theta0"], P["k"], P["theta"], P["thetat"]
    qp, pq = q @ p, p @ q
    A0 = _blk((-1 - tt) * E, q / t - E, Z, Z)
    A1 = _blk(-qp + 0.5 * (k + th) * E, E, (th * E - qp) @ qp + 0.25 * (k**2 - th**2) * E, qp + 0.5 * (k - th) * E)
    At = _blk(qp - t0 * E, -q / t, t * (pq - t0 * E) @ p, -pq)
    Bp = _blk((t * (ac(q, p) - t0 * E) + th * q - ac(qp, q)) / (t * (t - 1)), Z, -t0 * p + p @ q @ p, Z)
    A = A0 / z + A1 / (z - 1) + At / (z - t)
    B = -(At / (z - t) + Bp)
    return A, B


def _pv_fields(P, q, p, t):
    E = np.eye(q.shape[0])
    t0, t1, t2 = P["theta0"], P["theta1"], P["theta2"]
    A = (ac(p, q @ q) - ac(p, q) + t * (q @ q - q) + (t0 - t2) * q + t2 * E) / t
    B = (-ac(p @ p, q) + p @ p - t * (ac(p, q) + (t0 + t1) * E) + (t2 - t0 + t) * p) / t
    return A, B


def _pv_ham(P, q, p, t):
    E = np.eye(q.shape[0])
    t0, t1, t2 = P["theta0"], P["theta1"], P["theta2"]
    expr = p @ (p + t * E) @ q @ (q - E) + (t0 - t2) * p @ q + t2 * p + (t0 + t1) * t * q
    return np.trace(expr) / t


def _pv_lax(P, q, p, t, z):
    n = q.shape[0]
    E, Z = np.eye(n), np.zeros((n, n))
    t0, t1, t2 = P["theta0"], P["theta1"], P["theta2"]
    qp = q @ p
    Z1 = qp + (t0 + t1) * E
    Z2 = (q @ qp - qp + (t0 + t1) * q - t1 * E) / t
    S1 = qp @ q - p @ q + (t0 + t1) * q + t2 * E
    S2 = -(qp - p + (t0 + t1) * E) / t
    A0 = _blk(Z1 - Z1 @ q, Z1 @ Z2, t * E - t * q, t * Z2)
    A1 = _blk(S1, S1 @ S2, t * q, t * q @ S2)
    E22 = _blk(Z, Z, Z, E)
    A = -t * E22 + A0 / z + A1 / (z - 1)
    B = _blk(Z, (Z1 @ Z2 + S1 @ S2) / t, E,
             -z * E + (t * q + (p @ q - q @ p) + (1 - t0 - 2 * t1 - t2) * E) / t)
    return A, B


def _piv_fields(P, q, p, t):
    E = np.eye(q.shape[0])
    t0, t1 = P["theta0"], P["theta1"]
    return ac(p, q) - q @ q - t * q + t0 * E, ac(p, q) - p @ p + t * p + (t0 + t1) * E


def _piv_ham(P, q, p, t):
    E = np.eye(q.shape[0])
    t0, t1 = P["theta0"], P["theta1"]
    return np.trace(p @ q @ (p - q - t * E) + t0 * p - (t0 + t1) * q)


def _piv_lax(P, q, p, t, z):
    n = q.shape[0]
    E, Z = np.eye(n), np.zeros((n, n))
    t0, t1 = P["theta0"], P["theta1"]
    qp, pq = q @ p, p @ q
    A = _blk(-pq / z, qp + (t0 + t1) * E - (pq @ p + t0 * p) / z,
             E + q / z, (t - z) * E + (qp + t0 * E) / z)
    B = _blk(Z, -qp - (t0 + t1) * E, -E, (z - t) * E - q)
    return A, B


def _d6_fields(P, q, p, t):
    E = np.eye(q.shape[0])
    t0, t1 = P["theta0"], P["theta1"]
    A = (ac(p, q @ q) - q @ q + (t1 - t0) * q + t * E) / t
    B = (-ac(p @ p, q) + ac(p, q) - (t1 - t0) * p + t1 * E) / t
    return A, B


def _d6_ham(P, q, p, t):
    E = np.eye(q.shape[0])
    t0, t1 = P["theta0"], P["theta1"]
    return np.trace(p @ p @ q @ q - (q @ q + (t0 - t1) * q - t * E) @ p - t1 * q) / t


def _d6_lax(P, q, p, t, z):
    E = np.eye(q.shape[0])
    t0, t1 = P["theta0"], P["theta1"]
    qp, pq = q @ p, p @ q
    A = _blk((qp + t1 * E) / (z - 1), t * E - (qp @ q + t1 * q) / (z - 1),
             -(p - E) / z + p / (z - 1), t0 / z * E - pq / (z - 1))
    B = _blk((pq - t0 * E) / t, z * E, E / t, -(qp + t1 * E) / t)
    return A, B


def _d7_fields(P, q, p, t):
    E = np.eye(q.shape[0])
    th = P["theta"]
    return (2 * q @ p @ q - th * q + t * E) / t, -(2 * p @ q @ p - th * p + E) / t


def _d7_ham(P, q, p, t):
    th = P["theta"]
    pq = p @ q
    return np.trace(pq @ pq - th * pq + t * p + q) / t


def _d7_lax(P, q, p, t, z):
    n = q.shape[0]
    E, Z = np.eye(n), np.zeros((n, n))
    th = P["theta"]
    # upper-right block is q/z + 1; with q/t + 1 the pair is not compatible
    A = _blk(q @ p / z, q / z + E, t * p / z**2 + E / z, t / z**2 * E + (th * E - p @ q) / z)
    B = _blk(Z, -q / t, -p / z, -E / z)
    return A, B


def _d8_fields(P, q, p, t):
    E = np.eye(q.shape[0])
    qi = np.linalg.inv(q)
    return (2 * q @ p @ q + q) / t, -(2 * p @ q @ p + p - E) / t - qi @ qi


def _d8_ham(P, q, p, t):
    pq = p @ q
    return np.trace(pq @ pq + pq - q - t * np.linalg.inv(q)) / t


def _d8_lax(P, q, p, t, z):
    n = q.shape[0]
    E, Z = np.eye(n), np.zeros((n, n))
    qi = np.linalg.inv(q)
    A = _blk(q @ p / z, E - q / z, -t * qi / z**2 + E / z, -(p @ q + E) / z)
    B = _blk(Z, q / t, qi / z, Z)
    return A, B


def _pii_fields(P, q, p, t):
    E = np.eye(q.shape[0])
    return p.copy(), 2 * q @ q @ q + t * q + P["theta"] * E


def _pii_ham(P, q, p, t):
    m = q @ q + 0.5 * t * np.eye(q.shape[0])
    return np.trace(0.5 * p @ p - 0.5 * m @ m - P["theta"] * q)


def _pii_lax(P, q, p, t, z):
    E = np.eye(q.shape[0])
    th = P["theta"]
    d = 0.5j * z**2 * E + 1j * q @ q + 0.5j * t * E
    A = _blk(d, z * q - 1j * p - th / z * E, z * q + 1j * p - th / z * E, -d)
    B = _blk(0.5j * z * E, q, q, -0.5j * z * E)
    return A, B


def _pi_fields(P, q, p, t):
    E = np.eye(q.shape[0])
    return p.copy(), 1.5 * q @ q + 0.25 * t * E


def _pi_ham(P, q, p, t):
    return np.trace(0.5 * p @ p - 0.5 * q @ q @ q - 0.25 * t * q)


def _pi_lax(P, q, p, t, z):
    n = q.shape[0]
    E, Z = np.eye(n), np.zeros((n, n))
    A = _blk(p, z * E - q, z**2 * E + z * q + q @ q + 0.5 * t * E, -p)
    B = _blk(Z, 0.5 * E, 0.5 * z * E + q, Z)
    return A, B


@dataclass(frozen=True)
class _Spec:
    fields: Callable
    ham: Callable
    lax: Callable
    z_poles: Callable[[complex], tuple[complex, ...]]


_CATALOG: Mapping[SystemId, _Spec] = MappingProxyType({
    SystemId.PVI: _Spec(_pvi_fields, _pvi_ham, _pvi_lax, lambda t: (0.0, 1.0, t)),
    SystemId.PV: _Spec(_pv_fields, _pv_ham, _pv_lax, lambda t: (0.0, 1.0)),
    SystemId.PIV: _Spec(_piv_fields, _piv_ham, _piv_lax, lambda t: (0.0,)),
    SystemId.PIII_D6: _Spec(_d6_fields, _d6_ham, _d6_lax, lambda t: (0.0, 1.0)),
    SystemId.PIII_D7: _Spec(_d7_fields, _d7_ham, _d7_lax, lambda t: (0.0,)),
    SystemId.PIII_D8: _Spec(_d8_fields, _d8_ham, _d8_lax, lambda t: (0.0,)),
    SystemId.PII: _Spec(_pii_fields, _pii_ham, _pii_lax, lambda t: (0.0,)),
    SystemId.PI: _Spec(_pi_fields, _pi_ham, _pi_lax, lambda t: ()),
})


def _check_params(sys_id: SystemId, par: ParamSet) -> None:
    if par.system is not sys_id:
        raise InvalidParams(f"parameters are for {par.system.value}, not {sys_id.value}")


def spectral_poles(sys_id, t: complex) -> tuple[complex, ...]:
    return _CATALOG[SystemId.parse(sys_id)].z_poles(complex(t))


def lax_pair_eval(sys_id, par: ParamSet, st: MatrixState, z: complex) -> LaxValue:
    """Assemble ``A(z)`` and ``B(z)`` at the state ``st``."""
    sys_id = SystemId.parse(sys_id)
    _check_params(sys_id, par)
    validate_state(sys_id, st)
    z = complex(z)
    for pole in _CATALOG[sys_id].z_poles(st.t):
        if abs(z - pole) < SINGULAR_EPS:
            raise SingularSpectralPoint(f"z = {z} is a pole of the {sys_id.value} Lax pair")
    A, B = _CATALOG[sys_id].lax(par, st.q, st.p, st.t, z)
    return LaxValue(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex), z)


def flow_fields(sys_id, par: ParamSet, st: MatrixState) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand sides ``(qdot, pdot)`` of the matrix Hamilton equations."""
    sys_id = SystemId.parse(sys_id)
    _check_params(sys_id, par)
    validate_state(sys_id, st)
    A, B = _CATALOG[sys_id].fields(par, st.q, st.p, st.t)
    return np.asarray(A, dtype=complex), np.asarray(B, dtype=complex)


def raw_fields(sys_id: SystemId, par: ParamSet, q, p, t):
    """Unvalidated flow fields, for inner loops of integrators."""
    return _CATALOG[sys_id].fields(par, q, p, t)


def raw_hamiltonian(sys_id: SystemId, par: ParamSet, q, p, t) -> complex:
    return complex(_CATALOG[sys_id].ham(par, q, p, t))


def matrix_hamiltonian(sys_id, par: ParamSet, st: MatrixState) -> complex:
    """``Tr H`` with the ``t`` / ``t(t-1)`` prefactors divided out."""
    sys_id = SystemId.parse(sys_id)
    _check_params(sys_id, par)
    validate_state(sys_id, st)
    return raw_hamiltonian(sys_id, par, st.q, st.p, st.t)


def trace_gradients(sys_id, par: ParamSet, st: MatrixState, h: float):
    """Central-difference gradients of ``Tr H`` w.r.t. the entries of q and p.

    Returns ``(dH/dq, dH/dp, cr_mismatch)`` where ``dH/dq[i, j]`` is the
    derivative w.r.t. ``q[i, j]``; real and imaginary perturbations are
    taken independently and ``cr_mismatch`` is their largest Cauchy-Riemann
    disagreement.
    """
    sys_id = SystemId.parse(sys_id)
    n = st.n

    def grad(which):
        g_re = np.zeros((n, n), dtype=complex)
        g_im = np.zeros((n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                for step, store in ((h, g_re), (1j * h, g_im)):
                    d = np.zeros((n, n), dtype=complex)
                    d[i, j] = step
                    if which == "q":
                        hp = raw_hamiltonian(sys_id, par, st.q + d, st.p, st.t)
                        hm = raw_hamiltonian(sys_id, par, st.q - d, st.p, st.t)
                    else:
                        hp = raw_hamiltonian(sys_id, par, st.q, st.p + d, st.t)
                        hm = raw_hamiltonian(sys_id, par, st.q, st.p - d, st.t)
                    store[i, j] = (hp - hm) / (2 * h)
        # holomorphic: dH/dRe = dH/dz, dH/dIm = i dH/dz
        return 0.5 * (g_re - 1j * g_im), float(np.abs(g_im - 1j * g_re).max())

    gq, cq = grad("q")
    gp, cp = grad("p")
    return gq, gp, max(cq, cp)


def gradient_consistency_residual(sys_id, par: ParamSet, st: MatrixState, h: float = 1e-5) -> float:
    """Mismatch between the closed-form flow fields and the gradients of ``Tr H``.

    Convention: ``qdot_ij = dTrH/dp_ji`` and ``pdot_ij = -dTrH/dq_ji``.
    """
    sys_id = SystemId.parse(sys_id)
    A, B = flow_fields(sys_id, par, st)
    gq, gp, cr = trace_gradients(sys_id, par, st, h)
    scale = max(1.0, fro(A), fro(B))
    return max(fro(A - gp.T), fro(B + gq.T), cr) / scale


def _stencil(f, h):
    """Fourth-order central difference of ``f`` at 0 with step ``h``."""
    return (f(-2) - 8 * f(-1) + 8 * f(1) - f(2)) / (12 * h)


def zero_curvature_residual(
    sys_id,
    par: ParamSet,
    st: MatrixState,
    z: complex,
    dt: float = 1e-4,
    dz: float = 1e-4,
    flow: Callable | None = None,
) -> float:
    """``|d_t A - d_z B + [A, B]| / max(1, |A|)`` at ``(st, z)``.

    ``d_t A`` differentiates ``A`` along the flow: the state is advanced and
    retarded by integrator steps of ``dt`` and ``2 dt``. ``flow`` optionally
    replaces the flow fields (signature of :func:`raw_fields` without the
    system argument), e.g. for fault injection.
    """
    from .ode import integrate_segment

    sys_id = SystemId.parse(sys_id)
    _check_params(sys_id, par)
    validate_state(sys_id, st)
    z = complex(z)
    reach = 2 * max(dz, 0.0) + 1e-9
    for pole in _CATALOG[sys_id].z_poles(st.t):
        if abs(z - pole) < reach:
            raise SingularSpectralPoint(f"z = {z} is within {reach:.1e} of pole {pole}")
    lax = _CATALOG[sys_id].lax
    fields = flow or (lambda P, q, p, t: _CATALOG[sys_id].fields(P, q, p, t))
    n = st.n

    def rhs(t, y):
        a, b = fields(par, y[: n * n].reshape(n, n), y[n * n:].reshape(n, n), t)
        return np.concatenate([np.ravel(a), np.ravel(b)])

    y0 = st.to_vector()
    states = {}
    for k in (-2, -1, 1, 2):
        _, ys = integrate_segment(rhs, y0, st.t, st.t + k * dt, tol=1e-13)
        states[k] = ys[-1]

    def a_at(k):
        y = states[k]
        return lax(par, y[: n * n].reshape(n, n), y[n * n:].reshape(n, n), st.t + k * dt, z)[0]

    def b_at(k):
        return lax(par, st.q, st.p, st.t, z + k * dz)[1]

    dA = _stencil(a_at, dt)
    dB = _stencil(b_at, dz)
    A, B = lax(par, st.q, st.p, st.t, z)
    return fro(dA - dB + A @ B - B @ A) / max(1.0, fro(A))
