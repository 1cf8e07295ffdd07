"""Weierstrass ``wp`` for the lattice ``Z + tau Z``.

The double lattice sum is evaluated in Eisenstein order: for each row
``n`` the sum over ``m`` is done in closed form,

    sum_m (u + m + n tau)^-2 = pi^2 / sin^2(pi (u + n tau)),

leaving a single sum over ``|n| <= N`` whose terms decay like
``exp(-2 pi |n| Im tau)``. The reported error estimate is the size of the
last retained shell ``n = +-N``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, LatticePoint, RootSearchFailure

DEFAULT_N = 60
LATTICE_MARGIN = 1e-6
TAU_STEP = 1e-6


def _csc2_cot(z):
    """``(csc(z)^2, cot(z))`` elementwise, without overflow for large ``|Im z|``."""
    z = np.asarray(z, dtype=complex)
    sign = np.where(z.imag < 0, -1.0, 1.0)
    w = np.exp(2j * sign * z)  # |w| <= 1
    csc2 = -4.0 * w / (1.0 - w) ** 2
    cot = sign * 1j * (1.0 + w) / (w - 1.0)
    return csc2, cot


@dataclass(frozen=True)
class EllipticContext:
    """Lattice ``Z + tau Z`` with truncation radius ``N``."""

    tau: complex
    N: int = DEFAULT_N
    omegas: tuple[complex, complex, complex, complex] = field(init=False)
    e: tuple[complex, complex, complex] = field(init=False)
    _offset: complex = field(init=False, repr=False)

    def __post_init__(self):
        tau = complex(self.tau)
        if not (np.isfinite(tau) and tau.imag > 0):
            raise InvalidInput(f"tau must lie in the upper half plane, got {tau}")
        if int(self.N) < 1:
            raise InvalidInput("truncation radius N must be >= 1")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "omegas", (0.0, 0.5, -(1 + tau) / 2, tau / 2))
        pi2 = math.pi**2
        shells = np.arange(1, self.N + 1)
        off = -pi2 / 3 - 2 * pi2 * _csc2_cot(math.pi * shells * tau)[0].sum()
        object.__setattr__(self, "_offset", complex(off))
        e = tuple(wp_jet(self, w)[0] for w in self.omegas[1:])
        object.__setattr__(self, "e", e)

    @property
    def e_sum_error(self) -> float:
        return abs(sum(self.e))

    def truncation_error(self) -> float:
        """Size of the last retained shell ``n = N`` for a unit-size argument."""
        return float(4 * math.pi**2 * math.exp(-2 * math.pi * self.N * self.tau.imag) * math.exp(2 * math.pi))


def reduce_to_cell(ctx: EllipticContext, u: complex) -> complex:
    """Shift ``u`` by a lattice vector into the cell centred at 0."""
    u = complex(u)
    n = round(u.imag / ctx.tau.imag)
    v = u - n * ctx.tau
    return v - round(v.real)


def lattice_distance(ctx: EllipticContext, u: complex) -> float:
    v = reduce_to_cell(ctx, u)
    return min(abs(v - m - k * ctx.tau) for m in (-1, 0, 1) for k in (-1, 0, 1))


def wp_jet(ctx: EllipticContext, u: complex) -> tuple[complex, complex]:
    """``(wp(u), wp'(u))``."""
    if lattice_distance(ctx, u) < LATTICE_MARGIN:
        raise LatticePoint(f"u = {u} is within {LATTICE_MARGIN} of a lattice point")
    v = reduce_to_cell(ctx, u)
    pi = math.pi
    rows = np.arange(-ctx.N, ctx.N + 1)
    c2, ct = _csc2_cot(pi * (v + rows * ctx.tau))
    # sum from the outermost shells inwards to limit rounding
    order = np.argsort(-np.abs(rows), kind="stable")
    wp = ctx._offset + pi**2 * c2[order].sum()
    dwp = -2 * pi**3 * (ct * c2)[order].sum()
    return complex(wp), complex(dwp)


def wp(ctx: EllipticContext, u: complex) -> complex:
    return wp_jet(ctx, u)[0]


def half_periods(ctx: EllipticContext) -> tuple[complex, complex, complex]:
    return ctx.e


def cubic_residual(ctx: EllipticContext, u: complex) -> float:
    """Relative mismatch in ``wp'^2 = 4 (wp - e1)(wp - e2)(wp - e3)``."""
    f, df = wp_jet(ctx, u)
    e1, e2, e3 = ctx.e
    rhs = 4 * (f - e1) * (f - e2) * (f - e3)
    return abs(df**2 - rhs) / max(1.0, abs(rhs))


def pvi_time(tau: complex, N: int = DEFAULT_N) -> complex:
    """``t = (e3 - e1) / (e2 - e1)``."""
    e1, e2, e3 = EllipticContext(tau, N).e
    if abs(e2 - e1) < 1e-300:
        raise InvalidInput("e2 = e1: degenerate lattice")
    return (e3 - e1) / (e2 - e1)


def reduced_wp(ctx: EllipticContext, u: complex) -> complex:
    """``f(u) = (wp(u) - e1) / (e2 - e1)``."""
    e1, e2, _ = ctx.e
    return (wp(ctx, u) - e1) / (e2 - e1)


def reduced_wp_dtau(tau: complex, u: complex, N: int = DEFAULT_N, h: float = TAU_STEP) -> complex:
    """``d f / d tau`` at fixed ``u`` by a central difference of step ``h``."""
    tau = complex(tau)
    fp = reduced_wp(EllipticContext(tau + h, N), u)
    fm = reduced_wp(EllipticContext(tau - h, N), u)
    return (fp - fm) / (2 * h)


def tau_from_time(t: complex, seed: complex | None = None, N: int = DEFAULT_N,
                  tol: float = 1e-13, max_iter: int = 60) -> complex:
    """Solve ``pvi_time(tau) = t`` by Newton's method.

    Without a seed, starts from the best point of a coarse grid over
    ``Re tau in [-1, 1], Im tau in [0.2, 3]``.
    """
    t = complex(t)
    if seed is None:
        best, best_err = None, np.inf
        for re in np.linspace(-1.0, 1.0, 21):
            for im in np.linspace(0.2, 3.0, 15):
                cand = complex(re, im)
                err = abs(pvi_time(cand, N) - t)
                if err < best_err:
                    best, best_err = cand, err
        seed = best
    tau = complex(seed)
    for _ in range(max_iter):
        f = pvi_time(tau, N) - t
        if abs(f) <= tol * max(1.0, abs(t)):
            return tau
        h = 1e-6
        df = (pvi_time(tau + h, N) - pvi_time(tau - h, N)) / (2 * h)
        step = f / df
        # damp steps that would leave the upper half plane
        while (tau - step).imag <= 0.05:
            step /= 2
        tau -= step
    raise RootSearchFailure(f"no tau found with t(tau) = {t} (last residual {abs(f):.2e})")


def wp_inverse(ctx: EllipticContext, target: complex, seed: complex | None = None,
               tol: float = 1e-13, max_iter: int = 60) -> complex:
    """Solve ``wp(u) = target`` by Newton's method, seeded on a grid over the cell."""
    target = complex(target)
    if seed is None:
        best, best_err = None, np.inf
        for a in np.linspace(0.05, 0.95, 10):
            for b in np.linspace(0.05, 0.95, 10):
                cand = a + b * ctx.tau
                err = abs(wp(ctx, cand) - target)
                if err < best_err:
                    best, best_err = cand, err
        seed = best
    u = complex(seed)
    scale = max(1.0, abs(target))
    for _ in range(max_iter):
        f, df = wp_jet(ctx, u)
        if abs(f - target) <= tol * scale:
            return u
        if df == 0:
            break
        step = (f - target) / df
        if abs(step) > 0.25:
            step *= 0.25 / abs(step)
        u -= step
    raise RootSearchFailure(f"wp(u) = {target} not solved from seed {seed}")
