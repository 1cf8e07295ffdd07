"""Adaptive integration along straight segments in complex time.

The segment ``t(s) = t0 + s (t1 - t0)``, ``s in [0, 1]``, is integrated with
the Dormand-Prince 5(4) pair of :class:`scipy.integrate.RK45`. The solver is
restarted on every output interval so that samples land exactly on the grid
(no dense-output interpolation error).
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.integrate import RK45

from .errors import ForbiddenTimePath, StepFailure

Rhs = Callable[[complex, np.ndarray], np.ndarray]


def segment_distance(t0: complex, t1: complex, point: complex) -> float:
    """Distance from ``point`` to the closed segment [t0, t1] in the plane."""
    d = t1 - t0
    if d == 0:
        return abs(point - t0)
    s = ((point - t0) * np.conj(d)).real / abs(d) ** 2
    s = min(1.0, max(0.0, s))
    return abs(t0 + s * d - point)


def check_path(t0: complex, t1: complex, forbidden: Sequence[complex], margin: float = 1e-3) -> None:
    for f in forbidden:
        dist = segment_distance(t0, t1, f)
        if dist < margin:
            raise ForbiddenTimePath(
                f"time path {t0} -> {t1} passes within {dist:.2e} of singular time {f}"
            )


def uniform_grid(n_samples: int) -> np.ndarray:
    if n_samples < 2:
        raise ValueError("need at least two samples (start and end)")
    return np.linspace(0.0, 1.0, n_samples)


def integrate_segment(
    rhs: Rhs,
    y0: np.ndarray,
    t0: complex,
    t1: complex,
    tol: float,
    max_steps: int = 100_000,
    grid: np.ndarray | None = None,
    check: Callable[[complex, np.ndarray], None] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate ``dy/dt = rhs(t, y)`` from ``t0`` to ``t1``.

    Returns the complex times and the states (one row per grid point,
    the first row being ``y0``). ``check(t, y)`` runs after every accepted
    step and may raise to abort (e.g. on a particle collision).
    """
    y0 = np.asarray(y0, dtype=complex).ravel()
    t0 = complex(t0)
    t1 = complex(t1)
    grid = uniform_grid(2) if grid is None else np.asarray(grid, dtype=float)
    if grid[0] != 0.0 or grid[-1] != 1.0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must increase strictly from 0 to 1")
    dt = t1 - t0
    times = t0 + grid * dt
    out = np.empty((grid.size, y0.size), dtype=complex)
    out[0] = y0
    if dt == 0:
        raise ValueError("zero-length time segment")

    def fun(s, y):
        return dt * rhs(t0 + s * dt, y)

    y = y0
    steps = 0
    h = None
    for i in range(1, grid.size):
        a, b = grid[i - 1], grid[i]
        kwargs = {} if h is None else {"first_step": min(h, b - a)}
        solver = RK45(fun, a, y, b, rtol=tol, atol=tol, **kwargs)
        while solver.status == "running":
            msg = solver.step()
            steps += 1
            if solver.status == "failed":
                raise StepFailure(
                    f"step size underflow near t = {t0 + solver.t * dt} ({msg}); "
                    "likely a movable pole"
                )
            if not np.all(np.isfinite(solver.y)):
                raise StepFailure(f"non-finite state near t = {t0 + solver.t * dt}")
            if steps > max_steps:
                raise StepFailure(f"exceeded max_steps = {max_steps}")
            if check is not None:
                check(t0 + solver.t * dt, solver.y)
            if solver.status == "running":
                h = solver.h_abs
        y = solver.y.copy()
        out[i] = y
    return times, out
