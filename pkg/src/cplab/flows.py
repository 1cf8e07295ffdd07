"""Integration of the matrix Hamiltonian flows and their conserved quantities."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import serialize as ser
from .errors import EmptyTrajectory, InvalidState
from .matcore import fro
from .ode import check_path, integrate_segment, uniform_grid
from .systems import (
    FORBIDDEN_TIMES,
    MatrixState,
    ParamSet,
    SystemId,
    Q_SV_FLOOR,
    matrix_hamiltonian,
    raw_fields,
    validate_state,
)

DEFAULT_SAMPLES = 21


@dataclass(frozen=True)
class Trajectory:
    sys: SystemId
    par: ParamSet
    samples: tuple[MatrixState, ...]
    tol: float
    g: complex | None = None

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def n(self) -> int:
        return self.samples[0].n

    def to_json(self) -> dict:
        return {
            "system": self.sys.value,
            "params": {k: ser.cpair(v) for k, v in self.par.values.items()},
            "n": self.n if self.samples else 0,
            "g": None if self.g is None else ser.cpair(self.g),
            "tol": self.tol,
            "samples": [
                {
                    "t_re": s.t.real,
                    "t_im": s.t.imag,
                    "q": ser.matrix_to_json(s.q),
                    "p": ser.matrix_to_json(s.p),
                }
                for s in self.samples
            ],
        }


def integrate_matrix_flow(
    sys_id,
    par: ParamSet,
    st0: MatrixState,
    t1: complex,
    tol: float = 1e-10,
    max_steps: int = 100_000,
    n_samples: int = DEFAULT_SAMPLES,
    g: complex | None = None,
) -> Trajectory:
    """Integrate ``qdot = Acal, pdot = Bcal`` along the segment ``st0.t -> t1``.

    Samples are returned at ``n_samples`` equally spaced points of the
    segment, both endpoints included.
    """
    sys_id = SystemId.parse(sys_id)
    validate_state(sys_id, st0)
    t1 = complex(t1)
    check_path(st0.t, t1, FORBIDDEN_TIMES[sys_id])
    n = st0.n

    def rhs(t, y):
        a, b = raw_fields(sys_id, par, y[: n * n].reshape(n, n), y[n * n:].reshape(n, n), t)
        return np.concatenate([np.ravel(a), np.ravel(b)])

    check = None
    if sys_id is SystemId.PIII_D8:
        def check(t, y):
            smin = np.linalg.svd(y[: n * n].reshape(n, n), compute_uv=False).min()
            if smin < Q_SV_FLOOR:
                raise InvalidState(f"q became singular near t = {t}")

    times, ys = integrate_segment(
        rhs, st0.to_vector(), st0.t, t1, tol, max_steps=max_steps, grid=uniform_grid(n_samples), check=check
    )
    samples = tuple(MatrixState.from_vector(y, n, t) for t, y in zip(times, ys))
    return Trajectory(sys_id, par, samples, float(tol), g)


def _require(tr: Trajectory) -> None:
    if len(tr.samples) == 0:
        raise EmptyTrajectory("trajectory has no samples")


def commutator_drift(tr: Trajectory) -> float:
    """``max_t |[p,q](t) - [p,q](t0)| / max(1, |[p,q](t0)|)``."""
    _require(tr)
    s0 = tr.samples[0]
    c0 = s0.p @ s0.q - s0.q @ s0.p
    scale = max(1.0, fro(c0))
    return max(fro(s.p @ s.q - s.q @ s.p - c0) for s in tr.samples) / scale


def hamiltonian_log(tr: Trajectory) -> list[tuple[complex, complex]]:
    _require(tr)
    return [(s.t, matrix_hamiltonian(tr.sys, tr.par, s)) for s in tr.samples]


def match_to(prev: np.ndarray, cur: np.ndarray) -> np.ndarray:
    """Reorder ``cur`` to minimise total distance to ``prev``."""
    cost = np.abs(prev[:, None] - cur[None, :])
    _, cols = linear_sum_assignment(cost)
    return cur[cols]


def eigen_tracks(tr: Trajectory) -> np.ndarray:
    """Eigenvalues of q along the trajectory, continued sample to sample.

    Row ``k`` holds the eigenvalues at sample ``k``; the first row is in
    (Re, Im) order and later rows follow by nearest matching.
    """
    _require(tr)
    rows = []
    for s in tr.samples:
        lam = np.linalg.eigvals(s.q)
        rows.append(lam[np.lexsort((lam.imag, lam.real))] if not rows else match_to(rows[-1], lam))
    return np.array(rows)


def write_trajectory_json(tr: Trajectory, path: str | Path) -> None:
    ser.dump_json(tr.to_json(), path)


def write_eigen_csv(tr: Trajectory, path: str | Path) -> None:
    tracks = eigen_tracks(tr)
    header = ["t_re", "t_im"] + [c for j in range(tracks.shape[1]) for c in ser.complex_columns(f"x{j + 1}")]
    rows = ([s.t.real, s.t.imag] + [v for z in lam for v in (z.real, z.imag)] for s, lam in zip(tr.samples, tracks))
    ser.write_csv(path, header, rows)
