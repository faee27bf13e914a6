"""Matrix NLS flow of constructed solutions.

Under i Delta_t = -2 m^2 Delta - Delta_xx + 2 Delta Delta^H Delta the ZS
spectrum is frozen and each soliton only slides: x_j(t) = x_j + 2 eps_j t with
eps_j = m cos(theta_j).  Evolution is therefore exact parameter translation;
the PDE is used only to check the result.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .construct import gap_function
from .errors import GridTooCoarse
from .scattering_data import ValidatedSpec


def velocities(spec: ValidatedSpec) -> np.ndarray:
    return 2.0 * spec.epsilon


def evolve(spec: ValidatedSpec, t: float) -> ValidatedSpec:
    """Spec at time spec.t + t; angles and coefficient vectors are unchanged."""
    t = float(t)
    if t == 0.0:
        return spec
    return spec.with_positions(spec.positions + velocities(spec) * t, t=spec.t + t)


def _uniform_step(x: np.ndarray) -> float:
    if x.size < 5:
        raise GridTooCoarse("PDE residual needs at least 5 grid points")
    h = np.diff(x)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise GridTooCoarse("PDE residual needs a uniform grid")
    return float(h[0])


def pde_residual_field(spec: ValidatedSpec, t: float, grid, time_step: float | None = None) -> np.ndarray:
    """i Delta_t + 2 m^2 Delta + Delta_xx - 2 Delta Delta^H Delta at the interior points,
    with centered differences; time_step defaults to the grid spacing."""
    x = np.asarray(grid, dtype=float)
    h = _uniform_step(x)
    tau = h if time_step is None else float(time_step)
    d_now = gap_function(evolve(spec, t), x)
    d_next = gap_function(evolve(spec, t + tau), x[1:-1])
    d_prev = gap_function(evolve(spec, t - tau), x[1:-1])
    dt = (d_next - d_prev) / (2 * tau)
    dxx = (d_now[2:] - 2 * d_now[1:-1] + d_now[:-2]) / (h * h)
    c = d_now[1:-1]
    cubic = c @ np.conj(np.swapaxes(c, 1, 2)) @ c
    return 1j * dt + 2 * spec.m**2 * c + dxx - 2 * cubic


def pde_residual(spec: ValidatedSpec, t: float, grid, time_step: float | None = None) -> float:
    """Max over interior points of the spectral norm of the NLS residual."""
    r = pde_residual_field(spec, t, grid, time_step)
    return float(np.max(np.linalg.norm(r, ord=2, axis=(1, 2))))


def refinement_ratio(spec: ValidatedSpec, t: float, x_min: float, x_max: float, points: int = 201) -> float:
    """residual(h) / residual(h/2) with tau = h; about 4 for a second-order scheme."""
    coarse = np.linspace(x_min, x_max, points)
    fine = np.linspace(x_min, x_max, 2 * points - 1)
    return pde_residual(spec, t, coarse) / pde_residual(spec, t, fine)


@dataclass(frozen=True, eq=False)
class Snapshot:
    t: float
    spec: ValidatedSpec
    x: np.ndarray
    delta: np.ndarray


def snapshot_series(spec: ValidatedSpec, times: Sequence[float], grid) -> list[Snapshot]:
    x = np.asarray(grid, dtype=float)
    out = []
    for t in times:
        ev = evolve(spec, t)
        out.append(Snapshot(float(t), ev, x, gap_function(ev, x)))
    return out
