"""Self-consistency of constructed solutions.

For a reflectionless potential the scattering contribution to the gap
equation drops out, and what remains is the bound-state part

    Xi_bound = 2 H (N - Theta) H^H,   N = diag(nu),  Theta = diag(theta) / pi.

In the antisymmetric class the gap equation sees the tau-symmetrized
combination H (N + N~ - 2 Theta) H^H, where N~ swaps the fillings inside each
degenerate pair.  The equation is [sigma_3, Xi~] = 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .construct import bound_states
from .errors import QuadratureTailTooLarge, SplitOutOfRange
from .scattering_data import Symmetry, ValidatedSpec, tau_matrix

TAIL_LIMIT = 1e-10
QUAD_MARGIN = 40.0
RESIDUAL_POINTS = 201
RESIDUAL_MARGIN = 10.0


@dataclass(frozen=True)
class FillingAssignment:
    nu: np.ndarray

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float)
        if np.any(nu < 0) or np.any(nu > 1):
            raise SplitOutOfRange(f"filling rates must lie in [0, 1], got {nu}")
        object.__setattr__(self, "nu", nu)


def canonical_filling(spec: ValidatedSpec) -> np.ndarray:
    return spec.theta / np.pi


def filling_rates(spec: ValidatedSpec, split: Sequence[float] | None = None, clamp: bool = True) -> FillingAssignment:
    """nu_j = theta_j / pi; in the antisymmetric class an optional per-pair split
    delta_j gives (theta/pi + delta, theta/pi - delta), which keeps the pair sum."""
    nu = canonical_filling(spec).copy()
    if split is None:
        return FillingAssignment(nu)
    if spec.symmetry is not Symmetry.ANTISYMMETRIC:
        raise SplitOutOfRange("a filling split only exists in the antisymmetric class")
    split = np.atleast_1d(np.asarray(split, dtype=float))
    pairs = spec.n // 2
    if split.size != pairs:
        raise SplitOutOfRange(f"expected {pairs} split values, got {split.size}")
    base = nu[0::2]
    hi = base + split
    lo = base - split
    if not clamp and (np.any(hi > 1) or np.any(lo < 0) or np.any(hi < 0) or np.any(lo > 1)):
        raise SplitOutOfRange(f"split {split} pushes a filling outside [0, 1]")
    # clamping one member means the partner must absorb the excess to keep the sum
    total = 2 * base
    hi = np.clip(hi, np.maximum(total - 1, 0), np.minimum(total, 1))
    lo = total - hi
    nu[0::2] = hi
    nu[1::2] = lo
    return FillingAssignment(nu)


def swapped(nu: np.ndarray) -> np.ndarray:
    """N~: exchange the fillings inside each consecutive pair."""
    out = np.asarray(nu, dtype=float).copy()
    out[0::2], out[1::2] = nu[1::2], nu[0::2]
    return out


def _bound(spec, x):
    h = bound_states(spec, x)
    return h[None] if h.ndim == 2 else h


def _weighted(h: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.einsum("nal,l,nbl->nab", h, w, h.conj())


def xi_bound(spec: ValidatedSpec, nu, x) -> np.ndarray:
    """2 H (N - Theta) H^H, shape (2d, 2d) or (N, 2d, 2d)."""
    scalar = np.ndim(x) == 0
    nu = _nu(spec, nu)
    out = 2 * _weighted(_bound(spec, x), nu - canonical_filling(spec))
    return out[0] if scalar else out


def xi_tilde(spec: ValidatedSpec, nu, x) -> np.ndarray:
    """Bound-state part entering the gap equation, per symmetry class."""
    if spec.symmetry is not Symmetry.ANTISYMMETRIC:
        return xi_bound(spec, nu, x)
    scalar = np.ndim(x) == 0
    nu = _nu(spec, nu)
    out = _weighted(_bound(spec, x), nu + swapped(nu) - 2 * canonical_filling(spec))
    return out[0] if scalar else out


def tau_symmetrized(spec: ValidatedSpec, xi: np.ndarray) -> np.ndarray:
    """(Xi + tau Xi^* tau) / 2, computed directly; Xi itself for the non-symmetric class."""
    tau = tau_matrix(spec.d, spec.symmetry)
    if tau is None:
        return xi
    return 0.5 * (xi + tau @ xi.conj() @ tau)


def _nu(spec, nu):
    if nu is None:
        return canonical_filling(spec)
    if isinstance(nu, FillingAssignment):
        return nu.nu
    return np.asarray(nu, dtype=float)


def residual_grid(spec: ValidatedSpec, points: int = RESIDUAL_POINTS, margin: float = RESIDUAL_MARGIN) -> np.ndarray:
    """Uniform grid over all soliton cores plus `margin` decay lengths on each side."""
    if spec.n == 0:
        return np.linspace(-1.0, 1.0, points)
    reach = margin / float(np.min(spec.kappa))
    return np.linspace(np.min(spec.positions) - reach, np.max(spec.positions) + reach, points)


def commutator_sigma3(a: np.ndarray) -> np.ndarray:
    d = a.shape[-1] // 2
    sig = np.concatenate([np.ones(d), -np.ones(d)])
    return sig[:, None] * a - a * sig[None, :]


def gap_residual(spec: ValidatedSpec, nu=None, grid=None) -> float:
    """max over the grid of the spectral norm of [sigma_3, Xi~(x)]."""
    if spec.n == 0:
        return 0.0
    grid = residual_grid(spec) if grid is None else np.asarray(grid, dtype=float)
    c = commutator_sigma3(xi_tilde(spec, nu, grid))
    return float(np.max(np.linalg.norm(c, ord=2, axis=(1, 2))))


@dataclass(frozen=True)
class PerturbationResult:
    index: int
    delta: float
    residual: float
    half_residual: float

    @property
    def slope(self) -> float:
        return self.residual / abs(self.delta)

    @property
    def linearity(self) -> float:
        """residual(delta) / residual(delta / 2); 2 for exact linearity."""
        return self.residual / self.half_residual if self.half_residual else np.inf


def perturbation_scan(spec: ValidatedSpec, delta: float = 0.05, grid=None) -> list[PerturbationResult]:
    """Perturb one filling at a time (moving away from the nearer end of [0, 1])."""
    base = canonical_filling(spec)
    out = []
    for j in range(spec.n):
        step = delta if base[j] + delta <= 1 else -delta
        res = []
        for h in (step, step / 2):
            nu = base.copy()
            nu[j] += h
            res.append(gap_residual(spec, nu, grid))
        out.append(PerturbationResult(j, step, res[0], res[1]))
    return out


def _gauss_nodes(a: float, b: float, panel: float, order: int = 20) -> tuple[np.ndarray, np.ndarray]:
    n_panels = max(1, int(np.ceil((b - a) / panel)))
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    x = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    return x, wt


@dataclass(frozen=True)
class OrthonormalityResult:
    overlap: np.ndarray
    error: float
    tail_bound: float
    domain: tuple


def bound_orthonormality(spec: ValidatedSpec, margin: float = QUAD_MARGIN) -> OrthonormalityResult:
    """|| int H^H H dx - I_n || by composite Gauss-Legendre on the cores +- margin/kappa_min.

    Beyond the domain every bound state decays at least like exp(-kappa_min |x|),
    so the discarded mass is at most |H(edge)|_F^2 / (2 kappa_min) per side.
    """
    n = spec.n
    if n == 0:
        return OrthonormalityResult(np.zeros((0, 0)), 0.0, 0.0, (0.0, 0.0))
    kmin = float(np.min(spec.kappa))
    kmax = float(np.max(spec.kappa))
    a = float(np.min(spec.positions)) - margin / kmin
    b = float(np.max(spec.positions)) + margin / kmin
    edges = bound_states(spec, np.array([a, b]))
    tail = float(np.sum(np.abs(edges) ** 2) / (2 * kmin))
    if tail > TAIL_LIMIT:
        raise QuadratureTailTooLarge(f"tail mass bound {tail:.3e} exceeds {TAIL_LIMIT:.0e}")
    x, w = _gauss_nodes(a, b, panel=0.5 / kmax)
    h = bound_states(spec, x)
    overlap = np.einsum("n,nal,nak->lk", w, h.conj(), h)
    err = float(np.linalg.norm(overlap - np.eye(n), 2))
    return OrthonormalityResult(overlap, err, tail, (a, b))


def independence_gram(spec: ValidatedSpec, grid=None) -> np.ndarray:
    """L^2 Gram matrix of the fields [sigma_3, h_j h_j^H] (trapezoid on the residual grid)."""
    grid = residual_grid(spec, points=2001) if grid is None else np.asarray(grid, dtype=float)
    h = bound_states(spec, grid)
    c = np.stack([commutator_sigma3(np.einsum("na,nb->nab", h[:, :, j], h[:, :, j].conj()))
                  for j in range(spec.n)], axis=1)  # (N, n, 2d, 2d)
    integrand = np.einsum("njab,nkab->njk", c.conj(), c)
    return np.trapezoid(integrand, grid, axis=0)


@dataclass
class ReportLine:
    name: str
    value: float
    tolerance: float | None = None

    @property
    def passed(self) -> bool:
        return self.tolerance is None or (np.isfinite(self.value) and self.value <= self.tolerance)


@dataclass
class ConsistencyReport:
    """Named residuals with tolerances; lines without a tolerance are diagnostics."""

    title: str = "consistency report"
    lines: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    config: dict | None = None

    def add(self, name: str, value: float, tolerance: float | None = None) -> None:
        self.lines.append(ReportLine(name, float(value), tolerance))

    @property
    def passed(self) -> bool:
        return all(line.passed for line in self.lines)

    def failures(self) -> list[str]:
        return [line.name for line in self.lines if not line.passed]

    def to_text(self) -> str:
        out = [f"# {self.title}"]
        for line in self.lines:
            if line.tolerance is None:
                out.append(f"{line.name:40s} {line.value:.3e}")
            else:
                verdict = "PASS" if line.passed else "FAIL"
                out.append(f"{line.name:40s} {line.value:.3e}  (tol {line.tolerance:.1e})  {verdict}")
        out.extend(f"note: {n}" for n in self.notes)
        out.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(out)

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "passed": self.passed,
            "lines": [{"name": l.name, "value": l.value, "tolerance": l.tolerance, "passed": l.passed}
                      for l in self.lines],
            "notes": list(self.notes),
            "config": self.config,
        }
