"""Forward scattering oracle for the matrix ZS operator.

The ZS equation eps w = L w is integrated as a first-order system
Y' = i sigma_3 (eps - M(x)) Y with M = [[0, Delta], [Delta^H, 0]].  To avoid
resolving the plane-wave oscillation, the phase-stripped unknown
Z = Y exp(-i k x sigma_3) is integrated instead:

    Z' = i sigma_3 (eps - M(x)) Z - i k Z sigma_3.

Plane-wave bases are Psi(x, s) = (s I + M_inf) exp(i k x sigma_3), inverted in
closed form as exp(-i k x sigma_3) (s I - M_inf) / (s^2 - 1).

Nothing here depends on how the potential was built; the constructor in
:mod:`bdgsoliton.construct` only enters through :func:`soliton_slab`.
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .errors import GridTooCoarse, NearBandEdge, TruncationInadequate, ZeroArgument
from .scattering_data import Symmetry, ValidatedSpec, tau_matrix

RTOL = 1e-10
ATOL = 1e-12
GUARD_BAND = 1e-3
SLAB_TOL = 1e-8
METHOD = "DOP853"  # explicit adaptive RK, 8th order; RK45 also accepted


def sigma3(d: int) -> np.ndarray:
    return np.diag(np.concatenate([np.ones(d), -np.ones(d)])).astype(complex)


def m_matrix(delta: np.ndarray) -> np.ndarray:
    d = delta.shape[-1]
    z = np.zeros((d, d), dtype=complex)
    return np.block([[z, delta], [delta.conj().T, z]])


@dataclass(frozen=True, eq=False)
class PotentialSlab:
    """Potential on [x_left, x_right] with unitary asymptotics m Delta_-, m Delta_+."""

    x_left: float
    x_right: float
    sampler: Callable[[float], np.ndarray]
    m: float
    delta_minus: np.ndarray
    delta_plus: np.ndarray
    symmetry: Symmetry = Symmetry.NONSYMMETRIC
    breakpoints: tuple = ()

    @property
    def d(self) -> int:
        return self.delta_minus.shape[0]

    def boundary_deviation(self) -> tuple[float, float]:
        dl = np.linalg.norm(self.sampler(self.x_left) - self.m * self.delta_minus, 2)
        dr = np.linalg.norm(self.sampler(self.x_right) - self.m * self.delta_plus, 2)
        return float(dl), float(dr)

    def check(self) -> None:
        dl, dr = self.boundary_deviation()
        if max(dl, dr) > SLAB_TOL * self.m:
            raise TruncationInadequate(
                f"potential at the slab ends deviates from its asymptotes by {dl:.3e} (left), "
                f"{dr:.3e} (right); limit is {SLAB_TOL * self.m:.1e}"
            )

    def floor(self) -> float:
        """Smallest reflection the oracle can resolve on this slab."""
        dl, dr = self.boundary_deviation()
        return (dl + dr) / self.m + RTOL

    def segments(self) -> list[tuple[float, float]]:
        cuts = [self.x_left] + sorted(b for b in self.breakpoints if self.x_left < b < self.x_right) + [self.x_right]
        return list(zip(cuts[:-1], cuts[1:]))


def uniform_slab(m: float, delta_minus: np.ndarray, x_left: float = -10.0, x_right: float = 10.0,
                 symmetry: Symmetry = Symmetry.NONSYMMETRIC) -> PotentialSlab:
    dm = np.atleast_2d(np.asarray(delta_minus, dtype=complex))
    const = m * dm
    return PotentialSlab(x_left, x_right, lambda x: const, m, dm, dm, Symmetry.parse(symmetry))


def soliton_slab(spec: ValidatedSpec, margin: float | None = None) -> PotentialSlab:
    """Slab around a constructed n-soliton potential; Delta_+ is Delta-bar_n."""
    from .asymptotics import decompose
    from .construct import gap_function

    dm = spec.delta_minus
    if spec.n == 0:
        return uniform_slab(spec.m, dm, symmetry=spec.symmetry)
    dec = decompose(spec)
    if margin is None:
        margin = 18.0 / float(np.min(spec.kappa))
    x_left = float(np.min(spec.positions) - margin)
    x_right = float(np.max(dec.X) + margin)
    return PotentialSlab(
        x_left, x_right, lambda x: gap_function(spec, x, check=False), spec.m, dm,
        dec.delta_bar[-1], spec.symmetry,
    )


def sampled_slab(x: np.ndarray, delta: np.ndarray, symmetry: Symmetry = Symmetry.NONSYMMETRIC) -> PotentialSlab:
    """Slab from a gap matrix tabulated on a grid (cubic-spline interpolated).

    m and Delta_+- are read off the end samples by polar decomposition.
    """
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta, dtype=complex)
    if x.size < 5:
        raise GridTooCoarse("sampled slab needs at least 5 grid points")
    d = delta.shape[-1]
    flat = delta.reshape(x.size, d * d)
    spline = CubicSpline(x, np.hstack([flat.real, flat.imag]), axis=0)

    def sampler(xx):
        v = spline(xx)
        return (v[: d * d] + 1j * v[d * d:]).reshape(d, d)

    u_left, p_left = scipy.linalg.polar(delta[0])
    u_right, p_right = scipy.linalg.polar(delta[-1])
    m = float(np.mean(np.linalg.eigvalsh(p_left)))
    return PotentialSlab(float(x[0]), float(x[-1]), sampler, m, u_left, u_right, Symmetry.parse(symmetry))


def bumped_slab(slab: PotentialSlab, amplitude: float, center: float = 0.0, width: float = 1.0) -> PotentialSlab:
    """Multiply the potential by 1 + amplitude * exp(-((x - center)/width)^2)."""
    base = slab.sampler

    def sampler(x):
        return base(x) * (1.0 + amplitude * np.exp(-(((x - center) / width) ** 2)))

    return PotentialSlab(slab.x_left, slab.x_right, sampler, slab.m, slab.delta_minus, slab.delta_plus,
                         slab.symmetry, slab.breakpoints)


def random_smooth_slab(d: int, rng: np.random.Generator, symmetry: Symmetry = Symmetry.NONSYMMETRIC,
                       m: float = 1.0, amplitude: float = 0.5, half_width: float = 10.0) -> PotentialSlab:
    """Uniform background plus a random Gaussian-shaped matrix bump that respects the class.

    The bump matrix C satisfies C = C^T (symmetric) or C = -C^T (antisymmetric),
    so Delta(x) keeps the class symmetry and the reflection is generically nonzero.
    """
    from .scattering_data import random_unitary

    symmetry = Symmetry.parse(symmetry)
    dm = random_unitary(d, rng, symmetry)
    c = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    if symmetry is Symmetry.SYMMETRIC:
        c = 0.5 * (c + c.T)
    elif symmetry is Symmetry.ANTISYMMETRIC:
        c = 0.5 * (c - c.T)
    c *= amplitude * m / np.linalg.norm(c, 2)
    center = rng.uniform(-2.0, 2.0)
    width = rng.uniform(0.5, 1.5)
    base = m * dm

    def sampler(x):
        return base + c * np.exp(-(((x - center) / width) ** 2))

    return PotentialSlab(-half_width, half_width, sampler, m, dm, dm, symmetry)


def box_slab(m: float, delta_minus: np.ndarray, height: float, start: float, stop: float,
             x_left: float = -10.0, x_right: float = 10.0) -> PotentialSlab:
    """m Delta_- times (1 + height) on [start, stop], m Delta_- elsewhere."""
    dm = np.atleast_2d(np.asarray(delta_minus, dtype=complex))

    def sampler(x):
        return m * dm * (1.0 + height if start <= x <= stop else 1.0)

    return PotentialSlab(x_left, x_right, sampler, m, dm, dm, Symmetry.NONSYMMETRIC, (start, stop))


def read_slab_csv(path, symmetry: Symmetry = Symmetry.NONSYMMETRIC) -> PotentialSlab:
    """Load a slab from CSV: x, then interleaved Re/Im of Delta row-major; extra columns are ignored."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    try:
        float(rows[0][0])
    except ValueError:
        header, rows = rows[0], rows[1:]
    else:
        header = None
    data = np.array([[float(v) for v in r] for r in rows])
    if header is not None:
        n_delta = sum(1 for h in header if h.startswith("delta_"))
    else:
        n_delta = data.shape[1] - 1
    d = int(round(np.sqrt(n_delta / 2)))
    if 2 * d * d != n_delta:
        raise ValueError(f"cannot infer d from {n_delta} gap columns")
    vals = data[:, 1: 1 + n_delta]
    delta = (vals[:, 0::2] + 1j * vals[:, 1::2]).reshape(-1, d, d)
    return sampled_slab(data[:, 0], delta, symmetry)


def psi(x: float, s: float, m: float, delta_inf: np.ndarray) -> np.ndarray:
    """Uniform-system basis (s I + M) exp(i k x sigma_3)."""
    d = delta_inf.shape[0]
    k = 0.5 * m * (s - 1.0 / s)
    phase = np.exp(1j * k * x * np.concatenate([np.ones(d), -np.ones(d)]))
    return (s * np.eye(2 * d) + m_matrix(delta_inf)) * phase[None, :]


def psi_inverse(x: float, s: float, m: float, delta_inf: np.ndarray) -> np.ndarray:
    d = delta_inf.shape[0]
    k = 0.5 * m * (s - 1.0 / s)
    phase = np.exp(-1j * k * x * np.concatenate([np.ones(d), -np.ones(d)]))
    return phase[:, None] * (s * np.eye(2 * d) - m_matrix(delta_inf)) / (s * s - 1.0)


def _check_s(s: float, guard: float) -> None:
    if s == 0:
        raise ZeroArgument("s = 0 is not a scattering point")
    if abs(s - 1.0) <= guard or abs(s + 1.0) <= guard:
        raise NearBandEdge(f"s={s} lies within the guard band {guard} of +-1")


def _propagate(slab: PotentialSlab, s: float, z0: np.ndarray, x_from: float, x_to: float,
               probes=None, rtol=RTOL, atol=ATOL):
    """Integrate the stripped system; returns Z at x_to (and at probes, if any)."""
    d = slab.d
    eps = 0.5 * slab.m * (s + 1.0 / s)
    k = 0.5 * slab.m * (s - 1.0 / s)
    sig = np.concatenate([np.ones(d), -np.ones(d)])
    n2 = 2 * d

    def rhs(x, y):
        z = y.reshape(n2, n2)
        delta = slab.sampler(x)
        mz = np.empty_like(z)
        mz[:d] = delta @ z[d:]
        mz[d:] = delta.conj().T @ z[:d]
        dz = 1j * sig[:, None] * (eps * z - mz) - 1j * k * z * sig[None, :]
        return dz.ravel()

    forward = x_to >= x_from
    segs = slab.segments() if forward else [(b, a) for a, b in reversed(slab.segments())]
    segs = [(max(a, x_from), min(b, x_to)) if forward else (min(a, x_from), max(b, x_to)) for a, b in segs]
    segs = [(a, b) for a, b in segs if (b > a if forward else b < a)]
    probes = None if probes is None else np.asarray(probes, dtype=float)
    probe_vals = {}
    y = z0.ravel().astype(complex)
    for a, b in segs:
        t_eval = None
        if probes is not None:
            lo, hi = min(a, b), max(a, b)
            inside = probes[(probes >= lo) & (probes <= hi)]
            t_eval = np.sort(inside) if forward else np.sort(inside)[::-1]
            if t_eval.size == 0:
                t_eval = None
        sol = solve_ivp(rhs, (a, b), y, method=METHOD, rtol=rtol, atol=atol, t_eval=t_eval)
        if not sol.success:
            raise RuntimeError(f"ZS integration failed at s={s}: {sol.message}")
        if t_eval is not None:
            for i, xp in enumerate(sol.t):
                probe_vals[float(xp)] = sol.y[:, i].reshape(n2, n2)
        y = sol.y[:, -1] if t_eval is None else _finish(rhs, sol, b, rtol, atol)
    z_end = y.reshape(n2, n2)
    return z_end, probe_vals


def _finish(rhs, sol, b, rtol, atol):
    # t_eval stops short of the segment end when the last probe is interior
    if sol.t[-1] == b:
        return sol.y[:, -1]
    tail = solve_ivp(rhs, (sol.t[-1], b), sol.y[:, -1], method=METHOD, rtol=rtol, atol=atol)
    return tail.y[:, -1]


def integrate_zs(slab: PotentialSlab, s: float, direction: str = "lr", guard: float = GUARD_BAND,
                 rtol: float = RTOL, atol: float = ATOL) -> np.ndarray:
    """Fundamental solution at the far end of the slab.

    ``"lr"``: start from Psi_-(x_left) and return Y_-(x_right).
    ``"rl"``: start from Psi_+(x_right) and return Y_+(x_left).
    """
    s = float(s)
    _check_s(s, guard)
    slab.check()
    k = 0.5 * slab.m * (s - 1.0 / s)
    d = slab.d
    sig = np.concatenate([np.ones(d), -np.ones(d)])
    if direction == "lr":
        z0 = s * np.eye(2 * d) + m_matrix(slab.delta_minus)
        z, _ = _propagate(slab, s, z0, slab.x_left, slab.x_right, rtol=rtol, atol=atol)
        x_end = slab.x_right
    elif direction == "rl":
        z0 = s * np.eye(2 * d) + m_matrix(slab.delta_plus)
        z, _ = _propagate(slab, s, z0, slab.x_right, slab.x_left, rtol=rtol, atol=atol)
        x_end = slab.x_left
    else:
        raise ValueError(f"direction must be 'lr' or 'rl', got {direction!r}")
    return z * np.exp(1j * k * x_end * sig)[None, :]


@dataclass(frozen=True, eq=False)
class ScatteringSample:
    s: float
    S: np.ndarray
    A: np.ndarray
    B: np.ndarray
    T: np.ndarray
    R: np.ndarray
    residuals: dict
    floor: float

    @property
    def r_norm(self) -> float:
        return float(np.linalg.norm(self.R, 2))

    @property
    def below_floor(self) -> bool:
        return self.r_norm <= self.floor


def identity_residuals(S: np.ndarray, delta_minus: np.ndarray, delta_plus: np.ndarray,
                       symmetry: Symmetry) -> dict:
    """Residuals of the S-matrix identities for real s."""
    d = delta_minus.shape[0]
    dm, dp = delta_minus, delta_plus
    A, B = S[:d, :d], S[d:, :d]
    # the right column blocks carry A and B at 1/s
    A_inv_s = dm @ S[d:, d:] @ dp.conj().T
    B_inv_s = dm.conj().T @ S[:d, d:] @ dp.conj().T
    T = np.linalg.inv(A)
    R = B @ T
    s3 = sigma3(d)
    eye = np.eye(d)
    out = {
        "det": abs(np.linalg.det(S) - 1.0),
        "sigma3": np.linalg.norm(S.conj().T @ s3 @ S - s3, 2),
        "flux": np.linalg.norm(T.conj().T @ T + R.conj().T @ R - eye, 2),
        "inv15": np.linalg.norm(A.conj().T @ A - B.conj().T @ B - eye, 2),
        "inv2": np.linalg.norm(A.conj().T @ dm @ B_inv_s - B.conj().T @ dm.conj().T @ A_inv_s, 2),
        "inv32": np.linalg.norm(A @ A.conj().T - dm @ B_inv_s @ B_inv_s.conj().T @ dm.conj().T - eye, 2),
        "inv42": np.linalg.norm(A @ B.conj().T - dm @ B_inv_s @ A_inv_s.conj().T @ dm, 2),
    }
    if symmetry is Symmetry.SYMMETRIC:
        out["r_symmetry"] = np.linalg.norm(R - R.T, 2)
    elif symmetry is Symmetry.ANTISYMMETRIC:
        out["r_symmetry"] = np.linalg.norm(R + R.T, 2)
    tau = tau_matrix(d, symmetry)
    if tau is not None:
        out["tau"] = np.linalg.norm(tau @ S.conj() - S @ tau, 2)
    return {k: float(v) for k, v in out.items()}


def scattering_matrix(slab: PotentialSlab, s: float, direction: str = "lr", guard: float = GUARD_BAND,
                      rtol: float = RTOL, atol: float = ATOL) -> ScatteringSample:
    """S(s) defined by Y_+ = Y_- S, with its blocks and identity residuals."""
    s = float(s)
    y_end = integrate_zs(slab, s, direction, guard, rtol, atol)
    if direction == "lr":
        s_inv = psi_inverse(slab.x_right, s, slab.m, slab.delta_plus) @ y_end
        S = np.linalg.inv(s_inv)
    else:
        S = psi_inverse(slab.x_left, s, slab.m, slab.delta_minus) @ y_end
    d = slab.d
    A, B = S[:d, :d], S[d:, :d]
    T = np.linalg.inv(A)
    R = B @ T
    res = identity_residuals(S, slab.delta_minus, slab.delta_plus, slab.symmetry)
    return ScatteringSample(s, S, A, B, T, R, res, slab.floor())


def mpm_residual(slab: PotentialSlab, s: float, guard: float = GUARD_BAND) -> float:
    """|| S(s) M_+ - M_- S(1/s) ||, two independent integrations."""
    a = scattering_matrix(slab, s, guard=guard).S
    b = scattering_matrix(slab, 1.0 / s, guard=guard).S
    return float(np.linalg.norm(a @ m_matrix(slab.delta_plus) - m_matrix(slab.delta_minus) @ b, 2))


def s_grid(s_min: float = 0.2, s_max: float = 5.0, count: int = 41, guard: float = GUARD_BAND) -> np.ndarray:
    """Scan points on [-s_max, -s_min] u [s_min, s_max], guard bands around +-1 removed."""
    n_neg = count // 2
    pos = np.linspace(s_min, s_max, count - n_neg)
    neg = -np.linspace(s_min, s_max, n_neg)[::-1]
    grid = np.concatenate([neg, pos])
    keep = (np.abs(grid - 1.0) > guard) & (np.abs(grid + 1.0) > guard) & (grid != 0)
    return grid[keep]


@dataclass(frozen=True, eq=False)
class ScanReport:
    samples: list = field(default_factory=list)

    @property
    def max_r(self) -> float:
        return max((smp.r_norm for smp in self.samples), default=0.0)

    @property
    def floor(self) -> float:
        return max((smp.floor for smp in self.samples), default=0.0)

    def max_residual(self, key: str) -> float:
        vals = [smp.residuals[key] for smp in self.samples if key in smp.residuals]
        return max(vals, default=0.0)

    def rows(self) -> list[dict]:
        out = []
        for smp in self.samples:
            row = {"s": smp.s, "r_norm": smp.r_norm, "flux": smp.residuals["flux"], "det": smp.residuals["det"]}
            row.update({k: v for k, v in smp.residuals.items() if k not in ("flux", "det")})
            row["det_A_phase"] = float(np.angle(np.linalg.det(smp.A)))
            out.append(row)
        return out

    def summary(self) -> str:
        if self.max_r <= self.floor:
            return f"max |R| <= {self.floor:.2e} (truncation floor)"
        return f"max |R| = {self.max_r:.3e}"


def reflection_scan(slab: PotentialSlab, s_values: Sequence[float], threads: int = 1,
                    guard: float = GUARD_BAND) -> ScanReport:
    slab.check()
    s_values = [float(s) for s in s_values]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(lambda s: scattering_matrix(slab, s, guard=guard), s_values))
    else:
        samples = [scattering_matrix(slab, s, guard=guard) for s in s_values]
    return ScanReport(samples)


def zs_residual(x: np.ndarray, w: np.ndarray, potential, epsilon: float) -> np.ndarray:
    """Centered-difference residual of eps w = L w at the interior grid points.

    ``w`` is (N, 2d) or (N, 2d, k); ``potential`` is a slab, a callable
    x -> Delta(x), or an (N, d, d) array sampled on ``x``.  Returns the
    per-point norm, shape (N - 2,).
    """
    x = np.asarray(x, dtype=float)
    if x.size < 5:
        raise GridTooCoarse("need at least 5 grid points")
    h = np.diff(x)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0):
        raise GridTooCoarse("grid must be uniform")
    h = h[0]
    w = np.asarray(w, dtype=complex)
    if w.ndim == 2:
        w = w[:, :, None]
    if isinstance(potential, PotentialSlab):
        delta = np.stack([potential.sampler(xx) for xx in x])
    elif callable(potential):
        delta = np.asarray(potential(x))
        if delta.ndim == 2:
            delta = np.stack([potential(xx) for xx in x])
    else:
        delta = np.asarray(potential, dtype=complex)
    d = delta.shape[-1]
    dw = (w[2:] - w[:-2]) / (2 * h)
    wi = w[1:-1]
    di = delta[1:-1]
    u, v = wi[:, :d], wi[:, d:]
    top = -1j * dw[:, :d] + di @ v - epsilon * u
    bot = 1j * dw[:, d:] + np.conj(np.swapaxes(di, 1, 2)) @ u - epsilon * v
    res = np.concatenate([top, bot], axis=1)
    return np.linalg.norm(res.reshape(res.shape[0], -1), axis=1)


def wronskian_check(slab: PotentialSlab, s: float, probes: Sequence[float], guard: float = GUARD_BAND) -> dict:
    """Spread of det Y and of J = Y^H sigma_3 Y over probe points, plus their expected values."""
    s = float(s)
    _check_s(s, guard)
    slab.check()
    d = slab.d
    k = 0.5 * slab.m * (s - 1.0 / s)
    sig = np.concatenate([np.ones(d), -np.ones(d)])
    z0 = s * np.eye(2 * d) + m_matrix(slab.delta_minus)
    _, vals = _propagate(slab, s, z0, slab.x_left, slab.x_right, probes=probes)
    s3 = sigma3(d)
    dets, js = [], []
    for xp, z in sorted(vals.items()):
        y = z * np.exp(1j * k * xp * sig)[None, :]
        dets.append(np.linalg.det(y))
        js.append(y.conj().T @ s3 @ y)
    dets = np.array(dets)
    js = np.array(js)
    w_exact = (s * s - 1.0) ** d
    j_exact = (s * s - 1.0) * s3
    return {
        "det_spread": float(np.max(np.abs(dets - dets[0]))),
        "j_spread": float(max(np.linalg.norm(j - js[0], 2) for j in js)),
        "det_error": float(np.max(np.abs(dets - w_exact))),
        "j_error": float(max(np.linalg.norm(j - j_exact, 2) for j in js)),
        "det": dets,
        "J": js,
    }
