"""Isolated-soliton approximation of n-soliton solutions.

When x_1 << x_2 << ... << x_n, the solution near soliton j looks like a
one-soliton profile at the shifted position X_j = x_j + y_j, dressed by the
constant backgrounds Delta-bar_{j-1} (left) and Delta-bar_j (right).  All
quantities follow from determinants of the leading blocks Q_j of Q.

Soliton indices ``j`` in this module are 1-based and count solitons from the
left after sorting by position.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularSubmatrix
from .scattering_data import ValidatedSpec

SEPARATION_WARN = 10.0


# --- determinant utilities -------------------------------------------------

def minor(a: np.ndarray, row: int, col: int) -> complex:
    sub = np.delete(np.delete(a, row, axis=0), col, axis=1)
    if sub.size == 0:
        return 1.0 + 0j
    return complex(np.linalg.det(sub))


def cofactor_matrix(a: np.ndarray) -> np.ndarray:
    """Adjugate C with A C = C A = det(A) I, built from explicit minors."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    c = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            c[i, j] = (-1) ** (i + j) * minor(a, j, i)
    return c


def mixed_determinant(rows: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """det of the j x j array whose first j-1 rows are ``rows`` and whose last row holds vectors.

    ``rows`` is (j-1) x j, ``vectors`` is d x j (column l is the entry in
    position l of the last row).  Laplace expansion along the last row gives a
    d-vector.
    """
    rows = np.asarray(rows, dtype=complex)
    j = vectors.shape[1]
    out = np.zeros(vectors.shape[0], dtype=complex)
    for l in range(j):
        sub = np.delete(rows, l, axis=1)
        det = complex(np.linalg.det(sub)) if sub.size else 1.0
        out += (-1) ** (j - 1 + l) * det * vectors[:, l]
    return out


def sherman_morrison_sides(a: np.ndarray, x: np.ndarray, y: np.ndarray) -> tuple[complex, complex]:
    """(1 + y^H A^-1 x, det(A + x y^H) / det A)."""
    lhs = 1.0 + np.vdot(y, np.linalg.solve(a, x))
    rhs = np.linalg.det(a + np.outer(x, y.conj())) / np.linalg.det(a)
    return complex(lhs), complex(rhs)


def _leading_block_checked(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = a[:-1, :-1]
    if b.size and np.linalg.cond(b) > 1e14:
        raise SingularSubmatrix("leading (n-1) x (n-1) block is numerically singular")
    if np.linalg.cond(a) > 1e14:
        raise SingularSubmatrix("matrix is numerically singular")
    return b


def jacobi_submatrix_inverse(a: np.ndarray) -> np.ndarray:
    """Rank-one matrix equal to A^-1 - diag(B^-1, 0), B being A without its last row and column.

    Evaluated from cofactors only: C[:, n] C[n, :] / (det A det B).
    """
    a = np.asarray(a, dtype=complex)
    _leading_block_checked(a)
    n = a.shape[0]
    c = cofactor_matrix(a)
    det_a = np.linalg.det(a)
    det_b = c[n - 1, n - 1]
    return np.outer(c[:, n - 1], c[n - 1, :]) / (det_a * det_b)


def jacobi_block_inverse(a: np.ndarray) -> np.ndarray:
    """B^-1 from cofactors of A: [B^-1]_ij = (C_nn C_ij - C_in C_nj) / (det A det B)."""
    a = np.asarray(a, dtype=complex)
    _leading_block_checked(a)
    n = a.shape[0]
    c = cofactor_matrix(a)
    det_a = np.linalg.det(a)
    det_b = c[n - 1, n - 1]
    inner = c[n - 1, n - 1] * c[:-1, :-1] - np.outer(c[:-1, n - 1], c[n - 1, :-1])
    return inner / (det_a * det_b)


# --- one-soliton building blocks ------------------------------------------

def f_basic(x, theta: float, m: float = 1.0):
    kappa = m * np.sin(theta)
    return -0.5 * np.sqrt(kappa) / np.cosh(kappa * np.asarray(x, dtype=float))


def delta_basic(x, theta: float, m: float = 1.0):
    kappa = m * np.sin(theta)
    return m * np.exp(-1j * theta) * (np.cos(theta) - 1j * np.sin(theta) * np.tanh(kappa * np.asarray(x, dtype=float)))


# --- decomposition ---------------------------------------------------------

def sort_by_position(spec: ValidatedSpec) -> tuple[ValidatedSpec, np.ndarray]:
    order = np.argsort(spec.positions, kind="stable")
    sols = tuple(spec.solitons[i] for i in order)
    return ValidatedSpec(spec.background, sols, spec.t), order


def q_matrix(spec: ValidatedSpec, j: int) -> np.ndarray:
    """Leading j x j block of Q for the position-sorted spec."""
    if not 0 <= j <= spec.n:
        raise IndexError(f"j={j} outside 0..{spec.n}")
    ordered, _ = sort_by_position(spec)
    return ordered.Q[:j, :j]


def _dets(ordered: ValidatedSpec) -> np.ndarray:
    """det Q_0 .. det Q_n (real and positive)."""
    out = [1.0]
    for j in range(1, ordered.n + 1):
        out.append(float(np.linalg.det(ordered.Q[:j, :j]).real))
    return np.array(out)


def position_shifts(spec: ValidatedSpec) -> np.ndarray:
    """y_1..y_n (sorted order) from exp(-2 kappa_j y_j) = sin(theta_j) det Q_j / det Q_{j-1}.

    The determinant ratio is the Schur complement 1 / [Q_j^-1]_jj.
    """
    ordered, _ = sort_by_position(spec)
    y = np.zeros(ordered.n)
    for j in range(2, ordered.n + 1):
        unit = np.zeros(j)
        unit[-1] = 1.0
        schur = 1.0 / np.linalg.solve(ordered.Q[:j, :j], unit)[-1].real
        y[j - 1] = -np.log(np.sin(ordered.theta[j - 1]) * schur) / (2.0 * ordered.kappa[j - 1])
    return np.where((y < 0) & (y > -1e-12), 0.0, y)


def shift_determinant_ratio(spec: ValidatedSpec) -> np.ndarray:
    """sin(theta_j) det Q_j / det Q_{j-1} from explicit determinants (cross-check of the shifts)."""
    ordered, _ = sort_by_position(spec)
    dets = _dets(ordered)
    return np.sin(ordered.theta) * dets[1:] / dets[:-1]


def coefficient_vectors(spec: ValidatedSpec, j: int, method: str = "solve") -> tuple[np.ndarray, np.ndarray]:
    """(q_hat_j, r_hat_j) for the j-th soliton from the left.

    ``method="cofactor"`` evaluates the mixed determinants literally (Laplace
    expansion along the vector row).  ``"solve"`` uses the same expansion in
    the form C_jl = det Q_j [Q_j^-1]_lj, which turns the prefactor into
    1 / sqrt(sin theta_j [Q_j^-1]_jj) and avoids forming determinants; it is
    the default because it loses fewer digits when Q is poorly conditioned.
    """
    ordered, _ = sort_by_position(spec)
    if not 1 <= j <= ordered.n:
        raise IndexError(f"j={j} outside 1..{ordered.n}")
    p = ordered.P
    r_vecs = ordered.delta_minus.conj().T @ p * ordered.s[None, :]
    if j == 1:
        return p[:, 0].copy(), r_vecs[:, 0].copy()
    qj = ordered.Q[:j, :j]
    if method == "solve":
        unit = np.zeros(j)
        unit[-1] = 1.0
        z = np.linalg.solve(qj, unit)
        norm = np.sqrt(np.sin(ordered.theta[j - 1]) * z[-1].real)
        return p[:, :j] @ z / norm, r_vecs[:, :j] @ z / norm
    if method != "cofactor":
        raise ValueError(f"unknown method {method!r}")
    det_j = np.linalg.det(qj).real
    det_prev = np.linalg.det(ordered.Q[: j - 1, : j - 1]).real
    norm = np.sqrt(np.sin(ordered.theta[j - 1]) * det_prev * det_j)
    q_tilde = qj[:-1, :]
    q_hat = mixed_determinant(q_tilde, p[:, :j]) / norm
    r_hat = mixed_determinant(q_tilde, r_vecs[:, :j]) / norm
    return q_hat, r_hat


def intermediate_backgrounds(spec: ValidatedSpec, form: str = "gram") -> list[np.ndarray]:
    """Delta-bar_0 .. Delta-bar_n.

    ``form="gram"`` uses Delta_- - 2i P_j Q_j^-1 S_j^-1 P_j^H Delta_-,
    ``form="vectors"`` the sum over sin(theta_k) q_k r_k^H.
    """
    ordered, _ = sort_by_position(spec)
    dm = ordered.delta_minus
    out = [dm.copy()]
    if form == "gram":
        for j in range(1, ordered.n + 1):
            pj = ordered.P[:, :j]
            right = (pj.conj().T / ordered.s[:j, None]) @ dm
            out.append(dm - 2j * pj @ np.linalg.solve(ordered.Q[:j, :j], right))
    elif form == "vectors":
        acc = dm.copy()
        for j in range(1, ordered.n + 1):
            q, r = coefficient_vectors(ordered, j)
            acc = acc - 2j * np.sin(ordered.theta[j - 1]) * np.outer(q, r.conj())
            out.append(acc.copy())
    else:
        raise ValueError(f"unknown form {form!r}")
    return out


def rotation_factors(theta: float, q: np.ndarray, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """U = exp(-i theta q q^H), V = exp(-i theta r r^H) via the rank-one closed form."""
    d = q.shape[0]
    phase = np.exp(-1j * theta) - 1.0
    return np.eye(d) + phase * np.outer(q, q.conj()), np.eye(d) + phase * np.outer(r, r.conj())


@dataclass(frozen=True, eq=False)
class AsymptoticDecomposition:
    spec: ValidatedSpec  # position-sorted
    order: np.ndarray  # sorted index -> original index
    shifts: np.ndarray
    q_hat: np.ndarray  # (n, d)
    r_hat: np.ndarray  # (n, d)
    delta_bar: list
    separation_decay: float  # kappa_min * minimal spacing of the effective positions
    warnings: list = field(default_factory=list)

    @property
    def X(self) -> np.ndarray:
        return self.spec.positions + self.shifts

    def window(self, j: int) -> tuple[float, float]:
        """Half-way points to the neighbouring solitons (ends mirrored)."""
        X = self.X
        n = X.size
        left_gap = X[j - 1] - X[j - 2] if j > 1 else None
        right_gap = X[j] - X[j - 1] if j < n else None
        gaps = [g for g in (left_gap, right_gap) if g is not None]
        default = min(gaps) if gaps else 40.0 / self.spec.kappa[j - 1]
        lo = X[j - 1] - 0.5 * (left_gap if left_gap is not None else default)
        hi = X[j - 1] + 0.5 * (right_gap if right_gap is not None else default)
        return lo, hi


def decompose(spec: ValidatedSpec) -> AsymptoticDecomposition:
    ordered, order = sort_by_position(spec)
    n, d = ordered.n, ordered.d
    q_hat = np.zeros((n, d), dtype=complex)
    r_hat = np.zeros((n, d), dtype=complex)
    for j in range(1, n + 1):
        q_hat[j - 1], r_hat[j - 1] = coefficient_vectors(ordered, j)
    shifts = position_shifts(ordered)
    X = ordered.positions + shifts
    if n > 1:
        sep = float(np.min(np.diff(X)) * np.min(ordered.kappa))
    else:
        sep = float("inf")
    notes = []
    if sep < SEPARATION_WARN:
        notes.append(
            f"kappa_min * separation = {sep:.3g} < {SEPARATION_WARN:g}: isolated-soliton formulas are inaccurate"
        )
    return AsymptoticDecomposition(
        ordered, order, shifts, q_hat, r_hat, intermediate_backgrounds(ordered), sep, notes
    )


def approx_profile(spec_or_decomp, j: int, x, side: str = "left"):
    """One-soliton approximation of (h_j(x), Delta(x)) near the j-th soliton.

    ``side`` picks which of the two equivalent products is used for Delta:
    ``"left"`` is Delta-bar_{j-1} (m(I - r r^H) + Delta_basic r r^H),
    ``"right"`` is (m(I - q q^H) + Delta_basic q q^H) Delta-bar_{j-1}.
    Shapes follow x: (2d,), (d, d) for scalar x, with a leading grid axis otherwise.
    """
    dec = spec_or_decomp if isinstance(spec_or_decomp, AsymptoticDecomposition) else decompose(spec_or_decomp)
    if dec.warnings:
        warnings.warn(dec.warnings[0], RuntimeWarning, stacklevel=2)
    sp = dec.spec
    m, d = sp.m, sp.d
    theta = sp.theta[j - 1]
    q, r = dec.q_hat[j - 1], dec.r_hat[j - 1]
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs).ravel()
    shift = xs - dec.X[j - 1]
    h = f_basic(shift, theta, m)[:, None] * np.concatenate([q, r])[None, :]
    db = delta_basic(shift, theta, m)[:, None, None]
    bar = dec.delta_bar[j - 1]
    if side == "left":
        proj = np.outer(r, r.conj())
        delta = bar[None] @ (m * (np.eye(d) - proj)[None] + db * proj[None])
    elif side == "right":
        proj = np.outer(q, q.conj())
        delta = (m * (np.eye(d) - proj)[None] + db * proj[None]) @ bar[None]
    else:
        raise ValueError(f"unknown side {side!r}")
    if scalar:
        return h[0], delta[0]
    return h, delta


def recurrence_residuals(dec: AsymptoticDecomposition) -> dict:
    """Largest residual, over j, of each relation between consecutive backgrounds."""
    sp = dec.spec
    bars = dec.delta_bar
    vec_form = intermediate_backgrounds(sp, form="vectors")
    out = {"eigen_right": 0.0, "eigen_left": 0.0, "additive": 0.0, "rotation": 0.0, "forms": 0.0}
    for j in range(1, sp.n + 1):
        s = sp.s[j - 1]
        q, r = dec.q_hat[j - 1], dec.r_hat[j - 1]
        cur, prev = bars[j], bars[j - 1]
        u, v = rotation_factors(sp.theta[j - 1], q, r)
        out["eigen_right"] = max(out["eigen_right"], np.linalg.norm(cur @ r - q / s))
        out["eigen_left"] = max(out["eigen_left"], np.linalg.norm(prev @ r - s * q))
        out["additive"] = max(out["additive"], np.linalg.norm(prev - cur - (s - 1 / s) * np.outer(q, r.conj()), 2))
        rot = max(np.linalg.norm(cur - u @ u @ prev, 2), np.linalg.norm(cur - prev @ v @ v, 2),
                  np.linalg.norm(cur - u @ prev @ v, 2))
        out["rotation"] = max(out["rotation"], rot)
        out["forms"] = max(out["forms"], np.linalg.norm(cur - vec_form[j], 2))
    return {k: float(v) for k, v in out.items()}


def window_errors(dec: AsymptoticDecomposition, points: int = 401) -> np.ndarray:
    """Per soliton: max over its window of |approx Delta - exact Delta| (spectral norm)."""
    from .construct import gap_function

    errs = np.zeros(dec.spec.n)
    for j in range(1, dec.spec.n + 1):
        lo, hi = dec.window(j)
        x = np.linspace(lo, hi, points)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            _, approx = approx_profile(dec, j, x)
        exact = gap_function(dec.spec, x)
        errs[j - 1] = np.max(np.linalg.norm(approx - exact, ord=2, axis=(1, 2)))
    return errs


def place_effective(spec: ValidatedSpec, X) -> ValidatedSpec:
    """Spec whose effective positions x_j + y_j equal the increasing sequence X.

    The shifts y_j depend only on angles and coefficient vectors, so the
    bare positions follow directly; the soliton order is kept as given.
    """
    X = np.asarray(X, dtype=float)
    if X.shape != (spec.n,) or np.any(np.diff(X) <= 0):
        raise ValueError("X must be strictly increasing with one entry per soliton")
    base = spec.with_positions(np.arange(spec.n, dtype=float))
    x = X - position_shifts(base)
    if np.any(np.diff(x) <= 0):
        raise ValueError("requested effective positions are too close to keep the soliton order")
    return spec.with_positions(x)
