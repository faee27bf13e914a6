"""Closed-form reflectionless n-soliton solutions.

With e_j(x) = sqrt(kappa_j) exp(kappa_j (x - x_j)) and the Gram matrix
G = E Q E / m (E = diag(e_j)), the bound states are H = -W (I + G)^-1 and the
gap function is

    Delta(x) = m Delta_- - 2i P E (I + G)^-1 E S^-1 P^H Delta_-.

The e_j over- or underflow far from the solitons, so every formula is
evaluated in a balanced form.  Split E = E_s E_b with E_s = min(E, 1) and
E_b = max(E, 1); then

    I + G = E_b N E_b,   N = E_b^-2 + E_s Q E_s / m,

and N has bounded entries for every x.  All outputs are written in terms of
E_s, E_b^-1 and N^-1 only.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IllConditionedGram, ZeroArgument
from .scattering_data import ValidatedSpec

COND_LIMIT = 1e12


def uniformize(s: complex, m: float = 1.0) -> tuple[complex, complex]:
    """Energy and momentum of the uniformization variable: eps = m(s + 1/s)/2, k = m(s - 1/s)/2."""
    s = complex(s)
    if s == 0:
        raise ZeroArgument("uniformization variable s must be nonzero")
    return 0.5 * m * (s + 1.0 / s), 0.5 * m * (s - 1.0 / s)


def _grid(x):
    arr = np.asarray(x, dtype=float)
    return np.atleast_1d(arr).ravel(), arr.ndim == 0


def log_e(spec: ValidatedSpec, x) -> np.ndarray:
    """log e_j(x) on a grid, shape (len(x), n)."""
    xs, _ = _grid(x)
    return 0.5 * np.log(spec.kappa)[None, :] + spec.kappa[None, :] * (xs[:, None] - spec.positions[None, :])


@dataclass
class _Balanced:
    e_small: np.ndarray  # (N, n)   min(e, 1)
    e_big_inv: np.ndarray  # (N, n)   1 / max(e, 1)
    n_inv: np.ndarray  # (N, n, n)
    cond: np.ndarray  # (N,)   1-norm condition number of N


def _balanced(spec: ValidatedSpec, xs: np.ndarray, check: bool) -> _Balanced:
    le = log_e(spec, xs)
    es = np.exp(np.minimum(le, 0.0))
    ebi = np.exp(-np.maximum(le, 0.0))
    n = spec.n
    mat = es[:, :, None] * (spec.Q / spec.m)[None] * es[:, None, :]
    idx = np.arange(n)
    mat[:, idx, idx] += ebi**2
    inv = np.linalg.inv(mat)
    cond = np.abs(mat).sum(axis=1).max(axis=1) * np.abs(inv).sum(axis=1).max(axis=1)
    if check and np.any(~np.isfinite(cond) | (cond > COND_LIMIT)):
        worst = int(np.nanargmax(np.where(np.isfinite(cond), cond, np.inf)))
        raise IllConditionedGram(
            f"Gram system condition number {cond[worst]:.3e} at x={xs[worst]:.6g} exceeds {COND_LIMIT:.0e}"
        )
    return _Balanced(es, ebi, inv, cond)


def w_hat(spec: ValidatedSpec) -> np.ndarray:
    """W(x) E(x)^-1: the x-independent 2d x n matrix with columns (p_j ; s_j Delta_-^H p_j)."""
    return np.vstack([spec.P, spec.delta_minus.conj().T @ spec.P * spec.s[None, :]])


def w_matrix(spec: ValidatedSpec, x) -> np.ndarray:
    xs, scalar = _grid(x)
    out = w_hat(spec)[None] * np.exp(log_e(spec, xs))[:, None, :]
    return out[0] if scalar else out


def gram_matrix(spec: ValidatedSpec, x) -> np.ndarray:
    """G(x)_ij = (2i/m) e_i e_j p_i^H p_j / (s_i - 1/s_j); raw (unbalanced) values."""
    xs, scalar = _grid(x)
    le = log_e(spec, xs)
    out = np.exp(le[:, :, None] + le[:, None, :]) * (spec.Q / spec.m)[None]
    return out[0] if scalar else out


def condition_number(spec: ValidatedSpec, x) -> np.ndarray:
    """1-norm condition number of the balanced Gram system."""
    xs, scalar = _grid(x)
    if spec.n == 0:
        c = np.ones_like(xs)
    else:
        c = _balanced(spec, xs, check=False).cond
    return c[0] if scalar else c


def _he(spec: ValidatedSpec, b: _Balanced) -> np.ndarray:
    """H(x) E(x), shape (N, 2d, n); bounded everywhere."""
    z = b.e_small[:, :, None] * b.n_inv * b.e_small[:, None, :]
    return -np.einsum("ak,nkl->nal", w_hat(spec), z)


def bound_states(spec: ValidatedSpec, x, check: bool = True) -> np.ndarray:
    """Orthonormal bound states H(x) = -W (I + G)^-1, shape (2d, n) or (N, 2d, n)."""
    xs, scalar = _grid(x)
    if spec.n == 0:
        out = np.zeros((xs.size, 2 * spec.d, 0), dtype=complex)
    else:
        b = _balanced(spec, xs, check)
        z = b.e_small[:, :, None] * b.n_inv * b.e_big_inv[:, None, :]
        out = -np.einsum("ak,nkl->nal", w_hat(spec), z)
    return out[0] if scalar else out


def gap_function(spec: ValidatedSpec, x, check: bool = True) -> np.ndarray:
    """Delta(x), shape (d, d) or (N, d, d)."""
    xs, scalar = _grid(x)
    base = spec.m * spec.delta_minus
    if spec.n == 0:
        out = np.broadcast_to(base, (xs.size, spec.d, spec.d)).copy()
    else:
        b = _balanced(spec, xs, check)
        z = b.e_small[:, :, None] * b.n_inv * b.e_small[:, None, :]
        right = (spec.P.conj().T / spec.s[:, None]) @ spec.delta_minus
        out = base[None] - 2j * np.einsum("ak,nkl,lb->nab", spec.P, z, right)
    return out[0] if scalar else out


def scattering_state(spec: ValidatedSpec, x, s: float, check: bool = True) -> np.ndarray:
    """Scattering eigenfunctions F(x, s) for real s, shape (2d, d) or (N, 2d, d)."""
    s = float(s)
    if s == 0:
        raise ZeroArgument("scattering state needs s != 0")
    _, k = uniformize(s, spec.m)
    xs, scalar = _grid(x)
    out = scattering_profile(spec, xs, s, check) * np.exp(1j * k.real * xs)[:, None, None]
    return out[0] if scalar else out


def scattering_profile(spec: ValidatedSpec, x, s: float, check: bool = True) -> np.ndarray:
    """Phase-stripped F(x, s) exp(-i k(s) x)."""
    s = float(s)
    if s == 0:
        raise ZeroArgument("scattering state needs s != 0")
    xs, scalar = _grid(x)
    d = spec.d
    top = np.vstack([np.eye(d), spec.delta_minus.conj().T / s]).astype(complex)
    out = np.broadcast_to(top, (xs.size, 2 * d, d)).copy()
    if spec.n:
        he = _he(spec, _balanced(spec, xs, check))
        coef = (spec.P.conj().T / (spec.s - s)[:, None])
        out += (2j / spec.m) * np.einsum("nal,lb->nab", he, coef)
    return out[0] if scalar else out


def kernel_K(spec: ValidatedSpec, x: float, y: float, check: bool = True) -> np.ndarray:
    """GLM kernel K(x, y) = H(x) W(y)^H for y <= x (y = x is the limit from below)."""
    x = float(x)
    y = float(y)
    if y > x:
        raise ValueError("kernel_K is defined for y <= x")
    if spec.n == 0:
        return np.zeros((2 * spec.d, 2 * spec.d), dtype=complex)
    b = _balanced(spec, np.array([x]), check)
    lex = log_e(spec, x)[0]
    ley = log_e(spec, y)[0]
    ratio = np.exp(ley - np.maximum(lex, 0.0))  # E_b(x)^-1 E(y), bounded for y <= x
    z = b.e_small[0][:, None] * b.n_inv[0] * ratio[None, :]
    wh = w_hat(spec)
    return -(wh @ z) @ wh.conj().T


@dataclass(frozen=True, eq=False)
class FieldSample:
    """Gap matrix and bound states sampled on a grid."""

    x: np.ndarray
    delta: np.ndarray  # (N, d, d)
    bound: np.ndarray  # (N, 2d, n)


def sample_field(spec: ValidatedSpec, x) -> FieldSample:
    xs, _ = _grid(x)
    return FieldSample(xs, gap_function(spec, xs), bound_states(spec, xs))
