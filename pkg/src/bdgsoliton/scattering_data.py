"""Discrete scattering data and boundary conditions.

A reflectionless solution is fixed by the bulk gap ``m``, the left asymptotic
unitary ``delta_minus`` and, per soliton, an angle ``theta`` in (0, pi), a
coefficient unit vector ``p_hat`` and a position ``x``.  Everything here is an
immutable value; ``ValidatedSpec`` is the only type the numerical modules
accept.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    BadAngle,
    DegeneracyOverflow,
    NonOrthogonalDegenerate,
    NonUnitaryBackground,
    NonUnitVector,
    SymmetricRealityViolation,
    SymmetryViolation,
    UnpairedAntisymmetricSoliton,
)

UNITARY_TOL = 1e-12
UNIT_VECTOR_TOL = 1e-12
ORTHOGONAL_TOL = 1e-12
SYMMETRY_TOL = 1e-12
# pair / reality matching is done on derived vectors, so allow a little more room
PAIR_TOL = 1e-10


class Symmetry(str, enum.Enum):
    NONSYMMETRIC = "nonsymmetric"
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"

    @classmethod
    def parse(cls, value) -> "Symmetry":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown symmetry class {value!r}")


@dataclass(frozen=True, eq=False)
class Background:
    m: float
    delta_minus: np.ndarray
    symmetry: Symmetry = Symmetry.NONSYMMETRIC

    def __post_init__(self):
        dm = np.atleast_2d(np.asarray(self.delta_minus, dtype=complex))
        object.__setattr__(self, "delta_minus", dm)
        object.__setattr__(self, "symmetry", Symmetry.parse(self.symmetry))
        object.__setattr__(self, "m", float(self.m))

    @property
    def d(self) -> int:
        return self.delta_minus.shape[0]

    @property
    def tau(self) -> np.ndarray | None:
        """Conjugation matrix of the symmetry class (sigma_1 or sigma_2), None otherwise."""
        return tau_matrix(self.d, self.symmetry)


@dataclass(frozen=True, eq=False)
class Soliton:
    theta: float
    p_hat: np.ndarray
    x: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "p_hat", np.atleast_1d(np.asarray(self.p_hat, dtype=complex)).ravel())

    @property
    def s(self) -> complex:
        return complex(np.exp(1j * self.theta))

    def derived(self, m: float) -> "DerivedSoliton":
        kappa = m * np.sin(self.theta)
        return DerivedSoliton(
            kappa=kappa,
            epsilon=m * np.cos(self.theta),
            c=np.sqrt(kappa) * np.exp(-kappa * self.x),
        )


@dataclass(frozen=True)
class DerivedSoliton:
    kappa: float
    epsilon: float
    c: float


@dataclass(frozen=True, eq=False)
class ValidatedSpec:
    """Background plus solitons that passed :func:`validate`.

    ``t`` records how far the spec has been slid along the matrix NLS flow
    (see :mod:`bdgsoliton.nls_evolution`); it does not enter any formula.
    """

    background: Background
    solitons: tuple = field(default_factory=tuple)
    t: float = 0.0

    @property
    def n(self) -> int:
        return len(self.solitons)

    @property
    def d(self) -> int:
        return self.background.d

    @property
    def m(self) -> float:
        return self.background.m

    @property
    def delta_minus(self) -> np.ndarray:
        return self.background.delta_minus

    @property
    def symmetry(self) -> Symmetry:
        return self.background.symmetry

    @cached_property
    def theta(self) -> np.ndarray:
        return np.array([sol.theta for sol in self.solitons], dtype=float)

    @cached_property
    def s(self) -> np.ndarray:
        return np.exp(1j * self.theta)

    @cached_property
    def kappa(self) -> np.ndarray:
        return self.m * np.sin(self.theta)

    @cached_property
    def epsilon(self) -> np.ndarray:
        return self.m * np.cos(self.theta)

    @cached_property
    def positions(self) -> np.ndarray:
        return np.array([sol.x for sol in self.solitons], dtype=float)

    @cached_property
    def P(self) -> np.ndarray:
        """d x n matrix whose columns are the coefficient vectors."""
        if self.n == 0:
            return np.zeros((self.d, 0), dtype=complex)
        return np.stack([sol.p_hat for sol in self.solitons], axis=1)

    @cached_property
    def Q(self) -> np.ndarray:
        """x-independent core of the Gram matrix, Q_kl = 2i p_k^H p_l / (s_k - 1/s_l)."""
        s = self.s
        return 2j * (self.P.conj().T @ self.P) / (s[:, None] - 1.0 / s[None, :])

    def derived(self) -> list[DerivedSoliton]:
        return [sol.derived(self.m) for sol in self.solitons]

    def with_positions(self, positions: Sequence[float], t: float | None = None) -> "ValidatedSpec":
        sols = tuple(replace(sol, x=float(x)) for sol, x in zip(self.solitons, positions))
        return ValidatedSpec(self.background, sols, self.t if t is None else t)


def tau_matrix(d: int, symmetry: Symmetry) -> np.ndarray | None:
    eye = np.eye(d)
    zero = np.zeros((d, d))
    if symmetry is Symmetry.SYMMETRIC:
        return np.block([[zero, eye], [eye, zero]]).astype(complex)
    if symmetry is Symmetry.ANTISYMMETRIC:
        return np.block([[zero, -1j * eye], [1j * eye, zero]])
    return None


def sqrtm_unitary(u: np.ndarray) -> np.ndarray:
    """Principal square root of a unitary matrix, eigenphases taken in (-pi, pi]."""
    t, z = scipy.linalg.schur(np.asarray(u, dtype=complex), output="complex")
    phases = np.angle(np.diag(t))
    phases = np.where(phases <= -np.pi + 1e-13, np.pi, phases)
    return (z * np.exp(0.5j * phases)) @ z.conj().T


def _check_background(bg: Background) -> None:
    if not bg.m > 0:
        raise NonUnitaryBackground(f"bulk gap must be positive, got m={bg.m}")
    dm = bg.delta_minus
    if dm.ndim != 2 or dm.shape[0] != dm.shape[1]:
        raise NonUnitaryBackground(f"delta_minus must be square, got shape {dm.shape}")
    err = np.linalg.norm(dm.conj().T @ dm - np.eye(bg.d))
    if err > UNITARY_TOL:
        raise NonUnitaryBackground(f"delta_minus is not unitary (|D^H D - I| = {err:.3e})")
    if bg.symmetry is Symmetry.SYMMETRIC:
        err = np.linalg.norm(dm - dm.T)
        if err > SYMMETRY_TOL:
            raise SymmetryViolation(f"symmetric class needs delta_minus = delta_minus^T (residual {err:.3e})")
    elif bg.symmetry is Symmetry.ANTISYMMETRIC:
        if bg.d % 2:
            raise SymmetryViolation(f"antisymmetric class needs even d, got d={bg.d}")
        err = np.linalg.norm(dm + dm.T)
        if err > SYMMETRY_TOL:
            raise SymmetryViolation(f"antisymmetric class needs delta_minus = -delta_minus^T (residual {err:.3e})")


def _check_solitons(bg: Background, solitons: Sequence[Soliton]) -> None:
    d = bg.d
    for j, sol in enumerate(solitons):
        if not (0.0 < sol.theta < np.pi):
            raise BadAngle(f"soliton {j}: theta={sol.theta} outside (0, pi)")
        if sol.p_hat.shape != (d,):
            raise NonUnitVector(f"soliton {j}: p_hat has {sol.p_hat.size} components, expected {d}")
        err = abs(np.linalg.norm(sol.p_hat) - 1.0)
        if err > UNIT_VECTOR_TOL:
            raise NonUnitVector(f"soliton {j}: |p_hat| - 1 = {err:.3e}")
        if not np.isfinite(sol.x):
            raise BadAngle(f"soliton {j}: position must be finite")

    # degeneracy is structural: exact equality of the input angles
    groups: dict[float, list[int]] = {}
    for j, sol in enumerate(solitons):
        groups.setdefault(sol.theta, []).append(j)
    for theta, members in groups.items():
        if len(members) > d:
            raise DegeneracyOverflow(
                f"{len(members)} solitons share theta={theta}, at most d={d} allowed"
            )
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                i, k = members[a], members[b]
                overlap = abs(np.vdot(solitons[i].p_hat, solitons[k].p_hat))
                if overlap > ORTHOGONAL_TOL:
                    raise NonOrthogonalDegenerate(
                        f"solitons {i} and {k} share theta={theta} but |p_i^H p_k| = {overlap:.3e}"
                    )


def _fix_symmetric_phase(bg: Background, sol: Soliton, j: int) -> Soliton:
    a = np.linalg.solve(sqrtm_unitary(bg.delta_minus), sol.p_hat)
    k = int(np.argmax(np.abs(a)))
    phase = np.exp(-1j * np.angle(a[k]))
    a = a * phase
    if np.linalg.norm(a.imag) > PAIR_TOL:
        raise SymmetricRealityViolation(
            f"soliton {j}: Delta_-^(-1/2) p_hat is not real up to a phase "
            f"(imaginary residual {np.linalg.norm(a.imag):.3e})"
        )
    return replace(sol, p_hat=sol.p_hat * phase)


def _partner(bg: Background, sol: Soliton) -> Soliton:
    return Soliton(sol.theta, bg.delta_minus @ sol.p_hat.conj(), sol.x)


def _is_partner(bg: Background, first: Soliton, second: Soliton) -> bool:
    return (
        first.theta == second.theta
        and first.x == second.x
        and second.p_hat.shape == first.p_hat.shape
        and np.linalg.norm(second.p_hat - bg.delta_minus @ first.p_hat.conj()) <= PAIR_TOL
    )


def _symmetrize(bg: Background, solitons: Sequence[Soliton], complete: bool) -> tuple:
    if bg.symmetry is Symmetry.SYMMETRIC:
        return tuple(_fix_symmetric_phase(bg, sol, j) for j, sol in enumerate(solitons))
    if bg.symmetry is Symmetry.ANTISYMMETRIC:
        out = []
        j = 0
        while j < len(solitons):
            sol = solitons[j]
            if j + 1 < len(solitons) and _is_partner(bg, sol, solitons[j + 1]):
                out.extend([sol, solitons[j + 1]])
                j += 2
            elif complete:
                out.extend([sol, _partner(bg, sol)])
                j += 1
            else:
                raise UnpairedAntisymmetricSoliton(
                    f"soliton {j} has no partner (theta, x, Delta_- p_hat^*) at position {j + 1}"
                )
        return tuple(out)
    return tuple(solitons)


def validate(background: Background, solitons: Iterable[Soliton] = ()) -> ValidatedSpec:
    """Check every invariant of the scattering data and bundle it.

    For the symmetric and antisymmetric classes the soliton constraints are
    checked as well (without completion); the symmetric-class phase gauge is
    applied, which makes the call idempotent.
    """
    solitons = tuple(solitons)
    _check_background(background)
    _check_solitons(background, solitons)
    solitons = _symmetrize(background, solitons, complete=False)
    return ValidatedSpec(background, solitons)


def apply_symmetry(background: Background, solitons: Iterable[Soliton], complete: bool = False) -> ValidatedSpec:
    """Enforce the class constraints; optionally build missing antisymmetric partners.

    Symmetric class: every p_hat must satisfy p_hat = Delta_- p_hat^* up to a
    global phase, which is fixed so that Delta_-^(-1/2) p_hat is real with its
    largest entry positive.  Antisymmetric class: solitons come in consecutive
    pairs (theta, p, x), (theta, Delta_- p^*, x); with ``complete=True`` a lone
    soliton gets its partner inserted right after it.
    """
    if background.symmetry is Symmetry.NONSYMMETRIC:
        raise SymmetryViolation("apply_symmetry needs a symmetric or antisymmetric background")
    solitons = tuple(solitons)
    _check_background(background)
    solitons = _symmetrize(background, solitons, complete=complete)
    return validate(background, solitons)


# random data, used by tests and scripts

def random_unitary(d: int, rng: np.random.Generator, symmetry: Symmetry = Symmetry.NONSYMMETRIC) -> np.ndarray:
    symmetry = Symmetry.parse(symmetry)
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    u = q * (np.diag(r) / np.abs(np.diag(r)))
    if symmetry is Symmetry.SYMMETRIC:
        u = u @ u.T
    elif symmetry is Symmetry.ANTISYMMETRIC:
        j = np.kron(np.eye(d // 2), np.array([[0.0, 1.0], [-1.0, 0.0]]))
        u = u @ j @ u.T
    # polish to machine unitarity
    w, _, vh = np.linalg.svd(u)
    u2 = w @ vh
    if symmetry is Symmetry.SYMMETRIC:
        u2 = 0.5 * (u2 + u2.T)
    elif symmetry is Symmetry.ANTISYMMETRIC:
        u2 = 0.5 * (u2 - u2.T)
    return u2


def random_unit_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_spec(
    n: int,
    d: int,
    rng: np.random.Generator,
    symmetry: Symmetry = Symmetry.NONSYMMETRIC,
    m: float = 1.0,
    spacing: float = 3.0,
    theta_range: tuple = (0.35, 2.8),
) -> ValidatedSpec:
    """Random valid spec with distinct angles; antisymmetric specs get n pairs (2n solitons)."""
    symmetry = Symmetry.parse(symmetry)
    dm = random_unitary(d, rng, symmetry)
    bg = Background(m, dm, symmetry)
    thetas = rng.uniform(*theta_range, size=n)
    xs = spacing * (np.arange(n) - (n - 1) / 2) + rng.uniform(-0.3, 0.3, size=n)
    sols = []
    for theta, x in zip(thetas, xs):
        if symmetry is Symmetry.SYMMETRIC:
            a = rng.normal(size=d)
            p = sqrtm_unitary(dm) @ (a / np.linalg.norm(a))
        else:
            p = random_unit_vector(d, rng)
        p = p / np.linalg.norm(p)
        sols.append(Soliton(theta, p, x))
    if symmetry is Symmetry.ANTISYMMETRIC:
        return apply_symmetry(bg, sols, complete=True)
    return validate(bg, sols)
