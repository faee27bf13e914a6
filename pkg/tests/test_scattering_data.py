import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bdgsoliton.errors import (
    BadAngle,
    DegeneracyOverflow,
    NonOrthogonalDegenerate,
    NonUnitaryBackground,
    NonUnitVector,
    SymmetricRealityViolation,
    SymmetryViolation,
    UnpairedAntisymmetricSoliton,
)
from bdgsoliton.scattering_data import (
    Background,
    Soliton,
    Symmetry,
    apply_symmetry,
    random_unitary,
    sqrtm_unitary,
    tau_matrix,
    validate,
)

from conftest import spec_from_seed

ISY = np.array([[0.0, 1.0], [-1.0, 0.0]])  # i sigma_y


def test_kink_data_is_valid(kink):
    assert kink.n == 1 and kink.d == 1
    (der,) = kink.derived()
    assert der.kappa == pytest.approx(1.0)
    assert der.epsilon == pytest.approx(0.0, abs=1e-16)
    assert der.c == pytest.approx(1.0)


def test_orthogonal_degenerate_pair_is_valid():
    bg = Background(1.0, np.eye(2))
    spec = validate(bg, [Soliton(np.pi / 3, [1, 0], 0.0), Soliton(np.pi / 3, [0, 1], 1.0)])
    assert spec.n == 2


def test_degeneracy_capped_at_d():
    bg = Background(1.0, np.eye(2))
    v = np.array([1, 1j]) / np.sqrt(2)
    with pytest.raises(DegeneracyOverflow):
        validate(bg, [Soliton(np.pi / 3, [1, 0]), Soliton(np.pi / 3, [0, 1]), Soliton(np.pi / 3, v)])


def test_degenerate_must_be_orthogonal():
    bg = Background(1.0, np.eye(2))
    v = np.array([1, 1]) / np.sqrt(2)
    with pytest.raises(NonOrthogonalDegenerate):
        validate(bg, [Soliton(1.0, [1, 0]), Soliton(1.0, v)])


def test_near_degenerate_angles_are_distinct():
    bg = Background(1.0, np.eye(1))
    spec = validate(bg, [Soliton(1.0, [1]), Soliton(1.0 + 1e-9, [1], 5.0)])
    assert spec.n == 2


@pytest.mark.parametrize("theta", [0.0, np.pi, -0.3, 4.0])
def test_bad_angle(theta):
    with pytest.raises(BadAngle):
        validate(Background(1.0, np.eye(1)), [Soliton(theta, [1])])


@pytest.mark.parametrize("p", [[1.0, 1e-4], [0.5, 0.5], [1.0]])
def test_bad_unit_vector(p):
    with pytest.raises(NonUnitVector):
        validate(Background(1.0, np.eye(2)), [Soliton(1.0, p)])


def test_background_checks():
    with pytest.raises(NonUnitaryBackground):
        validate(Background(1.0, 1.1 * np.eye(2)))
    with pytest.raises(NonUnitaryBackground):
        validate(Background(0.0, np.eye(2)))
    with pytest.raises(SymmetryViolation):
        validate(Background(1.0, ISY, "symmetric"))
    with pytest.raises(SymmetryViolation):
        validate(Background(1.0, np.eye(2), "antisymmetric"))
    with pytest.raises(SymmetryViolation):
        validate(Background(1.0, np.eye(3), "antisymmetric"))


def test_symmetry_parse():
    assert Symmetry.parse("Anti-Symmetric") is Symmetry.ANTISYMMETRIC
    assert Symmetry.parse(Symmetry.SYMMETRIC) is Symmetry.SYMMETRIC
    with pytest.raises(ValueError):
        Symmetry.parse("chiral")


def test_antisymmetric_completion():
    bg = Background(1.0, ISY, "antisymmetric")
    spec = apply_symmetry(bg, [Soliton(1.1, [1, 0], 0.0)], complete=True)
    assert spec.n == 2
    np.testing.assert_allclose(spec.solitons[1].p_hat, ISY @ np.array([1, 0]))
    assert spec.solitons[1].theta == spec.solitons[0].theta
    assert spec.solitons[1].x == spec.solitons[0].x


def test_antisymmetric_lone_soliton_rejected():
    bg = Background(1.0, ISY, "antisymmetric")
    with pytest.raises(UnpairedAntisymmetricSoliton):
        apply_symmetry(bg, [Soliton(1.1, [1, 0])])
    with pytest.raises(UnpairedAntisymmetricSoliton):
        validate(bg, [Soliton(1.1, [1, 0])])


def test_symmetric_scalar():
    spec = apply_symmetry(Background(1.0, np.eye(1), "symmetric"), [Soliton(1.0, [1])])
    np.testing.assert_allclose(spec.solitons[0].p_hat, [1.0])


def test_symmetric_phase_gauge_and_reality():
    bg = Background(1.0, np.eye(2), "symmetric")
    # global phase is removed by the gauge
    spec = apply_symmetry(bg, [Soliton(1.0, np.exp(0.7j) * np.array([0.6, 0.8]))])
    np.testing.assert_allclose(spec.solitons[0].p_hat, [0.6, 0.8], atol=1e-14)
    with pytest.raises(SymmetricRealityViolation):
        apply_symmetry(bg, [Soliton(1.0, np.array([1, 1j]) / np.sqrt(2))])


def test_apply_symmetry_needs_a_class():
    with pytest.raises(SymmetryViolation):
        apply_symmetry(Background(1.0, np.eye(1)), [])


def test_tau_matrices():
    s1 = tau_matrix(2, Symmetry.SYMMETRIC)
    s2 = tau_matrix(2, Symmetry.ANTISYMMETRIC)
    np.testing.assert_allclose(s1 @ s1, np.eye(4))
    np.testing.assert_allclose(s2 @ s2, np.eye(4))
    np.testing.assert_allclose(s2, s2.conj().T)
    assert tau_matrix(2, Symmetry.NONSYMMETRIC) is None


@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.sampled_from(list(Symmetry)))
def test_sqrtm_unitary(seed, d, sym):
    if sym is Symmetry.ANTISYMMETRIC and d % 2:
        d += 1
    u = random_unitary(d, np.random.default_rng(seed), sym)
    r = sqrtm_unitary(u)
    np.testing.assert_allclose(r @ r, u, atol=1e-12)
    np.testing.assert_allclose(r.conj().T @ r, np.eye(d), atol=1e-12)
    assert np.all(np.angle(np.linalg.eigvals(r)) > -np.pi / 2 - 1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.sampled_from(list(Symmetry)))
def test_validate_is_idempotent(seed, n, sym):
    spec = spec_from_seed(seed, n=n, d=2, symmetry=sym)
    again = validate(spec.background, spec.solitons)
    for a, b in zip(spec.solitons, again.solitons):
        np.testing.assert_allclose(a.p_hat, b.p_hat, atol=1e-14)
        assert a.theta == b.theta and a.x == b.x


@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_antisymmetric_partners_orthogonal(seed, d_half):
    rng = np.random.default_rng(seed)
    d = 2 * d_half
    bg = Background(1.0, random_unitary(d, rng, Symmetry.ANTISYMMETRIC), "antisymmetric")
    p = rng.normal(size=d) + 1j * rng.normal(size=d)
    spec = apply_symmetry(bg, [Soliton(1.3, p / np.linalg.norm(p))], complete=True)
    assert spec.n == 2
    assert abs(np.vdot(spec.solitons[0].p_hat, spec.solitons[1].p_hat)) < 1e-13


@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_gram_block_is_positive_definite(seed, n):
    spec = spec_from_seed(seed, n=n, d=3)
    q = spec.Q
    np.testing.assert_allclose(q, q.conj().T, atol=1e-13)
    np.testing.assert_allclose(np.diag(q).real, 1 / np.sin(spec.theta), rtol=1e-13)
    assert np.linalg.eigvalsh(q).min() > 0
