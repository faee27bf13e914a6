import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bdgsoliton.construct import bound_states
from bdgsoliton.errors import QuadratureTailTooLarge, SplitOutOfRange
from bdgsoliton.gap_equation import (
    ConsistencyReport,
    FillingAssignment,
    bound_orthonormality,
    canonical_filling,
    commutator_sigma3,
    filling_rates,
    gap_residual,
    independence_gram,
    perturbation_scan,
    residual_grid,
    swapped,
    tau_symmetrized,
    xi_bound,
    xi_tilde,
)
from bdgsoliton.scattering_data import Background, Soliton, random_unit_vector, random_unitary, validate

from conftest import spec_from_seed


def degenerate_spec(rng, d=3):
    """Four solitons in d=3, two of which share an angle with orthogonal vectors."""
    dm = random_unitary(d, rng)
    p = random_unit_vector(d, rng)
    q = random_unit_vector(d, rng)
    q = q - np.vdot(p, q) * p
    q /= np.linalg.norm(q)
    sols = [
        Soliton(1.1, p, -3.0),
        Soliton(1.1, q, 0.5),
        Soliton(0.6, random_unit_vector(d, rng), 3.0),
        Soliton(2.3, random_unit_vector(d, rng), 6.0),
    ]
    return validate(Background(1.0, dm), sols)


# --- orthonormality -----------------------------------------------------------

def test_kink_bound_state_normalized(kink):
    res = bound_orthonormality(kink)
    assert res.error < 1e-10
    # h = (1/2) sech(x) (1, -1) up to phase for the kink
    x = np.linspace(-5, 5, 11)
    h = bound_states(kink, x)[:, :, 0]
    np.testing.assert_allclose(np.abs(h), 0.5 / np.cosh(x)[:, None] * np.ones(2), atol=1e-13)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("sym,n", [("nonsymmetric", 6), ("symmetric", 5), ("antisymmetric", 3)])
def test_orthonormality_random(seed, sym, n):
    spec = spec_from_seed(seed, n=n, d=2 if sym != "antisymmetric" else 4, symmetry=sym, spacing=2.5)
    assert bound_orthonormality(spec).error < 1e-8


def test_orthonormality_degenerate(rng):
    res = bound_orthonormality(degenerate_spec(rng))
    assert res.error < 1e-8 and res.tail_bound < 1e-10


def test_quadrature_tail_guard(kink):
    with pytest.raises(QuadratureTailTooLarge):
        bound_orthonormality(kink, margin=3.0)


def test_empty_spec_orthonormality():
    spec = validate(Background(1.0, np.eye(2)), [])
    assert bound_orthonormality(spec).error == 0.0
    assert gap_residual(spec) == 0.0


# --- gap equation -------------------------------------------------------------

@pytest.mark.parametrize("sym", ["nonsymmetric", "symmetric", "antisymmetric"])
def test_canonical_filling_solves(sym):
    spec = spec_from_seed(3, n=3, d=2, symmetry=sym)
    assert gap_residual(spec) <= 1e-10
    np.testing.assert_allclose(canonical_filling(spec), spec.theta / np.pi)


def test_single_perturbation_slope_oracle(spec3):
    # residual(nu_j = theta_j/pi + delta) = 2 |delta| max_x ||[sigma_3, h_j h_j^H]||
    grid = residual_grid(spec3)
    h = bound_states(spec3, grid)
    for r in perturbation_scan(spec3, 0.05, grid):
        hj = h[:, :, r.index]
        c = commutator_sigma3(np.einsum("na,nb->nab", hj, hj.conj()))
        expect = 2 * abs(r.delta) * np.max(np.linalg.norm(c, ord=2, axis=(1, 2)))
        assert r.residual == pytest.approx(expect, rel=1e-12)
        assert r.residual >= 1e-3
        assert r.linearity == pytest.approx(2.0, rel=1e-10)


def test_perturbation_direction_near_one():
    spec = validate(Background(1.0, np.eye(1)), [Soliton(np.pi - 0.05, np.array([1.0]), 0.0)])
    (r,) = perturbation_scan(spec, 0.05)
    assert r.delta < 0


def test_independence_gram_positive(spec3):
    g = independence_gram(spec3)
    np.testing.assert_allclose(g, g.conj().T, atol=1e-12)
    assert np.min(np.linalg.eigvalsh(g)) > 1e-6


def test_symmetric_class_xi_is_tau_invariant():
    spec = spec_from_seed(5, n=3, d=2, symmetry="symmetric")
    nu = np.array([0.1, 0.9, 0.4])
    xi = xi_bound(spec, nu, np.linspace(-4, 4, 9))
    np.testing.assert_allclose(tau_symmetrized(spec, xi), xi, atol=1e-12)


def test_antisymmetric_tilde_matches_direct_symmetrization():
    spec = spec_from_seed(6, n=2, d=2, symmetry="antisymmetric")
    nu = np.array([0.2, 0.7, 0.55, 0.1])
    x = np.linspace(-5, 5, 21)
    np.testing.assert_allclose(xi_tilde(spec, nu, x), tau_symmetrized(spec, xi_bound(spec, nu, x)), atol=1e-12)


@settings(max_examples=15)
@given(split=st.floats(-0.5, 0.5))
def test_antisymmetric_split_keeps_solution(split):
    spec = spec_from_seed(7, n=1, d=2, symmetry="antisymmetric")
    fill = filling_rates(spec, [split])
    assert fill.nu.sum() == pytest.approx(2 * spec.theta[0] / np.pi, abs=1e-14)
    assert np.all((fill.nu >= 0) & (fill.nu <= 1))
    assert gap_residual(spec, fill) <= 1e-10


def test_split_errors(spec3):
    with pytest.raises(SplitOutOfRange):
        filling_rates(spec3, [0.1])
    anti = spec_from_seed(8, n=2, d=2, symmetry="antisymmetric")
    with pytest.raises(SplitOutOfRange):
        filling_rates(anti, [0.1])
    with pytest.raises(SplitOutOfRange):
        filling_rates(anti, [0.9, 0.0], clamp=False)
    with pytest.raises(SplitOutOfRange):
        FillingAssignment(np.array([0.5, 1.2]))


def test_swapped():
    np.testing.assert_array_equal(swapped(np.array([0.1, 0.2, 0.3, 0.4])), [0.2, 0.1, 0.4, 0.3])


def test_xi_scalar_and_grid_shapes(spec3):
    nu = canonical_filling(spec3) + 0.01
    one = xi_bound(spec3, nu, 0.3)
    many = xi_bound(spec3, nu, np.array([0.3, 1.0]))
    assert one.shape == (4, 4) and many.shape == (2, 4, 4)
    np.testing.assert_allclose(one, many[0])
    np.testing.assert_allclose(one, one.conj().T, atol=1e-15)


# --- report -------------------------------------------------------------------

def test_consistency_report():
    rep = ConsistencyReport("t")
    rep.add("a", 1e-12, 1e-10)
    rep.add("diag", 5.0)
    assert rep.passed
    rep.add("b", 1.0, 1e-3)
    rep.add("nan", float("nan"), 1.0)
    assert not rep.passed and rep.failures() == ["b", "nan"]
    text = rep.to_text()
    assert "overall: FAIL" in text and "PASS" in text
    d = rep.to_dict()
    assert d["passed"] is False and len(d["lines"]) == 4
