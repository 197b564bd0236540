import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import chain_system
from covalg.core import FdAlgebra, PartialAutomorphism, random_unitary
from covalg.covariance import LElement, l_basis, random_l_element, realize_covariance
from covalg.reprs import (CovariantRep, InvalidRepresentationError, LinearRep, block_representation,
                          covrep_validate, extract_covrep, key_identity_residual, pi_cross_u,
                          pisometry_pow, random_block_representation, regular_covrep,
                          round_trip_residual)


def test_linear_rep_tables():
    alg = FdAlgebra((1, 2))
    rep = block_representation(alg, (1, 2))
    assert rep.dim == 5
    assert max(rep.star_hom_residuals()) < 1e-14
    bad = LinearRep(alg, rep.images * 2)
    assert bad.star_hom_residuals()[0] > 0.5


def test_zero_algebra_needs_carrier():
    with pytest.raises(ValueError):
        LinearRep.from_callable(FdAlgebra(()), lambda e: e)


def test_regular_covrep_is_covariant(shift3):
    real = realize_covariance(shift3)
    r = regular_covrep(real)
    assert r.report.ok
    assert key_identity_residual(r, np.random.default_rng(0), range(-2, 3)) < 1e-12


def test_pi_cross_u_recovers_regular_rep(shift3):
    real = realize_covariance(shift3)
    r = regular_covrep(real)
    a = random_l_element(shift3, np.random.default_rng(1))
    assert np.allclose(pi_cross_u(r, a), real.rep(a))


def test_u_is_shift_in_m2(shift2):
    real = realize_covariance(shift2)
    sigma = LinearRep.from_callable(real.algebra, lambda x: x.to_matrix())
    r = extract_covrep(sigma, real)
    assert np.allclose(r.u, [[0, 0], [1, 0]])
    assert covrep_validate(r).ok


def test_invalid_covariant_pair_refused(shift2):
    pi = block_representation(shift2.algebra, (1, 1))
    r = CovariantRep(shift2, pi, np.eye(2))
    report = covrep_validate(r)
    assert not report.ok
    assert not report["initial_space"].passed
    with pytest.raises(InvalidRepresentationError, match="initial_space"):
        pi_cross_u(r, LElement.delta(shift2, shift2.algebra.one(), 0))


def test_extract_refuses_non_homomorphism(shift2):
    real = realize_covariance(shift2)
    sigma = LinearRep.from_callable(real.algebra, lambda x: 2 * x.to_matrix())
    with pytest.raises(InvalidRepresentationError):
        extract_covrep(sigma, real)


def test_pisometry_powers():
    u = np.eye(3, k=-1)
    assert np.allclose(pisometry_pow(u, 2), u @ u)
    assert np.allclose(pisometry_pow(u, -1), u.T)
    assert np.allclose(pisometry_pow(u, 0), np.eye(3))


@pytest.mark.parametrize("theta", [PartialAutomorphism.shift(2), PartialAutomorphism.shift(4),
                                   chain_system((2, 2, 2), seed=3),
                                   PartialAutomorphism.zero(FdAlgebra((1, 2)))],
                         ids=["shift-c2", "shift-c4", "twisted-chain", "zero"])
def test_round_trip_random_sigma(theta):
    real = realize_covariance(theta)
    rng = np.random.default_rng(11)
    for _ in range(5):
        sigma = random_block_representation(real.algebra, rng)
        assert round_trip_residual(sigma, real) < 1e-9


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_extracted_pair_is_covariant(seed):
    theta = chain_system((1, 1, 1), seed=None)
    real = realize_covariance(theta)
    rng = np.random.default_rng(seed)
    sigma = random_block_representation(real.algebra, rng)
    r = extract_covrep(sigma, real)
    assert r.report.ok
    assert key_identity_residual(r, rng, range(-2, 3)) < 1e-9
    for _, b in l_basis(theta):
        assert np.allclose(pi_cross_u(r, b), sigma(real(b)), atol=1e-9)


def test_frame_changes_carrier():
    alg = FdAlgebra((2,))
    w = random_unitary(3, np.random.default_rng(2))
    rep = block_representation(alg, (1,), 1, w)
    x = alg.random_element(np.random.default_rng(3))
    plain = np.zeros((3, 3), complex)
    plain[:2, :2] = x.blocks[0]
    assert np.allclose(rep(x), w @ plain @ w.conj().T)
