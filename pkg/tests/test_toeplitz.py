import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import chain_system
from covalg.core import Element, FdAlgebra, PartialAutomorphism
from covalg.covariance import LElement, UnboundedChainError, random_l_element
from covalg.reprs import LinearRep
from covalg.structure import action_from_grading, verify_structure_theorem
from covalg.toeplitz import (ToeplitzElement, ToeplitzModel, ToeplitzRepBuilder, d_embed,
                             gamma_component, grades, j_embed, lambda_membership, quotient_phi,
                             random_toeplitz, theta_e, truncation_residual, w_element)


def scalars(theta, values):
    return Element(theta.algebra, tuple(np.array([[v]], complex) for v in values))


@pytest.fixture(scope="module")
def model2():
    return ToeplitzModel(PartialAutomorphism.shift(2))


@pytest.fixture(scope="module")
def twisted():
    return ToeplitzModel(chain_system((2, 2, 2), seed=5))


class TestShiftC2:
    def test_dimensions(self, model2):
        assert model2.dim == 5
        assert len(model2.lambda_basis) == 1
        assert len(model2.symbol_basis) == 4

    def test_grade_dimensions(self, model2):
        assert {n: len(model2.grade_basis(n)) for n in (-2, -1, 0, 1, 2)} == \
            {-2: 0, -1: 1, 0: 3, 1: 1, 2: 0}

    def test_grade_one_products(self, model2):
        # E_1 is spanned by e_2 (x) S alone, so both products are one-dimensional
        assert model2.product_frame(1, adjoint_first=True).shape[1] == 1
        assert model2.product_frame(1, adjoint_first=False).shape[1] == 1

    def test_w_relations(self, model2):
        theta = model2.system
        w = w_element(theta)
        e_i, e_j = scalars(theta, [1, 0]), scalars(theta, [0, 1])
        assert (w.star() @ w).allclose(d_embed(e_i, theta))
        # S S^* = 1 - e_11
        assert (w @ w.star()).allclose(d_embed(e_j, theta) - j_embed(e_j, theta))

    def test_theta_e(self, model2):
        theta = model2.system
        x = d_embed(scalars(theta, [2, 0]), theta)
        e2 = scalars(theta, [0, 2])
        assert theta_e(x, model2).allclose(d_embed(e2, theta) - j_embed(e2, theta))
        with pytest.raises(ValueError):
            theta_e(d_embed(theta.algebra.one(), theta), model2)

    def test_generated_by_low_grades(self, model2):
        assert model2.generated_dim() == model2.dim

    def test_realized_blocks(self, model2):
        assert model2.realized[0].block_sizes == (1, 2)
        assert model2.realized_lambda[0].block_sizes == (1,)

    def test_shift_c3_blocks(self):
        model = ToeplitzModel(PartialAutomorphism.shift(3))
        assert model.realized[0].block_sizes == (1, 2, 3)
        assert model.generated_dim() == model.dim


class TestAlgebraStructure:
    def test_correction_support_checked(self, model2):
        theta = model2.system
        with pytest.raises(ValueError, match="outside"):
            ToeplitzElement.correction(theta, 1, 1, scalars(theta, [1, 0]))
        with pytest.raises(ValueError):
            ToeplitzElement.correction(theta, 0, 1, scalars(theta, [0, 1]))

    def test_lambda_is_ideal(self, twisted):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = random_toeplitz(twisted, rng)
            lam = ToeplitzElement(twisted.system, LElement.zero(twisted.system),
                                  random_toeplitz(twisted, rng).corrections)
            assert lambda_membership(x @ lam) and lambda_membership(lam @ x)

    def test_phi_is_homomorphism_with_kernel_lambda(self, twisted):
        rng = np.random.default_rng(1)
        for _ in range(20):
            x, y = random_toeplitz(twisted, rng), random_toeplitz(twisted, rng)
            assert quotient_phi(x @ y).allclose(quotient_phi(x) @ quotient_phi(y))
            assert quotient_phi(x.star()).allclose(quotient_phi(x).star())
        kernel = [b for b in twisted.basis if quotient_phi(b).support == []]
        assert len(kernel) == len(twisted.lambda_basis)

    def test_gamma_components_sum(self, twisted):
        x = random_toeplitz(twisted, np.random.default_rng(2))
        total = ToeplitzElement.zero(twisted.system)
        for n in range(-3, 4):
            total = total + gamma_component(x, n)
        assert total.allclose(x)

    def test_twisted_blocks(self, twisted):
        assert twisted.dim == 56
        assert twisted.realized[0].block_sizes == (2, 4, 6)
        assert twisted.realized_lambda[0].block_sizes == (2, 4)

    def test_unbounded_refused(self, swap2):
        with pytest.raises(UnboundedChainError):
            ToeplitzModel(swap2)

    def test_zero_ideals(self, zero_system):
        model = ToeplitzModel(zero_system)
        assert model.dim == 5 and model.lambda_basis == []


class TestOperatorPictures:
    def test_truncation_oracle(self, model2):
        rng = np.random.default_rng(3)
        for _ in range(100):
            x, y = random_toeplitz(model2, rng), random_toeplitz(model2, rng)
            assert truncation_residual(model2, x, y) < 1e-10

    def test_truncation_larger_window(self, twisted):
        rng = np.random.default_rng(4)
        x, y = random_toeplitz(twisted, rng), random_toeplitz(twisted, rng)
        assert truncation_residual(twisted, x, y, levels=twisted.bound + 5) < 1e-10

    def test_truncation_breaks_outside_window(self, model2):
        # the oracle is only claimed on the window; the last level sees the cut
        theta = model2.system
        w = w_element(theta)
        m = model2.bound + 3
        t = model2.truncated(w.star() @ w, m) - model2.truncated(w.star(), m) @ model2.truncated(w, m)
        assert np.abs(t).max() > 0.5

    def test_faithful_rep(self, twisted):
        rng = np.random.default_rng(5)
        for _ in range(10):
            x, y = random_toeplitz(twisted, rng), random_toeplitz(twisted, rng)
            fx, fy = twisted.faithful(x), twisted.faithful(y)
            assert np.allclose(twisted.faithful(x @ y), fx @ fy, atol=1e-9 * max(1, x.size() * y.size()))
            assert np.allclose(twisted.faithful(x.star()), fx.conj().T)
        mats = np.column_stack([twisted.faithful(b).ravel() for b in twisted.basis])
        assert np.linalg.matrix_rank(mats) == twisted.dim

    def test_rep_builder_reproduces_faithful(self, model2):
        theta = model2.system
        pi = LinearRep.from_callable(theta.algebra, lambda a: model2.faithful(d_embed(a, theta)))
        v = model2.faithful(w_element(theta))
        builder = ToeplitzRepBuilder(theta, pi, v)
        assert builder.conditions().ok
        for b in model2.basis:
            assert np.allclose(builder(b), model2.faithful(b), atol=1e-9)

    def test_rep_builder_rejects_bad_pair(self, model2):
        theta = model2.system
        pi = LinearRep.from_callable(theta.algebra, lambda a: model2.faithful(d_embed(a, theta)))
        bad = ToeplitzRepBuilder(theta, pi, 2 * model2.faithful(w_element(theta)))
        assert not bad.conditions().ok


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_symbols_multiply_like_covariance(seed):
    """phi(T_a T_b) = ab: the symbol map is multiplicative on pure symbols."""
    theta = chain_system((2, 2, 2), seed=seed % 7)
    rng = np.random.default_rng(seed)
    a, b = random_l_element(theta, rng), random_l_element(theta, rng)
    prod = ToeplitzElement.from_symbol(a) @ ToeplitzElement.from_symbol(b)
    assert quotient_phi(prod).allclose(a @ b)


@pytest.mark.parametrize("theta", [PartialAutomorphism.shift(2), PartialAutomorphism.shift(3),
                                   chain_system((2, 2, 2), seed=5)],
                         ids=["shift-c2", "shift-c3", "twisted-chain"])
def test_toeplitz_is_a_covariance_algebra(theta):
    """The grading of E feeds back through the structure theorem and returns E itself."""
    model = ToeplitzModel(theta)
    alg, _ = model.realized
    act, _ = action_from_grading(alg, [(grades(b)[0], model.to_realized(b)) for b in model.basis])
    rep = verify_structure_theorem(act)
    assert rep.ok
    assert rep.data["covariance_blocks"] == list(alg.block_sizes)


def test_theta_e_lands_in_range_ideal(model2):
    rng = np.random.default_rng(9)
    frame_in = model2.product_frame(1, adjoint_first=True)
    frame_out = model2.product_frame(1, adjoint_first=False)
    x = model2.from_vec(frame_in @ rng.standard_normal(frame_in.shape[1]))
    v = model2.vec(theta_e(x, model2))
    assert np.linalg.norm(v - frame_out @ (frame_out.conj().T @ v)) < 1e-12


def test_scalar_system():
    model = ToeplitzModel(PartialAutomorphism.zero(FdAlgebra((1,))))
    assert model.dim == 1 and model.generated_dim() == 1
