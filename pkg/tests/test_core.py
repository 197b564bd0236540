import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import carrier_isometry, dense_power, random_system
from covalg.core import (AlgebraMismatchError, DomainError, Element, FdAlgebra, Ideal,
                         PartialAutomorphism, chain_bound, domain_chain, domain_chain_forward,
                         ideal_product, iter_grades, numeric_rank, orthonormal_span, paut_apply,
                         random_unitary)

seeds = st.integers(0, 2**31 - 1)


class TestAlgebra:
    def test_dimensions(self):
        alg = FdAlgebra((1, 2, 3))
        assert alg.dim == 14
        assert alg.carrier_dim == 6
        assert len(alg.basis()) == 14

    def test_rejects_empty_block(self):
        with pytest.raises(ValueError):
            FdAlgebra((2, 0))

    def test_matrix_units_multiply(self):
        alg = FdAlgebra((2,))
        e01, e10 = alg.unit(0, 0, 1), alg.unit(0, 1, 0)
        assert (e01 @ e10).allclose(alg.unit(0, 0, 0))
        assert (e10 @ e10).norm() == 0.0

    def test_to_matrix_roundtrip(self):
        alg = FdAlgebra((1, 2))
        x = alg.random_element(np.random.default_rng(1))
        assert alg.from_matrix(x.to_matrix()).allclose(x, 1e-15)

    def test_norm_is_largest_block_norm(self):
        alg = FdAlgebra((1, 2))
        x = Element(alg, (np.array([[3.0]]), np.diag([1.0, 5.0])))
        assert x.norm() == pytest.approx(5.0)
        assert x.block_norms() == pytest.approx([3.0, 5.0])

    def test_mismatched_algebras(self):
        a = FdAlgebra((1,)).one()
        b = FdAlgebra((2,)).one()
        with pytest.raises(AlgebraMismatchError):
            a + b

    def test_support_is_relative(self):
        alg = FdAlgebra((1, 1))
        x = Element(alg, (np.array([[1e6]]), np.array([[1e-5]])))
        assert x.support(1e-9) == {0}


class TestIdeals:
    def test_unit_and_projection(self):
        alg = FdAlgebra((1, 2))
        ideal = Ideal(alg, frozenset({1}))
        x = alg.random_element(np.random.default_rng(0))
        px = ideal.project(x)
        assert (ideal.unit() @ x).allclose(px)
        assert ideal.contains(px) and not ideal.contains(x)
        assert ideal.dim == 4

    def test_product_is_intersection(self):
        alg = FdAlgebra((1, 1, 1))
        p, q = Ideal(alg, frozenset({0, 1})), Ideal(alg, frozenset({1, 2}))
        assert ideal_product(p, q).blocks == {1}

    def test_embed_restrict(self):
        alg = FdAlgebra((1, 2, 3))
        ideal = Ideal(alg, frozenset({0, 2}))
        y = ideal.as_algebra().random_element(np.random.default_rng(2))
        assert ideal.restrict(ideal.embed(y)).allclose(y)
        assert ideal.as_algebra().block_sizes == (1, 3)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            Ideal(FdAlgebra((1,)), frozenset({3}))


class TestPartialAutomorphism:
    def test_size_mismatch_names_blocks(self):
        alg = FdAlgebra((1, 2))
        with pytest.raises(ValueError, match="block 0 .*block 1"):
            PartialAutomorphism(Ideal(alg, frozenset({0})), Ideal(alg, frozenset({1})), {0: 1})

    def test_non_unitary_reports_residual(self):
        alg = FdAlgebra((1, 1))
        with pytest.raises(ValueError, match="residual"):
            PartialAutomorphism(Ideal(alg, frozenset({0})), Ideal(alg, frozenset({1})),
                                 {0: 1}, {0: np.array([[2.0]])})

    def test_map_must_cover_source(self):
        alg = FdAlgebra((1, 1))
        with pytest.raises(ValueError):
            PartialAutomorphism(Ideal.whole(alg), Ideal(alg, frozenset({1})), {0: 1})

    def test_shift_chains(self, shift3):
        # hand count: D_n = blocks reachable as images of theta^n
        assert domain_chain(shift3, 0).blocks == {0, 1, 2}
        assert domain_chain(shift3, 1).blocks == {1, 2}
        assert domain_chain(shift3, 2).blocks == {2}
        assert domain_chain(shift3, -1).blocks == {0, 1}
        assert domain_chain(shift3, -2).blocks == {0}
        assert domain_chain(shift3, 3).is_zero()
        assert chain_bound(shift3) == 3
        assert list(iter_grades(shift3)) == [-2, -1, 0, 1, 2]

    def test_zero_ideals_bound(self, zero_system):
        assert chain_bound(zero_system) == 1
        assert list(iter_grades(zero_system)) == [0]

    def test_automorphism_unbounded(self, swap2):
        assert chain_bound(swap2) is None
        with pytest.raises(ValueError):
            list(iter_grades(swap2))
        assert list(iter_grades(swap2, window=2)) == [-2, -1, 0, 1, 2]

    def test_apply_outside_domain(self, shift3):
        x = shift3.algebra.one()
        with pytest.raises(DomainError, match="outside"):
            paut_apply(shift3, x, 1)

    def test_shift_moves_coordinates(self, shift3):
        alg = shift3.algebra
        x = Element(alg, (np.array([[2.0]]), np.array([[3.0]]), np.zeros((1, 1))))
        y = paut_apply(shift3, x, 1)
        assert [b[0, 0] for b in y.blocks] == [0, 2, 3]

    def test_inverse(self):
        theta = random_system(5)
        inv = theta.inverse()
        x = theta.algebra.random_element(np.random.default_rng(0), theta.source.blocks)
        assert paut_apply(inv, paut_apply(theta, x, 1), 1).allclose(x)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_power_matches_dense_oracle(seed):
    theta = random_system(seed)
    w = carrier_isometry(theta)
    rng = np.random.default_rng(seed)
    for n in range(-3, 4):
        dom = domain_chain(theta, -n)
        x = theta.algebra.random_element(rng, dom.blocks)
        got = paut_apply(theta, x, n).to_matrix()
        assert np.allclose(got, dense_power(w, x.to_matrix(), n), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_power_composition(seed):
    theta = random_system(seed)
    rng = np.random.default_rng(seed)
    for n in range(-3, 4):
        for m in range(-3, 4):
            common = ideal_product(domain_chain(theta, n), domain_chain(theta, m))
            x = theta.algebra.random_element(rng, common.blocks)
            lhs = paut_apply(theta, paut_apply(theta, x, -n), n - m)
            assert lhs.allclose(paut_apply(theta, x, -m))
            assert domain_chain(theta, m - n).contains(paut_apply(theta, x, -n))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_chain_bookkeeping(seed):
    theta = random_system(seed)
    for n in range(-6, 7):
        assert domain_chain(theta, n).blocks == domain_chain_forward(theta, n).blocks
        for m in range(-6, 7):
            assert (ideal_product(domain_chain(theta, n), domain_chain(theta, m)).blocks
                    == ideal_product(domain_chain(theta, m), domain_chain(theta, n)).blocks)
    bound = chain_bound(theta)
    if bound is not None:
        assert all(domain_chain(theta, n).is_zero() for n in range(bound, bound + 4))
        assert bound == 1 or not domain_chain(theta, bound - 1).is_zero() \
            or not domain_chain(theta, 1 - bound).is_zero()


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_theta_is_isometric(seed):
    theta = random_system(seed)
    x = theta.algebra.random_element(np.random.default_rng(seed), theta.source.blocks)
    assert paut_apply(theta, x, 1).norm() == pytest.approx(x.norm(), rel=1e-9)


def test_random_unitary_and_spans():
    rng = np.random.default_rng(3)
    u = random_unitary(4, rng)
    assert np.allclose(u.conj().T @ u, np.eye(4))
    v = rng.standard_normal((5, 2))
    frame = orthonormal_span(np.column_stack([v, v @ [1.0, 2.0]]))
    assert frame.shape == (5, 2)
    assert numeric_rank(np.zeros((3, 3))) == 0
