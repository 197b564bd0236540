import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from covalg.core import FdAlgebra, PartialAutomorphism, random_unitary
from covalg.covariance import l_basis, regular_rep
from covalg.reprs import block_representation
from covalg.wedderburn import NotSelfAdjointError, span_closure, wedderburn


def units_of(n):
    out = []
    for r in range(n):
        for s in range(n):
            e = np.zeros((n, n))
            e[r, s] = 1
            out.append(e)
    return out


def test_full_matrix_units():
    alg, _ = wedderburn(units_of(2))
    assert alg.block_sizes == (2,)


def test_diagonal_projections():
    alg, _ = wedderburn([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
    assert alg.block_sizes == (1, 1)


def test_regular_rep_of_shift_c3():
    theta = PartialAutomorphism.shift(3)
    rep = regular_rep(theta)
    alg, _ = wedderburn([rep(b) for _, b in l_basis(theta)])
    assert alg.block_sizes == (3,)


def test_non_self_adjoint_rejected():
    with pytest.raises(NotSelfAdjointError):
        wedderburn([np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2)])


def test_span_closure_dimension():
    # upper and lower shift on C^3 generate M_3
    s = np.eye(3, k=-1)
    assert span_closure([s, s.T]).shape[1] == 9


def test_deterministic():
    rng = np.random.default_rng(4)
    target = FdAlgebra((1, 2))
    rep = block_representation(target, (2, 1), 1, random_unitary(5, rng))
    gens = list(rep.images)
    a1, i1 = wedderburn(gens, seed=3)
    a2, i2 = wedderburn(gens, seed=3)
    m = gens[1] + 2 * gens[4]
    assert a1 == a2
    assert all(np.array_equal(x, y) for x, y in zip(i1.forward(m).blocks, i2.forward(m).blocks))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=1, max_size=3), st.integers(0, 2**31 - 1))
def test_recovers_block_structure(sizes, seed):
    """Known algebra x -> W (x_1 (x) 1_m1 + ... + 0) W^*; blocks and iso must match."""
    rng = np.random.default_rng(seed)
    alg = FdAlgebra(tuple(sizes))
    mults = tuple(int(m) for m in rng.integers(1, 3, len(sizes)))
    null = int(rng.integers(0, 2))
    d = sum(n * m for n, m in zip(sizes, mults)) + null
    rep = block_representation(alg, mults, null, random_unitary(d, rng))
    found, iso = wedderburn(list(rep.images), seed=seed)
    assert sorted(found.block_sizes) == sorted(sizes)
    assert sum(n * n for n in found.block_sizes) == alg.dim
    for _ in range(3):
        x, y = alg.random_element(rng), alg.random_element(rng)
        fx, fy = iso.forward(rep(x)), iso.forward(rep(y))
        scale = max(1.0, fx.norm() * fy.norm())
        assert (iso.forward(rep(x @ y)) - fx @ fy).norm() <= 1e-8 * scale
        assert (iso.forward(rep(x.star())) - fx.star()).norm() <= 1e-8 * max(1.0, fx.norm())
        assert np.allclose(iso.inverse(fx), rep(x), atol=1e-8 * max(1.0, fx.norm()))
        # a *-isomorphism of C*-algebras is isometric
        assert fx.norm() == pytest.approx(np.linalg.norm(rep(x), 2), rel=1e-8)
