from itertools import combinations, permutations
from math import gcd, prod

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import chain_system
from covalg.core import Element, FdAlgebra, PartialAutomorphism
from covalg.covariance import UnboundedChainError
from covalg.ktheory import (det, diagram_check, exact_at, identity, induced_map, k0, mat_mul,
                            pv_verify, snf)
from covalg.structure import CircleAction, build_theta_lambda, regularity_witness


def leibniz_det(m):
    """Independent oracle: permutation expansion."""
    n = len(m)
    total = 0
    for p in permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if p[i] > p[j])
        total += (-1) ** inv * prod(m[i][p[i]] for i in range(n))
    return total


def determinantal_divisors(m):
    """d_1 ... d_k recovered from gcds of k x k minors."""
    rows, cols = len(m), len(m[0])
    out, prev = [], 1
    for k in range(1, min(rows, cols) + 1):
        g = 0
        for r in combinations(range(rows), k):
            for c in combinations(range(cols), k):
                g = gcd(g, leibniz_det([[m[i][j] for j in c] for i in r]))
        if g == 0:
            break
        out.append(g // prev)
        prev = g
    return out


int_matrices = st.integers(1, 4).flatmap(
    lambda r: st.integers(1, 4).flatmap(
        lambda c: st.lists(st.lists(st.integers(-6, 6), min_size=c, max_size=c),
                           min_size=r, max_size=r)))


@settings(max_examples=150, deadline=None)
@given(int_matrices)
def test_smith_form(m):
    sf = snf(m)
    assert mat_mul(mat_mul(sf.u, m), sf.v) == sf.d
    assert abs(det(sf.u)) == 1 and abs(det(sf.v)) == 1
    assert mat_mul(sf.v, sf.v_inv) == identity(len(sf.v))
    d = sf.divisors
    assert all(x > 0 for x in d)
    assert all(b % a == 0 for a, b in zip(d, d[1:]))
    off = [sf.d[i][j] for i in range(len(m)) for j in range(len(m[0])) if i != j]
    assert not any(off)
    assert d == determinantal_divisors(m)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 5).flatmap(
    lambda n: st.lists(st.lists(st.integers(-9, 9), min_size=n, max_size=n), min_size=n, max_size=n)))
def test_det_matches_leibniz(m):
    assert det(m) == leibniz_det(m)


def test_det_large_entries_exact():
    m = [[10**20, 1], [1, 10**20]]
    assert det(m) == 10**40 - 1


class TestExactness:
    def test_shift_c3_sequence(self):
        res = exact_at([[-1, 0], [1, -1], [0, 1]], [[1, 1, 1]], 3)
        assert res.exact and res.kernel_rank == 2

    def test_torsion_detected(self):
        res = exact_at([[2]], [], 1)
        assert not res.exact and res.divisors == [2]

    def test_composite_nonzero(self):
        res = exact_at([[1]], [[1]], 1)
        assert not res.exact and not res.composite_zero

    def test_injective_g_zero_f(self):
        assert exact_at([[], []], [[1, 0], [0, 1]], 2).exact

    def test_missing_image(self):
        res = exact_at([[], []], [[1, 1]], 2)
        assert not res.exact and res.divisors == [0]

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            exact_at([[1, 0]], [[1]], 2)


class TestInducedMaps:
    def test_diagonal_embedding(self):
        src, tgt = FdAlgebra((1, 2)), FdAlgebra((4,))

        def h(x):
            out = np.zeros((4, 4), complex)
            out[0, 0] = x.blocks[0][0, 0]
            out[1:3, 1:3] = x.blocks[1]
            out[3, 3] = x.blocks[0][0, 0]
            return Element(tgt, (out,))
        assert induced_map(src, tgt, h) == [[2, 1]]

    def test_non_homomorphism_refused(self):
        alg = FdAlgebra((1,))
        with pytest.raises(ValueError, match="not a \\*-homomorphism"):
            induced_map(alg, alg, lambda x: 2 * x)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.integers(0, 2), min_size=2, max_size=2),
           st.lists(st.integers(0, 2), min_size=2, max_size=2))
    def test_functorial(self, m1, m2):
        # C (+) C -> M_k by multiplicities, then M_k -> M_k (+) M_k diagonally
        a = FdAlgebra((1, 1))
        k = max(1, sum(m1))
        b = FdAlgebra((k,))
        c = FdAlgebra((k, k))

        def h1(x):
            diag = [x.blocks[0][0, 0]] * m1[0] + [x.blocks[1][0, 0]] * m1[1]
            diag += [0] * (k - len(diag))
            return Element(b, (np.diag(diag).astype(complex),))

        def h2(y):
            return Element(c, (y.blocks[0] * (m2[0] > 0), y.blocks[0] * (m2[1] > 0)))
        left = induced_map(a, c, lambda x: h2(h1(x)))
        right = mat_mul(induced_map(b, c, h2), induced_map(a, b, h1))
        assert left == right

    def test_k0_ranks(self):
        g = k0(FdAlgebra((1, 2, 3)))
        assert g.rank == 3 and g.k1_rank == 0


class TestSequences:
    @pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
    def test_shift_pv(self, m):
        rep = pv_verify(PartialAutomorphism.shift(m))
        assert rep.ok
        assert rep.data["g"] == [[1] * m]
        assert rep.data["k0_ranks"] == {"J": m - 1, "A": m, "covariance": 1}

    @pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
    def test_shift_diagram(self, m):
        rep = diagram_check(PartialAutomorphism.shift(m))
        assert rep.ok
        assert rep.data["toeplitz_blocks"] == list(range(1, m + 1))

    def test_shift_c2_frozen_maps(self):
        # derived by hand: e_2 (x) 1 splits as e_2 (x) (1 - e_11) + e_2 (x) e_11
        rep = diagram_check(PartialAutomorphism.shift(2))
        assert rep.data["j_star"] == [[1]]
        assert rep.data["d_star"] == [[0, 1], [1, 1]]
        assert rep.data["i_star"] == [[1], [0]]
        assert rep.data["f"] == [[-1], [1]]

    def test_zero_system(self, zero_system):
        rep = pv_verify(zero_system)
        assert rep.ok and rep.data["g"] == [[1, 0], [0, 1]]
        assert diagram_check(zero_system).ok

    def test_twisted_chain(self):
        theta = chain_system((2, 2, 2), seed=8)
        assert pv_verify(theta).ok and diagram_check(theta).ok

    def test_theta_from_weights(self):
        act = CircleAction(FdAlgebra((3,)), ((0, 1, 2),))
        theta = build_theta_lambda(regularity_witness(act)).theta
        assert pv_verify(theta).ok

    def test_unbounded_refused(self, swap2):
        with pytest.raises(UnboundedChainError, match="not computed"):
            pv_verify(swap2)
        with pytest.raises(UnboundedChainError):
            diagram_check(swap2)
