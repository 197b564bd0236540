"""Shared fixtures and independent dense oracles.

The oracles work with plain carrier matrices: theta is implemented by a
partial isometry W on C^d that maps block i onto block sigma(i) through
u_i, so theta^k(x) = W^k x W^{*k} needs none of the package's block
bookkeeping.
"""

from __future__ import annotations

import numpy as np
import pytest

from covalg.core import FdAlgebra, Ideal, PartialAutomorphism, random_unitary


def carrier_isometry(theta: PartialAutomorphism) -> np.ndarray:
    alg = theta.algebra
    d = alg.carrier_dim
    starts = np.concatenate([[0], np.cumsum(alg.block_sizes)])
    w = np.zeros((d, d), complex)
    for i, j in theta.block_map.items():
        n = alg.block_sizes[i]
        u = theta.unitaries.get(i, np.eye(n))
        w[starts[j]:starts[j] + n, starts[i]:starts[i] + n] = u
    return w


def dense_power(w: np.ndarray, x: np.ndarray, k: int) -> np.ndarray:
    """theta^k on a carrier matrix (theta^{-k} for negative k)."""
    step = w if k >= 0 else w.conj().T
    p = np.linalg.matrix_power(step, abs(k))
    return p @ x @ p.conj().T


def dense_convolution(w: np.ndarray, a: dict, b: dict) -> dict:
    """(a*b)(n) = sum_k theta^k(theta^{-k}(a_k) b_{n-k}) on carrier matrices."""
    out: dict[int, np.ndarray] = {}
    for k, ak in a.items():
        for m, bm in b.items():
            term = dense_power(w, dense_power(w, ak, -k) @ bm, k)
            out[k + m] = out.get(k + m, 0) + term
    return out


def random_system(seed: int, max_blocks: int = 5, max_size: int = 3,
                  twisted: bool = True) -> PartialAutomorphism:
    """Random partial automorphism: a size-preserving partial bijection of blocks."""
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, max_blocks + 1))
    sizes = tuple(int(n) for n in rng.integers(1, max_size + 1, k))
    alg = FdAlgebra(sizes)
    bmap = {}
    used = set()
    for i in rng.permutation(k):
        if rng.random() < 0.6:
            options = [j for j in range(k) if sizes[j] == sizes[i] and j not in used]
            if options:
                j = int(rng.choice(options))
                bmap[int(i)] = j
                used.add(j)
    units = {i: random_unitary(sizes[i], rng) for i in bmap} if twisted else {}
    return PartialAutomorphism(Ideal(alg, frozenset(bmap)), Ideal(alg, frozenset(bmap.values())),
                               bmap, units)


def chain_system(sizes: tuple[int, ...], seed: int | None = None) -> PartialAutomorphism:
    """Shift along equal-size blocks 0 -> 1 -> ... -> k-1, optionally twisted."""
    alg = FdAlgebra(sizes)
    k = len(sizes)
    bmap = {i: i + 1 for i in range(k - 1)}
    units = {}
    if seed is not None:
        rng = np.random.default_rng(seed)
        units = {i: random_unitary(sizes[i], rng) for i in bmap}
    return PartialAutomorphism(Ideal(alg, frozenset(range(k - 1))),
                               Ideal(alg, frozenset(range(1, k))), bmap, units)


@pytest.fixture
def shift2():
    return PartialAutomorphism.shift(2)


@pytest.fixture
def shift3():
    return PartialAutomorphism.shift(3)


@pytest.fixture
def swap2():
    alg = FdAlgebra((1, 1))
    whole = Ideal.whole(alg)
    return PartialAutomorphism(whole, whole, {0: 1, 1: 0})


@pytest.fixture
def zero_system():
    return PartialAutomorphism.zero(FdAlgebra((1, 2)))
