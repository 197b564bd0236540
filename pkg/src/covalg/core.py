"""Finite-dimensional C*-algebras as direct sums of matrix blocks.

An algebra ``A = M_{n_1} + ... + M_{n_k}`` is described by its block sizes.
Closed two-sided ideals are exactly the sums of a subset of the blocks, so
ideals are stored as block subsets and every ideal has an exact unit.
Partial automorphisms ``(theta, I, J)`` are stored structurally: a bijection
between the blocks of ``I`` and ``J`` plus one unitary per source block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

DEFAULT_TOL = 1e-9


class AlgebraMismatchError(ValueError):
    pass


class DomainError(ValueError):
    """An element is not in the domain of the requested power of theta."""


@dataclass(frozen=True)
class FdAlgebra:
    block_sizes: tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.block_sizes)
        if any(n < 1 for n in sizes):
            raise ValueError(f"block sizes must be positive, got {sizes}")
        object.__setattr__(self, "block_sizes", sizes)

    @property
    def num_blocks(self) -> int:
        return len(self.block_sizes)

    @property
    def dim(self) -> int:
        return sum(n * n for n in self.block_sizes)

    @property
    def carrier_dim(self) -> int:
        """Dimension of the defining (block diagonal) representation."""
        return sum(self.block_sizes)

    def zero(self) -> Element:
        return Element(self, tuple(np.zeros((n, n), complex) for n in self.block_sizes))

    def one(self) -> Element:
        return Element(self, tuple(np.eye(n, dtype=complex) for n in self.block_sizes))

    def unit(self, i: int, r: int, s: int) -> Element:
        """Matrix unit e_rs of block i."""
        blocks = [np.zeros((n, n), complex) for n in self.block_sizes]
        blocks[i][r, s] = 1.0
        return Element(self, tuple(blocks))

    def basis(self, blocks: Iterable[int] | None = None) -> list[Element]:
        """Matrix units, block by block (orthonormal for the trace form)."""
        idx = range(self.num_blocks) if blocks is None else sorted(blocks)
        return [self.unit(i, r, s) for i in idx
                for r in range(self.block_sizes[i]) for s in range(self.block_sizes[i])]

    @cached_property
    def zero_blocks(self) -> tuple[np.ndarray, ...]:
        """Shared read-only zero blocks."""
        out = []
        for n in self.block_sizes:
            z = np.zeros((n, n), complex)
            z.flags.writeable = False
            out.append(z)
        return tuple(out)

    def random_element(self, rng: np.random.Generator,
                       blocks: Iterable[int] | None = None) -> Element:
        """Complex Gaussian entries on the given blocks, zero elsewhere."""
        keep = set(range(self.num_blocks)) if blocks is None else set(blocks)
        out = []
        for i, n in enumerate(self.block_sizes):
            if i in keep:
                out.append(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
            else:
                out.append(np.zeros((n, n), complex))
        return Element(self, tuple(out))

    def from_vec(self, v: np.ndarray) -> Element:
        out, pos = [], 0
        for n in self.block_sizes:
            out.append(np.asarray(v[pos:pos + n * n], complex).reshape(n, n))
            pos += n * n
        return Element(self, tuple(out))

    def from_matrix(self, m: np.ndarray) -> Element:
        """Read the block diagonal of a carrier_dim x carrier_dim matrix."""
        out, pos = [], 0
        for n in self.block_sizes:
            out.append(np.array(m[pos:pos + n, pos:pos + n], complex))
            pos += n
        return Element(self, tuple(out))


@dataclass(frozen=True, eq=False)
class Element:
    algebra: FdAlgebra
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        sizes = self.algebra.block_sizes
        if len(self.blocks) != len(sizes):
            raise ValueError(f"expected {len(sizes)} blocks, got {len(self.blocks)}")
        fixed = []
        for b, n in zip(self.blocks, sizes):
            b = np.array(b, dtype=complex)
            if b.shape != (n, n):
                raise ValueError(f"block of shape {b.shape} does not match size {n}")
            b.flags.writeable = False
            fixed.append(b)
        object.__setattr__(self, "blocks", tuple(fixed))

    @classmethod
    def trusted(cls, algebra: FdAlgebra, blocks) -> Element:
        """Wrap blocks already known to be complex arrays of the right shapes (no copy)."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "algebra", algebra)
        object.__setattr__(obj, "blocks", tuple(blocks))
        return obj

    def _check(self, other: Element):
        if other.algebra != self.algebra:
            raise AlgebraMismatchError("elements live in different algebras")

    def __add__(self, other: Element) -> Element:
        self._check(other)
        return Element.trusted(self.algebra, tuple(a + b for a, b in zip(self.blocks, other.blocks)))

    def __sub__(self, other: Element) -> Element:
        self._check(other)
        return Element.trusted(self.algebra, tuple(a - b for a, b in zip(self.blocks, other.blocks)))

    def __neg__(self) -> Element:
        return Element.trusted(self.algebra, tuple(-a for a in self.blocks))

    def __mul__(self, c: complex) -> Element:
        return Element.trusted(self.algebra, tuple(c * a for a in self.blocks))

    __rmul__ = __mul__

    def __matmul__(self, other: Element) -> Element:
        self._check(other)
        return Element.trusted(self.algebra, tuple(a @ b for a, b in zip(self.blocks, other.blocks)))

    def star(self) -> Element:
        return Element.trusted(self.algebra, tuple(a.conj().T for a in self.blocks))

    def norm(self) -> float:
        """C*-norm: largest spectral norm over the blocks."""
        return max((_spectral_norm(b) for b in self.blocks if b.size), default=0.0)

    def block_norms(self) -> list[float]:
        return [_spectral_norm(b) if b.size else 0.0 for b in self.blocks]

    def support(self, tol: float = 0.0) -> set[int]:
        """Blocks with an entry above tol, relative to the largest entry (at least 1)."""
        scale = tol * max(1.0, max((np.abs(b).max() for b in self.blocks if b.size), default=0.0))
        return {i for i, b in enumerate(self.blocks) if np.abs(b).max(initial=0.0) > scale}

    def vec(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros(0, complex)
        return np.concatenate([b.ravel() for b in self.blocks])

    def to_matrix(self) -> np.ndarray:
        """Block diagonal matrix on the defining representation."""
        d = self.algebra.carrier_dim
        m = np.zeros((d, d), complex)
        pos = 0
        for b in self.blocks:
            n = b.shape[0]
            m[pos:pos + n, pos:pos + n] = b
            pos += n
        return m

    def trace(self) -> complex:
        return sum((np.trace(b) for b in self.blocks), 0j)

    def allclose(self, other: Element, tol: float = DEFAULT_TOL) -> bool:
        self._check(other)
        return (self - other).norm() <= tol * max(1.0, self.norm(), other.norm())

    def __repr__(self) -> str:
        return f"Element({self.algebra.block_sizes}, {[b.tolist() for b in self.blocks]})"


def _spectral_norm(b: np.ndarray) -> float:
    return float(abs(b[0, 0])) if b.shape == (1, 1) else float(np.linalg.norm(b, 2))


@dataclass(frozen=True)
class Ideal:
    algebra: FdAlgebra
    blocks: frozenset[int]

    def __post_init__(self):
        blocks = frozenset(int(i) for i in self.blocks)
        bad = [i for i in blocks if not 0 <= i < self.algebra.num_blocks]
        if bad:
            raise ValueError(f"block indices {sorted(bad)} out of range")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def whole(cls, algebra: FdAlgebra) -> Ideal:
        return cls(algebra, frozenset(range(algebra.num_blocks)))

    @classmethod
    def zero(cls, algebra: FdAlgebra) -> Ideal:
        return cls(algebra, frozenset())

    @property
    def dim(self) -> int:
        return sum(self.algebra.block_sizes[i] ** 2 for i in self.blocks)

    def is_zero(self) -> bool:
        return not self.blocks

    def unit(self) -> Element:
        """Identity on member blocks, zero elsewhere."""
        return Element(self.algebra, tuple(
            np.eye(n, dtype=complex) if i in self.blocks else np.zeros((n, n), complex)
            for i, n in enumerate(self.algebra.block_sizes)))

    def contains(self, x: Element, tol: float = DEFAULT_TOL) -> bool:
        if x.algebra != self.algebra:
            return False
        return x.support(tol) <= self.blocks

    def project(self, x: Element) -> Element:
        """Cut x down to the member blocks (multiplication by the unit)."""
        return Element(self.algebra, tuple(
            b if i in self.blocks else np.zeros_like(b) for i, b in enumerate(x.blocks)))

    def basis(self) -> list[Element]:
        return self.algebra.basis(self.blocks)

    def as_algebra(self) -> FdAlgebra:
        """The ideal as an algebra in its own right (blocks in increasing order)."""
        return FdAlgebra(tuple(self.algebra.block_sizes[i] for i in sorted(self.blocks)))

    def embed(self, y: Element) -> Element:
        """Inverse of ``restrict``: place an element of ``as_algebra()`` into the ambient algebra."""
        order = sorted(self.blocks)
        out = [np.zeros((n, n), complex) for n in self.algebra.block_sizes]
        for k, i in enumerate(order):
            out[i] = y.blocks[k]
        return Element(self.algebra, tuple(out))

    def restrict(self, x: Element) -> Element:
        return Element(self.as_algebra(), tuple(x.blocks[i] for i in sorted(self.blocks)))

    def __le__(self, other: Ideal) -> bool:
        return self.algebra == other.algebra and self.blocks <= other.blocks


def ideal_product(p: Ideal, q: Ideal) -> Ideal:
    """Product of two ideals, which equals their intersection."""
    if p.algebra != q.algebra:
        raise AlgebraMismatchError("ideals of different algebras")
    return Ideal(p.algebra, p.blocks & q.blocks)


def _is_unitary(u: np.ndarray, tol: float) -> float:
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), 2))


@dataclass(frozen=True, eq=False)
class PartialAutomorphism:
    """theta: I -> J with theta(x)_{sigma(i)} = u_i x_i u_i^*."""

    source: Ideal
    target: Ideal
    block_map: Mapping[int, int]
    unitaries: Mapping[int, np.ndarray] = field(default_factory=dict)
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        alg = self.source.algebra
        if self.target.algebra != alg:
            raise AlgebraMismatchError("source and target ideals live in different algebras")
        bmap = {int(i): int(j) for i, j in self.block_map.items()}
        if set(bmap) != set(self.source.blocks):
            raise ValueError(f"block map domain {sorted(bmap)} != source blocks "
                             f"{sorted(self.source.blocks)}")
        if sorted(bmap.values()) != sorted(self.target.blocks):
            raise ValueError(f"block map is not a bijection onto target blocks "
                             f"{sorted(self.target.blocks)}")
        sizes = alg.block_sizes
        for i, j in bmap.items():
            if sizes[i] != sizes[j]:
                raise ValueError(f"block {i} (size {sizes[i]}) cannot map to block {j} "
                                 f"(size {sizes[j]})")
        units = {}
        for i in bmap:
            u = np.array(self.unitaries.get(i, np.eye(sizes[i])), complex)
            if u.shape != (sizes[i], sizes[i]):
                raise ValueError(f"unitary for block {i} has shape {u.shape}")
            res = _is_unitary(u, self.tol)
            if res > self.tol:
                raise ValueError(f"matrix for block {i} is not unitary (residual {res:.3e})")
            u.flags.writeable = False
            units[i] = u
        object.__setattr__(self, "block_map", bmap)
        object.__setattr__(self, "unitaries", units)

    @property
    def algebra(self) -> FdAlgebra:
        return self.source.algebra

    @classmethod
    def zero(cls, algebra: FdAlgebra) -> PartialAutomorphism:
        z = Ideal.zero(algebra)
        return cls(z, z, {})

    @classmethod
    def shift(cls, m: int) -> PartialAutomorphism:
        """Forward shift on C^m: (x_1, ..., x_{m-1}, 0) -> (0, x_1, ..., x_{m-1})."""
        alg = FdAlgebra((1,) * m)
        return cls(Ideal(alg, frozenset(range(m - 1))), Ideal(alg, frozenset(range(1, m))),
                   {i: i + 1 for i in range(m - 1)})

    def inverse(self) -> PartialAutomorphism:
        inv = {j: i for i, j in self.block_map.items()}
        return PartialAutomorphism(self.target, self.source, inv,
                                   {j: self.unitaries[i].conj().T for j, i in inv.items()},
                                   self.tol)

    @cached_property
    def _chains(self) -> dict:
        return {}

    @cached_property
    def _powers(self) -> dict:
        return {0: ({i: i for i in range(self.algebra.num_blocks)}, {})}

    def power(self, n: int) -> tuple[dict[int, int], dict[int, np.ndarray]]:
        """Block map and composite unitaries of theta^n, defined on D_{-n}.

        Missing unitaries mean the identity.
        """
        cache = self._powers
        if n in cache:
            return cache[n]
        step = 1 if n > 0 else -1
        prev_map, prev_u = self.power(n - step)
        if step == 1:
            one_map, one_u = self.block_map, self.unitaries
        else:
            one_map = {j: i for i, j in self.block_map.items()}
            one_u = {j: self.unitaries[i].conj().T for i, j in self.block_map.items()}
        new_map, new_u = {}, {}
        for i, mid in prev_map.items():
            if mid in one_map:
                new_map[i] = one_map[mid]
                w = one_u[mid]
                if i in prev_u:
                    w = w @ prev_u[i]
                new_u[i] = w
        cache[n] = (new_map, new_u)
        return cache[n]


def domain_chain(theta: PartialAutomorphism, n: int) -> Ideal:
    """D_n, the domain of theta^{-n} (equivalently the image of theta^n)."""
    cache = theta._chains
    if n not in cache:
        bmap, _ = theta.power(-n)
        cache[n] = Ideal(theta.algebra, frozenset(bmap))
    return cache[n]


def domain_chain_forward(theta: PartialAutomorphism, n: int) -> Ideal:
    """D_n computed from the images of theta^n rather than domains of theta^{-n}."""
    bmap, _ = theta.power(n)
    return Ideal(theta.algebra, frozenset(bmap.values()))


def paut_apply(theta: PartialAutomorphism, x: Element, n: int,
               tol: float = DEFAULT_TOL) -> Element:
    """theta^n(x) for x in D_{-n}; theta^0 is the identity."""
    if n == 0:
        return x
    bmap, units = theta.power(n)
    stray = x.support(tol) - set(bmap)
    if stray:
        raise DomainError(f"element has support on blocks {sorted(stray)} outside the "
                          f"domain of theta^{n} (blocks {sorted(bmap)})")
    return Element.trusted(x.algebra, apply_power_raw(theta, x.blocks, n))


def apply_power_raw(theta: PartialAutomorphism, blocks: Sequence[np.ndarray],
                    n: int) -> list[np.ndarray]:
    """theta^n on raw blocks; blocks outside the domain are dropped without a check."""
    if n == 0:
        return list(blocks)
    bmap, units = theta.power(n)
    out = list(theta.algebra.zero_blocks)
    for i, j in bmap.items():
        w = units.get(i)
        out[j] = blocks[i] if w is None else w @ blocks[i] @ w.conj().T
    return out


def chain_bound(theta: PartialAutomorphism) -> int | None:
    """Smallest N >= 1 with D_n = 0 for all |n| >= N, or None if the chains never stop.

    A chain longer than the number of blocks must revisit a block, so the
    block map then has a cycle inside I and J and D_n never vanishes.
    """
    k = theta.algebra.num_blocks
    for n in range(1, k + 2):
        if domain_chain(theta, n).is_zero():
            return n
    return None


def iter_grades(theta: PartialAutomorphism, window: int | None = None) -> Iterator[int]:
    """Grades n with D_n nonzero; bounded systems need no window."""
    bound = chain_bound(theta)
    if bound is None:
        if window is None:
            raise ValueError("unbounded chains need an explicit grade window")
        top = window
    else:
        top = bound - 1 if window is None else min(window, bound - 1)
    for n in range(-top, top + 1):
        if not domain_chain(theta, n).is_zero():
            yield n


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def orthonormal_span(vectors: Sequence[np.ndarray] | np.ndarray, tol: float = DEFAULT_TOL,
                     dim: int | None = None) -> np.ndarray:
    """Orthonormal basis (as columns) of the span of the given vectors."""
    if isinstance(vectors, np.ndarray):
        m = vectors
    else:
        if not len(vectors):
            return np.zeros((dim or 0, 0), complex)
        m = np.column_stack(vectors)
    if m.size == 0:
        return np.zeros((m.shape[0], 0), complex)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    if not s.size or s[0] == 0:
        return np.zeros((m.shape[0], 0), complex)
    r = int(np.sum(s > tol * max(1.0, s[0])))
    return u[:, :r]


def numeric_rank(m: np.ndarray, tol: float = DEFAULT_TOL) -> int:
    if m.size == 0:
        return 0
    s = np.linalg.svd(m, compute_uv=False)
    if not s.size or s[0] == 0:
        return 0
    return int(np.sum(s > tol * max(1.0, s[0])))
