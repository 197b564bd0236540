"""Covariant representations (pi, u) and their integrated forms.

A representation of a finite-dimensional algebra is stored as the images
of its matrix units, which determines it as a linear map.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .checks import Report, residual_check
from .core import (Element, FdAlgebra, PartialAutomorphism, domain_chain,
                   paut_apply, random_unitary)
from .covariance import LElement, Realization, l_basis, u_element


class InvalidRepresentationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class LinearRep:
    """Linear map from an FdAlgebra into d x d matrices, given on matrix units."""

    algebra: FdAlgebra
    images: np.ndarray          # shape (algebra.dim, d, d), order of algebra.basis()

    def __post_init__(self):
        imgs = np.asarray(self.images, complex)
        if imgs.ndim != 3 or imgs.shape[0] != self.algebra.dim or imgs.shape[1] != imgs.shape[2]:
            raise ValueError(f"expected images of shape ({self.algebra.dim}, d, d), "
                             f"got {imgs.shape}")
        imgs.flags.writeable = False
        object.__setattr__(self, "images", imgs)

    @classmethod
    def from_callable(cls, algebra: FdAlgebra, f: Callable[[Element], np.ndarray]) -> LinearRep:
        basis = algebra.basis()
        if not basis:
            raise ValueError("the zero algebra has no matrix units; give the carrier explicitly")
        return cls(algebra, np.stack([np.asarray(f(e), complex) for e in basis]))

    @classmethod
    def zero(cls, algebra: FdAlgebra, d: int) -> LinearRep:
        return cls(algebra, np.zeros((algebra.dim, d, d), complex))

    @property
    def dim(self) -> int:
        return self.images.shape[1]

    def __call__(self, x: Element) -> np.ndarray:
        if x.algebra != self.algebra:
            raise ValueError("element of the wrong algebra")
        return np.tensordot(x.vec(), self.images, axes=1)

    def star_hom_residuals(self) -> tuple[float, float]:
        """Largest multiplicativity and adjoint defects over pairs of matrix units."""
        table, adjoint = _unit_tables(self.algebra)
        imgs = self.images
        prods = np.einsum("aij,bjk->abik", imgs, imgs)
        want = np.where(table[:, :, None, None] >= 0, imgs[np.maximum(table, 0)], 0)
        mult = float(np.linalg.norm(prods - want, axis=(2, 3)).max(initial=0.0))
        adj = float(np.linalg.norm(imgs.conj().transpose(0, 2, 1) - imgs[adjoint],
                                   axis=(1, 2)).max(initial=0.0))
        return mult, adj


def _unit_tables(algebra: FdAlgebra) -> tuple[np.ndarray, np.ndarray]:
    """Index of e_a e_b (or -1 when zero) and of e_a^* among matrix units."""
    labels = [(i, r, s) for i, n in enumerate(algebra.block_sizes)
              for r in range(n) for s in range(n)]
    pos = {lab: k for k, lab in enumerate(labels)}
    dim = len(labels)
    table = np.full((dim, dim), -1, dtype=int)
    for a, (i, r, s) in enumerate(labels):
        for b, (j, t, w) in enumerate(labels):
            if i == j and s == t:
                table[a, b] = pos[(i, r, w)]
    adjoint = np.array([pos[(i, s, r)] for i, r, s in labels], dtype=int)
    return table, adjoint


@dataclass(frozen=True, eq=False)
class CovariantRep:
    """A pair (pi, u) on C^d for the partial automorphism ``system``."""

    system: PartialAutomorphism
    pi: LinearRep
    u: np.ndarray

    def __post_init__(self):
        if self.pi.algebra != self.system.algebra:
            raise ValueError("pi is a representation of a different algebra")
        u = np.asarray(self.u, complex)
        if u.shape != (self.pi.dim, self.pi.dim):
            raise ValueError(f"u has shape {u.shape}, carrier has dimension {self.pi.dim}")
        u.flags.writeable = False
        object.__setattr__(self, "u", u)

    @property
    def dim(self) -> int:
        return self.pi.dim

    @cached_property
    def report(self) -> Report:
        return covrep_validate(self)


def covrep_validate(r: CovariantRep, tol: float = 1e-9) -> Report:
    """Residuals for the defining conditions of a covariant representation."""
    theta = r.system
    rep = Report()
    mult, adj = r.pi.star_hom_residuals()
    rep.add(residual_check("pi_multiplicative", mult, tol))
    rep.add(residual_check("pi_adjoint", adj, tol))
    u = r.u
    rep.add(residual_check("u_partial_isometry", float(np.linalg.norm(u @ u.conj().T @ u - u, 2)), tol))
    e_i = r.pi(theta.source.unit())
    e_j = r.pi(theta.target.unit())
    rep.add(residual_check("initial_space", float(np.linalg.norm(u.conj().T @ u - e_i, 2)), tol))
    rep.add(residual_check("final_space", float(np.linalg.norm(u @ u.conj().T - e_j, 2)), tol))
    cov = 0.0
    for a in theta.source.basis():
        lhs = r.pi(paut_apply(theta, a, 1))
        cov = max(cov, float(np.linalg.norm(lhs - u @ r.pi(a) @ u.conj().T, 2)))
    rep.add(residual_check("covariance", cov, tol))
    return rep


def pisometry_pow(u: np.ndarray, n: int) -> np.ndarray:
    """u^n for n >= 0 and (u^*)^{-n} for n < 0."""
    u = np.asarray(u, complex)
    base = u if n >= 0 else u.conj().T
    return np.linalg.matrix_power(base, abs(n)) if n else np.eye(u.shape[0], dtype=complex)


def pi_cross_u(r: CovariantRep, y: LElement, check: bool = True) -> np.ndarray:
    """(pi x u)(y) = sum_n pi(y(n)) u^n."""
    if y.system is not r.system:
        raise ValueError("element belongs to a different partial automorphism")
    if check and not r.report.ok:
        bad = ", ".join(f"{c.name} ({c.residual:.2e})" for c in r.report.failed())
        raise InvalidRepresentationError(f"not a covariant representation: {bad}")
    out = np.zeros((r.dim, r.dim), complex)
    for n, a in y.terms.items():
        out += r.pi(a) @ pisometry_pow(r.u, n)
    return out


def extract_covrep(sigma: LinearRep, realization: Realization,
                   tol: float = 1e-9) -> CovariantRep:
    """Recover (pi, u) from a representation of the realized covariance algebra."""
    if sigma.algebra != realization.algebra:
        raise ValueError("sigma is not a representation of the realized algebra")
    mult, adj = sigma.star_hom_residuals()
    if max(mult, adj) > tol:
        raise InvalidRepresentationError(
            f"sigma is not a *-homomorphism (product defect {mult:.2e}, adjoint defect {adj:.2e})")
    theta = realization.system
    pi = LinearRep.from_callable(theta.algebra,
                                 lambda a: sigma(realization(LElement.delta(theta, a, 0))))
    u = sigma(realization(u_element(theta)))
    return CovariantRep(theta, pi, u)


def block_representation(algebra: FdAlgebra, multiplicities: tuple[int, ...],
                         null_dim: int = 0, frame: np.ndarray | None = None) -> LinearRep:
    """x -> W (x_1 (x) 1_{m_1} + ... + 0_{null}) W^* for a unitary frame W."""
    if len(multiplicities) != algebra.num_blocks:
        raise ValueError("one multiplicity per block is required")
    d = sum(n * m for n, m in zip(algebra.block_sizes, multiplicities)) + null_dim
    w = np.eye(d, dtype=complex) if frame is None else np.asarray(frame, complex)

    def f(x: Element) -> np.ndarray:
        m = np.zeros((d, d), complex)
        pos = 0
        for b, mult in zip(x.blocks, multiplicities):
            k = b.shape[0] * mult
            m[pos:pos + k, pos:pos + k] = np.kron(b, np.eye(mult))
            pos += k
        return w @ m @ w.conj().T

    return LinearRep.from_callable(algebra, f)


def random_block_representation(algebra: FdAlgebra, rng: np.random.Generator,
                                max_mult: int = 2, max_null: int = 2) -> LinearRep:
    """Random multiplicities (possibly zero), a null summand, and a random unitary frame."""
    mults = tuple(int(m) for m in rng.integers(0, max_mult + 1, algebra.num_blocks))
    if not any(mults):
        mults = (1,) + mults[1:]
    null = int(rng.integers(0, max_null + 1))
    d = sum(n * m for n, m in zip(algebra.block_sizes, mults)) + null
    return block_representation(algebra, mults, null, random_unitary(d, rng))


def regular_covrep(realization: Realization) -> CovariantRep:
    """(pi, u) read off the regular representation: pi(a) = a delta_0, u = theta(e_I) delta_1."""
    theta = realization.system
    rep = realization.rep
    pi = LinearRep.from_callable(theta.algebra, lambda a: rep(LElement.delta(theta, a, 0)))
    return CovariantRep(theta, pi, rep(u_element(theta)))


def round_trip_residual(sigma: LinearRep, realization: Realization) -> float:
    """max over the spanning set {e delta_n} of |(pi x u)(e delta_n) - sigma(e delta_n)|."""
    r = extract_covrep(sigma, realization)
    worst = 0.0
    for _, b in l_basis(realization.system):
        diff = pi_cross_u(r, b) - sigma(realization(b))
        worst = max(worst, float(np.linalg.norm(diff, 2)))
    return worst


def key_identity_residual(r: CovariantRep, rng: np.random.Generator, grades) -> float:
    """max |u^n pi(theta^{-n}(a)) - pi(a) u^n| over random a in D_n."""
    theta = r.system
    worst = 0.0
    for n in grades:
        dn = domain_chain(theta, n)
        a = theta.algebra.random_element(rng, dn.blocks)
        lhs = pisometry_pow(r.u, n) @ r.pi(paut_apply(theta, a, -n))
        rhs = r.pi(a) @ pisometry_pow(r.u, n)
        worst = max(worst, float(np.linalg.norm(lhs - rhs, 2)))
    return worst
