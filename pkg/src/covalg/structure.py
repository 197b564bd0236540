"""Circle actions on finite-dimensional algebras and the structure theorem.

A circle action on B = M_{n_1} + ... + M_{n_k} is conjugation by diagonal
unitaries diag(z^{w_1}, ..., z^{w_n}) in each block, so it is described by
integer weights. The matrix unit e_rs of a block has grade w_r - w_s.

Regularity is witnessed by a partial isometry v in B_1 whose source and
range projections are the units of B_1^* B_1 and B_1 B_1^*. Everything else
(theta, lambda, rho, their daggers and the maps i_n) is an explicit product
with v or v^*.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .checks import Check, Report, residual_check
from .core import (DEFAULT_TOL, Element, FdAlgebra, Ideal, PartialAutomorphism, chain_bound,
                   domain_chain, numeric_rank, orthonormal_span)
from .covariance import LElement, l_basis, random_l_element, realize_covariance

POLAR_CUTOFF = 1e-10


class StructureError(ValueError):
    pass


class NotSemiSaturatedError(StructureError):
    def __init__(self, n: int):
        super().__init__(f"not semi-saturated at n = {n}")
        self.n = n


class NoWitnessError(StructureError):
    def __init__(self, reason: str, obstruction: list | None = None):
        super().__init__(f"no witness found: {reason}")
        self.reason = reason
        self.obstruction = obstruction or []


@dataclass(frozen=True)
class CircleAction:
    algebra: FdAlgebra
    weights: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        w = tuple(tuple(int(x) for x in ws) for ws in self.weights)
        if len(w) != self.algebra.num_blocks:
            raise ValueError(f"need weights for {self.algebra.num_blocks} blocks, got {len(w)}")
        for i, (ws, n) in enumerate(zip(w, self.algebra.block_sizes)):
            if len(ws) != n:
                raise ValueError(f"block {i} has size {n} but {len(ws)} weights")
        object.__setattr__(self, "weights", w)

    @classmethod
    def trivial(cls, algebra: FdAlgebra) -> CircleAction:
        return cls(algebra, tuple((0,) * n for n in algebra.block_sizes))

    @property
    def spread(self) -> int:
        return max((max(ws) - min(ws) for ws in self.weights if ws), default=0)

    def grade_mask(self, i: int, n: int) -> np.ndarray:
        w = np.array(self.weights[i])
        return (w[:, None] - w[None, :]) == n

    def alpha(self, z: complex, x: Element) -> Element:
        out = []
        for ws, b in zip(self.weights, x.blocks):
            d = np.array([z ** w for w in ws])
            out.append(d[:, None] * b * np.conj(d)[None, :])
        return Element(self.algebra, tuple(out))

    def project(self, x: Element, n: int) -> Element:
        """Spectral projection P_n, exact by grade selection."""
        return Element(self.algebra, tuple(np.where(self.grade_mask(i, n), b, 0)
                                           for i, b in enumerate(x.blocks)))

    def grade_residual(self, x: Element, n: int) -> float:
        return (x - self.project(x, n)).norm()

    @cached_property
    def b0(self) -> FixedPointAlgebra:
        return FixedPointAlgebra(self)


@dataclass(frozen=True, eq=False)
class GradedSubspace:
    grade: int
    basis: tuple[Element, ...]

    @property
    def dim(self) -> int:
        return len(self.basis)


def spectral_subspace(act: CircleAction, n: int) -> GradedSubspace:
    alg = act.algebra
    basis = tuple(alg.unit(i, r, s) for i in range(alg.num_blocks)
                  for r, s in zip(*np.nonzero(act.grade_mask(i, n))))
    return GradedSubspace(n, basis)


def span_of(elements: Sequence[Element], algebra: FdAlgebra,
            tol: float = DEFAULT_TOL) -> list[Element]:
    """Trace-orthonormal basis of the linear span."""
    if not elements:
        return []
    q = orthonormal_span([e.vec() for e in elements], tol, algebra.dim)
    return [algebra.from_vec(q[:, k]) for k in range(q.shape[1])]


def product_span(xs: Sequence[Element], ys: Sequence[Element], algebra: FdAlgebra,
                 tol: float = DEFAULT_TOL) -> list[Element]:
    return span_of([x @ y for x in xs for y in ys], algebra, tol)


def is_semisaturated(act: CircleAction, tol: float = DEFAULT_TOL) -> tuple[bool, int | None]:
    """Compare dim (B_1)^n with dim B_n for 1 <= n <= spread; certificate = first failing n."""
    alg = act.algebra
    b1 = list(spectral_subspace(act, 1).basis)
    power = b1
    for n in range(1, act.spread + 1):
        if n > 1:
            power = product_span(power, b1, alg, tol)
        if len(power) != spectral_subspace(act, n).dim:
            return False, n
    return True, None


class FixedPointAlgebra:
    """B_0 = sum over (block i, weight w) of M_{mult(i, w)}, with explicit coordinates."""

    def __init__(self, act: CircleAction):
        self.action = act
        keys, idx = [], []
        for i, ws in enumerate(act.weights):
            for w in sorted(set(ws)):
                keys.append((i, w))
                idx.append(np.array([r for r, x in enumerate(ws) if x == w]))
        self.keys = keys
        self.indices = idx
        self.algebra = FdAlgebra(tuple(len(ix) for ix in idx)) if keys else FdAlgebra(())

    def to_b0(self, x: Element) -> Element:
        return Element(self.algebra, tuple(x.blocks[i][np.ix_(ix, ix)]
                                           for (i, _), ix in zip(self.keys, self.indices)))

    def from_b0(self, y: Element) -> Element:
        alg = self.action.algebra
        out = [np.zeros((n, n), complex) for n in alg.block_sizes]
        for (i, _), ix, b in zip(self.keys, self.indices, y.blocks):
            out[i][np.ix_(ix, ix)] = b
        return Element(alg, tuple(out))

    def ideal_of(self, elements: Sequence[Element], tol: float = DEFAULT_TOL) -> Ideal:
        """Smallest block ideal of B_0 containing the given elements of B_0."""
        blocks = set()
        for e in elements:
            blocks |= self.to_b0(e).support(tol)
        return Ideal(self.algebra, frozenset(blocks))

    def span_ideal(self, elements: Sequence[Element], tol: float = DEFAULT_TOL) -> tuple[Ideal, bool]:
        """Ideal spanned by elements of B_0, and whether the span fills those blocks."""
        ideal = self.ideal_of(elements, tol)
        rank = len(span_of(elements, self.action.algebra, tol)) if elements else 0
        return ideal, rank == ideal.dim


def grade_products(act: CircleAction, n: int, adjoint_first: bool,
                   tol: float = DEFAULT_TOL) -> list[Element]:
    """Spanning set of B_n^* B_n (adjoint_first) or B_n B_n^*."""
    bn = spectral_subspace(act, n).basis
    if adjoint_first:
        return product_span([x.star() for x in bn], list(bn), act.algebra, tol)
    return product_span(list(bn), [x.star() for x in bn], act.algebra, tol)


@dataclass(frozen=True, eq=False)
class RegularityWitness:
    action: CircleAction
    v: Element

    @cached_property
    def source_unit(self) -> Element:
        return self.v.star() @ self.v

    @cached_property
    def range_unit(self) -> Element:
        return self.v @ self.v.star()


def _ideal_unit(act: CircleAction, elements: list[Element]) -> Element:
    b0 = act.b0
    ideal = b0.ideal_of(elements)
    return b0.from_b0(ideal.unit())


def _polar(x: Element) -> Element:
    out = []
    for b in x.blocks:
        if not b.size:
            out.append(b)
            continue
        u, s, vh = np.linalg.svd(b)
        keep = s > POLAR_CUTOFF * max(1.0, s[0] if s.size else 0.0)
        out.append(u[:, keep] @ vh[keep, :])
    return Element(x.algebra, tuple(out))


def witness_obstruction(act: CircleAction) -> list[dict]:
    """Weight pairs (w, w+1) in one block with unequal multiplicities.

    A partial isometry in B_1 maps the weight-w space into the weight-(w+1)
    space, so it can only be isometric on the first and onto the second when
    the two dimensions agree.
    """
    out = []
    for i, ws in enumerate(act.weights):
        counts = {w: ws.count(w) for w in set(ws)}
        for w, m in sorted(counts.items()):
            m1 = counts.get(w + 1, 0)
            if m1 and m != m1:
                out.append({"block": i, "weight": w, "dim_w": m, "dim_w_plus_1": m1})
    return out


def regularity_witness(act: CircleAction, seed: int = 0, retries: int = 8,
                       tol: float = DEFAULT_TOL) -> RegularityWitness:
    """Polar part of an element of B_1 whose source/range are the units of B_1^*B_1, B_1B_1^*.

    The first candidate is the sum of the grade-one matrix units (which gives
    e_21 for weights (0, 1) on M_2); later candidates are seeded random draws.
    """
    alg = act.algebra
    b1 = spectral_subspace(act, 1).basis
    if not b1:
        return RegularityWitness(act, alg.zero())
    e_src = _ideal_unit(act, grade_products(act, 1, True, tol))
    e_rng = _ideal_unit(act, grade_products(act, 1, False, tol))
    rng = np.random.default_rng(seed)
    candidates = [sum(b1[1:], b1[0])]
    for _ in range(retries):
        c = rng.standard_normal(len(b1)) + 1j * rng.standard_normal(len(b1))
        candidates.append(sum((ck * e for ck, e in zip(c, b1)), alg.zero()))
    for x in candidates:
        v = _polar(x)
        if act.grade_residual(v, 1) > 1e3 * tol:
            continue
        if (v.star() @ v).allclose(e_src, 1e3 * tol) and (v @ v.star()).allclose(e_rng, 1e3 * tol):
            return RegularityWitness(act, act.project(v, 1))
    obstruction = witness_obstruction(act)
    if obstruction:
        raise NoWitnessError("provable obstruction: grade-one ranks cannot fill the ideal units",
                             obstruction)
    raise NoWitnessError(f"retries exhausted after {retries + 1} candidates")


@dataclass(frozen=True, eq=False)
class RegularStructure:
    """theta, lambda, rho and their daggers built from a witness v."""

    witness: RegularityWitness
    theta: PartialAutomorphism

    @property
    def action(self) -> CircleAction:
        return self.witness.action

    @property
    def v(self) -> Element:
        return self.witness.v

    def theta_b(self, a: Element) -> Element:
        """theta(a) = v a v^*, on elements of B."""
        return self.v @ a @ self.v.star()

    def lam(self, s: Element) -> Element:
        """lambda(x^*) = v x^*, extended to B_1^* B."""
        return self.v @ s

    def rho(self, s: Element) -> Element:
        """rho(x^*) = x^* v, extended to B B_1^*."""
        return s @ self.v

    def lam_dag(self, s: Element) -> Element:
        """lambda-dagger(x) = rho(x^*)^* = v^* x."""
        return self.v.star() @ s

    def rho_dag(self, s: Element) -> Element:
        """rho-dagger(x) = lambda(x^*)^* = x v^*."""
        return s @ self.v.star()

    def v_pow(self, n: int) -> Element:
        base = self.v if n >= 0 else self.v.star()
        out = self.action.algebra.one()
        for _ in range(abs(n)):
            out = out @ base
        return out

    def i_map(self, n: int, x: Element, tol: float = 1e-8) -> Element:
        """i_n : B_n -> B_0; i_n(x) = x (v^*)^n for n >= 0 and x v^{|n|} for n < 0."""
        if self.action.grade_residual(x, n) > tol * max(1.0, x.norm()):
            raise ValueError(f"element is not of pure grade {n}")
        return x @ self.v_pow(-n)

    def i_inverse(self, n: int, a: Element) -> Element:
        """Inverse of i_n on B_n B_n^*: a -> a v^n (or a (v^*)^{|n|})."""
        return a @ self.v_pow(n)

    def phi(self, y: LElement) -> Element:
        """phi(sum a_n delta_n) = sum i_n^{-1}(a_n), the map C*(B_0, Theta) -> B."""
        b0 = self.action.b0
        out = self.action.algebra.zero()
        for n, a in y.terms.items():
            out = out + self.i_inverse(n, b0.from_b0(a))
        return out


def build_theta_lambda(w: RegularityWitness, tol: float = DEFAULT_TOL) -> RegularStructure:
    """theta = Ad v as a partial automorphism of B_0 (block map + unitaries)."""
    act = w.action
    b0 = act.b0
    v = w.v
    src = b0.ideal_of([w.source_unit], tol)
    tgt = b0.ideal_of([w.range_unit], tol)
    bmap, units = {}, {}
    for beta in sorted(src.blocks):
        i, _ = b0.keys[beta]
        ib = b0.indices[beta]
        hits = []
        for gamma in sorted(tgt.blocks):
            j, _ = b0.keys[gamma]
            if j != i:
                continue
            piece = v.blocks[i][np.ix_(b0.indices[gamma], ib)]
            if np.abs(piece).max(initial=0.0) > 1e3 * tol:
                hits.append((gamma, piece))
        if len(hits) != 1 or hits[0][1].shape[0] != hits[0][1].shape[1]:
            raise StructureError(f"witness does not map fixed-point block {beta} onto a single block")
        gamma, piece = hits[0]
        bmap[beta] = gamma
        units[beta] = piece
    theta = PartialAutomorphism(src, tgt, bmap, units, tol=1e3 * tol)
    return RegularStructure(w, theta)


def derived_maps(s: RegularStructure):
    return s.rho, s.lam_dag, s.rho_dag


def verify_structure_theorem(act: CircleAction, seed: int = 0, tol: float = 1e-9,
                             pairs: int = 20) -> Report:
    """End-to-end check that B is the covariance algebra of (B_0, theta).

    Raises NotSemiSaturatedError / NoWitnessError for failed preconditions.
    """
    ok, n_fail = is_semisaturated(act)
    if not ok:
        raise NotSemiSaturatedError(n_fail)
    wit = regularity_witness(act, seed)
    st = build_theta_lambda(wit)
    theta = st.theta
    b0 = act.b0
    alg = act.algebra
    rep = Report()
    rep.add(Check("semisaturated", True, 0.0, {"spread": act.spread}))
    rep.add(residual_check("witness_source_unit",
                           (wit.source_unit - _ideal_unit(act, grade_products(act, 1, True))).norm(), tol))
    rep.add(residual_check("witness_range_unit",
                           (wit.range_unit - _ideal_unit(act, grade_products(act, 1, False))).norm(), tol))

    # Dom(theta^n) = B_n^* B_n
    mismatch = []
    for n in range(-act.spread - 1, act.spread + 2):
        ideal, full = b0.span_ideal(grade_products(act, n, True))
        dom = domain_chain(theta, -n)
        if ideal.blocks != dom.blocks or not full:
            mismatch.append(n)
    rep.add(Check("domains_match_products", not mismatch, float(len(mismatch)),
                  {"mismatched_grades": mismatch}))

    if chain_bound(theta) is None:
        rep.add(Check("chain_bound_finite", False, 1.0, None))
        return rep
    real = realize_covariance(theta, seed=seed)
    rep.data["covariance_blocks"] = list(real.algebra.block_sizes)
    rep.data["algebra_blocks"] = list(alg.block_sizes)
    rep.data["fixed_point_blocks"] = list(b0.algebra.block_sizes)
    rep.add(Check("dimension", real.algebra.dim == alg.dim,
                  float(abs(real.algebra.dim - alg.dim)),
                  {"covariance": real.algebra.dim, "algebra": alg.dim}))
    rep.add(Check("block_structure",
                  sorted(real.algebra.block_sizes) == sorted(alg.block_sizes), 0.0,
                  {"covariance": sorted(real.algebra.block_sizes),
                   "algebra": sorted(alg.block_sizes)}))

    basis = l_basis(theta)
    images = [(n, st.phi(b)) for n, b in basis]
    rank = numeric_rank(np.column_stack([x.vec() for _, x in images])) if images else 0
    rep.add(Check("surjective", rank == alg.dim, float(alg.dim - rank), {"rank": rank}))
    rep.add(Check("injective", rank == len(basis), float(len(basis) - rank),
                  {"rank": rank, "domain_dim": len(basis)}))
    cov = max((act.grade_residual(x, n) for n, x in images), default=0.0)
    rep.add(residual_check("grade_covariance", cov, tol))

    rng = np.random.default_rng(seed)
    mult = adj = 0.0
    for _ in range(pairs):
        a = random_l_element(theta, rng)
        b = random_l_element(theta, rng)
        pa, pb = st.phi(a), st.phi(b)
        scale = max(1.0, pa.norm() * pb.norm())
        mult = max(mult, (st.phi(a @ b) - pa @ pb).norm() / scale)
        adj = max(adj, (st.phi(a.star()) - pa.star()).norm() / max(1.0, pa.norm()))
    rep.add(residual_check("phi_multiplicative", mult, tol))
    rep.add(residual_check("phi_adjoint", adj, tol))
    return rep


def action_from_grading(algebra: FdAlgebra, graded: Sequence[tuple[int, Element]],
                        tol: float = 1e-8) -> tuple[CircleAction, list[np.ndarray]]:
    """Integer weights implementing a grading given on a spanning set.

    Solves [H_i, x_i] = n x_i blockwise, diagonalizes H_i = W_i diag(w) W_i^*
    and returns the action together with the frames W_i; an element x of the
    original algebra corresponds to W^* x W in the diagonal picture.
    """
    weights, frames = [], []
    for i, n_i in enumerate(algebra.block_sizes):
        rows, rhs = [], []
        eye = np.eye(n_i)
        for n, x in graded:
            xb = x.blocks[i]
            if not np.abs(xb).max(initial=0.0) > tol:
                continue
            # vec(H x - x H) = (x^T (x) 1 - 1 (x) x) vec(H) in row-major form
            rows.append(np.kron(eye, xb.T) - np.kron(xb, eye))
            rhs.append(n * xb.ravel())
        if rows:
            sol, *_ = np.linalg.lstsq(np.vstack(rows), np.concatenate(rhs), rcond=None)
            h = sol.reshape(n_i, n_i)
            h = 0.5 * (h + h.conj().T)
        else:
            h = np.zeros((n_i, n_i))
        vals, vecs = np.linalg.eigh(h)
        vals = vals - vals.min()
        rounded = np.rint(vals)
        if np.abs(vals - rounded).max(initial=0.0) > 1e-6:
            raise StructureError(f"grading on block {i} is not implemented by integer weights")
        weights.append(tuple(int(w) for w in rounded))
        frames.append(vecs)
    act = CircleAction(algebra, tuple(weights))
    for n, x in graded:
        y = rotate(x, frames)
        if act.grade_residual(y, n) > 1e-6 * max(1.0, x.norm()):
            raise StructureError("recovered weights do not reproduce the grading")
    return act, frames


def rotate(x: Element, frames: Sequence[np.ndarray]) -> Element:
    return Element(x.algebra, tuple(w.conj().T @ b @ w for w, b in zip(frames, x.blocks)))


def dual_action(realization) -> tuple[CircleAction, list[np.ndarray]]:
    """The dual action on a realized covariance algebra, as integer weights."""
    graded = [(n, realization(b)) for n, b in l_basis(realization.system)]
    return action_from_grading(realization.algebra, graded)
