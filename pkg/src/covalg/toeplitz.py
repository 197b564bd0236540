"""The Toeplitz extension E(A, Theta) in symbol-plus-correction form.

An element is stored as

    sum_n b_n (x) S^n  +  sum_{i,j >= 1} c_ij (x) e_ij

on H (x) l2(N*), where S is the unilateral shift (S^n means S^{*|n|} for
n < 0), b_n = a_n delta_n lies in B_n and c_ij delta_{i-j} in B_i B_j^*. The
symbol is kept as an LElement of the covariance algebra B; the correction
coefficient c_ij is the A-valued coefficient of delta_{i-j}. Products follow
from S^*S = 1, S^p S^{*q} = S^{p-q} - sum_l e_{l+p-q, l} and the matrix-unit
rules, so the model is exact. Truncated operator matrices serve only as an
independent check.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Mapping

import numpy as np

from .checks import Report, residual_check
from .core import (DEFAULT_TOL, Element, PartialAutomorphism, chain_bound, domain_chain,
                   ideal_product, orthonormal_span, paut_apply)
from .covariance import (LElement, UnboundedChainError, l_basis, realize_covariance,
                         regular_rep, u_element)
from .reprs import LinearRep, pisometry_pow
from .wedderburn import WedderburnIso, wedderburn


def _bound(theta: PartialAutomorphism) -> int:
    n = chain_bound(theta)
    if n is None:
        raise UnboundedChainError("the Toeplitz model needs terminating domain chains")
    return n


def allowed_ideal(theta: PartialAutomorphism, i: int, j: int):
    """Coefficients c with c delta_{i-j} in B_i B_j^*: the ideal D_i cap D_{i-j}."""
    return ideal_product(domain_chain(theta, i), domain_chain(theta, i - j))


def _hmul(theta: PartialAutomorphism, x: Element, n: int, y: Element, m: int) -> Element:
    """Coefficient of (x delta_n)(y delta_m) = theta^n(theta^{-n}(x) y) delta_{n+m}."""
    return paut_apply(theta, paut_apply(theta, x, -n) @ y, n)


def _hstar(theta: PartialAutomorphism, x: Element, n: int) -> Element:
    """Coefficient of (x delta_n)^* = theta^{-n}(x^*) delta_{-n}."""
    return paut_apply(theta, x.star(), -n)


@dataclass(frozen=True, eq=False)
class ToeplitzElement:
    system: PartialAutomorphism
    symbol: LElement
    corrections: Mapping[tuple[int, int], Element]

    def __post_init__(self):
        theta = self.system
        if self.symbol.system is not theta:
            raise ValueError("symbol belongs to a different partial automorphism")
        clean = {}
        for (i, j), c in self.corrections.items():
            i, j = int(i), int(j)
            if i < 1 or j < 1:
                raise ValueError(f"correction index ({i}, {j}) must be >= 1")
            ideal = allowed_ideal(theta, i, j)
            stray = c.support(DEFAULT_TOL) - ideal.blocks
            if stray:
                raise ValueError(f"correction at ({i}, {j}) has support on blocks {sorted(stray)} "
                                 f"outside B_{i} B_{j}^*")
            c = ideal.project(c)
            if any(b.any() for b in c.blocks):
                clean[(i, j)] = c
        object.__setattr__(self, "corrections", dict(sorted(clean.items())))

    @classmethod
    def zero(cls, theta: PartialAutomorphism) -> ToeplitzElement:
        return cls(theta, LElement.zero(theta), {})

    @classmethod
    def from_symbol(cls, b: LElement) -> ToeplitzElement:
        """sum_n b(n) delta_n (x) S^n."""
        return cls(b.system, b, {})

    @classmethod
    def correction(cls, theta: PartialAutomorphism, i: int, j: int, c: Element) -> ToeplitzElement:
        return cls(theta, LElement.zero(theta), {(i, j): c})

    def _check(self, other: ToeplitzElement):
        if other.system is not self.system:
            raise ValueError("Toeplitz elements of different systems")

    def __add__(self, other: ToeplitzElement) -> ToeplitzElement:
        self._check(other)
        corr = dict(self.corrections)
        for k, c in other.corrections.items():
            corr[k] = corr[k] + c if k in corr else c
        return ToeplitzElement(self.system, self.symbol + other.symbol, corr)

    def __neg__(self) -> ToeplitzElement:
        return ToeplitzElement(self.system, -self.symbol,
                               {k: -c for k, c in self.corrections.items()})

    def __sub__(self, other: ToeplitzElement) -> ToeplitzElement:
        return self + (-other)

    def __mul__(self, z: complex) -> ToeplitzElement:
        return ToeplitzElement(self.system, z * self.symbol,
                               {k: z * c for k, c in self.corrections.items()})

    __rmul__ = __mul__

    def __matmul__(self, other: ToeplitzElement) -> ToeplitzElement:
        return t_mul(self, other)

    def star(self) -> ToeplitzElement:
        return t_star(self)

    def size(self) -> float:
        """Sum of coefficient norms (a convenient scale, not the operator norm)."""
        return self.symbol.norm1() + sum(c.norm() for c in self.corrections.values())

    def allclose(self, other: ToeplitzElement, tol: float = DEFAULT_TOL) -> bool:
        return (self - other).size() <= tol * max(1.0, self.size(), other.size())

    def __repr__(self) -> str:
        return f"ToeplitzElement(symbol={self.symbol!r}, corrections={self.corrections!r})"


def t_mul(x: ToeplitzElement, y: ToeplitzElement) -> ToeplitzElement:
    x._check(y)
    theta = x.system
    _bound(theta)
    sym: dict[int, Element] = {}
    corr: dict[tuple[int, int], Element] = {}

    def add_sym(n, c):
        sym[n] = sym[n] + c if n in sym else c

    def add_corr(k, c):
        corr[k] = corr[k] + c if k in corr else c

    for n, a in x.symbol.terms.items():
        for m, b in y.symbol.terms.items():
            c = _hmul(theta, a, n, b, m)
            add_sym(n + m, c)
            if n > 0 and m < 0:
                # S^p S^{*q} = S^{p-q} - sum_{l <= q, l+p-q >= 1} e_{l+p-q, l}
                for l in range(1, -m + 1):
                    if l + n + m >= 1:
                        add_corr((l + n + m, l), -c)
        for (i, j), c in y.corrections.items():
            if i + n >= 1:
                add_corr((i + n, j), _hmul(theta, a, n, c, i - j))
    for (i, j), c in x.corrections.items():
        for m, b in y.symbol.terms.items():
            if j - m >= 1:
                add_corr((i, j - m), _hmul(theta, c, i - j, b, m))
        for (k, l), d in y.corrections.items():
            if j == k:
                add_corr((i, l), _hmul(theta, c, i - j, d, k - l))
    return ToeplitzElement(theta, LElement(theta, sym), corr)


def t_star(x: ToeplitzElement) -> ToeplitzElement:
    theta = x.system
    return ToeplitzElement(theta, x.symbol.star(),
                           {(j, i): _hstar(theta, c, i - j) for (i, j), c in x.corrections.items()})


def lambda_membership(x: ToeplitzElement, tol: float = DEFAULT_TOL) -> bool:
    """x lies in the ideal Lambda iff its symbol vanishes."""
    return x.symbol.norm1() <= tol * max(1.0, x.size())


def gamma_component(x: ToeplitzElement, n: int) -> ToeplitzElement:
    """Grade-n part: b_n (x) S^n has grade n and c_ij (x) e_ij has grade i - j."""
    theta = x.system
    sym = LElement(theta, {n: x.symbol.terms[n]} if n in x.symbol.terms else {})
    return ToeplitzElement(theta, sym, {k: c for k, c in x.corrections.items() if k[0] - k[1] == n})


def grades(x: ToeplitzElement) -> list[int]:
    return sorted(set(x.symbol.terms) | {i - j for i, j in x.corrections})


def quotient_phi(x: ToeplitzElement) -> LElement:
    """The quotient map E -> B: drop the correction."""
    _bound(x.system)
    return x.symbol


def d_embed(a: Element, theta: PartialAutomorphism) -> ToeplitzElement:
    """a -> a (x) 1."""
    return ToeplitzElement(theta, LElement.delta(theta, a, 0), {})


def j_embed(y: Element, theta: PartialAutomorphism) -> ToeplitzElement:
    """y in J -> y (x) e_11."""
    return ToeplitzElement.correction(theta, 1, 1, y)


def w_element(theta: PartialAutomorphism) -> ToeplitzElement:
    """w = u (x) S, the partial isometry implementing theta on the grade-zero part."""
    return ToeplitzElement.from_symbol(u_element(theta))


def theta_e(x: ToeplitzElement, model: ToeplitzModel | None = None,
            tol: float = 1e-9) -> ToeplitzElement:
    """x -> (u (x) S) x (u (x) S)^* for x in E_1^* E_1."""
    theta = x.system
    model = model or ToeplitzModel(theta)
    frame = model.product_frame(1, adjoint_first=True)
    v = model.vec(x)
    if np.linalg.norm(v - frame @ (frame.conj().T @ v)) > tol * max(1.0, np.linalg.norm(v)):
        raise ValueError("element is not in E_1^* E_1")
    w = w_element(theta)
    return w @ x @ w.star()


class ToeplitzModel:
    """Bases, coordinates, a faithful representation, and truncated-matrix oracles."""

    def __init__(self, theta: PartialAutomorphism, seed: int = 0):
        self.system = theta
        self.bound = _bound(theta)
        self.seed = seed
        n = self.bound
        self.correction_keys = [(i, j) for i in range(1, n) for j in range(1, n)
                                if not allowed_ideal(theta, i, j).is_zero()]
        self.grades = sorted({g for g, _ in l_basis(theta)})

    # ----- coordinates
    @cached_property
    def symbol_basis(self) -> list[ToeplitzElement]:
        return [ToeplitzElement.from_symbol(b) for _, b in l_basis(self.system)]

    @cached_property
    def lambda_basis(self) -> list[ToeplitzElement]:
        theta = self.system
        return [ToeplitzElement.correction(theta, i, j, e) for i, j in self.correction_keys
                for e in allowed_ideal(theta, i, j).basis()]

    @property
    def basis(self) -> list[ToeplitzElement]:
        return self.symbol_basis + self.lambda_basis

    @property
    def dim(self) -> int:
        return len(self.basis)

    def vec(self, x: ToeplitzElement) -> np.ndarray:
        alg = self.system.algebra
        parts = [x.symbol.term(n).vec() for n in self.grades]
        parts += [x.corrections.get(k, alg.zero()).vec() for k in self.correction_keys]
        return np.concatenate(parts) if parts else np.zeros(0, complex)

    def from_vec(self, v: np.ndarray) -> ToeplitzElement:
        theta = self.system
        alg = theta.algebra
        step = alg.dim
        pos = 0
        sym, corr = {}, {}
        for n in self.grades:
            sym[n] = domain_chain(theta, n).project(alg.from_vec(v[pos:pos + step]))
            pos += step
        for k in self.correction_keys:
            corr[k] = allowed_ideal(theta, *k).project(alg.from_vec(v[pos:pos + step]))
            pos += step
        return ToeplitzElement(theta, LElement(theta, sym), corr)

    def span_frame(self, elements) -> np.ndarray:
        if not elements:
            return np.zeros((len(self.grades) + len(self.correction_keys)) * self.system.algebra.dim, 0)
        return orthonormal_span([self.vec(e) for e in elements], DEFAULT_TOL)

    def grade_basis(self, n: int) -> list[ToeplitzElement]:
        return [b for b in self.basis if grades(b) == [n]]

    def product_frame(self, n: int, adjoint_first: bool) -> np.ndarray:
        """Orthonormal frame of E_n^* E_n (adjoint_first) or E_n E_n^*."""
        en = self.grade_basis(n)
        if adjoint_first:
            prods = [x.star() @ y for x in en for y in en]
        else:
            prods = [x @ y.star() for x in en for y in en]
        return self.span_frame(prods)

    def generated_dim(self, max_rounds: int = 32) -> int:
        """Dimension of the algebra generated by (B_0 (x) 1) and (B_1 (x) S).

        Each round multiplies the generators only by the directions found in
        the previous round; older directions already have their products in
        the span.
        """
        gens = [b for b in self.symbol_basis if grades(b) in ([0], [1])]
        gens += [g.star() for g in gens]
        frame = self.span_frame(gens)
        fresh = frame
        for _ in range(max_rounds):
            frontier = [self.from_vec(fresh[:, k]) for k in range(fresh.shape[1])]
            prods = [g @ e for g in gens for e in frontier]
            if not prods:
                return frame.shape[1]
            vecs = np.column_stack([self.vec(p) for p in prods])
            resid = vecs - frame @ (frame.conj().T @ vecs)
            fresh = orthonormal_span(resid, DEFAULT_TOL)
            if fresh.shape[1] == 0:
                return frame.shape[1]
            frame = np.column_stack([frame, fresh])
        raise RuntimeError("span closure did not stabilize")

    # ----- operator pictures
    @cached_property
    def rep(self):
        return regular_rep(self.system)

    @cached_property
    def realization(self):
        return realize_covariance(self.system, seed=self.seed)

    def _bmat(self, b: LElement, compact: bool) -> np.ndarray:
        return self.realization(b).to_matrix() if compact else self.rep(b)

    def carrier_dim(self, compact: bool = False) -> int:
        return self.realization.algebra.carrier_dim if compact else self.rep.dim

    def truncated(self, x: ToeplitzElement, levels: int | None = None,
                  compact: bool = False) -> np.ndarray:
        """Compression to H (x) C^M, level-major.

        H carries the regular representation of B, or with ``compact`` the
        block-diagonal representation of the realized B (smaller, same kernel).
        """
        m = self.bound + 3 if levels is None else levels
        h = self.carrier_dim(compact)
        out = np.zeros((m * h, m * h), complex)
        for n, a in x.symbol.terms.items():
            out += np.kron(_shift_power(m, n), self._bmat(LElement.delta(self.system, a, n), compact))
        for (i, j), c in x.corrections.items():
            if i <= m and j <= m:
                e = np.zeros((m, m))
                e[i - 1, j - 1] = 1.0
                out += np.kron(e, self._bmat(LElement.delta(self.system, c, i - j), compact))
        return out

    def exact_window(self, levels: int | None = None) -> int:
        """Number of leading levels on which truncation commutes with products.

        Every element moves levels by at most N - 1, so T(xy) - T(x)T(y) is
        supported on rows and columns at levels >= M - N + 2.
        """
        m = self.bound + 3 if levels is None else levels
        return max(0, m - self.bound + 1)

    @cached_property
    def _lambda_frame(self) -> np.ndarray:
        mats = [self.truncated(b, compact=True) for b in self.lambda_basis]
        if not mats:
            size = (self.bound + 3) * self.carrier_dim(compact=True)
            return np.zeros((size, 0), complex)
        return orthonormal_span(np.column_stack(mats), DEFAULT_TOL)

    def faithful(self, x: ToeplitzElement) -> np.ndarray:
        """R(phi(x)) + (restriction of x to the range of Lambda): a faithful *-representation."""
        b = self._bmat(x.symbol, compact=True)
        lam = self.lambda_rep(x)
        out = np.zeros((b.shape[0] + lam.shape[0],) * 2, complex)
        out[:b.shape[0], :b.shape[0]] = b
        out[b.shape[0]:, b.shape[0]:] = lam
        return out

    def lambda_rep(self, x: ToeplitzElement) -> np.ndarray:
        """Restriction of x to the range of Lambda (faithful on Lambda)."""
        w = self._lambda_frame
        return w.conj().T @ self.truncated(x, compact=True) @ w

    @cached_property
    def realized(self) -> tuple:
        """(FdAlgebra, iso) for E through the faithful representation."""
        gens = [self.faithful(b) for b in self.basis]
        return wedderburn(gens, seed=self.seed)

    @cached_property
    def realized_lambda(self) -> tuple:
        if not self.lambda_basis:
            from .core import FdAlgebra
            alg = FdAlgebra(())
            return alg, WedderburnIso(alg, (), (), self._lambda_frame.shape[1])
        gens = [self.lambda_rep(b) for b in self.lambda_basis]
        return wedderburn(gens, seed=self.seed)

    def to_realized(self, x: ToeplitzElement) -> Element:
        return self.realized[1].forward(self.faithful(x))

    def to_realized_lambda(self, x: ToeplitzElement) -> Element:
        if not lambda_membership(x):
            raise ValueError("element is not in Lambda")
        return self.realized_lambda[1].forward(self.lambda_rep(x))


def _shift_power(m: int, n: int) -> np.ndarray:
    """Compression of S^n to the first m basis vectors (S^{*|n|} for n < 0)."""
    s = np.eye(m, k=-1)
    return np.linalg.matrix_power(s if n >= 0 else s.T, abs(n))


def truncation_residual(model: ToeplitzModel, x: ToeplitzElement, y: ToeplitzElement,
                        levels: int | None = None) -> float:
    """Compare the model product with truncated operator products on the exact window."""
    h = model.rep.dim
    k = model.exact_window(levels) * h
    lhs = model.truncated(x @ y, levels)
    rhs = model.truncated(x, levels) @ model.truncated(y, levels)
    diff = lhs - rhs
    scale = max(1.0, np.linalg.norm(model.truncated(x, levels), 2)
                * np.linalg.norm(model.truncated(y, levels), 2))
    return float(max(np.abs(diff[:, :k]).max(initial=0.0),
                     np.abs(diff[:k, :]).max(initial=0.0)) / scale)


def random_toeplitz(model: ToeplitzModel, rng: np.random.Generator) -> ToeplitzElement:
    """Gaussian coefficients on every symbol grade and every allowed correction."""
    k = len(model.vec(ToeplitzElement.zero(model.system)))
    return model.from_vec(rng.standard_normal(k) + 1j * rng.standard_normal(k))


# ---------------------------------------------------------------- representations
@dataclass(frozen=True, eq=False)
class ToeplitzRepBuilder:
    """pi_E from a pair (pi, V) with V pi(x) = pi(theta(x)) V and V^*V pi(x) = pi(x) on I."""

    system: PartialAutomorphism
    pi: LinearRep
    v: np.ndarray

    def conditions(self, tol: float = 1e-9) -> Report:
        theta = self.system
        v = np.asarray(self.v, complex)
        rep = Report()
        mult, adj = self.pi.star_hom_residuals()
        rep.add(residual_check("pi_star_homomorphism", max(mult, adj), tol))
        rep.add(residual_check("partial_isometry", float(np.linalg.norm(v @ v.conj().T @ v - v, 2)), tol))
        c1 = c2 = 0.0
        for x in theta.source.basis():
            px = self.pi(x)
            c1 = max(c1, float(np.linalg.norm(v @ px - self.pi(paut_apply(theta, x, 1)) @ v, 2)))
            c2 = max(c2, float(np.linalg.norm(v.conj().T @ v @ px - px, 2)))
        rep.add(residual_check("intertwines_theta", c1, tol))
        rep.add(residual_check("initial_space_contains_I", c2, tol))
        return rep

    def pi_n(self, n: int, a: Element) -> np.ndarray:
        """V^{n-1} pi(theta^{-(n-1)}(a)) V^{*(n-1)} - V^n pi(theta^{-n}(a)) V^{*n}."""
        theta = self.system
        v = np.asarray(self.v, complex)
        p, q = pisometry_pow(v, n - 1), pisometry_pow(v, n)
        return (p @ self.pi(paut_apply(theta, a, -(n - 1))) @ p.conj().T
                - q @ self.pi(paut_apply(theta, a, -n)) @ q.conj().T)

    def pi_tilde(self, y: ToeplitzElement) -> np.ndarray:
        """On the grade-zero part a (x) 1 + sum a_n (x) e_nn."""
        if grades(y) not in ([], [0]):
            raise ValueError("pi_tilde is defined on the grade-zero part only")
        out = self.pi(y.symbol.term(0))
        for (i, j), a in y.corrections.items():
            out = out + self.pi_n(i, a)
        return out

    def __call__(self, x: ToeplitzElement) -> np.ndarray:
        theta = self.system
        v = np.asarray(self.v, complex)
        w = w_element(theta)
        d = self.pi.dim
        out = np.zeros((d, d), complex)
        for k in grades(x):
            z = gamma_component(x, k)
            if k >= 0:
                wk = ToeplitzElement.from_symbol(LElement.delta(theta, theta.algebra.one(), 0))
                for _ in range(k):
                    wk = wk @ w.star()
                out += self.pi_tilde(z @ wk) @ pisometry_pow(v, k)
            else:
                zs = z.star()
                wk = ToeplitzElement.from_symbol(LElement.delta(theta, theta.algebra.one(), 0))
                for _ in range(-k):
                    wk = wk @ w.star()
                out += (self.pi_tilde(zs @ wk) @ pisometry_pow(v, -k)).conj().T
        return out
