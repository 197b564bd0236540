"""Numerical Artin-Wedderburn decomposition of concrete *-algebras of matrices.

Given matrices generating a *-subalgebra of M_d, find block sizes
[n_1, ..., n_k] and an explicit *-isomorphism onto M_{n_1} + ... + M_{n_k}
built from a system of matrix units.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .core import DEFAULT_TOL, Element, FdAlgebra, orthonormal_span


class WedderburnError(RuntimeError):
    pass


class NotSelfAdjointError(WedderburnError):
    pass


@dataclass(frozen=True, eq=False)
class WedderburnIso:
    """*-isomorphism between a concrete matrix algebra and an abstract FdAlgebra.

    ``units[j][r][s]`` is the concrete matrix unit e_rs of block j, and
    ``multiplicities[j]`` the multiplicity of that block in the carrier.
    """

    algebra: FdAlgebra
    units: tuple[tuple[tuple[np.ndarray, ...], ...], ...]
    multiplicities: tuple[int, ...]
    carrier_dim: int

    @cached_property
    def _forward_matrix(self) -> np.ndarray:
        # coefficient of e_rs is tr(e_sr m) / mult, a fixed linear functional of m
        rows = []
        for e, mult in zip(self.units, self.multiplicities):
            n = len(e)
            rows.extend(e[s][r].T.ravel() / mult for r in range(n) for s in range(n))
        if not rows:
            return np.zeros((0, self.carrier_dim ** 2), complex)
        return np.array(rows)

    def forward(self, m: np.ndarray) -> Element:
        return self.algebra.from_vec(self._forward_matrix @ np.asarray(m, complex).ravel())

    def inverse(self, x: Element) -> np.ndarray:
        out = np.zeros((self.carrier_dim, self.carrier_dim), complex)
        for e, b in zip(self.units, x.blocks):
            n = len(e)
            for r in range(n):
                for s in range(n):
                    if b[r, s] != 0:
                        out += b[r, s] * e[r][s]
        return out

    def central_projection(self, j: int) -> np.ndarray:
        e = self.units[j]
        return sum(e[r][r] for r in range(len(e)))


def _mat(v: np.ndarray, d: int) -> np.ndarray:
    return v.reshape(d, d)


def span_closure(generators: Sequence[np.ndarray], tol: float = DEFAULT_TOL,
                 max_rounds: int = 64) -> np.ndarray:
    """Orthonormal basis (columns of vectorized matrices) of the algebra generated."""
    d = generators[0].shape[0]
    gens = [np.asarray(g, complex) for g in generators]
    basis = orthonormal_span([g.ravel() for g in gens], tol, d * d)
    for _ in range(max_rounds):
        if basis.shape[1] == 0:
            return basis
        mats = basis.T.reshape(-1, d, d)
        prods = np.concatenate([(g @ mats).reshape(-1, d * d) for g in gens]).T
        resid = prods - basis @ (basis.conj().T @ prods)
        norms = np.linalg.norm(resid, axis=0)
        if norms.max(initial=0.0) <= tol * 10:
            return basis
        extra = orthonormal_span(resid[:, norms > tol * 10], tol)
        basis = orthonormal_span(np.column_stack([basis, extra]), tol)
    raise WedderburnError("span closure did not stabilize")


def _residual_outside(basis: np.ndarray, v: np.ndarray) -> float:
    return float(np.linalg.norm(v - basis @ (basis.conj().T @ v)))


def _cluster(values: np.ndarray, gap: float) -> list[list[int]] | None:
    """Group sorted eigenvalues; None if some gap is ambiguous."""
    order = np.argsort(values)
    groups: list[list[int]] = [[int(order[0])]]
    for a, b in zip(order[:-1], order[1:]):
        diff = values[b] - values[a]
        if diff > 1e3 * gap:
            groups.append([int(b)])
        elif diff > gap:
            return None
        else:
            groups[-1].append(int(b))
    return groups


def wedderburn(generators: Sequence[np.ndarray], seed: int = 0, tol: float = DEFAULT_TOL,
               gap: float = 1e-6, retries: int = 8,
               hint: np.ndarray | None = None) -> tuple[FdAlgebra, WedderburnIso]:
    """Decompose the *-algebra generated by the given d x d matrices.

    Blocks come back sorted by size, ties broken by the trace of ``hint``
    (default: the first generator) against each minimal central projection.
    A self-adjoint ``hint`` in the algebra also orders the minimal
    projections inside each block, and the sum of the generators fixes the
    phases of the matrix units, so the iso is reproducible across calls.
    """
    if not len(generators):
        raise ValueError("need at least one generator")
    gens = [np.asarray(g, complex) for g in generators]
    d = gens[0].shape[0]
    rng = np.random.default_rng(seed)
    basis = span_closure(gens, tol)
    dim = basis.shape[1]
    mats = [_mat(basis[:, k], d) for k in range(dim)]
    if dim == 0:
        alg = FdAlgebra(())
        return alg, WedderburnIso(alg, (), (), d)
    for m in mats:
        if _residual_outside(basis, m.conj().T.ravel()) > 1e3 * tol * max(1.0, np.linalg.norm(m)):
            raise NotSelfAdjointError("generated algebra is not closed under adjoints")

    # center: z = sum c_k b_k commuting with a few generic elements, which
    # generate the whole (semisimple) algebra
    probes = [sum(c * m for c, m in zip(rng.standard_normal(dim) + 1j * rng.standard_normal(dim),
                                        mats)) for _ in range(3)]
    system = np.vstack([np.column_stack([(m @ g - g @ m).ravel() for m in mats])
                        for g in probes])
    _, s, vh = np.linalg.svd(system, full_matrices=False)
    s_full = np.zeros(dim)
    s_full[:len(s)] = s
    null = vh.conj().T[:, s_full <= tol * max(1.0, s_full[0]) * 10]
    center = [sum(c * m for c, m in zip(null[:, k], mats)) for k in range(null.shape[1])]
    center = [0.5 * (z + z.conj().T) for z in center] + [0.5j * (z.conj().T - z) for z in center]
    zdim = null.shape[1]

    # the algebra's unit is the projection onto the span of its ranges
    ranges = orthonormal_span(np.column_stack(mats), tol)

    fp = gens[0] if hint is None else np.asarray(hint, complex)
    connector = sum(gens)
    for _ in range(retries):
        coeffs = rng.standard_normal(len(center))
        z = sum(c * m for c, m in zip(coeffs, center))
        z = ranges.conj().T @ z @ ranges
        z = 0.5 * (z + z.conj().T)
        w, vecs = np.linalg.eigh(z)
        groups = _cluster(w, gap * max(1.0, np.abs(w).max()))
        if groups is None or len(groups) != zdim:
            continue
        projs = [ranges @ vecs[:, g] @ vecs[:, g].conj().T @ ranges.conj().T for g in groups]
        blocks = []
        ok = True
        for p in projs:
            piece = _block_units(p, mats, d, rng, tol, gap, hint, connector)
            if piece is None:
                ok = False
                break
            blocks.append(piece)
        if not ok:
            continue
        if sum(len(u) ** 2 for u, _ in blocks) != dim:
            continue
        keyed = sorted(blocks, key=lambda b: (len(b[0]), _trace_key(fp, b[0])))
        alg = FdAlgebra(tuple(len(u) for u, _ in keyed))
        iso = WedderburnIso(alg, tuple(tuple(tuple(row) for row in u) for u, _ in keyed),
                            tuple(mult for _, mult in keyed), d)
        return alg, iso
    raise WedderburnError(f"central spectrum degenerate after {retries} retries")


def _trace_key(fp: np.ndarray, units) -> float:
    p = sum(units[r][r] for r in range(len(units)))
    return round(float(np.real(np.trace(fp @ p))), 6)


def _eigenframes(frame: np.ndarray, h: np.ndarray, gap: float) -> list[np.ndarray] | None:
    """Eigenspaces of h compressed to range(frame), by increasing eigenvalue."""
    hh = frame.conj().T @ h @ frame
    w, vecs = np.linalg.eigh(0.5 * (hh + hh.conj().T))
    groups = _cluster(w, gap * max(1.0, np.abs(w).max()))
    if groups is None:
        return None
    groups.sort(key=lambda g: w[g[0]])
    return [frame @ vecs[:, g] for g in groups]


def _block_units(p: np.ndarray, mats: list[np.ndarray], d: int, rng: np.random.Generator,
                 tol: float, gap: float, hint: np.ndarray | None, connector: np.ndarray):
    """Matrix units for the simple summand with central projection p."""
    sub = orthonormal_span(np.column_stack([(p @ m).ravel() for m in mats]), tol)
    sdim = sub.shape[1]
    n = int(round(np.sqrt(sdim)))
    if n * n != sdim:
        return None
    elems = [_mat(sub[:, k], d) for k in range(sdim)]
    herm = [0.5 * (e + e.conj().T) for e in elems] + [0.5j * (e.conj().T - e) for e in elems]
    rng_p = orthonormal_span(p, tol)
    mult = rng_p.shape[1] // n
    if mult * n != rng_p.shape[1]:
        return None
    h = sum(c * e for c, e in zip(rng.standard_normal(len(herm)), herm))
    # hint eigenspaces first (ordered), then split ties with the random element
    frames = [rng_p]
    if hint is not None:
        frames = _eigenframes(rng_p, p @ hint @ p, gap)
        if frames is None:
            return None
    q = []
    for f in frames:
        if f.shape[1] == mult:
            q.append(f @ f.conj().T)
            continue
        split = _eigenframes(f, h, gap)
        if split is None or any(g.shape[1] != mult for g in split):
            return None
        q.extend(g @ g.conj().T for g in split)
    if len(q) != n:
        return None
    col = [q[0]]
    for r in range(1, n):
        x = q[r] @ connector @ q[0]
        nrm2 = np.linalg.norm(x.conj().T @ x, 2)
        if nrm2 < gap:
            a = sum((rng.standard_normal() + 1j * rng.standard_normal()) * e for e in elems)
            x = q[r] @ a @ q[0]
            nrm2 = np.linalg.norm(x.conj().T @ x, 2)
            if nrm2 < gap:
                return None
        col.append(x / np.sqrt(nrm2))
    units = [[col[r] @ col[s].conj().T for s in range(n)] for r in range(n)]
    return units, mult
