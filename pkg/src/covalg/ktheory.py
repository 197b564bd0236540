"""K_0 of finite-dimensional algebras and exactness of integer sequences.

K_0(M_{n_1} + ... + M_{n_k}) = Z^k (one generator per block, the class of a
minimal projection) and K_1 = 0. A *-homomorphism induces the integer
matrix of multiplicities: entry (j, i) is the rank, inside target block j,
of the image of a minimal projection of source block i.

All integer work uses Python ints, so there is no overflow or rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .checks import Check, Report
from .core import Element, FdAlgebra, PartialAutomorphism, chain_bound
from .covariance import LElement, UnboundedChainError, realize_covariance

IntMatrix = list[list[int]]


@dataclass(frozen=True)
class K0Group:
    rank: int
    labels: tuple[int, ...]

    k1_rank = 0     # finite-dimensional algebras have vanishing K_1


def k0(alg: FdAlgebra) -> K0Group:
    return K0Group(alg.num_blocks, tuple(range(alg.num_blocks)))


def induced_map(source: FdAlgebra, target: FdAlgebra, h: Callable[[Element], Element],
                tol: float = 1e-6) -> IntMatrix:
    """Multiplicity matrix (target blocks x source blocks) of a *-homomorphism."""
    out = [[0] * source.num_blocks for _ in range(target.num_blocks)]
    for i in range(source.num_blocks):
        p = source.unit(i, 0, 0)
        q = h(p)
        if q.algebra != target:
            raise ValueError("homomorphism lands in the wrong algebra")
        if (q @ q - q).norm() > tol or (q.star() - q).norm() > tol:
            raise ValueError(f"image of a minimal projection of block {i} is not a projection; "
                             f"the map is not a *-homomorphism")
        for j, b in enumerate(q.blocks):
            t = float(np.real(np.trace(b)))
            r = int(round(t))
            if abs(t - r) > tol:
                raise ValueError(f"non-integral rank {t} in target block {j}")
            out[j][i] = r
    return out


def mat_mul(a: IntMatrix, b: IntMatrix, inner: int | None = None) -> IntMatrix:
    k = len(b) if inner is None else inner
    cols = len(b[0]) if b else 0
    return [[sum(a[i][t] * b[t][j] for t in range(k)) for j in range(cols)] for i in range(len(a))]


def mat_sub(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def identity(n: int) -> IntMatrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def zeros(r: int, c: int) -> IntMatrix:
    return [[0] * c for _ in range(r)]


def det(m: IntMatrix) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    n = len(m)
    if n == 0:
        return 1
    a = [list(map(int, row)) for row in m]
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


@dataclass(frozen=True)
class SmithForm:
    u: IntMatrix
    d: IntMatrix
    v: IntMatrix
    v_inv: IntMatrix

    @property
    def divisors(self) -> list[int]:
        return [self.d[i][i] for i in range(min(len(self.d), len(self.d[0]) if self.d else 0))
                if self.d[i][i] != 0]

    @property
    def rank(self) -> int:
        return len(self.divisors)


def snf(m: IntMatrix, cols: int | None = None) -> SmithForm:
    """U m V = D with U, V unimodular and d_1 | d_2 | ... (nonnegative)."""
    rows = len(m)
    ncols = (len(m[0]) if rows else 0) if cols is None else cols
    a = [list(map(int, r)) for r in m]
    u = identity(rows)
    v = identity(ncols)
    vi = identity(ncols)

    def swap_rows(i, j):
        a[i], a[j] = a[j], a[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]
        vi[i], vi[j] = vi[j], vi[i]

    def add_row(src, dst, c):          # row_dst += c * row_src
        a[dst] = [x + c * y for x, y in zip(a[dst], a[src])]
        u[dst] = [x + c * y for x, y in zip(u[dst], u[src])]

    def add_col(src, dst, c):          # col_dst += c * col_src
        for row in a:
            row[dst] += c * row[src]
        for row in v:
            row[dst] += c * row[src]
        vi[src] = [x - c * y for x, y in zip(vi[src], vi[dst])]

    def negate_row(i):
        a[i] = [-x for x in a[i]]
        u[i] = [-x for x in u[i]]

    t = 0
    while t < min(rows, ncols):
        entries = [(abs(a[i][j]), i, j) for i in range(t, rows) for j in range(t, ncols) if a[i][j]]
        if not entries:
            break
        _, pi, pj = min(entries)
        swap_rows(t, pi)
        swap_cols(t, pj)
        while True:
            done = True
            for i in range(t + 1, rows):
                if a[i][t]:
                    q = a[i][t] // a[t][t]
                    add_row(t, i, -q)
                    if a[i][t]:
                        swap_rows(t, i)
                        done = False
            for j in range(t + 1, ncols):
                if a[t][j]:
                    q = a[t][j] // a[t][t]
                    add_col(t, j, -q)
                    if a[t][j]:
                        swap_cols(t, j)
                        done = False
            if done:
                # divisibility: the pivot must divide every remaining entry
                bad = next(((i, j) for i in range(t + 1, rows) for j in range(t + 1, ncols)
                            if a[i][j] % a[t][t]), None)
                if bad is None:
                    break
                add_row(bad[0], t, 1)
        if a[t][t] < 0:
            negate_row(t)
        t += 1
    return SmithForm(u, a, v, vi)


@dataclass(frozen=True)
class ExactnessResult:
    exact: bool
    composite_zero: bool
    divisors: list[int]
    kernel_rank: int
    image_rank: int

    def certificate(self) -> dict:
        return {"composite_zero": self.composite_zero, "quotient_divisors": self.divisors,
                "kernel_rank": self.kernel_rank, "image_rank": self.image_rank}


def exact_at(f: IntMatrix, g: IntMatrix, b: int) -> ExactnessResult:
    """Exactness of Z^a --f--> Z^b --g--> Z^c at Z^b, including torsion.

    ``f`` is b x a and ``g`` is c x b (either may have zero rows/columns).
    """
    a_dim = len(f[0]) if f and f[0] is not None and len(f) else 0
    if f and any(len(r) != a_dim for r in f):
        raise ValueError("ragged matrix f")
    if f and len(f) != b:
        raise ValueError(f"f has {len(f)} rows, expected {b}")
    if g and any(len(r) != b for r in g):
        raise ValueError(f"g must have {b} columns")
    fz = f if f else zeros(b, 0)
    gz = g if g else zeros(0, b)
    comp = mat_mul(gz, fz, inner=b) if gz and a_dim else []
    composite_zero = all(x == 0 for row in comp for x in row)
    sg = snf(gz, cols=b)
    r = sg.rank
    kernel_rank = b - r
    if not composite_zero:
        return ExactnessResult(False, False, [], kernel_rank, 0)
    # ker g is spanned by the last b - r columns of V; coordinates of x in that
    # basis are the last b - r entries of V^{-1} x.
    coords = [row[:] for row in mat_mul(sg.v_inv, fz, inner=b)[r:]] if a_dim else zeros(kernel_rank, 0)
    sc = snf(coords, cols=a_dim)
    divisors = [d for d in sc.divisors if d != 1]
    exact = sc.rank == kernel_rank and not divisors
    missing = kernel_rank - sc.rank
    return ExactnessResult(exact, True, divisors + [0] * missing, kernel_rank, sc.rank)


# ---------------------------------------------------------------- sequences
def _inclusion_matrix(theta: PartialAutomorphism) -> IntMatrix:
    """K_0(J) -> K_0(A) induced by the inclusion of J."""
    alg = theta.algebra
    jb = sorted(theta.target.blocks)
    m = zeros(alg.num_blocks, len(jb))
    for c, j in enumerate(jb):
        m[j][c] = 1
    return m


def _theta_inverse_matrix(theta: PartialAutomorphism) -> IntMatrix:
    """K_0(J) -> K_0(A) induced by theta^{-1}: J -> I followed by the inclusion."""
    alg = theta.algebra
    jb = sorted(theta.target.blocks)
    inv = {j: i for i, j in theta.block_map.items()}
    m = zeros(alg.num_blocks, len(jb))
    for c, j in enumerate(jb):
        m[inv[j]][c] = 1
    return m


def _require_bounded(theta: PartialAutomorphism):
    if chain_bound(theta) is None:
        raise UnboundedChainError(
            "domain chains never terminate: the covariance algebra is infinite dimensional "
            "and its K-theory is not computed here")


def pv_verify(theta: PartialAutomorphism, seed: int = 0) -> Report:
    """0 -> K_0(J) -> K_0(A) -> K_0(C*(A, Theta)) -> 0, exactness at every position."""
    _require_bounded(theta)
    real = realize_covariance(theta, seed=seed)
    alg = theta.algebra
    nj, na, nc = len(theta.target.blocks), alg.num_blocks, real.algebra.num_blocks
    f = mat_sub(_inclusion_matrix(theta), _theta_inverse_matrix(theta))
    g = induced_map(alg, real.algebra, lambda a: real(LElement.delta(theta, a, 0)))
    rep = Report()
    rep.data.update({
        "k0_ranks": {"J": nj, "A": na, "covariance": nc},
        "k1_ranks": {"J": 0, "A": 0, "covariance": 0},
        "f": f, "g": g, "covariance_blocks": list(real.algebra.block_sizes),
    })
    positions = [
        ("exact_at_K0_J", zeros(nj, 0), f, nj),
        ("exact_at_K0_A", f, g, na),
        ("exact_at_K0_covariance", g, zeros(0, nc), nc),
    ]
    for name, left, right, b in positions:
        res = exact_at(left, right, b)
        rep.add(Check(name, res.exact, 0.0 if res.exact else 1.0, res.certificate()))
    return rep


def diagram_check(theta: PartialAutomorphism, seed: int = 0, model=None) -> Report:
    """i_* j_* = d_* (i_* - theta^{-1}_*) as maps K_0(J) -> K_0(E)."""
    from .toeplitz import ToeplitzElement, ToeplitzModel, d_embed, j_embed

    _require_bounded(theta)
    model = model or ToeplitzModel(theta, seed)
    alg = theta.algebra
    e_alg, _ = model.realized
    l_alg, _ = model.realized_lambda
    j_alg = theta.target.as_algebra()
    f = mat_sub(_inclusion_matrix(theta), _theta_inverse_matrix(theta))

    def jmap(y):
        return model.to_realized_lambda(j_embed(theta.target.embed(y), theta))

    j_star = induced_map(j_alg, l_alg, jmap) if j_alg.num_blocks else zeros(l_alg.num_blocks, 0)
    d_star = induced_map(alg, e_alg, lambda a: model.to_realized(d_embed(a, theta)))
    # inclusion Lambda -> E, through matrix units of the realized Lambda
    _, l_iso = model.realized_lambda
    lam_elems = model.lambda_basis
    lam_mats = (np.column_stack([model.lambda_rep(b).ravel() for b in lam_elems])
                if lam_elems else None)

    def incl(x: Element) -> Element:
        # realized Lambda element -> Toeplitz element -> realized E
        coeffs, *_ = np.linalg.lstsq(lam_mats, l_iso.inverse(x).ravel(), rcond=None)
        t = ToeplitzElement.zero(theta)
        for c, b in zip(coeffs, lam_elems):
            t = t + c * b
        return model.to_realized(t)

    i_star = induced_map(l_alg, e_alg, incl) if lam_elems else zeros(e_alg.num_blocks, 0)
    left = mat_mul(i_star, j_star, inner=l_alg.num_blocks)
    right = mat_mul(d_star, f, inner=alg.num_blocks)
    rep = Report()
    rep.data.update({"j_star": j_star, "i_star": i_star, "d_star": d_star, "f": f,
                     "toeplitz_blocks": list(e_alg.block_sizes),
                     "lambda_blocks": list(l_alg.block_sizes)})
    diff = sum(abs(x - y) for ra, rb in zip(left, right) for x, y in zip(ra, rb))
    rep.add(Check("square_commutes", diff == 0, float(diff), {"i_j": left, "d_f": right}))
    dj = det(j_star) if l_alg.num_blocks == j_alg.num_blocks else 0
    rep.add(Check("j_star_invertible", abs(dj) == 1, 0.0 if abs(dj) == 1 else 1.0, {"det": dj}))
    dd = det(d_star) if len(d_star) == alg.num_blocks else 0
    rep.add(Check("d_star_unimodular", abs(dd) == 1, 0.0 if abs(dd) == 1 else 1.0, {"det": dd}))
    return rep
