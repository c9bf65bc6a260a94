"""Exact linear algebra over the coefficient rings.

Everything is row-convention: vectors are rows, a map R^g -> R^h is a g x h
matrix A acting by x |-> x . A.

Smith normal forms are computed directly over the chain rings (minimal
valuation pivoting, deterministic row-major tie-break) and over Z[1/S]
(integer reduction with Bezout steps, S-unit factors stripped from the
divisors).  TruncatedBK and TruncatedLambda matrices are expanded by
restriction of scalars to their base ring: a T-linear map is base-linear, and
solutions/kernels reassemble because the coordinate identification
T^g = base^(g*M) is a base-module isomorphism.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import UnsupportedRingError
from .rings import (
    LocalizedIntegers,
    TruncatedBK,
    TruncatedLambda,
    base_ring_of,
    is_expansion_ring,
    is_snf_capable,
)


class Mat:
    """Small immutable matrix of raw ring elements with explicit shape."""

    __slots__ = ("rows", "cols", "data")

    def __init__(self, rows, cols, data):
        self.rows = rows
        self.cols = cols
        self.data = tuple(tuple(r) for r in data)
        assert len(self.data) == rows and all(len(r) == cols for r in self.data)

    @staticmethod
    def from_rows(rows_list, cols):
        return Mat(len(rows_list), cols, rows_list)

    @staticmethod
    def identity(n, ring):
        return Mat(n, n, [[ring.one if i == j else ring.zero for j in range(n)] for i in range(n)])

    @staticmethod
    def zero(r, c, ring):
        return Mat(r, c, [[ring.zero] * c for _ in range(r)])

    def row(self, i):
        return self.data[i]

    def mul(self, other, ring):
        assert self.cols == other.rows, f"shape mismatch {self.cols} != {other.rows}"
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = ring.zero
                for k in range(self.cols):
                    a = self.data[i][k]
                    if ring.is_zero(a):
                        continue
                    acc = ring.add(acc, ring.mul(a, other.data[k][j]))
                row.append(acc)
            out.append(row)
        return Mat(self.rows, other.cols, out)

    def vstack(self, other):
        assert self.cols == other.cols
        return Mat(self.rows + other.rows, self.cols, self.data + other.data)

    def hstack(self, other):
        assert self.rows == other.rows
        return Mat(self.rows, self.cols + other.cols,
                   [self.data[i] + other.data[i] for i in range(self.rows)])

    def transpose(self):
        return Mat(self.cols, self.rows,
                   [[self.data[i][j] for i in range(self.rows)] for j in range(self.cols)])

    def scale(self, c, ring):
        return Mat(self.rows, self.cols, [[ring.mul(c, x) for x in r] for r in self.data])

    def add(self, other, ring):
        assert self.rows == other.rows and self.cols == other.cols
        return Mat(self.rows, self.cols,
                   [[ring.add(self.data[i][j], other.data[i][j]) for j in range(self.cols)]
                    for i in range(self.rows)])

    def sub(self, other, ring):
        return self.add(other.scale(ring.neg(ring.one), ring), ring)

    def is_zero(self, ring):
        return all(ring.is_zero(x) for r in self.data for x in r)

    def take_rows(self, idxs):
        return Mat(len(idxs), self.cols, [self.data[i] for i in idxs])

    def take_cols(self, idxs):
        return Mat(self.rows, len(idxs), [[self.data[i][j] for j in idxs] for i in range(self.rows)])

    def tolist(self):
        return [list(r) for r in self.data]

    def __eq__(self, other):
        return isinstance(other, Mat) and self.data == other.data and self.cols == other.cols

    def __hash__(self):
        return hash((self.rows, self.cols, self.data))

    def __repr__(self):
        return f"Mat({self.rows}x{self.cols}, {self.data})"


@dataclass
class SNFResult:
    """left . mat . right = diag(divisors); witnesses invertible by construction."""

    left: Mat
    left_inv: Mat
    right: Mat
    right_inv: Mat
    divisors: list

    def diagonal(self, rows, cols, ring):
        d = Mat.zero(rows, cols, ring).tolist()
        for i, x in enumerate(self.divisors):
            d[i][i] = x
        return Mat(rows, cols, d)

    def verify(self, mat, ring):
        lhs = self.left.mul(mat, ring).mul(self.right, ring)
        if lhs != self.diagonal(mat.rows, mat.cols, ring):
            return False
        n = self.left.rows
        m = self.right.rows
        return (self.left.mul(self.left_inv, ring) == Mat.identity(n, ring)
                and self.left_inv.mul(self.left, ring) == Mat.identity(n, ring)
                and self.right.mul(self.right_inv, ring) == Mat.identity(m, ring)
                and self.right_inv.mul(self.right, ring) == Mat.identity(m, ring))


class _Worker:
    """Mutable state for SNF: applies elementary ops, tracking witnesses."""

    def __init__(self, mat, ring):
        self.ring = ring
        self.a = [list(r) for r in mat.data]
        self.rows = mat.rows
        self.cols = mat.cols
        self.l = Mat.identity(mat.rows, ring).tolist()
        self.linv = Mat.identity(mat.rows, ring).tolist()
        self.r = Mat.identity(mat.cols, ring).tolist()
        self.rinv = Mat.identity(mat.cols, ring).tolist()

    def swap_rows(self, i, j):
        if i == j:
            return
        self.a[i], self.a[j] = self.a[j], self.a[i]
        self.l[i], self.l[j] = self.l[j], self.l[i]
        for row in self.linv:
            row[i], row[j] = row[j], row[i]

    def swap_cols(self, i, j):
        if i == j:
            return
        for row in self.a:
            row[i], row[j] = row[j], row[i]
        for row in self.r:
            row[i], row[j] = row[j], row[i]
        self.rinv[i], self.rinv[j] = self.rinv[j], self.rinv[i]

    def scale_row(self, i, u, uinv):
        rg = self.ring
        self.a[i] = [rg.mul(u, x) for x in self.a[i]]
        self.l[i] = [rg.mul(u, x) for x in self.l[i]]
        for row in self.linv:
            row[i] = rg.mul(row[i], uinv)

    def add_row(self, dst, src, c):
        """row_dst += c * row_src"""
        rg = self.ring
        self.a[dst] = [rg.add(x, rg.mul(c, y)) for x, y in zip(self.a[dst], self.a[src])]
        self.l[dst] = [rg.add(x, rg.mul(c, y)) for x, y in zip(self.l[dst], self.l[src])]
        nc = rg.neg(c)
        for row in self.linv:
            row[src] = rg.add(row[src], rg.mul(nc, row[dst]))

    def add_col(self, dst, src, c):
        """col_dst += c * col_src"""
        rg = self.ring
        for row in self.a:
            row[dst] = rg.add(row[dst], rg.mul(c, row[src]))
        for row in self.r:
            row[dst] = rg.add(row[dst], rg.mul(c, row[src]))
        nc = rg.neg(c)
        self.rinv[src] = [rg.add(x, rg.mul(nc, y)) for x, y in zip(self.rinv[src], self.rinv[dst])]

    def two_row_transform(self, i1, i2, m11, m12, m21, m22, n11, n12, n21, n22):
        """rows (i1,i2) <- M . rows; (n..) is M^{-1}. Used for Bezout steps."""
        rg = self.ring
        r1, r2 = self.a[i1], self.a[i2]
        self.a[i1] = [rg.add(rg.mul(m11, x), rg.mul(m12, y)) for x, y in zip(r1, r2)]
        self.a[i2] = [rg.add(rg.mul(m21, x), rg.mul(m22, y)) for x, y in zip(r1, r2)]
        l1, l2 = self.l[i1], self.l[i2]
        self.l[i1] = [rg.add(rg.mul(m11, x), rg.mul(m12, y)) for x, y in zip(l1, l2)]
        self.l[i2] = [rg.add(rg.mul(m21, x), rg.mul(m22, y)) for x, y in zip(l1, l2)]
        for row in self.linv:
            x, y = row[i1], row[i2]
            row[i1] = rg.add(rg.mul(x, n11), rg.mul(y, n21))
            row[i2] = rg.add(rg.mul(x, n12), rg.mul(y, n22))

    def two_col_transform(self, j1, j2, m11, m12, m21, m22, n11, n12, n21, n22):
        """cols (j1,j2) <- cols . M; (n..) is M^{-1}."""
        rg = self.ring
        for row in self.a:
            x, y = row[j1], row[j2]
            row[j1] = rg.add(rg.mul(x, m11), rg.mul(y, m21))
            row[j2] = rg.add(rg.mul(x, m12), rg.mul(y, m22))
        for row in self.r:
            x, y = row[j1], row[j2]
            row[j1] = rg.add(rg.mul(x, m11), rg.mul(y, m21))
            row[j2] = rg.add(rg.mul(x, m12), rg.mul(y, m22))
        ri1, ri2 = self.rinv[j1], self.rinv[j2]
        self.rinv[j1] = [rg.add(rg.mul(n11, x), rg.mul(n12, y)) for x, y in zip(ri1, ri2)]
        self.rinv[j2] = [rg.add(rg.mul(n21, x), rg.mul(n22, y)) for x, y in zip(ri1, ri2)]

    def result(self):
        k = min(self.rows, self.cols)
        return SNFResult(
            left=Mat(self.rows, self.rows, self.l),
            left_inv=Mat(self.rows, self.rows, self.linv),
            right=Mat(self.cols, self.cols, self.r),
            right_inv=Mat(self.cols, self.cols, self.rinv),
            divisors=[self.a[i][i] for i in range(k)],
        )


def _snf_chain(mat, ring):
    """SNF over a chain ring: a minimal-valuation pivot divides everything."""
    w = _Worker(mat, ring)
    for k in range(min(mat.rows, mat.cols)):
        best = None
        for i in range(k, w.rows):
            for j in range(k, w.cols):
                x = w.a[i][j]
                if ring.is_zero(x):
                    continue
                v = ring.val(x)
                if best is None or v < best[0]:
                    best = (v, i, j)
        if best is None:
            break
        _, bi, bj = best
        w.swap_rows(k, bi)
        w.swap_cols(k, bj)
        unit = ring.unit_part(w.a[k][k])
        w.scale_row(k, ring.inv(unit), unit)
        pivot = w.a[k][k]
        for i in range(k + 1, w.rows):
            if not ring.is_zero(w.a[i][k]):
                q = ring.divide(w.a[i][k], pivot)
                w.add_row(i, k, ring.neg(q))
        for j in range(k + 1, w.cols):
            if not ring.is_zero(w.a[k][j]):
                q = ring.divide(w.a[k][j], pivot)
                w.add_col(j, k, ring.neg(q))
    return w.result()


def _xgcd(a, b):
    x, nx, y, ny, g, ng = 1, 0, 0, 1, a, b
    while ng:
        q = g // ng
        x, nx = nx, x - q * nx
        y, ny = ny, y - q * ny
        g, ng = ng, g - q * ng
    if g < 0:
        x, y, g = -x, -y, -g
    return g, x, y


def _snf_localized(mat, ring):
    """SNF over Z[1/S]: scale rows to integers, integer-reduce, strip S-units."""
    w = _Worker(mat, ring)
    for i in range(w.rows):
        den = 1
        for x in w.a[i]:
            den = den * x.denominator // _gcd(den, x.denominator)
        if den != 1:
            w.scale_row(i, Fraction(den), Fraction(1, den))

    def entry(i, j):
        return int(w.a[i][j])

    for k in range(min(w.rows, w.cols)):
        while True:
            best = None
            for i in range(k, w.rows):
                for j in range(k, w.cols):
                    x = entry(i, j)
                    if x == 0:
                        continue
                    if best is None or abs(x) < best[0]:
                        best = (abs(x), i, j)
            if best is None:
                break
            _, bi, bj = best
            w.swap_rows(k, bi)
            w.swap_cols(k, bj)
            for i in range(k + 1, w.rows):
                b = entry(i, k)
                if b == 0:
                    continue
                a = entry(k, k)
                if b % a == 0:
                    w.add_row(i, k, Fraction(-(b // a)))
                else:
                    g, x, y = _xgcd(a, b)
                    w.two_row_transform(
                        k, i,
                        Fraction(x), Fraction(y), Fraction(-(b // g)), Fraction(a // g),
                        Fraction(a // g), Fraction(-y), Fraction(b // g), Fraction(x))
            if any(entry(k, j) for j in range(k + 1, w.cols)):
                for j in range(k + 1, w.cols):
                    b = entry(k, j)
                    if b == 0:
                        continue
                    a = entry(k, k)
                    if b % a == 0:
                        w.add_col(j, k, Fraction(-(b // a)))
                    else:
                        g, x, y = _xgcd(a, b)
                        w.two_col_transform(
                            k, j,
                            Fraction(x), Fraction(-(b // g)), Fraction(y), Fraction(a // g),
                            Fraction(a // g), Fraction(b // g), Fraction(-y), Fraction(x))
                continue
            if any(entry(i, k) for i in range(k + 1, w.rows)):
                continue
            a = entry(k, k)
            bad = None
            if a != 0:
                for i in range(k + 1, w.rows):
                    for j in range(k + 1, w.cols):
                        if entry(i, j) % a != 0:
                            bad = i
                            break
                    if bad is not None:
                        break
            if bad is None:
                break
            w.add_row(k, bad, Fraction(1))
        if entry(k, k) < 0:
            w.scale_row(k, Fraction(-1), Fraction(-1))

    for k in range(min(w.rows, w.cols)):
        d = int(w.a[k][k])
        if d == 0:
            continue
        stripped = ring.strip_s(d)
        if stripped != d:
            u = Fraction(stripped, d)
            w.scale_row(k, u, 1 / u)
    return w.result()


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def smith_normal_form(mat, ring):
    """SNF with witnesses; divisors ordered by non-decreasing valuation.

    Raises UnsupportedRing for TruncatedBK and TruncatedLambda: use the
    restriction-of-scalars solvers instead.
    """
    if isinstance(ring, (TruncatedBK, TruncatedLambda)):
        raise UnsupportedRingError(
            f"{type(ring).__name__} admits no Smith normal form; use restriction of scalars")
    if isinstance(ring, LocalizedIntegers):
        return _snf_localized(mat, ring)
    if is_snf_capable(ring):
        return _snf_chain(mat, ring)
    raise UnsupportedRingError(f"no SNF over {type(ring).__name__}")


def _solve_snf(snf, mat, b, ring, failures=None):
    """X with X . mat = b given mat's SNF, or None. b a Mat of row targets.

    When a list is passed as `failures`, unsolvable diagonal equations are
    appended as (row, position, divisor, residue) and the scan continues, so
    callers get a complete obstruction record.
    """
    c = b.mul(snf.right, ring)
    ys = []
    ndiv = len(snf.divisors)
    ok_all = True
    for i in range(b.rows):
        y = [ring.zero] * mat.rows
        for j in range(mat.cols):
            cj = c.data[i][j]
            if j < ndiv:
                q = _ring_divide(ring, cj, snf.divisors[j])
                if q is None:
                    ok_all = False
                    if failures is None:
                        return None
                    failures.append((i, j, snf.divisors[j], cj))
                else:
                    y[j] = q
            elif not ring.is_zero(cj):
                ok_all = False
                if failures is None:
                    return None
                failures.append((i, j, ring.zero, cj))
        ys.append(y)
    if not ok_all:
        return None
    return Mat(b.rows, mat.rows, ys).mul(snf.left, ring)


def _ring_divide(ring, x, y):
    return ring.divide(x, y)


def _kernel_snf(snf, mat, ring):
    """Rows spanning {x : x . mat = 0}."""
    gens = []
    for j, d in enumerate(snf.divisors):
        a = ring.ann_gen(d)
        if a is None:
            continue
        row = [ring.mul(a, x) for x in snf.left.data[j]]
        if any(not ring.is_zero(x) for x in row):
            gens.append(row)
    for j in range(len(snf.divisors), mat.rows):
        gens.append(list(snf.left.data[j]))
    return Mat.from_rows(gens, mat.rows)


def expand_matrix(mat, ring):
    """Base-ring matrix of x |-> x . mat under T^g = base^(g*M)."""
    base = base_ring_of(ring)
    m = ring.mlen
    out = [[base.zero] * (mat.cols * m) for _ in range(mat.rows * m)]
    for i in range(mat.rows):
        for j in range(mat.cols):
            t = mat.data[i][j]
            for a in range(m):
                for b in range(a, m):
                    out[i * m + a][j * m + b] = t[b - a]
    return Mat(mat.rows * m, mat.cols * m, out)


def expand_rows(mat, ring):
    """Row-wise coordinate expansion: T^g rows -> base^(g*M) rows."""
    m = ring.mlen
    out = []
    for row in mat.data:
        flat = []
        for t in row:
            flat.extend(t)
        out.append(flat)
    return Mat(mat.rows, mat.cols * m, out)


def reassemble_rows(mat, ring, cols):
    """Inverse of expand_rows: base^(g*M) rows -> T^g rows."""
    m = ring.mlen
    assert mat.cols == cols * m
    out = []
    for row in mat.data:
        out.append([tuple(row[j * m: (j + 1) * m]) for j in range(cols)])
    return Mat(mat.rows, cols, out)


def solve_left(mat, b, ring):
    """X with X . mat = b over any family, or None."""
    sol, _ = solve_left_info(mat, b, ring)
    return sol


def solve_left_info(mat, b, ring):
    """Like solve_left but also returns the unsolvable-equation record:
    a list of (rhs_row, diag_position, divisor, residue) over the base ring."""
    if mat.rows == 0:
        if b.is_zero(ring):
            return Mat(b.rows, 0, [[] for _ in range(b.rows)]), []
        bad = [(i, j, ring.zero, b.data[i][j]) for i in range(b.rows)
               for j in range(b.cols) if not ring.is_zero(b.data[i][j])]
        return None, bad
    if mat.cols == 0:
        return Mat.zero(b.rows, mat.rows, ring), []
    if is_expansion_ring(ring):
        base = base_ring_of(ring)
        xb, fails = solve_left_info(expand_matrix(mat, ring), expand_rows(b, ring), base)
        if xb is None:
            return None, fails
        return reassemble_rows(xb, ring, mat.rows), []
    snf = smith_normal_form(mat, ring)
    failures = []
    sol = _solve_snf(snf, mat, b, ring, failures)
    return sol, failures


def kernel_left(mat, ring):
    """Rows spanning {x : x . mat = 0} over any family."""
    if mat.rows == 0:
        return Mat(0, 0, [])
    if mat.cols == 0:
        return Mat.identity(mat.rows, ring)
    if is_expansion_ring(ring):
        base = base_ring_of(ring)
        kb = kernel_left(expand_matrix(mat, ring), base)
        return reassemble_rows(kb, ring, mat.rows)
    snf = smith_normal_form(mat, ring)
    return _kernel_snf(snf, mat, ring)


def solve_left_mod(mat, b, rel, ring):
    """(X, Y) with X . mat + Y . rel = b, or None. rel may have 0 rows."""
    stacked = mat.vstack(rel)
    sol = solve_left(stacked, b, ring)
    if sol is None:
        return None
    return sol.take_cols(list(range(mat.rows))), sol.take_cols(list(range(mat.rows, stacked.rows)))


def kernel_left_parts(mats, ring):
    """Kernel of the vertical stack, returned as per-block column slices."""
    stacked = mats[0]
    for mextra in mats[1:]:
        stacked = stacked.vstack(mextra)
    ker = kernel_left(stacked, ring)
    parts = []
    at = 0
    for mpart in mats:
        parts.append(ker.take_cols(list(range(at, at + mpart.rows))))
        at += mpart.rows
    return parts


def invert(mat, ring):
    """Inverse of a square matrix, or None if not invertible."""
    assert mat.rows == mat.cols
    inv = solve_left(mat, Mat.identity(mat.rows, ring), ring)
    if inv is None:
        return None
    if mat.mul(inv, ring) != Mat.identity(mat.rows, ring):
        return None
    return inv
