"""Exact integer linear algebra on small dense matrices.

Vectors are tuples of ints, matrices are tuples of row tuples.  Nothing in
here touches floating point.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Optional, Sequence

IntVector = tuple[int, ...]
IntMatrix = tuple[IntVector, ...]


class LatticeError(ValueError):
    pass


def as_matrix(rows: Sequence[Sequence[int]]) -> IntMatrix:
    return tuple(tuple(int(x) for x in row) for row in rows)


def transpose(m: Sequence[Sequence]) -> tuple:
    if not m:
        return ()
    return tuple(zip(*m))


def columns_to_matrix(cols: Sequence[Sequence[int]], nrows: Optional[int] = None) -> IntMatrix:
    """Matrix whose columns are ``cols``."""
    if not cols:
        return tuple(() for _ in range(nrows or 0))
    return tuple(tuple(c[i] for c in cols) for i in range(len(cols[0])))


def identity(n: int) -> IntMatrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def mat_vec(m: Sequence[Sequence], v: Sequence) -> tuple:
    return tuple(sum(a * b for a, b in zip(row, v)) for row in m)


def mat_mul(a: Sequence[Sequence], b: Sequence[Sequence]) -> tuple:
    bt = transpose(b)
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a)


def vec_gcd(v: Sequence[int]) -> int:
    g = 0
    for x in v:
        g = gcd(g, x)
    return g


def is_primitive(v: Sequence[int]) -> bool:
    return vec_gcd(v) == 1


def primitive_part(v: Sequence[int]) -> IntVector:
    """Divide ``v`` by the gcd of its entries."""
    g = vec_gcd(v)
    if g == 0:
        raise LatticeError("not a direction: zero vector has no primitive part")
    return tuple(x // g for x in v)


def rank(m: Sequence[Sequence[int]]) -> int:
    """Rank over Q by fraction-free (Bareiss) elimination."""
    rows = [list(r) for r in m]
    if not rows or not rows[0]:
        return 0
    nrows, ncols = len(rows), len(rows[0])
    r = 0
    prev = 1
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r][c]
        for i in range(r + 1, nrows):
            a = rows[i][c]
            rows[i] = [(p * rows[i][j] - a * rows[r][j]) // prev for j in range(ncols)]
        prev = p
        r += 1
        if r == nrows:
            break
    return r


def det(m: Sequence[Sequence[int]]) -> int:
    """Determinant of a square integer matrix (Bareiss)."""
    n = len(m)
    if n == 0:
        return 1
    a = [list(r) for r in m]
    if any(len(r) != n for r in a):
        raise LatticeError("determinant of a non-square matrix")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def inverse(m: Sequence[Sequence]) -> tuple:
    """Exact inverse over Q (Gauss-Jordan on Fractions)."""
    n = len(m)
    a = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(m)]
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c] != 0), None)
        if piv is None:
            raise LatticeError("matrix is singular")
        a[c], a[piv] = a[piv], a[c]
        p = a[c][c]
        a[c] = [x / p for x in a[c]]
        for i in range(n):
            if i != c and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return tuple(tuple(row[n:]) for row in a)


def inverse_unimodular(m: Sequence[Sequence[int]]) -> IntMatrix:
    inv = inverse(m)
    if any(x.denominator != 1 for row in inv for x in row):
        raise LatticeError("matrix is not unimodular")
    return tuple(tuple(int(x) for x in row) for row in inv)


def solve(m: Sequence[Sequence], b: Sequence) -> Optional[tuple[Fraction, ...]]:
    """Unique solution of the square system ``m x = b``, or None if singular."""
    n = len(m)
    a = [[Fraction(x) for x in row] + [Fraction(b[i])] for i, row in enumerate(m)]
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c] != 0), None)
        if piv is None:
            return None
        a[c], a[piv] = a[piv], a[c]
        p = a[c][c]
        a[c] = [x / p for x in a[c]]
        for i in range(n):
            if i != c and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return tuple(row[n] for row in a)


def hermite_normal_form(m: Sequence[Sequence[int]]) -> tuple[IntMatrix, IntMatrix]:
    """Row-style Hermite normal form.

    Returns ``(H, U)`` with ``U`` unimodular and ``U @ m == H``.  ``H`` is in
    row echelon form with positive pivots and entries above each pivot reduced
    into ``[0, pivot)``; it is unique for the row lattice of ``m``.
    """
    a = [list(r) for r in m]
    nrows = len(a)
    ncols = len(a[0]) if a else 0
    u = [list(r) for r in identity(nrows)]

    def sub(i: int, k: int, q: int) -> None:
        # row_i -= q * row_k
        if q:
            a[i] = [x - q * y for x, y in zip(a[i], a[k])]
            u[i] = [x - q * y for x, y in zip(u[i], u[k])]

    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        while True:
            nz = [i for i in range(r, nrows) if a[i][c] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda i: (abs(a[i][c]), i))
            a[r], a[piv] = a[piv], a[r]
            u[r], u[piv] = u[piv], u[r]
            done = True
            for i in range(r + 1, nrows):
                if a[i][c]:
                    sub(i, r, a[i][c] // a[r][c])
                    if a[i][c]:
                        done = False
            if done:
                break
        if a[r][c] == 0:
            continue
        if a[r][c] < 0:
            a[r] = [-x for x in a[r]]
            u[r] = [-x for x in u[r]]
        for i in range(r):
            sub(i, r, a[i][c] // a[r][c])
        r += 1
    return as_matrix(a), as_matrix(u)


def kernel_basis(m: Sequence[Sequence[int]], ncols: Optional[int] = None) -> list[IntVector]:
    """Saturated Z-basis of ``{x : m x = 0}``, in Hermite normal form."""
    rows = as_matrix(m)
    n = len(rows[0]) if rows else (ncols or 0)
    if not rows:
        return list(identity(n))
    h, u = hermite_normal_form(transpose(rows))
    kernel = [u[i] for i in range(n) if not any(h[i])]
    if not kernel:
        return []
    reduced, _ = hermite_normal_form(kernel)
    return [row for row in reduced if any(row)]


def unimodular_complement(vs: Sequence[Sequence[int]], n: Optional[int] = None) -> IntMatrix:
    """Square unimodular matrix whose first ``len(vs)`` columns are ``vs``.

    Raises LatticeError unless ``vs`` extends to a Z-basis.
    """
    vs = as_matrix(vs)
    if not vs:
        if n is None:
            raise LatticeError("ambient rank unknown for an empty family")
        return identity(n)
    n = len(vs[0])
    k = len(vs)
    a = columns_to_matrix(vs)
    h, u = hermite_normal_form(a)
    expected = tuple(tuple(int(i == j) for j in range(k)) for i in range(n))
    if h != expected:
        raise LatticeError("not extendable to basis: vectors are dependent or not saturated")
    return inverse_unimodular(u)


def quotient_projection(vs: Sequence[Sequence[int]], n: Optional[int] = None) -> IntMatrix:
    """Surjection Z^n -> Z^(n-k) whose kernel is the span of ``vs``."""
    vs = as_matrix(vs)
    dim = len(vs[0]) if vs else n
    u = unimodular_complement(vs, dim)
    return inverse_unimodular(u)[len(vs):]


def in_cone(generators: Sequence[Sequence[int]], v: Sequence[int]) -> bool:
    """Is ``v`` a nonnegative combination of ``generators``?

    Phase one of the simplex method with Bland's rule, in exact arithmetic.
    """
    m, k = len(v), len(generators)
    if not any(v):
        return True
    if k == 0:
        return False
    # rows: A lambda + a = b with b >= 0; columns 0..k-1 are lambda, k..k+m-1 artificials
    rows = []
    for i in range(m):
        sign = -1 if v[i] < 0 else 1
        row = [Fraction(sign * g[i]) for g in generators]
        row += [Fraction(int(j == i)) for j in range(m)]
        row.append(Fraction(sign * v[i]))
        rows.append(row)
    basis = list(range(k, k + m))
    ncols = k + m
    # reduced costs of sum(artificials)
    cost = [Fraction(0)] * (ncols + 1)
    for row in rows:
        for j in range(ncols + 1):
            cost[j] -= row[j]
    for j in range(k, k + m):
        cost[j] = Fraction(0)
    while True:
        enter = next((j for j in range(ncols) if cost[j] < 0), None)
        if enter is None:
            break
        best = None
        for i, row in enumerate(rows):
            if row[enter] > 0:
                ratio = row[-1] / row[enter]
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            break  # unbounded direction; cannot happen in phase one
        i = best[1]
        piv = rows[i][enter]
        rows[i] = [x / piv for x in rows[i]]
        for r in range(m):
            if r != i and rows[r][enter] != 0:
                f = rows[r][enter]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[i])]
        f = cost[enter]
        cost = [a - f * b for a, b in zip(cost, rows[i])]
        basis[i] = enter
    return cost[-1] == 0
