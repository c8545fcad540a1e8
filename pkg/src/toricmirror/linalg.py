"""Exact linear algebra over the rationals and the integers.

Everything here works on plain lists of lists holding ``int`` or
``fractions.Fraction`` entries.  Matrices are tiny (lattice ranks in the
single digits), so clarity beats asymptotics throughout.
"""

from __future__ import annotations

import math
from fractions import Fraction
from math import gcd


def frac(x) -> Fraction:
    """Coerce ints, Fractions and 'p/q' strings to an exact Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot coerce {x!r} to an exact rational")


def vec_add(u, v):
    return tuple(a + b for a, b in zip(u, v))


def vec_sub(u, v):
    return tuple(a - b for a, b in zip(u, v))


def vec_scale(c, v):
    return tuple(c * a for a in v)


def dot(u, v):
    assert len(u) == len(v), (u, v)
    return sum(a * b for a, b in zip(u, v))


def mat_vec(A, v):
    return tuple(dot(row, v) for row in A)


def mat_mul(A, B):
    cols = list(zip(*B))
    return [[dot(row, col) for col in cols] for row in A]


def transpose(A):
    return [list(col) for col in zip(*A)]


def identity(n):
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def primitive(v):
    """Scale an integer vector by 1/gcd, fixing the sign of the first
    nonzero entry only via the gcd (direction preserved)."""
    g = 0
    for a in v:
        g = gcd(g, abs(int(a)))
    if g == 0:
        return tuple(int(a) for a in v)
    return tuple(int(a) // g for a in v)


def clear_denominators(v):
    """Integer vector proportional to the rational vector v, primitive."""
    fracs = [frac(a) for a in v]
    lcm = 1
    for a in fracs:
        d = a.denominator
        lcm = lcm * d // gcd(lcm, d)
    return primitive(tuple(int(a * lcm) for a in fracs))


def rref(rows):
    """Reduced row echelon form over Fraction.

    Returns (reduced, pivot_columns); input is not mutated.
    """
    mat = [[frac(x) for x in row] for row in rows]
    nrows = len(mat)
    ncols = len(mat[0]) if nrows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = None
        for i in range(r, nrows):
            if mat[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        mat[r], mat[pivot] = mat[pivot], mat[r]
        pv = mat[r][c]
        mat[r] = [x / pv for x in mat[r]]
        for i in range(nrows):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return mat, pivots


def rank(rows):
    if not rows:
        return 0
    return len(rref(rows)[1])


def nullspace(rows, ncols=None):
    """Basis of the rational kernel {x : A x = 0}, as tuples of Fractions."""
    if not rows:
        assert ncols is not None
        return [tuple(Fraction(int(i == j)) for j in range(ncols)) for i in range(ncols)]
    ncols = len(rows[0])
    red, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fcol in free:
        v = [Fraction(0)] * ncols
        v[fcol] = Fraction(1)
        for r, pcol in enumerate(pivots):
            v[pcol] = -red[r][fcol]
        basis.append(tuple(v))
    return basis


def solve_linear(A, b):
    """One rational solution of A x = b, or None if inconsistent."""
    if not A:
        return None
    ncols = len(A[0])
    aug = [list(row) + [bv] for row, bv in zip(A, b)]
    red, pivots = rref(aug)
    for row in red:
        if all(x == 0 for x in row[:ncols]) and row[ncols] != 0:
            return None
    x = [Fraction(0)] * ncols
    for r, pcol in enumerate(pivots):
        if pcol == ncols:
            return None
        x[pcol] = red[r][ncols]
    return tuple(x)


def inverse(mat):
    """Exact inverse of a square rational matrix."""
    n = len(mat)
    aug = [[frac(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
           for i, row in enumerate(mat)]
    red, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular")
    return [row[n:] for row in red[:n]]


def _swap_rows(M, i, j):
    M[i], M[j] = M[j], M[i]


def _swap_cols(M, i, j):
    for row in M:
        row[i], row[j] = row[j], row[i]


def smith_normal_form(A):
    """Smith normal form with transforms: returns (U, S, V) with U A V = S.

    S is diagonal with d_1 | d_2 | ..., all matrices integral with
    det(U), det(V) = +-1.
    """
    S = [[int(x) for x in row] for row in A]
    m = len(S)
    n = len(S[0]) if m else 0
    U = identity(m)
    V = identity(n)

    def min_entry(t):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if S[i][j] != 0 and (best is None or abs(S[i][j]) < abs(S[best[0]][best[1]])):
                    best = (i, j)
        return best

    t = 0
    while t < min(m, n):
        pos = min_entry(t)
        if pos is None:
            break
        i, j = pos
        _swap_rows(S, t, i)
        _swap_rows(U, t, i)
        _swap_cols(S, t, j)
        _swap_cols(V, t, j)
        dirty = False
        for i in range(t + 1, m):
            if S[i][t] != 0:
                q = S[i][t] // S[t][t]
                for k in range(n):
                    S[i][k] -= q * S[t][k]
                for k in range(m):
                    U[i][k] -= q * U[t][k]
                if S[i][t] != 0:
                    dirty = True
        for j in range(t + 1, n):
            if S[t][j] != 0:
                q = S[t][j] // S[t][t]
                for i2 in range(m):
                    S[i2][j] -= q * S[i2][t]
                for i2 in range(n):
                    V[i2][j] -= q * V[i2][t]
                if S[t][j] != 0:
                    dirty = True
        if dirty:
            continue
        # pivot divides everything below-right? if not, fold a bad row in
        bad = None
        for i in range(t + 1, m):
            for j in range(t + 1, n):
                if S[i][j] % S[t][t] != 0:
                    bad = i
                    break
            if bad is not None:
                break
        if bad is not None:
            for k in range(n):
                S[t][k] += S[bad][k]
            for k in range(m):
                U[t][k] += U[bad][k]
            continue
        if S[t][t] < 0:
            for k in range(n):
                S[t][k] = -S[t][k]
            for k in range(m):
                U[t][k] = -U[t][k]
        t += 1
    return U, S, V


def invariant_factors(A):
    _, S, _ = smith_normal_form(A)
    return [S[i][i] for i in range(min(len(S), len(S[0]) if S else 0)) if S[i][i] != 0]


def integer_kernel_basis(A):
    """Basis of the saturated integer kernel {x in Z^n : A x = 0}."""
    m = len(A)
    n = len(A[0]) if m else 0
    U, S, V = smith_normal_form(A)
    ker = []
    for j in range(n):
        if j >= m or S[j][j] == 0:
            ker.append(tuple(V[i][j] for i in range(n)))
    return ker


def solve_integer(A, b):
    """One integer solution of A x = b, or None."""
    m = len(A)
    n = len(A[0]) if m else 0
    U, S, V = smith_normal_form(A)
    c = mat_vec(U, b)
    y = [0] * n
    for i in range(m):
        d = S[i][i] if i < n else 0
        if d == 0:
            if c[i] != 0:
                return None
        else:
            if c[i] % d != 0:
                return None
            y[i] = c[i] // d
    return mat_vec(V, y)


# ---------------------------------------------------------------------------
# cones (brute-force double description, fine for the ranks we meet)
# ---------------------------------------------------------------------------


def _subsets(items, k):
    items = list(items)

    def rec(start, chosen):
        if len(chosen) == k:
            yield list(chosen)
            return
        for i in range(start, len(items)):
            chosen.append(items[i])
            yield from rec(i + 1, chosen)
            chosen.pop()

    yield from rec(0, [])


def cone_rays_from_inequalities(ineqs, dim):
    """Extreme rays of {x in Q^dim : <a, x> >= 0 for a in ineqs}.

    Assumes the cone is pointed.  Brute force over (dim-1)-subsets.
    """
    if dim == 0:
        return []
    rays = set()
    if not ineqs:
        raise ValueError("cone without inequalities is not pointed")
    for sub in _subsets(range(len(ineqs)), dim - 1):
        rows = [list(ineqs[i]) for i in sub]
        ker = nullspace(rows, ncols=dim) if rows else nullspace([], ncols=dim)
        if len(ker) != 1:
            continue
        for cand in (ker[0], vec_scale(-1, ker[0])):
            if all(dot(a, cand) >= 0 for a in ineqs):
                rays.add(clear_denominators(cand))
    return sorted(rays)


def cone_facets_from_rays(rays, dim):
    """Facet normals of the full-dimensional cone generated by `rays`.

    Returns primitive integer functionals f with <f, r> >= 0 for all rays.
    """
    if dim == 0:
        return []
    if rank([list(r) for r in rays]) != dim:
        raise ValueError("cone is not full-dimensional")
    facets = set()
    for sub in _subsets(range(len(rays)), dim - 1):
        rows = [list(rays[i]) for i in sub]
        ker = nullspace(rows, ncols=dim) if rows else nullspace([], ncols=dim)
        if len(ker) != 1:
            continue
        for cand in (ker[0], vec_scale(-1, ker[0])):
            if all(dot(cand, r) >= 0 for r in rays):
                on = sum(1 for r in rays if dot(cand, r) == 0)
                if on >= dim - 1:
                    facets.add(clear_denominators(cand))
    return sorted(facets)


# ---------------------------------------------------------------------------
# lattice polytopes
# ---------------------------------------------------------------------------


def polytope_facets(points, dim):
    """Facets of a full-dimensional lattice polytope conv(points).

    Returns a sorted list of pairs (u, c) with u a primitive integer outer
    normal and <u, x> <= c for all points, equality on the facet.
    """
    pts = [tuple(int(x) for x in p) for p in points]
    if rank([list(vec_sub(p, pts[0])) for p in pts[1:]]) != dim:
        raise ValueError("polytope is not full-dimensional")
    facets = {}
    for sub in _subsets(range(len(pts)), dim):
        base = pts[sub[0]]
        rows = [list(vec_sub(pts[i], base)) for i in sub[1:]]
        ker = nullspace(rows, ncols=dim) if rows else nullspace([], ncols=dim)
        if len(ker) != 1:
            continue
        u = clear_denominators(ker[0])
        c = dot(u, base)
        vals = [dot(u, p) for p in pts]
        if all(v <= c for v in vals):
            pass
        elif all(v >= c for v in vals):
            u = vec_scale(-1, u)
            c = -c
        else:
            continue
        facets[(u, c)] = True
    return sorted(facets)


def lattice_points(facets, dim, scale=1):
    """All lattice points of {x : <u, x> <= scale * c for (u, c) in facets}."""
    # bounding box per coordinate from vertex enumeration
    verts = polytope_vertices_from_facets(facets, dim, scale)
    los = [min(v[i] for v in verts) for i in range(dim)]
    his = [max(v[i] for v in verts) for i in range(dim)]
    out = []

    def rec(i, partial):
        if i == dim:
            p = tuple(partial)
            if all(dot(u, p) <= scale * c for u, c in facets):
                out.append(p)
            return
        lo = math.ceil(los[i])
        hi = math.floor(his[i])
        for x in range(lo, hi + 1):
            rec(i + 1, partial + [x])

    rec(0, [])
    return sorted(out)


def polytope_vertices_from_facets(facets, dim, scale=1):
    """Vertices of a bounded {x : <u,x> <= scale*c}, brute force."""
    verts = set()
    n = len(facets)
    for sub in _subsets(range(n), dim):
        A = [list(facets[i][0]) for i in sub]
        b = [scale * facets[i][1] for i in sub]
        x = solve_linear(A, b)
        if x is None:
            continue
        if all(dot(u, x) <= scale * c for u, c in facets):
            verts.add(tuple(x))
    if not verts:
        raise ValueError("empty or unbounded polytope")
    return sorted(verts)


def normalized_volume(points, dim):
    """Lattice-normalized volume (unit simplex = 1) of conv(points)."""
    pts = [tuple(int(x) for x in p) for p in points]
    if dim == 0:
        return 1 if pts else 0
    if dim == 1:
        xs = [p[0] for p in pts]
        return max(xs) - min(xs)
    total = 0
    o = pts[0]
    for u, c in polytope_facets(pts, dim):
        h = c - dot(u, o)
        if h == 0:
            continue
        face = [p for p in pts if dot(u, p) == c]
        basis = integer_kernel_basis([list(u)])
        cols = transpose([list(b) for b in basis])
        p0 = face[0]
        reduced = []
        for p in face:
            y = solve_linear(cols, list(vec_sub(p, p0)))
            assert y is not None and all(a.denominator == 1 for a in y)
            reduced.append(tuple(int(a) for a in y))
        total += h * normalized_volume(reduced, dim - 1)
    return total
