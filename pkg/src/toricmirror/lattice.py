"""Stacky fan combinatorics: box elements, ages, fractional degree cones.

Conventions used throughout the package:

* rays are 0-indexed; indices ``0..m-1`` are fan rays, ``m..m+s-1`` are
  extended ray vectors (lattice points of the fan polytope),
* a degree class lives in L_Q = ker(rays) tensor Q and is stored as the
  full (m+s)-tuple of Fractions; the pairing with the i-th divisor class
  is then simply the i-th coordinate,
* functionals on L_Q are stored as (m+s)-vectors of divisor coefficients,
  so every pairing is a plain dot product.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .linalg import (
    clear_denominators,
    inverse,
    cone_rays_from_inequalities,
    dot,
    frac,
    integer_kernel_basis,
    invariant_factors,
    lattice_points,
    mat_vec,
    nullspace,
    polytope_facets,
    polytope_vertices_from_facets,
    normalized_volume,
    rank,
    solve_integer,
    solve_linear,
    transpose,
    vec_sub,
)


class InvalidFanError(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class BoxElement:
    """A lattice point v = sum_{i in cone} c_i b_i with 0 <= c_i < 1."""

    v: tuple
    cone: frozenset
    coeffs: tuple  # length m, Fraction, zero off the cone
    age: Fraction

    def __repr__(self):
        return f"Box{self.v}(age={self.age})"


@dataclass(frozen=True)
class FractionalDegree:
    """A degree vector d with sum d_i b_i + v = 0 whose fractional support
    spans a cone; these index the series terms of the sector at v."""

    d: tuple  # length m+s, Fractions (integers beyond index m)
    box_target: BoxElement  # {-d}
    mori_class: tuple  # d + v as an element of L_Q (length m+s)
    grading: Fraction


class StackyFan:
    """Complete simplicial stacky fan adapted to its fan polytope."""

    def __init__(self, rank_n, rays, max_cones, extended=(), validate=True,
                 sample_checks=64):
        self.n = rank_n
        self.rays = [tuple(int(x) for x in r) for r in rays]
        self.m = len(self.rays)
        self.extended = [tuple(int(x) for x in r) for r in extended]
        self.s = len(self.extended)
        self.all_rays = self.rays + self.extended
        self.max_cones = sorted((frozenset(int(i) for i in c) for c in max_cones),
                                key=lambda c: tuple(sorted(c)))
        self._box = None
        self._facets = None
        if validate:
            self._validate(sample_checks)

    # -- validation --------------------------------------------------

    def _validate(self, sample_checks):
        n, m = self.n, self.m
        for r in self.all_rays:
            if len(r) != n:
                raise InvalidFanError(f"ray {r} has wrong length")
        for r in self.rays:
            if all(x == 0 for x in r):
                raise InvalidFanError("zero ray vector")
        for c in self.max_cones:
            mat = [list(self.rays[i]) for i in sorted(c)]
            if rank(mat) != len(c):
                raise InvalidFanError(f"cone {sorted(c)} is not simplicial")
        # facet sharing: each (n-1)-subface of a maximal cone lies in
        # exactly two maximal cones (completeness in codimension one)
        if any(len(c) != n for c in self.max_cones):
            raise InvalidFanError("maximal cones must be full-dimensional")
        from itertools import combinations
        count = {}
        for c in self.max_cones:
            for f in combinations(sorted(c), n - 1):
                count[f] = count.get(f, 0) + 1
        bad = [f for f, k in count.items() if k != 2]
        if bad:
            raise InvalidFanError(f"faces {bad} not shared by exactly two cones")
        # 0 interior to the fan polytope
        for u, c in self.polytope_facets():
            if c < 1:
                raise InvalidFanError("origin is not interior to the fan polytope")
        # extended rays: nonzero lattice points of the polytope, fresh
        for b in self.extended:
            if all(x == 0 for x in b):
                raise InvalidFanError("extended ray is zero")
            if b in self.rays:
                raise InvalidFanError(f"extended ray {b} duplicates a fan ray")
            if any(dot(u, b) > c for u, c in self.polytope_facets()):
                raise InvalidFanError(f"extended ray {b} outside the fan polytope")
        # rays generate the full lattice
        facs = invariant_factors(transpose([list(r) for r in self.all_rays]))
        if len(facs) != n or any(f != 1 for f in facs):
            raise InvalidFanError(f"rays do not generate Z^{n} (factors {facs})")
        # sampled completeness / no overlap of cone interiors
        rng = random.Random(20240901)
        for _ in range(sample_checks):
            x = tuple(Fraction(rng.randint(-97, 97), rng.randint(1, 13)) for _ in range(n))
            hits = sum(1 for c in self.max_cones if self._in_cone_interiorish(c, x))
            if hits != 1:
                if all(v == 0 for v in x):
                    continue
                raise InvalidFanError(f"direction {x} lies in {hits} maximal cones")

    def _in_cone_interiorish(self, cone, x):
        idx = sorted(cone)
        cols = transpose([list(self.rays[i]) for i in idx])
        sol = solve_linear(cols, list(x))
        if sol is None:
            return False
        # half-open: count boundary points once via lexicographic tie-break
        if any(c < 0 for c in sol):
            return False
        if all(c > 0 for c in sol):
            return True
        # on a face: attribute to the lexicographically smallest owner
        face = frozenset(i for i, c in zip(idx, sol) if c > 0)
        owners = sorted((c for c in self.max_cones if face <= c),
                        key=lambda c: tuple(sorted(c)))
        return owners[0] == cone

    # -- polytope ----------------------------------------------------

    def polytope_facets(self):
        if self._facets is None:
            self._facets = polytope_facets(self.rays, self.n)
        return self._facets

    def polytope_lattice_points(self):
        return lattice_points(self.polytope_facets(), self.n)

    def fan_polytope_vertices(self):
        return polytope_vertices_from_facets(self.polytope_facets(), self.n)

    # -- cones -------------------------------------------------------

    def is_cone(self, idx_set):
        idx = frozenset(idx_set)
        return any(idx <= c for c in self.max_cones)

    def cone_determinant(self, cone):
        idx = sorted(cone)
        mat = [list(self.rays[i]) for i in idx]
        # |det| of the square minor spanned by the rays inside their span
        if len(idx) == self.n:
            return abs(_det(mat))
        basis = _span_basis(mat)
        coords = [solve_linear(transpose(basis), row) for row in mat]
        return abs(_det([list(c) for c in coords]))

    def minimal_cone_containing(self, v):
        """The minimal cone whose rays support v, or None."""
        best = None
        for c in self.max_cones:
            idx = sorted(c)
            cols = transpose([list(self.rays[i]) for i in idx])
            sol = solve_linear(cols, list(v))
            if sol is None or any(x < 0 for x in sol):
                continue
            face = frozenset(i for i, x in zip(idx, sol) if x > 0)
            if best is None or len(face) < len(best):
                best = face
        return best

    # -- box ---------------------------------------------------------

    def box(self):
        """All box elements, deduplicated, with minimal supporting cones."""
        if self._box is not None:
            return self._box
        found = {}
        zero = tuple(0 for _ in range(self.n))
        found[zero] = BoxElement(zero, frozenset(), tuple(Fraction(0) for _ in range(self.m)),
                                 Fraction(0))
        for conek in self.max_cones:
            idx = sorted(conek)
            det = self.cone_determinant(conek)
            if det == 1:
                continue
            for combo in _grid(det, len(idx)):
                if all(k == 0 for k in combo):
                    continue
                cs = [Fraction(k, det) for k in combo]
                v = [Fraction(0)] * self.n
                for c, i in zip(cs, idx):
                    for a in range(self.n):
                        v[a] += c * self.rays[i][a]
                if any(x.denominator != 1 for x in v):
                    continue
                vt = tuple(int(x) for x in v)
                coeffs = [Fraction(0)] * self.m
                for c, i in zip(cs, idx):
                    coeffs[i] = c
                support = frozenset(i for i, c in enumerate(coeffs) if c != 0)
                elt = BoxElement(vt, support, tuple(coeffs), sum(cs, Fraction(0)))
                prev = found.get(vt)
                if prev is None or len(elt.cone) < len(prev.cone):
                    found[vt] = elt
        self._box = sorted(found.values(), key=lambda e: (e.age, e.v))
        return self._box

    def box_by_v(self, v):
        for e in self.box():
            if e.v == tuple(v):
                return e
        raise DomainError(f"{v} is not a box element")

    def reduce_degree(self, d):
        """The box element {-d} for a vector d in Q^m x Z^s."""
        d = tuple(frac(x) for x in d)
        if len(d) != self.m + self.s:
            raise DomainError("degree vector has wrong length")
        for j in range(self.m, self.m + self.s):
            if d[j].denominator != 1:
                raise DomainError("extended coordinates must be integral")
        support = frozenset(i for i in range(self.m) if d[i].denominator != 1)
        if not self.is_cone(support):
            raise DomainError(f"fractional support {sorted(support)} is not a cone")
        coeffs = [Fraction(0)] * self.m
        for i in support:
            coeffs[i] = (-d[i]) % 1
        v = [Fraction(0)] * self.n
        for i in support:
            for a in range(self.n):
                v[a] += coeffs[i] * self.rays[i][a]
        if any(x.denominator != 1 for x in v):
            raise DomainError("reduction is not a lattice point")
        return self.box_by_v(tuple(int(x) for x in v))


def _det(mat):
    n = len(mat)
    if n == 0:
        return 1
    if n == 1:
        return mat[0][0]
    total = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in mat[1:]]
        sign = -1 if j % 2 else 1
        total += sign * mat[0][j] * _det(minor)
    return total


def _span_basis(rows):
    basis = []
    for row in rows:
        cand = basis + [list(row)]
        if rank(cand) > len(basis):
            basis.append(list(row))
    return transpose(basis)


def _grid(det, k):
    def rec(i, partial):
        if i == k:
            yield tuple(partial)
            return
        for x in range(det):
            yield from rec(i + 1, partial + [x])

    yield from rec(0, [])


class ExtendedLattice:
    """Kernel lattice L, divisor classes, Mori data and the nef basis."""

    def __init__(self, fan: StackyFan, nef_basis=None, grading=None):
        self.fan = fan
        n, m, s = fan.n, fan.m, fan.s
        self.N = m + s
        beta = transpose([list(r) for r in fan.all_rays])  # n x (m+s)
        self.beta = beta
        self.L_basis = integer_kernel_basis(beta)  # list of (m+s)-tuples
        self.ell = len(self.L_basis)
        if self.ell != self.N - n:
            raise InvalidFanError("kernel has unexpected rank")
        # divisor sequence surjectivity: rows of L_basis generate Z^ell
        facs = invariant_factors([list(b) for b in self.L_basis])
        if len(facs) != self.ell or any(f != 1 for f in facs):
            raise InvalidFanError("divisor sequence is not exact over Z")
        # projector P with P . L_basis_cols = identity (coords in L_Q)
        cols = transpose([list(b) for b in self.L_basis])  # N x ell
        gram = [[dot(a, b) for b in self.L_basis] for a in self.L_basis]
        ginv = inverse(gram)
        self.proj = [[sum(ginv[i][k] * cols[j][k] for k in range(self.ell))
                      for j in range(self.N)] for i in range(self.ell)]
        # delta_j rays for extended vectors
        self.deltas = []
        for j, b in enumerate(fan.extended):
            cone = fan.minimal_cone_containing(b)
            if cone is None:
                raise InvalidFanError(f"extended ray {b} not inside the fan")
            idx = sorted(cone)
            colsb = transpose([list(fan.rays[i]) for i in idx])
            sol = solve_linear(colsb, list(b))
            delta = [Fraction(0)] * self.N
            delta[m + j] = Fraction(1)
            for c, i in zip(sol, idx):
                delta[i] -= c
            self.deltas.append(tuple(delta))
        self._mori_gens = None
        self._mori_facets = None
        self._nef_basis = None
        if nef_basis is not None:
            self._set_nef_basis([tuple(int(x) for x in p) for p in nef_basis])
        self._grading_spec = grading

    # -- coordinates ---------------------------------------------------

    def coords(self, lam):
        """Coordinates of lam in the L_basis (lam a full (m+s)-vector)."""
        return tuple(sum(frac(self.proj[i][j]) * frac(lam[j]) for j in range(self.N))
                     for i in range(self.ell))

    def from_coords(self, t):
        out = [Fraction(0)] * self.N
        for c, b in zip(t, self.L_basis):
            for j in range(self.N):
                out[j] += frac(c) * b[j]
        return tuple(out)

    def rho_hat(self):
        return tuple(1 for _ in range(self.N))

    def rho(self):
        return tuple(1 if i < self.fan.m else 0 for i in range(self.N))

    # -- Mori cone -----------------------------------------------------

    def mori_generators(self):
        """Generators of the extended Mori cone, as full L_Q vectors."""
        if self._mori_gens is not None:
            return self._mori_gens
        fan = self.fan
        m, s = fan.m, fan.s
        # H_2 sublattice: kernel of rays matrix and of extended coordinates
        rows = [list(r) for r in self.beta]
        for j in range(s):
            unit = [0] * self.N
            unit[m + j] = 1
            rows.append(unit)
        h2_basis = integer_kernel_basis(rows)
        r = len(h2_basis)
        gens = set()
        for cone in fan.max_cones:
            outside = [i for i in range(m) if i not in cone]
            ineqs = [tuple(b[i] for b in h2_basis) for i in outside]
            if r == 0:
                continue
            for ray in cone_rays_from_inequalities(ineqs, r):
                full = [0] * self.N
                for c, b in zip(ray, h2_basis):
                    for j in range(self.N):
                        full[j] += c * b[j]
                gens.add(clear_denominators(full))
        for delta in self.deltas:
            gens.add(clear_denominators(delta))
        self._mori_gens = sorted(gens)
        return self._mori_gens

    def mori_facets(self):
        """Facet functionals of the extended Mori cone in L_basis coords."""
        if self._mori_facets is None:
            gens = [self.coords(g) for g in self.mori_generators()]
            from .linalg import cone_facets_from_rays
            self._mori_facets = cone_facets_from_rays(gens, self.ell)
        return self._mori_facets

    def in_mori(self, lam):
        t = self.coords(lam)
        if self.from_coords(t) != tuple(frac(x) for x in lam):
            return False
        return all(dot(f, t) >= 0 for f in self.mori_facets())

    def is_extended_nef(self, w):
        return all(dot(w, g) >= 0 for g in self.mori_generators())

    # -- nef basis -------------------------------------------------------

    def _images(self, vectors):
        """Images of divisor-coefficient functionals in L^* coordinates."""
        return [tuple(dot(v, b) for b in self.L_basis) for v in vectors]

    def _set_nef_basis(self, basis):
        imgs = self._images(basis)
        if abs(_det([list(v) for v in imgs])) != 1:
            raise InvalidFanError("supplied nef basis is not a Z-basis of L^*")
        for p in basis:
            if not self.is_extended_nef(p):
                raise InvalidFanError(f"supplied basis vector {p} is not extended nef")
        for a in range(self.ell - self.fan.s, self.ell):
            p = basis[a]
            if any(p[i] != 0 for i in range(self.fan.m)):
                raise InvalidFanError("trailing nef basis vectors must be "
                                      "supported on extended divisors")
        self._nef_basis = basis

    def nef_basis(self):
        """Extended nef Z-basis p_1..p_{r+s} of L^*, as divisor combos."""
        if self._nef_basis is not None:
            return self._nef_basis
        m, s = self.fan.m, self.fan.s
        fixed = []
        for j in range(s):
            unit = [0] * self.N
            unit[m + j] = 1
            fixed.append(tuple(unit))
        need = self.ell - s
        cands = self._nef_candidates()
        chosen = self._complete_basis(fixed, cands, need)
        if chosen is None:
            raise InvalidFanError("no extended nef basis found; supply one "
                                  "in the scenario")
        self._nef_basis = chosen + fixed
        return self._nef_basis

    def _nef_candidates(self):
        bound = 2
        for row in self.beta:
            bound = max(bound, max(abs(x) for x in row) + 1)
        combos = sorted((tuple(c) for c in _box_iter(self.N, bound)),
                        key=lambda v: (max(abs(x) for x in v), sum(abs(x) for x in v), v))
        cands = []
        seen = set()
        # small combinations c . D, nicest representative per image in L^*
        for combo in combos:
            if all(c == 0 for c in combo):
                continue
            img = tuple(dot(combo, b) for b in self.L_basis)
            if img in seen or all(x == 0 for x in img):
                continue
            seen.add(img)
            if self.is_extended_nef(combo):
                cands.append(combo)
        return cands

    def _complete_basis(self, fixed, cands, need):
        fixed_imgs = self._images(fixed)

        def rec(start, chosen, imgs):
            if len(chosen) == need:
                if abs(_det([list(v) for v in imgs + fixed_imgs])) == 1:
                    return list(chosen)
                return None
            for k in range(start, len(cands)):
                img = self._images([cands[k]])[0]
                if rank([list(v) for v in imgs + fixed_imgs + [list(img)]]) \
                        != len(imgs) + len(fixed_imgs) + 1:
                    continue
                got = rec(k + 1, chosen + [cands[k]], imgs + [list(img)])
                if got is not None:
                    return got
            return None

        return rec(0, [], [])

    def pairing_matrix_check(self):
        """<D_j, delta_k> = Kronecker delta on extended indices."""
        m = self.fan.m
        for j in range(self.fan.s):
            for k in range(self.fan.s):
                want = Fraction(1 if j == k else 0)
                if self.deltas[k][m + j] != want:
                    return False
        return True

    # -- grading ---------------------------------------------------------

    def grading_vector(self):
        """Functional measuring series truncation; positive on the Mori cone.

        Defaults to sum_a p_a (total degree in the q coordinates), which is
        strictly positive on the extended Mori cone minus the origin.
        Scenarios may override with any strictly positive extended nef combo.
        """
        if self._grading_spec is not None:
            w = tuple(int(x) for x in self._grading_spec)
        else:
            w = tuple(sum(col) for col in zip(*self.nef_basis()))
        for g in self.mori_generators():
            if dot(w, g) <= 0:
                raise InvalidFanError("grading vector is not strictly positive "
                                      "on the extended Mori cone")
        return w

    def grading(self, lam):
        return dot(self.grading_vector(), lam)

    def q_exponents(self, lam):
        """Exponent of each coordinate q_a in q^lam."""
        return tuple(dot(p, lam) for p in self.nef_basis())

    def grading_of_qexp(self, e):
        """Grading of a class given only its q-coordinate exponents."""
        if not hasattr(self, "_qexp_weights"):
            imgs = self._images(self.nef_basis())
            w = self.grading_vector()
            wimg = tuple(dot(w, b) for b in self.L_basis)
            y = solve_linear(transpose([list(v) for v in imgs]), list(wimg))
            assert y is not None
            self._qexp_weights = y
        return sum((frac(a) * frac(x) for a, x in zip(self._qexp_weights, e)),
                   Fraction(0))

    # -- sector degree enumeration -------------------------------------------

    def enumerate_degrees(self, v: BoxElement, bound):
        """All sector degrees d with d+v in the extended Mori cone and
        grading at most the bound.

        Sorted by (grading, lexicographic class); see FractionalDegree.
        """
        bound = frac(bound)
        if bound < 0:
            return []
        fan = self.fan
        cv = list(v.coeffs) + [Fraction(0)] * fan.s
        out = []
        for w in fan.box():
            target = vec_sub(w.v, v.v)
            k0 = solve_integer(self.beta, list(target))
            if k0 is None:
                continue
            gamma = list(w.coeffs) + [Fraction(0)] * fan.s
            lam0 = tuple(frac(k0[i]) - gamma[i] + cv[i] for i in range(self.N))
            for t in self._lattice_translates(lam0, bound):
                lam = tuple(lam0[j] + sum(ti * self.L_basis[i][j]
                                          for i, ti in enumerate(t))
                            for j in range(self.N))
                if not self._mori_and_bound(lam, bound):
                    continue
                d = tuple(lam[j] - cv[j] for j in range(self.N))
                out.append(FractionalDegree(
                    d=d, box_target=w, mori_class=lam,
                    grading=self.grading(lam)))
        out.sort(key=lambda fd: (fd.grading, fd.mori_class))
        return out

    def enumerate_nonneg_integer_degrees(self, v: BoxElement, bound):
        """Integer d >= 0 with sum d_i b_i + v = 0 and grading(d+v) <= bound.

        Returns pairs (d, lam) sorted by (grading, class)."""
        bound = frac(bound)
        fan = self.fan
        cv = list(v.coeffs) + [Fraction(0)] * fan.s
        target = tuple(-x for x in v.v)
        k0 = solve_integer(self.beta, list(target))
        if k0 is None:
            return []
        w = self.grading_vector()
        lam0 = tuple(frac(k0[i]) + cv[i] for i in range(self.N))
        ineqs = []
        for i in range(self.N):
            a = tuple(frac(b[i]) for b in self.L_basis)
            ineqs.append((a, frac(k0[i])))
        gl = tuple(frac(dot(w, b)) for b in self.L_basis)
        ineqs.append((tuple(-x for x in gl), bound - dot(w, lam0)))
        verts = _vertices_affine(ineqs, self.ell)
        out = []
        if verts is None:
            return out
        los = [min(vv[i] for vv in verts) for i in range(self.ell)]
        his = [max(vv[i] for vv in verts) for i in range(self.ell)]

        def rec(i, partial):
            if i == self.ell:
                d = [k0[j] + sum(t * self.L_basis[b][j]
                                 for b, t in enumerate(partial))
                     for j in range(self.N)]
                if any(x < 0 for x in d):
                    return
                lam = tuple(frac(x) + cv[j] for j, x in enumerate(d))
                if self.grading(lam) > bound:
                    return
                out.append((tuple(int(x) for x in d), lam))
                return
            for x in range(math.ceil(los[i]), math.floor(his[i]) + 1):
                rec(i + 1, partial + [x])

        rec(0, [])
        out.sort(key=lambda t: (self.grading(t[1]), t[1]))
        return out

    def _mori_and_bound(self, lam, bound):
        t = self.coords(lam)
        if any(dot(f, t) < 0 for f in self.mori_facets()):
            return False
        return self.grading(lam) <= bound

    def _lattice_translates(self, lam0, bound):
        """Integer points t with lam0 + L.t inside {Mori, grading <= bound}."""
        # inequalities in t-space: facets(coords(lam0) + t) >= 0,
        # grading(lam0) + grading(L t) <= bound
        t0 = self.coords(lam0)
        ineqs = []  # (a, b) meaning  a . t + b >= 0
        for f in self.mori_facets():
            ineqs.append((tuple(frac(x) for x in f), dot(f, t0)))
        w = self.grading_vector()
        gl = tuple(frac(dot(w, b)) for b in self.L_basis)
        ineqs.append((tuple(-x for x in gl), frac(bound) - dot(w, lam0)))
        verts = _vertices_affine(ineqs, self.ell)
        if verts is None:
            return []
        los = [min(v[i] for v in verts) for i in range(self.ell)]
        his = [max(v[i] for v in verts) for i in range(self.ell)]
        pts = []

        def rec(i, partial):
            if i == self.ell:
                pts.append(tuple(partial))
                return
            for x in range(math.ceil(los[i]), math.floor(his[i]) + 1):
                rec(i + 1, partial + [x])

        rec(0, [])
        return pts


def _vertices_affine(ineqs, dim):
    """Vertices of {t : a.t + b >= 0}; None if empty, error if unbounded."""
    from .linalg import _subsets
    verts = set()
    if dim == 0:
        ok = all(b >= 0 for _, b in ineqs)
        return [()] if ok else None
    for sub in _subsets(range(len(ineqs)), dim):
        A = [list(ineqs[i][0]) for i in sub]
        b = [-ineqs[i][1] for i in sub]
        x = solve_linear(A, b)
        if x is None:
            continue
        if all(dot(a, x) + c >= 0 for a, c in ineqs):
            verts.add(tuple(x))
    if not verts:
        return None
    return sorted(verts)


def _box_iter(dim, bound):
    def rec(i, partial):
        if i == dim:
            yield tuple(partial)
            return
        for x in range(-bound, bound + 1):
            yield from rec(i + 1, partial + [x])

    yield from rec(0, [])


def pl_values(fan: StackyFan, ray_values):
    """Extend prescribed values at the fan rays to all m+s ray vectors by
    piecewise-linear interpolation over minimal cones."""
    vals = [frac(x) for x in ray_values]
    assert len(vals) == fan.m
    out = list(vals)
    for b in fan.extended:
        cone = fan.minimal_cone_containing(b)
        if cone is None:
            raise DomainError(f"{b} lies in no cone")
        idx = sorted(cone)
        cols = transpose([list(fan.rays[i]) for i in idx])
        sol = solve_linear(cols, list(b))
        out.append(sum((c * vals[i] for c, i in zip(sol, idx)), Fraction(0)))
    return tuple(out)


class NefPartitionError(ValueError):
    pass


class NefPartition:
    """Disjoint groups of rays whose divisor sums are nef and Cartier.

    ``index_sets`` lists I_1..I_c (0-based ray indices); I_0 is the
    complement.  Values of the supporting piecewise-linear functions are
    interpolated onto extended rays and must land in {0, 1} there.
    """

    def __init__(self, fan: StackyFan, ext: ExtendedLattice, index_sets):
        self.fan = fan
        self.ext = ext
        self.index_sets = [sorted(int(i) for i in s) for s in index_sets]
        seen = set()
        for s in self.index_sets:
            for i in s:
                if i in seen or not (0 <= i < fan.m):
                    raise NefPartitionError(f"bad or repeated ray index {i}")
                seen.add(i)
        self.phi = []  # per group: values at all m+s rays
        for s in self.index_sets:
            vals = [Fraction(1 if i in s else 0) for i in range(fan.m)]
            for b in fan.extended:
                vals.append(self._interpolate(vals, b))
            self.phi.append(vals)
        self._validate()

    @property
    def c(self):
        return len(self.index_sets)

    def _interpolate(self, ray_vals, point):
        fan = self.fan
        cone = fan.minimal_cone_containing(point)
        if cone is None:
            raise NefPartitionError(f"{point} lies in no cone")
        idx = sorted(cone)
        cols = transpose([list(fan.rays[i]) for i in idx])
        sol = solve_linear(cols, list(point))
        return sum((c * ray_vals[i] for c, i in zip(sol, idx)), Fraction(0))

    def phi_value(self, j, point):
        return self._interpolate(self.phi[j][:self.fan.m], point)

    def _linear_extension(self, vals, cone):
        fan = self.fan
        idx = sorted(cone)
        rows = [list(fan.rays[i]) for i in idx]
        return solve_linear(transpose(rows), [vals[i] for i in idx])

    def _validate(self):
        fan = self.fan
        for j, vals in enumerate(self.phi):
            for k, b in enumerate(fan.extended):
                if vals[fan.m + k] not in (0, 1):
                    raise NefPartitionError(
                        f"group {j} takes value {vals[fan.m + k]} at "
                        f"extended ray {b}")
            # nef: the PL function dominates each of its linear extensions
            for cone in fan.max_cones:
                u = self._linear_extension(vals, cone)
                for i in range(fan.m):
                    if i in cone:
                        continue
                    if vals[i] < dot(u, fan.rays[i]):
                        raise NefPartitionError(
                            f"group {j} is not nef (cone {sorted(cone)}, "
                            f"ray {i})")
            # pulled back from the coarse space: integral on box elements
            for elt in fan.box():
                val = sum((c * vals[i] for i, c in enumerate(elt.coeffs)),
                          Fraction(0))
                if val.denominator != 1:
                    raise NefPartitionError(
                        f"group {j} has fractional age {val % 1} on {elt.v}")

    def divisor_vectors(self):
        """Integer coefficient vectors of xi_j over the fan rays."""
        out = []
        for s in self.index_sets:
            out.append(tuple(1 if i in s else 0 for i in range(self.fan.m)))
        return out

    def lifts(self):
        """The canonical lift of each xi_j into L^* (divisor coefficients)."""
        return [tuple(v) for v in self.phi]

    def rho_Y(self, ext=None):
        """rho_hat minus the lifted group classes, as a functional vector."""
        total = [Fraction(1)] * (self.fan.m + self.fan.s)
        for vals in self.phi:
            for i, x in enumerate(vals):
                total[i] -= x
        return tuple(total)


# ---------------------------------------------------------------------------
# polytope-level queries used by the command line and the B side
# ---------------------------------------------------------------------------


def reflexivity(fan: StackyFan):
    """Lattice-distance-one test for the fan polytope, plus the dual."""
    facets = fan.polytope_facets()
    is_reflexive = all(c == 1 for _, c in facets)
    dual = sorted(tuple(Fraction(-u_i, c) for u_i in u) for u, c in facets)
    dual_vertices = []
    for v in dual:
        if all(x.denominator == 1 for x in v):
            dual_vertices.append(tuple(int(x) for x in v))
        else:
            dual_vertices.append(tuple(x for x in v))
    return is_reflexive, dual_vertices


def fan_normalized_volume(fan: StackyFan):
    return normalized_volume(fan.fan_polytope_vertices(), fan.n)
