"""Landau-Ginzburg side: superpotentials, residue period series, numeric
oscillatory integrals, and the multi-generator hypergeometric system.

Exact series live over the q coordinates (exponent tuples of Fractions);
numerics use log-substituted tensor Gauss-Legendre quadrature with
refinement-based error estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .lattice import ExtendedLattice, NefPartition, StackyFan, fan_normalized_volume
from .linalg import dot, frac, integer_kernel_basis, vec_add


class PartitionValueError(ValueError):
    pass


class NumericFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# alpha assignments and superpotentials
# ---------------------------------------------------------------------------


@dataclass
class AlphaAssignment:
    """A section alpha_i = c_i * q^{w_i} of the torus quotient."""

    coeffs: list       # Fractions
    q_exps: list       # tuples of Fractions, length r+s each

    def validate(self, ext: ExtendedLattice):
        for d in ext.L_basis:
            want = ext.q_exponents(d)
            got = [Fraction(0)] * len(want)
            scalar = Fraction(1)
            for i, di in enumerate(d):
                for a in range(len(want)):
                    got[a] += di * frac(self.q_exps[i][a])
                scalar *= frac(self.coeffs[i]) ** di
            if tuple(got) != tuple(want) or scalar != 1:
                raise PartitionValueError(
                    f"alpha assignment is not a section over the q "
                    f"coordinates (basis degree {d})")
        return True

    def monomial(self, exponents):
        """(scalar, q exponent tuple) of prod alpha_i^{e_i}."""
        na = len(self.coeffs)
        scalar = Fraction(1)
        qe = [Fraction(0)] * len(self.q_exps[0])
        for i, e in enumerate(exponents):
            if e == 0:
                continue
            scalar *= frac(self.coeffs[i]) ** frac(e) if frac(e).denominator == 1 \
                else _fractional_power(frac(self.coeffs[i]), frac(e))
            for a in range(len(qe)):
                qe[a] += frac(e) * frac(self.q_exps[i][a])
        return scalar, tuple(qe)


def _fractional_power(c, e):
    if c == 1:
        return Fraction(1)
    raise PartitionValueError(
        f"fractional power {e} of coefficient {c} is not rational")


@dataclass
class LaurentPoly:
    """Finitely supported map from torus exponents to q-monomial coefficients."""

    n: int
    terms: dict  # exponent tuple (ints) -> {q exponent tuple: Fraction}

    def support(self):
        return sorted(self.terms)


def build_superpotentials(fan: StackyFan, ext: ExtendedLattice,
                          nef_partition: NefPartition,
                          alpha: AlphaAssignment):
    """W^(0)..W^(c) with W^(j) summing alpha_i t^{b_i} over its index group."""
    alpha.validate(ext)
    N = fan.m + fan.s
    groups = [set() for _ in range(nef_partition.c + 1)]
    for i in range(N):
        placed = False
        for j, vals in enumerate(nef_partition.phi):
            if vals[i] == 1:
                groups[j + 1].add(i)
                placed = True
                break
            if vals[i] not in (0, 1):
                raise PartitionValueError(
                    f"partition value {vals[i]} at ray {i} not in {{0,1}}")
        if not placed:
            groups[0].add(i)
    out = []
    for g in groups:
        terms = {}
        for i in sorted(g):
            b = fan.all_rays[i]
            coeff, qe = alpha.monomial([1 if t == i else 0 for t in range(N)])
            slot = terms.setdefault(tuple(b), {})
            slot[qe] = slot.get(qe, Fraction(0)) + coeff
        out.append(LaurentPoly(fan.n, terms))
    return out


def combined_potential(Ws):
    """Sum of all groups, the function whose residues we expand."""
    n = Ws[0].n
    terms = {}
    for W in Ws:
        for e, qd in W.terms.items():
            slot = terms.setdefault(e, {})
            for qe, c in qd.items():
                slot[qe] = slot.get(qe, Fraction(0)) + c
    return LaurentPoly(n, terms)


# ---------------------------------------------------------------------------
# residue period series (geometric-series route) and the multinomial side
# ---------------------------------------------------------------------------


def _qd_add_into(acc, qd, scale=Fraction(1)):
    for qe, c in qd.items():
        acc[qe] = acc.get(qe, Fraction(0)) + scale * c
    return acc


def _qd_mul(a, b):
    out = {}
    for qa, ca in a.items():
        for qb, cb in b.items():
            key = tuple(x + y for x, y in zip(qa, qb))
            out[key] = out.get(key, Fraction(0)) + ca * cb
    return out


def residue_period_series(fan: StackyFan, ext: ExtendedLattice, Ws,
                          alpha: AlphaAssignment, v, k, order):
    """Constant-term expansion of the compact-cycle residue.

    Computes k! sum_m C(m+k, k) alpha^v [t^{-v}] W^m by honest Laurent
    multiplication of W powers (box-pruned), normalized by (2 pi i)^{n-1}.
    Truncated at total q-grading ``order`` measured by the lattice grading.
    """
    W = combined_potential(Ws)
    n = fan.n
    k = int(k)
    order = frac(order)
    # which powers m can contribute within the grading bound
    needed = {}
    max_m = 0
    for d, lam in ext.enumerate_nonneg_integer_degrees(v, order):
        m = sum(d)
        needed[m] = True
        max_m = max(max_m, m)
    target = tuple(-x for x in v.v)
    maxcoord = max(max(abs(x) for x in e) for e in W.terms)
    # alpha^v prefactor
    pref_scalar, pref_q = alpha.monomial(list(v.coeffs) + [0] * fan.s)
    out = {}
    power = {tuple(0 for _ in range(n)): {tuple([Fraction(0)] * ext.ell): Fraction(1)}}
    for m in range(0, max_m + 1):
        if m > 0:
            nxt = {}
            remaining = max_m - m
            for e, qd in power.items():
                for eb, qb in W.terms.items():
                    e2 = vec_add(e, eb)
                    if any(abs(x - t) > remaining * maxcoord
                           for x, t in zip(e2, target)):
                        continue
                    slot = nxt.setdefault(e2, {})
                    for qe_b, cb in qb.items():
                        for qe_a, ca in qd.items():
                            key = tuple(x + y for x, y in zip(qe_a, qe_b))
                            slot[key] = slot.get(key, Fraction(0)) + ca * cb
            power = nxt
        if m in needed:
            hit = power.get(target)
            if not hit:
                continue
            scale = Fraction(math.factorial(k)) * math.comb(m + k, k)
            for qe, c in hit.items():
                key = tuple(x + y for x, y in zip(qe, pref_q))
                out[key] = out.get(key, Fraction(0)) + scale * pref_scalar * c
    return {key: c for key, c in out.items()
            if c != 0 and ext.grading_of_qexp(key) <= order}


def multinomial_series(fan: StackyFan, ext: ExtendedLattice,
                       alpha: AlphaAssignment, v, k, order):
    """Oracle side: sum over nonnegative integer degree vectors of
    (|d| + k)! / prod d_i! at the matching q monomial."""
    k = int(k)
    out = {}
    for d, lam in ext.enumerate_nonneg_integer_degrees(v, order):
        coeff = Fraction(math.factorial(sum(d) + k))
        for di in d:
            coeff /= math.factorial(di)
        scalar = Fraction(1)
        for i, di in enumerate(d):
            scalar *= frac(alpha.coeffs[i]) ** di
        qe = ext.q_exponents(lam)
        out[qe] = out.get(qe, Fraction(0)) + coeff * scalar
    return {key: c for key, c in out.items() if c != 0}


# ---------------------------------------------------------------------------
# numeric oscillatory integrals
# ---------------------------------------------------------------------------


def _laurent_numeric(W: LaurentPoly, qvals):
    """[(coefficient float, exponent tuple)] at numeric q."""
    out = []
    for e, qd in W.terms.items():
        val = 0.0
        for qe, c in qd.items():
            term = float(c)
            for a, ex in enumerate(qe):
                term *= float(qvals[a]) ** float(ex)
            val += term
        if val != 0.0:
            out.append((val, tuple(int(x) for x in e)))
    return out


def oscillatory_integral(W: LaurentPoly, qvals, z, phi=None, rel_tol=1e-6,
                         max_order=640):
    """integral over the positive real torus of phi(t) e^{-W(t)/z} dt/t.

    Log substitution t = e^u, tensor Gauss-Legendre with order doubling and
    a refinement error estimate; dimensions n <= 2.
    """
    n = W.n
    if n > 2:
        raise NumericFailure("numeric quadrature implemented for n <= 2 only")
    terms = _laurent_numeric(W, qvals)
    phi_terms = _laurent_numeric(phi, qvals) if phi is not None else None
    z = float(z)

    def integrand(us):
        # us: array of shape (npts, n)
        acc = np.zeros(len(us))
        for c, e in terms:
            acc += c * np.exp(us @ np.array(e, dtype=float))
        val = np.exp(-acc / z)
        if phi_terms is not None:
            ph = np.zeros(len(us))
            for c, e in phi_terms:
                ph += c * np.exp(us @ np.array(e, dtype=float))
            val *= ph
        return val

    # half-width: grow the box until the integrand is negligible on the
    # whole boundary (the plateau of these potentials reaches far along
    # the anti-diagonal, so corners alone are not enough)
    def boundary_max(L):
        line = np.linspace(-L, L, 129)
        if n == 1:
            pts = np.array([[-L], [L]])
        else:
            pts = np.concatenate([
                np.column_stack([line, np.full_like(line, -L)]),
                np.column_stack([line, np.full_like(line, L)]),
                np.column_stack([np.full_like(line, -L), line]),
                np.column_stack([np.full_like(line, L), line]),
            ])
        return float(np.max(np.abs(integrand(pts))))

    L = 4.0
    while L < 400.0:
        if boundary_max(L) < 1e-30:
            break
        L *= 1.4
    else:
        raise NumericFailure("integrand does not decay inside search box")

    def gauss(order):
        xs, ws = np.polynomial.legendre.leggauss(order)
        xs = xs * L
        ws = ws * L
        if n == 1:
            pts = xs.reshape(-1, 1)
            weights = ws
        else:
            pts = np.array([[a, b] for a in xs for b in xs])
            weights = np.array([wa * wb for wa in ws for wb in ws])
        vals = integrand(pts)
        return float(np.dot(weights, vals)), float(np.dot(weights, np.abs(vals)))

    order = 80
    prev, _ = gauss(order)
    while order < max_order:
        order *= 2
        cur, mass = gauss(order)
        err = abs(cur - prev)
        # near-cancelling integrands converge in absolute terms only
        if err <= rel_tol * max(abs(cur), 1e-8 * mass, 1e-300):
            return cur, err
        prev = cur
    raise NumericFailure(
        f"quadrature did not converge to {rel_tol} by order {max_order}")


# ---------------------------------------------------------------------------
# multi-generator hypergeometric system
# ---------------------------------------------------------------------------


@dataclass
class GkzSystem:
    fan: StackyFan
    points: list          # hatted points (b, 1), index 0 is the apex (0, 1)
    mfuncs: list          # n+1 functionals on the hatted lattice
    generators: list      # (b tuple, k) with k >= 1, plus the k = 0 symbol
    kernel: list          # integer kernel basis of the point matrix

    @property
    def npoints(self):
        return len(self.points)


def build_gkz(fan: StackyFan, height_bound=None) -> GkzSystem:
    """Points (b_i, 1), Euler functionals, and box generators up to height
    n+1 (extended on demand by the checker)."""
    n = fan.n
    if height_bound is None:
        height_bound = n + 1
    points = [tuple([0] * n) + (1,)]
    for b in fan.all_rays:
        points.append(tuple(b) + (1,))
    mfuncs = [tuple([0] * n) + (1,)]
    for i in range(n):
        mfuncs.append(tuple(1 if t == i else 0 for t in range(n)) + (0,))
    gens = [(tuple([0] * n), 0)]
    from .linalg import lattice_points
    facets = fan.polytope_facets()
    for k in range(1, height_bound + 1):
        for b in lattice_points(facets, n, scale=k):
            gens.append((tuple(b), k))
    mat = [[p[i] for p in points] for i in range(n + 1)]
    kernel = integer_kernel_basis(mat)
    return GkzSystem(fan=fan, points=points, mfuncs=mfuncs,
                     generators=gens, kernel=kernel)


@dataclass
class AlphaSeries:
    """Laurent series in alpha_0..alpha_N; log flag carries the k=0 branch."""

    width: int           # number of alpha variables, N+1
    terms: dict          # exponent tuple (N+1 ints) -> Fraction
    log_alpha0: Fraction
    order: Fraction      # valid through total degree in alpha_1..alpha_N

    def d_alpha(self, j):
        out = {}
        for e, c in self.terms.items():
            if e[j] == 0:
                continue
            e2 = list(e)
            e2[j] -= 1
            out[tuple(e2)] = out.get(tuple(e2), Fraction(0)) + c * e[j]
        if self.log_alpha0 and j == 0:
            key = tuple([-1] + [0] * (self.width - 1))
            out[key] = out.get(key, Fraction(0)) + self.log_alpha0
        new_order = self.order - (1 if j > 0 else 0)
        return AlphaSeries(self.width,
                           {e: c for e, c in out.items() if c != 0},
                           Fraction(0), new_order)

    def alpha_d_alpha(self, j):
        out = {}
        for e, c in self.terms.items():
            if e[j]:
                out[e] = c * e[j]
        if self.log_alpha0 and j == 0:
            zero = tuple([0] * self.width)
            out[zero] = out.get(zero, Fraction(0)) + self.log_alpha0
        return AlphaSeries(self.width, out, Fraction(0), self.order)

    def add_scaled(self, other, c):
        out = dict(self.terms)
        for e, x in other.terms.items():
            out[e] = out.get(e, Fraction(0)) + c * x
        return AlphaSeries(self.width,
                           {e: x for e, x in out.items() if x != 0},
                           self.log_alpha0 + c * other.log_alpha0,
                           min(self.order, other.order))

    def is_zero_to_order(self, order):
        return self.log_alpha0 == 0 and all(
            c == 0 for e, c in self.terms.items() if sum(e[1:]) <= order)


def _nonneg_solutions(rays, target, max_total):
    """All d >= 0 with sum d_i b_i = target and sum d_i <= max_total."""
    N = len(rays)
    n = len(target)
    out = []

    def rec(i, left, partial, acc):
        if i == N:
            if all(a == t for a, t in zip(acc, target)):
                out.append(tuple(partial))
            return
        # crude reachability bound per coordinate
        maxc = [max(abs(r[c]) for r in rays[i:]) if i < N else 0
                for c in range(n)]
        for c in range(n):
            if abs(target[c] - acc[c]) > left * (maxc[c] or 0):
                return
        for x in range(left + 1):
            rec(i + 1, left - x, partial + [x],
                [a + x * b for a, b in zip(acc, rays[i])])

    rec(0, max_total, [], [0] * n)
    return out


def compute_period_family(system: GkzSystem, order):
    """Constant-term periods for every generator; k = 0 gets the log branch."""
    fan = system.fan
    rays = [p[:-1] for p in system.points[1:]]
    N = len(rays)
    order = int(order)
    family = {}
    width = N + 1
    for b, k in system.generators:
        terms = {}
        if k == 0:
            # [t^0] log W: log alpha_0 plus the degree-zero tail
            for d in _nonneg_solutions(rays, tuple([0] * fan.n), order):
                tot = sum(d)
                if tot == 0:
                    continue
                coeff = Fraction((-1) ** (tot - 1)) * math.factorial(tot - 1)
                for di in d:
                    coeff /= math.factorial(di)
                e = (-tot,) + tuple(d)
                terms[e] = terms.get(e, Fraction(0)) + coeff
            family[(b, k)] = AlphaSeries(width, terms, Fraction(1),
                                         Fraction(order))
            continue
        target = tuple(-x for x in b)
        for d in _nonneg_solutions(rays, target, order):
            tot = sum(d)
            coeff = Fraction((-1) ** (k - 1) * (-1) ** tot) \
                * math.factorial(tot + k - 1)
            for di in d:
                coeff /= math.factorial(di)
            e = (-k - tot,) + tuple(d)
            terms[e] = terms.get(e, Fraction(0)) + coeff
        family[(b, k)] = AlphaSeries(width, terms, Fraction(0), Fraction(order))
    return family


def apply_euler_operator(system: GkzSystem, family, i, gen):
    """Z_{i,c} applied to the family member at c."""
    series = family[gen]
    b, k = gen
    chat = tuple(b) + (k,)
    acc = AlphaSeries(series.width, {}, Fraction(0), series.order)
    for j, p in enumerate(system.points):
        w = dot(system.mfuncs[i], p)
        if w == 0:
            continue
        acc = acc.add_scaled(series.alpha_d_alpha(j), w)
    shift = dot(system.mfuncs[i], chat)
    if shift:
        acc = acc.add_scaled(series, shift)
    return acc


def apply_step_operator(system: GkzSystem, family, j, gen):
    """d/d alpha_j Pi_c minus Pi_{c + point_j}; None if the target is
    outside the generator set."""
    b, k = gen
    p = system.points[j]
    tgt = (tuple(x + y for x, y in zip(b, p[:-1])), k + 1)
    if tgt not in family:
        return None, tgt
    lhs = family[gen].d_alpha(j)
    return lhs.add_scaled(family[tgt], Fraction(-1)), tgt


def apply_kernel_operator(system: GkzSystem, family, nu, gen):
    """Box operator for a kernel vector nu at a generator with k >= 1."""
    series = family[gen]
    plus = series
    minus = series
    drop_p = 0
    drop_m = 0
    for j, x in enumerate(nu):
        for _ in range(max(0, x)):
            plus = plus.d_alpha(j)
            drop_p += 1 if j > 0 else 0
        for _ in range(max(0, -x)):
            minus = minus.d_alpha(j)
            drop_m += 1 if j > 0 else 0
    res = plus.add_scaled(minus, Fraction(-1))
    return res


def gkz_check(system: GkzSystem, family, order):
    """Annihilation report: every generated operator, its checked order and
    whether the residual vanished identically (exact rational zeros)."""
    report = []
    order = int(order)
    for gen in sorted(family):
        b, k = gen
        for i in range(len(system.mfuncs)):
            if k == 0 and i == 0:
                # scaling operator on the k = 0 symbol sees the tube-branch
                # constant; reported, not asserted
                val = apply_euler_operator(system, family, i, gen)
                report.append({"op": f"Z[{i},{gen}]", "order": order,
                               "zero": val.is_zero_to_order(order),
                               "asserted": False})
                continue
            val = apply_euler_operator(system, family, i, gen)
            report.append({"op": f"Z[{i},{gen}]", "order": order,
                           "zero": val.is_zero_to_order(order),
                           "asserted": True})
        for j in range(system.npoints):
            res, tgt = apply_step_operator(system, family, j, gen)
            if res is None:
                continue
            chk = order - (1 if j > 0 else 0)
            report.append({"op": f"D[e{j},{gen}->{tgt}]", "order": chk,
                           "zero": res.is_zero_to_order(chk),
                           "asserted": True})
        if k >= 1:
            for nu in system.kernel:
                drop = sum(max(0, x) for j, x in enumerate(nu) if j > 0)
                drop = max(drop, sum(max(0, -x) for j, x in enumerate(nu)
                                     if j > 0))
                res = apply_kernel_operator(system, family, nu, gen)
                chk = order - drop
                report.append({"op": f"D[{tuple(nu)},{gen}]", "order": chk,
                               "zero": res.is_zero_to_order(chk),
                               "asserted": True})
    return report


def gkz_rank_info(system: GkzSystem):
    vol = fan_normalized_volume(system.fan)
    interior = [g for g in system.generators
                if g[1] >= 1 and _is_interior(system.fan, g)]
    return {"normalized_volume": vol,
            "generators": len(system.generators),
            "interior_generators": len(interior)}


def _is_interior(fan, gen):
    b, k = gen
    return all(dot(u, b) < k * c for u, c in fan.polytope_facets())


# ---------------------------------------------------------------------------
# critical values
# ---------------------------------------------------------------------------


def critical_values(W: LaurentPoly, qname="q"):
    """Exact critical values of the superpotential on the torus, with the
    q monomials kept symbolic.  Returns sympy expressions."""
    import sympy

    n = W.n
    q = sympy.symbols(qname)
    ts = sympy.symbols(f"t0:{n}", nonzero=True)
    expr = 0
    for e, qd in W.terms.items():
        mono = 1
        for a, ex in enumerate(e):
            mono *= ts[a] ** int(ex)
        coeff = 0
        for qe, c in qd.items():
            total = sympy.Rational(c.numerator, c.denominator)
            for exq in qe:
                if exq:
                    total *= q ** sympy.Rational(frac(exq).numerator,
                                                 frac(exq).denominator)
            coeff += total
        expr += coeff * mono
    eqs = [sympy.expand(ts[a] * sympy.diff(expr, ts[a])) for a in range(n)]
    sols = sympy.solve(eqs, list(ts), dict=True)
    values = []
    for sol in sols:
        values.append(sympy.radsimp(sympy.simplify(expr.subs(sol))))
    return values
