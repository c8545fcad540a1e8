"""Order-by-order loop-matrix factorization and small quantum products.

Everything in this module is exact rational arithmetic: entries are scalar
q-series tensored with Laurent polynomials in z, and the factorization
recursion never leaves the rationals.  A q-matrix is stored level by level
as ``{degree class: N x N nested lists of {z exponent: Fraction}}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .cohomology import ConfigurationError, GradedRing
from .lattice import ExtendedLattice
from .linalg import dot, frac
from .series import QSeries


class WindowOverflowError(ValueError):
    def __init__(self, lo, hi):
        super().__init__(f"z window too narrow; need at least ({lo}, {hi})")
        self.required = (lo, hi)


class GaugeError(ValueError):
    pass


def _zd_add(a, b):
    out = dict(a)
    for j, c in b.items():
        out[j] = out.get(j, Fraction(0)) + c
    return {j: c for j, c in out.items() if c != 0}


def _zd_scale(a, c):
    return {j: c * x for j, x in a.items()} if c != 0 else {}


def _zd_mul(a, b):
    out = {}
    for ja, ca in a.items():
        for jb, cb in b.items():
            j = ja + jb
            out[j] = out.get(j, Fraction(0)) + ca * cb
    return {j: c for j, c in out.items() if c != 0}


def _mat_add(A, B):
    return [[_zd_add(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def _mat_mul(A, B):
    n = len(A)
    out = [[{} for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for k in range(n):
            if not A[i][k]:
                continue
            for j in range(n):
                if not B[k][j]:
                    continue
                out[i][j] = _zd_add(out[i][j], _zd_mul(A[i][k], B[k][j]))
    return out


def _mat_neg(A):
    return [[_zd_scale(e, -1) for e in row] for row in A]


def _mat_is_zero(A):
    return all(not e for row in A for e in row)


def _identity(n):
    return [[({0: Fraction(1)} if i == j else {}) for j in range(n)]
            for i in range(n)]


def _split(A):
    """(negative z part, nonnegative z part)."""
    n = len(A)
    neg = [[{} for _ in range(n)] for _ in range(n)]
    pos = [[{} for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k, c in A[i][j].items():
                (neg if k < 0 else pos)[i][j][k] = c
    return neg, pos


def _check_window(A, z_window):
    lo, hi = z_window
    worst_lo, worst_hi = lo, hi
    bad = False
    for row in A:
        for e in row:
            for k in e:
                if k < lo:
                    worst_lo, bad = min(worst_lo, k), True
                if k > hi:
                    worst_hi, bad = max(worst_hi, k), True
    if bad:
        raise WindowOverflowError(worst_lo, worst_hi)


@dataclass
class LoopMatrix:
    """Square matrix of scalar q,z-series, identity at the origin."""

    levels: dict            # lam -> N x N nested lists of z dicts
    size: int
    ext: ExtendedLattice
    q_bound: Fraction
    z_window: tuple

    def level_keys_sorted(self):
        return sorted(self.levels, key=lambda k: (self.ext.grading(k), k))

    def check_normalized(self):
        zero = tuple(Fraction(0) for _ in range(self.ext.N))
        head = self.levels.get(zero)
        if head is None:
            raise GaugeError("no constant term")
        want = _identity(self.size)
        if any(_zd_add(a, _zd_scale(b, -1)) for ra, rb in zip(head, want)
               for a, b in zip(ra, rb)):
            raise GaugeError("constant term is not the identity")


def birkhoff_factorize(M: LoopMatrix):
    """Split M = L^{-1} U with L = I + (strictly negative z powers) and U
    holding only nonnegative powers, inductively over q levels."""
    M.check_normalized()
    ext = M.ext
    n = M.size
    zero = tuple(Fraction(0) for _ in range(ext.N))
    L = {zero: _identity(n)}
    U = {zero: _identity(n)}
    for lam in M.level_keys_sorted():
        if lam == zero:
            continue
        T = [row[:] for row in M.levels[lam]]
        T = [[dict(e) for e in row] for row in T]
        for mu, Lmu in list(L.items()):
            if mu == zero:
                continue
            rest = tuple(a - b for a, b in zip(lam, mu))
            Mrest = M.levels.get(rest)
            if Mrest is None:
                continue
            T = _mat_add(T, _mat_mul(Lmu, Mrest))
        _check_window(T, M.z_window)
        neg, pos = _split(T)
        if not _mat_is_zero(neg):
            L[lam] = _mat_neg(neg)
        if not _mat_is_zero(pos):
            U[lam] = pos
    Lm = LoopMatrix(L, n, ext, M.q_bound, M.z_window)
    Up = LoopMatrix(U, n, ext, M.q_bound, M.z_window)
    return Lm, Up


def loop_mat_mul(A: LoopMatrix, B: LoopMatrix, bound=None) -> LoopMatrix:
    ext = A.ext
    if bound is None:
        bound = min(A.q_bound, B.q_bound)
    out = {}
    for la, Ma in A.levels.items():
        for lb, Mb in B.levels.items():
            lam = tuple(x + y for x, y in zip(la, lb))
            if ext.grading(lam) > bound:
                continue
            prod = _mat_mul(Ma, Mb)
            if lam in out:
                out[lam] = _mat_add(out[lam], prod)
            else:
                out[lam] = prod
    out = {k: v for k, v in out.items() if not _mat_is_zero(v)}
    return LoopMatrix(out, A.size, ext, bound, A.z_window)


def loop_mat_equal(A: LoopMatrix, B: LoopMatrix, bound=None) -> bool:
    ext = A.ext
    if bound is None:
        bound = min(A.q_bound, B.q_bound)
    keys = set(A.levels) | set(B.levels)
    for lam in keys:
        if ext.grading(lam) > bound:
            continue
        Ma = A.levels.get(lam)
        Mb = B.levels.get(lam)
        if Ma is None:
            Ma = [[{} for _ in range(A.size)] for _ in range(A.size)]
        if Mb is None:
            Mb = [[{} for _ in range(B.size)] for _ in range(B.size)]
        for ra, rb in zip(Ma, Mb):
            for a, b in zip(ra, rb):
                if _zd_add(a, _zd_scale(b, -1)):
                    return False
    return True


def loop_mat_inverse(A: LoopMatrix, bound=None) -> LoopMatrix:
    """Inverse of I + (positive-level part), by the geometric series."""
    ext = A.ext
    if bound is None:
        bound = A.q_bound
    zero = tuple(Fraction(0) for _ in range(ext.N))
    n = A.size
    N_levels = {k: v for k, v in A.levels.items() if k != zero}
    inv = {zero: _identity(n)}
    power = {zero: _identity(n)}
    if N_levels:
        gmin = min(ext.grading(k) for k in N_levels)
        steps = int(frac(bound) / gmin) + 1
        for _ in range(steps):
            nxt = {}
            for lp, Mp in power.items():
                for ln, Mn in N_levels.items():
                    lam = tuple(x + y for x, y in zip(lp, ln))
                    if ext.grading(lam) > bound:
                        continue
                    prod = _mat_mul(Mp, _mat_neg(Mn))
                    if lam in nxt:
                        nxt[lam] = _mat_add(nxt[lam], prod)
                    else:
                        nxt[lam] = prod
            power = {k: v for k, v in nxt.items() if not _mat_is_zero(v)}
            if not power:
                break
            for k, v in power.items():
                if k in inv:
                    inv[k] = _mat_add(inv[k], v)
                else:
                    inv[k] = v
    return LoopMatrix(inv, n, ext, bound, A.z_window)


# ---------------------------------------------------------------------------
# column assembly from the cohomology-valued series
# ---------------------------------------------------------------------------


def _apply_z_derivative(series: QSeries, p_func, p_cls) -> QSeries:
    """z q_a d/dq_a through the prefactor: (pbar_a + z <p_a, lam>)."""
    ring = series.ring
    out = QSeries(ring, series.ext, series.v, series.prefactor,
                  series.q_bound, series.z_window)
    for lam, slot in series.terms.items():
        pair = dot(p_func, lam)
        for j, elt in slot.items():
            piece = ring.cup(p_cls, elt)
            if not piece.is_zero():
                out.add_term(lam, j, piece)
            if pair != 0:
                out.add_term(lam, j + 1, elt.scale(pair))
    return out.cleanup()


def choose_basis_operators(ring: GradedRing, ext: ExtendedLattice):
    """Monomials in the z-derivatives whose symbols give a ring basis.

    Returns a list of (sector key, exponent tuple over the nef directions,
    ring element).  Greedy by total degree, then lexicographic.
    """
    from .linalg import rank
    fan = ring.fan
    pvecs = ext.nef_basis()
    pcls = [ring.class_from_divisor_vector([p[i] for i in range(fan.m)])
            for p in pvecs]
    live = [a for a, c in enumerate(pcls) if not c.is_zero()]
    dim = ring.dimension()
    chosen = []
    rows = []

    def try_add(key, expo, elt):
        nonlocal rows
        cand = rows + [[frac(x) for x in ring.coords(elt)]]
        if rank(cand) == len(rows) + 1:
            rows = cand
            chosen.append((key, expo, elt))

    for key in ring.sector_order:
        base = ring.unit_sector(key)
        try_add(key, tuple(0 for _ in pvecs), base)
    degree = 1
    while len(chosen) < dim and degree <= fan.n + 1:
        for expo in _exponents_of_degree(len(pvecs), live, degree):
            for key in ring.sector_order:
                elt = ring.unit_sector(key)
                for a, e in enumerate(expo):
                    for _ in range(e):
                        elt = ring.cup(pcls[a], elt)
                if elt.prune().is_zero():
                    continue
                try_add(key, expo, elt)
                if len(chosen) == dim:
                    break
            if len(chosen) == dim:
                break
        degree += 1
    if len(chosen) != dim:
        raise ConfigurationError(
            "derivative monomials do not span the ring; supply operators")
    return chosen


def _exponents_of_degree(k, live, degree):
    out = []

    def rec(i, left, partial):
        if i == k:
            if left == 0:
                out.append(tuple(partial))
            return
        if i not in live:
            rec(i + 1, left, partial + [0])
            return
        for x in range(left + 1):
            rec(i + 1, left - x, partial + [x])

    rec(0, degree, [])
    return sorted(out)


@dataclass
class FundamentalSolution:
    Lminus: LoopMatrix
    Uplus: LoopMatrix
    basis: list              # [(sector key, exponent tuple, ring element)]
    ring: GradedRing
    ext: ExtendedLattice
    q_bound: Fraction
    z_window: tuple
    loop_matrix: LoopMatrix

    def upsilon_column(self, idx):
        """The idx-th regular section as {lam: {z: RingElement}}."""
        out = {}
        for lam, mat in self.Uplus.levels.items():
            for row in range(len(self.basis)):
                zd = mat[row][idx]
                for j, c in zd.items():
                    elt = self.basis[row][2].scale(c)
                    slot = out.setdefault(lam, {})
                    slot[j] = slot[j] + elt if j in slot else elt
        return out


def fundamental_and_upsilon(ring: GradedRing, ext: ExtendedLattice,
                            series_by_sector, basis_ops=None,
                            q_bound=None, z_window=None) -> FundamentalSolution:
    """Assemble derivative columns of the sector series and factorize.

    ``series_by_sector`` maps box vectors to their prefactored series.  The
    negative factor is the inverse fundamental solution in this gauge; the
    nonnegative factor holds the z-regular sections, the first of which is
    the scalar series F(q) times the unit.
    """
    fan = ring.fan
    if basis_ops is None:
        basis_ops = choose_basis_operators(ring, ext)
    dim = ring.dimension()
    if len(basis_ops) != dim:
        raise ConfigurationError("operator count does not match ring rank")
    pvecs = ext.nef_basis()
    pcls = [ring.class_from_divisor_vector([p[i] for i in range(fan.m)])
            for p in pvecs]
    sample = next(iter(series_by_sector.values()))
    if q_bound is None:
        q_bound = sample.q_bound
    if z_window is None:
        z_window = sample.z_window
    # exact change of basis: ring coordinates -> operator-symbol basis
    from .linalg import inverse as _inverse
    basis_mat = [[frac(x) for x in ring.coords(elt)] for _, _, elt in basis_ops]
    to_basis = _inverse([list(col) for col in zip(*basis_mat)])
    columns = []
    for key, expo, _elt in basis_ops:
        ser = series_by_sector[key]
        for a, e in enumerate(expo):
            for _ in range(e):
                ser = _apply_z_derivative(
                    ser, tuple(pvecs[a]), pcls[a])
        columns.append(ser)
    levels = {}
    for cidx, ser in enumerate(columns):
        for lam, slot in ser.terms.items():
            if ext.grading(lam) > q_bound:
                continue
            mat = levels.setdefault(
                lam, [[{} for _ in range(dim)] for _ in range(dim)])
            for j, elt in slot.items():
                coords = ring.coords(elt)
                for row in range(dim):
                    val = sum(frac(to_basis[row][t]) * frac(coords[t])
                              for t in range(dim))
                    if val != 0:
                        mat[row][cidx][j] = mat[row][cidx].get(j, Fraction(0)) + val
    M = LoopMatrix(levels, dim, ext, frac(q_bound), z_window)
    Lm, Up = birkhoff_factorize(M)
    return FundamentalSolution(Lminus=Lm, Uplus=Up, basis=basis_ops,
                               ring=ring, ext=ext, q_bound=frac(q_bound),
                               z_window=z_window, loop_matrix=M)


# ---------------------------------------------------------------------------
# connection matrices
# ---------------------------------------------------------------------------


def _q_derivative(A: LoopMatrix, p_func) -> LoopMatrix:
    """z q_a d/dq_a on a loop matrix: multiply level lam by z <p_a, lam>."""
    out = {}
    for lam, mat in A.levels.items():
        pair = dot(p_func, lam)
        if pair == 0:
            continue
        shifted = [[{j + 1: pair * c for j, c in e.items()} for e in row]
                   for row in mat]
        out[lam] = shifted
    return LoopMatrix(out, A.size, A.ext, A.q_bound, A.z_window)


def quantum_products(fs: FundamentalSolution, directions=None, tol=Fraction(0)):
    """Connection matrices A_a(q) in the operator-symbol basis.

    A_a = L (pbar_a cup) L^{-1} - (z q_a d_a L) L^{-1}; the z dependence
    must cancel exactly, else a GaugeError reports the worst offender.
    """
    ring = fs.ring
    ext = fs.ext
    fan = ring.fan
    pvecs = ext.nef_basis()
    if directions is None:
        directions = [a for a in range(len(pvecs))
                      if not ring.class_from_divisor_vector(
                          [pvecs[a][i] for i in range(fan.m)]).is_zero()]
    dim = len(fs.basis)
    from .linalg import inverse as _inverse
    basis_mat = [[frac(x) for x in ring.coords(elt)] for _, _, elt in fs.basis]
    to_basis = _inverse([list(col) for col in zip(*basis_mat)])
    Linv = loop_mat_inverse(fs.Lminus, fs.q_bound)
    zero = tuple(Fraction(0) for _ in range(ext.N))
    out = {}
    for a in directions:
        cls = ring.class_from_divisor_vector(
            [pvecs[a][i] for i in range(fan.m)])
        cup_mat = [[{} for _ in range(dim)] for _ in range(dim)]
        for cidx, (_k, _e, elt) in enumerate(fs.basis):
            prod = ring.cup(cls, elt)
            coords = ring.coords(prod)
            for row in range(dim):
                val = sum(frac(to_basis[row][t]) * frac(coords[t])
                          for t in range(dim))
                if val != 0:
                    cup_mat[row][cidx] = {0: val}
        cup_loop = LoopMatrix({zero: cup_mat}, dim, ext, fs.q_bound,
                              fs.z_window)
        term1 = loop_mat_mul(loop_mat_mul(fs.Lminus, cup_loop), Linv)
        term2 = loop_mat_mul(_q_derivative(fs.Lminus, tuple(pvecs[a])), Linv)
        total = {}
        for lam in set(term1.levels) | set(term2.levels):
            m1 = term1.levels.get(lam)
            m2 = term2.levels.get(lam)
            if m1 is None:
                m = _mat_neg(m2)
            elif m2 is None:
                m = m1
            else:
                m = _mat_add(m1, _mat_neg(m2))
            if not _mat_is_zero(m):
                total[lam] = m
        # z-freeness: everything away from z^0 must cancel
        plain = {}
        for lam, mat in total.items():
            clean = [[Fraction(0)] * dim for _ in range(dim)]
            for i in range(dim):
                for j in range(dim):
                    for k, c in mat[i][j].items():
                        if k == 0:
                            clean[i][j] = c
                        elif abs(c) > tol:
                            raise GaugeError(
                                f"direction {a}: residual z^{k} entry {c} "
                                f"at level {lam}")
            plain[lam] = clean
        out[a] = plain
    return out


def flatness_residual(fs: FundamentalSolution, products=None):
    """Max violation of d_a A_b = d_b A_a and [A_a, A_b] = 0."""
    if products is None:
        products = quantum_products(fs)
    ext = fs.ext
    pvecs = ext.nef_basis()
    dirs = sorted(products)
    worst = Fraction(0)
    for ai in range(len(dirs)):
        for bi in range(ai + 1, len(dirs)):
            a, b = dirs[ai], dirs[bi]
            Aa, Ab = products[a], products[b]
            worst = max(worst, _commutator_max(Aa, Ab, ext, fs.q_bound))
            # derivative symmetry
            for lam in set(Aa) | set(Ab):
                pa = dot(pvecs[b], lam)
                pb = dot(pvecs[a], lam)
                Ma = Aa.get(lam)
                Mb = Ab.get(lam)
                dim = len(next(iter(Aa.values())))
                for i in range(dim):
                    for j in range(dim):
                        va = pa * (Ma[i][j] if Ma else 0)
                        vb = pb * (Mb[i][j] if Mb else 0)
                        worst = max(worst, abs(va - vb))
    return worst


def _commutator_max(Aa, Ab, ext, bound):
    worst = Fraction(0)
    acc = {}
    for la, Ma in Aa.items():
        for lb, Mb in Ab.items():
            lam = tuple(x + y for x, y in zip(la, lb))
            if ext.grading(lam) > bound:
                continue
            dim = len(Ma)
            cur = acc.setdefault(lam, [[Fraction(0)] * dim for _ in range(dim)])
            for i in range(dim):
                for j in range(dim):
                    s = sum(Ma[i][k] * Mb[k][j] - Mb[i][k] * Ma[k][j]
                            for k in range(dim))
                    cur[i][j] += s
    for mat in acc.values():
        for row in mat:
            for c in row:
                worst = max(worst, abs(c))
    return worst


def unitarity_residual(fs: FundamentalSolution):
    """(L(-z) x, L(z) y) must equal (x, y): returns the largest deviation.

    Checked as L(-z)^T G L(z) = G with G the pairing Gram matrix in the
    operator-symbol basis.
    """
    ring = fs.ring
    ext = fs.ext
    dim = len(fs.basis)
    G = [[frac(ring.pairing(x[2], y[2])) for y in fs.basis] for x in fs.basis]
    zero = tuple(Fraction(0) for _ in range(ext.N))
    Gloop = LoopMatrix({zero: [[({0: c} if c else {}) for c in row]
                               for row in G]},
                       dim, ext, fs.q_bound, fs.z_window)
    # L(-z): flip the sign of every odd z power
    flipped = {}
    for lam, mat in fs.Lminus.levels.items():
        flipped[lam] = [[{j: (c if j % 2 == 0 else -c) for j, c in e.items()}
                         for e in row] for row in mat]
    # transpose
    transposed = {lam: [list(col) for col in zip(*mat)]
                  for lam, mat in flipped.items()}
    Lt = LoopMatrix(transposed, dim, ext, fs.q_bound, fs.z_window)
    prod = loop_mat_mul(loop_mat_mul(Lt, Gloop), fs.Lminus)
    worst = Fraction(0)
    for lam, mat in prod.levels.items():
        for i in range(dim):
            for j in range(dim):
                for k, c in mat[i][j].items():
                    want = G[i][j] if (lam == zero and k == 0) else Fraction(0)
                    worst = max(worst, abs(c - want))
    return worst
