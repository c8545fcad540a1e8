"""Truncated cohomology-valued q-series and the toric hypergeometric sums.

A series is a map {degree class} -> {z exponent} -> RingElement, where the
degree class d+v is stored as the full (m+s)-tuple of Fractions.  The
multivalued prefactor exp(pbar log q / z) is tracked as a flag and only
expanded when a pairing needs it (see gamma.a_period).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .cohomology import GradedRing, RingElement
from .lattice import BoxElement, ExtendedLattice
from .linalg import dot, frac


class FormulaError(ValueError):
    pass


class NefPartitionError(ValueError):
    pass


class SearchFailure(ValueError):
    pass


@dataclass
class LogVectorField:
    """z q d/dq direction given by a divisor-coefficient functional."""

    functional: tuple        # (m+s)-vector pairing with degree classes
    ring_class: RingElement  # its image in H^2


class QSeries:
    def __init__(self, ring, ext, v: BoxElement, prefactor=True,
                 q_bound=Fraction(0), z_window=(-8, 8)):
        self.ring = ring
        self.ext = ext
        self.v = v
        self.prefactor = prefactor
        self.q_bound = frac(q_bound)
        self.z_window = (int(z_window[0]), int(z_window[1]))
        self.terms = {}  # lam -> {z_exp: RingElement}

    def add_term(self, lam, z_exp, elt: RingElement):
        if elt.is_zero():
            return
        lo, hi = self.z_window
        if z_exp < lo or z_exp > hi:
            return
        slot = self.terms.setdefault(tuple(lam), {})
        if z_exp in slot:
            slot[z_exp] = slot[z_exp] + elt
        else:
            slot[z_exp] = elt

    def cleanup(self):
        for lam in list(self.terms):
            slot = self.terms[lam]
            for j in list(slot):
                if slot[j].is_zero():
                    del slot[j]
            if not slot:
                del self.terms[lam]
        return self

    def copy(self):
        out = QSeries(self.ring, self.ext, self.v, self.prefactor,
                      self.q_bound, self.z_window)
        out.terms = {lam: dict(slot) for lam, slot in self.terms.items()}
        return out

    def coefficient(self, lam, z_exp) -> RingElement:
        slot = self.terms.get(tuple(lam))
        if slot is None or z_exp not in slot:
            return self.ring.zero()
        return slot[z_exp]

    def __add__(self, other):
        if self.ring is not other.ring:
            raise FormulaError("series over different rings cannot be mixed")
        if self.prefactor != other.prefactor:
            raise FormulaError("series with mismatched prefactor flags")
        out = self.copy()
        out.q_bound = min(self.q_bound, other.q_bound)
        for lam, slot in other.terms.items():
            for j, elt in slot.items():
                out.add_term(lam, j, elt)
        return out.cleanup()

    def scale(self, c):
        out = self.copy()
        for lam, slot in out.terms.items():
            for j in slot:
                slot[j] = slot[j].scale(c)
        return out

    def __sub__(self, other):
        return self + other.scale(-1)

    def truncated(self, bound):
        bound = frac(bound)
        out = self.copy()
        out.q_bound = min(self.q_bound, bound)
        out.terms = {lam: slot for lam, slot in out.terms.items()
                     if self.ext.grading(lam) <= bound}
        return out

    def max_abs(self):
        best = 0.0
        for slot in self.terms.values():
            for elt in slot.values():
                best = max(best, elt.max_abs())
        return best

    def leading_term(self):
        """Coefficient at the class of the sector unit (q -> 0 limit)."""
        zero = tuple(Fraction(0) for _ in range(self.ext.N))
        return self.coefficient(zero, 0)


def _mul_linear_factor(ring, val, cls, k):
    """Multiply a z-Laurent ring value by (cls + k z)."""
    out = {}
    for j, elt in val.items():
        if cls is not None:
            piece = ring.cup(cls, elt)
            if not piece.is_zero():
                out[j] = out.get(j, ring.zero()) + piece
        if k != 0:
            out[j + 1] = out.get(j + 1, ring.zero()) + elt.scale(k)
    return out


def _div_linear_factor(ring, val, cls, k, nilpotency):
    """Multiply by (cls + k z)^{-1} for k != 0 and cls nilpotent."""
    if k == 0:
        raise FormulaError("division by a factor with no z part")
    out = {}
    kinv = Fraction(1, 1) / k
    for j, elt in val.items():
        power = elt
        for t in range(nilpotency + 1):
            coeff = ((-1) ** t) * kinv ** (t + 1)
            tgt = j - 1 - t
            out[tgt] = out.get(tgt, ring.zero()) + power.scale(coeff)
            if cls is None:
                break
            power = ring.cup(cls, power)
            if power.is_zero():
                break
    return out


def _box_factor_ks(di):
    """Surviving factor positions for one coordinate of a degree vector.

    Returns (multiply_ks, divide_ks); multiply for d_i < 0 over
    d_i < k <= 0, divide for d_i > 0 over 0 < k <= d_i, always within the
    residue class of d_i mod 1.
    """
    di = frac(di)
    mult, div = [], []
    if di > 0:
        k = di
        while k > 0:
            div.append(k)
            k -= 1
    elif di < 0:
        k = di + 1
        while k <= 0:
            mult.append(k)
            k += 1
    return mult, div


def build_series(ring: GradedRing, ext: ExtendedLattice, v: BoxElement,
                 q_bound, z_window=None) -> QSeries:
    """The cohomology-valued hypergeometric sum attached to a sector.

    Leading term is the sector unit; the exp(pbar log q / z) prefactor is
    recorded on the flag.
    """
    if z_window is None:
        w = ring.fan.n + 4
        z_window = (-w, w)
    series = QSeries(ring, ext, v, prefactor=True, q_bound=frac(q_bound),
                     z_window=z_window)
    nilp = ring.fan.n
    divisors = [ring.divisor_class(i) for i in range(ext.N)]
    for fd in ext.enumerate_degrees(v, q_bound):
        val = {0: ring.unit_sector(fd.box_target.v)}
        for i in range(ext.N):
            mult, div = _box_factor_ks(fd.d[i])
            cls = divisors[i] if i < ring.fan.m else None
            cls = cls if (cls is not None and not cls.is_zero()) else None
            for k in mult:
                val = _mul_linear_factor(ring, val, cls, k)
            for k in div:
                val = _div_linear_factor(ring, val, cls, k, nilp)
            if not val:
                break
        for j, elt in val.items():
            series.add_term(fd.mori_class, j, elt)
    return series.cleanup()


def build_twisted_series(ring: GradedRing, ext: ExtendedLattice,
                         nef_partition, v: BoxElement, q_bound,
                         z_window=None) -> QSeries:
    """Hypergeometric sum twisted by a split nef bundle.

    ``nef_partition`` is the NefPartition from the scenario module; its
    lifted functionals pair integrally with every stored degree class.
    """
    if z_window is None:
        w = ring.fan.n + 4
        z_window = (-w, w)
    series = QSeries(ring, ext, v, prefactor=True, q_bound=frac(q_bound),
                     z_window=z_window)
    nilp = ring.fan.n
    divisors = [ring.divisor_class(i) for i in range(ext.N)]
    xi_classes = [ring.class_from_divisor_vector(nvec)
                  for nvec in nef_partition.divisor_vectors()]
    lifts = nef_partition.lifts()
    for fd in ext.enumerate_degrees(v, q_bound):
        val = {0: ring.unit_sector(fd.box_target.v)}
        for i in range(ext.N):
            mult, div = _box_factor_ks(fd.d[i])
            cls = divisors[i] if i < ring.fan.m else None
            cls = cls if (cls is not None and not cls.is_zero()) else None
            for k in mult:
                val = _mul_linear_factor(ring, val, cls, k)
            for k in div:
                val = _div_linear_factor(ring, val, cls, k, nilp)
            if not val:
                break
        for xi_cls, lift in zip(xi_classes, lifts):
            pairing = dot(lift, fd.mori_class)
            if frac(pairing).denominator != 1:
                raise NefPartitionError(
                    f"lift pairs fractionally ({pairing}) with {fd.mori_class}")
            if pairing < 0:
                raise NefPartitionError(
                    f"lift pairs negatively ({pairing}) on the Mori cone")
            for k in range(1, int(pairing) + 1):
                val = _mul_linear_factor(ring, val,
                                         None if xi_cls.is_zero() else xi_cls,
                                         k)
        for j, elt in val.items():
            series.add_term(fd.mori_class, j, elt)
    series.cleanup()
    check_homogeneity(series, nef_partition.rho_Y(ext))
    return series


def check_homogeneity(series: QSeries, rho_like):
    """Every stored term must be homogeneous of degree 2 age(v).

    Grading: deg q^lam = 2 <rho_like, lam>, deg z = 2, classes carry their
    age-shifted degree.
    """
    ring = series.ring
    target = 2 * series.v.age
    for lam, slot in series.terms.items():
        base = 2 * dot(rho_like, lam)
        for j, elt in slot.items():
            for deg, _piece in ring.graded_pieces(elt):
                got = deg + base + 2 * j
                if got != target:
                    raise FormulaError(
                        f"inhomogeneous term at {lam}, z^{j}: degree {got} "
                        f"!= {target}")
    return True


@dataclass
class MirrorMap:
    F: dict                  # lam -> scalar
    G: dict                  # lam -> RingElement (degree <= 2 part)
    sigma_series: dict       # lam -> RingElement, the power-series part of G/F
    q_bound: Fraction
    # the omitted multivalued part is always  sum_a pbar_a log q_a


def qdict_mul(A, B, ext, bound):
    out = {}
    for la, ca in A.items():
        for lb, cb in B.items():
            lam = tuple(x + y for x, y in zip(la, lb))
            if ext.grading(lam) > bound:
                continue
            out[lam] = out.get(lam, 0) + ca * cb
    return {k: v for k, v in out.items() if v != 0}


def qdict_inverse(F, ext, bound):
    """Inverse of a scalar q-series with constant term 1."""
    zero = tuple(Fraction(0) for _ in range(ext.N))
    if F.get(zero, 0) != 1:
        raise FormulaError("series inversion needs constant term 1")
    delta = {k: -v for k, v in F.items() if k != zero}
    inv = {zero: 1}
    power = {zero: 1}
    if not delta:
        return inv
    gmin = min(ext.grading(k) for k in delta)
    steps = int(frac(bound) / gmin) + 1 if gmin > 0 else 0
    for _ in range(steps):
        power = qdict_mul(power, delta, ext, bound)
        if not power:
            break
        for k, v in power.items():
            inv[k] = inv.get(k, 0) + v
    return {k: v for k, v in inv.items() if v != 0}


def extract_mirror_map(series: QSeries) -> MirrorMap:
    """F from the z^0 scalar part, G from the z^{-1} part, sigma = G/F."""
    ring = series.ring
    ext = series.ext
    if any(c != 0 for c in series.v.v):
        raise FormulaError("mirror map extraction needs the trivial sector")
    zero = tuple(Fraction(0) for _ in range(ext.N))
    F = {}
    G = {}
    for lam, slot in series.terms.items():
        c0 = slot.get(0)
        if c0 is not None:
            rest = c0 - ring.unit().scale(c0.scalar_part())
            if not rest.prune().is_zero():
                raise FormulaError(f"z^0 part at {lam} is not scalar")
            if c0.scalar_part() != 0:
                F[lam] = c0.scalar_part()
        c1 = slot.get(-1)
        if c1 is not None:
            for deg, _ in ring.graded_pieces(c1):
                if deg > 2:
                    raise FormulaError(f"z^-1 part at {lam} has degree {deg}")
            G[lam] = c1
    if F.get(zero, 0) != 1:
        raise FormulaError("malformed series: F(0) != 1")
    Finv = qdict_inverse(F, ext, series.q_bound)
    sigma = {}
    for lam, elt in G.items():
        for mu, c in Finv.items():
            tgt = tuple(x + y for x, y in zip(lam, mu))
            if ext.grading(tgt) > series.q_bound:
                continue
            prev = sigma.get(tgt)
            sigma[tgt] = elt.scale(c) if prev is None else prev + elt.scale(c)
    sigma = {k: v for k, v in sigma.items() if not v.prune().is_zero()}
    return MirrorMap(F=F, G=G, sigma_series=sigma, q_bound=series.q_bound)


def apply_log_field(series: QSeries, fieldv: LogVectorField) -> QSeries:
    """Apply the z-decorated logarithmic vector field through the prefactor.

    On a prefactored term q^lam * c the field acts as
    (class + z <functional, lam>) * c.
    """
    ring = series.ring
    out = QSeries(ring, series.ext, series.v, series.prefactor,
                  series.q_bound, series.z_window)
    for lam, slot in series.terms.items():
        pair = dot(fieldv.functional, lam)
        for j, elt in slot.items():
            piece = ring.cup(fieldv.ring_class, elt)
            if not piece.is_zero():
                out.add_term(lam, j, piece)
            if pair != 0:
                out.add_term(lam, j + 1, elt.scale(pair))
    return out.cleanup()


def shift_keys(series: QSeries, delta, new_v: BoxElement) -> QSeries:
    """Multiply by q^{-delta}: translate every stored degree class."""
    ring = series.ring
    ext = series.ext
    g = ext.grading(delta)
    out = QSeries(ring, ext, new_v, series.prefactor,
                  series.q_bound - g, series.z_window)
    for lam, slot in series.terms.items():
        tgt = tuple(x - y for x, y in zip(lam, delta))
        for j, elt in slot.items():
            out.add_term(tgt, j, elt)
    return out.cleanup()


def derive_sector_series(ring: GradedRing, ext: ExtendedLattice,
                         v: BoxElement, base: QSeries,
                         search_bound=None) -> QSeries:
    """Recover the sector-v series from the main one by differentiation.

    Searches K_0 for delta with {-delta} = v and all ceil(delta_i) >= 0,
    then applies q^{-delta} prod_i prod_{nu < ceil(delta_i)} (bD_i - nu z).
    """
    import math
    if search_bound is None:
        search_bound = base.q_bound
    zero_box = ring.fan.box_by_v(tuple(0 for _ in range(ring.fan.n)))
    delta = None
    for fd in ext.enumerate_degrees(zero_box, search_bound):
        if fd.box_target.v != v.v:
            continue
        if all(math.ceil(x) >= 0 for x in fd.d):
            delta = fd
            break
    if delta is None:
        raise SearchFailure(f"no usable shift found for sector {v.v} "
                            f"within grading {search_bound}")
    work = base
    raises = sum(max(0, math.ceil(x)) for x in delta.d)
    for i in range(ext.N):
        ceil_i = math.ceil(delta.d[i])
        if ceil_i <= 0:
            continue
        cls = ring.divisor_class(i)
        func = tuple(1 if t == i else 0 for t in range(ext.N))
        for nu in range(ceil_i):
            stepped = apply_log_field(work, LogVectorField(func, cls))
            if nu != 0:
                # subtract nu * z * work
                extra = QSeries(ring, ext, work.v, work.prefactor,
                                work.q_bound, work.z_window)
                for lam, slot in work.terms.items():
                    for j, elt in slot.items():
                        extra.add_term(lam, j + 1, elt.scale(nu))
                stepped = stepped - extra
            work = stepped
    out = shift_keys(work, delta.d, v)
    # each application can pull in a z power from below the stored window
    out.z_window = (base.z_window[0] + raises, base.z_window[1])
    return out


def series_equal(a: QSeries, b: QSeries, bound=None) -> bool:
    ext = a.ext
    if bound is None:
        bound = min(a.q_bound, b.q_bound)
    zlo = max(a.z_window[0], b.z_window[0])
    zhi = min(a.z_window[1], b.z_window[1])
    keys = set(a.terms) | set(b.terms)
    for lam in keys:
        if ext.grading(lam) > bound:
            continue
        sa = a.terms.get(lam, {})
        sb = b.terms.get(lam, {})
        for j in set(sa) | set(sb):
            if j < zlo or j > zhi:
                continue
            ca = sa.get(j)
            cb = sb.get(j)
            ca = a.ring.zero() if ca is None else ca
            cb = b.ring.zero() if cb is None else cb
            if not (ca - cb).prune().is_zero():
                return False
    return True
