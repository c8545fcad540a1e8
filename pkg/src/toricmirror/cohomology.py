"""Finite-dimensional graded model of orbifold cohomology for toric data.

The untwisted sector is presented as the Stanley-Reisner quotient of the
polynomial ring on the fan rays, computed degree by degree with exact
rational linear algebra.  Twisted sectors are supplied by scenarios (in all
bundled examples they are single points B(Z/k)); the ring stores their
stabilizer orders, age shifts and tangent weights.

Two products coexist and must not be confused:

* ``cup``         -- the orbifold product restricted to (untwisted) x (any),
                     which is all the series machinery ever needs;
* ``sector_mul``  -- the componentwise product on the inertia stack, used
                     for characteristic-class arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .lattice import StackyFan, BoxElement
from .linalg import frac, rref


class PresentationError(ValueError):
    pass


class ConfigurationError(ValueError):
    pass


ZERO_KEY = None  # placeholder, set per ring (tuple of zeros)


@dataclass
class Sector:
    key: tuple                  # the box vector v
    labels: list
    deg0: list                  # unshifted degrees (Fractions)
    age: Fraction
    stabilizer_order: int
    tangent_ages: list          # ages of TX restricted to this sector
    inv_key: tuple              # reduce(-v)
    kind: str = "untwisted"     # "untwisted" | "point"

    @property
    def dim(self):
        return len(self.labels)

    def shifted_degrees(self):
        return [d + 2 * self.age for d in self.deg0]


class RingElement:
    __slots__ = ("ring", "data")

    def __init__(self, ring, data=None):
        self.ring = ring
        self.data = {} if data is None else data

    def copy(self):
        return RingElement(self.ring, {k: list(v) for k, v in self.data.items()})

    def component(self, key):
        sec = self.ring.sectors[key]
        return list(self.data.get(key, [0] * sec.dim))

    def is_zero(self):
        return all(all(c == 0 for c in v) for v in self.data.values())

    def is_untwisted(self):
        z = self.ring.zero_key
        return all(k == z or all(c == 0 for c in v) for k, v in self.data.items())

    def scalar_part(self):
        """Coefficient of the unit class."""
        comp = self.data.get(self.ring.zero_key)
        if comp is None:
            return 0
        return comp[self.ring._unit_index]

    def __add__(self, other):
        assert self.ring is other.ring
        out = {k: list(v) for k, v in self.data.items()}
        for k, v in other.data.items():
            if k in out:
                out[k] = [a + b for a, b in zip(out[k], v)]
            else:
                out[k] = list(v)
        return RingElement(self.ring, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        return RingElement(self.ring,
                           {k: [c * x for x in v] for k, v in self.data.items()})

    def __neg__(self):
        return self.scale(-1)

    def cup(self, other):
        return self.ring.cup(self, other)

    def prune(self):
        self.data = {k: v for k, v in self.data.items() if any(c != 0 for c in v)}
        return self

    def max_abs(self):
        best = 0.0
        for v in self.data.values():
            for c in v:
                best = max(best, abs(complex(c)))
        return best

    def __repr__(self):
        parts = []
        for k in self.ring.sector_order:
            v = self.data.get(k)
            if not v:
                continue
            sec = self.ring.sectors[k]
            for c, lab in zip(v, sec.labels):
                if c != 0:
                    parts.append(f"{c}*{lab}")
        return " + ".join(parts) if parts else "0"


class GradedRing:
    """Direct sum of the untwisted Stanley-Reisner sector and point sectors."""

    def __init__(self, fan: StackyFan, scalar="QQ"):
        self.fan = fan
        self.scalar = scalar
        self.zero_key = tuple(0 for _ in range(fan.n))
        self.sectors = {}
        self.sector_order = []
        self._mono_basis = {}     # degree -> list of exponent tuples
        self._mono_index = {}     # exponent tuple -> (degree, position)
        self._reduction = {}      # exponent tuple -> dict basis_tuple -> coeff
        self._integ_vector = None
        self._unit_index = 0
        self._build_untwisted()

    # -- Stanley-Reisner construction ---------------------------------

    def _faces(self):
        fan = self.fan
        faces = set()
        for c in fan.max_cones:
            idx = sorted(c)
            for k in range(len(idx) + 1):
                for f in combinations(idx, k):
                    faces.add(frozenset(f))
        return faces

    def _build_untwisted(self):
        fan = self.fan
        n, m = fan.n, fan.m
        faces = self._faces()

        def mono_ok(expo):
            return frozenset(i for i, e in enumerate(expo) if e) in faces

        def monos_of_degree(k):
            out = []

            def rec(i, left, partial):
                if i == m:
                    if left == 0:
                        e = tuple(partial)
                        if mono_ok(e):
                            out.append(e)
                    return
                for x in range(left + 1):
                    rec(i + 1, left - x, partial + [x])

            rec(0, k, [])
            return sorted(out)

        self._mono_basis[0] = [tuple(0 for _ in range(m))]
        self._mono_index[self._mono_basis[0][0]] = (0, 0)
        self._reduction[self._mono_basis[0][0]] = {self._mono_basis[0][0]: Fraction(1)}
        for k in range(1, n + 1):
            mons = monos_of_degree(k)
            index = {mo: i for i, mo in enumerate(mons)}
            rels = []
            lower = monos_of_degree(k - 1)
            for j in range(n):
                for mo in lower:
                    row = [Fraction(0)] * len(mons)
                    for i in range(m):
                        coeff = fan.rays[i][j]
                        if coeff == 0:
                            continue
                        up = tuple(e + (1 if t == i else 0) for t, e in enumerate(mo))
                        if up in index:
                            row[index[up]] += coeff
                    if any(x != 0 for x in row):
                        rels.append(row)
            if rels:
                red, pivots = rref(rels)
            else:
                red, pivots = [], []
            pivot_set = set(pivots)
            basis = [mo for i, mo in enumerate(mons) if i not in pivot_set]
            self._mono_basis[k] = basis
            for i, mo in enumerate(basis):
                self._mono_index[mo] = (k, i)
                self._reduction[mo] = {mo: Fraction(1)}
            for r, p in enumerate(pivots):
                expansion = {}
                for c in range(len(mons)):
                    if c in pivot_set or red[r][c] == 0:
                        continue
                    expansion[mons[c]] = -red[r][c]
                self._reduction[mons[p]] = expansion
        # pivot rows of the rref reference only non-pivot (= basis) columns,
        # so every stored reduction already lands in the basis
        total = sum(len(b) for b in self._mono_basis.values())
        if total != len(fan.max_cones):
            raise PresentationError(
                f"ring dimension {total} != Euler count {len(fan.max_cones)}")
        labels = []
        deg0 = []
        for k in range(n + 1):
            for mo in self._mono_basis[k]:
                labels.append(_mono_label(mo))
                deg0.append(Fraction(2 * k))
        sec = Sector(key=self.zero_key, labels=labels, deg0=deg0,
                     age=Fraction(0), stabilizer_order=1,
                     tangent_ages=[], inv_key=self.zero_key, kind="untwisted")
        self.sectors[self.zero_key] = sec
        self.sector_order.append(self.zero_key)
        self._flat = None
        self._untwisted_positions = {}
        pos = 0
        for k in range(n + 1):
            for i, mo in enumerate(self._mono_basis[k]):
                self._untwisted_positions[mo] = pos
                pos += 1
        self._unit_index = self._untwisted_positions[tuple(0 for _ in range(fan.m))]
        self._build_integration()

    def _normal_form(self, expo):
        """Exact coordinates of a monomial over the chosen basis monomials."""
        expo = tuple(expo)
        k = sum(expo)
        if k > self.fan.n:
            return {}
        if frozenset(i for i, e in enumerate(expo) if e) not in self._faces():
            return {}
        red = self._reduction.get(expo)
        if red is None:
            raise PresentationError(f"monomial {expo} missing reduction")
        return dict(red)

    def _mono_product(self, a, b):
        """Product of two basis monomials as basis coordinates."""
        return self._normal_form(tuple(x + y for x, y in zip(a, b)))

    def _build_integration(self):
        fan = self.fan
        n = fan.n
        top = self._mono_basis[n]
        if len(top) != 1:
            raise PresentationError(f"top degree has dimension {len(top)}")
        sigma0 = min(fan.max_cones, key=lambda c: tuple(sorted(c)))
        mult = fan.cone_determinant(sigma0)
        expo = tuple(1 if i in sigma0 else 0 for i in range(fan.m))
        nf = self._normal_form(expo)
        coeff = nf.get(top[0], Fraction(0))
        if coeff == 0:
            raise PresentationError("chosen top cone class vanishes")
        self._integ_top = Fraction(1, mult) / coeff
        # cross-check every maximal cone
        for sig in fan.max_cones:
            e2 = tuple(1 if i in sig else 0 for i in range(fan.m))
            nf2 = self._normal_form(e2)
            got = nf2.get(top[0], Fraction(0)) * self._integ_top
            if got != Fraction(1, fan.cone_determinant(sig)):
                raise PresentationError(
                    f"integration inconsistent on cone {sorted(sig)}")

    # -- sectors -------------------------------------------------------

    def add_point_sector(self, box_elt: BoxElement, stabilizer_order,
                         tangent_ages=None, inv_elt: BoxElement = None):
        if inv_elt is None:
            raise ConfigurationError("point sector needs its involution target")
        if tangent_ages is None:
            tangent_ages = [c for c in box_elt.coeffs if c != 0]
        key = box_elt.v
        sec = Sector(key=key, labels=[f"1_{key}"], deg0=[Fraction(0)],
                     age=box_elt.age, stabilizer_order=int(stabilizer_order),
                     tangent_ages=[frac(a) for a in tangent_ages],
                     inv_key=inv_elt.v, kind="point")
        self.sectors[key] = sec
        self.sector_order.append(key)
        self._flat = None

    # -- element constructors -------------------------------------------

    def zero(self):
        return RingElement(self, {})

    def unit(self):
        return self.monomial_element(tuple(0 for _ in range(self.fan.m)))

    def unit_sector(self, key):
        key = tuple(key)
        sec = self.sectors[key]
        if key == self.zero_key:
            return self.unit()
        v = [0] * sec.dim
        v[0] = 1
        return RingElement(self, {key: v})

    def monomial_element(self, expo):
        nf = self._normal_form(tuple(expo))
        sec = self.sectors[self.zero_key]
        v = [0] * sec.dim
        for mo, c in nf.items():
            v[self._untwisted_positions[mo]] = c
        return RingElement(self, {self.zero_key: v})

    def divisor_class(self, i):
        """The class of the i-th toric divisor (zero for extended indices)."""
        if i >= self.fan.m:
            return self.zero()
        expo = tuple(1 if t == i else 0 for t in range(self.fan.m))
        return self.monomial_element(expo)

    def class_from_divisor_vector(self, nvec):
        out = self.zero()
        for i, c in enumerate(nvec):
            if c != 0 and i < self.fan.m:
                out = out + self.divisor_class(i).scale(c)
        return out.prune()

    def anticanonical(self):
        return self.class_from_divisor_vector([1] * self.fan.m)

    # -- products --------------------------------------------------------

    def _untwisted_mul(self, va, vb):
        """Multiply two untwisted coordinate vectors."""
        mons = self._flat_monos()
        out = [0] * len(mons)
        for i, a in enumerate(va):
            if a == 0:
                continue
            for j, b in enumerate(vb):
                if b == 0:
                    continue
                prod = self._mono_product(mons[i], mons[j])
                for mo, c in prod.items():
                    out[self._untwisted_positions[mo]] += a * b * c
        return out

    def _flat_monos(self):
        if self._flat is None:
            flat = []
            for k in range(self.fan.n + 1):
                flat.extend(self._mono_basis[k])
            self._flat = flat
        return self._flat

    def cup(self, x: RingElement, y: RingElement):
        """Orbifold cup product, restricted to (untwisted) x (anything)."""
        assert x.ring is self and y.ring is self
        if not x.is_untwisted():
            if not y.is_untwisted():
                raise ConfigurationError(
                    "cup product between two twisted classes is not modelled")
            x, y = y, x
        xv = x.data.get(self.zero_key)
        if xv is None:
            return self.zero()
        out = {}
        for key, yv in y.data.items():
            sec = self.sectors[key]
            if key == self.zero_key:
                out[key] = self._untwisted_mul(xv, yv)
            else:
                # restriction of an untwisted class to a point sector keeps
                # only the scalar part
                sc = xv[self._unit_index]
                if sc != 0:
                    out[key] = [sc * c for c in yv]
        return RingElement(self, out).prune()

    def sector_mul(self, x: RingElement, y: RingElement):
        """Componentwise product on the inertia stack."""
        assert x.ring is self and y.ring is self
        out = {}
        for key in set(x.data) & set(y.data):
            sec = self.sectors[key]
            if key == self.zero_key:
                out[key] = self._untwisted_mul(x.data[key], y.data[key])
            elif sec.kind == "point":
                out[key] = [x.data[key][0] * y.data[key][0]]
            else:
                raise ConfigurationError(f"sector {key} has no product model")
        return RingElement(self, out).prune()

    def sector_exp(self, x: RingElement):
        """exp on the inertia stack (nilpotent untwisted part required)."""
        out = self.inertia_unit()
        term = self.inertia_unit()
        for k in range(1, self.fan.n + 1):
            term = self.sector_mul(term, x).scale(Fraction(1, k))
            out = out + term
        # constant parts of point sectors exponentiate as scalars
        for key, v in x.data.items():
            if key == self.zero_key:
                continue
            raise ConfigurationError("sector_exp expects an untwisted argument")
        return out

    def inertia_unit(self):
        """The unit of H*(IX): 1 on every sector."""
        out = self.unit()
        for key in self.sector_order:
            if key != self.zero_key:
                out = out + self.unit_sector(key)
        return out

    # -- involution, pairing, degrees -------------------------------------

    def inv_star(self, x: RingElement):
        out = {}
        for key, v in x.data.items():
            sec = self.sectors[key]
            tgt = sec.inv_key
            if key == self.zero_key:
                out[key] = list(v)
            else:
                # point sectors: canonical identification
                prev = out.get(tgt, [0] * self.sectors[tgt].dim)
                out[tgt] = [a + b for a, b in zip(prev, v)]
        return RingElement(self, out)

    def integrate_untwisted(self, x: RingElement):
        v = x.data.get(self.zero_key)
        if v is None:
            return 0
        mons = self._flat_monos()
        topmon = self._mono_basis[self.fan.n][0]
        return v[self._untwisted_positions[topmon]] * self._integ_top

    def pairing(self, x: RingElement, y: RingElement):
        """Orbifold Poincare pairing (x, y) = int x cup inv*(y)."""
        ys = self.inv_star(y)
        total = 0
        for key, xv in x.data.items():
            yv = ys.data.get(key)
            if yv is None:
                continue
            sec = self.sectors[key]
            if key == self.zero_key:
                prod = self._untwisted_mul(xv, yv)
                topmon = self._mono_basis[self.fan.n][0]
                total += prod[self._untwisted_positions[topmon]] * self._integ_top
            else:
                total += xv[0] * yv[0] * Fraction(1, sec.stabilizer_order)
        return total

    def gram_matrix(self):
        basis = self.flat_basis()
        return [[self.pairing(a, b) for b in basis] for a in basis]

    def flat_basis(self):
        out = []
        for key in self.sector_order:
            sec = self.sectors[key]
            for i in range(sec.dim):
                v = [0] * sec.dim
                v[i] = 1
                out.append(RingElement(self, {key: v}))
        return out

    def flat_labels(self):
        out = []
        for key in self.sector_order:
            sec = self.sectors[key]
            for lab in sec.labels:
                out.append(lab if key == self.zero_key else f"{lab}")
        return out

    def flat_degrees(self):
        """Shifted degrees of the flat basis."""
        out = []
        for key in self.sector_order:
            sec = self.sectors[key]
            out.extend(sec.shifted_degrees())
        return out

    def flat_deg0(self):
        out = []
        for key in self.sector_order:
            sec = self.sectors[key]
            out.extend(sec.deg0)
        return out

    def dimension(self):
        return sum(self.sectors[k].dim for k in self.sector_order)

    def coords(self, x: RingElement):
        out = []
        for key in self.sector_order:
            sec = self.sectors[key]
            v = x.data.get(key)
            out.extend(v if v is not None else [0] * sec.dim)
        return out

    def from_coords(self, coords):
        out = {}
        pos = 0
        for key in self.sector_order:
            sec = self.sectors[key]
            out[key] = list(coords[pos:pos + sec.dim])
            pos += sec.dim
        return RingElement(self, out).prune()

    def deg_operator(self, x: RingElement):
        """Multiply each graded piece by its age-shifted degree."""
        out = {}
        for key, v in x.data.items():
            sec = self.sectors[key]
            degs = sec.shifted_degrees()
            out[key] = [d * c for d, c in zip(degs, v)]
        return RingElement(self, out).prune()

    def graded_pieces(self, x: RingElement):
        """List of (shifted degree, element) pieces of x."""
        bucket = {}
        for key, v in x.data.items():
            sec = self.sectors[key]
            degs = sec.shifted_degrees()
            for i, c in enumerate(v):
                if c == 0:
                    continue
                d = degs[i]
                elt = bucket.setdefault(d, self.zero())
                vec = elt.data.setdefault(key, [0] * sec.dim)
                vec[i] += c
        return sorted(bucket.items(), key=lambda t: t[0])

    def graded_pieces0(self, x: RingElement):
        """Pieces of x by unshifted (inertia-stack) degree."""
        bucket = {}
        for key, v in x.data.items():
            sec = self.sectors[key]
            for i, c in enumerate(v):
                if c == 0:
                    continue
                d = sec.deg0[i]
                elt = bucket.setdefault(d, self.zero())
                vec = elt.data.setdefault(key, [0] * sec.dim)
                vec[i] += c
        return sorted(bucket.items(), key=lambda t: t[0])

    def cup_power(self, x: RingElement, k):
        out = self.unit()
        for _ in range(k):
            out = self.cup(out, x)
        return out


def _mono_label(expo):
    parts = []
    for i, e in enumerate(expo):
        if e == 1:
            parts.append(f"D{i + 1}")
        elif e > 1:
            parts.append(f"D{i + 1}^{e}")
    return "*".join(parts) if parts else "1"


def stanley_reisner_ring(fan: StackyFan, scalar="QQ") -> GradedRing:
    """H*(X;Q) of the coarse space as a graded quotient algebra."""
    return GradedRing(fan, scalar=scalar)


def assemble_orbifold_ring(fan: StackyFan, sector_presentations=None,
                           scalar="QQ") -> GradedRing:
    """Full orbifold ring: Stanley-Reisner sector plus scenario sectors.

    `sector_presentations` maps box vectors (as tuples) to dicts with keys
    ``kind`` ("point"), ``stabilizer_order`` and optional ``tangent_ages``.
    Sectors missing from a non-trivial box raise ConfigurationError.
    """
    ring = GradedRing(fan, scalar=scalar)
    presentations = dict(sector_presentations or {})
    for elt in fan.box():
        if elt.v == ring.zero_key:
            continue
        pres = presentations.pop(tuple(elt.v), None)
        if pres is None:
            raise ConfigurationError(f"missing sector presentation for {elt.v}")
        if pres.get("kind", "point") != "point":
            raise ConfigurationError("only point sectors are modelled")
        inv_elt = fan.reduce_degree([-c for c in elt.coeffs] + [0] * fan.s)
        ring.add_point_sector(
            elt, pres["stabilizer_order"],
            tangent_ages=pres.get("tangent_ages"), inv_elt=inv_elt)
    if presentations:
        raise ConfigurationError(
            f"sector presentations {sorted(presentations)} match no box element")
    return ring
