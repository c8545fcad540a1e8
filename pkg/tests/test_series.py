"""Hypergeometric q-series: coefficients, mirror maps, derivation operators."""

import math
import random
from fractions import Fraction

import pytest

from toricmirror.cohomology import assemble_orbifold_ring, stanley_reisner_ring
from toricmirror.lattice import ExtendedLattice, NefPartition
from toricmirror.series import (
    FormulaError,
    LogVectorField,
    QSeries,
    apply_log_field,
    build_series,
    build_twisted_series,
    check_homogeneity,
    derive_sector_series,
    extract_mirror_map,
    qdict_inverse,
    qdict_mul,
    series_equal,
)
from tests.test_lattice import p1_fan, p2_fan, p4_fan, wp112_fan


def setup_p2():
    fan = p2_fan()
    return fan, ExtendedLattice(fan), stanley_reisner_ring(fan)


def setup_p4():
    fan = p4_fan()
    return fan, ExtendedLattice(fan), stanley_reisner_ring(fan)


def setup_wp112():
    fan = wp112_fan()
    ext = ExtendedLattice(fan, grading=(1, 0, 0, 1))
    ring = assemble_orbifold_ring(
        fan, {(0, -1): {"kind": "point", "stabilizer_order": 2}})
    return fan, ext, ring


def binomial_inverse_cubed(order):
    """Oracle: coefficients of (1+x)^{-3} by exact binomial expansion."""
    out = []
    for j in range(order + 1):
        out.append(Fraction(math.comb(j + 2, 2) * (-1) ** j))
    return out


class TestBuildSeries:
    def test_p2_first_order_term(self):
        fan, ext, ring = setup_p2()
        I = build_series(ring, ext, fan.box_by_v((0, 0)), 2, z_window=(-10, 10))
        lam1 = (Fraction(1), Fraction(1), Fraction(1))
        # 1/(H+z)^3 = z^-3 (1 + H/z)^-3; oracle by binomial expansion
        oracle = binomial_inverse_cubed(2)
        H = ring.divisor_class(0)
        Hpows = [ring.unit(), H, ring.cup(H, H)]
        for k in range(3):
            got = I.coefficient(lam1, -3 - k)
            want = Hpows[k].scale(oracle[k])
            assert (got - want).prune().is_zero()
        # the scalar z^-3 coefficient of q^1 is exactly 1
        assert I.coefficient(lam1, -3).scalar_part() == 1

    def test_zero_bound(self):
        fan, ext, ring = setup_p2()
        I = build_series(ring, ext, fan.box_by_v((0, 0)), 0)
        assert list(I.terms) == [(Fraction(0),) * 3]
        assert str(I.leading_term()) == "1*1"

    def test_wp112_sector_leading_term(self):
        fan, ext, ring = setup_wp112()
        v = fan.box_by_v((0, -1))
        I = build_series(ring, ext, v, 1)
        lead = I.leading_term()
        assert (lead - ring.unit_sector((0, -1))).prune().is_zero()

    def test_homogeneity(self):
        fan, ext, ring = setup_wp112()
        for v in fan.box():
            I = build_series(ring, ext, v, 2, z_window=(-12, 12))
            assert check_homogeneity(I, ext.rho_hat())


class TestTwistedSeries:
    def test_quintic_scalar_coefficients(self):
        fan, ext, ring = setup_p4()
        part = NefPartition(fan, ext, [[0, 1, 2, 3, 4]])
        I = build_twisted_series(ring, ext, part, fan.box_by_v((0, 0, 0, 0)), 3,
                                 z_window=(-12, 12))
        mm = extract_mirror_map(I)
        got = {int(ext.grading(k)): c for k, c in mm.F.items()}
        # oracle: (5d)!/(d!)^5
        want = {d: Fraction(math.factorial(5 * d), math.factorial(d) ** 5)
                for d in range(4)}
        assert got == want

    def test_cubic_scalar_coefficients(self):
        fan, ext, ring = setup_p2()
        part = NefPartition(fan, ext, [[0, 1, 2]])
        I = build_twisted_series(ring, ext, part, fan.box_by_v((0, 0)), 3,
                                 z_window=(-12, 12))
        mm = extract_mirror_map(I)
        got = {int(ext.grading(k)): c for k, c in mm.F.items()}
        want = {d: Fraction(math.factorial(3 * d), math.factorial(d) ** 3)
                for d in range(4)}
        assert got == want

    def test_empty_partition_matches_untwisted(self):
        fan, ext, ring = setup_p2()
        part = NefPartition(fan, ext, [])
        A = build_series(ring, ext, fan.box_by_v((0, 0)), 3, z_window=(-11, 11))
        B = build_twisted_series(ring, ext, part, fan.box_by_v((0, 0)), 3,
                                 z_window=(-11, 11))
        assert series_equal(A, B)


class TestMirrorMap:
    def test_p2_is_pure_log(self):
        fan, ext, ring = setup_p2()
        I = build_series(ring, ext, fan.box_by_v((0, 0)), 6, z_window=(-25, 4))
        mm = extract_mirror_map(I)
        assert mm.sigma_series == {}
        assert list(mm.F.values()) == [Fraction(1)]

    def test_p1_is_pure_log(self):
        fan = p1_fan()
        ext = ExtendedLattice(fan)
        ring = stanley_reisner_ring(fan)
        mm = extract_mirror_map(build_series(ring, ext, fan.box_by_v((0,)), 6,
                                             z_window=(-16, 4)))
        assert mm.sigma_series == {}

    def test_quintic_first_correction(self):
        fan, ext, ring = setup_p4()
        part = NefPartition(fan, ext, [[0, 1, 2, 3, 4]])
        I = build_twisted_series(ring, ext, part, fan.box_by_v((0, 0, 0, 0)), 2,
                                 z_window=(-10, 10))
        mm = extract_mirror_map(I)
        lam1 = next(k for k in mm.sigma_series if ext.grading(k) == 1)
        coeff = mm.sigma_series[lam1]
        H = ring.divisor_class(0)
        # oracle: 120 * 5 * (1/2 + 1/3 + 1/4 + 1/5)
        harmonic = sum(Fraction(1, j) for j in range(2, 6))
        want = H.scale(Fraction(120 * 5) * harmonic)
        assert Fraction(120 * 5) * harmonic == 770
        assert (coeff - want).prune().is_zero()

    def test_malformed_series_rejected(self):
        fan, ext, ring = setup_p2()
        I = build_series(ring, ext, fan.box_by_v((0, 0)), 2)
        zero = (Fraction(0),) * 3
        I.terms[zero][0] = I.terms[zero][0].scale(2)  # break F(0) = 1
        with pytest.raises(FormulaError):
            extract_mirror_map(I)


class TestDerivation:
    def test_identity_shift(self):
        fan, ext, ring = setup_p2()
        I = build_series(ring, ext, fan.box_by_v((0, 0)), 3, z_window=(-12, 12))
        D = derive_sector_series(ring, ext, fan.box_by_v((0, 0)), I)
        assert series_equal(D, I)

    def test_wp112_sector_matches_direct_build(self):
        fan, ext, ring = setup_wp112()
        v = fan.box_by_v((0, -1))
        Iv = build_series(ring, ext, v, 3, z_window=(-12, 12))
        I0 = build_series(ring, ext, fan.box_by_v((0, 0)), 5, z_window=(-15, 12))
        D = derive_sector_series(ring, ext, v, I0)
        assert series_equal(D, Iv, 3)

    def test_prefactor_rule_at_origin(self):
        fan, ext, ring = setup_p2()
        I = build_series(ring, ext, fan.box_by_v((0, 0)), 0)
        field = LogVectorField((1, 0, 0), ring.divisor_class(0))
        out = apply_log_field(I, field)
        zero = (Fraction(0),) * 3
        got = out.coefficient(zero, 0)
        assert (got - ring.divisor_class(0)).prune().is_zero()
        assert out.coefficient(zero, 1).is_zero()


class TestSeriesArithmetic:
    def test_ring_laws_on_random_instances(self):
        fan, ext, ring = setup_p2()
        rng = random.Random(7)
        zero_box = fan.box_by_v((0, 0))

        def random_series():
            s = QSeries(ring, ext, zero_box, q_bound=Fraction(3),
                        z_window=(-4, 4))
            for _ in range(6):
                lam = tuple(Fraction(rng.randint(0, 2)) for _ in range(3))
                j = rng.randint(-3, 3)
                coeff = ring.divisor_class(0).scale(rng.randint(-5, 5))
                s.add_term(lam, j, coeff + ring.unit().scale(rng.randint(-2, 2)))
            return s.cleanup()

        for _ in range(10):
            a, b, c = random_series(), random_series(), random_series()
            assert series_equal((a + b) + c, a + (b + c))
            assert series_equal(a + b, b + a)
            assert series_equal((a + b).scale(3), a.scale(3) + b.scale(3))

    def test_qdict_inverse(self):
        fan, ext, ring = setup_p2()
        one = (Fraction(0),) * 3
        q1 = (Fraction(1),) * 3
        F = {one: Fraction(1), q1: Fraction(-120)}
        inv = qdict_inverse(F, ext, 3)
        prod = qdict_mul(F, inv, ext, 3)
        assert prod == {one: Fraction(1)}
