"""Fan combinatorics: box elements, reduction, degree enumeration, volumes."""

import math
from fractions import Fraction
from itertools import combinations, product

import pytest

from toricmirror.lattice import (
    DomainError,
    ExtendedLattice,
    InvalidFanError,
    NefPartition,
    NefPartitionError,
    StackyFan,
    fan_normalized_volume,
    reflexivity,
)
from toricmirror.linalg import (
    dot,
    invariant_factors,
    normalized_volume,
    solve_linear,
    transpose,
)


def p2_fan():
    return StackyFan(2, [(1, 0), (0, 1), (-1, -1)], [{0, 1}, {1, 2}, {0, 2}])


def p1_fan():
    return StackyFan(1, [(1,), (-1,)], [{0}, {1}])


def p1xp1_fan():
    return StackyFan(2, [(1, 0), (0, 1), (-1, 0), (0, -1)],
                     [{0, 1}, {1, 2}, {2, 3}, {3, 0}])


def p4_fan():
    rays = [(1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1),
            (-1, -1, -1, -1)]
    return StackyFan(4, rays, [set(c) for c in combinations(range(5), 4)])


def wp112_fan():
    return StackyFan(2, [(1, 0), (0, 1), (-1, -2)], [{0, 1}, {1, 2}, {0, 2}],
                     extended=[(0, -1)])


def brute_force_box(fan):
    """Oracle: lattice points of the half-open cone parallelepipeds, found
    by solving c = B^{-1} v over a bounding box of candidate v."""
    out = {tuple(0 for _ in range(fan.n))}
    for cone in fan.max_cones:
        idx = sorted(cone)
        lo = [min(0, *(fan.rays[i][a] for i in idx)) * len(idx) for a in range(fan.n)]
        hi = [max(0, *(fan.rays[i][a] for i in idx)) * len(idx) for a in range(fan.n)]
        cols = transpose([list(fan.rays[i]) for i in idx])
        for v in product(*(range(l, h + 1) for l, h in zip(lo, hi))):
            c = solve_linear(cols, list(v))
            if c is not None and all(0 <= x < 1 for x in c):
                out.add(tuple(v))
    return out


class TestBox:
    def test_p2_trivial(self):
        assert [e.v for e in p2_fan().box()] == [(0, 0)]

    def test_quintic_ambient_trivial(self):
        assert [e.v for e in p4_fan().box()] == [(0, 0, 0, 0)]

    def test_wp112_box_matches_brute_force(self):
        fan = wp112_fan()
        got = {e.v for e in fan.box()}
        assert got == brute_force_box(fan)
        elt = fan.box_by_v((0, -1))
        assert elt.age == 1
        assert elt.cone == frozenset({0, 2})
        assert elt.coeffs == (Fraction(1, 2), 0, Fraction(1, 2))

    def test_non_simplicial_rejected(self):
        with pytest.raises(InvalidFanError):
            StackyFan(2, [(1, 0), (2, 0), (-1, -1)], [{0, 1}, {1, 2}, {0, 2}])


class TestReduce:
    def test_integral_reduces_to_zero(self):
        fan = p2_fan()
        assert fan.reduce_degree([2, 0, 1]).v == (0, 0)
        assert fan.reduce_degree([-1, -1, -1]).v == (0, 0)

    def test_half_integral(self):
        fan = wp112_fan()
        got = fan.reduce_degree([Fraction(-1, 2), 0, Fraction(-1, 2), 1])
        assert got.v == (0, -1)

    def test_bad_support_raises(self):
        fan = p1xp1_fan()
        # rays 0 and 2 are opposite, not a cone
        with pytest.raises(DomainError):
            fan.reduce_degree([Fraction(1, 2), 0, Fraction(1, 2), 0])


class TestEnumerate:
    def test_p2_diagonal(self):
        fan = p2_fan()
        ext = ExtendedLattice(fan)
        degs = ext.enumerate_degrees(fan.box_by_v((0, 0)), 3)
        assert [fd.d for fd in degs] == [
            tuple(Fraction(k) for _ in range(3)) for k in range(4)]

    def test_zero_bound_contains_origin(self):
        for fan in (p2_fan(), p1_fan(), wp112_fan()):
            ext = ExtendedLattice(fan)
            degs = ext.enumerate_degrees(fan.box_by_v(tuple([0] * fan.n)), 0)
            assert any(all(x == 0 for x in fd.d) for fd in degs)

    def test_wp112_includes_extended_class(self):
        fan = wp112_fan()
        # scenario grading D1 + D4 makes the delta_4 class appear at level 1/2
        ext = ExtendedLattice(fan, grading=(1, 0, 0, 1))
        degs = ext.enumerate_degrees(fan.box_by_v((0, 0)), 1)
        target = (Fraction(-1, 2), Fraction(0), Fraction(-1, 2), Fraction(1))
        assert any(fd.d == target for fd in degs)

    def test_reduction_lands_in_box(self):
        fan = wp112_fan()
        ext = ExtendedLattice(fan)
        box_vs = {e.v for e in fan.box()}
        seen = set()
        for fd in ext.enumerate_degrees(fan.box_by_v((0, 0)), 4):
            assert fd.box_target.v in box_vs
            seen.add(fd.box_target.v)
        assert seen == box_vs  # surjective onto the box at this bound

    def test_age_pairing_integrality(self):
        fan = wp112_fan()
        for e in fan.box():
            inv = fan.reduce_degree([-c for c in e.coeffs] + [0] * fan.s)
            total = e.age + inv.age
            assert total.denominator == 1 and total >= 0

    def test_anticanonical_nonnegative_on_mori(self):
        for fan in (p2_fan(), p1xp1_fan(), wp112_fan(), p4_fan()):
            ext = ExtendedLattice(fan)
            rho_hat = ext.rho_hat()
            for fd in ext.enumerate_degrees(fan.box_by_v(tuple([0] * fan.n)), 2):
                assert dot(rho_hat, fd.mori_class) >= 0

    def test_smith_factors_all_one(self):
        for fan in (p2_fan(), p1xp1_fan(), wp112_fan(), p4_fan()):
            mat = transpose([list(r) for r in fan.all_rays])
            assert invariant_factors(mat) == [1] * fan.n


class TestExtendedLattice:
    def test_delta_pairing_kronecker(self):
        ext = ExtendedLattice(wp112_fan())
        assert ext.pairing_matrix_check()

    def test_nef_basis_is_extended_nef(self):
        for fan in (p2_fan(), p1xp1_fan(), wp112_fan(), p4_fan()):
            ext = ExtendedLattice(fan)
            for p in ext.nef_basis():
                assert ext.is_extended_nef(p)

    def test_grading_strictly_positive(self):
        for fan in (p2_fan(), wp112_fan()):
            ext = ExtendedLattice(fan)
            w = ext.grading_vector()
            for g in ext.mori_generators():
                assert dot(w, g) > 0


class TestReflexivity:
    def test_p2(self):
        ok, dual = reflexivity(p2_fan())
        assert ok
        assert sorted(dual) == [(-1, -1), (-1, 2), (2, -1)]

    def test_doubled_triangle_not_reflexive(self):
        fan = StackyFan(2, [(2, 0), (0, 2), (-2, -2)],
                        [{0, 1}, {1, 2}, {0, 2}], validate=False)
        ok, _ = reflexivity(fan)
        assert not ok

    def test_p4(self):
        assert reflexivity(p4_fan())[0]

    def test_wp112(self):
        assert reflexivity(wp112_fan())[0]


class TestVolume:
    def test_unit_simplex(self):
        assert normalized_volume([(0, 0), (1, 0), (0, 1)], 2) == 1

    def test_p2(self):
        assert fan_normalized_volume(p2_fan()) == 3

    def test_p4(self):
        assert fan_normalized_volume(p4_fan()) == 5

    def test_p1xp1(self):
        assert fan_normalized_volume(p1xp1_fan()) == 4

    def test_square(self):
        assert normalized_volume([(0, 0), (2, 0), (0, 3), (2, 3)], 2) == 12


class TestNefPartition:
    def test_cubic(self):
        fan = p2_fan()
        ext = ExtendedLattice(fan)
        np3 = NefPartition(fan, ext, [[0, 1, 2]])
        assert np3.divisor_vectors() == [(1, 1, 1)]
        assert np3.lifts() == [(1, 1, 1)]

    def test_non_nef_rejected(self):
        fan = p1xp1_fan()
        ext = ExtendedLattice(fan)
        # a single ray's divisor class on P1xP1 is nef, but {0, 2} minus
        # nothing... use an actually non-convex value pattern: impossible
        # via index sets here, so check a fractional-box violation instead
        wfan = wp112_fan()
        wext = ExtendedLattice(wfan)
        with pytest.raises(NefPartitionError):
            NefPartition(wfan, wext, [[0]])  # phi(b4) = 1/2, not in {0,1}

    def test_quintic(self):
        fan = p4_fan()
        ext = ExtendedLattice(fan)
        np5 = NefPartition(fan, ext, [[0, 1, 2, 3, 4]])
        assert np5.lifts() == [(1, 1, 1, 1, 1)]
        assert np5.rho_Y() == tuple([Fraction(0)] * 5)
