"""Gamma classes, Euler pairings, quantum periods, Galois symmetry."""

import cmath
import math
from fractions import Fraction

import mpmath
import pytest

from toricmirror.cohomology import ConfigurationError, stanley_reisner_ring
from toricmirror.gamma import (
    KClass,
    a_period,
    central_charge,
    chern_character,
    euler_chi,
    euler_chi_hypersurface,
    euler_pairing_psi,
    galois_phases,
    galois_transform,
    gamma_class,
    gamma_class_tangent,
    gamma_env_for,
    gamma_todd_residual,
    k_framing,
    line_bundle_age,
    monodromy_residual,
    todd_coefficients,
    z_grading_action,
)
from toricmirror.lattice import ExtendedLattice
from toricmirror.series import build_series
from tests.test_lattice import p1_fan, p1xp1_fan, p2_fan, wp112_fan
from tests.test_cohomology import orbifold_wp112


def cc_setup(fan_fn):
    fan = fan_fn()
    ring = stanley_reisner_ring(fan, scalar="CC")
    return fan, ExtendedLattice(fan), ring, gamma_env_for(ring, fan)


class TestGammaEnv:
    def test_reflection_identity(self):
        fan = wp112_fan()
        ring = stanley_reisner_ring(fan, scalar="CC")
        # register a nontrivial age by hand
        from toricmirror.gamma import GammaEnv
        env = GammaEnv([Fraction(1, 2), Fraction(1, 3)], depth=5)
        ok, worst = env.reflection_check()
        assert ok and worst < 1e-12

    def test_todd_coefficients(self):
        assert todd_coefficients(4) == [
            Fraction(1), Fraction(1, 2), Fraction(1, 12), Fraction(0),
            Fraction(-1, 720)]


class TestGammaClass:
    def test_p1_tangent(self):
        fan, ext, ring, env = cc_setup(p1_fan)
        G = gamma_class_tangent(ring, env)
        coords = ring.coords(G)
        assert abs(coords[0] - 1) < 1e-14
        assert abs(coords[1] + 2 * env.euler_gamma) < 1e-14

    def test_rank_zero_bundle(self):
        fan, ext, ring, env = cc_setup(p2_fan)
        G = gamma_class(ring, env, KClass(()))
        assert abs(G.scalar_part() - 1) < 1e-14
        assert (G - ring.unit()).prune().max_abs() < 1e-14

    def test_p2_quadratic_coefficient_against_finite_difference(self):
        fan, ext, ring, env = cc_setup(p2_fan)
        G = gamma_class_tangent(ring, env)
        got = ring.coords(G)[2]
        # oracle: Taylor coefficient of Gamma(1+x)^3 at x^2
        with mpmath.workdps(40):
            want = complex(mpmath.diff(lambda x: mpmath.gamma(1 + x) ** 3,
                                       0, 2)) / 2
        assert abs(got - want) < 1e-12

    def test_inverse_summand(self):
        fan, ext, ring, env = cc_setup(p2_fan)
        L = KClass.line((1, 0, 0))
        prod = ring.sector_mul(gamma_class(ring, env, L),
                               gamma_class(ring, env, KClass(()) - L))
        assert (prod - ring.unit()).prune().max_abs() < 1e-12


class TestChernCharacter:
    def test_structure_sheaf(self):
        fan, ext, ring, env = cc_setup(p2_fan)
        psi = k_framing(ring, env, KClass.structure_sheaf(3))
        G = gamma_class_tangent(ring, env)
        assert (psi - G).prune().max_abs() < 1e-13

    def test_p1_line_bundle(self):
        fan, ext, ring, env = cc_setup(p1_fan)
        t = chern_character(ring, KClass.line((1, 0)))
        coords = ring.coords(t)
        assert abs(coords[0] - 1) < 1e-14 and abs(coords[1] - 1) < 1e-14

    def test_wp112_sector_phase(self):
        fan, R = orbifold_wp112()
        ring = stanley_reisner_ring(fan, scalar="CC")  # for env sizing only
        from toricmirror.cohomology import assemble_orbifold_ring
        ring = assemble_orbifold_ring(
            fan, {(0, -1): {"kind": "point", "stabilizer_order": 2}},
            scalar="CC")
        env = gamma_env_for(ring, fan, classes=[KClass.line((1, 0, 0))])
        t = chern_character(ring, KClass.line((1, 0, 0)))
        comp = t.component((0, -1))
        assert abs(comp[0] - cmath.exp(1j * math.pi)) < 1e-14  # factor -1

    def test_age_formula(self):
        fan = wp112_fan()
        v = fan.box_by_v((0, -1))
        assert line_bundle_age(fan, v, (1, 0, 0)) == Fraction(1, 2)
        assert line_bundle_age(fan, v, (0, 1, 0)) == 0


class TestEulerChi:
    def test_p2_equals_lattice_count(self):
        fan = p2_fan()
        ring = stanley_reisner_ring(fan)
        O = KClass.structure_sheaf(3)
        for k in range(0, 5):
            want = (k + 1) * (k + 2) // 2  # lattice points of k * triangle
            got = euler_chi(ring, O, KClass.line((k, 0, 0)))
            assert got == want

    def test_self_chi_is_one(self):
        fan = p2_fan()
        ring = stanley_reisner_ring(fan)
        E = KClass.line((2, 0, 0))
        assert euler_chi(ring, E, E) == 1

    def test_p1_rr(self):
        fan = p1_fan()
        ring = stanley_reisner_ring(fan)
        for a in range(-2, 3):
            for b in range(a, 4):
                got = euler_chi(ring, KClass.line((a, 0)), KClass.line((b, 0)))
                assert got == b - a + 1

    def test_orbifold_rejected(self):
        fan, ring = orbifold_wp112()
        with pytest.raises(ConfigurationError):
            euler_chi(ring, KClass.structure_sheaf(3), KClass.structure_sheaf(3))


class TestGammaToddIdentity:
    @pytest.mark.parametrize("fan_fn", [p1_fan, p2_fan, p1xp1_fan])
    def test_residual_below_tolerance(self, fan_fn):
        fan, ext, ring, env = cc_setup(fan_fn)
        assert gamma_todd_residual(ring, env) < 1e-10


class TestPsiPairing:
    def test_matches_chi_on_p2_grid(self):
        fan, ext, ring, env = cc_setup(p2_fan)
        ring_qq = stanley_reisner_ring(fan)
        for a in range(-3, 4):
            for b in range(-3, 4):
                Ea = KClass.line((a, 0, 0))
                Eb = KClass.line((b, 0, 0))
                got = euler_pairing_psi(ring, env, Ea, Eb)
                want = euler_chi(ring_qq, Ea, Eb)
                assert abs(got - complex(want)) < 1e-8


class TestAPeriod:
    def test_p1_constant_term(self):
        fan, ext, ring, env = cc_setup(p1_fan)
        I = build_series(ring, ext, fan.box_by_v((0,)), 0)
        P = a_period(ring, env, I, KClass.structure_sheaf(2))
        zero = (Fraction(0),) * 2
        poly = P.terms[(zero, Fraction(0))]
        # hand-derived: 2 log z - 2 gamma - log q
        vals = {((0,), 0): -2 * env.euler_gamma, ((1,), 0): -1.0, ((0,), 1): 2.0}
        assert set(poly.terms) == set(vals)
        for key, want in vals.items():
            assert abs(poly.terms[key] - want) < 1e-14

    def test_p1_matches_bessel(self):
        fan, ext, ring, env = cc_setup(p1_fan)
        I = build_series(ring, ext, fan.box_by_v((0,)), 10, z_window=(-26, 4))
        P = a_period(ring, env, I, KClass.structure_sheaf(2))
        for q in (0.01, 0.04):
            got = P.evaluate([q], 1.0)
            want = 2 * float(mpmath.besselk(0, 2 * math.sqrt(q)))
            assert abs(got - want) / abs(want) < 1e-6

    def test_central_charge_scale(self):
        fan, ext, ring, env = cc_setup(p1_fan)
        I = build_series(ring, ext, fan.box_by_v((0,)), 2)
        P = a_period(ring, env, I, KClass.structure_sheaf(2))
        Z = central_charge(ring, env, I, KClass.structure_sheaf(2))
        q = [0.02]
        assert abs(Z.evaluate(q, 1.0) * (2j * math.pi) - P.evaluate(q, 1.0)) \
            < 1e-12

    def test_elliptic_curve_lattice(self):
        # chi on a cubic hypersurface equals the skew pairing of the
        # cycle classes A + 3iB
        fan = p2_fan()
        ring = stanley_reisner_ring(fan)
        cubic = (3, 0, 0)  # anticanonical divisor vector reduced to D1-basis
        bundles = {i: KClass.line((i, 0, 0)) for i in (-1, 0, 1)}
        for i in (-1, 0, 1):
            for j in (-1, 0, 1):
                got = euler_chi_hypersurface(ring, bundles[i], bundles[j],
                                             (1, 1, 1))
                # C_i . C_j for C_i = A + 3 i B with A.B = 1
                want = 3 * j - 3 * i
                assert got == want


class TestZGradingAction:
    def test_p2_hyperplane(self):
        fan, ext, ring, env = cc_setup(p2_fan)
        H = ring.divisor_class(0)
        pieces = z_grading_action(ring, H)
        # z^{-1} H, then 3 H^2 log z at z^{-2}
        assert (Fraction(-1), 0, True) in [
            (z, k, abs(p.component(ring.zero_key)[1] - 1) < 1e-14)
            for z, k, p in pieces]
        lz1 = [(z, p) for z, k, p in pieces if k == 1]
        assert len(lz1) == 1
        z, p = lz1[0]
        assert z == Fraction(-2)
        assert abs(p.component(ring.zero_key)[2] - 3) < 1e-14


class TestGalois:
    def test_zero_class_is_identity(self):
        fan, ring = orbifold_wp112()
        from toricmirror.cohomology import assemble_orbifold_ring
        ring = assemble_orbifold_ring(
            fan, {(0, -1): {"kind": "point", "stabilizer_order": 2}},
            scalar="CC")
        for x in ring.flat_basis():
            moved = galois_transform(ring, x, (0, 0, 0))
            assert (moved - x).prune().max_abs() < 1e-15

    def test_sector_scaling_minus_one(self):
        fan, _ = orbifold_wp112()
        phases = galois_phases(fan, (1, 0, 0))
        assert phases[(0, -1)] == Fraction(1, 2)  # factor e^{pi i} = -1

    def test_composition_exact(self):
        fan, _ = orbifold_wp112()
        for xi1 in ((1, 0, 0), (0, 1, 0), (2, -1, 3)):
            for xi2 in ((1, 1, 1), (-1, 0, 2)):
                p1 = galois_phases(fan, xi1)
                p2 = galois_phases(fan, xi2)
                p12 = galois_phases(fan, tuple(a + b for a, b in zip(xi1, xi2)))
                for v in p12:
                    assert (p1[v] + p2[v]) % 1 == p12[v]

    def test_monodromy_residual_p2(self):
        fan, ext, ring, env = cc_setup(p2_fan)
        I = build_series(ring, ext, fan.box_by_v((0, 0)), 5, z_window=(-20, 4))
        res = monodromy_residual(ring, env, I, KClass.structure_sheaf(3),
                                 (1, 0, 0))
        assert res < 1e-9
