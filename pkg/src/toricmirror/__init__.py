"""toricmirror: exact and numeric checks for toric mirror-symmetry periods.

The package computes, over exact rationals wherever the mathematics is
rational and in complex doubles where Gamma values enter:

* stacky-fan combinatorics (box elements, ages, degree cones, reflexivity),
* graded cohomology models with orbifold pairing,
* truncated hypergeometric q-series, mirror maps and their twists,
* Gamma-decorated integral structures, Euler pairings and quantum periods,
* loop-matrix factorization giving fundamental solutions and products,
* Landau-Ginzburg residue series, oscillatory integrals and the
  multi-generator hypergeometric system.

Scenario files (TOML) describe the geometry; the ``toricmirror`` command
turns them into machine-readable pass/fail reports.
"""

from .lattice import (
    BoxElement,
    ExtendedLattice,
    FractionalDegree,
    NefPartition,
    StackyFan,
    fan_normalized_volume,
    reflexivity,
)
from .cohomology import (
    GradedRing,
    RingElement,
    assemble_orbifold_ring,
    stanley_reisner_ring,
)
from .series import (
    LogVectorField,
    MirrorMap,
    QSeries,
    apply_log_field,
    build_series,
    build_twisted_series,
    check_homogeneity,
    derive_sector_series,
    extract_mirror_map,
    series_equal,
)
from .gamma import (
    GammaEnv,
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
    k_framing_twisted,
    monodromy_residual,
    todd_class,
    z_grading_action,
)
from .birkhoff import (
    FundamentalSolution,
    LoopMatrix,
    birkhoff_factorize,
    flatness_residual,
    fundamental_and_upsilon,
    quantum_products,
    unitarity_residual,
)
from .bside import (
    AlphaAssignment,
    GkzSystem,
    LaurentPoly,
    build_gkz,
    build_superpotentials,
    combined_potential,
    compute_period_family,
    critical_values,
    gkz_check,
    multinomial_series,
    oscillatory_integral,
    residue_period_series,
)
from .scenario import BUNDLED, Scenario, bundled_scenario, load_scenario, save_scenario

__version__ = "0.1.0"
