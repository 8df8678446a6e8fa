"""The acceptance gate: ten criteria, one test and one pass line each.

Every numeric claim here is checked against either an independent
finite-difference oracle or an algebraic identity evaluated at seeded
sample points; tolerances are fixed, not tuned per run.
"""

import dataclasses
import time

import numpy as np
import pytest

from cotlift.bundle_structures import (
    CotangentPoint,
    build_structure,
    covector_with_energy,
    j_squared_residual,
    nijenhuis_numeric,
)
from cotlift.coefficients import (
    COEFFICIENT_PRESETS,
    CoefficientFamily,
    e_f_expressions,
    lambda_case1,
    lambda_case2,
    lambda_prime_case1,
    preset_family,
    preset_window,
)
from cotlift.connection import (
    full_connection,
    koszul_connection_oracle,
    metricity_residual,
    torsion_residual,
)
from cotlift.curvature_ricci import (
    bianchi_residual,
    case_equations_residual,
    curvature_blocks,
    curvature_oracle,
    einstein_residual,
    full_curvature,
    holomorphic_sectional_curvature,
    ricci_blocks,
)
from cotlift.errors import DomainError
from cotlift.harness import SCENARIO_PRESETS, run_scenario
from cotlift.jets import FamilySpec
from cotlift.space_form import SpaceForm


def _ball(rng, n, radius=0.8):
    while True:
        x = rng.uniform(-radius, radius, n)
        if float(x @ x) <= radius * radius:
            return x


def _sample(sf, fam, name, rng, t=None):
    lo, hi = preset_window(name)
    if t is None:
        t = rng.uniform(max(lo, 0.02), hi)
    x = _ball(rng, sf.n)
    p = covector_with_energy(sf, x, t, rng)
    return x, p, t


_BASE_C = {"flat-sasaki": 0.0, "flat-twisted": 0.0, "sphere-case1": 1.0,
           "hyperbolic-case1": -1.0, "sphere-case2-const": 1.0}


def test_criterion_01_closure_and_almost_complex_identity():
    start = time.monotonic()
    rng = np.random.default_rng(101)
    worst_rel = worst_j = 0.0
    for name in COEFFICIENT_PRESETS:
        fam = preset_family(name)
        sf = SpaceForm(n=2, c=_BASE_C[name])
        lo, hi = preset_window(name)
        for t in rng.uniform(max(lo, 1e-3), hi, 50):
            cs = fam.at(float(t), admissible=False)
            rel_a = abs((cs.a1 * cs.a2 - 1.0 - cs.a3 * cs.a3).v0)
            rel_b = abs(((cs.a1 + 2 * t * cs.b1) * (cs.a2 + 2 * t * cs.b2)
                         - 1.0 - (cs.a3 + 2 * t * cs.b3) ** 2).v0)
            worst_rel = max(worst_rel, rel_a, rel_b)
        for _ in range(50):
            x, p, _ = _sample(sf, fam, name, rng)
            st = build_structure(sf, fam, x, p)
            worst_j = max(worst_j, j_squared_residual(st.J))
    elapsed = time.monotonic() - start
    assert worst_rel < 1e-10
    assert worst_j < 1e-10
    assert elapsed < 5.0
    print(f"criterion 01 closure + J^2: PASS (rel {worst_rel:.1e}, "
          f"J^2 {worst_j:.1e}, {elapsed:.1f}s)")


def test_criterion_02_integrability_of_the_lifted_structure():
    start = time.monotonic()
    rng = np.random.default_rng(202)
    worst = 0.0
    for name in ("sphere-case1", "hyperbolic-case1"):
        fam = preset_family(name)
        sf = SpaceForm(n=2, c=_BASE_C[name])
        for _ in range(25):
            x, p, _ = _sample(sf, fam, name, rng)
            worst = max(worst, nijenhuis_numeric(sf, fam, x, p))
    assert worst < 1e-5
    # the b1 perturbation must register: otherwise the check is vacuous
    fam = preset_family("sphere-case1").mutated(b1_offset=0.1)
    sf = SpaceForm(n=2, c=1.0)
    x, p, _ = _sample(sf, fam, "sphere-case1", rng, t=0.2)
    control = nijenhuis_numeric(sf, fam, x, p)
    elapsed = time.monotonic() - start
    assert control > 1e-2
    assert elapsed < 30.0
    print(f"criterion 02 integrability: PASS (N {worst:.1e}, "
          f"control {control:.1e}, {elapsed:.1f}s)")


def test_criterion_03_closed_form_metric_inverse():
    rng = np.random.default_rng(303)
    worst_id = worst_dense = 0.0
    for name in COEFFICIENT_PRESETS:     # flat-twisted carries d3 != 0
        fam = preset_family(name)
        sf = SpaceForm(n=2, c=_BASE_C[name])
        for _ in range(20):
            x, p, _ = _sample(sf, fam, name, rng)
            st = build_structure(sf, fam, x, p)
            worst_id = max(worst_id, np.abs(st.G @ st.H - np.eye(4)).max())
            worst_dense = max(worst_dense,
                              np.abs(st.H - np.linalg.inv(st.G)).max())
    assert worst_id < 1e-10
    assert worst_dense < 1e-9
    print(f"criterion 03 closed-form inverse: PASS (GH-I {worst_id:.1e}, "
          f"vs dense {worst_dense:.1e})")


def test_criterion_04_connection_blocks_against_koszul_oracle():
    rng = np.random.default_rng(404)
    worst_conn = worst_met = worst_tor = 0.0
    for name in COEFFICIENT_PRESETS:
        fam = preset_family(name)
        sf = SpaceForm(n=2, c=_BASE_C[name])
        for _ in range(5):
            x, p, _ = _sample(sf, fam, name, rng)
            pt = CotangentPoint(sf, x, p)
            C = full_connection(pt, fam.at(pt.t))
            O = koszul_connection_oracle(sf, fam, x, p)
            worst_conn = max(worst_conn, np.abs(C - O).max())
            worst_met = max(worst_met, metricity_residual(sf, fam, x, p))
            worst_tor = max(worst_tor, torsion_residual(sf, fam, x, p))
    assert worst_conn < 1e-5
    assert worst_met < 1e-5
    assert worst_tor < 1e-5
    # sign mutations must be loud, on both a curved and a flat base
    fam = preset_family("sphere-case1")
    sf = SpaceForm(n=2, c=1.0)
    x, p, _ = _sample(sf, fam, "sphere-case1", rng, t=0.2)
    flip_curved = min(metricity_residual(sf, fam, x, p, flip_block="S"),
                      torsion_residual(sf, fam, x, p, flip_block="S"))
    fam = preset_family("flat-twisted")
    sf = SpaceForm(n=2, c=0.0)
    x, p, _ = _sample(sf, fam, "flat-twisted", rng, t=0.3)
    flip_flat = metricity_residual(sf, fam, x, p, flip_block="Q")
    assert flip_curved > 1e-2
    assert flip_flat > 1e-2
    print(f"criterion 04 connection: PASS (oracle {worst_conn:.1e}, "
          f"metric {worst_met:.1e}, torsion {worst_tor:.1e}, "
          f"flips {flip_curved:.1e}/{flip_flat:.1e})")


def test_criterion_05_curvature_blocks_against_nested_fd_oracle():
    rng = np.random.default_rng(505)
    worst_dev = worst_bianchi = worst_sym = 0.0
    for name in COEFFICIENT_PRESETS:
        fam = preset_family(name)
        sf = SpaceForm(n=2, c=_BASE_C[name])
        for _ in range(10):
            x, p, _ = _sample(sf, fam, name, rng)
            pt = CotangentPoint(sf, x, p)
            cb = curvature_blocks(pt, fam.at(pt.t))
            worst_dev = max(worst_dev,
                            cb.max_deviation(curvature_oracle(sf, fam, x, p)))
            worst_bianchi = max(worst_bianchi,
                                bianchi_residual(full_curvature(2, cb)))
            ric = ricci_blocks(cb).full()
            worst_sym = max(worst_sym, np.abs(ric - ric.T).max())
    assert worst_dev < 1e-4
    assert worst_bianchi < 1e-4
    assert worst_sym < 1e-8
    print(f"criterion 05 curvature: PASS (oracle {worst_dev:.1e}, "
          f"Bianchi {worst_bianchi:.1e}, Ricci sym {worst_sym:.1e})")


def test_criterion_06_einstein_property_of_the_case1_sphere_lift():
    start = time.monotonic()
    rng = np.random.default_rng(606)
    fam = preset_family("sphere-case1")          # n = 2, c = 1, rho = 6
    sf = SpaceForm(n=2, c=1.0)
    worst = 0.0
    for _ in range(200):
        t = rng.uniform(0.05, 0.4)
        x = _ball(rng, 2)
        p = covector_with_energy(sf, x, t, rng)
        pt = CotangentPoint(sf, x, p)
        worst = max(worst, einstein_residual(pt, fam.at(pt.t), 6.0).max_residual)
    assert worst < 1e-4
    x = _ball(rng, 2)
    p = covector_with_energy(sf, x, 0.2, rng)
    pt = CotangentPoint(sf, x, p)
    scaled = fam.mutated(lam_scale=1.1)
    control = einstein_residual(pt, scaled.at(pt.t), 6.0).max_residual
    elapsed = time.monotonic() - start
    assert control > 1e-2
    assert elapsed < 60.0
    print(f"criterion 06 Einstein case 1: PASS (|Ric-6G| {worst:.1e}, "
          f"control {control:.1e}, {elapsed:.1f}s)")


def test_criterion_07_constant_holomorphic_sectional_curvature():
    rng = np.random.default_rng(707)
    fam = preset_family("sphere-case1")
    sf = SpaceForm(n=2, c=1.0)
    worst = 0.0
    for _ in range(100):
        x, p, _ = _sample(sf, fam, "sphere-case1", rng)
        pt = CotangentPoint(sf, x, p)
        k = holomorphic_sectional_curvature(pt, fam.at(pt.t),
                                            rng.standard_normal(4))
        worst = max(worst, abs(k - 4.0))
    assert worst < 1e-3
    print(f"criterion 07 holomorphic curvature: PASS (|k-4| {worst:.1e})")


def test_criterion_08_einstein_property_of_the_case2_lift():
    rng = np.random.default_rng(808)
    fam = preset_family("sphere-case2-const")    # lambda = n/rho, rho = 2
    sf = SpaceForm(n=2, c=1.0)
    worst_eq = worst_ric = 0.0
    for t in np.linspace(0.05, 0.45, 40):
        cs = fam.at(float(t))
        (_, _), (raw2, scale2) = case_equations_residual(cs)
        worst_eq = max(worst_eq, abs(raw2) / scale2)
    for _ in range(50):
        t = rng.uniform(0.05, 0.45)
        x = _ball(rng, 2)
        p = covector_with_energy(sf, x, t, rng)
        pt = CotangentPoint(sf, x, p)
        worst_ric = max(worst_ric,
                        einstein_residual(pt, fam.at(pt.t), 2.0).max_residual)
    assert worst_eq < 1e-9
    assert worst_ric < 1e-4
    with pytest.raises(DomainError):
        lambda_case2(0.0, FamilySpec.const(1.0).eval(0.0),
                     FamilySpec.const(0.0).eval(0.0), 1.0, 2, 2.0, "-")
    print(f"criterion 08 Einstein case 2: PASS (quadratic {worst_eq:.1e}, "
          f"|Ric-2G| {worst_ric:.1e}, t=0 rejected)")


def test_criterion_09_lambda_derivative_and_sign_polynomials():
    # the closed-form lambda' must agree with the jet derivative of lambda
    worst_rel = 0.0
    cases = [("1", "0", 1.0, 6.0), ("1", "0", -1.0, -6.0),
             ("(poly 1 1)", "(/ t 2)", 1.0, 6.0)]
    for a1s, a3s, c, rho in cases:
        a1f, a3f = FamilySpec.parse(a1s), FamilySpec.parse(a3s)
        for t in np.linspace(0.01, 0.35, 100):
            a1, a3 = a1f.eval(float(t)), a3f.eval(float(t))
            lam = lambda_case1(float(t), a1, a3, c, 2, rho)
            lp = lambda_prime_case1(a1, a3, lam.v0, c, float(t))
            worst_rel = max(worst_rel,
                            abs(lam.v1 - lp) / max(1.0, abs(lam.v1)))
    assert worst_rel < 1e-9
    # E is the stated positive quadratic form; Q stays positive in-window
    rng = np.random.default_rng(909)
    worst_dec, min_e = 0.0, np.inf
    for _ in range(200):
        t = float(rng.uniform(0.0, 1.0))
        a1 = FamilySpec.poly(*rng.normal(0, 1, 3)).eval(t)
        a3 = FamilySpec.poly(*rng.normal(0, 1, 3)).eval(t)
        rec, e_dec = e_f_expressions(t, a1, a3, float(rng.normal()))
        scale = max(1.0, abs(rec.E))
        worst_dec = max(worst_dec, abs(rec.E - e_dec) / scale)
        min_e = min(min_e, rec.E / scale)
    assert worst_dec < 1e-12
    assert min_e > -1e-12
    min_q = np.inf
    samples = [(name, preset_family(name)) for name in COEFFICIENT_PRESETS]
    samples.append(("tilted-sphere", CoefficientFamily(
        a1=FamilySpec.const(1.0), a3=FamilySpec.parse("t"), c=1.0, n=2,
        lam=FamilySpec.const(1.0))))
    for name, fam in samples:
        lo, hi = preset_window(name) if name in COEFFICIENT_PRESETS else (0.05, 0.35)
        for t in np.linspace(max(lo, 0.02), hi, 25):
            rec, _ = e_f_expressions(float(t), fam.a1.eval(float(t)),
                                     fam.a3.eval(float(t)), fam.c)
            min_q = min(min_q, rec.Q)
    assert min_q > 0.0
    print(f"criterion 09 lambda'/E/Q: PASS (rel {worst_rel:.1e}, "
          f"E dec {worst_dec:.1e}, min Q {min_q:.1e})")


def test_criterion_10_reports_are_deterministic():
    for name in ("sphere-case1", "flat-twisted"):
        s = dataclasses.replace(SCENARIO_PRESETS[name],
                                t_grid=2, points_per_t=2, seed=31)
        first = run_scenario(s).json_bytes()
        assert run_scenario(s).json_bytes() == first
        reseeded = dataclasses.replace(s, seed=32)
        assert run_scenario(reseeded).json_bytes() != first
    print("criterion 10 determinism: PASS (byte-identical reports per seed)")
