"""Bundle-level identities: J^2 = -I, closed-form inverse, Hermitian
compatibility, antisymmetry of the fundamental form, vanishing Nijenhuis
tensor and closed fundamental form (both numerically), plus the controls
that prove each check can fail."""

import numpy as np
import pytest
from dataclasses import replace

from cotlift.bundle_structures import (
    BlockMatrix,
    CotangentPoint,
    assemble_G,
    assemble_J,
    build_structure,
    chart_bilinear,
    chart_endomorphism,
    covector_with_energy,
    domega_numeric,
    frame_matrix,
    frame_matrix_inverse,
    fundamental_form,
    hermitian_residual,
    invert_G_closed_form,
    j_squared_residual,
    nijenhuis_numeric,
)
from cotlift.coefficients import preset_family, preset_window
from cotlift.jets import jet_const
from cotlift.space_form import SpaceForm

PRESETS = ("flat-sasaki", "flat-twisted", "sphere-case1",
           "hyperbolic-case1", "sphere-case2-const")


def _sample(fam, name, rng, n=2):
    sf = SpaceForm(n=n, c=fam.c)
    lo, hi = preset_window(name)
    t = rng.uniform(max(lo, 0.02), hi)
    x = rng.uniform(-0.5, 0.5, n)
    p = covector_with_energy(sf, x, t, rng)
    return sf, x, p


def test_point_cache_values():
    sf = SpaceForm(n=2, c=1.0)
    pt = CotangentPoint(sf, [0.3, -0.1], [0.5, 0.2])
    assert np.allclose(pt.g0, pt.gi @ pt.p)
    assert np.isclose(pt.t, 0.5 * pt.p @ pt.gi @ pt.p)
    assert np.allclose(pt.gam0, np.einsum('k,kih->ih', pt.p, pt.gam))
    assert np.allclose(pt.z, [0.3, -0.1, 0.5, 0.2])
    with pytest.raises(ValueError):
        CotangentPoint(sf, [0.3], [0.5, 0.2])


def test_block_matrix_round_trip():
    rng = np.random.default_rng(3)
    M = rng.standard_normal((6, 6))
    B = BlockMatrix.from_full(M)
    assert np.array_equal(B.full(), M)
    assert B.hh.shape == (3, 3)


def test_frame_matrices_are_inverse():
    sf = SpaceForm(n=2, c=-1.0)
    pt = CotangentPoint(sf, [0.4, 0.2], [-0.3, 0.6])
    F, Fi = frame_matrix(pt), frame_matrix_inverse(pt)
    assert np.allclose(F @ Fi, np.eye(4), atol=1e-15)


def test_j_squares_to_minus_identity():
    rng = np.random.default_rng(10)
    for name in PRESETS:
        fam = preset_family(name)
        for _ in range(10):
            sf, x, p = _sample(fam, name, rng)
            st = build_structure(sf, fam, x, p)
            assert j_squared_residual(st.J) < 1e-10, name
            # the chart-side endomorphism squares the same way
            pt = CotangentPoint(sf, x, p)
            Jc = chart_endomorphism(pt, assemble_J(pt, fam.at(pt.t)))
            assert np.abs(Jc @ Jc + np.eye(4)).max() < 1e-10, name


def test_j_squared_detects_broken_closure():
    rng = np.random.default_rng(11)
    fam = preset_family("sphere-case1")
    sf, x, p = _sample(fam, "sphere-case1", rng)
    pt = CotangentPoint(sf, x, p)
    cs = replace(fam.at(pt.t), a2=fam.at(pt.t).a2 + jet_const(0.1))
    assert j_squared_residual(assemble_J(pt, cs).full()) > 1e-2


def test_closed_form_inverse():
    rng = np.random.default_rng(12)
    for name in PRESETS:
        fam = preset_family(name)
        for _ in range(5):
            sf, x, p = _sample(fam, name, rng)
            st = build_structure(sf, fam, x, p)
            assert np.abs(st.G @ st.H - np.eye(4)).max() < 1e-10, name
            assert np.abs(st.H - np.linalg.inv(st.G)).max() < 1e-9, name


def test_inverse_exercises_rank_one_verticals():
    # flat-twisted has d3 = 1 and nonzero f3, so the long-quotient scalars
    # actually participate
    fam = preset_family("flat-twisted")
    cs = fam.at(0.3)
    assert abs(cs.f3.v0) > 0.5
    sf = SpaceForm(n=2, c=0.0)
    rng = np.random.default_rng(13)
    x = rng.uniform(-0.5, 0.5, 2)
    p = covector_with_energy(sf, x, 0.3, rng)
    st = build_structure(sf, fam, x, p)
    assert np.abs(st.G @ st.H - np.eye(4)).max() < 1e-12


def test_fundamental_form_antisymmetric():
    rng = np.random.default_rng(14)
    for name in PRESETS:
        fam = preset_family(name)
        sf, x, p = _sample(fam, name, rng)
        st = build_structure(sf, fam, x, p)
        Om = fundamental_form(st.G, st.J)
        assert np.abs(Om + Om.T).max() < 1e-12, name
        pt = CotangentPoint(sf, x, p)
        Omc = chart_bilinear(pt, assemble_G(pt, st.cs)) \
            @ chart_endomorphism(pt, assemble_J(pt, st.cs))
        assert np.abs(Omc + Omc.T).max() < 1e-12, name


def test_metric_is_hermitian():
    rng = np.random.default_rng(15)
    for name in PRESETS:
        fam = preset_family(name)
        for _ in range(5):
            sf, x, p = _sample(fam, name, rng)
            st = build_structure(sf, fam, x, p)
            assert hermitian_residual(st.G, st.J) < 1e-10, name


def test_hermitian_detects_broken_proportionality():
    rng = np.random.default_rng(16)
    fam = preset_family("sphere-case1").mutated(c1_scale=1.02)
    sf, x, p = _sample(fam, "sphere-case1", rng)
    st = build_structure(sf, fam, x, p)
    assert hermitian_residual(st.G, st.J) > 1e-2


def test_nijenhuis_vanishes():
    rng = np.random.default_rng(17)
    for name in ("sphere-case1", "hyperbolic-case1", "flat-twisted"):
        fam = preset_family(name)
        for _ in range(3):
            sf, x, p = _sample(fam, name, rng)
            assert nijenhuis_numeric(sf, fam, x, p) < 1e-8, name


def test_nijenhuis_detects_wrong_b1():
    rng = np.random.default_rng(18)
    fam = preset_family("sphere-case1").mutated(b1_offset=0.1)
    sf, x, p = _sample(fam, "sphere-case1", rng)
    assert nijenhuis_numeric(sf, fam, x, p) > 1e-2


def test_fundamental_form_is_closed():
    rng = np.random.default_rng(19)
    for name in ("sphere-case1", "hyperbolic-case1", "flat-twisted",
                 "sphere-case2-const"):
        fam = preset_family(name)
        for _ in range(3):
            sf, x, p = _sample(fam, name, rng)
            assert domega_numeric(sf, fam, x, p) < 1e-8, name


def test_domega_detects_wrong_mu():
    rng = np.random.default_rng(20)
    fam = preset_family("sphere-case1").mutated(mu_offset=0.05)
    sf, x, p = _sample(fam, "sphere-case1", rng)
    assert domega_numeric(sf, fam, x, p) > 1e-3


def test_zero_covector_reductions():
    # at p = 0 every rank-one term drops and the frame is the chart frame
    fam = preset_family("sphere-case1")
    sf = SpaceForm(n=2, c=1.0)
    x = np.array([0.3, -0.2])
    pt = CotangentPoint(sf, x, np.zeros(2))
    assert pt.t == 0.0
    assert np.allclose(pt.gam0, 0.0)
    assert np.allclose(frame_matrix(pt), np.eye(4))
    cs = fam.at(0.0)
    G = assemble_G(pt, cs)
    assert np.allclose(G.hh, cs.c1.v0 * pt.g)
    assert np.allclose(G.hv, cs.c3.v0 * np.eye(2))
    assert np.allclose(G.vv, cs.c2.v0 * pt.gi)
    st = build_structure(sf, fam, x, np.zeros(2))
    assert j_squared_residual(st.J) < 1e-14
    assert np.abs(st.G @ st.H - np.eye(4)).max() < 1e-14


def test_flat_diagonal_lift_is_textbook():
    # flat-sasaki on a flat base: G = diag(g, g^-1) = identity in Cartesian
    # coordinates, J the standard symplectic rotation
    fam = preset_family("flat-sasaki")
    sf = SpaceForm(n=2, c=0.0)
    st = build_structure(sf, fam, [0.1, 0.2], [0.4, -0.3])
    assert np.allclose(st.G, np.eye(4))
    expected_J = np.block([[np.zeros((2, 2)), -np.eye(2)],
                           [np.eye(2), np.zeros((2, 2))]])
    assert np.allclose(st.J, expected_J)


def test_covector_energy_is_exact():
    rng = np.random.default_rng(21)
    sf = SpaceForm(n=3, c=-1.0)
    x = rng.uniform(-0.4, 0.4, 3)
    for t in (0.05, 0.3, 0.7):
        p = covector_with_energy(sf, x, t, rng)
        _, gi = sf.metric(x)
        assert np.isclose(0.5 * p @ gi @ p, t, rtol=1e-13)
    assert np.array_equal(covector_with_energy(sf, x, 0.0, rng), np.zeros(3))
    with pytest.raises(ValueError):
        covector_with_energy(sf, x, -0.1, rng)
