"""Jet arithmetic against hand-differentiated values and finite differences."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cotlift.errors import EvaluationError
from cotlift.jets import FamilySpec, Jet3, jet_const, jet_var


# hand-differentiated reference jets -------------------------------------

def test_constant_jet_is_flat():
    j = FamilySpec.const(1.0).eval(0.7)
    assert j.as_tuple() == (1.0, 0.0, 0.0, 0.0)


def test_reciprocal_one_plus_two_t_at_zero():
    # f = (1+2t)^-1: f' = -2(1+2t)^-2, f'' = 8(1+2t)^-3, f''' = -48(1+2t)^-4
    j = FamilySpec.parse("(/ 1 (poly 1 2))").eval(0.0)
    assert j.as_tuple() == pytest.approx((1.0, -2.0, 8.0, -48.0), rel=1e-14)


def test_sqrt_one_plus_t_squared_at_one():
    # f = sqrt(1+t^2): f' = t/f, f'' = (1+t^2)^{-3/2}, f''' = -3t(1+t^2)^{-5/2}
    j = FamilySpec.parse("(sqrt (poly 1 0 1))").eval(1.0)
    assert j.v0 == pytest.approx(math.sqrt(2.0), rel=1e-15)
    assert j.v1 == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-15)
    assert j.v2 == pytest.approx(2.0 ** -1.5, rel=1e-14)
    assert j.v3 == pytest.approx(-3.0 * 2.0 ** -2.5, rel=1e-14)


def test_t_squared_at_two():
    t = jet_var(2.0)
    assert (t * t).as_tuple() == (4.0, 4.0, 2.0, 0.0)


def test_sqrt_of_perfect_square_recovers_linear():
    # sqrt((1+2t)^2) = 1+2t for t > -1/2
    j = FamilySpec.parse("(sqrt (pow (poly 1 2) 2))").eval(1.0)
    assert j.as_tuple() == pytest.approx((3.0, 2.0, 0.0, 0.0), abs=1e-14)


def test_multiplicative_identity():
    x = Jet3(0.37, -1.2, 4.5, 0.01)
    assert (jet_const(1.0) * x).as_tuple() == x.as_tuple()


# arithmetic invariants --------------------------------------------------

def test_product_of_polys_matches_jet_product():
    rng = np.random.default_rng(11)
    for _ in range(50):
        p = FamilySpec.poly(*rng.normal(size=4))
        q = FamilySpec.poly(*rng.normal(size=3))
        t = float(rng.uniform(0.0, 2.0))
        pq = FamilySpec(("mul", p.node, q.node)).eval(t)
        sep = p.eval(t) * q.eval(t)
        scale = max(1.0, *(abs(v) for v in pq.as_tuple()))
        assert np.allclose(pq.as_tuple(), sep.as_tuple(), rtol=1e-12, atol=1e-12 * scale)


def test_v1_v2_match_central_differences():
    f = FamilySpec.parse("(/ (sqrt (poly 1 0 1)) (poly 2 1))")
    h = 1e-5
    for t in (0.1, 0.5, 1.3):
        j = f.eval(t)
        d1 = (f.eval(t + h).v0 - f.eval(t - h).v0) / (2 * h)
        d2 = (f.eval(t + h).v0 - 2 * j.v0 + f.eval(t - h).v0) / h**2
        assert d1 == pytest.approx(j.v1, rel=1e-6, abs=1e-9)
        # second differences carry ~eps/h^2 rounding noise, hence the abs floor
        assert d2 == pytest.approx(j.v2, rel=1e-4, abs=1e-5)


def test_sqrt_then_square_is_identity():
    rng = np.random.default_rng(5)
    for _ in range(25):
        a = Jet3(float(rng.uniform(0.1, 4.0)), *rng.normal(size=3))
        r = a.sqrt()
        back = r * r
        scale = max(1.0, *(abs(v) for v in a.as_tuple()))
        assert np.allclose(back.as_tuple(), a.as_tuple(), rtol=1e-12, atol=1e-12 * scale)


def test_derivative_shift_drops_an_order():
    f = FamilySpec.parse("(/ 1 (poly 1 2))")
    j = f.eval(0.3)
    d = j.d_dt()
    assert d.v0 == j.v1 and d.v1 == j.v2 and d.v2 == j.v3
    assert d.v3 == 0.0  # top slot is declared inexact


@settings(max_examples=200, deadline=None)
@given(
    a=st.tuples(*[st.floats(-3, 3) for _ in range(4)]),
    b=st.tuples(*[st.floats(-3, 3) for _ in range(4)]),
    c=st.tuples(*[st.floats(-3, 3) for _ in range(4)]),
)
def test_mul_commutes_and_associates(a, b, c):
    ja, jb, jc = Jet3(*a), Jet3(*b), Jet3(*c)
    lhs = ((ja * jb) * jc).as_tuple()
    rhs = (ja * (jb * jc)).as_tuple()
    sym = (jb * ja).as_tuple()
    scale = max(1.0, *(abs(v) for v in lhs))
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-12 * scale)
    # commutative up to rounding only: 3*a2*b1 vs 3*b1*a2 group differently
    assert np.allclose((ja * jb).as_tuple(), sym, rtol=1e-14, atol=1e-14 * scale)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-5, 5).map(lambda v: round(v, 3)), min_size=1, max_size=5))
def test_family_text_round_trip(coeffs):
    f = FamilySpec.poly(*coeffs)
    g = FamilySpec.parse(str(f))
    assert g == f
    assert str(g) == str(f)


def test_round_trip_composite():
    text = "(+ (/ 1 (poly 1 2)) (* t (sqrt (poly 1 0 1))))"
    f = FamilySpec.parse(text)
    assert FamilySpec.parse(str(f)) == f
    j0, j1 = f.eval(0.4), FamilySpec.parse(str(f)).eval(0.4)
    assert j0.as_tuple() == j1.as_tuple()


# failure modes -----------------------------------------------------------

def test_division_pole_names_subexpression():
    f = FamilySpec.parse("(/ 1 (poly -1 2))")  # pole at t = 1/2
    with pytest.raises(EvaluationError) as err:
        f.eval(0.5)
    assert err.value.expr is not None
    assert "poly -1 2" in err.value.expr


def test_negative_radicand_names_subexpression():
    f = FamilySpec.parse("(sqrt (poly -1 1))")
    with pytest.raises(EvaluationError) as err:
        f.eval(0.25)
    assert err.value.expr == "(sqrt (poly -1 1))"


def test_parse_rejects_garbage():
    for bad in ("", "(poly)", "(+ 1)", "(frob 1 2)", "(pow t x)", "(+ 1 2", "1 2"):
        with pytest.raises(ValueError):
            FamilySpec.parse(bad)
