"""Scalar coefficient machinery for the lifted structures.

Everything on the bundle is driven by three chosen functions of the energy
density t (a1, a3 and the conformal factor lambda) from which the rest is
derived:

  * a2 closes the almost complex structure:  a1 a2 = 1 + a3^2
  * b1, b2, b3 make it integrable over a base of constant curvature c
  * c_i = lambda a_i and d_i = lambda b_i + mu a_i + 2 t mu b_i (mu =
    lambda') make the metric Hermitian and the fundamental form closed
  * e_i, f_i are the scalars of the closed-form inverse metric
  * two lambda families make the lift Einstein (one defined for all t, one
    only on nonzero covectors)

All derived quantities are jets, so first to third derivatives ride along
exactly. The family of origin is a serializable ``CoefficientFamily``; the
evaluation at one t is a ``CoefficientSet``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .errors import (
    DegenerateStructureError,
    DomainError,
    EvaluationError,
    InadmissibleError,
    IntegrabilityError,
    SingularCoefficientError,
)
from .jets import FamilySpec, Jet3, jet_var

__all__ = [
    "CoefficientFamily",
    "CoefficientSet",
    "Admissibility",
    "EFQRecord",
    "close_a2",
    "integrability_b",
    "kahler_coeffs",
    "inverse_scalars",
    "positivity_check",
    "lambda_case1",
    "lambda_case2",
    "lambda_prime_case1",
    "e_f_expressions",
    "remark_residuals",
    "COEFFICIENT_PRESETS",
    "preset_family",
]


def close_a2(a1: Jet3, a3: Jet3) -> Jet3:
    """a2 = (1 + a3^2)/a1, the closure of the almost complex structure."""
    if a1.v0 == 0.0:
        raise DegenerateStructureError("a1 = 0: the structure degenerates")
    return (1.0 + a3 * a3) / a1


def integrability_b(t: float, a1: Jet3, a2: Jet3, a3: Jet3, c: float):
    """The three integrability quotients (b1, b2, b3) plus their common
    denominator D = a1 - 2t a1' - 2ct a2 - 4ct^2 a2'.

    Vanishing of the Nijenhuis tensor over a base of constant curvature c
    forces exactly these values; the bundle-level tests check that claim
    numerically in both directions.
    """
    tj = jet_var(t)
    a1p, a2p, a3p = a1.d_dt(), a2.d_dt(), a3.d_dt()
    D = a1 - 2 * tj * a1p - 2 * c * tj * a2 - 4 * c * tj * tj * a2p
    if abs(D.v0) < 1e-12:
        raise IntegrabilityError(f"integrability denominator vanishes at t = {t}")
    b1 = (2 * c * c * tj * a2 * a2 + 2 * c * tj * a1 * a2p
          + a1 * a1p - c + 3 * c * a3 * a3) / D
    b2 = (2 * tj * a3p * a3p - 2 * tj * a1p * a2p + c * a2 * a2
          + 2 * c * tj * a2 * a2p + a1 * a2p) / D
    b3 = (a1 * a3p + 2 * c * a2 * a3 + 4 * c * tj * a2p * a3
          - 2 * c * tj * a2 * a3p) / D
    return b1, b2, b3, D


def remark_residuals(t, a1, a2, a3, b1, b2, b3, c):
    """Residuals of the equivalent reconstruction of a1', a2', a3' from the
    b-coefficients. All three vanish when b came from integrability_b."""
    den = a1 + 2 * jet_var(t) * b1
    r1 = a1.v1 - ((a1 * b1 + c - 3 * c * a3 * a3).v0
                  - 4 * c * t * (a3 * b3).v0) / den.v0
    r2 = a2.v1 - ((2 * a3 * b3 - a2 * b1 - c * a2 * a2).v0) / den.v0
    r3 = a3.v1 - ((a1 * b3 - 2 * c * a2 * a3).v0
                  - 2 * c * t * (a2 * b3).v0) / den.v0
    return r1, r2, r3


def kahler_coeffs(t: float, a, b, lam: Jet3, mu: Optional[Jet3] = None):
    """Metric scalars (c1, c2, c3, d1, d2, d3) from the proportionality
    c_i = lambda a_i, with d_i in the form that stays regular at t = 0:

        d_i = lambda b_i + mu a_i + 2 t mu b_i

    mu defaults to lambda' (the closed fundamental form condition); passing
    another jet deliberately breaks closedness, which the negative controls
    use.
    """
    if lam.v0 <= 0.0:
        raise InadmissibleError(f"lambda = {lam.v0} must be positive at t = {t}")
    if mu is None:
        mu = lam.d_dt()
    if (lam + 2 * t * mu).v0 <= 0.0:
        raise InadmissibleError(
            f"lambda + 2 t mu = {(lam + 2 * t * mu).v0} must be positive at t = {t}")
    tj = jet_var(t)
    a1, a2, a3 = a
    b1, b2, b3 = b
    cs = tuple(lam * ai for ai in (a1, a2, a3))
    ds = tuple(lam * bi + mu * ai + 2 * tj * mu * bi
               for ai, bi in ((a1, b1), (a2, b2), (a3, b3)))
    return cs, ds, mu


def inverse_scalars(t: float, cvals, dvals):
    """Closed-form scalars (e1, e2, e3, f1, f2, f3) of the inverse metric."""
    c1, c2, c3 = cvals
    d1, d2, d3 = dvals
    tj = jet_var(t)
    det = c1 * c2 - c3 * c3
    if abs(det.v0) < 1e-14:
        raise SingularCoefficientError(f"c1 c2 - c3^2 = {det.v0} at t = {t}")
    e1, e2, e3 = c2 / det, c1 / det, -(c3 / det)
    big = (c1 + 2 * d1 * tj) * (c2 + 2 * d2 * tj) - (c3 + 2 * d3 * tj) ** 2
    if abs(big.v0) < 1e-14:
        raise SingularCoefficientError(
            f"(c1+2td1)(c2+2td2) - (c3+2td3)^2 = {big.v0} at t = {t}")
    f1 = -((c2 * d1 * e1 - c3 * d3 * e1 - c3 * d2 * e3 + c2 * d3 * e3
            + 2 * d1 * d2 * e1 * tj - 2 * d3 * d3 * e1 * tj)
           / (c1 * c2 - c3 * c3 + 2 * c2 * d1 * tj + 2 * c1 * d2 * tj
              - 4 * c3 * d3 * tj + 4 * d1 * d2 * tj * tj - 4 * d3 * d3 * tj * tj))
    num = ((d3 * e1 + d2 * e3) * (c1 + 2 * d1 * tj)
           - (d1 * e1 + d3 * e3) * (c3 + 2 * d3 * tj))
    f2 = ((c3 + 2 * d3 * tj) * num / ((c2 + 2 * d2 * tj) * big)
          - (d2 * e2 + d3 * e3) / (c2 + 2 * d2 * tj))
    f3 = -(num / big)
    return e1, e2, e3, f1, f2, f3


def lambda_case1(t: float, a1: Jet3, a3: Jet3, c: float, n: int, rho: float) -> Jet3:
    """The conformal factor that makes the lift Einstein for every t:

        lambda = 2 a1 c (n+1) / (rho [a1^2 + 2ct(1 + a3^2)])
    """
    if rho == 0.0:
        raise EvaluationError("rho must be nonzero for the case-I family")
    tj = jet_var(t)
    den = rho * (a1 * a1 + 2 * c * tj * (1 + a3 * a3))
    if den.v0 == 0.0:
        raise EvaluationError(f"case-I denominator vanishes at t = {t}")
    return (2 * a1 * c * (n + 1)) / den


def lambda_case2(t: float, a1: Jet3, a3: Jet3, c: float, n: int, rho: float,
                 branch: str) -> Jet3:
    """The Einstein conformal factor defined only on nonzero covectors:

        lambda = n (a1^2 + 2ct + 2 a3^2 ct +- sqrt(rad)) / (4 a1 rho t)

    with rad = a1^4 - 4a1^2 ct + 4a1^2 a3^2 ct + 4c^2t^2 + 8a3^2 c^2t^2
    + 4a3^4 c^2t^2. branch is "+" or "-".
    """
    if t <= 0.0:
        raise DomainError(
            "the second Einstein family lives on nonzero covectors; t must be > 0")
    if rho == 0.0:
        raise EvaluationError("rho must be nonzero for the case-II family")
    if branch not in ("+", "-"):
        raise ValueError(f"branch must be '+' or '-', got {branch!r}")
    tj = jet_var(t)
    rad = (a1 ** 4 - 4 * a1 * a1 * c * tj + 4 * a1 * a1 * a3 * a3 * c * tj
           + 4 * c * c * tj * tj + 8 * a3 * a3 * c * c * tj * tj
           + 4 * a3 ** 4 * c * c * tj * tj)
    root = rad.sqrt()  # raises EvaluationError on a negative radicand
    if branch == "-":
        root = -root
    return n * (a1 * a1 + 2 * c * tj + 2 * a3 * a3 * c * tj + root) / (4 * a1 * rho * tj)


def lambda_prime_case1(a1: Jet3, a3: Jet3, lam_value: float, c: float, t: float) -> float:
    """d lambda/dt for the case-I family, as an explicit rational expression.

    Equals the jet derivative of lambda_case1 identically; kept as a separate
    route so the two can be cross-checked. Note the grouping of the 2ct term:
    differentiating the closed form gives  - 2ct(a1' + a1' a3^2 - 2 a1 a3 a3'),
    with single coefficients on the a3-terms.
    """
    a1v, a1p = a1.v0, a1.v1
    a3v, a3p = a3.v0, a3.v1
    den = a1v * (a1v * a1v + 2 * c * t * (1 + a3v * a3v))
    if den == 0.0:
        raise EvaluationError(f"case-I denominator vanishes at t = {t}")
    num = (a1v * (a1v * a1p + 2 * c * (1 + a3v * a3v))
           - 2 * c * t * (a1p + a1p * a3v * a3v - 2 * a1v * a3v * a3p))
    return -lam_value * num / den


@dataclass(frozen=True)
class EFQRecord:
    """The two sign-controlling polynomials and the quadratic from the
    Einstein analysis, with the quadratic-form witnesses for E."""

    E: float
    F: float
    Q: float
    u: float  # a1 - 2 a1' t
    v: float  # 2 a1 a3' t


def e_f_expressions(t: float, a1: Jet3, a3: Jet3, c: float):
    """Evaluate E, F and the quadratic Q, plus the decomposition
    E = (1+a3^2) u^2 + 2 a3 u v + v^2 with u = a1 - 2 a1' t, v = 2 a1 a3' t.

    Returns (record, e_via_decomposition). E >= 0 always; the sign of F is
    reported, not asserted (F vanishes identically when a3 does).
    """
    a1v, a1p = a1.v0, a1.v1
    a3v, a3p = a3.v0, a3.v1
    E = (a1v ** 2 + a1v ** 2 * a3v ** 2 - 4 * a1v * a1p * t
         - 4 * a1v * a1p * a3v ** 2 * t + 4 * a1v ** 2 * a3v * a3p * t
         + 4 * a1p ** 2 * t ** 2 + 4 * a1p ** 2 * a3v ** 2 * t ** 2
         - 8 * a1v * a1p * a3v * a3p * t ** 2 + 4 * a1v ** 2 * a3p ** 2 * t ** 2)
    F = (a1v ** 3 * a3v - 2 * a1v ** 2 * a1p * a3v * t + 2 * a1v ** 3 * a3p * t
         + 2 * a1v * a3v * c * t + 2 * a1v * a3v ** 3 * c * t
         - 4 * a1p * a3v * c * t ** 2 - 4 * a1p * a3v ** 3 * c * t ** 2
         - 4 * a1v * a3p * c * t ** 2 + 4 * a1v * a3v ** 2 * a3p * c * t ** 2)
    Q = (a1v ** 4 - 4 * a1v ** 2 * (1 + a3v ** 2) * c * t
         + 4 * c ** 2 * t ** 2 * (1 + a3v ** 2) ** 2)
    u = a1v - 2 * a1p * t
    v = 2 * a1v * a3p * t
    e_dec = (1 + a3v ** 2) * u ** 2 + 2 * a3v * u * v + v ** 2
    return EFQRecord(E=E, F=F, Q=Q, u=u, v=v), e_dec


@dataclass(frozen=True)
class Admissibility:
    """Positivity margins of the lifted metric at one t. Reported, never
    enforced here: sweeps need to see where a structure dies."""

    ok: bool
    margins: dict

    def __bool__(self):
        return self.ok


def positivity_check(t: float, cs: "CoefficientSet") -> Admissibility:
    """The three positive-definiteness conditions plus the lambda ones and
    the sign of the integrability denominator."""
    h1 = (cs.c1 + 2 * t * cs.d1).v0
    h2 = (cs.c2 + 2 * t * cs.d2).v0
    det = h1 * h2 - (cs.c3 + 2 * t * cs.d3).v0 ** 2
    margins = {
        "lambda": cs.lam.v0,
        "lambda_shift": (cs.lam + 2 * t * cs.mu).v0,
        "block1": h1,
        "block2": h2,
        "determinant": det,
        "integrability_denominator": cs.integ_den.v0,
    }
    ok = all(margins[k] > 0.0
             for k in ("lambda", "lambda_shift", "block1", "block2", "determinant"))
    return Admissibility(ok=ok, margins=margins)


@dataclass(frozen=True)
class CoefficientSet:
    """Every scalar jet at one value of t, plus the context it was built in."""

    t: float
    base_c: float
    dim: int
    a1: Jet3
    a2: Jet3
    a3: Jet3
    b1: Jet3
    b2: Jet3
    b3: Jet3
    lam: Jet3
    mu: Jet3
    c1: Jet3
    c2: Jet3
    c3: Jet3
    d1: Jet3
    d2: Jet3
    d3: Jet3
    e1: Jet3
    e2: Jet3
    e3: Jet3
    f1: Jet3
    f2: Jet3
    f3: Jet3
    integ_den: Jet3


_LAM_RULES = ("explicit", "case1", "case2+", "case2-")


@dataclass(frozen=True)
class CoefficientFamily:
    """A full coefficient family: the three chosen functions plus context.

    lam_rule selects how lambda is produced: "explicit" evaluates the lam
    expression, "case1" and "case2+"/"case2-" use the Einstein closed forms (rho
    required). The *_offset / *_scale fields are mutation knobs for negative
    controls; they default to the honest values.
    """

    a1: FamilySpec
    a3: FamilySpec
    c: float
    n: int
    lam: Optional[FamilySpec] = None
    lam_rule: str = "explicit"
    rho: Optional[float] = None
    b1_offset: float = 0.0
    mu_offset: float = 0.0
    lam_scale: float = 1.0
    c1_scale: float = 1.0

    def __post_init__(self):
        if self.lam_rule not in _LAM_RULES:
            raise ValueError(f"lam_rule must be one of {_LAM_RULES}, got {self.lam_rule!r}")
        if self.lam_rule == "explicit" and self.lam is None:
            raise ValueError("explicit lam_rule needs a lam expression")
        if self.lam_rule != "explicit" and self.rho is None:
            raise ValueError(f"lam_rule {self.lam_rule!r} needs rho")

    def mutated(self, **kw) -> "CoefficientFamily":
        return replace(self, **kw)

    def lambda_jet(self, t: float) -> Jet3:
        a1 = self.a1.eval(t)
        a3 = self.a3.eval(t)
        if self.lam_rule == "explicit":
            lam = self.lam.eval(t)
        elif self.lam_rule == "case1":
            lam = lambda_case1(t, a1, a3, self.c, self.n, self.rho)
        else:
            lam = lambda_case2(t, a1, a3, self.c, self.n, self.rho,
                               self.lam_rule[-1])
        if self.lam_scale != 1.0:
            lam = self.lam_scale * lam
        return lam

    def at(self, t: float, admissible: bool = True) -> CoefficientSet:
        """Evaluate the whole scalar tower at t.

        With admissible=False the lambda positivity preconditions are not
        enforced (used by sweeps to chart where the structure fails); the
        unavoidable singular cases still raise.
        """
        a1 = self.a1.eval(t)
        a3 = self.a3.eval(t)
        a2 = close_a2(a1, a3)
        b1, b2, b3, D = integrability_b(t, a1, a2, a3, self.c)
        if self.b1_offset:
            b1 = b1 + self.b1_offset
        lam = self.lambda_jet(t)
        mu = lam.d_dt() + self.mu_offset
        if admissible:
            cvals, dvals, mu = kahler_coeffs(t, (a1, a2, a3), (b1, b2, b3), lam, mu)
        else:
            tj = jet_var(t)
            cvals = tuple(lam * ai for ai in (a1, a2, a3))
            dvals = tuple(lam * bi + mu * ai + 2 * tj * mu * bi
                          for ai, bi in ((a1, b1), (a2, b2), (a3, b3)))
        if self.c1_scale != 1.0:
            cvals = (self.c1_scale * cvals[0], cvals[1], cvals[2])
        e1, e2, e3, f1, f2, f3 = inverse_scalars(t, cvals, dvals)
        return CoefficientSet(
            t=t, base_c=self.c, dim=self.n,
            a1=a1, a2=a2, a3=a3, b1=b1, b2=b2, b3=b3,
            lam=lam, mu=mu,
            c1=cvals[0], c2=cvals[1], c3=cvals[2],
            d1=dvals[0], d2=dvals[1], d3=dvals[2],
            e1=e1, e2=e2, e3=e3, f1=f1, f2=f2, f3=f3,
            integ_den=D,
        )


# --------------------------------------------------------------------------
# named presets. Each value is (family kwargs minus n/rho, default n,
# default rho, default t-window). preset_family() fills the blanks.

_PRESETS = {
    "flat-sasaki": dict(
        kwargs=dict(a1="1", a3="0", c=0.0, lam="1", lam_rule="explicit"),
        n=2, rho=0.0, t_window=(0.0, 0.8),
        doc="c = 0, a1 = 1, a3 = 0, lambda = 1: the flat diagonal lift."),
    "flat-twisted": dict(
        kwargs=dict(a1="1", a3="t", c=0.0, lam="1", lam_rule="explicit"),
        n=2, rho=None, t_window=(0.05, 0.6),
        doc="c = 0 with a3 = t: nonzero b2, b3 and d3, off-diagonal blocks live."),
    "sphere-case1": dict(
        kwargs=dict(a1="1", a3="0", c=1.0, lam=None, lam_rule="case1"),
        n=2, rho=6.0, t_window=(0.05, 0.4),
        doc="c = 1 with the everywhere-defined Einstein lambda = 1/(1+2t) at rho = 6."),
    "hyperbolic-case1": dict(
        kwargs=dict(a1="1", a3="0", c=-1.0, lam=None, lam_rule="case1"),
        n=2, rho=-6.0, t_window=(0.05, 0.4),
        doc="c = -1 analogue of sphere-case1; lambda = 1/(1-2t) at rho = -6."),
    "sphere-case2-const": dict(
        kwargs=dict(a1="1", a3="0", c=1.0, lam=None, lam_rule="case2-"),
        n=2, rho=2.0, t_window=(0.05, 0.45),
        doc="c = 1 with the nonzero-covector Einstein family; this branch is "
            "the constant lambda = n/rho."),
}

COEFFICIENT_PRESETS = tuple(sorted(_PRESETS))


def preset_family(name: str, n: Optional[int] = None,
                  rho: Optional[float] = None) -> CoefficientFamily:
    """Build a named preset family; n and rho override the defaults."""
    try:
        entry = _PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; have {', '.join(COEFFICIENT_PRESETS)}")
    kw = dict(entry["kwargs"])
    kw["a1"] = FamilySpec.parse(kw["a1"])
    kw["a3"] = FamilySpec.parse(kw["a3"])
    if kw.get("lam") is not None:
        kw["lam"] = FamilySpec.parse(kw["lam"])
    kw["n"] = n if n is not None else entry["n"]
    use_rho = rho if rho is not None else entry["rho"]
    kw["rho"] = use_rho
    return CoefficientFamily(**kw)


def preset_window(name: str):
    return _PRESETS[name]["t_window"]


def preset_doc(name: str) -> str:
    return _PRESETS[name]["doc"]
