"""Scenario configuration, the full verification pipeline, and sweeps.

A Scenario bundles everything one verification run needs: the base space
form, the coefficient family, the sampling window in t, sample counts, a
seed and optional tolerance overrides. ``run_scenario`` samples points,
runs every check, aggregates worst cases, and appends the mandatory
mutation controls (checks that must *fail* on a mutated family, guarding
against vacuously loose tolerances). Reports serialize to JSON with a
stable field order; two runs with the same scenario and seed produce
byte-identical output, which is itself a tested property.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from .bundle_structures import (
    CotangentPoint,
    build_structure,
    covector_with_energy,
    domega_numeric,
    fundamental_form,
    hermitian_residual,
    j_squared_residual,
    nijenhuis_numeric,
)
from .coefficients import (
    CoefficientFamily,
    e_f_expressions,
    positivity_check,
    preset_doc,
    preset_window,
    COEFFICIENT_PRESETS,
)
from .connection import (
    full_connection,
    koszul_connection_oracle,
    metricity_residual,
    torsion_residual,
)
from .curvature_ricci import (
    bianchi_residual,
    case_equations_residual,
    curvature_blocks,
    curvature_oracle,
    einstein_residual,
    full_curvature,
    holomorphic_sectional_curvature,
    ricci_blocks,
)
from .errors import ScenarioError
from .jets import FamilySpec
from .space_form import SpaceForm

__all__ = [
    "Scenario",
    "VerificationReport",
    "SCENARIO_PRESETS",
    "scenario_preset",
    "load_scenario",
    "run_scenario",
    "sweep",
    "sweep_to_csv",
    "DEFAULT_TOLERANCES",
]


_LAM_RULES = ("explicit", "case1", "case2+", "case2-")

DEFAULT_TOLERANCES: Dict[str, float] = {
    "closure": 1e-10,
    "j_squared": 1e-10,
    "hermitian": 1e-10,
    "inverse_blocks": 1e-10,
    "fundamental_antisymmetry": 1e-10,
    "nijenhuis": 1e-5,
    "domega": 1e-5,
    "connection_oracle": 1e-5,
    "metricity": 1e-5,
    "torsion": 1e-5,
    "curvature_oracle": 1e-4,
    "bianchi": 1e-4,
    "ricci_symmetry": 1e-8,
    "einstein": 1e-6,
    "holomorphic_k": 1e-3,
    "case_equation": 1e-9,
    "efq_identities": 1e-12,
    "q_positivity": 0.0,
    "positivity": 0.0,
    # controls: the mutated residual must EXCEED these
    "control_nijenhuis": 1e-2,
    "control_metricity": 1e-2,
    "control_torsion": 1e-2,
    "control_domega": 1e-3,
    "control_hermitian": 1e-2,
    "control_einstein": 1e-2,
}


@dataclass(frozen=True)
class Scenario:
    """One verification configuration; serializes one-to-one with the JSON
    scenario file format."""

    name: str
    n: int = 2
    c: float = 1.0
    a1: str = "1"
    a3: str = "0"
    lam: Optional[str] = None
    lam_rule: str = "explicit"
    rho: Optional[float] = None
    t_min: float = 0.05
    t_max: float = 0.4
    points_per_t: int = 4
    t_grid: int = 5
    seed: int = 0
    lam_scale: float = 1.0
    tolerances: Dict[str, float] = field(default_factory=dict)

    def validate(self) -> None:
        if self.n < 2:
            raise ScenarioError(f"n must be >= 2, got {self.n}")
        if self.lam_rule not in _LAM_RULES:
            raise ScenarioError(f"lam_rule must be one of {_LAM_RULES}")
        if self.lam_rule == "explicit" and self.lam is None:
            raise ScenarioError("explicit lam_rule needs a lam expression")
        if self.lam_rule != "explicit" and self.rho is None:
            raise ScenarioError(f"lam_rule {self.lam_rule!r} needs rho")
        if self.lam_rule.startswith("case2") and self.t_min <= 0.0:
            raise ScenarioError(
                "the case-II family lives on nonzero covectors; t_min must be > 0")
        if not (0.0 <= self.t_min <= self.t_max):
            raise ScenarioError(f"need 0 <= t_min <= t_max, got [{self.t_min}, {self.t_max}]")
        if self.points_per_t < 1 or self.t_grid < 1:
            raise ScenarioError("sample counts must be >= 1")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ScenarioError(f"unknown tolerance keys: {sorted(unknown)}")
        try:
            self.to_family()
        except ScenarioError:
            raise
        except Exception as exc:
            raise ScenarioError(f"coefficient family does not build: {exc}") from exc

    def to_family(self) -> CoefficientFamily:
        return CoefficientFamily(
            a1=FamilySpec.parse(self.a1),
            a3=FamilySpec.parse(self.a3),
            c=self.c,
            n=self.n,
            lam=FamilySpec.parse(self.lam) if self.lam is not None else None,
            lam_rule=self.lam_rule,
            rho=self.rho,
            lam_scale=self.lam_scale,
        )

    def tol(self, check: str) -> float:
        return self.tolerances.get(check, DEFAULT_TOLERANCES[check])

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ScenarioError(f"unknown scenario fields: {sorted(unknown)}")
        if "name" not in data:
            raise ScenarioError("scenario needs a name")
        try:
            s = cls(**data)
        except TypeError as exc:
            raise ScenarioError(str(exc)) from exc
        s.validate()
        return s


def _scenario_presets() -> Dict[str, Scenario]:
    out = {}
    for name in COEFFICIENT_PRESETS:
        lo, hi = preset_window(name)
        out[name] = Scenario(
            name=name,
            c={"flat-sasaki": 0.0, "flat-twisted": 0.0,
               "sphere-case1": 1.0, "hyperbolic-case1": -1.0,
               "sphere-case2-const": 1.0}[name],
            a1="1",
            a3="t" if name == "flat-twisted" else "0",
            lam="1" if name.startswith("flat") else None,
            lam_rule={"flat-sasaki": "explicit", "flat-twisted": "explicit",
                      "sphere-case1": "case1", "hyperbolic-case1": "case1",
                      "sphere-case2-const": "case2-"}[name],
            rho={"flat-sasaki": 0.0, "flat-twisted": None,
                 "sphere-case1": 6.0, "hyperbolic-case1": -6.0,
                 "sphere-case2-const": 2.0}[name],
            t_min=max(lo, 0.0) if name == "flat-sasaki" else max(lo, 0.05),
            t_max=hi,
        )
    out["sphere-case1-broken"] = replace(
        out["sphere-case1"], name="sphere-case1-broken", lam_scale=1.1)
    return out


SCENARIO_PRESETS: Dict[str, Scenario] = _scenario_presets()


def scenario_preset(name: str) -> Scenario:
    try:
        return SCENARIO_PRESETS[name]
    except KeyError:
        raise ScenarioError(
            f"unknown preset {name!r}; available: {', '.join(sorted(SCENARIO_PRESETS))}")


def preset_description(name: str) -> str:
    if name == "sphere-case1-broken":
        return "sphere-case1 with lambda scaled by 1.1: structure intact, Einstein broken."
    return preset_doc(name)


def load_scenario(source: str) -> Scenario:
    """A preset name, or a path to a JSON file mirroring Scenario."""
    if source in SCENARIO_PRESETS:
        return SCENARIO_PRESETS[source]
    try:
        with open(source) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ScenarioError(
            f"{source!r} is neither a preset name nor a readable file")
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario file {source!r} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ScenarioError("scenario file must contain a JSON object")
    return Scenario.from_dict(data)


# ------------------------------------------------------------------
# the pipeline

class _Worst:
    """Running argmax of a residual with its sample point."""

    __slots__ = ("value", "point", "ran")

    def __init__(self):
        self.value = 0.0
        self.point = None
        self.ran = False

    def update(self, value, x, p, t):
        self.ran = True
        if self.point is None or value > self.value:
            self.value = float(value)
            self.point = {"x": [float(v) for v in x],
                          "p": [float(v) for v in p],
                          "t": float(t)}


@dataclass
class VerificationReport:
    scenario: dict
    seed: int
    checks: List[dict]
    notes: List[str]
    passed: bool
    wall_time_s: Optional[float] = None   # kept null so reports are reproducible

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "seed": self.seed,
                "checks": self.checks, "notes": self.notes,
                "passed": self.passed, "wall_time_s": self.wall_time_s}

    def json_bytes(self) -> bytes:
        return (json.dumps(self.to_dict(), indent=2) + "\n").encode()

    def check(self, name: str) -> dict:
        for rec in self.checks:
            if rec["name"] == name:
                return rec
        raise KeyError(name)


def _ball_point(rng, n: int, radius: float = 0.8) -> np.ndarray:
    while True:
        x = rng.uniform(-radius, radius, n)
        if float(x @ x) <= radius * radius:
            return x


_CHECK_ORDER = [
    "positivity", "closure", "j_squared", "hermitian", "inverse_blocks",
    "fundamental_antisymmetry", "efq_identities", "q_positivity",
    "nijenhuis", "domega", "connection_oracle", "metricity", "torsion",
    "curvature_oracle", "bianchi", "ricci_symmetry", "einstein",
    "holomorphic_k", "case_equation",
]


def run_scenario(s: Scenario) -> VerificationReport:
    s.validate()
    fam = s.to_family()
    sf = SpaceForm(n=s.n, c=s.c)
    rng = np.random.default_rng(s.seed)
    worst = {name: _Worst() for name in _CHECK_ORDER}
    pos_ok = True
    k_target = None if s.rho is None else 2.0 * s.rho / (s.n + 1)
    min_q = None
    admissible_ts: List[float] = []

    if s.t_grid == 1:
        t_values = [0.5 * (s.t_min + s.t_max)]
    else:
        t_values = list(np.linspace(s.t_min, s.t_max, s.t_grid))

    for t in t_values:
        for _ in range(s.points_per_t):
            x = _ball_point(rng, s.n)
            p = covector_with_energy(sf, x, float(t), rng)
            try:
                cs_any = fam.at(float(t), admissible=False)
            except ValueError:
                # a pole or degenerate coefficient at this t counts as an
                # admissibility failure, not a crash (sweeps probe these)
                pos_ok = False
                worst["positivity"].update(float("inf"), x, p, t)
                continue
            adm = positivity_check(float(t), cs_any)
            margin = min(adm.margins[k] for k in
                         ("lambda", "lambda_shift", "block1", "block2", "determinant"))
            worst["positivity"].update(max(0.0, -margin), x, p, t)
            if not adm.ok:
                pos_ok = False
                continue
            admissible_ts.append(float(t))

            pt = CotangentPoint(sf, x, p)
            cs = fam.at(pt.t)

            rel_a = abs((cs.a1 * cs.a2 - 1.0 - cs.a3 * cs.a3).v0)
            shifted = ((cs.a1 + 2 * pt.t * cs.b1) * (cs.a2 + 2 * pt.t * cs.b2)
                       - 1.0 - (cs.a3 + 2 * pt.t * cs.b3) ** 2).v0
            worst["closure"].update(max(rel_a, abs(shifted)), x, p, t)

            st = build_structure(sf, fam, x, p)
            worst["j_squared"].update(j_squared_residual(st.J), x, p, t)
            worst["hermitian"].update(hermitian_residual(st.G, st.J), x, p, t)
            worst["inverse_blocks"].update(
                np.abs(st.G @ st.H - np.eye(2 * s.n)).max(), x, p, t)
            Om = fundamental_form(st.G, st.J)
            worst["fundamental_antisymmetry"].update(np.abs(Om + Om.T).max(), x, p, t)

            rec, e_dec = e_f_expressions(pt.t, cs.a1, cs.a3, s.c)
            scale = max(1.0, abs(rec.E))
            worst["efq_identities"].update(
                max(abs(rec.E - e_dec), -rec.E, 0.0) / scale, x, p, t)
            min_q = rec.Q if min_q is None else min(min_q, rec.Q)
            worst["q_positivity"].update(max(0.0, -rec.Q), x, p, t)

            worst["nijenhuis"].update(nijenhuis_numeric(sf, fam, x, p), x, p, t)
            worst["domega"].update(domega_numeric(sf, fam, x, p), x, p, t)

            C = full_connection(pt, cs)
            O = koszul_connection_oracle(sf, fam, x, p)
            worst["connection_oracle"].update(np.abs(C - O).max(), x, p, t)
            worst["metricity"].update(metricity_residual(sf, fam, x, p), x, p, t)
            worst["torsion"].update(torsion_residual(sf, fam, x, p), x, p, t)

            cb = curvature_blocks(pt, cs)
            ob = curvature_oracle(sf, fam, x, p)
            worst["curvature_oracle"].update(cb.max_deviation(ob), x, p, t)
            worst["bianchi"].update(
                bianchi_residual(full_curvature(s.n, cb)), x, p, t)
            ric = ricci_blocks(cb).full()
            worst["ricci_symmetry"].update(np.abs(ric - ric.T).max(), x, p, t)

            if s.rho is not None:
                diag = einstein_residual(pt, cs, s.rho)
                worst["einstein"].update(diag.max_residual, x, p, t)
                if not s.lam_rule.startswith("case2"):
                    # constant holomorphic curvature 2 rho/(n+1) is a
                    # case-1 (and flat) property; the case-2 Einstein
                    # lifts have genuinely varying k
                    X = rng.standard_normal(2 * s.n)
                    k = holomorphic_sectional_curvature(pt, cs, X)
                    worst["holomorphic_k"].update(abs(k - k_target), x, p, t)

            if s.lam_rule != "explicit":
                (r1, s1), (r2, s2) = case_equations_residual(cs)
                rel = (abs(r1) / s1) if s.lam_rule == "case1" else (abs(r2) / s2)
                worst["case_equation"].update(rel, x, p, t)

    checks: List[dict] = []
    for name in _CHECK_ORDER:
        w = worst[name]
        if not w.ran:
            continue
        tol = s.tol(name)
        if name == "positivity":
            ok = pos_ok
        elif name == "q_positivity":
            ok = (min_q is not None) and (min_q > 0.0)
        else:
            ok = w.value <= tol
        checks.append({"name": name, "max_residual": w.value, "tolerance": tol,
                       "pass": bool(ok), "worst_point": w.point})

    if admissible_ts:
        t_ctrl = sorted(set(admissible_ts))[len(set(admissible_ts)) // 2]
        checks.extend(_run_controls(s, sf, fam, rng, t_ctrl))

    notes = []
    if s.n == 2:
        notes.append(
            "base dimension is 2: the closed-form integrability equivalence "
            "is established for dimension > 2 only, so the Nijenhuis "
            "residual here is a numerical observation, not a certified "
            "consequence of the coefficient relations")
    if s.rho is not None and s.lam_rule.startswith("case2"):
        notes.append(
            "holomorphic sectional curvature varies for the case-2 family; "
            "no constant-k check was run")

    passed = all(rec["pass"] for rec in checks)
    return VerificationReport(scenario=s.to_dict(), seed=s.seed,
                              checks=checks, notes=notes, passed=passed)


def _run_controls(s: Scenario, sf, fam: CoefficientFamily, rng,
                  t_ctrl: float) -> List[dict]:
    """Mutation controls at one admissible sample: each mutated family must
    produce a residual ABOVE the stated floor, proving the corresponding
    check has teeth."""
    x = _ball_point(rng, s.n)
    p = covector_with_energy(sf, x, t_ctrl, rng)
    pt = CotangentPoint(sf, x, p)
    point = {"x": [float(v) for v in x], "p": [float(v) for v in p],
             "t": float(t_ctrl)}
    out = []

    def add(name, value, floor):
        out.append({"name": name, "max_residual": float(value),
                    "tolerance": floor, "pass": bool(value > floor),
                    "worst_point": point})

    add("control_nijenhuis",
        nijenhuis_numeric(sf, fam.mutated(b1_offset=0.1), x, p),
        s.tol("control_nijenhuis"))
    if s.c != 0.0:
        add("control_metricity",
            metricity_residual(sf, fam, x, p, flip_block="S"),
            s.tol("control_metricity"))
        add("control_torsion",
            torsion_residual(sf, fam, x, p, flip_block="S"),
            s.tol("control_torsion"))
    elif np.abs(full_connection(pt, fam.at(pt.t))).max() > 1e-10:
        # flat base: the S block is symmetric, so only a Q flip moves the
        # metricity residual and no flip moves torsion
        add("control_metricity",
            metricity_residual(sf, fam, x, p, flip_block="Q"),
            s.tol("control_metricity"))
    # when the connection vanishes identically (flat base with constant
    # coefficients) there is no nonzero block to flip; no control emitted
    add("control_domega",
        domega_numeric(sf, fam.mutated(mu_offset=0.05), x, p),
        s.tol("control_domega"))
    bad = fam.mutated(c1_scale=1.02)
    st = build_structure(sf, bad, x, p)
    add("control_hermitian", hermitian_residual(st.G, st.J),
        s.tol("control_hermitian"))
    if s.rho is not None and s.c != 0.0:
        # scaling lambda keeps the structure Kaehler but moves Ricci off
        # rho G (on a flat base the lift stays Ricci-flat, so no signal)
        scaled = fam.mutated(lam_scale=1.1 * fam.lam_scale)
        diag = einstein_residual(pt, scaled.at(pt.t), s.rho)
        add("control_einstein", diag.max_residual, s.tol("control_einstein"))
    return out


# ------------------------------------------------------------------
# sweeps

_SWEEP_PARAMS = ("c", "rho", "t_max", "branch")

_SWEEP_COLUMNS = ["param", "value", "passed", "checks_failed",
                  "worst_check", "worst_ratio", "nijenhuis",
                  "connection_oracle", "curvature_oracle", "einstein",
                  "holomorphic_k"]


def _ratio(rec) -> float:
    tol = rec["tolerance"]
    if rec["name"].startswith("control_"):
        # a control is healthy when its residual exceeds the floor
        return 0.0 if rec["pass"] else 1.0
    if tol > 0.0:
        return rec["max_residual"] / tol
    return 0.0 if rec["pass"] else float("inf")


def sweep(s: Scenario, vary: str, grid) -> List[dict]:
    """Run the scenario once per grid value of one parameter and tabulate
    the outcome. vary is one of c, rho, t_max, branch."""
    if vary not in _SWEEP_PARAMS:
        raise ScenarioError(f"vary must be one of {_SWEEP_PARAMS}, got {vary!r}")
    grid = list(grid)
    if not grid:
        raise ScenarioError("sweep grid is empty")
    rows = []
    for value in grid:
        if vary == "branch":
            if value not in ("+", "-"):
                raise ScenarioError(f"branch values must be '+' or '-', got {value!r}")
            if not s.lam_rule.startswith("case2"):
                raise ScenarioError("branch sweeps need a case2 scenario")
            sv = replace(s, lam_rule="case2" + value)
        else:
            sv = replace(s, **{vary: float(value)})
        row = {"param": vary, "value": value}
        try:
            sv.validate()
            report = run_scenario(sv)
        except ScenarioError as exc:
            row.update({"passed": False, "checks_failed": -1,
                        "worst_check": f"scenario error: {exc}",
                        "worst_ratio": float("inf")})
            for col in _SWEEP_COLUMNS[6:]:
                row[col] = None
            rows.append(row)
            continue
        failed = [rec["name"] for rec in report.checks if not rec["pass"]]
        ratios = {rec["name"]: _ratio(rec) for rec in report.checks}
        worst_check = max(ratios, key=lambda k: ratios[k])
        row["passed"] = report.passed
        row["checks_failed"] = len(failed)
        row["worst_check"] = worst_check
        row["worst_ratio"] = ratios[worst_check]
        for col in ("nijenhuis", "connection_oracle", "curvature_oracle",
                    "einstein", "holomorphic_k"):
            try:
                row[col] = report.check(col)["max_residual"]
            except KeyError:
                row[col] = None
        rows.append(row)
    return rows


def sweep_to_csv(rows: List[dict]) -> str:
    """Render sweep rows as CSV with a fixed column order."""
    import csv
    import io

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=_SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if row.get(k) is None else row.get(k))
                         for k in _SWEEP_COLUMNS})
    return buf.getvalue()
