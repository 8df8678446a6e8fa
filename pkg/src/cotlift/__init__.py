"""Natural lifted Kähler structures on cotangent bundles of space forms,
with finite-difference verification of the closed-form geometry."""

from .bundle_structures import (
    CotangentPoint,
    StructureAtPoint,
    build_structure,
    covector_with_energy,
)
from .coefficients import (
    COEFFICIENT_PRESETS,
    CoefficientFamily,
    CoefficientSet,
    preset_family,
    preset_window,
)
from .curvature_ricci import (
    curvature_blocks,
    einstein_residual,
    holomorphic_sectional_curvature,
    ricci_blocks,
)
from .errors import ScenarioError
from .harness import (
    SCENARIO_PRESETS,
    Scenario,
    VerificationReport,
    load_scenario,
    run_scenario,
    sweep,
    sweep_to_csv,
)
from .jets import FamilySpec, Jet3, jet_const, jet_var
from .space_form import SpaceForm

__version__ = "0.1.0"

__all__ = [
    "COEFFICIENT_PRESETS",
    "CoefficientFamily",
    "CoefficientSet",
    "CotangentPoint",
    "FamilySpec",
    "Jet3",
    "SCENARIO_PRESETS",
    "Scenario",
    "ScenarioError",
    "SpaceForm",
    "StructureAtPoint",
    "VerificationReport",
    "build_structure",
    "covector_with_energy",
    "curvature_blocks",
    "einstein_residual",
    "holomorphic_sectional_curvature",
    "jet_const",
    "jet_var",
    "load_scenario",
    "preset_family",
    "preset_window",
    "ricci_blocks",
    "run_scenario",
    "sweep",
    "sweep_to_csv",
    "__version__",
]
