"""Numerical toolkit for the inflow problem of a heat-conductive ideal gas
without viscosity: boundary-layer profiles and their decay rates, smoothed
expansion fans, superposed composite waves with source terms, and a
shifted-Lagrangian finite-difference solver with perturbation diagnostics.
"""

from .boundary_layer import (
    BlExistence,
    BlProfile,
    BlSetup,
    DecayKind,
    DecayReport,
    ExistenceCase,
    LayerSampler,
    ProfileGrid,
    WindowSubcase,
    classify_existence,
    integrate_profile,
    verify_decay,
)
from .composite import (
    CompositeWave,
    build_composite,
    connect_zm,
    hat_sample,
    hat_state_grid,
    sources,
    sources_grid,
    v_m_from_strength,
)
from .errors import ConfigError, InflowWavesError
from .gas import (
    EulerState,
    GasParams,
    LagState,
    Regime,
    RegionTag,
    boundary_condition_case,
    classify,
    mach_numbers,
    sound_speeds,
)
from .rarefaction import RareSetup, check_lemma22_bounds, fan_tail_cover, sample_smooth
from .scenario import (
    RunSetup,
    Scenario,
    classify_rows,
    load_scenario,
    materialize,
    scenario_from_dict,
)
from .solver import (
    Grid,
    NormHistory,
    NormRecord,
    PerturbationSpec,
    SimConfig,
    SimState,
    diagnostics,
    init,
    run,
    step,
)

__version__ = "0.1.0"

__all__ = [
    "BlExistence",
    "BlProfile",
    "BlSetup",
    "CompositeWave",
    "ConfigError",
    "DecayKind",
    "DecayReport",
    "EulerState",
    "ExistenceCase",
    "GasParams",
    "Grid",
    "InflowWavesError",
    "LagState",
    "LayerSampler",
    "NormHistory",
    "NormRecord",
    "PerturbationSpec",
    "ProfileGrid",
    "RareSetup",
    "Regime",
    "RegionTag",
    "RunSetup",
    "Scenario",
    "SimConfig",
    "SimState",
    "WindowSubcase",
    "boundary_condition_case",
    "build_composite",
    "check_lemma22_bounds",
    "classify",
    "classify_existence",
    "classify_rows",
    "connect_zm",
    "diagnostics",
    "fan_tail_cover",
    "hat_sample",
    "hat_state_grid",
    "init",
    "integrate_profile",
    "load_scenario",
    "mach_numbers",
    "materialize",
    "run",
    "sample_smooth",
    "scenario_from_dict",
    "sound_speeds",
    "sources",
    "sources_grid",
    "step",
    "v_m_from_strength",
    "verify_decay",
    "__version__",
]
