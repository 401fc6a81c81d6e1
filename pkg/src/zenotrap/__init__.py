"""Dynamics of a trapped ion whose electronic ground level is watched continuously.

A two-level ion in a harmonic trap, driven on a motional sideband, relaxes
into measurement-damped sideband oscillations: populations obey a reduced
resonant-coupling model whose every manifold decays at kappa/4, while the
measurement itself feeds no energy into the motion.  This package provides

* ``hilbert`` — truncated two-level-times-oscillator state space, nonlinear
  sideband coupling strengths, state builders, observables;
* ``analytic`` — the closed-form channels (ground-level population, mean
  position, mean energy), branch-resolved manifold frequencies, asymptotics;
* ``dynamics`` — the master-equation integrator (reduced and full coupling);
* ``config``/``scenario``/``cli`` — deterministic scenario files, runs,
  kappa sweeps, comparisons, CSV/JSON/figure artifacts.

Units: hbar = 1; energies in units of the trap quantum, positions in the
ground-state width x0, momenta in p0 = hbar/(2 x0).
"""

from .analytic import (
    CRITICAL,
    HYPERBOLIC,
    OSCILLATORY,
    BranchedFrequency,
    EquipartitionReport,
    ManifoldFrequencies,
    PositionVarianceAsymptote,
    asymptotic_mean,
    asymptotic_position_variance,
    damped_envelope,
    envelope,
    equipartition_check,
    frequencies,
    kappa_crit,
    mean_energy,
    mean_position,
    p_down,
    p_down_fock,
)
from .config import ScenarioConfig, dumps, load, loads, parse_mode, parse_state
from .dynamics import (
    CHANNEL_UNITS,
    FullCoupling,
    IntegratorConfig,
    ReducedJCM,
    StateDiagnostics,
    TimeSeries,
    full_rhs,
    integrate,
    jcm_rhs,
    sanity_report,
)
from .errors import ConfigError, StiffnessError, TruncationError, ZenotrapError
from .hilbert import (
    DEFAULT_TAIL_BUDGET,
    SPIN_DOWN,
    SPIN_UP,
    CoherentState,
    ExplicitState,
    FockState,
    MotionalObservable,
    RabiTable,
    ThermalState,
    TrapParams,
    VibronicDensityMatrix,
    build_ladder,
    captured_probability,
    compose_initial,
    coupling_matrix,
    default_dim_fock,
    energy_obs,
    expectation,
    ground_population,
    initial_state,
    mean_occupation,
    momentum_obs,
    momentum_sq_obs,
    number_obs,
    number_op,
    parity_obs,
    position_obs,
    position_sq_obs,
    rabi_frequency,
    rabi_table,
    reduce_internal,
    reduce_motional,
    required_dimension,
)
from .scenario import (
    ChannelComparison,
    CompareOutcome,
    ComparisonReport,
    DriftCheck,
    EnvelopeFit,
    RunResult,
    SweepRow,
    compare_documents,
    model_decay_rate,
    peak_decay_rate,
    reference_numbers,
    run_scenario,
    sweep_kappa,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
