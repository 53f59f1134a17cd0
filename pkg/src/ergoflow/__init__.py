"""Ergotropy bounds, thermal-operation polytopes and open-cycle heat engines."""

from .core import (
    BETA_INF,
    DiagonalState,
    DomainError,
    ErgoflowError,
    Spectrum,
    energy,
    entropy,
    free_energy,
    gibbs_state,
    log_partition,
    relative_entropy,
)
from .engine import (
    EngineConfig,
    EngineReport,
    efficiency,
    evaluate_engine,
    heat,
    minimal_coupling_reference,
    optimize,
    qubit_closed_form,
    qutrit_analytics,
    work,
)
from .ergotropy import (
    ErgotropyDecomposition,
    beta_star,
    bound_single_system,
    bound_with_bath,
    decompose,
    ergotropy,
    extraction_bound,
    passive_state,
)
from .oscillator import (
    OscillatorConfig,
    frequency_for_shift,
    max_energy_final,
    saturating_map_truncated,
    saturation_sweep,
    shift_parameter,
)
from .thermomaj import (
    BetaOrder,
    DimensionCapError,
    ThermalProcessMatrix,
    ThermoCurve,
    apply_process,
    beta_order,
    curve,
    enumerate_extremal_states,
    max_energy_state,
    thermomajorizes,
    tight_extremal_state,
)

__version__ = "0.1.0"
