"""Counterfactual computation protocols: simulation, histories and verdicts."""

from .amplitudes import (
    EPS_DROP,
    GateSpec,
    StateVector,
    amplitude,
    apply_gate,
    hadamard,
    linear,
    make_state,
    norm_sq,
    oracle_computer,
    phase_oracle,
    project,
    register_increment,
    rotation,
)
from .histories import (
    EPS_CANCEL,
    MJ_RELABEL,
    History,
    HistoryTable,
    OutcomeToken,
    PathToken,
    coarse_grain,
    enumerate_histories,
    find_cancelling_subsets,
    history_tables,
    parse_outcomes,
    table_from_csv,
    total_vector,
)
from .protocols import (
    ChainedZenoParams,
    Checkpoint,
    EraserParams,
    Gate,
    Measurement,
    Protocol,
    ProtocolError,
    SimpleCfcParams,
    build_chained_zeno,
    build_interferometer,
    build_simple_cfc,
    build_zeno,
    dump_protocol,
    network_angles,
    parse_protocol,
    run_protocol,
)
from .stats import ZenoStats, chained_probabilities, scan, zeno_probabilities
from .tables import emit_fig8, emit_table
from .verdicts import (
    AMBIGUOUS,
    COUNTERFACTUAL,
    NOT_COUNTERFACTUAL,
    FluxReport,
    Region,
    Verdict,
    computer_exit_region,
    dark_path_region,
    dark_port_region,
    flux_verdict,
    hosten_verdict,
    mj_verdict,
    switch_port_region,
    verdict_matrix,
)

__version__ = "0.1.0"
