"""Many-to-many NOMA link-level simulator for vehicular platoons."""

from .allocation import (
    AllocationResult,
    EnumerationBudgetError,
    GpaConfig,
    chs_exhaustive_fpa,
    epa,
    evaluate_pa,
    fpa,
    gpa,
    o_chs_pa_oracle,
    opsa,
    pa_oracle,
    round_fractions_to_levels,
    solve_s_chs_pa,
)
from .channel import (
    ChannelMatrix,
    ChannelParams,
    PowerConfig,
    gain_power,
    knife_edge_loss_db,
    path_loss_amplitude,
    sample_channel,
)
from .harness import (
    OutputRecord,
    RunSpec,
    builtin_scenario,
    emit_csv,
    load_scenario,
    parse_scenario_file,
    run,
)
from .scenario import (
    BandwidthFactors,
    Message,
    PaMatrix,
    Scenario,
    SicConfig,
    bandwidth_factors,
)
from .schemes import (
    InfeasibleChsError,
    RateReport,
    compute_rates,
    dm_rates,
    oma_rates,
    sic_sinr,
    sum_rate,
    udm_rates,
    um_rates,
)
from .scfp import (
    ChAgent,
    FormationResult,
    ScfpConfig,
    ScfpMessage,
    run_formation,
)
from .topology import (
    ChSelection,
    LaneCluster,
    RoadConfig,
    ScTopology,
    Vehicle,
    VehicleDims,
    build_fig1_topology,
    distance,
    front_chs,
    md_chs,
    obstructors,
)

__version__ = "0.1.0"
