"""Two-way time transfer ranging and synchronization simulation lab."""

from ._twttsim import (  # noqa: F401
    ChirpParams,
    ClockParams,
    LinkParams,
    ScenarioConfig,
    SnrConvention,
    SweepResult,
    TimestampFrame,
    TwttMeasurement,
    TwttSolution,
    __version__,
    add_awgn,
    decode_frame,
    emit_results,
    encode_frame,
    estimate_toa,
    fractional_delay,
    generate_chirp,
    global_from_local,
    initial_offset,
    local_from_global,
    monte_carlo_sweep,
    offset,
    rms_bandwidth,
    run_exchange_solution,
    skew_ratio,
    toa_crlb_std,
    tof,
    tof_crlb_std,
    true_relative_skew,
)
