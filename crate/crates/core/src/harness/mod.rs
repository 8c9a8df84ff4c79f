//! Synthetic benchmarks: data generation, NMSE sweeps, C/K sensitivity,
//! timing, and Monte Carlo checks of the estimators' theory.
//!
//! Every random draw comes from a ChaCha8 stream keyed by the run seed and
//! the identity of the realization, so results are independent of thread
//! count and evaluation order.

mod checks;
mod data;
mod methods;
mod sweep;

pub use checks::{
    ks_distance, rmt_law_checks, spiked_observation, sure_unbiasedness,
    verify_asymptotic_optimality, AsymptoticCell, AsymptoticConfig, AsymptoticReport, LawCheck,
    RmtCheckConfig, SpikeFit, UnbiasednessReport, EDGE_TOL, KS_TOL, OVERLAP_TOL, SPIKE_REL_TOL,
};
pub use data::{
    gaussian_matrix, generate_problem, nmse, nmse_ratios, standard_error, stream_rng, stream_seed,
    TrialRng,
};
pub use methods::{Method, DEFAULT_C, DEFAULT_K};
pub use sweep::{
    default_c_values, default_k_values, run_sweep, run_sweep_with, sensitivity_sweep,
    timing_report, ExperimentGrid, NmseRow, NmseTable, RunOptions, SensitivityCell,
    SensitivityReport, TimingRow, TimingTable, DEFAULT_TRIALS, NMSE_COLUMNS,
};
