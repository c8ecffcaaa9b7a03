//! Monte Carlo experiments over drawn DGPs, results storage and the
//! bias/variance evaluation objects.

mod config;
mod metrics;
mod run;
mod store;

pub use config::{apply_override, DgpFilter, ExperimentConfig, LagRule};
pub use metrics::{
    aggregate_curves, best_method_map, curves_to_csv, headtohead_map, loss, map_to_csv,
    method_map_to_csv, CurvePoint, Statistic, TIE_TOLERANCE,
};
pub use run::{
    load_params, prepare_dgp, replication_seed, run_dgp, run_experiment, run_experiment_with,
    spec_seed, PreparedDgp, RunOptions, SUMMARY_LAGS, SUMMARY_T_REF,
};
pub use store::{
    checkpoint_read, checkpoint_write, AbortedDgp, CellMoments, DgpResult, MethodCells,
    ResultRow, ResultsStore, ResultsTable, CHECKPOINT_FORMAT_VERSION, RESULTS_HEADER,
    RESULTS_SCHEMA_VERSION,
};
