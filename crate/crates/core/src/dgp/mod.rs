//! Encompassing dynamic factor model, DGP drawing, simulation and population
//! estimands.

mod params;
mod population;
mod simulate;
mod spec;
pub mod synthetic;

pub use params::{load_dfm_params, DFMParameters, Policy, VariableInfo, SCHEMA_VERSION};
pub use population::{
    build_shock_column, complete_h, factor_irf, invertibility, irf_shape_stats,
    normalization_impact, observable_variance, state_space, summary_stats, true_irf, var_infinity,
    IRFTrue, StateSpace, SummaryStats, VarInfinity,
};
pub use simulate::{simulate_data, Dataset, DEFAULT_BURN_IN};
pub use spec::{calibrate_iv_noise, draw_dgp_spec, DGPSpec, IvParams, Scheme};
