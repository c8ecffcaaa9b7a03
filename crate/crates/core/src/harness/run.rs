use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{DgpFilter, ExperimentConfig, LagRule};
use super::store::{
    checkpoint_read, checkpoint_write, AbortedDgp, CellMoments, DgpResult, MethodCells,
    ResultsStore,
};
use crate::dgp::{
    draw_dgp_spec, simulate_data, summary_stats, synthetic, true_irf, DFMParameters, DGPSpec,
    SummaryStats,
};
use crate::error::{Error, Result};
use crate::estimators::{estimate, select_lag_aic, EstimatorSettings};

/// VAR(infinity) truncation used for summary statistics.
pub const SUMMARY_LAGS: usize = 50;
/// Sample size used for the population IV first-stage F statistic.
pub const SUMMARY_T_REF: usize = 200;
/// Stream index reserved for drawing the DGP spec.
const SPEC_STREAM: u64 = u64::MAX;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep` of DGP `dgp_id`; depends only on the three inputs.
pub fn replication_seed(master_seed: u64, dgp_id: u64, rep: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ dgp_id) ^ rep)
}

pub fn spec_seed(master_seed: u64, dgp_id: u64) -> u64 {
    replication_seed(master_seed, dgp_id, SPEC_STREAM)
}

/// A drawn DGP with its population quantities.
#[derive(Debug, Clone)]
pub struct PreparedDgp {
    pub spec: DGPSpec,
    pub truth: Vec<f64>,
    pub scale: f64,
    pub summary: SummaryStats,
    pub rejected_draws: usize,
}

fn passes(filter: &DgpFilter, s: &SummaryStats) -> bool {
    filter.min_lag_tail_fraction.is_none_or(|m| s.lag_tail_fraction > m)
        && filter.max_invertibility.is_none_or(|m| s.invertibility < m)
}

/// Draws DGP `dgp_id`, redrawing from the same stream until the filter passes.
pub fn prepare_dgp(params: &DFMParameters, config: &ExperimentConfig, dgp_id: usize) -> Result<PreparedDgp> {
    let policy = config.policy_for(dgp_id);
    let mut rng = ChaCha8Rng::seed_from_u64(spec_seed(config.master_seed, dgp_id as u64));
    let attempts = if config.filter.is_active() {
        config.max_filter_draws
    } else {
        1
    };
    for rejected in 0..attempts {
        let spec = draw_dgp_spec(params, policy, config.scheme, config.iv_r2(policy), &mut rng)?;
        let summary = summary_stats(params, &spec, config.h_bar, SUMMARY_LAGS, SUMMARY_T_REF)?;
        if !passes(&config.filter, &summary) {
            continue;
        }
        let truth = true_irf(params, &spec, config.h_bar)?.relative();
        let scale = (truth.iter().map(|v| v * v).sum::<f64>() / truth.len() as f64).sqrt();
        return Ok(PreparedDgp {
            spec,
            truth,
            scale,
            summary,
            rejected_draws: rejected,
        });
    }
    Err(Error::CategoryExhausted(format!(
        "no DGP passed the filter in {attempts} draws"
    )))
}

/// Estimates of every configured method on one replication; `None` marks a failure.
fn replicate(
    params: &DFMParameters,
    config: &ExperimentConfig,
    spec: &DGPSpec,
    settings: &EstimatorSettings,
    seed: u64,
) -> Vec<Option<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = match simulate_data(params, spec, config.t, config.burn_in, &mut rng) {
        Ok(d) => d,
        Err(e) => {
            log::warn!("simulation failed: {e}");
            return vec![None; config.methods.len()];
        }
    };
    let mut settings = settings.clone();
    if config.lag_rule == LagRule::AicFloor {
        match select_lag_aic(&data.observations, config.p_max_aic) {
            Ok(p) => settings.p = p.max(config.p),
            Err(e) => {
                log::warn!("lag selection failed: {e}");
                return vec![None; config.methods.len()];
            }
        }
    }
    config
        .methods
        .iter()
        .map(|&m| match estimate(m, &data, &settings) {
            Ok(est) if est.values.iter().all(|v| v.is_finite()) => Some(est.values),
            Ok(_) => {
                log::debug!("{} returned non-finite values", m.as_str());
                None
            }
            Err(e) => {
                log::debug!("{} failed: {e}", m.as_str());
                None
            }
        })
        .collect()
}

/// Runs all replications of one prepared DGP. Replications run in parallel on
/// the current rayon pool and are aggregated in replication order.
pub fn run_dgp(
    params: &DFMParameters,
    config: &ExperimentConfig,
    dgp_id: usize,
    prepared: &PreparedDgp,
) -> DgpResult {
    let settings = config.estimator_settings();
    let draws: Vec<Vec<Option<Vec<f64>>>> = (0..config.n_mc)
        .into_par_iter()
        .map(|rep| {
            let seed = replication_seed(config.master_seed, dgp_id as u64, rep as u64);
            replicate(params, config, &prepared.spec, &settings, seed)
        })
        .collect();
    let n_h = config.h_bar + 1;
    let methods = config
        .methods
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let ok: Vec<&Vec<f64>> = draws.iter().filter_map(|d| d[k].as_ref()).collect();
            let n_fail = config.n_mc - ok.len();
            if n_fail > 0 {
                log::info!("DGP {dgp_id}: {} failed in {n_fail} replications", method.as_str());
            }
            let horizons = (0..n_h)
                .map(|h| {
                    let vals: Vec<f64> = ok.iter().map(|v| v[h]).collect();
                    CellMoments::from_draws(&vals, prepared.truth[h], n_fail)
                })
                .collect();
            MethodCells { method, horizons }
        })
        .collect();
    DgpResult {
        dgp_id,
        policy: prepared.spec.policy,
        scheme: config.scheme,
        spec: prepared.spec.clone(),
        truth: prepared.truth.clone(),
        scale: prepared.scale,
        summary: prepared.summary.clone(),
        rejected_draws: prepared.rejected_draws,
        methods,
    }
}

/// Execution controls that do not affect results.
#[derive(Debug, Clone, Default)]
pub struct RunOptions<'a> {
    /// Checkpoint file written after each DGP and resumed from if present.
    pub checkpoint: Option<&'a Path>,
    /// Stop after this many newly completed DGPs (used to exercise resumption).
    pub stop_after: Option<usize>,
}

pub fn load_params(config: &ExperimentConfig) -> Result<DFMParameters> {
    match &config.params_path {
        Some(p) => crate::dgp::load_dfm_params(p),
        None => synthetic::bundled(),
    }
}

/// Runs the experiment with the configured worker count. Results are
/// identical for any worker count.
pub fn run_experiment_with(
    params: &DFMParameters,
    config: &ExperimentConfig,
    opts: &RunOptions,
) -> Result<ResultsStore> {
    config.validate()?;
    let fingerprint = config.fingerprint();
    let mut store = match opts.checkpoint {
        Some(path) if path.exists() => {
            let store = checkpoint_read(path)?;
            if store.config_fingerprint != fingerprint {
                return Err(Error::Config(format!(
                    "checkpoint {} was written by a different configuration",
                    path.display()
                )));
            }
            log::info!("resuming from {} with {} DGPs done", path.display(), store.dgps.len());
            store
        }
        _ => ResultsStore::new(fingerprint),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let mut completed = 0;
    for dgp_id in 0..config.n_dgps {
        if store.is_done(dgp_id) {
            continue;
        }
        if opts.stop_after.is_some_and(|n| completed >= n) {
            break;
        }
        match prepare_dgp(params, config, dgp_id) {
            Ok(prepared) => {
                let result = pool.install(|| run_dgp(params, config, dgp_id, &prepared));
                store.dgps.push(result);
            }
            Err(e) => {
                log::error!("DGP {dgp_id} aborted: {e}");
                store.aborted.push(AbortedDgp {
                    dgp_id,
                    message: e.to_string(),
                });
            }
        }
        store.dgps.sort_by_key(|d| d.dgp_id);
        store.aborted.sort_by_key(|a| a.dgp_id);
        if let Some(path) = opts.checkpoint {
            checkpoint_write(&store, path)?;
        }
        completed += 1;
        log::info!("DGP {dgp_id} done ({}/{})", store.dgps.len(), config.n_dgps);
    }
    Ok(store)
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultsStore> {
    let params = load_params(config)?;
    std::fs::create_dir_all(&config.output_dir)?;
    let checkpoint = config.output_dir.join("checkpoint.json");
    run_experiment_with(
        &params,
        config,
        &RunOptions {
            checkpoint: Some(&checkpoint),
            stop_after: None,
        },
    )
}
