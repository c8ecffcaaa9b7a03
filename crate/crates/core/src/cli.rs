//! Command-line front end. Exit codes: 0 success, 2 configuration error,
//! 3 input-file error, 4 runtime failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analytic::{asy_lp, asy_var, indifference_weight, SimpleDGPParams};
use crate::error::Error;
use crate::harness::{
    aggregate_curves, best_method_map, curves_to_csv, headtohead_map, load_params, map_to_csv,
    method_map_to_csv, prepare_dgp, run_experiment, ExperimentConfig, ResultsTable, Statistic,
};
use crate::numerics::quantile_sorted;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_RUNTIME: i32 = 4;

pub const WORKERS_ENV: &str = "IRFLAB_WORKERS";

/// Horizons listed in the plain-text report.
pub const REPORT_HORIZONS: [usize; 6] = [0, 4, 8, 12, 16, 19];

#[derive(Debug, Parser)]
#[command(name = "irflab", version, about = "LP vs. VAR impulse-response Monte Carlo laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Configuration override `KEY=VALUE`; dotted keys address nested tables.
    #[arg(long = "override", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Worker threads (falls back to IRFLAB_WORKERS, then the config).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Master seed (overrides `master_seed`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw DGPs and write their specifications and summary statistics.
    Dgp(CommonArgs),
    /// Run the Monte Carlo experiment.
    Run(CommonArgs),
    /// Evaluate the closed-form asymptotic moments on a grid.
    Analytic(CommonArgs),
    /// Summarize a results file.
    Report {
        /// Results CSV (default: `<out>/results.csv`).
        results: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

/// Grid for the `analytic` subcommand (`[analytic]` table of the config file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticGrid {
    pub rho: Vec<f64>,
    pub alpha: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub h_max: usize,
}

impl Default for AnalyticGrid {
    fn default() -> Self {
        AnalyticGrid {
            rho: vec![0.2, 0.6, 0.9],
            alpha: vec![1.0, 5.0, 10.0],
            sigma2: vec![1.0],
            h_max: 20,
        }
    }
}

/// Error tagged with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, e: impl std::fmt::Display) -> CliError {
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn split_analytic(overrides: &[String]) -> (Vec<String>, Vec<String>) {
    overrides
        .iter()
        .cloned()
        .partition(|o| !o.trim_start().starts_with("analytic."))
}

fn read_config_text(path: Option<&Path>) -> CliResult<String> {
    match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::new(EXIT_CONFIG, format!("cannot read {}: {e}", p.display()))),
        None => Ok(String::new()),
    }
}

/// Loads the experiment configuration with command-line precedence:
/// flags > `--override` > environment (workers only) > file > defaults.
pub fn resolve_config(common: &CommonArgs) -> CliResult<ExperimentConfig> {
    let text = read_config_text(common.config.as_deref())?;
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::new(EXIT_CONFIG, format!("invalid TOML: {e}")))?;
    table.remove("analytic");
    let (experiment, _) = split_analytic(&common.overrides);
    let mut cfg = ExperimentConfig::from_toml_str(&table.to_string(), &experiment)
        .map_err(|e| CliError::new(EXIT_CONFIG, e))?;
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    } else if let Ok(v) = std::env::var(WORKERS_ENV) {
        cfg.workers = v
            .trim()
            .parse()
            .map_err(|_| CliError::new(EXIT_CONFIG, format!("{WORKERS_ENV}=`{v}` is not a count")))?;
    }
    if cfg.workers == 0 {
        return Err(CliError::new(EXIT_CONFIG, "workers must be positive"));
    }
    Ok(cfg)
}

pub fn resolve_analytic_grid(common: &CommonArgs) -> CliResult<AnalyticGrid> {
    let text = read_config_text(common.config.as_deref())?;
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::new(EXIT_CONFIG, format!("invalid TOML: {e}")))?;
    let mut grid_table = match table.get("analytic") {
        Some(toml::Value::Table(t)) => t.clone(),
        Some(_) => return Err(CliError::new(EXIT_CONFIG, "`analytic` must be a table")),
        None => toml::Table::new(),
    };
    let (_, analytic) = split_analytic(&common.overrides);
    for ov in analytic {
        let stripped = ov.trim_start().trim_start_matches("analytic.").to_string();
        crate::harness::apply_override(&mut grid_table, &stripped)
            .map_err(|e| CliError::new(EXIT_CONFIG, e))?;
    }
    let grid: AnalyticGrid = toml::Value::Table(grid_table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::new(EXIT_CONFIG, format!("analytic grid: {e}")))?;
    if grid.rho.is_empty() || grid.alpha.is_empty() || grid.sigma2.is_empty() {
        return Err(CliError::new(EXIT_CONFIG, "analytic grid lists must be nonempty"));
    }
    if grid.rho.iter().any(|r| !(r.abs() < 1.0))
        || grid.sigma2.iter().any(|s| !(*s > 0.0))
        || grid.alpha.iter().any(|a| !a.is_finite())
    {
        return Err(CliError::new(
            EXIT_CONFIG,
            "analytic grid needs |rho| < 1, sigma2 > 0 and finite alpha",
        ));
    }
    Ok(grid)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::new(EXIT_RUNTIME, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| CliError::new(EXIT_RUNTIME, format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn input_or_runtime(e: Error) -> CliError {
    match e {
        Error::Config(_) => CliError::new(EXIT_CONFIG, e),
        Error::Schema { .. } | Error::Corrupt { .. } | Error::Io(_) => CliError::new(EXIT_INPUT, e),
        _ => CliError::new(EXIT_RUNTIME, e),
    }
}

const SUMMARY_FIELDS: [&str; 9] = [
    "lrv_ratio",
    "largest_eigenvalue",
    "lag_tail_fraction",
    "invertibility",
    "iv_f_stat",
    "n_interior_extrema",
    "horizon_max_abs",
    "avg_over_max_abs",
    "quadratic_r2",
];

pub fn cmd_dgp(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    let params = load_params(cfg).map_err(|e| CliError::new(EXIT_INPUT, e))?;
    let mut specs = String::from(
        "dgp_id,policy,scheme,variables,variable_indices,response,normalization,rejected_draws\n",
    );
    let mut summary = format!("dgp_id,{}\n", SUMMARY_FIELDS.join(","));
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); SUMMARY_FIELDS.len()];
    for dgp_id in 0..cfg.n_dgps {
        let d = prepare_dgp(&params, cfg, dgp_id).map_err(|e| CliError::new(EXIT_RUNTIME, e))?;
        let names: Vec<&str> = d
            .spec
            .variable_indices
            .iter()
            .map(|&i| params.variables[i].name.as_str())
            .collect();
        let idx: Vec<String> = d.spec.variable_indices.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(
            specs,
            "{dgp_id},{},{},{},{},{},{},{}",
            d.spec.policy.as_str(),
            d.spec.scheme.as_str(),
            names.join(";"),
            idx.join(";"),
            d.spec.response,
            d.spec.normalization,
            d.rejected_draws
        );
        let s = &d.summary;
        let vals = [
            s.lrv_ratio,
            s.largest_eigenvalue,
            s.lag_tail_fraction,
            s.invertibility,
            s.iv_f_stat,
            s.n_interior_extrema as f64,
            s.horizon_max_abs as f64,
            s.avg_over_max_abs,
            s.quadratic_r2,
        ];
        let _ = write!(summary, "{dgp_id}");
        for (k, v) in vals.iter().enumerate() {
            let _ = write!(summary, ",{v}");
            columns[k].push(*v);
        }
        summary.push('\n');
    }
    let mut quantiles = String::from("statistic,min,p10,p25,p50,p75,p90,max\n");
    for (name, mut col) in SUMMARY_FIELDS.iter().zip(columns) {
        col.sort_by(f64::total_cmp);
        let _ = write!(quantiles, "{name}");
        for q in [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
            let _ = write!(quantiles, ",{}", quantile_sorted(&col, q));
        }
        quantiles.push('\n');
    }
    Ok(vec![
        write_file(&cfg.output_dir, "dgp_specs.csv", &specs)?,
        write_file(&cfg.output_dir, "dgp_summary.csv", &summary)?,
        write_file(&cfg.output_dir, "dgp_summary_quantiles.csv", &quantiles)?,
    ])
}

/// Curves, head-to-head maps and the best-method map for one table; `suffix`
/// distinguishes per-policy outputs.
fn write_evaluation(
    cfg: &ExperimentConfig,
    table: &ResultsTable,
    suffix: &str,
) -> CliResult<Vec<PathBuf>> {
    let mut files = Vec::new();
    for stat in Statistic::ALL {
        let curves = aggregate_curves(table, stat);
        files.push(write_file(
            &cfg.output_dir,
            &format!("curves_{}{suffix}.csv", stat.as_str()),
            &curves_to_csv(&curves),
        )?);
    }
    for (a, b) in cfg.headtohead_pairs() {
        let map = headtohead_map(table, a, b, &cfg.omega_grid);
        files.push(write_file(
            &cfg.output_dir,
            &format!("headtohead_{}_vs_{}{suffix}.csv", a.as_str(), b.as_str()),
            &map_to_csv(&map, &cfg.omega_grid),
        )?);
    }
    let best = best_method_map(table, &cfg.omega_grid);
    files.push(write_file(
        &cfg.output_dir,
        &format!("best_method{suffix}.csv"),
        &method_map_to_csv(&best, &cfg.omega_grid),
    )?);
    Ok(files)
}

pub fn cmd_run(cfg: &ExperimentConfig) -> CliResult<Vec<PathBuf>> {
    if let Some(p) = &cfg.params_path {
        crate::dgp::load_dfm_params(p).map_err(|e| CliError::new(EXIT_INPUT, e))?;
    }
    let store = run_experiment(cfg).map_err(input_or_runtime)?;
    let table = store.table();
    let mut files = vec![write_file(&cfg.output_dir, "results.csv", &table.to_csv())?];
    if !table.rows.is_empty() {
        files.extend(write_evaluation(cfg, &table, "")?);
        if cfg.per_policy {
            for &policy in &cfg.policies {
                let sub = table.filter_policy(policy);
                if !sub.rows.is_empty() {
                    files.extend(write_evaluation(cfg, &sub, &format!("_{}", policy.as_str()))?);
                }
            }
        }
    }
    if !store.aborted.is_empty() {
        let ids: Vec<String> = store.aborted.iter().map(|a| a.dgp_id.to_string()).collect();
        return Err(CliError::new(
            EXIT_RUNTIME,
            format!("DGPs aborted: {} (partial results written)", ids.join(", ")),
        ));
    }
    Ok(files)
}

pub fn cmd_analytic(grid: &AnalyticGrid, out: &Path) -> CliResult<Vec<PathBuf>> {
    let mut moments =
        String::from("rho,sigma2,alpha,h,abias_lp,avar_lp,abias_var,avar_var\n");
    let mut indiff = String::from("rho,sigma2,alpha,h,omega_star\n");
    for &rho in &grid.rho {
        for &sigma2 in &grid.sigma2 {
            for &alpha in &grid.alpha {
                // T only enters the simulator.
                let p = SimpleDGPParams::new(rho, sigma2, alpha, 1)
                    .map_err(|e| CliError::new(EXIT_CONFIG, e))?;
                for h in 0..=grid.h_max {
                    let lp = asy_lp(&p, h);
                    let var = if h == 0 { lp } else { asy_var(&p, h).map_err(|e| CliError::new(EXIT_RUNTIME, e))? };
                    let _ = writeln!(
                        moments,
                        "{rho},{sigma2},{alpha},{h},{},{},{},{}",
                        lp.abias, lp.avar, var.abias, var.avar
                    );
                    if h >= 2 {
                        let cell = indifference_weight(&p, h)
                            .map(|w| w.to_string())
                            .unwrap_or_default();
                        let _ = writeln!(indiff, "{rho},{sigma2},{alpha},{h},{cell}");
                    }
                }
            }
        }
    }
    Ok(vec![
        write_file(out, "analytic_moments.csv", &moments)?,
        write_file(out, "indifference.csv", &indiff)?,
    ])
}

pub fn cmd_report(results: &Path, out: &Path) -> CliResult<Vec<PathBuf>> {
    let text = std::fs::read_to_string(results).map_err(|e| {
        CliError::new(EXIT_INPUT, format!("cannot read {}: {e}", results.display()))
    })?;
    let table = ResultsTable::from_csv(&text).map_err(|e| CliError::new(EXIT_INPUT, e))?;
    if table.rows.is_empty() {
        return Err(CliError::new(EXIT_INPUT, format!("{} has no rows", results.display())));
    }
    let curves: Vec<_> = Statistic::ALL
        .iter()
        .map(|&s| (s, aggregate_curves(&table, s)))
        .collect();
    let mut long = String::from("method,horizon,statistic,value,n_dgps\n");
    for (stat, points) in &curves {
        for p in points {
            let _ = writeln!(
                long,
                "{},{},{},{},{}",
                p.method.as_str(),
                p.horizon,
                stat.as_str(),
                p.value.map(|v| v.to_string()).unwrap_or_default(),
                p.n_dgps
            );
        }
    }
    let lookup = |stat: Statistic, method, h| {
        curves
            .iter()
            .find(|(s, _)| *s == stat)
            .and_then(|(_, pts)| pts.iter().find(|p| p.method == method && p.horizon == h))
            .and_then(|p| p.value)
    };
    let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"));
    let mut summary = format!(
        "Results: {} DGPs, {} methods\nMedian across DGPs of |bias| and std, relative to the DGP scale\n",
        table.dgp_ids().len(),
        table.methods().len()
    );
    let h_max = table.max_horizon().unwrap_or(0);
    for method in table.methods() {
        let _ = writeln!(summary, "\n[{}]", method.as_str());
        let _ = writeln!(summary, "{:>8} {:>12} {:>12}", "horizon", "abs_bias", "std");
        for h in REPORT_HORIZONS.iter().copied().filter(|&h| h <= h_max) {
            let _ = writeln!(
                summary,
                "{:>8} {:>12} {:>12}",
                h,
                fmt(lookup(Statistic::AbsBias, method, h)),
                fmt(lookup(Statistic::Std, method, h))
            );
        }
    }
    Ok(vec![
        write_file(out, "summary.txt", &summary)?,
        write_file(out, "report_long.csv", &long)?,
    ])
}

fn dispatch(cli: Cli) -> CliResult<Vec<PathBuf>> {
    match cli.command {
        Command::Dgp(c) => cmd_dgp(&resolve_config(&c)?),
        Command::Run(c) => cmd_run(&resolve_config(&c)?),
        Command::Analytic(c) => {
            let grid = resolve_analytic_grid(&c)?;
            let out = c.out.clone().unwrap_or_else(|| ExperimentConfig::default().output_dir);
            cmd_analytic(&grid, &out)
        }
        Command::Report { results, common } => {
            let out = match &common.out {
                Some(o) => o.clone(),
                None => resolve_config(&common)?.output_dir,
            };
            let results = results.unwrap_or_else(|| out.join("results.csv"));
            cmd_report(&results, &out)
        }
    }
}

/// Parses arguments, runs the subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
