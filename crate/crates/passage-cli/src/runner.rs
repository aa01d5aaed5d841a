//! Subcommand implementations: wire the core estimators together, collect
//! rows, and emit the CSV + manifest pair.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use passage_core::cgf::{cgf_profile, regime_report, solve_slope, summarize};
use passage_core::estimators::{
    estimate_c_tau, estimate_cm_goldie, prob_exceedance_forward, prob_passage, scaled_horizon,
    tail_fit, Constants, Estimate, SampleCfg,
};
use passage_core::model::Family;
use passage_core::numerics::normal_sf;
use passage_core::process::simulate_path;
use passage_core::rng::stream_rng;
use passage_core::{Executor, PairLaw, Regime};

use crate::config::ExperimentConfig;
use crate::output::{float_field, Manifest, Table};
use crate::{CliError, RayonExecutor};

/// Per-step rows are written up to this path length; longer paths emit
/// only their endpoint.
const FULL_PATH_ROWS: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Analyze,
    Simulate,
    Estimate,
    Compare,
    Tail,
    Regimes,
    Petrov,
    Duality,
}

impl Subcommand {
    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Analyze => "analyze",
            Subcommand::Simulate => "simulate",
            Subcommand::Estimate => "estimate",
            Subcommand::Compare => "compare",
            Subcommand::Tail => "tail",
            Subcommand::Regimes => "regimes",
            Subcommand::Petrov => "petrov",
            Subcommand::Duality => "duality",
        }
    }
}

pub struct RunArtifacts {
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Stream ids are partitioned per task so no two estimator calls within a
/// run share a stream.
fn task_cfg(config: &ExperimentConfig, task: u64) -> SampleCfg {
    SampleCfg::new(config.seed)
        .with_stream(task << 32)
        .with_chunks(config.run.n_chunks)
}

/// Execute one subcommand against a validated configuration.
pub fn run(
    subcommand: Subcommand,
    config: &ExperimentConfig,
    out_dir: &Path,
    threads: usize,
) -> Result<RunArtifacts, CliError> {
    let started = Instant::now();
    let law = config.build_law()?;
    let exec = RayonExecutor;

    let (table, summary) = match subcommand {
        Subcommand::Analyze => analyze(&law, config)?,
        Subcommand::Simulate => simulate(&law, config)?,
        Subcommand::Estimate => estimate(&law, config, &exec)?,
        Subcommand::Compare => compare(&law, config, &exec)?,
        Subcommand::Tail => tail(&law, config, &exec)?,
        Subcommand::Regimes => regimes(&law, config)?,
        Subcommand::Petrov => petrov(&law, config)?,
        Subcommand::Duality => duality(&law, config, &exec)?,
    };

    std::fs::create_dir_all(out_dir)?;
    let csv_name = config
        .output
        .csv
        .clone()
        .unwrap_or_else(|| format!("{}.csv", subcommand.name()));
    let manifest_name = config
        .output
        .manifest
        .clone()
        .unwrap_or_else(|| String::from("manifest.json"));
    let csv_path = out_dir.join(csv_name);
    let manifest_path = out_dir.join(manifest_name);

    table.write_to(&csv_path)?;
    let manifest = Manifest {
        subcommand: subcommand.name().to_string(),
        seed: config.seed,
        threads,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_secs: started.elapsed().as_secs_f64(),
        generated_unix_ms: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_millis())
            .unwrap_or(0),
        config: config.clone(),
        summary,
    };
    manifest.write_to(&manifest_path)?;
    Ok(RunArtifacts {
        csv_path,
        manifest_path,
    })
}

fn require_taus(config: &ExperimentConfig) -> Result<&[f64], CliError> {
    if config.run.tau.is_empty() {
        return Err(CliError::Config(String::from(
            "this subcommand needs at least one tau in [run]",
        )));
    }
    Ok(&config.run.tau)
}

fn require_us(config: &ExperimentConfig) -> Result<&[f64], CliError> {
    if config.run.u.is_empty() {
        return Err(CliError::Config(String::from(
            "this subcommand needs at least one u in [run]",
        )));
    }
    Ok(&config.run.u)
}

fn analyze(
    law: &PairLaw,
    config: &ExperimentConfig,
) -> Result<(Table, Option<serde_json::Value>), CliError> {
    let taus = require_taus(config)?;
    let mut table = Table::new(&[
        "tau",
        "alpha",
        "Lambda_alpha",
        "mu",
        "sigma2",
        "I_tau",
        "regime",
    ]);
    let mut xi_rho = None;
    for &tau in taus {
        let s = summarize(law, tau)?;
        let p = cgf_profile(law, s.alpha)?;
        xi_rho.get_or_insert((s.xi, s.rho));
        table.push(vec![
            float_field(tau),
            float_field(s.alpha),
            float_field(p.cgf),
            float_field(p.mean),
            float_field(p.variance),
            float_field(s.rate),
            s.regime.as_str().to_string(),
        ]);
    }
    let summary = xi_rho.map(|(xi, rho)| json!({ "xi": xi, "rho": rho }));
    Ok((table, summary))
}

fn simulate(
    law: &PairLaw,
    config: &ExperimentConfig,
) -> Result<(Table, Option<serde_json::Value>), CliError> {
    let mut table = Table::new(&[
        "path", "n", "Pi_n", "S_n", "Y_n", "Ybar_n", "M_n", "Ystar_n", "Mstar_n",
    ]);
    let steps = config.run.path_steps;
    let full_rows = steps <= FULL_PATH_ROWS;
    for path in 0..config.run.n_paths {
        let mut rng = stream_rng(config.seed, path << 32);
        let records = if full_rows {
            simulate_path(law, steps, &mut rng)?
        } else {
            // long paths stream through O(1) state and emit the endpoint
            let mut state = passage_core::process::PathState::new();
            for _ in 0..steps {
                let (a, b) = law.sample_pair(&mut rng);
                state.step(a, b);
            }
            vec![state.record()]
        };
        for r in &records {
            table.push(vec![
                path.to_string(),
                r.n.to_string(),
                float_field(r.product),
                float_field(r.log_product),
                float_field(r.backward),
                float_field(r.backward_abs),
                float_field(r.max_backward),
                float_field(r.forward),
                float_field(r.forward_reflected),
            ]);
        }
    }
    Ok((table, None))
}

const ESTIMATE_HEADER: [&str; 9] = [
    "u",
    "tau",
    "n_u",
    "method",
    "value",
    "stderr",
    "ess",
    "prediction",
    "ratio",
];

fn estimate_row(u: f64, tau: f64, est: &Estimate, prediction: Option<f64>) -> Vec<String> {
    let (pred, ratio) = match prediction {
        Some(p) => (float_field(p), float_field(est.value / p)),
        None => (String::new(), String::new()),
    };
    vec![
        float_field(u),
        float_field(tau),
        scaled_horizon(u, tau).to_string(),
        est.method.as_str().to_string(),
        float_field(est.value),
        float_field(est.stderr),
        float_field(est.ess),
        pred,
        ratio,
    ]
}

fn estimate(
    law: &PairLaw,
    config: &ExperimentConfig,
    exec: &impl Executor,
) -> Result<(Table, Option<serde_json::Value>), CliError> {
    let us = require_us(config)?;
    let taus = require_taus(config)?;
    let method = config.run.method()?;
    let mut table = Table::new(&ESTIMATE_HEADER);
    let mut task = 0u64;
    let mut low_ess = 0u32;
    for &u in us {
        for &tau in taus {
            let cfg = task_cfg(config, task);
            task += 1;
            let est = prob_passage(law, u, tau, config.run.n_samples, method, &cfg, exec)?;
            if est.method == passage_core::Method::Importance && est.ess < 100.0 {
                low_ess += 1;
            }
            table.push(estimate_row(u, tau, &est, None));
        }
    }
    let summary = (low_ess > 0).then(|| {
        json!({
            "warning": format!("{low_ess} importance estimate(s) had effective sample size below 100")
        })
    });
    Ok((table, summary))
}

fn compare(
    law: &PairLaw,
    config: &ExperimentConfig,
    exec: &impl Executor,
) -> Result<(Table, Option<serde_json::Value>), CliError> {
    let us = require_us(config)?;
    let taus = require_taus(config)?;
    let method = config.run.method()?;
    let mut table = Table::new(&ESTIMATE_HEADER);

    // constants: the stationary tail constant once, C(tau) per small-time tau
    let mut task = 0u64;
    let c_m = {
        let cfg = task_cfg(config, task);
        task += 1;
        estimate_cm_goldie(law, config.run.burn_in, config.run.n_samples, &cfg, exec)?
            .estimate
            .value
    };
    for &u in us {
        for &tau in taus {
            let cfg = task_cfg(config, task);
            task += 1;
            let est = prob_passage(law, u, tau, config.run.n_samples, method, &cfg, exec)?;
            let c_tau = match summarize(law, tau)?.regime {
                Regime::SmallTime => {
                    let cfg = task_cfg(config, task);
                    task += 1;
                    Some(
                        estimate_c_tau(
                            law,
                            tau,
                            config.run.n_terms,
                            config.run.n_samples,
                            &cfg,
                            exec,
                        )?
                        .estimate
                        .value,
                    )
                }
                _ => None,
            };
            let constants = Constants {
                c_tau,
                c_m: Some(c_m),
            };
            let prediction = passage_core::estimators::predict(law, u, tau, &constants)?;
            table.push(estimate_row(u, tau, &est, Some(prediction.value)));
        }
    }
    Ok((table, Some(json!({ "c_m": c_m }))))
}

fn tail(
    law: &PairLaw,
    config: &ExperimentConfig,
    exec: &impl Executor,
) -> Result<(Table, Option<serde_json::Value>), CliError> {
    if config.run.u_grid.is_empty() {
        return Err(CliError::Config(String::from(
            "tail needs a u_grid in [run]",
        )));
    }
    let cfg = task_cfg(config, 0);
    let fit = tail_fit(law, config.run.n_run, &config.run.u_grid, &cfg, exec)?;
    let mut table = Table::new(&["u", "survival", "exceedances", "in_fit"]);
    for p in &fit.points {
        table.push(vec![
            float_field(p.u),
            float_field(p.survival),
            p.exceedances.to_string(),
            p.in_fit.to_string(),
        ]);
    }
    let summary = json!({
        "xi_hat": fit.xi_hat,
        "c_hat": fit.c_hat,
        "n_run": fit.n_run,
        "lattice_warning": fit.lattice_warning,
    });
    Ok((table, Some(summary)))
}

fn regimes(
    law: &PairLaw,
    config: &ExperimentConfig,
) -> Result<(Table, Option<serde_json::Value>), CliError> {
    let taus = require_taus(config)?;
    let mut table = Table::new(&[
        "tau",
        "alpha",
        "applicable",
        "count1_gap",
        "count1_holds",
        "count2_witness",
        "count2_holds",
        "exponent_gap",
        "varrho",
    ]);
    for &tau in taus {
        let r = regime_report(law, tau)?;
        table.push(vec![
            float_field(tau),
            float_field(r.alpha),
            r.applicable.to_string(),
            float_field(r.count1_gap),
            r.count1_holds.to_string(),
            r.count2_witness.map(float_field).unwrap_or_default(),
            r.count2_holds.to_string(),
            float_field(r.exponent_gap),
            float_field(r.varrho),
        ]);
    }
    Ok((table, None))
}

fn petrov(
    law: &PairLaw,
    config: &ExperimentConfig,
) -> Result<(Table, Option<serde_json::Value>), CliError> {
    let c = config
        .run
        .c
        .ok_or_else(|| CliError::Config(String::from("petrov needs a slope c in [run]")))?;
    if config.run.n_steps.is_empty() {
        return Err(CliError::Config(String::from(
            "petrov needs walk lengths n_steps in [run]",
        )));
    }
    let gamma = config.run.gamma;
    let alpha = solve_slope(law, c)?;
    // exact Gaussian tail available when log A is normal
    let gaussian = match law.family() {
        Family::LognormalA { mean, var, .. } => Some((*mean, var.sqrt())),
        _ => None,
    };
    let mut table = Table::new(&["n", "c", "gamma", "alpha", "approx", "exact", "ratio"]);
    for &n in &config.run.n_steps {
        let approx = passage_core::estimators::petrov_tail(law, n, c, gamma)?;
        let (exact, ratio) = match gaussian {
            Some((m, sd)) => {
                let z = (n as f64).sqrt() * (c + gamma - m) / sd;
                let exact = normal_sf(z);
                (float_field(exact), float_field(approx / exact))
            }
            None => (String::new(), String::new()),
        };
        table.push(vec![
            n.to_string(),
            float_field(c),
            float_field(gamma),
            float_field(alpha),
            float_field(approx),
            exact,
            ratio,
        ]);
    }
    Ok((table, None))
}

fn duality(
    law: &PairLaw,
    config: &ExperimentConfig,
    exec: &impl Executor,
) -> Result<(Table, Option<serde_json::Value>), CliError> {
    let us = require_us(config)?;
    let taus = require_taus(config)?;
    let mut table = Table::new(&[
        "u",
        "tau",
        "n_u",
        "passage",
        "passage_stderr",
        "forward",
        "forward_stderr",
        "z",
    ]);
    let mut task = 0u64;
    let mut worst_z: f64 = 0.0;
    for &u in us {
        for &tau in taus {
            let cfg_p = task_cfg(config, task);
            let cfg_f = task_cfg(config, task + 1);
            task += 2;
            let p = prob_passage(
                law,
                u,
                tau,
                config.run.n_samples,
                passage_core::Method::Crude,
                &cfg_p,
                exec,
            )?;
            let f = prob_exceedance_forward(law, u, tau, config.run.n_samples, &cfg_f, exec)?;
            let combined = (p.stderr * p.stderr + f.stderr * f.stderr).sqrt();
            let z = if combined > 0.0 {
                (p.value - f.value) / combined
            } else {
                0.0
            };
            worst_z = worst_z.max(z.abs());
            table.push(vec![
                float_field(u),
                float_field(tau),
                scaled_horizon(u, tau).to_string(),
                float_field(p.value),
                float_field(p.stderr),
                float_field(f.value),
                float_field(f.stderr),
                float_field(z),
            ]);
        }
    }
    Ok((table, Some(json!({ "worst_abs_z": worst_z }))))
}
