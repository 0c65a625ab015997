//! Subcommand drivers: config ingestion, experiment dispatch, and emission
//! of data files with their manifests.
//!
//! Every command reads one JSON config, applies the flag overrides, runs its
//! experiment, writes CSV/JSON artifacts plus a manifest into the output
//! directory, and exits 0 on success, 1 when a monitored property fails,
//! 2 on config errors, 3 on numerical failure. Outputs are pure functions of
//! `(config, seeds)`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::attractor::{
    absorption_experiment, nullity_experiment, pullback_attraction, sample_ball,
    temperedness_of_r,
};
use crate::config::ExperimentConfig;
use crate::dynamics::integrate;
use crate::energy::{energy_report, EnergyReport};
use crate::error::{Error, Result};
use crate::noise::{stationary_integral, temperedness_diag, OuPath, WienerPath};
use crate::nonlinearity::{
    suggested_constants, verify_growth, verify_monotonicity, PhiSpec, VerifyGrid,
};
use crate::output::{long_csv, path_csv, save, to_json, trajectory_csv, Manifest, PlotRow};
use crate::{EXIT_OK, EXIT_VIOLATION};

/// Residual slack granted to the energy balance in `simulate`, looser than
/// the step tolerance because the balance folds in quadrature error.
const ENERGY_SLACK: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "porous-lattice",
    version,
    about = "Random-attractor laboratory for a stochastic porous-medium lattice equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Experiment configuration (JSON).
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Replace the config seed list (comma-separated).
    #[arg(long, value_delimiter = ',', value_name = "SEEDS")]
    pub seed: Option<Vec<u64>>,
    /// Replace the output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Size of the worker pool (default: all cores).
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// Also write long-format plot CSVs.
    #[arg(long)]
    pub emit_plot_data: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the nonlinearity constants against the growth and monotonicity
    /// envelopes.
    VerifyPhi(CommonArgs),
    /// Integrate forward trajectories and audit their energy balance.
    Simulate(CommonArgs),
    /// Pullback-evolve a ball and compare arrivals with the absorbing radius.
    Absorb(CommonArgs),
    /// Track the mutual Hausdorff gap between two pullback-evolved balls.
    Pullback(CommonArgs),
    /// Measure tail energies of pullback states against the cut-off bound.
    Tails(CommonArgs),
    /// Diagnose the conjugating OU path: moments, consistency, temperedness.
    OuDiag(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::VerifyPhi(a)
            | Command::Simulate(a)
            | Command::Absorb(a)
            | Command::Pullback(a)
            | Command::Tails(a)
            | Command::OuDiag(a) => a,
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cmd: &Command) -> Result<i32> {
    let args = cmd.common();
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seeds) = &args.seed {
        if seeds.is_empty() {
            return Err(Error::Config("--seed needs at least one value".to_string()));
        }
        cfg.noise.seeds = seeds.clone();
    }
    if let Some(dir) = &args.out {
        cfg.output.dir = dir.clone();
    }
    if args.emit_plot_data {
        cfg.output.emit_plot_data = true;
    }

    let dispatch = || match cmd {
        Command::VerifyPhi(_) => cmd_verify_phi(&cfg),
        Command::Simulate(_) => cmd_simulate(&cfg),
        Command::Absorb(_) => cmd_absorb(&cfg),
        Command::Pullback(_) => cmd_pullback(&cfg),
        Command::Tails(_) => cmd_tails(&cfg),
        Command::OuDiag(_) => cmd_ou_diag(&cfg),
    };
    match args.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(dispatch),
        None => dispatch(),
    }
}

/// `verify-phi`: scan the growth and monotonicity envelopes.
pub fn cmd_verify_phi(cfg: &ExperimentConfig) -> Result<i32> {
    let phi = PhiSpec::power_law(cfg.model.p)?;
    let suggested = suggested_constants(cfg.model.p);
    let cs = &cfg.experiment.constants;
    let c1 = cs.c1.unwrap_or(suggested.c1);
    let c2 = cs.c2.unwrap_or(suggested.c2);
    let k = cs.k.unwrap_or(suggested.k);
    let a_bound = cs.a.unwrap_or(0.0);
    let grid = VerifyGrid::default();

    let growth = verify_growth(&phi, c1, c2, &grid);
    let monotonicity = verify_monotonicity(&phi, k, a_bound, &grid);
    println!("{growth}\n");
    println!("{monotonicity}");
    let pass = growth.pass && monotonicity.pass;

    let report = serde_json::json!({
        "p": cfg.model.p,
        "c1": c1,
        "c2": c2,
        "k": k,
        "a_bound": a_bound,
        "growth": growth,
        "monotonicity": monotonicity,
        "pass": pass,
    });
    let dir = &cfg.output.dir;
    let mut manifest = Manifest::new("verify-phi", &cfg.noise.seeds, cfg.echo());
    manifest.record(&save(dir, "verify_phi.json", &to_json(&report))?);
    save(dir, "verify_phi_manifest.json", &to_json(&manifest))?;
    Ok(if pass { EXIT_OK } else { EXIT_VIOLATION })
}

/// `simulate`: one forward trajectory per seed, with energy audit.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<i32> {
    let params = cfg.model_params()?;
    let t_end = cfg.experiment.t_end;
    let opts = cfg.integration_options(t_end);
    let v0 = cfg
        .experiment
        .initial
        .resolve(cfg.model.half_width)?
        .as_lattice();
    let tail_cuts = cfg.tail_cuts();

    struct Run {
        seed: u64,
        csv: String,
        energy: EnergyReport,
    }
    let runs: Vec<Run> = cfg
        .noise
        .seeds
        .par_iter()
        .map(|&seed| -> Result<Run> {
            let w = WienerPath::sample(seed, -cfg.noise.history, t_end, cfg.noise.dt)?;
            let ou = Arc::new(OuPath::from_wiener(&w));
            let traj = integrate(&v0, &ou, &params, t_end, &opts)?;
            let energy = energy_report(&traj, &params, ENERGY_SLACK);
            let csv = trajectory_csv(&traj, params.p(), &tail_cuts);
            Ok(Run { seed, csv, energy })
        })
        .collect::<Result<Vec<_>>>()?;

    let dir = &cfg.output.dir;
    let mut manifest = Manifest::new("simulate", &cfg.noise.seeds, cfg.echo());
    let mut plot = Vec::new();
    let mut all_pass = true;
    for run in &runs {
        let e = &run.energy;
        println!(
            "seed {:>4}  sup |v|^2 {:.6e}  min residual {:+.3e}  {}",
            run.seed,
            e.sup_norm_sq,
            e.min_residual,
            if e.pass { "ok" } else { "VIOLATION" }
        );
        all_pass &= e.pass;
        manifest.record(&save(dir, &format!("trajectory_seed{}.csv", run.seed), &run.csv)?);
        manifest.record(&save(
            dir,
            &format!("energy_seed{}.json", run.seed),
            &to_json(e),
        )?);
        if cfg.output.emit_plot_data {
            for (k, &t) in e.times.iter().enumerate() {
                plot.push(PlotRow::new(format!("norm_sq_seed{}", run.seed), t, e.norm_sq[k]));
                plot.push(PlotRow::new(
                    format!("residual_seed{}", run.seed),
                    t,
                    e.residual[k],
                ));
            }
        }
    }
    if cfg.output.emit_plot_data {
        manifest.record(&save(dir, "simulate_plot.csv", &long_csv(&plot))?);
    }
    save(dir, "simulate_manifest.json", &to_json(&manifest))?;
    Ok(if all_pass { EXIT_OK } else { EXIT_VIOLATION })
}

/// `absorb`: pullback absorption of a ball plus temperedness of the radius.
pub fn cmd_absorb(cfg: &ExperimentConfig) -> Result<i32> {
    let params = cfg.model_params()?;
    let setup = cfg.lab_setup();
    let cloud = cfg.cloud_spec();
    let e = &cfg.experiment;

    let absorption = absorption_experiment(
        e.ball_radius,
        &e.pullback_times,
        &cfg.noise.seeds,
        &params,
        &cloud,
        &setup,
    )?;
    let radius = temperedness_of_r(&cfg.noise.seeds, &e.gammas, &e.pullback_times, &params, &setup)?;

    let fmt_opt = |v: Option<f64>| v.map_or("-".to_string(), |t| format!("{t}"));
    for s in &absorption.per_seed {
        println!(
            "seed {:>4}  R^2 {:.6e}  entry observed {}  deadline {}",
            s.seed,
            s.r_squared,
            fmt_opt(s.observed_entry_time),
            fmt_opt(s.theoretical_entry_time),
        );
    }
    println!(
        "absorbed at final time: {}   radius tempered: {}",
        absorption.all_absorbed_at_final_time, radius.all_vanishing
    );

    let mut csv = String::from("seed,t,max_norm_sq,r_squared,all_inside\n");
    for s in &absorption.per_seed {
        for r in &s.rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                s.seed, r.t, r.max_norm_sq, s.r_squared, r.all_inside
            );
        }
    }

    let dir = &cfg.output.dir;
    let mut manifest = Manifest::new("absorb", &cfg.noise.seeds, cfg.echo());
    let combined = serde_json::json!({
        "absorption": absorption,
        "radius_temperedness": radius,
    });
    manifest.record(&save(dir, "absorb.json", &to_json(&combined))?);
    manifest.record(&save(dir, "absorb.csv", &csv)?);
    if cfg.output.emit_plot_data {
        let mut plot = Vec::new();
        for s in &absorption.per_seed {
            for r in &s.rows {
                plot.push(PlotRow::new(
                    format!("max_norm_sq_seed{}", s.seed),
                    r.t,
                    r.max_norm_sq,
                ));
            }
        }
        for s in &radius.series {
            for r in &s.rows {
                plot.push(PlotRow::new(format!("r_squared_seed{}", s.seed), r.t, r.r_squared));
            }
        }
        manifest.record(&save(dir, "absorb_plot.csv", &long_csv(&plot))?);
    }
    save(dir, "absorb_manifest.json", &to_json(&manifest))?;
    Ok(if absorption.all_absorbed_at_final_time {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    })
}

/// `pullback`: mutual Hausdorff gap between two pullback-evolved balls.
pub fn cmd_pullback(cfg: &ExperimentConfig) -> Result<i32> {
    let params = cfg.model_params()?;
    let setup = cfg.lab_setup();
    let cloud = cfg.cloud_spec();
    let [radius_a, radius_b] = cfg.experiment.pullback_radii;
    let times = &cfg.experiment.pullback_times;
    let n = cfg.model.half_width;

    let mut reports = Vec::with_capacity(cfg.noise.seeds.len());
    for &seed in &cfg.noise.seeds {
        let set_a = sample_ball(n, radius_a, &cloud, seed);
        // decorrelate the random directions of the second ball
        let set_b = sample_ball(n, radius_b, &cloud, seed.wrapping_add(0x9E37_79B9_7F4A_7C15));
        let report = pullback_attraction(&set_a, &set_b, times, seed, &params, &setup)?;
        println!(
            "seed {:>4}  mutual gap {:.6e} -> {:.6e}",
            seed, report.rows[0].mutual, report.final_mutual
        );
        reports.push(report);
    }
    let contracting = reports.iter().all(|r| r.final_mutual <= r.rows[0].mutual);

    let mut csv = String::from("seed,t,d_a_to_b,d_b_to_a,mutual\n");
    for r in &reports {
        for row in &r.rows {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                r.seed, row.t, row.d_a_to_b, row.d_b_to_a, row.mutual
            );
        }
    }

    let dir = &cfg.output.dir;
    let mut manifest = Manifest::new("pullback", &cfg.noise.seeds, cfg.echo());
    let combined = serde_json::json!({
        "radii": [radius_a, radius_b],
        "per_seed": reports,
        "contracting": contracting,
    });
    manifest.record(&save(dir, "pullback.json", &to_json(&combined))?);
    manifest.record(&save(dir, "pullback.csv", &csv)?);
    if cfg.output.emit_plot_data {
        let mut plot = Vec::new();
        for r in &reports {
            for row in &r.rows {
                plot.push(PlotRow::new(format!("mutual_seed{}", r.seed), row.t, row.mutual));
            }
        }
        manifest.record(&save(dir, "pullback_plot.csv", &long_csv(&plot))?);
    }
    save(dir, "pullback_manifest.json", &to_json(&manifest))?;
    Ok(if contracting { EXIT_OK } else { EXIT_VIOLATION })
}

/// `tails`: minimal tail cuts of pullback states and the cut-off bound.
pub fn cmd_tails(cfg: &ExperimentConfig) -> Result<i32> {
    let params = cfg.model_params()?;
    let setup = cfg.lab_setup();
    let cloud = cfg.cloud_spec();
    let e = &cfg.experiment;

    let report = nullity_experiment(
        &e.epsilons,
        &e.pullback_times,
        &cfg.noise.seeds,
        &params,
        &cloud,
        &setup,
        cfg.nullity_cut(),
    )?;
    for s in &report.summaries {
        println!(
            "epsilon {:<8}  minimal cut {}  from t = {}  stabilized: {}",
            s.epsilon, s.n_tilde, s.t_tilde, s.stabilized
        );
    }

    let mut csv = String::from(
        "seed,t,start_radius_sq,transient,l2_term,power_term,tail_forcing,bound_total,rho_tail,sharp_tail",
    );
    for eps in &report.epsilons {
        let _ = write!(csv, ",minimal_i0[{eps}]");
    }
    csv.push('\n');
    for s in &report.per_seed {
        for row in &s.rows {
            let b = &row.bound;
            let _ = write!(
                csv,
                "{},{},{},{},{},{},{},{},{},{}",
                s.seed,
                row.t,
                row.start_radius_sq,
                b.transient,
                b.l2_term,
                b.power_term,
                b.tail_forcing,
                b.total,
                row.rho_tail,
                row.sharp_tail_at_cut
            );
            for pe in &row.per_epsilon {
                let _ = write!(csv, ",{}", pe.minimal_i0);
            }
            csv.push('\n');
        }
    }

    let dir = &cfg.output.dir;
    let mut manifest = Manifest::new("tails", &cfg.noise.seeds, cfg.echo());
    manifest.record(&save(dir, "tails.json", &to_json(&report))?);
    manifest.record(&save(dir, "tails.csv", &csv)?);
    if cfg.output.emit_plot_data {
        let mut plot = Vec::new();
        for s in &report.per_seed {
            for row in &s.rows {
                plot.push(PlotRow::new(
                    format!("bound_total_seed{}", s.seed),
                    row.t,
                    row.bound.total,
                ));
                plot.push(PlotRow::new(format!("rho_tail_seed{}", s.seed), row.t, row.rho_tail));
                for pe in &row.per_epsilon {
                    plot.push(PlotRow::new(
                        format!("minimal_i0[{}]_seed{}", pe.epsilon, s.seed),
                        row.t,
                        pe.minimal_i0 as f64,
                    ));
                }
            }
        }
        manifest.record(&save(dir, "tails_plot.csv", &long_csv(&plot))?);
    }
    save(dir, "tails_manifest.json", &to_json(&manifest))?;

    let stabilized = report.summaries.iter().all(|s| s.stabilized);
    Ok(if stabilized { EXIT_OK } else { EXIT_VIOLATION })
}

/// `ou-diag`: per-seed OU path export, moments, quadrature consistency,
/// and temperedness verdicts.
pub fn cmd_ou_diag(cfg: &ExperimentConfig) -> Result<i32> {
    let e = &cfg.experiment;
    let dt = cfg.noise.dt;
    let dir = &cfg.output.dir;
    let mut manifest = Manifest::new("ou-diag", &cfg.noise.seeds, cfg.echo());
    let mut per_seed = Vec::new();
    let mut plot = Vec::new();
    let mut all_ok = true;

    // paths are long; run seeds sequentially to bound the resident set
    for &seed in &cfg.noise.seeds {
        let w = WienerPath::sample(seed, -cfg.noise.history, e.diag_horizon, dt)?;
        let ou = OuPath::from_wiener(&w);
        let diag = temperedness_diag(&ou, e.diag_threshold);
        let (mean, variance) = ou.empirical_moments(0.0, e.diag_horizon);
        // the damped sweep must reproduce the direct quadrature at time 0
        // up to the initialization remnant
        let quadrature_gap = (ou.z_at(0.0) - stationary_integral(&w)).abs();
        let gap_bound = ou.truncation_bound(0.0) + 1e-10 * ou.sup_abs().max(1.0);
        let consistent = quadrature_gap <= gap_bound;
        all_ok &= diag.vanishing && consistent;
        println!(
            "seed {:>4}  mean {:+.4e}  var {:.6}  target {:.6}  quad gap {:.3e}  tempered: {}",
            seed,
            mean,
            variance,
            0.5 * (1.0 - dt * dt / 12.0),
            quadrature_gap,
            diag.vanishing
        );

        manifest.record(&save(dir, &format!("path_seed{seed}.csv"), &path_csv(&w, &ou))?);
        if cfg.output.emit_plot_data {
            for s in &diag.samples {
                plot.push(PlotRow::new(format!("ratio_z_seed{seed}"), s.t, s.ratio_z));
                plot.push(PlotRow::new(format!("ratio_avg_seed{seed}"), s.t, s.ratio_avg));
            }
        }
        per_seed.push(serde_json::json!({
            "seed": seed,
            "dt": dt,
            "t_min": ou.t_min(),
            "t_max": ou.t_max(),
            "mean": mean,
            "variance": variance,
            "variance_target": 0.5 * (1.0 - dt * dt / 12.0),
            "quadrature_gap": quadrature_gap,
            "quadrature_gap_bound": gap_bound,
            "consistent": consistent,
            "temperedness": diag,
        }));
    }

    let report = serde_json::json!({ "per_seed": per_seed, "all_ok": all_ok });
    manifest.record(&save(dir, "ou_diag.json", &to_json(&report))?);
    if cfg.output.emit_plot_data {
        manifest.record(&save(dir, "ou_diag_plot.csv", &long_csv(&plot))?);
    }
    save(dir, "ou_diag_manifest.json", &to_json(&manifest))?;
    Ok(if all_ok { EXIT_OK } else { EXIT_VIOLATION })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_parse_with_comma_separated_seeds() {
        let cli = Cli::try_parse_from([
            "porous-lattice",
            "simulate",
            "--config",
            "exp.json",
            "--seed",
            "1,2,3",
            "--out",
            "results",
            "--workers",
            "2",
            "--emit-plot-data",
        ])
        .unwrap();
        let args = cli.command.common();
        assert_eq!(args.seed, Some(vec![1, 2, 3]));
        assert_eq!(args.out, Some(PathBuf::from("results")));
        assert_eq!(args.workers, Some(2));
        assert!(args.emit_plot_data);
    }

    #[test]
    fn every_subcommand_is_wired() {
        for name in ["verify-phi", "simulate", "absorb", "pullback", "tails", "ou-diag"] {
            let cli = Cli::try_parse_from(["porous-lattice", name, "--config", "c.json"]);
            assert!(cli.is_ok(), "subcommand {name} failed to parse");
        }
    }

    #[test]
    fn missing_config_flag_is_rejected() {
        assert!(Cli::try_parse_from(["porous-lattice", "simulate"]).is_err());
    }
}
