//! Command-line front end for the demand model and the planning solver.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use pdm_core::demand::{
    bass_mean, bass_variance, effective_spec_at, sbm_replications, EffectiveSpec, PdmParams,
};
use pdm_core::experiment::{
    emit_figures, gap_study, run_study, validate_surface, VALIDATION_EPSILON,
};
use pdm_core::io::{self, RunConfig};
use pdm_core::solver::{draw_samples, solve, solve_by_code_enumeration, Scenario};
use pdm_core::stats::DispersionConvention;
use pdm_core::surface::{refine_surface, Domain, Surface};
use pdm_core::{Error, Result};

const OUT_DIR_ENV: &str = "PDM_OUT_DIR";

const AFTER_HELP: &str = "\
Every command ends with one JSON summary line on stdout.

Exit codes:
  0  success
  2  usage error (unknown flag, missing or malformed argument)
  3  parse or schema error in an input file, or an I/O failure
  4  domain or model error (degenerate parameters, infeasible service level, ...)
  5  internal invariant breach

Environment:
  PDM_OUT_DIR  default output directory for `study` (falls back to ./pdm-out)

Parameter table (CSV, one header row and one data row):
  required columns  m,a0,pi_p,alpha,beta,delta,eta,pi_m,gamma_p,gamma_b
  optional columns  p_ref (410), v0 (0), t (1), adopters (defaults to a0)
  Without --params the bundled room air conditioner table is used.

Study config (JSON, unknown keys rejected, every key optional):
  params, costs, thetas, salvage_fraction, p_min, p_max, v_max, samples,
  seed, bits, targets (\"eta\" | \"gamma\"), multipliers, ad_cost_scale, out_dir";

#[derive(Parser)]
#[command(name = "pdm", version, about = "Piecewise-diffusion demand model and chance-constrained production planning", after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refine a piecewise-linear moment surface and write it as JSON.
    BuildSurface {
        #[command(flatten)]
        model: ModelArgs,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the SAA planning problem on a surface.
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        /// Surface dump to solve on; built from the model flags when absent.
        #[arg(long)]
        surface: Option<PathBuf>,
        #[command(flatten)]
        economics: EconomicArgs,
        /// Also solve by enumerating triangle codes and report both.
        #[arg(long)]
        cross_check: bool,
        /// Include the best decision at every price.
        #[arg(long)]
        per_price: bool,
    },
    /// Run the misestimation study and write study.csv plus four SVG charts.
    Study {
        /// JSON configuration; built-in defaults when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; overrides the config and PDM_OUT_DIR.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Percentage-error distribution of a surface on uniform samples, with DKW bounds.
    ValidateSurface {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = VALIDATION_EPSILON)]
        epsilon: f64,
    },
    /// Optimality-gap interval from replicated SAA solves.
    ValidateGap {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        economics: EconomicArgs,
        #[arg(long, default_value_t = 20)]
        replications: usize,
        /// Two-sided interval level.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = Convention::StandardError)]
        convention: Convention,
    },
    /// Pure-birth simulation of the prospect pool against the closed-form moments.
    SimulateSbm {
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 410.0)]
        price: f64,
        #[arg(long, default_value_t = 0.0)]
        advertising: f64,
        /// Replace the pool size, keeping both adoption rates.
        #[arg(long)]
        pool: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        replications: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Parameter table (CSV).
    #[arg(long)]
    params: Option<PathBuf>,
    /// Bit budget for the triangle codes.
    #[arg(long, default_value_t = 10)]
    bits: u32,
    #[arg(long, default_value_t = 350)]
    p_min: i64,
    #[arg(long, default_value_t = 450)]
    p_max: i64,
    #[arg(long, default_value_t = 100.0)]
    v_max: f64,
}

#[derive(Args)]
struct EconomicArgs {
    #[arg(long, default_value_t = 246.0)]
    cost: f64,
    /// Salvage value per unit; a tenth of the cost when absent.
    #[arg(long)]
    salvage: Option<f64>,
    /// Allowed stock-out probability, in (0, 1].
    #[arg(long, default_value_t = 0.05)]
    theta: f64,
    #[arg(long, default_value_t = 15_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    ad_cost_scale: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    StandardError,
    AsPrinted,
}

impl ModelArgs {
    fn params(&self) -> Result<PdmParams> {
        load_params(self.params.as_deref())
    }

    fn domain(&self) -> Domain {
        Domain {
            p_min: self.p_min as f64,
            p_max: self.p_max as f64,
            v_max: self.v_max,
        }
    }

    fn surface(&self, params: &PdmParams) -> Result<Surface> {
        refine_surface(params, self.domain(), self.bits)
    }
}

impl EconomicArgs {
    fn scenario(&self, model: &ModelArgs) -> Scenario {
        Scenario {
            cost: self.cost,
            salvage: self.salvage.unwrap_or(0.1 * self.cost),
            theta: self.theta,
            p_min: model.p_min,
            p_max: model.p_max,
            v_max: model.v_max,
            samples: self.samples,
            seed: self.seed,
            ad_cost_scale: self.ad_cost_scale,
        }
    }
}

fn load_params(path: Option<&Path>) -> Result<PdmParams> {
    match path {
        Some(p) => io::load_params(p),
        None => io::parse_params(io::BUNDLED_PARAMS_CSV, "bundled air_conditioner_params.csv"),
    }
}

fn summary(value: serde_json::Value) {
    println!("{value}");
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BuildSurface { model, out } => {
            let params = model.params()?;
            let surface = model.surface(&params)?;
            let text = io::surface_to_json(&surface);
            match &out {
                Some(path) => std::fs::write(path, &text)?,
                None => print!("{text}"),
            }
            summary(json!({
                "command": "build-surface",
                "vertices": surface.vertices.len(),
                "triangles": surface.triangles.len(),
                "code_width": surface.code_width,
                "params_hash": surface.params_hash,
                "out": out.map(|p| p.display().to_string()),
            }));
        }
        Command::Solve {
            model,
            surface,
            economics,
            cross_check,
            per_price,
        } => {
            let surface = match &surface {
                Some(path) => io::load_surface(path)?,
                None => model.surface(&model.params()?)?,
            };
            let scenario = economics.scenario(&model);
            scenario.validate()?;
            let sample = draw_samples(scenario.samples, scenario.seed)?;
            let result = solve(&surface, &scenario, &sample)?;
            let mut out = json!({
                "command": "solve",
                "cost": scenario.cost,
                "salvage": scenario.salvage,
                "theta": scenario.theta,
                "samples": scenario.samples,
                "seed": scenario.seed,
                "p_star": result.p_star,
                "v_star": result.v_star,
                "o_star": result.o_star,
                "objective": result.objective,
            });
            if cross_check {
                let other = solve_by_code_enumeration(&surface, &scenario, &sample)?;
                out["enumeration_objective"] = json!(other.objective);
                out["enumeration_p_star"] = json!(other.p_star);
            }
            if per_price {
                for row in &result.per_price {
                    println!(
                        "{}",
                        json!({"p": row.p, "v": row.v, "o": row.o, "objective": row.objective})
                    );
                }
            }
            summary(out);
        }
        Command::Study { config, out_dir } => {
            let config = match &config {
                Some(path) => RunConfig::load(path)?,
                None => RunConfig::default(),
            };
            let out_dir = out_dir
                .or_else(|| config.out_dir.clone())
                .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("pdm-out"));
            let params = config.load_params()?;
            let rows = run_study(&params, &config)?;
            let report = emit_figures(&rows, &out_dir)?;
            let infeasible = rows.iter().filter(|r| !r.truth.feasible).count();
            summary(json!({
                "command": "study",
                "rows": rows.len(),
                "infeasible_rows": infeasible,
                "csv": report.csv.display().to_string(),
                "figures": report.figures.iter().map(|(p, n)| json!({"path": p.display().to_string(), "series": n})).collect::<Vec<_>>(),
            }));
        }
        Command::ValidateSurface {
            model,
            samples,
            seed,
            epsilon,
        } => {
            let params = model.params()?;
            let surface = model.surface(&params)?;
            let v = validate_surface(&surface, &params, samples, seed, epsilon)?;
            for (name, s) in [("mu", &v.mu), ("sigma", &v.sigma)] {
                println!(
                    "{name}: 95th percentile {:.6}; DKW with epsilon {epsilon}, factor {:.6}: P(|error| <= {:.6}) >= {:.4}",
                    s.q95, v.dkw_factor, s.q95, s.dkw_confidence
                );
            }
            summary(json!({
                "command": "validate-surface",
                "samples": v.samples,
                "epsilon": v.epsilon,
                "dkw_factor": v.dkw_factor,
                "mu_q95": v.mu.q95,
                "mu_max": v.mu.max,
                "mu_dkw_confidence": v.mu.dkw_confidence,
                "mu_dkw_threshold_95": v.mu.dkw_threshold_95,
                "sigma_q95": v.sigma.q95,
                "sigma_max": v.sigma.max,
                "sigma_dkw_confidence": v.sigma.dkw_confidence,
                "sigma_dkw_threshold_95": v.sigma.dkw_threshold_95,
            }));
        }
        Command::ValidateGap {
            model,
            economics,
            replications,
            alpha,
            convention,
        } => {
            let params = model.params()?;
            let surface = model.surface(&params)?;
            let scenario = economics.scenario(&model);
            let convention = match convention {
                Convention::StandardError => DispersionConvention::StandardError,
                Convention::AsPrinted => DispersionConvention::AsPrinted,
            };
            let g = gap_study(&surface, &scenario, replications, alpha, convention)?;
            let first = g.solutions[0].p_star;
            summary(json!({
                "command": "validate-gap",
                "replications": replications,
                "lower": g.interval.lower,
                "upper": g.interval.upper,
                "gap_fraction": g.interval.gap_fraction,
                "same_price": g.solutions.iter().all(|s| s.p_star == first),
                "p_star": g.solutions.iter().map(|s| s.p_star).collect::<Vec<_>>(),
            }));
        }
        Command::SimulateSbm {
            params,
            price,
            advertising,
            pool,
            replications,
            seed,
        } => {
            let params = load_params(params.as_deref())?;
            let mut spec: EffectiveSpec = effective_spec_at(price, advertising, &params)?;
            if let Some(m) = pool {
                if !(m > 1.0) {
                    return Err(Error::InvalidArgument(format!("pool {m} must exceed 1")));
                }
                spec.m_hat = m;
            }
            let draws = sbm_replications(&spec, params.t, replications, seed);
            let n = draws.len() as f64;
            let mean = draws.iter().map(|&d| d as f64).sum::<f64>() / n;
            let var = draws
                .iter()
                .map(|&d| (d as f64 - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0).max(1.0);
            let pool_size = spec.m_hat.round();
            summary(json!({
                "command": "simulate-sbm",
                "pool": pool_size,
                "alpha_hat": spec.alpha_hat,
                "beta_hat": spec.beta_hat,
                "replications": replications,
                "sample_mean": mean,
                "sample_variance": var,
                "closed_form_mean": bass_mean(params.t, pool_size, spec.alpha_hat, spec.beta_hat)?,
                "closed_form_variance": bass_variance(params.t, pool_size, spec.alpha_hat, spec.beta_hat)?,
            }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
