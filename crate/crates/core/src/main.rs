use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use cycone::pipeline::{io::write_json, run_pipeline, Mode, PipelineError, RunConfig, SolutionReport};
use cycone::rational::{parse_rational, to_f64};

#[derive(Parser)]
#[command(name = "cycone", version, about = "Volume-minimizing Reeb vectors and toric Calabi-Yau cone potentials")]
struct Cli {
    /// Seed for every stochastic stage.
    #[arg(long, global = true, env = "CYCONE_SEED", default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the cone, compute its dual and Gorenstein vector.
    Validate {
        #[command(flatten)]
        cone: ConeArg,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Find the l-normalized Reeb vector of minimal volume.
    MinimizeVolume {
        #[command(flatten)]
        cone: ConeArg,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Solve the Monge-Ampère equation on the cross-section.
    SolveMa {
        #[command(flatten)]
        cone: ConeArg,
        #[command(flatten)]
        ma: MaArgs,
    },
    /// Recheck a saved solution: reconstruction, sup-norm certificate, Monte Carlo volume.
    Certify {
        #[arg(long)]
        solution: PathBuf,
        #[command(flatten)]
        cone: ConeArg,
        #[command(flatten)]
        cert: CertArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline.
    Cy {
        #[command(flatten)]
        cone: ConeArg,
        #[command(flatten)]
        ma: MaArgs,
        #[command(flatten)]
        cert: CertArgs,
    },
}

#[derive(Args)]
struct ConeArg {
    /// Cone JSON file, or the name of a bundled example
    /// (quadrant2, quadrant3, conifold, c3z2).
    #[arg(long)]
    cone: PathBuf,
}

#[derive(Args)]
struct MaArgs {
    /// `auto` minimizes the volume; otherwise comma-separated rationals.
    #[arg(long, default_value = "auto")]
    xi: String,
    /// Target number of slopes K.
    #[arg(long, default_value_t = 1000)]
    resolution: usize,
    /// Half-width of the integration box (default: chosen from the decay rate).
    #[arg(long = "box")]
    box_radius: Option<f64>,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    volume_tol: f64,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write (s, phi, phi_Q, density) samples on [-5, 5]^n.
    #[arg(long)]
    grid_csv: Option<PathBuf>,
}

#[derive(Args)]
struct CertArgs {
    /// Exponent q > n of the moment bound (default n + 1).
    #[arg(long)]
    q: Option<f64>,
    #[arg(long = "cnq", default_value_t = 10.0)]
    c_nq: f64,
    #[arg(long, default_value_t = 1_000_000)]
    mc_samples: usize,
}

fn parse_xi(text: &str) -> anyhow::Result<Option<Vec<f64>>> {
    if text == "auto" {
        return Ok(None);
    }
    let xi = text
        .split(',')
        .map(|t| parse_rational(t.trim()).map(|q| to_f64(&q)))
        .collect::<Result<Vec<f64>, _>>()
        .with_context(|| format!("cannot parse --xi {text:?}"))?;
    if xi.is_empty() {
        bail!("--xi is empty");
    }
    Ok(Some(xi))
}

fn apply_ma(config: &mut RunConfig, ma: MaArgs) -> anyhow::Result<()> {
    config.xi = parse_xi(&ma.xi)?;
    config.resolution = ma.resolution;
    config.box_radius = ma.box_radius;
    config.ma_tol = ma.tol;
    config.volume_tol = ma.volume_tol;
    config.ma_max_iter = ma.max_iter;
    config.report_path = ma.out;
    config.csv_path = ma.grid_csv;
    Ok(())
}

fn apply_cert(config: &mut RunConfig, cert: CertArgs) {
    config.q = cert.q;
    config.c_nq = cert.c_nq;
    config.mc_samples = cert.mc_samples;
}

fn build_config(cli: Cli) -> anyhow::Result<RunConfig> {
    let mut config = match cli.command {
        Command::Validate { cone, report } => {
            let mut c = RunConfig::new(cone.cone, Mode::Validate);
            c.report_path = report;
            c
        }
        Command::MinimizeVolume {
            cone,
            tol,
            max_iter,
            report,
        } => {
            let mut c = RunConfig::new(cone.cone, Mode::MinimizeVolume);
            c.volume_tol = tol;
            c.volume_max_iter = max_iter;
            c.report_path = report;
            c
        }
        Command::SolveMa { cone, ma } => {
            let mut c = RunConfig::new(cone.cone, Mode::SolveMa);
            apply_ma(&mut c, ma)?;
            c
        }
        Command::Certify {
            solution,
            cone,
            cert,
            out,
        } => {
            let mut c = RunConfig::new(cone.cone, Mode::Certify);
            c.solution_path = Some(solution);
            c.report_path = out;
            apply_cert(&mut c, cert);
            c
        }
        Command::Cy { cone, ma, cert } => {
            let mut c = RunConfig::new(cone.cone, Mode::Cy);
            apply_ma(&mut c, ma)?;
            apply_cert(&mut c, cert);
            c
        }
    };
    config.seed = cli.seed;
    Ok(config)
}

fn summarize(report: &SolutionReport) {
    if let Some(xi) = &report.xi_star {
        eprintln!("xi* = {xi:?}");
    }
    if let (Some(v), Some(r)) = (report.v_vol, report.barycenter_residual) {
        eprintln!("V(xi*) = {v}, barycenter residual = {r:e}");
    }
    if let Some(ma) = &report.ma {
        let s = &ma.solution;
        eprintln!(
            "Ding = {}, mass residual = {:e}, K = {}, converged = {}",
            s.ding.total, s.mass_residual, ma.slope_count, s.converged
        );
    }
    if let Some(u) = &report.unbounded {
        eprintln!(
            "no solution: D decreases along {:?} at rate {} per unit",
            u.direction, -u.observed_slope
        );
    }
    if let Some(c) = &report.certificate {
        eprintln!("sup-norm certificate: lhs = {} <= rhs = {}: {}", c.lhs, c.rhs, c.passed);
    }
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let config = build_config(cli)?;
    let report = run_pipeline(&config)?;
    match &config.report_path {
        Some(path) => write_json(&report, path)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    summarize(&report);
    Ok(if report.converged { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<PipelineError>().map(|p| p.exit_code()).unwrap_or(2);
            ExitCode::from(code as u8)
        }
    }
}
