//! End-to-end runs: cone file -> Reeb vector -> Monge-Ampère solution ->
//! reconstruction and certificates, with JSON reports and CSV samples.

pub mod io;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::certify::{linf_certificate, mc_volume, LinfCertificate, MonteCarloEstimate};
use crate::cone::{
    cross_section, gorenstein_vector, orthonormal_complement, shifted_polytope, validate_cone,
    GorensteinVector, ProperCone, ReebVector, ShiftedPolytope,
};
use crate::error::Error;
use crate::ma::{
    check_reconstruction, detect_unbounded, minimize_ding, reconstruct_potential, resolution_for_count,
    sample_slopes, test_grid, MASolution, ReconstructionReport, SolverOptions, UnboundedCertificate,
    UNBOUNDED_STEPS,
};
use crate::rational::{format_rational, qvec_to_f64};
use crate::volmin::{
    grad_hess_log_volume, minimize_volume, volume, IterationRecord, MinimizeOptions,
};

pub use io::{bundled, bundled_names, load_cone, ConeFile};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{stage} failed")]
    Stage {
        stage: &'static str,
        #[source]
        source: Error,
    },
    #[error("configuration: {0}")]
    Config(String),
}

impl PipelineError {
    /// 1 numeric failure, 2 structural input error, 3 I/O or unreadable input.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io { .. } | PipelineError::Parse { .. } => 3,
            PipelineError::Stage { source, .. } if source.is_structural() => 2,
            PipelineError::Config(_) => 2,
            PipelineError::Stage { .. } => 1,
        }
    }
}

fn stage<T>(name: &'static str, r: crate::Result<T>) -> Result<T, PipelineError> {
    r.map_err(|source| PipelineError::Stage { stage: name, source })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Validate,
    MinimizeVolume,
    SolveMa,
    Certify,
    Cy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub cone_path: PathBuf,
    pub mode: Mode,
    pub volume_tol: f64,
    pub volume_max_iter: usize,
    pub ma_tol: f64,
    pub ma_max_iter: usize,
    /// Target number of slopes `K`.
    pub resolution: usize,
    pub box_radius: Option<f64>,
    /// Fixed Reeb vector; skips volume minimization.
    pub xi: Option<Vec<f64>>,
    pub seed: u64,
    pub q: Option<f64>,
    pub c_nq: f64,
    pub mc_samples: usize,
    /// Report from an earlier `solve-ma` or `cy` run (certify mode).
    pub solution_path: Option<PathBuf>,
    pub report_path: Option<PathBuf>,
    pub csv_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(cone_path: impl Into<PathBuf>, mode: Mode) -> Self {
        RunConfig {
            cone_path: cone_path.into(),
            mode,
            volume_tol: 1e-9,
            volume_max_iter: 200,
            ma_tol: 1e-9,
            ma_max_iter: 100,
            resolution: 1000,
            box_radius: None,
            xi: None,
            seed: 0,
            q: None,
            c_nq: 10.0,
            mc_samples: 1_000_000,
            solution_path: None,
            report_path: None,
            csv_path: None,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        for (name, v) in [("volume tol", self.volume_tol), ("MA tol", self.ma_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PipelineError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.resolution == 0 {
            return Err(PipelineError::Config("resolution must be positive".into()));
        }
        if let Some(r) = self.box_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(PipelineError::Config(format!("box radius must be positive, got {r}")));
            }
        }
        if !(self.c_nq >= 0.0) {
            return Err(PipelineError::Config("C_nq must be >= 0".into()));
        }
        if self.mode == Mode::Certify && self.solution_path.is_none() {
            return Err(PipelineError::Config("certify needs a solution file".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeEcho {
    pub name: Option<String>,
    pub dim: usize,
    /// Primitive, deduplicated primal rays.
    #[serde(with = "io::rays_serde")]
    pub rays: Vec<Vec<BigRational>>,
    #[serde(with = "io::rays_serde")]
    pub dual_rays: Vec<Vec<BigRational>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeSummary {
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaSummary {
    /// Orthonormal basis of `xi^perp` defining the `s`-coordinates.
    pub basis: Vec<Vec<f64>>,
    /// Vertices of `Q_xi` in those coordinates.
    pub q_vertices: Vec<Vec<f64>>,
    pub grid_resolution: usize,
    pub slope_count: usize,
    pub solution: MASolution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub version: String,
    pub mode: Mode,
    pub cone: ConeEcho,
    pub l: Option<Vec<String>>,
    pub xi_star: Option<Vec<f64>>,
    /// `"minimized"` or `"given"`.
    pub xi_source: Option<String>,
    pub v_vol: Option<f64>,
    pub v_char: Option<f64>,
    pub barycenter: Option<Vec<f64>>,
    pub barycenter_residual: Option<f64>,
    pub volume_minimization: Option<VolumeSummary>,
    pub ma: Option<MaSummary>,
    pub unbounded: Option<UnboundedCertificate>,
    pub reconstruction: Option<ReconstructionReport>,
    pub certificate: Option<LinfCertificate>,
    pub mc_volume: Option<MonteCarloEstimate>,
    pub warnings: Vec<String>,
    pub converged: bool,
    /// Seconds per stage; excluded from determinism comparisons.
    pub timing: BTreeMap<String, f64>,
}

impl SolutionReport {
    /// The report with timing removed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        SolutionReport {
            timing: BTreeMap::new(),
            ..self.clone()
        }
    }
}

struct Timer(BTreeMap<String, f64>);

impl Timer {
    fn run<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        *self.0.entry(name.to_string()).or_insert(0.0) += start.elapsed().as_secs_f64();
        out
    }
}

fn echo(file: &ConeFile, cone: &ProperCone) -> ConeEcho {
    let to_q = |rays: &[crate::rational::IVec]| -> Vec<Vec<BigRational>> {
        rays.iter()
            .map(|r| r.iter().map(|x| BigRational::from_integer(x.clone())).collect())
            .collect()
    };
    ConeEcho {
        name: file.name.clone(),
        dim: cone.dim(),
        rays: to_q(cone.primal_rays()),
        dual_rays: to_q(cone.dual_rays()),
    }
}

fn load_validated(config: &RunConfig) -> Result<(ConeFile, ProperCone), PipelineError> {
    let file = load_cone(&config.cone_path)?;
    if let Some((index, r)) = file.rays.iter().enumerate().find(|(_, r)| r.len() != file.dim) {
        return Err(PipelineError::Stage {
            stage: "validate",
            source: Error::DimensionMismatch {
                index,
                expected: file.dim,
                found: r.len(),
            },
        });
    }
    let cone = stage("validate", validate_cone(&file.rays))?;
    Ok((file, cone))
}

fn gorenstein(file: &ConeFile, cone: &ProperCone) -> Result<GorensteinVector, PipelineError> {
    let l = stage("gorenstein", gorenstein_vector(cone))?;
    if let Some(given) = &file.l {
        if given != &l.l {
            return Err(PipelineError::Stage {
                stage: "gorenstein",
                source: Error::NotGorenstein,
            });
        }
    }
    Ok(l)
}

/// Sections `P_xi` and `Q_xi` at `xi`, with `Q` in orthonormal coordinates.
pub fn shifted_at(
    cone: &ProperCone,
    l: &GorensteinVector,
    xi: &[f64],
) -> crate::Result<(crate::cone::CrossSection, ShiftedPolytope)> {
    let reeb = ReebVector::new(cone, xi.to_vec(), Some(l))?;
    let section = cross_section(cone, &reeb)?;
    let basis = orthonormal_complement(xi);
    let shifted = shifted_polytope(&section, l, &basis)?;
    Ok((section, shifted))
}

pub fn run_pipeline(config: &RunConfig) -> Result<SolutionReport, PipelineError> {
    config.validate()?;
    if config.mode == Mode::Certify {
        return run_certify(config);
    }
    let mut timer = Timer(BTreeMap::new());
    let (file, cone) = timer.run("validate", || load_validated(config))?;
    let l = timer.run("gorenstein", || gorenstein(&file, &cone))?;
    let m = cone.dim();
    let mut report = SolutionReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode: config.mode,
        cone: echo(&file, &cone),
        l: Some(l.l.iter().map(format_rational).collect()),
        xi_star: None,
        xi_source: None,
        v_vol: None,
        v_char: None,
        barycenter: None,
        barycenter_residual: None,
        volume_minimization: None,
        ma: None,
        unbounded: None,
        reconstruction: None,
        certificate: None,
        mc_volume: None,
        warnings: Vec::new(),
        converged: true,
        timing: BTreeMap::new(),
    };
    if config.mode == Mode::Validate {
        report.timing = timer.0;
        return Ok(report);
    }

    // Reeb vector
    let lf = l.to_f64();
    let given = config
        .xi
        .clone()
        .or_else(|| file.xi.as_ref().map(|x| qvec_to_f64(x)));
    let xi = match given {
        Some(xi) => {
            let reeb = stage("reeb", ReebVector::new(&cone, xi, Some(&l)))?;
            let reeb = if reeb.normalized {
                reeb
            } else {
                report.warnings.push("given xi rescaled to <l, xi> = m".into());
                reeb.normalize(&l)
            };
            report.xi_source = Some("given".into());
            reeb.xi
        }
        None => {
            let opts = MinimizeOptions {
                tol: config.volume_tol,
                max_iter: config.volume_max_iter,
                start: None,
            };
            let res = timer.run("minimize-volume", || stage("minimize-volume", minimize_volume(&cone, &l, &opts)))?;
            report.volume_minimization = Some(VolumeSummary {
                iterations: res.iterations,
                converged: res.converged,
                trace: res.trace.clone(),
            });
            report.converged &= res.converged;
            report.xi_source = Some("minimized".into());
            res.xi_star.xi
        }
    };
    let eval = stage("volume", volume(&cone, &xi))?;
    let full = stage("volume", grad_hess_log_volume(&cone, &xi))?;
    let barycenter: Vec<f64> = full
        .grad_log_v
        .as_ref()
        .expect("gradient requested")
        .iter()
        .map(|g| -g / m as f64)
        .collect();
    let residual = barycenter
        .iter()
        .zip(&lf)
        .map(|(b, l)| (b - l / m as f64).powi(2))
        .sum::<f64>()
        .sqrt();
    if report.xi_source.as_deref() == Some("given") && residual > config.volume_tol {
        report.warnings.push(format!(
            "barycenter residual {residual:e} at the given xi exceeds the tolerance; \
             the Monge-Ampere problem has no solution there"
        ));
    }
    report.xi_star = Some(xi.clone());
    report.v_vol = Some(eval.v_vol);
    report.v_char = Some(eval.v_char);
    report.barycenter = Some(barycenter);
    report.barycenter_residual = Some(residual);
    if config.mode == Mode::MinimizeVolume {
        report.timing = timer.0;
        return Ok(report);
    }

    // Monge-Ampère
    let (section, shifted) = stage("section", shifted_at(&cone, &l, &xi))?;
    let q = &shifted.polytope;
    if config.resolution < q.vertices.len() {
        return Err(PipelineError::Config(format!(
            "resolution {} is below the vertex count {} of Q",
            config.resolution,
            q.vertices.len()
        )));
    }
    let grid_resolution = resolution_for_count(q, config.resolution);
    let solvable = residual <= config.volume_tol.max(1e-8);
    if !solvable {
        let sample = stage("sample-slopes", sample_slopes(q, grid_resolution, true))?;
        let cert = timer.run("detect-unbounded", || {
            stage(
                "detect-unbounded",
                detect_unbounded(&sample.slopes, &sample.weights, m, &UNBOUNDED_STEPS),
            )
        })?;
        report.unbounded = Some(cert);
        report.converged = false;
        report.timing = timer.0;
        return Ok(report);
    }
    // at the minimizer Q has barycenter zero up to the volume tolerance
    let q_centered = q.translate(&q.barycenter().iter().map(|x| -x).collect::<Vec<f64>>());
    let sample = stage("sample-slopes", sample_slopes(&q_centered, grid_resolution, false))?;
    let opts = SolverOptions {
        tol: config.ma_tol,
        max_iter: config.ma_max_iter,
        box_radius: config.box_radius,
        init: None,
        seed: config.seed,
        ..SolverOptions::default()
    };
    let solution = timer.run("solve-ma", || {
        stage("solve-ma", minimize_ding(&sample.slopes, &sample.weights, m, &opts))
    })?;
    report.converged &= solution.converged;
    if let Some(path) = &config.csv_path {
        let per_axis = if m == 2 { 101 } else { 41 };
        emit_csv(&solution, &test_grid(m - 1, 5.0, per_axis), path)?;
    }
    let summary = MaSummary {
        basis: shifted.basis.clone(),
        q_vertices: q_centered.vertices.clone(),
        grid_resolution,
        slope_count: sample.slopes.len(),
        solution,
    };

    if config.mode == Mode::Cy {
        let centered = ShiftedPolytope {
            polytope: q_centered.clone(),
            ..shifted.clone()
        };
        certify_stages(
            &mut report,
            &mut timer,
            config,
            &cone,
            &lf,
            &section.vertices,
            &centered,
            &summary.solution,
        )?;
    }
    report.ma = Some(summary);
    report.timing = timer.0;
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn certify_stages(
    report: &mut SolutionReport,
    timer: &mut Timer,
    config: &RunConfig,
    cone: &ProperCone,
    l: &[f64],
    section_vertices: &[Vec<f64>],
    shifted: &ShiftedPolytope,
    solution: &MASolution,
) -> Result<(), PipelineError> {
    let potential = stage("reconstruct", reconstruct_potential(solution, shifted, l))?;
    report.reconstruction = Some(timer.run("reconstruct", || {
        check_reconstruction(&potential, cone, section_vertices, 1000, 4.0, config.seed)
    }));
    report.certificate = Some(timer.run("certify", || {
        stage(
            "certify",
            linf_certificate(solution, &shifted.polytope, config.q, config.c_nq, None),
        )
    })?);
    report.mc_volume = Some(timer.run("mc-volume", || {
        stage("mc-volume", mc_volume(cone, &shifted.xi, config.mc_samples, config.seed))
    })?);
    Ok(())
}

fn run_certify(config: &RunConfig) -> Result<SolutionReport, PipelineError> {
    let mut timer = Timer(BTreeMap::new());
    let path = config.solution_path.as_ref().expect("validated");
    let mut report: SolutionReport = io::read_json(path)?;
    let (file, cone) = load_validated(config)?;
    let l = gorenstein(&file, &cone)?;
    if echo(&file, &cone).rays != report.cone.rays {
        return Err(PipelineError::Config("solution was computed for a different cone".into()));
    }
    let (Some(xi), Some(ma)) = (report.xi_star.clone(), report.ma.clone()) else {
        return Err(PipelineError::Config("solution file has no Monge-Ampere solution".into()));
    };
    let (section, shifted) = stage("section", shifted_at(&cone, &l, &xi))?;
    let q = &shifted.polytope;
    let centered = ShiftedPolytope {
        polytope: q.translate(&q.barycenter().iter().map(|x| -x).collect::<Vec<f64>>()),
        ..shifted
    };
    report.mode = Mode::Certify;
    report.converged = ma.solution.converged;
    certify_stages(
        &mut report,
        &mut timer,
        config,
        &cone,
        &l.to_f64(),
        &section.vertices,
        &centered,
        &ma.solution,
    )?;
    report.timing = timer.0;
    Ok(report)
}

/// CSV with columns `s1..sn, phi, phi_q, density` over the given points,
/// where `phi_q` is the support function of the slope hull and
/// `density = exp(-m phi)`.
pub fn emit_csv(solution: &MASolution, grid: &[Vec<f64>], path: &Path) -> Result<(), PipelineError> {
    let io_err = |e: std::io::Error| PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut out = std::io::BufWriter::new(file);
    let n = solution.phi.n;
    let header: Vec<String> = (1..=n)
        .map(|i| format!("s{i}"))
        .chain(["phi".to_string(), "phi_q".to_string(), "density".to_string()])
        .collect();
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    for s in grid {
        let phi = solution.phi.eval(s);
        let h = solution
            .phi
            .slopes
            .iter()
            .map(|q| q.iter().zip(s).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        let density = (-(solution.m as f64) * phi).exp();
        let row: Vec<String> = s
            .iter()
            .chain([phi, h, density].iter())
            .map(|x| format!("{x}"))
            .collect();
        writeln!(out, "{}", row.join(",")).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}
