//! Parameter sweeps across the degenerate factor family.
//!
//! A sweep walks (α, ε = α·ratio) pairs of the bump family f_{α,ε},
//! solves both weighted eigenproblems at each pair, evaluates the witness
//! functionals, and assembles one record per pair with the
//! scale-invariant products μ₁·Vol and λ₁²·Vol, their ratio, and the
//! certified upper bound. Records are computed independently (one rayon
//! task per pair, no shared solver state) and emitted in a fixed order —
//! α ascending, ε descending — so output is a pure function of the
//! configuration and seed. A pair whose solve fails stays in the output
//! as a failed record with diagnostics; the record count always equals
//! the generated pair count.

use crate::conformal::{bump_factor, constant_factor, generalized_volume};
use crate::cutoff::CutoffProfile;
use crate::dirac::{
    first_positive_weighted_eigenvalue_seeded, kernel_dimension, DiracOperator, SpinStructure,
    DEFAULT_KERNEL_TOL,
};
use crate::error::{Error, Result};
use crate::grid::{make_grid, TorusGrid};
use crate::laplace::{first_weighted_eigenvalue_seeded, LaplaceOperator, LaplaceScheme};
use crate::solver::DEFAULT_SEED;
use crate::witness::{denominator, numerator_split, upper_bound_product, witness_spinor};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::time::Instant;

/// Serialize NaN (and any non-finite value) as JSON null, read null back
/// as NaN, so failed records survive a JSON round trip.
mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Sweep parameters: the factor-family chain ε ≤ α ≤ δ ≤ L/4, grid size,
/// solver tolerances, and output plumbing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub period: f64,
    pub nodes_per_axis: usize,
    /// Cutoff plateau radius for the witness spinor.
    pub delta: f64,
    pub alphas: Vec<f64>,
    /// ε = α·ratio for each ratio and each α; ratios lie in (0, 1].
    pub epsilon_ratios: Vec<f64>,
    pub spin: SpinStructure,
    pub laplace_tol: f64,
    pub dirac_tol: f64,
    pub kernel_tol: f64,
    /// Diagnostic mode: replace every bump factor by f ≡ c, turning the
    /// sweep into a flat-torus oracle run (ratio → 1 exactly).
    pub constant_factor: Option<f64>,
    /// Default directory for report files; the driver decides names.
    pub output_dir: Option<PathBuf>,
    /// Worker threads; 0 uses the global rayon default.
    pub threads: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            period: 1.0,
            nodes_per_axis: 128,
            delta: 0.125,
            alphas: vec![0.0625, 0.03125],
            epsilon_ratios: vec![0.5, 0.25, 0.125, 0.0625],
            spin: SpinStructure::TRIVIAL,
            laplace_tol: 1e-10,
            dirac_tol: 1e-10,
            kernel_tol: DEFAULT_KERNEL_TOL,
            constant_factor: None,
            output_dir: None,
            threads: 0,
            seed: DEFAULT_SEED,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(Error::Config(format!(
                "period must be positive and finite, got {}",
                self.period
            )));
        }
        if self.nodes_per_axis < 8 || self.nodes_per_axis % 2 != 0 {
            return Err(Error::Config(format!(
                "nodes_per_axis must be even and at least 8, got {}",
                self.nodes_per_axis
            )));
        }
        if !(self.delta > 0.0) || self.delta > self.period / 4.0 {
            return Err(Error::Config(format!(
                "need 0 < δ ≤ period/4, got δ = {}, period = {}",
                self.delta, self.period
            )));
        }
        if self.alphas.is_empty() {
            return Err(Error::Config("alphas must be nonempty".into()));
        }
        for &a in &self.alphas {
            if !(a > 0.0) || a > self.delta {
                return Err(Error::Config(format!(
                    "need 0 < α ≤ δ for every α, got α = {a}, δ = {}",
                    self.delta
                )));
            }
        }
        if self.epsilon_ratios.is_empty() {
            return Err(Error::Config("epsilon_ratios must be nonempty".into()));
        }
        for &r in &self.epsilon_ratios {
            if !(r > 0.0) || r > 1.0 {
                return Err(Error::Config(format!(
                    "epsilon ratios must lie in (0, 1] so that ε ≤ α, got {r}"
                )));
            }
        }
        for (name, tol) in [
            ("laplace_tol", self.laplace_tol),
            ("dirac_tol", self.dirac_tol),
            ("kernel_tol", self.kernel_tol),
        ] {
            if !(tol > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {tol}")));
            }
        }
        if let Some(c) = self.constant_factor {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::Config(format!(
                    "constant factor must be positive and finite, got {c}"
                )));
            }
        }
        Ok(())
    }

    /// The (α, ε) pairs in output order: α ascending, ε descending.
    /// Exact duplicates are collapsed so the pair count is well-defined.
    pub fn pairs(&self) -> Vec<(f64, f64)> {
        let mut alphas = self.alphas.clone();
        alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        alphas.dedup();
        let mut ratios = self.epsilon_ratios.clone();
        ratios.sort_by(|a, b| b.partial_cmp(a).unwrap());
        ratios.dedup();
        let mut out = Vec::with_capacity(alphas.len() * ratios.len());
        for &a in &alphas {
            for &r in &ratios {
                out.push((a, a * r));
            }
        }
        out
    }
}

/// One sweep point. Failed solves leave NaN columns and a diagnostic in
/// `error`; the record is never dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub alpha: f64,
    pub epsilon: f64,
    #[serde(with = "nan_as_null")]
    pub mu1: f64,
    #[serde(with = "nan_as_null")]
    pub lambda1: f64,
    #[serde(with = "nan_as_null")]
    pub volume: f64,
    #[serde(with = "nan_as_null")]
    pub mu1_times_vol: f64,
    #[serde(with = "nan_as_null")]
    pub lambda1_sq_times_vol: f64,
    /// λ₁²·Vol / μ₁·Vol, computed from the stored products.
    #[serde(with = "nan_as_null")]
    pub ratio: f64,
    #[serde(with = "nan_as_null")]
    pub witness_upper_bound: f64,
    #[serde(with = "nan_as_null")]
    pub i1: f64,
    #[serde(with = "nan_as_null")]
    pub i2: f64,
    #[serde(with = "nan_as_null")]
    pub denominator: f64,
    pub kernel_dim: usize,
    #[serde(with = "nan_as_null")]
    pub residual_mu: f64,
    #[serde(with = "nan_as_null")]
    pub residual_lambda: f64,
    /// Seconds spent on this record; metadata, not part of the schema.
    pub wall_time: f64,
    pub error: Option<String>,
}

impl SweepRecord {
    fn unsolved(alpha: f64, epsilon: f64) -> Self {
        SweepRecord {
            alpha,
            epsilon,
            mu1: f64::NAN,
            lambda1: f64::NAN,
            volume: f64::NAN,
            mu1_times_vol: f64::NAN,
            lambda1_sq_times_vol: f64::NAN,
            ratio: f64::NAN,
            witness_upper_bound: f64::NAN,
            i1: f64::NAN,
            i2: f64::NAN,
            denominator: f64::NAN,
            kernel_dim: 0,
            residual_mu: f64::NAN,
            residual_lambda: f64::NAN,
            wall_time: 0.0,
            error: None,
        }
    }

    fn columns(&self) -> Vec<String> {
        vec![
            fmt_float(self.alpha),
            fmt_float(self.epsilon),
            fmt_float(self.mu1),
            fmt_float(self.lambda1),
            fmt_float(self.volume),
            fmt_float(self.mu1_times_vol),
            fmt_float(self.lambda1_sq_times_vol),
            fmt_float(self.ratio),
            fmt_float(self.witness_upper_bound),
            fmt_float(self.i1),
            fmt_float(self.i2),
            fmt_float(self.denominator),
            self.kernel_dim.to_string(),
            fmt_float(self.residual_mu),
            fmt_float(self.residual_lambda),
        ]
    }

    pub fn csv_row(&self) -> String {
        self.columns().join(",")
    }
}

/// Shortest round-trippable decimal; non-finite values print as "nan"
/// (gnuplot's spelling).
fn fmt_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "nan".to_string()
    }
}

fn solve_pair(
    cfg: &SweepConfig,
    grid: &TorusGrid,
    alpha: f64,
    epsilon: f64,
    rec: &mut SweepRecord,
) -> Result<()> {
    let factor = match cfg.constant_factor {
        Some(c) => constant_factor(grid, c)?,
        None => bump_factor(grid, alpha, epsilon)?,
    };
    rec.volume = generalized_volume(&factor, grid);
    let dirac_op = DiracOperator::new(*grid, cfg.spin);
    rec.kernel_dim = kernel_dimension(&dirac_op, cfg.kernel_tol)?;

    let lap_op = LaplaceOperator::new(*grid, LaplaceScheme::FourierSpectral);
    let mu = first_weighted_eigenvalue_seeded(&lap_op, &factor, cfg.laplace_tol, cfg.seed)?;
    rec.mu1 = mu.eigenvalue;
    rec.residual_mu = mu.residual;
    rec.mu1_times_vol = rec.mu1 * rec.volume;

    let lam =
        first_positive_weighted_eigenvalue_seeded(&dirac_op, &factor, cfg.dirac_tol, cfg.seed)?;
    rec.lambda1 = lam.eigenvalue;
    rec.residual_lambda = lam.residual;
    rec.lambda1_sq_times_vol = rec.lambda1 * rec.lambda1 * rec.volume;

    // ratio is derived from the stored products, never recomputed from
    // the raw eigenvalues, so the reported columns stay self-consistent
    rec.ratio = rec.lambda1_sq_times_vol / rec.mu1_times_vol;

    let profile = CutoffProfile::quintic(cfg.delta)?;
    let w = witness_spinor(grid, &profile, epsilon)?;
    let (i1, i2) = numerator_split(&w, &factor, dirac_op.gamma)?;
    rec.i1 = i1;
    rec.i2 = i2;
    rec.denominator = denominator(&w, &dirac_op)?;
    rec.witness_upper_bound = upper_bound_product(&w, &factor, &dirac_op)?;
    Ok(())
}

fn compute_record(cfg: &SweepConfig, grid: &TorusGrid, alpha: f64, epsilon: f64) -> SweepRecord {
    let start = Instant::now();
    let mut rec = SweepRecord::unsolved(alpha, epsilon);
    if let Err(e) = solve_pair(cfg, grid, alpha, epsilon, &mut rec) {
        rec.error = Some(e.to_string());
    }
    rec.wall_time = start.elapsed().as_secs_f64();
    rec
}

/// Run the full sweep. Per-pair solver failures are captured in the
/// records; only configuration-level problems abort.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let grid = make_grid(config.period, config.nodes_per_axis)?;
    let pairs = config.pairs();
    let work = |&(alpha, epsilon): &(f64, f64)| compute_record(config, &grid, alpha, epsilon);
    if config.threads > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
        Ok(pool.install(|| pairs.par_iter().map(work).collect()))
    } else {
        Ok(pairs.par_iter().map(work).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReportFormat {
    Csv,
    Json,
    Gnuplot,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "gnuplot" => Ok(ReportFormat::Gnuplot),
            other => Err(Error::Config(format!(
                "unknown report format {other:?}; expected csv, json or gnuplot"
            ))),
        }
    }
}

/// Fixed CSV schema; the header line is part of the external interface.
pub const CSV_HEADER: &str = "alpha,epsilon,mu1,lambda1,volume,mu1_vol,lambda1sq_vol,ratio,\
                              witness_bound,I1,I2,denominator,kernel_dim,residual_mu,residual_lambda";

/// JSON report envelope: records plus the configuration echo and the
/// software version that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEnvelope {
    pub version: String,
    pub config: SweepConfig,
    pub records: Vec<SweepRecord>,
}

/// Render a report to a string; [`emit_report`] writes it to a file.
pub fn render_report(
    records: &[SweepRecord],
    config: &SweepConfig,
    format: ReportFormat,
) -> Result<String> {
    if records.is_empty() {
        return Err(Error::Config("report needs at least one record".into()));
    }
    match format {
        ReportFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for rec in records {
                out.push_str(&rec.csv_row());
                out.push('\n');
            }
            Ok(out)
        }
        ReportFormat::Json => {
            let envelope = ReportEnvelope {
                version: env!("CARGO_PKG_VERSION").to_string(),
                config: config.clone(),
                records: records.to_vec(),
            };
            let mut out = serde_json::to_string_pretty(&envelope)
                .map_err(|e| Error::Inconsistency(format!("report serialization: {e}")))?;
            out.push('\n');
            Ok(out)
        }
        ReportFormat::Gnuplot => {
            // one data block per α; blocks separated by a double blank
            // line so gnuplot's `index` picks them apart
            let mut out = String::new();
            let mut current_alpha = f64::NAN;
            for rec in records {
                if rec.alpha != current_alpha {
                    if !out.is_empty() {
                        out.push_str("\n\n");
                    }
                    out.push_str(&format!("# alpha = {}\n", fmt_float(rec.alpha)));
                    out.push_str(
                        "# epsilon mu1 lambda1 volume mu1_vol lambda1sq_vol ratio \
                         witness_bound I1 I2 denominator kernel_dim residual_mu residual_lambda\n",
                    );
                    current_alpha = rec.alpha;
                }
                out.push_str(&rec.columns()[1..].join(" "));
                out.push('\n');
            }
            Ok(out)
        }
    }
}

/// Write one report file in the requested format.
pub fn emit_report(
    records: &[SweepRecord],
    config: &SweepConfig,
    format: ReportFormat,
    path: &std::path::Path,
) -> Result<()> {
    let body = render_report(records, config, format)?;
    std::fs::write(path, body)?;
    Ok(())
}
