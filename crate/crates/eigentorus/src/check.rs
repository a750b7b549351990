//! Self-check suites for the numerical core.
//!
//! Five fast, independent audits, designed to be run as a battery before
//! trusting sweep output:
//!
//! * **flat-oracles** — with f ≡ 1 the discrete operators must reproduce
//!   the exact torus spectra: the low Laplace pencil eigenvalues through
//!   the dense oracle, and the Dirac action on every Fourier mode against
//!   the shifted-lattice symbol, for all four spin structures.
//! * **identities** — the integration-by-parts identity on random
//!   band-limited pairs and the bump Poincaré–Sobolev slack on random
//!   admissible fields.
//! * **covariance** — the conformal covariance of the Dirac operator:
//!   its residual must fall by orders of magnitude when the grid doubles
//!   on a smooth factor. A corrupted Clifford convention leaves an O(1)
//!   floor and fails here.
//! * **symmetry** — self-adjointness of both operators under the flat
//!   pairing, and the ±λ symmetry of the full dense Dirac spectrum.
//! * **imaginarity** — ⟨c(v)ψ, ψ⟩ is purely imaginary, pointwise, both
//!   on random data and on the witness cutoff annulus; the designated
//!   negative control for a corrupted gamma convention.
//!
//! Suites report `Passed`/`Failed` plus per-check detail lines; a
//! tolerance pushed below the rounding floor is reported as
//! `ToleranceInfeasible` — a configuration problem, not a failure.

use crate::analysis::{check_integration_identity, check_poincare_bump};
use crate::conformal::{bump_factor, constant_factor, custom_factor};
use crate::cutoff::CutoffProfile;
use crate::dirac::{
    apply_dirac, conformal_covariance_residual, dense_dirac_oracle,
    first_positive_weighted_eigenvalue_seeded, kernel_dimension, DiracOperator, GammaConvention,
    SpinStructure, DEFAULT_KERNEL_TOL,
};
use crate::error::Result;
use crate::field::ScalarField;
use crate::grid::{make_grid, TorusGrid};
use crate::laplace::{
    apply_laplacian, dense_laplace_oracle, first_weighted_eigenvalue_seeded, LaplaceOperator,
    LaplaceScheme,
};
use crate::sampling::{band_limited_scalar, band_limited_spinor};
use crate::solver::DEFAULT_SEED;
use crate::spectral::{signed_mode, Fft2};
use crate::witness::{cross_term_imaginarity_max, witness_spinor};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteStatus {
    Passed,
    Failed,
    /// The requested tolerance sits below the rounding floor; nothing can
    /// certify it either way. Distinct from failure by contract.
    ToleranceInfeasible,
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub status: SuiteStatus,
    pub details: Vec<String>,
}

/// Identity residuals below this are indistinguishable from rounding at
/// the suite's grid sizes; tighter requests are infeasible, not failures.
pub const IDENTITY_TOL_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Copy)]
pub struct CheckConfig {
    pub seed: u64,
    /// Clifford convention under test; `Corrupted` is the negative
    /// control and must fail the imaginarity and covariance suites.
    pub gamma: GammaConvention,
    /// Tolerance for the integration-identity audit.
    pub identity_tol: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            seed: DEFAULT_SEED,
            gamma: GammaConvention::Standard,
            identity_tol: 1e-8,
        }
    }
}

struct Suite {
    name: &'static str,
    details: Vec<String>,
    failed: bool,
}

impl Suite {
    fn new(name: &'static str) -> Self {
        Suite { name, details: Vec::new(), failed: false }
    }

    fn check(&mut self, ok: bool, line: String) {
        let prefix = if ok { "ok" } else { "FAIL" };
        self.details.push(format!("{prefix}: {line}"));
        self.failed |= !ok;
    }

    fn finish(self) -> SuiteOutcome {
        SuiteOutcome {
            name: self.name,
            status: if self.failed { SuiteStatus::Failed } else { SuiteStatus::Passed },
            details: self.details,
        }
    }
}

/// Worst normalized deviation of the discrete Dirac action from the
/// shifted-lattice symbol, probed over every Fourier mode at once: both
/// chirality channels are filled with unit-magnitude random phases,
/// pushed through the nodal operator, and each output coefficient is
/// compared against w = (2π/L)·((m₁+s₁) + i(m₂+s₂)) rebuilt from integer
/// mode arithmetic. Any mode mixing or symbol error shows up as an O(1)
/// deviation on the affected coefficients; the spectrum of the analytic
/// per-mode block [[0, w̄], [w, 0]] is ±|w| exactly.
pub fn flat_dirac_lattice_deviation(
    grid: &TorusGrid,
    spin: SpinStructure,
    seed: u64,
) -> Result<f64> {
    let n = grid.nodes_per_axis;
    let op = DiracOperator::new(*grid, spin);
    let fft = Fft2::new(n);
    let tau = 2.0 * std::f64::consts::PI / grid.period;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unit_phases = |count: usize| -> Vec<Complex64> {
        (0..count)
            .map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect()
    };
    let p_hat = unit_phases(n * n);
    let q_hat = unit_phases(n * n);

    // nodal fields whose forward transforms are exactly the drawn
    // coefficient vectors
    let mut phi = crate::field::SpinorField::zeros(n);
    phi.plus.copy_from_slice(&p_hat);
    phi.minus.copy_from_slice(&q_hat);
    fft.inverse(&mut phi.plus);
    fft.inverse(&mut phi.minus);

    let mut out = apply_dirac(&op, &phi)?;
    fft.forward(&mut out.plus);
    fft.forward(&mut out.minus);

    let mut worst = 0.0f64;
    for a in 0..n {
        let m1 = signed_mode(a, n) as f64 + spin.shift_x();
        for b in 0..n {
            let m2 = signed_mode(b, n) as f64 + spin.shift_y();
            let w = Complex64::new(tau * m1, tau * m2);
            let k = a * n + b;
            let scale = tau * (1.0 + m1.hypot(m2));
            worst = worst.max((out.plus[k] - w.conj() * q_hat[k]).norm() / scale);
            worst = worst.max((out.minus[k] - w * p_hat[k]).norm() / scale);
        }
    }
    Ok(worst)
}

fn flat_oracle_suite(cfg: &CheckConfig) -> Result<SuiteOutcome> {
    let mut suite = Suite::new("flat-oracles");
    let grid = make_grid(2.0 * std::f64::consts::PI, 32)?;
    let flat = constant_factor(&grid, 1.0)?;

    let low = dense_laplace_oracle(&flat, &grid, 6)?;
    let expected = [0.0, 1.0, 1.0, 1.0, 1.0, 2.0];
    let worst = low
        .iter()
        .zip(expected)
        .map(|(got, want)| (got - want).abs())
        .fold(0.0, f64::max);
    suite.check(
        worst <= 1e-10,
        format!("dense Laplace low spectrum vs [0, 1, 1, 1, 1, 2]: worst deviation {worst:.3e}"),
    );

    let lap_op = LaplaceOperator::new(grid, LaplaceScheme::FourierSpectral);
    let mu = first_weighted_eigenvalue_seeded(&lap_op, &flat, 1e-10, cfg.seed)?.eigenvalue;
    suite.check(
        (mu - 1.0).abs() <= 1e-8,
        format!("iterative μ₁ on the flat torus: {mu} vs 1"),
    );

    for spin in SpinStructure::all() {
        let dev = flat_dirac_lattice_deviation(&grid, spin, cfg.seed)?;
        suite.check(
            dev <= 1e-10,
            format!("Dirac action vs shifted lattice ({spin}): worst deviation {dev:.3e}"),
        );
        let op = DiracOperator::new(grid, spin);
        let kdim = kernel_dimension(&op, DEFAULT_KERNEL_TOL)?;
        let expected_dim = if spin == SpinStructure::TRIVIAL { 2 } else { 0 };
        suite.check(
            kdim == expected_dim,
            format!("harmonic spinors ({spin}): {kdim} vs {expected_dim}"),
        );
        // smallest positive lattice magnitude at L = 2π
        let expected_lambda = match (spin.half_x, spin.half_y) {
            (false, false) => 1.0,
            (true, true) => 0.5f64.sqrt(),
            _ => 0.5,
        };
        let lam =
            first_positive_weighted_eigenvalue_seeded(&op, &flat, 1e-10, cfg.seed)?.eigenvalue;
        suite.check(
            (lam - expected_lambda).abs() <= 1e-8,
            format!("iterative λ₁ ({spin}): {lam} vs {expected_lambda}"),
        );
    }
    Ok(suite.finish())
}

fn identity_suite(cfg: &CheckConfig) -> Result<SuiteOutcome> {
    let mut suite = Suite::new("identities");
    if cfg.identity_tol < IDENTITY_TOL_FLOOR {
        return Ok(SuiteOutcome {
            name: suite.name,
            status: SuiteStatus::ToleranceInfeasible,
            details: vec![format!(
                "identity tolerance {:.1e} sits below the rounding floor {IDENTITY_TOL_FLOOR:.0e} \
                 at these grid sizes; nothing can be certified at that level",
                cfg.identity_tol
            )],
        });
    }

    let grid = make_grid(1.0, 48)?;
    let mut worst = 0.0f64;
    for draw in 0..100u64 {
        let u = band_limited_scalar(&grid, 8, cfg.seed.wrapping_add(2 * draw));
        let v = band_limited_scalar(&grid, 8, cfg.seed.wrapping_add(2 * draw + 1));
        worst = worst.max(check_integration_identity(&u, &v, &grid));
    }
    suite.check(
        worst <= cfg.identity_tol,
        format!(
            "integration identity over 100 band-limited pairs: worst residual {worst:.3e} \
             (tolerance {:.1e})",
            cfg.identity_tol
        ),
    );

    let fine = make_grid(1.0, 96)?;
    let alpha = 0.125;
    let envelope = crate::cutoff::cutoff_field(&fine, &CutoffProfile::quintic(alpha / 2.0)?)?;
    let mut min_slack = f64::INFINITY;
    for (i, epsilon) in [alpha / 2.0, alpha / 4.0].into_iter().enumerate() {
        for draw in 0..25u64 {
            let seed = cfg.seed.wrapping_add(1000 + 100 * i as u64 + draw);
            let u = band_limited_scalar(&fine, 10, seed).mul(&envelope);
            min_slack = min_slack.min(check_poincare_bump(&u, alpha, epsilon, &fine)?);
        }
    }
    suite.check(
        min_slack >= -1e-6,
        format!("Poincaré slack over 50 admissible fields: minimum {min_slack:.3e} ≥ -1e-6"),
    );
    Ok(suite.finish())
}

fn smooth_test_factor(grid: &TorusGrid) -> Result<crate::conformal::ConformalFactor> {
    let n = grid.nodes_per_axis;
    let l = grid.period;
    let values = ScalarField::from_fn(n, |i, j| {
        let x = i as f64 * grid.spacing;
        let y = j as f64 * grid.spacing;
        1.0 + 0.25 * (2.0 * std::f64::consts::PI * x / l).cos()
            + 0.3 * (2.0 * std::f64::consts::PI * y / l).sin()
    });
    custom_factor(grid, values)
}

fn covariance_suite(cfg: &CheckConfig) -> Result<SuiteOutcome> {
    let mut suite = Suite::new("covariance");
    let mut residuals = Vec::new();
    for n in [16usize, 32] {
        let grid = make_grid(1.0, n)?;
        let factor = smooth_test_factor(&grid)?;
        let op = DiracOperator::with_gamma(grid, SpinStructure::TRIVIAL, cfg.gamma);
        let phi = band_limited_spinor(&grid, 2, cfg.seed.wrapping_add(7));
        residuals.push(conformal_covariance_residual(&op, &factor, &phi)?);
    }
    suite.check(
        residuals[1] <= 1e-6,
        format!("covariance residual at n = 32: {:.3e} ≤ 1e-6", residuals[1]),
    );
    let gain = residuals[0] / residuals[1].max(f64::MIN_POSITIVE);
    suite.check(
        gain >= 1e2,
        format!(
            "covariance residual decay n = 16 → 32: {:.3e} → {:.3e} (gain {gain:.1e} ≥ 1e2)",
            residuals[0], residuals[1]
        ),
    );
    Ok(suite.finish())
}

fn symmetry_suite(cfg: &CheckConfig) -> Result<SuiteOutcome> {
    let mut suite = Suite::new("symmetry");
    let grid = make_grid(1.0, 24)?;
    let dirac_op = DiracOperator::new(grid, SpinStructure::TRIVIAL);
    let lap_op = LaplaceOperator::new(grid, LaplaceScheme::FourierSpectral);

    let mut worst_dirac = 0.0f64;
    let mut worst_laplace = 0.0f64;
    for draw in 0..20u64 {
        let phi = band_limited_spinor(&grid, 5, cfg.seed.wrapping_add(10_000 + draw));
        let chi = band_limited_spinor(&grid, 5, cfg.seed.wrapping_add(20_000 + draw));
        let dphi = apply_dirac(&dirac_op, &phi)?;
        let dchi = apply_dirac(&dirac_op, &chi)?;
        let asym = (dphi.inner(&chi) - phi.inner(&dchi)).norm();
        worst_dirac = worst_dirac.max(asym / (dphi.norm_l2() * chi.norm_l2()));

        let u = band_limited_scalar(&grid, 5, cfg.seed.wrapping_add(30_000 + draw));
        let w = band_limited_scalar(&grid, 5, cfg.seed.wrapping_add(40_000 + draw));
        let lu = apply_laplacian(&lap_op, &u);
        let lw = apply_laplacian(&lap_op, &w);
        let dot = |a: &ScalarField, b: &ScalarField| -> f64 {
            a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum()
        };
        let asym = (dot(&lu, &w) - dot(&u, &lw)).abs();
        worst_laplace = worst_laplace.max(asym / (lu.norm_l2() * w.norm_l2()));
    }
    suite.check(
        worst_dirac <= 1e-12,
        format!("Dirac self-adjointness over 20 pairs: worst asymmetry {worst_dirac:.3e}"),
    );
    suite.check(
        worst_laplace <= 1e-12,
        format!("Laplace self-adjointness over 20 pairs: worst asymmetry {worst_laplace:.3e}"),
    );

    // the full dense pencil spectrum must be symmetric about zero
    let small = make_grid(1.0, 12)?;
    let factor = bump_factor(&small, 0.2, 0.1)?;
    let mut spectrum = dense_dirac_oracle(&factor, &small, SpinStructure::TRIVIAL, 2 * 12 * 12)?;
    spectrum.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut worst_pairing = 0.0f64;
    for i in 0..spectrum.len() / 2 {
        let sum = spectrum[i] + spectrum[spectrum.len() - 1 - i];
        worst_pairing = worst_pairing.max(sum.abs() / (1.0 + spectrum[i].abs()));
    }
    suite.check(
        worst_pairing <= 1e-8,
        format!("dense Dirac spectrum ±λ pairing: worst defect {worst_pairing:.3e}"),
    );
    Ok(suite.finish())
}

fn imaginarity_suite(cfg: &CheckConfig) -> Result<SuiteOutcome> {
    let mut suite = Suite::new("imaginarity");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0xc11f));
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let v: (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let psi = (
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        );
        let scale = v.0.hypot(v.1) * (psi.0.norm_sqr() + psi.1.norm_sqr());
        if scale < 1e-12 {
            continue;
        }
        let c = cfg.gamma.clifford(v, psi);
        let re = (c.0.conj() * psi.0 + c.1.conj() * psi.1).re;
        worst = worst.max(re.abs() / scale);
    }
    suite.check(
        worst <= 1e-10,
        format!("pointwise Re⟨c(v)ψ, ψ⟩ over 100 random draws: worst {worst:.3e}"),
    );

    let grid = make_grid(1.0, 48)?;
    let witness = witness_spinor(&grid, &CutoffProfile::quintic(0.2)?, 0.1)?;
    let cross = cross_term_imaginarity_max(&witness, cfg.gamma);
    suite.check(
        cross <= 1e-10,
        format!("witness cross-term imaginarity on the cutoff annulus: worst {cross:.3e}"),
    );
    Ok(suite.finish())
}

/// Run every suite; the order is fixed and all suites always run, so a
/// report shows the full picture even when an early suite fails.
pub fn run_check_suites(cfg: &CheckConfig) -> Result<Vec<SuiteOutcome>> {
    Ok(vec![
        flat_oracle_suite(cfg)?,
        identity_suite(cfg)?,
        covariance_suite(cfg)?,
        symmetry_suite(cfg)?,
        imaginarity_suite(cfg)?,
    ])
}

/// Process exit code for a batch of suite outcomes: check failures
/// dominate (1), then infeasible tolerances (2), then success (0).
pub fn overall_exit_code(outcomes: &[SuiteOutcome]) -> i32 {
    if outcomes.iter().any(|o| o.status == SuiteStatus::Failed) {
        1
    } else if outcomes.iter().any(|o| o.status == SuiteStatus::ToleranceInfeasible) {
        2
    } else {
        0
    }
}
