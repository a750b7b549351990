//! Radial cutoff profiles: η ≡ 1 on B_p(δ), η ≡ 0 outside B_p(2δ),
//! smoothstep transition in the annulus.
//!
//! The transition is the order-N smoothstep: the unique degree-(2N-1)
//! polynomial s with s(0) = 0, s(1) = 1 and N-1 vanishing derivatives at
//! both ends (N = 2 is the familiar cubic 3t² - 2t³, N = 3 the quintic
//! default). It is the regularized incomplete beta integral, which gives
//! closed forms for both the polynomial and its derivative
//! s'(t) = t^{N-1}(1-t)^{N-1}/B(N,N) — the latter powers an analytic
//! radial gradient, so cutoff energies never touch numerical
//! differentiation across the profile seams.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::TorusGrid;
use serde::{Deserialize, Serialize};

/// Cutoff geometry: plateau radius δ and smoothstep order (≥ 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub delta: f64,
    /// Smoothstep order N: polynomial degree 2N-1, C^{N-1} at the seams.
    pub profile: u32,
}

impl CutoffProfile {
    pub fn new(delta: f64, profile: u32) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Config(format!("cutoff delta must be positive, got {delta}")));
        }
        if profile < 2 {
            return Err(Error::Config(format!(
                "smoothstep order must be at least 2, got {profile}"
            )));
        }
        Ok(CutoffProfile { delta, profile })
    }

    /// Quintic default (C² seams), enough regularity for the |∇η|² quadrature.
    pub fn quintic(delta: f64) -> Result<Self> {
        Self::new(delta, 3)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// B(N, N) = (N-1)!²/(2N-1)! as a cancellation-free product.
fn beta_nn(n: u32) -> f64 {
    let mut acc = 1.0 / n as f64;
    for j in 1..n {
        acc *= j as f64 / (n + j) as f64;
    }
    acc
}

/// ∫₀ᵗ u^{N-1}(1-u)^{N-1} du expanded termwise; alternating, so callers
/// keep t ≤ 1/2 where the terms decay.
fn beta_partial(n: u32, t: f64) -> f64 {
    let mut num = 0.0;
    for k in 0..n {
        let c = binomial(n - 1, k) * if k % 2 == 0 { 1.0 } else { -1.0 } / (n + k) as f64;
        num += c * t.powi((n + k) as i32);
    }
    num
}

/// Order-N smoothstep on [0, 1]: s_N(t) = B(t; N, N)/B(N, N), clamped
/// outside. The reflection s(t) = 1 - s(1-t) routes every evaluation
/// through t ≤ 1/2, keeping the termwise sum at machine precision.
pub fn smoothstep(order: u32, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let b = beta_nn(order);
    if t <= 0.5 {
        beta_partial(order, t) / b
    } else {
        1.0 - beta_partial(order, 1.0 - t) / b
    }
}

/// Derivative of the order-N smoothstep: t^{N-1}(1-t)^{N-1}/B(N,N), zero outside (0,1).
pub fn smoothstep_derivative(order: u32, t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    (t * (1.0 - t)).powi((order - 1) as i32) / beta_nn(order)
}

// Equality is sound: η and (for order ≥ 2) ∇η vanish identically on
// r = 2δ, so a support touching the cut locus never samples its kinks.
fn check_support(grid: &TorusGrid, profile: &CutoffProfile) -> Result<()> {
    if 2.0 * profile.delta <= grid.period / 2.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "cutoff support too large: need 2δ ≤ period/2, got δ = {}, period = {}",
            profile.delta, grid.period
        )))
    }
}

/// η(r): 1 on r ≤ δ, 0 on r ≥ 2δ, 1 - s((r-δ)/δ) in between.
pub fn cutoff_field(grid: &TorusGrid, profile: &CutoffProfile) -> Result<ScalarField> {
    check_support(grid, profile)?;
    let d = profile.delta;
    Ok(ScalarField::from_fn(grid.nodes_per_axis, |i, j| {
        let r = grid.r_squared(i, j).sqrt();
        if r <= d {
            1.0
        } else if r >= 2.0 * d {
            0.0
        } else {
            1.0 - smoothstep(profile.profile, (r - d) / d)
        }
    }))
}

/// Analytic radial gradient ∇η = -s'((r-δ)/δ)/δ · (x/r); exact nodewise.
pub fn cutoff_gradient(grid: &TorusGrid, profile: &CutoffProfile) -> Result<(ScalarField, ScalarField)> {
    check_support(grid, profile)?;
    let n = grid.nodes_per_axis;
    let d = profile.delta;
    let mut gx = ScalarField::zeros(n);
    let mut gy = ScalarField::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let (dx, dy) = grid.displacement(i, j);
            let r = (dx * dx + dy * dy).sqrt();
            if r > d && r < 2.0 * d {
                let slope = -smoothstep_derivative(profile.profile, (r - d) / d) / d;
                gx.values[grid.index(i, j)] = slope * dx / r;
                gy.values[grid.index(i, j)] = slope * dy / r;
            }
        }
    }
    Ok((gx, gy))
}
