//! The conformal factor f and the generalized metric ḡ = f²g.
//!
//! The central object is the degenerate two-parameter family
//!
//! ```text
//! f_{α,ε}(x) = ε²/(ε² + r²)   for r = d(x, p) ≤ α,
//!              ε²/(ε² + α²)   for r > α,
//! ```
//!
//! which is Lipschitz across r = α, equals 1 at p, and concentrates the
//! volume form f² dv into a near-spherical cap of volume ≈ πε² as
//! ε/α → 0. Its exact volume has a closed form (the radial antiderivative
//! of r/(ε²+r²)² is -1/(2(ε²+r²))), used throughout as a quadrature oracle:
//!
//! ```text
//! Vol = πε²·α²/(ε²+α²) + (ε²/(ε²+α²))²·(L² - πα²).
//! ```

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::TorusGrid;
use crate::spectral::{gaussian_mollify, Fft2};
use serde::{Deserialize, Serialize};

/// How a factor was constructed; drives preconditions downstream
/// (e.g. the conformal covariance identity wants a smooth factor).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FactorKind {
    Bump,
    Constant,
    SmoothCustom,
    Mollified,
}

/// A sampled positive weight f on the grid; represents ḡ = f²g.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalFactor {
    pub values: ScalarField,
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub kind: FactorKind,
}

impl ConformalFactor {
    pub fn min_value(&self) -> f64 {
        self.values.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max_value(&self) -> f64 {
        self.values.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    pub fn check_positive(&self) -> Result<()> {
        if self.min_value() > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "conformal factor must be strictly positive; min value {}",
                self.min_value()
            )))
        }
    }
}

/// The degenerate bump family f_{α,ε} sampled nodewise with
/// minimum-image distance to p.
pub fn bump_factor(grid: &TorusGrid, alpha: f64, epsilon: f64) -> Result<ConformalFactor> {
    if !(epsilon > 0.0) || epsilon > alpha {
        return Err(Error::Config(format!(
            "bump requires 0 < ε ≤ α (chain ε ≤ α ≤ δ ≤ period/4); got ε = {epsilon}, α = {alpha}"
        )));
    }
    if !(2.0 * alpha < grid.period / 2.0) {
        return Err(Error::Config(format!(
            "bump radius too large for the grid: need 2α < period/2 (chain ε ≤ α ≤ δ ≤ period/4); \
             got α = {alpha}, period = {}",
            grid.period
        )));
    }
    let n = grid.nodes_per_axis;
    let e2 = epsilon * epsilon;
    let a2 = alpha * alpha;
    let far = e2 / (e2 + a2);
    let values = ScalarField::from_fn(n, |i, j| {
        let r2 = grid.r_squared(i, j);
        if r2 <= a2 {
            e2 / (e2 + r2)
        } else {
            far
        }
    });
    Ok(ConformalFactor {
        values,
        alpha: Some(alpha),
        epsilon: Some(epsilon),
        kind: FactorKind::Bump,
    })
}

/// Constant factor f ≡ c (the flat metric rescaled).
pub fn constant_factor(grid: &TorusGrid, c: f64) -> Result<ConformalFactor> {
    if !(c > 0.0) {
        return Err(Error::Config(format!("constant factor must be positive, got {c}")));
    }
    Ok(ConformalFactor {
        values: ScalarField::constant(grid.nodes_per_axis, c),
        alpha: None,
        epsilon: None,
        kind: FactorKind::Constant,
    })
}

/// Arbitrary positive smooth factor from nodal values.
pub fn custom_factor(grid: &TorusGrid, values: ScalarField) -> Result<ConformalFactor> {
    assert_eq!(values.len(), grid.node_count());
    let factor = ConformalFactor {
        values,
        alpha: None,
        epsilon: None,
        kind: FactorKind::SmoothCustom,
    };
    factor.check_positive()?;
    Ok(factor)
}

/// Periodic Gaussian mollification of a factor; a convex combination of
/// nodal values, so strict positivity and the minimum survive.
pub fn mollify_factor(
    factor: &ConformalFactor,
    grid: &TorusGrid,
    fft: &Fft2,
    width: f64,
) -> Result<ConformalFactor> {
    if !(width > 0.0) {
        return Err(Error::Config(format!("mollification width must be positive, got {width}")));
    }
    let smoothed = gaussian_mollify(&factor.values.values, grid, fft, width);
    let out = ConformalFactor {
        values: ScalarField::from_values(grid.nodes_per_axis, smoothed),
        alpha: factor.alpha,
        epsilon: factor.epsilon,
        kind: FactorKind::Mollified,
    };
    out.check_positive()?;
    Ok(out)
}

/// Generalized-metric volume ∫ f² dv_g by grid quadrature.
pub fn generalized_volume(factor: &ConformalFactor, grid: &TorusGrid) -> f64 {
    let f2 = factor.values.mul(&factor.values);
    grid.integrate(&f2)
}

/// Exact continuum volume of the bump family on the L-torus.
pub fn closed_form_volume(period: f64, alpha: f64, epsilon: f64) -> f64 {
    let e2 = epsilon * epsilon;
    let a2 = alpha * alpha;
    let far = e2 / (e2 + a2);
    std::f64::consts::PI * e2 * a2 / (e2 + a2)
        + far * far * (period * period - std::f64::consts::PI * a2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn bump_values_at_landmarks() {
        let g = make_grid(1.0, 64).unwrap();
        let alpha = 0.125;
        let f = bump_factor(&g, alpha, alpha).unwrap();
        // at p: ε²/ε² = 1
        assert_eq!(f.values.values[0], 1.0);
        // α = ε at r = α: 1/2 (node (alpha/h, 0) lies exactly on the interface)
        let i = (alpha / g.spacing).round() as usize;
        assert!((alpha - i as f64 * g.spacing).abs() < 1e-12, "test landmark must be a node");
        assert!((f.values.values[g.index(i, 0)] - 0.5).abs() < 1e-12);
        // α = 2ε beyond the interface: 1/5
        let f = bump_factor(&g, alpha, alpha / 2.0).unwrap();
        let far = (2.0 * alpha / g.spacing).ceil() as usize;
        assert!((f.values.values[g.index(far, 0)] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn bump_is_bounded_by_one_with_max_at_origin() {
        let g = make_grid(1.0, 32).unwrap();
        let f = bump_factor(&g, 0.2, 0.05).unwrap();
        assert!(f.max_value() <= 1.0 && f.values.values[0] == 1.0);
        assert!(f.min_value() > 0.0);
    }

    #[test]
    fn bump_rejects_bad_parameter_chains() {
        let g = make_grid(1.0, 32).unwrap();
        assert!(matches!(bump_factor(&g, 0.1, 0.2), Err(Error::Config(_))));
        assert!(matches!(bump_factor(&g, 0.3, 0.05), Err(Error::Config(_))));
        assert!(matches!(bump_factor(&g, 0.1, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn bump_is_continuous_across_the_interface() {
        // nodal values on either side of r = α differ by O(h)
        let g = make_grid(1.0, 128).unwrap();
        let (alpha, eps) = (0.125, 0.05);
        let f = bump_factor(&g, alpha, eps).unwrap();
        let i_in = (alpha / g.spacing).floor() as usize;
        let jump = (f.values.values[g.index(i_in, 0)] - f.values.values[g.index(i_in + 1, 0)]).abs();
        // |f'| ≤ 2/ε·max f near the interface ⇒ jump ≤ C·h
        let slope_bound = 2.0 / eps;
        assert!(jump <= slope_bound * g.spacing, "interface jump {jump} too large");
    }

    #[test]
    fn constant_volume_is_c_squared_area() {
        let g = make_grid(3.0, 16).unwrap();
        let f = constant_factor(&g, 0.7).unwrap();
        assert!((generalized_volume(&f, &g) - 0.49 * 9.0).abs() < 1e-12);
    }

    #[test]
    fn volume_scales_quadratically_in_the_factor() {
        let g = make_grid(1.0, 32).unwrap();
        let f = bump_factor(&g, 0.2, 0.1).unwrap();
        let v1 = generalized_volume(&f, &g);
        for c in [0.1, 3.0, 10.0] {
            let scaled = ConformalFactor {
                values: ScalarField::from_values(
                    32,
                    f.values.values.iter().map(|v| c * v).collect(),
                ),
                ..f.clone()
            };
            let vc = generalized_volume(&scaled, &g);
            assert!(
                (vc - c * c * v1).abs() <= 1e-12 * vc.abs().max(1.0),
                "c = {c}: {vc} vs {}",
                c * c * v1
            );
        }
    }

    #[test]
    fn quadrature_volume_converges_to_closed_form() {
        // resolvable bump: agreement improves with n at the quadrature rate
        let (alpha, eps) = (0.2, 0.1);
        let exact = closed_form_volume(1.0, alpha, eps);
        let mut errs = Vec::new();
        for n in [32, 64, 128, 256] {
            let g = make_grid(1.0, n).unwrap();
            let f = bump_factor(&g, alpha, eps).unwrap();
            errs.push((generalized_volume(&f, &g) - exact).abs() / exact);
        }
        assert!(errs[3] < 1e-5, "finest error {:.2e}", errs[3]);
        assert!(errs[3] < errs[0], "no convergence: {errs:?}");
    }

    #[test]
    fn volume_ratio_approaches_one_from_above() {
        // Vol/(πε²) → 1 as ε/α → 0 at fixed α — always from above on the torus.
        let alpha = 0.2;
        let mut prev = f64::INFINITY;
        for k in 1..=6 {
            let eps = alpha / (2.0f64.powi(k));
            let ratio = closed_form_volume(1.0, alpha, eps) / (std::f64::consts::PI * eps * eps);
            assert!(ratio > 1.0, "ratio {ratio} dipped below 1 at ε = {eps}");
            assert!(ratio < prev, "ratio not decreasing toward 1");
            prev = ratio;
        }
        assert!(prev < 1.25, "tail ratio {prev} still far from 1");
    }

    #[test]
    fn mollified_factor_keeps_minimum_and_positivity() {
        let g = make_grid(1.0, 64).unwrap();
        let fft = Fft2::new(64);
        let f = bump_factor(&g, 0.2, 0.05).unwrap();
        let min0 = f.min_value();
        for w in [4.0 * g.spacing, 2.0 * g.spacing, g.spacing] {
            let fw = mollify_factor(&f, &g, &fft, w).unwrap();
            assert_eq!(fw.kind, FactorKind::Mollified);
            assert!(fw.min_value() >= min0 * (1.0 - 1e-10), "min dropped: {}", fw.min_value());
        }
    }

    #[test]
    fn mollification_distance_shrinks_with_width() {
        // max-norm distance below 10·w^0.9 on a fixed grid, improving as w → 0
        let g = make_grid(1.0, 64).unwrap();
        let fft = Fft2::new(64);
        let f = bump_factor(&g, 0.125, 0.0625).unwrap();
        let mut prev = f64::INFINITY;
        for w in [4.0 * g.spacing, 2.0 * g.spacing, g.spacing] {
            let fw = mollify_factor(&f, &g, &fft, w).unwrap();
            let dist = fw
                .values
                .values
                .iter()
                .zip(&f.values.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            assert!(dist < 10.0 * w.powf(0.9), "width {w}: distance {dist}");
            assert!(dist < prev, "distance not shrinking at width {w}");
            prev = dist;
        }
    }

    #[test]
    fn mollify_fixes_constants() {
        let g = make_grid(1.0, 32).unwrap();
        let fft = Fft2::new(32);
        let f = constant_factor(&g, 2.5).unwrap();
        let fw = mollify_factor(&f, &g, &fft, 3.0 * g.spacing).unwrap();
        for v in &fw.values.values {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }
}
