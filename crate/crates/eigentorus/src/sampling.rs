//! Seeded band-limited random fields for property tests and check suites.
//!
//! Samples are built by direct trigonometric sums — deliberately not through
//! the FFT pipeline they are used to exercise — so a sampling bug and a
//! transform bug cannot cancel. All draws are ChaCha-seeded and reproducible.

use crate::conformal::{custom_factor, ConformalFactor};
use crate::error::Result;
use crate::field::{ScalarField, SpinorField};
use crate::grid::TorusGrid;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Real field u(x) = Σ_{|m₁|,|m₂| ≤ band} a_m cos(2π m·x/L + φ_m),
/// coefficients uniform in [-1, 1]. Trigonometric degree ≤ band per axis,
/// so spectral operations on it are exact whenever band < n/2.
pub fn band_limited_scalar(grid: &TorusGrid, band: usize, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = band as i64;
    let tau = 2.0 * std::f64::consts::PI / grid.period;
    let modes: Vec<(f64, f64, f64, f64)> = (-b..=b)
        .flat_map(|m1| (-b..=b).map(move |m2| (m1, m2)))
        .map(|(m1, m2)| {
            (
                m1 as f64 * tau,
                m2 as f64 * tau,
                rng.gen_range(-1.0..1.0),
                rng.gen_range(0.0..2.0 * std::f64::consts::PI),
            )
        })
        .collect();
    let h = grid.spacing;
    ScalarField::from_fn(grid.nodes_per_axis, |i, j| {
        let (x, y) = (i as f64 * h, j as f64 * h);
        modes
            .iter()
            .map(|&(k1, k2, a, phi)| a * (k1 * x + k2 * y + phi).cos())
            .sum()
    })
}

/// Complex-component spinor with both components independent band-limited
/// combinations of e^{i k·x}, coefficients uniform in the unit square.
pub fn band_limited_spinor(grid: &TorusGrid, band: usize, seed: u64) -> SpinorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = band as i64;
    let tau = 2.0 * std::f64::consts::PI / grid.period;
    let draw = |rng: &mut ChaCha8Rng| -> Vec<(f64, f64, Complex64)> {
        let mut modes = Vec::new();
        for m1 in -b..=b {
            for m2 in -b..=b {
                modes.push((
                    m1 as f64 * tau,
                    m2 as f64 * tau,
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                ));
            }
        }
        modes
    };
    let plus_modes = draw(&mut rng);
    let minus_modes = draw(&mut rng);
    let h = grid.spacing;
    let n = grid.nodes_per_axis;
    let mut out = SpinorField::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (i as f64 * h, j as f64 * h);
            let eval = |modes: &[(f64, f64, Complex64)]| -> Complex64 {
                modes
                    .iter()
                    .map(|&(k1, k2, c)| c * Complex64::new(0.0, k1 * x + k2 * y).exp())
                    .sum()
            };
            out.plus[i * n + j] = eval(&plus_modes);
            out.minus[i * n + j] = eval(&minus_modes);
        }
    }
    out
}

/// Strictly positive smooth factor f = exp(w) with w band-limited and
/// rescaled to ‖w‖_∞ = amplitude; used for covariance and oracle tests
/// where the factor must be C^∞ (no bump kink).
pub fn random_smooth_factor(
    grid: &TorusGrid,
    band: usize,
    amplitude: f64,
    seed: u64,
) -> Result<ConformalFactor> {
    let mut w = band_limited_scalar(grid, band, seed);
    let m = w.max_abs();
    if m > 0.0 {
        let s = amplitude / m;
        for v in w.values.iter_mut() {
            *v *= s;
        }
    }
    let vals: Vec<f64> = w.values.iter().map(|v| v.exp()).collect();
    custom_factor(grid, ScalarField::from_values(grid.nodes_per_axis, vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn scalar_draws_are_seed_deterministic_and_seed_sensitive() {
        let g = make_grid(1.0, 32).unwrap();
        let a = band_limited_scalar(&g, 3, 7);
        let b = band_limited_scalar(&g, 3, 7);
        let c = band_limited_scalar(&g, 3, 8);
        assert_eq!(a.values, b.values);
        assert!(a.values.iter().zip(&c.values).any(|(x, y)| x != y));
    }

    #[test]
    fn spinor_draw_is_finite_and_nonzero() {
        let g = make_grid(1.0, 16).unwrap();
        let s = band_limited_spinor(&g, 2, 11);
        assert!(s.all_finite());
        assert!(s.norm_l2() > 0.0);
    }

    #[test]
    fn smooth_factor_is_positive_with_controlled_range() {
        let g = make_grid(1.0, 32).unwrap();
        let f = random_smooth_factor(&g, 2, 0.4, 3).unwrap();
        assert!(f.min_value() >= (-0.4f64).exp() - 1e-12);
        assert!(f.max_value() <= 0.4f64.exp() + 1e-12);
        f.check_positive().unwrap();
    }
}
