//! Fourier machinery: 2-D FFTs, wavenumber lattices, spectral derivatives,
//! and the periodic Gaussian mollifier.
//!
//! Conventions: the forward transform is unnormalized and the inverse
//! divides by n², matching û_k = Σ_x u(x) e^{-ik·x-like phases}; signed
//! integer modes m ∈ {-n/2, …, n/2-1} give wavenumbers ξ = (2π/L)(m + s)
//! where the shift s ∈ {0, ½} encodes periodic/antiperiodic boundary
//! conditions per axis (used by the spin structures).
//!
//! The gradient multiplier zeroes the Nyquist mode m = -n/2, the standard
//! choice that keeps derivatives of real fields real; it is exact on
//! trigonometric polynomials of degree < n/2, which is the contract every
//! caller relies on. The Laplacian symbol |ξ|² keeps all modes.

use crate::field::ScalarField;
use crate::grid::TorusGrid;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Cached 1-D plans for n-point transforms, applied along both axes.
pub struct Fft2 {
    pub n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    fn apply_rows(&self, plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        let n = self.n;
        let mut scratch = vec![Complex64::ZERO; plan.get_inplace_scratch_len()];
        for row in buf.chunks_exact_mut(n) {
            plan.process_with_scratch(row, &mut scratch);
        }
    }

    fn apply_cols(&self, plan: &Arc<dyn Fft<f64>>, buf: &mut [Complex64]) {
        let n = self.n;
        let mut scratch = vec![Complex64::ZERO; plan.get_inplace_scratch_len()];
        let mut col = vec![Complex64::ZERO; n];
        for j in 0..n {
            for i in 0..n {
                col[i] = buf[i * n + j];
            }
            plan.process_with_scratch(&mut col, &mut scratch);
            for i in 0..n {
                buf[i * n + j] = col[i];
            }
        }
    }

    /// In-place unnormalized forward 2-D transform of a row-major n×n buffer.
    pub fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n * self.n);
        self.apply_rows(&self.fwd, buf);
        self.apply_cols(&self.fwd, buf);
    }

    /// In-place inverse 2-D transform, normalized by 1/n².
    pub fn inverse(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n * self.n);
        self.apply_rows(&self.inv, buf);
        self.apply_cols(&self.inv, buf);
        let scale = 1.0 / (self.n * self.n) as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }
}

/// Signed integer mode for row/column index i on an even n-point axis.
#[inline]
pub fn signed_mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Wavenumbers ξ_i = (2π/L)(m_i + shift) along one axis.
pub fn wavenumbers(n: usize, period: f64, shift: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / period;
    (0..n).map(|i| base * (signed_mode(i, n) as f64 + shift)).collect()
}

/// Laplacian symbol |ξ|² on the unshifted n×n mode lattice (row-major).
pub fn laplacian_symbol(n: usize, period: f64) -> Vec<f64> {
    let xi = wavenumbers(n, period, 0.0);
    let mut sym = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            sym.push(xi[a] * xi[a] + xi[b] * xi[b]);
        }
    }
    sym
}

pub fn scalar_to_complex(f: &ScalarField) -> Vec<Complex64> {
    f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

pub fn complex_to_scalar_re(n: usize, buf: &[Complex64]) -> ScalarField {
    ScalarField::from_values(n, buf.iter().map(|z| z.re).collect())
}

/// Spectral gradient (∂₁u, ∂₂u); Nyquist rows are dropped from the
/// derivative multiplier so the result is real and exact for band-limited
/// input (degree < n/2).
pub fn gradient(f: &ScalarField, grid: &TorusGrid, fft: &Fft2) -> (ScalarField, ScalarField) {
    let n = grid.nodes_per_axis;
    let xi = wavenumbers(n, grid.period, 0.0);
    let mut hat = scalar_to_complex(f);
    fft.forward(&mut hat);
    let mut gx = vec![Complex64::ZERO; n * n];
    let mut gy = vec![Complex64::ZERO; n * n];
    for a in 0..n {
        let ka = if a == n / 2 { 0.0 } else { xi[a] };
        for b in 0..n {
            let kb = if b == n / 2 { 0.0 } else { xi[b] };
            let z = hat[a * n + b];
            gx[a * n + b] = Complex64::new(0.0, ka) * z;
            gy[a * n + b] = Complex64::new(0.0, kb) * z;
        }
    }
    fft.inverse(&mut gx);
    fft.inverse(&mut gy);
    (complex_to_scalar_re(n, &gx), complex_to_scalar_re(n, &gy))
}

/// ∫ |∇u|² dv computed in Fourier space via Parseval (uses the full
/// Laplacian symbol, so it agrees exactly with ∫ (Δu)·u dv).
pub fn dirichlet_energy(f: &ScalarField, grid: &TorusGrid, fft: &Fft2) -> f64 {
    let n = grid.nodes_per_axis;
    let sym = laplacian_symbol(n, grid.period);
    let mut hat = scalar_to_complex(f);
    fft.forward(&mut hat);
    let h2 = grid.spacing * grid.spacing;
    let scale = h2 / (n * n) as f64;
    scale
        * hat
            .iter()
            .zip(&sym)
            .map(|(z, s)| s * z.norm_sqr())
            .sum::<f64>()
}

/// Periodic Gaussian mollification: circular convolution with the sampled,
/// sum-normalized kernel exp(-r²/2w²). With nonnegative weights summing to
/// one the output is a convex combination of input values (up to FFT
/// rounding), so positivity and lower bounds survive.
pub fn gaussian_mollify(
    values: &[f64],
    grid: &TorusGrid,
    fft: &Fft2,
    width: f64,
) -> Vec<f64> {
    let n = grid.nodes_per_axis;
    assert!(width > 0.0, "mollification width must be positive");
    let mut kernel = Vec::with_capacity(n * n);
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let r2 = grid.r_squared(i, j);
            let k = (-r2 / (2.0 * width * width)).exp();
            kernel.push(k);
            total += k;
        }
    }
    let mut khat: Vec<Complex64> =
        kernel.iter().map(|&k| Complex64::new(k / total, 0.0)).collect();
    fft.forward(&mut khat);
    let mut fhat: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut fhat);
    for (f, k) in fhat.iter_mut().zip(&khat) {
        *f *= k;
    }
    fft.inverse(&mut fhat);
    fhat.iter().map(|z| z.re).collect()
}
