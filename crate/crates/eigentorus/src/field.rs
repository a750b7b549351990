//! Nodal fields: real scalars and two-component complex spinors.
//!
//! Storage is row-major over the n×n grid. A spinor has components
//! (φ⁺, φ⁻) and pointwise norm |φ|² = |φ⁺|² + |φ⁻|²; the chirality
//! involution σ₃ acts by (φ⁺, φ⁻) ↦ (φ⁺, -φ⁻).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Real-valued nodal field on an n×n periodic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub nodes_per_axis: usize,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        ScalarField { nodes_per_axis: n, values: vec![0.0; n * n] }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        ScalarField { nodes_per_axis: n, values: vec![c; n * n] }
    }

    pub fn from_values(n: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), n * n, "field length must be n²");
        ScalarField { nodes_per_axis: n, values }
    }

    /// Fill from a function of the node indices.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(i, j));
            }
        }
        ScalarField { nodes_per_axis: n, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Plain ℓ² norm of the nodal values (no quadrature weight).
    pub fn norm_l2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Nodewise a + s·b.
    pub fn axpy(&mut self, s: f64, b: &ScalarField) {
        assert_eq!(self.len(), b.len());
        for (a, bv) in self.values.iter_mut().zip(&b.values) {
            *a += s * bv;
        }
    }

    /// Nodewise product.
    pub fn mul(&self, b: &ScalarField) -> ScalarField {
        assert_eq!(self.len(), b.len());
        ScalarField {
            nodes_per_axis: self.nodes_per_axis,
            values: self.values.iter().zip(&b.values).map(|(a, b)| a * b).collect(),
        }
    }
}

/// Two-component complex spinor field on an n×n periodic grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinorField {
    pub nodes_per_axis: usize,
    pub plus: Vec<Complex64>,
    pub minus: Vec<Complex64>,
}

impl SpinorField {
    pub fn zeros(n: usize) -> Self {
        SpinorField {
            nodes_per_axis: n,
            plus: vec![Complex64::ZERO; n * n],
            minus: vec![Complex64::ZERO; n * n],
        }
    }

    /// The two constant unit spinors spanning the flat trivial-structure kernel.
    pub fn constant(n: usize, plus: Complex64, minus: Complex64) -> Self {
        SpinorField {
            nodes_per_axis: n,
            plus: vec![plus; n * n],
            minus: vec![minus; n * n],
        }
    }

    pub fn len(&self) -> usize {
        self.plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty()
    }

    /// Pointwise squared norm |φ⁺|² + |φ⁻|² as a scalar field.
    pub fn norm_squared_field(&self) -> ScalarField {
        ScalarField {
            nodes_per_axis: self.nodes_per_axis,
            values: self
                .plus
                .iter()
                .zip(&self.minus)
                .map(|(p, m)| p.norm_sqr() + m.norm_sqr())
                .collect(),
        }
    }

    /// Plain ℓ² norm over all components (no quadrature weight).
    pub fn norm_l2(&self) -> f64 {
        self.norm_squared_field().values.iter().sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.plus.iter().chain(&self.minus).all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Multiply both components nodewise by a real field.
    pub fn scale_by(&self, w: &ScalarField) -> SpinorField {
        assert_eq!(self.len(), w.len());
        SpinorField {
            nodes_per_axis: self.nodes_per_axis,
            plus: self.plus.iter().zip(&w.values).map(|(z, s)| z * s).collect(),
            minus: self.minus.iter().zip(&w.values).map(|(z, s)| z * s).collect(),
        }
    }

    /// Chirality involution σ₃: (φ⁺, φ⁻) ↦ (φ⁺, -φ⁻).
    pub fn chirality_flip(&self) -> SpinorField {
        SpinorField {
            nodes_per_axis: self.nodes_per_axis,
            plus: self.plus.clone(),
            minus: self.minus.iter().map(|z| -z).collect(),
        }
    }

    /// Hermitian ℓ² pairing Σ (ā⁺b⁺ + ā⁻b⁻), conjugate-linear in `self`.
    pub fn inner(&self, b: &SpinorField) -> Complex64 {
        assert_eq!(self.len(), b.len());
        let mut acc = Complex64::ZERO;
        for k in 0..self.len() {
            acc += self.plus[k].conj() * b.plus[k] + self.minus[k].conj() * b.minus[k];
        }
        acc
    }
}
