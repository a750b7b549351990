//! The discretized flat square torus ℝ²/(Lℤ)².
//!
//! An n×n uniform grid with spacing h = L/n carries every field in the
//! crate. The distinguished point p sits at node (0,0), and all radial
//! quantities (bump factor, cutoff) are functions of the minimum-image
//! distance to p, which is the correct flat-torus distance as long as the
//! feature fits inside one fundamental domain.
//!
//! Quadrature is the periodic trapezoidal rule h²·Σ, which is spectrally
//! accurate for smooth integrands and exact (to rounding) for trigonometric
//! polynomials of degree below n/2.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use serde::{Deserialize, Serialize};

/// Uniform periodic grid on the square torus of side `period`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGrid {
    /// Side length L of the square torus.
    pub period: f64,
    /// Number of nodes per axis (even, ≥ 8).
    pub nodes_per_axis: usize,
    /// Grid spacing h = L/n.
    pub spacing: f64,
}

/// Build a grid; rejects odd n (the Dirac discretization needs the
/// mode lattice symmetric under k ↦ -k, which fails for odd n) and n < 8.
pub fn make_grid(period: f64, nodes_per_axis: usize) -> Result<TorusGrid> {
    if !(period > 0.0) {
        return Err(Error::Config(format!("period must be positive, got {period}")));
    }
    if nodes_per_axis < 8 {
        return Err(Error::Config(format!(
            "nodes_per_axis must be at least 8, got {nodes_per_axis}"
        )));
    }
    if nodes_per_axis % 2 != 0 {
        return Err(Error::Config(format!(
            "nodes_per_axis must be even (Fourier symmetry of the Dirac discretization), got {nodes_per_axis}"
        )));
    }
    Ok(TorusGrid {
        period,
        nodes_per_axis,
        spacing: period / nodes_per_axis as f64,
    })
}

impl TorusGrid {
    pub fn node_count(&self) -> usize {
        self.nodes_per_axis * self.nodes_per_axis
    }

    /// Row-major node index.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nodes_per_axis + j
    }

    /// Wrap a coordinate difference into [-L/2, L/2).
    #[inline]
    pub fn min_image(&self, d: f64) -> f64 {
        let l = self.period;
        let mut w = d - l * (d / l).round();
        // `round` sends exactly L/2 to L, leaving -L/2; keep the convention
        // half-open on the right so displacement is unique.
        if w >= l / 2.0 {
            w -= l;
        }
        if w < -l / 2.0 {
            w += l;
        }
        w
    }

    /// Minimum-image displacement of node (i, j) from the origin p = (0,0).
    #[inline]
    pub fn displacement(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.min_image(i as f64 * self.spacing),
            self.min_image(j as f64 * self.spacing),
        )
    }

    /// Squared minimum-image distance of node (i, j) from p.
    #[inline]
    pub fn r_squared(&self, i: usize, j: usize) -> f64 {
        let (dx, dy) = self.displacement(i, j);
        dx * dx + dy * dy
    }

    /// Minimum-image distance between two nodes.
    pub fn node_distance(&self, a: (usize, usize), b: (usize, usize)) -> f64 {
        let dx = self.min_image((a.0 as f64 - b.0 as f64) * self.spacing);
        let dy = self.min_image((a.1 as f64 - b.1 as f64) * self.spacing);
        (dx * dx + dy * dy).sqrt()
    }

    /// Periodic trapezoidal quadrature h²·Σ of a nodal field.
    pub fn integrate(&self, field: &ScalarField) -> f64 {
        debug_assert_eq!(field.values.len(), self.node_count());
        let h2 = self.spacing * self.spacing;
        h2 * field.values.iter().sum::<f64>()
    }
}

/// Free-function form of [`TorusGrid::integrate`].
pub fn integrate(field: &ScalarField, grid: &TorusGrid) -> f64 {
    grid.integrate(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn spacing_is_period_over_nodes() {
        let g = make_grid(1.0, 8).unwrap();
        assert_eq!(g.spacing, 0.125);
        let g = make_grid(2.0 * std::f64::consts::PI, 64).unwrap();
        assert!((g.spacing - 2.0 * std::f64::consts::PI / 64.0).abs() < 1e-15);
        assert!((g.spacing * g.nodes_per_axis as f64 - g.period).abs() <= f64::EPSILON * g.period);
    }

    #[test]
    fn rejects_odd_and_tiny_grids() {
        assert!(matches!(make_grid(1.0, 7), Err(Error::Config(_))));
        assert!(matches!(make_grid(1.0, 9), Err(Error::Config(_))));
        assert!(matches!(make_grid(1.0, 6), Err(Error::Config(_))));
        assert!(matches!(make_grid(-1.0, 8), Err(Error::Config(_))));
    }

    #[test]
    fn periodic_indexing_wraps() {
        let g = make_grid(1.0, 16).unwrap();
        // node i and node i+n are the same point: same displacement.
        let (dx, dy) = g.displacement(3, 5);
        let dx2 = g.min_image((3 + 16) as f64 * g.spacing);
        assert!((dx - dx2).abs() < 1e-15);
        assert!((dy - g.min_image((5 + 16) as f64 * g.spacing)).abs() < 1e-15);
    }

    #[test]
    fn min_image_stays_in_half_open_cell() {
        let g = make_grid(1.0, 32).unwrap();
        for i in 0..200 {
            let d = -3.0 + i as f64 * 0.031;
            let w = g.min_image(d);
            assert!(w >= -0.5 && w < 0.5, "wrapped {d} to {w}");
            // wrapping is a translation by an integer multiple of L
            let k = (d - w) / g.period;
            assert!((k - k.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn min_image_distance_satisfies_triangle_inequality() {
        let g = make_grid(1.0, 24).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let a = (rng.gen_range(0..24), rng.gen_range(0..24));
            let b = (rng.gen_range(0..24), rng.gen_range(0..24));
            let c = (rng.gen_range(0..24), rng.gen_range(0..24));
            let ab = g.node_distance(a, b);
            let bc = g.node_distance(b, c);
            let ac = g.node_distance(a, c);
            assert!(ac <= ab + bc + 1e-12, "triangle violated: {ac} > {ab} + {bc}");
        }
    }

    #[test]
    fn integrate_constant_is_area() {
        let g = make_grid(1.0, 16).unwrap();
        let one = ScalarField::constant(g.nodes_per_axis, 1.0);
        assert!((g.integrate(&one) - 1.0).abs() < 1e-14);
        let g = make_grid(3.0, 12).unwrap();
        let one = ScalarField::constant(g.nodes_per_axis, 1.0);
        assert!((g.integrate(&one) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn integrate_kills_full_period_oscillation() {
        let g = make_grid(1.0, 16).unwrap();
        let n = g.nodes_per_axis;
        let mut f = ScalarField::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let x = i as f64 * g.spacing;
                f.values[g.index(i, j)] = (2.0 * std::f64::consts::PI * x / g.period).cos();
            }
        }
        assert!(g.integrate(&f).abs() < 1e-14);
    }

    #[test]
    fn integrate_exact_for_band_limited_trig_polynomials() {
        // h²Σ equals the true integral for any trig polynomial of degree < n/2:
        // only the constant mode survives both the sum and the integral.
        let g = make_grid(2.0, 16).unwrap();
        let n = g.nodes_per_axis;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut f = ScalarField::zeros(n);
            let mut exact = 0.0;
            for _ in 0..6 {
                let kx = rng.gen_range(-7i64..8);
                let ky = rng.gen_range(-7i64..8);
                let amp: f64 = rng.gen_range(-1.0..1.0);
                let phase: f64 = rng.gen_range(0.0..6.28);
                if kx == 0 && ky == 0 {
                    exact += amp * phase.cos() * g.period * g.period;
                }
                for i in 0..n {
                    for j in 0..n {
                        let x = i as f64 * g.spacing;
                        let y = j as f64 * g.spacing;
                        let arg = 2.0 * std::f64::consts::PI * (kx as f64 * x + ky as f64 * y)
                            / g.period
                            + phase;
                        f.values[g.index(i, j)] += amp * arg.cos();
                    }
                }
            }
            assert!(
                (g.integrate(&f) - exact).abs() < 1e-12,
                "quadrature not exact: {} vs {}",
                g.integrate(&f),
                exact
            );
        }
    }
}
