//! Periodic grid fields and the spectral calculus on them.
//!
//! Every first-derivative operator zeroes the Nyquist bin, so discrete
//! differentiation is exactly skew-adjoint under the grid inner product and
//! `divergence ∘ gradient == laplacian` holds to round-off.

mod grid;
mod interp;
mod norms;
mod ops;
pub(crate) mod spectral;

use rayon::prelude::*;

pub use grid::GridSpec;
pub use interp::{sample_at, sample_vector_at, Interpolation};
pub use norms::{
    derivative_seminorm, gradient_sobolev_norm, integrate, l2_norm, lp_norm, sobolev_norm,
    Exponent, FieldComponents,
};
pub use ops::{
    curl, divergence, gradient, jacobian, laplacian, solve_poisson, tensor_divergence,
    vector_laplacian,
};
pub use spectral::{deterministic, set_deterministic};

use crate::error::{Error, Result};

/// A real scalar sampled on every node of a [`GridSpec`], row-major over
/// `(x1, x2, x3)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.points()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.points(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every grid node.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync,
    {
        let values = (0..grid.points())
            .into_par_iter()
            .map(|idx| {
                let [a, b, c] = grid.unravel(idx);
                f([grid.coordinate(a), grid.coordinate(b), grid.coordinate(c)])
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Sync,
    {
        Self {
            grid: self.grid,
            values: self.values.par_iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination; panics on grid mismatch.
    pub fn zip_map<F>(&self, other: &ScalarField, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        assert!(
            self.grid.compatible(&other.grid),
            "pointwise operation on incompatible grids"
        );
        Self {
            grid: self.grid,
            values: self
                .values
                .par_iter()
                .zip(other.values.par_iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    /// `self + c * other`
    pub fn axpy(&self, c: f64, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + c * b)
    }

    pub fn mean(&self) -> f64 {
        spectral::sum_indexed(self.values.len(), |i| self.values[i]) / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, name: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(name.to_string()))
        }
    }
}

/// Three scalar components on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: [ScalarField; 3],
}

impl VectorField {
    pub fn new(components: [ScalarField; 3]) -> Result<Self> {
        let g = *components[0].grid();
        components[1].grid().ensure_compatible(&g)?;
        components[2].grid().ensure_compatible(&g)?;
        Ok(Self { components })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, [0.0; 3])
    }

    pub fn constant(grid: GridSpec, c: [f64; 3]) -> Self {
        Self {
            components: c.map(|v| ScalarField::constant(grid, v)),
        }
    }

    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn([f64; 3]) -> [f64; 3] + Sync,
    {
        Self {
            components: [0, 1, 2].map(|j| ScalarField::from_fn(grid, |x| f(x)[j])),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.components[0].grid()
    }

    pub fn component(&self, j: usize) -> &ScalarField {
        &self.components[j]
    }

    pub fn component_mut(&mut self, j: usize) -> &mut ScalarField {
        &mut self.components[j]
    }

    pub fn components(&self) -> &[ScalarField; 3] {
        &self.components
    }

    pub fn into_components(self) -> [ScalarField; 3] {
        self.components
    }

    pub fn map_components<F>(&self, f: F) -> Self
    where
        F: Fn(usize, &ScalarField) -> ScalarField,
    {
        Self {
            components: [0, 1, 2].map(|j| f(j, &self.components[j])),
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map_components(|_, s| s.scale(c))
    }

    pub fn add(&self, other: &VectorField) -> Self {
        self.map_components(|j, s| s.add(&other.components[j]))
    }

    pub fn sub(&self, other: &VectorField) -> Self {
        self.map_components(|j, s| s.sub(&other.components[j]))
    }

    pub fn axpy(&self, c: f64, other: &VectorField) -> Self {
        self.map_components(|j, s| s.axpy(c, &other.components[j]))
    }

    /// Multiply every component by a scalar field.
    pub fn mul_scalar(&self, s: &ScalarField) -> Self {
        self.map_components(|_, c| c.mul(s))
    }

    /// Subtract a constant vector from every point.
    pub fn offset(&self, c: [f64; 3]) -> Self {
        self.map_components(|j, s| s.map(|v| v - c[j]))
    }

    pub fn dot(&self, other: &VectorField) -> ScalarField {
        let [a0, a1, a2] = &self.components;
        let [b0, b1, b2] = &other.components;
        let grid = *self.grid();
        let values = (0..grid.points())
            .into_par_iter()
            .map(|i| {
                a0.values[i] * b0.values[i]
                    + a1.values[i] * b1.values[i]
                    + a2.values[i] * b2.values[i]
            })
            .collect();
        ScalarField { grid, values }
    }

    /// Pointwise `|v|^2`.
    pub fn norm_sq(&self) -> ScalarField {
        self.dot(self)
    }

    pub fn cross(&self, other: &VectorField) -> VectorField {
        let a = &self.components;
        let b = &other.components;
        let c0 = a[1].mul(&b[2]).sub(&a[2].mul(&b[1]));
        let c1 = a[2].mul(&b[0]).sub(&a[0].mul(&b[2]));
        let c2 = a[0].mul(&b[1]).sub(&a[1].mul(&b[0]));
        VectorField {
            components: [c0, c1, c2],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }

    pub fn ensure_finite(&self, name: &str) -> Result<()> {
        for (j, c) in self.components.iter().enumerate() {
            c.ensure_finite(&format!("{name}[{}]", j + 1))?;
        }
        Ok(())
    }
}

/// A 3×3 array of scalar fields, `t[j][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    components: [[ScalarField; 3]; 3],
}

impl TensorField {
    pub fn new(components: [[ScalarField; 3]; 3]) -> Result<Self> {
        let g = *components[0][0].grid();
        for row in &components {
            for c in row {
                c.grid().ensure_compatible(&g)?;
            }
        }
        Ok(Self { components })
    }

    pub fn grid(&self) -> &GridSpec {
        self.components[0][0].grid()
    }

    pub fn get(&self, j: usize, k: usize) -> &ScalarField {
        &self.components[j][k]
    }

    pub fn row(&self, j: usize) -> VectorField {
        VectorField {
            components: self.components[j].clone(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            components: [0, 1, 2].map(|j| [0, 1, 2].map(|k| self.components[k][j].clone())),
        }
    }

    /// Pointwise Frobenius norm squared.
    pub fn frobenius_sq(&self) -> ScalarField {
        let grid = *self.grid();
        let values = (0..grid.points())
            .into_par_iter()
            .map(|i| {
                self.components
                    .iter()
                    .flat_map(|row| row.iter())
                    .map(|c| c.values[i] * c.values[i])
                    .sum()
            })
            .collect();
        ScalarField { grid, values }
    }

    pub fn iter(&self) -> impl Iterator<Item = &ScalarField> {
        self.components.iter().flat_map(|row| row.iter())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(GridSpec::new(7, 1.0).is_err());
        assert!(GridSpec::new(6, 1.0).is_err());
        assert!(GridSpec::new(8, 0.0).is_err());
        assert!(GridSpec::new(8, f64::NAN).is_err());
        let g = GridSpec::new(8, 2.0).unwrap();
        assert_eq!(g.spacing(), 0.25);
    }

    #[test]
    fn incompatible_vector_components_rejected() {
        let a = GridSpec::new(8, 1.0).unwrap();
        let b = GridSpec::new(8, 2.0).unwrap();
        let r = VectorField::new([
            ScalarField::zeros(a),
            ScalarField::zeros(b),
            ScalarField::zeros(a),
        ]);
        assert!(matches!(r, Err(Error::GridMismatch(_))));
    }

    #[test]
    fn non_finite_detected() {
        let g = GridSpec::new(8, 1.0).unwrap();
        let mut f = ScalarField::zeros(g);
        f.values_mut()[5] = f64::NAN;
        assert!(matches!(f.ensure_finite("rho"), Err(Error::NonFinite(n)) if n == "rho"));
    }
}
