use rayon::prelude::*;

use super::spectral::{self, Wavenumbers};
use super::{ScalarField, TensorField, VectorField};
use crate::error::{Error, Result};

/// Supported Lebesgue exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exponent {
    L1,
    L2,
    L3,
    L4,
    L6,
    Infinity,
}

impl Exponent {
    pub fn from_f64(p: f64) -> Result<Self> {
        match p {
            p if p == 1.0 => Ok(Self::L1),
            p if p == 2.0 => Ok(Self::L2),
            p if p == 3.0 => Ok(Self::L3),
            p if p == 4.0 => Ok(Self::L4),
            p if p == 6.0 => Ok(Self::L6),
            p if p == f64::INFINITY => Ok(Self::Infinity),
            p => Err(Error::UnsupportedExponent(p.to_string())),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Self::L1 => 1.0,
            Self::L2 => 2.0,
            Self::L3 => 3.0,
            Self::L4 => 4.0,
            Self::L6 => 6.0,
            Self::Infinity => f64::INFINITY,
        }
    }
}

/// Anything made of scalar components on one grid; norms of a vector field
/// sum the squared component norms.
pub trait FieldComponents {
    fn field_components(&self) -> Vec<&ScalarField>;
}

impl FieldComponents for ScalarField {
    fn field_components(&self) -> Vec<&ScalarField> {
        vec![self]
    }
}

impl FieldComponents for VectorField {
    fn field_components(&self) -> Vec<&ScalarField> {
        self.components().iter().collect()
    }
}

impl FieldComponents for TensorField {
    fn field_components(&self) -> Vec<&ScalarField> {
        self.iter().collect()
    }
}

/// Grid quadrature `h^3 Σ f`.
pub fn integrate(f: &ScalarField) -> f64 {
    let v = f.values();
    f.grid().cell_volume() * spectral::sum_indexed(v.len(), |i| v[i])
}

pub fn lp_norm(f: &ScalarField, p: Exponent) -> f64 {
    let v = f.values();
    let h3 = f.grid().cell_volume();
    let sum = |pow: fn(f64) -> f64| h3 * spectral::sum_indexed(v.len(), |i| pow(v[i].abs()));
    match p {
        Exponent::L1 => sum(|a| a),
        Exponent::L2 => sum(|a| a * a).sqrt(),
        Exponent::L3 => sum(|a| a * a * a).cbrt(),
        Exponent::L4 => sum(|a| (a * a) * (a * a)).sqrt().sqrt(),
        Exponent::L6 => sum(|a| (a * a * a) * (a * a * a)).powf(1.0 / 6.0),
        Exponent::Infinity => f.max_abs(),
    }
}

pub fn l2_norm<F: FieldComponents + ?Sized>(f: &F) -> f64 {
    f.field_components()
        .iter()
        .map(|c| lp_norm(c, Exponent::L2).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Sum over multi-indices `|α| = m` of `Π k_i^{2α_i}`: the complete
/// homogeneous symmetric polynomial of degree `m` in `k_i^2`.
fn multi_index_weight(k: [f64; 3], m: usize) -> f64 {
    let [a, b, c] = k.map(|x| x * x);
    match m {
        0 => 1.0,
        1 => a + b + c,
        2 => a * a + b * b + c * c + a * b + b * c + c * a,
        3 => {
            a * a * a
                + b * b * b
                + c * c * c
                + a * a * (b + c)
                + b * b * (a + c)
                + c * c * (a + b)
                + a * b * c
        }
        _ => unreachable!("order checked by caller"),
    }
}

fn spectral_sum<F: FieldComponents + ?Sized>(
    f: &F,
    weight: impl Fn([f64; 3]) -> f64 + Sync,
) -> f64 {
    let comps = f.field_components();
    let grid = *comps[0].grid();
    let wn = Wavenumbers::new(&grid);
    let slices: Vec<&[f64]> = comps.iter().map(|c| c.values()).collect();
    let spectra = spectral::forward_real(&grid, &slices);
    let weights: Vec<f64> = (0..grid.points())
        .into_par_iter()
        .map(|idx| weight(wn.vector(&grid, idx)))
        .collect();
    let scale = grid.cell_volume() / grid.points() as f64;
    spectra
        .iter()
        .map(|s| scale * spectral::sum_indexed(s.len(), |i| weights[i] * s[i].norm_sqr()))
        .sum()
}

fn check_order(k: usize) -> Result<()> {
    if k > 3 {
        return Err(Error::UnsupportedExponent(format!("Sobolev order {k}")));
    }
    Ok(())
}

/// `(Σ_{|α|≤k} ‖D^α f‖²)^{1/2}` with spectral derivatives, `k ≤ 3`.
pub fn sobolev_norm<F: FieldComponents + ?Sized>(f: &F, k: usize) -> Result<f64> {
    check_order(k)?;
    if k == 0 {
        return Ok(l2_norm(f));
    }
    Ok(spectral_sum(f, |kv| (0..=k).map(|m| multi_index_weight(kv, m)).sum()).sqrt())
}

/// `(Σ_{|α|=k} ‖D^α f‖²)^{1/2}`, the top-order part of [`sobolev_norm`].
pub fn derivative_seminorm<F: FieldComponents + ?Sized>(f: &F, k: usize) -> Result<f64> {
    check_order(k)?;
    if k == 0 {
        return Ok(l2_norm(f));
    }
    Ok(spectral_sum(f, |kv| multi_index_weight(kv, k)).sqrt())
}

/// `(Σ_i ‖∂_i f‖²_{H^k})^{1/2}`, the `H^k` norm of the full gradient.
pub fn gradient_sobolev_norm<F: FieldComponents + ?Sized>(f: &F, k: usize) -> Result<f64> {
    check_order(k)?;
    Ok(spectral_sum(f, |kv| {
        let grad = multi_index_weight(kv, 1);
        grad * (0..=k).map(|m| multi_index_weight(kv, m)).sum::<f64>()
    })
    .sqrt())
}
