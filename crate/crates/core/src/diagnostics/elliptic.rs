use crate::dynamics::{FluidState, StateDerivative};
use crate::error::{Error, Result};
use crate::fields::{
    derivative_seminorm, gradient, jacobian, l2_norm, laplacian, lp_norm, vector_laplacian,
    Exponent, ScalarField, TensorField,
};
use crate::model::{pressure, ModelParams};

use super::identities::{effective_flux, rho_u_dot, vorticity};

/// `‖f‖_{L^r} / (‖f‖_{L²}^{(6−r)/2r} ‖∇f‖_{L²}^{(3r−6)/2r})` for `r ∈ {3, 4, 6}`.
pub fn sobolev_ratio(f: &ScalarField, r: u32) -> Result<f64> {
    let p = match r {
        3 => Exponent::L3,
        4 => Exponent::L4,
        6 => Exponent::L6,
        _ => return Err(Error::UnsupportedExponent(r.to_string())),
    };
    let grad = derivative_seminorm(f, 1)?;
    if grad == 0.0 {
        return Err(Error::Degenerate(
            "Sobolev ratio of a constant field".into(),
        ));
    }
    let rf = f64::from(r);
    let a = (6.0 - rf) / (2.0 * rf);
    let b = (3.0 * rf - 6.0) / (2.0 * rf);
    Ok(lp_norm(f, p) / (l2_norm(f).powf(a) * grad.powf(b)))
}

/// One inequality `LHS ≤ M · Σ RHS` observed on data.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticInequality {
    pub lhs: f64,
    pub rhs_terms: Vec<(&'static str, f64)>,
}

impl EllipticInequality {
    pub fn rhs_sum(&self) -> f64 {
        self.rhs_terms.iter().map(|(_, v)| v).sum()
    }

    /// `LHS / Σ RHS`; `None` when both vanish.
    pub fn ratio(&self) -> Option<f64> {
        let rhs = self.rhs_sum();
        if rhs == 0.0 && self.lhs == 0.0 {
            None
        } else {
            Some(self.lhs / rhs)
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.ratio().is_none()
    }
}

/// Both sides of the three elliptic estimates for `Δu`, `D³u` and `∇F`.
/// Every entry is a squared norm except where the name says otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipticReport {
    pub norm_grad_f: f64,
    pub norm_laplacian_u: f64,
    pub norm_d3_u: f64,
    pub laplacian_u: EllipticInequality,
    pub d3_u: EllipticInequality,
    pub grad_f: EllipticInequality,
}

fn pointwise_norm(t: &TensorField) -> ScalarField {
    t.frobenius_sq().map(f64::sqrt)
}

pub fn elliptic_norm_report(
    state: &FluidState,
    deriv: &StateDerivative,
    params: &ModelParams,
) -> Result<EllipticReport> {
    let f = effective_flux(state, params)?;
    let p = pressure(&params.pressure, &state.rho)?;
    let omega = vorticity(state);
    let b = state.b(params.h_tilde);
    let b_abs = b.norm_sq().map(f64::sqrt);
    let grad_b = jacobian(&b);
    let grad_b_abs = pointwise_norm(&grad_b);
    let lap_b = vector_laplacian(&b);
    let lap_b_abs = lap_b.norm_sq().map(f64::sqrt);

    let sq = |x: f64| x * x;
    let norm_grad_f = l2_norm(&gradient(&f));
    let norm_laplacian_u = l2_norm(&vector_laplacian(&state.u));
    let norm_d3_u = derivative_seminorm(&state.u, 3)?;

    let grad_omega: f64 = omega.iter().map(|c| sq(l2_norm(&gradient(c)))).sum();
    let lap_omega: f64 = omega.iter().map(|c| sq(l2_norm(&laplacian(c)))).sum();
    let grad_b_times_b = sq(l2_norm(&grad_b_abs.mul(&b_abs)));
    let grad_b_sq = sq(l2_norm(&grad_b));

    let laplacian_u = EllipticInequality {
        lhs: sq(norm_laplacian_u),
        rhs_terms: vec![
            ("grad_F", sq(norm_grad_f)),
            ("grad_omega", grad_omega),
            ("grad_P", sq(l2_norm(&gradient(&p)))),
            ("grad_B_times_B", grad_b_times_b),
            ("grad_B", grad_b_sq),
        ],
    };
    let d3_u = EllipticInequality {
        lhs: sq(norm_d3_u),
        rhs_terms: vec![
            ("lap_F", sq(l2_norm(&laplacian(&f)))),
            ("lap_omega", lap_omega),
            ("lap_P", sq(l2_norm(&laplacian(&p)))),
            ("lap_B", sq(l2_norm(&lap_b))),
            ("lap_B_times_B", sq(l2_norm(&lap_b_abs.mul(&b_abs)))),
            ("grad_B_L4_pow4", lp_norm(&grad_b_abs, Exponent::L4).powi(4)),
        ],
    };
    let grad_f = EllipticInequality {
        lhs: sq(norm_grad_f),
        rhs_terms: vec![
            ("rho_u_dot", sq(l2_norm(&rho_u_dot(state, deriv)))),
            ("grad_B_times_B", grad_b_times_b),
            ("grad_B", grad_b_sq),
        ],
    };
    Ok(EllipticReport {
        norm_grad_f,
        norm_laplacian_u,
        norm_d3_u,
        laplacian_u,
        d3_u,
        grad_f,
    })
}
