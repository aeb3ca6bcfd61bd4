use crate::dynamics::{u_dot, FluidState, StateDerivative};
use crate::error::Result;
use crate::fields::{
    divergence, gradient, jacobian, l2_norm, laplacian, solve_poisson, tensor_divergence,
    ScalarField, TensorField, VectorField,
};
use crate::model::{pressure, ModelParams};

/// `num / den`, with `0/0 = 0`.
pub(crate) fn relative(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// `F = (μ+λ) div u − P(ρ) + P(ρ̃)`.
pub fn effective_flux(state: &FluidState, params: &ModelParams) -> Result<ScalarField> {
    let p = pressure(&params.pressure, &state.rho)?;
    let p_tilde = params.p_tilde();
    let visc = params.mu + params.lambda;
    Ok(divergence(&state.u).zip_map(&p, |d, p| visc * d - p + p_tilde))
}

/// `ω^{jk} = ∂_k u^j − ∂_j u^k`.
pub fn vorticity(state: &FluidState) -> TensorField {
    antisymmetric_part(&jacobian(&state.u))
}

fn antisymmetric_part(j: &TensorField) -> TensorField {
    let c = [0, 1, 2].map(|a| [0, 1, 2].map(|b| j.get(a, b).sub(j.get(b, a))));
    TensorField::new(c).expect("components share the grid")
}

/// `H^j H^k`.
fn outer(h: &VectorField) -> TensorField {
    let c = [0, 1, 2].map(|a| [0, 1, 2].map(|b| h.component(a).mul(h.component(b))));
    TensorField::new(c).expect("components share the grid")
}

/// Magnetic force `−∇(½|H|²) + div(H H)`, together with its two parts.
fn magnetic_force(h: &VectorField) -> (VectorField, VectorField, VectorField) {
    let grad_pm = gradient(&h.norm_sq().scale(0.5));
    let tension = tensor_divergence(&outer(h));
    (tension.sub(&grad_pm), grad_pm, tension)
}

/// `ρ u̇`.
pub fn rho_u_dot(state: &FluidState, deriv: &StateDerivative) -> VectorField {
    u_dot(state, deriv).mul_scalar(&state.rho)
}

/// Relative L² residual of `ρu̇ʲ = ∂_j F + μ ∂_k ω^{jk} − ∂_j(½|H|²) + ∂_k(HʲHᵏ)`,
/// normalized by the sum of the term norms.
pub fn momentum_decomposition_residual(
    state: &FluidState,
    deriv: &StateDerivative,
    params: &ModelParams,
) -> Result<f64> {
    let lhs = rho_u_dot(state, deriv);
    let grad_f = gradient(&effective_flux(state, params)?);
    let visc = tensor_divergence(&vorticity(state)).scale(params.mu);
    let (mag, grad_pm, tension) = magnetic_force(&state.h);
    let rhs = grad_f.add(&visc).add(&mag);
    let den =
        l2_norm(&lhs) + l2_norm(&grad_f) + l2_norm(&visc) + l2_norm(&grad_pm) + l2_norm(&tension);
    Ok(relative(l2_norm(&lhs.sub(&rhs)), den))
}

/// `gʲ = ρu̇ʲ + ∂_j(½|H|²) − ∂_k(HʲHᵏ)`.
pub fn g_field(state: &FluidState, deriv: &StateDerivative) -> VectorField {
    let (mag, _, _) = magnetic_force(&state.h);
    rho_u_dot(state, deriv).sub(&mag)
}

/// The same vector with `B = H − H̃` in the magnetic terms.
pub fn g_field_b_form(
    state: &FluidState,
    deriv: &StateDerivative,
    params: &ModelParams,
) -> VectorField {
    let (mag, _, _) = magnetic_force(&state.b(params.h_tilde));
    rho_u_dot(state, deriv).sub(&mag)
}

/// Relative residual of `g_B − g_H = (∇×B)×H̃`, where `g_B` uses `B` in the
/// magnetic terms. The identity needs `div B = 0`.
pub fn magnetic_form_residual(
    state: &FluidState,
    deriv: &StateDerivative,
    params: &ModelParams,
) -> f64 {
    let diff = g_field_b_form(state, deriv, params).sub(&g_field(state, deriv));
    let b = state.b(params.h_tilde);
    let ht = VectorField::constant(*state.grid(), params.h_tilde);
    let expect = crate::fields::curl(&b).cross(&ht);
    relative(
        l2_norm(&diff.sub(&expect)),
        l2_norm(&diff) + l2_norm(&expect),
    )
}

/// Relative L² residual of `ΔF = div g`.
pub fn poisson_flux_residual(
    state: &FluidState,
    deriv: &StateDerivative,
    params: &ModelParams,
) -> Result<f64> {
    let lap_f = laplacian(&effective_flux(state, params)?);
    let div_g = divergence(&g_field(state, deriv));
    Ok(relative(
        l2_norm(&lap_f.sub(&div_g)),
        l2_norm(&lap_f) + l2_norm(&div_g),
    ))
}

/// Recovers `F` up to a constant from `div g` and compares gradients;
/// returns the relative L² error of `∇F`.
pub fn flux_reconstruction_error(
    state: &FluidState,
    deriv: &StateDerivative,
    params: &ModelParams,
) -> Result<f64> {
    let div_g = divergence(&g_field(state, deriv));
    let mean = div_g.mean();
    let f_rec = solve_poisson(&div_g.map(|v| v - mean))?;
    let grad_rec = gradient(&f_rec);
    let grad_f = gradient(&effective_flux(state, params)?);
    Ok(relative(l2_norm(&grad_rec.sub(&grad_f)), l2_norm(&grad_f)))
}

/// Auxiliary fields `wʲ = ∇F − 3∇Bʲ`, `vʲ = (μ+λ)∇div u − 3∇Bʲ`.
#[derive(Debug, Clone)]
pub struct AuxiliaryWv {
    pub w: [VectorField; 3],
    pub v: [VectorField; 3],
    /// `Σ_j ∫ ρ/2 (|wʲ|² + |vʲ|²) + Σ_{i≠j} ∫ ρ/2 (|wⁱ+wʲ|² + |vⁱ+vʲ|²)`.
    pub lyapunov: f64,
    /// Largest relative residual of `vʲ − wʲ = ∇(P − P̃)` over `j`.
    pub identity_residual: f64,
}

pub fn auxiliary_wv(state: &FluidState, params: &ModelParams) -> Result<AuxiliaryWv> {
    let b = state.b(params.h_tilde);
    let grad_f = gradient(&effective_flux(state, params)?);
    let grad_div = gradient(&divergence(&state.u)).scale(params.mu + params.lambda);
    let grad_p = gradient(&pressure(&params.pressure, &state.rho)?);
    let grad_b = [0, 1, 2].map(|j| gradient(b.component(j)).scale(3.0));
    let w = [0, 1, 2].map(|j| grad_f.sub(&grad_b[j]));
    let v = [0, 1, 2].map(|j| grad_div.sub(&grad_b[j]));

    let mut identity_residual: f64 = 0.0;
    for j in 0..3 {
        let r = v[j].sub(&w[j]).sub(&grad_p);
        let den = l2_norm(&v[j]) + l2_norm(&w[j]) + l2_norm(&grad_p);
        identity_residual = identity_residual.max(relative(l2_norm(&r), den));
    }

    let half_rho_int =
        |f: &VectorField| crate::fields::integrate(&f.norm_sq().mul(&state.rho)) * 0.5;
    let mut lyapunov = 0.0;
    for j in 0..3 {
        lyapunov += half_rho_int(&w[j]) + half_rho_int(&v[j]);
    }
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                lyapunov += half_rho_int(&w[i].add(&w[j])) + half_rho_int(&v[i].add(&v[j]));
            }
        }
    }
    Ok(AuxiliaryWv {
        w,
        v,
        lyapunov,
        identity_residual,
    })
}
