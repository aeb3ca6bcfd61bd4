use crate::dynamics::{u_t, FluidState, StateDerivative};
use crate::error::{Error, Result};
use crate::fields::{
    derivative_seminorm, divergence, gradient_sobolev_norm, integrate, l2_norm, sobolev_norm,
};
use crate::model::{g_potential, ModelParams};

use super::DiagnosticsRecord;

/// The three energy densities integrated over the box, and the
/// dissipation rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyLedger {
    /// `∫ G(ρ)`
    pub potential: f64,
    /// `∫ ½ρ|u|²`
    pub kinetic: f64,
    /// `∫ ½|B|²`
    pub magnetic: f64,
    /// `∫ μ|∇u|² + λ(div u)²`
    pub dissipation: f64,
}

impl EnergyLedger {
    pub fn total(&self) -> f64 {
        self.potential + self.kinetic + self.magnetic
    }
}

pub fn energy_ledger(state: &FluidState, params: &ModelParams) -> Result<EnergyLedger> {
    let g = g_potential(&params.pressure, params.rho_tilde, &state.rho)?;
    let potential = integrate(&g);
    let kinetic = 0.5 * integrate(&state.u.norm_sq().mul(&state.rho));
    let magnetic = 0.5 * integrate(&state.b(params.h_tilde).norm_sq());
    let grad = derivative_seminorm(&state.u, 1)?;
    let div = l2_norm(&divergence(&state.u));
    let dissipation = params.mu * grad * grad + params.lambda * div * div;
    Ok(EnergyLedger {
        potential,
        kinetic,
        magnetic,
        dissipation,
    })
}

/// How `∫₀ᵗ D ds` is evaluated in [`energy_balance_residual`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeQuadrature {
    /// Use the `dissipation_integral` carried by each record, accumulated
    /// with the integrator's own stage weights.
    #[default]
    StageConsistent,
    /// Trapezoid rule over the recorded dissipation rates.
    Trapezoid,
}

/// `r_i = E(t_i) − E(t_0) + ∫_{t_0}^{t_i} D ds` for every record.
pub fn energy_balance_residual(
    records: &[DiagnosticsRecord],
    quadrature: TimeQuadrature,
) -> Result<Vec<f64>> {
    if records.len() < 2 {
        return Err(Error::Degenerate(format!(
            "energy balance needs at least 2 records, got {}",
            records.len()
        )));
    }
    let e0 = records[0].total_energy();
    let mut trap = 0.0;
    let mut out = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let integral = match quadrature {
            TimeQuadrature::StageConsistent => {
                r.dissipation_integral - records[0].dissipation_integral
            }
            TimeQuadrature::Trapezoid => {
                if i > 0 {
                    let p = &records[i - 1];
                    trap += 0.5 * (r.t - p.t) * (r.dissipation + p.dissipation);
                }
                trap
            }
        };
        out.push(r.total_energy() - e0 + integral);
    }
    Ok(out)
}

/// Pointwise-in-time ingredients of the A functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ATerms {
    pub norm_h2_rho: f64,
    pub norm_h2_u: f64,
    pub norm_h2_b: f64,
    pub norm_l2_rho_t: f64,
    pub norm_l2_u_t: f64,
    pub norm_l2_b_t: f64,
    /// `‖∇u‖²_{H²} + ‖u_t‖²_{H¹}`
    pub integrand: f64,
}

impl ATerms {
    /// `‖(ρ−ρ̃, u, B)‖²_{H²} + ‖(ρ_t, u_t, B_t)‖²_{L²}`
    pub fn bracket(&self) -> f64 {
        [
            self.norm_h2_rho,
            self.norm_h2_u,
            self.norm_h2_b,
            self.norm_l2_rho_t,
            self.norm_l2_u_t,
            self.norm_l2_b_t,
        ]
        .iter()
        .map(|x| x * x)
        .sum()
    }
}

pub fn a_terms(
    state: &FluidState,
    deriv: &StateDerivative,
    params: &ModelParams,
) -> Result<ATerms> {
    let ut = u_t(state, deriv);
    let drho = state.rho.map(|r| r - params.rho_tilde);
    Ok(ATerms {
        norm_h2_rho: sobolev_norm(&drho, 2)?,
        norm_h2_u: sobolev_norm(&state.u, 2)?,
        norm_h2_b: sobolev_norm(&state.b(params.h_tilde), 2)?,
        norm_l2_rho_t: l2_norm(&deriv.d_rho),
        norm_l2_u_t: l2_norm(&ut),
        norm_l2_b_t: l2_norm(&deriv.d_h),
        integrand: gradient_sobolev_norm(&state.u, 2)?.powi(2) + sobolev_norm(&ut, 1)?.powi(2),
    })
}

/// Running `sup` of the bracket plus the trapezoid time integral of the
/// dissipative part.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AFunctionalAccumulator {
    pub running_sup: f64,
    pub running_integral: f64,
    last: Option<(f64, f64)>,
}

impl AFunctionalAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, t: f64, bracket: f64, integrand: f64) {
        self.running_sup = self.running_sup.max(bracket);
        if let Some((t0, i0)) = self.last {
            self.running_integral += 0.5 * (t - t0) * (integrand + i0);
        }
        self.last = Some((t, integrand));
    }

    pub fn value(&self) -> f64 {
        self.running_sup + self.running_integral
    }
}

pub fn a_functional_update(
    acc: &mut AFunctionalAccumulator,
    state: &FluidState,
    deriv: &StateDerivative,
    params: &ModelParams,
) -> Result<ATerms> {
    let terms = a_terms(state, deriv, params)?;
    acc.update(state.t, terms.bracket(), terms.integrand);
    Ok(terms)
}
