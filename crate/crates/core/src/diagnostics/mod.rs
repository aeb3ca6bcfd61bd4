//! Effective viscous flux, vorticity, the exact identities they satisfy,
//! energy bookkeeping, and the A functional.

mod elliptic;
mod energy;
mod identities;

pub use elliptic::{elliptic_norm_report, sobolev_ratio, EllipticInequality, EllipticReport};
pub use energy::{
    a_functional_update, a_terms, energy_balance_residual, energy_ledger, AFunctionalAccumulator,
    ATerms, EnergyLedger, TimeQuadrature,
};
pub use identities::{
    auxiliary_wv, effective_flux, flux_reconstruction_error, g_field, g_field_b_form,
    magnetic_form_residual, momentum_decomposition_residual, poisson_flux_residual, rho_u_dot,
    vorticity, AuxiliaryWv,
};

use crate::dynamics::{divergence_and_h1, FluidState, StateDerivative};
use crate::error::Result;
use crate::model::ModelParams;

/// One row of the time-series ledger.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy_potential: f64,
    pub energy_kinetic: f64,
    pub energy_magnetic: f64,
    /// Instantaneous dissipation rate.
    pub dissipation: f64,
    /// `∫₀ᵗ D ds` as accumulated by the time integrator.
    pub dissipation_integral: f64,
    /// `E(t) − E(0) + ∫₀ᵗ D ds`.
    pub energy_residual: f64,
    pub norm_h2_rho: f64,
    pub norm_h2_u: f64,
    pub norm_h2_b: f64,
    pub norm_l2_rho_t: f64,
    pub norm_l2_u_t: f64,
    pub norm_l2_b_t: f64,
    pub a_functional: f64,
    pub res_momdecomp: f64,
    pub res_poissonflux: f64,
    pub res_wv: f64,
    pub div_h_l2: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub lyapunov_wv: f64,
}

impl DiagnosticsRecord {
    pub fn total_energy(&self) -> f64 {
        self.energy_potential + self.energy_kinetic + self.energy_magnetic
    }

    /// Values in the order of [`DiagnosticsRecord::CSV_COLUMNS`].
    pub fn csv_values(&self) -> [f64; 19] {
        [
            self.t,
            self.energy_potential,
            self.energy_kinetic,
            self.energy_magnetic,
            self.dissipation,
            self.energy_residual,
            self.norm_h2_rho,
            self.norm_h2_u,
            self.norm_h2_b,
            self.norm_l2_rho_t,
            self.norm_l2_u_t,
            self.norm_l2_b_t,
            self.a_functional,
            self.res_momdecomp,
            self.res_poissonflux,
            self.res_wv,
            self.div_h_l2,
            self.rho_min,
            self.rho_max,
        ]
    }

    pub const CSV_COLUMNS: [&'static str; 19] = [
        "t",
        "E_pot",
        "E_kin",
        "E_mag",
        "dissipation",
        "energy_residual",
        "norm_H2_rho",
        "norm_H2_u",
        "norm_H2_B",
        "norm_L2_rho_t",
        "norm_L2_u_t",
        "norm_L2_B_t",
        "A_func",
        "res_momdecomp",
        "res_poissonflux",
        "res_wv",
        "divH_L2",
        "rho_min",
        "rho_max",
    ];

    pub fn is_finite(&self) -> bool {
        self.csv_values().iter().all(|v| v.is_finite()) && self.lyapunov_wv.is_finite()
    }
}

/// Builds successive records, carrying the energy reference and the A
/// functional accumulator.
#[derive(Debug, Clone)]
pub struct DiagnosticsTracker {
    params: ModelParams,
    accumulator: AFunctionalAccumulator,
    reference: Option<(f64, f64)>,
}

impl DiagnosticsTracker {
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            accumulator: AFunctionalAccumulator::new(),
            reference: None,
        }
    }

    pub fn accumulator(&self) -> &AFunctionalAccumulator {
        &self.accumulator
    }

    /// `deriv` must be the right-hand side evaluated at `state`.
    pub fn record(
        &mut self,
        state: &FluidState,
        deriv: &StateDerivative,
        dissipation_integral: f64,
    ) -> Result<DiagnosticsRecord> {
        let p = &self.params;
        let ledger = energy_ledger(state, p)?;
        let (e0, i0) = *self
            .reference
            .get_or_insert((ledger.total(), dissipation_integral));
        let terms = a_functional_update(&mut self.accumulator, state, deriv, p)?;
        let wv = auxiliary_wv(state, p)?;
        let (div_h, _) = divergence_and_h1(&state.h);
        Ok(DiagnosticsRecord {
            t: state.t,
            energy_potential: ledger.potential,
            energy_kinetic: ledger.kinetic,
            energy_magnetic: ledger.magnetic,
            dissipation: ledger.dissipation,
            dissipation_integral,
            energy_residual: ledger.total() - e0 + (dissipation_integral - i0),
            norm_h2_rho: terms.norm_h2_rho,
            norm_h2_u: terms.norm_h2_u,
            norm_h2_b: terms.norm_h2_b,
            norm_l2_rho_t: terms.norm_l2_rho_t,
            norm_l2_u_t: terms.norm_l2_u_t,
            norm_l2_b_t: terms.norm_l2_b_t,
            a_functional: self.accumulator.value(),
            res_momdecomp: momentum_decomposition_residual(state, deriv, p)?,
            res_poissonflux: poisson_flux_residual(state, deriv, p)?,
            res_wv: wv.identity_residual,
            div_h_l2: div_h,
            rho_min: state.rho.min(),
            rho_max: state.rho.max(),
            lyapunov_wv: wv.lyapunov,
        })
    }
}
