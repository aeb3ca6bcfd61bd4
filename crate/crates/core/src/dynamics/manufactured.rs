use super::{Dynamics, FluidState, Forcing, StateDerivative};
use crate::error::{Error, Result};
use crate::fields::{GridSpec, ScalarField, VectorField};
use crate::model::ModelParams;

/// A prescribed smooth solution `q*(t)` of the forced system.
///
/// Case 1 (the only case so far), with `κ = 2π/L` and amplitude `ε`:
///
/// ```text
/// ρ* = ρ̃ (1 + ε sin(κx₁) cos t)
/// u* = ε (sin κx₂, sin κx₃, sin κx₁) cos t
/// H* = H̃ + ε (cos κx₃, cos κx₁, cos κx₂) cos t
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub id: u32,
    pub amplitude: f64,
}

impl ManufacturedCase {
    pub fn new(id: u32, amplitude: f64) -> Result<Self> {
        if id != 1 {
            return Err(Error::Config(format!("unknown manufactured case {id}")));
        }
        if !(amplitude.is_finite() && amplitude.abs() < 0.5) {
            return Err(Error::Config(format!(
                "manufactured amplitude must satisfy |eps| < 0.5, got {amplitude}"
            )));
        }
        Ok(Self { id, amplitude })
    }

    fn profiles(&self, grid: GridSpec) -> (ScalarField, VectorField, VectorField) {
        let k = grid.kappa();
        let s1 = ScalarField::from_fn(grid, |x| (k * x[0]).sin());
        let u = VectorField::from_fn(grid, |x| {
            [(k * x[1]).sin(), (k * x[2]).sin(), (k * x[0]).sin()]
        });
        let b = VectorField::from_fn(grid, |x| {
            [(k * x[2]).cos(), (k * x[0]).cos(), (k * x[1]).cos()]
        });
        (s1, u, b)
    }

    pub fn state_at(&self, t: f64, grid: GridSpec, params: &ModelParams) -> FluidState {
        let (s1, u, b) = self.profiles(grid);
        let a = self.amplitude * t.cos();
        let rt = params.rho_tilde;
        let h_tilde = params.h_tilde;
        FluidState {
            t,
            rho: s1.map(|s| rt * (1.0 + a * s)),
            u: u.scale(a),
            h: b.map_components(|j, c| c.map(|v| h_tilde[j] + a * v)),
        }
    }

    /// Exact time derivative of the conservative variables at `t`.
    pub fn derivative_at(&self, t: f64, grid: GridSpec, params: &ModelParams) -> StateDerivative {
        let (s1, u, b) = self.profiles(grid);
        let eps = self.amplitude;
        let (a, da) = (eps * t.cos(), -eps * t.sin());
        let rt = params.rho_tilde;
        let rho = s1.map(|s| rt * (1.0 + a * s));
        let d_rho = s1.scale(rt * da);
        // m = ρ u, with u = a·U and ρ = ρ̃(1 + a s₁)
        let d_m = u.map_components(|_, uc| d_rho.mul(uc).scale(a).add(&rho.mul(uc).scale(da)));
        StateDerivative {
            d_rho,
            d_m,
            d_h: b.scale(da),
        }
    }
}

/// Forcing that makes [`ManufacturedCase`] an exact solution of the
/// semi-discrete system: `f(t) = ∂_t q*(t) − rhs(q*(t))`.
pub struct ManufacturedForcing {
    case: ManufacturedCase,
    unforced: Dynamics,
}

impl ManufacturedForcing {
    pub fn new(case: ManufacturedCase, params: ModelParams, dealias: bool) -> Self {
        Self {
            case,
            unforced: Dynamics::new(params).with_dealias(dealias),
        }
    }

    pub fn case(&self) -> ManufacturedCase {
        self.case
    }
}

impl Forcing for ManufacturedForcing {
    fn forcing(&self, t: f64, grid: &GridSpec) -> Result<StateDerivative> {
        let params = self.unforced.params();
        let exact = self.case.state_at(t, *grid, params);
        let r = self.unforced.rhs(&exact)?;
        let dq = self.case.derivative_at(t, *grid, params);
        Ok(StateDerivative {
            d_rho: dq.d_rho.sub(&r.d_rho),
            d_m: dq.d_m.sub(&r.d_m),
            d_h: dq.d_h.sub(&r.d_h),
        })
    }
}
