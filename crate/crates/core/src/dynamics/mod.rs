//! Time evolution of the barotropic MHD system in conservative variables
//! `(ρ, m = ρu, H)`.

mod manufactured;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::spectral::{self, Wavenumbers, C64};
use crate::fields::{gradient, integrate, GridSpec, ScalarField, VectorField};
use crate::model::ModelParams;

pub use manufactured::{ManufacturedCase, ManufacturedForcing};

/// Default advective Courant number.
pub const DEFAULT_CFL: f64 = 0.4;

/// `‖div H‖ ≤ DIV_TOLERANCE · (1 + ‖H‖_{H¹})` is enforced after every step.
pub const DIV_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub t: f64,
    pub rho: ScalarField,
    pub u: VectorField,
    pub h: VectorField,
}

impl FluidState {
    pub fn new(t: f64, rho: ScalarField, u: VectorField, h: VectorField) -> Result<Self> {
        u.grid().ensure_compatible(rho.grid())?;
        h.grid().ensure_compatible(rho.grid())?;
        Ok(Self { t, rho, u, h })
    }

    /// The constant state `(ρ̃, 0, H̃)`.
    pub fn equilibrium(grid: GridSpec, params: &ModelParams) -> Self {
        Self {
            t: 0.0,
            rho: ScalarField::constant(grid, params.rho_tilde),
            u: VectorField::zeros(grid),
            h: VectorField::constant(grid, params.h_tilde),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        self.rho.grid()
    }

    /// `B = H − H̃`.
    pub fn b(&self, h_tilde: [f64; 3]) -> VectorField {
        self.h.offset(h_tilde)
    }

    pub fn momentum(&self) -> VectorField {
        self.u.mul_scalar(&self.rho)
    }

    pub fn mass(&self) -> f64 {
        integrate(&self.rho)
    }

    /// Finite values everywhere and `ρ > 0`.
    pub fn ensure_admissible(&self) -> Result<()> {
        self.rho.ensure_finite("rho")?;
        self.u.ensure_finite("u")?;
        self.h.ensure_finite("H")?;
        let min = self.rho.min();
        if min <= 0.0 {
            return Err(Error::blow_up(
                "rho",
                format!("non-positive density {min:e}"),
            ));
        }
        Ok(())
    }
}

/// Time derivatives of the conservative variables.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDerivative {
    pub d_rho: ScalarField,
    pub d_m: VectorField,
    pub d_h: VectorField,
}

impl StateDerivative {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            d_rho: ScalarField::zeros(grid),
            d_m: VectorField::zeros(grid),
            d_h: VectorField::zeros(grid),
        }
    }

    pub fn add(&self, other: &StateDerivative) -> Self {
        Self {
            d_rho: self.d_rho.add(&other.d_rho),
            d_m: self.d_m.add(&other.d_m),
            d_h: self.d_h.add(&other.d_h),
        }
    }
}

/// Source terms added to the conservative right-hand side.
pub trait Forcing: Send + Sync {
    fn forcing(&self, t: f64, grid: &GridSpec) -> Result<StateDerivative>;
}

/// `u_t = (d_m − u ρ_t) / ρ`.
pub fn u_t(state: &FluidState, deriv: &StateDerivative) -> VectorField {
    let inv_rho = state.rho.map(|r| 1.0 / r);
    deriv.d_m.map_components(|j, dm| {
        dm.sub(&state.u.component(j).mul(&deriv.d_rho))
            .mul(&inv_rho)
    })
}

/// Material derivative `u̇ = u_t + (u·∇)u`.
pub fn u_dot(state: &FluidState, deriv: &StateDerivative) -> VectorField {
    let ut = u_t(state, deriv);
    ut.map_components(|j, c| c.add(&state.u.dot(&gradient(state.u.component(j)))))
}

/// Pairs `(j, k)` with `j < k`; the antisymmetric induction flux is stored
/// only on these.
const UPPER: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Symmetric index pairs `(j, k)` with `j ≤ k`.
const SYM: [(usize, usize); 6] = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];

fn sym_slot(j: usize, k: usize) -> usize {
    let (a, b) = if j <= k { (j, k) } else { (k, j) };
    SYM.iter().position(|&p| p == (a, b)).expect("valid pair")
}

/// `i k c`
#[inline]
fn ik(c: C64, k: f64) -> C64 {
    C64::new(-k * c.im, k * c.re)
}

/// Result of one RK4 step together with the states at which the four
/// stages were evaluated.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: FluidState,
    /// Stage states at `t`, `t + dt/2`, `t + dt/2`, `t + dt`.
    pub stages: [FluidState; 4],
    /// RK4 quadrature of the dissipation rate over the step, using the same
    /// stage weights as the state update.
    pub dissipation: f64,
}

#[derive(Clone)]
pub struct Dynamics {
    params: ModelParams,
    dealias: bool,
    cfl: f64,
    forcing: Option<Arc<dyn Forcing>>,
}

impl std::fmt::Debug for Dynamics {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dynamics")
            .field("params", &self.params)
            .field("dealias", &self.dealias)
            .field("cfl", &self.cfl)
            .field("forced", &self.forcing.is_some())
            .finish()
    }
}

struct Conservative {
    rho: Vec<f64>,
    m: [Vec<f64>; 3],
    h: [Vec<f64>; 3],
}

impl Conservative {
    fn from_state(s: &FluidState) -> Self {
        let rho = s.rho.values().to_vec();
        let m = [0, 1, 2].map(|j| s.u.component(j).mul(&s.rho).into_values());
        let h = [0, 1, 2].map(|j| s.h.component(j).values().to_vec());
        Self { rho, m, h }
    }

    fn to_state(&self, grid: GridSpec, t: f64) -> Result<FluidState> {
        let rho = ScalarField::from_values(grid, self.rho.clone())?;
        let u = [0, 1, 2].map(|j| {
            let values = self.m[j]
                .par_iter()
                .zip(self.rho.par_iter())
                .map(|(m, r)| m / r)
                .collect();
            ScalarField::from_values(grid, values)
        });
        let [u0, u1, u2] = u;
        let u = VectorField::new([u0?, u1?, u2?])?;
        let h = [0, 1, 2].map(|j| ScalarField::from_values(grid, self.h[j].clone()));
        let [h0, h1, h2] = h;
        let h = VectorField::new([h0?, h1?, h2?])?;
        let s = FluidState { t, rho, u, h };
        s.ensure_admissible()?;
        Ok(s)
    }

    /// `base + Σ c_i k_i` evaluated pointwise in a fixed order.
    fn combine(base: &Conservative, terms: &[(f64, &StateDerivative)]) -> Conservative {
        let lin = |b: &[f64], pick: &dyn Fn(&StateDerivative) -> &[f64]| -> Vec<f64> {
            let ks: Vec<(f64, &[f64])> = terms.iter().map(|(c, k)| (*c, pick(k))).collect();
            b.par_iter()
                .enumerate()
                .map(|(i, &v)| {
                    let mut inc = 0.0;
                    for (c, k) in &ks {
                        inc += c * k[i];
                    }
                    v + inc
                })
                .collect()
        };
        Conservative {
            rho: lin(&base.rho, &|k| k.d_rho.values()),
            m: [0, 1, 2].map(|j| lin(&base.m[j], &|k| k.d_m.component(j).values())),
            h: [0, 1, 2].map(|j| lin(&base.h[j], &|k| k.d_h.component(j).values())),
        }
    }
}

impl Dynamics {
    /// Dealiasing on, Courant number [`DEFAULT_CFL`], no forcing.
    pub fn new(params: ModelParams) -> Self {
        Self {
            params,
            dealias: true,
            cfl: DEFAULT_CFL,
            forcing: None,
        }
    }

    pub fn with_dealias(mut self, on: bool) -> Self {
        self.dealias = on;
        self
    }

    pub fn with_cfl(mut self, cfl: f64) -> Self {
        self.cfl = cfl;
        self
    }

    pub fn with_forcing(mut self, forcing: Arc<dyn Forcing>) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dealias(&self) -> bool {
        self.dealias
    }

    pub fn rhs(&self, state: &FluidState) -> Result<StateDerivative> {
        self.rhs_with_dissipation(state).map(|(d, _)| d)
    }

    /// Right-hand side and the dissipation rate `∫ μ|∇u|² + λ(div u)²`,
    /// both computed from the same velocity spectrum.
    fn rhs_with_dissipation(&self, state: &FluidState) -> Result<(StateDerivative, f64)> {
        state.ensure_admissible()?;
        let grid = *state.grid();
        let npts = grid.points();
        let law = self.params.pressure;
        let (mu, lambda) = (self.params.mu, self.params.lambda);

        let rho = state.rho.values();
        let u: [&[f64]; 3] = [0, 1, 2].map(|j| state.u.component(j).values());
        let h: [&[f64]; 3] = [0, 1, 2].map(|j| state.h.component(j).values());

        let m: Vec<Vec<f64>> = (0..3)
            .map(|j| {
                (0..npts)
                    .into_par_iter()
                    .map(|i| rho[i] * u[j][i])
                    .collect()
            })
            .collect();
        let q: Vec<f64> = (0..npts)
            .into_par_iter()
            .map(|i| {
                law.p(rho[i]) + 0.5 * (h[0][i] * h[0][i] + h[1][i] * h[1][i] + h[2][i] * h[2][i])
            })
            .collect();
        let t: Vec<Vec<f64>> = SYM
            .iter()
            .map(|&(j, k)| {
                (0..npts)
                    .into_par_iter()
                    .map(|i| rho[i] * u[j][i] * u[k][i] - h[j][i] * h[k][i])
                    .collect()
            })
            .collect();
        let e: Vec<Vec<f64>> = UPPER
            .iter()
            .map(|&(j, k)| {
                (0..npts)
                    .into_par_iter()
                    .map(|i| h[j][i] * u[k][i] - u[j][i] * h[k][i])
                    .collect()
            })
            .collect();

        let mut inputs: Vec<&[f64]> = Vec::with_capacity(16);
        inputs.extend(m.iter().map(Vec::as_slice));
        inputs.push(&q);
        inputs.extend(t.iter().map(Vec::as_slice));
        inputs.extend(e.iter().map(Vec::as_slice));
        inputs.extend(u.iter().copied());
        let spec = spectral::forward_real(&grid, &inputs);
        let wn = Wavenumbers::new(&grid);
        // Every output bin is linear in the input spectra at the same bin, so
        // truncating the outputs equals truncating the products.
        let dealias = self.dealias;
        let (m_hat, rest) = spec.split_at(3);
        let (q_hat, rest) = rest.split_at(1);
        let (t_hat, rest) = rest.split_at(6);
        let (e_hat, u_hat) = rest.split_at(3);
        let q_hat = &q_hat[0];

        // Antisymmetric E^{jk} from its upper triangle: (slot, sign).
        let e_slots: [[(usize, f64); 3]; 3] = [0, 1, 2].map(|j| {
            [0, 1, 2].map(
                |k| match UPPER.iter().position(|&p| p == (j.min(k), j.max(k))) {
                    Some(slot) if j < k => (slot, 1.0),
                    Some(slot) => (slot, -1.0),
                    None => (0, 0.0),
                },
            )
        });
        let t_slots: [[usize; 3]; 3] = [0, 1, 2].map(|j| [0, 1, 2].map(|k| sym_slot(j, k)));

        let n = grid.n();
        let plane = n * n;
        let planes: Vec<([Vec<C64>; 7], f64)> = (0..n)
            .into_par_iter()
            .map(|i0| {
                let mut out: [Vec<C64>; 7] = std::array::from_fn(|_| Vec::with_capacity(plane));
                let mut diss = 0.0;
                for i1 in 0..n {
                    for i2 in 0..n {
                        if dealias && !(wn.keep[i0] && wn.keep[i1] && wn.keep[i2]) {
                            for o in out.iter_mut() {
                                o.push(C64::default());
                            }
                            continue;
                        }
                        let idx = (i0 * n + i1) * n + i2;
                        let k = [wn.deriv[i0], wn.deriv[i1], wn.deriv[i2]];
                        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                        let uh = [u_hat[0][idx], u_hat[1][idx], u_hat[2][idx]];
                        let k_dot_u = uh[0] * k[0] + uh[1] * k[1] + uh[2] * k[2];
                        out[0].push(
                            -(ik(m_hat[0][idx], k[0])
                                + ik(m_hat[1][idx], k[1])
                                + ik(m_hat[2][idx], k[2])),
                        );
                        for j in 0..3 {
                            let mut flux = C64::default();
                            for kk in 0..3 {
                                flux += ik(t_hat[t_slots[j][kk]][idx], k[kk]);
                            }
                            out[1 + j].push(
                                -flux
                                    - ik(q_hat[idx], k[j])
                                    - uh[j] * (mu * k2)
                                    - k_dot_u * (lambda * k[j]),
                            );
                        }
                        for j in 0..3 {
                            let mut ind = C64::default();
                            for kk in 0..3 {
                                let (slot, sign) = e_slots[j][kk];
                                if sign != 0.0 {
                                    ind += ik(e_hat[slot][idx] * sign, k[kk]);
                                }
                            }
                            out[4 + j].push(-ind);
                        }
                        diss += mu * k2 * (uh[0].norm_sqr() + uh[1].norm_sqr() + uh[2].norm_sqr())
                            + lambda * k_dot_u.norm_sqr();
                    }
                }
                (out, diss)
            })
            .collect();
        // Plane sums are added in index order, independent of the worker count.
        let dissipation =
            grid.cell_volume() / npts as f64 * planes.iter().map(|p| p.1).sum::<f64>();
        let mut outs: Vec<Vec<C64>> = (0..7).map(|_| Vec::with_capacity(npts)).collect();
        for (p, _) in &planes {
            for (o, v) in outs.iter_mut().zip(p) {
                o.extend_from_slice(v);
            }
        }
        drop(planes);
        let refs: Vec<&[C64]> = outs.iter().map(Vec::as_slice).collect();
        let mut phys = spectral::inverse_real(&grid, &refs).into_iter();
        let mut next = || ScalarField::from_values(grid, phys.next().expect("seven outputs"));
        let d_rho = next()?;
        let d_m = VectorField::new([next()?, next()?, next()?])?;
        let d_h = VectorField::new([next()?, next()?, next()?])?;
        let mut deriv = StateDerivative { d_rho, d_m, d_h };
        if let Some(f) = &self.forcing {
            deriv = deriv.add(&f.forcing(state.t, &grid)?);
        }
        Ok((deriv, dissipation))
    }

    pub fn step_rk4(&self, state: &FluidState, dt: f64) -> Result<FluidState> {
        self.step_rk4_with_stages(state, dt).map(|o| o.state)
    }

    pub fn step_rk4_with_stages(&self, state: &FluidState, dt: f64) -> Result<StepOutcome> {
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "time step must be finite and >= 0, got {dt}"
            )));
        }
        if dt == 0.0 {
            return Ok(StepOutcome {
                state: state.clone(),
                stages: [state.clone(), state.clone(), state.clone(), state.clone()],
                dissipation: 0.0,
            });
        }
        let grid = *state.grid();
        let t0 = state.t;
        let q0 = Conservative::from_state(state);

        let (k1, d1) = self.rhs_with_dissipation(state)?;
        let s2 = Conservative::combine(&q0, &[(0.5 * dt, &k1)]).to_state(grid, t0 + 0.5 * dt)?;
        let (k2, d2) = self.rhs_with_dissipation(&s2)?;
        let s3 = Conservative::combine(&q0, &[(0.5 * dt, &k2)]).to_state(grid, t0 + 0.5 * dt)?;
        let (k3, d3) = self.rhs_with_dissipation(&s3)?;
        let s4 = Conservative::combine(&q0, &[(dt, &k3)]).to_state(grid, t0 + dt)?;
        let (k4, d4) = self.rhs_with_dissipation(&s4)?;

        let w = dt / 6.0;
        let next =
            Conservative::combine(&q0, &[(w, &k1), (2.0 * w, &k2), (2.0 * w, &k3), (w, &k4)])
                .to_state(grid, t0 + dt)?;
        self.check_solenoidal(&next)?;
        Ok(StepOutcome {
            state: next,
            stages: [state.clone(), s2, s3, s4],
            dissipation: w * (d1 + 2.0 * d2 + 2.0 * d3 + d4),
        })
    }

    /// Aborts when `‖div H‖_{L²}` exceeds the tolerance.
    pub fn check_solenoidal(&self, state: &FluidState) -> Result<()> {
        let (div, h1) = divergence_and_h1(&state.h);
        let tol = DIV_TOLERANCE * (1.0 + h1);
        if div > tol {
            return Err(Error::blow_up(
                "H",
                format!("||div H|| = {div:e} exceeds tolerance {tol:e}"),
            ));
        }
        Ok(())
    }

    /// Largest stable step: the advective bound with the fast magnetosonic
    /// speed, capped by the explicit viscous limit.
    pub fn cfl_dt(&self, state: &FluidState) -> f64 {
        let grid = state.grid();
        let h = grid.spacing();
        let law = self.params.pressure;
        let rho = state.rho.values();
        let u: [&[f64]; 3] = [0, 1, 2].map(|j| state.u.component(j).values());
        let b: [&[f64]; 3] = [0, 1, 2].map(|j| state.h.component(j).values());
        let speed = (0..grid.points())
            .into_par_iter()
            .map(|i| {
                let u2 = u[0][i] * u[0][i] + u[1][i] * u[1][i] + u[2][i] * u[2][i];
                let h2 = b[0][i] * b[0][i] + b[1][i] * b[1][i] + b[2][i] * b[2][i];
                let cf2 = law.dp(rho[i]).max(0.0) + h2 / rho[i];
                u2.sqrt() + cf2.sqrt()
            })
            .reduce(|| 0.0, f64::max);
        let advective = if speed > 0.0 {
            self.cfl * h / speed
        } else {
            f64::INFINITY
        };
        // RK4 is stable on the negative real axis up to about 2.78; the
        // largest retained wavenumber per axis is f·π/h.
        let f = if self.dealias { 2.0 / 3.0 } else { 1.0 };
        let c_visc = 2.5 / (3.0 * (std::f64::consts::PI * f).powi(2));
        let viscous = c_visc * h * h * state.rho.min() / (self.params.mu + self.params.lambda);
        advective.min(viscous)
    }
}

/// `(‖div v‖_{L²}, ‖v‖_{H¹})` from a single spectral pass.
pub(crate) fn divergence_and_h1(v: &VectorField) -> (f64, f64) {
    let grid = *v.grid();
    let wn = Wavenumbers::new(&grid);
    let [a, b, c] = v.components();
    let s = spectral::forward_real(&grid, &[a.values(), b.values(), c.values()]);
    let scale = grid.cell_volume() / grid.points() as f64;
    let div = spectral::sum_indexed(grid.points(), |idx| {
        let k = wn.vector(&grid, idx);
        (s[0][idx] * k[0] + s[1][idx] * k[1] + s[2][idx] * k[2]).norm_sqr()
    });
    let h1 = spectral::sum_indexed(grid.points(), |idx| {
        let k = wn.vector(&grid, idx);
        let w = 1.0 + k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        w * (s[0][idx].norm_sqr() + s[1][idx].norm_sqr() + s[2][idx].norm_sqr())
    });
    ((scale * div).sqrt(), (scale * h1).sqrt())
}
