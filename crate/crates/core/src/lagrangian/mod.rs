//! Particle paths of the velocity field and the log-density law carried
//! along them.

use rayon::prelude::*;

use crate::diagnostics::effective_flux;
use crate::dynamics::FluidState;
use crate::error::{Error, Result};
use crate::fields::{sample_at, sample_vector_at, GridSpec, Interpolation};
use crate::model::ModelParams;

/// Offset of the seed lattice inside each cell, as a fraction of the
/// lattice spacing. Irrational-looking so seeds avoid grid nodes.
const LATTICE_OFFSET: f64 = (2.0 + 1.0 / 3.0) / 8.0;

/// Tracked particles. All vectors share one length and are ordered by
/// `seed_ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    pub positions: Vec<[f64; 3]>,
    /// `log ρ` integrated along each path.
    pub log_rho_carried: Vec<f64>,
    /// `∫ F(x(s), s) ds` along each path.
    pub flux_integral: Vec<f64>,
    pub seed_ids: Vec<usize>,
}

/// One output row per particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleSample {
    pub seed_id: usize,
    pub position: [f64; 3],
    /// Grid density interpolated at the particle.
    pub rho_interp: f64,
    pub rho_carried: f64,
    pub flux_integral: f64,
}

fn wrap(grid: &GridSpec, p: [f64; 3]) -> [f64; 3] {
    let l = grid.length();
    p.map(|x| {
        let w = x.rem_euclid(l);
        // rem_euclid can round up to exactly l for tiny negative inputs.
        if w >= l {
            0.0
        } else {
            w
        }
    })
}

fn shifted(p: &[[f64; 3]], k: &[[f64; 3]], s: f64) -> Vec<[f64; 3]> {
    p.iter()
        .zip(k)
        .map(|(p, k)| [p[0] + s * k[0], p[1] + s * k[1], p[2] + s * k[2]])
        .collect()
}

impl ParticleSet {
    /// Seeds at `(i + θ) L / m` along each axis, with `m = per_axis`.
    pub fn lattice(state: &FluidState, per_axis: usize) -> Result<Self> {
        if per_axis == 0 {
            return Err(Error::InvalidParams(
                "particle lattice needs at least 1 seed per axis".into(),
            ));
        }
        let step = state.grid().length() / per_axis as f64;
        let coord = |i: usize| (i as f64 + LATTICE_OFFSET) * step;
        let mut seeds = Vec::with_capacity(per_axis.pow(3));
        for i in 0..per_axis {
            for j in 0..per_axis {
                for k in 0..per_axis {
                    seeds.push([coord(i), coord(j), coord(k)]);
                }
            }
        }
        Self::from_seeds(state, seeds)
    }

    /// Initial densities are exact evaluations of the grid interpolant, so
    /// the carried value does not inherit the error of the scheme later used
    /// to compare against the grid.
    pub fn from_seeds(state: &FluidState, seeds: Vec<[f64; 3]>) -> Result<Self> {
        if seeds.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("particle seed".into()));
        }
        let grid = *state.grid();
        let positions: Vec<_> = seeds.into_iter().map(|p| wrap(&grid, p)).collect();
        let rho = sample_at(&state.rho, &positions, Interpolation::Spectral);
        if let Some(r) = rho.iter().find(|r| !(**r > 0.0)) {
            return Err(Error::blow_up(
                "rho",
                format!("non-positive density {r} at a particle seed"),
            ));
        }
        let n = positions.len();
        Ok(Self {
            positions,
            log_rho_carried: rho.iter().map(|r| r.ln()).collect(),
            flux_integral: vec![0.0; n],
            seed_ids: (0..n).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Particle positions at the four RK4 stages and the velocities sampled
    /// there, using the field stage states.
    fn stage_paths(
        &self,
        stages: &[FluidState; 4],
        dt: f64,
        interp: Interpolation,
    ) -> ([Vec<[f64; 3]>; 4], [Vec<[f64; 3]>; 4]) {
        let x1 = self.positions.clone();
        let k1 = sample_vector_at(&stages[0].u, &x1, interp);
        let x2 = shifted(&x1, &k1, 0.5 * dt);
        let k2 = sample_vector_at(&stages[1].u, &x2, interp);
        let x3 = shifted(&x1, &k2, 0.5 * dt);
        let k3 = sample_vector_at(&stages[2].u, &x3, interp);
        let x4 = shifted(&x1, &k3, dt);
        let k4 = sample_vector_at(&stages[3].u, &x4, interp);
        ([x1, x2, x3, x4], [k1, k2, k3, k4])
    }

    fn advanced_positions(
        &self,
        grid: &GridSpec,
        k: &[Vec<[f64; 3]>; 4],
        dt: f64,
    ) -> Result<Vec<[f64; 3]>> {
        let w = dt / 6.0;
        let out: Vec<[f64; 3]> = (0..self.len())
            .map(|i| {
                let p = self.positions[i];
                wrap(
                    grid,
                    [0, 1, 2].map(|a| {
                        p[a] + w * (k[0][i][a] + 2.0 * k[1][i][a] + 2.0 * k[2][i][a] + k[3][i][a])
                    }),
                )
            })
            .collect();
        if out.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::blow_up("particles", "non-finite particle position"));
        }
        Ok(out)
    }

    /// Moves the particles one RK4 step through the stage states of a field
    /// step. Density and flux integral are left unchanged.
    pub fn advect(&self, stages: &[FluidState; 4], dt: f64, interp: Interpolation) -> Result<Self> {
        let (_, k) = self.stage_paths(stages, dt, interp);
        Ok(Self {
            positions: self.advanced_positions(stages[0].grid(), &k, dt)?,
            ..self.clone()
        })
    }

    /// Advances positions, `log ρ` and the flux integral together over one
    /// field step, integrating
    /// `(μ+λ) d/dt log ρ = −(P(ρ) − P̃) − F` along each path with the same
    /// RK4 stages.
    pub fn carry_log_density(
        &self,
        stages: &[FluidState; 4],
        params: &ModelParams,
        dt: f64,
        interp: Interpolation,
    ) -> Result<Self> {
        let (x, k) = self.stage_paths(stages, dt, interp);
        let mut flux = Vec::with_capacity(4);
        for (s, xs) in stages.iter().zip(&x) {
            flux.push(sample_at(&effective_flux(s, params)?, xs, interp));
        }
        let visc = params.mu + params.lambda;
        let p_tilde = params.p_tilde();
        let law = params.pressure;
        let rate = |l: f64, f: f64| -(law.p(l.exp()) - p_tilde + f) / visc;
        let w = dt / 6.0;
        let (log_rho, flux_integral): (Vec<f64>, Vec<f64>) = (0..self.len())
            .into_par_iter()
            .map(|i| {
                let l = self.log_rho_carried[i];
                let r1 = rate(l, flux[0][i]);
                let r2 = rate(l + 0.5 * dt * r1, flux[1][i]);
                let r3 = rate(l + 0.5 * dt * r2, flux[2][i]);
                let r4 = rate(l + dt * r3, flux[3][i]);
                let df = w * (flux[0][i] + 2.0 * flux[1][i] + 2.0 * flux[2][i] + flux[3][i]);
                (
                    l + w * (r1 + 2.0 * r2 + 2.0 * r3 + r4),
                    self.flux_integral[i] + df,
                )
            })
            .unzip();
        if let Some(i) = log_rho.iter().position(|l| !l.is_finite()) {
            return Err(Error::blow_up(
                "rho",
                format!(
                    "carried density degenerated on particle {}",
                    self.seed_ids[i]
                ),
            ));
        }
        Ok(Self {
            positions: self.advanced_positions(stages[0].grid(), &k, dt)?,
            log_rho_carried: log_rho,
            flux_integral,
            seed_ids: self.seed_ids.clone(),
        })
    }

    /// Rows for output, with the grid density of `state` interpolated at
    /// the current positions.
    pub fn samples(&self, state: &FluidState, interp: Interpolation) -> Vec<ParticleSample> {
        let rho = sample_at(&state.rho, &self.positions, interp);
        (0..self.len())
            .map(|i| ParticleSample {
                seed_id: self.seed_ids[i],
                position: self.positions[i],
                rho_interp: rho[i],
                rho_carried: self.log_rho_carried[i].exp(),
                flux_integral: self.flux_integral[i],
            })
            .collect()
    }

    /// Largest `|ρ_carried − ρ_interp| / ρ̃` over the set.
    pub fn max_density_mismatch(
        &self,
        state: &FluidState,
        params: &ModelParams,
        interp: Interpolation,
    ) -> f64 {
        self.samples(state, interp)
            .iter()
            .map(|s| (s.rho_carried - s.rho_interp).abs() / params.rho_tilde)
            .fold(0.0, f64::max)
    }
}

/// Per-particle record of how far `log ρ` strayed and how large the flux
/// integral became over any subinterval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleExcursion {
    pub seed_id: usize,
    /// `max_t |log ρ(x(t), t) − log ρ̃|`
    pub log_rho: f64,
    /// `max_{t₀<t₁} |∫_{t₀}^{t₁} F ds|`
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorridorCertificate {
    pub particles: Vec<ParticleExcursion>,
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_lower: f64,
    pub rho_upper: f64,
    /// Grid density stayed inside `[ρ̲, ρ̄]` at every observed time.
    pub satisfied: bool,
}

/// Accumulates the history needed for a [`CorridorCertificate`].
#[derive(Debug, Clone)]
pub struct CorridorTracker {
    log_rho_tilde: f64,
    rho_lower: f64,
    rho_upper: f64,
    seed_ids: Vec<usize>,
    log_excursion: Vec<f64>,
    flux_min: Vec<f64>,
    flux_max: Vec<f64>,
    rho_min: f64,
    rho_max: f64,
}

impl CorridorTracker {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            log_rho_tilde: params.rho_tilde.ln(),
            rho_lower: params.corridor.rho_lower,
            rho_upper: params.corridor.rho_upper,
            seed_ids: Vec::new(),
            log_excursion: Vec::new(),
            flux_min: Vec::new(),
            flux_max: Vec::new(),
            rho_min: f64::INFINITY,
            rho_max: f64::NEG_INFINITY,
        }
    }

    /// Records grid density extrema and, when given, the particle state at
    /// the same time. Flux integrals start at zero, so the first particle
    /// observation should be the seeded set.
    pub fn observe(&mut self, state: &FluidState, particles: Option<&ParticleSet>) {
        self.rho_min = self.rho_min.min(state.rho.min());
        self.rho_max = self.rho_max.max(state.rho.max());
        let Some(p) = particles else { return };
        if self.seed_ids.is_empty() {
            self.seed_ids = p.seed_ids.clone();
            self.log_excursion = vec![0.0; p.len()];
            self.flux_min = vec![0.0; p.len()];
            self.flux_max = vec![0.0; p.len()];
        }
        for i in 0..p.len().min(self.seed_ids.len()) {
            let e = (p.log_rho_carried[i] - self.log_rho_tilde).abs();
            self.log_excursion[i] = self.log_excursion[i].max(e);
            self.flux_min[i] = self.flux_min[i].min(p.flux_integral[i]);
            self.flux_max[i] = self.flux_max[i].max(p.flux_integral[i]);
        }
    }

    pub fn certificate(&self) -> CorridorCertificate {
        let particles = (0..self.seed_ids.len())
            .map(|i| ParticleExcursion {
                seed_id: self.seed_ids[i],
                log_rho: self.log_excursion[i],
                flux: self.flux_max[i] - self.flux_min[i],
            })
            .collect();
        CorridorCertificate {
            particles,
            rho_min: self.rho_min,
            rho_max: self.rho_max,
            rho_lower: self.rho_lower,
            rho_upper: self.rho_upper,
            satisfied: self.rho_min >= self.rho_lower && self.rho_max <= self.rho_upper,
        }
    }
}
