use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::config::{InitMode, RunConfig};
use crate::dynamics::{FluidState, ManufacturedCase};
use crate::error::{Error, Result};
use crate::fields::{sobolev_norm, GridSpec, ScalarField, VectorField};
use crate::model::ModelParams;

/// Initial state with its measured size.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub state: FluidState,
    /// Requested `C₀`; zero for equilibrium data.
    pub c0_target: f64,
    /// `C₀` measured on the generated state.
    pub c0_achieved: f64,
    /// True when the amplitude was reduced to respect the density corridor.
    pub shrunk: bool,
}

/// `C₀ = ‖ρ − ρ̃‖_{H²} + ‖u‖_{H²} + ‖B‖_{H²}`.
pub fn initial_size(state: &FluidState, params: &ModelParams) -> Result<f64> {
    let drho = state.rho.map(|r| r - params.rho_tilde);
    Ok(sobolev_norm(&drho, 2)?
        + sobolev_norm(&state.u, 2)?
        + sobolev_norm(&state.b(params.h_tilde), 2)?)
}

pub fn generate_initial_data(config: &RunConfig) -> Result<InitialData> {
    let grid = config.grid_spec()?;
    let params = config.model_params()?;
    match config.init {
        InitMode::Equilibrium => Ok(InitialData {
            state: FluidState::equilibrium(grid, &params),
            c0_target: 0.0,
            c0_achieved: 0.0,
            shrunk: false,
        }),
        InitMode::Manufactured => {
            let case =
                ManufacturedCase::new(config.manufactured_case, config.manufactured_amplitude)?;
            let state = case.state_at(0.0, grid, &params);
            let c0 = initial_size(&state, &params)?;
            Ok(InitialData {
                state,
                c0_target: c0,
                c0_achieved: c0,
                shrunk: false,
            })
        }
        InitMode::RandomSmooth => random_smooth(
            grid,
            &params,
            config.seed,
            config.spectral_decay_rate,
            config.max_mode,
            config.target_c0,
        ),
    }
}

/// Perturbation components in draw order: `ρ`, `u¹..u³`, `B¹..B³`.
const COMPONENTS: usize = 7;

struct Mode {
    k: [i64; 3],
    cos: [f64; COMPONENTS],
    sin: [f64; COMPONENTS],
}

/// Removes the part of `v` along `k`.
fn project(v: &mut [f64], k: [i64; 3]) {
    let kf = k.map(|x| x as f64);
    let k2: f64 = kf.iter().map(|x| x * x).sum();
    let dot: f64 = v.iter().zip(&kf).map(|(a, b)| a * b).sum();
    for (a, b) in v.iter_mut().zip(&kf) {
        *a -= dot / k2 * b;
    }
}

/// One mode per `±k` pair with `1 ≤ |k|∞ ≤ max_mode`, enumerated in a
/// fixed order that does not depend on the grid.
fn draw_modes(seed: u64, decay: f64, max_mode: usize) -> Vec<Mode> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let m = max_mode as i64;
    let mut modes = Vec::new();
    for k0 in -m..=m {
        for k1 in -m..=m {
            for k2 in -m..=m {
                let k = [k0, k1, k2];
                let first = k.iter().find(|x| **x != 0);
                if first.is_none_or(|x| *x < 0) {
                    continue;
                }
                let amp = (-decay * (k.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt()).exp();
                let mut draw = || -> [f64; COMPONENTS] {
                    std::array::from_fn(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        amp * z
                    })
                };
                let (mut cos, mut sin) = (draw(), draw());
                project(&mut cos[4..7], k);
                project(&mut sin[4..7], k);
                modes.push(Mode { k, cos, sin });
            }
        }
    }
    modes
}

/// Evaluates the trigonometric sums on the grid with separable phase tables.
fn synthesize(grid: GridSpec, modes: &[Mode], max_mode: usize) -> [Vec<f64>; COMPONENTS] {
    let n = grid.n();
    let m = max_mode as i64;
    // table[j][i] = exp(iκ(j − m)x_i)
    let table: Vec<Vec<(f64, f64)>> = (-m..=m)
        .map(|j| {
            (0..n)
                .map(|i| {
                    let phase = grid.kappa() * j as f64 * grid.coordinate(i);
                    (phase.cos(), phase.sin())
                })
                .collect()
        })
        .collect();
    let mul = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    let values: Vec<[f64; COMPONENTS]> = (0..grid.points())
        .into_par_iter()
        .map(|idx| {
            let [i0, i1, i2] = grid.unravel(idx);
            let mut acc = [0.0; COMPONENTS];
            for mode in modes {
                let e = |a: usize, i: usize| table[(mode.k[a] + m) as usize][i];
                let (c, s) = mul(mul(e(0, i0), e(1, i1)), e(2, i2));
                for (c_out, (a, b)) in acc.iter_mut().zip(mode.cos.iter().zip(&mode.sin)) {
                    *c_out += a * c + b * s;
                }
            }
            acc
        })
        .collect();
    std::array::from_fn(|c| values.iter().map(|v| v[c]).collect())
}

/// Random low-mode perturbation of `(ρ̃, 0, H̃)` with solenoidal `B`,
/// scaled by one common factor so that `C₀` equals `target_c0`. When the
/// scaled density would leave `(ρ̲ + d, ρ̄ − d)` the factor is reduced and
/// the achieved `C₀` reported.
pub fn random_smooth(
    grid: GridSpec,
    params: &ModelParams,
    seed: u64,
    decay: f64,
    max_mode: usize,
    target_c0: f64,
) -> Result<InitialData> {
    if max_mode == 0 || 2 * max_mode >= grid.n() {
        return Err(Error::Config(format!(
            "max_mode must lie in [1, n/2), got {max_mode} for n = {}",
            grid.n()
        )));
    }
    let c = params.corridor;
    let room_low = params.rho_tilde - (c.rho_lower + c.d);
    let room_high = (c.rho_upper - c.d) - params.rho_tilde;
    if !(room_low > 0.0 && room_high > 0.0) {
        return Err(Error::Config(
            "reference density lies outside the shrunken corridor".into(),
        ));
    }

    let modes = draw_modes(seed, decay, max_mode);
    let [drho, u0, u1, u2, b0, b1, b2] = synthesize(grid, &modes, max_mode);
    let field = |v: Vec<f64>| ScalarField::from_values(grid, v);
    let drho = field(drho)?;
    let u = VectorField::new([field(u0)?, field(u1)?, field(u2)?])?;
    let b = VectorField::new([field(b0)?, field(b1)?, field(b2)?])?;
    let raw = sobolev_norm(&drho, 2)? + sobolev_norm(&u, 2)? + sobolev_norm(&b, 2)?;
    if !(raw > 0.0) {
        return Err(Error::Degenerate("random perturbation vanished".into()));
    }

    let mut scale = target_c0 / raw;
    let mut shrunk = false;
    let (up, down) = (drho.max().max(0.0), (-drho.min()).max(0.0));
    let limit = (room_high / up).min(room_low / down);
    if scale >= limit {
        scale = 0.9 * limit;
        shrunk = true;
    }
    let h_tilde = params.h_tilde;
    let state = FluidState::new(
        0.0,
        drho.map(|v| params.rho_tilde + scale * v),
        u.scale(scale),
        b.map_components(|j, c| c.map(|v| h_tilde[j] + scale * v)),
    )?;
    let c0_achieved = initial_size(&state, params)?;
    Ok(InitialData {
        state,
        c0_target: target_c0,
        c0_achieved,
        shrunk,
    })
}
