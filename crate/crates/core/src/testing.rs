//! Smooth band-limited fixtures shared by unit tests.

use crate::dynamics::FluidState;
use crate::fields::{curl, GridSpec, ScalarField, VectorField};
use crate::model::ModelParams;

pub fn params() -> ModelParams {
    ModelParams::with_gamma(0.1, 0.07, 1.0, [1.0, 0.5, -0.3], 1.4).unwrap()
}

pub fn grid(n: usize) -> GridSpec {
    GridSpec::new(n, 2.0 * std::f64::consts::PI).unwrap()
}

pub fn wave(g: GridSpec, tag: f64, amp: f64) -> ScalarField {
    ScalarField::from_fn(g, |[x, y, z]| {
        amp * ((x + 0.7 * tag).sin() * (2.0 * y).cos()
            + 0.5 * (x - y + 2.0 * z + tag).cos()
            + 0.3 * (z - tag).sin())
    })
}

/// Density, velocity and a solenoidal magnetic perturbation built from
/// [`wave`] with amplitude `amp`.
pub fn smooth_state(g: GridSpec, p: &ModelParams, amp: f64) -> FluidState {
    let rho = wave(g, 0.1, amp).map(|v| p.rho_tilde + v);
    let u = VectorField::new([wave(g, 1.0, amp), wave(g, 2.0, amp), wave(g, 3.0, amp)]).unwrap();
    let a = VectorField::new([wave(g, 4.0, amp), wave(g, 5.0, amp), wave(g, 6.0, amp)]).unwrap();
    let h = curl(&a).offset(p.h_tilde.map(|c| -c));
    FluidState::new(0.0, rho, u, h).unwrap()
}
