use rayon::prelude::*;

use super::spectral::{self, C64};
use super::{GridSpec, ScalarField, VectorField};

/// Off-grid evaluation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Trilinear,
    /// Exact evaluation of the trigonometric interpolant.
    Spectral,
}

fn trilinear(f: &ScalarField, p: [f64; 3]) -> f64 {
    let g = f.grid();
    let n = g.n();
    let h = g.spacing();
    let mut lo = [0usize; 3];
    let mut t = [0.0; 3];
    for a in 0..3 {
        let s = p[a].rem_euclid(g.length()) / h;
        let i = s.floor();
        t[a] = s - i;
        lo[a] = (i as usize) % n;
    }
    let v = f.values();
    let mut acc = 0.0;
    for corner in 0..8 {
        let mut w = 1.0;
        let mut q = [0usize; 3];
        for a in 0..3 {
            if corner >> a & 1 == 1 {
                w *= t[a];
                q[a] = (lo[a] + 1) % n;
            } else {
                w *= 1.0 - t[a];
                q[a] = lo[a];
            }
        }
        if w != 0.0 {
            acc += w * v[g.index(q[0], q[1], q[2])];
        }
    }
    acc
}

/// Precomputed spectrum for repeated exact evaluation.
struct Trig {
    grid: GridSpec,
    spec: Vec<C64>,
}

impl Trig {
    fn new(f: &ScalarField) -> Self {
        let grid = *f.grid();
        let spec = spectral::forward_real(&grid, &[f.values()]).remove(0);
        Self { grid, spec }
    }

    fn axis_basis(&self, x: f64) -> Vec<C64> {
        let g = &self.grid;
        (0..g.n())
            .map(|i| {
                let phase = g.signed_mode(i) as f64 * g.kappa() * x;
                if g.is_nyquist(i) {
                    C64::new(phase.cos(), 0.0)
                } else {
                    C64::new(phase.cos(), phase.sin())
                }
            })
            .collect()
    }

    fn eval(&self, p: [f64; 3]) -> f64 {
        let n = self.grid.n();
        let [e0, e1, e2] = p.map(|x| self.axis_basis(x));
        let mut acc = C64::default();
        for i0 in 0..n {
            let mut plane = C64::default();
            for i1 in 0..n {
                let row = &self.spec[self.grid.index(i0, i1, 0)..][..n];
                let line: C64 = row.iter().zip(&e2).map(|(c, e)| c * e).sum();
                plane += line * e1[i1];
            }
            acc += plane * e0[i0];
        }
        acc.re / self.grid.points() as f64
    }
}

pub fn sample_at(f: &ScalarField, points: &[[f64; 3]], method: Interpolation) -> Vec<f64> {
    match method {
        Interpolation::Trilinear => points.par_iter().map(|&p| trilinear(f, p)).collect(),
        Interpolation::Spectral => {
            let t = Trig::new(f);
            points.par_iter().map(|&p| t.eval(p)).collect()
        }
    }
}

pub fn sample_vector_at(
    v: &VectorField,
    points: &[[f64; 3]],
    method: Interpolation,
) -> Vec<[f64; 3]> {
    let cols: Vec<Vec<f64>> = v
        .components()
        .iter()
        .map(|c| sample_at(c, points, method))
        .collect();
    (0..points.len())
        .map(|i| [cols[0][i], cols[1][i], cols[2][i]])
        .collect()
}
