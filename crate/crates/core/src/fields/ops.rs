use rayon::prelude::*;

use super::spectral::{self, Wavenumbers, C64};
use super::{GridSpec, ScalarField, TensorField, VectorField};
use crate::error::{Error, Result};

/// `i * k * c`
#[inline]
fn times_ik(c: C64, k: f64) -> C64 {
    C64::new(-k * c.im, k * c.re)
}

fn to_scalars(grid: GridSpec, spectra: &[Vec<C64>]) -> Vec<ScalarField> {
    let refs: Vec<&[C64]> = spectra.iter().map(Vec::as_slice).collect();
    spectral::inverse_real(&grid, &refs)
        .into_iter()
        .map(|values| ScalarField { grid, values })
        .collect()
}

fn into_vector(mut s: Vec<ScalarField>) -> VectorField {
    let c2 = s.pop().expect("three components");
    let c1 = s.pop().expect("three components");
    let c0 = s.pop().expect("three components");
    VectorField {
        components: [c0, c1, c2],
    }
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let grid = *f.grid();
    let wn = Wavenumbers::new(&grid);
    let spec = spectral::forward_real(&grid, &[f.values()]).remove(0);
    let out: Vec<Vec<C64>> = (0..3)
        .map(|j| {
            spec.par_iter()
                .enumerate()
                .map(|(idx, &c)| times_ik(c, wn.vector(&grid, idx)[j]))
                .collect()
        })
        .collect();
    into_vector(to_scalars(grid, &out))
}

fn vector_spectra(v: &VectorField) -> Vec<Vec<C64>> {
    let grid = *v.grid();
    let [a, b, c] = v.components();
    spectral::forward_real(&grid, &[a.values(), b.values(), c.values()])
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let grid = *v.grid();
    let wn = Wavenumbers::new(&grid);
    let s = vector_spectra(v);
    let out: Vec<C64> = (0..grid.points())
        .into_par_iter()
        .map(|idx| {
            let k = wn.vector(&grid, idx);
            times_ik(s[0][idx], k[0]) + times_ik(s[1][idx], k[1]) + times_ik(s[2][idx], k[2])
        })
        .collect();
    to_scalars(grid, &[out]).remove(0)
}

pub fn curl(v: &VectorField) -> VectorField {
    let grid = *v.grid();
    let wn = Wavenumbers::new(&grid);
    let s = vector_spectra(v);
    let out: Vec<Vec<C64>> = (0..3)
        .map(|j| {
            let (a, b) = ((j + 1) % 3, (j + 2) % 3);
            (0..grid.points())
                .into_par_iter()
                .map(|idx| {
                    let k = wn.vector(&grid, idx);
                    times_ik(s[b][idx], k[a]) - times_ik(s[a][idx], k[b])
                })
                .collect()
        })
        .collect();
    into_vector(to_scalars(grid, &out))
}

/// Velocity gradient `t[j][k] = ∂_k v^j`.
pub fn jacobian(v: &VectorField) -> TensorField {
    let grid = *v.grid();
    let wn = Wavenumbers::new(&grid);
    let s = vector_spectra(v);
    let out: Vec<Vec<C64>> = (0..9)
        .map(|jk| {
            let (j, k) = (jk / 3, jk % 3);
            s[j].par_iter()
                .enumerate()
                .map(|(idx, &c)| times_ik(c, wn.vector(&grid, idx)[k]))
                .collect()
        })
        .collect();
    let mut it = to_scalars(grid, &out).into_iter();
    let mut row = || [0, 1, 2].map(|_| it.next().expect("nine components"));
    let components = [row(), row(), row()];
    TensorField { components }
}

/// Row divergence `(div T)^j = ∂_k T^{jk}`.
pub fn tensor_divergence(t: &TensorField) -> VectorField {
    let grid = *t.grid();
    let wn = Wavenumbers::new(&grid);
    let slices: Vec<&[f64]> = t.iter().map(|c| c.values()).collect();
    let s = spectral::forward_real(&grid, &slices);
    let out: Vec<Vec<C64>> = (0..3)
        .map(|j| {
            (0..grid.points())
                .into_par_iter()
                .map(|idx| {
                    let k = wn.vector(&grid, idx);
                    (0..3).map(|c| times_ik(s[3 * j + c][idx], k[c])).sum()
                })
                .collect()
        })
        .collect();
    into_vector(to_scalars(grid, &out))
}

#[inline]
fn k_sq(wn: &Wavenumbers, grid: &GridSpec, idx: usize) -> f64 {
    let k = wn.vector(grid, idx);
    k[0] * k[0] + k[1] * k[1] + k[2] * k[2]
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = *f.grid();
    let wn = Wavenumbers::new(&grid);
    let spec = spectral::forward_real(&grid, &[f.values()]).remove(0);
    let out: Vec<C64> = spec
        .par_iter()
        .enumerate()
        .map(|(idx, &c)| c * -k_sq(&wn, &grid, idx))
        .collect();
    to_scalars(grid, &[out]).remove(0)
}

pub fn vector_laplacian(v: &VectorField) -> VectorField {
    let grid = *v.grid();
    let wn = Wavenumbers::new(&grid);
    let out: Vec<Vec<C64>> = vector_spectra(v)
        .into_iter()
        .map(|s| {
            s.par_iter()
                .enumerate()
                .map(|(idx, &c)| c * -k_sq(&wn, &grid, idx))
                .collect()
        })
        .collect();
    into_vector(to_scalars(grid, &out))
}

/// Zero-mean solution of `laplacian(phi) = rhs`.
///
/// Bins where the discrete Laplacian vanishes (the mean and the pure Nyquist
/// corners) are set to zero.
pub fn solve_poisson(rhs: &ScalarField) -> Result<ScalarField> {
    let grid = *rhs.grid();
    rhs.ensure_finite("poisson rhs")?;
    let mean = rhs.mean();
    let len = rhs.values().len();
    let rms =
        (spectral::sum_indexed(len, |i| rhs.values()[i] * rhs.values()[i]) / len as f64).sqrt();
    let tolerance = 1e-10 * rms;
    if mean.abs() > tolerance {
        return Err(Error::GaugeViolation { mean, tolerance });
    }
    let wn = Wavenumbers::new(&grid);
    let spec = spectral::forward_real(&grid, &[rhs.values()]).remove(0);
    let out: Vec<C64> = spec
        .par_iter()
        .enumerate()
        .map(|(idx, &c)| {
            let k2 = k_sq(&wn, &grid, idx);
            if k2 == 0.0 {
                C64::default()
            } else {
                c / -k2
            }
        })
        .collect();
    Ok(to_scalars(grid, &[out]).remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n, 2.0).unwrap()
    }

    fn rel_l2(a: &ScalarField, b: &ScalarField) -> f64 {
        let d: f64 = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y).powi(2))
            .sum();
        let s: f64 = b.values().iter().map(|y| y * y).sum();
        (d / s.max(1e-300)).sqrt()
    }

    fn band_limited(g: GridSpec, seed: u64) -> ScalarField {
        let kap = g.kappa();
        let s = seed as f64;
        ScalarField::from_fn(g, |[x, y, z]| {
            (kap * x + 0.3 * s).sin() * (2.0 * kap * y).cos()
                + 0.5 * (kap * (x - 2.0 * z) + s).cos()
                + 0.25 * (3.0 * kap * y + kap * z).sin()
        })
    }

    /// Fourth-order centered difference along `axis`.
    fn fd4(f: &ScalarField, axis: usize) -> ScalarField {
        let g = *f.grid();
        let n = g.n();
        let h = g.spacing();
        let mut out = vec![0.0; g.points()];
        for (idx, o) in out.iter_mut().enumerate() {
            let p = g.unravel(idx);
            let at = |off: isize| {
                let mut q = p;
                q[axis] = ((p[axis] as isize + off).rem_euclid(n as isize)) as usize;
                f.values()[g.index(q[0], q[1], q[2])]
            };
            *o = (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h);
        }
        ScalarField::from_values(g, out).unwrap()
    }

    #[test]
    fn gradient_of_single_mode() {
        let g = grid(16);
        let kap = g.kappa();
        let f = ScalarField::from_fn(g, |x| (kap * x[0]).sin());
        let d = gradient(&f);
        let expect = ScalarField::from_fn(g, |x| kap * (kap * x[0]).cos());
        assert!(rel_l2(d.component(0), &expect) < 1e-13);
        assert!(d.component(1).max_abs() < 1e-13);
        assert!(d.component(2).max_abs() < 1e-13);
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = grid(8);
        let d = gradient(&ScalarField::constant(g, 3.7));
        assert!(d.components().iter().all(|c| c.max_abs() == 0.0));
    }

    #[test]
    fn gradient_matches_fourth_order_differences() {
        // The FD error shrinks by ~16 per refinement.
        let errs: Vec<f64> = [16, 32]
            .iter()
            .map(|&n| {
                let f = band_limited(grid(n), 1);
                let d = gradient(&f);
                (0..3)
                    .map(|a| rel_l2(&fd4(&f, a), d.component(a)))
                    .fold(0.0, f64::max)
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!(ratio > 13.0 && ratio < 19.0, "{errs:?}");
    }

    #[test]
    fn div_grad_is_laplacian() {
        let f = band_limited(grid(16), 2);
        let a = divergence(&gradient(&f));
        let b = laplacian(&f);
        assert!(rel_l2(&a, &b) < 1e-12);
    }

    #[test]
    fn laplacian_eigenfunction() {
        let g = grid(16);
        let kap = g.kappa();
        let f = ScalarField::from_fn(g, |x| (kap * x[0]).sin());
        let expect = f.scale(-kap * kap);
        assert!(rel_l2(&laplacian(&f), &expect) < 1e-13);
    }

    #[test]
    fn divergence_of_transverse_mode_vanishes() {
        let g = grid(8);
        let kap = g.kappa();
        let v = VectorField::from_fn(g, |x| [(kap * x[1]).sin(), 0.0, 0.0]);
        assert!(divergence(&v).max_abs() < 1e-14);
    }

    #[test]
    fn curl_identities() {
        let g = grid(16);
        let kap = g.kappa();
        let f = band_limited(g, 3);
        let cg = curl(&gradient(&f));
        assert!(cg.components().iter().all(|c| c.max_abs() < 1e-12));

        let v =
            VectorField::new([band_limited(g, 4), band_limited(g, 5), band_limited(g, 6)]).unwrap();
        let dc = divergence(&curl(&v));
        let vnorm: f64 = v.norm_sq().values().iter().sum::<f64>().sqrt();
        let dnorm: f64 = dc.values().iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(dnorm <= 1e-12 * vnorm);

        let w = VectorField::from_fn(g, |x| [0.0, (kap * x[0]).sin(), 0.0]);
        let c = curl(&w);
        let expect = ScalarField::from_fn(g, |x| kap * (kap * x[0]).cos());
        assert!(rel_l2(c.component(2), &expect) < 1e-13);
        assert!(c.component(0).max_abs() < 1e-13 && c.component(1).max_abs() < 1e-13);
    }

    #[test]
    fn jacobian_rows_are_gradients() {
        let g = grid(8);
        let v =
            VectorField::new([band_limited(g, 1), band_limited(g, 2), band_limited(g, 3)]).unwrap();
        let j = jacobian(&v);
        for a in 0..3 {
            let gr = gradient(v.component(a));
            for b in 0..3 {
                assert!(rel_l2(j.get(a, b), gr.component(b)) < 1e-13);
            }
        }
    }

    #[test]
    fn tensor_divergence_matches_row_divergence() {
        let g = grid(8);
        let v =
            VectorField::new([band_limited(g, 1), band_limited(g, 2), band_limited(g, 3)]).unwrap();
        let t = jacobian(&v).transpose();
        let d = tensor_divergence(&t);
        for j in 0..3 {
            let expect = divergence(&t.row(j));
            assert!(rel_l2(d.component(j), &expect) < 1e-13);
        }
    }

    #[test]
    fn poisson_single_mode_and_round_trip() {
        let g = grid(16);
        let kap = g.kappa();
        let rhs = ScalarField::from_fn(g, |x| (kap * x[0]).sin());
        let phi = solve_poisson(&rhs).unwrap();
        let expect = rhs.scale(-1.0 / (kap * kap));
        assert!(rel_l2(&phi, &expect) < 1e-13);

        let f = band_limited(g, 7);
        let r = laplacian(&f);
        let back = laplacian(&solve_poisson(&r).unwrap());
        assert!(rel_l2(&back, &r) < 1e-10);
        assert!(solve_poisson(&ScalarField::zeros(g)).unwrap().max_abs() == 0.0);
    }

    #[test]
    fn poisson_rejects_nonzero_mean() {
        let g = grid(8);
        let r = solve_poisson(&ScalarField::constant(g, 1.0));
        assert!(matches!(r, Err(Error::GaugeViolation { .. })));
    }
}
