//! FFT engine for real periodic fields on an `n^3` grid.
//!
//! Forward transforms are unnormalized; inverse transforms divide by `n^3`.
//! Real fields are transformed two at a time by packing them into the real
//! and imaginary parts of a single complex array.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::GridSpec;

pub(crate) type C64 = Complex64;

static DETERMINISTIC: AtomicBool = AtomicBool::new(true);

/// When set (the default), every grid reduction sums fixed-size chunks in
/// index order, so results do not depend on the worker count.
pub fn set_deterministic(on: bool) {
    DETERMINISTIC.store(on, Ordering::Relaxed);
}

pub fn deterministic() -> bool {
    DETERMINISTIC.load(Ordering::Relaxed)
}

const REDUCTION_CHUNK: usize = 4096;

/// Sum of `term(i)` for `i in 0..len`.
pub(crate) fn sum_indexed<F>(len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    if deterministic() {
        let chunks = len.div_ceil(REDUCTION_CHUNK);
        let partials: Vec<f64> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let end = ((c + 1) * REDUCTION_CHUNK).min(len);
                (c * REDUCTION_CHUNK..end).map(&term).sum::<f64>()
            })
            .collect();
        partials.iter().sum()
    } else {
        (0..len).into_par_iter().map(&term).sum()
    }
}

struct Plan {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plan(n: usize) -> Arc<Plan> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plan>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().unwrap_or_else(|e| e.into_inner());
    cache
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plan {
                n,
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

/// Recycled transform work arrays. Fresh multi-megabyte allocations cost a
/// page fault per page, which is comparable to the FFT itself.
static POOL: Mutex<Vec<Vec<C64>>> = Mutex::new(Vec::new());
const POOL_LIMIT: usize = 4;

fn take_buffer(len: usize) -> Vec<C64> {
    let mut pool = POOL.lock().unwrap_or_else(|e| e.into_inner());
    match pool.iter().position(|b| b.capacity() >= len) {
        Some(i) => {
            let mut b = pool.swap_remove(i);
            b.clear();
            b.resize(len, C64::default());
            b
        }
        None => vec![C64::default(); len],
    }
}

fn give_back(buf: Vec<C64>) {
    let mut pool = POOL.lock().unwrap_or_else(|e| e.into_inner());
    if pool.len() < POOL_LIMIT {
        pool.push(buf);
    }
}

impl Plan {
    /// In-place 3D transform: FFT along the contiguous axis, then rotate the
    /// axes `(i0, i1, i2) -> (i2, i0, i1)`; three rounds restore the layout.
    fn transform(&self, data: &mut Vec<C64>, inverse: bool) {
        let n = self.n;
        let fft = if inverse {
            &self.inverse
        } else {
            &self.forward
        };
        let scratch_len = fft.get_inplace_scratch_len();
        let mut buf = take_buffer(data.len());
        for _ in 0..3 {
            data.par_chunks_mut(n * n).for_each_init(
                || vec![C64::default(); scratch_len],
                |scratch, rows| fft.process_with_scratch(rows, scratch),
            );
            rotate(data, &mut buf, n);
            std::mem::swap(data, &mut buf);
        }
        give_back(buf);
    }
}

/// Planes of the destination filled per task; reads of `src` then touch
/// this many adjacent values per row.
const ROTATE_BLOCK: usize = 8;

fn rotate(src: &[C64], dst: &mut [C64], n: usize) {
    let plane = n * n;
    let block = ROTATE_BLOCK.min(n);
    dst.par_chunks_mut(block * plane)
        .enumerate()
        .for_each(|(b, planes)| {
            let a0 = b * block;
            let width = planes.len() / plane;
            for j in 0..plane {
                let row = &src[j * n + a0..j * n + a0 + width];
                for (da, v) in row.iter().enumerate() {
                    planes[da * plane + j] = *v;
                }
            }
        });
}

/// Forward transforms of a batch of real fields.
pub(crate) fn forward_real(grid: &GridSpec, fields: &[&[f64]]) -> Vec<Vec<C64>> {
    let plan = plan(grid.n());
    let npts = grid.points();
    let mut out = Vec::with_capacity(fields.len());
    for pair in fields.chunks(2) {
        let f = pair[0];
        let g = pair.get(1).copied();
        // Shift by the first sample so constant fields transform exactly.
        let f0 = f[0];
        let g0 = g.map_or(0.0, |g| g[0]);
        let mut z = take_buffer(npts);
        match g {
            Some(g) => z
                .par_iter_mut()
                .zip(f.par_iter().zip(g.par_iter()))
                .for_each(|(z, (&a, &b))| *z = C64::new(a - f0, b - g0)),
            None => z
                .par_iter_mut()
                .zip(f.par_iter())
                .for_each(|(z, &a)| *z = C64::new(a - f0, 0.0)),
        }
        plan.transform(&mut z, false);
        let offset = npts as f64;
        match g {
            Some(_) => {
                let n = grid.n();
                let mut fs = vec![C64::default(); npts];
                let mut gs = vec![C64::default(); npts];
                fs.par_chunks_mut(n * n)
                    .zip(gs.par_chunks_mut(n * n))
                    .enumerate()
                    .for_each(|(i0, (fp, gp))| {
                        let m0 = (n - i0) % n;
                        for i1 in 0..n {
                            let m1 = (n - i1) % n;
                            for i2 in 0..n {
                                let zk = z[(i0 * n + i1) * n + i2];
                                let zm = z[(m0 * n + m1) * n + (n - i2) % n].conj();
                                let d = (zk - zm) * 0.5;
                                fp[i1 * n + i2] = (zk + zm) * 0.5;
                                // (zk - zm) / (2i)
                                gp[i1 * n + i2] = C64::new(d.im, -d.re);
                            }
                        }
                    });
                fs[0] += offset * f0;
                gs[0] += offset * g0;
                out.push(fs);
                out.push(gs);
                give_back(z);
            }
            None => {
                z[0] += offset * f0;
                out.push(z);
            }
        }
    }
    out
}

/// Inverse transforms of a batch of Hermitian spectra to real fields.
pub(crate) fn inverse_real(grid: &GridSpec, spectra: &[&[C64]]) -> Vec<Vec<f64>> {
    let plan = plan(grid.n());
    let scale = 1.0 / grid.points() as f64;
    let mut out = Vec::with_capacity(spectra.len());
    for pair in spectra.chunks(2) {
        let a = pair[0];
        let mut z = take_buffer(a.len());
        match pair.get(1) {
            Some(b) => z
                .par_iter_mut()
                .zip(a.par_iter().zip(b.par_iter()))
                .for_each(|(z, (&x, &y))| *z = C64::new(x.re - y.im, x.im + y.re)),
            None => z.copy_from_slice(a),
        }
        plan.transform(&mut z, true);
        out.push(z.par_iter().map(|c| c.re * scale).collect());
        if pair.len() == 2 {
            out.push(z.par_iter().map(|c| c.im * scale).collect());
        }
        give_back(z);
    }
    out
}

/// Per-axis tables used by every spectral multiplier.
#[derive(Debug, Clone)]
pub(crate) struct Wavenumbers {
    /// Derivative wavenumber of each bin; zero at the Nyquist bin.
    pub deriv: Vec<f64>,
    /// Bins kept by the two-thirds truncation.
    pub keep: Vec<bool>,
}

impl Wavenumbers {
    pub fn new(grid: &GridSpec) -> Self {
        let n = grid.n();
        let kappa = grid.kappa();
        let cutoff = (n / 3) as i64;
        let deriv = (0..n)
            .map(|i| {
                if grid.is_nyquist(i) {
                    0.0
                } else {
                    grid.signed_mode(i) as f64 * kappa
                }
            })
            .collect();
        let keep = (0..n)
            .map(|i| grid.signed_mode(i).abs() <= cutoff)
            .collect();
        Self { deriv, keep }
    }

    #[inline]
    pub fn vector(&self, grid: &GridSpec, idx: usize) -> [f64; 3] {
        let [i0, i1, i2] = grid.unravel(idx);
        [self.deriv[i0], self.deriv[i1], self.deriv[i2]]
    }
}
