use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Uniform periodic grid on the cube `[0, L)^3` with `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    length: f64,
}

impl GridSpec {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and >= 8, got {n}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "box side must be positive, got {length}"
            )));
        }
        Ok(Self { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Total number of grid points, `n^3`.
    pub fn points(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn cell_volume(&self) -> f64 {
        let h = self.spacing();
        h * h * h
    }

    pub fn volume(&self) -> f64 {
        self.length * self.length * self.length
    }

    /// Fundamental wavenumber `2π/L`.
    pub fn kappa(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Arithmetic is only defined between fields on identical grids.
    pub fn compatible(&self, other: &GridSpec) -> bool {
        self.n == other.n && self.length.to_bits() == other.length.to_bits()
    }

    pub fn ensure_compatible(&self, other: &GridSpec) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "(n={}, L={}) vs (n={}, L={})",
                self.n, self.length, other.n, other.length
            )))
        }
    }

    #[inline]
    pub fn index(&self, i0: usize, i1: usize, i2: usize) -> usize {
        (i0 * self.n + i1) * self.n + i2
    }

    /// Inverse of [`GridSpec::index`].
    #[inline]
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let n = self.n;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    /// Physical coordinate of grid node `i` along any axis.
    #[inline]
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Signed integer wavenumber of FFT bin `i`, in `(-n/2, n/2]`.
    #[inline]
    pub fn signed_mode(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i > n / 2 {
            i - n
        } else {
            i
        }
    }

    #[inline]
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }
}
