use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid on the torus `[0, 2π)^dim`, `n` points per axis.
///
/// Cloning is cheap: the FFT plans are shared. Flat indices are row-major
/// with axis 0 slowest.
#[derive(Clone)]
pub struct TorusGrid {
    inner: Arc<Inner>,
}

struct Inner {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim())
            .field("n", &self.n())
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.n() == other.n()
    }
}

impl Eq for TorusGrid {}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Param(format!("grid dimension must be 1, 2 or 3, got {dim}")));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::Param(format!("points per axis must be even and >= 8, got {n}")));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self { inner: Arc::new(Inner { dim, n, forward, inverse }) })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Points per axis.
    pub fn n(&self) -> usize {
        self.inner.n
    }

    /// Total number of grid points, `n^dim`.
    pub fn len(&self) -> usize {
        self.inner.n.pow(self.inner.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / self.n() as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim() as i32)
    }

    /// Measure of the torus, `(2π)^dim`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim() as i32)
    }

    /// Signed integer frequency of FFT index `i`, in `-n/2+1 ..= n/2`.
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n();
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    pub fn nyquist(&self) -> i64 {
        (self.n() / 2) as i64
    }

    /// Largest wavenumber kept by the 2/3-rule filter.
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n() / 3) as i64
    }

    /// Per-axis index of a flat index; unused axes are zero.
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let n = self.n();
        let mut idx = [0usize; 3];
        let mut rest = flat;
        for a in (0..self.dim()).rev() {
            idx[a] = rest % n;
            rest /= n;
        }
        idx
    }

    /// Per-axis signed wavenumbers of a flat spectral index.
    pub fn wavevector(&self, flat: usize) -> [i64; 3] {
        let idx = self.multi_index(flat);
        let mut k = [0i64; 3];
        for a in 0..self.dim() {
            k[a] = self.wavenumber(idx[a]);
        }
        k
    }

    /// Physical coordinates of a flat index.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.multi_index(flat);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim() {
            x[a] = h * idx[a] as f64;
        }
        x
    }

    /// Unnormalised forward DFT over every axis, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.forward);
    }

    /// Inverse DFT over every axis including the `1/len` normalisation.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.inverse);
        let scale = 1.0 / self.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.len(), "buffer does not match grid");
        let n = self.n();
        let dim = self.dim();
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // last axis is contiguous
        for line in data.chunks_exact_mut(n) {
            plan.process_with_scratch(line, &mut scratch);
        }
        if dim == 1 {
            return;
        }
        let mut line = vec![Complex64::default(); n];
        for axis in 0..dim - 1 {
            let stride = n.pow((dim - 1 - axis) as u32);
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (j, v) in line.iter_mut().enumerate() {
                        *v = data[start + j * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (j, v) in line.iter().enumerate() {
                        data[start + j * stride] = *v;
                    }
                }
            }
        }
    }
}
