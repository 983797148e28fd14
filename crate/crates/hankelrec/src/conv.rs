//! FFT plans for the circular convolutions behind the fast Hankel kernels.
//!
//! Every product with a Hankel matrix, its adjoint, or its pseudo-inverse
//! reduces to a linear convolution of two sequences of combined length at most
//! `2n - 1`.  A circular convolution of length `L >= n` computed with FFTs
//! recovers the linear one exactly on the index windows those kernels read,
//! because the wrapped-around terms land outside every window that is used.
//! Plans are created once per problem shape and reused across iterations.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Smallest power of two that is `>= n`.  Transform lengths are restricted to
/// powers of two so the per-iteration cost stays strictly `O(L log L)` with a
/// small constant, independent of the factorization of `n`.
pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

/// A forward/inverse FFT pair at a fixed power-of-two length.
#[derive(Clone)]
pub struct ConvPlan {
    len: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl ConvPlan {
    /// Plans transforms of length `next_pow2(min_len)`.
    pub fn new(min_len: usize) -> Self {
        let len = next_pow2(min_len);
        let mut planner = FftPlanner::new();
        ConvPlan {
            len,
            fwd: planner.plan_fft_forward(len),
            inv: planner.plan_fft_inverse(len),
        }
    }

    /// Transform length.
    pub fn len(&self) -> usize {
        self.len
    }

    /// In-place unnormalized forward FFT.  `buf.len()` must equal `len()`.
    pub fn fft(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.fwd.process(buf);
    }

    /// In-place inverse FFT including the `1/len` normalization.
    pub fn ifft(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inv.process(buf);
        let scale = 1.0 / self.len as f64;
        for x in buf.iter_mut() {
            *x *= scale;
        }
    }

    /// Zero-pads `src` to the transform length and returns its spectrum.
    pub fn spectrum(&self, src: &[Complex64]) -> Vec<Complex64> {
        debug_assert!(src.len() <= self.len);
        let mut buf = vec![Complex64::ZERO; self.len];
        buf[..src.len()].copy_from_slice(src);
        self.fft(&mut buf);
        buf
    }
}

/// In-place FFT along one axis of a row-major volume with dimensions `dims`.
/// `plan.len()` must equal `dims[axis]`.  The inverse direction includes the
/// `1/dims[axis]` normalization, so applying this over every axis in either
/// direction composes into a correctly scaled multi-dimensional transform.
pub fn fft_axis(vol: &mut [Complex64], dims: &[usize], axis: usize, plan: &ConvPlan, inverse: bool) {
    let len = dims[axis];
    debug_assert_eq!(plan.len(), len);
    debug_assert_eq!(vol.len(), dims.iter().product::<usize>());
    let stride: usize = dims[axis + 1..].iter().product();
    let block = len * stride;
    let mut line = vec![Complex64::ZERO; len];
    for base in (0..vol.len()).step_by(block) {
        for off in 0..stride {
            let start = base + off;
            for (k, slot) in line.iter_mut().enumerate() {
                *slot = vol[start + k * stride];
            }
            if inverse {
                plan.ifft(&mut line);
            } else {
                plan.fft(&mut line);
            }
            for (k, value) in line.iter().enumerate() {
                vol[start + k * stride] = *value;
            }
        }
    }
}
