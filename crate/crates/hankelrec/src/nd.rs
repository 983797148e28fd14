//! Block (multilevel) Hankel lifts of multi-dimensional signals.
//!
//! A signal on the box `N_1 x ... x N_d` lifts to a `d`-level block Hankel
//! matrix: choosing pencil sizes `n_k` (and `m_k = N_k - n_k + 1`), the
//! entry at row `i` and column `j` is `x(i_1 + j_1, ..., i_d + j_d)`, where
//! `i = i_1 + i_2 n_1 + i_3 n_1 n_2 + ...` and `j = j_1 + j_2 m_1 + ...`
//! (first index fastest, matching the recursive blocks-of-blocks layout).
//! Sums of `d`-dimensional damped exponentials lift to low rank exactly as in
//! one dimension, with separable Vandermonde factors.
//!
//! Every entry of the lift is a sum `i_k + j_k` per axis, so all four fast
//! kernels are `d`-dimensional convolutions evaluated with per-axis FFTs of
//! length `next_pow2(N_k)`.  That length is alias-safe: the wrapped tail of a
//! circular convolution at length `L_k >= N_k` lands strictly below the index
//! window each kernel reads.  `H* H` is again diagonal, now with the
//! separable product of the per-axis anti-diagonal ramps, which gives the
//! pseudo-inverse for free.
//!
//! Signal entries (and the convolution volumes) are stored row-major, last
//! axis fastest.  Only the matrix row/column linearizations use the
//! first-fastest convention above; the two conventions meet in the
//! scatter/gather index maps below and nowhere else.

use crate::conv::{fft_axis, ConvPlan};
use crate::error::{Error, Result};
use crate::hankel::{check_factor_dims, HankelOperator, Prepared};
use crate::signal::{wrap_distance, AmplitudeLaw, SampleSet};
use crate::solver::{solve, Algorithm, SolveResult, SolverConfig};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// Upper bound on the padded convolution volume (entries).  One buffer at
/// this size is 1 GiB; shapes that need more are refused at construction.
pub const MAX_PADDED_ENTRIES: usize = 1 << 26;

/// Geometry and FFT plans of a `d`-level block Hankel lift.
#[derive(Clone)]
pub struct NdHankelShape {
    dims: Vec<usize>,
    pencils: Vec<usize>,
    comps: Vec<usize>,
    rows: usize,
    cols: usize,
    total: usize,
    weights: Vec<f64>,
    plans: Vec<ConvPlan>,
    padded: Vec<usize>,
    /// Row-major strides of the padded volume.
    pstrides: Vec<usize>,
    padded_total: usize,
}

fn checked_product(dims: &[usize]) -> Result<usize> {
    let mut acc: usize = 1;
    for &d in dims {
        acc = acc
            .checked_mul(d)
            .ok_or_else(|| Error::Budget("dimension product overflows usize".into()))?;
    }
    Ok(acc)
}

/// Decodes a first-fastest linear index over `dims` into coordinates.
fn decode_ff(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for (k, &d) in dims.iter().enumerate() {
        out[k] = idx % d;
        idx /= d;
    }
}

impl NdHankelShape {
    /// Shape for a signal box `dims`; `pencils = None` picks the most square
    /// split `ceil((N_k + 1) / 2)` per axis.
    pub fn new(dims: &[usize], pencils: Option<&[usize]>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::arg("at least one dimension is required"));
        }
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::arg("all dimensions must be at least 1"));
        }
        let pencils: Vec<usize> = match pencils {
            Some(p) => {
                if p.len() != dims.len() {
                    return Err(Error::arg(format!(
                        "{} pencil sizes for {} dimensions",
                        p.len(),
                        dims.len()
                    )));
                }
                p.to_vec()
            }
            None => dims.iter().map(|&d| (d + 2) / 2).collect(),
        };
        for (k, (&n, &d)) in pencils.iter().zip(dims).enumerate() {
            if n < 1 || n > d {
                return Err(Error::arg(format!(
                    "pencil size {n} for axis {k} must lie in 1..={d}"
                )));
            }
        }
        let comps: Vec<usize> = dims.iter().zip(&pencils).map(|(&d, &n)| d - n + 1).collect();
        let total = checked_product(dims)?;
        let rows = checked_product(&pencils)?;
        let cols = checked_product(&comps)?;
        let padded: Vec<usize> = dims.iter().map(|&d| crate::conv::next_pow2(d)).collect();
        let padded_total = checked_product(&padded)?;
        if padded_total > MAX_PADDED_ENTRIES {
            return Err(Error::Budget(format!(
                "padded convolution volume has {padded_total} entries, limit is {MAX_PADDED_ENTRIES}"
            )));
        }
        // Separable anti-diagonal ramps: weight of entry (l_1, .., l_d) is
        // the product over axes of min(l+1, n_k, m_k, N_k - l).
        let ramps: Vec<Vec<f64>> = dims
            .iter()
            .zip(&pencils)
            .map(|(&d, &n)| crate::hankel::antidiagonal_weights(d, n))
            .collect();
        let mut weights = vec![0.0; total];
        let mut coords = vec![0usize; dims.len()];
        for (flat, w) in weights.iter_mut().enumerate() {
            decode_rm(flat, dims, &mut coords);
            *w = coords.iter().zip(&ramps).map(|(&c, r)| r[c]).product();
        }
        let plans = padded.iter().map(|&l| ConvPlan::new(l)).collect();
        let mut pstrides = vec![1usize; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            pstrides[k] = pstrides[k + 1] * padded[k + 1];
        }
        Ok(NdHankelShape {
            dims: dims.to_vec(),
            pencils,
            comps,
            rows,
            cols,
            total,
            weights,
            plans,
            padded,
            pstrides,
            padded_total,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn pencils(&self) -> &[usize] {
        &self.pencils
    }

    /// Per-axis column-box sizes `m_k = N_k - n_k + 1`.
    pub fn comps(&self) -> &[usize] {
        &self.comps
    }

    fn fft_all(&self, vol: &mut [Complex64], inverse: bool) {
        for axis in 0..self.dims.len() {
            fft_axis(vol, &self.padded, axis, &self.plans[axis], inverse);
        }
    }

    /// Flat padded-volume position of per-axis coordinates.
    fn ppos(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .zip(&self.pstrides)
            .map(|(&c, &s)| c * s)
            .sum()
    }

    /// Scatters the row-major signal `z` into a fresh padded volume.
    fn embed_signal(&self, z: &[Complex64]) -> Vec<Complex64> {
        let mut vol = vec![Complex64::ZERO; self.padded_total];
        let mut coords = vec![0usize; self.dims.len()];
        for (l, &value) in z.iter().enumerate() {
            decode_rm(l, &self.dims, &mut coords);
            vol[self.ppos(&coords)] = value;
        }
        vol
    }
}

/// Decodes a row-major linear index over `dims` into coordinates.
fn decode_rm(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = idx % dims[k];
        idx /= dims[k];
    }
}

impl HankelOperator for NdHankelShape {
    fn signal_len(&self) -> usize {
        self.total
    }

    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn aspect_ratio(&self) -> f64 {
        let n = self.total as f64;
        (n / self.rows as f64).max(n / self.cols as f64)
    }

    fn prepare(&self, z: &[Complex64]) -> Result<Prepared> {
        if z.len() != self.total {
            return Err(Error::arg(format!(
                "signal has length {}, shape expects {}",
                z.len(),
                self.total
            )));
        }
        let mut vol = self.embed_signal(z);
        self.fft_all(&mut vol, false);
        Ok(Prepared { spectrum: vol })
    }

    fn matvec_prepared(&self, p: &Prepared, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.cols);
        let d = self.dims.len();
        let mut vol = vec![Complex64::ZERO; self.padded_total];
        let mut coords = vec![0usize; d];
        let mut pos = vec![0usize; d];
        for (j, &value) in v.iter().enumerate() {
            decode_ff(j, &self.comps, &mut coords);
            for k in 0..d {
                pos[k] = self.comps[k] - 1 - coords[k];
            }
            vol[self.ppos(&pos)] = value;
        }
        self.fft_all(&mut vol, false);
        for (x, s) in vol.iter_mut().zip(&p.spectrum) {
            *x *= s;
        }
        self.fft_all(&mut vol, true);
        let mut out = vec![Complex64::ZERO; self.rows];
        for (i, slot) in out.iter_mut().enumerate() {
            decode_ff(i, &self.pencils, &mut coords);
            for k in 0..d {
                pos[k] = coords[k] + self.comps[k] - 1;
            }
            *slot = vol[self.ppos(&pos)];
        }
        out
    }

    fn adjoint_prepared(&self, p: &Prepared, u: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(u.len(), self.rows);
        let d = self.dims.len();
        let mut vol = vec![Complex64::ZERO; self.padded_total];
        let mut coords = vec![0usize; d];
        let mut pos = vec![0usize; d];
        for (i, &value) in u.iter().enumerate() {
            decode_ff(i, &self.pencils, &mut coords);
            for k in 0..d {
                pos[k] = self.pencils[k] - 1 - coords[k];
            }
            vol[self.ppos(&pos)] = value.conj();
        }
        self.fft_all(&mut vol, false);
        for (x, s) in vol.iter_mut().zip(&p.spectrum) {
            *x *= s;
        }
        self.fft_all(&mut vol, true);
        let mut out = vec![Complex64::ZERO; self.cols];
        for (j, slot) in out.iter_mut().enumerate() {
            decode_ff(j, &self.comps, &mut coords);
            for k in 0..d {
                pos[k] = coords[k] + self.pencils[k] - 1;
            }
            *slot = vol[self.ppos(&pos)].conj();
        }
        out
    }

    fn adjoint_rank_one(&self, u: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        let d = self.dims.len();
        let mut coords = vec![0usize; d];
        let mut a = vec![Complex64::ZERO; self.padded_total];
        for (i, &value) in u.iter().enumerate() {
            decode_ff(i, &self.pencils, &mut coords);
            a[self.ppos(&coords)] = value;
        }
        let mut b = vec![Complex64::ZERO; self.padded_total];
        for (j, &value) in v.iter().enumerate() {
            decode_ff(j, &self.comps, &mut coords);
            b[self.ppos(&coords)] = value.conj();
        }
        self.fft_all(&mut a, false);
        self.fft_all(&mut b, false);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= y;
        }
        self.fft_all(&mut a, true);
        let mut out = vec![Complex64::ZERO; self.total];
        for (l, slot) in out.iter_mut().enumerate() {
            decode_rm(l, &self.dims, &mut coords);
            *slot = a[self.ppos(&coords)];
        }
        out
    }

    fn apply_pseudo_inverse(
        &self,
        u: &DMatrix<Complex64>,
        sigma: &[f64],
        v: &DMatrix<Complex64>,
    ) -> Result<Vec<Complex64>> {
        check_factor_dims(self, u, sigma, v)?;
        let d = self.dims.len();
        let mut coords = vec![0usize; d];
        let mut acc = vec![Complex64::ZERO; self.padded_total];
        let mut a = vec![Complex64::ZERO; self.padded_total];
        let mut b = vec![Complex64::ZERO; self.padded_total];
        for (k, &s) in sigma.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            a.fill(Complex64::ZERO);
            for i in 0..self.rows {
                decode_ff(i, &self.pencils, &mut coords);
                a[self.ppos(&coords)] = u[(i, k)];
            }
            b.fill(Complex64::ZERO);
            for j in 0..self.cols {
                decode_ff(j, &self.comps, &mut coords);
                b[self.ppos(&coords)] = v[(j, k)].conj();
            }
            self.fft_all(&mut a, false);
            self.fft_all(&mut b, false);
            for ((t, x), y) in acc.iter_mut().zip(&a).zip(&b) {
                *t += s * x * y;
            }
        }
        self.fft_all(&mut acc, true);
        let mut out = vec![Complex64::ZERO; self.total];
        for (l, slot) in out.iter_mut().enumerate() {
            decode_rm(l, &self.dims, &mut coords);
            *slot = acc[self.ppos(&coords)] / self.weights[l];
        }
        Ok(out)
    }

    fn try_dense(&self, z: &[Complex64]) -> Option<DMatrix<Complex64>> {
        if z.len() != self.total || self.rows * self.cols > crate::hankel::DENSE_CELL_LIMIT {
            return None;
        }
        let d = self.dims.len();
        let mut ic = vec![0usize; d];
        let mut jc = vec![0usize; d];
        let mut sc = vec![0usize; d];
        Some(DMatrix::from_fn(self.rows, self.cols, |i, j| {
            decode_ff(i, &self.pencils, &mut ic);
            decode_ff(j, &self.comps, &mut jc);
            for k in 0..d {
                sc[k] = ic[k] + jc[k];
            }
            let mut flat = 0;
            for k in 0..d {
                flat = flat * self.dims[k] + sc[k];
            }
            z[flat]
        }))
    }
}

/// One `d`-dimensional mode: per-axis frequencies and dampings, one complex
/// amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct NdMode {
    pub freqs: Vec<f64>,
    pub dampings: Vec<f64>,
    pub amplitude: Complex64,
}

/// A multi-dimensional spectrally sparse signal with its generating modes.
#[derive(Debug, Clone)]
pub struct NdSignal {
    pub dims: Vec<usize>,
    pub modes: Vec<NdMode>,
    /// Row-major entries, last axis fastest.
    pub entries: Vec<Complex64>,
}

impl NdSignal {
    /// Evaluates `x(l) = sum_k d_k prod_a exp((2 pi i f_{k,a} - tau_{k,a}) l_a)`.
    pub fn from_modes(dims: &[usize], modes: Vec<NdMode>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::arg("dimensions must be non-empty and positive"));
        }
        if modes.is_empty() {
            return Err(Error::arg("at least one mode is required"));
        }
        let total = checked_product(dims)?;
        for (k, m) in modes.iter().enumerate() {
            if m.freqs.len() != dims.len() || m.dampings.len() != dims.len() {
                return Err(Error::arg(format!(
                    "mode {k} must carry one frequency and damping per axis"
                )));
            }
            let finite = m.freqs.iter().chain(&m.dampings).all(|x| x.is_finite())
                && m.amplitude.is_finite();
            if !finite || m.dampings.iter().any(|&t| t < 0.0) {
                return Err(Error::arg(format!("mode {k} has invalid parameters")));
            }
        }
        let mut entries = vec![Complex64::ZERO; total];
        let mut coords = vec![0usize; dims.len()];
        for m in &modes {
            // Per-axis pole power tables, evaluated directly so long axes do
            // not accumulate multiplication drift.
            let pows: Vec<Vec<Complex64>> = dims
                .iter()
                .enumerate()
                .map(|(a, &d)| {
                    (0..d)
                        .map(|l| {
                            let lf = l as f64;
                            Complex64::from_polar(
                                (-m.dampings[a] * lf).exp(),
                                TAU * m.freqs[a] * lf,
                            )
                        })
                        .collect()
                })
                .collect();
            for (l, slot) in entries.iter_mut().enumerate() {
                decode_rm(l, dims, &mut coords);
                let mut term = m.amplitude;
                for (a, &c) in coords.iter().enumerate() {
                    term *= pows[a][c];
                }
                *slot += term;
            }
        }
        Ok(NdSignal {
            dims: dims.to_vec(),
            modes,
            entries,
        })
    }

    pub fn rank(&self) -> usize {
        self.modes.len()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Configuration for [`generate_nd_signal`].
#[derive(Debug, Clone)]
pub struct NdSignalGenConfig {
    pub dims: Vec<usize>,
    pub rank: usize,
    /// Per-axis dampings drawn uniformly from this interval.
    pub damping_range: (f64, f64),
    /// Two modes must differ by at least this wrap-around distance in some
    /// axis; `0.0` disables the check.
    pub min_separation: f64,
    pub amplitudes: AmplitudeLaw,
    pub seed: u64,
}

impl NdSignalGenConfig {
    /// Mildly damped modes (per-axis decay drawn from `[0.005, 0.02]`, an
    /// NMR-like envelope), no separation constraint, spread amplitudes.
    pub fn new(dims: Vec<usize>, rank: usize, seed: u64) -> Self {
        NdSignalGenConfig {
            dims,
            rank,
            damping_range: (0.005, 0.02),
            min_separation: 0.0,
            amplitudes: AmplitudeLaw::SpreadMagnitude,
            seed,
        }
    }
}

/// Draws a random multi-dimensional signal.
pub fn generate_nd_signal(cfg: &NdSignalGenConfig) -> Result<NdSignal> {
    if cfg.rank == 0 {
        return Err(Error::arg("rank must be at least 1"));
    }
    let (lo, hi) = cfg.damping_range;
    if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi < lo {
        return Err(Error::arg("damping_range must satisfy 0 <= lo <= hi"));
    }
    let d = cfg.dims.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut modes: Vec<NdMode> = Vec::with_capacity(cfg.rank);
    for _ in 0..cfg.rank {
        let mut accepted = None;
        for _ in 0..10_000 {
            let freqs: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
            let ok = modes.iter().all(|m| {
                m.freqs
                    .iter()
                    .zip(&freqs)
                    .any(|(&a, &b)| a != b && wrap_distance(a, b) >= cfg.min_separation)
            });
            if ok {
                accepted = Some(freqs);
                break;
            }
        }
        let freqs = accepted.ok_or(Error::Generation {
            min_separation: cfg.min_separation,
            attempts: 10_000,
        })?;
        let dampings: Vec<f64> = (0..d)
            .map(|_| if hi > lo { rng.gen_range(lo..hi) } else { lo })
            .collect();
        let mag = match cfg.amplitudes {
            AmplitudeLaw::SpreadMagnitude => 1.0 + 10f64.powf(0.5 * rng.gen_range(0.0..1.0)),
            AmplitudeLaw::UnitMagnitude => 1.0,
        };
        let phase = rng.gen_range(0.0..TAU);
        modes.push(NdMode {
            freqs,
            dampings,
            amplitude: Complex64::from_polar(mag, phase),
        });
    }
    NdSignal::from_modes(&cfg.dims, modes)
}

/// Fast iteration on a block Hankel lift; `observed = P_Omega(x)` over the
/// flattened (row-major) signal box.
pub fn nd_fiht_solve(
    observed: &[Complex64],
    omega: &SampleSet,
    shape: &NdHankelShape,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    solve(Algorithm::Fiht, observed, omega, shape, cfg, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hankel::{make_shape, project_samples};
    use crate::signal::sample_indices;
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_entries(total: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..total)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    /// Independent 2-D oracle built from explicit nested loops: block row
    /// `i2`, block column `j2`, inner entry `(i1, j1)` reads `x(i1+j1, i2+j2)`
    /// with `x` stored row-major as `x[l1 * N2 + l2]`.
    fn oracle_dense_2d(
        z: &[Complex64],
        dims: (usize, usize),
        pencils: (usize, usize),
    ) -> DMatrix<Complex64> {
        let (n1, n2) = pencils;
        let (big1, big2) = dims;
        let (m1, m2) = (big1 - n1 + 1, big2 - n2 + 1);
        let mut out = DMatrix::zeros(n1 * n2, m1 * m2);
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                for j2 in 0..m2 {
                    for j1 in 0..m1 {
                        let row = i1 + i2 * n1;
                        let col = j1 + j2 * m1;
                        out[(row, col)] = z[(i1 + j1) * big2 + (i2 + j2)];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn geometry_of_small_shapes() {
        let s = NdHankelShape::new(&[3, 3], None).unwrap();
        assert_eq!(s.pencils(), &[2, 2]);
        assert_eq!(s.comps(), &[2, 2]);
        assert_eq!((s.rows(), s.cols()), (4, 4));
        assert_eq!(s.signal_len(), 9);
        let s = NdHankelShape::new(&[31, 31, 511], None).unwrap();
        assert_eq!(s.pencils(), &[16, 16, 256]);
        assert_eq!(s.rows(), 16 * 16 * 256);
        assert_eq!(s.cols(), 16 * 16 * 256);
        assert_eq!(s.signal_len(), 31 * 31 * 511);
    }

    #[test]
    fn shape_validation_and_budget() {
        assert!(NdHankelShape::new(&[], None).is_err());
        assert!(NdHankelShape::new(&[4, 0], None).is_err());
        assert!(NdHankelShape::new(&[4, 4], Some(&[2])).is_err());
        assert!(NdHankelShape::new(&[4, 4], Some(&[2, 5])).is_err());
        match NdHankelShape::new(&[1 << 14, 1 << 14], None) {
            Err(Error::Budget(_)) => {}
            other => panic!("expected Budget error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn weights_are_separable_ramp_products() {
        let s = NdHankelShape::new(&[3, 4], Some(&[2, 2])).unwrap();
        // Axis ramps: [1, 2, 1] and [1, 2, 2, 1].
        let expect = [
            1.0, 2.0, 2.0, 1.0, //
            2.0, 4.0, 4.0, 2.0, //
            1.0, 2.0, 2.0, 1.0,
        ];
        assert_eq!(s.weights(), &expect[..]);
        let sum: f64 = s.weights().iter().sum();
        assert_eq!(sum as usize, s.rows() * s.cols());
    }

    #[test]
    fn dense_matches_independent_2d_oracle() {
        for (dims, pencils, seed) in [
            ((4usize, 5usize), (2usize, 3usize), 1u64),
            ((6, 5), (3, 2), 2),
            ((5, 5), (3, 3), 3),
        ] {
            let z = random_entries(dims.0 * dims.1, seed);
            let s = NdHankelShape::new(&[dims.0, dims.1], Some(&[pencils.0, pencils.1])).unwrap();
            let fast = s.try_dense(&z).unwrap();
            let oracle = oracle_dense_2d(&z, dims, pencils);
            assert_eq!(fast.shape(), oracle.shape());
            assert!((fast - oracle).norm() < 1e-14);
        }
    }

    #[test]
    fn matvec_and_adjoint_match_dense() {
        let dims = [5usize, 6];
        let s = NdHankelShape::new(&dims, Some(&[3, 3])).unwrap();
        let z = random_entries(30, 4);
        let dense = s.try_dense(&z).unwrap();
        let v = random_entries(s.cols(), 5);
        let fast = s.matvec(&z, &v).unwrap();
        for i in 0..s.rows() {
            let mut want = Complex64::ZERO;
            for j in 0..s.cols() {
                want += dense[(i, j)] * v[j];
            }
            assert!((fast[i] - want).norm() < 1e-11, "row {i}");
        }
        let u = random_entries(s.rows(), 6);
        let fast = s.matvec_adjoint(&z, &u).unwrap();
        for j in 0..s.cols() {
            let mut want = Complex64::ZERO;
            for i in 0..s.rows() {
                want += dense[(i, j)].conj() * u[i];
            }
            assert!((fast[j] - want).norm() < 1e-11, "col {j}");
        }
    }

    #[test]
    fn matvec_matches_dense_in_three_dimensions() {
        let dims = [3usize, 4, 5];
        let s = NdHankelShape::new(&dims, None).unwrap();
        let z = random_entries(60, 7);
        let dense = s.try_dense(&z).unwrap();
        let v = random_entries(s.cols(), 8);
        let u = random_entries(s.rows(), 9);
        let fast_v = s.matvec(&z, &v).unwrap();
        let fast_u = s.matvec_adjoint(&z, &u).unwrap();
        for i in 0..s.rows() {
            let mut want = Complex64::ZERO;
            for j in 0..s.cols() {
                want += dense[(i, j)] * v[j];
            }
            assert!((fast_v[i] - want).norm() < 1e-11);
        }
        for j in 0..s.cols() {
            let mut want = Complex64::ZERO;
            for i in 0..s.rows() {
                want += dense[(i, j)].conj() * u[i];
            }
            assert!((fast_u[j] - want).norm() < 1e-11);
        }
    }

    #[test]
    fn one_dimensional_reduction_matches_plain_hankel() {
        let n = 40;
        let nd = NdHankelShape::new(&[n], None).unwrap();
        let flat = make_shape(n, None).unwrap();
        assert_eq!((nd.rows(), nd.cols()), (flat.n1(), flat.n2()));
        assert_eq!(nd.weights(), flat.weights());
        let z = random_entries(n, 10);
        let v = random_entries(nd.cols(), 11);
        let u = random_entries(nd.rows(), 12);
        let a = nd.matvec(&z, &v).unwrap();
        let b = flat.matvec(&z, &v).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
        let a = nd.matvec_adjoint(&z, &u).unwrap();
        let b = flat.matvec_adjoint(&z, &u).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
        let a = HankelOperator::adjoint_rank_one(&nd, &u, &v);
        let b = HankelOperator::adjoint_rank_one(&flat, &u, &v);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn rank_one_adjoint_matches_nested_loops() {
        let dims = [4usize, 5];
        let s = NdHankelShape::new(&dims, Some(&[2, 3])).unwrap();
        let u = random_entries(s.rows(), 13);
        let v = random_entries(s.cols(), 14);
        let fast = HankelOperator::adjoint_rank_one(&s, &u, &v);
        // Oracle: explicit sum over (i1, i2, j1, j2) into x(i1+j1, i2+j2).
        let (n1, n2) = (2usize, 3usize);
        let (m1, m2) = (3usize, 3usize);
        let mut want = vec![Complex64::ZERO; 20];
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                for j2 in 0..m2 {
                    for j1 in 0..m1 {
                        let row = i1 + i2 * n1;
                        let col = j1 + j2 * m1;
                        want[(i1 + j1) * dims[1] + (i2 + j2)] += u[row] * v[col].conj();
                    }
                }
            }
        }
        for (a, b) in fast.iter().zip(&want) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn rank_one_adjoint_of_ones_gives_weights() {
        let s = NdHankelShape::new(&[4, 5], None).unwrap();
        let u = vec![c(1.0, 0.0); s.rows()];
        let v = vec![c(1.0, 0.0); s.cols()];
        let out = HankelOperator::adjoint_rank_one(&s, &u, &v);
        for (a, w) in out.iter().zip(s.weights()) {
            assert!((a - c(*w, 0.0)).norm() < 1e-11);
        }
    }

    #[test]
    fn pseudo_inverse_recovers_signal_from_exact_lift() {
        let dims = [6usize, 7];
        let s = NdHankelShape::new(&dims, None).unwrap();
        let z = random_entries(42, 15);
        let dense = s.try_dense(&z).unwrap();
        let svd = dense.clone().svd(true, true);
        let u = svd.u.unwrap();
        let v = svd.v_t.unwrap().adjoint();
        let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
        let back = s.apply_pseudo_inverse(&u, &sigma, &v).unwrap();
        for (a, b) in back.iter().zip(&z) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn sparse_nd_signal_lifts_to_low_rank() {
        let cfg = NdSignalGenConfig::new(vec![8, 9], 3, 20);
        let sig = generate_nd_signal(&cfg).unwrap();
        let s = NdHankelShape::new(&sig.dims, None).unwrap();
        let dense = s.try_dense(&sig.entries).unwrap();
        let sv = dense.svd(false, false).singular_values;
        assert!(sv[3] / sv[0] < 1e-9, "sigma_4/sigma_1 = {}", sv[3] / sv[0]);
        assert!(sv[2] / sv[0] > 1e-9);
    }

    #[test]
    fn nd_signal_evaluation_matches_direct_sum() {
        let modes = vec![
            NdMode {
                freqs: vec![0.21, 0.73],
                dampings: vec![0.01, 0.0],
                amplitude: c(1.5, -0.5),
            },
            NdMode {
                freqs: vec![0.62, 0.11],
                dampings: vec![0.0, 0.02],
                amplitude: c(-0.3, 1.1),
            },
        ];
        let sig = NdSignal::from_modes(&[5, 6], modes.clone()).unwrap();
        for l1 in 0..5 {
            for l2 in 0..6 {
                let mut want = Complex64::ZERO;
                for m in &modes {
                    let e1 = Complex64::new(-m.dampings[0] * l1 as f64, TAU * m.freqs[0] * l1 as f64)
                        .exp();
                    let e2 = Complex64::new(-m.dampings[1] * l2 as f64, TAU * m.freqs[1] * l2 as f64)
                        .exp();
                    want += m.amplitude * e1 * e2;
                }
                let got = sig.entries[l1 * 6 + l2];
                assert!((got - want).norm() < 1e-12, "entry ({l1}, {l2})");
            }
        }
    }

    #[test]
    fn nd_signal_validation() {
        let good = NdMode {
            freqs: vec![0.1, 0.2],
            dampings: vec![0.0, 0.0],
            amplitude: c(1.0, 0.0),
        };
        assert!(NdSignal::from_modes(&[4, 4], vec![]).is_err());
        assert!(NdSignal::from_modes(&[4, 0], vec![good.clone()]).is_err());
        let short = NdMode {
            freqs: vec![0.1],
            ..good.clone()
        };
        assert!(NdSignal::from_modes(&[4, 4], vec![short]).is_err());
        let negative = NdMode {
            dampings: vec![0.0, -0.1],
            ..good
        };
        assert!(NdSignal::from_modes(&[4, 4], vec![negative]).is_err());
    }

    #[test]
    fn full_sampling_recovers_nd_signal_quickly() {
        let cfg = NdSignalGenConfig::new(vec![6, 6], 2, 30);
        let sig = generate_nd_signal(&cfg).unwrap();
        let shape = NdHankelShape::new(&sig.dims, None).unwrap();
        let omega = sample_indices(36, 36, false, 31).unwrap();
        let observed = project_samples(&sig.entries, &omega).unwrap();
        let mut scfg = SolverConfig::new(2);
        scfg.tol_residual = 1e-9;
        scfg.tol_step = 0.0;
        let res = nd_fiht_solve(&observed, &omega, &shape, &scfg).unwrap();
        assert!(res.converged);
        assert!(res.iterations <= 3);
        let err: f64 = res
            .x_rec
            .iter()
            .zip(&sig.entries)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let norm: f64 = sig.entries.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
        assert!(err / norm < 1e-8);
    }

    #[test]
    fn partial_sampling_recovers_2d_signal() {
        let cfg = NdSignalGenConfig::new(vec![10, 12], 2, 40);
        let sig = generate_nd_signal(&cfg).unwrap();
        let shape = NdHankelShape::new(&sig.dims, None).unwrap();
        let total = 120;
        let omega = sample_indices(total, 72, false, 41).unwrap();
        let observed = project_samples(&sig.entries, &omega).unwrap();
        let mut scfg = SolverConfig::new(2);
        scfg.tol_residual = 0.0;
        scfg.tol_step = 1e-8;
        let res = nd_fiht_solve(&observed, &omega, &shape, &scfg).unwrap();
        assert!(res.converged, "stopped with {:?}", res.stop);
        let err: f64 = res
            .x_rec
            .iter()
            .zip(&sig.entries)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let norm: f64 = sig.entries.iter().map(|e| e.norm_sqr()).sum::<f64>().sqrt();
        assert!(err / norm < 1e-5, "relative error {}", err / norm);
    }

    proptest! {
        #[test]
        fn weight_sum_counts_cells(
            d1 in 1usize..7, d2 in 1usize..7, d3 in 1usize..5,
            p1 in 0usize..7, p2 in 0usize..7, p3 in 0usize..5,
        ) {
            let dims = [d1, d2, d3];
            let pencils = [1 + p1 % d1, 1 + p2 % d2, 1 + p3 % d3];
            let s = NdHankelShape::new(&dims, Some(&pencils)).unwrap();
            let sum: f64 = s.weights().iter().sum();
            prop_assert_eq!(sum as usize, s.rows() * s.cols());
        }

        #[test]
        fn adjoint_pairing_holds_nd(seed in 0u64..100) {
            let s = NdHankelShape::new(&[4, 5], Some(&[2, 3])).unwrap();
            let z = random_entries(20, seed);
            let v = random_entries(s.cols(), seed + 1);
            let u = random_entries(s.rows(), seed + 2);
            let hv = s.matvec(&z, &v).unwrap();
            let hu = s.matvec_adjoint(&z, &u).unwrap();
            let lhs: Complex64 = hv.iter().zip(&u).map(|(a, b)| a * b.conj()).sum();
            let rhs: Complex64 = v.iter().zip(&hu).map(|(a, b)| a * b.conj()).sum();
            prop_assert!((lhs - rhs).norm() < 1e-10 * (1.0 + lhs.norm()));
        }
    }
}
