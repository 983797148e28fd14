//! Spectrally sparse test signals and random sampling patterns.
//!
//! A rank-`r` signal is a sum of `r` damped complex sinusoids
//! `x_t = sum_k d_k y_k^t` with poles `y_k = exp(2 pi i f_k - tau_k)`.  Its
//! Hankel lift factors as `E_L diag(d) E_R^T` through the Vandermonde matrices
//! of the poles, so the lift has rank exactly `r` whenever the poles are
//! distinct and `r <= min(n1, n2)`.  The module also provides the uniform
//! random sample sets (with or without replacement) that the completion
//! guarantees are stated for, and the incoherence proxy
//! `mu_0 = max(n1 / sigma_min(E_L* E_L), n2 / sigma_min(E_R* E_R))`
//! that controls how many samples are needed.

use crate::error::{Error, Result};
use crate::hankel::HankelShape;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// One complex sinusoid: frequency in `[0, 1)`, damping factor `tau >= 0`
/// (per-sample decay `exp(-tau)`), complex amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub freq: f64,
    pub damping: f64,
    pub amplitude: Complex64,
}

impl Mode {
    /// Pole `exp(2 pi i freq - damping)` evaluated at power `t`.
    pub fn pole_power(&self, t: usize) -> Complex64 {
        let t = t as f64;
        Complex64::from_polar((-self.damping * t).exp(), TAU * self.freq * t)
    }
}

/// A spectrally sparse signal together with the modes that generated it.
#[derive(Debug, Clone)]
pub struct SpectralSignal {
    pub n: usize,
    pub modes: Vec<Mode>,
    /// Time-domain samples `x_0 .. x_{n-1}`.
    pub samples: Vec<Complex64>,
}

impl SpectralSignal {
    /// Evaluates `x_t = sum_k d_k y_k^t` for `t = 0 .. n-1`.
    pub fn from_modes(n: usize, modes: Vec<Mode>) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("signal length must be at least 1"));
        }
        if modes.is_empty() {
            return Err(Error::arg("at least one mode is required"));
        }
        for (k, m) in modes.iter().enumerate() {
            if !m.freq.is_finite() || !m.damping.is_finite() || !m.amplitude.is_finite() {
                return Err(Error::arg(format!("mode {k} has non-finite parameters")));
            }
            if m.damping < 0.0 {
                return Err(Error::arg(format!(
                    "mode {k} has negative damping {}",
                    m.damping
                )));
            }
        }
        let mut samples = vec![Complex64::ZERO; n];
        for m in &modes {
            for (t, s) in samples.iter_mut().enumerate() {
                *s += m.amplitude * m.pole_power(t);
            }
        }
        Ok(SpectralSignal { n, modes, samples })
    }

    /// Number of modes.
    pub fn rank(&self) -> usize {
        self.modes.len()
    }
}

/// How mode amplitudes are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AmplitudeLaw {
    /// Magnitude `1 + 10^{c/2}` with `c` uniform on `[0, 1)`, uniform phase.
    /// Spreads magnitudes over roughly `[2, 4.2]` so no mode is negligible
    /// while the dynamic range still exercises the solver.
    SpreadMagnitude,
    /// Unit magnitude, uniform phase.
    UnitMagnitude,
}

/// Configuration for [`generate_signal`].
#[derive(Debug, Clone)]
pub struct SignalGenConfig {
    /// Signal length.
    pub n: usize,
    /// Number of modes.
    pub rank: usize,
    /// Minimum pairwise wrap-around distance between frequencies; `0.0`
    /// disables the constraint (frequencies are still almost surely distinct).
    pub min_separation: f64,
    /// Dampings are drawn uniformly from this closed interval; `(0.0, 0.0)`
    /// produces undamped signals.
    pub damping_range: (f64, f64),
    pub amplitudes: AmplitudeLaw,
    pub seed: u64,
}

impl SignalGenConfig {
    /// Undamped, unconstrained frequencies, spread amplitudes.
    pub fn new(n: usize, rank: usize, seed: u64) -> Self {
        SignalGenConfig {
            n,
            rank,
            min_separation: 0.0,
            damping_range: (0.0, 0.0),
            amplitudes: AmplitudeLaw::SpreadMagnitude,
            seed,
        }
    }
}

/// Distance between frequencies on the unit circle.
pub fn wrap_distance(f1: f64, f2: f64) -> f64 {
    let d = (f1 - f2).abs() % 1.0;
    d.min(1.0 - d)
}

const FREQ_DRAW_BUDGET: usize = 10_000;

/// Draws a random signal according to `cfg`.  Frequencies are drawn uniformly
/// one at a time; a draw that comes closer than `min_separation` (or exactly
/// collides) with an accepted frequency is rejected and retried, up to
/// [`FREQ_DRAW_BUDGET`] attempts per mode.
pub fn generate_signal(cfg: &SignalGenConfig) -> Result<SpectralSignal> {
    if cfg.rank == 0 {
        return Err(Error::arg("rank must be at least 1"));
    }
    if cfg.min_separation < 0.0 || cfg.min_separation > 0.5 {
        return Err(Error::arg("min_separation must lie in [0, 0.5]"));
    }
    // Packing bound: r arcs of radius min_separation must fit on the circle.
    if cfg.rank as f64 * cfg.min_separation >= 1.0 {
        return Err(Error::arg(format!(
            "cannot place {} frequencies with separation {} on the unit circle",
            cfg.rank, cfg.min_separation
        )));
    }
    let (lo, hi) = cfg.damping_range;
    if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || hi < lo {
        return Err(Error::arg("damping_range must satisfy 0 <= lo <= hi"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut freqs: Vec<f64> = Vec::with_capacity(cfg.rank);
    for _ in 0..cfg.rank {
        let mut accepted = None;
        for _ in 0..FREQ_DRAW_BUDGET {
            let f: f64 = rng.gen_range(0.0..1.0);
            let ok = freqs
                .iter()
                .all(|&g| f != g && wrap_distance(f, g) >= cfg.min_separation);
            if ok {
                accepted = Some(f);
                break;
            }
        }
        match accepted {
            Some(f) => freqs.push(f),
            None => {
                return Err(Error::Generation {
                    min_separation: cfg.min_separation,
                    attempts: FREQ_DRAW_BUDGET,
                })
            }
        }
    }
    let modes: Vec<Mode> = freqs
        .into_iter()
        .map(|freq| {
            let damping = if hi > lo { rng.gen_range(lo..hi) } else { lo };
            let mag = match cfg.amplitudes {
                AmplitudeLaw::SpreadMagnitude => 1.0 + 10f64.powf(0.5 * rng.gen_range(0.0..1.0)),
                AmplitudeLaw::UnitMagnitude => 1.0,
            };
            let phase = rng.gen_range(0.0..TAU);
            Mode {
                freq,
                damping,
                amplitude: Complex64::from_polar(mag, phase),
            }
        })
        .collect();
    SpectralSignal::from_modes(cfg.n, modes)
}

/// A multiset of sample positions in `0..n`.  `indices` is kept sorted;
/// repeated entries are permitted only when `with_replacement` is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSet {
    pub n: usize,
    pub indices: Vec<usize>,
    pub with_replacement: bool,
}

impl SampleSet {
    /// Validates bounds and the duplicate rule, and sorts the indices.
    pub fn new(n: usize, mut indices: Vec<usize>, with_replacement: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("sample space must be non-empty"));
        }
        if let Some(&bad) = indices.iter().find(|&&a| a >= n) {
            return Err(Error::arg(format!("sample index {bad} out of range 0..{n}")));
        }
        indices.sort_unstable();
        if !with_replacement && indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::arg(
                "duplicate sample indices require with_replacement",
            ));
        }
        Ok(SampleSet {
            n,
            indices,
            with_replacement,
        })
    }

    /// Number of samples counted with multiplicity.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Occurrence count of every position, as a length-`n` vector.
    pub fn multiplicity(&self) -> Vec<f64> {
        let mut counts = vec![0.0; self.n];
        for &a in &self.indices {
            counts[a] += 1.0;
        }
        counts
    }
}

/// Draws `m` positions uniformly from `0..n`.  Without replacement this is a
/// partial Fisher-Yates shuffle (requires `m <= n`); with replacement the
/// draws are independent and `m` may exceed `n`.
pub fn sample_indices(n: usize, m: usize, with_replacement: bool, seed: u64) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::arg("sample space must be non-empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices = if with_replacement {
        (0..m).map(|_| rng.gen_range(0..n)).collect()
    } else {
        if m > n {
            return Err(Error::arg(format!(
                "cannot draw {m} of {n} positions without replacement"
            )));
        }
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..m {
            let j = rng.gen_range(i..n);
            pool.swap(i, j);
        }
        pool.truncate(m);
        pool
    };
    SampleSet::new(n, indices, with_replacement)
}

/// Vandermonde factors of the lift: `H x = E_L diag(d) E_R^T` with
/// `[E_L]_{ik} = y_k^i` (`n1 x r`) and `[E_R]_{jk} = y_k^j` (`n2 x r`).
/// Note the plain transpose: the lift is complex symmetric in the factors,
/// not Hermitian.
pub fn vandermonde_factors(
    sig: &SpectralSignal,
    shape: &HankelShape,
) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>, Vec<Complex64>)> {
    if sig.n != shape.n() {
        return Err(Error::arg(format!(
            "signal length {} does not match shape length {}",
            sig.n,
            shape.n()
        )));
    }
    let r = sig.rank();
    if r > shape.n1().min(shape.n2()) {
        return Err(Error::arg(format!(
            "rank {r} exceeds min(n1, n2) = {}",
            shape.n1().min(shape.n2())
        )));
    }
    let e_l = DMatrix::from_fn(shape.n1(), r, |i, k| sig.modes[k].pole_power(i));
    let e_r = DMatrix::from_fn(shape.n2(), r, |j, k| sig.modes[k].pole_power(j));
    let d = sig.modes.iter().map(|m| m.amplitude).collect();
    Ok((e_l, e_r, d))
}

/// Incoherence proxy of the lift:
/// `mu_0 = max(n1 / lambda_min(E_L* E_L), n2 / lambda_min(E_R* E_R))`.
/// Small values (near 1) mean the mode energy is spread evenly over time,
/// which is the regime where few random samples suffice.  Errors with
/// [`Error::DegenerateSignal`] when either Gram matrix is numerically
/// singular (e.g. duplicated poles).
pub fn incoherence_estimate(sig: &SpectralSignal, shape: &HankelShape) -> Result<f64> {
    let (e_l, e_r, _) = vandermonde_factors(sig, shape)?;
    let lam_l = min_gram_eigenvalue(&e_l)?;
    let lam_r = min_gram_eigenvalue(&e_r)?;
    Ok((shape.n1() as f64 / lam_l).max(shape.n2() as f64 / lam_r))
}

fn min_gram_eigenvalue(e: &DMatrix<Complex64>) -> Result<f64> {
    let gram = e.adjoint() * e;
    let eig = gram.symmetric_eigen();
    let mut lam_min = f64::INFINITY;
    let mut lam_max: f64 = 0.0;
    for &lam in eig.eigenvalues.iter() {
        lam_min = lam_min.min(lam.max(0.0));
        lam_max = lam_max.max(lam);
    }
    if lam_min <= lam_max * 1e-12 || lam_min == 0.0 {
        return Err(Error::DegenerateSignal(format!(
            "Vandermonde Gram matrix is numerically rank deficient \
             (lambda_min = {lam_min:.3e}, lambda_max = {lam_max:.3e})"
        )));
    }
    Ok(lam_min)
}
