//! The Hankel lift of a finite signal and matrix-free kernels on it.
//!
//! A length-`n` signal `z` lifts to the `n1 x n2` Hankel matrix `[Hz]_{ij} =
//! z_{i+j}` with `n1 + n2 = n + 1`.  Spectrally sparse signals lift to
//! low-rank Hankel matrices, which is what makes completion from partial
//! samples possible.  Three facts drive every kernel in this module:
//!
//! * `Hz . v` is a windowed linear convolution of `z` with the reversed `v`,
//! * `(Hz)* . u` is a windowed correlation of `z` with `u`,
//! * `H* (u v*)` is the plain convolution of `u` with `conj(v)`.
//!
//! So products with the lift, its adjoint, and its Moore-Penrose
//! pseudo-inverse `H^+ = D^{-2} H*` never materialize the matrix: they cost
//! `O(n log n)` through the FFT plans in [`crate::conv`].  The diagonal
//! `D^2 = H* H` counts the length of each anti-diagonal, so `H^+` divides the
//! anti-diagonal sums by those counts.
//!
//! Everything is expressed through the [`HankelOperator`] trait so the solver
//! runs unchanged on the one-dimensional shape here and the block shape in
//! [`crate::nd`].

use crate::conv::ConvPlan;
use crate::error::{Error, Result};
use crate::signal::SampleSet;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Largest `n1 * n2` for which dense materialization is allowed.  Above this
/// the dense constructors refuse and callers must stay matrix-free.
pub const DENSE_CELL_LIMIT: usize = 4096;

/// Anti-diagonal lengths of an `n1 x n2` Hankel matrix: the `a`-th entry is
/// `#\{(i, j) : i + j = a\} = min(a + 1, n1, n2, n - a)`.
pub fn antidiagonal_weights(n: usize, n1: usize) -> Vec<f64> {
    let n2 = n + 1 - n1;
    (0..n)
        .map(|a| (a + 1).min(n1).min(n2).min(n - a) as f64)
        .collect()
}

/// Row/column geometry of the Hankel lift of a length-`n` signal, with the
/// FFT plan shared by all fast kernels on that shape.
#[derive(Clone)]
pub struct HankelShape {
    n: usize,
    n1: usize,
    n2: usize,
    weights: Vec<f64>,
    plan: ConvPlan,
}

/// Cached spectrum of a zero-padded signal.  Preparing once and reusing it
/// across a matvec and an adjoint matvec (or across the columns of a block)
/// saves one FFT per product.
pub struct Prepared {
    pub(crate) spectrum: Vec<Complex64>,
}

impl HankelShape {
    /// Shape for signals of length `n`.  `n1` defaults to `ceil((n + 1) / 2)`,
    /// the most square choice, which minimizes the sampling-complexity factor
    /// `c_s = max(n / n1, n / n2)`.
    pub fn new(n: usize, n1: Option<usize>) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("signal length must be at least 1"));
        }
        let n1 = n1.unwrap_or((n + 2) / 2);
        if n1 < 1 || n1 > n {
            return Err(Error::arg(format!(
                "row count n1 = {n1} must lie in 1..={n}"
            )));
        }
        let n2 = n + 1 - n1;
        Ok(HankelShape {
            n,
            n1,
            n2,
            weights: antidiagonal_weights(n, n1),
            plan: ConvPlan::new(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Dense `n1 x n2` lift of `z`.  Refuses above [`DENSE_CELL_LIMIT`] cells.
    pub fn dense(&self, z: &[Complex64]) -> Result<DMatrix<Complex64>> {
        self.check_signal(z)?;
        if self.n1 * self.n2 > DENSE_CELL_LIMIT {
            return Err(Error::DenseGuard {
                rows: self.n1,
                cols: self.n2,
                limit: DENSE_CELL_LIMIT,
            });
        }
        Ok(DMatrix::from_fn(self.n1, self.n2, |i, j| z[i + j]))
    }

    /// Dense adjoint: sums `m` over anti-diagonals into a length-`n` signal.
    pub fn adjoint_dense(&self, m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
        if m.nrows() != self.n1 || m.ncols() != self.n2 {
            return Err(Error::arg(format!(
                "matrix is {}x{}, shape expects {}x{}",
                m.nrows(),
                m.ncols(),
                self.n1,
                self.n2
            )));
        }
        let mut out = vec![Complex64::ZERO; self.n];
        for j in 0..self.n2 {
            for i in 0..self.n1 {
                out[i + j] += m[(i, j)];
            }
        }
        Ok(out)
    }

    fn check_signal(&self, z: &[Complex64]) -> Result<()> {
        if z.len() != self.n {
            return Err(Error::arg(format!(
                "signal has length {}, shape expects {}",
                z.len(),
                self.n
            )));
        }
        Ok(())
    }
}

impl HankelOperator for HankelShape {
    fn signal_len(&self) -> usize {
        self.n
    }

    fn rows(&self) -> usize {
        self.n1
    }

    fn cols(&self) -> usize {
        self.n2
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn aspect_ratio(&self) -> f64 {
        let n = self.n as f64;
        (n / self.n1 as f64).max(n / self.n2 as f64)
    }

    fn prepare(&self, z: &[Complex64]) -> Result<Prepared> {
        self.check_signal(z)?;
        Ok(Prepared {
            spectrum: self.plan.spectrum(z),
        })
    }

    /// `(Hz) v` for `v` of length `n2`: entry `i` of the result equals
    /// `sum_j z_{i+j} v_j`, read off a convolution of `z` with reversed `v`
    /// at offset `n2 - 1`.
    fn matvec_prepared(&self, p: &Prepared, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(v.len(), self.n2);
        let mut buf = vec![Complex64::ZERO; self.plan.len()];
        for (k, slot) in buf[..self.n2].iter_mut().enumerate() {
            *slot = v[self.n2 - 1 - k];
        }
        self.plan.fft(&mut buf);
        for (b, s) in buf.iter_mut().zip(&p.spectrum) {
            *b *= s;
        }
        self.plan.ifft(&mut buf);
        buf[self.n2 - 1..self.n2 - 1 + self.n1].to_vec()
    }

    /// `(Hz)* u` for `u` of length `n1`: entry `j` equals
    /// `sum_i conj(z_{i+j}) u_i`, a correlation read at offset `n1 - 1`.
    fn adjoint_prepared(&self, p: &Prepared, u: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(u.len(), self.n1);
        let mut buf = vec![Complex64::ZERO; self.plan.len()];
        for (k, slot) in buf[..self.n1].iter_mut().enumerate() {
            *slot = u[self.n1 - 1 - k].conj();
        }
        self.plan.fft(&mut buf);
        for (b, s) in buf.iter_mut().zip(&p.spectrum) {
            *b *= s;
        }
        self.plan.ifft(&mut buf);
        buf[self.n1 - 1..self.n1 - 1 + self.n2]
            .iter()
            .map(|c| c.conj())
            .collect()
    }

    /// `H* (u v*)` as a length-`n` signal: entry `a` sums `u_i conj(v_j)`
    /// over `i + j = a`, which is exactly `(u * conj(v))_a` by convolution.
    fn adjoint_rank_one(&self, u: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(u.len(), self.n1);
        debug_assert_eq!(v.len(), self.n2);
        let mut a = self.plan.spectrum(u);
        let vc: Vec<Complex64> = v.iter().map(|c| c.conj()).collect();
        let b = self.plan.spectrum(&vc);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= y;
        }
        self.plan.ifft(&mut a);
        a.truncate(self.n);
        a
    }

    /// `H^+ (U diag(sigma) V*)` in one batched pass: the rank-one adjoints are
    /// accumulated in the spectral domain, inverted once, and divided by the
    /// anti-diagonal counts.
    fn apply_pseudo_inverse(
        &self,
        u: &DMatrix<Complex64>,
        sigma: &[f64],
        v: &DMatrix<Complex64>,
    ) -> Result<Vec<Complex64>> {
        check_factor_dims(self, u, sigma, v)?;
        let mut acc = vec![Complex64::ZERO; self.plan.len()];
        let mut ubuf = vec![Complex64::ZERO; self.plan.len()];
        let mut vbuf = vec![Complex64::ZERO; self.plan.len()];
        for (k, &s) in sigma.iter().enumerate() {
            if s == 0.0 {
                continue;
            }
            ubuf.fill(Complex64::ZERO);
            for (i, slot) in ubuf[..self.n1].iter_mut().enumerate() {
                *slot = u[(i, k)];
            }
            self.plan.fft(&mut ubuf);
            vbuf.fill(Complex64::ZERO);
            for (j, slot) in vbuf[..self.n2].iter_mut().enumerate() {
                *slot = v[(j, k)].conj();
            }
            self.plan.fft(&mut vbuf);
            for ((a, x), y) in acc.iter_mut().zip(&ubuf).zip(&vbuf) {
                *a += s * x * y;
            }
        }
        self.plan.ifft(&mut acc);
        acc.truncate(self.n);
        for (a, w) in acc.iter_mut().zip(&self.weights) {
            *a /= w;
        }
        Ok(acc)
    }

    fn try_dense(&self, z: &[Complex64]) -> Option<DMatrix<Complex64>> {
        self.dense(z).ok()
    }
}

/// Matrix-free interface shared by the 1-D Hankel lift and the N-D block
/// Hankel lift.  A "signal" is a flat complex vector; the operator lifts it
/// to a `rows() x cols()` structured matrix without ever storing it.
pub trait HankelOperator {
    /// Length of the flat signal vector.
    fn signal_len(&self) -> usize;
    /// Rows of the lifted matrix.
    fn rows(&self) -> usize;
    /// Columns of the lifted matrix.
    fn cols(&self) -> usize;
    /// Multiplicity of each signal entry in the lift, i.e. the diagonal of
    /// `H* H`.
    fn weights(&self) -> &[f64];
    /// Sampling-complexity factor `c_s = max(len / rows, len / cols)` (its
    /// N-D analogue for block shapes).
    fn aspect_ratio(&self) -> f64;
    /// Caches the FFT of `z` for reuse across products against the same lift.
    fn prepare(&self, z: &[Complex64]) -> Result<Prepared>;
    /// `(Hz) v` without materializing `Hz`.
    fn matvec_prepared(&self, p: &Prepared, v: &[Complex64]) -> Vec<Complex64>;
    /// `(Hz)* u` without materializing `Hz`.
    fn adjoint_prepared(&self, p: &Prepared, u: &[Complex64]) -> Vec<Complex64>;
    /// `H* (u v*)` as a flat signal.
    fn adjoint_rank_one(&self, u: &[Complex64], v: &[Complex64]) -> Vec<Complex64>;
    /// `H^+ (U diag(sigma) V*)` as a flat signal.
    fn apply_pseudo_inverse(
        &self,
        u: &DMatrix<Complex64>,
        sigma: &[f64],
        v: &DMatrix<Complex64>,
    ) -> Result<Vec<Complex64>>;
    /// Dense lift when small enough to materialize, `None` otherwise.
    fn try_dense(&self, z: &[Complex64]) -> Option<DMatrix<Complex64>>;

    /// `(Hz) M` column by column.
    fn matvec_block(&self, p: &Prepared, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.rows(), m.ncols());
        for c in 0..m.ncols() {
            let col: Vec<Complex64> = m.column(c).iter().copied().collect();
            let res = self.matvec_prepared(p, &col);
            out.column_mut(c).copy_from_slice(&res);
        }
        out
    }

    /// `(Hz)* M` column by column.
    fn adjoint_block(&self, p: &Prepared, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = DMatrix::zeros(self.cols(), m.ncols());
        for c in 0..m.ncols() {
            let col: Vec<Complex64> = m.column(c).iter().copied().collect();
            let res = self.adjoint_prepared(p, &col);
            out.column_mut(c).copy_from_slice(&res);
        }
        out
    }

    /// One-shot `(Hz) v`.
    fn matvec(&self, z: &[Complex64], v: &[Complex64]) -> Result<Vec<Complex64>> {
        let p = self.prepare(z)?;
        Ok(self.matvec_prepared(&p, v))
    }

    /// One-shot `(Hz)* u`.
    fn matvec_adjoint(&self, z: &[Complex64], u: &[Complex64]) -> Result<Vec<Complex64>> {
        let p = self.prepare(z)?;
        Ok(self.adjoint_prepared(&p, u))
    }
}

pub(crate) fn check_factor_dims<O: HankelOperator + ?Sized>(
    op: &O,
    u: &DMatrix<Complex64>,
    sigma: &[f64],
    v: &DMatrix<Complex64>,
) -> Result<()> {
    if u.nrows() != op.rows() || v.nrows() != op.cols() {
        return Err(Error::arg(format!(
            "factor dimensions {}x{} / {}x{} do not match lift {}x{}",
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols(),
            op.rows(),
            op.cols()
        )));
    }
    if u.ncols() != sigma.len() || v.ncols() != sigma.len() {
        return Err(Error::arg(format!(
            "factor has {} / {} columns but {} singular values",
            u.ncols(),
            v.ncols(),
            sigma.len()
        )));
    }
    Ok(())
}

/// Multiplicity-weighted projection onto the sampled entries: entry `a` of
/// the result is `z_a` times the number of occurrences of `a` in `omega`
/// (zero off the sample set).
pub fn project_samples(z: &[Complex64], omega: &SampleSet) -> Result<Vec<Complex64>> {
    if z.len() != omega.n {
        return Err(Error::arg(format!(
            "signal has length {}, sample set expects {}",
            z.len(),
            omega.n
        )));
    }
    let mut out = vec![Complex64::ZERO; z.len()];
    for &a in &omega.indices {
        out[a] += z[a];
    }
    Ok(out)
}

/// Builds the lift geometry for a length-`n` signal; `n1 = None` picks the
/// most square shape.
pub fn make_shape(n: usize, n1: Option<usize>) -> Result<HankelShape> {
    HankelShape::new(n, n1)
}

/// Dense lift of `z` (small shapes only).
pub fn hankel_dense(shape: &HankelShape, z: &[Complex64]) -> Result<DMatrix<Complex64>> {
    shape.dense(z)
}

/// Dense adjoint of the lift: anti-diagonal sums of `m`.
pub fn hankel_adjoint_dense(shape: &HankelShape, m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    shape.adjoint_dense(m)
}

/// Matrix-free `(Hz) v`.
pub fn hankel_matvec(shape: &HankelShape, z: &[Complex64], v: &[Complex64]) -> Result<Vec<Complex64>> {
    shape.matvec(z, v)
}

/// Matrix-free `(Hz)* u`.
pub fn hankel_matvec_adjoint(
    shape: &HankelShape,
    z: &[Complex64],
    u: &[Complex64],
) -> Result<Vec<Complex64>> {
    shape.matvec_adjoint(z, u)
}

/// Matrix-free `H* (u v*)`.
pub fn adjoint_rank_one(shape: &HankelShape, u: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
    HankelOperator::adjoint_rank_one(shape, u, v)
}

/// Matrix-free `H^+ (U diag(sigma) V*)`.
pub fn apply_pseudo_inverse(
    shape: &HankelShape,
    u: &DMatrix<Complex64>,
    sigma: &[f64],
    v: &DMatrix<Complex64>,
) -> Result<Vec<Complex64>> {
    HankelOperator::apply_pseudo_inverse(shape, u, sigma, v)
}
