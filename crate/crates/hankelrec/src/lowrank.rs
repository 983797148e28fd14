//! Rank-`r` factors, tangent-space projections, and the structured SVD
//! updates that keep every per-iteration cost at `O(r^2 n + r n log n)`.
//!
//! The completion iterations never form an `n1 x n2` matrix.  A rank-`r`
//! iterate lives as a factor triple `(U, sigma, V)`; the next iterate is the
//! best rank-`r` approximation of a matrix of the special form
//!
//! ```text
//!     P_S(W) = U C V* + Y V* + U X*,      S = tangent space at (U, V),
//! ```
//!
//! whose SVD reduces to two thin QR factorizations and one `2r x 2r` dense
//! SVD ([`retract_rank_r`]).  For matrices with no such structure there is a
//! guarded dense path ([`dense_hard_threshold`]) and a matrix-free iterative
//! path ([`partial_svd_hankel`]) that only touches the matrix through the
//! fast kernels of [`crate::hankel`].

use crate::error::{Error, Result};
use crate::hankel::{check_factor_dims, HankelOperator, Prepared};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest `rows * cols` accepted by [`dense_hard_threshold`].
pub const DENSE_SVD_CELL_LIMIT: usize = 65_536;

/// Columns whose pivoted-QR diagonal falls below this times the Frobenius
/// norm of the matrix are treated as numerically dependent.
const RANK_TOL: f64 = 1e-14;

/// A rank-`r` matrix stored as `U diag(sigma) V*`.
///
/// `u` is `rows x r` and `v` is `cols x r`, both with orthonormal columns
/// (except for the output of trimming, which documents its own weaker
/// contract); `sigma` is nonincreasing and non-negative, possibly with
/// trailing zeros when the numerical rank is below `r`.
#[derive(Debug, Clone)]
pub struct LowRankFactor {
    pub u: DMatrix<Complex64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<Complex64>,
}

impl LowRankFactor {
    /// The all-zero matrix with canonical orthonormal factors.
    pub fn zero(rows: usize, cols: usize, r: usize) -> Self {
        LowRankFactor {
            u: DMatrix::identity(rows, r),
            sigma: vec![0.0; r],
            v: DMatrix::identity(cols, r),
        }
    }

    /// Width of the factor (number of stored singular triplets).
    pub fn width(&self) -> usize {
        self.sigma.len()
    }

    /// Number of strictly positive singular values.
    pub fn numeric_rank(&self) -> usize {
        self.sigma.iter().filter(|&&s| s > 0.0).count()
    }

    /// Materializes `U diag(sigma) V*`.  Intended for tests and small shapes.
    pub fn recompose(&self) -> DMatrix<Complex64> {
        let mut scaled = self.u.clone();
        for (k, &s) in self.sigma.iter().enumerate() {
            scaled.column_mut(k).scale_mut(s);
        }
        scaled * self.v.adjoint()
    }

    /// Recovers the exact SVD of the represented matrix after the factors
    /// have lost orthonormality (e.g. after row trimming): thin QR of both
    /// factors and one `r x r` SVD.  The represented matrix is unchanged.
    pub fn reorthonormalized(&self) -> Result<LowRankFactor> {
        let qa = self.u.clone().qr();
        let qb = self.v.clone().qr();
        let mut mid = qa.r();
        for (k, &s) in self.sigma.iter().enumerate() {
            mid.column_mut(k).scale_mut(s);
        }
        let mid = mid * qb.r().adjoint();
        let (um, sigma, vm) = svd_checked(&mid)?;
        Ok(LowRankFactor {
            u: qa.q() * um,
            sigma,
            v: qb.q() * vm,
        })
    }
}

/// Thin SVD with explicit convergence handling; nalgebra sorts the singular
/// values in decreasing order.
pub(crate) fn svd_checked(
    m: &DMatrix<Complex64>,
) -> Result<(DMatrix<Complex64>, Vec<f64>, DMatrix<Complex64>)> {
    let svd = m
        .clone()
        .try_svd(true, true, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::arg("dense SVD did not converge"))?;
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V^T").adjoint();
    // The terminal 2x2 blocks of the bidiagonal iteration report values with
    // sqrt(eps)-level noise when vectors are accumulated.  One Rayleigh pass
    // restores full precision: vector errors of size d enter u* (A v) only at
    // order d^2.
    let av = m * &v;
    let sigma: Vec<f64> = (0..u.ncols())
        .map(|k| u.column(k).dotc(&av.column(k)).re.max(0.0))
        .collect();
    // Refinement can swap near-ties; restore the descending contract.
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    if order.iter().enumerate().any(|(i, &o)| i != o) {
        let sigma = order.iter().map(|&o| sigma[o]).collect();
        return Ok((u.select_columns(&order), sigma, v.select_columns(&order)));
    }
    Ok((u, sigma, v))
}

/// Coefficients of a tangent-space projection `P_S(W) = U C V* + Y V* + U X*`
/// with `Y* U = 0` and `X* V = 0`.
#[derive(Debug, Clone)]
pub struct TangentCoeffs {
    /// `U* W V`, `r x r`.
    pub c: DMatrix<Complex64>,
    /// `(I - V V*) W* U`, `cols x r`.
    pub x: DMatrix<Complex64>,
    /// `(I - U U*) W V`, `rows x r`.
    pub y: DMatrix<Complex64>,
}

/// Computes the tangent coefficients of the lift of `z` at the point with
/// orthonormal factors `(u, v)`, using `2r` fast products and no dense
/// matrix: `A = (Hz) V`, `B = (Hz)* U`, `C = U* A`, `Y = A - U C`,
/// `X = B - V C*`.
pub fn tangent_coeffs<O: HankelOperator + ?Sized>(
    op: &O,
    z: &[Complex64],
    u: &DMatrix<Complex64>,
    v: &DMatrix<Complex64>,
) -> Result<TangentCoeffs> {
    let p = op.prepare(z)?;
    tangent_coeffs_prepared(op, &p, u, v)
}

/// [`tangent_coeffs`] against an already prepared spectrum.
pub fn tangent_coeffs_prepared<O: HankelOperator + ?Sized>(
    op: &O,
    p: &Prepared,
    u: &DMatrix<Complex64>,
    v: &DMatrix<Complex64>,
) -> Result<TangentCoeffs> {
    let sigma_probe = vec![1.0; u.ncols()];
    check_factor_dims(op, u, &sigma_probe, v)?;
    let a = op.matvec_block(p, v);
    let b = op.adjoint_block(p, u);
    let c = u.adjoint() * &a;
    let y = &a - u * &c;
    let x = &b - v * c.adjoint();
    Ok(TangentCoeffs { c, x, y })
}

/// Economy rank-revealing QR: returns `(Q_k, R_k)` with `Q_k` orthonormal of
/// `k` columns and `m ~= Q_k R_k`, where `k` counts pivoted diagonal entries
/// above `RANK_TOL * ||m||_F`.
fn rank_revealing_qr(m: &DMatrix<Complex64>) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let norm = m.norm();
    let (q, mut r, p) = m.clone().col_piv_qr().unpack();
    // Count rank on the pivoted diagonal, whose magnitudes are non-increasing;
    // it stops being a meaningful diagonal once the column swaps are undone.
    let tol = RANK_TOL * norm;
    let maxk = q.ncols();
    let mut k = 0;
    while k < maxk && r[(k, k)].norm() > tol {
        k += 1;
    }
    // The decomposition applied the column swaps to a copy of `m`; undoing
    // them on `r` restores  m = q * r.  Rows k.. of the triangular factor are
    // negligible, and a column permutation keeps them so.
    p.inv_permute_columns(&mut r);
    (
        q.columns(0, k).into_owned(),
        r.rows(0, k).into_owned(),
    )
}

fn hcat(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    debug_assert_eq!(a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Best rank-`r` approximation of the tangent matrix
/// `U C V* + Y V* + U X*` without forming it.
///
/// With thin rank-revealing QRs `X = Q1 R1` and `Y = Q2 R2`, the matrix
/// equals `[U Q2] M [V Q1]*` for the small block matrix
/// `M = [[C, R1*], [R2, 0]]`, so one SVD of `M` (at most `2r x 2r`) yields
/// the full SVD.  The returned factors are orthonormal even when the
/// numerical rank is below `r`; `sigma` is then padded with zeros.
pub fn retract_rank_r(
    tc: &TangentCoeffs,
    u: &DMatrix<Complex64>,
    v: &DMatrix<Complex64>,
    r: usize,
) -> Result<LowRankFactor> {
    let rw = u.ncols();
    if r == 0 || r > rw {
        return Err(Error::arg(format!(
            "target rank {r} must lie in 1..={rw} (factor width)"
        )));
    }
    if v.ncols() != rw
        || tc.c.nrows() != rw
        || tc.c.ncols() != rw
        || tc.x.nrows() != v.nrows()
        || tc.x.ncols() != rw
        || tc.y.nrows() != u.nrows()
        || tc.y.ncols() != rw
    {
        return Err(Error::arg("tangent coefficient dimensions are inconsistent"));
    }
    // Re-project before factorizing: when X (or Y) is tiny, cancellation can
    // leave it with a relative component along V (or U) large enough to break
    // the orthogonality of the assembled basis.
    let x = &tc.x - v * (v.adjoint() * &tc.x);
    let y = &tc.y - u * (u.adjoint() * &tc.y);
    let (q1, r1) = rank_revealing_qr(&x);
    let (q2, r2) = rank_revealing_qr(&y);
    let k1 = q1.ncols();
    let k2 = q2.ncols();
    let mut mid = DMatrix::zeros(rw + k2, rw + k1);
    mid.view_mut((0, 0), (rw, rw)).copy_from(&tc.c);
    mid.view_mut((0, rw), (rw, k1)).copy_from(&r1.adjoint());
    mid.view_mut((rw, 0), (k2, rw)).copy_from(&r2);
    if mid.norm() == 0.0 {
        return Ok(LowRankFactor {
            u: u.columns(0, r).into_owned(),
            sigma: vec![0.0; r],
            v: v.columns(0, r).into_owned(),
        });
    }
    let (um, sigma, vm) = svd_checked(&mid)?;
    let ub = hcat(u, &q2);
    let vb = hcat(v, &q1);
    Ok(LowRankFactor {
        u: &ub * um.columns(0, r),
        sigma: sigma[..r].to_vec(),
        v: &vb * vm.columns(0, r),
    })
}

/// Best rank-`r` approximation of a dense matrix by truncated SVD.  Guarded
/// by [`DENSE_SVD_CELL_LIMIT`]; requires `r <= min(rows, cols)`.
pub fn dense_hard_threshold(m: &DMatrix<Complex64>, r: usize) -> Result<LowRankFactor> {
    if m.nrows() * m.ncols() > DENSE_SVD_CELL_LIMIT {
        return Err(Error::DenseGuard {
            rows: m.nrows(),
            cols: m.ncols(),
            limit: DENSE_SVD_CELL_LIMIT,
        });
    }
    if r == 0 || r > m.nrows().min(m.ncols()) {
        return Err(Error::arg(format!(
            "rank {r} must lie in 1..=min({}, {})",
            m.nrows(),
            m.ncols()
        )));
    }
    let (u, sigma, v) = svd_checked(m)?;
    Ok(LowRankFactor {
        u: u.columns(0, r).into_owned(),
        sigma: sigma[..r].to_vec(),
        v: v.columns(0, r).into_owned(),
    })
}

/// Options for [`partial_svd_hankel`].
#[derive(Debug, Clone)]
pub struct PartialSvdOptions {
    /// Relative residual target: the top `r` Ritz pairs must satisfy both
    /// `||(Hz) v_k - sigma_k u_k|| <= tol * sigma_1` (exact by construction)
    /// and `||(Hz)* u_k - sigma_k v_k|| <= tol * sigma_1`.
    pub tol: f64,
    pub max_iters: usize,
    /// Extra basis vectors beyond `r`; larger values converge in fewer
    /// passes at slightly higher cost per pass.
    pub oversample: usize,
    /// Seed for the random starting block.
    pub seed: u64,
}

impl Default for PartialSvdOptions {
    fn default() -> Self {
        PartialSvdOptions {
            tol: 1e-10,
            max_iters: 50,
            oversample: 10,
            seed: 0,
        }
    }
}

/// Leading `r` singular triplets of the lift of `z`, computed matrix-free.
///
/// A randomized block subspace iteration with thick restarts: each pass costs
/// one block matvec and one block adjoint through the FFT kernels plus
/// `O((r + oversample)^2)` dense work.  The residual directions of the
/// unconverged Ritz pairs are appended to the next basis, which is the thick
/// restart that makes clustered singular values converge.  On failure the
/// best iterate is attached to the error.
pub fn partial_svd_hankel<O: HankelOperator + ?Sized>(
    z: &[Complex64],
    r: usize,
    op: &O,
    opts: &PartialSvdOptions,
) -> Result<LowRankFactor> {
    let p = op.prepare(z)?;
    partial_svd_prepared(op, &p, r, opts, None).map(|(f, _)| f)
}

/// Internal variant that reuses a prepared spectrum, warm-starts the search
/// from previous right singular vectors, and reports the Ritz estimate of
/// the spectral gap `sigma_r / sigma_{r+1}` when one is available.
pub(crate) fn partial_svd_prepared<O: HankelOperator + ?Sized>(
    op: &O,
    p: &Prepared,
    r: usize,
    opts: &PartialSvdOptions,
    warm: Option<&DMatrix<Complex64>>,
) -> Result<(LowRankFactor, Option<f64>)> {
    let (rows, cols) = (op.rows(), op.cols());
    let min_dim = rows.min(cols);
    if r == 0 || r > min_dim {
        return Err(Error::arg(format!(
            "rank {r} must lie in 1..=min({rows}, {cols})"
        )));
    }
    if opts.max_iters == 0 {
        return Err(Error::arg("max_iters must be at least 1"));
    }
    let b = (r + opts.oversample).min(min_dim);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis = DMatrix::zeros(cols, b);
    let mut filled = 0;
    if let Some(w) = warm {
        let take = w.ncols().min(b);
        basis.columns_mut(0, take).copy_from(&w.columns(0, take));
        filled = take;
    }
    for c in filled..b {
        for i in 0..cols {
            basis[(i, c)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    let mut s = basis.qr().q();

    let mut best: Option<(LowRankFactor, Option<f64>, f64)> = None;
    for _ in 0..opts.max_iters {
        let w = op.matvec_block(p, &s);
        let qr = w.qr();
        let (ur, sigma, vr) = svd_checked(&qr.r())?;
        let u = qr.q() * ur;
        let v = &s * vr;
        let sigma1 = sigma[0];
        if sigma1 == 0.0 {
            // The lift annihilates the whole search space; for a random
            // start this only happens for the zero signal.
            return Ok((LowRankFactor::zero(rows, cols, r), None));
        }
        let kr = r.min(u.ncols());
        let t = op.adjoint_block(p, &u.columns(0, kr).into_owned());
        let mut resid = DMatrix::zeros(cols, kr);
        let mut worst: f64 = 0.0;
        for k in 0..kr {
            let g = t.column(k) - v.column(k) * Complex64::new(sigma[k], 0.0);
            worst = worst.max(g.norm());
            resid.column_mut(k).copy_from(&g);
        }
        let rel = worst / sigma1;
        let truncated = || LowRankFactor {
            u: u.columns(0, kr).into_owned(),
            sigma: sigma[..kr].to_vec(),
            v: v.columns(0, kr).into_owned(),
        };
        let gap = if sigma.len() > r && sigma[r] > sigma1 * 1e-300 {
            Some(sigma[r - 1] / sigma[r])
        } else {
            None
        };
        if rel <= opts.tol {
            return Ok((truncated(), gap));
        }
        if best.as_ref().map_or(true, |(_, _, b)| rel < *b) {
            best = Some((truncated(), gap, rel));
        }
        // Thick restart: best right vectors plus normalized residual
        // directions orthogonalized against them (two projection passes).
        let keep = s.ncols().min(b);
        let mut cols_next: Vec<DMatrix<Complex64>> =
            vec![v.columns(0, keep).into_owned()];
        let mut extra = DMatrix::zeros(cols, 0);
        for k in 0..kr {
            let mut g = resid.column(k).into_owned();
            let gn = g.norm();
            if gn <= 1e-13 * sigma1 {
                continue;
            }
            for _ in 0..2 {
                let base = &cols_next[0];
                g -= base * (base.adjoint() * &g);
                if extra.ncols() > 0 {
                    g -= &extra * (extra.adjoint() * &g);
                }
            }
            let gn2 = g.norm();
            if gn2 > 1e-13 * gn {
                g.unscale_mut(gn2);
                extra = hcat(&extra, &DMatrix::from_column_slice(cols, 1, g.as_slice()));
            }
        }
        if extra.ncols() == 0 {
            // Stagnated without meeting the tolerance; inject a fresh random
            // direction to escape an invariant-but-wrong subspace.
            let mut g = DMatrix::zeros(cols, 1);
            for i in 0..cols {
                g[(i, 0)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
            let base = &cols_next[0];
            g -= base * (base.adjoint() * &g);
            let gn = g.norm();
            if gn > 0.0 {
                g.unscale_mut(gn);
                extra = g;
            }
        }
        cols_next.push(extra);
        let stacked = {
            let total: usize = cols_next.iter().map(|m| m.ncols()).sum();
            let mut out = DMatrix::zeros(cols, total);
            let mut at = 0;
            for m in &cols_next {
                out.columns_mut(at, m.ncols()).copy_from(m);
                at += m.ncols();
            }
            out
        };
        s = stacked.qr().q();
    }
    let (factor, gap, residual) = best.expect("at least one iteration ran");
    let _ = gap;
    Err(Error::PartialSvd {
        tol: opts.tol,
        iters: opts.max_iters,
        residual,
        best: Box::new(factor),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hankel::HankelShape;
    use crate::signal::{Mode, SpectralSignal};
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn random_orthonormal(rows: usize, cols: usize, seed: u64) -> DMatrix<Complex64> {
        random_matrix(rows, cols, seed).qr().q()
    }

    fn random_signal(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    fn orthonormality_defect(q: &DMatrix<Complex64>) -> f64 {
        (q.adjoint() * q - DMatrix::<Complex64>::identity(q.ncols(), q.ncols())).norm()
    }

    fn rank_r_signal(n: usize, r: usize, seed: u64) -> SpectralSignal {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = (0..r)
            .map(|k| Mode {
                freq: (k as f64 + rng.gen_range(0.1..0.9)) / r as f64,
                damping: 0.0,
                amplitude: c(rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0)),
            })
            .collect();
        SpectralSignal::from_modes(n, modes).unwrap()
    }

    #[test]
    fn pivoted_qr_helper_reconstructs_input() {
        let m = random_matrix(8, 5, 1);
        let (q, r) = rank_revealing_qr(&m);
        assert_eq!(q.ncols(), 5);
        assert!((&q * &r - &m).norm() < 1e-12 * m.norm());
        assert!(orthonormality_defect(&q) < 1e-12);
    }

    #[test]
    fn pivoted_qr_helper_detects_rank() {
        // Rank-2 by construction: 7x4 = (7x2) * (2x4).
        let m = random_matrix(7, 2, 2) * random_matrix(2, 4, 3);
        let (q, r) = rank_revealing_qr(&m);
        assert_eq!(q.ncols(), 2);
        assert!((&q * &r - &m).norm() < 1e-12 * m.norm());
        let z = DMatrix::<Complex64>::zeros(6, 3);
        let (q0, _) = rank_revealing_qr(&z);
        assert_eq!(q0.ncols(), 0);
    }

    #[test]
    fn tangent_coeffs_of_a_point_on_the_manifold() {
        // When Hz = U Sigma V*, the tangent coefficients at (U, V) are
        // C = Sigma, X = 0, Y = 0.
        let n = 40;
        let shape = HankelShape::new(n, None).unwrap();
        let sig = rank_r_signal(n, 3, 4);
        let lift = shape.dense(&sig.samples).unwrap();
        let f = dense_hard_threshold(&lift, 3).unwrap();
        let tc = tangent_coeffs(&shape, &sig.samples, &f.u, &f.v).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { c(f.sigma[i], 0.0) } else { Complex64::ZERO };
                assert!((tc.c[(i, j)] - want).norm() < 1e-9 * f.sigma[0]);
            }
        }
        assert!(tc.x.norm() < 1e-9 * f.sigma[0]);
        assert!(tc.y.norm() < 1e-9 * f.sigma[0]);
    }

    #[test]
    fn tangent_coeffs_match_dense_projection_formula() {
        let n = 64;
        let shape = HankelShape::new(n, None).unwrap();
        let z = random_signal(n, 5);
        let u = random_orthonormal(shape.n1(), 3, 6);
        let v = random_orthonormal(shape.n2(), 3, 7);
        let tc = tangent_coeffs(&shape, &z, &u, &v).unwrap();
        let w = shape.dense(&z).unwrap();
        let pu = &u * u.adjoint();
        let pv = &v * v.adjoint();
        let oracle = &pu * &w + &w * &pv - &pu * &w * &pv;
        let assembled = &u * &tc.c * v.adjoint() + &tc.y * v.adjoint() + &u * tc.x.adjoint();
        assert!((&assembled - &oracle).norm() < 1e-10 * oracle.norm());
        // The correction blocks are orthogonal to the base point.
        assert!((u.adjoint() * &tc.y).norm() < 1e-10 * oracle.norm());
        assert!((v.adjoint() * &tc.x).norm() < 1e-10 * oracle.norm());
    }

    #[test]
    fn retract_is_lossless_on_the_manifold() {
        let n = 48;
        let shape = HankelShape::new(n, None).unwrap();
        let sig = rank_r_signal(n, 4, 8);
        let lift = shape.dense(&sig.samples).unwrap();
        let f = dense_hard_threshold(&lift, 4).unwrap();
        let tc = tangent_coeffs(&shape, &sig.samples, &f.u, &f.v).unwrap();
        let out = retract_rank_r(&tc, &f.u, &f.v, 4).unwrap();
        assert!((out.recompose() - &lift).norm() < 1e-9 * lift.norm());
        for (a, b) in out.sigma.iter().zip(&f.sigma) {
            assert!((a - b).abs() < 1e-9 * f.sigma[0]);
        }
    }

    #[test]
    fn retract_matches_dense_truncated_svd_of_projected_matrix() {
        for seed in 0..20 {
            let n = 30 + (seed as usize % 4) * 11;
            let r = 1 + (seed as usize) % 4;
            let shape = HankelShape::new(n, None).unwrap();
            let z = random_signal(n, 100 + seed);
            let u = random_orthonormal(shape.n1(), r, 200 + seed);
            let v = random_orthonormal(shape.n2(), r, 300 + seed);
            let tc = tangent_coeffs(&shape, &z, &u, &v).unwrap();
            let out = retract_rank_r(&tc, &u, &v, r).unwrap();
            // Dense oracle: project, full SVD, truncate.
            let w = shape.dense(&z).unwrap();
            let pu = &u * u.adjoint();
            let pv = &v * v.adjoint();
            let proj = &pu * &w + &w * &pv - &pu * &w * &pv;
            let sv = proj.clone().svd(false, false).singular_values;
            for k in 0..r {
                assert!(
                    (out.sigma[k] - sv[k]).abs() < 1e-9 * sv[0],
                    "seed {seed} sigma_{k}: {} vs {}",
                    out.sigma[k],
                    sv[k]
                );
            }
            assert!(orthonormality_defect(&out.u) < 1e-10);
            assert!(orthonormality_defect(&out.v) < 1e-10);
        }
    }

    #[test]
    fn retract_handles_zero_tangent_matrix() {
        let u = random_orthonormal(9, 2, 1);
        let v = random_orthonormal(7, 2, 2);
        let tc = TangentCoeffs {
            c: DMatrix::zeros(2, 2),
            x: DMatrix::zeros(7, 2),
            y: DMatrix::zeros(9, 2),
        };
        let out = retract_rank_r(&tc, &u, &v, 2).unwrap();
        assert_eq!(out.sigma, vec![0.0, 0.0]);
        assert!(orthonormality_defect(&out.u) < 1e-12);
        assert!(orthonormality_defect(&out.v) < 1e-12);
    }

    #[test]
    fn retract_rejects_inconsistent_shapes() {
        let u = random_orthonormal(9, 2, 1);
        let v = random_orthonormal(7, 2, 2);
        let tc = TangentCoeffs {
            c: DMatrix::zeros(2, 2),
            x: DMatrix::zeros(7, 2),
            y: DMatrix::zeros(9, 2),
        };
        assert!(retract_rank_r(&tc, &u, &v, 3).is_err());
        assert!(retract_rank_r(&tc, &u, &v, 0).is_err());
        let bad = TangentCoeffs {
            c: DMatrix::zeros(3, 3),
            x: DMatrix::zeros(7, 2),
            y: DMatrix::zeros(9, 2),
        };
        assert!(retract_rank_r(&bad, &u, &v, 2).is_err());
    }

    #[test]
    fn hard_threshold_keeps_leading_part_of_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(3.0, 0.0),
            c(2.0, 0.0),
            c(1.0, 0.0),
        ]));
        let f = dense_hard_threshold(&m, 2).unwrap();
        assert!((f.sigma[0] - 3.0).abs() < 1e-12);
        assert!((f.sigma[1] - 2.0).abs() < 1e-12);
        let recon = f.recompose();
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            c(3.0, 0.0),
            c(2.0, 0.0),
            c(0.0, 0.0),
        ]));
        assert!((recon - want).norm() < 1e-12);
    }

    #[test]
    fn hard_threshold_of_low_rank_matrix_is_exact() {
        // Rank-1 input with r = 3: the approximation is the matrix itself and
        // the trailing singular values vanish.
        let m = random_matrix(20, 1, 9) * random_matrix(1, 15, 10);
        let f = dense_hard_threshold(&m, 3).unwrap();
        assert!((f.recompose() - &m).norm() < 1e-12 * m.norm());
        assert!(f.sigma[1] < 1e-12 * f.sigma[0]);
        assert!(f.sigma[2] < 1e-12 * f.sigma[0]);
    }

    #[test]
    fn hard_threshold_error_is_tail_energy() {
        let m = random_matrix(20, 15, 11);
        let r = 5;
        let f = dense_hard_threshold(&m, r).unwrap();
        let sv = m.clone().svd(false, false).singular_values;
        let tail: f64 = sv.iter().skip(r).map(|s| s * s).sum();
        let err = (f.recompose() - &m).norm();
        assert!((err * err - tail).abs() < 1e-9 * tail.max(1.0));
    }

    #[test]
    fn hard_threshold_guard_and_validation() {
        let big = DMatrix::<Complex64>::zeros(300, 300);
        match dense_hard_threshold(&big, 2) {
            Err(Error::DenseGuard { .. }) => {}
            other => panic!("expected DenseGuard, got {other:?}"),
        }
        let small = random_matrix(4, 6, 1);
        assert!(dense_hard_threshold(&small, 5).is_err());
        assert!(dense_hard_threshold(&small, 0).is_err());
    }

    #[test]
    fn partial_svd_matches_dense_on_exact_rank() {
        for (n, r, seed) in [(64usize, 3usize, 1u64), (127, 4, 2), (90, 1, 3)] {
            let shape = HankelShape::new(n, None).unwrap();
            let sig = rank_r_signal(n, r, seed);
            let opts = PartialSvdOptions::default();
            let f = partial_svd_hankel(&sig.samples, r, &shape, &opts).unwrap();
            let lift = shape.dense(&sig.samples).unwrap();
            let sv = lift.clone().svd(false, false).singular_values;
            for k in 0..r {
                assert!(
                    (f.sigma[k] - sv[k]).abs() < 1e-8 * sv[0],
                    "n={n} sigma_{k}"
                );
            }
            assert!((f.recompose() - &lift).norm() < 1e-8 * lift.norm());
            assert!(orthonormality_defect(&f.u) < 1e-9);
            assert!(orthonormality_defect(&f.v) < 1e-9);
        }
    }

    #[test]
    fn partial_svd_matches_dense_on_full_rank_signal() {
        // Random signal: the lift has no low-rank structure, but the top
        // triplets must still agree with the dense SVD.
        let n = 60;
        let shape = HankelShape::new(n, None).unwrap();
        let z = random_signal(n, 77);
        let opts = PartialSvdOptions::default();
        let f = partial_svd_hankel(&z, 5, &shape, &opts).unwrap();
        let sv = shape.dense(&z).unwrap().svd(false, false).singular_values;
        for k in 0..5 {
            assert!((f.sigma[k] - sv[k]).abs() < 1e-8 * sv[0], "sigma_{k}");
        }
    }

    #[test]
    fn partial_svd_residual_contract_holds_on_both_sides() {
        let n = 80;
        let shape = HankelShape::new(n, None).unwrap();
        let z = random_signal(n, 13);
        let opts = PartialSvdOptions::default();
        let f = partial_svd_hankel(&z, 4, &shape, &opts).unwrap();
        let p = shape.prepare(&z).unwrap();
        for k in 0..4 {
            let vk: Vec<Complex64> = f.v.column(k).iter().copied().collect();
            let uk: Vec<Complex64> = f.u.column(k).iter().copied().collect();
            let av = shape.matvec_prepared(&p, &vk);
            let au = shape.adjoint_prepared(&p, &uk);
            let fwd: f64 = av
                .iter()
                .zip(uk.iter())
                .map(|(a, u)| (a - u * f.sigma[k]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            let adj: f64 = au
                .iter()
                .zip(vk.iter())
                .map(|(a, v)| (a - v * f.sigma[k]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(fwd <= 1e-9 * f.sigma[0], "forward residual {fwd}");
            assert!(adj <= 1e-9 * f.sigma[0], "adjoint residual {adj}");
        }
    }

    #[test]
    fn partial_svd_of_zero_signal_is_zero_factor() {
        let shape = HankelShape::new(32, None).unwrap();
        let z = vec![Complex64::ZERO; 32];
        let f = partial_svd_hankel(&z, 3, &shape, &PartialSvdOptions::default()).unwrap();
        assert_eq!(f.sigma, vec![0.0; 3]);
        assert!(orthonormality_defect(&f.u) < 1e-12);
    }

    #[test]
    fn partial_svd_single_mode_sigma_is_closed_form() {
        // One undamped mode: the lift is rank one with
        // sigma_1 = |d| sqrt(n1 * n2).
        let n = 64;
        let shape = HankelShape::new(n, None).unwrap();
        let sig = SpectralSignal::from_modes(
            n,
            vec![Mode {
                freq: 0.37,
                damping: 0.0,
                amplitude: c(2.0, 0.0),
            }],
        )
        .unwrap();
        let f = partial_svd_hankel(&sig.samples, 1, &shape, &PartialSvdOptions::default()).unwrap();
        let want = 2.0 * ((shape.n1() * shape.n2()) as f64).sqrt();
        assert!((f.sigma[0] - want).abs() < 1e-8 * want);
    }

    #[test]
    fn partial_svd_failure_carries_best_iterate() {
        let n = 50;
        let shape = HankelShape::new(n, None).unwrap();
        let z = random_signal(n, 21);
        let opts = PartialSvdOptions {
            tol: 0.0, // unattainable
            max_iters: 3,
            ..Default::default()
        };
        match partial_svd_hankel(&z, 3, &shape, &opts) {
            Err(Error::PartialSvd { residual, best, .. }) => {
                assert!(residual.is_finite());
                assert_eq!(best.u.nrows(), shape.n1());
                assert_eq!(best.width(), 3);
                // Ritz values from an orthonormal search space never exceed
                // the true singular values, and three passes already land in
                // the right ballpark even on this full-spectrum input.
                let sv = shape.dense(&z).unwrap().svd(false, false).singular_values;
                assert!(best.sigma[0] <= sv[0] * (1.0 + 1e-9));
                assert!(best.sigma[0] > 0.9 * sv[0], "{} vs {}", best.sigma[0], sv[0]);
            }
            other => panic!("expected PartialSvd error, got {other:?}"),
        }
    }

    #[test]
    fn reorthonormalize_restores_svd_after_row_scaling() {
        let n = 40;
        let shape = HankelShape::new(n, None).unwrap();
        let sig = rank_r_signal(n, 3, 31);
        let lift = shape.dense(&sig.samples).unwrap();
        let mut f = dense_hard_threshold(&lift, 3).unwrap();
        // Simulate trimming: shrink a few rows of both factors.
        for i in [0usize, 5, 11] {
            f.u.row_mut(i).scale_mut(0.5);
            f.v.row_mut(i).scale_mut(0.25);
        }
        let scaled_product = f.recompose();
        let g = f.reorthonormalized().unwrap();
        assert!((g.recompose() - &scaled_product).norm() < 1e-10 * scaled_product.norm());
        assert!(orthonormality_defect(&g.u) < 1e-10);
        assert!(orthonormality_defect(&g.v) < 1e-10);
        let mut prev = f64::INFINITY;
        for &s in &g.sigma {
            assert!(s >= 0.0 && s <= prev);
            prev = s;
        }
    }

    #[test]
    fn zero_factor_shape() {
        let f = LowRankFactor::zero(6, 4, 3);
        assert_eq!(f.u.shape(), (6, 3));
        assert_eq!(f.v.shape(), (4, 3));
        assert_eq!(f.numeric_rank(), 0);
        assert!(f.recompose().norm() == 0.0);
    }

    proptest! {
        #[test]
        fn retract_output_is_valid_factor(seed in 0u64..60) {
            let n = 24 + (seed as usize % 3) * 7;
            let r = 1 + (seed as usize) % 3;
            let shape = HankelShape::new(n, None).unwrap();
            let z = random_signal(n, 1000 + seed);
            let u = random_orthonormal(shape.n1(), r, 2000 + seed);
            let v = random_orthonormal(shape.n2(), r, 3000 + seed);
            let tc = tangent_coeffs(&shape, &z, &u, &v).unwrap();
            let out = retract_rank_r(&tc, &u, &v, r).unwrap();
            prop_assert_eq!(out.sigma.len(), r);
            prop_assert!(orthonormality_defect(&out.u) < 1e-9);
            prop_assert!(orthonormality_defect(&out.v) < 1e-9);
            let mut prev = f64::INFINITY;
            for &s in &out.sigma {
                prop_assert!(s >= 0.0);
                prop_assert!(s <= prev + 1e-12);
                prev = s;
            }
        }
    }
}
