//! Sanity checks for the matrix-free Hankel kernels.
//!
//! The lift of a length-`n` signal is the `n1 x n2` matrix `[Hz]_{ij} =
//! z_{i+j}` with `n1 + n2 = n + 1`.  Nothing in the solver ever materializes
//! it: products with `Hz` and its adjoint are circular convolutions, three
//! FFTs each.  This example verifies the kernels against direct summation at
//! small sizes and then times them at large ones, exercising the identities
//! the algorithms lean on:
//!
//! * `H* H = D^2` with `D^2` diagonal, carrying the anti-diagonal lengths
//!   `w_a = #{(i, j) : i + j = a}`; the pseudo-inverse of the lift is then
//!   the weighted anti-diagonal average `H^+ = D^{-2} H*`;
//! * `G* G = I` for the normalized lift `G = H D^{-1}`.
//!
//! Run with `cargo run --example operator_identities`.

use hankelrec::{
    hankel_adjoint_dense, hankel_dense, hankel_matvec, hankel_matvec_adjoint, make_shape,
    HankelOperator,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

fn rel(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    (num / den).sqrt()
}

fn main() -> Result<(), hankelrec::Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);

    println!("correctness against direct summation");
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12}",
        "n", "matvec", "adjoint", "H*H=D^2", "G*G=I"
    );
    // The dense lift is guarded above 64 x 64 cells, which caps these
    // materialized checks at n = 127; the timing block below is where the
    // kernels earn their keep.
    for n in [16usize, 17, 64, 127] {
        let shape = make_shape(n, None)?;
        let (n1, n2) = (shape.n1(), shape.n2());
        let z = random_vec(&mut rng, n);
        let w = shape.weights();

        // (Hz v)_i = sum_j z_{i+j} v_j.
        let v = random_vec(&mut rng, n2);
        let fast = hankel_matvec(&shape, &z, &v)?;
        let slow: Vec<Complex64> = (0..n1)
            .map(|i| (0..n2).map(|j| z[i + j] * v[j]).sum())
            .collect();
        let e_mv = rel(&fast, &slow);

        // ((Hz)* u)_j = sum_i conj(z_{i+j}) u_i.
        let u = random_vec(&mut rng, n1);
        let fast_a = hankel_matvec_adjoint(&shape, &z, &u)?;
        let slow_a: Vec<Complex64> = (0..n2)
            .map(|j| (0..n1).map(|i| z[i + j].conj() * u[i]).sum())
            .collect();
        let e_adj = rel(&fast_a, &slow_a);

        // Lift densely, fold back by anti-diagonal sums: must equal w .* z.
        let folded = hankel_adjoint_dense(&shape, &hankel_dense(&shape, &z)?)?;
        let weighted: Vec<Complex64> =
            z.iter().zip(w).map(|(x, &wi)| x * wi).collect();
        let e_fold = rel(&folded, &weighted);

        // Same roundtrip on the normalized lift G = H D^{-1} recovers z.
        let scaled: Vec<Complex64> =
            z.iter().zip(w).map(|(x, &wi)| x / wi.sqrt()).collect();
        let g_fold = hankel_adjoint_dense(&shape, &hankel_dense(&shape, &scaled)?)?;
        let back: Vec<Complex64> = g_fold
            .iter()
            .zip(w)
            .map(|(x, &wi)| x / wi.sqrt())
            .collect();
        let e_norm = rel(&back, &z);

        println!("{n:>6} {e_mv:>12.2e} {e_adj:>12.2e} {e_fold:>12.2e} {e_norm:>12.2e}");
    }

    println!("\nkernel cost at sizes where the dense lift stops being an option");
    println!("{:>8} {:>14} {:>16}", "n", "matvec [us]", "dense lift [MB]");
    for n in [4096usize, 16384, 65536, 262144] {
        let shape = make_shape(n, None)?;
        let z = random_vec(&mut rng, n);
        let v = random_vec(&mut rng, shape.n2());
        // Warm once so the timed pass reuses the FFT plan.
        let _ = hankel_matvec(&shape, &z, &v)?;
        let reps = 20;
        let t0 = Instant::now();
        for _ in 0..reps {
            let _ = hankel_matvec(&shape, &z, &v)?;
        }
        let us = t0.elapsed().as_secs_f64() * 1e6 / reps as f64;
        let mb = (shape.n1() * shape.n2() * 16) as f64 / 1e6;
        println!("{n:>8} {us:>14.1} {mb:>16.1}");
    }
    println!("\nthe matvec scales as n log n while the dense lift grows as n^2 / 4.");
    Ok(())
}
