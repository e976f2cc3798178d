#![allow(dead_code)]

use faer::{c64, Mat};
use ph_loewner::linalg::SysMat;
use ph_loewner::lti::{PHRealization, TransferFunction};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat<f64> {
    Mat::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Random asymptotically stable pH system with `M = I`. With `strict` the
/// dissipation block is positive definite (so `D + Dᵀ ≻ 0`), otherwise
/// `P = S = N = 0`.
pub fn random_ph(rng: &mut ChaCha8Rng, n: usize, m: usize, strict: bool) -> PHRealization {
    let a = randn(rng, n, n);
    let j = Mat::from_fn(n, n, |i, k| a[(i, k)] - a[(k, i)]);
    let (r, p, s, nn) = if strict {
        let z = randn(rng, n + m, n + m);
        let w = Mat::from_fn(n + m, n + m, |i, k| {
            (0..n + m).map(|l| z[(i, l)] * z[(k, l)]).sum::<f64>() / (n + m) as f64 + if i == k { 0.1 } else { 0.0 }
        });
        let b = randn(rng, m, m);
        (
            w.as_ref().submatrix(0, 0, n, n).to_owned(),
            w.as_ref().submatrix(0, n, n, m).to_owned(),
            w.as_ref().submatrix(n, n, m, m).to_owned(),
            Mat::from_fn(m, m, |i, k| 0.5 * (b[(i, k)] - b[(k, i)])),
        )
    } else {
        let x = randn(rng, n, n);
        let r = Mat::from_fn(n, n, |i, k| {
            (0..n).map(|l| x[(i, l)] * x[(k, l)]).sum::<f64>() / n as f64 + if i == k { 0.1 } else { 0.0 }
        });
        (r, Mat::zeros(n, m), Mat::zeros(m, m), Mat::zeros(m, m))
    };
    PHRealization::new(
        SysMat::Dense(Mat::identity(n, n)),
        None,
        SysMat::Dense(j),
        SysMat::Dense(r),
        randn(rng, n, m),
        p,
        nn,
        s,
    )
    .expect("valid pH data")
}

/// `max_k ‖G₁(iω_k) − G₂(iω_k)‖_F / max_k ‖G₂(iω_k)‖_F`.
pub fn rel_error(g1: &dyn TransferFunction, g2: &dyn TransferFunction, omega: &[f64]) -> f64 {
    let pts: Vec<c64> = omega.iter().map(|&w| c64::new(0.0, w)).collect();
    let a = g1.transfer_many(&pts).expect("transfer");
    let b = g2.transfer_many(&pts).expect("transfer");
    let fro = |m: &Mat<c64>| m.norm_l2();
    let num = a.iter().zip(&b).map(|(x, y)| fro(&(x - y))).fold(0.0, f64::max);
    let den = b.iter().map(fro).fold(0.0, f64::max);
    num / den
}

/// Smallest eigenvalue of the dissipation block (absolute).
pub fn dissipation_min_eig(ph: &PHRealization) -> f64 {
    let w = ph.dissipation_block();
    let w = Mat::from_fn(w.nrows(), w.ncols(), |i, j| 0.5 * (w[(i, j)] + w[(j, i)]));
    ph_loewner::linalg::sym_eigenvalues(w.as_ref()).expect("eig")[0]
}

/// `‖J + Jᵀ‖_F`.
pub fn j_skew_defect(ph: &PHRealization) -> f64 {
    let j = ph.j.to_dense();
    Mat::from_fn(j.nrows(), j.ncols(), |a, b| j[(a, b)] + j[(b, a)]).norm_l2()
}
