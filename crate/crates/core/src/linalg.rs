//! Dense and sparse matrix helpers shared by the identification modules.
//!
//! Factorizations are delegated to `faer`; this module adds the small set of
//! derived kernels the algorithms need (matrix sign function, Lyapunov
//! solves, eigenvalue utilities) and a compact coordinate-format sparse type
//! used for the large finite-element operators.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat, Side};

use crate::error::{Error, Result};

/// Relative pivot threshold below which an LU factor is declared singular.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-14;

pub fn to_complex(a: MatRef<'_, f64>) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| c64::new(a[(i, j)], 0.0))
}

pub fn real_part(a: MatRef<'_, c64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].re)
}

pub fn imag_part(a: MatRef<'_, c64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].im)
}

pub fn fro(a: MatRef<'_, f64>) -> f64 {
    a.norm_l2()
}

pub fn fro_c(a: MatRef<'_, c64>) -> f64 {
    a.norm_l2()
}

pub fn scale(a: MatRef<'_, f64>, k: f64) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| k * a[(i, j)])
}

pub fn scale_c(a: MatRef<'_, c64>, k: c64) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| k * a[(i, j)])
}

pub fn sym_part(a: MatRef<'_, f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

pub fn skew_part(a: MatRef<'_, f64>) -> Mat<f64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] - a[(j, i)]))
}

/// ‖A + Aᵀ‖_F / ‖A‖_F (zero for the zero matrix).
pub fn skew_defect(a: MatRef<'_, f64>) -> f64 {
    let n = fro(a);
    if n == 0.0 {
        return 0.0;
    }
    let s = Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] + a[(j, i)]);
    fro(s.as_ref()) / n
}

/// ‖A − Aᵀ‖_F / ‖A‖_F (zero for the zero matrix).
pub fn sym_defect(a: MatRef<'_, f64>) -> f64 {
    let n = fro(a);
    if n == 0.0 {
        return 0.0;
    }
    let s = Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] - a[(j, i)]);
    fro(s.as_ref()) / n
}

pub fn block_diag(blocks: &[MatRef<'_, f64>]) -> Mat<f64> {
    let nr: usize = blocks.iter().map(|b| b.nrows()).sum();
    let nc: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(nr, nc);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.as_mut()
            .submatrix_mut(r0, c0, b.nrows(), b.ncols())
            .copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

pub fn hstack(blocks: &[MatRef<'_, f64>]) -> Mat<f64> {
    let nr = blocks.first().map_or(0, |b| b.nrows());
    let nc: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(nr, nc);
    let mut c0 = 0;
    for b in blocks {
        out.as_mut().submatrix_mut(0, c0, nr, b.ncols()).copy_from(b);
        c0 += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[MatRef<'_, f64>]) -> Mat<f64> {
    let nc = blocks.first().map_or(0, |b| b.ncols());
    let nr: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(nr, nc);
    let mut r0 = 0;
    for b in blocks {
        out.as_mut().submatrix_mut(r0, 0, b.nrows(), nc).copy_from(b);
        r0 += b.nrows();
    }
    out
}

pub fn hstack_c(blocks: &[MatRef<'_, c64>]) -> Mat<c64> {
    let nr = blocks.first().map_or(0, |b| b.nrows());
    let nc: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(nr, nc);
    let mut c0 = 0;
    for b in blocks {
        out.as_mut().submatrix_mut(0, c0, nr, b.ncols()).copy_from(b);
        c0 += b.ncols();
    }
    out
}

pub fn vstack_c(blocks: &[MatRef<'_, c64>]) -> Mat<c64> {
    let nc = blocks.first().map_or(0, |b| b.ncols());
    let nr: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(nr, nc);
    let mut r0 = 0;
    for b in blocks {
        out.as_mut().submatrix_mut(r0, 0, b.nrows(), nc).copy_from(b);
        r0 += b.nrows();
    }
    out
}

fn lu_is_singular_c(u: MatRef<'_, c64>) -> bool {
    let n = u.nrows().min(u.ncols());
    if n == 0 {
        return false;
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in 0..n {
        let v = u[(i, i)].norm();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    !(hi > 0.0) || lo <= SINGULAR_PIVOT_TOL * hi || !lo.is_finite()
}

fn lu_is_singular(u: MatRef<'_, f64>) -> bool {
    let n = u.nrows().min(u.ncols());
    if n == 0 {
        return false;
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in 0..n {
        let v = u[(i, i)].abs();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    !(hi > 0.0) || lo <= SINGULAR_PIVOT_TOL * hi || !lo.is_finite()
}

/// Solves `a x = b` for complex dense `a`; `None` when `a` is numerically singular.
/// Rows are equilibrated first so that badly scaled but regular systems pass.
pub fn solve_c(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Option<Mat<c64>> {
    let w: Vec<f64> = (0..a.nrows())
        .map(|i| {
            let m = (0..a.ncols()).map(|j| a[(i, j)].norm()).fold(0.0, f64::max);
            if m > 0.0 { 1.0 / m } else { 1.0 }
        })
        .collect();
    let a = Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * w[i]);
    let b = Mat::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] * w[i]);
    let lu = a.partial_piv_lu();
    if lu_is_singular_c(lu.U()) {
        return None;
    }
    let x = lu.solve(&b);
    all_finite_c(x.as_ref()).then_some(x)
}

/// Solves `a x = b` for real dense `a`; `None` when `a` is numerically singular.
pub fn solve(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Option<Mat<f64>> {
    let w: Vec<f64> = (0..a.nrows())
        .map(|i| {
            let m = (0..a.ncols()).map(|j| a[(i, j)].abs()).fold(0.0, f64::max);
            if m > 0.0 { 1.0 / m } else { 1.0 }
        })
        .collect();
    let a = Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * w[i]);
    let b = Mat::from_fn(b.nrows(), b.ncols(), |i, j| b[(i, j)] * w[i]);
    let lu = a.partial_piv_lu();
    if lu_is_singular(lu.U()) {
        return None;
    }
    let x = lu.solve(&b);
    all_finite(x.as_ref()).then_some(x)
}

pub fn inverse(a: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let lu = a.partial_piv_lu();
    if lu_is_singular(lu.U()) {
        return Err(Error::Numerical("matrix is numerically singular".into()));
    }
    Ok(lu.inverse())
}

/// log|det a| from the LU factors (−∞ for a singular factor).
pub fn log_abs_det(a: MatRef<'_, f64>) -> f64 {
    let lu = a.partial_piv_lu();
    let u = lu.U();
    (0..u.nrows()).map(|i| u[(i, i)].abs().ln()).sum()
}

pub fn all_finite(a: MatRef<'_, f64>) -> bool {
    (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)].is_finite()))
}

pub fn all_finite_c(a: MatRef<'_, c64>) -> bool {
    (0..a.ncols()).all(|j| (0..a.nrows()).all(|i| a[(i, j)].re.is_finite() && a[(i, j)].im.is_finite()))
}

/// Eigenvalues of a real symmetric matrix in ascending order.
pub fn sym_eigenvalues(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let s = sym_part(a);
    let mut ev = s
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigensolver: {e:?}")))?;
    ev.sort_by(|x, y| x.total_cmp(y));
    Ok(ev)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn herm_eigenvalues(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let h = Mat::from_fn(a.nrows(), a.ncols(), |i, j| (a[(i, j)] + a[(j, i)].conj()) * 0.5);
    let mut ev = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("hermitian eigensolver: {e:?}")))?;
    ev.sort_by(|x, y| x.total_cmp(y));
    Ok(ev)
}

/// Symmetric eigendecomposition `a = U diag(w) Uᵀ`.
pub fn sym_eigen(a: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let s = sym_part(a);
    let e = s
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigensolver: {e:?}")))?;
    let w: Vec<f64> = (0..a.nrows()).map(|i| e.S()[i]).collect();
    Ok((w, e.U().to_owned()))
}

pub fn eigenvalues(a: MatRef<'_, f64>) -> Result<Vec<c64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))
}

/// Eigendecomposition of a real matrix: eigenvalues and complex eigenvectors.
pub fn eigen(a: MatRef<'_, f64>) -> Result<(Vec<c64>, Mat<c64>)> {
    let e = a
        .eigen()
        .map_err(|e| Error::Numerical(format!("eigensolver: {e:?}")))?;
    let w = (0..a.nrows()).map(|i| e.S()[i]).collect();
    Ok((w, e.U().to_owned()))
}

/// Generalized eigendecomposition of the real pencil `(a, e)` as
/// `(α, β, right eigenvectors)` with eigenvalues `α/β`.
///
/// Calls the low-level QZ driver directly: the high-level wrapper
/// under-allocates its workspace for very small pencils. The Schur form is
/// always computed with the unblocked sweep; on some pencils of size ~80 the
/// blocked sweep takes seconds and the eigenvalue-only mode misreports
/// finite eigenvalues as infinite.
pub fn gevd(a: MatRef<'_, f64>, e: MatRef<'_, f64>, vectors: bool) -> Result<(Vec<c64>, Vec<f64>, Option<Mat<c64>>)> {
    use faer::dyn_stack::{MemBuffer, MemStack, StackReq};
    use faer::linalg::evd::ComputeEigenvectors;
    use faer::linalg::gevd as qz;

    let n = a.nrows();
    if e.nrows() != n || e.ncols() != n || a.ncols() != n {
        return Err(Error::Dimension("generalized eigenproblem needs square pencils of equal size".into()));
    }
    if n == 0 {
        return Ok((Vec::new(), Vec::new(), vectors.then(|| Mat::zeros(0, 0))));
    }
    let par = faer::get_global_parallelism();
    let mut params: qz::GevdParams = faer::auto!(f64);
    params.schur.blocking_threshold = usize::MAX;
    let req = qz::gevd_scratch::<f64>(n, ComputeEigenvectors::No, ComputeEigenvectors::Yes, par, params.into())
        .or(StackReq::new::<f64>(n * (n + 8) + 512));
    let mut buf = MemBuffer::new(req);
    let mut aw = a.to_owned();
    let mut ew = e.to_owned();
    let mut s_re = faer::diag::Diag::<f64>::zeros(n);
    let mut s_im = faer::diag::Diag::<f64>::zeros(n);
    let mut beta = faer::diag::Diag::<f64>::zeros(n);
    let mut u = Mat::<f64>::zeros(n, n);
    qz::gevd_real(
        aw.as_mut(),
        ew.as_mut(),
        s_re.as_mut(),
        s_im.as_mut(),
        beta.as_mut(),
        None,
        Some(u.as_mut()),
        par,
        MemStack::new(&mut buf),
        params.into(),
    )
    .map_err(|err| Error::Numerical(format!("QZ failed: {err:?}")))?;
    let mut alpha: Vec<c64> = (0..n).map(|i| c64::new(s_re[i], s_im[i])).collect();
    let mut beta: Vec<f64> = (0..n).map(|i| beta[i]).collect();
    // The driver's (α, β) for the second member of a complex pair can be
    // inaccurate; recompute both from the 2×2 block of the Schur pair.
    let mut j = 0;
    while j + 1 < n {
        if s_im[j] != 0.0 {
            let (s11, s12, s21, s22) = (aw[(j, j)], aw[(j, j + 1)], aw[(j + 1, j)], aw[(j + 1, j + 1)]);
            let (t11, t12, t22) = (ew[(j, j)], ew[(j, j + 1)], ew[(j + 1, j + 1)]);
            let qa = t11 * t22;
            let qb = s11 * t22 + s22 * t11 - s21 * t12;
            let qc = s11 * s22 - s12 * s21;
            let disc = qb * qb - 4.0 * qa * qc;
            if qa != 0.0 && disc < 0.0 {
                let bb = qa.abs().sqrt();
                let lam = c64::new(qb / (2.0 * qa), (-disc).sqrt() / (2.0 * qa.abs()));
                alpha[j] = lam * bb;
                alpha[j + 1] = lam.conj() * bb;
                beta[j] = bb;
                beta[j + 1] = bb;
            }
            j += 2;
        } else {
            j += 1;
        }
    }
    let vecs = vectors.then(|| {
        let mut uc = Mat::<c64>::zeros(n, n);
        let mut j = 0;
        while j < n {
            if s_im[j] == 0.0 || j + 1 == n {
                for i in 0..n {
                    uc[(i, j)] = c64::new(u[(i, j)], 0.0);
                }
                j += 1;
            } else {
                for i in 0..n {
                    uc[(i, j)] = c64::new(u[(i, j)], u[(i, j + 1)]);
                    uc[(i, j + 1)] = c64::new(u[(i, j)], -u[(i, j + 1)]);
                }
                j += 2;
            }
        }
        refine_pairs(a, e, &alpha, &beta, &s_im, &mut uc);
        uc
    });
    Ok((alpha, beta, vecs))
}

/// Inverse iteration on complex-pair eigenvectors whose residual is poor.
fn refine_pairs(a: MatRef<'_, f64>, e: MatRef<'_, f64>, alpha: &[c64], beta: &[f64], s_im: &faer::diag::Diag<f64>, u: &mut Mat<c64>) {
    let n = a.nrows();
    let ac = to_complex(a);
    let ec = to_complex(e);
    let scale = fro(a) + fro(e);
    let mut j = 0;
    while j + 1 < n {
        if s_im[j] == 0.0 || beta[j] == 0.0 {
            j += 1;
            continue;
        }
        let lam = alpha[j] / beta[j];
        let shifted = Mat::from_fn(n, n, |r, c| ac[(r, c)] - lam * ec[(r, c)]);
        let resid = |v: &Mat<c64>| {
            let nv = fro_c(v.as_ref());
            fro_c((&shifted * v).as_ref()) / ((1.0 + lam.norm()) * scale * nv.max(f64::MIN_POSITIVE))
        };
        let mut v = Mat::from_fn(n, 1, |r, _| u[(r, j)]);
        if resid(&v) > 1e-11 {
            let pert = lam * (1.0 + 1e-12) + c64::new(1e-14 * scale, 0.0);
            let op = Mat::from_fn(n, n, |r, c| ac[(r, c)] - pert * ec[(r, c)]);
            for _ in 0..3 {
                let rhs = &ec * &v;
                let Some(y) = solve_c(op.as_ref(), rhs.as_ref()) else { break };
                let ny = fro_c(y.as_ref());
                if !(ny.is_finite() && ny > 0.0) {
                    break;
                }
                v = Mat::from_fn(n, 1, |r, _| y[(r, 0)] / ny);
            }
            for r in 0..n {
                u[(r, j)] = v[(r, 0)];
                u[(r, j + 1)] = v[(r, 0)].conj();
            }
        }
        j += 2;
    }
}

/// Finite generalized eigenvalues of the real pencil `(a, e)`; pairs with
/// `|β| ≤ inf_tol · max|β|` are treated as infinite and dropped.
pub fn generalized_eigenvalues(a: MatRef<'_, f64>, e: MatRef<'_, f64>, inf_tol: f64) -> Result<Vec<c64>> {
    let (alpha, beta, _) = gevd(a, e, false)?;
    let bmax = beta.iter().map(|b| b.abs()).fold(0.0, f64::max);
    Ok(alpha
        .iter()
        .zip(&beta)
        .filter(|(_, b)| b.abs() > inf_tol * bmax)
        .map(|(a, b)| a / *b)
        .collect())
}

/// Thin SVD `a = U diag(s) Vᴴ` of a complex matrix with singular values
/// in descending order.
pub fn svd_c(a: MatRef<'_, c64>) -> Result<(Mat<c64>, Vec<f64>, Mat<c64>)> {
    let svd = a
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    let k = a.nrows().min(a.ncols());
    let s: Vec<f64> = (0..k).map(|i| svd.S()[i].re).collect();
    Ok((svd.U().to_owned(), s, svd.V().to_owned()))
}

pub fn svd(a: MatRef<'_, f64>) -> Result<(Mat<f64>, Vec<f64>, Mat<f64>)> {
    let svd = a
        .thin_svd()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    let k = a.nrows().min(a.ncols());
    let s: Vec<f64> = (0..k).map(|i| svd.S()[i]).collect();
    Ok((svd.U().to_owned(), s, svd.V().to_owned()))
}

pub fn singular_values(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))
}

pub fn singular_values_c(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))
}

/// Spectral norm of a complex matrix.
pub fn norm2_c(a: MatRef<'_, c64>) -> f64 {
    singular_values_c(a)
        .ok()
        .and_then(|s| s.first().copied())
        .unwrap_or_else(|| fro_c(a))
}

/// Lower Cholesky factor `a = L Lᵀ`; `None` when `a` is not positive definite.
pub fn cholesky(a: MatRef<'_, f64>) -> Option<Mat<f64>> {
    let s = sym_part(a);
    s.llt(Side::Lower).ok().map(|f| f.L().to_owned())
}

/// Matrix sign function by the scaled Newton iteration
/// `X ← (cX + (cX)⁻¹)/2`, `c = |det X|^{-1/n}`.
///
/// Requires `a` to have no eigenvalue on the imaginary axis.
pub fn matrix_sign(a: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let n = a.nrows();
    let mut x = a.to_owned();
    if n == 0 {
        return Ok(x);
    }
    let mut scaling = true;
    for _ in 0..100 {
        let xinv = inverse(x.as_ref()).map_err(|_| {
            Error::Numerical("sign iteration hit a singular iterate (eigenvalue on the imaginary axis)".into())
        })?;
        let c = if scaling {
            let ld = log_abs_det(x.as_ref());
            (-ld / n as f64).exp()
        } else {
            1.0
        };
        let next = Mat::from_fn(n, n, |i, j| 0.5 * (c * x[(i, j)] + xinv[(i, j)] / c));
        let diff = fro((&next - &x).as_ref());
        let nrm = fro(next.as_ref());
        x = next;
        if diff <= 1e-3 * nrm {
            scaling = false;
        }
        if diff <= 1e-13 * nrm {
            return Ok(x);
        }
    }
    Err(Error::Numerical("matrix sign iteration did not converge".into()))
}

/// Solves the Lyapunov equation `A X + X Aᵀ + W = 0` for Hurwitz `A` with
/// the sign-function iteration; the result is symmetrized.
pub fn lyapunov(a: MatRef<'_, f64>, w: MatRef<'_, f64>) -> Result<Mat<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let mut ak = a.to_owned();
    let mut qk = sym_part(w);
    let mut scaling = true;
    for _ in 0..100 {
        let ainv = inverse(ak.as_ref())
            .map_err(|_| Error::Numerical("Lyapunov iteration: singular iterate".into()))?;
        let c = if scaling {
            (-log_abs_det(ak.as_ref()) / n as f64).exp()
        } else {
            1.0
        };
        let aq = &ainv * &qk;
        let aqa = &aq * ainv.transpose();
        let a_next = Mat::from_fn(n, n, |i, j| 0.5 * (c * ak[(i, j)] + ainv[(i, j)] / c));
        let q_next = Mat::from_fn(n, n, |i, j| 0.5 * (c * qk[(i, j)] + aqa[(i, j)] / c));
        // converged when A_k → −I
        let mut dev = 0.0;
        for j in 0..n {
            for i in 0..n {
                let t = a_next[(i, j)] + if i == j { 1.0 } else { 0.0 };
                dev += t * t;
            }
        }
        let dev = dev.sqrt() / (n as f64).sqrt();
        ak = a_next;
        qk = sym_part(q_next.as_ref());
        if dev <= 1e-3 {
            scaling = false;
        }
        if dev <= 1e-14 {
            break;
        }
    }
    let mut dev = 0.0;
    for j in 0..n {
        for i in 0..n {
            let t = ak[(i, j)] + if i == j { 1.0 } else { 0.0 };
            dev += t * t;
        }
    }
    if dev.sqrt() > 1e-8 * (n as f64).sqrt() {
        return Err(Error::Numerical(
            "Lyapunov iteration did not converge (is A Hurwitz?)".into(),
        ));
    }
    Ok(scale(qk.as_ref(), 0.5))
}

/// Orthonormal basis (n × k) of the dominant k-dimensional range of `a`.
pub fn range_basis(a: MatRef<'_, f64>, k: usize) -> Result<Mat<f64>> {
    let (u, _, _) = svd(a)?;
    Ok(u.as_ref().submatrix(0, 0, a.nrows(), k).to_owned())
}

/// Sparse matrix in canonical coordinate form: entries sorted by
/// `(col, row)` with duplicates merged.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            entries: (0..n).map(|i| (i, i, 1.0)).collect(),
        }
    }

    /// Builds from `(row, col, value)` triplets, summing duplicates.
    /// Explicit zeros are kept so that the pattern is deterministic.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(i, j, _)) = trip.iter().find(|(i, j, _)| *i >= nrows || *j >= ncols) {
            return Err(Error::Dimension(format!(
                "triplet ({i}, {j}) outside a {nrows}x{ncols} matrix"
            )));
        }
        trip.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(trip.len());
        for (i, j, v) in trip {
            match entries.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => entries.push((i, j, v)),
            }
        }
        Ok(Self { nrows, ncols, entries })
    }

    pub fn from_dense(a: MatRef<'_, f64>) -> Self {
        let mut entries = Vec::new();
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                if a[(i, j)] != 0.0 {
                    entries.push((i, j, a[(i, j)]));
                }
            }
        }
        Self {
            nrows: a.nrows(),
            ncols: a.ncols(),
            entries,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries
            .binary_search_by(|e| (e.1, e.0).cmp(&(j, i)))
            .map(|k| self.entries[k].2)
            .unwrap_or(0.0)
    }

    pub fn transpose(&self) -> Self {
        let trip = self.entries.iter().map(|&(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, trip).expect("transpose keeps bounds")
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            nrows: self.nrows,
            ncols: self.ncols,
            entries: self.entries.iter().map(|&(i, j, v)| (i, j, k * v)).collect(),
        }
    }

    /// `alpha·self + beta·other`, keeping the union pattern.
    pub fn axpby(&self, alpha: f64, other: &SparseMatrix, beta: f64) -> Result<Self> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::Dimension("sparse add shape mismatch".into()));
        }
        let trip = self
            .entries
            .iter()
            .map(|&(i, j, v)| (i, j, alpha * v))
            .chain(other.entries.iter().map(|&(i, j, v)| (i, j, beta * v)))
            .collect();
        Self::from_triplets(self.nrows, self.ncols, trip)
    }

    pub fn mul_dense(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        let mut y = Mat::zeros(self.nrows, x.ncols());
        for &(i, j, v) in &self.entries {
            for c in 0..x.ncols() {
                y[(i, c)] += v * x[(j, c)];
            }
        }
        y
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, j, v)| x[i] * v * x[j]).sum()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut a = Mat::zeros(self.nrows, self.ncols);
        for &(i, j, v) in &self.entries {
            a[(i, j)] += v;
        }
        a
    }

    pub fn fro_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.2 * e.2).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `self + selfᵀ`, computed on the pattern.
    pub fn skew_defect_abs(&self) -> f64 {
        let t = self.transpose();
        self.axpby(1.0, &t, 1.0).map(|s| s.fro_norm()).unwrap_or(f64::INFINITY)
    }

    pub fn sym_defect_abs(&self) -> f64 {
        let t = self.transpose();
        self.axpby(1.0, &t, -1.0).map(|s| s.fro_norm()).unwrap_or(f64::INFINITY)
    }

    pub fn to_faer(&self) -> SparseColMat<usize, f64> {
        let trip: Vec<_> = self.entries.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip)
            .expect("canonical triplets are valid")
    }

    /// Symmetric positive definiteness test by sparse Cholesky of
    /// `self + shift·I`.
    pub fn is_spd_with_shift(&self, shift: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let shifted = match self.axpby(1.0, &SparseMatrix::identity(self.nrows), shift) {
            Ok(s) => s,
            Err(_) => return false,
        };
        let sym = shifted.axpby(0.5, &shifted.transpose(), 0.5).expect("square");
        sym.to_faer().sp_cholesky(Side::Lower).is_ok()
    }
}

/// System matrix storage: dense, or sparse for large finite-element models.
#[derive(Debug, Clone)]
pub enum SysMat {
    Dense(Mat<f64>),
    Sparse(SparseMatrix),
}

impl SysMat {
    pub fn nrows(&self) -> usize {
        match self {
            SysMat::Dense(a) => a.nrows(),
            SysMat::Sparse(a) => a.nrows(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            SysMat::Dense(a) => a.ncols(),
            SysMat::Sparse(a) => a.ncols(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, SysMat::Sparse(_))
    }

    pub fn to_dense(&self) -> Mat<f64> {
        match self {
            SysMat::Dense(a) => a.clone(),
            SysMat::Sparse(a) => a.to_dense(),
        }
    }

    pub fn to_sparse(&self) -> SparseMatrix {
        match self {
            SysMat::Dense(a) => SparseMatrix::from_dense(a.as_ref()),
            SysMat::Sparse(a) => a.clone(),
        }
    }

    pub fn identity_dense(n: usize) -> Self {
        SysMat::Dense(Mat::identity(n, n))
    }

    pub fn mul_dense(&self, x: MatRef<'_, f64>) -> Mat<f64> {
        match self {
            SysMat::Dense(a) => a * x,
            SysMat::Sparse(a) => a.mul_dense(x),
        }
    }

    pub fn transpose(&self) -> SysMat {
        match self {
            SysMat::Dense(a) => SysMat::Dense(a.transpose().to_owned()),
            SysMat::Sparse(a) => SysMat::Sparse(a.transpose()),
        }
    }

    /// `alpha·self + beta·other`; sparse only when both operands are sparse.
    pub fn axpby(&self, alpha: f64, other: &SysMat, beta: f64) -> Result<SysMat> {
        if self.nrows() != other.nrows() || self.ncols() != other.ncols() {
            return Err(Error::Dimension("system matrix shape mismatch".into()));
        }
        Ok(match (self, other) {
            (SysMat::Sparse(a), SysMat::Sparse(b)) => SysMat::Sparse(a.axpby(alpha, b, beta)?),
            _ => {
                let a = self.to_dense();
                let b = other.to_dense();
                SysMat::Dense(Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
                    alpha * a[(i, j)] + beta * b[(i, j)]
                }))
            }
        })
    }

    /// `self · other` (dense result unless both are sparse and one is the identity).
    pub fn matmul(&self, other: &SysMat) -> SysMat {
        match (self, other) {
            (SysMat::Sparse(a), SysMat::Sparse(b)) if *b == SparseMatrix::identity(b.nrows()) => {
                SysMat::Sparse(a.clone())
            }
            (SysMat::Sparse(a), SysMat::Sparse(b)) if *a == SparseMatrix::identity(a.nrows()) => {
                SysMat::Sparse(b.clone())
            }
            _ => SysMat::Dense(self.mul_dense(other.to_dense().as_ref())),
        }
    }

    pub fn fro_norm(&self) -> f64 {
        match self {
            SysMat::Dense(a) => fro(a.as_ref()),
            SysMat::Sparse(a) => a.fro_norm(),
        }
    }

    /// Triplet view `(row, col, value)` of the nonzero pattern.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        match self {
            SysMat::Dense(a) => {
                let mut t = Vec::new();
                for j in 0..a.ncols() {
                    for i in 0..a.nrows() {
                        if a[(i, j)] != 0.0 {
                            t.push((i, j, a[(i, j)]));
                        }
                    }
                }
                t
            }
            SysMat::Sparse(a) => a.entries().to_vec(),
        }
    }
}

impl From<Mat<f64>> for SysMat {
    fn from(a: Mat<f64>) -> Self {
        SysMat::Dense(a)
    }
}

impl From<SparseMatrix> for SysMat {
    fn from(a: SparseMatrix) -> Self {
        SysMat::Sparse(a)
    }
}

/// Reusable sparse LU solver for shifted pencils `s·E − A` sharing one
/// sparsity pattern.
pub struct ShiftedSparseSolver {
    n: usize,
    e_entries: Vec<(usize, usize, f64)>,
    a_entries: Vec<(usize, usize, f64)>,
    symbolic: faer::sparse::linalg::solvers::SymbolicLu<usize>,
}

impl ShiftedSparseSolver {
    /// `e = None` stands for the identity.
    pub fn new(e: Option<&SysMat>, a: &SysMat) -> Result<Self> {
        let n = a.nrows();
        let e_entries = match e {
            Some(e) => e.triplets(),
            None => (0..n).map(|i| (i, i, 1.0)).collect(),
        };
        let a_entries = a.triplets();
        let pattern = Self::assemble(n, &e_entries, &a_entries, c64::new(1.0, 1.0));
        let symbolic = faer::sparse::linalg::solvers::SymbolicLu::try_new(pattern.symbolic())
            .map_err(|e| Error::Numerical(format!("symbolic LU: {e:?}")))?;
        Ok(Self {
            n,
            e_entries,
            a_entries,
            symbolic,
        })
    }

    fn assemble(
        n: usize,
        e: &[(usize, usize, f64)],
        a: &[(usize, usize, f64)],
        s: c64,
    ) -> SparseColMat<usize, c64> {
        let trip: Vec<_> = e
            .iter()
            .map(|&(i, j, v)| Triplet::new(i, j, s * v))
            .chain(a.iter().map(|&(i, j, v)| Triplet::new(i, j, c64::new(-v, 0.0))))
            .collect();
        SparseColMat::try_new_from_triplets(n, n, &trip).expect("pencil triplets in bounds")
    }

    /// Solves `(sE − A) X = rhs`.
    pub fn solve(&self, s: c64, rhs: MatRef<'_, c64>) -> Result<Mat<c64>> {
        let m = Self::assemble(self.n, &self.e_entries, &self.a_entries, s);
        let lu = faer::sparse::linalg::solvers::Lu::try_new_with_symbolic(self.symbolic.clone(), m.as_ref())
            .map_err(|_| Error::SingularShift { s })?;
        let x = lu.solve(rhs);
        if !all_finite_c(x.as_ref()) {
            return Err(Error::SingularShift { s });
        }
        // residual check: faer only reports exactly zero pivots
        let mut r = rhs.to_owned();
        for &(i, j, v) in &self.e_entries {
            for c in 0..x.ncols() {
                r[(i, c)] -= s * v * x[(j, c)];
            }
        }
        for &(i, j, v) in &self.a_entries {
            for c in 0..x.ncols() {
                r[(i, c)] += x[(j, c)] * v;
            }
        }
        let xn = fro_c(x.as_ref());
        let rn = fro_c(r.as_ref());
        if rn > 1e-6 * fro_c(rhs) || !(xn < 1e300) {
            return Err(Error::SingularShift { s });
        }
        Ok(x)
    }
}

/// Real sparse LU with one step of iterative refinement per solve.
pub struct SparseLu {
    a: SparseMatrix,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl SparseLu {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension("sparse LU needs a square matrix".into()));
        }
        let m = a.to_faer();
        let sym = faer::sparse::linalg::solvers::SymbolicLu::try_new(m.symbolic())
            .map_err(|e| Error::Numerical(format!("symbolic LU: {e:?}")))?;
        let lu = faer::sparse::linalg::solvers::Lu::try_new_with_symbolic(sym, m.as_ref())
            .map_err(|e| Error::Numerical(format!("sparse LU: {e:?}")))?;
        Ok(Self { a: a.clone(), lu })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = rhs.len();
        let b = Mat::from_fn(n, 1, |i, _| rhs[i]);
        let x = self.lu.solve(b.as_ref());
        let ax = self.a.mul_vec(&x.col(0).iter().copied().collect::<Vec<_>>());
        let r = Mat::from_fn(n, 1, |i, _| rhs[i] - ax[i]);
        let dx = self.lu.solve(r.as_ref());
        let out: Vec<f64> = (0..n).map(|i| x[(i, 0)] + dx[(i, 0)]).collect();
        if out.iter().all(|v| v.is_finite()) {
            Ok(out)
        } else {
            Err(Error::Numerical("sparse solve produced non-finite values".into()))
        }
    }
}
