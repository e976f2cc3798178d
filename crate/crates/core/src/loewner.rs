//! Loewner / shifted-Loewner pencils, realification, order detection and
//! SVD-projected realizations.

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lti::{ComplexRealization, DescriptorRealization};
use crate::linalg::SysMat;
use crate::tangential::{LeftData, RightData};

/// Default relative rank tolerance.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Loewner pencil with the data matrices it was built from.
///
/// `lambda` (k×k) and `mu` (q×q) are diagonal for raw data and become
/// 2×2-block diagonal after [`realify`]; `l` and `v` are q×m, `r` and `w`
/// are m×k.
#[derive(Debug, Clone)]
pub struct LoewnerPencil {
    pub ll: Mat<c64>,
    pub sll: Mat<c64>,
    pub v: Mat<c64>,
    pub w: Mat<c64>,
    pub l: Mat<c64>,
    pub r: Mat<c64>,
    pub lambda: Mat<c64>,
    pub mu: Mat<c64>,
}

fn diag(points: &[c64]) -> Mat<c64> {
    Mat::from_fn(points.len(), points.len(), |i, j| if i == j { points[i] } else { c64::new(0.0, 0.0) })
}

/// Entrywise Loewner construction
/// `𝕃_ij = (v_iᵀ r_j − l_iᵀ w_j)/(μ_i − λ_j)`,
/// `σ𝕃_ij = (μ_i v_iᵀ r_j − λ_j l_iᵀ w_j)/(μ_i − λ_j)`.
pub fn build_loewner(right: &RightData, left: &LeftData) -> Result<LoewnerPencil> {
    let m = right.ports();
    if left.ports() != m {
        return Err(Error::Dimension(format!("right data has {m} ports, left data {}", left.ports())));
    }
    let k = right.len();
    let q = left.len();
    for (i, &mu) in left.mu.iter().enumerate() {
        for (j, &la) in right.lambda.iter().enumerate() {
            if (mu - la).norm() <= 1e-13 * (mu.norm() + la.norm()) || mu == la {
                return Err(Error::CoincidentPoints { i, j, point: mu });
            }
        }
    }
    let vr = left.v.transpose() * &right.r;
    let lw = left.l.transpose() * &right.w;
    let ll = Mat::from_fn(q, k, |i, j| (vr[(i, j)] - lw[(i, j)]) / (left.mu[i] - right.lambda[j]));
    let sll = Mat::from_fn(q, k, |i, j| {
        (left.mu[i] * vr[(i, j)] - right.lambda[j] * lw[(i, j)]) / (left.mu[i] - right.lambda[j])
    });
    Ok(LoewnerPencil {
        ll,
        sll,
        v: left.v.transpose().to_owned(),
        w: right.w.clone(),
        l: left.l.transpose().to_owned(),
        r: right.r.clone(),
        lambda: diag(&right.lambda),
        mu: diag(&left.mu),
    })
}

/// Relative Frobenius residuals of `M𝕃 − 𝕃Λ = VR − LW` and
/// `Mσ𝕃 − σ𝕃Λ = MVR − LWΛ`.
pub fn sylvester_residual(p: &LoewnerPencil) -> (f64, f64) {
    let rel = |terms: [Mat<c64>; 4]| {
        let res = &(&terms[0] - &terms[1]) - &(&terms[2] - &terms[3]);
        let den: f64 = terms.iter().map(|t| linalg::fro_c(t.as_ref())).sum();
        if den == 0.0 { 0.0 } else { linalg::fro_c(res.as_ref()) / den }
    };
    let r1 = rel([&p.mu * &p.ll, &p.ll * &p.lambda, &p.v * &p.r, &p.l * &p.w]);
    let r2 = rel([&p.mu * &p.sll, &p.sll * &p.lambda, &p.mu * &p.v * &p.r, &p.l * &p.w * &p.lambda]);
    (r1, r2)
}

/// Unitary `T` with 2×2 blocks `(1/√2)[[1, −i], [1, i]]` for each adjacent
/// conjugate pair of `points` and 1 for real points.
fn realifier(points: &[c64]) -> Result<Mat<c64>> {
    let n = points.len();
    let mut t = Mat::zeros(n, n);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut j = 0;
    while j < n {
        let p = points[j];
        if p.im.abs() <= 1e-14 * p.norm() {
            t[(j, j)] = c64::new(1.0, 0.0);
            j += 1;
            continue;
        }
        if j + 1 >= n || (points[j + 1] - p.conj()).norm() > 1e-12 * p.norm() {
            return Err(Error::Invalid(format!(
                "point {p} at position {j} is not followed by its conjugate; close the data first"
            )));
        }
        t[(j, j)] = c64::new(h, 0.0);
        t[(j + 1, j)] = c64::new(h, 0.0);
        t[(j, j + 1)] = c64::new(0.0, -h);
        t[(j + 1, j + 1)] = c64::new(0.0, h);
        j += 2;
    }
    Ok(t)
}

fn diagonal_of(m: &Mat<c64>) -> Vec<c64> {
    (0..m.nrows()).map(|i| m[(i, i)]).collect()
}

fn strip_imag(m: &Mat<c64>, what: &str) -> Result<Mat<c64>> {
    let re = linalg::real_part(m.as_ref());
    let im = linalg::imag_part(m.as_ref());
    let scale = linalg::fro(re.as_ref()).max(linalg::fro(im.as_ref()));
    if linalg::fro(im.as_ref()) > 1e-10 * scale {
        return Err(Error::Invalid(format!(
            "realified {what} keeps a relative imaginary part of {:.2e}; the data are not closed under conjugation",
            linalg::fro(im.as_ref()) / scale
        )));
    }
    Ok(linalg::to_complex(re.as_ref()))
}

/// Applies `T_Lᴴ (·) T_R` so that a conjugate-closed pencil becomes real.
pub fn realify(p: &LoewnerPencil) -> Result<LoewnerPencil> {
    let tr = realifier(&diagonal_of(&p.lambda))?;
    let tl = realifier(&diagonal_of(&p.mu))?;
    let tlh = tl.adjoint().to_owned();
    Ok(LoewnerPencil {
        ll: strip_imag(&(&tlh * &p.ll * &tr), "Loewner matrix")?,
        sll: strip_imag(&(&tlh * &p.sll * &tr), "shifted Loewner matrix")?,
        v: strip_imag(&(&tlh * &p.v), "V")?,
        w: strip_imag(&(&p.w * &tr), "W")?,
        l: strip_imag(&(&tlh * &p.l), "L")?,
        r: strip_imag(&(&p.r * &tr), "R")?,
        lambda: strip_imag(&(tr.adjoint() * &p.lambda * &tr), "Λ")?,
        mu: strip_imag(&(&tlh * &p.mu * &tl), "M")?,
    })
}

impl LoewnerPencil {
    pub fn is_real(&self) -> bool {
        [&self.ll, &self.sll, &self.v, &self.w]
            .iter()
            .all(|m| m.col_iter().all(|c| c.iter().all(|z| z.im == 0.0)))
    }

    pub fn ports(&self) -> usize {
        self.w.nrows()
    }

    /// `(q, k)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.ll.nrows(), self.ll.ncols())
    }

    /// The unreduced model `(−𝕃, −σ𝕃, V, W, 0)`.
    pub fn full_realization(&self) -> ComplexRealization {
        let m = self.ports();
        ComplexRealization {
            e: Some(linalg::scale_c(self.ll.as_ref(), c64::new(-1.0, 0.0))),
            a: linalg::scale_c(self.sll.as_ref(), c64::new(-1.0, 0.0)),
            b: self.v.clone(),
            c: self.w.clone(),
            d: Mat::zeros(m, m),
        }
    }

    /// `[𝕃, σ𝕃]`.
    pub fn row_stacked(&self) -> Mat<c64> {
        linalg::hstack_c(&[self.ll.as_ref(), self.sll.as_ref()])
    }

    /// `[𝕃; σ𝕃]`.
    pub fn col_stacked(&self) -> Mat<c64> {
        linalg::vstack_c(&[self.ll.as_ref(), self.sll.as_ref()])
    }

    /// Replaces `σ𝕃, V, W` by `σ𝕃 − L D R`, `V − L D`, `W − D R`.
    pub fn remove_feedthrough(&self, d: MatRef<'_, f64>) -> Result<LoewnerPencil> {
        let m = self.ports();
        if d.nrows() != m || d.ncols() != m {
            return Err(Error::Dimension(format!("feedthrough is {}x{}, pencil has {m} ports", d.nrows(), d.ncols())));
        }
        let dc = linalg::to_complex(d);
        let ld = &self.l * &dc;
        let mut out = self.clone();
        out.sll = &self.sll - &ld * &self.r;
        out.v = &self.v - &ld;
        out.w = &self.w - &dc * &self.r;
        Ok(out)
    }
}

/// Rank information of a pencil.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderReport {
    /// Order of the rational interpolant, `rank [𝕃, σ𝕃]`.
    pub r: usize,
    /// McMillan degree estimate, `rank 𝕃`.
    pub nu: usize,
    pub rank_row: usize,
    pub rank_col: usize,
    /// Singular values of `[𝕃, σ𝕃]`.
    pub singular_values: Vec<f64>,
    pub singular_values_col: Vec<f64>,
    pub singular_values_ll: Vec<f64>,
    pub tol_used: f64,
    /// False when the two concatenation ranks differ by more than one.
    pub consistent: bool,
}

fn rank(sv: &[f64], tol: f64) -> usize {
    let smax = sv.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s >= tol * smax).count()
}

/// Numerical ranks of `[𝕃, σ𝕃]`, `[𝕃; σ𝕃]` and `𝕃` with relative
/// tolerance `tol`. Differing concatenation ranks resolve to the larger one.
pub fn detect_orders(p: &LoewnerPencil, tol: f64) -> Result<OrderReport> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Invalid(format!("rank tolerance {tol} outside (0, 1)")));
    }
    let sv_row = linalg::singular_values_c(p.row_stacked().as_ref())?;
    let sv_col = linalg::singular_values_c(p.col_stacked().as_ref())?;
    let sv_ll = linalg::singular_values_c(p.ll.as_ref())?;
    let rank_row = rank(&sv_row, tol);
    let rank_col = rank(&sv_col, tol);
    let nu = rank(&sv_ll, tol);
    let r = rank_row.max(rank_col);
    let consistent = rank_row.abs_diff(rank_col) <= 1;
    if rank_row != rank_col {
        if consistent {
            log::warn!("row/column Loewner ranks differ ({rank_row} vs {rank_col}); using {r}");
        } else {
            log::warn!("row/column Loewner ranks differ ({rank_row} vs {rank_col}): data look ill-posed");
        }
    }
    Ok(OrderReport {
        r,
        nu: nu.min(r),
        rank_row,
        rank_col,
        singular_values: sv_row,
        singular_values_col: sv_col,
        singular_values_ll: sv_ll,
        tol_used: tol,
        consistent,
    })
}

fn check_order(p: &LoewnerPencil, r: usize, tol: f64, sv_row: &[f64], sv_col: &[f64]) -> Result<()> {
    if r == 0 {
        return Err(Error::Invalid("order must be positive".into()));
    }
    let rank = rank(sv_row, tol).max(rank(sv_col, tol));
    let (q, k) = p.shape();
    if r > rank || r > q.min(k) {
        return Err(Error::OrderTooLarge { requested: r, rank });
    }
    Ok(())
}

/// Order-`r` projection `(−Yᴴ𝕃X, −Yᴴσ𝕃X, YᴴV, WX, 0)` from truncated SVDs of
/// `[𝕃, σ𝕃]` (left factor `Y`) and `[𝕃; σ𝕃]` (right factor `X`).
///
/// Requires a real pencil (see [`realify`]) and `r` within the numerical rank at `tol`.
pub fn reduce_realization(p: &LoewnerPencil, r: usize, tol: f64) -> Result<DescriptorRealization> {
    if !p.is_real() {
        return Err(Error::Invalid("pencil has complex entries; realify it or use the complex projection".into()));
    }
    let re = |m: &Mat<c64>| linalg::real_part(m.as_ref());
    let (ll, sll, v, w) = (re(&p.ll), re(&p.sll), re(&p.v), re(&p.w));
    let (y, sv_row, _) = linalg::svd(linalg::hstack(&[ll.as_ref(), sll.as_ref()]).as_ref())?;
    let (_, sv_col, x) = linalg::svd(linalg::vstack(&[ll.as_ref(), sll.as_ref()]).as_ref())?;
    check_order(p, r, tol, &sv_row, &sv_col)?;
    let y = y.as_ref().subcols(0, r);
    let x = x.as_ref().subcols(0, r);
    let e = linalg::scale((y.transpose() * &ll * x).as_ref(), -1.0);
    let a = linalg::scale((y.transpose() * &sll * x).as_ref(), -1.0);
    let b = y.transpose() * &v;
    let c = &w * x;
    let m = p.ports();
    DescriptorRealization::new(Some(SysMat::Dense(e)), SysMat::Dense(a), b, c, Mat::zeros(m, m))
}

/// Complex counterpart of [`reduce_realization`].
pub fn reduce_realization_complex(p: &LoewnerPencil, r: usize, tol: f64) -> Result<ComplexRealization> {
    let (y, sv_row, _) = linalg::svd_c(p.row_stacked().as_ref())?;
    let (_, sv_col, x) = linalg::svd_c(p.col_stacked().as_ref())?;
    check_order(p, r, tol, &sv_row, &sv_col)?;
    let y = y.as_ref().subcols(0, r);
    let x = x.as_ref().subcols(0, r);
    let m = p.ports();
    Ok(ComplexRealization {
        e: Some(linalg::scale_c((y.adjoint() * &p.ll * x).as_ref(), c64::new(-1.0, 0.0))),
        a: linalg::scale_c((y.adjoint() * &p.sll * x).as_ref(), c64::new(-1.0, 0.0)),
        b: y.adjoint() * &p.v,
        c: &p.w * x,
        d: Mat::zeros(m, m),
    })
}
