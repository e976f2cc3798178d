//! Closest-stable projection: stable/antistable splitting and the optimal
//! (Nehari) stable approximation of the antistable part.

use faer::{c64, Mat, MatRef};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SysMat};
use crate::lti::{to_standard, DescriptorRealization, TransferFunction};

/// Eigenvalues with `|Re λ| ≤ AXIS_TOL·max(|λ|, AXIS_FLOOR·ρ(A))` count as
/// imaginary-axis ones.
pub const AXIS_TOL: f64 = 1e-8;
pub const AXIS_FLOOR: f64 = 1e-6;

/// Number of points of the L∞ error grid.
pub const ERROR_GRID_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StabilizationMode {
    /// Optimal Hankel-norm (Nehari) approximation of the antistable part.
    #[default]
    Nehari,
    /// Mirror antistable eigenvalues `λ ↦ −conj(λ)`.
    Reflect,
    /// Leave the model as it is.
    Off,
}

impl std::str::FromStr for StabilizationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nehari" => Ok(Self::Nehari),
            "reflect" => Ok(Self::Reflect),
            "off" => Ok(Self::Off),
            _ => Err(Error::Invalid(format!("unknown stabilization mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdditiveSplit {
    /// Spectrum in the open left half-plane; carries the feedthrough.
    pub stable_part: DescriptorRealization,
    /// Spectrum in the open right half-plane; zero feedthrough.
    pub antistable_part: DescriptorRealization,
    pub feedthrough: Mat<f64>,
}

#[derive(Debug, Clone)]
pub struct ProjectionResult {
    pub projected: DescriptorRealization,
    /// Grid estimate of `‖H − P∞(H)‖_L∞`.
    pub achieved_error: f64,
    /// Largest Hankel singular value of the antistable part.
    pub hankel_bound: f64,
    pub mode_used: StabilizationMode,
    pub eigenvalues_before: Vec<c64>,
    pub eigenvalues_after: Vec<c64>,
    /// Eigenvalues that were moved off the imaginary axis first.
    pub axis_reflected: Vec<c64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ProjectionOptions {
    pub mode: StabilizationMode,
    /// `(ω_min, ω_max)` of the data band; the error grid spans
    /// `[10⁻² ω_min, 10² ω_max]`. Defaults to the range of pole moduli.
    pub band: Option<(f64, f64)>,
}

fn sub(m: &Mat<f64>, r0: usize, c0: usize, nr: usize, nc: usize) -> Mat<f64> {
    m.as_ref().submatrix(r0, c0, nr, nc).to_owned()
}

fn spectral_radius(ev: &[c64]) -> f64 {
    ev.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Per-eigenvalue axis band.
fn axis_band(ev: &[c64]) -> impl Fn(c64) -> f64 {
    let rho = spectral_radius(ev);
    let floor = if rho > 0.0 { AXIS_FLOOR * rho } else { 1.0 };
    move |z: c64| AXIS_TOL * z.norm().max(floor)
}

/// Splits a standard-form model into stable and antistable parts.
///
/// The invariant subspaces come from the matrix sign function of `A`; the
/// model is block-diagonalized in the basis `[V_s, V_u]`.
pub fn separate(sys: &DescriptorRealization) -> Result<AdditiveSplit> {
    let std = to_standard(sys)?;
    let a = std.a_dense();
    let n = a.nrows();
    let m_in = std.inputs();
    let m_out = std.outputs();
    let ev = linalg::eigenvalues(a.as_ref())?;
    let band = axis_band(&ev);
    let axis: Vec<c64> = ev.iter().copied().filter(|&z| z.re.abs() <= band(z)).collect();
    if !axis.is_empty() {
        return Err(Error::AxisEigenvalues(axis));
    }
    let nu = ev.iter().filter(|z| z.re > 0.0).count();
    let ns = n - nu;
    if nu == 0 {
        return Ok(AdditiveSplit {
            stable_part: std.clone(),
            antistable_part: DescriptorRealization::standard(Mat::zeros(0, 0), Mat::zeros(0, m_in), Mat::zeros(m_out, 0), Mat::zeros(m_out, m_in))?,
            feedthrough: std.d.clone(),
        });
    }
    let sign = linalg::matrix_sign(a.as_ref())?;
    let id = Mat::<f64>::identity(n, n);
    let ps = linalg::scale((&id - &sign).as_ref(), 0.5);
    let pu = linalg::scale((&id + &sign).as_ref(), 0.5);
    let vs = linalg::range_basis(ps.as_ref(), ns)?;
    let vu = linalg::range_basis(pu.as_ref(), nu)?;
    let x = linalg::hstack(&[vs.as_ref(), vu.as_ref()]);
    let xinv = linalg::inverse(x.as_ref())?;
    let at = &xinv * &a * &x;
    let bt = &xinv * &std.b;
    let ct = &std.c * &x;
    let coupling = linalg::fro(sub(&at, 0, ns, ns, nu).as_ref()) + linalg::fro(sub(&at, ns, 0, nu, ns).as_ref());
    if coupling > 1e-6 * linalg::fro(at.as_ref()) {
        log::warn!("stable/antistable decoupling is inaccurate (relative coupling {:.2e})", coupling / linalg::fro(at.as_ref()));
    }
    let stable_part = DescriptorRealization::standard(
        sub(&at, 0, 0, ns, ns),
        sub(&bt, 0, 0, ns, m_in),
        sub(&ct, 0, 0, m_out, ns),
        std.d.clone(),
    )?;
    let antistable_part = DescriptorRealization::standard(
        sub(&at, ns, ns, nu, nu),
        sub(&bt, ns, 0, nu, m_in),
        sub(&ct, 0, ns, m_out, nu),
        Mat::zeros(m_out, m_in),
    )?;
    Ok(AdditiveSplit { stable_part, antistable_part, feedthrough: std.d })
}

/// Controllability and observability Gramians of the mirrored stable system
/// `Ĝ(s) = G_u(−s) = (−A_u, −B_u, C_u)`.
pub fn hankel_gramians(antistable: &DescriptorRealization) -> Result<(Mat<f64>, Mat<f64>)> {
    let std = to_standard(antistable)?;
    let a = std.a_dense();
    if a.nrows() == 0 {
        return Ok((Mat::zeros(0, 0), Mat::zeros(0, 0)));
    }
    let ev = linalg::eigenvalues(a.as_ref())?;
    if ev.iter().any(|z| z.re <= 0.0) {
        return Err(Error::Numerical("antistable part has eigenvalues outside the open right half-plane".into()));
    }
    let am = linalg::scale(a.as_ref(), -1.0);
    let bbt = &std.b * std.b.transpose();
    let ctc = std.c.transpose() * &std.c;
    let p = linalg::lyapunov(am.as_ref(), bbt.as_ref())?;
    let q = linalg::lyapunov(am.transpose(), ctc.as_ref())?;
    Ok((p, q))
}

/// Hankel singular values `√λ(PQ)`, descending.
pub fn hankel_singular_values(p: MatRef<'_, f64>, q: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let (sp, _) = psd_sqrt(p)?;
    let (sq, _) = psd_sqrt(q)?;
    linalg::singular_values((sq.transpose() * &sp).as_ref())
}

/// `S` with `S Sᵀ = X` for symmetric PSD `X` (negative eigenvalues clipped).
fn psd_sqrt(x: MatRef<'_, f64>) -> Result<(Mat<f64>, Vec<f64>)> {
    let (w, v) = linalg::sym_eigen(linalg::sym_part(x).as_ref())?;
    let n = w.len();
    let s = Mat::from_fn(n, n, |i, j| v[(i, j)] * w[j].max(0.0).sqrt());
    Ok((s, w))
}

/// Optimal stable L∞ approximant `F` of an antistable `G_u` with
/// `‖G_u − F‖_L∞ = σ₁`, from Glover's all-pass construction applied to the
/// mirrored system. Returns `(F, σ₁)`.
pub fn nehari_approximant(antistable: &DescriptorRealization) -> Result<(DescriptorRealization, f64)> {
    let std = to_standard(antistable)?;
    let (mo, mi) = (std.outputs(), std.inputs());
    if std.order() == 0 {
        return Ok((DescriptorRealization::standard(Mat::zeros(0, 0), Mat::zeros(0, mi), Mat::zeros(mo, 0), Mat::zeros(mo, mi))?, 0.0));
    }
    let (p, q) = hankel_gramians(&std)?;
    // mirrored stable system
    let a = linalg::scale(std.a_dense().as_ref(), -1.0);
    let b = linalg::scale(std.b.as_ref(), -1.0);
    let c = std.c.clone();

    // square-root balancing with removal of numerically zero Hankel values
    let (sp, _) = psd_sqrt(p.as_ref())?;
    let (sq, _) = psd_sqrt(q.as_ref())?;
    let (u, hsv, v) = linalg::svd((sq.transpose() * &sp).as_ref())?;
    let sigma1 = hsv.first().copied().unwrap_or(0.0);
    if sigma1 <= 0.0 {
        return Ok((DescriptorRealization::standard(Mat::zeros(0, 0), Mat::zeros(0, mi), Mat::zeros(mo, 0), Mat::zeros(mo, mi))?, 0.0));
    }
    let k = hsv.iter().filter(|&&s| s > 1e-10 * sigma1).count();
    let isq: Vec<f64> = hsv[..k].iter().map(|s| 1.0 / s.sqrt()).collect();
    let t = Mat::from_fn(a.nrows(), k, |i, j| (&sp * v.as_ref().subcols(0, k))[(i, j)] * isq[j]);
    let tinv = Mat::from_fn(k, a.nrows(), |i, j| isq[i] * (u.as_ref().subcols(0, k).transpose() * sq.transpose())[(i, j)]);
    let ab = &tinv * &a * &t;
    let bb = &tinv * &b;
    let cb = &c * &t;

    // σ₁ block last
    let r = hsv[..k].iter().filter(|&&s| (sigma1 - s) <= 1e-8 * sigma1).count();
    let n1 = k - r;
    let perm: Vec<usize> = (r..k).chain(0..r).collect();
    let ap = Mat::from_fn(k, k, |i, j| ab[(perm[i], perm[j])]);
    let bp = Mat::from_fn(k, mi, |i, j| bb[(perm[i], j)]);
    let cp = Mat::from_fn(mo, k, |i, j| cb[(i, perm[j])]);
    let s1: Vec<f64> = perm[..n1].iter().map(|&i| hsv[i]).collect();
    let a11 = sub(&ap, 0, 0, n1, n1);
    let b1 = sub(&bp, 0, 0, n1, mi);
    let b2 = sub(&bp, n1, 0, r, mi);
    let c1 = sub(&cp, 0, 0, mo, n1);
    let c2 = sub(&cp, 0, n1, mo, r);

    // U with B₂ = −C₂ᵀ U
    let (uu, ss, vv) = linalg::svd(c2.transpose())?;
    let smax = ss.first().copied().unwrap_or(0.0);
    let mut pinv = Mat::<f64>::zeros(mo, r);
    for (idx, &sv) in ss.iter().enumerate() {
        if sv > 1e-12 * smax {
            for i in 0..mo {
                for j in 0..r {
                    pinv[(i, j)] += vv[(i, idx)] * uu[(j, idx)] / sv;
                }
            }
        }
    }
    let uu_mat = linalg::scale((&pinv * &b2).as_ref(), -1.0);
    let sig = sigma1;
    let s1m = Mat::from_fn(n1, n1, |i, j| if i == j { s1[i] } else { 0.0 });
    let ginv = Mat::from_fn(n1, n1, |i, j| if i == j { 1.0 / (s1[i] * s1[i] - sig * sig) } else { 0.0 });
    let c1t_u = c1.transpose() * &uu_mat;
    let ahat = &ginv * &(&(linalg::scale(a11.transpose(), sig * sig) + &s1m * &a11 * &s1m) - linalg::scale((&c1t_u * b1.transpose()).as_ref(), sig));
    let bhat = &ginv * &(&s1m * &b1 + linalg::scale(c1t_u.as_ref(), sig));
    let chat = &c1 * &s1m + linalg::scale((&uu_mat * b1.transpose()).as_ref(), sig);
    let dhat = linalg::scale(uu_mat.as_ref(), -sig);
    if !(linalg::all_finite(ahat.as_ref()) && linalg::all_finite(bhat.as_ref()) && linalg::all_finite(chat.as_ref())) {
        return Err(Error::Numerical("all-pass construction produced non-finite values".into()));
    }
    // F(s) = Q(−s) with Q = (Â, B̂, Ĉ, D̂) antistable
    let f = DescriptorRealization::standard(
        linalg::scale(ahat.as_ref(), -1.0),
        linalg::scale(bhat.as_ref(), -1.0),
        chat,
        dhat,
    )?;
    Ok((f, sigma1))
}

/// Parallel interconnection (sum of transfer functions).
pub fn parallel(a: &DescriptorRealization, b: &DescriptorRealization) -> Result<DescriptorRealization> {
    let (sa, sb) = (to_standard(a)?, to_standard(b)?);
    DescriptorRealization::standard(
        linalg::block_diag(&[sa.a_dense().as_ref(), sb.a_dense().as_ref()]),
        linalg::vstack(&[sa.b.as_ref(), sb.b.as_ref()]),
        linalg::hstack(&[sa.c.as_ref(), sb.c.as_ref()]),
        &sa.d + &sb.d,
    )
}

/// Moves eigenvalues within the axis band to `−max(|Re λ|, 2·band) + i Im λ`,
/// clear of the band itself.
fn reflect_axis(a: &Mat<f64>, ev: &[c64]) -> Result<(Mat<f64>, Vec<c64>)> {
    let band = axis_band(ev);
    let hits: Vec<c64> = ev.iter().copied().filter(|&z| z.re.abs() <= band(z)).collect();
    if hits.is_empty() {
        return Ok((a.clone(), hits));
    }
    log::warn!("{} eigenvalue(s) near the imaginary axis moved into the left half-plane", hits.len());
    let moved = modify_spectrum(a, |z| {
        let b = band(z);
        if z.re.abs() <= b { c64::new(-z.re.abs().max(2.0 * b), z.im) } else { z }
    })?;
    Ok((moved, hits))
}

/// `Re(V f(Λ) V⁻¹)` from an eigendecomposition of `a`.
fn modify_spectrum(a: &Mat<f64>, f: impl Fn(c64) -> c64) -> Result<Mat<f64>> {
    let (w, v) = linalg::eigen(a.as_ref())?;
    let n = w.len();
    let vf = Mat::from_fn(n, n, |i, j| v[(i, j)] * f(w[j]));
    // X V = V f(Λ)  ⇔  Vᵀ Xᵀ = (V f(Λ))ᵀ
    let xt = linalg::solve_c(v.transpose(), vf.transpose())
        .ok_or_else(|| Error::Numerical("eigenvector matrix is singular".into()))?;
    Ok(linalg::real_part(xt.transpose()))
}

fn default_band(ev: &[c64]) -> (f64, f64) {
    let mags: Vec<f64> = ev.iter().map(|z| z.norm()).filter(|&x| x > 0.0).collect();
    if mags.is_empty() {
        return (1.0, 1.0);
    }
    (mags.iter().copied().fold(f64::INFINITY, f64::min), mags.iter().copied().fold(0.0, f64::max))
}

/// Largest spectral norm of `G₁(iω) − G₂(iω)` over the error grid.
pub fn linf_error_grid(g1: &dyn TransferFunction, g2: &dyn TransferFunction, band: (f64, f64)) -> Result<f64> {
    let lo = (band.0 * 1e-2).log10();
    let hi = (band.1 * 1e2).log10();
    let pts: Vec<c64> = crate::tangential::log_grid(lo, hi, ERROR_GRID_POINTS)
        .into_iter()
        .map(|w| c64::new(0.0, w))
        .collect();
    let a = g1.transfer_many(&pts)?;
    let b = g2.transfer_many(&pts)?;
    Ok(a.par_iter().zip(b.par_iter()).map(|(x, y)| linalg::norm2_c((x - y).as_ref())).reduce(|| 0.0, f64::max))
}

/// Projection onto the stable models.
///
/// A stable input is returned unchanged with zero error. Otherwise the
/// antistable part is replaced according to `opts.mode`.
pub fn p_infinity(sys: &DescriptorRealization, opts: ProjectionOptions) -> Result<ProjectionResult> {
    let mut std = to_standard(sys)?;
    let a = std.a_dense();
    let ev = linalg::eigenvalues(a.as_ref())?;
    let band = opts.band.unwrap_or_else(|| default_band(&ev));
    let unchanged = |std: DescriptorRealization, mode| ProjectionResult {
        projected: std,
        achieved_error: 0.0,
        hankel_bound: 0.0,
        mode_used: mode,
        eigenvalues_before: ev.clone(),
        eigenvalues_after: ev.clone(),
        axis_reflected: vec![],
    };
    if opts.mode == StabilizationMode::Off {
        return Ok(unchanged(std, StabilizationMode::Off));
    }
    let on_axis = axis_band(&ev);
    if ev.iter().all(|&z| z.re < -on_axis(z)) {
        return Ok(unchanged(std, opts.mode));
    }
    let (a_moved, axis_reflected) = reflect_axis(&a, &ev)?;
    std.a = SysMat::Dense(a_moved);
    let split = separate(&std)?;
    let (f, sigma1) = nehari_approximant(&split.antistable_part)?;
    let (projected, mode_used) = match opts.mode {
        StabilizationMode::Nehari => {
            let out = parallel(&split.stable_part, &f)?;
            let after = linalg::eigenvalues(out.a_dense().as_ref())?;
            if after.iter().all(|z| z.re < 0.0) {
                (out, StabilizationMode::Nehari)
            } else {
                log::warn!("Nehari approximant is not stable; falling back to eigenvalue reflection");
                (reflected(&split)?, StabilizationMode::Reflect)
            }
        }
        _ => (reflected(&split)?, StabilizationMode::Reflect),
    };
    let achieved_error = linf_error_grid(sys, &projected, band)?;
    let eigenvalues_after = linalg::eigenvalues(projected.a_dense().as_ref())?;
    Ok(ProjectionResult {
        projected,
        achieved_error,
        hankel_bound: sigma1,
        mode_used,
        eigenvalues_before: ev,
        eigenvalues_after,
        axis_reflected,
    })
}

fn reflected(split: &AdditiveSplit) -> Result<DescriptorRealization> {
    let au = split.antistable_part.a_dense();
    let mirrored = modify_spectrum(&au, |z| -z.conj())?;
    let mut g = split.antistable_part.clone();
    g.a = SysMat::Dense(mirrored);
    parallel(&split.stable_part, &g)
}
