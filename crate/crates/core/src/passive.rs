//! Passivity-preserving identification: spectral zeros, passive Loewner
//! pencil, normalization and port-Hamiltonian extraction, and the shifted
//! end-to-end procedure for data that are passive but not strictly passive.

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, SysMat};
use crate::loewner::{self, LoewnerPencil, OrderReport, DEFAULT_RANK_TOL};
use crate::lti::{self, DescriptorRealization, PHRealization, TransferFunction};
use crate::stable::{self, ProjectionOptions, ProjectionResult, StabilizationMode};
use crate::tangential::{self, LeftData, RightData};

/// Infinite eigenvalues: `|β| ≤ INF_TOL · max|β|`.
pub const INF_TOL: f64 = 1e-12;

/// Open right half-plane selection: `Re ξ > ZERO_TOL · max(|ξ|, ZERO_FLOOR · max|ξ|)`.
pub const ZERO_TOL: f64 = 1e-9;
pub const ZERO_FLOOR: f64 = 1e-6;

/// Cholesky jitter scale relative to `‖𝕃‖`.
pub const JITTER: f64 = 1e-12;
/// Negative eigenvalues of the dissipation block down to `−PSD_CLIP·‖𝐒‖` are roundoff and get set to zero.
pub const PSD_CLIP: f64 = 1e-10;

/// Finite spectral zeros `ξ_j` with unit directions `x_j`, `Φ(ξ_j) x_j ≈ 0`.
#[derive(Debug, Clone)]
pub struct SpectralZeroSet {
    pub zeros: Vec<c64>,
    /// One unit vector per zero (columns).
    pub directions: Mat<c64>,
    /// `‖Φ(ξ_j) x_j‖ / (‖H(ξ_j)‖ + ‖H(−ξ_j)‖)`; empty when not evaluated.
    pub residuals: Vec<f64>,
    /// `(p_j, q_j)` eigenvector blocks, stacked per zero.
    pub aux: Option<Mat<c64>>,
    /// Reference modulus for the axis test: `max|ξ|`, floored by the norm
    /// ratio of the two pencil matrices.
    pub scale: f64,
}

impl SpectralZeroSet {
    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    /// Number of zeros with `|Re ξ| ≤ band`.
    pub fn count_near_axis(&self, band: f64) -> usize {
        self.zeros.iter().filter(|z| z.re.abs() <= band).count()
    }

    pub fn max_modulus(&self) -> f64 {
        self.zeros.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Half-width of the near-axis band at `z`.
    pub fn axis_band(&self, z: c64) -> f64 {
        ZERO_TOL * z.norm().max(ZERO_FLOOR * self.scale.max(self.max_modulus()))
    }

    /// Number of zeros inside their own [`axis_band`](Self::axis_band).
    pub fn count_in_axis_band(&self) -> usize {
        self.zeros.iter().filter(|&&z| z.re.abs() <= self.axis_band(z)).count()
    }
}

/// Zeros of `Φ(s) = H(s) + Hᵀ(−s)` from the block pencil
/// `[[0, A, B], [Aᵀ, 0, Cᵀ], [Bᵀ, C, D+Dᵀ]] − s [[0, E, 0], [−Eᵀ, 0, 0], [0, 0, 0]]`.
///
/// Requires `D + Dᵀ ≻ 0` and expects `2n` finite eigenvalues.
pub fn spectral_zeros(sys: &DescriptorRealization) -> Result<SpectralZeroSet> {
    let dd = &sys.d + sys.d.transpose();
    let min = linalg::sym_eigenvalues(dd.as_ref())?.first().copied().unwrap_or(0.0);
    if min <= 0.0 {
        return Err(Error::Invalid(format!(
            "spectral zeros need D + Dᵀ ≻ 0 (smallest eigenvalue {min:.3e}); shift the data first"
        )));
    }
    let set = spectral_zeros_unchecked(sys)?;
    let n = sys.order();
    if set.len() < 2 * n {
        return Err(Error::ZeroCount { expected: 2 * n, found: set.len(), near_axis: 0 });
    }
    Ok(set)
}

/// [`spectral_zeros`] without the definiteness and count checks; used for
/// diagnostics on models with a singular `D + Dᵀ`.
pub fn spectral_zeros_unchecked(sys: &DescriptorRealization) -> Result<SpectralZeroSet> {
    let n = sys.order();
    let m = sys.inputs();
    if sys.outputs() != m {
        return Err(Error::Dimension("spectral zeros need a square transfer function".into()));
    }
    let a = sys.a_dense();
    let e = sys.e_dense();
    let dd = &sys.d + sys.d.transpose();
    let nrm = linalg::fro(dd.as_ref());
    let alpha = if nrm > 0.0 { nrm.sqrt() } else { 1.0 };
    let size = 2 * n + m;
    let mut left = Mat::<f64>::zeros(size, size);
    let mut right = Mat::<f64>::zeros(size, size);
    for i in 0..n {
        for j in 0..n {
            left[(i, n + j)] = a[(i, j)];
            left[(n + i, j)] = a[(j, i)];
            right[(i, n + j)] = e[(i, j)];
            right[(n + i, j)] = -e[(j, i)];
        }
        for k in 0..m {
            left[(i, 2 * n + k)] = sys.b[(i, k)] / alpha;
            left[(2 * n + k, i)] = sys.b[(i, k)] / alpha;
            left[(n + i, 2 * n + k)] = sys.c[(k, i)] / alpha;
            left[(2 * n + k, n + i)] = sys.c[(k, i)] / alpha;
        }
    }
    for i in 0..m {
        for j in 0..m {
            left[(2 * n + i, 2 * n + j)] = dd[(i, j)] / (alpha * alpha);
        }
    }
    let (al, be, vecs) = linalg::gevd(left.as_ref(), right.as_ref(), true)?;
    let vecs = vecs.expect("eigenvectors requested");
    let bmax = be.iter().map(|b| b.abs()).fold(0.0, f64::max);
    let mut keep: Vec<usize> = (0..size).filter(|&i| be[i].abs() > INF_TOL * bmax).collect();
    // A singular D + Dᵀ makes Φ lose degree; QZ then leaves perturbed infinite
    // eigenvalues at |β| ~ √eps. Keep at most the generic finite count.
    let defect = feedthrough_defect(sys, dd.as_ref())?;
    if defect > 0 {
        let rank_e = linalg::singular_values(e.as_ref())?
            .iter()
            .filter(|&&v| v > INF_TOL * linalg::fro(e.as_ref()))
            .count();
        let cap = 2 * rank_e.saturating_sub(defect);
        if keep.len() > cap {
            keep.sort_by(|&i, &j| (al[i].norm() * be[j].abs()).total_cmp(&(al[j].norm() * be[i].abs())));
            keep.truncate(cap);
            keep.sort_unstable();
        }
    }
    let mut zeros = Vec::with_capacity(keep.len());
    let mut dirs = Mat::<c64>::zeros(m, keep.len());
    let mut aux = Mat::<c64>::zeros(2 * n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        zeros.push(al[i] / be[i]);
        let x: Vec<c64> = (0..m).map(|k| vecs[(2 * n + k, i)] / alpha).collect();
        let xn = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let scale = if xn > 0.0 { 1.0 / xn } else { 1.0 };
        for k in 0..m {
            dirs[(k, c)] = x[k] * scale;
        }
        for k in 0..2 * n {
            aux[(k, c)] = vecs[(k, i)] * scale;
        }
    }
    let rn = linalg::fro(right.as_ref());
    let scale = if rn > 0.0 { linalg::fro(left.as_ref()) / rn } else { 0.0 };
    let mut set = SpectralZeroSet { zeros, directions: dirs, residuals: vec![], aux: Some(aux), scale };
    set.residuals = zero_residuals(sys, &set)?;
    Ok(set)
}

/// Number of numerically zero eigenvalues of `D + Dᵀ`, measured against the
/// size of `D` and of the gain estimate `‖C‖‖B‖ / max(‖A‖, ‖E‖)`.
fn feedthrough_defect(sys: &DescriptorRealization, dd: MatRef<'_, f64>) -> Result<usize> {
    if dd.nrows() == 0 {
        return Ok(0);
    }
    let ev = linalg::sym_eigenvalues(dd)?;
    let an = linalg::fro(sys.a_dense().as_ref())
        .max(linalg::fro(sys.e_dense().as_ref()))
        .max(f64::MIN_POSITIVE);
    let gain = linalg::fro(sys.c.as_ref()) * linalg::fro(sys.b.as_ref()) / an;
    let size = ev.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(gain).max(linalg::fro(sys.d.as_ref()));
    Ok(ev.iter().filter(|v| v.abs() <= 1e-10 * size).count())
}

/// Relative residuals `‖Φ(ξ)x‖ / (‖H(ξ)‖ + ‖H(−ξ)‖)`.
pub fn zero_residuals(sys: &dyn TransferFunction, set: &SpectralZeroSet) -> Result<Vec<f64>> {
    let m = set.directions.nrows();
    let mut pts = Vec::with_capacity(2 * set.len());
    for &z in &set.zeros {
        pts.push(z);
        pts.push(-z);
    }
    let vals = match sys.transfer_many(&pts) {
        Ok(v) => v,
        // a zero on top of a pole: report an infinite residual
        Err(Error::SingularShift { .. }) => return Ok(vec![f64::INFINITY; set.len()]),
        Err(e) => return Err(e),
    };
    Ok((0..set.len())
        .map(|j| {
            let h = &vals[2 * j];
            let hm = &vals[2 * j + 1];
            let mut r = 0.0;
            for i in 0..m {
                let v: c64 = (0..m).map(|k| (h[(i, k)] + hm[(k, i)]) * set.directions[(k, j)]).sum();
                r += v.norm_sqr();
            }
            let scale = linalg::fro_c(h.as_ref()) + linalg::fro_c(hm.as_ref());
            r.sqrt() / if scale > 0.0 { scale } else { 1.0 }
        })
        .collect())
}

/// Keeps the zeros right of their [`SpectralZeroSet::axis_band`], checks that there are exactly
/// `r` of them and orders them by `|Im ξ|` with each conjugate pair adjacent
/// (exact conjugates; real zeros made exactly real).
pub fn select_positive(set: &SpectralZeroSet, r: usize) -> Result<SpectralZeroSet> {
    let m = set.directions.nrows();
    let near_axis = set.count_in_axis_band();
    let idx: Vec<usize> = (0..set.len()).filter(|&j| set.zeros[j].re > set.axis_band(set.zeros[j])).collect();
    if idx.len() != r {
        return Err(Error::ZeroCount { expected: r, found: idx.len(), near_axis });
    }
    let is_real = |z: c64| z.im.abs() <= 1e-10 * z.norm();
    let mut upper: Vec<usize> = idx.iter().copied().filter(|&j| !is_real(set.zeros[j]) && set.zeros[j].im > 0.0).collect();
    let lower: Vec<usize> = idx.iter().copied().filter(|&j| !is_real(set.zeros[j]) && set.zeros[j].im < 0.0).collect();
    let reals: Vec<usize> = idx.iter().copied().filter(|&j| is_real(set.zeros[j])).collect();
    if upper.len() != lower.len() {
        return Err(Error::Numerical(format!(
            "spectral zeros are not closed under conjugation ({} above, {} below the real axis)",
            upper.len(),
            lower.len()
        )));
    }
    let mut order: Vec<(usize, bool)> = reals.iter().map(|&j| (j, false)).collect();
    upper.sort_by(|&a, &b| set.zeros[a].im.total_cmp(&set.zeros[b].im));
    order.extend(upper.iter().map(|&j| (j, true)));
    order.sort_by(|a, b| {
        let (za, zb) = (set.zeros[a.0], set.zeros[b.0]);
        let ka = if a.1 { za.im.abs() } else { 0.0 };
        let kb = if b.1 { zb.im.abs() } else { 0.0 };
        ka.total_cmp(&kb).then(za.re.total_cmp(&zb.re))
    });
    let mut zeros = Vec::with_capacity(r);
    let mut cols: Vec<Vec<c64>> = Vec::with_capacity(r);
    let mut res = Vec::with_capacity(r);
    for (j, complex) in order {
        let z = set.zeros[j];
        let x: Vec<c64> = (0..m).map(|k| set.directions[(k, j)]).collect();
        let rj = set.residuals.get(j).copied().unwrap_or(f64::NAN);
        if complex {
            zeros.push(z);
            zeros.push(z.conj());
            cols.push(x.clone());
            cols.push(x.iter().map(|v| v.conj()).collect());
            res.push(rj);
            res.push(rj);
        } else {
            zeros.push(c64::new(z.re, 0.0));
            cols.push(real_direction(&x));
            res.push(rj);
        }
    }
    let directions = Mat::from_fn(m, r, |i, j| cols[j][i]);
    Ok(SpectralZeroSet { zeros, directions, residuals: res, aux: None, scale: set.scale })
}

/// Rotates a complex vector that is a phase times a real vector onto the reals.
fn real_direction(x: &[c64]) -> Vec<c64> {
    let big = x.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or(c64::new(1.0, 0.0));
    let phase = if big.norm() > 0.0 { big.conj() / big.norm() } else { c64::new(1.0, 0.0) };
    let v: Vec<f64> = x.iter().map(|z| (z * phase).re).collect();
    let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter().map(|a| c64::new(a / n, 0.0)).collect()
}

/// Right data `(ξ_j, x_j, H(ξ_j)x_j)` and left data
/// `(−conj ξ_j, conj x_j, −conj(H(ξ_j)x_j))`, i.e. `M = −Λᴴ`, `L = R`, `V = −Wᴴ`.
pub fn build_passive_data(zeros: &SpectralZeroSet, model: &dyn TransferFunction) -> Result<(RightData, LeftData)> {
    if zeros.zeros.iter().any(|z| z.re <= 0.0) {
        return Err(Error::Invalid("passive data need zeros in the open right half-plane".into()));
    }
    let m = zeros.directions.nrows();
    let k = zeros.len();
    let h = model.transfer_many(&zeros.zeros)?;
    let w = Mat::from_fn(m, k, |i, j| (0..m).map(|c| h[j][(i, c)] * zeros.directions[(c, j)]).sum::<c64>());
    let right = RightData::new(zeros.zeros.clone(), zeros.directions.clone(), w.clone())?;
    let left = LeftData::new(
        zeros.zeros.iter().map(|z| -z.conj()).collect(),
        Mat::from_fn(m, k, |i, j| zeros.directions[(i, j)].conj()),
        Mat::from_fn(m, k, |i, j| -w[(i, j)].conj()),
    )?;
    Ok((right, left))
}

/// Real passive pencil with `𝕃 = 𝕃ᵀ` and `σ𝕃 = −σ𝕃ᵀ`.
#[derive(Debug, Clone)]
pub struct PassiveLoewnerPencil {
    pub pencil: LoewnerPencil,
    /// Relative Hermitian defect of `𝕃` before symmetrization.
    pub hermitian_defect: f64,
    /// Relative skew-Hermitian defect of `σ𝕃` before projection.
    pub skew_defect: f64,
    pub min_eig: f64,
}

fn herm_defect(a: &Mat<c64>, skew: bool) -> f64 {
    let sign = if skew { 1.0 } else { -1.0 };
    let d = Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] + a[(j, i)].conj() * sign);
    let n = linalg::fro_c(a.as_ref());
    if n == 0.0 { 0.0 } else { linalg::fro_c(d.as_ref()) / n }
}

/// Loewner pencil of passive data, realified, with its symmetry enforced.
pub fn passive_loewner(right: &RightData, left: &LeftData) -> Result<PassiveLoewnerPencil> {
    let raw = loewner::build_loewner(right, left)?;
    let hermitian_defect = herm_defect(&raw.ll, false);
    let skew_defect = herm_defect(&raw.sll, true);
    if hermitian_defect > 1e-8 || skew_defect > 1e-8 {
        return Err(Error::Numerical(format!(
            "passive pencil lost its structure (Hermitian defect {hermitian_defect:.2e}, skew defect {skew_defect:.2e})"
        )));
    }
    let mut p = loewner::realify(&raw)?;
    let ll = linalg::sym_part(linalg::real_part(p.ll.as_ref()).as_ref());
    let sll = linalg::skew_part(linalg::real_part(p.sll.as_ref()).as_ref());
    let min_eig = linalg::sym_eigenvalues(ll.as_ref())?.first().copied().unwrap_or(0.0);
    if min_eig < -JITTER * linalg::fro(ll.as_ref()) {
        return Err(Error::Indefinite { min_eig });
    }
    p.ll = linalg::to_complex(ll.as_ref());
    p.sll = linalg::to_complex(sll.as_ref());
    Ok(PassiveLoewnerPencil { pencil: p, hermitian_defect, skew_defect, min_eig })
}

/// `σ𝕃 ← σ𝕃 − L D R`, `V ← V − L D`, `W ← W − D R`.
pub fn unshift_pencil(p: &PassiveLoewnerPencil, d: MatRef<'_, f64>) -> Result<PassiveLoewnerPencil> {
    Ok(PassiveLoewnerPencil { pencil: p.pencil.remove_feedthrough(d)?, ..p.clone() })
}

/// Normalized model and its structure matrix.
#[derive(Debug, Clone)]
pub struct Normalized {
    /// `(I, A_n, B_n, C_n, D)`.
    pub realization: DescriptorRealization,
    /// `𝐒 = [[−A_n, −B_n], [C_n, D]]`.
    pub s_matrix: Mat<f64>,
    /// Upper factor `T` with `𝕃 = Tᵀ T`.
    pub t: Mat<f64>,
    pub jitter_applied: bool,
}

/// Cholesky normalization `𝕃 = TᵀT` of the model `(−𝕃, −σ𝕃, V, W, D)`:
/// `A_n = T⁻ᵀσ𝕃T⁻¹`, `B_n = −T⁻ᵀV`, `C_n = W T⁻¹`.
pub fn normalize_ph(p: &PassiveLoewnerPencil, d: MatRef<'_, f64>) -> Result<Normalized> {
    let re = |m: &Mat<c64>| linalg::real_part(m.as_ref());
    let ll = linalg::sym_part(re(&p.pencil.ll).as_ref());
    let nrm = linalg::fro(ll.as_ref());
    let mut jitter_applied = false;
    let lower = match linalg::cholesky(ll.as_ref()) {
        Some(l) => l,
        None => {
            let min_eig = linalg::sym_eigenvalues(ll.as_ref())?.first().copied().unwrap_or(0.0);
            if min_eig > -JITTER * nrm {
                jitter_applied = true;
                log::warn!("Loewner matrix is semidefinite to roundoff (λ_min = {min_eig:.2e}); adding jitter");
                let shifted = Mat::from_fn(ll.nrows(), ll.ncols(), |i, j| ll[(i, j)] + if i == j { JITTER * nrm } else { 0.0 });
                linalg::cholesky(shifted.as_ref()).ok_or(Error::Indefinite { min_eig })?
            } else {
                return Err(Error::Indefinite { min_eig });
            }
        }
    };
    let n = lower.nrows();
    let m = d.nrows();
    // L⁻¹ X via triangular solve through the general solver
    let linv = |x: MatRef<'_, f64>| linalg::solve(lower.as_ref(), x).ok_or_else(|| Error::Numerical("singular Cholesky factor".into()));
    let sll = re(&p.pencil.sll);
    let x = linv(sll.as_ref())?; // L⁻¹ σ𝕃
    let a_n = linv(x.transpose())?.transpose().to_owned(); // L⁻¹ σ𝕃 L⁻ᵀ
    let b_n = linalg::scale(linv(re(&p.pencil.v).as_ref())?.as_ref(), -1.0);
    let c_n = linv(re(&p.pencil.w).transpose())?.transpose().to_owned();
    let s_matrix = Mat::from_fn(n + m, n + m, |i, j| match (i < n, j < n) {
        (true, true) => -a_n[(i, j)],
        (true, false) => -b_n[(i, j - n)],
        (false, true) => c_n[(i - n, j)],
        (false, false) => d[(i - n, j - n)],
    });
    Ok(Normalized {
        realization: DescriptorRealization::standard(a_n, b_n, c_n, d.to_owned())?,
        s_matrix,
        t: lower.transpose().to_owned(),
        jitter_applied,
    })
}

/// `[[−J, −G], [Gᵀ, N]] = (𝐒 − 𝐒ᵀ)/2`, `[[R, P], [Pᵀ, S]] = (𝐒 + 𝐒ᵀ)/2`, `M = Q = I`.
pub fn extract_ph(s_matrix: MatRef<'_, f64>, ports: usize) -> Result<PHRealization> {
    let total = s_matrix.nrows();
    if s_matrix.ncols() != total || ports > total {
        return Err(Error::Dimension("𝐒 must be square and larger than the port count".into()));
    }
    let n = total - ports;
    let sk = linalg::skew_part(s_matrix);
    let sy = clip_roundoff(linalg::sym_part(s_matrix), PSD_CLIP * linalg::fro(s_matrix))?;
    let blk = |m: &Mat<f64>, r0: usize, c0: usize, nr: usize, nc: usize, k: f64| {
        Mat::from_fn(nr, nc, |i, j| k * m[(r0 + i, c0 + j)])
    };
    PHRealization::new(
        SysMat::identity_dense(n),
        None,
        SysMat::Dense(blk(&sk, 0, 0, n, n, -1.0)),
        SysMat::Dense(blk(&sy, 0, 0, n, n, 1.0)),
        blk(&sk, 0, n, n, ports, -1.0),
        blk(&sy, 0, n, n, ports, 1.0),
        blk(&sk, n, n, ports, ports, 1.0),
        blk(&sy, n, n, ports, ports, 1.0),
    )
}

/// Zeroes eigenvalues in `[−tol, 0)`; larger negative ones are left alone.
fn clip_roundoff(w: Mat<f64>, tol: f64) -> Result<Mat<f64>> {
    if w.nrows() == 0 {
        return Ok(w);
    }
    let (ev, u) = linalg::sym_eigen(w.as_ref())?;
    if ev[0] >= 0.0 {
        return Ok(w);
    }
    log::debug!("clipping dissipation eigenvalues down to {:.2e} (tolerance {tol:.2e})", ev[0]);
    let ev: Vec<f64> = ev.iter().map(|&x| if x < 0.0 && x >= -tol { 0.0 } else { x }).collect();
    let scaled = Mat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * ev[j]);
    Ok(linalg::sym_part((&scaled * u.transpose()).as_ref()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum OrderPolicy {
    /// Rank-revealed order.
    #[default]
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FeedthroughPolicy {
    /// Recovered exactly from the Loewner pencil (index-one elimination).
    #[default]
    Exact,
    /// Read off the full interpolant at `ω = 10³·ω_max`.
    HighFrequency,
}

#[derive(Debug, Clone)]
pub struct IdentifyOptions {
    /// Data shift `D_s`; `None` runs the strictly passive construction.
    pub shift: Option<Mat<f64>>,
    pub order: OrderPolicy,
    pub rank_tol: f64,
    pub stabilization: StabilizationMode,
    /// Only used without shift.
    pub feedthrough: FeedthroughPolicy,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        Self {
            shift: None,
            order: OrderPolicy::Auto,
            rank_tol: DEFAULT_RANK_TOL,
            stabilization: StabilizationMode::Nehari,
            feedthrough: FeedthroughPolicy::Exact,
        }
    }
}

impl IdentifyOptions {
    /// Shifted run with `D_s = δ I_m`.
    pub fn shifted(delta: f64, ports: usize) -> Self {
        Self { shift: Some(linalg::scale(Mat::<f64>::identity(ports, ports).as_ref(), delta)), ..Self::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub orders: OrderReport,
    pub order_used: usize,
    pub projected_order: usize,
    pub sylvester_residuals: (f64, f64),
    /// Tangential residuals of the step-3 model against the shifted data.
    pub loewner_interpolation: (f64, f64),
    /// The same for the stabilized model.
    pub projected_interpolation: (f64, f64),
    pub projection_error: f64,
    pub hankel_bound: f64,
    pub stabilization_used: StabilizationMode,
    pub axis_reflected: usize,
    pub zero_residual_max: f64,
    pub near_axis_zeros: usize,
    pub hermitian_defect: f64,
    pub skew_defect: f64,
    pub loewner_min_eig: f64,
    pub jitter_applied: bool,
    /// Residual of the normalized model at the spectral-zero data.
    pub zero_interpolation: f64,
    pub feedthrough: Vec<Vec<f64>>,
}

/// Result of the identification.
#[derive(Debug, Clone)]
pub struct IdentifiedModel {
    /// Final model (shift removed from `S`).
    pub ph: PHRealization,
    /// Normalized model of the shifted problem, before the shift is removed.
    pub ph_shifted: PHRealization,
    /// Step-3 Loewner model in standard form (shifted data).
    pub loewner: DescriptorRealization,
    pub projection: ProjectionResult,
    /// All finite spectral zeros of the stabilized model.
    pub zeros: SpectralZeroSet,
    pub selected: SpectralZeroSet,
    pub normalized: Normalized,
    pub diagnostics: Diagnostics,
}

fn data_band(right: &RightData, left: &LeftData) -> (f64, f64) {
    let w: Vec<f64> = right.lambda.iter().chain(&left.mu).map(|z| z.norm()).filter(|&x| x > 0.0).collect();
    if w.is_empty() {
        return (1.0, 1.0);
    }
    (w.iter().copied().fold(f64::INFINITY, f64::min), w.iter().copied().fold(0.0, f64::max))
}

/// Order-`r` real standard-form interpolant of a pencil (with the feedthrough
/// already removed from it), plus its rank report.
fn loewner_model(p: &LoewnerPencil, opts: &IdentifyOptions) -> Result<(DescriptorRealization, OrderReport, usize)> {
    loewner_interpolant(p, opts.order, opts.rank_tol)
}

/// Real order-`r` Loewner interpolant in standard form (feedthrough recovered
/// by index-one elimination).
pub fn loewner_interpolant(p: &LoewnerPencil, order: OrderPolicy, rank_tol: f64) -> Result<(DescriptorRealization, OrderReport, usize)> {
    let pr = loewner::realify(p)?;
    let orders = loewner::detect_orders(&pr, rank_tol)?;
    let r = match order {
        OrderPolicy::Auto => orders.r,
        OrderPolicy::Fixed(r) => r,
    };
    let red = loewner::reduce_realization(&pr, r, rank_tol)?;
    Ok((lti::to_standard_tol(&red, rank_tol)?, orders, r))
}

/// Runs the full identification on conjugate-closable tangential data.
///
/// With a shift: shift the data, build the order-`r` interpolant with
/// feedthrough `D_s`, stabilize, compute spectral zeros, build the passive
/// pencil from the zero data, remove the feedthrough, normalize, extract the
/// pH matrices and finally subtract `D_s` from `S`. Without a shift the
/// feedthrough is recovered from the data and nothing is subtracted.
pub fn identify_ph(right: &RightData, left: &LeftData, opts: &IdentifyOptions) -> Result<IdentifiedModel> {
    let m = right.ports();
    let (right, left) = tangential::conjugate_close(right, left);

    // step 1
    let (sr, sl) = match &opts.shift {
        Some(ds) => tangential::shift_data(&right, &left, ds.as_ref()).map_err(|e| e.at_step(1))?,
        None => (right.clone(), left.clone()),
    };

    // steps 2-3
    let pencil = loewner::build_loewner(&sr, &sl).map_err(|e| e.at_step(2))?;
    let sylvester_residuals = loewner::sylvester_residual(&pencil);
    let (model, orders, r) = match &opts.shift {
        Some(ds) => {
            let unshifted = pencil.remove_feedthrough(ds.as_ref()).map_err(|e| e.at_step(2))?;
            let (m0, orders, r) = loewner_model(&unshifted, opts).map_err(|e| e.at_step(2))?;
            (m0.with_added_feedthrough(ds.as_ref()), orders, r)
        }
        None => match opts.feedthrough {
            FeedthroughPolicy::Exact => loewner_model(&pencil, opts).map_err(|e| e.at_step(2))?,
            FeedthroughPolicy::HighFrequency => {
                let full = loewner_model(&pencil, &IdentifyOptions { order: OrderPolicy::Auto, ..opts.clone() })
                    .map_err(|e| e.at_step(2))?
                    .0;
                let wmax = data_band(&sr, &sl).1;
                let d_est = linalg::real_part(full.transfer(c64::new(0.0, 1e3 * wmax)).map_err(|e| e.at_step(3))?.as_ref());
                let stripped = pencil.remove_feedthrough(d_est.as_ref()).map_err(|e| e.at_step(3))?;
                let (m0, orders, r) = loewner_model(&stripped, opts).map_err(|e| e.at_step(3))?;
                (m0.with_added_feedthrough(d_est.as_ref()), orders, r)
            }
        },
    };
    let loewner_interpolation = tangential::interpolation_residuals(&model, &sr, &sl).map_err(|e| e.at_step(3))?;

    // step 4
    let projection = stable::p_infinity(&model, ProjectionOptions { mode: opts.stabilization, band: Some(data_band(&sr, &sl)) })
        .map_err(|e| e.at_step(4))?;
    let proj = &projection.projected;
    let projected_interpolation = tangential::interpolation_residuals(proj, &sr, &sl).map_err(|e| e.at_step(4))?;

    // step 5
    let zeros = match opts.shift {
        Some(_) => spectral_zeros(proj),
        None => spectral_zeros_unchecked(proj),
    }
    .map_err(|e| e.at_step(5))?;
    let rp = proj.order();
    let near_axis_zeros = zeros.count_in_axis_band();
    let selected = select_positive(&zeros, rp).map_err(|e| e.at_step(5))?;
    let zero_residual_max = selected.residuals.iter().copied().fold(0.0, f64::max);

    // steps 6-7
    let (zr, zl) = build_passive_data(&selected, proj).map_err(|e| e.at_step(6))?;
    let pp = passive_loewner(&zr, &zl).map_err(|e| e.at_step(7))?;

    // step 8: the stabilized model's whole feedthrough is removed
    let d_tot = proj.d.clone();
    let up = unshift_pencil(&pp, d_tot.as_ref()).map_err(|e| e.at_step(8))?;

    // steps 9-10
    let normalized = normalize_ph(&up, d_tot.as_ref()).map_err(|e| e.at_step(9))?;
    let zero_interpolation = tangential::interpolation_residuals(&normalized.realization, &zr, &zl)
        .map_err(|e| e.at_step(10))?
        .0;

    // step 11
    let ph_shifted = extract_ph(normalized.s_matrix.as_ref(), m).map_err(|e| e.at_step(11))?;

    // step 12
    let mut ph = ph_shifted.clone();
    if let Some(ds) = &opts.shift {
        ph.s = &ph.s - ds;
    }

    let diagnostics = Diagnostics {
        orders,
        order_used: r,
        projected_order: rp,
        sylvester_residuals,
        loewner_interpolation,
        projected_interpolation,
        projection_error: projection.achieved_error,
        hankel_bound: projection.hankel_bound,
        stabilization_used: projection.mode_used,
        axis_reflected: projection.axis_reflected.len(),
        zero_residual_max,
        near_axis_zeros,
        hermitian_defect: pp.hermitian_defect,
        skew_defect: pp.skew_defect,
        loewner_min_eig: pp.min_eig,
        jitter_applied: normalized.jitter_applied,
        zero_interpolation,
        feedthrough: (0..m).map(|i| (0..m).map(|j| d_tot[(i, j)]).collect()).collect(),
    };
    Ok(IdentifiedModel {
        ph,
        ph_shifted,
        loewner: model,
        projection,
        zeros,
        selected,
        normalized,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::ph_to_descriptor;
    use crate::tangential::{log_grid, sample_data, DirectionPolicy, PartitionPolicy, SamplingPlan};

    fn scalar(x: f64) -> Mat<f64> {
        Mat::from_fn(1, 1, |_, _| x)
    }

    fn lag(d: f64) -> DescriptorRealization {
        DescriptorRealization::standard(scalar(-1.0), scalar(1.0), scalar(1.0), scalar(d)).unwrap()
    }

    #[test]
    fn zeros_of_lag_plus_one() {
        let set = spectral_zeros(&lag(1.0)).unwrap();
        let mut z: Vec<f64> = set.zeros.iter().map(|z| z.re).collect();
        z.sort_by(f64::total_cmp);
        let r2 = 2f64.sqrt();
        assert!((z[0] + r2).abs() < 1e-10 && (z[1] - r2).abs() < 1e-10);
        assert!(set.zeros.iter().all(|z| z.im.abs() < 1e-12));
        assert!(set.residuals.iter().all(|&r| r < 1e-12));
        let pos = select_positive(&set, 1).unwrap();
        assert!((pos.zeros[0].re - r2).abs() < 1e-10);
    }

    #[test]
    fn lossless_shifted_zeros_sit_on_the_axis() {
        // Φ ≡ 2: only the cancelled pole at 0 shows up, twice
        let integ = DescriptorRealization::standard(scalar(0.0), scalar(1.0), scalar(1.0), scalar(1.0)).unwrap();
        let set = spectral_zeros(&integ).unwrap();
        assert!(set.zeros.iter().all(|z| z.norm() < 1e-8));
        assert!(matches!(select_positive(&set, 1), Err(Error::ZeroCount { found: 0, .. })));
    }

    #[test]
    fn zero_set_is_mirror_symmetric() {
        let a = Mat::from_fn(3, 3, |i, j| [[-1.0, 2.0, 0.0], [-2.0, -1.0, 0.5], [0.0, 0.3, -2.0]][i][j]);
        let b = Mat::from_fn(3, 2, |i, j| [[1.0, 0.0], [0.5, 1.0], [0.0, 0.7]][i][j]);
        let c = b.transpose().to_owned();
        let d = Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 0.2 });
        let sys = DescriptorRealization::standard(a, b, c, d).unwrap();
        let set = spectral_zeros(&sys).unwrap();
        assert_eq!(set.len(), 6);
        for z in &set.zeros {
            let mirror = -z.conj();
            assert!(set.zeros.iter().any(|w| (w - mirror).norm() < 1e-8 * z.norm()));
        }
        assert!(set.residuals.iter().all(|&r| r < 1e-8));
        let pos = select_positive(&set, 3).unwrap();
        for j in 0..pos.len() {
            if pos.zeros[j].im > 0.0 {
                assert_eq!(pos.zeros[j + 1], pos.zeros[j].conj());
            }
        }
    }

    #[test]
    fn wrong_count_is_reported() {
        let set = SpectralZeroSet {
            zeros: vec![c64::new(1e-12, 1.0), c64::new(1e-12, -1.0), c64::new(2.0, 0.0)],
            directions: Mat::from_fn(1, 3, |_, _| c64::new(1.0, 0.0)),
            residuals: vec![0.0; 3],
            aux: None,
            scale: 0.0,
        };
        match select_positive(&set, 3) {
            Err(Error::ZeroCount { expected: 3, found: 1, near_axis: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn worked_chain() {
        let r2 = 2f64.sqrt();
        let model = lag(1.0);
        let zeros = SpectralZeroSet {
            zeros: vec![c64::new(r2, 0.0)],
            directions: Mat::from_fn(1, 1, |_, _| c64::new(1.0, 0.0)),
            residuals: vec![0.0],
            aux: None,
            scale: 0.0,
        };
        let (right, left) = build_passive_data(&zeros, &model).unwrap();
        assert!((right.w[(0, 0)] - c64::new(r2, 0.0)).norm() < 1e-14);
        assert!((left.mu[0] + r2).norm() < 1e-15);
        assert!((left.v[(0, 0)] + r2).norm() < 1e-14);
        let pp = passive_loewner(&right, &left).unwrap();
        assert!((pp.pencil.ll[(0, 0)].re - 1.0).abs() < 1e-14);
        assert!(pp.pencil.sll[(0, 0)].norm() < 1e-14);
        let up = unshift_pencil(&pp, scalar(1.0).as_ref()).unwrap();
        assert!((up.pencil.sll[(0, 0)].re + 1.0).abs() < 1e-14);
        assert!((up.pencil.v[(0, 0)].re + r2 + 1.0).abs() < 1e-14);
        assert!((up.pencil.w[(0, 0)].re - (r2 - 1.0)).abs() < 1e-14);
        let nz = normalize_ph(&up, scalar(1.0).as_ref()).unwrap();
        let s = &nz.s_matrix;
        let expect = [[1.0, -(r2 + 1.0)], [r2 - 1.0, 1.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((s[(i, j)] - expect[i][j]).abs() < 1e-13, "{i}{j}: {}", s[(i, j)]);
            }
        }
        let ph = extract_ph(s.as_ref(), 1).unwrap();
        assert!(ph.j.to_dense()[(0, 0)].abs() < 1e-14);
        assert!((ph.g[(0, 0)] - r2).abs() < 1e-13);
        assert!((ph.p[(0, 0)] + 1.0).abs() < 1e-13);
        assert!((ph.r.to_dense()[(0, 0)] - 1.0).abs() < 1e-13);
        assert!((ph.s[(0, 0)] - 1.0).abs() < 1e-13);
        assert!(ph.n[(0, 0)].abs() < 1e-14);
        assert!(ph.check_structure(1e-10).unwrap().valid);
        let desc = ph_to_descriptor(&ph).unwrap();
        for w in [0.0, 0.5, 3.0] {
            let s = c64::new(0.0, w);
            let h = desc.transfer(s).unwrap()[(0, 0)];
            assert!((h - ((s + 1.0).inv() + 1.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn extract_symmetric_and_skew() {
        let sym = Mat::from_fn(3, 3, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let ph = extract_ph(sym.as_ref(), 1).unwrap();
        assert_eq!(linalg::fro(ph.j.to_dense().as_ref()), 0.0);
        assert_eq!(linalg::fro(ph.g.as_ref()), 0.0);
        assert_eq!(linalg::fro(ph.n.as_ref()), 0.0);
        let skew = Mat::from_fn(3, 3, |i, j| i as f64 - j as f64);
        let ph = extract_ph(skew.as_ref(), 1).unwrap();
        assert_eq!(linalg::fro(ph.r.to_dense().as_ref()), 0.0);
        assert_eq!(linalg::fro(ph.p.as_ref()), 0.0);
        assert_eq!(linalg::fro(ph.s.as_ref()), 0.0);
    }

    #[test]
    fn identity_loewner_normalizes_trivially() {
        let pencil = LoewnerPencil {
            ll: Mat::identity(2, 2),
            sll: Mat::zeros(2, 2),
            v: Mat::from_fn(2, 1, |_, _| c64::new(1.0, 0.0)),
            w: Mat::from_fn(1, 2, |_, _| c64::new(1.0, 0.0)),
            l: Mat::zeros(2, 1),
            r: Mat::zeros(1, 2),
            lambda: Mat::identity(2, 2),
            mu: Mat::identity(2, 2),
        };
        let pp = PassiveLoewnerPencil { pencil, hermitian_defect: 0.0, skew_defect: 0.0, min_eig: 1.0 };
        let nz = normalize_ph(&pp, scalar(0.0).as_ref()).unwrap();
        assert_eq!(nz.t, Mat::<f64>::identity(2, 2));
    }

    #[test]
    fn indefinite_loewner_rejected() {
        let pencil = LoewnerPencil {
            ll: Mat::from_fn(2, 2, |i, j| c64::new(if i == j { [1.0, -1.0][i] } else { 0.0 }, 0.0)),
            sll: Mat::zeros(2, 2),
            v: Mat::zeros(2, 1),
            w: Mat::zeros(1, 2),
            l: Mat::zeros(2, 1),
            r: Mat::zeros(1, 2),
            lambda: Mat::identity(2, 2),
            mu: Mat::identity(2, 2),
        };
        let pp = PassiveLoewnerPencil { pencil, hermitian_defect: 0.0, skew_defect: 0.0, min_eig: -1.0 };
        assert!(matches!(normalize_ph(&pp, scalar(0.0).as_ref()), Err(Error::Indefinite { .. })));
    }

    #[test]
    fn end_to_end_lag() {
        let plan = SamplingPlan::new(log_grid(-1.0, 2.0, 20), DirectionPolicy::CycledIdentity, PartitionPolicy::Alternate).unwrap();
        let (r, l) = sample_data(&lag(0.0), &plan).unwrap();
        let id = identify_ph(&r, &l, &IdentifyOptions::shifted(1.0, 1)).unwrap();
        assert_eq!(id.diagnostics.order_used, 1);
        assert!(id.ph.s[(0, 0)].abs() < 1e-12);
        for w in log_grid(-1.0, 2.0, 50) {
            let s = c64::new(0.0, w);
            let h = id.ph.transfer(s).unwrap()[(0, 0)];
            assert!((h - (s + 1.0).inv()).norm() <= 1e-10 * (s + 1.0).inv().norm());
        }
    }
}
