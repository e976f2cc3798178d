//! Realization containers, transfer-function evaluation, spectral density and
//! the sampled passivity/stability classification.

use faer::{c64, Mat, MatRef};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ShiftedSparseSolver, SysMat};

/// Realizations above this order are evaluated with sparse storage.
pub const SPARSE_THRESHOLD: usize = 2000;

/// Relative tolerance for the structural (skew / PSD) checks.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// Anything with an m×m transfer matrix that can be evaluated off its poles.
pub trait TransferFunction: Sync {
    fn ports(&self) -> usize;

    fn transfer(&self, s: c64) -> Result<Mat<c64>>;

    /// Evaluates on a set of points, in order; implementations may share
    /// factorization work across points.
    fn transfer_many(&self, points: &[c64]) -> Result<Vec<Mat<c64>>> {
        points.par_iter().map(|&s| self.transfer(s)).collect()
    }
}

/// `Φ(s) = H(s) + Hᵀ(−s)`.
pub fn spectral_density(sys: &dyn TransferFunction, s: c64) -> Result<Mat<c64>> {
    let h = sys.transfer(s)?;
    let hm = sys.transfer(-s)?;
    Ok(Mat::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] + hm[(j, i)]))
}

/// Descriptor realization `E ẋ = A x + B u, y = C x + D u`; `e = None`
/// stands for the identity (standard form).
#[derive(Debug, Clone)]
pub struct DescriptorRealization {
    pub e: Option<SysMat>,
    pub a: SysMat,
    pub b: Mat<f64>,
    pub c: Mat<f64>,
    pub d: Mat<f64>,
}

impl DescriptorRealization {
    pub fn new(e: Option<SysMat>, a: SysMat, b: Mat<f64>, c: Mat<f64>, d: Mat<f64>) -> Result<Self> {
        let n = a.nrows();
        let m = b.ncols();
        let ok = a.ncols() == n
            && e.as_ref().map_or(true, |e| e.nrows() == n && e.ncols() == n)
            && b.nrows() == n
            && c.nrows() == d.nrows()
            && c.ncols() == n
            && d.ncols() == m;
        if !ok {
            return Err(Error::Dimension(format!(
                "descriptor realization: A {}x{}, B {}x{}, C {}x{}, D {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        Ok(Self { e, a, b, c, d })
    }

    /// Standard form `(I, A, B, C, D)` with dense storage.
    pub fn standard(a: Mat<f64>, b: Mat<f64>, c: Mat<f64>, d: Mat<f64>) -> Result<Self> {
        Self::new(None, SysMat::Dense(a), b, c, d)
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn is_sparse(&self) -> bool {
        self.a.is_sparse() || self.e.as_ref().is_some_and(|e| e.is_sparse())
    }

    /// Switches to sparse storage above [`SPARSE_THRESHOLD`].
    pub fn with_auto_storage(mut self) -> Self {
        if self.order() > SPARSE_THRESHOLD {
            self.a = SysMat::Sparse(self.a.to_sparse());
            self.e = self.e.map(|e| SysMat::Sparse(e.to_sparse()));
        }
        self
    }

    pub fn a_dense(&self) -> Mat<f64> {
        self.a.to_dense()
    }

    pub fn e_dense(&self) -> Mat<f64> {
        match &self.e {
            Some(e) => e.to_dense(),
            None => Mat::identity(self.order(), self.order()),
        }
    }

    fn transfer_dense(&self, s: c64) -> Result<Mat<c64>> {
        let n = self.order();
        if n == 0 {
            return Ok(linalg::to_complex(self.d.as_ref()));
        }
        let a = self.a.to_dense();
        let pencil = match &self.e {
            Some(e) => {
                let e = e.to_dense();
                Mat::from_fn(n, n, |i, j| s * e[(i, j)] - c64::new(a[(i, j)], 0.0))
            }
            None => Mat::from_fn(n, n, |i, j| {
                let d = if i == j { s } else { c64::new(0.0, 0.0) };
                d - c64::new(a[(i, j)], 0.0)
            }),
        };
        let b = linalg::to_complex(self.b.as_ref());
        let x = linalg::solve_c(pencil.as_ref(), b.as_ref()).ok_or(Error::SingularShift { s })?;
        Ok(self.finish(x.as_ref()))
    }

    fn finish(&self, x: MatRef<'_, c64>) -> Mat<c64> {
        let c = linalg::to_complex(self.c.as_ref());
        let mut h = &c * x;
        for j in 0..h.ncols() {
            for i in 0..h.nrows() {
                h[(i, j)] += c64::new(self.d[(i, j)], 0.0);
            }
        }
        h
    }

    /// Finite poles: eigenvalues of the pencil `(A, E)`.
    pub fn poles(&self) -> Result<Vec<c64>> {
        let a = self.a.to_dense();
        match &self.e {
            None => linalg::eigenvalues(a.as_ref()),
            Some(e) => linalg::generalized_eigenvalues(a.as_ref(), e.to_dense().as_ref(), 1e-12),
        }
    }

    /// Pole-based classification. Clustered imaginary-axis poles count as
    /// stable when the cluster is semisimple, i.e. `A − λE` has a null space of
    /// the cluster's size.
    pub fn stability(&self) -> Result<Stability> {
        let poles = self.poles()?;
        let cls = classify_poles(&poles);
        if cls == Stability::Unstable && self.axis_clusters_semisimple(&poles)? {
            return Ok(Stability::Stable);
        }
        Ok(cls)
    }

    fn axis_clusters_semisimple(&self, poles: &[c64]) -> Result<bool> {
        let rho = poles.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let scale = if rho > 0.0 { rho } else { 1.0 };
        let tol = 1e-10 * scale;
        if poles.iter().any(|p| p.re > tol) {
            return Ok(false);
        }
        let mut axis: Vec<c64> = poles.iter().copied().filter(|p| p.re.abs() <= tol).collect();
        axis.sort_by(|a, b| a.im.total_cmp(&b.im));
        let gap = 1e-8 * scale;
        let a = self.a.to_dense();
        let e = self.e_dense();
        let size = linalg::fro(a.as_ref()) + linalg::fro(e.as_ref());
        let mut i = 0;
        while i < axis.len() {
            let mut j = i + 1;
            while j < axis.len() && (axis[j] - axis[j - 1]).norm() <= gap {
                j += 1;
            }
            if j - i > 1 {
                let lam = axis[i..j].iter().sum::<c64>() / (j - i) as f64;
                let m = Mat::from_fn(a.nrows(), a.ncols(), |r, c| c64::new(a[(r, c)], 0.0) - lam * e[(r, c)]);
                let sv = linalg::singular_values_c(m.as_ref())?;
                let nullity = sv.iter().filter(|&&v| v <= 1e-9 * size * (1.0 + lam.norm())).count();
                if nullity < j - i {
                    return Ok(false);
                }
            }
            i = j;
        }
        Ok(true)
    }

    /// Restriction to a subset of input/output channels.
    pub fn select_channels(&self, channels: &[usize]) -> Result<Self> {
        for &c in channels {
            if c >= self.inputs() || c >= self.outputs() {
                return Err(Error::Invalid(format!("channel {c} out of range")));
            }
        }
        let b = Mat::from_fn(self.order(), channels.len(), |i, j| self.b[(i, channels[j])]);
        let c = Mat::from_fn(channels.len(), self.order(), |i, j| self.c[(channels[i], j)]);
        let d = Mat::from_fn(channels.len(), channels.len(), |i, j| self.d[(channels[i], channels[j])]);
        Self::new(self.e.clone(), self.a.clone(), b, c, d)
    }

    /// Adds a constant to the feedthrough.
    pub fn with_added_feedthrough(&self, delta: MatRef<'_, f64>) -> Self {
        let mut out = self.clone();
        out.d = &self.d + delta;
        out
    }
}

impl TransferFunction for DescriptorRealization {
    fn ports(&self) -> usize {
        self.inputs()
    }

    fn transfer(&self, s: c64) -> Result<Mat<c64>> {
        if self.is_sparse() {
            let solver = ShiftedSparseSolver::new(self.e.as_ref(), &self.a)?;
            let b = linalg::to_complex(self.b.as_ref());
            let x = solver.solve(s, b.as_ref())?;
            Ok(self.finish(x.as_ref()))
        } else {
            self.transfer_dense(s)
        }
    }

    fn transfer_many(&self, points: &[c64]) -> Result<Vec<Mat<c64>>> {
        if self.is_sparse() {
            let solver = ShiftedSparseSolver::new(self.e.as_ref(), &self.a)?;
            let b = linalg::to_complex(self.b.as_ref());
            points
                .par_iter()
                .map(|&s| solver.solve(s, b.as_ref()).map(|x| self.finish(x.as_ref())))
                .collect()
        } else {
            points.par_iter().map(|&s| self.transfer_dense(s)).collect()
        }
    }
}

/// Dense complex descriptor realization (e.g. a Loewner model before
/// realification).
#[derive(Debug, Clone)]
pub struct ComplexRealization {
    pub e: Option<Mat<c64>>,
    pub a: Mat<c64>,
    pub b: Mat<c64>,
    pub c: Mat<c64>,
    pub d: Mat<c64>,
}

impl ComplexRealization {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Real realization when all imaginary parts are negligible
    /// (≤ `tol` relative to each matrix norm).
    pub fn to_real(&self, tol: f64) -> Option<DescriptorRealization> {
        let check = |m: &Mat<c64>| {
            let im = linalg::fro(linalg::imag_part(m.as_ref()).as_ref());
            im <= tol * linalg::fro_c(m.as_ref()).max(f64::MIN_POSITIVE)
        };
        let all_real = check(&self.a) && check(&self.b) && check(&self.c) && check(&self.d)
            && self.e.as_ref().map_or(true, check);
        if !all_real {
            return None;
        }
        DescriptorRealization::new(
            self.e.as_ref().map(|e| SysMat::Dense(linalg::real_part(e.as_ref()))),
            SysMat::Dense(linalg::real_part(self.a.as_ref())),
            linalg::real_part(self.b.as_ref()),
            linalg::real_part(self.c.as_ref()),
            linalg::real_part(self.d.as_ref()),
        )
        .ok()
    }
}

impl TransferFunction for ComplexRealization {
    fn ports(&self) -> usize {
        self.b.ncols()
    }

    fn transfer(&self, s: c64) -> Result<Mat<c64>> {
        let n = self.order();
        let pencil = Mat::from_fn(n, n, |i, j| {
            let e = match &self.e {
                Some(e) => e[(i, j)],
                None if i == j => c64::new(1.0, 0.0),
                None => c64::new(0.0, 0.0),
            };
            s * e - self.a[(i, j)]
        });
        let x = linalg::solve_c(pencil.as_ref(), self.b.as_ref()).ok_or(Error::SingularShift { s })?;
        Ok(&(&self.c * &x) + &self.d)
    }
}

/// Port-Hamiltonian realization
/// `M ẋ = (J − R) Q x + (G − P) u, y = (G + P)ᵀ Q x + (N + S) u`;
/// `q = None` stands for the identity.
#[derive(Debug, Clone)]
pub struct PHRealization {
    pub m: SysMat,
    pub q: Option<SysMat>,
    pub j: SysMat,
    pub r: SysMat,
    pub g: Mat<f64>,
    pub p: Mat<f64>,
    pub n: Mat<f64>,
    pub s: Mat<f64>,
}

/// Outcome of the structural checks on a [`PHRealization`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureReport {
    /// ‖J + Jᵀ‖_F / ‖J‖_F.
    pub j_skew_defect: f64,
    /// ‖N + Nᵀ‖_F / ‖N‖_F.
    pub n_skew_defect: f64,
    /// Smallest eigenvalue of the symmetric dissipation block, relative to its norm
    /// (`None` when only a definiteness test was run).
    pub dissipation_min_eig: Option<f64>,
    pub dissipation_psd: bool,
    pub m_spd: bool,
    pub q_psd: bool,
    pub valid: bool,
}

impl PHRealization {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        m: SysMat,
        q: Option<SysMat>,
        j: SysMat,
        r: SysMat,
        g: Mat<f64>,
        p: Mat<f64>,
        n: Mat<f64>,
        s: Mat<f64>,
    ) -> Result<Self> {
        let dim = j.nrows();
        let ports = g.ncols();
        let square = |x: &SysMat| x.nrows() == dim && x.ncols() == dim;
        let ok = square(&m)
            && square(&j)
            && square(&r)
            && q.as_ref().map_or(true, square)
            && g.nrows() == dim
            && p.nrows() == dim
            && p.ncols() == ports
            && n.nrows() == ports
            && n.ncols() == ports
            && s.nrows() == ports
            && s.ncols() == ports;
        if !ok {
            return Err(Error::Dimension("pH realization blocks are inconsistent".into()));
        }
        Ok(Self { m, q, j, r, g, p, n, s })
    }

    pub fn order(&self) -> usize {
        self.j.nrows()
    }

    pub fn ports(&self) -> usize {
        self.g.ncols()
    }

    fn q_or_identity(&self) -> SysMat {
        match &self.q {
            Some(q) => q.clone(),
            None if self.j.is_sparse() => SysMat::Sparse(linalg::SparseMatrix::identity(self.order())),
            None => SysMat::identity_dense(self.order()),
        }
    }

    /// `(J − R) Q`.
    pub fn state_matrix(&self) -> Result<SysMat> {
        let jr = self.j.axpby(1.0, &self.r, -1.0)?;
        Ok(match &self.q {
            None => jr,
            Some(q) => jr.matmul(q),
        })
    }

    /// Checks the structural invariants with relative tolerance `tol`.
    pub fn check_structure(&self, tol: f64) -> Result<StructureReport> {
        let j_skew_defect = match &self.j {
            SysMat::Dense(j) => linalg::skew_defect(j.as_ref()),
            SysMat::Sparse(j) => {
                let n = j.fro_norm();
                if n == 0.0 { 0.0 } else { j.skew_defect_abs() / n }
            }
        };
        let n_skew_defect = linalg::skew_defect(self.n.as_ref());
        let dim = self.order();
        let ports = self.ports();
        let (dissipation_min_eig, dissipation_psd) = if self.r.is_sparse() || dim > SPARSE_THRESHOLD {
            // definiteness via sparse Cholesky of W + tol‖W‖ I
            let mut trip = self.r.triplets();
            for i in 0..dim {
                for k in 0..ports {
                    let v = self.p[(i, k)];
                    if v != 0.0 {
                        trip.push((i, dim + k, v));
                        trip.push((dim + k, i, v));
                    }
                }
            }
            for i in 0..ports {
                for k in 0..ports {
                    trip.push((dim + i, dim + k, self.s[(i, k)]));
                }
            }
            let w = linalg::SparseMatrix::from_triplets(dim + ports, dim + ports, trip)?;
            let shift = tol * w.fro_norm().max(f64::MIN_POSITIVE);
            let sym_ok = w.sym_defect_abs() <= tol * w.fro_norm().max(f64::MIN_POSITIVE);
            (None, sym_ok && w.is_spd_with_shift(shift))
        } else {
            let w = self.dissipation_block();
            let nrm = linalg::fro(w.as_ref());
            let sym_ok = linalg::sym_defect(w.as_ref()) <= tol;
            let ev = linalg::sym_eigenvalues(w.as_ref())?;
            let min = ev.first().copied().unwrap_or(0.0);
            let rel = if nrm > 0.0 { min / nrm } else { 0.0 };
            (Some(rel), sym_ok && rel >= -tol)
        };
        let m_spd = spd_check(&self.m, tol, true)?;
        let q_psd = match &self.q {
            None => true,
            Some(q) => spd_check(q, tol, false)?,
        };
        let valid = j_skew_defect <= tol && n_skew_defect <= tol && dissipation_psd && m_spd && q_psd;
        Ok(StructureReport {
            j_skew_defect,
            n_skew_defect,
            dissipation_min_eig,
            dissipation_psd,
            m_spd,
            q_psd,
            valid,
        })
    }

    /// Dense `[[R, P], [Pᵀ, S]]`.
    pub fn dissipation_block(&self) -> Mat<f64> {
        let dim = self.order();
        let k = self.ports();
        let r = self.r.to_dense();
        Mat::from_fn(dim + k, dim + k, |i, j| match (i < dim, j < dim) {
            (true, true) => r[(i, j)],
            (true, false) => self.p[(i, j - dim)],
            (false, true) => self.p[(j, i - dim)],
            (false, false) => self.s[(i - dim, j - dim)],
        })
    }

    /// Lyapunov stability follows from the structure; asymptotic stability is
    /// decided from the eigenvalues when the model is small enough to be
    /// treated densely.
    pub fn stability(&self) -> Result<Stability> {
        let report = self.check_structure(STRUCTURE_TOL)?;
        if report.valid && (self.order() > SPARSE_THRESHOLD || self.m.is_sparse()) {
            return Ok(Stability::Stable);
        }
        let poles = ph_to_descriptor(self)?.poles()?;
        let cls = classify_poles(&poles);
        if report.valid && cls == Stability::Unstable {
            // semisimple imaginary-axis eigenvalues are guaranteed by the structure
            let rho = poles.iter().map(|p| p.norm()).fold(0.0, f64::max);
            let tol = 1e-10 * rho.max(1e-300);
            if poles.iter().all(|p| p.re <= tol) {
                return Ok(Stability::Stable);
            }
        }
        Ok(cls)
    }

    /// Direct evaluation `(G+P)ᵀQ(sM − (J−R)Q)⁻¹(G−P) + (N+S)`.
    fn transfer_direct(&self, s: c64) -> Result<Mat<c64>> {
        let a = self.state_matrix()?;
        let bin = &self.g - &self.p;
        let cout_t = self.q_or_identity().transpose().mul_dense((&self.g + &self.p).as_ref());
        let bin_c = linalg::to_complex(bin.as_ref());
        let x = if a.is_sparse() || self.m.is_sparse() {
            ShiftedSparseSolver::new(Some(&self.m), &a)?.solve(s, bin_c.as_ref())?
        } else {
            let dim = self.order();
            let md = self.m.to_dense();
            let ad = a.to_dense();
            let pencil = Mat::from_fn(dim, dim, |i, j| s * md[(i, j)] - c64::new(ad[(i, j)], 0.0));
            linalg::solve_c(pencil.as_ref(), bin_c.as_ref()).ok_or(Error::SingularShift { s })?
        };
        let ct = linalg::to_complex(cout_t.transpose());
        let mut h = &ct * &x;
        let ns = &self.n + &self.s;
        for j in 0..h.ncols() {
            for i in 0..h.nrows() {
                h[(i, j)] += c64::new(ns[(i, j)], 0.0);
            }
        }
        Ok(h)
    }
}

fn spd_check(x: &SysMat, tol: f64, strict: bool) -> Result<bool> {
    match x {
        SysMat::Sparse(s) => {
            let nrm = s.fro_norm().max(f64::MIN_POSITIVE);
            let sym = s.sym_defect_abs() <= tol * nrm;
            let shift = if strict { 0.0 } else { tol * nrm };
            Ok(sym && s.is_spd_with_shift(shift))
        }
        SysMat::Dense(d) => {
            let nrm = linalg::fro(d.as_ref()).max(f64::MIN_POSITIVE);
            let sym = linalg::sym_defect(d.as_ref()) <= tol;
            let ev = linalg::sym_eigenvalues(d.as_ref())?;
            let min = ev.first().copied().unwrap_or(0.0) / nrm;
            Ok(sym && if strict { min > 0.0 } else { min >= -tol })
        }
    }
}

impl TransferFunction for PHRealization {
    fn ports(&self) -> usize {
        self.g.ncols()
    }

    fn transfer(&self, s: c64) -> Result<Mat<c64>> {
        self.transfer_direct(s)
    }

    fn transfer_many(&self, points: &[c64]) -> Result<Vec<Mat<c64>>> {
        ph_to_descriptor(self)?.transfer_many(points)
    }
}

/// `E = M, A = (J−R)Q, B = G−P, C = (G+P)ᵀQ, D = N+S`.
pub fn ph_to_descriptor(ph: &PHRealization) -> Result<DescriptorRealization> {
    let a = ph.state_matrix()?;
    let b = &ph.g - &ph.p;
    let c = ph
        .q_or_identity()
        .transpose()
        .mul_dense((&ph.g + &ph.p).as_ref())
        .transpose()
        .to_owned();
    let d = &ph.n + &ph.s;
    DescriptorRealization::new(Some(ph.m.clone()), a, b, c, d)
}

/// Rewrites the model in the co-energy variable `e = Q x`:
/// `M Q⁻¹ ė = (J − R) e + (G − P) u`, with `Q ← I`.
pub fn to_coenergy(ph: &PHRealization) -> Result<PHRealization> {
    let Some(q) = &ph.q else {
        return Ok(ph.clone());
    };
    let qd = q.to_dense();
    if !spd_check(q, STRUCTURE_TOL, true)? {
        return Err(Error::Invalid("co-energy form needs a positive definite Q".into()));
    }
    let qinv = linalg::inverse(qd.as_ref())?;
    let m_new = ph.m.mul_dense(qinv.as_ref());
    PHRealization::new(
        SysMat::Dense(linalg::sym_part(m_new.as_ref())),
        None,
        ph.j.clone(),
        ph.r.clone(),
        ph.g.clone(),
        ph.p.clone(),
        ph.n.clone(),
        ph.s.clone(),
    )
}

/// Converts to standard form `(I, A, B, C, D)`.
///
/// A singular `E` is handled for index-one pencils: the algebraic part is
/// eliminated through an SVD of `E` and folds into the feedthrough. Singular
/// values below `DEFAULT_RANK_TOL·σ₁` count as zero, the same cut the
/// Loewner rank detection uses.
pub fn to_standard(sys: &DescriptorRealization) -> Result<DescriptorRealization> {
    to_standard_tol(sys, crate::loewner::DEFAULT_RANK_TOL)
}

/// [`to_standard`] with singular values of `E` below `tol·σ₁` treated as zero.
pub fn to_standard_tol(sys: &DescriptorRealization, tol: f64) -> Result<DescriptorRealization> {
    let Some(e) = &sys.e else {
        return Ok(sys.clone());
    };
    let e = e.to_dense();
    let a = sys.a.to_dense();
    let n = sys.order();
    let (u, sv, v) = linalg::svd(e.as_ref())?;
    let smax = sv.first().copied().unwrap_or(0.0);
    let k = sv.iter().filter(|&&x| x > tol * smax).count();
    if k == n {
        let einv = linalg::inverse(e.as_ref())?;
        return DescriptorRealization::standard(&einv * &a, &einv * &sys.b, sys.c.clone(), sys.d.clone());
    }
    // Uᵀ E V = diag(Σ, 0); U, V from the thin SVD of a square matrix are full.
    let at = u.transpose() * &a * &v;
    let bt = u.transpose() * &sys.b;
    let ct = &sys.c * &v;
    let (r1, r2) = (0..k, k..n);
    let sub = |m: &Mat<f64>, r: std::ops::Range<usize>, c: std::ops::Range<usize>| {
        m.as_ref().submatrix(r.start, c.start, r.len(), c.len()).to_owned()
    };
    let a11 = sub(&at, r1.clone(), r1.clone());
    let a12 = sub(&at, r1.clone(), r2.clone());
    let a21 = sub(&at, r2.clone(), r1.clone());
    let a22 = sub(&at, r2.clone(), r2.clone());
    let b1 = sub(&bt, r1.clone(), 0..sys.inputs());
    let b2 = sub(&bt, r2.clone(), 0..sys.inputs());
    let c1 = sub(&ct, 0..sys.outputs(), r1.clone());
    let c2 = sub(&ct, 0..sys.outputs(), r2.clone());
    let a22inv = linalg::inverse(a22.as_ref())
        .map_err(|_| Error::Numerical("descriptor pencil is not index one".into()))?;
    let x21 = &a22inv * &a21;
    let x2b = &a22inv * &b2;
    let sinv = Mat::from_fn(k, k, |i, j| if i == j { 1.0 / sv[i] } else { 0.0 });
    let a_s = &sinv * &(&a11 - &a12 * &x21);
    let b_s = &sinv * &(&b1 - &a12 * &x2b);
    let c_s = &c1 - &c2 * &x21;
    let d_s = &sys.d - &c2 * &x2b;
    DescriptorRealization::standard(a_s, b_s, c_s, d_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    AsymptoticallyStable,
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PassivityClass {
    StrictlyPassive,
    Passive,
    NotPassive,
    Undetermined,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PassivityReport {
    pub classification: PassivityClass,
    /// `(ω, λ_min(Φ(iω)))` on the sampled grid.
    pub min_eig_curve: Vec<(f64, f64)>,
    /// `λ_min(D + Dᵀ)`, the limit of the curve as ω → ∞.
    pub min_eig_at_infinity: f64,
    pub stability: Stability,
    pub tolerance: f64,
}

/// Stability class from a list of finite poles.
///
/// Poles with `|Re λ| ≤ 1e-10·ρ` count as imaginary-axis poles; two of them
/// closer than `1e-8·ρ` count as a repeated pole.
pub fn classify_poles(poles: &[c64]) -> Stability {
    let rho = poles.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let scale = if rho > 0.0 { rho } else { 1.0 };
    let tol = 1e-10 * scale;
    if poles.iter().any(|p| p.re > tol) {
        return Stability::Unstable;
    }
    let axis: Vec<c64> = poles.iter().copied().filter(|p| p.re.abs() <= tol).collect();
    if axis.is_empty() {
        return Stability::AsymptoticallyStable;
    }
    let gap = 1e-8 * scale;
    for (i, a) in axis.iter().enumerate() {
        if axis[i + 1..].iter().any(|b| (a - b).norm() <= gap) {
            return Stability::Unstable;
        }
    }
    Stability::Stable
}

/// Systems that can be classified for passivity.
pub trait LtiSystem: TransferFunction {
    fn stability(&self) -> Result<Stability>;
    /// `H(∞)` for proper systems.
    fn feedthrough(&self) -> Result<Mat<f64>>;
}

impl LtiSystem for DescriptorRealization {
    fn stability(&self) -> Result<Stability> {
        DescriptorRealization::stability(self)
    }

    fn feedthrough(&self) -> Result<Mat<f64>> {
        match &self.e {
            None => Ok(self.d.clone()),
            Some(_) if self.is_sparse() => Ok(self.d.clone()),
            Some(_) => Ok(to_standard(self)?.d),
        }
    }
}

impl LtiSystem for PHRealization {
    fn stability(&self) -> Result<Stability> {
        PHRealization::stability(self)
    }

    fn feedthrough(&self) -> Result<Mat<f64>> {
        Ok(&self.n + &self.s)
    }
}

/// Sampled passivity classification.
///
/// Positive realness is tested through the smallest eigenvalue of the
/// Hermitian part of `Φ(iω)` on the grid together with the ω → ∞ limit
/// `D + Dᵀ`; a sampled minimum within `1e-10·scale` of zero is reported as
/// undetermined.
pub fn classify_passivity(sys: &dyn LtiSystem, omega_grid: &[f64]) -> Result<PassivityReport> {
    if omega_grid.is_empty() {
        return Err(Error::Invalid("empty frequency grid".into()));
    }
    let stability = sys.stability()?;
    let pts: Vec<c64> = omega_grid
        .iter()
        .flat_map(|&w| [c64::new(0.0, w), c64::new(0.0, -w)])
        .collect();
    let vals = sys.transfer_many(&pts)?;
    let mut curve = Vec::with_capacity(omega_grid.len());
    let mut scale: f64 = 0.0;
    for (k, &w) in omega_grid.iter().enumerate() {
        let h = &vals[2 * k];
        let hm = &vals[2 * k + 1];
        let phi = Mat::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] + hm[(j, i)]);
        let ev = linalg::herm_eigenvalues(phi.as_ref())?;
        scale = scale.max(ev.iter().fold(0.0f64, |a, x| a.max(x.abs())));
        curve.push((w, ev[0]));
    }
    let d = sys.feedthrough()?;
    let dd = &d + d.transpose();
    let inf_min = linalg::sym_eigenvalues(dd.as_ref())?.first().copied().unwrap_or(0.0);
    scale = scale.max(inf_min.abs());
    let tol = 1e-10 * if scale > 0.0 { scale } else { 1.0 };
    let grid_min = curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let classification = if stability == Stability::Unstable || grid_min < -tol {
        PassivityClass::NotPassive
    } else if grid_min <= tol {
        PassivityClass::Undetermined
    } else if inf_min > tol && stability == Stability::AsymptoticallyStable {
        PassivityClass::StrictlyPassive
    } else {
        PassivityClass::Passive
    };
    Ok(PassivityReport {
        classification,
        min_eig_curve: curve,
        min_eig_at_infinity: inf_min,
        stability,
        tolerance: tol,
    })
}
