//! Right/left tangential data: sampling, conjugate closure and shifting.

use faer::{c64, Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lti::TransferFunction;

/// Right data `{λ_j, r_j, w_j}`; `r` and `w` hold one column per point.
#[derive(Debug, Clone, PartialEq)]
pub struct RightData {
    pub lambda: Vec<c64>,
    pub r: Mat<c64>,
    pub w: Mat<c64>,
}

/// Left data `{μ_i, l_i, v_i}`; `l` and `v` hold one column per point
/// (the row vectors `l_iᵀ`, `v_iᵀ` stored transposed).
#[derive(Debug, Clone, PartialEq)]
pub struct LeftData {
    pub mu: Vec<c64>,
    pub l: Mat<c64>,
    pub v: Mat<c64>,
}

impl RightData {
    pub fn new(lambda: Vec<c64>, r: Mat<c64>, w: Mat<c64>) -> Result<Self> {
        check_side(lambda.len(), &r, &w, "right")?;
        Ok(Self { lambda, r, w })
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn ports(&self) -> usize {
        self.r.nrows()
    }
}

impl LeftData {
    pub fn new(mu: Vec<c64>, l: Mat<c64>, v: Mat<c64>) -> Result<Self> {
        check_side(mu.len(), &l, &v, "left")?;
        Ok(Self { mu, l, v })
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn ports(&self) -> usize {
        self.l.nrows()
    }
}

fn check_side(k: usize, dir: &Mat<c64>, resp: &Mat<c64>, side: &str) -> Result<()> {
    if dir.ncols() != k || resp.ncols() != k || dir.nrows() != resp.nrows() {
        return Err(Error::Dimension(format!(
            "{side} data: {k} points, directions {}x{}, responses {}x{}",
            dir.nrows(),
            dir.ncols(),
            resp.nrows(),
            resp.ncols()
        )));
    }
    for j in 0..k {
        if (0..dir.nrows()).all(|i| dir[(i, j)] == c64::new(0.0, 0.0)) {
            return Err(Error::Invalid(format!("{side} direction {j} is zero")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DirectionPolicy {
    #[default]
    CycledIdentity,
    RandomUnit { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PartitionPolicy {
    /// 1st, 3rd, 5th, … frequency to the right set, the others to the left.
    #[default]
    Alternate,
    /// Lower half of the grid to the right set.
    SplitHalf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub omega: Vec<f64>,
    #[serde(default)]
    pub directions: DirectionPolicy,
    #[serde(default)]
    pub partition: PartitionPolicy,
}

impl SamplingPlan {
    pub fn new(omega: Vec<f64>, directions: DirectionPolicy, partition: PartitionPolicy) -> Result<Self> {
        let plan = Self { omega, directions, partition };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega.is_empty() {
            return Err(Error::Invalid("empty frequency grid".into()));
        }
        if self.omega.iter().any(|w| !w.is_finite() || *w <= 0.0) {
            return Err(Error::Invalid("frequencies must be positive and finite".into()));
        }
        if self.omega.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Invalid("frequency grid must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Grid indices assigned to the right and to the left set.
    pub fn split(&self) -> (Vec<usize>, Vec<usize>) {
        let n = self.omega.len();
        match self.partition {
            PartitionPolicy::Alternate => ((0..n).step_by(2).collect(), (1..n).step_by(2).collect()),
            PartitionPolicy::SplitHalf => {
                let h = n.div_ceil(2);
                ((0..h).collect(), (h..n).collect())
            }
        }
    }
}

/// `count` logarithmically spaced points in `[10^lo, 10^hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![10f64.powf(lo)],
        _ => (0..count)
            .map(|k| 10f64.powf(lo + (hi - lo) * k as f64 / (count - 1) as f64))
            .collect(),
    }
}

fn directions(policy: DirectionPolicy, m: usize, k: usize, stream: u64) -> Mat<c64> {
    match policy {
        DirectionPolicy::CycledIdentity => Mat::from_fn(m, k, |i, j| {
            if i == j % m { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) }
        }),
        DirectionPolicy::RandomUnit { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let mut out = Mat::zeros(m, k);
            for j in 0..k {
                let mut col: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
                let nrm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nrm == 0.0 {
                    col[0] = 1.0;
                } else {
                    col.iter_mut().for_each(|x| *x /= nrm);
                }
                for i in 0..m {
                    out[(i, j)] = c64::new(col[i], 0.0);
                }
            }
            out
        }
    }
}

fn evaluate(oracle: &dyn TransferFunction, omega: &[f64]) -> Result<Vec<Mat<c64>>> {
    let pts: Vec<c64> = omega.iter().map(|&w| c64::new(0.0, w)).collect();
    match oracle.transfer_many(&pts) {
        Ok(v) => Ok(v),
        Err(_) => {
            // locate the offending frequency
            let mut out = Vec::with_capacity(pts.len());
            for (&w, &s) in omega.iter().zip(&pts) {
                out.push(oracle.transfer(s).map_err(|e| Error::Oracle { omega: w, source: Box::new(e) })?);
            }
            Ok(out)
        }
    }
}

/// Samples `H(iω)` on the plan's grid and forms tangential data:
/// `w_j = H(iω_j) r_j` on the right, `v_iᵀ = l_iᵀ H(iω_i)` on the left.
pub fn sample_data(oracle: &dyn TransferFunction, plan: &SamplingPlan) -> Result<(RightData, LeftData)> {
    plan.validate()?;
    let h = evaluate(oracle, &plan.omega)?;
    data_from_samples(&h, plan)
}

/// Tangential data from full matrix samples `h[k] = H(iω_k)` on the plan's grid.
pub fn data_from_samples(h: &[Mat<c64>], plan: &SamplingPlan) -> Result<(RightData, LeftData)> {
    plan.validate()?;
    if h.len() != plan.omega.len() {
        return Err(Error::Dimension(format!("{} samples for {} grid points", h.len(), plan.omega.len())));
    }
    let m = h.first().map(|x| x.nrows()).unwrap_or(0);
    if h.iter().any(|x| x.nrows() != m || x.ncols() != m) {
        return Err(Error::Dimension("samples must be square and of equal size".into()));
    }
    let (ri, li) = plan.split();
    let r = directions(plan.directions, m, ri.len(), 0);
    let l = directions(plan.directions, m, li.len(), 1);
    let w = Mat::from_fn(m, ri.len(), |i, j| (0..m).map(|k| h[ri[j]][(i, k)] * r[(k, j)]).sum());
    let v = Mat::from_fn(m, li.len(), |i, j| (0..m).map(|k| l[(k, j)] * h[li[j]][(k, i)]).sum());
    let right = RightData::new(ri.iter().map(|&i| c64::new(0.0, plan.omega[i])).collect(), r, w)?;
    let left = LeftData::new(li.iter().map(|&i| c64::new(0.0, plan.omega[i])).collect(), l, v)?;
    Ok((right, left))
}

fn is_real(z: c64) -> bool {
    z.im.abs() <= 1e-14 * z.norm()
}

fn close_side(points: &[c64], a: &Mat<c64>, b: &Mat<c64>) -> (Vec<c64>, Mat<c64>, Mat<c64>) {
    let m = a.nrows();
    let mut pts = Vec::new();
    let mut cols: Vec<usize> = Vec::new();
    let mut conj: Vec<bool> = Vec::new();
    let mut used = vec![false; points.len()];
    for j in 0..points.len() {
        if used[j] {
            continue;
        }
        used[j] = true;
        let p = points[j];
        pts.push(p);
        cols.push(j);
        conj.push(false);
        if is_real(p) {
            continue;
        }
        // an existing conjugate partner is moved next to its pair
        let partner = (j + 1..points.len()).find(|&k| !used[k] && (points[k] - p.conj()).norm() <= 1e-14 * p.norm());
        match partner {
            Some(k) => {
                used[k] = true;
                pts.push(points[k]);
                cols.push(k);
                conj.push(false);
            }
            None => {
                pts.push(p.conj());
                cols.push(j);
                conj.push(true);
            }
        }
    }
    let pick = |src: &Mat<c64>| {
        Mat::from_fn(m, pts.len(), |i, c| {
            let x = src[(i, cols[c])];
            if conj[c] { x.conj() } else { x }
        })
    };
    let na = pick(a);
    let nb = pick(b);
    (pts, na, nb)
}

/// Adds the complex-conjugate triple of every non-real sample, placing each
/// conjugate directly after its partner.
pub fn conjugate_close(right: &RightData, left: &LeftData) -> (RightData, LeftData) {
    let (lambda, r, w) = close_side(&right.lambda, &right.r, &right.w);
    let (mu, l, v) = close_side(&left.mu, &left.l, &left.v);
    (RightData { lambda, r, w }, LeftData { mu, l, v })
}

/// `w_j ← w_j + D_s r_j`, `v_iᵀ ← v_iᵀ + l_iᵀ D_s` after checking `D_s + D_sᵀ ≻ 0`.
pub fn shift_data(right: &RightData, left: &LeftData, ds: MatRef<'_, f64>) -> Result<(RightData, LeftData)> {
    check_shift(ds)?;
    shift_data_unchecked(right, left, ds)
}

/// Rejects shifts whose symmetric part is not positive definite.
pub fn check_shift(ds: MatRef<'_, f64>) -> Result<()> {
    if ds.nrows() != ds.ncols() {
        return Err(Error::Dimension("shift must be square".into()));
    }
    let sym = ds + ds.transpose();
    let min_eig = linalg::sym_eigenvalues(sym.as_ref())?.first().copied().unwrap_or(0.0);
    if min_eig > 0.0 { Ok(()) } else { Err(Error::NonPositiveShift { min_eig }) }
}

/// The shift without the positivity check (also used with `−D_s` to undo a shift).
pub fn shift_data_unchecked(right: &RightData, left: &LeftData, ds: MatRef<'_, f64>) -> Result<(RightData, LeftData)> {
    let m = right.ports();
    if ds.nrows() != m || ds.ncols() != m || left.ports() != m {
        return Err(Error::Dimension(format!("shift is {}x{}, data has {m} ports", ds.nrows(), ds.ncols())));
    }
    let dc = linalg::to_complex(ds);
    let w = &right.w + &dc * &right.r;
    let v = &left.v + dc.transpose() * &left.l;
    Ok((
        RightData { lambda: right.lambda.clone(), r: right.r.clone(), w },
        LeftData { mu: left.mu.clone(), l: left.l.clone(), v },
    ))
}

/// Largest tangential residual `‖H(λ_j) r_j − w_j‖ / ‖w_j‖` (and the left
/// analogue) of a model against the data.
pub fn interpolation_residuals(model: &dyn TransferFunction, right: &RightData, left: &LeftData) -> Result<(f64, f64)> {
    let hr = model.transfer_many(&right.lambda)?;
    let hl = model.transfer_many(&left.mu)?;
    let m = right.ports();
    let mut rmax: f64 = 0.0;
    for (j, h) in hr.iter().enumerate() {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..m {
            let hv: c64 = (0..m).map(|k| h[(i, k)] * right.r[(k, j)]).sum();
            num += (hv - right.w[(i, j)]).norm_sqr();
            den += right.w[(i, j)].norm_sqr();
        }
        rmax = rmax.max(num.sqrt() / den.sqrt().max(f64::MIN_POSITIVE));
    }
    let mut lmax: f64 = 0.0;
    for (j, h) in hl.iter().enumerate() {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..m {
            let hv: c64 = (0..m).map(|k| left.l[(k, j)] * h[(k, i)]).sum();
            num += (hv - left.v[(i, j)]).norm_sqr();
            den += left.v[(i, j)].norm_sqr();
        }
        lmax = lmax.max(num.sqrt() / den.sqrt().max(f64::MIN_POSITIVE));
    }
    Ok((rmax, lmax))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SysMat;
    use crate::lti::DescriptorRealization;

    fn lag() -> DescriptorRealization {
        let one = |x: f64| Mat::from_fn(1, 1, |_, _| x);
        DescriptorRealization::new(None, SysMat::Dense(one(-1.0)), one(1.0), one(1.0), one(0.0)).unwrap()
    }

    fn diag3() -> DescriptorRealization {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { -(i as f64 + 1.0) } else { 0.0 });
        DescriptorRealization::standard(a, Mat::identity(3, 3), Mat::identity(3, 3), Mat::zeros(3, 3)).unwrap()
    }

    #[test]
    fn default_grid_alternate_split() {
        let plan = SamplingPlan::new(log_grid(-1.0, 3.5, 300), DirectionPolicy::CycledIdentity, PartitionPolicy::Alternate).unwrap();
        let (r, l) = sample_data(&lag(), &plan).unwrap();
        assert_eq!((r.len(), l.len()), (150, 150));
        assert!(r.r.col_iter().all(|c| c[0] == c64::new(1.0, 0.0)));
        let (rc, lc) = conjugate_close(&r, &l);
        assert_eq!((rc.len(), lc.len()), (300, 300));
    }

    #[test]
    fn split_half_differs_by_at_most_one() {
        let plan = SamplingPlan::new(log_grid(0.0, 1.0, 7), DirectionPolicy::CycledIdentity, PartitionPolicy::SplitHalf).unwrap();
        let (a, b) = plan.split();
        assert_eq!((a.len(), b.len()), (4, 3));
    }

    #[test]
    fn cycled_identity_directions() {
        let plan = SamplingPlan::new(log_grid(0.0, 1.0, 8), DirectionPolicy::CycledIdentity, PartitionPolicy::Alternate).unwrap();
        let (r, _) = sample_data(&diag3(), &plan).unwrap();
        for j in 0..r.len() {
            for i in 0..3 {
                let expect = if i == j % 3 { 1.0 } else { 0.0 };
                assert_eq!(r.r[(i, j)], c64::new(expect, 0.0));
            }
        }
    }

    #[test]
    fn random_directions_are_unit_and_seeded() {
        let plan = SamplingPlan::new(log_grid(0.0, 1.0, 6), DirectionPolicy::RandomUnit { seed: 7 }, PartitionPolicy::Alternate).unwrap();
        let (r1, l1) = sample_data(&diag3(), &plan).unwrap();
        let (r2, _) = sample_data(&diag3(), &plan).unwrap();
        assert_eq!(r1, r2);
        for c in r1.r.col_iter().chain(l1.l.col_iter()) {
            let n: f64 = c.iter().map(|x| x.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn sampled_data_interpolates_exactly() {
        let plan = SamplingPlan::new(log_grid(-1.0, 1.0, 10), DirectionPolicy::RandomUnit { seed: 1 }, PartitionPolicy::Alternate).unwrap();
        let sys = diag3();
        let (r, l) = sample_data(&sys, &plan).unwrap();
        let (er, el) = interpolation_residuals(&sys, &r, &l).unwrap();
        assert!(er < 1e-15 && el < 1e-15);
    }

    #[test]
    fn unsorted_grid_rejected() {
        assert!(SamplingPlan::new(vec![1.0, 0.5], DirectionPolicy::CycledIdentity, PartitionPolicy::Alternate).is_err());
    }

    #[test]
    fn closure_of_single_point() {
        let w = c64::new(0.5, -0.5);
        let right = RightData::new(vec![c64::new(0.0, 1.0)], Mat::from_fn(1, 1, |_, _| c64::new(1.0, 0.0)), Mat::from_fn(1, 1, |_, _| w)).unwrap();
        let left = LeftData::new(vec![], Mat::zeros(1, 0), Mat::zeros(1, 0)).unwrap();
        let (rc, _) = conjugate_close(&right, &left);
        assert_eq!(rc.lambda, vec![c64::new(0.0, 1.0), c64::new(0.0, -1.0)]);
        assert_eq!(rc.w[(0, 1)], w.conj());
        let (rcc, _) = conjugate_close(&rc, &left);
        assert_eq!(rcc, rc);
    }

    #[test]
    fn shift_examples() {
        let one = |x: f64| Mat::from_fn(1, 1, |_, _| c64::new(x, 0.0));
        let right = RightData::new(vec![c64::new(0.0, 1.0)], one(1.0), one(0.5)).unwrap();
        let left = LeftData::new(vec![c64::new(0.0, 2.0)], one(1.0), one(0.25)).unwrap();
        let (r, l) = shift_data(&right, &left, Mat::from_fn(1, 1, |_, _| 1.0).as_ref()).unwrap();
        assert_eq!(r.w[(0, 0)], c64::new(1.5, 0.0));
        assert_eq!(l.v[(0, 0)], c64::new(1.25, 0.0));
        let (r0, _) = shift_data_unchecked(&right, &left, Mat::<f64>::zeros(1, 1).as_ref()).unwrap();
        assert_eq!(r0, right);
        assert!(matches!(shift_data(&right, &left, Mat::<f64>::zeros(1, 1).as_ref()), Err(Error::NonPositiveShift { .. })));

        let r2 = RightData::new(
            vec![c64::new(0.0, 1.0)],
            Mat::from_fn(2, 1, |i, _| c64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0)),
            Mat::from_fn(2, 1, |i, _| c64::new(if i == 0 { 0.3 } else { 0.1 }, 0.0)),
        )
        .unwrap();
        let l2 = LeftData::new(vec![], Mat::zeros(2, 0), Mat::zeros(2, 0)).unwrap();
        let (s2, _) = shift_data(&r2, &l2, Mat::<f64>::identity(2, 2).as_ref()).unwrap();
        assert!((s2.w[(0, 0)] - c64::new(1.3, 0.0)).norm() < 1e-15);
        assert!((s2.w[(1, 0)] - c64::new(0.1, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn shift_roundtrip() {
        let plan = SamplingPlan::new(log_grid(-1.0, 1.0, 9), DirectionPolicy::RandomUnit { seed: 3 }, PartitionPolicy::Alternate).unwrap();
        let (r, l) = sample_data(&diag3(), &plan).unwrap();
        let ds = Mat::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.1 * (i as f64 - j as f64) });
        let (rs, ls) = shift_data(&r, &l, ds.as_ref()).unwrap();
        let (rb, lb) = shift_data_unchecked(&rs, &ls, linalg::scale(ds.as_ref(), -1.0).as_ref()).unwrap();
        assert!(linalg::fro_c((&rb.w - &r.w).as_ref()) < 1e-15);
        assert!(linalg::fro_c((&lb.v - &l.v).as_ref()) < 1e-15);
    }
}
