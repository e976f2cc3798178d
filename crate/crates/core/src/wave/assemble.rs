use faer::{c64, Mat};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, SysMat};
use crate::lti::{DescriptorRealization, PHRealization, TransferFunction};

/// Per-element coefficient, either uniform or one value per triangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Field<T> {
    Uniform(T),
    PerElement(Vec<T>),
}

impl<T: Copy> Field<T> {
    fn at(&self, t: usize) -> T {
        match self {
            Field::Uniform(v) => *v,
            Field::PerElement(v) => v[t],
        }
    }

    fn check_len(&self, n: usize, name: &str) -> Result<()> {
        match self {
            Field::PerElement(v) if v.len() != n => {
                Err(Error::Dimension(format!("{name} has {} values for {n} elements", v.len())))
            }
            _ => Ok(()),
        }
    }
}

/// Density `ρ`, symmetric stiffness tensor `T = [[t11, t12], [t12, t22]]`
/// and damping `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveParams {
    pub rho: Field<f64>,
    pub tensor: Field<[f64; 3]>,
    pub eps: Field<f64>,
}

impl Default for WaveParams {
    fn default() -> Self {
        Self::isotropic(1.0, 1.0, 1e-3)
    }
}

impl WaveParams {
    pub fn isotropic(rho: f64, t: f64, eps: f64) -> Self {
        Self { rho: Field::Uniform(rho), tensor: Field::Uniform([t, 0.0, t]), eps: Field::Uniform(eps) }
    }

    pub fn validate(&self, elements: usize) -> Result<()> {
        self.rho.check_len(elements, "rho")?;
        self.tensor.check_len(elements, "tensor")?;
        self.eps.check_len(elements, "eps")?;
        for t in 0..elements {
            let rho = self.rho.at(t);
            let [a, b, c] = self.tensor.at(t);
            let eps = self.eps.at(t);
            if !(rho > 0.0) {
                return Err(Error::Invalid(format!("density must be positive (element {t}: {rho})")));
            }
            if !(a > 0.0 && a * c - b * b > 0.0) {
                return Err(Error::Invalid(format!("tensor is not positive definite on element {t}")));
            }
            if !(eps >= 0.0) {
                return Err(Error::Invalid(format!("damping must be nonnegative (element {t}: {eps})")));
            }
        }
        Ok(())
    }
}

/// Finite-element matrices. DOF families: `e_q` piecewise-constant vectors
/// (two per triangle, `x` then `y`), `e_p` continuous P1 on vertices, the
/// boundary port P1 on boundary vertices in loop order.
#[derive(Debug, Clone)]
pub struct FEMatrices {
    pub m_q: SparseMatrix,
    pub m_p: SparseMatrix,
    pub m_eps: SparseMatrix,
    pub m_bnd: SparseMatrix,
    /// `G_ij = ∫ φ_q^i · ∇φ_p^j`.
    pub g: SparseMatrix,
    /// `B_jk = ∫_∂Ω φ_p^j ψ^k`.
    pub b: SparseMatrix,
    pub boundary_vertices: Vec<usize>,
    pub boundary_points: Vec<[f64; 2]>,
    pub area: f64,
}

impl FEMatrices {
    pub fn n_q(&self) -> usize {
        self.m_q.nrows()
    }

    pub fn n_p(&self) -> usize {
        self.m_p.nrows()
    }

    pub fn n_bnd(&self) -> usize {
        self.m_bnd.nrows()
    }

    /// State dimension `N_q + N_p`.
    pub fn order(&self) -> usize {
        self.n_q() + self.n_p()
    }
}

struct Local {
    q: Vec<(usize, usize, f64)>,
    p: Vec<(usize, usize, f64)>,
    e: Vec<(usize, usize, f64)>,
    g: Vec<(usize, usize, f64)>,
}

fn element(mesh: &Mesh, params: &WaveParams, t: usize) -> Local {
    let tri = mesh.triangles[t];
    let [p0, p1, p2] = tri.map(|v| mesh.vertices[v]);
    let area = mesh.area(t);
    // ∇λ_k = rot90(opposite edge) / (2·area)
    let grads = [
        [(p1[1] - p2[1]) / (2.0 * area), (p2[0] - p1[0]) / (2.0 * area)],
        [(p2[1] - p0[1]) / (2.0 * area), (p0[0] - p2[0]) / (2.0 * area)],
        [(p0[1] - p1[1]) / (2.0 * area), (p1[0] - p0[0]) / (2.0 * area)],
    ];
    let [a, b, c] = params.tensor.at(t);
    let det = a * c - b * b;
    let tinv = [[c / det, -b / det], [-b / det, a / det]];
    let (rho, eps) = (params.rho.at(t), params.eps.at(t));
    let mut loc = Local { q: Vec::with_capacity(4), p: Vec::with_capacity(9), e: Vec::with_capacity(9), g: Vec::with_capacity(6) };
    for d in 0..2 {
        for f in 0..2 {
            loc.q.push((2 * t + d, 2 * t + f, area * tinv[d][f]));
        }
        for k in 0..3 {
            loc.g.push((2 * t + d, tri[k], area * grads[k][d]));
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            let w = area / 12.0 * if i == j { 2.0 } else { 1.0 };
            loc.p.push((tri[i], tri[j], rho * w));
            loc.e.push((tri[i], tri[j], eps * w));
        }
    }
    loc
}

/// Exact-quadrature assembly; elements are processed in parallel and merged
/// in element order.
pub fn assemble(mesh: &Mesh, params: &WaveParams) -> Result<FEMatrices> {
    let nt = mesh.triangles.len();
    params.validate(nt)?;
    if let Some(t) = (0..nt).find(|&t| !(mesh.area(t) > 0.0)) {
        return Err(Error::Invalid(format!("degenerate element {t}")));
    }
    let locals: Vec<Local> = (0..nt).into_par_iter().map(|t| element(mesh, params, t)).collect();
    let (mut q, mut p, mut e, mut g) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for l in locals {
        q.extend(l.q);
        p.extend(l.p);
        e.extend(l.e);
        g.extend(l.g);
    }
    let nv = mesh.vertices.len();
    let bv = mesh.boundary_vertices();
    let nb = bv.len();
    let mut mb = Vec::with_capacity(4 * nb);
    let mut bb = Vec::with_capacity(4 * nb);
    for k in 0..nb {
        let (a, b) = (k, (k + 1) % nb);
        let [u, v] = mesh.boundary_edges[k];
        let (pu, pv) = (mesh.vertices[u], mesh.vertices[v]);
        let len = (pv[0] - pu[0]).hypot(pv[1] - pu[1]);
        for (i, vi) in [(a, u), (b, v)] {
            for (j, _) in [(a, u), (b, v)] {
                let w = len / 6.0 * if i == j { 2.0 } else { 1.0 };
                mb.push((i, j, w));
                bb.push((vi, j, w));
            }
        }
    }
    Ok(FEMatrices {
        m_q: SparseMatrix::from_triplets(2 * nt, 2 * nt, q)?,
        m_p: SparseMatrix::from_triplets(nv, nv, p)?,
        m_eps: SparseMatrix::from_triplets(nv, nv, e)?,
        m_bnd: SparseMatrix::from_triplets(nb, nb, mb)?,
        g: SparseMatrix::from_triplets(2 * nt, nv, g)?,
        b: SparseMatrix::from_triplets(nv, nb, bb)?,
        boundary_points: bv.iter().map(|&v| mesh.vertices[v]).collect(),
        boundary_vertices: bv,
        area: mesh.total_area(),
    })
}

fn offset(m: &SparseMatrix, r0: usize, c0: usize, k: f64) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
    m.entries().iter().map(move |&(i, j, v)| (i + r0, j + c0, k * v))
}

/// Sparse pH model in co-energy variables `x = (e_q, e_p)` with `Q = I`:
/// `M = blkdiag(M_q, M_p)`, `J = [[0, G], [−Gᵀ, 0]]`, `R = blkdiag(0, M_ε)`,
/// input matrix `[0; B]`, output `Bᵀe_p = M_∂ y_∂`.
pub fn fom_realization(fem: &FEMatrices) -> Result<PHRealization> {
    let (nq, np) = (fem.n_q(), fem.n_p());
    let n = nq + np;
    let m = fem.n_bnd();
    let mass = SparseMatrix::from_triplets(n, n, offset(&fem.m_q, 0, 0, 1.0).chain(offset(&fem.m_p, nq, nq, 1.0)).collect())?;
    let j = SparseMatrix::from_triplets(
        n,
        n,
        fem.g
            .entries()
            .iter()
            .flat_map(|&(i, c, v)| [(i, nq + c, v), (nq + c, i, -v)])
            .collect(),
    )?;
    let r = SparseMatrix::from_triplets(n, n, offset(&fem.m_eps, nq, nq, 1.0).collect())?;
    let mut g = Mat::<f64>::zeros(n, m);
    for &(i, k, v) in fem.b.entries() {
        g[(nq + i, k)] += v;
    }
    PHRealization::new(
        SysMat::Sparse(mass),
        None,
        SysMat::Sparse(j),
        SysMat::Sparse(r),
        g,
        Mat::zeros(n, m),
        Mat::zeros(m, m),
        Mat::zeros(m, m),
    )
}

/// `½ e_qᵀ M_q e_q + ½ e_pᵀ M_p e_p`.
pub fn discrete_hamiltonian(fem: &FEMatrices, e_q: &[f64], e_p: &[f64]) -> Result<f64> {
    if e_q.len() != fem.n_q() || e_p.len() != fem.n_p() {
        return Err(Error::Dimension("state does not match the discretization".into()));
    }
    Ok(0.5 * (fem.m_q.quad_form(e_q) + fem.m_p.quad_form(e_p)))
}

impl FEMatrices {
    /// Sparse descriptor model restricted to the given boundary channels
    /// (zero-based indices in the boundary ordering).
    pub fn channel_model(&self, channels: &[usize]) -> Result<DescriptorRealization> {
        let m = self.n_bnd();
        if channels.is_empty() || channels.iter().any(|&c| c >= m) {
            return Err(Error::Invalid(format!("channels must be nonempty indices below {m}")));
        }
        let ph = fom_realization(self)?;
        let a = ph.state_matrix()?;
        let (nq, n) = (self.n_q(), self.order());
        let mut b = Mat::<f64>::zeros(n, channels.len());
        for &(i, k, v) in self.b.entries() {
            for (c, &ch) in channels.iter().enumerate() {
                if ch == k {
                    b[(nq + i, c)] += v;
                }
            }
        }
        let c = b.transpose().to_owned();
        let p = channels.len();
        DescriptorRealization::new(Some(ph.m.clone()), a, b, c, Mat::zeros(p, p))
    }
}

/// Frequency response `H(iω)` on the selected channels, one `p×p` matrix per
/// grid point, evaluated by sparse solves in parallel.
pub fn sample_fom(fem: &FEMatrices, omega: &[f64], channels: &[usize]) -> Result<Vec<Mat<c64>>> {
    let sys = fem.channel_model(channels)?;
    let pts: Vec<c64> = omega.iter().map(|&w| c64::new(0.0, w)).collect();
    sys.transfer_many(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave::mesh::{mesh_lshape, Domain};

    fn right_triangle() -> Mesh {
        Mesh::from_triangles(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]], Domain::Custom).unwrap()
    }

    #[test]
    fn p1_mass_on_unit_triangle() {
        let fem = assemble(&right_triangle(), &WaveParams::isotropic(1.0, 1.0, 0.0)).unwrap();
        let mp = fem.m_p.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                let want = 0.5 / 12.0 * if i == j { 2.0 } else { 1.0 };
                assert!((mp[(i, j)] - want).abs() < 1e-16);
            }
        }
        assert_eq!(fem.m_eps.to_dense(), Mat::<f64>::zeros(3, 3));
    }

    #[test]
    fn q_mass_is_area_times_inverse_tensor() {
        let mesh = mesh_lshape(0.5).unwrap();
        let fem = assemble(&mesh, &WaveParams::isotropic(1.0, 1.0, 0.0)).unwrap();
        let mq = fem.m_q.to_dense();
        for i in 0..fem.n_q() {
            for j in 0..fem.n_q() {
                let want = if i == j { 0.125 } else { 0.0 };
                assert_eq!(mq[(i, j)], want);
            }
        }
        let aniso = WaveParams { tensor: Field::Uniform([2.0, 0.5, 1.0]), ..WaveParams::default() };
        let fem = assemble(&mesh, &aniso).unwrap();
        let blk = fem.m_q.to_dense();
        let det = 2.0 - 0.25;
        assert!((blk[(0, 0)] - 0.125 / det).abs() < 1e-15);
        assert!((blk[(0, 1)] + 0.125 * 0.5 / det).abs() < 1e-15);
    }

    #[test]
    fn boundary_mass_edge_blocks() {
        let fem = assemble(&right_triangle(), &WaveParams::default()).unwrap();
        let mb = fem.m_bnd.to_dense();
        // edges of length 1, √2, 1 around the loop
        let l = [1.0, 2f64.sqrt(), 1.0];
        for k in 0..3 {
            let diag = (l[k] + l[(k + 2) % 3]) / 3.0;
            assert!((mb[(k, k)] - diag).abs() < 1e-15);
            assert!((mb[(k, (k + 1) % 3)] - l[k] / 6.0).abs() < 1e-15);
        }
        // the trace of P1 on the boundary is the boundary P1 space
        let b = fem.b.to_dense();
        for (k, &v) in fem.boundary_vertices.iter().enumerate() {
            for j in 0..3 {
                assert_eq!(b[(v, j)], mb[(k, j)]);
            }
        }
    }

    #[test]
    fn gradient_matrix_annihilates_constants() {
        let fem = assemble(&mesh_lshape(0.25).unwrap(), &WaveParams::default()).unwrap();
        let ones = vec![1.0; fem.n_p()];
        assert!(fem.g.mul_vec(&ones).iter().all(|v| v.abs() < 1e-14));
        // ∫ e_x · ∇x = area
        let x: Vec<f64> = mesh_lshape(0.25).unwrap().vertices.iter().map(|p| p[0]).collect();
        let gx = fem.g.mul_vec(&x);
        let sum_x: f64 = gx.iter().step_by(2).sum();
        assert!((sum_x - 3.0).abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_of_constant_velocity() {
        let fem = assemble(&mesh_lshape(0.25).unwrap(), &WaveParams::default()).unwrap();
        let eq = vec![0.0; fem.n_q()];
        let ep = vec![1.0; fem.n_p()];
        assert!((discrete_hamiltonian(&fem, &eq, &ep).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(discrete_hamiltonian(&fem, &eq, &vec![0.0; fem.n_p()]).unwrap(), 0.0);
        let ep2: Vec<f64> = ep.iter().map(|v| 2.0 * v).collect();
        let h2 = discrete_hamiltonian(&fem, &eq, &ep2).unwrap();
        assert!((h2 - 6.0).abs() < 1e-12);
    }

    #[test]
    fn fom_structure() {
        let fem = assemble(&mesh_lshape(0.25).unwrap(), &WaveParams::isotropic(1.0, 1.0, 0.0)).unwrap();
        let ph = fom_realization(&fem).unwrap();
        assert_eq!(ph.order(), 257);
        assert_eq!(ph.ports(), 32);
        let j = ph.j.to_sparse();
        assert_eq!(j.skew_defect_abs(), 0.0);
        assert_eq!(ph.r.fro_norm(), 0.0);
        let rep = ph.check_structure(1e-12).unwrap();
        assert!(rep.valid && rep.m_spd);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mesh = mesh_lshape(0.5).unwrap();
        assert!(assemble(&mesh, &WaveParams::isotropic(0.0, 1.0, 0.0)).is_err());
        assert!(assemble(&mesh, &WaveParams::isotropic(1.0, -1.0, 0.0)).is_err());
        assert!(assemble(&mesh, &WaveParams::isotropic(1.0, 1.0, -1.0)).is_err());
        let short = WaveParams { rho: Field::PerElement(vec![1.0; 3]), ..WaveParams::default() };
        assert!(assemble(&mesh, &short).is_err());
    }

    #[test]
    fn response_is_reciprocal() {
        let fem = assemble(&mesh_lshape(0.25).unwrap(), &WaveParams::default()).unwrap();
        let h = sample_fom(&fem, &[0.7, 5.0], &[0, 1, 20]).unwrap();
        for hk in &h {
            for i in 0..3 {
                for j in 0..3 {
                    assert!((hk[(i, j)] - hk[(j, i)]).norm() <= 1e-10 * hk[(i, i)].norm());
                }
            }
        }
    }
}
