use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    LShape,
    Rectangle,
    Custom,
}

/// Conforming triangulation with counterclockwise triangles and a
/// counterclockwise boundary loop (interior on the left of every edge).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    /// Ordered along the boundary; edge `k` ends where edge `k+1` starts.
    pub boundary_edges: Vec<[usize; 2]>,
    pub domain: Domain,
}

fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

impl Mesh {
    /// Validates the triangles and extracts the boundary, starting at the
    /// boundary vertex closest to the origin.
    pub fn from_triangles(vertices: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>, domain: Domain) -> Result<Self> {
        let mut edges: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::Invalid(format!("triangle {t} references a missing vertex")));
            }
            let area = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(area > 0.0) {
                return Err(Error::Invalid(format!("degenerate or clockwise triangle {t} (area {area:.3e})")));
            }
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let e = edges.entry((a.min(b), a.max(b))).or_insert((0, 0));
                e.0 += 1;
                if e.0 == 1 {
                    e.1 = a;
                }
            }
        }
        if let Some((k, _)) = edges.iter().find(|(_, v)| v.0 > 2) {
            return Err(Error::Invalid(format!("edge {k:?} is shared by more than two triangles")));
        }
        // boundary edges keep the orientation of their single triangle
        let mut next: HashMap<usize, usize> = HashMap::new();
        for (&(a, b), &(count, from)) in &edges {
            if count == 1 {
                let to = if from == a { b } else { a };
                if next.insert(from, to).is_some() {
                    return Err(Error::Invalid(format!("boundary is not a simple loop at vertex {from}")));
                }
            }
        }
        if next.is_empty() {
            return Err(Error::Invalid("mesh has no boundary".into()));
        }
        let start = *next
            .keys()
            .min_by(|&&a, &&b| {
                let (pa, pb) = (vertices[a], vertices[b]);
                (pa[0].hypot(pa[1]), pa[0], pa[1]).partial_cmp(&(pb[0].hypot(pb[1]), pb[0], pb[1])).unwrap()
            })
            .unwrap();
        let mut boundary_edges = Vec::with_capacity(next.len());
        let mut v = start;
        loop {
            let w = next[&v];
            boundary_edges.push([v, w]);
            v = w;
            if v == start {
                break;
            }
            if boundary_edges.len() > next.len() {
                return Err(Error::Invalid("boundary loop does not close".into()));
            }
        }
        if boundary_edges.len() != next.len() {
            return Err(Error::Invalid("boundary has more than one loop".into()));
        }
        Ok(Self { vertices, triangles, boundary_edges, domain })
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.area(t)).sum()
    }

    /// Boundary vertices in loop order; the boundary DOF ordering.
    pub fn boundary_vertices(&self) -> Vec<usize> {
        self.boundary_edges.iter().map(|e| e[0]).collect()
    }

    /// Outward unit normal of boundary edge `k`.
    pub fn outward_normal(&self, k: usize) -> [f64; 2] {
        let [a, b] = self.boundary_edges[k];
        let (p, q) = (self.vertices[a], self.vertices[b]);
        let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
        let l = dx.hypot(dy);
        [dy / l, -dx / l]
    }

    /// Index in the boundary ordering of the boundary vertex nearest to `p`.
    pub fn nearest_boundary_dof(&self, p: [f64; 2]) -> usize {
        let bv = self.boundary_vertices();
        (0..bv.len())
            .min_by(|&i, &j| {
                let (a, b) = (self.vertices[bv[i]], self.vertices[bv[j]]);
                let da = (a[0] - p[0]).hypot(a[1] - p[1]);
                let db = (b[0] - p[0]).hypot(b[1] - p[1]);
                da.total_cmp(&db)
            })
            .unwrap_or(0)
    }
}

fn cells_per_unit(h: f64, feature: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Invalid(format!("mesh size must be positive, got {h}")));
    }
    if h > feature {
        return Err(Error::Invalid(format!("mesh size {h} exceeds the domain feature size {feature}")));
    }
    Ok((1.0 / h - 1e-9).ceil() as usize)
}

fn structured(cells_x: usize, cells_y: usize, h: f64, keep: impl Fn(usize, usize) -> bool, domain: Domain) -> Result<Mesh> {
    let mut index = vec![usize::MAX; (cells_x + 1) * (cells_y + 1)];
    let mut vertices = Vec::new();
    let id = |i: usize, j: usize| j * (cells_x + 1) + i;
    for j in 0..cells_y {
        for i in 0..cells_x {
            if keep(i, j) {
                for (a, b) in [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)] {
                    if index[id(a, b)] == usize::MAX {
                        index[id(a, b)] = usize::MAX - 1;
                    }
                }
            }
        }
    }
    for j in 0..=cells_y {
        for i in 0..=cells_x {
            if index[id(i, j)] != usize::MAX {
                index[id(i, j)] = vertices.len();
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }
    }
    let mut triangles = Vec::new();
    for j in 0..cells_y {
        for i in 0..cells_x {
            if keep(i, j) {
                let (a, b, c, d) = (index[id(i, j)], index[id(i + 1, j)], index[id(i + 1, j + 1)], index[id(i, j + 1)]);
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }
    }
    Mesh::from_triangles(vertices, triangles, domain)
}

/// Structured mesh of `[0,2]² \ (1,2]²`; `1/h` is rounded up to an integer.
pub fn mesh_lshape(h: f64) -> Result<Mesh> {
    let n = cells_per_unit(h, 1.0)?;
    structured(2 * n, 2 * n, 1.0 / n as f64, |i, j| i < n || j < n, Domain::LShape)
}

/// Structured mesh of `[0,lx]×[0,ly]` with square cells of side `h`
/// (both side lengths must be multiples of `h`).
pub fn mesh_rectangle(lx: f64, ly: f64, h: f64) -> Result<Mesh> {
    let feature = lx.min(ly);
    cells_per_unit(h, feature)?;
    let (nx, ny) = ((lx / h).round() as usize, (ly / h).round() as usize);
    if ((nx as f64) * h - lx).abs() > 1e-9 * lx || ((ny as f64) * h - ly).abs() > 1e-9 * ly {
        return Err(Error::Invalid(format!("rectangle sides {lx}×{ly} are not multiples of {h}")));
    }
    structured(nx, ny, h, |_, _| true, Domain::Rectangle)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_lshape_counts() {
        let m = mesh_lshape(1.0).unwrap();
        assert_eq!(m.triangles.len(), 6);
        assert_eq!(m.boundary_edges.len(), 8);
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(mesh_lshape(0.5).unwrap().triangles.len(), 24);
    }

    #[test]
    fn areas_are_half_h_squared() {
        for h in [1.0, 0.5, 0.25] {
            let m = mesh_lshape(h).unwrap();
            assert!((0..m.triangles.len()).all(|t| (m.area(t) - h * h / 2.0).abs() < 1e-15));
            assert!((m.total_area() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn boundary_starts_at_origin_and_runs_counterclockwise() {
        let m = mesh_lshape(0.25).unwrap();
        let bv = m.boundary_vertices();
        assert_eq!(m.vertices[bv[0]], [0.0, 0.0]);
        assert_eq!(m.vertices[bv[1]], [0.25, 0.0]);
        assert_eq!(bv.len(), 32);
        // shoelace over the loop is the positive area
        let mut a = 0.0;
        for e in &m.boundary_edges {
            let (p, q) = (m.vertices[e[0]], m.vertices[e[1]]);
            a += 0.5 * (p[0] * q[1] - q[0] * p[1]);
        }
        assert!((a - 3.0).abs() < 1e-12);
        for k in 0..m.boundary_edges.len() {
            assert_eq!(m.boundary_edges[k][1], m.boundary_edges[(k + 1) % bv.len()][0]);
        }
        assert_eq!(m.outward_normal(0), [0.0, -1.0]);
    }

    #[test]
    fn far_corner_of_the_upper_leg() {
        let m = mesh_lshape(0.0625).unwrap();
        let k = m.nearest_boundary_dof([0.5, 2.0]);
        assert_eq!(m.vertices[m.boundary_vertices()[k]], [0.5, 2.0]);
        assert_eq!(k, 88);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(mesh_lshape(1.5).is_err());
        assert!(mesh_lshape(0.0).is_err());
        assert!(mesh_rectangle(1.0, 1.0, 0.3).is_err());
        assert_eq!(mesh_rectangle(2.0, 1.0, 0.5).unwrap().triangles.len(), 16);
    }

    #[test]
    fn rejects_degenerate_triangle() {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        assert!(Mesh::from_triangles(v, vec![[0, 1, 2]], Domain::Custom).is_err());
    }
}
