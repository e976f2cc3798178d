//! File formats: JSON realization container, MatrixMarket, tangential data
//! CSV/JSON, pencil dumps and the finite-element manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{SparseMatrix, SysMat};
use crate::loewner::{LoewnerPencil, OrderReport};
use crate::lti::{DescriptorRealization, PHRealization};
use crate::passive::SpectralZeroSet;
use crate::tangential::{LeftData, RightData};
use crate::wave::{FEMatrices, WaveParams};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.display().to_string(), source }
}

fn parse_err(path: &Path, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("{}: {msg}", path.display()))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    write_text(path, &s)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| parse_err(path, e))
}

/// Lowercase hex SHA-256 of a file's bytes.
pub fn file_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let digest = Sha256::digest(&bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(s, "{b:02x}");
    }
    Ok(s)
}

pub fn rows(a: MatRef<'_, f64>) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect()).collect()
}

pub fn rows_c(a: MatRef<'_, c64>) -> Vec<Vec<[f64; 2]>> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect()).collect()
}

/// Matrix from row-major nested arrays; `ncols` is needed for empty row lists.
pub fn from_rows(r: &[Vec<f64>], ncols: Option<usize>) -> Result<Mat<f64>> {
    let nc = r.first().map(|x| x.len()).or(ncols).unwrap_or(0);
    if r.iter().any(|x| x.len() != nc) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    Ok(Mat::from_fn(r.len(), nc, |i, j| r[i][j]))
}

pub fn from_rows_c(r: &[Vec<[f64; 2]>]) -> Result<Mat<c64>> {
    let nc = r.first().map(|x| x.len()).unwrap_or(0);
    if r.iter().any(|x| x.len() != nc) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    Ok(Mat::from_fn(r.len(), nc, |i, j| c64::new(r[i][j][0], r[i][j][1])))
}

// ---------------------------------------------------------------- MatrixMarket

pub fn write_mtx(path: &Path, a: &SparseMatrix) -> Result<()> {
    let mut s = String::with_capacity(40 * a.nnz() + 64);
    s.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for &(i, j, v) in a.entries() {
        let _ = writeln!(s, "{} {} {:.17e}", i + 1, j + 1, v);
    }
    write_text(path, &s)
}

/// Reads coordinate (general or symmetric) and dense array real matrices.
pub fn read_mtx(path: &Path) -> Result<SparseMatrix> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| parse_err(path, "empty file"))?.to_ascii_lowercase();
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(path, "missing MatrixMarket header"));
    }
    let (format, field, symmetry) = (fields[2], fields[3], fields[4]);
    if field != "real" && field != "integer" && field != "double" {
        return Err(parse_err(path, format!("unsupported field '{field}'")));
    }
    let symmetric = match symmetry {
        "general" => false,
        "symmetric" => true,
        other => return Err(parse_err(path, format!("unsupported symmetry '{other}'"))),
    };
    let mut body = lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%'));
    let size: Vec<usize> = body
        .next()
        .ok_or_else(|| parse_err(path, "missing size line"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(path, "bad size line")))
        .collect::<Result<_>>()?;
    let num = |t: Option<&str>| -> Result<f64> {
        t.ok_or_else(|| parse_err(path, "truncated entry"))?.parse::<f64>().map_err(|_| parse_err(path, "bad number"))
    };
    let mut trip = Vec::new();
    match format {
        "coordinate" => {
            if size.len() != 3 {
                return Err(parse_err(path, "coordinate size line needs three integers"));
            }
            for line in body {
                let mut t = line.split_whitespace();
                let i = num(t.next())? as usize;
                let j = num(t.next())? as usize;
                let v = num(t.next())?;
                if i == 0 || j == 0 || i > size[0] || j > size[1] {
                    return Err(parse_err(path, format!("entry ({i}, {j}) out of range")));
                }
                trip.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    trip.push((j - 1, i - 1, v));
                }
            }
            if trip.len() < size[2] {
                return Err(parse_err(path, "fewer entries than declared"));
            }
        }
        "array" => {
            if size.len() != 2 {
                return Err(parse_err(path, "array size line needs two integers"));
            }
            let vals: Vec<f64> = body.map(|l| num(Some(l))).collect::<Result<_>>()?;
            if vals.len() != size[0] * size[1] {
                return Err(parse_err(path, "array has the wrong number of values"));
            }
            for j in 0..size[1] {
                for i in 0..size[0] {
                    let v = vals[j * size[0] + i];
                    if v != 0.0 {
                        trip.push((i, j, v));
                    }
                }
            }
        }
        other => return Err(parse_err(path, format!("unsupported format '{other}'"))),
    }
    SparseMatrix::from_triplets(size[0], size[1], trip)
}

// ---------------------------------------------------------------- realizations

/// Dense nested array or a reference to a MatrixMarket file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixEntry {
    Dense(Vec<Vec<f64>>),
    File { mtx: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RealizationFile {
    Descriptor {
        e: Option<MatrixEntry>,
        a: MatrixEntry,
        b: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        d: Vec<Vec<f64>>,
    },
    Standard {
        a: MatrixEntry,
        b: Vec<Vec<f64>>,
        c: Vec<Vec<f64>>,
        d: Vec<Vec<f64>>,
    },
    Ph {
        m: MatrixEntry,
        q: Option<MatrixEntry>,
        j: MatrixEntry,
        r: MatrixEntry,
        g: Vec<Vec<f64>>,
        p: Vec<Vec<f64>>,
        n: Vec<Vec<f64>>,
        s: Vec<Vec<f64>>,
    },
}

/// A model read from or written to the realization container.
#[derive(Debug, Clone)]
pub enum Model {
    Descriptor(DescriptorRealization),
    Ph(PHRealization),
}

impl Model {
    pub fn to_descriptor(&self) -> Result<DescriptorRealization> {
        match self {
            Model::Descriptor(d) => Ok(d.clone()),
            Model::Ph(p) => crate::lti::ph_to_descriptor(p),
        }
    }
}

struct Writer<'a> {
    dir: &'a Path,
    stem: String,
}

impl Writer<'_> {
    fn entry(&self, name: &str, m: &SysMat) -> Result<MatrixEntry> {
        match m {
            SysMat::Dense(d) => Ok(MatrixEntry::Dense(rows(d.as_ref()))),
            SysMat::Sparse(s) => {
                let file = format!("{}_{name}.mtx", self.stem);
                write_mtx(&self.dir.join(&file), s)?;
                Ok(MatrixEntry::File { mtx: file })
            }
        }
    }
}

fn resolve(dir: &Path, e: &MatrixEntry, n: usize) -> Result<SysMat> {
    match e {
        MatrixEntry::Dense(r) => Ok(SysMat::Dense(from_rows(r, Some(n))?)),
        MatrixEntry::File { mtx } => {
            let p = Path::new(mtx);
            let p = if p.is_absolute() { p.to_path_buf() } else { dir.join(p) };
            Ok(SysMat::Sparse(read_mtx(&p)?))
        }
    }
}

/// Writes `model` as JSON; sparse blocks go to MatrixMarket files next to it.
pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into());
    let w = Writer { dir, stem };
    let file = match model {
        Model::Descriptor(d) => match &d.e {
            None => RealizationFile::Standard {
                a: w.entry("a", &d.a)?,
                b: rows(d.b.as_ref()),
                c: rows(d.c.as_ref()),
                d: rows(d.d.as_ref()),
            },
            Some(e) => RealizationFile::Descriptor {
                e: Some(w.entry("e", e)?),
                a: w.entry("a", &d.a)?,
                b: rows(d.b.as_ref()),
                c: rows(d.c.as_ref()),
                d: rows(d.d.as_ref()),
            },
        },
        Model::Ph(p) => RealizationFile::Ph {
            m: w.entry("m", &p.m)?,
            q: p.q.as_ref().map(|q| w.entry("q", q)).transpose()?,
            j: w.entry("j", &p.j)?,
            r: w.entry("r", &p.r)?,
            g: rows(p.g.as_ref()),
            p: rows(p.p.as_ref()),
            n: rows(p.n.as_ref()),
            s: rows(p.s.as_ref()),
        },
    };
    write_json(path, &file)
}

pub fn load_model(path: &Path) -> Result<Model> {
    let file: RealizationFile = read_json(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let wrap = |e: Error| match e {
        Error::Dimension(m) => parse_err(path, m),
        other => other,
    };
    match file {
        RealizationFile::Standard { a, b, c, d } => {
            let b = from_rows(&b, None)?;
            let a = resolve(dir, &a, b.nrows())?;
            let c = from_rows(&c, Some(b.nrows()))?;
            let d = from_rows(&d, Some(b.ncols()))?;
            DescriptorRealization::new(None, a, b, c, d).map(Model::Descriptor).map_err(wrap)
        }
        RealizationFile::Descriptor { e, a, b, c, d } => {
            let b = from_rows(&b, None)?;
            let n = b.nrows();
            let e = e.map(|e| resolve(dir, &e, n)).transpose()?;
            let a = resolve(dir, &a, n)?;
            let c = from_rows(&c, Some(n))?;
            let d = from_rows(&d, Some(b.ncols()))?;
            DescriptorRealization::new(e, a, b, c, d).map(Model::Descriptor).map_err(wrap)
        }
        RealizationFile::Ph { m, q, j, r, g, p, n, s } => {
            let g = from_rows(&g, None)?;
            let dim = g.nrows();
            let ports = g.ncols();
            PHRealization::new(
                resolve(dir, &m, dim)?,
                q.map(|q| resolve(dir, &q, dim)).transpose()?,
                resolve(dir, &j, dim)?,
                resolve(dir, &r, dim)?,
                g,
                from_rows(&p, Some(ports))?,
                from_rows(&n, Some(ports))?,
                from_rows(&s, Some(ports))?,
            )
            .map(Model::Ph)
            .map_err(wrap)
        }
    }
}

// ---------------------------------------------------------------- tangential data

/// CSV with columns `side, omega, dir_re_k, dir_im_k, resp_re_k, resp_im_k`;
/// points must lie on the imaginary axis (`λ = iω`).
pub fn write_data_csv(path: &Path, right: &RightData, left: &LeftData) -> Result<()> {
    let m = right.ports();
    let mut s = String::new();
    s.push_str("side,omega");
    for name in ["dir_re", "dir_im", "resp_re", "resp_im"] {
        for k in 1..=m {
            let _ = write!(s, ",{name}_{k}");
        }
    }
    s.push('\n');
    let mut emit = |side: &str, pt: c64, dir: MatRef<'_, c64>, resp: MatRef<'_, c64>, j: usize| -> Result<()> {
        if pt.re != 0.0 {
            return Err(Error::Invalid(format!("data point {pt} is not on the imaginary axis")));
        }
        let _ = write!(s, "{side},{:.17e}", pt.im);
        for part in [dir.col(j).iter().map(|z| z.re).collect::<Vec<_>>(), dir.col(j).iter().map(|z| z.im).collect(), resp.col(j).iter().map(|z| z.re).collect(), resp.col(j).iter().map(|z| z.im).collect()] {
            for v in part {
                let _ = write!(s, ",{v:.17e}");
            }
        }
        s.push('\n');
        Ok(())
    };
    for j in 0..right.len() {
        emit("R", right.lambda[j], right.r.as_ref(), right.w.as_ref(), j)?;
    }
    for i in 0..left.len() {
        emit("L", left.mu[i], left.l.as_ref(), left.v.as_ref(), i)?;
    }
    write_text(path, &s)
}

pub fn read_data_csv(path: &Path) -> Result<(RightData, LeftData)> {
    let text = read_text(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header: Vec<&str> = lines.next().ok_or_else(|| parse_err(path, "empty file"))?.split(',').map(str::trim).collect();
    if header.len() < 6 || header[0] != "side" || header[1] != "omega" || (header.len() - 2) % 4 != 0 {
        return Err(parse_err(path, "expected header side,omega,dir_re_*,dir_im_*,resp_re_*,resp_im_*"));
    }
    let m = (header.len() - 2) / 4;
    let (mut rp, mut rd, mut rr) = (Vec::new(), Vec::new(), Vec::new());
    let (mut lp, mut ld, mut lr) = (Vec::new(), Vec::new(), Vec::new());
    for (n, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != header.len() {
            return Err(parse_err(path, format!("row {} has {} fields, expected {}", n + 1, f.len(), header.len())));
        }
        let v: Vec<f64> = f[1..].iter().map(|t| t.parse::<f64>().map_err(|_| parse_err(path, format!("bad number '{t}' in row {}", n + 1)))).collect::<Result<_>>()?;
        let pt = c64::new(0.0, v[0]);
        let dir: Vec<c64> = (0..m).map(|k| c64::new(v[1 + k], v[1 + m + k])).collect();
        let resp: Vec<c64> = (0..m).map(|k| c64::new(v[1 + 2 * m + k], v[1 + 3 * m + k])).collect();
        match f[0] {
            "R" | "r" => {
                rp.push(pt);
                rd.push(dir);
                rr.push(resp);
            }
            "L" | "l" => {
                lp.push(pt);
                ld.push(dir);
                lr.push(resp);
            }
            other => return Err(parse_err(path, format!("unknown side '{other}'"))),
        }
    }
    let cols = |v: &[Vec<c64>]| Mat::from_fn(m, v.len(), |i, j| v[j][i]);
    Ok((RightData::new(rp, cols(&rd), cols(&rr))?, LeftData::new(lp, cols(&ld), cols(&lr))?))
}

/// JSON mirror of the data sets with complex numbers as `[re, im]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataFile {
    pub right: SideFile,
    pub left: SideFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SideFile {
    pub points: Vec<[f64; 2]>,
    /// One direction per point.
    pub directions: Vec<Vec<[f64; 2]>>,
    pub responses: Vec<Vec<[f64; 2]>>,
}

fn side_file(pts: &[c64], dir: &Mat<c64>, resp: &Mat<c64>) -> SideFile {
    let cols = |a: &Mat<c64>| (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| [a[(i, j)].re, a[(i, j)].im]).collect()).collect();
    SideFile { points: pts.iter().map(|z| [z.re, z.im]).collect(), directions: cols(dir), responses: cols(resp) }
}

fn side_mats(s: &SideFile, m: usize) -> Result<(Vec<c64>, Mat<c64>, Mat<c64>)> {
    let k = s.points.len();
    if s.directions.len() != k || s.responses.len() != k || s.directions.iter().chain(&s.responses).any(|v| v.len() != m) {
        return Err(Error::Parse("data file sides have inconsistent sizes".into()));
    }
    let to = |v: &Vec<Vec<[f64; 2]>>| Mat::from_fn(m, k, |i, j| c64::new(v[j][i][0], v[j][i][1]));
    Ok((s.points.iter().map(|p| c64::new(p[0], p[1])).collect(), to(&s.directions), to(&s.responses)))
}

pub fn write_data_json(path: &Path, right: &RightData, left: &LeftData) -> Result<()> {
    write_json(path, &DataFile { right: side_file(&right.lambda, &right.r, &right.w), left: side_file(&left.mu, &left.l, &left.v) })
}

pub fn read_data_json(path: &Path) -> Result<(RightData, LeftData)> {
    let f: DataFile = read_json(path)?;
    let m = f.right.directions.first().or(f.left.directions.first()).map(|d| d.len()).unwrap_or(0);
    let (a, b, c) = side_mats(&f.right, m)?;
    let (d, e, g) = side_mats(&f.left, m)?;
    Ok((RightData::new(a, b, c)?, LeftData::new(d, e, g)?))
}

/// Chooses the reader from the extension (`.json` or CSV otherwise).
pub fn read_data(path: &Path) -> Result<(RightData, LeftData)> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_data_json(path),
        _ => read_data_csv(path),
    }
}

// ---------------------------------------------------------------- pencil and zeros

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PencilDump {
    pub ll: Vec<Vec<[f64; 2]>>,
    pub sll: Vec<Vec<[f64; 2]>>,
    pub v: Vec<Vec<[f64; 2]>>,
    pub w: Vec<Vec<[f64; 2]>>,
    /// SHA-256 of the data file the pencil was built from.
    pub data_hash: Option<String>,
}

pub fn write_pencil(path: &Path, p: &LoewnerPencil, data_file: Option<&Path>) -> Result<()> {
    let data_hash = data_file.map(file_hash).transpose()?;
    write_json(
        path,
        &PencilDump {
            ll: rows_c(p.ll.as_ref()),
            sll: rows_c(p.sll.as_ref()),
            v: rows_c(p.v.as_ref()),
            w: rows_c(p.w.as_ref()),
            data_hash,
        },
    )
}

/// `index,sigma,sigma_col,sigma_ll` (1-based index).
pub fn write_singular_values(path: &Path, o: &OrderReport) -> Result<()> {
    let mut s = String::from("index,sigma,sigma_col,sigma_ll\n");
    let n = o.singular_values.len().max(o.singular_values_col.len()).max(o.singular_values_ll.len());
    let get = |v: &[f64], k: usize| v.get(k).map(|x| format!("{x:.17e}")).unwrap_or_default();
    for k in 0..n {
        let _ = writeln!(s, "{},{},{},{}", k + 1, get(&o.singular_values, k), get(&o.singular_values_col, k), get(&o.singular_values_ll, k));
    }
    write_text(path, &s)
}

/// `re,im,residual`.
pub fn write_zeros_csv(path: &Path, z: &SpectralZeroSet) -> Result<()> {
    let mut s = String::from("re,im,residual\n");
    for (j, x) in z.zeros.iter().enumerate() {
        let r = z.residuals.get(j).copied().unwrap_or(f64::NAN);
        let _ = writeln!(s, "{:.17e},{:.17e},{:.6e}", x.re, x.im, r);
    }
    write_text(path, &s)
}

// ---------------------------------------------------------------- FOM manifest

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FomFiles {
    pub m_q: String,
    pub m_p: String,
    pub m_eps: String,
    pub m_bnd: String,
    pub g: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FomManifest {
    pub h: f64,
    pub params: WaveParams,
    pub n_q: usize,
    pub n_p: usize,
    pub n_bnd: usize,
    pub order: usize,
    /// Boundary DOF `k` (zero-based) sits at `boundary_points[k]`.
    pub boundary_points: Vec<[f64; 2]>,
    pub boundary_vertices: Vec<usize>,
    pub area: f64,
    pub files: FomFiles,
}

/// Writes `<prefix>_M_q.mtx`, … and `<prefix>_manifest.json`; returns the
/// manifest path.
pub fn write_fom(prefix: &Path, fem: &FEMatrices, params: &WaveParams, h: f64) -> Result<PathBuf> {
    let dir = prefix.parent().unwrap_or(Path::new("."));
    let stem = prefix.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "fom".into());
    let name = |n: &str| format!("{stem}_{n}.mtx");
    let files = FomFiles { m_q: name("M_q"), m_p: name("M_p"), m_eps: name("M_eps"), m_bnd: name("M_bnd"), g: name("G"), b: name("B") };
    for (f, m) in [(&files.m_q, &fem.m_q), (&files.m_p, &fem.m_p), (&files.m_eps, &fem.m_eps), (&files.m_bnd, &fem.m_bnd), (&files.g, &fem.g), (&files.b, &fem.b)] {
        write_mtx(&dir.join(f), m)?;
    }
    let manifest = FomManifest {
        h,
        params: params.clone(),
        n_q: fem.n_q(),
        n_p: fem.n_p(),
        n_bnd: fem.n_bnd(),
        order: fem.order(),
        boundary_points: fem.boundary_points.clone(),
        boundary_vertices: fem.boundary_vertices.clone(),
        area: fem.area,
        files,
    };
    let path = dir.join(format!("{stem}_manifest.json"));
    write_json(&path, &manifest)?;
    Ok(path)
}

pub fn read_fom(manifest: &Path) -> Result<(FEMatrices, FomManifest)> {
    let man: FomManifest = read_json(manifest)?;
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let rd = |f: &str| read_mtx(&dir.join(f));
    let fem = FEMatrices {
        m_q: rd(&man.files.m_q)?,
        m_p: rd(&man.files.m_p)?,
        m_eps: rd(&man.files.m_eps)?,
        m_bnd: rd(&man.files.m_bnd)?,
        g: rd(&man.files.g)?,
        b: rd(&man.files.b)?,
        boundary_vertices: man.boundary_vertices.clone(),
        boundary_points: man.boundary_points.clone(),
        area: man.area,
    };
    let ok = fem.n_q() == man.n_q
        && fem.n_p() == man.n_p
        && fem.n_bnd() == man.n_bnd
        && fem.g.nrows() == man.n_q
        && fem.g.ncols() == man.n_p
        && fem.b.nrows() == man.n_p
        && fem.b.ncols() == man.n_bnd;
    if !ok {
        return Err(parse_err(manifest, "matrix sizes disagree with the manifest"));
    }
    Ok((fem, man))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::TransferFunction;
    use crate::tangential::{log_grid, sample_data, DirectionPolicy, PartitionPolicy, SamplingPlan};
    use crate::wave::{assemble, fom_realization, mesh_lshape};

    fn lag() -> DescriptorRealization {
        let s = |x: f64| Mat::from_fn(1, 1, |_, _| x);
        DescriptorRealization::standard(s(-1.0), s(1.0), s(1.0), s(0.5)).unwrap()
    }

    #[test]
    fn mtx_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = SparseMatrix::from_triplets(3, 2, vec![(0, 0, 1.5), (2, 1, -1.0 / 3.0)]).unwrap();
        let p = dir.path().join("a.mtx");
        write_mtx(&p, &a).unwrap();
        assert_eq!(read_mtx(&p).unwrap(), a);
        let sym = dir.path().join("s.mtx");
        write_text(&sym, "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 2\n2 1 -1\n").unwrap();
        assert_eq!(read_mtx(&sym).unwrap().to_dense()[(0, 1)], -1.0);
        let bad = dir.path().join("b.mtx");
        write_text(&bad, "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1\n").unwrap();
        assert!(matches!(read_mtx(&bad), Err(Error::Parse(_))));
    }

    #[test]
    fn model_round_trip_dense_and_sparse() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lag.json");
        save_model(&p, &Model::Descriptor(lag())).unwrap();
        let text = read_text(&p).unwrap();
        assert!(text.contains("\"kind\": \"standard\""));
        let back = load_model(&p).unwrap().to_descriptor().unwrap();
        let s = c64::new(0.0, 2.0);
        assert!((back.transfer(s).unwrap()[(0, 0)] - lag().transfer(s).unwrap()[(0, 0)]).norm() < 1e-15);

        let fem = assemble(&mesh_lshape(0.5).unwrap(), &WaveParams::default()).unwrap();
        let ph = fom_realization(&fem).unwrap();
        let p = dir.path().join("fom.json");
        save_model(&p, &Model::Ph(ph.clone())).unwrap();
        assert!(dir.path().join("fom_j.mtx").exists());
        let Model::Ph(back) = load_model(&p).unwrap() else { panic!("kind") };
        assert_eq!(back.j.to_sparse(), ph.j.to_sparse());
        assert_eq!(back.g, ph.g);
    }

    #[test]
    fn data_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let plan = SamplingPlan::new(log_grid(-1.0, 1.0, 6), DirectionPolicy::CycledIdentity, PartitionPolicy::Alternate).unwrap();
        let (r, l) = sample_data(&lag(), &plan).unwrap();
        let csv = dir.path().join("d.csv");
        write_data_csv(&csv, &r, &l).unwrap();
        let (r2, l2) = read_data(&csv).unwrap();
        assert_eq!(r2, r);
        assert_eq!(l2, l);
        let js = dir.path().join("d.json");
        write_data_json(&js, &r, &l).unwrap();
        let (r3, l3) = read_data(&js).unwrap();
        assert_eq!((r3, l3), (r, l));
        write_text(&csv, "side,omega,dir_re_1,dir_im_1,resp_re_1,resp_im_1\nX,1,1,0,1,0\n").unwrap();
        assert!(read_data_csv(&csv).is_err());
    }

    #[test]
    fn hash_is_sha256() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc.txt");
        write_text(&p, "abc").unwrap();
        assert_eq!(file_hash(&p).unwrap(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn fom_manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let params = WaveParams::default();
        let fem = assemble(&mesh_lshape(0.5).unwrap(), &params).unwrap();
        let man = write_fom(&dir.path().join("wave"), &fem, &params, 0.5).unwrap();
        let (back, m) = read_fom(&man).unwrap();
        assert_eq!(m.order, fem.order());
        assert_eq!(back.g, fem.g);
        assert_eq!(back.boundary_points, fem.boundary_points);
    }
}
