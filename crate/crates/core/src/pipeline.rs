//! End-to-end experiment driver: FOM, sampling, Loewner interpolant,
//! passive identification, comparison and CSV export.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::loewner::{self, DEFAULT_RANK_TOL};
use crate::lti::{ph_to_descriptor, DescriptorRealization, PHRealization, TransferFunction};
use crate::passive::{self, FeedthroughPolicy, IdentifyOptions, OrderPolicy, SpectralZeroSet};
use crate::stable::StabilizationMode;
use crate::tangential::{self, DirectionPolicy, LeftData, PartitionPolicy, RightData, SamplingPlan};
use crate::wave::{self, FEMatrices, WaveParams};

/// Near-axis bands reported for every zero set.
pub const AXIS_BANDS: [f64; 2] = [1e-9, 1e-10];
/// Zoom filter on `|Re ξ|`.
pub const ZOOM_BAND: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FomSource {
    Generate {
        h: f64,
        #[serde(default)]
        params: WaveParams,
    },
    Load {
        manifest: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionKind {
    #[default]
    CycledIdentity,
    /// Gaussian unit directions drawn from the run seed.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    /// Grid is `10^lo_exp … 10^hi_exp`, log-spaced.
    pub lo_exp: f64,
    pub hi_exp: f64,
    pub points: usize,
    pub directions: DirectionKind,
    pub partition: PartitionPolicy,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self { lo_exp: -1.0, hi_exp: 3.5, points: 300, directions: DirectionKind::CycledIdentity, partition: PartitionPolicy::Alternate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub fom: FomSource,
    pub sampling: SamplingConfig,
    /// Boundary channels, one-based in the counterclockwise boundary ordering.
    pub channels: Vec<usize>,
    /// `D_s = shift·I`; zero runs the strictly passive path.
    pub shift: f64,
    pub order: OrderPolicy,
    pub rank_tol: f64,
    pub stabilization: StabilizationMode,
    pub feedthrough: FeedthroughPolicy,
    /// Channels whose max relative deviation exceeds this are flagged degraded.
    pub degraded_threshold: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            fom: FomSource::Generate { h: 0.0625, params: WaveParams::default() },
            sampling: SamplingConfig::default(),
            channels: vec![1],
            shift: 1.0,
            order: OrderPolicy::Auto,
            rank_tol: DEFAULT_RANK_TOL,
            stabilization: StabilizationMode::Nehari,
            feedthrough: FeedthroughPolicy::Exact,
            degraded_threshold: 5e-2,
            seed: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(m));
        if let FomSource::Generate { h, .. } = &self.fom {
            if !(h.is_finite() && *h > 0.0 && *h <= 1.0) {
                return bad(format!("mesh size h = {h} must lie in (0, 1]"));
            }
        }
        let s = &self.sampling;
        if !(s.lo_exp.is_finite() && s.hi_exp.is_finite() && s.lo_exp < s.hi_exp) {
            return bad(format!("sampling exponents must satisfy lo < hi (got {} and {})", s.lo_exp, s.hi_exp));
        }
        if s.points < 2 {
            return bad("at least two sampling points are needed".into());
        }
        if self.channels.is_empty() || self.channels.contains(&0) {
            return bad("channels must be a nonempty list of one-based indices".into());
        }
        let mut sorted = self.channels.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.channels.len() {
            return bad("channels must be distinct".into());
        }
        if !(self.shift.is_finite() && self.shift >= 0.0) {
            return bad(format!("shift must be finite and nonnegative (got {})", self.shift));
        }
        if !(self.rank_tol > 0.0 && self.rank_tol < 1.0) {
            return bad(format!("rank tolerance must lie in (0, 1) (got {})", self.rank_tol));
        }
        if !(self.degraded_threshold > 0.0) {
            return bad("degraded threshold must be positive".into());
        }
        if let OrderPolicy::Fixed(0) = self.order {
            return bad("order must be positive".into());
        }
        Ok(())
    }

    pub fn plan(&self) -> Result<SamplingPlan> {
        let s = &self.sampling;
        let directions = match s.directions {
            DirectionKind::CycledIdentity => DirectionPolicy::CycledIdentity,
            DirectionKind::Random => DirectionPolicy::RandomUnit { seed: self.seed },
        };
        SamplingPlan::new(tangential::log_grid(s.lo_exp, s.hi_exp, s.points), directions, s.partition)
    }

    pub fn identify_options(&self, ports: usize) -> IdentifyOptions {
        let base = if self.shift > 0.0 { IdentifyOptions::shifted(self.shift, ports) } else { IdentifyOptions::default() };
        IdentifyOptions {
            order: self.order,
            rank_tol: self.rank_tol,
            stabilization: self.stabilization,
            feedthrough: self.feedthrough,
            ..base
        }
    }

    fn zero_based_channels(&self, n_bnd: usize) -> Result<Vec<usize>> {
        if let Some(&c) = self.channels.iter().find(|&&c| c > n_bnd) {
            return Err(Error::Invalid(format!("channel {c} exceeds the {n_bnd} boundary channels")));
        }
        Ok(self.channels.iter().map(|c| c - 1).collect())
    }
}

/// Full matrix samples on the selected channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponse {
    pub omega: Vec<f64>,
    /// One-based channel numbers.
    pub channels: Vec<usize>,
    /// `values[k][i][j] = H_ij(iω_k)` as `[re, im]`.
    pub values: Vec<Vec<Vec<[f64; 2]>>>,
}

impl FrequencyResponse {
    pub fn new(omega: Vec<f64>, channels: Vec<usize>, h: &[Mat<c64>]) -> Self {
        Self { omega, channels, values: h.iter().map(|m| io::rows_c(m.as_ref())).collect() }
    }

    pub fn matrices(&self) -> Result<Vec<Mat<c64>>> {
        let p = self.channels.len();
        let mats: Vec<Mat<c64>> = self.values.iter().map(|v| io::from_rows_c(v)).collect::<Result<_>>()?;
        if mats.len() != self.omega.len() || mats.iter().any(|m| m.nrows() != p || m.ncols() != p) {
            return Err(Error::Parse("frequency response has inconsistent sizes".into()));
        }
        Ok(mats)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    /// `max_k |H̃(iω_k) − H(iω_k)| / max_k |H(iω_k)|`.
    pub max_rel: f64,
    pub mean_rel: f64,
    /// Same with magnitudes only: `max_k ||H̃| − |H|| / max_k |H|`.
    pub max_rel_mag: f64,
    pub accurate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelComparison {
    /// One-based output and input channel.
    pub output: usize,
    pub input: usize,
    pub data_mag: Vec<f64>,
    pub data_phase: Vec<f64>,
    pub loewner_mag: Vec<f64>,
    pub loewner_phase: Vec<f64>,
    pub ph_mag: Option<Vec<f64>>,
    pub ph_phase: Option<Vec<f64>>,
    pub loewner_error: ErrorSummary,
    pub ph_error: Option<ErrorSummary>,
}

impl ChannelComparison {
    pub fn is_diagonal(&self) -> bool {
        self.output == self.input
    }

    /// Accuracy flag of the pH model, or of the Loewner model without one.
    pub fn accurate(&self) -> bool {
        self.ph_error.unwrap_or(self.loewner_error).accurate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroPoint {
    pub re: f64,
    pub im: f64,
    /// `None` when the zero sits on a pole of the model.
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSeries {
    pub tag: String,
    pub points: Vec<ZeroPoint>,
    /// Counts for `|Re ξ| ≤` each of [`AXIS_BANDS`].
    pub near_axis: Vec<usize>,
}

impl ZeroSeries {
    pub fn new(tag: &str, set: &SpectralZeroSet) -> Self {
        let mut points: Vec<ZeroPoint> = set
            .zeros
            .iter()
            .enumerate()
            .map(|(j, z)| ZeroPoint { re: z.re, im: z.im, residual: set.residuals.get(j).copied().filter(|r| r.is_finite()) })
            .collect();
        points.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        Self { tag: tag.into(), near_axis: AXIS_BANDS.iter().map(|&b| set.count_near_axis(b)).collect(), points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Orders {
    pub n_fom: Option<usize>,
    /// Loewner interpolant order.
    pub r: usize,
    /// McMillan degree estimate of the data.
    pub nu: Option<usize>,
    /// Order after stabilization.
    pub r_proj: Option<usize>,
    pub r_ph: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub omega: Vec<f64>,
    pub channels: Vec<usize>,
    pub comparisons: Vec<ChannelComparison>,
    pub zeros: Vec<ZeroSeries>,
    pub orders: Orders,
    pub degraded_threshold: f64,
}

impl ComparisonReport {
    pub fn channel(&self, output: usize, input: usize) -> Option<&ChannelComparison> {
        self.comparisons.iter().find(|c| c.output == output && c.input == input)
    }

    pub fn zero_series(&self, tag: &str) -> Option<&ZeroSeries> {
        self.zeros.iter().find(|z| z.tag == tag)
    }

    /// Channel pairs flagged degraded.
    pub fn degraded(&self) -> Vec<(usize, usize)> {
        self.comparisons.iter().filter(|c| !c.accurate()).map(|c| (c.output, c.input)).collect()
    }
}

fn summarize(data: &[c64], model: &[c64], threshold: f64) -> ErrorSummary {
    let hmax = data.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let denom = if hmax > 0.0 { hmax } else { 1.0 };
    let dev: Vec<f64> = data.iter().zip(model).map(|(h, g)| (g - h).norm() / denom).collect();
    let max_rel = dev.iter().copied().fold(0.0, f64::max);
    let mean_rel = dev.iter().sum::<f64>() / dev.len().max(1) as f64;
    let max_rel_mag = data.iter().zip(model).map(|(h, g)| (g.norm() - h.norm()).abs() / denom).fold(0.0, f64::max);
    ErrorSummary { max_rel, mean_rel, max_rel_mag, accurate: max_rel.is_finite() && max_rel <= threshold }
}

fn eval(sys: &dyn TransferFunction, omega: &[f64]) -> Result<Vec<Mat<c64>>> {
    let pts: Vec<c64> = omega.iter().map(|&w| c64::new(0.0, w)).collect();
    sys.transfer_many(&pts)
}

/// Per-channel comparison of the models against the sampled response.
pub fn compare(
    resp: &FrequencyResponse,
    loewner: &dyn TransferFunction,
    ph: Option<&dyn TransferFunction>,
    threshold: f64,
) -> Result<Vec<ChannelComparison>> {
    let p = resp.channels.len();
    if loewner.ports() != p || ph.is_some_and(|s| s.ports() != p) {
        return Err(Error::Dimension(format!("models must have {p} ports to match the response")));
    }
    let data = resp.matrices()?;
    let lv = eval(loewner, &resp.omega)?;
    let pv = ph.map(|s| eval(s, &resp.omega)).transpose()?;
    let series = |v: &[Mat<c64>], i: usize, j: usize| -> Vec<c64> { v.iter().map(|m| m[(i, j)]).collect() };
    let mag = |v: &[c64]| v.iter().map(|z| z.norm()).collect::<Vec<_>>();
    let phase = |v: &[c64]| v.iter().map(|z| z.arg()).collect::<Vec<_>>();
    let mut out = Vec::with_capacity(p * p);
    for i in 0..p {
        for j in 0..p {
            let d = series(&data, i, j);
            let l = series(&lv, i, j);
            let ph = pv.as_ref().map(|v| series(v, i, j));
            out.push(ChannelComparison {
                output: resp.channels[i],
                input: resp.channels[j],
                data_mag: mag(&d),
                data_phase: phase(&d),
                loewner_mag: mag(&l),
                loewner_phase: phase(&l),
                ph_mag: ph.as_ref().map(|v| mag(v)),
                ph_phase: ph.as_ref().map(|v| phase(v)),
                loewner_error: summarize(&d, &l, threshold),
                ph_error: ph.as_ref().map(|v| summarize(&d, v, threshold)),
            });
        }
    }
    Ok(out)
}

/// Spectral zeros for plotting; failures are logged and give an empty set.
fn diagnostic_zeros(tag: &str, sys: &DescriptorRealization) -> ZeroSeries {
    match passive::spectral_zeros_unchecked(sys) {
        Ok(z) => ZeroSeries::new(tag, &z),
        Err(e) => {
            log::warn!("spectral zeros of the {tag} model unavailable: {e}");
            ZeroSeries { tag: tag.into(), points: vec![], near_axis: vec![0; AXIS_BANDS.len()] }
        }
    }
}

/// Report from a sampled response and models; used by `run_pipeline` and
/// the standalone comparison.
pub fn build_report(
    resp: &FrequencyResponse,
    loewner: &DescriptorRealization,
    ph: Option<&PHRealization>,
    shifted_zeros: Option<&SpectralZeroSet>,
    threshold: f64,
) -> Result<ComparisonReport> {
    let comparisons = compare(resp, loewner, ph.map(|p| p as &dyn TransferFunction), threshold)?;
    let mut zeros = vec![diagnostic_zeros("loewner", loewner)];
    if let Some(z) = shifted_zeros {
        zeros.push(ZeroSeries::new("shifted", z));
    }
    if let Some(p) = ph {
        zeros.push(diagnostic_zeros("ph-loewner", &ph_to_descriptor(p)?));
    }
    Ok(ComparisonReport {
        omega: resp.omega.clone(),
        channels: resp.channels.clone(),
        comparisons,
        zeros,
        orders: Orders { n_fom: None, r: loewner.order(), nu: None, r_proj: None, r_ph: ph.map(|p| p.order()) },
        degraded_threshold: threshold,
    })
}

/// Artifacts written by [`run_pipeline`], relative to the output directory.
pub mod files {
    pub const CONFIG: &str = "config.json";
    pub const FOM_PREFIX: &str = "fom";
    pub const DATA: &str = "data.csv";
    pub const RESPONSE: &str = "response.json";
    pub const PENCIL: &str = "pencil.json";
    pub const SINGULAR_VALUES: &str = "singular_values.csv";
    pub const LOEWNER: &str = "loewner.json";
    pub const LOEWNER_ZEROS: &str = "zeros_loewner.csv";
    pub const PH: &str = "ph.json";
    pub const PH_SHIFTED: &str = "ph_shifted.json";
    pub const SHIFTED_ZEROS: &str = "zeros_shifted.csv";
    pub const DIAGNOSTICS: &str = "diagnostics.json";
    pub const REPORT: &str = "report.json";
}

/// Builds or loads the FOM for a config.
pub fn load_fom(cfg: &RunConfig) -> Result<FEMatrices> {
    match &cfg.fom {
        FomSource::Generate { h, params } => wave::assemble(&wave::mesh_lshape(*h)?, params),
        FomSource::Load { manifest } => Ok(io::read_fom(manifest)?.0),
    }
}

/// Loewner interpolant of raw (unshifted) data with its order report.
pub fn loewner_model(
    right: &RightData,
    left: &LeftData,
    order: OrderPolicy,
    rank_tol: f64,
) -> Result<(DescriptorRealization, loewner::OrderReport, loewner::LoewnerPencil)> {
    let (r, l) = tangential::conjugate_close(right, left);
    let pencil = loewner::build_loewner(&r, &l)?;
    let (model, orders, _) = passive::loewner_interpolant(&pencil, order, rank_tol)?;
    Ok((model, orders, pencil))
}

/// Runs FOM → sampling → Loewner → identification → comparison and writes
/// all artifacts to `cfg.out_dir`. Everything up to the Loewner model is
/// written before identification starts.
pub fn run_pipeline(cfg: &RunConfig) -> Result<ComparisonReport> {
    cfg.validate().map_err(|e| e.at_stage("config"))?;
    let out = &cfg.out_dir;
    let at = |name: &str| out.join(name);
    io::write_json(&at(files::CONFIG), cfg).map_err(|e| e.at_stage("config"))?;

    log::info!("stage fom");
    let fem = load_fom(cfg).map_err(|e| e.at_stage("fom"))?;
    if let FomSource::Generate { h, params } = &cfg.fom {
        io::write_fom(&at(files::FOM_PREFIX), &fem, params, *h).map_err(|e| e.at_stage("fom"))?;
    }
    let channels = cfg.zero_based_channels(fem.n_bnd()).map_err(|e| e.at_stage("fom"))?;
    log::info!("fom order {}, {} boundary channels", fem.order(), fem.n_bnd());

    log::info!("stage sample");
    let plan = cfg.plan().map_err(|e| e.at_stage("sample"))?;
    let h = wave::sample_fom(&fem, &plan.omega, &channels).map_err(|e| e.at_stage("sample"))?;
    let (right, left) = tangential::data_from_samples(&h, &plan).map_err(|e| e.at_stage("sample"))?;
    let resp = FrequencyResponse::new(plan.omega.clone(), cfg.channels.clone(), &h);
    io::write_data_csv(&at(files::DATA), &right, &left).map_err(|e| e.at_stage("sample"))?;
    io::write_json(&at(files::RESPONSE), &resp).map_err(|e| e.at_stage("sample"))?;

    log::info!("stage loewner");
    let (lmodel, orders, pencil) = loewner_model(&right, &left, cfg.order, cfg.rank_tol).map_err(|e| e.at_stage("loewner"))?;
    io::write_pencil(&at(files::PENCIL), &pencil, Some(&at(files::DATA))).map_err(|e| e.at_stage("loewner"))?;
    io::write_singular_values(&at(files::SINGULAR_VALUES), &orders).map_err(|e| e.at_stage("loewner"))?;
    io::save_model(&at(files::LOEWNER), &io::Model::Descriptor(lmodel.clone())).map_err(|e| e.at_stage("loewner"))?;
    if let Ok(z) = passive::spectral_zeros_unchecked(&lmodel) {
        io::write_zeros_csv(&at(files::LOEWNER_ZEROS), &z).map_err(|e| e.at_stage("loewner"))?;
    }
    log::info!("loewner order {} (nu {})", orders.r, orders.nu);

    log::info!("stage identify");
    let id = passive::identify_ph(&right, &left, &cfg.identify_options(channels.len())).map_err(|e| e.at_stage("identify"))?;
    let wr = |e: Error| e.at_stage("identify");
    io::save_model(&at(files::PH), &io::Model::Ph(id.ph.clone())).map_err(wr)?;
    io::save_model(&at(files::PH_SHIFTED), &io::Model::Ph(id.ph_shifted.clone())).map_err(wr)?;
    io::write_zeros_csv(&at(files::SHIFTED_ZEROS), &id.zeros).map_err(wr)?;
    io::write_json(&at(files::DIAGNOSTICS), &id.diagnostics).map_err(wr)?;

    log::info!("stage compare");
    let mut report = build_report(&resp, &lmodel, Some(&id.ph), Some(&id.zeros), cfg.degraded_threshold).map_err(|e| e.at_stage("compare"))?;
    report.orders = Orders {
        n_fom: Some(fem.order()),
        r: orders.r,
        nu: Some(orders.nu),
        r_proj: Some(id.diagnostics.projected_order),
        r_ph: Some(id.ph.order()),
    };
    io::write_json(&at(files::REPORT), &report).map_err(|e| e.at_stage("compare"))?;
    for f in Figure::ALL {
        export_figures(&report, f, out).map_err(|e| e.at_stage("export"))?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Figure {
    FreqResponse,
    SpectralZeros,
    Zoom,
}

impl Figure {
    pub const ALL: [Figure; 3] = [Figure::FreqResponse, Figure::SpectralZeros, Figure::Zoom];
}

impl std::str::FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "freq-response" => Ok(Self::FreqResponse),
            "spectral-zeros" => Ok(Self::SpectralZeros),
            "zoom" => Ok(Self::Zoom),
            _ => Err(Error::Invalid(format!("unknown figure '{s}'"))),
        }
    }
}

fn num(x: f64) -> String {
    format!("{x:.17e}")
}

fn opt_col(v: &Option<Vec<f64>>, k: usize) -> String {
    v.as_ref().map(|v| num(v[k])).unwrap_or_else(|| "nan".into())
}

fn zeros_csv(report: &ComparisonReport, band: Option<f64>) -> String {
    let mut s = String::new();
    match band {
        Some(b) => {
            let _ = writeln!(s, "# spectral zeros with |Re| <= {b:e}");
        }
        None => s.push_str("# spectral zeros\n"),
    }
    s.push_str("# residual: |Phi(xi) x| / (|H(xi)| + |H(-xi)|)\n");
    for z in &report.zeros {
        let counts: Vec<String> = AXIS_BANDS.iter().zip(&z.near_axis).map(|(b, c)| format!("|Re| <= {b:e}: {c}")).collect();
        let _ = writeln!(s, "# {}: {} zeros, {}", z.tag, z.points.len(), counts.join(", "));
    }
    s.push_str("re,im,model,residual\n");
    for z in &report.zeros {
        for p in z.points.iter().filter(|p| band.is_none_or(|b| p.re.abs() <= b)) {
            let r = p.residual.map(|r| format!("{r:.6e}")).unwrap_or_else(|| "inf".into());
            let _ = writeln!(s, "{},{},{},{r}", num(p.re), num(p.im), z.tag);
        }
    }
    s
}

/// Writes plot-ready CSVs for one figure kind into `dir`; returns the paths.
pub fn export_figures(report: &ComparisonReport, which: Figure, dir: &Path) -> Result<Vec<PathBuf>> {
    match which {
        Figure::FreqResponse => {
            let mut paths = Vec::new();
            for c in &report.comparisons {
                let mut s = String::new();
                let _ = writeln!(s, "# frequency response, output channel {}, input channel {} (one-based boundary numbering)", c.output, c.input);
                s.push_str("# relative deviation: |H_model(iw) - H_data(iw)| / max_grid |H_data(iw)|; phases in radians\n");
                let _ = writeln!(
                    s,
                    "# loewner: max {:.3e}, mean {:.3e}, max magnitude {:.3e}",
                    c.loewner_error.max_rel, c.loewner_error.mean_rel, c.loewner_error.max_rel_mag
                );
                if let Some(e) = c.ph_error {
                    let _ = writeln!(s, "# ph-loewner: max {:.3e}, mean {:.3e}, max magnitude {:.3e}", e.max_rel, e.mean_rel, e.max_rel_mag);
                }
                let _ = writeln!(s, "# threshold {:e}: {}", report.degraded_threshold, if c.accurate() { "accurate" } else { "degraded" });
                s.push_str("omega,data_mag,loewner_mag,ph_mag,data_phase,loewner_phase,ph_phase\n");
                for (k, w) in report.omega.iter().enumerate() {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{}",
                        num(*w),
                        num(c.data_mag[k]),
                        num(c.loewner_mag[k]),
                        opt_col(&c.ph_mag, k),
                        num(c.data_phase[k]),
                        num(c.loewner_phase[k]),
                        opt_col(&c.ph_phase, k)
                    );
                }
                let p = dir.join(format!("freq_response_{}_{}.csv", c.output, c.input));
                io::write_text(&p, &s)?;
                paths.push(p);
            }
            Ok(paths)
        }
        Figure::SpectralZeros => {
            let p = dir.join("spectral_zeros.csv");
            io::write_text(&p, &zeros_csv(report, None))?;
            Ok(vec![p])
        }
        Figure::Zoom => {
            let p = dir.join("spectral_zeros_zoom.csv");
            io::write_text(&p, &zeros_csv(report, Some(ZOOM_BAND)))?;
            Ok(vec![p])
        }
    }
}
