//! `ph-loewner` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use faer::Mat;
use serde::de::DeserializeOwned;
use serde::Serialize;

use ph_loewner::io::{self, Model};
use ph_loewner::passive::{self, FeedthroughPolicy, IdentifyOptions, OrderPolicy};
use ph_loewner::pipeline::{self, DirectionKind, Figure, FomSource, FrequencyResponse, RunConfig};
use ph_loewner::stable::{self, ProjectionOptions, StabilizationMode};
use ph_loewner::tangential::{self, PartitionPolicy};
use ph_loewner::wave::{self, Field, WaveParams};
use ph_loewner::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "ph-loewner", version, about = "Passive port-Hamiltonian models from frequency data")]
struct Cli {
    /// Run configuration (TOML or JSON); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Assemble the L-shaped wave FOM and write MatrixMarket files plus a manifest.
    GenerateFom(GenerateArgs),
    /// Sample the FOM on boundary channels and write tangential data.
    Sample(SampleArgs),
    /// Identify a passive pH model from tangential data.
    Identify(IdentifyArgs),
    /// Project a realization onto the stable models.
    ProjectStable(ProjectArgs),
    /// Compare models against a sampled response.
    Compare(CompareArgs),
    /// Write plot-ready CSVs from a comparison report.
    Export(ExportArgs),
    /// Run the whole pipeline from the configuration.
    Run(RunArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// `iso:<value>` or a JSON file with `[t11, t12, t22]` or one such triple per element.
    #[arg(long)]
    tensor: Option<String>,
    /// Output files are `<prefix>_M_q.mtx`, …, `<prefix>_manifest.json`.
    #[arg(long)]
    out_prefix: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// FOM manifest; without it the FOM from the configuration is used.
    #[arg(long)]
    fom: Option<PathBuf>,
    /// One-based boundary channels, comma separated.
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<usize>>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    lo_exp: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    hi_exp: Option<f64>,
    /// cycled-identity or random
    #[arg(long, value_parser = parse_kebab::<DirectionKind>)]
    directions: Option<DirectionKind>,
    /// alternate or split-half
    #[arg(long, value_parser = parse_kebab::<PartitionPolicy>)]
    partition: Option<PartitionPolicy>,
    /// Tangential data (`.csv` or `.json`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full matrix response used by `compare`.
    #[arg(long)]
    response: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct IdentifyArgs {
    #[arg(long)]
    data: PathBuf,
    /// δ for `D_s = δI`, or a matrix file (JSON rows or MatrixMarket); 0 disables the shift.
    #[arg(long)]
    shift: Option<String>,
    /// Order `r` or `auto`.
    #[arg(long)]
    order: Option<String>,
    #[arg(long, value_parser = parse_kebab::<StabilizationMode>)]
    stabilize: Option<StabilizationMode>,
    /// exact or high-frequency (unshifted runs only).
    #[arg(long, value_parser = parse_kebab::<FeedthroughPolicy>)]
    feedthrough: Option<FeedthroughPolicy>,
    #[arg(long)]
    rank_tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Spectral-zero CSV of the stabilized shifted model.
    #[arg(long)]
    zeros: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ProjectArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, value_parser = parse_kebab::<StabilizationMode>)]
    mode: Option<StabilizationMode>,
    /// Error grid band `lo,hi` in rad/s.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    band: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    response: PathBuf,
    #[arg(long)]
    loewner: PathBuf,
    #[arg(long)]
    ph: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    report: PathBuf,
    /// freq-response, spectral-zeros, zoom or all.
    #[arg(long, default_value = "all")]
    which: String,
    #[arg(long)]
    dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    channels: Option<Vec<usize>>,
    #[arg(long, value_parser = parse_kebab::<StabilizationMode>)]
    stabilize: Option<StabilizationMode>,
    #[arg(long)]
    shift: Option<f64>,
}

fn parse_kebab<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|_| format!("unrecognized value '{s}'"))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let Some(path) = path else { return Ok(RunConfig::default()) };
    let text = io::read_text(path)?;
    let parsed = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text).map_err(|e| e.to_string()),
        _ => serde_json::from_str(&text).map_err(|e| e.to_string()),
    };
    parsed.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    io::write_json(path, v)
}

fn parse_shift(s: &str, ports: usize) -> Result<Option<Mat<f64>>> {
    if let Ok(d) = s.parse::<f64>() {
        if !d.is_finite() || d < 0.0 {
            return Err(Error::Invalid(format!("shift must be finite and nonnegative (got {d})")));
        }
        return Ok((d > 0.0).then(|| IdentifyOptions::shifted(d, ports).shift.expect("shifted")));
    }
    let p = Path::new(s);
    let m = if p.extension().and_then(|e| e.to_str()) == Some("mtx") {
        io::read_mtx(p)?.to_dense()
    } else {
        let rows: Vec<Vec<f64>> = io::read_json(p)?;
        io::from_rows(&rows, None)?
    };
    if m.nrows() != ports || m.ncols() != ports {
        return Err(Error::Dimension(format!("shift is {}x{}, data has {ports} ports", m.nrows(), m.ncols())));
    }
    Ok(Some(m))
}

fn parse_order(s: &str) -> Result<OrderPolicy> {
    match s {
        "auto" => Ok(OrderPolicy::Auto),
        _ => match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(Error::Invalid(format!("order must be 'auto' or a positive integer (got '{s}')"))),
            Ok(r) => Ok(OrderPolicy::Fixed(r)),
        },
    }
}

fn parse_tensor(s: &str) -> Result<Field<[f64; 3]>> {
    if let Some(v) = s.strip_prefix("iso:") {
        let t: f64 = v.parse().map_err(|_| Error::Invalid(format!("bad isotropic tensor value '{v}'")))?;
        return Ok(Field::Uniform([t, 0.0, t]));
    }
    io::read_json(Path::new(s))
}

#[derive(Serialize)]
struct ProjectionReport {
    mode_used: StabilizationMode,
    achieved_error: f64,
    hankel_bound: f64,
    eigenvalues_before: Vec<[f64; 2]>,
    eigenvalues_after: Vec<[f64; 2]>,
    axis_reflected: Vec<[f64; 2]>,
}

fn pairs(v: &[faer::c64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.config.as_deref()).map_err(|e| e.at_stage("config"))?;
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cfg.out_dir.clone();
    match cli.cmd {
        Cmd::GenerateFom(a) => {
            let stage = |e: Error| e.at_stage("generate-fom");
            let (h0, p0) = match &cfg.fom {
                FomSource::Generate { h, params } => (*h, params.clone()),
                FomSource::Load { .. } => (0.0625, WaveParams::default()),
            };
            let h = a.h.unwrap_or(h0);
            let mut params = p0;
            if let Some(r) = a.rho {
                params.rho = Field::Uniform(r);
            }
            if let Some(e) = a.eps {
                params.eps = Field::Uniform(e);
            }
            if let Some(t) = &a.tensor {
                params.tensor = parse_tensor(t).map_err(stage)?;
            }
            let fem = wave::assemble(&wave::mesh_lshape(h).map_err(stage)?, &params).map_err(stage)?;
            let prefix = a.out_prefix.unwrap_or_else(|| out.join(pipeline::files::FOM_PREFIX));
            let man = io::write_fom(&prefix, &fem, &params, h).map_err(stage)?;
            println!("order {} (n_q {}, n_p {}), {} boundary channels", fem.order(), fem.n_q(), fem.n_p(), fem.n_bnd());
            println!("{}", man.display());
        }
        Cmd::Sample(a) => {
            let stage = |e: Error| e.at_stage("sample");
            if let Some(m) = a.fom {
                cfg.fom = FomSource::Load { manifest: m };
            }
            if let Some(c) = a.channels {
                cfg.channels = c;
            }
            let s = &mut cfg.sampling;
            s.points = a.points.unwrap_or(s.points);
            s.lo_exp = a.lo_exp.unwrap_or(s.lo_exp);
            s.hi_exp = a.hi_exp.unwrap_or(s.hi_exp);
            s.directions = a.directions.unwrap_or(s.directions);
            s.partition = a.partition.unwrap_or(s.partition);
            cfg.validate().map_err(stage)?;
            let fem = pipeline::load_fom(&cfg).map_err(stage)?;
            let nb = fem.n_bnd();
            if let Some(&c) = cfg.channels.iter().find(|&&c| c > nb) {
                return Err(stage(Error::Invalid(format!("channel {c} exceeds the {nb} boundary channels"))));
            }
            let ch: Vec<usize> = cfg.channels.iter().map(|c| c - 1).collect();
            let plan = cfg.plan().map_err(stage)?;
            let h = wave::sample_fom(&fem, &plan.omega, &ch).map_err(stage)?;
            let (r, l) = tangential::data_from_samples(&h, &plan).map_err(stage)?;
            let path = a.out.unwrap_or_else(|| out.join(pipeline::files::DATA));
            match path.extension().and_then(|e| e.to_str()) {
                Some("json") => io::write_data_json(&path, &r, &l),
                _ => io::write_data_csv(&path, &r, &l),
            }
            .map_err(stage)?;
            let resp = a.response.unwrap_or_else(|| out.join(pipeline::files::RESPONSE));
            write_json(&resp, &FrequencyResponse::new(plan.omega.clone(), cfg.channels.clone(), &h)).map_err(stage)?;
            println!("{} right and {} left points on {} channel(s)", r.len(), l.len(), ch.len());
            println!("{}", path.display());
        }
        Cmd::Identify(a) => {
            let stage = |e: Error| e.at_stage("identify");
            let (right, left) = io::read_data(&a.data).map_err(stage)?;
            let m = right.ports();
            let shift = match &a.shift {
                Some(s) => parse_shift(s, m).map_err(stage)?,
                None => (cfg.shift > 0.0).then(|| IdentifyOptions::shifted(cfg.shift, m).shift.expect("shifted")),
            };
            let opts = IdentifyOptions {
                shift,
                order: a.order.as_deref().map(parse_order).transpose().map_err(stage)?.unwrap_or(cfg.order),
                rank_tol: a.rank_tol.unwrap_or(cfg.rank_tol),
                stabilization: a.stabilize.unwrap_or(cfg.stabilization),
                feedthrough: a.feedthrough.unwrap_or(cfg.feedthrough),
            };
            let id = passive::identify_ph(&right, &left, &opts).map_err(stage)?;
            let path = a.out.unwrap_or_else(|| out.join(pipeline::files::PH));
            io::save_model(&path, &Model::Ph(id.ph.clone())).map_err(stage)?;
            let diag = a.diagnostics.unwrap_or_else(|| out.join(pipeline::files::DIAGNOSTICS));
            write_json(&diag, &id.diagnostics).map_err(stage)?;
            let zeros = a.zeros.unwrap_or_else(|| out.join(pipeline::files::SHIFTED_ZEROS));
            io::write_zeros_csv(&zeros, &id.zeros).map_err(stage)?;
            let d = &id.diagnostics;
            println!("order {} (interpolant {}, stabilized {})", id.ph.order(), d.order_used, d.projected_order);
            println!("{}", path.display());
        }
        Cmd::ProjectStable(a) => {
            let stage = |e: Error| e.at_stage("project-stable");
            let sys = io::load_model(&a.model).and_then(|m| m.to_descriptor()).map_err(stage)?;
            let band = match a.band.as_deref() {
                Some([lo, hi]) if *lo > 0.0 && lo < hi => Some((*lo, *hi)),
                Some(_) => return Err(stage(Error::Invalid("band must be 0 < lo < hi".into()))),
                None => None,
            };
            let res = stable::p_infinity(&sys, ProjectionOptions { mode: a.mode.unwrap_or(cfg.stabilization), band }).map_err(stage)?;
            let path = a.out.unwrap_or_else(|| out.join("projected.json"));
            io::save_model(&path, &Model::Descriptor(res.projected.clone())).map_err(stage)?;
            let rep = ProjectionReport {
                mode_used: res.mode_used,
                achieved_error: res.achieved_error,
                hankel_bound: res.hankel_bound,
                eigenvalues_before: pairs(&res.eigenvalues_before),
                eigenvalues_after: pairs(&res.eigenvalues_after),
                axis_reflected: pairs(&res.axis_reflected),
            };
            let rp = a.report.unwrap_or_else(|| out.join("projection.json"));
            write_json(&rp, &rep).map_err(stage)?;
            println!("achieved error {:.6e}, hankel bound {:.6e}", res.achieved_error, res.hankel_bound);
            println!("{}", path.display());
        }
        Cmd::Compare(a) => {
            let stage = |e: Error| e.at_stage("compare");
            let resp: FrequencyResponse = io::read_json(&a.response).map_err(stage)?;
            let lw = io::load_model(&a.loewner).and_then(|m| m.to_descriptor()).map_err(stage)?;
            let ph = match &a.ph {
                Some(p) => match io::load_model(p).map_err(stage)? {
                    Model::Ph(ph) => Some(ph),
                    Model::Descriptor(_) => return Err(stage(Error::Invalid(format!("{} is not a pH realization", p.display())))),
                },
                None => None,
            };
            let report = pipeline::build_report(&resp, &lw, ph.as_ref(), None, a.threshold.unwrap_or(cfg.degraded_threshold)).map_err(stage)?;
            let path = a.out.unwrap_or_else(|| out.join(pipeline::files::REPORT));
            write_json(&path, &report).map_err(stage)?;
            for c in &report.comparisons {
                let e = c.ph_error.unwrap_or(c.loewner_error);
                println!("H[{},{}] max rel {:.3e} {}", c.output, c.input, e.max_rel, if c.accurate() { "accurate" } else { "degraded" });
            }
        }
        Cmd::Export(a) => {
            let stage = |e: Error| e.at_stage("export");
            let report = io::read_json(&a.report).map_err(stage)?;
            let figs = match a.which.as_str() {
                "all" => Figure::ALL.to_vec(),
                w => vec![w.parse::<Figure>().map_err(stage)?],
            };
            let dir = a.dir.unwrap_or(out);
            for f in figs {
                for p in pipeline::export_figures(&report, f, &dir).map_err(stage)? {
                    println!("{}", p.display());
                }
            }
        }
        Cmd::Run(a) => {
            if let Some(h) = a.h {
                cfg.fom = FomSource::Generate { h, params: WaveParams::default() };
            }
            if let Some(c) = a.channels {
                cfg.channels = c;
            }
            if let Some(s) = a.stabilize {
                cfg.stabilization = s;
            }
            if let Some(s) = a.shift {
                cfg.shift = s;
            }
            let report = pipeline::run_pipeline(&cfg)?;
            let o = report.orders;
            println!(
                "n_fom {}, loewner order {}, stabilized {}, pH order {}",
                o.n_fom.unwrap_or(0),
                o.r,
                o.r_proj.unwrap_or(0),
                o.r_ph.unwrap_or(0)
            );
            for c in &report.comparisons {
                let e = c.ph_error.unwrap_or(c.loewner_error);
                println!(
                    "H[{},{}] max rel {:.3e}, magnitude {:.3e} {}",
                    c.output,
                    c.input,
                    e.max_rel,
                    e.max_rel_mag,
                    if c.accurate() { "accurate" } else { "degraded" }
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error [config]: cannot set thread count: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                Error::Stage { stage, source } => eprintln!("error [{stage}]: {source}"),
                other => eprintln!("error [unknown]: {other}"),
            }
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
