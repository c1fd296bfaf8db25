mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use brokenflow::arrangement::{LatticeTolerance, SubspaceLattice};
use brokenflow::broken::time_pi_relation;
use brokenflow::flow::{integrate_bichar, reparametrize, FlowConfig};
use brokenflow::io::{self, RelationRecord, TrajectoryRecord};
use brokenflow::phasespace::{classify, compress, split, CompressedCovector, ScCovector, CLASSIFY_TOL};
use brokenflow::symbols::{certify_positivity, measure_constants, CertifyOptions, FamilyKind, SymbolContext};
use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde::Serialize;

use config::{pick, require, Format, IntegratorKind, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "brokenflow", version, about = "Broken bicharacteristics on spheres with subspace arrangements")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Energy level.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Seed for every sampler (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Arrangement JSON: {"dimension": n, "subspaces": [{"name", "basis"}]}.
    #[arg(long, global = true)]
    arrangement: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closure, Hasse diagram and ranks of an arrangement.
    Lattice,
    /// Stratum of a covector over its smallest face.
    Classify(StateArgs),
    /// Bicharacteristic from a start state.
    Flow(FlowArgs),
    /// Endpoints of the broken geodesics of length pi from (point, direction).
    Relation(RelationArgs),
    /// Sampled positivity certificate for a commutator family.
    Certify(CertifyArgs),
}

#[derive(Args, Debug, Default)]
struct StateArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    omega: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    v: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Signed duration.
    #[arg(long, allow_hyphen_values = true)]
    time: Option<f64>,
    #[arg(long, value_enum)]
    integrator: Option<IntegratorKind>,
    /// RK4 step.
    #[arg(long)]
    step: Option<f64>,
    /// Output spacing of the analytic integrator.
    #[arg(long)]
    dt: Option<f64>,
    /// Also write the geodesic reparametrization (CSV) to this file.
    #[arg(long)]
    geodesic_output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RelationArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    point: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    direction: Option<Vec<f64>>,
    /// Maximal number of branching breaks K.
    #[arg(long)]
    max_breaks: Option<usize>,
    /// Outgoing directions sampled per break on faces of codimension >= 2.
    #[arg(long)]
    normal_samples: Option<usize>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long, value_parser = parse_family)]
    family: Option<FamilyKind>,
    /// Face of the centre (name in the arrangement).
    #[arg(long)]
    face: Option<String>,
    /// Base point of the centre.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    point: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<f64>,
    /// Tangential momentum of the centre (ambient vector).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    nu: Option<Vec<f64>>,
    #[arg(long)]
    eps: Option<f64>,
    /// Explicit delta; otherwise delta = delta-fraction * delta0.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    delta_fraction: Option<f64>,
    #[arg(long)]
    a0: Option<f64>,
    #[arg(long)]
    t_shrink: Option<f64>,
    /// Coarse family only.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
}

fn parse_family(s: &str) -> Result<FamilyKind, String> {
    s.parse().map_err(|e: brokenflow::Error| e.to_string())
}

struct Ctx {
    cfg: RunConfig,
    lambda: Option<f64>,
    seed: u64,
    output: Option<PathBuf>,
    format: Option<Format>,
    arrangement: Option<PathBuf>,
}

impl Ctx {
    fn lambda(&self) -> Result<f64, String> {
        let l = require(self.lambda, "lambda")?;
        if !(l > 0.0 && l.is_finite()) {
            return Err(format!("lambda must be positive, got {l}"));
        }
        Ok(l)
    }

    fn sink(&self) -> Result<Box<dyn Write>, String> {
        open_sink(self.output.as_deref())
    }

    /// The arrangement file, or the trivial arrangement in dimension `dim`.
    fn lattice(&self, dim: Option<usize>) -> Result<SubspaceLattice, String> {
        match &self.arrangement {
            Some(p) => load_lattice(p),
            None => {
                let n = dim.ok_or("missing parameter `arrangement`")?;
                SubspaceLattice::close(n, &[], LatticeTolerance::default()).map_err(|e| e.to_string())
            }
        }
    }
}

fn open_sink(path: Option<&Path>) -> Result<Box<dyn Write>, String> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| format!("{}: {e}", p.display()))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn load_lattice(p: &Path) -> Result<SubspaceLattice, String> {
    let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
    SubspaceLattice::from_json_str(&text).map_err(|e| format!("{}: {e}", p.display()))
}

fn vector(v: Vec<f64>) -> DVector<f64> {
    DVector::from_vec(v)
}

fn e2s(e: brokenflow::Error) -> String {
    e.to_string()
}

#[derive(Serialize)]
struct MemberReport {
    id: usize,
    name: String,
    dim: usize,
    rank: usize,
    auto_added: bool,
}

#[derive(Serialize)]
struct LatticeReport {
    ambient_dim: usize,
    members: Vec<MemberReport>,
    hasse_edges: Vec<(String, String)>,
    auto_added: Vec<String>,
    n_body_rank: usize,
}

fn cmd_lattice(ctx: &Ctx) -> Result<ExitCode, String> {
    let path = require(ctx.arrangement.clone(), "arrangement")?;
    let lat = load_lattice(&path)?;
    let report = LatticeReport {
        ambient_dim: lat.ambient_dim(),
        members: lat
            .ids()
            .map(|a| MemberReport { id: a.0, name: lat.name(a).into(), dim: lat.member(a).dim(), rank: lat.rank(a), auto_added: lat.is_auto_added(a) })
            .collect(),
        hasse_edges: lat.hasse_edges().into_iter().map(|(a, b)| (lat.name(a).into(), lat.name(b).into())).collect(),
        auto_added: lat.ids().filter(|&a| lat.is_auto_added(a)).map(|a| lat.name(a).into()).collect(),
        n_body_rank: lat.n_body_rank(),
    };
    let mut out = ctx.sink()?;
    match ctx.format {
        Some(Format::Json) => io::write_json(&mut out, &report).map_err(e2s)?,
        Some(Format::Csv) => {
            writeln!(out, "id,name,dim,rank,auto_added").map_err(|e| e.to_string())?;
            for m in &report.members {
                writeln!(out, "{},{},{},{},{}", m.id, m.name, m.dim, m.rank, m.auto_added).map_err(|e| e.to_string())?;
            }
        }
        None => {
            let w = |out: &mut Box<dyn Write>, s: String| writeln!(out, "{s}").map_err(|e| e.to_string());
            w(&mut out, format!("ambient dimension {}", report.ambient_dim))?;
            w(&mut out, format!("members ({}):", report.members.len()))?;
            for m in &report.members {
                let tag = if m.auto_added { "  [auto-added]" } else { "" };
                w(&mut out, format!("  {:>3}  {:<16} dim {}  rank {}{tag}", m.id, m.name, m.dim, m.rank))?;
            }
            if report.auto_added.is_empty() {
                w(&mut out, "auto-added intersections: none".into())?;
            } else {
                w(&mut out, format!("auto-added intersections: {}", report.auto_added.join(", ")))?;
            }
            w(&mut out, "hasse edges:".into())?;
            for (a, b) in &report.hasse_edges {
                w(&mut out, format!("  {a} < {b}"))?;
            }
            w(&mut out, format!("N-body rank: {} ({}-body)", report.n_body_rank, report.n_body_rank))?;
        }
    }
    out.flush().map_err(|e| e.to_string())?;
    Ok(ExitCode::SUCCESS)
}

fn start_state(args: &StateArgs, cfg: &RunConfig) -> Result<ScCovector, String> {
    let omega = vector(require(pick(&args.omega, &cfg.omega), "omega")?);
    let tau = require(pick(&args.tau, &cfg.tau), "tau")?;
    let v = vector(require(pick(&args.v, &cfg.v), "v")?);
    ScCovector::new(omega, tau, v).map_err(e2s)
}

#[derive(Serialize)]
struct ClassifyReport {
    face: String,
    class: &'static str,
    margin: f64,
    tau: f64,
    mu: Vec<f64>,
    nu: Vec<f64>,
}

fn cmd_classify(ctx: &Ctx, args: &StateArgs) -> Result<ExitCode, String> {
    let lambda = ctx.lambda()?;
    let xi = start_state(args, &ctx.cfg)?;
    let lat = ctx.lattice(Some(xi.dim()))?;
    let z = compress(&xi, &lat).map_err(e2s)?;
    let c = classify(&z, lambda, CLASSIFY_TOL);
    let sp = split(&xi, &lat, z.face).map_err(e2s)?;
    let report = ClassifyReport {
        face: lat.name(z.face).into(),
        class: c.class.label(),
        margin: c.margin,
        tau: z.tau,
        mu: sp.mu.iter().copied().collect(),
        nu: sp.nu.iter().copied().collect(),
    };
    let mut out = ctx.sink()?;
    match ctx.format {
        Some(Format::Json) => io::write_json(&mut out, &report).map_err(e2s)?,
        Some(Format::Csv) => {
            writeln!(out, "face,class,margin").map_err(|e| e.to_string())?;
            writeln!(out, "{},{},{}", report.face, report.class, io::fmt_f64(report.margin)).map_err(|e| e.to_string())?;
        }
        None => {
            writeln!(out, "face {}\nclass {}\nmargin {:e}", report.face, report.class, report.margin).map_err(|e| e.to_string())?;
        }
    }
    out.flush().map_err(|e| e.to_string())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_flow(ctx: &Ctx, args: &FlowArgs) -> Result<ExitCode, String> {
    let cfg = &ctx.cfg;
    let lambda = ctx.lambda()?;
    let xi = start_state(&args.state, cfg)?;
    let time = require(pick(&args.time, &cfg.time), "time")?;
    let lattice = match &ctx.arrangement {
        Some(p) => Some(load_lattice(p)?),
        None => None,
    };
    let mut fc = match pick(&args.integrator, &cfg.integrator).unwrap_or(IntegratorKind::Analytic) {
        IntegratorKind::Analytic => FlowConfig::analytic(lambda, time),
        IntegratorKind::Rk4 => FlowConfig::rk4(lambda, time, pick(&args.step, &cfg.step).unwrap_or(1e-3)),
    };
    if let Some(dt) = pick(&args.dt, &cfg.dt) {
        fc.sample_dt = dt;
    }
    if !(fc.sample_dt > 0.0) {
        return Err(format!("dt must be positive, got {}", fc.sample_dt));
    }
    let seg = integrate_bichar(&xi, &fc, None).map_err(e2s)?;
    let mut out = ctx.sink()?;
    match ctx.format.unwrap_or(Format::Csv) {
        Format::Csv => io::write_samples_csv(&mut out, &seg.samples, lattice.as_ref()).map_err(e2s)?,
        Format::Json => io::write_json(&mut out, &TrajectoryRecord::from_segment(&seg, lattice.as_ref())).map_err(e2s)?,
    }
    out.flush().map_err(|e| e.to_string())?;
    if let Some(path) = pick(&args.geodesic_output, &cfg.geodesic_output) {
        let rec = reparametrize(&seg).map_err(e2s)?;
        let mut g = open_sink(Some(&path))?;
        io::write_geodesic_csv(&mut g, &rec).map_err(e2s)?;
        g.flush().map_err(|e| e.to_string())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_relation(ctx: &Ctx, args: &RelationArgs) -> Result<ExitCode, String> {
    let cfg = &ctx.cfg;
    let p = vector(require(pick(&args.point, &cfg.point), "point")?);
    let u = vector(require(pick(&args.direction, &cfg.direction), "direction")?);
    let k = pick(&args.max_breaks, &cfg.max_breaks).unwrap_or(2);
    let m = pick(&args.normal_samples, &cfg.normal_samples).unwrap_or(8);
    let lat = ctx.lattice(Some(p.len()))?;
    let rel = time_pi_relation(&lat, &p, &u, k, m).map_err(e2s)?;
    let rec = RelationRecord::new(&rel, &lat);
    let mut out = ctx.sink()?;
    match ctx.format.unwrap_or(Format::Json) {
        Format::Json => io::write_json(&mut out, &rec).map_err(e2s)?,
        Format::Csv => io::write_relation_csv(&mut out, &rec).map_err(e2s)?,
    }
    out.flush().map_err(|e| e.to_string())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_certify(ctx: &Ctx, args: &CertifyArgs) -> Result<ExitCode, String> {
    let cfg = &ctx.cfg;
    let lambda = ctx.lambda()?;
    let family = require(pick(&args.family, &cfg.family), "family")?;
    let point = vector(require(pick(&args.point, &cfg.point), "point")?);
    let tau = require(pick(&args.tau, &cfg.tau), "tau")?;
    let nu = vector(require(pick(&args.nu, &cfg.nu), "nu")?);
    let lat = ctx.lattice(Some(point.len()))?;
    let face = match pick(&args.face, &cfg.face) {
        Some(name) => lat.id(&name).map_err(e2s)?,
        None => lat.locate(&point).map_err(e2s)?.face,
    };
    let center = CompressedCovector { face, omega: point, tau, nu };
    let mut sc = SymbolContext::new(&lat, &center, lambda).map_err(e2s)?;
    if let Some(e) = pick(&args.eps, &cfg.eps) {
        sc = sc.with_eps(e);
    }
    if let Some(a) = pick(&args.a0, &cfg.a0) {
        sc = sc.with_a0(a);
    }
    if let Some(t) = pick(&args.t_shrink, &cfg.t_shrink) {
        sc = sc.with_t_shrink(t);
    }
    if let Some(b) = pick(&args.beta, &cfg.beta) {
        sc = sc.with_beta(b);
    }
    let mut opts = CertifyOptions::default().with_seed(ctx.seed);
    if let Some(n) = pick(&args.samples, &cfg.samples) {
        opts = opts.with_samples(n);
    }
    sc = match pick(&args.delta, &cfg.delta) {
        Some(d) => sc.with_delta(d),
        None => {
            let frac = pick(&args.delta_fraction, &cfg.delta_fraction).unwrap_or(0.5);
            let m = measure_constants(family, &sc, &opts).map_err(e2s)?;
            sc.with_delta(frac * m.delta0)
        }
    };
    if ctx.format == Some(Format::Csv) {
        return Err("certificates are written as JSON only".into());
    }
    let cert = certify_positivity(family, &sc, &opts).map_err(e2s)?;
    let mut out = ctx.sink()?;
    io::write_json(&mut out, &cert).map_err(e2s)?;
    out.flush().map_err(|e| e.to_string())?;
    let ok = cert.pass && cert.checks_pass();
    eprintln!(
        "{} certificate: {} (min {:.6e}, threshold {:.6e}, {} samples)",
        family.name(),
        if ok { "PASS" } else { "FAIL" },
        cert.min_value,
        cert.threshold,
        cert.samples
    );
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn configure_threads() -> Result<(), String> {
    if let Ok(v) = std::env::var("BROKENFLOW_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| format!("BROKENFLOW_THREADS must be a positive integer, got `{v}`"))?;
        if n == 0 {
            return Err("BROKENFLOW_THREADS must be positive".into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    configure_threads()?;
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let ctx = Ctx {
        lambda: pick(&cli.lambda, &cfg.lambda),
        seed: pick(&cli.seed, &cfg.seed).unwrap_or(0),
        output: pick(&cli.output, &cfg.output),
        format: pick(&cli.format, &cfg.format),
        arrangement: pick(&cli.arrangement, &cfg.arrangement),
        cfg,
    };
    match &cli.command {
        Command::Lattice => cmd_lattice(&ctx),
        Command::Classify(a) => cmd_classify(&ctx, a),
        Command::Flow(a) => cmd_flow(&ctx, a),
        Command::Relation(a) => cmd_relation(&ctx, a),
        Command::Certify(a) => cmd_certify(&ctx, a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
