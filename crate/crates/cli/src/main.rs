//! `ri2d`: command-line driver for the two-dimensional random interlacement
//! experiments.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration error, 3
//! resource or numeric error.

mod config;
mod output;

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use ri2d::experiments::coupling::consistency_laws;
use ri2d::experiments::critical::DEFAULT_LADDER;
use ri2d::experiments::regularity::default_x_choices;
use ri2d::experiments::{coupling_study, critical_pipeline, holder_scan, reversibility_check, torus_excursion_test, CouplingStudyConfig, CriticalRunConfig};
use ri2d::harmonic::{capacity, harmonic_measure, HmMethod};
use ri2d::interlacements::{vacant_prob, RiSampler};
use ri2d::rng::{stream_for, stream_id, tag};
use ri2d::slt::{consistency_experiment, deviation_experiment, ExcursionLaw, WalkStart};
use ri2d::solver::{AbsorbingSystem, BackendChoice, HatWeights, Srw, StepWeights};
use ri2d::verify::{self, Profile};
use ri2d::walks::TorusExcursionSpec;
use ri2d::{ball, Point, PointSet, PotentialTable};
use serde_json::json;

use config::{ConfigError, Params};
use output::RunDir;

#[derive(Parser)]
#[command(name = "ri2d", version, about = "Two-dimensional random interlacements: exact solves and Monte Carlo experiments")]
struct Cli {
    /// Key-value config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output root; each run writes to <out>/<subcommand>/.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Potential-table cache directory (overrides RI2D_CACHE_DIR).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Radius of the potential table used by the samplers.
    #[arg(long, global = true)]
    table_radius: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or load the potential-kernel table and report its residual.
    Potential(PotentialArgs),
    /// Exit distributions (Poisson kernel rows) from a ball or annulus.
    Kernel(KernelArgs),
    /// Capacity and harmonic measure of a finite set.
    Capacity(CapacityArgs),
    /// Sample random interlacements seen from a window.
    SampleRi(SampleRiArgs),
    /// Monte Carlo estimate of P[x ∈ V^α].
    VacantProb(VacantProbArgs),
    /// Soft-local-time coupling of torus and i.i.d. excursions.
    SltCouple(SltCoupleArgs),
    /// Sup-deviation of soft local times from k·hm.
    SltDeviation(SltDeviationArgs),
    /// Consistency of soft local times under a joint construction.
    SltConsistency(SltConsistencyArgs),
    /// Excursion counts of the torus walk.
    TorusExcursions(TorusArgs),
    /// Hölder scan of annulus entrance measures.
    Holder(HolderArgs),
    /// Reversibility identity for the annulus Poisson kernel.
    Reversibility(ReversibilityArgs),
    /// Desk-scale critical pipeline.
    Critical(CriticalArgs),
    /// Run the acceptance checks.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct PotentialArgs {
    #[arg(long)]
    radius: Option<u32>,
    #[arg(long)]
    tol: Option<f64>,
    /// Fail (exit 1) if the harmonicity residual exceeds 1e-10.
    #[arg(long)]
    check: bool,
    /// Largest norm written to potential.csv.
    #[arg(long)]
    rows: Option<f64>,
}

#[derive(Args)]
struct KernelArgs {
    /// Outer radius of the domain.
    #[arg(long)]
    radius: Option<f64>,
    /// Inner radius; the domain becomes the annulus inner < ‖x‖ ≤ radius.
    #[arg(long)]
    inner: Option<f64>,
    /// Start points, `x,y;x,y`.
    #[arg(long)]
    starts: Option<String>,
    /// `srw` or `hat`.
    #[arg(long)]
    walk: Option<String>,
}

#[derive(Args)]
struct CapacityArgs {
    /// Points of the set, `x,y;x,y`.
    #[arg(long)]
    set: Option<String>,
}

#[derive(Args)]
struct SampleRiArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    window_radius: Option<f64>,
    #[arg(long)]
    center: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
}

#[derive(Args)]
struct VacantProbArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    x: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
}

#[derive(Args)]
struct SltCoupleArgs {
    #[arg(long)]
    n: Option<i64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    side: Option<i64>,
    #[arg(long)]
    k: Option<u64>,
    /// Margin multipliers of √k tried by the pilot (m′ = k − mult·√k).
    #[arg(long)]
    multipliers: Option<String>,
    #[arg(long)]
    pilot_target: Option<f64>,
    #[arg(long)]
    pilot_reps: Option<u64>,
    #[arg(long)]
    reps: Option<u64>,
}

#[derive(Args)]
struct SltDeviationArgs {
    #[arg(long)]
    n: Option<i64>,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    #[arg(long)]
    ks: Option<String>,
    #[arg(long)]
    reps: Option<u64>,
}

#[derive(Args)]
struct SltConsistencyArgs {
    #[arg(long)]
    y0: Option<String>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    reps: Option<u64>,
}

#[derive(Args)]
struct TorusArgs {
    #[arg(long)]
    n: Option<i64>,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    /// Durations; default 3n², 6n², 12n².
    #[arg(long)]
    ts: Option<String>,
    #[arg(long)]
    reps: Option<u64>,
}

#[derive(Args)]
struct HolderArgs {
    #[arg(long)]
    ns: Option<String>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Args)]
struct ReversibilityArgs {
    #[arg(long)]
    n: Option<i64>,
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Args)]
struct CriticalArgs {
    /// Ladder of scales b.
    #[arg(long)]
    bs: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    count_reps: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Reduced sizes, same tolerances.
    #[arg(long)]
    quick: bool,
    /// Comma-separated check ids, e.g. `AC1,AC6b`.
    #[arg(long)]
    only: Option<String>,
}

enum Failure {
    Config(String),
    Check(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Check(_) => 1,
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Check(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<ri2d::Error> for Failure {
    fn from(e: ri2d::Error) -> Self {
        use ri2d::Error::*;
        match e {
            Domain(_) | Config(_) => Failure::Config(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(format!("json: {e}"))
    }
}

type Outcome = Result<(), Failure>;

/// Shared state of one invocation.
struct Ctx {
    file: HashMap<String, String>,
    seed: u64,
    out: PathBuf,
    workers: usize,
    table_radius: u32,
}

impl Ctx {
    fn params(&self, scope: &str) -> Params {
        Params::new(scope, self.file.clone())
    }

    fn table(&self) -> Result<std::sync::Arc<PotentialTable>, Failure> {
        Ok(PotentialTable::shared(self.table_radius)?)
    }

    fn run_dir(&self, name: &str, p: &Params) -> Result<RunDir, Failure> {
        let mut params = p.resolved().clone();
        params.insert("table_radius".into(), self.table_radius.into());
        Ok(RunDir::create(&self.out, name, self.seed, &params)?)
    }

    fn done(&self, dir: RunDir) -> Outcome {
        let path = dir.finish(self.workers)?;
        println!("outputs in {}", path.display());
        Ok(())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let file = match &cli.config {
        Some(p) => config::load_file(p)?,
        None => HashMap::new(),
    };
    let mut globals = Params::new("", file.clone());
    let seed = globals.get(cli.seed, "seed", 1)?;
    let out = PathBuf::from(globals.get(cli.out.map(|p| p.display().to_string()), "out", "ri2d-out".to_string())?);
    let default_workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let workers = globals.get(cli.workers.map(|w| w as u64), "workers", default_workers as u64)? as usize;
    if workers == 0 {
        return Err(Failure::Config("--workers must be positive".into()));
    }
    let table_radius = globals.get(cli.table_radius.map(u64::from), "table_radius", 256)?;
    let table_radius = u32::try_from(table_radius).map_err(|_| Failure::Config("table radius out of range".into()))?;
    if let Some(dir) = cli.cache_dir.map(|p| p.display().to_string()).or_else(|| file.get("cache_dir").cloned()) {
        std::env::set_var("RI2D_CACHE_DIR", dir);
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))?;
    let ctx = Ctx { file, seed, out, workers, table_radius };
    info!("seed {seed}, {workers} workers, outputs under {}", ctx.out.display());
    match cli.command {
        Command::Potential(a) => potential(&ctx, a),
        Command::Kernel(a) => kernel(&ctx, a),
        Command::Capacity(a) => capacity_cmd(&ctx, a),
        Command::SampleRi(a) => sample_ri(&ctx, a),
        Command::VacantProb(a) => vacant_prob_cmd(&ctx, a),
        Command::SltCouple(a) => slt_couple(&ctx, a),
        Command::SltDeviation(a) => slt_deviation(&ctx, a),
        Command::SltConsistency(a) => slt_consistency(&ctx, a),
        Command::TorusExcursions(a) => torus(&ctx, a),
        Command::Holder(a) => holder(&ctx, a),
        Command::Reversibility(a) => reversibility(&ctx, a),
        Command::Critical(a) => critical(&ctx, a),
        Command::Verify(a) => verify_cmd(&ctx, a),
    }
}

const RESIDUAL_GATE: f64 = 1e-10;

fn potential(ctx: &Ctx, a: PotentialArgs) -> Outcome {
    let mut p = ctx.params("potential");
    let radius = p.get(a.radius.map(u64::from), "radius", 256)?;
    let radius = u32::try_from(radius).map_err(|_| Failure::Config("radius out of range".into()))?;
    let tol = p.get(a.tol, "tol", ri2d::potential::DEFAULT_TOL)?;
    let check = p.flag(a.check, "check")?;
    let rows = p.get(a.rows, "rows", 32.0)?;
    let mut dir = ctx.run_dir("potential", &p)?;
    let t = PotentialTable::load_or_build(radius, tol, Some(&ri2d::potential::cache_dir()))?;
    let residual = t.harmonicity_residual();
    let mut f = dir.file("potential.csv")?;
    t.write_csv(&mut f, rows)?;
    f.flush()?;
    let mut s = dir.file("summary.csv")?;
    writeln!(s, "# schema=potential_summary/1")?;
    writeln!(s, "radius,tol,solver_residual,harmonicity_residual,a_1_0,a_1_1")?;
    writeln!(s, "{radius},{tol:e},{:.6e},{residual:.6e},{:.15e},{:.15e}", t.solver_residual(), t.a(Point::new(1, 0)), t.a(Point::new(1, 1)))?;
    s.flush()?;
    println!("radius {radius}: harmonicity residual {residual:.3e}, a(1,0) = {:.12}, a(1,1) = {:.12}", t.a(Point::new(1, 0)), t.a(Point::new(1, 1)));
    ctx.done(dir)?;
    if check && residual > RESIDUAL_GATE {
        return Err(Failure::Check(format!("harmonicity residual {residual:.3e} exceeds {RESIDUAL_GATE:e}")));
    }
    if check {
        println!("check passed: residual ≤ {RESIDUAL_GATE:e}");
    }
    Ok(())
}

fn kernel(ctx: &Ctx, a: KernelArgs) -> Outcome {
    let mut p = ctx.params("kernel");
    let radius = p.get(a.radius, "radius", 10.0)?;
    let inner = p.get(a.inner, "inner", -1.0)?;
    let starts = p.points(a.starts.as_deref(), "starts", Some(vec![Point::ORIGIN]))?;
    let walk = p.get(a.walk, "walk", "srw".to_string())?;
    let domain = if inner >= 0.0 {
        if inner >= radius {
            return Err(Failure::Config("inner radius must be below the outer radius".into()));
        }
        ri2d::lattice::annulus(Point::ORIGIN, inner, radius)
    } else {
        ball(Point::ORIGIN, radius)
    };
    let table;
    let hat;
    let weights: &dyn StepWeights = match walk.as_str() {
        "srw" => &Srw,
        "hat" => {
            table = ctx.table()?;
            hat = HatWeights::new(&table);
            &hat
        }
        other => return Err(Failure::Config(format!("unknown walk `{other}` (srw or hat)"))),
    };
    let mut dir = ctx.run_dir("kernel", &p)?;
    let sys = AbsorbingSystem::exit_problem(&domain, weights, BackendChoice::Auto)?;
    let k = sys.exit_kernel(&starts, weights)?;
    let mut f = dir.file("kernel.csv")?;
    k.write_csv(&mut f, "kernel")?;
    f.flush()?;
    for (i, x) in k.start_points().iter().enumerate() {
        let row = k.row_at(i);
        let (arg, max) = row.iter().enumerate().fold((0, 0.0), |m, (j, v)| if *v > m.1 { (j, *v) } else { m });
        println!("start {x}: row sum {:.15}, {} exit points, largest mass {max:.6} at {}", row.iter().sum::<f64>(), row.len(), k.targets.get(arg));
    }
    ctx.done(dir)
}

fn capacity_cmd(ctx: &Ctx, a: CapacityArgs) -> Outcome {
    let mut p = ctx.params("capacity");
    let pts = p.points(a.set.as_deref(), "set", None)?;
    let set = PointSet::new(pts);
    let t = ctx.table()?;
    let mut dir = ctx.run_dir("capacity", &p)?;
    let cap = capacity(&t, &set)?;
    let hm = harmonic_measure(&t, &set, HmMethod::Limit)?;
    let mut f = dir.file("capacity.csv")?;
    writeln!(f, "# schema=capacity/1")?;
    writeln!(f, "points,capacity,sum_check,kernel_error")?;
    writeln!(f, "\"{}\",{:.15e},{:.15e},{:.3e}", config::format_points(set.points()), cap.value, cap.sum_check, cap.kernel_error)?;
    f.flush()?;
    let mut h = dir.file("harmonic_measure.csv")?;
    hm.write_csv(&mut h)?;
    h.flush()?;
    println!("cap = {:.12} (kernel error ≤ {:.1e}, Σ a·hm check {:.12})", cap.value, cap.kernel_error, cap.sum_check);
    if let [u, v] = set.points() {
        println!("two-point set: a(x)/2 = {:.12}", t.a(*v - *u) / 2.0);
    }
    ctx.done(dir)
}

fn sample_ri(ctx: &Ctx, a: SampleRiArgs) -> Outcome {
    let mut p = ctx.params("sample-ri");
    let alpha = p.get(a.alpha, "alpha", 1.0)?;
    let r = p.get(a.window_radius, "window_radius", 10.0)?;
    let c = p.point(a.center.as_deref(), "center", Point::ORIGIN)?;
    let samples = p.get(a.samples, "samples", 1)?;
    if !(alpha > 0.0) || samples == 0 {
        return Err(Failure::Config("alpha and samples must be positive".into()));
    }
    let t = ctx.table()?;
    let window = ball(c, r);
    let mut dir = ctx.run_dir("sample-ri", &p)?;
    let sampler = RiSampler::new(&t, &window)?;
    let mut f = dir.file("samples.csv")?;
    writeln!(f, "# schema=ri_samples/1")?;
    writeln!(f, "sample,trajectories,vacant_sites")?;
    let mut first = None;
    for i in 0..samples {
        let mut rng = stream_for(ctx.seed, &[tag("sample-ri"), i]);
        let trace = sampler.sample(alpha, &mut rng)?;
        let vacant = trace.vacant_set(alpha, sampler.window());
        writeln!(f, "{i},{},{}", trace.count(alpha), vacant.len())?;
        if i == 0 {
            first = Some(vacant);
        }
    }
    f.flush()?;
    let mut v = dir.file("vacant_first.csv")?;
    writeln!(v, "# schema=ri_vacant/1")?;
    writeln!(v, "x,y,vacant")?;
    let vac = first.unwrap();
    for q in sampler.window().iter() {
        writeln!(v, "{},{},{}", q.x, q.y, vac.contains(*q) as u8)?;
    }
    v.flush()?;
    println!(
        "{samples} samples of RI({alpha}) on {} sites (cap {:.6}); first sample has {} vacant sites",
        sampler.window().len(),
        sampler.capacity(),
        vac.len()
    );
    ctx.done(dir)
}

fn vacant_prob_cmd(ctx: &Ctx, a: VacantProbArgs) -> Outcome {
    let mut p = ctx.params("vacant-prob");
    let alpha = p.get(a.alpha, "alpha", 1.0)?;
    let x = p.point(a.x.as_deref(), "x", Point::new(3, 4))?;
    let samples = p.get(a.samples, "samples", 100_000)?;
    let t = ctx.table()?;
    let mut dir = ctx.run_dir("vacant-prob", &p)?;
    let e = vacant_prob(&t, alpha, x, samples, ctx.seed)?;
    let mut f = dir.file("vacant_prob.csv")?;
    writeln!(f, "# schema=vacant_prob/1")?;
    writeln!(f, "alpha,x,y,samples,estimate,std_err,target,c_hat,asymptotic")?;
    writeln!(
        f,
        "{alpha},{},{},{samples},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e}",
        x.x, x.y, e.estimate, e.std_err, e.target, e.c_hat, e.asymptotic
    )?;
    f.flush()?;
    println!(
        "P[{x} ∈ V^{alpha}] ≈ {:.5} ± {:.5}; exp(−πα a(x)/2) = {:.5}; within 3σ: {}",
        e.estimate,
        e.std_err,
        e.target,
        e.within_sigma(3.0)
    );
    ctx.done(dir)
}

fn slt_couple(ctx: &Ctx, a: SltCoupleArgs) -> Outcome {
    let mut p = ctx.params("slt-couple");
    let cfg = CouplingStudyConfig {
        n: p.get(a.n, "n", 10)?,
        gamma: p.get(a.gamma, "gamma", 2.0)?,
        side: p.get(a.side, "side", 48)?,
        k: p.get(a.k, "k", 400)? as usize,
        multipliers: p.list(a.multipliers.as_deref(), "multipliers", vec![1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0])?,
        pilot_target: p.get(a.pilot_target, "pilot_target", 0.95)?,
        pilot_reps: p.get(a.pilot_reps, "pilot_reps", 200)?,
        reps: p.get(a.reps, "reps", 500)?,
        pilot_seed: stream_id(&[ctx.seed, tag("pilot")]),
        seed: ctx.seed,
    };
    cfg.validate()?;
    let t = ctx.table()?;
    let mut dir = ctx.run_dir("slt-couple", &p)?;
    let s = coupling_study(&t, &cfg)?;
    let mut f = dir.file("coupling.csv")?;
    writeln!(f, "# schema=slt_coupling/1")?;
    writeln!(f, "stage,multiplier,m_prime,k,frequency")?;
    for r in &s.pilot {
        writeln!(f, "pilot,{},{},{},{:.6}", r.multiplier, r.m_prime, cfg.k, r.frequency)?;
    }
    writeln!(f, "main,{},{},{},{:.6}", s.multiplier, s.m_prime, cfg.k, s.frequency)?;
    f.flush()?;
    println!("pilot margin {}·√k gives m′ = {} of k = {}; inclusion frequency {:.3} over {} reps", s.multiplier, s.m_prime, cfg.k, s.frequency, cfg.reps);
    ctx.done(dir)
}

fn slt_deviation(ctx: &Ctx, a: SltDeviationArgs) -> Outcome {
    let mut p = ctx.params("slt-deviation");
    let n = p.get(a.n, "n", 40)?;
    let g1 = p.get(a.gamma1, "gamma1", 0.1)?;
    let g2 = p.get(a.gamma2, "gamma2", 0.25)?;
    let ks: Vec<u64> = p.list(a.ks.as_deref(), "ks", vec![64, 256, 1024])?;
    let reps = p.get(a.reps, "reps", 200)?;
    let mut dir = ctx.run_dir("slt-deviation", &p)?;
    let spec = TorusExcursionSpec::balls(n, g1, g2)?;
    let law = ExcursionLaw::torus_walk(&spec, WalkStart::Stationary)?;
    let ks: Vec<usize> = ks.into_iter().map(|k| k as usize).collect();
    let d = deviation_experiment(&law, &ks, reps, ctx.seed)?;
    let mut f = dir.file("deviation.csv")?;
    d.write_csv(&mut f)?;
    f.flush()?;
    println!("log-log slope of the median sup-deviation: {:.4} (R² {:.4})", d.fit.slope, d.fit.r_squared);
    ctx.done(dir)
}

fn slt_consistency(ctx: &Ctx, a: SltConsistencyArgs) -> Outcome {
    let mut p = ctx.params("slt-consistency");
    let y0 = p.point(a.y0.as_deref(), "y0", Point::new(100, 0))?;
    let r = p.get(a.r, "r", 3.0)?;
    let gamma = p.get(a.gamma, "gamma", 2.0)?;
    let k = p.get(a.k, "k", 1)? as usize;
    let reps = p.get(a.reps, "reps", 10_000)?;
    if k == 0 {
        return Err(Failure::Config("k must be positive".into()));
    }
    let t = ctx.table()?;
    let mut dir = ctx.run_dir("slt-consistency", &p)?;
    let (alone, joint) = consistency_laws(&t, y0, r, gamma)?;
    let c = consistency_experiment(&alone, &joint, k, reps, ctx.seed)?;
    let mut f = dir.file("consistency.csv")?;
    writeln!(f, "# schema=slt_consistency/1")?;
    writeln!(f, "x,y,ks_p_value")?;
    for (q, pv) in alone.alphabet().iter().zip(&c.p_values) {
        writeln!(f, "{},{},{:.6e}", q.x, q.y, pv)?;
    }
    f.flush()?;
    println!("Bonferroni KS p = {:.4} over {} sites (max statistic {:.4})", c.global_p, c.p_values.len(), c.max_statistic);
    ctx.done(dir)
}

fn torus(ctx: &Ctx, a: TorusArgs) -> Outcome {
    let mut p = ctx.params("torus-excursions");
    let n = p.get(a.n, "n", 60)?;
    let g1 = p.get(a.gamma1, "gamma1", 0.15)?;
    let g2 = p.get(a.gamma2, "gamma2", 0.35)?;
    let t0 = 3 * (n * n).max(1) as u64;
    let ts: Vec<u64> = p.list(a.ts.as_deref(), "ts", vec![t0, 2 * t0, 4 * t0])?;
    let reps = p.get(a.reps, "reps", 1000)?;
    let mut dir = ctx.run_dir("torus-excursions", &p)?;
    let r = torus_excursion_test(n, g1, g2, &ts, reps, ctx.seed)?;
    let mut f = dir.file("torus_excursions.csv")?;
    r.write_csv(&mut f)?;
    f.flush()?;
    for row in &r.rows {
        println!("t={}: mean {:.3} ± {:.3} vs {:.3} (rel. error {:.3}); tail {:.3}", row.t, row.mean, row.std_err, row.formula, row.relative_error, row.tail);
    }
    ctx.done(dir)
}

fn holder(ctx: &Ctx, a: HolderArgs) -> Outcome {
    let mut p = ctx.params("holder");
    let ns: Vec<i64> = p.list(a.ns.as_deref(), "ns", vec![20, 40, 80])?;
    let c = p.get(a.c, "c", 4.0)?;
    let eps = p.get(a.eps, "eps", 0.1)?;
    let t = ctx.table()?;
    let mut dir = ctx.run_dir("holder", &p)?;
    let r = holder_scan(&t, &ns, c, eps, &default_x_choices(c, eps))?;
    let mut f = dir.file("holder_pairs.csv")?;
    r.write_pairs_csv(&mut f)?;
    f.flush()?;
    let mut b = dir.file("holder_bins.csv")?;
    r.write_bins_csv(&mut b)?;
    b.flush()?;
    for s in &r.scales {
        println!("n={}: β̂ {:.4} (R² {:.4}), Rfar/2 sensitivity {:.1e}", s.n, s.fit.slope, s.fit.r_squared, s.far_sensitivity);
    }
    println!("pooled β̂ {:.4} (R² {:.4})", r.pooled.slope, r.pooled.r_squared);
    ctx.done(dir)
}

fn reversibility(ctx: &Ctx, a: ReversibilityArgs) -> Outcome {
    let mut p = ctx.params("reversibility");
    let n = p.get(a.n, "n", 20)?;
    let c = p.get(a.c, "c", 3.0)?;
    let mut dir = ctx.run_dir("reversibility", &p)?;
    let r = reversibility_check(n, c)?;
    let mut f = dir.file("reversibility.csv")?;
    writeln!(f, "# schema=reversibility/1")?;
    writeln!(f, "n,c,starts,boundary_points,max_residual,max_kernel,isolated,isolated_max")?;
    writeln!(f, "{n},{c},{},{},{:.6e},{:.6e},{},{:.6e}", r.xs.len(), r.boundary_points, r.max_residual, r.max_kernel, r.isolated, r.isolated_max)?;
    f.flush()?;
    println!("max residual {:.3e} over {} starts and {} boundary points", r.max_residual, r.xs.len(), r.boundary_points);
    ctx.done(dir)
}

fn critical(ctx: &Ctx, a: CriticalArgs) -> Outcome {
    let mut p = ctx.params("critical");
    let bs = p.list(a.bs.as_deref(), "bs", DEFAULT_LADDER.to_vec())?;
    let gamma = p.get(a.gamma, "gamma", 1.1)?;
    let beta = p.get(a.beta, "beta", 0.45)?;
    let reps = p.get(a.reps, "reps", 64)?;
    let count_reps = p.get(a.count_reps, "count_reps", 20_000)?;
    let cfg = CriticalRunConfig::new(bs, gamma, beta, reps, count_reps, ctx.seed)?;
    let t = ctx.table()?;
    let mut dir = ctx.run_dir("critical", &p)?;
    let r = critical_pipeline(&t, &cfg)?;
    let mut f = dir.file("critical.csv")?;
    r.write_csv(&mut f)?;
    f.flush()?;
    for s in &r.scales {
        println!(
            "b={:.0}: Φ {:.3} (counts {:.3}), J {:.3}, M {:.3}; conjunction {} of {}, implication failures {}",
            s.thresholds.b, s.phi.estimate, s.phi_counts.estimate, s.j.estimate, s.m.estimate, s.conjunction, cfg.reps, s.implication_failures
        );
    }
    ctx.done(dir)
}

fn verify_cmd(ctx: &Ctx, a: VerifyArgs) -> Outcome {
    let mut p = ctx.params("verify");
    let quick = p.flag(a.quick, "quick")?;
    let only = p.get(a.only, "only", String::new())?;
    let profile = if quick { Profile::Quick } else { Profile::Full };
    let checks: Vec<verify::Check> = if only.is_empty() {
        verify::checks()
    } else {
        only.split(',')
            .map(|id| verify::check(id.trim()).ok_or_else(|| Failure::Config(format!("unknown check `{}`", id.trim()))))
            .collect::<Result<_, _>>()?
    };
    let mut dir = ctx.run_dir("verify", &p)?;
    let mut f = dir.file("verify.csv")?;
    writeln!(f, "# schema=verify/1")?;
    writeln!(f, "id,pass,declared,detail")?;
    let mut outcomes = Vec::new();
    for c in &checks {
        let o = c.run(profile);
        println!("{}", o.line());
        writeln!(f, "{},{},{},\"{}\"", o.id, o.pass, o.declared.is_some(), o.detail.replace('"', "'"))?;
        outcomes.push(o);
    }
    f.flush()?;
    let mut m = dir.file("verify.json")?;
    serde_json::to_writer_pretty(&mut m, &json!({ "profile": format!("{profile:?}"), "outcomes": outcomes }))?;
    m.flush()?;
    let regressions: Vec<&str> = outcomes.iter().filter(|o| o.is_regression()).map(|o| o.id).collect();
    let declared = outcomes.iter().filter(|o| !o.pass && o.declared.is_some()).count();
    println!("{} passed, {} declared failures, {} regressions", outcomes.iter().filter(|o| o.pass).count(), declared, regressions.len());
    ctx.done(dir)?;
    if regressions.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("failed checks: {}", regressions.join(", "))))
    }
}
