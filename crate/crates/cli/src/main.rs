use clap::{Args, Parser, Subcommand};
use dgff::chaos::{alpha, gmc_measure, ChaosLattice};
use dgff::green::green_matrix;
use dgff::harness::config::ExperimentConfig;
use dgff::harness::experiment::run_experiment;
use dgff::harness::seeds::replica_rng;
use dgff::harness::suite::run_suite;
use dgff::lattice::{DomainSpec, LatticeDomain};
use dgff::network::{cut_decompose, effective_resistance, path_decompose, Network};
use dgff::rwre::{exit_landscape, walk_many};
use dgff::sampler::{sample_pinned, write_fields, write_fields_csv, FieldSampler};
use dgff::{Error, Result};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(name = "dgff", version, about = "Two-dimensional discrete Gaussian free field toolkit")]
struct Cli {
    /// Master seed for all random streams.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory receiving output files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Experiment configuration (`key = value` lines); runs it when no subcommand is given.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Dirichlet Green function of a domain.
    Green(GreenArgs),
    /// Draw field samples.
    Sample(SampleArgs),
    /// Intermediate level-set sizes and their growth exponent.
    Levelset(SizesArgs),
    /// Statistics of the maximum.
    Maxstat(SizesArgs),
    /// Branching random walk maxima.
    Brw(BrwArgs),
    /// Hierarchical multiplicative chaos.
    Chaos(ChaosArgs),
    /// Effective resistance between two vertex sets of a network file.
    Resist(ResistArgs),
    /// Random walk in the field-driven environment.
    Walk(WalkArgs),
    /// Acceptance suite.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct GreenArgs {
    /// `box:N`, `disc:N` or `mask:path`.
    #[arg(long, default_value = "box:16")]
    domain: String,
    /// Also write the full matrix as CSV.
    #[arg(long)]
    write: bool,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, default_value = "box:64")]
    domain: String,
    #[arg(long, default_value_t = 1)]
    reps: usize,
    /// Output file, `.bin` or `.csv`; relative paths resolve inside the output directory.
    #[arg(long, default_value = "fields.bin")]
    out: PathBuf,
}

#[derive(Args)]
struct SizesArgs {
    /// `box` or `disc`.
    #[arg(long, default_value = "box")]
    domain: String,
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 0.2)]
    lambda: f64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
}

#[derive(Args)]
struct BrwArgs {
    /// Branching number.
    #[arg(long, default_value_t = 2)]
    b: usize,
    /// Depths.
    #[arg(long, value_delimiter = ',', default_value = "4,6,8,10")]
    depths: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
}

#[derive(Args)]
struct ChaosArgs {
    /// Inverse temperature as a fraction of the critical value.
    #[arg(long, default_value_t = 0.3)]
    lambda: f64,
    #[arg(long, default_value_t = 6)]
    levels: usize,
    /// Replicas of the total mass.
    #[arg(long, default_value_t = 100)]
    reps: usize,
}

#[derive(Args)]
struct ResistArgs {
    /// Network file with lines `u v c`.
    #[arg(long)]
    net: PathBuf,
    /// Source vertex names: a file of whitespace-separated names, or a comma-separated list.
    #[arg(long)]
    src: String,
    /// Sink vertex names, in the same form as `--src`.
    #[arg(long)]
    dst: String,
    /// Write a path or cutset decomposition of the unit current as JSON.
    #[arg(long, value_parser = ["path", "cut"])]
    decompose: Option<String>,
}

#[derive(Args)]
struct WalkArgs {
    /// Conductance exponent in `c = exp(β (h_x + h_y))`.
    #[arg(long, default_value_t = 0.6)]
    beta: f64,
    /// Radius of the box `{|x|∞ ≤ N}` carrying the pinned field.
    #[arg(long = "N", default_value_t = 64)]
    n: usize,
    /// Walks, each in a fresh environment.
    #[arg(long, default_value_t = 100)]
    reps: usize,
    /// Step cap per walk.
    #[arg(long, default_value_t = 10_000_000)]
    steps: usize,
    #[arg(long, default_value = "walks.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SuiteArgs {
    /// Criteria to run; all when omitted.
    #[arg(long, value_delimiter = ',')]
    criteria: Vec<usize>,
}

fn parse_domain(spec: &str) -> Result<Arc<LatticeDomain>> {
    Ok(Arc::new(spec.parse::<DomainSpec>()?.build()?))
}

fn resolve_out(out_dir: &Path, file: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir)?;
    Ok(if file.is_absolute() { file.to_path_buf() } else { out_dir.join(file) })
}

fn read_names(arg: &str) -> Result<Vec<String>> {
    let text = if Path::new(arg).is_file() { std::fs::read_to_string(arg)? } else { arg.replace(',', " ") };
    Ok(text.split_whitespace().map(str::to_string).collect())
}

fn green(cli: &Cli, a: &GreenArgs) -> Result<()> {
    let d = parse_domain(&a.domain)?;
    let g = green_matrix(&d)?;
    let (cx, cy) = d.vertices().iter().fold((0.0, 0.0), |s, v| (s.0 + v.0 as f64, s.1 + v.1 as f64));
    let c = (cx / d.len() as f64, cy / d.len() as f64);
    let center = d.vertices().iter().copied().min_by(|u, v| {
        let du = (u.0 as f64 - c.0).powi(2) + (u.1 as f64 - c.1).powi(2);
        let dv = (v.0 as f64 - c.0).powi(2) + (v.1 as f64 - c.1).powi(2);
        du.total_cmp(&dv)
    });
    let center = center.ok_or(Error::EmptyDomain)?;
    println!("vertices {}", d.len());
    println!("poisson_residual {:.3e}", g.poisson_residual());
    println!("G(({},{}),({},{})) {:.15}", center.0, center.1, center.0, center.1, g.entry(center, center));
    if a.write {
        let path = resolve_out(&cli.out_dir, Path::new("green.csv"))?;
        g.write_csv(BufWriter::new(File::create(&path)?))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn sample(cli: &Cli, a: &SampleArgs) -> Result<()> {
    let d = parse_domain(&a.domain)?;
    let sampler = FieldSampler::new(d)?;
    let fields: Vec<_> = (0..a.reps as u64).map(|r| sampler.sample(&mut replica_rng(cli.seed, r))).collect();
    let path = resolve_out(&cli.out_dir, &a.out)?;
    let w = BufWriter::new(File::create(&path)?);
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => write_fields_csv(w, &fields)?,
        _ => write_fields(w, &fields)?,
    }
    println!("wrote {} fields to {}", fields.len(), path.display());
    Ok(())
}

fn experiment(cli: &Cli, name: &str, set: &[(&str, String)]) -> Result<()> {
    let mut c = ExperimentConfig { experiment: name.into(), seed: cli.seed, out_dir: cli.out_dir.clone(), ..Default::default() };
    for (k, v) in set {
        c.set(k, v)?;
    }
    run_config(&c)
}

fn run_config(c: &ExperimentConfig) -> Result<()> {
    let out = run_experiment(c)?;
    println!("{}", serde_json::to_string_pretty(&out.summary)?);
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    println!("content hash {}", out.content_hash);
    Ok(())
}

fn join(v: &[usize]) -> String {
    v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
}

fn chaos(cli: &Cli, a: &ChaosArgs) -> Result<()> {
    let lat = ChaosLattice::new(a.levels)?;
    let beta = a.lambda * alpha();
    let m = gmc_measure(&lat, &lat.sample_levels(lat.depth(), &mut replica_rng(cli.seed, 0)), beta, lat.depth())?;
    let path = resolve_out(&cli.out_dir, Path::new("chaos_cells.csv"))?;
    m.write_csv(BufWriter::new(File::create(&path)?))?;
    println!("beta {beta:.6}, total mass of replica 0 {:.6}", m.total_mass());
    println!("wrote {}", path.display());
    experiment(
        cli,
        "chaos-mass",
        &[("lambda", a.lambda.to_string()), ("depth", a.levels.to_string()), ("reps", a.reps.to_string())],
    )
}

fn resist(a: &ResistArgs) -> Result<()> {
    let net = Network::read_file(&a.net)?;
    let (src, dst) = (read_names(&a.src)?, read_names(&a.dst)?);
    let sa = net.resolve(&src.iter().map(String::as_str).collect::<Vec<_>>())?;
    let sb = net.resolve(&dst.iter().map(String::as_str).collect::<Vec<_>>())?;
    let (r, sol) = effective_resistance(&net, &sa, &sb)?;
    println!("R_eff {r:.15e}");
    println!("C_eff {:.15e}", 1.0 / r);
    if let Some(kind) = &a.decompose {
        if sa.len() != 1 || sb.len() != 1 {
            return Err(Error::Validation("decompositions need single-vertex terminals".into()));
        }
        let dec = match kind.as_str() {
            "path" => path_decompose(&net, &sol, sa[0], sb[0])?,
            _ => cut_decompose(&net, &sol, sa[0], sb[0])?,
        };
        println!("{}", serde_json::to_string_pretty(&dec)?);
    }
    Ok(())
}

fn walk(cli: &Cli, a: &WalkArgs) -> Result<()> {
    let d = Arc::new(LatticeDomain::centered_box(a.n)?);
    let path = resolve_out(&cli.out_dir, &a.out)?;
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "replica,steps,exit_time,returns,displacement2")?;
    for r in 0..a.reps as u64 {
        let field = sample_pinned(&d, &mut replica_rng(cli.seed, r))?;
        let (kernel, region, origin) = exit_landscape(&field, a.beta)?;
        let s = walk_many(&kernel, origin, a.steps, Some(&region), 1, cli.seed ^ (r << 32))?.remove(0);
        let exit = s.exit_time.map_or(String::new(), |t| t.to_string());
        writeln!(w, "{r},{},{exit},{},{}", s.steps, s.returns, s.displacement2.unwrap_or(f64::NAN))?;
    }
    w.flush()?;
    println!("wrote {} walks to {}", a.reps, path.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    let seed = cli.seed;
    match &cli.command {
        None => {
            let path = cli.config.as_ref().ok_or_else(|| Error::InvalidArgument("give a subcommand or --config".into()))?;
            let mut c = ExperimentConfig::read_file(path)?;
            c.seed = if seed != 0 { seed } else { c.seed };
            if cli.out_dir != Path::new("out") {
                c.out_dir = cli.out_dir.clone();
            }
            run_config(&c)?;
        }
        Some(Command::Green(a)) => green(cli, a)?,
        Some(Command::Sample(a)) => sample(cli, a)?,
        Some(Command::Levelset(a)) => experiment(
            cli,
            "levelset-exponent",
            &[("domain", a.domain.clone()), ("sizes", join(&a.sizes)), ("lambda", a.lambda.to_string()), ("reps", a.reps.to_string())],
        )?,
        Some(Command::Maxstat(a)) => experiment(
            cli,
            "max-stats",
            &[("domain", a.domain.clone()), ("sizes", join(&a.sizes)), ("reps", a.reps.to_string())],
        )?,
        Some(Command::Brw(a)) => experiment(
            cli,
            "brw-max",
            &[("branching", a.b.to_string()), ("sizes", join(&a.depths)), ("reps", a.reps.to_string())],
        )?,
        Some(Command::Chaos(a)) => chaos(cli, a)?,
        Some(Command::Resist(a)) => resist(a)?,
        Some(Command::Walk(a)) => walk(cli, a)?,
        Some(Command::Suite(a)) => {
            let results = run_suite(seed, &a.criteria);
            for r in &results {
                println!("{r}");
            }
            return Ok(results.iter().all(|r| r.passed));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) | Error::Json(_) | Error::Solver(_) | Error::Factorization(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
