use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use lgt::dynamics::{run_script, GameTrace, IntegratorConfig, Scheme};
use lgt::harness::{
    gen_lost_cow, gen_random_layered_tree, gen_random_script_with, run_experiment, write_results, AdversaryScript,
    ExperimentConfig, OutputFormat, ScriptMix,
};
use lgt::layered::{binary_convert, sample_walks, traverse, LayeredTree, TraverseConfig};
use lgt::potential::{certificate_report, lineage_y};
use lgt::{Error, Result};

/// Randomized layered graph traversal with checked potential certificates.
#[derive(Parser)]
#[command(name = "lgt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an adversary script or a layered instance.
    Gen(GenArgs),
    /// Play an adversary script and write the game trace.
    Simulate(SimulateArgs),
    /// Run the fractional traversal on a layered instance.
    Traverse(TraverseArgs),
    /// Check the certificates of a game trace.
    Certify(CertifyArgs),
    /// Run a batch experiment and write the results table.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Script,
    LostCow,
    Layered,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Args)]
struct IntegratorArgs {
    /// Conservation tolerance after repair.
    #[arg(long)]
    tol: Option<f64>,
    /// Largest relative change of any coordinate per substep.
    #[arg(long = "max-step")]
    max_step: Option<f64>,
    /// Use the trapezoidal predictor-corrector instead of Euler.
    #[arg(long)]
    heun: bool,
}

impl IntegratorArgs {
    fn config(&self) -> IntegratorConfig {
        let mut cfg = IntegratorConfig::default();
        if let Some(t) = self.tol {
            cfg.conservation_tol = t;
        }
        if let Some(s) = self.max_step {
            cfg.max_relative_step = s;
        }
        if self.heun {
            cfg.scheme = Scheme::Heun;
        }
        cfg
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(value_enum)]
    kind: GenKind,
    #[arg(long, default_value_t = 3)]
    k: u32,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Script steps, or layers of a random layered instance.
    #[arg(long, default_value_t = 50)]
    steps: usize,
    /// Path lengths for the lost cow instance, comma separated.
    #[arg(long, value_delimiter = ',')]
    lengths: Vec<u64>,
    /// Unit-edge probability for random layered instances.
    #[arg(long, default_value_t = 0.4)]
    unit_edge_prob: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Script file (JSON).
    script: PathBuf,
    #[command(flatten)]
    integrator: IntegratorArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TraverseArgs {
    /// Layered instance file (JSON). Instances that are not binary with at
    /// most one unit edge per gap are converted first.
    instance: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Sample this many rounded walks and report their mean cost.
    #[arg(long, default_value_t = 0)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    integrator: IntegratorArgs,
    /// Write the full layer trace here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CertifyArgs {
    /// Trace file written by `simulate`.
    trace: PathBuf,
    /// Script the trace was played from; defaults to the one stored in the trace.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Experiment config file (JSON); flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[command(flatten)]
    integrator: IntegratorArgs,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("lgt: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(a) => gen(a),
        Command::Simulate(a) => simulate(a),
        Command::Traverse(a) => traverse_cmd(a),
        Command::Certify(a) => certify(a),
        Command::Bench(a) => bench(a),
    }
}

fn gen(a: GenArgs) -> Result<ExitCode> {
    let k = a.k as usize;
    match a.kind {
        GenKind::Script => {
            let script = gen_random_script_with(a.k, a.epsilon, a.steps, a.seed, &ScriptMix::default())?;
            write_json(a.out.as_deref(), &script)?;
        }
        GenKind::LostCow => {
            let lengths = if a.lengths.is_empty() { vec![1; k] } else { a.lengths };
            write_json(a.out.as_deref(), &gen_lost_cow(k, &lengths)?)?;
        }
        GenKind::Layered => {
            write_json(a.out.as_deref(), &gen_random_layered_tree(k, a.steps, a.unit_edge_prob, a.seed)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate(a: SimulateArgs) -> Result<ExitCode> {
    let script: AdversaryScript = read_json(&a.script)?;
    let trace = run_script(&script, &a.integrator.config())?;
    let d = trace.diagnostics();
    eprintln!(
        "steps {}  cost {:.6}  d_max {}  substeps {}  min λ {:.3e}  residual {:.3e}",
        trace.records.len(),
        trace.total_cost(),
        trace.d_max(),
        d.substeps,
        d.min_internal_lambda,
        d.max_residual
    );
    write_json(a.out.as_deref(), &trace)?;
    Ok(ExitCode::SUCCESS)
}

fn traverse_cmd(a: TraverseArgs) -> Result<ExitCode> {
    let original: LayeredTree = read_json(&a.instance)?;
    let k = a.k.unwrap_or_else(|| original.width().max(2));
    let ready = original.is_binary() && original.max_unit_edges_per_gap() <= 1;
    let instance = if ready { original.clone() } else { binary_convert(&original, k)? };
    let cfg = TraverseConfig { epsilon: a.epsilon, integrator: a.integrator.config() };
    let trace = traverse(&instance, k, &cfg)?;
    let (opt, _) = original.opt_path()?;
    println!("opt {opt}");
    println!("layered_cost {:.6}", trace.layered_cost);
    println!("evolving_cost {:.6}", trace.evolving_cost());
    if a.samples > 0 {
        let s = sample_walks(&trace, a.samples, a.seed)?;
        println!("samples_mean {:.6}", s.mean);
        println!("samples_stderr {:.6}", s.stderr);
    }
    if let Some(path) = a.out.as_deref() {
        write_json(Some(path), &trace)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn certify(a: CertifyArgs) -> Result<ExitCode> {
    let trace: GameTrace = read_json(&a.trace)?;
    if let Some(p) = &a.script {
        let script: AdversaryScript = read_json(p)?;
        if script != trace.script {
            return Err(Error::Input("script does not match the one the trace was played from".into()));
        }
    }
    let y = lineage_y(&trace.script)?;
    let report = certificate_report(&trace, &y)?;
    eprintln!(
        "entries {}  failures {}  max violation {:.3e}  cost {:.6} ≤ bound {:.6}: {}",
        report.entries.len(),
        report.failures,
        report.max_violation,
        report.total_cost,
        report.end_to_end_bound,
        report.total_cost <= report.end_to_end_bound
    );
    let out = open_out(a.out.as_deref())?;
    match a.format {
        Format::Json => write_json_to(out, &report)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["step", "check", "instant", "lhs", "rhs", "slack", "tol", "passed"])?;
            for e in &report.entries {
                let check = serde_json::to_value(e.check)?;
                w.write_record([
                    e.step.to_string(),
                    check.as_str().unwrap_or_default().to_string(),
                    e.instant.map(|t| t.to_string()).unwrap_or_default(),
                    e.lhs.to_string(),
                    e.rhs.to_string(),
                    e.slack.to_string(),
                    e.tol.to_string(),
                    e.passed().to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(if report.all_passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn bench(a: BenchArgs) -> Result<ExitCode> {
    let mut cfg: ExperimentConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(k) = a.k {
        cfg.ks = vec![k];
    }
    if let Some(e) = a.epsilon {
        cfg.epsilon = e;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.samples {
        cfg.samples = n;
    }
    if let Some(t) = a.integrator.tol {
        cfg.integrator.conservation_tol = t;
    }
    if let Some(s) = a.integrator.max_step {
        cfg.integrator.max_relative_step = s;
    }
    if a.integrator.heun {
        cfg.integrator.scheme = Scheme::Heun;
    }
    if let Some(f) = a.format {
        cfg.format = f.into();
    }
    let rows = run_experiment(&cfg)?;
    write_results(&rows, cfg.format, open_out(a.out.as_deref())?)?;
    let over = rows.iter().filter(|r| r.frac_cost > r.bound).count();
    eprintln!("{} instances, {} above their bound", rows.len(), over);
    Ok(if over == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json_to<T: Serialize>(mut out: Box<dyn Write>, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    write_json_to(open_out(path)?, value)
}
