//! `polycert`: batch driver for invariance checks, training, certification,
//! complexity bounds, simulation and region enumeration.

mod job;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use polycert::certify::{certify, CertifyOptions, Verdict};
use polycert::complexity::{check_widths, consistent_variation_check, min_uniform_width, ComplexityQuery};
use polycert::io::{self, NetworkDoc, PartitionDoc, SystemDoc};
use polycert::relu::ReluNetwork;
use polycert::system::{simulate_batch, synthesize_vertex_controls, verify_invariance, DisturbancePolicy};
use polycert::trainer::{sample_dataset, train, Optimizer, SamplingScheme, TrainConfig};
use polycert::{Error, Norm, Parallelism};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use job::{hash_file, InputHash, Job, Loaded};

const EXIT_FAIL: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_SOFTWARE: u8 = 70;

#[derive(Parser)]
#[command(name = "polycert", version, about = "Certify ReLU-network controllers of polytopic linear systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Overrides the job's seed; 0 when neither is set.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file or directory, depending on the command.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn seed(&self, job: Option<&Job>) -> u64 {
        self.seed.or(job.and_then(|j| j.seed)).unwrap_or(0)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check that the vertex controls keep every successor inside λS.
    VerifyInvariance {
        system: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Solve the per-vertex control LPs and write the completed system file.
    SynthesizeControls {
        system: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fit a ReLU network to a controller on sampled states.
    Train {
        job: PathBuf,
        /// Hidden widths, e.g. `8,8`.
        #[arg(long, value_delimiter = ',', default_value = "8,8")]
        hidden: Vec<usize>,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 300)]
        epochs: usize,
        #[arg(long, default_value_t = 3e-3)]
        lr: f64,
        /// Mini-batch size; 0 trains on the full batch.
        #[arg(long, default_value_t = 64)]
        batch: usize,
        #[arg(long, default_value = "boundary-enriched")]
        scheme: String,
        #[arg(long)]
        sgd: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Bound the approximation error and check both closed-loop conditions.
    Certify {
        job: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Depth and width needed to reproduce a controller exactly.
    Complexity {
        /// `N^r n m k̄`, used when no partition is given.
        values: Vec<u64>,
        #[arg(long)]
        partition: Option<PathBuf>,
        /// Input dimension when reading a partition.
        #[arg(long, default_value_t = 1)]
        input_dim: usize,
        /// Hidden widths to check, e.g. `6,2`.
        #[arg(long, value_delimiter = ',')]
        widths: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-loop trace under a disturbance policy.
    Simulate {
        job: PathBuf,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// `greedy`, `uniform` or `vertex:<i>`.
        #[arg(long, default_value = "greedy")]
        policy: String,
        /// Initial state, e.g. `0.5,-0.2`; sampled from the seed when absent.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        /// Drive the loop with the exact controller even when a network is given.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Critical regions of a planar controller.
    EnumerateRegions {
        job: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// `1` or `inf`.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    gap_tol: Option<f64>,
    /// Seconds per MILP.
    #[arg(long)]
    time_limit: Option<f64>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Json(_) | Error::Io(_) | Error::Dimension(_) | Error::Invalid(_) | Error::InvalidPolytope(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_SOFTWARE)
        }
    }
}

fn parallelism(threads: usize) -> Parallelism {
    polycert::par::configure_threads(threads);
    if threads <= 1 {
        Parallelism::Sequential
    } else {
        Parallelism::Rayon
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::Runtime(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::VerifyInvariance { system, common } => verify(&system, &common),
        Command::SynthesizeControls { system, common } => synthesize(&system, &common),
        Command::Train { job, hidden, samples, epochs, lr, batch, scheme, sgd, common } => {
            let scheme = match scheme.as_str() {
                "uniform" | "uniform-rejection" => SamplingScheme::UniformRejection,
                "boundary" | "boundary-enriched" => SamplingScheme::BoundaryEnriched,
                other => return Err(Failure::Usage(format!("unknown sampling scheme `{other}`"))),
            };
            let cfg = TrainConfig {
                epochs,
                learning_rate: lr,
                batch: (batch > 0).then_some(batch),
                optimizer: if sgd { Optimizer::Sgd } else { Optimizer::adam() },
                seed: 0,
                par: parallelism(common.threads),
            };
            train_cmd(&job, &hidden, samples, scheme, &cfg, &common)
        }
        Command::Certify { job, solver, common } => certify_cmd(&job, &solver, &common),
        Command::Complexity { values, partition, input_dim, widths, common } => {
            complexity_cmd(&values, partition.as_deref(), input_dim, &widths, &common)
        }
        Command::Simulate { job, steps, policy, x0, runs, exact, common } => {
            simulate_cmd(&job, steps, &policy, &x0, runs, exact, &common)
        }
        Command::EnumerateRegions { job, common } => enumerate_cmd(&job, &common),
    }
}

#[derive(Serialize)]
struct InvarianceOutput {
    input: InputHash,
    lambda: f64,
    synthesized: bool,
    #[serde(flatten)]
    report: polycert::system::InvarianceReport,
}

fn verify(path: &Path, common: &Common) -> Outcome {
    let doc: SystemDoc = io::read_json(path)?;
    let (sys, mut spec) = doc.build()?;
    let synthesized = spec.vertex_controls.is_empty();
    if synthesized {
        match synthesize_vertex_controls(&sys, &spec.set, spec.lambda, &spec.inputs) {
            Ok(c) => spec.vertex_controls = c.controls,
            Err(Error::Vertex { vertex, reason }) => {
                println!("FAIL vertex {vertex}: {reason}");
                return Ok(EXIT_FAIL);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let report = verify_invariance(&sys, &spec)?;
    let ok = report.ok;
    let (v, g, margin) = (report.worst_vertex, report.worst_generator, report.worst_margin);
    let out = InvarianceOutput { input: hash_file(path)?, lambda: spec.lambda, synthesized, report };
    emit(&json(&out)?, common.out.as_deref())?;
    if ok {
        eprintln!("PASS invariance margin {margin:.3e}");
        Ok(0)
    } else {
        eprintln!("FAIL vertex {v} under generator {g}: margin {margin:.3e}");
        Ok(EXIT_FAIL)
    }
}

fn synthesize(path: &Path, common: &Common) -> Outcome {
    let doc: SystemDoc = io::read_json(path)?;
    let (sys, mut spec) = doc.build()?;
    match synthesize_vertex_controls(&sys, &spec.set, spec.lambda, &spec.inputs) {
        Ok(c) => spec.vertex_controls = c.controls,
        Err(Error::Vertex { vertex, reason }) => {
            eprintln!("FAIL vertex {vertex}: {reason}");
            return Ok(EXIT_FAIL);
        }
        Err(e) => return Err(e.into()),
    }
    emit(&json(&SystemDoc::of(&sys, &spec))?, common.out.as_deref())?;
    Ok(0)
}

fn out_dir(common: &Common, job: &Job) -> Result<PathBuf, Failure> {
    let dir = common.out.clone().or_else(|| job.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Usage(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn train_cmd(
    job_path: &Path,
    hidden: &[usize],
    samples: usize,
    scheme: SamplingScheme,
    cfg: &TrainConfig,
    common: &Common,
) -> Outcome {
    let job = Job::read(job_path)?;
    let seed = common.seed(Some(&job));
    let cfg = TrainConfig { seed, ..cfg.clone() };
    let loaded = job.load(false)?;
    let ctrl = &loaded.controller;
    let data = sample_dataset(ctrl.set(), |x| ctrl.eval(x), samples, scheme, seed)?;
    let mut dims = vec![loaded.system.state_dim()];
    dims.extend_from_slice(hidden);
    dims.push(loaded.system.input_dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net0 = ReluNetwork::glorot(&dims, &mut rng)?;
    let dir = out_dir(common, &job)?;
    let report = match train(&net0, &data, &cfg) {
        Ok(r) => r,
        Err(Error::Diverged { epoch, last }) => {
            write(&dir.join("network.json"), &json(&NetworkDoc::of(&last))?)?;
            eprintln!("FAIL training diverged at epoch {epoch}; last finite weights saved");
            return Ok(EXIT_FAIL);
        }
        Err(e) => return Err(e.into()),
    };
    write(&dir.join("network.json"), &json(&NetworkDoc::of(&report.network))?)?;
    write(&dir.join("dataset.json"), &json(&data)?)?;
    write(&dir.join("loss.csv"), &report.loss_csv())?;
    let last = report.loss_history.last().copied().unwrap_or(f64::NAN);
    println!("trained {:?} on {} samples: loss {last:.6e}", dims, data.len());
    Ok(0)
}

#[derive(Serialize)]
struct CertifyOutput<'a> {
    inputs: Vec<InputHash>,
    seed: u64,
    verdict: Verdict,
    certificate: &'a polycert::certify::Certificate,
}

fn certify_cmd(job_path: &Path, solver: &SolverArgs, common: &Common) -> Outcome {
    let job = Job::read(job_path)?;
    let loaded = job.load(true)?;
    let Loaded { system, spec, controller, network, inputs } = loaded;
    let network = network.ok_or_else(|| Failure::Usage("the job has no network".into()))?;
    let mut opts = CertifyOptions::default();
    let alpha = solver.alpha.clone().or(job.alpha.clone());
    if let Some(a) = alpha {
        opts.alpha = a.parse::<Norm>()?;
    }
    if let Some(r) = solver.rho.or(job.rho) {
        opts.rho = r;
    }
    opts.b = solver.b.or(job.b);
    if let Some(m) = &job.milp {
        opts.milp = m.clone();
    }
    if let Some(g) = solver.gap_tol {
        opts.milp.gap_tol = g;
    }
    if let Some(t) = solver.time_limit {
        opts.milp.time_limit = t;
    }
    opts.milp.threads = common.threads.max(1);
    parallelism(common.threads);
    let cert = certify(&system, &spec, &controller, &network, &opts)?;
    let verdict = cert.overall();
    let out = CertifyOutput { inputs, seed: common.seed(Some(&job)), verdict, certificate: &cert };
    let text = json(&out)?;
    match common.out.as_deref().or(job.out.as_deref()) {
        Some(p) => {
            let path = if p.extension().is_some() { p.to_path_buf() } else {
                std::fs::create_dir_all(p).map_err(|e| Failure::Usage(e.to_string()))?;
                p.join("certificate.json")
            };
            write(&path, &text)?;
        }
        None => print!("{text}"),
    }
    eprintln!("{}", summary(&cert));
    Ok(match verdict {
        Verdict::Pass => 0,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    })
}

fn summary(c: &polycert::certify::Certificate) -> String {
    let mut s = String::new();
    let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.6e}"));
    let _ = writeln!(s, "controller {} (alpha = {})", c.controller, c.alpha);
    let _ = writeln!(s, "  max error        {:.6e} (threshold {})", c.max_error, opt(c.zeta));
    let w = c.max_error_audit.witness.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", ");
    let _ = writeln!(s, "  worst state      [{w}]");
    let _ = writeln!(s, "  level b          {}", opt(c.b));
    let _ = writeln!(s, "  error Lipschitz  {} (threshold {})", opt(c.error_lipschitz), opt(c.lipschitz_threshold));
    let _ = writeln!(s, "  converges to bS  {:?}", c.converges_to_level);
    let _ = write!(s, "  exp. stable      {:?}", c.exponentially_stable);
    for w in &c.warnings {
        let _ = write!(s, "\n  warning: {w}");
    }
    s
}

#[derive(Serialize)]
struct ComplexityRow {
    regions: u64,
    state_dim: usize,
    input_dim: usize,
    depth: usize,
    width: usize,
    capacity: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    widths: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    widths_pass: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    consistent_variation: Option<bool>,
}

fn complexity_cmd(values: &[u64], partition: Option<&Path>, input_dim: usize, widths: &[usize], common: &Common) -> Outcome {
    let (q, consistent) = match partition {
        Some(p) => {
            let part = io::read_json::<PartitionDoc>(p)?.build()?;
            let set = job::partition_hull(&part)?;
            let q = ComplexityQuery::from_partition(&part, &set, input_dim)?;
            (q, Some(consistent_variation_check(&part)?.holds))
        }
        None => {
            let [nr, n, m, k] = values else {
                return Err(Failure::Usage("expected `N^r n m k̄` or --partition".into()));
            };
            let q = ComplexityQuery::new(*nr, *n as usize, *m as usize).with_depth(*k as usize);
            (q, None)
        }
    };
    if q.depth == 0 {
        println!("N^r = {}: the controller is affine; no hidden layer is required", q.regions);
        return Ok(0);
    }
    let bound = min_uniform_width(&q)?;
    let pass = if widths.is_empty() { None } else { Some(check_widths(&q, widths)?) };
    let row = ComplexityRow {
        regions: q.regions,
        state_dim: q.state_dim,
        input_dim: q.input_dim,
        depth: bound.depth,
        width: bound.width,
        capacity: bound.capacity.to_string(),
        widths: pass.map(|_| widths.to_vec()),
        widths_pass: pass,
        consistent_variation: consistent,
    };
    let mut table = format!("{:>6} {:>4} {:>4} {:>12}\n", "N^r", "L", "N̄", "widths");
    let wcol = match pass {
        Some(p) => format!("{:?} {}", widths, if p { "PASS" } else { "FAIL" }),
        None => "-".into(),
    };
    let _ = writeln!(table, "{:>6} {:>4} {:>4} {:>12}", q.regions, bound.depth, bound.width, wcol);
    if let Some(c) = consistent {
        let _ = writeln!(table, "consistent variation: {}", if c { "holds" } else { "violated" });
    }
    print!("{table}");
    if let Some(p) = common.out.as_deref() {
        write(p, &json(&row)?)?;
    }
    Ok(if pass == Some(false) { EXIT_FAIL } else { 0 })
}

fn parse_policy(s: &str, generators: usize) -> Result<DisturbancePolicy, Failure> {
    match s {
        "greedy" | "worst" => Ok(DisturbancePolicy::GreedyWorstCase),
        "uniform" => Ok(DisturbancePolicy::Uniform),
        _ => {
            let i = s
                .strip_prefix("vertex:")
                .and_then(|i| i.parse::<usize>().ok())
                .ok_or_else(|| Failure::Usage(format!("unknown policy `{s}`")))?;
            if i >= generators {
                return Err(Failure::Usage(format!("generator {i} out of range")));
            }
            Ok(DisturbancePolicy::Vertex(i))
        }
    }
}

fn simulate_cmd(job_path: &Path, steps: usize, policy: &str, x0: &[f64], runs: usize, exact: bool, common: &Common) -> Outcome {
    let job = Job::read(job_path)?;
    let loaded = job.load(false)?;
    let sys = &loaded.system;
    let set = &loaded.spec.set;
    let policy = parse_policy(policy, sys.generators())?;
    let n = sys.state_dim();
    let initial: Vec<DVector<f64>> = if !x0.is_empty() {
        if x0.len() != n {
            return Err(Failure::Usage(format!("--x0 needs {n} entries")));
        }
        vec![DVector::from_column_slice(x0); runs.max(1)]
    } else {
        let (lo, hi) = set.bounding_box()?;
        let mut rng = ChaCha8Rng::seed_from_u64(common.seed(Some(&job)));
        (0..runs.max(1))
            .map(|_| loop {
                let x = DVector::from_fn(n, |i, _| rng.random_range(lo[i]..=hi[i]));
                if set.contains(&x, 0.0) {
                    break x;
                }
            })
            .collect()
    };
    let par = parallelism(common.threads);
    let seed = common.seed(Some(&job));
    let ctrl = &loaded.controller;
    let net = loaded.network.as_ref().filter(|_| !exact);
    let law = |x: &DVector<f64>| match net {
        Some(nn) => nn.forward(x),
        None => ctrl.eval(x),
    };
    let trajs = simulate_batch(sys, set, &law, &initial, steps, policy, seed, par)?;
    let m = sys.input_dim();
    let g = sys.generators();
    let mut csv = String::from("run,k");
    for i in 0..n {
        let _ = write!(csv, ",x{i}");
    }
    for i in 0..m {
        let _ = write!(csv, ",u{i}");
    }
    for i in 0..g {
        let _ = write!(csv, ",w{i}");
    }
    csv.push_str(",psi\n");
    let mut escaped = false;
    for (r, t) in trajs.iter().enumerate() {
        escaped |= t.escaped_at.is_some();
        for (k, x) in t.states.iter().enumerate() {
            let _ = write!(csv, "{r},{k}");
            for v in x.iter() {
                let _ = write!(csv, ",{v:e}");
            }
            for i in 0..m {
                let _ = match t.inputs.get(k) {
                    Some(u) => write!(csv, ",{:e}", u[i]),
                    None => write!(csv, ","),
                };
            }
            for i in 0..g {
                let _ = match t.weights.get(k) {
                    Some(w) => write!(csv, ",{:e}", w[i]),
                    None => write!(csv, ","),
                };
            }
            let _ = writeln!(csv, ",{:e}", t.gauges[k]);
        }
    }
    emit(&csv, common.out.as_deref())?;
    if escaped {
        eprintln!("FAIL a trajectory left the set");
        return Ok(EXIT_FAIL);
    }
    Ok(0)
}

fn enumerate_cmd(job_path: &Path, common: &Common) -> Outcome {
    let job = Job::read(job_path)?;
    let loaded = job.load(false)?;
    let part = loaded.controller.partition()?;
    eprintln!("{} regions over {} facets", part.regions.len(), loaded.spec.set.num_facets());
    emit(&json(&PartitionDoc::of(&part))?, common.out.as_deref())?;
    Ok(0)
}
