//! Command-line front end: `gen`, `solve`, `rate`, `compare`.
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 for
//! numerical failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netdual::harness::config::{parse_settings, Setting};
use netdual::harness::{compare, fit_rate, iterations_to, run_experiment, ExperimentConfig};
use netdual::network::Topology;
use netdual::problem::ProblemInstance;
use netdual::trace::SolverTrace;
use netdual::Error;

#[derive(Parser)]
#[command(name = "netdual", version, about = "Dual accelerated methods for decentralized entropic regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance (and optionally a topology file).
    Gen(GenArgs),
    /// Run one solver and write trace.csv and summary.txt.
    Solve(RunArgs),
    /// Fit the log-log convergence slope of a trace column.
    Rate(RateArgs),
    /// Run every applicable solver with the same budget and print a table.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Tolerance for the rounds-to-tolerance column.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Instance output file.
    #[arg(long)]
    out: PathBuf,
    /// Also write this topology spec (e.g. "ring 4") to --topology-out.
    #[arg(long, requires = "topology_out")]
    topology: Option<String>,
    #[arg(long)]
    topology_out: Option<PathBuf>,
}

/// Config file plus per-field overrides; flags win over the file.
#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    instance: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    scale: Option<String>,
    #[arg(long)]
    topology: Option<String>,
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long)]
    lipschitz: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    ball: Option<String>,
    #[arg(long)]
    target_eps: Option<String>,
    #[arg(long)]
    target_gap: Option<String>,
    #[arg(long)]
    record_every: Option<String>,
    #[arg(long)]
    wall_clock: Option<String>,
    #[arg(long)]
    step: Option<String>,
    #[arg(long)]
    step_rule: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    /// Output directory.
    #[arg(long)]
    output: Option<String>,
}

impl RunArgs {
    fn config(&self) -> netdual::Result<ExperimentConfig> {
        let mut settings: Vec<Setting> = Vec::new();
        let mut base_dir = None;
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            settings = parse_settings(&text)?;
            base_dir = path.parent().map(|p| p.to_path_buf());
        }
        let flags = [
            ("instance", &self.instance),
            ("seed", &self.seed),
            ("m", &self.m),
            ("n", &self.n),
            ("d", &self.d),
            ("p", &self.p),
            ("theta", &self.theta),
            ("scale", &self.scale),
            ("topology", &self.topology),
            ("solver", &self.solver),
            ("max_iter", &self.max_iter),
            ("lipschitz", &self.lipschitz),
            ("mu", &self.mu),
            ("nu", &self.nu),
            ("ball", &self.ball),
            ("target_eps", &self.target_eps),
            ("target_gap", &self.target_gap),
            ("record_every", &self.record_every),
            ("wall_clock", &self.wall_clock),
            ("step", &self.step),
            ("step_rule", &self.step_rule),
            ("rho", &self.rho),
            ("output", &self.output),
        ];
        let mut overridden = Vec::new();
        for (key, value) in flags {
            if let Some(v) = value {
                settings.retain(|s| s.key != key);
                settings.push(Setting { line: 0, key: key.to_string(), value: v.clone() });
                overridden.push(key);
            }
        }
        let mut cfg = ExperimentConfig::from_settings(settings)?;
        // Paths from the file are relative to it; paths from flags to the cwd.
        if let Some(dir) = base_dir {
            let keep = cfg.clone();
            cfg.resolve_relative(&dir);
            if overridden.contains(&"instance") {
                cfg.instance = keep.instance;
            }
            if overridden.contains(&"topology") {
                cfg.topology = keep.topology;
            }
            if overridden.contains(&"output") {
                cfg.output = keep.output;
            }
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RateArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, default_value = "dual_obj")]
    column: String,
    /// Optimal value subtracted from the column (use 0 for `gap`).
    #[arg(long)]
    fstar: f64,
    #[arg(long, default_value_t = 10)]
    from: u64,
    #[arg(long, default_value_t = u64::MAX)]
    to: u64,
    /// Also report the first iteration with error at most this value.
    #[arg(long)]
    eps: Vec<f64>,
}

fn run(cli: Cli) -> netdual::Result<()> {
    match cli.command {
        Command::Gen(a) => {
            let inst = ProblemInstance::generate(a.seed, a.m, a.n, a.d, a.p, a.theta, a.scale)
                .map_err(|e| Error::Config(e.to_string()))?;
            inst.save(&a.out)?;
            println!("wrote {}", a.out.display());
            if let (Some(spec), Some(out)) = (a.topology, a.topology_out) {
                let topo = Topology::from_spec(&spec).map_err(|e| Error::Config(e.to_string()))?;
                topo.save(&out)?;
                println!("wrote {}", out.display());
            }
        }
        Command::Solve(a) => {
            let cfg = a.config()?;
            let outcome = run_experiment(&cfg)?;
            print!("{}", outcome.summary.to_text());
            if let Some(dir) = &cfg.output {
                outcome.write(dir)?;
                eprintln!("wrote {}", dir.display());
            }
        }
        Command::Rate(a) => {
            let trace = SolverTrace::load(&a.trace)?;
            let rep = fit_rate(&trace, &a.column, a.fstar, (a.from, a.to))?;
            println!("column = {}", a.column);
            println!("slope = {}", rep.slope);
            println!("intercept = {}", rep.intercept);
            println!("r_squared = {}", rep.r_squared);
            println!("window = {}..{}", rep.window.0, rep.window.1);
            println!("points = {}", rep.points);
            println!("truncated = {}", rep.truncated);
            for eps in a.eps {
                match iterations_to(&trace, &a.column, a.fstar, eps)? {
                    Some(k) => println!("iterations_to {eps:e} = {k}"),
                    None => println!("iterations_to {eps:e} = not reached"),
                }
            }
        }
        Command::Compare { run, tol } => {
            let cfg = run.config()?;
            let report = compare(&cfg, tol)?;
            print!("{}", report.to_table());
        }
    }
    Ok(())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Numeric(_)
        | Error::BisectionCap(_)
        | Error::DualInfeasible(_)
        | Error::NoPositiveEigenvalue
        | Error::NotInSimplex(_)
        | Error::Prox(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("netdual: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
