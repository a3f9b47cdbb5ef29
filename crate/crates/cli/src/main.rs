//! `fbmexit`: sampling, exit-probability ladders, exponent fits and the
//! variational rate constant from the command line.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fbmexit_core::parallel::Workers;
use fbmexit_core::smalldev::SmallDevProcess;

use config::{Domain, LadderMc, RunConfig, SampleMethod};

/// Exit codes: 0 success, 1 computation failure, 2 usage or config error.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Compute(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Compute(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Compute(m) => m,
        }
    }
}

impl From<fbmexit_core::Error> for CliError {
    fn from(e: fbmexit_core::Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Compute(e.to_string())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ErrorFormat {
    Text,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "fbmexit", version, about = "First-exit problems for fractional Brownian motion")]
struct Cli {
    /// Worker threads; results do not depend on this
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Config file: a JSON config or any output of an earlier run
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// How errors are reported on stderr
    #[arg(long, global = true, value_enum, default_value_t = ErrorFormat::Text)]
    error_format: ErrorFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample FBM paths to a binary dump and optional CSV
    Sample(SampleArgs),
    /// Survival probabilities over a ladder of horizons
    Exitprob(LadderArgs),
    /// Stretched-exponential exponent β for pH > H̃
    Beta(LadderArgs),
    /// Polynomial decay exponent γ (cones and pH ≤ H̃)
    Gamma(GammaArgs),
    /// One-sided persistence exponent of a single FBM
    Persistence(PersistenceArgs),
    /// Small-deviation constant κ_{H,d} from a ladder of radii
    Smalldev(SmalldevArgs),
    /// Rate constant κ from the discretized variational problem
    Solve(SolveArgs),
    /// Compare the fitted β̂ and the κ̂(T) trend against theory and the solver
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long)]
    hurst: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    method: Option<SampleMethod>,
    /// Binary dump; the config goes to `<out>.config.json`
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV export; with several paths, `_0000`, `_0001`, … is appended to the stem
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DomainArgs {
    /// Hurst index H of the lateral coordinates
    #[arg(long)]
    hurst: Option<f64>,
    /// Hurst index H̃ of the axial coordinate [default: H]
    #[arg(long)]
    hurst_tilde: Option<f64>,
    /// Lateral dimension d
    #[arg(long)]
    dim: Option<usize>,
    /// Shape exponent p of ‖x‖^p ≤ K(a + y)
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    /// Width K
    #[arg(long)]
    k: Option<f64>,
}

impl DomainArgs {
    fn apply(&self, d: &mut Domain) {
        set(&mut d.hurst, self.hurst);
        if self.hurst_tilde.is_some() {
            d.hurst_tilde = self.hurst_tilde;
        }
        set(&mut d.dim, self.dim);
        set(&mut d.p, self.p);
        set(&mut d.a, self.a);
        set(&mut d.k, self.k);
    }
}

#[derive(Args, Debug)]
struct McArgs {
    /// Comma-separated horizons T
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<f64>>,
    #[arg(long)]
    steps_per_unit: Option<f64>,
    #[arg(long)]
    paths: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

impl McArgs {
    fn apply(&self, mc: &mut LadderMc) {
        set(&mut mc.horizons, self.horizons.clone());
        set(&mut mc.steps_per_unit, self.steps_per_unit);
        set(&mut mc.paths, self.paths);
        set(&mut mc.seed, self.seed);
    }
}

#[derive(Args, Debug)]
struct OutArgs {
    /// JSON report; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Ladder CSV
    #[arg(long)]
    ladder_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LadderArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[command(flatten)]
    mc: McArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct GammaArgs {
    #[command(flatten)]
    ladder: LadderArgs,
    /// Fit a power law even in the stretched-exponential regime
    #[arg(long)]
    override_regime: bool,
}

#[derive(Args, Debug)]
struct PersistenceArgs {
    #[arg(long)]
    hurst: Option<f64>,
    /// Barrier at −a
    #[arg(long)]
    a: Option<f64>,
    #[command(flatten)]
    mc: McArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct SmalldevArgs {
    #[arg(long)]
    hurst: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Comma-separated, strictly decreasing radii
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    paths: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    process: Option<ProcessArg>,
    /// Constants file for `solve --constants`
    #[arg(long)]
    constants_out: Option<PathBuf>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProcessArg {
    Fbm,
    RiemannLiouville,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Small-deviation constant κ_{H,d}
    #[arg(long)]
    kappa_hd: Option<f64>,
    /// Constants file written by `smalldev`
    #[arg(long)]
    constants: Option<PathBuf>,
    /// Grid size of the discretized problem
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Skip the n/4, n/2 solves and report the raw discrete value
    #[arg(long)]
    no_refine: bool,
    /// JSON solution; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// The minimizer h* as CSV
    #[arg(long)]
    h_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    domain: DomainArgs,
    #[command(flatten)]
    mc: McArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Allowed |β̂ − β|
    #[arg(long)]
    beta_tol: Option<f64>,
    /// Report of an earlier `beta` run
    #[arg(long)]
    beta_report: Option<PathBuf>,
    /// Output of an earlier `solve` run
    #[arg(long)]
    solution: Option<PathBuf>,
    /// JSON report; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

/// Config after layering defaults, the config file, `FBMEXIT_SEED` and flags.
fn resolve(command: &Command, file: Option<&PathBuf>) -> Result<RunConfig, CliError> {
    let name = match command {
        Command::Sample(_) => "sample",
        Command::Exitprob(_) => "exitprob",
        Command::Beta(_) => "beta",
        Command::Gamma(_) => "gamma",
        Command::Persistence(_) => "persistence",
        Command::Smalldev(_) => "smalldev",
        Command::Solve(_) => "solve",
        Command::Verify(_) => "verify",
    };
    let mut cfg = match file {
        Some(path) => {
            let cfg = config::load(path)?;
            if cfg.name() != name {
                return Err(CliError::Usage(format!(
                    "{} holds a `{}` config, not `{name}`",
                    path.display(),
                    cfg.name()
                )));
            }
            cfg
        }
        None => RunConfig::default_for(name).expect("every subcommand has defaults"),
    };
    if let (Some(seed), Some(slot)) = (config::env_seed()?, cfg.seed_mut()) {
        *slot = seed;
    }
    match (command, &mut cfg) {
        (Command::Sample(a), RunConfig::Sample(c)) => {
            set(&mut c.hurst, a.hurst);
            set(&mut c.dim, a.dim);
            set(&mut c.steps, a.steps);
            set(&mut c.horizon, a.horizon);
            set(&mut c.paths, a.paths);
            set(&mut c.seed, a.seed);
            set(&mut c.method, a.method);
        }
        (Command::Exitprob(a), RunConfig::Exitprob(c)) => {
            a.domain.apply(&mut c.domain);
            a.mc.apply(&mut c.mc);
        }
        (Command::Beta(a), RunConfig::Beta(c)) => {
            a.domain.apply(&mut c.domain);
            a.mc.apply(&mut c.mc);
        }
        (Command::Gamma(a), RunConfig::Gamma(c)) => {
            a.ladder.domain.apply(&mut c.domain);
            a.ladder.mc.apply(&mut c.mc);
            c.override_regime |= a.override_regime;
        }
        (Command::Persistence(a), RunConfig::Persistence(c)) => {
            set(&mut c.hurst, a.hurst);
            set(&mut c.a, a.a);
            a.mc.apply(&mut c.mc);
        }
        (Command::Smalldev(a), RunConfig::Smalldev(c)) => {
            set(&mut c.hurst, a.hurst);
            set(&mut c.dim, a.dim);
            set(&mut c.epsilons, a.epsilons.clone());
            set(&mut c.steps, a.steps);
            set(&mut c.paths, a.paths);
            set(&mut c.seed, a.seed);
            set(
                &mut c.process,
                a.process.map(|p| match p {
                    ProcessArg::Fbm => SmallDevProcess::Fbm,
                    ProcessArg::RiemannLiouville => SmallDevProcess::RiemannLiouville,
                }),
            );
        }
        (Command::Solve(a), RunConfig::Solve(c)) => {
            a.domain.apply(&mut c.domain);
            if a.solver.kappa_hd.is_some() {
                c.kappa_hd = a.solver.kappa_hd;
            }
            if a.solver.constants.is_some() {
                c.constants = a.solver.constants.clone();
            }
            set(&mut c.n, a.solver.n);
            if a.no_refine {
                c.refine = false;
            }
        }
        (Command::Verify(a), RunConfig::Verify(c)) => {
            a.domain.apply(&mut c.domain);
            a.mc.apply(&mut c.mc);
            if a.solver.kappa_hd.is_some() {
                c.kappa_hd = a.solver.kappa_hd;
            }
            if a.solver.constants.is_some() {
                c.constants = a.solver.constants.clone();
            }
            set(&mut c.n, a.solver.n);
            set(&mut c.beta_tol, a.beta_tol);
            if a.beta_report.is_some() {
                c.beta_report = a.beta_report.clone();
            }
            if a.solution.is_some() {
                c.solution = a.solution.clone();
            }
        }
        _ => unreachable!("config variant matches the subcommand"),
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let workers = match cli.workers {
        Some(n) => Workers::new(n)?,
        None => Workers::new(std::thread::available_parallelism().map_or(1, |n| n.get()))?,
    };
    let cfg = resolve(&cli.command, cli.config.as_ref())?;
    match (&cli.command, &cfg) {
        (Command::Sample(a), RunConfig::Sample(c)) => {
            commands::sample(&cfg, c, workers, a.out.as_deref(), a.csv.as_deref())
        }
        (Command::Exitprob(a), RunConfig::Exitprob(c)) => commands::exitprob(&cfg, c, workers, &a.out.paths()),
        (Command::Beta(a), RunConfig::Beta(c)) => commands::beta(&cfg, c, workers, &a.out.paths()),
        (Command::Gamma(a), RunConfig::Gamma(c)) => commands::gamma(&cfg, c, workers, &a.ladder.out.paths()),
        (Command::Persistence(a), RunConfig::Persistence(c)) => {
            commands::persistence(&cfg, c, workers, &a.out.paths())
        }
        (Command::Smalldev(a), RunConfig::Smalldev(c)) => {
            commands::smalldev(&cfg, c, workers, &a.out.paths(), a.constants_out.as_deref())
        }
        (Command::Solve(a), RunConfig::Solve(c)) => commands::solve(&cfg, c, a.out.as_deref(), a.h_csv.as_deref()),
        (Command::Verify(a), RunConfig::Verify(c)) => commands::verify(&cfg, c, workers, a.out.as_deref()),
        _ => unreachable!("config variant matches the subcommand"),
    }
}

impl OutArgs {
    fn paths(&self) -> commands::Outputs<'_> {
        commands::Outputs {
            json: self.out.as_deref(),
            ladder_csv: self.ladder_csv.as_deref(),
        }
    }
}

fn report_error(e: &CliError, format: ErrorFormat) {
    match format {
        ErrorFormat::Text => eprintln!("fbmexit: {}", e.message()),
        ErrorFormat::Json => {
            let kind = match e {
                CliError::Usage(_) => "usage",
                CliError::Compute(_) => "computation",
            };
            let doc = serde_json::json!({"error": {"kind": kind, "code": e.code(), "message": e.message()}});
            eprintln!("{doc}");
        }
    }
}

/// `--error-format json` from the raw arguments, for failures before parsing completes.
fn requested_format(args: &[String]) -> ErrorFormat {
    let json = args
        .windows(2)
        .any(|w| w[0] == "--error-format" && w[1] == "json")
        || args.iter().any(|a| a == "--error-format=json");
    if json {
        ErrorFormat::Json
    } else {
        ErrorFormat::Text
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            match requested_format(&args) {
                ErrorFormat::Text => {
                    let _ = e.print();
                }
                fmt => report_error(&CliError::Usage(e.render().to_string().trim().to_string()), fmt),
            }
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e, cli.error_format);
            ExitCode::from(e.code())
        }
    }
}
