use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use nnoid::cli::{self, json, RunConfig, EXIT_CONFIG, EXIT_OK};
use nnoid::error::{Error, Result};
use nnoid::moebius::GroupLabel;
use nnoid::monodromy::OdeOptions;
use nnoid::potentials::{ResidueConvention, WeightTriple};

#[derive(Parser)]
#[command(name = "nnoid", version, about = "Symmetric CMC n-noids from Fuchsian potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GroupArgs {
    /// cyclic, dihedral, tetrahedral, octahedral or icosahedral
    #[arg(long)]
    group: String,
    #[arg(long)]
    n: Option<usize>,
}

impl GroupArgs {
    fn label(&self) -> Result<GroupLabel> {
        GroupLabel::parse(&self.group, self.n)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the group order and multiplicity table.
    Groups {
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long)]
        json: bool,
    },
    /// Emit the normalized invariant map as JSON.
    Invariant {
        #[command(flatten)]
        group: GroupArgs,
    },
    /// Emit Q, alpha and verification residuals as JSON.
    Potential {
        #[command(flatten)]
        group: GroupArgs,
        /// w0,w1,wI
        #[arg(long, value_parser = parse_weights, allow_hyphen_values = true)]
        weights: WeightTriple,
        #[arg(long, value_parser = parse_convention, default_value = "scaled")]
        convention: ResidueConvention,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Scan weights for unitarizability.
    Weights {
        #[command(flatten)]
        group: GroupArgs,
        /// box or cyclic-line
        #[arg(long)]
        scan: String,
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        #[arg(long, default_value_t = 64)]
        lambda_samples: usize,
        #[arg(long, value_parser = parse_convention, default_value = "scaled")]
        convention: ResidueConvention,
    },
    /// Integrate the downstairs monodromy on a λ grid.
    Monodromy {
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Compute the pointwise unitarizer.
    Unitarize {
        #[command(flatten)]
        stage: StageArgs,
    },
    /// Run the full pipeline and write the mesh and report.
    Surface(SurfaceArgs),
    /// Run the pipeline from a JSON configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the invariant and property suite.
    Check {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct SurfaceArgs {
    #[arg(long)]
    group: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_parser = parse_weights, allow_hyphen_values = true)]
    weights: Option<WeightTriple>,
    #[arg(long)]
    grid_radial: Option<usize>,
    #[arg(long)]
    grid_angular: Option<usize>,
    #[arg(long)]
    epsilon_theta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// JSON run configuration; the other flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct StageArgs {
    #[command(flatten)]
    group: GroupArgs,
    #[arg(long, value_parser = parse_weights, allow_hyphen_values = true)]
    weights: WeightTriple,
    #[arg(long, default_value_t = 64)]
    lambda_samples: usize,
    #[arg(long, value_parser = parse_convention, default_value = "scaled")]
    convention: ResidueConvention,
    #[arg(long, default_value_t = 1e-10)]
    ode_tol: f64,
}

impl StageArgs {
    fn ode(&self) -> OdeOptions {
        OdeOptions {
            tol: self.ode_tol,
            ..OdeOptions::default()
        }
    }
}

fn parse_weights(s: &str) -> std::result::Result<WeightTriple, String> {
    let w: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad weight '{p}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match w[..] {
        [a, b, c] => Ok(WeightTriple::new(a, b, c)),
        _ => Err(format!("expected three comma-separated weights, got {}", w.len())),
    }
}

fn parse_convention(s: &str) -> std::result::Result<ResidueConvention, String> {
    s.parse().map_err(|_| format!("unknown convention '{s}' (paper or scaled)"))
}

fn print(value: &Value) -> Result<()> {
    let text = json::to_string(value).map_err(|e| Error::Numerical(e.to_string()))?;
    print!("{text}");
    Ok(())
}

fn groups_text(rows: &Value) -> String {
    let mut out = format!(
        "{:<14}{:>7}{:>8}  {:<14}{}\n",
        "group", "order", "degree", "multiplicity", "orbit sizes"
    );
    for r in rows.as_array().into_iter().flatten() {
        let list = |v: &Value| {
            v.as_array()
                .map(|a| a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
                .unwrap_or_default()
        };
        out += &format!(
            "{:<14}{:>7}{:>8}  {:<14}{}\n",
            r["group"].as_str().unwrap_or(""),
            r["order"].to_string(),
            r["degree"].to_string(),
            list(&r["multiplicities"]),
            list(&r["cardinalities"]),
        );
    }
    out
}

fn surface_config(args: SurfaceArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(g) = args.group {
        cfg.group = g;
        cfg.n = args.n;
    } else if args.n.is_some() {
        cfg.n = args.n;
    }
    if let Some(w) = args.weights {
        cfg.weights = w.as_array();
    }
    if let Some(r) = args.grid_radial {
        cfg.grid.radial = r;
    }
    if let Some(a) = args.grid_angular {
        cfg.grid.angular = a;
    }
    if let Some(e) = args.epsilon_theta {
        cfg.epsilon_theta = e;
    }
    if args.out.is_some() {
        cfg.out.mesh = args.out;
    }
    if args.report.is_some() {
        cfg.out.report = args.report;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_config(cfg: &RunConfig) -> i32 {
    let outcome = cli::run(cfg);
    if cfg.out.report.is_none() {
        if let Err(e) = print(&outcome.report) {
            eprintln!("error: {e}");
        }
    }
    if let Some(e) = &outcome.error {
        eprintln!("error: {e}");
    }
    outcome.exit_code()
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Groups { n_max, json } => {
            let rows = cli::groups_table(n_max)?;
            if json {
                print(&rows)?;
            } else {
                print!("{}", groups_text(&rows));
            }
        }
        Command::Invariant { group } => print(&cli::invariant_report(group.label()?)?)?,
        Command::Potential {
            group,
            weights,
            convention,
            seed,
        } => print(&cli::potential_report(group.label()?, weights, convention, seed)?)?,
        Command::Weights {
            group,
            scan,
            lo,
            hi,
            step,
            lambda_samples,
            convention,
        } => print(&cli::weights_report(
            group.label()?,
            &scan,
            convention,
            lambda_samples,
            (lo, hi, step),
        )?)?,
        Command::Monodromy { stage } => print(&cli::monodromy_report(
            stage.group.label()?,
            stage.weights,
            stage.convention,
            stage.lambda_samples,
            &stage.ode(),
        )?)?,
        Command::Unitarize { stage } => print(&cli::unitarize_report(
            stage.group.label()?,
            stage.weights,
            stage.convention,
            stage.lambda_samples,
            &stage.ode(),
        )?)?,
        Command::Surface(args) => return Ok(run_config(&surface_config(args)?)),
        Command::Run { config } => return Ok(run_config(&RunConfig::load(&config)?)),
        Command::Check { seed } => {
            let results = cli::check::run_checks(seed)?;
            let failed = results.iter().filter(|r| !r.passed).count();
            print(&serde_json::to_value(&results).map_err(|e| Error::Numerical(e.to_string()))?)?;
            if failed > 0 {
                eprintln!("{failed} check(s) failed");
                return Ok(cli::EXIT_NUMERICAL);
            }
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let args = match Cli::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let code = match execute(args.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            cli::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
