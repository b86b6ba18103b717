use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stochtrop::harness::{self, Command, ExperimentConfig, Overrides};
use stochtrop::layer_select::SelectMethod;
use stochtrop::Error;

/// Stochastic ReLU networks in max-plus form: simulation, concentration
/// checks, classification audits and layer-count selection.
#[derive(Parser, Debug)]
#[command(name = "stochtrop", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug)]
struct Global {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Artifact directory.
    #[arg(long, global = true, env = "STOCHTROP_OUT")]
    out: Option<PathBuf>,
    /// Print errors as one JSON object on stderr.
    #[arg(long, global = true)]
    json_errors: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Simulate network runs and write F, G, H, ν per layer.
    Simulate,
    /// Check tail bounds for every layer.
    Bounds,
    /// Audit expected-score classification against fresh draws.
    Classify,
    /// Choose the number of layers by optimal stopping.
    SelectLayers {
        /// Horizon for the default log L/√L reward, or override of the config's.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// CSV of realized rewards: `layer,gamma` columns or one trajectory per row.
        #[arg(long)]
        gamma_table: Option<PathBuf>,
        /// Polynomial degree of the regression basis.
        #[arg(long)]
        basis_degree: Option<usize>,
    },
    /// Count linear regions of tropical polynomials or network outputs.
    Regions {
        /// Polynomial as JSON, e.g. `{"d":2,"monomials":[{"c":0,"alpha":[1,0]}]}`.
        #[arg(long)]
        poly: Option<String>,
    },
    /// Martingale grade checks and tail bounds.
    MgaleCheck,
    /// Summarize the artifacts in the output directory.
    Report,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Exact,
    Lsmc,
    Deterministic,
}

impl From<MethodArg> for SelectMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Exact => SelectMethod::Exact,
            MethodArg::Lsmc => SelectMethod::Lsmc,
            MethodArg::Deterministic => SelectMethod::Deterministic,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json_errors = cli.global.json_errors;
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if json_errors {
                let obj = serde_json::json!({
                    "error": e.kind(),
                    "message": e.to_string(),
                    "path": e.field_path(),
                });
                eprintln!("{obj}");
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let g = cli.global;
    let config = match &g.config {
        Some(path) => harness::load_config(path)?,
        None => ExperimentConfig::default(),
    };
    let mut overrides = Overrides {
        seed: g.seed,
        workers: g.workers,
        out: g.out,
        ..Overrides::default()
    };
    let command = match cli.command {
        Cmd::Simulate => Command::Simulate,
        Cmd::Bounds => Command::Bounds,
        Cmd::Classify => Command::Classify,
        Cmd::SelectLayers {
            horizon,
            method,
            gamma_table,
            basis_degree,
        } => {
            overrides.horizon = horizon;
            overrides.method = method.map(Into::into);
            overrides.gamma_table = gamma_table;
            overrides.basis_degree = basis_degree;
            Command::SelectLayers
        }
        Cmd::Regions { poly } => {
            overrides.poly = poly;
            Command::Regions
        }
        Cmd::MgaleCheck => Command::MgaleCheck,
        Cmd::Report => {
            let dir = overrides
                .out
                .or(config.out)
                .unwrap_or_else(|| PathBuf::from(harness::DEFAULT_OUT_DIR));
            let report = harness::emit_report(&dir)?;
            for gap in &report.gaps {
                eprintln!("gap: {gap}");
            }
            println!("{}", dir.join(harness::REPORT_FILE).display());
            return Ok(report.exit_code() as u8);
        }
    };
    let outcome = harness::run_subcommand(command, &config, &overrides)?;
    for file in &outcome.manifest.outputs {
        println!("{}", outcome.out_dir.join(&file.file).display());
    }
    if outcome.violations > 0 {
        eprintln!("{} violated verdicts", outcome.violations);
    }
    Ok(outcome.exit_code() as u8)
}
