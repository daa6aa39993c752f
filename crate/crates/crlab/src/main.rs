use clap::{Args, Parser, Subcommand};
use crlab::commands::{run, CliError, Command, Extras};
use crlab::config::{FileConfig, Overrides, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "crlab", version, about = "Numerical verification suite for circle bundles over hyperbolic surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    genus: Option<usize>,
    /// Chern number of the line bundle.
    #[arg(long)]
    m: Option<u32>,
    /// Number of midpoint refinements of the base triangulation.
    #[arg(long = "refine")]
    refine: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Lagrange degree for the first-order operators.
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long = "out")]
    out: Option<PathBuf>,
    /// Write SVG vertex colour maps next to the report.
    #[arg(long)]
    plots: bool,
    /// TOML file with defaults; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the JSON report instead of the summary.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Sub {
    /// Build the mesh and check the area against Gauss-Bonnet.
    Mesh(Common),
    /// Kernel dimensions of P*, dbar on (1,0) and (2,0) sections, and Delta.
    KernelDim(Common),
    /// Closed-form checks of the disk model.
    VerifyModel {
        #[command(flatten)]
        common: Common,
        /// Add eps |z|^4 to log h.
        #[arg(long, default_value_t = 0.0)]
        perturb: f64,
    },
    /// Newton solves of the reduced Yamabe equation from perturbed starts.
    Yamabe {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0.3)]
        amplitude: f64,
    },
    /// Orthogonal splitting of random deformation tensors.
    Split {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        cases: usize,
    },
    /// Round trips of the exponential chart.
    Sigma {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
    /// All of the above in one report.
    Report(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut extras = Extras::default();
    let (cmd, common) = match cli.command {
        Sub::Mesh(c) => (Command::Mesh, c),
        Sub::KernelDim(c) => (Command::KernelDim, c),
        Sub::VerifyModel { common, perturb } => {
            extras.perturb = perturb;
            (Command::VerifyModel, common)
        }
        Sub::Yamabe { common, amplitude } => {
            extras.amplitude = amplitude;
            (Command::Yamabe, common)
        }
        Sub::Split { common, cases } => {
            extras.cases = cases;
            (Command::Split, common)
        }
        Sub::Sigma { common, cases } => {
            extras.sigma_cases = cases;
            (Command::Sigma, common)
        }
        Sub::Report(c) => (Command::Report, c),
    };
    match execute(cmd, &common, &mut extras) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("crlab {}: {e}", cmd.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cmd: Command, c: &Common, extras: &mut Extras) -> Result<i32, CliError> {
    let file = match &c.config {
        Some(p) => FileConfig::load(p).map_err(CliError::Usage)?,
        None => FileConfig::default(),
    };
    extras.fixed_refinement = c.refine.is_some() || file.refinement.is_some();
    let flags = Overrides { genus: c.genus, m: c.m, refinement: c.refine, seed: c.seed, degree: c.degree, output_dir: c.out.clone(), plots: c.plots };
    let cfg = RunConfig::resolve(file, flags, cmd.default_refinement()).map_err(CliError::Usage)?;
    let rep = run(cmd, &cfg, extras)?;
    rep.write(&cfg.output_dir).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", cfg.output_dir.display())))?;
    if c.json {
        println!("{}", rep.to_json());
    } else {
        print!("{}", rep.summary());
    }
    Ok(rep.exit_code())
}
