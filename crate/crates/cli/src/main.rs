mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use asmlab::{PassRule, Tolerances};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "asmlab", version, about = "Finite-dimensional quantum measurement toolkit")]
struct Cli {
    #[command(flatten)]
    tol: TolArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a POVM file satisfies the measure axioms.
    Validate {
        file: PathBuf,
    },
    /// Sweep a family over an hbar net and apply the pass rule.
    Sweep(SweepArgs),
    /// Spin-1/2 POVMs and Bloch vectors.
    Spin {
        #[command(subcommand)]
        command: SpinCommand,
    },
    /// CHSH value for the Roy-Kar family at one hbar.
    Bell {
        #[arg(long)]
        hbar: f64,
        /// Measurement axis as `x,y,z`.
        #[arg(long, allow_hyphen_values = true, default_value = "0,0,1")]
        n: String,
    },
    /// Naimark dilation of a normalized POVM.
    Dilate {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a function against a POVM.
    Quantize {
        file: PathBuf,
        /// Function JSON, or `@path` to read it from a file.
        #[arg(long)]
        function: String,
    },
}

#[derive(Subcommand, Debug)]
enum SpinCommand {
    /// Recover the Bloch vector and sharpness of a two-outcome POVM file.
    Classify { file: PathBuf },
    /// Write the spin POVM of a Bloch vector.
    Build {
        /// Components as `x,y,z`.
        #[arg(allow_hyphen_values = true)]
        bloch: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Asm,
    Morphism,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Family JSON file.
    family: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Asm)]
    mode: Mode,
    #[arg(long, default_value_t = 1.0)]
    net_start: f64,
    #[arg(long, default_value_t = 0.75)]
    net_ratio: f64,
    #[arg(long, default_value_t = 40)]
    net_count: usize,
    #[arg(long, default_value_t = PassRule::default().tail)]
    rule_tail: usize,
    #[arg(long, default_value_t = PassRule::default().slack)]
    rule_slack: f64,
    #[arg(long, default_value_t = PassRule::default().floor)]
    rule_floor: f64,
    #[arg(long, default_value_t = PassRule::default().abs_floor)]
    rule_abs_floor: f64,
    /// Random smooth test functions added to the morphism bank.
    #[arg(long, default_value_t = 4)]
    smooth: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination for the per-point defects.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TolArgs {
    #[arg(long, global = true)]
    tol_hermiticity: Option<f64>,
    #[arg(long, global = true)]
    tol_psd: Option<f64>,
    #[arg(long, global = true)]
    tol_trace: Option<f64>,
    #[arg(long, global = true)]
    tol_normalization: Option<f64>,
    #[arg(long, global = true)]
    tol_projectivity: Option<f64>,
    #[arg(long, global = true)]
    tol_cluster: Option<f64>,
    #[arg(long, global = true)]
    tol_support: Option<f64>,
    #[arg(long, global = true)]
    tol_jacobi_threshold: Option<f64>,
    #[arg(long, global = true)]
    tol_max_sweeps: Option<usize>,
    #[arg(long, global = true)]
    tol_ball: Option<f64>,
    #[arg(long, global = true)]
    tol_stochastic: Option<f64>,
    #[arg(long, global = true)]
    tol_spin: Option<f64>,
}

impl TolArgs {
    fn resolve(&self) -> Result<Tolerances, String> {
        let mut t = Tolerances::from_env()?;
        let slots = [
            (self.tol_hermiticity, &mut t.hermiticity, "hermiticity"),
            (self.tol_psd, &mut t.psd, "psd"),
            (self.tol_trace, &mut t.trace, "trace"),
            (self.tol_normalization, &mut t.normalization, "normalization"),
            (self.tol_projectivity, &mut t.projectivity, "projectivity"),
            (self.tol_cluster, &mut t.cluster, "cluster"),
            (self.tol_support, &mut t.support, "support"),
            (self.tol_jacobi_threshold, &mut t.jacobi_threshold, "jacobi-threshold"),
            (self.tol_ball, &mut t.ball, "ball"),
            (self.tol_stochastic, &mut t.stochastic, "stochastic"),
            (self.tol_spin, &mut t.spin, "spin"),
        ];
        for (value, slot, name) in slots {
            if let Some(v) = value {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(format!("--tol-{name} must be a nonnegative number, got {v}"));
                }
                *slot = v;
            }
        }
        if let Some(s) = self.tol_max_sweeps {
            t.max_sweeps = s;
        }
        Ok(t)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.tol.resolve().map_err(commands::Failure::Usage).and_then(|tol| run(cli.command, &tol));
    match result {
        Ok(code) => code,
        Err(f) => f.report(),
    }
}

fn run(command: Command, tol: &Tolerances) -> Result<ExitCode, commands::Failure> {
    match command {
        Command::Validate { file } => commands::validate(&file, tol),
        Command::Sweep(args) => commands::sweep(&args, tol),
        Command::Spin { command: SpinCommand::Classify { file } } => commands::spin_classify(&file, tol),
        Command::Spin { command: SpinCommand::Build { bloch, out } } => {
            commands::spin_build(&bloch, out.as_deref(), tol)
        }
        Command::Bell { hbar, n } => commands::bell(hbar, &n),
        Command::Dilate { file, out } => commands::dilate(&file, out.as_deref(), tol),
        Command::Quantize { file, function } => commands::quantize(&file, &function, tol),
    }
}
