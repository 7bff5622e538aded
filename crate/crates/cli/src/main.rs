use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use atomic_arrays_cli::{run, validate, CliError, ExperimentConfig, ExperimentKind, Preset};

#[derive(Parser)]
#[command(name = "atomic-arrays", version, about = "Light scattering and photon correlations of atomic arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML config layered over the preset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: config `output`, else ./out/<kind>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "ci")]
    preset: Preset,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment kind named in the config file (or --kind).
    Run {
        #[arg(long)]
        kind: Option<ExperimentKind>,
    },
    /// Check preconditions and estimate resources without running.
    Validate {
        #[arg(long)]
        kind: Option<ExperimentKind>,
    },
    /// Analytic transmission of infinite single/dual arrays over (Δ, L).
    SpectrumInfinite,
    /// Interlayer shift Δ̃_L and linewidth Γ̃_L versus separation.
    #[command(name = "shift-vs-L")]
    ShiftVsL,
    /// Single-excitation spectrum of a finite array under a Gaussian beam.
    SpectrumFinite,
    /// Second-order correlation g²(τ) of the transmitted light.
    G2,
    /// Two-photon momentum density at the listed times.
    MomentumDensity,
    /// Fit sub- and superradiant mode rates to the decay after switch-off.
    ModesFit,
    /// Group delay along the transmission resonance versus L.
    DelayScan,
    /// Paraxial tail fraction and mode normalization of the beam.
    ParaxialCheck,
}

impl Command {
    fn kind(&self) -> Option<ExperimentKind> {
        Some(match self {
            Command::Run { kind } | Command::Validate { kind } => return *kind,
            Command::SpectrumInfinite => ExperimentKind::SpectrumInfinite,
            Command::ShiftVsL => ExperimentKind::ShiftVsL,
            Command::SpectrumFinite => ExperimentKind::SpectrumFinite,
            Command::G2 => ExperimentKind::G2,
            Command::MomentumDensity => ExperimentKind::MomentumDensity,
            Command::ModesFit => ExperimentKind::ModesFit,
            Command::DelayScan => ExperimentKind::DelayScan,
            Command::ParaxialCheck => ExperimentKind::ParaxialCheck,
        })
    }
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    let mut cfg = ExperimentConfig::from_toml_over(&text, cli.preset, cli.command.kind())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output = Some(o.clone());
    }
    Ok(cfg)
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = load(&cli)?;
    if matches!(cli.command, Command::Validate { .. }) {
        let report = validate(&cfg);
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
        return if report.ok() { Ok(()) } else { Err(CliError::Config(format!("{} issue(s) found", report.issues.len()))) };
    }
    let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("out").join(cfg.kind.name()));
    let result = run(&cfg, &out)?;
    println!("{}", serde_json::to_string_pretty(&result.summary).expect("summary serializes"));
    for a in result.artifacts {
        eprintln!("wrote {}", a.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
