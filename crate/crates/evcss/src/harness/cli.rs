//! Command-line front end. Every experiment subcommand starts from the
//! family defaults, layers on an optional flat `key = value` config file,
//! then applies individual flag overrides, so any run is expressible
//! either declaratively or inline.

use crate::detectors::ThresholdSpec;
use crate::harness::config::{ConfigError, ExperimentConfig, ExperimentKind};
use crate::harness::output::{emit_plot_script, render_csv, write_results};
use crate::harness::run::run_experiment;
use crate::harness::HarnessError;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "evcss",
    version,
    about = "Multi-antenna cyclostationary spectrum sensing experiments",
    after_help = "Results go to --out as CSV (or to stdout without --out). \
                  Set EVCSS_THREADS to cap the worker count."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the analytic eigenvalue-detector threshold for a false-alarm target
    Threshold(ThresholdArgs),
    /// Null-hypothesis statistic sample over frame lengths
    H0Dist(RunArgs),
    /// Fixed-channel detection statistic over frame lengths
    H1Dist(RunArgs),
    /// Receiver operating characteristic over false-alarm targets
    Roc(RunArgs),
    /// Detection probability over SNR, frame length, antennas, or noise correlation
    PdSweep(PdSweepArgs),
    /// Detection with the noise power known only to a ±Δ dB prior
    NoiseUncertainty(RunArgs),
}

#[derive(Args)]
struct ThresholdArgs {
    /// Optional config file supplying pfa and antennas.
    #[arg(long)]
    config: Option<PathBuf>,
    /// False-alarm target.
    #[arg(long)]
    pfa: Option<f64>,
    /// Number of receive antennas.
    #[arg(long)]
    antennas: Option<usize>,
    /// Which cyclic covariance the statistic uses.
    #[arg(long, value_enum, default_value_t = Variant::Conjugate)]
    variant: Variant,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Conjugate,
    NonConjugate,
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Snr,
    N,
    M,
    RhoS,
}

impl Axis {
    fn kind(self) -> ExperimentKind {
        match self {
            Axis::Snr => ExperimentKind::PdVsSnr,
            Axis::N => ExperimentKind::PdVsN,
            Axis::M => ExperimentKind::PdVsM,
            Axis::RhoS => ExperimentKind::SpatialCorr,
        }
    }
}

#[derive(Args)]
struct PdSweepArgs {
    /// Swept parameter; defaults to the config file's experiment, or snr.
    #[arg(long, value_enum)]
    axis: Option<Axis>,
    #[command(flatten)]
    run: RunArgs,
}

/// Flag-level overrides, one per config key. Values go through the same
/// parser as config file lines, so semantics cannot drift between the two.
#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file applied over the experiment defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of receive antennas.
    #[arg(long)]
    antennas: Option<usize>,
    /// Samples per frame.
    #[arg(long)]
    samples: Option<usize>,
    /// Average per-antenna SNR in dB.
    #[arg(long, allow_negative_numbers = true)]
    snr_db: Option<f64>,
    /// Noise-power uncertainty half-width in dB.
    #[arg(long)]
    snr_delta_db: Option<f64>,
    /// Comma-separated sweep grid.
    #[arg(long, allow_hyphen_values = true)]
    sweep: Option<String>,
    /// Monte Carlo trials per sweep point.
    #[arg(long)]
    trials: Option<u64>,
    /// False-alarm target.
    #[arg(long)]
    pfa: Option<f64>,
    /// Channel model: awgn or rayleigh.
    #[arg(long)]
    channel: Option<String>,
    /// Comma-separated real gains for the awgn channel.
    #[arg(long, allow_hyphen_values = true)]
    awgn_gains: Option<String>,
    /// Spatial noise correlation coefficient.
    #[arg(long)]
    rho_s: Option<f64>,
    /// Comma-separated detector subset.
    #[arg(long)]
    detectors: Option<String>,
    /// Carrier frequency in Hz.
    #[arg(long)]
    carrier_hz: Option<f64>,
    /// Symbol period in seconds.
    #[arg(long)]
    symbol_period_s: Option<f64>,
    /// Receiver sampling rate in Hz.
    #[arg(long)]
    sample_rate_hz: Option<f64>,
    /// Draw a random initial carrier phase per trial.
    #[arg(long)]
    random_phase: Option<bool>,
    /// Cyclic frequency of the probed feature in Hz.
    #[arg(long)]
    alpha0_hz: Option<f64>,
    /// Feature lag in samples.
    #[arg(long)]
    tau0: Option<usize>,
    /// Block FFT size of the baseline detectors.
    #[arg(long)]
    fft_size: Option<usize>,
    /// Reference antenna of the equal-gain combiner.
    #[arg(long)]
    reference_antenna: Option<usize>,
    /// Odd spectral smoothing window width in bins.
    #[arg(long)]
    smoothing_bins: Option<usize>,
    /// Master RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path; without it the CSV goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a matplotlib script alongside the CSV (requires an output path).
    #[arg(long)]
    emit_plot: bool,
}

impl RunArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), ConfigError> {
        let mut overrides: Vec<(&str, String)> = Vec::new();
        let mut push = |key: &'static str, value: Option<String>| {
            if let Some(v) = value {
                overrides.push((key, v));
            }
        };
        push("antennas", self.antennas.map(|v| v.to_string()));
        push("samples", self.samples.map(|v| v.to_string()));
        push("snr_db", self.snr_db.map(|v| v.to_string()));
        push("snr_delta_db", self.snr_delta_db.map(|v| v.to_string()));
        push("sweep", self.sweep.clone());
        push("trials", self.trials.map(|v| v.to_string()));
        push("pfa", self.pfa.map(|v| v.to_string()));
        push("channel", self.channel.clone());
        push("awgn_gains", self.awgn_gains.clone());
        push("rho_s", self.rho_s.map(|v| v.to_string()));
        push("detectors", self.detectors.clone());
        push("carrier_hz", self.carrier_hz.map(|v| v.to_string()));
        push(
            "symbol_period_s",
            self.symbol_period_s.map(|v| v.to_string()),
        );
        push(
            "sample_rate_hz",
            self.sample_rate_hz.map(|v| v.to_string()),
        );
        push("random_phase", self.random_phase.map(|v| v.to_string()));
        push("alpha0_hz", self.alpha0_hz.map(|v| v.to_string()));
        push("tau0", self.tau0.map(|v| v.to_string()));
        push("fft_size", self.fft_size.map(|v| v.to_string()));
        push(
            "reference_antenna",
            self.reference_antenna.map(|v| v.to_string()),
        );
        push(
            "smoothing_bins",
            self.smoothing_bins.map(|v| v.to_string()),
        );
        push("seed", self.seed.map(|v| v.to_string()));
        push(
            "out",
            self.out.as_ref().map(|p| p.to_string_lossy().into_owned()),
        );
        for (key, value) in overrides {
            cfg.set(key, &value)?;
        }
        Ok(())
    }
}

/// Parse the argument vector, run the selected command, and report the
/// process exit code: 0 on success, 1 on runtime failure, 2 on a config
/// or usage problem.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let outcome = match &cli.command {
        Command::Threshold(args) => print_threshold(args),
        Command::H0Dist(args) => execute(ExperimentKind::H0Dist, args),
        Command::H1Dist(args) => execute(ExperimentKind::H1Dist, args),
        Command::Roc(args) => execute(ExperimentKind::Roc, args),
        Command::PdSweep(args) => pd_sweep(args),
        Command::NoiseUncertainty(args) => execute(ExperimentKind::NoiseUncertainty, args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn print_threshold(args: &ThresholdArgs) -> Result<(), HarnessError> {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::H0Dist);
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    let pfa = args.pfa.unwrap_or(cfg.pfa_target);
    let antennas = args.antennas.unwrap_or(cfg.num_antennas);
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(ConfigError::Invalid {
            field: "pfa",
            reason: format!("false-alarm target {pfa} is outside (0, 1)"),
        }
        .into());
    }
    if antennas == 0 {
        return Err(ConfigError::Invalid {
            field: "antennas",
            reason: "need at least one antenna".to_string(),
        }
        .into());
    }
    let conjugate = matches!(args.variant, Variant::Conjugate);
    let spec = ThresholdSpec::for_false_alarm_rate(pfa, antennas, conjugate)?;
    println!("{:.4}", spec.gamma);
    Ok(())
}

fn pd_sweep(args: &PdSweepArgs) -> Result<(), HarnessError> {
    let kind = match args.axis {
        Some(axis) => axis.kind(),
        None => match &args.run.config {
            // an axis named by the config file drives the defaults
            Some(path) => {
                let mut probe = ExperimentConfig::defaults(ExperimentKind::PdVsSnr);
                probe.apply_file(path)?;
                match probe.experiment {
                    k @ (ExperimentKind::PdVsSnr
                    | ExperimentKind::PdVsN
                    | ExperimentKind::PdVsM
                    | ExperimentKind::SpatialCorr) => k,
                    other => {
                        return Err(ConfigError::Invalid {
                            field: "experiment",
                            reason: format!(
                                "`{other}` is not a pd-sweep experiment; use its own subcommand"
                            ),
                        }
                        .into())
                    }
                }
            }
            None => ExperimentKind::PdVsSnr,
        },
    };
    execute(kind, &args.run)
}

fn execute(kind: ExperimentKind, args: &RunArgs) -> Result<(), HarnessError> {
    let mut cfg = ExperimentConfig::defaults(kind);
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    args.apply(&mut cfg)?;
    if cfg.experiment != kind {
        return Err(ConfigError::Invalid {
            field: "experiment",
            reason: format!(
                "config file asks for `{}` but the `{}` subcommand was invoked",
                cfg.experiment, kind
            ),
        }
        .into());
    }
    if args.emit_plot && cfg.out.is_none() {
        return Err(ConfigError::Invalid {
            field: "out",
            reason: "--emit-plot needs an output CSV path".to_string(),
        }
        .into());
    }
    cfg.validate()?;

    let rows = run_experiment(&cfg)?;
    match &cfg.out {
        Some(path) => {
            write_results(&rows, path)?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
            if args.emit_plot {
                let script = emit_plot_script(path)?;
                eprintln!("wrote plot script {}", script.display());
            }
        }
        None => print!("{}", render_csv(&rows)),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(line: &[&str]) -> Cli {
        Cli::try_parse_from(line).unwrap()
    }

    #[test]
    fn flags_override_config_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.conf");
        std::fs::write(&path, "trials = 700\nsamples = 512\nseed = 3\n").unwrap();

        let cli = parse(&[
            "evcss",
            "roc",
            "--config",
            path.to_str().unwrap(),
            "--trials",
            "900",
        ]);
        let Command::Roc(args) = &cli.command else {
            panic!("wrong subcommand");
        };
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::Roc);
        cfg.apply_file(args.config.as_ref().unwrap()).unwrap();
        args.apply(&mut cfg).unwrap();
        assert_eq!(cfg.trials, 900);
        assert_eq!(cfg.n_samples, 512);
        assert_eq!(cfg.master_seed, 3);
    }

    #[test]
    fn pd_sweep_axis_selects_the_experiment() {
        for (axis, kind) in [
            ("snr", ExperimentKind::PdVsSnr),
            ("n", ExperimentKind::PdVsN),
            ("m", ExperimentKind::PdVsM),
            ("rho-s", ExperimentKind::SpatialCorr),
        ] {
            let cli = parse(&["evcss", "pd-sweep", "--axis", axis]);
            let Command::PdSweep(args) = &cli.command else {
                panic!("wrong subcommand");
            };
            assert_eq!(args.axis.unwrap().kind(), kind);
        }
    }

    #[test]
    fn negative_values_parse_without_the_equals_form() {
        let cli = parse(&[
            "evcss", "pd-sweep", "--axis", "snr", "--sweep", "-15,-10,-5", "--snr-db", "-12",
        ]);
        let Command::PdSweep(args) = &cli.command else {
            panic!("wrong subcommand");
        };
        assert_eq!(args.run.sweep.as_deref(), Some("-15,-10,-5"));
        assert_eq!(args.run.snr_db, Some(-12.0));
    }

    #[test]
    fn emit_plot_without_out_is_a_config_error() {
        let code = cli_main(["evcss", "roc", "--emit-plot", "--trials", "100"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn mismatched_config_experiment_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.conf");
        std::fs::write(&path, "experiment = roc\n").unwrap();
        let code = cli_main(["evcss", "h0-dist", "--config", path.to_str().unwrap()]);
        assert_eq!(code, 2);
    }

    #[test]
    fn threshold_flags_are_validated() {
        assert_eq!(cli_main(["evcss", "threshold", "--pfa", "1.5"]), 2);
        assert_eq!(cli_main(["evcss", "threshold", "--antennas", "0"]), 2);
        assert_eq!(cli_main(["evcss", "threshold"]), 0);
    }

    #[test]
    fn unknown_flags_are_usage_errors() {
        assert_eq!(cli_main(["evcss", "roc", "--widgets", "7"]), 2);
    }
}
