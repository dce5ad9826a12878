//! Declarative experiment configuration: the experiment families, their
//! defaults, the flat `key = value` config file format, and validation.

use crate::detectors::{DetectorId, MsdfConfig};
use crate::signals::SignalSpec;
use num_complex::Complex64;
use std::fmt;
use std::path::{Path, PathBuf};

pub type Result<T> = std::result::Result<T, ConfigError>;

/// A configuration problem. Every variant names the field it concerns so
/// the CLI can point at the offending line.
#[derive(Debug)]
pub enum ConfigError {
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// A line that is not blank, a comment, or `key = value`.
    Malformed { line_no: usize, line: String },
    UnknownKey { key: String, line_no: usize },
    InvalidValue {
        field: &'static str,
        value: String,
        reason: String,
    },
    Invalid {
        field: &'static str,
        reason: String,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, source } => {
                write!(f, "cannot read config {}: {source}", path.display())
            }
            ConfigError::Malformed { line_no, line } => {
                write!(f, "config line {line_no} is not `key = value`: {line:?}")
            }
            ConfigError::UnknownKey { key, line_no } => {
                write!(f, "unknown config key `{key}` on line {line_no}")
            }
            ConfigError::InvalidValue {
                field,
                value,
                reason,
            } => write!(f, "field `{field}`: bad value {value:?}: {reason}"),
            ConfigError::Invalid { field, reason } => write!(f, "field `{field}`: {reason}"),
        }
    }
}

impl std::error::Error for ConfigError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ConfigError::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

/// The experiment families. Each has a fixed sweep axis; every other
/// parameter is held at its scalar value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// Null statistic across frames; sweeps N.
    H0Dist,
    /// Statistic under a fixed channel; sweeps N.
    H1Dist,
    /// Detection against false alarm; sweeps the false-alarm target.
    Roc,
    PdVsSnr,
    PdVsN,
    PdVsM,
    /// Detection under spatially correlated noise; sweeps ρ_s.
    SpatialCorr,
    /// Detection with the noise power known only to ±Δ dB; sweeps Δ.
    NoiseUncertainty,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::H0Dist,
        ExperimentKind::H1Dist,
        ExperimentKind::Roc,
        ExperimentKind::PdVsSnr,
        ExperimentKind::PdVsN,
        ExperimentKind::PdVsM,
        ExperimentKind::SpatialCorr,
        ExperimentKind::NoiseUncertainty,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::H0Dist => "h0-dist",
            ExperimentKind::H1Dist => "h1-dist",
            ExperimentKind::Roc => "roc",
            ExperimentKind::PdVsSnr => "pd-vs-snr",
            ExperimentKind::PdVsN => "pd-vs-n",
            ExperimentKind::PdVsM => "pd-vs-m",
            ExperimentKind::SpatialCorr => "spatial-corr",
            ExperimentKind::NoiseUncertainty => "noise-uncertainty",
        }
    }

    pub fn parse(name: &str) -> Option<ExperimentKind> {
        ExperimentKind::ALL.iter().copied().find(|k| k.as_str() == name)
    }

    /// Name of the swept parameter, as written to the CSV.
    pub fn sweep_axis(&self) -> &'static str {
        match self {
            ExperimentKind::H0Dist | ExperimentKind::H1Dist | ExperimentKind::PdVsN => "n",
            ExperimentKind::Roc => "pfa",
            ExperimentKind::PdVsSnr => "snr_db",
            ExperimentKind::PdVsM => "m",
            ExperimentKind::SpatialCorr => "rho_s",
            ExperimentKind::NoiseUncertainty => "delta_db",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

/// How the H1 channel is drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    /// Fixed gains, fresh noise per frame.
    Awgn(Vec<Complex64>),
    /// Fresh h ~ CN(0, I_M) per frame.
    RayleighIid,
}

impl ChannelSpec {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelSpec::Awgn(_) => "awgn",
            ChannelSpec::RayleighIid => "rayleigh",
        }
    }
}

/// One experiment, fully specified. Build with [`ExperimentConfig::defaults`]
/// and refine from a config file ([`ExperimentConfig::apply_file`]) or
/// key-by-key ([`ExperimentConfig::set`]); [`ExperimentConfig::validate`]
/// gates every run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub num_antennas: usize,
    pub n_samples: usize,
    pub snr_db: f64,
    /// Noise-uncertainty half-width Δ in dB for experiments that hold it
    /// fixed (the noise-uncertainty experiment sweeps it instead).
    pub snr_delta_db: f64,
    /// Values of the experiment's sweep axis.
    pub sweep: Vec<f64>,
    pub trials: u64,
    pub pfa_target: f64,
    pub channel: ChannelSpec,
    pub rho_s: f64,
    pub detectors: Vec<DetectorId>,
    pub signal: SignalSpec,
    /// Cyclic frequency of the feature; None selects the doubled carrier.
    pub alpha0_hz: Option<f64>,
    pub tau0_samples: usize,
    pub msdf: MsdfConfig,
    pub master_seed: u64,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// The benchmark defaults of each experiment family: 2 antennas, the
    /// 80 kHz-carrier BPSK waveform at 320 kHz sampling, SNR −10 dB,
    /// P_FA = 0.1, 5000 trials, all four detectors, and a per-family sweep
    /// grid and channel model.
    pub fn defaults(experiment: ExperimentKind) -> ExperimentConfig {
        let signal = SignalSpec::default();
        let ones = ChannelSpec::Awgn(vec![Complex64::ONE, Complex64::ONE]);
        let (n_samples, sweep, channel) = match experiment {
            ExperimentKind::H0Dist => (1000, vec![1000.0], ChannelSpec::RayleighIid),
            ExperimentKind::H1Dist => (1000, vec![1000.0], ones),
            ExperimentKind::Roc => (
                4000,
                vec![0.05, 0.1, 0.2, 0.3, 0.4, 0.5],
                ChannelSpec::RayleighIid,
            ),
            ExperimentKind::PdVsSnr => (
                1000,
                vec![-15.0, -12.5, -10.0, -7.5, -5.0],
                ChannelSpec::RayleighIid,
            ),
            ExperimentKind::PdVsN => (
                1000,
                vec![1000.0, 2000.0, 3000.0, 4000.0, 5000.0],
                ChannelSpec::RayleighIid,
            ),
            ExperimentKind::PdVsM => (1000, vec![2.0, 3.0, 4.0], ChannelSpec::RayleighIid),
            ExperimentKind::SpatialCorr => (1000, vec![0.0, 0.2, 0.5, 0.8], ones),
            ExperimentKind::NoiseUncertainty => (1000, vec![0.0, 1.0, 2.0, 3.0], ones),
        };
        ExperimentConfig {
            experiment,
            num_antennas: 2,
            n_samples,
            snr_db: -10.0,
            snr_delta_db: 0.0,
            sweep,
            trials: 5000,
            pfa_target: 0.1,
            channel,
            rho_s: 0.0,
            detectors: DetectorId::ALL.to_vec(),
            signal,
            alpha0_hz: None,
            tau0_samples: 0,
            msdf: MsdfConfig::default(),
            master_seed: 1,
            out: None,
        }
    }

    /// The cyclic frequency the experiment probes: `alpha0_hz` if set, the
    /// doubled carrier otherwise.
    pub fn feature_alpha0_hz(&self) -> f64 {
        self.alpha0_hz.unwrap_or(2.0 * self.signal.carrier_freq_hz)
    }

    /// Apply `key = value` lines from a config file. `#` starts a comment;
    /// blank lines are skipped. Later lines win, so a file can layer on top
    /// of the defaults and flags can layer on top of the file.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_str(&text)
    }

    /// Apply config text (see [`ExperimentConfig::apply_file`]).
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line_no,
                line: raw.to_string(),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(ConfigError::Malformed {
                    line_no,
                    line: raw.to_string(),
                });
            }
            self.set(key, value.trim()).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { key, line_no },
                other => other,
            })?;
        }
        Ok(())
    }

    /// Set one field from its config key. The same keys back the CLI
    /// override flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => {
                self.experiment = ExperimentKind::parse(value).ok_or_else(|| {
                    ConfigError::InvalidValue {
                        field: "experiment",
                        value: value.to_string(),
                        reason: format!(
                            "expected one of: {}",
                            ExperimentKind::ALL.map(|k| k.as_str()).join(", ")
                        ),
                    }
                })?;
            }
            "antennas" => self.num_antennas = parse_int(value, "antennas")?,
            "samples" => self.n_samples = parse_int(value, "samples")?,
            "snr_db" => self.snr_db = parse_float(value, "snr_db")?,
            "snr_delta_db" => self.snr_delta_db = parse_float(value, "snr_delta_db")?,
            "sweep" => self.sweep = parse_float_list(value, "sweep")?,
            "trials" => self.trials = parse_int(value, "trials")? as u64,
            "pfa" => self.pfa_target = parse_float(value, "pfa")?,
            "channel" => {
                self.channel = match value {
                    "rayleigh" => ChannelSpec::RayleighIid,
                    "awgn" => {
                        let gains = match &self.channel {
                            ChannelSpec::Awgn(g) => g.clone(),
                            ChannelSpec::RayleighIid => {
                                vec![Complex64::ONE; self.num_antennas]
                            }
                        };
                        ChannelSpec::Awgn(gains)
                    }
                    other => {
                        return Err(ConfigError::InvalidValue {
                            field: "channel",
                            value: other.to_string(),
                            reason: "expected `awgn` or `rayleigh`".to_string(),
                        })
                    }
                };
            }
            "awgn_gains" => {
                let gains = parse_float_list(value, "awgn_gains")?;
                self.channel = ChannelSpec::Awgn(gains.into_iter().map(Complex64::from).collect());
            }
            "rho_s" => self.rho_s = parse_float(value, "rho_s")?,
            "detectors" => {
                let mut parsed = Vec::new();
                for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    let d = DetectorId::parse(name).ok_or_else(|| ConfigError::InvalidValue {
                        field: "detectors",
                        value: name.to_string(),
                        reason: format!(
                            "expected one of: {}",
                            DetectorId::ALL.map(|d| d.as_str()).join(", ")
                        ),
                    })?;
                    if !parsed.contains(&d) {
                        parsed.push(d);
                    }
                }
                self.detectors = parsed;
            }
            "carrier_hz" => self.signal.carrier_freq_hz = parse_float(value, "carrier_hz")?,
            "symbol_period_s" => {
                self.signal.symbol_period_s = parse_float(value, "symbol_period_s")?
            }
            "sample_rate_hz" => {
                let rate = parse_float(value, "sample_rate_hz")?;
                if rate.is_nan() || rate <= 0.0 {
                    return Err(ConfigError::InvalidValue {
                        field: "sample_rate_hz",
                        value: value.to_string(),
                        reason: "must be positive".to_string(),
                    });
                }
                self.signal.sample_period_s = 1.0 / rate;
            }
            "random_phase" => self.signal.random_carrier_phase = parse_bool(value, "random_phase")?,
            "alpha0_hz" => self.alpha0_hz = Some(parse_float(value, "alpha0_hz")?),
            "tau0" => self.tau0_samples = parse_int(value, "tau0")?,
            "fft_size" => self.msdf.fft_size = parse_int(value, "fft_size")?,
            "reference_antenna" => {
                self.msdf.reference_antenna = parse_int(value, "reference_antenna")?
            }
            "smoothing_bins" => self.msdf.smoothing_bins = parse_int(value, "smoothing_bins")?,
            "seed" => self.master_seed = parse_int(value, "seed")? as u64,
            "out" => self.out = Some(PathBuf::from(value)),
            other => {
                return Err(ConfigError::UnknownKey {
                    key: other.to_string(),
                    line_no: 0,
                })
            }
        }
        Ok(())
    }

    /// Check the cross-field rules every run relies on.
    pub fn validate(&self) -> Result<()> {
        if self.sweep.is_empty() {
            return Err(ConfigError::Invalid {
                field: "sweep",
                reason: "sweep grid must be non-empty".to_string(),
            });
        }
        if self.trials < 100 {
            return Err(ConfigError::Invalid {
                field: "trials",
                reason: format!("need at least 100 trials, got {}", self.trials),
            });
        }
        if self.num_antennas == 0 {
            return Err(ConfigError::Invalid {
                field: "antennas",
                reason: "need at least one antenna".to_string(),
            });
        }
        if self.n_samples <= self.num_antennas + 1 {
            return Err(ConfigError::Invalid {
                field: "samples",
                reason: format!(
                    "{} samples with {} antennas leaves no degrees of freedom",
                    self.n_samples, self.num_antennas
                ),
            });
        }
        if !(self.pfa_target > 0.0 && self.pfa_target < 1.0) {
            return Err(ConfigError::Invalid {
                field: "pfa",
                reason: format!("false-alarm target {} is outside (0, 1)", self.pfa_target),
            });
        }
        if !(0.0..1.0).contains(&self.rho_s) {
            return Err(ConfigError::Invalid {
                field: "rho_s",
                reason: format!("spatial correlation {} is outside [0, 1)", self.rho_s),
            });
        }
        if self.snr_delta_db < 0.0 {
            return Err(ConfigError::Invalid {
                field: "snr_delta_db",
                reason: "uncertainty half-width must be non-negative".to_string(),
            });
        }
        if self.detectors.is_empty() {
            return Err(ConfigError::Invalid {
                field: "detectors",
                reason: "at least one detector is required".to_string(),
            });
        }
        if let ChannelSpec::Awgn(gains) = &self.channel {
            if self.experiment == ExperimentKind::PdVsM {
                return Err(ConfigError::Invalid {
                    field: "channel",
                    reason: "an antenna sweep needs `channel = rayleigh`; fixed awgn \
                             gains pin the antenna count"
                        .to_string(),
                });
            }
            if gains.len() != self.num_antennas {
                return Err(ConfigError::Invalid {
                    field: "awgn_gains",
                    reason: format!(
                        "{} gains for {} antennas",
                        gains.len(),
                        self.num_antennas
                    ),
                });
            }
        }
        for &v in &self.sweep {
            self.validate_sweep_value(v)?;
        }
        Ok(())
    }

    fn validate_sweep_value(&self, v: f64) -> Result<()> {
        let field = "sweep";
        let bad = |reason: String| ConfigError::Invalid { field, reason };
        match self.experiment {
            ExperimentKind::H0Dist | ExperimentKind::H1Dist | ExperimentKind::PdVsN => {
                if v.fract() != 0.0 || v <= (self.num_antennas + 1) as f64 {
                    return Err(bad(format!(
                        "sample-count sweep value {v} must be an integer above M + 1"
                    )));
                }
            }
            ExperimentKind::Roc => {
                if !(v > 0.0 && v < 1.0) {
                    return Err(bad(format!(
                        "false-alarm sweep value {v} is outside (0, 1)"
                    )));
                }
            }
            ExperimentKind::PdVsSnr => {
                if !v.is_finite() {
                    return Err(bad(format!("SNR sweep value {v} is not finite")));
                }
            }
            ExperimentKind::PdVsM => {
                if v.fract() != 0.0 || v < 1.0 {
                    return Err(bad(format!(
                        "antenna sweep value {v} must be a positive integer"
                    )));
                }
            }
            ExperimentKind::SpatialCorr => {
                if !(0.0..1.0).contains(&v) {
                    return Err(bad(format!(
                        "spatial-correlation sweep value {v} is outside [0, 1)"
                    )));
                }
            }
            ExperimentKind::NoiseUncertainty => {
                if v.is_nan() || v < 0.0 {
                    return Err(bad(format!(
                        "uncertainty sweep value {v} must be non-negative"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn parse_int(value: &str, field: &'static str) -> Result<usize> {
    value.parse::<usize>().map_err(|e| ConfigError::InvalidValue {
        field,
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_float(value: &str, field: &'static str) -> Result<f64> {
    value.parse::<f64>().map_err(|e| ConfigError::InvalidValue {
        field,
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_bool(value: &str, field: &'static str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(ConfigError::InvalidValue {
            field,
            value: other.to_string(),
            reason: "expected true or false".to_string(),
        }),
    }
}

fn parse_float_list(value: &str, field: &'static str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_float(s, field))
        .collect()
}
