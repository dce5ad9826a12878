//! The Monte Carlo engine: per-trial seeding, baseline threshold
//! calibration, the H0/H1 measurement passes, and the analytic detection
//! probability attached to eigenvalue-detector rows.

use crate::channel::{
    draw_rayleigh, draw_uncertain_snr, snr_to_noise_power, spatial_cholesky, synthesize_frame,
    ChannelModel, ChannelRealization, NoiseModel,
};
use crate::detectors::{
    bmrc_msdf, egc_msdf, evcss, sum_msdf, DetectorError, DetectorId, ThresholdSpec,
};
use crate::harness::config::{ChannelSpec, ExperimentConfig, ExperimentKind};
use crate::harness::HarnessError;
use crate::matstats::IQFrame;
use crate::signals::{generate_bpsk, reference_cyclic_feature, CyclicFeature};
use crate::analysis;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::hash_map::Entry;
use std::collections::HashMap;

type Result<T> = std::result::Result<T, HarnessError>;

/// Calibration runs this many times the measurement trial count, so the
/// threshold quantile carries an order of magnitude less sampling error
/// than the rates measured against it.
pub const CALIBRATION_FACTOR: u64 = 10;

/// Per-detector trial failures above one per mille abort the run; anything
/// that frequent is a configuration problem, not numerical bad luck.
const ERROR_BUDGET_PER_MILLE: u64 = 1;

/// Simpson grid for averaging analytic detection probability over the
/// noise-uncertainty prior.
const PRIOR_INTERVALS: usize = 32;

/// One detector at one sweep point: the thresholds used, the measured
/// rates with their binomial standard errors, and (for the eigenvalue
/// detector) the model prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub experiment: ExperimentKind,
    pub detector: DetectorId,
    pub sweep_axis: &'static str,
    pub sweep_value: f64,
    pub num_antennas: usize,
    pub n_samples: usize,
    pub snr_db: f64,
    pub rho_s: f64,
    pub threshold: f64,
    pub pfa_emp: f64,
    pub pfa_stderr: f64,
    pub pd_emp: f64,
    pub pd_stderr: f64,
    pub pd_analytic: Option<f64>,
    pub trials: u64,
    pub seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The RNG of one Monte Carlo trial. Seeds are derived from
/// (master seed, stream tag, trial index) through a SplitMix64 chain, so
/// every trial is an independent stream and results do not depend on how
/// trials are scheduled across worker threads.
pub fn trial_rng(master_seed: u64, stream_tag: u64, trial_index: u64) -> ChaCha8Rng {
    let mut s = splitmix64(master_seed ^ stream_tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    s = splitmix64(s ^ trial_index);
    ChaCha8Rng::seed_from_u64(s)
}

/// The empirical (1 − P_FA) quantile of an ascending-sorted statistic
/// sample: the order statistic at ⌈(1 − pfa)·n⌉, so a strict `T > γ`
/// comparison fires on at most a pfa fraction of the calibration sample.
pub fn empirical_quantile(sorted: &[f64], pfa: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let n = sorted.len();
    let rank = ((1.0 - pfa) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Run one experiment to completion and return its summary rows, one per
/// (sweep point, detector) in configuration order.
///
/// The `EVCSS_THREADS` environment variable caps the worker count;
/// results are identical for any cap.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    let threads = std::env::var("EVCSS_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0);
    run_experiment_on(cfg, threads)
}

/// [`run_experiment`] with an explicit worker cap (`None` uses the global
/// thread pool).
pub fn run_experiment_on(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<SummaryRow>> {
    cfg.validate()?;
    match threads {
        None => run_all(cfg),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| HarnessError::ThreadPool {
                reason: e.to_string(),
            })?
            .install(|| run_all(cfg)),
    }
}

/// Everything held fixed at one sweep point.
#[derive(Debug, Clone, Copy)]
struct Point {
    sweep_value: f64,
    m: usize,
    n: usize,
    snr_db: f64,
    delta_db: f64,
    pfa: f64,
    rho_s: f64,
}

fn resolve_point(cfg: &ExperimentConfig, sweep_value: f64) -> Point {
    let mut p = Point {
        sweep_value,
        m: cfg.num_antennas,
        n: cfg.n_samples,
        snr_db: cfg.snr_db,
        delta_db: cfg.snr_delta_db,
        pfa: cfg.pfa_target,
        rho_s: cfg.rho_s,
    };
    match cfg.experiment {
        ExperimentKind::H0Dist | ExperimentKind::H1Dist | ExperimentKind::PdVsN => {
            p.n = sweep_value as usize
        }
        ExperimentKind::Roc => p.pfa = sweep_value,
        ExperimentKind::PdVsSnr => p.snr_db = sweep_value,
        ExperimentKind::PdVsM => p.m = sweep_value as usize,
        ExperimentKind::SpatialCorr => p.rho_s = sweep_value,
        ExperimentKind::NoiseUncertainty => p.delta_db = sweep_value,
    }
    p
}

/// The channel realization that anchors the SNR definition: actual gains
/// for a fixed channel, the unit-energy stand-in for Rayleigh fading
/// (whose expected per-antenna energy is one by construction).
fn representative_channel(spec: &ChannelSpec, m: usize) -> ChannelRealization {
    match spec {
        ChannelSpec::Awgn(gains) => ChannelRealization::fixed(gains.clone()),
        ChannelSpec::RayleighIid => ChannelRealization {
            h: vec![Complex64::ONE; m],
            model: ChannelModel::RayleighIid,
        },
    }
}

/// Calibration cache key: everything the null statistic distribution of a
/// baseline detector depends on. Float fields are keyed by their bit
/// patterns. A ROC sweep varies only the false-alarm target, so all its
/// points share one entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CalKey {
    m: usize,
    n: usize,
    sigma_bits: u64,
    rho_bits: u64,
    snr_bits: u64,
    delta_bits: u64,
}

impl CalKey {
    fn new(point: &Point, sigma_eta2: f64) -> CalKey {
        CalKey {
            m: point.m,
            n: point.n,
            sigma_bits: sigma_eta2.to_bits(),
            rho_bits: point.rho_s.to_bits(),
            snr_bits: point.snr_db.to_bits(),
            delta_bits: point.delta_db.to_bits(),
        }
    }

    /// Stream tag of the calibration trials. The top bit keeps these
    /// streams disjoint from the small measurement-pass tags.
    fn stream_tag(&self) -> u64 {
        let mut t = 0x5EED_0000_0000_0001;
        for x in [
            self.m as u64,
            self.n as u64,
            self.sigma_bits,
            self.rho_bits,
            self.snr_bits,
            self.delta_bits,
        ] {
            t = splitmix64(t ^ x);
        }
        t | (1 << 63)
    }
}

type Calibration = HashMap<DetectorId, Vec<f64>>;

fn run_all(cfg: &ExperimentConfig) -> Result<Vec<SummaryRow>> {
    let feature = reference_cyclic_feature(&cfg.signal, cfg.feature_alpha0_hz(), cfg.tau0_samples)?;
    let needs_baselines = cfg.detectors.iter().any(|d| !d.has_analytic_threshold());
    if needs_baselines {
        cfg.msdf.validate()?;
        cfg.msdf.alpha_bin(&feature, cfg.signal.sample_period_s)?;
    }

    let mut cal_cache: HashMap<CalKey, Calibration> = HashMap::new();
    let mut rows = Vec::with_capacity(cfg.sweep.len() * cfg.detectors.len());
    for (pt, &sweep_value) in cfg.sweep.iter().enumerate() {
        let point = resolve_point(cfg, sweep_value);
        rows.extend(run_point(cfg, &feature, &point, pt as u64, &mut cal_cache)?);
    }
    Ok(rows)
}

fn run_point(
    cfg: &ExperimentConfig,
    feature: &CyclicFeature,
    point: &Point,
    pt_index: u64,
    cal_cache: &mut HashMap<CalKey, Calibration>,
) -> Result<Vec<SummaryRow>> {
    let rep = representative_channel(&cfg.channel, point.m);
    let sigma_eta2 = snr_to_noise_power(point.snr_db, &rep)?;
    let base_noise = spatial_cholesky(point.rho_s, sigma_eta2, point.m)?;

    let needs_baselines = cfg.detectors.iter().any(|d| !d.has_analytic_threshold());
    if needs_baselines && point.n < cfg.msdf.fft_size {
        return Err(HarnessError::Detector(DetectorError::StreamTooShort {
            len: point.n,
            fft_size: cfg.msdf.fft_size,
        }));
    }

    // Calibration first: baseline thresholds come from a dedicated H0 run
    // at ten times the measurement trial count, shared between sweep
    // points with identical null conditions.
    if needs_baselines {
        let key = CalKey::new(point, sigma_eta2);
        if let Entry::Vacant(slot) = cal_cache.entry(key) {
            let cal = calibrate_baselines(cfg, feature, point, &base_noise, key.stream_tag())?;
            slot.insert(cal);
        }
    }

    let mut thresholds = Vec::with_capacity(cfg.detectors.len());
    for d in &cfg.detectors {
        let spec = if d.has_analytic_threshold() {
            ThresholdSpec::for_false_alarm_rate(point.pfa, point.m, feature.conjugate)?
        } else {
            let key = CalKey::new(point, sigma_eta2);
            let sorted = &cal_cache[&key][d];
            ThresholdSpec::empirical(empirical_quantile(sorted, point.pfa), point.pfa)
        };
        thresholds.push(spec.gamma);
    }

    let h0 = run_pass(PassSpec {
        cfg,
        feature,
        point,
        base_noise: &base_noise,
        rep: &rep,
        detectors: &cfg.detectors,
        thresholds: Some(&thresholds),
        signal_channel: None,
        trials: cfg.trials,
        stream_tag: 2 * pt_index + 1,
    })?;
    let h1 = run_pass(PassSpec {
        cfg,
        feature,
        point,
        base_noise: &base_noise,
        rep: &rep,
        detectors: &cfg.detectors,
        thresholds: Some(&thresholds),
        signal_channel: Some(&cfg.channel),
        trials: cfg.trials,
        stream_tag: 2 * pt_index + 2,
    })?;

    let mut rows = Vec::with_capacity(cfg.detectors.len());
    for (i, &d) in cfg.detectors.iter().enumerate() {
        let (pfa_emp, pfa_stderr) = h0.rate(i);
        let (pd_emp, pd_stderr) = h1.rate(i);
        let pd_analytic = if d == DetectorId::EvCss {
            analytic_pd(cfg, point, thresholds[i], feature)?
        } else {
            None
        };
        rows.push(SummaryRow {
            experiment: cfg.experiment,
            detector: d,
            sweep_axis: cfg.experiment.sweep_axis(),
            sweep_value: point.sweep_value,
            num_antennas: point.m,
            n_samples: point.n,
            snr_db: point.snr_db,
            rho_s: point.rho_s,
            threshold: thresholds[i],
            pfa_emp,
            pfa_stderr,
            pd_emp,
            pd_stderr,
            pd_analytic,
            trials: cfg.trials,
            seed: cfg.master_seed,
        });
    }
    Ok(rows)
}

fn calibrate_baselines(
    cfg: &ExperimentConfig,
    feature: &CyclicFeature,
    point: &Point,
    base_noise: &NoiseModel,
    stream_tag: u64,
) -> Result<Calibration> {
    let baselines: Vec<DetectorId> = cfg
        .detectors
        .iter()
        .copied()
        .filter(|d| !d.has_analytic_threshold())
        .collect();
    let rep = representative_channel(&cfg.channel, point.m);
    let pass = run_pass(PassSpec {
        cfg,
        feature,
        point,
        base_noise,
        rep: &rep,
        detectors: &baselines,
        thresholds: None,
        signal_channel: None,
        trials: cfg.trials.saturating_mul(CALIBRATION_FACTOR),
        stream_tag,
    })?;

    let mut cal = Calibration::new();
    for (i, &d) in baselines.iter().enumerate() {
        let mut stats = pass.stats[i].clone();
        stats.sort_by(f64::total_cmp);
        cal.insert(d, stats);
    }
    Ok(cal)
}

struct PassSpec<'a> {
    cfg: &'a ExperimentConfig,
    feature: &'a CyclicFeature,
    point: &'a Point,
    base_noise: &'a NoiseModel,
    rep: &'a ChannelRealization,
    detectors: &'a [DetectorId],
    /// Per-detector decision thresholds; `None` collects raw statistics
    /// (calibration mode) instead of counting detections.
    thresholds: Option<&'a [f64]>,
    /// `None` runs the null hypothesis (noise only); otherwise frames
    /// carry the signal through this channel model.
    signal_channel: Option<&'a ChannelSpec>,
    trials: u64,
    stream_tag: u64,
}

/// Commutative per-pass accumulator, so the fold/reduce over trials gives
/// the same result for any work split.
struct Tally {
    detections: Vec<u64>,
    evaluated: Vec<u64>,
    errors: Vec<u64>,
    stats: Vec<Vec<f64>>,
    first_error: Vec<Option<String>>,
}

impl Tally {
    fn new(k: usize) -> Tally {
        Tally {
            detections: vec![0; k],
            evaluated: vec![0; k],
            errors: vec![0; k],
            stats: vec![Vec::new(); k],
            first_error: vec![None; k],
        }
    }

    fn absorb(
        &mut self,
        trial: Vec<std::result::Result<f64, String>>,
        thresholds: Option<&[f64]>,
    ) {
        for (i, outcome) in trial.into_iter().enumerate() {
            match outcome {
                Ok(statistic) => {
                    self.evaluated[i] += 1;
                    match thresholds {
                        Some(gammas) => {
                            if statistic > gammas[i] {
                                self.detections[i] += 1;
                            }
                        }
                        None => self.stats[i].push(statistic),
                    }
                }
                Err(message) => {
                    self.errors[i] += 1;
                    if self.first_error[i].is_none() {
                        self.first_error[i] = Some(message);
                    }
                }
            }
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for i in 0..self.detections.len() {
            self.detections[i] += other.detections[i];
            self.evaluated[i] += other.evaluated[i];
            self.errors[i] += other.errors[i];
        }
        for (mine, theirs) in self.stats.iter_mut().zip(other.stats) {
            mine.extend(theirs);
        }
        for (mine, theirs) in self.first_error.iter_mut().zip(other.first_error) {
            if mine.is_none() {
                *mine = theirs;
            }
        }
        self
    }

    /// Detection rate and its binomial standard error for detector `i`.
    fn rate(&self, i: usize) -> (f64, f64) {
        let n = self.evaluated[i] as f64;
        let p = self.detections[i] as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    }
}

fn run_pass(spec: PassSpec<'_>) -> Result<Tally> {
    let k = spec.detectors.len();
    let cfg = spec.cfg;
    let point = spec.point;
    let ts = cfg.signal.sample_period_s;
    let silent_channel = ChannelRealization::fixed(vec![Complex64::ZERO; point.m]);
    let fixed_channel = match spec.signal_channel {
        Some(ChannelSpec::Awgn(gains)) => Some(ChannelRealization::fixed(gains.clone())),
        _ => None,
    };

    let trial = |index: u64| -> Vec<std::result::Result<f64, String>> {
        let mut rng = trial_rng(cfg.master_seed, spec.stream_tag, index);

        // Trial-level RNG order: noise-power draw, channel draw, symbol
        // stream, then noise samples.
        let noise_storage;
        let noise: &NoiseModel = if point.delta_db > 0.0 {
            let snr_db = draw_uncertain_snr(point.snr_db, point.delta_db, &mut rng);
            match snr_to_noise_power(snr_db, spec.rep) {
                Ok(sigma_eta2) => {
                    noise_storage = NoiseModel {
                        sigma_eta2,
                        rho_s: spec.base_noise.rho_s,
                        chol_a: spec.base_noise.chol_a.clone(),
                    };
                    &noise_storage
                }
                Err(e) => return vec![Err(e.to_string()); k],
            }
        } else {
            spec.base_noise
        };

        let frame: IQFrame = match spec.signal_channel {
            None => {
                match synthesize_frame(None, &silent_channel, noise, point.n, ts, &mut rng) {
                    Ok(f) => f,
                    Err(e) => return vec![Err(e.to_string()); k],
                }
            }
            Some(channel_spec) => {
                let channel = match channel_spec {
                    ChannelSpec::Awgn(_) => fixed_channel.clone().unwrap(),
                    ChannelSpec::RayleighIid => match draw_rayleigh(point.m, &mut rng) {
                        Ok(c) => c,
                        Err(e) => return vec![Err(e.to_string()); k],
                    },
                };
                let soi = match generate_bpsk(&cfg.signal, point.n, &mut rng) {
                    Ok(s) => s,
                    Err(e) => return vec![Err(e.to_string()); k],
                };
                match synthesize_frame(Some(&soi), &channel, noise, point.n, ts, &mut rng) {
                    Ok(f) => f,
                    Err(e) => return vec![Err(e.to_string()); k],
                }
            }
        };

        spec.detectors
            .iter()
            .map(|&d| {
                detector_statistic(d, &frame, spec.feature, cfg)
                    .map_err(|e| e.to_string())
            })
            .collect()
    };

    let tally = (0..spec.trials)
        .into_par_iter()
        .fold(
            || Tally::new(k),
            |mut t, index| {
                t.absorb(trial(index), spec.thresholds);
                t
            },
        )
        .reduce(|| Tally::new(k), Tally::merge);

    let budget = spec.trials * ERROR_BUDGET_PER_MILLE / 1000;
    for (i, &d) in spec.detectors.iter().enumerate() {
        if tally.errors[i] > budget {
            return Err(HarnessError::TooManyTrialErrors {
                detector: d,
                sweep_value: spec.point.sweep_value,
                errors: tally.errors[i],
                trials: spec.trials,
                first: tally.first_error[i]
                    .clone()
                    .unwrap_or_else(|| "unknown".to_string()),
            });
        }
    }
    Ok(tally)
}

fn detector_statistic(
    id: DetectorId,
    frame: &IQFrame,
    feature: &CyclicFeature,
    cfg: &ExperimentConfig,
) -> std::result::Result<f64, DetectorError> {
    // Decisions are made by the caller against its own thresholds; the
    // sink threshold only satisfies the detector signatures.
    let sink = ThresholdSpec::empirical(f64::INFINITY, 0.5);
    let out = match id {
        DetectorId::EvCss => evcss(frame, feature, &sink)?,
        DetectorId::SumMsdf => sum_msdf(frame, feature, &cfg.msdf, &sink)?,
        DetectorId::EgcMsdf => egc_msdf(frame, feature, &cfg.msdf, &sink)?,
        DetectorId::BmrcMsdf => bmrc_msdf(frame, feature, &cfg.msdf, &sink)?,
    };
    Ok(out.statistic)
}

/// Model-predicted detection probability of the eigenvalue detector at
/// this sweep point, when the model covers it:
///
/// * fixed channel: exact, via the true canonical correlation and the
///   noncentral χ² law (averaged over the noise-power prior when the
///   uncertainty half-width is positive);
/// * Rayleigh fading: the fading-averaged law (prior-averaged only for
///   spatially white noise, where the integrand is a cheap quadrature).
///
/// Returns `None` where no prediction is defined (non-conjugate features
/// under fading, or fading with both correlated noise and noise-power
/// uncertainty).
fn analytic_pd(
    cfg: &ExperimentConfig,
    point: &Point,
    gamma: f64,
    feature: &CyclicFeature,
) -> Result<Option<f64>> {
    let rep = representative_channel(&cfg.channel, point.m);
    let pd_fixed_at = |snr_db: f64, gains: &[Complex64]| -> Result<f64> {
        let sigma_eta2 = snr_to_noise_power(snr_db, &rep)?;
        let noise = spatial_cholesky(point.rho_s, sigma_eta2, point.m)?;
        let rho = analysis::true_canonical_corr(gains, &noise, feature.rss_alpha_mag)?;
        Ok(analysis::pd_fixed_channel(
            gamma,
            point.m,
            point.n,
            rho,
            feature.conjugate,
        )?)
    };

    match &cfg.channel {
        ChannelSpec::Awgn(gains) => {
            if point.delta_db == 0.0 {
                return Ok(Some(pd_fixed_at(point.snr_db, gains)?));
            }
            let mean = prior_mean(point.snr_db, point.delta_db, |snr| pd_fixed_at(snr, gains))?;
            Ok(Some(mean))
        }
        ChannelSpec::RayleighIid => {
            if !feature.conjugate {
                return Ok(None);
            }
            let pd_rayleigh_at = |snr_db: f64| -> Result<f64> {
                let sigma_eta2 = snr_to_noise_power(snr_db, &rep)?;
                let noise = spatial_cholesky(point.rho_s, sigma_eta2, point.m)?;
                let est =
                    analysis::pd_rayleigh(gamma, point.n, feature.rss_alpha_mag, &noise)?;
                Ok(est.value)
            };
            if point.delta_db == 0.0 {
                return Ok(Some(pd_rayleigh_at(point.snr_db)?));
            }
            if point.rho_s > 0.0 {
                return Ok(None);
            }
            Ok(Some(prior_mean(point.snr_db, point.delta_db, pd_rayleigh_at)?))
        }
    }
}

/// Mean of `f` over the uniform density on [snr − Δ, snr + Δ], by
/// composite Simpson quadrature; the integrands here are smooth and
/// bounded, so a fixed grid is plenty.
fn prior_mean(
    snr_db: f64,
    delta_db: f64,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    let lo = snr_db - delta_db;
    let hi = snr_db + delta_db;
    let h = (hi - lo) / PRIOR_INTERVALS as f64;
    let mut acc = f(lo)? + f(hi)?;
    for i in 1..PRIOR_INTERVALS {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += weight * f(lo + i as f64 * h)?;
    }
    Ok(acc * h / 3.0 / (hi - lo))
}
