//! The four decision algorithms: the eigenvalue detector and three
//! combining baselines built on a cyclic-periodogram feature statistic.
//!
//! The eigenvalue detector (EV-CSS) maps a frame to T = −m·ln λ with
//! λ = Π(1 − μ²ᵢ) over the squared canonical correlations; its null law is
//! chi-square, so thresholds come from [`ThresholdSpec::for_false_alarm_rate`]
//! with no calibration. The baselines share one measured feature statistic
//! (the magnitude of a block-averaged cyclic periodogram normalized by
//! average energy) and differ in how antennas are combined before or after it:
//! per-antenna sum (SUM), phase-aligned equal-gain combining (EGC), or blind
//! maximal-ratio combining from the dominant singular vector of the cyclic
//! covariance (BMRC). Their statistics have no closed-form null law and are
//! thresholded empirically.

use crate::matstats::{
    ccst_eigenvalues, chi2_cdf, chi2_quantile, cyclic_covariance, CovariancePair, IQFrame,
    MatError,
};
use crate::signals::CyclicFeature;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

/// Blocks per coherent segment of the cyclic periodogram: block products are
/// summed coherently in runs of this many FFT blocks, and segment magnitudes
/// are then accumulated.
pub const SEGMENT_BLOCKS: usize = 8;

pub type Result<T> = std::result::Result<T, DetectorError>;

#[derive(Debug, Clone, PartialEq)]
pub enum DetectorError {
    /// Covariance or distribution computation failed.
    Matstats(MatError),
    /// Stream shorter than one FFT block.
    StreamTooShort { len: usize, fft_size: usize },
    /// FFT size must be a power of two.
    FftSizeNotPowerOfTwo { fft_size: usize },
    /// Frequency smoothing window must be odd (and at least 1).
    SmoothingBinsNotOdd { smoothing_bins: usize },
    /// The cyclic frequency does not land on an FFT bin at this sample rate
    /// and FFT size.
    BinMisaligned { alpha0_hz: f64, bins: f64 },
    /// EGC reference antenna index beyond the frame.
    ReferenceAntennaOutOfRange {
        reference_antenna: usize,
        num_antennas: usize,
    },
    /// Probability argument outside (0, 1).
    InvalidFalseAlarmRate { target_pfa: f64 },
}

impl fmt::Display for DetectorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectorError::Matstats(e) => write!(f, "{e}"),
            DetectorError::StreamTooShort { len, fft_size } => {
                write!(f, "stream of {len} samples is shorter than one {fft_size}-point block")
            }
            DetectorError::FftSizeNotPowerOfTwo { fft_size } => {
                write!(f, "fft_size {fft_size} is not a power of two")
            }
            DetectorError::SmoothingBinsNotOdd { smoothing_bins } => {
                write!(f, "smoothing_bins {smoothing_bins} must be odd and at least 1")
            }
            DetectorError::BinMisaligned { alpha0_hz, bins } => write!(
                f,
                "cyclic frequency {alpha0_hz} Hz falls at fractional FFT bin {bins}; \
                 choose fft_size and sample rate so it is bin-aligned"
            ),
            DetectorError::ReferenceAntennaOutOfRange {
                reference_antenna,
                num_antennas,
            } => write!(
                f,
                "reference antenna {reference_antenna} does not exist on a \
                 {num_antennas}-antenna frame"
            ),
            DetectorError::InvalidFalseAlarmRate { target_pfa } => {
                write!(f, "false-alarm target {target_pfa} is outside (0, 1)")
            }
        }
    }
}

impl std::error::Error for DetectorError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            DetectorError::Matstats(e) => Some(e),
            _ => None,
        }
    }
}

impl From<MatError> for DetectorError {
    fn from(e: MatError) -> Self {
        DetectorError::Matstats(e)
    }
}

/// Which algorithm produced a [`DetectorOutput`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorId {
    EvCss,
    SumMsdf,
    EgcMsdf,
    BmrcMsdf,
}

impl DetectorId {
    pub const ALL: [DetectorId; 4] = [
        DetectorId::EvCss,
        DetectorId::SumMsdf,
        DetectorId::EgcMsdf,
        DetectorId::BmrcMsdf,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorId::EvCss => "ev-css",
            DetectorId::SumMsdf => "sum-msdf",
            DetectorId::EgcMsdf => "egc-msdf",
            DetectorId::BmrcMsdf => "bmrc-msdf",
        }
    }

    pub fn parse(name: &str) -> Option<DetectorId> {
        DetectorId::ALL.iter().copied().find(|d| d.as_str() == name)
    }

    /// True for the detector whose threshold is analytic rather than
    /// calibrated.
    pub fn has_analytic_threshold(&self) -> bool {
        matches!(self, DetectorId::EvCss)
    }
}

impl fmt::Display for DetectorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

/// Result of running one detector on one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutput {
    pub statistic: f64,
    /// Squared canonical correlations, descending (eigenvalue detector only;
    /// empty for the baselines).
    pub eigenvalues_sq: Vec<f64>,
    /// λ = Π(1 − μ²ᵢ) (eigenvalue detector only).
    pub lambda: Option<f64>,
    pub decision: bool,
    pub detector_id: DetectorId,
}

/// Decision threshold: γ plus the bookkeeping of how it was chosen.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSpec {
    pub gamma: f64,
    /// Degrees of freedom of the analytic null law; 0 for empirically
    /// calibrated thresholds, which have none.
    pub k_dof: usize,
    pub target_pfa: f64,
}

impl ThresholdSpec {
    /// Analytic CFAR threshold for the eigenvalue detector: the null law of
    /// T is chi-square with k = M(M+1) degrees of freedom for the conjugate
    /// test and k = M² for the non-conjugate one, so γ is its (1 − P_FA)
    /// quantile.
    pub fn for_false_alarm_rate(
        target_pfa: f64,
        num_antennas: usize,
        conjugate: bool,
    ) -> Result<ThresholdSpec> {
        if !(target_pfa > 0.0 && target_pfa < 1.0) {
            return Err(DetectorError::InvalidFalseAlarmRate { target_pfa });
        }
        let k_dof = null_dof(num_antennas, conjugate);
        let gamma = chi2_quantile(1.0 - target_pfa, k_dof)?;
        Ok(ThresholdSpec {
            gamma,
            k_dof,
            target_pfa,
        })
    }

    /// Wrap an empirically calibrated threshold.
    pub fn empirical(gamma: f64, target_pfa: f64) -> ThresholdSpec {
        ThresholdSpec {
            gamma,
            k_dof: 0,
            target_pfa,
        }
    }
}

/// Null degrees of freedom of the eigenvalue statistic: M(M+1) for the
/// conjugate variant, M² for the non-conjugate one.
pub fn null_dof(num_antennas: usize, conjugate: bool) -> usize {
    if conjugate {
        num_antennas * (num_antennas + 1)
    } else {
        num_antennas * num_antennas
    }
}

/// Configuration of the baseline feature statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct MsdfConfig {
    /// FFT block length N_S (power of two).
    pub fft_size: usize,
    /// Antenna whose phase the EGC combiner aligns the others to.
    pub reference_antenna: usize,
    /// Odd number of adjacent frequency bins averaged in the spectral
    /// correlation estimate. Over the full band the boxcar is a no-op for
    /// the aggregate statistic; it matters for the EGC phase window.
    pub smoothing_bins: usize,
}

impl Default for MsdfConfig {
    fn default() -> Self {
        MsdfConfig {
            fft_size: 128,
            reference_antenna: 0,
            smoothing_bins: 1,
        }
    }
}

impl MsdfConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.fft_size == 0 || !self.fft_size.is_power_of_two() {
            return Err(DetectorError::FftSizeNotPowerOfTwo {
                fft_size: self.fft_size,
            });
        }
        if self.smoothing_bins.is_multiple_of(2) {
            return Err(DetectorError::SmoothingBinsNotOdd {
                smoothing_bins: self.smoothing_bins,
            });
        }
        Ok(())
    }

    /// The FFT bin of the cyclic frequency, which must be integral.
    pub(crate) fn alpha_bin(&self, feature: &CyclicFeature, sample_period_s: f64) -> Result<usize> {
        let bins = feature.alpha0_hz * sample_period_s * self.fft_size as f64;
        let rounded = bins.round();
        if (bins - rounded).abs() > 1e-6 {
            return Err(DetectorError::BinMisaligned {
                alpha0_hz: feature.alpha0_hz,
                bins,
            });
        }
        Ok((rounded as i64).rem_euclid(self.fft_size as i64) as usize)
    }
}

/// Eigenvalue detector: squared canonical correlations μ² of the frame
/// against its shifted copy, λ = Π(1 − μ²ᵢ), T = −m·ln λ with m = N − M − 1,
/// decision T > γ.
pub fn evcss(
    frame: &IQFrame,
    feature: &CyclicFeature,
    threshold: &ThresholdSpec,
) -> Result<DetectorOutput> {
    let pair = CovariancePair::from_frame(frame, feature)?;
    let eigenvalues_sq = ccst_eigenvalues(&pair)?;
    // Bartlett scaling uses the frame's N regardless of the lag window
    let m_scale = (frame.num_samples() - frame.num_antennas() - 1) as f64;
    let (lambda, statistic) = eigenvalues_to_statistic(&eigenvalues_sq, m_scale);
    Ok(DetectorOutput {
        statistic,
        eigenvalues_sq,
        lambda: Some(lambda),
        decision: statistic > threshold.gamma,
        detector_id: DetectorId::EvCss,
    })
}

/// λ = Π(1 − μ²ᵢ) and T = −m·ln λ from the squared canonical correlations.
pub fn eigenvalues_to_statistic(eigenvalues_sq: &[f64], m_scale: f64) -> (f64, f64) {
    let lambda: f64 = eigenvalues_sq.iter().map(|mu_sq| 1.0 - mu_sq).product();
    (lambda, -m_scale * lambda.ln())
}

/// Feature statistic of one stream: magnitude of the block-averaged cyclic
/// periodogram at the feature's cyclic frequency, normalized by the
/// block-averaged energy.
///
/// The stream is split into ⌊N/N_S⌋ blocks. Each block's FFT is combined
/// into the bin-pair product matching α₀ (X(f)·X(ν̃−f) for the conjugate
/// variant, X(f)·X*(f−ν̃) otherwise), summed over the band after boxcar
/// smoothing, giving one complex number per block. Block values are summed
/// coherently within runs of [`SEGMENT_BLOCKS`] blocks, segment magnitudes
/// are accumulated, and the total is divided by N_used times the mean
/// per-sample energy. The result is scale-invariant and equals the
/// unit-power feature magnitude |R| for a clean signal.
///
/// A zero-energy stream scores 0. The H0 law of the statistic has no closed
/// form; thresholds are calibrated empirically.
pub fn msdf_statistic<T>(
    stream: &[T],
    feature: &CyclicFeature,
    cfg: &MsdfConfig,
    sample_period_s: f64,
) -> Result<f64>
where
    T: Copy,
    Complex64: From<T>,
{
    cfg.validate()?;
    let ns = cfg.fft_size;
    if stream.len() < ns {
        return Err(DetectorError::StreamTooShort {
            len: stream.len(),
            fft_size: ns,
        });
    }
    let nu_bin = cfg.alpha_bin(feature, sample_period_s)?;

    let fft = plan_fft(ns);
    let num_blocks = stream.len() / ns;
    let n_used = num_blocks * ns;

    let mut block = vec![Complex64::ZERO; ns];
    let mut products = vec![Complex64::ZERO; ns];
    let mut block_values = Vec::with_capacity(num_blocks);
    let mut energy = 0.0;
    for b in 0..num_blocks {
        for (i, slot) in block.iter_mut().enumerate() {
            *slot = Complex64::from(stream[b * ns + i]);
            energy += slot.norm_sqr();
        }
        fft.process(&mut block);

        for f in 0..ns {
            products[f] = if feature.conjugate {
                let pair = (nu_bin + ns - f) % ns;
                block[f] * block[pair]
            } else {
                let pair = (f + ns - nu_bin) % ns;
                block[f] * block[pair].conj()
            };
        }
        block_values.push(smoothed_sum(&products, cfg.smoothing_bins) / ns as f64);
    }

    let coherent_sum: f64 = block_values
        .chunks(SEGMENT_BLOCKS)
        .map(|seg| seg.iter().sum::<Complex64>().norm())
        .sum();
    energy /= n_used as f64;
    if energy == 0.0 {
        return Ok(0.0);
    }
    Ok(coherent_sum / (n_used as f64 * energy))
}

/// Sum the band after a circular boxcar of `width` bins (width 1 leaves the
/// values untouched; any full-band sum is unchanged by the boxcar up to
/// rounding).
fn smoothed_sum(products: &[Complex64], width: usize) -> Complex64 {
    let ns = products.len();
    if width <= 1 {
        return products.iter().sum();
    }
    let half = (width / 2) as i64;
    let mut total = Complex64::ZERO;
    for f in 0..ns as i64 {
        let mut window = Complex64::ZERO;
        for d in -half..=half {
            window += products[(f + d).rem_euclid(ns as i64) as usize];
        }
        total += window / width as f64;
    }
    total
}

/// Per-antenna sum detector: the feature statistic of each antenna stream,
/// added up, against an empirically calibrated threshold.
pub fn sum_msdf(
    frame: &IQFrame,
    feature: &CyclicFeature,
    cfg: &MsdfConfig,
    threshold: &ThresholdSpec,
) -> Result<DetectorOutput> {
    let mut statistic = 0.0;
    for k in 0..frame.num_antennas() {
        let stream = antenna_stream(frame, k);
        statistic += msdf_statistic(&stream, feature, cfg, frame.sample_period_s)?;
    }
    Ok(baseline_output(statistic, threshold, DetectorId::SumMsdf))
}

/// Equal-gain combining detector: estimate each antenna's phase offset
/// against the reference from the center bin of the cross spectral
/// correlation, rotate it out, sum the aligned streams, and score the sum.
pub fn egc_msdf(
    frame: &IQFrame,
    feature: &CyclicFeature,
    cfg: &MsdfConfig,
    threshold: &ThresholdSpec,
) -> Result<DetectorOutput> {
    let phases = egc_phase_estimates(frame, feature, cfg)?;
    let mut combined = vec![Complex64::ZERO; frame.num_samples()];
    for (k, phase) in phases.iter().enumerate() {
        let rot = Complex64::from_polar(1.0, -phase);
        for (i, slot) in combined.iter_mut().enumerate() {
            *slot += rot * frame.samples[(k, i)];
        }
    }
    let statistic = msdf_statistic(&combined, feature, cfg, frame.sample_period_s)?;
    Ok(baseline_output(statistic, threshold, DetectorId::EgcMsdf))
}

/// Phase of each antenna relative to the reference antenna, from the center
/// bin of the cross spectral correlation at the feature's cyclic frequency:
/// φ̂_k = arg(cross-SCF_{k,ref}) − arg(auto-SCF_{ref}). The reference
/// antenna's own estimate is exactly 0.
pub fn egc_phase_estimates(
    frame: &IQFrame,
    feature: &CyclicFeature,
    cfg: &MsdfConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let m = frame.num_antennas();
    if cfg.reference_antenna >= m {
        return Err(DetectorError::ReferenceAntennaOutOfRange {
            reference_antenna: cfg.reference_antenna,
            num_antennas: m,
        });
    }
    let ns = cfg.fft_size;
    if frame.num_samples() < ns {
        return Err(DetectorError::StreamTooShort {
            len: frame.num_samples(),
            fft_size: ns,
        });
    }
    let nu_bin = cfg.alpha_bin(feature, frame.sample_period_s)?;

    let fft = plan_fft(ns);
    let num_blocks = frame.num_samples() / ns;
    let mut spectra = vec![vec![Complex64::ZERO; ns * num_blocks]; m];
    let mut block = vec![Complex64::ZERO; ns];
    for (k, spectrum) in spectra.iter_mut().enumerate() {
        for b in 0..num_blocks {
            for (i, slot) in block.iter_mut().enumerate() {
                *slot = frame.samples[(k, b * ns + i)];
            }
            fft.process(&mut block);
            spectrum[b * ns..(b + 1) * ns].copy_from_slice(&block);
        }
    }

    // cross-SCF of antenna k against the reference at the band center,
    // averaged over the smoothing window and summed coherently over blocks
    let center = nu_bin / 2;
    let half = (cfg.smoothing_bins / 2) as i64;
    let scf = |k: usize, r: usize| -> Complex64 {
        let mut acc = Complex64::ZERO;
        for b in 0..num_blocks {
            let xk = &spectra[k][b * ns..(b + 1) * ns];
            let xr = &spectra[r][b * ns..(b + 1) * ns];
            for d in -half..=half {
                let f = (center as i64 + d).rem_euclid(ns as i64) as usize;
                acc += if feature.conjugate {
                    let pair = (nu_bin + ns - f) % ns;
                    xk[f] * xr[pair]
                } else {
                    let pair = (f + ns - nu_bin) % ns;
                    xk[f] * xr[pair].conj()
                };
            }
        }
        acc
    };

    let r = cfg.reference_antenna;
    let auto_phase = scf(r, r).arg();
    Ok((0..m)
        .map(|k| {
            if k == r {
                0.0
            } else {
                wrap_phase(scf(k, r).arg() - auto_phase)
            }
        })
        .collect())
}

/// Blind maximal-ratio combining detector: estimate the channel direction as
/// the dominant left singular vector of the frame's cyclic covariance,
/// combine y(n) = ĥᴴx(n)/‖ĥ‖, and score the combined stream. An exactly
/// zero cyclic covariance (degenerate frame) falls back to antenna 0 with a
/// warning on stderr.
pub fn bmrc_msdf(
    frame: &IQFrame,
    feature: &CyclicFeature,
    cfg: &MsdfConfig,
    threshold: &ThresholdSpec,
) -> Result<DetectorOutput> {
    let h_hat = bmrc_channel_estimate(frame, feature)?;
    let statistic = combined_msdf(frame, &h_hat, feature, cfg)?;
    Ok(baseline_output(statistic, threshold, DetectorId::BmrcMsdf))
}

/// Maximal-ratio combining with a known channel vector: y(n) = hᴴx(n)/‖h‖
/// scored with the feature statistic. This is the ceiling the blind variant
/// approaches when its channel estimate is exact.
pub fn mrc_msdf_with_csi(
    frame: &IQFrame,
    h: &[Complex64],
    feature: &CyclicFeature,
    cfg: &MsdfConfig,
    threshold: &ThresholdSpec,
) -> Result<DetectorOutput> {
    let statistic = combined_msdf(frame, h, feature, cfg)?;
    Ok(baseline_output(statistic, threshold, DetectorId::BmrcMsdf))
}

/// Channel-direction estimate used by [`bmrc_msdf`]: the left singular
/// vector of the cyclic covariance with the largest singular value,
/// unit-norm, phase unresolved. Falls back to antenna 0 on an exactly zero
/// matrix.
pub fn bmrc_channel_estimate(
    frame: &IQFrame,
    feature: &CyclicFeature,
) -> Result<Vec<Complex64>> {
    let m = frame.num_antennas();
    let rxx_alpha = cyclic_covariance(
        frame,
        feature.alpha0_hz,
        feature.tau0_samples,
        feature.conjugate,
    )?;
    if rxx_alpha.iter().all(|z| *z == Complex64::ZERO) {
        eprintln!(
            "warning: cyclic covariance is exactly zero; \
             blind combining falls back to antenna 0"
        );
        let mut h = vec![Complex64::ZERO; m];
        h[0] = Complex64::ONE;
        return Ok(h);
    }
    let svd = rxx_alpha.svd(true, false);
    let u = svd
        .u
        .as_ref()
        .expect("left singular vectors were requested");
    Ok(u.column(0).iter().copied().collect())
}

fn combined_msdf(
    frame: &IQFrame,
    h: &[Complex64],
    feature: &CyclicFeature,
    cfg: &MsdfConfig,
) -> Result<f64> {
    let m = frame.num_antennas();
    let n = frame.num_samples();
    assert_eq!(h.len(), m, "combiner length must match the antenna count");
    let norm = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut combined = vec![Complex64::ZERO; n];
    if norm > 0.0 {
        for (k, hk) in h.iter().enumerate() {
            let w = hk.conj().unscale(norm);
            for (i, slot) in combined.iter_mut().enumerate() {
                *slot += w * frame.samples[(k, i)];
            }
        }
    }
    msdf_statistic(&combined, feature, cfg, frame.sample_period_s)
}

fn baseline_output(
    statistic: f64,
    threshold: &ThresholdSpec,
    detector_id: DetectorId,
) -> DetectorOutput {
    DetectorOutput {
        statistic,
        eigenvalues_sq: Vec::new(),
        lambda: None,
        decision: statistic > threshold.gamma,
        detector_id,
    }
}

fn antenna_stream(frame: &IQFrame, k: usize) -> Vec<Complex64> {
    frame.samples.row(k).iter().copied().collect()
}

fn wrap_phase(phi: f64) -> f64 {
    let mut p = phi;
    while p > std::f64::consts::PI {
        p -= std::f64::consts::TAU;
    }
    while p <= -std::f64::consts::PI {
        p += std::f64::consts::TAU;
    }
    p
}

type FftPlanCache = Mutex<HashMap<usize, Arc<dyn Fft<f64>>>>;

/// FFT plans are cached per size and shared across threads.
fn plan_fft(size: usize) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<FftPlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry(size)
        .or_insert_with(|| FftPlanner::new().plan_fft_forward(size))
        .clone()
}

/// Verify a threshold claims its own false-alarm rate: P{χ²_k > γ} must
/// equal the target. Used by tests and the harness sanity checks.
pub fn threshold_consistency_error(threshold: &ThresholdSpec) -> Result<f64> {
    let p = chi2_cdf(threshold.gamma, threshold.k_dof)?;
    Ok(((1.0 - p) - threshold.target_pfa).abs())
}
