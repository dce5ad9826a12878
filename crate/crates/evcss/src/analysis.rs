//! Closed-form performance of the eigenvalue detector: CFAR thresholds, the
//! population canonical correlation of a flat channel in (possibly
//! correlated) noise, and detection probability under fixed and Rayleigh
//! fading channels.
//!
//! Under H1 the statistic T is non-central chi-square with the H0 degrees of
//! freedom and non-centrality δ² = m·ρ², where ρ is the one non-zero
//! population canonical correlation a rank-one channel produces. Everything
//! here reduces to evaluating that law: [`true_canonical_corr`] maps a
//! channel and noise model to ρ, [`pd_fixed_channel`] evaluates the law at
//! one ρ, and [`pd_rayleigh`] averages it over the fading distribution of
//! the channel norm.

use crate::channel::{standard_complex, NoiseModel};
use crate::detectors::{null_dof, ThresholdSpec};
use crate::matstats::{chi2_quantile, noncentral_chi2_cdf, MatError};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;
use std::fmt;

/// Absolute tolerance of the fading-average quadrature.
const QUADRATURE_TOL: f64 = 1e-6;
/// Interval halvings before the quadrature gives up.
const QUADRATURE_MAX_DEPTH: usize = 40;
/// Fading average truncates the channel-norm density at this tail mass.
const BETA_TAIL: f64 = 1e-8;
/// Monte Carlo draws for the correlated-noise fading average.
pub const RAYLEIGH_MC_DRAWS: usize = 200_000;
/// Fixed stream for the correlated-noise fading average, so harness output
/// containing analytic columns is reproducible.
const RAYLEIGH_MC_SEED: u64 = 0x5EED_0002;

pub type Result<T> = std::result::Result<T, AnalysisError>;

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisError {
    /// Chi-square numerics failed.
    Matstats(MatError),
    /// Canonical correlation outside [0, 1).
    CorrelationOutOfRange { rho: f64 },
    /// Cyclic feature magnitude outside [0, 1].
    FeatureMagnitudeOutOfRange { rss_alpha_mag: f64 },
    /// Channel vector and noise model disagree on the antenna count.
    ChannelMismatch {
        channel_antennas: usize,
        noise_antennas: usize,
    },
    /// Need N > M + 1 for a positive chi-square scale.
    TooFewSamples { n_samples: usize, num_antennas: usize },
    /// Noise-shaping matrix cannot be inverted.
    SingularNoiseShaping { diagonal: f64 },
    /// Probability argument outside (0, 1).
    InvalidFalseAlarmRate { target_pfa: f64 },
    /// The fading-average quadrature did not reach its tolerance.
    QuadratureNotConverged {
        interval: (f64, f64),
        error_estimate: f64,
    },
    /// Monte Carlo fading average needs at least one draw.
    NoDraws,
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::Matstats(e) => write!(f, "{e}"),
            AnalysisError::CorrelationOutOfRange { rho } => {
                write!(f, "canonical correlation {rho} is outside [0, 1)")
            }
            AnalysisError::FeatureMagnitudeOutOfRange { rss_alpha_mag } => {
                write!(f, "feature magnitude {rss_alpha_mag} is outside [0, 1]")
            }
            AnalysisError::ChannelMismatch {
                channel_antennas,
                noise_antennas,
            } => write!(
                f,
                "channel has {channel_antennas} antennas but the noise model has {noise_antennas}"
            ),
            AnalysisError::TooFewSamples {
                n_samples,
                num_antennas,
            } => write!(
                f,
                "{n_samples} samples with {num_antennas} antennas leaves no degrees of freedom"
            ),
            AnalysisError::SingularNoiseShaping { diagonal } => {
                write!(f, "noise-shaping factor has a non-positive diagonal entry {diagonal}")
            }
            AnalysisError::InvalidFalseAlarmRate { target_pfa } => {
                write!(f, "false-alarm target {target_pfa} is outside (0, 1)")
            }
            AnalysisError::QuadratureNotConverged {
                interval,
                error_estimate,
            } => write!(
                f,
                "fading-average quadrature stalled on [{}, {}] with error estimate {}",
                interval.0, interval.1, error_estimate
            ),
            AnalysisError::NoDraws => write!(f, "Monte Carlo fading average needs draws >= 1"),
        }
    }
}

impl std::error::Error for AnalysisError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            AnalysisError::Matstats(e) => Some(e),
            _ => None,
        }
    }
}

impl From<MatError> for AnalysisError {
    fn from(e: MatError) -> Self {
        AnalysisError::Matstats(e)
    }
}

/// Parameters of the H1 law of the statistic: T is non-central chi-square
/// with `k_dof` degrees of freedom and non-centrality `delta2` = m·ρ².
#[derive(Debug, Clone, PartialEq)]
pub struct H1Model {
    pub k_dof: usize,
    pub rho: f64,
    pub delta2: f64,
    pub m: f64,
}

impl H1Model {
    pub fn new(num_antennas: usize, n_samples: usize, rho: f64, conjugate: bool) -> Result<H1Model> {
        if n_samples <= num_antennas + 1 {
            return Err(AnalysisError::TooFewSamples {
                n_samples,
                num_antennas,
            });
        }
        if !(0.0..1.0).contains(&rho) {
            return Err(AnalysisError::CorrelationOutOfRange { rho });
        }
        let m = (n_samples - num_antennas - 1) as f64;
        Ok(H1Model {
            k_dof: null_dof(num_antennas, conjugate),
            rho,
            delta2: m * rho * rho,
            m,
        })
    }
}

/// CFAR threshold at the given false-alarm target: the (1 − P_FA) quantile
/// of the chi-square null law. Independent of N and of the noise power by
/// construction.
pub fn threshold_cfar(target_pfa: f64, num_antennas: usize, conjugate: bool) -> Result<ThresholdSpec> {
    if !(target_pfa > 0.0 && target_pfa < 1.0) {
        return Err(AnalysisError::InvalidFalseAlarmRate { target_pfa });
    }
    let k_dof = null_dof(num_antennas, conjugate);
    let gamma = chi2_quantile(1.0 - target_pfa, k_dof)?;
    Ok(ThresholdSpec {
        gamma,
        k_dof,
        target_pfa,
    })
}

/// The population canonical correlation of a rank-one channel `h` in noise
/// shaped by the model's correlation factor A:
///
///   ρ = β·|R| / (β + σ²_η),  β = ‖A⁻¹h‖².
///
/// For white noise (A = I) this depends on the channel only through ‖h‖².
/// `rss_alpha_mag` is the unit-power cyclic feature magnitude |R| of the
/// signal, in [0, 1].
pub fn true_canonical_corr(
    h: &[Complex64],
    noise: &NoiseModel,
    rss_alpha_mag: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&rss_alpha_mag) {
        return Err(AnalysisError::FeatureMagnitudeOutOfRange { rss_alpha_mag });
    }
    if h.len() != noise.num_antennas() {
        return Err(AnalysisError::ChannelMismatch {
            channel_antennas: h.len(),
            noise_antennas: noise.num_antennas(),
        });
    }
    let beta = whitened_norm_sq(h, noise)?;
    Ok(beta * rss_alpha_mag / (beta + noise.sigma_eta2))
}

/// β = ‖A⁻¹h‖²: forward substitution against the (real, lower-triangular)
/// noise-shaping factor.
fn whitened_norm_sq(h: &[Complex64], noise: &NoiseModel) -> Result<f64> {
    let m = h.len();
    let l = &noise.chol_a;
    let mut z = vec![Complex64::ZERO; m];
    for i in 0..m {
        let diag = l[(i, i)];
        if diag.is_nan() || diag <= 0.0 {
            return Err(AnalysisError::SingularNoiseShaping { diagonal: diag });
        }
        let mut acc = h[i];
        for j in 0..i {
            acc -= l[(i, j)] * z[j];
        }
        z[i] = acc.unscale(diag);
    }
    Ok(z.iter().map(|v| v.norm_sqr()).sum())
}

/// Detection probability of the eigenvalue detector for a known channel:
/// P_D = 1 − F_{χ'²}(γ; k, m·ρ²).
pub fn pd_fixed_channel(
    gamma: f64,
    num_antennas: usize,
    n_samples: usize,
    rho: f64,
    conjugate: bool,
) -> Result<f64> {
    let h1 = H1Model::new(num_antennas, n_samples, rho, conjugate)?;
    Ok(1.0 - noncentral_chi2_cdf(gamma, h1.k_dof, h1.delta2)?)
}

/// An averaged detection probability and the uncertainty of the estimate
/// (zero for the deterministic quadrature path).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Detection probability averaged over Rayleigh fading, conjugate-variant
/// degrees of freedom.
///
/// For spatially white noise the channel-norm density is Gamma(M, 1) and the
/// average is an adaptive quadrature with absolute tolerance 1e−6 (the
/// returned `std_error` is 0). For correlated noise β = ‖A⁻¹h‖² has no
/// closed-form density and the average runs [`RAYLEIGH_MC_DRAWS`] Monte
/// Carlo draws of h on a fixed stream, reporting the estimator's standard
/// error.
pub fn pd_rayleigh(
    gamma: f64,
    n_samples: usize,
    rss_alpha_mag: f64,
    noise: &NoiseModel,
) -> Result<PdEstimate> {
    if noise.rho_s == 0.0 {
        pd_rayleigh_quadrature(gamma, n_samples, rss_alpha_mag, noise)
    } else {
        pd_rayleigh_mc(
            gamma,
            n_samples,
            rss_alpha_mag,
            noise,
            RAYLEIGH_MC_DRAWS,
            RAYLEIGH_MC_SEED,
        )
    }
}

fn validate_fading_inputs(
    n_samples: usize,
    rss_alpha_mag: f64,
    noise: &NoiseModel,
) -> Result<(usize, usize, f64)> {
    let m_ant = noise.num_antennas();
    if !(0.0..=1.0).contains(&rss_alpha_mag) {
        return Err(AnalysisError::FeatureMagnitudeOutOfRange { rss_alpha_mag });
    }
    if n_samples <= m_ant + 1 {
        return Err(AnalysisError::TooFewSamples {
            n_samples,
            num_antennas: m_ant,
        });
    }
    let k_dof = null_dof(m_ant, true);
    let m_scale = (n_samples - m_ant - 1) as f64;
    Ok((m_ant, k_dof, m_scale))
}

fn pd_at_beta(
    beta: f64,
    gamma: f64,
    k_dof: usize,
    m_scale: f64,
    rss_alpha_mag: f64,
    sigma_eta2: f64,
) -> Result<f64> {
    let rho = beta * rss_alpha_mag / (beta + sigma_eta2);
    let delta2 = m_scale * rho * rho;
    Ok(1.0 - noncentral_chi2_cdf(gamma, k_dof, delta2)?)
}

fn pd_rayleigh_quadrature(
    gamma: f64,
    n_samples: usize,
    rss_alpha_mag: f64,
    noise: &NoiseModel,
) -> Result<PdEstimate> {
    let (m_ant, k_dof, m_scale) = validate_fading_inputs(n_samples, rss_alpha_mag, noise)?;
    // ‖h‖² is Gamma(M, 1) = χ²_{2M}/2; truncate where the tail mass is
    // negligible against the tolerance (the integrand is bounded by 1)
    let upper = chi2_quantile(1.0 - BETA_TAIL, 2 * m_ant)? / 2.0;
    let ln_gamma_m = ln_gamma(m_ant as f64);
    let integrand = |beta: f64| -> Result<f64> {
        let pd = pd_at_beta(beta, gamma, k_dof, m_scale, rss_alpha_mag, noise.sigma_eta2)?;
        let ln_density = if beta > 0.0 {
            (m_ant as f64 - 1.0) * beta.ln() - beta - ln_gamma_m
        } else if m_ant == 1 {
            0.0
        } else {
            f64::NEG_INFINITY
        };
        Ok(pd * ln_density.exp())
    };
    let value = adaptive_simpson(&integrand, 0.0, upper, QUADRATURE_TOL)?;
    Ok(PdEstimate {
        value: value.clamp(0.0, 1.0),
        std_error: 0.0,
    })
}

/// Monte Carlo fading average: draw h ~ CN(0, I_M), whiten against the noise
/// model, evaluate the fixed-channel law, and average. Deterministic for a
/// given seed.
pub fn pd_rayleigh_mc(
    gamma: f64,
    n_samples: usize,
    rss_alpha_mag: f64,
    noise: &NoiseModel,
    draws: usize,
    seed: u64,
) -> Result<PdEstimate> {
    let (m_ant, k_dof, m_scale) = validate_fading_inputs(n_samples, rss_alpha_mag, noise)?;
    if draws == 0 {
        return Err(AnalysisError::NoDraws);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut h = vec![Complex64::ZERO; m_ant];
    for _ in 0..draws {
        for slot in h.iter_mut() {
            *slot = standard_complex(&mut rng);
        }
        let beta = whitened_norm_sq(&h, noise)?;
        let pd = pd_at_beta(beta, gamma, k_dof, m_scale, rss_alpha_mag, noise.sigma_eta2)?;
        sum += pd;
        sum_sq += pd * pd;
    }
    let n = draws as f64;
    let value = sum / n;
    let var = ((sum_sq - n * value * value) / (n - 1.0)).max(0.0);
    Ok(PdEstimate {
        value,
        std_error: (var / n).sqrt(),
    })
}

fn simpson_rule(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let fa = f(a)?;
    let fm = f(m)?;
    let fb = f(b)?;
    let whole = simpson_rule(a, b, fa, fm, fb);
    simpson_refine(f, a, b, fa, fm, fb, whole, tol, QUADRATURE_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_refine<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = simpson_rule(a, m, fa, flm, fm);
    let right = simpson_rule(m, b, fm, frm, fb);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol {
        return Ok(left + right + err / 15.0);
    }
    if depth == 0 {
        return Err(AnalysisError::QuadratureNotConverged {
            interval: (a, b),
            error_estimate: err.abs() / 15.0,
        });
    }
    Ok(simpson_refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// One-sample Kolmogorov-Smirnov distance sup|F̂(x) − F(x)| between sorted
/// samples and a reference CDF.
pub fn ks_statistic<F>(sorted_samples: &[f64], cdf: F) -> f64
where
    F: Fn(f64) -> f64,
{
    assert!(!sorted_samples.is_empty(), "KS distance needs samples");
    let n = sorted_samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted_samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i as f64 + 1.0) / n - f);
    }
    d
}

/// Two-sample Kolmogorov-Smirnov distance between two sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "KS distance needs samples");
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        let fa = i as f64 / a.len() as f64;
        let fb = j as f64 / b.len() as f64;
        d = d.max((fa - fb).abs());
    }
    d
}

/// Asymptotic significance of a KS distance: the probability of a distance
/// at least this large under the null. `n_eff` is the sample count for the
/// one-sample test, n·m/(n+m) for the two-sample test.
pub fn ks_significance(d: f64, n_eff: f64) -> f64 {
    let sqrt_n = n_eff.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-12 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
