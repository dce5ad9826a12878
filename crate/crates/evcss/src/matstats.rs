//! Numerical kernel: covariance estimators, canonical-correlation
//! eigenvalues, and chi-square distribution functions.
//!
//! The detection statistic rests on the squared canonical correlations
//! between a frame x(n) and its lagged, cyclically frequency-shifted copy.
//! Those are the eigenvalues of R̂ = R̂_xx⁻¹·R̂ᵅ·R̂_xx⁻¹·R̂ᵅᴴ, computed here by
//! whitening with the Cholesky factor of R̂_xx and taking singular values,
//! which keeps them real and non-negative by construction.

use crate::signals::CyclicFeature;
use nalgebra::DMatrix;
use num_complex::Complex64;
use statrs::function::gamma::{gamma_lr, ln_gamma};
use std::f64::consts::TAU;
use std::fmt;

/// Condition-number guard on R̂_xx: beyond this the whitening step would
/// manufacture canonical correlations of order 1 out of roundoff, so the
/// computation fails loudly instead.
pub const MAX_RXX_CONDITION: f64 = 1e12;

/// Squared canonical correlations are clamped to [0, 1 − 1e−12] so that
/// λ = Π(1 − μ²) never reaches log(0) for degenerate noiseless inputs.
pub const MU_SQ_CEILING: f64 = 1.0 - 1e-12;

/// Maximum number of Poisson-mixture terms for the non-central chi-square
/// CDF. The mixture needs ~δ²/2 + O(√δ²) terms, so this covers δ² well into
/// the tens of thousands before reporting non-convergence.
const MAX_MIXTURE_TERMS: usize = 20_000;

/// Relative Poisson mass allowed to remain unaccounted when the mixture is
/// truncated.
const MIXTURE_TAIL: f64 = 1e-14;

pub type Result<T> = std::result::Result<T, MatError>;

#[derive(Debug, Clone, PartialEq)]
pub enum MatError {
    /// Frame with zero antennas or zero samples.
    EmptyFrame,
    /// Frame too short for the statistic scale m = N − M − 1 to be positive.
    FrameTooShort { m: usize, n: usize },
    /// Lag leaves fewer than two samples in the estimation window.
    LagTooLarge { tau0: usize, n: usize },
    /// Covariance matrices of inconsistent shape.
    ShapeMismatch {
        rxx: (usize, usize),
        rxx_alpha: (usize, usize),
    },
    /// R̂_xx is singular or its condition estimate exceeds the guard.
    IllConditioned { condition: f64 },
    /// A squared canonical correlation came out non-finite; the input pair
    /// is numerically broken.
    CorrelationOutOfRange { mu_sq: f64 },
    /// Argument outside the domain of a distribution function.
    DomainError { name: &'static str, value: f64 },
    /// The Poisson-mixture series did not absorb its tail within the term
    /// cap.
    SeriesNotConverged { terms: usize },
}

impl fmt::Display for MatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatError::EmptyFrame => write!(f, "frame has no antennas or no samples"),
            MatError::FrameTooShort { m, n } => {
                write!(f, "frame of {n} samples on {m} antennas needs N > M + 1")
            }
            MatError::LagTooLarge { tau0, n } => {
                write!(f, "lag {tau0} leaves no estimation window in {n} samples")
            }
            MatError::ShapeMismatch { rxx, rxx_alpha } => write!(
                f,
                "covariance shapes disagree: rxx is {}x{}, rxx_alpha is {}x{}",
                rxx.0, rxx.1, rxx_alpha.0, rxx_alpha.1
            ),
            MatError::IllConditioned { condition } => write!(
                f,
                "sample covariance condition estimate {condition:.3e} exceeds {MAX_RXX_CONDITION:.0e}"
            ),
            MatError::CorrelationOutOfRange { mu_sq } => write!(
                f,
                "squared canonical correlation {mu_sq} is not finite"
            ),
            MatError::DomainError { name, value } => {
                write!(f, "argument {name} = {value} is out of domain")
            }
            MatError::SeriesNotConverged { terms } => write!(
                f,
                "non-central chi-square series still has mass after {terms} terms"
            ),
        }
    }
}

impl std::error::Error for MatError {}

/// One multi-antenna sample block: M antenna rows by N sample columns, plus
/// the sample period that turns column indices into time.
#[derive(Debug, Clone, PartialEq)]
pub struct IQFrame {
    pub samples: DMatrix<Complex64>,
    pub sample_period_s: f64,
}

impl IQFrame {
    /// Wrap a sample matrix, enforcing M ≥ 1 and N > M + 1 (the statistic
    /// scale m = N − M − 1 must be positive).
    pub fn new(samples: DMatrix<Complex64>, sample_period_s: f64) -> Result<Self> {
        let (m, n) = samples.shape();
        if m == 0 || n == 0 {
            return Err(MatError::EmptyFrame);
        }
        if n <= m + 1 {
            return Err(MatError::FrameTooShort { m, n });
        }
        Ok(IQFrame {
            samples,
            sample_period_s,
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.samples.nrows()
    }

    pub fn num_samples(&self) -> usize {
        self.samples.ncols()
    }
}

/// The two sample matrices the test consumes: the plain covariance R̂_xx and
/// the cyclic covariance R̂ᵅ at (α₀, τ₀), with the variant that produced the
/// latter.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePair {
    pub rxx: DMatrix<Complex64>,
    pub rxx_alpha: DMatrix<Complex64>,
    pub tau0: usize,
    pub alpha0_hz: f64,
    pub conjugate: bool,
}

impl CovariancePair {
    /// Measure both covariances of a frame at the feature's (α₀, τ₀).
    pub fn from_frame(frame: &IQFrame, feature: &CyclicFeature) -> Result<Self> {
        let rxx = lag_covariance(frame, 0)?;
        let rxx_alpha = cyclic_covariance(
            frame,
            feature.alpha0_hz,
            feature.tau0_samples,
            feature.conjugate,
        )?;
        Ok(CovariancePair {
            rxx,
            rxx_alpha,
            tau0: feature.tau0_samples,
            alpha0_hz: feature.alpha0_hz,
            conjugate: feature.conjugate,
        })
    }
}

/// Sample covariance at lag τ₀: (1/(N−1−τ₀)) Σ_{n=τ₀}^{N−1} x(n)·xᴴ(n−τ₀).
/// Hermitian positive semi-definite for τ₀ = 0.
pub fn lag_covariance(frame: &IQFrame, tau0: usize) -> Result<DMatrix<Complex64>> {
    cyclic_covariance(frame, 0.0, tau0, false)
}

/// Cyclic covariance at cyclic frequency α₀ and lag τ₀:
///
///   (1/(N−1−τ₀)) Σ_{n=τ₀}^{N−1} x(n)·c(x(n−τ₀))ᵀ·e^{−j2πα₀ n T_s}
///
/// where `conjugate = false` conjugates the lagged vector (the xᴴ form) and
/// `conjugate = true` uses the plain transpose. At α₀ = 0, τ₀ = 0 the
/// non-conjugate variant is exactly [`lag_covariance`].
pub fn cyclic_covariance(
    frame: &IQFrame,
    alpha0_hz: f64,
    tau0: usize,
    conjugate: bool,
) -> Result<DMatrix<Complex64>> {
    let m = frame.num_antennas();
    let n = frame.num_samples();
    if tau0 + 2 >= n {
        return Err(MatError::LagTooLarge { tau0, n });
    }

    let nu = alpha0_hz * frame.sample_period_s;
    let step = Complex64::from_polar(1.0, -TAU * nu);
    let mut phasor = Complex64::from_polar(1.0, -TAU * nu * tau0 as f64);
    let mut acc = DMatrix::<Complex64>::zeros(m, m);
    let x = &frame.samples;
    for col in tau0..n {
        for i in 0..m {
            let xi = x[(i, col)] * phasor;
            for j in 0..m {
                let lag = x[(j, col - tau0)];
                acc[(i, j)] += xi * if conjugate { lag } else { lag.conj() };
            }
        }
        phasor *= step;
        if (col - tau0) % 1024 == 1023 {
            phasor = phasor.unscale(phasor.norm());
        }
    }
    Ok(acc.unscale((n - 1 - tau0) as f64))
}

/// Squared canonical correlations μ² between a frame and its shifted copy:
/// the eigenvalues of R̂_xx⁻¹·R̂ᵅ·R̂_xx⁻¹·R̂ᵅᴴ, sorted descending and clamped
/// to [0, 1 − 1e−12].
///
/// R̂_xx is symmetrized, Cholesky-factored (R̂ = L·Lᴴ), and the eigenvalues
/// are obtained as the squared singular values of the whitened matrix
/// K = L⁻¹·R̂ᵅ·L⁻ᴴ; the similarity transform keeps the spectrum while
/// guaranteeing real non-negative outputs.
///
/// The population quantities are bounded by one, but nothing constrains the
/// finite-sample estimates: a short frame at high SNR routinely pushes an
/// estimate past one. Such values pin to the ceiling, where the likelihood
/// factor (1 − μ²) saturates and the statistic reports overwhelming
/// correlation.
pub fn ccst_eigenvalues(pair: &CovariancePair) -> Result<Vec<f64>> {
    let m = pair.rxx.nrows();
    if !pair.rxx.is_square() || pair.rxx_alpha.shape() != (m, m) {
        return Err(MatError::ShapeMismatch {
            rxx: pair.rxx.shape(),
            rxx_alpha: pair.rxx_alpha.shape(),
        });
    }

    // purge accumulation asymmetry before factoring
    let rxx = (&pair.rxx + pair.rxx.adjoint()).unscale(2.0);

    let sv = rxx.clone().svd(false, false).singular_values;
    let (s_max, s_min) = (sv.max(), sv.min());
    let condition = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if !condition.is_finite() || condition > MAX_RXX_CONDITION {
        return Err(MatError::IllConditioned { condition });
    }
    let chol = nalgebra::linalg::Cholesky::new(rxx)
        .ok_or(MatError::IllConditioned { condition })?;
    let l = chol.l();

    // K = L⁻¹·R̂ᵅ·L⁻ᴴ via two triangular solves
    let y = l
        .solve_lower_triangular(&pair.rxx_alpha)
        .ok_or(MatError::IllConditioned { condition })?;
    let k = l
        .solve_lower_triangular(&y.adjoint())
        .ok_or(MatError::IllConditioned { condition })?
        .adjoint();

    let mut mu_sq: Vec<f64> = k
        .svd(false, false)
        .singular_values
        .iter()
        .map(|s| s * s)
        .collect();
    for v in &mut mu_sq {
        if !v.is_finite() {
            return Err(MatError::CorrelationOutOfRange { mu_sq: *v });
        }
        *v = v.clamp(0.0, MU_SQ_CEILING);
    }
    mu_sq.sort_by(|a, b| b.total_cmp(a));
    Ok(mu_sq)
}

/// Central chi-square CDF with `k_dof` degrees of freedom (regularized lower
/// incomplete gamma).
pub fn chi2_cdf(x: f64, k_dof: usize) -> Result<f64> {
    check_dof(k_dof)?;
    if !x.is_finite() || x < 0.0 {
        return Err(MatError::DomainError { name: "x", value: x });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma_lr(k_dof as f64 / 2.0, x / 2.0))
}

/// Chi-square quantile by bracketed bisection on the CDF;
/// |CDF(quantile(p)) − p| < 1e−9.
pub fn chi2_quantile(p: f64, k_dof: usize) -> Result<f64> {
    check_dof(k_dof)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(MatError::DomainError { name: "p", value: p });
    }
    let k = k_dof as f64;
    let mut lo = 0.0;
    let mut hi = k + 10.0 * (2.0 * k).sqrt() + 10.0;
    while chi2_cdf(hi, k_dof)? < p {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(MatError::DomainError { name: "p", value: p });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(mid, k_dof)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Non-central chi-square CDF as a Poisson(δ²/2) mixture of central terms,
/// expanded outward from the modal weight so large non-centralities neither
/// underflow nor truncate early. Absolute error below 1e−10.
pub fn noncentral_chi2_cdf(x: f64, k_dof: usize, delta2: f64) -> Result<f64> {
    check_dof(k_dof)?;
    if !x.is_finite() || x < 0.0 {
        return Err(MatError::DomainError { name: "x", value: x });
    }
    if !delta2.is_finite() || delta2 < 0.0 {
        return Err(MatError::DomainError {
            name: "delta2",
            value: delta2,
        });
    }
    if delta2 == 0.0 {
        return chi2_cdf(x, k_dof);
    }
    if x == 0.0 {
        return Ok(0.0);
    }

    let lambda = 0.5 * delta2;
    let half_x = 0.5 * x;
    let half_k = 0.5 * k_dof as f64;
    let mode = lambda.floor();
    let weight_at = |j: f64| (j * lambda.ln() - lambda - ln_gamma(j + 1.0)).exp();

    // downward sweep covers [0, mode] completely
    let mut total = 0.0;
    let mut mass = 0.0;
    let mut w = weight_at(mode);
    let mut j = mode;
    while j >= 0.0 {
        total += w * gamma_lr(half_k + j, half_x);
        mass += w;
        w *= j / lambda;
        j -= 1.0;
    }

    // upward sweep stops once the remaining Poisson mass is negligible,
    // either by accounting or because the weights have decayed past it
    let mut terms = mode as usize + 1;
    let mut w_up = weight_at(mode);
    let mut j_up = mode;
    while mass < 1.0 - MIXTURE_TAIL && !(j_up > lambda && w_up < MIXTURE_TAIL) {
        if terms >= MAX_MIXTURE_TERMS {
            return Err(MatError::SeriesNotConverged { terms });
        }
        w_up *= lambda / (j_up + 1.0);
        j_up += 1.0;
        total += w_up * gamma_lr(half_k + j_up, half_x);
        mass += w_up;
        terms += 1;
    }
    Ok(total.clamp(0.0, 1.0))
}

fn check_dof(k_dof: usize) -> Result<()> {
    if k_dof == 0 {
        return Err(MatError::DomainError {
            name: "k_dof",
            value: 0.0,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{synthesize_frame, ChannelRealization, NoiseModel};
    use crate::signals::{generate_bpsk, SignalSpec};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn test_rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn noise_frame(sigma2: f64, m: usize, n: usize, seed: u64) -> IQFrame {
        let channel = ChannelRealization {
            h: vec![Complex64::ZERO; m],
            model: crate::channel::ChannelModel::RayleighIid,
        };
        let noise = NoiseModel::white(sigma2, m).unwrap();
        synthesize_frame(None, &channel, &noise, n, 1.0 / 320e3, &mut test_rng(seed)).unwrap()
    }

    fn feature_160k(conjugate: bool) -> CyclicFeature {
        CyclicFeature {
            alpha0_hz: 160e3,
            tau0_samples: 0,
            conjugate,
            rss_alpha_mag: 1.0,
        }
    }

    #[test]
    fn frame_invariants_are_enforced() {
        assert!(matches!(
            IQFrame::new(DMatrix::zeros(0, 8), 1.0),
            Err(MatError::EmptyFrame)
        ));
        assert!(matches!(
            IQFrame::new(DMatrix::zeros(2, 3), 1.0),
            Err(MatError::FrameTooShort { .. })
        ));
        assert!(IQFrame::new(DMatrix::zeros(2, 4), 1.0).is_ok());
    }

    #[test]
    fn white_noise_covariance_is_diagonal() {
        let frame = noise_frame(10.0, 2, 100_000, 31);
        let rxx = lag_covariance(&frame, 0).unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(rxx[(i, i)].re, 10.0, epsilon = 0.3);
            assert!(rxx[(i, i)].im.abs() < 1e-10);
        }
        assert!(rxx[(0, 1)].norm() < 0.3);
        assert!(rxx[(1, 0)].norm() < 0.3);
    }

    #[test]
    fn constant_frame_gives_rank_one_covariance() {
        let n = 1000;
        let samples = DMatrix::from_element(2, n, Complex64::ONE);
        let frame = IQFrame::new(samples, 1.0 / 320e3).unwrap();
        let rxx = lag_covariance(&frame, 0).unwrap();
        let want = n as f64 / (n - 1) as f64;
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(rxx[(i, j)].re, want, epsilon = 1e-12);
                assert_abs_diff_eq!(rxx[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn single_antenna_covariance_is_the_power_estimate() {
        let frame = noise_frame(2.0, 1, 5000, 32);
        let rxx = lag_covariance(&frame, 0).unwrap();
        let n = frame.num_samples();
        let manual: f64 = frame.samples.iter().map(|x| x.norm_sqr()).sum::<f64>()
            / (n - 1) as f64;
        assert_eq!(rxx.shape(), (1, 1));
        assert_abs_diff_eq!(rxx[(0, 0)].re, manual, epsilon = 1e-12 * manual);
    }

    #[test]
    fn noise_cyclic_covariance_is_small() {
        let frame = noise_frame(10.0, 2, 100_000, 33);
        let r = cyclic_covariance(&frame, 160e3, 0, true).unwrap();
        let max = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(max < 0.15, "max entry {max}");
    }

    #[test]
    fn noiseless_bpsk_cyclic_covariance_is_the_feature_times_channel_outer_product() {
        // constant-modulus symbols make the τ = 0 doubled-carrier product
        // deterministic: every entry is |R| ≈ 1.0 for h = [1, 1]
        let spec = SignalSpec::default();
        let soi = generate_bpsk(&spec, 10_000, &mut test_rng(34)).unwrap();
        let channel = ChannelRealization::fixed(vec![1.0.into(), 1.0.into()]);
        let silent = NoiseModel::white(0.0, 2).unwrap();
        let frame = synthesize_frame(
            Some(&soi),
            &channel,
            &silent,
            10_000,
            spec.sample_period_s,
            &mut test_rng(35),
        )
        .unwrap();
        let r = cyclic_covariance(&frame, 160e3, 0, true).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(r[(i, j)].re, 1.0, epsilon = 1e-3);
                assert!(r[(i, j)].im.abs() < 1e-3);
            }
        }
    }

    #[test]
    fn zero_alpha_cyclic_covariance_equals_lag_covariance() {
        let frame = noise_frame(1.0, 3, 2000, 36);
        let a = cyclic_covariance(&frame, 0.0, 0, false).unwrap();
        let b = lag_covariance(&frame, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oversized_lag_is_rejected() {
        let frame = noise_frame(1.0, 2, 16, 37);
        assert!(matches!(
            lag_covariance(&frame, 14),
            Err(MatError::LagTooLarge { .. })
        ));
        assert!(lag_covariance(&frame, 13).is_ok());
    }

    fn pair_of(rxx: DMatrix<Complex64>, rxx_alpha: DMatrix<Complex64>) -> CovariancePair {
        CovariancePair {
            rxx,
            rxx_alpha,
            tau0: 0,
            alpha0_hz: 160e3,
            conjugate: true,
        }
    }

    #[test]
    fn zero_cyclic_covariance_gives_zero_eigenvalues() {
        let pair = pair_of(DMatrix::identity(3, 3), DMatrix::zeros(3, 3));
        assert_eq!(ccst_eigenvalues(&pair).unwrap(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn diagonal_case_squares_the_entries() {
        let rxx_alpha =
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                Complex64::from(0.5),
                Complex64::ZERO,
            ]));
        let pair = pair_of(DMatrix::identity(2, 2), rxx_alpha);
        let mu_sq = ccst_eigenvalues(&pair).unwrap();
        assert_abs_diff_eq!(mu_sq[0], 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(mu_sq[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn two_by_two_case_matches_hand_determinant() {
        let rxx = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::from(2.0),
                Complex64::from(0.3),
                Complex64::from(0.3),
                Complex64::from(1.0),
            ],
        );
        let rxx_alpha = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::from(0.4),
                Complex64::from(0.1),
                Complex64::from(0.2),
                Complex64::from(0.3),
            ],
        );

        // brute-force R̂ = R⁻¹·Rα·R⁻¹·Rαᴴ with real 2×2 arithmetic
        let det = 2.0 * 1.0 - 0.3 * 0.3;
        let rinv = [[1.0 / det, -0.3 / det], [-0.3 / det, 2.0 / det]];
        let ra = [[0.4, 0.1], [0.2, 0.3]];
        let rat = [[0.4, 0.2], [0.1, 0.3]]; // real matrices: adjoint = transpose
        let mul = |a: [[f64; 2]; 2], b: [[f64; 2]; 2]| {
            let mut c = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
                }
            }
            c
        };
        let t = mul(mul(mul(rinv, ra), rinv), rat);
        let tr = t[0][0] + t[1][1];
        let dt = t[0][0] * t[1][1] - t[0][1] * t[1][0];
        let disc = (tr * tr - 4.0 * dt).sqrt();
        let want = [(tr + disc) / 2.0, (tr - disc) / 2.0];

        let mu_sq = ccst_eigenvalues(&pair_of(rxx, rxx_alpha)).unwrap();
        assert_abs_diff_eq!(mu_sq[0], want[0], epsilon = 1e-10);
        assert_abs_diff_eq!(mu_sq[1], want[1], epsilon = 1e-10);
    }

    #[test]
    fn singular_covariance_is_rejected_with_condition_estimate() {
        let rxx = DMatrix::from_element(2, 2, Complex64::ONE);
        let err = ccst_eigenvalues(&pair_of(rxx, DMatrix::zeros(2, 2))).unwrap_err();
        match err {
            MatError::IllConditioned { condition } => assert!(condition > MAX_RXX_CONDITION),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn perfect_correlation_is_clamped_below_one() {
        let rxx_alpha = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::ONE,
            Complex64::ZERO,
        ]));
        let mu_sq = ccst_eigenvalues(&pair_of(DMatrix::identity(2, 2), rxx_alpha)).unwrap();
        assert_eq!(mu_sq[0], MU_SQ_CEILING);
    }

    #[test]
    fn overshooting_estimates_saturate_at_the_ceiling() {
        let rxx_alpha = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::from(1.2),
            Complex64::from(0.3),
        ]));
        let mu_sq = ccst_eigenvalues(&pair_of(DMatrix::identity(2, 2), rxx_alpha)).unwrap();
        assert_eq!(mu_sq[0], MU_SQ_CEILING);
        assert!((mu_sq[1] - 0.09).abs() < 1e-12);
    }

    #[test]
    fn covariance_pair_uses_the_feature_definition() {
        let frame = noise_frame(1.0, 2, 4096, 38);
        let pair = CovariancePair::from_frame(&frame, &feature_160k(true)).unwrap();
        assert_eq!(pair.rxx, lag_covariance(&frame, 0).unwrap());
        assert_eq!(
            pair.rxx_alpha,
            cyclic_covariance(&frame, 160e3, 0, true).unwrap()
        );
        assert!(pair.conjugate);
    }

    #[test]
    fn chi2_quantile_matches_reference_value() {
        let q = chi2_quantile(0.9, 6).unwrap();
        assert_abs_diff_eq!(q, 10.6446, epsilon = 1e-3);
        let p = chi2_cdf(q, 6).unwrap();
        assert_abs_diff_eq!(p, 0.9, epsilon = 1e-9);
    }

    #[test]
    fn zero_noncentrality_reduces_to_central() {
        for x in [0.0, 0.5, 3.0, 10.0, 42.0] {
            assert_eq!(
                noncentral_chi2_cdf(x, 6, 0.0).unwrap(),
                chi2_cdf(x, 6).unwrap()
            );
        }
    }

    #[test]
    fn chi2_boundaries() {
        assert_eq!(chi2_cdf(0.0, 4).unwrap(), 0.0);
        let tiny = chi2_quantile(1e-12, 4).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-4, "quantile {tiny}");
        assert!(chi2_quantile(0.0, 4).is_err());
        assert!(chi2_quantile(1.0, 4).is_err());
        assert!(chi2_cdf(-1.0, 4).is_err());
        assert!(chi2_cdf(1.0, 0).is_err());
        assert!(noncentral_chi2_cdf(1.0, 4, -0.5).is_err());
    }

    #[test]
    fn noncentral_cdf_handles_large_noncentrality() {
        // mixture mean is δ²/2 = 600 terms in; the modal expansion must not
        // underflow
        let k = 6;
        let delta2 = 1200.0;
        let mid = noncentral_chi2_cdf(delta2 + k as f64, k, delta2).unwrap();
        assert!(mid > 0.4 && mid < 0.6, "central mass {mid}");
        let lo = noncentral_chi2_cdf(delta2 * 0.5, k, delta2).unwrap();
        let hi = noncentral_chi2_cdf(delta2 * 1.5, k, delta2).unwrap();
        assert!(lo < 1e-6, "left tail {lo}");
        assert!(hi > 1.0 - 1e-6, "right tail {hi}");
    }

    #[test]
    fn noncentral_cdf_is_monotone_on_a_spot_grid() {
        let xs = [0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0];
        let deltas = [0.0, 0.5, 2.0, 8.0, 32.0];
        for k in [4, 6, 12] {
            for d in deltas {
                let mut prev = 0.0;
                for x in xs {
                    let p = noncentral_chi2_cdf(x, k, d).unwrap();
                    assert!(p >= prev, "CDF not monotone in x at k={k} d={d} x={x}");
                    prev = p;
                }
            }
            for x in xs {
                let mut prev = 1.0;
                for d in deltas {
                    let p = noncentral_chi2_cdf(x, k, d).unwrap();
                    assert!(
                        p <= prev + 1e-12,
                        "CDF not decreasing in delta2 at k={k} x={x} d={d}"
                    );
                    prev = p;
                }
            }
        }
    }
}
