//! Flat-fading channels, spatially correlated noise, and SNR bookkeeping.
//!
//! A received multi-antenna frame is x(n) = h·s(n) + η(n) under H1 and pure
//! noise under H0, with one channel vector h per frame (quasi-static fading)
//! and zero-mean circularly symmetric complex Gaussian noise. Noise may be
//! correlated across antennas with an exponential spatial profile; its
//! covariance is σ²_η·A·A^H where A is the unit-diagonal Cholesky factor kept
//! in [`NoiseModel`].

use crate::matstats::{IQFrame, MatError};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

pub type Result<T> = std::result::Result<T, ChannelError>;

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelError {
    /// An operation was asked for a zero-antenna configuration.
    NoAntennas,
    /// Spatial correlation outside [0, 1); ρ_s = 1 makes the noise
    /// covariance singular and is rejected rather than special-cased.
    InvalidSpatialCorrelation { rho_s: f64 },
    /// Negative or non-finite noise power.
    InvalidNoisePower { sigma_eta2: f64 },
    /// Channel vector and noise model disagree on the antenna count.
    DimensionMismatch {
        channel_antennas: usize,
        noise_antennas: usize,
    },
    /// The signal stream is shorter than the requested frame.
    SoiTooShort {
        stream_len: usize,
        frame_len: usize,
    },
    /// The synthesized frame violates a frame invariant.
    Frame(MatError),
}

impl fmt::Display for ChannelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelError::NoAntennas => write!(f, "at least one antenna is required"),
            ChannelError::InvalidSpatialCorrelation { rho_s } => {
                write!(f, "spatial correlation {rho_s} is outside [0, 1)")
            }
            ChannelError::InvalidNoisePower { sigma_eta2 } => {
                write!(f, "noise power {sigma_eta2} is not a finite non-negative number")
            }
            ChannelError::DimensionMismatch {
                channel_antennas,
                noise_antennas,
            } => write!(
                f,
                "channel has {channel_antennas} antennas but noise model has {noise_antennas}"
            ),
            ChannelError::SoiTooShort {
                stream_len,
                frame_len,
            } => write!(
                f,
                "signal stream of {stream_len} samples cannot fill a frame of {frame_len}"
            ),
            ChannelError::Frame(e) => write!(f, "synthesized frame is invalid: {e}"),
        }
    }
}

impl std::error::Error for ChannelError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            ChannelError::Frame(e) => Some(e),
            _ => None,
        }
    }
}

impl From<MatError> for ChannelError {
    fn from(e: MatError) -> Self {
        ChannelError::Frame(e)
    }
}

/// How the channel vector was produced; SNR bookkeeping depends on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelModel {
    /// Deterministic h, known to the experimenter.
    Fixed,
    /// Per-antenna i.i.d. Rayleigh magnitude with uniform phase,
    /// E[|h_k|²] = 1, redrawn once per frame.
    RayleighIid,
}

/// One flat-fading channel vector h = [r₁e^{jθ₁}, …, r_M e^{jθ_M}]ᵀ.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<Complex64>,
    pub model: ChannelModel,
}

impl ChannelRealization {
    /// A deterministic channel with the given per-antenna gains.
    pub fn fixed(h: Vec<Complex64>) -> Self {
        ChannelRealization {
            h,
            model: ChannelModel::Fixed,
        }
    }

    pub fn num_antennas(&self) -> usize {
        self.h.len()
    }

    /// ‖h‖², the instantaneous channel energy.
    pub fn energy(&self) -> f64 {
        self.h.iter().map(|hk| hk.norm_sqr()).sum()
    }
}

/// Draw an i.i.d. Rayleigh-fading channel: each component is a circularly
/// symmetric complex Gaussian with E[|h_k|²] = 1, i.e. Rayleigh magnitude and
/// uniform phase. ‖h‖² then follows a Gamma(M, 1) law (the χ²_{2M} family in
/// its unit-mean-per-component scaling).
pub fn draw_rayleigh<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Result<ChannelRealization> {
    if m == 0 {
        return Err(ChannelError::NoAntennas);
    }
    let h = (0..m).map(|_| standard_complex(rng)).collect();
    Ok(ChannelRealization {
        h,
        model: ChannelModel::RayleighIid,
    })
}

/// Gaussian antenna noise with exponential spatial correlation: covariance
/// R_ηη = σ²_η·C with C_ij = ρ_s^{|i−j|}, kept with its unit-diagonal
/// Cholesky factor A (C = A·Aᴴ) so correlated noise can be synthesized and
/// whitened cheaply.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub sigma_eta2: f64,
    pub rho_s: f64,
    /// Lower-triangular real factor of the unit-diagonal correlation matrix.
    pub chol_a: DMatrix<f64>,
}

impl NoiseModel {
    /// Spatially white noise of the given power on `m` antennas.
    pub fn white(sigma_eta2: f64, m: usize) -> Result<Self> {
        spatial_cholesky(0.0, sigma_eta2, m)
    }

    pub fn num_antennas(&self) -> usize {
        self.chol_a.nrows()
    }
}

/// Noise power σ²_η that realizes the requested average per-antenna SNR:
/// E{hᴴh} / E{ηᴴη} = 10^{snr/10} with E{ηᴴη} = M·σ²_η. A Rayleigh channel
/// contributes its expectation E{hᴴh} = M; a fixed channel contributes its
/// actual ‖h‖².
pub fn snr_to_noise_power(snr_db: f64, channel: &ChannelRealization) -> Result<f64> {
    let m = channel.num_antennas();
    if m == 0 {
        return Err(ChannelError::NoAntennas);
    }
    let channel_energy = match channel.model {
        ChannelModel::RayleighIid => m as f64,
        ChannelModel::Fixed => channel.energy(),
    };
    Ok(channel_energy / (m as f64 * 10f64.powf(snr_db / 10.0)))
}

/// Build the [`NoiseModel`] for spatial correlation ρ_s on `m` antennas:
/// Toeplitz correlation C_ij = ρ_s^{|i−j|} and its Cholesky factor.
/// ρ_s = 0 yields the identity factor (spatially white noise).
pub fn spatial_cholesky(rho_s: f64, sigma_eta2: f64, m: usize) -> Result<NoiseModel> {
    if m == 0 {
        return Err(ChannelError::NoAntennas);
    }
    if !(0.0..1.0).contains(&rho_s) {
        return Err(ChannelError::InvalidSpatialCorrelation { rho_s });
    }
    if !sigma_eta2.is_finite() || sigma_eta2 < 0.0 {
        return Err(ChannelError::InvalidNoisePower { sigma_eta2 });
    }
    let corr = DMatrix::from_fn(m, m, |i, j| rho_s.powi((i as i32 - j as i32).abs()));
    let chol = nalgebra::linalg::Cholesky::new(corr)
        .expect("exponential correlation matrix is positive definite for 0 <= rho_s < 1");
    Ok(NoiseModel {
        sigma_eta2,
        rho_s,
        chol_a: chol.l(),
    })
}

/// Synthesize one received frame of `n` samples: x(n) = h·s(n) + η(n) when a
/// signal stream is given, x(n) = η(n) otherwise. Noise is η = σ_η·A·w with
/// w i.i.d. standard circular complex Gaussian, so its covariance matches the
/// noise model exactly in expectation.
///
/// The RNG consumption is identical whether or not a signal is present
/// (M·n standard complex draws), so paired H0/H1 frames can share a seed.
pub fn synthesize_frame<R: Rng + ?Sized>(
    soi: Option<&[f64]>,
    channel: &ChannelRealization,
    noise: &NoiseModel,
    n: usize,
    sample_period_s: f64,
    rng: &mut R,
) -> Result<IQFrame> {
    let m = channel.num_antennas();
    if m == 0 {
        return Err(ChannelError::NoAntennas);
    }
    if noise.num_antennas() != m {
        return Err(ChannelError::DimensionMismatch {
            channel_antennas: m,
            noise_antennas: noise.num_antennas(),
        });
    }
    if let Some(stream) = soi {
        if stream.len() < n {
            return Err(ChannelError::SoiTooShort {
                stream_len: stream.len(),
                frame_len: n,
            });
        }
    }

    let sigma = noise.sigma_eta2.sqrt();
    let a = &noise.chol_a;
    let mut samples = DMatrix::zeros(m, n);
    let mut w = vec![Complex64::ZERO; m];
    for col in 0..n {
        for wk in w.iter_mut() {
            *wk = standard_complex(rng);
        }
        for i in 0..m {
            let mut eta = Complex64::ZERO;
            for j in 0..=i {
                eta += a[(i, j)] * w[j];
            }
            let mut x = sigma * eta;
            if let Some(stream) = soi {
                x += channel.h[i] * stream[col];
            }
            samples[(i, col)] = x;
        }
    }
    Ok(IQFrame::new(samples, sample_period_s)?)
}

/// Draw an SNR from the uniform uncertainty density on
/// [mean − Δ, mean + Δ] dB.
pub fn draw_uncertain_snr<R: Rng + ?Sized>(
    mean_snr_db: f64,
    delta_db: f64,
    rng: &mut R,
) -> f64 {
    assert!(delta_db >= 0.0, "uncertainty half-width must be non-negative");
    mean_snr_db + (2.0 * rng.random::<f64>() - 1.0) * delta_db
}

/// One draw of a unit-variance circularly symmetric complex Gaussian.
pub(crate) fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * FRAC_1_SQRT_2
}
