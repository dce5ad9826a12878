//! Eigenvalue-based cyclostationary spectrum sensing (EV-CSS) for
//! multi-antenna receivers.
//!
//! A primary-user signal with a known cyclic frequency leaves a correlation
//! fingerprint between a received frame and its lagged, cyclically
//! frequency-shifted copy. This crate measures that fingerprint with the
//! canonical correlations of the two blocks, turns them into a test statistic
//! with a known chi-square null law, and decides "occupied / free" at a
//! constant false-alarm rate without knowing the noise power, the channel, or
//! the signal amplitude.
//!
//! What is in the box:
//!
//! - [`signals`]: rectangular-pulse passband BPSK synthesis and a direct
//!   cyclic-correlogram oracle for ground-truth cyclic features.
//! - [`channel`]: flat Rayleigh fading, spatially correlated noise synthesis,
//!   SNR bookkeeping, and the noise-uncertainty model.
//! - [`matstats`]: sample covariance and cyclic covariance of a frame, the
//!   squared canonical correlations, and (non-central) chi-square numerics.
//! - [`detectors`]: the eigenvalue detector plus three combining baselines
//!   (per-antenna sum, equal-gain, blind maximal-ratio) built on a
//!   cyclic-periodogram feature statistic.
//! - [`analysis`]: closed-form false-alarm thresholds and detection
//!   probability under fixed and Rayleigh-fading channels.
//! - [`harness`]: declarative Monte Carlo experiments, CSV output, plot
//!   script emission, and the CLI entry point.
//!
//! The `examples/` directory is the guided tour: each major capability has a
//! runnable example, from generating a waveform and reading off its cyclic
//! features to reproducing full ROC and noise-uncertainty experiments.
//!
//! ```
//! use evcss::channel::{synthesize_frame, ChannelRealization, NoiseModel};
//! use evcss::detectors::ThresholdSpec;
//! use evcss::signals::{generate_bpsk, reference_cyclic_feature, SignalSpec};
//! use rand::SeedableRng;
//! use rand_chacha::ChaCha8Rng;
//!
//! let spec = SignalSpec::default();
//! let feature = reference_cyclic_feature(&spec, 2.0 * spec.carrier_freq_hz, 0).unwrap();
//!
//! let mut rng = ChaCha8Rng::seed_from_u64(7);
//! let soi = generate_bpsk(&spec, 4000, &mut rng).unwrap();
//! let channel = ChannelRealization::fixed(vec![1.0.into(), 1.0.into()]);
//! let noise = NoiseModel::white(10.0, 2).unwrap(); // -10 dB SNR per antenna
//! let frame = synthesize_frame(
//!     Some(&soi),
//!     &channel,
//!     &noise,
//!     soi.len(),
//!     spec.sample_period_s,
//!     &mut rng,
//! )
//! .unwrap();
//!
//! let threshold = ThresholdSpec::for_false_alarm_rate(0.1, 2, feature.conjugate).unwrap();
//! let output = evcss::detectors::evcss(&frame, &feature, &threshold).unwrap();
//! assert!(output.decision); // -10 dB is an easy catch at N = 4000
//! ```

pub mod analysis;
pub mod channel;
pub mod detectors;
pub mod harness;
pub mod matstats;
pub mod signals;
