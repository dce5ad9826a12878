//! Closed-form detection probability, checked against simulation.
//!
//! The eigenvalue statistic under a present signal follows a noncentral
//! chi-square law whose noncentrality is set by the canonical correlation ρ
//! between the received frame and its lag-shifted copy. This example walks
//! the chain: ρ from the channel and noise model, P_D for a known channel
//! as the frame grows, the Rayleigh-fading average as the SNR rises, and a
//! Monte Carlo run to confirm one of the fading numbers.
//!
//! ```bash
//! cargo run -p evcss --example analytic_performance
//! ```

use evcss::analysis::{pd_fixed_channel, pd_rayleigh, threshold_cfar, true_canonical_corr};
use evcss::channel::{
    draw_rayleigh, snr_to_noise_power, spatial_cholesky, synthesize_frame, ChannelModel,
    ChannelRealization,
};
use evcss::detectors::evcss;
use evcss::signals::{generate_bpsk, reference_cyclic_feature, SignalSpec};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SignalSpec::default();
    let feature = reference_cyclic_feature(&spec, 2.0 * spec.carrier_freq_hz, 0)?;
    let m = 2;
    let target_pfa = 0.1;
    let threshold = threshold_cfar(target_pfa, m, feature.conjugate)?;
    println!(
        "M = {m}, conjugate feature |R| = {:.2}, target P_FA = {target_pfa}, γ = {:.4}",
        feature.rss_alpha_mag, threshold.gamma
    );
    println!();

    // Known channel: two unit gains at -10 dB SNR. The whitened channel
    // energy is 2 and the noise power is 20 / 2 = 10 per antenna, so
    // ρ = 2 / (2 + 10) = 1/6.
    let h = vec![Complex64::ONE; m];
    let known = ChannelRealization::fixed(h.clone());
    let snr_db = -10.0;
    let noise = spatial_cholesky(0.0, snr_to_noise_power(snr_db, &known)?, m)?;
    let rho = true_canonical_corr(&h, &noise, feature.rss_alpha_mag)?;
    println!("known channel h = [1, 1] at {snr_db} dB: ρ = {rho:.6}");
    println!("  {:>6} {:>10}", "N", "P_D");
    for n in [512, 1000, 2000, 4000] {
        let pd = pd_fixed_channel(threshold.gamma, m, n, rho, feature.conjugate)?;
        println!("  {n:>6} {pd:>10.4}");
    }
    println!();

    // Rayleigh fading: the channel energy is random, so P_D is averaged
    // over its Gamma(M, 1) law. The average SNR fixes the noise power.
    let fading_stand_in = ChannelRealization {
        h: vec![Complex64::ONE; m],
        model: ChannelModel::RayleighIid,
    };
    let n = 1000;
    println!("Rayleigh fading, N = {n}:");
    println!("  {:>9} {:>10}", "SNR (dB)", "P_D");
    for snr_db in [-15.0, -12.5, -10.0, -7.5, -5.0] {
        let noise = spatial_cholesky(0.0, snr_to_noise_power(snr_db, &fading_stand_in)?, m)?;
        let pd = pd_rayleigh(threshold.gamma, n, feature.rss_alpha_mag, &noise)?;
        println!("  {snr_db:>9} {:>10.4}", pd.value);
    }
    println!();

    // Confirm the -10 dB fading entry by simulation: draw a fresh channel
    // per frame and count detections.
    let snr_db = -10.0;
    let noise = spatial_cholesky(0.0, snr_to_noise_power(snr_db, &fading_stand_in)?, m)?;
    let analytic = pd_rayleigh(threshold.gamma, n, feature.rss_alpha_mag, &noise)?;
    let trials = 2000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut detections = 0usize;
    for _ in 0..trials {
        let channel = draw_rayleigh(m, &mut rng)?;
        let soi = generate_bpsk(&spec, n, &mut rng)?;
        let frame =
            synthesize_frame(Some(&soi), &channel, &noise, n, spec.sample_period_s, &mut rng)?;
        if evcss(&frame, &feature, &threshold)?.decision {
            detections += 1;
        }
    }
    let empirical = detections as f64 / trials as f64;
    let stderr = (empirical * (1.0 - empirical) / trials as f64).sqrt();
    println!(
        "Monte Carlo at {snr_db} dB, {trials} frames: P_D = {empirical:.4} ± {stderr:.4} \
         (analytic {:.4})",
        analytic.value
    );
    Ok(())
}
