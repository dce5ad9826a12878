//! One received frame through all four detectors.
//!
//! Synthesizes a noise-only frame and a signal-plus-noise frame at -8 dB
//! SNR, then runs the eigenvalue detector and the three feature-combining
//! baselines on both. The eigenvalue detector's threshold is analytic; the
//! baselines have no closed-form null law, so their thresholds are
//! calibrated here from a batch of noise-only frames.
//!
//! ```bash
//! cargo run -p evcss --example single_frame_detection
//! ```

use evcss::channel::{snr_to_noise_power, spatial_cholesky, synthesize_frame, ChannelRealization};
use evcss::detectors::{
    bmrc_msdf, egc_msdf, evcss, sum_msdf, DetectorId, DetectorOutput, MsdfConfig, ThresholdSpec,
};
use evcss::harness::empirical_quantile;
use evcss::matstats::IQFrame;
use evcss::signals::{generate_bpsk, reference_cyclic_feature, CyclicFeature, SignalSpec};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SignalSpec::default();
    let feature = reference_cyclic_feature(&spec, 2.0 * spec.carrier_freq_hz, 0)?;
    let msdf = MsdfConfig::default();

    let m = 2;
    let n = 4000;
    let snr_db = -8.0;
    let target_pfa = 0.1;

    // Two-antenna receiver with equal unit gains; noise power set from the
    // SNR definition against the channel energy.
    let channel = ChannelRealization::fixed(vec![Complex64::ONE; m]);
    let noise = spatial_cholesky(0.0, snr_to_noise_power(snr_db, &channel)?, m)?;
    let silent = ChannelRealization::fixed(vec![Complex64::ZERO; m]);

    // The eigenvalue threshold comes from the chi-square null law. The
    // baselines are calibrated empirically: collect their statistics on
    // noise-only frames and take the (1 - P_FA) order statistic.
    let ev_threshold = ThresholdSpec::for_false_alarm_rate(target_pfa, m, feature.conjugate)?;
    let calibration_trials = 600;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut sum_stats = Vec::with_capacity(calibration_trials);
    let mut egc_stats = Vec::with_capacity(calibration_trials);
    let mut bmrc_stats = Vec::with_capacity(calibration_trials);
    let sink = ThresholdSpec::empirical(f64::INFINITY, target_pfa);
    for _ in 0..calibration_trials {
        let frame = synthesize_frame(None, &silent, &noise, n, spec.sample_period_s, &mut rng)?;
        sum_stats.push(sum_msdf(&frame, &feature, &msdf, &sink)?.statistic);
        egc_stats.push(egc_msdf(&frame, &feature, &msdf, &sink)?.statistic);
        bmrc_stats.push(bmrc_msdf(&frame, &feature, &msdf, &sink)?.statistic);
    }
    sum_stats.sort_by(f64::total_cmp);
    egc_stats.sort_by(f64::total_cmp);
    bmrc_stats.sort_by(f64::total_cmp);
    let sum_threshold =
        ThresholdSpec::empirical(empirical_quantile(&sum_stats, target_pfa), target_pfa);
    let egc_threshold =
        ThresholdSpec::empirical(empirical_quantile(&egc_stats, target_pfa), target_pfa);
    let bmrc_threshold =
        ThresholdSpec::empirical(empirical_quantile(&bmrc_stats, target_pfa), target_pfa);

    println!(
        "M = {m}, N = {n}, SNR = {snr_db} dB, target P_FA = {target_pfa} \
         (baselines calibrated on {calibration_trials} noise frames)"
    );
    println!();

    // One frame per hypothesis, same noise stream length.
    let soi = generate_bpsk(&spec, n, &mut rng)?;
    let h0_frame = synthesize_frame(None, &silent, &noise, n, spec.sample_period_s, &mut rng)?;
    let h1_frame =
        synthesize_frame(Some(&soi), &channel, &noise, n, spec.sample_period_s, &mut rng)?;

    for (label, frame) in [("noise only", &h0_frame), ("signal present", &h1_frame)] {
        println!("{label}:");
        println!(
            "  {:<10} {:>12} {:>12} {:>10}",
            "detector", "statistic", "threshold", "decision"
        );
        let outputs = run_all(frame, &feature, &msdf, &ev_threshold, &sum_threshold,
                              &egc_threshold, &bmrc_threshold)?;
        for (out, threshold) in outputs {
            println!(
                "  {:<10} {:>12.4} {:>12.4} {:>10}",
                out.detector_id,
                out.statistic,
                threshold,
                if out.decision { "signal" } else { "quiet" }
            );
            if out.detector_id == DetectorId::EvCss {
                let mu: Vec<String> =
                    out.eigenvalues_sq.iter().map(|v| format!("{v:.4}")).collect();
                println!("             squared canonical correlations [{}]", mu.join(", "));
            }
        }
        println!();
    }
    Ok(())
}

fn run_all(
    frame: &IQFrame,
    feature: &CyclicFeature,
    msdf: &MsdfConfig,
    ev: &ThresholdSpec,
    sum: &ThresholdSpec,
    egc: &ThresholdSpec,
    bmrc: &ThresholdSpec,
) -> Result<Vec<(DetectorOutput, f64)>, Box<dyn std::error::Error>> {
    Ok(vec![
        (evcss(frame, feature, ev)?, ev.gamma),
        (sum_msdf(frame, feature, msdf, sum)?, sum.gamma),
        (egc_msdf(frame, feature, msdf, egc)?, egc.gamma),
        (bmrc_msdf(frame, feature, msdf, bmrc)?, bmrc.gamma),
    ])
}
