//! Detection under a misknown noise floor.
//!
//! Thresholds are set for the nominal noise power, but each trial draws the
//! true SNR uniformly from ±Δ dB around the nominal value. Detectors whose
//! statistics normalize the noise out hold their operating point; ones that
//! lean on an absolute noise level drift. The sweep runs Δ from 0 to 3 dB
//! and compares the eigenvalue detector against the blind-MRC baseline.
//!
//! Trial counts are reduced for a quick run; `evcss noise-uncertainty`
//! runs the full-size experiment.
//!
//! ```bash
//! cargo run -p evcss --example noise_uncertainty
//! ```

use evcss::detectors::DetectorId;
use evcss::harness::{run_experiment, ExperimentConfig, ExperimentKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::NoiseUncertainty);
    cfg.n_samples = 512;
    cfg.trials = 600;
    cfg.detectors = vec![DetectorId::EvCss, DetectorId::BmrcMsdf];
    cfg.validate()?;

    println!(
        "noise uncertainty: M = {}, N = {}, nominal SNR = {} dB, fixed channel, \
         {} trials/point",
        cfg.num_antennas, cfg.n_samples, cfg.snr_db, cfg.trials
    );
    println!("true SNR per trial is uniform on [nominal - Δ, nominal + Δ]");
    println!();

    let rows = run_experiment(&cfg)?;
    println!(
        "  {:<10} {:>7} {:>9} {:>9} {:>9}",
        "detector", "Δ (dB)", "FA rate", "P_D", "± σ"
    );
    for row in &rows {
        println!(
            "  {:<10} {:>7} {:>9.4} {:>9.4} {:>9.4}",
            row.detector, row.sweep_value, row.pfa_emp, row.pd_emp, row.pd_stderr,
        );
    }
    println!();
    println!("both statistics are self-normalizing, so the false-alarm rate stays");
    println!("on target at every Δ; detection sags as Δ grows because low-SNR");
    println!("draws hurt more than high-SNR draws help. separating the two");
    println!("detectors' degradations takes the full-size run.");
    Ok(())
}
