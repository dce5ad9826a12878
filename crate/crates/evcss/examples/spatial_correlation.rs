//! Detection with spatially correlated antenna noise.
//!
//! Antenna noise with an exponential spatial correlation profile
//! (C_ij = ρ_s^|i-j|) erodes the advantage of combining antennas: the
//! whitened channel energy β = ‖A⁻¹h‖² shrinks as ρ_s grows, and with it
//! the canonical correlation the detector keys on. The false-alarm rate is
//! unaffected, because the null law never depended on the noise covariance.
//! The sweep tracks both effects and compares the empirical detection rate
//! against the closed-form prediction at each ρ_s.
//!
//! ```bash
//! cargo run -p evcss --example spatial_correlation
//! ```

use evcss::detectors::DetectorId;
use evcss::harness::{run_experiment, ExperimentConfig, ExperimentKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::SpatialCorr);
    cfg.trials = 600;
    cfg.detectors = vec![DetectorId::EvCss];
    cfg.validate()?;

    println!(
        "spatial correlation: M = {}, N = {}, SNR = {} dB, fixed channel h = [1, 1], \
         {} trials/point",
        cfg.num_antennas, cfg.n_samples, cfg.snr_db, cfg.trials
    );
    println!();

    let rows = run_experiment(&cfg)?;
    println!(
        "  {:>5} {:>9} {:>9} {:>9} {:>10}",
        "ρ_s", "FA rate", "P_D", "± σ", "analytic"
    );
    for row in &rows {
        let analytic = row
            .pd_analytic
            .map_or_else(|| "-".to_string(), |pd| format!("{pd:.4}"));
        println!(
            "  {:>5} {:>9.4} {:>9.4} {:>9.4} {:>10}",
            row.sweep_value, row.pfa_emp, row.pd_emp, row.pd_stderr, analytic,
        );
    }
    println!();
    println!("the threshold was never recomputed across the sweep, yet the");
    println!("false-alarm rate holds; only the detection rate pays for the");
    println!("correlated noise.");
    Ok(())
}
