//! Result serialization: the summary CSV and the companion plot script.

use crate::harness::run::SummaryRow;
use crate::harness::HarnessError;
use std::path::{Path, PathBuf};

type Result<T> = std::result::Result<T, HarnessError>;

/// Column order of the summary CSV. [`render_csv`] writes exactly these,
/// in this order, with a mandatory header row.
pub const CSV_COLUMNS: [&str; 16] = [
    "experiment",
    "detector",
    "sweep_axis",
    "sweep_value",
    "M",
    "N",
    "snr_db",
    "rho_s",
    "threshold",
    "pfa_emp",
    "pfa_stderr",
    "pd_emp",
    "pd_stderr",
    "pd_analytic",
    "trials",
    "seed",
];

/// Format a float with six significant digits, trailing zeros trimmed,
/// switching to exponent notation outside [1e-4, 1e6). Integral values in
/// the fixed range print without a decimal point.
pub fn fmt_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_decimals(format!("{x:.decimals$}"))
    } else {
        let formatted = format!("{x:.5e}");
        match formatted.split_once('e') {
            Some((mantissa, exponent)) => {
                format!("{}e{exponent}", trim_decimals(mantissa.to_string()))
            }
            None => formatted,
        }
    }
}

fn trim_decimals(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Render summary rows as CSV text (header included).
pub fn render_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(&CSV_COLUMNS.join(","));
    out.push('\n');
    for row in rows {
        let pd_analytic = row.pd_analytic.map(fmt_g6).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.experiment.as_str(),
            row.detector.as_str(),
            row.sweep_axis,
            fmt_g6(row.sweep_value),
            row.num_antennas,
            row.n_samples,
            fmt_g6(row.snr_db),
            fmt_g6(row.rho_s),
            fmt_g6(row.threshold),
            fmt_g6(row.pfa_emp),
            fmt_g6(row.pfa_stderr),
            fmt_g6(row.pd_emp),
            fmt_g6(row.pd_stderr),
            pd_analytic,
            row.trials,
            row.seed,
        ));
    }
    out
}

/// Write the summary CSV to `path`, creating parent directories as
/// needed. The file appears atomically (write to a sibling temp file,
/// then rename), so a crashed or failed run never leaves partial results
/// at the destination.
pub fn write_results(rows: &[SummaryRow], path: &Path) -> Result<()> {
    let io_err = |source: std::io::Error| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, render_csv(rows)).map_err(io_err)?;
    std::fs::rename(&tmp, path).map_err(io_err)
}

/// Write a matplotlib script next to `csv_path` (same stem, `.py`) that
/// plots detection probability per detector over the sweep, with error
/// bars and the analytic curve where present. Returns the script path.
pub fn emit_plot_script(csv_path: &Path) -> Result<PathBuf> {
    let script_path = csv_path.with_extension("py");
    let csv_name = csv_path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results.csv".to_string());
    let png_name = Path::new(&csv_name)
        .with_extension("png")
        .to_string_lossy()
        .into_owned();
    let script = PLOT_TEMPLATE
        .replace("{csv}", &csv_name)
        .replace("{png}", &png_name);
    std::fs::write(&script_path, script).map_err(|source| HarnessError::Io {
        path: script_path.clone(),
        source,
    })?;
    Ok(script_path)
}

const PLOT_TEMPLATE: &str = r#"#!/usr/bin/env python3
"""Plot detection probability per detector from {csv}."""
import csv
import os.path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "{csv}"), newline="") as fh:
    rows = list(csv.DictReader(fh))
if not rows:
    raise SystemExit("no rows in {csv}")

experiment = rows[0]["experiment"]
axis = rows[0]["sweep_axis"]
# a ROC trades measured rates against each other; everything else plots
# detection over the swept parameter
x_field = "pfa_emp" if experiment == "roc" else "sweep_value"

detectors = []
for row in rows:
    if row["detector"] not in detectors:
        detectors.append(row["detector"])

fig, ax = plt.subplots(figsize=(7, 5))
for det in detectors:
    sub = [r for r in rows if r["detector"] == det]
    xs = [float(r[x_field]) for r in sub]
    ys = [float(r["pd_emp"]) for r in sub]
    errs = [float(r["pd_stderr"]) for r in sub]
    ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=3, label=det)
    analytic = [(x, float(r["pd_analytic"])) for x, r in zip(xs, sub) if r["pd_analytic"]]
    if analytic:
        ax.plot([a[0] for a in analytic], [a[1] for a in analytic],
                linestyle="--", color="black", alpha=0.7,
                label=f"{det} (analytic)")

ax.set_xlabel("pfa_emp" if experiment == "roc" else axis)
ax.set_ylabel("detection probability")
ax.set_title(experiment)
ax.grid(True, alpha=0.3)
ax.legend()
fig.tight_layout()
out = os.path.join(here, "{png}")
fig.savefig(out, dpi=150)
print(f"wrote {out}")
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::DetectorId;
    use crate::harness::config::ExperimentKind;

    fn sample_row() -> SummaryRow {
        SummaryRow {
            experiment: ExperimentKind::PdVsSnr,
            detector: DetectorId::EvCss,
            sweep_axis: "snr_db",
            sweep_value: -10.0,
            num_antennas: 2,
            n_samples: 1000,
            snr_db: -10.0,
            rho_s: 0.0,
            threshold: 10.644641,
            pfa_emp: 0.0998,
            pfa_stderr: 0.00424,
            pd_emp: 0.91234567,
            pd_stderr: 0.004,
            pd_analytic: Some(0.9151234),
            trials: 5000,
            seed: 1,
        }
    }

    #[test]
    fn six_significant_digits_with_trimming() {
        assert_eq!(fmt_g6(0.0), "0");
        assert_eq!(fmt_g6(-10.0), "-10");
        assert_eq!(fmt_g6(0.1), "0.1");
        assert_eq!(fmt_g6(10.644641), "10.6446");
        assert_eq!(fmt_g6(0.91234567), "0.912346");
        assert_eq!(fmt_g6(123456.6), "123457");
        assert_eq!(fmt_g6(1234567.0), "1.23457e6");
        assert_eq!(fmt_g6(0.00012345), "0.00012345");
        assert_eq!(fmt_g6(0.000012345), "1.2345e-5");
        assert_eq!(fmt_g6(-3.5e-9), "-3.5e-9");
    }

    #[test]
    fn csv_has_the_contract_columns_and_blank_analytic() {
        let mut rows = vec![sample_row(), sample_row()];
        rows[1].detector = DetectorId::SumMsdf;
        rows[1].pd_analytic = None;
        let text = render_csv(&rows);
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "experiment,detector,sweep_axis,sweep_value,M,N,snr_db,rho_s,threshold,\
             pfa_emp,pfa_stderr,pd_emp,pd_stderr,pd_analytic,trials,seed"
        );
        let first = lines.next().unwrap();
        assert_eq!(
            first,
            "pd-vs-snr,ev-css,snr_db,-10,2,1000,-10,0,10.6446,0.0998,0.00424,\
             0.912346,0.004,0.915123,5000,1"
        );
        let second = lines.next().unwrap();
        assert!(second.contains(",sum-msdf,"));
        assert!(second.contains(",,5000,1"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn results_land_atomically_with_parents_created() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out/run.csv");
        write_results(&[sample_row()], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(!path.with_extension("csv.tmp").exists());

        let script = emit_plot_script(&path).unwrap();
        assert_eq!(script, path.with_extension("py"));
        let body = std::fs::read_to_string(&script).unwrap();
        assert!(body.contains("run.csv"));
        assert!(body.contains("run.png"));
    }
}
