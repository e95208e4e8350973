//! Tabular result files: comma-delimited text with a header row and values
//! at six significant digits. Writes overwrite idempotently; identical
//! results produce byte-identical files.

use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::pd_vs_l::PdVsLResult;
use crate::qq::QqResult;
use crate::roc::RocResult;

/// Formats a value with six significant digits, shortest representation.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let digits = 5 - magnitude;
    if (-12..=15).contains(&digits) {
        let scale = 10f64.powi(digits);
        format!("{}", (x * scale).round() / scale)
    } else {
        format!("{x:.5e}")
    }
}

/// Writes a detection/false-alarm table: columns `p_f, p_d, detector,
/// n_antennas, n_relays, frame_len, snr_db, trials, seed, se_pf, se_pd`, one
/// row per sweep point.
pub fn write_results(result: &RocResult, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from(
        "p_f,p_d,detector,n_antennas,n_relays,frame_len,snr_db,trials,seed,se_pf,se_pd\n",
    );
    for row in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            sig6(row.p_f),
            sig6(row.p_d),
            result.detector,
            result.n_antennas,
            result.n_relays,
            result.frame_len,
            sig6(result.snr_db),
            result.trials,
            result.seed,
            sig6(row.se_pf),
            sig6(row.se_pd),
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes the detection-vs-frame-length table.
pub fn write_pd_vs_l(result: &PdVsLResult, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::from(
        "detector,n_antennas,frame_len,target_pf,achieved_pf,p_d,se_pd,n_relays,trials,seed,calibrated\n",
    );
    for row in &result.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            row.detector,
            row.n_antennas,
            row.frame_len,
            sig6(row.target_pf),
            sig6(row.achieved_pf),
            sig6(row.p_d),
            sig6(row.se_pd),
            result.n_relays,
            result.trials,
            result.seed,
            row.calibrated,
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Writes one quantile-pair table per relay count plus a summary table;
/// returns the written paths. For an `--out` of `qq.csv` the tables land in
/// `qq_m2.csv`, `qq_m8.csv`, ..., `qq_summary.csv`.
pub fn write_qq(result: &QqResult, path: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let path = path.as_ref();
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("qq");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut written = Vec::new();

    for entry in &result.reports {
        let table_path = dir.join(format!("{stem}_m{}.{ext}", entry.n_relays));
        let mut out = String::from("theoretical_quantile,empirical_quantile\n");
        for (t, e) in &entry.report.quantile_pairs {
            out.push_str(&format!("{},{}\n", sig6(*t), sig6(*e)));
        }
        std::fs::write(&table_path, out)?;
        written.push(table_path);
    }

    let summary_path = dir.join(format!("{stem}_summary.{ext}"));
    let mut out = String::from("n_relays,ks_distance,ks_critical_5pct,n_samples,frames,seed\n");
    for entry in &result.reports {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            entry.n_relays,
            sig6(entry.report.ks_distance),
            sig6(entry.report.ks_critical_5pct()),
            entry.report.n_samples,
            result.frames,
            result.seed,
        ));
    }
    std::fs::write(&summary_path, out)?;
    written.push(summary_path);
    Ok(written)
}
