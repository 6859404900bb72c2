//! Result rows, CSV emission, and the closed-form analytics report.

use std::fmt::Write as _;
use std::io::Write;

use asesim_core::engine::{PointSummary, SimConfig};
use asesim_core::network::scheduling_cap;

use crate::config::CliError;

/// Stable column set; the schema never depends on which values are present.
pub const COLUMNS: [&str; 20] = [
    "antenna_density_km2",
    "antennas_per_bs",
    "bs_density_km2",
    "ue_density_km2",
    "pilot_contamination",
    "k_u",
    "n_drops",
    "master_seed",
    "status",
    "ase_bps_hz_km2",
    "ci95_bps_hz_km2",
    "coverage",
    "mean_se_bps_hz",
    "empirical_active_density_km2",
    "closed_form_active_density_km2",
    "mean_k_hat",
    "n_scheduled_samples",
    "n_unscheduled_samples",
    "total_resamples",
    "config_hash",
];

/// Floats carry 9 significant digits; enough to round-trip the studied
/// ranges while keeping files diffable.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

/// Render one result row. A failed point keeps the parameter columns and an
/// error marker in `status`, with every result column empty.
pub fn result_row(cfg: &SimConfig, outcome: &Result<PointSummary, CliError>) -> Vec<String> {
    let mut row = vec![
        fmt_float(cfg.antenna_density_km2),
        cfg.antennas_per_bs.to_string(),
        fmt_float(cfg.bs_density_km2()),
        fmt_float(cfg.ue_density_km2),
        cfg.pilot_contamination.to_string(),
        cfg.k_u().to_string(),
        cfg.n_drops.to_string(),
        cfg.master_seed.to_string(),
    ];
    match outcome {
        Ok(summary) => {
            let ase = summary.ase(cfg);
            let coverage = summary.coverage(cfg);
            row.push("ok".into());
            match (&ase, &coverage) {
                (Ok(est), Ok(cov)) => {
                    row.push(fmt_float(est.ase_bps_hz_km2));
                    row.push(est.ci95_bps_hz_km2.map(fmt_float).unwrap_or_default());
                    row.push(fmt_float(*cov));
                    row.push(fmt_float(est.mean_se_bps_hz));
                }
                (ase, _) => {
                    // Simulated fine but nothing was measurable (e.g. every
                    // measurement went unscheduled): keep the census columns.
                    let reason = match ase {
                        Err(e) => e.to_string(),
                        Ok(_) => coverage.as_ref().unwrap_err().to_string(),
                    };
                    row[8] = format!("error: {reason}");
                    row.extend(std::iter::repeat_n(String::new(), 4));
                }
            }
            row.push(fmt_float(summary.empirical_active_density_km2()));
            row.push(fmt_float(summary.closed_form_active_density_km2));
            row.push(fmt_float(summary.mean_k_hat()));
            row.push(
                summary.samples.samples.iter().filter(|s| s.scheduled).count().to_string(),
            );
            row.push(summary.n_unscheduled.to_string());
            row.push(summary.total_resamples.to_string());
            row.push(summary.samples.config_hash.clone());
        }
        Err(e) => {
            row.push(format!("error: {e}"));
            row.extend(std::iter::repeat_n(String::new(), 10));
            row.push(cfg.config_hash());
        }
    }
    debug_assert_eq!(row.len(), COLUMNS.len());
    row
}

pub fn write_csv<W: Write>(out: W, rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)
        .and_then(|()| rows.iter().try_for_each(|r| w.write_record(r)))
        .and_then(|()| w.flush().map_err(csv::Error::from))
        .map_err(|e| CliError::Runtime(format!("writing results: {e}")))
}

/// Closed-form activation and scheduling report; no simulation involved.
pub fn analytics_report(cfg: &SimConfig) -> Result<String, CliError> {
    let nb = cfg.nb_model()?;
    let k_u = scheduling_cap(cfg.antennas_per_bs, cfg.pilot_count);
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(
        w,
        "deployment: {} antennas/km2 = {} BSs/km2 x {} antennas",
        cfg.antenna_density_km2,
        cfg.bs_density_km2(),
        cfg.antennas_per_bs
    );
    let _ = writeln!(
        w,
        "load: {} UEs/km2, cell-load dispersion q = {}",
        cfg.ue_density_km2, cfg.load_model_q
    );
    let _ = writeln!(
        w,
        "active-BS density (closed form): {:.9} /km2 ({:.4}% of deployed)",
        nb.active_bs_density(),
        100.0 * nb.active_bs_density() / cfg.bs_density_km2()
    );
    let _ = writeln!(
        w,
        "scheduling cap K_U = {k_u} (antennas/4, clamped to 1..={})",
        cfg.pilot_count
    );
    let _ = writeln!(w, "\nattached-UE count PMF f_K(k):");
    let mut cum = 0.0;
    for k in 0..=50u64 {
        let p = nb.pmf(k);
        cum += p;
        let _ = writeln!(w, "  k = {k:>3}   f_K = {p:.9}   cumulative = {cum:.9}");
        if cum > 1.0 - 1e-12 {
            break;
        }
    }
    let _ = writeln!(w, "\nscheduled-count PMF over active cells (truncated at K_U):");
    let mut tsum = 0.0;
    for k in 1..=k_u as u64 {
        let p = nb.truncated_pmf(k, k_u)?;
        tsum += p;
        let _ = writeln!(w, "  K^ = {k:>3}  f = {p:.9}");
    }
    let _ = writeln!(w, "  sum = {tsum:.12}");
    Ok(s)
}
