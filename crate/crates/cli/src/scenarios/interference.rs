//! Coincidence fringe while the second Savart plate is tilted.

use spades_core::analysis::{fit_cosine, visibility, CosineFit};
use spades_core::detection::{derive_seed, simulate_counts, subtract_accidentals, Corrected, CountRecord};
use spades_core::pipeline::{interference_scan, rate_report};
use spades_core::Exec;

use super::count_sigma;
use crate::config::{effective, InterferenceConfig};
use crate::output::CsvTable;
use crate::svg::{plot, Series, Style};
use crate::{CliError, Report};

pub const QUOTED_VISIBILITY_CORRECTED: (f64, f64) = (1.000, 0.010);
pub const QUOTED_VISIBILITY_RAW: (f64, f64) = (0.840, 0.008);

#[derive(Debug, Clone)]
pub struct InterferenceOutcome {
    pub fit_raw: CosineFit,
    pub fit_corrected: CosineFit,
    pub visibility_raw: (f64, f64),
    pub visibility_corrected: (f64, f64),
    pub report: Report,
}

pub fn run(cfg: &InterferenceConfig) -> Result<InterferenceOutcome, CliError> {
    let rates = rate_report(&cfg.source)?;
    // Both photons share one fibre behind an H polarizer and a 50/50 split:
    // a pair lands on different detectors with probability (1 + cos φ)/8,
    // and each detector sees half of one arm's singles.
    let pair_rate = rates.coincidences / 4.0;
    let singles = rates.singles_a / 2.0;
    let count_rates = cfg.counting.rates(pair_rate, singles, singles);

    let grid = cfg.scan.grid();
    let points = interference_scan(&cfg.source, &grid)?;
    let records: Vec<CountRecord> = Exec::Parallel
        .map_range(points.len(), |i| {
            simulate_counts(
                points[i].probability,
                &count_rates,
                cfg.counting.duration_s,
                cfg.counting.window_s(),
                derive_seed(cfg.seed, i as u64),
            )
        })
        .into_iter()
        .collect::<Result<_, _>>()?;
    let corrected: Vec<Corrected> = records.iter().map(subtract_accidentals).collect();

    let mut table = CsvTable::new("interference", &["theta", "phi_rad", "cc_raw", "cc_corrected"]);
    for ((p, r), c) in points.iter().zip(&records).zip(&corrected) {
        table.push(&[p.theta, p.phi, r.coincidences as f64, c.value]);
    }

    let raw_y: Vec<f64> = records.iter().map(|r| r.coincidences as f64).collect();
    let raw_sigma: Vec<f64> = raw_y.iter().map(|&n| count_sigma(n)).collect();
    let cor_y: Vec<f64> = corrected.iter().map(|c| c.value).collect();
    let cor_sigma: Vec<f64> = corrected.iter().map(|c| c.error.max(1.0)).collect();
    let fit_raw = fit_cosine(&grid, &raw_y, &raw_sigma)?;
    let fit_corrected = fit_cosine(&grid, &cor_y, &cor_sigma)?;
    let visibility_raw = visibility(&fit_raw)?;
    let visibility_corrected = visibility(&fit_corrected)?;

    let naive_acc = singles * singles * cfg.counting.window_s();
    let mut report = Report::new("interference");
    report.value("visibility_corrected", visibility_corrected.0);
    report.value("visibility_corrected_error", visibility_corrected.1);
    report.value("visibility_raw", visibility_raw.0);
    report.value("visibility_raw_error", visibility_raw.1);
    report.note(
        "quoted_visibility_corrected",
        format!("{} +- {}", QUOTED_VISIBILITY_CORRECTED.0, QUOTED_VISIBILITY_CORRECTED.1),
    );
    report.note(
        "quoted_visibility_raw",
        format!("{} +- {}", QUOTED_VISIBILITY_RAW.0, QUOTED_VISIBILITY_RAW.1),
    );
    report.value("fringe_angular_frequency_rad_per_rad", fit_corrected.angular_frequency);
    report.value("intrinsic_visibility", cfg.source.intrinsic_visibility);
    report.value(
        "peak_pair_rate_per_s",
        pair_rate * (1.0 + cfg.source.intrinsic_visibility) / 2.0,
    );
    report.value("singles_per_detector_per_s", singles);
    report.value("accidentals_naive_per_s", naive_acc);
    report.value("accidental_scale", cfg.counting.accidental_scale);
    report.value("accidentals_injected_per_s", naive_acc * cfg.counting.accidental_scale);
    report.note(
        "accidental_model",
        "scale * S_A * S_B * tau; the scale is calibrated so the unsubtracted fringe matches the measured contrast",
    );

    let theta_fine: Vec<f64> = (0..400)
        .map(|i| grid[0] + (grid[grid.len() - 1] - grid[0]) * i as f64 / 399.0)
        .collect();
    report.plots.push((
        "interference".into(),
        plot(
            "Coincidences vs Savart plate tilt",
            "tilt theta (rad)",
            "coincidences per point",
            &[
                Series::new(
                    "raw",
                    grid.iter().copied().zip(raw_y.iter().copied()).collect(),
                    Style::Markers,
                ),
                Series::new(
                    "corrected",
                    grid.iter().copied().zip(cor_y.iter().copied()).collect(),
                    Style::Markers,
                ),
                Series::new(
                    "raw fit",
                    theta_fine.iter().map(|&t| (t, fit_raw.eval(t))).collect(),
                    Style::Line,
                ),
                Series::new(
                    "corrected fit",
                    theta_fine.iter().map(|&t| (t, fit_corrected.eval(t))).collect(),
                    Style::Line,
                ),
            ],
        ),
    ));
    report.tables.push(table);
    report.effective_config = effective(cfg);

    Ok(InterferenceOutcome {
        fit_raw,
        fit_corrected,
        visibility_raw,
        visibility_corrected,
        report,
    })
}
