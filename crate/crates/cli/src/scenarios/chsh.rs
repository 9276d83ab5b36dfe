//! Bell curves over Alice's LC phase for Bob's two settings, and the CHSH
//! parameter built from them.

use std::f64::consts::{PI, SQRT_2};

use spades_core::analysis::{
    chsh_s, correlation_e, correlation_e_corrected, fit_cosine, optimize_alice, visibility, ChshResult, ChshSelection,
    Correlation,
};
use spades_core::detection::{
    csv_row, setting_probability, subtract_accidentals, sweep_settings, CountRecord, MeasurementSetting, SweepSpec,
    CSV_HEADER,
};
use spades_core::pipeline::{evolve_state, rate_report};
use spades_core::polcalc::{fidelity_bound, werner_overlap};
use spades_core::report::format_float;
use spades_core::Exec;

use super::count_sigma;
use crate::config::{effective, ChshConfig};
use crate::output::CsvTable;
use crate::svg::{plot, Series, Style};
use crate::{CliError, Report};

pub const QUOTED_S: (f64, f64) = (2.82, 0.04);
pub const QUOTED_SIGMA_VIOLATION: f64 = 20.0;
pub const QUOTED_FIDELITY: (f64, f64) = (0.992, 0.001);

#[derive(Debug, Clone)]
pub struct ChshOutcome {
    /// Accidental-subtracted (or exact, in analytic mode) result.
    pub selection: ChshSelection,
    /// Raw counts at the same Alice settings.
    pub raw: Option<ChshResult>,
    /// Mean fitted visibility of the Bell curves.
    pub mean_fringe_visibility: Option<f64>,
    pub report: Report,
}

/// Correlations in setting-list order: for each Bob phase, one per Alice
/// phase.
struct Curves {
    corrected: Vec<Correlation>,
    raw: Option<Vec<Correlation>>,
    /// Per Bob phase and channel pair, the corrected coincidences.
    channels: Vec<[Vec<(f64, f64)>; 4]>,
}

pub fn run(cfg: &ChshConfig) -> Result<ChshOutcome, CliError> {
    let state = evolve_state(&cfg.source)?;
    let n = cfg.chsh.alice_points;
    let alice: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
    let bobs = &cfg.chsh.bob_phases_rad;
    let settings: Vec<MeasurementSetting> = bobs
        .iter()
        .flat_map(|&b| alice.iter().flat_map(move |&a| MeasurementSetting::channel_set(a, b)))
        .collect();

    let mut report = Report::new("chsh");
    let curves = if cfg.chsh.analytic {
        let v = cfg.source.intrinsic_visibility;
        let probs: Vec<f64> = settings
            .iter()
            .map(|s| setting_probability(&state, s, v))
            .collect::<Result<_, _>>()?;
        let mut table = CsvTable::new(
            "chsh_probabilities",
            &[
                "setting_delta_a_rad",
                "setting_delta_b_rad",
                "ch_a",
                "ch_b",
                "probability",
            ],
        );
        for (s, p) in settings.iter().zip(&probs) {
            table.push_raw(&[
                format_float(s.alice_lc_phase),
                format_float(s.bob_lc_phase),
                s.alice_channel.index().to_string(),
                s.bob_channel.index().to_string(),
                format_float(*p),
            ]);
        }
        report.tables.push(table);
        let corrected = probs
            .chunks(4)
            .map(|p| correlation_e(p[0], p[1], p[2], p[3]))
            .collect::<Result<_, _>>()?;
        Curves {
            corrected,
            raw: None,
            channels: channel_curves(&alice, &probs),
        }
    } else {
        let rates = rate_report(&cfg.source)?;
        let spec = SweepSpec {
            state: &state,
            visibility: cfg.source.intrinsic_visibility,
            arm_rates: cfg.counting.rates(rates.coincidences, rates.singles_a, rates.singles_b),
            duration_s: cfg.counting.duration_s,
            window_s: cfg.counting.window_s(),
            seed: cfg.seed,
        };
        let records: Vec<CountRecord> = sweep_settings(&spec, &settings, Exec::Parallel)?;
        let mut table = CsvTable::new("chsh_counts", &CSV_HEADER.split(',').collect::<Vec<_>>());
        for (s, r) in settings.iter().zip(&records) {
            let row = csv_row(s, r);
            table.push_raw(&row.split(',').map(str::to_string).collect::<Vec<_>>());
        }
        report.tables.push(table);
        let corrected_counts: Vec<_> = records.iter().map(subtract_accidentals).collect();
        let corrected = corrected_counts
            .chunks(4)
            .map(|c| correlation_e_corrected([c[0], c[1], c[2], c[3]]))
            .collect::<Result<_, _>>()?;
        let raw = records
            .chunks(4)
            .map(|r| {
                correlation_e(
                    r[0].coincidences as f64,
                    r[1].coincidences as f64,
                    r[2].coincidences as f64,
                    r[3].coincidences as f64,
                )
            })
            .collect::<Result<_, _>>()?;
        let values: Vec<f64> = corrected_counts.iter().map(|c| c.value).collect();
        Curves {
            corrected,
            raw: Some(raw),
            channels: channel_curves(&alice, &values),
        }
    };

    let (e_b, e_bp) = curves.corrected.split_at(n);
    let selection = optimize_alice(&alice, e_b, e_bp)?;
    let ia = alice
        .iter()
        .position(|&a| a == selection.delta_a)
        .expect("selected from grid");
    let iap = alice
        .iter()
        .position(|&a| a == selection.delta_a_prime)
        .expect("selected from grid");
    let raw = curves
        .raw
        .as_ref()
        .map(|r| chsh_s([r[ia], r[n + ia], r[iap], r[n + iap]]));

    // Fringe visibility of each Bell curve, from counts only.
    let mean_fringe_visibility = if cfg.chsh.analytic {
        None
    } else {
        let mut vs = Vec::new();
        for per_bob in &curves.channels {
            for curve in per_bob {
                let x: Vec<f64> = curve.iter().map(|p| p.0).collect();
                let y: Vec<f64> = curve.iter().map(|p| p.1).collect();
                let sigma: Vec<f64> = y.iter().map(|&v| count_sigma(v)).collect();
                let fit = fit_cosine(&x, &y, &sigma)?;
                vs.push(visibility(&fit)?.0);
            }
        }
        Some(vs.iter().sum::<f64>() / vs.len() as f64)
    };

    let r = &selection.result;
    report.value("S", r.s);
    report.value("S_error", r.s_error);
    report.value("sigma_violation", r.sigma_violation);
    report.note("violation", (r.s > 2.0).to_string());
    report.value("delta_a_rad", selection.delta_a);
    report.value("delta_a_prime_rad", selection.delta_a_prime);
    report.value("delta_b_rad", bobs[0]);
    report.value("delta_b_prime_rad", bobs[1]);
    report.note("sign_pattern_minus_term", r.sign_pattern.to_string());
    if let Some(raw) = &raw {
        report.value("S_raw", raw.s);
        report.value("S_raw_error", raw.s_error);
    }
    if let Some(v) = mean_fringe_visibility {
        report.value("mean_fringe_visibility", v);
    }
    report.value("visibility_vs", r.visibility_vs);
    report.value("fidelity_lower_bound", r.fidelity_lower_bound);
    report.value("fidelity_werner_overlap", r.werner_fidelity);
    report.note("quoted_S", format!("{} +- {}", QUOTED_S.0, QUOTED_S.1));
    report.value("quoted_sigma_violation", QUOTED_SIGMA_VIOLATION);
    report.note(
        "quoted_fidelity",
        format!("{} +- {}", QUOTED_FIDELITY.0, QUOTED_FIDELITY.1),
    );
    let quoted_vs = QUOTED_S.0 / (2.0 * SQRT_2);
    let formula_at_quoted = fidelity_bound(quoted_vs).expect("in range");
    let overlap_at_quoted = werner_overlap(quoted_vs).expect("in range");
    report.value("fidelity_formula_at_quoted_S", formula_at_quoted);
    report.value("werner_overlap_at_quoted_S", overlap_at_quoted);
    report.note(
        "fidelity_discrepancy",
        format!(
            "the visibility-to-fidelity formula gives {} at S = {} while the quoted fidelity is {}; the Werner overlap (1+3V)/4 gives {}. Both conversions are reported.",
            format_float(formula_at_quoted),
            QUOTED_S.0,
            QUOTED_FIDELITY.0,
            format_float(overlap_at_quoted)
        ),
    );

    if let Some(first) = curves.channels.first() {
        let labels = ["A1 B1", "A1 B2", "A2 B1", "A2 B2"];
        let series: Vec<Series> = first
            .iter()
            .zip(labels)
            .map(|(c, l)| Series::new(l, c.clone(), Style::Line))
            .collect();
        report.plots.push((
            "chsh".into(),
            plot(
                "Bell curves at Bob's first setting",
                "Alice LC phase (rad)",
                "coincidences",
                &series,
            ),
        ));
    }
    report.effective_config = effective(cfg);

    Ok(ChshOutcome {
        selection,
        raw,
        mean_fringe_visibility,
        report,
    })
}

/// Splits per-setting values into curves over Alice's phase, one per Bob
/// phase and channel pair.
fn channel_curves(alice: &[f64], values: &[f64]) -> Vec<[Vec<(f64, f64)>; 4]> {
    values
        .chunks(4 * alice.len())
        .map(|block| std::array::from_fn(|ch| alice.iter().enumerate().map(|(i, &a)| (a, block[4 * i + ch])).collect()))
        .collect()
}
