//! Fringe frequency against stage motion for a Savart plate and a beam
//! displacer of equal shear.

use spades_core::analysis::{fit_cosine, CosineFit};
use spades_core::birefringence::{
    tilt_phase, walkoff_angle, BirefringentPlate, Element, SavartPlate, TiltedElement, CALCITE_N_E, CALCITE_N_O,
};
use spades_core::detection::{derive_seed, poisson_count};
use spades_core::Exec;

use super::count_sigma;
use crate::config::{effective, ElementKind, SensitivityConfig};
use crate::output::CsvTable;
use crate::svg::{plot, Series, Style};
use crate::{CliError, Report};

pub const QUOTED_OMEGA_SP: (f64, f64) = (0.1004, 0.0008);
pub const QUOTED_OMEGA_BD: (f64, f64) = (0.1036, 0.0004);

#[derive(Debug, Clone)]
pub struct SensitivityOutcome {
    pub fit_sp: CosineFit,
    pub fit_bd: CosineFit,
    pub sp_thickness_mm: f64,
    pub bd_thickness_mm: f64,
    pub report: Report,
}

pub fn run(cfg: &SensitivityConfig) -> Result<SensitivityOutcome, CliError> {
    let s = &cfg.sensitivity;
    let rho = walkoff_angle(CALCITE_N_O, CALCITE_N_E, std::f64::consts::FRAC_PI_4);
    let bd = Element::Displacer(BirefringentPlate::calcite(s.shear_mm / rho.tan())?);
    let test = match s.test_element {
        ElementKind::Savart => Element::Savart(SavartPlate::calcite_with_net_shear(s.shear_mm)?),
        ElementKind::Displacer => bd.clone(),
    };

    let n = s.points;
    let x: Vec<f64> = (0..n)
        .map(|i| s.motor_start_um + (s.motor_stop_um - s.motor_start_um) * i as f64 / (n - 1) as f64)
        .collect();
    let theta: Vec<f64> = x.iter().map(|&xi| (xi * 1e-3 / s.pivot_distance_mm).atan()).collect();

    let intensities = |el: &Element, stream: u64| -> Result<Vec<f64>, CliError> {
        Exec::Parallel
            .map_range(n, |i| {
                let te = TiltedElement::new(el.clone(), theta[i], s.wavelength_nm)?;
                let mean = s.peak_counts * (1.0 + tilt_phase(&te).cos()) / 2.0;
                Ok(poisson_count(mean, derive_seed(cfg.seed, stream * n as u64 + i as u64)) as f64)
            })
            .into_iter()
            .collect()
    };
    let i_sp = intensities(&test, 0)?;
    let i_bd = intensities(&bd, 1)?;

    let fit = |y: &[f64]| {
        let sigma: Vec<f64> = y.iter().map(|&v| count_sigma(v)).collect();
        fit_cosine(&x, y, &sigma)
    };
    let fit_sp = fit(&i_sp)?;
    let fit_bd = fit(&i_bd)?;

    let mut table = CsvTable::new("sensitivity", &["x_um", "theta_rad", "intensity_sp", "intensity_bd"]);
    for i in 0..n {
        table.push(&[x[i], theta[i], i_sp[i], i_bd[i]]);
    }

    let (w_sp, e_sp) = (fit_sp.angular_frequency, fit_sp.sigma_angular_frequency);
    let (w_bd, e_bd) = (fit_bd.angular_frequency, fit_bd.sigma_angular_frequency);
    let combined = e_sp.hypot(e_bd);
    let mut report = Report::new("sensitivity");
    report.note(
        "motor_to_angle",
        format!("theta = arctan(x / x_p), x_p = {} mm, x in um", s.pivot_distance_mm),
    );
    report.note(
        "test_element",
        match s.test_element {
            ElementKind::Savart => "savart",
            ElementKind::Displacer => "displacer",
        },
    );
    report.value("sp_thickness_mm", test.thickness());
    report.value("bd_thickness_mm", bd.thickness());
    report.value("thickness_ratio", test.thickness() / bd.thickness());
    report.value("omega_sp_rad_per_um", w_sp);
    report.value("omega_sp_error", e_sp);
    report.value("omega_bd_rad_per_um", w_bd);
    report.value("omega_bd_error", e_bd);
    report.value("omega_ratio_sp_over_bd", w_sp / w_bd);
    report.value("difference_over_combined_sigma", (w_bd - w_sp) / combined);
    report.note("sp_less_sensitive", (w_sp < w_bd).to_string());
    report.note(
        "quoted_omega_sp",
        format!("{} +- {}", QUOTED_OMEGA_SP.0, QUOTED_OMEGA_SP.1),
    );
    report.note(
        "quoted_omega_bd",
        format!("{} +- {}", QUOTED_OMEGA_BD.0, QUOTED_OMEGA_BD.1),
    );

    report.plots.push((
        "sensitivity".into(),
        plot(
            "Fringe intensity vs stage position",
            "motor position x (um)",
            "counts",
            &[
                Series::new("SP", x.iter().copied().zip(i_sp.iter().copied()).collect(), Style::Line),
                Series::new("BD", x.iter().copied().zip(i_bd.iter().copied()).collect(), Style::Line),
            ],
        ),
    ));
    report.tables.push(table);
    report.effective_config = effective(cfg);

    Ok(SensitivityOutcome {
        sp_thickness_mm: test.thickness(),
        bd_thickness_mm: bd.thickness(),
        fit_sp,
        fit_bd,
        report,
    })
}
