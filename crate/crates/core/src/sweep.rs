//! Parameter sweeps rendered as CSV text.
//!
//! Every float is written with 17 significant digits so values round-trip
//! exactly, and rows come out in grid order regardless of how many threads
//! evaluated them. Trailing metadata rows start with `#`.

use std::fmt::Write as _;

use crate::channel::Geometry;
use crate::detection::{
    exact_value, linspace, loglog_slope, logspace, min_detectable_angle, Evaluator, ObservableSpec,
};
use crate::error::{invalid, Result};
use crate::fock::Occupation;
use crate::sources::{SourceKind, SourceSpec, Truncation};

/// Which columns a sweep reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    /// Fock-space evolution.
    #[default]
    Numeric,
    /// Closed forms.
    Exact,
    /// Both, side by side.
    Both,
}

impl std::str::FromStr for EvalMode {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numeric" => Ok(EvalMode::Numeric),
            "exact" => Ok(EvalMode::Exact),
            "both" => Ok(EvalMode::Both),
            _ => invalid(format!("unknown mode '{s}' (expected numeric, exact or both)")),
        }
    }
}

/// `points` evenly spaced samples on `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn new(min: f64, max: f64, points: usize) -> Self {
        GridSpec { min, max, points }
    }

    pub fn linear(&self) -> Result<Vec<f64>> {
        linspace(self.min, self.max, self.points)
    }

    pub fn logarithmic(&self) -> Result<Vec<f64>> {
        logspace(self.min, self.max, self.points)
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_row(out: &mut String, cells: &[f64]) {
    let row: Vec<String> = cells.iter().map(|&v| fmt_float(v)).collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FringeConfig {
    pub source: SourceSpec,
    pub geometry: Geometry,
    pub observable: ObservableSpec,
    pub theta_plus: f64,
    pub grid: GridSpec,
    pub mode: EvalMode,
}

/// CSV `theta,value` (plus `value_exact` in both-mode).
pub fn run_fringe(cfg: &FringeConfig, evaluator: &Evaluator) -> Result<String> {
    let grid = cfg.grid.linear()?;
    let exact = |theta| exact_value(&cfg.source, cfg.geometry, &cfg.observable, theta);
    let numeric = match cfg.mode {
        EvalMode::Exact => None,
        _ => Some(evaluator.fringe_scan(&cfg.source, cfg.theta_plus, cfg.geometry, &cfg.observable, &grid)?),
    };
    let mut out = String::from(if cfg.mode == EvalMode::Both {
        "theta,value,value_exact\n"
    } else {
        "theta,value\n"
    });
    for (i, &theta) in grid.iter().enumerate() {
        match (&numeric, cfg.mode) {
            (Some(series), EvalMode::Both) => push_row(&mut out, &[theta, series.values[i], exact(theta)?]),
            (Some(series), _) => push_row(&mut out, &[theta, series.values[i]]),
            (None, _) => push_row(&mut out, &[theta, exact(theta)?]),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityConfig {
    /// Observable whose fringe visibility is tracked (collinear source).
    pub observable: ObservableSpec,
    pub r_grid: GridSpec,
    pub truncation: Truncation,
    /// Samples per fringe period; at least 257 are used.
    pub points_per_period: usize,
    pub mode: EvalMode,
}

/// CSV `r,visibility` (plus `visibility_exact` in both-mode) for collinear PDC.
pub fn run_visibility(cfg: &VisibilityConfig, evaluator: &Evaluator) -> Result<String> {
    let rs = cfg.r_grid.linear()?;
    if rs[0] <= 0.0 {
        return invalid("visibility sweep needs r > 0 (the r = 0 fringe is identically zero)");
    }
    let numeric = |r: f64| {
        let src = SourceSpec::collinear(r).with_truncation(cfg.truncation);
        evaluator
            .visibility_scan(&src, Geometry::Collinear, &cfg.observable, cfg.points_per_period)
            .map(|v| v.v)
    };
    let exact = |r: f64| -> Result<f64> {
        let src = SourceSpec::collinear(r);
        let period = evaluator.fringe_period(&src, Geometry::Collinear, &cfg.observable)?;
        let grid = linspace(0.0, period, cfg.points_per_period.max(257))?;
        let values = grid
            .iter()
            .map(|&t| exact_value(&src, Geometry::Collinear, &cfg.observable, t))
            .collect::<Result<Vec<_>>>()?;
        let (max, min) = values
            .iter()
            .fold((f64::MIN, f64::MAX), |(hi, lo), &v| (hi.max(v), lo.min(v)));
        if max + min == 0.0 {
            return Err(crate::Error::UndefinedVisibility);
        }
        Ok((max - min) / (max + min))
    };
    let mut out = String::from(if cfg.mode == EvalMode::Both {
        "r,visibility,visibility_exact\n"
    } else {
        "r,visibility\n"
    });
    for r in rs {
        match cfg.mode {
            EvalMode::Numeric => push_row(&mut out, &[r, numeric(r)?]),
            EvalMode::Exact => push_row(&mut out, &[r, exact(r)?]),
            EvalMode::Both => push_row(&mut out, &[r, numeric(r)?, exact(r)?]),
        }
    }
    Ok(out)
}

/// Projection target whose `theta = 0` probability forms the envelope.
pub fn envelope_target(geometry: Geometry) -> Occupation {
    match geometry {
        Geometry::Collinear => Occupation::new(2, 2, 0, 0),
        Geometry::Noncollinear => Occupation::new(1, 1, 1, 1),
    }
}

fn envelope_source(geometry: Geometry, r: f64) -> SourceSpec {
    match geometry {
        Geometry::Collinear => SourceSpec::collinear(r),
        Geometry::Noncollinear => SourceSpec::noncollinear(r),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeConfig {
    pub geometry: Geometry,
    pub r_grid: GridSpec,
    pub mode: EvalMode,
}

/// Envelope value at one `r`: four-photon projection probability at `theta = 0`.
pub fn envelope_value(geometry: Geometry, r: f64, exact: bool, evaluator: &Evaluator) -> Result<f64> {
    let src = envelope_source(geometry, r);
    let obs = ObservableSpec::FourPhotonProjection(envelope_target(geometry));
    if exact {
        exact_value(&src, geometry, &obs, 0.0)
    } else {
        evaluator.evaluate(&src, &crate::MediumSpec::default(), geometry, &obs)
    }
}

/// Maximizes a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_section_max<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, f(x)?))
}

/// CSV `r,value` (plus `value_exact` in both-mode) and a trailing
/// `# argmax_r=..,max=..` row from grid search plus golden-section refinement.
pub fn run_envelope(cfg: &EnvelopeConfig, evaluator: &Evaluator) -> Result<String> {
    let rs = cfg.r_grid.linear()?;
    if rs[0] < 0.0 {
        return invalid("envelope sweep needs r >= 0");
    }
    let exact_primary = cfg.mode == EvalMode::Exact;
    let primary = |r| envelope_value(cfg.geometry, r, exact_primary, evaluator);
    let mut out = String::from(if cfg.mode == EvalMode::Both {
        "r,value,value_exact\n"
    } else {
        "r,value\n"
    });
    let mut values = Vec::with_capacity(rs.len());
    for &r in &rs {
        let v = primary(r)?;
        values.push(v);
        if cfg.mode == EvalMode::Both {
            push_row(&mut out, &[r, v, envelope_value(cfg.geometry, r, true, evaluator)?]);
        } else {
            push_row(&mut out, &[r, v]);
        }
    }
    let best = (0..values.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let lo = rs[best.saturating_sub(1)];
    let hi = rs[(best + 1).min(rs.len() - 1)];
    let (argmax, max) = golden_section_max(primary, lo, hi, 1e-10)?;
    writeln!(out, "# argmax_r={},max={}", fmt_float(argmax), fmt_float(max)).expect("write to String");
    Ok(out)
}

/// Minimum-detectable-angle criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// Smallest angle with `Delta N_d = 1`.
    #[default]
    NoiseFloor,
    /// `Delta N_d / |d<N_d>/d theta|` at `theta = pi/2` (coherent light only).
    ErrorPropagation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivitySource {
    Coherent,
    Collinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityConfig {
    pub source: SensitivitySource,
    /// Mean photon numbers, log-spaced.
    pub mean_n: GridSpec,
    pub estimator: Estimator,
}

/// Source with a given mean photon number.
pub fn source_for_mean_n(kind: SensitivitySource, n: f64) -> SourceSpec {
    match kind {
        SensitivitySource::Coherent => SourceSpec::coherent(num_complex::Complex64::new(n.sqrt(), 0.0)),
        SensitivitySource::Collinear => SourceSpec::collinear((n / 2.0).sqrt().asinh()),
    }
}

/// CSV `mean_n,theta_m` and a trailing `# slope=..` row with the log-log fit.
pub fn run_sensitivity(cfg: &SensitivityConfig, evaluator: &Evaluator) -> Result<String> {
    let ns = cfg.mean_n.logarithmic()?;
    if ns[0] <= 1.0 {
        return invalid("sensitivity sweep needs mean photon numbers > 1");
    }
    let thetas = ns
        .iter()
        .map(|&n| {
            let src = source_for_mean_n(cfg.source, n);
            match cfg.estimator {
                Estimator::NoiseFloor => min_detectable_angle(&src),
                Estimator::ErrorPropagation => {
                    if !matches!(src.kind, SourceKind::Coherent { .. }) {
                        return invalid(
                            "error-propagation estimator needs theta-dependent <N_d>; use the noise-floor estimator for PDC",
                        );
                    }
                    evaluator.error_propagation_angle(&src, std::f64::consts::FRAC_PI_2)
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = loglog_slope(&ns, &thetas)?;
    let mut out = String::from("mean_n,theta_m\n");
    for (n, t) in ns.iter().zip(&thetas) {
        push_row(&mut out, &[*n, *t]);
    }
    writeln!(out, "# slope={}", fmt_float(slope)).expect("write to String");
    Ok(out)
}

/// Reads the value of a `# key=value` metadata row.
pub fn metadata(csv: &str, key: &str) -> Option<f64> {
    csv.lines()
        .filter_map(|l| l.strip_prefix('#'))
        .flat_map(|l| l.split(','))
        .filter_map(|kv| kv.trim().split_once('='))
        .find(|(k, _)| *k == key)
        .and_then(|(_, v)| v.parse().ok())
}

/// Parses the numeric rows of a sweep CSV (header and `#` rows skipped).
pub fn parse_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| l.split(',').filter_map(|c| c.parse().ok()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Mode;
    use crate::oracles;
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn fringe_csv() {
        let cfg = FringeConfig {
            source: SourceSpec::collinear(0.8),
            geometry: Geometry::Collinear,
            observable: ObservableSpec::TwoPhotonCoincidence(Mode::AH, Mode::AV),
            theta_plus: 0.0,
            grid: GridSpec::new(0.0, TAU, 201),
            mode: EvalMode::Both,
        };
        let csv = run_fringe(&cfg, &Evaluator::default()).unwrap();
        assert!(csv.starts_with("theta,value,value_exact\n"));
        let rows = parse_rows(&csv);
        assert_eq!(rows.len(), 201);
        for row in rows {
            assert!((row[1] - row[2]).abs() <= 1e-8 * row[2].abs());
        }
    }

    #[test]
    fn noncollinear_fringe_zeros() {
        let cfg = FringeConfig {
            source: SourceSpec::noncollinear(1.0),
            geometry: Geometry::Noncollinear,
            observable: ObservableSpec::FourPhotonProjection(Occupation::new(1, 1, 1, 1)),
            theta_plus: 0.0,
            grid: GridSpec::new(0.0, TAU, 201),
            mode: EvalMode::Numeric,
        };
        let rows = parse_rows(&run_fringe(&cfg, &Evaluator::default()).unwrap());
        // grid step is 2 pi / 200, so pi/4 + k pi/2 falls on indices 25 + 50 k
        for k in 0..4 {
            assert!(rows[25 + 50 * k][1].abs() < 1e-12);
        }
    }

    #[test]
    fn coherent_fringe_zero_at_pi() {
        let cfg = FringeConfig {
            source: SourceSpec::coherent(num_complex::Complex64::new(1.0, 0.0)),
            geometry: Geometry::Collinear,
            observable: ObservableSpec::Intensity(Mode::AH),
            theta_plus: 0.0,
            grid: GridSpec::new(0.0, TAU, 201),
            mode: EvalMode::Numeric,
        };
        let rows = parse_rows(&run_fringe(&cfg, &Evaluator::default()).unwrap());
        assert_eq!(rows[0][1], 1.0);
        assert!(rows[100][1] < 1e-30);
    }

    #[test]
    fn fringe_without_closed_form_fails_in_exact_mode() {
        let cfg = FringeConfig {
            source: SourceSpec::noncollinear(0.5),
            geometry: Geometry::Noncollinear,
            observable: ObservableSpec::Intensity(Mode::BH),
            theta_plus: 0.0,
            grid: GridSpec::new(0.0, 1.0, 3),
            mode: EvalMode::Exact,
        };
        assert!(run_fringe(&cfg, &Evaluator::default()).is_err());
    }

    #[test]
    fn visibility_csv() {
        let cfg = VisibilityConfig {
            observable: ObservableSpec::TwoPhotonCoincidence(Mode::AH, Mode::AV),
            r_grid: GridSpec::new(0.01, 1.0, 4),
            truncation: Truncation::default(),
            points_per_period: 257,
            mode: EvalMode::Both,
        };
        let rows = parse_rows(&run_visibility(&cfg, &Evaluator::default()).unwrap());
        for row in &rows {
            assert!((row[1] - oracles::two_photon_visibility(row[0])).abs() < 1e-9);
            assert!((row[2] - oracles::two_photon_visibility(row[0])).abs() < 1e-12);
        }
        assert_relative_eq!(rows[0][1], 0.999_800_053_319_248_2, max_relative = 1e-9);
        assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));
        let exact_far = VisibilityConfig {
            r_grid: GridSpec::new(1.0, 3.0, 2),
            mode: EvalMode::Exact,
            ..cfg
        };
        let rows = parse_rows(&run_visibility(&exact_far, &Evaluator::default()).unwrap());
        assert_relative_eq!(rows[1][1], 0.335_540_302_060_420_8, max_relative = 1e-12);
        let numeric_far = VisibilityConfig {
            mode: EvalMode::Numeric,
            ..exact_far
        };
        assert!(matches!(
            run_visibility(&numeric_far, &Evaluator::default()),
            Err(crate::Error::Truncation { .. })
        ));
    }

    #[test]
    fn envelope_maxima() {
        let ev = Evaluator::default();
        // noncollinear: d/dr ln(sinh^4/cosh^8) = 0 at tanh^2 r = 1/2, max 1/16
        let cfg = EnvelopeConfig {
            geometry: Geometry::Noncollinear,
            r_grid: GridSpec::new(0.0, 3.0, 61),
            mode: EvalMode::Both,
        };
        let csv = run_envelope(&cfg, &ev).unwrap();
        let rows = parse_rows(&csv);
        assert_eq!(rows[0][1], 0.0);
        for row in &rows {
            assert!((row[1] - row[2]).abs() <= 1e-12 * row[2].max(1e-300) + 1e-15);
        }
        assert_relative_eq!(
            metadata(&csv, "argmax_r").unwrap(),
            (0.5f64).sqrt().atanh(),
            max_relative = 1e-7
        );
        assert_relative_eq!(metadata(&csv, "max").unwrap(), 1.0 / 16.0, max_relative = 1e-12);
        // collinear: tanh^2 r = 2/3, max 4/27
        let cfg = EnvelopeConfig {
            geometry: Geometry::Collinear,
            ..cfg
        };
        let csv = run_envelope(&cfg, &ev).unwrap();
        assert_relative_eq!(
            metadata(&csv, "argmax_r").unwrap(),
            (2.0f64 / 3.0).sqrt().atanh(),
            max_relative = 1e-7
        );
        assert_relative_eq!(metadata(&csv, "max").unwrap(), 4.0 / 27.0, max_relative = 1e-12);
        let rows = parse_rows(&csv);
        let at_one = rows.iter().find(|r| (r[0] - 1.0).abs() < 1e-12).unwrap();
        assert_relative_eq!(at_one[1], 0.141_291_868_797_406_9, max_relative = 1e-12);
    }

    #[test]
    fn sensitivity_slopes() {
        let ev = Evaluator::default();
        for (kind, want) in [
            (SensitivitySource::Coherent, -0.5),
            (SensitivitySource::Collinear, -1.0),
        ] {
            let cfg = SensitivityConfig {
                source: kind,
                mean_n: GridSpec::new(10.0, 1e4, 40),
                estimator: Estimator::NoiseFloor,
            };
            let csv = run_sensitivity(&cfg, &ev).unwrap();
            assert!((metadata(&csv, "slope").unwrap() - want).abs() < 0.02);
        }
        let single = SensitivityConfig {
            source: SensitivitySource::Coherent,
            mean_n: GridSpec::new(10.0, 1e4, 1),
            estimator: Estimator::NoiseFloor,
        };
        assert!(run_sensitivity(&single, &ev).is_err());
        let low = SensitivityConfig {
            mean_n: GridSpec::new(0.5, 10.0, 5),
            ..single
        };
        assert!(run_sensitivity(&low, &ev).is_err());
        let ep = SensitivityConfig {
            mean_n: GridSpec::new(10.0, 1e4, 5),
            estimator: Estimator::ErrorPropagation,
            ..single
        };
        let csv = run_sensitivity(&ep, &ev).unwrap();
        assert_relative_eq!(metadata(&csv, "slope").unwrap(), -0.5, max_relative = 1e-10);
        let ep_pdc = SensitivityConfig {
            source: SensitivitySource::Collinear,
            ..ep
        };
        assert!(run_sensitivity(&ep_pdc, &ev).is_err());
    }

    #[test]
    fn golden_section_finds_peak() {
        let (x, y) = golden_section_max(|x| Ok(-(x - 1.3f64).powi(2) + 2.0), 0.0, PI, 1e-12).unwrap();
        // the peak is flat to second order, so x is only good to ~sqrt(eps)
        assert_relative_eq!(x, 1.3, max_relative = 1e-7);
        assert_relative_eq!(y, 2.0, max_relative = 1e-15);
    }
}
