//! Detector-side quantities: intensities, coincidences, projection
//! probabilities, fringe scans, visibility, number-difference variance and
//! the minimum detectable rotation.

use std::f64::consts::{PI, TAU};

use rustfft::{num_complex::Complex, FftPlanner};

use crate::channel::{apply_mor, Geometry, MediumSpec};
use crate::error::{invalid, Error, Result};
use crate::fock::{normally_ordered_moment, projection_probability, KetState, Mode, Occupation};
use crate::oracles::{self, OracleId, OracleParams};
use crate::sources::{mean_photon_number, SourceKind, SourceSpec, Truncation};

/// What the detectors measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObservableSpec {
    /// `<a_m† a_m>`.
    Intensity(Mode),
    /// `<a_1† a_2† a_1 a_2>`.
    TwoPhotonCoincidence(Mode, Mode),
    /// `<a_1†² a_2†² a_1² a_2²>`.
    FourPhotonGlauber(Mode, Mode),
    /// `|<target|psi>|^2` for a four-photon target.
    FourPhotonProjection(Occupation),
    /// Variance of `n_2 - n_1`.
    NdVariance(Mode, Mode),
}

impl ObservableSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ObservableSpec::TwoPhotonCoincidence(a, b)
            | ObservableSpec::FourPhotonGlauber(a, b)
            | ObservableSpec::NdVariance(a, b)
                if a == b =>
            {
                invalid(format!("observable needs two distinct modes, got ({a}, {b})"))
            }
            ObservableSpec::FourPhotonProjection(occ) if occ.total() != 4 => {
                invalid(format!("projection target {occ} must hold exactly four photons"))
            }
            _ => Ok(()),
        }
    }

    fn modes(&self) -> Vec<Mode> {
        match *self {
            ObservableSpec::Intensity(m) => vec![m],
            ObservableSpec::TwoPhotonCoincidence(a, b)
            | ObservableSpec::FourPhotonGlauber(a, b)
            | ObservableSpec::NdVariance(a, b) => vec![a, b],
            ObservableSpec::FourPhotonProjection(occ) => Mode::ALL.into_iter().filter(|&m| occ.count(m) > 0).collect(),
        }
    }
}

/// A fringe: observable values on an increasing grid of rotation angles.
fn parse_mode_pair(spec: &str) -> Result<(Mode, Mode)> {
    let (a, b) = spec
        .split_once(',')
        .ok_or_else(|| Error::Validation(format!("expected two modes like 'aH,aV', got '{spec}'")))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

/// Parses `intensity[:MODE]`, `coincidence[:M1,M2]`, `glauber4[:M1,M2]`,
/// `nd-variance[:M1,M2]` and `projection:a,b,c,d`. Mode pairs default to `aH,aV`.
impl std::str::FromStr for ObservableSpec {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (kind, arg) = match spec.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (spec, None),
        };
        let pair = || arg.map_or(Ok((Mode::AH, Mode::AV)), parse_mode_pair);
        let obs = match kind {
            "intensity" => ObservableSpec::Intensity(arg.map_or(Ok(Mode::AH), str::parse)?),
            "coincidence" => {
                let (a, b) = pair()?;
                ObservableSpec::TwoPhotonCoincidence(a, b)
            }
            "glauber4" => {
                let (a, b) = pair()?;
                ObservableSpec::FourPhotonGlauber(a, b)
            }
            "nd-variance" => {
                let (a, b) = pair()?;
                ObservableSpec::NdVariance(a, b)
            }
            "projection" => ObservableSpec::FourPhotonProjection(
                arg.ok_or_else(|| Error::Validation("projection needs a target, e.g. projection:1,1,1,1".into()))?
                    .parse()?,
            ),
            _ => return invalid(format!("unknown observable '{spec}'")),
        };
        obs.validate()?;
        Ok(obs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FringeSeries {
    pub theta: Vec<f64>,
    pub values: Vec<f64>,
    pub source: SourceSpec,
    pub observable: ObservableSpec,
    pub geometry: Geometry,
    pub theta_plus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VisibilityResult {
    pub v: f64,
    pub theta_at_max: f64,
    pub theta_at_min: f64,
}

/// State evolution used by an [`Evaluator`].
pub type Propagator = fn(&KetState, &MediumSpec, Geometry) -> Result<KetState>;

/// Evaluates observables by evolving Fock states through a propagator.
///
/// The default propagator is [`apply_mor`]; the verification suite swaps in
/// deliberately broken ones to check that it notices.
#[derive(Clone, Copy)]
pub struct Evaluator {
    propagator: Propagator,
}

impl Default for Evaluator {
    fn default() -> Self {
        Evaluator { propagator: apply_mor }
    }
}

impl std::fmt::Debug for Evaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Evaluator").finish_non_exhaustive()
    }
}

impl Evaluator {
    pub fn with_propagator(propagator: Propagator) -> Self {
        Evaluator { propagator }
    }

    pub fn evaluate(
        &self,
        source: &SourceSpec,
        medium: &MediumSpec,
        geometry: Geometry,
        obs: &ObservableSpec,
    ) -> Result<f64> {
        self.value(&Prepared::new(source, geometry, obs)?, medium, geometry, obs)
    }

    fn value(&self, prepared: &Prepared, medium: &MediumSpec, geometry: Geometry, obs: &ObservableSpec) -> Result<f64> {
        match prepared {
            Prepared::Coherent(alpha) => Ok(coherent_value(*alpha, medium.theta, obs)),
            Prepared::Fock(state) => Ok(measure(&(self.propagator)(state, medium, geometry)?, obs)),
            Prepared::Resummed { r, blocks } => {
                let degree = moment_degree(obs);
                let mut first = Vec::with_capacity(blocks.len());
                let mut second = Vec::with_capacity(blocks.len());
                for block in blocks {
                    let evolved = (self.propagator)(block, medium, geometry)?;
                    match *obs {
                        ObservableSpec::NdVariance(a, b) => {
                            let (mean, var) = nd_moments(&evolved, a, b);
                            first.push(mean);
                            second.push(var + mean * mean);
                        }
                        _ => first.push(measure(&evolved, obs)),
                    }
                }
                match obs {
                    ObservableSpec::NdVariance(..) => {
                        let mean = resum_pairs(&first, 1, *r)?;
                        Ok((resum_pairs(&second, 2, *r)? - mean * mean).max(0.0))
                    }
                    _ => resum_pairs(&first, degree, *r),
                }
            }
        }
    }

    /// Evaluates `obs` at every angle of `grid`. Grid points are independent,
    /// so parallel and sequential runs give bit-identical values.
    pub fn fringe_scan(
        &self,
        source: &SourceSpec,
        theta_plus: f64,
        geometry: Geometry,
        obs: &ObservableSpec,
        grid: &[f64],
    ) -> Result<FringeSeries> {
        if grid.is_empty() {
            return invalid("fringe grid is empty");
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("fringe grid must be strictly increasing");
        }
        let prepared = Prepared::new(source, geometry, obs)?;
        let point = |&theta: &f64| self.value(&prepared, &MediumSpec::new(theta, theta_plus), geometry, obs);
        #[cfg(feature = "parallel")]
        let values = {
            use rayon::prelude::*;
            grid.par_iter().map(point).collect::<Result<Vec<_>>>()?
        };
        #[cfg(not(feature = "parallel"))]
        let values = grid.iter().map(point).collect::<Result<Vec<_>>>()?;
        Ok(FringeSeries {
            theta: grid.to_vec(),
            values,
            source: *source,
            observable: *obs,
            geometry,
            theta_plus,
        })
    }

    /// Visibility over one detected period, sampled with `points.max(257)` angles.
    pub fn visibility_scan(
        &self,
        source: &SourceSpec,
        geometry: Geometry,
        obs: &ObservableSpec,
        points: usize,
    ) -> Result<VisibilityResult> {
        let period = self.fringe_period(source, geometry, obs)?;
        let grid = linspace(0.0, period, points.max(257))?;
        visibility(&self.fringe_scan(source, 0.0, geometry, obs, &grid)?)
    }

    /// Fringe period in theta. Uses the closed form when one is known and a
    /// shifted self-comparison of a 48-point sample over `[0, 2 pi)` otherwise.
    pub fn fringe_period(&self, source: &SourceSpec, geometry: Geometry, obs: &ObservableSpec) -> Result<f64> {
        if let Some(id) = closed_form(source, geometry, obs) {
            return Ok(oracle_period(id));
        }
        let grid = periodic_grid(48);
        let series = self.fringe_scan(source, 0.0, geometry, obs, &grid)?;
        Ok(detect_period(&series.values))
    }

    /// `(Delta N_d)^2` with `N_d = n_aV - n_aH` after the medium.
    pub fn nd_variance(&self, source: &SourceSpec, medium: &MediumSpec, geometry: Geometry) -> Result<f64> {
        self.evaluate(
            source,
            medium,
            geometry,
            &ObservableSpec::NdVariance(Mode::AH, Mode::AV),
        )
    }

    /// Solves `Delta N_d(theta) = 1` on `(0, pi/2]` by bisection on the
    /// numerically evaluated variance.
    pub fn min_detectable_angle_numeric(&self, source: &SourceSpec, geometry: Geometry) -> Result<f64> {
        let var = |theta| self.nd_variance(source, &MediumSpec::rotation_only(theta), geometry);
        let (mut lo, mut hi) = (0.0, PI / 2.0);
        if var(hi)? <= 1.0 {
            return Err(Error::NoSolution("number-difference noise never reaches 1".into()));
        }
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if var(mid)? < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Error-propagation estimate `Delta N_d / |d<N_d>/d theta|` at `theta`.
    /// Fails when the mean number difference does not depend on theta, which
    /// is the case for both PDC sources.
    pub fn error_propagation_angle(&self, source: &SourceSpec, theta: f64) -> Result<f64> {
        if let SourceKind::Coherent { alpha } = source.kind {
            let n = alpha.norm_sqr();
            let slope = n * theta.sin();
            if slope == 0.0 {
                return Err(Error::NoSolution("no signal slope at this angle".into()));
            }
            return Ok(oracles::coherent_nd_variance(alpha.norm(), theta).sqrt() / slope.abs());
        }
        let geometry = default_geometry(source);
        let obs = ObservableSpec::NdVariance(Mode::AH, Mode::AV);
        let no_slope = || Error::NoSolution("mean number difference is independent of theta for this source".into());
        let state = match Prepared::new(source, geometry, &obs)? {
            Prepared::Fock(s) => s,
            Prepared::Resummed { .. } => return Err(no_slope()),
            Prepared::Coherent(_) => unreachable!("coherent handled above"),
        };
        let moments = |t: f64| -> Result<(f64, f64)> {
            let evolved = (self.propagator)(&state, &MediumSpec::rotation_only(t), geometry)?;
            Ok(nd_moments(&evolved, Mode::AH, Mode::AV))
        };
        let h = 1e-4;
        let (mean_hi, _) = moments(theta + h)?;
        let (mean_lo, _) = moments(theta - h)?;
        let (_, var) = moments(theta)?;
        let slope = (mean_hi - mean_lo) / (2.0 * h);
        if slope.abs() < 1e-9 * var.max(1.0) {
            return Err(no_slope());
        }
        Ok(var.sqrt() / slope.abs())
    }
}

/// [`Evaluator::evaluate`] with the physical channel.
pub fn evaluate(source: &SourceSpec, medium: &MediumSpec, geometry: Geometry, obs: &ObservableSpec) -> Result<f64> {
    Evaluator::default().evaluate(source, medium, geometry, obs)
}

/// [`Evaluator::fringe_scan`] with the physical channel.
pub fn fringe_scan(
    source: &SourceSpec,
    theta_plus: f64,
    geometry: Geometry,
    obs: &ObservableSpec,
    grid: &[f64],
) -> Result<FringeSeries> {
    Evaluator::default().fringe_scan(source, theta_plus, geometry, obs, grid)
}

/// [`Evaluator::nd_variance`] with the physical channel.
pub fn nd_variance(source: &SourceSpec, medium: &MediumSpec, geometry: Geometry) -> Result<f64> {
    Evaluator::default().nd_variance(source, medium, geometry)
}

/// The geometry a source is built for.
pub fn default_geometry(source: &SourceSpec) -> Geometry {
    match source.kind {
        SourceKind::NoncollinearPdc { .. } => Geometry::Noncollinear,
        _ => Geometry::Collinear,
    }
}

enum Prepared {
    Coherent(num_complex::Complex64),
    Fock(KetState),
    /// Collinear pair blocks `|n, n>` for `n = 0..=degree + 2`.
    Resummed {
        r: f64,
        blocks: Vec<KetState>,
    },
}

impl Prepared {
    fn new(source: &SourceSpec, geometry: Geometry, obs: &ObservableSpec) -> Result<Self> {
        source.validate()?;
        obs.validate()?;
        if geometry != default_geometry(source) {
            return invalid(format!(
                "{:?} source cannot be used in {:?} geometry",
                source.kind, geometry
            ));
        }
        if geometry == Geometry::Collinear && obs.modes().iter().any(|m| matches!(m, Mode::BH | Mode::BV)) {
            return invalid("collinear geometry has no b modes to detect");
        }
        if let SourceKind::Coherent { alpha } = source.kind {
            return match obs {
                ObservableSpec::Intensity(Mode::AH | Mode::AV) | ObservableSpec::NdVariance(..) => {
                    Ok(Prepared::Coherent(alpha))
                }
                _ => invalid("coherent sources support only aH/aV intensity and nd-variance"),
            };
        }
        if source.truncation == Truncation::Resummed {
            if matches!(obs, ObservableSpec::FourPhotonProjection(_)) {
                return invalid(
                    "projections are exact at finite n_max; use automatic truncation instead of resummation",
                );
            }
            let r = source.r().expect("validated collinear source");
            let blocks = (0..=moment_degree(obs) as u32 + 2)
                .map(|n| KetState::basis(Occupation::new(n, n, 0, 0)))
                .collect();
            return Ok(Prepared::Resummed { r, blocks });
        }
        let n_max = match obs {
            ObservableSpec::FourPhotonProjection(target) => {
                // Photon number per spatial mode is conserved, so pairs above
                // the target's contribute nothing and the projection is exact.
                let a = target.count(Mode::AH) + target.count(Mode::AV);
                let b = target.count(Mode::BH) + target.count(Mode::BV);
                let needed = match geometry {
                    Geometry::Collinear => a.div_ceil(2),
                    Geometry::Noncollinear => a.max(b),
                };
                match source.truncation {
                    Truncation::Fixed(n) if n < needed => {
                        return invalid(format!(
                            "n_max = {n} drops the {needed}-pair component the projection onto {target} needs"
                        ))
                    }
                    Truncation::Fixed(n) => n,
                    Truncation::Auto { .. } | Truncation::Resummed => needed.max(1),
                }
            }
            _ => source.n_max()?,
        };
        Ok(Prepared::Fock(source.prepare_with(n_max)?))
    }
}

/// Polynomial degree in the pair number of a moment observable.
fn moment_degree(obs: &ObservableSpec) -> usize {
    match obs {
        ObservableSpec::Intensity(_) => 1,
        ObservableSpec::TwoPhotonCoincidence(..) | ObservableSpec::NdVariance(..) => 2,
        ObservableSpec::FourPhotonGlauber(..) | ObservableSpec::FourPhotonProjection(_) => 4,
    }
}

/// `sum_n p_n g_n` over the collinear pair distribution `p_n = (1 - t) t^n`,
/// `t = tanh^2 r`, given `g_0, g_1, ...` of a polynomial of known degree.
///
/// With Newton's forward form `g_n = sum_j C(n, j) D^j g_0` and
/// `sum_n p_n C(n, j) = sinh^{2j} r` the series sums exactly. The samples
/// beyond `degree + 1` must have vanishing differences, which guards the
/// degree assumption.
fn resum_pairs(g: &[f64], degree: usize, r: f64) -> Result<f64> {
    let mut diffs = g.to_vec();
    let mut leading = Vec::with_capacity(g.len());
    while let Some(&d) = diffs.first() {
        leading.push(d);
        diffs = diffs.windows(2).map(|w| w[1] - w[0]).collect();
    }
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (j, d) in leading.iter().enumerate().skip(degree + 1) {
        if d.abs() > 1e-10 * scale * 2f64.powi(j as i32) {
            return Err(Error::NoSolution(format!(
                "block values are not a degree-{degree} polynomial in the pair number (difference {j} is {d:e})"
            )));
        }
    }
    let s2 = r.sinh().powi(2);
    Ok(leading.iter().take(degree + 1).rev().fold(0.0, |acc, d| acc * s2 + d))
}

fn coherent_value(alpha: num_complex::Complex64, theta: f64, obs: &ObservableSpec) -> f64 {
    let (ix, iy) = crate::sources::coherent_intensity_pair(alpha, theta);
    match obs {
        ObservableSpec::Intensity(Mode::AH) => ix,
        ObservableSpec::Intensity(_) => iy,
        _ => alpha.norm_sqr() * theta.sin().powi(2),
    }
}

fn nd_moments(state: &KetState, first: Mode, second: Mode) -> (f64, f64) {
    let diff = |occ: &Occupation| f64::from(occ.count(second)) - f64::from(occ.count(first));
    let mean = state.diagonal_expectation(diff);
    let second_moment = state.diagonal_expectation(|o| diff(o).powi(2));
    (mean, (second_moment - mean * mean).max(0.0))
}

fn measure(state: &KetState, obs: &ObservableSpec) -> f64 {
    let powers = |pairs: &[(Mode, u32)]| {
        let mut p = [0u32; 4];
        for &(m, k) in pairs {
            p[m.index()] = k;
        }
        p
    };
    match *obs {
        ObservableSpec::Intensity(m) => normally_ordered_moment(state, powers(&[(m, 1)])),
        ObservableSpec::TwoPhotonCoincidence(a, b) => normally_ordered_moment(state, powers(&[(a, 1), (b, 1)])),
        ObservableSpec::FourPhotonGlauber(a, b) => normally_ordered_moment(state, powers(&[(a, 2), (b, 2)])),
        ObservableSpec::FourPhotonProjection(target) => projection_probability(state, &target),
        ObservableSpec::NdVariance(a, b) => nd_moments(state, a, b).1,
    }
}

/// The closed form matching a (source, geometry, observable) triple, if any.
pub fn closed_form(source: &SourceSpec, geometry: Geometry, obs: &ObservableSpec) -> Option<OracleId> {
    use ObservableSpec as O;
    let a_pair = |x: Mode, y: Mode| matches!((x, y), (Mode::AH, Mode::AV) | (Mode::AV, Mode::AH));
    match (source.kind, geometry, *obs) {
        (SourceKind::Coherent { .. }, Geometry::Collinear, O::Intensity(Mode::AH)) => Some(OracleId::CohIx),
        (SourceKind::Coherent { .. }, Geometry::Collinear, O::Intensity(Mode::AV)) => Some(OracleId::CohIy),
        (SourceKind::Coherent { .. }, Geometry::Collinear, O::NdVariance(x, y)) if a_pair(x, y) => {
            Some(OracleId::CohVar)
        }
        (SourceKind::CollinearPdc { .. }, Geometry::Collinear, obs) => match obs {
            O::Intensity(Mode::AH | Mode::AV) => Some(OracleId::ColIntensity),
            O::TwoPhotonCoincidence(x, y) if a_pair(x, y) => Some(OracleId::ColIhv),
            O::FourPhotonGlauber(x, y) if a_pair(x, y) => Some(OracleId::IHhvv),
            O::FourPhotonProjection(t) if t == Occupation::new(2, 2, 0, 0) => Some(OracleId::PCol),
            O::NdVariance(x, y) if a_pair(x, y) => Some(OracleId::ColVar),
            _ => None,
        },
        (SourceKind::NoncollinearPdc { .. }, Geometry::Noncollinear, O::FourPhotonProjection(t))
            if t == Occupation::new(1, 1, 1, 1) =>
        {
            Some(OracleId::PNon)
        }
        _ => None,
    }
}

/// Closed-form value of `obs` at `theta`, or a validation error when none is known.
pub fn exact_value(source: &SourceSpec, geometry: Geometry, obs: &ObservableSpec, theta: f64) -> Result<f64> {
    source.validate()?;
    let id = closed_form(source, geometry, obs)
        .ok_or_else(|| Error::Validation("no closed form is known for this source/observable".into()))?;
    let alpha = match source.kind {
        SourceKind::Coherent { alpha } => alpha.norm(),
        _ => 0.0,
    };
    let params = OracleParams {
        r: source.r().unwrap_or(0.0),
        alpha,
        theta,
    };
    Ok(oracles::oracle(id, params)?
        .real()
        .expect("fringe oracles are real-valued"))
}

fn oracle_period(id: OracleId) -> f64 {
    match id {
        OracleId::CohIx | OracleId::CohIy => TAU,
        OracleId::PNon => PI / 2.0,
        _ => PI,
    }
}

/// Smallest period `2 pi / k`, `k` in `{8, 6, 4, 3, 2, 1}`, under which samples
/// on `[0, 2 pi)` are shift-invariant.
pub fn detect_period(values: &[f64]) -> f64 {
    let n = values.len();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for k in [8usize, 6, 4, 3, 2] {
        if !n.is_multiple_of(k) {
            continue;
        }
        let shift = n / k;
        let matches = (0..n).all(|i| (values[i] - values[(i + shift) % n]).abs() <= 1e-9 * scale + 1e-12);
        if matches {
            return TAU / k as f64;
        }
    }
    TAU
}

/// Integer frequency (cycles per `2 pi`) of the strongest non-constant Fourier
/// component of samples taken on `[0, 2 pi)`.
pub fn dominant_frequency(values: &[f64]) -> Result<usize> {
    let n = values.len();
    if n < 4 {
        return invalid("need at least four samples for a frequency estimate");
    }
    let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let (k, peak) = (1..=n / 2)
        .map(|k| (k, buf[k].norm()))
        .fold((0, 0.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if peak <= 1e-12 * buf[0].norm().max(1e-300) {
        return invalid("fringe is flat; it has no dominant frequency");
    }
    Ok(k)
}

/// `(max - min) / (max + min)` of a series.
pub fn visibility(series: &FringeSeries) -> Result<VisibilityResult> {
    if series.values.is_empty() {
        return invalid("empty fringe series");
    }
    let (mut imax, mut imin) = (0, 0);
    for (i, &v) in series.values.iter().enumerate() {
        if v > series.values[imax] {
            imax = i;
        }
        if v < series.values[imin] {
            imin = i;
        }
    }
    let (max, min) = (series.values[imax], series.values[imin]);
    if max + min == 0.0 {
        return Err(Error::UndefinedVisibility);
    }
    Ok(VisibilityResult {
        v: ((max - min) / (max + min)).clamp(0.0, 1.0),
        theta_at_max: series.theta[imax],
        theta_at_min: series.theta[imin],
    })
}

/// Smallest positive angle with `Delta N_d = 1`, using the closed-form variances:
/// `arcsin(1/|alpha|)` for coherent light and `arcsin(1/sinh 2r)` for collinear PDC.
pub fn min_detectable_angle(source: &SourceSpec) -> Result<f64> {
    let n = mean_photon_number(source)?.value();
    if n <= 1.0 {
        return Err(Error::NoSolution(format!(
            "mean photon number {n} <= 1: the number-difference noise never reaches 1"
        )));
    }
    match source.kind {
        SourceKind::Coherent { alpha } => Ok((1.0 / alpha.norm()).asin()),
        SourceKind::CollinearPdc { r, .. } => Ok((1.0 / (2.0 * r).sinh()).asin()),
        SourceKind::NoncollinearPdc { .. } => {
            invalid("the noise-floor criterion is defined for coherent and collinear sources")
        }
    }
}

/// `points` evenly spaced values from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return invalid(format!("grid needs at least 2 points, got {points}"));
    }
    if !(min < max) || !min.is_finite() || !max.is_finite() {
        return invalid(format!("grid needs finite min < max, got [{min}, {max}]"));
    }
    let step = (max - min) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i == points - 1 { max } else { min + step * i as f64 })
        .collect())
}

/// `points` log-spaced values from `min` to `max` inclusive.
pub fn logspace(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min > 0.0) {
        return invalid(format!("log grid needs min > 0, got {min}"));
    }
    Ok(linspace(min.log10(), max.log10(), points)?
        .into_iter()
        .enumerate()
        .map(|(i, x)| match i {
            0 => min,
            _ if i == points - 1 => max,
            _ => 10f64.powf(x),
        })
        .collect())
}

/// `n` angles `2 pi i / n`, endpoint excluded.
pub fn periodic_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| TAU * i as f64 / n as f64).collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return invalid("slope fit needs at least two (x, y) pairs");
    }
    if xs.iter().chain(ys).any(|&v| !(v > 0.0)) {
        return invalid("slope fit needs positive values");
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return invalid("slope fit needs distinct x values");
    }
    Ok(sxy / sxx)
}
