//! Input states: coherent light (closed form only) and type-II down-conversion
//! in collinear and non-collinear geometry.
//!
//! PDC states are truncated at `n_max` photon pairs. The discarded weight is
//! known in closed form and stored as the state's truncation tail, so
//! `norm^2 + tail = 1` holds to rounding.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fock::{KetState, Occupation};

/// Default tail bound for automatic truncation.
pub const DEFAULT_EPSILON: f64 = 1e-10;

/// Default upper limit on retained photon pairs for automatic truncation.
pub const DEFAULT_N_MAX_CAP: u32 = 256;

/// Which PDC state a truncation question is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdcKind {
    Collinear,
    Noncollinear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceKind {
    /// Single-mode coherent light, `x` (= aH) polarized, amplitude `alpha`.
    Coherent { alpha: Complex64 },
    /// Two-mode squeezed vacuum on (aH, aV) with pump phase `phi`.
    CollinearPdc { r: f64, phi: f64 },
    /// Four-mode state on (aH, aV, bH, bV).
    NoncollinearPdc { r: f64 },
}

/// How many photon pairs to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    Fixed(u32),
    /// Smallest `n_max <= cap` with `tail(n_max) * (n_max + 4)^4 < epsilon tanh^8 r`.
    Auto {
        epsilon: f64,
        cap: u32,
    },
    /// No cutoff: collinear moment observables are evaluated block by block on
    /// a few low pair numbers and the pair distribution is summed exactly.
    Resummed,
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::Auto {
            epsilon: DEFAULT_EPSILON,
            cap: DEFAULT_N_MAX_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub truncation: Truncation,
}

impl SourceSpec {
    pub fn coherent(alpha: Complex64) -> Self {
        Self::from_kind(SourceKind::Coherent { alpha })
    }

    pub fn collinear(r: f64) -> Self {
        Self::from_kind(SourceKind::CollinearPdc { r, phi: 0.0 })
    }

    pub fn collinear_with_phase(r: f64, phi: f64) -> Self {
        Self::from_kind(SourceKind::CollinearPdc { r, phi })
    }

    pub fn noncollinear(r: f64) -> Self {
        Self::from_kind(SourceKind::NoncollinearPdc { r })
    }

    fn from_kind(kind: SourceKind) -> Self {
        SourceSpec {
            kind,
            truncation: Truncation::default(),
        }
    }

    pub fn with_truncation(mut self, truncation: Truncation) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn pdc_kind(&self) -> Option<PdcKind> {
        match self.kind {
            SourceKind::Coherent { .. } => None,
            SourceKind::CollinearPdc { .. } => Some(PdcKind::Collinear),
            SourceKind::NoncollinearPdc { .. } => Some(PdcKind::Noncollinear),
        }
    }

    /// Interaction parameter of a PDC source.
    pub fn r(&self) -> Option<f64> {
        match self.kind {
            SourceKind::Coherent { .. } => None,
            SourceKind::CollinearPdc { r, .. } | SourceKind::NoncollinearPdc { r } => Some(r),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            SourceKind::Coherent { alpha } => {
                if !(alpha.re.is_finite() && alpha.im.is_finite()) {
                    return invalid("coherent amplitude must be finite");
                }
            }
            SourceKind::CollinearPdc { r, phi } => {
                check_r(r)?;
                if !phi.is_finite() {
                    return invalid("pump phase must be finite");
                }
            }
            SourceKind::NoncollinearPdc { r } => check_r(r)?,
        }
        match self.truncation {
            Truncation::Fixed(0) => invalid("n_max must be >= 1"),
            Truncation::Resummed if self.pdc_kind() != Some(PdcKind::Collinear) => {
                invalid("resummed evaluation is only available for the collinear source")
            }
            Truncation::Auto { epsilon, cap } if !(epsilon > 0.0) || cap == 0 => {
                invalid("automatic truncation needs epsilon > 0 and cap >= 1")
            }
            _ => Ok(()),
        }
    }

    /// Resolves the truncation setting to a pair count.
    pub fn n_max(&self) -> Result<u32> {
        self.validate()?;
        let (Some(kind), Some(r)) = (self.pdc_kind(), self.r()) else {
            return invalid("coherent sources have no Fock truncation");
        };
        match self.truncation {
            Truncation::Fixed(n) => Ok(n),
            Truncation::Auto { epsilon, cap } => select_n_max(kind, r, epsilon, cap),
            Truncation::Resummed => invalid("resummed evaluation keeps no explicit pair cutoff"),
        }
    }

    /// Fock expansion of a PDC source with `n_max` pairs.
    pub fn prepare_with(&self, n_max: u32) -> Result<KetState> {
        self.validate()?;
        match self.kind {
            SourceKind::Coherent { .. } => invalid("coherent sources are handled in closed form, not in Fock space"),
            SourceKind::CollinearPdc { r, phi } => collinear_state(r, phi, n_max),
            SourceKind::NoncollinearPdc { r } => noncollinear_state(r, n_max),
        }
    }

    pub fn prepare(&self) -> Result<KetState> {
        self.prepare_with(self.n_max()?)
    }
}

fn check_r(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        invalid(format!("interaction parameter r must be finite and >= 0, got {r}"))
    }
}

/// Mean total photon number of a source.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MeanPhotonNumber(pub f64);

impl MeanPhotonNumber {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// `|alpha|^2`, `2 sinh^2 r` or `4 sinh^2 r`.
pub fn mean_photon_number(spec: &SourceSpec) -> Result<MeanPhotonNumber> {
    spec.validate()?;
    let n = match spec.kind {
        SourceKind::Coherent { alpha } => alpha.norm_sqr(),
        SourceKind::CollinearPdc { r, .. } => 2.0 * r.sinh().powi(2),
        SourceKind::NoncollinearPdc { r } => 4.0 * r.sinh().powi(2),
    };
    Ok(MeanPhotonNumber(n))
}

/// `(-e^{i phi} tanh r)^n / cosh r` on `|n, n, 0, 0>` for `n <= n_max`.
pub fn collinear_state(r: f64, phi: f64, n_max: u32) -> Result<KetState> {
    check_r(r)?;
    let (t, norm) = (r.tanh(), r.cosh().recip());
    let components = (0..=n_max).map(|n| {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let amp = Complex64::from_polar(sign * t.powi(n as i32) * norm, f64::from(n) * phi);
        (Occupation::new(n, n, 0, 0), amp)
    });
    KetState::from_amplitudes(components, truncation_tail(PdcKind::Collinear, r, n_max))
}

/// `(-1)^m tanh^n r / cosh^2 r` on `|n-m, m, m, n-m>` for `0 <= m <= n <= n_max`.
pub fn noncollinear_state(r: f64, n_max: u32) -> Result<KetState> {
    check_r(r)?;
    let (t, norm) = (r.tanh(), r.cosh().powi(2).recip());
    let components = (0..=n_max).flat_map(move |n| {
        let mag = t.powi(n as i32) * norm;
        (0..=n).map(move |m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            (Occupation::new(n - m, m, m, n - m), Complex64::new(sign * mag, 0.0))
        })
    });
    KetState::from_amplitudes(components, truncation_tail(PdcKind::Noncollinear, r, n_max))
}

/// Weight of the pair numbers above `n_max`.
///
/// Collinear: `tanh^{2(n_max+1)} r`. Non-collinear, with `t = tanh^2 r`:
/// `t^{n_max+1} ((n_max+1)(1-t) + 1)`.
pub fn truncation_tail(kind: PdcKind, r: f64, n_max: u32) -> f64 {
    let t = r.tanh().powi(2);
    let k = n_max as i32 + 1;
    match kind {
        PdcKind::Collinear => t.powi(k),
        PdcKind::Noncollinear => t.powi(k) * (f64::from(k) * (1.0 - t) + 1.0),
    }
}

/// Smallest `n_max` in `1..=cap` whose tail, weighted by `(n_max + 4)^4` to
/// account for fourth-order moments, is below `epsilon * tanh^8 r`.
///
/// The `tanh^8 r` factor makes `epsilon` a relative target: four-photon
/// observables scale like it at weak pumping, so an absolute bound would
/// leave them with few correct digits there.
pub fn select_n_max(kind: PdcKind, r: f64, epsilon: f64, cap: u32) -> Result<u32> {
    check_r(r)?;
    if r == 0.0 {
        return Ok(1);
    }
    let scale = r.tanh().powi(8);
    (1..=cap)
        .find(|&n| truncation_tail(kind, r, n) * f64::from(n + 4).powi(4) < epsilon * scale)
        .ok_or(Error::Truncation { r, epsilon, cap })
}

/// `(|alpha|^2 cos^2(theta/2), |alpha|^2 sin^2(theta/2))` for an `x`-polarized coherent input.
pub fn coherent_intensity_pair(alpha: Complex64, theta: f64) -> (f64, f64) {
    let total = alpha.norm_sqr();
    let ix = total * (theta / 2.0).cos().powi(2);
    (ix, total - ix)
}
