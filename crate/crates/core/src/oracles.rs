//! Closed-form fringe, probability and variance expressions.
//!
//! Nothing in here touches the Fock-space engine; these functions are the
//! reference the engine is checked against and back the CLI's `exact` mode.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Coherent `x` output intensity, `|alpha|^2 cos^2(theta/2)`.
pub fn coherent_ix(alpha_abs: f64, theta: f64) -> f64 {
    alpha_abs.powi(2) * (theta / 2.0).cos().powi(2)
}

/// Coherent `y` output intensity, `|alpha|^2 sin^2(theta/2)`.
pub fn coherent_iy(alpha_abs: f64, theta: f64) -> f64 {
    alpha_abs.powi(2) * (theta / 2.0).sin().powi(2)
}

/// Number-difference variance quoted for the coherent source, `|alpha|^2 sin^2 theta`.
pub fn coherent_nd_variance(alpha_abs: f64, theta: f64) -> f64 {
    alpha_abs.powi(2) * theta.sin().powi(2)
}

/// Per-mode intensity of collinear PDC after the medium, `sinh^2 r`.
pub fn collinear_intensity(r: f64) -> f64 {
    r.sinh().powi(2)
}

/// Two-photon coincidence, `cos^2 theta sinh^2 r cosh^2 r + sinh^4 r`.
pub fn collinear_coincidence(r: f64, theta: f64) -> f64 {
    let (s2, c2) = (r.sinh().powi(2), r.cosh().powi(2));
    theta.cos().powi(2) * s2 * c2 + s2 * s2
}

/// Collinear number-difference variance, `4 sinh^2 r cosh^2 r sin^2 theta`.
pub fn collinear_nd_variance(r: f64, theta: f64) -> f64 {
    4.0 * (r.sinh() * r.cosh()).powi(2) * theta.sin().powi(2)
}

/// Non-collinear `|1,1,1,1>` probability, `tanh^4 r / cosh^4 r * cos^2(2 theta)`.
pub fn noncollinear_projection(r: f64, theta: f64) -> f64 {
    r.tanh().powi(4) / r.cosh().powi(4) * (2.0 * theta).cos().powi(2)
}

/// Collinear `|2,2>` probability, `tanh^4 r / cosh^2 r * (1 + 3 cos 2theta)^2 / 16`.
pub fn collinear_projection(r: f64, theta: f64) -> f64 {
    r.tanh().powi(4) / r.cosh().powi(2) * (1.0 + 3.0 * (2.0 * theta).cos()).powi(2) / 16.0
}

/// Four-photon Glauber coincidence `<a_H†² a_V†² a_H² a_V²>` for collinear PDC.
pub fn collinear_glauber4(r: f64, theta: f64) -> f64 {
    let (s, c) = (r.sinh(), r.cosh());
    let cos2 = theta.cos().powi(2);
    (3.0 * cos2 - 1.0).powi(2) * s.powi(4) * c.powi(4)
        + 4.0 * (3.0 * cos2 + 1.0) * s.powi(6) * c.powi(2)
        + 4.0 * s.powi(8)
}

/// Amplitudes on `(|2,0>, |0,2>, |1,1>)` reached from `|1,1>` by a rotation of
/// angle `theta`, global phase removed.
pub fn two_photon_appendix(theta: f64) -> [f64; 3] {
    let s = theta.sin() * FRAC_1_SQRT_2;
    [s, -s, theta.cos()]
}

/// Two-photon fringe visibility, `1 / (1 + 2 tanh^2 r)`.
pub fn two_photon_visibility(r: f64) -> f64 {
    1.0 / (1.0 + 2.0 * r.tanh().powi(2))
}

/// Names for the closed forms, used by the CLI and the verification report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleId {
    CohIx,
    CohIy,
    CohVar,
    ColIntensity,
    ColIhv,
    ColVar,
    PNon,
    PCol,
    IHhvv,
    TwoPhotonAppendix,
    Vis2Closed,
}

impl OracleId {
    pub const ALL: [OracleId; 11] = [
        OracleId::CohIx,
        OracleId::CohIy,
        OracleId::CohVar,
        OracleId::ColIntensity,
        OracleId::ColIhv,
        OracleId::ColVar,
        OracleId::PNon,
        OracleId::PCol,
        OracleId::IHhvv,
        OracleId::TwoPhotonAppendix,
        OracleId::Vis2Closed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OracleId::CohIx => "coh_ix",
            OracleId::CohIy => "coh_iy",
            OracleId::CohVar => "coh_var",
            OracleId::ColIntensity => "col_intensity",
            OracleId::ColIhv => "col_ihv",
            OracleId::ColVar => "col_var",
            OracleId::PNon => "p_non",
            OracleId::PCol => "p_col",
            OracleId::IHhvv => "i_hhvv",
            OracleId::TwoPhotonAppendix => "two_photon_appendix",
            OracleId::Vis2Closed => "vis2_closed",
        }
    }
}

impl fmt::Display for OracleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OracleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OracleId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown oracle id '{s}'")))
    }
}

/// Inputs to [`oracle`]. `alpha` is used by the coherent oracles, `r` by the rest.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OracleParams {
    pub r: f64,
    pub alpha: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleValue {
    Real(f64),
    Amplitudes([f64; 3]),
}

impl OracleValue {
    pub fn real(self) -> Option<f64> {
        match self {
            OracleValue::Real(v) => Some(v),
            OracleValue::Amplitudes(_) => None,
        }
    }
}

pub fn oracle(id: OracleId, p: OracleParams) -> Result<OracleValue> {
    if !(p.r >= 0.0) {
        return invalid(format!("interaction parameter r must be >= 0, got {}", p.r));
    }
    let a = p.alpha.abs();
    let v = match id {
        OracleId::CohIx => coherent_ix(a, p.theta),
        OracleId::CohIy => coherent_iy(a, p.theta),
        OracleId::CohVar => coherent_nd_variance(a, p.theta),
        OracleId::ColIntensity => collinear_intensity(p.r),
        OracleId::ColIhv => collinear_coincidence(p.r, p.theta),
        OracleId::ColVar => collinear_nd_variance(p.r, p.theta),
        OracleId::PNon => noncollinear_projection(p.r, p.theta),
        OracleId::PCol => collinear_projection(p.r, p.theta),
        OracleId::IHhvv => collinear_glauber4(p.r, p.theta),
        OracleId::Vis2Closed => two_photon_visibility(p.r),
        OracleId::TwoPhotonAppendix => return Ok(OracleValue::Amplitudes(two_photon_appendix(p.theta))),
    };
    Ok(OracleValue::Real(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn reference_values() {
        assert_relative_eq!(
            noncollinear_projection(1.0, 0.0),
            0.059_338_959_573_606_33,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            collinear_projection(1.0, 0.0),
            0.141_291_868_797_406_9,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            collinear_coincidence(0.5, 0.0),
            0.419_008_605_363_286,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            collinear_coincidence(0.5, PI / 2.0),
            0.073_734_143_977_832_04,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            two_photon_visibility(1.0),
            0.462_951_964_259_086_7,
            max_relative = 1e-14
        );
        for theta in [0.0, 0.4, 2.0] {
            assert_eq!(collinear_glauber4(0.0, theta), 0.0);
        }
        let [c, d, f] = two_photon_appendix(PI / 4.0);
        assert_relative_eq!(c, 0.5, max_relative = 1e-15);
        assert_relative_eq!(d, -0.5, max_relative = 1e-15);
        assert_relative_eq!(f, FRAC_1_SQRT_2, max_relative = 1e-15);
    }

    #[test]
    fn dispatch_and_ids() {
        let p = OracleParams {
            r: 1.0,
            alpha: 0.0,
            theta: 0.0,
        };
        assert_relative_eq!(
            oracle(OracleId::PNon, p).unwrap().real().unwrap(),
            0.059_338_959_573_606_33,
            max_relative = 1e-14
        );
        assert!(oracle(OracleId::TwoPhotonAppendix, p).unwrap().real().is_none());
        assert!("p_nonsense".parse::<OracleId>().is_err());
        for id in OracleId::ALL {
            assert_eq!(id.name().parse::<OracleId>().unwrap(), id);
        }
        assert!(oracle(OracleId::ColIhv, OracleParams { r: -1.0, ..p }).is_err());
    }

    proptest! {
        #[test]
        fn projection_and_glauber_leading_terms_agree(theta in -10.0f64..10.0) {
            let lhs = (1.0 + 3.0 * (2.0 * theta).cos()).powi(2) / 16.0;
            let rhs = (3.0 * theta.cos().powi(2) - 1.0).powi(2) / 4.0;
            prop_assert!((lhs - rhs).abs() < 1e-13);
        }

        #[test]
        fn coherent_intensities_sum(alpha in 0.0f64..20.0, theta in -10.0f64..10.0) {
            let total = coherent_ix(alpha, theta) + coherent_iy(alpha, theta);
            prop_assert!((total - alpha * alpha).abs() <= 1e-12 * alpha * alpha.max(1.0));
        }

        #[test]
        fn appendix_amplitudes_normalized(theta in -10.0f64..10.0) {
            let n: f64 = two_photon_appendix(theta).iter().map(|a| a * a).sum();
            prop_assert!((n - 1.0).abs() < 1e-14);
        }
    }
}
