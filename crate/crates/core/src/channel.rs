//! The magneto-optically active medium.
//!
//! The medium is described by two angles: the rotation angle
//! `theta = k l (chi_plus - chi_minus)` and the common phase
//! `theta_plus = k l chi_plus`. Modes in spatial mode `a` travel along the
//! field and see `theta`; in the non-collinear geometry, spatial mode `b`
//! travels against it and sees `-theta`.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fock::{apply_two_mode_unitary, KetState, Mode, TwoModeUnitary};
use crate::oracles;

/// Raw material description.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Susceptibilities {
    pub chi_plus: f64,
    pub chi_minus: f64,
    /// Wavenumber.
    pub k: f64,
    /// Medium length.
    pub l: f64,
}

impl Susceptibilities {
    pub fn theta(&self) -> f64 {
        self.k * self.l * (self.chi_plus - self.chi_minus)
    }

    pub fn theta_plus(&self) -> f64 {
        self.k * self.l * self.chi_plus
    }

    pub fn chi_sum(&self) -> f64 {
        self.chi_plus + self.chi_minus
    }

    /// `chi_plus - chi_minus`; `omega * t` plays the role of `theta`.
    pub fn omega(&self) -> f64 {
        self.chi_plus - self.chi_minus
    }
}

/// The medium as seen by the light: rotation angle and common phase.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MediumSpec {
    pub theta: f64,
    pub theta_plus: f64,
}

impl MediumSpec {
    pub fn new(theta: f64, theta_plus: f64) -> Self {
        MediumSpec { theta, theta_plus }
    }

    pub fn rotation_only(theta: f64) -> Self {
        MediumSpec { theta, theta_plus: 0.0 }
    }

    pub fn from_susceptibilities(s: &Susceptibilities) -> Result<Self> {
        if s.l < 0.0 {
            return invalid(format!("medium length must be >= 0, got {}", s.l));
        }
        let m = MediumSpec::new(s.theta(), s.theta_plus());
        if !(m.theta.is_finite() && m.theta_plus.is_finite()) {
            return invalid("susceptibilities produce a non-finite angle");
        }
        Ok(m)
    }

    /// Resolves a medium given either or both descriptions. Direct angles win;
    /// when both are present a warning is returned alongside the result.
    pub fn resolve(raw: Option<Susceptibilities>, angles: Option<(f64, f64)>) -> Result<(Self, Option<String>)> {
        match (raw, angles) {
            (_, Some((theta, theta_plus))) => {
                let warning =
                    raw.map(|_| "both susceptibilities and direct angles given; using the direct angles".to_string());
                Ok((MediumSpec::new(theta, theta_plus), warning))
            }
            (Some(s), None) => Ok((MediumSpec::from_susceptibilities(&s)?, None)),
            (None, None) => invalid("medium needs either susceptibilities or angles"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Collinear,
    Noncollinear,
}

impl std::str::FromStr for Geometry {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "collinear" => Ok(Geometry::Collinear),
            "noncollinear" | "non-collinear" => Ok(Geometry::Noncollinear),
            _ => invalid(format!("unknown geometry '{s}'")),
        }
    }
}

/// `e^{i theta_plus} e^{i theta/2} [[cos(theta/2), -sin(theta/2)], [sin(theta/2), cos(theta/2)]]`.
pub fn rotation_matrix(theta: f64, theta_plus: f64) -> TwoModeUnitary {
    let (s, c) = (theta / 2.0).sin_cos();
    let phase = Complex64::from_polar(1.0, theta_plus + theta / 2.0);
    // Entries have modulus <= 1 and the matrix is unitary by construction.
    TwoModeUnitary::new([[phase * c, -phase * s], [phase * s, phase * c]]).expect("rotation matrix is unitary")
}

/// Builds the H/V-basis matrix from phases picked up by the circular
/// components `a_plus = (a_H + i a_V)/sqrt 2` and `a_minus = (a_H - i a_V)/sqrt 2`.
///
/// With `phase_plus = theta_plus + theta` and `phase_minus = theta_plus` this
/// equals [`rotation_matrix`].
pub fn rotation_from_circular_phases(phase_plus: f64, phase_minus: f64) -> TwoModeUnitary {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let i = Complex64::i();
    // rows: a_plus, a_minus in terms of (a_H, a_V)
    let basis = [[Complex64::new(h, 0.0), i * h], [Complex64::new(h, 0.0), -i * h]];
    let d = [
        Complex64::from_polar(1.0, phase_plus),
        Complex64::from_polar(1.0, phase_minus),
    ];
    let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (r, row) in m.iter_mut().enumerate() {
        for (c, out) in row.iter_mut().enumerate() {
            *out = (0..2).map(|k| basis[k][r].conj() * d[k] * basis[k][c]).sum();
        }
    }
    TwoModeUnitary::new(m).expect("conjugated diagonal phase is unitary")
}

/// Propagates `state` through the medium.
pub fn apply_mor(state: &KetState, medium: &MediumSpec, geometry: Geometry) -> Result<KetState> {
    propagate(state, medium, geometry, -1.0)
}

/// Deliberately wrong channel that rotates beam `b` the same way as beam `a`.
/// Exists so the verification suite can prove it notices the difference.
#[doc(hidden)]
pub fn apply_mor_unreversed(state: &KetState, medium: &MediumSpec, geometry: Geometry) -> Result<KetState> {
    propagate(state, medium, geometry, 1.0)
}

/// Shared body of [`apply_mor`]. `b_sign` is the factor applied to both
/// angles for spatial mode `b`; the physical channel uses `-1`.
pub(crate) fn propagate(state: &KetState, medium: &MediumSpec, geometry: Geometry, b_sign: f64) -> Result<KetState> {
    let forward = rotation_matrix(medium.theta, medium.theta_plus);
    match geometry {
        Geometry::Collinear => {
            if state.max_photons_in(&[Mode::BH, Mode::BV]) > 0 {
                return invalid("collinear geometry needs empty b modes");
            }
            apply_two_mode_unitary(state, (Mode::AH, Mode::AV), &forward)
        }
        Geometry::Noncollinear => {
            let backward = rotation_matrix(b_sign * medium.theta, b_sign * medium.theta_plus);
            let a = apply_two_mode_unitary(state, (Mode::AH, Mode::AV), &forward)?;
            apply_two_mode_unitary(&a, (Mode::BH, Mode::BV), &backward)
        }
    }
}

/// Closed-form two-photon evolution of `|1,1>`: amplitudes on
/// `(|2,0>, |0,2>, |1,1>)` up to a global phase.
pub fn two_photon_closed_form(theta: f64) -> [f64; 3] {
    oracles::two_photon_appendix(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{normally_ordered_moment, projection_probability, Occupation};
    use crate::sources::{collinear_state, noncollinear_state};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn max_entry_diff(a: &TwoModeUnitary, b: &TwoModeUnitary) -> f64 {
        let (a, b) = (a.matrix(), b.matrix());
        (0..4)
            .map(|i| (a[i / 2][i % 2] - b[i / 2][i % 2]).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotation_matrix(0.0, 0.0), TwoModeUnitary::identity());
        let m = rotation_matrix(PI, 0.0).matrix();
        let i = Complex64::i();
        assert_abs_diff_eq!(m[0][0].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((m[0][1] + i).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((m[1][0] - i).norm(), 0.0, epsilon = 1e-15);
        for theta in [0.0, 0.3, -1.7, 4.0] {
            for tp in [0.0, 0.9] {
                let r = rotation_matrix(theta, tp);
                assert!(r.unitarity_error() < 1e-15);
                assert_abs_diff_eq!(r.determinant().norm(), 1.0, epsilon = 1e-15);
            }
        }
        let r = rotation_matrix(0.0, 0.6).matrix();
        assert_abs_diff_eq!(r[0][1].norm(), 0.0);
        assert_abs_diff_eq!((r[0][0] - r[1][1]).norm(), 0.0);
    }

    #[test]
    fn circular_basis_reproduces_rotation() {
        for theta in [0.0, 0.4, 2.2, -3.0] {
            for tp in [0.0, 1.1] {
                let via_circular = rotation_from_circular_phases(tp + theta, tp);
                assert!(max_entry_diff(&via_circular, &rotation_matrix(theta, tp)) < 1e-15);
            }
            // symmetric phases: same up to global phase e^{i theta/2}
            let sym = rotation_from_circular_phases(theta / 2.0, -theta / 2.0).matrix();
            let r = rotation_matrix(theta, 0.0).matrix();
            let g = Complex64::from_polar(1.0, theta / 2.0);
            for i in 0..4 {
                assert_abs_diff_eq!((sym[i / 2][i % 2] * g - r[i / 2][i % 2]).norm(), 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn medium_from_susceptibilities() {
        let s = Susceptibilities {
            chi_plus: 0.3,
            chi_minus: 0.1,
            k: 2.0,
            l: 1.5,
        };
        let m = MediumSpec::from_susceptibilities(&s).unwrap();
        assert_abs_diff_eq!(m.theta, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(m.theta_plus, 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(s.chi_sum(), 0.4);
        assert_abs_diff_eq!(s.omega(), 0.2, epsilon = 1e-16);
        assert!(MediumSpec::from_susceptibilities(&Susceptibilities { l: -1.0, ..s }).is_err());

        let (m, warn) = MediumSpec::resolve(Some(s), Some((1.0, 2.0))).unwrap();
        assert_eq!(m, MediumSpec::new(1.0, 2.0));
        assert!(warn.is_some());
        let (m, warn) = MediumSpec::resolve(Some(s), None).unwrap();
        assert_abs_diff_eq!(m.theta, 0.6, epsilon = 1e-15);
        assert!(warn.is_none());
        assert!(MediumSpec::resolve(None, None).is_err());
    }

    #[test]
    fn one_one_matches_closed_form() {
        let s = KetState::basis(Occupation::new(1, 1, 0, 0));
        for k in 0..100 {
            let theta = -PI + 2.0 * PI * f64::from(k) / 99.0;
            let out = apply_mor(&s, &MediumSpec::new(theta, 0.37), Geometry::Collinear).unwrap();
            let got = [
                out.amplitude(&Occupation::new(2, 0, 0, 0)),
                out.amplitude(&Occupation::new(0, 2, 0, 0)),
                out.amplitude(&Occupation::new(1, 1, 0, 0)),
            ];
            let want = two_photon_closed_form(theta);
            let pivot = (0..3).max_by(|&i, &j| want[i].abs().total_cmp(&want[j].abs())).unwrap();
            let phase = got[pivot] / want[pivot];
            assert_abs_diff_eq!(phase.norm(), 1.0, epsilon = 1e-13);
            for i in 0..3 {
                assert_abs_diff_eq!((got[i] / phase - want[i]).norm(), 0.0, epsilon = 1e-13);
            }
        }
        let [c, d, f] = two_photon_closed_form(PI / 2.0);
        assert_abs_diff_eq!(c, FRAC_1_SQRT_2, epsilon = 1e-16);
        assert_abs_diff_eq!(d, -FRAC_1_SQRT_2, epsilon = 1e-16);
        assert_abs_diff_eq!(f, 0.0, epsilon = 1e-16);
    }

    #[test]
    fn collinear_rejects_populated_b_modes() {
        let s = noncollinear_state(0.5, 2).unwrap();
        assert!(apply_mor(&s, &MediumSpec::rotation_only(0.1), Geometry::Collinear).is_err());
    }

    #[test]
    fn zero_rotation_leaves_observables() {
        let s = collinear_state(0.8, 0.0, 30).unwrap();
        let out = apply_mor(&s, &MediumSpec::new(0.0, 1.2), Geometry::Collinear).unwrap();
        for p in [[1, 1, 0, 0], [2, 2, 0, 0], [1, 0, 0, 0]] {
            assert_abs_diff_eq!(
                normally_ordered_moment(&out, p),
                normally_ordered_moment(&s, p),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn counter_propagation_sign_matters() {
        let s = noncollinear_state(1.0, 2).unwrap();
        let target = Occupation::new(1, 1, 1, 1);
        let m = MediumSpec::rotation_only(PI / 4.0);
        let right = projection_probability(&apply_mor(&s, &m, Geometry::Noncollinear).unwrap(), &target);
        let wrong = projection_probability(&propagate(&s, &m, Geometry::Noncollinear, 1.0).unwrap(), &target);
        assert_abs_diff_eq!(right, 0.0, epsilon = 1e-15);
        assert!(wrong > 0.05);
    }
}
