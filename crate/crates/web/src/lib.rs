//! WebAssembly bindings behind `www/index.html`: a fringe explorer, the
//! two-photon visibility curve and the four-photon envelopes.
//!
//! Every export returns a flat `Float64Array` (or throws a string) so the page
//! needs no glue beyond what `wasm-bindgen --target web` generates.

use std::f64::consts::TAU;

use mor_core::detection::{default_geometry, linspace, ObservableSpec};
use mor_core::oracles;
use mor_core::sweep::{envelope_value, golden_section_max};
use mor_core::{Evaluator, Geometry, SourceSpec, Truncation};
use num_complex::Complex64;
use wasm_bindgen::prelude::*;

fn source(kind: &str, strength: f64) -> Result<SourceSpec, String> {
    match kind {
        "coherent" => Ok(SourceSpec::coherent(Complex64::new(strength, 0.0))),
        "collinear" => Ok(SourceSpec::collinear(strength)),
        "noncollinear" => Ok(SourceSpec::noncollinear(strength)),
        _ => Err(format!("unknown source '{kind}'")),
    }
}

/// Observable values at `points` angles spanning `[0, 2 pi]`.
///
/// `strength` is `|alpha|` for coherent light and `r` otherwise. Collinear
/// moment observables are resummed so strong pumping stays cheap.
pub fn fringe_values(kind: &str, strength: f64, observable: &str, points: usize) -> Result<Vec<f64>, String> {
    let mut src = source(kind, strength)?;
    let obs: ObservableSpec = observable.parse().map_err(|e: mor_core::Error| e.to_string())?;
    if kind == "collinear" && !matches!(obs, ObservableSpec::FourPhotonProjection(_)) {
        src = src.with_truncation(Truncation::Resummed);
    }
    let grid = linspace(0.0, TAU, points).map_err(|e| e.to_string())?;
    Evaluator::default()
        .fringe_scan(&src, 0.0, default_geometry(&src), &obs, &grid)
        .map(|s| s.values)
        .map_err(|e| e.to_string())
}

/// `[r, numeric, closed form]` triples of the two-photon visibility on `(0, r_max]`.
pub fn visibility_triples(r_max: f64, points: usize) -> Result<Vec<f64>, String> {
    let ev = Evaluator::default();
    let obs = ObservableSpec::TwoPhotonCoincidence(mor_core::fock::Mode::AH, mor_core::fock::Mode::AV);
    let rs = linspace(0.01, r_max, points).map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(3 * rs.len());
    for r in rs {
        let src = SourceSpec::collinear(r).with_truncation(Truncation::Resummed);
        let v = ev
            .visibility_scan(&src, Geometry::Collinear, &obs, 129)
            .map_err(|e| e.to_string())?;
        out.extend([r, v.v, oracles::two_photon_visibility(r)]);
    }
    Ok(out)
}

/// Envelope values on `[0, r_max]` followed by the refined `[argmax, max]`.
pub fn envelope_curve(geometry: &str, r_max: f64, points: usize) -> Result<Vec<f64>, String> {
    let geometry: Geometry = geometry.parse().map_err(|e: mor_core::Error| e.to_string())?;
    let ev = Evaluator::default();
    let rs = linspace(0.0, r_max, points).map_err(|e| e.to_string())?;
    let values = rs
        .iter()
        .map(|&r| envelope_value(geometry, r, false, &ev))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let best = (0..values.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b });
    let (lo, hi) = (rs[best.saturating_sub(1)], rs[(best + 1).min(rs.len() - 1)]);
    let (argmax, max) =
        golden_section_max(|r| envelope_value(geometry, r, false, &ev), lo, hi, 1e-9).map_err(|e| e.to_string())?;
    let mut out = values;
    out.extend([argmax, max]);
    Ok(out)
}

#[wasm_bindgen]
pub fn fringe(kind: &str, strength: f64, observable: &str, points: usize) -> Result<Vec<f64>, JsValue> {
    fringe_values(kind, strength, observable, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn visibility(r_max: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    visibility_triples(r_max, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn envelope(geometry: &str, r_max: f64, points: usize) -> Result<Vec<f64>, JsValue> {
    envelope_curve(geometry, r_max, points).map_err(|e| JsValue::from_str(&e))
}
