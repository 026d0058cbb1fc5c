//! Browser bindings for the static demo page in `www/`.
//!
//! Three operations: a Φ heatmap over the two dephasing angles applied to a
//! Bell pair, a Φ curve under uniform local depolarizing noise, and a
//! summary (Φ, optimal cut, Newick dendrogram) for a named state.

use qphi::dendrogram;
use qphi::{generators, DensityMatrix, LocalChannel, PhiConfig};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js_err(e: qphi::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Named demo states: `bell`, `ghz3`, `ghz4`, `w3`, `w4`.
pub fn named_state(name: &str) -> Result<DensityMatrix, qphi::Error> {
    match name {
        "bell" => Ok(generators::bell()),
        "ghz3" => generators::ghz(3),
        "ghz4" => generators::ghz(4),
        "w3" => generators::w(3),
        "w4" => generators::w(4),
        other => Err(qphi::Error::BadParameter(format!("unknown state {other:?}"))),
    }
}

fn grid(points: usize, hi: f64) -> Vec<f64> {
    (0..points).map(|k| if points == 1 { 0.0 } else { hi * k as f64 / (points - 1) as f64 }).collect()
}

/// Φ of a Bell pair after dephasing qubit 0 at `(θ₀, φ₀)` and qubit 1 at
/// `(θ₁, φ₁)`, for `θ₀, θ₁` on a `points × points` grid over `[0, π]`.
/// Row-major with `θ₀` along rows.
pub fn dephasing_heatmap_native(points: usize, phi0: f64, phi1: f64) -> Result<Vec<f64>, qphi::Error> {
    if points == 0 || points > 256 {
        return Err(qphi::Error::GridTooLarge { points: points * points, cap: 256 * 256 });
    }
    let bell = generators::bell();
    let thetas = grid(points, std::f64::consts::PI);
    let cfg = PhiConfig::default();
    let mut out = Vec::with_capacity(points * points);
    for &t0 in &thetas {
        for &t1 in &thetas {
            let ch = LocalChannel::dephasing(&[(t0, phi0), (t1, phi1)])?;
            out.push(qphi::phi(&ch.apply(&bell)?, &cfg)?.phi.nats());
        }
    }
    Ok(out)
}

/// Φ of `state` under depolarizing noise of strength `p` on every site,
/// for `p` on `points` values over `[0, 1]`.
pub fn depolarizing_curve_native(state: &str, points: usize) -> Result<Vec<f64>, qphi::Error> {
    if points == 0 || points > 1024 {
        return Err(qphi::Error::GridTooLarge { points, cap: 1024 });
    }
    let rho = named_state(state)?;
    let cfg = PhiConfig::default();
    grid(points, 1.0)
        .into_iter()
        .map(|p| {
            let ch = LocalChannel::depolarizing(rho.layout(), &vec![p; rho.n()])?;
            Ok(qphi::phi(&ch.apply(&rho)?, &cfg)?.phi.nats())
        })
        .collect()
}

pub fn summary_native(state: &str) -> Result<String, qphi::Error> {
    let rho = named_state(state)?;
    let cfg = PhiConfig::default();
    let r = qphi::phi(&rho, &cfg)?;
    let tree = dendrogram::build(&rho, &cfg)?;
    Ok(json!({
        "state": state,
        "phi_nats": r.phi.nats(),
        "phi_bits": r.phi.bits(),
        "cut": r.optimal_cut.to_string(),
        "tie_count": r.ties.len(),
        "newick": tree.to_newick(),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn dephasing_heatmap(points: usize, phi0: f64, phi1: f64) -> Result<Vec<f64>, JsError> {
    dephasing_heatmap_native(points, phi0, phi1).map_err(js_err)
}

#[wasm_bindgen]
pub fn depolarizing_curve(state: &str, points: usize) -> Result<Vec<f64>, JsError> {
    depolarizing_curve_native(state, points).map_err(js_err)
}

#[wasm_bindgen]
pub fn summary(state: &str) -> Result<String, JsError> {
    summary_native(state).map_err(js_err)
}
