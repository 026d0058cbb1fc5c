//! Von Neumann entropy, the quantum Jensen–Shannon divergence, its square
//! root metric, and negative-type diagnostics for the divergence.
//!
//! All values are in nats.

use std::f64::consts::LN_2;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::state::DensityMatrix;
use crate::{par, rng};

/// Anything more negative than this signals a corrupted state.
const BREAKDOWN_TOL: f64 = 1e-9;

/// A divergence in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct DivergenceValue(f64);

impl DivergenceValue {
    pub const ZERO: Self = Self(0.0);

    pub fn from_nats(nats: f64) -> Self {
        Self(nats)
    }

    pub fn nats(self) -> f64 {
        self.0
    }

    pub fn bits(self) -> f64 {
        self.0 / LN_2
    }
}

impl fmt::Display for DivergenceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} nats", self.0)
    }
}

/// `−Σ λ ln λ` with `0 ln 0 = 0`.
pub fn spectrum_entropy(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &lam in eigenvalues {
        if lam < -BREAKDOWN_TOL {
            return Err(Error::NumericalBreakdown(format!("eigenvalue {lam:e} below zero")));
        }
        // eigenvalues in [-1e-9, 0] carry no mass
        if lam > 0.0 {
            s -= lam * lam.ln();
        }
    }
    Ok(s.max(0.0))
}

pub(crate) fn matrix_entropy(m: &CMatrix) -> Result<f64> {
    spectrum_entropy(&linalg::eigvalsh(m))
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    matrix_entropy(rho.matrix())
}

/// QJSD from matrices with their entropies already known. Clamped at zero.
pub(crate) fn qjsd_raw(a: &CMatrix, s_a: f64, b: &CMatrix, s_b: f64) -> Result<f64> {
    let mid = (a + b).scale(0.5);
    let s_mid = matrix_entropy(&mid)?;
    Ok((s_mid - 0.5 * s_a - 0.5 * s_b).max(0.0))
}

/// `S((ρ+σ)/2) − S(ρ)/2 − S(σ)/2`.
pub fn qjsd(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<DivergenceValue> {
    if rho.layout() != sigma.layout() {
        return Err(Error::LayoutMismatch);
    }
    let s_rho = von_neumann_entropy(rho)?;
    let s_sigma = von_neumann_entropy(sigma)?;
    qjsd_raw(rho.matrix(), s_rho, sigma.matrix(), s_sigma).map(DivergenceValue)
}

/// The square-root metric `δ = √QJSD`.
pub fn delta(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    qjsd(rho, sigma).map(|d| d.nats().sqrt())
}

/// Pairwise QJSD matrix of an ensemble.
pub fn divergence_matrix(states: &[DensityMatrix]) -> Result<DMatrix<f64>> {
    let n = states.len();
    if let Some(first) = states.first() {
        if states.iter().any(|s| s.layout() != first.layout()) {
            return Err(Error::LayoutMismatch);
        }
    }
    let entropies = states.iter().map(von_neumann_entropy).collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let values = par::map(&pairs, |&(i, j)| {
        qjsd_raw(states[i].matrix(), entropies[i], states[j].matrix(), entropies[j])
    });
    let mut d = DMatrix::zeros(n, n);
    for (&(i, j), v) in pairs.iter().zip(values) {
        let v = v?;
        d[(i, j)] = v;
        d[(j, i)] = v;
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramReport {
    pub size: usize,
    pub trials: usize,
    /// Smallest eigenvalue of the shifted kernel `ln 2 − D_ij`.
    pub min_eigenvalue: f64,
    /// Largest `Σ a_i a_j D_ij` over the sampled zero-sum unit vectors.
    pub negative_type_max_violation: f64,
}

/// Samples zero-sum coefficient vectors and evaluates the quadratic form of
/// the divergence matrix; also reports the spectrum floor of `ln 2 − D`.
pub fn negative_type_check(states: &[DensityMatrix], trials: usize, seed: u64) -> Result<GramReport> {
    if states.len() < 2 {
        return Err(Error::TooFewStates(states.len()));
    }
    let d = divergence_matrix(states)?;
    Ok(negative_type_from_matrix(&d, trials, seed))
}

pub(crate) fn negative_type_from_matrix(d: &DMatrix<f64>, trials: usize, seed: u64) -> GramReport {
    let n = d.nrows();
    let mut rng = rng::stream(rng::substream(seed, "negative-type"));
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let a: Vec<f64> = (0..n).map(|_| rng::complex_gaussian(&mut rng).re).collect();
        let mean = a.iter().sum::<f64>() / n as f64;
        let centered: Vec<f64> = a.iter().map(|x| x - mean).collect();
        let norm = centered.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let c: Vec<f64> = centered.iter().map(|x| x / norm).collect();
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                q += c[i] * c[j] * d[(i, j)];
            }
        }
        worst = worst.max(q);
    }
    let gram = DMatrix::from_fn(n, n, |i, j| LN_2 - d[(i, j)]);
    let min_eigenvalue = gram.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
    GramReport {
        size: n,
        trials,
        min_eigenvalue,
        negative_type_max_violation: if worst.is_finite() { worst } else { 0.0 },
    }
}
