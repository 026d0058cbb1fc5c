//! The difference witness `W = σ* − ρ` built from a Φ computation, and
//! empirical probes of its sign behavior.
//!
//! Nothing here asserts the textbook witness properties. [`ClaimRecord`]
//! puts `Tr[Wρ]` next to `−Φ(ρ)`, and [`product_state_scan`] looks for
//! product states with negative expectation; both are reported as measured.

use serde::{Deserialize, Serialize};

use crate::entropy::DivergenceValue;
use crate::error::{Error, Result};
use crate::generators;
use crate::io::ComplexMatrixJson;
use crate::linalg::{self, CMatrix};
use crate::phi::PhiResult;
use crate::state::{assemble_blocks, Bipartition, DensityMatrix, SubsystemLayout};
use crate::{par, rng};

/// Expectations below this count as negative in scans.
pub const NEGATIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    op: CMatrix,
    layout: SubsystemLayout,
    cut: Bipartition,
    phi_at_construction: DivergenceValue,
}

impl Witness {
    pub fn op(&self) -> &CMatrix {
        &self.op
    }

    pub fn cut(&self) -> Bipartition {
        self.cut
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn phi_at_construction(&self) -> DivergenceValue {
        self.phi_at_construction
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.op).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.op)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        linalg::max_abs(&self.op) <= tol
    }
}

/// `W = σ* − ρ` on the optimal cut of `result`.
pub fn build_witness(rho: &DensityMatrix, result: &PhiResult) -> Witness {
    Witness {
        op: result.sigma_star.matrix() - rho.matrix(),
        layout: rho.layout().clone(),
        cut: result.optimal_cut,
        phi_at_construction: result.phi,
    }
}

/// `Tr[W · state]` (real part; the imaginary residue is checked).
pub fn expectation(w: &Witness, state: &DensityMatrix) -> Result<f64> {
    if state.dim() != w.op.nrows() {
        return Err(Error::DimensionMismatch { expected: w.op.nrows(), found: state.dim() });
    }
    let z = linalg::trace_of_product(&w.op, state.matrix());
    if z.im.abs() > 1e-10 {
        return Err(Error::NumericalBreakdown(format!("expectation has imaginary part {:e}", z.im)));
    }
    Ok(z.re)
}

/// Both sides of the claimed identity `Tr[W ρ] = −Φ(ρ)`, plus the trace
/// algebra value `Tr[σ* ρ] − Tr[ρ²]` it must equal by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub expectation_on_state: f64,
    pub minus_phi: f64,
    pub trace_algebra: f64,
    /// `expectation_on_state − minus_phi`
    pub discrepancy: f64,
    /// `Tr[W σ*] = Tr[σ*²] − Tr[ρ σ*]`
    pub expectation_on_sigma_star: f64,
}

pub fn claim_record(w: &Witness, rho: &DensityMatrix, sigma_star: &DensityMatrix) -> Result<ClaimRecord> {
    let expectation_on_state = expectation(w, rho)?;
    let minus_phi = -w.phi_at_construction.nats();
    let trace_algebra = linalg::trace_of_product(sigma_star.matrix(), rho.matrix()).re - rho.purity();
    Ok(ClaimRecord {
        expectation_on_state,
        minus_phi,
        trace_algebra,
        discrepancy: expectation_on_state - minus_phi,
        expectation_on_sigma_star: expectation(w, sigma_star)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub samples: usize,
    pub min_expectation: f64,
    pub argmin: DensityMatrix,
    pub fraction_negative: f64,
}

impl ScanReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "samples": self.samples,
            "min_expectation": self.min_expectation,
            "fraction_negative": self.fraction_negative,
            "argmin": crate::io::qstate_value(&self.argmin),
        })
    }
}

/// Product state on the witness cut for sample `index`: Haar pure on both
/// sides for even indices, full-rank Ginibre on both sides for odd ones.
fn product_sample(w: &Witness, seed: u64, index: usize) -> DensityMatrix {
    let blocks = [w.cut.side_a(), w.cut.side_b()];
    let s = rng::indexed(seed, "witness-scan", index as u64);
    let sides: Vec<DensityMatrix> = blocks
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let sub = w.layout.select(b);
            let side_seed = rng::indexed(s, "side", k as u64);
            if index % 2 == 0 {
                generators::haar_pure(&sub, side_seed)
            } else {
                generators::ginibre_mixed(&sub, sub.total_dim(), side_seed).expect("rank >= 1")
            }
        })
        .collect();
    assemble_blocks(&sides, &blocks).expect("cut blocks partition the layout")
}

pub fn product_state_scan(w: &Witness, samples: usize, seed: u64) -> Result<ScanReport> {
    if samples == 0 {
        return Err(Error::BadParameter("scan needs at least one sample".into()));
    }
    let values = par::map_range(samples, |i| {
        let pi = product_sample(w, seed, i);
        expectation(w, &pi).map(|e| (e, i))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (min_expectation, at) = values
        .iter()
        .copied()
        .fold((f64::INFINITY, 0), |best, (e, i)| if e < best.0 { (e, i) } else { best });
    let negative = values.iter().filter(|(e, _)| *e < -NEGATIVE_TOL).count();
    Ok(ScanReport {
        samples,
        min_expectation,
        argmin: product_sample(w, seed, at),
        fraction_negative: negative as f64 / samples as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessJson {
    pub matrix: ComplexMatrixJson,
    pub dims: Vec<usize>,
    pub cut: Bipartition,
    pub phi_at_construction: f64,
}

impl From<&Witness> for WitnessJson {
    fn from(w: &Witness) -> Self {
        Self {
            matrix: ComplexMatrixJson::from(&w.op),
            dims: w.layout.dims().to_vec(),
            cut: w.cut,
            phi_at_construction: w.phi_at_construction.nats(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phi::{phi, PhiConfig};

    fn bell_witness() -> (DensityMatrix, PhiResult, Witness) {
        let bell = generators::bell();
        let r = phi(&bell, &PhiConfig::default()).unwrap();
        let w = build_witness(&bell, &r);
        (bell, r, w)
    }

    #[test]
    fn product_state_gives_zero_witness() {
        let layout = SubsystemLayout::qubits(2).unwrap();
        let cut = Bipartition::new(&[0], 2).unwrap();
        let rho = generators::random_product(&layout, &cut, 7).unwrap();
        let r = phi(&rho, &PhiConfig::default()).unwrap();
        let w = build_witness(&rho, &r);
        assert!(w.is_zero(1e-10));
        let scan = product_state_scan(&w, 20, 1).unwrap();
        assert!(scan.min_expectation.abs() < 1e-10);
        assert_eq!(scan.fraction_negative, 0.0);
    }

    #[test]
    fn bell_witness_spectrum() {
        let (_, _, w) = bell_witness();
        assert!(w.trace().abs() <= 1e-10);
        assert!(linalg::hermitian_defect(w.op()) <= 1e-10);
        let eig = w.eigenvalues();
        let expected = [-0.75, 0.25, 0.25, 0.25];
        for (a, b) in eig.iter().zip(expected) {
            assert!((a - b).abs() < 1e-9, "{eig:?}");
        }
    }

    #[test]
    fn bell_expectations() {
        let (bell, r, w) = bell_witness();
        assert!((expectation(&w, &bell).unwrap() + 0.75).abs() < 1e-12);
        let rec = claim_record(&w, &bell, &r.sigma_star).unwrap();
        assert!((rec.expectation_on_state - rec.trace_algebra).abs() < 1e-12);
        assert!((rec.minus_phi + 0.3803957).abs() < 1e-6);
        assert!(rec.expectation_on_sigma_star.abs() < 1e-12);
        // Tr[W |00⟩⟨00|] = 1/4 − 1/2
        let zero = generators::basis_state(bell.layout(), &[0, 0]).unwrap();
        assert!((expectation(&w, &zero).unwrap() + 0.25).abs() < 1e-12);
    }

    #[test]
    fn scans_are_deterministic() {
        let (_, _, w) = bell_witness();
        let a = product_state_scan(&w, 64, 3).unwrap();
        let b = product_state_scan(&w, 64, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.min_expectation < 0.0);
        let wrong = DensityMatrix::maximally_mixed(SubsystemLayout::qubits(3).unwrap());
        assert!(matches!(expectation(&w, &wrong), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn random_witnesses_are_hermitian_traceless() {
        let layout = SubsystemLayout::qubits(3).unwrap();
        for seed in 0..5 {
            let rho = generators::ginibre_mixed(&layout, 3, seed).unwrap();
            let r = phi(&rho, &PhiConfig::default()).unwrap();
            let w = build_witness(&rho, &r);
            assert!(linalg::hermitian_defect(w.op()) <= 1e-10);
            assert!(w.trace().abs() <= 1e-10);
            let rec = claim_record(&w, &rho, &r.sigma_star).unwrap();
            assert!((rec.expectation_on_state - rec.trace_algebra).abs() < 1e-12);
        }
    }
}
