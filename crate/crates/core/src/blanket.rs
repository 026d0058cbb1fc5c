//! Petz recovery and the Markov-blanket scan.
//!
//! [`petz_recover`] reconstructs a state from its `Z ∪ W` marginal through
//! the transpose channel of `Tr_Y` taken at `ρ_{YZ}`, where `W` holds the
//! sites outside `Y ∪ Z`:
//!
//! ```text
//! R(ρ_{ZW}) = (ρ_{YZ}^{1/2} ⊗ I_W)(I_Y ⊗ ρ_Z^{-1/2} ρ_{ZW} ρ_Z^{-1/2})(ρ_{YZ}^{1/2} ⊗ I_W)
//! ```
//!
//! Recovery is exact whenever `Y − Z − W` is a Markov chain. When `Y` is the
//! whole complement of `Z` the set `W` is empty and the map returns `ρ` on
//! its support.
//!
//! [`blanket_scan`] scores every candidate `Z` of a given size by
//! `QJSD(ρ ‖ ρ̃_{Y|Z} ⊗ ρ_Z)` with `Y` the complement of `Z` and
//! `ρ̃_{Y|Z} = Tr_Z R(ρ_Z)`.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::entropy::{self, DivergenceValue};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::par;
use crate::phi::{self, PhiConfig, DEFAULT_TIE_TOL};
use crate::state::{assemble_blocks, sorted_unique, Bipartition, DensityMatrix};

/// Eigenvalues of `ρ_Z` below this are left out of the pseudo-inverse.
pub const PINV_CUTOFF: f64 = 1e-12;
/// Largest trace drift that is silently renormalized.
pub const TRACE_DRIFT_TOL: f64 = 1e-8;

fn check_sets(z: &[usize], y: &[usize], n: usize) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let z = sorted_unique(z);
    let y = sorted_unique(y);
    if z.is_empty() || y.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    if let Some(&s) = z.iter().chain(&y).find(|&&s| s >= n) {
        return Err(Error::IndexOutOfRange { index: s, n });
    }
    if z.iter().any(|s| y.contains(s)) {
        return Err(Error::DisjointnessViolation);
    }
    let w = (0..n).filter(|s| !z.contains(s) && !y.contains(s)).collect();
    Ok((z, y, w))
}

fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Petz recovery of `rho` from its marginal off `Y`, with `Y` restored from
/// `Z`. The result lives on the full layout of `rho`.
pub fn petz_recover(rho: &DensityMatrix, z: &[usize], y: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n();
    let (z, y, w) = check_sets(z, y, n)?;
    let dims = rho.layout().dims();
    let dim_of = |sites: &[usize]| sites.iter().map(|&s| dims[s]).product::<usize>();
    let (dy, dz, dw) = (dim_of(&y), dim_of(&z), dim_of(&w));

    // work in factor order [Y, Z, W]
    let order: Vec<usize> = y.iter().chain(&z).chain(&w).copied().collect();
    let ordered = rho.permute(&order)?;
    let ny = y.len();
    let nz = z.len();
    let local: Vec<usize> = (0..n).collect();
    let rho_yz = ordered.partial_trace(&local[..ny + nz])?;
    let rho_z = ordered.partial_trace(&local[ny..ny + nz])?;
    let rho_zw = ordered.partial_trace(&local[ny..])?;

    let sqrt_yz = linalg::spectral_map(rho_yz.matrix(), |l| l.max(0.0).sqrt());
    let inv_sqrt_z = linalg::spectral_map(rho_z.matrix(), |l| if l > PINV_CUTOFF { l.sqrt().recip() } else { 0.0 });
    let outer = linalg::kron(&sqrt_yz, &identity(dw));
    let inner = linalg::kron(&inv_sqrt_z, &identity(dw));
    let middle = &inner * rho_zw.matrix() * &inner;
    let lifted = linalg::kron(&identity(dy), &middle);
    let mut out = &outer * lifted * &outer;
    debug_assert_eq!(out.nrows(), dy * dz * dw);

    let tr = linalg::trace(&out).re;
    if (tr - 1.0).abs() > TRACE_DRIFT_TOL {
        return Err(Error::SupportBreakdown(tr - 1.0));
    }
    out /= linalg::real(tr);
    let out = linalg::hermitian_part(&out);

    let mut back = vec![0; n];
    for (pos, &site) in order.iter().enumerate() {
        back[site] = pos;
    }
    let restored = linalg::permute_factors(&out, ordered.layout().dims(), &back);
    DensityMatrix::new(restored, rho.layout().clone())
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlanketScore {
    pub z: Vec<usize>,
    pub score: DivergenceValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlanketResult {
    pub target_size: usize,
    pub scores: Vec<BlanketScore>,
    pub argmin: Vec<usize>,
    pub optimal_cut: Bipartition,
    pub matches_optimal_cut_side: bool,
}

impl BlanketResult {
    pub fn min_score(&self) -> DivergenceValue {
        self.scores.iter().find(|s| s.z == self.argmin).map(|s| s.score).expect("argmin is a candidate")
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "target_size": self.target_size,
            "scores": self.scores.iter().map(|s| json!({ "z": s.z, "nats": s.score.nats() })).collect::<Vec<_>>(),
            "argmin": self.argmin,
            "optimal_cut": self.optimal_cut,
            "matches_optimal_cut_side": self.matches_optimal_cut_side,
        })
    }
}

/// Score of candidate blanket `z`: divergence of `rho` from the Petz
/// conditional of the complement times `ρ_Z`.
pub fn blanket_score(rho: &DensityMatrix, z: &[usize]) -> Result<DivergenceValue> {
    let z = sorted_unique(z);
    let y: Vec<usize> = (0..rho.n()).filter(|s| !z.contains(s)).collect();
    let recovered = petz_recover(rho, &z, &y)?;
    let conditional = recovered.partial_trace(&y)?;
    let rho_z = rho.partial_trace(&z)?;
    let reference = assemble_blocks(&[conditional, rho_z], &[y, z])?;
    entropy::qjsd(rho, &reference)
}

pub fn blanket_scan(rho: &DensityMatrix, target_size: usize, config: &PhiConfig) -> Result<BlanketResult> {
    let n = rho.n();
    if n < 2 || target_size == 0 || target_size >= n {
        return Err(Error::BadSize { size: target_size, max: n.saturating_sub(1) });
    }
    let candidates = subsets_of_size(n, target_size);
    let scores = par::map(&candidates, |z| blanket_score(rho, z).map(|score| BlanketScore { z: z.clone(), score }))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let best = scores.iter().enumerate().fold(0, |best, (i, s)| {
        if s.score.nats() < scores[best].score.nats() - DEFAULT_TIE_TOL {
            i
        } else {
            best
        }
    });
    let argmin = scores[best].z.clone();

    let marginal = PhiConfig { mode: phi::Mode::Marginal, ..*config };
    let optimal_cut = phi::phi(rho, &marginal)?.optimal_cut;
    let (a, b) = (optimal_cut.side_a(), optimal_cut.side_b());
    let matches_optimal_cut_side = if a.len() == b.len() { argmin == a || argmin == b } else { argmin == optimal_cut.smaller_side() };
    Ok(BlanketResult { target_size, scores, argmin, optimal_cut, matches_optimal_cut_side })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::state::SubsystemLayout;
    use proptest::prelude::*;

    /// p(y, z, w) = p(z) p(y|z) p(w|z), bit order (y, z, w).
    fn markov_chain(pz: f64, py1: [f64; 2], pw1: [f64; 2]) -> DensityMatrix {
        let mut probs = vec![0.0; 8];
        for y in 0..2 {
            for z in 0..2 {
                for w in 0..2 {
                    let p_z = if z == 1 { pz } else { 1.0 - pz };
                    let p_y = if y == 1 { py1[z] } else { 1.0 - py1[z] };
                    let p_w = if w == 1 { pw1[z] } else { 1.0 - pw1[z] };
                    probs[4 * y + 2 * z + w] = p_z * p_y * p_w;
                }
            }
        }
        DensityMatrix::diagonal(&probs, SubsystemLayout::qubits(3).unwrap()).unwrap()
    }

    #[test]
    fn subsets_are_lexicographic() {
        assert_eq!(subsets_of_size(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(subsets_of_size(3, 0), vec![Vec::<usize>::new()]);
        assert!(subsets_of_size(2, 3).is_empty());
    }

    #[test]
    fn complement_recovery_returns_state() {
        let rho = generators::ginibre_mixed(&SubsystemLayout::qubits(3).unwrap(), 3, 4).unwrap();
        let r = petz_recover(&rho, &[1], &[0, 2]).unwrap();
        assert!(r.max_abs_diff(&rho) < 1e-9);
    }

    #[test]
    fn product_is_recovered() {
        let layout = SubsystemLayout::qubits(2).unwrap();
        let cut = Bipartition::new(&[0], 2).unwrap();
        let rho = generators::random_product(&layout, &cut, 9).unwrap();
        let r = petz_recover(&rho, &[1], &[0]).unwrap();
        assert!(r.max_abs_diff(&rho) < 1e-9);
    }

    #[test]
    fn markov_chain_is_recovered() {
        let rho = markov_chain(0.3, [0.2, 0.9], [0.6, 0.1]);
        let r = petz_recover(&rho, &[1], &[0]).unwrap();
        assert!(r.max_abs_diff(&rho) < 1e-9);
        // conditioning on the wrong site loses the correlation
        let r = petz_recover(&rho, &[2], &[0]).unwrap();
        assert!(r.max_abs_diff(&rho) > 1e-3);
    }

    #[test]
    fn ghz_recovery_differs() {
        let ghz = generators::ghz(3).unwrap();
        let r = petz_recover(&ghz, &[1], &[0]).unwrap();
        let d = entropy::qjsd(&ghz, &r).unwrap().nats();
        assert!(d > 1e-3, "{d}");
        assert!((r.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn set_errors() {
        let bell = generators::bell();
        assert!(matches!(petz_recover(&bell, &[0], &[0]), Err(Error::DisjointnessViolation)));
        assert!(matches!(petz_recover(&bell, &[], &[1]), Err(Error::EmptyKeepSet)));
        assert!(matches!(petz_recover(&bell, &[0], &[2]), Err(Error::IndexOutOfRange { .. })));
        let cfg = PhiConfig::default();
        assert!(matches!(blanket_scan(&bell, 0, &cfg), Err(Error::BadSize { .. })));
        assert!(matches!(blanket_scan(&bell, 2, &cfg), Err(Error::BadSize { .. })));
    }

    #[test]
    fn entangled_pair_with_spectator() {
        let pair = generators::haar_pure(&SubsystemLayout::qubits(2).unwrap(), 5);
        let spectator = generators::ginibre_mixed(&SubsystemLayout::qubits(1).unwrap(), 2, 6).unwrap();
        let rho = pair.tensor(&spectator);
        let res = blanket_scan(&rho, 1, &PhiConfig::default()).unwrap();
        assert_eq!(res.argmin, vec![2]);
        assert!(res.min_score().nats() <= 1e-9);
        assert!(res.matches_optimal_cut_side);
        assert_eq!(res.scores.len(), 3);
    }

    #[test]
    fn ghz_scores_are_symmetric() {
        let res = blanket_scan(&generators::ghz(3).unwrap(), 1, &PhiConfig::default()).unwrap();
        let s: Vec<f64> = res.scores.iter().map(|s| s.score.nats()).collect();
        assert!((s[0] - s[1]).abs() < 1e-12 && (s[1] - s[2]).abs() < 1e-12, "{s:?}");
        assert_eq!(res.argmin, vec![0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn scores_are_bounded(seed in any::<u64>(), rank in 1usize..=8) {
            let rho = generators::ginibre_mixed(&SubsystemLayout::qubits(3).unwrap(), rank, seed).unwrap();
            let res = blanket_scan(&rho, 1, &PhiConfig::default()).unwrap();
            for s in &res.scores {
                prop_assert!(s.score.nats() >= 0.0);
                prop_assert!(s.score.nats() <= std::f64::consts::LN_2 + 1e-9);
            }
        }

        #[test]
        fn scores_follow_relabeling(seed in any::<u64>()) {
            let rho = generators::ginibre_mixed(&SubsystemLayout::qubits(3).unwrap(), 4, seed).unwrap();
            let perm = [2, 0, 1];
            let permuted = rho.permute(&perm).unwrap();
            let a = blanket_scan(&rho, 1, &PhiConfig::default()).unwrap();
            let b = blanket_scan(&permuted, 1, &PhiConfig::default()).unwrap();
            // new site j is old site perm[j]
            for (j, s) in b.scores.iter().enumerate() {
                let old = &a.scores[perm[j]];
                prop_assert!((s.score.nats() - old.score.nats()).abs() < 1e-12);
            }
        }
    }
}
