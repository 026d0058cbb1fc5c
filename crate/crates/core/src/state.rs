//! Density operators on multipartite systems.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

/// Tolerance applied to user-supplied matrices.
pub const INPUT_TOL: f64 = 1e-9;
/// Defects at or below this are treated as floating round-off.
pub const ROUNDOFF_TOL: f64 = 1e-12;

/// Local Hilbert-space dimensions of each subsystem, in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct SubsystemLayout {
    dims: Vec<usize>,
}

impl SubsystemLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::BadParameter("layout needs at least one subsystem".into()));
        }
        if let Some(&d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::BadParameter(format!("local dimension {d} < 2")));
        }
        Ok(Self { dims })
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Self::new(vec![2; n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Layout of the listed subsystems, in the listed order.
    pub fn select(&self, sites: &[usize]) -> Self {
        Self { dims: sites.iter().map(|&s| self.dims[s]).collect() }
    }

    pub fn concat(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self { dims }
    }
}

impl TryFrom<Vec<usize>> for SubsystemLayout {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<SubsystemLayout> for Vec<usize> {
    fn from(l: SubsystemLayout) -> Self {
        l.dims
    }
}

/// Validated density operator: Hermitian, PSD, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    layout: SubsystemLayout,
    mat: CMatrix,
}

impl DensityMatrix {
    /// Validates a raw matrix against the input tolerances. Eigenvalues in
    /// `[-1e-9, 0)` are clipped to zero and the trace renormalized, unless
    /// both defects are within `ROUNDOFF_TOL`, in which case the Hermitian
    /// part is kept as given.
    pub fn new(mat: CMatrix, layout: SubsystemLayout) -> Result<Self> {
        let d = layout.total_dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: mat.nrows().max(mat.ncols()) });
        }
        if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NumericalBreakdown("non-finite matrix entry".into()));
        }
        let defect = linalg::hermitian_defect(&mat);
        if defect > INPUT_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let herm = linalg::hermitian_part(&mat);
        let (values, vectors) = linalg::eigh(&herm);
        let min = values.first().copied().unwrap_or(0.0);
        if min < -INPUT_TOL {
            return Err(Error::NotPsd(min));
        }
        let tr = linalg::trace(&herm).re;
        if (tr - 1.0).abs() > INPUT_TOL {
            return Err(Error::TraceNotOne((tr - 1.0).abs()));
        }
        if min >= -ROUNDOFF_TOL && (tr - 1.0).abs() <= ROUNDOFF_TOL {
            return Ok(Self { layout, mat: herm });
        }
        let mut mat = if min < 0.0 {
            linalg::from_spectrum(&values, &vectors, |x| x.max(0.0))
        } else {
            herm
        };
        let tr = linalg::trace(&mat).re;
        mat.unscale_mut(tr);
        Ok(Self { layout, mat })
    }

    /// Wraps a matrix produced by internal algebra on valid states. Only the
    /// Hermitian part is kept; no spectral checks are run.
    pub(crate) fn from_trusted(mat: CMatrix, layout: SubsystemLayout) -> Self {
        debug_assert_eq!(mat.nrows(), layout.total_dim());
        Self { mat: linalg::hermitian_part(&mat), layout }
    }

    /// Normalized projector onto `psi`.
    pub fn from_pure(psi: &[num_complex::Complex64], layout: SubsystemLayout) -> Result<Self> {
        let d = layout.total_dim();
        if psi.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: psi.len() });
        }
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::BadParameter("state vector has zero norm".into()));
        }
        let v = nalgebra::DVector::from_iterator(d, psi.iter().map(|z| z / norm));
        Ok(Self::from_trusted(&v * v.adjoint(), layout))
    }

    pub fn maximally_mixed(layout: SubsystemLayout) -> Self {
        let d = layout.total_dim();
        Self { mat: CMatrix::identity(d, d).unscale(d as f64), layout }
    }

    /// Diagonal state with the given probabilities in the computational basis.
    pub fn diagonal(probs: &[f64], layout: SubsystemLayout) -> Result<Self> {
        let d = layout.total_dim();
        if probs.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: probs.len() });
        }
        let mat = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            d,
            probs.iter().map(|&p| linalg::real(p)),
        ));
        Self::new(mat, layout)
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.mat)
    }

    pub fn purity(&self) -> f64 {
        linalg::trace_of_product(&self.mat, &self.mat).re
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.mat).re
    }

    /// Reinterprets the same matrix under a different factorization of the
    /// total dimension.
    pub fn with_layout(self, layout: SubsystemLayout) -> Result<Self> {
        if layout.total_dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: layout.total_dim() });
        }
        Ok(Self { layout, mat: self.mat })
    }

    fn check_sites(&self, sites: &[usize]) -> Result<()> {
        for &s in sites {
            if s >= self.n() {
                return Err(Error::IndexOutOfRange { index: s, n: self.n() });
            }
        }
        Ok(())
    }

    /// Reduced state on `keep`. Kept subsystems stay in their original
    /// relative order regardless of the order given.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        self.check_sites(keep)?;
        let keep = sorted_unique(keep);
        if keep.len() == self.n() {
            return Ok(self.clone());
        }
        let mat = linalg::partial_trace(&self.mat, self.layout.dims(), &keep);
        Ok(Self::from_trusted(mat, self.layout.select(&keep)))
    }

    pub fn tensor(&self, other: &Self) -> Self {
        Self::from_trusted(linalg::kron(&self.mat, &other.mat), self.layout.concat(&other.layout))
    }

    /// Reorders subsystems: subsystem `j` of the result is subsystem
    /// `perm[j]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.n())?;
        let mat = linalg::permute_factors(&self.mat, self.layout.dims(), perm);
        Ok(Self { mat, layout: self.layout.select(perm) })
    }

    /// `ρ_A ⊗ ρ_B` with factors put back into the original subsystem order.
    pub fn product_of_marginals(&self, cut: &Bipartition) -> Result<Self> {
        if cut.n() != self.n() {
            return Err(Error::InvalidCut(format!(
                "cut is over {} subsystems, state has {}",
                cut.n(),
                self.n()
            )));
        }
        product_of_blocks(self, &[cut.side_a(), cut.side_b()])
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        linalg::max_abs_diff(&self.mat, &other.mat)
    }

    /// Convex combination `t·self + (1−t)·other`.
    pub fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch);
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::BadParameter(format!("mixing weight {t} outside [0, 1]")));
        }
        Ok(Self::from_trusted(self.mat.scale(t) + other.mat.scale(1.0 - t), self.layout.clone()))
    }
}

pub(crate) fn sorted_unique(sites: &[usize]) -> Vec<usize> {
    let mut v = sites.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::BadParameter(format!("permutation of length {} for {n} subsystems", perm.len())));
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::BadParameter(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Product of block marginals, reordered to match `rho`'s subsystem order.
/// `blocks` must be disjoint and cover every subsystem.
pub(crate) fn product_of_blocks(rho: &DensityMatrix, blocks: &[Vec<usize>]) -> Result<DensityMatrix> {
    let marginals = blocks
        .iter()
        .map(|b| rho.partial_trace(b))
        .collect::<Result<Vec<_>>>()?;
    assemble_blocks(&marginals, blocks)
}

/// Tensors per-block states together and permutes the result into
/// ascending subsystem order. Block `k`'s state must carry its subsystems in
/// ascending order.
pub(crate) fn assemble_blocks(states: &[DensityMatrix], blocks: &[Vec<usize>]) -> Result<DensityMatrix> {
    let mut iter = states.iter();
    let first = iter.next().ok_or_else(|| Error::InvalidPartition("no blocks".into()))?.clone();
    let product = iter.fold(first, |acc, s| acc.tensor(s));
    // `order[k]` is the global subsystem sitting at tensor position k.
    let order: Vec<usize> = blocks.iter().flat_map(|b| sorted_unique(b)).collect();
    let mut inverse = vec![0; order.len()];
    for (pos, &site) in order.iter().enumerate() {
        inverse[site] = pos;
    }
    product.permute(&inverse)
}

/// A cut `A|B` of the subsystems, stored canonically with subsystem 0 in A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bipartition {
    mask: u64,
    n: usize,
}

impl Bipartition {
    pub fn new(side: &[usize], n: usize) -> Result<Self> {
        if n > 63 {
            return Err(Error::InvalidCut(format!("{n} subsystems exceeds mask width")));
        }
        let mut mask = 0u64;
        for &s in side {
            if s >= n {
                return Err(Error::IndexOutOfRange { index: s, n });
            }
            mask |= 1 << s;
        }
        Self::from_mask(mask, n)
    }

    /// Builds from a bit mask; the complement is taken if bit 0 is clear.
    pub fn from_mask(mask: u64, n: usize) -> Result<Self> {
        let full = if n >= 64 { u64::MAX } else { (1u64 << n) - 1 };
        if mask & !full != 0 {
            return Err(Error::InvalidCut(format!("mask {mask:#b} has bits beyond {n} subsystems")));
        }
        let mask = if mask & 1 == 0 { full & !mask } else { mask };
        if mask == full || mask == 0 {
            return Err(Error::InvalidCut("both sides must be non-empty".into()));
        }
        Ok(Self { mask, n })
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn side_a(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.mask >> i & 1 == 1).collect()
    }

    pub fn side_b(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.mask >> i & 1 == 0).collect()
    }

    /// The side with fewer subsystems; A on a size tie.
    pub fn smaller_side(&self) -> Vec<usize> {
        let (a, b) = (self.side_a(), self.side_b());
        if b.len() < a.len() {
            b
        } else {
            a
        }
    }

    /// Relabels through a map of old index → new index.
    pub fn relabel(&self, map: &[usize]) -> Result<Self> {
        let side: Vec<usize> = self.side_a().iter().map(|&i| map[i]).collect();
        Self::new(&side, self.n)
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: Vec<usize>| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "{{{}}}|{{{}}}", show(self.side_a()), show(self.side_b()))
    }
}

impl Serialize for Bipartition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.side_a(), self.side_b()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Bipartition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (a, b): (Vec<usize>, Vec<usize>) = Deserialize::deserialize(d)?;
        Bipartition::new(&a, a.len() + b.len()).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;
    use crate::linalg::{real, ZERO};

    #[test]
    fn identity_over_four_is_valid() {
        let m = CMatrix::identity(4, 4).unscale(4.0);
        let rho = DensityMatrix::new(m, SubsystemLayout::qubits(2).unwrap()).unwrap();
        assert!((rho.purity() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn negative_eigenvalue_is_rejected() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            real(1.0),
            ZERO,
            ZERO,
            real(-0.001),
        ]));
        let err = DensityMatrix::new(m, SubsystemLayout::qubits(2).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NotPsd(_)), "{err}");
    }

    #[test]
    fn rejects_non_hermitian_and_bad_trace_and_dims() {
        let layout = SubsystemLayout::qubits(1).unwrap();
        let mut m = CMatrix::identity(2, 2).unscale(2.0);
        m[(0, 1)] = real(0.1);
        assert!(matches!(DensityMatrix::new(m, layout.clone()), Err(Error::NotHermitian(_))));
        let m = CMatrix::identity(2, 2);
        assert!(matches!(DensityMatrix::new(m, layout.clone()), Err(Error::TraceNotOne(_))));
        let m = CMatrix::identity(3, 3).unscale(3.0);
        assert!(matches!(DensityMatrix::new(m, layout), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn tiny_negative_eigenvalues_are_clipped() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            real(0.5 + 5e-10),
            real(0.5),
            real(-5e-10),
            ZERO,
        ]));
        let rho = DensityMatrix::new(m, SubsystemLayout::qubits(2).unwrap()).unwrap();
        assert!(rho.eigenvalues()[0] >= -1e-15);
        assert!((rho.trace() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bell_by_hand_is_pure() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut m = CMatrix::zeros(4, 4);
        for &(i, j) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
            m[(i, j)] = real(h * h);
        }
        let rho = DensityMatrix::new(m, SubsystemLayout::qubits(2).unwrap()).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        assert!(rho.max_abs_diff(&generators::bell()) < 1e-15);
    }

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let bell = generators::bell();
        let half = DensityMatrix::maximally_mixed(SubsystemLayout::qubits(1).unwrap());
        assert!(bell.partial_trace(&[0]).unwrap().max_abs_diff(&half) < 1e-15);
        assert!(bell.partial_trace(&[1]).unwrap().max_abs_diff(&half) < 1e-15);
        assert_eq!(bell.partial_trace(&[1, 0]).unwrap(), bell);
    }

    #[test]
    fn partial_trace_errors() {
        let bell = generators::bell();
        assert!(matches!(bell.partial_trace(&[]), Err(Error::EmptyKeepSet)));
        assert!(matches!(bell.partial_trace(&[2]), Err(Error::IndexOutOfRange { index: 2, n: 2 })));
    }

    #[test]
    fn tensor_of_halves_is_quarter_identity() {
        let half = DensityMatrix::maximally_mixed(SubsystemLayout::qubits(1).unwrap());
        let quarter = half.tensor(&half);
        assert_eq!(quarter.layout().dims(), &[2, 2]);
        assert!(quarter.max_abs_diff(&DensityMatrix::maximally_mixed(SubsystemLayout::qubits(2).unwrap())) < 1e-15);
    }

    #[test]
    fn pure_tensor_pure_is_pure() {
        let a = generators::haar_pure(&SubsystemLayout::new(vec![2]).unwrap(), 1);
        let b = generators::haar_pure(&SubsystemLayout::new(vec![3]).unwrap(), 2);
        assert!((a.tensor(&b).purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_of_marginals_cases() {
        let bell = generators::bell();
        let cut = Bipartition::new(&[0], 2).unwrap();
        let quarter = DensityMatrix::maximally_mixed(SubsystemLayout::qubits(2).unwrap());
        assert!(bell.product_of_marginals(&cut).unwrap().max_abs_diff(&quarter) < 1e-15);

        // GHZ3 across {0}|{1,2}: (I/2) ⊗ ½(|00⟩⟨00| + |11⟩⟨11|)
        let ghz = generators::ghz(3).unwrap();
        let cut = Bipartition::new(&[0], 3).unwrap();
        let half = DensityMatrix::maximally_mixed(SubsystemLayout::qubits(1).unwrap());
        let pair = DensityMatrix::diagonal(&[0.5, 0.0, 0.0, 0.5], SubsystemLayout::qubits(2).unwrap()).unwrap();
        let expected = half.tensor(&pair);
        assert!(ghz.product_of_marginals(&cut).unwrap().max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn product_of_marginals_reorders_noncontiguous_cut() {
        // σ_0 ⊗ τ_1 ⊗ σ'_2 with cut {0,2}|{1}
        let layout1 = SubsystemLayout::new(vec![2]).unwrap();
        let layout3 = SubsystemLayout::new(vec![3]).unwrap();
        let a = generators::ginibre_mixed(&layout1, 2, 1).unwrap();
        let b = generators::ginibre_mixed(&layout3, 3, 2).unwrap();
        let c = generators::ginibre_mixed(&layout1, 2, 3).unwrap();
        let rho = a.tensor(&b).tensor(&c);
        let cut = Bipartition::new(&[0, 2], 3).unwrap();
        assert!(rho.product_of_marginals(&cut).unwrap().max_abs_diff(&rho) < 1e-12);
    }

    #[test]
    fn bipartition_canonical_form() {
        let cut = Bipartition::new(&[1, 2], 3).unwrap();
        assert_eq!(cut.side_a(), vec![0]);
        assert_eq!(cut.side_b(), vec![1, 2]);
        assert_eq!(cut.to_string(), "{0}|{1,2}");
        assert!(Bipartition::new(&[0, 1, 2], 3).is_err());
        assert!(Bipartition::new(&[], 3).is_err());
        let json = serde_json::to_string(&cut).unwrap();
        assert_eq!(json, "[[0],[1,2]]");
        assert_eq!(serde_json::from_str::<Bipartition>(&json).unwrap(), cut);
    }

    #[test]
    fn mixed_qudit_layout_round_trip() {
        let layout = SubsystemLayout::new(vec![2, 3]).unwrap();
        let rho = generators::ginibre_mixed(&layout, 6, 9).unwrap();
        let a = rho.partial_trace(&[0]).unwrap();
        let b = rho.partial_trace(&[1]).unwrap();
        let prod = a.tensor(&b);
        assert!(prod.partial_trace(&[0]).unwrap().max_abs_diff(&a) < 1e-12);
        assert!(prod.partial_trace(&[1]).unwrap().max_abs_diff(&b) < 1e-12);
    }
}
