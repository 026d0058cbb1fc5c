//! Standard and random test states.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, real, ZERO};
use crate::rng;
use crate::state::{assemble_blocks, Bipartition, DensityMatrix, SubsystemLayout};

/// (|00⟩ + |11⟩)/√2.
pub fn bell() -> DensityMatrix {
    ghz(2).expect("two qubits")
}

/// (|0…0⟩ + |1…1⟩)/√2 on `n` qubits.
pub fn ghz(n: usize) -> Result<DensityMatrix> {
    if n < 2 {
        return Err(Error::BadParameter(format!("ghz needs n >= 2, got {n}")));
    }
    let layout = SubsystemLayout::qubits(n)?;
    let mut psi = vec![ZERO; layout.total_dim()];
    psi[0] = real(1.0);
    psi[layout.total_dim() - 1] = real(1.0);
    DensityMatrix::from_pure(&psi, layout)
}

/// Equal superposition of all single-excitation basis states.
pub fn w(n: usize) -> Result<DensityMatrix> {
    if n < 2 {
        return Err(Error::BadParameter(format!("w needs n >= 2, got {n}")));
    }
    let layout = SubsystemLayout::qubits(n)?;
    let mut psi = vec![ZERO; layout.total_dim()];
    for k in 0..n {
        psi[1 << k] = real(1.0);
    }
    DensityMatrix::from_pure(&psi, layout)
}

/// Computational basis state with the given local digits.
pub fn basis_state(layout: &SubsystemLayout, digits: &[usize]) -> Result<DensityMatrix> {
    if digits.len() != layout.n() {
        return Err(Error::DimensionMismatch { expected: layout.n(), found: digits.len() });
    }
    let strides = linalg::strides(layout.dims());
    let mut index = 0;
    for (k, (&d, &dim)) in digits.iter().zip(layout.dims()).enumerate() {
        if d >= dim {
            return Err(Error::BadParameter(format!("digit {d} out of range on site {k}")));
        }
        index += d * strides[k];
    }
    let mut psi = vec![ZERO; layout.total_dim()];
    psi[index] = real(1.0);
    DensityMatrix::from_pure(&psi, layout.clone())
}

/// Haar-random pure state.
pub fn haar_pure(layout: &SubsystemLayout, seed: u64) -> DensityMatrix {
    let mut rng = rng::stream(rng::substream(seed, "haar-pure"));
    let psi: Vec<Complex64> = (0..layout.total_dim()).map(|_| rng::complex_gaussian(&mut rng)).collect();
    DensityMatrix::from_pure(&psi, layout.clone()).expect("gaussian vector is non-zero")
}

/// `G G† / Tr(G G†)` with `G` a `D × rank` complex Gaussian matrix.
pub fn ginibre_mixed(layout: &SubsystemLayout, rank: usize, seed: u64) -> Result<DensityMatrix> {
    if rank == 0 {
        return Err(Error::BadParameter("rank must be at least 1".into()));
    }
    let mut rng = rng::stream(rng::substream(seed, "ginibre"));
    let g = rng::ginibre(layout.total_dim(), rank, &mut rng);
    let mut m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    m.unscale_mut(tr);
    Ok(DensityMatrix::from_trusted(m, layout.clone()))
}

/// Full-rank random state on each side of `cut`, tensored in the layout's
/// subsystem order.
pub fn random_product(layout: &SubsystemLayout, cut: &Bipartition, seed: u64) -> Result<DensityMatrix> {
    if cut.n() != layout.n() {
        return Err(Error::InvalidCut("cut does not match layout".into()));
    }
    let blocks = [cut.side_a(), cut.side_b()];
    let states = blocks
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let sub = layout.select(b);
            let rank = sub.total_dim();
            ginibre_mixed(&sub, rank, rng::indexed(seed, "random-product", k as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_blocks(&states, &blocks)
}

/// Product of independent single-site states (pure when `pure`).
pub fn random_fully_product(layout: &SubsystemLayout, pure: bool, seed: u64) -> DensityMatrix {
    let sites = (0..layout.n()).map(|k| {
        let sub = layout.select(&[k]);
        let s = rng::indexed(seed, "fully-product", k as u64);
        if pure {
            haar_pure(&sub, s)
        } else {
            ginibre_mixed(&sub, sub.total_dim(), s).expect("rank >= 1")
        }
    });
    sites.reduce(|acc, s| acc.tensor(&s)).expect("layout is non-empty")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghz3_marginals_are_maximally_mixed() {
        let g = ghz(3).unwrap();
        assert!((g.purity() - 1.0).abs() < 1e-12);
        let half = DensityMatrix::maximally_mixed(SubsystemLayout::qubits(1).unwrap());
        for k in 0..3 {
            assert!(g.partial_trace(&[k]).unwrap().max_abs_diff(&half) < 1e-15);
        }
    }

    #[test]
    fn w_state_marginal() {
        let w3 = w(3).unwrap();
        let m = w3.partial_trace(&[0]).unwrap();
        assert!((m.matrix()[(0, 0)].re - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.matrix()[(1, 1)].re - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bad_parameters() {
        assert!(ghz(1).is_err());
        assert!(w(0).is_err());
        let l = SubsystemLayout::qubits(2).unwrap();
        assert!(ginibre_mixed(&l, 0, 1).is_err());
    }

    #[test]
    fn full_rank_ginibre_has_positive_spectrum() {
        let l = SubsystemLayout::qubits(3).unwrap();
        let rho = ginibre_mixed(&l, 8, 4).unwrap();
        assert!(rho.eigenvalues()[0] > 0.0);
        let low = ginibre_mixed(&l, 2, 4).unwrap();
        assert!(low.eigenvalues()[5].abs() < 1e-12);
    }

    #[test]
    fn generators_are_reproducible() {
        let l = SubsystemLayout::qubits(2).unwrap();
        assert_eq!(haar_pure(&l, 5), haar_pure(&l, 5));
        assert_ne!(haar_pure(&l, 5), haar_pure(&l, 6));
        assert_eq!(ginibre_mixed(&l, 3, 5).unwrap(), ginibre_mixed(&l, 3, 5).unwrap());
        let cut = Bipartition::new(&[0], 2).unwrap();
        assert_eq!(random_product(&l, &cut, 1).unwrap(), random_product(&l, &cut, 1).unwrap());
    }

    #[test]
    fn random_product_factorizes() {
        let l = SubsystemLayout::qubits(3).unwrap();
        let cut = Bipartition::new(&[0, 2], 3).unwrap();
        let rho = random_product(&l, &cut, 8).unwrap();
        assert!(rho.product_of_marginals(&cut).unwrap().max_abs_diff(&rho) < 1e-12);
    }
}
