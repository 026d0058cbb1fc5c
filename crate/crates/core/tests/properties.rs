use std::f64::consts::LN_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use qphi::channels::{KrausChannel, LocalChannel};
use qphi::{dendrogram, generators, io, linalg, phi, Bipartition, DensityMatrix, Mode, PhiConfig, SubsystemLayout};

fn layout_strategy() -> impl Strategy<Value = SubsystemLayout> {
    prop_oneof![
        Just(vec![2, 2]),
        Just(vec![2, 3]),
        Just(vec![3, 2]),
        Just(vec![2, 2, 2]),
        Just(vec![2, 3, 2]),
    ]
    .prop_map(|d| SubsystemLayout::new(d).unwrap())
}

fn state_strategy() -> impl Strategy<Value = DensityMatrix> {
    (layout_strategy(), any::<u64>(), 0usize..64).prop_map(|(layout, seed, r)| {
        let rank = 1 + r % layout.total_dim();
        generators::ginibre_mixed(&layout, rank, seed).unwrap()
    })
}

fn shannon(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum()
}

fn probs(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter_map("nonzero mass", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-3).then(|| v.iter().map(|x| x / s).collect())
    })
}

fn inverse(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (j, &p) in perm.iter().enumerate() {
        inv[p] = j;
    }
    inv
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn entropy_of_diagonal_states_is_shannon(p in probs(6)) {
        let rho = DensityMatrix::diagonal(&p, SubsystemLayout::new(vec![2, 3]).unwrap()).unwrap();
        let s = qphi::von_neumann_entropy(&rho).unwrap();
        prop_assert!((s - shannon(&p)).abs() < 1e-12);
    }

    #[test]
    fn commuting_qjsd_is_classical(p in probs(4), q in probs(4)) {
        let l = SubsystemLayout::qubits(2).unwrap();
        let a = DensityMatrix::diagonal(&p, l.clone()).unwrap();
        let b = DensityMatrix::diagonal(&q, l).unwrap();
        let mid: Vec<f64> = p.iter().zip(&q).map(|(x, y)| 0.5 * (x + y)).collect();
        let oracle = shannon(&mid) - 0.5 * shannon(&p) - 0.5 * shannon(&q);
        prop_assert!((qphi::qjsd(&a, &b).unwrap().nats() - oracle).abs() < 1e-12);
    }

    #[test]
    fn qjsd_is_symmetric_and_bounded(a in state_strategy(), seed in any::<u64>()) {
        let b = generators::ginibre_mixed(a.layout(), 2, seed).unwrap();
        let ab = qphi::qjsd(&a, &b).unwrap().nats();
        let ba = qphi::qjsd(&b, &a).unwrap().nats();
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ab >= 0.0 && ab <= LN_2 + 1e-12);
        prop_assert!(qphi::qjsd(&a, &a).unwrap().nats().abs() < 1e-12);
    }

    #[test]
    fn phi_is_bounded_and_attained(rho in state_strategy()) {
        let r = qphi::phi(&rho, &PhiConfig::default()).unwrap();
        let v = r.phi.nats();
        prop_assert!(v >= 0.0 && v <= LN_2 + 1e-12);
        let direct = qphi::qjsd(&rho, &rho.product_of_marginals(&r.optimal_cut).unwrap()).unwrap().nats();
        prop_assert!((direct - v).abs() < 1e-12);
        prop_assert!(r.ties.contains(&r.optimal_cut));
        prop_assert_eq!(r.per_cut.len(), (1 << (rho.n() - 1)) - 1);
    }

    #[test]
    fn phi_is_covariant_under_relabeling(rho in state_strategy(), k in 0usize..6) {
        let n = rho.n();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left(k % n);
        if k >= 3 {
            perm.reverse();
        }
        let moved = rho.permute(&perm).unwrap();
        let a = qphi::phi(&rho, &PhiConfig::default()).unwrap();
        let b = qphi::phi(&moved, &PhiConfig::default()).unwrap();
        prop_assert!((a.phi.nats() - b.phi.nats()).abs() < 1e-10);
        let inv = inverse(&perm);
        let mapped: Vec<Bipartition> = a.ties.iter().map(|c| c.relabel(&inv).unwrap()).collect();
        prop_assert!(mapped.contains(&b.optimal_cut));
    }

    #[test]
    fn phi_is_invariant_under_local_unitaries(rho in state_strategy(), seed in any::<u64>()) {
        let units: Vec<KrausChannel> = rho
            .layout()
            .dims()
            .iter()
            .enumerate()
            .map(|(i, &d)| KrausChannel::random(d, d, 1, seed.wrapping_add(i as u64)).unwrap())
            .collect();
        let u = LocalChannel::new(units).unwrap();
        let a = qphi::phi(&rho, &PhiConfig::default()).unwrap().phi.nats();
        let b = qphi::phi(&u.apply(&rho).unwrap(), &PhiConfig::default()).unwrap().phi.nats();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn local_channels_never_raise_phi(rho in state_strategy(), seed in any::<u64>(), k in 1usize..4) {
        let ch = LocalChannel::random(rho.layout(), k, seed).unwrap();
        let a = qphi::phi(&rho, &PhiConfig::default()).unwrap().phi.nats();
        let b = qphi::phi(&ch.apply(&rho).unwrap(), &PhiConfig::default()).unwrap().phi.nats();
        prop_assert!(b <= a + 1e-9);
    }

    #[test]
    fn optimized_mode_never_exceeds_marginal(rho in state_strategy()) {
        let m = qphi::phi(&rho, &PhiConfig::default()).unwrap();
        let o = qphi::phi(&rho, &PhiConfig::with_mode(Mode::Optimized)).unwrap();
        prop_assert!(o.phi.nats() <= m.phi.nats() + 1e-12);
        prop_assert!((o.marginal_phi().nats() - m.phi.nats()).abs() < 1e-12);
    }

    #[test]
    fn partial_traces_compose(rho in state_strategy()) {
        let n = rho.n();
        let direct = rho.partial_trace(&[0]).unwrap();
        let rest: Vec<usize> = (0..n - 1).collect();
        let staged = rho.partial_trace(&rest).unwrap().partial_trace(&[0]).unwrap();
        prop_assert!(direct.max_abs_diff(&staged) < 1e-12);
        prop_assert!((direct.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_matches_explicit_sum(rho in state_strategy()) {
        // independent loop over the traced-out index for the last site
        let dims = rho.layout().dims().to_vec();
        let dl = *dims.last().unwrap();
        let dk = rho.dim() / dl;
        let m = rho.matrix();
        let oracle = DMatrix::<Complex64>::from_fn(dk, dk, |i, j| (0..dl).map(|t| m[(i * dl + t, j * dl + t)]).sum());
        let keep: Vec<usize> = (0..dims.len() - 1).collect();
        prop_assert!(linalg::max_abs_diff(rho.partial_trace(&keep).unwrap().matrix(), &oracle) < 1e-14);
    }

    #[test]
    fn random_channels_preserve_trace(rho in state_strategy(), seed in any::<u64>(), k in 1usize..5) {
        let d = rho.dim();
        let ch = KrausChannel::random(d, d, k, seed).unwrap();
        prop_assert!(ch.completeness_defect() < 1e-10);
        let out = ch.apply(&rho, None).unwrap();
        prop_assert!((out.trace() - 1.0).abs() < 1e-10);
        prop_assert!(out.eigenvalues().iter().all(|&x| x > -1e-10));
    }

    #[test]
    fn dendrogram_is_well_formed(rho in state_strategy()) {
        let d = dendrogram::build(&rho, &PhiConfig::default()).unwrap();
        prop_assert!(d.validate_structure().is_ok());
        let root = d.root.phi_internal.unwrap().nats();
        prop_assert!((root - qphi::phi(&rho, &PhiConfig::default()).unwrap().phi.nats()).abs() < 1e-12);
        let back = dendrogram::Dendrogram::from_json(&d.to_json()).unwrap();
        prop_assert_eq!(back.topology(), d.topology());
        prop_assert_eq!(d.nodes().iter().filter(|n| n.is_leaf()).count(), rho.n());
    }

    #[test]
    fn state_files_round_trip(rho in state_strategy()) {
        let back = io::read_qstate(&io::write_qstate(&rho)).unwrap();
        prop_assert_eq!(back.layout(), rho.layout());
        prop_assert_eq!(back.matrix(), rho.matrix());
    }

    #[test]
    fn merging_blocks_never_raises_divergence(seed in any::<u64>()) {
        let rho = generators::ginibre_mixed(&SubsystemLayout::qubits(4).unwrap(), 3, seed).unwrap();
        let p = phi::PartitionKBlocks::singletons(4).unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                let (before, after) = phi::merge_inequality_check(&rho, &p, i, j).unwrap();
                prop_assert!(after.nats() <= before.nats() + 1e-9);
            }
        }
    }
}
