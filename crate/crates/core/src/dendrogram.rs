//! Integration dendrogram: split the system at its optimal cut, then split
//! each side at the optimal cut of its reduced state, down to single
//! subsystems.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::entropy::{self, DivergenceValue};
use crate::error::{Error, Result};
use crate::generators;
use crate::linalg;
use crate::phi::{self, PhiConfig};
use crate::state::{DensityMatrix, SubsystemLayout};
use crate::{par, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DendrogramNode {
    /// Global subsystem indices, ascending.
    pub members: Vec<usize>,
    /// Φ of the reduced state on `members`; absent on leaves.
    pub phi_internal: Option<DivergenceValue>,
    /// Number of cuts tied for the minimum; 0 on leaves.
    pub tie_count: usize,
    /// Children; the first holds the smallest member.
    pub split: Option<Box<[DendrogramNode; 2]>>,
}

impl DendrogramNode {
    fn leaf(site: usize) -> Self {
        Self { members: vec![site], phi_internal: None, tie_count: 0, split: None }
    }

    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    pub fn children(&self) -> Option<&[DendrogramNode; 2]> {
        self.split.as_deref()
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a DendrogramNode)) {
        visit(self);
        if let Some([a, b]) = self.children() {
            a.walk(visit);
            b.walk(visit);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub layout: SubsystemLayout,
    pub root: DendrogramNode,
}

fn build_node(rho: &DensityMatrix, members: Vec<usize>, config: &PhiConfig) -> Result<DendrogramNode> {
    if members.len() == 1 {
        return Ok(DendrogramNode::leaf(members[0]));
    }
    let result = phi::phi(rho, config)?;
    let (a, b) = (result.optimal_cut.side_a(), result.optimal_cut.side_b());
    let to_global = |side: &[usize]| side.iter().map(|&i| members[i]).collect::<Vec<_>>();
    let (ga, gb) = (to_global(&a), to_global(&b));
    let rho_a = rho.partial_trace(&a)?;
    let rho_b = rho.partial_trace(&b)?;
    let (left, right) = par::join(|| build_node(&rho_a, ga, config), || build_node(&rho_b, gb, config));
    Ok(DendrogramNode {
        members,
        phi_internal: Some(result.phi),
        tie_count: result.ties.len(),
        split: Some(Box::new([left?, right?])),
    })
}

pub fn build(rho: &DensityMatrix, config: &PhiConfig) -> Result<Dendrogram> {
    if rho.n() < 2 {
        return Err(Error::SingleSubsystem);
    }
    let root = build_node(rho, (0..rho.n()).collect(), config)?;
    let d = Dendrogram { layout: rho.layout().clone(), root };
    d.validate_structure()?;
    Ok(d)
}

impl Dendrogram {
    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn nodes(&self) -> Vec<&DendrogramNode> {
        let mut out = Vec::new();
        self.root.walk(&mut |node| out.push(node));
        out
    }

    /// Internal nodes keyed by member set.
    pub fn internal_phis(&self) -> BTreeMap<Vec<usize>, DivergenceValue> {
        self.nodes().into_iter().filter_map(|node| node.phi_internal.map(|p| (node.members.clone(), p))).collect()
    }

    /// The set of member sets, which determines the tree shape.
    pub fn topology(&self) -> Vec<Vec<usize>> {
        let mut sets: Vec<Vec<usize>> = self.nodes().into_iter().map(|node| node.members.clone()).collect();
        sets.sort();
        sets
    }

    pub fn validate_structure(&self) -> Result<()> {
        let n = self.n();
        let bad = |msg: String| Err(Error::InvalidPartition(msg));
        if self.root.members != (0..n).collect::<Vec<_>>() {
            return bad(format!("root members {:?} are not 0..{n}", self.root.members));
        }
        let (mut leaves, mut internal) = (0, 0);
        for node in self.nodes() {
            if !node.members.windows(2).all(|w| w[0] < w[1]) {
                return bad(format!("members {:?} not strictly ascending", node.members));
            }
            match node.children() {
                None => {
                    if node.members.len() != 1 || node.phi_internal.is_some() {
                        return bad(format!("leaf {:?} must be a single subsystem without Φ", node.members));
                    }
                    leaves += 1;
                }
                Some([a, b]) => {
                    if node.members.len() < 2 || node.phi_internal.is_none() {
                        return bad(format!("internal node {:?} needs two members and a Φ value", node.members));
                    }
                    let mut union: Vec<usize> = a.members.iter().chain(&b.members).copied().collect();
                    union.sort_unstable();
                    if union != node.members || a.members.is_empty() || b.members.is_empty() {
                        return bad(format!("children do not partition {:?}", node.members));
                    }
                    if a.members[0] != node.members[0] {
                        return bad(format!("first child of {:?} must hold its smallest member", node.members));
                    }
                    internal += 1;
                }
            }
        }
        if leaves != n || internal != n - 1 {
            return bad(format!("{leaves} leaves and {internal} internal nodes for {n} subsystems"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let d: Self = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        d.validate_structure()?;
        Ok(d)
    }

    pub fn to_newick(&self) -> String {
        fn write(node: &DendrogramNode, out: &mut String) {
            match node.children() {
                None => {
                    let _ = write!(out, "{}", node.members[0]);
                }
                Some([a, b]) => {
                    out.push('(');
                    write(a, out);
                    out.push(',');
                    write(b, out);
                    let phi = node.phi_internal.map_or(0.0, DivergenceValue::nats);
                    let _ = write!(out, ")[&phi={phi:.6}");
                    if node.tie_count > 1 {
                        let _ = write!(out, ",ties={}", node.tie_count);
                    }
                    out.push(']');
                }
            }
        }
        let mut out = String::new();
        write(&self.root, &mut out);
        out.push(';');
        out
    }

    pub fn to_dot(&self) -> String {
        fn set_label(members: &[usize]) -> String {
            let items: Vec<String> = members.iter().map(usize::to_string).collect();
            format!("{{{}}}", items.join(","))
        }
        fn write(node: &DendrogramNode, next: &mut usize, out: &mut String) -> usize {
            let id = *next;
            *next += 1;
            match node.children() {
                None => {
                    let _ = writeln!(out, "  n{id} [shape=box, label=\"{}\"];", node.members[0]);
                }
                Some([a, b]) => {
                    let phi = node.phi_internal.map_or(0.0, DivergenceValue::nats);
                    let _ = writeln!(out, "  n{id} [label=\"{}\\nphi={phi:.6}\"];", set_label(&node.members));
                    for child in [a, b] {
                        let cid = write(child, next, out);
                        let _ = writeln!(out, "  n{id} -> n{cid};");
                    }
                }
            }
            id
        }
        let mut out = String::from("digraph dendrogram {\n");
        write(&self.root, &mut 0, &mut out);
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub samples: usize,
    pub trace_distance: f64,
    pub topology_changes: usize,
    /// Largest `|ΔΦ|` over nodes shared by both trees.
    pub max_node_shift: f64,
    /// Largest `|ΔΦ| − δ(ρ, ρ′) − 1e−6` over shared nodes; ≤ 0 means the
    /// shift bound held everywhere.
    pub max_bound_excess: f64,
}

/// Rebuilds the dendrogram for `samples` perturbations
/// `ρ′ = (1 − ε)ρ + ε τ` with `τ` random and `ε` chosen so that
/// `‖ρ′ − ρ‖₁ = trace_distance`, then compares against the original.
pub fn stability_report(
    rho: &DensityMatrix,
    config: &PhiConfig,
    samples: usize,
    trace_distance: f64,
    seed: u64,
) -> Result<StabilityReport> {
    if !(trace_distance > 0.0 && trace_distance <= 1.0) {
        return Err(Error::BadParameter(format!("trace distance {trace_distance} outside (0, 1]")));
    }
    let base = build(rho, config)?;
    let base_topology = base.topology();
    let base_phis = base.internal_phis();
    let outcomes = par::map_range(samples, |i| -> Result<(bool, f64, f64)> {
        let s = rng::indexed(seed, "dendrogram-stability", i as u64);
        let tau = generators::ginibre_mixed(rho.layout(), rho.dim(), s)?;
        let norm: f64 = linalg::eigvalsh(&(tau.matrix() - rho.matrix())).iter().map(|l| l.abs()).sum();
        let eps = if norm > 0.0 { (trace_distance / norm).min(1.0) } else { 0.0 };
        let perturbed = tau.mix(rho, eps)?;
        let delta = entropy::delta(rho, &perturbed)?;
        let tree = build(&perturbed, config)?;
        let (mut shift, mut excess) = (0.0_f64, f64::NEG_INFINITY);
        for (members, phi) in tree.internal_phis() {
            if let Some(p) = base_phis.get(&members) {
                let d = (phi.nats() - p.nats()).abs();
                shift = shift.max(d);
                excess = excess.max(d - delta - 1e-6);
            }
        }
        Ok((tree.topology() != base_topology, shift, excess))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(StabilityReport {
        samples,
        trace_distance,
        topology_changes: outcomes.iter().filter(|o| o.0).count(),
        max_node_shift: outcomes.iter().map(|o| o.1).fold(0.0, f64::max),
        max_bound_excess: outcomes.iter().map(|o| o.2).fold(f64::NEG_INFINITY, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell_plus_zero() -> DensityMatrix {
        let zero = generators::basis_state(&SubsystemLayout::qubits(1).unwrap(), &[0]).unwrap();
        generators::bell().tensor(&zero)
    }

    #[test]
    fn bell_newick() {
        let d = build(&generators::bell(), &PhiConfig::default()).unwrap();
        assert_eq!(d.to_newick(), "(0,1)[&phi=0.380396];");
    }

    #[test]
    fn bell_with_spectator() {
        let d = build(&bell_plus_zero(), &PhiConfig::default()).unwrap();
        let root = &d.root;
        assert!(root.phi_internal.unwrap().nats().abs() < 1e-12);
        let [a, b] = root.children().unwrap();
        assert_eq!(a.members, vec![0, 1]);
        assert_eq!(b.members, vec![2]);
        assert!((a.phi_internal.unwrap().nats() - 0.3803957).abs() < 1e-6);
        assert_eq!(d.to_newick(), "((0,1)[&phi=0.380396],2)[&phi=0.000000];");
    }

    #[test]
    fn ghz_tree() {
        let d = build(&generators::ghz(3).unwrap(), &PhiConfig::default()).unwrap();
        assert_eq!(d.root.tie_count, 3);
        assert!((d.root.phi_internal.unwrap().nats() - 0.3803957).abs() < 1e-6);
        let [a, b] = d.root.children().unwrap();
        assert_eq!(a.members, vec![0]);
        assert_eq!(b.members, vec![1, 2]);
        assert!((b.phi_internal.unwrap().nats() - 0.2157611).abs() < 1e-6);
        assert!(d.to_newick().ends_with("[&phi=0.380396,ties=3];"));
    }

    #[test]
    fn product_tree_is_flat() {
        let rho = generators::random_fully_product(&SubsystemLayout::qubits(4).unwrap(), false, 2);
        let d = build(&rho, &PhiConfig::default()).unwrap();
        for (_, phi) in d.internal_phis() {
            assert!(phi.nats() < 1e-12);
        }
        assert_eq!(d.internal_phis().len(), 3);
    }

    #[test]
    fn json_round_trip() {
        let rho = generators::ginibre_mixed(&SubsystemLayout::qubits(4).unwrap(), 3, 8).unwrap();
        let d = build(&rho, &PhiConfig::default()).unwrap();
        assert_eq!(Dendrogram::from_json(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn rejects_malformed_trees() {
        let mut d = build(&generators::bell(), &PhiConfig::default()).unwrap();
        d.root.split.as_mut().unwrap()[1].members = vec![0];
        assert!(d.validate_structure().is_err());
        let text = r#"{"layout":[2,2],"root":{"members":[0,1],"phi_internal":null,"tie_count":0,"split":null}}"#;
        assert!(Dendrogram::from_json(text).is_err());
        let single = DensityMatrix::maximally_mixed(SubsystemLayout::qubits(1).unwrap());
        assert!(matches!(build(&single, &PhiConfig::default()), Err(Error::SingleSubsystem)));
    }

    #[test]
    fn dot_labels() {
        let d = build(&generators::bell(), &PhiConfig::default()).unwrap();
        let dot = d.to_dot();
        assert!(dot.contains("label=\"{0,1}\\nphi=0.380396\""));
        assert!(dot.contains("n0 -> n1;") && dot.contains("n0 -> n2;"));
    }

    #[test]
    fn stability_is_reported() {
        let rho = generators::ginibre_mixed(&SubsystemLayout::qubits(3).unwrap(), 2, 1).unwrap();
        let r = stability_report(&rho, &PhiConfig::default(), 6, 1e-3, 4).unwrap();
        assert_eq!(r.samples, 6);
        assert!(r.max_node_shift.is_finite());
        assert_eq!(r, stability_report(&rho, &PhiConfig::default(), 6, 1e-3, 4).unwrap());
    }
}
