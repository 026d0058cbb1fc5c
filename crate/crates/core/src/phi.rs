//! Integrated information: the smallest QJSD between a state and a product
//! state across a cut, with the minimizing cut and product state.
//!
//! Two feasible sets are supported. [`Mode::Marginal`] compares `ρ` with the
//! product of its own marginals on each cut. [`Mode::Optimized`] additionally
//! minimizes over every product state `σ_A ⊗ σ_B` on the winning cut(s),
//! starting from the marginals, by alternating coordinate descent over
//! Hermitian generators `σ_X = exp(H_X)/Tr exp(H_X)`.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::entropy::{self, DivergenceValue};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::optimize;
use crate::state::{assemble_blocks, product_of_blocks, Bipartition, DensityMatrix, SubsystemLayout};
use crate::{par, rng};

pub const DEFAULT_N_CAP: usize = 12;
pub const DEFAULT_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Marginal,
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    pub max_sweeps: usize,
    /// Stop once a full sweep improves the divergence by less than this.
    pub tol: f64,
    /// Seed for the perturbed restart used to probe uniqueness.
    pub seed: u64,
    pub probe_uniqueness: bool,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { max_sweeps: 500, tol: 1e-10, seed: 0, probe_uniqueness: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiConfig {
    pub mode: Mode,
    pub n_cap: usize,
    pub tie_tol: f64,
    pub refine: RefineOptions,
}

impl Default for PhiConfig {
    fn default() -> Self {
        Self { mode: Mode::Marginal, n_cap: DEFAULT_N_CAP, tie_tol: DEFAULT_TIE_TOL, refine: RefineOptions::default() }
    }
}

impl PhiConfig {
    pub fn with_mode(mode: Mode) -> Self {
        Self { mode, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutDivergence {
    pub cut: Bipartition,
    pub divergence: DivergenceValue,
}

/// Outcome of the product-state refinement on one cut.
#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub cut: Bipartition,
    pub marginal: DivergenceValue,
    pub refined: DivergenceValue,
    pub sigma: DensityMatrix,
    pub sweeps: usize,
    pub evaluations: usize,
    /// Max-abs distance between the minimizers reached from the marginal
    /// start and from a perturbed start; `None` when not probed.
    pub uniqueness_spread: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiResult {
    pub phi: DivergenceValue,
    pub optimal_cut: Bipartition,
    pub sigma_star: DensityMatrix,
    pub per_cut: Vec<CutDivergence>,
    pub ties: Vec<Bipartition>,
    pub mode: Mode,
    /// Present in optimized mode: one entry per refined (tied) cut.
    pub refinements: Vec<Refinement>,
}

impl PhiResult {
    /// The marginal-mode minimum, whatever the mode.
    pub fn marginal_phi(&self) -> DivergenceValue {
        self.per_cut
            .iter()
            .map(|c| c.divergence)
            .fold(DivergenceValue::from_nats(f64::INFINITY), |a, b| if b < a { b } else { a })
    }

    /// JSON view: values in nats and bits, the cut as index lists, ties, and
    /// optionally the full per-cut table.
    pub fn to_json(&self, include_per_cut: bool) -> serde_json::Value {
        let mut v = json!({
            "phi_nats": self.phi.nats(),
            "phi_bits": self.phi.bits(),
            "cut": self.optimal_cut,
            "mode": self.mode,
            "tie_count": self.ties.len(),
            "ties": self.ties,
        });
        if self.mode == Mode::Optimized {
            v["marginal_phi_nats"] = json!(self.marginal_phi().nats());
            v["refinements"] = self
                .refinements
                .iter()
                .map(|r| {
                    json!({
                        "cut": r.cut,
                        "marginal_nats": r.marginal.nats(),
                        "refined_nats": r.refined.nats(),
                        "sweeps": r.sweeps,
                        "evaluations": r.evaluations,
                        "uniqueness_spread": r.uniqueness_spread,
                    })
                })
                .collect();
        }
        if include_per_cut {
            v["per_cut"] = self
                .per_cut
                .iter()
                .map(|c| json!({ "cut": c.cut, "nats": c.divergence.nats() }))
                .collect();
        }
        v
    }
}

/// All cuts in ascending canonical-mask order: `2^(n−1) − 1` of them.
pub fn enumerate_bipartitions(layout: &SubsystemLayout) -> Result<Vec<Bipartition>> {
    let n = layout.n();
    if n < 2 {
        return Err(Error::SingleSubsystem);
    }
    if n > 63 {
        return Err(Error::SearchBudgetExceeded { n, cap: 63 });
    }
    let full = (1u64 << n) - 1;
    Ok((1..full).step_by(2).map(|m| Bipartition::from_mask(m, n).expect("odd proper mask")).collect())
}

/// Divergence of `rho` from the product of its marginals on each cut.
fn cut_divergences(rho: &DensityMatrix, s_rho: f64, cuts: &[Bipartition]) -> Result<Vec<CutDivergence>> {
    par::map(cuts, |cut| {
        let a = rho.partial_trace(&cut.side_a())?;
        let b = rho.partial_trace(&cut.side_b())?;
        let s_sigma = entropy::von_neumann_entropy(&a)? + entropy::von_neumann_entropy(&b)?;
        let sigma = assemble_blocks(&[a, b], &[cut.side_a(), cut.side_b()])?;
        let d = entropy::qjsd_raw(rho.matrix(), s_rho, sigma.matrix(), s_sigma)?;
        Ok(CutDivergence { cut: *cut, divergence: DivergenceValue::from_nats(d) })
    })
    .into_iter()
    .collect()
}

pub fn phi(rho: &DensityMatrix, config: &PhiConfig) -> Result<PhiResult> {
    let n = rho.n();
    if n < 2 {
        return Err(Error::SingleSubsystem);
    }
    if n > config.n_cap {
        return Err(Error::SearchBudgetExceeded { n, cap: config.n_cap });
    }
    let cuts = enumerate_bipartitions(rho.layout())?;
    let s_rho = entropy::von_neumann_entropy(rho)?;
    let per_cut = cut_divergences(rho, s_rho, &cuts)?;

    // first strict minimum in canonical order
    let best = per_cut
        .iter()
        .enumerate()
        .fold(0, |best, (i, c)| if c.divergence < per_cut[best].divergence { i } else { best });
    let min = per_cut[best].divergence;
    let ties: Vec<Bipartition> = per_cut
        .iter()
        .filter(|c| c.divergence.nats() <= min.nats() + config.tie_tol)
        .map(|c| c.cut)
        .collect();
    let optimal_cut = per_cut[best].cut;

    match config.mode {
        Mode::Marginal => Ok(PhiResult {
            phi: min,
            optimal_cut,
            sigma_star: rho.product_of_marginals(&optimal_cut)?,
            per_cut,
            ties,
            mode: Mode::Marginal,
            refinements: Vec::new(),
        }),
        Mode::Optimized => {
            let marginal_of = |cut: &Bipartition| {
                per_cut.iter().find(|c| c.cut == *cut).map(|c| c.divergence).expect("cut enumerated")
            };
            let refinements = par::map(&ties, |cut| refine_cut(rho, s_rho, cut, marginal_of(cut), &config.refine))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let winner = refinements
                .iter()
                .enumerate()
                .fold(0, |best, (i, r)| if r.refined < refinements[best].refined { i } else { best });
            let w = &refinements[winner];
            Ok(PhiResult {
                phi: w.refined,
                optimal_cut: w.cut,
                sigma_star: w.sigma.clone(),
                per_cut,
                ties,
                mode: Mode::Optimized,
                refinements,
            })
        }
    }
}

/// Real coordinates of a `d × d` Hermitian generator: `d` diagonal entries,
/// then (re, im) of each strictly-upper entry.
fn hermitian_from_params(x: &[f64], d: usize) -> CMatrix {
    let mut h = CMatrix::zeros(d, d);
    for i in 0..d {
        h[(i, i)] = linalg::real(x[i]);
    }
    let mut k = d;
    for i in 0..d {
        for j in i + 1..d {
            let z = num_complex::Complex64::new(x[k], x[k + 1]);
            h[(i, j)] = z;
            h[(j, i)] = z.conj();
            k += 2;
        }
    }
    h
}

fn params_from_hermitian(h: &CMatrix) -> Vec<f64> {
    let d = h.nrows();
    let mut x: Vec<f64> = (0..d).map(|i| h[(i, i)].re).collect();
    for i in 0..d {
        for j in i + 1..d {
            x.push(h[(i, j)].re);
            x.push(h[(i, j)].im);
        }
    }
    x
}

/// Gibbs state `exp(H)/Tr exp(H)` and its entropy.
fn gibbs(h: &CMatrix) -> (CMatrix, f64) {
    let (vals, vecs) = linalg::eigh(h);
    let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = vals.iter().map(|v| (v - top).exp()).collect();
    let z: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|x| x / z).collect();
    let s = p.iter().filter(|&&q| q > 0.0).map(|&q| -q * q.ln()).sum();
    let mut scaled = vecs.clone();
    for (j, &pj) in p.iter().enumerate() {
        for i in 0..vals.len() {
            scaled[(i, j)] *= pj;
        }
    }
    (scaled * vecs.adjoint(), s)
}

/// Generator whose Gibbs state approximates `rho` (eigenvalues floored).
fn log_generator(rho: &DensityMatrix) -> CMatrix {
    linalg::spectral_map(rho.matrix(), |x| x.max(1e-12).ln())
}

struct ProductObjective<'a> {
    rho: &'a DensityMatrix,
    s_rho: f64,
    blocks: [Vec<usize>; 2],
    layouts: [SubsystemLayout; 2],
    dims: [usize; 2],
}

impl ProductObjective<'_> {
    fn generators(&self, x: &[f64], frames: &[CMatrix; 2]) -> [CMatrix; 2] {
        let split = self.dims[0] * self.dims[0];
        let h = [hermitian_from_params(&x[..split], self.dims[0]), hermitian_from_params(&x[split..], self.dims[1])];
        [0, 1].map(|k| &frames[k] * &h[k] * frames[k].adjoint())
    }

    fn sigma_in(&self, x: &[f64], frames: &[CMatrix; 2]) -> (DensityMatrix, f64) {
        let [ha, hb] = self.generators(x, frames);
        let (ga, sa) = gibbs(&ha);
        let (gb, sb) = gibbs(&hb);
        let states = [
            DensityMatrix::from_trusted(ga, self.layouts[0].clone()),
            DensityMatrix::from_trusted(gb, self.layouts[1].clone()),
        ];
        let sigma = assemble_blocks(&states, &self.blocks).expect("blocks partition the system");
        (sigma, sa + sb)
    }

    fn sigma(&self, x: &[f64]) -> (DensityMatrix, f64) {
        self.sigma_in(x, &self.identity_frames())
    }

    fn value_in(&self, x: &[f64], frames: &[CMatrix; 2]) -> f64 {
        let (sigma, s_sigma) = self.sigma_in(x, frames);
        entropy::qjsd_raw(self.rho.matrix(), self.s_rho, sigma.matrix(), s_sigma).unwrap_or(f64::INFINITY)
    }

    fn identity_frames(&self) -> [CMatrix; 2] {
        self.dims.map(|d| CMatrix::identity(d, d))
    }

    /// Alternating coordinate descent; returns (x, value, sweeps, evals).
    /// Each sweep runs in the eigenbasis of the current generators, so the
    /// diagonal coordinates move the spectrum and the off-diagonal ones
    /// rotate it. The returned `x` is in the computational basis.
    fn descend(&self, mut x: Vec<f64>, opts: &RefineOptions) -> (Vec<f64>, f64, usize, usize) {
        let mut frames = self.identity_frames();
        let mut fx = self.value_in(&x, &frames);
        let mut evals = 1;
        let mut steps = vec![0.5; x.len()];
        let split = self.dims[0] * self.dims[0];
        let mut sweeps = 0;
        while sweeps < opts.max_sweeps {
            sweeps += 1;
            let (rotated, eig_frames) = self.eigen_frame(&x, &frames);
            let f_rot = self.value_in(&rotated, &eig_frames);
            evals += 1;
            if f_rot <= fx {
                x = rotated;
                frames = eig_frames;
                fx = f_rot;
            }
            let before = fx;
            for range in [0..split, split..x.len()] {
                for c in range {
                    let x0 = x[c];
                    let mut trial = x.clone();
                    let r = optimize::line_search(
                        |t| {
                            trial[c] = t;
                            self.value_in(&trial, &frames)
                        },
                        x0,
                        fx,
                        steps[c],
                        1e-6 * (1.0 + x0.abs()),
                        40,
                    );
                    evals += r.evals;
                    if r.f < fx {
                        x[c] = r.x;
                        fx = r.f;
                    }
                    steps[c] = (2.0 * (r.x - x0).abs()).clamp(1e-6, 1.0);
                }
            }
            if before - fx < opts.tol {
                break;
            }
        }
        let [ha, hb] = self.generators(&x, &frames);
        let mut out = params_from_hermitian(&ha);
        out.extend(params_from_hermitian(&hb));
        (out, fx, sweeps, evals)
    }

    /// Coordinates of the same generators in their own eigenbases.
    fn eigen_frame(&self, x: &[f64], frames: &[CMatrix; 2]) -> (Vec<f64>, [CMatrix; 2]) {
        let [ha, hb] = self.generators(x, frames);
        let (va, ua) = linalg::eigh(&ha);
        let (vb, ub) = linalg::eigh(&hb);
        let diag = |v: &[f64]| params_from_hermitian(&CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(v.len(), v.iter().map(|&e| linalg::real(e)))));
        let mut params = diag(&va);
        params.extend(diag(&vb));
        (params, [ua, ub])
    }
}

/// Minimizes `QJSD(ρ ‖ σ_A ⊗ σ_B)` over product states on `cut`.
pub fn refine_cut(
    rho: &DensityMatrix,
    s_rho: f64,
    cut: &Bipartition,
    marginal: DivergenceValue,
    opts: &RefineOptions,
) -> Result<Refinement> {
    let blocks = [cut.side_a(), cut.side_b()];
    let ra = rho.partial_trace(&blocks[0])?;
    let rb = rho.partial_trace(&blocks[1])?;
    let objective = ProductObjective {
        rho,
        s_rho,
        layouts: [ra.layout().clone(), rb.layout().clone()],
        dims: [ra.dim(), rb.dim()],
        blocks: blocks.clone(),
    };
    let mut x0 = params_from_hermitian(&log_generator(&ra));
    x0.extend(params_from_hermitian(&log_generator(&rb)));

    let (x, fx, sweeps, mut evaluations) = objective.descend(x0.clone(), opts);
    let uniqueness_spread = if opts.probe_uniqueness {
        let mut r = rng::stream(rng::substream(opts.seed, "refine-perturb"));
        let perturbed: Vec<f64> = x0.iter().map(|v| v + 0.5 * rng::complex_gaussian(&mut r).re).collect();
        let (x2, _, _, e2) = objective.descend(perturbed, opts);
        evaluations += e2;
        Some(objective.sigma(&x).0.max_abs_diff(&objective.sigma(&x2).0))
    } else {
        None
    };

    let (sigma, refined) = if fx < marginal.nats() {
        (objective.sigma(&x).0, DivergenceValue::from_nats(fx))
    } else {
        (rho.product_of_marginals(cut)?, marginal)
    };
    Ok(Refinement { cut: *cut, marginal, refined, sigma, sweeps, evaluations, uniqueness_spread })
}

/// A partition of the subsystems into `k ≥ 2` disjoint non-empty blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<usize>>", into = "Vec<Vec<usize>>")]
pub struct PartitionKBlocks {
    blocks: Vec<Vec<usize>>,
}

impl PartitionKBlocks {
    /// Validates and canonicalizes: blocks sorted internally and by first
    /// member.
    pub fn new(blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.len() < 2 {
            return Err(Error::InvalidPartition(format!("need at least 2 blocks, got {}", blocks.len())));
        }
        let n: usize = blocks.iter().map(Vec::len).sum();
        let mut seen = vec![false; n];
        let mut blocks = blocks;
        for b in &mut blocks {
            if b.is_empty() {
                return Err(Error::InvalidPartition("empty block".into()));
            }
            b.sort_unstable();
            for &s in b.iter() {
                if s >= n || seen[s] {
                    return Err(Error::InvalidPartition(format!("blocks do not partition 0..{n}")));
                }
                seen[s] = true;
            }
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(Self { blocks })
    }

    pub fn singletons(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| vec![i]).collect())
    }

    pub fn from_bipartition(cut: &Bipartition) -> Self {
        Self { blocks: vec![cut.side_a(), cut.side_b()] }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn n(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Merges blocks `i` and `j`.
    pub fn merge(&self, i: usize, j: usize) -> Result<Self> {
        let k = self.k();
        if i == j || i >= k || j >= k {
            return Err(Error::InvalidPartition(format!("cannot merge blocks {i} and {j} of {k}")));
        }
        if k < 3 {
            return Err(Error::InvalidPartition("merging would leave a single block".into()));
        }
        let mut blocks: Vec<Vec<usize>> = Vec::with_capacity(k - 1);
        let mut merged = self.blocks[i].clone();
        merged.extend_from_slice(&self.blocks[j]);
        for (idx, b) in self.blocks.iter().enumerate() {
            if idx != i && idx != j {
                blocks.push(b.clone());
            }
        }
        blocks.push(merged);
        Self::new(blocks)
    }
}

impl TryFrom<Vec<Vec<usize>>> for PartitionKBlocks {
    type Error = Error;
    fn try_from(v: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PartitionKBlocks> for Vec<Vec<usize>> {
    fn from(p: PartitionKBlocks) -> Self {
        p.blocks
    }
}

/// Every set partition of `0..n` with at least two blocks, via restricted
/// growth strings.
pub fn enumerate_partitions(n: usize) -> Vec<PartitionKBlocks> {
    fn grow(pos: usize, n: usize, labels: &mut Vec<usize>, max: usize, out: &mut Vec<PartitionKBlocks>) {
        if pos == n {
            let k = max + 1;
            if k >= 2 {
                let mut blocks = vec![Vec::new(); k];
                for (site, &l) in labels.iter().enumerate() {
                    blocks[l].push(site);
                }
                out.push(PartitionKBlocks::new(blocks).expect("restricted growth string is a partition"));
            }
            return;
        }
        for l in 0..=max + 1 {
            labels.push(l);
            grow(pos + 1, n, labels, max.max(l), out);
            labels.pop();
        }
    }
    let mut out = Vec::new();
    if n >= 2 {
        let mut labels = vec![0];
        grow(1, n, &mut labels, 0, &mut out);
    }
    out
}

/// QJSD between `rho` and the product of its block marginals.
pub fn divergence_for_partition(rho: &DensityMatrix, partition: &PartitionKBlocks) -> Result<DivergenceValue> {
    if partition.n() != rho.n() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} subsystems, state has {}",
            partition.n(),
            rho.n()
        )));
    }
    let sigma = product_of_blocks(rho, partition.blocks())?;
    entropy::qjsd(rho, &sigma)
}

/// Divergence before and after merging blocks `i` and `j`.
pub fn merge_inequality_check(
    rho: &DensityMatrix,
    partition: &PartitionKBlocks,
    i: usize,
    j: usize,
) -> Result<(DivergenceValue, DivergenceValue)> {
    let merged = partition.merge(i, j)?;
    Ok((divergence_for_partition(rho, partition)?, divergence_for_partition(rho, &merged)?))
}

/// Minimum over every k-block partition (exhaustive; small n only).
pub fn min_over_all_partitions(rho: &DensityMatrix) -> Result<(PartitionKBlocks, DivergenceValue)> {
    if rho.n() < 2 {
        return Err(Error::SingleSubsystem);
    }
    let parts = enumerate_partitions(rho.n());
    let values = par::map(&parts, |p| divergence_for_partition(rho, p))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let best = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v < values[best] { i } else { best });
    Ok((parts[best].clone(), values[best]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityPoint {
    pub t: f64,
    /// Φ(tρ₁ + (1−t)ρ₂)
    pub phi_mixture: f64,
    /// tΦ(ρ₁) + (1−t)Φ(ρ₂)
    pub bound: f64,
    /// `phi_mixture − bound`; positive means the inequality fails.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub mode: Mode,
    pub points: Vec<ConvexityPoint>,
    pub max_violation: f64,
}

pub fn convexity_check(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    t_grid: &[f64],
    config: &PhiConfig,
) -> Result<ConvexityReport> {
    if rho1.layout() != rho2.layout() {
        return Err(Error::LayoutMismatch);
    }
    let p1 = phi(rho1, config)?.phi.nats();
    let p2 = phi(rho2, config)?.phi.nats();
    let points = t_grid
        .iter()
        .map(|&t| {
            let mix = rho1.mix(rho2, t)?;
            let phi_mixture = phi(&mix, config)?.phi.nats();
            let bound = t * p1 + (1.0 - t) * p2;
            Ok(ConvexityPoint { t, phi_mixture, bound, violation: phi_mixture - bound })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_violation = points.iter().map(|p| p.violation).fold(0.0, f64::max);
    Ok(ConvexityReport { mode: config.mode, points, max_violation })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub mode: Mode,
    /// |√Φ(ρ₁) − √Φ(ρ₂)|
    pub lhs: f64,
    /// δ(ρ₁, ρ₂)
    pub rhs: f64,
}

impl LipschitzReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

pub fn lipschitz_check(rho1: &DensityMatrix, rho2: &DensityMatrix, config: &PhiConfig) -> Result<LipschitzReport> {
    if rho1.layout() != rho2.layout() {
        return Err(Error::LayoutMismatch);
    }
    let p1 = phi(rho1, config)?.phi.nats();
    let p2 = phi(rho2, config)?.phi.nats();
    Ok(LipschitzReport { mode: config.mode, lhs: (p1.sqrt() - p2.sqrt()).abs(), rhs: entropy::delta(rho1, rho2)? })
}
