//! Max-Φ observer search: which channel in a parametrized family leaves its
//! output with the most integrated information.
//!
//! Every family is a closed parameter box. The search is derivative-free:
//! each restart starts at a rotated Halton point and runs coordinate sweeps
//! (coarse grid, then golden section around the best grid point), and a
//! final polish refines the best endpoint. All objective values use
//! marginal-mode Φ.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::channels::{KrausChannel, LocalChannel};
use crate::entropy::DivergenceValue;
use crate::error::{Error, Result};
use crate::optimize;
use crate::phi::{self, Mode, PhiConfig};
use crate::state::{DensityMatrix, SubsystemLayout};
use crate::{par, rng};

/// Largest number of points [`observer_spectrum`] evaluates by default.
pub const DEFAULT_GRID_CAP: usize = 1 << 16;
/// Restart endpoints within this of the best value are reported as
/// alternative maximizers.
pub const NEAR_OPTIMAL_TOL: f64 = 1e-6;

const COARSE_POINTS: usize = 7;
const GOLDEN_EVALS: usize = 24;
const SWEEP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl ParamRange {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), lo, hi }
    }

    fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum FamilyKind {
    LocalDephasing,
    LocalDepolarizing,
    PartialTraceFamily,
    Custom,
}

/// A channel picked out of a family by a parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Local(LocalChannel),
    Global { channel: KrausChannel, out_layout: SubsystemLayout },
    /// Keep only these subsystems.
    Reduce { keep: Vec<usize> },
}

impl Instance {
    /// Φ of the channel output. Outputs with fewer than two subsystems
    /// have Φ = 0.
    pub fn phi_of_output(&self, rho: &DensityMatrix, config: &PhiConfig) -> Result<DivergenceValue> {
        let out = match self {
            Instance::Local(ch) => ch.apply(rho)?,
            Instance::Global { channel, out_layout } => channel.apply(rho, Some(out_layout.clone()))?,
            Instance::Reduce { keep } => {
                if keep.len() < 2 {
                    return Ok(DivergenceValue::ZERO);
                }
                rho.partial_trace(keep)?
            }
        };
        if out.n() < 2 {
            return Ok(DivergenceValue::ZERO);
        }
        Ok(phi::phi(&out, config)?.phi)
    }
}

type Instantiate = dyn Fn(&[f64]) -> Result<Instance> + Send + Sync;

#[derive(Clone)]
pub struct ChannelFamily {
    kind: FamilyKind,
    params: Vec<ParamRange>,
    /// Whether every member acts site by site, so that Φ cannot grow.
    local: bool,
    instantiate: Arc<Instantiate>,
}

impl fmt::Debug for ChannelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChannelFamily")
            .field("kind", &self.kind)
            .field("params", &self.params)
            .field("local", &self.local)
            .finish_non_exhaustive()
    }
}

impl ChannelFamily {
    /// Per-qubit dephasing with parameters `θ_k ∈ [0, π]`, `φ_k ∈ [0, 2π]`
    /// interleaved as `(θ_0, φ_0, θ_1, φ_1, …)`.
    pub fn local_dephasing(layout: &SubsystemLayout) -> Result<Self> {
        if layout.dims().iter().any(|&d| d != 2) {
            return Err(Error::BadParameter("local dephasing is defined on qubits only".into()));
        }
        let params = (0..layout.n())
            .flat_map(|k| {
                [
                    ParamRange::new(format!("theta{k}"), 0.0, std::f64::consts::PI),
                    ParamRange::new(format!("phi{k}"), 0.0, 2.0 * std::f64::consts::PI),
                ]
            })
            .collect();
        Ok(Self {
            kind: FamilyKind::LocalDephasing,
            params,
            local: true,
            instantiate: Arc::new(|p: &[f64]| {
                let angles: Vec<(f64, f64)> = p.chunks(2).map(|c| (c[0], c[1])).collect();
                Ok(Instance::Local(LocalChannel::dephasing(&angles)?))
            }),
        })
    }

    /// Per-site depolarizing with `p_k ∈ [0, 1]`.
    pub fn local_depolarizing(layout: &SubsystemLayout) -> Self {
        let layout = layout.clone();
        Self {
            kind: FamilyKind::LocalDepolarizing,
            params: (0..layout.n()).map(|k| ParamRange::new(format!("p{k}"), 0.0, 1.0)).collect(),
            local: true,
            instantiate: Arc::new(move |p: &[f64]| Ok(Instance::Local(LocalChannel::depolarizing(&layout, p)?))),
        }
    }

    /// One parameter in `[0, 1]` per site; sites with parameter `≥ 0.5`
    /// are traced out.
    pub fn partial_trace(layout: &SubsystemLayout) -> Self {
        Self {
            kind: FamilyKind::PartialTraceFamily,
            params: (0..layout.n()).map(|k| ParamRange::new(format!("drop{k}"), 0.0, 1.0)).collect(),
            local: true,
            instantiate: Arc::new(|p: &[f64]| {
                Ok(Instance::Reduce { keep: p.iter().enumerate().filter(|(_, &x)| x < 0.5).map(|(k, _)| k).collect() })
            }),
        }
    }

    /// A user family over the box `params`. Set `local` only if every
    /// member acts site by site.
    pub fn custom(
        params: Vec<ParamRange>,
        local: bool,
        instantiate: impl Fn(&[f64]) -> Result<Instance> + Send + Sync + 'static,
    ) -> Result<Self> {
        if let Some(r) = params.iter().find(|r| !(r.lo.is_finite() && r.hi.is_finite() && r.lo <= r.hi)) {
            return Err(Error::BadParameter(format!("parameter {} has an invalid box [{}, {}]", r.name, r.lo, r.hi)));
        }
        Ok(Self { kind: FamilyKind::Custom, params, local, instantiate: Arc::new(instantiate) })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn params(&self) -> &[ParamRange] {
        &self.params
    }

    pub fn is_local(&self) -> bool {
        self.local
    }

    pub fn instantiate(&self, p: &[f64]) -> Result<Instance> {
        if p.len() != self.params.len() {
            return Err(Error::DimensionMismatch { expected: self.params.len(), found: p.len() });
        }
        if let Some((r, x)) = self.params.iter().zip(p).find(|(r, &x)| !(r.lo..=r.hi).contains(&x)) {
            return Err(Error::BadParameter(format!("{} = {x} outside [{}, {}]", r.name, r.lo, r.hi)));
        }
        (self.instantiate)(p)
    }

    fn evaluate(&self, rho: &DensityMatrix, p: &[f64], config: &PhiConfig) -> Result<f64> {
        Ok(self.instantiate(p)?.phi_of_output(rho, config)?.nats())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Mode used to re-evaluate the best parameters for the final report.
    pub report_mode: Mode,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { budget: 2000, restarts: 8, seed: 0, report_mode: Mode::Marginal }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Restart index; the final polish uses `restarts`.
    pub stage: usize,
    pub params: Vec<f64>,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartEndpoint {
    pub restart: usize,
    pub params: Vec<f64>,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverResult {
    pub best_params: Vec<f64>,
    pub phi_before: DivergenceValue,
    pub phi_after: DivergenceValue,
    /// `phi_after / phi_before`, or 0 when `phi_before` is 0.
    pub ratio: f64,
    /// `phi_after` recomputed in optimized mode, when requested.
    pub phi_after_optimized: Option<DivergenceValue>,
    pub endpoints: Vec<RestartEndpoint>,
    /// Restarts whose endpoint is within [`NEAR_OPTIMAL_TOL`] of the best.
    pub near_optimal: Vec<usize>,
    pub trace: Vec<Evaluation>,
}

impl ObserverResult {
    pub fn evaluations(&self) -> usize {
        self.trace.len()
    }

    pub fn to_json(&self, include_trace: bool) -> serde_json::Value {
        let mut v = json!({
            "best_params": self.best_params,
            "phi_before_nats": self.phi_before.nats(),
            "phi_after_nats": self.phi_after.nats(),
            "ratio": self.ratio,
            "evaluations": self.trace.len(),
            "endpoints": self.endpoints,
            "near_optimal": self.near_optimal,
        });
        if let Some(p) = self.phi_after_optimized {
            v["phi_after_optimized_nats"] = json!(p.nats());
        }
        if include_trace {
            v["trace"] = json!(self.trace);
        }
        v
    }
}

const PRIMES: [u64; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let (mut f, mut r) = (1.0, 0.0);
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Halton points in `[0, 1)^dims`, shifted modulo 1 by a seeded offset.
fn rotated_halton(count: usize, dims: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut g = rng::stream(rng::substream(seed, "observer-halton"));
    let shift: Vec<f64> = (0..dims).map(|_| rng::uniform(&mut g)).collect();
    let mut extra = rng::stream(rng::substream(seed, "observer-halton-extra"));
    (0..count)
        .map(|i| {
            (0..dims)
                .map(|d| {
                    let u = match PRIMES.get(d) {
                        Some(&b) => radical_inverse(i as u64 + 1, b),
                        None => rng::uniform(&mut extra),
                    };
                    (u + shift[d]).fract()
                })
                .collect()
        })
        .collect()
}

/// Budgeted, logged objective for one search stage.
struct Stage<'a> {
    family: &'a ChannelFamily,
    rho: &'a DensityMatrix,
    config: &'a PhiConfig,
    index: usize,
    left: usize,
    trace: Vec<Evaluation>,
    best: (Vec<f64>, f64),
    error: Option<Error>,
}

impl<'a> Stage<'a> {
    fn new(family: &'a ChannelFamily, rho: &'a DensityMatrix, config: &'a PhiConfig, index: usize, budget: usize) -> Self {
        Self { family, rho, config, index, left: budget, trace: Vec::new(), best: (Vec::new(), f64::NEG_INFINITY), error: None }
    }

    fn eval(&mut self, p: &[f64]) -> f64 {
        if self.left == 0 || self.error.is_some() {
            return f64::NEG_INFINITY;
        }
        self.left -= 1;
        match self.family.evaluate(self.rho, p, self.config) {
            Ok(v) => {
                self.trace.push(Evaluation { stage: self.index, params: p.to_vec(), phi: v });
                if v > self.best.1 {
                    self.best = (p.to_vec(), v);
                }
                v
            }
            Err(e) => {
                self.error = Some(e);
                f64::NEG_INFINITY
            }
        }
    }

    /// Coordinate sweeps from `start`, searching within `window · width`
    /// of the current value on each axis.
    fn sweeps(&mut self, start: Vec<f64>, window: f64) {
        let ranges = self.family.params.clone();
        let mut x = start;
        let mut fx = self.eval(&x);
        while self.left > 0 && self.error.is_none() {
            let before = fx;
            for (d, r) in ranges.iter().enumerate() {
                if self.left == 0 || r.width() == 0.0 {
                    continue;
                }
                let lo = r.clamp(x[d] - window * r.width());
                let hi = r.clamp(x[d] + window * r.width());
                let step = (hi - lo) / (COARSE_POINTS - 1) as f64;
                let mut best_t = x[d];
                for k in 0..COARSE_POINTS {
                    let t = lo + step * k as f64;
                    if t == x[d] || self.left == 0 {
                        continue;
                    }
                    let mut probe = x.clone();
                    probe[d] = t;
                    let v = self.eval(&probe);
                    if v > fx {
                        fx = v;
                        best_t = t;
                    }
                }
                x[d] = best_t;
                let (glo, ghi) = (r.clamp(best_t - step), r.clamp(best_t + step));
                let budget = self.left.min(GOLDEN_EVALS);
                let mut probe = x.clone();
                let g = optimize::golden_section(
                    |t| {
                        probe[d] = t;
                        -self.eval(&probe)
                    },
                    glo,
                    ghi,
                    1e-9 * r.width(),
                    budget,
                );
                if -g.f > fx {
                    fx = -g.f;
                    x[d] = g.x;
                }
            }
            if fx - before <= SWEEP_TOL {
                break;
            }
        }
    }
}

pub fn maximize_phi(rho: &DensityMatrix, family: &ChannelFamily, search: &SearchConfig) -> Result<ObserverResult> {
    if search.budget == 0 || search.restarts == 0 {
        return Err(Error::BadBudget);
    }
    let config = PhiConfig::default();
    let phi_before = phi::phi(rho, &config)?.phi;
    let dims = family.params.len();
    let restarts = search.restarts.min(search.budget);
    let polish = search.budget / 10;
    let share = search.budget - polish;

    let starts: Vec<Vec<f64>> = rotated_halton(restarts, dims, search.seed)
        .into_iter()
        .map(|u| u.iter().zip(&family.params).map(|(u, r)| r.lo + u * r.width()).collect())
        .collect();
    let stages = par::map_range(restarts, |i| {
        let budget = share / restarts + usize::from(i < share % restarts);
        let mut stage = Stage::new(family, rho, &config, i, budget.max(1));
        stage.sweeps(starts[i].clone(), 0.5);
        match stage.error {
            Some(e) => Err(e),
            None => Ok((stage.best, stage.trace)),
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut trace = Vec::new();
    let mut endpoints = Vec::with_capacity(restarts);
    for (i, ((params, phi), t)) in stages.into_iter().enumerate() {
        endpoints.push(RestartEndpoint { restart: i, params, phi });
        trace.extend(t);
    }
    let lead = endpoints.iter().fold(0, |b, e| if e.phi > endpoints[b].phi { e.restart } else { b });
    let used: usize = trace.len();
    let left = search.budget.saturating_sub(used);
    if left > 1 && dims > 0 {
        let mut stage = Stage::new(family, rho, &config, restarts, left);
        stage.sweeps(endpoints[lead].params.clone(), 0.05);
        if let Some(e) = stage.error {
            return Err(e);
        }
        trace.extend(stage.trace);
    }

    // the answer is the best point ever evaluated, lowest trace index on ties
    let best = trace.iter().enumerate().fold(0, |b, (i, e)| if e.phi > trace[b].phi { i } else { b });
    let best_params = trace[best].params.clone();
    let phi_after = DivergenceValue::from_nats(trace[best].phi);
    let top = endpoints.iter().map(|e| e.phi).fold(f64::NEG_INFINITY, f64::max);
    let near_optimal = endpoints.iter().filter(|e| e.phi >= top - NEAR_OPTIMAL_TOL).map(|e| e.restart).collect();
    let phi_after_optimized = match search.report_mode {
        Mode::Marginal => None,
        Mode::Optimized => Some(family.instantiate(&best_params)?.phi_of_output(rho, &PhiConfig::with_mode(Mode::Optimized))?),
    };
    let ratio = if phi_before.nats() > 0.0 { phi_after.nats() / phi_before.nats() } else { 0.0 };
    Ok(ObserverResult { best_params, phi_before, phi_after, ratio, phi_after_optimized, endpoints, near_optimal, trace })
}

/// One grid axis. All parameters listed in `params` take the axis value
/// together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub params: Vec<usize>,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl GridAxis {
    fn value(&self, k: usize) -> f64 {
        if self.points == 1 {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * k as f64 / (self.points - 1) as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<GridAxis>,
    /// Values for parameters no axis drives; defaults to each lower bound.
    pub base: Option<Vec<f64>>,
    pub cap: usize,
}

impl GridSpec {
    pub fn new(axes: Vec<GridAxis>) -> Self {
        Self { axes, base: None, cap: DEFAULT_GRID_CAP }
    }

    /// Parses `"0,1:0:1:21"` style axes separated by `;`: parameter indices,
    /// lower bound, upper bound, point count.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::BadParameter(format!("grid axis {msg}"));
        let axes = text
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|axis| {
                let parts: Vec<&str> = axis.trim().split(':').collect();
                let [params, lo, hi, points] = parts[..] else {
                    return Err(bad(&format!("{axis:?} must look like params:lo:hi:points")));
                };
                let params =
                    params.split(',').map(|p| p.trim().parse::<usize>()).collect::<std::result::Result<Vec<_>, _>>();
                Ok(GridAxis {
                    params: params.map_err(|_| bad(&format!("{axis:?} has bad parameter indices")))?,
                    lo: lo.trim().parse().map_err(|_| bad(&format!("{axis:?} has a bad lower bound")))?,
                    hi: hi.trim().parse().map_err(|_| bad(&format!("{axis:?} has a bad upper bound")))?,
                    points: points.trim().parse().map_err(|_| bad(&format!("{axis:?} has a bad point count")))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if axes.is_empty() {
            return Err(bad("list is empty"));
        }
        Ok(Self::new(axes))
    }

    pub fn total_points(&self) -> usize {
        self.axes.iter().fold(1usize, |acc, a| acc.saturating_mul(a.points))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub params: Vec<f64>,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub phi_before: DivergenceValue,
    /// Row-major over the axes, last axis fastest.
    pub points: Vec<SpectrumPoint>,
    /// Fraction of grid points with `Φ(F(ρ)) ≥ Φ(ρ)/2`.
    pub fraction_retaining_half: f64,
}

pub fn observer_spectrum(rho: &DensityMatrix, family: &ChannelFamily, grid: &GridSpec) -> Result<SpectrumResult> {
    let total = grid.total_points();
    if total > grid.cap {
        return Err(Error::GridTooLarge { points: total, cap: grid.cap });
    }
    let dims = family.params.len();
    for axis in &grid.axes {
        if axis.points == 0 || axis.params.is_empty() {
            return Err(Error::BadParameter("grid axes need parameters and at least one point".into()));
        }
        if let Some(&p) = axis.params.iter().find(|&&p| p >= dims) {
            return Err(Error::IndexOutOfRange { index: p, n: dims });
        }
    }
    let base = match &grid.base {
        Some(b) if b.len() != dims => return Err(Error::DimensionMismatch { expected: dims, found: b.len() }),
        Some(b) => b.clone(),
        None => family.params.iter().map(|r| r.lo).collect(),
    };
    let config = PhiConfig::default();
    let phi_before = phi::phi(rho, &config)?.phi;
    let points = par::map_range(total, |flat| {
        let mut p = base.clone();
        let mut rem = flat;
        for axis in grid.axes.iter().rev() {
            let v = axis.value(rem % axis.points);
            rem /= axis.points;
            for &i in &axis.params {
                p[i] = v;
            }
        }
        family.evaluate(rho, &p, &config).map(|phi| SpectrumPoint { params: p, phi })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let half = 0.5 * phi_before.nats();
    let retained = points.iter().filter(|pt| pt.phi >= half).count();
    Ok(SpectrumResult { phi_before, fraction_retaining_half: retained as f64 / total as f64, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    const CLASSICAL_PAIR_PHI: f64 = 0.2157611;

    #[test]
    fn halton_is_in_unit_box_and_deterministic() {
        let a = rotated_halton(16, 3, 5);
        assert_eq!(a, rotated_halton(16, 3, 5));
        assert!(a.iter().flatten().all(|&u| (0.0..1.0).contains(&u)));
        assert_ne!(a, rotated_halton(16, 3, 6));
        assert!((radical_inverse(3, 2) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn bell_dephasing_reaches_classical_pair_value() {
        let bell = generators::bell();
        let fam = ChannelFamily::local_dephasing(bell.layout()).unwrap();
        let search = SearchConfig { budget: 600, restarts: 4, seed: 1, report_mode: Mode::Marginal };
        let r = maximize_phi(&bell, &fam, &search).unwrap();
        assert!((r.phi_after.nats() - CLASSICAL_PAIR_PHI).abs() < 1e-3, "{}", r.phi_after.nats());
        assert!(r.trace.len() <= 600);
        assert!(r.trace.iter().all(|e| e.phi <= r.phi_before.nats() + 1e-9));
        assert!(r.trace.iter().all(|e| e.phi <= r.phi_after.nats()));
        assert_eq!(r, maximize_phi(&bell, &fam, &search).unwrap());
    }

    #[test]
    fn depolarizing_optimum_is_identity() {
        let rho = generators::ginibre_mixed(&SubsystemLayout::qubits(2).unwrap(), 2, 3).unwrap();
        let fam = ChannelFamily::local_depolarizing(rho.layout());
        let r = maximize_phi(&rho, &fam, &SearchConfig { budget: 300, ..Default::default() }).unwrap();
        assert!(r.best_params.iter().all(|&p| p < 1e-6), "{:?}", r.best_params);
        assert!((r.phi_after.nats() - r.phi_before.nats()).abs() < 1e-6);
        assert!((r.ratio - 1.0).abs() < 1e-5);
    }

    #[test]
    fn product_input_stays_at_zero() {
        let rho = generators::random_fully_product(&SubsystemLayout::qubits(2).unwrap(), false, 4);
        let fam = ChannelFamily::local_dephasing(rho.layout()).unwrap();
        let r = maximize_phi(&rho, &fam, &SearchConfig { budget: 50, restarts: 2, ..Default::default() }).unwrap();
        assert!(r.phi_after.nats() < 1e-10);
        assert_eq!(r.ratio, 0.0);
    }

    #[test]
    fn partial_trace_family() {
        let ghz = generators::ghz(3).unwrap();
        let fam = ChannelFamily::partial_trace(ghz.layout());
        let keep_all = fam.instantiate(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(keep_all, Instance::Reduce { keep: vec![0, 1, 2] });
        let cfg = PhiConfig::default();
        let drop_one = fam.instantiate(&[0.0, 0.7, 0.0]).unwrap().phi_of_output(&ghz, &cfg).unwrap();
        assert!((drop_one.nats() - CLASSICAL_PAIR_PHI).abs() < 1e-6);
        let lone = fam.instantiate(&[1.0, 1.0, 0.0]).unwrap().phi_of_output(&ghz, &cfg).unwrap();
        assert_eq!(lone, DivergenceValue::ZERO);
        let r = maximize_phi(&ghz, &fam, &SearchConfig { budget: 40, restarts: 4, ..Default::default() }).unwrap();
        assert!((r.phi_after.nats() - r.phi_before.nats()).abs() < 1e-9);
    }

    #[test]
    fn budget_errors() {
        let bell = generators::bell();
        let fam = ChannelFamily::local_depolarizing(bell.layout());
        let zero = SearchConfig { budget: 0, ..Default::default() };
        assert!(matches!(maximize_phi(&bell, &fam, &zero), Err(Error::BadBudget)));
        let one = SearchConfig { budget: 1, ..Default::default() };
        assert_eq!(maximize_phi(&bell, &fam, &one).unwrap().trace.len(), 1);
        let grid = GridSpec { cap: 10, ..GridSpec::new(vec![GridAxis { params: vec![0], lo: 0.0, hi: 1.0, points: 11 }]) };
        assert!(matches!(observer_spectrum(&bell, &fam, &grid), Err(Error::GridTooLarge { points: 11, cap: 10 })));
        assert!(fam.instantiate(&[0.5, 1.5]).is_err());
    }

    #[test]
    fn depolarizing_sweep_is_monotone() {
        let bell = generators::bell();
        let fam = ChannelFamily::local_depolarizing(bell.layout());
        let grid = GridSpec::parse("0,1:0:1:21").unwrap();
        let s = observer_spectrum(&bell, &fam, &grid).unwrap();
        assert_eq!(s.points.len(), 21);
        for w in s.points.windows(2) {
            assert!(w[1].phi <= w[0].phi + 1e-12);
        }
        assert!(s.points[20].phi.abs() < 1e-12);
        assert!((s.points[0].phi - s.phi_before.nats()).abs() < 1e-12);
        assert!(s.fraction_retaining_half > 0.0 && s.fraction_retaining_half < 1.0);
    }

    #[test]
    fn grid_parse_errors() {
        assert!(GridSpec::parse("").is_err());
        assert!(GridSpec::parse("0:0:1").is_err());
        assert!(GridSpec::parse("a:0:1:3").is_err());
        let g = GridSpec::parse("0:0:3.14:4; 2:0:6.28:5").unwrap();
        assert_eq!(g.total_points(), 20);
    }

    #[test]
    fn custom_family_box_is_checked() {
        assert!(ChannelFamily::custom(vec![ParamRange::new("x", 1.0, 0.0)], true, |_| unreachable!()).is_err());
        let fam = ChannelFamily::custom(vec![ParamRange::new("p", 0.0, 1.0)], false, |p| {
            Ok(Instance::Global { channel: KrausChannel::depolarizing(4, p[0])?, out_layout: SubsystemLayout::qubits(2)? })
        })
        .unwrap();
        let r = maximize_phi(&generators::bell(), &fam, &SearchConfig { budget: 60, restarts: 2, ..Default::default() }).unwrap();
        assert!(r.best_params[0] < 1e-6);
    }
}
