//! The property suite: seeded checks of every invariant the library relies
//! on, gathered into one deterministic report.
//!
//! Asserted checks fail the run when their worst violation exceeds the
//! tolerance. Report-only checks record what was measured and never fail.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::blanket;
use crate::channels::{KrausChannel, LocalChannel};
use crate::entropy;
use crate::error::{Error, Result};
use crate::generators;
use crate::linalg;
use crate::phi::{self, Mode, PhiConfig, RefineOptions};
use crate::state::{Bipartition, DensityMatrix, SubsystemLayout};
use crate::witness;
use crate::{par, rng};

/// Layouts larger than this are rejected to keep a run bounded.
pub const MAX_SUITE_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleCounts {
    pub metric_triples: usize,
    pub data_processing: usize,
    pub local_monotonicity: usize,
    pub merge: usize,
    pub bipartition_sufficiency: usize,
    pub negative_type_ensembles: usize,
    pub negative_type_vectors: usize,
    pub petz_products: usize,
    pub witness: usize,
    pub convexity: usize,
    pub lipschitz: usize,
    pub general_channel: usize,
    pub blanket: usize,
}

impl Default for SampleCounts {
    fn default() -> Self {
        Self {
            metric_triples: 2000,
            data_processing: 500,
            local_monotonicity: 250,
            merge: 50,
            bipartition_sufficiency: 50,
            negative_type_ensembles: 10,
            negative_type_vectors: 1000,
            petz_products: 100,
            witness: 50,
            convexity: 20,
            lipschitz: 10,
            general_channel: 100,
            blanket: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Slack for inequalities (triangle, contraction, monotonicity, …).
    pub inequality: f64,
    /// Slack for identities that hold up to rounding.
    pub exact: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { inequality: 1e-9, exact: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub seed: u64,
    pub layouts: Vec<Vec<usize>>,
    pub samples: SampleCounts,
    pub tolerances: Tolerances,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            layouts: vec![vec![2, 2], vec![2, 2, 2]],
            samples: SampleCounts::default(),
            tolerances: Tolerances::default(),
        }
    }
}

impl SuiteConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    fn validated_layouts(&self) -> Result<Vec<SubsystemLayout>> {
        if self.layouts.is_empty() {
            return Err(Error::ConfigInvalid("layout list is empty".into()));
        }
        let t = self.tolerances;
        if !(t.inequality >= 0.0 && t.exact >= 0.0) {
            return Err(Error::ConfigInvalid("tolerances must be non-negative".into()));
        }
        self.layouts
            .iter()
            .map(|dims| {
                let layout =
                    SubsystemLayout::new(dims.clone()).map_err(|e| Error::ConfigInvalid(format!("layout {dims:?}: {e}")))?;
                if layout.n() < 2 {
                    return Err(Error::ConfigInvalid(format!("layout {dims:?} has a single subsystem")));
                }
                if layout.total_dim() > MAX_SUITE_DIM {
                    return Err(Error::ConfigInvalid(format!(
                        "layout {dims:?} has dimension {} > {MAX_SUITE_DIM}",
                        layout.total_dim()
                    )));
                }
                Ok(layout)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    ReportOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: Status,
    /// Largest `lhs − rhs` (inequalities) or `|lhs − rhs|` (identities).
    pub worst_violation: f64,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: Option<f64>,
    pub details: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub config: SuiteConfig,
    pub overall_pass: bool,
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.checks.iter().filter(|c| c.status == Status::Fail).collect()
    }
}

/// Running maximum over samples.
#[derive(Default)]
struct Worst {
    value: Option<f64>,
    samples: usize,
}

impl Worst {
    fn push(&mut self, v: f64) {
        self.samples += 1;
        self.value = Some(self.value.map_or(v, |w| w.max(v)));
    }

    fn get(&self) -> f64 {
        self.value.unwrap_or(0.0)
    }
}

struct Ctx<'a> {
    layouts: &'a [SubsystemLayout],
    samples: &'a SampleCounts,
    tol: Tolerances,
    seed: u64,
}

impl Ctx<'_> {
    fn seed_for(&self, name: &str) -> u64 {
        rng::substream(self.seed, name)
    }
}

fn asserted(name: &str, seed: u64, worst: &Worst, tolerance: f64, details: BTreeMap<String, f64>) -> CheckRecord {
    let status = if worst.get() <= tolerance { Status::Pass } else { Status::Fail };
    CheckRecord {
        name: name.into(),
        status,
        worst_violation: worst.get(),
        samples: worst.samples,
        seed,
        tolerance: Some(tolerance),
        details,
    }
}

fn report_only(name: &str, seed: u64, worst: &Worst, details: BTreeMap<String, f64>) -> CheckRecord {
    CheckRecord {
        name: name.into(),
        status: Status::ReportOnly,
        worst_violation: worst.get(),
        samples: worst.samples,
        seed,
        tolerance: None,
        details,
    }
}

/// Seeded random state whose rank also comes from the seed, so that pure
/// and mixed states both appear.
fn sample_state(layout: &SubsystemLayout, seed: u64) -> Result<DensityMatrix> {
    let rank = 1 + (rng::substream(seed, "rank") % layout.total_dim() as u64) as usize;
    generators::ginibre_mixed(layout, rank, seed)
}

fn sample_cut(n: usize, seed: u64) -> Bipartition {
    let mask = 1 + 2 * (rng::substream(seed, "cut") % ((1u64 << (n - 1)) - 1));
    Bipartition::from_mask(mask, n).expect("odd proper mask")
}

/// Runs `f` for `count` samples on every layout, in parallel, and returns
/// the per-sample values in a fixed order.
fn sweep<T: Send>(
    ctx: &Ctx<'_>,
    name: &str,
    count: usize,
    f: impl Fn(&SubsystemLayout, u64) -> Result<Option<T>> + Sync + Send,
) -> Result<Vec<T>> {
    let seed = ctx.seed_for(name);
    let jobs: Vec<(usize, usize)> = (0..ctx.layouts.len()).flat_map(|l| (0..count).map(move |i| (l, i))).collect();
    let out = par::map(&jobs, |&(l, i)| {
        let s = rng::indexed(rng::indexed(seed, "layout", l as u64), "sample", i as u64);
        f(&ctx.layouts[l], s)
    });
    Ok(out.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect())
}

fn collect(values: impl IntoIterator<Item = f64>) -> Worst {
    let mut w = Worst::default();
    values.into_iter().for_each(|v| w.push(v));
    w
}

fn metric_symmetry(ctx: &Ctx<'_>) -> Result<CheckRecord> {
    let name = "metric_symmetry";
    let vals = sweep(ctx, name, ctx.samples.metric_triples, |layout, s| {
        let a = sample_state(layout, rng::indexed(s, "state", 0))?;
        let b = sample_state(layout, rng::indexed(s, "state", 1))?;
        let sym = (entropy::delta(&a, &b)? - entropy::delta(&b, &a)?).abs();
        let self_distance = entropy::qjsd(&a, &a)?.nats();
        Ok(Some(sym.max(self_distance)))
    })?;
    Ok(asserted(name, ctx.seed_for(name), &collect(vals), ctx.tol.exact, BTreeMap::new()))
}

fn triangle_inequality(ctx: &Ctx<'_>) -> Result<CheckRecord> {
    let name = "triangle_inequality";
    let vals = sweep(ctx, name, ctx.samples.metric_triples, |layout, s| {
        let st: Vec<DensityMatrix> =
            (0..3).map(|k| sample_state(layout, rng::indexed(s, "state", k))).collect::<Result<_>>()?;
        let (ab, bc, ac) = (entropy::delta(&st[0], &st[1])?, entropy::delta(&st[1], &st[2])?, entropy::delta(&st[0], &st[2])?);
        Ok(Some(ac - ab - bc))
    })?;
    Ok(asserted(name, ctx.seed_for(name), &collect(vals), ctx.tol.inequality, BTreeMap::new()))
}

fn qjsd_bounds(ctx: &Ctx<'_>) -> Result<CheckRecord> {
    let name = "qjsd_bounds";
    let vals = sweep(ctx, name, ctx.samples.metric_triples, |layout, s| {
        let a = sample_state(layout, rng::indexed(s, "state", 0))?;
        let b = sample_state(layout, rng::indexed(s, "state", 1))?;
        let d = entropy::qjsd(&a, &b)?.nats();
        Ok(Some((-d).max(d - std::f64::consts::LN_2)))
    })?;
    Ok(asserted(name, ctx.seed_for(name), &collect(vals), ctx.tol.inequality, BTreeMap::new()))
}

fn data_processing(ctx: &Ctx<'_>) -> Result<CheckRecord> {
    let name = "data_processing";
    let vals = sweep(ctx, name, ctx.samples.data_processing, |layout, s| {
        let a = sample_state(layout, rng::indexed(s, "state", 0))?;
        let b = sample_state(layout, rng::indexed(s, "state", 1))?;
        let d = layout.total_dim();
        let k = 1 + (rng::substream(s, "kraus-count") % 3) as usize;
        let ch = KrausChannel::random(d, d, k, rng::substream(s, "channel"))?;
        let before = entropy::qjsd(&a, &b)?.nats();
        let after = entropy::qjsd(&ch.apply(&a, None)?, &ch.apply(&b, None)?)?.nats();
        Ok(Some(after - before))
    })?;
    Ok(asserted(name, ctx.seed_for(name), &collect(vals), ctx.tol.inequality, BTreeMap::new()))
}

fn phi_of(rho: &DensityMatrix) -> Result<f64> {
    Ok(phi::phi(rho, &PhiConfig::default())?.phi.nats())
}

fn local_phi_monotonicity(ctx: &Ctx<'_>) -> Result<CheckRecord> {
    let name = "local_phi_monotonicity";
    let vals = sweep(ctx, name, ctx.samples.local_monotonicity, |layout, s| {
        let rho = sample_state(layout, rng::indexed(s, "state", 0))?;
        let k = 1 + (rng::substream(s, "kraus-count") % 3) as usize;
        let ch = LocalChannel::random(layout, k, rng::substream(s, "channel"))?;
        Ok(Some(phi_of(&ch.apply(&rho)?)? - phi_of(&rho)?))
    })?;
    Ok(asserted(name, ctx.seed_for(name), &collect(vals), ctx.tol.inequality, BTreeMap::new()))
}

fn general_channel_monotonicity(ctx: &Ctx<'_>) -> Result<CheckRecord> {
    let name = "general_channel_monotonicity";
    let vals = sweep(ctx, name, ctx.samples.general_channel, |layout, s| {
        let rho = sample_state(layout, rng::indexed(s, "state", 0))?;
        let d = layout.total_dim();
        let k = 1 + (rng::substream(s, "kraus-count") % 3) as usize;
        let ch = KrausChannel::random(d, d, k, rng::substream(s, "channel"))?;
        Ok(Some(phi_of(&ch.apply(&rho, None)?)? - phi_of(&rho)?))
    })?;
    let worst = collect(vals.iter().copied());
    let increases = vals.iter().filter(|&&v| v > ctx.tol.inequality).count();
    let details = BTreeMap::from([("fraction_increasing".to_string(), ratio(increases, vals.len()))]);
    Ok(report_only(name, ctx.seed_for(name), &worst, details))
}

fn ratio(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        k as f64 / n as f64
    }
}

fn merge_inequality(ctx: &Ctx<'_>) -> Result<CheckRecord> {
    let name = "merge_inequality";
    let vals = sweep(ctx, name, ctx.samples.merge, |layout, s| {
        let parts: Vec<_> = phi::enumerate_partitions(layout.n()).into_iter().filter(|p| p.k() >= 3).collect();
        if parts.is_empty() {
            return Ok(None);
        }
        let rho = sample_state(layout, rng::indexed(s, "state", 0))?;
        let p = &parts[(rng::substream(s, "partition") % parts.len() as u64) as usize];
        let mut worst = f64::NEG_INFINITY;
        for i in 0..p.k() {
            for j in i + 1..p.k() {
                let (before, after) = phi::merge_inequality_check(&rho, p, i, j)?;
                worst = worst.max(after.nats() - before.nats());
            }
        }
        Ok(Some(worst))
    })?;
    Ok(asserted(name, ctx.seed_for(name), &collect(vals), ctx.tol.inequality, BTreeMap::new()))
}

fn bipartition_sufficiency(ctx: &Ctx<'_>) -> Result<CheckRecord> {
    let name = "bipartition_sufficiency";
    let vals = sweep(ctx, name, ctx.samples.bipartition_sufficiency, |layout, s| {
        if layout.n() > 4 {
            return Ok(None);
        }
        let rho = sample_state(layout, rng::indexed(s, "state", 0))?;
        let (_, kmin) = phi::min_over_all_partitions(&rho)?;
        Ok(Some((kmin.nats() - phi_of(&rho)?).abs()))
    })?;
    Ok(asserted(name, ctx.seed_for(name), &collect(vals), ctx.tol.inequality, BTreeMap::new()))
}

fn negative_type_reports(ctx: &Ctx<'_>) -> Result<Vec<entropy::GramReport>> {
    let vectors = ctx.samples.negative_type_vectors;
    sweep(ctx, "negative_type", ctx.samples.negative_type_ensembles, |layout, s| {
        let states: Vec<DensityMatrix> =
            (0..8).map(|k| sample_state(layout, rng::indexed(s, "state", k))).collect::<Result<_>>()?;
        entropy::negative_type_check(&states, vectors, rng::substream(s, "vectors")).map(Some)
    })
}

fn negative_type(ctx: &Ctx<'_>) -> Result<CheckRecord> {
    let name = "negative_type";
    let reports = negative_type_reports(ctx)?;
    let worst = collect(reports.iter().map(|r| r.negative_type_max_violation));
    let details = BTreeMap::from([("vectors_per_ensemble".to_string(), ctx.samples.negative_type_vectors as f64)]);
    Ok(asserted(name, ctx.seed_for(name), &worst, ctx.tol.inequality, details))
}

fn shifted_kernel_psd(ctx: &Ctx<'_>) -> Result<CheckRecord> {
    let name = "shifted_kernel_psd";
    let reports = negative_type_reports(ctx)?;
    // violation is the negative part of the smallest Gram eigenvalue
    let worst = collect(reports.iter().map(|r| -r.min_eigenvalue));
    let min_eig = reports.iter().map(|r| r.min_eigenvalue).fold(f64::INFINITY, f64::min);
    let negative = reports.iter().filter(|r| r.min_eigenvalue < -ctx.tol.inequality).count();
    let details = BTreeMap::from([
        ("min_eigenvalue".to_string(), if min_eig.is_finite() { min_eig } else { 0.0 }),
        ("fraction_not_psd".to_string(), ratio(negative, reports.len())),
    ]);
    Ok(report_only(name, ctx.seed_for("negative_type"), &worst, details))
}

fn petz_product_exactness(ctx: &Ctx<'_>) -> Result<CheckRecord> {
    let name = "petz_product_exactness";
    let vals = sweep(ctx, name, ctx.samples.petz_products, |layout, s| {
        let cut = sample_cut(layout.n(), s);
        let rho = generators::random_product(layout, &cut, rng::substream(s, "state"))?;
        let mut worst = 0.0_f64;
        for z in [cut.side_a(), cut.side_b()] {
            worst = worst.max(blanket::blanket_score(&rho, &z)?.nats());
        }
        Ok(Some(worst))
    })?;
    Ok(asserted(name, ctx.seed_for(name), &collect(vals), ctx.tol.inequality, BTreeMap::new()))
}

fn blanket_agreement(ctx: &Ctx<'_>) -> Result<CheckRecord> {
    let name = "blanket_agreement";
    let vals = sweep(ctx, name, ctx.samples.blanket, |layout, s| {
        if layout.n() < 3 {
            return Ok(None);
        }
        let rho = sample_state(layout, rng::indexed(s, "state", 0))?;
        let cut = phi::phi(&rho, &PhiConfig::default())?.optimal_cut;
        let res = blanket::blanket_scan(&rho, cut.smaller_side().len(), &PhiConfig::default())?;
        Ok(Some(res.matches_optimal_cut_side))
    })?;
    let matches = vals.iter().filter(|&&m| m).count();
    let worst = collect(vals.iter().map(|&m| if m { 0.0 } else { 1.0 }));
    let details = BTreeMap::from([("agreement_rate".to_string(), ratio(matches, vals.len()))]);
    Ok(report_only(name, ctx.seed_for(name), &worst, details))
}

fn witness_algebra(ctx: &Ctx<'_>) -> Result<CheckRecord> {
    let name = "witness_algebra";
    let vals = sweep(ctx, name, ctx.samples.witness, |layout, s| {
        let rho = sample_state(layout, rng::indexed(s, "state", 0))?;
        let r = phi::phi(&rho, &PhiConfig::default())?;
        let w = witness::build_witness(&rho, &r);
        let rec = witness::claim_record(&w, &rho, &r.sigma_star)?;
        let defects = [
            w.trace().abs(),
            linalg::hermitian_defect(w.op()),
            (rec.expectation_on_state - rec.trace_algebra).abs(),
        ];
        Ok(Some(defects.into_iter().fold(0.0, f64::max)))
    })?;
    Ok(asserted(name, ctx.seed_for(name), &collect(vals), ctx.tol.exact, BTreeMap::new()))
}

fn witness_claims(ctx: &Ctx<'_>) -> Result<CheckRecord> {
    let name = "witness_claims";
    let vals = sweep(ctx, name, ctx.samples.witness, |layout, s| {
        let rho = sample_state(layout, rng::indexed(s, "state", 0))?;
        let r = phi::phi(&rho, &PhiConfig::default())?;
        let w = witness::build_witness(&rho, &r);
        let rec = witness::claim_record(&w, &rho, &r.sigma_star)?;
        let scan = witness::product_state_scan(&w, 32, rng::substream(s, "scan"))?;
        Ok(Some((rec.discrepancy.abs(), scan.min_expectation, scan.fraction_negative)))
    })?;
    let worst = collect(vals.iter().map(|v| v.0));
    let min_product = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let with_negative = vals.iter().filter(|v| v.2 > 0.0).count();
    let details = BTreeMap::from([
        ("min_product_expectation".to_string(), if min_product.is_finite() { min_product } else { 0.0 }),
        ("fraction_with_negative_product_expectation".to_string(), ratio(with_negative, vals.len())),
    ]);
    Ok(report_only(name, ctx.seed_for(name), &worst, details))
}

fn convexity(ctx: &Ctx<'_>) -> Result<CheckRecord> {
    let name = "convexity";
    let vals = sweep(ctx, name, ctx.samples.convexity, |layout, s| {
        let a = sample_state(layout, rng::indexed(s, "state", 0))?;
        let b = sample_state(layout, rng::indexed(s, "state", 1))?;
        Ok(Some(phi::convexity_check(&a, &b, &[0.25, 0.5, 0.75], &PhiConfig::default())?.max_violation))
    })?;
    let violated = vals.iter().filter(|&&v| v > ctx.tol.inequality).count();
    let details = BTreeMap::from([("fraction_violating".to_string(), ratio(violated, vals.len()))]);
    Ok(report_only(name, ctx.seed_for(name), &collect(vals), details))
}

fn lipschitz(ctx: &Ctx<'_>) -> Result<CheckRecord> {
    let name = "lipschitz";
    let optimized = PhiConfig {
        mode: Mode::Optimized,
        refine: RefineOptions { probe_uniqueness: false, ..RefineOptions::default() },
        ..PhiConfig::default()
    };
    let vals = sweep(ctx, name, ctx.samples.lipschitz, |layout, s| {
        let a = sample_state(layout, rng::indexed(s, "state", 0))?;
        let b = sample_state(layout, rng::indexed(s, "state", 1))?;
        let opt = phi::lipschitz_check(&a, &b, &optimized)?;
        let marg = phi::lipschitz_check(&a, &b, &PhiConfig::default())?;
        Ok(Some((opt.lhs - opt.rhs, marg.lhs - marg.rhs)))
    })?;
    let marginal_violated = vals.iter().filter(|v| v.1 > ctx.tol.inequality).count();
    let marginal_worst = vals.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let details = BTreeMap::from([
        ("marginal_fraction_violating".to_string(), ratio(marginal_violated, vals.len())),
        ("marginal_worst_violation".to_string(), if marginal_worst.is_finite() { marginal_worst } else { 0.0 }),
    ]);
    Ok(asserted(name, ctx.seed_for(name), &collect(vals.iter().map(|v| v.0)), ctx.tol.inequality, details))
}

type Check = fn(&Ctx<'_>) -> Result<CheckRecord>;

const CHECKS: [Check; 16] = [
    metric_symmetry,
    triangle_inequality,
    qjsd_bounds,
    data_processing,
    local_phi_monotonicity,
    general_channel_monotonicity,
    merge_inequality,
    bipartition_sufficiency,
    negative_type,
    shifted_kernel_psd,
    petz_product_exactness,
    blanket_agreement,
    witness_algebra,
    witness_claims,
    convexity,
    lipschitz,
];

pub fn run_suite(config: &SuiteConfig) -> Result<VerificationReport> {
    let layouts = config.validated_layouts()?;
    let ctx = Ctx { layouts: &layouts, samples: &config.samples, tol: config.tolerances, seed: config.seed };
    let mut checks = par::map(&CHECKS, |check| check(&ctx)).into_iter().collect::<Result<Vec<_>>>()?;
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let overall_pass = checks.iter().all(|c| c.status != Status::Fail);
    Ok(VerificationReport { config: config.clone(), overall_pass, checks })
}
