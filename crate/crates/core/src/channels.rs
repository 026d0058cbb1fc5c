//! CPTP maps in Kraus form.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE, ZERO};
use crate::rng;
use crate::state::{sorted_unique, DensityMatrix, SubsystemLayout};

/// Completeness tolerance for `Σ K†K = I`.
pub const COMPLETENESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    in_dim: usize,
    out_dim: usize,
    kraus: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::BadParameter("channel needs at least one Kraus operator".into()))?;
        let (out_dim, in_dim) = first.shape();
        if let Some(k) = kraus.iter().find(|k| k.shape() != (out_dim, in_dim)) {
            return Err(Error::DimensionMismatch { expected: out_dim * in_dim, found: k.nrows() * k.ncols() });
        }
        let ch = Self { in_dim, out_dim, kraus };
        let defect = ch.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return Err(Error::BadParameter(format!("Kraus operators are not complete (defect {defect:e})")));
        }
        Ok(ch)
    }

    pub fn identity(dim: usize) -> Self {
        Self { in_dim: dim, out_dim: dim, kraus: vec![CMatrix::identity(dim, dim)] }
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    fn is_identity(&self) -> bool {
        self.kraus.len() == 1
            && self.in_dim == self.out_dim
            && self.kraus[0] == CMatrix::identity(self.in_dim, self.in_dim)
    }

    /// `max |Σ K†K − I|`.
    pub fn completeness_defect(&self) -> f64 {
        let sum = self
            .kraus
            .iter()
            .fold(CMatrix::zeros(self.in_dim, self.in_dim), |acc, k| acc + k.adjoint() * k);
        linalg::max_abs_diff(&sum, &CMatrix::identity(self.in_dim, self.in_dim))
    }

    /// `Σ K ρ K†` without revalidation.
    pub fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        self.kraus
            .iter()
            .fold(CMatrix::zeros(self.out_dim, self.out_dim), |acc, k| acc + k * m * k.adjoint())
    }

    /// Applies the channel. The output keeps `rho`'s layout when the
    /// dimension is unchanged and `out_layout` is `None`; otherwise the caller
    /// must say how the output factorizes (a single factor is assumed if not).
    pub fn apply(&self, rho: &DensityMatrix, out_layout: Option<SubsystemLayout>) -> Result<DensityMatrix> {
        if rho.dim() != self.in_dim {
            return Err(Error::DimensionMismatch { expected: self.in_dim, found: rho.dim() });
        }
        let layout = match out_layout {
            Some(l) => l,
            None if self.out_dim == self.in_dim => rho.layout().clone(),
            None => SubsystemLayout::new(vec![self.out_dim])?,
        };
        if layout.total_dim() != self.out_dim {
            return Err(Error::DimensionMismatch { expected: self.out_dim, found: layout.total_dim() });
        }
        DensityMatrix::new(self.apply_matrix(rho.matrix()), layout)
    }

    /// Kraus family of `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| other.kraus.iter().map(move |b| linalg::kron(a, b)))
            .collect();
        Self { in_dim: self.in_dim * other.in_dim, out_dim: self.out_dim * other.out_dim, kraus }
    }

    /// `ρ ↦ (1−p)ρ + p·Tr(ρ)·I/d`, written with the Weyl basis `X^a Z^b`.
    pub fn depolarizing(dim: usize, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::BadParameter(format!("depolarizing probability {p} outside [0, 1]")));
        }
        let d = dim as f64;
        let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / d);
        let mut kraus = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                let weight = if a == 0 && b == 0 { 1.0 - p + p / (d * d) } else { p / (d * d) };
                if weight == 0.0 {
                    continue;
                }
                // (X^a Z^b)|j⟩ = ω^{bj} |j + a⟩
                let mut k = CMatrix::zeros(dim, dim);
                for j in 0..dim {
                    k[((j + a) % dim, j)] = omega.powu((b * j) as u32) * weight.sqrt();
                }
                kraus.push(k);
            }
        }
        Self::new(kraus)
    }

    /// Dephasing in the qubit basis `{R|0⟩, R|1⟩}` with
    /// `R|0⟩ = cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`.
    pub fn dephasing(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::BadParameter("dephasing angles must be finite".into()));
        }
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let e = Complex64::from_polar(1.0, phi);
        let v0 = [linalg::real(c), e * s];
        let v1 = [-e.conj() * s, linalg::real(c)];
        let proj = |v: [Complex64; 2]| CMatrix::from_fn(2, 2, |i, j| v[i] * v[j].conj());
        Self::new(vec![proj(v0), proj(v1)])
    }

    /// Discards the subsystems in `drop`.
    pub fn partial_trace(layout: &SubsystemLayout, drop: &[usize]) -> Result<(Self, SubsystemLayout)> {
        let n = layout.n();
        let drop = sorted_unique(drop);
        if let Some(&s) = drop.iter().find(|&&s| s >= n) {
            return Err(Error::IndexOutOfRange { index: s, n });
        }
        let keep: Vec<usize> = (0..n).filter(|k| !drop.contains(k)).collect();
        if keep.is_empty() {
            return Err(Error::BadParameter("cannot trace out every subsystem".into()));
        }
        let dims = layout.dims();
        let strides = linalg::strides(dims);
        let out_layout = layout.select(&keep);
        let out_strides = linalg::strides(out_layout.dims());
        let din = layout.total_dim();
        let dout = out_layout.total_dim();
        let dropped_dim: usize = drop.iter().map(|&s| dims[s]).product();
        let mut kraus = vec![CMatrix::zeros(dout, din); dropped_dim];
        for col in 0..din {
            let digit = |s: usize| (col / strides[s]) % dims[s];
            let row: usize = keep.iter().enumerate().map(|(k, &s)| digit(s) * out_strides[k]).sum();
            let which = drop.iter().fold(0, |acc, &s| acc * dims[s] + digit(s));
            kraus[which][(row, col)] = ONE;
        }
        Ok((Self::new(kraus)?, out_layout))
    }

    /// Kraus operators from the first `in_dim` columns of a Haar unitary on
    /// `out_dim · kraus_count` (Stinespring slicing).
    pub fn random(in_dim: usize, out_dim: usize, kraus_count: usize, seed: u64) -> Result<Self> {
        if kraus_count == 0 || in_dim == 0 || out_dim == 0 {
            return Err(Error::BadParameter("dimensions and Kraus count must be positive".into()));
        }
        if in_dim > out_dim * kraus_count {
            return Err(Error::BadParameter(format!(
                "isometry from {in_dim} into {out_dim}x{kraus_count} does not exist"
            )));
        }
        let mut rng = rng::stream(rng::substream(seed, "random-channel"));
        let u = rng::haar_unitary(out_dim * kraus_count, &mut rng);
        let kraus = (0..kraus_count)
            .map(|k| u.view((k * out_dim, 0), (out_dim, in_dim)).into_owned())
            .collect();
        Self::new(kraus)
    }
}

/// One channel per subsystem, applied as their tensor product.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalChannel {
    per_site: Vec<KrausChannel>,
}

impl LocalChannel {
    pub fn new(per_site: Vec<KrausChannel>) -> Result<Self> {
        if per_site.is_empty() {
            return Err(Error::BadParameter("local channel needs at least one site".into()));
        }
        Ok(Self { per_site })
    }

    pub fn identity(layout: &SubsystemLayout) -> Self {
        Self { per_site: layout.dims().iter().map(|&d| KrausChannel::identity(d)).collect() }
    }

    /// Independent dephasing per qubit with `(θ, φ)` per site.
    pub fn dephasing(angles: &[(f64, f64)]) -> Result<Self> {
        Self::new(angles.iter().map(|&(t, p)| KrausChannel::dephasing(t, p)).collect::<Result<_>>()?)
    }

    pub fn depolarizing(layout: &SubsystemLayout, ps: &[f64]) -> Result<Self> {
        if ps.len() != layout.n() {
            return Err(Error::DimensionMismatch { expected: layout.n(), found: ps.len() });
        }
        Self::new(
            layout
                .dims()
                .iter()
                .zip(ps)
                .map(|(&d, &p)| KrausChannel::depolarizing(d, p))
                .collect::<Result<_>>()?,
        )
    }

    /// Seeded random channel per site with matching in/out dimension.
    pub fn random(layout: &SubsystemLayout, kraus_count: usize, seed: u64) -> Result<Self> {
        Self::new(
            layout
                .dims()
                .iter()
                .enumerate()
                .map(|(k, &d)| KrausChannel::random(d, d, kraus_count, rng::indexed(seed, "local-channel", k as u64)))
                .collect::<Result<_>>()?,
        )
    }

    pub fn sites(&self) -> &[KrausChannel] {
        &self.per_site
    }

    /// The monolithic Kraus family of the tensor product.
    pub fn to_kraus(&self) -> KrausChannel {
        let mut iter = self.per_site.iter();
        let first = iter.next().expect("non-empty").clone();
        iter.fold(first, |acc, ch| acc.tensor(ch))
    }

    /// Applies each site's channel in turn, acting only on that tensor factor.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if self.per_site.len() != rho.n() {
            return Err(Error::DimensionMismatch { expected: rho.n(), found: self.per_site.len() });
        }
        let mut dims = rho.layout().dims().to_vec();
        let mut mat = rho.matrix().clone();
        for (site, ch) in self.per_site.iter().enumerate() {
            if ch.in_dim != dims[site] {
                return Err(Error::DimensionMismatch { expected: dims[site], found: ch.in_dim });
            }
            if ch.is_identity() {
                continue;
            }
            let out_total = mat.nrows() / dims[site] * ch.out_dim;
            let mut acc = CMatrix::from_element(out_total, out_total, ZERO);
            for k in &ch.kraus {
                acc += linalg::conjugate_on_site(&mat, &dims, site, k);
            }
            mat = acc;
            dims[site] = ch.out_dim;
        }
        DensityMatrix::new(mat, SubsystemLayout::new(dims)?)
    }
}
