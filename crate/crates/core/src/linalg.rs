//! Dense complex matrix helpers: Hermitian spectral calculus, Kronecker
//! products, and tensor-factor bookkeeping (partial traces, factor
//! permutations, single-site operator application).

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// `Tr[a b]` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of the Hermitian part of `m`. Eigenvalues ascend.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = hermitian_part(m).symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// `V diag(f(λ)) V†` from a precomputed decomposition.
pub fn from_spectrum(values: &[f64], vectors: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let n = values.len();
    let mut scaled = vectors.clone();
    for (j, &lam) in values.iter().enumerate() {
        let s = f(lam);
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    scaled * vectors.adjoint()
}

/// Applies a real function to a Hermitian matrix through its spectrum.
pub fn spectral_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, vectors) = eigh(m);
    from_spectrum(&values, &vectors, f)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Row-major strides for a tensor product with local dimensions `dims`.
pub fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Flat offsets of every multi-index over the factors in `sites`, enumerated
/// in row-major order of those factors.
fn offsets(dims: &[usize], sites: &[usize]) -> Vec<usize> {
    let full = strides(dims);
    let mut out = vec![0usize];
    for &s in sites {
        let mut next = Vec::with_capacity(out.len() * dims[s]);
        for &base in &out {
            for digit in 0..dims[s] {
                next.push(base + digit * full[s]);
            }
        }
        out = next;
    }
    out
}

/// Partial trace keeping the factors listed in `keep` (ascending, distinct).
pub fn partial_trace(m: &CMatrix, dims: &[usize], keep: &[usize]) -> CMatrix {
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let kept_off = offsets(dims, keep);
    let traced_off = offsets(dims, &traced);
    let dk = kept_off.len();
    let mut out = CMatrix::zeros(dk, dk);
    for (i, &ri) in kept_off.iter().enumerate() {
        for (j, &cj) in kept_off.iter().enumerate() {
            let mut acc = ZERO;
            for &t in &traced_off {
                acc += m[(ri + t, cj + t)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Reorders tensor factors: factor `j` of the result is factor `perm[j]` of
/// the input. `dims` are the input's local dimensions.
pub fn permute_factors(m: &CMatrix, dims: &[usize], perm: &[usize]) -> CMatrix {
    if perm.iter().enumerate().all(|(j, &p)| j == p) {
        return m.clone();
    }
    // Enumerating the input offsets in the new factor order yields, for each
    // new flat index, the matching old flat index.
    let map = offsets(dims, perm);
    let d = map.len();
    CMatrix::from_fn(d, d, |i, j| m[(map[i], map[j])])
}

/// Left-multiplies by `I ⊗ op ⊗ I` acting on factor `site`. `op` may change
/// the local dimension (rows ≠ cols); the returned dims reflect that.
pub fn apply_left_on_site(m: &CMatrix, dims: &[usize], site: usize, op: &CMatrix) -> CMatrix {
    let left: usize = dims[..site].iter().product();
    let right: usize = dims[site + 1..].iter().product();
    let din = dims[site];
    let dout = op.nrows();
    debug_assert_eq!(op.ncols(), din);
    let cols = m.ncols();
    let mut out = CMatrix::zeros(left * dout * right, cols);
    for l in 0..left {
        for r in 0..right {
            for b in 0..dout {
                let row_out = (l * dout + b) * right + r;
                for a in 0..din {
                    let k = op[(b, a)];
                    if k == ZERO {
                        continue;
                    }
                    let row_in = (l * din + a) * right + r;
                    for c in 0..cols {
                        out[(row_out, c)] += k * m[(row_in, c)];
                    }
                }
            }
        }
    }
    out
}

/// `(I ⊗ op ⊗ I) m (I ⊗ op ⊗ I)†` on factor `site`.
pub fn conjugate_on_site(m: &CMatrix, dims: &[usize], site: usize, op: &CMatrix) -> CMatrix {
    let half = apply_left_on_site(m, dims, site, op);
    // (X op†) = (op X†)†
    let half_adj = half.adjoint();
    apply_left_on_site(&half_adj, dims, site, op).adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn random_herm(d: usize, seed: u64) -> CMatrix {
        let g = rng::ginibre(d, d, &mut rng::stream(seed));
        &g + g.adjoint()
    }

    #[test]
    fn eigh_reconstructs() {
        for d in [2, 4, 8, 16] {
            let h = random_herm(d, d as u64);
            let (vals, vecs) = eigh(&h);
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            assert!(max_abs_diff(&from_spectrum(&vals, &vecs, |x| x), &h) < 1e-12);
            let vals2 = eigvalsh(&h);
            for (a, b) in vals.iter().zip(&vals2) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_trace_of_kron() {
        let a = random_herm(2, 1);
        let b = random_herm(3, 2);
        let ab = kron(&a, &b);
        let ta = trace(&a);
        let tb = trace(&b);
        assert!(max_abs_diff(&partial_trace(&ab, &[2, 3], &[0]), &a.scale(tb.re)) < 1e-12);
        assert!(max_abs_diff(&partial_trace(&ab, &[2, 3], &[1]), &b.scale(ta.re)) < 1e-12);
        assert!(max_abs_diff(&partial_trace(&ab, &[2, 3], &[0, 1]), &ab) < 1e-15);
    }

    #[test]
    fn permute_swaps_kron_factors() {
        let a = random_herm(2, 3);
        let b = random_herm(3, 4);
        let c = random_herm(2, 5);
        let abc = kron(&kron(&a, &b), &c);
        let cab = kron(&kron(&c, &a), &b);
        assert!(max_abs_diff(&permute_factors(&abc, &[2, 3, 2], &[2, 0, 1]), &cab) < 1e-12);
    }

    #[test]
    fn site_conjugation_matches_kron() {
        let m = random_herm(12, 6);
        let op = rng::ginibre(2, 3, &mut rng::stream(8));
        let dims = [2, 3, 2];
        let full = kron(&kron(&CMatrix::identity(2, 2), &op), &CMatrix::identity(2, 2));
        let expected = &full * &m * full.adjoint();
        let got = conjugate_on_site(&m, &dims, 1, &op);
        assert!(max_abs_diff(&got, &expected) < 1e-12);
    }
}
