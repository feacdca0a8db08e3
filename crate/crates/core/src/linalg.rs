//! Dense complex linear algebra over tensor-product spaces.
//!
//! Subsystems are ordered with subsystem 0 as the most significant digit, so
//! `|abc>` sits at index `a*d1*d2 + b*d2 + c`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default cap on the total Hilbert-space dimension.
pub const DEFAULT_DIM_CAP: usize = 1 << 14;

/// Environment variable that overrides [`DEFAULT_DIM_CAP`].
pub const DIM_CAP_ENV: &str = "GAPBOUND_DIM_CAP";

/// Upper bound on the dense Hilbert-space dimension accepted anywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DimCap(pub usize);

impl Default for DimCap {
    fn default() -> Self {
        DimCap(DEFAULT_DIM_CAP)
    }
}

impl DimCap {
    /// Reads `GAPBOUND_DIM_CAP`, falling back to the default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(DIM_CAP_ENV) {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .map(DimCap)
                .map_err(|e| Error::Parse(format!("{DIM_CAP_ENV}={v:?}: {e}"))),
            Err(_) => Ok(DimCap::default()),
        }
    }

    /// Product of `dims`, rejecting overflow and values above the cap.
    pub fn total(&self, dims: &[usize]) -> Result<usize> {
        let mut total: usize = 1;
        for &d in dims {
            total = match total.checked_mul(d) {
                Some(t) => t,
                None => {
                    return Err(Error::DimensionCap {
                        dim: format!("overflow ({dims:?})"),
                        cap: self.0,
                    })
                }
            };
        }
        if total > self.0 {
            return Err(Error::DimensionCap {
                dim: total.to_string(),
                cap: self.0,
            });
        }
        Ok(total)
    }
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Real eigenvalues (ascending) and eigenvectors (columns) of a Hermitian matrix.
pub fn eigh(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "eigh expects a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Eigensolver {
            dim: n,
            detail: "matrix has non-finite entries".into(),
        });
    }
    let herm = (m + m.adjoint()).scale(0.5);
    let scale = herm.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let eig = SymmetricEigen::try_new(herm, f64::EPSILON, 100_000).ok_or_else(|| {
        Error::Eigensolver {
            dim: n,
            detail: format!("no convergence (max |entry| = {scale:.3e})"),
        }
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

pub fn eigvalsh(m: &CMat) -> Result<Vec<f64>> {
    Ok(eigh(m)?.0)
}

/// Largest absolute entry of `m - m^dagger`.
pub fn hermitian_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Sum of singular values.
pub fn trace_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// Largest singular value.
pub fn operator_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Gram-matrix deviation from the identity for the columns of `basis`.
pub fn gram_deviation(basis: &CMat) -> f64 {
    let gram = basis.adjoint() * basis;
    let id = CMat::identity(gram.nrows(), gram.ncols());
    (gram - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Shannon entropy (natural log) of a probability vector; zeros contribute nothing.
pub fn entropy_of(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.ln())
        .sum()
}

/// Index bookkeeping for splitting a tensor-product space into groups of
/// subsystems. Each group keeps the order in which its members were listed.
#[derive(Debug, Clone)]
pub struct Factorization {
    group_dims: Vec<usize>,
    /// `offsets[g][local]` is the contribution of group `g`'s local index to
    /// the full index.
    offsets: Vec<Vec<usize>>,
}

impl Factorization {
    /// `groups` must be pairwise disjoint subsets of `0..dims.len()`.
    /// Subsystems not mentioned in any group are not allowed unless
    /// `complement` is set, in which case they form a trailing group.
    pub fn new(dims: &[usize], groups: &[&[usize]], complement: bool) -> Result<Self> {
        let n = dims.len();
        let mut seen = vec![false; n];
        let mut all: Vec<Vec<usize>> = Vec::with_capacity(groups.len() + 1);
        for g in groups {
            for &s in g.iter() {
                if s >= n {
                    return Err(Error::UnknownSubsystem { index: s, count: n });
                }
                if seen[s] {
                    return Err(Error::InvalidArgument(format!(
                        "subsystem {s} appears more than once in a split"
                    )));
                }
                seen[s] = true;
            }
            all.push(g.to_vec());
        }
        let rest: Vec<usize> = (0..n).filter(|&s| !seen[s]).collect();
        if complement {
            all.push(rest);
        } else if !rest.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "subsystems {rest:?} are not covered by the split"
            )));
        }

        let mut strides = vec![1usize; n];
        for s in (0..n.saturating_sub(1)).rev() {
            strides[s] = strides[s + 1] * dims[s + 1];
        }

        let mut group_dims = Vec::with_capacity(all.len());
        let mut offsets = Vec::with_capacity(all.len());
        for g in &all {
            let gd: usize = g.iter().map(|&s| dims[s]).product();
            let mut table = Vec::with_capacity(gd);
            let mut digits = vec![0usize; g.len()];
            for _ in 0..gd {
                table.push(
                    g.iter()
                        .zip(&digits)
                        .map(|(&s, &dgt)| dgt * strides[s])
                        .sum(),
                );
                // odometer, last listed member fastest
                for pos in (0..g.len()).rev() {
                    digits[pos] += 1;
                    if digits[pos] < dims[g[pos]] {
                        break;
                    }
                    digits[pos] = 0;
                }
            }
            group_dims.push(gd);
            offsets.push(table);
        }
        Ok(Factorization {
            group_dims,
            offsets,
        })
    }

    pub fn group_dim(&self, g: usize) -> usize {
        self.group_dims[g]
    }

    pub fn offsets(&self, g: usize) -> &[usize] {
        &self.offsets[g]
    }
}

/// Embeds an operator acting on `support` (in the listed order) into the
/// full space as `op (x) identity`.
pub fn embed_operator(dims: &[usize], support: &[usize], op: &CMat) -> Result<CMat> {
    let f = Factorization::new(dims, &[support], true)?;
    let ds = f.group_dim(0);
    if op.nrows() != ds || op.ncols() != ds {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, support {:?} has dimension {}",
            op.nrows(),
            op.ncols(),
            support,
            ds
        )));
    }
    let total: usize = dims.iter().product();
    let mut out = CMat::zeros(total, total);
    add_embedded(&f, op, &mut out, ONE);
    Ok(out)
}

/// `out += weight * (op (x) identity)` using a precomputed two-group split.
pub(crate) fn add_embedded(f: &Factorization, op: &CMat, out: &mut CMat, weight: Complex64) {
    let (sup, rest) = (f.offsets(0), f.offsets(1));
    for &r in rest {
        for (a, &oa) in sup.iter().enumerate() {
            for (b, &ob) in sup.iter().enumerate() {
                let v = op[(a, b)];
                if v != ZERO {
                    out[(oa + r, ob + r)] += weight * v;
                }
            }
        }
    }
}

/// Applies an operator on `support` to a full state vector.
pub fn apply_local(dims: &[usize], support: &[usize], op: &CMat, v: &CVec) -> Result<CVec> {
    let f = Factorization::new(dims, &[support], true)?;
    Ok(apply_local_with(&f, op, v))
}

pub(crate) fn apply_local_with(f: &Factorization, op: &CMat, v: &CVec) -> CVec {
    let (sup, rest) = (f.offsets(0), f.offsets(1));
    let mut out = CVec::zeros(v.len());
    for &r in rest {
        for (a, &oa) in sup.iter().enumerate() {
            let mut acc = ZERO;
            for (b, &ob) in sup.iter().enumerate() {
                acc += op[(a, b)] * v[ob + r];
            }
            out[oa + r] = acc;
        }
    }
    out
}

/// `tr_rest(|a><b|)` where the kept group is group 0 of `f` and everything
/// else is traced out. With `a == b` this is the reduced density matrix.
pub(crate) fn reduced_outer(f: &Factorization, a: &CVec, b: &CVec) -> CMat {
    let (keep, rest) = (f.offsets(0), f.offsets(1));
    let dk = keep.len();
    let dr = rest.len();
    let mut ma = CMat::zeros(dk, dr);
    let mut mb = CMat::zeros(dk, dr);
    for (k, &ok) in keep.iter().enumerate() {
        for (t, &ot) in rest.iter().enumerate() {
            ma[(k, t)] = a[ok + ot];
            mb[(k, t)] = b[ok + ot];
        }
    }
    &ma * mb.adjoint()
}

/// `tr_rest(m)` for an operator on the full space.
pub(crate) fn reduced_matrix(f: &Factorization, m: &CMat) -> CMat {
    let (keep, rest) = (f.offsets(0), f.offsets(1));
    let dk = keep.len();
    let mut out = CMat::zeros(dk, dk);
    for (i, &oi) in keep.iter().enumerate() {
        for (j, &oj) in keep.iter().enumerate() {
            let mut acc = ZERO;
            for &ot in rest {
                acc += m[(oi + ot, oj + ot)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// Matrix whose columns are orthonormal vectors obtained by Gram-Schmidt
/// on `vectors`, dropping any whose residual norm falls below `tol`.
pub fn orthonormalize(vectors: &[CVec], tol: f64) -> Vec<CVec> {
    let mut out: Vec<CVec> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        // two passes for numerical stability
        for _ in 0..2 {
            for u in &out {
                let proj = u.dotc(&w);
                w -= u * proj;
            }
        }
        let n = w.norm();
        if n > tol {
            out.push(w / c(n, 0.0));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> CMat {
        CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    #[test]
    fn factorization_matches_kron_ordering() {
        let dims = [2, 3, 2];
        let f = Factorization::new(&dims, &[&[1], &[0, 2]], false).unwrap();
        assert_eq!(f.group_dim(0), 3);
        assert_eq!(f.group_dim(1), 4);
        // subsystem 1 has stride 2, subsystems (0,2) have strides (6,1)
        assert_eq!(f.offsets(0), &[0, 2, 4]);
        assert_eq!(f.offsets(1), &[0, 1, 6, 7]);
    }

    #[test]
    fn embed_matches_kron() {
        let x = pauli_x();
        let id = CMat::identity(2, 2);
        let e = embed_operator(&[2, 2], &[0], &x).unwrap();
        assert!((e - kron(&x, &id)).norm() < 1e-15);
        let e = embed_operator(&[2, 2], &[1], &x).unwrap();
        assert!((e - kron(&id, &x)).norm() < 1e-15);
    }

    #[test]
    fn dim_cap_rejects_large() {
        assert!(DimCap(8).total(&[2, 2, 2]).is_ok());
        assert!(matches!(
            DimCap(8).total(&[2, 2, 2, 2]),
            Err(Error::DimensionCap { .. })
        ));
        assert!(DimCap(usize::MAX).total(&[usize::MAX, 2]).is_err());
    }

    #[test]
    fn eigh_sorted_and_orthonormal() {
        let m = CMat::from_row_slice(
            3,
            3,
            &[
                c(2.0, 0.0),
                c(0.0, 1.0),
                ZERO,
                c(0.0, -1.0),
                c(1.0, 0.0),
                ZERO,
                ZERO,
                ZERO,
                c(-1.0, 0.0),
            ],
        );
        let (vals, vecs) = eigh(&m).unwrap();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        assert!(gram_deviation(&vecs) < 1e-12);
        let recon = &vecs * CMat::from_diagonal(&CVec::from_iterator(3, vals.iter().map(|&v| c(v, 0.0)))) * vecs.adjoint();
        assert!((recon - m).norm() < 1e-12);
    }

    #[test]
    fn norms_of_simple_matrices() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(3.0, 0.0), c(-1.0, 0.0)]));
        assert!((trace_norm(&m) - 4.0).abs() < 1e-12);
        assert!((operator_norm(&m) - 3.0).abs() < 1e-12);
    }
}
