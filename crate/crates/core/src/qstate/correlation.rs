//! Measurement statistics between two uncoupled subsystem groups and the
//! states built from them.
//!
//! The subsystems are split into three disjoint groups: "first" and "last"
//! are measured, everything else forms the middle. Each group may be an
//! aggregate of several elementary subsystems.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, Factorization, ZERO};
use crate::qstate::{DensityMatrix, PureState};
use crate::topology::canonical_set;

/// Weights at or below this are treated as absent.
pub const ABSENT_THRESHOLD: f64 = 1e-12;

const ORTHONORMAL_TOL: f64 = 1e-10;
const PERFECT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripartiteSplit {
    pub first: Vec<usize>,
    pub middle: Vec<usize>,
    pub last: Vec<usize>,
}

impl TripartiteSplit {
    /// `middle` is everything not in `first` or `last`, and may be empty.
    pub fn new(first: &[usize], last: &[usize], num_subsystems: usize) -> Result<Self> {
        let first = canonical_set(first, num_subsystems)?;
        let last = canonical_set(last, num_subsystems)?;
        if first.iter().any(|s| last.contains(s)) {
            return Err(Error::InvalidArgument(format!(
                "groups {first:?} and {last:?} overlap"
            )));
        }
        let middle = (0..num_subsystems)
            .filter(|s| !first.contains(s) && !last.contains(s))
            .collect();
        Ok(TripartiteSplit {
            first,
            middle,
            last,
        })
    }

    /// First subsystem against last subsystem, the rest in the middle.
    pub fn ends(num_subsystems: usize) -> Result<Self> {
        if num_subsystems < 2 {
            return Err(Error::InvalidArgument(
                "need at least two subsystems to split off both ends".into(),
            ));
        }
        Self::new(&[0], &[num_subsystems - 1], num_subsystems)
    }

    fn factorization(&self, dims: &[usize]) -> Result<Factorization> {
        Factorization::new(dims, &[&self.first, &self.middle, &self.last], false)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentPolicy {
    /// Outcome `j` on the first group is matched with outcome `j` on the last.
    Identity,
    /// Injective matching from the smaller outcome set maximizing `C`.
    Maximize,
}

/// Joint outcome probabilities `p[j][k]` for local measurements on the
/// first and last groups, together with an outcome matching.
#[derive(Debug, Clone, Serialize)]
pub struct JointDistribution {
    pub p: Vec<Vec<f64>>,
    /// Matched outcome pairs `(j, k)`.
    pub assignment: Vec<(usize, usize)>,
    /// Probability that matched outcomes occur, `Σ p[j][k]` over the matching.
    pub correlation: f64,
}

impl JointDistribution {
    pub fn new(p: Vec<Vec<f64>>, assignment: Vec<(usize, usize)>) -> Result<Self> {
        let rows = p.len();
        let cols = p.first().map_or(0, |r| r.len());
        if p.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged probability table".into()));
        }
        if p.iter().flatten().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidArgument("negative probability".into()));
        }
        let total: f64 = p.iter().flatten().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "probabilities sum to {total}"
            )));
        }
        let mut used_j = vec![false; rows];
        let mut used_k = vec![false; cols];
        for &(j, k) in &assignment {
            if j >= rows || k >= cols || used_j[j] || used_k[k] {
                return Err(Error::InvalidArgument(format!(
                    "assignment pair ({j}, {k}) is out of range or repeated"
                )));
            }
            used_j[j] = true;
            used_k[k] = true;
        }
        let correlation = assignment
            .iter()
            .map(|&(j, k)| p[j][k])
            .sum::<f64>()
            .clamp(0.0, 1.0);
        Ok(JointDistribution {
            p,
            assignment,
            correlation,
        })
    }

    /// Matched probabilities in descending order.
    pub fn matched_descending(&self) -> Vec<f64> {
        let mut d: Vec<f64> = self.assignment.iter().map(|&(j, k)| self.p[j][k]).collect();
        d.sort_by(|a, b| b.total_cmp(a));
        d
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }
}

fn check_basis(basis: &CMat, dim: usize, which: &str) -> Result<()> {
    if basis.nrows() != dim || basis.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "{which} basis is {}x{}, group dimension is {dim}",
            basis.nrows(),
            basis.ncols()
        )));
    }
    let dev = linalg::gram_deviation(basis);
    if dev > ORTHONORMAL_TOL {
        return Err(Error::NonOrthonormal(dev));
    }
    Ok(())
}

/// Unnormalized middle components `(<j| ⊗ I ⊗ <k|) |psi>` for all `j, k`.
fn middle_components(
    psi: &PureState,
    split: &TripartiteSplit,
    basis1: &CMat,
    basis3: &CMat,
) -> Result<(Factorization, Vec<Vec<CVec>>)> {
    let f = split.factorization(psi.dims())?;
    check_basis(basis1, f.group_dim(0), "first")?;
    check_basis(basis3, f.group_dim(2), "last")?;
    let (o1, o2, o3) = (f.offsets(0), f.offsets(1), f.offsets(2));
    let amps = psi.amplitudes();
    let mut out = Vec::with_capacity(o1.len());
    for j in 0..o1.len() {
        let mut row = Vec::with_capacity(o3.len());
        for k in 0..o3.len() {
            let mut v = CVec::zeros(o2.len());
            for (m, &om) in o2.iter().enumerate() {
                let mut acc = ZERO;
                for (a, &oa) in o1.iter().enumerate() {
                    let ba = basis1[(a, j)].conj();
                    if ba == ZERO {
                        continue;
                    }
                    for (cc, &oc) in o3.iter().enumerate() {
                        acc += ba * basis3[(cc, k)].conj() * amps[oa + om + oc];
                    }
                }
                v[m] = acc;
            }
            row.push(v);
        }
        out.push(row);
    }
    Ok((f, out))
}

fn identity_assignment(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    (0..rows.min(cols)).map(|j| (j, j)).collect()
}

/// Maximum-weight injective matching between rows and columns, covering the
/// smaller side. Pairs are returned sorted by row.
pub fn max_weight_assignment(w: &[Vec<f64>]) -> Vec<(usize, usize)> {
    let rows = w.len();
    let cols = w.first().map_or(0, |r| r.len());
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    if rows > cols {
        let t: Vec<Vec<f64>> = (0..cols).map(|k| (0..rows).map(|j| w[j][k]).collect()).collect();
        let mut pairs: Vec<(usize, usize)> =
            max_weight_assignment(&t).into_iter().map(|(k, j)| (j, k)).collect();
        pairs.sort_unstable();
        return pairs;
    }
    // Hungarian algorithm (potentials form), minimizing -w; rows <= cols.
    let n = rows;
    let m = cols;
    let cost = |i: usize, j: usize| -w[i - 1][j - 1];
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=m {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| p[j] != 0)
        .map(|j| (p[j] - 1, j - 1))
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Joint distribution of local measurements in `basis1` (first group) and
/// `basis3` (last group); basis vectors are the columns.
pub fn joint_measurement_distribution(
    psi: &PureState,
    split: &TripartiteSplit,
    basis1: &CMat,
    basis3: &CMat,
    policy: AssignmentPolicy,
) -> Result<JointDistribution> {
    let (_, comps) = middle_components(psi, split, basis1, basis3)?;
    let p: Vec<Vec<f64>> = comps
        .iter()
        .map(|row| row.iter().map(|v| v.norm_squared()).collect())
        .collect();
    let (rows, cols) = (p.len(), p[0].len());
    let assignment = match policy {
        AssignmentPolicy::Identity => identity_assignment(rows, cols),
        AssignmentPolicy::Maximize => max_weight_assignment(&p),
    };
    JointDistribution::new(p, assignment)
}

/// `psi = Σ_{jk} sqrt(p_jk) |j>|e_jk>|k>` for given local bases.
#[derive(Debug, Clone)]
pub struct CorrelatedDecomposition {
    pub split: TripartiteSplit,
    pub basis1: CMat,
    pub basis3: CMat,
    pub weights: DMatrix<f64>,
    /// Normalized middle states; `None` where the weight is below
    /// [`ABSENT_THRESHOLD`].
    pub middle: Vec<Vec<Option<CVec>>>,
    /// Outcome pairs treated as "matching"; defaults to the identity.
    pub assignment: Vec<(usize, usize)>,
    dims: Vec<usize>,
    raw: Vec<Vec<CVec>>,
}

impl CorrelatedDecomposition {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Replaces the outcome matching (for example with one from
    /// [`max_weight_assignment`]).
    pub fn with_assignment(mut self, assignment: Vec<(usize, usize)>) -> Result<Self> {
        let p: Vec<Vec<f64>> = (0..self.weights.nrows())
            .map(|j| (0..self.weights.ncols()).map(|k| self.weights[(j, k)]).collect())
            .collect();
        let total: f64 = p.iter().flatten().sum();
        let p = p.into_iter().map(|r| r.into_iter().map(|x| x / total).collect()).collect();
        JointDistribution::new(p, assignment.clone())?;
        self.assignment = assignment;
        Ok(self)
    }

    /// Total weight on the matched pairs.
    pub fn correlation(&self) -> f64 {
        self.assignment.iter().map(|&(j, k)| self.weights[(j, k)]).sum()
    }

    /// Full vector `|j>|v>|k>` for a middle vector `v`.
    fn embed(&self, f: &Factorization, j: usize, k: usize, mid: &CVec) -> CVec {
        let total: usize = self.dims.iter().product();
        let mut out = CVec::zeros(total);
        for (a, &oa) in f.offsets(0).iter().enumerate() {
            let ba = self.basis1[(a, j)];
            if ba == ZERO {
                continue;
            }
            for (cc, &oc) in f.offsets(2).iter().enumerate() {
                let bc = self.basis3[(cc, k)];
                if bc == ZERO {
                    continue;
                }
                for (m, &om) in f.offsets(1).iter().enumerate() {
                    out[oa + om + oc] += ba * mid[m] * bc;
                }
            }
        }
        out
    }

    /// Sum of all `sqrt(p_jk) |j>|e_jk>|k>` terms.
    pub fn reconstruct(&self) -> Result<CVec> {
        let f = self.split.factorization(&self.dims)?;
        let total: usize = self.dims.iter().product();
        let mut out = CVec::zeros(total);
        for (j, row) in self.raw.iter().enumerate() {
            for (k, v) in row.iter().enumerate() {
                out += self.embed(&f, j, k, v);
            }
        }
        Ok(out)
    }
}

pub fn correlated_decomposition(
    psi: &PureState,
    split: &TripartiteSplit,
    basis1: &CMat,
    basis3: &CMat,
) -> Result<CorrelatedDecomposition> {
    let (_, raw) = middle_components(psi, split, basis1, basis3)?;
    let (rows, cols) = (raw.len(), raw[0].len());
    let mut weights = DMatrix::zeros(rows, cols);
    let mut middle = Vec::with_capacity(rows);
    for (j, row) in raw.iter().enumerate() {
        let mut mrow = Vec::with_capacity(cols);
        for (k, v) in row.iter().enumerate() {
            let w = v.norm_squared();
            weights[(j, k)] = w;
            mrow.push((w > ABSENT_THRESHOLD).then(|| v.unscale(w.sqrt())));
        }
        middle.push(mrow);
    }
    Ok(CorrelatedDecomposition {
        split: split.clone(),
        basis1: basis1.clone(),
        basis3: basis3.clone(),
        weights,
        middle,
        assignment: identity_assignment(rows, cols),
        dims: psi.dims().to_vec(),
        raw,
    })
}

/// Drops every unmatched term and renormalizes:
/// `psi' = Σ_j sqrt(p_jj) |j>|e_jj>|j> / sqrt(C)`. Returns `(psi', C)`.
pub fn truncate_to_perfect(decomp: &CorrelatedDecomposition) -> Result<(PureState, f64)> {
    let corr = decomp.correlation();
    if corr <= ABSENT_THRESHOLD {
        return Err(Error::NoCorrelatedComponent(corr));
    }
    let f = decomp.split.factorization(&decomp.dims)?;
    let total: usize = decomp.dims.iter().product();
    let mut out = CVec::zeros(total);
    for &(j, k) in &decomp.assignment {
        out += decomp.embed(&f, j, k, &decomp.raw[j][k]);
    }
    let psi = PureState::normalized(decomp.dims.clone(), out)?;
    Ok((psi, corr))
}

/// `Σ_j p_jj |j><j| ⊗ |e_jj><e_jj| ⊗ |j><j|` for a perfectly correlated
/// decomposition.
pub fn dephased_correlated_state(decomp: &CorrelatedDecomposition) -> Result<DensityMatrix> {
    let matched: f64 = decomp.correlation();
    let total_weight: f64 = decomp.weights.iter().sum();
    let off = (total_weight - matched).max(0.0);
    if off >= PERFECT_TOL {
        return Err(Error::ImperfectCorrelation(off));
    }
    let f = decomp.split.factorization(&decomp.dims)?;
    let mut terms = Vec::new();
    for &(j, k) in &decomp.assignment {
        if let Some(e) = &decomp.middle[j][k] {
            terms.push((decomp.weights[(j, k)], decomp.embed(&f, j, k, e)));
        }
    }
    let weighted: Vec<(f64, &CVec)> = terms.iter().map(|(w, v)| (*w, v)).collect();
    DensityMatrix::mixture(decomp.dims.clone(), &weighted)
}

/// Identity matrix as a computational basis.
pub fn computational_basis(dim: usize) -> CMat {
    CMat::identity(dim, dim)
}
