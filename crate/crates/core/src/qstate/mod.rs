//! Pure states, density matrices, partial traces and Schmidt structure.

mod correlation;
pub mod reference;

use serde::{Deserialize, Serialize};

pub use correlation::{
    computational_basis, correlated_decomposition, dephased_correlated_state, joint_measurement_distribution,
    max_weight_assignment, truncate_to_perfect, AssignmentPolicy, CorrelatedDecomposition,
    JointDistribution, TripartiteSplit, ABSENT_THRESHOLD,
};

use crate::error::{Error, Result};
use crate::hamiltonian::Spectrum;
use crate::json;
use crate::linalg::{self, c, CMat, CVec, Factorization, ONE};
use crate::topology::{canonical_set, validate_dims};

pub const NORM_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-12;

/// A normalized state vector over `dims`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateDoc", into = "StateDoc")]
pub struct PureState {
    dims: Vec<usize>,
    amplitudes: CVec,
}

#[derive(Serialize, Deserialize)]
struct StateDoc {
    dims: Vec<usize>,
    #[serde(with = "json::cvec")]
    amplitudes: CVec,
}

impl TryFrom<StateDoc> for PureState {
    type Error = Error;
    fn try_from(doc: StateDoc) -> Result<Self> {
        PureState::new(doc.dims, doc.amplitudes)
    }
}

impl From<PureState> for StateDoc {
    fn from(s: PureState) -> Self {
        StateDoc {
            dims: s.dims,
            amplitudes: s.amplitudes,
        }
    }
}

fn check_length(dims: &[usize], len: usize) -> Result<()> {
    validate_dims(dims)?;
    let expected = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::DimensionMismatch(format!("dims {dims:?} overflow")))?;
    if expected != len {
        return Err(Error::DimensionMismatch(format!(
            "dims {dims:?} need {expected} amplitudes, got {len}"
        )));
    }
    Ok(())
}

impl PureState {
    /// Requires `‖amplitudes‖ = 1` within `1e-12`.
    pub fn new(dims: Vec<usize>, amplitudes: CVec) -> Result<Self> {
        check_length(&dims, amplitudes.len())?;
        let n = amplitudes.norm();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n));
        }
        Ok(PureState { dims, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(dims: Vec<usize>, amplitudes: CVec) -> Result<Self> {
        check_length(&dims, amplitudes.len())?;
        let n = amplitudes.norm();
        if n <= 1e-300 || !n.is_finite() {
            return Err(Error::NotNormalized(n));
        }
        Ok(PureState {
            dims,
            amplitudes: amplitudes / c(n, 0.0),
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state serializes")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> num_complex::Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            dims: self.dims.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }

    /// Tensor product of states placed on the given subsystems of `dims`.
    /// The placements must cover every subsystem exactly once.
    pub fn tensor_placed(dims: &[usize], parts: &[(&[usize], &PureState)]) -> Result<Self> {
        validate_dims(dims)?;
        let groups: Vec<&[usize]> = parts.iter().map(|(g, _)| *g).collect();
        let f = Factorization::new(dims, &groups, false)?;
        for (g, (sub, state)) in parts.iter().enumerate() {
            let want: Vec<usize> = sub.iter().map(|&s| dims[s]).collect();
            if state.dims != want {
                return Err(Error::DimensionMismatch(format!(
                    "part on {sub:?} has dims {:?}, expected {want:?}",
                    state.dims
                )));
            }
            debug_assert_eq!(f.group_dim(g), state.dim());
        }
        let total: usize = dims.iter().product();
        let mut amps = CVec::from_element(total, ONE);
        // accumulate products group by group
        let mut filled = vec![false; total];
        fill_products(&f, parts, 0, 0, ONE, &mut amps, &mut filled);
        debug_assert!(filled.iter().all(|&b| b));
        PureState::normalized(dims.to_vec(), amps)
    }

    /// Ordinary tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        PureState {
            dims,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        }
    }
}

fn fill_products(
    f: &Factorization,
    parts: &[(&[usize], &PureState)],
    g: usize,
    offset: usize,
    acc: num_complex::Complex64,
    out: &mut CVec,
    filled: &mut [bool],
) {
    if g == parts.len() {
        out[offset] = acc;
        filled[offset] = true;
        return;
    }
    let amps = parts[g].1.amplitudes();
    for (local, &o) in f.offsets(g).iter().enumerate() {
        fill_products(f, parts, g + 1, offset + o, acc * amps[local], out, filled);
    }
}

/// A Hermitian, positive semidefinite, unit-trace operator over `dims`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    #[serde(serialize_with = "json::cmat::serialize")]
    matrix: CMat,
}

impl DensityMatrix {
    pub fn new(dims: Vec<usize>, matrix: CMat) -> Result<Self> {
        check_length(&dims, matrix.nrows())?;
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch("density matrix is not square".into()));
        }
        let dev = linalg::hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = linalg::trace(&matrix);
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace is {tr}")));
        }
        let matrix = (&matrix + matrix.adjoint()).scale(0.5);
        let min = linalg::eigvalsh(&matrix)?.first().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:.3e}"
            )));
        }
        Ok(DensityMatrix { dims, matrix })
    }

    /// Builds `Σ_i w_i |v_i><v_i|` normalized to unit trace.
    pub fn mixture(dims: Vec<usize>, weighted: &[(f64, &CVec)]) -> Result<Self> {
        let total: usize = dims.iter().product();
        let mut m = CMat::zeros(total, total);
        let mut tr = 0.0;
        for (w, v) in weighted {
            if *w < 0.0 {
                return Err(Error::InvalidArgument(format!("negative mixture weight {w}")));
            }
            if v.len() != total {
                return Err(Error::DimensionMismatch(format!(
                    "mixture component has length {}, expected {total}",
                    v.len()
                )));
            }
            m += (*v * v.adjoint()).scale(*w);
            tr += w * v.norm_squared();
        }
        if tr <= 0.0 {
            return Err(Error::InvalidDensityMatrix("empty mixture".into()));
        }
        DensityMatrix::new(dims, m.unscale(tr))
    }

    pub(crate) fn from_trusted(dims: Vec<usize>, matrix: CMat) -> Self {
        DensityMatrix { dims, matrix }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues_desc(&self) -> Result<Vec<f64>> {
        let mut v = linalg::eigvalsh(&self.matrix)?;
        v.reverse();
        Ok(v)
    }

    /// Number of eigenvalues strictly above `threshold`.
    pub fn rank(&self, threshold: f64) -> Result<usize> {
        Ok(self
            .eigenvalues_desc()?
            .iter()
            .filter(|&&x| x > threshold)
            .count())
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> Result<f64> {
        let eig: Vec<f64> = self
            .eigenvalues_desc()?
            .into_iter()
            .map(|x| x.max(0.0))
            .collect();
        Ok(linalg::entropy_of(&eig))
    }

    /// `(1/2)‖self - other‖_1`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch(format!(
                "dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        let diff = &self.matrix - &other.matrix;
        let eig = linalg::eigvalsh(&diff)?;
        Ok(0.5 * eig.iter().map(|x| x.abs()).sum::<f64>())
    }
}

/// Reduction to a subset of subsystems.
pub trait PartialTrace {
    fn dims(&self) -> &[usize];

    /// Reduced density matrix on `keep` (sorted into ascending order);
    /// everything else is traced out.
    fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix>;
}

fn keep_split(dims: &[usize], keep: &[usize]) -> Result<(Vec<usize>, Factorization)> {
    let keep = canonical_set(keep, dims.len())?;
    let f = Factorization::new(dims, &[&keep], true)?;
    Ok((keep, f))
}

impl PartialTrace for PureState {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let (keep, f) = keep_split(&self.dims, keep)?;
        let m = linalg::reduced_outer(&f, &self.amplitudes, &self.amplitudes);
        let dims = keep.iter().map(|&s| self.dims[s]).collect();
        Ok(DensityMatrix::from_trusted(dims, (&m + m.adjoint()).scale(0.5)))
    }
}

impl PartialTrace for DensityMatrix {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let (keep, f) = keep_split(&self.dims, keep)?;
        let m = linalg::reduced_matrix(&f, &self.matrix);
        let dims = keep.iter().map(|&s| self.dims[s]).collect();
        Ok(DensityMatrix::from_trusted(dims, (&m + m.adjoint()).scale(0.5)))
    }
}

pub fn partial_trace<S: PartialTrace + ?Sized>(state: &S, keep: &[usize]) -> Result<DensityMatrix> {
    state.partial_trace(keep)
}

/// `tr_{rest}(|a><b|)` on `keep`; used for cross terms between code states.
pub fn partial_trace_outer(dims: &[usize], a: &CVec, b: &CVec, keep: &[usize]) -> Result<CMat> {
    let (_, f) = keep_split(dims, keep)?;
    let total: usize = dims.iter().product();
    if a.len() != total || b.len() != total {
        return Err(Error::DimensionMismatch("vector length does not match dims".into()));
    }
    Ok(linalg::reduced_outer(&f, a, b))
}

/// Overlap of a state with a ground eigenspace.
#[derive(Debug, Clone)]
pub struct GroundOverlap {
    /// `sqrt(<psi|P0|psi>)`, clamped into `[0, 1]`.
    pub f: f64,
    /// `P0|psi> / ‖P0|psi>‖`, present when `f > 1e-12`.
    pub projected: Option<PureState>,
}

pub fn overlap_with_ground(psi: &PureState, spectrum: &Spectrum) -> Result<GroundOverlap> {
    if psi.dim() != spectrum.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {}, spectrum {}",
            psi.dim(),
            spectrum.dim()
        )));
    }
    let mut projected = CVec::zeros(psi.dim());
    let mut weight = 0.0;
    for j in 0..spectrum.ground_degeneracy() {
        let v = spectrum.eigenvector(j);
        let amp = v.dotc(psi.amplitudes());
        weight += amp.norm_sqr();
        projected += v * amp;
    }
    let f = weight.max(0.0).sqrt().min(1.0);
    let projected = if f > 1e-12 {
        Some(PureState::normalized(psi.dims.clone(), projected)?)
    } else {
        None
    };
    Ok(GroundOverlap { f, projected })
}

#[derive(Debug, Clone, Copy)]
pub struct SchmidtOptions {
    /// Relative tolerance for grouping equal coefficients.
    pub grouping_tol: f64,
    /// Coefficients at or below this are treated as zero.
    pub zero_tol: f64,
}

impl Default for SchmidtOptions {
    fn default() -> Self {
        SchmidtOptions {
            grouping_tol: 1e-8,
            zero_tol: 1e-10,
        }
    }
}

/// Schmidt decomposition `psi = Σ_j sqrt(p_j) |L_j>|R_j>` across a bipartition.
#[derive(Debug, Clone)]
pub struct SchmidtData {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    /// `sqrt(p_j)`, descending.
    pub coefficients: Vec<f64>,
    pub left_vectors: Vec<CVec>,
    pub right_vectors: Vec<CVec>,
    /// Multiplicity of each distinct nonzero coefficient, largest first.
    pub degeneracy: Vec<usize>,
    dims: Vec<usize>,
}

impl SchmidtData {
    pub fn schmidt_number(&self) -> usize {
        self.degeneracy.iter().sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c * c).collect()
    }

    /// Rebuilds the full state vector from the decomposition.
    pub fn reconstruct(&self) -> Result<CVec> {
        let f = Factorization::new(&self.dims, &[&self.left, &self.right], false)?;
        let total: usize = self.dims.iter().product();
        let mut out = CVec::zeros(total);
        for (j, &s) in self.coefficients.iter().enumerate() {
            for (a, &oa) in f.offsets(0).iter().enumerate() {
                for (b, &ob) in f.offsets(1).iter().enumerate() {
                    out[oa + ob] += self.left_vectors[j][a] * self.right_vectors[j][b] * s;
                }
            }
        }
        Ok(out)
    }
}

/// Groups consecutive (descending) nonzero coefficients that agree within a
/// relative tolerance.
pub fn degeneracy_profile(coefficients: &[f64], opts: SchmidtOptions) -> Vec<usize> {
    let mut profile = Vec::new();
    let mut lead: Option<f64> = None;
    for &x in coefficients.iter().filter(|&&x| x > opts.zero_tol) {
        match lead {
            Some(l) if (l - x).abs() <= opts.grouping_tol * l => {
                *profile.last_mut().unwrap() += 1;
            }
            _ => {
                lead = Some(x);
                profile.push(1);
            }
        }
    }
    profile
}

/// Schmidt decomposition of `psi` with `left` against all other subsystems.
pub fn schmidt_decompose(psi: &PureState, left: &[usize], opts: SchmidtOptions) -> Result<SchmidtData> {
    let n = psi.dims.len();
    let left = canonical_set(left, n)?;
    let right: Vec<usize> = (0..n).filter(|s| left.binary_search(s).is_err()).collect();
    if right.is_empty() {
        return Err(Error::InvalidArgument(
            "bipartition needs a nonempty right-hand group".into(),
        ));
    }
    let f = Factorization::new(&psi.dims, &[&left, &right], false)?;
    let (dl, dr) = (f.group_dim(0), f.group_dim(1));
    let mut m = CMat::zeros(dl, dr);
    for (a, &oa) in f.offsets(0).iter().enumerate() {
        for (b, &ob) in f.offsets(1).iter().enumerate() {
            m[(a, b)] = psi.amplitudes[oa + ob];
        }
    }
    let svd = m.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let coefficients: Vec<f64> = order.iter().map(|&j| svd.singular_values[j]).collect();
    let left_vectors = order.iter().map(|&j| u.column(j).into_owned()).collect();
    let right_vectors = order
        .iter()
        .map(|&j| vt.row(j).transpose().into_owned())
        .collect();
    let degeneracy = degeneracy_profile(&coefficients, opts);
    Ok(SchmidtData {
        left,
        right,
        coefficients,
        left_vectors,
        right_vectors,
        degeneracy,
        dims: psi.dims.clone(),
    })
}

/// Real diagonal density matrix helper used in tests and examples.
pub fn diagonal_density(dims: Vec<usize>, diag: &[f64]) -> Result<DensityMatrix> {
    let m = CMat::from_diagonal(&CVec::from_iterator(
        diag.len(),
        diag.iter().map(|&x| c(x, 0.0)),
    ));
    DensityMatrix::new(dims, m)
}

#[cfg(test)]
mod tests {
    use super::reference::{basis_state, bell, ghz, haar_random, haar_unitary};
    use super::*;
    use crate::linalg::ZERO;
    use rand::SeedableRng;

    #[test]
    fn bell_marginal_is_maximally_mixed() {
        let rho = bell().partial_trace(&[0]).unwrap();
        let half = CMat::identity(2, 2).scale(0.5);
        assert!((rho.matrix() - half).norm() < 1e-15);
    }

    #[test]
    fn product_marginal_is_pure() {
        let psi = basis_state(&[2, 2, 2], &[0, 0, 0]).unwrap();
        let rho = psi.partial_trace(&[0, 2]).unwrap();
        let expected = basis_state(&[2, 2], &[0, 0]).unwrap().density();
        assert!((rho.matrix() - expected.matrix()).norm() < 1e-15);
        assert_eq!(rho.dims(), &[2, 2]);
    }

    #[test]
    fn partial_trace_rejects_unknown_subsystem() {
        assert!(matches!(
            bell().partial_trace(&[2]),
            Err(Error::UnknownSubsystem { .. })
        ));
        assert!(bell().partial_trace(&[]).is_err());
    }

    #[test]
    fn random_partial_traces_have_unit_trace() {
        for seed in 0..100 {
            let psi = haar_random(&[2, 2, 2], seed).unwrap();
            let rho = psi.partial_trace(&[0, 1]).unwrap();
            assert!((linalg::trace(rho.matrix()) - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn pure_and_mixed_partial_traces_agree() {
        let psi = haar_random(&[2, 3, 2], 3).unwrap();
        let a = psi.partial_trace(&[2, 0]).unwrap();
        let b = psi.density().partial_trace(&[0, 2]).unwrap();
        assert!((a.matrix() - b.matrix()).norm() < 1e-14);
    }

    #[test]
    fn density_matrix_validation() {
        let bad = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 1.0), ZERO, ZERO]);
        assert!(matches!(
            DensityMatrix::new(vec![2], bad),
            Err(Error::NotHermitian(_))
        ));
        let neg = CMat::from_diagonal(&CVec::from_vec(vec![c(1.5, 0.0), c(-0.5, 0.0)]));
        assert!(DensityMatrix::new(vec![2], neg).is_err());
        let tr2 = CMat::identity(2, 2);
        assert!(DensityMatrix::new(vec![2], tr2).is_err());
    }

    #[test]
    fn pure_state_validation() {
        let v = CVec::from_vec(vec![ONE, ONE]);
        assert!(matches!(
            PureState::new(vec![2], v.clone()),
            Err(Error::NotNormalized(_))
        ));
        assert!(PureState::normalized(vec![2], v).is_ok());
        assert!(PureState::normalized(vec![2], CVec::zeros(2)).is_err());
        assert!(PureState::new(vec![3], CVec::zeros(2)).is_err());
    }

    #[test]
    fn state_json_round_trip() {
        let psi = haar_random(&[2, 3], 11).unwrap();
        let back = PureState::from_json(&psi.to_json()).unwrap();
        assert_eq!(psi, back);
        let parsed = PureState::from_json(r#"{"dims":[2],"amplitudes":[1, [0,0]]}"#).unwrap();
        assert_eq!(parsed.amplitudes()[0], ONE);
    }

    #[test]
    fn tensor_placed_puts_factors_on_subsystems() {
        let zero = basis_state(&[2], &[0]).unwrap();
        let psi = PureState::tensor_placed(&[2, 2, 2], &[(&[0, 2], &bell()), (&[1], &zero)]).unwrap();
        let expected = (basis_state(&[2, 2, 2], &[0, 0, 0]).unwrap().amplitudes()
            + basis_state(&[2, 2, 2], &[1, 0, 1]).unwrap().amplitudes())
        .unscale(2f64.sqrt());
        assert!((psi.amplitudes() - expected).norm() < 1e-15);
    }

    #[test]
    fn schmidt_of_bell_and_product() {
        let s = schmidt_decompose(&bell(), &[0], SchmidtOptions::default()).unwrap();
        let h = 0.5f64.sqrt();
        assert!((s.coefficients[0] - h).abs() < 1e-14 && (s.coefficients[1] - h).abs() < 1e-14);
        assert_eq!(s.degeneracy, vec![2]);

        let p = basis_state(&[2, 2], &[0, 0]).unwrap();
        let s = schmidt_decompose(&p, &[0], SchmidtOptions::default()).unwrap();
        assert!((s.coefficients[0] - 1.0).abs() < 1e-14);
        assert_eq!(s.schmidt_number(), 1);
    }

    #[test]
    fn schmidt_of_ghz_one_versus_rest() {
        let s = schmidt_decompose(&ghz(3).unwrap(), &[0], SchmidtOptions::default()).unwrap();
        assert_eq!(s.degeneracy, vec![2]);
        assert!((s.coefficients[0] - 0.5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn schmidt_reconstructs_and_is_locally_invariant() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for seed in 0..20 {
            let psi = haar_random(&[2, 3, 2], seed).unwrap();
            let s = schmidt_decompose(&psi, &[1], SchmidtOptions::default()).unwrap();
            assert!((s.reconstruct().unwrap() - psi.amplitudes()).norm() < 1e-10);
            let p: f64 = s.probabilities().iter().sum();
            assert!((p - 1.0).abs() < 1e-10);

            let u = haar_unitary(3, &mut rng);
            let w = haar_unitary(4, &mut rng);
            let moved = linalg::apply_local(&[2, 3, 2], &[1], &u, psi.amplitudes()).unwrap();
            let moved = linalg::apply_local(&[2, 3, 2], &[0, 2], &w, &moved).unwrap();
            let moved = PureState::new(vec![2, 3, 2], moved).unwrap();
            let s2 = schmidt_decompose(&moved, &[1], SchmidtOptions::default()).unwrap();
            for (a, b) in s.coefficients.iter().zip(&s2.coefficients) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn degeneracy_grouping() {
        let o = SchmidtOptions::default();
        assert_eq!(degeneracy_profile(&[0.5, 0.5, 0.5, 0.5], o), vec![4]);
        assert_eq!(degeneracy_profile(&[0.7f64.sqrt(), 0.3f64.sqrt()], o), vec![1, 1]);
        assert_eq!(degeneracy_profile(&[1.0, 0.0], o), vec![1]);
        assert_eq!(degeneracy_profile(&[0.6, 0.6 * (1.0 - 1e-10), 0.2], o), vec![2, 1]);
    }
}
