//! Code subspaces, error-correction conditions and the multi-level bound.

use serde::{Deserialize, Serialize};

use crate::bounds::{make_report, BoundInputs, BoundName, BoundReport};
use crate::error::{Error, Result};
use crate::hamiltonian::{pauli_matrix, product_basis, Spectrum};
use crate::json;
use crate::linalg::{self, c, CMat, CVec, Factorization};
use crate::topology::{canonical_set, validate_dims, CouplingTopology};

const ORTHONORMAL_TOL: f64 = 1e-10;

/// A collection of correctable subsystem sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorSet {
    elements: Vec<Vec<usize>>,
}

impl ErrorSet {
    /// Each element is sorted; repeated elements are merged.
    pub fn new(elements: Vec<Vec<usize>>) -> Result<Self> {
        let mut out: Vec<Vec<usize>> = Vec::with_capacity(elements.len());
        for e in elements {
            let e = canonical_set(&e, usize::MAX)?;
            if !out.contains(&e) {
                out.push(e);
            }
        }
        Ok(ErrorSet { elements: out })
    }

    pub fn singletons(n: usize) -> Self {
        ErrorSet {
            elements: (0..n).map(|s| vec![s]).collect(),
        }
    }

    pub fn elements(&self) -> &[Vec<usize>] {
        &self.elements
    }
}

/// An orthonormal list of states spanning a code space.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSubspace {
    dims: Vec<usize>,
    basis: Vec<CVec>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CodeDoc {
    Stabilizers { stabilizers: Vec<String> },
    Basis { dims: Vec<usize>, basis: Vec<Vec<[f64; 2]>> },
}

impl CodeSubspace {
    pub fn new(dims: Vec<usize>, basis: Vec<CVec>) -> Result<Self> {
        validate_dims(&dims)?;
        let total: usize = dims.iter().product();
        if basis.is_empty() {
            return Err(Error::InvalidArgument("a code needs at least one state".into()));
        }
        if let Some(v) = basis.iter().find(|v| v.len() != total) {
            return Err(Error::DimensionMismatch(format!(
                "code state of length {}, space dimension {total}",
                v.len()
            )));
        }
        let m = CMat::from_columns(&basis);
        let dev = linalg::gram_deviation(&m);
        if dev > ORTHONORMAL_TOL {
            return Err(Error::NonOrthonormal(dev));
        }
        Ok(CodeSubspace { dims, basis })
    }

    /// Joint +1 eigenspace of commuting Pauli strings on qubits.
    pub fn from_stabilizers(generators: &[&str]) -> Result<Self> {
        let projector = stabilizer_projector(generators)?;
        let n = generators[0].len();
        let total = projector.nrows();
        let candidates: Vec<CVec> = (0..total)
            .map(|i| projector.column(i).into_owned())
            .collect();
        let basis = linalg::orthonormalize(&candidates, 1e-8);
        if basis.is_empty() {
            return Err(Error::InvalidArgument("stabilizers have no common +1 eigenspace".into()));
        }
        CodeSubspace::new(vec![2; n], basis)
    }

    /// `{"dims":[..],"basis":[[[re,im],..],..]}` or `{"stabilizers":["XZZXI",..]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        match serde_json::from_str::<CodeDoc>(text)? {
            CodeDoc::Stabilizers { stabilizers } => {
                let refs: Vec<&str> = stabilizers.iter().map(String::as_str).collect();
                CodeSubspace::from_stabilizers(&refs)
            }
            CodeDoc::Basis { dims, basis } => {
                let basis = basis
                    .into_iter()
                    .map(|v| CVec::from_iterator(v.len(), v.into_iter().map(|[re, im]| c(re, im))))
                    .collect();
                CodeSubspace::new(dims, basis)
            }
        }
    }

    pub fn to_json(&self) -> String {
        let doc = CodeDoc::Basis {
            dims: self.dims.clone(),
            basis: self.basis.iter().map(json::vec_to_pairs).collect(),
        };
        serde_json::to_string(&doc).expect("code serializes")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn basis(&self) -> &[CVec] {
        &self.basis
    }

    /// Number of logical basis states.
    pub fn k(&self) -> usize {
        self.basis.len()
    }
}

fn pauli_string_operator(s: &str) -> Result<CMat> {
    let mut op = CMat::identity(1, 1);
    for ch in s.chars() {
        op = linalg::kron(&op, &pauli_matrix(ch)?);
    }
    Ok(op)
}

fn stabilizer_projector(generators: &[&str]) -> Result<CMat> {
    let n = generators
        .first()
        .ok_or_else(|| Error::InvalidArgument("no stabilizer generators".into()))?
        .len();
    if n == 0 || generators.iter().any(|g| g.len() != n) {
        return Err(Error::InvalidArgument("stabilizer strings differ in length".into()));
    }
    let total = 1usize << n;
    let id = CMat::identity(total, total);
    let mut p = id.clone();
    for g in generators {
        let s = pauli_string_operator(g)?;
        p = (&id + s) * p * c(0.5, 0.0);
    }
    Ok(p)
}

/// The five-qubit code with generators `XZZXI` and its cyclic shifts.
/// Logical states are `P|00000>` (normalized) and `XXXXX` applied to it.
pub fn five_qubit_code() -> CodeSubspace {
    const GENERATORS: [&str; 4] = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"];
    let p = stabilizer_projector(&GENERATORS).expect("valid generators");
    let zero = p.column(0).into_owned();
    let zero = zero.unscale(zero.norm());
    let x_all = pauli_string_operator("XXXXX").expect("valid string");
    let one = &x_all * &zero;
    let code = CodeSubspace::new(vec![2; 5], vec![zero, one]).expect("logical states are orthonormal");
    for g in GENERATORS {
        let s = pauli_string_operator(g).expect("valid string");
        for v in code.basis() {
            debug_assert!((&s * v - v).norm() < 1e-12);
        }
    }
    code
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlViolation {
    pub s1: Vec<usize>,
    pub s2: Vec<usize>,
    pub a: String,
    pub b: String,
    /// `‖M - γI‖` in operator norm, `γ = tr(M)/k`.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlReport {
    pub passed: bool,
    pub tolerance: f64,
    pub max_deviation: f64,
    pub pairs_checked: usize,
    /// The worst operator pair, reported whether or not the check passed.
    pub worst: Option<KlViolation>,
}

fn site_label(d: usize, idx: usize) -> String {
    if d == 2 {
        ["I", "X", "Y", "Z"][idx].to_string()
    } else {
        format!("G{idx}")
    }
}

/// Basis elements on `set` with their labels and images of every code state.
fn local_images(code: &CodeSubspace, set: &[usize]) -> Result<Vec<(String, Vec<CVec>)>> {
    let local: Vec<usize> = set.iter().map(|&s| code.dims[s]).collect();
    let f = Factorization::new(&code.dims, &[set], true)?;
    let ops = product_basis(&local, false);
    let mut out = Vec::with_capacity(ops.len());
    for (idx, op) in ops.iter().enumerate() {
        let mut rem = idx;
        let mut label = Vec::with_capacity(local.len());
        for &d in local.iter().rev() {
            label.push(site_label(d, rem % (d * d)));
            rem /= d * d;
        }
        label.reverse();
        let images = code.basis.iter().map(|v| linalg::apply_local_with(&f, op, v)).collect();
        out.push((label.join(""), images));
    }
    Ok(out)
}

/// Checks `P A† B P ∝ P` for all generalized Pauli products `A` on `s1` and
/// `B` on `s2`, over all pairs `s1, s2` of the error set.
pub fn kl_check(code: &CodeSubspace, errors: &ErrorSet, tolerance: f64) -> Result<KlReport> {
    let n = code.dims.len();
    for e in errors.elements() {
        canonical_set(e, n)?;
    }
    let images: Vec<Vec<(String, Vec<CVec>)>> = errors
        .elements()
        .iter()
        .map(|e| local_images(code, e))
        .collect::<Result<_>>()?;
    let k = code.k();
    let mut worst: Option<KlViolation> = None;
    let mut pairs_checked = 0usize;
    let elems = errors.elements();
    for i in 0..elems.len() {
        for j in i..elems.len() {
            for (la, va) in &images[i] {
                for (lb, vb) in &images[j] {
                    pairs_checked += 1;
                    let m = CMat::from_fn(k, k, |r, s| va[r].dotc(&vb[s]));
                    let gamma = linalg::trace(&m) / c(k as f64, 0.0);
                    let dev = linalg::operator_norm(&(m - CMat::identity(k, k) * gamma));
                    if worst.as_ref().is_none_or(|w| dev > w.deviation) {
                        worst = Some(KlViolation {
                            s1: elems[i].clone(),
                            s2: elems[j].clone(),
                            a: la.clone(),
                            b: lb.clone(),
                            deviation: dev,
                        });
                    }
                }
            }
        }
    }
    let max_deviation = worst.as_ref().map_or(0.0, |w| w.deviation);
    Ok(KlReport {
        passed: max_deviation <= tolerance,
        tolerance,
        max_deviation,
        pairs_checked,
        worst,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgreementFailure {
    /// Some `tr_ē |j><j|` differs from `tr_ē |0><0|`.
    Diagonal,
    /// Some `tr_ē |j1><j2|`, `j1 != j2`, is nonzero.
    Cross,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub passed: bool,
    pub tolerance: f64,
    /// Largest `‖tr_ē |j><j| - tr_ē |0><0|‖₁`.
    pub max_diagonal_deviation: f64,
    /// Largest `‖tr_ē |j1><j2|‖₁` over `j1 != j2`.
    pub max_cross_norm: f64,
    pub failure: Option<AgreementFailure>,
    pub worst_hyperedge: Option<Vec<usize>>,
}

/// Checks that all code states share every hyperedge marginal and that the
/// cross terms between them vanish on every hyperedge.
pub fn subspace_agreement_check(code: &CodeSubspace, topology: &CouplingTopology, tolerance: f64) -> Result<AgreementReport> {
    if code.dims != topology.dims() {
        return Err(Error::DimensionMismatch(format!(
            "code dims {:?}, topology dims {:?}",
            code.dims,
            topology.dims()
        )));
    }
    let k = code.k();
    let mut max_diag = 0.0f64;
    let mut max_cross = 0.0f64;
    let mut worst_diag: Option<Vec<usize>> = None;
    let mut worst_cross: Option<Vec<usize>> = None;
    for e in topology.hyperedges() {
        let f = Factorization::new(&code.dims, &[e], true)?;
        let reference = linalg::reduced_outer(&f, &code.basis[0], &code.basis[0]);
        for j1 in 0..k {
            for j2 in 0..k {
                let r = linalg::reduced_outer(&f, &code.basis[j1], &code.basis[j2]);
                if j1 == j2 {
                    let d = linalg::trace_norm(&(r - &reference));
                    if d > max_diag {
                        max_diag = d;
                        worst_diag = Some(e.clone());
                    }
                } else {
                    let d = linalg::trace_norm(&r);
                    if d > max_cross {
                        max_cross = d;
                        worst_cross = Some(e.clone());
                    }
                }
            }
        }
    }
    let (failure, worst_hyperedge) = if max_diag > tolerance {
        (Some(AgreementFailure::Diagonal), worst_diag)
    } else if max_cross > tolerance {
        (Some(AgreementFailure::Cross), worst_cross)
    } else {
        (None, None)
    };
    Ok(AgreementReport {
        passed: failure.is_none(),
        tolerance,
        max_diagonal_deviation: max_diag,
        max_cross_norm: max_cross,
        failure,
        worst_hyperedge,
    })
}

/// `E_{k-1} - E_0 <= (1 - F²) E_tot` for a code of dimension `k` whose
/// agreement with the Hamiltonian's topology has been certified.
pub fn qecc_bound(
    spectrum: &Spectrum,
    code: &CodeSubspace,
    agreement: &AgreementReport,
    f: f64,
    tolerance: Option<f64>,
) -> Result<BoundReport> {
    if !agreement.passed {
        return Err(Error::AgreementNotCertified);
    }
    if code.k() > spectrum.dim() {
        return Err(Error::DimensionMismatch(format!(
            "code dimension {} exceeds space dimension {}",
            code.k(),
            spectrum.dim()
        )));
    }
    if !(0.0..=1.0 + 1e-10).contains(&f) {
        return Err(Error::InvalidArgument(format!("overlap F = {f} outside [0, 1]")));
    }
    let f = f.min(1.0);
    let lhs = spectrum.energies()[code.k() - 1] - spectrum.e0();
    let rhs = (1.0 - f * f) * spectrum.e_tot();
    let inputs = BoundInputs {
        f: Some(f),
        k: Some(code.k()),
        ..Default::default()
    };
    Ok(make_report(BoundName::Qecc, spectrum, lhs, rhs, tolerance, inputs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::check_membership;
    use crate::hamiltonian::{diagonalize, DegeneracyTol};
    use crate::qstate::reference::{basis_state, haar_random};
    use crate::qstate::{PartialTrace, PureState};
    use crate::topology::derive_from_error_set;

    fn ghz_span() -> CodeSubspace {
        let a = basis_state(&[2, 2, 2], &[0, 0, 0]).unwrap();
        let b = basis_state(&[2, 2, 2], &[1, 1, 1]).unwrap();
        CodeSubspace::new(vec![2, 2, 2], vec![a.amplitudes().clone(), b.amplitudes().clone()]).unwrap()
    }

    #[test]
    fn five_qubit_code_properties() {
        let code = five_qubit_code();
        assert_eq!(code.k(), 2);
        let m = CMat::from_columns(code.basis());
        assert!(linalg::gram_deviation(&m) < 1e-12);
        for g in ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"] {
            let s = pauli_string_operator(g).unwrap();
            for v in code.basis() {
                assert!((&s * v - v).norm() < 1e-12);
            }
        }
        let half = CMat::identity(2, 2).scale(0.5);
        for v in code.basis() {
            let psi = PureState::new(vec![2; 5], v.clone()).unwrap();
            for q in 0..5 {
                assert!((psi.partial_trace(&[q]).unwrap().matrix() - &half).norm() < 1e-12);
            }
        }
        let generic = CodeSubspace::from_stabilizers(&["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"]).unwrap();
        assert_eq!(generic.k(), 2);
    }

    #[test]
    fn kl_examples() {
        let five = five_qubit_code();
        let r = kl_check(&five, &ErrorSet::singletons(5), 1e-10).unwrap();
        assert!(r.passed, "{r:?}");
        // 15 unordered pairs of singletons (with repeats) times 16 operator pairs
        assert_eq!(r.pairs_checked, 15 * 16);

        let r = kl_check(&ghz_span(), &ErrorSet::singletons(3), 1e-10).unwrap();
        assert!(!r.passed);
        // Z on one qubit against identity: M = diag(1, -1), deviation 1
        assert!((r.max_deviation - 1.0).abs() < 1e-12);

        let single = CodeSubspace::new(vec![2, 2], vec![haar_random(&[2, 2], 1).unwrap().amplitudes().clone()]).unwrap();
        assert!(kl_check(&single, &ErrorSet::new(vec![vec![0, 1]]).unwrap(), 1e-10).unwrap().passed);
    }

    #[test]
    fn agreement_examples() {
        let five = five_qubit_code();
        let pairs = CouplingTopology::pairwise(vec![2; 5]).unwrap();
        let r = subspace_agreement_check(&five, &pairs, 1e-10).unwrap();
        assert!(r.passed, "{r:?}");
        let quarter = CMat::identity(4, 4).scale(0.25);
        for v in five.basis() {
            let psi = PureState::new(vec![2; 5], v.clone()).unwrap();
            for e in pairs.hyperedges() {
                assert!((psi.partial_trace(e).unwrap().matrix() - &quarter).norm() < 1e-12);
            }
        }

        let r = subspace_agreement_check(&ghz_span(), &CouplingTopology::pairwise(vec![2; 3]).unwrap(), 1e-10).unwrap();
        assert!(!r.passed);
        assert_eq!(r.failure, Some(AgreementFailure::Diagonal));

        let single = CodeSubspace::new(vec![2, 2], vec![haar_random(&[2, 2], 1).unwrap().amplitudes().clone()]).unwrap();
        assert!(subspace_agreement_check(&single, &CouplingTopology::line(vec![2, 2]).unwrap(), 1e-10).unwrap().passed);
    }

    #[test]
    fn span_members_agree_on_every_hyperedge() {
        let five = five_qubit_code();
        let pairs = CouplingTopology::pairwise(vec![2; 5]).unwrap();
        let reference = PureState::new(vec![2; 5], five.basis()[0].clone()).unwrap();
        for seed in 0..100 {
            let w = haar_random(&[2], seed).unwrap();
            let v = &five.basis()[0] * w.amplitudes()[0] + &five.basis()[1] * w.amplitudes()[1];
            let phi = PureState::normalized(vec![2; 5], v).unwrap();
            assert!(check_membership(&phi.density(), &reference, &pairs, None).unwrap().passed);
        }
    }

    fn perturbed(code: &CodeSubspace, eps: f64, seed: u64) -> CodeSubspace {
        let noise = haar_random(code.dims(), seed).unwrap();
        let mut v0 = &code.basis()[0] + noise.amplitudes() * c(eps, 0.0);
        v0.unscale_mut(v0.norm());
        let mut rest = vec![v0];
        rest.extend(code.basis()[1..].iter().cloned());
        CodeSubspace::new(code.dims().to_vec(), linalg::orthonormalize(&rest, 1e-8)).unwrap()
    }

    #[test]
    fn kl_and_agreement_are_equivalent() {
        let cases: Vec<(CodeSubspace, ErrorSet)> = vec![
            (five_qubit_code(), ErrorSet::singletons(5)),
            (ghz_span(), ErrorSet::singletons(3)),
            (perturbed(&five_qubit_code(), 1e-3, 1), ErrorSet::singletons(5)),
            (perturbed(&five_qubit_code(), 1e-3, 2), ErrorSet::singletons(5)),
            (perturbed(&ghz_span(), 1e-3, 3), ErrorSet::singletons(3)),
            (ghz_span(), ErrorSet::new(vec![vec![0, 1]]).unwrap()),
        ];
        for (i, (code, errors)) in cases.iter().enumerate() {
            let topo = derive_from_error_set(errors, code.dims().to_vec()).unwrap();
            let kl = kl_check(code, errors, 1e-10).unwrap();
            let ag = subspace_agreement_check(code, &topo, 1e-10).unwrap();
            assert_eq!(kl.passed, ag.passed, "case {i}: {kl:?} {ag:?}");
        }
    }

    #[test]
    fn qecc_bound_cases() {
        let five = five_qubit_code();
        let pairs = CouplingTopology::pairwise(vec![2; 5]).unwrap();
        let ag = subspace_agreement_check(&five, &pairs, 1e-10).unwrap();
        let h = CMat::from_diagonal(&CVec::from_iterator(32, (0..32).map(|i| c(i as f64, 0.0))));
        let s = diagonalize(&h, DegeneracyTol::default()).unwrap();
        let r = qecc_bound(&s, &five, &ag, 0.5, None).unwrap();
        assert_eq!(r.lhs, 1.0);
        assert!((r.rhs - 0.75 * 31.0).abs() < 1e-12);

        let bad = subspace_agreement_check(&ghz_span(), &CouplingTopology::pairwise(vec![2; 3]).unwrap(), 1e-10).unwrap();
        assert!(matches!(qecc_bound(&s, &ghz_span(), &bad, 0.5, None), Err(Error::AgreementNotCertified)));

        let single = CodeSubspace::new(vec![2; 5], vec![five.basis()[0].clone()]).unwrap();
        let ag1 = subspace_agreement_check(&single, &pairs, 1e-10).unwrap();
        let r = qecc_bound(&s, &single, &ag1, 0.0, None).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.satisfied);
    }

    #[test]
    fn code_json_round_trip() {
        let five = five_qubit_code();
        let back = CodeSubspace::from_json(&five.to_json()).unwrap();
        assert!((CMat::from_columns(back.basis()) - CMat::from_columns(five.basis())).norm() < 1e-15);
        let stab = CodeSubspace::from_json(r#"{"stabilizers":["ZZI","IZZ"]}"#).unwrap();
        assert_eq!(stab.k(), 2);
        assert!(matches!(CodeSubspace::from_json("[1,"), Err(Error::Parse(_))));
    }
}
