//! Hamiltonians built from local terms, and their exact spectra.

mod basis;
mod models;

pub use basis::{gell_mann, gell_mann_normalized, pauli_matrix, product_basis, OperatorBasis, sample_random_respecting};
pub use models::{Boundary, NamedModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::{self, ComplexRepr};
use crate::linalg::{self, c, CMat, CVec, DimCap, Factorization, ONE};
use crate::topology::{canonical_set, validate_dims};

pub const HERMITIAN_TOL: f64 = 1e-12;

/// A Hermitian operator acting on an ordered set of subsystems.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTerm {
    support: Vec<usize>,
    operator: CMat,
    /// Pauli-string shorthand the term was built from, kept for output.
    pauli: Option<(String, f64)>,
}

impl LocalTerm {
    /// Row and column order of `operator` follows the order of `support`.
    pub fn new(support: Vec<usize>, operator: CMat) -> Result<Self> {
        let mut sorted = support.clone();
        sorted.sort_unstable();
        if support.is_empty() || sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument(format!(
                "term support {support:?} is empty or repeats a subsystem"
            )));
        }
        if operator.nrows() != operator.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "term operator is {}x{}",
                operator.nrows(),
                operator.ncols()
            )));
        }
        let dev = linalg::hermitian_deviation(&operator);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let operator = (&operator + operator.adjoint()).scale(0.5);
        Ok(LocalTerm {
            support,
            operator,
            pauli: None,
        })
    }

    /// `coeff` times a tensor product of `I`, `X`, `Y`, `Z`, one letter per
    /// (qubit) subsystem in `support`.
    pub fn pauli(support: Vec<usize>, string: &str, coeff: f64) -> Result<Self> {
        if string.chars().count() != support.len() {
            return Err(Error::InvalidArgument(format!(
                "Pauli string {string:?} does not match support {support:?}"
            )));
        }
        if !coeff.is_finite() {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        let mut op = CMat::identity(1, 1).scale(coeff);
        for ch in string.chars() {
            op = linalg::kron(&op, &pauli_matrix(ch)?);
        }
        let mut term = LocalTerm::new(support, op)?;
        term.pauli = Some((string.to_string(), coeff));
        Ok(term)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn operator(&self) -> &CMat {
        &self.operator
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TermDoc {
    Pauli {
        support: Vec<usize>,
        pauli: String,
        #[serde(default = "unit")]
        coeff: f64,
    },
    Matrix {
        support: Vec<usize>,
        #[serde(serialize_with = "ser_rows", deserialize_with = "de_rows")]
        matrix: Vec<Vec<ComplexRepr>>,
    },
}

fn unit() -> f64 {
    1.0
}

fn ser_rows<S: serde::Serializer>(rows: &[Vec<ComplexRepr>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<Vec<[f64; 2]>> = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|&z| {
                    let z: num_complex::Complex64 = z.into();
                    [z.re, z.im]
                })
                .collect()
        })
        .collect();
    pairs.serialize(s)
}

fn de_rows<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<ComplexRepr>>, D::Error> {
    Vec::deserialize(d)
}

impl TermDoc {
    fn into_term(self) -> Result<LocalTerm> {
        match self {
            TermDoc::Pauli {
                support,
                pauli,
                coeff,
            } => LocalTerm::pauli(support, &pauli, coeff),
            TermDoc::Matrix { support, matrix } => {
                let m = json::rows_to_mat(matrix).map_err(Error::Parse)?;
                LocalTerm::new(support, m)
            }
        }
    }

    fn from_term(t: &LocalTerm) -> Self {
        match &t.pauli {
            Some((s, coeff)) => TermDoc::Pauli {
                support: t.support.clone(),
                pauli: s.clone(),
                coeff: *coeff,
            },
            None => TermDoc::Matrix {
                support: t.support.clone(),
                matrix: json::mat_to_rows(&t.operator)
                    .into_iter()
                    .map(|r| r.into_iter().map(ComplexRepr::Pair).collect())
                    .collect(),
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SpecDoc {
    dims: Vec<usize>,
    terms: Vec<TermDoc>,
}

/// A Hamiltonian given as an explicit sum of local terms.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    dims: Vec<usize>,
    terms: Vec<LocalTerm>,
}

impl HamiltonianSpec {
    pub fn new(dims: Vec<usize>, terms: Vec<LocalTerm>) -> Result<Self> {
        validate_dims(&dims)?;
        for t in &terms {
            canonical_set(&t.support, dims.len())?;
            let expected: usize = t.support.iter().map(|&s| dims[s]).product();
            if t.operator.nrows() != expected {
                return Err(Error::DimensionMismatch(format!(
                    "{}x{} operator on support {:?} of dimension {expected}",
                    t.operator.nrows(),
                    t.operator.ncols(),
                    t.support
                )));
            }
        }
        Ok(HamiltonianSpec { dims, terms })
    }

    pub fn from_json(text: &str, cap: DimCap) -> Result<Self> {
        let doc: SpecDoc = serde_json::from_str(text)?;
        validate_dims(&doc.dims)?;
        cap.total(&doc.dims)?;
        let terms = doc
            .terms
            .into_iter()
            .map(TermDoc::into_term)
            .collect::<Result<Vec<_>>>()?;
        HamiltonianSpec::new(doc.dims, terms)
    }

    fn doc(&self) -> SpecDoc {
        SpecDoc {
            dims: self.dims.clone(),
            terms: self.terms.iter().map(TermDoc::from_term).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.doc()).expect("spec serializes")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }

    /// `a H + b I`, with the identity added as a term on subsystem 0.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        let mut terms: Vec<LocalTerm> = self
            .terms
            .iter()
            .map(|t| LocalTerm::new(t.support.clone(), t.operator.scale(a)))
            .collect::<Result<_>>()?;
        let d0 = self.dims[0];
        terms.push(LocalTerm::new(vec![0], CMat::identity(d0, d0).scale(b))?);
        HamiltonianSpec::new(self.dims.clone(), terms)
    }
}

impl Serialize for HamiltonianSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.doc().serialize(s)
    }
}

/// Full matrix `Σ_terms operator ⊗ identity`.
pub fn assemble(spec: &HamiltonianSpec, cap: DimCap) -> Result<CMat> {
    let total = cap.total(&spec.dims)?;
    let mut h = CMat::zeros(total, total);
    for t in &spec.terms {
        let f = Factorization::new(&spec.dims, &[&t.support], true)?;
        linalg::add_embedded(&f, &t.operator, &mut h, ONE);
    }
    Ok(h)
}

/// Tolerances deciding which levels belong to the ground space:
/// `E_j - E_0 <= relative * max(E_tot, absolute)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyTol {
    pub relative: f64,
    pub absolute: f64,
}

impl Default for DegeneracyTol {
    fn default() -> Self {
        DegeneracyTol {
            relative: 1e-8,
            absolute: 1e-12,
        }
    }
}

/// Full eigensystem in ascending order of energy.
#[derive(Debug, Clone)]
pub struct Spectrum {
    energies: Vec<f64>,
    vectors: CMat,
    ground_degeneracy: usize,
    tolerance: DegeneracyTol,
}

/// Printable digest of a spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub dim: usize,
    pub e0: f64,
    pub e1: f64,
    pub gap: f64,
    pub e_max: f64,
    pub e_tot: f64,
    pub ground_degeneracy: usize,
    pub energies: Vec<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn vectors(&self) -> &CMat {
        &self.vectors
    }

    pub fn eigenvector(&self, j: usize) -> CVec {
        self.vectors.column(j).into_owned()
    }

    pub fn e0(&self) -> f64 {
        self.energies[0]
    }

    pub fn e_max(&self) -> f64 {
        self.energies[self.dim() - 1]
    }

    /// `E_max - E_0`.
    pub fn e_tot(&self) -> f64 {
        (self.e_max() - self.e0()).max(0.0)
    }

    /// `E_1 - E_0`, zero for a one-dimensional space.
    pub fn gap(&self) -> f64 {
        if self.dim() < 2 {
            0.0
        } else {
            self.energies[1] - self.energies[0]
        }
    }

    pub fn ground_degeneracy(&self) -> usize {
        self.ground_degeneracy
    }

    pub fn tolerance(&self) -> DegeneracyTol {
        self.tolerance
    }

    pub fn ground_projector(&self) -> CMat {
        let g = self.vectors.columns(0, self.ground_degeneracy);
        g * g.adjoint()
    }

    pub fn summary(&self) -> SpectrumSummary {
        SpectrumSummary {
            dim: self.dim(),
            e0: self.e0(),
            e1: self.energies.get(1).copied().unwrap_or(self.e0()),
            gap: self.gap(),
            e_max: self.e_max(),
            e_tot: self.e_tot(),
            ground_degeneracy: self.ground_degeneracy,
            energies: self.energies.clone(),
        }
    }
}

/// Dense diagonalization of a Hermitian matrix.
pub fn diagonalize(h: &CMat, tol: DegeneracyTol) -> Result<Spectrum> {
    let d = h.nrows();
    if d == 0 || h.ncols() != d {
        return Err(Error::DimensionMismatch(format!("{}x{} Hamiltonian", d, h.ncols())));
    }
    let scale = linalg::operator_norm(h).max(1.0);
    let dev = linalg::hermitian_deviation(h);
    if dev > 1e-10 * scale {
        return Err(Error::NotHermitian(dev));
    }
    let (energies, vectors) = linalg::eigh(h)?;
    let residual = (h * &vectors - &vectors * CMat::from_diagonal(&CVec::from_iterator(d, energies.iter().map(|&e| c(e, 0.0)))))
        .column_iter()
        .map(|col| col.norm())
        .fold(0.0, f64::max);
    if residual > 1e-9 * scale {
        return Err(Error::Eigensolver {
            dim: d,
            detail: format!("residual {residual:.3e} exceeds 1e-9 * max(1, ‖H‖) = {:.3e}", 1e-9 * scale),
        });
    }
    let e0 = energies[0];
    let e_tot = energies[d - 1] - e0;
    let window = tol.relative * e_tot.max(tol.absolute);
    let ground_degeneracy = energies.iter().take_while(|&&e| e - e0 <= window).count();
    Ok(Spectrum {
        energies,
        vectors,
        ground_degeneracy,
        tolerance: tol,
    })
}

/// `assemble` followed by `diagonalize` with default tolerances.
pub fn spectrum_of(spec: &HamiltonianSpec, cap: DimCap) -> Result<Spectrum> {
    diagonalize(&assemble(spec, cap)?, DegeneracyTol::default())
}
