//! Hermitian operator bases on a hyperedge and random Hamiltonians drawn
//! over them.
//!
//! Single-site ordering (generalized Gell-Mann): identity first, then the
//! symmetric pairs `E_jk + E_kj` for `j < k` in lexicographic order, then the
//! antisymmetric pairs `-i E_jk + i E_kj` in the same order, then the
//! diagonal matrices `sqrt(2/(l(l+1))) (Σ_{j<l} E_jj - l E_ll)` for
//! `l = 1..d-1`. For qubits this is `I, X, Y, Z`. Product bases enumerate
//! tensor products with the first listed subsystem varying slowest.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianSpec, LocalTerm};
use crate::linalg::{self, c, CMat, ONE, ZERO};
use crate::topology::CouplingTopology;

pub fn pauli_matrix(ch: char) -> Result<CMat> {
    let m = match ch.to_ascii_uppercase() {
        'I' => [ONE, ZERO, ZERO, ONE],
        'X' => [ZERO, ONE, ONE, ZERO],
        'Y' => [ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO],
        'Z' => [ONE, ZERO, ZERO, c(-1.0, 0.0)],
        _ => return Err(Error::Parse(format!("unknown Pauli letter {ch:?}"))),
    };
    Ok(CMat::from_row_slice(2, 2, &m))
}

/// Unnormalized generalized Gell-Mann matrices, identity included.
pub fn gell_mann(d: usize) -> Vec<CMat> {
    let mut out = vec![CMat::identity(d, d)];
    for j in 0..d {
        for k in j + 1..d {
            let mut m = CMat::zeros(d, d);
            m[(j, k)] = ONE;
            m[(k, j)] = ONE;
            out.push(m);
        }
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut m = CMat::zeros(d, d);
            m[(j, k)] = c(0.0, -1.0);
            m[(k, j)] = c(0.0, 1.0);
            out.push(m);
        }
    }
    for l in 1..d {
        let s = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut m = CMat::zeros(d, d);
        for j in 0..l {
            m[(j, j)] = c(s, 0.0);
        }
        m[(l, l)] = c(-s * l as f64, 0.0);
        out.push(m);
    }
    out
}

/// Gell-Mann matrices scaled to `tr(A† B) = δ_AB`.
pub fn gell_mann_normalized(d: usize) -> Vec<CMat> {
    gell_mann(d)
        .into_iter()
        .map(|m| {
            let n = linalg::trace(&(m.adjoint() * &m)).re.sqrt();
            m.unscale(n)
        })
        .collect()
}

/// Tensor products of single-site bases over `dims`.
pub fn product_basis(dims: &[usize], normalized: bool) -> Vec<CMat> {
    let mut out = vec![CMat::identity(1, 1)];
    for &d in dims {
        let site = if normalized { gell_mann_normalized(d) } else { gell_mann(d) };
        out = out
            .iter()
            .flat_map(|a| site.iter().map(move |b| linalg::kron(a, b)))
            .collect();
    }
    out
}

/// Trace-orthonormal basis per hyperedge of a topology, used to map a flat
/// coefficient vector to a Hamiltonian.
#[derive(Debug, Clone)]
pub struct OperatorBasis {
    dims: Vec<usize>,
    hyperedges: Vec<Vec<usize>>,
    elements: Vec<Vec<CMat>>,
}

impl OperatorBasis {
    /// With `traceless` the all-identity element is left out of every
    /// hyperedge.
    pub fn for_topology(topology: &CouplingTopology, traceless: bool) -> Self {
        let dims = topology.dims().to_vec();
        let elements = topology
            .hyperedges()
            .iter()
            .map(|e| {
                let local: Vec<usize> = e.iter().map(|&s| dims[s]).collect();
                let all = product_basis(&local, true);
                if traceless {
                    all.into_iter().skip(1).collect()
                } else {
                    all
                }
            })
            .collect();
        OperatorBasis {
            dims,
            hyperedges: topology.hyperedges().to_vec(),
            elements,
        }
    }

    pub fn num_params(&self) -> usize {
        self.elements.iter().map(Vec::len).sum()
    }

    /// One term per hyperedge, `Σ_a x_a B_a`, consuming `coeffs` in order.
    pub fn spec(&self, coeffs: &[f64]) -> Result<HamiltonianSpec> {
        if coeffs.len() != self.num_params() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} basis elements",
                coeffs.len(),
                self.num_params()
            )));
        }
        let mut rest = coeffs;
        let mut terms = Vec::with_capacity(self.hyperedges.len());
        for (e, basis) in self.hyperedges.iter().zip(&self.elements) {
            let (mine, tail) = rest.split_at(basis.len());
            rest = tail;
            let d = basis.first().map_or(1, CMat::nrows);
            let mut op = CMat::zeros(d, d);
            for (b, &x) in basis.iter().zip(mine) {
                op += b.scale(x);
            }
            terms.push(LocalTerm::new(e.clone(), op)?);
        }
        HamiltonianSpec::new(self.dims.clone(), terms)
    }

    /// I.i.d. standard normal coefficients times `scale`, in basis order.
    pub fn random_coefficients(&self, seed: u64, scale: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.num_params())
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                x * scale
            })
            .collect()
    }
}

/// One random term per hyperedge over the full trace-orthonormal product
/// basis (identity included), deterministic in `seed`.
pub fn sample_random_respecting(topology: &CouplingTopology, seed: u64, scale: f64) -> Result<HamiltonianSpec> {
    let basis = OperatorBasis::for_topology(topology, false);
    basis.spec(&basis.random_coefficients(seed, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::respects;

    #[test]
    fn qubit_basis_is_pauli() {
        let g = gell_mann(2);
        for (m, ch) in g.iter().zip(['I', 'X', 'Y', 'Z']) {
            assert_eq!(m, &pauli_matrix(ch).unwrap());
        }
    }

    #[test]
    fn normalized_bases_are_trace_orthonormal() {
        for dims in [vec![2], vec![3], vec![4], vec![2, 3]] {
            let b = product_basis(&dims, true);
            let d: usize = dims.iter().product();
            assert_eq!(b.len(), d * d);
            for (i, x) in b.iter().enumerate() {
                assert!(linalg::hermitian_deviation(x) < 1e-15);
                for (j, y) in b.iter().enumerate() {
                    let ip = linalg::trace(&(x.adjoint() * y));
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - c(expected, 0.0)).norm() < 1e-14, "{dims:?} {i} {j}");
                }
            }
        }
    }

    #[test]
    fn line_sample_structure() {
        let line = CouplingTopology::line(vec![2, 2, 2]).unwrap();
        let spec = sample_random_respecting(&line, 42, 1.0).unwrap();
        let supports: Vec<&[usize]> = spec.terms().iter().map(LocalTerm::support).collect();
        assert_eq!(supports, vec![&[0usize, 1][..], &[1, 2][..]]);
        assert!(respects(&spec, &line).unwrap().respects);
        let again = sample_random_respecting(&line, 42, 1.0).unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn coefficient_means_vanish() {
        let line = CouplingTopology::line(vec![2, 2, 2]).unwrap();
        let basis = OperatorBasis::for_topology(&line, false);
        let n = 1000;
        let mut sums = vec![0.0; basis.num_params()];
        for seed in 0..n {
            for (s, x) in sums.iter_mut().zip(basis.random_coefficients(seed, 1.0)) {
                *s += x;
            }
        }
        // standard error of the mean is 1/sqrt(n)
        let sigma = 1.0 / (n as f64).sqrt();
        for s in sums {
            assert!((s / n as f64).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn traceless_basis_drops_identity() {
        let line = CouplingTopology::line(vec![2, 2, 2]).unwrap();
        let b = OperatorBasis::for_topology(&line, true);
        assert_eq!(b.num_params(), 30);
        let spec = b.spec(&vec![1.0; 30]).unwrap();
        for t in spec.terms() {
            assert!(linalg::trace(t.operator()).norm() < 1e-13);
        }
        assert!(b.spec(&[1.0]).is_err());
    }
}
