//! Entropy-maximizing state with prescribed hyperedge marginals.
//!
//! Every state sharing the marginals `r_e` of `psi` is supported inside
//! `K = ∩_e supp(r_e) ⊗ H_ē`, so the search is restricted to `K` first. On
//! `K` the maximizer has the form `exp(Q† (Σ_e Λ_e ⊗ I) Q) / Z`, and the
//! multipliers `Λ_e` are found by minimizing the convex dual
//! `log Z(Λ) - Σ_e tr(Λ_e r_e)`, whose gradient in `Λ_e` is
//! `tr_ē(σ) - r_e`.

use serde::Serialize;

use crate::bounds::check_membership;
use crate::error::{Error, Result};
use crate::json;
use crate::linalg::{self, CMat, Factorization, ONE};
use crate::qstate::{DensityMatrix, PartialTrace, PureState};
use crate::topology::CouplingTopology;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxEntOptions {
    pub max_iterations: usize,
    /// Target for the largest trace-norm marginal deviation.
    pub tolerance: f64,
    /// Rank counts eigenvalues above this multiple of the largest one.
    pub rank_threshold: f64,
    /// Marginal eigenvalues at or below this are treated as zero when the
    /// common support is computed.
    pub support_threshold: f64,
}

impl Default for MaxEntOptions {
    fn default() -> Self {
        MaxEntOptions {
            max_iterations: 5000,
            tolerance: 1e-6,
            rank_threshold: 1e-8,
            support_threshold: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HyperedgeMultiplier {
    pub hyperedge: Vec<usize>,
    #[serde(serialize_with = "json::cmat::serialize")]
    pub lambda: CMat,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxEntResult {
    pub state: DensityMatrix,
    /// Largest `‖tr_ē σ - tr_ē |ψ><ψ|‖₁` over hyperedges, as computed on
    /// the returned state.
    pub achieved_deviation: f64,
    pub rank: usize,
    /// Dimension of the common support `K` the search ran in.
    pub support_dim: usize,
    pub entropy: f64,
    pub multipliers: Vec<HyperedgeMultiplier>,
    pub iterations: usize,
    pub converged: bool,
    /// The rank is a lower bound on the largest rank over all states with
    /// these marginals, not the exact value.
    pub rank_is_lower_bound: bool,
}

struct Problem {
    dims: Vec<usize>,
    /// Columns span `K`.
    q: CMat,
    splits: Vec<Factorization>,
    targets: Vec<CMat>,
}

struct Evaluation {
    value: f64,
    sigma: CMat,
    gradient: Vec<CMat>,
    deviation: f64,
}

impl Problem {
    fn full_operator(&self, lambdas: &[CMat]) -> CMat {
        let total = self.q.nrows();
        let mut m = CMat::zeros(total, total);
        for (f, l) in self.splits.iter().zip(lambdas) {
            linalg::add_embedded(f, l, &mut m, ONE);
        }
        m
    }

    fn evaluate(&self, lambdas: &[CMat]) -> Result<Evaluation> {
        let m = self.q.adjoint() * self.full_operator(lambdas) * &self.q;
        let (vals, vecs) = linalg::eigh(&m)?;
        let top = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = vals.iter().map(|v| (v - top).exp()).collect();
        let z: f64 = weights.iter().sum();
        let log_z = top + z.ln();
        let r = m.nrows();
        let mut small = CMat::zeros(r, r);
        for (j, w) in weights.iter().enumerate() {
            let v = vecs.column(j);
            small += (v * v.adjoint()).scale(w / z);
        }
        let sigma = &self.q * small * self.q.adjoint();
        let mut value = log_z;
        let mut gradient = Vec::with_capacity(lambdas.len());
        let mut deviation = 0.0f64;
        for ((f, target), l) in self.splits.iter().zip(&self.targets).zip(lambdas) {
            value -= linalg::trace(&(l * target)).re;
            let g = linalg::reduced_matrix(f, &sigma) - target;
            let g = (&g + g.adjoint()).scale(0.5);
            deviation = deviation.max(linalg::trace_norm(&g));
            gradient.push(g);
        }
        Ok(Evaluation {
            value,
            sigma,
            gradient,
            deviation,
        })
    }
}

fn inner(a: &[CMat], b: &[CMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.zip_fold(y, 0.0, |acc, u, v| acc + (u.conj() * v).re)).sum()
}

/// Orthonormal basis of `∩_e supp(r_e) ⊗ H_ē`, as columns.
fn common_support(psi: &PureState, topology: &CouplingTopology, threshold: f64) -> Result<CMat> {
    let dims = psi.dims();
    let total = psi.dim();
    let mut s = CMat::zeros(total, total);
    for e in topology.hyperedges() {
        let r = psi.partial_trace(e)?;
        let (vals, vecs) = linalg::eigh(r.matrix())?;
        let mut p = CMat::zeros(vals.len(), vals.len());
        for (j, &v) in vals.iter().enumerate() {
            if v > threshold {
                let col = vecs.column(j);
                p += col * col.adjoint();
            }
        }
        let f = Factorization::new(dims, &[e], true)?;
        linalg::add_embedded(&f, &p, &mut s, ONE);
    }
    let m = topology.hyperedges().len() as f64;
    let (vals, vecs) = linalg::eigh(&s)?;
    let cols: Vec<usize> = (0..total).filter(|&j| vals[j] >= m - 1e-8).collect();
    if cols.is_empty() {
        // cannot happen for exact marginals: psi itself lies in K
        return Err(Error::Eigensolver {
            dim: total,
            detail: "common marginal support is empty".into(),
        });
    }
    Ok(CMat::from_columns(&cols.iter().map(|&j| vecs.column(j)).collect::<Vec<_>>()))
}

/// Maximum-entropy state among those sharing `psi`'s hyperedge marginals.
pub fn max_entropy_state(psi: &PureState, topology: &CouplingTopology, opts: MaxEntOptions) -> Result<MaxEntResult> {
    if psi.dims() != topology.dims() {
        return Err(Error::DimensionMismatch(format!(
            "state dims {:?}, topology dims {:?}",
            psi.dims(),
            topology.dims()
        )));
    }
    let dims = psi.dims().to_vec();
    let q = common_support(psi, topology, opts.support_threshold)?;
    let mut splits = Vec::new();
    let mut targets = Vec::new();
    for e in topology.hyperedges() {
        splits.push(Factorization::new(&dims, &[e], true)?);
        targets.push(psi.partial_trace(e)?.matrix().clone());
    }
    let problem = Problem {
        dims,
        q,
        splits,
        targets,
    };

    let mut lambdas: Vec<CMat> = problem.targets.iter().map(|t| CMat::zeros(t.nrows(), t.ncols())).collect();
    let mut current = problem.evaluate(&lambdas)?;
    let mut iterations = 0usize;
    let mut step = 1.0f64;
    let mut previous: Option<(Vec<CMat>, Vec<CMat>)> = None;
    while current.deviation > opts.tolerance && iterations < opts.max_iterations {
        iterations += 1;
        let g = &current.gradient;
        let g2 = inner(g, g);
        if let Some((prev_l, prev_g)) = &previous {
            let s: Vec<CMat> = lambdas.iter().zip(prev_l).map(|(a, b)| a - b).collect();
            let y: Vec<CMat> = g.iter().zip(prev_g).map(|(a, b)| a - b).collect();
            let sy = inner(&s, &y);
            if sy > 0.0 {
                step = (inner(&s, &s) / sy).clamp(1e-6, 1e6);
            }
        }
        // Armijo backtracking on the dual objective
        let mut t = step;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<CMat> = lambdas.iter().zip(g).map(|(l, gi)| l - gi.scale(t)).collect();
            let eval = problem.evaluate(&trial)?;
            if eval.value <= current.value - 1e-4 * t * g2 {
                accepted = Some((trial, eval));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, eval)) = accepted else {
            // no decrease representable in floating point
            break;
        };
        previous = Some((std::mem::replace(&mut lambdas, trial), current.gradient));
        current = eval;
        step = t;
    }

    let state = DensityMatrix::from_trusted(problem.dims.clone(), current.sigma);
    let eig = state.eigenvalues_desc()?;
    let top = eig.first().copied().unwrap_or(0.0);
    let rank = eig.iter().filter(|&&x| x > opts.rank_threshold * top).count();
    let membership = check_membership(&state, psi, topology, Some(opts.tolerance))?;
    let entropy = linalg::entropy_of(&eig.iter().map(|x| x.max(0.0)).collect::<Vec<_>>());
    let multipliers = topology
        .hyperedges()
        .iter()
        .zip(lambdas)
        .map(|(e, lambda)| HyperedgeMultiplier {
            hyperedge: e.clone(),
            lambda,
        })
        .collect();
    Ok(MaxEntResult {
        achieved_deviation: membership.max_deviation,
        converged: membership.passed,
        state,
        rank,
        support_dim: problem.q.ncols(),
        entropy,
        multipliers,
        iterations,
        rank_is_lower_bound: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::qstate::reference::{basis_state, bell, ghz, haar_random, twisted_pair};
    use crate::qstate::{correlated_decomposition, dephased_correlated_state, diagonal_density, TripartiteSplit};

    fn bell13_zero() -> PureState {
        let zero = basis_state(&[2], &[0]).unwrap();
        PureState::tensor_placed(&[2, 2, 2], &[(&[0, 2], &bell()), (&[1], &zero)]).unwrap()
    }

    #[test]
    fn ghz_pairwise_is_dephased_mixture() {
        let g = ghz(3).unwrap();
        let topo = CouplingTopology::pairwise(vec![2, 2, 2]).unwrap();
        let r = max_entropy_state(&g, &topo, MaxEntOptions::default()).unwrap();
        let mut d = vec![0.0; 8];
        d[0] = 0.5;
        d[7] = 0.5;
        let expected = diagonal_density(vec![2, 2, 2], &d).unwrap();
        assert!(r.converged);
        assert_eq!(r.rank, 2);
        assert_eq!(r.support_dim, 2);
        assert!(r.state.trace_distance(&expected).unwrap() < 1e-10);
        assert!(r.achieved_deviation <= 1e-6);
    }

    #[test]
    fn product_state_is_its_own_maximizer() {
        let psi = basis_state(&[2, 2, 2], &[0, 0, 0]).unwrap();
        let topo = CouplingTopology::new(vec![2, 2, 2], vec![vec![0], vec![1], vec![2]]).unwrap();
        let r = max_entropy_state(&psi, &topo, MaxEntOptions::default()).unwrap();
        assert_eq!(r.rank, 1);
        assert!(r.state.trace_distance(&psi.density()).unwrap() < 1e-12);
    }

    #[test]
    fn bell_ends_line_has_rank_four() {
        let psi = bell13_zero();
        let line = CouplingTopology::line(vec![2, 2, 2]).unwrap();
        let r = max_entropy_state(&psi, &line, MaxEntOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.rank >= 4);
        // explicit rank-4 member: uniform mixture of the four phase-rotated
        // and bit-shifted Bell pairs on the ends, times |0> in the middle
        let zero = basis_state(&[2], &[0]).unwrap();
        let mut parts = Vec::new();
        for twist in 0..2 {
            for shift in 0..2 {
                let pair = twisted_pair(2, twist).unwrap();
                let x = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
                let amps = if shift == 1 {
                    linalg::kron(&CMat::identity(2, 2), &x) * pair.amplitudes()
                } else {
                    pair.amplitudes().clone()
                };
                let pair = PureState::new(vec![2, 2], amps).unwrap();
                parts.push(PureState::tensor_placed(&[2, 2, 2], &[(&[0, 2], &pair), (&[1], &zero)]).unwrap());
            }
        }
        let weighted: Vec<(f64, &crate::linalg::CVec)> = parts.iter().map(|p| (0.25, p.amplitudes())).collect();
        let mix = DensityMatrix::mixture(vec![2, 2, 2], &weighted).unwrap();
        assert_eq!(mix.rank(1e-8).unwrap(), 4);
        assert!(check_membership(&mix, &psi, &line, None).unwrap().passed);
        assert!(r.entropy >= mix.entropy().unwrap() - 1e-9);
    }

    #[test]
    fn beats_dephased_member_on_perfectly_correlated_states() {
        let id = CMat::identity(2, 2);
        let split = TripartiteSplit::ends(3).unwrap();
        let line = CouplingTopology::line(vec![2, 2, 2]).unwrap();
        for psi in [ghz(3).unwrap(), bell13_zero()] {
            let dec = correlated_decomposition(&psi, &split, &id, &id).unwrap();
            let dephased = dephased_correlated_state(&dec).unwrap();
            let r = max_entropy_state(&psi, &line, MaxEntOptions::default()).unwrap();
            assert!(r.converged);
            assert!(check_membership(&r.state, &psi, &line, Some(r.achieved_deviation + 1e-15)).unwrap().passed);
            assert!(r.entropy >= dephased.entropy().unwrap() - 1e-9);
            assert!(r.rank >= dephased.rank(1e-8).unwrap());
        }
    }

    #[test]
    fn generic_three_qubit_state_is_pinned_by_line_marginals() {
        let line = CouplingTopology::line(vec![2, 2, 2]).unwrap();
        for seed in 0..5 {
            let psi = haar_random(&[2, 2, 2], seed).unwrap();
            let r = max_entropy_state(&psi, &line, MaxEntOptions::default()).unwrap();
            assert!(r.converged);
            assert!(r.achieved_deviation <= 1e-6);
        }
    }

    #[test]
    fn interior_solution_by_dual_ascent() {
        // mixed-looking marginals: two qubits with singleton hyperedges only
        let psi = haar_random(&[2, 2], 11).unwrap();
        let topo = CouplingTopology::new(vec![2, 2], vec![vec![0], vec![1]]).unwrap();
        let r = max_entropy_state(&psi, &topo, MaxEntOptions::default()).unwrap();
        assert!(r.converged, "{} after {}", r.achieved_deviation, r.iterations);
        // maximizer is the product of the marginals
        let a = psi.partial_trace(&[0]).unwrap();
        let b = psi.partial_trace(&[1]).unwrap();
        let prod = linalg::kron(a.matrix(), b.matrix());
        assert!((r.state.matrix() - prod).norm() < 1e-5);
        assert_eq!(r.rank, 4);
    }
}
