//! Evaluation of the spectral-gap inequalities.
//!
//! Every evaluator is a formula over a [`Spectrum`] and scalar inputs.
//! Hypotheses such as membership of a state in the marginal-compatible set
//! are certified by the caller, typically with [`check_membership`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Spectrum;
use crate::json;
use crate::linalg::{self, CMat};
use crate::qstate::{DensityMatrix, JointDistribution, PartialTrace, PureState, SchmidtData};
use crate::topology::CouplingTopology;

/// Default membership tolerance on per-hyperedge trace-norm deviations.
pub const MEMBERSHIP_TOL: f64 = 1e-8;
/// Default eigenvalue threshold for counting the rank of a member state.
pub const RANK_THRESHOLD: f64 = 1e-8;
/// `g(θ, F)` at or below this makes the trial bound vacuous.
pub const TRIAL_G_FLOOR: f64 = 1e-12;

const PROB_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundName {
    /// `Σ_j (E_j - E_0) ρ↓_{j+1} <= (1 - F²) E_tot`.
    Unification,
    /// `Σ_j p↓_{j+1,j+1} (E_j - E_0) <= C (sqrt(1-C) + sqrt(1-F²))² E_tot`.
    Correlation,
    /// `E_1 - E_0 <= (1 - F²) / g(θ, F) E_tot`.
    Trial,
    /// `E_{k-1} - E_0 <= (1 - F²) E_tot` for a `k`-dimensional code.
    Qecc,
}

impl BoundName {
    pub const ALL: [BoundName; 4] = [
        BoundName::Unification,
        BoundName::Correlation,
        BoundName::Trial,
        BoundName::Qecc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundName::Unification => "unification",
            BoundName::Correlation => "correlation",
            BoundName::Trial => "trial",
            BoundName::Qecc => "qecc",
        }
    }
}

impl fmt::Display for BoundName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundName::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown bound {s:?}")))
    }
}

/// Inputs echoed into a report. Absent fields did not enter the bound.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub e0: f64,
    pub e_tot: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Sorted weights that multiply the excitation energies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound: BoundName,
    pub lhs: f64,
    #[serde(with = "json::extended_f64")]
    pub rhs: f64,
    #[serde(with = "json::extended_f64")]
    pub slack: f64,
    pub satisfied: bool,
    pub tolerance: f64,
    /// The right-hand side carries no information (it is infinite or at
    /// least `E_tot`).
    pub vacuous: bool,
    pub inputs: BoundInputs,
}

impl BoundReport {
    /// `boundName,seed,F,C,theta,lhs,rhs,slack,satisfied`; absent inputs
    /// are left empty.
    pub fn csv_row(&self, seed: u64) -> String {
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.bound,
            seed,
            opt(self.inputs.f),
            opt(self.inputs.c),
            opt(self.inputs.theta),
            self.lhs,
            fmt_extended(self.rhs),
            fmt_extended(self.slack),
            self.satisfied
        )
    }
}

pub const CSV_HEADER: &str = "boundName,seed,F,C,theta,lhs,rhs,slack,satisfied";

fn fmt_extended(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else {
        x.to_string()
    }
}

/// Default satisfaction tolerance `1e-9 * max(E_tot, 1)`.
pub fn default_tolerance(e_tot: f64) -> f64 {
    1e-9 * e_tot.max(1.0)
}

pub(crate) fn make_report(
    bound: BoundName,
    spectrum: &Spectrum,
    lhs: f64,
    rhs: f64,
    tolerance: Option<f64>,
    mut inputs: BoundInputs,
) -> BoundReport {
    let e_tot = spectrum.e_tot();
    let tolerance = tolerance.unwrap_or_else(|| default_tolerance(e_tot));
    inputs.e0 = spectrum.e0();
    inputs.e_tot = e_tot;
    let (lhs, rhs) = if e_tot == 0.0 {
        inputs.notes.push("E_tot = 0: every level is a ground level".into());
        (0.0, 0.0)
    } else {
        (lhs, rhs)
    };
    let vacuous = e_tot > 0.0 && rhs >= e_tot;
    let slack = rhs - lhs;
    BoundReport {
        bound,
        lhs,
        rhs,
        slack,
        satisfied: slack >= -tolerance,
        tolerance,
        vacuous,
        inputs,
    }
}

fn check_f(f: f64) -> Result<f64> {
    if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&f) || f.is_nan() {
        return Err(Error::InvalidArgument(format!("overlap F = {f} outside [0, 1]")));
    }
    Ok(f.clamp(0.0, 1.0))
}

fn sorted_probabilities(p: &[f64], what: &str) -> Result<Vec<f64>> {
    if p.iter().any(|&x| x < -PROB_TOL || !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("{what} has a negative or non-finite entry")));
    }
    let mut v: Vec<f64> = p.iter().map(|&x| x.clamp(0.0, 1.0)).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    Ok(v)
}

/// `Σ_j (E_j - E_0) w_j` over the leading levels.
fn excitation_sum(spectrum: &Spectrum, weights: &[f64]) -> f64 {
    let e0 = spectrum.e0();
    spectrum
        .energies()
        .iter()
        .zip(weights)
        .map(|(e, w)| (e - e0) * w)
        .sum()
}

/// `λ(A)↓·λ(B)↑ <= tr(AB) <= λ(A)↓·λ(B)↓`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceBounds {
    pub lower: f64,
    pub upper: f64,
    pub tr_ab: f64,
}

pub fn trace_inequality_bounds(a: &CMat, b: &CMat) -> Result<TraceBounds> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} and {:?} matrices",
            a.shape(),
            b.shape()
        )));
    }
    let la = linalg::eigvalsh(a)?;
    let lb = linalg::eigvalsh(b)?;
    let n = la.len();
    // eigvalsh is ascending
    let upper = (0..n).map(|i| la[i] * lb[i]).sum();
    let lower = (0..n).map(|i| la[i] * lb[n - 1 - i]).sum();
    let tr_ab = linalg::trace(&(a * b)).re;
    Ok(TraceBounds { lower, upper, tr_ab })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperedgeDeviation {
    pub hyperedge: Vec<usize>,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    pub deviations: Vec<HyperedgeDeviation>,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl MembershipReport {
    /// Error describing the worst hyperedge when the check failed.
    pub fn require(&self) -> Result<()> {
        if self.passed {
            return Ok(());
        }
        let worst = self
            .deviations
            .iter()
            .max_by(|a, b| a.deviation.total_cmp(&b.deviation))
            .expect("a failed check has a hyperedge");
        Err(Error::MembershipFailed {
            hyperedge: worst.hyperedge.clone(),
            deviation: worst.deviation,
        })
    }
}

/// Trace-norm deviations `‖tr_ē ρ - tr_ē |ψ><ψ|‖₁` on every hyperedge.
pub fn check_membership(
    rho: &DensityMatrix,
    psi: &PureState,
    topology: &CouplingTopology,
    tolerance: Option<f64>,
) -> Result<MembershipReport> {
    if rho.dims() != psi.dims() || psi.dims() != topology.dims() {
        return Err(Error::DimensionMismatch(format!(
            "state dims {:?}, reference dims {:?}, topology dims {:?}",
            rho.dims(),
            psi.dims(),
            topology.dims()
        )));
    }
    let tolerance = tolerance.unwrap_or(MEMBERSHIP_TOL);
    let mut deviations = Vec::with_capacity(topology.hyperedges().len());
    for e in topology.hyperedges() {
        let a = rho.partial_trace(e)?;
        let b = psi.partial_trace(e)?;
        deviations.push(HyperedgeDeviation {
            hyperedge: e.clone(),
            deviation: linalg::trace_norm(&(a.matrix() - b.matrix())),
        });
    }
    let max_deviation = deviations.iter().map(|d| d.deviation).fold(0.0, f64::max);
    Ok(MembershipReport {
        passed: max_deviation <= tolerance,
        deviations,
        max_deviation,
        tolerance,
    })
}

/// `Σ_j (E_j - E_0) ρ↓_{j+1} <= (1 - F²) E_tot`, where `ρ` has the given
/// eigenvalues and shares all hyperedge marginals with a state of ground
/// overlap `F`.
pub fn unification_bound(
    spectrum: &Spectrum,
    rho_eigenvalues: &[f64],
    f: f64,
    tolerance: Option<f64>,
) -> Result<BoundReport> {
    if rho_eigenvalues.len() > spectrum.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} eigenvalues for a {}-dimensional space",
            rho_eigenvalues.len(),
            spectrum.dim()
        )));
    }
    let f = check_f(f)?;
    let rho = sorted_probabilities(rho_eigenvalues, "eigenvalue vector")?;
    let total: f64 = rho.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidArgument(format!("eigenvalues sum to {total}")));
    }
    let lhs = excitation_sum(spectrum, &rho);
    let rhs = (1.0 - f * f) * spectrum.e_tot();
    let inputs = BoundInputs {
        f: Some(f),
        weights: Some(rho),
        ..Default::default()
    };
    Ok(make_report(BoundName::Unification, spectrum, lhs, rhs, tolerance, inputs))
}

/// `Σ_j p↓_{j+1,j+1} (E_j - E_0) <= C (sqrt(1-C) + sqrt(1-F²))² E_tot`,
/// with `p_{j,j}` the matched outcome probabilities.
pub fn correlation_bound(
    spectrum: &Spectrum,
    joint: &JointDistribution,
    f: f64,
    tolerance: Option<f64>,
) -> Result<BoundReport> {
    let f = check_f(f)?;
    let matched = sorted_probabilities(&joint.matched_descending(), "matched probabilities")?;
    let corr = joint.correlation.clamp(0.0, 1.0);
    let lhs = excitation_sum(spectrum, &matched);
    let root = (1.0 - corr).sqrt() + (1.0 - f * f).max(0.0).sqrt();
    let rhs = corr * root * root * spectrum.e_tot();
    let mut notes = Vec::new();
    if f == 1.0 {
        notes.push("F = 1: right-hand side is C(1-C) E_tot".into());
    }
    if corr == 1.0 {
        notes.push("C = 1: right-hand side is (1-F²) E_tot".into());
    }
    let inputs = BoundInputs {
        f: Some(f),
        c: Some(corr),
        weights: Some(matched),
        notes,
        ..Default::default()
    };
    Ok(make_report(BoundName::Correlation, spectrum, lhs, rhs, tolerance, inputs))
}

/// `g(θ, F) = 1 - (F cos θ + sqrt(1-F²) sin θ)²`.
pub fn trial_g(f: f64, theta: f64) -> f64 {
    let s = f * theta.cos() + (1.0 - f * f).max(0.0).sqrt() * theta.sin();
    1.0 - s * s
}

/// `E_1 - E_0 <= (1 - F²) / g(θ, F) E_tot` for a member state at angle `θ`
/// from the reference state.
pub fn trial_bound(spectrum: &Spectrum, f: f64, theta: f64, tolerance: Option<f64>) -> Result<BoundReport> {
    let f = check_f(f)?;
    let half_pi = std::f64::consts::FRAC_PI_2;
    if !(-1e-12..=half_pi + 1e-12).contains(&theta) || theta.is_nan() {
        return Err(Error::InvalidArgument(format!("angle {theta} outside [0, π/2]")));
    }
    let theta = theta.clamp(0.0, half_pi);
    let g = trial_g(f, theta);
    let lhs = spectrum.gap();
    let mut notes = Vec::new();
    let rhs = if g <= TRIAL_G_FLOOR {
        notes.push("g(θ, F) vanishes: no constraint".into());
        f64::INFINITY
    } else {
        (1.0 - f * f) / g * spectrum.e_tot()
    };
    let inputs = BoundInputs {
        f: Some(f),
        theta: Some(theta),
        g: Some(g),
        notes,
        ..Default::default()
    };
    let mut report = make_report(BoundName::Trial, spectrum, lhs, rhs, tolerance, inputs);
    report.vacuous |= rhs.is_infinite();
    Ok(report)
}

/// `Σ_k d_k²` over the groups of equal nonzero Schmidt coefficients.
pub fn n_span_product(schmidt: &SchmidtData) -> usize {
    schmidt.degeneracy.iter().map(|d| d * d).sum()
}

/// Rank of a certified member state: a lower bound on the ground
/// degeneracy of every Hamiltonian respecting `topology` that has `psi` as
/// an exact ground state.
pub fn degeneracy_bound_exact(
    psi: &PureState,
    topology: &CouplingTopology,
    rho: &DensityMatrix,
    membership_tol: Option<f64>,
    rank_threshold: Option<f64>,
) -> Result<usize> {
    check_membership(rho, psi, topology, membership_tol)?.require()?;
    rho.rank(rank_threshold.unwrap_or(RANK_THRESHOLD))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{diagonalize, DegeneracyTol};
    use crate::linalg::{c, CVec};
    use crate::qstate::reference::{bell, ghz};
    use crate::qstate::{diagonal_density, schmidt_decompose, SchmidtOptions};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn diag(v: &[f64]) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(v.len(), v.iter().map(|&x| c(x, 0.0))))
    }

    fn spectrum(energies: &[f64]) -> Spectrum {
        diagonalize(&diag(energies), DegeneracyTol::default()).unwrap()
    }

    #[test]
    fn trace_inequality_examples() {
        let t = trace_inequality_bounds(&diag(&[2.0, 1.0]), &diag(&[4.0, 3.0])).unwrap();
        assert_eq!((t.lower, t.upper, t.tr_ab), (10.0, 11.0, 11.0));
        let t = trace_inequality_bounds(&diag(&[2.0, 1.0]), &diag(&[3.0, 4.0])).unwrap();
        assert_eq!(t.tr_ab, 10.0);
        assert_eq!(t.lower, 10.0);
        assert!(trace_inequality_bounds(&diag(&[1.0]), &diag(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn trace_inequality_random_pairs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        for _ in 0..500 {
            let n = rng.random_range(2..=8);
            let mut herm = || {
                let m = CMat::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                (&m + m.adjoint()).scale(0.5)
            };
            let (a, b) = (herm(), herm());
            let t = trace_inequality_bounds(&a, &b).unwrap();
            let tol = 1e-9 * linalg::operator_norm(&a) * linalg::operator_norm(&b);
            assert!(t.lower <= t.tr_ab + tol && t.tr_ab <= t.upper + tol);
        }
    }

    #[test]
    fn membership_examples() {
        let g = ghz(3).unwrap();
        let pairwise = CouplingTopology::pairwise(vec![2, 2, 2]).unwrap();
        let self_report = check_membership(&g.density(), &g, &pairwise, None).unwrap();
        assert!(self_report.passed);
        assert!(self_report.max_deviation < 1e-15);

        let mut d = vec![0.0; 8];
        d[0] = 0.5;
        d[7] = 0.5;
        let dephased = diagonal_density(vec![2, 2, 2], &d).unwrap();
        assert!(check_membership(&dephased, &g, &pairwise, None).unwrap().passed);

        let mixed = diagonal_density(vec![2, 2, 2], &[0.125; 8]).unwrap();
        let r = check_membership(&mixed, &g, &pairwise, None).unwrap();
        assert!(!r.passed);
        // pair marginal of GHZ is diag(1/2,0,0,1/2); of I/8 it is I/4
        for dev in &r.deviations {
            assert!((dev.deviation - 1.0).abs() < 1e-12);
        }
        assert!(matches!(r.require(), Err(Error::MembershipFailed { .. })));
    }

    #[test]
    fn unification_examples() {
        let s = spectrum(&[0.0, 0.3, 1.0, 2.0]);
        let r = unification_bound(&s, &[1.0, 0.0, 0.0], 0.2, None).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.satisfied);
        // eigs (1/2, 1/2) give E_1 - E_0 <= 2 (1 - F²) E_tot after doubling
        let f = 0.9;
        let r = unification_bound(&s, &[0.5, 0.5], f, None).unwrap();
        assert!((r.lhs - 0.15).abs() < 1e-15);
        assert!((2.0 * r.rhs / s.e_tot() - 2.0 * (1.0 - f * f)).abs() < 1e-12);
        // evaluator sorts the eigenvalues itself
        let r2 = unification_bound(&s, &[0.1, 0.6, 0.3], f, None).unwrap();
        assert!((r2.lhs - (0.3 * 0.3 + 0.1 * 1.0)).abs() < 1e-15);
        assert!(unification_bound(&s, &[0.2; 5], f, None).is_err());
        assert!(unification_bound(&s, &[0.5, 0.4], f, None).is_err());
    }

    #[test]
    fn constant_hamiltonian_reports_zero() {
        let s = spectrum(&[2.0, 2.0]);
        let r = unification_bound(&s, &[0.5, 0.5], 0.3, None).unwrap();
        assert_eq!((r.lhs, r.rhs, r.satisfied), (0.0, 0.0, true));
    }

    #[test]
    fn correlation_special_cases() {
        let s = spectrum(&[0.0, 0.0, 1.0, 1.0]);
        let perfect = JointDistribution::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]], vec![(0, 0), (1, 1)]).unwrap();
        let r = correlation_bound(&s, &perfect, 1.0, None).unwrap();
        assert_eq!(r.rhs, 0.0);
        assert_eq!(r.lhs, 0.0);
        assert!(r.satisfied);
        assert_eq!(r.inputs.notes.len(), 2);

        let anti = JointDistribution::new(vec![vec![0.0, 0.5], vec![0.5, 0.0]], vec![(0, 0), (1, 1)]).unwrap();
        let r = correlation_bound(&s, &anti, 0.7, None).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));

        // C = 1, F < 1 reduces to (1 - F²) E_tot
        let r = correlation_bound(&s, &perfect, 0.6, None).unwrap();
        assert!((r.rhs - 0.64).abs() < 1e-15);
    }

    #[test]
    fn trial_examples() {
        let s = spectrum(&[0.0, 0.1, 1.0]);
        let f = 0.9;
        let r = trial_bound(&s, f, 0.0, None).unwrap();
        assert!((r.rhs - s.e_tot()).abs() < 1e-12);
        assert!(r.vacuous);
        let r = trial_bound(&s, f, std::f64::consts::FRAC_PI_2, None).unwrap();
        assert!((r.rhs - 0.19 / 0.81).abs() < 1e-12);
        assert!((r.rhs - 0.234_567_901_234_567_9).abs() < 1e-12);
        assert!(!r.vacuous);
        let r = trial_bound(&s, 1.0, 0.0, None).unwrap();
        assert!(r.rhs.is_infinite() && r.vacuous && r.satisfied);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"rhs\":\"+inf\""));
        assert!(trial_bound(&s, f, 2.0, None).is_err());
    }

    #[test]
    fn n_span_examples() {
        let sd = schmidt_decompose(&bell(), &[0], SchmidtOptions::default()).unwrap();
        assert_eq!(n_span_product(&sd), 4);
        let psi = PureState::normalized(
            vec![2, 2],
            CVec::from_vec(vec![c(0.7f64.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.3f64.sqrt(), 0.0)]),
        )
        .unwrap();
        let sd = schmidt_decompose(&psi, &[0], SchmidtOptions::default()).unwrap();
        assert_eq!(n_span_product(&sd), 2);
        assert_eq!(n_span_product(&sd), sd.schmidt_number());
        let prod = crate::qstate::reference::basis_state(&[2, 2], &[0, 0]).unwrap();
        let sd = schmidt_decompose(&prod, &[0], SchmidtOptions::default()).unwrap();
        assert_eq!(n_span_product(&sd), 1);
    }

    #[test]
    fn degeneracy_bound_examples() {
        let g = ghz(3).unwrap();
        let pairwise = CouplingTopology::pairwise(vec![2, 2, 2]).unwrap();
        let mut d = vec![0.0; 8];
        d[0] = 0.5;
        d[7] = 0.5;
        let rho = diagonal_density(vec![2, 2, 2], &d).unwrap();
        assert_eq!(degeneracy_bound_exact(&g, &pairwise, &rho, None, None).unwrap(), 2);

        let zero = crate::qstate::reference::basis_state(&[2, 2, 2], &[0, 0, 0]).unwrap();
        assert_eq!(degeneracy_bound_exact(&zero, &pairwise, &zero.density(), None, None).unwrap(), 1);

        let mixed = diagonal_density(vec![2, 2, 2], &[0.125; 8]).unwrap();
        assert!(matches!(
            degeneracy_bound_exact(&g, &pairwise, &mixed, None, None),
            Err(Error::MembershipFailed { .. })
        ));
    }

    #[test]
    fn csv_row_layout() {
        let s = spectrum(&[0.0, 1.0]);
        let r = trial_bound(&s, 1.0, 0.0, None).unwrap();
        assert_eq!(r.csv_row(7), "trial,7,1,,0,1,+inf,+inf,true");
        assert_eq!(CSV_HEADER.split(',').count(), r.csv_row(0).split(',').count());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn report_invariants(
            energies in prop::collection::vec(-5.0f64..5.0, 2..10),
            weights in prop::collection::vec(0.0f64..1.0, 1..10),
            f in 0.0f64..1.0,
            theta in 0.0f64..std::f64::consts::FRAC_PI_2,
            a in 0.1f64..10.0,
            b in -3.0f64..3.0,
        ) {
            let s = spectrum(&energies);
            let n = weights.len().min(s.dim());
            let total: f64 = weights[..n].iter().sum();
            prop_assume!(total > 1e-3);
            let eigs: Vec<f64> = weights[..n].iter().map(|w| w / total).collect();
            let shifted: Vec<f64> = energies.iter().map(|e| a * e + b).collect();
            let s2 = spectrum(&shifted);
            for (r1, r2) in [
                (unification_bound(&s, &eigs, f, None).unwrap(), unification_bound(&s2, &eigs, f, None).unwrap()),
                (trial_bound(&s, f, theta, None).unwrap(), trial_bound(&s2, f, theta, None).unwrap()),
            ] {
                prop_assert_eq!(r1.satisfied, r1.slack >= -r1.tolerance);
                if s.e_tot() > 1e-6 && r1.rhs.is_finite() {
                    prop_assert!((r1.lhs / s.e_tot() - r2.lhs / s2.e_tot()).abs() < 1e-9);
                    prop_assert!((r1.rhs / s.e_tot() - r2.rhs / s2.e_tot()).abs() < 1e-9);
                }
            }
        }
    }
}
