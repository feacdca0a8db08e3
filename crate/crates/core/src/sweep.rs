//! Seeded batches of bound evaluations with reproducible CSV and JSON
//! output.

use std::fmt::Write as _;
use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{
    check_membership, correlation_bound, trial_bound, unification_bound, BoundName, BoundReport, CSV_HEADER,
};
use crate::error::{Error, Result};
use crate::extremal::{max_entropy_state, MaxEntOptions};
use crate::hamiltonian::{sample_random_respecting, spectrum_of, HamiltonianSpec, NamedModel};
use crate::linalg::{CMat, DimCap};
use crate::qecc::{qecc_bound, subspace_agreement_check, AgreementReport, CodeSubspace};
use crate::qstate::reference::StateRecipe;
use crate::qstate::{
    correlated_decomposition, dephased_correlated_state, joint_measurement_distribution, overlap_with_ground,
    AssignmentPolicy, DensityMatrix, PureState, TripartiteSplit,
};
use crate::topology::{respects, CouplingTopology};

pub const CSV_VERSION_LINE: &str = "# gapbound sweep csv v1";

/// Where each instance's Hamiltonian comes from.
#[derive(Debug, Clone)]
pub enum HamiltonianSource {
    /// One random term per hyperedge, coefficients `N(0, 1) * scale`.
    Random { scale: f64 },
    Named(NamedModel),
    Spec(HamiltonianSpec),
}

/// Member state whose spectrum enters the unification bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemberState {
    /// Dephased perfectly correlated state in the computational bases of
    /// the split's outer groups.
    Dephased,
    /// Maximum-entropy state with the reference state's marginals.
    MaxEntropy,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub topology: CouplingTopology,
    pub state: StateRecipe,
    pub hamiltonians: HamiltonianSource,
    pub seeds: Range<u64>,
    pub bounds: Vec<BoundName>,
    /// Satisfaction tolerance; `None` uses `1e-9 * max(E_tot, 1)`.
    pub tolerance: Option<f64>,
    pub membership_tolerance: f64,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Outer groups for the correlation bound and the dephased member.
    pub split: Option<TripartiteSplit>,
    pub member: MemberState,
    /// Partner state for the trial bound.
    pub trial_partner: StateRecipe,
    /// Code whose first basis state is the reference state of the `qecc`
    /// bound.
    pub code: Option<CodeSubspace>,
}

impl SweepConfig {
    pub fn new(topology: CouplingTopology, state: StateRecipe, seeds: Range<u64>, bounds: Vec<BoundName>) -> Self {
        SweepConfig {
            topology,
            state,
            hamiltonians: HamiltonianSource::Random { scale: 1.0 },
            seeds,
            bounds,
            tolerance: None,
            membership_tolerance: crate::bounds::MEMBERSHIP_TOL,
            jobs: None,
            split: None,
            member: MemberState::Dephased,
            trial_partner: StateRecipe::BellEndsTwisted,
            code: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidArgument(format!("empty seed range {:?}", self.seeds)));
        }
        if self.bounds.is_empty() {
            return Err(Error::InvalidArgument("no bound selected".into()));
        }
        if self.bounds.contains(&BoundName::Qecc) && self.code.is_none() {
            return Err(Error::InvalidArgument("the qecc bound needs a code".into()));
        }
        if let Some(code) = &self.code {
            if code.dims() != self.topology.dims() {
                return Err(Error::DimensionMismatch(format!(
                    "code dims {:?}, topology dims {:?}",
                    code.dims(),
                    self.topology.dims()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub seed: u64,
    pub report: BoundReport,
}

/// An instance whose bound hypotheses could not be certified.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisFailure {
    pub seed: u64,
    pub bound: BoundName,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub rows: usize,
    pub violations: usize,
    pub hypothesis_failures: usize,
    pub min_slack: Option<f64>,
    pub max_slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<HypothesisFailure>,
    pub summary: SweepSummary,
}

impl SweepOutcome {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_VERSION_LINE);
        out.push('\n');
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.report.csv_row(row.seed));
            out.push('\n');
        }
        for f in &self.failures {
            let _ = writeln!(out, "# hypothesis-failure seed={} bound={} reason={}", f.seed, f.bound, f.reason);
        }
        let s = &self.summary;
        let opt = |x: Option<f64>| x.map_or_else(|| "none".to_string(), |v| v.to_string());
        let _ = writeln!(
            out,
            "# summary rows={} violations={} hypothesis_failures={} min_slack={} max_slack={}",
            s.rows,
            s.violations,
            s.hypothesis_failures,
            opt(s.min_slack),
            opt(s.max_slack)
        );
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep outcome serializes")
    }
}

/// Data shared by all instances.
struct Shared {
    split: TripartiteSplit,
    agreement: Option<AgreementReport>,
    /// Reference state and member, when neither depends on the Hamiltonian.
    fixed: Option<(PureState, std::result::Result<DensityMatrix, String>)>,
}

enum Cell {
    Row(SweepRow),
    Failure(HypothesisFailure),
}

fn member_state(config: &SweepConfig, split: &TripartiteSplit, psi: &PureState) -> Result<DensityMatrix> {
    match config.member {
        MemberState::Dephased => {
            let b1 = CMat::identity(dim_of(psi, &split.first), dim_of(psi, &split.first));
            let b3 = CMat::identity(dim_of(psi, &split.last), dim_of(psi, &split.last));
            let dec = correlated_decomposition(psi, split, &b1, &b3)?;
            dephased_correlated_state(&dec)
        }
        MemberState::MaxEntropy => {
            let r = max_entropy_state(psi, &config.topology, MaxEntOptions::default())?;
            Ok(r.state)
        }
    }
}

fn dim_of(psi: &PureState, group: &[usize]) -> usize {
    group.iter().map(|&s| psi.dims()[s]).product()
}

fn run_instance(config: &SweepConfig, shared: &Shared, seed: u64) -> Result<Vec<Cell>> {
    let spec = match &config.hamiltonians {
        HamiltonianSource::Random { scale } => sample_random_respecting(&config.topology, seed, *scale)?,
        HamiltonianSource::Named(m) => m.spec()?,
        HamiltonianSource::Spec(s) => s.clone(),
    };
    let fail = |bound: BoundName, reason: String| Cell::Failure(HypothesisFailure { seed, bound, reason });
    let check = respects(&spec, &config.topology)?;
    if !check.respects {
        let reason = format!("term {} lies outside every hyperedge", check.witness.unwrap_or(0));
        return Ok(config.bounds.iter().map(|&b| fail(b, reason.clone())).collect());
    }
    let spectrum = spectrum_of(&spec, DimCap::from_env()?)?;
    let psi = match &shared.fixed {
        Some((psi, _)) => psi.clone(),
        None => config.state.build(config.topology.dims(), Some(&spectrum))?,
    };
    let f = overlap_with_ground(&psi, &spectrum)?.f;
    let tol = config.tolerance;
    let mut cells = Vec::with_capacity(config.bounds.len());
    for &bound in &config.bounds {
        let cell = match bound {
            BoundName::Unification => match shared.fixed.as_ref().map_or_else(
                || member_state(config, &shared.split, &psi).map_err(|e| e.to_string()),
                |(_, m)| m.clone(),
            ) {
                Err(e) => fail(bound, e),
                Ok(rho) => {
                    let m = check_membership(&rho, &psi, &config.topology, Some(config.membership_tolerance))?;
                    match m.require() {
                        Err(e) => fail(bound, e.to_string()),
                        Ok(()) => {
                            let eigs = rho.eigenvalues_desc()?;
                            let eigs: Vec<f64> = eigs.iter().map(|x| x.max(0.0)).collect();
                            let total: f64 = eigs.iter().sum();
                            let eigs: Vec<f64> = eigs.iter().map(|x| x / total).collect();
                            Cell::Row(SweepRow {
                                seed,
                                report: unification_bound(&spectrum, &eigs, f, tol)?,
                            })
                        }
                    }
                }
            },
            BoundName::Correlation => {
                let d1 = dim_of(&psi, &shared.split.first);
                let d3 = dim_of(&psi, &shared.split.last);
                let joint = joint_measurement_distribution(
                    &psi,
                    &shared.split,
                    &CMat::identity(d1, d1),
                    &CMat::identity(d3, d3),
                    AssignmentPolicy::Identity,
                )?;
                Cell::Row(SweepRow {
                    seed,
                    report: correlation_bound(&spectrum, &joint, f, tol)?,
                })
            }
            BoundName::Trial => {
                let phi = config.trial_partner.build(config.topology.dims(), Some(&spectrum))?;
                let m = check_membership(&phi.density(), &psi, &config.topology, Some(config.membership_tolerance))?;
                match m.require() {
                    Err(e) => fail(bound, e.to_string()),
                    Ok(()) => {
                        let theta = psi.inner(&phi).norm().clamp(0.0, 1.0).acos();
                        Cell::Row(SweepRow {
                            seed,
                            report: trial_bound(&spectrum, f, theta, tol)?,
                        })
                    }
                }
            }
            BoundName::Qecc => {
                let code = config.code.as_ref().expect("validated");
                let agreement = shared.agreement.as_ref().expect("computed with the code");
                if !agreement.passed {
                    fail(bound, Error::AgreementNotCertified.to_string())
                } else {
                    let code_state = PureState::new(code.dims().to_vec(), code.basis()[0].clone())?;
                    let fq = overlap_with_ground(&code_state, &spectrum)?.f;
                    Cell::Row(SweepRow {
                        seed,
                        report: qecc_bound(&spectrum, code, agreement, fq, tol)?,
                    })
                }
            }
        };
        cells.push(cell);
    }
    Ok(cells)
}

/// Runs every seed in the range and every selected bound. Output order is
/// seed order regardless of scheduling.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let n = config.topology.num_subsystems();
    let split = match &config.split {
        Some(s) => s.clone(),
        None => TripartiteSplit::ends(n)?,
    };
    let agreement = match &config.code {
        Some(code) => Some(subspace_agreement_check(code, &config.topology, 1e-10)?),
        None => None,
    };
    let fixed = if config.state == StateRecipe::Ground {
        None
    } else {
        let psi = config.state.build(config.topology.dims(), None)?;
        let member = if config.bounds.contains(&BoundName::Unification) {
            member_state(config, &split, &psi).map_err(|e| e.to_string())
        } else {
            Err("no member needed".into())
        };
        Some((psi, member))
    };
    let shared = Shared { split, agreement, fixed };
    let seeds: Vec<u64> = config.seeds.clone().collect();
    let work = || -> Result<Vec<Vec<Cell>>> {
        seeds
            .par_iter()
            .map(|&seed| run_instance(config, &shared, seed))
            .collect()
    };
    let per_seed = match config.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for cell in per_seed.into_iter().flatten() {
        match cell {
            Cell::Row(r) => rows.push(r),
            Cell::Failure(f) => failures.push(f),
        }
    }
    let slacks: Vec<f64> = rows.iter().map(|r| r.report.slack).collect();
    let summary = SweepSummary {
        rows: rows.len(),
        violations: rows.iter().filter(|r| !r.report.satisfied).count(),
        hypothesis_failures: failures.len(),
        min_slack: slacks.iter().copied().reduce(f64::min),
        max_slack: slacks.iter().copied().reduce(f64::max),
    };
    Ok(SweepOutcome {
        rows,
        failures,
        summary,
    })
}
