//! Standard spin chains.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{HamiltonianSpec, LocalTerm};
use crate::topology::CouplingTopology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum NamedModel {
    /// `J Σ (X_i X_{i+1} + Y_i Y_{i+1} + Z_i Z_{i+1})`.
    HeisenbergChain { n: usize, j: f64, boundary: Boundary },
    /// `-J Σ Z_i Z_{i+1} - h Σ X_i`.
    TransverseIsing { n: usize, j: f64, h: f64, boundary: Boundary },
    /// `-Σ Z_i Z_{i+1}`.
    ZzChain { n: usize, boundary: Boundary },
}

impl NamedModel {
    fn sites_and_boundary(&self) -> (usize, Boundary) {
        match *self {
            NamedModel::HeisenbergChain { n, boundary, .. }
            | NamedModel::TransverseIsing { n, boundary, .. }
            | NamedModel::ZzChain { n, boundary } => (n, boundary),
        }
    }

    fn bonds(&self) -> Result<Vec<(usize, usize)>> {
        let (n, boundary) = self.sites_and_boundary();
        if n < 2 {
            return Err(Error::InvalidArgument("a chain needs at least two sites".into()));
        }
        let mut bonds: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        if boundary == Boundary::Periodic {
            if n < 3 {
                return Err(Error::InvalidArgument("periodic chains need at least three sites".into()));
            }
            bonds.push((0, n - 1));
        }
        Ok(bonds)
    }

    pub fn spec(&self) -> Result<HamiltonianSpec> {
        let bonds = self.bonds()?;
        let (n, _) = self.sites_and_boundary();
        let mut terms = Vec::new();
        match *self {
            NamedModel::HeisenbergChain { j, .. } => {
                for &(a, b) in &bonds {
                    for p in ["XX", "YY", "ZZ"] {
                        terms.push(LocalTerm::pauli(vec![a, b], p, j)?);
                    }
                }
            }
            NamedModel::TransverseIsing { j, h, .. } => {
                for &(a, b) in &bonds {
                    terms.push(LocalTerm::pauli(vec![a, b], "ZZ", -j)?);
                }
                for i in 0..n {
                    terms.push(LocalTerm::pauli(vec![i], "X", -h)?);
                }
            }
            NamedModel::ZzChain { .. } => {
                for &(a, b) in &bonds {
                    terms.push(LocalTerm::pauli(vec![a, b], "ZZ", -1.0)?);
                }
            }
        }
        HamiltonianSpec::new(vec![2; n], terms)
    }

    /// Nearest-neighbour topology the model lives on.
    pub fn topology(&self) -> Result<CouplingTopology> {
        let (n, _) = self.sites_and_boundary();
        let edges = self.bonds()?.into_iter().map(|(a, b)| vec![a, b]).collect();
        CouplingTopology::new(vec![2; n], edges)
    }
}

/// `name:key=value,...`, e.g. `heisenberg_chain:n=4,J=1,boundary=periodic`.
/// Defaults: `n = 3`, `J = 1`, `h = 1`, open boundary.
impl FromStr for NamedModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let mut n = 3usize;
        let mut j = 1.0f64;
        let mut h = 1.0f64;
        let mut boundary = Boundary::Open;
        let bad = |what: &str| Error::Parse(format!("bad model parameter {what:?} in {s:?}"));
        for kv in args.split(',').filter(|x| !x.trim().is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad(kv))?;
            let v = v.trim();
            match k.trim() {
                "n" => n = v.parse().map_err(|_| bad(kv))?,
                "J" | "j" => j = v.parse().map_err(|_| bad(kv))?,
                "h" => h = v.parse().map_err(|_| bad(kv))?,
                "boundary" => {
                    boundary = match v {
                        "open" => Boundary::Open,
                        "periodic" => Boundary::Periodic,
                        _ => return Err(bad(kv)),
                    }
                }
                _ => return Err(bad(kv)),
            }
        }
        match name.trim() {
            "heisenberg_chain" => Ok(NamedModel::HeisenbergChain { n, j, boundary }),
            "transverse_ising" => Ok(NamedModel::TransverseIsing { n, j, h, boundary }),
            "zz_chain" => Ok(NamedModel::ZzChain { n, boundary }),
            other => Err(Error::Parse(format!("unknown model {other:?}"))),
        }
    }
}
