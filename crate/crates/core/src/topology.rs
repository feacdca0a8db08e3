//! Coupling topologies: hypergraphs over subsystems that say which sets of
//! subsystems a Hamiltonian term may act on.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::linalg::DimCap;
use crate::qecc::ErrorSet;

/// A hypergraph `G = (V, E)` over subsystems `0..dims.len()`.
///
/// Hyperedges are stored sorted, deduplicated, and in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingTopology {
    dims: Vec<usize>,
    hyperedges: Vec<Vec<usize>>,
    total_dim: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct TopologyDoc {
    dims: Vec<usize>,
    hyperedges: Vec<Vec<usize>>,
}

/// Outcome of [`respects`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Respects {
    pub respects: bool,
    /// Index of the first term whose support is not inside any hyperedge.
    pub witness: Option<usize>,
}

pub(crate) fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.is_empty() {
        return Err(Error::InvalidArgument("no subsystems given".into()));
    }
    if let Some(&d) = dims.iter().find(|&&d| d < 2) {
        return Err(Error::InvalidDimension(d));
    }
    Ok(())
}

/// Sorts a subsystem set, rejecting empty sets, duplicates, and unknown labels.
pub(crate) fn canonical_set(set: &[usize], count: usize) -> Result<Vec<usize>> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("empty subsystem set".into()));
    }
    let mut s = set.to_vec();
    s.sort_unstable();
    if let Some(&bad) = s.iter().find(|&&i| i >= count) {
        return Err(Error::UnknownSubsystem { index: bad, count });
    }
    if s.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument(format!(
            "subsystem set {set:?} lists a subsystem twice"
        )));
    }
    Ok(s)
}

fn is_subset(small: &[usize], big: &[usize]) -> bool {
    small.iter().all(|x| big.binary_search(x).is_ok())
}

impl CouplingTopology {
    pub fn new(dims: Vec<usize>, hyperedges: Vec<Vec<usize>>) -> Result<Self> {
        Self::with_cap(dims, hyperedges, DimCap::default())
    }

    pub fn with_cap(dims: Vec<usize>, hyperedges: Vec<Vec<usize>>, cap: DimCap) -> Result<Self> {
        validate_dims(&dims)?;
        let mut edges = BTreeSet::new();
        for e in &hyperedges {
            let e = canonical_set(e, dims.len())?;
            if !edges.insert(e.clone()) {
                return Err(Error::InvalidArgument(format!("duplicate hyperedge {e:?}")));
            }
        }
        let total_dim = cap.total(&dims)?;
        Ok(CouplingTopology {
            dims,
            hyperedges: edges.into_iter().collect(),
            total_dim,
        })
    }

    /// Parses `{"dims":[...], "hyperedges":[[...], ...]}`.
    pub fn parse(document: &str, cap: DimCap) -> Result<Self> {
        let doc: TopologyDoc = serde_json::from_str(document)?;
        Self::with_cap(doc.dims, doc.hyperedges, cap)
    }

    /// Canonical JSON form; parsing it back yields an equal topology.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&TopologyDoc {
            dims: self.dims.clone(),
            hyperedges: self.hyperedges.clone(),
        })
        .expect("topology serializes")
    }

    /// Nearest-neighbour chain on `dims.len()` subsystems.
    pub fn line(dims: Vec<usize>) -> Result<Self> {
        let n = dims.len();
        let edges = (0..n.saturating_sub(1)).map(|i| vec![i, i + 1]).collect();
        Self::new(dims, edges)
    }

    /// All pairs of subsystems.
    pub fn pairwise(dims: Vec<usize>) -> Result<Self> {
        let n = dims.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push(vec![i, j]);
            }
        }
        Self::new(dims, edges)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn hyperedges(&self) -> &[Vec<usize>] {
        &self.hyperedges
    }

    pub fn num_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// True when `support` lies inside some hyperedge.
    pub fn allows(&self, support: &[usize]) -> bool {
        let mut s = support.to_vec();
        s.sort_unstable();
        self.hyperedges.iter().any(|e| is_subset(&s, e))
    }
}

/// Checks that every term of the given decomposition acts inside some
/// hyperedge. Only the supplied decomposition is examined.
pub fn respects(spec: &HamiltonianSpec, topology: &CouplingTopology) -> Result<Respects> {
    if spec.dims() != topology.dims() {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian dims {:?} differ from topology dims {:?}",
            spec.dims(),
            topology.dims()
        )));
    }
    for (i, term) in spec.terms().iter().enumerate() {
        let expected: usize = term.support().iter().map(|&s| spec.dims()[s]).product();
        if term.operator().nrows() != expected {
            return Err(Error::DimensionMismatch(format!(
                "term {i} has a {}x{} operator on support {:?} of dimension {expected}",
                term.operator().nrows(),
                term.operator().ncols(),
                term.support()
            )));
        }
        if !topology.allows(term.support()) {
            return Ok(Respects {
                respects: false,
                witness: Some(i),
            });
        }
    }
    Ok(Respects {
        respects: true,
        witness: None,
    })
}

/// Topology whose hyperedges are all sets contained in `s1 ∪ s2` for some
/// `s1, s2` in the error set, stored by its maximal elements.
pub fn derive_from_error_set(errors: &ErrorSet, dims: Vec<usize>) -> Result<CouplingTopology> {
    let elems = errors.elements();
    if elems.is_empty() {
        return Err(Error::EmptyErrorSet);
    }
    let mut unions: BTreeSet<Vec<usize>> = BTreeSet::new();
    for (i, a) in elems.iter().enumerate() {
        for b in &elems[i..] {
            let u: BTreeSet<usize> = a.iter().chain(b.iter()).copied().collect();
            unions.insert(u.into_iter().collect());
        }
    }
    let all: Vec<Vec<usize>> = unions.into_iter().collect();
    let maximal: Vec<Vec<usize>> = all
        .iter()
        .filter(|e| !all.iter().any(|f| f.len() > e.len() && is_subset(e, f)))
        .cloned()
        .collect();
    CouplingTopology::new(dims, maximal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::LocalTerm;

    #[test]
    fn parses_line_topology() {
        let t = CouplingTopology::parse(r#"{"dims":[2,2,2],"hyperedges":[[0,1],[1,2]]}"#, DimCap::default())
            .unwrap();
        assert_eq!(t.hyperedges(), &[vec![0, 1], vec![1, 2]]);
        assert_eq!(t.total_dim(), 8);
    }

    #[test]
    fn parses_three_body_hyperedge() {
        let t = CouplingTopology::parse(
            r#"{"dims":[2,2,2],"hyperedges":[[0,1],[0,2],[0,1,2]]}"#,
            DimCap::default(),
        )
        .unwrap();
        assert_eq!(t.hyperedges().len(), 3);
        assert!(t.hyperedges().contains(&vec![0, 1, 2]));
    }

    #[test]
    fn rejects_unknown_label() {
        let err = CouplingTopology::parse(r#"{"dims":[2],"hyperedges":[[0,1]]}"#, DimCap::default())
            .unwrap_err();
        assert!(matches!(err, Error::UnknownSubsystem { index: 1, count: 1 }));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            CouplingTopology::new(vec![2, 1], vec![]),
            Err(Error::InvalidDimension(1))
        ));
        assert!(CouplingTopology::new(vec![2, 2], vec![vec![0, 1], vec![1, 0]]).is_err());
        assert!(CouplingTopology::new(vec![2, 2], vec![vec![]]).is_err());
        assert!(matches!(
            CouplingTopology::with_cap(vec![2; 5], vec![], DimCap(16)),
            Err(Error::DimensionCap { .. })
        ));
        assert!(matches!(
            CouplingTopology::parse("{not json", DimCap::default()),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn canonical_round_trip() {
        let t = CouplingTopology::new(vec![2, 3, 2], vec![vec![2, 1], vec![0, 1]]).unwrap();
        let back = CouplingTopology::parse(&t.to_json(), DimCap::default()).unwrap();
        assert_eq!(t, back);
        assert_eq!(t.to_json(), r#"{"dims":[2,3,2],"hyperedges":[[0,1],[1,2]]}"#);
    }

    fn spec(terms: Vec<(Vec<usize>, &str)>) -> HamiltonianSpec {
        let terms = terms
            .into_iter()
            .map(|(s, p)| LocalTerm::pauli(s, p, 1.0).unwrap())
            .collect();
        HamiltonianSpec::new(vec![2, 2, 2], terms).unwrap()
    }

    #[test]
    fn respects_toy_model() {
        let line = CouplingTopology::line(vec![2, 2, 2]).unwrap();
        let r = respects(&spec(vec![(vec![0, 1], "XX"), (vec![1, 2], "ZZ")]), &line).unwrap();
        assert!(r.respects);
        assert_eq!(r.witness, None);
    }

    #[test]
    fn excluded_coupling_is_witnessed() {
        let line = CouplingTopology::line(vec![2, 2, 2]).unwrap();
        let r = respects(&spec(vec![(vec![0, 1], "ZZ"), (vec![0, 2], "XX")]), &line).unwrap();
        assert!(!r.respects);
        assert_eq!(r.witness, Some(1));
    }

    #[test]
    fn sub_edge_support_allowed() {
        let t = CouplingTopology::new(vec![2, 2, 2], vec![vec![0, 1, 2]]).unwrap();
        assert!(respects(&spec(vec![(vec![0, 1], "XX")]), &t).unwrap().respects);
    }

    #[test]
    fn respects_rejects_dimension_mismatch() {
        let t = CouplingTopology::line(vec![2, 2]).unwrap();
        assert!(matches!(
            respects(&spec(vec![(vec![0, 1], "XX")]), &t),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn derived_topology_from_singletons() {
        let s = ErrorSet::new(vec![vec![0], vec![1], vec![2]]).unwrap();
        let t = derive_from_error_set(&s, vec![2, 2, 2]).unwrap();
        // brute force: every union s1 ∪ s2, then keep maximal sets
        let mut expected = BTreeSet::new();
        for a in 0..3usize {
            for b in 0..3usize {
                let u: BTreeSet<usize> = [a, b].into_iter().collect();
                expected.insert(u.into_iter().collect::<Vec<_>>());
            }
        }
        let expected: Vec<Vec<usize>> = expected
            .iter()
            .filter(|e| !expected.iter().any(|f| f.len() > e.len() && is_subset(e, f)))
            .cloned()
            .collect();
        assert_eq!(t.hyperedges(), expected.as_slice());
        assert_eq!(t.hyperedges(), &[vec![0, 1], vec![0, 2], vec![1, 2]]);
    }

    #[test]
    fn derived_topology_five_qubit_singletons() {
        let s = ErrorSet::singletons(5);
        let t = derive_from_error_set(&s, vec![2; 5]).unwrap();
        assert_eq!(t.hyperedges().len(), 10);
        assert!(t.allows(&[3]));
        assert!(t.allows(&[1, 4]));
        assert!(!t.allows(&[0, 1, 2]));
    }

    #[test]
    fn derived_topology_single_element() {
        let s = ErrorSet::new(vec![vec![0, 1]]).unwrap();
        let t = derive_from_error_set(&s, vec![2, 2, 2]).unwrap();
        assert_eq!(t.hyperedges(), &[vec![0, 1]]);
    }
}
