//! Support hypergraphs: construction, stars, regularity and the singleton
//! intersection property.
//!
//! Vertices are stored 0-based. Every external format (JSON, reports, error
//! messages) uses 1-based labels, see [`Hypergraph::from_one_based`] and
//! [`SupportSet::to_one_based`].

use std::collections::BTreeSet;
use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{ensure_binomial_within, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};

/// A sorted, duplicate-free set of 0-based column indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SupportSet(Vec<usize>);

impl SupportSet {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = indices.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        SupportSet(v)
    }

    /// Builds a support from 1-based labels; rejects 0 and labels above `m`.
    pub fn from_one_based(labels: &[usize], m: usize) -> Result<Self> {
        for &l in labels {
            if l == 0 || l > m {
                return Err(Error::VertexOutOfRange { vertex: l, m });
            }
        }
        Ok(SupportSet::new(labels.iter().map(|l| l - 1)))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn is_subset_of(&self, other: &SupportSet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        SupportSet::new(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn intersection(&self, other: &SupportSet) -> SupportSet {
        SupportSet(
            self.0
                .iter()
                .copied()
                .filter(|&i| other.contains(i))
                .collect(),
        )
    }

    pub fn max_index(&self) -> Option<usize> {
        self.0.last().copied()
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.to_one_based().iter().join(","))
    }
}

/// A hypergraph on the vertex set `{0, .., m-1}`.
///
/// Edges are non-empty, stored sorted and deduplicated, so two hypergraphs
/// with the same edge set compare equal regardless of input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    m: usize,
    edges: Vec<SupportSet>,
}

impl Hypergraph {
    pub fn new(m: usize, edges: impl IntoIterator<Item = SupportSet>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument(
                "vertex count m must be positive".into(),
            ));
        }
        let mut set = BTreeSet::new();
        for e in edges {
            if e.is_empty() {
                return Err(Error::InvalidArgument("empty edges are not allowed".into()));
            }
            if let Some(max) = e.max_index() {
                if max >= m {
                    return Err(Error::VertexOutOfRange { vertex: max + 1, m });
                }
            }
            set.insert(e);
        }
        Ok(Hypergraph {
            m,
            edges: set.into_iter().collect(),
        })
    }

    pub fn from_one_based(m: usize, edges: &[Vec<usize>]) -> Result<Self> {
        let edges = edges
            .iter()
            .map(|e| SupportSet::from_one_based(e, m))
            .collect::<Result<Vec<_>>>()?;
        Hypergraph::new(m, edges)
    }

    /// The `m` cyclic intervals `{i, i+1, .., i+k-1} mod m`.
    pub fn cyclic(m: usize, k: usize) -> Result<Self> {
        if k == 0 || k >= m {
            return Err(Error::InvalidArgument(format!(
                "cyclic hypergraph needs 1 <= k < m (got m={m}, k={k})"
            )));
        }
        Hypergraph::new(
            m,
            (0..m).map(|i| SupportSet::new((0..k).map(|d| (i + d) % m))),
        )
    }

    /// Every `k`-subset of `[m]`, subject to [`DEFAULT_ENUMERATION_CAP`].
    pub fn complete(m: usize, k: usize) -> Result<Self> {
        Hypergraph::complete_with_cap(m, k, DEFAULT_ENUMERATION_CAP)
    }

    pub fn complete_with_cap(m: usize, k: usize, cap: usize) -> Result<Self> {
        if k == 0 || k > m {
            return Err(Error::InvalidArgument(format!(
                "complete hypergraph needs 1 <= k <= m (got m={m}, k={k})"
            )));
        }
        ensure_binomial_within("complete hypergraph", m, k, cap)?;
        Hypergraph::new(m, (0..m).combinations(k).map(SupportSet::new))
    }

    /// Rows and columns of `[m]` laid out as a `√m × √m` grid.
    pub fn grid(m: usize) -> Result<Self> {
        let side = (m as f64).sqrt().round() as usize;
        if side < 2 || side * side != m {
            return Err(Error::InvalidArgument(format!(
                "grid hypergraph needs m = k^2 with k >= 2 (got m={m})"
            )));
        }
        let rows = (0..side).map(|r| SupportSet::new((0..side).map(|c| r * side + c)));
        let cols = (0..side).map(|c| SupportSet::new((0..side).map(|r| r * side + c)));
        Hypergraph::new(m, rows.chain(cols))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn edges(&self) -> &[SupportSet] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Common edge size, if every edge has the same size.
    pub fn uniform_size(&self) -> Option<usize> {
        let first = self.edges.first()?.len();
        self.edges.iter().all(|e| e.len() == first).then_some(first)
    }

    fn check_vertex(&self, i: usize) -> Result<()> {
        if i >= self.m {
            Err(Error::VertexOutOfRange {
                vertex: i + 1,
                m: self.m,
            })
        } else {
            Ok(())
        }
    }

    /// Edges containing vertex `i` (0-based).
    pub fn star(&self, i: usize) -> Result<Vec<&SupportSet>> {
        self.check_vertex(i)?;
        Ok(self.edges.iter().filter(|e| e.contains(i)).collect())
    }

    /// Indices into [`Hypergraph::edges`] of the edges containing `i`.
    pub fn star_indices(&self, i: usize) -> Result<Vec<usize>> {
        self.check_vertex(i)?;
        Ok(self
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.contains(i))
            .map(|(idx, _)| idx)
            .collect())
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.m];
        for e in &self.edges {
            for &i in e.indices() {
                deg[i] += 1;
            }
        }
        deg
    }

    /// `Some(r)` iff every vertex has the same positive degree `r`.
    pub fn regularity(&self) -> Option<usize> {
        let deg = self.degrees();
        let r = deg[0];
        (r > 0 && deg.iter().all(|&d| d == r)).then_some(r)
    }

    /// Singleton intersection property: every star intersects to exactly its
    /// own vertex. Vertices with an empty star fail.
    pub fn has_sip(&self) -> bool {
        (0..self.m).all(|i| {
            let mut star = self.edges.iter().filter(|e| e.contains(i));
            let Some(first) = star.next() else {
                return false;
            };
            let meet = star.fold(first.clone(), |acc, e| acc.intersection(e));
            meet.indices() == [i]
        })
    }

    /// True when every vertex lies in some edge.
    pub fn covers_vertices(&self) -> bool {
        self.degrees().iter().all(|&d| d > 0)
    }

    /// All unions `S ∪ S'` of (not necessarily distinct) edges.
    pub fn pairwise_unions(&self) -> Result<Hypergraph> {
        self.pairwise_unions_with_cap(DEFAULT_ENUMERATION_CAP)
    }

    pub fn pairwise_unions_with_cap(&self, cap: usize) -> Result<Hypergraph> {
        let e = self.edges.len();
        let pairs = e.saturating_mul(e + 1) / 2;
        if pairs > cap {
            return Err(Error::CapExceeded {
                what: "pairwise unions",
                count: pairs.to_string(),
                cap,
            });
        }
        let mut set = BTreeSet::new();
        for (a, s) in self.edges.iter().enumerate() {
            for t in &self.edges[a..] {
                set.insert(s.union(t));
            }
        }
        Ok(Hypergraph {
            m: self.m,
            edges: set.into_iter().collect(),
        })
    }

    /// Edges as 1-based label lists.
    pub fn edges_one_based(&self) -> Vec<Vec<usize>> {
        self.edges.iter().map(SupportSet::to_one_based).collect()
    }
}

/// JSON form `{"m": int, "edges": [[int, ...], ...]}` with 1-based labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypergraphJson {
    pub m: usize,
    pub edges: Vec<Vec<usize>>,
}

impl From<&Hypergraph> for HypergraphJson {
    fn from(h: &Hypergraph) -> Self {
        HypergraphJson {
            m: h.m(),
            edges: h.edges_one_based(),
        }
    }
}

impl TryFrom<HypergraphJson> for Hypergraph {
    type Error = Error;

    fn try_from(j: HypergraphJson) -> Result<Self> {
        Hypergraph::from_one_based(j.m, &j.edges)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h1(m: usize, edges: &[&[usize]]) -> Hypergraph {
        let edges: Vec<Vec<usize>> = edges.iter().map(|e| e.to_vec()).collect();
        Hypergraph::from_one_based(m, &edges).unwrap()
    }

    fn sorted(mut v: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
        v.sort();
        v
    }

    #[test]
    fn cyclic_five_two() {
        let h = Hypergraph::cyclic(5, 2).unwrap();
        assert_eq!(
            sorted(h.edges_one_based()),
            sorted(vec![
                vec![1, 2],
                vec![2, 3],
                vec![3, 4],
                vec![4, 5],
                vec![1, 5]
            ])
        );
        assert_eq!(h.regularity(), Some(2));
        assert_eq!(h.uniform_size(), Some(2));
        assert!(h.has_sip());
    }

    #[test]
    fn cyclic_k1_is_singletons() {
        let h = Hypergraph::cyclic(4, 1).unwrap();
        assert_eq!(
            h.edges_one_based(),
            vec![vec![1], vec![2], vec![3], vec![4]]
        );
        assert_eq!(h.regularity(), Some(1));
    }

    #[test]
    fn cyclic_six_three_degrees_and_stars() {
        let h = Hypergraph::cyclic(6, 3).unwrap();
        assert_eq!(h.len(), 6);
        assert!(h.degrees().iter().all(|&d| d == 3));
        // brute-force star intersection
        for i in 0..6 {
            let star = h.star(i).unwrap();
            let meet: Vec<usize> = (0..6)
                .filter(|&v| star.iter().all(|e| e.contains(v)))
                .collect();
            assert_eq!(meet, vec![i]);
        }
        assert!(h.has_sip());
    }

    #[test]
    fn cyclic_rejects_bad_k() {
        assert!(Hypergraph::cyclic(4, 4).is_err());
        assert!(Hypergraph::cyclic(4, 0).is_err());
    }

    #[test]
    fn complete_examples() {
        let h = Hypergraph::complete(4, 2).unwrap();
        assert_eq!(h.len(), 6);
        assert_eq!(h.regularity(), Some(3));
        let h = Hypergraph::complete(3, 3).unwrap();
        assert_eq!(h.edges_one_based(), vec![vec![1, 2, 3]]);
        assert_eq!(h.regularity(), Some(1));
        let h = Hypergraph::complete(5, 1).unwrap();
        assert_eq!(h.len(), 5);
        assert_eq!(h.regularity(), Some(1));
        assert!(matches!(
            Hypergraph::complete_with_cap(20, 10, 1000),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn grid_examples() {
        let h = Hypergraph::grid(4).unwrap();
        assert_eq!(
            sorted(h.edges_one_based()),
            vec![vec![1, 2], vec![1, 3], vec![2, 4], vec![3, 4]]
        );
        assert_eq!(h.regularity(), Some(2));
        assert!(h.has_sip());

        let h = Hypergraph::grid(9).unwrap();
        assert_eq!(h.len(), 6);
        assert_eq!(h.uniform_size(), Some(3));
        assert!(h.degrees().iter().all(|&d| d == 2));
        assert!(h.has_sip());

        assert!(Hypergraph::grid(3).is_err());
        assert!(Hypergraph::grid(1).is_err());
    }

    #[test]
    fn stars() {
        let h = Hypergraph::cyclic(5, 2).unwrap();
        let star: Vec<Vec<usize>> = h
            .star(1)
            .unwrap()
            .iter()
            .map(|e| e.to_one_based())
            .collect();
        assert_eq!(star, vec![vec![1, 2], vec![2, 3]]);

        let h = Hypergraph::complete(3, 2).unwrap();
        let star: Vec<Vec<usize>> = h
            .star(0)
            .unwrap()
            .iter()
            .map(|e| e.to_one_based())
            .collect();
        assert_eq!(star, vec![vec![1, 2], vec![1, 3]]);

        let h = h1(3, &[&[1, 2]]);
        assert!(h.star(2).unwrap().is_empty());
        assert!(matches!(
            h.star(3),
            Err(Error::VertexOutOfRange { vertex: 4, m: 3 })
        ));
    }

    #[test]
    fn regularity_absent_when_uneven() {
        let h = h1(3, &[&[1, 2], &[2, 3]]);
        assert_eq!(h.regularity(), None);
    }

    #[test]
    fn sip_failures() {
        let h = h1(3, &[&[1, 2], &[1, 2, 3]]);
        assert!(!h.has_sip());
        // isolated vertex fails
        let h = h1(3, &[&[1], &[2]]);
        assert!(!h.has_sip());
    }

    #[test]
    fn pairwise_unions_examples() {
        let h = h1(3, &[&[1, 2], &[2, 3]]);
        assert_eq!(
            sorted(h.pairwise_unions().unwrap().edges_one_based()),
            vec![vec![1, 2], vec![1, 2, 3], vec![2, 3]]
        );

        let h = Hypergraph::cyclic(6, 2).unwrap();
        let u = h.pairwise_unions().unwrap();
        let has = |e: &[usize]| u.edges_one_based().iter().any(|x| x == e);
        assert!(has(&[1, 2, 3]));
        assert!(!has(&[1, 3, 5, 6]));

        let h = h1(4, &[&[2, 4]]);
        assert_eq!(h.pairwise_unions().unwrap(), h);
    }

    #[test]
    fn construction_rejects_bad_edges() {
        assert!(matches!(
            Hypergraph::from_one_based(3, &[vec![0, 1]]),
            Err(Error::VertexOutOfRange { vertex: 0, .. })
        ));
        assert!(Hypergraph::from_one_based(3, &[vec![4]]).is_err());
        assert!(Hypergraph::from_one_based(3, &[vec![]]).is_err());
        // duplicates collapse
        let h = Hypergraph::from_one_based(3, &[vec![2, 1], vec![1, 2, 2]]).unwrap();
        assert_eq!(h.edges_one_based(), vec![vec![1, 2]]);
    }

    #[test]
    fn cyclic_invariants_exhaustive() {
        for m in 2..=12 {
            for k in 1..m {
                let h = Hypergraph::cyclic(m, k).unwrap();
                assert_eq!(h.uniform_size(), Some(k), "m={m} k={k}");
                assert_eq!(h.regularity(), Some(k), "m={m} k={k}");
                assert!(h.has_sip(), "m={m} k={k}");
                let u = h.pairwise_unions().unwrap();
                assert!(u.edges().iter().all(|e| e.len() <= 2 * k));
            }
        }
    }

    #[test]
    fn complete_has_sip_below_m() {
        for m in 2..=8 {
            for k in 1..m {
                assert!(Hypergraph::complete(m, k).unwrap().has_sip(), "m={m} k={k}");
            }
        }
    }

    #[test]
    fn regularity_matches_star_sizes() {
        let cases = vec![
            Hypergraph::cyclic(7, 3).unwrap(),
            Hypergraph::grid(16).unwrap(),
            h1(4, &[&[1, 2], &[2, 3], &[3, 4]]),
            h1(3, &[&[1, 2, 3]]),
        ];
        for h in cases {
            let sizes: Vec<usize> = (0..h.m()).map(|i| h.star(i).unwrap().len()).collect();
            let all_equal = sizes.iter().all(|&s| s == sizes[0]) && sizes[0] > 0;
            assert_eq!(h.regularity(), all_equal.then_some(sizes[0]));
        }
    }

    #[test]
    fn json_is_one_based() {
        let h = Hypergraph::cyclic(3, 2).unwrap();
        let j = serde_json::to_string(&HypergraphJson::from(&h)).unwrap();
        assert_eq!(j, r#"{"m":3,"edges":[[1,2],[1,3],[2,3]]}"#);
        let back: HypergraphJson = serde_json::from_str(&j).unwrap();
        assert_eq!(Hypergraph::try_from(back).unwrap(), h);
    }
}
