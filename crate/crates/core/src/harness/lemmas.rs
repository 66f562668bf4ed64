//! Exhaustive and randomized checks of the auxiliary results the stability
//! theorem rests on: span intersections, distance to an intersection of
//! subspaces, and the combinatorial injectivity lemma.

use std::collections::HashSet;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::combinatorics::factorial;
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, SupportSet};
use crate::subspace::{
    intersect, restricted_lower_bound, subspace_distance, xi, Dictionary, Subspace,
    DEFAULT_RANK_TOL, XI_ORDERING_CAP,
};

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Lemma3Config {
    pub trials: usize,
    pub ambient: usize,
    pub min_subspaces: usize,
    pub max_subspaces: usize,
    pub seed: u64,
    pub slack: f64,
}

impl Default for Lemma3Config {
    fn default() -> Self {
        Lemma3Config {
            trials: 1000,
            ambient: 8,
            min_subspaces: 2,
            max_subspaces: 4,
            seed: 0,
            slack: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma3Report {
    pub trials: usize,
    /// Trials where `ξ = 1` makes the right side infinite.
    pub vacuous: usize,
    pub violations: usize,
    /// Largest `dist(x, ∩V) / rhs` seen.
    pub max_ratio: f64,
    pub pass: bool,
}

/// One side-by-side evaluation of `dist(x, ∩V)` and
/// `Σ dist(x, V_i) / (1 − ξ(V))`.
pub fn lemma3_sides(
    collection: &[Subspace],
    x: &DVector<f64>,
    rank_tol: f64,
) -> Result<(f64, f64)> {
    let meet = intersect(collection, rank_tol)?;
    let lhs = meet.distance_to_point(x);
    let sum: f64 = collection.iter().map(|v| v.distance_to_point(x)).sum();
    let denom = 1.0 - xi(collection, rank_tol)?;
    let rhs = if denom > 0.0 {
        sum / denom
    } else {
        f64::INFINITY
    };
    Ok((lhs, rhs))
}

/// Random collections sharing a random common part, each extended by a
/// few random directions; every tenth point is drawn from the intersection.
pub fn check_lemma3(cfg: &Lemma3Config) -> Result<Lemma3Report> {
    if cfg.min_subspaces < 2 || cfg.min_subspaces > cfg.max_subspaces {
        return Err(Error::InvalidArgument(
            "need 2 <= min_subspaces <= max_subspaces".into(),
        ));
    }
    if cfg.max_subspaces > XI_ORDERING_CAP {
        return Err(Error::CapExceeded {
            what: "subspaces per collection",
            count: cfg.max_subspaces.to_string(),
            cap: XI_ORDERING_CAP,
        });
    }
    if cfg.ambient < 2 {
        return Err(Error::InvalidArgument(
            "ambient dimension must be at least 2".into(),
        ));
    }
    let n = cfg.ambient;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = Lemma3Report {
        trials: cfg.trials,
        vacuous: 0,
        violations: 0,
        max_ratio: 0.0,
        pass: true,
    };
    for t in 0..cfg.trials {
        let count = rng.random_range(cfg.min_subspaces..=cfg.max_subspaces);
        let common_dim = rng.random_range(0..=n / 2);
        let common = gaussian(&mut rng, n, common_dim);
        let collection = (0..count)
            .map(|_| {
                let extra = rng.random_range(1..=(n - common_dim - 1).max(1));
                let mut cols: Vec<DVector<f64>> =
                    common.column_iter().map(|c| c.into_owned()).collect();
                cols.extend(
                    gaussian(&mut rng, n, extra)
                        .column_iter()
                        .map(|c| c.into_owned()),
                );
                Subspace::span(&DMatrix::from_columns(&cols), DEFAULT_RANK_TOL)
            })
            .collect::<Result<Vec<_>>>()?;
        let x = if t % 10 == 0 && common_dim > 0 {
            &common * DVector::from_fn(common_dim, |_, _| rng.sample::<f64, _>(StandardNormal))
        } else {
            DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
        };
        let (lhs, rhs) = lemma3_sides(&collection, &x, DEFAULT_RANK_TOL)?;
        if rhs.is_infinite() {
            report.vacuous += 1;
            continue;
        }
        if lhs > rhs + cfg.slack {
            report.violations += 1;
        }
        if rhs > 1e-6 {
            report.max_ratio = report.max_ratio.max(lhs / rhs);
        }
    }
    report.pass = report.violations == 0;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Lemma2Config {
    pub trials: usize,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for Lemma2Config {
    fn default() -> Self {
        Lemma2Config {
            trials: 20,
            n: 5,
            m: 6,
            k: 2,
            seed: 0,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma2Report {
    pub trials: usize,
    pub subcollections: usize,
    pub violations: usize,
    pub max_distance: f64,
    pub pass: bool,
}

/// For random `A` with `L_2H(A) > 0` and every nonempty `G ⊆ H`, the
/// intersection of the spans `span A_S` (`S ∈ G`) equals `span A_{∩G}`.
pub fn check_lemma2(cfg: &Lemma2Config) -> Result<Lemma2Report> {
    let h = Hypergraph::cyclic(cfg.m, cfg.k)?;
    if h.len() > 12 {
        return Err(Error::CapExceeded {
            what: "edge subsets",
            count: format!("2^{}", h.len()),
            cap: 1 << 12,
        });
    }
    let unions = h.pairwise_unions()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = Lemma2Report {
        trials: 0,
        subcollections: 0,
        violations: 0,
        max_distance: 0.0,
        pass: true,
    };
    while report.trials < cfg.trials {
        let a = Dictionary::new(gaussian(&mut rng, cfg.n, cfg.m))?;
        if restricted_lower_bound(a.matrix(), &unions)? <= DEFAULT_RANK_TOL * a.max_column_norm() {
            return Err(Error::InvalidArgument(format!(
                "n={} is too small for L_2H > 0 on cyclic({}, {})",
                cfg.n, cfg.m, cfg.k
            )));
        }
        report.trials += 1;
        let spans = h
            .edges()
            .iter()
            .map(|s| Subspace::span(&a.restrict(s), DEFAULT_RANK_TOL))
            .collect::<Result<Vec<_>>>()?;
        for size in 1..=h.len() {
            for g in (0..h.len()).combinations(size) {
                report.subcollections += 1;
                let members: Vec<Subspace> = g.iter().map(|&i| spans[i].clone()).collect();
                let meet = intersect(&members, DEFAULT_RANK_TOL)?;
                let common = g.iter().skip(1).fold(h.edges()[g[0]].clone(), |acc, &i| {
                    acc.intersection(&h.edges()[i])
                });
                let direct = if common.is_empty() {
                    Subspace::zero(cfg.n)
                } else {
                    Subspace::span(&a.restrict(&common), DEFAULT_RANK_TOL)?
                };
                let d = subspace_distance(&meet, &direct)?.max(subspace_distance(&direct, &meet)?);
                report.max_distance = report.max_distance.max(d);
                if meet.dim() != direct.dim() || d > cfg.tol {
                    report.violations += 1;
                }
            }
        }
    }
    report.pass = report.violations == 0;
    Ok(report)
}

/// The verbatim hypotheses of the injectivity lemma for an explicit map
/// `π: H → 2^[m̄]` (`pi[e]` is the image of edge `e`): the size condition
/// `Σ|π(S)| ≥ Σ|S|` and `|∩π(G)| ≤ |∩G|` for every `G` of `r` or `r+1` edges.
pub fn lemma4_admissible(h: &Hypergraph, r: usize, pi: &[SupportSet]) -> bool {
    if pi.len() != h.len() {
        return false;
    }
    let lhs: usize = pi.iter().map(SupportSet::len).sum();
    let rhs: usize = h.edges().iter().map(SupportSet::len).sum();
    if lhs < rhs {
        return false;
    }
    for size in [r, r + 1] {
        if size == 0 || size > h.len() {
            continue;
        }
        for g in (0..h.len()).combinations(size) {
            let meet = |sets: &dyn Fn(usize) -> SupportSet| {
                g.iter()
                    .skip(1)
                    .fold(sets(g[0]), |acc, &i| acc.intersection(&sets(i)))
            };
            let image = meet(&|i| pi[i].clone());
            let source = meet(&|i| h.edges()[i].clone());
            if image.len() > source.len() {
                return false;
            }
        }
    }
    true
}

/// Vertices `i` whose star maps to a single index `∩π(σ(i)) = {ℓ}`, as
/// `(i, ℓ)` pairs.
pub fn lemma4_singletons(h: &Hypergraph, pi: &[SupportSet]) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for i in 0..h.m() {
        let star = h.star_indices(i)?;
        let Some((&first, rest)) = star.split_first() else {
            continue;
        };
        let image = rest
            .iter()
            .fold(pi[first].clone(), |acc, &e| acc.intersection(&pi[e]));
        if image.len() == 1 {
            out.push((i, image.indices()[0]));
        }
    }
    Ok(out)
}

/// Largest `J` on which `i ↦ ∩π(σ(i))` is a well-defined injective map.
pub fn lemma4_injective_domain(h: &Hypergraph, pi: &[SupportSet]) -> Result<Vec<usize>> {
    let singles = lemma4_singletons(h, pi)?;
    // keep one preimage per image
    let mut seen = HashSet::new();
    Ok(singles
        .into_iter()
        .filter(|&(_, l)| seen.insert(l))
        .map(|(i, _)| i)
        .collect())
}

/// Enumeration budget for [`check_lemma4`].
pub const LEMMA4_NODE_CAP: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma4Report {
    pub m: usize,
    pub m_bar: usize,
    pub r: usize,
    pub edges: Vec<Vec<usize>>,
    /// Number of admissible maps `π` (counted with label multiplicity).
    pub admissible_maps: u128,
    /// Admissible maps up to relabeling of `[m̄]`.
    pub admissible_classes: usize,
    pub required_j: Option<usize>,
    /// Smallest `|J|` over admissible maps.
    pub min_j: Option<usize>,
    pub counterexamples: u128,
    pub pass: bool,
}

struct Lemma4Search<'a> {
    h: &'a Hypergraph,
    m_bar: usize,
    r: usize,
    options: Vec<u32>,
    /// For every option, indices of the constrained edge sets it contains.
    contains: Vec<Vec<usize>>,
    limits: Vec<usize>,
    counts: Vec<usize>,
    chosen: Vec<usize>,
    needed: usize,
    nodes: usize,
    report: Lemma4Report,
}

impl Lemma4Search<'_> {
    fn run(&mut self, start: usize, size_so_far: usize) -> Result<()> {
        self.nodes += 1;
        if self.nodes > LEMMA4_NODE_CAP {
            return Err(Error::CapExceeded {
                what: "injectivity search nodes",
                count: format!(">{LEMMA4_NODE_CAP}"),
                cap: LEMMA4_NODE_CAP,
            });
        }
        let remaining = self.m_bar - self.chosen.len();
        if remaining == 0 {
            if size_so_far >= self.needed {
                self.leaf();
            }
            return Ok(());
        }
        // options are sorted by size, so the last one is the largest
        let largest = self.options.last().map_or(0, |o| o.count_ones() as usize);
        if size_so_far + remaining * largest < self.needed {
            return Ok(());
        }
        for o in start..self.options.len() {
            let ok = self.contains[o]
                .iter()
                .all(|&g| self.counts[g] < self.limits[g]);
            if !ok {
                continue;
            }
            for &g in &self.contains[o] {
                self.counts[g] += 1;
            }
            self.chosen.push(o);
            let size = self.options[o].count_ones() as usize;
            self.run(o, size_so_far + size)?;
            self.chosen.pop();
            for &g in &self.contains[o] {
                self.counts[g] -= 1;
            }
        }
        Ok(())
    }

    fn leaf(&mut self) {
        let (m, m_bar, r) = (self.h.m(), self.m_bar, self.r);
        // multiplicity: m̄! / Π(run lengths)!
        let mut weight = factorial(m_bar);
        for (_, run) in &self.chosen.iter().chunk_by(|&&o| o) {
            weight /= factorial(run.count());
        }
        self.report.admissible_maps += weight;
        self.report.admissible_classes += 1;

        let members: Vec<u32> = self.chosen.iter().map(|&o| self.options[o]).collect();
        let mut images = Vec::new();
        for i in 0..m {
            let star: u32 = self
                .h
                .edges()
                .iter()
                .enumerate()
                .filter(|(_, s)| s.contains(i))
                .fold(0, |acc, (e, _)| acc | (1 << e));
            let hits: Vec<usize> = (0..m_bar).filter(|&l| members[l] & star == star).collect();
            if hits.len() == 1 {
                images.push(hits[0]);
            }
        }
        let j = images.iter().unique().count();
        self.report.min_j = Some(self.report.min_j.map_or(j, |v| v.min(j)));
        let bad = if m_bar < m {
            true
        } else if (r - 1) * m_bar < m * r {
            j < m_bar - r * (m_bar - m)
        } else {
            false
        };
        if bad {
            self.report.counterexamples += weight;
        }
    }
}

/// Enumerates every map `π: H → 2^[m̄]` satisfying the lemma's hypotheses
/// and checks its conclusion. Maps are grouped by the multiset of
/// membership sets `{S : ℓ ∈ π(S)}` over `ℓ ∈ [m̄]`, which determines `π`
/// up to relabeling `[m̄]`; the hypotheses and the size of `J` are invariant
/// under such relabeling.
pub fn check_lemma4(h: &Hypergraph, m_bar: usize) -> Result<Lemma4Report> {
    let r = h.regularity().ok_or(Error::NotRegular)?;
    if !h.has_sip() {
        return Err(Error::InvalidArgument(
            "hypergraph lacks the singleton intersection property".into(),
        ));
    }
    let (m, e) = (h.m(), h.len());
    if m > 6 || m_bar > m + 2 || e > 16 {
        return Err(Error::CapExceeded {
            what: "injectivity check instance size (m <= 6, m_bar <= m + 2)",
            count: format!("m={m}, m_bar={m_bar}, |H|={e}"),
            cap: 6,
        });
    }
    let meet_size = |g: &[usize]| {
        g.iter()
            .skip(1)
            .fold(h.edges()[g[0]].clone(), |acc, &i| {
                acc.intersection(&h.edges()[i])
            })
            .len()
    };
    let mut constrained: Vec<u32> = Vec::new();
    let mut limits = Vec::new();
    for size in [r, r + 1] {
        if size == 0 || size > e {
            continue;
        }
        for g in (0..e).combinations(size) {
            constrained.push(g.iter().fold(0, |acc, &i| acc | (1 << i)));
            limits.push(meet_size(&g));
        }
    }
    // a membership set with r+2 or more edges contains a violating (r+1)-set
    let mut options: Vec<u32> = (0..=(r + 1).min(e))
        .flat_map(|size| {
            (0..e)
                .combinations(size)
                .map(|g| g.iter().fold(0u32, |acc, &i| acc | (1 << i)))
                .collect::<Vec<_>>()
        })
        .collect();
    options.sort_by_key(|o| (o.count_ones(), *o));
    let contains = options
        .iter()
        .map(|&o| {
            constrained
                .iter()
                .enumerate()
                .filter(|(_, &g)| o & g == g)
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let needed: usize = h.edges().iter().map(SupportSet::len).sum();
    let required_j = (m_bar >= m && (r - 1) * m_bar < m * r).then(|| m_bar - r * (m_bar - m));
    let mut search = Lemma4Search {
        h,
        m_bar,
        r,
        counts: vec![0; constrained.len()],
        limits,
        options,
        contains,
        chosen: Vec::new(),
        needed,
        nodes: 0,
        report: Lemma4Report {
            m,
            m_bar,
            r,
            edges: h.edges_one_based(),
            admissible_maps: 0,
            admissible_classes: 0,
            required_j,
            min_j: None,
            counterexamples: 0,
            pass: true,
        },
    };
    search.run(0, 0)?;
    let mut report = search.report;
    report.pass = report.counterexamples == 0;
    Ok(report)
}

/// One exhaustive injectivity check on `cyclic(m, k)` against `m̄` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lemma4Case {
    pub m: usize,
    pub k: usize,
    pub m_bar: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaSuiteConfig {
    pub lemma2: Option<Lemma2Config>,
    pub lemma3: Option<Lemma3Config>,
    pub lemma4: Vec<Lemma4Case>,
}

impl Default for LemmaSuiteConfig {
    fn default() -> Self {
        LemmaSuiteConfig {
            lemma2: Some(Lemma2Config::default()),
            lemma3: Some(Lemma3Config::default()),
            lemma4: [3, 4, 5]
                .into_iter()
                .flat_map(|m| [m, m + 1].map(|m_bar| Lemma4Case { m, k: 2, m_bar }))
                .collect(),
        }
    }
}

impl LemmaSuiteConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let Some(c) = self.lemma2.as_mut() {
            c.seed = seed;
        }
        if let Some(c) = self.lemma3.as_mut() {
            c.seed = seed;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSuiteReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma2: Option<Lemma2Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lemma3: Option<Lemma3Report>,
    pub lemma4: Vec<Lemma4Report>,
    pub pass: bool,
}

pub fn run_lemma_suite(cfg: &LemmaSuiteConfig) -> Result<LemmaSuiteReport> {
    let lemma2 = cfg.lemma2.as_ref().map(check_lemma2).transpose()?;
    let lemma3 = cfg.lemma3.as_ref().map(check_lemma3).transpose()?;
    let lemma4 = cfg
        .lemma4
        .iter()
        .map(|c| check_lemma4(&Hypergraph::cyclic(c.m, c.k)?, c.m_bar))
        .collect::<Result<Vec<_>>>()?;
    let pass = lemma2.as_ref().is_none_or(|r| r.pass)
        && lemma3.as_ref().is_none_or(|r| r.pass)
        && lemma4.iter().all(|r| r.pass);
    Ok(LemmaSuiteReport {
        lemma2,
        lemma3,
        lemma4,
        pass,
    })
}
