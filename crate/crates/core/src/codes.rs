//! Sparse codes: the Vandermonde construction, general linear position,
//! per-support bookkeeping, and synthetic datasets `z_i = A x_i + n_i`.

use std::collections::BTreeMap;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, binomial_usize, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, SupportSet};
use crate::subspace::{
    max_column_norm, restricted_lower_bound, select_columns, spark_condition, Dictionary,
    DEFAULT_RANK_TOL,
};

/// An `m × N` matrix of `k`-sparse codes with a declared support per column.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCodeSet {
    k: usize,
    codes: DMatrix<f64>,
    supports: Vec<SupportSet>,
}

impl SparseCodeSet {
    /// Validates that each column vanishes outside its declared support and
    /// that every support has at most `k` entries.
    pub fn new(k: usize, codes: DMatrix<f64>, supports: Vec<SupportSet>) -> Result<Self> {
        if supports.len() != codes.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} supports for {} codes",
                supports.len(),
                codes.ncols()
            )));
        }
        if codes.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("code entries must be finite".into()));
        }
        for (i, s) in supports.iter().enumerate() {
            if s.len() > k {
                return Err(Error::InvalidArgument(format!(
                    "code {} declares support {s} larger than k={k}",
                    i + 1
                )));
            }
            if s.max_index().is_some_and(|j| j >= codes.nrows()) {
                return Err(Error::DimensionMismatch(format!(
                    "support {s} of code {} exceeds m={}",
                    i + 1,
                    codes.nrows()
                )));
            }
            let outside = codes
                .column(i)
                .iter()
                .enumerate()
                .any(|(j, &v)| v != 0.0 && !s.contains(j));
            if outside {
                return Err(Error::InvalidArgument(format!(
                    "code {} has entries outside its declared support {s}",
                    i + 1
                )));
            }
        }
        Ok(SparseCodeSet { k, codes, supports })
    }

    /// Derives each support from the exact nonzero pattern.
    pub fn from_matrix(k: usize, codes: DMatrix<f64>) -> Result<Self> {
        let supports = codes
            .column_iter()
            .map(|c| nonzero_support(c.iter()))
            .collect();
        SparseCodeSet::new(k, codes, supports)
    }

    pub fn empty(m: usize, k: usize) -> Self {
        SparseCodeSet {
            k,
            codes: DMatrix::zeros(m, 0),
            supports: Vec::new(),
        }
    }

    /// Concatenates code sets column-wise.
    pub fn concat(parts: &[SparseCodeSet]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to concatenate".into()))?;
        let (m, k) = (first.m(), first.k);
        if parts.iter().any(|p| p.m() != m) {
            return Err(Error::DimensionMismatch(
                "code sets with different m".into(),
            ));
        }
        let total: usize = parts.iter().map(|p| p.len()).sum();
        let mut codes = DMatrix::zeros(m, total);
        let mut supports = Vec::with_capacity(total);
        let mut col = 0;
        for p in parts {
            codes.columns_mut(col, p.len()).copy_from(&p.codes);
            supports.extend(p.supports.iter().cloned());
            col += p.len();
        }
        let k = parts.iter().map(|p| p.k).max().unwrap_or(k);
        Ok(SparseCodeSet { k, codes, supports })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.codes.nrows()
    }

    /// Number of codes `N`.
    pub fn len(&self) -> usize {
        self.codes.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.ncols() == 0
    }

    pub fn codes(&self) -> &DMatrix<f64> {
        &self.codes
    }

    pub fn supports(&self) -> &[SupportSet] {
        &self.supports
    }

    pub fn column(&self, i: usize) -> DVector<f64> {
        self.codes.column(i).into_owned()
    }

    /// Indices of the exact nonzero entries of code `i`.
    pub fn actual_support(&self, i: usize) -> SupportSet {
        nonzero_support(self.codes.column(i).iter())
    }

    /// `X_I`: the codes with the given column indices.
    pub fn select(&self, indices: &[usize]) -> DMatrix<f64> {
        select_columns(&self.codes, indices)
    }

    /// `max_i ‖x_i‖₁`.
    pub fn max_l1(&self) -> f64 {
        self.codes
            .column_iter()
            .map(|c| c.lp_norm(1))
            .fold(0.0, f64::max)
    }
}

fn nonzero_support<'a>(values: impl Iterator<Item = &'a f64>) -> SupportSet {
    SupportSet::new(
        values
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, _)| j),
    )
}

/// `count` codes supported on `support`, column `j` holding `γ_i^j`
/// (`j = 1..=count`) at the `i`-th index of the support.
pub fn vandermonde_codes(
    m: usize,
    support: &SupportSet,
    count: usize,
    gammas: &[f64],
) -> Result<SparseCodeSet> {
    if gammas.len() != support.len() {
        return Err(Error::InvalidArgument(format!(
            "{} gammas for a support of size {}",
            gammas.len(),
            support.len()
        )));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("count must be positive".into()));
    }
    if support.max_index().is_some_and(|j| j >= m) {
        return Err(Error::DimensionMismatch(format!(
            "support {support} exceeds m={m}"
        )));
    }
    let exponent = i32::try_from(count)
        .map_err(|_| Error::InvalidArgument(format!("count {count} too large")))?;
    for (a, &g) in gammas.iter().enumerate() {
        if g == 0.0 || !g.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "gamma {g} must be finite and nonzero"
            )));
        }
        if gammas[..a].contains(&g) {
            return Err(Error::InvalidArgument(format!("duplicate gamma {g}")));
        }
        let log10 = count as f64 * g.abs().log10();
        if !(-300.0..=300.0).contains(&log10) {
            return Err(Error::InvalidArgument(format!(
                "|{g}|^{count} leaves the representable range"
            )));
        }
    }
    let mut codes = DMatrix::zeros(m, count);
    for j in 0..count {
        for (&row, &g) in support.indices().iter().zip(gammas) {
            codes[(row, j)] = g.powi(exponent.min(j as i32 + 1));
        }
    }
    SparseCodeSet::new(support.len(), codes, vec![support.clone(); count])
}

fn has_full_rank(m: &DMatrix<f64>, rank_tol: f64) -> bool {
    if m.ncols() > m.nrows() {
        return false;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    smax > 0.0 && sv.min() > rank_tol * smax
}

/// Settings for [`general_linear_position_with`].
#[derive(Debug, Clone)]
pub struct GlpOptions {
    /// Largest number of `k`-subsets checked exhaustively.
    pub cap: usize,
    /// When the cap is exceeded, check this many random subsets instead.
    pub samples: Option<usize>,
    pub seed: u64,
}

impl Default for GlpOptions {
    fn default() -> Self {
        GlpOptions {
            cap: DEFAULT_ENUMERATION_CAP,
            samples: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlpOutcome {
    pub holds: bool,
    pub exhaustive: bool,
    pub subsets_checked: usize,
    /// For sampled checks with no failure: the 95% upper bound `3/s` on the
    /// fraction of dependent subsets.
    pub dependent_fraction_bound: Option<f64>,
    /// First dependent subset found, as column indices.
    pub witness: Option<Vec<usize>>,
}

/// Any `k` of the given column vectors are linearly independent. Fewer than
/// `k` vectors hold vacuously.
pub fn general_linear_position(vectors: &DMatrix<f64>, k: usize, rank_tol: f64) -> Result<bool> {
    Ok(general_linear_position_with(vectors, k, rank_tol, &GlpOptions::default())?.holds)
}

pub fn general_linear_position_with(
    vectors: &DMatrix<f64>,
    k: usize,
    rank_tol: f64,
    opts: &GlpOptions,
) -> Result<GlpOutcome> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let count = vectors.ncols();
    let subsets = binomial_usize(count, k).filter(|&c| c <= opts.cap);
    match (subsets, opts.samples) {
        (Some(_), _) => {
            let mut checked = 0;
            for cols in (0..count).combinations(k) {
                checked += 1;
                if !has_full_rank(&select_columns(vectors, &cols), rank_tol) {
                    return Ok(GlpOutcome {
                        holds: false,
                        exhaustive: true,
                        subsets_checked: checked,
                        dependent_fraction_bound: None,
                        witness: Some(cols),
                    });
                }
            }
            Ok(GlpOutcome {
                holds: true,
                exhaustive: true,
                subsets_checked: checked,
                dependent_fraction_bound: None,
                witness: None,
            })
        }
        (None, Some(samples)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            for s in 0..samples {
                let mut cols = rand::seq::index::sample(&mut rng, count, k).into_vec();
                cols.sort_unstable();
                if !has_full_rank(&select_columns(vectors, &cols), rank_tol) {
                    return Ok(GlpOutcome {
                        holds: false,
                        exhaustive: false,
                        subsets_checked: s + 1,
                        dependent_fraction_bound: None,
                        witness: Some(cols),
                    });
                }
            }
            Ok(GlpOutcome {
                holds: true,
                exhaustive: false,
                subsets_checked: samples,
                dependent_fraction_bound: Some(3.0 / samples.max(1) as f64),
                witness: None,
            })
        }
        (None, None) => Err(Error::CapExceeded {
            what: "general linear position subsets",
            count: binomial(count, k).to_string(),
            cap: opts.cap,
        }),
    }
}

/// `I(S)` for every edge: the codes whose nonzero entries lie inside `S`.
pub fn support_index_sets(
    codes: &SparseCodeSet,
    h: &Hypergraph,
) -> BTreeMap<SupportSet, Vec<usize>> {
    h.edges()
        .iter()
        .cloned()
        .zip(support_index_lists(codes, h))
        .collect()
}

/// Same as [`support_index_sets`], aligned with `h.edges()`.
pub fn support_index_lists(codes: &SparseCodeSet, h: &Hypergraph) -> Vec<Vec<usize>> {
    let actual: Vec<SupportSet> = (0..codes.len()).map(|i| codes.actual_support(i)).collect();
    h.edges()
        .iter()
        .map(|s| {
            actual
                .iter()
                .enumerate()
                .filter(|(_, a)| a.is_subset_of(s))
                .map(|(i, _)| i)
                .collect()
        })
        .collect()
}

/// Noise distribution for [`synthesize_dataset`]; both respect `‖n_i‖₂ ≤ η`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Uniform in the `η`-ball.
    #[default]
    UniformBall,
    /// Uniform on the `η`-sphere (worst-case radius).
    Sphere,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub dictionary: Dictionary,
    pub codes: SparseCodeSet,
    pub noise: DMatrix<f64>,
    pub noise_model: NoiseModel,
    pub seed: u64,
}

/// Signals `Z` (`n × N`) with noise bound `η` and, for synthetic data, the
/// generating factors.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub signals: DMatrix<f64>,
    pub eta: f64,
    pub ground_truth: Option<GroundTruth>,
}

impl Dataset {
    /// `max_i ‖z_i − A x_i‖₂` against the ground truth.
    pub fn max_residual(&self) -> Option<f64> {
        let gt = self.ground_truth.as_ref()?;
        let clean = gt.dictionary.matrix() * gt.codes.codes();
        Some(
            (0..self.signals.ncols())
                .map(|i| (self.signals.column(i) - clean.column(i)).norm())
                .fold(0.0, f64::max),
        )
    }
}

fn unit_direction(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 0.0 {
            return v / norm;
        }
    }
}

/// `z_i = A x_i + n_i` with `‖z_i − A x_i‖₂ ≤ η` enforced exactly (as
/// evaluated in floating point). Deterministic in `seed`.
pub fn synthesize_dataset(
    a: &Dictionary,
    codes: &SparseCodeSet,
    eta: f64,
    noise_model: NoiseModel,
    seed: u64,
) -> Result<Dataset> {
    if a.m() != codes.m() {
        return Err(Error::DimensionMismatch(format!(
            "dictionary has {} columns but codes live in R^{}",
            a.m(),
            codes.m()
        )));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "eta must be finite and >= 0 (got {eta})"
        )));
    }
    let n = a.n();
    let count = codes.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut signals = DMatrix::zeros(n, count);
    let mut noise = DMatrix::zeros(n, count);
    let product = a.matrix() * codes.codes();
    for i in 0..count {
        let clean = product.column(i).into_owned();
        let mut ni = if eta == 0.0 {
            DVector::zeros(n)
        } else {
            let radius = match noise_model {
                NoiseModel::UniformBall => eta * rng.random::<f64>().powf(1.0 / n as f64),
                NoiseModel::Sphere => eta,
            };
            unit_direction(&mut rng, n) * radius
        };
        let mut zi = &clean + &ni;
        loop {
            let resid = (&zi - &clean).norm();
            if resid <= eta {
                break;
            }
            ni *= eta / resid * (1.0 - 4.0 * f64::EPSILON);
            zi = &clean + &ni;
        }
        signals.set_column(i, &zi);
        noise.set_column(i, &ni);
    }
    Ok(Dataset {
        signals,
        eta,
        ground_truth: Some(GroundTruth {
            dictionary: a.clone(),
            codes: codes.clone(),
            noise,
            noise_model,
            seed,
        }),
    })
}

/// Settings for [`generate_instance_with`].
#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub rank_tol: f64,
    pub max_attempts: usize,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            rank_tol: DEFAULT_RANK_TOL,
            max_attempts: 16,
        }
    }
}

/// A random dictionary with balanced Vandermonde codes.
#[derive(Debug, Clone)]
pub struct Instance {
    pub dictionary: Dictionary,
    pub codes: SparseCodeSet,
    /// Draws needed before every post-check passed.
    pub attempts: usize,
}

const GAMMA_LOW: f64 = 0.5;
const GAMMA_HIGH: f64 = 1.5;

fn draw_gammas(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let gap = (0.5 / k as f64).min(0.05);
    loop {
        let g: Vec<f64> = (0..k)
            .map(|_| rng.random_range(GAMMA_LOW..GAMMA_HIGH))
            .collect();
        let spread_ok = g
            .iter()
            .tuple_combinations()
            .all(|(a, b): (&f64, &f64)| (a - b).abs() >= gap);
        if spread_ok {
            return g;
        }
    }
}

pub fn generate_instance(
    m: usize,
    n: usize,
    k: usize,
    h: &Hypergraph,
    per_support_count: usize,
    seed: u64,
) -> Result<Instance> {
    generate_instance_with(
        m,
        n,
        k,
        h,
        per_support_count,
        seed,
        &GenerateOptions::default(),
    )
}

/// Gaussian `n × m` dictionary plus `per_support_count` Vandermonde codes on
/// every edge of `h`, with fresh random `γ` per edge. The hypotheses of the
/// stability theorem are checked after each draw and the draw is repeated
/// on failure.
#[allow(clippy::too_many_arguments)]
pub fn generate_instance_with(
    m: usize,
    n: usize,
    k: usize,
    h: &Hypergraph,
    per_support_count: usize,
    seed: u64,
    opts: &GenerateOptions,
) -> Result<Instance> {
    if h.m() != m {
        return Err(Error::DimensionMismatch(format!(
            "hypergraph on {} vertices, m={m}",
            h.m()
        )));
    }
    if h.uniform_size() != Some(k) {
        return Err(Error::InvalidArgument(format!(
            "hypergraph is not {k}-uniform"
        )));
    }
    if k == 0 || k >= m {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= k < m (got k={k}, m={m})"
        )));
    }
    if n < (2 * k).min(m) {
        return Err(Error::InvalidArgument(format!(
            "n={n} is below min(2k, m)={}",
            (2 * k).min(m)
        )));
    }
    if per_support_count == 0 {
        return Err(Error::InvalidArgument(
            "per-support count must be positive".into(),
        ));
    }
    if !h.has_sip() || h.regularity().is_none() {
        return Err(Error::InvalidArgument(
            "hypergraph must be regular with the singleton intersection property".into(),
        ));
    }
    let unions = h.pairwise_unions()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=opts.max_attempts {
        let a = DMatrix::from_fn(n, m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let parts = h
            .edges()
            .iter()
            .map(|s| vandermonde_codes(m, s, per_support_count, &draw_gammas(&mut rng, k)))
            .collect::<Result<Vec<_>>>()?;
        let codes = SparseCodeSet::concat(&parts)?;

        let threshold = opts.rank_tol * max_column_norm(&a);
        if restricted_lower_bound(&a, &unions)? <= threshold {
            continue;
        }
        if !spark_condition(&a, k, opts.rank_tol)? {
            continue;
        }
        let lists = support_index_lists(&codes, h);
        let counts_ok = lists.iter().all(|l| l.len() >= per_support_count);
        let glp_ok = lists
            .iter()
            .map(|l| general_linear_position(&codes.select(l), k, opts.rank_tol))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .all(|b| b);
        if counts_ok && glp_ok {
            return Ok(Instance {
                dictionary: Dictionary::new(a)?,
                codes,
                attempts: attempt,
            });
        }
    }
    Err(Error::HypothesisViolated(format!(
        "no draw passed the post-generation checks in {} attempts",
        opts.max_attempts
    )))
}
