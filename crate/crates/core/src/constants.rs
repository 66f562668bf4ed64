//! Stability constants `C1`, `C2`, the noise threshold `ε(δ1, δ2)` and the
//! sample-size formulas.

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::One;

use crate::codes::{support_index_lists, SparseCodeSet};
use crate::combinatorics::{binomial, ensure_binomial_within, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::hypergraph::Hypergraph;
use crate::subspace::{lower_bound_k, xi, Dictionary, Subspace, DEFAULT_RANK_TOL};

/// Smallest admissible denominator of `C1`; anything below is treated as a
/// failure of general linear position.
pub const C1_DENOMINATOR_TOL: f64 = 1e-12;

/// Largest `ξ` over every `(r+1)`-subset `G` of edges of the spans
/// `{span A_S : S ∈ G}`. Zero when `H` has at most `r` edges.
pub fn max_xi(a: &Dictionary, h: &Hypergraph, r: usize, rank_tol: f64) -> Result<f64> {
    if a.m() != h.m() {
        return Err(Error::DimensionMismatch(format!(
            "dictionary has {} columns, hypergraph has {} vertices",
            a.m(),
            h.m()
        )));
    }
    ensure_binomial_within(
        "edge subsets for xi",
        h.len(),
        r + 1,
        DEFAULT_ENUMERATION_CAP,
    )?;
    let spans = h
        .edges()
        .iter()
        .map(|s| Subspace::span(&a.restrict(s), rank_tol))
        .collect::<Result<Vec<_>>>()?;
    let mut best: f64 = 0.0;
    for g in (0..h.len()).combinations(r + 1) {
        let members: Vec<Subspace> = g.iter().map(|&i| spans[i].clone()).collect();
        best = best.max(xi(&members, rank_tol)?);
    }
    Ok(best)
}

/// `C2(A, H) = (r+1)·max_j ‖A_j‖₂ / (1 − max_G ξ)`.
pub fn compute_c2(a: &Dictionary, h: &Hypergraph) -> Result<f64> {
    compute_c2_with(a, h, DEFAULT_RANK_TOL)
}

pub fn compute_c2_with(a: &Dictionary, h: &Hypergraph, rank_tol: f64) -> Result<f64> {
    let r = h.regularity().ok_or(Error::NotRegular)?;
    let denom = 1.0 - max_xi(a, h, r, rank_tol)?;
    if denom <= 0.0 {
        return Err(Error::IllConditioned(format!(
            "1 - max xi = {denom:e} is not positive"
        )));
    }
    Ok((r + 1) as f64 * a.max_column_norm() / denom)
}

/// `min_S L_k(A·X_{I(S)})` over the edges of the `k`-uniform hypergraph `H`.
pub fn c1_denominator(a: &Dictionary, codes: &SparseCodeSet, h: &Hypergraph) -> Result<f64> {
    if a.m() != codes.m() {
        return Err(Error::DimensionMismatch(format!(
            "dictionary has {} columns, codes live in R^{}",
            a.m(),
            codes.m()
        )));
    }
    let k = h
        .uniform_size()
        .ok_or_else(|| Error::InvalidArgument("hypergraph is not uniform".into()))?;
    let mut best = f64::INFINITY;
    for (s, list) in h.edges().iter().zip(support_index_lists(codes, h)) {
        if list.len() < k {
            return Err(Error::HypothesisViolated(format!(
                "support {s} has {} codes, at least k={k} are needed",
                list.len()
            )));
        }
        let ax = a.matrix() * codes.select(&list);
        best = best.min(lower_bound_k(&ax, k)?);
    }
    Ok(best)
}

/// `C1 = C2 / min_S L_k(A·X_{I(S)})`.
pub fn compute_c1(a: &Dictionary, codes: &SparseCodeSet, h: &Hypergraph) -> Result<f64> {
    compute_c1_with(a, codes, h, DEFAULT_RANK_TOL)
}

pub fn compute_c1_with(
    a: &Dictionary,
    codes: &SparseCodeSet,
    h: &Hypergraph,
    rank_tol: f64,
) -> Result<f64> {
    let c2 = compute_c2_with(a, h, rank_tol)?;
    c1_from_parts(c2, c1_denominator(a, codes, h)?)
}

pub(crate) fn c1_from_parts(c2: f64, denominator: f64) -> Result<f64> {
    if denominator <= C1_DENOMINATOR_TOL {
        return Err(Error::HypothesisViolated(format!(
            "C1 denominator {denominator:e} vanishes: codes are not in general linear position"
        )));
    }
    Ok(c2 / denominator)
}

/// `ε(δ1, δ2) = min(δ1/C1, δ2·L2k / (1 + C1(δ2 + max_i ‖x_i‖₁)))`.
pub fn epsilon_for(delta1: f64, delta2: f64, c1: f64, l2k: f64, max_l1: f64) -> Result<f64> {
    for (name, v) in [("delta1", delta1), ("delta2", delta2), ("max_l1", max_l1)] {
        if v.is_nan() || v < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "{name} must be >= 0 (got {v})"
            )));
        }
    }
    if !(c1 > 0.0 && c1.is_finite()) || !(l2k > 0.0 && l2k.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "C1 and L2k must be positive and finite (got {c1}, {l2k})"
        )));
    }
    let first = delta1 / c1;
    let second = if delta2.is_infinite() {
        l2k / c1
    } else {
        delta2 * l2k / (1.0 + c1 * (delta2 + max_l1))
    };
    Ok(first.min(second))
}

fn checked_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    Ok(())
}

/// Codes needed on each support for the deterministic guarantee:
/// `(k−1)·C(m, k) + 1`.
pub fn per_support_cor1(m: usize, k: usize) -> Result<BigUint> {
    checked_k(k)?;
    Ok(BigUint::from(k - 1) * binomial(m, k) + BigUint::one())
}

/// `|H|·((k−1)·C(m, k) + 1)`.
pub fn sample_size_cor1(m: usize, k: usize, h: &Hypergraph) -> Result<BigUint> {
    if h.uniform_size() != Some(k) {
        return Err(Error::InvalidArgument(format!(
            "hypergraph is not {k}-uniform"
        )));
    }
    Ok(BigUint::from(h.len()) * per_support_cor1(m, k)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleSize {
    pub per_support: BigUint,
    pub total: BigUint,
}

/// Sample size when only an upper bound `m̄` on the dictionary size is
/// known: `(k−1)·(C(m̄, k) + |H|·k·C(m̄, k−1)) + 1` per support.
pub fn sample_size_thm2(m_bar: usize, k: usize, h: &Hypergraph) -> Result<SampleSize> {
    checked_k(k)?;
    let edges = BigUint::from(h.len());
    let inner = binomial(m_bar, k) + &edges * BigUint::from(k) * binomial(m_bar, k - 1);
    let per_support = BigUint::from(k - 1) * inner + BigUint::one();
    let total = edges * &per_support;
    Ok(SampleSize { per_support, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::vandermonde_codes;
    use crate::hypergraph::SupportSet;
    use nalgebra::DMatrix;

    fn identity(n: usize) -> Dictionary {
        Dictionary::identity(n)
    }

    #[test]
    fn c2_coordinate_examples() {
        let h = Hypergraph::cyclic(4, 2).unwrap();
        assert!((compute_c2(&identity(4), &h).unwrap() - 3.0).abs() < 1e-12);
        let g = Hypergraph::grid(9).unwrap();
        assert!((compute_c2(&identity(9), &g).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn c2_scales_linearly() {
        let h = Hypergraph::cyclic(5, 2).unwrap();
        let a = Dictionary::new(DMatrix::from_fn(4, 5, |i, j| ((i * 5 + j) as f64).sin())).unwrap();
        let a2 = Dictionary::new(a.matrix() * 2.0).unwrap();
        let c = compute_c2(&a, &h).unwrap();
        assert!((compute_c2(&a2, &h).unwrap() - 2.0 * c).abs() < 1e-9 * c);
    }

    #[test]
    fn c2_requires_regularity() {
        let h = Hypergraph::from_one_based(3, &[vec![1, 2], vec![2, 3]]).unwrap();
        assert!(matches!(
            compute_c2(&identity(3), &h),
            Err(Error::NotRegular)
        ));
    }

    fn singleton_codes(coeffs: &[f64]) -> SparseCodeSet {
        let m = coeffs.len();
        let mut x = DMatrix::zeros(m, m);
        for (i, &c) in coeffs.iter().enumerate() {
            x[(i, i)] = c;
        }
        SparseCodeSet::from_matrix(1, x).unwrap()
    }

    #[test]
    fn c1_singletons_identity() {
        let h = Hypergraph::complete(3, 1).unwrap();
        let c1 = compute_c1(&identity(3), &singleton_codes(&[1.0, 1.0, 1.0]), &h).unwrap();
        assert!((c1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn c1_singletons_general_formula() {
        // oracle: 2·max‖A_j‖ / min_i(|c_i|·‖A_i‖), since coordinate lines give ξ = 0
        // only for orthogonal columns; use a diagonal A to keep ξ = 0.
        let a = Dictionary::new(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            1.0, 3.0, 0.5,
        ])))
        .unwrap();
        let coeffs = [2.0, -0.25, 4.0];
        let h = Hypergraph::complete(3, 1).unwrap();
        let c1 = compute_c1(&a, &singleton_codes(&coeffs), &h).unwrap();
        let norms = [1.0, 3.0, 0.5];
        let den = (0..3)
            .map(|i| coeffs[i].abs() * norms[i])
            .fold(f64::INFINITY, f64::min);
        let expected = 2.0 * 3.0 / den;
        assert!((c1 - expected).abs() < 1e-12 * expected);
        let min_c = coeffs
            .iter()
            .map(|c: &f64| c.abs())
            .fold(f64::INFINITY, f64::min);
        assert!(c1 >= 1.0 / min_c);
    }

    #[test]
    fn c1_decreases_with_larger_codes() {
        let h = Hypergraph::cyclic(4, 2).unwrap();
        let a = Dictionary::new(DMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                1.0
            } else {
                0.1 * ((i + 2 * j) as f64).cos()
            }
        }))
        .unwrap();
        let make = |scale: f64| {
            let parts: Vec<_> = h
                .edges()
                .iter()
                .map(|s| {
                    let c = vandermonde_codes(4, s, 3, &[0.7, 1.3]).unwrap();
                    SparseCodeSet::new(2, c.codes() * scale, c.supports().to_vec()).unwrap()
                })
                .collect();
            SparseCodeSet::concat(&parts).unwrap()
        };
        let c1 = compute_c1(&a, &make(1.0), &h).unwrap();
        let c1_double = compute_c1(&a, &make(2.0), &h).unwrap();
        assert!(c1_double < c1);
        assert!((c1_double - c1 / 2.0).abs() < 1e-9 * c1);
    }

    #[test]
    fn c1_missing_codes() {
        let h = Hypergraph::cyclic(4, 2).unwrap();
        let codes = vandermonde_codes(4, &SupportSet::new([0, 1]), 3, &[0.7, 1.3]).unwrap();
        assert!(matches!(
            compute_c1(&identity(4), &codes, &h),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn c1_dependent_codes() {
        let h = Hypergraph::complete(2, 1).unwrap();
        let codes = singleton_codes(&[1.0, 1e-14]);
        assert!(matches!(
            compute_c1(&identity(2), &codes, &h),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon_for(0.0, 0.0, 3.0, 0.5, 1.0).unwrap(), 0.0);
        let e = epsilon_for(0.3, 0.1, 3.0, 0.5, 1.0).unwrap();
        assert!((e - 0.05 / 4.3).abs() < 1e-15);
        assert!((e - 0.011628).abs() < 1e-6);
        let big = epsilon_for(f64::INFINITY, 0.1, 3.0, 0.5, 1.0).unwrap();
        assert!((big - 0.05 / 4.3).abs() < 1e-15);
        assert!(epsilon_for(-1.0, 0.1, 3.0, 0.5, 1.0).is_err());
        assert!(epsilon_for(1.0, 0.1, 0.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn sample_sizes() {
        let c5 = Hypergraph::cyclic(5, 2).unwrap();
        assert_eq!(sample_size_cor1(5, 2, &c5).unwrap(), BigUint::from(55u32));
        let c4 = Hypergraph::cyclic(4, 2).unwrap();
        assert_eq!(sample_size_cor1(4, 2, &c4).unwrap(), BigUint::from(28u32));
        let s1 = Hypergraph::complete(4, 1).unwrap();
        assert_eq!(sample_size_cor1(4, 1, &s1).unwrap(), BigUint::from(4u32));
        // |H| = m reproduces m(k−1)C(m,k) + m
        assert_eq!(
            sample_size_cor1(5, 2, &c5).unwrap(),
            BigUint::from(5u32 * 10 + 5)
        );

        let t = sample_size_thm2(5, 2, &c5).unwrap();
        assert_eq!(t.per_support, BigUint::from(61u32));
        assert_eq!(t.total, BigUint::from(305u32));
        let t = sample_size_thm2(4, 2, &c4).unwrap();
        assert_eq!(t.per_support, BigUint::from(39u32));
        assert_eq!(t.total, BigUint::from(156u32));
        assert_eq!(
            sample_size_thm2(4, 1, &s1).unwrap().per_support,
            BigUint::from(1u32)
        );
    }

    #[test]
    fn sample_sizes_do_not_overflow() {
        let h = Hypergraph::cyclic(200, 100).unwrap();
        let n = sample_size_cor1(200, 100, &h).unwrap();
        assert!(n.bits() > 190);
    }
}
