//! Matrix and subspace quantities: restricted lower bounds, spark checks,
//! subspace distance, Friedrichs angles, the ordering-maximized
//! product-of-sines aggregate `ξ`, and numerical subspace intersection.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::combinatorics::{binomial, ensure_binomial_within, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, SupportSet};

/// Relative rank tolerance used when callers do not supply one.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Largest collection for which `ξ` enumerates every ordering.
pub const XI_ORDERING_CAP: usize = 8;

/// Cap on the number of minors evaluated by [`spark_polynomial`].
pub const SPARK_POLYNOMIAL_CAP: usize = 1_000_000;

const ORTHONORMAL_TOL: f64 = 1e-10;

/// A real `n × m` dictionary with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary(DMatrix<f64>);

impl Dictionary {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "dictionary must be at least 1x1".into(),
            ));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "dictionary entries must be finite".into(),
            ));
        }
        Ok(Dictionary(entries))
    }

    pub fn from_row_slice(n: usize, m: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * m {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n}x{m} dictionary",
                data.len()
            )));
        }
        Dictionary::new(DMatrix::from_row_slice(n, m, data))
    }

    pub fn identity(n: usize) -> Self {
        Dictionary(DMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn m(&self) -> usize {
        self.0.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// The submatrix `A_S`.
    pub fn restrict(&self, support: &SupportSet) -> DMatrix<f64> {
        select_columns(&self.0, support.indices())
    }

    pub fn max_column_norm(&self) -> f64 {
        max_column_norm(&self.0)
    }
}

impl AsRef<DMatrix<f64>> for Dictionary {
    fn as_ref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

pub fn select_columns(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    m.select_columns(cols.iter())
}

pub fn max_column_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Singular values in descending order, with the matching left singular
/// vectors when requested. Inputs are finite, for which the iteration
/// always converges.
fn svd_desc(m: &DMatrix<f64>, want_u: bool) -> (Vec<f64>, Option<DMatrix<f64>>) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (Vec::new(), want_u.then(|| DMatrix::zeros(m.nrows(), 0)));
    }
    let fm = to_faer(m);
    if !want_u {
        let sv = fm
            .singular_values()
            .expect("SVD of a finite matrix converges");
        return (sv, None);
    }
    let svd = fm.thin_svd().expect("SVD of a finite matrix converges");
    let s = svd.S().column_vector();
    let values = (0..s.nrows()).map(|i| s[i]).collect::<Vec<f64>>();
    let u = svd.U();
    let u = DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]);
    (values, Some(u))
}

/// Eigenvalues of a symmetric matrix in ascending order with their
/// eigenvectors as columns.
fn symmetric_eigen_asc(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = to_faer(m)
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("eigendecomposition of a finite symmetric matrix converges");
    let s = eig.S().column_vector();
    let u = eig.U();
    (
        (0..s.nrows()).map(|i| s[i]).collect(),
        DMatrix::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)]),
    )
}

/// Largest singular value (0 for an empty matrix).
pub fn largest_singular_value(m: &DMatrix<f64>) -> f64 {
    svd_desc(m, false).0.first().copied().unwrap_or(0.0)
}

/// Smallest singular value of the map `R^cols → R^rows`, i.e. its lower
/// bound. Zero whenever there are more columns than rows.
pub fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.ncols() > m.nrows() {
        return 0.0;
    }
    svd_desc(m, false).0.last().copied().unwrap_or(0.0)
}

/// A subspace of `R^n` carried by an orthonormal basis (`n × d`, `d = 0`
/// for the zero subspace).
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace {
            basis: DMatrix::zeros(ambient, 0),
        }
    }

    /// Wraps a basis after checking `BᵀB = I` to within `1e-10`.
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Result<Self> {
        let d = basis.ncols();
        if d > basis.nrows() {
            return Err(Error::InvalidArgument(format!(
                "{d} basis vectors in R^{}",
                basis.nrows()
            )));
        }
        let gram = basis.transpose() * &basis;
        let err = (gram - DMatrix::<f64>::identity(d, d)).amax();
        if err > ORTHONORMAL_TOL {
            return Err(Error::InvalidArgument(format!(
                "basis is not orthonormal (deviation {err:e})"
            )));
        }
        Ok(Subspace { basis })
    }

    /// Column span of `m`, see [`orthonormal_basis`].
    pub fn span(m: &DMatrix<f64>, rank_tol: f64) -> Result<Self> {
        orthonormal_basis(m, rank_tol)
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.dim() == 0 {
            return DVector::zeros(x.len());
        }
        &self.basis * (self.basis.transpose() * x)
    }

    /// `dist(x, V) = min_{v ∈ V} ‖x − v‖₂`.
    pub fn distance_to_point(&self, x: &DVector<f64>) -> f64 {
        (x - self.project(x)).norm()
    }

    fn residual_of(&self, vectors: &DMatrix<f64>) -> DMatrix<f64> {
        if self.dim() == 0 {
            return vectors.clone();
        }
        vectors - &self.basis * (self.basis.transpose() * vectors)
    }
}

/// Orthonormal basis of the column span of `m`. The numerical rank counts
/// singular values above `rank_tol × σ_max`. No columns span the zero
/// subspace.
pub fn orthonormal_basis(m: &DMatrix<f64>, rank_tol: f64) -> Result<Subspace> {
    if !(rank_tol > 0.0 && rank_tol.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "rank_tol must be positive (got {rank_tol})"
        )));
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidArgument(
            "ambient dimension must be positive".into(),
        ));
    }
    if m.ncols() == 0 {
        return Ok(Subspace::zero(m.nrows()));
    }
    let (sv, u) = svd_desc(m, true);
    let u = u.expect("left singular vectors requested");
    let smax = sv[0];
    if smax == 0.0 {
        return Ok(Subspace::zero(m.nrows()));
    }
    let rank = sv.iter().take_while(|&&s| s > rank_tol * smax).count();
    Ok(Subspace {
        basis: u.columns(0, rank).into_owned(),
    })
}

fn check_columns(m: &DMatrix<f64>, support: &SupportSet) -> Result<()> {
    match support.max_index() {
        Some(j) if j >= m.ncols() => Err(Error::DimensionMismatch(format!(
            "edge {support} references column {} of a matrix with {} columns",
            j + 1,
            m.ncols()
        ))),
        None => Err(Error::InvalidArgument("empty support".into())),
        _ => Ok(()),
    }
}

/// `σ_min(M_S) / √|S|`.
fn normalized_lower_bound(m: &DMatrix<f64>, cols: &[usize]) -> f64 {
    smallest_singular_value(&select_columns(m, cols)) / (cols.len() as f64).sqrt()
}

/// Hypergraph-restricted lower bound: the minimum over edges `S` of
/// `σ_min(M_S) / √|S|`.
///
/// For a `k`-uniform hypergraph this is the usual `1/√k` prefactor; for
/// non-uniform ones (such as pairwise unions) each edge is normalized by its
/// own size.
pub fn restricted_lower_bound(m: &DMatrix<f64>, h: &Hypergraph) -> Result<f64> {
    if h.is_empty() {
        return Err(Error::InvalidArgument("hypergraph has no edges".into()));
    }
    let mut best = f64::INFINITY;
    for edge in h.edges() {
        check_columns(m, edge)?;
        best = best.min(normalized_lower_bound(m, edge.indices()));
    }
    Ok(best)
}

/// `L_k(M)`: the restricted lower bound over every `k`-subset of columns.
pub fn lower_bound_k(m: &DMatrix<f64>, k: usize) -> Result<f64> {
    let cols = m.ncols();
    if k == 0 || k > cols {
        return Err(Error::InvalidArgument(format!(
            "lower bound order k={k} must lie in 1..={cols}"
        )));
    }
    ensure_binomial_within("lower bound subsets", cols, k, DEFAULT_ENUMERATION_CAP)?;
    Ok((0..cols)
        .combinations(k)
        .map(|s| normalized_lower_bound(m, &s))
        .fold(f64::INFINITY, f64::min))
}

/// Number of columns the spark condition inspects: `min(2k, m)`.
pub fn spark_order(k: usize, m: usize) -> usize {
    (2 * k).min(m)
}

/// Every `min(2k, m)` columns of `m` are linearly independent, judged by
/// `σ_min > rank_tol · σ_max` on each column subset.
pub fn spark_condition(m: &DMatrix<f64>, k: usize, rank_tol: f64) -> Result<bool> {
    if k == 0 {
        return Err(Error::InvalidArgument("sparsity k must be positive".into()));
    }
    let s = spark_order(k, m.ncols());
    if s > m.nrows() {
        return Ok(false);
    }
    ensure_binomial_within("spark subsets", m.ncols(), s, DEFAULT_ENUMERATION_CAP)?;
    for cols in (0..m.ncols()).combinations(s) {
        let (sv, _) = svd_desc(&select_columns(m, &cols), false);
        let (smax, smin) = (sv[0], *sv.last().unwrap());
        if smin <= rank_tol * smax {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Threshold that `L_{min(2k,m)}` must exceed for the lower-bound route to
/// the spark verdict: `rank_tol · max_j ‖M_j‖₂`.
pub fn spark_threshold(m: &DMatrix<f64>, rank_tol: f64) -> f64 {
    rank_tol * max_column_norm(m)
}

/// Spark verdict through the restricted lower bound instead of per-subset
/// ranks.
pub fn spark_via_lower_bound(m: &DMatrix<f64>, k: usize, rank_tol: f64) -> Result<bool> {
    if k == 0 {
        return Err(Error::InvalidArgument("sparsity k must be positive".into()));
    }
    let s = spark_order(k, m.ncols());
    Ok(lower_bound_k(m, s)? > spark_threshold(m, rank_tol))
}

fn spark_minor_count_check(m: &DMatrix<f64>, s: usize) -> Result<()> {
    let count = binomial(m.ncols(), s) * binomial(m.nrows(), s);
    if count > SPARK_POLYNOMIAL_CAP.into() {
        return Err(Error::CapExceeded {
            what: "spark polynomial minors",
            count: count.to_string(),
            cap: SPARK_POLYNOMIAL_CAP,
        });
    }
    Ok(())
}

/// Per column subset `S`, the sum of squared maximal minors
/// `Σ_{S'} det(M_{S',S})²`.
fn spark_polynomial_raw_factors(m: &DMatrix<f64>, k: usize) -> Result<Vec<(Vec<usize>, f64)>> {
    if k == 0 {
        return Err(Error::InvalidArgument("sparsity k must be positive".into()));
    }
    let s = spark_order(k, m.ncols());
    spark_minor_count_check(m, s)?;
    let row_sets: Vec<Vec<usize>> = (0..m.nrows()).combinations(s).collect();
    Ok((0..m.ncols())
        .combinations(s)
        .map(|cols| {
            let sum = row_sets
                .iter()
                .map(|rows| {
                    let minor = DMatrix::from_fn(s, s, |a, b| m[(rows[a], cols[b])]);
                    minor.determinant().powi(2)
                })
                .sum();
            (cols, sum)
        })
        .collect())
}

/// The spark polynomial
/// `f(M) = Π_{S ∈ C([m], s)} Σ_{S' ∈ C([n], s)} det(M_{S',S})²` with
/// `s = min(2k, m)`. An empty inner sum (`n < s`) contributes zero.
pub fn spark_polynomial(m: &DMatrix<f64>, k: usize) -> Result<f64> {
    Ok(spark_polynomial_raw_factors(m, k)?
        .into_iter()
        .map(|(_, f)| f)
        .product())
}

/// Factors of [`spark_polynomial`] divided by `Π_{j∈S} ‖M_j‖²`, so each lies
/// in `[0, 1]` (Hadamard's inequality). Zero columns give a zero factor.
pub fn spark_polynomial_factors(m: &DMatrix<f64>, k: usize) -> Result<Vec<f64>> {
    let norms: Vec<f64> = m.column_iter().map(|c| c.norm_squared()).collect();
    Ok(spark_polynomial_raw_factors(m, k)?
        .into_iter()
        .map(|(cols, f)| {
            let scale: f64 = cols.iter().map(|&j| norms[j]).product();
            if scale == 0.0 {
                0.0
            } else {
                f / scale
            }
        })
        .collect())
}

/// Floating-point verdict on `f(M) ≠ 0`: every normalized factor exceeds
/// `rank_tol²`.
pub fn spark_polynomial_nonzero(m: &DMatrix<f64>, k: usize, rank_tol: f64) -> Result<bool> {
    let tol2 = rank_tol * rank_tol;
    Ok(spark_polynomial_factors(m, k)?.iter().all(|&f| f > tol2))
}

fn check_ambient(collection: &[&Subspace]) -> Result<usize> {
    let n = collection
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty subspace collection".into()))?
        .ambient();
    if let Some(bad) = collection.iter().find(|s| s.ambient() != n) {
        return Err(Error::DimensionMismatch(format!(
            "ambient dimensions {n} and {}",
            bad.ambient()
        )));
    }
    Ok(n)
}

/// `d(U, V) = max_{u ∈ U, ‖u‖ ≤ 1} dist(u, V)`, the largest singular value
/// of `(I − P_V)·basis(U)`.
pub fn subspace_distance(u: &Subspace, v: &Subspace) -> Result<f64> {
    check_ambient(&[u, v])?;
    if u.dim() == 0 {
        return Ok(0.0);
    }
    Ok(largest_singular_value(&v.residual_of(u.basis())).clamp(0.0, 1.0))
}

/// Numerical intersection of a collection of subspaces: the eigenvectors of
/// `Σ (I − P_{V_i})` whose eigenvalue is below `rank_tol`.
pub fn intersect(collection: &[Subspace], rank_tol: f64) -> Result<Subspace> {
    let refs: Vec<&Subspace> = collection.iter().collect();
    intersect_refs(&refs, rank_tol)
}

fn intersect_refs(collection: &[&Subspace], rank_tol: f64) -> Result<Subspace> {
    let n = check_ambient(collection)?;
    if collection.len() == 1 {
        return Ok(collection[0].clone());
    }
    if collection.iter().any(|s| s.dim() == 0) {
        return Ok(Subspace::zero(n));
    }
    let mut sum = DMatrix::<f64>::zeros(n, n);
    for s in collection {
        sum += DMatrix::<f64>::identity(n, n) - s.basis() * s.basis().transpose();
    }
    // symmetrize against round-off before the eigensolve
    let sum = (&sum + sum.transpose()) * 0.5;
    let (values, vectors) = symmetric_eigen_asc(&sum);
    let kept = values.iter().take_while(|&&v| v < rank_tol).count();
    Ok(Subspace {
        basis: vectors.columns(0, kept).into_owned(),
    })
}

/// Orthonormal basis for `U ∩ meet^⊥`, taken as the leading
/// `dim U − dim meet` left singular vectors of `(I − P_meet)·basis(U)`.
fn complement_within(u: &Subspace, meet: &Subspace) -> Subspace {
    let d = u.dim().saturating_sub(meet.dim());
    if d == 0 {
        return Subspace::zero(u.ambient());
    }
    let (_, left) = svd_desc(&meet.residual_of(u.basis()), true);
    Subspace {
        basis: left
            .expect("left singular vectors requested")
            .columns(0, d)
            .into_owned(),
    }
}

/// Cosine of the Friedrichs angle; zero when either complement of the
/// intersection is trivial.
fn friedrichs_cosine(u: &Subspace, w: &Subspace, rank_tol: f64) -> Result<f64> {
    let meet = intersect_refs(&[u, w], rank_tol)?;
    let uc = complement_within(u, &meet);
    let wc = complement_within(w, &meet);
    if uc.dim() == 0 || wc.dim() == 0 {
        return Ok(0.0);
    }
    Ok(largest_singular_value(&(uc.basis().transpose() * wc.basis())).clamp(0.0, 1.0))
}

/// Friedrichs angle `θ(U, W) ∈ (0, π/2]`: the principal angle between the
/// parts of `U` and `W` orthogonal to `U ∩ W`. It is `π/2` whenever one
/// subspace contains the other.
pub fn friedrichs_angle(u: &Subspace, w: &Subspace, rank_tol: f64) -> Result<f64> {
    check_ambient(&[u, w])?;
    if u.dim() == 0 && w.dim() == 0 {
        return Err(Error::InvalidArgument(
            "Friedrichs angle needs at least one nonzero subspace".into(),
        ));
    }
    Ok(friedrichs_cosine(u, w, rank_tol)?.acos())
}

/// `ξ` of a collection with the default ordering cap.
pub fn xi(collection: &[Subspace], rank_tol: f64) -> Result<f64> {
    xi_with_cap(collection, rank_tol, XI_ORDERING_CAP)
}

/// `ξ(V) = sqrt(1 − max_σ Π_{i<ℓ} sin² θ(V_σ(i), ∩_{j>i} V_σ(j)))`, maximized
/// over every ordering `σ`; zero for a single subspace.
pub fn xi_with_cap(collection: &[Subspace], rank_tol: f64, cap: usize) -> Result<f64> {
    let refs: Vec<&Subspace> = collection.iter().collect();
    check_ambient(&refs)?;
    let l = collection.len();
    if l > cap {
        return Err(Error::CapExceeded {
            what: "xi orderings",
            count: format!("{l}!"),
            cap,
        });
    }
    if l == 1 {
        return Ok(0.0);
    }

    let mut meets: HashMap<u32, Subspace> = HashMap::new();
    let mut sines: HashMap<(usize, u32), f64> = HashMap::new();
    let mut best: f64 = 0.0;
    for order in (0..l).permutations(l) {
        let mut product = 1.0;
        for p in 0..l - 1 {
            let mask = order[p + 1..].iter().fold(0u32, |acc, &j| acc | (1 << j));
            let key = (order[p], mask);
            let s2 = match sines.get(&key) {
                Some(&v) => v,
                None => {
                    if let Entry::Vacant(slot) = meets.entry(mask) {
                        let members: Vec<&Subspace> = (0..l)
                            .filter(|j| mask & (1 << j) != 0)
                            .map(|j| &collection[j])
                            .collect();
                        slot.insert(intersect_refs(&members, rank_tol)?);
                    }
                    let c = friedrichs_cosine(&collection[order[p]], &meets[&mask], rank_tol)?;
                    let v = 1.0 - c * c;
                    sines.insert(key, v);
                    v
                }
            };
            product *= s2;
        }
        best = best.max(product);
    }
    Ok((1.0 - best).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn e(n: usize, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v
    }

    fn span(cols: &[DVector<f64>]) -> Subspace {
        orthonormal_basis(&DMatrix::from_columns(cols), DEFAULT_RANK_TOL).unwrap()
    }

    /// Independent route to σ_min(M_S): sqrt of the smallest Gram eigenvalue.
    fn gram_lower_bound(m: &DMatrix<f64>, cols: &[usize]) -> f64 {
        let sub = select_columns(m, cols);
        let g = sub.transpose() * &sub;
        let eig = SymmetricEigen::new(g);
        eig.eigenvalues.min().max(0.0).sqrt() / (cols.len() as f64).sqrt()
    }

    fn non_spark_example() -> DMatrix<f64> {
        let mut a = DMatrix::<f64>::zeros(5, 6);
        for i in 0..5 {
            a[(i, i)] = 1.0;
        }
        a[(0, 5)] = 1.0;
        a[(2, 5)] = 1.0;
        a[(4, 5)] = 1.0;
        a
    }

    #[test]
    fn orthonormal_basis_examples() {
        let s = orthonormal_basis(&DMatrix::identity(3, 3), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.dim(), 3);

        let m = DMatrix::from_columns(&[e(3, 0), e(3, 0) * 2.0]);
        let s = orthonormal_basis(&m, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.dim(), 1);
        assert!((s.basis()[(0, 0)].abs() - 1.0).abs() < 1e-12);

        let s = orthonormal_basis(&DMatrix::zeros(3, 2), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.dim(), 0);
        assert_eq!(s.ambient(), 3);

        assert!(orthonormal_basis(&DMatrix::zeros(0, 2), DEFAULT_RANK_TOL).is_err());
        assert_eq!(
            orthonormal_basis(&DMatrix::zeros(3, 0), DEFAULT_RANK_TOL)
                .unwrap()
                .dim(),
            0
        );
        assert!(orthonormal_basis(&DMatrix::identity(2, 2), 0.0).is_err());
    }

    #[test]
    fn from_orthonormal_rejects_skewed_basis() {
        let b = DMatrix::from_columns(&[e(2, 0), (e(2, 0) + e(2, 1)) * FRAC_1_SQRT_2]);
        assert!(Subspace::from_orthonormal(b).is_err());
    }

    #[test]
    fn lower_bound_of_identity_pairs() {
        let i4 = DMatrix::<f64>::identity(4, 4);
        let h = Hypergraph::complete(4, 2).unwrap();
        let l = restricted_lower_bound(&i4, &h).unwrap();
        assert!((l - FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn l1_is_min_column_norm() {
        let a = DMatrix::from_row_slice(2, 3, &[3.0, 0.0, 1.0, 4.0, 0.5, 1.0]);
        let h = Hypergraph::complete(3, 1).unwrap();
        let expected = a
            .column_iter()
            .map(|c| c.norm())
            .fold(f64::INFINITY, f64::min);
        assert!((restricted_lower_bound(&a, &h).unwrap() - expected).abs() < 1e-14);
        assert!((lower_bound_k(&a, 1).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn non_spark_dictionary_has_positive_union_bound() {
        let a = non_spark_example();
        let h2 = Hypergraph::cyclic(6, 2).unwrap().pairwise_unions().unwrap();
        let l = restricted_lower_bound(&a, &h2).unwrap();
        // oracle: Gram eigenvalue route, edge by edge
        let oracle = h2
            .edges()
            .iter()
            .map(|s| gram_lower_bound(&a, s.indices()))
            .fold(f64::INFINITY, f64::min);
        assert!(l > 1e-3, "L_2H = {l}");
        assert!((l - oracle).abs() < 1e-10);
        assert!(!spark_condition(&a, 2, DEFAULT_RANK_TOL).unwrap());
        assert!(!spark_via_lower_bound(&a, 2, DEFAULT_RANK_TOL).unwrap());
    }

    #[test]
    fn rank_one_tall_matrix_keeps_its_norm() {
        // rank one with unit Frobenius norm, so σ = (1, 0)
        let r = DMatrix::from_row_slice(
            5,
            2,
            &[
                -0.08880264775910757,
                0.7186724741088311,
                -0.005037917748173748,
                0.040771451120001544,
                -0.07977482804929656,
                0.6456110768376885,
                0.015082482747554748,
                -0.1220612838177172,
                -0.023148641234418982,
                0.18734003645169098,
            ],
        );
        assert!((largest_singular_value(&r) - r.norm()).abs() < 1e-12);
        assert!(smallest_singular_value(&r) < 1e-12);
        let s = orthonormal_basis(&r, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(s.residual_of(&r).norm() < 1e-12);
    }

    #[test]
    fn lower_bound_k_examples() {
        for m in 1..=6 {
            let id = DMatrix::<f64>::identity(m, m);
            for k in 1..=m {
                let l = lower_bound_k(&id, k).unwrap();
                assert!((l - 1.0 / (k as f64).sqrt()).abs() < 1e-12);
            }
        }
        let mut a = DMatrix::<f64>::identity(3, 3);
        a.column_mut(1).fill(0.0);
        assert_eq!(lower_bound_k(&a, 1).unwrap(), 0.0);
        assert!(lower_bound_k(&a, 4).is_err());
        assert!(lower_bound_k(&a, 0).is_err());
    }

    #[test]
    fn restricted_lower_bound_errors() {
        let a = DMatrix::<f64>::identity(3, 3);
        let h = Hypergraph::from_one_based(4, &[vec![1, 4]]).unwrap();
        assert!(matches!(
            restricted_lower_bound(&a, &h),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn spark_examples() {
        let id = DMatrix::<f64>::identity(4, 4);
        assert!(spark_condition(&id, 1, DEFAULT_RANK_TOL).unwrap());
        assert!(spark_condition(&id, 2, DEFAULT_RANK_TOL).unwrap());
        let dup = DMatrix::from_columns(&[e(3, 0), e(3, 1), e(3, 0)]);
        assert!(!spark_condition(&dup, 1, DEFAULT_RANK_TOL).unwrap());
        // 2k > m uses all columns
        assert!(spark_condition(&DMatrix::identity(3, 3), 2, DEFAULT_RANK_TOL).unwrap());
        // more columns inspected than rows
        assert!(!spark_condition(
            &DMatrix::identity(2, 4).map(|v: f64| v + 0.1),
            2,
            DEFAULT_RANK_TOL
        )
        .unwrap());
    }

    #[test]
    fn spark_polynomial_examples() {
        assert_eq!(spark_polynomial(&DMatrix::identity(2, 2), 1).unwrap(), 1.0);
        let twin = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        assert_eq!(spark_polynomial(&twin, 1).unwrap(), 0.0);
        // Cauchy-Binet: each factor equals det(M_Sᵀ M_S)
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.5, -1.0, 0.3, 2.0, 0.7, 1.1, -0.4]);
        let f = spark_polynomial(&m, 1).unwrap();
        let oracle: f64 = (0..3)
            .combinations(2)
            .map(|s| {
                let sub = select_columns(&m, &s);
                (sub.transpose() * &sub).determinant()
            })
            .product();
        assert!((f - oracle).abs() < 1e-10 * oracle.abs());
    }

    #[test]
    fn spark_polynomial_cap() {
        let m = DMatrix::<f64>::identity(30, 30);
        assert!(matches!(
            spark_polynomial(&m, 3),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn subspace_distance_examples() {
        let u = span(&[e(3, 0)]);
        let v = span(&[e(3, 0), e(3, 1)]);
        assert!(subspace_distance(&u, &v).unwrap() < 1e-15);
        let w = span(&[e(3, 1)]);
        assert!((subspace_distance(&u, &w).unwrap() - 1.0).abs() < 1e-15);
        let diag = span(&[(e(3, 0) + e(3, 1)) * FRAC_1_SQRT_2]);
        // oracle: distance of the unit vector e1 to the diagonal line
        let oracle = diag.distance_to_point(&e(3, 0));
        let d = subspace_distance(&u, &diag).unwrap();
        assert!((d - oracle).abs() < 1e-14);
        assert!((d - FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(subspace_distance(&Subspace::zero(3), &w).unwrap(), 0.0);
        assert!(subspace_distance(&u, &Subspace::zero(4)).is_err());
    }

    #[test]
    fn friedrichs_examples() {
        let u = span(&[e(3, 0)]);
        let w = span(&[e(3, 0), e(3, 1)]);
        assert!((friedrichs_angle(&u, &w, DEFAULT_RANK_TOL).unwrap() - FRAC_PI_2).abs() < 1e-12);
        let v = span(&[e(3, 1)]);
        assert!((friedrichs_angle(&u, &v, DEFAULT_RANK_TOL).unwrap() - FRAC_PI_2).abs() < 1e-12);
        let diag = span(&[e(3, 0) + e(3, 1)]);
        // oracle: brute maximum of |<u, w>| over unit pairs on the two lines
        let oracle = (0..=3600)
            .map(|t| {
                let a = t as f64 * std::f64::consts::PI / 3600.0;
                let x = e(3, 0) * a.cos();
                (x.dot(&diag.basis().column(0))).abs()
            })
            .fold(0.0, f64::max);
        let theta = friedrichs_angle(&u, &diag, DEFAULT_RANK_TOL).unwrap();
        assert!((theta.cos() - oracle).abs() < 1e-9);
        assert!((theta - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn friedrichs_with_shared_line() {
        // planes sharing e3, otherwise at 45 degrees
        let p = span(&[e(3, 2), e(3, 0)]);
        let q = span(&[e(3, 2), e(3, 0) + e(3, 1)]);
        let theta = friedrichs_angle(&p, &q, DEFAULT_RANK_TOL).unwrap();
        assert!((theta - FRAC_PI_4).abs() < 1e-9);
        assert!(
            friedrichs_angle(&Subspace::zero(3), &Subspace::zero(3), DEFAULT_RANK_TOL).is_err()
        );
    }

    #[test]
    fn xi_examples() {
        let u = span(&[e(3, 0), e(3, 1)]);
        assert_eq!(xi(&[u], DEFAULT_RANK_TOL).unwrap(), 0.0);
        let lines: Vec<Subspace> = (0..3).map(|i| span(&[e(3, i)])).collect();
        assert!(xi(&lines, DEFAULT_RANK_TOL).unwrap() < 1e-12);
        let pair = vec![span(&[e(2, 0)]), span(&[e(2, 0) + e(2, 1)])];
        let x = xi(&pair, DEFAULT_RANK_TOL).unwrap();
        assert!((x - FRAC_1_SQRT_2).abs() < 1e-12);
        let many: Vec<Subspace> = (0..9).map(|_| span(&[e(2, 0)])).collect();
        assert!(matches!(
            xi(&many, DEFAULT_RANK_TOL),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn intersect_examples() {
        let a = span(&[e(3, 0), e(3, 1)]);
        let b = span(&[e(3, 1), e(3, 2)]);
        let m = intersect(&[a.clone(), b], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(m.dim(), 1);
        assert!(subspace_distance(&m, &span(&[e(3, 1)])).unwrap() < 1e-12);
        let same = intersect(&[a.clone(), a.clone()], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(same.dim(), 2);
        assert!(subspace_distance(&same, &a).unwrap() < 1e-12);
        assert!(intersect(&[], DEFAULT_RANK_TOL).is_err());
    }

    #[test]
    fn intersect_matches_column_span_of_shared_support() {
        let a = Dictionary::identity(4);
        let s1 = SupportSet::new([0, 1]);
        let s2 = SupportSet::new([1, 2]);
        let spans = vec![
            Subspace::span(&a.restrict(&s1), DEFAULT_RANK_TOL).unwrap(),
            Subspace::span(&a.restrict(&s2), DEFAULT_RANK_TOL).unwrap(),
        ];
        let meet = intersect(&spans, DEFAULT_RANK_TOL).unwrap();
        let shared = Subspace::span(&a.restrict(&s1.intersection(&s2)), DEFAULT_RANK_TOL).unwrap();
        assert!(subspace_distance(&meet, &shared).unwrap() < 1e-10);
        assert!(subspace_distance(&shared, &meet).unwrap() < 1e-10);
    }

    #[test]
    fn dictionary_validation() {
        assert!(Dictionary::new(DMatrix::from_element(2, 2, f64::NAN)).is_err());
        assert!(Dictionary::new(DMatrix::zeros(0, 2)).is_err());
        assert!(Dictionary::from_row_slice(2, 2, &[1.0; 3]).is_err());
    }
}
