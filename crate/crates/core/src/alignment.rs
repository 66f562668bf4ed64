//! Resolving the permutation and scaling ambiguity between two dictionaries,
//! and checking the recovery inequalities for a candidate solution `(B, x̄)`.

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::assignment::{bottleneck_threshold, max_matching, min_sum_within};
use crate::certificate::StabilityCertificate;
use crate::codes::SparseCodeSet;
use crate::error::{Error, Result};
use crate::subspace::{lower_bound_k, Dictionary};

/// Slack added to every inequality check to absorb round-off.
pub const INEQUALITY_SLACK: f64 = 1e-9;

fn one_based<S: Serializer>(i: &usize, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(*i as u64 + 1)
}

fn one_based_list<S: Serializer>(v: &[usize], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|i| i + 1))
}

/// Source column `A_j` matched to target column `B_π(j)` with scale `c_j`,
/// so that `A_j ≈ c_j·B_π(j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchedPair {
    #[serde(serialize_with = "one_based")]
    pub source: usize,
    #[serde(serialize_with = "one_based")]
    pub target: usize,
    pub scale: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentResult {
    pub m: usize,
    pub m_bar: usize,
    /// Sorted by source column.
    pub pairs: Vec<MatchedPair>,
    pub max_column_error: f64,
    #[serde(serialize_with = "one_based_list")]
    pub unmatched_source: Vec<usize>,
    #[serde(serialize_with = "one_based_list")]
    pub unmatched_target: Vec<usize>,
}

impl AlignmentResult {
    pub fn pi(&self, source: usize) -> Option<usize> {
        self.pair(source).map(|p| p.target)
    }

    pub fn scale(&self, source: usize) -> Option<f64> {
        self.pair(source).map(|p| p.scale)
    }

    fn pair(&self, source: usize) -> Option<&MatchedPair> {
        self.pairs.iter().find(|p| p.source == source)
    }

    pub fn column_errors(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.error).collect()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `B_J̄·P·D`: the matched target columns, scaled, in source order.
    pub fn transformed_target(&self, b: &Dictionary) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = self
            .pairs
            .iter()
            .map(|p| b.matrix().column(p.target) * p.scale)
            .collect();
        if cols.is_empty() {
            DMatrix::zeros(b.n(), 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    }
}

/// Least-squares scale `c = ⟨a, b⟩/‖b‖²` and the residual `‖a − c·b‖₂`.
/// `None` when `b` is zero or the best scale is exactly zero, since such a
/// pair cannot come from an invertible diagonal.
pub fn pair_fit(a: &DVector<f64>, b: &DVector<f64>) -> Option<(f64, f64)> {
    let bb = b.norm_squared();
    if bb == 0.0 {
        return None;
    }
    let c = a.dot(b) / bb;
    if c == 0.0 || !c.is_finite() {
        return None;
    }
    Some((c, (a - b * c).norm()))
}

type FitTable = Vec<Vec<Option<(f64, f64)>>>;

fn fit_table(a: &Dictionary, b: &Dictionary) -> Result<FitTable> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch(format!(
            "dictionaries have {} and {} rows",
            a.n(),
            b.n()
        )));
    }
    if b.matrix().iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidArgument(
            "target dictionary is all zero".into(),
        ));
    }
    let bcols: Vec<DVector<f64>> = b.matrix().column_iter().map(|c| c.into_owned()).collect();
    Ok(a.matrix()
        .column_iter()
        .map(|ac| {
            let ac = ac.into_owned();
            bcols.iter().map(|bc| pair_fit(&ac, bc)).collect()
        })
        .collect())
}

/// Finds `π` and scales minimizing `max_j ‖A_j − c_j·B_π(j)‖₂` over
/// matchings of the largest attainable size (at most `min(m, m̄)`).
pub fn align_dictionaries(a: &Dictionary, b: &Dictionary) -> Result<AlignmentResult> {
    let fits = fit_table(a, b)?;
    let cols = b.m();
    let largest = max_matching(a.m(), cols, |r, c| fits[r][c].is_some())
        .iter()
        .flatten()
        .count();
    align_with_fits(&fits, a.m(), cols, largest)
}

/// Minimizes the largest column error over matchings of `target` columns,
/// then extends the matching with every further column that fits under the
/// same threshold. Errors if fewer than `target` columns can be matched.
pub fn align_dictionaries_with_target(
    a: &Dictionary,
    b: &Dictionary,
    target: usize,
) -> Result<AlignmentResult> {
    let fits = fit_table(a, b)?;
    align_with_fits(&fits, a.m(), b.m(), target)
}

fn align_with_fits(
    fits: &FitTable,
    m: usize,
    m_bar: usize,
    target: usize,
) -> Result<AlignmentResult> {
    let cost: Vec<Vec<Option<f64>>> = fits
        .iter()
        .map(|row| row.iter().map(|f| f.map(|(_, e)| e)).collect())
        .collect();
    let threshold = bottleneck_threshold(&cost, m_bar, target)
        .ok_or_else(|| Error::InvalidArgument(format!("no matching of {target} columns exists")))?;
    let matching = if target == 0 {
        vec![None; m]
    } else {
        min_sum_within(&cost, m_bar, threshold)
    };
    let mut pairs = Vec::new();
    for (j, t) in matching.iter().enumerate() {
        if let Some(t) = *t {
            let (scale, error) = fits[j][t].expect("matched pairs are allowed");
            pairs.push(MatchedPair {
                source: j,
                target: t,
                scale,
                error,
            });
        }
    }
    let used: Vec<bool> = (0..m_bar)
        .map(|t| pairs.iter().any(|p| p.target == t))
        .collect();
    Ok(AlignmentResult {
        m,
        m_bar,
        max_column_error: pairs.iter().map(|p| p.error).fold(0.0, f64::max),
        unmatched_source: (0..m).filter(|&j| matching[j].is_none()).collect(),
        unmatched_target: (0..m_bar).filter(|&t| !used[t]).collect(),
        pairs,
    })
}

/// `Σ_{j∈J} |x_j − x̄_π(j)/c_j|`.
pub fn code_alignment_error(
    x: &DVector<f64>,
    xbar: &DVector<f64>,
    al: &AlignmentResult,
) -> Result<f64> {
    if x.len() != al.m || xbar.len() != al.m_bar {
        return Err(Error::DimensionMismatch(format!(
            "codes of length {} and {} for an alignment of {} onto {}",
            x.len(),
            xbar.len(),
            al.m,
            al.m_bar
        )));
    }
    let mut total = 0.0;
    for p in &al.pairs {
        if p.scale == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "zero scale on source column {}",
                p.source + 1
            )));
        }
        total += (x[p.source] - xbar[p.target] / p.scale).abs();
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnBoundCheck {
    /// Number of matched columns the check covers.
    pub columns: usize,
    pub max_error: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodeBoundCheck {
    pub errors: Vec<f64>,
    pub bounds: Vec<f64>,
    /// Code with the largest error-to-bound ratio (1-based).
    pub worst_code: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistenceCheck {
    pub order: usize,
    pub lower_bound: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub eps: f64,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub m: usize,
    pub m_bar: usize,
    pub r: usize,
    pub m_bar_ok: bool,
    /// Guaranteed size of `J` when `(r−1)·m̄ < m·r`.
    pub required_matched: Option<usize>,
    pub matched_ok: bool,
    pub alignment: AlignmentResult,
    /// Source columns (1-based) of the best-scoring `J` used in the column check.
    #[serde(serialize_with = "one_based_list")]
    pub j: Vec<usize>,
    pub column_bound: ColumnBoundCheck,
    pub code_bound: Option<CodeBoundCheck>,
    pub persistence: Option<PersistenceCheck>,
    pub notes: Vec<String>,
}

impl Theorem1Report {
    pub fn all_pass(&self) -> bool {
        self.m_bar_ok
            && self.matched_ok
            && self.column_bound.pass
            && self.code_bound.as_ref().is_none_or(|c| c.pass)
            && self.persistence.as_ref().is_none_or(|p| p.pass)
    }
}

/// Checks the conclusions of the stability theorem for a candidate solution
/// `(B, x̄)` that reproduces every `A·x_i` to within `eps`.
pub fn verify_theorem1(
    a: &Dictionary,
    codes: &SparseCodeSet,
    b: &Dictionary,
    codes_bar: &DMatrix<f64>,
    cert: &StabilityCertificate,
    eps: f64,
) -> Result<Theorem1Report> {
    let (m, m_bar) = (a.m(), b.m());
    if b.n() != a.n() {
        return Err(Error::DimensionMismatch(format!(
            "dictionaries have {} and {} rows",
            a.n(),
            b.n()
        )));
    }
    if codes.m() != m || codes_bar.nrows() != m_bar || codes_bar.ncols() != codes.len() {
        return Err(Error::DimensionMismatch(format!(
            "codes {}x{} and {}x{} do not fit dictionaries with {m} and {m_bar} columns",
            codes.m(),
            codes.len(),
            codes_bar.nrows(),
            codes_bar.ncols()
        )));
    }
    if cert.m != m || cert.n != a.n() {
        return Err(Error::DimensionMismatch(
            "certificate is for a different dictionary".into(),
        ));
    }
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "eps must be finite and >= 0 (got {eps})"
        )));
    }

    let residuals: Vec<f64> = (0..codes.len())
        .map(|i| (a.matrix() * codes.codes().column(i) - b.matrix() * codes_bar.column(i)).norm())
        .collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    if max_residual > eps {
        return Err(Error::HypothesisViolated(format!(
            "max residual {max_residual:e} exceeds eps = {eps:e}"
        )));
    }
    let (Some(c1), Some(eps_max), Some(r)) = (cert.c1, cert.eps_max_dictionary, cert.r) else {
        return Err(Error::HypothesisViolated(
            "certificate does not establish C1 and the noise threshold".into(),
        ));
    };
    if eps >= eps_max {
        return Err(Error::AboveThreshold {
            eps,
            threshold: eps_max,
        });
    }

    let mut notes = Vec::new();
    let m_bar_ok = m_bar >= m;
    if !m_bar_ok {
        notes.push(format!("m_bar = {m_bar} < m = {m} contradicts the theorem"));
    }
    let (mi, mbi, ri) = (m as i64, m_bar as i64, r as i64);
    let required_matched =
        ((ri - 1) * mbi < mi * ri).then(|| (mbi - ri * (mbi - mi)).max(0) as usize);
    let target = required_matched.unwrap_or(0).min(m).min(m_bar);

    let alignment = match align_dictionaries_with_target(a, b, target) {
        Ok(al) => al,
        Err(Error::InvalidArgument(_)) => {
            notes.push(format!("fewer than {target} columns can be matched"));
            align_dictionaries(a, b)?
        }
        Err(e) => return Err(e),
    };
    let required = required_matched.unwrap_or(0);
    let matched_ok = alignment.len() >= required;
    if alignment.len() > required && m_bar > m {
        notes.push("J is not unique; the best-scoring columns are reported".into());
    }

    let mut order: Vec<&MatchedPair> = alignment.pairs.iter().collect();
    order.sort_by(|x, y| x.error.total_cmp(&y.error).then(x.source.cmp(&y.source)));
    let take = if m_bar > m {
        required.min(order.len())
    } else {
        order.len()
    };
    let mut j: Vec<usize> = order[..take].iter().map(|p| p.source).collect();
    j.sort_unstable();
    let max_error = order[..take].iter().map(|p| p.error).fold(0.0, f64::max);
    let bound5 = c1 * eps;
    let column_bound = ColumnBoundCheck {
        columns: take,
        max_error,
        bound: bound5,
        pass: matched_ok && max_error <= bound5 + INEQUALITY_SLACK,
    };

    let mut code_bound = None;
    let mut persistence = None;
    let codes_applicable = cert.flags.spark_ok && cert.eps_max_codes.is_some_and(|t| eps < t);
    if codes_applicable {
        let restricted = AlignmentResult {
            pairs: alignment
                .pairs
                .iter()
                .filter(|p| j.contains(&p.source))
                .copied()
                .collect(),
            ..alignment.clone()
        };
        let gap = cert.l2k - c1 * eps;
        let mut errors = Vec::with_capacity(codes.len());
        let mut bounds = Vec::with_capacity(codes.len());
        for i in 0..codes.len() {
            let x = codes.column(i);
            let xbar = codes_bar.column(i).into_owned();
            errors.push(code_alignment_error(&x, &xbar, &restricted)?);
            bounds.push((1.0 + c1 * x.lp_norm(1)) * eps / gap);
        }
        let pass = errors
            .iter()
            .zip(&bounds)
            .all(|(e, b)| *e <= b + INEQUALITY_SLACK);
        let worst_code = (0..errors.len())
            .max_by(|&x, &y| ratio(errors[x], bounds[x]).total_cmp(&ratio(errors[y], bounds[y])))
            .map_or(0, |i| i + 1);
        code_bound = Some(CodeBoundCheck {
            errors,
            bounds,
            worst_code,
            pass,
        });

        let bpd = restricted.transformed_target(b);
        if bpd.ncols() > 0 {
            let order = (2 * cert.k).min(bpd.ncols());
            let lower = lower_bound_k(&bpd, order)?;
            persistence = Some(PersistenceCheck {
                order,
                lower_bound: lower,
                bound: gap,
                pass: lower >= gap - INEQUALITY_SLACK,
            });
        }
    } else if !cert.flags.spark_ok {
        notes.push("spark condition fails: code bound not checked".into());
    } else {
        notes.push("eps is not below L2k/C1: code bound not checked".into());
    }

    Ok(Theorem1Report {
        eps,
        residuals,
        max_residual,
        m,
        m_bar,
        r,
        m_bar_ok,
        required_matched,
        matched_ok,
        alignment,
        j,
        column_bound,
        code_bound,
        persistence,
        notes,
    })
}

fn ratio(error: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        error / bound
    } else if error > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}
