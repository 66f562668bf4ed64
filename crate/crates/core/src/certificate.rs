//! Stability certificates: every hypothesis check plus the constants and
//! noise thresholds they unlock.

use serde::{Deserialize, Serialize};

use crate::codes::{general_linear_position, support_index_lists, SparseCodeSet};
use crate::constants::{c1_from_parts, compute_c2_with, max_xi, per_support_cor1};
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, HypergraphJson};
use crate::io::{digest, CodesJson, MatrixJson};
use crate::subspace::{
    lower_bound_k, restricted_lower_bound, spark_condition, spark_order, Dictionary,
    DEFAULT_RANK_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateFlags {
    pub sip_ok: bool,
    pub regular_ok: bool,
    pub l2h_ok: bool,
    pub glp_ok: bool,
    pub spark_ok: bool,
    pub counts_ok: bool,
}

impl CertificateFlags {
    /// Everything the dictionary-recovery guarantee needs. The spark
    /// condition only gates the code bound and is not required here.
    pub fn required_ok(&self) -> bool {
        self.sip_ok && self.regular_ok && self.l2h_ok && self.glp_ok && self.counts_ok
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigests {
    pub dictionary: String,
    pub codes: String,
    pub hypergraph: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityCertificate {
    pub version: String,
    pub digests: InputDigests,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_bar: Option<usize>,
    pub r: Option<usize>,
    pub edges: Vec<Vec<usize>>,
    pub rank_tol: f64,
    pub l2: f64,
    pub l2k: f64,
    pub l2h: f64,
    pub xi_max: Option<f64>,
    pub c2: Option<f64>,
    pub c1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_max_dictionary: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_max_codes: Option<f64>,
    pub max_l1: f64,
    pub support_counts: Vec<usize>,
    /// Decimal string; the count grows like a binomial coefficient.
    pub required_per_support: String,
    pub flags: CertificateFlags,
    pub notes: Vec<String>,
}

impl StabilityCertificate {
    /// All required flags hold and `C1` was computed.
    pub fn passes(&self) -> bool {
        self.flags.required_ok() && self.c1.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct CertifyOptions {
    pub rank_tol: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            rank_tol: DEFAULT_RANK_TOL,
        }
    }
}

/// Runs every hypothesis check and computes the constants that the passing
/// checks allow. Failed hypotheses are reported in `flags` and `notes`
/// rather than as errors; errors are reserved for inconsistent input.
pub fn certify(
    a: &Dictionary,
    codes: &SparseCodeSet,
    h: &Hypergraph,
    opts: &CertifyOptions,
) -> Result<StabilityCertificate> {
    let (n, m) = (a.n(), a.m());
    if h.m() != m {
        return Err(Error::DimensionMismatch(format!(
            "dictionary has {m} columns, hypergraph has {} vertices",
            h.m()
        )));
    }
    if codes.m() != m {
        return Err(Error::DimensionMismatch(format!(
            "dictionary has {m} columns, codes live in R^{}",
            codes.m()
        )));
    }
    let k = h
        .uniform_size()
        .ok_or_else(|| Error::InvalidArgument("hypergraph must be uniform".into()))?;
    let tol = opts.rank_tol;
    let mut notes = Vec::new();

    let sip_ok = h.has_sip();
    if !sip_ok {
        notes.push("hypergraph lacks the singleton intersection property".to_string());
    }
    let r = h.regularity();
    if r.is_none() {
        notes.push("hypergraph is not regular".to_string());
    }

    let threshold = tol * a.max_column_norm();
    let l2h = restricted_lower_bound(a.matrix(), &h.pairwise_unions()?)?;
    let l2h_ok = l2h > threshold;
    if !l2h_ok {
        notes.push(format!("L_2H = {l2h:e} does not exceed the rank threshold"));
    }
    let l2 = lower_bound_k(a.matrix(), spark_order(1, m))?;
    let l2k = lower_bound_k(a.matrix(), spark_order(k, m))?;
    let spark_ok = spark_condition(a.matrix(), k, tol)?;
    if !spark_ok {
        notes.push(
            "spark condition fails: dictionary recovery is certified, the code bound is not"
                .to_string(),
        );
    }

    let lists = support_index_lists(codes, h);
    let support_counts: Vec<usize> = lists.iter().map(Vec::len).collect();
    let required = per_support_cor1(m, k)?;
    let counts_ok = support_counts
        .iter()
        .all(|&c| num_bigint::BigUint::from(c) >= required);
    if !counts_ok {
        notes.push(format!("some support has fewer than {required} codes"));
    }

    let mut glp_ok = true;
    let mut denominator = f64::INFINITY;
    for (s, list) in h.edges().iter().zip(&lists) {
        if list.len() < k {
            glp_ok = false;
            notes.push(format!(
                "support {s} has {} codes, fewer than k={k}",
                list.len()
            ));
            continue;
        }
        if !general_linear_position(&codes.select(list), k, tol)? {
            glp_ok = false;
            notes.push(format!(
                "codes on support {s} are not in general linear position"
            ));
            continue;
        }
        let ax = a.matrix() * codes.select(list);
        denominator = denominator.min(lower_bound_k(&ax, k)?);
    }

    let mut xi_max = None;
    let mut c2 = None;
    if let Some(r) = r {
        xi_max = Some(max_xi(a, h, r, tol)?);
        match compute_c2_with(a, h, tol) {
            Ok(v) => c2 = Some(v),
            Err(Error::IllConditioned(msg)) => notes.push(msg),
            Err(e) => return Err(e),
        }
    }
    let mut c1 = None;
    if let (Some(c2), true) = (c2, glp_ok) {
        match c1_from_parts(c2, denominator) {
            Ok(v) => c1 = Some(v),
            Err(Error::HypothesisViolated(msg)) => {
                glp_ok = false;
                notes.push(msg);
            }
            Err(e) => return Err(e),
        }
    }
    let eps_max_dictionary = c1.map(|c| l2 / c);
    let eps_max_codes = c1.filter(|_| spark_ok).map(|c| l2k / c);
    if k == 1 && c1.is_some() {
        notes.push(
            "k = 1: C1 uses the general formula, which is at least twice the bound 1/min|c| \
             quoted for the singleton case"
                .to_string(),
        );
    }

    Ok(StabilityCertificate {
        version: env!("CARGO_PKG_VERSION").to_string(),
        digests: InputDigests {
            dictionary: digest(&MatrixJson::from(a.matrix()))?,
            codes: digest(&CodesJson::from(codes))?,
            hypergraph: digest(&HypergraphJson::from(h))?,
        },
        m,
        n,
        k,
        m_bar: None,
        r,
        edges: h.edges_one_based(),
        rank_tol: tol,
        l2,
        l2k,
        l2h,
        xi_max,
        c2,
        c1,
        eps_max_dictionary,
        eps_max_codes,
        max_l1: codes.max_l1(),
        support_counts,
        required_per_support: required.to_string(),
        flags: CertificateFlags {
            sip_ok,
            regular_ok: r.is_some(),
            l2h_ok,
            glp_ok,
            spark_ok,
            counts_ok,
        },
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::vandermonde_codes;
    use nalgebra::DMatrix;

    fn balanced_codes(h: &Hypergraph, count: usize) -> SparseCodeSet {
        let parts: Vec<_> = h
            .edges()
            .iter()
            .enumerate()
            .map(|(e, s)| {
                let g = [0.6 + 0.01 * e as f64, 1.3 - 0.01 * e as f64];
                vandermonde_codes(h.m(), s, count, &g).unwrap()
            })
            .collect();
        SparseCodeSet::concat(&parts).unwrap()
    }

    #[test]
    fn identity_with_vandermonde_codes() {
        let h = Hypergraph::cyclic(4, 2).unwrap();
        let cert = certify(
            &Dictionary::identity(4),
            &balanced_codes(&h, 7),
            &h,
            &CertifyOptions::default(),
        )
        .unwrap();
        assert!(cert.passes());
        assert!(cert.flags.spark_ok);
        assert!((cert.c2.unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(cert.r, Some(2));
        assert_eq!(cert.support_counts, vec![7; 4]);
        assert_eq!(cert.required_per_support, "7");
        assert!((cert.l2 - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((cert.l2k - 0.5).abs() < 1e-12);
        let c1 = cert.c1.unwrap();
        assert!((cert.eps_max_dictionary.unwrap() - cert.l2 / c1).abs() < 1e-15);
        assert!(cert.eps_max_codes.unwrap() <= cert.eps_max_dictionary.unwrap());
    }

    #[test]
    fn non_spark_dictionary_still_certified() {
        let mut a = DMatrix::<f64>::zeros(5, 6);
        for i in 0..5 {
            a[(i, i)] = 1.0;
        }
        a[(0, 5)] = 1.0;
        a[(2, 5)] = 1.0;
        a[(4, 5)] = 1.0;
        let a = Dictionary::new(a).unwrap();
        let h = Hypergraph::cyclic(6, 2).unwrap();
        let cert = certify(&a, &balanced_codes(&h, 16), &h, &CertifyOptions::default()).unwrap();
        assert!(!cert.flags.spark_ok);
        assert!(cert.flags.l2h_ok);
        assert!(cert.l2h > 1e-6);
        assert!(cert.passes());
        assert!(cert.eps_max_dictionary.is_some());
        assert!(cert.eps_max_codes.is_none());
        let json = serde_json::to_string(&cert).unwrap();
        assert!(!json.contains("eps_max_codes"));
    }

    #[test]
    fn missing_codes_fail_counts() {
        let h = Hypergraph::cyclic(4, 2).unwrap();
        let parts: Vec<_> = h.edges()[..3]
            .iter()
            .map(|s| vandermonde_codes(4, s, 7, &[0.6, 1.3]).unwrap())
            .collect();
        let codes = SparseCodeSet::concat(&parts).unwrap();
        let cert = certify(
            &Dictionary::identity(4),
            &codes,
            &h,
            &CertifyOptions::default(),
        )
        .unwrap();
        assert!(!cert.flags.counts_ok);
        assert!(!cert.flags.glp_ok);
        assert!(!cert.passes());
        assert!(cert.c1.is_none());
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let h = Hypergraph::cyclic(5, 2).unwrap();
        let err = certify(
            &Dictionary::identity(4),
            &SparseCodeSet::empty(4, 2),
            &h,
            &CertifyOptions::default(),
        )
        .unwrap_err();
        assert!(err.is_input_error());
    }

    #[test]
    fn certificate_json_round_trip() {
        let h = Hypergraph::cyclic(4, 2).unwrap();
        let cert = certify(
            &Dictionary::identity(4),
            &balanced_codes(&h, 7),
            &h,
            &CertifyOptions::default(),
        )
        .unwrap();
        let text = serde_json::to_string(&cert).unwrap();
        let back: StabilityCertificate = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cert);
        assert_eq!(cert.edges[0], vec![1, 2]);
    }
}
