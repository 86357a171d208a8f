//! Sums of generator sets with per-block budgets.
//!
//! Given finite sets `G_1, G_2, ...` and counts `n_i`, the `(n_i)`-sum is the
//! set of finite sums `r_1 z_1 + r_2 z_2 + ...` with `|r_k| <= 1` in which at
//! most `n_i` of the `z_k` come from `G_i`. Membership is only ever shown by
//! an explicit certificate listing the terms.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::linalg::Echelon;
use crate::lp::{self, LpOutcome};
use crate::rational::{self, Rational};
use crate::seqspace::FinSeq;
use crate::{Error, Result};

/// How block budgets depend on the level `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// `2^(i-n)` for `i >= n`, nothing below `n`.
    Dyadic,
    /// `2^(i-n) + k`; a deliberately loose budget used as a negative control.
    Offset(u64),
}

impl Budget {
    pub fn count(&self, i: usize, n: usize) -> u64 {
        if i < n {
            return 0;
        }
        let base = 1u64.checked_shl((i - n) as u32).unwrap_or(u64::MAX);
        match self {
            Budget::Dyadic => base,
            Budget::Offset(k) => base.saturating_add(*k),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumFamily {
    /// `generators[i - 1]` is `G_i`.
    pub generators: Vec<Vec<FinSeq>>,
    pub budget: Budget,
}

impl SumFamily {
    pub fn new(generators: Vec<Vec<FinSeq>>) -> Self {
        Self {
            generators,
            budget: Budget::Dyadic,
        }
    }

    pub fn blocks(&self) -> usize {
        self.generators.len()
    }

    pub fn generator(&self, i: usize, j: usize) -> Option<&FinSeq> {
        self.generators.get(i.checked_sub(1)?)?.get(j.checked_sub(1)?)
    }

    pub fn level(&self, n: usize) -> FnDescriptor {
        FnDescriptor {
            level: n,
            budget: self.budget,
        }
    }
}

/// The set `F_n`: the `(2^(i-n))`-sum of the `G_i` with `i >= n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FnDescriptor {
    pub level: usize,
    pub budget: Budget,
}

impl FnDescriptor {
    pub fn count(&self, i: usize) -> u64 {
        self.budget.count(i, self.level)
    }
}

/// One term `r * (j-th generator of G_i)`; both indices start at 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SumTerm {
    pub i: usize,
    pub j: usize,
    #[serde(with = "rational")]
    pub r: Rational,
}

impl SumTerm {
    pub fn new(i: usize, j: usize, r: Rational) -> Self {
        Self { i, j, r }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SumCertificate {
    pub terms: Vec<SumTerm>,
}

impl SumCertificate {
    pub fn new(terms: Vec<SumTerm>) -> Self {
        Self { terms }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Number of terms per block.
    pub fn block_counts(&self) -> BTreeMap<usize, u64> {
        let mut out = BTreeMap::new();
        for t in &self.terms {
            *out.entry(t.i).or_insert(0) += 1;
        }
        out
    }

    /// Sum of coefficients per `(i, j)`, dropping zeros.
    pub fn aggregated(&self) -> BTreeMap<(usize, usize), Rational> {
        let mut out: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
        for t in &self.terms {
            *out.entry((t.i, t.j)).or_insert_with(Rational::zero) += &t.r;
        }
        out.retain(|_, r| !r.is_zero());
        out
    }
}

pub fn certificate_value(fam: &SumFamily, cert: &SumCertificate) -> Result<FinSeq> {
    let mut out = FinSeq::zero();
    for t in &cert.terms {
        let g = fam.generator(t.i, t.j).ok_or_else(|| {
            Error::Certificate(format!("no generator {} in block {}", t.j, t.i))
        })?;
        out.add_scaled(&t.r, g);
    }
    Ok(out)
}

/// Checks a certificate against the level-`n` budgets; the error names the
/// first failure.
pub fn validate(fam: &SumFamily, cert: &SumCertificate, n: usize) -> Result<()> {
    for t in &cert.terms {
        if fam.generator(t.i, t.j).is_none() {
            return Err(Error::Certificate(format!("no generator {} in block {}", t.j, t.i)));
        }
        if t.r.abs() > Rational::one() {
            return Err(Error::Certificate(format!(
                "coefficient {} exceeds 1 in absolute value",
                rational::format_rational(&t.r)
            )));
        }
    }
    let level = fam.level(n);
    for (i, used) in cert.block_counts() {
        let allowed = level.count(i);
        if used > allowed {
            return Err(Error::Certificate(format!(
                "block {i} uses {used} terms, level {n} allows {allowed}"
            )));
        }
    }
    Ok(())
}

pub fn certificate_valid(fam: &SumFamily, cert: &SumCertificate, n: usize) -> bool {
    validate(fam, cert, n).is_ok()
}

pub fn scale_certificate(cert: &SumCertificate, s: &Rational) -> Result<SumCertificate> {
    if s.abs() > Rational::one() {
        return Err(Error::InvalidParameter(format!(
            "scale {} exceeds 1 in absolute value",
            rational::format_rational(s)
        )));
    }
    Ok(SumCertificate::new(
        cert.terms
            .iter()
            .map(|t| SumTerm::new(t.i, t.j, &t.r * s))
            .collect(),
    ))
}

/// Concatenates two level-`(n+1)` certificates into one at level `n`.
pub fn merge_certificates(
    fam: &SumFamily,
    c1: &SumCertificate,
    c2: &SumCertificate,
    n: usize,
) -> Result<SumCertificate> {
    validate(fam, c1, n + 1)?;
    validate(fam, c2, n + 1)?;
    let mut terms = c1.terms.clone();
    terms.extend(c2.terms.iter().cloned());
    Ok(SumCertificate::new(terms))
}

/// The certificate using every block `i` in `lo..=hi` exactly up to its
/// level-`n` budget, cycling through the generators with coefficient 1.
pub fn saturated_certificate(fam: &SumFamily, n: usize, lo: usize, hi: usize) -> SumCertificate {
    let mut terms = Vec::new();
    for i in lo.max(1)..=hi.min(fam.blocks()) {
        let g = &fam.generators[i - 1];
        if g.is_empty() {
            continue;
        }
        let count = fam.level(n).count(i).min(1 << 16) as usize;
        terms.extend((0..count).map(|k| SumTerm::new(i, k % g.len() + 1, Rational::one())));
    }
    SumCertificate::new(terms)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomEntry {
    pub level: usize,
    pub axiom: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub entries: Vec<AxiomEntry>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    fn push(&mut self, level: usize, axiom: &str, passed: bool, detail: String) {
        self.entries.push(AxiomEntry {
            level,
            axiom: axiom.into(),
            passed,
            detail,
        });
    }
}

/// Checks the neighborhood-base axioms for `(U_n + F_n)` at levels
/// `1..depth`: merge closure of the budgets, the radius rule
/// `2(C+1) rho_{n+1} <= rho_n`, and closure under scaling by `[-1, 1]`.
/// `radii[n - 1]` is `rho_n`.
pub fn base_axioms_check(
    radii: &[Rational],
    fam: &SumFamily,
    depth: usize,
    constant: &Rational,
) -> AxiomReport {
    let mut report = AxiomReport::default();
    for n in 1..depth {
        let top = depth.min(fam.blocks());
        let half = saturated_certificate(fam, n + 1, n + 1, top);
        match merge_certificates(fam, &half, &half, n) {
            Ok(merged) => {
                let res = validate(fam, &merged, n);
                report.push(
                    n,
                    "merge-closure",
                    res.is_ok(),
                    match res {
                        Ok(()) => format!("{} terms fit the level-{n} budget", merged.len()),
                        Err(e) => e.to_string(),
                    },
                );
            }
            Err(e) => report.push(n, "merge-closure", false, e.to_string()),
        }

        match (radii.get(n - 1), radii.get(n)) {
            (Some(r0), Some(r1)) => {
                let lhs = rational::int(2) * (constant + Rational::one()) * r1;
                report.push(
                    n,
                    "radius-additivity",
                    lhs <= *r0,
                    format!(
                        "2(C+1) rho_{} = {} vs rho_{n} = {}",
                        n + 1,
                        rational::format_rational(&lhs),
                        rational::format_rational(r0)
                    ),
                );
            }
            _ => report.push(n, "radius-additivity", false, "missing radius".into()),
        }

        let full = saturated_certificate(fam, n, n, top);
        let balanced = [-Rational::one(), rational::ratio(1, 2), Rational::zero()]
            .iter()
            .all(|s| {
                scale_certificate(&full, s)
                    .map(|c| certificate_valid(fam, &c, n))
                    .unwrap_or(false)
            });
        let radius_ok = radii.get(n - 1).is_some_and(|r| r.is_positive());
        report.push(
            n,
            "balanced",
            balanced && radius_ok,
            format!("{} scaled terms stay within budget", full.len()),
        );
    }
    report
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HullAnswer {
    Weights(#[serde(with = "rational::vec")] Vec<Rational>),
    Refusal(String),
}

impl HullAnswer {
    pub fn weights(&self) -> Option<&[Rational]> {
        match self {
            HullAnswer::Weights(w) => Some(w),
            HullAnswer::Refusal(_) => None,
        }
    }
}

/// Exact convex weights expressing `point` from `set`, or a verified refusal.
pub fn hull_membership(point: &FinSeq, set: &[FinSeq]) -> HullAnswer {
    let Some(first) = set.first() else {
        return HullAnswer::Refusal("empty set".into());
    };
    let k = set.len();
    if let Some(pos) = set.iter().position(|v| v == point) {
        let mut w = vec![Rational::zero(); k];
        w[pos] = Rational::one();
        return HullAnswer::Weights(w);
    }
    let centroid = set.iter().sum::<FinSeq>().scale(&rational::ratio(1, k as i64));
    if &centroid == point {
        return HullAnswer::Weights(vec![rational::ratio(1, k as i64); k]);
    }

    let mut ech = Echelon::new();
    for v in &set[1..] {
        ech.insert(&(v - first));
    }
    if ech.express(&(point - first)).is_none() {
        return HullAnswer::Refusal("point lies outside the affine hull".into());
    }

    let mut coords: Vec<usize> = set.iter().flat_map(|v| v.support()).collect();
    coords.extend(point.support());
    coords.sort_unstable();
    coords.dedup();
    let mut a: Vec<Vec<Rational>> = coords
        .iter()
        .map(|&c| {
            set.iter()
                .map(|v| v.get(c).cloned().unwrap_or_else(Rational::zero))
                .collect()
        })
        .collect();
    let mut b: Vec<Rational> = coords
        .iter()
        .map(|&c| point.get(c).cloned().unwrap_or_else(Rational::zero))
        .collect();
    a.push(vec![Rational::one(); k]);
    b.push(Rational::one());
    match lp::minimize(&vec![Rational::zero(); k], &a, &b) {
        LpOutcome::Optimal { x, .. } => HullAnswer::Weights(x),
        _ => HullAnswer::Refusal("no convex weights exist".into()),
    }
}

/// True when `weights` are convex and reproduce `point` exactly.
pub fn check_hull_weights(point: &FinSeq, set: &[FinSeq], weights: &[Rational]) -> bool {
    if weights.len() != set.len() || weights.iter().any(|w| w.is_negative()) {
        return false;
    }
    if weights.iter().sum::<Rational>() != Rational::one() {
        return false;
    }
    let mut acc = FinSeq::zero();
    for (w, v) in weights.iter().zip(set) {
        acc.add_scaled(w, v);
    }
    &acc == point
}
