//! Brute-force and adversarial searches.
//!
//! Every search is seeded per trial (`ChaCha8` seeded by the run seed, stream
//! set to the trial index), so reports do not depend on thread count.

use num_traits::{One, Signed, Zero};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::construction::chain::{
    final_bound_check, random_certificate, random_decomposition, rescale_to_norm, verify_chain,
};
use crate::construction::ConstructionState;
use crate::lp::{self, LpOutcome};
use crate::quasilinear::{quasi_defect, FunctionalKind, QuasiFunctional};
use crate::rational::{self, to_f64, Rational};
use crate::seqspace::{pairwise_disjoint, Element, FinSeq, MixedSeq};
use crate::sumsets::SumCertificate;
use crate::{Error, Result};

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Uniform `a/b` with `|a| <= num`, `1 <= b <= den`.
pub fn random_rational<R: Rng>(rng: &mut R, num: i64, den: i64) -> Rational {
    rational::ratio(rng.random_range(-num..=num), rng.random_range(1..=den))
}

fn random_nonzero<R: Rng>(rng: &mut R, num: i64, den: i64) -> Rational {
    loop {
        let q = random_rational(rng, num, den);
        if !q.is_zero() {
            return q;
        }
    }
}

/// Random sequence with up to `support` nonzero coordinates in `1..=max_index`.
pub fn random_seq<R: Rng>(rng: &mut R, max_index: usize, support: usize) -> FinSeq {
    let s = rng.random_range(1..=support.min(max_index));
    FinSeq::from_pairs(
        sample(rng, max_index, s)
            .into_iter()
            .map(|i| (i + 1, random_nonzero(rng, 20, 12)))
            .collect::<Vec<_>>(),
    )
}

/// `(value, trial)` of the trial with the largest value; ties go to the lower
/// trial so the answer is independent of scheduling.
fn argmax_trials<F>(trials: u64, f: F) -> Option<(f64, u64)>
where
    F: Fn(u64) -> f64 + Sync + Send,
{
    let better = |a: (f64, u64), b: (f64, u64)| {
        let a_key = if a.0.is_nan() { f64::INFINITY } else { a.0 };
        let b_key = if b.0.is_nan() { f64::INFINITY } else { b.0 };
        if b_key > a_key || (b_key == a_key && b.1 < a.1) {
            b
        } else {
            a
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(|t| (f(t), t)).reduce_with(better)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials).map(|t| (f(t), t)).reduce(better)
    }
}

mod float_or_text {
    //! JSON has no infinities; they are written as the strings "inf"/"-inf".
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

/// The extremal input an oracle found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    None,
    /// Coefficients `r_j` on the attacked family.
    Coefficients {
        #[serde(with = "rational::vec")]
        r: Vec<Rational>,
    },
    Pair { x: Element, y: Element },
    Certificate {
        trial: u64,
        #[serde(with = "rational")]
        norm: Rational,
        certificate: SumCertificate,
    },
    Combination {
        #[serde(with = "rational::vec")]
        alpha: Vec<Rational>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub target: String,
    pub method: String,
    pub seed: u64,
    pub trials: u64,
    pub iterations: u64,
    #[serde(with = "float_or_text")]
    pub best_value: f64,
    pub threshold: f64,
    /// Positive means the attacked inequality failed.
    #[serde(with = "float_or_text")]
    pub best_violation: f64,
    pub witness: Witness,
}

impl OracleReport {
    pub fn violated(&self) -> bool {
        !(self.best_violation < 0.0)
    }
}

// ---------------------------------------------------------------------------
// Cross-polytope minimization.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Closed form when disjoint, orthant programs up to 8 vectors, descent above.
    #[default]
    Auto,
    Orthant,
    Heuristic,
}

/// Largest family solved by exact orthant enumeration in `Auto` mode.
pub const EXACT_ORTHANT_LIMIT: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossPolytopeMin {
    #[serde(with = "rational")]
    pub value: Rational,
    #[serde(with = "rational::vec")]
    pub alpha: Vec<Rational>,
    /// "exact" or "heuristic".
    pub method: String,
}

fn combination(ys: &[FinSeq], alpha: &[Rational]) -> FinSeq {
    let mut acc = FinSeq::zero();
    for (a, y) in alpha.iter().zip(ys) {
        if !a.is_zero() {
            acc.add_scaled(a, y);
        }
    }
    acc
}

/// Minimizes `||sum a_i y_i||_1` over `sum |a_i| = 1`.
pub fn min_crosspolytope_norm(ys: &[FinSeq], strategy: Strategy) -> Result<CrossPolytopeMin> {
    if ys.is_empty() {
        return Err(Error::InvalidParameter("empty family".into()));
    }
    let k = ys.len();
    let exact_disjoint = strategy != Strategy::Heuristic && pairwise_disjoint(ys);
    if k == 1 || exact_disjoint {
        let (i, value) = ys
            .iter()
            .map(FinSeq::norm_l1)
            .enumerate()
            .min_by(|a, b| a.1.cmp(&b.1))
            .expect("nonempty");
        let mut alpha = vec![Rational::zero(); k];
        alpha[i] = Rational::one();
        return Ok(CrossPolytopeMin {
            value,
            alpha,
            method: "exact".into(),
        });
    }
    match strategy {
        Strategy::Orthant => Ok(orthant_min(ys)),
        Strategy::Auto if k <= EXACT_ORTHANT_LIMIT => Ok(orthant_min(ys)),
        _ => Ok(heuristic_min(ys, 0)),
    }
}

/// Exact minimum: one linear program per sign pattern with the first sign
/// fixed (the objective is even).
fn orthant_min(ys: &[FinSeq]) -> CrossPolytopeMin {
    let k = ys.len();
    let mut coords: Vec<usize> = ys.iter().flat_map(|y| y.support()).collect();
    coords.sort_unstable();
    coords.dedup();
    let d = coords.len();
    let zero = Rational::zero;
    let mut cost = vec![zero(); k];
    cost.extend((0..2 * d).map(|_| Rational::one()));
    let mut b = vec![zero(); d];
    b.push(Rational::one());

    let mut best: Option<(Rational, Vec<Rational>)> = None;
    for pattern in 0u64..(1 << (k - 1)) {
        let sign = |i: usize| i > 0 && pattern >> (i - 1) & 1 == 1;
        let mut a: Vec<Vec<Rational>> = coords
            .iter()
            .enumerate()
            .map(|(row, &c)| {
                let mut r = vec![zero(); k + 2 * d];
                for (i, y) in ys.iter().enumerate() {
                    if let Some(v) = y.get(c) {
                        r[i] = if sign(i) { -v } else { v.clone() };
                    }
                }
                r[k + row] = -Rational::one();
                r[k + d + row] = Rational::one();
                r
            })
            .collect();
        let mut simplex = vec![Rational::one(); k];
        simplex.extend((0..2 * d).map(|_| zero()));
        a.push(simplex);
        if let LpOutcome::Optimal { x, value } = lp::minimize(&cost, &a, &b) {
            if best.as_ref().is_none_or(|(v, _)| value < *v) {
                let alpha = (0..k)
                    .map(|i| if sign(i) { -&x[i] } else { x[i].clone() })
                    .collect();
                best = Some((value, alpha));
            }
        }
    }
    let (value, alpha) = best.expect("the simplex is feasible");
    CrossPolytopeMin {
        value,
        alpha,
        method: "exact".into(),
    }
}

fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Projected subgradient descent over random sign orthants, followed by an
/// exact re-evaluation of the best point found. Never worse than the best
/// single vector.
fn heuristic_min(ys: &[FinSeq], seed: u64) -> CrossPolytopeMin {
    let k = ys.len();
    let mut coords: Vec<usize> = ys.iter().flat_map(|y| y.support()).collect();
    coords.sort_unstable();
    coords.dedup();
    let cols: Vec<Vec<(usize, f64)>> = ys
        .iter()
        .map(|y| {
            y.iter()
                .map(|(c, v)| (coords.binary_search(&c).expect("listed"), to_f64(v)))
                .collect()
        })
        .collect();
    let eval = |alpha: &[f64], out: &mut Vec<f64>| -> f64 {
        out.iter_mut().for_each(|x| *x = 0.0);
        for (a, col) in alpha.iter().zip(&cols) {
            for &(c, v) in col {
                out[c] += a * v;
            }
        }
        out.iter().map(|x| x.abs()).sum()
    };
    let scale = cols
        .iter()
        .map(|c| c.iter().map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-300);

    let mut buf = vec![0.0; coords.len()];
    let mut best_val = f64::INFINITY;
    let mut best_alpha = vec![0.0; k];
    for i in 0..k {
        let mut a = vec![0.0; k];
        a[i] = 1.0;
        let v = eval(&a, &mut buf);
        if v < best_val {
            best_val = v;
            best_alpha = a;
        }
    }
    let restarts = 48u64;
    let iters = 400;
    for r in 0..restarts {
        let mut rng = trial_rng(seed, r);
        let sigma: Vec<f64> = (0..k)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let mut u: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        project_simplex(&mut u);
        let mut alpha = vec![0.0; k];
        for t in 0..iters {
            for i in 0..k {
                alpha[i] = sigma[i] * u[i];
            }
            let v = eval(&alpha, &mut buf);
            if v < best_val {
                best_val = v;
                best_alpha = alpha.clone();
            }
            let step = 0.5 / (scale * ((t + 1) as f64).sqrt());
            for i in 0..k {
                let g: f64 = cols[i].iter().map(|&(c, y)| y * buf[c].signum()).sum();
                u[i] -= step * sigma[i] * g;
            }
            project_simplex(&mut u);
        }
    }
    let mut alpha: Vec<Rational> = best_alpha
        .iter()
        .map(|a| rational::from_f64(*a).unwrap_or_else(Rational::zero))
        .collect();
    let total: Rational = alpha.iter().map(|a| a.abs()).sum();
    for a in &mut alpha {
        *a = &*a / &total;
    }
    CrossPolytopeMin {
        value: combination(ys, &alpha).norm_l1(),
        alpha,
        method: "heuristic".into(),
    }
}

/// Minimum over the grid `a_i = n_i / steps`, `sum |n_i| = steps`.
pub fn grid_crosspolytope_min(ys: &[FinSeq], steps: i64) -> f64 {
    fn rec(i: usize, left: i64, cur: &mut Vec<i64>, ys: &[FinSeq], steps: i64, best: &mut f64) {
        if i + 1 == ys.len() {
            for last in [left, -left] {
                cur.push(last);
                let alpha: Vec<Rational> = cur.iter().map(|&n| rational::ratio(n, steps)).collect();
                let v = to_f64(&combination(ys, &alpha).norm_l1());
                *best = best.min(v);
                cur.pop();
                if left == 0 {
                    break;
                }
            }
            return;
        }
        for n in -left..=left {
            cur.push(n);
            rec(i + 1, left - n.abs(), cur, ys, steps, best);
            cur.pop();
        }
    }
    let mut best = f64::INFINITY;
    if !ys.is_empty() {
        rec(0, steps, &mut Vec::new(), ys, steps, &mut best);
    }
    best
}

pub fn crosspolytope_report(ys: &[FinSeq], strategy: Strategy) -> Result<OracleReport> {
    let found = min_crosspolytope_norm(ys, strategy)?;
    let value = to_f64(&found.value);
    Ok(OracleReport {
        target: "crosspolytope".into(),
        method: found.method.clone(),
        seed: 0,
        trials: 1,
        iterations: 0,
        best_value: value,
        threshold: 0.0,
        // A vanishing minimum means the family is dependent.
        best_violation: -value,
        witness: Witness::Combination { alpha: found.alpha },
    })
}

// ---------------------------------------------------------------------------
// Coefficient mass under a norm budget.

/// The norm budget `3 - 1e-9` as an exact rational.
pub fn mass_norm_budget() -> Rational {
    rational::int(3) - rational::ratio(1, 1_000_000_000)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MassOptions {
    /// Enumerate every support pattern when there are at most this many.
    pub max_patterns: u64,
    /// Number of random patterns otherwise.
    pub samples: u64,
    pub seed: u64,
}

impl Default for MassOptions {
    fn default() -> Self {
        Self {
            max_patterns: 100_000,
            samples: 20_000,
            seed: 0,
        }
    }
}

/// `Some(mass, r)` or `None` when the mass is unbounded (then `r` spans a
/// null combination).
type Mass = (Option<Rational>, Vec<Rational>);

/// True when `zs[..-1]` are nonzero with disjoint supports and the last
/// vector is minus their sum.
fn anchored_disjoint(zs: &[FinSeq]) -> bool {
    let Some((last, base)) = zs.split_last() else {
        return false;
    };
    !base.is_empty()
        && base.iter().all(|z| !z.is_zero())
        && pairwise_disjoint(base)
        && (&base.iter().sum::<FinSeq>() + last).is_zero()
}

fn anchored_mass(zs: &[FinSeq], norms: &[Rational], support: &[usize], c: &Rational) -> Mass {
    let len = zs.len();
    let last = len - 1;
    let mut r = vec![Rational::zero(); len];
    let has_last = support.contains(&last);
    let single = support
        .iter()
        .filter(|&&j| j != last)
        .min_by(|&&a, &&b| norms[a].cmp(&norms[b]).then(a.cmp(&b)))
        .map(|&j| (j, c / &norms[j]));
    let spread = if has_last {
        let outside: Rational = (0..last)
            .filter(|j| !support.contains(j))
            .map(|j| norms[j].clone())
            .sum();
        if outside.is_zero() {
            for &j in support {
                r[j] = Rational::one();
            }
            return (None, r);
        }
        Some(c / &outside)
    } else {
        None
    };
    let spread_mass = spread
        .as_ref()
        .map(|a| a * Rational::from_integer((support.len() as i64).into()));
    match (single, spread_mass) {
        (Some((j, m1)), Some(m2)) if m1 >= m2 => {
            r[j] = m1.clone();
            (Some(m1), r)
        }
        (_, Some(m2)) => {
            let a = spread.expect("spread");
            for &j in support {
                r[j] = a.clone();
            }
            (Some(m2), r)
        }
        (Some((j, m1)), None) => {
            r[j] = m1.clone();
            (Some(m1), r)
        }
        (None, None) => (Some(Rational::zero()), r),
    }
}

fn general_mass(zs: &[FinSeq], support: &[usize], c: &Rational) -> Mass {
    let sub: Vec<FinSeq> = support.iter().map(|&j| zs[j].clone()).collect();
    let found = min_crosspolytope_norm(&sub, Strategy::Auto).expect("nonempty support");
    let mut r = vec![Rational::zero(); zs.len()];
    if found.value.is_zero() {
        for (&j, a) in support.iter().zip(&found.alpha) {
            r[j] = a.clone();
        }
        return (None, r);
    }
    let scale = c / &found.value;
    for (&j, a) in support.iter().zip(&found.alpha) {
        r[j] = a * &scale;
    }
    (Some(scale), r)
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Largest `sum |r_j|` with at most `k` nonzero `r_j` and
/// `||sum r_j z_j||_1 <= 3 - 1e-9`; the violation is that mass minus `eta`.
///
/// Only supports of size `min(k, len)` are visited, since enlarging the
/// support never lowers the maximum.
pub fn lemma5_adversary(zs: &[FinSeq], k: usize, eta: &Rational, opts: MassOptions) -> OracleReport {
    let len = zs.len();
    let kk = k.min(len);
    let c = mass_norm_budget();
    let mut report = OracleReport {
        target: "lemma5".into(),
        method: "exhaustive".into(),
        seed: opts.seed,
        trials: 0,
        iterations: 0,
        best_value: 0.0,
        threshold: to_f64(eta),
        best_violation: -to_f64(eta),
        witness: Witness::Coefficients {
            r: vec![Rational::zero(); len],
        },
    };
    if kk == 0 {
        return report;
    }
    let anchored = anchored_disjoint(zs);
    let norms: Vec<Rational> = zs.iter().map(FinSeq::norm_l1).collect();
    let mass_of = |support: &[usize]| -> Mass {
        if anchored {
            anchored_mass(zs, &norms, support, &c)
        } else {
            general_mass(zs, support, &c)
        }
    };

    let mut best: Option<Mass> = None;
    let consider = |m: Mass, best: &mut Option<Mass>| {
        let better = match (&best, &m.0) {
            (None, _) => true,
            (Some((None, _)), _) => false,
            (Some(_), None) => true,
            (Some((Some(b), _)), Some(v)) => v > b,
        };
        if better {
            *best = Some(m);
        }
    };
    let total = binomial(len as u64, kk as u64);
    if total <= opts.max_patterns {
        let mut idx: Vec<usize> = (0..kk).collect();
        loop {
            consider(mass_of(&idx), &mut best);
            report.trials += 1;
            if !next_combination(&mut idx, len) {
                break;
            }
        }
    } else {
        report.method = "sampled".into();
        for t in 0..opts.samples {
            let mut rng = trial_rng(opts.seed, t);
            let mut idx = sample(&mut rng, len, kk).into_vec();
            idx.sort_unstable();
            consider(mass_of(&idx), &mut best);
            report.trials += 1;
        }
    }
    if !anchored && kk > EXACT_ORTHANT_LIMIT {
        report.method.push_str("+heuristic");
    }
    let (mass, r) = best.expect("at least one pattern");
    match mass {
        Some(m) => {
            report.best_value = to_f64(&m);
            report.best_violation = to_f64(&(m - eta));
        }
        None => {
            report.best_value = f64::INFINITY;
            report.best_violation = f64::INFINITY;
        }
    }
    report.witness = Witness::Coefficients { r };
    report
}

/// Recomputes a mass witness: returns `(sum |r_j|, ||sum r_j z_j||_1)`.
pub fn replay_mass_witness(report: &OracleReport, zs: &[FinSeq]) -> Result<(f64, Rational)> {
    let Witness::Coefficients { r } = &report.witness else {
        return Err(Error::InvalidParameter("report carries no coefficients".into()));
    };
    if r.len() != zs.len() {
        return Err(Error::InvalidParameter("witness length differs from family".into()));
    }
    let mass: Rational = r.iter().map(|q| q.abs()).sum();
    Ok((to_f64(&mass), combination(zs, r).norm_l1()))
}

// ---------------------------------------------------------------------------
// Quasi-additivity constant.

fn sample_l1<R: Rng>(rng: &mut R, family: u64) -> (FinSeq, FinSeq) {
    let x = random_seq(rng, 10, 6);
    let y = match family {
        0 => random_seq(rng, 10, 6),
        1 => {
            // Disjoint, shifted past the support of x.
            let shift = x.max_index().unwrap_or(0);
            FinSeq::from_pairs(random_seq(rng, 6, 4).iter().map(|(i, v)| (i + shift, v.clone())))
        }
        2 => {
            // Nested: a multiple of x plus a change on part of its support.
            let mut y = x.scale(&random_rational(rng, 8, 4));
            let idx: Vec<usize> = x.support().collect();
            let i = idx[rng.random_range(0..idx.len())];
            y.add_scaled(&random_nonzero(rng, 10, 6), &FinSeq::unit(i));
            y
        }
        3 => {
            // Sign flips on a random subset of coordinates.
            FinSeq::from_pairs(x.iter().map(|(i, v)| {
                if rng.random::<bool>() {
                    (i, -v)
                } else {
                    (i, v.clone())
                }
            }))
        }
        _ => {
            // Nearly collinear.
            let mut y = x.scale(&random_nonzero(rng, 4, 3));
            y.add_scaled(&rational::ratio(1, 1000), &random_seq(rng, 10, 3));
            y
        }
    };
    (x, y)
}

fn random_block<R: Rng>(rng: &mut R, blocks: &[usize]) -> MixedSeq {
    let count = rng.random_range(1..=blocks.len().min(3));
    let chosen = sample(rng, blocks.len(), count);
    MixedSeq::from_blocks(chosen.into_iter().map(|b| {
        let n = blocks[b];
        let coords = (0..n)
            .map(|_| {
                if rng.random_range(0..3) == 0 {
                    Rational::zero()
                } else {
                    random_rational(rng, 20, 12)
                }
            })
            .collect();
        (n, coords)
    }))
    .expect("block lengths match")
}

fn sample_mixed<R: Rng>(rng: &mut R, family: u64, blocks: &[usize]) -> (MixedSeq, MixedSeq) {
    let x = random_block(rng, blocks);
    let y = match family {
        0 | 1 => random_block(rng, blocks),
        2 => {
            let mut y = x.scale(&random_rational(rng, 8, 4));
            y.add_scaled(&Rational::one(), &random_block(rng, blocks));
            y
        }
        3 => x.scale(&-Rational::one()).scale(&random_nonzero(rng, 3, 2)),
        _ => {
            let mut y = x.scale(&random_nonzero(rng, 4, 3));
            y.add_scaled(&rational::ratio(1, 1000), &random_block(rng, blocks));
            y
        }
    };
    (x, y)
}

/// The pair examined by trial `trial`.
pub fn quasi_trial_pair(f: &QuasiFunctional, seed: u64, trial: u64) -> (Element, Element) {
    let mut rng = trial_rng(seed, trial);
    let family = trial % 5;
    match mixed_blocks(f) {
        Some(blocks) => {
            let (x, y) = sample_mixed(&mut rng, family, &blocks);
            (x.into(), y.into())
        }
        None => {
            let (x, y) = sample_l1(&mut rng, family);
            (x.into(), y.into())
        }
    }
}

/// Blocks a weighted functional is sampled on: the weighted ones up to 16.
fn mixed_blocks(f: &QuasiFunctional) -> Option<Vec<usize>> {
    match f.kind() {
        FunctionalKind::WeightedRibe { weights, .. } => {
            let b: Vec<usize> = weights.support().filter(|&n| n <= 16).collect();
            Some(if b.is_empty() { vec![1] } else { b })
        }
        FunctionalKind::Scaled { inner, .. } => mixed_blocks(inner),
        _ => None,
    }
}

/// Maximizes the normalized defect over random pairs drawn from five
/// families (independent, disjoint, nested, sign-flipped, nearly collinear).
pub fn quasi_constant_adversary(f: &QuasiFunctional, trials: u64, seed: u64) -> OracleReport {
    let defect = |t: u64| {
        let (x, y) = quasi_trial_pair(f, seed, t);
        quasi_defect(f, &x, &y).unwrap_or(0.0)
    };
    let best = argmax_trials(trials, defect);
    let threshold = f.assumed_constant();
    let (best_value, witness) = match best {
        Some((v, t)) => {
            let (x, y) = quasi_trial_pair(f, seed, t);
            (v, Witness::Pair { x, y })
        }
        None => (0.0, Witness::None),
    };
    OracleReport {
        target: "quasi-constant".into(),
        method: "random+structured".into(),
        seed,
        trials,
        iterations: 0,
        best_value,
        threshold,
        best_violation: best_value - threshold,
        witness,
    }
}

pub fn replay_quasi_witness(report: &OracleReport, f: &QuasiFunctional) -> Result<f64> {
    match &report.witness {
        Witness::Pair { x, y } => quasi_defect(f, x, y),
        Witness::None => Ok(0.0),
        _ => Err(Error::InvalidParameter("report carries no pair".into())),
    }
}

// ---------------------------------------------------------------------------
// Bound chain.

/// The rescaled certificate examined by a chain-fuzzer trial.
pub fn chain_trial_certificate(
    state: &ConstructionState,
    seed: u64,
    trial: u64,
    delta: &Rational,
) -> Option<(SumCertificate, Rational)> {
    let mut rng = trial_rng(seed, trial);
    let fam = state.family();
    let target = Rational::one() - delta;
    for _ in 0..16 {
        let cert = random_certificate(&fam, state.depth, &mut rng);
        if target.is_zero() {
            return Some((SumCertificate::default(), target));
        }
        if let Some(c) = rescale_to_norm(&fam, &cert, &target) {
            return Some((c, target));
        }
    }
    None
}

/// Smallest margin of any step in the bound chain over random level-one
/// certificates rescaled to norm `1 - delta`, and over random admissible
/// decompositions for the twisted bound.
pub fn chain_fuzzer(
    state: &ConstructionState,
    trials: u64,
    seed: u64,
    delta: &Rational,
) -> OracleReport {
    let f = &state.functional;
    let worst = argmax_trials(trials, |t| {
        let mut worst = f64::NEG_INFINITY;
        if let Some((cert, _)) = chain_trial_certificate(state, seed, t, delta) {
            match verify_chain(state, f, &cert) {
                Ok(tr) => worst = worst.max(-tr.min_margin()),
                Err(_) => return f64::INFINITY,
            }
        }
        let mut rng = trial_rng(seed ^ 0x9e37_79b9_7f4a_7c15, t);
        if let Some(dec) = random_decomposition(state, f, &mut rng) {
            match final_bound_check(state, f, &dec) {
                Ok(rep) => worst = worst.max(-rep.min_margin()),
                Err(_) => return f64::INFINITY,
            }
        }
        worst
    });
    let (violation, witness) = match worst {
        Some((v, t)) => {
            let witness = match chain_trial_certificate(state, seed, t, delta) {
                Some((certificate, norm)) => Witness::Certificate {
                    trial: t,
                    norm,
                    certificate,
                },
                None => Witness::None,
            };
            (v, witness)
        }
        // Nothing examined: the full threshold of the final bound remains.
        None => (-9.0, Witness::None),
    };
    OracleReport {
        target: "chain".into(),
        method: "random".into(),
        seed,
        trials,
        iterations: 0,
        best_value: -violation,
        threshold: 0.0,
        best_violation: violation,
        witness,
    }
}

/// Coordinate ascent on the certificate coefficients to make `|F(x)|` large
/// while keeping `||x|| = 1 - delta`; attacks the bound 9 directly.
pub fn chain_ascent(
    state: &ConstructionState,
    iterations: u64,
    seed: u64,
    delta: &Rational,
) -> OracleReport {
    let f = &state.functional;
    let fam = state.family();
    let target = Rational::one() - delta;
    let mut rng = trial_rng(seed, u64::MAX);
    let value_of = |c: &SumCertificate| -> Option<(SumCertificate, f64)> {
        let scaled = rescale_to_norm(&fam, c, &target)?;
        let tr = verify_chain(state, f, &scaled).ok()?;
        Some((scaled, tr.f_value.abs()))
    };
    let mut current = random_certificate(&fam, state.depth, &mut rng);
    let mut best: Option<(SumCertificate, f64)> = value_of(&current);
    for _ in 0..iterations {
        if current.terms.is_empty() {
            current = random_certificate(&fam, state.depth, &mut rng);
            continue;
        }
        let mut cand = current.clone();
        let k = rng.random_range(0..cand.terms.len());
        cand.terms[k].r = random_rational(&mut rng, 16, 16);
        if let Some((scaled, v)) = value_of(&cand) {
            if best.as_ref().is_none_or(|(_, b)| v > *b) {
                best = Some((scaled, v));
                current = cand;
            }
        }
    }
    let (witness, value) = match best {
        Some((certificate, v)) => (
            Witness::Certificate {
                trial: 0,
                norm: target,
                certificate,
            },
            v,
        ),
        None => (Witness::None, 0.0),
    };
    OracleReport {
        target: "chain".into(),
        method: "coordinate-ascent".into(),
        seed,
        trials: 1,
        iterations,
        best_value: value,
        threshold: 9.0,
        best_violation: value - 9.0,
        witness,
    }
}

/// Re-runs the chain on a certificate witness and returns its smallest margin.
pub fn replay_chain_witness(report: &OracleReport, state: &ConstructionState) -> Result<f64> {
    match &report.witness {
        Witness::Certificate { certificate, .. } => {
            Ok(verify_chain(state, &state.functional, certificate)?.min_margin())
        }
        _ => Err(Error::InvalidParameter("report carries no certificate".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn crosspolytope_examples() {
        let ys = [FinSeq::unit(1), FinSeq::from_pairs([(2, ratio(1, 2))])];
        let m = min_crosspolytope_norm(&ys, Strategy::Auto).unwrap();
        assert_eq!(m.value, ratio(1, 2));
        assert_eq!(m.alpha, vec![int(0), int(1)]);
        assert_eq!(m.method, "exact");

        let y = FinSeq::from_ints(&[(1, 3), (4, -1)]);
        assert_eq!(min_crosspolytope_norm(&[y], Strategy::Auto).unwrap().value, int(4));

        let dup = [FinSeq::unit(1), FinSeq::unit(1)];
        let m = min_crosspolytope_norm(&dup, Strategy::Auto).unwrap();
        assert!(m.value.is_zero());
        assert_eq!(m.alpha, vec![ratio(1, 2), ratio(-1, 2)]);
        assert!(min_crosspolytope_norm(&[], Strategy::Auto).is_err());
    }

    #[test]
    fn orthant_matches_grid_on_small_families() {
        let ys = [
            FinSeq::from_pairs([(1, ratio(1, 8)), (2, ratio(-1, 16))]),
            FinSeq::from_pairs([(1, ratio(1, 16)), (3, ratio(1, 16))]),
            FinSeq::from_pairs([(2, ratio(1, 10)), (3, ratio(-1, 20))]),
        ];
        let exact = to_f64(&min_crosspolytope_norm(&ys, Strategy::Orthant).unwrap().value);
        let grid = grid_crosspolytope_min(&ys, 64);
        assert!(exact <= grid + 1e-15 && grid - exact <= 1.0 / 64.0);
    }

    #[test]
    fn heuristic_is_close_on_small_families() {
        let ys = [
            FinSeq::from_ints(&[(1, 2), (2, -1)]),
            FinSeq::from_ints(&[(1, 1), (3, 1)]),
            FinSeq::from_ints(&[(2, 1), (3, -2)]),
        ];
        let exact = to_f64(&min_crosspolytope_norm(&ys, Strategy::Orthant).unwrap().value);
        let h = min_crosspolytope_norm(&ys, Strategy::Heuristic).unwrap();
        assert_eq!(h.method, "heuristic");
        let hv = to_f64(&h.value);
        assert!(hv >= exact - 1e-12 && hv <= exact * 1.05 + 1e-9, "{hv} vs {exact}");
        let total: Rational = h.alpha.iter().map(|a| a.abs()).sum();
        assert_eq!(total, int(1));
    }

    fn anchored_family(k: usize, m: i64) -> Vec<FinSeq> {
        let mut zs: Vec<FinSeq> = (0..k)
            .map(|j| {
                FinSeq::from_pairs([(2 * j + 1, ratio(m, 2)), (2 * j + 2, ratio(-m, 2))])
            })
            .collect();
        let s: FinSeq = zs.iter().sum();
        zs.push(-&s);
        zs
    }

    #[test]
    fn anchored_closed_form_agrees_with_programs() {
        let c = mass_norm_budget();
        for k in 1..=4 {
            let zs = anchored_family(k, 3);
            let norms: Vec<Rational> = zs.iter().map(FinSeq::norm_l1).collect();
            let mut idx: Vec<usize> = (0..k).collect();
            loop {
                let (closed, r) = anchored_mass(&zs, &norms, &idx, &c);
                let (general, _) = general_mass(&zs, &idx, &c);
                assert_eq!(closed, general, "k = {k}, support {idx:?}");
                if let Some(m) = closed {
                    let total: Rational = r.iter().map(|q| q.abs()).sum();
                    assert_eq!(total, m);
                    assert!(combination(&zs, &r).norm_l1() <= c);
                }
                if !next_combination(&mut idx, k + 1) {
                    break;
                }
            }
        }
    }

    #[test]
    fn mass_examples() {
        // n = 2: k = 4, eta = 1/32, m = 481.
        let zs = anchored_family(4, 481);
        let eta = ratio(1, 32);
        let rep = lemma5_adversary(&zs, 4, &eta, MassOptions::default());
        assert!(rep.best_violation < 0.0, "{rep:?}");
        assert_eq!(rep.trials, 5);
        let (mass, norm) = replay_mass_witness(&rep, &zs).unwrap();
        assert!((mass - rep.best_value).abs() <= 1e-12);
        assert!(norm <= mass_norm_budget());

        let tampered = anchored_family(4, 1);
        assert!(lemma5_adversary(&tampered, 4, &eta, MassOptions::default()).violated());

        let none = lemma5_adversary(&zs, 0, &eta, MassOptions::default());
        assert_eq!(none.best_value, 0.0);
        assert!(!none.violated());

        let all = lemma5_adversary(&zs, 5, &eta, MassOptions::default());
        assert_eq!(all.best_violation, f64::INFINITY);
    }

    #[test]
    fn mass_is_monotone_in_k() {
        let zs = anchored_family(5, 7);
        let eta = ratio(1, 64);
        let mut prev = 0.0;
        for k in 0..=5 {
            let m = lemma5_adversary(&zs, k, &eta, MassOptions::default()).best_value;
            assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn quasi_constant_examples() {
        let lin = QuasiFunctional::user_linear(FinSeq::from_ints(&[(1, 2), (3, -5)]));
        let rep = quasi_constant_adversary(&lin, 200, 1);
        assert!(rep.best_value < 1e-12);

        let weights = FinSeq::unit(1);
        let w = QuasiFunctional::weighted_ribe(weights, int(2)).unwrap();
        let rep = quasi_constant_adversary(&w, 500, 2);
        assert!(rep.best_value <= 1.0 && !rep.violated());

        let ribe = QuasiFunctional::ribe();
        let rep = quasi_constant_adversary(&ribe, 2000, 3);
        assert!(rep.best_value > 0.3 && !rep.violated(), "{rep:?}");
        let again = replay_quasi_witness(&rep, &ribe).unwrap();
        assert!((again - rep.best_value).abs() <= 1e-12);
        assert_eq!(quasi_constant_adversary(&ribe, 2000, 3), rep);
    }

    #[test]
    fn report_json_round_trip() {
        let zs = anchored_family(2, 1);
        let rep = lemma5_adversary(&zs, 3, &ratio(1, 16), MassOptions::default());
        assert_eq!(rep.best_violation, f64::INFINITY);
        let text = serde_json::to_string(&rep).unwrap();
        let back: OracleReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rep);
    }
}
