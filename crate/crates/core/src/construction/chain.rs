//! Replays the bound chain for sums of generators.
//!
//! For `x = sum_l (A_l + B_l)` with `A_l = (sum_j r_{l,j}) e_l` and
//! `B_l = m_l sum_j r_{l,j} x_{l,j}`, descending from the top level: the part
//! left of the tail index has norm below `beta_l + c_l`, so the block has norm
//! below 3, so its coefficient mass is below `c_l`, which bounds the next
//! prefix by `beta_{l-1} = beta_l + 2 c_l`. The pieces then give
//! `|F(x)| < 9`, and for the twisted sum `|||(r, x)||| < 23`.

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ConstructionState;
use crate::oracles::random_seq;
use crate::quasilinear::{iterated_defect_check, QuasiFunctional};
use crate::rational::{self, to_f64, Rational};
use crate::seqspace::FinSeq;
use crate::sumsets::{certificate_value, scale_certificate, validate, SumCertificate, SumFamily, SumTerm};
use crate::{Error, Result, STRICT_MARGIN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Pass,
    /// Holds, but by less than the interior margin.
    Band,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub level: Option<usize>,
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    /// Strict inequality; only these contribute a margin.
    #[serde(default)]
    pub strict: bool,
    pub status: StepStatus,
}

fn exact_step(level: Option<usize>, name: &str, lhs: &Rational, rhs: &Rational, strict: bool) -> ChainStep {
    let ok = if strict { lhs < rhs } else { lhs <= rhs };
    ChainStep {
        level,
        name: name.into(),
        lhs: to_f64(lhs),
        rhs: to_f64(rhs),
        margin: to_f64(&(rhs - lhs)),
        strict,
        status: if ok { StepStatus::Pass } else { StepStatus::Fail },
    }
}

fn float_step(level: Option<usize>, name: &str, lhs: f64, rhs: f64, strict: bool) -> ChainStep {
    let status = if strict {
        if lhs < rhs - STRICT_MARGIN {
            StepStatus::Pass
        } else if lhs < rhs {
            StepStatus::Band
        } else {
            StepStatus::Fail
        }
    } else if lhs <= rhs + STRICT_MARGIN {
        StepStatus::Pass
    } else {
        StepStatus::Fail
    };
    ChainStep {
        level,
        name: name.into(),
        lhs,
        rhs,
        margin: rhs - lhs,
        strict,
        status,
    }
}

fn all_pass(steps: &[ChainStep]) -> bool {
    steps.iter().all(|s| s.status == StepStatus::Pass)
}

/// Smallest margin of a strict step; zero or less as soon as any step fails
/// or sits in the band, infinite when no strict step was evaluated.
fn min_step_margin(steps: &[ChainStep]) -> f64 {
    steps
        .iter()
        .filter_map(|s| match s.status {
            StepStatus::Fail => Some(-s.margin.abs()),
            StepStatus::Band => Some(0.0),
            StepStatus::Pass if s.strict => Some(s.margin),
            StepStatus::Pass => None,
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainTranscript {
    pub steps: Vec<ChainStep>,
    pub norm: f64,
    pub f_value: f64,
    /// Highest level with a nonzero coefficient (0 for the zero sum).
    pub top_level: usize,
    pub passed: bool,
}

impl ChainTranscript {
    pub fn min_margin(&self) -> f64 {
        min_step_margin(&self.steps)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ChainStep> {
        self.steps.iter().filter(|s| s.status != StepStatus::Pass)
    }
}

/// `sum_n 2^-(n+3)`, the bound on the total of the `c_n`.
fn c_series() -> Rational {
    rational::ratio(1, 8)
}

/// Replays every step for a level-one certificate whose value has norm below 1.
pub fn verify_chain(
    state: &ConstructionState,
    f: &QuasiFunctional,
    cert: &SumCertificate,
) -> Result<ChainTranscript> {
    let fam = state.family();
    validate(&fam, cert, 1)?;
    let x = certificate_value(&fam, cert)?;
    let norm = x.norm_l1();
    if norm >= Rational::one() {
        return Err(Error::Premise(format!(
            "certificate value has norm {} >= 1",
            rational::format_rational(&norm)
        )));
    }

    let depth = state.levels.len();
    let mut coeffs: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); depth + 1];
    for ((i, j), r) in cert.aggregated() {
        coeffs[i].push((j, r));
    }
    let top = (1..=depth).rev().find(|&l| !coeffs[l].is_empty()).unwrap_or(0);

    // A_l, B_l and the block masses, indexed by level (index 0 unused).
    let mut a_parts = vec![FinSeq::zero(); top + 1];
    let mut b_parts = vec![FinSeq::zero(); top + 1];
    let mut masses = vec![Rational::zero(); top + 1];
    for l in 1..=top {
        let level = &state.levels[l - 1];
        let mq = Rational::from_integer(level.m.into());
        let mut b = FinSeq::zero();
        let mut a = Rational::zero();
        for (j, r) in &coeffs[l] {
            a += r;
            masses[l] += r.abs();
            b.add_scaled(&(r * &mq), &level.x[j - 1]);
        }
        a_parts[l] = level.e.scale(&a);
        b_parts[l] = b;
    }
    let mut prefix = vec![FinSeq::zero(); top + 1];
    for l in 1..=top {
        prefix[l] = &(&prefix[l - 1] + &a_parts[l]) + &b_parts[l];
    }

    let mut steps = Vec::new();
    let recomposed = (&prefix[top] - &x).norm_l1();
    steps.push(exact_step(None, "decomposition", &recomposed, &Rational::zero(), false));

    let one = Rational::one();
    let three = rational::int(3);
    let mut beta = one.clone();
    for l in (1..=top).rev() {
        let c = &state.levels[l - 1].c;
        let lv = Some(l);
        let head = &prefix[l - 1] + &a_parts[l];
        let head_norm = head.norm_l1();
        steps.push(exact_step(lv, "tail-split", &head_norm, &(&beta + c), true));
        steps.push(exact_step(lv, "tail-monotone", &head_norm, &prefix[l].norm_l1(), false));
        let cap = rational::int(2) * &beta + c;
        steps.push(exact_step(lv, "block-norm", &b_parts[l].norm_l1(), &cap, true));
        steps.push(exact_step(lv, "block-budget", &cap, &three, true));
        steps.push(exact_step(lv, "block-mass", &masses[l], c, true));
        steps.push(exact_step(lv, "e-coefficient", &a_parts[l].norm_l1(), c, true));
        beta = &beta + rational::int(2) * c;
        steps.push(exact_step(lv, "prefix-norm", &prefix[l - 1].norm_l1(), &beta, true));
    }

    let a_sum: FinSeq = a_parts.iter().sum();
    let b_sum: FinSeq = b_parts.iter().sum();
    let a_norm = a_sum.norm_l1();
    let b_norm = b_sum.norm_l1();
    steps.push(exact_step(None, "a-sum-norm", &a_norm, &c_series(), true));
    steps.push(exact_step(None, "b-sum-norm", &b_norm, &(&one + c_series()), true));
    steps.push(exact_step(None, "b-sum-cap", &(&one + c_series()), &rational::int(2), true));

    let fb = f.eval_seq(&b_sum)?;
    if let Ok(tb) = state.split.eval_exact(&b_sum) {
        let gap = (fb - to_f64(&tb)).abs();
        let allowed = state.split.defect_bound() * to_f64(&b_norm);
        steps.push(float_step(None, "b-sum-split", gap, allowed, false));
    }
    steps.push(float_step(None, "b-sum-value", fb.abs(), 2.0, true));

    for (l, a) in a_parts.iter().enumerate().skip(1) {
        if !a.is_zero() {
            let fa = f.eval_seq(a)?.abs();
            steps.push(float_step(Some(l), "e-value", fa, to_f64(&rational::pow2(-(l as i64))), true));
        }
    }
    let iterated = iterated_defect_check(f, &a_parts[1..])?;
    steps.push(float_step(None, "iterated-bound", iterated.lhs, iterated.rhs, false));
    steps.push(float_step(None, "iterated-cap", iterated.rhs, 4.0, true));

    let fa_sum = f.eval_seq(&a_sum)?;
    let fx = f.eval_seq(&x)?;
    let composed = fa_sum.abs() + fb.abs() + to_f64(&a_norm) + to_f64(&b_norm);
    steps.push(float_step(None, "quasi-additivity", fx.abs(), composed, false));
    steps.push(float_step(None, "composed-bound", composed, 9.0, true));
    steps.push(float_step(None, "final", fx.abs(), 9.0, true));

    Ok(ChainTranscript {
        passed: all_pass(&steps),
        steps,
        norm: to_f64(&norm),
        f_value: fx,
        top_level: top,
    })
}

/// `u + (0, z)` with `u = (r, y)` in the unit quasi-norm ball and `z` given by
/// a level-one certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub r: f64,
    pub y: FinSeq,
    pub z: SumCertificate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub steps: Vec<ChainStep>,
    /// The chain for `z/2`, when the premises allow it.
    pub chain: Option<ChainTranscript>,
    pub quasi_norm: f64,
    pub passed: bool,
}

impl BoundReport {
    pub fn min_margin(&self) -> f64 {
        let own = min_step_margin(&self.steps);
        self.chain.as_ref().map_or(own, |c| own.min(c.min_margin()))
    }
}

/// Checks `|F(z)| < 18`, `|r - F(x)| < 22` and `|||(r, x)||| < 23` for
/// `x = y + z`. Violated premises are reported as failed steps.
pub fn final_bound_check(
    state: &ConstructionState,
    f: &QuasiFunctional,
    dec: &Decomposition,
) -> Result<BoundReport> {
    let fam = state.family();
    let mut steps = Vec::new();
    let fy = f.eval_seq(&dec.y)?;
    let y_norm = dec.y.norm_l1();
    steps.push(float_step(None, "u-in-ball", (dec.r - fy).abs() + to_f64(&y_norm), 1.0, true));
    steps.push(exact_step(None, "y-norm", &y_norm, &Rational::one(), true));

    let certified = validate(&fam, &dec.z, 1);
    steps.push(ChainStep {
        level: Some(1),
        name: "z-certified".into(),
        lhs: 0.0,
        rhs: 0.0,
        margin: 0.0,
        strict: false,
        status: if certified.is_ok() { StepStatus::Pass } else { StepStatus::Fail },
    });
    let Ok(z) = certificate_value(&fam, &dec.z) else {
        return Ok(BoundReport {
            steps,
            chain: None,
            quasi_norm: f64::NAN,
            passed: false,
        });
    };
    let x = &dec.y + &z;
    let x_norm = x.norm_l1();
    let z_norm = z.norm_l1();
    steps.push(exact_step(None, "x-norm", &x_norm, &Rational::one(), false));
    steps.push(exact_step(None, "z-norm", &z_norm, &rational::int(2), true));

    let mut chain = None;
    if certified.is_ok() && z_norm < rational::int(2) {
        let half = scale_certificate(&dec.z, &rational::ratio(1, 2))?;
        let tr = verify_chain(state, f, &half)?;
        steps.push(float_step(None, "z-value", 2.0 * tr.f_value.abs(), 18.0, true));
        chain = Some(tr);
    }

    let fx = f.eval_seq(&x)?;
    let gap = (dec.r - fx).abs();
    steps.push(float_step(None, "r-gap", gap, 22.0, true));
    let quasi_norm = gap + to_f64(&x_norm);
    steps.push(float_step(None, "quasi-norm", quasi_norm, 23.0, true));
    let passed = all_pass(&steps) && chain.as_ref().is_none_or(|c| c.passed);
    Ok(BoundReport {
        steps,
        chain,
        quasi_norm,
        passed,
    })
}

/// A random level-one certificate: each level up to `depth` is active with
/// probability 1/2 and then uses up to its full budget `2^(l-1)`, with
/// coefficients `a/b`, `|a| <= b <= 16`.
pub fn random_certificate<R: Rng>(fam: &SumFamily, depth: usize, rng: &mut R) -> SumCertificate {
    let mut terms = Vec::new();
    for l in 1..=depth.min(fam.blocks()) {
        let size = fam.generators[l - 1].len();
        if size == 0 || !rng.random::<bool>() {
            continue;
        }
        let count = rng.random_range(1..=(1usize << (l - 1)).min(64));
        for _ in 0..count {
            let den = rng.random_range(1..=16i64);
            let num = rng.random_range(-den..=den);
            terms.push(SumTerm::new(l, rng.random_range(1..=size), rational::ratio(num, den)));
        }
    }
    SumCertificate::new(terms)
}

/// Scales a certificate so its value has norm `target`; `None` when the value
/// vanishes or the scaled coefficients leave the level-one budget.
pub fn rescale_to_norm(fam: &SumFamily, cert: &SumCertificate, target: &Rational) -> Option<SumCertificate> {
    let norm = certificate_value(fam, cert).ok()?.norm_l1();
    if norm.is_zero() {
        return None;
    }
    let s = target / norm;
    let scaled = SumCertificate::new(
        cert.terms
            .iter()
            .map(|t| SumTerm::new(t.i, t.j, &t.r * &s))
            .collect(),
    );
    validate(fam, &scaled, 1).ok()?;
    Some(scaled)
}

fn unit_fraction<R: Rng>(rng: &mut R) -> Rational {
    rational::ratio(rng.random_range(1..=95), 100)
}

/// A random admissible decomposition: `z` of norm `a < 2`, `y = -beta z + v`
/// with `beta` and `||v||` chosen so that `||y|| < 1` and `||y + z|| <= 1`,
/// and `r = F(y) + t(1 - ||y||)` with `|t| < 1`.
pub fn random_decomposition<R: Rng>(
    state: &ConstructionState,
    f: &QuasiFunctional,
    rng: &mut R,
) -> Option<Decomposition> {
    let fam = state.family();
    let one = Rational::one();
    let a = rational::ratio(rng.random_range(1..=190), 100);
    let raw = random_certificate(&fam, state.depth, rng);
    let cert = rescale_to_norm(&fam, &raw, &a)?;
    let z = certificate_value(&fam, &cert).ok()?;

    let lo = (&one - a.recip()).max(Rational::zero());
    let hi = a.recip().min(one.clone());
    let beta = &lo + (&hi - &lo) * unit_fraction(rng);
    let room = (&one - &beta * &a).min(&one - (&one - &beta) * &a);
    let nu = room * unit_fraction(rng);
    let span = z.max_index().unwrap_or(1) + 4;
    let v = random_seq(rng, span, 4);
    let v = v.scale(&(&nu / v.norm_l1()));
    let mut y = z.scale(&-&beta);
    y.add_scaled(&one, &v);
    if y.norm_l1() >= one || (&y + &z).norm_l1() > one {
        return None;
    }
    let t = to_f64(&rational::ratio(rng.random_range(-95..=95), 100));
    let r = f.eval_seq(&y).ok()? + t * (1.0 - to_f64(&y.norm_l1()));
    Some(Decomposition { r, y, z: cert })
}
