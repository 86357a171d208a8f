//! Level-by-level construction of the generator sets `G_n`.
//!
//! Level `n` takes the next `2^n` supply vectors lying to the right of every
//! earlier generator and of `e_n`, appends minus their sum, and sets
//! `G_n = {e_n + m_n x_{n,j}}`. The multiplier `m_n` is large enough that any
//! combination of at most `2^n` of the `m_n x_{n,j}` with norm below 3 has
//! coefficient mass below `c_n`; that property is re-checked adversarially
//! for every level.

pub mod chain;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::oracles::{self, lemma5_adversary, MassOptions, OracleReport, Strategy};
use crate::quasilinear::{normalize_constant, split_map_from_ribe, QuasiFunctional, SplitMap};
use crate::rational::{self, to_f64, Rational};
use crate::seqspace::{pairwise_disjoint, FinSeq};
use crate::sumsets::{
    check_hull_weights, hull_membership, validate, HullAnswer, SumCertificate, SumFamily, SumTerm,
};
use crate::twisted::u_radius;
use crate::{Error, Result};

pub use chain::{
    final_bound_check, random_certificate, random_decomposition, rescale_to_norm, verify_chain,
    BoundReport, ChainStep, ChainTranscript, Decomposition, StepStatus,
};

/// Deepest supported construction; `|G_10| = 1025`.
pub const MAX_DEPTH: usize = 10;

/// `c_n = 2^-(n+3)`, the largest admissible choice.
pub fn default_cn(n: usize) -> Result<Rational> {
    if n == 0 {
        return Err(Error::InvalidParameter("levels start at 1".into()));
    }
    Ok(rational::pow2(-(n as i64 + 3)))
}

/// Cyclic enumeration `i -> ((i-1) mod J) + 1` of length `len`.
pub fn enumerate_e(count: usize, len: usize) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(Error::InvalidParameter("need at least one generator".into()));
    }
    Ok((0..len).map(|i| i % count + 1).collect())
}

/// Scales each `d` by `min(1, 1/||d||, 1/ceil|F(d)|)` so that `||d|| <= 1`
/// and `|F(d)| <= 1`.
pub fn normalize_generators(f: &QuasiFunctional, ds: &[FinSeq]) -> Result<Vec<FinSeq>> {
    ds.iter()
        .enumerate()
        .map(|(j, d)| {
            if d.is_zero() {
                return Err(Error::ZeroVector(j + 1));
            }
            let mut alpha = Rational::one();
            let norm = d.norm_l1();
            if norm > alpha {
                alpha = norm.recip();
            }
            let fv = f.eval_seq(d)?.abs();
            if fv * to_f64(&alpha) > 1.0 {
                let ceil = fv.ceil();
                let cap = Rational::new(1.into(), rational::from_f64(ceil).unwrap().to_integer());
                alpha = alpha.min(cap);
            }
            Ok(if alpha.is_one() { d.clone() } else { d.scale(&alpha) })
        })
        .collect()
}

/// Largest support index over the given generators and `e`. Every vector to
/// the right of it adds its norm to any combination of them.
pub fn tail_index(generators: &[FinSeq], e: &FinSeq) -> usize {
    generators
        .iter()
        .chain(std::iter::once(e))
        .filter_map(FinSeq::max_index)
        .max()
        .unwrap_or(0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisConstant {
    #[serde(with = "rational")]
    pub value: Rational,
    /// "disjoint", "exact" or "heuristic".
    pub method: String,
}

/// An `M` with `sum |a_i| <= M ||sum a_i y_i||`: exactly `1/min ||y_i||` for
/// disjoint supports, otherwise the cross-polytope minimum inflated by 10%.
pub fn basis_constant(ys: &[FinSeq]) -> Result<BasisConstant> {
    if ys.is_empty() {
        return Err(Error::InvalidParameter("empty family".into()));
    }
    if !linalg::is_independent(ys) {
        return Err(Error::Dependent);
    }
    if pairwise_disjoint(ys) {
        let min = ys.iter().map(FinSeq::norm_l1).min().expect("nonempty");
        return Ok(BasisConstant {
            value: min.recip(),
            method: "disjoint".into(),
        });
    }
    let found = oracles::min_crosspolytope_norm(ys, Strategy::Auto)?;
    if found.value.is_zero() {
        return Err(Error::Dependent);
    }
    Ok(BasisConstant {
        value: rational::ratio(11, 10) / found.value,
        method: found.method,
    })
}

/// Smallest integer strictly above `3(k+1)M/eta`.
pub fn choose_m(basis: &Rational, k: u64, eta: &Rational) -> Result<u64> {
    if !basis.is_positive() || !eta.is_positive() {
        return Err(Error::InvalidParameter("M and eta must be positive".into()));
    }
    let bound = rational::int(3) * Rational::from_integer((k + 1).into()) * basis / eta;
    rational::floor_plus_one(&bound)
        .to_u64()
        .ok_or_else(|| Error::InvalidParameter("multiplier overflows u64".into()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassSummary {
    pub best_mass: f64,
    pub eta: f64,
    pub violation: f64,
    pub method: String,
    pub patterns: u64,
}

impl From<&OracleReport> for MassSummary {
    fn from(r: &OracleReport) -> Self {
        Self {
            best_mass: r.best_value,
            eta: r.threshold,
            violation: r.best_violation,
            method: r.method.clone(),
            patterns: r.trials,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub n: usize,
    #[serde(with = "rational")]
    pub c: Rational,
    pub e: FinSeq,
    /// Tail index: every chosen supply vector lies strictly right of it.
    pub s: usize,
    /// Positions (from 1) in the supply of the first `2^n` vectors below.
    pub ell: Vec<usize>,
    /// `x_{n,1..2^n}` followed by minus their sum.
    pub x: Vec<FinSeq>,
    pub basis_constant: BasisConstant,
    pub m: u64,
    /// `e + m x_j` for every `x_j` above.
    pub generators: Vec<FinSeq>,
    pub mass: MassSummary,
}

impl Level {
    /// `m x_j`, the family attacked by the mass adversary.
    pub fn scaled_vectors(&self) -> Vec<FinSeq> {
        let m = Rational::from_integer(self.m.into());
        self.x.iter().map(|x| x.scale(&m)).collect()
    }

    /// Largest number of nonzero coefficients the mass bound covers.
    pub fn budget(&self) -> usize {
        1 << self.n
    }
}

/// Re-runs the mass adversary on a level as stored (possibly tampered).
pub fn check_level_mass(level: &Level, opts: MassOptions) -> OracleReport {
    lemma5_adversary(&level.scaled_vectors(), level.budget(), &level.c, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionState {
    pub case: String,
    pub depth: usize,
    pub seed: u64,
    /// Normalized to quasi-additivity constant 1.
    pub functional: QuasiFunctional,
    pub split: SplitMap,
    /// The supply `(x_i)`, all in the kernel of the split map.
    pub xs: Vec<FinSeq>,
    /// The `d_j` after normalization.
    pub d_generators: Vec<FinSeq>,
    pub e_enum: Vec<usize>,
    pub levels: Vec<Level>,
}

impl ConstructionState {
    pub fn family(&self) -> SumFamily {
        SumFamily::new(self.levels.iter().map(|l| l.generators.clone()).collect())
    }

    pub fn level(&self, n: usize) -> Option<&Level> {
        n.checked_sub(1).and_then(|i| self.levels.get(i))
    }

    pub fn table(&self) -> Vec<LevelRow> {
        self.levels
            .iter()
            .map(|l| LevelRow {
                n: l.n,
                c_n: rational::format_rational(&l.c),
                s_n: l.s,
                m_n: l.m,
                basis_constant: rational::format_rational(&l.basis_constant.value),
                generators: l.generators.len(),
            })
            .collect()
    }
}

/// One row of the levels table.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRow {
    pub n: usize,
    pub c_n: String,
    pub s_n: usize,
    pub m_n: u64,
    #[serde(rename = "M_n")]
    pub basis_constant: String,
    #[serde(rename = "G_n_size")]
    pub generators: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BuildOptions {
    pub mass: MassOptions,
    /// Overrides `m_n` at the given levels (negative controls).
    pub forced_m: std::collections::BTreeMap<usize, u64>,
}

/// Disjoint mean-zero pairs `x_i = (e_{2i-1} - e_{2i})/2`, unit-vector
/// generators `d_j = e_j`, and the Ribe function divided by its assumed
/// constant.
pub struct CaseInputs {
    pub functional: QuasiFunctional,
    pub split: SplitMap,
    pub xs: Vec<FinSeq>,
    pub ds: Vec<FinSeq>,
}

pub fn case_a_inputs(depth: usize, generators: usize) -> Result<CaseInputs> {
    let supply = (1usize << (depth + 1)) + generators;
    let half = rational::ratio(1, 2);
    let xs: Vec<FinSeq> = (1..=supply)
        .map(|i| FinSeq::from_pairs([(2 * i - 1, half.clone()), (2 * i, -half.clone())]))
        .collect();
    let ds = (1..=generators).map(FinSeq::unit).collect();
    let ribe = QuasiFunctional::ribe();
    let factor = rational::from_f64(1.0 / ribe.assumed_constant()).expect("finite");
    Ok(CaseInputs {
        functional: normalize_constant(&ribe)?,
        split: split_map_from_ribe(&xs)?.scaled(&factor),
        xs,
        ds,
    })
}

/// Builds level `n` on top of `levels`, taking supply vectors from position
/// `*cursor` on (0-based) and advancing it.
#[allow(clippy::too_many_arguments)]
pub fn build_level(
    levels: &[Level],
    n: usize,
    e: &FinSeq,
    xs: &[FinSeq],
    cursor: &mut usize,
    opts: &BuildOptions,
) -> Result<Level> {
    let c = default_cn(n)?;
    let earlier: Vec<FinSeq> = levels.iter().flat_map(|l| l.generators.iter().cloned()).collect();
    let s = tail_index(&earlier, e);
    let k = 1usize << n;

    let mut ell = Vec::with_capacity(k);
    let mut pos = *cursor;
    while ell.len() < k && pos < xs.len() {
        if xs[pos].is_right_of(s) {
            ell.push(pos + 1);
        }
        pos += 1;
    }
    if ell.len() < k {
        return Err(Error::SupplyExhausted {
            level: n,
            needed: k,
            found: ell.len(),
            tail: s,
        });
    }
    *cursor = pos;

    let mut x: Vec<FinSeq> = ell.iter().map(|&i| xs[i - 1].clone()).collect();
    let basis = basis_constant(&x)?;
    let m = match opts.forced_m.get(&n) {
        Some(&m) => m,
        None => choose_m(&basis.value, k as u64, &c)?,
    };
    let total: FinSeq = x.iter().sum();
    x.push(-&total);
    let mq = Rational::from_integer(m.into());
    let generators = x
        .iter()
        .map(|xj| {
            let mut g = e.clone();
            g.add_scaled(&mq, xj);
            g
        })
        .collect();

    let mut level = Level {
        n,
        c,
        e: e.clone(),
        s,
        ell,
        x,
        basis_constant: basis,
        m,
        generators,
        mass: MassSummary {
            best_mass: 0.0,
            eta: 0.0,
            violation: 0.0,
            method: String::new(),
            patterns: 0,
        },
    };
    let report = check_level_mass(&level, opts.mass);
    level.mass = MassSummary::from(&report);
    if report.violated() {
        return Err(Error::MassCondition {
            level: n,
            multiplier: m,
            best_mass: report.best_value,
            eta: report.threshold,
        });
    }
    Ok(level)
}

/// Runs the construction to `depth` levels. The functional must have
/// constant 1, the split map defect at most 1, and every supply vector must
/// lie in its kernel.
pub fn run_construction(
    f: &QuasiFunctional,
    split: &SplitMap,
    xs: &[FinSeq],
    ds: &[FinSeq],
    depth: usize,
    opts: &BuildOptions,
) -> Result<ConstructionState> {
    if (f.assumed_constant() - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized(f.assumed_constant()));
    }
    if split.defect_bound() > 1.0 {
        return Err(Error::SplitDefect(split.defect_bound()));
    }
    if depth > MAX_DEPTH {
        return Err(Error::InvalidParameter(format!(
            "depth {depth} exceeds the supported maximum {MAX_DEPTH}"
        )));
    }
    for (i, x) in xs.iter().enumerate() {
        if !split.eval_exact(x)?.is_zero() {
            return Err(Error::NotInKernel(i + 1));
        }
    }
    let d = normalize_generators(f, ds)?;
    let e_enum = enumerate_e(d.len(), depth)?;
    let mut levels = Vec::with_capacity(depth);
    let mut cursor = 0;
    for n in 1..=depth {
        let e = &d[e_enum[n - 1] - 1];
        let level = build_level(&levels, n, e, xs, &mut cursor, opts)?;
        levels.push(level);
    }
    Ok(ConstructionState {
        case: "custom".into(),
        depth,
        seed: opts.mass.seed,
        functional: f.clone(),
        split: split.clone(),
        xs: xs.to_vec(),
        d_generators: d,
        e_enum,
        levels,
    })
}

/// The default construction on case-(a) inputs.
pub fn run_case_a(depth: usize, generators: usize, seed: u64) -> Result<ConstructionState> {
    let inputs = case_a_inputs(depth, generators)?;
    let opts = BuildOptions {
        mass: MassOptions {
            seed,
            ..MassOptions::default()
        },
        ..BuildOptions::default()
    };
    let mut state = run_construction(
        &inputs.functional,
        &inputs.split,
        &inputs.xs,
        &inputs.ds,
        depth,
        &opts,
    )?;
    state.case = "a".into();
    Ok(state)
}

/// One consistency check on a stored state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub level: usize,
    pub check: String,
    pub passed: bool,
    pub detail: String,
}

/// Replays every level invariant of a (possibly edited) state: sizes, the
/// minus-sum vector, supply positions and tails, generator formulas, the
/// uniform hull weights for `e_n`, and the mass bound.
pub fn audit_state(state: &ConstructionState, opts: MassOptions) -> Vec<AuditEntry> {
    let mut out = Vec::new();
    let mut push = |level: usize, check: &str, passed: bool, detail: String| {
        out.push(AuditEntry {
            level,
            check: check.into(),
            passed,
            detail,
        })
    };
    if state.levels.len() != state.depth {
        push(0, "depth", false, format!("{} levels for depth {}", state.levels.len(), state.depth));
    }
    let mut c_total = Rational::zero();
    let mut previous: Vec<FinSeq> = Vec::new();
    let mut last_ell = 0;
    for level in &state.levels {
        let n = level.n;
        let k = level.budget();
        c_total += &level.c;
        let c_ok = level.c.is_positive() && default_cn(n).is_ok_and(|c| level.c <= c);
        push(n, "c-range", c_ok, format!("c = {}", rational::format_rational(&level.c)));

        let sizes = level.x.len() == k + 1 && level.generators.len() == k + 1 && level.ell.len() == k;
        push(n, "sizes", sizes, format!("|G| = {}", level.generators.len()));
        if !sizes {
            continue;
        }
        let sum: FinSeq = level.x.iter().sum();
        push(n, "minus-sum", sum.is_zero(), "last vector is minus the others".into());

        let s = tail_index(&previous, &level.e);
        let tail_ok = s == level.s && level.x[..k].iter().all(|x| x.is_right_of(s));
        push(n, "tail", tail_ok, format!("s = {} (expected {s})", level.s));

        let order_ok = level.ell.windows(2).all(|w| w[0] < w[1])
            && level.ell[0] > last_ell
            && level.ell.iter().zip(&level.x).all(|(&i, x)| state.xs.get(i - 1) == Some(x));
        push(n, "supply-order", order_ok, format!("positions {:?}", level.ell));
        last_ell = *level.ell.last().expect("nonempty");

        let mq = Rational::from_integer(level.m.into());
        let gen_ok = level.x.iter().zip(&level.generators).all(|(x, g)| {
            let mut w = level.e.clone();
            w.add_scaled(&mq, x);
            &w == g
        });
        push(n, "generators", gen_ok, format!("G = e + {} x", level.m));

        let hull = hull_membership(&level.e, &level.generators);
        let uniform = vec![rational::ratio(1, (k + 1) as i64); k + 1];
        let hull_ok = hull.weights() == Some(&uniform[..])
            && check_hull_weights(&level.e, &level.generators, &uniform);
        push(n, "e-hull", hull_ok, format!("uniform weights 1/{}", k + 1));

        let report = check_level_mass(level, opts);
        push(
            n,
            "lemma5",
            !report.violated(),
            format!(
                "mass {:.6e} vs c = {:.6e} with m = {} ({})",
                report.best_value, report.threshold, level.m, report.method
            ),
        );
        previous.extend(level.generators.iter().cloned());
    }
    push(
        0,
        "c-sum",
        c_total < rational::ratio(1, 4),
        format!("sum c = {}", rational::format_rational(&c_total)),
    );
    out
}

/// Witnesses that no nonzero functional is continuous: `e_m` is the uniform
/// average of `G_m`, each of whose members lies in `F_n`, and `(1, 0)` has
/// quasi-norm 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualWitness {
    pub m: usize,
    pub n: usize,
    #[serde(with = "rational::vec")]
    pub hull_weights: Vec<Rational>,
    pub hull_exact: bool,
    /// One-term certificates `w_{m,j}`, each valid at level `n`.
    pub members: Vec<SumCertificate>,
    pub members_valid: bool,
    pub unit_quasi_norm: f64,
    #[serde(with = "rational")]
    pub radius: Rational,
    pub unit_in_ball: bool,
    /// `|||(1,0)||| = rho_n`, excluded by the strict ball.
    pub boundary: bool,
    /// The hull step for `(1,0)` needs more than the ball itself.
    pub radius_dependent: bool,
    pub scaled_point: f64,
    pub scaled_in_ball: bool,
}

pub fn trivial_dual_witnesses(state: &ConstructionState, m: usize, n: usize) -> Result<DualWitness> {
    if m == 0 || m > state.depth || n == 0 || n > m {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= n <= m <= depth, got n = {n}, m = {m}, depth = {}",
            state.depth
        )));
    }
    let level = state.level(m).expect("m <= depth");
    let fam = state.family();
    let weights = match hull_membership(&level.e, &level.generators) {
        HullAnswer::Weights(w) => w,
        HullAnswer::Refusal(why) => return Err(Error::Premise(why)),
    };
    let hull_exact = check_hull_weights(&level.e, &level.generators, &weights);
    let members: Vec<SumCertificate> = (1..=level.generators.len())
        .map(|j| SumCertificate::new(vec![SumTerm::new(m, j, Rational::one())]))
        .collect();
    let members_valid = members.iter().all(|c| validate(&fam, c, n).is_ok());

    let f = &state.functional;
    let unit = crate::twisted::TwistedVec::new(1.0, FinSeq::zero());
    let unit_quasi_norm = crate::twisted::quasi_norm(f, &unit)?;
    let radius = u_radius(n);
    let rho = to_f64(&radius);
    let scaled_point = 1.0 - 1e-6;
    Ok(DualWitness {
        m,
        n,
        hull_weights: weights,
        hull_exact,
        members,
        members_valid,
        unit_quasi_norm,
        unit_in_ball: unit_quasi_norm < rho,
        boundary: unit_quasi_norm == rho,
        radius_dependent: unit_quasi_norm >= rho,
        scaled_point,
        scaled_in_ball: scaled_point < rho,
        radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn cn_examples() {
        assert_eq!(default_cn(1).unwrap(), ratio(1, 16));
        assert_eq!(default_cn(3).unwrap(), ratio(1, 64));
        assert!(default_cn(0).is_err());
        let s: Rational = (1..=40).map(|n| default_cn(n).unwrap()).sum();
        assert!(s < ratio(1, 8) && s > ratio(1, 8) - rational::pow2(-42));
    }

    #[test]
    fn enumeration_examples() {
        assert_eq!(enumerate_e(2, 5).unwrap(), vec![1, 2, 1, 2, 1]);
        assert_eq!(enumerate_e(1, 4).unwrap(), vec![1; 4]);
        let e = enumerate_e(3, 20).unwrap();
        for w in e.windows(3) {
            let mut s = w.to_vec();
            s.sort();
            assert_eq!(s, vec![1, 2, 3]);
        }
        assert!(enumerate_e(0, 3).is_err());
    }

    #[test]
    fn generator_normalization_examples() {
        let ribe = QuasiFunctional::ribe_with_constant(1.0).unwrap();
        let out = normalize_generators(&ribe, &[FinSeq::from_ints(&[(1, 2)])]).unwrap();
        assert_eq!(out[0], FinSeq::unit(1));

        let lin = QuasiFunctional::user_linear(FinSeq::from_ints(&[(1, 4)]));
        let out = normalize_generators(&lin, &[FinSeq::unit(1)]).unwrap();
        assert_eq!(out[0], FinSeq::from_pairs([(1, ratio(1, 4))]));

        let d = FinSeq::from_pairs([(2, ratio(1, 3))]);
        assert_eq!(normalize_generators(&ribe, std::slice::from_ref(&d)).unwrap()[0], d);
        assert!(normalize_generators(&ribe, &[FinSeq::zero()]).is_err());
    }

    #[test]
    fn tail_examples() {
        let gens = [FinSeq::from_ints(&[(2, 1), (7, -1)]), FinSeq::unit(3)];
        assert_eq!(tail_index(&gens, &FinSeq::unit(1)), 7);
        assert_eq!(tail_index(&[], &FinSeq::unit(2)), 2);
    }

    #[test]
    fn basis_constant_examples() {
        let units = [FinSeq::unit(1), FinSeq::unit(2), FinSeq::unit(5)];
        assert_eq!(basis_constant(&units).unwrap().value, int(1));
        let mixed = [FinSeq::from_pairs([(1, ratio(1, 2))]), FinSeq::unit(2)];
        assert_eq!(basis_constant(&mixed).unwrap().value, int(2));
        assert_eq!(basis_constant(&[FinSeq::unit(4)]).unwrap().value, int(1));
        let dep = [FinSeq::unit(1), FinSeq::from_ints(&[(1, 2)])];
        assert!(matches!(basis_constant(&dep), Err(Error::Dependent)));

        let overlap = [FinSeq::from_ints(&[(1, 1), (2, 1)]), FinSeq::from_ints(&[(2, 1), (3, 1)])];
        let b = basis_constant(&overlap).unwrap();
        assert_eq!(b.method, "exact");
        // min ||a y1 + b y2|| over |a| + |b| = 1 is 1, at a = -b.
        assert_eq!(b.value, ratio(11, 10));
    }

    #[test]
    fn multiplier_examples() {
        assert_eq!(choose_m(&int(1), 4, &ratio(1, 32)).unwrap(), 481);
        assert_eq!(choose_m(&int(1), 2, &ratio(1, 16)).unwrap(), 145);
        assert_eq!(choose_m(&int(1), 2, &int(100)).unwrap(), 1);
        assert!(choose_m(&int(0), 2, &int(1)).is_err());
    }

    #[test]
    fn depth_three_case_a() {
        let state = run_case_a(3, 2, 0).unwrap();
        let sizes: Vec<usize> = state.levels.iter().map(|l| l.generators.len()).collect();
        assert_eq!(sizes, vec![3, 5, 9]);
        assert_eq!(state.levels[1].m, 481);
        assert_eq!(state.levels[0].m, 145);
        for l in &state.levels {
            assert!(l.mass.violation < 0.0);
            assert!(l.ell.windows(2).all(|w| w[0] < w[1]));
            assert!(l.x[..l.budget()].iter().all(|x| x.is_right_of(l.s)));
        }
        assert!(audit_state(&state, MassOptions::default()).iter().all(|a| a.passed));
        assert_eq!(run_case_a(3, 2, 0).unwrap(), state);

        let empty = run_case_a(0, 2, 0).unwrap();
        assert!(empty.levels.is_empty());
    }

    #[test]
    fn forced_multiplier_fails_mass_check() {
        let inputs = case_a_inputs(2, 2).unwrap();
        let opts = BuildOptions {
            forced_m: [(2, 1)].into_iter().collect(),
            ..BuildOptions::default()
        };
        let err = run_construction(&inputs.functional, &inputs.split, &inputs.xs, &inputs.ds, 2, &opts)
            .unwrap_err();
        assert!(matches!(err, Error::MassCondition { level: 2, multiplier: 1, .. }));
    }

    #[test]
    fn construction_preconditions() {
        let inputs = case_a_inputs(2, 1).unwrap();
        let raw = QuasiFunctional::ribe();
        let opts = BuildOptions::default();
        assert!(matches!(
            run_construction(&raw, &inputs.split, &inputs.xs, &inputs.ds, 2, &opts),
            Err(Error::NotNormalized(_))
        ));
        let short = &inputs.xs[..3];
        assert!(matches!(
            run_construction(&inputs.functional, &inputs.split, short, &inputs.ds, 2, &opts),
            Err(Error::SupplyExhausted { level: 2, .. })
        ));
    }

    #[test]
    fn tampered_state_is_caught() {
        let mut state = run_case_a(2, 2, 0).unwrap();
        state.levels[1].m = 1;
        let audit = audit_state(&state, MassOptions::default());
        let failed: Vec<&str> = audit.iter().filter(|a| !a.passed).map(|a| a.check.as_str()).collect();
        assert!(failed.contains(&"lemma5") && failed.contains(&"generators"));
    }

    #[test]
    fn dual_witness_examples() {
        let state = run_case_a(3, 2, 0).unwrap();
        let w = trivial_dual_witnesses(&state, 1, 1).unwrap();
        assert_eq!(w.hull_weights, vec![ratio(1, 3); 3]);
        assert!(w.hull_exact && w.members_valid);
        assert!(w.boundary && !w.unit_in_ball && w.scaled_in_ball);

        let w = trivial_dual_witnesses(&state, 3, 1).unwrap();
        assert_eq!(w.hull_weights, vec![ratio(1, 9); 9]);
        assert!(w.members_valid && w.radius_dependent);
        assert!(trivial_dual_witnesses(&state, 4, 1).is_err());
        assert!(trivial_dual_witnesses(&state, 2, 3).is_err());
    }

    #[test]
    fn state_json_round_trip() {
        let state = run_case_a(2, 2, 5).unwrap();
        let text = serde_json::to_string(&state).unwrap();
        let back: ConstructionState = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}
