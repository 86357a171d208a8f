//! Quasi-linear functionals on sequence spaces.
//!
//! A functional `F` is quasi-linear when `F(rx) = rF(x)` and
//! `|F(x+y) - F(x) - F(y)| <= C(||x|| + ||y||)`. The main example is the Ribe
//! function on finitely supported `l1` sequences,
//!
//! ```text
//! F0(x) = sum_i x_i ln|x_i| - (sum_i x_i) ln|sum_i x_i|,     0 ln 0 = 0,
//! ```
//!
//! which is additive on disjointly supported mean-zero vectors but does not
//! stay within bounded distance of any linear map.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::linalg::Echelon;
use crate::rational::{self, to_f64, Rational};
use crate::seqspace::{check_exponent, Element, FinSeq, MixedSeq, Space};
use crate::{Error, Result};

/// Configured quasi-additivity constant for the Ribe function. The true
/// optimum is not known in closed form; the quasi-constant oracle measures
/// roughly 0.88.
pub const DEFAULT_RIBE_CONSTANT: f64 = 4.0;

/// The Ribe function.
///
/// Evaluated as `t * Phi(x/t)` with `t = ||x||_1`, where
/// `Phi(u) = sum u_i ln|u_i| - s ln|s|` and `s = sum u_i`. The two forms agree
/// because `sum x_i ln t = s t ln t`; the ratios `x_i/t` are exact, so
/// `F0(rx)` and `rF0(x)` differ only by the rounding of the final product.
pub fn ribe_eval(x: &FinSeq) -> f64 {
    let coords: Vec<&Rational> = x.iter().map(|(_, q)| q).collect();
    ribe_of_coords(&coords)
}

/// Works on integers `a_i = L x_i` with `L` the common denominator, so that
/// `x_i / t = a_i / sum |a_j|` is rounded once from its exact value.
fn ribe_of_coords(coords: &[&Rational]) -> f64 {
    let lcm = coords.iter().fold(BigInt::one(), |l, q| l.lcm(q.denom()));
    let ints: Vec<BigInt> = coords.iter().map(|q| q.numer() * (&lcm / q.denom())).collect();
    let total: BigInt = ints.iter().map(|a| a.abs()).sum();
    if total.is_zero() {
        return 0.0;
    }
    let xlogx = |a: &BigInt| -> f64 {
        if a.is_zero() {
            0.0
        } else {
            let u = to_f64(&Rational::new(a.clone(), total.clone()));
            u * u.abs().ln()
        }
    };
    let sum: BigInt = ints.iter().sum();
    let phi = ints.iter().map(xlogx).sum::<f64>() - xlogx(&sum);
    to_f64(&Rational::new(total, lcm)) * phi
}

/// `sum_n c_n F0(x_n)` on the mixed-block space.
pub fn weighted_ribe_eval(x: &MixedSeq, weights: &FinSeq, p: &Rational) -> Result<f64> {
    check_exponent(p)?;
    let mut total = 0.0;
    for (n, _) in x.blocks() {
        let c = weights.get(n).ok_or(Error::MissingWeight(n))?;
        total += to_f64(c) * ribe_of_coords(&x.block(n).unwrap_or(&[]).iter().collect::<Vec<_>>());
    }
    Ok(total)
}

/// `(sum |c_n|^q)^(1/q)` with `1/p + 1/q = 1`.
pub fn dual_weight_norm(weights: &FinSeq, p: &Rational) -> Result<f64> {
    check_exponent(p)?;
    let pf = to_f64(p);
    let q = pf / (pf - 1.0);
    let s: f64 = weights.iter().map(|(_, c)| to_f64(c).abs().powf(q)).sum();
    Ok(s.powf(1.0 / q))
}

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionalKind {
    Ribe,
    WeightedRibe { weights: FinSeq, p: Rational },
    /// Linear functional given by its values on unit vectors.
    UserLinear { values: FinSeq },
    Scaled { inner: Box<QuasiFunctional>, factor: Rational },
}

/// A quasi-linear functional together with the constant `C` it is assumed
/// to satisfy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Descriptor", into = "Descriptor")]
pub struct QuasiFunctional {
    kind: FunctionalKind,
    assumed_constant: f64,
}

impl QuasiFunctional {
    pub fn ribe() -> Self {
        Self {
            kind: FunctionalKind::Ribe,
            assumed_constant: DEFAULT_RIBE_CONSTANT,
        }
    }

    pub fn ribe_with_constant(constant: f64) -> Result<Self> {
        Self::with_constant(FunctionalKind::Ribe, constant)
    }

    /// Weighted Ribe functional; the assumed constant is `||c||_q`.
    pub fn weighted_ribe(weights: FinSeq, p: Rational) -> Result<Self> {
        let constant = dual_weight_norm(&weights, &p)?;
        Self::with_constant(FunctionalKind::WeightedRibe { weights, p }, constant)
    }

    pub fn user_linear(values: FinSeq) -> Self {
        Self {
            kind: FunctionalKind::UserLinear { values },
            assumed_constant: 1.0,
        }
    }

    /// `factor * inner`, with the constant scaled alike.
    pub fn scaled(inner: QuasiFunctional, factor: Rational) -> Result<Self> {
        if !factor.is_positive() {
            return Err(Error::InvalidParameter("scale factor must be positive".into()));
        }
        let constant = inner.assumed_constant * to_f64(&factor);
        Self::with_constant(
            FunctionalKind::Scaled {
                inner: Box::new(inner),
                factor,
            },
            constant,
        )
    }

    pub fn with_constant(kind: FunctionalKind, constant: f64) -> Result<Self> {
        if !(constant.is_finite() && constant > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "assumed constant must be positive, got {constant}"
            )));
        }
        if let FunctionalKind::WeightedRibe { p, .. } = &kind {
            check_exponent(p)?;
        }
        Ok(Self {
            kind,
            assumed_constant: constant,
        })
    }

    pub fn kind(&self) -> &FunctionalKind {
        &self.kind
    }

    pub fn assumed_constant(&self) -> f64 {
        self.assumed_constant
    }

    pub fn space(&self) -> Space {
        match &self.kind {
            FunctionalKind::Ribe | FunctionalKind::UserLinear { .. } => Space::L1,
            FunctionalKind::WeightedRibe { p, .. } => Space::Mixed { p: p.clone() },
            FunctionalKind::Scaled { inner, .. } => inner.space(),
        }
    }

    /// True for the Ribe function up to a positive factor.
    pub fn ribe_factor(&self) -> Option<Rational> {
        match &self.kind {
            FunctionalKind::Ribe => Some(rational::int(1)),
            FunctionalKind::Scaled { inner, factor } => inner.ribe_factor().map(|f| f * factor),
            _ => None,
        }
    }

    pub fn norm(&self, x: &Element) -> Result<f64> {
        self.space().norm(x)
    }

    pub fn eval(&self, x: &Element) -> Result<f64> {
        match (&self.kind, x) {
            (FunctionalKind::Ribe, Element::Seq(s)) => Ok(ribe_eval(s)),
            (FunctionalKind::UserLinear { values }, Element::Seq(s)) => {
                let v: Rational = s
                    .iter()
                    .filter_map(|(i, q)| values.get(i).map(|c| c * q))
                    .sum();
                Ok(to_f64(&v))
            }
            (FunctionalKind::WeightedRibe { weights, p }, Element::Mixed(m)) => {
                weighted_ribe_eval(m, weights, p)
            }
            (FunctionalKind::WeightedRibe { .. }, Element::Seq(s)) if s.is_zero() => Ok(0.0),
            (FunctionalKind::Scaled { inner, factor }, x) => {
                Ok(to_f64(factor) * inner.eval(x)?)
            }
            (FunctionalKind::WeightedRibe { .. }, _) => Err(Error::SpaceMismatch {
                expected: "mixed-block",
            }),
            _ => Err(Error::SpaceMismatch { expected: "l1" }),
        }
    }

    pub fn eval_seq(&self, x: &FinSeq) -> Result<f64> {
        match &self.kind {
            FunctionalKind::Ribe => Ok(ribe_eval(x)),
            FunctionalKind::Scaled { inner, factor } => Ok(to_f64(factor) * inner.eval_seq(x)?),
            _ => self.eval(&Element::Seq(x.clone())),
        }
    }
}

/// Wire form: `{"kind": "ribe" | "weighted_ribe" | "user_linear" | "scaled", ...}`.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Descriptor {
    Ribe {
        #[serde(default)]
        assumed_constant: Option<f64>,
    },
    WeightedRibe {
        weights: FinSeq,
        #[serde(with = "rational")]
        p: Rational,
        #[serde(default)]
        assumed_constant: Option<f64>,
    },
    UserLinear {
        values: FinSeq,
        #[serde(default)]
        assumed_constant: Option<f64>,
    },
    Scaled {
        inner: Box<QuasiFunctional>,
        #[serde(with = "rational")]
        factor: Rational,
        #[serde(default)]
        assumed_constant: Option<f64>,
    },
}

impl TryFrom<Descriptor> for QuasiFunctional {
    type Error = Error;

    fn try_from(d: Descriptor) -> Result<Self> {
        let (base, given) = match d {
            Descriptor::Ribe { assumed_constant } => (QuasiFunctional::ribe(), assumed_constant),
            Descriptor::WeightedRibe {
                weights,
                p,
                assumed_constant,
            } => (QuasiFunctional::weighted_ribe(weights, p)?, assumed_constant),
            Descriptor::UserLinear {
                values,
                assumed_constant,
            } => (QuasiFunctional::user_linear(values), assumed_constant),
            Descriptor::Scaled {
                inner,
                factor,
                assumed_constant,
            } => (QuasiFunctional::scaled(*inner, factor)?, assumed_constant),
        };
        match given {
            Some(c) => QuasiFunctional::with_constant(base.kind, c),
            None => Ok(base),
        }
    }
}

impl From<QuasiFunctional> for Descriptor {
    fn from(f: QuasiFunctional) -> Self {
        let assumed_constant = Some(f.assumed_constant);
        match f.kind {
            FunctionalKind::Ribe => Descriptor::Ribe { assumed_constant },
            FunctionalKind::WeightedRibe { weights, p } => Descriptor::WeightedRibe {
                weights,
                p,
                assumed_constant,
            },
            FunctionalKind::UserLinear { values } => Descriptor::UserLinear {
                values,
                assumed_constant,
            },
            FunctionalKind::Scaled { inner, factor } => Descriptor::Scaled {
                inner,
                factor,
                assumed_constant,
            },
        }
    }
}

/// `|F(x+y) - F(x) - F(y)| / (||x|| + ||y||)`. Symmetric in `x`, `y`
/// bit-for-bit.
pub fn quasi_defect(f: &QuasiFunctional, x: &Element, y: &Element) -> Result<f64> {
    let space = f.space();
    let denom = match (x, y) {
        (Element::Seq(a), Element::Seq(b)) if space == Space::L1 => {
            to_f64(&(a.norm_l1() + b.norm_l1()))
        }
        _ => space.norm(x)? + space.norm(y)?,
    };
    if denom == 0.0 {
        return Err(Error::ZeroArguments);
    }
    let fxy = f.eval(&x.add(y)?)?;
    let (fx, fy) = (f.eval(x)?, f.eval(y)?);
    Ok((fxy - (fx + fy)).abs() / denom)
}

/// `|F(rx) - rF(x)|`.
pub fn homogeneity_residual(f: &QuasiFunctional, x: &Element, r: &Rational) -> Result<f64> {
    let lhs = f.eval(&x.scale(r))?;
    let rhs = to_f64(r) * f.eval(x)?;
    Ok((lhs - rhs).abs())
}

/// `Scaled(F, 1/C)` with constant exactly 1.
pub fn normalize_constant(f: &QuasiFunctional) -> Result<QuasiFunctional> {
    let c = f.assumed_constant();
    let factor = rational::from_f64(1.0 / c)
        .filter(|q| q.is_positive())
        .ok_or_else(|| Error::InvalidParameter(format!("cannot normalize constant {c}")))?;
    QuasiFunctional::with_constant(
        FunctionalKind::Scaled {
            inner: Box::new(f.clone()),
            factor,
        },
        1.0,
    )
}

/// Outcome of `|F(sum u_i)| <= sum |F(u_i)| + sum i ||u_i||`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IteratedBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks the iterated quasi-additivity bound for a normalized functional
/// (constant 1). Telescoping from the last term gives coefficient
/// `min(i, N-1) <= i` on `||u_i||`.
pub fn iterated_defect_check(f: &QuasiFunctional, us: &[FinSeq]) -> Result<IteratedBound> {
    let total: FinSeq = us.iter().sum();
    let lhs = f.eval_seq(&total)?.abs();
    let mut rhs = 0.0;
    for (i, u) in us.iter().enumerate() {
        rhs += f.eval_seq(u)?.abs() + (i + 1) as f64 * to_f64(&u.norm_l1());
    }
    let holds = lhs <= rhs + 1e-12 * (1.0 + rhs);
    Ok(IteratedBound { lhs, rhs, holds })
}

/// The vector `(1/n) sum_i e_{i,n}` and the value `-c_n ln n` the weighted
/// Ribe functional takes on it.
pub fn nonsplit_witness(n: usize, c_n: &Rational) -> Result<(MixedSeq, f64)> {
    if n == 0 {
        return Err(Error::InvalidParameter("block index starts at 1".into()));
    }
    let coords = vec![rational::ratio(1, n as i64); n];
    let x = MixedSeq::from_blocks([(n, coords)])?;
    Ok((x, -to_f64(c_n) * (n as f64).ln()))
}

/// A linear map `T` on the span of a linearly independent family, given by its
/// values there, with the constant `C` of `|T(x) - F(x)| <= C ||x||`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "SplitMapRepr", into = "SplitMapRepr")]
pub struct SplitMap {
    basis: Vec<FinSeq>,
    values: Vec<f64>,
    defect_bound: f64,
    echelon: Echelon,
}

#[derive(Serialize, Deserialize)]
struct SplitMapRepr {
    basis: Vec<FinSeq>,
    values: Vec<f64>,
    defect_bound: f64,
}

impl TryFrom<SplitMapRepr> for SplitMap {
    type Error = Error;
    fn try_from(r: SplitMapRepr) -> Result<Self> {
        SplitMap::new(r.basis, r.values, r.defect_bound)
    }
}

impl From<SplitMap> for SplitMapRepr {
    fn from(s: SplitMap) -> Self {
        SplitMapRepr {
            basis: s.basis,
            values: s.values,
            defect_bound: s.defect_bound,
        }
    }
}

impl PartialEq for SplitMap {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis
            && self.values == other.values
            && self.defect_bound == other.defect_bound
    }
}

impl SplitMap {
    pub fn new(basis: Vec<FinSeq>, values: Vec<f64>, defect_bound: f64) -> Result<Self> {
        if basis.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} basis vectors but {} values",
                basis.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) || !(defect_bound >= 0.0) {
            return Err(Error::InvalidParameter("values must be finite".into()));
        }
        let mut echelon = Echelon::new();
        for b in &basis {
            if !echelon.insert(b) {
                return Err(Error::Dependent);
            }
        }
        Ok(Self {
            basis,
            values,
            defect_bound,
            echelon,
        })
    }

    pub fn basis(&self) -> &[FinSeq] {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn defect_bound(&self) -> f64 {
        self.defect_bound
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// The value of `T` at `x` as an exact rational: the stored doubles are
    /// read as the rationals they represent and extended linearly.
    pub fn eval_exact(&self, x: &FinSeq) -> Result<Rational> {
        let coeffs = self.echelon.express(x).ok_or(Error::OutsideSpan)?;
        Ok(coeffs
            .iter()
            .zip(&self.values)
            .map(|(a, v)| a * rational::from_f64(*v).expect("values are finite"))
            .sum())
    }

    pub fn eval(&self, x: &FinSeq) -> Result<f64> {
        Ok(to_f64(&self.eval_exact(x)?))
    }

    /// `factor * T`, matching a functional scaled by the same factor.
    pub fn scaled(&self, factor: &Rational) -> Self {
        let f = to_f64(factor);
        Self {
            basis: self.basis.clone(),
            values: self.values.iter().map(|v| v * f).collect(),
            defect_bound: self.defect_bound * f,
            echelon: self.echelon.clone(),
        }
    }
}

/// The map `T(x_i) = F0(x_i)` for mean-zero vectors with strictly increasing
/// supports, on whose span the Ribe function is exactly linear.
pub fn split_map_from_ribe(xs: &[FinSeq]) -> Result<SplitMap> {
    for (i, x) in xs.iter().enumerate() {
        if x.is_zero() {
            return Err(Error::ZeroVector(i + 1));
        }
        if !x.in_hyperplane_h() {
            return Err(Error::NotMeanZero(i + 1));
        }
    }
    for (i, w) in xs.windows(2).enumerate() {
        if w[0].max_index() >= w[1].min_index() {
            return Err(Error::SupportOrder(i + 1, i + 2));
        }
    }
    let values = xs.iter().map(ribe_eval).collect();
    SplitMap::new(xs.to_vec(), values, 0.0)
}

/// Replaces consecutive pairs `(x_{2i-1}, x_{2i})` by `x_{2i-1} + a_i x_{2i}`
/// with `T` vanishing exactly; `a_i = 0` when `T(x_{2i-1}) = 0`. A trailing
/// unpaired vector is dropped.
pub fn kernel_normalize(t: &SplitMap, xs: &[FinSeq]) -> Result<Vec<FinSeq>> {
    let mut out = Vec::with_capacity(xs.len() / 2);
    for (i, pair) in xs.chunks_exact(2).enumerate() {
        let t1 = t.eval_exact(&pair[0])?;
        if t1.is_zero() {
            out.push(pair[0].clone());
            continue;
        }
        let t2 = t.eval_exact(&pair[1])?;
        if t2.is_zero() {
            return Err(Error::KernelUnsolvable(i + 1));
        }
        let alpha = -(t1 / t2);
        let mut x = pair[0].clone();
        x.add_scaled(&alpha, &pair[1]);
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn seq(json: &str) -> FinSeq {
        FinSeq::from_json(json).unwrap()
    }

    #[test]
    fn ribe_examples() {
        assert_eq!(ribe_eval(&FinSeq::unit(1)), 0.0);
        assert_eq!(ribe_eval(&FinSeq::zero()), 0.0);
        let half = seq(r#"{"1":"1/2","2":"1/2"}"#);
        assert!((ribe_eval(&half) + 2f64.ln()).abs() < 1e-15);
        let x = FinSeq::from_ints(&[(1, 2), (2, -1)]);
        assert!((ribe_eval(&x) - 2.0 * 2f64.ln()).abs() < 1e-14);
        assert!(ribe_eval(&FinSeq::from_ints(&[(1, 1), (2, -1)])).abs() < 1e-15);
    }

    #[test]
    fn weighted_ribe_examples() {
        let weights = FinSeq::from_pairs((1..=8).map(|n| (n, ratio(1, n as i64))));
        let p = int(2);
        for n in 1..=8usize {
            let (x, expect) = nonsplit_witness(n, &ratio(1, n as i64)).unwrap();
            let got = weighted_ribe_eval(&x, &weights, &p).unwrap();
            assert!((got - expect).abs() < 1e-12, "n = {n}");
            let e = MixedSeq::unit(1, n).unwrap();
            assert_eq!(weighted_ribe_eval(&e, &weights, &p).unwrap(), 0.0);
        }
        assert_eq!(weighted_ribe_eval(&MixedSeq::zero(), &weights, &p).unwrap(), 0.0);
        let far = MixedSeq::unit(1, 9).unwrap();
        assert!(matches!(
            weighted_ribe_eval(&far, &weights, &p),
            Err(Error::MissingWeight(9))
        ));
    }

    #[test]
    fn nonsplit_examples() {
        assert_eq!(nonsplit_witness(1, &int(1)).unwrap().1, 0.0);
        assert!((nonsplit_witness(2, &int(1)).unwrap().1 + 2f64.ln()).abs() < 1e-15);
        let c8 = rational::from_f64(1.0 / 8f64.ln()).unwrap();
        assert!((nonsplit_witness(8, &c8).unwrap().1 + 1.0).abs() < 1e-12);
    }

    #[test]
    fn defect_examples() {
        let f = QuasiFunctional::ribe();
        let x: Element = FinSeq::from_ints(&[(1, 1), (2, -1)]).into();
        let y: Element = FinSeq::from_ints(&[(3, 2), (4, -2)]).into();
        assert!(quasi_defect(&f, &x, &y).unwrap() < 1e-12);
        assert!(quasi_defect(&f, &x, &x).unwrap() < 1e-12);

        // x = e1, y = e1 - 2e2: F0(x) = 0, F0(y) = -2 ln 2, F0(x+y) = 0.
        // Defect = |0 - 0 + 2 ln 2| / (1 + 3).
        let x: Element = FinSeq::unit(1).into();
        let y: Element = FinSeq::from_ints(&[(1, 1), (2, -2)]).into();
        let expect = 2.0 * 2f64.ln() / 4.0;
        assert!((quasi_defect(&f, &x, &y).unwrap() - expect).abs() < 1e-15);

        let zero: Element = FinSeq::zero().into();
        assert!(matches!(quasi_defect(&f, &zero, &zero), Err(Error::ZeroArguments)));
    }

    #[test]
    fn homogeneity_examples() {
        let f = QuasiFunctional::ribe();
        let x: Element = FinSeq::from_ints(&[(1, 2), (2, -1)]).into();
        let fx = f.eval(&x).unwrap();
        let res = homogeneity_residual(&f, &x, &int(-3)).unwrap();
        assert!(res <= 1e-12 * (1.0 + 3.0 * fx.abs()));
        assert_eq!(f.eval(&x.scale(&int(0))).unwrap(), 0.0);
        assert_eq!(homogeneity_residual(&f, &x, &int(1)).unwrap(), 0.0);
    }

    #[test]
    fn split_map_examples() {
        let xs = vec![
            FinSeq::from_ints(&[(1, 1), (2, -1)]),
            FinSeq::from_ints(&[(3, 1), (4, -1)]),
        ];
        let t = split_map_from_ribe(&xs).unwrap();
        assert_eq!(t.defect_bound(), 0.0);
        assert!(t.values().iter().all(|v| v.abs() < 1e-15));
        assert!(matches!(
            split_map_from_ribe(&[FinSeq::unit(1)]),
            Err(Error::NotMeanZero(1))
        ));
        let overlapping = vec![
            FinSeq::from_ints(&[(1, 1), (3, -1)]),
            FinSeq::from_ints(&[(2, 1), (4, -1)]),
        ];
        assert!(matches!(
            split_map_from_ribe(&overlapping),
            Err(Error::SupportOrder(1, 2))
        ));
        assert!(split_map_from_ribe(&[]).unwrap().is_empty());
    }

    #[test]
    fn kernel_normalize_examples() {
        let xs = vec![FinSeq::unit(1), FinSeq::unit(2), FinSeq::unit(3), FinSeq::unit(4)];
        let t = SplitMap::new(xs.clone(), vec![2.0, 1.0, 0.0, 5.0], 0.0).unwrap();
        let out = kernel_normalize(&t, &xs).unwrap();
        assert_eq!(out[0], FinSeq::from_ints(&[(1, 1), (2, -2)]));
        assert_eq!(out[1], FinSeq::unit(3));
        for x in &out {
            assert!(t.eval_exact(x).unwrap().is_zero());
        }
        let bad = SplitMap::new(xs[..2].to_vec(), vec![1.0, 0.0], 0.0).unwrap();
        assert!(matches!(
            kernel_normalize(&bad, &xs[..2]),
            Err(Error::KernelUnsolvable(1))
        ));
    }

    #[test]
    fn normalization_examples() {
        let f = QuasiFunctional::ribe_with_constant(2.0).unwrap();
        let g = normalize_constant(&f).unwrap();
        assert_eq!(g.assumed_constant(), 1.0);
        match g.kind() {
            FunctionalKind::Scaled { factor, .. } => assert_eq!(*factor, ratio(1, 2)),
            other => panic!("{other:?}"),
        }
        let one = QuasiFunctional::ribe_with_constant(1.0).unwrap();
        let g = normalize_constant(&one).unwrap();
        let x = FinSeq::from_ints(&[(1, 3), (2, -1)]);
        assert_eq!(g.eval_seq(&x).unwrap(), one.eval_seq(&x).unwrap());

        let weights = FinSeq::from_pairs([(1, int(1)), (2, int(1))]);
        let w = QuasiFunctional::weighted_ribe(weights, int(2)).unwrap();
        let g = normalize_constant(&w).unwrap();
        match g.kind() {
            FunctionalKind::Scaled { factor, .. } => {
                assert!((to_f64(factor) - 1.0 / 2f64.sqrt()).abs() < 1e-15)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn iterated_bound_examples() {
        let f = normalize_constant(&QuasiFunctional::ribe()).unwrap();
        let u = FinSeq::from_ints(&[(1, 3), (2, -1)]);
        let single = iterated_defect_check(&f, std::slice::from_ref(&u)).unwrap();
        assert!(single.holds);
        assert!((single.rhs - single.lhs - 4.0).abs() < 1e-12);

        let us: Vec<FinSeq> = (0..4)
            .map(|k| FinSeq::from_ints(&[(2 * k + 1, 1), (2 * k + 2, -1)]))
            .collect();
        let b = iterated_defect_check(&f, &us).unwrap();
        assert!(b.holds && b.lhs < 1e-12 && b.rhs > 1.0);
    }

    #[test]
    fn descriptor_json_round_trip() {
        let text = r#"{"kind":"scaled","factor":"1/4","inner":{"kind":"ribe"}}"#;
        let f: QuasiFunctional = serde_json::from_str(text).unwrap();
        assert_eq!(f.assumed_constant(), 1.0);
        assert_eq!(f.ribe_factor(), Some(ratio(1, 4)));
        let back: QuasiFunctional = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        assert_eq!(back, f);

        let w: QuasiFunctional = serde_json::from_str(
            r#"{"kind":"weighted_ribe","weights":{"1":"1","2":"1/2"},"p":"2"}"#,
        )
        .unwrap();
        assert!((w.assumed_constant() - 1.25f64.sqrt()).abs() < 1e-15);
        assert!(serde_json::from_str::<QuasiFunctional>(
            r#"{"kind":"weighted_ribe","weights":{},"p":"1"}"#
        )
        .is_err());
        assert!(serde_json::from_str::<QuasiFunctional>(r#"{"kind":"ribe","assumed_constant":-1}"#).is_err());
    }

    #[test]
    fn split_map_json_rejects_dependent_basis() {
        let text = r#"{"basis":[{"1":"1"},{"1":"2"}],"values":[0.0,0.0],"defect_bound":0.0}"#;
        assert!(serde_json::from_str::<SplitMap>(text).is_err());
    }
}
