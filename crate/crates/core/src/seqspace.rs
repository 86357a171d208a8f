//! Finitely supported sequences with exact rational coefficients.
//!
//! [`FinSeq`] is an element of the space of finitely supported sequences
//! indexed from 1, normed by `l1`. [`MixedSeq`] is an element of the span of
//! the unit vectors of `l_p(l_1^n)`: block `n` carries exactly `n`
//! coordinates. The unit vector basis of `l1` is monotone, so initial-segment
//! projections ([`FinSeq::restrict`]) never increase the norm.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rational::{self, format_rational, parse_rational, to_f64, Rational};
use crate::{Error, Result};

/// A finitely supported sequence in canonical sparse form: no stored
/// coefficient is zero.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct FinSeq {
    entries: BTreeMap<usize, Rational>,
}

impl FinSeq {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The `index`-th unit vector.
    pub fn unit(index: usize) -> Self {
        Self::from_pairs([(index, rational::int(1))])
    }

    /// Builds a sequence from `(index, coefficient)` pairs. Repeated indices
    /// are summed; zero results are dropped.
    ///
    /// # Panics
    ///
    /// Panics on index 0.
    pub fn from_pairs<I: IntoIterator<Item = (usize, Rational)>>(pairs: I) -> Self {
        let mut out = Self::zero();
        for (i, q) in pairs {
            assert!(i >= 1, "sequence indices start at 1");
            out.add_at(i, &q);
        }
        out
    }

    /// Integer-coefficient shorthand, mostly for tests.
    pub fn from_ints(pairs: &[(usize, i64)]) -> Self {
        Self::from_pairs(pairs.iter().map(|&(i, v)| (i, rational::int(v))))
    }

    /// Parses the `{"index": "num/den", ...}` form.
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("sequence serialization cannot fail")
    }

    pub fn get(&self, index: usize) -> Option<&Rational> {
        self.entries.get(&index)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Rational)> + '_ {
        self.entries.iter().map(|(&i, q)| (i, q))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn min_index(&self) -> Option<usize> {
        self.entries.keys().next().copied()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    fn add_at(&mut self, index: usize, q: &Rational) {
        if q.is_zero() {
            return;
        }
        let slot = self.entries.entry(index).or_insert_with(Rational::zero);
        *slot += q;
        if slot.is_zero() {
            self.entries.remove(&index);
        }
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: &Rational, other: &FinSeq) {
        if a.is_zero() {
            return;
        }
        for (i, q) in other.iter() {
            self.add_at(i, &(a * q));
        }
    }

    pub fn scale(&self, a: &Rational) -> FinSeq {
        if a.is_zero() {
            return FinSeq::zero();
        }
        FinSeq {
            entries: self.entries.iter().map(|(&i, q)| (i, q * a)).collect(),
        }
    }

    /// `sum_i |x_i|`, exactly.
    pub fn norm_l1(&self) -> Rational {
        self.entries.values().map(|q| q.abs()).sum()
    }

    /// `sum_i x_i`, exactly.
    pub fn coordinate_sum(&self) -> Rational {
        self.entries.values().sum()
    }

    /// Keeps the coordinates whose index lies in the window.
    pub fn restrict(&self, window: BasisWindow) -> FinSeq {
        let hi = window.hi.unwrap_or(usize::MAX);
        FinSeq {
            entries: self
                .entries
                .range(window.lo..=hi)
                .map(|(&i, q)| (i, q.clone()))
                .collect(),
        }
    }

    /// True iff every support index exceeds `n`.
    pub fn is_right_of(&self, n: usize) -> bool {
        self.min_index().is_none_or(|i| i > n)
    }

    /// True iff the coordinate sum is exactly zero.
    pub fn in_hyperplane_h(&self) -> bool {
        self.coordinate_sum().is_zero()
    }

    pub fn disjoint_from(&self, other: &FinSeq) -> bool {
        let (small, large) = if self.support_len() <= other.support_len() {
            (self, other)
        } else {
            (other, self)
        };
        small.support().all(|i| !large.entries.contains_key(&i))
    }

    /// Coordinates as doubles, in index order.
    pub fn to_f64_pairs(&self) -> Vec<(usize, f64)> {
        self.iter().map(|(i, q)| (i, to_f64(q))).collect()
    }
}

pub fn norm_l1(x: &FinSeq) -> Rational {
    x.norm_l1()
}

pub fn restrict(x: &FinSeq, window: BasisWindow) -> FinSeq {
    x.restrict(window)
}

pub fn is_right_of(x: &FinSeq, n: usize) -> bool {
    x.is_right_of(n)
}

pub fn in_hyperplane_h(x: &FinSeq) -> bool {
    x.in_hyperplane_h()
}

pub fn disjoint_supports(x: &FinSeq, y: &FinSeq) -> bool {
    x.disjoint_from(y)
}

/// True iff the supports of `xs` are pairwise disjoint.
pub fn pairwise_disjoint(xs: &[FinSeq]) -> bool {
    let mut seen = BTreeSet::new();
    xs.iter().all(|x| x.support().all(|i| seen.insert(i)))
}

impl Add for &FinSeq {
    type Output = FinSeq;
    fn add(self, rhs: &FinSeq) -> FinSeq {
        let mut out = self.clone();
        for (i, q) in rhs.iter() {
            out.add_at(i, q);
        }
        out
    }
}

impl Sub for &FinSeq {
    type Output = FinSeq;
    fn sub(self, rhs: &FinSeq) -> FinSeq {
        let mut out = self.clone();
        for (i, q) in rhs.iter() {
            out.add_at(i, &-q);
        }
        out
    }
}

impl Neg for &FinSeq {
    type Output = FinSeq;
    fn neg(self) -> FinSeq {
        FinSeq {
            entries: self.entries.iter().map(|(&i, q)| (i, -q)).collect(),
        }
    }
}

impl<'a> std::iter::Sum<&'a FinSeq> for FinSeq {
    fn sum<I: Iterator<Item = &'a FinSeq>>(iter: I) -> FinSeq {
        let mut out = FinSeq::zero();
        for x in iter {
            for (i, q) in x.iter() {
                out.add_at(i, q);
            }
        }
        out
    }
}

impl fmt::Display for FinSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json())
    }
}

impl Serialize for FinSeq {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.entries.len()))?;
        for (i, q) in &self.entries {
            map.serialize_entry(&i.to_string(), &format_rational(q))?;
        }
        map.end()
    }
}

fn parse_index(text: &str) -> Result<usize> {
    match text.trim().parse::<usize>() {
        Ok(i) if i >= 1 => Ok(i),
        _ => Err(Error::BadIndex(text.to_string())),
    }
}

impl<'de> Deserialize<'de> for FinSeq {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = BTreeMap::<String, String>::deserialize(d)?;
        let mut out = FinSeq::zero();
        for (k, v) in raw {
            let i = parse_index(&k).map_err(D::Error::custom)?;
            let q = parse_rational(&v).map_err(D::Error::custom)?;
            out.add_at(i, &q);
        }
        Ok(out)
    }
}

/// A coordinate window `[lo, hi]`; `hi = None` means unbounded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisWindow {
    lo: usize,
    hi: Option<usize>,
}

impl BasisWindow {
    pub fn new(lo: usize, hi: Option<usize>) -> Result<Self> {
        if matches!(hi, Some(h) if h < lo) {
            return Err(Error::InvalidParameter(format!(
                "window [{lo}, {hi:?}] is empty"
            )));
        }
        Ok(Self { lo, hi })
    }

    /// `[1, n]`.
    pub fn head(n: usize) -> Self {
        Self { lo: 1, hi: Some(n) }
    }

    /// `(n, oo)`.
    pub fn tail(n: usize) -> Self {
        Self {
            lo: n + 1,
            hi: None,
        }
    }

    pub fn all() -> Self {
        Self { lo: 1, hi: None }
    }
}

/// An element of the span of the unit vectors of `l_p(l_1^n)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MixedSeq {
    blocks: BTreeMap<usize, Vec<Rational>>,
}

impl MixedSeq {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds from `(n, coordinates)` blocks. Zero blocks are dropped.
    pub fn from_blocks<I: IntoIterator<Item = (usize, Vec<Rational>)>>(blocks: I) -> Result<Self> {
        let mut out = Self::zero();
        for (n, coords) in blocks {
            if n == 0 {
                return Err(Error::BadIndex("0".into()));
            }
            if coords.len() != n {
                return Err(Error::BlockLength {
                    block: n,
                    len: coords.len(),
                });
            }
            out.accumulate(n, &coords, &rational::int(1));
        }
        Ok(out)
    }

    /// The unit vector `e_{i,n}` (coordinate `i` of block `n`, both from 1).
    pub fn unit(i: usize, n: usize) -> Result<Self> {
        if i == 0 || i > n {
            return Err(Error::InvalidParameter(format!(
                "coordinate {i} outside block {n}"
            )));
        }
        let mut coords = vec![Rational::zero(); n];
        coords[i - 1] = rational::int(1);
        Self::from_blocks([(n, coords)])
    }

    fn accumulate(&mut self, n: usize, coords: &[Rational], a: &Rational) {
        let slot = self
            .blocks
            .entry(n)
            .or_insert_with(|| vec![Rational::zero(); n]);
        for (s, c) in slot.iter_mut().zip(coords) {
            *s += c * a;
        }
        if slot.iter().all(Zero::is_zero) {
            self.blocks.remove(&n);
        }
    }

    pub fn blocks(&self) -> impl Iterator<Item = (usize, &[Rational])> + '_ {
        self.blocks.iter().map(|(&n, v)| (n, v.as_slice()))
    }

    pub fn block(&self, n: usize) -> Option<&[Rational]> {
        self.blocks.get(&n).map(Vec::as_slice)
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn add_scaled(&mut self, a: &Rational, other: &MixedSeq) {
        if a.is_zero() {
            return;
        }
        for (n, coords) in other.blocks() {
            self.accumulate(n, coords, a);
        }
    }

    pub fn scale(&self, a: &Rational) -> MixedSeq {
        let mut out = MixedSeq::zero();
        out.add_scaled(a, self);
        out
    }

    /// Block `n` as a sparse sequence on indices `1..=n`.
    pub fn block_seq(&self, n: usize) -> FinSeq {
        match self.blocks.get(&n) {
            Some(coords) => FinSeq::from_pairs(
                coords
                    .iter()
                    .enumerate()
                    .map(|(i, q)| (i + 1, q.clone())),
            ),
            None => FinSeq::zero(),
        }
    }

    /// `||x_n||_1` for every nonzero block, exactly.
    pub fn block_norms(&self) -> Vec<(usize, Rational)> {
        self.blocks
            .iter()
            .map(|(&n, v)| (n, v.iter().map(|q| q.abs()).sum()))
            .collect()
    }

    /// `(sum_n ||x_n||_1^p)^(1/p)`; exact up to conversion when only one block
    /// is nonzero.
    pub fn norm_mixed(&self, p: &Rational) -> Result<f64> {
        check_exponent(p)?;
        let norms = self.block_norms();
        match norms.as_slice() {
            [] => Ok(0.0),
            [(_, single)] => Ok(to_f64(single)),
            _ => {
                let pf = to_f64(p);
                let total: f64 = norms.iter().map(|(_, q)| to_f64(q).powf(pf)).sum();
                Ok(total.powf(1.0 / pf))
            }
        }
    }
}

pub fn norm_mixed(x: &MixedSeq, p: &Rational) -> Result<f64> {
    x.norm_mixed(p)
}

pub(crate) fn check_exponent(p: &Rational) -> Result<()> {
    if *p <= rational::int(1) {
        return Err(Error::ExponentTooSmall(format_rational(p)));
    }
    Ok(())
}

impl Serialize for MixedSeq {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.blocks.len()))?;
        for (n, coords) in &self.blocks {
            let text: Vec<String> = coords.iter().map(format_rational).collect();
            map.serialize_entry(&n.to_string(), &text)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for MixedSeq {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = BTreeMap::<String, Vec<String>>::deserialize(d)?;
        let mut blocks = Vec::with_capacity(raw.len());
        for (k, v) in raw {
            let n = parse_index(&k).map_err(D::Error::custom)?;
            let coords = v
                .iter()
                .map(|t| parse_rational(t))
                .collect::<Result<Vec<_>>>()
                .map_err(D::Error::custom)?;
            blocks.push((n, coords));
        }
        MixedSeq::from_blocks(blocks).map_err(D::Error::custom)
    }
}

/// The James norm: the supremum over increasing index tuples
/// `p_1 < ... < p_{m+1}` of `(sum_k (x_{p_k} - x_{p_{k+1}})^2)^(1/2)`.
///
/// Only finitely many tuples matter: runs of zero coordinates collapse to a
/// single zero, so the candidates are the support, one zero index per gap
/// (including before the first support index) and one index past the end.
/// The maximum is found by dynamic programming over those candidates, with
/// exact squared sums.
pub fn james_norm(x: &FinSeq) -> f64 {
    let Some(last) = x.max_index() else {
        return 0.0;
    };
    let mut candidates: Vec<(usize, Rational)> = Vec::new();
    let mut prev = 0usize;
    for (i, q) in x.iter() {
        if i > prev + 1 {
            candidates.push((i - 1, Rational::zero()));
        }
        candidates.push((i, q.clone()));
        prev = i;
    }
    candidates.push((last + 1, Rational::zero()));

    // best[j]: largest squared sum of a tuple ending at candidate j.
    let mut best: Vec<Rational> = Vec::with_capacity(candidates.len());
    for j in 0..candidates.len() {
        let mut top = Rational::zero();
        for i in 0..j {
            let d = &candidates[i].1 - &candidates[j].1;
            let v = &best[i] + &d * &d;
            if v > top {
                top = v;
            }
        }
        best.push(top);
    }
    let sup = best.into_iter().max().unwrap_or_else(Rational::zero);
    to_f64(&sup).sqrt()
}

/// The ambient space of a functional, which fixes the norm.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum Space {
    /// Finitely supported sequences with the `l1` norm.
    L1,
    /// Span of the unit vectors of `l_p(l_1^n)`.
    Mixed {
        #[serde(with = "rational")]
        p: Rational,
    },
}

impl Space {
    pub fn norm(&self, x: &Element) -> Result<f64> {
        match (self, x) {
            (Space::L1, Element::Seq(s)) => Ok(to_f64(&s.norm_l1())),
            (Space::Mixed { p }, Element::Mixed(m)) => m.norm_mixed(p),
            (Space::L1, _) => Err(Error::SpaceMismatch { expected: "l1" }),
            (Space::Mixed { .. }, _) => Err(Error::SpaceMismatch {
                expected: "mixed-block",
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Space::L1 => "l1",
            Space::Mixed { .. } => "mixed-block",
        }
    }
}

/// An element of either sequence space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Element {
    Seq(FinSeq),
    Mixed(MixedSeq),
}

impl Element {
    pub fn is_zero(&self) -> bool {
        match self {
            Element::Seq(s) => s.is_zero(),
            Element::Mixed(m) => m.is_zero(),
        }
    }

    pub fn scale(&self, a: &Rational) -> Element {
        match self {
            Element::Seq(s) => Element::Seq(s.scale(a)),
            Element::Mixed(m) => Element::Mixed(m.scale(a)),
        }
    }

    /// Sum of two elements of the same space.
    pub fn add(&self, other: &Element) -> Result<Element> {
        match (self, other) {
            (Element::Seq(a), Element::Seq(b)) => Ok(Element::Seq(a + b)),
            (Element::Mixed(a), Element::Mixed(b)) => {
                let mut out = a.clone();
                out.add_scaled(&rational::int(1), b);
                Ok(Element::Mixed(out))
            }
            // An empty JSON object parses as a zero sequence; it is the zero
            // of either space.
            (Element::Seq(a), m @ Element::Mixed(_)) if a.is_zero() => Ok(m.clone()),
            (m @ Element::Mixed(_), Element::Seq(b)) if b.is_zero() => Ok(m.clone()),
            _ => Err(Error::SpaceMismatch {
                expected: "matching",
            }),
        }
    }
}

impl From<FinSeq> for Element {
    fn from(s: FinSeq) -> Self {
        Element::Seq(s)
    }
}

impl From<MixedSeq> for Element {
    fn from(m: MixedSeq) -> Self {
        Element::Mixed(m)
    }
}
