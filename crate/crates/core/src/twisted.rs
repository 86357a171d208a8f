//! The twisted sum `X_F = R x E` with quasi-norm `|r - F(x)| + ||x||`.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::quasilinear::QuasiFunctional;
use crate::rational::{self, to_f64, Rational};
use crate::seqspace::{Element, FinSeq, Space};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwistedVec {
    pub r: f64,
    pub x: Element,
}

impl TwistedVec {
    pub fn new(r: f64, x: impl Into<Element>) -> Self {
        Self { r, x: x.into() }
    }

    pub fn zero() -> Self {
        Self::new(0.0, FinSeq::zero())
    }

    /// The graph point `(F(x), x)`.
    pub fn on_graph(f: &QuasiFunctional, x: impl Into<Element>) -> Result<Self> {
        let x = x.into();
        Ok(Self { r: f.eval(&x)?, x })
    }

    pub fn add(&self, other: &TwistedVec) -> Result<TwistedVec> {
        Ok(TwistedVec {
            r: self.r + other.r,
            x: self.x.add(&other.x)?,
        })
    }

    pub fn scale(&self, s: &Rational) -> TwistedVec {
        TwistedVec {
            r: to_f64(s) * self.r,
            x: self.x.scale(s),
        }
    }
}

pub fn quasi_norm(f: &QuasiFunctional, w: &TwistedVec) -> Result<f64> {
    Ok((w.r - f.eval(&w.x)?).abs() + f.norm(&w.x)?)
}

/// `|||w1 + w2||| / (|||w1||| + |||w2|||)`, at most `C + 1`.
pub fn quasi_triangle_ratio(f: &QuasiFunctional, w1: &TwistedVec, w2: &TwistedVec) -> Result<f64> {
    let denom = quasi_norm(f, w1)? + quasi_norm(f, w2)?;
    if denom == 0.0 {
        return Err(Error::ZeroArguments);
    }
    Ok(quasi_norm(f, &w1.add(w2)?)? / denom)
}

/// The quotient map onto `E`.
pub fn quotient(w: &TwistedVec) -> &Element {
    &w.x
}

/// `{(r, x) : ||x|| < eps}`; membership ignores `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct NearlyConvexBall {
    eps: f64,
    space: Space,
}

impl NearlyConvexBall {
    pub fn new(eps: f64, space: Space) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {eps}")));
        }
        Ok(Self { eps, space })
    }

    pub fn contains(&self, w: &TwistedVec) -> Result<bool> {
        match (&self.space, &w.x) {
            (Space::L1, Element::Seq(x)) => {
                let eps = rational::from_f64(self.eps).unwrap_or_else(Rational::zero);
                Ok(x.norm_l1() < eps || self.eps.is_infinite())
            }
            _ => Ok(self.space.norm(&w.x)? < self.eps),
        }
    }
}

pub fn nearly_convex_ball(eps: f64, space: Space) -> Result<NearlyConvexBall> {
    NearlyConvexBall::new(eps, space)
}

/// Radius of the quasi-norm ball `U_n`, `4^(1-n)`. With constant 1 the
/// quasi-triangle constant is 2, so `U_{n+1} + U_{n+1}` lands in `U_n`.
pub fn u_radius(n: usize) -> Rational {
    rational::pow2(2 - 2 * n as i64)
}

/// Membership `|||w||| < 4^(1-n)` for a normalized functional.
pub fn in_u(f: &QuasiFunctional, n: usize, w: &TwistedVec) -> Result<bool> {
    Ok(quasi_norm(f, w)? < to_f64(&u_radius(n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quasilinear::normalize_constant;
    use crate::rational::{int, ratio};

    #[test]
    fn quasi_norm_examples() {
        let f = QuasiFunctional::ribe();
        let x = FinSeq::from_ints(&[(1, 3), (2, -1), (5, 2)]);
        let w = TwistedVec::on_graph(&f, x.clone()).unwrap();
        assert_eq!(quasi_norm(&f, &w).unwrap(), 6.0);
        assert_eq!(quasi_norm(&f, &TwistedVec::zero()).unwrap(), 0.0);
        assert_eq!(quasi_norm(&f, &TwistedVec::new(5.0, FinSeq::zero())).unwrap(), 5.0);
        let half = FinSeq::from_pairs([(1, ratio(1, 2)), (2, ratio(1, 2))]);
        let v = quasi_norm(&f, &TwistedVec::new(0.0, half)).unwrap();
        assert!((v - (1.0 + 2f64.ln())).abs() < 1e-15);
    }

    #[test]
    fn triangle_examples() {
        let f = normalize_constant(&QuasiFunctional::ribe()).unwrap();
        let w = TwistedVec::new(0.3, FinSeq::from_ints(&[(1, 2), (3, -1)]));
        assert!(quasi_triangle_ratio(&f, &w, &TwistedVec::zero()).unwrap() <= 1.0);
        assert!((quasi_triangle_ratio(&f, &w, &w).unwrap() - 1.0).abs() < 1e-12);
        let z = TwistedVec::zero();
        assert!(matches!(quasi_triangle_ratio(&f, &z, &z), Err(Error::ZeroArguments)));
    }

    #[test]
    fn quotient_examples() {
        let f = QuasiFunctional::ribe();
        let x = FinSeq::from_ints(&[(2, 1), (4, -3)]);
        let w = TwistedVec::on_graph(&f, x.clone()).unwrap();
        assert_eq!(quotient(&w), &Element::Seq(x.clone()));
        assert_eq!(f.norm(quotient(&w)).unwrap(), quasi_norm(&f, &w).unwrap());
        assert!(quotient(&TwistedVec::new(1.0, FinSeq::zero())).is_zero());
    }

    #[test]
    fn ball_examples() {
        let ball = NearlyConvexBall::new(1.0, Space::L1).unwrap();
        assert!(ball.contains(&TwistedVec::new(1e6, FinSeq::zero())).unwrap());
        assert!(!ball.contains(&TwistedVec::new(0.0, FinSeq::unit(1))).unwrap());
        let x = FinSeq::from_pairs([(1, ratio(1, 3))]);
        for r in [-5.0, 0.0, 1e9] {
            assert!(ball.contains(&TwistedVec::new(r, x.clone())).unwrap());
        }
        assert!(NearlyConvexBall::new(0.0, Space::L1).is_err());
        assert!(NearlyConvexBall::new(-1.0, Space::L1).is_err());
    }

    #[test]
    fn u_radii_follow_quarter_rule() {
        assert_eq!(u_radius(1), int(1));
        assert_eq!(u_radius(3), ratio(1, 16));
        for n in 1..10 {
            assert_eq!(int(4) * u_radius(n + 1), u_radius(n));
        }
        let f = normalize_constant(&QuasiFunctional::ribe()).unwrap();
        assert!(!in_u(&f, 1, &TwistedVec::new(1.0, FinSeq::zero())).unwrap());
        assert!(in_u(&f, 1, &TwistedVec::new(0.999, FinSeq::zero())).unwrap());
    }

    #[test]
    fn json_shape() {
        let w: TwistedVec = serde_json::from_str(r#"{"r":1.5,"x":{"1":"1/2"}}"#).unwrap();
        assert_eq!(w.r, 1.5);
        assert_eq!(w.x, Element::Seq(FinSeq::from_pairs([(1, ratio(1, 2))])));
    }
}
