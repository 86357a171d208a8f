//! One-shot evaluation of a JSON expression.

use anyhow::{bail, Result};
use serde::Deserialize;
use twistlab::quasilinear::{self, QuasiFunctional};
use twistlab::rational::{self, Rational};
use twistlab::seqspace::{james_norm, Element, FinSeq, MixedSeq};
use twistlab::twisted::{quasi_norm, TwistedVec};

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Expr {
    Ribe(FinSeq),
    NormL1(FinSeq),
    JamesNorm(FinSeq),
    WeightedRibe {
        x: MixedSeq,
        weights: FinSeq,
        #[serde(with = "rational")]
        p: Rational,
    },
    QuasiNorm {
        #[serde(default = "default_functional")]
        functional: QuasiFunctional,
        r: f64,
        x: Element,
    },
    Nonsplit {
        n: usize,
        #[serde(with = "rational")]
        c: Rational,
    },
    Functional {
        functional: QuasiFunctional,
        x: Element,
    },
    Defect {
        functional: QuasiFunctional,
        x: Element,
        y: Element,
    },
}

fn default_functional() -> QuasiFunctional {
    QuasiFunctional::ribe()
}

pub fn evaluate(expr: &Expr) -> Result<f64> {
    Ok(match expr {
        Expr::Ribe(x) => quasilinear::ribe_eval(x),
        Expr::NormL1(x) => rational::to_f64(&x.norm_l1()),
        Expr::JamesNorm(x) => james_norm(x),
        Expr::WeightedRibe { x, weights, p } => quasilinear::weighted_ribe_eval(x, weights, p)?,
        Expr::QuasiNorm { functional, r, x } => {
            quasi_norm(functional, &TwistedVec { r: *r, x: x.clone() })?
        }
        Expr::Nonsplit { n, c } => {
            let (v, expected) = quasilinear::nonsplit_witness(*n, c)?;
            let got = quasilinear::weighted_ribe_eval(&v, &FinSeq::from_pairs([(*n, c.clone())]), &rational::int(2))?;
            if (got - expected).abs() > 1e-12 {
                bail!("witness evaluates to {got}, expected {expected}");
            }
            expected
        }
        Expr::Functional { functional, x } => functional.eval(x)?,
        Expr::Defect { functional, x, y } => quasilinear::quasi_defect(functional, x, y)?,
    })
}

/// Fifteen significant digits, trailing zeros dropped.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-5..15).contains(&mag) {
        return format!("{v:.14e}");
    }
    let decimals = (14 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> f64 {
        evaluate(&serde_json::from_str(text).unwrap()).unwrap()
    }

    #[test]
    fn formats_fifteen_digits() {
        assert_eq!(format_value(-(2f64.ln())), "-0.693147180559945");
        assert_eq!(format_value(1.0), "1");
        assert_eq!(format_value(-(8f64.ln())), "-2.07944154167984");
        assert_eq!(format_value(0.0), "0");
    }

    #[test]
    fn expressions() {
        assert!((run(r#"{"ribe":{"1":"1/2","2":"1/2"}}"#) + 2f64.ln()).abs() < 1e-15);
        assert_eq!(run(r#"{"quasi_norm":{"r":0,"x":{"1":"1"}}}"#), 1.0);
        assert!((run(r#"{"nonsplit":{"n":8,"c":"1"}}"#) + 8f64.ln()).abs() < 1e-15);
        assert_eq!(run(r#"{"norm_l1":{"1":"-3/2","4":"1/2"}}"#), 2.0);
        assert_eq!(run(r#"{"james_norm":{"1":"1","2":"1"}}"#), 1.0);
        let w = run(r#"{"weighted_ribe":{"x":{"2":["1/2","1/2"]},"weights":{"2":"1"},"p":"2"}}"#);
        assert!((w + 2f64.ln()).abs() < 1e-15);
        assert!(serde_json::from_str::<Expr>(r#"{"unknown":{}}"#).is_err());
    }
}
