//! Exact rational elimination over sparse sequences.

use num_traits::Zero;

use crate::rational::{self, Rational};
use crate::seqspace::FinSeq;

/// Incrementally built reduced row-echelon form. Each row remembers which
/// combination of the inserted vectors produced it; combinations are stored
/// as sequences indexed by insertion order (from 1).
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    rows: Vec<Row>,
    inserted: usize,
}

#[derive(Clone, Debug)]
struct Row {
    pivot: usize,
    vector: FinSeq,
    combo: FinSeq,
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Reduces `v` against the current rows; returns the remainder and the
    /// combination of inserted vectors that was subtracted.
    fn reduce(&self, v: &FinSeq) -> (FinSeq, FinSeq) {
        let mut rem = v.clone();
        let mut used = FinSeq::zero();
        for row in &self.rows {
            if let Some(c) = rem.get(row.pivot).cloned() {
                let lead = row.vector.get(row.pivot).expect("pivot entry is nonzero");
                let f = &c / lead;
                rem.add_scaled(&-&f, &row.vector);
                used.add_scaled(&f, &row.combo);
            }
        }
        (rem, used)
    }

    /// Inserts `v`; returns false (and leaves the form unchanged apart from
    /// the insertion counter) when `v` depends on earlier vectors.
    pub fn insert(&mut self, v: &FinSeq) -> bool {
        self.inserted += 1;
        let (rem, used) = self.reduce(v);
        let Some(pivot) = rem.min_index() else {
            return false;
        };
        let mut combo = FinSeq::unit(self.inserted);
        combo.add_scaled(&rational::int(-1), &used);
        let lead = rem.get(pivot).cloned().expect("pivot entry is nonzero");
        for row in &mut self.rows {
            if let Some(c) = row.vector.get(pivot).cloned() {
                let f = &c / &lead;
                row.vector.add_scaled(&-&f, &rem);
                row.combo.add_scaled(&-&f, &combo);
            }
        }
        self.rows.push(Row {
            pivot,
            vector: rem,
            combo,
        });
        true
    }

    /// Coefficients `a` (one per inserted vector) with `sum a_i v_i = target`,
    /// if `target` lies in the span.
    pub fn express(&self, target: &FinSeq) -> Option<Vec<Rational>> {
        let (rem, used) = self.reduce(target);
        if !rem.is_zero() {
            return None;
        }
        let mut out = vec![Rational::zero(); self.inserted];
        for (i, q) in used.iter() {
            out[i - 1] = q.clone();
        }
        Some(out)
    }
}

pub fn rank(vectors: &[FinSeq]) -> usize {
    let mut ech = Echelon::new();
    for v in vectors {
        ech.insert(v);
    }
    ech.rank()
}

pub fn is_independent(vectors: &[FinSeq]) -> bool {
    rank(vectors) == vectors.len()
}
