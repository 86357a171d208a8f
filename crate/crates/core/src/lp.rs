//! A small dense simplex solver over exact rationals.
//!
//! Solves `min c.x` subject to `A x = b`, `x >= 0` with the two-phase method
//! and Bland's rule, so it terminates on degenerate problems. Sizes here are
//! a few hundred rows at most.

use num_traits::{Signed, Zero};

use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, value: Rational },
    Infeasible,
    Unbounded,
}

struct Tableau {
    /// `rows x (cols + 1)`; the last column is the right-hand side.
    t: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let lead = self.t[r][c].clone();
        for v in self.t[r].iter_mut() {
            *v /= &lead;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Runs the simplex on `cost` over the columns allowed by `active`.
    /// Returns false when unbounded.
    fn optimize(&mut self, cost: &[Rational], active: &[bool]) -> bool {
        let rhs = self.cols;
        loop {
            // Bland: lowest-index column with negative reduced cost.
            let entering = (0..self.cols).find(|&j| {
                if !active[j] || self.basis.contains(&j) {
                    return false;
                }
                let mut d = cost[j].clone();
                for (i, &b) in self.basis.iter().enumerate() {
                    if !self.t[i][j].is_zero() && !cost[b].is_zero() {
                        d -= &cost[b] * &self.t[i][j];
                    }
                }
                d.is_negative()
            });
            let Some(c) = entering else {
                return true;
            };
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.t.len() {
                if !self.t[i][c].is_positive() {
                    continue;
                }
                let ratio = &self.t[i][rhs] / &self.t[i][c];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

/// Minimizes `c.x` subject to `a x = b`, `x >= 0`.
pub fn minimize(c: &[Rational], a: &[Vec<Rational>], b: &[Rational]) -> LpOutcome {
    let n = c.len();
    let m = a.len();
    assert_eq!(b.len(), m, "one right-hand side per row");
    assert!(a.iter().all(|row| row.len() == n), "rows must have {n} columns");

    // Phase 1 on [A | I] with artificials basic.
    let cols = n + m;
    let mut t = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        let flip = b[i].is_negative();
        let mut r: Vec<Rational> = row
            .iter()
            .map(|v| if flip { -v } else { v.clone() })
            .collect();
        r.extend((0..m).map(|k| {
            if k == i {
                Rational::from_integer(1.into())
            } else {
                Rational::zero()
            }
        }));
        r.push(if flip { -&b[i] } else { b[i].clone() });
        t.push(r);
    }
    let mut tab = Tableau {
        t,
        basis: (n..cols).collect(),
        cols,
    };
    let phase1: Vec<Rational> = (0..cols)
        .map(|j| {
            if j < n {
                Rational::zero()
            } else {
                Rational::from_integer(1.into())
            }
        })
        .collect();
    let all = vec![true; cols];
    tab.optimize(&phase1, &all);
    let infeasibility: Rational = tab
        .basis
        .iter()
        .enumerate()
        .filter(|&(_, &bj)| bj >= n)
        .map(|(i, _)| tab.t[i][cols].clone())
        .sum();
    if infeasibility.is_positive() {
        return LpOutcome::Infeasible;
    }

    // Drive remaining (zero-valued) artificials out of the basis; rows where
    // that is impossible are redundant and dropped.
    let mut r = 0;
    while r < tab.t.len() {
        if tab.basis[r] >= n {
            match (0..n).find(|&j| !tab.t[r][j].is_zero()) {
                Some(j) => tab.pivot(r, j),
                None => {
                    tab.t.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    let mut cost = c.to_vec();
    cost.extend((0..m).map(|_| Rational::zero()));
    let original: Vec<bool> = (0..cols).map(|j| j < n).collect();
    if !tab.optimize(&cost, &original) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &bj) in tab.basis.iter().enumerate() {
        if bj < n {
            x[bj] = tab.t[i][cols].clone();
        }
    }
    let value = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    LpOutcome::Optimal { x, value }
}
