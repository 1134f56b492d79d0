//! A small dense two-phase simplex solver.
//!
//! Problems are stated as `maximize c·x` subject to linear rows with `<=`, `=`
//! or `>=` comparators and `x >= 0` (optionally with an upper bound). Pivoting
//! uses Dantzig's rule with lowest-index tie breaks and falls back to Bland's
//! rule after a run of degenerate pivots, so results are deterministic and the
//! method cannot cycle.

use std::cell::Cell;
use std::fmt::Write as _;

use thiserror::Error;

/// Feasibility tolerance on normalized rows.
pub const FEASIBILITY_TOL: f64 = 1e-7;

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const DEGENERATE_RUN_BEFORE_BLAND: usize = 50;

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Comparator {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub cmp: Comparator,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    names: Vec<String>,
    upper: Vec<Option<f64>>,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub values: Vec<f64>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, var: usize) -> f64 {
        self.values[var]
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("constraint references unknown variable {0}")]
    UnknownVariable(usize),
    #[error("simplex failed to converge after {0} pivots")]
    IterationLimit(usize),
    #[error("solution violates constraint {row} by {violation:e}")]
    NumericalFailure { row: usize, violation: f64 },
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a non-negative variable with an optional upper bound.
    pub fn add_var(&mut self, name: impl Into<String>, upper: Option<f64>) -> usize {
        self.names.push(name.into());
        self.upper.push(upper);
        self.objective.push(0.0);
        self.names.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, cmp: Comparator, rhs: f64) {
        self.constraints.push(Constraint { coeffs, cmp, rhs });
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn upper_bounds(&self) -> &[Option<f64>] {
        &self.upper
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if let Some(i) = self.objective.iter().position(|c| !c.is_finite()) {
            return Err(LpError::NonFinite(format!("objective coefficient of {}", self.names[i])));
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("rhs of row {r}")));
            }
            for &(v, a) in &c.coeffs {
                if v >= n {
                    return Err(LpError::UnknownVariable(v));
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite(format!("row {r}")));
                }
            }
        }
        for (i, u) in self.upper.iter().enumerate() {
            if let Some(u) = u {
                if !u.is_finite() {
                    return Err(LpError::NonFinite(format!("upper bound of {}", self.names[i])));
                }
            }
        }
        Ok(())
    }

    /// Renders the program in CPLEX LP text format.
    pub fn to_lp_format(&self) -> String {
        let mut s = String::from("Maximize\n obj:");
        let term = |s: &mut String, a: f64, v: usize, names: &[String]| {
            let _ = write!(s, " {} {:e} {}", if a < 0.0 { '-' } else { '+' }, a.abs(), names[v]);
        };
        let mut any = false;
        for (v, &a) in self.objective.iter().enumerate() {
            if a != 0.0 {
                term(&mut s, a, v, &self.names);
                any = true;
            }
        }
        if !any {
            s.push_str(" 0");
        }
        s.push_str("\nSubject To\n");
        for (r, c) in self.constraints.iter().enumerate() {
            let _ = write!(s, " c{r}:");
            for &(v, a) in &c.coeffs {
                term(&mut s, a, v, &self.names);
            }
            if c.coeffs.is_empty() {
                s.push_str(" 0");
            }
            let op = match c.cmp {
                Comparator::Le => "<=",
                Comparator::Eq => "=",
                Comparator::Ge => ">=",
            };
            let _ = writeln!(s, " {op} {:e}", c.rhs);
        }
        s.push_str("Bounds\n");
        for (v, u) in self.upper.iter().enumerate() {
            match u {
                Some(u) => {
                    let _ = writeln!(s, " 0 <= {} <= {:e}", self.names[v], u);
                }
                None => {
                    let _ = writeln!(s, " {} >= 0", self.names[v]);
                }
            }
        }
        s.push_str("End\n");
        s
    }

    /// Maximum violation of any row (after dividing the row by its largest
    /// coefficient) or bound by the given assignment.
    pub fn max_violation(&self, x: &[f64]) -> (usize, f64) {
        let mut worst = (usize::MAX, 0.0);
        for (r, c) in self.constraints.iter().enumerate() {
            let scale = row_scale(&c.coeffs, c.rhs);
            let lhs: f64 = c.coeffs.iter().map(|&(v, a)| a * x[v]).sum();
            let d = (lhs - c.rhs) / scale;
            let viol = match c.cmp {
                Comparator::Le => d.max(0.0),
                Comparator::Ge => (-d).max(0.0),
                Comparator::Eq => d.abs(),
            };
            if viol > worst.1 {
                worst = (r, viol);
            }
        }
        for (v, &xv) in x.iter().enumerate() {
            let mut viol = (-xv).max(0.0);
            if let Some(u) = self.upper[v] {
                viol = viol.max((xv - u) / u.abs().max(1.0));
            }
            if viol > worst.1 {
                worst = (usize::MAX, viol);
            }
        }
        worst
    }
}

fn row_scale(coeffs: &[(usize, f64)], _rhs: f64) -> f64 {
    let m = coeffs.iter().map(|&(_, a)| a.abs()).fold(0.0, f64::max);
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

thread_local! {
    static SOLVES: Cell<u64> = const { Cell::new(0) };
}

/// Number of [`solve`] calls made on the current thread.
pub fn solves_on_this_thread() -> u64 {
    SOLVES.with(Cell::get)
}

/// Solves `lp`. Infeasibility and unboundedness are statuses, not errors.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    SOLVES.with(|c| c.set(c.get() + 1));
    lp.validate()?;
    let n = lp.num_vars();

    // Rows: original constraints plus explicit upper-bound rows.
    let mut rows: Vec<(Vec<(usize, f64)>, Comparator, f64)> = Vec::new();
    for c in &lp.constraints {
        let mut coeffs = merge_coeffs(&c.coeffs);
        let mut cmp = c.cmp;
        let mut rhs = c.rhs;
        let scale = row_scale(&coeffs, rhs);
        for t in &mut coeffs {
            t.1 /= scale;
        }
        rhs /= scale;
        if coeffs.is_empty() {
            let ok = match cmp {
                Comparator::Le => rhs >= -FEASIBILITY_TOL,
                Comparator::Ge => rhs <= FEASIBILITY_TOL,
                Comparator::Eq => rhs.abs() <= FEASIBILITY_TOL,
            };
            if !ok {
                return Ok(infeasible(n));
            }
            continue;
        }
        if rhs < 0.0 {
            for t in &mut coeffs {
                t.1 = -t.1;
            }
            rhs = -rhs;
            cmp = match cmp {
                Comparator::Le => Comparator::Ge,
                Comparator::Ge => Comparator::Le,
                Comparator::Eq => Comparator::Eq,
            };
        }
        rows.push((coeffs, cmp, rhs));
    }
    for (v, u) in lp.upper.iter().enumerate() {
        if let Some(u) = *u {
            if u < 0.0 {
                return Ok(infeasible(n));
            }
            rows.push((vec![(v, 1.0)], Comparator::Le, u));
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Comparator::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Comparator::Le).count();
    let width = n + n_slack + n_art + 1;
    let mut t = Tableau {
        m,
        width,
        data: vec![0.0; (m + 1) * width],
        basis: vec![0; m],
        art_start: n + n_slack,
        blocked: vec![false; width - 1],
    };
    let (mut s_idx, mut a_idx) = (n, n + n_slack);
    for (i, (coeffs, cmp, rhs)) in rows.iter().enumerate() {
        for &(v, a) in coeffs {
            *t.at(i, v) += a;
        }
        *t.at(i, width - 1) = *rhs;
        match cmp {
            Comparator::Le => {
                *t.at(i, s_idx) = 1.0;
                t.basis[i] = s_idx;
                s_idx += 1;
            }
            Comparator::Ge => {
                *t.at(i, s_idx) = -1.0;
                s_idx += 1;
                *t.at(i, a_idx) = 1.0;
                t.basis[i] = a_idx;
                a_idx += 1;
            }
            Comparator::Eq => {
                *t.at(i, a_idx) = 1.0;
                t.basis[i] = a_idx;
                a_idx += 1;
            }
        }
    }

    let max_iter = 20_000 + 50 * (m + width);
    let mut iterations = 0usize;

    // Phase 1: maximize -sum(artificials).
    if n_art > 0 {
        let mut cost = vec![0.0; width - 1];
        for c in cost.iter_mut().skip(t.art_start) {
            *c = -1.0;
        }
        t.set_objective(&cost);
        match t.run(&mut iterations, max_iter)? {
            Outcome::Optimal => {}
            Outcome::Unbounded => unreachable!("phase 1 is bounded"),
        }
        if t.objective_value() < -FEASIBILITY_TOL * (m as f64).max(1.0) {
            return Ok(infeasible(n));
        }
        t.expel_artificials();
        for j in t.art_start..width - 1 {
            t.blocked[j] = true;
        }
    }

    // Phase 2.
    let mut cost = vec![0.0; width - 1];
    cost[..n].copy_from_slice(&lp.objective);
    t.set_objective(&cost);
    match t.run(&mut iterations, max_iter)? {
        Outcome::Optimal => {}
        Outcome::Unbounded => {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                objective: f64::INFINITY,
                values: vec![0.0; n],
            })
        }
    }

    let mut values = vec![0.0; n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            values[b] = t.get(i, width - 1);
        }
    }
    for v in &mut values {
        if *v < 0.0 && *v > -FEASIBILITY_TOL {
            *v = 0.0;
        }
    }
    let (row, violation) = lp.max_violation(&values);
    if violation > FEASIBILITY_TOL {
        return Err(LpError::NumericalFailure { row, violation });
    }
    let objective = lp.objective.iter().zip(&values).map(|(c, x)| c * x).sum();
    Ok(LpSolution { status: LpStatus::Optimal, objective, values })
}

fn infeasible(n: usize) -> LpSolution {
    LpSolution { status: LpStatus::Infeasible, objective: f64::NEG_INFINITY, values: vec![0.0; n] }
}

fn merge_coeffs(coeffs: &[(usize, f64)]) -> Vec<(usize, f64)> {
    let mut v = coeffs.to_vec();
    v.sort_by_key(|t| t.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(v.len());
    for (i, a) in v {
        match out.last_mut() {
            Some(last) if last.0 == i => last.1 += a,
            _ => out.push((i, a)),
        }
    }
    out.retain(|t| t.1 != 0.0);
    out
}

enum Outcome {
    Optimal,
    Unbounded,
}

/// Row-major tableau; row `m` is the reduced-cost row, last column is the rhs.
struct Tableau {
    m: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    art_start: usize,
    blocked: Vec<bool>,
}

impl Tableau {
    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.data[i * self.width + j]
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    /// Loads `-cost` into the objective row and prices out the basis.
    fn set_objective(&mut self, cost: &[f64]) {
        let w = self.width;
        let obj = self.m * w;
        for j in 0..w {
            self.data[obj + j] = 0.0;
        }
        for (j, &c) in cost.iter().enumerate() {
            self.data[obj + j] = -c;
        }
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    let a = self.data[i * w + j];
                    if a != 0.0 {
                        self.data[obj + j] += cb * a;
                    }
                }
            }
        }
    }

    fn objective_value(&self) -> f64 {
        self.get(self.m, self.width - 1)
    }

    fn run(&mut self, iterations: &mut usize, max_iter: usize) -> Result<Outcome, LpError> {
        let mut degenerate_run = 0usize;
        loop {
            let bland = degenerate_run >= DEGENERATE_RUN_BEFORE_BLAND;
            let Some(col) = self.entering(bland) else {
                return Ok(Outcome::Optimal);
            };
            let Some(row) = self.leaving(col) else {
                return Ok(Outcome::Unbounded);
            };
            let before = self.objective_value();
            self.pivot(row, col);
            if self.objective_value() > before + OPT_TOL * before.abs().max(1.0) {
                degenerate_run = 0;
            } else {
                degenerate_run += 1;
            }
            *iterations += 1;
            if *iterations > max_iter {
                return Err(LpError::IterationLimit(*iterations));
            }
        }
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let obj = self.m * self.width;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.width - 1 {
            if self.blocked[j] {
                continue;
            }
            let d = self.data[obj + j];
            if d < -OPT_TOL {
                if bland {
                    return Some(j);
                }
                if best.is_none_or(|(_, b)| d < b) {
                    best = Some((j, d));
                }
            }
        }
        best.map(|b| b.0)
    }

    /// Minimum-ratio test; ties go to the row whose basic variable has the lowest index.
    fn leaving(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let a = self.get(i, col);
            if a > PIVOT_TOL {
                let ratio = self.get(i, self.width - 1) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - 1e-12 * br.abs().max(1.0)
                            || (ratio <= br + 1e-12 * br.abs().max(1.0) && self.basis[i] < self.basis[bi])
                        {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        best.map(|b| b.0)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let p = self.data[row * w + col];
        let inv = 1.0 / p;
        for j in 0..w {
            self.data[row * w + j] *= inv;
        }
        self.data[row * w + col] = 1.0;
        let (before, rest) = self.data.split_at_mut(row * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |r: &mut [f64]| {
            let f = r[col];
            if f != 0.0 {
                for (x, &y) in r.iter_mut().zip(prow.iter()) {
                    if y != 0.0 {
                        *x -= f * y;
                    }
                }
                r[col] = 0.0;
            }
        };
        for r in before.chunks_mut(w) {
            eliminate(r);
        }
        for r in after.chunks_mut(w) {
            eliminate(r);
        }
        // Keep the rhs non-negative against round-off.
        for i in 0..self.m {
            let v = &mut self.data[i * w + w - 1];
            if *v < 0.0 && *v > -1e-11 {
                *v = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// After phase 1 pivots zero-valued artificials out of the basis, dropping
    /// rows that turn out to be redundant.
    fn expel_artificials(&mut self) {
        let mut i = 0;
        while i < self.m {
            if self.basis[i] >= self.art_start {
                let col = (0..self.art_start).find(|&j| self.get(i, j).abs() > PIVOT_TOL);
                match col {
                    Some(j) => {
                        self.pivot(i, j);
                        i += 1;
                    }
                    None => self.remove_row(i),
                }
            } else {
                i += 1;
            }
        }
    }

    fn remove_row(&mut self, i: usize) {
        let w = self.width;
        self.data.drain(i * w..(i + 1) * w);
        self.basis.remove(i);
        self.m -= 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_bound() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", None);
        lp.set_objective(x, 1.0);
        lp.add_constraint(vec![(x, 1.0)], Comparator::Le, 3.0);
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value(x) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_objective_face() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", None);
        let y = lp.add_var("y", None);
        lp.set_objective(x, 1.0);
        lp.set_objective(y, 1.0);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Comparator::Le, 1.0);
        let s = solve(&lp).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_bounds() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", None);
        lp.add_constraint(vec![(x, 1.0)], Comparator::Le, 1.0);
        lp.add_constraint(vec![(x, 1.0)], Comparator::Ge, 2.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", None);
        let y = lp.add_var("y", None);
        lp.set_objective(x, 1.0);
        lp.add_constraint(vec![(x, 1.0), (y, -1.0)], Comparator::Le, 1.0);
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_upper_bounds() {
        // max 2x + 3y, x + y = 4, y <= 1 (bound), x >= 0
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", None);
        let y = lp.add_var("y", Some(1.0));
        lp.set_objective(x, 2.0);
        lp.set_objective(y, 3.0);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Comparator::Eq, 4.0);
        let s = solve(&lp).unwrap();
        assert!((s.objective - 9.0).abs() < 1e-9);
        assert!((s.value(y) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", None);
        let y = lp.add_var("y", None);
        lp.set_objective(x, 1.0);
        lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Comparator::Eq, 2.0);
        lp.add_constraint(vec![(x, 2.0), (y, 2.0)], Comparator::Eq, 4.0);
        let s = solve(&lp).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_finite() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", None);
        lp.add_constraint(vec![(x, f64::NAN)], Comparator::Le, 1.0);
        assert!(matches!(solve(&lp), Err(LpError::NonFinite(_))));
        let mut lp = LinearProgram::new();
        lp.add_var("x", None);
        lp.add_constraint(vec![(4, 1.0)], Comparator::Le, 1.0);
        assert_eq!(solve(&lp), Err(LpError::UnknownVariable(4)));
    }

    #[test]
    fn lp_format_dump() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", Some(5.0));
        let y = lp.add_var("y", None);
        lp.set_objective(x, 1.0);
        lp.add_constraint(vec![(x, 1.0), (y, -2.0)], Comparator::Ge, 0.5);
        let text = lp.to_lp_format();
        assert!(text.starts_with("Maximize\n obj: + 1e0 x\n"));
        assert!(text.contains(" c0: + 1e0 x - 2e0 y >= 5e-1\n"));
        assert!(text.contains(" 0 <= x <= 5e0\n"));
        assert!(text.ends_with("End\n"));
    }

    /// Random bounded feasible LP: max c·x, A x <= b with A, b, c > 0.
    fn random_lp(rng: &mut impl Rng) -> (LinearProgram, Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let n = rng.gen_range(1..=10);
        let m = rng.gen_range(1..=10);
        let mut lp = LinearProgram::new();
        for i in 0..n {
            lp.add_var(format!("x{i}"), None);
        }
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..5.0)).collect();
        for (i, &ci) in c.iter().enumerate() {
            lp.set_objective(i, ci);
        }
        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..m {
            let row: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..3.0)).collect();
            let rhs = rng.gen_range(1.0..10.0);
            lp.add_constraint(row.iter().cloned().enumerate().collect(), Comparator::Le, rhs);
            a.push(row);
            b.push(rhs);
        }
        // Column sums must be positive for boundedness.
        for j in 0..n {
            let mut row = vec![0.0; n];
            row[j] = 1.0;
            lp.add_constraint(vec![(j, 1.0)], Comparator::Le, 100.0);
            a.push(row);
            b.push(100.0);
        }
        (lp, a, b, c)
    }

    #[test]
    fn strong_duality_on_random_lps() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
        for _ in 0..50 {
            let (primal, a, b, c) = random_lp(&mut rng);
            let p = solve(&primal).unwrap();
            assert_eq!(p.status, LpStatus::Optimal);
            // Dual: min b·y s.t. A^T y >= c, y >= 0, stated as max -b·y.
            let mut dual = LinearProgram::new();
            for i in 0..b.len() {
                let y = dual.add_var(format!("y{i}"), None);
                dual.set_objective(y, -b[i]);
            }
            for j in 0..c.len() {
                let coeffs = (0..b.len()).map(|i| (i, a[i][j])).collect();
                dual.add_constraint(coeffs, Comparator::Ge, c[j]);
            }
            let d = solve(&dual).unwrap();
            assert_eq!(d.status, LpStatus::Optimal);
            assert!((p.objective + d.objective).abs() < 1e-6 * p.objective.abs().max(1.0));
        }
    }

    proptest! {
        #[test]
        fn solve_is_deterministic_and_feasible(seed in 0u64..1000) {
            let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
            let (lp, ..) = random_lp(&mut rng);
            let s1 = solve(&lp).unwrap();
            let s2 = solve(&lp).unwrap();
            prop_assert_eq!(
                s1.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                s2.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
            prop_assert!(lp.max_violation(&s1.values).1 <= FEASIBILITY_TOL);
        }
    }
}
