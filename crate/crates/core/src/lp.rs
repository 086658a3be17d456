//! Dense two-phase simplex for small linear programs.
//!
//! Solves `maximize c.x subject to rows, x >= 0` with Bland's rule, which
//! keeps the heavily degenerate correlated-equilibrium systems from cycling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-10;
/// Pivots between rebuilds of the tableau from the original rows.
const REFACTOR_EVERY: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub kind: RowKind,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    vars: usize,
    objective: Vec<f64>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    pub fn new(vars: usize) -> Self {
        Self {
            vars,
            objective: vec![0.0; vars],
            rows: Vec::new(),
        }
    }

    pub fn maximize(&mut self, objective: Vec<f64>) -> &mut Self {
        assert_eq!(objective.len(), self.vars);
        self.objective = objective;
        self
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, kind: RowKind, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.vars);
        self.rows.push(Row { coeffs, kind, rhs });
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).run(&self.objective)
    }
}

struct Tableau {
    // rows x (cols + 1); the last column is the right-hand side
    cells: Vec<Vec<f64>>,
    original: Vec<Vec<f64>>,
    basis: Vec<usize>,
    vars: usize,
    cols: usize,
    first_artificial: usize,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let rows: Vec<Row> = lp
            .rows
            .iter()
            .map(|r| {
                if r.rhs < 0.0 {
                    Row {
                        coeffs: r.coeffs.iter().map(|v| -v).collect(),
                        kind: match r.kind {
                            RowKind::Le => RowKind::Ge,
                            RowKind::Ge => RowKind::Le,
                            RowKind::Eq => RowKind::Eq,
                        },
                        rhs: -r.rhs,
                    }
                } else {
                    r.clone()
                }
            })
            .collect();
        let slacks = rows.iter().filter(|r| r.kind != RowKind::Eq).count();
        let artificials = rows.iter().filter(|r| r.kind != RowKind::Le).count();
        let first_artificial = lp.vars + slacks;
        let cols = first_artificial + artificials;

        let mut cells = Vec::with_capacity(rows.len());
        let mut basis = Vec::with_capacity(rows.len());
        let (mut slack, mut art) = (lp.vars, first_artificial);
        for r in &rows {
            let mut line = vec![0.0; cols + 1];
            line[..lp.vars].copy_from_slice(&r.coeffs);
            line[cols] = r.rhs;
            match r.kind {
                RowKind::Le => {
                    line[slack] = 1.0;
                    basis.push(slack);
                    slack += 1;
                }
                RowKind::Ge => {
                    line[slack] = -1.0;
                    slack += 1;
                    line[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
                RowKind::Eq => {
                    line[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
            }
            cells.push(line);
        }
        Self {
            original: cells.clone(),
            cells,
            basis,
            vars: lp.vars,
            cols,
            first_artificial,
            pivots: 0,
        }
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.cols + 1;
        let p = self.cells[row][col];
        for v in self.cells[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.cells[row].clone();
        for (r, line) in self.cells.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let f = line[col];
            if f != 0.0 {
                for c in 0..width {
                    line[c] -= f * pivot_row[c];
                }
                line[col] = 0.0;
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
        if self.pivots.is_multiple_of(REFACTOR_EVERY) {
            self.refactor();
        }
    }

    /// Recomputes `B^-1 [A | b]` for the current basis by Gauss-Jordan
    /// elimination with partial pivoting, discarding accumulated update
    /// error. Leaves the tableau untouched if the basis is numerically
    /// singular.
    fn refactor(&mut self) {
        let n = self.cells.len();
        let mut aug: Vec<Vec<f64>> = self
            .original
            .iter()
            .map(|row| {
                let mut line: Vec<f64> = self.basis.iter().map(|&b| row[b]).collect();
                line.extend_from_slice(row);
                line
            })
            .collect();
        for c in 0..n {
            let p = (c..n)
                .max_by(|&a, &b| aug[a][c].abs().total_cmp(&aug[b][c].abs()))
                .expect("nonempty");
            if aug[p][c].abs() < 1e-13 {
                return;
            }
            aug.swap(c, p);
            let d = aug[c][c];
            for v in aug[c].iter_mut() {
                *v /= d;
            }
            let pivot_row = aug[c].clone();
            for (r, line) in aug.iter_mut().enumerate() {
                let f = line[c];
                if r != c && f != 0.0 {
                    for (v, q) in line.iter_mut().zip(&pivot_row) {
                        *v -= f * q;
                    }
                }
            }
        }
        let rhs = self.cols;
        for (cell, line) in self.cells.iter_mut().zip(aug) {
            *cell = line[n..].to_vec();
            if cell[rhs] < 0.0 && cell[rhs] > -FEASIBILITY_TOL {
                cell[rhs] = 0.0;
            }
        }
    }

    /// Reduced costs `c_B B^-1 A_j - c_j` for a maximization objective over
    /// all columns.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut reduced: Vec<f64> = cost.iter().map(|c| -c).collect();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (j, red) in reduced.iter_mut().enumerate() {
                    *red += cb * self.cells[r][j];
                }
            }
        }
        reduced
    }

    fn optimize(&mut self, cost: &[f64], allow: impl Fn(usize) -> bool) -> Result<()> {
        let limit = 50_000 + 100 * self.cols * self.cells.len();
        for _ in 0..limit {
            let reduced = self.reduced_costs(cost);
            let entering = (0..self.cols).find(|&j| allow(j) && reduced[j] < -PIVOT_TOL);
            let Some(col) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (r, line) in self.cells.iter().enumerate() {
                let a = line[col];
                if a > PIVOT_TOL {
                    let ratio = line[self.cols] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - PIVOT_TOL
                                || (ratio <= bratio + PIVOT_TOL && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((row, _)) => self.pivot(row, col),
                None => return Err(Error::SolverFailure("linear program is unbounded".into())),
            }
        }
        Err(Error::SolverFailure(
            "simplex iteration limit reached".into(),
        ))
    }

    fn run(mut self, objective: &[f64]) -> Result<LpSolution> {
        let first_art = self.first_artificial;
        if first_art < self.cols {
            let mut phase_one = vec![0.0; self.cols];
            for c in phase_one.iter_mut().skip(first_art) {
                *c = -1.0;
            }
            self.optimize(&phase_one, |_| true)?;
            let infeasibility: f64 = self
                .basis
                .iter()
                .enumerate()
                .filter(|(_, &b)| b >= first_art)
                .map(|(r, _)| self.cells[r][self.cols])
                .sum();
            if infeasibility > FEASIBILITY_TOL {
                return Err(Error::SolverFailure(format!(
                    "infeasible (phase one residual {infeasibility:e})"
                )));
            }
            // Drive zero-level artificials out of the basis where possible.
            for r in 0..self.cells.len() {
                if self.basis[r] >= first_art {
                    if let Some(col) = (0..first_art).find(|&j| self.cells[r][j].abs() > 1e-9) {
                        self.pivot(r, col);
                    }
                }
            }
        }
        let mut cost = vec![0.0; self.cols];
        cost[..self.vars].copy_from_slice(objective);
        self.optimize(&cost, |j| j < first_art)?;
        self.refactor();

        let mut x = vec![0.0; self.vars];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.vars {
                x[b] = self.cells[r][self.cols];
            }
        }
        let value = x.iter().zip(objective).map(|(a, c)| a * c).sum();
        Ok(LpSolution {
            x,
            objective: value,
            pivots: self.pivots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y st x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![3.0, 5.0])
            .add_row(vec![1.0, 0.0], RowKind::Le, 4.0)
            .add_row(vec![0.0, 2.0], RowKind::Le, 12.0)
            .add_row(vec![3.0, 2.0], RowKind::Le, 18.0);
        let sol = lp.solve().unwrap();
        assert!((sol.x[0] - 2.0).abs() < 1e-12);
        assert!((sol.x[1] - 6.0).abs() < 1e-12);
        assert!((sol.objective - 36.0).abs() < 1e-12);
    }

    #[test]
    fn equality_and_ge_rows() {
        // max -x - y st x + y = 2, x >= 0.5 (as Ge), y >= 0
        let mut lp = LinearProgram::new(2);
        lp.maximize(vec![-1.0, -2.0])
            .add_row(vec![1.0, 1.0], RowKind::Eq, 2.0)
            .add_row(vec![1.0, 0.0], RowKind::Ge, 0.5);
        let sol = lp.solve().unwrap();
        assert!((sol.x[0] - 2.0).abs() < 1e-12);
        assert!(sol.x[1].abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add_row(vec![1.0], RowKind::Le, 1.0)
            .add_row(vec![1.0], RowKind::Ge, 2.0);
        assert!(matches!(lp.solve(), Err(Error::SolverFailure(_))));

        let mut lp = LinearProgram::new(1);
        lp.maximize(vec![1.0]).add_row(vec![-1.0], RowKind::Le, 1.0);
        assert!(matches!(lp.solve(), Err(Error::SolverFailure(_))));
    }

    #[test]
    fn negative_rhs_is_flipped() {
        // -x <= -3  <=>  x >= 3; minimize x
        let mut lp = LinearProgram::new(1);
        lp.maximize(vec![-1.0])
            .add_row(vec![-1.0], RowKind::Le, -3.0);
        let sol = lp.solve().unwrap();
        assert!((sol.x[0] - 3.0).abs() < 1e-12);
    }
}
