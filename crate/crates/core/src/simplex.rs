//! Dense two-phase primal simplex for small linear programs.
//!
//! The occupancy LPs this crate builds have a couple of dozen variables at
//! most, so a dense tableau with Bland's anti-cycling rule is simple,
//! exact enough, and guaranteed to terminate. Maximization form, all
//! variables nonnegative.

use crate::error::Error;

/// Pivot elements and reduced costs below this magnitude are treated as
/// zero.
pub const PIVOT_TOL: f64 = 1e-9;

/// Phase-1 residual above which the program is declared infeasible.
const FEAS_TOL: f64 = 1e-9;

/// `maximize objective . x` subject to `eq` rows holding with equality,
/// `le` rows holding as `<=`, and `x >= 0` componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    /// Rows `(coefficients, rhs)` with `coefficients . x = rhs`.
    pub eq: Vec<(Vec<f64>, f64)>,
    /// Rows `(coefficients, rhs)` with `coefficients . x <= rhs`.
    pub le: Vec<(Vec<f64>, f64)>,
    /// Variables pinned to exactly zero (an upper bound of 0; they never
    /// enter the basis and report 0 in the solution).
    pub fixed_zero: Vec<usize>,
}

impl LinearProgram {
    /// Checks that every row and the objective have `n_vars` coefficients
    /// and that pinned indices are in range.
    pub fn validate(&self) -> Result<(), Error> {
        if self.objective.len() != self.n_vars {
            return Err(Error::Config(format!(
                "objective has {} coefficients for {} variables",
                self.objective.len(),
                self.n_vars
            )));
        }
        for (kind, rows) in [("eq", &self.eq), ("le", &self.le)] {
            for (i, (row, _)) in rows.iter().enumerate() {
                if row.len() != self.n_vars {
                    return Err(Error::Config(format!(
                        "{kind} row {i} has {} coefficients for {} variables",
                        row.len(),
                        self.n_vars
                    )));
                }
            }
        }
        if let Some(&bad) = self.fixed_zero.iter().find(|&&v| v >= self.n_vars) {
            return Err(Error::Config(format!(
                "pinned variable {bad} out of range for {} variables",
                self.n_vars
            )));
        }
        Ok(())
    }

    /// Plain-text tableau of the program for external cross-checks.
    /// Columns appear in variable-index order (the builder in
    /// [`crate::lp`] documents its ordering), one row per line.
    pub fn tableau_string(&self) -> String {
        let fmt_row = |row: &[f64]| {
            row.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
        };
        let mut out = String::new();
        out.push_str(&format!("vars {}\n", self.n_vars));
        out.push_str(&format!("maximize {}\n", fmt_row(&self.objective)));
        for (row, rhs) in &self.eq {
            out.push_str(&format!("eq {} = {rhs}\n", fmt_row(row)));
        }
        for (row, rhs) in &self.le {
            out.push_str(&format!("le {} <= {rhs}\n", fmt_row(row)));
        }
        if !self.fixed_zero.is_empty() {
            let pinned = self
                .fixed_zero
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            out.push_str(&format!("zero {pinned}\n"));
        }
        out
    }
}

/// An optimal basic solution.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Total simplex pivots across both phases.
    pub iterations: usize,
}

struct Tableau {
    /// `rows[i]` holds the constraint coefficients, rhs last.
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row (same layout, objective value last, negated).
    cost: Vec<f64>,
    /// Basic variable of each row.
    basis: Vec<usize>,
    /// Columns allowed to enter the basis.
    enterable: Vec<bool>,
    iterations: usize,
}

impl Tableau {
    fn n_cols(&self) -> usize {
        self.cost.len() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let inv = 1.0 / self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v *= inv;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i != row && r[col] != 0.0 {
                let factor = r[col];
                for (v, p) in r.iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
                r[col] = 0.0;
            }
        }
        if self.cost[col] != 0.0 {
            let factor = self.cost[col];
            for (v, p) in self.cost.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            self.cost[col] = 0.0;
        }
        self.basis[row] = col;
        self.iterations += 1;
    }

    /// Rewrites the reduced-cost row for objective `c` (maximization)
    /// against the current basis.
    fn set_objective(&mut self, c: &[f64]) {
        let rhs = self.n_cols();
        self.cost = vec![0.0; rhs + 1];
        self.cost[..c.len()].copy_from_slice(c);
        for (i, &b) in self.basis.iter().enumerate() {
            let factor = self.cost[b];
            if factor != 0.0 {
                let row = self.rows[i].clone();
                for (v, p) in self.cost.iter_mut().zip(&row) {
                    *v -= factor * p;
                }
                self.cost[b] = 0.0;
            }
        }
    }

    /// Runs simplex pivots under Bland's rule until no reduced cost
    /// improves the (maximization) objective. Returns `Err(Unbounded)` if
    /// an improving column has no blocking row.
    fn optimize(&mut self) -> Result<(), Error> {
        let cols = self.n_cols();
        // Bland's rule terminates, but cap the work as a defensive bound.
        let cap = 50 * (cols + 1) * (self.rows.len() + 1);
        for _ in 0..cap {
            // Entering: the lowest-index improving column.
            let Some(col) = (0..cols)
                .find(|&j| self.enterable[j] && self.cost[j] > PIVOT_TOL)
            else {
                return Ok(());
            };
            // Leaving: tightest ratio, ties to the lowest basic index.
            let rhs = cols;
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[col] > PIVOT_TOL {
                    let ratio = row[rhs] / row[col];
                    let replace = match best {
                        None => true,
                        Some((bi, br)) => {
                            ratio < br - 1e-12
                                || (ratio < br + 1e-12 && self.basis[i] < self.basis[bi])
                        }
                    };
                    if replace {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return Err(Error::Unbounded),
            }
        }
        Err(Error::Budget(
            "simplex pivot cap exceeded (cycling despite Bland's rule?)".into(),
        ))
    }
}

/// Solves the program with a two-phase dense primal simplex.
///
/// Phase 1 drives artificial variables out of an auxiliary basis to decide
/// feasibility; phase 2 maximizes the real objective. Infeasibility and
/// unboundedness are reported as dedicated errors, never as numbers.
pub fn simplex_solve(lp: &LinearProgram) -> Result<LpSolution, Error> {
    lp.validate()?;
    let n = lp.n_vars;
    let n_slack = lp.le.len();
    let m = lp.eq.len() + lp.le.len();
    // Column layout: structural | slack | artificial, rhs last.
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut slack_col = n;
    for (coeffs, rhs) in lp.eq.iter().chain(&lp.le) {
        let is_le = rows.len() >= lp.eq.len();
        let mut row = vec![0.0; n + n_slack + 1];
        row[..n].copy_from_slice(coeffs);
        if is_le {
            row[slack_col] = 1.0;
            slack_col += 1;
        }
        *row.last_mut().unwrap() = *rhs;
        if *rhs < 0.0 {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
        rows.push(row);
    }

    // Initial basis: slacks where they survived the sign flip, otherwise
    // one artificial per row.
    let mut basis = vec![usize::MAX; m];
    let mut needs_artificial = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let slack = (i >= lp.eq.len()).then(|| n + (i - lp.eq.len()));
        match slack {
            Some(s) if row[s] > 0.0 => basis[i] = s,
            _ => needs_artificial.push(i),
        }
    }
    let n_art = needs_artificial.len();
    let total = n + n_slack + n_art;
    for row in rows.iter_mut() {
        let rhs = row.pop().unwrap();
        row.resize(total, 0.0);
        row.push(rhs);
    }
    for (k, &i) in needs_artificial.iter().enumerate() {
        let col = n + n_slack + k;
        rows[i][col] = 1.0;
        basis[i] = col;
    }

    let mut enterable = vec![true; total];
    for &v in &lp.fixed_zero {
        enterable[v] = false;
    }

    let mut tab = Tableau {
        rows,
        cost: vec![0.0; total + 1],
        basis,
        enterable,
        iterations: 0,
    };

    // Phase 1: maximize -(sum of artificials).
    if n_art > 0 {
        let mut c = vec![0.0; total];
        for v in c.iter_mut().skip(n + n_slack) {
            *v = -1.0;
        }
        tab.set_objective(&c);
        tab.optimize()?;
        // The cost row's rhs entry is -z = sum of the artificials.
        let residual = tab.cost[total];
        if residual > FEAS_TOL {
            return Err(Error::Infeasible);
        }
        // Pivot lingering zero-valued artificials out where possible; a row
        // with no eligible pivot is redundant and can stay parked.
        for i in 0..tab.rows.len() {
            if tab.basis[i] >= n + n_slack {
                if let Some(col) = (0..n + n_slack)
                    .find(|&j| tab.enterable[j] && tab.rows[i][j].abs() > PIVOT_TOL)
                {
                    tab.pivot(i, col);
                }
            }
        }
        for col in (n + n_slack)..total {
            tab.enterable[col] = false;
        }
    }

    // Phase 2: the real objective over structural and slack columns.
    let mut c = vec![0.0; total];
    c[..n].copy_from_slice(&lp.objective);
    tab.set_objective(&c);
    tab.optimize()?;

    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rows[i][total];
        }
    }
    let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution { x, objective, iterations: tab.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(
        n_vars: usize,
        objective: Vec<f64>,
        eq: Vec<(Vec<f64>, f64)>,
        le: Vec<(Vec<f64>, f64)>,
    ) -> LinearProgram {
        LinearProgram { n_vars, objective, eq, le, fixed_zero: vec![] }
    }

    #[test]
    fn solves_single_variable_box() {
        let sol = simplex_solve(&lp(1, vec![1.0], vec![], vec![(vec![1.0], 1.0)])).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reports_infeasible_box() {
        let got = simplex_solve(&lp(1, vec![1.0], vec![], vec![(vec![1.0], -1.0)]));
        assert_eq!(got, Err(Error::Infeasible));
    }

    #[test]
    fn reports_unbounded_ray() {
        let got = simplex_solve(&lp(2, vec![1.0, 0.0], vec![], vec![(vec![-1.0, 1.0], 1.0)]));
        assert_eq!(got, Err(Error::Unbounded));
    }

    #[test]
    fn solves_two_variable_vertex() {
        // max x + y st x + 2y <= 4, 3x + y <= 6 -> (1.6, 1.2).
        let sol = simplex_solve(&lp(
            2,
            vec![1.0, 1.0],
            vec![],
            vec![(vec![1.0, 2.0], 4.0), (vec![3.0, 1.0], 6.0)],
        ))
        .unwrap();
        assert!((sol.x[0] - 1.6).abs() < 1e-12);
        assert!((sol.x[1] - 1.2).abs() < 1e-12);
        assert!((sol.objective - 2.8).abs() < 1e-12);
    }

    #[test]
    fn handles_equalities_and_negative_rhs() {
        // x - y = -1, x + y <= 3, max x: x = 1, y = 2.
        let sol = simplex_solve(&lp(
            2,
            vec![1.0, 0.0],
            vec![(vec![1.0, -1.0], -1.0)],
            vec![(vec![1.0, 1.0], 3.0)],
        ))
        .unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tolerates_redundant_equalities() {
        // The same hyperplane twice: phase 1 must park one artificial.
        let sol = simplex_solve(&lp(
            2,
            vec![1.0, 2.0],
            vec![(vec![1.0, 1.0], 1.0), (vec![2.0, 2.0], 2.0)],
            vec![],
        ))
        .unwrap();
        assert!((sol.objective - 2.0).abs() < 1e-12);
        assert!((sol.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_inconsistent_equalities() {
        let got = simplex_solve(&lp(
            2,
            vec![1.0, 0.0],
            vec![(vec![1.0, 1.0], 1.0), (vec![1.0, 1.0], 2.0)],
            vec![],
        ));
        assert_eq!(got, Err(Error::Infeasible));
    }

    #[test]
    fn pinned_variables_stay_out_of_the_basis() {
        let mut program = lp(
            2,
            vec![2.0, 1.0],
            vec![],
            vec![(vec![1.0, 1.0], 1.0)],
        );
        program.fixed_zero = vec![0];
        let sol = simplex_solve(&program).unwrap();
        assert_eq!(sol.x[0], 0.0);
        assert!((sol.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn survives_the_classic_cycling_instance() {
        // Beale's degenerate example cycles under the naive most-negative
        // rule; Bland's rule must reach the optimum 1/20.
        let sol = simplex_solve(&lp(
            4,
            vec![0.75, -150.0, 0.02, -6.0],
            vec![],
            vec![
                (vec![0.25, -60.0, -1.0 / 25.0, 9.0], 0.0),
                (vec![0.5, -90.0, -1.0 / 50.0, 3.0], 0.0),
                (vec![0.0, 0.0, 1.0, 0.0], 1.0),
            ],
        ))
        .unwrap();
        assert!((sol.objective - 0.05).abs() < 1e-12, "{}", sol.objective);
    }

    #[test]
    fn rejects_malformed_programs() {
        let bad = lp(2, vec![1.0], vec![], vec![]);
        assert!(simplex_solve(&bad).is_err());
        let mut bad = lp(1, vec![1.0], vec![], vec![]);
        bad.fixed_zero = vec![3];
        assert!(simplex_solve(&bad).is_err());
    }

    #[test]
    fn tableau_dump_lists_every_row() {
        let mut program = lp(
            2,
            vec![1.0, 1.0],
            vec![(vec![1.0, 1.0], 1.0)],
            vec![(vec![1.0, 0.0], 0.5)],
        );
        program.fixed_zero = vec![1];
        let dump = program.tableau_string();
        assert!(dump.contains("maximize 1 1"));
        assert!(dump.contains("eq 1 1 = 1"));
        assert!(dump.contains("le 1 0 <= 0.5"));
        assert!(dump.contains("zero 1"));
    }
}
