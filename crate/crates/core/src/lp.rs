//! Dense two-phase primal simplex.
//!
//! The kernel targets desk-scale programs (a few hundred rows and columns at
//! most). Every model in this crate is lowered to a [`LinearProgram`] and
//! solved here. Rows may be equalities or inequalities; variables carry a
//! finite lower bound or are free (`f64::NEG_INFINITY`).

use std::fmt::Write as _;

use thiserror::Error;

/// Primal feasibility tolerance on the scaled standard form.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Reduced-cost optimality tolerance.
pub const OPTIMALITY_TOL: f64 = 1e-9;
/// Smallest pivot magnitude accepted in the ratio test.
pub const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveSense {
    Min,
    Max,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite coefficient at {0}")]
    NonFinite(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
}

/// `objective_sense  c·x  s.t.  A x (=|<=|>=) b,  x >= lower_bounds`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective_sense: ObjectiveSense,
    pub c: Vec<f64>,
    /// Row-major, `b.len()` rows of `c.len()` entries.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub row_sense: Vec<RowSense>,
    pub lower_bounds: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective_sense: ObjectiveSense, c: Vec<f64>) -> Self {
        let n = c.len();
        Self {
            objective_sense,
            c,
            a: Vec::new(),
            b: Vec::new(),
            row_sense: Vec::new(),
            lower_bounds: vec![0.0; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: RowSense, rhs: f64) -> usize {
        self.a.push(coeffs);
        self.row_sense.push(sense);
        self.b.push(rhs);
        self.b.len() - 1
    }

    pub fn set_lower_bound(&mut self, var: usize, lb: f64) {
        self.lower_bounds[var] = lb;
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.c.len();
        if self.a.len() != self.b.len() || self.row_sense.len() != self.b.len() {
            return Err(LpError::Dimension(format!(
                "{} rows in A, {} in b, {} senses",
                self.a.len(),
                self.b.len(),
                self.row_sense.len()
            )));
        }
        if self.lower_bounds.len() != n {
            return Err(LpError::Dimension(format!(
                "{} lower bounds for {} variables",
                self.lower_bounds.len(),
                n
            )));
        }
        for (i, row) in self.a.iter().enumerate() {
            if row.len() != n {
                return Err(LpError::Dimension(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(LpError::NonFinite(format!("A[{i}][{j}]")));
            }
        }
        if let Some(j) = self.c.iter().position(|v| !v.is_finite()) {
            return Err(LpError::NonFinite(format!("c[{j}]")));
        }
        if let Some(i) = self.b.iter().position(|v| !v.is_finite()) {
            return Err(LpError::NonFinite(format!("b[{i}]")));
        }
        if let Some(j) = self
            .lower_bounds
            .iter()
            .position(|v| v.is_nan() || *v == f64::INFINITY)
        {
            return Err(LpError::NonFinite(format!("lower_bounds[{j}]")));
        }
        Ok(())
    }

    /// Fixed-format text dump: one line per row, 17 significant digits.
    pub fn to_debug_text(&self) -> String {
        let mut out = String::new();
        let sense = match self.objective_sense {
            ObjectiveSense::Min => "MIN",
            ObjectiveSense::Max => "MAX",
        };
        let _ = writeln!(
            out,
            "LP {sense} ROWS {} COLS {}",
            self.num_rows(),
            self.num_vars()
        );
        let fmt_row = |vals: &[f64]| -> String {
            vals.iter()
                .map(|v| format!("{v:>24.16e}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "{:<4}{}", "C", fmt_row(&self.c));
        let _ = writeln!(out, "{:<4}{}", "LB", fmt_row(&self.lower_bounds));
        for ((row, sense), rhs) in self.a.iter().zip(&self.row_sense).zip(&self.b) {
            let tag = match sense {
                RowSense::Eq => "EQ",
                RowSense::Le => "LE",
                RowSense::Ge => "GE",
            };
            let _ = writeln!(out, "{tag:<4}{} {rhs:>24.16e}", fmt_row(row));
        }
        out
    }

    /// Largest violation of the row constraints at `x`.
    pub fn row_residual(&self, x: &[f64]) -> f64 {
        self.a
            .iter()
            .zip(&self.row_sense)
            .zip(&self.b)
            .map(|((row, sense), rhs)| {
                let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
                match sense {
                    RowSense::Eq => (lhs - rhs).abs(),
                    RowSense::Le => (lhs - rhs).max(0.0),
                    RowSense::Ge => (rhs - lhs).max(0.0),
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// A basic variable of the internal standard form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BasicVar {
    /// Original variable index (either half of a split free variable).
    Structural(usize),
    /// Slack or surplus of the given row.
    Slack(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values; empty unless optimal.
    pub x: Vec<f64>,
    /// Objective in the caller's sense; NaN unless optimal.
    pub objective: f64,
    pub basis: Vec<BasicVar>,
}

impl LpSolution {
    fn without_point(status: LpStatus) -> Self {
        Self {
            status,
            x: Vec::new(),
            objective: f64::NAN,
            basis: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy)]
enum ColumnOrigin {
    /// `x_j = lb_j + col`
    Shifted(usize),
    /// `x_j = col_plus - col_minus`
    FreePlus(usize),
    FreeMinus(usize),
    Slack(usize),
    Artificial,
}

/// Equality standard form `min c·z, A z = b, z >= 0` derived from an LP.
struct StandardForm {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    origin: Vec<ColumnOrigin>,
    col_scale: Vec<f64>,
    /// Slack column with coefficient +1 in each row, if any.
    unit_slack: Vec<Option<usize>>,
}

impl StandardForm {
    fn from_lp(lp: &LinearProgram) -> Self {
        let m = lp.num_rows();
        let sign = match lp.objective_sense {
            ObjectiveSense::Min => 1.0,
            ObjectiveSense::Max => -1.0,
        };
        let mut origin = Vec::new();
        let mut cols: Vec<Vec<f64>> = Vec::new();
        let mut c = Vec::new();
        let mut b = lp.b.clone();
        for (j, &lb) in lp.lower_bounds.iter().enumerate() {
            let col: Vec<f64> = lp.a.iter().map(|row| row[j]).collect();
            if lb == f64::NEG_INFINITY {
                origin.push(ColumnOrigin::FreePlus(j));
                c.push(sign * lp.c[j]);
                cols.push(col.clone());
                origin.push(ColumnOrigin::FreeMinus(j));
                c.push(-sign * lp.c[j]);
                cols.push(col.iter().map(|v| -v).collect());
            } else {
                if lb != 0.0 {
                    for (bi, a) in b.iter_mut().zip(&col) {
                        *bi -= a * lb;
                    }
                }
                origin.push(ColumnOrigin::Shifted(j));
                c.push(sign * lp.c[j]);
                cols.push(col);
            }
        }
        let mut slack_col = vec![None; m];
        for (i, sense) in lp.row_sense.iter().enumerate() {
            let coef = match sense {
                RowSense::Eq => continue,
                RowSense::Le => 1.0,
                RowSense::Ge => -1.0,
            };
            let mut col = vec![0.0; m];
            col[i] = coef;
            slack_col[i] = Some(cols.len());
            origin.push(ColumnOrigin::Slack(i));
            c.push(0.0);
            cols.push(col);
        }
        let ncols = cols.len();
        let mut a = vec![vec![0.0; ncols]; m];
        for (j, col) in cols.iter().enumerate() {
            for i in 0..m {
                a[i][j] = col[i];
            }
        }

        // Max-abs equilibration: rows first, then columns.
        for (i, row) in a.iter_mut().enumerate() {
            let big = row.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
            if big > 0.0 {
                row.iter_mut().for_each(|v| *v /= big);
                b[i] /= big;
            }
        }
        let mut col_scale = vec![1.0; ncols];
        for (j, s) in col_scale.iter_mut().enumerate() {
            let big = a.iter().fold(0.0_f64, |acc, row| acc.max(row[j].abs()));
            if big > 0.0 {
                *s = 1.0 / big;
                for row in a.iter_mut() {
                    row[j] /= big;
                }
                c[j] /= big;
            }
        }

        // Objective scaling keeps the reduced-cost tolerance relative.
        let cmax = c.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if cmax > 0.0 {
            c.iter_mut().for_each(|v| *v /= cmax);
        }

        let mut unit_slack = vec![None; m];
        for i in 0..m {
            if b[i] < 0.0 {
                b[i] = -b[i];
                a[i].iter_mut().for_each(|v| *v = -*v);
            }
            if let Some(j) = slack_col[i] {
                if a[i][j] > 0.0 {
                    unit_slack[i] = Some(j);
                }
            }
        }

        Self {
            a,
            b,
            c,
            origin,
            col_scale,
            unit_slack,
        }
    }
}

/// Dense tableau; row `rows` holds reduced costs and `-z` in the last column.
struct Tableau {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    /// Columns allowed to enter the basis.
    enterable: Vec<bool>,
    /// Constraint rows dropped as redundant after phase one.
    dead_row: Vec<bool>,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn objective(&self) -> f64 {
        -self.rhs(self.rows)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let p = self.data[pr * w + pc];
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v /= p;
        }
        self.data[pr * w + pc] = 1.0;
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[r * w..(r + 1) * w];
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Load `cost` into the objective row and price out the current basis.
    fn set_objective(&mut self, cost: &[f64]) {
        let w = self.width();
        let obj = self.rows;
        for j in 0..w {
            self.data[obj * w + j] = if j < self.cols { cost[j] } else { 0.0 };
        }
        for r in 0..self.rows {
            if self.dead_row[r] {
                continue;
            }
            let cb = cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            for j in 0..w {
                self.data[obj * w + j] -= cb * self.data[r * w + j];
            }
        }
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let obj = self.rows;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.cols {
            if !self.enterable[j] {
                continue;
            }
            let d = self.at(obj, j);
            if d < -OPTIMALITY_TOL {
                if bland {
                    return Some(j);
                }
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn leaving(&self, col: usize, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64, f64)> = None;
        for r in 0..self.rows {
            if self.dead_row[r] {
                continue;
            }
            let a = self.at(r, col);
            if a <= PIVOT_TOL {
                continue;
            }
            let ratio = self.rhs(r).max(0.0) / a;
            best = match best {
                None => Some((r, ratio, a)),
                Some((br, bratio, ba)) => {
                    let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs());
                    let better = if tie {
                        if bland {
                            self.basis[r] < self.basis[br]
                        } else {
                            a > ba
                        }
                    } else {
                        ratio < bratio
                    };
                    if better {
                        Some((r, ratio, a))
                    } else {
                        Some((br, bratio, ba))
                    }
                }
            };
        }
        best.map(|(r, _, _)| r)
    }

    fn optimize(&mut self) -> Result<PhaseEnd, LpError> {
        let scale = self.rows + self.cols;
        let stall_limit = 5 * scale;
        let iter_limit = 200 * scale + 1000;
        let mut bland = false;
        let mut stalled = 0usize;
        let mut last = self.objective();
        for _ in 0..iter_limit {
            let Some(col) = self.entering(bland) else {
                return Ok(PhaseEnd::Optimal);
            };
            let Some(row) = self.leaving(col, bland) else {
                return Ok(PhaseEnd::Unbounded);
            };
            self.pivot(row, col);
            let z = self.objective();
            if z < last - 1e-12 * (1.0 + last.abs()) {
                stalled = 0;
                last = z;
            } else {
                stalled += 1;
                if stalled > stall_limit {
                    bland = true;
                }
            }
        }
        Err(LpError::NumericalBreakdown(format!(
            "iteration limit {iter_limit} reached"
        )))
    }
}

/// Solve `B z_B = b` on the live rows for the final basis.
fn refine_basic_solution(sf: &StandardForm, tab: &Tableau) -> Option<Vec<f64>> {
    let live: Vec<usize> = (0..tab.rows).filter(|&r| !tab.dead_row[r]).collect();
    let k = live.len();
    let mut mat: Vec<Vec<f64>> = live
        .iter()
        .map(|&r| {
            let mut row: Vec<f64> = live
                .iter()
                .map(|&br| column_entry(sf, r, tab.basis[br]))
                .collect();
            row.push(sf.b[r]);
            row
        })
        .collect();
    for col in 0..k {
        let piv = (col..k).max_by(|&p, &q| mat[p][col].abs().total_cmp(&mat[q][col].abs()))?;
        if mat[piv][col].abs() < 1e-14 {
            return None;
        }
        mat.swap(col, piv);
        for r in col + 1..k {
            let f = mat[r][col] / mat[col][col];
            if f != 0.0 {
                for c in col..=k {
                    mat[r][c] -= f * mat[col][c];
                }
            }
        }
    }
    let mut z = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| mat[r][c] * z[c]).sum();
        z[r] = (mat[r][k] - s) / mat[r][r];
    }
    Some(z)
}

fn column_entry(sf: &StandardForm, row: usize, col: usize) -> f64 {
    if col < sf.c.len() {
        sf.a[row][col]
    } else {
        // artificial columns are unit vectors in creation order
        0.0
    }
}

/// Solve `lp` by the two-phase primal simplex method.
pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let sf = StandardForm::from_lp(lp);
    let m = sf.b.len();
    let n_std = sf.c.len();

    let mut origin = sf.origin.clone();
    let mut basis = Vec::with_capacity(m);
    let mut artificial_rows = Vec::new();
    for i in 0..m {
        match sf.unit_slack[i] {
            Some(j) => basis.push(j),
            None => {
                basis.push(n_std + artificial_rows.len());
                artificial_rows.push(i);
                origin.push(ColumnOrigin::Artificial);
            }
        }
    }
    let cols = n_std + artificial_rows.len();
    let width = cols + 1;
    let mut data = vec![0.0; (m + 1) * width];
    for i in 0..m {
        data[i * width..i * width + n_std].copy_from_slice(&sf.a[i]);
        data[i * width + cols] = sf.b[i];
    }
    for (k, &i) in artificial_rows.iter().enumerate() {
        data[i * width + n_std + k] = 1.0;
    }
    let mut tab = Tableau {
        rows: m,
        cols,
        data,
        basis,
        enterable: vec![true; cols],
        dead_row: vec![false; m],
    };
    // Unit-slack rows start basic; normalise to exact 1.
    for i in 0..m {
        if let Some(j) = sf.unit_slack[i] {
            let p = tab.at(i, j);
            if p != 1.0 {
                for v in &mut tab.data[i * width..(i + 1) * width] {
                    *v /= p;
                }
            }
        }
    }

    if !artificial_rows.is_empty() {
        let mut phase1_cost = vec![0.0; cols];
        for c in phase1_cost.iter_mut().skip(n_std) {
            *c = 1.0;
        }
        tab.set_objective(&phase1_cost);
        match tab.optimize()? {
            PhaseEnd::Optimal => {}
            PhaseEnd::Unbounded => {
                return Err(LpError::NumericalBreakdown(
                    "phase one reported unbounded".into(),
                ))
            }
        }
        let bnorm = sf.b.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if tab.objective() > FEASIBILITY_TOL * (1.0 + bnorm) {
            return Ok(LpSolution::without_point(LpStatus::Infeasible));
        }
        for j in n_std..cols {
            tab.enterable[j] = false;
        }
        // Drive zero-level artificials out of the basis.
        for r in 0..m {
            if tab.basis[r] < n_std {
                continue;
            }
            let candidate = (0..n_std)
                .filter(|&j| tab.at(r, j).abs() > 1e-9)
                .max_by(|&p, &q| tab.at(r, p).abs().total_cmp(&tab.at(r, q).abs()));
            match candidate {
                Some(j) => tab.pivot(r, j),
                None => tab.dead_row[r] = true,
            }
        }
    }

    let mut phase2_cost = sf.c.clone();
    phase2_cost.resize(cols, 0.0);
    tab.set_objective(&phase2_cost);
    match tab.optimize()? {
        PhaseEnd::Optimal => {}
        PhaseEnd::Unbounded => return Ok(LpSolution::without_point(LpStatus::Unbounded)),
    }

    let mut z = vec![0.0; n_std];
    let refined = refine_basic_solution(&sf, &tab);
    let live: Vec<usize> = (0..m).filter(|&r| !tab.dead_row[r]).collect();
    for (k, &r) in live.iter().enumerate() {
        let col = tab.basis[r];
        if col < n_std {
            let v = refined.as_ref().map_or(tab.rhs(r), |zr| zr[k]);
            z[col] = v.max(0.0);
        }
    }

    let n = lp.num_vars();
    let mut x = vec![0.0; n];
    for (j, o) in sf.origin.iter().enumerate() {
        let v = z[j] * sf.col_scale[j];
        match *o {
            ColumnOrigin::Shifted(k) => x[k] = lp.lower_bounds[k] + v,
            ColumnOrigin::FreePlus(k) => x[k] += v,
            ColumnOrigin::FreeMinus(k) => x[k] -= v,
            ColumnOrigin::Slack(_) | ColumnOrigin::Artificial => {}
        }
    }

    let bnorm = lp.b.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let residual = lp.row_residual(&x);
    if residual > 1e-7 * (1.0 + bnorm) {
        return Err(LpError::NumericalBreakdown(format!(
            "primal residual {residual:.3e} exceeds tolerance"
        )));
    }

    let basis = live
        .iter()
        .filter_map(|&r| match origin[tab.basis[r]] {
            ColumnOrigin::Shifted(k) | ColumnOrigin::FreePlus(k) | ColumnOrigin::FreeMinus(k) => {
                Some(BasicVar::Structural(k))
            }
            ColumnOrigin::Slack(i) => Some(BasicVar::Slack(i)),
            ColumnOrigin::Artificial => None,
        })
        .collect();

    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective_at(&x),
        x,
        basis,
    })
}
