//! A small dense linear-programming solver plus the two schedule programs
//! built on it.
//!
//! The solver is a textbook two-phase primal simplex on a dense tableau:
//!
//! * Maximization form: `max c.x` subject to equality and `<=` constraints,
//!   with per-variable lower bounds or free variables.
//! * Equalities become paired inequalities; lower bounds are shifted away;
//!   free variables are split into positive and negative parts. Everything
//!   then lives in the standard `A y <= b, y >= 0` form with slacks, and
//!   rows with negative right-hand sides get phase-1 artificials.
//! * Bland's smallest-index rule everywhere, so cycling is impossible;
//!   artificial columns are barred from re-entering the basis.
//! * Tolerances: a solution is accepted as feasible when the residual
//!   artificial mass is at most `1e-9`; pivots and reduced costs use the
//!   same `1e-9` cutoff.
//!
//! Problem sizes here are modest (schedules over at most `2^14` states and
//! a handful of rate rows), which dense arithmetic handles comfortably;
//! cut-set programs square that once relay counts get into the teens, so
//! expect those to be the slow path near the size cap.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinProgError {
    #[error("objective has {n} coefficients but {what} row {index} has {got}")]
    ShapeMismatch {
        what: &'static str,
        index: usize,
        n: usize,
        got: usize,
    },
    #[error("{0} bounds given for {1} variables")]
    BoundsMismatch(usize, usize),
    #[error("nonfinite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("program has no variables")]
    Empty,
    #[error("simplex iteration limit {0} exceeded")]
    IterationLimit(usize),
    #[error("no rate rows given")]
    EmptyRows,
    #[error("rate rows must share one length; row {index} has {got}, expected {expected}")]
    RaggedRows {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("equality set entry {index} out of range for {rows} rows (or repeated)")]
    BadEqualitySet { index: usize, rows: usize },
    #[error("program unexpectedly terminated {0:?}")]
    BadStatus(LpStatus),
    #[error("numerical failure: {0}")]
    Numerical(&'static str),
}

/// Admissible range of one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VarBound {
    /// `x >= l`.
    LowerBound(f64),
    /// Unrestricted sign.
    Free,
}

/// A linear program in maximization form.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    /// Maximize `objective . x`.
    pub objective: Vec<f64>,
    /// Rows `a . x == b`.
    pub eq_constraints: Vec<(Vec<f64>, f64)>,
    /// Rows `a . x <= b`.
    pub ineq_constraints: Vec<(Vec<f64>, f64)>,
    /// One entry per variable; empty means every variable has lower bound 0.
    pub bounds: Vec<VarBound>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver outcome. `x` and `value` are meaningful only when `status` is
/// [`LpStatus::Optimal`]; use [`LpSolution::optimal`] to unwrap safely.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub value: f64,
}

impl LpSolution {
    /// The optimum as `(x, value)`, or `None` if the program was
    /// infeasible or unbounded.
    pub fn optimal(&self) -> Option<(&[f64], f64)> {
        match self.status {
            LpStatus::Optimal => Some((&self.x, self.value)),
            _ => None,
        }
    }
}

const FEAS_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const RC_TOL: f64 = 1e-9;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// How an original variable maps into the nonnegative standard form.
enum ColMap {
    /// `x = y[col] + shift`
    Shifted(usize, f64),
    /// `x = y[pos] - y[neg]`
    Split(usize, usize),
}

struct Tableau {
    /// `m` rows, each `width` long; the last entry is the right-hand side.
    t: Vec<Vec<f64>>,
    /// Reduced-cost row; last entry holds the negated objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// Decision columns (everything before the right-hand side).
    ncols: usize,
    /// Columns at or beyond this index are artificials.
    art_start: usize,
    iterations: usize,
    cap: usize,
}

enum RunOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn width(&self) -> usize {
        self.ncols + 1
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.ncols]
    }

    /// Gaussian step: normalize row `r` on column `c`, eliminate `c`
    /// everywhere else (objective row included), and put `c` in the basis.
    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.t[r][c];
        let w = self.width();
        for v in self.t[r].iter_mut() {
            *v /= piv;
        }
        self.t[r][c] = 1.0;
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for j in 0..w {
                    row[j] -= f * pivot_row[j];
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for j in 0..w {
                self.obj[j] -= f * pivot_row[j];
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Rebuilds the reduced-cost row for objective coefficients `c`
    /// (padded with zeros past `c.len()`).
    fn price_out(&mut self, c: &[f64]) {
        let w = self.width();
        self.obj = vec![0.0; w];
        self.obj[..c.len()].copy_from_slice(c);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = if b < c.len() { c[b] } else { 0.0 };
            if cb != 0.0 {
                for j in 0..w {
                    self.obj[j] -= cb * self.t[i][j];
                }
            }
        }
        for &b in &self.basis {
            self.obj[b] = 0.0;
        }
    }

    /// Bland-rule simplex iterations until no reduced cost exceeds the
    /// tolerance (optimal) or an improving column has no blocking row
    /// (unbounded). `entering_limit` bars artificial columns in phase 1.
    fn run(&mut self, entering_limit: usize) -> Result<RunOutcome, LinProgError> {
        loop {
            let entering = (0..entering_limit).find(|&j| self.obj[j] > RC_TOL);
            let Some(c) = entering else {
                return Ok(RunOutcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.len() {
                let a = self.t[i][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr || (ratio == lr && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Ok(RunOutcome::Unbounded);
            };
            self.pivot(r, c);
            self.iterations += 1;
            if self.iterations > self.cap {
                return Err(LinProgError::IterationLimit(self.cap));
            }
        }
    }
}

fn validate(lp: &LinearProgram) -> Result<(), LinProgError> {
    let n = lp.objective.len();
    if n == 0 {
        return Err(LinProgError::Empty);
    }
    if lp.objective.iter().any(|v| !v.is_finite()) {
        return Err(LinProgError::NonFinite("objective"));
    }
    for (index, (a, b)) in lp.eq_constraints.iter().enumerate() {
        if a.len() != n {
            return Err(LinProgError::ShapeMismatch {
                what: "equality",
                index,
                n,
                got: a.len(),
            });
        }
        if a.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(LinProgError::NonFinite("equality constraint"));
        }
    }
    for (index, (a, b)) in lp.ineq_constraints.iter().enumerate() {
        if a.len() != n {
            return Err(LinProgError::ShapeMismatch {
                what: "inequality",
                index,
                n,
                got: a.len(),
            });
        }
        if a.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(LinProgError::NonFinite("inequality constraint"));
        }
    }
    if !lp.bounds.is_empty() && lp.bounds.len() != n {
        return Err(LinProgError::BoundsMismatch(lp.bounds.len(), n));
    }
    for b in &lp.bounds {
        if let VarBound::LowerBound(l) = b {
            if !l.is_finite() {
                return Err(LinProgError::NonFinite("bound"));
            }
        }
    }
    Ok(())
}

/// Solves the program with a two-phase dense simplex. Infeasibility and
/// unboundedness are reported through [`LpSolution::status`], not errors;
/// `Err` covers malformed input and iteration-limit blowups only.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LinProgError> {
    validate(lp)?;
    let n = lp.objective.len();

    // Map variables into the nonnegative standard form.
    let mut colmap = Vec::with_capacity(n);
    let mut nc = 0usize;
    for j in 0..n {
        let bound = lp.bounds.get(j).copied().unwrap_or(VarBound::LowerBound(0.0));
        match bound {
            VarBound::LowerBound(l) => {
                colmap.push(ColMap::Shifted(nc, l));
                nc += 1;
            }
            VarBound::Free => {
                colmap.push(ColMap::Split(nc, nc + 1));
                nc += 2;
            }
        }
    }

    // Equalities become <= pairs; all rows shift by the lower bounds.
    let mut std_rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut push_row = |a: &[f64], b: f64, negate: bool| {
        let sign = if negate { -1.0 } else { 1.0 };
        let mut row = vec![0.0; nc];
        let mut rhs = sign * b;
        for (j, &coef) in a.iter().enumerate() {
            if coef == 0.0 {
                continue;
            }
            let coef = sign * coef;
            match colmap[j] {
                ColMap::Shifted(c, l) => {
                    row[c] += coef;
                    rhs -= coef * l;
                }
                ColMap::Split(cp, cn) => {
                    row[cp] += coef;
                    row[cn] -= coef;
                }
            }
        }
        std_rows.push((row, rhs));
    };
    for (a, b) in &lp.eq_constraints {
        push_row(a, *b, false);
        push_row(a, *b, true);
    }
    for (a, b) in &lp.ineq_constraints {
        push_row(a, *b, false);
    }

    let m = std_rows.len();
    let slack_start = nc;
    let art_candidates: Vec<bool> = std_rows.iter().map(|(_, b)| *b < 0.0).collect();
    let n_art = art_candidates.iter().filter(|&&x| x).count();
    let art_start = nc + m;
    let ncols = nc + m + n_art;

    let mut t = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_art = art_start;
    for (i, (row, b)) in std_rows.iter().enumerate() {
        let mut full = vec![0.0; ncols + 1];
        let negate = art_candidates[i];
        let sign = if negate { -1.0 } else { 1.0 };
        for (j, &v) in row.iter().enumerate() {
            full[j] = sign * v;
        }
        full[slack_start + i] = sign;
        full[ncols] = sign * b;
        if negate {
            full[next_art] = 1.0;
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(slack_start + i);
        }
        t.push(full);
    }

    let cap = 1000 * (m + ncols) + 10_000;
    let mut tab = Tableau {
        t,
        obj: vec![0.0; ncols + 1],
        basis,
        ncols,
        art_start,
        iterations: 0,
        cap,
    };

    // Phase 1: drive the artificial mass to zero.
    if n_art > 0 {
        let mut c1 = vec![0.0; ncols];
        for c in c1.iter_mut().skip(art_start) {
            *c = -1.0;
        }
        tab.price_out(&c1);
        match tab.run(tab.art_start)? {
            RunOutcome::Optimal => {}
            RunOutcome::Unbounded => {
                return Err(LinProgError::Numerical("phase 1 reported unbounded"))
            }
        }
        // The objective row stores the negated value, and the phase-1
        // objective is -sum(artificials), so this cell is the artificial
        // mass itself.
        let art_mass = tab.obj[tab.ncols];
        if art_mass > FEAS_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                value: f64::NAN,
            });
        }

        // Pivot leftover artificials out of the basis, or drop their rows
        // as redundant when no real column can replace them.
        let mut i = 0;
        while i < tab.t.len() {
            if tab.basis[i] >= tab.art_start {
                let col = (0..tab.art_start).find(|&j| tab.t[i][j].abs() > PIVOT_TOL);
                match col {
                    Some(c) => tab.pivot(i, c),
                    None => {
                        tab.t.remove(i);
                        tab.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }

        // Strip artificial columns; tidy round-off on the right-hand sides.
        let art_start = tab.art_start;
        for row in &mut tab.t {
            row.drain(art_start..ncols);
        }
        tab.ncols = art_start;
        for row in &mut tab.t {
            let last = row.len() - 1;
            if row[last].abs() <= 1e-12 {
                row[last] = 0.0;
            }
        }
    }

    // Phase 2 on the real objective (zeros over the slack columns).
    let mut c2 = vec![0.0; tab.ncols];
    for (j, map) in colmap.iter().enumerate() {
        match *map {
            ColMap::Shifted(c, _) => c2[c] += lp.objective[j],
            ColMap::Split(cp, cn) => {
                c2[cp] += lp.objective[j];
                c2[cn] -= lp.objective[j];
            }
        }
    }
    tab.price_out(&c2);
    match tab.run(tab.ncols)? {
        RunOutcome::Unbounded => Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            value: f64::INFINITY,
        }),
        RunOutcome::Optimal => {
            let mut y = vec![0.0; tab.ncols];
            for (i, &b) in tab.basis.iter().enumerate() {
                y[b] = tab.rhs(i);
            }
            let x: Vec<f64> = colmap
                .iter()
                .map(|map| match *map {
                    ColMap::Shifted(c, l) => y[c] + l,
                    ColMap::Split(cp, cn) => y[cp] - y[cn],
                })
                .collect();
            // Recompute the value from the original objective; the tableau
            // copy accumulates round-off over pivots.
            let value = dot(&lp.objective, &x);
            debug_assert!(residuals_ok(lp, &x), "solution violates constraints");
            Ok(LpSolution {
                status: LpStatus::Optimal,
                x,
                value,
            })
        }
    }
}

#[allow(dead_code)] // referenced from debug_assert only
fn residuals_ok(lp: &LinearProgram, x: &[f64]) -> bool {
    let scale = 1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = 1e-6 * scale;
    for (a, b) in &lp.eq_constraints {
        if (dot(a, x) - b).abs() > tol {
            return false;
        }
    }
    for (a, b) in &lp.ineq_constraints {
        if dot(a, x) - b > tol {
            return false;
        }
    }
    for (j, &v) in x.iter().enumerate() {
        match lp.bounds.get(j).copied().unwrap_or(VarBound::LowerBound(0.0)) {
            VarBound::LowerBound(l) => {
                if v < l - tol {
                    return false;
                }
            }
            VarBound::Free => {}
        }
    }
    true
}

pub(crate) fn validate_rows(rate_rows: &[Vec<f64>]) -> Result<usize, LinProgError> {
    if rate_rows.is_empty() {
        return Err(LinProgError::EmptyRows);
    }
    let m = rate_rows[0].len();
    if m == 0 {
        return Err(LinProgError::EmptyRows);
    }
    for (index, row) in rate_rows.iter().enumerate() {
        if row.len() != m {
            return Err(LinProgError::RaggedRows {
                index,
                expected: m,
                got: row.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(LinProgError::NonFinite("rate row"));
        }
    }
    Ok(m)
}

/// Maximizes the worst row value over the probability simplex:
/// `max_p min_i rate_rows[i] . p`. Returns the maximizing distribution and
/// the optimum. The epigraph form (`max t` with `t <= row . p`) keeps this
/// a single LP.
pub fn maximin_lp(rate_rows: &[Vec<f64>]) -> Result<(Vec<f64>, f64), LinProgError> {
    let m = validate_rows(rate_rows)?;
    let n = m + 1; // p plus the epigraph variable t
    let mut objective = vec![0.0; n];
    objective[m] = 1.0;
    let mut simplex_row = vec![1.0; n];
    simplex_row[m] = 0.0;
    let mut ineqs = Vec::with_capacity(rate_rows.len());
    for row in rate_rows {
        let mut a = vec![0.0; n];
        for (j, &v) in row.iter().enumerate() {
            a[j] = -v;
        }
        a[m] = 1.0;
        ineqs.push((a, 0.0));
    }
    let mut bounds = vec![VarBound::LowerBound(0.0); n];
    bounds[m] = VarBound::Free;
    let lp = LinearProgram {
        objective,
        eq_constraints: vec![(simplex_row, 1.0)],
        ineq_constraints: ineqs,
        bounds,
    };
    let sol = solve_lp(&lp)?;
    match sol.optimal() {
        // A maximin over a nonempty simplex is always solvable.
        None => Err(LinProgError::BadStatus(sol.status)),
        Some((x, value)) => Ok((x[..m].to_vec(), value)),
    }
}

/// Maximizes `rate_rows[eq_set[0]] . p` over the simplex subject to all
/// rows in `eq_set` being equal. May legitimately return an infeasible
/// solution when the equal-rate face is empty.
pub fn equality_constrained_max(
    rate_rows: &[Vec<f64>],
    eq_set: &[usize],
) -> Result<LpSolution, LinProgError> {
    let m = validate_rows(rate_rows)?;
    let k = rate_rows.len();
    if eq_set.is_empty() {
        return Err(LinProgError::BadEqualitySet { index: 0, rows: k });
    }
    let mut seen = vec![false; k];
    for &i in eq_set {
        if i >= k || seen[i] {
            return Err(LinProgError::BadEqualitySet { index: i, rows: k });
        }
        seen[i] = true;
    }
    let lead = eq_set[0];
    let mut eqs = vec![(vec![1.0; m], 1.0)];
    for &i in &eq_set[1..] {
        let row: Vec<f64> = (0..m)
            .map(|j| rate_rows[lead][j] - rate_rows[i][j])
            .collect();
        eqs.push((row, 0.0));
    }
    let lp = LinearProgram {
        objective: rate_rows[lead].clone(),
        eq_constraints: eqs,
        ineq_constraints: Vec::new(),
        bounds: Vec::new(),
    };
    solve_lp(&lp)
}
