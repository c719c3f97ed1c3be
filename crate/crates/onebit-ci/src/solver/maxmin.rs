//! Box-constrained max-min linear programs.
//!
//! Solves
//!
//! ```text
//! maximize   t
//! subject to t <= a_l' x + g_l   (inequality rows)
//!            t  = a_l' x + g_l   (equality rows)
//!            |x_i| <= b
//! ```
//!
//! with a two-phase primal simplex on the standard minimization form.
//! The solver is deterministic: Dantzig pricing with lowest-index
//! tie-breaking, switching to Bland's rule on degenerate stalls so cycling
//! is impossible, and lowest-basis-index tie-breaking in the ratio test.
//! Row duals and bound duals are recovered from the reduced costs of the
//! final tableau, so every solution carries a KKT certificate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Feasibility/optimality tolerance for the simplex.
pub const LP_TOL: f64 = 1e-9;
/// Consecutive non-improving pivots before Bland's rule engages.
const STALL_LIMIT: u32 = 64;
/// Hard pivot cap; hitting it indicates a numerical breakdown.
const MAX_PIVOTS: usize = 500_000;
/// Phase-1 objective above this value means the problem is infeasible.
const INFEASIBILITY_TOL: f64 = 1e-8;

/// Problem data. `rows` is `m x n`; row `l` contributes the constraint
/// `t <=/= rows[l] . x + offsets[l]`.
#[derive(Debug, Clone)]
pub struct MaxMinLp {
    pub rows: DMatrix<f64>,
    pub offsets: DVector<f64>,
    /// Indices of rows constrained to equality (QAM inner set).
    pub eq_rows: Vec<usize>,
    /// Box half-width `b > 0`.
    pub box_bound: f64,
}

impl MaxMinLp {
    pub fn new(rows: DMatrix<f64>, offsets: DVector<f64>, eq_rows: Vec<usize>, box_bound: f64) -> Self {
        assert_eq!(rows.nrows(), offsets.len(), "one offset per row");
        assert!(box_bound > 0.0, "box bound must be positive");
        assert!(eq_rows.iter().all(|&l| l < rows.nrows()));
        Self {
            rows,
            offsets,
            eq_rows,
            box_bound,
        }
    }

    /// Inequality-only problem (the PSK relaxations).
    pub fn inequalities(rows: DMatrix<f64>, offsets: DVector<f64>, box_bound: f64) -> Self {
        Self::new(rows, offsets, Vec::new(), box_bound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

/// Lagrange multipliers of the max-min LP: `beta` for the `t`-rows, `mu`
/// for the upper box bounds `x_i <= b`, `nu` for the lower bounds
/// `-x_i <= b`.
#[derive(Debug, Clone)]
pub struct Duals {
    pub beta: DVector<f64>,
    pub mu: DVector<f64>,
    pub nu: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub t: f64,
    pub duals: Duals,
    pub status: LpStatus,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn infeasible(m: usize, n: usize) -> Self {
        Self {
            x: DVector::zeros(n),
            t: 0.0,
            duals: Duals {
                beta: DVector::zeros(m),
                mu: DVector::zeros(n),
                nu: DVector::zeros(n),
            },
            status: LpStatus::Infeasible,
        }
    }
}

/// Residuals of the KKT system of the max-min LP at a primal/dual pair.
#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    /// `|1' beta - 1|`.
    pub stationarity_t: f64,
    /// `|| -M' beta + mu - nu ||_inf`.
    pub stationarity_x: f64,
    /// Worst complementary-slackness product.
    pub complementary: f64,
    /// Worst negativity among duals required to be nonnegative.
    pub dual_feasibility: f64,
    /// Worst primal constraint violation.
    pub primal_feasibility: f64,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.stationarity_t
            .max(self.stationarity_x)
            .max(self.complementary)
            .max(self.dual_feasibility)
            .max(self.primal_feasibility)
    }
}

/// Evaluates the KKT residuals of `sol` for the max-min LP `p`.
pub fn kkt_residuals(p: &MaxMinLp, sol: &LpSolution) -> KktReport {
    let m = p.rows.nrows();
    let n = p.rows.ncols();
    let b = p.box_bound;
    let duals = &sol.duals;
    let mut is_eq = vec![false; m];
    for &l in &p.eq_rows {
        is_eq[l] = true;
    }

    let stationarity_t = (duals.beta.sum() - 1.0).abs();

    let grad = -p.rows.transpose() * &duals.beta + &duals.mu - &duals.nu;
    let stationarity_x = grad.amax();

    let mut complementary = 0.0f64;
    let mut dual_feasibility = 0.0f64;
    let mut primal_feasibility = 0.0f64;
    for l in 0..m {
        let slack = sol.t - p.rows.row(l).transpose().dot(&sol.x) - p.offsets[l];
        if is_eq[l] {
            primal_feasibility = primal_feasibility.max(slack.abs());
        } else {
            primal_feasibility = primal_feasibility.max(slack.max(0.0));
            complementary = complementary.max((duals.beta[l] * slack).abs());
            dual_feasibility = dual_feasibility.max(-duals.beta[l]);
        }
    }
    for i in 0..n {
        complementary = complementary.max((duals.mu[i] * (sol.x[i] - b)).abs());
        complementary = complementary.max((duals.nu[i] * (sol.x[i] + b)).abs());
        dual_feasibility = dual_feasibility.max(-duals.mu[i]).max(-duals.nu[i]);
        primal_feasibility = primal_feasibility.max(sol.x[i].abs() - b);
    }

    KktReport {
        stationarity_t,
        stationarity_x,
        complementary,
        dual_feasibility,
        primal_feasibility,
    }
}

/// Solves the max-min LP. Infeasibility (possible only with equality rows)
/// is reported through the returned status; structural failures are errors.
pub fn solve_maxmin_box(p: &MaxMinLp) -> Result<LpSolution> {
    let m = p.rows.nrows();
    let n = p.rows.ncols();
    if n == 0 || m == 0 {
        return Err(Error::EmptyProblem);
    }
    let b = p.box_bound;

    let mut is_eq = vec![false; m];
    for &l in &p.eq_rows {
        is_eq[l] = true;
    }

    // Standard-form variables, in column order:
    //   t+ t- | u_1..u_n (= x + b) | w_1..w_n (box slacks) | row slacks | artificials
    let col_tp = 0usize;
    let col_tm = 1usize;
    let col_u = |i: usize| 2 + i;
    let col_w = |i: usize| 2 + n + i;
    let mut next_col = 2 + 2 * n;
    let mut slack_col = vec![None; m];
    for l in 0..m {
        if !is_eq[l] {
            slack_col[l] = Some(next_col);
            next_col += 1;
        }
    }

    let nrows = m + n;
    let mut rhs = vec![0.0f64; nrows];
    let mut flipped = vec![false; nrows];
    // Constraint rows: t+ - t- - a_l . u (+ slack) = g_l - b * sum(a_l).
    for l in 0..m {
        rhs[l] = p.offsets[l] - b * p.rows.row(l).sum();
        if rhs[l] < 0.0 {
            rhs[l] = -rhs[l];
            flipped[l] = true;
        }
    }
    // Box rows: u_i + w_i = 2b.
    for i in 0..n {
        rhs[m + i] = 2.0 * b;
    }

    let mut art_col = vec![None; nrows];
    for l in 0..m {
        if is_eq[l] || flipped[l] {
            art_col[l] = Some(next_col);
            next_col += 1;
        }
    }
    let ncols = next_col;
    let n_real = 2 + 2 * n + slack_col.iter().flatten().count();

    // Dense row-major tableau.
    let mut a = vec![0.0f64; nrows * ncols];
    let idx = |r: usize, c: usize| r * ncols + c;
    for l in 0..m {
        let sign = if flipped[l] { -1.0 } else { 1.0 };
        a[idx(l, col_tp)] = sign;
        a[idx(l, col_tm)] = -sign;
        for i in 0..n {
            a[idx(l, col_u(i))] = -sign * p.rows[(l, i)];
        }
        if let Some(c) = slack_col[l] {
            a[idx(l, c)] = sign;
        }
        if let Some(c) = art_col[l] {
            a[idx(l, c)] = 1.0;
        }
    }
    for i in 0..n {
        a[idx(m + i, col_u(i))] = 1.0;
        a[idx(m + i, col_w(i))] = 1.0;
    }

    // Initial basis: box slacks, row slacks where available, else artificials.
    let mut basis = vec![0usize; nrows];
    for l in 0..m {
        basis[l] = art_col[l].or(slack_col[l]).expect("every row has a basis column");
    }
    for i in 0..n {
        basis[m + i] = col_w(i);
    }

    // Reduced-cost rows for both phases, maintained through the pivots.
    // Phase 1 minimizes the artificial sum, phase 2 minimizes -t.
    let mut z1 = vec![0.0f64; ncols];
    let mut z2 = vec![0.0f64; ncols];
    for c in art_col.iter().flatten() {
        z1[*c] = 1.0;
    }
    z2[col_tp] = -1.0;
    z2[col_tm] = 1.0;
    for r in 0..nrows {
        if art_col.iter().flatten().any(|c| *c == basis[r]) {
            for c in 0..ncols {
                z1[c] -= a[idx(r, c)];
            }
        }
    }

    let mut tab = Tableau {
        a,
        rhs,
        z1,
        z2,
        basis,
        nrows,
        ncols,
        pivots: 0,
    };

    let has_artificials = art_col.iter().any(Option::is_some);
    if has_artificials {
        tab.optimize(Phase::One, n_real)?;
        let infeasibility: f64 = (0..nrows)
            .filter(|&r| tab.basis[r] >= n_real)
            .map(|r| tab.rhs[r])
            .sum();
        if infeasibility > INFEASIBILITY_TOL {
            return Ok(LpSolution::infeasible(m, n));
        }
        tab.expel_artificials(n_real);
    }
    tab.optimize(Phase::Two, n_real)?;

    // Primal values.
    let mut vals = vec![0.0f64; ncols];
    for r in 0..nrows {
        vals[tab.basis[r]] = tab.rhs[r];
    }
    let t = vals[col_tp] - vals[col_tm];
    let x = DVector::from_iterator(n, (0..n).map(|i| vals[col_u(i)] - b));

    // Duals from the final reduced costs. A column whose original
    // coefficients are the unit vector e_r with zero cost has reduced cost
    // -y_r; artificials were added after any row flip, so unflip those.
    let mut beta = DVector::zeros(m);
    for l in 0..m {
        let y_l = if let Some(c) = art_col[l] {
            let y_flipped = -tab.z2[c];
            if flipped[l] {
                -y_flipped
            } else {
                y_flipped
            }
        } else {
            -tab.z2[slack_col[l].expect("row without artificial has a slack")]
        };
        beta[l] = -y_l;
    }
    let mu = DVector::from_iterator(n, (0..n).map(|i| tab.z2[col_w(i)]));
    let nu = DVector::from_iterator(n, (0..n).map(|i| tab.z2[col_u(i)]));

    let sol = LpSolution {
        x,
        t,
        duals: Duals { beta, mu, nu },
        status: LpStatus::Optimal,
    };
    if super::certify::enabled() {
        super::certify::record_lp(kkt_residuals(p, &sol).max_residual());
    }
    Ok(sol)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

struct Tableau {
    a: Vec<f64>,
    rhs: Vec<f64>,
    z1: Vec<f64>,
    z2: Vec<f64>,
    basis: Vec<usize>,
    nrows: usize,
    ncols: usize,
    pivots: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.ncols + c]
    }

    fn objective(&self, phase: Phase, n_real: usize) -> f64 {
        match phase {
            // Sum of basic artificial values.
            Phase::One => (0..self.nrows)
                .filter(|&r| self.basis[r] >= n_real)
                .map(|r| self.rhs[r])
                .sum(),
            // -t+ + t-.
            Phase::Two => {
                let mut v = 0.0;
                for r in 0..self.nrows {
                    if self.basis[r] == 0 {
                        v -= self.rhs[r];
                    } else if self.basis[r] == 1 {
                        v += self.rhs[r];
                    }
                }
                v
            }
        }
    }

    /// Runs the simplex to optimality for the given phase. Artificial
    /// columns (indices `>= n_real`) never enter the basis.
    fn optimize(&mut self, phase: Phase, n_real: usize) -> Result<()> {
        let mut bland = false;
        let mut stall: u32 = 0;
        let mut prev_obj = self.objective(phase, n_real);
        loop {
            let z = match phase {
                Phase::One => &self.z1,
                Phase::Two => &self.z2,
            };
            let entering = if bland {
                (0..n_real).find(|&c| z[c] < -LP_TOL)
            } else {
                let mut best = None;
                let mut best_z = -LP_TOL;
                for c in 0..n_real {
                    if z[c] < best_z {
                        best_z = z[c];
                        best = Some(c);
                    }
                }
                best
            };
            let Some(pc) = entering else {
                return Ok(());
            };

            // Ratio test with lowest-basis-index tie-breaking.
            let mut best_ratio = f64::INFINITY;
            let mut pr: Option<usize> = None;
            for r in 0..self.nrows {
                let coef = self.at(r, pc);
                if coef > LP_TOL {
                    let ratio = self.rhs[r] / coef;
                    match pr {
                        None => {
                            best_ratio = ratio;
                            pr = Some(r);
                        }
                        Some(cur) => {
                            let tol = 1e-12 * (1.0 + best_ratio.abs());
                            if ratio < best_ratio - tol {
                                best_ratio = ratio;
                                pr = Some(r);
                            } else if ratio <= best_ratio + tol {
                                best_ratio = best_ratio.min(ratio);
                                if self.basis[r] < self.basis[cur] {
                                    pr = Some(r);
                                }
                            }
                        }
                    }
                }
            }
            let Some(pr) = pr else {
                return Err(Error::Unbounded);
            };

            self.pivot(pr, pc);
            if self.pivots > MAX_PIVOTS {
                return Err(Error::SimplexStall(MAX_PIVOTS));
            }

            let obj = self.objective(phase, n_real);
            if prev_obj - obj > 1e-12 * (1.0 + prev_obj.abs()) {
                stall = 0;
                bland = false;
            } else {
                stall += 1;
                if stall >= STALL_LIMIT {
                    bland = true;
                }
            }
            prev_obj = obj;
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        self.pivots += 1;
        let ncols = self.ncols;
        let piv = self.a[pr * ncols + pc];
        let inv = 1.0 / piv;
        for c in 0..ncols {
            self.a[pr * ncols + c] *= inv;
        }
        self.rhs[pr] *= inv;
        self.a[pr * ncols + pc] = 1.0;

        for r in 0..self.nrows {
            if r == pr {
                continue;
            }
            let f = self.a[r * ncols + pc];
            if f != 0.0 {
                let (head, tail) = self.a.split_at_mut(pr.max(r) * ncols);
                let (row_a, row_p) = if r < pr {
                    (&mut head[r * ncols..r * ncols + ncols], &tail[..ncols])
                } else {
                    (&mut tail[..ncols], &head[pr * ncols..pr * ncols + ncols])
                };
                for (av, pv) in row_a.iter_mut().zip(row_p) {
                    *av -= f * pv;
                }
                self.a[r * ncols + pc] = 0.0;
                self.rhs[r] -= f * self.rhs[pr];
                if self.rhs[r] < 0.0 && self.rhs[r] > -1e-12 {
                    self.rhs[r] = 0.0;
                }
            }
        }
        for z in [&mut self.z1, &mut self.z2] {
            let f = z[pc];
            if f != 0.0 {
                let row_p = &self.a[pr * ncols..pr * ncols + ncols];
                for (zv, pv) in z.iter_mut().zip(row_p) {
                    *zv -= f * pv;
                }
                z[pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    /// After phase 1, pivot remaining zero-level artificials out of the
    /// basis. Rows that admit no pivot are redundant; their residual
    /// coefficients are cleared so later pivots cannot perturb them.
    fn expel_artificials(&mut self, n_real: usize) {
        for r in 0..self.nrows {
            if self.basis[r] < n_real {
                continue;
            }
            let pc = (0..n_real).find(|&c| self.at(r, c).abs() > 1e-7);
            match pc {
                Some(pc) => self.pivot(r, pc),
                None => {
                    for c in 0..n_real {
                        self.a[r * self.ncols + c] = 0.0;
                    }
                    self.rhs[r] = 0.0;
                }
            }
        }
    }
}
