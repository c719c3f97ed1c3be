//! Branch-and-bound over the 1-bit sign patterns.
//!
//! The partial variants (P-BB) branch only over the residual entries of a
//! relaxed solution that sit strictly inside the box; the boundary entries
//! stay frozen at their quantized values. Bounds come from the convex
//! relaxations: the max-min LP for PSK, the box-constrained least squares
//! at fixed precoding factor for QAM. The full variant (F-BB) applies the
//! same machinery with every entry residual and exists as a small-scale
//! optimality oracle, depth-first to bound memory.
//!
//! All searches minimize: the PSK objective is the negated max-min margin,
//! the QAM objective is the MSE.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expand::DacAlphabet;
use crate::geometry::{audit_boundary, default_boundary_eps, CiProblem};
use crate::solver::{solve_box_ls, solve_maxmin_box, MaxMinLp};

/// Bound slack: a child is pruned only when its lower bound clears the
/// incumbent by this margin, so LP-level noise cannot discard an optimum.
const PRUNE_EPS: f64 = 1e-9;
/// F-BB and the exhaustive oracle refuse spaces larger than these.
const FBB_MAX_DIM: usize = 24;
const ORACLE_MAX_DIM: usize = 20;

/// Fixed/residual index split of a real-expanded vector.
#[derive(Debug, Clone)]
pub struct SplitState {
    /// Indices frozen at 1-bit values, ascending.
    pub fixed_idx: Vec<usize>,
    /// Indices left to the search, ascending.
    pub residual_idx: Vec<usize>,
    /// Quantized values for `fixed_idx`.
    pub fixed_vals: Vec<f64>,
}

impl SplitState {
    /// Splits a relaxed solution: entries strictly inside the box (by
    /// `eps`) become residual, everything else is frozen at its sign.
    pub fn from_relaxed(x_e: &DVector<f64>, dac: &DacAlphabet, eps: f64) -> Result<Self> {
        let audit = audit_boundary(x_e, dac, eps)?;
        let mut residual_iter = audit.interior.iter().peekable();
        let mut fixed_idx = Vec::with_capacity(x_e.len() - audit.interior.len());
        let mut fixed_vals = Vec::with_capacity(fixed_idx.capacity());
        for n in 0..x_e.len() {
            if residual_iter.peek() == Some(&&n) {
                residual_iter.next();
            } else {
                fixed_idx.push(n);
                fixed_vals.push(dac.quantize_component(x_e[n]));
            }
        }
        Ok(Self {
            fixed_idx,
            residual_idx: audit.interior,
            fixed_vals,
        })
    }

    /// Everything residual (the F-BB split).
    pub fn full(dim: usize) -> Self {
        Self {
            fixed_idx: Vec::new(),
            residual_idx: (0..dim).collect(),
            fixed_vals: Vec::new(),
        }
    }
}

/// Search counters: `nodes_visited` counts every child whose relaxation was
/// solved (two per expansion), `depth_iterations` the deepest pin level
/// reached, and `ub_trace` the incumbent objective after initialization and
/// after each level (P-BB) or expansion (F-BB).
#[derive(Debug, Clone, Default)]
pub struct BbDiagnostics {
    pub nodes_visited: u64,
    pub depth_iterations: u64,
    pub ub_trace: Vec<f64>,
}

/// Objective minimized by the search and the oracles.
#[derive(Debug, Clone, Copy)]
pub enum BbObjective {
    /// `-min_l Lambda_l`: the negated constructive-interference margin.
    PskMaxMin,
    /// `||s_E - beta H_E x_E||^2 + beta^2 K sigma^2` at fixed `beta`.
    QamMse { beta: f64, sigma2: f64 },
}

/// Direct objective evaluation of a complete real-expanded vector.
pub fn completion_objective(p: &CiProblem, obj: &BbObjective, x_e: &DVector<f64>) -> f64 {
    match *obj {
        BbObjective::PskMaxMin => -(p.scaling_matrix() * x_e).min(),
        BbObjective::QamMse { beta, sigma2 } => {
            crate::geometry::mse_objective(x_e, beta, p, sigma2)
        }
    }
}

/// Adaptive subdivision rule: the unpinned entry farthest from its
/// quantized value; ties resolve to the lowest slot index.
pub fn select_branch_index(relaxed: &[f64], pinned: &[bool], dac: &DacAlphabet) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (&v, &is_pinned)) in relaxed.iter().zip(pinned).enumerate() {
        if is_pinned {
            continue;
        }
        let d = (v - dac.quantize_component(v)).abs();
        if best.map_or(true, |(_, bd)| d > bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::NoBranchCandidates)
}

/// One node of the search tree over the residual slots.
struct Node {
    /// Residual slot values: pinned slots hold their sign, free slots the
    /// latest relaxed values.
    vals: Vec<f64>,
    pinned: Vec<bool>,
    depth: usize,
    lb: f64,
    /// Per-row contribution of everything already fixed or pinned:
    /// `M (fixed + pinned)` for PSK, `s_E - beta H (fixed + pinned)` for QAM.
    carry: DVector<f64>,
}

/// The shared bounding context.
struct Search<'a> {
    p: &'a CiProblem,
    obj: BbObjective,
    split: &'a SplitState,
    /// Columns of `M` (PSK) or `beta * H_E` (QAM) at the residual indices.
    residual_cols: Vec<DVector<f64>>,
    eq_rows: Vec<usize>,
    scale: f64,
    incumbent: Vec<f64>,
    ub0: f64,
    diag: BbDiagnostics,
}

impl<'a> Search<'a> {
    fn new(
        p: &'a CiProblem,
        obj: BbObjective,
        split: &'a SplitState,
        incumbent_residual: Vec<f64>,
    ) -> Self {
        let matrix: DMatrix<f64> = match obj {
            BbObjective::PskMaxMin => p.scaling_matrix().clone(),
            BbObjective::QamMse { beta, .. } => beta * p.expanded_channel(),
        };
        let residual_cols = split
            .residual_idx
            .iter()
            .map(|&i| matrix.column(i).into_owned())
            .collect();
        let eq_rows = match obj {
            BbObjective::PskMaxMin => p
                .partition()
                .map(|q| q.inner.clone())
                .unwrap_or_default(),
            BbObjective::QamMse { .. } => Vec::new(),
        };
        let scale = p.dac().scale();
        let mut search = Self {
            p,
            obj,
            split,
            residual_cols,
            eq_rows,
            scale,
            incumbent: incumbent_residual,
            ub0: f64::NAN,
            diag: BbDiagnostics::default(),
        };
        search.ub0 = search.residual_objective(&search.incumbent.clone());
        search.diag.ub_trace.push(search.ub0);
        search
    }

    /// Carry of the frozen entries alone.
    fn base_carry(&self) -> DVector<f64> {
        let rows = self.p.scaling_matrix().nrows();
        match self.obj {
            BbObjective::PskMaxMin => {
                let mut c = DVector::zeros(rows);
                for (&i, &v) in self.split.fixed_idx.iter().zip(&self.split.fixed_vals) {
                    c += v * self.p.scaling_matrix().column(i);
                }
                c
            }
            BbObjective::QamMse { beta, .. } => {
                let mut c = self.p.expanded_symbols().clone();
                for (&i, &v) in self.split.fixed_idx.iter().zip(&self.split.fixed_vals) {
                    c -= (beta * v) * self.p.expanded_channel().column(i);
                }
                c
            }
        }
    }

    /// Objective of the completion with the given residual slot values.
    fn residual_objective(&self, slot_vals: &[f64]) -> f64 {
        let mut carry = self.base_carry();
        for (col, &v) in self.residual_cols.iter().zip(slot_vals) {
            match self.obj {
                BbObjective::PskMaxMin => carry += v * col,
                BbObjective::QamMse { .. } => carry -= v * col,
            }
        }
        self.finish_objective(&carry)
    }

    fn finish_objective(&self, carry: &DVector<f64>) -> f64 {
        match self.obj {
            BbObjective::PskMaxMin => -carry.min(),
            BbObjective::QamMse { beta, sigma2 } => {
                carry.norm_squared() + beta * beta * self.p.users() as f64 * sigma2
            }
        }
    }

    /// Solves the relaxation over the free slots of `node`, filling in the
    /// relaxed values and lower bound. Returns `false` when the relaxation
    /// is infeasible (possible only on the equality-constrained max-min
    /// path), in which case the node is dead.
    fn bound(&mut self, node: &mut Node) -> Result<bool> {
        let free: Vec<usize> = (0..node.pinned.len()).filter(|&i| !node.pinned[i]).collect();
        if free.is_empty() {
            node.lb = self.finish_objective(&node.carry);
            return Ok(true);
        }
        match self.obj {
            BbObjective::PskMaxMin => {
                let rows = self.p.scaling_matrix().nrows();
                let mut a = DMatrix::zeros(rows, free.len());
                for (j, &slot) in free.iter().enumerate() {
                    a.column_mut(j).copy_from(&self.residual_cols[slot]);
                }
                let lp = MaxMinLp::new(a, node.carry.clone(), self.eq_rows.clone(), self.scale);
                let sol = solve_maxmin_box(&lp)?;
                if !sol.is_optimal() {
                    return Ok(false);
                }
                node.lb = -sol.t;
                for (j, &slot) in free.iter().enumerate() {
                    node.vals[slot] = sol.x[j];
                }
            }
            BbObjective::QamMse { beta, sigma2 } => {
                let rows = self.p.expanded_channel().nrows();
                let mut a = DMatrix::zeros(rows, free.len());
                for (j, &slot) in free.iter().enumerate() {
                    a.column_mut(j).copy_from(&self.residual_cols[slot]);
                }
                let x = solve_box_ls(&a, &node.carry, self.scale);
                node.lb = (&node.carry - &a * &x).norm_squared()
                    + beta * beta * self.p.users() as f64 * sigma2;
                for (j, &slot) in free.iter().enumerate() {
                    node.vals[slot] = x[j];
                }
            }
        }
        Ok(true)
    }

    /// Quantizes the free slots of `node` and offers the completion as an
    /// incumbent. Returns the completion objective.
    fn offer_incumbent(&mut self, node: &Node) -> f64 {
        let dac = self.p.dac();
        let slots: Vec<f64> = node
            .vals
            .iter()
            .zip(&node.pinned)
            .map(|(&v, &pinned)| if pinned { v } else { dac.quantize_component(v) })
            .collect();
        let ub = self.residual_objective(&slots);
        if ub < self.ub0 {
            self.ub0 = ub;
            self.incumbent = slots;
        }
        ub
    }

    /// Expands one node into its two children. Children that survive
    /// pruning are appended to `out`.
    fn expand(&mut self, node: &Node, out: &mut Vec<Node>) -> Result<()> {
        let slot = select_branch_index(&node.vals, &node.pinned, self.p.dac())?;
        for sign in [-self.scale, self.scale] {
            let mut child = Node {
                vals: node.vals.clone(),
                pinned: node.pinned.clone(),
                depth: node.depth + 1,
                lb: f64::INFINITY,
                carry: node.carry.clone(),
            };
            child.vals[slot] = sign;
            child.pinned[slot] = true;
            match self.obj {
                BbObjective::PskMaxMin => child.carry += sign * &self.residual_cols[slot],
                BbObjective::QamMse { .. } => child.carry -= sign * &self.residual_cols[slot],
            }
            self.diag.nodes_visited += 1;
            self.diag.depth_iterations = self.diag.depth_iterations.max(child.depth as u64);
            if !self.bound(&mut child)? {
                continue;
            }
            self.offer_incumbent(&child);
            let complete = child.pinned.iter().all(|&b| b);
            if !complete && child.lb < self.ub0 + PRUNE_EPS {
                out.push(child);
            }
        }
        Ok(())
    }

    /// Rebuilds the full real-expanded vector from the incumbent slots.
    fn incumbent_vector(&self) -> DVector<f64> {
        let dim = self.p.scaling_matrix().ncols();
        let mut x = DVector::zeros(dim);
        for (&i, &v) in self.split.fixed_idx.iter().zip(&self.split.fixed_vals) {
            x[i] = v;
        }
        for (&i, &v) in self.split.residual_idx.iter().zip(&self.incumbent) {
            x[i] = v;
        }
        x
    }

    fn root(&self, relaxed_residual: Vec<f64>) -> Node {
        Node {
            pinned: vec![false; relaxed_residual.len()],
            vals: relaxed_residual,
            depth: 0,
            lb: f64::NEG_INFINITY,
            carry: self.base_carry(),
        }
    }

    /// Breadth-first level processing: at each depth every surviving node
    /// is expanded and the surviving children form the next level.
    fn run_breadth_first(&mut self, root: Node) -> Result<()> {
        let mut level = vec![root];
        while !level.is_empty() {
            let mut next = Vec::new();
            for node in &level {
                if node.lb >= self.ub0 + PRUNE_EPS {
                    continue;
                }
                self.expand(node, &mut next)?;
            }
            self.diag.ub_trace.push(self.ub0);
            level = next;
        }
        Ok(())
    }

    /// Depth-first with the better-bounded child on top of the stack.
    fn run_depth_first(&mut self, root: Node) -> Result<()> {
        let mut stack = vec![root];
        while let Some(node) = stack.pop() {
            if node.lb >= self.ub0 + PRUNE_EPS {
                continue;
            }
            let mut children = Vec::with_capacity(2);
            self.expand(&node, &mut children)?;
            self.diag.ub_trace.push(self.ub0);
            children.sort_by(|a, b| b.lb.total_cmp(&a.lb));
            stack.extend(children);
        }
        Ok(())
    }
}

/// P-BB for PSK: exact minimizer of the negated max-min margin over the
/// residual sign patterns, warm-started from the quantized relaxation.
pub fn pbb_psk(p: &CiProblem, relaxed_x_e: &DVector<f64>) -> Result<(DVector<f64>, BbDiagnostics)> {
    pbb_with_objective(p, BbObjective::PskMaxMin, relaxed_x_e)
}

fn pbb_with_objective(
    p: &CiProblem,
    obj: BbObjective,
    relaxed_x_e: &DVector<f64>,
) -> Result<(DVector<f64>, BbDiagnostics)> {
    let dac = p.dac();
    let split = SplitState::from_relaxed(relaxed_x_e, dac, default_boundary_eps(dac))?;
    let warm: Vec<f64> = split
        .residual_idx
        .iter()
        .map(|&i| dac.quantize_component(relaxed_x_e[i]))
        .collect();
    let relaxed: Vec<f64> = split.residual_idx.iter().map(|&i| relaxed_x_e[i]).collect();
    let mut search = Search::new(p, obj, &split, warm);
    if !split.residual_idx.is_empty() {
        let root = search.root(relaxed);
        search.run_breadth_first(root)?;
    }
    Ok((search.incumbent_vector(), search.diag))
}

/// P-BB inner step for QAM at fixed `beta`: exact minimizer of the MSE over
/// the residual sign patterns, with the incumbent (current alternating
/// iterate) as the initial upper bound.
pub fn pbb_qam_inner(
    p: &CiProblem,
    beta: f64,
    sigma2: f64,
    split: &SplitState,
    incumbent_x_e: &DVector<f64>,
) -> Result<(DVector<f64>, BbDiagnostics)> {
    let obj = BbObjective::QamMse { beta, sigma2 };
    let warm: Vec<f64> = split.residual_idx.iter().map(|&i| incumbent_x_e[i]).collect();
    let mut search = Search::new(p, obj, split, warm);
    if !split.residual_idx.is_empty() {
        let mut root = search.root(vec![0.0; split.residual_idx.len()]);
        if search.bound(&mut root)? {
            search.offer_incumbent(&root);
            root.lb = f64::NEG_INFINITY;
            search.run_breadth_first(root)?;
        }
    }
    Ok((search.incumbent_vector(), search.diag))
}

/// F-BB: the same bounding machinery with every entry residual. Limited to
/// `2 Nt <= 24`; the complexity is exponential in the antenna count.
pub fn fbb(p: &CiProblem, obj: BbObjective) -> Result<(DVector<f64>, BbDiagnostics)> {
    let dim = p.scaling_matrix().ncols();
    if dim > FBB_MAX_DIM {
        return Err(Error::SizeGuard {
            actual: dim,
            max: FBB_MAX_DIM,
        });
    }
    let split = SplitState::full(dim);
    let dac = p.dac();
    // Root relaxation provides both the warm start and the branch order.
    let mut probe = Search::new(p, obj, &split, vec![dac.scale(); dim]);
    let mut root = probe.root(vec![0.0; dim]);
    if !probe.bound(&mut root)? {
        return Err(Error::EmptyProblem);
    }
    let warm: Vec<f64> = root.vals.iter().map(|&v| dac.quantize_component(v)).collect();
    let mut search = Search::new(p, obj, &split, warm);
    let mut root = search.root(root.vals.clone());
    root.lb = f64::NEG_INFINITY;
    search.run_depth_first(root)?;
    Ok((search.incumbent_vector(), search.diag))
}

/// Exhaustive enumeration over the residual sign patterns: the exact
/// argmin with lowest-lexicographic tie-break (minus before plus).
///
/// `base` supplies the values of every non-residual entry. The evaluation
/// is a direct objective computation, independent of the bounding path.
pub fn exhaustive_oracle(
    p: &CiProblem,
    obj: &BbObjective,
    base: &DVector<f64>,
    residual_idx: &[usize],
) -> Result<(DVector<f64>, f64)> {
    let n = residual_idx.len();
    if n > ORACLE_MAX_DIM {
        return Err(Error::SizeGuard {
            actual: n,
            max: ORACLE_MAX_DIM,
        });
    }
    let scale = p.dac().scale();
    let mut best_x = base.clone();
    let mut best_obj = f64::INFINITY;
    for pattern in 0u64..(1u64 << n) {
        let mut x = base.clone();
        for (j, &idx) in residual_idx.iter().enumerate() {
            let plus = (pattern >> (n - 1 - j)) & 1 == 1;
            x[idx] = if plus { scale } else { -scale };
        }
        let val = completion_objective(p, obj, &x);
        if val < best_obj {
            best_obj = val;
            best_x = x;
        }
    }
    Ok((best_x, best_obj))
}
