//! Box-constrained least squares via an active-set method with exact
//! per-face solves.
//!
//! Minimizes `|| b - A x ||_2^2` subject to `|x_i| <= box`. The working
//! set pins variables at a bound; the free variables are re-solved exactly
//! (minimum-norm least squares), moving along the segment towards the
//! candidate and binding the first blocking variable when the candidate
//! leaves the box. Bound variables whose multiplier has the wrong sign are
//! released one at a time, worst violation first.

use nalgebra::{DMatrix, DVector};

/// KKT tolerance: interior gradient components and outward-pointing bound
/// multipliers are accepted below this level.
pub const BOX_LS_KKT_TOL: f64 = 1e-8;
const MAX_ITERS: usize = 500;

/// Solves `min || b_vec - a x ||^2  s.t.  |x_i| <= box_bound`.
///
/// Always feasible; returns the minimizer (to [`BOX_LS_KKT_TOL`]) or the
/// best iterate if the iteration cap is reached.
pub fn solve_box_ls(a: &DMatrix<f64>, b_vec: &DVector<f64>, box_bound: f64) -> DVector<f64> {
    let n = a.ncols();
    assert_eq!(a.nrows(), b_vec.len(), "matrix/vector shapes must agree");
    assert!(box_bound > 0.0);
    if n == 0 {
        return DVector::zeros(0);
    }

    #[derive(Clone, Copy, PartialEq, Eq)]
    enum State {
        Free,
        AtLower,
        AtUpper,
    }

    let mut state = vec![State::Free; n];
    let mut x = DVector::zeros(n);
    // A variable released in the previous step may not be re-bound at the
    // same bound with a zero-length step; this blocks release/bind cycles.
    let mut just_released: Option<usize> = None;

    let certify = |x: &DVector<f64>| {
        if super::certify::enabled() {
            super::certify::record_ls(box_ls_kkt_residual(a, b_vec, box_bound, x));
        }
    };

    for _ in 0..MAX_ITERS {
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == State::Free).collect();

        if !free.is_empty() {
            // Exact least squares over the free face.
            let a_free = a.select_columns(free.iter());
            let mut resid = b_vec.clone();
            for i in 0..n {
                if state[i] != State::Free {
                    resid -= x[i] * a.column(i);
                }
            }
            let svd = a_free.svd(true, true);
            let z = svd.solve(&resid, 1e-12).expect("SVD solve is total");

            // Step from the current free values toward the candidate.
            let mut step = 1.0f64;
            let mut blocking: Option<(usize, State)> = None;
            for (j, &i) in free.iter().enumerate() {
                let delta: f64 = z[j] - x[i];
                if delta.abs() <= f64::EPSILON {
                    continue;
                }
                let target = if delta > 0.0 { box_bound } else { -box_bound };
                let room: f64 = (target - x[i]) / delta;
                if room < step - 1e-15 {
                    step = room.max(0.0);
                    blocking = Some((
                        i,
                        if delta > 0.0 {
                            State::AtUpper
                        } else {
                            State::AtLower
                        },
                    ));
                }
            }

            if blocking.is_none() {
                for (j, &i) in free.iter().enumerate() {
                    x[i] = z[j].clamp(-box_bound, box_bound);
                }
            } else {
                for (j, &i) in free.iter().enumerate() {
                    x[i] = (x[i] + step * (z[j] - x[i])).clamp(-box_bound, box_bound);
                }
                let (bi, bs) = blocking.unwrap();
                x[bi] = if bs == State::AtUpper { box_bound } else { -box_bound };
                if step <= 1e-15 && just_released == Some(bi) {
                    // Zero-length zigzag: keep it bound and accept the face.
                    state[bi] = bs;
                    just_released = None;
                    continue;
                }
                state[bi] = bs;
                just_released = None;
                continue;
            }
        }

        // KKT check: g = 2 A'(Ax - b). Interior needs g ~ 0; x_i = +box
        // needs g_i <= 0; x_i = -box needs g_i >= 0.
        let g = 2.0 * a.transpose() * (a * &x - b_vec);
        let mut worst = 0.0f64;
        let mut worst_idx = None;
        for i in 0..n {
            let violation = match state[i] {
                State::Free => 0.0,
                State::AtUpper => g[i].max(0.0),
                State::AtLower => (-g[i]).max(0.0),
            };
            if violation > worst {
                worst = violation;
                worst_idx = Some(i);
            }
        }
        match worst_idx {
            Some(i) if worst > BOX_LS_KKT_TOL => {
                state[i] = State::Free;
                just_released = Some(i);
            }
            _ => {
                certify(&x);
                return x;
            }
        }
    }
    certify(&x);
    x
}

/// Maximum KKT violation of `x` for the box-constrained LS problem:
/// interior gradient magnitude, or inward-pointing gradient at a bound.
pub fn box_ls_kkt_residual(a: &DMatrix<f64>, b_vec: &DVector<f64>, box_bound: f64, x: &DVector<f64>) -> f64 {
    let g = 2.0 * a.transpose() * (a * x - b_vec);
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let v = x[i];
        let r = if v >= box_bound - 1e-12 {
            g[i].max(0.0)
        } else if v <= -box_bound + 1e-12 {
            (-g[i]).max(0.0)
        } else {
            g[i].abs()
        };
        worst = worst.max(r);
        worst = worst.max(v.abs() - box_bound);
    }
    worst
}
