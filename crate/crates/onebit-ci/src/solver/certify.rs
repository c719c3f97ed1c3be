//! Opt-in KKT certification of every solver call.
//!
//! When enabled, each optimal max-min LP solve and each box-LS solve
//! records its worst KKT residual into a global high-water mark, so a test
//! campaign can assert that every solve it triggered was certified.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

static ENABLED: AtomicBool = AtomicBool::new(false);
// Nonnegative f64 bit patterns order like the values, so fetch_max works.
static WORST_LP: AtomicU64 = AtomicU64::new(0);
static WORST_LS: AtomicU64 = AtomicU64::new(0);

pub fn enable() {
    ENABLED.store(true, Ordering::SeqCst);
}

pub fn enabled() -> bool {
    ENABLED.load(Ordering::Relaxed)
}

pub(crate) fn record_lp(residual: f64) {
    WORST_LP.fetch_max(residual.to_bits(), Ordering::Relaxed);
}

pub(crate) fn record_ls(residual: f64) {
    WORST_LS.fetch_max(residual.to_bits(), Ordering::Relaxed);
}

/// Worst max-min LP KKT residual observed since the process started.
pub fn worst_lp_residual() -> f64 {
    f64::from_bits(WORST_LP.load(Ordering::Relaxed))
}

/// Worst box-LS KKT residual observed since the process started.
pub fn worst_ls_residual() -> f64 {
    f64::from_bits(WORST_LS.load(Ordering::Relaxed))
}
