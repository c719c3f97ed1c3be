//! Monte Carlo harness: seeded instance generation, BER/node-count/
//! convergence campaigns, the structural audit, and CSV export.

pub mod channel;
pub mod config;
pub mod csv;
pub mod sweep;

pub use channel::{gen_channel, gen_noise, trial_rng};
pub use config::{parse_snr_grid, SimConfig};
pub use csv::{export_csv, read_ber_csv};
pub use sweep::{
    run_ber_sweep, run_convergence, run_node_count, run_prop1_audit, BerRecord,
    ConvergenceRecord, NodeCountRecord, Prop1Record,
};
