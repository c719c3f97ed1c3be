//! CSV export with a fixed column set and deterministic ordering.
//!
//! Numbers are written with Rust's shortest round-trip formatting, which is
//! locale-independent; parsing a written file recovers the records exactly.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sim::sweep::{BerRecord, ConvergenceRecord, NodeCountRecord, Prop1Record};

pub const BER_HEADER: &str =
    "precoder,snr_db,bits,errors,ber,ber_stderr,mean_nodes,mean_iters,wall_ms";

/// Serializes BER records in input order.
pub fn format_ber_csv(records: &[BerRecord]) -> String {
    let mut out = String::from(BER_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.precoder,
            r.snr_db,
            r.bits,
            r.errors,
            r.ber,
            r.ber_stderr,
            r.mean_nodes,
            r.mean_iters,
            r.wall_ms
        ));
    }
    out
}

/// Writes BER records to `path`; an empty slice produces a header-only file.
pub fn export_csv(records: &[BerRecord], path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(format_ber_csv(records).as_bytes())?;
    Ok(())
}

/// Parses a file written by [`export_csv`].
pub fn read_ber_csv(path: &Path) -> Result<Vec<BerRecord>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == BER_HEADER => {}
        other => {
            return Err(Error::Config(format!(
                "unexpected CSV header: {:?}",
                other
            )))
        }
    }
    let mut records = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 9 {
            return Err(Error::Config(format!("malformed CSV row: {line}")));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Config(format!("bad number {s}")))
        };
        let int = |s: &str| -> Result<u64> {
            s.parse().map_err(|_| Error::Config(format!("bad integer {s}")))
        };
        records.push(BerRecord {
            precoder: f[0].to_string(),
            snr_db: num(f[1])?,
            bits: int(f[2])?,
            errors: int(f[3])?,
            ber: num(f[4])?,
            ber_stderr: num(f[5])?,
            mean_nodes: num(f[6])?,
            mean_iters: num(f[7])?,
            wall_ms: num(f[8])?,
        });
    }
    Ok(records)
}

pub fn format_node_count_csv(records: &[NodeCountRecord]) -> String {
    let mut out = String::from("k,method,instances,mean_nodes,max_depth\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.k, r.method, r.instances, r.mean_nodes, r.max_depth
        ));
    }
    out
}

pub fn format_convergence_csv(records: &[ConvergenceRecord]) -> String {
    let mut out = String::from("precoder,trial,iteration,value\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.precoder, r.trial, r.iteration, r.value
        ));
    }
    out
}

pub fn format_prop1_csv(records: &[Prop1Record]) -> String {
    let mut out = String::from("nt,k,modulation,interior_count,bound,pass\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.nt, r.k, r.modulation, r.interior_count, r.bound, r.pass
        ));
    }
    out
}
