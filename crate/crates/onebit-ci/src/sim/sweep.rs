//! Monte Carlo campaigns: BER sweeps, node counts, convergence traces, and
//! the boundary-structure audit.
//!
//! Every trial draws one fresh channel, symbol frame, and noise vector from
//! a `(seed, point, trial)`-keyed generator, and every precoder sees the
//! same instance, so method comparisons are paired. All accumulated
//! statistics are integers; the derived columns are bitwise reproducible
//! under a fixed seed regardless of worker scheduling. Wall time is the
//! one genuinely nondeterministic column.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::constellation::{count_bit_errors, ConstellationKind};
use crate::error::{Error, Result};
use crate::geometry::{audit_boundary, audit_rank, default_boundary_eps, CiProblem};
use crate::precode::Precoder;
use crate::sim::channel::{gen_channel, gen_noise, stream_id, trial_rng};
use crate::sim::config::SimConfig;
use crate::solver::solve_maxmin_box;

/// Energy budget: every transmitted frame must have unit power.
const ENERGY_TOL: f64 = 1e-9;

/// Accumulated error statistics for one (precoder, SNR) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub precoder: String,
    pub snr_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub ber_stderr: f64,
    pub mean_nodes: f64,
    pub mean_iters: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Default)]
struct Cell {
    bits: u64,
    errors: u64,
    nodes: u64,
    iters: u64,
    wall_ns: u64,
    trials_ok: u64,
    failures: u64,
}

impl Cell {
    fn merge(mut self, other: &Cell) -> Cell {
        self.bits += other.bits;
        self.errors += other.errors;
        self.nodes += other.nodes;
        self.iters += other.iters;
        self.wall_ns += other.wall_ns;
        self.trials_ok += other.trials_ok;
        self.failures += other.failures;
        self
    }
}

fn received(h: &DMatrix<Complex64>, x: &[Complex64], noise: &[Complex64]) -> Vec<Complex64> {
    (0..h.nrows())
        .map(|u| {
            (0..h.ncols())
                .map(|j| h[(u, j)] * x[j])
                .sum::<Complex64>()
                + noise[u]
        })
        .collect()
}

/// BER versus transmit SNR for every configured precoder.
pub fn run_ber_sweep(cfg: &SimConfig) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let constellation = cfg.constellation()?;
    let precoders = cfg.precoder_list()?;
    let bps = constellation.bits_per_symbol();
    let mut records = Vec::new();

    for (point, &snr_db) in cfg.snr_db.iter().enumerate() {
        let sigma2 = SimConfig::sigma2(snr_db);
        let cells = (0..cfg.trials)
            .into_par_iter()
            .fold(
                || vec![Cell::default(); precoders.len()],
                |mut cells, trial| {
                    let mut rng = trial_rng(cfg.seed, stream_id(point, trial));
                    let h = gen_channel(cfg.k, cfg.nt, &mut rng);
                    let bits: Vec<u8> =
                        (0..cfg.k * bps).map(|_| rng.gen_range(0..2u8)).collect();
                    let s = constellation.modulate(&bits).expect("frame-aligned bits");
                    let noise = gen_noise(cfg.k, sigma2, &mut rng);

                    for (pi, precoder) in precoders.iter().enumerate() {
                        let start = std::time::Instant::now();
                        let outcome = precoder
                            .run(&h, &s, &constellation, sigma2, cfg.epsilon0)
                            .and_then(|r| {
                                let energy: f64 = r.x.iter().map(|v| v.norm_sqr()).sum();
                                if (energy - 1.0).abs() > ENERGY_TOL {
                                    return Err(Error::Config(format!(
                                        "frame energy {energy} off unit"
                                    )));
                                }
                                let y = received(&h, &r.x, &noise);
                                let mut frame_errors = 0u64;
                                for (u, &yu) in y.iter().enumerate() {
                                    let beta = match constellation.kind() {
                                        ConstellationKind::Psk => 1.0,
                                        ConstellationKind::Qam => r.beta,
                                    };
                                    let (_, decided) = constellation.demodulate(yu, beta)?;
                                    frame_errors += count_bit_errors(
                                        &bits[u * bps..(u + 1) * bps],
                                        decided,
                                    ) as u64;
                                }
                                Ok((r, frame_errors))
                            });
                        let elapsed = start.elapsed().as_nanos() as u64;
                        let cell = &mut cells[pi];
                        match outcome {
                            Ok((r, frame_errors)) => {
                                cell.bits += (cfg.k * bps) as u64;
                                cell.errors += frame_errors;
                                cell.nodes += r.diagnostics.nodes_visited;
                                cell.iters +=
                                    r.diagnostics.alt_rounds + r.diagnostics.depth_iterations;
                                cell.wall_ns += elapsed;
                                cell.trials_ok += 1;
                            }
                            Err(e) => {
                                log::warn!(
                                    "{} failed on trial {trial} at {snr_db} dB: {e}",
                                    precoder.name()
                                );
                                cell.failures += 1;
                            }
                        }
                    }
                    cells
                },
            )
            .reduce(
                || vec![Cell::default(); precoders.len()],
                |a, b| a.into_iter().zip(&b).map(|(x, y)| x.merge(y)).collect(),
            );

        for (pi, precoder) in precoders.iter().enumerate() {
            let cell = &cells[pi];
            let ber = if cell.bits > 0 {
                cell.errors as f64 / cell.bits as f64
            } else {
                0.0
            };
            let stderr = if cell.bits > 0 {
                (ber * (1.0 - ber) / cell.bits as f64).sqrt()
            } else {
                0.0
            };
            let denom = cell.trials_ok.max(1) as f64;
            records.push(BerRecord {
                precoder: precoder.name().to_string(),
                snr_db,
                bits: cell.bits,
                errors: cell.errors,
                ber,
                ber_stderr: stderr,
                mean_nodes: cell.nodes as f64 / denom,
                mean_iters: cell.iters as f64 / denom,
                wall_ms: cell.wall_ns as f64 / denom / 1e6,
            });
            if cell.failures > 0 {
                log::warn!(
                    "{}: {} failed trials at {snr_db} dB",
                    precoder.name(),
                    cell.failures
                );
            }
        }
    }
    Ok(records)
}

/// Average visited nodes per instance for P-BB and F-BB, swept over the
/// user count `1..=cfg.k` at fixed `nt`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeCountRecord {
    pub k: usize,
    pub method: String,
    pub instances: u64,
    pub mean_nodes: f64,
    pub max_depth: u64,
}

pub fn run_node_count(cfg: &SimConfig) -> Result<Vec<NodeCountRecord>> {
    cfg.validate()?;
    let constellation = cfg.constellation()?;
    let sigma2 = SimConfig::sigma2(cfg.snr_db[0]);
    let fbb_ok = 2 * cfg.nt <= 24;
    if !fbb_ok {
        log::warn!(
            "F-BB skipped: 2*Nt = {} exceeds the search guard of 24",
            2 * cfg.nt
        );
    }
    let mut records = Vec::new();
    for k in 1..=cfg.k {
        let methods: Vec<Precoder> = if fbb_ok {
            vec![Precoder::Pbb, Precoder::Fbb]
        } else {
            vec![Precoder::Pbb]
        };
        for method in methods {
            let (nodes, depth) = (0..cfg.trials)
                .into_par_iter()
                .map(|trial| {
                    let mut rng = trial_rng(cfg.seed, stream_id(k, trial));
                    let h = gen_channel(k, cfg.nt, &mut rng);
                    let bits: Vec<u8> = (0..k * constellation.bits_per_symbol())
                        .map(|_| rng.gen_range(0..2u8))
                        .collect();
                    let s = constellation.modulate(&bits).expect("frame-aligned bits");
                    let r = method
                        .run(&h, &s, &constellation, sigma2, cfg.epsilon0)
                        .expect("node-count precoder run");
                    (r.diagnostics.nodes_visited, r.diagnostics.depth_iterations)
                })
                .reduce(|| (0u64, 0u64), |a, b| (a.0 + b.0, a.1.max(b.1)));
            records.push(NodeCountRecord {
                k,
                method: method.name().to_string(),
                instances: cfg.trials,
                mean_nodes: nodes as f64 / cfg.trials as f64,
                max_depth: depth,
            });
        }
    }
    Ok(records)
}

/// One point of an upper-bound or MSE trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRecord {
    pub precoder: String,
    pub trial: u64,
    pub iteration: usize,
    pub value: f64,
}

/// Per-iteration traces: the branch-and-bound incumbent for PSK, the
/// alternating-optimization MSE for QAM.
pub fn run_convergence(cfg: &SimConfig) -> Result<Vec<ConvergenceRecord>> {
    cfg.validate()?;
    let constellation = cfg.constellation()?;
    let precoders = cfg.precoder_list()?;
    let sigma2 = SimConfig::sigma2(cfg.snr_db[0]);
    let mut records = Vec::new();
    for trial in 0..cfg.trials {
        let mut rng = trial_rng(cfg.seed, stream_id(0, trial));
        let h = gen_channel(cfg.k, cfg.nt, &mut rng);
        let bits: Vec<u8> = (0..cfg.k * constellation.bits_per_symbol())
            .map(|_| rng.gen_range(0..2u8))
            .collect();
        let s = constellation.modulate(&bits)?;
        for precoder in &precoders {
            let r = precoder.run(&h, &s, &constellation, sigma2, cfg.epsilon0)?;
            let trace: &[f64] = match constellation.kind() {
                ConstellationKind::Psk => &r.diagnostics.ub_trace,
                ConstellationKind::Qam => &r.diagnostics.mse_trace,
            };
            for (iteration, &value) in trace.iter().enumerate() {
                records.push(ConvergenceRecord {
                    precoder: precoder.name().to_string(),
                    trial,
                    iteration,
                    value,
                });
            }
        }
    }
    Ok(records)
}

/// One relaxed instance checked against the boundary-count bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Record {
    pub nt: usize,
    pub k: usize,
    pub modulation: String,
    pub interior_count: usize,
    pub bound: usize,
    pub pass: bool,
}

/// Solves the relaxation on seeded instances and reports how many entries
/// sit strictly inside the box, against the `2K - 1` bound.
pub fn run_prop1_audit(cfg: &SimConfig) -> Result<Vec<Prop1Record>> {
    cfg.validate()?;
    let constellation = cfg.constellation()?;
    let records: Vec<Result<Prop1Record>> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(cfg.seed, stream_id(0, trial));
            let h = gen_channel(cfg.k, cfg.nt, &mut rng);
            let bits: Vec<u8> = (0..cfg.k * constellation.bits_per_symbol())
                .map(|_| rng.gen_range(0..2u8))
                .collect();
            let s = constellation.modulate(&bits)?;
            let p = CiProblem::build(&h, &s, &constellation)?;
            let sol = solve_maxmin_box(&p.relaxation())?;
            if !sol.is_optimal() {
                return Err(Error::UnexpectedInfeasible);
            }
            let audit = audit_boundary(&sol.x, p.dac(), default_boundary_eps(p.dac()))?;
            let bound = 2 * cfg.k - 1;
            let rank_ok = audit_rank(p.scaling_matrix()) == 2 * cfg.k;
            Ok(Prop1Record {
                nt: cfg.nt,
                k: cfg.k,
                modulation: constellation.name(),
                interior_count: audit.count(),
                bound,
                pass: audit.count() <= bound && rank_ok,
            })
        })
        .collect();
    records.into_iter().collect()
}
