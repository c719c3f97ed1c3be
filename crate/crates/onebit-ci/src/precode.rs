//! End-to-end 1-bit precoders sharing one interface: symbols plus channel
//! (plus noise power for QAM) in, transmit vector plus diagnostics out.
//!
//! PSK precoders maximize the constructive-interference margin and report
//! it as the objective; QAM precoders minimize the MSE at their own
//! precoding factor and report that. Every 1-bit output lies exactly in
//! the DAC alphabet with unit total energy.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::bb::{self, BbDiagnostics, BbObjective, SplitState};
use crate::constellation::{Constellation, ConstellationKind};
use crate::error::{Error, Result};
use crate::expand::collapse_vector;
use crate::geometry::{default_boundary_eps, mse_objective, psk_objective, CiProblem};
use crate::solver::{solve_maxmin_box, LpSolution};

/// Iteration cap for the QAM alternating optimization.
const ALT_OPT_MAX_ROUNDS: u64 = 100;

/// Run metadata attached to every precoder output. Fields that do not
/// apply to a given precoder stay at their defaults.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    /// Children whose relaxation was solved, summed over all BB runs.
    pub nodes_visited: u64,
    /// Deepest BB level, or entries visited for the sequential updates;
    /// summed over alternating rounds for QAM P-BB/F-BB.
    pub depth_iterations: u64,
    /// Incumbent objective after initialization and per level/expansion of
    /// the last BB run.
    pub ub_trace: Vec<f64>,
    /// Alternating-optimization rounds (QAM only).
    pub alt_rounds: u64,
    /// MSE after initialization and after each alternating round.
    pub mse_trace: Vec<f64>,
    /// The alternating optimization hit its round cap before converging.
    pub cap_reached: bool,
}

impl Diagnostics {
    fn from_bb(diag: BbDiagnostics) -> Self {
        Self {
            nodes_visited: diag.nodes_visited,
            depth_iterations: diag.depth_iterations,
            ub_trace: diag.ub_trace,
            ..Self::default()
        }
    }
}

/// A precoder output: the transmit vector (1-bit for everything except
/// unquantized ZF), the precoding factor for QAM demodulation, the
/// method's objective value, and diagnostics.
#[derive(Debug, Clone)]
pub struct PrecodeResult {
    pub x: Vec<Complex64>,
    pub beta: f64,
    pub objective: f64,
    pub diagnostics: Diagnostics,
}

/// MSE-minimizing receive scaling `beta = Re(x^H H^H s) / (||Hx||^2 + K s2)`.
/// Returns 0 when both the noise power and `Hx` vanish.
pub fn compute_beta(x: &[Complex64], h: &DMatrix<Complex64>, s: &[Complex64], sigma2: f64) -> f64 {
    let k = h.nrows();
    let hx: Vec<Complex64> = (0..k)
        .map(|r| (0..h.ncols()).map(|j| h[(r, j)] * x[j]).sum())
        .collect();
    let num: f64 = hx.iter().zip(s).map(|(a, b)| (a.conj() * b).re).sum();
    let den: f64 = hx.iter().map(|v| v.norm_sqr()).sum::<f64>() + k as f64 * sigma2;
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Zero-forcing baseline: `x = H^H (H H^H)^{-1} s`, scaled to unit energy,
/// optionally 1-bit quantized. The reported objective is the residual MSE
/// `||s - beta H x||^2` at the gain-inverting `beta`.
pub fn zf_precode(
    h: &DMatrix<Complex64>,
    s: &[Complex64],
    quantized: bool,
) -> Result<PrecodeResult> {
    let k = h.nrows();
    if s.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: s.len(),
        });
    }
    let gram = h * h.adjoint();
    let rhs = DVector::from_column_slice(s);
    let z = gram.lu().solve(&rhs).ok_or(Error::RankDeficientChannel)?;
    let mut x: DVector<Complex64> = h.adjoint() * z;
    let energy = x.norm();
    if !(energy > 1e-12) {
        return Err(Error::RankDeficientChannel);
    }
    x /= Complex64::new(energy, 0.0);
    let x: Vec<Complex64> = if quantized {
        let dac = crate::expand::DacAlphabet::new(h.ncols());
        dac.quantize_complex(x.as_slice())
    } else {
        x.as_slice().to_vec()
    };
    let beta = compute_beta(&x, h, s, 0.0);
    let objective: f64 = (0..k)
        .map(|r| {
            let hx: Complex64 = (0..h.ncols()).map(|j| h[(r, j)] * x[j]).sum();
            (s[r] - beta * hx).norm_sqr()
        })
        .sum();
    Ok(PrecodeResult {
        x,
        beta,
        objective,
        diagnostics: Diagnostics::default(),
    })
}

/// Builds the CI problem and solves its box relaxation.
fn relax(
    h: &DMatrix<Complex64>,
    s: &[Complex64],
    c: &Constellation,
) -> Result<(CiProblem, LpSolution)> {
    let p = CiProblem::build(h, s, c)?;
    let sol = solve_maxmin_box(&p.relaxation())?;
    if !sol.is_optimal() {
        return Err(Error::UnexpectedInfeasible);
    }
    Ok((p, sol))
}

/// CI 1-bit for PSK: quantize the max-min relaxation.
pub fn ci_onebit_psk(
    h: &DMatrix<Complex64>,
    s: &[Complex64],
    c: &Constellation,
) -> Result<PrecodeResult> {
    let (p, sol) = relax(h, s, c)?;
    let x_e = p.dac().quantize_real(&sol.x);
    let objective = psk_objective(&p.scaling_vector(&x_e)?);
    Ok(PrecodeResult {
        x: collapse_vector(&x_e)?,
        beta: 1.0,
        objective,
        diagnostics: Diagnostics::default(),
    })
}

/// P-BB for PSK: exact search over the residual entries of the relaxation.
pub fn pbb_psk_precode(
    h: &DMatrix<Complex64>,
    s: &[Complex64],
    c: &Constellation,
) -> Result<PrecodeResult> {
    let (p, sol) = relax(h, s, c)?;
    let (x_e, diag) = bb::pbb_psk(&p, &sol.x)?;
    let objective = psk_objective(&p.scaling_vector(&x_e)?);
    Ok(PrecodeResult {
        x: collapse_vector(&x_e)?,
        beta: 1.0,
        objective,
        diagnostics: Diagnostics::from_bb(diag),
    })
}

/// F-BB for PSK: exact search over all entries. Guarded to small arrays.
pub fn fbb_psk_precode(
    h: &DMatrix<Complex64>,
    s: &[Complex64],
    c: &Constellation,
) -> Result<PrecodeResult> {
    let p = CiProblem::build(h, s, c)?;
    let (x_e, diag) = bb::fbb(&p, BbObjective::PskMaxMin)?;
    let objective = psk_objective(&p.scaling_vector(&x_e)?);
    Ok(PrecodeResult {
        x: collapse_vector(&x_e)?,
        beta: 1.0,
        objective,
        diagnostics: Diagnostics::from_bb(diag),
    })
}

/// Residual slot order for the sequential updates: descending impact
/// `gamma = min_l |column(l)|`, ties at the lower index first.
fn opsu_order(p: &CiProblem, residual_idx: &[usize]) -> Vec<usize> {
    let m = p.scaling_matrix();
    let gamma = |idx: usize| {
        (0..m.nrows())
            .map(|l| m[(l, idx)].abs())
            .fold(f64::INFINITY, f64::min)
    };
    let mut order = residual_idx.to_vec();
    order.sort_by(|&a, &b| gamma(b).total_cmp(&gamma(a)).then(a.cmp(&b)));
    order
}

/// OPSU for PSK: one greedy pass over the residual entries in descending
/// impact order, keeping the better sign at each step.
pub fn opsu_psk(
    h: &DMatrix<Complex64>,
    s: &[Complex64],
    c: &Constellation,
) -> Result<PrecodeResult> {
    let (p, sol) = relax(h, s, c)?;
    let dac = *p.dac();
    let split = SplitState::from_relaxed(&sol.x, &dac, default_boundary_eps(&dac))?;
    let mut x_e = dac.quantize_real(&sol.x);
    let mut lambda = p.scaling_vector(&x_e)?;
    let mut best = lambda.min();
    let order = opsu_order(&p, &split.residual_idx);
    for &idx in &order {
        let current = x_e[idx];
        let flipped = -current;
        let cand = &lambda + (flipped - current) * p.scaling_matrix().column(idx);
        let cand_min = cand.min();
        if cand_min > best {
            best = cand_min;
            lambda = cand;
            x_e[idx] = flipped;
        }
    }
    Ok(PrecodeResult {
        x: collapse_vector(&x_e)?,
        beta: 1.0,
        objective: best,
        diagnostics: Diagnostics {
            depth_iterations: order.len() as u64,
            ..Diagnostics::default()
        },
    })
}

/// CI 1-bit for QAM: quantize the relaxation with equality rows on the
/// inner coordinates, then pick the MSE-minimizing precoding factor.
pub fn ci_onebit_qam(
    h: &DMatrix<Complex64>,
    s: &[Complex64],
    c: &Constellation,
    sigma2: f64,
) -> Result<PrecodeResult> {
    let (p, sol) = relax(h, s, c)?;
    let x_e = p.dac().quantize_real(&sol.x);
    let x = collapse_vector(&x_e)?;
    let beta = compute_beta(&x, h, s, sigma2);
    let objective = mse_objective(&x_e, beta, &p, sigma2);
    Ok(PrecodeResult {
        x,
        beta,
        objective,
        diagnostics: Diagnostics::default(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InnerSolver {
    Partial,
    Full,
}

/// Alternating optimization for QAM: update `beta` in closed form, then
/// re-optimize the transmit vector by BB at that fixed `beta`, until the
/// MSE improvement drops below `eps0`.
fn alt_opt_qam(
    h: &DMatrix<Complex64>,
    s: &[Complex64],
    c: &Constellation,
    sigma2: f64,
    eps0: f64,
    inner: InnerSolver,
) -> Result<PrecodeResult> {
    assert!(eps0 > 0.0, "convergence threshold must be positive");
    let (p, sol) = relax(h, s, c)?;
    let dac = *p.dac();
    let split = SplitState::from_relaxed(&sol.x, &dac, default_boundary_eps(&dac))?;
    let mut x_e = dac.quantize_real(&sol.x);
    let mut beta = compute_beta(&collapse_vector(&x_e)?, h, s, sigma2);
    let mut mse = mse_objective(&x_e, beta, &p, sigma2);

    let mut diagnostics = Diagnostics {
        mse_trace: vec![mse],
        cap_reached: true,
        ..Diagnostics::default()
    };
    for round in 1..=ALT_OPT_MAX_ROUNDS {
        beta = compute_beta(&collapse_vector(&x_e)?, h, s, sigma2);
        let (x_new, bb_diag) = match inner {
            InnerSolver::Partial => bb::pbb_qam_inner(&p, beta, sigma2, &split, &x_e)?,
            InnerSolver::Full => bb::fbb(&p, BbObjective::QamMse { beta, sigma2 })?,
        };
        x_e = x_new;
        diagnostics.nodes_visited += bb_diag.nodes_visited;
        diagnostics.depth_iterations += bb_diag.depth_iterations;
        diagnostics.ub_trace = bb_diag.ub_trace;
        diagnostics.alt_rounds = round;

        let new_mse = mse_objective(&x_e, beta, &p, sigma2);
        let delta = (mse - new_mse).abs();
        mse = new_mse;
        diagnostics.mse_trace.push(mse);
        if delta <= eps0 {
            diagnostics.cap_reached = false;
            break;
        }
    }

    let x = collapse_vector(&x_e)?;
    let beta = compute_beta(&x, h, s, sigma2);
    let objective = mse_objective(&x_e, beta, &p, sigma2);
    Ok(PrecodeResult {
        x,
        beta,
        objective,
        diagnostics,
    })
}

/// Alternating P-BB for QAM.
pub fn alt_opt_pbb_qam(
    h: &DMatrix<Complex64>,
    s: &[Complex64],
    c: &Constellation,
    sigma2: f64,
    eps0: f64,
) -> Result<PrecodeResult> {
    alt_opt_qam(h, s, c, sigma2, eps0, InnerSolver::Partial)
}

/// Alternating F-BB for QAM: the optimal inner step over all entries,
/// available at small array sizes only.
pub fn alt_opt_fbb_qam(
    h: &DMatrix<Complex64>,
    s: &[Complex64],
    c: &Constellation,
    sigma2: f64,
    eps0: f64,
) -> Result<PrecodeResult> {
    alt_opt_qam(h, s, c, sigma2, eps0, InnerSolver::Full)
}

/// OPSU for QAM: one greedy pass in descending impact order; each sign
/// candidate is scored by the MSE at its own recomputed precoding factor.
pub fn opsu_qam(
    h: &DMatrix<Complex64>,
    s: &[Complex64],
    c: &Constellation,
    sigma2: f64,
) -> Result<PrecodeResult> {
    let (p, sol) = relax(h, s, c)?;
    let dac = *p.dac();
    let split = SplitState::from_relaxed(&sol.x, &dac, default_boundary_eps(&dac))?;
    let mut x_e = dac.quantize_real(&sol.x);
    let beta0 = compute_beta(&collapse_vector(&x_e)?, h, s, sigma2);
    let mut best_mse = mse_objective(&x_e, beta0, &p, sigma2);
    let mut best_beta = beta0;
    let order = opsu_order(&p, &split.residual_idx);
    let mut trace = vec![best_mse];
    for &idx in &order {
        let mut candidate = x_e.clone();
        candidate[idx] = -candidate[idx];
        let beta_c = compute_beta(&collapse_vector(&candidate)?, h, s, sigma2);
        let mse_c = mse_objective(&candidate, beta_c, &p, sigma2);
        if mse_c < best_mse {
            best_mse = mse_c;
            best_beta = beta_c;
            x_e = candidate;
        }
        trace.push(best_mse);
    }
    Ok(PrecodeResult {
        x: collapse_vector(&x_e)?,
        beta: best_beta,
        objective: best_mse,
        diagnostics: Diagnostics {
            depth_iterations: order.len() as u64,
            mse_trace: trace,
            ..Diagnostics::default()
        },
    })
}

/// The precoder families exposed to the simulation harness and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precoder {
    ZfInf,
    ZfOneBit,
    CiOneBit,
    Opsu,
    Pbb,
    Fbb,
}

impl Precoder {
    pub const ALL: [Precoder; 6] = [
        Precoder::ZfInf,
        Precoder::ZfOneBit,
        Precoder::CiOneBit,
        Precoder::Opsu,
        Precoder::Pbb,
        Precoder::Fbb,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Precoder::ZfInf => "zf-inf",
            Precoder::ZfOneBit => "zf-1bit",
            Precoder::CiOneBit => "ci-1bit",
            Precoder::Opsu => "opsu",
            Precoder::Pbb => "pbb",
            Precoder::Fbb => "fbb",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "zf-inf" | "zf_inf" | "zfinf" => Ok(Precoder::ZfInf),
            "zf-1bit" | "zf" | "zf_1bit" => Ok(Precoder::ZfOneBit),
            "ci-1bit" | "ci" | "ci_1bit" => Ok(Precoder::CiOneBit),
            "opsu" => Ok(Precoder::Opsu),
            "pbb" | "p-bb" => Ok(Precoder::Pbb),
            "fbb" | "f-bb" => Ok(Precoder::Fbb),
            other => Err(Error::UnknownPrecoder(other.to_string())),
        }
    }

    /// Dispatches on the constellation kind. `sigma2` and `eps0` only
    /// matter for the QAM paths.
    pub fn run(
        &self,
        h: &DMatrix<Complex64>,
        s: &[Complex64],
        c: &Constellation,
        sigma2: f64,
        eps0: f64,
    ) -> Result<PrecodeResult> {
        match (self, c.kind()) {
            (Precoder::ZfInf, _) => zf_precode(h, s, false),
            (Precoder::ZfOneBit, _) => zf_precode(h, s, true),
            (Precoder::CiOneBit, ConstellationKind::Psk) => ci_onebit_psk(h, s, c),
            (Precoder::CiOneBit, ConstellationKind::Qam) => ci_onebit_qam(h, s, c, sigma2),
            (Precoder::Opsu, ConstellationKind::Psk) => opsu_psk(h, s, c),
            (Precoder::Opsu, ConstellationKind::Qam) => opsu_qam(h, s, c, sigma2),
            (Precoder::Pbb, ConstellationKind::Psk) => pbb_psk_precode(h, s, c),
            (Precoder::Pbb, ConstellationKind::Qam) => alt_opt_pbb_qam(h, s, c, sigma2, eps0),
            (Precoder::Fbb, ConstellationKind::Psk) => fbb_psk_precode(h, s, c),
            (Precoder::Fbb, ConstellationKind::Qam) => alt_opt_fbb_qam(h, s, c, sigma2, eps0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expand::expand_vector;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_channel(rng: &mut ChaCha8Rng, k: usize, nt: usize) -> DMatrix<Complex64> {
        let std = (0.5f64).sqrt();
        DMatrix::from_fn(k, nt, |_, _| {
            Complex64::new(
                rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng),
                rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng),
            ) * std
        })
    }

    fn random_symbols(rng: &mut ChaCha8Rng, c: &Constellation, k: usize) -> Vec<Complex64> {
        (0..k).map(|_| c.points()[rng.gen_range(0..c.order())]).collect()
    }

    fn unit_energy(x: &[Complex64]) -> f64 {
        x.iter().map(|v| v.norm_sqr()).sum()
    }

    #[test]
    fn beta_closed_forms() {
        // Hx = s with unit average symbol energy and sigma2 = 1: beta = 1/2.
        let k = 3;
        let h = DMatrix::from_diagonal_element(k, k, Complex64::new(1.0, 0.0));
        let c = Constellation::psk(4).unwrap();
        let s: Vec<Complex64> = (0..k).map(|i| c.points()[i]).collect();
        assert_relative_eq!(compute_beta(&s, &h, &s, 1.0), 0.5, epsilon = 1e-12);
        assert_relative_eq!(compute_beta(&s, &h, &s, 0.0), 1.0, epsilon = 1e-12);
        // Degenerate case.
        let zero = vec![Complex64::new(0.0, 0.0); k];
        assert_eq!(compute_beta(&zero, &h, &s, 0.0), 0.0);
    }

    #[test]
    fn beta_real_form_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let c = Constellation::qam(16).unwrap();
        for _ in 0..50 {
            let (k, nt) = (3, 6);
            let h = random_channel(&mut rng, k, nt);
            let s = random_symbols(&mut rng, &c, k);
            let x: Vec<Complex64> = (0..nt)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let sigma2 = rng.gen::<f64>();
            let complex_form = compute_beta(&x, &h, &s, sigma2);
            let h_e = crate::expand::expand_channel(&h);
            let x_e = expand_vector(&x);
            let s_e = expand_vector(&s);
            let real_form =
                (x_e.transpose() * h_e.transpose() * &s_e)[0] / ((&h_e * &x_e).norm_squared() + k as f64 * sigma2);
            assert_relative_eq!(complex_form, real_form, epsilon = 1e-12);
        }
    }

    #[test]
    fn beta_is_the_mse_minimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let c = Constellation::qam(16).unwrap();
        let h = random_channel(&mut rng, 2, 8);
        let s = random_symbols(&mut rng, &c, 2);
        let p = CiProblem::build(&h, &s, &c).unwrap();
        let x: Vec<Complex64> = crate::expand::DacAlphabet::new(8)
            .quantize_complex(&(0..8).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect::<Vec<_>>());
        let sigma2 = 0.4;
        let beta = compute_beta(&x, &h, &s, sigma2);
        let x_e = expand_vector(&x);
        let at = |b: f64| mse_objective(&x_e, b, &p, sigma2);
        assert!(at(beta + 1e-3) > at(beta));
        assert!(at(beta - 1e-3) > at(beta));
    }

    #[test]
    fn zf_identity_channel_is_proportional_to_symbols() {
        let c = Constellation::psk(4).unwrap();
        let h = DMatrix::from_diagonal_element(2, 2, Complex64::new(1.0, 0.0));
        let s = vec![c.points()[0], c.points()[3]];
        let r = zf_precode(&h, &s, false).unwrap();
        let ratio = r.x[0] / s[0];
        assert_relative_eq!((r.x[1] / s[1] - ratio).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(unit_energy(&r.x), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zf_unquantized_has_no_interference() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let c = Constellation::psk(4).unwrap();
        let h = random_channel(&mut rng, 2, 8);
        let s = random_symbols(&mut rng, &c, 2);
        let r = zf_precode(&h, &s, false).unwrap();
        // H x is proportional to s: residual MSE at the inverting beta ~ 0.
        assert!(r.objective < 1e-20);

        // The quantized variant reintroduces interference: the scaling
        // coefficients are no longer equal across users.
        let rq = zf_precode(&h, &s, true).unwrap();
        let p = CiProblem::build(&h, &s, &c).unwrap();
        let lambda = p.scaling_vector(&expand_vector(&rq.x)).unwrap();
        let spread = lambda.max() - lambda.min();
        assert!(spread > 1e-6, "spread = {spread}");
        assert_relative_eq!(unit_energy(&rq.x), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zf_rejects_rank_deficient_channel() {
        let mut h = DMatrix::from_element(2, 4, Complex64::new(0.0, 0.0));
        for j in 0..4 {
            h[(0, j)] = Complex64::new(1.0, 1.0);
            h[(1, j)] = Complex64::new(2.0, 2.0);
        }
        let c = Constellation::psk(4).unwrap();
        let s = vec![c.points()[0], c.points()[1]];
        assert!(zf_precode(&h, &s, false).is_err());
    }

    #[test]
    fn psk_dominance_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let c = Constellation::psk(8).unwrap();
        for trial in 0..25 {
            let h = random_channel(&mut rng, 2, 6);
            let s = random_symbols(&mut rng, &c, 2);
            let ci = ci_onebit_psk(&h, &s, &c).unwrap();
            let opsu = opsu_psk(&h, &s, &c).unwrap();
            let pbb = pbb_psk_precode(&h, &s, &c).unwrap();
            let fbb = fbb_psk_precode(&h, &s, &c).unwrap();
            assert!(ci.objective <= opsu.objective + 1e-12, "trial {trial}");
            assert!(opsu.objective <= pbb.objective + 1e-12, "trial {trial}");
            assert!(pbb.objective <= fbb.objective + 1e-12, "trial {trial}");
            for r in [&ci, &opsu, &pbb, &fbb] {
                assert_relative_eq!(unit_energy(&r.x), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ci_quantization_cannot_beat_relaxation() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let c = Constellation::psk(4).unwrap();
        for _ in 0..20 {
            let h = random_channel(&mut rng, 2, 8);
            let s = random_symbols(&mut rng, &c, 2);
            let (_, sol) = relax(&h, &s, &c).unwrap();
            let ci = ci_onebit_psk(&h, &s, &c).unwrap();
            assert!(ci.objective <= sol.t + 1e-9);
        }
    }

    #[test]
    fn single_user_single_antenna_is_exhaustively_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let c = Constellation::psk(4).unwrap();
        for _ in 0..50 {
            let h = random_channel(&mut rng, 1, 1);
            let s = random_symbols(&mut rng, &c, 1);
            let ci = ci_onebit_psk(&h, &s, &c).unwrap();
            let p = CiProblem::build(&h, &s, &c).unwrap();
            // Enumerate the four DAC points.
            let scale = p.dac().scale();
            let mut best = f64::NEG_INFINITY;
            for re in [-scale, scale] {
                for im in [-scale, scale] {
                    let x = vec![Complex64::new(re, im)];
                    let lambda = p.scaling_vector(&expand_vector(&x)).unwrap();
                    best = best.max(lambda.min());
                }
            }
            assert_relative_eq!(ci.objective, best, epsilon = 1e-12);
        }
    }

    #[test]
    fn opsu_single_residual_matches_pbb() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let c = Constellation::psk(4).unwrap();
        let mut tested = 0;
        for _ in 0..200 {
            let h = random_channel(&mut rng, 1, 3);
            let s = random_symbols(&mut rng, &c, 1);
            let (p, sol) = relax(&h, &s, &c).unwrap();
            let split = SplitState::from_relaxed(
                &sol.x,
                p.dac(),
                default_boundary_eps(p.dac()),
            )
            .unwrap();
            if split.residual_idx.len() != 1 {
                continue;
            }
            tested += 1;
            let opsu = opsu_psk(&h, &s, &c).unwrap();
            let pbb = pbb_psk_precode(&h, &s, &c).unwrap();
            assert_relative_eq!(opsu.objective, pbb.objective, epsilon = 1e-12);
            if tested >= 20 {
                break;
            }
        }
        assert!(tested >= 5, "not enough single-residual instances");
    }

    #[test]
    fn qam_all_corner_symbols_have_no_inner_rows() {
        let c = Constellation::qam(16).unwrap();
        let g = 3.0 / 10.0f64.sqrt();
        let corners = vec![
            Complex64::new(g, g),
            Complex64::new(-g, g),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let h = random_channel(&mut rng, 2, 6);
        let p = CiProblem::build(&h, &corners, &c).unwrap();
        assert!(p.partition().unwrap().inner.is_empty());
        let r = ci_onebit_qam(&h, &corners, &c, 0.1).unwrap();
        assert_relative_eq!(unit_energy(&r.x), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn qam_dominance_and_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let c = Constellation::qam(16).unwrap();
        for trial in 0..15 {
            let h = random_channel(&mut rng, 2, 8);
            let s = random_symbols(&mut rng, &c, 2);
            let sigma2 = 0.5;
            let ci = ci_onebit_qam(&h, &s, &c, sigma2).unwrap();
            let opsu = opsu_qam(&h, &s, &c, sigma2).unwrap();
            let pbb = alt_opt_pbb_qam(&h, &s, &c, sigma2, 1e-3).unwrap();
            assert!(opsu.objective <= ci.objective + 1e-12, "trial {trial}");
            assert!(pbb.objective <= ci.objective + 1e-12, "trial {trial}");
            for w in pbb.diagnostics.mse_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "trial {trial}: {:?}", pbb.diagnostics.mse_trace);
            }
            assert!(!pbb.diagnostics.cap_reached);
        }
    }

    #[test]
    fn opsu_qam_single_residual_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let c = Constellation::qam(16).unwrap();
        let mut tested = 0;
        for _ in 0..300 {
            let h = random_channel(&mut rng, 1, 2);
            let s = random_symbols(&mut rng, &c, 1);
            let sigma2 = 0.3;
            let (p, sol) = relax(&h, &s, &c).unwrap();
            let dac = *p.dac();
            let split =
                SplitState::from_relaxed(&sol.x, &dac, default_boundary_eps(&dac)).unwrap();
            if split.residual_idx.len() != 1 {
                continue;
            }
            tested += 1;
            let opsu = opsu_qam(&h, &s, &c, sigma2).unwrap();
            // Brute force over the two completions with per-candidate beta.
            let mut best = f64::INFINITY;
            for sign in [-1.0, 1.0] {
                let mut x_e = dac.quantize_real(&sol.x);
                x_e[split.residual_idx[0]] = sign * dac.scale();
                let x = collapse_vector(&x_e).unwrap();
                let beta = compute_beta(&x, &h, &s, sigma2);
                best = best.min(mse_objective(&x_e, beta, &p, sigma2));
            }
            assert_relative_eq!(opsu.objective, best, epsilon = 1e-12);
            if tested >= 20 {
                break;
            }
        }
        assert!(tested >= 5);
    }

    #[test]
    fn precoder_registry_round_trip() {
        for p in Precoder::ALL {
            assert_eq!(Precoder::parse(p.name()).unwrap(), p);
        }
        assert!(Precoder::parse("nonsense").is_err());
    }
}
