//! Constructive-interference geometry: the scaling matrix `M` mapping the
//! real-expanded transmit vector to the symbol-scaling coefficients
//! `Lambda = M x_E`, the max-min and MSE objectives, and the structural
//! audits (rank, boundary count, KKT residuals).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::constellation::{Constellation, ConstellationKind, QamPartition};
use crate::error::{Error, Result};
use crate::expand::{expand_channel, expand_vector, DacAlphabet};
use crate::solver::MaxMinLp;

/// Everything needed to evaluate `Lambda = M x_E` for one (channel, symbol)
/// instance: the scaling matrix, the DAC alphabet, the real-expanded channel
/// and symbols, and the QAM outer/inner partition when applicable.
#[derive(Debug, Clone)]
pub struct CiProblem {
    m: DMatrix<f64>,
    dac: DacAlphabet,
    h_e: DMatrix<f64>,
    s_e: DVector<f64>,
    partition: Option<QamPartition>,
    users: usize,
}

impl CiProblem {
    /// Builds the scaling matrix from the channel and the symbol vector.
    /// Row `k` carries `alpha_k^A`, row `K + k` carries `alpha_k^B`.
    pub fn build(h: &DMatrix<Complex64>, s: &[Complex64], c: &Constellation) -> Result<Self> {
        let (k_users, nt) = h.shape();
        if s.len() != k_users {
            return Err(Error::DimensionMismatch {
                expected: k_users,
                got: s.len(),
            });
        }
        let mut m = DMatrix::zeros(2 * k_users, 2 * nt);
        for (k, &sym) in s.iter().enumerate() {
            let d = c.decompose(sym)?;
            let det = d.s_a.re * d.s_b.im - d.s_a.im * d.s_b.re;
            if det.abs() < 1e-12 {
                return Err(Error::DegenerateDecomposition { user: k, det });
            }
            for j in 0..nt {
                let h_re = h[(k, j)].re;
                let h_im = h[(k, j)].im;
                // alpha_k^A = a' Re(x) + b' Im(x)
                m[(k, j)] = (d.s_b.im * h_re - d.s_b.re * h_im) / det;
                m[(k, nt + j)] = -(d.s_b.im * h_im + d.s_b.re * h_re) / det;
                // alpha_k^B = c' Re(x) + d' Im(x)
                m[(k_users + k, j)] = (d.s_a.re * h_im - d.s_a.im * h_re) / det;
                m[(k_users + k, nt + j)] = (d.s_a.re * h_re + d.s_a.im * h_im) / det;
            }
        }
        let partition = match c.kind() {
            ConstellationKind::Qam => Some(c.partition_qam(s)?),
            ConstellationKind::Psk => None,
        };
        Ok(Self {
            m,
            dac: DacAlphabet::new(nt),
            h_e: expand_channel(h),
            s_e: expand_vector(s),
            partition,
            users: k_users,
        })
    }

    pub fn scaling_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn dac(&self) -> &DacAlphabet {
        &self.dac
    }

    pub fn expanded_channel(&self) -> &DMatrix<f64> {
        &self.h_e
    }

    pub fn expanded_symbols(&self) -> &DVector<f64> {
        &self.s_e
    }

    pub fn partition(&self) -> Option<&QamPartition> {
        self.partition.as_ref()
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn antennas(&self) -> usize {
        self.dac.nt()
    }

    /// `Lambda = M x_E`.
    pub fn scaling_vector(&self, x_e: &DVector<f64>) -> Result<DVector<f64>> {
        if x_e.len() != self.m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.m.ncols(),
                got: x_e.len(),
            });
        }
        Ok(&self.m * x_e)
    }

    /// The full-box relaxation of this instance as a max-min LP, with
    /// equality rows on the QAM inner set.
    pub fn relaxation(&self) -> MaxMinLp {
        let eq_rows = self
            .partition
            .as_ref()
            .map(|p| p.inner.clone())
            .unwrap_or_default();
        MaxMinLp::new(
            self.m.clone(),
            DVector::zeros(self.m.nrows()),
            eq_rows,
            self.dac.scale(),
        )
    }
}

/// Max-min CI objective: the smallest symbol-scaling coefficient.
pub fn psk_objective(lambda: &DVector<f64>) -> f64 {
    lambda.min()
}

/// `|| s_E - beta H_E x_E ||^2 + beta^2 K sigma^2`.
pub fn mse_objective(x_e: &DVector<f64>, beta: f64, p: &CiProblem, sigma2: f64) -> f64 {
    let r = &p.s_e - beta * (&p.h_e * x_e);
    r.norm_squared() + beta * beta * p.users as f64 * sigma2
}

/// Numerical rank via singular values, thresholded at
/// `max(nrows, ncols) * eps * sigma_max`.
pub fn audit_rank(m: &DMatrix<f64>) -> usize {
    let svd = m.clone().svd(false, false);
    let sigma_max = svd.singular_values.max();
    if sigma_max == 0.0 {
        return 0;
    }
    let tol = m.nrows().max(m.ncols()) as f64 * f64::EPSILON * sigma_max;
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}

/// Default membership tolerance for the boundary audit.
pub fn default_boundary_eps(dac: &DacAlphabet) -> f64 {
    1e-6 * dac.scale()
}

/// Indices of entries strictly inside the box, `|x_n| < scale - eps`.
#[derive(Debug, Clone)]
pub struct BoundaryAudit {
    pub interior: Vec<usize>,
}

impl BoundaryAudit {
    pub fn count(&self) -> usize {
        self.interior.len()
    }
}

/// Splits a box-feasible vector into boundary and interior entries.
/// Entries beyond `scale + eps` are a box violation and produce an error.
pub fn audit_boundary(x_e: &DVector<f64>, dac: &DacAlphabet, eps: f64) -> Result<BoundaryAudit> {
    let scale = dac.scale();
    let mut interior = Vec::new();
    for (n, &v) in x_e.iter().enumerate() {
        if v.abs() > scale + eps {
            return Err(Error::BoxViolation {
                index: n,
                value: v.abs(),
                bound: scale,
            });
        }
        if v.abs() < scale - eps {
            interior.push(n);
        }
    }
    Ok(BoundaryAudit { interior })
}

// The KKT residual report lives next to the LP types; it is part of this
// module's audit surface as well.
pub use crate::solver::{kkt_residuals, KktReport};
