//! Complex/real-equivalent conversions, the 1-bit DAC alphabet, and
//! element-wise sign quantization.
//!
//! A length-`N` complex vector is expanded to the length-`2N` real vector
//! `[Re(x); Im(x)]`, and a `K x Nt` complex matrix to the `2K x 2Nt` block
//! matrix `[[Re, -Im], [Im, Re]]`, so that `expand(H x) = expand(H) * expand(x)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// The 1-bit DAC output alphabet for an `Nt`-antenna transmitter.
///
/// Every real component of the transmit vector is `+/- scale` with
/// `scale = 1/sqrt(2*Nt)`, so the complex entries have squared magnitude
/// `1/Nt` and the full vector has unit energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DacAlphabet {
    nt: usize,
    scale: f64,
}

impl DacAlphabet {
    pub fn new(nt: usize) -> Self {
        assert!(nt > 0, "antenna count must be positive");
        Self {
            nt,
            scale: 1.0 / (2.0 * nt as f64).sqrt(),
        }
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    /// Per-component amplitude `1/sqrt(2*Nt)`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Sign-quantize one real component. `sign(0) := +1` so the map is total.
    pub fn quantize_component(&self, v: f64) -> f64 {
        if v < 0.0 {
            -self.scale
        } else {
            self.scale
        }
    }

    /// Element-wise 1-bit quantization of a complex vector.
    pub fn quantize_complex(&self, x: &[Complex64]) -> Vec<Complex64> {
        x.iter()
            .map(|c| Complex64::new(self.quantize_component(c.re), self.quantize_component(c.im)))
            .collect()
    }

    /// Element-wise 1-bit quantization of a real-expanded vector.
    pub fn quantize_real(&self, x_e: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(x_e.len(), x_e.iter().map(|&v| self.quantize_component(v)))
    }
}

/// `[Re(x); Im(x)]` for a complex vector `x`.
pub fn expand_vector(x: &[Complex64]) -> DVector<f64> {
    let n = x.len();
    let mut out = DVector::zeros(2 * n);
    for (i, c) in x.iter().enumerate() {
        out[i] = c.re;
        out[n + i] = c.im;
    }
    out
}

/// Inverse of [`expand_vector`]: entry `n` becomes `x_e[n] + j*x_e[n+N]`.
pub fn collapse_vector(x_e: &DVector<f64>) -> Result<Vec<Complex64>> {
    if x_e.len() % 2 != 0 {
        return Err(Error::OddLength(x_e.len()));
    }
    let n = x_e.len() / 2;
    Ok((0..n).map(|i| Complex64::new(x_e[i], x_e[n + i])).collect())
}

/// Real-equivalent expansion `[[Re(H), -Im(H)], [Im(H), Re(H)]]` of a
/// complex `K x Nt` matrix.
pub fn expand_channel(h: &DMatrix<Complex64>) -> DMatrix<f64> {
    let (k, nt) = h.shape();
    let mut out = DMatrix::zeros(2 * k, 2 * nt);
    for r in 0..k {
        for c in 0..nt {
            let v = h[(r, c)];
            out[(r, c)] = v.re;
            out[(r, nt + c)] = -v.im;
            out[(k + r, c)] = v.im;
            out[(k + r, nt + c)] = v.re;
        }
    }
    out
}
