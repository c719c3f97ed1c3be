//! PSK/QAM alphabets with Gray bit labels, the two-basis symbol
//! decomposition, the QAM outer/inner partition, and demodulation.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Tolerance for deciding whether a complex value sits on the alphabet.
const ON_POINT_TOL: f64 = 1e-9;
/// Tolerance for distance ties during demodulation; ties go to the lowest
/// symbol index.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstellationKind {
    Psk,
    Qam,
}

/// A modulation alphabet: points, Gray-coded bit labels, and the metadata
/// needed for symbol decomposition.
#[derive(Debug, Clone)]
pub struct Constellation {
    kind: ConstellationKind,
    order: usize,
    bits_per_symbol: usize,
    points: Vec<Complex64>,
    /// `labels[j]` is the Gray label of point `j`, MSB first.
    labels: Vec<Vec<u8>>,
    /// Maps a label value (MSB-first integer) to its point index.
    label_to_point: Vec<usize>,
    /// Largest per-axis coordinate magnitude (QAM outer test).
    max_coord: f64,
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

fn to_bits(value: usize, width: usize) -> Vec<u8> {
    (0..width).rev().map(|b| ((value >> b) & 1) as u8).collect()
}

impl Constellation {
    /// `M`-PSK with points at angles `pi/M + 2*pi*j/M` and the standard
    /// reflected Gray labeling around the circle.
    pub fn psk(order: usize) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() {
            return Err(Error::UnknownModulation(format!("{order}psk")));
        }
        let bits = order.trailing_zeros() as usize;
        let mut points = Vec::with_capacity(order);
        let mut labels = Vec::with_capacity(order);
        for j in 0..order {
            let theta = PI / order as f64 + 2.0 * PI * j as f64 / order as f64;
            points.push(Complex64::from_polar(1.0, theta));
            labels.push(to_bits(gray(j), bits));
        }
        Ok(Self::finish(ConstellationKind::Psk, order, bits, points, labels))
    }

    /// Square QAM with per-axis Gray labels and unit average symbol energy
    /// (16QAM grid `{-3,-1,1,3}` scaled by `1/sqrt(10)`).
    pub fn qam(order: usize) -> Result<Self> {
        let side = (order as f64).sqrt().round() as usize;
        if side * side != order || !side.is_power_of_two() || side < 2 {
            return Err(Error::UnknownModulation(format!("{order}qam")));
        }
        let bits = order.trailing_zeros() as usize;
        let axis_bits = bits / 2;
        // Average energy of the unscaled grid: two PAM axes of (side^2-1)/3 each.
        let energy = 2.0 * ((side * side - 1) as f64) / 3.0;
        let scale = 1.0 / energy.sqrt();
        let amp = |idx: usize| (2.0 * idx as f64 - (side as f64 - 1.0)) * scale;

        let mut points = Vec::with_capacity(order);
        let mut labels = Vec::with_capacity(order);
        for i_idx in 0..side {
            for q_idx in 0..side {
                points.push(Complex64::new(amp(i_idx), amp(q_idx)));
                let mut label = to_bits(gray(i_idx), axis_bits);
                label.extend(to_bits(gray(q_idx), axis_bits));
                labels.push(label);
            }
        }
        Ok(Self::finish(ConstellationKind::Qam, order, bits, points, labels))
    }

    /// Parses names like `qpsk`, `8psk`, `16psk`, `16qam`, `64qam`.
    pub fn parse(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        match lower.as_str() {
            "qpsk" | "4psk" => Self::psk(4),
            "bpsk" => Err(Error::UnknownModulation(lower)),
            _ => {
                if let Some(m) = lower.strip_suffix("psk") {
                    let order = m.parse().map_err(|_| Error::UnknownModulation(lower.clone()))?;
                    Self::psk(order)
                } else if let Some(m) = lower.strip_suffix("qam") {
                    let order = m.parse().map_err(|_| Error::UnknownModulation(lower.clone()))?;
                    Self::qam(order)
                } else {
                    Err(Error::UnknownModulation(lower))
                }
            }
        }
    }

    fn finish(
        kind: ConstellationKind,
        order: usize,
        bits_per_symbol: usize,
        points: Vec<Complex64>,
        labels: Vec<Vec<u8>>,
    ) -> Self {
        let mut label_to_point = vec![0usize; order];
        for (j, label) in labels.iter().enumerate() {
            let value = label.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
            label_to_point[value] = j;
        }
        let max_coord = points
            .iter()
            .map(|p| p.re.abs().max(p.im.abs()))
            .fold(0.0f64, f64::max);
        Self {
            kind,
            order,
            bits_per_symbol,
            points,
            labels,
            label_to_point,
            max_coord,
        }
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn label(&self, point: usize) -> &[u8] {
        &self.labels[point]
    }

    pub fn name(&self) -> String {
        match self.kind {
            ConstellationKind::Psk if self.order == 4 => "qpsk".into(),
            ConstellationKind::Psk => format!("{}psk", self.order),
            ConstellationKind::Qam => format!("{}qam", self.order),
        }
    }

    /// Index of the alphabet point equal to `s`, if any.
    pub fn point_index(&self, s: Complex64) -> Option<usize> {
        self.points
            .iter()
            .position(|&p| (p - s).norm() <= ON_POINT_TOL)
    }

    /// Decomposes an alphabet point into its two basis-aligned components
    /// with `s_a + s_b = s`.
    pub fn decompose(&self, s: Complex64) -> Result<SymbolDecomposition> {
        match self.kind {
            ConstellationKind::Psk => decompose_psk(s, self.order),
            ConstellationKind::Qam => {
                if self.point_index(s).is_none() {
                    return Err(Error::OffConstellation {
                        symbol: format!("{s}"),
                        constellation: self.name(),
                    });
                }
                Ok(decompose_qam(s))
            }
        }
    }

    /// Nearest-point demodulation. PSK decides by phase; QAM rescales by
    /// `beta` (which must be positive) and decides by Euclidean distance.
    /// Ties go to the lowest symbol index.
    pub fn demodulate(&self, y: Complex64, beta: f64) -> Result<(usize, &[u8])> {
        let idx = match self.kind {
            ConstellationKind::Psk => {
                let phase = y.arg();
                self.argmin_by(|p| {
                    let mut d = (phase - p.arg()).abs() % (2.0 * PI);
                    if d > PI {
                        d = 2.0 * PI - d;
                    }
                    d
                })
            }
            ConstellationKind::Qam => {
                if beta <= 0.0 {
                    return Err(Error::NonPositiveBeta(beta));
                }
                let r = beta * y;
                self.argmin_by(|p| (r - p).norm_sqr())
            }
        };
        Ok((idx, &self.labels[idx]))
    }

    fn argmin_by<F: Fn(Complex64) -> f64>(&self, dist: F) -> usize {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (j, &p) in self.points.iter().enumerate() {
            let d = dist(p);
            if d < best_d - TIE_TOL {
                best = j;
                best_d = d;
            }
        }
        best
    }

    /// Maps a bit stream (multiple of `bits_per_symbol`) to symbols.
    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        if bits.len() % self.bits_per_symbol != 0 {
            return Err(Error::BitLength(bits.len(), self.bits_per_symbol));
        }
        Ok(bits
            .chunks(self.bits_per_symbol)
            .map(|chunk| {
                let value = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
                self.points[self.label_to_point[value]]
            })
            .collect())
    }

    /// Outer/inner split of the `2K` symbol-scaling coordinates for a QAM
    /// symbol vector: a real (imaginary) coordinate is outer exactly when its
    /// magnitude reaches the alphabet maximum.
    pub fn partition_qam(&self, s: &[Complex64]) -> Result<QamPartition> {
        assert_eq!(self.kind, ConstellationKind::Qam, "partition is a QAM concept");
        let k = s.len();
        let tol = ON_POINT_TOL * self.max_coord.max(1.0);
        let mut outer = Vec::new();
        let mut inner = Vec::new();
        for (u, &sym) in s.iter().enumerate() {
            if self.point_index(sym).is_none() {
                return Err(Error::OffConstellation {
                    symbol: format!("{sym}"),
                    constellation: self.name(),
                });
            }
            if sym.re.abs() >= self.max_coord - tol {
                outer.push(u);
            } else {
                inner.push(u);
            }
            if sym.im.abs() >= self.max_coord - tol {
                outer.push(k + u);
            } else {
                inner.push(k + u);
            }
        }
        outer.sort_unstable();
        inner.sort_unstable();
        Ok(QamPartition { outer, inner })
    }
}

/// The two basis-aligned components of a symbol, `s = s_a + s_b`.
///
/// For PSK both components are parallel to the point's detection boundaries
/// (`s_a` on the clockwise one); for QAM `s_a` is the real part and `s_b`
/// the imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymbolDecomposition {
    pub s_a: Complex64,
    pub s_b: Complex64,
}

/// Decomposes an `M`-PSK point at angle `theta` along the boundary
/// directions `theta -/+ pi/M` by solving the 2x2 real system.
pub fn decompose_psk(s: Complex64, order: usize) -> Result<SymbolDecomposition> {
    let theta = s.arg();
    let sector = PI / order as f64;
    // Validate membership: unit modulus and angle on the offset grid.
    let k = ((theta - sector) / (2.0 * sector)).round();
    let snapped = sector + 2.0 * sector * k;
    if (s.norm() - 1.0).abs() > ON_POINT_TOL || (theta - snapped).abs() > ON_POINT_TOL {
        return Err(Error::OffConstellation {
            symbol: format!("{s}"),
            constellation: format!("{order}psk"),
        });
    }
    let u_a = Complex64::from_polar(1.0, theta - sector);
    let u_b = Complex64::from_polar(1.0, theta + sector);
    let det = u_a.re * u_b.im - u_b.re * u_a.im;
    let a = (s.re * u_b.im - u_b.re * s.im) / det;
    let b = (u_a.re * s.im - s.re * u_a.im) / det;
    Ok(SymbolDecomposition {
        s_a: a * u_a,
        s_b: b * u_b,
    })
}

/// QAM decomposition: `s_a = Re(s)`, `s_b = j*Im(s)`.
pub fn decompose_qam(s: Complex64) -> SymbolDecomposition {
    SymbolDecomposition {
        s_a: Complex64::new(s.re, 0.0),
        s_b: Complex64::new(0.0, s.im),
    }
}

/// Index split of the `2K` scaling coordinates `[a_1^A..a_K^A, a_1^B..a_K^B]`
/// into CI-exploitable (outer) and exact-delivery (inner) sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QamPartition {
    pub outer: Vec<usize>,
    pub inner: Vec<usize>,
}

/// Hamming distance between two equal-length bit sequences.
pub fn count_bit_errors(sent: &[u8], decided: &[u8]) -> usize {
    assert_eq!(sent.len(), decided.len(), "bit sequences must align");
    sent.iter().zip(decided).filter(|(a, b)| a != b).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn qpsk_decomposition_matches_axes() {
        let s = Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2);
        let d = decompose_psk(s, 4).unwrap();
        assert_relative_eq!(d.s_a.re, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_relative_eq!(d.s_a.im, 0.0, epsilon = 1e-12);
        assert_relative_eq!(d.s_b.re, 0.0, epsilon = 1e-12);
        assert_relative_eq!(d.s_b.im, FRAC_1_SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn psk8_decomposition_closed_form() {
        let s = Complex64::from_polar(1.0, PI / 8.0);
        let d = decompose_psk(s, 8).unwrap();
        // Components along angles 0 and pi/4 with equal weight
        // sin(pi/8)/sin(pi/4) = 1/(2 cos(pi/8)).
        let w = (PI / 8.0).sin() / (PI / 4.0).sin();
        assert_relative_eq!(d.s_a.re, w, epsilon = 1e-12);
        assert_relative_eq!(d.s_a.im, 0.0, epsilon = 1e-12);
        assert_relative_eq!(d.s_b.arg(), PI / 4.0, epsilon = 1e-12);
        assert_relative_eq!((d.s_a + d.s_b - s).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(w, 0.5412, epsilon = 5e-5);
    }

    #[test]
    fn decomposition_reconstructs_every_point() {
        for c in [
            Constellation::psk(4).unwrap(),
            Constellation::psk(8).unwrap(),
            Constellation::psk(16).unwrap(),
            Constellation::qam(16).unwrap(),
            Constellation::qam(64).unwrap(),
        ] {
            for &p in c.points() {
                let d = c.decompose(p).unwrap();
                assert!((d.s_a + d.s_b - p).norm() <= 1e-12, "{} {p}", c.name());
            }
        }
    }

    #[test]
    fn psk_rejects_off_constellation() {
        assert!(decompose_psk(Complex64::new(0.9, 0.1), 4).is_err());
        assert!(decompose_psk(Complex64::from_polar(1.0, 0.1), 4).is_err());
    }

    #[test]
    fn psk_basis_determinant_bounded() {
        // |det| of the 2x2 solve equals sin(2*pi/M): nonparallel boundaries.
        for order in [4usize, 8, 16, 64] {
            let sector = PI / order as f64;
            for j in 0..order {
                let theta = sector + 2.0 * sector * j as f64;
                let u_a = Complex64::from_polar(1.0, theta - sector);
                let u_b = Complex64::from_polar(1.0, theta + sector);
                let det = u_a.re * u_b.im - u_b.re * u_a.im;
                assert!(det.abs() >= (2.0 * PI / order as f64).sin() - 1e-12);
            }
        }
    }

    #[test]
    fn qam_decomposition_definitional() {
        let d = decompose_qam(Complex64::new(3.0, 1.0));
        assert_eq!(d.s_a, Complex64::new(3.0, 0.0));
        assert_eq!(d.s_b, Complex64::new(0.0, 1.0));
        let d = decompose_qam(Complex64::new(-1.0, -1.0));
        assert_eq!(d.s_a, Complex64::new(-1.0, 0.0));
        assert_eq!(d.s_b, Complex64::new(0.0, -1.0));
    }

    #[test]
    fn qam16_energy_and_grid() {
        let c = Constellation::qam(16).unwrap();
        let avg: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / 16.0;
        assert_relative_eq!(avg, 1.0, epsilon = 1e-12);
        let g = 1.0 / 10.0f64.sqrt();
        assert!(c
            .points()
            .iter()
            .all(|p| [g, 3.0 * g].iter().any(|&a| (p.re.abs() - a).abs() < 1e-12)));
    }

    #[test]
    fn psk_points_unit_modulus() {
        for order in [4usize, 8, 16] {
            let c = Constellation::psk(order).unwrap();
            for &p in c.points() {
                assert_relative_eq!(p.norm(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn partition_corner_edge_inner() {
        let c = Constellation::qam(16).unwrap();
        let g = 1.0 / 10.0f64.sqrt();
        // Corner: both coordinates at max magnitude.
        let corner = Complex64::new(3.0 * g, 3.0 * g);
        // Edge with max |Re|: real outer, imaginary inner.
        let edge = Complex64::new(3.0 * g, g);
        // Innermost point: both inner.
        let inner = Complex64::new(g, -g);
        let p = c.partition_qam(&[corner, edge, inner]).unwrap();
        assert_eq!(p.outer, vec![0, 1, 3]); // A_0, A_1, B_0
        assert_eq!(p.inner, vec![2, 4, 5]); // A_2, B_1, B_2
        assert_eq!(p.outer.len() + p.inner.len(), 6);
    }

    #[test]
    fn gray_labels_are_a_bijection() {
        for c in [
            Constellation::psk(8).unwrap(),
            Constellation::qam(16).unwrap(),
            Constellation::qam(64).unwrap(),
        ] {
            let mut seen = vec![false; c.order()];
            for j in 0..c.order() {
                let v = c.label(j).iter().fold(0usize, |a, &b| (a << 1) | b as usize);
                assert!(!seen[v]);
                seen[v] = true;
            }
        }
    }

    #[test]
    fn gray_neighbors_differ_in_one_bit() {
        for c in [
            Constellation::psk(4).unwrap(),
            Constellation::psk(8).unwrap(),
            Constellation::psk(16).unwrap(),
            Constellation::qam(16).unwrap(),
            Constellation::qam(64).unwrap(),
        ] {
            let pts = c.points();
            let mut min_d = f64::INFINITY;
            for i in 0..pts.len() {
                for j in 0..i {
                    min_d = min_d.min((pts[i] - pts[j]).norm());
                }
            }
            for i in 0..pts.len() {
                for j in 0..i {
                    if (pts[i] - pts[j]).norm() <= min_d + 1e-9 {
                        assert_eq!(
                            count_bit_errors(c.label(i), c.label(j)),
                            1,
                            "{}: {i} vs {j}",
                            c.name()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn demod_nearest_phase() {
        let c = Constellation::psk(4).unwrap();
        let (idx, _) = c.demodulate(Complex64::new(2.0, 0.1), 1.0).unwrap();
        assert_eq!(c.points()[idx], Complex64::from_polar(1.0, PI / 4.0));
    }

    #[test]
    fn demod_exact_point_and_tie_break() {
        let c = Constellation::qam(16).unwrap();
        for (j, &p) in c.points().iter().enumerate() {
            let (idx, _) = c.demodulate(p / 2.0, 2.0).unwrap();
            assert_eq!(idx, j);
        }
        // Exact midpoint between the two lowest-index QPSK points.
        let q = Constellation::psk(4).unwrap();
        let (idx, _) = q.demodulate(Complex64::new(0.0, 1.0), 1.0).unwrap();
        let alt = q
            .points()
            .iter()
            .enumerate()
            .filter(|(_, p)| p.im > 0.0)
            .map(|(j, _)| j)
            .min()
            .unwrap();
        assert_eq!(idx, alt, "tie resolves to the lowest index");
    }

    #[test]
    fn demod_rejects_bad_beta() {
        let c = Constellation::qam(16).unwrap();
        assert!(c.demodulate(Complex64::new(1.0, 0.0), 0.0).is_err());
        assert!(c.demodulate(Complex64::new(1.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn modulate_demodulate_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for c in [
            Constellation::psk(4).unwrap(),
            Constellation::psk(8).unwrap(),
            Constellation::qam(16).unwrap(),
            Constellation::qam(64).unwrap(),
        ] {
            let n_bits = 10_000 / c.bits_per_symbol() * c.bits_per_symbol();
            let bits: Vec<u8> = (0..n_bits).map(|_| rng.gen_range(0..2u8)).collect();
            let symbols = c.modulate(&bits).unwrap();
            let mut errors = 0;
            for (i, &s) in symbols.iter().enumerate() {
                let (_, decided) = c.demodulate(s, 1.0).unwrap();
                errors +=
                    count_bit_errors(&bits[i * c.bits_per_symbol()..(i + 1) * c.bits_per_symbol()], decided);
            }
            assert_eq!(errors, 0, "{}", c.name());
        }
    }

    #[test]
    fn modulate_rejects_ragged_bits() {
        let c = Constellation::qam(16).unwrap();
        assert!(matches!(c.modulate(&[0, 1, 1]), Err(Error::BitLength(3, 4))));
    }

    #[test]
    fn bit_error_extremes() {
        let a = [0u8, 1, 0, 1];
        let b = [1u8, 0, 1, 0];
        assert_eq!(count_bit_errors(&a, &b), 4);
        assert_eq!(count_bit_errors(&a, &a), 0);
    }

    #[test]
    fn parse_names() {
        assert_eq!(Constellation::parse("qpsk").unwrap().order(), 4);
        assert_eq!(Constellation::parse("8PSK").unwrap().order(), 8);
        assert_eq!(Constellation::parse("16qam").unwrap().order(), 16);
        assert!(Constellation::parse("7qam").is_err());
        assert!(Constellation::parse("pineapple").is_err());
    }
}
