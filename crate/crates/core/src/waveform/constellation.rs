use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square QAM alphabet with per-axis Gray labels.
///
/// Points are indexed by their label: `points[label]` is the symbol for the
/// bit pattern whose most significant bit is the first bit on the wire. The
/// upper half of the label drives the in-phase axis, the lower half the
/// quadrature axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits_per_symbol: usize,
    points: Vec<Complex64>,
}

/// Gray-coded PAM amplitude for the bits `b[0..]`, first bit selecting the sign.
fn gray_pam_level(bits: &[u8]) -> f64 {
    let m = bits.len();
    let mut acc = 1.0;
    for k in (1..m).rev() {
        acc = (1u32 << (m - k)) as f64 - (1.0 - 2.0 * bits[k] as f64) * acc;
    }
    (1.0 - 2.0 * bits[0] as f64) * acc
}

impl Constellation {
    pub fn new(order: usize) -> Result<Self> {
        if ![4, 16, 64].contains(&order) {
            return Err(Error::InvalidConfig(format!(
                "constellation order {order} not in {{4, 16, 64}}"
            )));
        }
        let bits_per_symbol = order.trailing_zeros() as usize;
        let per_axis = bits_per_symbol / 2;
        let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt().recip();
        let points = (0..order)
            .map(|label| {
                let bits = label_bits(label, bits_per_symbol);
                let re = gray_pam_level(&bits[..per_axis]);
                let im = gray_pam_level(&bits[per_axis..]);
                Complex64::new(re, im) * scale
            })
            .collect();
        Ok(Constellation {
            order,
            bits_per_symbol,
            points,
        })
    }

    pub fn qpsk() -> Self {
        Constellation::new(4).expect("4 is a supported order")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Symbols indexed by label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    pub fn label_of(&self, bits: &[u8]) -> usize {
        bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
    }

    /// Map bits to symbols, `bits_per_symbol` bits at a time.
    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        if !bits.len().is_multiple_of(self.bits_per_symbol) {
            return Err(Error::BitLength {
                len: bits.len(),
                bits_per_symbol: self.bits_per_symbol,
            });
        }
        Ok(bits
            .chunks_exact(self.bits_per_symbol)
            .map(|c| self.points[self.label_of(c)])
            .collect())
    }

    /// Label of the nearest point.
    pub fn nearest(&self, z: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        best
    }

    /// Hard-decision demapping back to bits.
    pub fn demap_hard(&self, symbols: &[Complex64]) -> Vec<u8> {
        let mut out = Vec::with_capacity(symbols.len() * self.bits_per_symbol);
        for &s in symbols {
            out.extend(label_bits(self.nearest(s), self.bits_per_symbol));
        }
        out
    }
}

/// Bits of `label`, most significant first.
pub fn label_bits(label: usize, width: usize) -> Vec<u8> {
    (0..width).map(|k| ((label >> (width - 1 - k)) & 1) as u8).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn qpsk_gray_corners() {
        let c = Constellation::qpsk();
        let s = c.modulate(&[0, 0, 1, 1, 0, 1]).unwrap();
        assert!((s[0] - Complex64::new(SQRT_HALF, SQRT_HALF)).norm() < 1e-15);
        assert!((s[1] - Complex64::new(-SQRT_HALF, -SQRT_HALF)).norm() < 1e-15);
        assert!((s[2] - Complex64::new(SQRT_HALF, -SQRT_HALF)).norm() < 1e-15);
    }

    #[test]
    fn unit_average_energy() {
        for order in [4, 16, 64] {
            let c = Constellation::new(order).unwrap();
            let e: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            assert!((e - 1.0).abs() < 1e-12, "order {order}: {e}");
        }
    }

    #[test]
    fn points_are_distinct() {
        for order in [4, 16, 64] {
            let c = Constellation::new(order).unwrap();
            for a in 0..order {
                for b in (a + 1)..order {
                    assert!((c.point(a) - c.point(b)).norm() > 1e-6);
                }
            }
        }
    }

    #[test]
    fn nearest_neighbours_differ_in_one_bit() {
        for order in [16, 64] {
            let c = Constellation::new(order).unwrap();
            let side = (order as f64).sqrt() as usize;
            let scale = (2.0 * (order as f64 - 1.0) / 3.0).sqrt().recip();
            let step = 2.0 * scale;
            for a in 0..order {
                for b in 0..order {
                    let d = (c.point(a) - c.point(b)).norm();
                    if (d - step).abs() < 1e-9 {
                        assert_eq!((a ^ b).count_ones(), 1, "order {order} side {side}");
                    }
                }
            }
        }
    }

    #[test]
    fn sixteen_qam_msb_on_inphase() {
        let c = Constellation::new(16).unwrap();
        let s = 10f64.sqrt().recip();
        // 0b0001: I bits 00 -> +1, Q bits 01 -> +3
        assert!((c.point(0b0001) - Complex64::new(s, 3.0 * s)).norm() < 1e-12);
        // 0b1011: I bits 10 -> -1, Q bits 11 -> -3
        assert!((c.point(0b1011) - Complex64::new(-s, -3.0 * s)).norm() < 1e-12);
    }

    #[test]
    fn odd_bit_count_rejected() {
        let c = Constellation::new(16).unwrap();
        assert!(matches!(c.modulate(&[0, 1, 1]), Err(Error::BitLength { .. })));
        assert!(Constellation::new(8).is_err());
    }

    proptest! {
        #[test]
        fn hard_round_trip(order_idx in 0usize..3, raw in proptest::collection::vec(0u8..2, 0..60)) {
            let order = [4, 16, 64][order_idx];
            let c = Constellation::new(order).unwrap();
            let k = c.bits_per_symbol();
            let bits: Vec<u8> = raw[..raw.len() / k * k].to_vec();
            let syms = c.modulate(&bits).unwrap();
            prop_assert_eq!(c.demap_hard(&syms), bits);
        }
    }
}
