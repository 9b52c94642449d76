//! Fixed-point encoding of real vectors into `F_q`.
//!
//! A real `x` with `|x| <= R` becomes `round(x * 2^f)`, rounded half away
//! from zero. Negative integers are stored as `q - |v|`, so values above
//! `q / 2` decode as negatives. Sums of up to `n` encodings decode correctly
//! as long as `q > 2 * R * 2^f * n`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldVector, PrimeField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationScheme {
    pub fractional_bits: u32,
    pub clip_range: f64,
}

impl Default for QuantizationScheme {
    fn default() -> Self {
        Self { fractional_bits: 16, clip_range: 1.0 }
    }
}

impl QuantizationScheme {
    pub fn new(fractional_bits: u32, clip_range: f64) -> Result<Self> {
        if fractional_bits > 52 {
            return Err(Error::InvalidParams(format!("fractional_bits {fractional_bits} > 52")));
        }
        if !(clip_range.is_finite() && clip_range > 0.0) {
            return Err(Error::InvalidParams(format!("clip_range {clip_range} must be positive")));
        }
        Ok(Self { fractional_bits, clip_range })
    }

    fn scale(&self) -> f64 {
        (1u64 << self.fractional_bits) as f64
    }

    /// Largest integer magnitude a single clipped value can encode to.
    pub fn max_magnitude(&self) -> u64 {
        round_half_away(self.clip_range * self.scale()).unsigned_abs()
    }

    /// Checks `q > 2 * R * 2^f * total_weight`, i.e. that a sum of encodings
    /// with total multiplicity `total_weight` cannot wrap around.
    pub fn check_headroom(&self, field: &PrimeField, total_weight: u64) -> Result<()> {
        let need = 2u128 * self.max_magnitude() as u128 * total_weight as u128;
        if need < field.modulus() as u128 {
            Ok(())
        } else {
            Err(Error::ClipOverflow {
                index: 0,
                value: format!("headroom {need} >= q = {}", field.modulus()),
            })
        }
    }

    pub fn quantize(&self, x: &[f64], field: &PrimeField) -> Result<FieldVector> {
        x.iter()
            .enumerate()
            .map(|(index, &v)| {
                if v.is_nan() || v.abs() > self.clip_range {
                    return Err(Error::ClipOverflow { index, value: format!("{v}") });
                }
                Ok(field.from_i64(round_half_away(v * self.scale())))
            })
            .collect()
    }

    /// Inverse of [`quantize`](Self::quantize) for a sum of `n_summed` encodings.
    pub fn dequantize(&self, v: &FieldVector, field: &PrimeField, n_summed: u64) -> Vec<f64> {
        let limit = n_summed.max(1) as u128 * self.max_magnitude() as u128;
        v.iter()
            .map(|&e| {
                let s = signed(field, e);
                debug_assert!(s.unsigned_abs() as u128 <= limit, "value outside the no-wraparound range");
                s as f64 / self.scale()
            })
            .collect()
    }

    /// `dequantize(v) / total_weight`, the weighted average.
    pub fn dequantize_mean(&self, v: &FieldVector, field: &PrimeField, total_weight: u64) -> Vec<f64> {
        let w = total_weight.max(1) as f64;
        self.dequantize(v, field, total_weight).into_iter().map(|x| x / w).collect()
    }
}

/// Centered representative in `(-q/2, q/2]`.
pub fn signed(field: &PrimeField, e: FieldElement) -> i64 {
    let q = field.modulus() as i64;
    let v = e.value() as i64;
    if v > q / 2 {
        v - q
    } else {
        v
    }
}

fn round_half_away(v: f64) -> i64 {
    if v >= 0.0 {
        (v + 0.5) as i64
    } else {
        -((-v + 0.5) as i64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Meter;
    use proptest::prelude::*;

    fn q8() -> QuantizationScheme {
        QuantizationScheme::new(8, 4.0).unwrap()
    }

    #[test]
    fn examples() {
        let f = PrimeField::mersenne31();
        let s = q8();
        assert_eq!(s.quantize(&[0.0], &f).unwrap().values(), [0]);
        assert_eq!(s.quantize(&[1.0], &f).unwrap().values(), [256]);
        assert_eq!(s.quantize(&[-1.0], &f).unwrap().values(), [2_147_483_391]);
        assert_eq!(s.dequantize(&f.zeros(1), &f, 1), [0.0]);
        let half = s.quantize(&[0.5], &f).unwrap();
        assert_eq!(s.dequantize(&half, &f, 1), [0.5]);
        let quarter = s.quantize(&[0.25], &f).unwrap();
        let mut acc = f.zeros(1);
        for _ in 0..3 {
            f.add_assign(&mut acc, &quarter, &mut Meter::new()).unwrap();
        }
        assert_eq!(s.dequantize(&acc, &f, 3), [0.75]);
    }

    #[test]
    fn clip_overflow() {
        let f = PrimeField::mersenne31();
        let err = q8().quantize(&[0.0, 4.5], &f).unwrap_err();
        assert!(matches!(err, Error::ClipOverflow { index: 1, .. }));
        assert!(q8().quantize(&[f64::NAN], &f).is_err());
    }

    #[test]
    fn headroom() {
        let f = PrimeField::mersenne31();
        let s = q8();
        assert!(s.check_headroom(&f, (1 << 20) - 1).is_ok());
        assert!(s.check_headroom(&f, 1 << 20).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip_error_bound(xs in proptest::collection::vec(-4.0f64..=4.0, 1..200)) {
            let f = PrimeField::mersenne31();
            let s = q8();
            let back = s.dequantize(&s.quantize(&xs, &f).unwrap(), &f, 1);
            for (a, b) in xs.iter().zip(back.iter()) {
                prop_assert!((a - b).abs() <= 1.0 / 256.0, "{} vs {}", a, b);
            }
        }

        #[test]
        fn sum_homomorphism(
            models in proptest::collection::vec(proptest::collection::vec(-4.0f64..=4.0, 8), 1..=64)
        ) {
            let f = PrimeField::mersenne31();
            let s = q8();
            let n = models.len();
            let mut acc = f.zeros(8);
            let mut truth = [0.0f64; 8];
            for m in &models {
                f.add_assign(&mut acc, &s.quantize(m, &f).unwrap(), &mut Meter::new()).unwrap();
                for (t, v) in truth.iter_mut().zip(m) {
                    *t += v;
                }
            }
            let got = s.dequantize(&acc, &f, n as u64);
            for (g, t) in got.iter().zip(truth.iter()) {
                prop_assert!((g - t).abs() <= n as f64 / 256.0);
            }
        }
    }
}
