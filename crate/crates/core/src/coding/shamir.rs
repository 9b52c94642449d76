//! Shamir secret sharing of field vectors, plus byte packing for secrets
//! that are not natively field elements.

use alloc::format;
use alloc::vec::Vec;

use super::poly;
use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldVector, Meter, PrimeField};
use crate::stream::SeedStream;

/// Degree-`T` shares of one secret vector; the share for holder `h` is the
/// sharing polynomial evaluated at `x = h`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShamirShares {
    pub threshold: usize,
    pub secret_len: usize,
    pub shares: Vec<(u32, FieldVector)>,
}

impl ShamirShares {
    pub fn get(&self, holder: u32) -> Option<&FieldVector> {
        self.shares.iter().find(|(h, _)| *h == holder).map(|(_, s)| s)
    }
}

/// Shares `secret` among `holders` with fresh random coefficients.
pub fn shamir_share(
    field: &PrimeField,
    secret: &FieldVector,
    holders: &[u32],
    degree: usize,
    rng: &mut SeedStream,
    meter: &mut Meter,
) -> Result<ShamirShares> {
    check_holders(field, holders, degree)?;
    let coeffs: Vec<FieldVector> = (0..degree).map(|_| rng.expand(field, secret.len(), meter)).collect();
    shamir_share_with_coeffs(field, secret, holders, &coeffs, meter)
}

/// Shares `secret` using `coeffs[r]` as the degree-`(r+1)` coefficients.
pub fn shamir_share_with_coeffs(
    field: &PrimeField,
    secret: &FieldVector,
    holders: &[u32],
    coeffs: &[FieldVector],
    meter: &mut Meter,
) -> Result<ShamirShares> {
    check_holders(field, holders, coeffs.len())?;
    if let Some(c) = coeffs.iter().find(|c| c.len() != secret.len()) {
        return Err(Error::ShapeMismatch { expected: secret.len(), got: c.len() });
    }
    let shares = holders
        .iter()
        .map(|&h| {
            let x = field.elem(h as u64);
            let poly: Vec<&FieldVector> = core::iter::once(secret).chain(coeffs.iter()).collect();
            let mut acc = poly[poly.len() - 1].clone();
            for c in poly[..poly.len() - 1].iter().rev() {
                acc = field.scale(&acc, x, meter);
                field.add_assign(&mut acc, c, meter)?;
            }
            Ok((h, acc))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ShamirShares { threshold: coeffs.len() + 1, secret_len: secret.len(), shares })
}

fn check_holders(field: &PrimeField, holders: &[u32], degree: usize) -> Result<()> {
    if degree >= holders.len() {
        return Err(Error::InvalidParams(format!("degree {degree} needs more than {} holders", holders.len())));
    }
    for (i, &h) in holders.iter().enumerate() {
        if h == 0 || h >= field.modulus() {
            return Err(Error::InvalidParams(format!("holder id {h} is not a nonzero field point")));
        }
        if holders[..i].contains(&h) {
            return Err(Error::InvalidParams(format!("holder id {h} repeated")));
        }
    }
    Ok(())
}

/// Lagrange weights for evaluating at zero from shares at `holders`.
pub fn zero_weights(field: &PrimeField, holders: &[u32], meter: &mut Meter) -> Result<Vec<FieldElement>> {
    let xs: Vec<FieldElement> = holders.iter().map(|&h| field.elem(h as u64)).collect();
    poly::lagrange_weights_at(field, &xs, FieldElement::ZERO, meter)
}

/// Combines shares with precomputed [`zero_weights`].
pub fn combine(
    field: &PrimeField,
    weights: &[FieldElement],
    shares: &[&FieldVector],
    meter: &mut Meter,
) -> Result<FieldVector> {
    if weights.len() != shares.len() || shares.is_empty() {
        return Err(Error::ShapeMismatch { expected: weights.len(), got: shares.len() });
    }
    let mut acc = field.zeros(shares[0].len());
    for (&w, s) in weights.iter().zip(shares) {
        field.scaled_add_assign(&mut acc, w, s, meter)?;
    }
    Ok(acc)
}

/// Reconstructs from the first `threshold` shares.
pub fn shamir_reconstruct(
    field: &PrimeField,
    shares: &[(u32, FieldVector)],
    threshold: usize,
    meter: &mut Meter,
) -> Result<FieldVector> {
    if shares.len() < threshold || threshold == 0 {
        return Err(Error::InsufficientShares { needed: threshold.max(1), got: shares.len() });
    }
    let used = &shares[..threshold];
    let holders: Vec<u32> = used.iter().map(|(h, _)| *h).collect();
    let w = zero_weights(field, &holders, meter)?;
    let refs: Vec<&FieldVector> = used.iter().map(|(_, s)| s).collect();
    combine(field, &w, &refs, meter)
}

/// Bits per limb, `floor(log2 q)`, so that every limb is below `q`.
pub fn limb_bits(field: &PrimeField) -> u32 {
    31 - field.modulus().leading_zeros()
}

/// Packs bytes little-endian into limbs of [`limb_bits`] bits.
pub fn bytes_to_limbs(field: &PrimeField, bytes: &[u8]) -> FieldVector {
    let bits = limb_bits(field) as usize;
    let total = bytes.len() * 8;
    (0..total.div_ceil(bits))
        .map(|l| {
            let mut v = 0u64;
            for b in 0..bits {
                let pos = l * bits + b;
                if pos < total && (bytes[pos / 8] >> (pos % 8)) & 1 == 1 {
                    v |= 1 << b;
                }
            }
            field.elem(v)
        })
        .collect()
}

/// Inverse of [`bytes_to_limbs`]; fails if the limbs carry stray bits.
pub fn limbs_to_bytes(field: &PrimeField, limbs: &FieldVector, nbytes: usize) -> Result<Vec<u8>> {
    let bits = limb_bits(field) as usize;
    if limbs.len() != (nbytes * 8).div_ceil(bits) {
        return Err(Error::ShapeMismatch { expected: (nbytes * 8).div_ceil(bits), got: limbs.len() });
    }
    let mut out = alloc::vec![0u8; nbytes];
    for (l, e) in limbs.iter().enumerate() {
        let v = e.value() as u64;
        if v >> bits != 0 {
            return Err(Error::Malformed("limb exceeds packing width"));
        }
        for b in 0..bits {
            let pos = l * bits + b;
            if (v >> b) & 1 == 1 {
                if pos >= nbytes * 8 {
                    return Err(Error::Malformed("limb padding bits set"));
                }
                out[pos / 8] |= 1 << (pos % 8);
            }
        }
    }
    Ok(out)
}
