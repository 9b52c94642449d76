//! Dense univariate polynomials over `F_q`, lowest degree first.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{FieldElement, Meter, PrimeField};

/// Coefficients of `prod_m (x - a_m)`.
pub fn master_poly(field: &PrimeField, points: &[FieldElement], meter: &mut Meter) -> Vec<FieldElement> {
    let mut p = vec![FieldElement::ONE];
    for &a in points {
        let mut next = vec![FieldElement::ZERO; p.len() + 1];
        for (i, &c) in p.iter().enumerate() {
            next[i + 1] = field.add(next[i + 1], c);
            next[i] = field.sub(next[i], field.mul(a, c));
        }
        meter.ops(3 * p.len());
        p = next;
    }
    p
}

/// The Lagrange basis polynomials `l_m(x)` for distinct `points`, as
/// coefficient vectors of length `points.len()`.
///
/// Each basis is the master polynomial divided by `(x - a_m)` (synthetic
/// division), scaled by the inverse of its value at `a_m`.
pub fn basis_polys(
    field: &PrimeField,
    points: &[FieldElement],
    meter: &mut Meter,
) -> Result<Vec<Vec<FieldElement>>> {
    let n = points.len();
    let master = master_poly(field, points, meter);
    let mut out = Vec::with_capacity(n);
    for (m, &a) in points.iter().enumerate() {
        let mut quot = vec![FieldElement::ZERO; n];
        let mut carry = FieldElement::ZERO;
        for i in (0..n).rev() {
            carry = field.add(master[i + 1], field.mul(carry, a));
            quot[i] = carry;
        }
        let mut denom = FieldElement::ONE;
        for (l, &b) in points.iter().enumerate() {
            if l != m {
                denom = field.mul(denom, field.sub(a, b));
            }
        }
        let inv = field.inv(denom).map_err(|_| Error::InvalidParams("duplicate interpolation point".into()))?;
        for c in quot.iter_mut() {
            *c = field.mul(*c, inv);
        }
        meter.ops(2 * n + 2 * n.saturating_sub(1) + 1 + n);
        out.push(quot);
    }
    Ok(out)
}

/// The values `l_m(x)` of every Lagrange basis polynomial at one point.
pub fn lagrange_weights_at(
    field: &PrimeField,
    points: &[FieldElement],
    x: FieldElement,
    meter: &mut Meter,
) -> Result<Vec<FieldElement>> {
    let n = points.len();
    let mut out = Vec::with_capacity(n);
    for (m, &a) in points.iter().enumerate() {
        let mut num = FieldElement::ONE;
        let mut den = FieldElement::ONE;
        for (l, &b) in points.iter().enumerate() {
            if l != m {
                num = field.mul(num, field.sub(x, b));
                den = field.mul(den, field.sub(a, b));
            }
        }
        let inv = field.inv(den).map_err(|_| Error::InvalidParams("duplicate interpolation point".into()))?;
        out.push(field.mul(num, inv));
        meter.ops(4 * n.saturating_sub(1) + 2);
    }
    Ok(out)
}

pub fn horner(field: &PrimeField, coeffs: &[FieldElement], x: FieldElement) -> FieldElement {
    coeffs.iter().rev().fold(FieldElement::ZERO, |acc, &c| field.add(field.mul(acc, x), c))
}
