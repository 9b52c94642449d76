//! Prime-field arithmetic over `F_q` for primes `q < 2^32`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::Sub;

use crate::error::{Error, Result};

/// `2^31 - 1`, the default modulus.
pub const MERSENNE_31: u32 = 0x7fff_ffff;

/// A canonical representative in `[0, q)`.
///
/// Elements do not carry their modulus; they are only produced through a
/// [`PrimeField`], which keeps them reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FieldElement(u32);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn value(self) -> u32 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Counts of the work performed by one party.
///
/// Field operations are additions, subtractions, multiplications and
/// inversions over `F_q`; PRG elements are field elements produced by seed
/// expansion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Meter {
    pub field_ops: u64,
    pub prg_elems: u64,
    pub prg_streams: u64,
    pub decodes: u64,
    pub decoded_elems: u64,
}

impl Meter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn ops(&mut self, n: usize) {
        self.field_ops += n as u64;
    }
}

impl Sub for Meter {
    type Output = Meter;

    fn sub(self, rhs: Meter) -> Meter {
        Meter {
            field_ops: self.field_ops - rhs.field_ops,
            prg_elems: self.prg_elems - rhs.prg_elems,
            prg_streams: self.prg_streams - rhs.prg_streams,
            decodes: self.decodes - rhs.decodes,
            decoded_elems: self.decoded_elems - rhs.decoded_elems,
        }
    }
}

/// The prime field `F_q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimeField {
    q: u32,
}

impl PrimeField {
    /// Builds `F_q`, rejecting composite or out-of-range moduli.
    pub fn new(q: u64) -> Result<Self> {
        if !(2..(1u64 << 32)).contains(&q) {
            return Err(Error::ModulusOutOfRange(q));
        }
        if !is_prime_u32(q as u32) {
            return Err(Error::NotPrime(q));
        }
        Ok(Self { q: q as u32 })
    }

    pub fn mersenne31() -> Self {
        Self { q: MERSENNE_31 }
    }

    #[inline]
    pub fn modulus(&self) -> u32 {
        self.q
    }

    /// Reduces an arbitrary integer into the field.
    #[inline]
    pub fn elem(&self, v: u64) -> FieldElement {
        FieldElement((v % self.q as u64) as u32)
    }

    /// Maps a signed integer, sending negatives to the upper half of `[0, q)`.
    pub fn from_i64(&self, v: i64) -> FieldElement {
        let r = v.rem_euclid(self.q as i64);
        FieldElement(r as u32)
    }

    /// Accepts `v` only if it is already canonical.
    pub fn try_elem(&self, v: u32) -> Result<FieldElement> {
        if v < self.q {
            Ok(FieldElement(v))
        } else {
            Err(Error::Malformed("field element out of range"))
        }
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let s = a.0 as u64 + b.0 as u64;
        let q = self.q as u64;
        FieldElement(if s >= q { s - q } else { s } as u32)
    }

    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 >= b.0 {
            FieldElement(a.0 - b.0)
        } else {
            FieldElement((a.0 as u64 + self.q as u64 - b.0 as u64) as u32)
        }
    }

    #[inline]
    pub fn neg(&self, a: FieldElement) -> FieldElement {
        if a.0 == 0 {
            a
        } else {
            FieldElement(self.q - a.0)
        }
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(self.reduce(a.0 as u64 * b.0 as u64))
    }

    #[inline]
    fn reduce(&self, x: u64) -> u32 {
        if self.q == MERSENNE_31 {
            // x < 2^62, fold twice
            let lo = x & MERSENNE_31 as u64;
            let hi = x >> 31;
            let mut r = lo + hi;
            r = (r & MERSENNE_31 as u64) + (r >> 31);
            if r >= MERSENNE_31 as u64 {
                r -= MERSENNE_31 as u64;
            }
            r as u32
        } else {
            (x % self.q as u64) as u32
        }
    }

    pub fn pow(&self, base: FieldElement, mut exp: u64) -> FieldElement {
        let mut acc = FieldElement(1 % self.q);
        let mut b = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by Fermat's little theorem.
    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(Error::ZeroInverse);
        }
        Ok(self.pow(a, self.q as u64 - 2))
    }

    pub fn zeros(&self, len: usize) -> FieldVector {
        FieldVector(vec![FieldElement::ZERO; len])
    }

    /// Builds a vector from raw integers, reducing each.
    pub fn vector<I: IntoIterator<Item = u64>>(&self, values: I) -> FieldVector {
        FieldVector(values.into_iter().map(|v| self.elem(v)).collect())
    }

    /// `acc += v` componentwise.
    pub fn add_assign(&self, acc: &mut FieldVector, v: &FieldVector, meter: &mut Meter) -> Result<()> {
        check_len(acc.len(), v.len())?;
        for (a, &b) in acc.0.iter_mut().zip(v.0.iter()) {
            *a = self.add(*a, b);
        }
        meter.ops(v.len());
        Ok(())
    }

    /// `acc -= v` componentwise.
    pub fn sub_assign(&self, acc: &mut FieldVector, v: &FieldVector, meter: &mut Meter) -> Result<()> {
        check_len(acc.len(), v.len())?;
        for (a, &b) in acc.0.iter_mut().zip(v.0.iter()) {
            *a = self.sub(*a, b);
        }
        meter.ops(v.len());
        Ok(())
    }

    /// `acc += c * v` componentwise (one multiply and one add per element).
    pub fn scaled_add_assign(
        &self,
        acc: &mut FieldVector,
        c: FieldElement,
        v: &FieldVector,
        meter: &mut Meter,
    ) -> Result<()> {
        check_len(acc.len(), v.len())?;
        for (a, &b) in acc.0.iter_mut().zip(v.0.iter()) {
            *a = self.add(*a, self.mul(c, b));
        }
        meter.ops(2 * v.len());
        Ok(())
    }

    /// `v * c` componentwise.
    pub fn scale(&self, v: &FieldVector, c: FieldElement, meter: &mut Meter) -> FieldVector {
        meter.ops(v.len());
        FieldVector(v.0.iter().map(|&x| self.mul(x, c)).collect())
    }

    pub fn sum(&self, a: &FieldVector, b: &FieldVector, meter: &mut Meter) -> Result<FieldVector> {
        let mut out = a.clone();
        self.add_assign(&mut out, b, meter)?;
        Ok(out)
    }

    pub fn difference(&self, a: &FieldVector, b: &FieldVector, meter: &mut Meter) -> Result<FieldVector> {
        let mut out = a.clone();
        self.sub_assign(&mut out, b, meter)?;
        Ok(out)
    }

    /// Rank of a row-major matrix by Gaussian elimination.
    pub fn rank(&self, matrix: &[Vec<FieldElement>]) -> usize {
        let mut m: Vec<Vec<FieldElement>> = matrix.to_vec();
        let rows = m.len();
        let cols = m.first().map_or(0, |r| r.len());
        let mut rank = 0;
        for col in 0..cols {
            let Some(pivot) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
                continue;
            };
            m.swap(rank, pivot);
            let inv = self.inv(m[rank][col]).expect("pivot is nonzero");
            let pivot_row = m[rank].clone();
            for (r, row) in m.iter_mut().enumerate() {
                if r != rank && !row[col].is_zero() {
                    let f = self.mul(row[col], inv);
                    for (x, &p) in row[col..cols].iter_mut().zip(&pivot_row[col..cols]) {
                        *x = self.sub(*x, self.mul(f, p));
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// Inverse of a square matrix, or `None` if singular.
    pub fn invert_matrix(&self, matrix: &[Vec<FieldElement>], meter: &mut Meter) -> Option<Vec<Vec<FieldElement>>> {
        let n = matrix.len();
        let mut a: Vec<Vec<FieldElement>> = matrix.to_vec();
        let mut inv: Vec<Vec<FieldElement>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { FieldElement::ONE } else { FieldElement::ZERO }).collect())
            .collect();
        for col in 0..n {
            let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            let p = self.inv(a[col][col]).ok()?;
            for c in 0..n {
                a[col][c] = self.mul(a[col][c], p);
                inv[col][c] = self.mul(inv[col][c], p);
            }
            meter.ops(1 + 2 * n);
            // counted for every row so the total is data independent
            meter.ops(4 * n * (n - 1));
            for r in 0..n {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let f = a[r][col];
                for c in 0..n {
                    let t = self.mul(f, a[col][c]);
                    a[r][c] = self.sub(a[r][c], t);
                    let t = self.mul(f, inv[col][c]);
                    inv[r][c] = self.sub(inv[r][c], t);
                }
            }
        }
        Some(inv)
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { expected, got })
    }
}

/// Deterministic Miller-Rabin; bases {2, 7, 61} cover all `n < 2^32`.
fn is_prime_u32(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u32, 3, 5, 7, 11, 13, 61] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let n64 = n as u64;
    let mut d = n64 - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let powmod = |mut b: u64, mut e: u64| {
        let mut r = 1u64;
        b %= n64;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % n64;
            }
            b = b * b % n64;
            e >>= 1;
        }
        r
    };
    'outer: for a in [2u64, 7, 61] {
        let mut x = powmod(a, d);
        if x == 1 || x == n64 - 1 {
            continue;
        }
        for _ in 1..s {
            x = x * x % n64;
            if x == n64 - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// A length-`d` vector over `F_q`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct FieldVector(Vec<FieldElement>);

impl FieldVector {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    pub fn from_elems(elems: Vec<FieldElement>) -> Self {
        Self(elems)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[FieldElement] {
        &self.0
    }

    pub fn iter(&self) -> core::slice::Iter<'_, FieldElement> {
        self.0.iter()
    }

    pub fn values(&self) -> Vec<u32> {
        self.0.iter().map(|e| e.0).collect()
    }

    pub fn into_elems(self) -> Vec<FieldElement> {
        self.0
    }

    pub fn truncate(&mut self, len: usize) {
        self.0.truncate(len);
    }

    pub fn extend_from(&mut self, other: &FieldVector) {
        self.0.extend_from_slice(&other.0);
    }

    /// Subvector `[start, start + len)`; positions past the end read as zero.
    pub fn window(&self, start: usize, len: usize) -> FieldVector {
        FieldVector(
            (start..start + len)
                .map(|i| self.0.get(i).copied().unwrap_or(FieldElement::ZERO))
                .collect(),
        )
    }

    /// Little-endian fixed-width (4 bytes per element) encoding.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 * self.len());
        for e in &self.0 {
            out.extend_from_slice(&e.0.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(field: &PrimeField, bytes: &[u8]) -> Result<Self> {
        if !bytes.len().is_multiple_of(4) {
            return Err(Error::Malformed("vector byte length not a multiple of 4"));
        }
        bytes
            .chunks_exact(4)
            .map(|c| field.try_elem(u32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect::<Result<Vec<_>>>()
            .map(FieldVector)
    }
}

impl core::ops::Index<usize> for FieldVector {
    type Output = FieldElement;

    fn index(&self, i: usize) -> &FieldElement {
        &self.0[i]
    }
}

impl FromIterator<FieldElement> for FieldVector {
    fn from_iter<I: IntoIterator<Item = FieldElement>>(iter: I) -> Self {
        FieldVector(iter.into_iter().collect())
    }
}
