//! T-private MDS encoding of mask segments and one-shot aggregate decoding.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::poly;
use crate::error::{Error, Result};
use crate::field::{FieldElement, FieldVector, Meter, PrimeField};

/// A `U x N` generator matrix `W`, row `k` belonging to segment `k` and
/// column `j` to user `j`.
///
/// Rows `0..U-T` carry the sub-masks and rows `U-T..U` carry noise. The
/// Lagrange construction evaluates, at `alpha_j = U + j`, the degree-`(U-1)`
/// polynomial interpolating the segments at `beta_k = k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TPrivateMdsMatrix {
    field: PrimeField,
    users: usize,
    target: usize,
    privacy: usize,
    rows: Vec<Vec<FieldElement>>,
    points: Option<EvalPoints>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct EvalPoints {
    alpha: Vec<FieldElement>,
    beta: Vec<FieldElement>,
}

/// Builds the Lagrange T-private MDS matrix for `(N, U, T)` over `F_q`.
pub fn build_tprivate_mds(field: &PrimeField, n: usize, u: usize, t: usize) -> Result<TPrivateMdsMatrix> {
    if t >= u {
        return Err(Error::InvalidParams(alloc::format!("T = {t} must be below U = {u}")));
    }
    if u > n {
        return Err(Error::InvalidParams(alloc::format!("U = {u} exceeds N = {n}")));
    }
    if field.modulus() as u64 <= (n + u) as u64 {
        return Err(Error::InvalidParams(alloc::format!(
            "q = {} must exceed N + U = {}",
            field.modulus(),
            n + u
        )));
    }
    let beta: Vec<_> = (1..=u).map(|k| field.elem(k as u64)).collect();
    let alpha: Vec<_> = (1..=n).map(|j| field.elem((u + j) as u64)).collect();
    let mut rows = vec![vec![FieldElement::ZERO; n]; u];
    let mut scratch = Meter::new();
    for (j, &a) in alpha.iter().enumerate() {
        let w = poly::lagrange_weights_at(field, &beta, a, &mut scratch)?;
        for (k, v) in w.into_iter().enumerate() {
            rows[k][j] = v;
        }
    }
    Ok(TPrivateMdsMatrix { field: *field, users: n, target: u, privacy: t, rows, points: Some(EvalPoints { alpha, beta }) })
}

impl TPrivateMdsMatrix {
    /// Wraps an explicit `U x N` matrix, checking both the MDS and the
    /// T-privacy rank conditions over every column subset.
    pub fn from_rows(field: &PrimeField, rows: Vec<Vec<FieldElement>>, privacy: usize) -> Result<Self> {
        let u = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if u == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidParams("matrix rows must be non-empty and equal length".into()));
        }
        if privacy >= u || u > n {
            return Err(Error::InvalidParams("need T < U <= N".into()));
        }
        let m = Self { field: *field, users: n, target: u, privacy, rows, points: None };
        if !m.check_mds() {
            return Err(Error::InvalidParams("matrix is not MDS".into()));
        }
        if !m.check_t_private() {
            return Err(Error::InvalidParams("matrix is not T-private".into()));
        }
        Ok(m)
    }

    /// The 3-user example matrix `[[-1, 2, 1], [1, 1, 1]]` with `T = 1`.
    pub fn three_user_example(field: &PrimeField) -> Result<Self> {
        let r = |v: [i64; 3]| v.iter().map(|&x| field.from_i64(x)).collect::<Vec<_>>();
        Self::from_rows(field, vec![r([-1, 2, 1]), r([1, 1, 1])], 1)
    }

    pub fn field(&self) -> &PrimeField {
        &self.field
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn privacy(&self) -> usize {
        self.privacy
    }

    pub fn rows(&self) -> &[Vec<FieldElement>] {
        &self.rows
    }

    /// `W[k][j]` with `j` a 1-based user id.
    pub fn entry(&self, k: usize, user: u32) -> FieldElement {
        self.rows[k][user as usize - 1]
    }

    pub fn is_lagrange(&self) -> bool {
        self.points.is_some()
    }

    /// Every `U`-column submatrix has rank `U`.
    pub fn check_mds(&self) -> bool {
        let all: Vec<usize> = (0..self.target).collect();
        combinations(self.users, self.target).all(|cols| self.rank_of(&all, &cols) == self.target)
    }

    /// Every `T`-column restriction of the bottom `T` rows has rank `T`.
    pub fn check_t_private(&self) -> bool {
        let bottom: Vec<usize> = (self.target - self.privacy..self.target).collect();
        combinations(self.users, self.privacy).all(|cols| self.rank_of(&bottom, &cols) == self.privacy)
    }

    /// Rank of the submatrix on the given row and column indices (0-based).
    pub fn rank_of(&self, rows: &[usize], cols: &[usize]) -> usize {
        let sub: Vec<Vec<FieldElement>> =
            rows.iter().map(|&r| cols.iter().map(|&c| self.rows[r][c]).collect()).collect();
        self.field.rank(&sub)
    }

    /// `[z~]_j = sum_k segment_k * W[k][j]` for every user `j`, in id order.
    pub fn encode(&self, segments: &MaskSegments, meter: &mut Meter) -> Result<Vec<FieldVector>> {
        let segs = segments.all();
        if segs.len() != self.target || segments.data.len() != self.target - self.privacy {
            return Err(Error::ShapeMismatch { expected: self.target, got: segs.len() });
        }
        let len = segments.segment_len();
        let mut out = Vec::with_capacity(self.users);
        for j in 0..self.users {
            let mut acc = self.field.zeros(len);
            for (k, seg) in segs.iter().enumerate() {
                self.field.scaled_add_assign(&mut acc, self.rows[k][j], seg, meter)?;
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// Recovers `sum_i [z_i]_k` for `k` in `0..U-T` from the first `U`
    /// entries of `payload_sums`, keyed by 1-based user id.
    pub fn decode_aggregate(&self, payload_sums: &[(u32, FieldVector)], meter: &mut Meter) -> Result<Vec<FieldVector>> {
        let u = self.target;
        if payload_sums.len() < u {
            return Err(Error::InsufficientShares { needed: u, got: payload_sums.len() });
        }
        let chosen = &payload_sums[..u];
        let len = chosen[0].1.len();
        for (i, (id, v)) in chosen.iter().enumerate() {
            if *id == 0 || *id as usize > self.users {
                return Err(Error::UnknownUser(*id));
            }
            if chosen[..i].iter().any(|(o, _)| o == id) {
                return Err(Error::DuplicateShare { from: *id });
            }
            if v.len() != len {
                return Err(Error::ShapeMismatch { expected: len, got: v.len() });
            }
        }
        let out_segments = u - self.privacy;
        let out = match &self.points {
            Some(points) => self.decode_lagrange(points, chosen, len, meter)?,
            None => self.decode_explicit(chosen, len, meter)?,
        };
        meter.decodes += 1;
        meter.decoded_elems += (out_segments * len) as u64;
        Ok(out)
    }

    // Interpolate the sum polynomial into coefficient form, then evaluate it
    // at the data anchors.
    fn decode_lagrange(
        &self,
        points: &EvalPoints,
        chosen: &[(u32, FieldVector)],
        len: usize,
        meter: &mut Meter,
    ) -> Result<Vec<FieldVector>> {
        let f = &self.field;
        let xs: Vec<FieldElement> = chosen.iter().map(|(id, _)| points.alpha[*id as usize - 1]).collect();
        let basis = poly::basis_polys(f, &xs, meter)?;
        let u = self.target;
        let mut coeffs = vec![f.zeros(len); u];
        for (m, (_, y)) in chosen.iter().enumerate() {
            for (r, c) in coeffs.iter_mut().enumerate() {
                f.scaled_add_assign(c, basis[m][r], y, meter)?;
            }
        }
        let mut out = Vec::with_capacity(u - self.privacy);
        for &b in &points.beta[..u - self.privacy] {
            let mut acc = coeffs[u - 1].clone();
            for c in coeffs[..u - 1].iter().rev() {
                acc = f.scale(&acc, b, meter);
                f.add_assign(&mut acc, c, meter)?;
            }
            out.push(acc);
        }
        Ok(out)
    }

    // Invert the transposed U x U submatrix and keep the data rows.
    fn decode_explicit(&self, chosen: &[(u32, FieldVector)], len: usize, meter: &mut Meter) -> Result<Vec<FieldVector>> {
        let f = &self.field;
        let u = self.target;
        let transposed: Vec<Vec<FieldElement>> = chosen
            .iter()
            .map(|(id, _)| (0..u).map(|k| self.entry(k, *id)).collect())
            .collect();
        let inv = f
            .invert_matrix(&transposed, meter)
            .ok_or_else(|| Error::InvalidParams("singular decoding submatrix".to_string()))?;
        let mut out = Vec::with_capacity(u - self.privacy);
        for row in inv.iter().take(u - self.privacy) {
            let mut acc = f.zeros(len);
            for (m, (_, y)) in chosen.iter().enumerate() {
                f.scaled_add_assign(&mut acc, row[m], y, meter)?;
            }
            out.push(acc);
        }
        Ok(out)
    }
}

/// Lexicographic `k`-subsets of `0..n`.
pub fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut cur: Option<Vec<usize>> = if k <= n { Some((0..k).collect()) } else { None };
    core::iter::from_fn(move || {
        let out = cur.clone()?;
        let c = cur.as_mut().unwrap();
        let mut i = k;
        loop {
            if i == 0 {
                cur = None;
                break;
            }
            i -= 1;
            if c[i] < n - k + i {
                c[i] += 1;
                for j in i + 1..k {
                    c[j] = c[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    })
}

/// A mask split into `U - T` data segments plus `T` noise segments, all of
/// length `L = ceil(d / (U - T))`. The last data segment is zero padded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSegments {
    pub data: Vec<FieldVector>,
    pub noise: Vec<FieldVector>,
}

impl MaskSegments {
    pub fn from_mask(mask: &FieldVector, noise: Vec<FieldVector>, segments: usize) -> Result<Self> {
        if segments == 0 {
            return Err(Error::InvalidParams("need at least one data segment".into()));
        }
        let len = mask.len().div_ceil(segments);
        if let Some(bad) = noise.iter().find(|n| n.len() != len) {
            return Err(Error::ShapeMismatch { expected: len, got: bad.len() });
        }
        let data = (0..segments).map(|k| mask.window(k * len, len)).collect();
        Ok(Self { data, noise })
    }

    pub fn segment_len(&self) -> usize {
        self.data.first().map_or(0, |s| s.len())
    }

    pub fn all(&self) -> Vec<&FieldVector> {
        self.data.iter().chain(self.noise.iter()).collect()
    }

    /// Concatenates data segments and strips the pad.
    pub fn reassemble(data: &[FieldVector], d: usize) -> FieldVector {
        let mut out = FieldVector::new();
        for s in data {
            out.extend_from(s);
        }
        out.truncate(d);
        out
    }
}

/// `[z~_origin]_holder`, with its wire header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedMaskShare {
    pub origin: u32,
    pub holder: u32,
    pub round: u64,
    pub payload: FieldVector,
}

impl EncodedMaskShare {
    pub const HEADER_LEN: usize = 20;

    /// `origin | holder | round | length` little-endian, then the elements.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::HEADER_LEN + 4 * self.payload.len());
        out.extend_from_slice(&self.origin.to_le_bytes());
        out.extend_from_slice(&self.holder.to_le_bytes());
        out.extend_from_slice(&self.round.to_le_bytes());
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload.to_le_bytes());
        out
    }

    pub fn from_bytes(field: &PrimeField, b: &[u8]) -> Result<Self> {
        if b.len() < Self::HEADER_LEN {
            return Err(Error::Malformed("share header truncated"));
        }
        let u32_at = |i: usize| u32::from_le_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]]);
        let origin = u32_at(0);
        let holder = u32_at(4);
        let mut r = [0u8; 8];
        r.copy_from_slice(&b[8..16]);
        let round = u64::from_le_bytes(r);
        let len = u32_at(16) as usize;
        let body = &b[Self::HEADER_LEN..];
        if body.len() != 4 * len {
            return Err(Error::Malformed("share length disagrees with header"));
        }
        Ok(Self { origin, holder, round, payload: FieldVector::from_le_bytes(field, body)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::{Seed, SeedStream};
    use proptest::prelude::*;

    fn f7() -> PrimeField {
        PrimeField::new(7).unwrap()
    }

    fn seg(f: &PrimeField, data: &[&[u64]], noise: &[&[u64]]) -> MaskSegments {
        MaskSegments {
            data: data.iter().map(|d| f.vector(d.iter().copied())).collect(),
            noise: noise.iter().map(|d| f.vector(d.iter().copied())).collect(),
        }
    }

    #[test]
    fn small_lagrange_matrix_is_mds_and_private() {
        let f = f7();
        let w = build_tprivate_mds(&f, 3, 2, 1).unwrap();
        for cols in combinations(3, 2) {
            assert_eq!(w.rank_of(&[0, 1], &cols), 2);
        }
        for cols in combinations(3, 1) {
            assert_eq!(w.rank_of(&[1], &cols), 1);
        }
    }

    #[test]
    fn example_matrix_encodes() {
        let f = f7();
        let w = TPrivateMdsMatrix::three_user_example(&f).unwrap();
        let out = w.encode(&seg(&f, &[&[5]], &[&[3]]), &mut Meter::new()).unwrap();
        let vals: Vec<u32> = out.iter().map(|v| v[0].value()).collect();
        assert_eq!(vals, [5, 6, 1]);
        let zero = w.encode(&seg(&f, &[&[0]], &[&[0]]), &mut Meter::new()).unwrap();
        assert!(zero.iter().all(|v| v[0].is_zero()));
    }

    #[test]
    fn example_matrix_decodes_by_difference() {
        let f = f7();
        let w = TPrivateMdsMatrix::three_user_example(&f).unwrap();
        for (z2, n2, z3, n3) in [(1u64, 2u64, 3u64, 4u64), (6, 6, 6, 6), (0, 5, 2, 1)] {
            let e2 = w.encode(&seg(&f, &[&[z2]], &[&[n2]]), &mut Meter::new()).unwrap();
            let e3 = w.encode(&seg(&f, &[&[z3]], &[&[n3]]), &mut Meter::new()).unwrap();
            let s2 = f.sum(&e2[1], &e3[1], &mut Meter::new()).unwrap();
            let s3 = f.sum(&e2[2], &e3[2], &mut Meter::new()).unwrap();
            let mut m = Meter::new();
            let got = w.decode_aggregate(&[(2, s2.clone()), (3, s3.clone())], &mut m).unwrap();
            let diff = f.difference(&s2, &s3, &mut Meter::new()).unwrap();
            assert_eq!(got, alloc::vec![diff.clone()]);
            assert_eq!(diff[0], f.elem(z2 + z3));
            assert_eq!((m.decodes, m.decoded_elems), (1, 1));
        }
    }

    #[test]
    fn degenerate_no_noise() {
        let f = f7();
        let w = build_tprivate_mds(&f, 2, 2, 0).unwrap();
        assert!(w.check_mds());
        assert_eq!(f.rank(w.rows()), 2);
    }

    #[test]
    fn rejects_bad_params() {
        let f = f7();
        assert!(matches!(build_tprivate_mds(&f, 3, 2, 2), Err(Error::InvalidParams(_))));
        assert!(matches!(build_tprivate_mds(&f, 3, 4, 1), Err(Error::InvalidParams(_))));
        assert!(matches!(build_tprivate_mds(&f, 5, 3, 1), Err(Error::InvalidParams(_))));
        let singular = alloc::vec![
            alloc::vec![f.elem(1), f.elem(2), f.elem(3)],
            alloc::vec![f.elem(2), f.elem(4), f.elem(1)],
        ];
        assert!(TPrivateMdsMatrix::from_rows(&f, singular, 1).is_err());
    }

    #[test]
    fn insufficient_and_duplicate_payloads() {
        let f = PrimeField::new(257).unwrap();
        let w = build_tprivate_mds(&f, 5, 3, 1).unwrap();
        let v = f.zeros(2);
        let err = w.decode_aggregate(&[(1, v.clone()), (2, v.clone())], &mut Meter::new());
        assert_eq!(err, Err(Error::InsufficientShares { needed: 3, got: 2 }));
        let err = w.decode_aggregate(&[(1, v.clone()), (1, v.clone()), (2, v.clone())], &mut Meter::new());
        assert_eq!(err, Err(Error::DuplicateShare { from: 1 }));
        let err = w.decode_aggregate(&[(1, v.clone()), (9, v.clone()), (2, v)], &mut Meter::new());
        assert_eq!(err, Err(Error::UnknownUser(9)));
    }

    #[test]
    fn every_subset_decodes_identically() {
        let f = PrimeField::new(257).unwrap();
        let (n, u, t, l) = (8, 5, 2, 2);
        let w = build_tprivate_mds(&f, n, u, t).unwrap();
        let mut s = SeedStream::new(Seed::from_u64(42));
        let mut m = Meter::new();
        let users: Vec<MaskSegments> = (0..4)
            .map(|_| MaskSegments {
                data: (0..u - t).map(|_| s.expand(&f, l, &mut m)).collect(),
                noise: (0..t).map(|_| s.expand(&f, l, &mut m)).collect(),
            })
            .collect();
        let mut sums = alloc::vec![f.zeros(l); n];
        let mut truth = alloc::vec![f.zeros(l); u - t];
        for seg in &users {
            for (j, e) in w.encode(seg, &mut m).unwrap().iter().enumerate() {
                f.add_assign(&mut sums[j], e, &mut m).unwrap();
            }
            for (k, d) in seg.data.iter().enumerate() {
                f.add_assign(&mut truth[k], d, &mut m).unwrap();
            }
        }
        let mut count = 0;
        for cols in combinations(n, u) {
            let chosen: Vec<_> = cols.iter().map(|&c| (c as u32 + 1, sums[c].clone())).collect();
            assert_eq!(w.decode_aggregate(&chosen, &mut m).unwrap(), truth);
            count += 1;
        }
        assert_eq!(count, 56);
    }

    #[test]
    fn mask_segments_pad_and_reassemble() {
        let f = PrimeField::new(257).unwrap();
        let z = f.vector(1..=7);
        let segs = MaskSegments::from_mask(&z, alloc::vec![f.zeros(3)], 3).unwrap();
        assert_eq!(segs.segment_len(), 3);
        assert_eq!(segs.data[2].values(), [7, 0, 0]);
        assert_eq!(MaskSegments::reassemble(&segs.data, 7), z);
        assert!(MaskSegments::from_mask(&z, alloc::vec![f.zeros(2)], 3).is_err());
    }

    #[test]
    fn share_wire_roundtrip() {
        let f = PrimeField::mersenne31();
        let s = EncodedMaskShare { origin: 3, holder: 9, round: 77, payload: f.vector([1, 2, 2_147_483_646]) };
        let b = s.to_bytes();
        assert_eq!(b.len(), EncodedMaskShare::HEADER_LEN + 12);
        assert_eq!(EncodedMaskShare::from_bytes(&f, &b).unwrap(), s);
        assert!(EncodedMaskShare::from_bytes(&f, &b[..b.len() - 1]).is_err());
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(5, 2).count(), 10);
        assert_eq!(combinations(4, 0).count(), 1);
        assert_eq!(combinations(3, 4).count(), 0);
        assert_eq!(combinations(3, 3).collect::<Vec<_>>(), alloc::vec![alloc::vec![0, 1, 2]]);
    }

    proptest! {
        #[test]
        fn encode_is_linear_and_decode_inverts(
            a in proptest::collection::vec(0u64..257, 12),
            b in proptest::collection::vec(0u64..257, 12),
        ) {
            let f = PrimeField::new(257).unwrap();
            let (n, u, t, l) = (5usize, 3usize, 1usize, 4usize);
            let w = build_tprivate_mds(&f, n, u, t).unwrap();
            let mk = |v: &[u64]| MaskSegments {
                data: (0..u - t).map(|k| f.vector(v[k * l..(k + 1) * l].iter().copied())).collect(),
                noise: alloc::vec![f.vector(v[(u - t) * l..].iter().copied())],
            };
            let sum: Vec<u64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
            let mut m = Meter::new();
            let ea = w.encode(&mk(&a), &mut m).unwrap();
            let eb = w.encode(&mk(&b), &mut m).unwrap();
            let es = w.encode(&mk(&sum), &mut m).unwrap();
            for j in 0..n {
                prop_assert_eq!(f.sum(&ea[j], &eb[j], &mut m).unwrap(), es[j].clone());
            }
            let chosen: Vec<_> = [4usize, 1, 3].iter().map(|&j| (j as u32, es[j - 1].clone())).collect();
            prop_assert_eq!(w.decode_aggregate(&chosen, &mut m).unwrap(), mk(&sum).data);
        }
    }
}
