//! Polynomial codes over `F_q`: T-private MDS mask encoding and Shamir
//! secret sharing.

pub mod mds;
pub mod poly;
pub mod shamir;

pub use mds::{build_tprivate_mds, combinations, EncodedMaskShare, MaskSegments, TPrivateMdsMatrix};
pub use shamir::{shamir_reconstruct, shamir_share, ShamirShares};
