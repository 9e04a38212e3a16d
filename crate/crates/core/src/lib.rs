//! Construction and analysis of branched surfaces on a coordinate disk.
//!
//! The library builds candidate branched maps from a representation formula
//! or from Weierstrass-type minimal data, extracts branch-coordinate data,
//! computes the branch invariants (order, index, distinguished degree and
//! coefficient), constructs the normalizing quasiconformal change of
//! parameter, and classifies curvature behavior near the branch point.
//!
//! All exact computation happens on truncated power series ([`jets::BiJet`]);
//! all residual and sup-norm computation happens on sampled punctured-disk
//! grids ([`fields::GridField`]).

pub mod branch;
pub mod builder;
pub mod fields;
pub mod geometry;
pub mod jets;
pub mod normalize;
pub mod report;
pub mod surface;
pub mod verify;

pub use jets::{BiJet, JetError, ZOrder};
