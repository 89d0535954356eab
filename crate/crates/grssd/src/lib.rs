//! Construction and exact verification of MDS Euclidean self-dual codes over
//! GF(r^2) built from generalized Reed-Solomon evaluation sets.
//!
//! The pipeline is: build a finite field with a canonical primitive element
//! ([`gf`]), describe multiplicative cosets and norm fibers as exponent
//! progressions ([`cosets`]), assemble evaluation sets from several
//! construction families ([`evalsets`]), check that the quadratic character of
//! the point-difference products is uniform ([`chartool`]), solve for a
//! scaling vector and emit a verified generator matrix ([`grscodes`]), and
//! enumerate every achievable code length over a field ([`census`]).

// Divisibility tests on divisor lattices are this crate's bread and butter;
// `x % d == 0` is the established notation for them.
#![allow(clippy::manual_is_multiple_of)]

pub mod census;
pub mod chartool;
pub mod cosets;
pub mod evalsets;
pub mod gf;
pub mod grscodes;
pub mod selftest;
