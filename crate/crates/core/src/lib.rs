//! Numerical core for the wave equation with a convolution memory term
//!
//! `u_tt = Δu + ∫_0^t ȧ(t-s) Δu(s) ds + g(u)` on an interval or a rectangle
//! with homogeneous Dirichlet data. Everything here is `no_std` + `alloc`;
//! file formats and the command line live in the `memwave` crate.
#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

extern crate alloc;

pub mod diagnostics;
pub mod domain;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod nonlinearity;
pub mod quad;
pub mod solver;
pub mod trace;

pub use error::{Error, Result};
