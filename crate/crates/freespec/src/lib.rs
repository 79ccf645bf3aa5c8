//! Numerical toolkit for rotational symmetries of free spectrahedra.
//!
//! A g-tuple `A` of `d x d` matrices defines the monic pencil
//! `L_A(X) = I − Σ A_j ⊗ X_j − Σ A_j* ⊗ X_j*` and the free spectrahedron
//! `D_A = {X : L_A(X) ⪰ 0}` over all matrix levels. The crate decides
//! circularity and free circularity of `D_A`, computes minimal defining
//! tuples and canonical forms, builds separating-pencil certificates, and
//! tests free matrix polynomials for invariance under coordinate unitary
//! conjugation.

pub mod ball_classifier;
pub mod circular_classifier;
pub mod error;
pub mod freepoly;
pub mod generate;
pub mod inclusion_sdp;
pub mod io;
pub mod linalg;
pub mod pencil_core;
pub mod rng;
pub mod separation;
pub mod tolerance;
pub mod tuple;
pub mod tuple_algebra;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
pub use tolerance::Tolerance;
pub use tuple::MatrixTuple;
