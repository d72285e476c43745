//! Exact desk-scale machinery for the six-vertex model with anisotropy `η`,
//! its quantum-group currents, the vertex-face map onto the trigonometric SOS
//! model, the SOS currents obtained from it, and the spectrum arithmetic of
//! the cyclic SOS model.
//!
//! The crate is `no_std` and only needs `alloc`. Every quantity is a double
//! precision complex number; identities are checked through residuals of the
//! form `max|lhs - rhs| / (1 + max|lhs|)`.
//!
//! Module map:
//!
//! * [`numerics`]: complex tensors, contraction, residuals, seeded sampling.
//! * [`vertex_weights`]: the R-matrix, generators on `V_λ`, coproducts.
//! * [`vertex_lattice`]: finite lattices, tails, current expectations.
//! * [`embedding`]: rhombic embedding, parafermions, contour sums.
//! * [`sos_weights`]: Baxter intertwiners, face weights, correspondences.
//! * [`sos_currents`]: dressed generators, tail faces, SOS currents.
//! * [`csos`]: cyclic restriction, Temperley-Lieb action, spectrum.
#![no_std]
#![warn(missing_docs)]

extern crate alloc;

pub mod csos;
pub mod embedding;
pub mod error;
pub mod numerics;
pub mod sos_currents;
pub mod sos_weights;
pub mod vertex_lattice;
pub mod vertex_weights;

pub use error::{Error, Result};
pub use numerics::{c64, ComplexTensor, ParamSampler, ToleranceConfig, C64};
pub use vertex_weights::ModelParams;
