//! Numerical laboratory for the one-phase free boundary problem
//!
//! ```text
//! J_F(u) = ∫ F(|∇u|²) + λ² χ{u>0}
//! ```
//!
//! The crate builds and checks the objects that appear around this functional:
//!
//! * [`energy`]: the integrand `F`, its structural bounds and the Bernoulli constant `λ*`.
//! * [`profile`]: the p-Legendre ODE on the sphere, its zero `θ₀` and the Riccati reduction.
//! * [`cone`]: the homogeneous double-cone p-harmonic solution in ℝ³.
//! * [`stability`]: second-variation quadratures, the stability tensor and the
//!   Gauss–Bonnet flatness criterion.
//! * [`varifold`]: discrete varifolds on triangle meshes (first variation, mean curvature
//!   measure, monotonicity, flatness, pixel-grid variational curvature).
//! * [`solver2d`]: a projected-gradient minimizer of the discretized functional in 2D.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled (the default);
//! see [`par::Exec`].

pub mod cone;
pub mod energy;
pub mod error;
pub mod ode;
pub mod par;
pub mod profile;
pub mod quadrature;
pub mod solver2d;
pub mod stability;
pub mod varifold;

pub use error::{Error, Result};
