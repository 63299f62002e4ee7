//! Discrete rectifiable varifolds on triangle meshes.

pub mod clip;
pub mod flatness;
pub mod measure;
pub mod mesh;
pub mod monotonicity;
pub mod pixel;

pub use flatness::{flatness, hausdorff_distance, FlatnessReport};
pub use measure::{first_variation, mean_curvature_measure, CurvatureMeasure};
pub use mesh::{DiscreteVarifold, V3};
pub use monotonicity::{allard_lambda, density_classify, monotonicity_profile, DensityClassification, MonotonicityProfile};
pub use pixel::{variational_curvature_check, CurvatureCheck, Window};

/// Upper bound `μ(V) / π` on the number of sheets of a multigraph over the unit disc.
pub fn multigraph_sheet_bound(v: &DiscreteVarifold) -> f64 {
    v.mass() / std::f64::consts::PI
}
