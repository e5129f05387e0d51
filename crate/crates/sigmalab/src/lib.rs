//! Numerical laboratory for observability from a hypersurface: bicharacteristic
//! flow and its geometric control test, eigenfunction traces on Σ, and
//! Lebeau–Robbiano control of the heat equation.

pub mod fit;
pub mod geometry;
pub mod linalg;
pub mod lrcontrol;
pub mod mp;
pub mod quad;
pub mod raydyn;
pub mod spectral;
