//! Points on the Riemann sphere, polynomials, and rational maps.
//!
//! The sphere has radius 1, so spherical (arc) distances lie in
//! `[0, pi]`. Points carry one of two charts: the standard chart stores
//! `z`, the inverted chart stores `w = 1/z`; stored coordinates stay in
//! the closed unit disc up to the chart hysteresis band.

mod map;
mod poly;
mod sphere;

pub use map::RationalMap;
pub use poly::Poly;
pub use sphere::{sph_dist, Chart, SpherePoint, Vec3};

/// Hysteresis band for chart switching: a point re-charts only when its
/// stored coordinate magnitude exceeds `1 + EPS_CHART`.
pub const EPS_CHART: f64 = 0.1;

/// Radius below which two points are treated as geometrically
/// coincident (spherical metric).
pub const EPS_GEOM: f64 = 1e-7;

/// Maximum arc spacing between consecutive polyline samples.
pub const DELTA_SAMPLE: f64 = 1e-3;

/// Clearance every lifted arc must keep from critical values.
pub const EPS_CV: f64 = 1e-4;

/// Accuracy to which lifted samples satisfy the defining equation.
pub const EPS_LIFT: f64 = 1e-9;
