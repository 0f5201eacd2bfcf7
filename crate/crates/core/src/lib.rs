//! Markov partitions for rational maps on the Riemann sphere.
//!
//! The pipeline runs in stages, each a module:
//!
//! * [`numerics`] — points on the sphere in two charts, rational maps,
//!   fibers, critical points, and the spherical metric.
//! * [`embedded_graph`] — finite graphs embedded in the sphere with an
//!   explicit rotation system; faces, containment, Hausdorff distance,
//!   and a combinatorial isotopy signature.
//! * [`pullback`] — lifting edges and whole graphs through a rational
//!   map by branch continuation.
//! * [`invariant_graph`] — refining a seed graph towards an invariant
//!   graph by iterated pullback and isotopic re-extraction.
//! * [`markov`] — Markov partitions from invariant graphs: transition
//!   matrices, Perron data, itineraries and address points.
//! * [`regularity`] — bounded-turning constants and quasi-symmetric
//!   conjugacies between expanding interval systems.
//! * [`param_space`] — continuation of invariant graphs over a
//!   parameter rectangle and combinatorial classification of the free
//!   critical value.
//!
//! Everything works at a fixed sampling resolution: curves are polylines
//! whose consecutive samples are at most [`numerics::DELTA_SAMPLE`]
//! apart in the spherical metric, and all distances are reported up to
//! that resolution.

pub mod embedded_graph;
pub mod error;
pub mod invariant_graph;
pub mod markov;
pub mod numerics;
pub mod param_space;
pub mod pullback;
pub mod regularity;

pub use error::{Error, Result};
