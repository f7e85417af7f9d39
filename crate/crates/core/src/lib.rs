//! Forward simulation of infarct effects on the QRS complex.
//!
//! The pipeline runs from a biventricular tetrahedral mesh with consistent
//! ventricular coordinates, through ellipsoidal infarct scenarios and an
//! orthotropic Eikonal activation solve, to pseudo-ECG 12-lead QRS synthesis
//! and QRS comparison (DTW and clinical criteria).
//!
//! The numerical core is generic over [`Real`]; the `*64` aliases below are
//! what the experiment harness uses.

pub mod config;
pub mod ecg;
pub mod eikonal;
pub mod error;
pub mod experiment;
pub mod fiber;
pub mod mesh;
pub mod num;
pub mod plot;
pub mod qrs;
pub mod scenario;
pub mod vec3;

pub use error::{Error, Result};
pub use num::Real;
pub use vec3::Vec3;

pub type Mesh64 = mesh::Mesh<f64>;
pub type Coord64 = mesh::CobivecoCoord<f64>;
