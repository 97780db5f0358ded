//! Band spectra of the almost Mathieu operator at rational frequencies,
//! Diophantine gap labelling, wing assembly with discontinuity removal, and
//! vector-graphics output for butterfly figures.
//!
//! The pipeline is: [`spectrum::band_edges`] for each `theta = p/q`, then
//! [`gaplabel::build_wing`] for a gap label `(t, s)`, then
//! [`render::wings_to_polylines`] and one of the emitters in [`render`].

pub mod eigensolver;
pub mod error;
pub mod gaplabel;
pub mod rational;
pub mod render;
pub mod spectrum;

pub use eigensolver::{EigenList, EigenSolver, Extreme, PeriodicTridiagonal};
pub use error::{Error, Result};
pub use gaplabel::{GapLabel, JumpReport, Wing, WingSegment};
pub use rational::Rational;
pub use render::{EpsDocument, Polyline};
pub use spectrum::{Gap, SpectrumCache, SpectrumEdges};
