//! Simulation and verification lab for the random Borsuk graph and
//! continuum AB percolation.
//!
//! The random Borsuk graph samples n points i.i.d. uniformly on the sphere
//! S^d and joins two points whenever their geodesic distance exceeds
//! `pi - alpha`, i.e. whenever they are nearly antipodal. This crate builds
//! those graphs (with spatial acceleration), tests structural properties
//! (bipartiteness, odd-cycle witnesses, cap-cover chromatic certificates),
//! constructs the explicit bad-patch-avoiding spherical embedding, simulates
//! continuum AB percolation in a box, and drives Monte Carlo experiments for
//! the quantitative limit laws (Poisson edge counts, `n^{-1/d}` threshold
//! scaling, subcritical exponential decay).
//!
//! Modules map onto the main subsystems:
//!
//! * [`geom`] — exact spherical geometry: sampling, distances,
//!   stereographic projection, caps, projected density.
//! * [`graph`] — the Borsuk graph and its mirrored geometric twin.
//! * [`color`] — chromatic number machinery and cover certificates.
//! * [`embed`] — multi-scale cube classification and the odd bump embedding.
//! * [`abperc`] — continuum AB percolation and critical-intensity sweeps.
//! * [`experiments`] — seeded Monte Carlo harness, sweeps and reports.
//! * [`exec`] — deterministic trial scheduling (sequential or rayon).

pub mod abperc;
pub mod cli;
pub mod color;
pub mod embed;
pub mod exec;
pub mod experiments;
pub mod geom;
pub mod graph;
pub mod io;
pub mod numeric;
pub mod spatial;
pub mod unionfind;

pub use geom::{Cap, ProjectedPoint, SpherePoint};
pub use graph::{BorsukGraph, GeoMirrorGraph, OddCycleWitness};
