//! Numerical analysis of planar competitive maps: orders and quadrants,
//! fixed points and their eigen-structure, stable and unstable curves of
//! non-hyperbolic equilibria, and basin-of-attraction rasters.

pub mod expr;
pub mod geometry;
pub mod map;
pub mod fixedpoints;
pub mod examples;
pub mod classification;
pub mod curves;
pub mod basins;
pub mod format;
pub mod cli;
