//! Numerical toolkit for stratified (Carnot) group geometry.
//!
//! The crate provides exponential-coordinate arithmetic on stratified nilpotent
//! Lie groups (Baker-Campbell-Hausdorff multiplication, graded dilations, layer
//! projections), homogeneous norms and metrics (the layered sup norm and the
//! Hebisch-Sikora gauge), horizontal lines and point-to-line distances,
//! stratified beta numbers over finite point sets, multiscale Carleson sums
//! with separated-net ball families, a farthest-insertion tour constructor,
//! and a randomized harness that stress-tests the quantitative inequalities
//! the other modules rely on.

pub mod algebra;
pub mod beta;
pub mod carleson;
pub mod group;
pub mod lines;
pub mod norms;
mod opt;
pub mod tsp;
pub mod verify;

pub use algebra::{Algebra, StratifiedAlgebra};
pub use group::GroupElement;
