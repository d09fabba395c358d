//! Finite-alphabet probability.

pub mod contingency;
pub mod distortion;
pub mod group;
pub mod info;
pub mod pmf;
pub mod rng;
pub mod typical;

pub use distortion::DistortionMeasure;
pub use group::{group_convolve, FiniteAbelianGroup};
pub use info::{entropy, mutual_information};
pub use pmf::{Dmc, JointPmf, Pmf};
pub use rng::SeededRng;
pub use typical::{is_strongly_typical, sample_typical_uniform, Typicality};
