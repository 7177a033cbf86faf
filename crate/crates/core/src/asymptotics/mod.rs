//! Asymptotic integration of `y'' + A y = 0`.
//!
//! Critical rays of polynomial coefficients, the Liouville map
//! `Z = ∫ sqrt(A)`, paths on which `Im Z` is constant, decay checks for all
//! solutions along such paths, and Picard iteration for the solution
//! `u ~ 1` on rays where `∫ r|A| dr` is small.

mod decay;
mod picard;
mod rays;

pub use decay::{linear_fit, verify_decay, verify_decay_with, DecayMethod, DecayModel, DecayOptions, DecayReport, DecaySample};
pub use picard::{picard_ray_solution, tail_integral, PicardSolution, TailIntegral, MAX_PICARD_ITERATIONS, PICARD_STEP};
pub use rays::*;
