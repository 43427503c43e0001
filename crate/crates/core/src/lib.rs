//! Numerical laboratory for warped-product gradient ρ-Einstein solitons
//! `Ric + ∇²f = ρ R g + λ g` on `dr² + ω(r)² g_can`.
//!
//! The math is generic over the scalar type through [`Real`]; the aliases at the crate
//! root fix it to `f64`, which is what the command-line tool and file formats use.

pub mod asymptotics;
pub mod exact_solutions;
pub mod fd;
pub mod integrator;
pub mod phase_system;
pub mod potential_theory;
pub mod profile;
pub mod scalar;
pub mod shooting;
pub mod warped_geometry;

pub use scalar::Real;

/// Double-precision soliton parameters.
pub type Params = phase_system::SolitonParams<f64>;
/// Double-precision phase-space point.
pub type State = phase_system::PhaseState<f64>;
/// Double-precision sampled profile.
pub type Profile = profile::RadialProfile<f64>;
