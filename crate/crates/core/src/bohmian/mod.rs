//! Pilot-wave dynamics on a grid: split-step evolution, the polar
//! decomposition `Ψ = R exp(iS/ħ)`, the quantum potential, equation
//! residuals, guidance trajectories and two-particle locality.
//!
//! Guidance uses `ẋ = +∇S/m` (the sign that makes the continuity equation a
//! conservation law) and the Hamilton-Jacobi residual uses `(∇S)²/2m`.

pub mod polar;
pub mod presets;
pub mod residuals;
pub mod trajectories;
pub mod two_particle;
pub mod wave;

pub use polar::{polar_decompose, quantum_potential, PolarFields, ScalarField, R_FLOOR};
pub use presets::{wave_preset, two_particle_preset, PresetParams, WavePreset};
pub use residuals::{continuity_residual, hj_residual, ResidualReport};
pub use trajectories::{
    integrate_trajectories, ks_critical_1pct, ks_distance, sample_born_positions, InitialLaw,
    TrajectoryOptions, TrajectorySet,
};
pub use two_particle::{
    factorization_test, two_particle_velocities, FactorizationReport, TwoParticleWave, Velocities,
    Verdict,
};
pub use wave::{evolve, Lattice, Propagator, WaveGrid};
