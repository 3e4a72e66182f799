//! Photon emission by PINEM-modulated free-electron wavepackets into a single
//! cavity mode.
//!
//! The cavity state is a truncated Fock-space density matrix. Each electron
//! acts on it through the channel
//!
//! ```text
//! ρ_f(a, b) = Σ_{n,n'} ρ(n, n') b̃^((a−n)−(b−n')) M_{a,n} conj(M_{b,n'})
//! ```
//!
//! where `M = ⟨a|D(g)|n⟩` and `b̃` are the electron's bunching harmonics. A beam
//! is this channel applied once per electron, starting from vacuum.
//!
//! The crate is `no_std` with `alloc`. File formats, presets and the command
//! line live in the `qews` crate.

#![no_std]

extern crate alloc;

pub mod beam;
pub mod classical;
pub mod error;
pub mod fock;
pub mod interaction;
pub mod phase_space;
pub mod qew;
pub mod special;

pub use num_complex::Complex64 as C64;

pub use beam::{BeamMode, BeamSpec, BuildupStep, BuildupTrajectory, CurvePoint, EnsembleReport};
pub use error::{Error, Result};
pub use fock::{DensityMatrix, Diagnostics, DisplacementMatrix, Tolerances};
pub use interaction::CouplingSpec;
pub use phase_space::{QuadratureMoments, WignerGrid, WignerGridSpec};
pub use qew::{BunchingSpectrum, MomentumAmplitudes, Picture, QewParams};
