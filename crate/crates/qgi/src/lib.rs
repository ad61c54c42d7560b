//! Simulation and analysis toolkit for a longitudinal Stern-Gerlach atom
//! interferometer in which one wave packet is magnetically levitated against
//! gravity while the other follows a free-fall (ballistic) trajectory.
//!
//! The crate covers the full chain from hardware model to extracted phase:
//!
//! - [`phys`]: physical constants, the Rb-87 species data, spin states and
//!   the canonical interferometer timing record.
//! - [`field`]: magnetostatics of the three-wire chip array, Zeeman
//!   potentials and per-state accelerations.
//! - [`pulses`]: cosine current waveforms, the interferometer schedule and
//!   the levitation / equal-area calibration conditions.
//! - [`dynamics`]: center-of-mass trajectories (closed-form piecewise
//!   parabolic and RK4 against the full field model) plus closure metrics.
//! - [`phases`]: the interferometer phase by four independent routes
//!   (gauge transformation, action quadrature, Galilean transformation and
//!   the closed form), the two-frame action ledger and auxiliary formulas.
//! - [`wavepacket`]: Gaussian wave-packet moment propagation in the locally
//!   quadratic potential and the complex overlap at recombination.
//! - [`fringe`]: fringe-scan synthesis and the phase-extraction pipeline
//!   (envelopes, Hilbert transform, cubic-phase fit, error propagation).

pub mod dynamics;
pub mod field;
pub mod fringe;
pub mod numerics;
pub mod phases;
pub mod phys;
pub mod pulses;
pub mod wavepacket;

pub use phys::{Constants, MassPair, Species, SpinState, Timings};
