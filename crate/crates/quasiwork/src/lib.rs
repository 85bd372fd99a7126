//! Quasiprobability work statistics for a driven qubit.
//!
//! The crate builds the full chain from exact linear algebra to a simulated
//! experiment:
//!
//! * [`qmath`]: small dense complex matrices, a deterministic Hermitian
//!   eigensolver, and matrix exponentials of Hermitian generators.
//! * [`protocol`]: the rotating-frame drive, its closed-form propagator, and
//!   the initial states used throughout.
//! * [`kdq`]: Kirkwood-Dirac quasiprobability tables, two-point-measurement
//!   tables, work moments, two-time correlation functions, and the
//!   variance-based uncertainty relation.
//! * [`interferometer`]: the ancilla interferometer that measures the
//!   characteristic function of work with controlled-evolution gates.
//! * [`nvmodel`]: a two-spin (electron plus nuclear ancilla) realization of
//!   the same interferometer with hyperfine free evolution, selective nuclear
//!   pulses, and fast electron pulses.
//! * [`recon`]: sampling characteristic-function traces, transforming them to
//!   work spectra, peak integration, noise injection, and goodness-of-fit.
//! * [`cli`]: the command-line front end (`quasiwork` binary).

pub mod cli;
pub mod interferometer;
pub mod kdq;
pub mod nvmodel;
pub mod protocol;
pub mod qmath;
pub mod recon;
