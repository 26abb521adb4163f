//! Ultraviolet renormalization-group analysis of one-dimensional quantum
//! potentials.
//!
//! The pipeline expands a potential at `x = 1/Λ`, reduces it to a harmonic
//! oscillator, flows the coupling so the ground-state energy is independent
//! of the cutoff, and compares the `Λ → ∞` limit with a finite-difference
//! eigensolver.

pub mod cli;
pub mod khmodel;
pub mod oracle;
pub mod potential;
pub mod rgflow;
pub mod suite;
pub mod uvreduce;
