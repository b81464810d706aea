//! Core machinery for agents that must both act and communicate over noisy
//! channels: a small dense-network stack with exact backpropagation and Adam,
//! bit-flip / Gaussian / bursty-Markov channel models, the guided-robot grid
//! world and the one-step message game, the four learners (DQN, DDPG,
//! REINFORCE, actor-critic), classical Hamming-code baselines, and the
//! training and evaluation loops that tie them together.
//!
//! The crate is `no_std` + `alloc`: everything here is a pure function of its
//! inputs plus an explicit random source, which keeps full runs replayable
//! from a seed. IO, configuration files, and the CLI live in the companion
//! `commrl` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod agents;
pub mod baselines;
pub mod channels;
pub mod checkpoint;
pub mod envs;
pub mod error;
pub mod nn;
pub mod run;

pub use error::{Error, Result};
