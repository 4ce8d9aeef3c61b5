//! Markov-random-field structured nonparametric density estimation.
//!
//! The crate is `no_std` (with `alloc`). It holds every numerical routine:
//! graph powers and clique enumeration, clique-factorized histograms and
//! their exact cell arithmetic, the Hammersley–Clifford potential
//! construction, the Scheffé minimum-distance tournament, bounded-weight
//! ReLU clique networks, synthetic Markov ground truths, rate experiments
//! and pixel-pair dependence statistics. File IO and the command line live
//! in the companion `mrfdens` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod density;
pub mod error;
pub mod evalrate;
pub mod graph;
pub mod hcfactor;
pub mod histfactor;
pub mod math;
pub mod neuralnet;
pub mod pixeldiag;
pub mod rng;
pub mod samples;
pub mod scheffe;
pub mod synth;

pub use density::Density;
pub use error::{Error, ErrorKind, Result};
pub use graph::{CliqueSet, MrfGraph};
pub use histfactor::{HistogramFactor, ProductHistogram};
pub use samples::SampleMatrix;
