//! Quantum-kernel LSTM (QK-LSTM) building blocks.
//!
//! The crate is `no_std` with `alloc`. It contains an exact dense statevector
//! simulator, the fidelity kernel built on top of it, the QK-LSTM and classical
//! LSTM cells with hand-written backpropagation through time, a small
//! part-of-speech tagging pipeline and the training loop.
//!
//! File formats, configuration and the command line live in the `qklstm`
//! companion crate.
#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod audit;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod lstm;
pub mod model;
pub mod params;
pub mod pos;
pub mod qk_cell;
pub mod rng;
pub mod sim;
pub mod train;

pub use error::{Error, Result};
pub use kernel::{FeatureMapParams, KernelGradients};
pub use linalg::Matrix;
pub use lstm::{LstmCell, LstmConfig};
pub use model::{CellState, RecurrentCell, Tagger};
pub use params::ParamSet;
pub use pos::TaggedCorpus;
pub use qk_cell::{Gate, QkConfig, QkLstmCell};
pub use sim::QuantumState;
pub use train::{EpochMetrics, Optimizer, TrainingConfig};
