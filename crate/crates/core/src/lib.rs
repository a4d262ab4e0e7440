//! Adversarially trained quantum circuit Born machines.
//!
//! A layered rotation/CNOT circuit acts as the generator of a GAN whose
//! discriminator is a small leaky-ReLU MLP. Generator gradients come from the
//! parameter-shift rule, so only samples from the circuit are needed. After
//! training, the circuit's amplitudes are used for conditional sampling
//! (inpainting) through Grover amplitude amplification.
//!
//! Everything runs on an exact statevector simulator ([`qsim`]).

pub mod bas;
pub mod circuit;
pub mod cli;
pub mod discriminator;
pub mod error;
pub mod gan;
pub mod inference;
pub mod qsim;

pub use bas::BasSpec;
pub use circuit::{ParamCircuit, ParamVector};
pub use discriminator::{AdamState, MlpDiscriminator};
pub use error::{Error, Result};
pub use gan::{GradientMode, TrainConfig, TrainOutcome, TrainRecord};
pub use inference::{AmplificationTrace, Evidence};
pub use qsim::{Axis, SingleQubitUnitary, StateVector};
