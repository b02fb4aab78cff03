//! Ternary-quantized deep Q-learning for smart-home lighting.
//!
//! The crate is organised bottom-up:
//!
//! - [`ternary`]: 1.58-bit weight quantization, bit packing and integer kernels.
//! - [`home`]: the seeded smart-home simulator and the rule-based baseline.
//! - [`agent`]: multi-objective reward, prioritized replay and the ternary DQN.
//! - [`intent`]: command grammar, synthetic corpus and the ternary text classifier.
//! - [`gateway`]: webhook HTTP service running the live control loop.
//! - [`bench`]: kernel micro-benchmarks producing hardware-style reports.

pub mod agent;
pub mod bench;
pub mod gateway;
pub mod home;
pub mod intent;
pub mod tensor;
pub mod ternary;

pub use tensor::Matrix;
