//! Ternary (1.58-bit) and 2-bit weight quantization with integer kernels.
//!
//! Weights are stored as packed 2-bit codes, four per byte, with trit `i` of a
//! byte in bit-pair `i` (lowest bits first). Ternary codes use `00 → 0`,
//! `01 → +1`, `10 → −1`; `11` is reserved and marks corruption.
//!
//! Activations are quantized to int8 with an absmax scale, products are
//! accumulated in `i32`, and the two scales are applied once per output.
//! Because accumulation is exact, the scalar kernel, the lookup-table kernel
//! and the unpacked reference agree bit for bit.

mod activation;
mod block;
mod error;
mod kernels;
mod latent;
mod pack;
mod quant;
mod twobit;

pub use activation::{quantize_activation, QuantizedActivation};
pub use block::{read_block, write_block, BLOCK_MAGIC, BLOCK_VERSION};
pub use error::QuantError;
pub use kernels::{lut_matvec, reference_matvec, ternary_matvec, MAX_COLS};
pub use latent::{ste_gradient, LatentLayer};
pub use pack::{pack_trits, unpack_trits};
pub use quant::{quantize_absmean, TernaryMatrix, SCALE_FLOOR};
pub use twobit::{quantize_2bit, twobit_matvec, twobit_reference_matvec, TwoBitMatrix};
