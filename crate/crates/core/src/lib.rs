//! Sparse-approximation codec for single-channel signals.
//!
//! A signal is cut into fixed-size blocks; each block is approximated by
//! Optimized Orthogonal Matching Pursuit over a redundant dictionary of
//! cosines, sines and translated short pulses. The resulting coefficients are
//! uniformly quantized, the model is flattened into three symbol streams and
//! each stream is coded with an adaptive arithmetic coder.
//!
//! ```no_run
//! use gwdc::container::{decode_signal, Encoder};
//! use gwdc::dictionary::DictionaryConfig;
//! use gwdc::pursuit::StopRule;
//!
//! let signal: Vec<f64> = (0..8192).map(|i| (i as f64 * 0.01).sin() * 0.5).collect();
//! let encoder = Encoder::new(DictionaryConfig::default()).unwrap();
//! let encoded = encoder
//!     .encode(&signal, 8000, &StopRule::block_snr_db(60.0), None)
//!     .unwrap();
//! let decoded = decode_signal(&encoded.bytes).unwrap();
//! assert_eq!(decoded.samples.len(), signal.len());
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod container;
pub mod dictionary;
pub mod entropy;
pub mod error;
pub mod metrics;
pub mod pursuit;
pub mod quantizer;

pub use error::{Error, Result};
