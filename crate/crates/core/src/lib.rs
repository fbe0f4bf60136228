//! Syndrome-based information reconciliation with nonbinary LDPC codes over
//! GF(2^w): field arithmetic, the q-ary symmetric channel and its metrics,
//! code construction, FFT sum-product decoding, ensemble design and frame
//! simulation.

pub mod channel;
pub mod code;
pub mod decoder;
pub mod design;
pub mod ensembles;
pub mod gf;
pub mod hash;
pub mod llr;
pub mod seeds;
pub mod sim;

pub use channel::{ChannelError, ChannelModel};
pub use code::{CodeError, DegreeDistribution, EdgeDistribution, SparseParityCheck, Syndrome};
pub use decoder::{decode, DecodeError, DecodeOutcome, Decoder, DecoderConfig};
pub use design::{DeConfig, DesignError, McdeConfig};
pub use gf::{GfError, GfTable, Symbol};
pub use llr::LlrVector;
pub use sim::{SimConfig, SimError};
