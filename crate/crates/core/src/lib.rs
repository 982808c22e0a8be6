//! Spatially coupled protograph LDPC-Hadamard codes: construction, rates,
//! streaming encoding, pipeline decoding, layered PEXIT analysis, genetic
//! split search and BER simulation.

pub mod codec;
pub mod error;
pub mod fixtures;
pub mod ga;
pub mod gf2;
pub mod hadamard;
pub mod lifting;
pub mod pexit;
pub mod protograph;
pub mod sim;

pub use codec::{ConvCode, Encoder, LlrFrame, PipelineDecoder};
pub use error::{Error, Result};
pub use hadamard::{HadamardCode, MapDecoder, MapOutput, LLR_SATURATION};
pub use lifting::{lift, lift_screened, Girth, LiftReport, QcParityMatrix};
pub use protograph::{
    couple_tailbiting, couple_terminated, rate_block, rate_terminated, validate_split, CodeDesign,
    CoupledProtomatrix, Layout, Protomatrix, Rate, SplitSet,
};
