//! Signatures of multidimensional streams and the numerical methods built on them.

pub mod development;
pub mod error;
pub mod expected_sig;
pub mod learn;
pub mod lie;
pub mod logode;
pub mod streams;
pub mod tensor;

pub use error::{Error, Result};
pub use lie::{tensor_to_lie_coords, LieCoordinates, LyndonBasis};
pub use streams::{log_signature, signature, Stream, Transform};
pub use tensor::{shuffle, NormFlavor, TruncatedTensor, Word};
