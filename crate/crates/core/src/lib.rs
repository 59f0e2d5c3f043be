//! Contrastive multiple correspondence analysis (cMCA).
//!
//! Categorical survey rows are one-hot encoded into a disjunctive matrix,
//! normalized into a correspondence matrix Z, and summarized by the Burt
//! matrix B = ZᵀZ. Splitting the rows into a target and a background group
//! gives B_T and B_B; the contrastive principal components are the top
//! eigenvectors of B_T − αB_B. The contrast parameter α is chosen by hand
//! (see [`alpha::alpha_sweep`]) or by a trace-ratio iteration
//! ([`alpha::auto_alpha`]).

pub mod alpha;
pub mod cmca;
pub mod dataio;
pub mod eigen;
pub mod encode;
pub mod error;
pub mod mca;
pub mod pipeline;
pub mod synth;

pub use error::{Error, ErrorClass, Result};
