//! Diversity measurement and preference-data curation.
//!
//! The crate scores text with lexical and embedding-based diversity metrics,
//! builds per-length decile maps so diversity can be compared across
//! responses of different lengths, and filters pairs of model responses into
//! length-controlled preference datasets.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`ingest`]: line-delimited record schemas, validation, and writers.
//! - [`textstat`]: tokenization and lexical metrics (TTR, MATTR, MAAS, HD-D,
//!   MTLD and variants, entropy, n-gram diversity, compression ratio).
//! - [`semdiv`]: embedding-based diversity (DSI, object/use distance) and
//!   uniqueness ratios, plus the binary embedding store.
//! - [`decile`]: length-bucketed decile maps, DD and ΔDD.
//! - [`filter`]: Diverse-NS, Diverse-NS-Lite and DivPO pair construction and
//!   top-K selection.
//! - [`analyze`]: correlation, t-tests, Jaccard pair mining, POS-bigram
//!   repetition and win-rate tabulation.
//! - [`cli`]: the `divcurate` command-line entry point.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyze;
pub mod cli;
pub mod decile;
pub mod filter;
pub mod ingest;
pub mod semdiv;
pub mod textstat;

pub use decile::DecileMap;
pub use filter::{FilterConfig, Method};
pub use ingest::{GenerationRecord, PreferencePair, ResponseRecord};
pub use semdiv::EmbeddingMatrix;
pub use textstat::{MetricVector, TokenizedText};
