//! mentorlens: mentorship analytics for publication corpora.
//!
//! The pipeline runs in stages: ingest a publication corpus and its citation
//! graph, derive per-scientist career profiles, extract mentor-protege
//! dyads, compute mentorship-quality metrics per protege, then estimate
//! effects by comparing quantile groups under coarsened exact matching.
//! A seeded synthetic-corpus generator with plantable effects closes the
//! loop: estimates can be validated against known ground truth.

pub mod analysis;
pub mod binning;
pub mod cem;
pub mod corpus;
pub mod dyads;
pub mod metrics;
pub mod pipeline;
pub mod report;
pub mod scholars;
pub mod stats;
pub mod synth;

pub use corpus::{load_corpus, Corpus, CorpusConfig};
pub use dyads::{extract_dyads, DyadParams};
pub use metrics::{assemble_units, MentorGainRecord, ProtegeUnit};
pub use scholars::{apply_gender_filter, build_profiles, Gender, ProfileSet};
