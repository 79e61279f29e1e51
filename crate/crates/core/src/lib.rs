//! Corpus-analysis toolkit for argumentative concessions in threaded
//! discussions: marker extraction, a bootstrapped pattern lexicon, a
//! pattern+SVM hybrid classifier with pool-based self-training, and
//! persuasion-outcome distribution reports.

pub mod config;
pub mod corpus;
pub mod eval;
pub mod features;
pub mod lexicons;
pub mod patterns;
pub mod pipeline;
pub mod report;
pub mod selftrain;
pub mod svm;
pub mod textproc;
