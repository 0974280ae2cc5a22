//! Analytics for hate propagation and echo chambers on social platforms.
//!
//! The pipeline goes from raw interaction dumps (JSON-lines) to:
//!
//! * a validated post corpus ([`ingest`]),
//! * per-post and per-user hate buckets from a classifier ensemble ([`scoring`]),
//! * the directed user-interaction graph with its k-core structure
//!   ([`socialgraph`]),
//! * cascade trees and their volume/width/height metrics ([`cascade`]),
//! * automatically detected echo chambers from content embeddings ([`echo`]),
//! * the inter-chamber network with homogeneity scores and a significance
//!   backbone ([`echonet`]),
//! * nonparametric statistics backing all of the above ([`stats`]).
//!
//! [`synth`] generates corpora with planted ground truth so that every stage
//! has an oracle to test against.

pub mod cascade;
pub mod echo;
pub mod echonet;
mod error;
pub mod ingest;
pub mod rng;
pub mod scoring;
pub mod socialgraph;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use ingest::{Corpus, Platform, Post, PostId, UserId};
pub use scoring::{PostHateBucket, UserHateBucket};
