//! Generate, anonymize, and re-match correlated pairs of edge-labeled graphs.
//!
//! A pair of graphs on the same vertex set is drawn edge by edge from a joint
//! distribution over edge values, so the two graphs are correlated copies of
//! each other. One copy then has its vertex labels scrambled by a secret
//! permutation. The matching problem is to recover the labeling from graph
//! structure alone, which this crate attacks by searching for relabelings
//! that make the two edge-value sequences jointly typical.
//!
//! The crate splits into small layers:
//!
//! * [`dist`]: joint edge-value distributions, mutual information, sampling
//! * [`perm`]: permutations, cycle structure, sequence actions
//! * [`graph`]: upper-triangle graphs, correlated generation, anonymization
//! * [`typicality`]: joint types, typicality tests, exact and Monte Carlo
//!   probabilities that a permuted pair stays typical, and the exponential
//!   decay bound on that probability
//! * [`matcher`]: candidate-set search and greedy matching
//! * [`harness`]: the file formats and commands behind the `typmatch` binary
//!
//! ```
//! use typmatch::dist::JointDist;
//! use typmatch::graph::MatchInstance;
//! use typmatch::matcher::{match_instance, MatchConfig, MatchOutcome};
//!
//! // Perfectly correlated binary edges: the pair is two copies of one graph.
//! let p = JointDist::perfectly_correlated(2).unwrap();
//! let inst = MatchInstance::generate(&p, 6, 7).unwrap();
//! let outcome = match_instance(&inst, &MatchConfig::default()).unwrap();
//! match outcome {
//!     MatchOutcome::Matched(r) => assert!(r.candidate_count >= 1),
//!     MatchOutcome::NoTypicalLabeling { .. } => unreachable!("auto epsilon is generous"),
//! }
//! ```
//!
//! The `book/` directory in the repository walks through the same material
//! chapter by chapter; its code snippets compile as doc-tests of this crate.

pub mod dist;
pub mod graph;
pub mod harness;
pub mod matcher;
pub mod perm;
pub mod rng;
pub mod typicality;

#[cfg(doctest)]
pub mod book;
