//! Binary-state network reliability toolkit.
//!
//! A network is an undirected simple graph whose arcs either work or fail
//! independently; nodes never fail. Reliability is the probability that the
//! working arcs connect node 1 (source) to node n (target).
//!
//! The crate provides:
//!
//! - [`graph`]: the network model, its text format and benchmark generators.
//! - [`connectivity`]: the layered source-to-target search used by every
//!   estimator.
//! - [`bat`]: binary-addition-tree enumeration, supervector classification and
//!   exact reliability.
//! - [`estimators`]: Monte Carlo and BAT-MCS estimators, sample-size planning
//!   and run statistics.
//! - [`datagen`]: labeled (arc reliabilities → network reliability) datasets.
//! - [`surrogates`]: native regression models and the evaluation protocol.
//! - [`cli`]: the `relnet` command-line front end.

pub mod bat;
pub mod cli;
pub mod connectivity;
pub mod datagen;
pub mod error;
pub mod estimators;
pub mod graph;
pub mod rng;
pub mod surrogates;

pub use error::{Error, Result};
pub use graph::{ArcDistribution, Network, StateVector, Supervector};
