//! Standardized uni- and multivariate drought indices.
//!
//! The univariate path ([`marginal`], [`index::si`]) turns a monthly climate
//! series into an approximately i.i.d. standard normal index. The
//! multivariate path joins several such marginals with a vine copula
//! ([`copula`], [`vine`]) and aggregates the Rosenblatt-transformed data into
//! one index ([`index`]). [`analytics`] summarizes indices over a grid.

pub mod analytics;
pub mod copula;
pub mod diagnostics;
pub mod index;
pub mod ingest;
pub mod marginal;
pub mod optim;
pub mod series;
pub mod stats;
pub mod vine;
