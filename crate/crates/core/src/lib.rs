//! Operating-segment extraction from earnings-report tables.
//!
//! The pipeline runs in this order:
//!
//! 1. [`ingestion`] polls a feed, flags earnings 8-Ks and stores raw filings.
//! 2. [`table`] turns HTML tables into span-expanded grids, finds the numeric
//!    body rectangle and infers the row-header hierarchy from indentation.
//! 3. [`normalize`] maps periods onto fiscal quarters and amounts onto
//!    full-precision decimals.
//! 4. [`filter`] drops non-financial tables and scores the rest with
//!    company-as-document TF-IDF over 2-row windows.
//! 5. [`classifier`] labels every header path as operating segment or not
//!    with a masked-vocabulary bidirectional GRU (plus three baselines).
//! 6. [`extract`] emits traceable, adjustable, exportable segment records.
//!
//! [`eval`] generates the synthetic labelled corpus and computes the metric
//! suite used to compare models.

pub mod classifier;
pub mod error;
pub mod eval;
pub mod extract;
pub mod filter;
pub mod ingestion;
pub mod normalize;
pub mod table;
pub mod types;

pub use error::{Result, SpotError};
pub use types::{DocType, Sector, SectorGroup};
