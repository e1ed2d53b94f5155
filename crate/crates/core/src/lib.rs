//! Validation of quantitative CV-based research-performance categories against
//! peer-review ratings.
//!
//! The pipeline mirrors how an institutional research-evaluation unit works with
//! its own data:
//!
//! 1. [`dataset`] ingests four CSV tables (teams, categories, outputs, per-form
//!    peer ratings) into an immutable [`Dataset`].
//! 2. [`normalize`] makes performance measures size-independent (per FTE of
//!    leading staff) and aligns both measures and ratings per discipline
//!    (z-scores).
//! 3. [`stats`] computes Pearson correlations with one-sided significance for
//!    every (category, aspect) pair, per discipline and pooled.
//! 4. [`select`] keeps the significantly positively correlated categories,
//!    drops minority-prevalence ones, and identifies generally valid indicators.
//! 5. [`reference`] builds institution-internal reference values (mean/spread of
//!    per-FTE rates) for the selected categories.
//! 6. [`report`] assembles everything into a deterministic, machine- and
//!    human-readable run report.
//! 7. [`synth`] generates seeded synthetic datasets with planted correlation
//!    structure for testing the pipeline end to end.

pub mod dataset;
pub mod normalize;
pub mod reference;
pub mod report;
pub mod select;
pub mod stats;
pub mod synth;

pub use dataset::{
    Aspect, Category, CategoryId, CategoryKind, Dataset, DatasetError, DisciplineId, Issue,
    OutputRecord, PeerRating, RatingForm, Team, TeamId,
};
pub use normalize::{NormalizeMode, NormalizedDataset, RateMatrix};
pub use reference::ReferenceValue;
pub use report::{ReportFormat, RunReport, RunSettings};
pub use select::{ExclusionReason, IndicatorSet, SelectionConfig};
pub use stats::{CorrelationResult, Scope, StatsError};
pub use synth::SynthConfig;
