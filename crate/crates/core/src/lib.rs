//! User-based k-nearest-neighbour collaborative filtering built around
//! set-overlap similarity (Jaccard and a singularity-weighted variant) and its
//! multiplicative combinations with numeric measures (cosine, Pearson, PSS and
//! triangle area).
//!
//! The crate is split into four layers:
//!
//! * [`ratings`] loads `u.data`-style rating files into an immutable sparse
//!   [`RatingMatrix`] and draws seeded train/test splits.
//! * [`similarity`] implements the fourteen measures over a user pair.
//! * [`knn`] selects neighbours, predicts ratings and builds top-N lists.
//! * [`eval`] runs the ratio × fold × measure grid and renders reports.

pub mod error;
pub mod eval;
pub mod knn;
pub mod ratings;
pub mod similarity;

pub use error::{Error, Result};
pub use ratings::{ItemId, Rating, RatingMatrix, RatingScale, UserId};
pub use similarity::{MeasureId, SimilarityContext, SimilarityMeasure};
