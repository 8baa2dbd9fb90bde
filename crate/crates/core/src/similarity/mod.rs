//! The fourteen user-user similarity measures.
//!
//! Six base measures ([`jaccard`], [`ij`], [`cosine`], [`pearson`], [`pss`],
//! [`ta`]) plus the eight products of a set-overlap factor (Jaccard or IJ)
//! with a numeric factor (cosine, Pearson, PSS or TA).
//!
//! Every measure is a pure function of `(context, u1, u2)`. Internally the
//! pair is put in ascending id order before anything is summed, so
//! `m(u1, u2)` and `m(u2, u1)` are bitwise equal.

mod base;
mod singularity;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratings::{MatrixStats, RatingMatrix, RatingScale, UserId};

pub use base::{cosine, ij, jaccard, pearson, proximity, pss, significance, singularity, ta};
pub use singularity::{ItemSingularity, SingularityTables};

/// Identifier of one of the fourteen measures, in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum MeasureId {
    Jaccard,
    Ij,
    Cosine,
    Pearson,
    Pss,
    Ta,
    CosineJ,
    PearsonJ,
    PssJ,
    TaJ,
    CosineIj,
    PearsonIj,
    PssIj,
    TaIj,
}

impl MeasureId {
    pub const ALL: [MeasureId; 14] = [
        MeasureId::Jaccard,
        MeasureId::Ij,
        MeasureId::Cosine,
        MeasureId::Pearson,
        MeasureId::Pss,
        MeasureId::Ta,
        MeasureId::CosineJ,
        MeasureId::PearsonJ,
        MeasureId::PssJ,
        MeasureId::TaJ,
        MeasureId::CosineIj,
        MeasureId::PearsonIj,
        MeasureId::PssIj,
        MeasureId::TaIj,
    ];

    pub const SET_MEASURES: [MeasureId; 2] = [MeasureId::Jaccard, MeasureId::Ij];

    pub const NUMERIC_MEASURES: [MeasureId; 4] = [
        MeasureId::Cosine,
        MeasureId::Pearson,
        MeasureId::Pss,
        MeasureId::Ta,
    ];

    /// Display name, e.g. `"TAJ"` or `"CosineIJ"`.
    pub fn name(self) -> &'static str {
        match self {
            MeasureId::Jaccard => "Jaccard",
            MeasureId::Ij => "IJ",
            MeasureId::Cosine => "Cosine",
            MeasureId::Pearson => "Pearson",
            MeasureId::Pss => "PSS",
            MeasureId::Ta => "TA",
            MeasureId::CosineJ => "CosineJ",
            MeasureId::PearsonJ => "PearsonJ",
            MeasureId::PssJ => "PSSJ",
            MeasureId::TaJ => "TAJ",
            MeasureId::CosineIj => "CosineIJ",
            MeasureId::PearsonIj => "PearsonIJ",
            MeasureId::PssIj => "PSSIJ",
            MeasureId::TaIj => "TAIJ",
        }
    }

    /// `(set factor, numeric factor)` for the eight combined measures.
    pub fn factors(self) -> Option<(MeasureId, MeasureId)> {
        use MeasureId::*;
        Some(match self {
            CosineJ => (Jaccard, Cosine),
            PearsonJ => (Jaccard, Pearson),
            PssJ => (Jaccard, Pss),
            TaJ => (Jaccard, Ta),
            CosineIj => (Ij, Cosine),
            PearsonIj => (Ij, Pearson),
            PssIj => (Ij, Pss),
            TaIj => (Ij, Ta),
            Jaccard | Ij | Cosine | Pearson | Pss | Ta => return None,
        })
    }

    pub fn is_combined(self) -> bool {
        self.factors().is_some()
    }

    /// Comma-separated list of every valid name, for error messages.
    pub fn valid_names() -> String {
        MeasureId::ALL
            .iter()
            .map(|m| m.name())
            .collect::<Vec<_>>()
            .join(", ")
    }
}

impl fmt::Display for MeasureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeasureId {
    type Err = Error;

    /// Case-insensitive lookup by display name.
    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim();
        MeasureId::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(wanted))
            .ok_or_else(|| Error::UnknownMeasure {
                name: s.to_string(),
                valid: MeasureId::valid_names(),
            })
    }
}

impl From<MeasureId> for String {
    fn from(m: MeasureId) -> String {
        m.name().to_string()
    }
}

impl TryFrom<String> for MeasureId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Which coordinates the vector norms in cosine and TA run over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormDomain {
    /// Both norms over the co-rated items only.
    #[default]
    CoRated,
    /// Each norm over everything that user rated; the dot product still
    /// only sees co-rated items (unrated entries act as zeros).
    FullProfile,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimilarityOptions {
    pub norm_domain: NormDomain,
}

/// A training matrix bundled with the statistics the measures read.
#[derive(Clone, Debug)]
pub struct SimilarityContext {
    train: RatingMatrix,
    stats: MatrixStats,
    singularities: SingularityTables,
    options: SimilarityOptions,
    /// Per-user Euclidean norm over the full rated set.
    profile_norms: Vec<f64>,
}

impl SimilarityContext {
    pub fn new(train: RatingMatrix, relevance_threshold: f64) -> Result<Self> {
        Self::with_options(train, relevance_threshold, SimilarityOptions::default())
    }

    pub fn with_options(
        train: RatingMatrix,
        relevance_threshold: f64,
        options: SimilarityOptions,
    ) -> Result<Self> {
        let stats = MatrixStats::compute(&train, relevance_threshold)?;
        let singularities = SingularityTables::build(&train, train.scale());
        let profile_norms = train
            .users()
            .map(|u| {
                train
                    .user_ratings(u)
                    .iter()
                    .map(|&(_, v)| v * v)
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        Ok(SimilarityContext {
            train,
            stats,
            singularities,
            options,
            profile_norms,
        })
    }

    pub fn train(&self) -> &RatingMatrix {
        &self.train
    }

    pub fn stats(&self) -> &MatrixStats {
        &self.stats
    }

    pub fn singularities(&self) -> &SingularityTables {
        &self.singularities
    }

    pub fn options(&self) -> SimilarityOptions {
        self.options
    }

    pub fn scale(&self) -> RatingScale {
        self.train.scale()
    }

    pub(crate) fn profile_norm(&self, user: UserId) -> f64 {
        self.profile_norms
            .get((user as usize).wrapping_sub(1))
            .copied()
            .unwrap_or(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Base,
    Product { set: MeasureId, numeric: MeasureId },
}

/// A callable similarity measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimilarityMeasure {
    id: MeasureId,
    kind: Kind,
}

impl SimilarityMeasure {
    pub fn new(id: MeasureId) -> Self {
        match id.factors() {
            Some((set, numeric)) => SimilarityMeasure {
                id,
                kind: Kind::Product { set, numeric },
            },
            None => SimilarityMeasure {
                id,
                kind: Kind::Base,
            },
        }
    }

    pub fn id(&self) -> MeasureId {
        self.id
    }

    pub fn score(&self, ctx: &SimilarityContext, u1: UserId, u2: UserId) -> f64 {
        match self.kind {
            Kind::Base => base_score(self.id, ctx, u1, u2),
            Kind::Product { set, numeric } => {
                let s = base_score(set, ctx, u1, u2);
                let n = base_score(numeric, ctx, u1, u2);
                s * n
            }
        }
    }
}

fn base_score(id: MeasureId, ctx: &SimilarityContext, u1: UserId, u2: UserId) -> f64 {
    match id {
        MeasureId::Jaccard => jaccard(ctx, u1, u2),
        MeasureId::Ij => ij(ctx, u1, u2),
        MeasureId::Cosine => cosine(ctx, u1, u2),
        MeasureId::Pearson => pearson(ctx, u1, u2),
        MeasureId::Pss => pss(ctx, u1, u2),
        MeasureId::Ta => ta(ctx, u1, u2),
        combined => unreachable!("{combined} is not a base measure"),
    }
}

/// Multiplies a set-overlap measure with a numeric one.
pub fn combine(set: MeasureId, numeric: MeasureId) -> Result<SimilarityMeasure> {
    if !MeasureId::SET_MEASURES.contains(&set) {
        return Err(Error::Argument(format!(
            "{set} is not a set measure (expected Jaccard or IJ)"
        )));
    }
    if !MeasureId::NUMERIC_MEASURES.contains(&numeric) {
        return Err(Error::Argument(format!(
            "{numeric} is not a numeric measure (expected Cosine, Pearson, PSS or TA)"
        )));
    }
    let id = MeasureId::ALL
        .into_iter()
        .find(|m| m.factors() == Some((set, numeric)))
        .expect("every set x numeric pair is registered");
    Ok(SimilarityMeasure::new(id))
}

/// All fourteen measures keyed by id, iterating in report order.
pub fn registry() -> BTreeMap<MeasureId, SimilarityMeasure> {
    MeasureId::ALL
        .into_iter()
        .map(|id| (id, SimilarityMeasure::new(id)))
        .collect()
}

/// Case-insensitive lookup by name; `None` for unknown names.
pub fn lookup(name: &str) -> Option<SimilarityMeasure> {
    name.parse::<MeasureId>().ok().map(SimilarityMeasure::new)
}
