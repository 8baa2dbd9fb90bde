//! Neighbour selection, rating prediction and top-N recommendation.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratings::{ItemId, MatrixStats, UserId};
use crate::similarity::{MeasureId, SimilarityContext, SimilarityMeasure};

/// Anything that can answer "how similar are these two users".
pub trait SimilaritySource: Sync {
    fn similarity(&self, u1: UserId, u2: UserId) -> f64;
}

/// Evaluates the measure on every call.
#[derive(Clone, Copy)]
pub struct DirectSimilarity<'a> {
    ctx: &'a SimilarityContext,
    measure: SimilarityMeasure,
}

impl<'a> DirectSimilarity<'a> {
    pub fn new(ctx: &'a SimilarityContext, measure: MeasureId) -> Self {
        DirectSimilarity {
            ctx,
            measure: SimilarityMeasure::new(measure),
        }
    }
}

impl SimilaritySource for DirectSimilarity<'_> {
    fn similarity(&self, u1: UserId, u2: UserId) -> f64 {
        self.measure.score(self.ctx, u1, u2)
    }
}

/// Dense user × user similarity memo for one measure.
///
/// Every measure is exactly symmetric, so only the upper triangle is
/// evaluated. Lookups return the same bits direct evaluation would.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityTable {
    users: usize,
    values: Vec<f64>,
}

impl SimilarityTable {
    /// Fills the table, one row per rayon task.
    pub fn compute(ctx: &SimilarityContext, measure: MeasureId) -> Self {
        let measure = SimilarityMeasure::new(measure);
        let users = ctx.train().num_users();
        let rows: Vec<Vec<f64>> = (1..=users as UserId)
            .into_par_iter()
            .map(|u| {
                (u..=users as UserId)
                    .map(|v| measure.score(ctx, u, v))
                    .collect()
            })
            .collect();
        let mut values = vec![0.0; users * users];
        for (i, row) in rows.into_iter().enumerate() {
            for (offset, s) in row.into_iter().enumerate() {
                let j = i + offset;
                values[i * users + j] = s;
                values[j * users + i] = s;
            }
        }
        SimilarityTable { users, values }
    }

    /// Element-wise product, used to assemble combined measures from their
    /// already computed factors.
    pub fn product(set: &SimilarityTable, numeric: &SimilarityTable) -> Self {
        assert_eq!(set.users, numeric.users, "tables cover different user sets");
        SimilarityTable {
            users: set.users,
            values: set
                .values
                .iter()
                .zip(&numeric.values)
                .map(|(s, n)| s * n)
                .collect(),
        }
    }

    pub fn num_users(&self) -> usize {
        self.users
    }

    pub fn get(&self, u1: UserId, u2: UserId) -> f64 {
        let (i, j) = (u1 as usize - 1, u2 as usize - 1);
        self.values[i * self.users + j]
    }
}

impl SimilaritySource for SimilarityTable {
    fn similarity(&self, u1: UserId, u2: UserId) -> f64 {
        self.get(u1, u2)
    }
}

impl<S: SimilaritySource + ?Sized> SimilaritySource for &S {
    fn similarity(&self, u1: UserId, u2: UserId) -> f64 {
        (**self).similarity(u1, u2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnOptions {
    pub k: usize,
    /// Keep negatively correlated users as neighbours. Off by default.
    pub include_negative: bool,
}

impl Default for KnnOptions {
    fn default() -> Self {
        KnnOptions {
            k: 40,
            include_negative: false,
        }
    }
}

impl KnnOptions {
    pub fn with_k(k: usize) -> Self {
        KnnOptions {
            k,
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    pub user: UserId,
    pub similarity: f64,
}

/// The target's nearest users, by descending similarity then ascending id.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborList {
    pub target: UserId,
    pub k: usize,
    pub entries: Vec<Neighbor>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub user: UserId,
    pub item: ItemId,
    pub value: f64,
    /// Neighbours that rated the item.
    pub support: usize,
}

/// Top-N list for one user.
#[derive(Clone, Debug, PartialEq)]
pub struct RecommendationList {
    pub user: UserId,
    /// `(item, predicted value)`, best first, ties by ascending item id.
    pub items: Vec<(ItemId, f64)>,
    /// Target length from [`recommendation_count`]. `items` is shorter only
    /// when the user has fewer unrated candidate items than this.
    pub count: usize,
}

impl RecommendationList {
    pub fn item_ids(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.items.iter().map(|&(i, _)| i)
    }
}

/// `max(1, ceil(sr * (T - |I_i|)))`, evaluated in integer arithmetic as
/// `ceil(relevant * (T - |I_i|) / (|U| * |V|))` so that no rounding error
/// can push an exact integer over the ceiling.
pub fn recommendation_count(stats: &MatrixStats, rated_by_target: usize) -> usize {
    if stats.grid_size == 0 {
        return 1;
    }
    let unrated = stats.rated_item_count.saturating_sub(rated_by_target) as u128;
    let num = stats.relevant_count as u128 * unrated;
    let den = stats.grid_size as u128;
    (num.div_ceil(den) as usize).max(1)
}

/// User-based KNN over a training context and a similarity source.
pub struct KnnEngine<'a, S> {
    ctx: &'a SimilarityContext,
    source: S,
    options: KnnOptions,
}

impl<'a> KnnEngine<'a, DirectSimilarity<'a>> {
    /// Engine that evaluates `measure` directly, without a memo.
    pub fn direct(ctx: &'a SimilarityContext, measure: MeasureId, options: KnnOptions) -> Self {
        KnnEngine::new(ctx, DirectSimilarity::new(ctx, measure), options)
    }
}

impl<'a, S: SimilaritySource> KnnEngine<'a, S> {
    pub fn new(ctx: &'a SimilarityContext, source: S, options: KnnOptions) -> Self {
        KnnEngine {
            ctx,
            source,
            options,
        }
    }

    pub fn context(&self) -> &SimilarityContext {
        self.ctx
    }

    pub fn options(&self) -> KnnOptions {
        self.options
    }

    fn check_user(&self, user: UserId) -> Result<()> {
        if self.ctx.train().contains_user(user) {
            Ok(())
        } else {
            Err(Error::UnknownUser(user))
        }
    }

    pub fn neighbors(&self, target: UserId) -> Result<NeighborList> {
        self.check_user(target)?;
        let k = self.options.k;
        if k == 0 {
            return Err(Error::Argument("k must be >= 1".into()));
        }
        let keep = |s: f64| {
            if self.options.include_negative {
                s != 0.0 && !s.is_nan()
            } else {
                s > 0.0
            }
        };
        let mut candidates: Vec<Neighbor> = self
            .ctx
            .train()
            .users()
            .filter(|&u| u != target)
            .map(|u| Neighbor {
                user: u,
                similarity: self.source.similarity(target, u),
            })
            .filter(|n| keep(n.similarity))
            .collect();
        let order = |a: &Neighbor, b: &Neighbor| {
            b.similarity
                .total_cmp(&a.similarity)
                .then(a.user.cmp(&b.user))
        };
        if candidates.len() > k {
            candidates.select_nth_unstable_by(k - 1, order);
            candidates.truncate(k);
        }
        candidates.sort_unstable_by(order);
        Ok(NeighborList {
            target,
            k,
            entries: candidates,
        })
    }

    /// Rating the target would give when nothing better is known.
    fn fallback(&self, target: UserId) -> f64 {
        let stats = self.ctx.stats();
        stats
            .user_mean(target)
            .or(stats.global_mean())
            .unwrap_or(self.ctx.scale().median())
    }

    pub fn predict(&self, target: UserId, item: ItemId) -> Result<Prediction> {
        let neighbors = self.neighbors(target)?;
        self.predict_with(&neighbors, item)
    }

    /// Mean-centred weighted average over the neighbours that rated `item`:
    ///
    /// `mean(target) + Σ sim·(r_n,item − mean(n)) / Σ |sim|`
    ///
    /// falling back to the target's mean (or the global mean for users with
    /// no training ratings) and clamped to the rating scale.
    pub fn predict_with(&self, neighbors: &NeighborList, item: ItemId) -> Result<Prediction> {
        let target = neighbors.target;
        self.check_user(target)?;
        let train = self.ctx.train();
        if !train.contains_item(item) {
            return Err(Error::UnknownItem(item));
        }
        let stats = self.ctx.stats();
        let Some(base) = stats.user_mean(target) else {
            return Ok(Prediction {
                user: target,
                item,
                value: self.ctx.scale().clamp(self.fallback(target)),
                support: 0,
            });
        };
        let (mut num, mut den, mut support) = (0.0, 0.0, 0usize);
        for n in &neighbors.entries {
            if let Some(r) = train.rating(n.user, item) {
                let mean = stats.user_mean(n.user).unwrap_or(r);
                num += n.similarity * (r - mean);
                den += n.similarity.abs();
                support += 1;
            }
        }
        let value = if support == 0 || den == 0.0 {
            base
        } else {
            base + num / den
        };
        Ok(Prediction {
            user: target,
            item,
            value: self.ctx.scale().clamp(value),
            support,
        })
    }

    pub fn recommend(&self, target: UserId) -> Result<RecommendationList> {
        let neighbors = self.neighbors(target)?;
        self.recommend_with(&neighbors)
    }

    /// Scores every unrated item some neighbour rated, keeps the best
    /// [`recommendation_count`] of them, and pads with unscored items (in
    /// ascending id order) only when too few items could be scored.
    ///
    /// Scores are accumulated neighbour by neighbour, in the same order
    /// [`predict_with`](Self::predict_with) uses, so each listed value equals
    /// the corresponding prediction bit for bit.
    pub fn recommend_with(&self, neighbors: &NeighborList) -> Result<RecommendationList> {
        let target = neighbors.target;
        self.check_user(target)?;
        let train = self.ctx.train();
        let stats = self.ctx.stats();
        let scale = self.ctx.scale();
        let rated = train.user_ratings(target);
        let count = recommendation_count(stats, rated.len());

        let n_items = train.num_items();
        let mut num = vec![0.0; n_items];
        let mut den = vec![0.0; n_items];
        let mut support = vec![0usize; n_items];
        if stats.user_mean(target).is_some() {
            for n in &neighbors.entries {
                for &(item, r) in train.user_ratings(n.user) {
                    let j = item as usize - 1;
                    let mean = stats.user_mean(n.user).unwrap_or(r);
                    num[j] += n.similarity * (r - mean);
                    den[j] += n.similarity.abs();
                    support[j] += 1;
                }
            }
        }

        let mut is_rated = vec![false; n_items];
        for &(item, _) in rated {
            is_rated[item as usize - 1] = true;
        }
        let base = self.fallback(target);
        let mut scored: Vec<(ItemId, f64)> = (0..n_items)
            .filter(|&j| support[j] > 0 && !is_rated[j])
            .map(|j| {
                let value = if den[j] == 0.0 {
                    base
                } else {
                    base + num[j] / den[j]
                };
                (j as ItemId + 1, scale.clamp(value))
            })
            .collect();
        scored.sort_by(|a, b| match b.1.total_cmp(&a.1) {
            Ordering::Equal => a.0.cmp(&b.0),
            other => other,
        });
        scored.truncate(count);

        if scored.len() < count {
            let padding = (0..n_items)
                .filter(|&j| {
                    support[j] == 0
                        && !is_rated[j]
                        && !train.item_ratings(j as ItemId + 1).is_empty()
                })
                .map(|j| (j as ItemId + 1, scale.clamp(base)))
                .take(count - scored.len())
                .collect::<Vec<_>>();
            scored.extend(padding);
        }

        Ok(RecommendationList {
            user: target,
            items: scored,
            count,
        })
    }
}

/// Nearest neighbours of `target` under `measure`, evaluated directly.
pub fn neighbors(
    ctx: &SimilarityContext,
    measure: MeasureId,
    target: UserId,
    k: usize,
) -> Result<NeighborList> {
    KnnEngine::direct(ctx, measure, KnnOptions::with_k(k)).neighbors(target)
}

pub fn predict(
    ctx: &SimilarityContext,
    measure: MeasureId,
    target: UserId,
    item: ItemId,
    k: usize,
) -> Result<Prediction> {
    KnnEngine::direct(ctx, measure, KnnOptions::with_k(k)).predict(target, item)
}

pub fn recommend(
    ctx: &SimilarityContext,
    measure: MeasureId,
    target: UserId,
    k: usize,
) -> Result<RecommendationList> {
    KnnEngine::direct(ctx, measure, KnnOptions::with_k(k)).recommend(target)
}
