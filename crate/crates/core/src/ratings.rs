//! Rating ingestion, the immutable sparse rating matrix and train/test splits.

use std::io::{BufRead, Write};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type UserId = u32;
pub type ItemId = u32;

/// One `(user, item, value)` observation. Ids are 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub user: UserId,
    pub item: ItemId,
    pub value: f64,
    pub timestamp: i64,
}

/// Closed rating interval plus the median of its possible values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatingScale {
    min: f64,
    max: f64,
    median: f64,
}

impl RatingScale {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(Error::Argument(format!(
                "rating scale needs finite min < max, got [{min}, {max}]"
            )));
        }
        Ok(RatingScale {
            min,
            max,
            median: (min + max) / 2.0,
        })
    }

    /// The 1–5 star scale used by MovieLens (median 3).
    pub fn movielens() -> Self {
        RatingScale {
            min: 1.0,
            max: 5.0,
            median: 3.0,
        }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn median(&self) -> f64 {
        self.median
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }
}

/// Declared id universe. `None` means "use the largest observed id".
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Universe {
    pub users: Option<usize>,
    pub items: Option<usize>,
}

impl Universe {
    pub const MOVIELENS_100K: Universe = Universe {
        users: Some(943),
        items: Some(1682),
    };
}

/// Immutable sparse user × item rating store.
///
/// Ratings are kept three ways: the canonical list sorted by `(user, item)`,
/// a user-major view and an item-major view. Rows of both views are sorted by
/// id, which every similarity computation relies on for its merge joins and
/// its summation order.
#[derive(Clone, Debug)]
pub struct RatingMatrix {
    scale: RatingScale,
    num_users: usize,
    num_items: usize,
    ratings: Vec<Rating>,
    by_user: Vec<Vec<(ItemId, f64)>>,
    by_item: Vec<Vec<(UserId, f64)>>,
}

impl RatingMatrix {
    /// Builds a matrix, validating ids, values and `(user, item)` uniqueness.
    ///
    /// Validation errors carry the 1-based position of the offending rating
    /// in `ratings`, which for parsed input is its line number.
    pub fn from_ratings(
        mut ratings: Vec<Rating>,
        scale: RatingScale,
        universe: Universe,
    ) -> Result<Self> {
        let mut max_user = 0usize;
        let mut max_item = 0usize;
        for (pos, r) in ratings.iter().enumerate() {
            let line = pos + 1;
            if r.user == 0 || r.item == 0 {
                return Err(Error::Validation {
                    line,
                    message: "user and item ids must be >= 1".into(),
                });
            }
            if !scale.contains(r.value) {
                return Err(Error::Validation {
                    line,
                    message: format!(
                        "rating {} outside scale [{}, {}]",
                        r.value, scale.min, scale.max
                    ),
                });
            }
            max_user = max_user.max(r.user as usize);
            max_item = max_item.max(r.item as usize);
        }
        let num_users = universe.users.unwrap_or(max_user);
        let num_items = universe.items.unwrap_or(max_item);
        if max_user > num_users || max_item > num_items {
            let (line, _) = ratings
                .iter()
                .enumerate()
                .find(|(_, r)| r.user as usize > num_users || r.item as usize > num_items)
                .expect("some rating exceeds the universe");
            return Err(Error::Validation {
                line: line + 1,
                message: format!(
                    "id outside declared universe of {num_users} users x {num_items} items"
                ),
            });
        }

        // Sort a permutation first so duplicate errors can report the
        // original position of the second occurrence.
        let mut order: Vec<usize> = (0..ratings.len()).collect();
        order.sort_by_key(|&i| (ratings[i].user, ratings[i].item, i));
        for w in order.windows(2) {
            let (a, b) = (&ratings[w[0]], &ratings[w[1]]);
            if a.user == b.user && a.item == b.item {
                return Err(Error::Validation {
                    line: w[1] + 1,
                    message: format!("duplicate rating for user {} item {}", b.user, b.item),
                });
            }
        }
        ratings.sort_by_key(|r| (r.user, r.item));

        let mut by_user = vec![Vec::new(); num_users];
        let mut by_item = vec![Vec::new(); num_items];
        for r in &ratings {
            by_user[r.user as usize - 1].push((r.item, r.value));
            by_item[r.item as usize - 1].push((r.user, r.value));
        }

        Ok(RatingMatrix {
            scale,
            num_users,
            num_items,
            ratings,
            by_user,
            by_item,
        })
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn universe(&self) -> Universe {
        Universe {
            users: Some(self.num_users),
            items: Some(self.num_items),
        }
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    /// All ratings, sorted by `(user, item)`.
    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn contains_user(&self, user: UserId) -> bool {
        user >= 1 && user as usize <= self.num_users
    }

    pub fn contains_item(&self, item: ItemId) -> bool {
        item >= 1 && item as usize <= self.num_items
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> {
        1..=self.num_users as UserId
    }

    pub fn items(&self) -> impl Iterator<Item = ItemId> {
        1..=self.num_items as ItemId
    }

    /// The user's `(item, value)` pairs in ascending item order. Empty for
    /// ids outside the universe.
    pub fn user_ratings(&self, user: UserId) -> &[(ItemId, f64)] {
        if self.contains_user(user) {
            &self.by_user[user as usize - 1]
        } else {
            &[]
        }
    }

    /// The item's `(user, value)` pairs in ascending user order.
    pub fn item_ratings(&self, item: ItemId) -> &[(UserId, f64)] {
        if self.contains_item(item) {
            &self.by_item[item as usize - 1]
        } else {
            &[]
        }
    }

    pub fn rating(&self, user: UserId, item: ItemId) -> Option<f64> {
        let row = self.user_ratings(user);
        row.binary_search_by_key(&item, |&(i, _)| i)
            .ok()
            .map(|pos| row[pos].1)
    }

    /// SHA-256 over the canonical `u.data` serialisation of the ratings.
    pub fn content_hash(&self) -> String {
        let mut buf = Vec::with_capacity(self.ratings.len() * 24);
        write_ratings(&mut buf, &self.ratings).expect("writing to a Vec cannot fail");
        sha256_hex(&buf)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parses `user<TAB>item<TAB>rating<TAB>timestamp` records.
///
/// Blank lines are ignored. Line numbers in errors are 1-based.
pub fn load_ratings<R: BufRead>(
    source: R,
    scale: RatingScale,
    universe: Universe,
) -> Result<RatingMatrix> {
    let mut ratings = Vec::new();
    let mut lines_of = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        ratings.push(parse_record(line, line_no)?);
        lines_of.push(line_no);
    }
    // Map positions reported by the matrix builder back to file lines.
    RatingMatrix::from_ratings(ratings, scale, universe).map_err(|e| match e {
        Error::Validation { line, message } => Error::Validation {
            line: lines_of[line - 1],
            message,
        },
        other => other,
    })
}

fn parse_record(line: &str, line_no: usize) -> Result<Rating> {
    let parse_err = |message: String| Error::Parse {
        line: line_no,
        message,
    };
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 4 {
        return Err(parse_err(format!(
            "expected 4 tab-separated fields, found {}",
            fields.len()
        )));
    }
    let user = fields[0]
        .trim()
        .parse::<UserId>()
        .map_err(|e| parse_err(format!("bad user id '{}': {e}", fields[0])))?;
    let item = fields[1]
        .trim()
        .parse::<ItemId>()
        .map_err(|e| parse_err(format!("bad item id '{}': {e}", fields[1])))?;
    let value = fields[2]
        .trim()
        .parse::<f64>()
        .map_err(|e| parse_err(format!("bad rating '{}': {e}", fields[2])))?;
    if !value.is_finite() {
        return Err(parse_err(format!("non-finite rating '{}'", fields[2])));
    }
    let timestamp = fields[3]
        .trim()
        .parse::<i64>()
        .map_err(|e| parse_err(format!("bad timestamp '{}': {e}", fields[3])))?;
    Ok(Rating {
        user,
        item,
        value,
        timestamp,
    })
}

/// Writes ratings in the same tab-separated layout `load_ratings` reads.
pub fn write_ratings<W: Write>(mut out: W, ratings: &[Rating]) -> std::io::Result<()> {
    for r in ratings {
        // `{}` on f64 prints the shortest representation that parses back
        // to the same value, and drops the fraction for whole numbers.
        writeln!(out, "{}\t{}\t{}\t{}", r.user, r.item, r.value, r.timestamp)?;
    }
    Ok(())
}

/// One train/test partition of a dataset.
#[derive(Clone, Debug)]
pub struct Split {
    pub train: RatingMatrix,
    /// Held-out ratings, sorted by `(user, item)`.
    pub test: Vec<Rating>,
    pub ratio: f64,
    pub fold_index: usize,
    pub seed: u64,
}

/// Draws `n_folds` independent train/test partitions.
///
/// Each fold samples exactly `round(ratio * N)` ratings uniformly without
/// replacement. Fold `f` uses ChaCha stream `f` of the generator seeded with
/// `seed`, so folds are reproducible and mutually independent.
pub fn split_folds(
    matrix: &RatingMatrix,
    ratio: f64,
    n_folds: usize,
    seed: u64,
) -> Result<Vec<Split>> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Argument(format!(
            "test ratio must lie in (0, 1), got {ratio}"
        )));
    }
    if n_folds == 0 {
        return Err(Error::Argument("n_folds must be >= 1".into()));
    }
    let n = matrix.len();
    let test_size = (ratio * n as f64).round() as usize;
    (0..n_folds)
        .map(|fold_index| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(fold_index as u64);
            let mut in_test = vec![false; n];
            for i in index::sample(&mut rng, n, test_size) {
                in_test[i] = true;
            }
            let mut test = Vec::with_capacity(test_size);
            let mut train = Vec::with_capacity(n - test_size);
            for (r, &t) in matrix.ratings().iter().zip(&in_test) {
                if t {
                    test.push(*r);
                } else {
                    train.push(*r);
                }
            }
            let train = RatingMatrix::from_ratings(train, matrix.scale(), matrix.universe())?;
            Ok(Split {
                train,
                test,
                ratio,
                fold_index,
                seed,
            })
        })
        .collect()
}

/// Derived statistics of a (training) matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixStats {
    item_means: Vec<Option<f64>>,
    user_means: Vec<Option<f64>>,
    global_mean: Option<f64>,
    /// Number of items with at least one rating (`T`).
    pub rated_item_count: usize,
    /// Ratings with value >= `relevance_threshold`.
    pub relevant_count: usize,
    /// `|U| * |V|` over the declared universe.
    pub grid_size: usize,
    pub sparse_relevant_ratio: f64,
    pub relevance_threshold: f64,
}

impl MatrixStats {
    pub fn compute(train: &RatingMatrix, relevance_threshold: f64) -> Result<Self> {
        if !train.scale().contains(relevance_threshold) {
            return Err(Error::Argument(format!(
                "relevance threshold {relevance_threshold} outside the rating scale"
            )));
        }
        let mean = |values: &mut dyn Iterator<Item = f64>| {
            let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
            (count > 0).then(|| sum / count as f64)
        };
        let item_means: Vec<Option<f64>> = train
            .items()
            .map(|j| mean(&mut train.item_ratings(j).iter().map(|&(_, v)| v)))
            .collect();
        let user_means: Vec<Option<f64>> = train
            .users()
            .map(|u| mean(&mut train.user_ratings(u).iter().map(|&(_, v)| v)))
            .collect();
        let global_mean = mean(&mut train.ratings().iter().map(|r| r.value));
        let rated_item_count = item_means.iter().filter(|m| m.is_some()).count();
        let relevant_count = train
            .ratings()
            .iter()
            .filter(|r| r.value >= relevance_threshold)
            .count();
        let grid_size = train.num_users() * train.num_items();
        let sparse_relevant_ratio = if grid_size == 0 {
            0.0
        } else {
            relevant_count as f64 / grid_size as f64
        };
        Ok(MatrixStats {
            item_means,
            user_means,
            global_mean,
            rated_item_count,
            relevant_count,
            grid_size,
            sparse_relevant_ratio,
            relevance_threshold,
        })
    }

    /// Mean rating of `item`, `None` if nobody rated it.
    pub fn item_mean(&self, item: ItemId) -> Option<f64> {
        self.item_means
            .get((item as usize).wrapping_sub(1))
            .copied()
            .flatten()
    }

    /// Mean over everything `user` rated, `None` for users with no ratings.
    pub fn user_mean(&self, user: UserId) -> Option<f64> {
        self.user_means
            .get((user as usize).wrapping_sub(1))
            .copied()
            .flatten()
    }

    pub fn global_mean(&self) -> Option<f64> {
        self.global_mean
    }
}

/// Items both users rated, with the set sizes the similarity measures need.
#[derive(Clone, Debug, PartialEq)]
pub struct CoRated {
    /// `(item, first user's value, second user's value)`, ascending by item.
    pub pairs: Vec<(ItemId, f64, f64)>,
    pub first_count: usize,
    pub second_count: usize,
    pub union_count: usize,
}

pub fn co_rated(matrix: &RatingMatrix, u1: UserId, u2: UserId) -> Result<CoRated> {
    for u in [u1, u2] {
        if !matrix.contains_user(u) {
            return Err(Error::UnknownUser(u));
        }
    }
    let a = matrix.user_ratings(u1);
    let b = matrix.user_ratings(u2);
    let pairs: Vec<_> = intersect(a, b).collect();
    Ok(CoRated {
        union_count: a.len() + b.len() - pairs.len(),
        first_count: a.len(),
        second_count: b.len(),
        pairs,
    })
}

/// One step of a merge over two id-sorted rows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Joined {
    Both(ItemId, f64, f64),
    Left(ItemId, f64),
    Right(ItemId, f64),
}

/// Full outer merge of two rows sorted by id.
pub fn merge<'a>(a: &'a [(ItemId, f64)], b: &'a [(ItemId, f64)]) -> Merge<'a> {
    Merge { a, b }
}

pub struct Merge<'a> {
    a: &'a [(ItemId, f64)],
    b: &'a [(ItemId, f64)],
}

impl Iterator for Merge<'_> {
    type Item = Joined;

    fn next(&mut self) -> Option<Joined> {
        match (self.a.first(), self.b.first()) {
            (None, None) => None,
            (Some(&(i, x)), None) => {
                self.a = &self.a[1..];
                Some(Joined::Left(i, x))
            }
            (None, Some(&(j, y))) => {
                self.b = &self.b[1..];
                Some(Joined::Right(j, y))
            }
            (Some(&(i, x)), Some(&(j, y))) => {
                if i < j {
                    self.a = &self.a[1..];
                    Some(Joined::Left(i, x))
                } else if j < i {
                    self.b = &self.b[1..];
                    Some(Joined::Right(j, y))
                } else {
                    self.a = &self.a[1..];
                    self.b = &self.b[1..];
                    Some(Joined::Both(i, x, y))
                }
            }
        }
    }
}

/// Inner merge: the co-rated `(item, a, b)` triples in ascending item order.
pub fn intersect<'a>(
    a: &'a [(ItemId, f64)],
    b: &'a [(ItemId, f64)],
) -> impl Iterator<Item = (ItemId, f64, f64)> + 'a {
    Intersect { a, b }
}

struct Intersect<'a> {
    a: &'a [(ItemId, f64)],
    b: &'a [(ItemId, f64)],
}

impl Iterator for Intersect<'_> {
    type Item = (ItemId, f64, f64);

    #[inline]
    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let (&(i, x), &(j, y)) = (self.a.first()?, self.b.first()?);
            if i < j {
                self.a = &self.a[1..];
            } else if j < i {
                self.b = &self.b[1..];
            } else {
                self.a = &self.a[1..];
                self.b = &self.b[1..];
                return Some((i, x, y));
            }
        }
    }
}
