use crate::ratings::{ItemId, RatingMatrix, RatingScale};

/// Positive, negative and empty singularity of one item.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ItemSingularity {
    pub positive: f64,
    pub negative: f64,
    pub empty: f64,
}

/// Per-item singularities backing the IJ measure.
///
/// A rating is positive when it is strictly above the scale median. With
/// `|U|` the declared number of users:
///
/// * `positive = 1 - (#positive raters) / |U|`
/// * `negative = 1 - (#non-positive raters) / |U|`
/// * `empty    = 1 - (#users who did not rate the item) / |U|`
///
/// Rare rating states therefore carry values close to one.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularityTables {
    items: Vec<ItemSingularity>,
}

impl SingularityTables {
    pub fn build(train: &RatingMatrix, scale: RatingScale) -> Self {
        let users = train.num_users() as f64;
        let items = train
            .items()
            .map(|j| {
                if train.num_users() == 0 {
                    return ItemSingularity {
                        positive: 1.0,
                        negative: 1.0,
                        empty: 0.0,
                    };
                }
                let raters = train.item_ratings(j);
                let positive = raters.iter().filter(|&&(_, v)| v > scale.median()).count();
                let negative = raters.len() - positive;
                let missing = train.num_users() - raters.len();
                ItemSingularity {
                    positive: 1.0 - positive as f64 / users,
                    negative: 1.0 - negative as f64 / users,
                    empty: 1.0 - missing as f64 / users,
                }
            })
            .collect();
        SingularityTables { items }
    }

    /// Singularities of `item`; items outside the universe behave as unrated.
    pub fn get(&self, item: ItemId) -> ItemSingularity {
        self.items
            .get((item as usize).wrapping_sub(1))
            .copied()
            .unwrap_or(ItemSingularity {
                positive: 1.0,
                negative: 1.0,
                empty: 0.0,
            })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratings::{Rating, Universe};

    fn build(ratings: &[(u32, u32, f64)], users: usize, items: usize) -> SingularityTables {
        let m = RatingMatrix::from_ratings(
            ratings
                .iter()
                .map(|&(user, item, value)| Rating {
                    user,
                    item,
                    value,
                    timestamp: 0,
                })
                .collect(),
            RatingScale::movielens(),
            Universe {
                users: Some(users),
                items: Some(items),
            },
        )
        .unwrap();
        SingularityTables::build(&m, m.scale())
    }

    #[test]
    fn hand_counted_item() {
        // |U| = 4, item 1 rated {5, 5, 2, -}
        let t = build(&[(1, 1, 5.0), (2, 1, 5.0), (3, 1, 2.0)], 4, 2);
        let s = t.get(1);
        assert_eq!(s.positive, 0.5);
        assert_eq!(s.negative, 0.75);
        assert_eq!(s.empty, 0.75);
    }

    #[test]
    fn everyone_positive_and_nobody() {
        let t = build(&[(1, 1, 4.0), (2, 1, 5.0)], 2, 2);
        assert_eq!(t.get(1).positive, 0.0);
        assert_eq!(t.get(1).empty, 1.0);
        let unrated = t.get(2);
        assert_eq!(
            (unrated.positive, unrated.negative, unrated.empty),
            (1.0, 1.0, 0.0)
        );
        assert_eq!(t.len(), 2);
    }

    #[test]
    fn median_rating_counts_as_negative() {
        let t = build(&[(1, 1, 3.0)], 2, 1);
        assert_eq!(t.get(1).positive, 1.0);
        assert_eq!(t.get(1).negative, 0.5);
    }
}
