use crate::ratings::{intersect, merge, Joined, UserId};

use super::{NormDomain, SimilarityContext};

#[inline]
fn ordered(u1: UserId, u2: UserId) -> (UserId, UserId) {
    if u1 <= u2 {
        (u1, u2)
    } else {
        (u2, u1)
    }
}

/// Logistic function `1 / (1 + e^-x)`.
#[inline]
fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `|I1 ∩ I2| / |I1 ∪ I2|`, zero when neither user rated anything.
pub fn jaccard(ctx: &SimilarityContext, u1: UserId, u2: UserId) -> f64 {
    let (u1, u2) = ordered(u1, u2);
    let a = ctx.train().user_ratings(u1);
    let b = ctx.train().user_ratings(u2);
    let common = intersect(a, b).count();
    let union = a.len() + b.len() - common;
    if union == 0 {
        0.0
    } else {
        common as f64 / union as f64
    }
}

/// Cosine of the two rating vectors over their co-rated items.
///
/// With [`NormDomain::FullProfile`] each norm runs over the user's whole
/// profile instead, while the dot product stays over co-rated items.
pub fn cosine(ctx: &SimilarityContext, u1: UserId, u2: UserId) -> f64 {
    let (u1, u2) = ordered(u1, u2);
    let a = ctx.train().user_ratings(u1);
    let b = ctx.train().user_ratings(u2);
    let (mut dot, mut sq1, mut sq2, mut n) = (0.0, 0.0, 0.0, 0usize);
    for (_, x, y) in intersect(a, b) {
        dot += x * y;
        sq1 += x * x;
        sq2 += y * y;
        n += 1;
    }
    if n == 0 {
        return 0.0;
    }
    let denom = match ctx.options().norm_domain {
        NormDomain::CoRated => sq1.sqrt() * sq2.sqrt(),
        NormDomain::FullProfile => ctx.profile_norm(u1) * ctx.profile_norm(u2),
    };
    if denom == 0.0 {
        0.0
    } else {
        (dot / denom).min(1.0)
    }
}

/// Pearson correlation over co-rated items, each user centred on the mean
/// of everything they rated.
pub fn pearson(ctx: &SimilarityContext, u1: UserId, u2: UserId) -> f64 {
    let (u1, u2) = ordered(u1, u2);
    let (Some(m1), Some(m2)) = (ctx.stats().user_mean(u1), ctx.stats().user_mean(u2)) else {
        return 0.0;
    };
    let a = ctx.train().user_ratings(u1);
    let b = ctx.train().user_ratings(u2);
    let (mut num, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for (_, x, y) in intersect(a, b) {
        let (dx, dy) = (x - m1, y - m2);
        num += dx * dy;
        d1 += dx * dx;
        d2 += dy * dy;
    }
    if d1 == 0.0 || d2 == 0.0 {
        return 0.0;
    }
    (num / (d1.sqrt() * d2.sqrt())).clamp(-1.0, 1.0)
}

/// `1 - logistic(|r1 - r2|)`: 0.5 for equal ratings, falling towards 0.
pub fn proximity(r1: f64, r2: f64) -> f64 {
    1.0 - logistic((r1 - r2).abs())
}

/// `logistic(|r1 - median| * |r2 - median|)`: grows as both ratings move
/// away from the scale median.
pub fn significance(r1: f64, r2: f64, median: f64) -> f64 {
    logistic((r1 - median).abs() * (r2 - median).abs())
}

/// `1 - logistic(|(r1 + r2) / 2 - item_mean|)`.
pub fn singularity(r1: f64, r2: f64, item_mean: f64) -> f64 {
    1.0 - logistic(((r1 + r2) / 2.0 - item_mean).abs())
}

/// Sum over co-rated items of proximity × significance × singularity.
pub fn pss(ctx: &SimilarityContext, u1: UserId, u2: UserId) -> f64 {
    let (u1, u2) = ordered(u1, u2);
    let median = ctx.scale().median();
    let a = ctx.train().user_ratings(u1);
    let b = ctx.train().user_ratings(u2);
    let mut total = 0.0;
    for (item, x, y) in intersect(a, b) {
        let mean = ctx.stats().item_mean(item).unwrap_or(median);
        total += proximity(x, y) * significance(x, y, median) * singularity(x, y, mean);
    }
    total
}

/// Triangle-area similarity over co-rated items.
///
/// With [`NormDomain::FullProfile`] the lengths are those of the users' whole
/// profiles.
pub fn ta(ctx: &SimilarityContext, u1: UserId, u2: UserId) -> f64 {
    let (u1, u2) = ordered(u1, u2);
    let a = ctx.train().user_ratings(u1);
    let b = ctx.train().user_ratings(u2);
    let (mut dot, mut sq1, mut sq2) = (0.0, 0.0, 0.0);
    for (_, x, y) in intersect(a, b) {
        dot += x * y;
        sq1 += x * x;
        sq2 += y * y;
    }
    if sq1 == 0.0 || sq2 == 0.0 {
        return 0.0;
    }
    let (len1, len2) = match ctx.options().norm_domain {
        NormDomain::CoRated => (sq1.sqrt(), sq2.sqrt()),
        NormDomain::FullProfile => (ctx.profile_norm(u1), ctx.profile_norm(u2)),
    };
    let (sq1, sq2) = (len1 * len1, len2 * len2);
    if dot >= 0.0 {
        let v = if len1 <= len2 {
            dot * dot / (len1 * len2.powi(3))
        } else {
            dot * dot / (len1.powi(3) * len2)
        };
        v.min(1.0)
    } else if len1 <= len2 {
        dot / sq2
    } else {
        dot / sq1
    }
}

/// Singularity-weighted Jaccard.
///
/// Co-rated items contribute to both numerator and denominator according to
/// whether the two users agree positively, agree negatively or disagree.
/// Items only one of the users rated contribute to the denominator only.
pub fn ij(ctx: &SimilarityContext, u1: UserId, u2: UserId) -> f64 {
    let (u1, u2) = ordered(u1, u2);
    let median = ctx.scale().median();
    let tables = ctx.singularities();
    let a = ctx.train().user_ratings(u1);
    let b = ctx.train().user_ratings(u2);
    let (mut shared, mut single) = (0.0, 0.0);
    for joined in merge(a, b) {
        match joined {
            Joined::Both(item, x, y) => {
                let s = tables.get(item);
                shared += match (x > median, y > median) {
                    (true, true) => s.positive,
                    (false, false) => s.negative,
                    _ => (s.positive * s.negative).sqrt(),
                };
            }
            Joined::Left(item, v) | Joined::Right(item, v) => {
                let s = tables.get(item);
                single += if v > median {
                    (s.positive * s.empty).sqrt()
                } else {
                    (s.negative * s.empty).sqrt()
                };
            }
        }
    }
    let denom = shared + single;
    if denom == 0.0 {
        0.0
    } else {
        shared / denom
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratings::{Rating, RatingMatrix, RatingScale, Universe};
    use crate::similarity::SimilarityOptions;

    fn ctx_with(ratings: &[(UserId, u32, f64)], universe: Universe) -> SimilarityContext {
        let train = RatingMatrix::from_ratings(
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
            universe,
        )
        .unwrap();
        SimilarityContext::new(train, 4.0).unwrap()
    }

    fn ctx(ratings: &[(UserId, u32, f64)]) -> SimilarityContext {
        ctx_with(ratings, Universe::default())
    }

    #[test]
    fn jaccard_examples() {
        let c = ctx(&[
            (1, 1, 5.0),
            (1, 2, 4.0),
            (1, 3, 3.0),
            (2, 3, 1.0),
            (2, 4, 2.0),
            (3, 1, 1.0),
            (3, 2, 1.0),
            (3, 3, 1.0),
            (4, 5, 2.0),
        ]);
        assert_eq!(jaccard(&c, 1, 2), 0.25);
        assert_eq!(jaccard(&c, 1, 3), 1.0);
        assert_eq!(jaccard(&c, 1, 4), 0.0);
        let empty = ctx_with(
            &[(1, 1, 3.0)],
            Universe {
                users: Some(3),
                items: Some(2),
            },
        );
        assert_eq!(jaccard(&empty, 2, 3), 0.0);
    }

    #[test]
    fn cosine_examples() {
        let c = ctx(&[
            (1, 1, 1.0),
            (1, 2, 2.0),
            (2, 1, 2.0),
            (2, 2, 4.0),
            (3, 2, 5.0),
            (3, 3, 1.0),
            (4, 4, 1.0),
        ]);
        assert!((cosine(&c, 1, 2) - 1.0).abs() < 1e-15);
        assert!((cosine(&c, 1, 1) - 1.0).abs() < 1e-15);
        // single co-rated item
        assert!((cosine(&c, 1, 3) - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&c, 1, 4), 0.0);
    }

    #[test]
    fn full_profile_norms_use_whole_rows() {
        let train = RatingMatrix::from_ratings(
            [(1, 1, 3.0), (1, 2, 4.0), (2, 1, 3.0)]
                .iter()
                .map(|&(user, item, value)| Rating {
                    user,
                    item,
                    value,
                    timestamp: 0,
                })
                .collect(),
            RatingScale::movielens(),
            Universe::default(),
        )
        .unwrap();
        let c = SimilarityContext::with_options(
            train,
            4.0,
            SimilarityOptions {
                norm_domain: NormDomain::FullProfile,
            },
        )
        .unwrap();
        // 9 / (5 * 3)
        assert!((cosine(&c, 1, 2) - 0.6).abs() < 1e-15);
        // 81 / (5^3 * 3)
        assert!((ta(&c, 1, 2) - 0.216).abs() < 1e-15);
    }

    #[test]
    fn pearson_examples() {
        // 1-6 scale so that (2, 4, 6) fits.
        let m = RatingMatrix::from_ratings(
            [
                (1, 1, 1.0),
                (1, 2, 2.0),
                (1, 3, 3.0),
                (2, 1, 2.0),
                (2, 2, 4.0),
                (2, 3, 6.0),
                (3, 1, 6.0),
                (3, 2, 4.0),
                (3, 3, 2.0),
                (4, 1, 3.0),
                (4, 2, 3.0),
                (4, 5, 3.0),
            ]
            .iter()
            .map(|&(user, item, value)| Rating {
                user,
                item,
                value,
                timestamp: 0,
            })
            .collect(),
            RatingScale::new(1.0, 6.0).unwrap(),
            Universe::default(),
        )
        .unwrap();
        let c = SimilarityContext::new(m, 4.0).unwrap();
        assert!((pearson(&c, 1, 2) - 1.0).abs() < 1e-15);
        assert!((pearson(&c, 1, 3) + 1.0).abs() < 1e-15);
        // constant user -> zero variance
        assert_eq!(pearson(&c, 1, 4), 0.0);
        assert_eq!(pearson(&c, 3, 4), 0.0);
    }

    #[test]
    fn pss_sub_formulas_at_the_median() {
        assert_eq!(proximity(3.0, 3.0), 0.5);
        assert_eq!(significance(3.0, 3.0, 3.0), 0.5);
        assert_eq!(singularity(3.0, 3.0, 3.0), 0.5);
        assert!(proximity(1.0, 5.0) > 0.0 && proximity(1.0, 5.0) < 0.5);
        assert!(significance(1.0, 5.0, 3.0) > 0.5 && significance(1.0, 5.0, 3.0) < 1.0);
    }

    #[test]
    fn pss_single_item_at_the_median() {
        let c = ctx(&[(1, 1, 3.0), (2, 1, 3.0)]);
        assert_eq!(pss(&c, 1, 2), 0.125);
        let apart = ctx(&[(1, 1, 3.0), (2, 2, 3.0)]);
        assert_eq!(pss(&apart, 1, 2), 0.0);
    }

    #[test]
    fn ta_examples() {
        let c = ctx(&[
            (1, 1, 3.0),
            (1, 2, 4.0),
            (2, 1, 3.0),
            (2, 2, 4.0),
            (3, 3, 1.0),
        ]);
        assert!((ta(&c, 1, 2) - 1.0).abs() < 1e-15);
        assert_eq!(ta(&c, 1, 3), 0.0);

        // (3, 4) vs (6, 8) on a scale wide enough to hold them
        let scale = RatingScale::new(0.0, 10.0).unwrap();
        let m = RatingMatrix::from_ratings(
            [(1, 1, 3.0), (1, 2, 4.0), (2, 1, 6.0), (2, 2, 8.0)]
                .iter()
                .map(|&(user, item, value)| Rating {
                    user,
                    item,
                    value,
                    timestamp: 0,
                })
                .collect(),
            scale,
            Universe::default(),
        )
        .unwrap();
        let wide = SimilarityContext::new(m, 5.0).unwrap();
        assert!((ta(&wide, 1, 2) - 0.5).abs() < 1e-15);
        assert_eq!(ta(&wide, 1, 2).to_bits(), ta(&wide, 2, 1).to_bits());
    }

    #[test]
    fn ta_negative_branch() {
        // Ratings on a signed scale reach the dot < 0 branch.
        let scale = RatingScale::new(-5.0, 5.0).unwrap();
        let m = RatingMatrix::from_ratings(
            [(1, 1, 1.0), (1, 2, 0.0), (2, 1, -2.0), (2, 2, 0.0)]
                .iter()
                .map(|&(user, item, value)| Rating {
                    user,
                    item,
                    value,
                    timestamp: 0,
                })
                .collect(),
            scale,
            Universe::default(),
        )
        .unwrap();
        let c = SimilarityContext::new(m, 1.0).unwrap();
        // dot = -2, |u1| = 1 <= |u2| = 2 -> -2 / 4
        assert_eq!(ta(&c, 1, 2), -0.5);
    }

    #[test]
    fn ij_identical_sets_and_disjoint_sets() {
        // Users 1 and 2 agree everywhere; user 3 keeps singularities < 1.
        let c = ctx_with(
            &[
                (1, 1, 5.0),
                (1, 2, 1.0),
                (2, 1, 4.0),
                (2, 2, 2.0),
                (3, 3, 4.0),
                (4, 4, 2.0),
            ],
            Universe {
                users: Some(5),
                items: Some(4),
            },
        );
        assert_eq!(ij(&c, 1, 2), 1.0);
        assert_eq!(ij(&c, 1, 3), 0.0);
        assert_eq!(ij(&c, 3, 5), 0.0);
    }

    #[test]
    fn ij_hand_enumerated() {
        // 4 users x 5 items, median 3.
        //        i1 i2 i3 i4 i5
        // u1      5  2  4  -  -
        // u2      4  4  -  1  -
        // u3      -  1  5  -  3
        // u4      2  -  -  5  -
        let c = ctx_with(
            &[
                (1, 1, 5.0),
                (1, 2, 2.0),
                (1, 3, 4.0),
                (2, 1, 4.0),
                (2, 2, 4.0),
                (2, 4, 1.0),
                (3, 2, 1.0),
                (3, 3, 5.0),
                (3, 5, 3.0),
                (4, 1, 2.0),
                (4, 4, 5.0),
            ],
            Universe {
                users: Some(4),
                items: Some(5),
            },
        );
        // singularities (pos, neg, empty):
        // i1: raters 5,4,2 -> 2 pos, 1 neg, 1 missing -> (0.5, 0.75, 0.75)
        // i2: raters 2,4,1 -> 1 pos, 2 neg            -> (0.75, 0.5, 0.75)
        // i3: raters 4,5   -> 2 pos                   -> (0.5, 1.0, 0.5)
        // i4: raters 1,5   -> 1 pos, 1 neg            -> (0.75, 0.75, 0.5)
        // u1 vs u2: PA {i1}, D {i2}, PO {i3}, NO {i4}
        let num = 0.5 + (0.75f64 * 0.5).sqrt();
        let den = num + (0.5f64 * 0.5).sqrt() + (0.75f64 * 0.5).sqrt();
        assert!((ij(&c, 1, 2) - num / den).abs() < 1e-15);
        assert!((ij(&c, 2, 1) - num / den).abs() < 1e-15);
    }
}
