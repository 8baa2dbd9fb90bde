//! Naive dense re-implementations used as test oracles.
//!
//! Everything here works on a plain `Vec<Vec<Option<f64>>>` and recomputes
//! means, singularities and co-rated sets from scratch on every call.
#![allow(dead_code)]

use cfsim::ratings::{Rating, RatingMatrix, RatingScale, Universe};
use cfsim::similarity::{MeasureId, NormDomain};
use proptest::prelude::*;

#[derive(Clone, Debug)]
pub struct Dense {
    pub min: f64,
    pub max: f64,
    /// `cells[u][j]`, zero-based.
    pub cells: Vec<Vec<Option<f64>>>,
}

impl Dense {
    pub fn users(&self) -> usize {
        self.cells.len()
    }

    pub fn items(&self) -> usize {
        self.cells.first().map_or(0, |r| r.len())
    }

    pub fn median(&self) -> f64 {
        (self.min + self.max) / 2.0
    }

    pub fn get(&self, u: usize, j: usize) -> Option<f64> {
        self.cells[u][j]
    }

    pub fn to_matrix(&self) -> RatingMatrix {
        let mut ratings = Vec::new();
        for (u, row) in self.cells.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if let Some(v) = v {
                    ratings.push(Rating {
                        user: u as u32 + 1,
                        item: j as u32 + 1,
                        value: *v,
                        timestamp: 0,
                    });
                }
            }
        }
        RatingMatrix::from_ratings(
            ratings,
            RatingScale::new(self.min, self.max).unwrap(),
            Universe {
                users: Some(self.users()),
                items: Some(self.items()),
            },
        )
        .unwrap()
    }

    pub fn from_matrix(m: &RatingMatrix) -> Dense {
        let mut cells = vec![vec![None; m.num_items()]; m.num_users()];
        for r in m.ratings() {
            cells[r.user as usize - 1][r.item as usize - 1] = Some(r.value);
        }
        Dense {
            min: m.scale().min(),
            max: m.scale().max(),
            cells,
        }
    }

    pub fn count(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_some()).count()
    }

    pub fn user_mean(&self, u: usize) -> Option<f64> {
        let vals: Vec<f64> = self.cells[u].iter().flatten().copied().collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }

    pub fn item_mean(&self, j: usize) -> Option<f64> {
        let vals: Vec<f64> = (0..self.users()).filter_map(|u| self.cells[u][j]).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }

    pub fn global_mean(&self) -> Option<f64> {
        let vals: Vec<f64> = self.cells.iter().flatten().flatten().copied().collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }

    fn both(&self, a: usize, b: usize) -> Vec<(usize, f64, f64)> {
        (0..self.items())
            .filter_map(|j| match (self.cells[a][j], self.cells[b][j]) {
                (Some(x), Some(y)) => Some((j, x, y)),
                _ => None,
            })
            .collect()
    }

    fn norm(&self, u: usize) -> f64 {
        self.cells[u]
            .iter()
            .flatten()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn jaccard(d: &Dense, a: usize, b: usize) -> f64 {
    let mut inter = 0;
    let mut union = 0;
    for j in 0..d.items() {
        let (x, y) = (d.get(a, j).is_some(), d.get(b, j).is_some());
        if x && y {
            inter += 1;
        }
        if x || y {
            union += 1;
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn cosine(d: &Dense, a: usize, b: usize, norm: NormDomain) -> f64 {
    let both = d.both(a, b);
    if both.is_empty() {
        return 0.0;
    }
    let dot: f64 = both.iter().map(|(_, x, y)| x * y).sum();
    let (na, nb) = match norm {
        NormDomain::CoRated => (
            both.iter().map(|(_, x, _)| x * x).sum::<f64>().sqrt(),
            both.iter().map(|(_, _, y)| y * y).sum::<f64>().sqrt(),
        ),
        NormDomain::FullProfile => (d.norm(a), d.norm(b)),
    };
    if na * nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub fn pearson(d: &Dense, a: usize, b: usize) -> f64 {
    let (Some(ma), Some(mb)) = (d.user_mean(a), d.user_mean(b)) else {
        return 0.0;
    };
    let both = d.both(a, b);
    let num: f64 = both.iter().map(|(_, x, y)| (x - ma) * (y - mb)).sum();
    let da: f64 = both.iter().map(|(_, x, _)| (x - ma).powi(2)).sum();
    let db: f64 = both.iter().map(|(_, _, y)| (y - mb).powi(2)).sum();
    if da == 0.0 || db == 0.0 {
        0.0
    } else {
        num / (da.sqrt() * db.sqrt())
    }
}

pub fn pss(d: &Dense, a: usize, b: usize) -> f64 {
    let rm = d.median();
    d.both(a, b)
        .into_iter()
        .map(|(j, x, y)| {
            let mu = d.item_mean(j).unwrap_or(rm);
            let prox = 1.0 - sigmoid((x - y).abs());
            let sig = sigmoid((x - rm).abs() * (y - rm).abs());
            let sing = 1.0 - sigmoid(((x + y) / 2.0 - mu).abs());
            prox * sig * sing
        })
        .sum()
}

pub fn ta(d: &Dense, a: usize, b: usize, norm: NormDomain) -> f64 {
    let both = d.both(a, b);
    let dot: f64 = both.iter().map(|(_, x, y)| x * y).sum();
    let ca = both.iter().map(|(_, x, _)| x * x).sum::<f64>().sqrt();
    let cb = both.iter().map(|(_, _, y)| y * y).sum::<f64>().sqrt();
    if ca == 0.0 || cb == 0.0 {
        return 0.0;
    }
    let (la, lb) = match norm {
        NormDomain::CoRated => (ca, cb),
        NormDomain::FullProfile => (d.norm(a), d.norm(b)),
    };
    let (short, long) = if la <= lb { (la, lb) } else { (lb, la) };
    if dot >= 0.0 {
        dot * dot / (short * long * long * long)
    } else {
        dot / (long * long)
    }
}

/// `(S_P, S_N, S_E)` of item `j` by direct counting.
pub fn singularities(d: &Dense, j: usize) -> (f64, f64, f64) {
    let n = d.users() as f64;
    let rm = d.median();
    let mut pos = 0.0;
    let mut neg = 0.0;
    let mut none = 0.0;
    for u in 0..d.users() {
        match d.get(u, j) {
            Some(v) if v > rm => pos += 1.0,
            Some(_) => neg += 1.0,
            None => none += 1.0,
        }
    }
    (1.0 - pos / n, 1.0 - neg / n, 1.0 - none / n)
}

pub fn ij(d: &Dense, a: usize, b: usize) -> f64 {
    let rm = d.median();
    let (mut pa, mut na, mut dis, mut po, mut no) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for j in 0..d.items() {
        let (sp, sn, se) = singularities(d, j);
        match (d.get(a, j), d.get(b, j)) {
            (Some(x), Some(y)) if x > rm && y > rm => pa += sp,
            (Some(x), Some(y)) if x <= rm && y <= rm => na += sn,
            (Some(_), Some(_)) => dis += (sp * sn).sqrt(),
            (Some(v), None) | (None, Some(v)) => {
                if v > rm {
                    po += (sp * se).sqrt();
                } else {
                    no += (sn * se).sqrt();
                }
            }
            (None, None) => {}
        }
    }
    let num = pa + na + dis;
    let den = num + po + no;
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Naive value of any of the fourteen measures for zero-based users.
pub fn measure(d: &Dense, m: MeasureId, a: usize, b: usize, norm: NormDomain) -> f64 {
    use MeasureId::*;
    match m {
        Jaccard => jaccard(d, a, b),
        Ij => ij(d, a, b),
        Cosine => cosine(d, a, b, norm),
        Pearson => pearson(d, a, b),
        Pss => pss(d, a, b),
        Ta => ta(d, a, b, norm),
        CosineJ => jaccard(d, a, b) * cosine(d, a, b, norm),
        PearsonJ => jaccard(d, a, b) * pearson(d, a, b),
        PssJ => jaccard(d, a, b) * pss(d, a, b),
        TaJ => jaccard(d, a, b) * ta(d, a, b, norm),
        CosineIj => ij(d, a, b) * cosine(d, a, b, norm),
        PearsonIj => ij(d, a, b) * pearson(d, a, b),
        PssIj => ij(d, a, b) * pss(d, a, b),
        TaIj => ij(d, a, b) * ta(d, a, b, norm),
    }
}

/// Brute-force KNN: score every candidate, sort everything, cut.
pub struct KnnOracle<'a> {
    pub d: &'a Dense,
    pub k: usize,
    pub relevance_threshold: f64,
}

pub struct OraclePrediction {
    pub value: f64,
    pub support: usize,
}

impl KnnOracle<'_> {
    /// One-based neighbour ids and similarities. `sim` takes one-based ids.
    pub fn neighbors(&self, target: usize, sim: &dyn Fn(u32, u32) -> f64) -> Vec<(u32, f64)> {
        let mut all: Vec<(u32, f64)> = (1..=self.d.users() as u32)
            .filter(|&v| v as usize != target + 1)
            .map(|v| (v, sim(target as u32 + 1, v)))
            .filter(|&(_, s)| s > 0.0)
            .collect();
        all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        all.truncate(self.k);
        all
    }

    fn fallback(&self, target: usize) -> f64 {
        self.d
            .user_mean(target)
            .or(self.d.global_mean())
            .unwrap_or(self.d.median())
    }

    pub fn predict(&self, target: usize, j: usize, nbrs: &[(u32, f64)]) -> OraclePrediction {
        let clamp = |v: f64| v.max(self.d.min).min(self.d.max);
        let Some(base) = self.d.user_mean(target) else {
            return OraclePrediction {
                value: clamp(self.fallback(target)),
                support: 0,
            };
        };
        let mut num = 0.0;
        let mut den = 0.0;
        let mut support = 0;
        for &(v, s) in nbrs {
            let v = v as usize - 1;
            if let Some(r) = self.d.get(v, j) {
                num += s * (r - self.d.user_mean(v).unwrap());
                den += s.abs();
                support += 1;
            }
        }
        let value = if support == 0 { base } else { base + num / den };
        OraclePrediction {
            value: clamp(value),
            support,
        }
    }

    pub fn recommendation_count(&self, target: usize) -> usize {
        let relevant = self
            .d
            .cells
            .iter()
            .flatten()
            .flatten()
            .filter(|&&v| v >= self.relevance_threshold)
            .count();
        let t = (0..self.d.items())
            .filter(|&j| self.d.item_mean(j).is_some())
            .count();
        let rated = self.d.cells[target].iter().flatten().count();
        let grid = self.d.users() * self.d.items();
        if grid == 0 {
            return 1;
        }
        let num = relevant * t.saturating_sub(rated);
        num.div_ceil(grid).max(1)
    }

    /// Predicts every unrated item, sorts, keeps the best, pads with items
    /// nobody near the target rated. Items are one-based.
    pub fn recommend(&self, target: usize, nbrs: &[(u32, f64)]) -> Vec<(u32, f64)> {
        let count = self.recommendation_count(target);
        let unrated: Vec<usize> = (0..self.d.items())
            .filter(|&j| self.d.get(target, j).is_none())
            .collect();
        let mut scored: Vec<(u32, f64)> = Vec::new();
        let mut unscored: Vec<(u32, f64)> = Vec::new();
        for &j in &unrated {
            let p = self.predict(target, j, nbrs);
            if p.support > 0 {
                scored.push((j as u32 + 1, p.value));
            } else if self.d.item_mean(j).is_some() {
                unscored.push((j as u32 + 1, p.value));
            }
        }
        scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        scored.extend(unscored);
        scored.truncate(count);
        scored
    }
}

/// Random sparse matrices: up to 8 × 8, density in [0.2, 0.9], integer
/// ratings on 1..=5.
pub fn sparse_matrix() -> impl Strategy<Value = Dense> {
    (1usize..=8, 1usize..=8, 0.2f64..=0.9).prop_flat_map(|(u, v, density)| {
        proptest::collection::vec((0.0f64..1.0, 1u8..=5), u * v).prop_map(move |cells| Dense {
            min: 1.0,
            max: 5.0,
            cells: cells
                .chunks(v)
                .map(|row| {
                    row.iter()
                        .map(|&(p, r)| (p < density).then_some(r as f64))
                        .collect()
                })
                .collect(),
        })
    })
}
