//! The ratio × fold × measure evaluation grid.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::{KnnEngine, KnnOptions, SimilarityTable};
use crate::ratings::{split_folds, ItemId, Rating, RatingMatrix, Split, UserId};
use crate::similarity::{MeasureId, NormDomain, SimilarityContext, SimilarityOptions};

use super::metrics::precision_recall;
use super::report::{Cell, FoldMetrics, MetricReport, Provenance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub ratios: Vec<f64>,
    pub n_folds: usize,
    pub measures: Vec<MeasureId>,
    pub k: usize,
    pub relevance_threshold: f64,
    pub seed: u64,
    pub include_negative: bool,
    pub norm_domain: NormDomain,
    /// Run the top-N track (precision/recall) in addition to MAE.
    pub evaluate_recommendations: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            ratios: (1..=9).map(|i| i as f64 / 10.0).collect(),
            n_folds: 5,
            measures: MeasureId::ALL.to_vec(),
            k: 40,
            relevance_threshold: 4.0,
            seed: 1,
            include_negative: false,
            norm_domain: NormDomain::CoRated,
            evaluate_recommendations: true,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self, matrix: &RatingMatrix) -> Result<()> {
        if self.ratios.is_empty() {
            return Err(Error::Argument("at least one ratio is required".into()));
        }
        if let Some(r) = self.ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(Error::Argument(format!("ratio {r} is outside (0, 1)")));
        }
        if self.n_folds == 0 {
            return Err(Error::Argument("n_folds must be >= 1".into()));
        }
        if self.measures.is_empty() {
            return Err(Error::Argument("at least one measure is required".into()));
        }
        let distinct: BTreeSet<_> = self.measures.iter().collect();
        if distinct.len() != self.measures.len() {
            return Err(Error::Argument("measure list contains duplicates".into()));
        }
        if self.k == 0 {
            return Err(Error::Argument("k must be >= 1".into()));
        }
        if !matrix.scale().contains(self.relevance_threshold) {
            return Err(Error::Argument(format!(
                "relevance threshold {} outside the rating scale",
                self.relevance_threshold
            )));
        }
        Ok(())
    }
}

/// Runs the full grid and aggregates it into a report.
pub fn run_experiment(matrix: &RatingMatrix, config: &ExperimentConfig) -> Result<MetricReport> {
    let mut reports = run_k_sweep(matrix, config, &[config.k])?;
    Ok(reports.remove(0))
}

/// Runs the grid once per `k` in `ks`, sharing splits and similarity tables
/// across the sweep. Returns one report per `k`, in input order; each is
/// identical to what [`run_experiment`] gives for that `k`.
pub fn run_k_sweep(
    matrix: &RatingMatrix,
    config: &ExperimentConfig,
    ks: &[usize],
) -> Result<Vec<MetricReport>> {
    config.validate(matrix)?;
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::Argument("k values must be >= 1".into()));
    }

    let mut splits = Vec::with_capacity(config.ratios.len());
    for &ratio in &config.ratios {
        splits.push(split_folds(matrix, ratio, config.n_folds, config.seed)?);
    }
    let jobs: Vec<&Split> = splits.iter().flatten().collect();

    // results[job][k][measure]
    let results: Vec<Vec<Vec<FoldMetrics>>> = jobs
        .par_iter()
        .map(|split| evaluate_split(split, config, ks))
        .collect::<Result<_>>()?;

    let dataset_sha256 = matrix.content_hash();
    let reports = ks
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let provenance = Provenance {
                k,
                relevance_threshold: config.relevance_threshold,
                seed: config.seed,
                n_folds: config.n_folds,
                include_negative: config.include_negative,
                norm_domain: config.norm_domain,
                recommendations_evaluated: config.evaluate_recommendations,
                scale: matrix.scale(),
                dataset_sha256: dataset_sha256.clone(),
                num_users: matrix.num_users(),
                num_items: matrix.num_items(),
                num_ratings: matrix.len(),
                manifest: None,
            };
            let rows = config
                .measures
                .iter()
                .enumerate()
                .map(|(mi, &measure)| {
                    let cells = config
                        .ratios
                        .iter()
                        .enumerate()
                        .map(|(ri, &ratio)| {
                            let folds = (0..config.n_folds)
                                .map(|f| results[ri * config.n_folds + f][ki][mi].clone())
                                .collect();
                            Cell::from_folds(ratio, folds)
                        })
                        .collect();
                    (measure, cells)
                })
                .collect();
            MetricReport::assemble(provenance, config.ratios.clone(), rows)
        })
        .collect();
    Ok(reports)
}

/// Every base measure needed to evaluate `measures`.
fn base_measures(measures: &[MeasureId]) -> BTreeSet<MeasureId> {
    measures
        .iter()
        .flat_map(|&m| match m.factors() {
            Some((set, numeric)) => vec![set, numeric],
            None => vec![m],
        })
        .collect()
}

fn evaluate_split(
    split: &Split,
    config: &ExperimentConfig,
    ks: &[usize],
) -> Result<Vec<Vec<FoldMetrics>>> {
    let ctx = SimilarityContext::with_options(
        split.train.clone(),
        config.relevance_threshold,
        SimilarityOptions {
            norm_domain: config.norm_domain,
        },
    )?;
    let base: BTreeMap<MeasureId, SimilarityTable> = base_measures(&config.measures)
        .into_par_iter()
        .map(|m| (m, SimilarityTable::compute(&ctx, m)))
        .collect();

    let by_user = group_by_user(&split.test);

    let mut per_k = Vec::with_capacity(ks.len());
    for &k in ks {
        let options = KnnOptions {
            k,
            include_negative: config.include_negative,
        };
        let per_measure = config
            .measures
            .par_iter()
            .map(|&m| {
                let product;
                let table = match m.factors() {
                    Some((set, numeric)) => {
                        product = SimilarityTable::product(&base[&set], &base[&numeric]);
                        &product
                    }
                    None => &base[&m],
                };
                let engine = KnnEngine::new(&ctx, table, options);
                evaluate_fold(&engine, &by_user, split, config)
            })
            .collect::<Result<Vec<_>>>()?;
        per_k.push(per_measure);
    }
    Ok(per_k)
}

fn group_by_user(test: &[Rating]) -> Vec<(UserId, &[Rating])> {
    // `test` is sorted by (user, item)
    test.chunk_by(|a, b| a.user == b.user)
        .map(|chunk| (chunk[0].user, chunk))
        .collect()
}

struct UserOutcome {
    abs_errors: Vec<f64>,
    precision_recall: Option<(f64, f64)>,
}

fn evaluate_fold(
    engine: &KnnEngine<'_, &SimilarityTable>,
    by_user: &[(UserId, &[Rating])],
    split: &Split,
    config: &ExperimentConfig,
) -> Result<FoldMetrics> {
    let outcomes: Vec<UserOutcome> = by_user
        .par_iter()
        .map(|&(user, ratings)| {
            let neighbors = engine.neighbors(user)?;
            let abs_errors = ratings
                .iter()
                .map(|r| {
                    engine
                        .predict_with(&neighbors, r.item)
                        .map(|p| (p.value - r.value).abs())
                })
                .collect::<Result<Vec<_>>>()?;
            let precision_recall = if config.evaluate_recommendations {
                let relevant: BTreeSet<ItemId> = ratings
                    .iter()
                    .filter(|r| r.value >= config.relevance_threshold)
                    .map(|r| r.item)
                    .collect();
                if relevant.is_empty() {
                    None
                } else {
                    let list = engine.recommend_with(&neighbors)?;
                    let recommended: BTreeSet<ItemId> = list.item_ids().collect();
                    precision_recall(&recommended, &relevant)
                }
            } else {
                None
            };
            Ok(UserOutcome {
                abs_errors,
                precision_recall,
            })
        })
        .collect::<Result<_>>()?;

    // Sequential reductions in user order keep the sums reproducible.
    let mut error_sum = 0.0;
    let mut n_errors = 0usize;
    let (mut p_sum, mut r_sum, mut n_users) = (0.0, 0.0, 0usize);
    for o in &outcomes {
        for e in &o.abs_errors {
            error_sum += e;
            n_errors += 1;
        }
        if let Some((p, r)) = o.precision_recall {
            p_sum += p;
            r_sum += r;
            n_users += 1;
        }
    }
    let defined = |sum: f64, n: usize| (n > 0).then(|| sum / n as f64);
    Ok(FoldMetrics {
        fold: split.fold_index,
        mae: defined(error_sum, n_errors),
        precision: defined(p_sum, n_users),
        recall: defined(r_sum, n_users),
        test_ratings: split.test.len(),
        users_evaluated: n_users,
    })
}
