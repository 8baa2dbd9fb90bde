//! The aggregated result grid and its renderings.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ratings::RatingScale;
use crate::similarity::{MeasureId, NormDomain};

use super::metrics::{f1, imae};

pub const SCHEMA_VERSION: u32 = 1;

/// What produced a report: command-line run details.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub dataset_path: String,
    /// SHA-256 of the dataset file bytes.
    pub dataset_file_sha256: String,
    /// Seconds since the Unix epoch, only recorded when explicitly requested
    /// so that repeated runs stay byte-identical.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub k: usize,
    pub relevance_threshold: f64,
    pub seed: u64,
    pub n_folds: usize,
    pub include_negative: bool,
    pub norm_domain: NormDomain,
    pub recommendations_evaluated: bool,
    pub scale: RatingScale,
    /// SHA-256 of the canonical serialisation of the rating set.
    pub dataset_sha256: String,
    pub num_users: usize,
    pub num_items: usize,
    pub num_ratings: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

/// Metrics of a single fold. `None` marks an undefined metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub mae: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub test_ratings: usize,
    /// Users that contributed to precision and recall.
    pub users_evaluated: usize,
}

/// Fold-averaged metrics for one `(measure, ratio)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub ratio: f64,
    pub mae: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub folds: Vec<FoldMetrics>,
}

impl Cell {
    pub fn from_folds(ratio: f64, folds: Vec<FoldMetrics>) -> Self {
        Cell {
            ratio,
            mae: mean_defined(folds.iter().map(|f| f.mae)),
            precision: mean_defined(folds.iter().map(|f| f.precision)),
            recall: mean_defined(folds.iter().map(|f| f.recall)),
            folds,
        }
    }
}

/// Row averages over all ratios plus the derived F1 and IMAE.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub mae: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub imae: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureRow {
    pub measure: MeasureId,
    pub cells: Vec<Cell>,
    pub average: Averages,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mae,
    Precision,
    Recall,
    F1,
    Imae,
}

impl Metric {
    pub fn label(self) -> &'static str {
        match self {
            Metric::Mae => "MAE",
            Metric::Precision => "Precision",
            Metric::Recall => "Recall",
            Metric::F1 => "F1",
            Metric::Imae => "IMAE",
        }
    }

    pub fn higher_is_better(self) -> bool {
        self != Metric::Mae
    }

    /// Metrics reported per ratio column; F1 and IMAE only exist as averages.
    pub fn per_ratio(self) -> bool {
        matches!(self, Metric::Mae | Metric::Precision | Metric::Recall)
    }
}

/// Top-3 measures per metric column; the last entry of each per-ratio list
/// is the Average column.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Top3 {
    pub mae: Vec<Vec<MeasureId>>,
    pub precision: Vec<Vec<MeasureId>>,
    pub recall: Vec<Vec<MeasureId>>,
    pub f1: Vec<MeasureId>,
    pub imae: Vec<MeasureId>,
}

/// A place where a metric could not be computed.
#[derive(Clone, Debug, PartialEq)]
pub struct Gap {
    pub measure: MeasureId,
    pub ratio: f64,
    pub fold: usize,
    pub metric: Metric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub schema_version: u32,
    pub provenance: Provenance,
    pub ratios: Vec<f64>,
    pub rows: Vec<MeasureRow>,
    pub top3: Top3,
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values
        .flatten()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl MetricReport {
    /// Builds the report from per-measure cells, deriving averages, F1, IMAE
    /// and the top-3 marks.
    pub fn assemble(
        provenance: Provenance,
        ratios: Vec<f64>,
        cells: Vec<(MeasureId, Vec<Cell>)>,
    ) -> Self {
        let scale = provenance.scale;
        let rows = cells
            .into_iter()
            .map(|(measure, cells)| {
                let mae = mean_defined(cells.iter().map(|c| c.mae));
                let precision = mean_defined(cells.iter().map(|c| c.precision));
                let recall = mean_defined(cells.iter().map(|c| c.recall));
                let average = Averages {
                    mae,
                    precision,
                    recall,
                    f1: precision.zip(recall).map(|(p, r)| f1(p, r)),
                    imae: mae.map(|m| imae(m, scale)),
                };
                MeasureRow {
                    measure,
                    cells,
                    average,
                }
            })
            .collect();
        let mut report = MetricReport {
            schema_version: SCHEMA_VERSION,
            provenance,
            ratios,
            rows,
            top3: Top3::default(),
        };
        report.top3 = report.compute_top3();
        report
    }

    pub fn row(&self, measure: MeasureId) -> Option<&MeasureRow> {
        self.rows.iter().find(|r| r.measure == measure)
    }

    pub fn measures(&self) -> Vec<MeasureId> {
        self.rows.iter().map(|r| r.measure).collect()
    }

    /// Value of `metric` in ratio column `column`, or the average when
    /// `column` is `None`.
    pub fn value(&self, measure: MeasureId, metric: Metric, column: Option<usize>) -> Option<f64> {
        let row = self.row(measure)?;
        cell_value(row, metric, column)
    }

    fn ranked(&self, metric: Metric, column: Option<usize>) -> Vec<MeasureId> {
        let mut scored: Vec<(MeasureId, f64)> = self
            .rows
            .iter()
            .filter_map(|r| cell_value(r, metric, column).map(|v| (r.measure, v)))
            .collect();
        scored.sort_by(|a, b| {
            let by_value = if metric.higher_is_better() {
                b.1.total_cmp(&a.1)
            } else {
                a.1.total_cmp(&b.1)
            };
            match by_value {
                Ordering::Equal => a.0.cmp(&b.0),
                other => other,
            }
        });
        scored.into_iter().take(3).map(|(m, _)| m).collect()
    }

    fn compute_top3(&self) -> Top3 {
        let columns = |metric| {
            (0..self.ratios.len())
                .map(Some)
                .chain([None])
                .map(|c| self.ranked(metric, c))
                .collect()
        };
        Top3 {
            mae: columns(Metric::Mae),
            precision: columns(Metric::Precision),
            recall: columns(Metric::Recall),
            f1: self.ranked(Metric::F1, None),
            imae: self.ranked(Metric::Imae, None),
        }
    }

    pub fn is_top3(&self, measure: MeasureId, metric: Metric, column: Option<usize>) -> bool {
        let list = match (metric, column) {
            (Metric::F1, _) => &self.top3.f1,
            (Metric::Imae, _) => &self.top3.imae,
            (m, c) => {
                let per_column = match m {
                    Metric::Mae => &self.top3.mae,
                    Metric::Precision => &self.top3.precision,
                    _ => &self.top3.recall,
                };
                match per_column.get(c.unwrap_or(self.ratios.len())) {
                    Some(list) => list,
                    None => return false,
                }
            }
        };
        list.contains(&measure)
    }

    /// Every fold-level metric that is undefined.
    pub fn gaps(&self) -> Vec<Gap> {
        let mut gaps = Vec::new();
        for row in &self.rows {
            for cell in &row.cells {
                for fold in &cell.folds {
                    let mut push = |metric| {
                        gaps.push(Gap {
                            measure: row.measure,
                            ratio: cell.ratio,
                            fold: fold.fold,
                            metric,
                        })
                    };
                    if fold.mae.is_none() {
                        push(Metric::Mae);
                    }
                    if self.provenance.recommendations_evaluated {
                        if fold.precision.is_none() {
                            push(Metric::Precision);
                        }
                        if fold.recall.is_none() {
                            push(Metric::Recall);
                        }
                    }
                }
            }
        }
        gaps
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: MetricReport = serde_json::from_str(text)?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::Argument(format!(
                "unsupported report schema version {} (expected {SCHEMA_VERSION})",
                report.schema_version
            )));
        }
        Ok(report)
    }
}

fn cell_value(row: &MeasureRow, metric: Metric, column: Option<usize>) -> Option<f64> {
    match column {
        None => match metric {
            Metric::Mae => row.average.mae,
            Metric::Precision => row.average.precision,
            Metric::Recall => row.average.recall,
            Metric::F1 => row.average.f1,
            Metric::Imae => row.average.imae,
        },
        Some(c) => {
            let cell = row.cells.get(c)?;
            match metric {
                Metric::Mae => cell.mae,
                Metric::Precision => cell.precision,
                Metric::Recall => cell.recall,
                Metric::F1 | Metric::Imae => None,
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
    RadarData,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            "radar-data" | "radar" => Ok(ReportFormat::RadarData),
            other => Err(Error::Argument(format!(
                "unknown report format '{other}' (expected csv, markdown, json or radar-data)"
            ))),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
            ReportFormat::Json => "json",
            ReportFormat::RadarData => "radar.csv",
        }
    }
}

fn fmt4(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.4}"),
        None => "NA".to_string(),
    }
}

fn ratio_label(r: f64) -> String {
    format!("r={r}")
}

fn provenance_lines(report: &MetricReport) -> Vec<String> {
    let p = &report.provenance;
    let mut lines = vec![
        format!("schema_version={}", report.schema_version),
        format!(
            "k={} relevance_threshold={} seed={} folds={} include_negative={} norm_domain={}",
            p.k,
            p.relevance_threshold,
            p.seed,
            p.n_folds,
            p.include_negative,
            match p.norm_domain {
                NormDomain::CoRated => "co-rated",
                NormDomain::FullProfile => "full-profile",
            }
        ),
        format!(
            "dataset_sha256={} users={} items={} ratings={} scale=[{}, {}]",
            p.dataset_sha256,
            p.num_users,
            p.num_items,
            p.num_ratings,
            p.scale.min(),
            p.scale.max()
        ),
    ];
    if let Some(m) = &p.manifest {
        lines.push(format!(
            "tool_version={} dataset_path={} dataset_file_sha256={}",
            m.tool_version, m.dataset_path, m.dataset_file_sha256
        ));
        if let Some(t) = m.created_unix {
            lines.push(format!("created_unix={t}"));
        }
    }
    lines
}

/// Renders a report. CSV and markdown round values to four decimals; JSON
/// keeps full precision.
pub fn emit_report(report: &MetricReport, format: ReportFormat) -> Result<String> {
    Ok(match format {
        ReportFormat::Json => {
            let mut s = report.to_json()?;
            s.push('\n');
            s
        }
        ReportFormat::Csv => emit_csv(report),
        ReportFormat::Markdown => emit_markdown(report),
        ReportFormat::RadarData => emit_radar(report),
    })
}

fn emit_csv(report: &MetricReport) -> String {
    let mut out = String::new();
    for line in provenance_lines(report) {
        let _ = writeln!(out, "# {line}");
    }
    let mut header = vec!["metric".to_string(), "measure".to_string()];
    header.extend(report.ratios.iter().map(|&r| ratio_label(r)));
    header.push("Average".into());
    header.push("top3".into());
    let _ = writeln!(out, "{}", header.join(","));

    for metric in [
        Metric::Mae,
        Metric::Precision,
        Metric::Recall,
        Metric::F1,
        Metric::Imae,
    ] {
        for row in &report.rows {
            let mut fields = vec![metric.label().to_string(), row.measure.name().to_string()];
            let mut flagged = Vec::new();
            for (c, &r) in report.ratios.iter().enumerate() {
                if metric.per_ratio() {
                    fields.push(fmt4(cell_value(row, metric, Some(c))));
                    if report.is_top3(row.measure, metric, Some(c)) {
                        flagged.push(ratio_label(r));
                    }
                } else {
                    fields.push(String::new());
                }
            }
            fields.push(fmt4(cell_value(row, metric, None)));
            if report.is_top3(row.measure, metric, None) {
                flagged.push("Average".into());
            }
            fields.push(flagged.join(";"));
            let _ = writeln!(out, "{}", fields.join(","));
        }
    }
    out
}

fn emit_markdown(report: &MetricReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "<!--");
    for line in provenance_lines(report) {
        let _ = writeln!(out, "{line}");
    }
    let _ = writeln!(out, "-->\n");
    let mark = |text: String, top: bool| if top { format!("**{text}**") } else { text };

    for metric in [Metric::Mae, Metric::Precision, Metric::Recall] {
        let _ = writeln!(out, "### {}\n", metric.label());
        let mut header = vec!["Measure".to_string()];
        header.extend(report.ratios.iter().map(|&r| ratio_label(r)));
        header.push("Average".into());
        let _ = writeln!(out, "| {} |", header.join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
        for row in &report.rows {
            let mut fields = vec![row.measure.name().to_string()];
            for c in 0..report.ratios.len() {
                fields.push(mark(
                    fmt4(cell_value(row, metric, Some(c))),
                    report.is_top3(row.measure, metric, Some(c)),
                ));
            }
            fields.push(mark(
                fmt4(cell_value(row, metric, None)),
                report.is_top3(row.measure, metric, None),
            ));
            let _ = writeln!(out, "| {} |", fields.join(" | "));
        }
        let _ = writeln!(out);
    }

    let _ = writeln!(out, "### MAE and F1\n");
    let _ = writeln!(out, "| Measure | MAE | F1 |");
    let _ = writeln!(out, "|---|---|---|");
    for row in &report.rows {
        let _ = writeln!(
            out,
            "| {} | {} | {} |",
            row.measure,
            mark(
                fmt4(row.average.mae),
                report.is_top3(row.measure, Metric::Mae, None)
            ),
            mark(
                row.average
                    .f1
                    .map_or_else(|| "NA".to_string(), |v| format!("{v:.6}")),
                report.is_top3(row.measure, Metric::F1, None)
            ),
        );
    }
    out
}

/// One measure's point on the IMAE / precision / recall radar chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadarPoint {
    pub measure: MeasureId,
    pub imae: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

pub fn radar_points(report: &MetricReport) -> Vec<RadarPoint> {
    report
        .rows
        .iter()
        .map(|row| RadarPoint {
            measure: row.measure,
            imae: row.average.imae,
            precision: row.average.precision,
            recall: row.average.recall,
        })
        .collect()
}

pub fn format_radar(points: &[RadarPoint]) -> String {
    let mut out = String::from("measure,imae,precision,recall\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.measure,
            fmt4(p.imae),
            fmt4(p.precision),
            fmt4(p.recall)
        );
    }
    out
}

fn emit_radar(report: &MetricReport) -> String {
    format_radar(&radar_points(report))
}

/// Radar triples of the chosen measures plus a pairwise dominance summary.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub points: Vec<RadarPoint>,
    pub pairs: Vec<PairSummary>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairSummary {
    pub first: MeasureId,
    pub second: MeasureId,
    /// Per axis (IMAE, precision, recall): `Greater` when `first` is better.
    pub axes: [Option<Ordering>; 3],
    /// The measure that is at least as good on every axis and strictly
    /// better on one, if any.
    pub dominant: Option<MeasureId>,
}

pub fn compare(report: &MetricReport, measures: &[MeasureId]) -> Result<Comparison> {
    let all = radar_points(report);
    let mut points = Vec::with_capacity(measures.len());
    for m in measures {
        match all.iter().find(|p| p.measure == *m) {
            Some(p) => points.push(*p),
            None => {
                return Err(Error::Argument(format!(
                    "measure {m} is not in the report (available: {})",
                    report
                        .measures()
                        .iter()
                        .map(|m| m.name())
                        .collect::<Vec<_>>()
                        .join(", ")
                )))
            }
        }
    }
    let mut pairs = Vec::new();
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            let axis = |x: Option<f64>, y: Option<f64>| x.zip(y).map(|(x, y)| x.total_cmp(&y));
            let axes = [
                axis(a.imae, b.imae),
                axis(a.precision, b.precision),
                axis(a.recall, b.recall),
            ];
            let dominant = if axes.iter().any(Option::is_none) {
                None
            } else {
                let axes: Vec<Ordering> = axes.iter().flatten().copied().collect();
                if axes.iter().all(|o| o.is_ge()) && axes.iter().any(|o| o.is_gt()) {
                    Some(a.measure)
                } else if axes.iter().all(|o| o.is_le()) && axes.iter().any(|o| o.is_lt()) {
                    Some(b.measure)
                } else {
                    None
                }
            };
            pairs.push(PairSummary {
                first: a.measure,
                second: b.measure,
                axes,
                dominant,
            });
        }
    }
    Ok(Comparison { points, pairs })
}

impl Comparison {
    pub fn render(&self) -> String {
        let mut out = format_radar(&self.points);
        for pair in &self.pairs {
            let word = |o: Option<Ordering>| match o {
                Some(Ordering::Greater) => pair.first.name(),
                Some(Ordering::Less) => pair.second.name(),
                Some(Ordering::Equal) => "tie",
                None => "n/a",
            };
            let _ = writeln!(
                out,
                "# {} vs {}: imae={} precision={} recall={} dominant={}",
                pair.first,
                pair.second,
                word(pair.axes[0]),
                word(pair.axes[1]),
                word(pair.axes[2]),
                pair.dominant.map_or("none", |m| m.name())
            );
        }
        out
    }
}
