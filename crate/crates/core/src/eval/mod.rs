//! Offline evaluation: metrics, the experiment grid and report rendering.

mod experiment;
mod metrics;
mod report;

pub use experiment::{run_experiment, run_k_sweep, ExperimentConfig};
pub use metrics::{f1, imae, mae, precision_recall};
pub use report::{
    compare, emit_report, format_radar, radar_points, Averages, Cell, Comparison, FoldMetrics, Gap,
    MeasureRow, Metric, MetricReport, PairSummary, Provenance, RadarPoint, ReportFormat,
    RunManifest, Top3, SCHEMA_VERSION,
};
