use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cfsim::eval::{
    compare, emit_report, run_experiment, ExperimentConfig, MetricReport, ReportFormat, RunManifest,
};
use cfsim::ratings::{
    load_ratings, sha256_hex, split_folds, write_ratings, MatrixStats, RatingMatrix, RatingScale,
    Universe,
};
use cfsim::similarity::{MeasureId, NormDomain};

/// Exit status when a run finished but some metric was undefined.
const EXIT_GAPS: u8 = 3;

#[derive(Parser)]
#[command(name = "cfsim", version, about = "User-based KNN similarity benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a rating file and print its dimensions.
    Ingest {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 4.0)]
        threshold: f64,
    },
    /// Write train/test files for each fold.
    Split {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 0.1)]
        ratio: f64,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the evaluation grid and write reports.
    Eval(EvalArgs),
    /// Radar triples and dominance summary for measures in a JSON report.
    Compare {
        report: PathBuf,
        #[arg(required = true, num_args = 1..)]
        measures: Vec<String>,
    },
    /// Re-render a JSON report in another format.
    Report {
        report: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Rating file (`user<TAB>item<TAB>rating<TAB>timestamp`). Defaults to
    /// `u.data` inside $CFSIM_DATA_DIR.
    dataset: Option<PathBuf>,
    /// Declared number of users; defaults to the largest user id.
    #[arg(long)]
    users: Option<usize>,
    /// Declared number of items; defaults to the largest item id.
    #[arg(long)]
    items: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    scale_min: f64,
    #[arg(long, default_value_t = 5.0)]
    scale_max: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormArg {
    CoRated,
    FullProfile,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated test ratios.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"
    )]
    ratios: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Comma-separated measure names (case-insensitive); all fourteen by default.
    #[arg(long, value_delimiter = ',')]
    measures: Vec<String>,
    #[arg(long, default_value_t = 40)]
    k: usize,
    #[arg(long, default_value_t = 4.0)]
    threshold: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Comma-separated output formats: csv, markdown, json, radar-data.
    #[arg(long, value_delimiter = ',', default_value = "csv,json")]
    format: Vec<String>,
    /// Output directory; without it the first format goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum number of worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Items the cosine and TA vector norms run over.
    #[arg(long, value_enum, default_value = "co-rated")]
    norm_domain: NormArg,
    /// Keep negatively similar users as neighbours.
    #[arg(long)]
    include_negative: bool,
    /// Skip the precision/recall track.
    #[arg(long)]
    no_recommend: bool,
    /// Record the wall-clock time in the manifest (breaks byte-identical reruns).
    #[arg(long)]
    stamp: bool,
}

fn dataset_path(arg: &Option<PathBuf>) -> Result<PathBuf> {
    match arg {
        Some(p) => Ok(p.clone()),
        None => match std::env::var_os("CFSIM_DATA_DIR") {
            Some(dir) => Ok(Path::new(&dir).join("u.data")),
            None => bail!("no dataset given and CFSIM_DATA_DIR is not set"),
        },
    }
}

fn load(data: &DataArgs) -> Result<(PathBuf, Vec<u8>, RatingMatrix)> {
    let path = dataset_path(&data.dataset)?;
    let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    let scale = RatingScale::new(data.scale_min, data.scale_max)?;
    let universe = Universe {
        users: data.users,
        items: data.items,
    };
    let matrix = load_ratings(BufReader::new(&bytes[..]), scale, universe)
        .with_context(|| format!("loading {}", path.display()))?;
    Ok((path, bytes, matrix))
}

fn parse_measures(names: &[String]) -> Result<Vec<MeasureId>> {
    if names.is_empty() {
        return Ok(MeasureId::ALL.to_vec());
    }
    names
        .iter()
        .map(|n| n.parse::<MeasureId>().map_err(Into::into))
        .collect()
}

fn cmd_ingest(data: &DataArgs, threshold: f64) -> Result<ExitCode> {
    let (_, _, matrix) = load(data)?;
    let stats = MatrixStats::compute(&matrix, threshold)?;
    println!(
        "{} users, {} items, {} ratings",
        matrix.num_users(),
        matrix.num_items(),
        matrix.len()
    );
    println!(
        "sparse-relevant ratio (threshold {threshold}): {:.6}",
        stats.sparse_relevant_ratio
    );
    println!("rated items: {}", stats.rated_item_count);
    Ok(ExitCode::SUCCESS)
}

fn cmd_split(data: &DataArgs, ratio: f64, folds: usize, seed: u64, out: &Path) -> Result<ExitCode> {
    let (_, _, matrix) = load(data)?;
    let splits = split_folds(&matrix, ratio, folds, seed)?;
    fs::create_dir_all(out)?;
    for s in &splits {
        let train = out.join(format!("fold{}.train", s.fold_index));
        let test = out.join(format!("fold{}.test", s.fold_index));
        write_ratings(
            io::BufWriter::new(fs::File::create(&train)?),
            s.train.ratings(),
        )?;
        write_ratings(io::BufWriter::new(fs::File::create(&test)?), &s.test)?;
        println!(
            "fold {}: {} train, {} test",
            s.fold_index,
            s.train.len(),
            s.test.len()
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(args: &EvalArgs) -> Result<ExitCode> {
    let formats = args
        .format
        .iter()
        .map(|f| f.parse::<ReportFormat>())
        .collect::<Result<Vec<_>, _>>()?;
    let measures = parse_measures(&args.measures)?;
    let (path, bytes, matrix) = load(&args.data)?;

    let config = ExperimentConfig {
        ratios: args.ratios.clone(),
        n_folds: args.folds,
        measures,
        k: args.k,
        relevance_threshold: args.threshold,
        seed: args.seed,
        include_negative: args.include_negative,
        norm_domain: match args.norm_domain {
            NormArg::CoRated => NormDomain::CoRated,
            NormArg::FullProfile => NormDomain::FullProfile,
        },
        evaluate_recommendations: !args.no_recommend,
    };

    let mut report = match args.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()?
            .install(|| run_experiment(&matrix, &config))?,
        None => run_experiment(&matrix, &config)?,
    };
    report.provenance.manifest = Some(RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        dataset_path: path.display().to_string(),
        dataset_file_sha256: sha256_hex(&bytes),
        created_unix: args.stamp.then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        }),
    });

    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for f in &formats {
                let file = dir.join(format!("report.{}", f.extension()));
                fs::write(&file, emit_report(&report, *f)?)
                    .with_context(|| format!("writing {}", file.display()))?;
                eprintln!("wrote {}", file.display());
            }
        }
        None => {
            let first = formats.first().copied().unwrap_or(ReportFormat::Csv);
            io::stdout().write_all(emit_report(&report, first)?.as_bytes())?;
        }
    }

    let gaps = report.gaps();
    if gaps.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for g in &gaps {
            eprintln!(
                "undefined {} for {} at r={} fold {}",
                g.metric.label(),
                g.measure,
                g.ratio,
                g.fold
            );
        }
        Ok(ExitCode::from(EXIT_GAPS))
    }
}

fn read_report(path: &Path) -> Result<MetricReport> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(MetricReport::from_json(&text)?)
}

fn cmd_compare(path: &Path, names: &[String]) -> Result<ExitCode> {
    let report = read_report(path)?;
    let measures = parse_measures(names)?;
    let cmp = compare(&report, &measures)?;
    print!("{}", cmp.render());
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(path: &Path, format: &str, out: Option<&Path>) -> Result<ExitCode> {
    let report = read_report(path)?;
    let text = emit_report(&report, format.parse()?)?;
    match out {
        Some(file) => fs::write(file, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Ingest { data, threshold } => cmd_ingest(data, *threshold),
        Command::Split {
            data,
            ratio,
            folds,
            seed,
            out,
        } => cmd_split(data, *ratio, *folds, *seed, out),
        Command::Eval(args) => cmd_eval(args),
        Command::Compare { report, measures } => cmd_compare(report, measures),
        Command::Report {
            report,
            format,
            out,
        } => cmd_report(report, format, out.as_deref()),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
