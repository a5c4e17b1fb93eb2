use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use drfc::data::{self, GeneratorSpec, ManifoldKind};
use drfc::experiment::{self, DataSource, ExperimentConfig, GraphSection, Method, MetricsSection, SolverSection};
use drfc::metrics::{self, MetricsReport};
use drfc::{Dataset64, GeodesicMethod, LambdaSchedule};

#[derive(Parser)]
#[command(name = "drfc", version, about = "Formation-control dimensionality reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum Kind {
    SwissRoll,
    Helix,
    TwinPeaks,
    BrokenSwissRoll,
}

impl From<Kind> for ManifoldKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::SwissRoll => ManifoldKind::SwissRoll,
            Kind::Helix => ManifoldKind::Helix,
            Kind::TwinPeaks => ManifoldKind::TwinPeaks,
            Kind::BrokenSwissRoll => ManifoldKind::BrokenSwissRoll,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Kdrfc,
    Sdrfc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Geodesic {
    Euclidean,
    Graph,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic manifold and write it as CSV.
    Generate {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Write normalized coordinates.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed a CSV dataset with kDRFC or sDRFC.
    Reduce {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        label_column: Option<String>,
        #[arg(long, value_enum, default_value = "kdrfc")]
        variant: VariantArg,
        #[arg(long = "dim", default_value_t = 2)]
        d_target: usize,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        remotes: Option<usize>,
        #[arg(long, value_enum, default_value = "graph")]
        geodesic: Geodesic,
        #[arg(long, default_value_t = 0.2)]
        dt: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_normalize: bool,
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a high-dimensional CSV with its embedding and write metrics.json.
    Evaluate {
        #[arg(long)]
        high: PathBuf,
        #[arg(long)]
        low: PathBuf,
        #[arg(long, default_value_t = metrics::DEFAULT_K)]
        k: usize,
        /// Label column of the high-dimensional file (default: `_label` or `label` if present).
        #[arg(long)]
        label_column: Option<String>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a full pipeline from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace: bool,
    },
    /// PCA embedding of a CSV dataset, with metrics.
    Baseline {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        label_column: Option<String>,
        #[arg(long = "dim", default_value_t = 2)]
        d_target: usize,
        #[arg(long)]
        no_normalize: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Label column found in the header: `_label` first, then `label`.
fn detect_label_column(path: &Path) -> Result<Option<String>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first)?;
    let cols: Vec<&str> = first.trim_end().split(',').map(str::trim).collect();
    Ok(["_label", "label"]
        .into_iter()
        .find(|c| cols.contains(c))
        .map(str::to_owned))
}

fn print_report(report: &MetricsReport) {
    let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    eprintln!(
        "1-NN error {}  T({}) {}  C({}) {}  iterations {}  {} ms",
        show(report.one_nn_error),
        report.k_metric,
        show(report.trustworthiness),
        report.k_metric,
        show(report.continuity),
        report.iterations,
        report.runtime_ms
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            kind,
            n,
            seed,
            noise,
            normalize,
            out,
        } => {
            let spec = GeneratorSpec::new(kind.into(), n, noise, seed);
            let mut ds: Dataset64 = data::generate(&spec)?;
            if normalize {
                ds = data::normalize(&ds)?;
            }
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            data::write_dataset_csv(&ds, BufWriter::new(file))?;
        }
        Command::Reduce {
            input,
            label_column,
            variant,
            d_target,
            k,
            remotes,
            geodesic,
            dt,
            lambda,
            max_iters,
            restarts,
            seed,
            no_normalize,
            trace,
            out,
        } => {
            let label_column = match label_column {
                Some(c) => Some(c),
                None => detect_label_column(&input)?,
            };
            let cfg = ExperimentConfig {
                data: DataSource::Csv {
                    path: input,
                    label_column,
                },
                normalize: !no_normalize,
                method: match variant {
                    VariantArg::Kdrfc => Method::Kdrfc,
                    VariantArg::Sdrfc => Method::Sdrfc,
                },
                solver: SolverSection {
                    d_target,
                    dt,
                    delta: 1e-7,
                    eta: 1e-3,
                    lambda: LambdaSchedule::Constant(lambda),
                    max_iters,
                    init_noise_sigma: 0.01,
                },
                graph: GraphSection {
                    k,
                    remote_count: remotes,
                    geodesic: Some(match geodesic {
                        Geodesic::Euclidean => GeodesicMethod::Euclidean,
                        Geodesic::Graph => GeodesicMethod::GraphShortestPath,
                    }),
                },
                metrics: MetricsSection::default(),
                restarts,
                seed,
                trace,
                output_dir: out,
            };
            print_report(&experiment::run_experiment(&cfg)?.report);
        }
        Command::Evaluate {
            high,
            low,
            k,
            label_column,
            out,
        } => {
            let label_column = match label_column {
                Some(c) => Some(c),
                None => detect_label_column(&high)?,
            };
            let x: Dataset64 = data::load_csv(&high, label_column.as_deref())?;
            let y: Dataset64 = data::load_csv(&low, detect_label_column(&low)?.as_deref())?;
            let (t, c) = metrics::trustworthiness_continuity(x.points.view(), y.points.view(), k)?;
            let labels = x.labels.as_deref().or(y.labels.as_deref());
            let one_nn = match labels {
                Some(l) => Some(metrics::one_nn_error(y.points.view(), Some(l))?),
                None => None,
            };
            let report = MetricsReport {
                one_nn_error: one_nn,
                trustworthiness: Some(t),
                continuity: Some(c),
                k_metric: k,
                final_potential: None,
                iterations: 0,
                runtime_ms: 0,
            };
            match out {
                Some(path) => experiment::write_json(&path, &report)?,
                None => println!("{}", serde_json::to_string_pretty(&report)?),
            }
        }
        Command::Experiment {
            config,
            seed,
            out,
            trace,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            cfg.trace |= trace;
            let outcome = experiment::run_experiment(&cfg)?;
            print_report(&outcome.report);
        }
        Command::Baseline {
            input,
            label_column,
            d_target,
            no_normalize,
            out,
        } => {
            let label_column = match label_column {
                Some(c) => Some(c),
                None => detect_label_column(&input)?,
            };
            let cfg = ExperimentConfig {
                data: DataSource::Csv {
                    path: input,
                    label_column,
                },
                normalize: !no_normalize,
                method: Method::Pca,
                solver: SolverSection {
                    d_target,
                    dt: 0.2,
                    delta: 1e-7,
                    eta: 1e-3,
                    lambda: LambdaSchedule::Constant(1.0),
                    max_iters: 1,
                    init_noise_sigma: 0.0,
                },
                graph: GraphSection::default(),
                metrics: MetricsSection::default(),
                restarts: 1,
                seed: 0,
                trace: false,
                output_dir: out,
            };
            print_report(&experiment::run_experiment(&cfg)?.report);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
