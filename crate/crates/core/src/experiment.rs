//! Declarative experiment pipeline: data → neighbor system → restarts →
//! metrics, with every output written to one directory.
//!
//! Configs are JSON. Missing fields take the defaults of the method; the
//! fully resolved config is echoed to `config_echo.json`, and re-running that
//! echo reproduces the run.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::pca_fit_transform;
use crate::data::{self, GeneratorSpec, ManifoldKind};
use crate::dynamics::{self, Embedding, LambdaSchedule, SolverConfig, TraceRecord};
use crate::graph::{self, GeodesicMethod, Variant};
use crate::metrics::{self, MetricsReport};
use crate::{Dataset, Error, Result};

pub const EMBEDDING_FILE: &str = "embedding.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const CONFIG_ECHO_FILE: &str = "config_echo.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Kdrfc,
    Sdrfc,
    Pca,
}

impl Method {
    pub fn variant(self) -> Option<Variant> {
        match self {
            Method::Kdrfc => Some(Variant::KDrfc),
            Method::Sdrfc => Some(Variant::SDrfc),
            Method::Pca => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Generate {
        kind: ManifoldKind,
        n: usize,
        #[serde(default)]
        noise_sigma: f64,
        /// Defaults to the experiment's root seed.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Csv {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label_column: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub d_target: usize,
    #[serde(default = "defaults::dt")]
    pub dt: f64,
    #[serde(default = "defaults::delta")]
    pub delta: f64,
    #[serde(default = "defaults::eta")]
    pub eta: f64,
    #[serde(default = "defaults::lambda")]
    pub lambda: LambdaSchedule<f64>,
    #[serde(default = "defaults::max_iters")]
    pub max_iters: usize,
    #[serde(default = "defaults::init_noise_sigma")]
    pub init_noise_sigma: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    /// Defaults to 20 (kDRFC) or 18 (sDRFC).
    #[serde(default)]
    pub k: Option<usize>,
    /// Defaults to 20 (kDRFC) or 10 (sDRFC). Zero disables remote points.
    #[serde(default)]
    pub remote_count: Option<usize>,
    #[serde(default)]
    pub geodesic: Option<GeodesicMethod>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    #[serde(default = "defaults::metric_k")]
    pub k: usize,
    #[serde(default = "defaults::yes")]
    pub one_nn: bool,
    #[serde(default = "defaults::yes")]
    pub trustworthiness: bool,
    #[serde(default = "defaults::yes")]
    pub continuity: bool,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            k: defaults::metric_k(),
            one_nn: true,
            trustworthiness: true,
            continuity: true,
        }
    }
}

mod defaults {
    use crate::dynamics::LambdaSchedule;

    pub fn dt() -> f64 {
        0.2
    }
    pub fn delta() -> f64 {
        1e-7
    }
    pub fn eta() -> f64 {
        1e-3
    }
    pub fn lambda() -> LambdaSchedule<f64> {
        LambdaSchedule::Constant(1.0)
    }
    pub fn max_iters() -> usize {
        2000
    }
    pub fn init_noise_sigma() -> f64 {
        0.01
    }
    pub fn metric_k() -> usize {
        crate::metrics::DEFAULT_K
    }
    pub fn restarts() -> usize {
        5
    }
    pub fn yes() -> bool {
        true
    }
    pub fn output_dir() -> std::path::PathBuf {
        "out".into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default = "defaults::yes")]
    pub normalize: bool,
    pub method: Method,
    pub solver: SolverSection,
    #[serde(default)]
    pub graph: GraphSection,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default = "defaults::restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub trace: bool,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fills method-dependent defaults and validates every field.
    pub fn resolve(&self) -> Result<Self> {
        let mut cfg = self.clone();
        if let DataSource::Generate { seed, .. } = &mut cfg.data {
            seed.get_or_insert(self.seed);
        }
        if let Some(variant) = cfg.method.variant() {
            cfg.graph.k.get_or_insert(variant.default_k());
            cfg.graph.remote_count.get_or_insert(variant.default_remote_count());
            cfg.graph.geodesic.get_or_insert(GeodesicMethod::GraphShortestPath);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match &self.data {
            DataSource::Generate { n, noise_sigma, .. } => {
                if *n < 2 {
                    return bad(format!("data.n must be at least 2, got {n}"));
                }
                if !(*noise_sigma >= 0.0 && noise_sigma.is_finite()) {
                    return bad("data.noise_sigma must be finite and >= 0".into());
                }
            }
            DataSource::Csv { path, .. } => {
                if !path.is_file() {
                    return bad(format!("data.path {} does not exist", path.display()));
                }
            }
        }
        if self.solver.d_target < 1 {
            return bad("solver.d_target must be at least 1".into());
        }
        if self.solver.max_iters < 1 {
            return bad("solver.max_iters must be at least 1".into());
        }
        if self.restarts < 1 {
            return bad("restarts must be at least 1".into());
        }
        if self.metrics.k < 1 {
            return bad("metrics.k must be at least 1".into());
        }
        if self.method.variant().is_some() && self.graph.k == Some(0) {
            return bad("graph.k must be at least 1".into());
        }
        self.solver_config(self.seed)
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn solver_config(&self, seed: u64) -> SolverConfig<f64> {
        SolverConfig {
            d_target: self.solver.d_target,
            dt: self.solver.dt,
            delta: self.solver.delta,
            eta: self.solver.eta,
            lambda: self.solver.lambda,
            max_iters: self.solver.max_iters,
            seed,
            init_noise_sigma: self.solver.init_noise_sigma,
            record_trace: self.trace,
        }
    }

    pub fn dataset(&self) -> Result<Dataset<f64>> {
        let raw = match &self.data {
            DataSource::Generate {
                kind,
                n,
                noise_sigma,
                seed,
            } => data::generate(&GeneratorSpec::new(*kind, *n, *noise_sigma, seed.unwrap_or(self.seed)))?,
            DataSource::Csv { path, label_column } => data::load_csv(path, label_column.as_deref())?,
        };
        if self.normalize {
            data::normalize(&raw)
        } else {
            Ok(raw)
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub report: MetricsReport,
    pub positions: Array2<f64>,
    pub labels: Option<Vec<i64>>,
    pub trace: Option<Vec<TraceRecord<f64>>>,
    /// Whether the kept run met the stopping threshold (always true for PCA).
    pub converged: bool,
    /// Index of the restart that was kept.
    pub best_restart: usize,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name,
        inner: Box::new(e),
    })
}

/// Runs the pipeline without writing files.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let started = Instant::now();
    let cfg = config.resolve()?;
    let ds = stage("data", cfg.dataset())?;

    let (emb, best_restart) = match cfg.method.variant() {
        None => {
            let (_, y) = stage("pca", pca_fit_transform(&ds, cfg.solver.d_target))?;
            (
                Embedding {
                    positions: y,
                    iterations: 0,
                    converged: true,
                    final_potential: f64::NAN,
                    trace: None,
                },
                0,
            )
        }
        Some(variant) => {
            let k = cfg.graph.k.expect("resolved");
            let remote_count = cfg.graph.remote_count.expect("resolved");
            let geodesic = cfg.graph.geodesic.expect("resolved");
            let base = stage("graph", graph::build_neighbors(&ds, variant, k))?;
            let seeds: Vec<u64> = (0..cfg.restarts).map(|r| cfg.seed.wrapping_add(r as u64)).collect();
            let drawn = seeds
                .iter()
                .map(|&seed| graph::sample_remotes(&base, &ds, remote_count, seed))
                .collect::<Result<Vec<_>>>();
            let drawn = stage("graph", drawn)?;
            let systems = stage("graph", graph::assign_remote_distances_batch(&drawn, &ds, geodesic))?;
            let runs: Vec<Result<Embedding<f64>>> = systems
                .par_iter()
                .zip(seeds.par_iter())
                .map(|(ns, &seed)| stage("solve", dynamics::solve(&ds, ns, &cfg.solver_config(seed))))
                .collect();
            let mut best: Option<(Embedding<f64>, usize)> = None;
            for (r, run) in runs.into_iter().enumerate() {
                let run = run?;
                if best.as_ref().is_none_or(|(b, _)| run.final_potential < b.final_potential) {
                    best = Some((run, r));
                }
            }
            best.expect("restarts >= 1")
        }
    };

    let labels = ds.labels.clone();
    let one_nn_error = if cfg.metrics.one_nn && labels.is_some() {
        Some(stage("metrics", metrics::one_nn_error(emb.positions.view(), labels.as_deref()))?)
    } else {
        None
    };
    let (trustworthiness, continuity) = if cfg.metrics.trustworthiness || cfg.metrics.continuity {
        let (t, c) = stage(
            "metrics",
            metrics::trustworthiness_continuity(ds.points.view(), emb.positions.view(), cfg.metrics.k),
        )?;
        (
            cfg.metrics.trustworthiness.then_some(t),
            cfg.metrics.continuity.then_some(c),
        )
    } else {
        (None, None)
    };
    let report = MetricsReport {
        one_nn_error,
        trustworthiness,
        continuity,
        k_metric: cfg.metrics.k,
        final_potential: emb.final_potential.is_finite().then_some(emb.final_potential),
        iterations: emb.iterations,
        runtime_ms: started.elapsed().as_millis() as u64,
    };
    Ok(ExperimentOutcome {
        config: cfg,
        report,
        positions: emb.positions,
        labels,
        trace: emb.trace,
        converged: emb.converged,
        best_restart,
    })
}

/// Runs the pipeline and writes `embedding.csv`, `metrics.json`,
/// `config_echo.json` and (when enabled) `trace.csv` into the output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let outcome = execute(config)?;
    write_outputs(&outcome)?;
    Ok(outcome)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

pub fn write_outputs(outcome: &ExperimentOutcome) -> Result<()> {
    let dir = &outcome.config.output_dir;
    fs::create_dir_all(dir).map_err(io_at(dir))?;

    let path = dir.join(EMBEDDING_FILE);
    data::write_embedding_csv(&outcome.positions, outcome.labels.as_deref(), create(&path)?)?;

    let path = dir.join(METRICS_FILE);
    write_json(&path, &outcome.report)?;

    let path = dir.join(CONFIG_ECHO_FILE);
    let mut w = create(&path)?;
    writeln!(w, "{}", outcome.config.to_json()).map_err(io_at(&path))?;
    w.flush().map_err(io_at(&path))?;

    if let Some(trace) = &outcome.trace {
        let path = dir.join(TRACE_FILE);
        write_trace_csv(trace, create(&path)?).map_err(io_at(&path))?;
    }
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e.into(),
    })?;
    writeln!(w).map_err(io_at(path))?;
    w.flush().map_err(io_at(path))
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRecord<f64>], mut w: W) -> std::io::Result<()> {
    writeln!(w, "iter,potential,max_displacement")?;
    for rec in trace {
        writeln!(w, "{},{},{}", rec.iter, rec.potential, rec.max_displacement)?;
    }
    w.flush()
}
