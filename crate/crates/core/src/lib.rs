//! Nonlinear dimensionality reduction driven by a distance-based
//! formation-control dynamical system.
//!
//! Each low-dimensional point is an agent that is pulled or pushed toward the
//! prescribed distances to its *neighbor* points (local geometry) and pushed
//! away from a sampled set of *remote* points until their approximate geodesic
//! distance is reached (global geometry). The flow is integrated with forward
//! Euler until the largest per-point displacement falls below a threshold.
//!
//! The numerical core is generic over the scalar type through [`Scalar`];
//! the `*64` / `*32` aliases at the crate root fix it to `f64` / `f32`.
//!
//! ```no_run
//! use drfc::{data, dynamics, graph, metrics};
//!
//! let spec = data::GeneratorSpec::new(data::ManifoldKind::SwissRoll, 2000, 0.0, 7);
//! let ds: drfc::Dataset64 = data::normalize(&data::generate(&spec)?)?;
//! let ns = graph::build_neighbors(&ds, graph::Variant::KDrfc, 20)?;
//! let ns = graph::sample_remotes(&ns, &ds, 20, 7)?;
//! let ns = graph::assign_remote_distances(&ns, &ds, graph::GeodesicMethod::GraphShortestPath)?;
//! let cfg = dynamics::SolverConfig::new(2);
//! let emb = dynamics::solve(&ds, &ns, &cfg)?;
//! let (t, c) = metrics::trustworthiness_continuity(ds.points.view(), emb.positions.view(), 12)?;
//! println!("T(12) = {t:.4}, C(12) = {c:.4}");
//! # Ok::<(), drfc::Error>(())
//! ```

pub mod baselines;
pub mod data;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod rng;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use baselines::PcaModel;
pub use data::{Dataset, GeneratorSpec, ManifoldKind};
pub use dynamics::{Embedding, LambdaSchedule, SolverConfig};
pub use graph::{GeodesicMethod, NeighborSystem, Variant};
pub use metrics::MetricsReport;

pub type Dataset64 = Dataset<f64>;
pub type Embedding64 = Embedding<f64>;
pub type NeighborSystem64 = NeighborSystem<f64>;
pub type SolverConfig64 = SolverConfig<f64>;
pub type PcaModel64 = PcaModel<f64>;

pub type Dataset32 = Dataset<f32>;
pub type Embedding32 = Embedding<f32>;
pub type NeighborSystem32 = NeighborSystem<f32>;
pub type SolverConfig32 = SolverConfig<f32>;
pub type PcaModel32 = PcaModel<f32>;
