//! The formation-control flow: potential, force field, initialization and
//! the forward-Euler integrator.
//!
//! For neighbors `N_i` with target distances `d_ij` and remotes `R_i` with
//! approximate geodesic distances `d̃_ij`, row `i` of the force is
//!
//! ```text
//! Σ_{j∈N_i} (d_ij − ‖y_i−y_j‖) (y_i−y_j)/(‖y_i−y_j‖+δ)
//!   + λ_t Σ_{j∈R_i} (d̃_ij − ‖y_i−y_j‖)_+ (y_i−y_j)/(‖y_i−y_j‖+δ)
//! ```
//!
//! and one step is `y ← y + Δt·force(y)` evaluated at the old positions for
//! every row.

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{distance, thin_qr_q};
use crate::{rng, Dataset, Error, NeighborSystem, Result, Scalar};

/// Any coordinate beyond this magnitude aborts the run as divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

/// Remote weight λ_t as a function of the iteration index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSchedule<T> {
    Constant(T),
    /// `initial · decay^t`.
    Exponential { initial: T, decay: T },
}

impl<T: Scalar> LambdaSchedule<T> {
    pub fn at(&self, iteration: usize) -> T {
        match *self {
            LambdaSchedule::Constant(l) => l,
            LambdaSchedule::Exponential { initial, decay } => {
                initial * decay.powi(iteration.min(i32::MAX as usize) as i32)
            }
        }
    }

    fn is_zero(&self) -> bool {
        match *self {
            LambdaSchedule::Constant(l) => l == T::zero(),
            LambdaSchedule::Exponential { initial, .. } => initial == T::zero(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig<T> {
    /// Target dimensionality d.
    pub d_target: usize,
    pub dt: T,
    pub delta: T,
    /// Stop once the largest per-point displacement of a step is below this.
    pub eta: T,
    pub lambda: LambdaSchedule<T>,
    pub max_iters: usize,
    pub seed: u64,
    pub init_noise_sigma: T,
    pub record_trace: bool,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(d_target: usize) -> Self {
        Self {
            d_target,
            dt: T::of(0.2),
            delta: T::of(1e-7),
            eta: T::of(1e-3),
            lambda: LambdaSchedule::Constant(T::one()),
            max_iters: 2000,
            seed: 0,
            init_noise_sigma: T::of(0.01),
            record_trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: T| {
            if v > T::zero() && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let unit = |name: &str, v: T| {
            if v >= T::zero() && v <= T::one() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        if self.d_target < 1 {
            return Err(Error::InvalidArgument("d_target must be at least 1".into()));
        }
        positive("dt", self.dt)?;
        positive("delta", self.delta)?;
        positive("eta", self.eta)?;
        match self.lambda {
            LambdaSchedule::Constant(l) => unit("lambda", l)?,
            LambdaSchedule::Exponential { initial, decay } => {
                unit("lambda.initial", initial)?;
                unit("lambda.decay", decay)?;
            }
        }
        if !(self.init_noise_sigma >= T::zero() && self.init_noise_sigma.is_finite()) {
            return Err(Error::InvalidArgument("init_noise_sigma must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord<T> {
    pub iter: usize,
    pub potential: T,
    pub max_displacement: T,
}

/// Low-dimensional positions plus integration state.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding<T> {
    /// n × d_target.
    pub positions: Array2<T>,
    pub iterations: usize,
    pub converged: bool,
    pub final_potential: T,
    pub trace: Option<Vec<TraceRecord<T>>>,
}

impl<T: Scalar> Embedding<T> {
    /// Wraps given positions as an un-iterated embedding.
    pub fn from_positions(positions: Array2<T>, ns: &NeighborSystem<T>) -> Self {
        let final_potential = potential(positions.view(), ns);
        Self {
            positions,
            iterations: 0,
            converged: false,
            final_potential,
            trace: None,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.nrows() == 0
    }

    pub fn centroid(&self) -> Vec<T> {
        self.positions
            .mean_axis(Axis(0))
            .map(|m| m.to_vec())
            .unwrap_or_default()
    }
}

/// Projects the data onto a random `d_target`-dimensional orthonormal frame
/// and adds Gaussian noise.
pub fn init_embedding<T: Scalar>(d: &Dataset<T>, cfg: &SolverConfig<T>) -> Result<Array2<T>> {
    let frame = random_frame::<T>(d.dim(), cfg.d_target, cfg.seed)?;
    let mut y = d.points.dot(&frame);
    if cfg.init_noise_sigma > T::zero() {
        let mut rng = rng::substream(cfg.seed, rng::INIT_NOISE, 0);
        let sigma = cfg.init_noise_sigma.as_f64();
        y.mapv_inplace(|v| v + T::of(sigma * rng.sample::<f64, _>(StandardNormal)));
    }
    Ok(y)
}

/// D × d matrix with orthonormal columns from the QR factorization of a
/// standard Gaussian draw.
pub fn random_frame<T: Scalar>(ambient: usize, d_target: usize, seed: u64) -> Result<Array2<T>> {
    if d_target > ambient {
        return Err(Error::Dimension(format!(
            "target dimension {d_target} exceeds data dimension {ambient}"
        )));
    }
    if d_target == 0 {
        return Err(Error::Dimension("target dimension must be at least 1".into()));
    }
    let mut rng = rng::substream(seed, rng::INIT, 0);
    let gauss = Array2::from_shape_simple_fn((ambient, d_target), || {
        T::of(rng.sample::<f64, _>(StandardNormal))
    });
    thin_qr_q(gauss.view())
}

#[inline]
fn row<T>(y: &[T], dim: usize, i: usize) -> &[T] {
    &y[i * dim..(i + 1) * dim]
}

/// `φ = ½ Σ_i ½ Σ_{j∈N_i} (d_ij − ‖y_i − y_j‖)²`.
pub fn potential<T: Scalar>(y: ArrayView2<'_, T>, ns: &NeighborSystem<T>) -> T {
    let dim = y.ncols();
    let y = y.as_standard_layout();
    let flat = y.as_slice().expect("standard layout");
    let per_row: Vec<T> = (0..ns.len())
        .into_par_iter()
        .map(|i| {
            let yi = row(flat, dim, i);
            ns.neighbors.row(i).fold(T::zero(), |acc, (j, dij)| {
                let r = dij - distance(yi, row(flat, dim, j));
                acc + r * r
            })
        })
        .collect();
    per_row.into_iter().fold(T::zero(), |a, b| a + b) * T::of(0.25)
}

/// Force field at `y`; see the module docs. Rows are independent, so the
/// result does not depend on the number of worker threads.
pub fn force<T: Scalar>(y: ArrayView2<'_, T>, ns: &NeighborSystem<T>, lambda: T, delta: T) -> Array2<T> {
    let (n, dim) = y.dim();
    let y = y.as_standard_layout();
    let flat = y.as_slice().expect("standard layout");
    let mut out = Array2::<T>::zeros((n, dim));
    let use_remotes = lambda != T::zero();
    out.as_slice_mut()
        .expect("fresh array is contiguous")
        .par_chunks_mut(dim)
        .enumerate()
        .with_min_len(128)
        .for_each(|(i, f)| {
            let yi = row(flat, dim, i);
            for (j, dij) in ns.neighbors.row(i) {
                let yj = row(flat, dim, j);
                let r = distance(yi, yj);
                let coef = (dij - r) / (r + delta);
                for c in 0..dim {
                    f[c] += coef * (yi[c] - yj[c]);
                }
            }
            if use_remotes {
                for (j, dij) in ns.remotes.row(i) {
                    let yj = row(flat, dim, j);
                    let r = distance(yi, yj);
                    let gap = dij - r;
                    if gap > T::zero() {
                        let coef = lambda * gap / (r + delta);
                        for c in 0..dim {
                            f[c] += coef * (yi[c] - yj[c]);
                        }
                    }
                }
            }
        });
    out
}

/// One forward-Euler step at iteration index `iteration`. Returns the new
/// positions and the largest per-point displacement.
pub fn step<T: Scalar>(
    y: ArrayView2<'_, T>,
    ns: &NeighborSystem<T>,
    cfg: &SolverConfig<T>,
    iteration: usize,
) -> Result<(Array2<T>, T)> {
    let lambda = cfg.lambda.at(iteration);
    let mut update = force(y, ns, lambda, cfg.delta);
    update.mapv_inplace(|v| v * cfg.dt);
    let max_disp = update
        .rows()
        .into_iter()
        .map(|r| r.iter().fold(T::zero(), |a, &v| a + v * v).sqrt())
        .fold(T::zero(), T::max);
    let next = &y + &update;
    let limit = T::of(DIVERGENCE_LIMIT);
    if let Some(((row, _), _)) = next
        .indexed_iter()
        .find(|(_, v)| !v.is_finite() || v.abs() > limit)
    {
        return Err(Error::Divergence { iteration, row });
    }
    Ok((next, max_disp))
}

fn check_ready<T: Scalar>(ns: &NeighborSystem<T>, cfg: &SolverConfig<T>) -> Result<()> {
    cfg.validate()?;
    if !cfg.lambda.is_zero() && ns.has_remotes() && !ns.remote_distances_assigned {
        return Err(Error::RemoteDistancesUnassigned);
    }
    Ok(())
}

/// Integrates from `initial` until the stopping rule or `cfg.max_iters`.
pub fn integrate<T: Scalar>(initial: Array2<T>, ns: &NeighborSystem<T>, cfg: &SolverConfig<T>) -> Result<Embedding<T>> {
    check_ready(ns, cfg)?;
    if initial.nrows() != ns.len() {
        return Err(Error::Dimension(format!(
            "{} initial positions for {} points",
            initial.nrows(),
            ns.len()
        )));
    }
    let mut y = initial;
    let mut trace = cfg.record_trace.then(Vec::new);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        let (next, disp) = step(y.view(), ns, cfg, iterations)?;
        y = next;
        iterations += 1;
        if let Some(t) = trace.as_mut() {
            t.push(TraceRecord {
                iter: iterations,
                potential: potential(y.view(), ns),
                max_displacement: disp,
            });
        }
        if disp < cfg.eta {
            converged = true;
            break;
        }
    }
    let final_potential = potential(y.view(), ns);
    Ok(Embedding {
        positions: y,
        iterations,
        converged,
        final_potential,
        trace,
    })
}

/// Random-projection initialization followed by [`integrate`].
pub fn solve<T: Scalar>(d: &Dataset<T>, ns: &NeighborSystem<T>, cfg: &SolverConfig<T>) -> Result<Embedding<T>> {
    check_ready(ns, cfg)?;
    if d.len() != ns.len() {
        return Err(Error::Dimension(format!(
            "dataset has {} points, neighbor system {}",
            d.len(),
            ns.len()
        )));
    }
    let y0 = init_embedding(d, cfg)?;
    integrate(y0, ns, cfg)
}

/// Runs `restarts` solves with seeds `cfg.seed + r` and keeps the one with
/// the smallest potential (earliest restart on ties).
pub fn solve_best<T: Scalar>(
    d: &Dataset<T>,
    ns: &NeighborSystem<T>,
    cfg: &SolverConfig<T>,
    restarts: usize,
) -> Result<Embedding<T>> {
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    let runs: Vec<Result<Embedding<T>>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let cfg_r = SolverConfig {
                seed: cfg.seed.wrapping_add(r as u64),
                ..cfg.clone()
            };
            solve(d, ns, &cfg_r)
        })
        .collect();
    let mut best: Option<Embedding<T>> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.final_potential < b.final_potential) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
