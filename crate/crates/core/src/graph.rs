//! Neighbor and remote index sets, and approximate geodesic distances.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::io::Write;

use ordered_float::OrderedFloat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{distance, squared_distance};
use crate::{rng, Dataset, Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Raw k-nearest-neighbor sets; `j ∈ N_i` does not imply `i ∈ N_j`.
    KDrfc,
    /// k-nearest-neighbor sets made symmetric, remotes symmetrized likewise.
    SDrfc,
}

impl Variant {
    pub fn default_k(self) -> usize {
        match self {
            Variant::KDrfc => 20,
            Variant::SDrfc => 18,
        }
    }

    pub fn default_remote_count(self) -> usize {
        match self {
            Variant::KDrfc => 20,
            Variant::SDrfc => 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeodesicMethod {
    Euclidean,
    GraphShortestPath,
}

/// Compressed sparse rows of `(index, distance)` pairs, sorted by index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Adjacency<T> {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<T>,
}

impl<T: Scalar> Adjacency<T> {
    fn from_rows(mut rows: Vec<Vec<(usize, T)>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let total = rows.iter().map(Vec::len).sum();
        let mut targets = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        offsets.push(0);
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
            for &(j, w) in row.iter() {
                targets.push(j);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        Self {
            offsets,
            targets,
            weights,
        }
    }

    fn empty(n: usize) -> Self {
        Self {
            offsets: vec![0; n + 1],
            targets: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn indices(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn distances(&self, i: usize) -> &[T] {
        &self.weights[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        self.indices(i).iter().copied().zip(self.distances(i).iter().copied())
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.indices(i).binary_search(&j).is_ok()
    }

    /// Stored distance of `(i, j)`, if `j` is in row `i`.
    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        self.indices(i)
            .binary_search(&j)
            .ok()
            .map(|p| self.distances(i)[p])
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.len()).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    pub fn mean_degree(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.edge_count() as f64 / self.len() as f64
        }
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.len()).all(|i| self.row(i).all(|(j, w)| self.get(j, i) == Some(w)))
    }

    fn distances_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.weights[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// Neighbor sets `N_i` with distances `d_ij` and remote sets `R_i` with
/// approximate geodesic distances `d̃_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborSystem<T> {
    pub variant: Variant,
    pub k: usize,
    pub remote_count: usize,
    pub neighbors: Adjacency<T>,
    pub remotes: Adjacency<T>,
    /// False while remote distances hold the zero sentinel.
    pub remote_distances_assigned: bool,
    /// Whether the undirected graph induced by the neighbor sets is connected.
    pub connected: bool,
}

impl<T: Scalar> NeighborSystem<T> {
    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn has_remotes(&self) -> bool {
        self.remotes.edge_count() > 0
    }

    /// Builds a system from explicit neighbor rows (`(j, d_ij)` pairs) with no remotes.
    pub fn from_neighbor_rows(variant: Variant, rows: Vec<Vec<(usize, T)>>) -> Result<Self> {
        let n = rows.len();
        for (i, row) in rows.iter().enumerate() {
            for &(j, d) in row {
                if j >= n || j == i {
                    return Err(Error::InvalidArgument(format!("invalid neighbor {j} of point {i}")));
                }
                if !(d > T::zero() && d.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "neighbor distance d[{i}][{j}] must be positive and finite"
                    )));
                }
            }
        }
        let neighbors = Adjacency::from_rows(rows);
        let connected = is_connected(&neighbors);
        Ok(Self {
            variant,
            k: neighbors.max_degree(),
            remote_count: 0,
            neighbors,
            remotes: Adjacency::empty(n),
            remote_distances_assigned: true,
            connected,
        })
    }

    /// Replaces the remote sets with explicit `(j, d̃_ij)` rows.
    pub fn with_remote_rows(mut self, rows: Vec<Vec<(usize, T)>>) -> Result<Self> {
        if rows.len() != self.len() {
            return Err(Error::Dimension(format!(
                "{} remote rows for {} points",
                rows.len(),
                self.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            for &(j, _) in row {
                if j == i || j >= self.len() || self.neighbors.contains(i, j) {
                    return Err(Error::InvalidArgument(format!(
                        "remote {j} of point {i} must be a non-neighbor other point"
                    )));
                }
            }
        }
        self.remote_count = rows.iter().map(Vec::len).max().unwrap_or(0);
        self.remotes = Adjacency::from_rows(rows);
        self.remote_distances_assigned = true;
        Ok(self)
    }

    /// Largest neighbor distance `d_M`.
    pub fn max_neighbor_distance(&self) -> T {
        self.neighbors
            .weights
            .iter()
            .copied()
            .fold(T::zero(), T::max)
    }
}

fn is_connected<T: Scalar>(adj: &Adjacency<T>) -> bool {
    let n = adj.len();
    if n == 0 {
        return true;
    }
    let undirected = undirected_rows(adj);
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &(v, _) in &undirected[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

fn undirected_rows<T: Scalar>(adj: &Adjacency<T>) -> Vec<Vec<(usize, T)>> {
    let mut rows: Vec<Vec<(usize, T)>> = (0..adj.len()).map(|i| adj.row(i).collect()).collect();
    for i in 0..adj.len() {
        for (j, w) in adj.row(i) {
            if !adj.contains(j, i) {
                rows[j].push((i, w));
            }
        }
    }
    rows
}

/// k nearest other points of row `i` by `(distance, index)` order.
fn k_nearest<T: Scalar>(d: &Dataset<T>, i: usize, k: usize) -> Vec<(usize, T)> {
    let xi = d.row(i);
    let mut cand: Vec<(T, usize)> = (0..d.len())
        .filter(|&j| j != i)
        .map(|j| (squared_distance(xi, d.row(j)), j))
        .collect();
    let cmp = |a: &(T, usize), b: &(T, usize)| {
        a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
    };
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, cmp);
        cand.truncate(k);
    }
    cand.sort_by(cmp);
    cand.into_iter().map(|(_, j)| (j, distance(xi, d.row(j)))).collect()
}

/// Builds the neighbor sets by exact brute-force k-nearest-neighbor search.
///
/// Distance ties are broken by lower index. For [`Variant::SDrfc`] every
/// edge `j ∈ N_i` is mirrored into `N_j`.
pub fn build_neighbors<T: Scalar>(d: &Dataset<T>, variant: Variant, k: usize) -> Result<NeighborSystem<T>> {
    let n = d.len();
    if k < 1 || k > n - 1 {
        return Err(Error::InvalidArgument(format!("k must be in 1..={}, got {k}", n - 1)));
    }
    let mut rows: Vec<Vec<(usize, T)>> = (0..n).into_par_iter().map(|i| k_nearest(d, i, k)).collect();
    for (i, row) in rows.iter().enumerate() {
        if let Some(&(j, _)) = row.iter().find(|&&(_, dist)| dist <= T::zero()) {
            return Err(Error::DegeneratePair { i, j });
        }
    }
    if variant == Variant::SDrfc {
        rows = symmetrize(rows);
    }
    let neighbors = Adjacency::from_rows(rows);
    let connected = is_connected(&neighbors);
    Ok(NeighborSystem {
        variant,
        k,
        remote_count: 0,
        neighbors,
        remotes: Adjacency::empty(n),
        remote_distances_assigned: true,
        connected,
    })
}

fn symmetrize<T: Scalar>(rows: Vec<Vec<(usize, T)>>) -> Vec<Vec<(usize, T)>> {
    let mut sets: Vec<BTreeSet<usize>> = rows.iter().map(|r| r.iter().map(|&(j, _)| j).collect()).collect();
    let mut out = rows.clone();
    for (i, row) in rows.iter().enumerate() {
        for &(j, w) in row {
            if sets[j].insert(i) {
                out[j].push((i, w));
            }
        }
    }
    out
}

/// Draws `remote_count` remote points per row uniformly from the complement
/// of `N_i ∪ {i}`, one RNG stream per row. For [`Variant::SDrfc`] the draws
/// are symmetrized. Remote distances are left at the zero sentinel.
pub fn sample_remotes<T: Scalar>(
    ns: &NeighborSystem<T>,
    d: &Dataset<T>,
    remote_count: usize,
    seed: u64,
) -> Result<NeighborSystem<T>> {
    let n = ns.len();
    if d.len() != n {
        return Err(Error::Dimension(format!(
            "neighbor system has {n} points, dataset {}",
            d.len()
        )));
    }
    let draws: Vec<Result<Vec<usize>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let nbrs = ns.neighbors.indices(i);
            let complement: Vec<usize> = (0..n)
                .filter(|&j| j != i && nbrs.binary_search(&j).is_err())
                .collect();
            if complement.len() < remote_count {
                return Err(Error::InfeasibleSampling {
                    point: i,
                    requested: remote_count,
                    available: complement.len(),
                });
            }
            let mut rng = rng::substream(seed, rng::REMOTES, i as u64);
            Ok(rand::seq::index::sample(&mut rng, complement.len(), remote_count)
                .into_iter()
                .map(|p| complement[p])
                .collect())
        })
        .collect();
    let mut rows = Vec::with_capacity(n);
    for draw in draws {
        rows.push(draw?.into_iter().map(|j| (j, T::zero())).collect::<Vec<_>>());
    }
    if ns.variant == Variant::SDrfc {
        rows = symmetrize(rows);
    }
    let remotes = Adjacency::from_rows(rows);
    Ok(NeighborSystem {
        remote_count,
        remote_distances_assigned: remotes.edge_count() == 0,
        remotes,
        ..ns.clone()
    })
}

/// Single-source shortest path lengths over the undirected neighbor graph.
/// Unreachable nodes get `+∞`.
pub fn shortest_paths_from<T: Scalar>(ns: &NeighborSystem<T>, source: usize) -> Vec<T> {
    let graph = undirected_rows(&ns.neighbors);
    dijkstra(&graph, source, None)
}

fn dijkstra<T: Scalar>(graph: &[Vec<(usize, T)>], source: usize, targets: Option<&[usize]>) -> Vec<T> {
    let n = graph.len();
    let mut dist = vec![T::infinity(); n];
    let mut settled = vec![false; n];
    let mut pending = vec![false; n];
    let mut remaining = match targets {
        Some(ts) => {
            for &t in ts {
                pending[t] = true;
            }
            ts.iter().filter(|&&t| t != source).count()
        }
        None => n,
    };
    let mut heap = BinaryHeap::new();
    dist[source] = T::zero();
    heap.push(Reverse((OrderedFloat(0.0f64), source)));
    while let Some(Reverse((_, u))) = heap.pop() {
        if settled[u] {
            continue;
        }
        let du = dist[u];
        settled[u] = true;
        if targets.is_some() && pending[u] && u != source {
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
        for &(v, w) in &graph[u] {
            let alt = du + w;
            if alt < dist[v] {
                dist[v] = alt;
                heap.push(Reverse((OrderedFloat(alt.as_f64()), v)));
            }
        }
    }
    dist
}

/// Fills `d̃_ij` for every remote pair.
///
/// Graph distances are computed once per unordered pair from the smaller
/// index, so `d̃_ij = d̃_ji` exactly whenever both directions are stored.
pub fn assign_remote_distances<T: Scalar>(
    ns: &NeighborSystem<T>,
    d: &Dataset<T>,
    method: GeodesicMethod,
) -> Result<NeighborSystem<T>> {
    let mut out = assign_remote_distances_batch(std::slice::from_ref(ns), d, method)?;
    Ok(out.pop().expect("one system in, one out"))
}

/// [`assign_remote_distances`] for several remote draws over the same
/// neighbor sets. Each source runs one shortest-path search serving every
/// system, and the distances are bit-identical to assigning one at a time.
pub fn assign_remote_distances_batch<T: Scalar>(
    systems: &[NeighborSystem<T>],
    d: &Dataset<T>,
    method: GeodesicMethod,
) -> Result<Vec<NeighborSystem<T>>> {
    let Some(first) = systems.first() else {
        return Ok(Vec::new());
    };
    let n = first.len();
    if d.len() != n {
        return Err(Error::Dimension(format!(
            "neighbor system has {n} points, dataset {}",
            d.len()
        )));
    }
    if systems.iter().any(|ns| ns.neighbors != first.neighbors) {
        return Err(Error::InvalidArgument(
            "batched remote assignment needs identical neighbor sets".into(),
        ));
    }
    let mut out = systems.to_vec();
    match method {
        GeodesicMethod::Euclidean => {
            for ns in &mut out {
                for i in 0..n {
                    let idx = ns.remotes.indices(i).to_vec();
                    for (slot, j) in ns.remotes.distances_mut(i).iter_mut().zip(idx) {
                        *slot = distance(d.row(i), d.row(j));
                    }
                }
            }
        }
        GeodesicMethod::GraphShortestPath => {
            let mut targets: Vec<Vec<usize>> = vec![Vec::new(); n];
            for ns in systems {
                for i in 0..n {
                    for &j in ns.remotes.indices(i) {
                        targets[i.min(j)].push(i.max(j));
                    }
                }
            }
            for t in &mut targets {
                t.sort_unstable();
                t.dedup();
            }
            let graph = undirected_rows(&first.neighbors);
            let per_source: Vec<Vec<T>> = (0..n)
                .into_par_iter()
                .map(|s| {
                    if targets[s].is_empty() {
                        return Vec::new();
                    }
                    let dist = dijkstra(&graph, s, Some(&targets[s]));
                    targets[s].iter().map(|&t| dist[t]).collect()
                })
                .collect();
            for ns in &mut out {
                for i in 0..n {
                    let idx = ns.remotes.indices(i).to_vec();
                    for (slot, j) in ns.remotes.distances_mut(i).iter_mut().zip(idx) {
                        let (a, b) = (i.min(j), i.max(j));
                        let p = targets[a].binary_search(&b).expect("pair registered");
                        *slot = per_source[a][p];
                    }
                }
            }
        }
    }
    for ns in &mut out {
        for i in 0..n {
            for (j, w) in ns.remotes.row(i) {
                if !w.is_finite() {
                    return Err(Error::DisconnectedGraph { i: i.min(j), j: i.max(j) });
                }
                if w <= T::zero() {
                    return Err(Error::DegeneratePair { i, j });
                }
            }
        }
        ns.remote_distances_assigned = true;
    }
    Ok(out)
}

/// Dumps neighbor and remote edges as CSV rows `i,j,d,kind` with kind `N` or `R`.
pub fn write_edge_list_csv<T: Scalar, W: Write>(ns: &NeighborSystem<T>, mut writer: W) -> std::io::Result<()> {
    writeln!(writer, "i,j,d,kind")?;
    for (adj, kind) in [(&ns.neighbors, "N"), (&ns.remotes, "R")] {
        for i in 0..adj.len() {
            for (j, w) in adj.row(i) {
                writeln!(writer, "{i},{j},{w},{kind}")?;
            }
        }
    }
    Ok(())
}
