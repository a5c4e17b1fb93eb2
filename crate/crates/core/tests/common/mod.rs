#![allow(dead_code)]

use drfc::graph::{self, GeodesicMethod, NeighborSystem, Variant};
use drfc::Dataset64;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

pub fn cloud(seed: u64, n: usize, dim: usize) -> Dataset64 {
    let mut r = rng(seed);
    Dataset64::new(gaussian(&mut r, n, dim), None, "cloud").unwrap()
}

/// sDRFC system on a Gaussian cloud, with symmetric remotes at graph distances.
pub fn symmetric_system(seed: u64, n: usize, dim: usize, k: usize, remotes: usize) -> (Dataset64, NeighborSystem<f64>) {
    let d = cloud(seed, n, dim);
    let ns = graph::build_neighbors(&d, Variant::SDrfc, k).unwrap();
    let ns = graph::sample_remotes(&ns, &d, remotes, seed).unwrap();
    let ns = graph::assign_remote_distances(&ns, &d, GeodesicMethod::Euclidean).unwrap();
    (d, ns)
}

pub fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> Array2<f64> {
    drfc::linalg::thin_qr_q(gaussian(rng, d, d).view()).unwrap()
}

pub fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(i, j, w) in edges {
        d[i][j] = d[i][j].min(w);
        d[j][i] = d[j][i].min(w);
    }
    for m in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][m] + d[m][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Random spanning tree plus extra chords; edges stored in one direction
/// only, to exercise the undirected view.
pub fn random_connected_graph(seed: u64) -> (usize, Vec<(usize, usize, f64)>) {
    let mut r = rng(seed);
    let n = r.gen_range(2..=50);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((v, r.gen_range(0..v), r.gen_range(0.1..3.0)));
    }
    for _ in 0..r.gen_range(0..2 * n) {
        let (a, b) = (r.gen_range(0..n), r.gen_range(0..n));
        if a != b && !edges.iter().any(|&(i, j, _)| (i, j) == (a, b) || (i, j) == (b, a)) {
            edges.push((a, b, r.gen_range(0.1..3.0)));
        }
    }
    (n, edges)
}


pub fn brute_rank(x: &Array2<f64>, i: usize, j: usize) -> usize {
    let dist = |a: usize, b: usize| {
        x.row(a)
            .iter()
            .zip(x.row(b).iter())
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
    };
    let dij = dist(i, j);
    1 + (0..x.nrows())
        .filter(|&l| l != i && l != j)
        .filter(|&l| {
            let dil = dist(i, l);
            dil < dij || (dil == dij && l < j)
        })
        .count()
}

pub fn brute_tc(high: &Array2<f64>, low: &Array2<f64>, k: usize) -> (f64, f64) {
    let n = high.nrows();
    let (mut t, mut c) = (0.0, 0.0);
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let (rh, rl) = (brute_rank(high, i, j), brute_rank(low, i, j));
            if rl <= k && rh > k {
                t += (rh - k) as f64;
            }
            if rh <= k && rl > k {
                c += (rl - k) as f64;
            }
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let scale = 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0));
    (1.0 - scale * t, 1.0 - scale * c)
}


pub fn double_loop_potential(y: &Array2<f64>, ns: &NeighborSystem<f64>) -> f64 {
    let n = y.nrows();
    let mut total = 0.0;
    for i in 0..n {
        let mut inner = 0.0;
        for j in 0..n {
            if let Some(dij) = ns.neighbors.get(i, j) {
                let r = y
                    .row(i)
                    .iter()
                    .zip(y.row(j).iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                inner += (dij - r) * (dij - r);
            }
        }
        total += 0.5 * inner;
    }
    0.5 * total
}

/// Central finite-difference gradient of the potential.
pub fn numeric_gradient(y: &Array2<f64>, ns: &NeighborSystem<f64>, h: f64) -> Array2<f64> {
    let mut y = y.clone();
    let mut grad = Array2::<f64>::zeros(y.dim());
    for i in 0..y.nrows() {
        for c in 0..y.ncols() {
            let orig = y[[i, c]];
            y[[i, c]] = orig + h;
            let up = drfc::dynamics::potential(y.view(), ns);
            y[[i, c]] = orig - h;
            let down = drfc::dynamics::potential(y.view(), ns);
            y[[i, c]] = orig;
            grad[[i, c]] = (up - down) / (2.0 * h);
        }
    }
    grad
}

/// `‖force + ∇φ‖ / ‖∇φ‖` with `λ = 0`, `δ = 0` on a random symmetric instance.
pub fn gradient_check(seed: u64) -> f64 {
    let mut r = rng(400 + seed);
    let n = r.gen_range(4..=30);
    let dim = 1 + (seed as usize % 3);
    let k = r.gen_range(1..=3.min(n - 1));
    let (_, ns) = symmetric_system(500 + seed, n, 4, k, 0);
    let y = gaussian(&mut r, n, dim);
    let f = drfc::dynamics::force(y.view(), &ns, 0.0, 0.0);
    let grad = numeric_gradient(&y, &ns, 1e-6);
    let err = (&f + &grad).iter().map(|v| v * v).sum::<f64>().sqrt();
    err / grad.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest `|T − T_oracle|`, `|C − C_oracle|` on a random instance, plus
/// whether the identity embedding scores exactly 1.
pub fn tc_check(seed: u64) -> (f64, bool) {
    let mut r = rng(100 + seed);
    let n = r.gen_range(8..=60);
    let high = gaussian(&mut r, n, 5);
    let low = if seed % 4 == 0 {
        // Coarse grid coordinates produce many distance ties.
        high.slice(ndarray::s![.., ..2]).mapv(|v| (v * 2.0).round())
    } else {
        high.slice(ndarray::s![.., ..2]).to_owned() + gaussian(&mut r, n, 2) * 0.3
    };
    let k = r.gen_range(1..=(n - 2) / 2);
    let (t, c) = drfc::metrics::trustworthiness_continuity(high.view(), low.view(), k).unwrap();
    let (to, co) = brute_tc(&high, &low, k);
    let identity = drfc::metrics::trustworthiness_continuity(high.view(), high.view(), k).unwrap() == (1.0, 1.0);
    ((t - to).abs().max((c - co).abs()), identity)
}

/// Largest `|dijkstra − floyd_warshall|` over all pairs of a random connected graph.
pub fn shortest_path_check(seed: u64) -> f64 {
    let (n, edges) = random_connected_graph(seed);
    let mut rows = vec![Vec::new(); n];
    for &(i, j, w) in &edges {
        rows[i].push((j, w));
    }
    let ns = NeighborSystem::from_neighbor_rows(Variant::KDrfc, rows).unwrap();
    assert!(ns.connected);
    let oracle = floyd_warshall(n, &edges);
    let mut worst = 0.0f64;
    for s in 0..n {
        let got = graph::shortest_paths_from(&ns, s);
        for t in 0..n {
            worst = worst.max((got[t] - oracle[s][t]).abs());
        }
    }
    worst
}
