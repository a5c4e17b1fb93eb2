//! Exit criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.
//!
//! `cargo test -p drfc --test acceptance`

mod common;

use std::fs;
use std::io::Write;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::{gaussian, gradient_check, random_orthogonal, rng, shortest_path_check, symmetric_system, tc_check};
use drfc::dynamics::{self, force, potential, step, LambdaSchedule, SolverConfig};
use drfc::experiment::{self, ExperimentConfig, ExperimentOutcome};
use drfc::graph::{self, Variant};
use drfc::{Dataset64, Error};
use ndarray::{array, Axis};
use rand::Rng;
use serde_json::Value;

const N: usize = 5000;

type Verdict = Result<String, String>;

fn generated(kind: &str, method: &str, d_target: usize) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"data": {{"generate": {{"kind": "{kind}", "n": {N}}}}},
            "method": "{method}", "solver": {{"d_target": {d_target}}}}}"#
    ))
    .expect("valid config")
}

struct Run {
    outcome: Result<ExperimentOutcome, Error>,
    elapsed: Duration,
}

fn run(cfg: &ExperimentConfig) -> Run {
    let started = Instant::now();
    let outcome = experiment::execute(cfg);
    Run {
        outcome,
        elapsed: started.elapsed(),
    }
}

fn summary(o: &ExperimentOutcome) -> String {
    let r = &o.report;
    format!(
        "1-NN {:.4}, T(12) {:.4}, C(12) {:.4}, iterations {}",
        r.one_nn_error.unwrap_or(f64::NAN),
        r.trustworthiness.unwrap_or(f64::NAN),
        r.continuity.unwrap_or(f64::NAN),
        r.iterations
    )
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn quality(run: &Run, max_one_nn: f64, min_t: f64, min_c: f64) -> Verdict {
    let o = run.outcome.as_ref().map_err(|e| format!("run failed: {e}"))?;
    let r = &o.report;
    let ok = r.one_nn_error.is_some_and(|e| e <= max_one_nn)
        && r.trustworthiness.is_some_and(|t| t >= min_t)
        && r.continuity.is_some_and(|c| c >= min_c);
    check(ok, summary(o))
}

fn c1(swiss: &Run) -> Verdict {
    let q = quality(swiss, 0.05, 0.99, 0.99);
    let secs = swiss.elapsed.as_secs_f64();
    let timing = format!("runtime {secs:.1} s");
    match q {
        Ok(d) if secs <= 120.0 => Ok(format!("{d}, {timing}")),
        Ok(d) | Err(d) => Err(format!("{d}, {timing}")),
    }
}

fn c2() -> Verdict {
    quality(&run(&generated("broken_swiss_roll", "kdrfc", 2)), 0.07, 0.99, 0.99)
}

fn c3() -> Verdict {
    quality(&run(&generated("helix", "sdrfc", 1)), 0.08, 0.99, 0.99)
}

fn c4() -> Verdict {
    let k = quality(&run(&generated("twin_peaks", "kdrfc", 2)), 0.02, 0.98, 0.99);
    let s = quality(&run(&generated("twin_peaks", "sdrfc", 2)), 0.02, 0.98, 0.99);
    let both = |a: &Verdict, b: &Verdict| {
        let text = |v: &Verdict| v.clone().unwrap_or_else(|e| e);
        format!("kDRFC: {}; sDRFC: {}", text(a), text(b))
    };
    check(k.is_ok() || s.is_ok(), both(&k, &s))
}

fn c5() -> Verdict {
    let r = run(&generated("swiss_roll", "pca", 2));
    let o = r.outcome.map_err(|e| format!("run failed: {e}"))?;
    let e = o.report.one_nn_error.ok_or("no 1-NN error")?;
    check((e - 0.30).abs() <= 0.05, format!("1-NN {e:.4}"))
}

fn c6(swiss: &Run) -> Verdict {
    let o = swiss.outcome.as_ref().map_err(|e| format!("run failed: {e}"))?;
    let it = o.report.iterations;
    check(
        (50..=600).contains(&it) && o.converged,
        format!("{it} iterations, converged: {}", o.converged),
    )
}

fn c7() -> Verdict {
    let worst = (0..20).map(gradient_check).fold(0.0, f64::max);
    check(worst <= 1e-5, format!("max relative error {worst:.2e} over 20 instances"))
}

fn c8() -> Verdict {
    let mut worst_sum = 0.0f64;
    let mut worst_drift = 0.0f64;
    for seed in 0..5 {
        let (_, ns) = symmetric_system(900 + seed, 40, 4, 4, 3);
        let mut cfg = SolverConfig::<f64>::new(2);
        cfg.dt = 0.05;
        let mut y = gaussian(&mut rng(seed), 40, 2);
        let mean = y.mean_axis(Axis(0)).unwrap();
        y -= &mean;
        let c0 = y.mean_axis(Axis(0)).unwrap();
        for it in 0..500 {
            let f = force(y.view(), &ns, 1.0, cfg.delta);
            worst_sum = worst_sum.max(f.sum_axis(Axis(0)).iter().map(|v| v.abs()).fold(0.0, f64::max));
            y = step(y.view(), &ns, &cfg, it).map_err(|e| e.to_string())?.0;
        }
        let drift = (&y.mean_axis(Axis(0)).unwrap() - &c0).iter().map(|v| v.abs()).fold(0.0, f64::max);
        worst_drift = worst_drift.max(drift);
    }
    check(
        worst_sum <= 1e-10 && worst_drift <= 1e-6,
        format!("max row-sum {worst_sum:.2e}, drift after 500 steps {worst_drift:.2e}"),
    )
}

fn c9() -> Verdict {
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let dim = 1 + seed as usize % 3;
        let (_, ns) = symmetric_system(1000 + seed, 25, 3, 3, 2);
        let mut r = rng(1100 + seed);
        let y = gaussian(&mut r, 25, dim);
        let omega = random_orthogonal(&mut r, dim);
        let shift = gaussian(&mut r, 1, dim) * 5.0;
        let lhs = force((y.dot(&omega.t()) + &shift).view(), &ns, 1.0, 1e-7);
        let rhs = force(y.view(), &ns, 1.0, 1e-7).dot(&omega.t());
        worst = worst.max((&lhs - &rhs).iter().map(|v| v.abs()).fold(0.0, f64::max));
    }
    check(worst <= 1e-9, format!("max deviation {worst:.2e} over 10 rigid motions"))
}

fn c10() -> Verdict {
    let mut worst = f64::NEG_INFINITY;
    for seed in 0..10u64 {
        let mut r = rng(1200 + seed);
        let n = r.gen_range(10..=30);
        let (d, ns) = symmetric_system(1300 + seed, n, 3, r.gen_range(1..=4), 0);
        let mut cfg = SolverConfig::<f64>::new(2);
        cfg.dt = 0.02;
        cfg.lambda = LambdaSchedule::Constant(0.0);
        cfg.seed = seed;
        let mut y = dynamics::init_embedding(&d, &cfg).map_err(|e| e.to_string())?;
        let mut phi = potential(y.view(), &ns);
        for it in 0..200 {
            y = step(y.view(), &ns, &cfg, it).map_err(|e| e.to_string())?.0;
            let next = potential(y.view(), &ns);
            worst = worst.max(next - phi);
            phi = next;
        }
    }
    check(worst <= 1e-9, format!("largest per-step increase {worst:.2e}"))
}

fn c11() -> Verdict {
    let worst = (0..20).map(shortest_path_check).fold(0.0, f64::max);
    check(worst <= 1e-9, format!("max deviation {worst:.2e} over 20 graphs"))
}

fn c12() -> Verdict {
    let results: Vec<(f64, bool)> = (0..20).map(tc_check).collect();
    let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let identity = results.iter().all(|r| r.1);
    check(
        worst <= 1e-12 && identity,
        format!("max deviation {worst:.2e} over 20 instances, identity exact: {identity}"),
    )
}

fn c13() -> Verdict {
    let d = Dataset64::new(array![[0.0], [1.0], [2.0]], None, "chain").unwrap();
    let ns = graph::build_neighbors(&d, Variant::SDrfc, 1).map_err(|e| e.to_string())?;
    let y = array![[0.0], [1.0], [0.0]];
    let zero = force(y.view(), &ns, 1.0, 1e-7).iter().all(|&v| v == 0.0);
    let emb = dynamics::integrate(y.clone(), &ns, &SolverConfig::new(1)).map_err(|e| e.to_string())?;
    check(
        zero && emb.converged && emb.iterations == 1 && emb.positions == y,
        format!(
            "zero force: {zero}, converged: {} after {} iteration(s)",
            emb.converged, emb.iterations
        ),
    )
}

fn metrics_without_runtime(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("runtime_ms");
    v
}

fn same_outputs(a: &Path, b: &Path) -> Result<(), String> {
    for f in [experiment::EMBEDDING_FILE, experiment::TRACE_FILE] {
        if fs::read(a.join(f)).map_err(|e| e.to_string())? != fs::read(b.join(f)).map_err(|e| e.to_string())? {
            return Err(format!("{f} differs"));
        }
    }
    if metrics_without_runtime(&a.join(experiment::METRICS_FILE)) != metrics_without_runtime(&b.join(experiment::METRICS_FILE)) {
        return Err("metrics.json differs".into());
    }
    Ok(())
}

fn c14() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg_path = dir.path().join("cfg.json");
    fs::write(
        &cfg_path,
        r#"{"data": {"generate": {"kind": "swiss_roll", "n": 600}},
            "method": "kdrfc", "solver": {"d_target": 2, "dt": 0.05, "max_iters": 400},
            "graph": {"k": 12, "remote_count": 8}, "restarts": 3, "seed": 42, "trace": true}"#,
    )
    .map_err(|e| e.to_string())?;
    let bin = env!("CARGO_BIN_EXE_drfc");
    let invoke = |config: &Path, out: &Path| -> Result<(), String> {
        let o = std::process::Command::new(bin)
            .args(["experiment", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .output()
            .map_err(|e| e.to_string())?;
        if o.status.success() {
            Ok(())
        } else {
            Err(String::from_utf8_lossy(&o.stderr).into_owned())
        }
    };
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    invoke(&cfg_path, &a)?;
    invoke(&cfg_path, &b)?;
    same_outputs(&a, &b)?;
    let echo_a = fs::read(a.join(experiment::CONFIG_ECHO_FILE)).map_err(|e| e.to_string())?;
    let echo_b = fs::read(b.join(experiment::CONFIG_ECHO_FILE)).map_err(|e| e.to_string())?;
    let same_echo_modulo_dir = String::from_utf8_lossy(&echo_a).replace(a.to_str().unwrap(), "")
        == String::from_utf8_lossy(&echo_b).replace(b.to_str().unwrap(), "");
    if !same_echo_modulo_dir {
        return Err("config_echo.json differs beyond output_dir".into());
    }
    invoke(&a.join(experiment::CONFIG_ECHO_FILE), &c)?;
    same_outputs(&a, &c).map_err(|e| format!("echo re-run: {e}"))?;
    Ok("two runs and one echoed-config run identical (runtime_ms excluded)".into())
}

/// Criterion 1 setting at a step size the integrator tolerates; printed, never graded.
fn stable_step_diagnostic() -> String {
    let mut cfg = generated("swiss_roll", "kdrfc", 2);
    cfg.solver.dt = 0.05;
    let r = run(&cfg);
    match &r.outcome {
        Ok(o) => format!("{}, runtime {:.1} s", summary(o), r.elapsed.as_secs_f64()),
        Err(e) => format!("run failed: {e}"),
    }
}

fn report(out: &mut impl Write, failures: &mut usize, id: usize, name: &str, f: impl FnOnce() -> Verdict) {
    let verdict = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let (tag, detail) = match verdict {
        Ok(d) => ("PASS", d),
        Err(d) => {
            *failures += 1;
            ("FAIL", d)
        }
    };
    writeln!(out, "criterion {id:>2} {tag}  {name}: {detail}").unwrap();
    out.flush().unwrap();
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut out = std::io::stdout();
    let mut failures = 0;
    let swiss = run(&generated("swiss_roll", "kdrfc", 2));

    report(&mut out, &mut failures, 1, "swiss roll 2D kDRFC", || c1(&swiss));
    report(&mut out, &mut failures, 2, "broken swiss roll 2D kDRFC", c2);
    report(&mut out, &mut failures, 3, "helix 1D sDRFC", c3);
    report(&mut out, &mut failures, 4, "twin peaks 2D", c4);
    report(&mut out, &mut failures, 5, "PCA swiss roll 2D", c5);
    report(&mut out, &mut failures, 6, "iteration count", || c6(&swiss));
    report(&mut out, &mut failures, 7, "gradient check", c7);
    report(&mut out, &mut failures, 8, "centroid conservation", c8);
    report(&mut out, &mut failures, 9, "rigid-motion equivariance", c9);
    report(&mut out, &mut failures, 10, "potential monotonicity", c10);
    report(&mut out, &mut failures, 11, "shortest paths vs Floyd-Warshall", c11);
    report(&mut out, &mut failures, 12, "T/C vs brute force", c12);
    report(&mut out, &mut failures, 13, "spurious equilibrium", c13);
    report(&mut out, &mut failures, 14, "determinism", c14);
    writeln!(out, "info: swiss roll 2D kDRFC with dt = 0.05: {}", stable_step_diagnostic()).unwrap();

    writeln!(out, "acceptance: {} of 14 criteria passed", 14 - failures).unwrap();
    if failures > 0 {
        std::process::exit(1);
    }
}
