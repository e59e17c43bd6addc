//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Oracles (brute-force enumeration, reachability, normal equations, KS
//! statistics) are coded here independently of the library.

use std::collections::{HashSet, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rayon::prelude::*;
use relnet::bat::{exact_reliability, BatIter};
use relnet::connectivity::Plsa;
use relnet::datagen::{build_dataset, split_dataset, split_indices, Dataset, Labeler, Regime};
use relnet::estimators::{bat_mcs_estimate, mcs_estimate, required_sample_size, BatMcsPlan};
use relnet::graph::{bridge_distribution, bridge_network, generate_benchmark};
use relnet::rng::substream;
use relnet::surrogates::eval::{evaluate, mse};
use relnet::surrogates::linear::{coordinate_descent, expand_polynomial, DescentOptions};
use relnet::surrogates::mlp::{init_parameters, loss_and_gradient};
use relnet::surrogates::{FittedModel, FittedParameters, ModelSpec};
use relnet::Network;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

fn reachable(net: &Network, bits: &[bool]) -> bool {
    let n = net.node_count();
    let mut adj = vec![Vec::new(); n + 1];
    for (i, a) in net.arcs().iter().enumerate() {
        if bits[i] {
            adj[a.u].push(a.v);
            adj[a.v].push(a.u);
        }
    }
    let mut seen = vec![false; n + 1];
    let mut queue = VecDeque::from([1usize]);
    seen[1] = true;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen[n]
}

fn brute_force(net: &Network, p: &[f64]) -> f64 {
    let m = net.arc_count();
    let mut total = 0.0;
    for k in 0..1u64 << m {
        let bits: Vec<bool> = (0..m).map(|i| (k >> i) & 1 == 1).collect();
        if reachable(net, &bits) {
            total += bits
                .iter()
                .zip(p)
                .map(|(&b, &q)| if b { q } else { 1.0 - q })
                .product::<f64>();
        }
    }
    total
}

/// Gaussian elimination with partial pivoting.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            let (top, rest) = a.split_at_mut(r);
            for (x, &p) in rest[0][col..].iter_mut().zip(&top[col][col..]) {
                *x -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Coefficients `(b, w)` of `min |y - b - Xw|^2 + λ|w|^2` via the normal equations.
fn normal_equations(x: &[Vec<f64>], y: &[f64], lambda: f64, intercept: bool) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = x
        .iter()
        .map(|r| if intercept { std::iter::once(1.0).chain(r.iter().copied()).collect() } else { r.clone() })
        .collect();
    let p = rows[0].len();
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for (r, &t) in rows.iter().zip(y) {
        for i in 0..p {
            b[i] += r[i] * t;
            for j in 0..p {
                a[i][j] += r[i] * r[j];
            }
        }
    }
    for (i, row) in a.iter_mut().enumerate() {
        if !(intercept && i == 0) {
            row[i] += lambda;
        }
    }
    gauss_solve(a, b)
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-1.0f64).powi(k - 1) * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    (d, p.clamp(0.0, 1.0))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_variance(v: &[f64]) -> f64 {
    let mu = mean(v);
    v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

fn c1_exact_oracle() -> Outcome {
    let net = bridge_network();
    let d = bridge_distribution();
    let oracle = brute_force(&net, d.probabilities());
    let value = exact_reliability(&net, &d).unwrap();
    let mut best = Duration::MAX;
    for _ in 0..200 {
        let t = Instant::now();
        std::hint::black_box(exact_reliability(&net, &d).unwrap());
        best = best.min(t.elapsed());
    }
    let pass = (value - oracle).abs() <= 1e-12 && (value - 0.766).abs() <= 1e-12 && best < Duration::from_millis(1);
    outcome(pass, format!("R = {value:.15}, oracle = {oracle:.15}, time {best:?}"))
}

fn c2_worked_example() -> Outcome {
    let net = bridge_network();
    let d = bridge_distribution();
    let plan = BatMcsPlan::build(&net, &d, 2, 980).unwrap();
    let omega: Vec<String> = plan.omega().map(|s| s.to_bit_string()).collect();
    let alloc = plan.allocation();
    let est = plan.finish(&[105, 75, 454], 0).unwrap();
    let pass = omega == ["10", "01", "11"] && alloc == [180, 80, 720] && (est.value - 0.634).abs() <= 1e-12;
    outcome(pass, format!("Ω = {omega:?}, allocation = {alloc:?}, R = {:.15}", est.value))
}

fn c3_bat_order() -> Outcome {
    let t = Instant::now();
    let mut ok = true;
    let mut total = 0u64;
    for w in 1..=16usize {
        let mut seen = HashSet::new();
        let mut iter = BatIter::new(w);
        let mut k = 0u64;
        while let Some(v) = iter.advance() {
            let expected = (0..w).all(|i| v[i] == ((k >> i) & 1 == 1));
            let code: u64 = v.iter().enumerate().map(|(i, &b)| (b as u64) << i).sum();
            ok &= expected && seen.insert(code);
            k += 1;
        }
        ok &= k == 1 << w && seen.len() as u64 == 1 << w;
        total += k;
    }
    let el = t.elapsed();
    outcome(ok && el < Duration::from_secs(5), format!("{total} vectors over widths 1..16, time {el:?}"))
}

fn c4_plsa_oracle() -> Outcome {
    let mut rng = substream(2024, 4);
    let mut mismatches = 0;
    let mut connected = 0;
    for _ in 0..10_000 {
        let n = rng.gen_range(2..=50usize);
        let max = n * (n - 1) / 2;
        let m = rng.gen_range(n - 1..=max.min(4 * n));
        let net = generate_benchmark(n, m, rng.gen()).unwrap();
        let density: f64 = rng.gen();
        let bits: Vec<bool> = (0..m).map(|_| rng.gen::<f64>() < density).collect();
        let verdict = Plsa::new(&net).is_connected(&bits);
        connected += verdict as usize;
        mismatches += (verdict != reachable(&net, &bits)) as usize;
    }
    outcome(mismatches == 0, format!("10000 instances, {connected} connected, {mismatches} mismatches"))
}

fn c5_estimator_statistics() -> Outcome {
    let t = Instant::now();
    let net = bridge_network();
    let d = bridge_distribution();
    let seeds: Vec<u64> = (0..1000).collect();
    let mcs: Vec<f64> = seeds.par_iter().map(|&s| mcs_estimate(&net, &d, 10_000, s).unwrap().value).collect();
    let bat: Vec<f64> = seeds
        .par_iter()
        .map(|&s| bat_mcs_estimate(&net, &d, 2, 10_000, s).unwrap().value)
        .collect();
    let (m1, m2) = (mean(&mcs), mean(&bat));
    let (v1, v2) = (sample_variance(&mcs), sample_variance(&bat));
    let el = t.elapsed();
    let pass = (m1 - 0.766).abs() < 0.005 && (m2 - 0.766).abs() < 0.005 && v2 <= v1 && el < Duration::from_secs(120);
    outcome(
        pass,
        format!("MCS mean {m1:.5} var {v1:.3e}; BAT-MCS mean {m2:.5} var {v2:.3e}; time {el:?}"),
    )
}

fn c6_degeneracy() -> Outcome {
    let net = bridge_network();
    let d = bridge_distribution();
    let mcs: Vec<f64> = (0..100u64).map(|s| mcs_estimate(&net, &d, 10_000, s).unwrap().value).collect();
    let bat0: Vec<f64> = (1000..1100u64)
        .map(|s| bat_mcs_estimate(&net, &d, 0, 10_000, s).unwrap().value)
        .collect();
    let (ks, p) = ks_two_sample(&mcs, &bat0);
    let same_seed = (0..20u64).all(|s| {
        mcs_estimate(&net, &d, 10_000, s).unwrap().value == bat_mcs_estimate(&net, &d, 0, 10_000, s).unwrap().value
    });
    let full = bat_mcs_estimate(&net, &d, 5, 10_000, 3).unwrap();
    let exact = exact_reliability(&net, &d).unwrap();
    let pass = p > 0.01 && same_seed && full.total_sims == 0 && (full.value - exact).abs() <= 1e-12;
    outcome(
        pass,
        format!(
            "δ=0 vs MCS: KS D = {ks:.3}, p = {p:.3}, same-seed identical = {same_seed}; δ=m sims {} |R - exact| = {:.1e}",
            full.total_sims,
            (full.value - exact).abs()
        ),
    )
}

fn c7_high_reliability() -> Outcome {
    let t = Instant::now();
    let net = generate_benchmark(39, 170, 39_170).unwrap();
    let deg = |v: usize| net.arcs().iter().filter(|a| a.u == v || a.v == v).count();
    let ds = build_dataset(&net, "gen-39-170", Regime::HIGH, 100, Labeler::Mcs { n_sim: 10_000 }, 7).unwrap();
    let ones = ds.rows.iter().filter(|r| r.label == 1.0).count();
    let min = ds.rows.iter().map(|r| r.label).fold(1.0, f64::min);
    let el = t.elapsed();
    outcome(
        ones >= 99 && el < Duration::from_secs(300),
        format!(
            "{ones}/100 labels equal 1.0 (min {min}); terminal degrees {} and {}; time {el:?}",
            deg(1),
            deg(39)
        ),
    )
}

fn bridge_dataset(size: usize, seed: u64) -> Dataset {
    build_dataset(&bridge_network(), "bridge", Regime::FULL, size, Labeler::Exact, seed).unwrap()
}

fn c8_surrogate_ordering() -> Outcome {
    let t = Instant::now();
    let ds = bridge_dataset(10_000, 8);
    let split = split_dataset(&ds, 8, 5).unwrap();
    let lr = evaluate(&"linear".parse().unwrap(), &ds, &split).unwrap();
    let pr = evaluate(&"polynomial".parse().unwrap(), &ds, &split).unwrap();
    let reference = 1.18e-3;
    let el = t.elapsed();
    let pass = pr.test_mse < lr.test_mse
        && pr.test_mse <= 3.0 * reference
        && pr.test_mse >= reference / 3.0
        && el < Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "PR test MSE {:.3e} (reference {reference:.2e}, ratio {:.2}), LR test MSE {:.3e}; time {el:?}",
            pr.test_mse,
            pr.test_mse / reference,
            lr.test_mse
        ),
    )
}

/// Ranks (1 = best test MSE) of every native model on the first `n` rows.
fn native_ranks(ds: &Dataset, n: usize, seed: u64) -> Vec<(String, usize)> {
    let split = split_indices(n, seed, 5).unwrap();
    let rows = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
        idx.iter().map(|&i| (ds.rows[i].features.clone(), ds.rows[i].label)).unzip()
    };
    let (xtr, ytr) = rows(&split.train);
    let (xte, yte) = rows(&split.test);
    let mut scored: Vec<(String, f64)> = ModelSpec::all_native()
        .into_par_iter()
        .map(|spec| {
            let spec = spec.with_seed(seed);
            let test_mse = match FittedModel::fit(&spec, &xtr, &ytr) {
                Ok(model) => mse(&model.predict_batch(&xte).unwrap(), &yte),
                Err(_) => f64::INFINITY,
            };
            (spec.name().to_string(), test_mse)
        })
        .collect();
    scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    scored.into_iter().enumerate().map(|(i, (name, _))| (name, i + 1)).collect()
}

fn rank_of(ranks: &[(String, usize)], name: &str) -> usize {
    ranks.iter().find(|r| r.0 == name).unwrap().1
}

fn c9_crossover() -> Outcome {
    let t = Instant::now();
    let net = generate_benchmark(21, 29, 2129).unwrap();
    let mut good = 0;
    let mut notes = Vec::new();
    for rep in 0..5u64 {
        let seed = 900 + rep;
        let ds = build_dataset(&net, "gen-21-29", Regime::FULL, 2000, Labeler::Exact, seed).unwrap();
        let ranks: Vec<Vec<(String, usize)>> = [200, 500, 2000].iter().map(|&n| native_ranks(&ds, n, seed)).collect();
        let pr: Vec<usize> = ranks.iter().map(|r| rank_of(r, "polynomial")).collect();
        let mlp: Vec<usize> = ranks.iter().map(|r| rank_of(r, "mlp")).collect();
        // MLP no worse relative to PR at 200 rows than at 2000; PR rank first
        // does not improve (200 -> 500, near its interpolation threshold) and
        // then improves (500 -> 2000).
        let rel = |i: usize| mlp[i] as i64 - pr[i] as i64;
        let ok = rel(0) <= rel(2) && pr[1] >= pr[0] && pr[2] <= pr[1];
        good += ok as usize;
        notes.push(format!("PR {pr:?} MLP {mlp:?}"));
    }
    let el = t.elapsed();
    outcome(good >= 4, format!("{good}/5 replicates show the trend [{}]; time {el:?}", notes.join("; ")))
}

fn c10_numerics() -> Outcome {
    let mut rng = substream(10, 10);
    let mut notes = Vec::new();

    // MLP gradient against central differences.
    let sizes = [5, 10, 5, 1];
    let x: Vec<Vec<f64>> = (0..20).map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let y: Vec<f64> = (0..20).map(|_| rng.gen()).collect();
    let theta = init_parameters(&sizes, &mut rng);
    let (_, grad) = loss_and_gradient(&sizes, &theta, &x, &y);
    let h = 1e-6;
    let fd: Vec<f64> = (0..theta.len())
        .map(|k| {
            let mut up = theta.clone();
            let mut dn = theta.clone();
            up[k] += h;
            dn[k] -= h;
            (loss_and_gradient(&sizes, &up, &x, &y).0 - loss_and_gradient(&sizes, &dn, &x, &y).0) / (2.0 * h)
        })
        .collect();
    let diff: f64 = grad.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = grad.iter().zip(&fd).map(|(a, b)| (a + b).powi(2)).sum::<f64>().sqrt();
    let grad_rel = diff / scale;
    notes.push(format!("MLP gradient rel err {grad_rel:.1e}"));

    // Closed-form fits against the normal-equations oracle.
    let x: Vec<Vec<f64>> = (0..50).map(|_| (0..5).map(|_| rng.gen()).collect()).collect();
    let y: Vec<f64> = x.iter().map(|r| r.iter().sum::<f64>() * 0.3 + rng.gen::<f64>() * 0.1).collect();
    let coef = |spec: &str| -> Vec<f64> {
        let m = FittedModel::fit(&spec.parse().unwrap(), &x, &y).unwrap();
        match m.parameters {
            FittedParameters::Linear(l) => std::iter::once(l.intercept).chain(l.weights).collect(),
            FittedParameters::Polynomial(l) => l.weights,
            _ => unreachable!(),
        }
    };
    let max_gap = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let lin_gap = max_gap(&coef("linear"), &normal_equations(&x, &y, 0.0, true));
    let ridge_gap = max_gap(&coef("ridge"), &normal_equations(&x, &y, 1.0, true));
    let expanded: Vec<Vec<f64>> = x.iter().map(|r| expand_polynomial(r, 2).unwrap()).collect();
    let poly_gap = max_gap(&coef("polynomial"), &normal_equations(&expanded, &y, 0.0, false));
    notes.push(format!("coef gaps linear {lin_gap:.1e} ridge {ridge_gap:.1e} poly {poly_gap:.1e}"));

    // Lasso objective per sweep.
    let (_, trace) = coordinate_descent(&x, &y, 0.1, 0.0, DescentOptions::default()).unwrap();
    let monotone = trace.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    notes.push(format!("lasso {} sweeps monotone {monotone}", trace.len()));

    let n = required_sample_size(0.9, 0.05, 1.96).unwrap();
    notes.push(format!("sample size {n}"));

    let pass = grad_rel <= 1e-5 && lin_gap <= 1e-8 && ridge_gap <= 1e-8 && poly_gap <= 1e-8 && monotone && n == 171;
    outcome(pass, notes.join("; "))
}

fn relnet(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_relnet"))
        .args(args)
        .env_remove("RELNET_THREADS")
        .output()
        .expect("spawn relnet")
}

fn c11_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let bridge = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../networks/bridge.net");
    let bridge = bridge.to_str().unwrap();
    let p = |name: &str| root.join(name).to_str().unwrap().to_string();

    let runs: Vec<(String, Vec<String>)> = vec![
        ("generate".into(), vec!["generate", "--nodes", "15", "--arcs", "30", "--seed", "5", "--uniform", "0.9", "--out"].into_iter().map(String::from).chain([p("generate")]).collect()),
        ("exact".into(), vec!["exact".into(), bridge.into(), "--out".into(), p("exact")]),
        ("mcs".into(), vec!["estimate".into(), bridge.into(), "--method".into(), "mcs".into(), "--nsim".into(), "20000".into(), "--runs".into(), "5".into(), "--seed".into(), "3".into(), "--out".into(), p("mcs")]),
        ("batmcs".into(), vec!["estimate".into(), bridge.into(), "--delta".into(), "3".into(), "--nsim".into(), "20000".into(), "--runs".into(), "5".into(), "--out".into(), p("batmcs")]),
        ("gendata".into(), vec!["gendata".into(), bridge.into(), "--size".into(), "600".into(), "--labeler".into(), "bat-mcs:2:2000".into(), "--seed".into(), "9".into(), "--out".into(), p("gendata")]),
    ];
    let mut failures = Vec::new();
    let mut checked = 0;
    let mut run_and_replay = |name: &str, args: Vec<String>, failures: &mut Vec<String>| {
        let mut full = vec!["--threads".to_string(), "1".to_string()];
        full.extend(args);
        let argv: Vec<&str> = full.iter().map(String::as_str).collect();
        let o = relnet(&argv);
        if !o.status.success() {
            failures.push(format!("{name}: {}", String::from_utf8_lossy(&o.stderr).trim()));
            return;
        }
        let src = root.join(name);
        let manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(src.join("manifest.json")).unwrap()).unwrap();
        let outputs: Vec<String> = manifest["outputs"]
            .as_array()
            .unwrap()
            .iter()
            .map(|o| o["path"].as_str().unwrap().to_string())
            .collect();
        for threads in ["2", "8"] {
            let re: PathBuf = root.join(format!("{name}-replay-{threads}"));
            let o = relnet(&["--threads", threads, "replay", src.join("manifest.json").to_str().unwrap(), "--out", re.to_str().unwrap()]);
            if !o.status.success() {
                failures.push(format!("{name} replay: {}", String::from_utf8_lossy(&o.stderr).trim()));
                continue;
            }
            for f in &outputs {
                checked += 1;
                if fs::read(src.join(f)).ok() != fs::read(re.join(f)).ok() {
                    failures.push(format!("{name}/{f} differs with {threads} threads"));
                }
            }
        }
    };
    for (name, args) in runs {
        run_and_replay(&name, args, &mut failures);
    }
    let csv = p("gendata") + "/dataset.csv";
    run_and_replay(
        "bench",
        ["bench", &csv, "--models", "all-native", "--seed", "4", "--out", &p("bench")].iter().map(|s| s.to_string()).collect(),
        &mut failures,
    );
    outcome(
        failures.is_empty() && checked > 0,
        if failures.is_empty() {
            format!("6 commands, {checked} output files byte-identical across replays with 2 and 8 threads")
        } else {
            failures.join("; ")
        },
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("exact-oracle equivalence", c1_exact_oracle),
        ("worked example 0.634", c2_worked_example),
        ("BAT order law", c3_bat_order),
        ("PLSA oracle equivalence", c4_plsa_oracle),
        ("estimator statistics", c5_estimator_statistics),
        ("degeneracy identities", c6_degeneracy),
        ("high-reliability convergence", c7_high_reliability),
        ("surrogate ordering", c8_surrogate_ordering),
        ("crossover trend", c9_crossover),
        ("numerics", c10_numerics),
        ("determinism", c11_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let r = f();
        let tag = if r.pass { "PASS" } else { "FAIL" };
        failed += !r.pass as usize;
        println!("[{tag}] criterion {id:>2} {name}: {} ({:.1?})", r.detail, t.elapsed());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
