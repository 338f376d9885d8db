//! Acceptance criteria 1-9, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines are always printed; exits non-zero on any failure.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use manifold_core::alignment::{
    apply_transform, procrustes_align, procrustes_points, transformed_residual, RigidTransform,
};
use manifold_core::cci::{generate_cci, read_jsonl, retrieval_triples, CciConfig};
use manifold_core::embedding::{merge, DomainTag, EmbeddingSet};
use manifold_core::graph::{build_epsilon_graph, calibrate_threshold, dijkstra, ManifoldGraph};
use manifold_core::linalg::random_rotation;
use manifold_core::loss::{loss_gradient, ranking_loss, Batch};
use manifold_core::retrieval::{
    run_retrieval, sample_n_way_k_shot, RetrievalMethod, RetrievalMode, RetrievalProtocol,
};
use manifold_core::smoothness::{
    count_smooth_shortest_paths, count_smooth_shortest_paths_reference, SceneAdjacency, VertexSceneMap,
};
use manifold_core::synthetic::ArcWorld;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;

struct Outcome {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

fn within(outcome: Outcome, elapsed: Duration, budget: Duration) -> Outcome {
    let ok = outcome.ok && elapsed <= budget;
    check(
        ok,
        format!(
            "{}; {:.1}s (budget {}s)",
            outcome.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        ),
    )
}

fn manifold(args: &[&str], config: &Path, out: &Path, threads: usize) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_manifold"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg(threads.to_string())
        .env_remove("MANIFOLD_OUT")
        .output()
        .map_err(|e| e.to_string())?;
    if status.status.success() {
        Ok(())
    } else {
        Err(format!(
            "`manifold {}` exited {:?}: {}",
            args.join(" "),
            status.status.code(),
            String::from_utf8_lossy(&status.stderr).trim()
        ))
    }
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn unit_gaussian(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn criterion_1(work: &Path) -> Result<Outcome, String> {
    let cfg = write_config(
        work,
        "c1.toml",
        "[cci]\niterations = 4\nbranching = 10\nseed = 1\n",
    );
    let out = work.join("c1");
    manifold(&["gen-cci"], &cfg, &out, 0)?;
    let dataset = read_jsonl(&out.join("dataset.jsonl")).map_err(|e| e.to_string())?;
    let records = std::fs::read_to_string(out.join("dataset.jsonl"))
        .unwrap()
        .lines()
        .count();
    let unique: HashSet<_> = dataset.scenes.iter().map(|s| s.key()).collect();
    let (train, test) = retrieval_triples(&dataset);
    let report = read_json(&out.join("report.json"));
    let ok = records == 11_111
        && unique.len() == 11_111
        && train.len() == 1_110
        && test.len() == 10_000
        && report["train_triples"] == 1_110
        && report["test_triples"] == 10_000;
    Ok(check(
        ok,
        format!(
            "{records} records, {} unique scenes, {} train / {} test",
            unique.len(),
            train.len(),
            test.len()
        ),
    ))
}

fn criterion_2() -> Outcome {
    let (d, n) = (16, 200);
    let mut worst = 0.0f64;
    let mut proper = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src: Vec<Vec<f64>> = (0..n).map(|_| unit_gaussian(&mut rng, d)).collect();
        let truth = RigidTransform::new(
            random_rotation(&mut rng, d),
            (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let dst: Vec<Vec<f64>> = src.iter().map(|v| truth.apply(v)).collect();
        let a = procrustes_points(&src, &dst).unwrap();
        let rms = transformed_residual(&a.transform, &src, &dst).unwrap();
        worst = worst.max(rms);
        if (a.transform.determinant() - 1.0).abs() < 1e-9 {
            proper += 1;
        }
    }
    check(
        worst < 1e-9 && proper == 100,
        format!("max RMS {worst:.2e}, det = +1 in {proper}/100"),
    )
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> ManifoldGraph<f64> {
    let p = rng.gen_range(0.1..0.6);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                // Open interval (0, 1).
                let w = loop {
                    let w: f64 = rng.gen();
                    if w > 0.0 {
                        break w;
                    }
                };
                edges.push((a, b, w));
            }
        }
    }
    ManifoldGraph::from_weighted_edges(n, &edges).unwrap()
}

fn bellman_ford(g: &ManifoldGraph<f64>, s: usize) -> Vec<Option<f64>> {
    let mut dist = vec![None; g.len()];
    dist[s] = Some(0.0);
    for _ in 0..g.len() {
        let mut changed = false;
        for u in 0..g.len() {
            let Some(du) = dist[u] else { continue };
            for &(v, w) in g.neighbors(u) {
                if dist[v].map_or(true, |dv| du + w < dv) {
                    dist[v] = Some(du + w);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

fn simple_paths(g: &ManifoldGraph<f64>, s: usize) -> Vec<f64> {
    fn walk(g: &ManifoldGraph<f64>, u: usize, len: f64, seen: &mut [bool], best: &mut [f64]) {
        best[u] = best[u].min(len);
        for &(v, w) in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                walk(g, v, len + w, seen, best);
                seen[v] = false;
            }
        }
    }
    let mut best = vec![f64::INFINITY; g.len()];
    let mut seen = vec![false; g.len()];
    seen[s] = true;
    walk(g, s, 0.0, &mut seen, &mut best);
    best
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut bf_mismatch, mut brute_graphs, mut worst) = (0usize, 0usize, 0.0f64);
    for i in 0..200 {
        let n = if i % 2 == 0 {
            rng.gen_range(2..=10)
        } else {
            rng.gen_range(11..=50)
        };
        let g = random_graph(&mut rng, n);
        let small = n <= 10;
        brute_graphs += small as usize;
        for s in 0..n {
            let r = dijkstra(&g, s);
            let bf = bellman_ford(&g, s);
            bf_mismatch += (0..n).filter(|&v| r.distance(v) != bf[v]).count();
            if small {
                let brute = simple_paths(&g, s);
                for v in 0..n {
                    match r.distance(v) {
                        Some(d) => worst = worst.max((d - brute[v]).abs()),
                        None if brute[v].is_finite() => worst = f64::INFINITY,
                        None => {}
                    }
                }
            }
        }
    }
    check(
        bf_mismatch == 0 && worst <= 1e-12,
        format!("200 graphs: {bf_mismatch} Bellman-Ford mismatches; {brute_graphs} brute-forced, max diff {worst:.1e}"),
    )
}

fn criterion_4() -> Outcome {
    let e = std::f64::consts::E;
    let closed = Batch::new(
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
    )
    .unwrap();
    let expected = -(e / (e + 1.0)).ln();
    let closed_err = (ranking_loss(&closed) - expected).abs();

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let b = rng.gen_range(1..=8);
        let d = rng.gen_range(1..=16);
        let images: Vec<Vec<f64>> = (0..b).map(|_| unit_gaussian(&mut rng, d)).collect();
        let texts: Vec<Vec<f64>> = (0..b).map(|_| unit_gaussian(&mut rng, d)).collect();
        let grads = loss_gradient(&Batch::new(images.clone(), texts.clone()).unwrap());
        let (mut diff, mut scale) = (0.0f64, 0.0f64);
        for side in 0..2 {
            for i in 0..b {
                for k in 0..d {
                    let eval = |delta: f64| {
                        let (mut im, mut tx) = (images.clone(), texts.clone());
                        if side == 0 {
                            im[i][k] += delta;
                        } else {
                            tx[i][k] += delta;
                        }
                        ranking_loss(&Batch::new(im, tx).unwrap())
                    };
                    let numeric = (eval(h) - eval(-h)) / (2.0 * h);
                    let analytic = if side == 0 {
                        grads.images[i][k]
                    } else {
                        grads.texts[i][k]
                    };
                    diff += (numeric - analytic).powi(2);
                    scale = scale.max(numeric.abs()).max(analytic.abs());
                }
            }
        }
        let norm_scale = scale.max(1e-8);
        worst = worst.max(diff.sqrt() / norm_scale);
    }
    check(
        closed_err < 1e-12 && worst < 1e-5,
        format!(
            "closed form error {closed_err:.1e}; max gradient relative error {worst:.1e} over 50 batches"
        ),
    )
}

fn criterion_5() -> Outcome {
    let (mut geo, mut euc) = (0.0, 0.0);
    for seed in 0..20u64 {
        let world = ArcWorld {
            seed,
            dim: 16,
            ..ArcWorld::default()
        };
        let set: EmbeddingSet<f64> = world.images().unwrap();
        let graph = build_epsilon_graph(&set, 0.03);
        let protocol = RetrievalProtocol {
            n_way: 2,
            k_shot: 5,
            seed,
            retrievability_mode: Some(RetrievalMode::GraphReachability),
            ..RetrievalProtocol::default()
        };
        let split = sample_n_way_k_shot(&set, &protocol).unwrap();
        geo += run_retrieval(&set, &graph, &split, &protocol, RetrievalMethod::Geodesic)
            .unwrap()
            .accuracy;
        euc += run_retrieval(&set, &graph, &split, &protocol, RetrievalMethod::Euclidean)
            .unwrap()
            .accuracy;
    }
    let (geo, euc) = (geo / 20.0, euc / 20.0);
    check(
        geo - euc >= 0.05,
        format!(
            "mean R@1 geodesic {geo:.4} vs euclidean {euc:.4} (gap {:.4})",
            geo - euc
        ),
    )
}

fn criterion_6() -> Outcome {
    let eps = 0.03;
    let (mut increased, mut before, mut after) = (0, 0usize, 0usize);
    let mut worst_change = 0.0f64;
    let (mut acc_img, mut acc_joint) = (0.0, 0.0);
    for seed in 0..20u64 {
        let world = ArcWorld {
            seed,
            dim: 16,
            per_class: 60,
            ..ArcWorld::default()
        };
        let (images, texts, corr) = world.images_with_texts::<f64>(0.05).unwrap();
        // Texts start in their own frame and are aligned back.
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let skew = RigidTransform::new(random_rotation(&mut rng, 16), vec![0.0; 16]).unwrap();
        let texts = apply_transform(&skew, &texts, true).unwrap();
        let a = procrustes_align(&texts, &images, &corr.flipped()).unwrap();
        let texts = apply_transform(&a.transform, &texts, true).unwrap();
        let joint = merge(&images, &texts).unwrap();
        let protocol = RetrievalProtocol {
            n_way: 2,
            k_shot: 5,
            seed,
            ..RetrievalProtocol::default()
        };
        let split = sample_n_way_k_shot(&images, &protocol).unwrap();
        let r_img = run_retrieval(
            &images,
            &build_epsilon_graph(&images, eps),
            &split,
            &protocol,
            RetrievalMethod::Geodesic,
        )
        .unwrap();
        let r_joint = run_retrieval(
            &joint,
            &build_epsilon_graph(&joint, eps),
            &split,
            &protocol,
            RetrievalMethod::Geodesic,
        )
        .unwrap();
        increased += (r_joint.retrievable_count > r_img.retrievable_count) as usize;
        before += r_img.retrievable_count;
        after += r_joint.retrievable_count;
        acc_img += r_img.accuracy;
        acc_joint += r_joint.accuracy;
        worst_change = worst_change.max((r_joint.accuracy - r_img.accuracy).abs());
    }
    let change = (acc_joint - acc_img).abs() / 20.0;
    check(
        increased == 20 && change < 0.05,
        format!(
            "retrievable up in {increased}/20 seeds ({before} -> {after} total); mean R@1 {:.4} -> {:.4} (change {change:.4}, worst seed {worst_change:.4})",
            acc_img / 20.0,
            acc_joint / 20.0
        ),
    )
}

const SWEEP_CONFIG: &str = "[cci]\niterations = 3\nbranching = 10\nseed = 1\n\n[embed]\ndim = 32\nnoise_sigma = 0.05\nseed = 1\n\n[loss]\nseed = 1\n\n[sweep]\nedge_ratios = [2.0, 4.0, 8.0]\nrandom_seed = 1\n";

fn criterion_7(work: &Path) -> Result<Outcome, String> {
    let cfg = write_config(work, "c7.toml", SWEEP_CONFIG);
    let out = work.join("c7");
    manifold(&["sweep"], &cfg, &out, 0)?;
    let report = read_json(&out.join("report.json"));
    let rows = report["rows"].as_array().ok_or("no rows")?;
    let mut ok = report["scenes"] == 1_111 && rows.len() >= 3;
    let mut cells = Vec::new();
    for row in rows {
        let count = |name: &str| -> u64 {
            row["variants"]
                .as_array()
                .and_then(|vs| vs.iter().find(|v| v["variant"] == name))
                .and_then(|v| v["count"].as_u64())
                .unwrap_or(0)
        };
        let (psi, rnd, phi) = (count("psi"), count("psi_random"), count("psi_phi"));
        ok &= phi > rnd && rnd >= psi;
        cells.push(format!(
            "eps {:.4}: {psi}/{rnd}/{phi}",
            row["threshold"].as_f64().unwrap_or(0.0)
        ));
    }
    Ok(check(
        ok,
        format!("psi/psi_random/psi_phi counts: {}", cells.join(", ")),
    ))
}

fn criterion_8() -> Outcome {
    let mut agree = 0;
    let mut samples = Vec::new();
    for seed in 0..10u64 {
        let dataset = generate_cci(
            &CciConfig {
                iterations: 2,
                branching: 10,
                ..CciConfig::default()
            },
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
        .unwrap();
        let embed = |domain| {
            manifold_core::cci::embed_dataset::<f64, _>(&dataset, 16, 0.05, seed, domain, |_| Vec::new())
                .unwrap()
        };
        let images = embed(DomainTag::Image);
        let joint = merge(&images, &embed(DomainTag::Text)).unwrap();
        let eps = calibrate_threshold(&images, 4.0).unwrap();
        let graph = build_epsilon_graph(&joint, eps);
        let map = VertexSceneMap::from_set(&joint, &dataset).unwrap();
        let fast = count_smooth_shortest_paths(&graph, &map, &SceneAdjacency::new(&dataset)).count;
        let slow = count_smooth_shortest_paths_reference(&graph, &map, &dataset);
        agree += (fast == slow) as usize;
        samples.push(format!("{fast}"));
        assert!(joint.len() <= 500);
    }
    check(
        agree == 10,
        format!("{agree}/10 seeds agree (counts {})", samples.join(",")),
    )
}

/// Every stage twice, with 1 and 4 threads; all outputs except the manifest
/// must match byte for byte.
fn criterion_9(work: &Path) -> Result<Outcome, String> {
    let cfg = write_config(
        work,
        "c9.toml",
        "[cci]\niterations = 2\nseed = 5\n\n[embed]\ndim = 16\nseed = 5\n\n[loss]\nsteps = 50\n\n[label]\nn_way = 3\nk_shot = 3\n\n[smooth]\ndump_paths = 20\n\n[sweep]\nedge_ratios = [2.0, 4.0]\n",
    );
    let stages = [
        "gen-cci",
        "embed",
        "fit-text",
        "align",
        "build-graph",
        "label-retrieval",
        "count-smooth-paths",
    ];
    let mut compared = 0;
    let mut differing = Vec::new();
    let dirs = [(work.join("c9_t1"), 1), (work.join("c9_t4"), 4)];
    for stage in stages.iter().chain(&["sweep"]) {
        for (dir, threads) in &dirs {
            let dir = if *stage == "sweep" {
                dir.join("sweep")
            } else {
                dir.clone()
            };
            manifold(&[stage], &cfg, &dir, *threads)?;
        }
        // Reports are overwritten by each stage, so compare them now.
        let sub = if *stage == "sweep" { "sweep" } else { "" };
        for name in ["report.json", "report.csv"] {
            let a = std::fs::read(dirs[0].0.join(sub).join(name));
            let b = std::fs::read(dirs[1].0.join(sub).join(name));
            if let (Ok(a), Ok(b)) = (a, b) {
                compared += 1;
                if a != b {
                    differing.push(format!("{stage}:{name}"));
                }
            }
        }
    }
    // Artifacts persist across stages; compare them once at the end.
    let names: Vec<_> = std::fs::read_dir(&dirs[0].0)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name())
        .filter(|n| n != "manifest.json")
        .collect();
    for n in &names {
        compared += 1;
        if std::fs::read(dirs[0].0.join(n)).ok() != std::fs::read(dirs[1].0.join(n)).ok() {
            differing.push(n.to_string_lossy().into_owned());
        }
    }
    // Manifests agree on everything but timing and thread count.
    let m1 = read_json(&dirs[0].0.join("sweep/manifest.json"));
    let m4 = read_json(&dirs[1].0.join("sweep/manifest.json"));
    let same_manifest = m1["config_sha256"] == m4["config_sha256"] && m1["outputs"] == m4["outputs"];
    Ok(check(
        differing.is_empty() && same_manifest,
        format!("{compared} files compared across --threads 1/4, differing: {differing:?}"),
    ))
}

fn main() {
    let work = tempfile::tempdir().expect("temp dir");
    let work = work.path();
    let minute = Duration::from_secs(60);
    type Run<'a> = Box<dyn Fn() -> Result<Outcome, String> + 'a>;
    let criteria: Vec<(&str, Duration, Run)> = vec![
        (
            "cci counting identities",
            Duration::from_secs(30),
            Box::new(|| criterion_1(work)),
        ),
        (
            "procrustes recovery",
            Duration::from_secs(5),
            Box::new(|| Ok(criterion_2())),
        ),
        (
            "dijkstra oracle equivalence",
            minute,
            Box::new(|| Ok(criterion_3())),
        ),
        (
            "ranking loss and gradients",
            Duration::from_secs(10),
            Box::new(|| Ok(criterion_4())),
        ),
        ("geodesic beats euclidean", minute, Box::new(|| Ok(criterion_5()))),
        (
            "text vertices raise retrievability",
            minute,
            Box::new(|| Ok(criterion_6())),
        ),
        (
            "smooth path ordering",
            10 * minute,
            Box::new(|| criterion_7(work)),
        ),
        (
            "smooth path oracle equivalence",
            2 * minute,
            Box::new(|| Ok(criterion_8())),
        ),
        (
            "cli determinism across threads",
            10 * minute,
            Box::new(|| criterion_9(work)),
        ),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = match run() {
            Ok(o) => within(o, start.elapsed(), *budget),
            Err(e) => check(false, e),
        };
        failed += !outcome.ok as usize;
        println!(
            "[{}] {} {}: {}",
            if outcome.ok { "PASS" } else { "FAIL" },
            i + 1,
            name,
            outcome.detail
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
