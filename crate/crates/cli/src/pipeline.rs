//! Subcommand implementations. Each stage reads its inputs from the output
//! directory (see `[input]`), writes its artifacts there and returns a report
//! payload; `run` adds `report.{json,csv}` and `manifest.json`.

use std::path::{Path, PathBuf};

use manifold_core::alignment::{
    alignment_residual, apply_transform, icp_verbatim, procrustes_align, AlignMethod, TransformDocument,
};
use manifold_core::cci::{
    embed_dataset, generate_cci, read_jsonl, retrieval_triples, scene_id_of, write_jsonl, write_triples_csv,
    CciConfig, CciDataset,
};
use manifold_core::embedding::{self as embedding, merge, CorrespondenceMap, DomainTag};
use manifold_core::graph::{
    build_epsilon_graph, calibrate_threshold, connected_components, load_graph, save_graph,
};
use manifold_core::loss::{fit_text_embeddings, mean_matched_similarity, write_loss_trace};
use manifold_core::retrieval::{run_retrieval, sample_n_way_k_shot, RetrievalReport};
use manifold_core::smoothness::{
    count_smooth_shortest_paths, random_baseline, smooth_paths, sweep_thresholds, write_paths_jsonl,
    SceneAdjacency, Variant, VertexSceneMap,
};
use manifold_core::{EmbeddingSet64, ManifoldGraph64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Format, LabelScheme, MoveSide};
use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;
use crate::report;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    GenCci,
    Embed,
    Align,
    BuildGraph,
    LabelRetrieval,
    FitText,
    CountSmoothPaths,
    Sweep,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::GenCci => "gen-cci",
            Stage::Embed => "embed",
            Stage::Align => "align",
            Stage::BuildGraph => "build-graph",
            Stage::LabelRetrieval => "label-retrieval",
            Stage::FitText => "fit-text",
            Stage::CountSmoothPaths => "count-smooth-paths",
            Stage::Sweep => "sweep",
        }
    }
}

/// What a stage produced besides the report files.
#[derive(Debug)]
pub struct StageOutput {
    pub report: Value,
    pub csv: Option<String>,
    pub files: Vec<PathBuf>,
}

impl StageOutput {
    fn new(report: Value) -> Self {
        Self {
            report,
            csv: None,
            files: Vec::new(),
        }
    }
}

/// Runs `stage`, then writes the report files and the manifest.
pub fn run(stage: Stage, cfg: &ExperimentConfig, out: &Path, threads: usize) -> CliResult<Manifest> {
    let started = std::time::Instant::now();
    std::fs::create_dir_all(out).map_err(CliError::io)?;
    let mut output = run_stage(stage, cfg, out)?;
    if cfg.output.formats.contains(&Format::Json) {
        let path = out.join("report.json");
        write_json(&path, &output.report)?;
        output.files.push(path);
    }
    if let (true, Some(csv)) = (cfg.output.formats.contains(&Format::Csv), &output.csv) {
        let path = out.join("report.csv");
        std::fs::write(&path, csv).map_err(CliError::io)?;
        output.files.push(path);
    }
    let manifest = Manifest::build(stage, cfg, out, threads, &output.files, started.elapsed())?;
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

pub fn run_stage(stage: Stage, cfg: &ExperimentConfig, out: &Path) -> CliResult<StageOutput> {
    log::info!("running {}", stage.name());
    match stage {
        Stage::GenCci => gen_cci(cfg, out),
        Stage::Embed => embed(cfg, out),
        Stage::Align => align(cfg, out),
        Stage::BuildGraph => build_graph(cfg, out),
        Stage::LabelRetrieval => label_retrieval(cfg, out),
        Stage::FitText => fit_text(cfg, out),
        Stage::CountSmoothPaths => count_smooth_paths(cfg, out),
        Stage::Sweep => sweep(cfg),
    }
}

pub(crate) fn write_json<S: Serialize>(path: &Path, value: &S) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(CliError::io)
}

/// Header path stored next to an edge list.
pub fn graph_header_path(edges: &Path) -> PathBuf {
    let mut s = edges.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn input(out: &Path, p: &Path) -> PathBuf {
    out.join(p)
}

pub fn generate(cfg: &ExperimentConfig) -> CliResult<CciDataset> {
    let c = &cfg.cci;
    let config = CciConfig {
        iterations: c.iterations,
        branching: c.branching,
        min_objects: c.min_objects,
        max_objects: c.max_objects,
    };
    Ok(generate_cci(&config, &mut ChaCha8Rng::seed_from_u64(c.seed))?)
}

/// Image and text embeddings of every scene. Images carry the configured
/// class label; texts are unlabelled.
pub fn embed_scenes(
    cfg: &ExperimentConfig,
    dataset: &CciDataset,
) -> CliResult<(EmbeddingSet64, EmbeddingSet64)> {
    let e = &cfg.embed;
    let scheme = e.label;
    let images = embed_dataset(
        dataset,
        e.dim,
        e.noise_sigma,
        e.seed,
        DomainTag::Image,
        |i| match scheme {
            LabelScheme::Branch => vec![dataset.scenes[dataset.branch_of(i)].id.clone()],
            LabelScheme::None => Vec::new(),
        },
    )?;
    let texts = embed_dataset(dataset, e.dim, e.noise_sigma, e.seed, DomainTag::Text, |_| {
        Vec::new()
    })?;
    Ok((images, texts))
}

/// Pairs `<scene>#image` with `<scene>#text`.
pub fn scene_correspondence(images: &EmbeddingSet64, texts: &EmbeddingSet64) -> CorrespondenceMap {
    CorrespondenceMap::by_key(images, texts, |id| scene_id_of(id).to_string())
}

pub struct Aligned {
    pub images: EmbeddingSet64,
    pub texts: EmbeddingSet64,
    pub document: TransformDocument,
}

/// Moves the configured side onto the other.
pub fn align_sets(
    cfg: &ExperimentConfig,
    images: &EmbeddingSet64,
    texts: &EmbeddingSet64,
) -> CliResult<Aligned> {
    let a = &cfg.align;
    let corr = scene_correspondence(images, texts);
    let (moved, fixed, corr) = match a.moved {
        MoveSide::Text => (texts, images, corr.flipped()),
        MoveSide::Image => (images, texts, corr),
    };
    // `corr` pairs moved ids with fixed ids.
    let alignment = match a.method {
        AlignMethod::Procrustes => procrustes_align(moved, fixed, &corr)?,
        AlignMethod::Verbatim => icp_verbatim(fixed, moved, &corr.flipped())?,
    };
    let before = alignment_residual(moved, fixed, &corr)?;
    let shifted = apply_transform(&alignment.transform, moved, a.renormalize)?;
    let after = alignment_residual(&shifted, fixed, &corr)?;
    let document = TransformDocument::new(&alignment, before, after);
    Ok(match a.moved {
        MoveSide::Text => Aligned {
            images: images.clone(),
            texts: shifted,
            document,
        },
        MoveSide::Image => Aligned {
            images: shifted,
            texts: texts.clone(),
            document,
        },
    })
}

/// ε from `graph.epsilon`, else calibrated on the image points.
pub fn graph_threshold(cfg: &ExperimentConfig, images: &EmbeddingSet64) -> CliResult<f64> {
    match cfg.graph.epsilon {
        Some(eps) => Ok(eps),
        None => Ok(calibrate_threshold(images, cfg.graph.target_edge_ratio)?),
    }
}

fn gen_cci(cfg: &ExperimentConfig, out: &Path) -> CliResult<StageOutput> {
    let dataset = generate(cfg)?;
    let (train, test) = retrieval_triples(&dataset);
    let data_path = out.join("dataset.jsonl");
    let triples_path = out.join("triples.csv");
    write_jsonl(&dataset, &data_path)?;
    write_triples_csv(&train, &test, &triples_path)?;
    let mut o = StageOutput::new(json!({
        "kind": "cci",
        "scenes": dataset.len(),
        "iterations": dataset.last_iteration(),
        "train_triples": train.len(),
        "test_triples": test.len(),
        "avg_reachable": dataset.avg_reachable(),
    }));
    o.files = vec![data_path, triples_path];
    Ok(o)
}

fn embed(cfg: &ExperimentConfig, out: &Path) -> CliResult<StageOutput> {
    let dataset = read_jsonl(&input(out, &cfg.input.dataset))?;
    let (images, texts) = embed_scenes(cfg, &dataset)?;
    let mut o = StageOutput::new(json!({
        "kind": "embed",
        "images": images.len(),
        "texts": texts.len(),
        "dim": cfg.embed.dim,
        "noise_sigma": cfg.embed.noise_sigma,
    }));
    for (set, name) in [(&images, "images.emb"), (&texts, "texts.emb")] {
        let path = out.join(name);
        embedding::save(set, &path)?;
        o.files.push(embedding::sidecar_path(&path));
        o.files.push(path);
    }
    Ok(o)
}

fn fit_text(cfg: &ExperimentConfig, out: &Path) -> CliResult<StageOutput> {
    let images: EmbeddingSet64 = embedding::load(&input(out, &cfg.input.images))?;
    let texts: EmbeddingSet64 = embedding::load(&input(out, &cfg.input.texts))?;
    let corr = scene_correspondence(&images, &texts);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.loss.seed);
    let fit = fit_text_embeddings(&images, &texts, &corr, &cfg.loss.fit_config(), &mut rng)?;
    let before = mean_matched_similarity(&images, &texts, &corr)?;
    let after = mean_matched_similarity(&images, &fit.texts, &corr)?;
    let emb_path = out.join("texts_fitted.emb");
    let trace_path = out.join("loss_trace.csv");
    embedding::save(&fit.texts, &emb_path)?;
    write_loss_trace(&fit.trace, &trace_path)?;
    let mut o = StageOutput::new(json!({
        "kind": "fit_text",
        "steps": fit.trace.len(),
        "initial_loss": fit.trace.first(),
        "final_loss": fit.trace.last(),
        "similarity_before": before,
        "similarity_after": after,
    }));
    o.files = vec![embedding::sidecar_path(&emb_path), emb_path, trace_path];
    Ok(o)
}

fn align(cfg: &ExperimentConfig, out: &Path) -> CliResult<StageOutput> {
    let images: EmbeddingSet64 = embedding::load(&input(out, &cfg.input.images))?;
    let texts: EmbeddingSet64 = embedding::load(&input(out, &cfg.input.texts))?;
    let aligned = align_sets(cfg, &images, &texts)?;
    let mut o = StageOutput::new(json!({
        "kind": "align",
        "method": aligned.document.method,
        "moved": cfg.align.moved,
        "residual_before": aligned.document.residual_before,
        "residual_after": aligned.document.residual_after,
        "degenerate": aligned.document.degenerate,
    }));
    let transform_path = out.join("transform.json");
    write_json(&transform_path, &aligned.document)?;
    o.files.push(transform_path);
    for (set, name) in [
        (&aligned.images, "images_aligned.emb"),
        (&aligned.texts, "texts_aligned.emb"),
    ] {
        let path = out.join(name);
        embedding::save(set, &path)?;
        o.files.push(embedding::sidecar_path(&path));
        o.files.push(path);
    }
    Ok(o)
}

fn build_graph(cfg: &ExperimentConfig, out: &Path) -> CliResult<StageOutput> {
    let images: EmbeddingSet64 = embedding::load(&input(out, &cfg.input.aligned_images))?;
    let vertices = if cfg.graph.include_text {
        let texts: EmbeddingSet64 = embedding::load(&input(out, &cfg.input.aligned_texts))?;
        merge(&images, &texts)?
    } else {
        images.clone()
    };
    let eps = graph_threshold(cfg, &images)?;
    let graph = build_epsilon_graph(&vertices, eps);
    let components = connected_components(&graph)
        .into_iter()
        .max()
        .map_or(0, |m| m + 1);
    let vert_path = out.join("vertices.emb");
    let edges_path = out.join("graph.edges");
    let header_path = graph_header_path(&edges_path);
    embedding::save(&vertices, &vert_path)?;
    save_graph(&graph, &edges_path, &header_path)?;
    let mut o = StageOutput::new(json!({
        "kind": "graph",
        "epsilon": eps,
        "vertices": graph.len(),
        "image_vertices": images.len(),
        "edges": graph.edge_count(),
        "components": components,
    }));
    o.files = vec![
        embedding::sidecar_path(&vert_path),
        vert_path,
        edges_path,
        header_path,
    ];
    Ok(o)
}

fn load_vertex_graph(cfg: &ExperimentConfig, out: &Path) -> CliResult<(EmbeddingSet64, ManifoldGraph64)> {
    let vert_path = input(out, &cfg.input.vertices);
    let edges_path = input(out, &cfg.input.graph);
    let vertices: EmbeddingSet64 = embedding::load(&vert_path)?;
    let graph: ManifoldGraph64 = load_graph(&edges_path, &graph_header_path(&edges_path))?;
    let consistent = graph.len() == vertices.len() && (0..graph.len()).all(|v| graph.id(v) == vertices.id(v));
    if !consistent {
        return Err(manifold_core::Error::InvalidArgument(format!(
            "{} and {} describe different vertices",
            edges_path.display(),
            vert_path.display()
        ))
        .into());
    }
    Ok((vertices, graph))
}

fn feature_space(set: &EmbeddingSet64) -> &'static str {
    if set.domains().contains(&DomainTag::Text) {
        "image+text"
    } else {
        "image"
    }
}

fn label_retrieval(cfg: &ExperimentConfig, out: &Path) -> CliResult<StageOutput> {
    let (vertices, graph) = load_vertex_graph(cfg, out)?;
    let protocol = cfg.label.protocol();
    let split = sample_n_way_k_shot(&vertices, &protocol)?;
    let space = feature_space(&vertices);
    let reports = cfg
        .label
        .methods
        .iter()
        .map(|&m| {
            let r = run_retrieval(&vertices, &graph, &split, &protocol, m)?;
            Ok(r.tagged(m.name(), space))
        })
        .collect::<CliResult<Vec<RetrievalReport>>>()?;
    let mut o = StageOutput::new(json!({
        "kind": report::LABEL_KIND,
        "epsilon": graph.threshold(),
        "classes": split.classes,
        "targets": split.targets.len(),
        "queries": split.queries.len(),
        "reports": reports,
    }));
    o.csv = Some(report::label_table(&reports));
    Ok(o)
}

fn count_smooth_paths(cfg: &ExperimentConfig, out: &Path) -> CliResult<StageOutput> {
    let dataset = read_jsonl(&input(out, &cfg.input.dataset))?;
    let (vertices, graph) = load_vertex_graph(cfg, out)?;
    let map = VertexSceneMap::from_set(&vertices, &dataset)?;
    let adj = SceneAdjacency::new(&dataset);
    let count = count_smooth_shortest_paths(&graph, &map, &adj);
    let mut o = StageOutput::new(json!({
        "kind": "smooth_paths",
        "threshold": graph.threshold(),
        "vertices": graph.len(),
        "edges": graph.edge_count(),
        "count": count.count,
        "ln_count": count.ln_count,
        "log_base": "e",
    }));
    if cfg.smooth.dump_paths > 0 {
        let paths = smooth_paths(&graph, &map, &adj, &dataset, cfg.smooth.dump_paths);
        let path = out.join("paths.jsonl");
        write_paths_jsonl(&paths, &path)?;
        o.files.push(path);
    }
    Ok(o)
}

/// Ψ, Ψ + random and Ψ + aligned Φ at each threshold.
fn sweep(cfg: &ExperimentConfig) -> CliResult<StageOutput> {
    let dataset = generate(cfg)?;
    let (images, mut texts) = embed_scenes(cfg, &dataset)?;
    let mut fit_summary = Value::Null;
    if cfg.sweep.fit_text {
        let corr = scene_correspondence(&images, &texts);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.loss.seed);
        let fit = fit_text_embeddings(&images, &texts, &corr, &cfg.loss.fit_config(), &mut rng)?;
        fit_summary = json!({
            "steps": fit.trace.len(),
            "initial_loss": fit.trace.first(),
            "final_loss": fit.trace.last(),
        });
        texts = fit.texts;
    }
    let aligned = align_sets(cfg, &images, &texts)?;
    let thresholds: Vec<f64> = if cfg.sweep.thresholds.is_empty() {
        let mut t = cfg
            .sweep
            .edge_ratios
            .iter()
            .map(|&r| calibrate_threshold(&aligned.images, r))
            .collect::<manifold_core::Result<Vec<f64>>>()?;
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    } else {
        cfg.sweep.thresholds.clone()
    };
    let random = random_baseline(&aligned.texts, cfg.sweep.random_seed)?;
    let variants = vec![
        Variant {
            name: "psi".into(),
            set: aligned.images.clone(),
        },
        Variant {
            name: "psi_random".into(),
            set: merge(&aligned.images, &random)?,
        },
        Variant {
            name: "psi_phi".into(),
            set: merge(&aligned.images, &aligned.texts)?,
        },
    ];
    let rows = sweep_thresholds(&variants, &thresholds, &dataset)?;
    let mut o = StageOutput::new(json!({
        "kind": report::PATH_KIND,
        "log_base": "e",
        "scenes": dataset.len(),
        "avg_reachable": dataset.avg_reachable(),
        "fit": fit_summary,
        "alignment": {
            "method": aligned.document.method,
            "residual_before": aligned.document.residual_before,
            "residual_after": aligned.document.residual_after,
        },
        "rows": rows,
    }));
    o.csv = Some(report::path_table(&rows)?);
    Ok(o)
}
