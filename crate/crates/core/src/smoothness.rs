//! Smooth transitions and smooth shortest paths over a scene world.
//!
//! Each graph vertex stands for a scene: an image vertex for the scene it
//! shows, a text vertex for the scene its caption describes. A step between
//! two vertices is smooth when their scenes are one modification apart, or
//! are the same scene. A path is smooth when every step is smooth and no two
//! non-adjacent vertices on it are.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cci::{is_reachable, scene_id_of, CciDataset, ReachabilityIndex};
use crate::embedding::{unit, DomainTag, EmbeddingSet};
use crate::error::{Error, Result};
use crate::graph::{build_epsilon_graph, connected_components, dijkstra, ManifoldGraph};
use crate::scalar::Real;

/// Dataset scene index for every graph vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexSceneMap {
    scenes: Vec<usize>,
}

impl VertexSceneMap {
    pub fn new(scenes: Vec<usize>) -> Self {
        Self { scenes }
    }

    /// Maps ids of the form `<scene id>#<suffix>` (or bare scene ids).
    pub fn from_ids<'a, I>(ids: I, dataset: &CciDataset) -> Result<Self>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let by_id: std::collections::HashMap<&str, usize> = dataset
            .scenes
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.as_str(), i))
            .collect();
        let scenes = ids
            .into_iter()
            .map(|id| {
                by_id
                    .get(scene_id_of(id))
                    .copied()
                    .ok_or_else(|| Error::UnknownId(id.to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(Self { scenes })
    }

    pub fn from_set<T: Real>(set: &EmbeddingSet<T>, dataset: &CciDataset) -> Result<Self> {
        Self::from_ids(set.ids().iter().map(String::as_str), dataset)
    }

    pub fn scene(&self, vertex: usize) -> usize {
        self.scenes[vertex]
    }

    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }
}

/// Reachable-neighbour lists for every scene of a dataset.
#[derive(Debug, Clone)]
pub struct SceneAdjacency {
    neighbors: Vec<Vec<usize>>,
}

impl SceneAdjacency {
    pub fn new(dataset: &CciDataset) -> Self {
        let index = ReachabilityIndex::new(dataset);
        let neighbors = dataset.scenes.par_iter().map(|s| index.neighbors(s)).collect();
        Self { neighbors }
    }

    /// Reachable, or the same scene.
    pub fn smooth(&self, a: usize, b: usize) -> bool {
        a == b || self.neighbors[a].binary_search(&b).is_ok()
    }

    pub fn neighbors(&self, scene: usize) -> &[usize] {
        &self.neighbors[scene]
    }
}

pub fn is_smooth_transition(a: usize, b: usize, map: &VertexSceneMap, adj: &SceneAdjacency) -> bool {
    adj.smooth(map.scene(a), map.scene(b))
}

pub fn is_smooth_path(path: &[usize], map: &VertexSceneMap, adj: &SceneAdjacency) -> bool {
    if path.len() < 2 {
        return false;
    }
    for i in 0..path.len() {
        for j in i + 1..path.len() {
            let smooth = is_smooth_transition(path[i], path[j], map, adj);
            if smooth != (j == i + 1) {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathCount {
    pub count: u64,
    /// Natural log of `count`; absent when the count is zero.
    pub ln_count: Option<f64>,
}

impl PathCount {
    pub fn new(count: u64) -> Self {
        Self {
            count,
            ln_count: (count > 0).then(|| (count as f64).ln()),
        }
    }
}

/// Smooth-path flags for every vertex settled from `source`: `ok[v]` holds
/// when the deterministic shortest path `source..v` is smooth (the source
/// alone counts as smooth). Extending a smooth path to `pred` by `v` stays
/// smooth iff the new step is smooth and `v` is not smooth with any earlier
/// vertex on the path.
fn smooth_prefixes<T: Real>(
    graph: &ManifoldGraph<T>,
    source: usize,
    map: &VertexSceneMap,
    adj: &SceneAdjacency,
) -> (crate::graph::GeodesicResult<T>, Vec<bool>) {
    let r = dijkstra(graph, source);
    let mut ok = vec![false; graph.len()];
    ok[source] = true;
    for &v in r.settle_order() {
        let Some(pred) = r.predecessor(v) else { continue };
        if !ok[pred] || !is_smooth_transition(pred, v, map, adj) {
            continue;
        }
        let sv = map.scene(v);
        let mut u = r.predecessor(pred);
        let mut clean = true;
        while let Some(x) = u {
            if adj.smooth(map.scene(x), sv) {
                clean = false;
                break;
            }
            u = r.predecessor(x);
        }
        ok[v] = clean;
    }
    (r, ok)
}

fn image_vertices<T: Real>(graph: &ManifoldGraph<T>) -> Vec<usize> {
    (0..graph.len())
        .filter(|&v| graph.domain(v) == DomainTag::Image)
        .collect()
}

/// Counts ordered pairs of distinct image vertices whose shortest path is
/// smooth. Text vertices only ever appear inside paths.
pub fn count_smooth_shortest_paths<T: Real>(
    graph: &ManifoldGraph<T>,
    map: &VertexSceneMap,
    adj: &SceneAdjacency,
) -> PathCount {
    let count = image_vertices(graph)
        .par_iter()
        .map(|&s| {
            let (r, ok) = smooth_prefixes(graph, s, map, adj);
            r.settle_order()
                .iter()
                .filter(|&&t| t != s && ok[t] && graph.domain(t) == DomainTag::Image)
                .count() as u64
        })
        .sum();
    PathCount::new(count)
}

/// One counted path, for inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothPath {
    pub vertices: Vec<String>,
    pub scenes: Vec<String>,
    pub length: f64,
}

/// Every counted smooth path, ordered by (source, target), at most `limit`.
pub fn smooth_paths<T: Real>(
    graph: &ManifoldGraph<T>,
    map: &VertexSceneMap,
    adj: &SceneAdjacency,
    dataset: &CciDataset,
    limit: usize,
) -> Vec<SmoothPath> {
    let mut out = Vec::new();
    for s in image_vertices(graph) {
        if out.len() >= limit {
            break;
        }
        let (r, ok) = smooth_prefixes(graph, s, map, adj);
        let mut targets: Vec<usize> = r
            .settle_order()
            .iter()
            .copied()
            .filter(|&t| t != s && ok[t] && graph.domain(t) == DomainTag::Image)
            .collect();
        targets.sort_unstable();
        for t in targets.into_iter().take(limit - out.len()) {
            let path = r.path_to(t).expect("settled vertex has a path");
            out.push(SmoothPath {
                vertices: path.iter().map(|&v| graph.id(v).to_string()).collect(),
                scenes: path
                    .iter()
                    .map(|&v| dataset.scenes[map.scene(v)].id.clone())
                    .collect(),
                length: r.distance(t).expect("reachable").to_f64_lossy(),
            });
        }
    }
    out
}

pub fn write_paths_jsonl(paths: &[SmoothPath], path: &Path) -> Result<()> {
    let mut out = String::new();
    for p in paths {
        out.push_str(&serde_json::to_string(p).expect("path serializes"));
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Independent recount: Bellman-Ford distances from every image vertex,
/// predecessors re-derived with the same tie rule (smallest index among
/// exact minimisers), and the path predicate evaluated from scratch with
/// the pairwise reachability rules.
pub fn count_smooth_shortest_paths_reference<T: Real>(
    graph: &ManifoldGraph<T>,
    map: &VertexSceneMap,
    dataset: &CciDataset,
) -> u64 {
    let n = graph.len();
    let smooth = |a: usize, b: usize| {
        let (sa, sb) = (map.scene(a), map.scene(b));
        sa == sb || is_reachable(&dataset.scenes[sa], &dataset.scenes[sb])
    };
    let mut count = 0;
    for s in image_vertices(graph) {
        let mut dist: Vec<Option<T>> = vec![None; n];
        dist[s] = Some(T::zero());
        loop {
            let mut changed = false;
            for u in 0..n {
                let Some(du) = dist[u] else { continue };
                for &(v, w) in graph.neighbors(u) {
                    let cand = du + w;
                    if dist[v].map_or(true, |dv| cand < dv) {
                        dist[v] = Some(cand);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let pred = |t: usize| -> usize {
            (0..n)
                .filter(|&u| u != t)
                .find(|&u| {
                    matches!((dist[u], graph.weight(u, t)), (Some(du), Some(w)) if du + w == dist[t].unwrap())
                })
                .expect("reachable vertex has a predecessor")
        };
        for t in 0..n {
            if t == s || dist[t].is_none() || graph.domain(t) != DomainTag::Image {
                continue;
            }
            let mut path = vec![t];
            let mut v = t;
            while v != s {
                v = pred(v);
                path.push(v);
            }
            path.reverse();
            let ok = (0..path.len())
                .all(|i| (i + 1..path.len()).all(|j| smooth(path[i], path[j]) == (j == i + 1)));
            count += ok as u64;
        }
    }
    count
}

/// Ordered pairs of distinct image vertices joined by some path.
pub fn reachable_image_pairs<T: Real>(graph: &ManifoldGraph<T>) -> u64 {
    let comp = connected_components(graph);
    let mut sizes = vec![0u64; graph.len()];
    for v in image_vertices(graph) {
        sizes[comp[v]] += 1;
    }
    sizes.iter().map(|&m| m * m.saturating_sub(1)).sum()
}

/// Uniform random unit vectors with the ids, domains and labels of `like`.
pub fn random_baseline<T: Real>(like: &EmbeddingSet<T>, seed: u64) -> Result<EmbeddingSet<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = like.dim();
    let vectors = (0..like.len())
        .map(|_| loop {
            let v: Vec<T> = (0..d)
                .map(|_| T::from_f64_lossy(StandardNormal.sample(&mut rng)))
                .collect();
            if let Some(u) = unit(&v) {
                break u;
            }
        })
        .collect();
    like.with_vectors(vectors)
}

/// A named feature space: images, optionally joined by extra text points.
#[derive(Debug, Clone)]
pub struct Variant<T> {
    pub name: String,
    pub set: EmbeddingSet<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantCount {
    pub variant: String,
    pub count: u64,
    pub ln_count: Option<f64>,
    pub edges: usize,
    pub reachable_pairs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCountReport {
    pub threshold: f64,
    pub log_base: String,
    pub variants: Vec<VariantCount>,
}

impl PathCountReport {
    pub fn count(&self, variant: &str) -> Option<u64> {
        self.variants
            .iter()
            .find(|v| v.variant == variant)
            .map(|v| v.count)
    }
}

/// Builds the ε-graph of every variant at every threshold and counts smooth
/// shortest paths.
pub fn sweep_thresholds<T: Real>(
    variants: &[Variant<T>],
    thresholds: &[T],
    dataset: &CciDataset,
) -> Result<Vec<PathCountReport>> {
    let adj = SceneAdjacency::new(dataset);
    let maps = variants
        .iter()
        .map(|v| VertexSceneMap::from_set(&v.set, dataset))
        .collect::<Result<Vec<_>>>()?;
    Ok(thresholds
        .iter()
        .map(|&eps| PathCountReport {
            threshold: eps.to_f64_lossy(),
            log_base: "e".into(),
            variants: variants
                .iter()
                .zip(&maps)
                .map(|(v, map)| {
                    let graph = build_epsilon_graph(&v.set, eps);
                    let c = count_smooth_shortest_paths(&graph, map, &adj);
                    log::info!("eps {eps:.4} {}: {} smooth paths", v.name, c.count);
                    VariantCount {
                        variant: v.name.clone(),
                        count: c.count,
                        ln_count: c.ln_count,
                        edges: graph.edge_count(),
                        reachable_pairs: reachable_image_pairs(&graph),
                    }
                })
                .collect(),
        })
        .collect())
}

/// `threshold,<variant>...` with natural-log counts, then raw counts.
pub fn write_sweep_csv(reports: &[PathCountReport], path: &Path) -> Result<()> {
    let Some(first) = reports.first() else {
        std::fs::write(path, "threshold\n")?;
        return Ok(());
    };
    let names: Vec<&str> = first.variants.iter().map(|v| v.variant.as_str()).collect();
    let mut out = String::from("threshold");
    for n in &names {
        out.push_str(&format!(",{n}"));
    }
    for n in &names {
        out.push_str(&format!(",{n}_count"));
    }
    out.push('\n');
    for r in reports {
        out.push_str(&r.threshold.to_string());
        for v in &r.variants {
            match v.ln_count {
                Some(l) => out.push_str(&format!(",{l:.4}")),
                None => out.push(','),
            }
        }
        for v in &r.variants {
            out.push_str(&format!(",{}", v.count));
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}
