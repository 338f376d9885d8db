//! Few-shot label retrieval: N-way k-shot target sampling, nearest-target
//! label prediction by great-circle or geodesic distance, and the
//! retrievable/unretrievable bookkeeping.

use std::collections::{BTreeMap, HashMap};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{arc, DomainTag, EmbeddingSet, Labels};
use crate::error::{Error, Result};
use crate::graph::{connected_components, geodesic_nearest_in_set, ManifoldGraph};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalMode {
    /// Some target lies within the graph threshold (great-circle).
    EuclideanThreshold,
    /// Some target shares the query's connected component.
    GraphReachability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RetrievalMethod {
    Euclidean,
    Geodesic,
}

impl RetrievalMethod {
    pub fn name(self) -> &'static str {
        match self {
            RetrievalMethod::Euclidean => "euclidean",
            RetrievalMethod::Geodesic => "geodesic",
        }
    }

    pub fn default_mode(self) -> RetrievalMode {
        match self {
            RetrievalMethod::Euclidean => RetrievalMode::EuclideanThreshold,
            RetrievalMethod::Geodesic => RetrievalMode::GraphReachability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalProtocol {
    pub n_way: usize,
    pub k_shot: usize,
    pub knn_k: usize,
    pub seed: u64,
    /// `None` picks the method's natural mode.
    pub retrievability_mode: Option<RetrievalMode>,
    pub multi_label: bool,
}

impl Default for RetrievalProtocol {
    fn default() -> Self {
        Self {
            n_way: 5,
            k_shot: 5,
            knn_k: 1,
            seed: 0,
            retrievability_mode: None,
            multi_label: false,
        }
    }
}

impl RetrievalProtocol {
    pub fn validate(&self) -> Result<()> {
        if self.n_way < 2 {
            return Err(Error::InvalidArgument(format!(
                "n_way must be at least 2, got {}",
                self.n_way
            )));
        }
        if self.k_shot == 0 || self.knn_k == 0 {
            return Err(Error::InvalidArgument("k_shot and knn_k must be positive".into()));
        }
        Ok(())
    }

    pub fn mode_for(&self, method: RetrievalMethod) -> RetrievalMode {
        self.retrievability_mode.unwrap_or(method.default_mode())
    }
}

/// Chosen classes with their target and query indices (both ascending).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotSplit {
    pub classes: Vec<String>,
    pub targets: Vec<usize>,
    pub queries: Vec<usize>,
}

/// Picks `n_way` classes among those with at least `k_shot` labelled image
/// points, then `k_shot` targets per class; the class's remaining image
/// points are queries. A point's class is its first label.
pub fn sample_n_way_k_shot<T: Real>(
    set: &EmbeddingSet<T>,
    protocol: &RetrievalProtocol,
) -> Result<FewShotSplit> {
    protocol.validate()?;
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for i in set.indices_with_domain(DomainTag::Image) {
        if let Some(label) = set.primary_label(i) {
            members.entry(label).or_default().push(i);
        }
    }
    let eligible: Vec<(&str, Vec<usize>)> = members
        .into_iter()
        .filter(|(_, m)| m.len() >= protocol.k_shot)
        .collect();
    if eligible.len() < protocol.n_way {
        return Err(Error::InsufficientClasses {
            n_way: protocol.n_way,
            k_shot: protocol.k_shot,
            available: eligible.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(protocol.seed);
    let mut picked = sample(&mut rng, eligible.len(), protocol.n_way).into_vec();
    picked.sort_unstable();
    let mut split = FewShotSplit {
        classes: Vec::new(),
        targets: Vec::new(),
        queries: Vec::new(),
    };
    for c in picked {
        let (name, mut idx) = eligible[c].clone();
        idx.shuffle(&mut rng);
        split.classes.push(name.to_string());
        split.targets.extend_from_slice(&idx[..protocol.k_shot]);
        split.queries.extend_from_slice(&idx[protocol.k_shot..]);
    }
    split.targets.sort_unstable();
    split.queries.sort_unstable();
    Ok(split)
}

/// Combines neighbour label sets, nearest first. One neighbour: its labels.
/// Single-label: the most frequent first label, ties to the nearest.
/// Multi-label: every label carried by more than half of the neighbours,
/// falling back to the nearest neighbour's set when none is.
pub fn vote(neighbors: &[&Labels], multi_label: bool) -> Labels {
    match neighbors {
        [] => Vec::new(),
        [only] => (*only).clone(),
        _ if multi_label => {
            let mut counts: Vec<(&str, usize)> = Vec::new();
            for labels in neighbors {
                for l in labels.iter() {
                    match counts.iter_mut().find(|(x, _)| *x == l) {
                        Some((_, c)) => *c += 1,
                        None => counts.push((l, 1)),
                    }
                }
            }
            let majority: Labels = counts
                .into_iter()
                .filter(|&(_, c)| 2 * c > neighbors.len())
                .map(|(l, _)| l.to_string())
                .collect();
            if majority.is_empty() {
                neighbors[0].clone()
            } else {
                majority
            }
        }
        _ => {
            let mut counts: Vec<(&str, usize)> = Vec::new();
            for labels in neighbors {
                let Some(l) = labels.first() else { continue };
                match counts.iter_mut().find(|(x, _)| *x == l) {
                    Some((_, c)) => *c += 1,
                    None => counts.push((l, 1)),
                }
            }
            // `counts` is in order of first (nearest) appearance, so the
            // first maximum wins ties.
            let best = counts
                .iter()
                .fold(None::<(&str, usize)>, |acc, &(l, c)| match acc {
                    Some((_, bc)) if bc >= c => acc,
                    _ => Some((l, c)),
                });
            best.map(|(l, _)| vec![l.to_string()]).unwrap_or_default()
        }
    }
}

/// Nearest `knn_k` targets by great-circle distance (ties by index).
pub fn euclidean_knn_predict<T: Real>(
    set: &EmbeddingSet<T>,
    targets: &[usize],
    query: usize,
    knn_k: usize,
    multi_label: bool,
) -> Labels {
    let q = set.vector(query);
    let mut ranked: Vec<(T, usize)> = targets.iter().map(|&t| (arc(q, set.vector(t)), t)).collect();
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let neighbors: Vec<&Labels> = ranked.iter().take(knn_k).map(|&(_, t)| set.labels(t)).collect();
    vote(&neighbors, multi_label)
}

/// Nearest `knn_k` targets by geodesic distance in `graph`, whose vertices
/// are the rows of `set`. `None` when no target is reachable.
pub fn geodesic_knn_predict<T: Real>(
    graph: &ManifoldGraph<T>,
    set: &EmbeddingSet<T>,
    targets: &[usize],
    query: usize,
    knn_k: usize,
    multi_label: bool,
) -> Option<Labels> {
    let found = geodesic_nearest_in_set(graph, query, targets, knn_k);
    if found.is_empty() {
        return None;
    }
    let neighbors: Vec<&Labels> = found.iter().map(|&(t, _)| set.labels(t)).collect();
    Some(vote(&neighbors, multi_label))
}

/// Retrievability of each query under `mode`.
pub fn retrievable_mask<T: Real>(
    set: &EmbeddingSet<T>,
    graph: &ManifoldGraph<T>,
    targets: &[usize],
    queries: &[usize],
    mode: RetrievalMode,
) -> Vec<bool> {
    match mode {
        RetrievalMode::EuclideanThreshold => {
            let eps = graph.threshold();
            queries
                .par_iter()
                .map(|&q| targets.iter().any(|&t| arc(set.vector(q), set.vector(t)) < eps))
                .collect()
        }
        RetrievalMode::GraphReachability => {
            let comp = connected_components(graph);
            let mut has_target = vec![false; graph.len()];
            for &t in targets {
                has_target[comp[t]] = true;
            }
            queries.iter().map(|&q| has_target[comp[q]]).collect()
        }
    }
}

/// (retrievable, unretrievable) query counts.
pub fn count_retrievable<T: Real>(
    set: &EmbeddingSet<T>,
    graph: &ManifoldGraph<T>,
    targets: &[usize],
    queries: &[usize],
    mode: RetrievalMode,
) -> (usize, usize) {
    let mask = retrievable_mask(set, graph, targets, queries, mode);
    let r = mask.iter().filter(|&&b| b).count();
    (r, mask.len() - r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub method: String,
    pub feature_space: String,
    /// Hits over retrievable queries (0 when none are retrievable).
    pub accuracy: f64,
    pub hits: usize,
    pub retrievable_count: usize,
    pub unretrievable_count: usize,
    pub per_class_accuracy: BTreeMap<String, f64>,
}

impl RetrievalReport {
    pub fn tagged(mut self, method: impl Into<String>, feature_space: impl Into<String>) -> Self {
        self.method = method.into();
        self.feature_space = feature_space.into();
        self
    }

    pub const CSV_HEADER: &'static str = "method,accuracy,retrievable_points";

    pub fn csv_row(&self) -> String {
        format!("{},{:.4},{}", self.method, self.accuracy, self.retrievable_count)
    }
}

fn same_labels(a: &Labels, b: &Labels, multi_label: bool) -> bool {
    if multi_label {
        let mut a = a.clone();
        let mut b = b.clone();
        a.sort();
        a.dedup();
        b.sort();
        b.dedup();
        a == b
    } else {
        !a.is_empty() && a.first() == b.first()
    }
}

/// Scores predictions against truth; `None` marks an unretrievable query.
pub fn evaluate(
    predictions: &[Option<Labels>],
    truth: &[Labels],
    multi_label: bool,
) -> Result<RetrievalReport> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truth.len(),
        });
    }
    let mut per_class: HashMap<String, (usize, usize)> = HashMap::new();
    let (mut hits, mut retrievable) = (0, 0);
    for (p, t) in predictions.iter().zip(truth) {
        let Some(p) = p else { continue };
        retrievable += 1;
        let hit = same_labels(p, t, multi_label);
        hits += hit as usize;
        let class = t.first().cloned().unwrap_or_default();
        let e = per_class.entry(class).or_default();
        e.0 += hit as usize;
        e.1 += 1;
    }
    Ok(RetrievalReport {
        method: String::new(),
        feature_space: String::new(),
        accuracy: if retrievable == 0 {
            0.0
        } else {
            hits as f64 / retrievable as f64
        },
        hits,
        retrievable_count: retrievable,
        unretrievable_count: predictions.len() - retrievable,
        per_class_accuracy: per_class
            .into_iter()
            .map(|(c, (h, n))| (c, h as f64 / n as f64))
            .collect(),
    })
}

/// Predicts every query of `split` and scores it. Queries that are not
/// retrievable under the protocol's mode count as unretrievable whatever
/// the predictor returned.
pub fn run_retrieval<T: Real>(
    set: &EmbeddingSet<T>,
    graph: &ManifoldGraph<T>,
    split: &FewShotSplit,
    protocol: &RetrievalProtocol,
    method: RetrievalMethod,
) -> Result<RetrievalReport> {
    if graph.len() != set.len() {
        return Err(Error::LengthMismatch {
            left: graph.len(),
            right: set.len(),
        });
    }
    let mask = retrievable_mask(
        set,
        graph,
        &split.targets,
        &split.queries,
        protocol.mode_for(method),
    );
    let predictions: Vec<Option<Labels>> = split
        .queries
        .par_iter()
        .zip(&mask)
        .map(|(&q, &ok)| {
            if !ok {
                return None;
            }
            match method {
                RetrievalMethod::Euclidean => Some(euclidean_knn_predict(
                    set,
                    &split.targets,
                    q,
                    protocol.knn_k,
                    protocol.multi_label,
                )),
                RetrievalMethod::Geodesic => geodesic_knn_predict(
                    graph,
                    set,
                    &split.targets,
                    q,
                    protocol.knn_k,
                    protocol.multi_label,
                ),
            }
        })
        .collect();
    let truth: Vec<Labels> = split.queries.iter().map(|&q| set.labels(q).clone()).collect();
    Ok(evaluate(&predictions, &truth, protocol.multi_label)?.tagged(method.name(), ""))
}
