//! Epsilon-neighbourhood graphs over sphere embeddings and their geodesics.
//!
//! Vertices are the points of an [`EmbeddingSet`]; an undirected edge joins
//! two points whose great-circle distance is strictly between zero and the
//! threshold, weighted by that distance. Geodesic distance is the weighted
//! shortest-path length. Every tie (heap order, predecessor choice, ranking)
//! is broken by the smaller vertex index, so paths are reproducible.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{arc, DomainTag, EmbeddingSet};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldGraph<T> {
    ids: Vec<String>,
    domains: Vec<DomainTag>,
    adjacency: Vec<Vec<(usize, T)>>,
    threshold: T,
}

impl<T: Real> ManifoldGraph<T> {
    /// Builds a graph from explicit undirected edges `(a, b, w)`.
    ///
    /// Used for hand-made graphs and for reloading edge lists; weights must
    /// be positive and finite, self-loops and duplicate edges are rejected.
    pub fn from_edges(
        ids: Vec<String>,
        domains: Vec<DomainTag>,
        edges: &[(usize, usize, T)],
        threshold: T,
    ) -> Result<Self> {
        let n = ids.len();
        if domains.len() != n {
            return Err(Error::LengthMismatch {
                left: domains.len(),
                right: n,
            });
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidArgument(format!("bad edge ({a}, {b})")));
            }
            if !(w > T::zero()) || !w.is_finite() {
                return Err(Error::InvalidArgument(format!("bad weight on edge ({a}, {b})")));
            }
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for row in &mut adjacency {
            row.sort_by_key(|&(j, _)| j);
            if row.windows(2).any(|p| p[0].0 == p[1].0) {
                return Err(Error::InvalidArgument("duplicate edge".into()));
            }
        }
        Ok(Self {
            ids,
            domains,
            adjacency,
            threshold,
        })
    }

    /// Anonymous image-only graph, handy for tests.
    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, T)]) -> Result<Self> {
        Self::from_edges(
            (0..n).map(|i| i.to_string()).collect(),
            vec![DomainTag::Image; n],
            edges,
            T::infinity(),
        )
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn threshold(&self) -> T {
        self.threshold
    }

    pub fn id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn domain(&self, v: usize) -> DomainTag {
        self.domains[v]
    }

    pub fn domains(&self) -> &[DomainTag] {
        &self.domains
    }

    /// Neighbours of `v` with edge weights, ascending by neighbour index.
    pub fn neighbors(&self, v: usize) -> &[(usize, T)] {
        &self.adjacency[v]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<T> {
        let row = &self.adjacency[a];
        row.binary_search_by_key(&b, |&(j, _)| j).ok().map(|k| row[k].1)
    }

    /// Undirected edges with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize, T)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, row)| {
                row.iter()
                    .filter(move |&&(b, _)| a < b)
                    .map(move |&(b, w)| (a, b, w))
            })
            .collect()
    }

    /// Checks that every edge appears in both directions with the same
    /// weight and that no self-loop exists.
    pub fn is_symmetric(&self) -> bool {
        self.adjacency.iter().enumerate().all(|(a, row)| {
            row.iter()
                .all(|&(b, w)| a != b && self.weight(b, a).is_some_and(|x| x == w))
        })
    }
}

/// Exact all-pairs ε-graph: edge `(i, j)` iff `0 < d(i, j) < epsilon`.
pub fn build_epsilon_graph<T: Real>(set: &EmbeddingSet<T>, epsilon: T) -> ManifoldGraph<T> {
    let n = set.len();
    let adjacency: Vec<Vec<(usize, T)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let u = set.vector(i);
            (0..n)
                .filter(|&j| j != i)
                .filter_map(|j| {
                    let d = arc(u, set.vector(j));
                    (d > T::zero() && d < epsilon).then_some((j, d))
                })
                .collect()
        })
        .collect();
    ManifoldGraph {
        ids: set.ids().to_vec(),
        domains: set.domains().to_vec(),
        adjacency,
        threshold: epsilon,
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Dist<T>(T);

impl<T: PartialOrd> Eq for Dist<T> {}

impl<T: PartialOrd> Ord for Dist<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).expect("distances are never NaN")
    }
}

impl<T: PartialOrd> PartialOrd for Dist<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Smallest threshold whose graph has at least `ratio · |V|` edges.
///
/// Sweeps the sorted positive pairwise distances: with `m = ⌈ratio·|V|⌉`
/// the result lies just above the `m`-th smallest one, so the strict
/// inequality of [`build_epsilon_graph`] admits it.
pub fn calibrate_threshold<T: Real>(set: &EmbeddingSet<T>, ratio: T) -> Result<T> {
    let n = set.len();
    if !(ratio > T::zero()) {
        return Err(Error::InvalidArgument("edge ratio must be positive".into()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two points".into()));
    }
    let wanted = (ratio * T::from_usize_lossy(n))
        .ceil()
        .to_usize()
        .unwrap_or(usize::MAX)
        .max(1);
    let max_pairs = n * (n - 1) / 2;
    if wanted > max_pairs {
        return Err(Error::Unsatisfiable {
            required: wanted,
            available: max_pairs,
        });
    }

    // Each fold chunk keeps a bounded max-heap of its smallest distances; the
    // union of those contains the global `wanted` smallest.
    let (heap, positive) = (0..n)
        .into_par_iter()
        .fold(
            || (BinaryHeap::<Dist<T>>::with_capacity(wanted + 1), 0usize),
            |(mut heap, mut positive), i| {
                let u = set.vector(i);
                for j in i + 1..n {
                    let d = arc(u, set.vector(j));
                    if d > T::zero() {
                        positive += 1;
                        push_bounded(&mut heap, d, wanted);
                    }
                }
                (heap, positive)
            },
        )
        .reduce(
            || (BinaryHeap::new(), 0),
            |(mut a, pa), (b, pb)| {
                for Dist(d) in b {
                    push_bounded(&mut a, d, wanted);
                }
                (a, pa + pb)
            },
        );
    if positive < wanted {
        return Err(Error::Unsatisfiable {
            required: wanted,
            available: positive,
        });
    }
    let kth = heap.peek().expect("heap holds `wanted` entries").0;
    Ok(just_above(kth))
}

fn push_bounded<T: Real>(heap: &mut BinaryHeap<Dist<T>>, d: T, cap: usize) {
    if heap.len() < cap {
        heap.push(Dist(d));
    } else if let Some(top) = heap.peek() {
        if d < top.0 {
            heap.pop();
            heap.push(Dist(d));
        }
    }
}

fn just_above<T: Real>(x: T) -> T {
    let four = T::from_f64_lossy(4.0);
    let bumped = x + x.abs().max(T::min_positive_value()) * T::epsilon() * four;
    debug_assert!(bumped > x);
    bumped
}

/// Single-source shortest paths.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicResult<T> {
    pub source: usize,
    distances: Vec<T>,
    predecessors: Vec<Option<usize>>,
    /// Vertices in the order they were settled (ascending distance, ties by
    /// index).
    order: Vec<usize>,
}

impl<T: Real> GeodesicResult<T> {
    /// `None` when `v` is unreachable from the source.
    pub fn distance(&self, v: usize) -> Option<T> {
        let d = self.distances[v];
        d.is_finite().then_some(d)
    }

    pub fn predecessor(&self, v: usize) -> Option<usize> {
        self.predecessors[v]
    }

    pub fn is_reachable(&self, v: usize) -> bool {
        self.distances[v].is_finite()
    }

    pub fn settle_order(&self) -> &[usize] {
        &self.order
    }

    /// Source-to-`v` vertex sequence, or `None` if unreachable.
    pub fn path_to(&self, v: usize) -> Option<Vec<usize>> {
        if !self.is_reachable(v) {
            return None;
        }
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.predecessors[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

struct HeapEntry<T: PartialOrd> {
    dist: Dist<T>,
    vertex: usize,
}

impl<T: PartialOrd> PartialEq for HeapEntry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: PartialOrd> Eq for HeapEntry<T> {}

impl<T: PartialOrd> Ord for HeapEntry<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed for a min-heap on (distance, index).
        other
            .dist
            .cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl<T: PartialOrd> PartialOrd for HeapEntry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Runs Dijkstra from `source`, calling `settled(v, d)` as each vertex is
/// finalised; returning `false` stops the search early.
fn run_dijkstra<T: Real>(
    graph: &ManifoldGraph<T>,
    source: usize,
    mut settled: impl FnMut(usize, T) -> bool,
) -> GeodesicResult<T> {
    let n = graph.len();
    assert!(source < n, "source {source} out of range");
    let mut dist = vec![T::infinity(); n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];
    let mut order = Vec::new();
    let mut heap = BinaryHeap::new();
    dist[source] = T::zero();
    heap.push(HeapEntry {
        dist: Dist(T::zero()),
        vertex: source,
    });
    while let Some(HeapEntry {
        dist: Dist(d),
        vertex: u,
    }) = heap.pop()
    {
        if done[u] || d > dist[u] {
            continue;
        }
        done[u] = true;
        order.push(u);
        if !settled(u, d) {
            break;
        }
        for &(v, w) in &graph.adjacency[u] {
            if done[v] {
                continue;
            }
            let cand = d + w;
            if cand < dist[v] {
                dist[v] = cand;
                pred[v] = Some(u);
                heap.push(HeapEntry {
                    dist: Dist(cand),
                    vertex: v,
                });
            } else if cand == dist[v] && pred[v].is_some_and(|p| u < p) {
                pred[v] = Some(u);
            }
        }
    }
    GeodesicResult {
        source,
        distances: dist,
        predecessors: pred,
        order,
    }
}

/// Exact single-source weighted shortest paths. Among co-optimal
/// predecessors the smallest index is kept.
pub fn dijkstra<T: Real>(graph: &ManifoldGraph<T>, source: usize) -> GeodesicResult<T> {
    run_dijkstra(graph, source, |_, _| true)
}

/// Dijkstra from each source in parallel, results in `sources` order.
pub fn dijkstra_many<T: Real>(graph: &ManifoldGraph<T>, sources: &[usize]) -> Vec<GeodesicResult<T>> {
    sources.par_iter().map(|&s| dijkstra(graph, s)).collect()
}

pub fn shortest_path<T: Real>(graph: &ManifoldGraph<T>, source: usize, dest: usize) -> Option<Vec<usize>> {
    assert!(dest < graph.len(), "destination {dest} out of range");
    let mut reached = false;
    let r = run_dijkstra(graph, source, |v, _| {
        reached = v == dest;
        !reached
    });
    r.path_to(dest)
}

/// The `k` targets closest to `query` in geodesic distance, ascending
/// (ties by index). Fewer are returned when fewer are reachable.
pub fn geodesic_nearest_in_set<T: Real>(
    graph: &ManifoldGraph<T>,
    query: usize,
    targets: &[usize],
    k: usize,
) -> Vec<(usize, T)> {
    let mut is_target = vec![false; graph.len()];
    for &t in targets {
        is_target[t] = true;
    }
    let mut found = Vec::with_capacity(k);
    if k == 0 {
        return found;
    }
    run_dijkstra(graph, query, |v, d| {
        if is_target[v] {
            found.push((v, d));
        }
        found.len() < k
    });
    found
}

/// Component id per vertex; ids are dense and numbered by smallest member.
pub fn connected_components<T: Real>(graph: &ManifoldGraph<T>) -> Vec<usize> {
    let n = graph.len();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = next;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in graph.neighbors(u) {
                if comp[v] == usize::MAX {
                    comp[v] = next;
                    queue.push_back(v);
                }
            }
        }
        next += 1;
    }
    comp
}

/// JSON header written next to an edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphHeader {
    pub version: u32,
    pub epsilon: f64,
    pub vertex_count: usize,
    pub edge_count: usize,
    pub vertices: Vec<GraphVertex>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphVertex {
    pub id: String,
    pub domain: DomainTag,
}

/// `src dst weight` lines for every edge with `src < dst`, sorted.
pub fn edge_list<T: Real>(graph: &ManifoldGraph<T>) -> String {
    let mut out = String::new();
    for (a, b, w) in graph.edges() {
        writeln!(out, "{a} {b} {}", w.to_f64_lossy()).unwrap();
    }
    out
}

pub fn graph_header<T: Real>(graph: &ManifoldGraph<T>) -> GraphHeader {
    GraphHeader {
        version: 1,
        epsilon: graph.threshold.to_f64_lossy(),
        vertex_count: graph.len(),
        edge_count: graph.edge_count(),
        vertices: (0..graph.len())
            .map(|v| GraphVertex {
                id: graph.ids[v].clone(),
                domain: graph.domains[v],
            })
            .collect(),
    }
}

/// Writes `edges_path` and its JSON header at `header_path`.
pub fn save_graph<T: Real>(graph: &ManifoldGraph<T>, edges_path: &Path, header_path: &Path) -> Result<()> {
    fs::write(edges_path, edge_list(graph))?;
    let mut json = serde_json::to_vec_pretty(&graph_header(graph)).expect("header serializes");
    json.push(b'\n');
    fs::write(header_path, json)?;
    Ok(())
}

pub fn load_graph<T: Real>(edges_path: &Path, header_path: &Path) -> Result<ManifoldGraph<T>> {
    let header_text = fs::read_to_string(header_path)?;
    let header: GraphHeader = serde_json::from_str(&header_text).map_err(|e| Error::MalformedFile {
        path: header_path.to_path_buf(),
        offset: 0,
        reason: e.to_string(),
    })?;
    let text = fs::read_to_string(edges_path)?;
    let mut edges = Vec::new();
    let mut offset = 0u64;
    for line in text.split_inclusive('\n') {
        let malformed = |reason: &str| Error::MalformedFile {
            path: edges_path.to_path_buf(),
            offset,
            reason: reason.to_string(),
        };
        let mut parts = line.split_whitespace();
        let (Some(a), Some(b), Some(w), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(malformed("expected `src dst weight`"));
        };
        let a: usize = a.parse().map_err(|_| malformed("bad source index"))?;
        let b: usize = b.parse().map_err(|_| malformed("bad destination index"))?;
        let w: f64 = w.parse().map_err(|_| malformed("bad weight"))?;
        edges.push((a, b, T::from_f64_lossy(w)));
        offset += line.len() as u64;
    }
    let (ids, domains) = header.vertices.into_iter().map(|v| (v.id, v.domain)).unzip();
    ManifoldGraph::from_edges(ids, domains, &edges, T::from_f64_lossy(header.epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{normalize_to_sphere, Point};

    fn on_circle(angles: &[f64]) -> EmbeddingSet<f64> {
        normalize_to_sphere(
            &angles
                .iter()
                .map(|a| vec![a.cos(), a.sin(), 0.0])
                .collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn zero_threshold_has_no_edges() {
        let g = build_epsilon_graph(&on_circle(&[0.0, 0.1, 0.2]), 0.0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn large_threshold_is_complete() {
        let g = build_epsilon_graph(&on_circle(&[0.0, 1.0, 3.0, 4.0]), std::f64::consts::PI + 0.01);
        assert_eq!(g.edge_count(), 6);
        assert!(g.is_symmetric());
    }

    #[test]
    fn three_points_single_edge() {
        // a, b on the equator 0.3 apart; c placed so d(a,c) = 1.0, d(b,c) = 0.9.
        let (ab, ac, bc) = (0.3f64, 1.0f64, 0.9f64);
        let cos_phi = (bc.cos() - ab.cos() * ac.cos()) / (ab.sin() * ac.sin());
        let phi = cos_phi.acos();
        let pts = vec![
            vec![1.0, 0.0, 0.0],
            vec![ab.cos(), ab.sin(), 0.0],
            vec![ac.cos(), ac.sin() * phi.cos(), ac.sin() * phi.sin()],
        ];
        let s = normalize_to_sphere(&pts).unwrap();
        assert!((great_circle(&s, 0, 2) - 1.0).abs() < 1e-12);
        assert!((great_circle(&s, 1, 2) - 0.9).abs() < 1e-12);
        let g = build_epsilon_graph(&s, 0.5);
        let edges = g.edges();
        assert_eq!(edges.len(), 1);
        let (a, b, w) = edges[0];
        assert_eq!((a, b), (0, 1));
        assert!((w - 0.3).abs() < 1e-12);
        assert!(g.is_symmetric());
    }

    #[test]
    fn duplicates_get_no_edge() {
        let s = EmbeddingSet::new(
            2,
            vec![
                Point::new("a", DomainTag::Image, vec![1.0, 0.0]),
                Point::new("b", DomainTag::Image, vec![1.0, 0.0]),
            ],
        )
        .unwrap();
        assert_eq!(build_epsilon_graph(&s, 1.0).edge_count(), 0);
    }

    #[test]
    fn calibration_examples() {
        let s = on_circle(&[0.0, 0.4]);
        let eps = calibrate_threshold(&s, 0.5).unwrap();
        let d = great_circle(&s, 0, 1);
        assert!(eps > d && eps - d < 1e-12);
        assert_eq!(build_epsilon_graph(&s, eps).edge_count(), 1);
        assert!(matches!(
            calibrate_threshold(&s, 1.0),
            Err(Error::Unsatisfiable {
                required: 2,
                available: 1
            })
        ));
        assert!(calibrate_threshold(&s, 0.0).is_err());
    }

    #[test]
    fn calibration_reaches_requested_edges() {
        let angles: Vec<f64> = (0..40).map(|i| (i as f64 * 0.731).sin() * 3.0).collect();
        let s = on_circle(&angles);
        for r in [0.5, 1.0, 2.0, 3.5] {
            let eps = calibrate_threshold(&s, r).unwrap();
            let g = build_epsilon_graph(&s, eps);
            assert!(g.edge_count() as f64 >= r * 40.0);
        }
    }

    fn great_circle(s: &EmbeddingSet<f64>, i: usize, j: usize) -> f64 {
        crate::embedding::great_circle_distance(s.vector(i), s.vector(j)).unwrap()
    }

    #[test]
    fn isolated_vertex() {
        let g = ManifoldGraph::<f64>::from_weighted_edges(3, &[(1, 2, 0.5)]).unwrap();
        let r = dijkstra(&g, 0);
        assert_eq!(r.distance(0), Some(0.0));
        assert_eq!(r.distance(1), None);
        assert_eq!(r.distance(2), None);
        assert_eq!(shortest_path(&g, 0, 2), None);
        assert_eq!(shortest_path(&g, 1, 1), Some(vec![1]));
    }

    #[test]
    fn path_graph() {
        let g = ManifoldGraph::<f64>::from_weighted_edges(3, &[(0, 1, 0.2), (1, 2, 0.3)]).unwrap();
        let r = dijkstra(&g, 0);
        assert!((r.distance(2).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(r.path_to(2), Some(vec![0, 1, 2]));
    }

    #[test]
    fn triangle_prefers_two_hops() {
        let g = ManifoldGraph::from_weighted_edges(3, &[(0, 2, 1.0), (0, 1, 0.4), (1, 2, 0.4)]).unwrap();
        assert_eq!(dijkstra(&g, 0).distance(2), Some(0.8));
        assert_eq!(shortest_path(&g, 0, 2), Some(vec![0, 1, 2]));
    }

    #[test]
    fn ties_prefer_smaller_predecessor() {
        // Two co-optimal routes 0-1-3 and 0-2-3 (weights are exact binary fractions).
        let g =
            ManifoldGraph::from_weighted_edges(4, &[(0, 2, 0.25), (0, 1, 0.25), (2, 3, 0.5), (1, 3, 0.5)])
                .unwrap();
        assert_eq!(shortest_path(&g, 0, 3), Some(vec![0, 1, 3]));
        assert_eq!(shortest_path(&g, 3, 0), Some(vec![3, 1, 0]));
    }

    #[test]
    fn nearest_in_set_examples() {
        let g = ManifoldGraph::from_weighted_edges(4, &[(0, 1, 0.2), (1, 2, 0.2)]).unwrap();
        assert_eq!(
            geodesic_nearest_in_set(&g, 0, &[1, 2], 2),
            vec![(1, 0.2), (2, 0.4)]
        );
        assert_eq!(geodesic_nearest_in_set(&g, 1, &[1, 2], 1), vec![(1, 0.0)]);
        assert!(geodesic_nearest_in_set(&g, 3, &[1, 2], 1).is_empty());
        assert_eq!(geodesic_nearest_in_set(&g, 0, &[2], 5), vec![(2, 0.4)]);
    }

    #[test]
    fn component_examples() {
        let g = ManifoldGraph::<f64>::from_weighted_edges(4, &[]).unwrap();
        assert_eq!(connected_components(&g), vec![0, 1, 2, 3]);
        let g = ManifoldGraph::from_weighted_edges(
            6,
            &[
                (0, 1, 0.1),
                (1, 2, 0.1),
                (0, 2, 0.1),
                (3, 4, 0.1),
                (4, 5, 0.1),
                (3, 5, 0.1),
            ],
        )
        .unwrap();
        assert_eq!(connected_components(&g), vec![0, 0, 0, 1, 1, 1]);
        let g = ManifoldGraph::from_weighted_edges(3, &[(2, 0, 0.1)]).unwrap();
        assert_eq!(connected_components(&g), vec![0, 1, 0]);
    }

    #[test]
    fn edge_list_roundtrip() {
        let s = on_circle(&[0.0, 0.1, 0.25, 0.5, 2.0]);
        let g = build_epsilon_graph(&s, 0.3);
        let dir = tempfile::tempdir().unwrap();
        let (e, h) = (dir.path().join("g.edges"), dir.path().join("g.json"));
        save_graph(&g, &e, &h).unwrap();
        let text = fs::read_to_string(&e).unwrap();
        assert!(text.starts_with("0 1 "));
        let back: ManifoldGraph<f64> = load_graph(&e, &h).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn from_edges_rejects_bad_input() {
        assert!(ManifoldGraph::from_weighted_edges(2, &[(0, 0, 0.1)]).is_err());
        assert!(ManifoldGraph::from_weighted_edges(2, &[(0, 1, 0.0)]).is_err());
        assert!(ManifoldGraph::from_weighted_edges(2, &[(0, 1, 0.1), (1, 0, 0.1)]).is_err());
        assert!(ManifoldGraph::from_weighted_edges(2, &[(0, 5, 0.1)]).is_err());
    }
}
