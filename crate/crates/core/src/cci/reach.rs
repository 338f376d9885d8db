use std::collections::HashMap;

use super::{Attribute, CciDataset, Scene, SceneKey, SceneObject};

/// Whether two scenes are one step apart: either exactly one object differs
/// in exactly one attribute, or one scene is the other plus one object.
pub fn is_reachable(a: &Scene, b: &Scene) -> bool {
    let (only_a, only_b) = multiset_difference(a.objects(), b.objects());
    match (only_a.as_slice(), only_b.as_slice()) {
        ([x], [y]) => x.attribute_differences(y) == 1,
        ([], [_]) | ([_], []) => true,
        _ => false,
    }
}

/// Objects only in `a` and only in `b`; both inputs sorted.
fn multiset_difference(a: &[SceneObject], b: &[SceneObject]) -> (Vec<SceneObject>, Vec<SceneObject>) {
    let (mut i, mut j) = (0, 0);
    let (mut only_a, mut only_b) = (Vec::new(), Vec::new());
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => {
                only_a.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                only_b.push(b[j]);
                j += 1;
            }
        }
        if only_a.len() > 1 || only_b.len() > 1 {
            break;
        }
    }
    only_a.extend_from_slice(&a[i..]);
    only_b.extend_from_slice(&b[j..]);
    (only_a, only_b)
}

/// Linear scan over the whole dataset.
pub fn reachable_neighbors_brute(dataset: &CciDataset, scene: usize) -> Vec<usize> {
    let s = &dataset.scenes[scene];
    (0..dataset.len())
        .filter(|&j| j != scene && is_reachable(s, &dataset.scenes[j]))
        .collect()
}

/// Hash index from multiset to scene, enumerating the one-step
/// neighbourhood of a scene instead of scanning the dataset.
#[derive(Debug, Clone)]
pub struct ReachabilityIndex {
    by_key: HashMap<SceneKey, usize>,
}

impl ReachabilityIndex {
    pub fn new(dataset: &CciDataset) -> Self {
        Self::from_scenes(&dataset.scenes)
    }

    pub fn from_scenes(scenes: &[Scene]) -> Self {
        let by_key = scenes.iter().enumerate().map(|(i, s)| (s.key(), i)).collect();
        Self { by_key }
    }

    pub fn lookup(&self, key: &SceneKey) -> Option<usize> {
        self.by_key.get(key).copied()
    }

    /// Indices of indexed scenes reachable from `scene`, ascending.
    pub fn neighbors(&self, scene: &Scene) -> Vec<usize> {
        let objs = scene.objects();
        let mut out = Vec::new();
        let mut probe = |objects: Vec<SceneObject>| {
            let key = Scene::new("", objects).key();
            if let Some(i) = self.by_key.get(&key) {
                out.push(*i);
            }
        };
        for (pos, obj) in objs.iter().enumerate() {
            // Equal neighbours in sorted order yield the same candidates.
            if pos > 0 && objs[pos - 1] == *obj {
                continue;
            }
            for attr in Attribute::ALL {
                for value in attr.values() {
                    if value == obj.get(attr) {
                        continue;
                    }
                    let mut next = objs.to_vec();
                    next[pos] = obj.with(value);
                    probe(next);
                }
            }
            let mut removed = objs.to_vec();
            removed.remove(pos);
            probe(removed);
        }
        for added in SceneObject::all() {
            let mut next = objs.to_vec();
            next.push(added);
            probe(next);
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn neighbor_lists(&self, dataset: &CciDataset) -> Vec<Vec<usize>> {
        dataset.scenes.iter().map(|s| self.neighbors(s)).collect()
    }
}

impl CciDataset {
    pub fn reachable_neighbors(&self, scene: usize) -> Vec<usize> {
        ReachabilityIndex::new(self).neighbors(&self.scenes[scene])
    }

    /// Mean number of reachable neighbours per scene (0 for an empty or
    /// single-scene dataset).
    pub fn avg_reachable(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let index = ReachabilityIndex::new(self);
        let total: usize = self.scenes.iter().map(|s| index.neighbors(s).len()).sum();
        total as f64 / self.len() as f64
    }
}
