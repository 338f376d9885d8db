use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    Attribute, Color, Material, Modification, ModificationKind, Scene, SceneKey, SceneObject, Shape, Size,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CciConfig {
    pub iterations: usize,
    pub branching: usize,
    pub min_objects: usize,
    pub max_objects: usize,
}

impl Default for CciConfig {
    fn default() -> Self {
        Self {
            iterations: 4,
            branching: 10,
            min_objects: 3,
            max_objects: 10,
        }
    }
}

impl CciConfig {
    /// Σ branching^i for i in 0..=iterations.
    pub fn scene_count(&self) -> usize {
        let mut total = 0usize;
        let mut level = 1usize;
        for _ in 0..=self.iterations {
            total += level;
            level = level.saturating_mul(self.branching);
        }
        total
    }

    fn validate(&self) -> Result<()> {
        if self.branching == 0 {
            return Err(Error::InvalidArgument("branching must be at least 1".into()));
        }
        if self.min_objects == 0 || self.min_objects > self.max_objects {
            return Err(Error::InvalidArgument(format!(
                "object bounds must satisfy 1 <= min ({}) <= max ({})",
                self.min_objects, self.max_objects
            )));
        }
        Ok(())
    }
}

/// Generated scenes in breadth-first order. Index 0 is the root.
#[derive(Debug, Clone, PartialEq)]
pub struct CciDataset {
    pub scenes: Vec<Scene>,
    /// Parent index and the modification that produced each scene.
    pub parents: Vec<Option<(usize, Modification)>>,
    pub iterations: Vec<usize>,
    pub max_objects: usize,
}

impl CciDataset {
    pub fn len(&self) -> usize {
        self.scenes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenes.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.scenes.iter().position(|s| s.id == id)
    }

    pub fn parent_id(&self, scene: usize) -> Option<&str> {
        self.parents[scene]
            .as_ref()
            .map(|(p, _)| self.scenes[*p].id.as_str())
    }

    pub fn last_iteration(&self) -> usize {
        self.iterations.iter().copied().max().unwrap_or(0)
    }

    /// The iteration-1 ancestor of a scene (the root maps to itself).
    pub fn branch_of(&self, mut scene: usize) -> usize {
        while self.iterations[scene] > 1 {
            scene = self.parents[scene].as_ref().expect("non-root has a parent").0;
        }
        scene
    }
}

pub fn random_object<R: Rng + ?Sized>(rng: &mut R) -> SceneObject {
    SceneObject::new(
        *Shape::ALL.choose(rng).unwrap(),
        *Color::ALL.choose(rng).unwrap(),
        *Material::ALL.choose(rng).unwrap(),
        *Size::ALL.choose(rng).unwrap(),
    )
}

pub fn random_scene<R: Rng + ?Sized>(rng: &mut R, min_objects: usize, max_objects: usize) -> Result<Scene> {
    if min_objects == 0 || min_objects > max_objects {
        return Err(Error::InvalidArgument(format!(
            "object bounds must satisfy 1 <= min ({min_objects}) <= max ({max_objects})"
        )));
    }
    let n = rng.gen_range(min_objects..=max_objects);
    Ok(Scene::new("", (0..n).map(|_| random_object(rng)).collect()))
}

/// Applies `kind` to `scene`; the child inherits an empty id.
pub fn apply_modification(scene: &Scene, kind: &ModificationKind, max_objects: usize) -> Result<Scene> {
    let mut objects = scene.objects().to_vec();
    match *kind {
        ModificationKind::ChangeAttribute { object, value } => {
            let old = objects.get(object).copied().ok_or_else(|| {
                Error::InvalidModification(format!(
                    "object index {object} out of range for {} objects",
                    objects.len()
                ))
            })?;
            if old.get(value.attribute()) == value {
                return Err(Error::InvalidModification(format!(
                    "{} is already {}",
                    value.attribute().word(),
                    value.word()
                )));
            }
            objects[object] = old.with(value);
        }
        ModificationKind::AddObject { added } => {
            if objects.len() >= max_objects {
                return Err(Error::InvalidModification(format!(
                    "scene already holds the maximum of {max_objects} objects"
                )));
            }
            objects.push(added);
        }
    }
    Ok(Scene::new("", objects))
}

fn random_kind<R: Rng + ?Sized>(scene: &Scene, max_objects: usize, rng: &mut R) -> ModificationKind {
    let can_add = scene.len() < max_objects;
    let choice = rng.gen_range(0..if can_add { 5 } else { 4 });
    if choice == 4 || scene.is_empty() {
        return ModificationKind::AddObject {
            added: random_object(rng),
        };
    }
    let attr = Attribute::ALL[choice];
    let object = rng.gen_range(0..scene.len());
    let current = scene.objects()[object].get(attr);
    let others: Vec<_> = attr.values().into_iter().filter(|v| *v != current).collect();
    ModificationKind::ChangeAttribute {
        object,
        value: *others.choose(rng).unwrap(),
    }
}

/// Draws `count` modifications of `scene` whose children are pairwise
/// distinct and not in `existing`. Attempts are capped at `50 * count + 100`.
pub fn sample_modifications<R: Rng + ?Sized>(
    scene: &Scene,
    count: usize,
    rng: &mut R,
    existing: &HashSet<SceneKey>,
    max_objects: usize,
) -> Result<Vec<Modification>> {
    let budget = 50 * count + 100;
    let mut taken = HashSet::new();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        if attempts == budget {
            return Err(Error::ExhaustedRetries {
                wanted: count,
                attempts,
            });
        }
        attempts += 1;
        let kind = random_kind(scene, max_objects, rng);
        let child = apply_modification(scene, &kind, max_objects)?;
        let key = child.key();
        if existing.contains(&key) || !taken.insert(key) {
            continue;
        }
        out.push(Modification::new(scene, kind));
    }
    Ok(out)
}

/// Grows a dataset breadth first from one random root.
pub fn generate_cci<R: Rng + ?Sized>(config: &CciConfig, rng: &mut R) -> Result<CciDataset> {
    config.validate()?;
    let total = config.scene_count();
    let width = total.saturating_sub(1).to_string().len().max(5);
    let name = |i: usize| format!("s{i:0width$}");

    let mut root = random_scene(rng, config.min_objects, config.max_objects)?;
    root.id = name(0);
    let mut seen: HashSet<SceneKey> = HashSet::with_capacity(total);
    seen.insert(root.key());
    let mut dataset = CciDataset {
        scenes: vec![root],
        parents: vec![None],
        iterations: vec![0],
        max_objects: config.max_objects,
    };

    let mut frontier = 0..1;
    for iteration in 1..=config.iterations {
        let start = dataset.len();
        for parent in frontier.clone() {
            let mods = sample_modifications(
                &dataset.scenes[parent],
                config.branching,
                rng,
                &seen,
                config.max_objects,
            )?;
            for m in mods {
                let mut child = apply_modification(&dataset.scenes[parent], &m.kind, config.max_objects)?;
                child.id = name(dataset.len());
                seen.insert(child.key());
                dataset.scenes.push(child);
                dataset.parents.push(Some((parent, m)));
                dataset.iterations.push(iteration);
            }
        }
        frontier = start..dataset.len();
    }
    Ok(dataset)
}

/// One (source, instruction, target) retrieval example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triple {
    pub source_id: String,
    pub instruction: String,
    pub target_id: String,
}

/// Splits parent links by target iteration: links into the last iteration
/// are test, all earlier ones train.
pub fn retrieval_triples(dataset: &CciDataset) -> (Vec<Triple>, Vec<Triple>) {
    let last = dataset.last_iteration();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, link) in dataset.parents.iter().enumerate() {
        let Some((p, m)) = link else { continue };
        let t = Triple {
            source_id: dataset.scenes[*p].id.clone(),
            instruction: m.instruction.clone(),
            target_id: dataset.scenes[i].id.clone(),
        };
        if dataset.iterations[i] == last {
            test.push(t);
        } else {
            train.push(t);
        }
    }
    (train, test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cci::{is_reachable, AttributeValue};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn cfg(iterations: usize, branching: usize) -> CciConfig {
        CciConfig {
            iterations,
            branching,
            ..CciConfig::default()
        }
    }

    #[test]
    fn single_object_scene() {
        let s = random_scene(&mut rng(1), 1, 1).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn same_seed_same_scene() {
        assert_eq!(
            random_scene(&mut rng(9), 2, 8).unwrap(),
            random_scene(&mut rng(9), 2, 8).unwrap()
        );
    }

    #[test]
    fn random_objects_cover_vocabularies() {
        let mut r = rng(3);
        let mut shapes = HashSet::new();
        let mut colors = HashSet::new();
        let mut materials = HashSet::new();
        let mut sizes = HashSet::new();
        for _ in 0..10_000 {
            let s = random_scene(&mut r, 1, 3).unwrap();
            for o in s.objects() {
                shapes.insert(o.shape);
                colors.insert(o.color);
                materials.insert(o.material);
                sizes.insert(o.size);
            }
        }
        assert_eq!(
            (shapes.len(), colors.len(), materials.len(), sizes.len()),
            (3, 8, 2, 2)
        );
    }

    #[test]
    fn change_color_on_single_object() {
        let red = SceneObject::new(Shape::Cube, Color::Red, Material::Rubber, Size::Small);
        let s = Scene::new("a", vec![red]);
        let kind = ModificationKind::ChangeAttribute {
            object: 0,
            value: AttributeValue::Color(Color::Blue),
        };
        let child = apply_modification(&s, &kind, 10).unwrap();
        assert_eq!(child.objects()[0].color, Color::Blue);
        assert_eq!(s.objects()[0].color, Color::Red);
    }

    #[test]
    fn add_grows_scene() {
        let s = random_scene(&mut rng(2), 4, 4).unwrap();
        let kind = ModificationKind::AddObject {
            added: random_object(&mut rng(5)),
        };
        assert_eq!(apply_modification(&s, &kind, 10).unwrap().len(), 5);
        assert!(matches!(
            apply_modification(&s, &kind, 4),
            Err(Error::InvalidModification(_))
        ));
    }

    #[test]
    fn unchanged_value_rejected() {
        let s = random_scene(&mut rng(2), 2, 2).unwrap();
        let kind = ModificationKind::ChangeAttribute {
            object: 1,
            value: AttributeValue::Size(s.objects()[1].size),
        };
        assert!(matches!(
            apply_modification(&s, &kind, 10),
            Err(Error::InvalidModification(_))
        ));
        let bad = ModificationKind::ChangeAttribute {
            object: 7,
            value: AttributeValue::Size(Size::Large),
        };
        assert!(apply_modification(&s, &bad, 10).is_err());
    }

    #[test]
    fn ten_distinct_children() {
        let s = random_scene(&mut rng(4), 5, 5).unwrap();
        let mods = sample_modifications(&s, 10, &mut rng(6), &HashSet::new(), 10).unwrap();
        let keys: HashSet<_> = mods
            .iter()
            .map(|m| apply_modification(&s, &m.kind, 10).unwrap().key())
            .collect();
        assert_eq!(keys.len(), 10);
        assert!(!keys.contains(&s.key()));
    }

    #[test]
    fn children_never_equal_source() {
        let mut r = rng(8);
        for _ in 0..1000 {
            let s = random_scene(&mut r, 1, 10).unwrap();
            let m = sample_modifications(&s, 1, &mut r, &HashSet::new(), 10).unwrap();
            let child = apply_modification(&s, &m[0].kind, 10).unwrap();
            assert_ne!(child.fingerprint(), s.fingerprint());
            assert!(is_reachable(&s, &child));
        }
    }

    #[test]
    fn saturated_world_exhausts() {
        // A one-object scene at the object cap has 2+7+1+1 = 11 children.
        let s = random_scene(&mut rng(1), 1, 1).unwrap();
        assert_eq!(
            sample_modifications(&s, 11, &mut rng(2), &HashSet::new(), 1)
                .unwrap()
                .len(),
            11
        );
        assert!(matches!(
            sample_modifications(&s, 12, &mut rng(2), &HashSet::new(), 1),
            Err(Error::ExhaustedRetries { wanted: 12, .. })
        ));
    }

    #[test]
    fn counting_identities() {
        assert_eq!(generate_cci(&cfg(0, 10), &mut rng(1)).unwrap().len(), 1);
        assert_eq!(generate_cci(&cfg(2, 3), &mut rng(1)).unwrap().len(), 13);
        let d = generate_cci(&cfg(1, 10), &mut rng(1)).unwrap();
        let (train, test) = retrieval_triples(&d);
        assert_eq!((train.len(), test.len()), (0, 10));
    }

    #[test]
    fn dataset_invariants() {
        let d = generate_cci(&cfg(3, 6), &mut rng(11)).unwrap();
        assert_eq!(d.len(), 1 + 6 + 36 + 216);
        let keys: HashSet<_> = d.scenes.iter().map(Scene::key).collect();
        assert_eq!(keys.len(), d.len());
        for (i, link) in d.parents.iter().enumerate().skip(1) {
            let (p, m) = link.as_ref().unwrap();
            assert_eq!(d.iterations[*p] + 1, d.iterations[i]);
            let child = apply_modification(&d.scenes[*p], &m.kind, d.max_objects).unwrap();
            assert_eq!(child.key(), d.scenes[i].key());
            assert!(is_reachable(&d.scenes[*p], &d.scenes[i]));
            assert_eq!(d.iterations[d.branch_of(i)], 1);
        }
        assert_eq!(d.branch_of(0), 0);
        let (train, test) = retrieval_triples(&d);
        assert_eq!((train.len(), test.len()), (42, 216));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_cci(&cfg(2, 5), &mut rng(3)).unwrap();
        let b = generate_cci(&cfg(2, 5), &mut rng(3)).unwrap();
        assert_eq!(a, b);
    }
}
