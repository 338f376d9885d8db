//! Symbolic CLEVR-style scene world.
//!
//! A scene is a multiset of objects, each with a shape, color, material and
//! size drawn from the CLEVR vocabularies. Datasets are grown iteratively:
//! every scene spawns `branching` children by a single modification (one
//! attribute of one object changed, or one object added), and all scenes of
//! a dataset are distinct as multisets. Positions and camera parameters are
//! not modelled.

mod embed;
mod generate;
mod io;
mod reach;
mod text;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use embed::{embed_dataset, embedding_id, scene_embedding, scene_id_of, ENCODING_WIDTH};
pub use generate::{
    apply_modification, generate_cci, random_object, random_scene, retrieval_triples, sample_modifications,
    CciConfig, CciDataset, Triple,
};
pub use io::{read_jsonl, write_jsonl, write_triples_csv, SceneRecord};
pub use reach::{is_reachable, reachable_neighbors_brute, ReachabilityIndex};
pub use text::{describe_object, render_caption, render_instruction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Cube,
    Sphere,
    Cylinder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Gray,
    Red,
    Blue,
    Green,
    Brown,
    Purple,
    Cyan,
    Yellow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Material {
    Rubber,
    Metal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Size {
    Small,
    Large,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Cube, Shape::Sphere, Shape::Cylinder];
}

impl Color {
    pub const ALL: [Color; 8] = [
        Color::Gray,
        Color::Red,
        Color::Blue,
        Color::Green,
        Color::Brown,
        Color::Purple,
        Color::Cyan,
        Color::Yellow,
    ];
}

impl Material {
    pub const ALL: [Material; 2] = [Material::Rubber, Material::Metal];
}

impl Size {
    pub const ALL: [Size; 2] = [Size::Small, Size::Large];
}

macro_rules! word {
    ($ty:ty { $($variant:ident => $s:literal),+ $(,)? }) => {
        impl $ty {
            pub fn word(self) -> &'static str {
                match self { $(Self::$variant => $s),+ }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.word())
            }
        }
    };
}

word!(Shape { Cube => "cube", Sphere => "sphere", Cylinder => "cylinder" });
word!(Color {
    Gray => "gray", Red => "red", Blue => "blue", Green => "green",
    Brown => "brown", Purple => "purple", Cyan => "cyan", Yellow => "yellow",
});
word!(Material { Rubber => "rubber", Metal => "metal" });
word!(Size { Small => "small", Large => "large" });

/// The four object attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Attribute {
    Shape,
    Color,
    Material,
    Size,
}

impl Attribute {
    pub const ALL: [Attribute; 4] = [
        Attribute::Shape,
        Attribute::Color,
        Attribute::Material,
        Attribute::Size,
    ];

    pub fn word(self) -> &'static str {
        match self {
            Attribute::Shape => "shape",
            Attribute::Color => "color",
            Attribute::Material => "material",
            Attribute::Size => "size",
        }
    }

    /// Every value this attribute can take.
    pub fn values(self) -> Vec<AttributeValue> {
        match self {
            Attribute::Shape => Shape::ALL.map(AttributeValue::Shape).to_vec(),
            Attribute::Color => Color::ALL.map(AttributeValue::Color).to_vec(),
            Attribute::Material => Material::ALL.map(AttributeValue::Material).to_vec(),
            Attribute::Size => Size::ALL.map(AttributeValue::Size).to_vec(),
        }
    }
}

/// A value of one attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "attribute", content = "value", rename_all = "lowercase")]
pub enum AttributeValue {
    Shape(Shape),
    Color(Color),
    Material(Material),
    Size(Size),
}

impl AttributeValue {
    pub fn attribute(self) -> Attribute {
        match self {
            AttributeValue::Shape(_) => Attribute::Shape,
            AttributeValue::Color(_) => Attribute::Color,
            AttributeValue::Material(_) => Attribute::Material,
            AttributeValue::Size(_) => Attribute::Size,
        }
    }

    pub fn word(self) -> &'static str {
        match self {
            AttributeValue::Shape(v) => v.word(),
            AttributeValue::Color(v) => v.word(),
            AttributeValue::Material(v) => v.word(),
            AttributeValue::Size(v) => v.word(),
        }
    }
}

/// Field order gives the canonical sort: shape, color, material, size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SceneObject {
    pub shape: Shape,
    pub color: Color,
    pub material: Material,
    pub size: Size,
}

/// Number of distinct objects.
pub const OBJECT_KINDS: usize = 3 * 8 * 2 * 2;

impl SceneObject {
    pub fn new(shape: Shape, color: Color, material: Material, size: Size) -> Self {
        Self {
            shape,
            color,
            material,
            size,
        }
    }

    pub fn get(&self, attribute: Attribute) -> AttributeValue {
        match attribute {
            Attribute::Shape => AttributeValue::Shape(self.shape),
            Attribute::Color => AttributeValue::Color(self.color),
            Attribute::Material => AttributeValue::Material(self.material),
            Attribute::Size => AttributeValue::Size(self.size),
        }
    }

    pub fn with(mut self, value: AttributeValue) -> Self {
        match value {
            AttributeValue::Shape(v) => self.shape = v,
            AttributeValue::Color(v) => self.color = v,
            AttributeValue::Material(v) => self.material = v,
            AttributeValue::Size(v) => self.size = v,
        }
        self
    }

    /// Number of attributes on which two objects differ (0..=4).
    pub fn attribute_differences(&self, other: &SceneObject) -> usize {
        Attribute::ALL
            .iter()
            .filter(|&&a| self.get(a) != other.get(a))
            .count()
    }

    /// Dense code in `0..OBJECT_KINDS`, monotone in the canonical order.
    pub fn code(&self) -> u8 {
        ((self.shape as u8 * 8 + self.color as u8) * 2 + self.material as u8) * 2 + self.size as u8
    }

    pub fn all() -> impl Iterator<Item = SceneObject> {
        Shape::ALL.into_iter().flat_map(|shape| {
            Color::ALL.into_iter().flat_map(move |color| {
                Material::ALL.into_iter().flat_map(move |material| {
                    Size::ALL
                        .into_iter()
                        .map(move |size| SceneObject::new(shape, color, material, size))
                })
            })
        })
    }
}

/// A scene; `objects` is always kept in canonical (sorted) order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scene {
    pub id: String,
    objects: Vec<SceneObject>,
}

impl Scene {
    pub fn new(id: impl Into<String>, mut objects: Vec<SceneObject>) -> Self {
        objects.sort_unstable();
        Self {
            id: id.into(),
            objects,
        }
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// Hashable identity of the attribute multiset.
    pub fn key(&self) -> SceneKey {
        SceneKey(self.objects.iter().map(SceneObject::code).collect())
    }

    /// Canonical text form of the attribute multiset.
    pub fn fingerprint(&self) -> String {
        self.objects
            .iter()
            .map(|o| format!("{}-{}-{}-{}", o.shape, o.color, o.material, o.size))
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// Sorted object codes; equal iff the scenes are equal as multisets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SceneKey(pub Vec<u8>);

/// What turns a scene into one of its children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModificationKind {
    /// Set one attribute of the object at `object` (canonical index).
    ChangeAttribute {
        object: usize,
        value: AttributeValue,
    },
    AddObject {
        added: SceneObject,
    },
}

/// A modification together with its instruction sentence, which is a pure
/// function of the kind and the scene it applies to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Modification {
    pub kind: ModificationKind,
    pub instruction: String,
}

impl Modification {
    pub fn new(scene: &Scene, kind: ModificationKind) -> Self {
        Self {
            instruction: render_instruction(scene, &kind),
            kind,
        }
    }
}
