//! Embedding point clouds on the unit sphere.
//!
//! An [`EmbeddingSet`] holds image and text features as unit vectors of a
//! shared dimension, together with their ids, domain tags and labels.
//! Vectors are stored row-major in a single buffer.

mod io;

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub use io::{load, save, sidecar_path, EmbeddingHeader, PointMeta, FORMAT_VERSION};

use crate::error::{Error, Result};
use crate::scalar::{norm, Real};

/// Which encoder a point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainTag {
    Image,
    Text,
}

/// Ordered, duplicate-free labels. The first entry is the primary label
/// (used to assign a point to a class); equality for multi-label scoring
/// ignores order.
pub type Labels = Vec<String>;

/// One point handed to [`EmbeddingSet::new`] or [`EmbeddingSet::normalized`].
#[derive(Debug, Clone, PartialEq)]
pub struct Point<T> {
    pub id: String,
    pub domain: DomainTag,
    pub vector: Vec<T>,
    pub labels: Labels,
}

impl<T> Point<T> {
    pub fn new(id: impl Into<String>, domain: DomainTag, vector: Vec<T>) -> Self {
        Self {
            id: id.into(),
            domain,
            vector,
            labels: Vec::new(),
        }
    }

    pub fn with_labels<I, S>(mut self, labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.labels = labels.into_iter().map(Into::into).collect();
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet<T> {
    dim: usize,
    ids: Vec<String>,
    domains: Vec<DomainTag>,
    labels: Vec<Labels>,
    data: Vec<T>,
}

impl<T: Real> EmbeddingSet<T> {
    /// Builds a set from points that are already unit length.
    pub fn new(dim: usize, points: Vec<Point<T>>) -> Result<Self> {
        Self::build(dim, points, false)
    }

    /// Builds a set, projecting every vector onto the unit sphere first.
    pub fn normalized(dim: usize, points: Vec<Point<T>>) -> Result<Self> {
        Self::build(dim, points, true)
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            ids: Vec::new(),
            domains: Vec::new(),
            labels: Vec::new(),
            data: Vec::new(),
        }
    }

    fn build(dim: usize, points: Vec<Point<T>>, normalize: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "embedding dimension must be positive".into(),
            ));
        }
        let mut set = Self::empty(dim);
        set.data.reserve(points.len() * dim);
        let mut seen = HashSet::with_capacity(points.len());
        for (index, p) in points.into_iter().enumerate() {
            if p.vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.vector.len(),
                });
            }
            if !seen.insert(p.id.clone()) {
                return Err(Error::IdCollision(p.id));
            }
            let vector = if normalize {
                unit(&p.vector).ok_or(Error::ZeroVector { index })?
            } else {
                check_unit(index, &p.vector)?;
                p.vector
            };
            set.ids.push(p.id);
            set.domains.push(p.domain);
            set.labels.push(dedup_labels(p.labels));
            set.data.extend(vector);
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn vector(&self, i: usize) -> &[T] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Row-major buffer of all vectors.
    pub fn as_flat(&self) -> &[T] {
        &self.data
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn domain(&self, i: usize) -> DomainTag {
        self.domains[i]
    }

    pub fn domains(&self) -> &[DomainTag] {
        &self.domains
    }

    pub fn labels(&self, i: usize) -> &Labels {
        &self.labels[i]
    }

    pub fn all_labels(&self) -> &[Labels] {
        &self.labels
    }

    pub fn primary_label(&self, i: usize) -> Option<&str> {
        self.labels[i].first().map(String::as_str)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    /// Map from id to index; cheaper than repeated [`Self::index_of`].
    pub fn id_index(&self) -> HashMap<&str, usize> {
        self.ids
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect()
    }

    pub fn indices_with_domain(&self, domain: DomainTag) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.domains[i] == domain).collect()
    }

    pub fn point(&self, i: usize) -> Point<T> {
        Point {
            id: self.ids[i].clone(),
            domain: self.domains[i],
            vector: self.vector(i).to_vec(),
            labels: self.labels[i].clone(),
        }
    }

    pub fn to_points(&self) -> Vec<Point<T>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Replaces the vectors, keeping ids, tags and labels. The new vectors
    /// must be unit length.
    pub fn with_vectors(&self, vectors: Vec<Vec<T>>) -> Result<Self> {
        if vectors.len() != self.len() {
            return Err(Error::LengthMismatch {
                left: vectors.len(),
                right: self.len(),
            });
        }
        let points = vectors
            .into_iter()
            .enumerate()
            .map(|(i, v)| Point {
                vector: v,
                ..self.point(i)
            })
            .collect();
        Self::new(self.dim, points)
    }

    /// Same metadata with every vector converted to another scalar type.
    pub fn cast<U: Real>(&self) -> EmbeddingSet<U> {
        EmbeddingSet {
            dim: self.dim,
            ids: self.ids.clone(),
            domains: self.domains.clone(),
            labels: self.labels.clone(),
            data: self
                .data
                .iter()
                .map(|v| U::from_f64_lossy(v.to_f64_lossy()))
                .collect(),
        }
    }
}

fn dedup_labels(labels: Labels) -> Labels {
    let mut seen = HashSet::new();
    labels.into_iter().filter(|l| seen.insert(l.clone())).collect()
}

fn check_unit<T: Real>(index: usize, v: &[T]) -> Result<()> {
    let n = norm(v);
    if (n - T::one()).abs() > T::unit_norm_tolerance() || !n.is_finite() {
        return Err(Error::OffSphere {
            index,
            norm: n.to_f64_lossy(),
        });
    }
    Ok(())
}

/// L2-normalizes a single vector, or `None` if its norm is below the
/// zero cutoff.
pub fn unit<T: Real>(v: &[T]) -> Option<Vec<T>> {
    let n = norm(v);
    if !(n >= T::zero_norm_cutoff()) {
        return None;
    }
    Some(v.iter().map(|&x| x / n).collect())
}

/// Projects raw vectors onto the unit sphere. Points get ids `p0, p1, ...`
/// and the image tag.
pub fn normalize_to_sphere<T: Real>(vectors: &[Vec<T>]) -> Result<EmbeddingSet<T>> {
    let dim = vectors.first().map_or(1, Vec::len);
    let points = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| Point::new(format!("p{i}"), DomainTag::Image, v.clone()))
        .collect();
    EmbeddingSet::normalized(dim, points)
}

/// Great-circle distance between two unit vectors, in radians.
pub fn great_circle_distance<T: Real>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: v.len(),
        });
    }
    Ok(arc(u, v))
}

/// Unchecked great-circle distance for same-length slices. The half-chord
/// form stays accurate for nearly equal and nearly opposite vectors, where
/// `acos` of the dot product loses about half the digits.
#[inline]
pub(crate) fn arc<T: Real>(u: &[T], v: &[T]) -> T {
    let (mut diff, mut sum) = (T::zero(), T::zero());
    for (&a, &b) in u.iter().zip(v) {
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    let two = T::one() + T::one();
    two * diff.sqrt().atan2(sum.sqrt())
}

/// Concatenates two sets, `a` first.
pub fn merge<T: Real>(a: &EmbeddingSet<T>, b: &EmbeddingSet<T>) -> Result<EmbeddingSet<T>> {
    if a.dim != b.dim && !a.is_empty() && !b.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    let ids: HashSet<&str> = a.ids.iter().map(String::as_str).collect();
    if let Some(dup) = b.ids.iter().find(|id| ids.contains(id.as_str())) {
        return Err(Error::IdCollision(dup.clone()));
    }
    let dim = if a.is_empty() { b.dim } else { a.dim };
    let mut out = a.clone();
    out.dim = dim;
    out.ids.extend(b.ids.iter().cloned());
    out.domains.extend(&b.domains);
    out.labels.extend(b.labels.iter().cloned());
    out.data.extend(&b.data);
    Ok(out)
}

/// Paired image/text ids used by the aligners and the text fitter.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorrespondenceMap {
    pub pairs: Vec<(String, String)>,
}

impl CorrespondenceMap {
    pub fn new(pairs: Vec<(String, String)>) -> Self {
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The same pairs with both sides swapped.
    pub fn flipped(&self) -> Self {
        Self {
            pairs: self.pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
        }
    }

    /// Pairs points whose ids share the same key, in the order of `images`.
    pub fn by_key<T: Real, F>(images: &EmbeddingSet<T>, texts: &EmbeddingSet<T>, key: F) -> Self
    where
        F: Fn(&str) -> String,
    {
        let text_by_key: HashMap<String, &str> =
            texts.ids().iter().map(|id| (key(id), id.as_str())).collect();
        let pairs = images
            .ids()
            .iter()
            .filter_map(|id| text_by_key.get(&key(id)).map(|t| (id.clone(), (*t).to_string())))
            .collect();
        Self { pairs }
    }

    /// Resolves ids to index pairs, checking membership and that no text id
    /// is used twice.
    pub fn resolve<T: Real>(
        &self,
        images: &EmbeddingSet<T>,
        texts: &EmbeddingSet<T>,
    ) -> Result<Vec<(usize, usize)>> {
        let img = images.id_index();
        let txt = texts.id_index();
        let mut used = HashSet::new();
        self.pairs
            .iter()
            .map(|(a, b)| {
                let i = *img.get(a.as_str()).ok_or_else(|| Error::UnknownId(a.clone()))?;
                let j = *txt.get(b.as_str()).ok_or_else(|| Error::UnknownId(b.clone()))?;
                if !used.insert(j) {
                    return Err(Error::InvalidCorrespondence(format!(
                        "text id `{b}` appears in more than one pair"
                    )));
                }
                Ok((i, j))
            })
            .collect()
    }
}
