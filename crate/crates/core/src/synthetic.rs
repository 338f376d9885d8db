//! Two interleaved arcs (the "two moons" layout) wrapped onto the sphere.
//!
//! Planar points are drawn along two half circles, jittered with Gaussian
//! noise, scaled, and lifted through the exponential map at the north pole
//! of S², then placed in `dim` dimensions by a random rotation. The arms
//! interleave, so straight-line neighbours near an arm's tip often belong to
//! the other arm while paths along the arms do not cross.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::embedding::{CorrespondenceMap, DomainTag, EmbeddingSet, Point};
use crate::error::{Error, Result};
use crate::linalg::{random_rotation, Matrix};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArcWorld {
    pub per_class: usize,
    /// Planar noise standard deviation.
    pub noise: f64,
    /// Radians per planar unit.
    pub scale: f64,
    /// Vertical offset of the second arm; smaller values interleave more.
    pub offset: f64,
    pub dim: usize,
    pub seed: u64,
}

impl Default for ArcWorld {
    fn default() -> Self {
        Self {
            per_class: 500,
            noise: 0.02,
            scale: 0.4,
            offset: 0.75,
            dim: 3,
            seed: 0,
        }
    }
}

/// Planar position of parameter `t ∈ [0, π]` on arm `class` (0 or 1).
pub fn arc_position(class: usize, t: f64, offset: f64) -> [f64; 2] {
    if class == 0 {
        [t.cos(), t.sin()]
    } else {
        [1.0 - t.cos(), offset - t.sin()]
    }
}

/// Exponential map at the north pole of S² for a planar offset.
fn lift(p: [f64; 2], scale: f64) -> [f64; 3] {
    // Roughly centre the layout before lifting.
    let (x, y) = ((p[0] - 0.5) * scale, (p[1] - 0.25) * scale);
    let r = (x * x + y * y).sqrt();
    if r == 0.0 {
        return [0.0, 0.0, 1.0];
    }
    let s = r.sin() / r;
    [x * s, y * s, r.cos()]
}

impl ArcWorld {
    fn validate(&self) -> Result<()> {
        if self.dim < 3 {
            return Err(Error::DimensionTooSmall {
                dim: self.dim,
                required: 3,
            });
        }
        if !(self.noise >= 0.0 && self.noise.is_finite() && self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidArgument("noise must be >= 0 and scale > 0".into()));
        }
        Ok(())
    }

    fn rotation<T: Real>(&self) -> Matrix<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        random_rotation(&mut rng, self.dim)
    }

    fn embed<T: Real>(&self, rot: &Matrix<T>, p: [f64; 2]) -> Vec<T> {
        let q = lift(p, self.scale);
        let mut v = vec![T::zero(); self.dim];
        for (k, &x) in q.iter().enumerate() {
            v[k] = T::from_f64_lossy(x);
        }
        rot.mul_vec(&v)
    }

    /// Arm and parameter of every image point, class-major.
    fn parameters(&self, rng: &mut ChaCha8Rng) -> Vec<(usize, f64)> {
        (0..2)
            .flat_map(|c| (0..self.per_class).map(move |_| c))
            .map(|c| (c, rng.gen_range(0.0..=PI)))
            .collect()
    }

    fn jittered<R: Rng>(&self, class: usize, t: f64, rng: &mut R) -> [f64; 2] {
        let p = arc_position(class, t, self.offset);
        if self.noise == 0.0 {
            return p;
        }
        let n = Normal::new(0.0, self.noise).expect("valid sigma");
        [p[0] + n.sample(rng), p[1] + n.sample(rng)]
    }

    /// Image points `i<k>` labelled `arc0` / `arc1`.
    pub fn images<T: Real>(&self) -> Result<EmbeddingSet<T>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let rot = self.rotation::<T>();
        let params = self.parameters(&mut rng);
        let points = params
            .iter()
            .enumerate()
            .map(|(k, &(c, t))| {
                let v = self.embed(&rot, self.jittered(c, t, &mut rng));
                Point::new(format!("i{k}"), DomainTag::Image, v).with_labels([format!("arc{c}")])
            })
            .collect();
        EmbeddingSet::normalized(self.dim, points)
    }

    /// Images plus one text point `t<k>` per image, placed on the same arm
    /// at a parameter offset uniform in `±text_offset` with fresh noise.
    /// Texts carry their image's label and are paired with it in the
    /// returned map (image id, text id).
    pub fn images_with_texts<T: Real>(
        &self,
        text_offset: f64,
    ) -> Result<(EmbeddingSet<T>, EmbeddingSet<T>, CorrespondenceMap)> {
        let images = self.images::<T>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let params = self.parameters(&mut rng);
        rng.set_stream(2);
        let rot = self.rotation::<T>();
        let mut pairs = Vec::with_capacity(params.len());
        let points = params
            .iter()
            .enumerate()
            .map(|(k, &(c, t))| {
                let dt = if text_offset > 0.0 {
                    rng.gen_range(-text_offset..=text_offset)
                } else {
                    0.0
                };
                let v = self.embed(&rot, self.jittered(c, (t + dt).clamp(0.0, PI), &mut rng));
                pairs.push((format!("i{k}"), format!("t{k}")));
                Point::new(format!("t{k}"), DomainTag::Text, v).with_labels([format!("arc{c}")])
            })
            .collect();
        let texts = EmbeddingSet::normalized(self.dim, points)?;
        Ok((images, texts, CorrespondenceMap::new(pairs)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::great_circle_distance;

    #[test]
    fn arms_are_separated() {
        let w = ArcWorld {
            per_class: 200,
            ..ArcWorld::default()
        };
        let set: EmbeddingSet<f64> = w.images().unwrap();
        assert_eq!(set.len(), 400);
        let mut min_cross = f64::INFINITY;
        for i in 0..200 {
            for j in 200..400 {
                min_cross = min_cross.min(great_circle_distance(set.vector(i), set.vector(j)).unwrap());
            }
        }
        // Planar gap is about 0.25 before noise.
        assert!(min_cross > 0.05, "{min_cross}");
        assert_eq!(set.primary_label(0), Some("arc0"));
        assert_eq!(set.primary_label(399), Some("arc1"));
    }

    #[test]
    fn deterministic_and_dimensioned() {
        let w = ArcWorld {
            per_class: 10,
            dim: 8,
            seed: 3,
            ..ArcWorld::default()
        };
        let a: EmbeddingSet<f64> = w.images().unwrap();
        assert_eq!(a, w.images().unwrap());
        assert_eq!(a.dim(), 8);
        let (imgs, texts, corr) = w.images_with_texts::<f64>(0.1).unwrap();
        assert_eq!(imgs, a);
        assert_eq!(texts.len(), 20);
        assert_eq!(corr.len(), 20);
        assert!(matches!(
            ArcWorld { dim: 2, ..w }.images::<f64>(),
            Err(Error::DimensionTooSmall { .. })
        ));
    }
}
