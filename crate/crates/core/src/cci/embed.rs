use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{CciDataset, Scene};
use crate::embedding::{unit, DomainTag, EmbeddingSet, Point};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// One-hot block widths: shape 3, color 8, material 2, size 2.
pub const ENCODING_WIDTH: usize = 15;

fn base_encoding(scene: &Scene, dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    for o in scene.objects() {
        v[o.shape as usize] += 1.0;
        v[3 + o.color as usize] += 1.0;
        v[11 + o.material as usize] += 1.0;
        v[13 + o.size as usize] += 1.0;
    }
    v
}

/// Unit vector for a scene: summed one-hot attribute blocks, zero padded to
/// `dim`, plus isotropic Gaussian noise of scale `noise_sigma`. The domain
/// only selects which draw of noise the caller's `rng` provides; with zero
/// noise both domains coincide.
pub fn scene_embedding<T: Real, R: Rng + ?Sized>(
    scene: &Scene,
    dim: usize,
    noise_sigma: f64,
    rng: &mut R,
    _domain: DomainTag,
) -> Result<Vec<T>> {
    if dim < ENCODING_WIDTH {
        return Err(Error::DimensionTooSmall {
            dim,
            required: ENCODING_WIDTH,
        });
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise_sigma must be finite and non-negative, got {noise_sigma}"
        )));
    }
    let mut v = base_encoding(scene, dim);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    if noise_sigma > 0.0 {
        let normal = Normal::new(0.0, noise_sigma).expect("valid sigma");
        for x in &mut v {
            *x += normal.sample(rng);
        }
    }
    let v: Vec<T> = v.into_iter().map(T::from_f64_lossy).collect();
    unit(&v).ok_or(Error::ZeroVector { index: 0 })
}

/// Embedding id of a scene in a domain: `<scene id>#image` / `#text`.
pub fn embedding_id(scene_id: &str, domain: DomainTag) -> String {
    match domain {
        DomainTag::Image => format!("{scene_id}#image"),
        DomainTag::Text => format!("{scene_id}#text"),
    }
}

/// Embeds every scene of `dataset` in one domain. Each scene draws its noise
/// from its own ChaCha stream (`2 * index + domain`), so the result does not
/// depend on thread count and image/text noise is independent.
pub fn embed_dataset<T: Real, F>(
    dataset: &CciDataset,
    dim: usize,
    noise_sigma: f64,
    seed: u64,
    domain: DomainTag,
    labels: F,
) -> Result<EmbeddingSet<T>>
where
    F: Fn(usize) -> Vec<String> + Sync,
{
    let offset = match domain {
        DomainTag::Image => 0,
        DomainTag::Text => 1,
    };
    let points = dataset
        .scenes
        .par_iter()
        .enumerate()
        .map(|(i, scene)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 * i as u64 + offset);
            let v = scene_embedding(scene, dim, noise_sigma, &mut rng, domain).map_err(|e| match e {
                Error::ZeroVector { .. } => Error::ZeroVector { index: i },
                e => e,
            })?;
            Ok(Point::new(embedding_id(&scene.id, domain), domain, v).with_labels(labels(i)))
        })
        .collect::<Result<Vec<_>>>()?;
    if points.is_empty() {
        return Ok(EmbeddingSet::empty(dim));
    }
    EmbeddingSet::new(dim, points)
}

/// Strips the `#image` / `#text` suffix from an embedding id.
pub fn scene_id_of(embedding_id: &str) -> &str {
    embedding_id
        .rsplit_once('#')
        .map_or(embedding_id, |(scene, _)| scene)
}
