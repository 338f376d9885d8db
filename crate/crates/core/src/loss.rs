//! Batch softmax ranking loss between paired image and text vectors, and a
//! projected-gradient fitter that moves free text vectors toward their
//! images.
//!
//! For a batch of `B` pairs `(ψᵢ, φᵢ)` the loss is
//! `(1/B) Σᵢ [log Σⱼ exp(ψᵢ·φⱼ) − ψᵢ·φᵢ]`; the matched pair is part of the
//! denominator and there is no temperature.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{unit, CorrespondenceMap, EmbeddingSet};
use crate::error::{Error, Result};
use crate::scalar::{dot, Real};

/// Row `i` of `images` is paired with row `i` of `texts`.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch<T> {
    pub images: Vec<Vec<T>>,
    pub texts: Vec<Vec<T>>,
}

impl<T: Real> Batch<T> {
    pub fn new(images: Vec<Vec<T>>, texts: Vec<Vec<T>>) -> Result<Self> {
        if images.len() != texts.len() {
            return Err(Error::LengthMismatch {
                left: images.len(),
                right: texts.len(),
            });
        }
        if images.is_empty() {
            return Err(Error::InvalidArgument("batch must hold at least one pair".into()));
        }
        let d = images[0].len();
        for v in images.iter().chain(&texts) {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
        }
        Ok(Self { images, texts })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Row-wise softmax of the similarity matrix, plus each row's
    /// `logsumexp − diagonal` term.
    fn softmax_rows(&self) -> (Vec<Vec<T>>, Vec<T>) {
        self.images
            .par_iter()
            .enumerate()
            .map(|(i, psi)| {
                let s: Vec<T> = self.texts.iter().map(|phi| dot(psi, phi)).collect();
                let m = s.iter().copied().fold(T::neg_infinity(), T::max);
                let e: Vec<T> = s.iter().map(|&x| (x - m).exp()).collect();
                let z: T = e.iter().copied().sum();
                let term = m + z.ln() - s[i];
                (e.into_iter().map(|x| x / z).collect(), term)
            })
            .unzip()
    }
}

pub fn ranking_loss<T: Real>(batch: &Batch<T>) -> T {
    let (_, terms) = batch.softmax_rows();
    let b = T::from_usize_lossy(batch.len());
    // Each term is ≥ 0 in exact arithmetic; clamp rounding noise.
    terms.into_iter().sum::<T>().max(T::zero()) / b
}

/// Gradients of the loss with respect to every image and text vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub images: Vec<Vec<T>>,
    pub texts: Vec<Vec<T>>,
}

pub fn loss_gradient<T: Real>(batch: &Batch<T>) -> Gradients<T> {
    let (p, _) = batch.softmax_rows();
    let n = batch.len();
    let d = batch.images[0].len();
    let inv_b = T::one() / T::from_usize_lossy(n);
    let images = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut g = vec![T::zero(); d];
            for (j, phi) in batch.texts.iter().enumerate() {
                let w = p[i][j] - if i == j { T::one() } else { T::zero() };
                for (gk, &x) in g.iter_mut().zip(phi) {
                    *gk += w * x;
                }
            }
            g.iter_mut().for_each(|x| *x *= inv_b);
            g
        })
        .collect();
    let texts = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut g = vec![T::zero(); d];
            for (i, psi) in batch.images.iter().enumerate() {
                let w = p[i][j] - if i == j { T::one() } else { T::zero() };
                for (gk, &x) in g.iter_mut().zip(psi) {
                    *gk += w * x;
                }
            }
            g.iter_mut().for_each(|x| *x *= inv_b);
            g
        })
        .collect();
    Gradients { images, texts }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    pub steps: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            steps: 500,
            learning_rate: 0.5,
            batch_size: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub texts: EmbeddingSet<T>,
    /// Minibatch loss before each step.
    pub trace: Vec<f64>,
}

/// Projected minibatch gradient descent on the text vectors only. Every text
/// point must appear in exactly one pair of `corr`. Each step samples
/// `batch_size` pairs without replacement (all pairs if fewer), takes a
/// gradient step on the sampled text vectors and projects them back onto
/// the sphere.
pub fn fit_text_embeddings<T: Real, R: Rng + ?Sized>(
    images: &EmbeddingSet<T>,
    text_init: &EmbeddingSet<T>,
    corr: &CorrespondenceMap,
    config: &FitConfig,
    rng: &mut R,
) -> Result<FitResult<T>> {
    let pairs = corr.resolve(images, text_init)?;
    if pairs.len() != text_init.len() {
        return Err(Error::InvalidCorrespondence(format!(
            "{} pairs cover {} text points; every text point needs exactly one",
            pairs.len(),
            text_init.len()
        )));
    }
    if images.dim() != text_init.dim() {
        return Err(Error::DimensionMismatch {
            expected: images.dim(),
            found: text_init.dim(),
        });
    }
    if !(config.learning_rate.is_finite() && config.learning_rate >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be finite and non-negative, got {}",
            config.learning_rate
        )));
    }
    let mut texts: Vec<Vec<T>> = text_init.vectors().map(<[T]>::to_vec).collect();
    let mut trace = Vec::with_capacity(config.steps);
    let b = config.batch_size.clamp(1, pairs.len().max(1));
    let lr = T::from_f64_lossy(config.learning_rate);
    if !pairs.is_empty() {
        for _ in 0..config.steps {
            let chosen: Vec<(usize, usize)> = sample(rng, pairs.len(), b)
                .into_iter()
                .map(|k| pairs[k])
                .collect();
            let batch = Batch {
                images: chosen.iter().map(|&(i, _)| images.vector(i).to_vec()).collect(),
                texts: chosen.iter().map(|&(_, j)| texts[j].clone()).collect(),
            };
            trace.push(ranking_loss(&batch).to_f64_lossy());
            let grads = loss_gradient(&batch);
            for ((_, j), g) in chosen.iter().zip(grads.texts) {
                let stepped: Vec<T> = texts[*j].iter().zip(&g).map(|(&x, &gx)| x - lr * gx).collect();
                if let Some(u) = unit(&stepped) {
                    texts[*j] = u;
                }
            }
        }
    }
    Ok(FitResult {
        texts: text_init.with_vectors(texts)?,
        trace,
    })
}

/// Mean dot product over the corresponding pairs.
pub fn mean_matched_similarity<T: Real>(
    images: &EmbeddingSet<T>,
    texts: &EmbeddingSet<T>,
    corr: &CorrespondenceMap,
) -> Result<f64> {
    let pairs = corr.resolve(images, texts)?;
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = pairs
        .iter()
        .map(|&(i, j)| dot(images.vector(i), texts.vector(j)).to_f64_lossy())
        .sum();
    Ok(total / pairs.len() as f64)
}

/// Writes `step,loss` rows.
pub fn write_loss_trace(trace: &[f64], path: &std::path::Path) -> Result<()> {
    let mut out = String::from("step,loss\n");
    for (step, loss) in trace.iter().enumerate() {
        out.push_str(&format!("{step},{loss}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}
