//! Rigid alignment of paired point clouds.
//!
//! Two estimators share the same centred cross-covariance:
//!
//! * [`icp_verbatim`] is the single-pass SVD alignment exactly as usually
//!   written for paired embeddings: `R = V Uᵀ`, `t = mean(Ψ) − mean(Φ)`, no
//!   reflection handling. Its rotation maps the first cloud onto the second
//!   while its translation points the other way; it is kept for fidelity.
//! * [`procrustes_align`] is the Kabsch solution: the proper rotation and
//!   translation minimising the summed squared distance from the moved
//!   source to the target. Pipelines use this one.

use serde::{Deserialize, Serialize};

use crate::embedding::{unit, CorrespondenceMap, EmbeddingSet, Point};
use crate::error::{Error, Result};
use crate::linalg::{svd, Matrix};
use crate::scalar::{euclidean, Real};

/// `v ↦ R v + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidTransform<T> {
    pub rotation: Matrix<T>,
    pub translation: Vec<T>,
}

impl<T: Real> RigidTransform<T> {
    pub fn new(rotation: Matrix<T>, translation: Vec<T>) -> Result<Self> {
        let d = translation.len();
        if rotation.rows() != d || rotation.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rotation.rows(),
            });
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            rotation: Matrix::identity(d),
            translation: vec![T::zero(); d],
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    /// `(d+1)×(d+1)` homogeneous form with `R` top-left, `t` in the last
    /// column and `(0, …, 0, 1)` as the last row.
    pub fn homogeneous(&self) -> Matrix<T> {
        let d = self.dim();
        let mut h = Matrix::zeros(d + 1, d + 1);
        for i in 0..d {
            for j in 0..d {
                h[(i, j)] = self.rotation[(i, j)];
            }
            h[(i, d)] = self.translation[i];
        }
        h[(d, d)] = T::one();
        h
    }

    pub fn apply(&self, v: &[T]) -> Vec<T> {
        let mut out = self.rotation.mul_vec(v);
        for (o, &t) in out.iter_mut().zip(&self.translation) {
            *o += t;
        }
        out
    }

    /// `‖RᵀR − I‖_max`.
    pub fn orthogonality_error(&self) -> T {
        let r = &self.rotation;
        r.transpose()
            .matmul(r)
            .max_abs_diff(&Matrix::identity(self.dim()))
    }

    pub fn determinant(&self) -> T {
        self.rotation.determinant()
    }
}

/// Which estimator produced a transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignMethod {
    Verbatim,
    Procrustes,
}

/// An estimated transform plus the spectrum it came from.
#[derive(Debug, Clone)]
pub struct Alignment<T> {
    pub transform: RigidTransform<T>,
    pub method: AlignMethod,
    pub singular_values: Vec<T>,
    /// Set when the cross-covariance was rank deficient; the rotation is
    /// then not unique.
    pub degenerate: bool,
}

struct Centred<T> {
    mean_a: Vec<T>,
    mean_b: Vec<T>,
    /// `Âᵀ B̂`, d×d.
    cross: Matrix<T>,
}

fn check_pairs<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidArgument("no corresponding pairs".into()));
    }
    let d = a[0].len();
    for v in a.iter().chain(b) {
        if v.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
    }
    Ok(d)
}

fn cross_covariance<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> Result<Centred<T>> {
    let d = check_pairs(a, b)?;
    let mean_a = mean(a, d);
    let mean_b = mean(b, d);
    let mut cross = Matrix::zeros(d, d);
    let mut ca = vec![T::zero(); d];
    let mut cb = vec![T::zero(); d];
    for (u, v) in a.iter().zip(b) {
        for k in 0..d {
            ca[k] = u[k] - mean_a[k];
            cb[k] = v[k] - mean_b[k];
        }
        for r in 0..d {
            for c in 0..d {
                cross[(r, c)] += ca[r] * cb[c];
            }
        }
    }
    Ok(Centred {
        mean_a,
        mean_b,
        cross,
    })
}

fn mean<T: Real>(rows: &[Vec<T>], d: usize) -> Vec<T> {
    let mut m = vec![T::zero(); d];
    for r in rows {
        for (x, &y) in m.iter_mut().zip(r) {
            *x += y;
        }
    }
    let n = T::from_usize_lossy(rows.len());
    m.iter_mut().for_each(|x| *x /= n);
    m
}

/// Gathers the vectors of each corresponding pair, in `corr` order.
pub fn paired_rows<T: Real>(
    a: &EmbeddingSet<T>,
    b: &EmbeddingSet<T>,
    corr: &CorrespondenceMap,
) -> Result<(Vec<Vec<T>>, Vec<Vec<T>>)> {
    if corr.is_empty() {
        return Err(Error::InvalidArgument("correspondence map is empty".into()));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(corr
        .resolve(a, b)?
        .into_iter()
        .map(|(i, j)| (a.vector(i).to_vec(), b.vector(j).to_vec()))
        .unzip())
}

fn rank_tolerance<T: Real>(d: usize) -> T {
    T::epsilon() * T::from_usize_lossy(100 * d.max(1))
}

fn flag_degenerate<T: Real>(singular_values: &[T], d: usize) -> bool {
    let top = singular_values.first().copied().unwrap_or(T::zero());
    let rank = singular_values
        .iter()
        .filter(|&&s| s > top * rank_tolerance::<T>(d))
        .count();
    if rank < d {
        log::warn!("{}", Error::DegenerateCovariance { rank, dim: d });
        true
    } else {
        false
    }
}

/// Single-pass SVD alignment taken literally: centre both clouds,
/// `U S Vᵀ = SVD(Ψ̂ᵀ Φ̂)`, `R = V Uᵀ`, `t = mean(Ψ) − mean(Φ)`.
///
/// `corr` pairs ids of `psi` with ids of `phi`. No reflection correction is
/// applied, so `det(R)` may be −1.
pub fn icp_verbatim<T: Real>(
    psi: &EmbeddingSet<T>,
    phi: &EmbeddingSet<T>,
    corr: &CorrespondenceMap,
) -> Result<Alignment<T>> {
    let (a, b) = paired_rows(psi, phi, corr)?;
    icp_verbatim_points(&a, &b)
}

/// [`icp_verbatim`] on already paired rows (`psi[i]` ↔ `phi[i]`), which
/// need not lie on the sphere.
pub fn icp_verbatim_points<T: Real>(psi: &[Vec<T>], phi: &[Vec<T>]) -> Result<Alignment<T>> {
    let c = cross_covariance(psi, phi)?;
    let d = c.mean_a.len();
    let s = svd(&c.cross);
    let rotation = s.v.matmul(&s.u.transpose());
    let translation = c.mean_a.iter().zip(&c.mean_b).map(|(&a, &b)| a - b).collect();
    let degenerate = flag_degenerate(&s.singular_values, d);
    Ok(Alignment {
        transform: RigidTransform {
            rotation,
            translation,
        },
        method: AlignMethod::Verbatim,
        singular_values: s.singular_values,
        degenerate,
    })
}

/// Least-squares proper rigid motion taking `source` onto `target`.
///
/// `corr` pairs ids of `source` with ids of `target`. When the unconstrained
/// optimum is a reflection, the last singular direction is flipped so
/// `det(R) = +1`.
pub fn procrustes_align<T: Real>(
    source: &EmbeddingSet<T>,
    target: &EmbeddingSet<T>,
    corr: &CorrespondenceMap,
) -> Result<Alignment<T>> {
    let (a, b) = paired_rows(source, target, corr)?;
    procrustes_points(&a, &b)
}

/// [`procrustes_align`] on already paired rows.
pub fn procrustes_points<T: Real>(source: &[Vec<T>], target: &[Vec<T>]) -> Result<Alignment<T>> {
    let c = cross_covariance(source, target)?;
    let d = c.mean_a.len();
    let s = svd(&c.cross);
    let mut v = s.v.clone();
    if v.matmul(&s.u.transpose()).determinant() < T::zero() {
        for i in 0..d {
            v[(i, d - 1)] = -v[(i, d - 1)];
        }
    }
    let rotation = v.matmul(&s.u.transpose());
    let moved_mean = rotation.mul_vec(&c.mean_a);
    let translation = c.mean_b.iter().zip(&moved_mean).map(|(&b, &m)| b - m).collect();
    let degenerate = flag_degenerate(&s.singular_values, d);
    Ok(Alignment {
        transform: RigidTransform {
            rotation,
            translation,
        },
        method: AlignMethod::Procrustes,
        singular_values: s.singular_values,
        degenerate,
    })
}

/// Maps every vector through `transform`. With `renormalize` the results
/// are projected back onto the unit sphere; without it they must already
/// be unit length (pure rotations), otherwise `OffSphere` is returned.
pub fn apply_transform<T: Real>(
    transform: &RigidTransform<T>,
    set: &EmbeddingSet<T>,
    renormalize: bool,
) -> Result<EmbeddingSet<T>> {
    if transform.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            found: transform.dim(),
        });
    }
    let mut points = Vec::with_capacity(set.len());
    for i in 0..set.len() {
        let moved = transform.apply(set.vector(i));
        let vector = if renormalize {
            unit(&moved).ok_or(Error::ZeroVector { index: i })?
        } else {
            moved
        };
        points.push(Point {
            vector,
            ..set.point(i)
        });
    }
    EmbeddingSet::new(set.dim(), points)
}

/// Root-mean-square Euclidean distance over corresponding pairs.
pub fn alignment_residual<T: Real>(
    a: &EmbeddingSet<T>,
    b: &EmbeddingSet<T>,
    corr: &CorrespondenceMap,
) -> Result<T> {
    let (a, b) = paired_rows(a, b, corr)?;
    rms_residual(&a, &b)
}

/// RMS of `‖a[i] − b[i]‖`.
pub fn rms_residual<T: Real>(a: &[Vec<T>], b: &[Vec<T>]) -> Result<T> {
    check_pairs(a, b)?;
    let sum: T = a
        .iter()
        .zip(b)
        .map(|(u, v)| {
            let e = euclidean(u, v);
            e * e
        })
        .sum();
    Ok((sum / T::from_usize_lossy(a.len())).sqrt())
}

/// RMS residual after moving every `a[i]` by `transform`.
pub fn transformed_residual<T: Real>(transform: &RigidTransform<T>, a: &[Vec<T>], b: &[Vec<T>]) -> Result<T> {
    let moved: Vec<Vec<T>> = a.iter().map(|v| transform.apply(v)).collect();
    rms_residual(&moved, b)
}

/// JSON form of a transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformDocument {
    pub d: usize,
    pub method: AlignMethod,
    /// Row-major `d×d`.
    pub rotation: Vec<f64>,
    pub translation: Vec<f64>,
    pub residual_before: f64,
    pub residual_after: f64,
    pub degenerate: bool,
}

impl TransformDocument {
    pub fn new<T: Real>(alignment: &Alignment<T>, residual_before: T, residual_after: T) -> Self {
        let t = &alignment.transform;
        Self {
            d: t.dim(),
            method: alignment.method,
            rotation: t
                .rotation
                .as_row_major()
                .iter()
                .map(|x| x.to_f64_lossy())
                .collect(),
            translation: t.translation.iter().map(|x| x.to_f64_lossy()).collect(),
            residual_before: residual_before.to_f64_lossy(),
            residual_after: residual_after.to_f64_lossy(),
            degenerate: alignment.degenerate,
        }
    }

    pub fn transform<T: Real>(&self) -> Result<RigidTransform<T>> {
        if self.rotation.len() != self.d * self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d * self.d,
                found: self.rotation.len(),
            });
        }
        RigidTransform::new(
            Matrix::from_row_major(
                self.d,
                self.d,
                self.rotation.iter().map(|&x| T::from_f64_lossy(x)).collect(),
            ),
            self.translation.iter().map(|&x| T::from_f64_lossy(x)).collect(),
        )
    }
}
