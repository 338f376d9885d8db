//! `<name>.emb` + `<name>.emb.json` on-disk format.
//!
//! The `.emb` blob is the row-major vector buffer as 64-bit little-endian
//! floats with no header. The JSON sidecar carries everything else:
//!
//! ```json
//! {
//!   "version": 1,
//!   "dim": 32,
//!   "count": 2,
//!   "dtype": "f64le",
//!   "points": [
//!     {"id": "s00000#image", "domain": "image", "labels": ["b03"]},
//!     {"id": "s00001#image", "domain": "image", "labels": []}
//!   ]
//! }
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DomainTag, EmbeddingSet, Labels, Point};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const FORMAT_VERSION: u32 = 1;
const DTYPE: &str = "f64le";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingHeader {
    pub version: u32,
    pub dim: usize,
    pub count: usize,
    pub dtype: String,
    pub points: Vec<PointMeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointMeta {
    pub id: String,
    pub domain: DomainTag,
    #[serde(default)]
    pub labels: Labels,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn save<T: Real>(set: &EmbeddingSet<T>, path: &Path) -> Result<()> {
    let mut blob = Vec::with_capacity(set.as_flat().len() * 8);
    for v in set.as_flat() {
        blob.extend_from_slice(&v.to_f64_lossy().to_le_bytes());
    }
    let header = EmbeddingHeader {
        version: FORMAT_VERSION,
        dim: set.dim(),
        count: set.len(),
        dtype: DTYPE.into(),
        points: (0..set.len())
            .map(|i| PointMeta {
                id: set.id(i).to_string(),
                domain: set.domain(i),
                labels: set.labels(i).clone(),
            })
            .collect(),
    };
    let mut json = serde_json::to_vec_pretty(&header).expect("header serializes");
    json.push(b'\n');
    fs::write(path, blob)?;
    fs::write(sidecar_path(path), json)?;
    Ok(())
}

pub fn load<T: Real>(path: &Path) -> Result<EmbeddingSet<T>> {
    let meta_path = sidecar_path(path);
    let text = fs::read_to_string(&meta_path)?;
    let header: EmbeddingHeader = serde_json::from_str(&text).map_err(|e| Error::MalformedFile {
        path: meta_path.clone(),
        offset: byte_offset(&text, e.line(), e.column()),
        reason: e.to_string(),
    })?;
    let malformed = |offset: u64, reason: String| Error::MalformedFile {
        path: meta_path.clone(),
        offset,
        reason,
    };
    if header.version != FORMAT_VERSION {
        return Err(malformed(0, format!("unsupported version {}", header.version)));
    }
    if header.dtype != DTYPE {
        return Err(malformed(0, format!("unsupported dtype `{}`", header.dtype)));
    }
    if header.points.len() != header.count {
        return Err(malformed(
            0,
            format!(
                "count is {} but {} points listed",
                header.count,
                header.points.len()
            ),
        ));
    }

    let blob = fs::read(path)?;
    let (dim, count) = (header.dim, header.count);
    let row_bytes = dim * 8;
    let expected = count * row_bytes;
    if blob.len() != expected {
        let floats = blob.len() / 8;
        if blob.len() % 8 == 0 && count > 0 && floats % count == 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: floats / count,
            });
        }
        let (offset, reason) = if blob.len() < expected {
            let complete_rows = if row_bytes == 0 { 0 } else { blob.len() / row_bytes };
            ((complete_rows * row_bytes) as u64, "truncated row".to_string())
        } else {
            (expected as u64, "trailing bytes after last row".to_string())
        };
        return Err(Error::MalformedFile {
            path: path.to_path_buf(),
            offset,
            reason,
        });
    }

    let points = header
        .points
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            let row = &blob[i * row_bytes..(i + 1) * row_bytes];
            let vector = row
                .chunks_exact(8)
                .map(|b| T::from_f64_lossy(f64::from_le_bytes(b.try_into().unwrap())))
                .collect();
            Point {
                id: m.id,
                domain: m.domain,
                vector,
                labels: m.labels,
            }
        })
        .collect();
    if count == 0 {
        return Ok(EmbeddingSet::empty(dim.max(1)));
    }
    EmbeddingSet::new(dim, points)
}

fn byte_offset(text: &str, line: usize, column: usize) -> u64 {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::normalize_to_sphere;

    fn sample() -> EmbeddingSet<f64> {
        let pts = vec![
            Point::new("a", DomainTag::Image, vec![0.1, 0.2, 0.3]).with_labels(["car", "van"]),
            Point::new("b", DomainTag::Text, vec![-1.0, 0.5, 1e-7]),
            Point::new("c", DomainTag::Image, vec![1.0 / 3.0, 2.0, -7.0]).with_labels(["x"]),
        ];
        EmbeddingSet::normalized(3, pts).unwrap()
    }

    #[test]
    fn roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.emb");
        let set = sample();
        save(&set, &path).unwrap();
        let back: EmbeddingSet<f64> = load(&path).unwrap();
        assert_eq!(back.ids(), set.ids());
        assert_eq!(back.domains(), set.domains());
        assert_eq!(back.all_labels(), set.all_labels());
        for (x, y) in back.as_flat().iter().zip(set.as_flat()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn f32_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.emb");
        let set: EmbeddingSet<f32> = sample().cast();
        save(&set, &path).unwrap();
        let back: EmbeddingSet<f32> = load(&path).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn truncated_blob_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.emb");
        save(&sample(), &path).unwrap();
        let blob = fs::read(&path).unwrap();
        fs::write(&path, &blob[..blob.len() - 5]).unwrap();
        match load::<f64>(&path) {
            Err(Error::MalformedFile { offset, .. }) => assert_eq!(offset, 48),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_sidecar_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.emb");
        save(&sample(), &path).unwrap();
        let meta = sidecar_path(&path);
        let text = fs::read_to_string(&meta).unwrap();
        fs::write(&meta, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load::<f64>(&path), Err(Error::MalformedFile { .. })));
    }

    #[test]
    fn mixed_dims_are_a_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.emb");
        save(&sample(), &path).unwrap();
        // Rewrite the blob as if each row had four components.
        let wide = normalize_to_sphere::<f64>(&[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ])
        .unwrap();
        let blob: Vec<u8> = wide.as_flat().iter().flat_map(|v| v.to_le_bytes()).collect();
        fs::write(&path, blob).unwrap();
        assert!(matches!(
            load::<f64>(&path),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 4
            })
        ));
    }

    #[test]
    fn byte_offset_counts_lines() {
        assert_eq!(byte_offset("ab\ncd\n", 2, 2), 4);
        assert_eq!(byte_offset("abc", 1, 1), 0);
    }
}
