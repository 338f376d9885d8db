//! JSON-lines dataset files and CSV triple exports.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{apply_modification, CciDataset, Modification, ModificationKind, Scene, SceneObject, Triple};
use crate::error::{Error, Result};

/// One line of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRecord {
    pub id: String,
    pub iteration: usize,
    pub parent: Option<String>,
    pub modification: Option<ModificationKind>,
    pub instruction: Option<String>,
    pub objects: Vec<SceneObject>,
    pub max_objects: usize,
}

pub fn write_jsonl(dataset: &CciDataset, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for (i, scene) in dataset.scenes.iter().enumerate() {
        let link = dataset.parents[i].as_ref();
        let record = SceneRecord {
            id: scene.id.clone(),
            iteration: dataset.iterations[i],
            parent: link.map(|(p, _)| dataset.scenes[*p].id.clone()),
            modification: link.map(|(_, m)| m.kind),
            instruction: link.map(|(_, m)| m.instruction.clone()),
            objects: scene.objects().to_vec(),
            max_objects: dataset.max_objects,
        };
        serde_json::to_writer(&mut out, &record).expect("record serializes");
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a dataset, checking every parent link: the parent precedes the
/// child, iterations step by one, the stored objects equal the modification
/// applied to the parent, and the instruction matches its template.
pub fn read_jsonl(path: &Path) -> Result<CciDataset> {
    let text = fs::read_to_string(path)?;
    let mut dataset = CciDataset {
        scenes: Vec::new(),
        parents: Vec::new(),
        iterations: Vec::new(),
        max_objects: 0,
    };
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut offset = 0u64;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len() as u64;
        let body = line.trim_end();
        if body.is_empty() {
            continue;
        }
        let bad = |reason: String| Error::MalformedFile {
            path: path.to_path_buf(),
            offset: start,
            reason,
        };
        let rec: SceneRecord = serde_json::from_str(body).map_err(|e| Error::MalformedFile {
            path: path.to_path_buf(),
            offset: start + e.column().saturating_sub(1) as u64,
            reason: e.to_string(),
        })?;
        if index.contains_key(&rec.id) {
            return Err(Error::IdCollision(rec.id));
        }
        if dataset.scenes.is_empty() {
            dataset.max_objects = rec.max_objects;
        } else if rec.max_objects != dataset.max_objects {
            return Err(bad("max_objects differs from earlier records".into()));
        }
        let scene = Scene::new(rec.id.clone(), rec.objects);
        let link = match (rec.parent, rec.modification, rec.instruction) {
            (None, None, None) => {
                if rec.iteration != 0 {
                    return Err(bad(format!(
                        "scene `{}` has no parent but iteration {}",
                        rec.id, rec.iteration
                    )));
                }
                None
            }
            (Some(pid), Some(kind), Some(instruction)) => {
                let p = *index
                    .get(&pid)
                    .ok_or_else(|| bad(format!("parent `{pid}` not defined before `{}`", rec.id)))?;
                if dataset.iterations[p] + 1 != rec.iteration {
                    return Err(bad(format!(
                        "iteration of `{}` does not follow its parent",
                        rec.id
                    )));
                }
                let parent = &dataset.scenes[p];
                let child = apply_modification(parent, &kind, dataset.max_objects)?;
                if child.key() != scene.key() {
                    return Err(bad(format!(
                        "objects of `{}` do not match its modification",
                        rec.id
                    )));
                }
                let m = Modification::new(parent, kind);
                if m.instruction != instruction {
                    return Err(bad(format!(
                        "instruction of `{}` does not match its modification",
                        rec.id
                    )));
                }
                Some((p, m))
            }
            _ => {
                return Err(bad(format!(
                    "scene `{}` must carry all of parent, modification and instruction or none",
                    rec.id
                )))
            }
        };
        index.insert(rec.id, dataset.scenes.len());
        dataset.scenes.push(scene);
        dataset.parents.push(link);
        dataset.iterations.push(rec.iteration);
    }
    Ok(dataset)
}

#[derive(Serialize)]
struct TripleRow<'a> {
    source_id: &'a str,
    instruction: &'a str,
    target_id: &'a str,
    split: &'a str,
}

pub fn write_triples_csv(train: &[Triple], test: &[Triple], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for (split, triples) in [("train", train), ("test", test)] {
        for t in triples {
            w.serialize(TripleRow {
                source_id: &t.source_id,
                instruction: &t.instruction,
                target_id: &t.target_id,
                split,
            })
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::InvalidArgument(format!("{other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cci::{generate_cci, retrieval_triples, CciConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dataset() -> CciDataset {
        let cfg = CciConfig {
            iterations: 2,
            branching: 4,
            ..CciConfig::default()
        };
        generate_cci(&cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap()
    }

    #[test]
    fn jsonl_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let d = dataset();
        write_jsonl(&d, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 21);
        assert_eq!(read_jsonl(&path).unwrap(), d);
    }

    #[test]
    fn tampered_objects_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        write_jsonl(&dataset(), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut rec: SceneRecord = serde_json::from_str(&lines[3]).unwrap();
        rec.objects.pop();
        lines[3] = serde_json::to_string(&rec).unwrap();
        fs::write(&path, lines.join("\n")).unwrap();
        let expected = (lines[0].len() + lines[1].len() + lines[2].len() + 3) as u64;
        match read_jsonl(&path) {
            Err(Error::MalformedFile { offset, .. }) => assert_eq!(offset, expected),
            Err(Error::InvalidModification(_)) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn triples_csv_has_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let (train, test) = retrieval_triples(&dataset());
        write_triples_csv(&train, &test, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("source_id,instruction,target_id,split"));
        assert_eq!(lines.count(), 20);
        assert!(text.contains(",train\n") && text.contains(",test\n"));
    }
}
