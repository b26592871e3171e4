//! JSONL schemas for datasets and equivalence sets.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Parser, Theory};
use crate::reasoner::{Label, ProofGraph};

use super::{Depth, GoldAnnotation, Instance, PerturbMode, Question, RenamingMap};

/// Version of the dataset, equivalence-set and training-record layouts.
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Json {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Schema(String),
}

impl DatasetError {
    pub fn is_io(&self) -> bool {
        matches!(self, DatasetError::Io { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub depth: Depth,
    pub proofs: Vec<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub id: String,
    /// `sent1`..`sentK` in order.
    pub sentences: IndexMap<String, String>,
    pub questions: Vec<QuestionRecord>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceRecord {
    #[serde(flatten)]
    pub instance: InstanceRecord,
    pub base_id: String,
    /// 1-based.
    pub variant_index: usize,
    pub mode: PerturbMode,
    pub mapping: IndexMap<String, String>,
}

impl EquivalenceRecord {
    pub fn new(variant: &Instance, base_id: &str, variant_index: usize, map: &RenamingMap) -> Self {
        EquivalenceRecord {
            instance: InstanceRecord::from(variant),
            base_id: base_id.to_string(),
            variant_index,
            mode: map.mode,
            mapping: map.mapping.clone(),
        }
    }

    pub fn renaming(&self) -> RenamingMap {
        RenamingMap {
            mode: self.mode,
            mapping: self.mapping.clone(),
        }
    }
}

impl From<&Instance> for InstanceRecord {
    fn from(inst: &Instance) -> Self {
        InstanceRecord {
            id: inst.id().to_string(),
            sentences: inst
                .theory
                .rendered()
                .into_iter()
                .map(|(id, text)| (id.to_string(), text))
                .collect(),
            questions: inst
                .questions
                .iter()
                .map(|q| QuestionRecord {
                    id: q.id.clone(),
                    text: q.statement.render(),
                    label: q.gold.label,
                    depth: q.gold.depth,
                    proofs: q.gold.proofs.clone(),
                    truncated: q.gold.truncated,
                })
                .collect(),
        }
    }
}

impl InstanceRecord {
    /// Parses and validates the record.
    pub fn to_instance(&self, parser: &Parser) -> Result<Instance, DatasetError> {
        let bad = |msg: String| DatasetError::Schema(format!("instance {}: {msg}", self.id));
        let mut lines = Vec::with_capacity(self.sentences.len());
        for (i, (key, text)) in self.sentences.iter().enumerate() {
            if *key != format!("sent{}", i + 1) {
                return Err(bad(format!(
                    "sentence keys must be sent1..sentK in order, found `{key}`"
                )));
            }
            if text.trim().is_empty() {
                return Err(bad(format!("{key} is empty")));
            }
            lines.push(text.as_str());
        }
        let theory: Theory = parser.parse_theory(&self.id, &lines).map_err(|e| bad(e.to_string()))?;
        let mut questions = Vec::with_capacity(self.questions.len());
        for q in &self.questions {
            let statement = parser
                .parse_statement(&q.text)
                .map_err(|e| bad(format!("{}: {e}", q.id)))?;
            let unknown = q.label == Label::Unknown;
            if unknown != q.proofs.is_empty() || unknown != (q.depth == Depth::NotApplicable) {
                return Err(bad(format!(
                    "{}: label unknown must coincide with no proofs and depth N/A",
                    q.id
                )));
            }
            for p in &q.proofs {
                ProofGraph::parse(p).map_err(|e| bad(format!("{}: {e}", q.id)))?;
            }
            questions.push(Question {
                id: q.id.clone(),
                statement,
                gold: GoldAnnotation {
                    label: q.label,
                    depth: q.depth,
                    proofs: q.proofs.clone(),
                    truncated: q.truncated,
                },
            });
        }
        Ok(Instance { theory, questions })
    }
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| DatasetError::Json {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    for item in items {
        let line = serde_json::to_string(item).map_err(|e| DatasetError::Schema(e.to_string()))?;
        writeln!(w, "{line}").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}
