//! Depth-controlled theory generation, gold annotation, perturbation into
//! equivalence sets, and training-record emission.

mod closure;
mod dataset;
mod generate;
mod perturb;
mod records;

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::lang::{Statement, Theory, Vocabulary};
use crate::reasoner::Label;

pub use closure::{assign_gold, gold_closure, Closure, ClosureEntry, Derivation, DEFAULT_PROOF_CAP};
pub use dataset::{
    read_jsonl, write_jsonl, DatasetError, EquivalenceRecord, InstanceRecord, QuestionRecord, SCHEMA_VERSION,
};
pub use generate::{generate_dataset, generate_instance, instance_rng, GenError};
pub use perturb::{perturb, EquivalenceSet, PerturbError, PerturbMode, RenamingMap};
pub use records::{emit_training_records, FsRecord, KcRecord, RsRecord, RsTarget, TrainingRecords};

/// Proof depth of a statement, or "N/A" when it is unprovable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Depth {
    Level(u32),
    NotApplicable,
}

impl fmt::Display for Depth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Depth::Level(n) => write!(f, "{n}"),
            Depth::NotApplicable => f.write_str("N/A"),
        }
    }
}

impl FromStr for Depth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "N/A" | "NA" | "unknown" => Ok(Depth::NotApplicable),
            n => n
                .parse()
                .map(Depth::Level)
                .map_err(|_| format!("bad depth `{s}` (expected an integer or N/A)")),
        }
    }
}

impl Serialize for Depth {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Depth::Level(n) => s.serialize_u32(*n),
            Depth::NotApplicable => s.serialize_str("N/A"),
        }
    }
}

impl<'de> Deserialize<'de> for Depth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u32),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(n) => Ok(Depth::Level(n)),
            Repr::Str(s) if s == "N/A" => Ok(Depth::NotApplicable),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad depth `{s}`"))),
        }
    }
}

/// Parses depth lists such as `0..3`, `3,5`, `N/A` or `0..5,N/A`.
pub fn parse_depths(text: &str) -> Result<Vec<Depth>, String> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if let Some((lo, hi)) = part.split_once("..") {
            let hi = hi.strip_prefix('=').unwrap_or(hi);
            let lo: u32 = lo.parse().map_err(|_| format!("bad depth range `{part}`"))?;
            let hi: u32 = hi.parse().map_err(|_| format!("bad depth range `{part}`"))?;
            if lo > hi {
                return Err(format!("empty depth range `{part}`"));
            }
            out.extend((lo..=hi).map(Depth::Level));
        } else {
            out.push(part.parse()?);
        }
    }
    if out.is_empty() {
        return Err("no depths given".into());
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoldAnnotation {
    pub label: Label,
    pub depth: Depth,
    /// Canonical proof strings sorted by (depth, text); empty for Unknown.
    pub proofs: Vec<String>,
    /// More proofs existed than the enumeration cap allowed.
    pub truncated: bool,
}

impl GoldAnnotation {
    pub fn unknown() -> Self {
        GoldAnnotation {
            label: Label::Unknown,
            depth: Depth::NotApplicable,
            proofs: Vec::new(),
            truncated: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Question {
    pub id: String,
    pub statement: Statement,
    pub gold: GoldAnnotation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub theory: Theory,
    pub questions: Vec<Question>,
}

impl Instance {
    pub fn id(&self) -> &str {
        &self.theory.id
    }
}

/// Generator settings. Each theory gets one target depth, cycling through
/// `target_depths`; `Depth::NotApplicable` builds a theory whose chain is
/// cut so every question is Unknown.
#[derive(Clone, Debug)]
pub struct GenConfig {
    pub target_depths: Vec<Depth>,
    pub theories: usize,
    /// Extra noise facts per theory.
    pub facts_range: RangeInclusive<usize>,
    /// Extra rules per theory whose premises never hold.
    pub rules_range: RangeInclusive<usize>,
    /// Independent derivation chains over predicates the question never uses.
    pub distractor_chains: RangeInclusive<usize>,
    pub distractor_length: RangeInclusive<usize>,
    /// When false, one distractor chain restarts the main chain on another
    /// subject, so its conclusions fall inside the relevance cone.
    pub cone_disjoint: bool,
    pub vocab: Vocabulary,
    pub seed: u64,
    pub max_retries: usize,
    pub proof_cap: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            target_depths: (0..=5).map(Depth::Level).collect(),
            theories: 100,
            facts_range: 0..=3,
            rules_range: 0..=2,
            distractor_chains: 2..=3,
            distractor_length: 1..=3,
            cone_disjoint: true,
            vocab: Vocabulary::training(),
            seed: 0,
            max_retries: 200,
            proof_cap: DEFAULT_PROOF_CAP,
        }
    }
}

impl GenConfig {
    /// Depth-3 theories with zero to two short distractor chains.
    pub fn d3_like() -> Self {
        GenConfig {
            target_depths: vec![Depth::Level(3)],
            distractor_chains: 0..=2,
            ..GenConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let empty = |r: &RangeInclusive<usize>| r.start() > r.end();
        if self.target_depths.is_empty() {
            return Err("no target depths".into());
        }
        if empty(&self.facts_range)
            || empty(&self.rules_range)
            || empty(&self.distractor_chains)
            || empty(&self.distractor_length)
        {
            return Err("empty range in generator config".into());
        }
        if *self.distractor_length.start() == 0 {
            return Err("distractor chains need length >= 1".into());
        }
        if self.vocab.attributes.len() < 8 || self.vocab.proper_names.len() < 4 {
            return Err("vocabulary pools too small".into());
        }
        Ok(())
    }
}
