//! Equivalence sets: consistent renamings of subjects and/or attributes
//! into the held-out robustness pools.

use std::fmt;
use std::str::FromStr;

use indexmap::{IndexMap, IndexSet};
use rand::seq::IndexedRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Atom, Entity, EntityKind, Fact, Predicate, Rule, Statement, Term, Theory, Vocabulary};

use super::{Instance, Question};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PerturbMode {
    Subject,
    Attribute,
    Both,
}

impl PerturbMode {
    pub const ALL: [PerturbMode; 3] = [PerturbMode::Subject, PerturbMode::Attribute, PerturbMode::Both];

    fn subjects(self) -> bool {
        matches!(self, PerturbMode::Subject | PerturbMode::Both)
    }

    fn attributes(self) -> bool {
        matches!(self, PerturbMode::Attribute | PerturbMode::Both)
    }
}

impl fmt::Display for PerturbMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PerturbMode::Subject => "subject",
            PerturbMode::Attribute => "attribute",
            PerturbMode::Both => "both",
        })
    }
}

impl FromStr for PerturbMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "subject" => Ok(PerturbMode::Subject),
            "attribute" => Ok(PerturbMode::Attribute),
            "both" => Ok(PerturbMode::Both),
            _ => Err(format!(
                "unknown perturbation mode `{s}` (expected subject, attribute or both)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PerturbError {
    #[error("pool of {category} has {available} words but {needed} are needed")]
    PoolExhausted {
        category: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("mapping is not injective: `{0}` has two preimages")]
    NotInjective(String),
}

/// Token renaming over entity names and attributes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenamingMap {
    pub mode: PerturbMode,
    pub mapping: IndexMap<String, String>,
}

impl RenamingMap {
    pub fn identity(mode: PerturbMode) -> Self {
        RenamingMap {
            mode,
            mapping: IndexMap::new(),
        }
    }

    pub fn inverse(&self) -> Result<RenamingMap, PerturbError> {
        let mut mapping = IndexMap::new();
        for (from, to) in &self.mapping {
            if mapping.insert(to.clone(), from.clone()).is_some() {
                return Err(PerturbError::NotInjective(to.clone()));
            }
        }
        Ok(RenamingMap {
            mode: self.mode,
            mapping,
        })
    }

    fn word(&self, w: &str) -> String {
        self.mapping.get(w).cloned().unwrap_or_else(|| w.to_string())
    }

    pub fn entity(&self, e: &Entity) -> Entity {
        match self.mapping.get(e.name()) {
            Some(to) => e.renamed(to),
            None => e.clone(),
        }
    }

    pub fn atom(&self, a: &Atom) -> Atom {
        let subject = match &a.subject {
            Term::Var => Term::Var,
            Term::Const(e) => Term::Const(self.entity(e)),
        };
        let predicate = match &a.predicate {
            Predicate::Attr(x) => Predicate::Attr(self.word(x)),
            Predicate::Rel { verb, object } => Predicate::Rel {
                verb: verb.clone(),
                object: self.entity(object),
            },
        };
        Atom::new(subject, predicate, a.polarity)
    }

    pub fn rule(&self, r: &Rule) -> Rule {
        Rule {
            premises: r.premises.iter().map(|p| self.atom(p)).collect(),
            conclusion: self.atom(&r.conclusion),
            ..r.clone()
        }
    }

    pub fn theory(&self, t: &Theory, id: &str) -> Theory {
        let facts = t
            .facts
            .iter()
            .map(|f| Fact {
                atom: self.atom(&f.atom),
                ..f.clone()
            })
            .collect();
        let rules = t.rules.iter().map(|r| self.rule(r)).collect();
        Theory::new(id, facts, rules).expect("renaming keeps sentence ids")
    }

    pub fn statement(&self, s: &Statement) -> Statement {
        Statement {
            atom: self.atom(&s.atom),
        }
    }

    /// Renames every whitespace-separated token of `text` that the map
    /// covers. Canonical proofs carry only ids, so they pass unchanged.
    pub fn text(&self, text: &str) -> String {
        text.split(' ').map(|w| self.word(w)).collect::<Vec<_>>().join(" ")
    }

    /// The instance with the map applied to its theory and statements;
    /// gold annotations carry over untouched.
    pub fn instance(&self, inst: &Instance, id: &str) -> Instance {
        Instance {
            theory: self.theory(&inst.theory, id),
            questions: inst
                .questions
                .iter()
                .enumerate()
                .map(|(i, q)| Question {
                    id: format!("{id}-q{}", i + 1),
                    statement: self.statement(&q.statement),
                    gold: q.gold.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivalenceSet {
    pub base: Instance,
    pub variants: Vec<(Instance, RenamingMap)>,
}

#[derive(Default)]
struct Mentions {
    proper: IndexSet<String>,
    person: IndexSet<String>,
    thing: IndexSet<String>,
    attributes: IndexSet<String>,
}

impl Mentions {
    fn add(&mut self, atom: &Atom) {
        for e in atom.entities() {
            let bucket = match (e.kind(), e.is_person()) {
                (EntityKind::ProperName, _) => &mut self.proper,
                (EntityKind::CommonNoun, true) => &mut self.person,
                (EntityKind::CommonNoun, false) => &mut self.thing,
            };
            bucket.insert(e.name().to_string());
        }
        if let Predicate::Attr(a) = &atom.predicate {
            self.attributes.insert(a.clone());
        }
    }

    fn of(inst: &Instance) -> Self {
        let mut m = Mentions::default();
        for f in &inst.theory.facts {
            m.add(&f.atom);
        }
        for r in &inst.theory.rules {
            r.premises.iter().chain([&r.conclusion]).for_each(|a| m.add(a));
        }
        for q in &inst.questions {
            m.add(&q.statement.atom);
        }
        m
    }
}

fn sample_into(
    mapping: &mut IndexMap<String, String>,
    from: &IndexSet<String>,
    pool: &[&String],
    category: &'static str,
    rng: &mut ChaCha8Rng,
) -> Result<(), PerturbError> {
    if from.is_empty() {
        return Ok(());
    }
    if pool.len() < from.len() {
        return Err(PerturbError::PoolExhausted {
            category,
            needed: from.len(),
            available: pool.len(),
        });
    }
    let picked: Vec<&&String> = pool.choose_multiple(rng, from.len()).collect();
    for (f, t) in from.iter().zip(picked) {
        mapping.insert(f.clone(), (*t).clone());
    }
    Ok(())
}

/// `n` renamed copies of `instance`, drawing replacements without
/// replacement from `pools`. Subjects keep their class: proper names map
/// to proper names, person nouns to person nouns, other nouns to other
/// nouns.
pub fn perturb(
    instance: &Instance,
    mode: PerturbMode,
    rng: &mut ChaCha8Rng,
    n: usize,
    pools: &Vocabulary,
) -> Result<EquivalenceSet, PerturbError> {
    let m = Mentions::of(instance);
    let proper: Vec<&String> = pools.proper_names.iter().collect();
    let person: Vec<&String> = pools.common_nouns.iter().filter(|w| pools.is_person(w)).collect();
    let thing: Vec<&String> = pools.common_nouns.iter().filter(|w| !pools.is_person(w)).collect();
    let attributes: Vec<&String> = pools.attributes.iter().collect();
    let mut variants = Vec::with_capacity(n);
    for k in 1..=n {
        let mut mapping = IndexMap::new();
        if mode.subjects() {
            sample_into(&mut mapping, &m.proper, &proper, "proper names", rng)?;
            sample_into(&mut mapping, &m.person, &person, "person nouns", rng)?;
            sample_into(&mut mapping, &m.thing, &thing, "common nouns", rng)?;
        }
        if mode.attributes() {
            sample_into(&mut mapping, &m.attributes, &attributes, "attributes", rng)?;
        }
        let map = RenamingMap { mode, mapping };
        let id = format!("{}-{mode}-{k}", instance.id());
        variants.push((map.instance(instance, &id), map));
    }
    Ok(EquivalenceSet {
        base: instance.clone(),
        variants,
    })
}
