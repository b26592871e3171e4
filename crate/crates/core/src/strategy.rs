//! Selection policies: exhaustive forward chaining and goal-directed
//! selection restricted to the statement's relevance cone.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::lang::{Atom, Entity, Polarity, Predicate, Statement, Term, Theory};
use crate::reasoner::{applicable_bindings, compose, FactStore, SelectionDecision};

pub trait Strategy {
    fn name(&self) -> &'static str;

    /// Whether `run` should halt once the statement or its negation is in
    /// the store.
    fn stops_at_goal(&self) -> bool;

    fn select(&mut self, store: &FactStore, theory: &Theory, statement: &Statement) -> SelectionDecision;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Exhaustive,
    Goal,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 2] = [StrategyKind::Goal, StrategyKind::Exhaustive];

    /// A fresh strategy for one (theory, statement) pair. With a seed,
    /// candidates are picked at random instead of in canonical order.
    pub fn build(self, theory: &Theory, statement: &Statement, shuffle_seed: Option<u64>) -> Box<dyn Strategy> {
        let rng = shuffle_seed.map(ChaCha8Rng::seed_from_u64);
        match self {
            StrategyKind::Exhaustive => Box::new(Exhaustive { rng }),
            StrategyKind::Goal => Box::new(GoalDirected {
                cone: relevance_cone(theory, statement),
                rng,
            }),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StrategyKind::Exhaustive => "exhaustive",
            StrategyKind::Goal => "goal",
        })
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exhaustive" => Ok(StrategyKind::Exhaustive),
            "goal" => Ok(StrategyKind::Goal),
            _ => Err(format!("unknown strategy `{s}` (expected `goal` or `exhaustive`)")),
        }
    }
}

/// First novel (rule, binding) pair, or a random one when `rng` is set.
fn pick<F>(
    store: &FactStore,
    theory: &Theory,
    rules: &[usize],
    accept: F,
    rng: Option<&mut ChaCha8Rng>,
) -> SelectionDecision
where
    F: Fn(&Atom) -> bool,
{
    let mut candidates = Vec::new();
    for &i in rules {
        for binding in applicable_bindings(&theory.rules[i], store) {
            let Ok(atom) = compose(&theory.rules[i], &binding) else {
                continue;
            };
            if store.contains(&atom) || !accept(&atom) {
                continue;
            }
            let decision = SelectionDecision::Proceed { rule: i, binding };
            if rng.is_none() {
                return decision;
            }
            candidates.push(decision);
        }
    }
    match rng {
        Some(rng) if !candidates.is_empty() => {
            let k = rng.random_range(0..candidates.len());
            candidates.swap_remove(k)
        }
        _ => SelectionDecision::Stop,
    }
}

/// Derives everything, in rule order then binding order.
#[derive(Clone, Debug, Default)]
pub struct Exhaustive {
    rng: Option<ChaCha8Rng>,
}

impl Exhaustive {
    pub fn shuffled(seed: u64) -> Self {
        Exhaustive {
            rng: Some(ChaCha8Rng::seed_from_u64(seed)),
        }
    }
}

impl Strategy for Exhaustive {
    fn name(&self) -> &'static str {
        "exhaustive"
    }

    fn stops_at_goal(&self) -> bool {
        false
    }

    fn select(&mut self, store: &FactStore, theory: &Theory, _statement: &Statement) -> SelectionDecision {
        let rules: Vec<usize> = (0..theory.rules.len()).collect();
        pick(store, theory, &rules, |_| true, self.rng.as_mut())
    }
}

/// `(predicate, polarity, subject)`; a `None` subject matches any entity.
pub type AtomPattern = (Predicate, Polarity, Option<Entity>);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelevanceCone {
    /// Indices into `theory.rules`.
    pub relevant_rules: BTreeSet<usize>,
    pub relevant_atom_patterns: HashSet<AtomPattern>,
}

fn pattern_of(atom: &Atom) -> AtomPattern {
    (atom.predicate.clone(), atom.polarity, atom.subject.entity().cloned())
}

impl RelevanceCone {
    /// Whether a (possibly non-ground) atom unifies with some pattern.
    pub fn matches(&self, atom: &Atom) -> bool {
        let key = (atom.predicate.clone(), atom.polarity, None);
        if self.relevant_atom_patterns.contains(&key) {
            return true;
        }
        match &atom.subject {
            Term::Const(e) => {
                let (p, pol, _) = key;
                self.relevant_atom_patterns.contains(&(p, pol, Some(e.clone())))
            }
            Term::Var => self
                .relevant_atom_patterns
                .iter()
                .any(|(p, pol, _)| *p == atom.predicate && *pol == atom.polarity),
        }
    }
}

/// Backward closure from the statement and its negation.
pub fn relevance_cone(theory: &Theory, statement: &Statement) -> RelevanceCone {
    let mut cone = RelevanceCone::default();
    cone.relevant_atom_patterns.insert(pattern_of(&statement.atom));
    cone.relevant_atom_patterns
        .insert(pattern_of(&statement.atom.negated()));
    loop {
        let mut changed = false;
        for (i, rule) in theory.rules.iter().enumerate() {
            if cone.relevant_rules.contains(&i) || !cone.matches(&rule.conclusion) {
                continue;
            }
            cone.relevant_rules.insert(i);
            for p in &rule.premises {
                cone.relevant_atom_patterns.insert(pattern_of(p));
            }
            changed = true;
        }
        if !changed {
            return cone;
        }
    }
}

/// Only applies cone rules whose conclusions fall inside the cone, and
/// stops as soon as the goal or its negation is known.
#[derive(Clone, Debug)]
pub struct GoalDirected {
    cone: RelevanceCone,
    rng: Option<ChaCha8Rng>,
}

impl GoalDirected {
    pub fn new(theory: &Theory, statement: &Statement) -> Self {
        GoalDirected {
            cone: relevance_cone(theory, statement),
            rng: None,
        }
    }

    pub fn shuffled(theory: &Theory, statement: &Statement, seed: u64) -> Self {
        GoalDirected {
            rng: Some(ChaCha8Rng::seed_from_u64(seed)),
            ..GoalDirected::new(theory, statement)
        }
    }

    pub fn cone(&self) -> &RelevanceCone {
        &self.cone
    }
}

impl Strategy for GoalDirected {
    fn name(&self) -> &'static str {
        "goal"
    }

    fn stops_at_goal(&self) -> bool {
        true
    }

    fn select(&mut self, store: &FactStore, theory: &Theory, statement: &Statement) -> SelectionDecision {
        if store.contains(&statement.atom) || store.contains(&statement.atom.negated()) {
            return SelectionDecision::Stop;
        }
        let rules: Vec<usize> = self.cone.relevant_rules.iter().copied().collect();
        let cone = &self.cone;
        pick(store, theory, &rules, |a| cone.matches(a), self.rng.as_mut())
    }
}
