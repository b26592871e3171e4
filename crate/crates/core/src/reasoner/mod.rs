//! The one-hop inference state machine: select a rule, select facts,
//! compose a conclusion, repeat; then solve and stitch a proof.

mod checker;
mod proof;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::{Atom, Entity, Fact, FactId, Origin, Polarity, Predicate, Rule, SentId, Statement, Term, Theory};
use crate::strategy::Strategy;

pub use checker::{check_proof, CheckError};
pub use proof::{ProofError, ProofGraph, ProofNode, ProofStep};

/// Given facts followed by derived conclusions, without duplicate atoms.
#[derive(Clone, Debug)]
pub struct FactStore {
    facts: Vec<Fact>,
    by_atom: HashMap<Atom, usize>,
    by_id: HashMap<FactId, usize>,
    by_predicate: HashMap<(Predicate, Polarity), Vec<usize>>,
    ranks: HashMap<Entity, usize>,
    derived: u32,
}

impl FactStore {
    pub fn from_theory(theory: &Theory) -> Self {
        let mut store = FactStore {
            facts: Vec::new(),
            by_atom: HashMap::new(),
            by_id: HashMap::new(),
            by_predicate: HashMap::new(),
            ranks: theory
                .entities()
                .iter()
                .enumerate()
                .map(|(i, e)| (e.clone(), i))
                .collect(),
            derived: 0,
        };
        let mut given: Vec<&Fact> = theory.facts.iter().collect();
        given.sort_by_key(|f| f.id);
        for f in given {
            match store.by_atom.get(&f.atom) {
                // A repeated sentence resolves to the first copy.
                Some(&i) => {
                    store.by_id.insert(f.id, i);
                }
                None => store.insert(f.clone()),
            }
        }
        store
    }

    fn insert(&mut self, fact: Fact) {
        let i = self.facts.len();
        self.by_atom.insert(fact.atom.clone(), i);
        self.by_id.insert(fact.id, i);
        self.by_predicate
            .entry((fact.atom.predicate.clone(), fact.atom.polarity))
            .or_default()
            .push(i);
        self.facts.push(fact);
    }

    fn push_derived(&mut self, atom: Atom) -> Fact {
        self.derived += 1;
        let fact = Fact {
            id: FactId::Derived(self.derived),
            atom,
            origin: Origin::Derived(self.derived as usize),
        };
        self.insert(fact.clone());
        fact
    }

    pub fn contains(&self, atom: &Atom) -> bool {
        self.by_atom.contains_key(atom)
    }

    pub fn get(&self, atom: &Atom) -> Option<&Fact> {
        self.by_atom.get(atom).map(|&i| &self.facts[i])
    }

    pub fn fact(&self, id: FactId) -> Option<&Fact> {
        self.by_id.get(&id).map(|&i| &self.facts[i])
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn derived(&self) -> impl Iterator<Item = &Fact> {
        self.facts.iter().filter(|f| matches!(f.id, FactId::Derived(_)))
    }

    pub fn derived_count(&self) -> usize {
        self.derived as usize
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    /// Position of `entity` in the theory's first-mention order.
    pub fn rank(&self, entity: &Entity) -> usize {
        self.ranks.get(entity).copied().unwrap_or(usize::MAX)
    }

    fn with_predicate(&self, predicate: &Predicate, polarity: Polarity) -> &[usize] {
        self.by_predicate
            .get(&(predicate.clone(), polarity))
            .map_or(&[], Vec::as_slice)
    }

    /// Whether some atom and its negation are both present.
    pub fn has_contradiction(&self) -> bool {
        self.facts
            .iter()
            .any(|f| f.atom.polarity == Polarity::Pos && self.contains(&f.atom.negated()))
    }
}

/// A way of satisfying every premise of a rule.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Binding {
    /// Value of the variable; `None` for ground rules.
    pub substitution: Option<Entity>,
    /// One fact per premise, in premise order.
    pub premise_facts: Vec<FactId>,
}

/// Every binding of `rule` in `store`, ordered by the substituted entity's
/// first mention and then by fact ids. Bindings whose conclusion already
/// exists are included.
pub fn applicable_bindings(rule: &Rule, store: &FactStore) -> Vec<Binding> {
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(rule.premises.len());
    join(rule, store, 0, None, &mut chosen, &mut out);
    out.sort_by(|a, b| {
        let rank = |x: &Binding| x.substitution.as_ref().map_or(0, |e| store.rank(e));
        rank(a)
            .cmp(&rank(b))
            .then_with(|| a.premise_facts.cmp(&b.premise_facts))
    });
    out
}

fn join(
    rule: &Rule,
    store: &FactStore,
    i: usize,
    subst: Option<&Entity>,
    chosen: &mut Vec<FactId>,
    out: &mut Vec<Binding>,
) {
    let Some(premise) = rule.premises.get(i) else {
        out.push(Binding {
            substitution: subst.cloned(),
            premise_facts: chosen.clone(),
        });
        return;
    };
    if premise.is_ground() || subst.is_some() {
        if let Some(f) = store.get(&premise.substitute(subst)) {
            chosen.push(f.id);
            join(rule, store, i + 1, subst, chosen, out);
            chosen.pop();
        }
        return;
    }
    for &j in store.with_predicate(&premise.predicate, premise.polarity) {
        let fact = &store.facts[j];
        let Term::Const(e) = &fact.atom.subject else { continue };
        if !rule.admits(e) {
            continue;
        }
        chosen.push(fact.id);
        join(rule, store, i + 1, Some(e), chosen, out);
        chosen.pop();
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReasonError {
    #[error("rule index {0} is out of range")]
    UnknownRule(usize),
    #[error("stale decision for {rule}: {reason}")]
    StaleDecision { rule: SentId, reason: String },
    #[error("duplicate conclusion `{0}`")]
    DuplicateConclusion(String),
    #[error("conclusion of {0} still has a free variable")]
    FreeVariable(SentId),
    #[error("trace does not replay: {0}")]
    BadTrace(String),
    #[error(transparent)]
    Proof(#[from] ProofError),
}

/// The conclusion of `rule` under `binding`.
pub fn compose(rule: &Rule, binding: &Binding) -> Result<Atom, ReasonError> {
    let atom = rule.conclusion.substitute(binding.substitution.as_ref());
    if !atom.is_ground() {
        return Err(ReasonError::FreeVariable(rule.id));
    }
    Ok(atom)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SelectionDecision {
    /// Apply the rule at this index of `theory.rules`.
    Proceed {
        rule: usize,
        binding: Binding,
    },
    Stop,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OneHopStep {
    /// 1-based.
    pub step_index: usize,
    pub rule_id: SentId,
    pub fact_ids: Vec<FactId>,
    pub conclusion: Fact,
}

/// Applies one decision. `Ok(None)` on `Stop`.
pub fn step(
    store: &mut FactStore,
    theory: &Theory,
    decision: &SelectionDecision,
) -> Result<Option<OneHopStep>, ReasonError> {
    let SelectionDecision::Proceed { rule, binding } = decision else {
        return Ok(None);
    };
    let r = theory.rules.get(*rule).ok_or(ReasonError::UnknownRule(*rule))?;
    let stale = |reason: &str| ReasonError::StaleDecision {
        rule: r.id,
        reason: reason.to_string(),
    };
    if binding.premise_facts.len() != r.premises.len() {
        return Err(stale("wrong number of premise facts"));
    }
    if let Some(e) = &binding.substitution {
        if r.is_ground() || !r.admits(e) {
            return Err(stale("substitution not admitted by the rule"));
        }
    } else if !r.is_ground() {
        return Err(stale("missing substitution"));
    }
    for (premise, id) in r.premises.iter().zip(&binding.premise_facts) {
        let fact = store.fact(*id).ok_or_else(|| stale("premise fact not in store"))?;
        if fact.atom != premise.substitute(binding.substitution.as_ref()) {
            return Err(stale("premise fact does not match"));
        }
    }
    let atom = compose(r, binding)?;
    if store.contains(&atom) {
        return Err(ReasonError::DuplicateConclusion(atom.render()));
    }
    let conclusion = store.push_derived(atom);
    Ok(Some(OneHopStep {
        step_index: store.derived_count(),
        rule_id: r.id,
        fact_ids: binding.premise_facts.clone(),
        conclusion,
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GoalReached,
    Fixpoint,
    BudgetExhausted,
    StrategyStop,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InferenceTrace {
    pub steps: Vec<OneHopStep>,
    pub stop_reason: StopReason,
    pub composer_calls: usize,
    /// Set when the final store holds an atom and its negation.
    pub contradiction: bool,
}

impl InferenceTrace {
    /// The generated inferences, in derivation order.
    pub fn generated(&self) -> impl Iterator<Item = &Atom> {
        self.steps.iter().map(|s| &s.conclusion.atom)
    }

    pub fn to_record(&self) -> TraceRecord {
        TraceRecord {
            steps: self
                .steps
                .iter()
                .map(|s| StepRecord {
                    rule: s.rule_id.to_string(),
                    facts: s.fact_ids.iter().map(FactId::to_string).collect(),
                    conclusion: s.conclusion.atom.render(),
                })
                .collect(),
            stop_reason: self.stop_reason,
            composer_calls: self.composer_calls,
        }
    }
}

/// Serialized form of one step: ids as `sentK`/`intK`, the conclusion as text.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub rule: String,
    pub facts: Vec<String>,
    pub conclusion: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub steps: Vec<StepRecord>,
    pub stop_reason: StopReason,
    pub composer_calls: usize,
}

/// Runs `strategy` until it stops, the budget is spent, or (for
/// goal-directed strategies) the statement or its negation is present.
pub fn run(
    theory: &Theory,
    statement: &Statement,
    strategy: &mut dyn Strategy,
    budget: Option<usize>,
) -> Result<InferenceTrace, ReasonError> {
    run_with_store(theory, statement, strategy, budget).map(|(t, _)| t)
}

pub fn run_with_store(
    theory: &Theory,
    statement: &Statement,
    strategy: &mut dyn Strategy,
    budget: Option<usize>,
) -> Result<(InferenceTrace, FactStore), ReasonError> {
    let mut store = FactStore::from_theory(theory);
    let goal = &statement.atom;
    let anti = goal.negated();
    let mut steps = Vec::new();
    let stop_reason = loop {
        if strategy.stops_at_goal() && (store.contains(goal) || store.contains(&anti)) {
            break StopReason::GoalReached;
        }
        if budget.is_some_and(|b| steps.len() >= b) {
            break StopReason::BudgetExhausted;
        }
        let decision = strategy.select(&store, theory, statement);
        match step(&mut store, theory, &decision)? {
            Some(s) => steps.push(s),
            None if strategy.stops_at_goal() => break StopReason::StrategyStop,
            None => break StopReason::Fixpoint,
        }
    };
    let trace = InferenceTrace {
        composer_calls: steps.len(),
        steps,
        stop_reason,
        contradiction: store.has_contradiction(),
    };
    Ok((trace, store))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    True,
    False,
    Unknown,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::True => "true",
            Label::False => "false",
            Label::Unknown => "unknown",
        })
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "true" => Ok(Label::True),
            "false" => Ok(Label::False),
            "unknown" => Ok(Label::Unknown),
            _ => Err(format!("unknown label `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub label: Label,
    pub proof: Option<ProofGraph>,
}

/// Rebuilds the store a trace produced, checking each step replays.
pub fn replay(theory: &Theory, trace: &InferenceTrace) -> Result<FactStore, ReasonError> {
    let mut store = FactStore::from_theory(theory);
    for s in &trace.steps {
        let rule = theory
            .rule_index(s.rule_id)
            .ok_or_else(|| ReasonError::BadTrace(format!("no rule {}", s.rule_id)))?;
        // The variable's value is the subject of any premise fact that
        // matched a variable premise.
        let r = &theory.rules[rule];
        let subst = r
            .premises
            .iter()
            .zip(&s.fact_ids)
            .find(|(p, _)| !p.is_ground())
            .and_then(|(_, id)| store.fact(*id))
            .and_then(|f| f.atom.subject.entity().cloned());
        let decision = SelectionDecision::Proceed {
            rule,
            binding: Binding {
                substitution: subst,
                premise_facts: s.fact_ids.clone(),
            },
        };
        let replayed =
            step(&mut store, theory, &decision)?.ok_or_else(|| ReasonError::BadTrace("unexpected stop".into()))?;
        if replayed != *s {
            return Err(ReasonError::BadTrace(format!("step {} differs", s.step_index)));
        }
    }
    Ok(store)
}

/// Looks the statement up among given and derived facts. The statement's
/// own polarity wins if the store is contradictory.
pub fn solve(theory: &Theory, statement: &Statement, trace: &InferenceTrace) -> Result<Verdict, ReasonError> {
    let store = replay(theory, trace)?;
    solve_in(&store, trace, statement)
}

pub(crate) fn solve_in(
    store: &FactStore,
    trace: &InferenceTrace,
    statement: &Statement,
) -> Result<Verdict, ReasonError> {
    for (atom, label) in [
        (statement.atom.clone(), Label::True),
        (statement.atom.negated(), Label::False),
    ] {
        if let Some(f) = store.get(&atom) {
            let proof = stitch_proof(trace, f.id)?.with_hypothesis(atom);
            return Ok(Verdict {
                label,
                proof: Some(proof),
            });
        }
    }
    Ok(Verdict {
        label: Label::Unknown,
        proof: None,
    })
}

/// The canonical proof of `target` from the steps that derived it.
pub fn stitch_proof(trace: &InferenceTrace, target: FactId) -> Result<ProofGraph, ReasonError> {
    if let FactId::Derived(k) = target {
        if k == 0 || k as usize > trace.steps.len() {
            return Err(ProofError::MissingTarget(target).into());
        }
    }
    let graph = ProofGraph::from_dag(target, |id| match id {
        FactId::Given(_) => None,
        FactId::Derived(k) => trace.steps.get(k as usize - 1).map(|s| (s.rule_id, s.fact_ids.clone())),
    })?;
    Ok(graph)
}
