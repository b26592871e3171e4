//! Backward-skeleton generator.
//!
//! A theory is built around one main chain `a0 -> a1 -> ... -> ak` on a
//! single subject, where every link is a rule whose premises are the
//! previous chain atom plus optional side facts. Distractor chains, noise
//! facts and rules that never fire use predicates drawn from the same pool
//! without replacement, so they cannot touch the main chain. The closure
//! oracle then confirms depths and labels before anything is emitted.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lang::{
    Atom, Entity, Fact, Polarity, Predicate, Quantifier, Rule, RuleForm, SentId, Sentence, Statement, Term, Theory,
};
use crate::par::{try_map_ordered, Execution};
use crate::reasoner::Label;

use super::closure::{assign_gold, gold_closure};
use super::{Depth, GenConfig, Instance, Question};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("instance {id}: gave up after {attempts} attempts (last failure: {reason})")]
    Exhausted {
        id: String,
        attempts: usize,
        reason: String,
    },
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    People,
    Things,
}

struct PredPool {
    attrs: Vec<String>,
    rels: Vec<(String, Entity)>,
}

impl PredPool {
    fn draw(&mut self, rng: &mut ChaCha8Rng, subject: &Entity) -> Result<Predicate, String> {
        let want_rel = !self.rels.is_empty() && (self.attrs.is_empty() || rng.random_bool(0.3));
        if want_rel {
            if let Some(i) = self.rels.iter().position(|(_, o)| o != subject) {
                let (verb, object) = self.rels.remove(i);
                return Ok(Predicate::Rel { verb, object });
            }
        }
        self.attrs
            .pop()
            .map(Predicate::Attr)
            .ok_or_else(|| "predicate pool exhausted".to_string())
    }
}

struct RuleSpec {
    premises: Vec<Atom>,
    conclusion: Atom,
    quantifier: Quantifier,
    form: RuleForm,
}

struct Builder<'a> {
    cfg: &'a GenConfig,
    rng: &'a mut ChaCha8Rng,
    kind: Kind,
    subjects: Vec<Entity>,
    pool: PredPool,
    facts: Vec<Atom>,
    rules: Vec<RuleSpec>,
}

fn ground(subject: &Entity, predicate: Predicate, polarity: Polarity) -> Atom {
    Atom::new(Term::Const(subject.clone()), predicate, polarity)
}

fn lift(atom: &Atom) -> Atom {
    Atom::new(Term::Var, atom.predicate.clone(), atom.polarity)
}

fn plain_attr(atom: &Atom) -> bool {
    atom.polarity == Polarity::Pos && matches!(atom.predicate, Predicate::Attr(_))
}

impl<'a> Builder<'a> {
    fn new(cfg: &'a GenConfig, rng: &'a mut ChaCha8Rng) -> Self {
        let kind = if rng.random_bool(0.5) {
            Kind::People
        } else {
            Kind::Things
        };
        let mut names: Vec<Entity> = match kind {
            Kind::People => cfg.vocab.proper_names.iter().map(|n| Entity::proper(n)).collect(),
            Kind::Things => cfg
                .vocab
                .common_nouns
                .iter()
                .filter(|n| !cfg.vocab.is_person(n))
                .map(|n| Entity::common_with_person(n, false))
                .collect(),
        };
        names.shuffle(rng);
        let n = rng.random_range(2..=4).min(names.len());
        names.truncate(n);
        let mut attrs: Vec<String> = cfg.vocab.attributes.iter().cloned().collect();
        attrs.shuffle(rng);
        let mut rels: Vec<(String, Entity)> = cfg
            .vocab
            .verbs
            .keys()
            .flat_map(|v| names.iter().map(move |o| (v.clone(), o.clone())))
            .collect();
        rels.shuffle(rng);
        Builder {
            cfg,
            rng,
            kind,
            subjects: names,
            pool: PredPool { attrs, rels },
            facts: Vec::new(),
            rules: Vec::new(),
        }
    }

    fn polarity(&mut self, p_neg: f64) -> Polarity {
        if self.rng.random_bool(p_neg) {
            Polarity::Neg
        } else {
            Polarity::Pos
        }
    }

    fn fresh(&mut self, subject: &Entity, p_neg: f64) -> Result<Atom, String> {
        let predicate = self.pool.draw(self.rng, subject)?;
        let polarity = self.polarity(p_neg);
        Ok(ground(subject, predicate, polarity))
    }

    fn var_quantifier(&mut self) -> Quantifier {
        match self.kind {
            Kind::People if self.rng.random_bool(0.75) => Quantifier::People,
            _ => Quantifier::Things,
        }
    }

    fn var_rule(&mut self, premises: Vec<Atom>, conclusion: Atom) -> RuleSpec {
        let premises: Vec<Atom> = premises.iter().map(lift).collect();
        let conclusion = lift(&conclusion);
        let form = if premises.iter().all(plain_attr) && matches!(conclusion.predicate, Predicate::Attr(_)) {
            [RuleForm::IfThen, RuleForm::All, RuleForm::Bare][self.rng.random_range(0..3)]
        } else {
            RuleForm::IfThen
        };
        RuleSpec {
            premises,
            conclusion,
            quantifier: self.var_quantifier(),
            form,
        }
    }

    /// One rule deriving `to` from `from` and fresh side facts.
    fn link(&mut self, subject: &Entity, from: &Atom, to: Atom) -> Result<(), String> {
        let roll: f64 = self.rng.random();
        let sides = if roll < 0.7 {
            0
        } else if roll < 0.95 {
            1
        } else {
            2
        };
        let mut premises = vec![from.clone()];
        for _ in 0..sides {
            let side = self.fresh(subject, 0.1)?;
            self.facts.push(side.clone());
            premises.push(side);
        }
        premises.shuffle(self.rng);
        let rule = if self.rng.random_bool(0.15) {
            RuleSpec {
                premises,
                conclusion: to,
                quantifier: Quantifier::Ground,
                form: RuleForm::IfThen,
            }
        } else {
            self.var_rule(premises, to)
        };
        self.rules.push(rule);
        Ok(())
    }

    /// Atoms `a0..=ak` on `subject`; `a0` is a given fact unless omitted.
    fn chain(&mut self, subject: &Entity, k: usize, with_leaf: bool) -> Result<Vec<Atom>, String> {
        let mut atoms = vec![self.fresh(subject, 0.1)?];
        if with_leaf {
            self.facts.push(atoms[0].clone());
        }
        for i in 1..=k {
            let next = self.fresh(subject, 0.15)?;
            self.link(subject, &atoms[i - 1].clone(), next.clone())?;
            atoms.push(next);
        }
        Ok(atoms)
    }

    fn pick_subject(&mut self) -> Entity {
        self.subjects[self.rng.random_range(0..self.subjects.len())].clone()
    }

    fn decorate(&mut self, main: &Entity, leaf: &Atom) -> Result<(), String> {
        let chains = self.rng.random_range(self.cfg.distractor_chains.clone());
        for c in 0..chains {
            if c == 0 && !self.cfg.cone_disjoint {
                // Restart the main chain on another subject.
                let others: Vec<Entity> = self.subjects.iter().filter(|e| *e != main).cloned().collect();
                if let Some(t) = others.first() {
                    self.facts.push(ground(t, leaf.predicate.clone(), leaf.polarity));
                    continue;
                }
            }
            let subject = self.pick_subject();
            let len = self.rng.random_range(self.cfg.distractor_length.clone());
            self.chain(&subject, len, true)?;
        }
        let noise = self.rng.random_range(self.cfg.facts_range.clone());
        for _ in 0..noise {
            let subject = self.pick_subject();
            match self.fresh(&subject, 0.2) {
                Ok(a) => self.facts.push(a),
                Err(_) => break,
            }
        }
        let dormant = self.rng.random_range(self.cfg.rules_range.clone());
        for _ in 0..dormant {
            let subject = self.pick_subject();
            let n = self.rng.random_range(1..=2);
            let drawn: Result<Vec<Atom>, String> = (0..=n).map(|_| self.fresh(&subject, 0.1)).collect();
            let Ok(mut atoms) = drawn else { break };
            let conclusion = atoms.pop().expect("n + 1 atoms drawn");
            let rule = self.var_rule(atoms, conclusion);
            self.rules.push(rule);
        }
        Ok(())
    }

    fn theory(mut self, id: &str) -> Result<Theory, String> {
        let mut sentences: Vec<Option<Sentence>> = Vec::new();
        let facts = std::mem::take(&mut self.facts);
        let rules = std::mem::take(&mut self.rules);
        let mut items: Vec<Result<Atom, RuleSpec>> =
            facts.into_iter().map(Ok).chain(rules.into_iter().map(Err)).collect();
        items.shuffle(self.rng);
        for (i, item) in items.into_iter().enumerate() {
            let id = SentId(i as u32 + 1);
            sentences.push(Some(match item {
                Ok(atom) => Sentence::Fact(Fact::given(id, atom).map_err(|e| e.to_string())?),
                Err(r) => Sentence::Rule(
                    Rule::new(id, r.premises, r.conclusion, r.quantifier, r.form).map_err(|e| e.to_string())?,
                ),
            }));
        }
        let (facts, rules): (Vec<_>, Vec<_>) = sentences
            .into_iter()
            .flatten()
            .partition(|s| matches!(s, Sentence::Fact(_)));
        let facts = facts
            .into_iter()
            .map(|s| match s {
                Sentence::Fact(f) => f,
                Sentence::Rule(_) => unreachable!(),
            })
            .collect();
        let rules = rules
            .into_iter()
            .map(|s| match s {
                Sentence::Rule(r) => r,
                Sentence::Fact(_) => unreachable!(),
            })
            .collect();
        Theory::new(id, facts, rules).map_err(|e| e.to_string())
    }
}

fn attempt(cfg: &GenConfig, target: Depth, id: &str, rng: &mut ChaCha8Rng) -> Result<Instance, String> {
    let mut b = Builder::new(cfg, rng);
    let main = b.pick_subject();
    let (k, with_leaf) = match target {
        Depth::Level(k) => (k as usize, true),
        Depth::NotApplicable => (b.rng.random_range(1..=3), false),
    };
    let chain = b.chain(&main, k, with_leaf)?;
    b.decorate(&main, &chain[0])?;
    let mut others: Vec<Entity> = b.subjects.iter().filter(|e| **e != main).cloned().collect();
    others.shuffle(b.rng);
    let theory = b.theory(id)?;

    let closure = gold_closure(&theory);
    if closure.contradiction {
        return Err("theory is contradictory".into());
    }
    let mut statements: Vec<(Statement, Label, Depth)> = Vec::new();
    let elsewhere = |a: &Atom| -> Option<Statement> {
        others.iter().find_map(|t| {
            let moved = ground(t, a.predicate.clone(), a.polarity);
            (!closure.contains(&moved) && !closure.contains(&moved.negated())).then_some(Statement { atom: moved })
        })
    };
    match target {
        Depth::Level(_) => {
            for (j, a) in chain.iter().enumerate() {
                if closure.level(a) != Some(j) {
                    return Err(format!("chain atom {j} sits at level {:?}", closure.level(a)));
                }
                let d = Depth::Level(j as u32);
                statements.push((Statement { atom: a.clone() }, Label::True, d));
                statements.push((Statement { atom: a.negated() }, Label::False, d));
                if let Some(s) = elsewhere(a) {
                    statements.push((s, Label::Unknown, Depth::NotApplicable));
                }
            }
        }
        Depth::NotApplicable => {
            for a in &chain[1..] {
                if closure.contains(a) || closure.contains(&a.negated()) {
                    return Err("cut chain is still derivable".into());
                }
                statements.push((Statement { atom: a.clone() }, Label::Unknown, Depth::NotApplicable));
                statements.push((Statement { atom: a.negated() }, Label::Unknown, Depth::NotApplicable));
                if let Some(s) = elsewhere(a) {
                    statements.push((s, Label::Unknown, Depth::NotApplicable));
                }
            }
        }
    }
    let mut questions = Vec::new();
    for (i, (statement, label, depth)) in statements.into_iter().enumerate() {
        let gold = assign_gold(&closure, &statement, cfg.proof_cap);
        if gold.truncated {
            return Err("gold proofs truncated".into());
        }
        if gold.label != label || gold.depth != depth {
            return Err(format!("question {} came out {}/{}", i + 1, gold.label, gold.depth));
        }
        questions.push(Question {
            id: format!("{id}-q{}", i + 1),
            statement,
            gold,
        });
    }
    Ok(Instance { theory, questions })
}

/// One oracle-verified instance, retrying up to `max_retries` times.
pub fn generate_instance(cfg: &GenConfig, target: Depth, id: &str, rng: &mut ChaCha8Rng) -> Result<Instance, GenError> {
    let mut reason = String::from("no attempts");
    for _ in 0..cfg.max_retries.max(1) {
        match attempt(cfg, target, id, rng) {
            Ok(instance) => return Ok(instance),
            Err(why) => reason = why,
        }
    }
    Err(GenError::Exhausted {
        id: id.to_string(),
        attempts: cfg.max_retries.max(1),
        reason,
    })
}

/// Per-instance generator: stream `i` of the configured seed.
pub fn instance_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// `cfg.theories` instances with ids `t00000`, `t00001`, ...
pub fn generate_dataset(cfg: &GenConfig, exec: Execution) -> Result<Vec<Instance>, GenError> {
    cfg.validate().map_err(GenError::Config)?;
    let indices: Vec<usize> = (0..cfg.theories).collect();
    try_map_ordered(exec, &indices, |_, &i| {
        let target = cfg.target_depths[i % cfg.target_depths.len()];
        generate_instance(cfg, target, &format!("t{i:05}"), &mut instance_rng(cfg.seed, i))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_zero_question_is_a_given_fact() {
        let cfg = GenConfig::default();
        let inst = generate_instance(&cfg, Depth::Level(0), "x", &mut instance_rng(1, 0)).unwrap();
        let q = &inst.questions[0];
        assert_eq!(q.gold.label, Label::True);
        assert!(inst.theory.facts.iter().any(|f| f.atom == q.statement.atom));
    }

    #[test]
    fn target_depth_is_met() {
        let cfg = GenConfig::default();
        for seed in 0..20 {
            let inst = generate_instance(&cfg, Depth::Level(3), "x", &mut instance_rng(seed, 0)).unwrap();
            let deepest = inst.questions.iter().filter_map(|q| match q.gold.depth {
                Depth::Level(d) => Some(d),
                Depth::NotApplicable => None,
            });
            assert_eq!(deepest.max(), Some(3));
        }
    }

    #[test]
    fn unknown_target_has_only_unknown_questions() {
        let cfg = GenConfig::default();
        let inst = generate_instance(&cfg, Depth::NotApplicable, "x", &mut instance_rng(5, 0)).unwrap();
        assert!(!inst.questions.is_empty());
        assert!(inst.questions.iter().all(|q| q.gold.label == Label::Unknown));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let cfg = GenConfig {
            theories: 12,
            seed: 9,
            ..GenConfig::default()
        };
        let a = generate_dataset(&cfg, Execution::Sequential).unwrap();
        let b = generate_dataset(&cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
