//! The controlled-English theory language: logical forms, parsing and
//! canonical rendering.
//!
//! Every sentence maps to exactly one surface form, so
//! `render(parse(s)) == s` holds for every grammatical `s`. The grammar is
//! documented in `docs/grammar.ebnf`.

mod parse;
mod render;
pub mod vocab;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse_sentence, parse_statement, parse_theory, ParseError, Parser, TheoryParseError};
pub use render::{render_atom, render_rule};
pub use vocab::Vocabulary;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityKind {
    ProperName,
    CommonNoun,
}

/// A named individual: "Charlie" or "the grandmother".
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Entity {
    kind: EntityKind,
    name: String,
    person: bool,
}

impl Entity {
    /// A proper name. The first letter is upper-cased.
    pub fn proper(name: &str) -> Self {
        Entity {
            kind: EntityKind::ProperName,
            name: capitalize(name),
            person: true,
        }
    }

    /// A common noun; person-ness comes from the built-in noun table.
    pub fn common(name: &str) -> Self {
        let name = name.to_lowercase();
        let person = vocab::is_person_noun(&name);
        Entity {
            kind: EntityKind::CommonNoun,
            name,
            person,
        }
    }

    pub fn common_with_person(name: &str, person: bool) -> Self {
        Entity {
            kind: EntityKind::CommonNoun,
            name: name.to_lowercase(),
            person,
        }
    }

    pub fn kind(&self) -> EntityKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Whether "people" rules range over this entity.
    pub fn is_person(&self) -> bool {
        self.person
    }

    /// Same kind and person class, different surface token.
    pub fn renamed(&self, name: &str) -> Self {
        match self.kind {
            EntityKind::ProperName => Entity::proper(name),
            EntityKind::CommonNoun => Entity::common_with_person(name, self.person),
        }
    }

    /// Surface form; `initial` selects sentence-initial capitalization.
    pub fn surface(&self, initial: bool) -> String {
        match self.kind {
            EntityKind::ProperName => self.name.clone(),
            EntityKind::CommonNoun if initial => format!("The {}", self.name),
            EntityKind::CommonNoun => format!("the {}", self.name),
        }
    }
}

pub(crate) fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Subject or object position: the single rule variable or a constant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var,
    Const(Entity),
}

impl Term {
    pub fn entity(&self) -> Option<&Entity> {
        match self {
            Term::Var => None,
            Term::Const(e) => Some(e),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predicate {
    /// "is <attribute>"
    Attr(String),
    /// "<verb>s <object>", verb stored in base form.
    Rel { verb: String, object: Entity },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Pos,
    Neg,
}

impl Polarity {
    pub fn flip(self) -> Self {
        match self {
            Polarity::Pos => Polarity::Neg,
            Polarity::Neg => Polarity::Pos,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub subject: Term,
    pub predicate: Predicate,
    pub polarity: Polarity,
}

impl Atom {
    pub fn new(subject: Term, predicate: Predicate, polarity: Polarity) -> Self {
        Atom {
            subject,
            predicate,
            polarity,
        }
    }

    pub fn attr(subject: Entity, attribute: &str, polarity: Polarity) -> Self {
        Atom::new(Term::Const(subject), Predicate::Attr(attribute.to_string()), polarity)
    }

    pub fn rel(subject: Entity, verb: &str, object: Entity, polarity: Polarity) -> Self {
        Atom::new(
            Term::Const(subject),
            Predicate::Rel {
                verb: verb.to_string(),
                object,
            },
            polarity,
        )
    }

    /// Objects are always constants, so only the subject can be a variable.
    pub fn is_ground(&self) -> bool {
        !matches!(self.subject, Term::Var)
    }

    pub fn negated(&self) -> Atom {
        Atom {
            polarity: self.polarity.flip(),
            ..self.clone()
        }
    }

    /// Replace the variable, if any, by `entity`.
    pub fn substitute(&self, entity: Option<&Entity>) -> Atom {
        match (&self.subject, entity) {
            (Term::Var, Some(e)) => Atom {
                subject: Term::Const(e.clone()),
                ..self.clone()
            },
            _ => self.clone(),
        }
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        let object = match &self.predicate {
            Predicate::Rel { object, .. } => Some(object),
            Predicate::Attr(_) => None,
        };
        self.subject.entity().into_iter().chain(object)
    }

    /// Canonical surface form as a stand-alone sentence (ground atoms only).
    pub fn render(&self) -> String {
        render_atom(self)
    }
}

/// Sentence identifier, rendered `sentN` (1-based).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SentId(pub u32);

impl fmt::Display for SentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sent{}", self.0)
    }
}

/// Identifier of a fact: a given sentence or a derived intermediate
/// conclusion (`intN`). Given facts order before derived ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FactId {
    Given(SentId),
    Derived(u32),
}

impl fmt::Display for FactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactId::Given(s) => s.fmt(f),
            FactId::Derived(k) => write!(f, "int{k}"),
        }
    }
}

impl std::str::FromStr for FactId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |rest: &str| {
            rest.parse::<u32>()
                .ok()
                .filter(|n| *n > 0 && !rest.starts_with('0'))
                .ok_or_else(|| format!("malformed fact id `{s}`"))
        };
        if let Some(rest) = s.strip_prefix("sent") {
            Ok(FactId::Given(SentId(num(rest)?)))
        } else if let Some(rest) = s.strip_prefix("int") {
            Ok(FactId::Derived(num(rest)?))
        } else {
            Err(format!("malformed fact id `{s}`"))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    Given,
    /// 1-based index of the step that produced the fact.
    Derived(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fact {
    pub id: FactId,
    pub atom: Atom,
    pub origin: Origin,
}

impl Fact {
    pub fn given(id: SentId, atom: Atom) -> Result<Self, LangError> {
        if !atom.is_ground() {
            return Err(LangError::NotGround(id.to_string()));
        }
        Ok(Fact {
            id: FactId::Given(id),
            atom,
            origin: Origin::Given,
        })
    }

    pub fn sent_id(&self) -> Option<SentId> {
        match self.id {
            FactId::Given(s) => Some(s),
            FactId::Derived(_) => None,
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_atom(&self.atom))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantifier {
    /// "someone" / "they" / "people"
    People,
    /// "something" / "it" / "things"
    Things,
    /// No variable at all.
    Ground,
}

/// Which surface template a rule is written in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleForm {
    /// "If ... then ..."
    IfThen,
    /// "All A, B things are C."
    All,
    /// "A, B things are C."
    Bare,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub id: SentId,
    pub premises: Vec<Atom>,
    pub conclusion: Atom,
    pub quantifier: Quantifier,
    pub form: RuleForm,
}

impl Rule {
    /// Builds a rule, checking the structural invariants.
    pub fn new(
        id: SentId,
        premises: Vec<Atom>,
        conclusion: Atom,
        quantifier: Quantifier,
        form: RuleForm,
    ) -> Result<Self, LangError> {
        let invalid = |why: &str| Err(LangError::InvalidRule(format!("{id}: {why}")));
        if premises.is_empty() || premises.len() > 3 {
            return invalid("a rule needs between 1 and 3 premises");
        }
        let has_var = premises.iter().any(|p| !p.is_ground());
        if !conclusion.is_ground() && !has_var {
            return invalid("conclusion variable does not occur in any premise");
        }
        match (has_var, quantifier) {
            (true, Quantifier::Ground) => return invalid("variable rule needs a quantifier"),
            (false, Quantifier::People | Quantifier::Things) => return invalid("ground rule cannot be quantified"),
            _ => {}
        }
        for (i, p) in premises.iter().enumerate() {
            if premises[..i].contains(p) {
                return invalid("duplicate premise");
            }
        }
        if form != RuleForm::IfThen {
            let var_attr = |a: &Atom| a.subject == Term::Var && matches!(a.predicate, Predicate::Attr(_));
            if quantifier == Quantifier::Ground
                || !premises.iter().all(|p| var_attr(p) && p.polarity == Polarity::Pos)
                || !var_attr(&conclusion)
            {
                return invalid(
                    "this form needs positive attribute premises and an attribute conclusion about the variable",
                );
            }
        }
        Ok(Rule {
            id,
            premises,
            conclusion,
            quantifier,
            form,
        })
    }

    /// Whether the rule's variable may be bound to `entity`.
    pub fn admits(&self, entity: &Entity) -> bool {
        match self.quantifier {
            Quantifier::People => entity.is_person(),
            Quantifier::Things | Quantifier::Ground => true,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.quantifier == Quantifier::Ground
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_rule(self))
    }
}

/// A ground statement whose entailment is queried.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Statement {
    pub atom: Atom,
}

impl Statement {
    pub fn new(atom: Atom) -> Result<Self, LangError> {
        if !atom.is_ground() {
            return Err(LangError::NotGround("statement".into()));
        }
        Ok(Statement { atom })
    }

    pub fn render(&self) -> String {
        render_atom(&self.atom)
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Flip the polarity of a statement.
pub fn negate(statement: &Statement) -> Statement {
    Statement {
        atom: statement.atom.negated(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sentence {
    Fact(Fact),
    Rule(Rule),
}

impl Sentence {
    pub fn id(&self) -> SentId {
        match self {
            Sentence::Fact(f) => f.sent_id().expect("parsed facts are given"),
            Sentence::Rule(r) => r.id,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Sentence::Fact(f) => render_atom(&f.atom),
            Sentence::Rule(r) => render_rule(r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("invalid rule {0}")]
    InvalidRule(String),
    #[error("expected a ground atom in {0}")]
    NotGround(String),
    #[error("sentence ids must be dense and unique: {0}")]
    BadIds(String),
}

/// A parsed rulebase.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Theory {
    pub id: String,
    pub facts: Vec<Fact>,
    pub rules: Vec<Rule>,
    entities: Vec<Entity>,
}

impl Theory {
    /// Sentence ids over facts and rules must be exactly `sent1..sentK`.
    pub fn new(id: impl Into<String>, facts: Vec<Fact>, rules: Vec<Rule>) -> Result<Self, LangError> {
        let mut sentences: Vec<Sentence> = facts
            .into_iter()
            .map(Sentence::Fact)
            .chain(rules.into_iter().map(Sentence::Rule))
            .collect();
        for s in &sentences {
            if let Sentence::Fact(f) = s {
                if f.sent_id().is_none() {
                    return Err(LangError::BadIds("derived fact in theory".into()));
                }
            }
        }
        sentences.sort_by_key(Sentence::id);
        for (i, s) in sentences.iter().enumerate() {
            if s.id().0 as usize != i + 1 {
                return Err(LangError::BadIds(format!(
                    "expected sent{} but found {}",
                    i + 1,
                    s.id()
                )));
            }
        }
        Ok(Self::from_sentences(id.into(), sentences))
    }

    pub(crate) fn from_sentences(id: String, sentences: Vec<Sentence>) -> Self {
        let mut entities: Vec<Entity> = Vec::new();
        let mut facts = Vec::new();
        let mut rules = Vec::new();
        for s in sentences {
            let atoms: Vec<&Atom> = match &s {
                Sentence::Fact(f) => vec![&f.atom],
                Sentence::Rule(r) => r.premises.iter().chain([&r.conclusion]).collect(),
            };
            for e in atoms.into_iter().flat_map(Atom::entities) {
                if !entities.contains(e) {
                    entities.push(e.clone());
                }
            }
            match s {
                Sentence::Fact(f) => facts.push(f),
                Sentence::Rule(r) => rules.push(r),
            }
        }
        Theory {
            id,
            facts,
            rules,
            entities,
        }
    }

    pub fn empty(id: impl Into<String>) -> Self {
        Theory {
            id: id.into(),
            facts: Vec::new(),
            rules: Vec::new(),
            entities: Vec::new(),
        }
    }

    /// Entities in order of first mention; the canonical substitution order.
    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn len(&self) -> usize {
        self.facts.len() + self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rule(&self, id: SentId) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn rule_index(&self, id: SentId) -> Option<usize> {
        self.rules.iter().position(|r| r.id == id)
    }

    pub fn fact(&self, id: SentId) -> Option<&Fact> {
        self.facts.iter().find(|f| f.sent_id() == Some(id))
    }

    /// All sentences in id order.
    pub fn sentences(&self) -> Vec<Sentence> {
        let mut all: Vec<Sentence> = self
            .facts
            .iter()
            .cloned()
            .map(Sentence::Fact)
            .chain(self.rules.iter().cloned().map(Sentence::Rule))
            .collect();
        all.sort_by_key(Sentence::id);
        all
    }

    /// `(id, text)` pairs in id order.
    pub fn rendered(&self) -> Vec<(SentId, String)> {
        self.sentences().iter().map(|s| (s.id(), s.render())).collect()
    }

    /// Appends sentences after the existing ones, numbering them onward.
    pub fn extended(&self, extra: Vec<Sentence>) -> Theory {
        let mut all = self.sentences();
        let mut next = self.len() as u32;
        for s in extra {
            next += 1;
            let id = SentId(next);
            all.push(match s {
                Sentence::Fact(f) => Sentence::Fact(Fact {
                    id: FactId::Given(id),
                    ..f
                }),
                Sentence::Rule(r) => Sentence::Rule(Rule { id, ..r }),
            });
        }
        Theory::from_sentences(self.id.clone(), all)
    }

    /// Index from given atom to its first sentence id.
    pub fn fact_index(&self) -> HashMap<&Atom, SentId> {
        let mut index = HashMap::new();
        for f in &self.facts {
            if let Some(id) = f.sent_id() {
                index.entry(&f.atom).or_insert(id);
            }
        }
        index
    }
}
