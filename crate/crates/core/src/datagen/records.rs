//! Decomposition of gold proofs into rule-selector (RS), fact-selector (FS)
//! and knowledge-composer (KC) training records.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::lang::Atom;
use crate::reasoner::{check_proof, Label, ProofGraph, ProofNode};

use super::Instance;

/// Rule-selector target: an index into the theory's rules, or the stop
/// signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RsTarget {
    Rule(usize),
    Stop,
}

impl Serialize for RsTarget {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            RsTarget::Rule(i) => s.serialize_u64(*i as u64),
            RsTarget::Stop => s.serialize_str("STOP"),
        }
    }
}

impl<'de> Deserialize<'de> for RsTarget {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(usize),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(i) => Ok(RsTarget::Rule(i)),
            Repr::Str(s) if s == "STOP" => Ok(RsTarget::Stop),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad rule target `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsRecord {
    pub question_id: String,
    pub statement: String,
    pub facts: Vec<String>,
    pub rules: Vec<String>,
    pub output: RsTarget,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FsRecord {
    pub question_id: String,
    pub statement: String,
    pub rule: String,
    pub facts: Vec<String>,
    /// Indices into `facts`, ascending.
    pub output: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KcRecord {
    pub question_id: String,
    pub rule: String,
    pub facts: Vec<String>,
    pub output: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrainingRecords {
    pub rs: Vec<RsRecord>,
    pub fs: Vec<FsRecord>,
    pub kc: Vec<KcRecord>,
}

impl TrainingRecords {
    pub fn extend(&mut self, other: TrainingRecords) {
        self.rs.extend(other.rs);
        self.fs.extend(other.fs);
        self.kc.extend(other.kc);
    }
}

/// Replays the first gold proof of every question. Each step yields one
/// record of each kind; each question ends with one STOP record.
pub fn emit_training_records(instance: &Instance) -> Result<TrainingRecords, String> {
    let theory = &instance.theory;
    let rules: Vec<String> = theory.rules.iter().map(|r| r.to_string()).collect();
    let given: Vec<String> = theory.facts.iter().map(|f| f.to_string()).collect();
    let mut out = TrainingRecords::default();
    for q in &instance.questions {
        let statement = q.statement.render();
        let mut facts = given.clone();
        if q.gold.label != Label::Unknown {
            let text = q
                .gold
                .proofs
                .first()
                .ok_or_else(|| format!("{}: labelled question without a proof", q.id))?;
            let proof = ProofGraph::parse(text).map_err(|e| format!("{}: {e}", q.id))?;
            let hypothesis: Atom = match q.gold.label {
                Label::False => q.statement.atom.negated(),
                _ => q.statement.atom.clone(),
            };
            let derived = check_proof(theory, &hypothesis, &proof).map_err(|e| format!("{}: {e}", q.id))?;
            for (step, conclusion) in proof.steps().iter().zip(derived) {
                let rule_index = theory
                    .rule_index(step.rule)
                    .ok_or_else(|| format!("{}: {} is not a rule", q.id, step.rule))?;
                let mut indices = Vec::new();
                for node in &step.inputs {
                    let i = match node {
                        ProofNode::Sent(s) => theory
                            .facts
                            .iter()
                            .position(|f| f.sent_id() == Some(*s))
                            .ok_or_else(|| format!("{}: {s} is not a fact", q.id))?,
                        ProofNode::Int(k) => given.len() + *k as usize - 1,
                        ProofNode::Hypothesis => return Err(format!("{}: hypothesis used as input", q.id)),
                    };
                    indices.push(i);
                }
                indices.sort_unstable();
                let rule = rules[rule_index].clone();
                out.rs.push(RsRecord {
                    question_id: q.id.clone(),
                    statement: statement.clone(),
                    facts: facts.clone(),
                    rules: rules.clone(),
                    output: RsTarget::Rule(rule_index),
                });
                out.fs.push(FsRecord {
                    question_id: q.id.clone(),
                    statement: statement.clone(),
                    rule: rule.clone(),
                    facts: facts.clone(),
                    output: indices.clone(),
                });
                out.kc.push(KcRecord {
                    question_id: q.id.clone(),
                    rule,
                    facts: indices.iter().map(|&i| facts[i].clone()).collect(),
                    output: conclusion.render(),
                });
                facts.push(conclusion.render());
            }
        }
        out.rs.push(RsRecord {
            question_id: q.id.clone(),
            statement,
            facts,
            rules: rules.clone(),
            output: RsTarget::Stop,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{assign_gold, gold_closure, Question, DEFAULT_PROOF_CAP};
    use crate::lang::{parse_statement, parse_theory};

    fn instance(lines: &[&str], statements: &[&str]) -> Instance {
        let theory = parse_theory(lines).unwrap();
        let closure = gold_closure(&theory);
        let questions = statements
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let statement = parse_statement(s).unwrap();
                Question {
                    id: format!("q{i}"),
                    gold: assign_gold(&closure, &statement, DEFAULT_PROOF_CAP),
                    statement,
                }
            })
            .collect();
        Instance { theory, questions }
    }

    #[test]
    fn two_step_question_counts() {
        let inst = instance(
            &[
                "Chris is blue.",
                "If someone is blue then they are quiet.",
                "Quiet people are cold.",
            ],
            &["Chris is cold."],
        );
        let r = emit_training_records(&inst).unwrap();
        assert_eq!((r.rs.len(), r.fs.len(), r.kc.len()), (3, 2, 2));
        assert_eq!(r.rs[0].output, RsTarget::Rule(0));
        assert_eq!(r.rs[2].output, RsTarget::Stop);
        assert_eq!(r.kc[0].facts, ["Chris is blue."]);
        assert_eq!(r.kc[0].output, "Chris is quiet.");
        assert_eq!(r.fs[1].output, vec![1]);
        assert_eq!(serde_json::to_string(&r.rs[2].output).unwrap(), "\"STOP\"");
    }

    #[test]
    fn conjunctive_step_selects_two_facts() {
        let inst = instance(
            &["Bob is smart.", "Bob is young.", "All smart, young things are nice."],
            &["Bob is nice.", "Bob is red."],
        );
        let r = emit_training_records(&inst).unwrap();
        assert_eq!(r.fs.len(), 1);
        assert_eq!(r.fs[0].output, vec![0, 1]);
        // The unknown question contributes only its stop record.
        assert_eq!(r.rs.len(), 3);
    }
}
