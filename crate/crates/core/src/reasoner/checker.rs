//! Proof checking against the theory alone.
//!
//! Deliberately does not use the binding search or the fact store: each
//! step is validated by trying every entity its inputs mention as the value
//! of the rule variable.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::lang::{Atom, Theory};

use super::proof::{ProofGraph, ProofNode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("{0} is not a fact of the theory")]
    NotAFact(String),
    #[error("{0} is not a rule of the theory")]
    NotARule(String),
    #[error("step {step}: no substitution makes the inputs match the premises of {rule}")]
    NoMatch { step: usize, rule: String },
    #[error("the proof concludes `{found}` but `{expected}` was required")]
    WrongHypothesis { expected: String, found: String },
}

/// Verifies that `proof` derives `hypothesis` from `theory`, and returns
/// every atom it derives (intermediates first, hypothesis last).
pub fn check_proof(theory: &Theory, hypothesis: &Atom, proof: &ProofGraph) -> Result<Vec<Atom>, CheckError> {
    let facts: HashMap<_, &Atom> = theory
        .facts
        .iter()
        .filter_map(|f| f.sent_id().map(|s| (s, &f.atom)))
        .collect();
    if let Some(leaf) = proof.leaf() {
        let atom = facts.get(&leaf).ok_or_else(|| CheckError::NotAFact(leaf.to_string()))?;
        if *atom != hypothesis {
            return Err(CheckError::WrongHypothesis {
                expected: hypothesis.render(),
                found: atom.render(),
            });
        }
        return Ok(vec![]);
    }
    let mut derived: HashMap<u32, Atom> = HashMap::new();
    let mut out = Vec::new();
    for (i, step) in proof.steps().iter().enumerate() {
        let rule = theory
            .rule(step.rule)
            .ok_or_else(|| CheckError::NotARule(step.rule.to_string()))?;
        let mut inputs: HashSet<Atom> = HashSet::new();
        for node in &step.inputs {
            let atom = match node {
                ProofNode::Sent(s) => (*facts.get(s).ok_or_else(|| CheckError::NotAFact(s.to_string()))?).clone(),
                ProofNode::Int(k) => derived
                    .get(k)
                    .cloned()
                    .ok_or_else(|| CheckError::NotAFact(node.to_string()))?,
                ProofNode::Hypothesis => return Err(CheckError::NotAFact(node.to_string())),
            };
            inputs.insert(atom);
        }
        let mut candidates: Vec<Option<_>> = vec![None];
        candidates.extend(inputs.iter().filter_map(|a| a.subject.entity().cloned()).map(Some));
        let conclusion = candidates
            .iter()
            .filter(|c| match c {
                None => rule.is_ground(),
                Some(e) => !rule.is_ground() && rule.admits(e),
            })
            .find_map(|c| {
                let grounded: HashSet<Atom> = rule.premises.iter().map(|p| p.substitute(c.as_ref())).collect();
                let concl = rule.conclusion.substitute(c.as_ref());
                (grounded == inputs && concl.is_ground()).then_some(concl)
            })
            .ok_or_else(|| CheckError::NoMatch {
                step: i + 1,
                rule: step.rule.to_string(),
            })?;
        match step.output {
            ProofNode::Int(k) => {
                derived.insert(k, conclusion.clone());
            }
            _ => {
                if conclusion != *hypothesis {
                    return Err(CheckError::WrongHypothesis {
                        expected: hypothesis.render(),
                        found: conclusion.render(),
                    });
                }
            }
        }
        out.push(conclusion);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_statement, parse_theory};

    #[test]
    fn accepts_valid_and_rejects_forged_proofs() {
        let t = parse_theory(&[
            "Charlie is blue.",
            "If someone is blue then they are kind.",
            "Kind people are white.",
            "Charlie is red.",
        ])
        .unwrap();
        let goal = parse_statement("Charlie is white.").unwrap().atom;
        let ok = ProofGraph::parse("(sent2 & sent1) -> int1 ; (sent3 & int1) -> hypothesis").unwrap();
        let atoms = check_proof(&t, &goal, &ok).unwrap();
        assert_eq!(atoms.len(), 2);
        assert_eq!(atoms[0].render(), "Charlie is kind.");

        let wrong_fact = ProofGraph::parse("(sent2 & sent4) -> int1 ; (sent3 & int1) -> hypothesis").unwrap();
        assert!(matches!(
            check_proof(&t, &goal, &wrong_fact),
            Err(CheckError::NoMatch { step: 1, .. })
        ));
        let rule_as_fact = ProofGraph::parse("(sent2 & sent3) -> hypothesis").unwrap();
        assert!(check_proof(&t, &goal, &rule_as_fact).is_err());
        let short = ProofGraph::parse("(sent2 & sent1) -> hypothesis").unwrap();
        assert!(matches!(
            check_proof(&t, &goal, &short),
            Err(CheckError::WrongHypothesis { .. })
        ));
        let leaf = ProofGraph::parse("sent4 -> hypothesis").unwrap();
        assert!(check_proof(&t, &parse_statement("Charlie is red.").unwrap().atom, &leaf).is_ok());
        assert!(check_proof(&t, &goal, &leaf).is_err());
    }
}
