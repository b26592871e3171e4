use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::lang::{Atom, FactId, SentId};

/// A node label inside a canonical proof.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProofNode {
    Sent(SentId),
    /// Intermediate conclusion, renumbered per proof.
    Int(u32),
    Hypothesis,
}

impl fmt::Display for ProofNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProofNode::Sent(s) => s.fmt(f),
            ProofNode::Int(k) => write!(f, "int{k}"),
            ProofNode::Hypothesis => f.write_str("hypothesis"),
        }
    }
}

/// One rule application inside a proof: `(rule & inputs) -> output`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProofStep {
    pub rule: SentId,
    /// Sorted: given sentences first, then intermediates, numerically.
    pub inputs: Vec<ProofNode>,
    pub output: ProofNode,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofError {
    #[error("malformed proof `{text}`: {reason}")]
    Malformed { text: String, reason: String },
    #[error("{0} is not in the trace")]
    MissingTarget(FactId),
}

/// A proof DAG in canonical form. Steps are listed in post-order of a
/// depth-first walk from the hypothesis, visiting premises in rule order;
/// intermediates are numbered `int1..intK` in that order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProofGraph {
    steps: Vec<ProofStep>,
    leaf: Option<SentId>,
    depth: usize,
    canonical: String,
    /// The atom the proof concludes, polarity included, when known.
    pub hypothesis: Option<Atom>,
}

fn render_steps(steps: &[ProofStep], leaf: Option<SentId>) -> String {
    if let Some(leaf) = leaf {
        return format!("{leaf} -> hypothesis");
    }
    steps
        .iter()
        .map(|s| {
            let inputs: Vec<String> = s.inputs.iter().map(ToString::to_string).collect();
            format!("({} & {}) -> {}", s.rule, inputs.join(" "), s.output)
        })
        .collect::<Vec<_>>()
        .join(" ; ")
}

impl ProofGraph {
    /// Builds the canonical proof of `root`. `resolve` returns the rule and
    /// premise facts (in premise order) that derived a fact, or `None` for a
    /// given fact. Shared sub-derivations appear once.
    pub fn from_dag<F>(root: FactId, mut resolve: F) -> Result<ProofGraph, ProofError>
    where
        F: FnMut(FactId) -> Option<(SentId, Vec<FactId>)>,
    {
        let Some((rule, premises)) = resolve(root) else {
            let FactId::Given(leaf) = root else {
                return Err(ProofError::MissingTarget(root));
            };
            return Ok(ProofGraph {
                steps: Vec::new(),
                leaf: Some(leaf),
                depth: 0,
                canonical: format!("{leaf} -> hypothesis"),
                hypothesis: None,
            });
        };

        struct Walk<'r, F> {
            resolve: &'r mut F,
            labels: HashMap<FactId, (ProofNode, usize)>,
            steps: Vec<ProofStep>,
            next_int: u32,
        }

        impl<F> Walk<'_, F>
        where
            F: FnMut(FactId) -> Option<(SentId, Vec<FactId>)>,
        {
            fn visit(
                &mut self,
                id: FactId,
                rule: SentId,
                premises: Vec<FactId>,
                output: Option<ProofNode>,
            ) -> Result<(ProofNode, usize), ProofError> {
                let mut inputs = Vec::with_capacity(premises.len());
                let mut depth = 0;
                for p in premises {
                    let (label, d) = match self.labels.get(&p) {
                        Some(done) => *done,
                        None => match (self.resolve)(p) {
                            None => match p {
                                FactId::Given(s) => (ProofNode::Sent(s), 0),
                                FactId::Derived(_) => return Err(ProofError::MissingTarget(p)),
                            },
                            Some((r, ps)) => self.visit(p, r, ps, None)?,
                        },
                    };
                    self.labels.insert(p, (label, d));
                    inputs.push(label);
                    depth = depth.max(d);
                }
                inputs.sort();
                inputs.dedup();
                let output = output.unwrap_or_else(|| {
                    self.next_int += 1;
                    ProofNode::Int(self.next_int)
                });
                self.steps.push(ProofStep { rule, inputs, output });
                let done = (output, depth + 1);
                self.labels.insert(id, done);
                Ok(done)
            }
        }

        let mut walk = Walk {
            resolve: &mut resolve,
            labels: HashMap::new(),
            steps: Vec::new(),
            next_int: 0,
        };
        let (_, depth) = walk.visit(root, rule, premises, Some(ProofNode::Hypothesis))?;
        let steps = walk.steps;
        let canonical = render_steps(&steps, None);
        Ok(ProofGraph {
            steps,
            leaf: None,
            depth,
            canonical,
            hypothesis: None,
        })
    }

    /// Parses a canonical proof string. Anything that is not already in
    /// canonical shape is rejected.
    pub fn parse(text: &str) -> Result<ProofGraph, ProofError> {
        let bad = |reason: &str| ProofError::Malformed {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        if let Some(leaf) = text.strip_suffix(" -> hypothesis") {
            if !leaf.contains(['(', ' ']) {
                return match leaf.parse::<FactId>() {
                    Ok(FactId::Given(s)) => Ok(ProofGraph {
                        steps: Vec::new(),
                        leaf: Some(s),
                        depth: 0,
                        canonical: text.to_string(),
                        hypothesis: None,
                    }),
                    _ => Err(bad("a depth-0 proof names one given sentence")),
                };
            }
        }
        let mut steps = Vec::new();
        let mut depths: HashMap<u32, usize> = HashMap::new();
        let mut used: Vec<bool> = Vec::new();
        let mut depth = 0;
        let parts: Vec<&str> = text.split(" ; ").collect();
        for (i, part) in parts.iter().enumerate() {
            let last = i + 1 == parts.len();
            let (lhs, out) = part.split_once(") -> ").ok_or_else(|| bad("expected `) -> `"))?;
            let lhs = lhs.strip_prefix('(').ok_or_else(|| bad("expected `(`"))?;
            let (rule, inputs) = lhs.split_once(" & ").ok_or_else(|| bad("expected ` & `"))?;
            let rule = match rule.parse::<FactId>() {
                Ok(FactId::Given(s)) => s,
                _ => return Err(bad("rule must be a sentence id")),
            };
            let mut nodes = Vec::new();
            let mut step_depth = 0;
            for tok in inputs.split(' ') {
                let node = match tok.parse::<FactId>().map_err(|e| bad(&e))? {
                    FactId::Given(s) => ProofNode::Sent(s),
                    FactId::Derived(k) => {
                        let d = depths
                            .get(&k)
                            .ok_or_else(|| bad("intermediate used before it is derived"))?;
                        step_depth = step_depth.max(*d);
                        used[k as usize - 1] = true;
                        ProofNode::Int(k)
                    }
                };
                nodes.push(node);
            }
            if nodes.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad("inputs must be sorted and distinct"));
            }
            let output = if last {
                if out != "hypothesis" {
                    return Err(bad("the last step must conclude the hypothesis"));
                }
                ProofNode::Hypothesis
            } else {
                let k = (steps.len() + 1) as u32;
                if out != format!("int{k}") {
                    return Err(bad("intermediates must be numbered in order"));
                }
                depths.insert(k, step_depth + 1);
                used.push(false);
                ProofNode::Int(k)
            };
            depth = step_depth + 1;
            steps.push(ProofStep {
                rule,
                inputs: nodes,
                output,
            });
        }
        if used.iter().any(|u| !u) {
            return Err(bad("every intermediate must feed a later step"));
        }
        let canonical = render_steps(&steps, None);
        if canonical != text {
            return Err(bad("not in canonical spacing"));
        }
        Ok(ProofGraph {
            steps,
            leaf: None,
            depth,
            canonical,
            hypothesis: None,
        })
    }

    pub fn with_hypothesis(mut self, atom: Atom) -> Self {
        self.hypothesis = Some(atom);
        self
    }

    pub fn steps(&self) -> &[ProofStep] {
        &self.steps
    }

    /// The given sentence a depth-0 proof consists of.
    pub fn leaf(&self) -> Option<SentId> {
        self.leaf
    }

    /// Longest chain of rule applications from a leaf to the hypothesis.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    /// Sentence ids mentioned by the proof, rules and facts alike.
    pub fn sentences(&self) -> Vec<SentId> {
        let mut out: Vec<SentId> = self.leaf.into_iter().collect();
        for s in &self.steps {
            out.push(s.rule);
            out.extend(s.inputs.iter().filter_map(|n| match n {
                ProofNode::Sent(id) => Some(*id),
                _ => None,
            }));
        }
        out.sort();
        out.dedup();
        out
    }
}

impl fmt::Display for ProofGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}
