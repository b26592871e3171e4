//! The gold oracle: a naive round-based fixpoint that grounds every rule
//! against every entity of the theory. It shares nothing with the reasoner's
//! binding search, so the two can check each other.

use std::collections::{HashMap, HashSet};

use indexmap::IndexMap;

use crate::lang::{Atom, Entity, FactId, SentId, Statement, Theory};
use crate::reasoner::{Label, ProofGraph};

use super::{Depth, GoldAnnotation};

pub const DEFAULT_PROOF_CAP: usize = 64;

/// One way of deriving an atom: a rule and its grounded premises.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Derivation {
    pub rule: SentId,
    pub premises: Vec<Atom>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureEntry {
    /// 0 for given facts, otherwise the round that first derived the atom.
    pub level: usize,
    pub given: Option<SentId>,
    pub derivations: Vec<Derivation>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Closure {
    pub entries: IndexMap<Atom, ClosureEntry>,
    pub contradiction: bool,
}

impl Closure {
    pub fn contains(&self, atom: &Atom) -> bool {
        self.entries.contains_key(atom)
    }

    pub fn level(&self, atom: &Atom) -> Option<usize> {
        self.entries.get(atom).map(|e| e.level)
    }

    /// Atoms that are derivable but not given.
    pub fn derived(&self) -> impl Iterator<Item = &Atom> {
        self.entries.iter().filter(|(_, e)| e.given.is_none()).map(|(a, _)| a)
    }

    pub fn derived_count(&self) -> usize {
        self.derived().count()
    }
}

fn groundings(theory: &Theory) -> Vec<(usize, Option<&Entity>)> {
    let mut out = Vec::new();
    for (i, rule) in theory.rules.iter().enumerate() {
        if rule.is_ground() {
            out.push((i, None));
        } else {
            out.extend(
                theory
                    .entities()
                    .iter()
                    .filter(|e| rule.admits(e))
                    .map(|e| (i, Some(e))),
            );
        }
    }
    out
}

/// Everything derivable from `theory`, with every derivation of every
/// atom (given atoms included).
pub fn gold_closure(theory: &Theory) -> Closure {
    let mut entries: IndexMap<Atom, ClosureEntry> = IndexMap::new();
    let mut given: Vec<_> = theory.facts.iter().collect();
    given.sort_by_key(|f| f.id);
    for f in given {
        entries.entry(f.atom.clone()).or_insert(ClosureEntry {
            level: 0,
            given: f.sent_id(),
            derivations: Vec::new(),
        });
    }
    let ground = groundings(theory);
    let mut round = 0;
    loop {
        round += 1;
        let mut fresh: Vec<Atom> = Vec::new();
        for &(i, e) in &ground {
            let rule = &theory.rules[i];
            let premises: Vec<Atom> = rule.premises.iter().map(|p| p.substitute(e)).collect();
            if !premises.iter().all(|p| entries.contains_key(p)) {
                continue;
            }
            let conclusion = rule.conclusion.substitute(e);
            if !entries.contains_key(&conclusion) && !fresh.contains(&conclusion) {
                fresh.push(conclusion);
            }
        }
        if fresh.is_empty() {
            break;
        }
        for atom in fresh {
            entries.insert(
                atom,
                ClosureEntry {
                    level: round,
                    given: None,
                    derivations: Vec::new(),
                },
            );
        }
    }
    // Now that the atom set is final, record every derivation.
    for &(i, e) in &ground {
        let rule = &theory.rules[i];
        let premises: Vec<Atom> = rule.premises.iter().map(|p| p.substitute(e)).collect();
        if !premises.iter().all(|p| entries.contains_key(p)) {
            continue;
        }
        let d = Derivation {
            rule: rule.id,
            premises,
        };
        let entry = entries
            .get_mut(&rule.conclusion.substitute(e))
            .expect("fixpoint contains every conclusion");
        if !entry.derivations.contains(&d) {
            entry.derivations.push(d);
        }
    }
    let contradiction = entries.keys().any(|a| entries.contains_key(&a.negated()));
    Closure { entries, contradiction }
}

type Choice = HashMap<Atom, usize>;

/// Derivation index per atom that realizes its minimal level.
fn layered_choice(closure: &Closure, root: &Atom) -> Choice {
    let mut choice = Choice::new();
    let mut todo = vec![root.clone()];
    while let Some(a) = todo.pop() {
        let entry = &closure.entries[&a];
        if entry.given.is_some() || choice.contains_key(&a) {
            continue;
        }
        let (i, d) = entry
            .derivations
            .iter()
            .enumerate()
            .find(|(_, d)| d.premises.iter().all(|p| closure.entries[p].level < entry.level))
            .expect("the round that derived an atom used lower levels");
        choice.insert(a, i);
        todo.extend(d.premises.iter().cloned());
    }
    choice
}

fn acyclic(closure: &Closure, root: &Atom, choice: &Choice) -> bool {
    // 0 unvisited, 1 on stack, 2 done
    fn visit(closure: &Closure, a: &Atom, choice: &Choice, state: &mut HashMap<Atom, u8>) -> bool {
        match state.get(a) {
            Some(1) => return false,
            Some(2) => return true,
            _ => {}
        }
        let Some(&i) = choice.get(a) else { return true };
        state.insert(a.clone(), 1);
        for p in &closure.entries[a].derivations[i].premises {
            if !visit(closure, p, choice, state) {
                return false;
            }
        }
        state.insert(a.clone(), 2);
        true
    }
    visit(closure, root, choice, &mut HashMap::new())
}

fn enumerate(
    closure: &Closure,
    root: &Atom,
    todo: &mut Vec<Atom>,
    choice: &mut Choice,
    out: &mut Vec<Choice>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    let mut popped = Vec::new();
    let next = loop {
        match todo.pop() {
            None => break None,
            Some(a) => {
                let settled = closure.entries[&a].given.is_some() || choice.contains_key(&a);
                popped.push(a.clone());
                if !settled {
                    break Some(a);
                }
            }
        }
    };
    match next {
        None => {
            if acyclic(closure, root, choice) {
                out.push(choice.clone());
            }
        }
        Some(a) => {
            let n = closure.entries[&a].derivations.len();
            for i in 0..n {
                choice.insert(a.clone(), i);
                let before = todo.len();
                todo.extend(closure.entries[&a].derivations[i].premises.iter().cloned());
                enumerate(closure, root, todo, choice, out, limit);
                todo.truncate(before);
                choice.remove(&a);
                if out.len() >= limit {
                    break;
                }
            }
        }
    }
    todo.extend(popped.into_iter().rev());
}

fn proof_of(closure: &Closure, root: &Atom, choice: &Choice) -> ProofGraph {
    let mut ids: HashMap<Atom, FactId> = HashMap::new();
    let mut atoms: Vec<Atom> = Vec::new();
    let mut id_of = |a: &Atom| -> FactId {
        if let Some(s) = closure.entries[a].given {
            return FactId::Given(s);
        }
        *ids.entry(a.clone()).or_insert_with(|| {
            atoms.push(a.clone());
            FactId::Derived(atoms.len() as u32)
        })
    };
    let root_id = id_of(root);
    // Resolve lazily: map ids back to atoms through a second table.
    let mut by_id: HashMap<FactId, Atom> = HashMap::new();
    by_id.insert(root_id, root.clone());
    let mut resolve = |id: FactId| -> Option<(SentId, Vec<FactId>)> {
        let a = by_id.get(&id)?.clone();
        let &i = choice.get(&a)?;
        let d = &closure.entries[&a].derivations[i];
        let premises: Vec<FactId> = d
            .premises
            .iter()
            .map(|p| {
                let pid = id_of(p);
                by_id.insert(pid, p.clone());
                pid
            })
            .collect();
        Some((d.rule, premises))
    };
    ProofGraph::from_dag(root_id, &mut resolve)
        .expect("closure proofs only reference closure atoms")
        .with_hypothesis(root.clone())
}

/// Gold proofs of `root`, sorted by (depth, canonical text). The minimal
/// layered proof is always present; the flag reports truncation at `cap`.
fn gold_proofs(closure: &Closure, root: &Atom, cap: usize) -> (Vec<ProofGraph>, bool) {
    let minimal = proof_of(closure, root, &layered_choice(closure, root));
    let mut choices = Vec::new();
    enumerate(
        closure,
        root,
        &mut vec![root.clone()],
        &mut Choice::new(),
        &mut choices,
        cap + 1,
    );
    let mut seen: HashSet<String> = HashSet::new();
    let mut proofs: Vec<ProofGraph> = Vec::new();
    for p in std::iter::once(minimal).chain(choices.iter().map(|c| proof_of(closure, root, c))) {
        if seen.insert(p.canonical().to_string()) {
            proofs.push(p);
        }
    }
    let truncated = proofs.len() > cap;
    if truncated {
        // The minimal proof sits first; keep it and the best of the rest.
        let mut rest = proofs.split_off(1);
        rest.sort_by(|a, b| (a.depth(), a.canonical()).cmp(&(b.depth(), b.canonical())));
        rest.truncate(cap.saturating_sub(1));
        proofs.extend(rest);
    }
    proofs.sort_by(|a, b| (a.depth(), a.canonical()).cmp(&(b.depth(), b.canonical())));
    (proofs, truncated)
}

/// Label, depth and gold proofs of `statement` under `closure`.
pub fn assign_gold(closure: &Closure, statement: &Statement, cap: usize) -> GoldAnnotation {
    for (atom, label) in [
        (statement.atom.clone(), Label::True),
        (statement.atom.negated(), Label::False),
    ] {
        if closure.contains(&atom) {
            let (proofs, truncated) = gold_proofs(closure, &atom, cap.max(1));
            let depth = proofs.iter().map(ProofGraph::depth).min().unwrap_or(0);
            return GoldAnnotation {
                label,
                depth: Depth::Level(depth as u32),
                proofs: proofs.iter().map(|p| p.canonical().to_string()).collect(),
                truncated,
            };
        }
    }
    GoldAnnotation::unknown()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{parse_statement, parse_theory};

    fn chain() -> Theory {
        parse_theory(&[
            "Chris is blue.",
            "If someone is blue then they are quiet.",
            "If someone is quiet then they are cold.",
        ])
        .unwrap()
    }

    fn st(s: &str) -> Statement {
        parse_statement(s).unwrap()
    }

    #[test]
    fn two_step_closure() {
        let c = gold_closure(&chain());
        assert_eq!(c.derived_count(), 2);
        assert_eq!(c.level(&st("Chris is quiet.").atom), Some(1));
        assert_eq!(c.level(&st("Chris is cold.").atom), Some(2));
        assert!(!c.contradiction);
        let g = assign_gold(&c, &st("Chris is cold."), DEFAULT_PROOF_CAP);
        assert_eq!(g.label, Label::True);
        assert_eq!(g.depth, Depth::Level(2));
        assert_eq!(g.proofs, vec!["(sent2 & sent1) -> int1 ; (sent3 & int1) -> hypothesis"]);
        assert_eq!(assign_gold(&c, &st("Chris is white."), 64), GoldAnnotation::unknown());
    }

    #[test]
    fn no_rules_means_given_only() {
        let t = parse_theory(&["Chris is blue.", "Bob is not red."]).unwrap();
        let c = gold_closure(&t);
        assert_eq!(c.entries.len(), 2);
        let g = assign_gold(&c, &st("Bob is red."), 64);
        assert_eq!(g.label, Label::False);
        assert_eq!(g.depth, Depth::Level(0));
        assert_eq!(g.proofs, vec!["sent2 -> hypothesis"]);
    }

    #[test]
    fn derivations_of_given_atoms_are_recorded() {
        let t = parse_theory(&[
            "Chris is blue.",
            "Chris is quiet.",
            "If someone is blue then they are quiet.",
        ])
        .unwrap();
        let c = gold_closure(&t);
        assert_eq!(c.derived_count(), 0);
        assert_eq!(c.entries[&st("Chris is quiet.").atom].derivations.len(), 1);
    }

    #[test]
    fn alternative_proofs_are_all_enumerated() {
        let t = parse_theory(&[
            "Bob is red.",
            "Bob is big.",
            "If someone is red then they are kind.",
            "If someone is big then they are kind.",
            "If someone is kind then they are nice.",
        ])
        .unwrap();
        let c = gold_closure(&t);
        let g = assign_gold(&c, &st("Bob is nice."), 64);
        assert_eq!(
            g.proofs,
            vec![
                "(sent3 & sent1) -> int1 ; (sent5 & int1) -> hypothesis",
                "(sent4 & sent2) -> int1 ; (sent5 & int1) -> hypothesis",
            ]
        );
        let capped = assign_gold(&c, &st("Bob is nice."), 1);
        assert!(capped.truncated);
        assert_eq!(capped.proofs.len(), 1);
    }

    #[test]
    fn cycles_are_not_proofs() {
        let t = parse_theory(&[
            "Bob is red.",
            "If someone is red then they are kind.",
            "If someone is kind then they are nice.",
            "If someone is nice then they are kind.",
        ])
        .unwrap();
        let c = gold_closure(&t);
        let g = assign_gold(&c, &st("Bob is nice."), 64);
        assert_eq!(g.proofs, vec!["(sent2 & sent1) -> int1 ; (sent3 & int1) -> hypothesis"]);
        assert_eq!(g.depth, Depth::Level(2));
    }
}
