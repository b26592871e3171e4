use super::vocab::third_person;
use super::{capitalize, Atom, Polarity, Predicate, Quantifier, Rule, RuleForm, Term};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Number {
    Singular,
    Plural,
}

fn verb_phrase(predicate: &Predicate, polarity: Polarity, number: Number) -> String {
    let neg = polarity == Polarity::Neg;
    match (predicate, number) {
        (Predicate::Attr(a), Number::Singular) if neg => format!("is not {a}"),
        (Predicate::Attr(a), Number::Singular) => format!("is {a}"),
        (Predicate::Attr(a), Number::Plural) if neg => format!("are not {a}"),
        (Predicate::Attr(a), Number::Plural) => format!("are {a}"),
        (Predicate::Rel { verb, object }, Number::Singular) if neg => {
            format!("does not {verb} {}", object.surface(false))
        }
        (Predicate::Rel { verb, object }, Number::Singular) => {
            format!("{} {}", third_person(verb), object.surface(false))
        }
        (Predicate::Rel { verb, object }, Number::Plural) if neg => {
            format!("do not {verb} {}", object.surface(false))
        }
        (Predicate::Rel { verb, object }, Number::Plural) => {
            format!("{verb} {}", object.surface(false))
        }
    }
}

/// A ground atom as a stand-alone sentence: "The cat does not eat the dog."
pub fn render_atom(atom: &Atom) -> String {
    match &atom.subject {
        Term::Const(e) => format!(
            "{} {}.",
            e.surface(true),
            verb_phrase(&atom.predicate, atom.polarity, Number::Singular)
        ),
        Term::Var => format!("X {}.", verb_phrase(&atom.predicate, atom.polarity, Number::Singular)),
    }
}

struct ClauseWriter {
    quantifier: Quantifier,
    introduced: bool,
}

impl ClauseWriter {
    fn clause(&mut self, atom: &Atom) -> String {
        let (subject, number) = match &atom.subject {
            Term::Const(e) => (e.surface(false), Number::Singular),
            Term::Var => {
                let first = !self.introduced;
                self.introduced = true;
                match (self.quantifier, first) {
                    (Quantifier::People, true) => ("someone".to_string(), Number::Singular),
                    (Quantifier::People, false) => ("they".to_string(), Number::Plural),
                    (_, true) => ("something".to_string(), Number::Singular),
                    (_, false) => ("it".to_string(), Number::Singular),
                }
            }
        };
        format!("{subject} {}", verb_phrase(&atom.predicate, atom.polarity, number))
    }
}

fn compactable(atom: &Atom) -> bool {
    atom.subject == Term::Var && atom.polarity == Polarity::Pos && matches!(atom.predicate, Predicate::Attr(_))
}

fn attr_name(atom: &Atom) -> &str {
    match &atom.predicate {
        Predicate::Attr(a) => a,
        Predicate::Rel { verb, .. } => verb,
    }
}

fn kind_word(q: Quantifier) -> &'static str {
    match q {
        Quantifier::People => "people",
        _ => "things",
    }
}

fn copula(atom: &Atom) -> String {
    match atom.polarity {
        Polarity::Pos => format!("are {}", attr_name(atom)),
        Polarity::Neg => format!("are not {}", attr_name(atom)),
    }
}

/// Canonical surface form of a rule.
pub fn render_rule(rule: &Rule) -> String {
    match rule.form {
        RuleForm::IfThen => {
            let mut w = ClauseWriter {
                quantifier: rule.quantifier,
                introduced: false,
            };
            let mut out = String::from("If ");
            for (i, p) in rule.premises.iter().enumerate() {
                if i > 0 {
                    out.push_str(" and ");
                    if compactable(p) && compactable(&rule.premises[i - 1]) {
                        out.push_str(attr_name(p));
                        continue;
                    }
                }
                out.push_str(&w.clause(p));
            }
            out.push_str(" then ");
            out.push_str(&w.clause(&rule.conclusion));
            out.push('.');
            out
        }
        RuleForm::All | RuleForm::Bare => {
            let attrs: Vec<&str> = rule.premises.iter().map(attr_name).collect();
            let list = attrs.join(", ");
            let head = if rule.form == RuleForm::All {
                format!("All {list}")
            } else {
                capitalize(&list)
            };
            format!("{head} {} {}.", kind_word(rule.quantifier), copula(&rule.conclusion))
        }
    }
}
