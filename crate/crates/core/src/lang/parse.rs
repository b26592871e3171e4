use std::fmt;
use std::sync::OnceLock;

use thiserror::Error;

use super::vocab::{is_person_noun, is_reserved};
use super::{
    Atom, Entity, Fact, LangError, Polarity, Predicate, Quantifier, Rule, RuleForm, SentId, Sentence, Statement, Term,
    Theory, Vocabulary,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("at offset {offset}: unknown {category} `{token}`")]
    UnknownToken {
        offset: usize,
        token: String,
        category: &'static str,
    },
    #[error("{0}")]
    Invalid(#[from] LangError),
}

impl ParseError {
    /// Character offset of the failure, when it has one.
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownToken { offset, .. } => Some(*offset),
            ParseError::Invalid(_) => None,
        }
    }
}

/// Per-line failures from [`parse_theory`]; lines are 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoryParseError {
    pub errors: Vec<(usize, ParseError)>,
}

impl fmt::Display for TheoryParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self
            .errors
            .iter()
            .map(|(line, e)| format!("line {line}: {e}"))
            .collect();
        write!(f, "{}", lines.join("; "))
    }
}

impl std::error::Error for TheoryParseError {}

#[derive(Debug, Clone, Copy)]
struct Tok<'a> {
    text: &'a str,
    offset: usize,
}

fn tokenize(text: &str) -> Vec<Tok<'_>> {
    let mut toks = Vec::new();
    let mut start: Option<(usize, usize)> = None; // (byte, char)
    for (ci, (bi, ch)) in text.char_indices().enumerate() {
        if ch.is_whitespace() || ch == ',' || ch == '.' {
            if let Some((b, c)) = start.take() {
                toks.push(Tok {
                    text: &text[b..bi],
                    offset: c,
                });
            }
            if ch == ',' || ch == '.' {
                toks.push(Tok {
                    text: &text[bi..bi + 1],
                    offset: ci,
                });
            }
        } else if start.is_none() {
            start = Some((bi, ci));
        }
    }
    if let Some((b, c)) = start {
        toks.push(Tok {
            text: &text[b..],
            offset: c,
        });
    }
    toks
}

fn is_word(w: &str) -> bool {
    !w.is_empty() && w.chars().all(|c| c.is_ascii_lowercase()) && !is_reserved(w)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Number {
    Singular,
    Plural,
}

/// Sentence parser over a vocabulary. In strict mode every content word
/// must come from the vocabulary pools; otherwise unknown names, nouns and
/// attributes are accepted by shape. Verbs always need the lookup table.
#[derive(Clone, Debug)]
pub struct Parser<'v> {
    vocab: &'v Vocabulary,
    strict: bool,
}

fn default_vocab() -> &'static Vocabulary {
    static VOCAB: OnceLock<Vocabulary> = OnceLock::new();
    VOCAB.get_or_init(Vocabulary::default)
}

impl Default for Parser<'static> {
    fn default() -> Self {
        Parser {
            vocab: default_vocab(),
            strict: false,
        }
    }
}

impl<'v> Parser<'v> {
    pub fn new(vocab: &'v Vocabulary) -> Self {
        Parser { vocab, strict: false }
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    /// Parses one period-terminated sentence; `position` is its 1-based
    /// place in the theory and becomes the id `sent<position>`.
    pub fn parse_sentence(&self, text: &str, position: u32) -> Result<Sentence, ParseError> {
        let toks = tokenize(text);
        let Some(last) = toks.last() else {
            return Err(syntax(0, "empty sentence"));
        };
        if last.text != "." {
            return Err(syntax(text.chars().count(), "sentence must end with a period"));
        }
        let body = &toks[..toks.len() - 1];
        if let Some(dot) = body.iter().find(|t| t.text == ".") {
            return Err(syntax(dot.offset, "only one sentence per line"));
        }
        let mut c = Cursor {
            toks: body,
            pos: 0,
            end: last.offset,
            parser: self,
        };
        let id = SentId(position);
        let first = body.first().map(|t| t.text).unwrap_or("");
        let sentence = match first {
            "If" => Sentence::Rule(c.if_rule(id)?),
            "All" => Sentence::Rule(c.all_rule(id)?),
            "The" => Sentence::Fact(c.fact(id)?),
            w if w.starts_with(|ch: char| ch.is_ascii_uppercase()) => {
                if body.iter().any(|t| t.text == "people" || t.text == "things") {
                    Sentence::Rule(c.bare_rule(id)?)
                } else {
                    Sentence::Fact(c.fact(id)?)
                }
            }
            _ => return Err(syntax(0, "sentence must start with a capitalized word")),
        };
        c.finish()?;
        Ok(sentence)
    }

    pub fn parse_statement(&self, text: &str) -> Result<Statement, ParseError> {
        match self.parse_sentence(text, 1)? {
            Sentence::Fact(f) => Ok(Statement::new(f.atom)?),
            Sentence::Rule(_) => Err(syntax(0, "a statement must be a fact, not a rule")),
        }
    }

    /// Parses one sentence per line. Blank lines are skipped and do not
    /// consume an id.
    pub fn parse_theory<S: AsRef<str>>(&self, id: &str, lines: &[S]) -> Result<Theory, TheoryParseError> {
        let mut sentences = Vec::new();
        let mut errors = Vec::new();
        let mut position = 0;
        for (line_no, line) in lines.iter().enumerate() {
            let line = line.as_ref();
            if line.trim().is_empty() {
                continue;
            }
            position += 1;
            match self.parse_sentence(line, position) {
                Ok(s) => sentences.push(s),
                Err(e) => errors.push((line_no + 1, e)),
            }
        }
        if !errors.is_empty() {
            return Err(TheoryParseError { errors });
        }
        Ok(Theory::from_sentences(id.to_string(), sentences))
    }

    fn is_name(&self, w: &str) -> bool {
        let mut chars = w.chars();
        let starts_upper = chars.next().is_some_and(|c| c.is_ascii_uppercase());
        if !starts_upper || !chars.all(|c| c.is_ascii_lowercase()) || is_reserved(w) {
            return false;
        }
        let lower = w.to_ascii_lowercase();
        !self.vocab.is_attribute(&lower) && !self.vocab.common_nouns.contains(&lower)
    }
}

fn syntax(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        offset,
        message: message.into(),
    }
}

/// Parses with the default (lenient) parser over the union vocabulary.
pub fn parse_sentence(text: &str, position: u32) -> Result<Sentence, ParseError> {
    Parser::default().parse_sentence(text, position)
}

pub fn parse_statement(text: &str) -> Result<Statement, ParseError> {
    Parser::default().parse_statement(text)
}

pub fn parse_theory<S: AsRef<str>>(lines: &[S]) -> Result<Theory, TheoryParseError> {
    Parser::default().parse_theory("", lines)
}

struct Cursor<'a, 'v> {
    toks: &'a [Tok<'a>],
    pos: usize,
    end: usize,
    parser: &'a Parser<'v>,
}

#[derive(Default)]
struct VarState {
    quantifier: Option<Quantifier>,
    introduced: bool,
}

fn compactable(atom: &Atom) -> bool {
    atom.subject == Term::Var && atom.polarity == Polarity::Pos && matches!(atom.predicate, Predicate::Attr(_))
}

impl<'a, 'v> Cursor<'a, 'v> {
    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).map(|t| t.text)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.offset)
    }

    fn bump(&mut self) -> Option<Tok<'a>> {
        let t = self.toks.get(self.pos).copied();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(syntax(self.offset(), message))
    }

    fn expect(&mut self, word: &str) -> Result<(), ParseError> {
        if self.peek() == Some(word) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(format!("expected `{word}`"))
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => self.fail(format!("unexpected `{t}` before the final period")),
        }
    }

    fn vocab(&self) -> &Vocabulary {
        self.parser.vocab
    }

    fn unknown<T>(&self, tok: Tok<'_>, category: &'static str) -> Result<T, ParseError> {
        Err(ParseError::UnknownToken {
            offset: tok.offset,
            token: tok.text.to_string(),
            category,
        })
    }

    fn noun_phrase(&mut self, initial: bool) -> Result<Entity, ParseError> {
        let article = if initial { "The" } else { "the" };
        let Some(tok) = self.toks.get(self.pos).copied() else {
            return self.fail("expected a name or `the <noun>`");
        };
        if tok.text == article {
            self.pos += 1;
            let Some(noun) = self.toks.get(self.pos).copied().filter(|t| is_word(t.text)) else {
                return self.fail("expected a noun after the article");
            };
            if self.parser.strict && !self.vocab().common_nouns.contains(noun.text) {
                return self.unknown(noun, "common noun");
            }
            self.pos += 1;
            let person = self.vocab().is_person(noun.text) || is_person_noun(noun.text);
            return Ok(Entity::common_with_person(noun.text, person));
        }
        if self.parser.is_name(tok.text) {
            if self.parser.strict && !self.vocab().proper_names.contains(tok.text) {
                return self.unknown(tok, "proper name");
            }
            self.pos += 1;
            return Ok(Entity::proper(tok.text));
        }
        self.fail(format!("expected a name or `{article} <noun>`"))
    }

    fn attribute(&mut self) -> Result<String, ParseError> {
        let Some(tok) = self.toks.get(self.pos).copied().filter(|t| is_word(t.text)) else {
            return self.fail("expected an attribute");
        };
        if self.parser.strict && !self.vocab().is_attribute(tok.text) {
            return self.unknown(tok, "attribute");
        }
        self.pos += 1;
        Ok(tok.text.to_string())
    }

    fn verb_base(&mut self) -> Result<String, ParseError> {
        let Some(tok) = self.toks.get(self.pos).copied() else {
            return self.fail("expected a verb");
        };
        if !self.vocab().has_verb(tok.text) {
            return self.unknown(tok, "verb");
        }
        self.pos += 1;
        Ok(tok.text.to_string())
    }

    fn verb_phrase(&mut self, number: Number) -> Result<(Predicate, Polarity), ParseError> {
        let (copula, aux) = match number {
            Number::Singular => ("is", "does"),
            Number::Plural => ("are", "do"),
        };
        match self.peek() {
            Some(w) if w == copula => {
                self.pos += 1;
                let polarity = if self.peek() == Some("not") {
                    self.pos += 1;
                    Polarity::Neg
                } else {
                    Polarity::Pos
                };
                Ok((Predicate::Attr(self.attribute()?), polarity))
            }
            Some(w) if w == aux => {
                self.pos += 1;
                self.expect("not")?;
                let verb = self.verb_base()?;
                let object = self.noun_phrase(false)?;
                Ok((Predicate::Rel { verb, object }, Polarity::Neg))
            }
            Some(w) => {
                let verb = match number {
                    Number::Singular => self.vocab().base_of(w).map(str::to_string),
                    Number::Plural => self.vocab().has_verb(w).then(|| w.to_string()),
                };
                let Some(verb) = verb else {
                    return self.fail(format!("expected `{copula}`, `{aux} not` or a verb"));
                };
                self.pos += 1;
                let object = self.noun_phrase(false)?;
                Ok((Predicate::Rel { verb, object }, Polarity::Pos))
            }
            None => self.fail(format!("expected `{copula}`, `{aux} not` or a verb")),
        }
    }

    fn fact(&mut self, id: SentId) -> Result<Fact, ParseError> {
        let subject = self.noun_phrase(true)?;
        let (predicate, polarity) = self.verb_phrase(Number::Singular)?;
        Ok(Fact::given(id, Atom::new(Term::Const(subject), predicate, polarity))?)
    }

    fn starts_clause(&self) -> bool {
        match self.peek() {
            Some("someone" | "something" | "they" | "it" | "the") => true,
            Some(w) => self.parser.is_name(w),
            None => false,
        }
    }

    fn clause(&mut self, vars: &mut VarState) -> Result<Atom, ParseError> {
        let (subject, number) = match self.peek() {
            Some(w @ ("someone" | "something")) => {
                if vars.introduced {
                    return self.fail(format!("`{w}` repeats the variable; refer back with `they` or `it`"));
                }
                let q = if w == "someone" {
                    Quantifier::People
                } else {
                    Quantifier::Things
                };
                vars.quantifier = Some(q);
                vars.introduced = true;
                self.pos += 1;
                (Term::Var, Number::Singular)
            }
            Some(w @ ("they" | "it")) => {
                let (q, number) = if w == "they" {
                    (Quantifier::People, Number::Plural)
                } else {
                    (Quantifier::Things, Number::Singular)
                };
                if !vars.introduced {
                    return self.fail(format!("`{w}` used before `someone`/`something`"));
                }
                if vars.quantifier != Some(q) {
                    return self.fail(format!("`{w}` does not agree with the quantifier"));
                }
                self.pos += 1;
                (Term::Var, number)
            }
            _ => (Term::Const(self.noun_phrase(false)?), Number::Singular),
        };
        let (predicate, polarity) = self.verb_phrase(number)?;
        Ok(Atom::new(subject, predicate, polarity))
    }

    fn if_rule(&mut self, id: SentId) -> Result<Rule, ParseError> {
        self.expect("If")?;
        let mut vars = VarState::default();
        let mut premises = vec![self.clause(&mut vars)?];
        while self.peek() == Some("and") {
            self.pos += 1;
            let prev_compactable = premises.last().is_some_and(compactable);
            if self.starts_clause() {
                let at = self.offset();
                let atom = self.clause(&mut vars)?;
                if compactable(&atom) && prev_compactable {
                    return Err(syntax(
                        at,
                        "consecutive attributes of the variable are written `and <attribute>`",
                    ));
                }
                premises.push(atom);
            } else if prev_compactable {
                let attr = self.attribute()?;
                premises.push(Atom::new(Term::Var, Predicate::Attr(attr), Polarity::Pos));
            } else {
                return self.fail("expected a clause after `and`");
            }
        }
        self.expect("then")?;
        let conclusion = self.clause(&mut vars)?;
        let quantifier = vars.quantifier.unwrap_or(Quantifier::Ground);
        Ok(Rule::new(id, premises, conclusion, quantifier, RuleForm::IfThen)?)
    }

    fn attribute_list(&mut self, first: String) -> Result<Vec<String>, ParseError> {
        let mut attrs = vec![first];
        while self.peek() == Some(",") {
            self.pos += 1;
            attrs.push(self.attribute()?);
        }
        Ok(attrs)
    }

    fn class_rule_tail(&mut self, id: SentId, attrs: Vec<String>, form: RuleForm) -> Result<Rule, ParseError> {
        let quantifier = match self.peek() {
            Some("people") => Quantifier::People,
            Some("things") => Quantifier::Things,
            _ => return self.fail("expected `people` or `things`"),
        };
        self.pos += 1;
        self.expect("are")?;
        let polarity = if self.peek() == Some("not") {
            self.pos += 1;
            Polarity::Neg
        } else {
            Polarity::Pos
        };
        let conclusion = Atom::new(Term::Var, Predicate::Attr(self.attribute()?), polarity);
        let premises = attrs
            .into_iter()
            .map(|a| Atom::new(Term::Var, Predicate::Attr(a), Polarity::Pos))
            .collect();
        Ok(Rule::new(id, premises, conclusion, quantifier, form)?)
    }

    fn all_rule(&mut self, id: SentId) -> Result<Rule, ParseError> {
        self.expect("All")?;
        let first = self.attribute()?;
        let attrs = self.attribute_list(first)?;
        self.class_rule_tail(id, attrs, RuleForm::All)
    }

    fn bare_rule(&mut self, id: SentId) -> Result<Rule, ParseError> {
        let tok = self.bump().expect("dispatch saw a first token");
        let mut chars = tok.text.chars();
        let first_upper = chars.next().is_some_and(|c| c.is_ascii_uppercase());
        let lower = tok.text.to_ascii_lowercase();
        if !first_upper || !is_word(&lower) || !chars.all(|c| c.is_ascii_lowercase()) {
            return Err(syntax(tok.offset, "expected an attribute"));
        }
        if self.parser.strict && !self.vocab().is_attribute(&lower) {
            return self.unknown(tok, "attribute");
        }
        let attrs = self.attribute_list(lower)?;
        self.class_rule_tail(id, attrs, RuleForm::Bare)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(text: &str) -> Rule {
        match parse_sentence(text, 1).unwrap() {
            Sentence::Rule(r) => r,
            other => panic!("expected rule, got {other:?}"),
        }
    }

    fn x(attr: &str) -> Atom {
        Atom::new(Term::Var, Predicate::Attr(attr.into()), Polarity::Pos)
    }

    #[test]
    fn parses_attribute_fact() {
        let s = parse_sentence("Chris is blue.", 9).unwrap();
        let Sentence::Fact(f) = s else { panic!() };
        assert_eq!(f.id.to_string(), "sent9");
        assert_eq!(f.atom, Atom::attr(Entity::proper("Chris"), "blue", Polarity::Pos));
    }

    #[test]
    fn parses_if_rule() {
        let r = rule("If someone is blue then they are quiet.");
        assert_eq!(r.premises, vec![x("blue")]);
        assert_eq!(r.conclusion, x("quiet"));
        assert_eq!(r.quantifier, Quantifier::People);
        assert_eq!(r.form, RuleForm::IfThen);
    }

    #[test]
    fn parses_all_rule() {
        let r = rule("All young things are smart.");
        assert_eq!(r.premises, vec![x("young")]);
        assert_eq!(r.conclusion, x("smart"));
        assert_eq!(r.quantifier, Quantifier::Things);
        assert_eq!(r.form, RuleForm::All);
        let r = rule("All smart, young things are nice.");
        assert_eq!(r.premises, vec![x("smart"), x("young")]);
    }

    #[test]
    fn parses_bare_and_relational_rules() {
        let r = rule("Smart, blue people are quiet.");
        assert_eq!(r.premises, vec![x("smart"), x("blue")]);
        assert_eq!(r.form, RuleForm::Bare);

        let r = rule(
            "If someone eats the artist and the artist eats the grandmother then the grandmother eats the artist.",
        );
        assert_eq!(r.premises.len(), 2);
        assert!(r.conclusion.is_ground());
        assert_eq!(r.quantifier, Quantifier::People);

        let r = rule("If Chris is red and Chris is furry then Chris is blue.");
        assert_eq!(r.quantifier, Quantifier::Ground);

        let r = rule("If something is green and big then it is not kind.");
        assert_eq!(r.premises, vec![x("green"), x("big")]);
        assert_eq!(r.conclusion.polarity, Polarity::Neg);
    }

    #[test]
    fn ungrammatical_word_order_fails_at_start() {
        let err = parse_sentence("Blue Chris is.", 1).unwrap_err();
        assert_eq!(err.offset(), Some(0));
    }

    #[test]
    fn missing_verb_reports_offset() {
        let err = parse_sentence("Chris blue.", 1).unwrap_err();
        assert_eq!(err.offset(), Some(6));
    }

    #[test]
    fn non_canonical_conjunction_is_rejected() {
        assert!(parse_sentence("If someone is red and they are big then they are kind.", 1).is_err());
        assert!(parse_sentence("If someone is red then someone is big.", 1).is_err());
        assert!(parse_sentence("If it is red then it is big.", 1).is_err());
        assert!(parse_sentence("If someone is red then it is big.", 1).is_err());
    }

    #[test]
    fn strict_mode_rejects_unknown_words() {
        let vocab = Vocabulary::default();
        let strict = Parser::new(&vocab).strict(true);
        let err = strict.parse_sentence("Zed is blue.", 1).unwrap_err();
        assert!(matches!(
            err,
            ParseError::UnknownToken {
                offset: 0,
                category: "proper name",
                ..
            }
        ));
        let err = strict.parse_sentence("Chris is glorp.", 1).unwrap_err();
        assert!(matches!(err, ParseError::UnknownToken { offset: 9, .. }));
        assert!(Parser::new(&vocab).parse_sentence("Zed is glorp.", 1).is_ok());
    }

    #[test]
    fn unknown_verbs_always_fail() {
        assert!(parse_sentence("The cat hugs the dog.", 1).is_err());
    }

    #[test]
    fn theory_errors_carry_line_numbers() {
        let err = parse_theory(&["Chris is blue.", "Chris blue."]).unwrap_err();
        assert_eq!(err.errors.len(), 1);
        assert_eq!(err.errors[0].0, 2);
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn statement_rejects_rules() {
        assert!(parse_statement("All young things are smart.").is_err());
        assert!(parse_statement("Bob is nice.").is_ok());
    }
}
