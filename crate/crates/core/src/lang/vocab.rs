//! Vocabulary pools for the controlled language.
//!
//! Two disjoint families of pools exist: the *training* pools used by the
//! dataset generator, and the *robustness* pools that perturbations sample
//! replacements from. Parsing defaults to the union of both.

use indexmap::{IndexMap, IndexSet};

pub const TRAINING_PROPER_NAMES: &[&str] = &["Anne", "Bob", "Charlie", "Dave", "Erin", "Fiona", "Gary", "Harry"];

/// Training common nouns. None of these denote people.
pub const TRAINING_COMMON_NOUNS: &[&str] = &[
    "bear", "cat", "cow", "dog", "lion", "mouse", "rabbit", "squirrel", "tiger",
];

pub const TRAINING_ATTRIBUTES: &[&str] = &[
    "big", "blue", "cold", "furry", "green", "kind", "nice", "quiet", "red", "rough", "round", "smart", "white",
    "young", "happy", "sad", "tall", "short", "strong", "weak", "fast", "slow", "wise", "shy",
];

pub const ROBUSTNESS_PROPER_NAMES: &[&str] = &[
    "George", "Paul", "Ronald", "Emma", "Magnus", "Timothy", "Chris", "Molly", "Diana", "Joseph", "Becky", "Kurt",
    "Ivan", "Steve", "Laura", "Oliver", "Adam", "Larry",
];

pub const ROBUSTNESS_COMMON_NOUNS: &[&str] = &[
    "mother",
    "father",
    "baby",
    "child",
    "toddler",
    "teenager",
    "grandmother",
    "student",
    "teacher",
    "alligator",
    "cricket",
    "bird",
    "wolf",
    "giraffe",
    "dinosaur",
    "thief",
    "soldier",
    "officer",
    "artist",
    "shopkeeper",
    "caretaker",
    "janitor",
    "minister",
    "salesman",
    "saleswoman",
    "runner",
    "racer",
    "painter",
    "dresser",
    "shoplifter",
];

pub const ROBUSTNESS_ATTRIBUTES: &[&str] = &[
    "maroon",
    "brown",
    "black",
    "orange",
    "cordial",
    "friendly",
    "adorable",
    "old",
    "soft",
    "violent",
    "intelligent",
    "square",
    "warm",
    "large",
    "cylindrical",
    "spherical",
    "tiny",
    "microscopic",
    "brilliant",
    "noisy",
    "playful",
    "tender",
    "gracious",
    "patient",
    "funny",
    "hilarious",
    "thorny",
    "sensitive",
    "diplomatic",
    "thoughtful",
];

/// Common nouns that denote people; "people" rules only range over these
/// and over proper names.
pub const PERSON_NOUNS: &[&str] = &[
    "mother",
    "father",
    "baby",
    "child",
    "toddler",
    "teenager",
    "grandmother",
    "student",
    "teacher",
    "thief",
    "soldier",
    "officer",
    "artist",
    "shopkeeper",
    "caretaker",
    "janitor",
    "minister",
    "salesman",
    "saleswoman",
    "runner",
    "racer",
    "painter",
    "dresser",
    "shoplifter",
];

/// Base form to third-person singular.
pub const VERBS: &[(&str, &str)] = &[
    ("like", "likes"),
    ("chase", "chases"),
    ("eat", "eats"),
    ("see", "sees"),
    ("visit", "visits"),
    ("need", "needs"),
];

/// Words the grammar reserves; they can never be content words.
pub const RESERVED: &[&str] = &[
    "if",
    "all",
    "the",
    "someone",
    "something",
    "they",
    "it",
    "is",
    "are",
    "not",
    "does",
    "do",
    "and",
    "then",
    "people",
    "things",
];

pub fn is_person_noun(noun: &str) -> bool {
    PERSON_NOUNS.contains(&noun)
}

pub fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word.to_ascii_lowercase().as_str())
}

/// Third-person singular form of a verb, via the lookup table.
pub fn third_person(base: &str) -> String {
    VERBS
        .iter()
        .find(|(b, _)| *b == base)
        .map(|(_, t)| (*t).to_string())
        .unwrap_or_else(|| format!("{base}s"))
}

/// A set of pools the parser and generator draw content words from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    pub proper_names: IndexSet<String>,
    pub common_nouns: IndexSet<String>,
    pub person_nouns: IndexSet<String>,
    pub attributes: IndexSet<String>,
    /// base -> third person singular
    pub verbs: IndexMap<String, String>,
}

fn owned(words: &[&str]) -> IndexSet<String> {
    words.iter().map(|w| (*w).to_string()).collect()
}

impl Vocabulary {
    fn build(proper: &[&str], common: &[&str], attributes: &[&str]) -> Self {
        let common_nouns = owned(common);
        let person_nouns = common_nouns.iter().filter(|n| is_person_noun(n)).cloned().collect();
        Vocabulary {
            proper_names: owned(proper),
            common_nouns,
            person_nouns,
            attributes: owned(attributes),
            verbs: VERBS
                .iter()
                .map(|(b, t)| ((*b).to_string(), (*t).to_string()))
                .collect(),
        }
    }

    pub fn training() -> Self {
        Self::build(TRAINING_PROPER_NAMES, TRAINING_COMMON_NOUNS, TRAINING_ATTRIBUTES)
    }

    pub fn robustness() -> Self {
        Self::build(ROBUSTNESS_PROPER_NAMES, ROBUSTNESS_COMMON_NOUNS, ROBUSTNESS_ATTRIBUTES)
    }

    /// Union of two vocabularies, keeping `self`'s order first.
    pub fn union(mut self, other: &Vocabulary) -> Self {
        self.proper_names.extend(other.proper_names.iter().cloned());
        self.common_nouns.extend(other.common_nouns.iter().cloned());
        self.person_nouns.extend(other.person_nouns.iter().cloned());
        self.attributes.extend(other.attributes.iter().cloned());
        for (b, t) in &other.verbs {
            self.verbs.entry(b.clone()).or_insert_with(|| t.clone());
        }
        self
    }

    pub fn is_attribute(&self, word: &str) -> bool {
        self.attributes.contains(word)
    }

    pub fn is_person(&self, noun: &str) -> bool {
        self.person_nouns.contains(noun)
    }

    pub fn base_of(&self, third: &str) -> Option<&str> {
        self.verbs
            .iter()
            .find(|(_, t)| t.as_str() == third)
            .map(|(b, _)| b.as_str())
    }

    pub fn has_verb(&self, base: &str) -> bool {
        self.verbs.contains_key(base)
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::training().union(&Vocabulary::robustness())
    }
}
