//! Deterministic part-of-speech tagger over the universal tagset.
//!
//! Lookup order: bundled lexicon, digit rule, suffix rules, NOUN fallback.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use super::TokenSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PosTag {
    Noun,
    Verb,
    Adj,
    Adv,
    Pron,
    Det,
    Adp,
    Num,
    Conj,
    Prt,
    X,
    Punct,
}

impl PosTag {
    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::Noun => "NOUN",
            PosTag::Verb => "VERB",
            PosTag::Adj => "ADJ",
            PosTag::Adv => "ADV",
            PosTag::Pron => "PRON",
            PosTag::Det => "DET",
            PosTag::Adp => "ADP",
            PosTag::Num => "NUM",
            PosTag::Conj => "CONJ",
            PosTag::Prt => "PRT",
            PosTag::X => "X",
            PosTag::Punct => "PUNCT",
        }
    }
}

impl fmt::Display for PosTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "NOUN" => PosTag::Noun,
            "VERB" => PosTag::Verb,
            "ADJ" => PosTag::Adj,
            "ADV" => PosTag::Adv,
            "PRON" => PosTag::Pron,
            "DET" => PosTag::Det,
            "ADP" => PosTag::Adp,
            "NUM" => PosTag::Num,
            "CONJ" => PosTag::Conj,
            "PRT" => PosTag::Prt,
            "X" => PosTag::X,
            "PUNCT" => PosTag::Punct,
            other => return Err(format!("unknown tag {other}")),
        })
    }
}

static LEXICON_SOURCE: &str = include_str!("../../data/pos_lexicon.tsv");

static LEXICON: LazyLock<HashMap<&'static str, PosTag>> = LazyLock::new(|| {
    LEXICON_SOURCE
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            let (word, tag) = line.split_once('\t').expect("lexicon line is word<TAB>tag");
            (word, tag.parse().expect("lexicon tag is valid"))
        })
        .collect()
});

const SUFFIX_RULES: [(&str, PosTag); 6] = [
    ("ly", PosTag::Adv),
    ("ing", PosTag::Verb),
    ("ed", PosTag::Verb),
    ("ous", PosTag::Adj),
    ("ful", PosTag::Adj),
    ("ive", PosTag::Adj),
];

pub fn lexicon_size() -> usize {
    LEXICON.len()
}

pub fn tag_token(token: &str) -> PosTag {
    if let Some(tag) = LEXICON.get(token) {
        return *tag;
    }
    if token.chars().all(|c| c.is_numeric()) {
        return PosTag::Num;
    }
    if token.chars().any(|c| c.is_numeric()) {
        return PosTag::X;
    }
    let chars = token.chars().count();
    for (suffix, tag) in SUFFIX_RULES {
        // Leave at least a two-letter stem so "red" or "fly" are not caught.
        if chars >= suffix.len() + 2 && token.ends_with(suffix) {
            return tag;
        }
    }
    PosTag::Noun
}

pub fn pos_tag(tokens: &TokenSequence) -> Vec<PosTag> {
    tokens.iter().map(|t| tag_token(t)).collect()
}
