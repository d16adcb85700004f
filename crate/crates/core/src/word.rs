//! Alphabets and words.
//!
//! Words are stored as symbol indices into an [`Alphabet`]. Enumeration is
//! length-then-lexicographic (by index), which fixes the row and column order
//! of every Hankel block.

use serde::{Deserialize, Serialize};

use crate::error::{OomError, Result};

/// A word over an alphabet, as symbol indices. The first entry is the earliest symbol.
pub type Word = Vec<usize>;

/// An ordered, duplicate-free list of symbol names.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Alphabet(Vec<String>);

impl Alphabet {
    pub fn new<S: Into<String>>(symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(OomError::Validation("alphabet must not be empty".into()));
        }
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() {
                return Err(OomError::Validation(
                    "alphabet symbols must be non-empty".into(),
                ));
            }
            if symbols[..i].contains(s) {
                return Err(OomError::Validation(format!("duplicate symbol `{s}`")));
            }
        }
        Ok(Alphabet(symbols))
    }

    /// Alphabet `"0", "1", ..., "n-1"`.
    pub fn numeric(n: usize) -> Self {
        Alphabet((0..n.max(1)).map(|i| i.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.0
    }

    pub fn symbol(&self, index: usize) -> Option<&str> {
        self.0.get(index).map(String::as_str)
    }

    pub fn index_of(&self, symbol: &str) -> Result<usize> {
        self.0
            .iter()
            .position(|s| s == symbol)
            .ok_or_else(|| OomError::UnknownSymbol(symbol.to_string()))
    }

    /// Parses a word. Symbols are separated by commas or whitespace; when no separator is
    /// present and every symbol is a single character, the text is split per character.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(Vec::new());
        }
        if text.contains(',') || text.contains(char::is_whitespace) {
            return text
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| self.index_of(s))
                .collect();
        }
        if self.0.iter().all(|s| s.chars().count() == 1) {
            text.chars()
                .map(|c| self.index_of(&c.to_string()))
                .collect()
        } else {
            Ok(vec![self.index_of(text)?])
        }
    }

    /// Renders a word; symbols are concatenated when all are single characters.
    pub fn format_word(&self, word: &[usize]) -> String {
        let single = self.0.iter().all(|s| s.chars().count() == 1);
        let parts: Vec<&str> = word
            .iter()
            .map(|&i| self.symbol(i).unwrap_or("?"))
            .collect();
        if single {
            parts.concat()
        } else {
            parts.join(",")
        }
    }

    pub fn check_word(&self, word: &[usize]) -> Result<()> {
        match word.iter().find(|&&i| i >= self.len()) {
            Some(&index) => Err(OomError::SymbolIndex {
                index,
                size: self.len(),
            }),
            None => Ok(()),
        }
    }
}

impl TryFrom<Vec<String>> for Alphabet {
    type Error = OomError;

    fn try_from(symbols: Vec<String>) -> Result<Self> {
        Alphabet::new(symbols)
    }
}

impl From<Alphabet> for Vec<String> {
    fn from(a: Alphabet) -> Self {
        a.0
    }
}

/// Number of words of length `0..=max_len` over `n_symbols` symbols, saturating.
pub fn count_words(n_symbols: usize, max_len: usize) -> u128 {
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..=max_len {
        total = total.saturating_add(level);
        level = level.saturating_mul(n_symbols as u128);
    }
    total
}

/// All words of length exactly `len`, lexicographic by symbol index.
pub fn words_of_length(n_symbols: usize, len: usize) -> Vec<Word> {
    let mut out = vec![Vec::with_capacity(len)];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..n_symbols).map(move |d| {
                    let mut next = w.clone();
                    next.push(d);
                    next
                })
            })
            .collect();
    }
    out
}

/// All words of length `0..=max_len`, shortest first, lexicographic within a length.
pub fn words_up_to(n_symbols: usize, max_len: usize) -> Vec<Word> {
    (0..=max_len)
        .flat_map(|len| words_of_length(n_symbols, len))
        .collect()
}
