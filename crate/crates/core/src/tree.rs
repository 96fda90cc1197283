//! Alphabets, words and complete context trees.
//!
//! Words are stored in past order: the leftmost symbol is the deepest one,
//! the rightmost symbol is the most recent. A context tree is a finite,
//! complete, suffix-free set of such words, so that every long enough past
//! has exactly one context among its suffixes.

use std::borrow::Borrow;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Written form of the empty word (the root context).
pub const EMPTY_WORD: &str = "@";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Alphabet {
    symbols: Vec<char>,
}

impl Alphabet {
    pub fn new(symbols: &str) -> Result<Self> {
        let symbols: Vec<char> = symbols.chars().collect();
        if symbols.len() < 2 {
            return Err(Error::InvalidAlphabet(format!(
                "need at least two symbols, got {}",
                symbols.len()
            )));
        }
        if symbols.len() > u8::MAX as usize {
            return Err(Error::InvalidAlphabet("too many symbols".into()));
        }
        let distinct: BTreeSet<char> = symbols.iter().copied().collect();
        if distinct.len() != symbols.len() {
            return Err(Error::InvalidAlphabet("symbols must be distinct".into()));
        }
        if symbols.iter().any(|c| c.is_whitespace() || c.to_string() == EMPTY_WORD) {
            return Err(Error::InvalidAlphabet(
                "whitespace and '@' are reserved".into(),
            ));
        }
        Ok(Alphabet { symbols })
    }

    /// The alphabet `{0, 1}` used by renewal sources.
    pub fn binary() -> Self {
        Alphabet {
            symbols: vec!['0', '1'],
        }
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn index_of(&self, c: char) -> Option<u8> {
        self.symbols.iter().position(|&s| s == c).map(|i| i as u8)
    }

    pub fn symbol(&self, index: u8) -> char {
        self.symbols[index as usize]
    }

    /// Parses a word written in past order; `@` is the empty word.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        if text == EMPTY_WORD {
            return Ok(Word::empty());
        }
        self.encode(text).map(Word::new)
    }

    pub fn format_word(&self, word: &Word) -> String {
        if word.is_empty() {
            EMPTY_WORD.to_string()
        } else {
            self.decode(word.as_slice())
        }
    }

    /// Maps a string of symbol characters to symbol indices.
    pub fn encode(&self, text: &str) -> Result<Vec<u8>> {
        text.chars()
            .enumerate()
            .map(|(position, symbol)| {
                self.index_of(symbol)
                    .ok_or(Error::AlphabetViolation { symbol, position })
            })
            .collect()
    }

    pub fn decode(&self, symbols: &[u8]) -> String {
        symbols.iter().map(|&s| self.symbol(s)).collect()
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.symbols {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

/// A finite word of symbol indices in past order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// `symbol` repeated `count` times.
    pub fn repeat(symbol: u8, count: usize) -> Self {
        Word(vec![symbol; count])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    /// True when `self` is a suffix of `other` (the empty word is a suffix of everything).
    pub fn is_suffix_of(&self, other: &[u8]) -> bool {
        other.ends_with(&self.0)
    }

    /// `b·self`: extends the word one step further into the past.
    pub fn prepend(&self, symbol: u8) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(symbol);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    /// `self·a`: the word followed by the next symbol.
    pub fn append(&self, symbol: u8) -> Word {
        let mut v = self.0.clone();
        v.push(symbol);
        Word(v)
    }

    /// The suffix of length `len` (the `len` most recent symbols).
    pub fn suffix(&self, len: usize) -> Word {
        Word(self.0[self.0.len() - len..].to_vec())
    }

    /// The word with its deepest symbol removed.
    pub fn parent(&self) -> Option<Word> {
        if self.0.is_empty() {
            None
        } else {
            Some(Word(self.0[1..].to_vec()))
        }
    }
}

impl Borrow<[u8]> for Word {
    fn borrow(&self) -> &[u8] {
        &self.0
    }
}

impl From<&[u8]> for Word {
    fn from(s: &[u8]) -> Self {
        Word(s.to_vec())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot {
    Internal(u32),
    Leaf(u32),
}

/// A complete, suffix-free set of contexts of finite depth.
#[derive(Clone, Debug)]
pub struct ContextTree {
    alphabet: Alphabet,
    contexts: Vec<Word>,
    depth: usize,
    // Suffix trie over the internal nodes; `None` when the tree is the root tree.
    slots: Option<Vec<Slot>>,
}

impl PartialEq for ContextTree {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet && self.contexts == other.contexts
    }
}

impl Eq for ContextTree {}

impl ContextTree {
    /// Validates and builds a context tree; contexts are stored in canonical order.
    pub fn new(alphabet: Alphabet, contexts: Vec<Word>) -> Result<Self> {
        if contexts.is_empty() {
            return Err(Error::NotAContextTree("empty context set".into()));
        }
        let k = alphabet.size();
        for w in &contexts {
            if w.as_slice().iter().any(|&s| s as usize >= k) {
                return Err(Error::NotAContextTree("symbol outside alphabet".into()));
            }
        }
        let mut sorted = contexts;
        sorted.sort();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::NotAContextTree(format!(
                    "duplicate context {}",
                    alphabet.format_word(&pair[0])
                )));
            }
        }
        let leaves: BTreeSet<&[u8]> = sorted.iter().map(|w| w.as_slice()).collect();
        let mut internal: BTreeSet<&[u8]> = BTreeSet::new();
        for w in &sorted {
            let s = w.as_slice();
            for start in 1..=s.len() {
                internal.insert(&s[start..]);
            }
        }
        if let Some(nested) = internal.iter().find(|s| leaves.contains(*s)) {
            return Err(Error::NotAContextTree(format!(
                "context {} is a suffix of another context",
                alphabet.format_word(&Word::from(*nested))
            )));
        }
        for node in &internal {
            for b in 0..k as u8 {
                let mut child = Vec::with_capacity(node.len() + 1);
                child.push(b);
                child.extend_from_slice(node);
                if !leaves.contains(child.as_slice()) && !internal.contains(child.as_slice()) {
                    return Err(Error::NotAContextTree(format!(
                        "node {} is missing child {}",
                        alphabet.format_word(&Word::from(*node)),
                        alphabet.format_word(&Word::new(child))
                    )));
                }
            }
        }
        let depth = sorted.iter().map(Word::len).max().unwrap_or(0);
        let slots = if internal.is_empty() {
            None
        } else {
            // Breadth-first ids so the root is node 0.
            let mut order: Vec<&[u8]> = internal.iter().copied().collect();
            order.sort_by_key(|s| s.len());
            let ids: HashMap<&[u8], usize> =
                order.iter().enumerate().map(|(i, s)| (*s, i)).collect();
            let mut slots = vec![Slot::Leaf(0); order.len() * k];
            for (id, node) in order.iter().enumerate() {
                for b in 0..k as u8 {
                    let mut child = Vec::with_capacity(node.len() + 1);
                    child.push(b);
                    child.extend_from_slice(node);
                    slots[id * k + b as usize] = match ids.get(child.as_slice()) {
                        Some(&cid) => Slot::Internal(cid as u32),
                        None => {
                            let leaf = sorted
                                .binary_search_by(|w| w.as_slice().cmp(child.as_slice()))
                                .expect("completeness checked above");
                            Slot::Leaf(leaf as u32)
                        }
                    };
                }
            }
            Some(slots)
        };
        Ok(ContextTree {
            alphabet,
            contexts: sorted,
            depth,
            slots,
        })
    }

    /// The i.i.d. model: a single empty context.
    pub fn root(alphabet: Alphabet) -> Self {
        ContextTree {
            alphabet,
            contexts: vec![Word::empty()],
            depth: 0,
            slots: None,
        }
    }

    /// All words of length `depth`.
    pub fn full(alphabet: Alphabet, depth: usize) -> Result<Self> {
        let k = alphabet.size();
        let mut words = vec![Word::empty()];
        for _ in 0..depth {
            words = words
                .iter()
                .flat_map(|w| (0..k as u8).map(move |b| w.prepend(b)))
                .collect();
        }
        ContextTree::new(alphabet, words)
    }

    /// The renewal tree `{1 0^j : j = 0..k} ∪ {0^(k+1)}` over `{0, 1}`.
    pub fn renewal(k: usize) -> Self {
        let mut contexts: Vec<Word> = (0..=k)
            .map(|j| {
                let mut v = vec![1u8];
                v.extend(std::iter::repeat_n(0u8, j));
                Word::new(v)
            })
            .collect();
        contexts.push(Word::repeat(0, k + 1));
        ContextTree::new(Alphabet::binary(), contexts).expect("renewal trees are complete")
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn contexts(&self) -> &[Word] {
        &self.contexts
    }

    /// d(τ): the maximal context length.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// N(τ): the number of contexts.
    pub fn size(&self) -> usize {
        self.contexts.len()
    }

    pub fn position(&self, context: &Word) -> Option<usize> {
        self.contexts.binary_search(context).ok()
    }

    /// Proper suffixes of contexts, in canonical order.
    pub fn internal_nodes(&self) -> Vec<Word> {
        let mut set = BTreeSet::new();
        for w in &self.contexts {
            for start in 1..=w.len() {
                set.insert(Word::from(&w.as_slice()[start..]));
            }
        }
        set.into_iter().collect()
    }

    /// Index of the context that is a suffix of `past`, or `None` when
    /// `past` is too short to decide.
    pub fn context_index_of(&self, past: &[u8]) -> Option<usize> {
        let Some(slots) = &self.slots else {
            return Some(0);
        };
        let k = self.alphabet.size();
        let mut node = 0usize;
        for &symbol in past.iter().rev() {
            match slots[node * k + symbol as usize] {
                Slot::Internal(next) => node = next as usize,
                Slot::Leaf(leaf) => return Some(leaf as usize),
            }
        }
        None
    }

    /// The unique context that is a suffix of `past`.
    pub fn context_of(&self, past: &Word) -> Result<&Word> {
        if past.len() < self.depth {
            return Err(Error::InsufficientHistory {
                needed: self.depth,
                got: past.len(),
            });
        }
        let k = self.alphabet.size();
        if let Some(position) = past.as_slice().iter().position(|&s| s as usize >= k) {
            return Err(Error::AlphabetViolation {
                symbol: '?',
                position,
            });
        }
        let index = self
            .context_index_of(past.as_slice())
            .expect("past is at least as long as the tree");
        Ok(&self.contexts[index])
    }

    /// True when every context of `self` is a suffix of some context of `other`.
    pub fn is_subtree(&self, other: &ContextTree) -> Result<bool> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch);
        }
        Ok(self.contexts.iter().all(|c| other.has_extension(c)))
    }

    /// True when `word` is a suffix of some context (it is a context or an internal node).
    pub fn has_extension(&self, word: &Word) -> bool {
        let Some(slots) = &self.slots else {
            return word.is_empty();
        };
        let k = self.alphabet.size();
        let mut node = 0usize;
        let s = word.as_slice();
        for (consumed, &symbol) in s.iter().rev().enumerate() {
            match slots[node * k + symbol as usize] {
                Slot::Internal(next) => node = next as usize,
                Slot::Leaf(_) => return consumed + 1 == s.len(),
            }
        }
        true
    }

    /// JSON form `{"alphabet": "...", "contexts": [...]}`.
    pub fn to_json(&self) -> TreeJson {
        TreeJson {
            alphabet: self.alphabet.to_string(),
            contexts: self
                .contexts
                .iter()
                .map(|w| self.alphabet.format_word(w))
                .collect(),
        }
    }

    pub fn from_json(json: &TreeJson) -> Result<Self> {
        let alphabet = Alphabet::new(&json.alphabet)?;
        let contexts = json
            .contexts
            .iter()
            .map(|c| alphabet.parse_word(c))
            .collect::<Result<Vec<_>>>()?;
        ContextTree::new(alphabet, contexts)
    }

    /// Parses a bare context listing (no header line) over `alphabet`.
    pub fn parse_listing(text: &str, alphabet: &Alphabet) -> Result<Self> {
        let contexts = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| alphabet.parse_word(l))
            .collect::<Result<Vec<_>>>()?;
        ContextTree::new(alphabet.clone(), contexts)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeJson {
    pub alphabet: String,
    pub contexts: Vec<String>,
}

impl fmt::Display for ContextTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alphabet={}", self.alphabet)?;
        for w in &self.contexts {
            writeln!(f, "{}", self.alphabet.format_word(w))?;
        }
        Ok(())
    }
}

impl FromStr for ContextTree {
    type Err = Error;

    /// Text format: `alphabet=<symbols>` then one context per line.
    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty tree file".into()))?;
        let symbols = header
            .strip_prefix("alphabet=")
            .ok_or_else(|| Error::Parse("first line must be alphabet=<symbols>".into()))?;
        let alphabet = Alphabet::new(symbols)?;
        let rest: Vec<&str> = lines.collect();
        ContextTree::parse_listing(&rest.join("\n"), &alphabet)
    }
}

/// Largest `|A|^(d_max+1)` accepted by [`enumerate_complete_subtrees`].
pub const ENUMERATION_LIMIT: usize = 32;

/// Every complete context tree of depth at most `d_max`.
pub fn enumerate_complete_subtrees(alphabet: &Alphabet, d_max: usize) -> Result<Vec<ContextTree>> {
    let k = alphabet.size();
    let too_large = Error::EnumerationTooLarge {
        alphabet_size: k,
        d_max,
    };
    let leaves = k
        .checked_pow(d_max as u32 + 1)
        .ok_or_else(|| too_large.clone())?;
    if leaves > ENUMERATION_LIMIT {
        return Err(too_large);
    }
    fn expand(node: &Word, remaining: usize, k: usize) -> Vec<Vec<Word>> {
        let mut out = vec![vec![node.clone()]];
        if remaining == 0 {
            return out;
        }
        let mut partial: Vec<Vec<Word>> = vec![Vec::new()];
        for b in 0..k as u8 {
            let options = expand(&node.prepend(b), remaining - 1, k);
            partial = partial
                .iter()
                .flat_map(|p| {
                    options.iter().map(move |o| {
                        let mut v = p.clone();
                        v.extend(o.iter().cloned());
                        v
                    })
                })
                .collect();
        }
        out.extend(partial);
        out
    }
    expand(&Word::empty(), d_max, k)
        .into_iter()
        .map(|contexts| ContextTree::new(alphabet.clone(), contexts))
        .collect()
}
