//! Suffix-trie occurrence counts of an observed sequence.
//!
//! For a word ω and t ∈ {n−1, n}, `N_t(ω)` counts the positions
//! k ∈ [|ω|, t] at which ω ends. Empirical measures divide by
//! `n − |ω| + 1`; transition estimates are raw-count ratios
//! `N_n(ωa) / N_{n−1}(ω)`, which sum to one exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tree::{Alphabet, ContextTree, Word};

const NONE: u32 = u32::MAX;

/// Which end of the sample a count refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Horizon {
    /// t = n − 1
    Previous,
    /// t = n
    Full,
}

/// Which trees (and which leaves) are admissible for selection.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize)]
pub enum FeasibilityPolicy {
    /// Every context must have been observed before the last position.
    #[default]
    FeasibleOnly,
    /// Feasible, and every transition count `N_n(ωa)` is 0 or at least the threshold.
    Threshold(f64),
    /// Unobserved leaves are allowed; only observed nodes may be split.
    AllowUnobserved,
}

impl FeasibilityPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            FeasibilityPolicy::Threshold(t) if !(t >= 1.0) => Err(Error::InvalidParameter(
                format!("feasibility threshold must be >= 1, got {t}"),
            )),
            _ => Ok(()),
        }
    }

    /// The (ln n)^4 threshold of the mixing-case oracle inequality.
    pub fn log_quartic(n: usize) -> Self {
        FeasibilityPolicy::Threshold((n as f64).ln().powi(4))
    }
}

/// Handle to a node of the count trie.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);
}

#[derive(Clone, Debug)]
pub struct CountTable {
    alphabet: Alphabet,
    n: usize,
    d_max: usize,
    children: Vec<u32>,
    occurrences: Vec<u64>,
    next: Vec<u64>,
    depth: Vec<u16>,
    tail: Vec<u8>,
}

impl CountTable {
    /// Counts every word of length ≤ `d_max + 1` in one left-to-right pass.
    pub fn new(sequence: &[u8], alphabet: &Alphabet, d_max: usize) -> Result<Self> {
        let n = sequence.len();
        if n <= d_max + 1 {
            return Err(Error::SequenceTooShort { n, min: d_max + 1 });
        }
        let k = alphabet.size();
        if let Some(position) = sequence.iter().position(|&s| s as usize >= k) {
            return Err(Error::AlphabetViolation {
                symbol: '?',
                position,
            });
        }
        let mut table = CountTable {
            alphabet: alphabet.clone(),
            n,
            d_max,
            children: vec![NONE; k],
            occurrences: vec![n as u64 + 1],
            next: vec![0; k],
            depth: vec![0],
            tail: sequence[n.saturating_sub(d_max + 1)..].to_vec(),
        };
        // The empty word also ends before the first symbol.
        table.next[sequence[0] as usize] += 1;
        for end in 0..n {
            let following = sequence.get(end + 1).copied();
            let mut node = 0usize;
            if let Some(a) = following {
                table.next[a as usize] += 1;
            }
            let longest = (d_max + 1).min(end + 1);
            for len in 1..=longest {
                let symbol = sequence[end + 1 - len] as usize;
                node = table.child_or_insert(node, symbol, len);
                table.occurrences[node] += 1;
                if len <= d_max {
                    if let Some(a) = following {
                        table.next[node * k + a as usize] += 1;
                    }
                }
            }
        }
        Ok(table)
    }

    /// Parses one line of symbol characters (surrounding whitespace ignored).
    pub fn from_text(text: &str, alphabet: &Alphabet, d_max: usize) -> Result<Self> {
        let sequence = alphabet.encode(text.trim())?;
        CountTable::new(&sequence, alphabet, d_max)
    }

    fn child_or_insert(&mut self, node: usize, symbol: usize, len: usize) -> usize {
        let k = self.alphabet.size();
        let slot = node * k + symbol;
        if self.children[slot] == NONE {
            let id = self.occurrences.len();
            self.children[slot] = id as u32;
            self.children.extend(std::iter::repeat_n(NONE, k));
            self.next.extend(std::iter::repeat_n(0, k));
            self.occurrences.push(0);
            self.depth.push(len as u16);
        }
        self.children[slot] as usize
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d_max(&self) -> usize {
        self.d_max
    }

    pub fn node_count(&self) -> usize {
        self.occurrences.len()
    }

    /// Node of `word`, if the word occurs in the sample.
    pub fn find(&self, word: &[u8]) -> Option<NodeId> {
        if word.len() > self.d_max + 1 {
            return None;
        }
        let k = self.alphabet.size();
        let mut node = 0usize;
        for &symbol in word.iter().rev() {
            let next = self.children[node * k + symbol as usize];
            if next == NONE {
                return None;
            }
            node = next as usize;
        }
        Some(NodeId(node as u32))
    }

    /// Node of `b·ω` given the node of ω.
    pub fn child(&self, node: NodeId, symbol: u8) -> Option<NodeId> {
        let k = self.alphabet.size();
        match self.children[node.0 as usize * k + symbol as usize] {
            NONE => None,
            id => Some(NodeId(id)),
        }
    }

    pub fn node_depth(&self, node: NodeId) -> usize {
        self.depth[node.0 as usize] as usize
    }

    /// `N_n(ωa)` for every symbol a; only tracked for |ω| ≤ d_max.
    pub fn node_next_counts(&self, node: NodeId) -> &[u64] {
        let k = self.alphabet.size();
        let i = node.0 as usize;
        &self.next[i * k..(i + 1) * k]
    }

    /// `N_{n−1}(ω)` for a node with |ω| ≤ d_max.
    pub fn node_previous_count(&self, node: NodeId) -> u64 {
        self.node_next_counts(node).iter().sum()
    }

    fn ends_sample(&self, word: &[u8]) -> bool {
        word.len() <= self.tail.len() && self.tail.ends_with(word)
    }

    /// `N_t(ω)`; absent words count 0.
    pub fn count(&self, word: &[u8], horizon: Horizon) -> u64 {
        let Some(node) = self.find(word) else {
            if word.is_empty() {
                unreachable!("root always exists");
            }
            return 0;
        };
        let full = self.occurrences[node.0 as usize];
        match horizon {
            Horizon::Full => full,
            Horizon::Previous => full - u64::from(self.ends_sample(word)),
        }
    }

    /// μ̂_t(ω) = N_t(ω)/(n − |ω| + 1), with μ̂_t(@) = 1.
    pub fn empirical_measure(&self, word: &[u8], horizon: Horizon) -> f64 {
        if word.is_empty() {
            return 1.0;
        }
        if word.len() > self.n {
            return 0.0;
        }
        self.count(word, horizon) as f64 / (self.n - word.len() + 1) as f64
    }

    /// `N_n(ωa)` for each a; zeros when ω is absent.
    pub fn next_counts(&self, word: &[u8]) -> Vec<u64> {
        assert!(word.len() <= self.d_max, "transition counts tracked up to d_max");
        match self.find(word) {
            Some(node) => self.node_next_counts(node).to_vec(),
            None => vec![0; self.alphabet.size()],
        }
    }

    /// P̂(·|ω) = N_n(ωa) / N_{n−1}(ω).
    pub fn transition_estimate(&self, word: &[u8]) -> Result<Vec<f64>> {
        let counts = self.next_counts(word);
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::ZeroDenominator(
                self.alphabet.format_word(&Word::from(word)),
            ));
        }
        Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
    }

    /// Plug-in transitions on the contexts of `tree`; `None` for infeasible contexts.
    pub fn plug_in(&self, tree: &ContextTree) -> PlugIn {
        let transitions = tree
            .contexts()
            .iter()
            .map(|c| self.transition_estimate(c.as_slice()).ok())
            .collect();
        PlugIn {
            tree: tree.clone(),
            transitions,
        }
    }

    /// Whether a context may be a leaf of a selected tree under `policy`.
    pub fn leaf_admissible(&self, word: &[u8], policy: FeasibilityPolicy) -> bool {
        let counts = self.next_counts(word);
        let total: u64 = counts.iter().sum();
        match policy {
            FeasibilityPolicy::AllowUnobserved => true,
            FeasibilityPolicy::FeasibleOnly => total > 0,
            FeasibilityPolicy::Threshold(t) => {
                total > 0 && counts.iter().all(|&c| c == 0 || c as f64 >= t)
            }
        }
    }

    /// Whether `tree` is admissible under `policy`.
    ///
    /// In every mode, nodes that were never observed are not split.
    pub fn feasibility_filter(&self, tree: &ContextTree, policy: FeasibilityPolicy) -> bool {
        assert!(tree.depth() <= self.d_max, "tree deeper than the count table");
        let leaves_ok = tree
            .contexts()
            .iter()
            .all(|c| self.leaf_admissible(c.as_slice(), policy));
        leaves_ok
            && tree
                .internal_nodes()
                .iter()
                .all(|w| self.count(w.as_slice(), Horizon::Previous) > 0)
    }

    /// Compares empirical and true word frequencies on the words of `tree`.
    pub fn typicality_report(
        &self,
        source: &impl WordMeasure,
        tree: &ContextTree,
        eta: f64,
    ) -> TypicalityReport {
        let mut words = Vec::new();
        let mut check = |word: Word, horizon: Horizon| {
            let truth = source.word_probability(&word);
            let empirical = self.empirical_measure(word.as_slice(), horizon);
            let (deviation, impossible) = if truth > 0.0 {
                ((empirical - truth).abs() / truth, false)
            } else if empirical > 0.0 {
                (f64::INFINITY, true)
            } else {
                (0.0, false)
            };
            let typical = !impossible
                && (1.0 - eta) * truth <= empirical
                && empirical <= (1.0 + eta) * truth;
            words.push(WordTypicality {
                word: self.alphabet.format_word(&word),
                horizon_is_full: horizon == Horizon::Full,
                truth,
                empirical,
                typical,
                impossible,
                deviation,
            });
        };
        for context in tree.contexts() {
            check(context.clone(), Horizon::Previous);
            for a in 0..self.alphabet.size() as u8 {
                check(context.append(a), Horizon::Full);
            }
        }
        let worst = words.iter().map(|w| w.deviation).fold(0.0, f64::max);
        TypicalityReport {
            eta,
            all_typical: words.iter().all(|w| w.typical),
            worst_relative_deviation: worst,
            words,
        }
    }
}

/// Fitted plug-in transitions of one tree.
#[derive(Clone, Debug)]
pub struct PlugIn {
    pub tree: ContextTree,
    pub transitions: Vec<Option<Vec<f64>>>,
}

impl PlugIn {
    pub fn is_feasible(&self) -> bool {
        self.transitions.iter().all(Option::is_some)
    }
}

/// Stationary probability of finite words.
pub trait WordMeasure {
    fn word_probability(&self, word: &Word) -> f64;
}

#[derive(Clone, Debug, Serialize)]
pub struct WordTypicality {
    pub word: String,
    pub horizon_is_full: bool,
    pub truth: f64,
    pub empirical: f64,
    pub typical: bool,
    pub impossible: bool,
    pub deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TypicalityReport {
    pub eta: f64,
    pub all_typical: bool,
    pub worst_relative_deviation: f64,
    pub words: Vec<WordTypicality>,
}
