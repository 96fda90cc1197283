//! Ground-truth sources: probabilistic context trees, their exact
//! stationary law, renewal sources with truncated-Poisson gaps, and the
//! parametric bootstrap resampler.

use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::counts::{CountTable, WordMeasure};
use crate::error::{Error, Result};
use crate::tree::{Alphabet, ContextTree, TreeJson, Word};

const PROBABILITY_TOLERANCE: f64 = 1e-12;
/// Largest state space the dense stationary solve accepts.
pub const MAX_STATES: usize = 2048;

fn check_probability(p: &[f64], k: usize, what: &str) -> Result<()> {
    if p.len() != k {
        return Err(Error::NotAProbability(format!("{what}: expected {k} entries")));
    }
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::NotAProbability(format!("{what}: negative or non-finite entry")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
        return Err(Error::NotAProbability(format!("{what}: sums to {sum}")));
    }
    Ok(())
}

fn sample_index<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> u8 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i as u8;
        }
    }
    // Rounding left `u` above the cumulative sum: take the last positive entry.
    p.iter().rposition(|&x| x > 0.0).unwrap_or(p.len() - 1) as u8
}

/// A context tree with one next-symbol distribution per context.
#[derive(Clone, Debug)]
pub struct ContextKernel {
    tree: ContextTree,
    transitions: Vec<Vec<f64>>,
}

impl ContextKernel {
    pub fn new(tree: ContextTree, transitions: Vec<Vec<f64>>) -> Result<Self> {
        if transitions.len() != tree.size() {
            return Err(Error::MismatchedContexts);
        }
        let k = tree.alphabet().size();
        for (c, p) in tree.contexts().iter().zip(&transitions) {
            check_probability(p, k, &tree.alphabet().format_word(c))?;
        }
        Ok(ContextKernel { tree, transitions })
    }

    /// Plug-in estimates on `tree`; infeasible contexts back off to their
    /// longest feasible suffix (the root is always feasible).
    pub fn fit(table: &CountTable, tree: &ContextTree) -> Result<Self> {
        let mut transitions = Vec::with_capacity(tree.size());
        for c in tree.contexts() {
            let mut word = c.clone();
            loop {
                match table.transition_estimate(word.as_slice()) {
                    Ok(p) => {
                        transitions.push(p);
                        break;
                    }
                    Err(e) => match word.parent() {
                        Some(parent) => word = parent,
                        None => return Err(e),
                    },
                }
            }
        }
        Ok(ContextKernel {
            tree: tree.clone(),
            transitions,
        })
    }

    pub fn tree(&self) -> &ContextTree {
        &self.tree
    }

    pub fn transitions(&self) -> &[Vec<f64>] {
        &self.transitions
    }

    /// Next-symbol law after `past`, if the past is long enough to decide its context.
    pub fn transition_after(&self, past: &[u8]) -> Option<&[f64]> {
        self.tree
            .context_index_of(past)
            .map(|i| self.transitions[i].as_slice())
    }

    /// Continues `past` for `burn_in` discarded steps and returns the next `n` symbols.
    pub fn simulate_from<R: Rng + ?Sized>(
        &self,
        past: &[u8],
        burn_in: usize,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<u8>> {
        let depth = self.tree.depth();
        if past.len() < depth {
            return Err(Error::InsufficientHistory {
                needed: depth,
                got: past.len(),
            });
        }
        let mut buffer = Vec::with_capacity(depth + burn_in + n);
        buffer.extend_from_slice(&past[past.len() - depth..]);
        for _ in 0..burn_in + n {
            let recent = &buffer[buffer.len() - depth..];
            let index = self
                .tree
                .context_index_of(recent)
                .expect("history covers the tree depth");
            let symbol = sample_index(&self.transitions[index], rng);
            buffer.push(symbol);
        }
        Ok(buffer.split_off(depth + burn_in))
    }
}

/// How a simulation starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    /// Draw the initial state from the exact stationary law.
    Stationary,
    /// Start from the first state in canonical order and discard `m` steps.
    BurnIn(usize),
}

/// A probabilistic context tree together with its stationary law.
///
/// The stationary law lives on the smallest refinement of the tree whose
/// states move deterministically under each emitted symbol.
#[derive(Clone, Debug)]
pub struct SourceModel {
    kernel: ContextKernel,
    states: Vec<Word>,
    state_context: Vec<usize>,
    state_next: Vec<usize>,
    stationary: Vec<f64>,
    context_measure: Vec<f64>,
}

impl SourceModel {
    pub fn new(tree: ContextTree, transitions: Vec<Vec<f64>>) -> Result<Self> {
        let kernel = ContextKernel::new(tree, transitions)?;
        let k = kernel.tree.alphabet().size();
        let states = closure_states(&kernel.tree)?;
        let state_tree = ContextTree::new(kernel.tree.alphabet().clone(), states.clone())?;
        let state_context: Vec<usize> = states
            .iter()
            .map(|s| {
                kernel
                    .tree
                    .context_index_of(s.as_slice())
                    .expect("states refine the tree")
            })
            .collect();
        let mut state_next = Vec::with_capacity(states.len() * k);
        for s in &states {
            for a in 0..k as u8 {
                let next = state_tree
                    .context_index_of(s.append(a).as_slice())
                    .expect("closure is deterministic");
                state_next.push(next);
            }
        }
        let stationary = solve_stationary(&kernel, &state_context, &state_next)?;
        let mut context_measure = vec![0.0; kernel.tree.size()];
        for (s, &c) in state_context.iter().enumerate() {
            context_measure[c] += stationary[s];
        }
        let model = SourceModel {
            kernel,
            states,
            state_context,
            state_next,
            stationary,
            context_measure,
        };
        let residual = model.stationarity_residual();
        if residual > 1e-10 {
            return Err(Error::NotErgodic(format!("stationarity residual {residual:e}")));
        }
        Ok(model)
    }

    pub fn tree(&self) -> &ContextTree {
        &self.kernel.tree
    }

    pub fn kernel(&self) -> &ContextKernel {
        &self.kernel
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.kernel.tree.alphabet()
    }

    /// P(·|ω) for the context at `index`.
    pub fn transition(&self, index: usize) -> &[f64] {
        &self.kernel.transitions[index]
    }

    /// P(·|ω) for any word that extends (or equals) a context.
    pub fn transition_after(&self, past: &[u8]) -> Option<&[f64]> {
        self.kernel.transition_after(past)
    }

    /// μ(ω) for each context, in canonical order.
    pub fn context_measure(&self) -> &[f64] {
        &self.context_measure
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    /// Largest |inflow − mass| over contexts under the induced chain.
    pub fn stationarity_residual(&self) -> f64 {
        let k = self.alphabet().size();
        let mut inflow = vec![0.0; self.states.len()];
        for (s, &mass) in self.stationary.iter().enumerate() {
            let p = &self.kernel.transitions[self.state_context[s]];
            for a in 0..k {
                inflow[self.state_next[s * k + a]] += mass * p[a];
            }
        }
        let mut by_context_in = vec![0.0; self.context_measure.len()];
        for (s, &c) in self.state_context.iter().enumerate() {
            by_context_in[c] += inflow[s];
        }
        by_context_in
            .iter()
            .zip(&self.context_measure)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Stationary probability that the next |ω| symbols spell ω.
    pub fn word_probability(&self, word: &Word) -> f64 {
        let k = self.alphabet().size();
        let mut total = 0.0;
        for (start, &mass) in self.stationary.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let mut p = mass;
            let mut s = start;
            for &a in word.as_slice() {
                p *= self.kernel.transitions[self.state_context[s]][a as usize];
                if p == 0.0 {
                    break;
                }
                s = self.state_next[s * k + a as usize];
            }
            total += p;
        }
        total
    }

    pub fn simulate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, init: Init) -> Vec<u8> {
        let k = self.alphabet().size();
        let (mut state, skip) = match init {
            Init::Stationary => (sample_index_usize(&self.stationary, rng), 0),
            Init::BurnIn(m) => (0, m),
        };
        let mut out = Vec::with_capacity(n);
        for step in 0..skip + n {
            let p = &self.kernel.transitions[self.state_context[state]];
            let a = sample_index(p, rng);
            state = self.state_next[state * k + a as usize];
            if step >= skip {
                out.push(a);
            }
        }
        out
    }

    pub fn to_json(&self) -> SourceJson {
        let tree = self.tree().to_json();
        SourceJson {
            alphabet: tree.alphabet,
            contexts: tree.contexts,
            transitions: self.kernel.transitions.clone(),
            context_measure: Some(self.context_measure.clone()),
        }
    }

    /// Builds a model from JSON; a supplied `context_measure` must match the
    /// computed stationary law.
    pub fn from_json(json: &SourceJson) -> Result<Self> {
        let tree = ContextTree::from_json(&TreeJson {
            alphabet: json.alphabet.clone(),
            contexts: json.contexts.clone(),
        })?;
        // Contexts are reordered canonically; carry the transitions along.
        let alphabet = tree.alphabet().clone();
        let mut transitions = vec![Vec::new(); tree.size()];
        for (text, p) in json.contexts.iter().zip(&json.transitions) {
            let index = tree
                .position(&alphabet.parse_word(text)?)
                .ok_or(Error::MismatchedContexts)?;
            transitions[index] = p.clone();
        }
        if json.transitions.len() != json.contexts.len() {
            return Err(Error::MismatchedContexts);
        }
        let model = SourceModel::new(tree, transitions)?;
        if let Some(given) = &json.context_measure {
            for (text, &mass) in json.contexts.iter().zip(given) {
                let index = model.tree().position(&alphabet.parse_word(text)?).unwrap();
                if (model.context_measure[index] - mass).abs() > 1e-10 {
                    return Err(Error::InvalidParameter(format!(
                        "context_measure of {text} is {mass}, stationary law gives {}",
                        model.context_measure[index]
                    )));
                }
            }
        }
        Ok(model)
    }
}

impl WordMeasure for SourceModel {
    fn word_probability(&self, word: &Word) -> f64 {
        SourceModel::word_probability(self, word)
    }
}

/// Tree JSON extended with transitions and an optional stationary context law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceJson {
    pub alphabet: String,
    pub contexts: Vec<String>,
    pub transitions: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_measure: Option<Vec<f64>>,
}

fn sample_index_usize<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    p.iter().rposition(|&x| x > 0.0).unwrap_or(p.len() - 1)
}

/// Refines the tree until every (state, symbol) pair leads to a unique state.
fn closure_states(tree: &ContextTree) -> Result<Vec<Word>> {
    let alphabet = tree.alphabet().clone();
    let k = alphabet.size();
    let mut states: BTreeSet<Word> = tree.contexts().iter().cloned().collect();
    loop {
        let current = ContextTree::new(alphabet.clone(), states.iter().cloned().collect())?;
        let to_split: Vec<Word> = states
            .iter()
            .filter(|s| {
                (0..k as u8).any(|a| current.context_index_of(s.append(a).as_slice()).is_none())
            })
            .cloned()
            .collect();
        if to_split.is_empty() {
            return Ok(states.into_iter().collect());
        }
        for s in to_split {
            states.remove(&s);
            for b in 0..k as u8 {
                states.insert(s.prepend(b));
            }
        }
        if states.len() > MAX_STATES {
            return Err(Error::InvalidParameter(format!(
                "stationary state space exceeds {MAX_STATES} states"
            )));
        }
    }
}

fn solve_stationary(
    kernel: &ContextKernel,
    state_context: &[usize],
    state_next: &[usize],
) -> Result<Vec<f64>> {
    let s = state_context.len();
    let k = kernel.tree.alphabet().size();
    // (Tᵀ − I) π = 0 with the last equation replaced by Σ π = 1.
    let mut m = DMatrix::<f64>::zeros(s, s);
    for from in 0..s {
        let p = &kernel.transitions[state_context[from]];
        for a in 0..k {
            m[(state_next[from * k + a], from)] += p[a];
        }
        m[(from, from)] -= 1.0;
    }
    for j in 0..s {
        m[(s - 1, j)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(s);
    rhs[s - 1] = 1.0;
    let solution = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NotErgodic("singular stationary system".into()))?;
    if solution.iter().any(|&x| !x.is_finite() || x < -1e-9) {
        return Err(Error::NotErgodic("stationary solution is not a distribution".into()));
    }
    let mut pi: Vec<f64> = solution.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    Ok(pi)
}

/// Parameters of the truncated-Poisson renewal family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewalParams {
    pub lambda: f64,
    /// Largest number of zeros between two consecutive ones.
    pub k_o: usize,
}

impl Default for RenewalParams {
    fn default() -> Self {
        RenewalParams {
            lambda: 3.0,
            k_o: 14,
        }
    }
}

impl RenewalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if self.k_o < 1 {
            return Err(Error::InvalidParameter("k_o must be >= 1".into()));
        }
        Ok(())
    }
}

/// Law of the gap T = 1 + Z with Z ~ Poisson(λ) conditioned on Z ≤ K_o.
///
/// Entry `t − 1` holds P(T = t) for t = 1..=K_o+1.
pub fn truncated_poisson_pmf(params: &RenewalParams) -> Result<Vec<f64>> {
    params.validate()?;
    let mut weights = Vec::with_capacity(params.k_o + 1);
    let mut term = (-params.lambda).exp();
    for z in 0..=params.k_o {
        if z > 0 {
            term *= params.lambda / z as f64;
        }
        weights.push(term);
    }
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Hazards h(k) = P(T = k+1 | T > k) for k = 0..K, with h(K) = 1.
pub fn hazard_rates(pmf: &[f64]) -> Result<Vec<f64>> {
    if pmf.is_empty() {
        return Err(Error::InvalidParameter("empty gap law".into()));
    }
    let mut remaining: f64 = pmf.iter().sum();
    let last = pmf.len() - 1;
    let mut hazards = Vec::with_capacity(pmf.len());
    for (k, &q) in pmf.iter().enumerate() {
        if k == last {
            hazards.push(1.0);
            break;
        }
        if remaining <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gap law has no mass beyond {k} zeros"
            )));
        }
        hazards.push((q / remaining).clamp(0.0, 1.0));
        remaining -= q;
    }
    if remaining <= 0.0 && pmf[last] == 0.0 {
        return Err(Error::InvalidParameter(format!(
            "gap law has no mass at {last} zeros"
        )));
    }
    Ok(hazards)
}

/// Inverse of [`hazard_rates`].
pub fn gap_pmf_from_hazards(hazards: &[f64]) -> Vec<f64> {
    let mut survival = 1.0;
    hazards
        .iter()
        .map(|&h| {
            let q = survival * h;
            survival *= 1.0 - h;
            q
        })
        .collect()
}

/// A binary renewal source as a probabilistic context tree.
#[derive(Clone, Debug)]
pub struct RenewalModel {
    gap_pmf: Vec<f64>,
    hazards: Vec<f64>,
    source: SourceModel,
}

impl RenewalModel {
    /// Renewal source with gap law `pmf` (entry `t − 1` is P(T = t)).
    pub fn from_gap_pmf(pmf: Vec<f64>) -> Result<Self> {
        check_probability(&pmf, pmf.len(), "gap law")?;
        let hazards = hazard_rates(&pmf)?;
        let max_zeros = pmf.len() - 1;
        let tree = ContextTree::renewal(max_zeros);
        let mut transitions = vec![Vec::new(); tree.size()];
        for (zeros, &h) in hazards.iter().enumerate() {
            let index = tree.position(&renewal_context(zeros)).expect("renewal context");
            transitions[index] = vec![1.0 - h, h];
        }
        // The all-zero leaf has null mass; emit a one by convention.
        let all_zero = tree
            .position(&Word::repeat(0, max_zeros + 1))
            .expect("renewal context");
        transitions[all_zero] = vec![0.0, 1.0];
        let source = SourceModel::new(tree, transitions)?;
        Ok(RenewalModel {
            gap_pmf: pmf,
            hazards,
            source,
        })
    }

    pub fn gap_pmf(&self) -> &[f64] {
        &self.gap_pmf
    }

    pub fn hazards(&self) -> &[f64] {
        &self.hazards
    }

    pub fn source(&self) -> &SourceModel {
        &self.source
    }

    /// K_o: the largest number of zeros between two ones.
    pub fn max_zeros(&self) -> usize {
        self.gap_pmf.len() - 1
    }

    /// E[T].
    pub fn mean_gap(&self) -> f64 {
        self.gap_pmf
            .iter()
            .enumerate()
            .map(|(i, q)| (i + 1) as f64 * q)
            .sum()
    }

    /// Closed form μ(1 0^k) = P(T > k) / E[T].
    pub fn context_mass_closed_form(&self, zeros: usize) -> f64 {
        let tail: f64 = self.gap_pmf[zeros.min(self.gap_pmf.len())..].iter().sum();
        tail / self.mean_gap()
    }
}

/// The word `1 0^zeros`.
pub fn renewal_context(zeros: usize) -> Word {
    let mut v = vec![1u8];
    v.extend(std::iter::repeat_n(0u8, zeros));
    Word::new(v)
}

pub fn build_renewal_model(params: &RenewalParams) -> Result<RenewalModel> {
    RenewalModel::from_gap_pmf(truncated_poisson_pmf(params)?)
}

/// Simulates `n` symbols from a fitted kernel, starting from the observed
/// `window` and discarding `d(τ)` burn-in steps.
pub fn bootstrap_resample<R: Rng + ?Sized>(
    fitted: &ContextKernel,
    window: &[u8],
    n: usize,
    rng: &mut R,
) -> Result<Vec<u8>> {
    let depth = fitted.tree().depth();
    fitted.simulate_from(window, depth, n, rng)
}

/// Lengths of the runs of zeros that are closed by a one, in order.
pub fn gap_lengths(sequence: &[u8]) -> Vec<usize> {
    let mut gaps = Vec::new();
    let mut seen_one = false;
    let mut run = 0usize;
    for &s in sequence {
        if s == 1 {
            if seen_one {
                gaps.push(run + 1);
            }
            seen_one = true;
            run = 0;
        } else {
            run += 1;
        }
    }
    gaps
}

/// Occurrences of each symbol.
pub fn symbol_frequencies(sequence: &[u8], k: usize) -> Vec<usize> {
    let mut counts = vec![0; k];
    for &s in sequence {
        counts[s as usize] += 1;
    }
    counts
}

/// Maps each word to its number of occurrences, for quick frequency checks.
pub fn word_histogram(sequence: &[u8], len: usize) -> HashMap<Vec<u8>, usize> {
    let mut map = HashMap::new();
    for w in sequence.windows(len) {
        *map.entry(w.to_vec()).or_insert(0) += 1;
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn default_model() -> RenewalModel {
        build_renewal_model(&RenewalParams::default()).unwrap()
    }

    #[test]
    fn truncated_poisson_values() {
        let pmf = truncated_poisson_pmf(&RenewalParams::default()).unwrap();
        assert_eq!(pmf.len(), 15);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // e^{-3} / P(Z ≤ 14)
        let mass: f64 = (0..=14u32)
            .map(|z| (-3.0f64).exp() * 3f64.powi(z as i32) / (1..=z).map(f64::from).product::<f64>())
            .sum();
        assert!((pmf[0] - (-3.0f64).exp() / mass).abs() < 1e-15);
        assert!((pmf[0] - 0.0497871).abs() < 1e-7);
        let mean: f64 = pmf.iter().enumerate().map(|(i, q)| (i + 1) as f64 * q).sum();
        assert!((mean - 4.0).abs() < 1e-4);
        assert!(truncated_poisson_pmf(&RenewalParams { lambda: 0.0, k_o: 3 }).is_err());
        assert!(truncated_poisson_pmf(&RenewalParams { lambda: 1.0, k_o: 0 }).is_err());
    }

    #[test]
    fn hazards_and_round_trip() {
        let model = default_model();
        let h = model.hazards();
        assert!((h[0] - 0.0497871).abs() < 1e-7);
        assert_eq!(h[14], 1.0);
        assert!(h.iter().all(|&x| x > 0.0 && x <= 1.0));
        let back = gap_pmf_from_hazards(h);
        for (a, b) in back.iter().zip(model.gap_pmf()) {
            assert!((a - b).abs() < 1e-12);
        }
        // Truncated geometric: h(k) = p r^k / (r^k - r^m).
        let (p, m): (f64, i32) = (0.3, 30);
        let r = 1.0 - p;
        let z = 1.0 - r.powi(m);
        let geometric: Vec<f64> = (0..m).map(|k| p * r.powi(k) / z).collect();
        let h = hazard_rates(&geometric).unwrap();
        for (k, &x) in h[..29].iter().enumerate() {
            let k = k as i32;
            let exact = p * r.powi(k) / (r.powi(k) - r.powi(m));
            assert!((x - exact).abs() < 1e-9, "k={k}");
        }
        assert!(hazard_rates(&[0.5, 0.5, 0.0, 0.0]).is_err());
    }

    #[test]
    fn renewal_stationary_law() {
        let model = default_model();
        let source = model.source();
        assert!(source.stationarity_residual() < 1e-10);
        assert_eq!(source.state_count(), 16);
        let tree = source.tree();
        for zeros in 0..=14 {
            let i = tree.position(&renewal_context(zeros)).unwrap();
            let closed = model.context_mass_closed_form(zeros);
            assert!((source.context_measure()[i] - closed).abs() < 1e-12, "k={zeros}");
        }
        let all_zero = tree.position(&Word::repeat(0, 15)).unwrap();
        assert_eq!(source.context_measure()[all_zero], 0.0);
        let ones = source.word_probability(&Word::new(vec![1]));
        assert!((ones - 1.0 / model.mean_gap()).abs() < 1e-12);
        assert!((ones - 0.25).abs() < 1e-5);
        let total: f64 = source.context_measure().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn word_probabilities_are_consistent() {
        let source = default_model().source().clone();
        for len in 0..6usize {
            let mut total = 0.0;
            for code in 0..(1u32 << len) {
                let w: Vec<u8> = (0..len).map(|i| ((code >> i) & 1) as u8).collect();
                let w = Word::new(w);
                let p = source.word_probability(&w);
                let ext: f64 = (0..2).map(|a| source.word_probability(&w.append(a))).sum();
                assert!((p - ext).abs() < 1e-14);
                let left: f64 = (0..2).map(|b| source.word_probability(&w.prepend(b))).sum();
                assert!((p - left).abs() < 1e-14);
                total += p;
            }
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn generic_closure_refines_non_markov_trees() {
        // After context "0", a 1 leaves "01", shorter than "001" and "101".
        let tree: ContextTree = "alphabet=01\n0\n001\n101\n11".parse().unwrap();
        let source = SourceModel::new(
            tree,
            vec![vec![0.3, 0.7], vec![0.6, 0.4], vec![0.1, 0.9], vec![0.2, 0.8]],
        )
        .unwrap();
        assert!(source.stationarity_residual() < 1e-12);
        assert!(source.state_count() > 3);
        // Long-run frequencies from a stationary start.
        let mut rng = stream(1, 0, Purpose::Simulation, 0);
        let x = source.simulate(400_000, &mut rng, Init::Stationary);
        let hist = word_histogram(&x, 2);
        let freq = hist[&vec![0u8, 1]] as f64 / (x.len() - 1) as f64;
        let exact = source.word_probability(&Word::new(vec![0, 1]));
        assert!((freq - exact).abs() < 5e-3, "{freq} vs {exact}");
    }

    #[test]
    fn deterministic_renewal_is_periodic() {
        let model = RenewalModel::from_gap_pmf(vec![0.0, 0.0, 1.0]).unwrap();
        let mut rng = stream(3, 0, Purpose::Simulation, 0);
        let x = model.source().simulate(30, &mut rng, Init::BurnIn(5));
        let text: String = x.iter().map(|s| char::from(b'0' + s)).collect();
        assert!(text.contains("100100100"), "{text}");
        assert_eq!(gap_lengths(&x).iter().copied().max(), Some(3));
    }

    #[test]
    fn simulation_is_deterministic_per_seed() {
        let source = default_model().source().clone();
        let a = source.simulate(1000, &mut stream(9, 2, Purpose::Simulation, 0), Init::Stationary);
        let b = source.simulate(1000, &mut stream(9, 2, Purpose::Simulation, 0), Init::Stationary);
        let c = source.simulate(1000, &mut stream(9, 3, Purpose::Simulation, 0), Init::Stationary);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn json_round_trip_and_checks() {
        let source = default_model().source().clone();
        let json = serde_json::to_string(&source.to_json()).unwrap();
        let parsed: SourceJson = serde_json::from_str(&json).unwrap();
        let back = SourceModel::from_json(&parsed).unwrap();
        assert_eq!(back.tree(), source.tree());
        let mut wrong = parsed.clone();
        wrong.context_measure.as_mut().unwrap()[1] += 0.01;
        assert!(SourceModel::from_json(&wrong).is_err());
        let mut bad = parsed;
        bad.transitions[0] = vec![0.5, 0.6];
        assert!(matches!(SourceModel::from_json(&bad), Err(Error::NotAProbability(_))));
    }

    #[test]
    fn fitted_kernel_backs_off_and_resamples() {
        let alphabet = Alphabet::binary();
        let x = alphabet.encode(&"001".repeat(40)).unwrap();
        let table = CountTable::new(&x, &alphabet, 3).unwrap();
        let tree = ContextTree::full(alphabet.clone(), 2).unwrap();
        let fitted = ContextKernel::fit(&table, &tree).unwrap();
        // "11" never occurs: backs off to "1".
        let i11 = tree.position(&Word::new(vec![1, 1])).unwrap();
        let i01 = tree.position(&Word::new(vec![0, 1])).unwrap();
        assert_eq!(fitted.transitions()[i11], fitted.transitions()[i01]);
        // The fitted chain is deterministic, so is the bootstrap.
        let mut rng = stream(5, 0, Purpose::Bootstrap, 0);
        let y = bootstrap_resample(&fitted, &x[..2], 60, &mut rng).unwrap();
        let mut rng = stream(6, 0, Purpose::Bootstrap, 0);
        let z = bootstrap_resample(&fitted, &x[..2], 60, &mut rng).unwrap();
        assert_eq!(y, z);
        assert!(alphabet.decode(&y).contains("001001"));
        assert!(bootstrap_resample(&fitted, &x[..1], 10, &mut rng).is_err());
    }
}
