//! Penalized-criterion tree selection.
//!
//! The criterion of a tree τ is
//! `Σ_{ω∈τ} μ̂_{n−1}(ω) H(P̂(·|ω)) + constant · Σ_{ω∈τ} shape(ω)`.
//! Both parts are additive over leaves, so the exact minimizer over all
//! complete subtrees comes out of one bottom-up pass over the count trie.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::counts::{CountTable, FeasibilityPolicy, Horizon};
use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::risk::{count_entropy, kl_vector};
use crate::rng::{stream, Purpose};
use crate::sources::{bootstrap_resample, ContextKernel};
use crate::tree::{enumerate_complete_subtrees, ContextTree, TreeJson, Word};

/// Criterion differences below this are ties, resolved toward the smaller tree.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Per-leaf penalty weights; missing words weigh 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LeafTable(BTreeMap<Word, f64>);

impl LeafTable {
    pub fn new(entries: BTreeMap<Word, f64>) -> Result<Self> {
        if let Some((w, v)) = entries.iter().find(|(_, v)| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "leaf weight of {w:?} must be finite and nonnegative, got {v}"
            )));
        }
        Ok(LeafTable(entries))
    }

    pub fn get(&self, word: &Word) -> f64 {
        self.0.get(word).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> &BTreeMap<Word, f64> {
        &self.0
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        LeafTable::new(self.0.iter().map(|(w, v)| (w.clone(), v * factor)).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PenaltyShape {
    /// |A| ln(n) / n per leaf.
    Bic,
    /// (|A| − 1) / n per leaf.
    Aic,
    PerLeaf(LeafTable),
}

impl PenaltyShape {
    pub fn leaf(&self, word: &Word, alphabet_size: usize, n: usize) -> f64 {
        let n = n as f64;
        match self {
            PenaltyShape::Bic => alphabet_size as f64 * n.ln() / n,
            PenaltyShape::Aic => (alphabet_size as f64 - 1.0) / n,
            PenaltyShape::PerLeaf(table) => table.get(word),
        }
    }

    /// Σ_{ω∈τ} shape(ω): the complexity of a tree.
    pub fn complexity(&self, tree: &ContextTree, n: usize) -> f64 {
        let k = tree.alphabet().size();
        tree.contexts().iter().map(|w| self.leaf(w, k, n)).sum()
    }

    /// Every leaf weighs the same, so complexity is proportional to size.
    pub fn is_uniform(&self) -> bool {
        !matches!(self, PenaltyShape::PerLeaf(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            PenaltyShape::Bic => "bic",
            PenaltyShape::Aic => "aic",
            PenaltyShape::PerLeaf(_) => "per-leaf",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Penalty {
    pub shape: PenaltyShape,
    pub constant: f64,
}

impl Penalty {
    pub fn new(shape: PenaltyShape, constant: f64) -> Result<Self> {
        if !(constant >= 0.0) || !constant.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "penalty constant must be finite and nonnegative, got {constant}"
            )));
        }
        Ok(Penalty { shape, constant })
    }

    pub fn bic(constant: f64) -> Self {
        Penalty::new(PenaltyShape::Bic, constant).expect("valid constant")
    }

    pub fn aic() -> Self {
        Penalty::new(PenaltyShape::Aic, 1.0).expect("valid constant")
    }
}

/// pen(τ) = constant · Σ_{ω∈τ} shape(ω).
pub fn penalty_value(penalty: &Penalty, tree: &ContextTree, n: usize) -> f64 {
    penalty.constant * penalty.shape.complexity(tree, n)
}

/// The family of trees searched.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Universe {
    /// Every complete subtree of depth at most `d_max`.
    #[default]
    Complete,
    /// The trees `{1 0^j : j ≤ k} ∪ {0^(k+1)}`: the root is always split and
    /// only words made of symbol 0 may be split further.
    RenewalFamily,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SelectOptions {
    pub d_max: usize,
    pub policy: FeasibilityPolicy,
    pub universe: Universe,
}

impl SelectOptions {
    pub fn new(d_max: usize) -> Self {
        SelectOptions {
            d_max,
            policy: FeasibilityPolicy::default(),
            universe: Universe::default(),
        }
    }

    pub fn renewal(d_max: usize) -> Self {
        SelectOptions {
            universe: Universe::RenewalFamily,
            ..SelectOptions::new(d_max)
        }
    }
}

fn serialize_tree<S: Serializer>(tree: &ContextTree, s: S) -> std::result::Result<S::Ok, S::Error> {
    tree.to_json().serialize(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LeafDiagnostics {
    pub context: String,
    /// μ̂_{n−1}(ω)
    pub weight: f64,
    /// μ̂_{n−1}(ω) · H(P̂(·|ω))
    pub entropy: f64,
    pub shape: f64,
    pub penalty: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionResult {
    #[serde(serialize_with = "serialize_tree")]
    pub tree: ContextTree,
    pub constant: f64,
    pub criterion: f64,
    pub entropy_term: f64,
    pub penalty_value: f64,
    /// Σ shape(ω) over the selected leaves.
    pub complexity: f64,
    pub leaves: Vec<LeafDiagnostics>,
}

const NO_CHILD: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Node {
    word: Word,
    /// μ̂_{n−1}(ω) H(P̂(·|ω)); 0 for unobserved words.
    entropy: f64,
    weight: f64,
    admissible: bool,
    shape: f64,
    first_child: u32,
}

/// The universe of one sample, prepared for repeated solves.
///
/// Nodes are stored breadth first, siblings contiguous, so every child
/// index exceeds its parent's.
#[derive(Clone, Debug)]
pub struct Selector<'a> {
    table: &'a CountTable,
    options: SelectOptions,
    shape: PenaltyShape,
    nodes: Vec<Node>,
}

impl<'a> Selector<'a> {
    pub fn new(table: &'a CountTable, shape: PenaltyShape, options: SelectOptions) -> Result<Self> {
        options.policy.validate()?;
        if options.d_max > table.d_max() {
            return Err(Error::InvalidParameter(format!(
                "d_max {} exceeds the count table depth {}",
                options.d_max,
                table.d_max()
            )));
        }
        let k = table.alphabet().size();
        let n = table.n();
        let make = |word: Word| {
            let counts = table.next_counts(word.as_slice());
            let observed = counts.iter().any(|&c| c > 0);
            let weight = if observed {
                table.empirical_measure(word.as_slice(), Horizon::Previous)
            } else {
                0.0
            };
            let entropy = if observed {
                weight * count_entropy(&counts)
            } else {
                0.0
            };
            Node {
                admissible: table.leaf_admissible(word.as_slice(), options.policy),
                shape: shape.leaf(&word, k, n),
                weight,
                entropy,
                word,
                first_child: NO_CHILD,
            }
        };
        let mut root = make(Word::empty());
        if options.universe == Universe::RenewalFamily {
            root.admissible = false;
        }
        let mut nodes = vec![root];
        let mut i = 0;
        while i < nodes.len() {
            let word = &nodes[i].word;
            let splittable = word.len() < options.d_max
                && table.count(word.as_slice(), Horizon::Previous) > 0
                && match options.universe {
                    Universe::Complete => true,
                    Universe::RenewalFamily => word.as_slice().iter().all(|&s| s == 0),
                };
            if splittable {
                let children: Vec<Word> = (0..k as u8).map(|b| word.prepend(b)).collect();
                nodes[i].first_child = nodes.len() as u32;
                nodes.extend(children.into_iter().map(make));
            }
            i += 1;
        }
        Ok(Selector {
            table,
            options,
            shape,
            nodes,
        })
    }

    /// The same universe under another penalty shape.
    pub fn with_shape(&self, shape: PenaltyShape) -> Selector<'a> {
        let k = self.table.alphabet().size();
        let n = self.table.n();
        let mut nodes = self.nodes.clone();
        for node in &mut nodes {
            node.shape = shape.leaf(&node.word, k, n);
        }
        Selector {
            table: self.table,
            options: self.options,
            shape,
            nodes,
        }
    }

    pub fn table(&self) -> &'a CountTable {
        self.table
    }

    pub fn options(&self) -> &SelectOptions {
        &self.options
    }

    pub fn shape(&self) -> &PenaltyShape {
        &self.shape
    }

    /// Every word the selection can use as a leaf or split.
    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.nodes.iter().map(|n| &n.word)
    }

    fn children(&self, i: usize) -> Option<std::ops::Range<usize>> {
        let first = self.nodes[i].first_child;
        (first != NO_CHILD).then(|| {
            let f = first as usize;
            f..f + self.table.alphabet().size()
        })
    }

    fn leaf_cost(&self, i: usize, constant: f64) -> f64 {
        let node = &self.nodes[i];
        if node.admissible {
            node.entropy + constant * node.shape
        } else {
            f64::INFINITY
        }
    }

    /// The exact minimizer for one penalty constant.
    pub fn solve(&self, constant: f64) -> Result<SelectionResult> {
        if !(constant >= 0.0) || !constant.is_finite() {
            return Err(Error::InvalidParameter(format!("penalty constant {constant}")));
        }
        let mut cost = vec![0.0; self.nodes.len()];
        let mut split = vec![false; self.nodes.len()];
        for i in (0..self.nodes.len()).rev() {
            let leaf = self.leaf_cost(i, constant);
            cost[i] = leaf;
            if let Some(children) = self.children(i) {
                let mut sum = 0.0;
                for c in children {
                    sum += cost[c];
                }
                if sum < leaf - TIE_TOLERANCE || (leaf.is_infinite() && sum.is_finite()) {
                    cost[i] = sum;
                    split[i] = true;
                }
            }
        }
        if cost[0].is_infinite() {
            return Err(Error::NoAdmissibleTree);
        }
        let mut leaves = Vec::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if split[i] {
                stack.extend(self.children(i).expect("split nodes have children").rev());
            } else {
                leaves.push(i);
            }
        }
        let tree = ContextTree::new(
            self.table.alphabet().clone(),
            leaves.iter().map(|&i| self.nodes[i].word.clone()).collect(),
        )?;
        Ok(self.result(tree, cost[0], constant))
    }

    fn result(&self, tree: ContextTree, criterion: f64, constant: f64) -> SelectionResult {
        let alphabet = self.table.alphabet();
        let by_word: BTreeMap<&Word, &Node> = self.nodes.iter().map(|n| (&n.word, n)).collect();
        let mut entropy_term = 0.0;
        let mut complexity = 0.0;
        let leaves = tree
            .contexts()
            .iter()
            .map(|c| {
                let node = by_word[c];
                entropy_term += node.entropy;
                complexity += node.shape;
                LeafDiagnostics {
                    context: alphabet.format_word(c),
                    weight: node.weight,
                    entropy: node.entropy,
                    shape: node.shape,
                    penalty: constant * node.shape,
                }
            })
            .collect();
        SelectionResult {
            tree,
            constant,
            criterion,
            entropy_term,
            penalty_value: constant * complexity,
            complexity,
            leaves,
        }
    }

    /// Criterion of `tree`, or +∞ when it lies outside the admissible universe.
    ///
    /// Sums in the same order as [`Selector::solve`], so both agree bit for bit.
    pub fn evaluate(&self, tree: &ContextTree, constant: f64) -> Result<f64> {
        if tree.alphabet() != self.table.alphabet() {
            return Err(Error::AlphabetMismatch);
        }
        Ok(self.evaluate_node(0, tree, constant))
    }

    fn evaluate_node(&self, i: usize, tree: &ContextTree, constant: f64) -> f64 {
        let word = &self.nodes[i].word;
        if tree.position(word).is_some() {
            return self.leaf_cost(i, constant);
        }
        match self.children(i) {
            Some(children) if tree.has_extension(word) => {
                let mut sum = 0.0;
                for c in children {
                    sum += self.evaluate_node(c, tree, constant);
                }
                sum
            }
            _ => f64::INFINITY,
        }
    }

    /// The best of `candidates`; near-ties go to the smaller tree, then the earlier one.
    pub fn select_among(&self, candidates: &[ContextTree], constant: f64) -> Result<SelectionResult> {
        let mut best: Option<(f64, &ContextTree)> = None;
        for tree in candidates {
            let value = self.evaluate(tree, constant)?;
            if value.is_infinite() {
                continue;
            }
            let better = match best {
                None => true,
                Some((b, t)) => {
                    value < b - TIE_TOLERANCE
                        || ((value - b).abs() <= TIE_TOLERANCE && tree.size() < t.size())
                }
            };
            if better {
                best = Some((value, tree));
            }
        }
        let (value, tree) = best.ok_or(Error::NoAdmissibleTree)?;
        Ok(self.result(tree.clone(), value, constant))
    }

    /// The tree splitting every universe node whose children are all admissible leaves.
    pub fn maximal_tree(&self) -> Result<ContextTree> {
        let mut leaves = Vec::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            match self.children(i) {
                Some(children) if children.clone().all(|c| self.nodes[c].admissible) => {
                    stack.extend(children.rev())
                }
                _ => leaves.push(self.nodes[i].word.clone()),
            }
        }
        ContextTree::new(self.table.alphabet().clone(), leaves)
    }
}

/// Exact minimizer over the universe of `options`.
pub fn prune_select(table: &CountTable, penalty: &Penalty, options: SelectOptions) -> Result<SelectionResult> {
    Selector::new(table, penalty.shape.clone(), options)?.solve(penalty.constant)
}

/// Exhaustive minimizer over every enumerated complete tree of the universe.
pub fn brute_force_select(
    table: &CountTable,
    penalty: &Penalty,
    options: SelectOptions,
) -> Result<SelectionResult> {
    let selector = Selector::new(table, penalty.shape.clone(), options)?;
    let trees = enumerate_complete_subtrees(table.alphabet(), options.d_max)?;
    selector.select_among(&trees, penalty.constant)
}

/// Complexity and size of τ̂(L) along a grid of constants.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopePath {
    pub grid: Vec<f64>,
    pub complexities: Vec<f64>,
    pub sizes: Vec<usize>,
    #[serde(serialize_with = "serialize_trees")]
    pub trees: Vec<ContextTree>,
}

fn serialize_trees<S: Serializer>(trees: &[ContextTree], s: S) -> std::result::Result<S::Ok, S::Error> {
    let json: Vec<TreeJson> = trees.iter().map(ContextTree::to_json).collect();
    json.serialize(s)
}

impl SlopePath {
    /// Distinct selected trees, in grid order.
    pub fn distinct_trees(&self) -> Vec<ContextTree> {
        let mut out: Vec<ContextTree> = Vec::new();
        for t in &self.trees {
            if !out.contains(t) {
                out.push(t.clone());
            }
        }
        out
    }
}

/// `n` geometrically spaced points from `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() || n < 2 {
        return Err(Error::InvalidParameter(format!("grid {lo}:{hi}:{n}")));
    }
    let ratio = (hi / lo).ln();
    let mut grid: Vec<f64> = (0..n)
        .map(|i| lo * (ratio * i as f64 / (n - 1) as f64).exp())
        .collect();
    grid[0] = lo;
    grid[n - 1] = hi;
    Ok(grid)
}

/// The 60-point geometric grid over [0.05, 8].
pub fn default_slope_grid() -> Vec<f64> {
    geometric_grid(0.05, 8.0, 60).expect("valid default grid")
}

/// Checks that complexities never increase along the path, and sizes too
/// when `check_sizes` is set.
///
/// Sizes are only guaranteed monotone for uniform shapes: a per-leaf shape
/// can make a larger tree cheaper than a smaller one.
pub fn check_path_monotone(complexities: &[f64], sizes: &[usize], check_sizes: bool) -> Result<()> {
    for i in 1..sizes.len() {
        if check_sizes && sizes[i] > sizes[i - 1] {
            return Err(Error::PathNotMonotone {
                index: i,
                before: sizes[i - 1],
                after: sizes[i],
            });
        }
        let scale = complexities[i - 1].abs().max(1.0);
        if complexities[i] > complexities[i - 1] + 1e-9 * scale {
            return Err(Error::ComplexityNotMonotone {
                index: i,
                before: complexities[i - 1],
                after: complexities[i],
            });
        }
    }
    Ok(())
}

/// Selects τ̂(L) at every grid point and checks the path is monotone.
pub fn penalty_path(selector: &Selector<'_>, grid: &[f64], execution: Execution) -> Result<SlopePath> {
    if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(
            "grid must be positive and strictly increasing".into(),
        ));
    }
    let results = map_indexed(grid.len(), execution, |i| selector.solve(grid[i]));
    let mut complexities = Vec::with_capacity(grid.len());
    let mut sizes = Vec::with_capacity(grid.len());
    let mut trees = Vec::with_capacity(grid.len());
    for r in results {
        let r = r?;
        complexities.push(r.complexity);
        sizes.push(r.tree.size());
        trees.push(r.tree);
    }
    check_path_monotone(&complexities, &sizes, selector.shape().is_uniform())?;
    Ok(SlopePath {
        grid: grid.to_vec(),
        complexities,
        sizes,
        trees,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeCalibration {
    pub l_min: f64,
    pub l_final: f64,
    /// Grid index of `l_min`.
    pub jump_index: usize,
    pub jump: f64,
}

/// How SA2 reads the jump off a penalty path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SlopeRule {
    /// Largest one-step drop `C(L_{i−1}) − C(L_i)` of the complexity.
    #[default]
    Drop,
    /// Most negative difference quotient of `L ↦ L·C(L)`.
    Derivative,
}

impl std::str::FromStr for SlopeRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drop" => Ok(SlopeRule::Drop),
            "derivative" => Ok(SlopeRule::Derivative),
            _ => Err(Error::InvalidParameter(format!("unknown slope rule {s:?}"))),
        }
    }
}

/// Locates the largest one-step complexity drop; `L_final = 2 L_min`.
pub fn slope_calibrate(path: &SlopePath) -> Result<SlopeCalibration> {
    slope_calibrate_with(path, SlopeRule::Drop)
}

/// Ties go to the smallest L. A path whose complexity never drops has no jump.
pub fn slope_calibrate_with(path: &SlopePath, rule: SlopeRule) -> Result<SlopeCalibration> {
    let (grid, c) = (&path.grid, &path.complexities);
    if grid.len() < 3 || c.len() != grid.len() {
        return Err(Error::InvalidParameter(
            "the slope algorithm needs at least 3 grid points".into(),
        ));
    }
    if !(1..grid.len()).any(|i| c[i - 1] - c[i] > 0.0) {
        return Err(Error::NoJumpDetected);
    }
    let score = |i: usize| match rule {
        SlopeRule::Drop => c[i - 1] - c[i],
        SlopeRule::Derivative => -(grid[i] * c[i] - grid[i - 1] * c[i - 1]) / (grid[i] - grid[i - 1]),
    };
    let mut best = (1usize, score(1));
    for i in 2..grid.len() {
        let v = score(i);
        if v > best.1 {
            best = (i, v);
        }
    }
    let l_min = grid[best.0];
    Ok(SlopeCalibration {
        l_min,
        l_final: 2.0 * l_min,
        jump_index: best.0,
        jump: c[best.0 - 1] - c[best.0],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BootstrapOptions {
    /// Number of bootstrap samples B.
    pub samples: usize,
    pub seed: u64,
    /// Outer replicate index, for stream separation.
    pub replicate: u64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            samples: 20,
            seed: 0,
            replicate: 0,
        }
    }
}

/// Per-node bootstrap estimates of μ̂_{n−1}(ω) KL(P̂(·|ω) ‖ P̂^BS(·|ω)).
///
/// Each bootstrap sample is simulated from `fitted`, started from `window`,
/// recounted, and smoothed with add-½ counts.
pub fn bootstrap_penalty_table(
    selector: &Selector<'_>,
    fitted: &ContextKernel,
    window: &[u8],
    options: &BootstrapOptions,
) -> Result<LeafTable> {
    if options.samples == 0 {
        return Err(Error::InvalidParameter("bootstrap needs B >= 1".into()));
    }
    let table = selector.table;
    let alphabet = table.alphabet();
    let k = alphabet.size();
    let n = table.n();
    let d_max = selector.options.d_max;
    let nodes: Vec<(&Word, Vec<f64>, f64)> = selector
        .nodes
        .iter()
        .filter(|node| node.weight > 0.0)
        .map(|node| {
            let p = table
                .transition_estimate(node.word.as_slice())
                .expect("observed node");
            (&node.word, p, node.weight)
        })
        .collect();
    let mut sums = vec![0.0; nodes.len()];
    for b in 0..options.samples {
        let mut rng = stream(options.seed, options.replicate, Purpose::Bootstrap, b as u64);
        let y = bootstrap_resample(fitted, window, n, &mut rng)?;
        let boot = CountTable::new(&y, alphabet, d_max)?;
        for (sum, (word, p, _)) in sums.iter_mut().zip(&nodes) {
            let counts = boot.next_counts(word.as_slice());
            let total: u64 = counts.iter().sum();
            let denom = total as f64 + k as f64 / 2.0;
            let q: Vec<f64> = counts.iter().map(|&c| (c as f64 + 0.5) / denom).collect();
            *sum += kl_vector(p, &q).expect("smoothed laws are valid");
        }
    }
    let entries = nodes
        .iter()
        .zip(&sums)
        .map(|((word, _, weight), sum)| {
            ((*word).clone(), (weight * sum / options.samples as f64).max(0.0))
        })
        .collect();
    LeafTable::new(entries)
}

/// Fits the maximal tree of `selector` and builds its bootstrap penalty table.
pub fn bootstrap_shape(
    selector: &Selector<'_>,
    sequence: &[u8],
    options: &BootstrapOptions,
) -> Result<LeafTable> {
    let maximal = selector.maximal_tree()?;
    let fitted = ContextKernel::fit(selector.table, &maximal)?;
    let depth = maximal.depth();
    bootstrap_penalty_table(selector, &fitted, &sequence[..depth], options)
}
