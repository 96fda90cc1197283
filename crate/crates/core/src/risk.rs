//! Kullback-Leibler risk against a known source.
//!
//! For a tree τ and a source with tree τ_s, the common refinement of τ and
//! τ_s carries the exact stationary masses. The projection P_τ(·|c) is the
//! μ-mixture of source kernels over the refinement cells below c, and the
//! risk of fitted transitions Q splits as
//! `K_μ(P, Q) = K_μ(P, P_τ) + K_{μ_τ}(P_τ, Q)`.

use serde::Serialize;

use crate::counts::{CountTable, Horizon, PlugIn};
use crate::error::{Error, Result};
use crate::sources::SourceModel;
use crate::tree::{ContextTree, Word};

const SUM_TOLERANCE: f64 = 1e-9;

fn check_distribution(p: &[f64], name: &str) -> Result<()> {
    if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::NotAProbability(format!("{name} has a negative or non-finite entry")));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::NotAProbability(format!("{name} sums to {sum}")));
    }
    Ok(())
}

/// KL(p ‖ q) without input checks.
fn kl_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut total = 0.0;
    for (&pa, &qa) in p.iter().zip(q) {
        if pa > 0.0 {
            if qa <= 0.0 {
                return f64::INFINITY;
            }
            total += pa * (pa / qa).ln();
        }
    }
    total.max(0.0)
}

/// KL(p ‖ q) in nats; +∞ when q vanishes where p does not.
pub fn kl_vector(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::NotAProbability("vectors differ in length".into()));
    }
    check_distribution(p, "p")?;
    check_distribution(q, "q")?;
    Ok(kl_unchecked(p, q))
}

/// Σ_ω weight(ω) · KL(P(·|ω) ‖ Q(·|ω)).
pub fn kl_tree(weights: &[f64], p: &[Vec<f64>], q: &[Vec<f64>]) -> Result<f64> {
    if weights.len() != p.len() || p.len() != q.len() {
        return Err(Error::MismatchedContexts);
    }
    let mut total = 0.0;
    for ((&w, pw), qw) in weights.iter().zip(p).zip(q) {
        if w < 0.0 {
            return Err(Error::InvalidParameter(format!("negative weight {w}")));
        }
        let kl = kl_vector(pw, qw)?;
        if w > 0.0 {
            total += w * kl;
        }
    }
    Ok(total)
}

/// Shannon entropy in nats, with 0·ln(1/0) = 0.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// Entropy in nats of the law proportional to `counts`.
pub fn count_entropy(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    let mut h = 0.0;
    for &c in counts {
        if c > 0 && c < total {
            let p = c as f64 / t;
            h -= p * p.ln();
        }
    }
    h
}

/// Σ_{ω∈τ} μ̂_{n−1}(ω) · H(P̂(·|ω)).
pub fn empirical_entropy_term(table: &CountTable, tree: &ContextTree) -> Result<f64> {
    let mut total = 0.0;
    for c in tree.contexts() {
        let counts = table.next_counts(c.as_slice());
        if counts.iter().all(|&x| x == 0) {
            return Err(Error::ZeroDenominator(tree.alphabet().format_word(c)));
        }
        total += table.empirical_measure(c.as_slice(), Horizon::Previous) * count_entropy(&counts);
    }
    Ok(total)
}

#[derive(Clone, Debug)]
struct Cell {
    context: usize,
    mass: f64,
    source_context: usize,
}

/// The exact projection of a source onto one tree.
#[derive(Clone, Debug)]
pub struct Projection {
    tree: ContextTree,
    context_mass: Vec<f64>,
    projected: Vec<Vec<f64>>,
    cells: Vec<Cell>,
    source_transitions: Vec<Vec<f64>>,
    bias: f64,
}

impl Projection {
    pub fn new(source: &SourceModel, tree: &ContextTree) -> Result<Self> {
        if source.alphabet() != tree.alphabet() {
            return Err(Error::AlphabetMismatch);
        }
        let k = tree.alphabet().size();
        let source_tree = source.tree();
        let mut cells = Vec::new();
        let mut context_mass = Vec::with_capacity(tree.size());
        let mut projected = Vec::with_capacity(tree.size());
        for (ci, c) in tree.contexts().iter().enumerate() {
            let refined: Vec<(Word, usize)> = match source_tree.context_index_of(c.as_slice()) {
                Some(si) => vec![(c.clone(), si)],
                None => source_tree
                    .contexts()
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| c.is_suffix_of(s.as_slice()))
                    .map(|(si, s)| (s.clone(), si))
                    .collect(),
            };
            let mut mass_c = 0.0;
            let mut mixture = vec![0.0; k];
            let single = (refined.len() == 1).then(|| refined[0].1);
            for (word, si) in refined {
                let mass = source.word_probability(&word);
                mass_c += mass;
                for (m, &p) in mixture.iter_mut().zip(source.transition(si)) {
                    *m += mass * p;
                }
                cells.push(Cell {
                    context: ci,
                    mass,
                    source_context: si,
                });
            }
            if let Some(si) = single {
                mixture = source.transition(si).to_vec();
            } else if mass_c > 0.0 {
                mixture.iter_mut().for_each(|m| *m /= mass_c);
            } else {
                // Null context: any law will do, its weight is zero.
                mixture = vec![1.0 / k as f64; k];
            }
            context_mass.push(mass_c);
            projected.push(mixture);
        }
        let source_transitions: Vec<Vec<f64>> =
            (0..source_tree.size()).map(|i| source.transition(i).to_vec()).collect();
        let bias = cells
            .iter()
            .filter(|cell| cell.mass > 0.0)
            .map(|cell| {
                cell.mass
                    * kl_unchecked(
                        &source_transitions[cell.source_context],
                        &projected[cell.context],
                    )
            })
            .sum::<f64>()
            .max(0.0);
        Ok(Projection {
            tree: tree.clone(),
            context_mass,
            projected,
            cells,
            source_transitions,
            bias,
        })
    }

    pub fn tree(&self) -> &ContextTree {
        &self.tree
    }

    /// K_μ(P, P̄_τ).
    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// μ(c) for each context of τ.
    pub fn context_mass(&self) -> &[f64] {
        &self.context_mass
    }

    /// P_τ(·|c) for each context of τ.
    pub fn projected(&self) -> &[Vec<f64>] {
        &self.projected
    }

    /// Number of cells of the common refinement.
    pub fn refinement_size(&self) -> usize {
        self.cells.len()
    }

    fn check_fit(&self, fitted: &PlugIn) -> Result<()> {
        if fitted.tree != self.tree {
            return Err(Error::MismatchedContexts);
        }
        Ok(())
    }

    fn variance_unchecked(&self, fitted: &[Option<Vec<f64>>]) -> f64 {
        let mut total = 0.0;
        for ((&mass, p), q) in self.context_mass.iter().zip(&self.projected).zip(fitted) {
            if mass == 0.0 {
                continue;
            }
            match q {
                Some(q) => total += mass * kl_unchecked(p, q),
                None => return f64::INFINITY,
            }
        }
        total
    }

    fn direct_unchecked(&self, fitted: &[Option<Vec<f64>>]) -> f64 {
        let mut total = 0.0;
        for cell in self.cells.iter().filter(|c| c.mass > 0.0) {
            match &fitted[cell.context] {
                Some(q) => {
                    total += cell.mass * kl_unchecked(&self.source_transitions[cell.source_context], q)
                }
                None => return f64::INFINITY,
            }
        }
        total
    }

    /// K_{μ_τ}(P_τ, P̂_τ); +∞ when a context with positive mass is unfitted
    /// or the fit misses part of its support.
    pub fn variance(&self, fitted: &PlugIn) -> Result<f64> {
        self.check_fit(fitted)?;
        Ok(self.variance_unchecked(&fitted.transitions))
    }

    /// K_μ(P, P̃_τ) summed directly over the refinement cells.
    pub fn direct_risk(&self, fitted: &PlugIn) -> Result<f64> {
        self.check_fit(fitted)?;
        Ok(self.direct_unchecked(&fitted.transitions))
    }

    pub fn report(&self, fitted: &PlugIn) -> Result<RiskReport> {
        self.check_fit(fitted)?;
        let variance = self.variance_unchecked(&fitted.transitions);
        let total = self.bias + variance;
        debug_assert!({
            let direct = self.direct_unchecked(&fitted.transitions);
            if total.is_finite() {
                (direct - total).abs() < 1e-10
            } else {
                direct.is_infinite()
            }
        });
        let alphabet = self.tree.alphabet();
        let contexts = self
            .tree
            .contexts()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let kl = match &fitted.transitions[i] {
                    Some(q) => kl_unchecked(&self.projected[i], q),
                    None if self.context_mass[i] == 0.0 => 0.0,
                    None => f64::INFINITY,
                };
                ContextRisk {
                    context: alphabet.format_word(c),
                    mass: self.context_mass[i],
                    kl,
                }
            })
            .collect();
        Ok(RiskReport {
            bias: self.bias,
            variance,
            total,
            contexts,
        })
    }
}

/// Per-context share of the variance term.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContextRisk {
    pub context: String,
    pub mass: f64,
    /// KL(P_τ(·|c) ‖ P̂(·|c)).
    pub kl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RiskReport {
    pub bias: f64,
    pub variance: f64,
    pub total: f64,
    pub contexts: Vec<ContextRisk>,
}

pub fn exact_bias(source: &SourceModel, tree: &ContextTree) -> Result<f64> {
    Ok(Projection::new(source, tree)?.bias())
}

pub fn variance_term(source: &SourceModel, tree: &ContextTree, fitted: &PlugIn) -> Result<f64> {
    Projection::new(source, tree)?.variance(fitted)
}

pub fn total_risk(source: &SourceModel, tree: &ContextTree, fitted: &PlugIn) -> Result<RiskReport> {
    Projection::new(source, tree)?.report(fitted)
}
