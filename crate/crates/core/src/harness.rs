//! Seeded Monte-Carlo experiments on the truncated-Poisson renewal source.
//!
//! Replicate `r` simulates its sample from stream `(seed, r, Simulation)` and
//! bootstraps from `(seed, r, Bootstrap, b)`; rows are aggregated in
//! replicate order, so outputs do not depend on the thread schedule.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::counts::CountTable;
use crate::error::{Error, Result};
use crate::par::{map_indexed, num_threads, Execution};
use crate::risk::Projection;
use crate::rng::{stream, Purpose};
use crate::select::{
    bootstrap_shape, geometric_grid, penalty_path, slope_calibrate_with, BootstrapOptions, PenaltyShape,
    SelectOptions, Selector, SlopePath, SlopeRule,
};
use crate::sources::{build_renewal_model, Init, RenewalModel, RenewalParams};
use crate::tree::{Alphabet, ContextTree};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Fig1,
    Fig2,
    Fig4,
    Table1,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig1 => "fig1",
            Experiment::Fig2 => "fig2",
            Experiment::Fig4 => "fig4",
            Experiment::Table1 => "table1",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(Experiment::Fig1),
            "fig2" => Ok(Experiment::Fig2),
            "fig4" => Ok(Experiment::Fig4),
            "table1" => Ok(Experiment::Table1),
            other => Err(Error::InvalidParameter(format!("unknown experiment {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    #[serde(rename = "BIC")]
    Bic,
    #[serde(rename = "BIC+Slope")]
    BicSlope,
    #[serde(rename = "Resampling")]
    Resampling,
    #[serde(rename = "Resampling+Slope")]
    ResamplingSlope,
    #[serde(rename = "AIC")]
    Aic,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Bic,
        Method::BicSlope,
        Method::Resampling,
        Method::ResamplingSlope,
        Method::Aic,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Bic => "BIC",
            Method::BicSlope => "BIC+Slope",
            Method::Resampling => "Resampling",
            Method::ResamplingSlope => "Resampling+Slope",
            Method::Aic => "AIC",
        }
    }

    fn uses_bootstrap(self) -> bool {
        matches!(self, Method::Resampling | Method::ResamplingSlope)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lo: 0.05,
            hi: 8.0,
            points: 60,
        }
    }
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        geometric_grid(self.lo, self.hi, self.points)
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;

    /// `lo:hi:points`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Parse(format!("grid must be lo:hi:points, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let spec = GridSpec {
            lo: parts[0].trim().parse().map_err(|_| bad())?,
            hi: parts[1].trim().parse().map_err(|_| bad())?,
            points: parts[2].trim().parse().map_err(|_| bad())?,
        };
        spec.values()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub renewal: RenewalParams,
    pub bootstrap_samples: usize,
    pub grid: GridSpec,
    pub slope_rule: SlopeRule,
    pub bic_constant: f64,
    /// Restrict the resampling methods to the trees on the BIC penalty path.
    pub two_step: bool,
    pub execution: Execution,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            n: 500,
            replicates: 1000,
            seed: 1,
            methods: Method::ALL.to_vec(),
            renewal: RenewalParams::default(),
            bootstrap_samples: 20,
            grid: GridSpec::default(),
            slope_rule: SlopeRule::default(),
            bic_constant: 0.5,
            two_step: false,
            execution: Execution::default(),
        }
    }

    /// Trees up to τ_{K_o} need words of length K_o + 1.
    pub fn d_max(&self) -> usize {
        self.renewal.k_o + 1
    }

    pub fn validate(&self) -> Result<()> {
        self.renewal.validate()?;
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be >= 1".into()));
        }
        if self.n <= self.d_max() + 1 {
            return Err(Error::SequenceTooShort {
                n: self.n,
                min: self.d_max() + 1,
            });
        }
        if self.bootstrap_samples == 0 && self.methods.iter().any(|m| m.uses_bootstrap()) {
            return Err(Error::InvalidParameter("bootstrap needs B >= 1".into()));
        }
        if self.grid.points < 3 {
            return Err(Error::InvalidParameter("the slope grid needs at least 3 points".into()));
        }
        self.grid.values()?;
        Ok(())
    }
}

/// The source, the candidate trees and their exact projections.
#[derive(Clone, Debug)]
pub struct RenewalStudy {
    pub model: RenewalModel,
    /// τ_0, …, τ_{K_o}.
    pub candidates: Vec<ContextTree>,
    pub projections: Vec<Projection>,
}

impl RenewalStudy {
    pub fn new(params: &RenewalParams) -> Result<Self> {
        let model = build_renewal_model(params)?;
        let candidates: Vec<ContextTree> = (0..=params.k_o).map(ContextTree::renewal).collect();
        let projections = candidates
            .iter()
            .map(|t| Projection::new(model.source(), t))
            .collect::<Result<Vec<_>>>()?;
        Ok(RenewalStudy {
            model,
            candidates,
            projections,
        })
    }

    pub fn sample(&self, n: usize, seed: u64, replicate: usize) -> Vec<u8> {
        let mut rng = stream(seed, replicate as u64, Purpose::Simulation, 0);
        self.model.source().simulate(n, &mut rng, Init::Stationary)
    }

    /// Total risk of each candidate on `table`.
    pub fn risks(&self, table: &CountTable) -> Vec<f64> {
        self.projections
            .iter()
            .map(|p| {
                let fitted = table.plug_in(p.tree());
                p.report(&fitted).expect("projection tree").total
            })
            .collect()
    }

    fn index_of(&self, tree: &ContextTree) -> Option<usize> {
        self.candidates.iter().position(|c| c == tree)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig1Row {
    pub k: usize,
    pub bias: f64,
    pub variance: f64,
    pub variance_se: f64,
    pub total: f64,
    pub infinite_count: usize,
}

/// Mean and sample standard deviation of the finite values, and how many were infinite.
fn finite_stats(values: impl Iterator<Item = f64>) -> (f64, f64, usize, usize) {
    let mut finite = Vec::new();
    let mut infinite = 0;
    for v in values {
        if v.is_finite() {
            finite.push(v);
        } else {
            infinite += 1;
        }
    }
    let count = finite.len();
    if count == 0 {
        return (f64::NAN, f64::NAN, 0, infinite);
    }
    let mean = finite.iter().sum::<f64>() / count as f64;
    let sd = if count > 1 {
        (finite.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, sd, count, infinite)
}

/// Exact bias and Monte-Carlo variance of every τ_k.
pub fn run_fig1(config: &ExperimentConfig) -> Result<Vec<Fig1Row>> {
    config.validate()?;
    let study = RenewalStudy::new(&config.renewal)?;
    let k_o = config.renewal.k_o;
    let per_replicate = map_indexed(config.replicates, config.execution, |r| {
        let x = study.sample(config.n, config.seed, r);
        let table = CountTable::new(&x, &Alphabet::binary(), config.d_max())?;
        (0..=k_o)
            .map(|k| {
                let p = &study.projections[k];
                p.variance(&table.plug_in(p.tree()))
            })
            .collect::<Result<Vec<f64>>>()
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok((0..=k_o)
        .map(|k| {
            let bias = study.projections[k].bias();
            let (variance, sd, count, infinite) = finite_stats(per_replicate.iter().map(|v| v[k]));
            Fig1Row {
                k,
                bias,
                variance,
                variance_se: if count > 0 { sd / (count as f64).sqrt() } else { f64::NAN },
                total: bias + variance,
                infinite_count: infinite,
            }
        })
        .collect())
}

/// The k minimizing bias + mean variance.
pub fn fig1_oracle_k(rows: &[Fig1Row]) -> Option<usize> {
    rows.iter()
        .filter(|r| r.total.is_finite())
        .min_by(|a, b| a.total.total_cmp(&b.total))
        .map(|r| r.k)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig2Row {
    pub replicate: usize,
    pub c: f64,
    pub complexity: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig2Median {
    pub c: f64,
    pub complexity: f64,
    pub size: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig2Replicate {
    pub replicate: usize,
    pub complexity_at_half: f64,
    pub complexity_at_two: f64,
    /// Constant after the dominant drop, if the path moves at all.
    pub l_min: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fig2Output {
    pub rows: Vec<Fig2Row>,
    pub median: Vec<Fig2Median>,
    pub replicates: Vec<Fig2Replicate>,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}

fn bootstrap_selector<'a>(
    config: &ExperimentConfig,
    bic: &Selector<'a>,
    x: &[u8],
    replicate: usize,
) -> Result<Selector<'a>> {
    let options = BootstrapOptions {
        samples: config.bootstrap_samples,
        seed: config.seed,
        replicate: replicate as u64,
    };
    let shape = bootstrap_shape(bic, x, &options)?;
    Ok(bic.with_shape(PenaltyShape::PerLeaf(shape)))
}

/// Bootstrap-complexity paths of the selected tree.
pub fn run_fig2(config: &ExperimentConfig) -> Result<Fig2Output> {
    config.validate()?;
    let study = RenewalStudy::new(&config.renewal)?;
    let grid = config.grid.values()?;
    let per_replicate = map_indexed(config.replicates, config.execution, |r| {
        let x = study.sample(config.n, config.seed, r);
        let table = CountTable::new(&x, &Alphabet::binary(), config.d_max())?;
        let bic = Selector::new(&table, PenaltyShape::Bic, SelectOptions::renewal(config.d_max()))?;
        let boot = bootstrap_selector(config, &bic, &x, r)?;
        let path = penalty_path(&boot, &grid, Execution::Sequential)?;
        let summary = Fig2Replicate {
            replicate: r,
            complexity_at_half: boot.solve(0.5)?.complexity,
            complexity_at_two: boot.solve(2.0)?.complexity,
            l_min: slope_calibrate_with(&path, config.slope_rule).ok().map(|c| c.l_min),
        };
        Ok((path, summary))
    })
    .into_iter()
    .collect::<Result<Vec<(SlopePath, Fig2Replicate)>>>()?;
    let mut rows = Vec::with_capacity(config.replicates * grid.len());
    for (r, (path, _)) in per_replicate.iter().enumerate() {
        for (i, &c) in grid.iter().enumerate() {
            rows.push(Fig2Row {
                replicate: r,
                c,
                complexity: path.complexities[i],
                size: path.sizes[i],
            });
        }
    }
    let median_rows = grid
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let mut comp: Vec<f64> = per_replicate.iter().map(|(p, _)| p.complexities[i]).collect();
            let mut size: Vec<f64> = per_replicate.iter().map(|(p, _)| p.sizes[i] as f64).collect();
            Fig2Median {
                c,
                complexity: median(&mut comp),
                size: median(&mut size),
            }
        })
        .collect();
    Ok(Fig2Output {
        rows,
        median: median_rows,
        replicates: per_replicate.into_iter().map(|(_, s)| s).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub method: Method,
    pub size: usize,
    /// The selected tree is τ_k.
    pub k: usize,
    pub risk: f64,
    pub oracle_risk: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table1Row {
    pub method: Method,
    pub mean_ratio: f64,
    pub sd_ratio: f64,
    pub replicates: usize,
    pub excluded_infinite: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Fig4Row {
    pub method: Method,
    pub size: usize,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonOutput {
    pub rows: Vec<ReplicateRow>,
    pub table: Vec<Table1Row>,
    pub histogram: Vec<Fig4Row>,
}

impl ComparisonOutput {
    pub fn method(&self, method: Method) -> Option<&Table1Row> {
        self.table.iter().find(|r| r.method == method)
    }
}

/// Picks the slope constant on `selector`'s shape and selects with it.
fn slope_select(selector: &Selector<'_>, grid: &[f64], rule: SlopeRule) -> Result<ContextTree> {
    let path = penalty_path(selector, grid, Execution::Sequential)?;
    match slope_calibrate_with(&path, rule) {
        Ok(cal) => Ok(selector.solve(cal.l_final)?.tree),
        // A flat path selects the same tree at every constant.
        Err(Error::NoJumpDetected) => Ok(path.trees[0].clone()),
        Err(e) => Err(e),
    }
}

fn compare_replicate(
    config: &ExperimentConfig,
    study: &RenewalStudy,
    grid: &[f64],
    r: usize,
) -> Result<Vec<ReplicateRow>> {
    let x = study.sample(config.n, config.seed, r);
    let table = CountTable::new(&x, &Alphabet::binary(), config.d_max())?;
    let risks = study.risks(&table);
    let oracle = risks.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    let bic = Selector::new(&table, PenaltyShape::Bic, SelectOptions::renewal(config.d_max()))?;
    let boot = if config.methods.iter().any(|m| m.uses_bootstrap()) {
        Some(bootstrap_selector(config, &bic, &x, r)?)
    } else {
        None
    };
    let bic_path_trees = if config.two_step {
        Some(penalty_path(&bic, grid, Execution::Sequential)?.distinct_trees())
    } else {
        None
    };
    let mut rows = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let tree = match method {
            Method::Bic => bic.solve(config.bic_constant)?.tree,
            Method::BicSlope => slope_select(&bic, grid, config.slope_rule)?,
            Method::Aic => bic.with_shape(PenaltyShape::Aic).solve(1.0)?.tree,
            Method::Resampling | Method::ResamplingSlope => {
                let boot = boot.as_ref().expect("bootstrap prepared");
                match (&bic_path_trees, method) {
                    (Some(trees), Method::Resampling) => boot.select_among(trees, 2.0)?.tree,
                    (Some(trees), _) => {
                        let path = two_step_path(boot, trees, grid)?;
                        match slope_calibrate_with(&path, config.slope_rule) {
                            Ok(cal) => boot.select_among(trees, cal.l_final)?.tree,
                            Err(Error::NoJumpDetected) => path.trees[0].clone(),
                            Err(e) => return Err(e),
                        }
                    }
                    (None, Method::Resampling) => boot.solve(2.0)?.tree,
                    (None, _) => slope_select(boot, grid, config.slope_rule)?,
                }
            }
        };
        let index = study
            .index_of(&tree)
            .ok_or_else(|| Error::InvalidParameter("selected tree outside the renewal family".into()))?;
        let risk = risks[index];
        rows.push(ReplicateRow {
            replicate: r,
            method,
            size: tree.size(),
            k: index,
            risk,
            oracle_risk: oracle,
            ratio: risk / oracle,
        });
    }
    Ok(rows)
}

/// Penalty path restricted to a candidate list.
fn two_step_path(selector: &Selector<'_>, trees: &[ContextTree], grid: &[f64]) -> Result<SlopePath> {
    let mut complexities = Vec::with_capacity(grid.len());
    let mut sizes = Vec::with_capacity(grid.len());
    let mut selected = Vec::with_capacity(grid.len());
    for &c in grid {
        let r = selector.select_among(trees, c)?;
        complexities.push(r.complexity);
        sizes.push(r.tree.size());
        selected.push(r.tree);
    }
    crate::select::check_path_monotone(&complexities, &sizes, selector.shape().is_uniform())?;
    Ok(SlopePath {
        grid: grid.to_vec(),
        complexities,
        sizes,
        trees: selected,
    })
}

/// Oracle ratios and selected sizes of every configured method.
pub fn run_fig4_table1(config: &ExperimentConfig) -> Result<ComparisonOutput> {
    config.validate()?;
    let study = RenewalStudy::new(&config.renewal)?;
    let grid = config.grid.values()?;
    let rows: Vec<ReplicateRow> = map_indexed(config.replicates, config.execution, |r| {
        compare_replicate(config, &study, &grid, r)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?
    .into_iter()
    .flatten()
    .collect();
    let table = config
        .methods
        .iter()
        .map(|&method| {
            let (mean, sd, count, infinite) =
                finite_stats(rows.iter().filter(|r| r.method == method).map(|r| r.ratio));
            Table1Row {
                method,
                mean_ratio: mean,
                sd_ratio: sd,
                replicates: count,
                excluded_infinite: infinite,
            }
        })
        .collect();
    let max_size = config.renewal.k_o + 2;
    let mut histogram = Vec::new();
    for &method in &config.methods {
        for size in 2..=max_size {
            histogram.push(Fig4Row {
                method,
                size,
                count: rows.iter().filter(|r| r.method == method && r.size == size).count(),
            });
        }
    }
    Ok(ComparisonOutput {
        rows,
        table,
        histogram,
    })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    for row in rows {
        writer.serialize(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct RunMetadata<'a> {
    pub experiment: &'static str,
    pub seed: u64,
    pub version: &'static str,
    pub wall_time_seconds: f64,
    pub threads: usize,
    pub config: &'a ExperimentConfig,
    pub notes: Vec<String>,
}

pub fn write_metadata(path: &Path, metadata: &RunMetadata<'_>) -> Result<()> {
    let text = serde_json::to_string_pretty(metadata).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn notes(config: &ExperimentConfig) -> Vec<String> {
    let mut notes = vec![
        "candidate trees: the renewal trees tau_0..tau_Ko".to_string(),
        "bootstrap: parametric, from the maximal feasible renewal tree, add-1/2 smoothing".to_string(),
    ];
    if matches!(config.experiment, Experiment::Fig4 | Experiment::Table1) {
        notes.push(format!(
            "sample size n={} (the histograms have also been reported at n=1000)",
            config.n
        ));
    }
    notes
}

/// Runs the configured experiment and writes its CSV files and metadata to `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    fs::create_dir_all(out_dir)?;
    let name = config.experiment.name();
    let mut written = Vec::new();
    let mut emit = |file: &str| {
        let p = out_dir.join(file);
        written.push(p.clone());
        p
    };
    match config.experiment {
        Experiment::Fig1 => {
            let rows = run_fig1(config)?;
            write_csv(&emit("fig1.csv"), &rows)?;
        }
        Experiment::Fig2 => {
            let out = run_fig2(config)?;
            write_csv(&emit("fig2.csv"), &out.rows)?;
            write_csv(&emit("fig2_median.csv"), &out.median)?;
            write_csv(&emit("fig2_replicates.csv"), &out.replicates)?;
        }
        Experiment::Fig4 | Experiment::Table1 => {
            let out = run_fig4_table1(config)?;
            if config.experiment == Experiment::Fig4 {
                write_csv(&emit("fig4.csv"), &out.histogram)?;
            } else {
                write_csv(&emit("table1.csv"), &out.table)?;
            }
            write_csv(&emit(&format!("{name}_rows.csv")), &out.rows)?;
        }
    }
    let metadata = RunMetadata {
        experiment: name,
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION"),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        threads: match config.execution {
            Execution::Sequential => 1,
            Execution::Parallel => num_threads(),
        },
        config,
        notes: notes(config),
    };
    write_metadata(&emit(&format!("{name}.meta.json")), &metadata)?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(experiment: Experiment) -> ExperimentConfig {
        ExperimentConfig {
            replicates: 8,
            bootstrap_samples: 3,
            ..ExperimentConfig::new(experiment)
        }
    }

    #[test]
    fn config_validation() {
        assert!(small(Experiment::Fig1).validate().is_ok());
        assert!(ExperimentConfig { replicates: 0, ..small(Experiment::Fig1) }.validate().is_err());
        assert!(ExperimentConfig { n: 10, ..small(Experiment::Fig1) }.validate().is_err());
        assert!("0.1:4:20".parse::<GridSpec>().is_ok());
        assert!("4:0.1:20".parse::<GridSpec>().is_err());
        assert!("1:2".parse::<GridSpec>().is_err());
        assert!("table1".parse::<Experiment>().is_ok());
        assert!("fig3".parse::<Experiment>().is_err());
    }

    #[test]
    fn fig1_small_run() {
        let rows = run_fig1(&small(Experiment::Fig1)).unwrap();
        assert_eq!(rows.len(), 15);
        assert_eq!(rows[14].bias, 0.0);
        assert!(rows.windows(2).all(|w| w[1].bias <= w[0].bias));
        assert!(rows[0].infinite_count == 0 && rows[0].variance > 0.0);
    }

    #[test]
    fn comparison_ratios_are_at_least_one() {
        let out = run_fig4_table1(&small(Experiment::Table1)).unwrap();
        assert_eq!(out.table.len(), 5);
        assert_eq!(out.rows.len(), 8 * 5);
        for r in &out.rows {
            if r.ratio.is_finite() {
                assert!(r.ratio >= 1.0 - 1e-12);
            }
        }
        let total: usize = out.histogram.iter().filter(|h| h.method == Method::Bic).map(|h| h.count).sum();
        assert_eq!(total, 8);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let par = run_fig4_table1(&small(Experiment::Table1)).unwrap();
        let seq = run_fig4_table1(&ExperimentConfig {
            execution: Execution::Sequential,
            ..small(Experiment::Table1)
        })
        .unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn two_step_runs() {
        let out = run_fig4_table1(&ExperimentConfig {
            two_step: true,
            ..small(Experiment::Table1)
        })
        .unwrap();
        assert_eq!(out.table.len(), 5);
    }

    #[test]
    fn fig2_small_run() {
        let out = run_fig2(&small(Experiment::Fig2)).unwrap();
        assert_eq!(out.rows.len(), 8 * 60);
        assert_eq!(out.median.len(), 60);
        for r in &out.replicates {
            assert!(r.complexity_at_half >= r.complexity_at_two);
        }
    }
}
