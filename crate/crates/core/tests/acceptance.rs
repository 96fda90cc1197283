//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`. Failing criteria are reported,
//! not hidden; the process still exits 0 so the rest of the suite runs.

use std::collections::BTreeMap;
use std::fs;
use std::time::{Duration, Instant};

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use vlmc_oracle::counts::{CountTable, FeasibilityPolicy};
use vlmc_oracle::harness::{
    fig1_oracle_k, run_experiment, run_fig1, run_fig2, run_fig4_table1, Experiment, ExperimentConfig, Method,
    RenewalStudy,
};
use vlmc_oracle::par::Execution;
use vlmc_oracle::rng::{stream, Purpose};
use vlmc_oracle::select::{
    bootstrap_shape, brute_force_select, default_slope_grid, prune_select, BootstrapOptions, LeafTable, Penalty,
    PenaltyShape, SelectOptions, Selector, Universe,
};
use vlmc_oracle::sources::{build_renewal_model, gap_lengths, Init, RenewalParams, SourceModel};
use vlmc_oracle::tree::{Alphabet, ContextTree, Word};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_source(seed: u64, index: u64) -> SourceModel {
    let mut rng = stream(seed, index, Purpose::Other(1), 0);
    let tree = ContextTree::full(Alphabet::binary(), 3).unwrap();
    let transitions = (0..tree.size())
        .map(|_| {
            let p: f64 = rng.random_range(0.05..0.95);
            vec![p, 1.0 - p]
        })
        .collect();
    SourceModel::new(tree, transitions).unwrap()
}

fn all_words(depth: usize) -> Vec<Word> {
    let mut words = vec![Word::empty()];
    let mut frontier = vec![Word::empty()];
    for _ in 0..depth {
        frontier = frontier
            .iter()
            .flat_map(|w| [w.prepend(0), w.prepend(1)])
            .collect();
        words.extend(frontier.iter().cloned());
    }
    words
}

fn dp_matches_brute_force() -> Outcome {
    let start = Instant::now();
    let constants = [0.0, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    let options = SelectOptions::new(3);
    let mut checked = 0;
    let mut mismatches = 0;
    for i in 0..100u64 {
        let source = random_source(11, i);
        let mut rng = stream(11, i, Purpose::Simulation, 0);
        let x = source.simulate(200, &mut rng, Init::Stationary);
        let table = CountTable::new(&x, &Alphabet::binary(), 3).unwrap();
        let mut weights = BTreeMap::new();
        let mut wrng = stream(11, i, Purpose::Other(2), 0);
        for w in all_words(3) {
            weights.insert(w, wrng.random_range(0.0..0.05));
        }
        let shapes = [PenaltyShape::Bic, PenaltyShape::PerLeaf(LeafTable::new(weights).unwrap())];
        for shape in &shapes {
            for &c in &constants {
                let penalty = Penalty::new(shape.clone(), c).unwrap();
                let dp = prune_select(&table, &penalty, options).unwrap();
                let bf = brute_force_select(&table, &penalty, options).unwrap();
                checked += 1;
                if dp.tree != bf.tree || dp.criterion != bf.criterion {
                    mismatches += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!("{mismatches} mismatches in {checked} selections, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn pythagorean_identity() -> Outcome {
    let start = Instant::now();
    let study = RenewalStudy::new(&RenewalParams::default()).unwrap();
    let mut worst = 0.0f64;
    let mut broken = 0;
    for r in 0..100 {
        let x = study.sample(500, 21, r);
        let table = CountTable::new(&x, &Alphabet::binary(), 15).unwrap();
        for p in &study.projections {
            let fitted = table.plug_in(p.tree());
            let direct = p.direct_risk(&fitted).unwrap();
            let split = p.bias() + p.variance(&fitted).unwrap();
            if direct.is_infinite() || split.is_infinite() {
                if direct != split {
                    broken += 1;
                }
                continue;
            }
            worst = worst.max((direct - split).abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        broken == 0 && worst <= 1e-10 && elapsed < Duration::from_secs(30),
        format!("max |direct - (bias + variance)| = {worst:.3e}, {broken} infinite mismatches, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn bias_variance_curve() -> Outcome {
    let start = Instant::now();
    let config = ExperimentConfig {
        replicates: 2000,
        ..ExperimentConfig::new(Experiment::Fig1)
    };
    let rows = run_fig1(&config).unwrap();
    let elapsed = start.elapsed();
    let argmin = fig1_oracle_k(&rows);
    let nonincreasing = rows.windows(2).all(|w| w[1].bias <= w[0].bias);
    let last = rows.last().unwrap().bias;
    let pass = matches!(argmin, Some(4..=6)) && nonincreasing && last == 0.0 && elapsed < Duration::from_secs(300);
    let totals: Vec<String> = rows.iter().take(8).map(|r| format!("{}:{:.5}", r.k, r.total)).collect();
    outcome(
        pass,
        format!(
            "argmin k = {argmin:?} (size {:?}), bias nonincreasing = {nonincreasing}, bias(14) = {last:e}, totals [{}], {:.2}s",
            argmin.map(|k| k + 2),
            totals.join(" "),
            elapsed.as_secs_f64()
        ),
    )
}

fn comparison() -> vlmc_oracle::harness::ComparisonOutput {
    let config = ExperimentConfig {
        replicates: 1000,
        methods: vec![Method::Bic, Method::BicSlope],
        ..ExperimentConfig::new(Experiment::Table1)
    };
    run_fig4_table1(&config).unwrap()
}

fn bic_ratio(out: &vlmc_oracle::harness::ComparisonOutput) -> Outcome {
    let bic = out.method(Method::Bic).unwrap();
    outcome(
        (1.35..=1.70).contains(&bic.mean_ratio),
        format!(
            "mean ratio {:.4} (sd {:.4}, {} finite, {} excluded)",
            bic.mean_ratio, bic.sd_ratio, bic.replicates, bic.excluded_infinite
        ),
    )
}

fn slope_beats_bic(out: &vlmc_oracle::harness::ComparisonOutput) -> Outcome {
    let bic = out.method(Method::Bic).unwrap();
    let slope = out.method(Method::BicSlope).unwrap();
    let se = |r: &vlmc_oracle::harness::Table1Row| r.sd_ratio / (r.replicates as f64).sqrt();
    let combined = (se(bic).powi(2) + se(slope).powi(2)).sqrt();
    let gap = bic.mean_ratio - slope.mean_ratio;
    outcome(
        gap > 2.0 * combined,
        format!(
            "BIC {:.4}, BIC+Slope {:.4}, gap {:.4} vs 2 SE {:.4}",
            bic.mean_ratio,
            slope.mean_ratio,
            gap,
            2.0 * combined
        ),
    )
}

fn slope_jump() -> Outcome {
    let config = ExperimentConfig {
        replicates: 100,
        ..ExperimentConfig::new(Experiment::Fig2)
    };
    let out = run_fig2(&config).unwrap();
    let total = out.replicates.len();
    let ratio_ok = out
        .replicates
        .iter()
        .filter(|r| r.complexity_at_half >= 5.0 * r.complexity_at_two)
        .count();
    let jump_ok = out
        .replicates
        .iter()
        .filter(|r| matches!(r.l_min, Some(l) if (0.6..=1.6).contains(&l)))
        .count();
    let need = (0.8 * total as f64).ceil() as usize;
    outcome(
        ratio_ok >= need && jump_ok >= need,
        format!("5x drop in {ratio_ok}/{total}, jump in [0.6, 1.6] in {jump_ok}/{total}"),
    )
}

fn renewal_simulation() -> Outcome {
    let model = build_renewal_model(&RenewalParams::default()).unwrap();
    let mut rng = stream(31, 0, Purpose::Simulation, 0);
    let x = model.source().simulate(1_000_000, &mut rng, Init::Stationary);
    let gaps = gap_lengths(&x);
    let pmf = model.gap_pmf();
    let mut observed = vec![0f64; pmf.len()];
    for g in &gaps {
        observed[g - 1] += 1.0;
    }
    let total = gaps.len() as f64;
    // Pool the upper tail until every bin expects at least 5.
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut e, mut o) = (0.0, 0.0);
    for t in (0..pmf.len()).rev() {
        e += pmf[t] * total;
        o += observed[t];
        if e >= 5.0 {
            bins.push((o, e));
            e = 0.0;
            o = 0.0;
        }
    }
    if e > 0.0 {
        let last = bins.last_mut().unwrap();
        last.0 += o;
        last.1 += e;
    }
    let stat: f64 = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = (bins.len() - 1) as f64;
    let p = 1.0 - ChiSquared::new(dof).unwrap().cdf(stat);

    let n = x.len() as f64;
    let ones = x.iter().filter(|&&s| s == 1).count() as f64;
    let freq = ones / n;
    let target = 1.0 / model.mean_gap();
    let se = (target * (1.0 - target) / n).sqrt();
    let z = (freq - target) / se;

    let mut rng = stream(31, 1, Purpose::Simulation, 0);
    let long = model.source().simulate(10_000_000, &mut rng, Init::Stationary);
    let mut run = 0usize;
    let mut longest = 0usize;
    for &s in &long {
        run = if s == 0 { run + 1 } else { 0 };
        longest = longest.max(run);
    }
    outcome(
        p > 0.01 && z.abs() <= 3.0 && longest < 15,
        format!("chi2 p = {p:.4} on {} bins, frequency z = {z:.3}, longest zero run {longest}", bins.len()),
    )
}

fn path_monotonicity() -> Outcome {
    let study = RenewalStudy::new(&RenewalParams::default()).unwrap();
    let grid = default_slope_grid();
    let mut violations = 0;
    let mut paths = 0;
    for r in 0..100 {
        let x = study.sample(500, 41, r);
        let table = CountTable::new(&x, &Alphabet::binary(), 15).unwrap();
        let renewal = Selector::new(&table, PenaltyShape::Bic, SelectOptions::renewal(15)).unwrap();
        let complete = Selector::new(
            &table,
            PenaltyShape::Bic,
            SelectOptions {
                d_max: 8,
                policy: FeasibilityPolicy::FeasibleOnly,
                universe: Universe::Complete,
            },
        )
        .unwrap();
        let boot_opts = BootstrapOptions {
            samples: 20,
            seed: 41,
            replicate: r as u64,
        };
        let boot = renewal.with_shape(PenaltyShape::PerLeaf(bootstrap_shape(&renewal, &x, &boot_opts).unwrap()));
        for selector in [&renewal, &complete, &boot] {
            paths += 1;
            let sizes: Vec<usize> = grid.iter().map(|&c| selector.solve(c).unwrap().tree.size()).collect();
            violations += sizes.windows(2).filter(|w| w[1] > w[0]).count();
        }
    }
    outcome(violations == 0, format!("{violations} violations over {paths} paths"))
}

fn reproducible_csvs() -> Outcome {
    let config = |execution| ExperimentConfig {
        seed: 7,
        replicates: 50,
        execution,
        ..ExperimentConfig::new(Experiment::Table1)
    };
    let dirs: Vec<tempfile::TempDir> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    run_experiment(&config(Execution::Sequential), dirs[0].path()).unwrap();
    run_experiment(&config(Execution::Sequential), dirs[1].path()).unwrap();
    run_experiment(&config(Execution::Parallel), dirs[2].path()).unwrap();
    let mut differing = Vec::new();
    for file in ["table1.csv", "table1_rows.csv"] {
        let reference = fs::read(dirs[0].path().join(file)).unwrap();
        for d in &dirs[1..] {
            if fs::read(d.path().join(file)).unwrap() != reference {
                differing.push(file);
            }
        }
    }
    outcome(
        differing.is_empty(),
        format!("sequential twice and parallel once; differing files: {differing:?}"),
    )
}

fn main() {
    // `cargo test` passes harness flags; only a listing request needs an answer.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let table = comparison();
    let results = [
        ("1 dp-equals-brute-force", dp_matches_brute_force()),
        ("2 pythagorean-identity", pythagorean_identity()),
        ("3 bias-variance-curve", bias_variance_curve()),
        ("4 bic-oracle-ratio", bic_ratio(&table)),
        ("5 slope-improves-bic", slope_beats_bic(&table)),
        ("6 slope-jump", slope_jump()),
        ("7 renewal-simulation", renewal_simulation()),
        ("8 path-monotonicity", path_monotonicity()),
        ("9 reproducible-csvs", reproducible_csvs()),
    ];
    let passed = results.iter().filter(|(_, o)| o.pass).count();
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {passed}/{} criteria passed", results.len());
}
