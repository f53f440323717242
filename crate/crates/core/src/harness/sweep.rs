use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Architecture, Family, HarnessError, SweepConfig};
use crate::diagnosis::{evaluate_accuracy, train_standalone, train_unified, Diagnose, Diagnoser, InstanceSet, TransferTrainer};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::scenario::generate_layout;
use crate::sim::{AssignmentPlan, Instance, Simulation};
use crate::Result;

/// One (architecture, family, density, seed) measurement. Failed jobs keep
/// their key and carry the error text instead of an accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub architecture: Architecture,
    pub family: Family,
    pub density: usize,
    pub seed: u64,
    pub accuracy: Option<f64>,
    pub train_instances: usize,
    pub test_instances: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<RunRow>,
}

/// Seed-aggregated accuracy of one table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub architecture: Architecture,
    pub family: Family,
    pub density: usize,
    pub accuracy_mean: f64,
    /// Population standard deviation over seeds.
    pub accuracy_std: f64,
    pub seeds: usize,
}

/// Intermediate data of one job, exposed for inspection and examples.
#[derive(Debug, Clone)]
pub struct CellRun {
    pub train: Vec<Instance>,
    pub test: Vec<Instance>,
    pub diagnosers: [(Architecture, Diagnoser); 3],
}

/// Shuffles epoch ids with the seed's split stream and returns
/// (train epochs, test epochs), each sorted.
pub fn split_epochs(epochs: usize, train_fraction: f64, seed: u64) -> (Vec<u64>, Vec<u64>) {
    let mut ids: Vec<u64> = (0..epochs as u64).collect();
    ids.shuffle(&mut stream_rng(seed, &[stream::SPLIT]));
    let k = ((train_fraction * epochs as f64).round() as usize).clamp(1, epochs.saturating_sub(1).max(1));
    let mut train = ids[..k].to_vec();
    let mut test = ids[k..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// Simulates one (density, seed) job and trains all three architectures.
pub fn run_cell(config: &SweepConfig, density: usize, seed: u64) -> Result<CellRun> {
    let scenario = config.scenario_for(density, seed);
    let job_seed = scenario.rng_seed;
    let layout = generate_layout(&scenario)?;
    let plan = AssignmentPlan::random(&layout, config.epochs, config.misconfig_fraction, derive_seed(job_seed, &[stream::MISCONFIG]));
    let mut sim = Simulation::with_layout(scenario, layout.clone())?;
    let (train_epochs, _) = split_epochs(config.epochs, config.train_fraction, job_seed);

    let mut train = Vec::new();
    let mut test = Vec::new();
    for e in 0..config.epochs {
        let epoch_layout = plan.layout_for(&layout, e)?;
        let out = sim.run_epoch_with(&epoch_layout, e as u64)?;
        if train_epochs.binary_search(&(e as u64)).is_ok() {
            train.extend(out.instances);
        } else {
            test.extend(out.instances);
        }
    }

    let train_set = InstanceSet::new(train.clone());
    let by_cell = train_set.by_cell();
    let standalone = by_cell
        .iter()
        .map(|(&c, set)| Ok((c, train_standalone(c, set, &config.svm)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let unified = train_unified(&train_set, &config.svm)?;
    let trainer = TransferTrainer::new(&train_set, &config.svm)?;
    let transfer = by_cell
        .keys()
        .map(|&c| Ok((c, trainer.ensemble(c, config.beta)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;

    Ok(CellRun {
        train,
        test,
        diagnosers: [
            (Architecture::Standalone, Diagnoser::Standalone(standalone)),
            (Architecture::Unified, Diagnoser::Unified(unified)),
            (Architecture::Transfer, Diagnoser::Transfer(transfer)),
        ],
    })
}

fn score_cell(config: &SweepConfig, density: usize, seed: u64) -> Vec<RunRow> {
    let row = |architecture, family, accuracy, train_instances, test_instances, error| RunRow {
        architecture,
        family,
        density,
        seed,
        accuracy,
        train_instances,
        test_instances,
        error,
    };
    let scored = run_cell(config, density, seed).and_then(|run| {
        let mut rows = Vec::new();
        for family in Family::ALL {
            let test: Vec<Instance> = run.test.iter().filter(|i| family.contains(i.label)).cloned().collect();
            for (arch, d) in &run.diagnosers {
                let acc = evaluate_accuracy(d as &dyn Diagnose, &test)?;
                rows.push(row(*arch, family, Some(acc), run.train.len(), test.len(), None));
            }
        }
        Ok(rows)
    });
    match scored {
        Ok(rows) => rows,
        Err(e) => {
            let msg = e.to_string();
            Family::ALL
                .into_iter()
                .flat_map(|f| Architecture::ALL.map(|a| (a, f)))
                .map(|(a, f)| row(a, f, None, 0, 0, Some(msg.clone())))
                .collect()
        }
    }
}

/// Runs every (density, seed) job. A failing job yields error rows for its
/// key and the sweep continues. Rows come back in canonical
/// (architecture, family, density, seed) order.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult, HarnessError> {
    config.validate()?;
    let jobs: Vec<(usize, u64)> = config
        .densities
        .iter()
        .flat_map(|&d| config.seeds.iter().map(move |&s| (d, s)))
        .collect();
    let mut rows: Vec<RunRow> = jobs.par_iter().flat_map_iter(|&(d, s)| score_cell(config, d, s)).collect();
    rows.sort_by(|a, b| (a.architecture, a.family, a.density, a.seed).cmp(&(b.architecture, b.family, b.density, b.seed)));
    Ok(SweepResult { rows })
}

/// Mean and population standard deviation per (architecture, family,
/// density), skipping error rows.
pub fn summarize(result: &SweepResult) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(Architecture, Family, usize), Vec<f64>> = BTreeMap::new();
    for r in &result.rows {
        if let Some(a) = r.accuracy {
            groups.entry((r.architecture, r.family, r.density)).or_default().push(a);
        }
    }
    groups
        .into_iter()
        .map(|((architecture, family, density), v)| {
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            SummaryRow {
                architecture,
                family,
                density,
                accuracy_mean: mean,
                accuracy_std: var.sqrt(),
                seeds: v.len(),
            }
        })
        .collect()
}
