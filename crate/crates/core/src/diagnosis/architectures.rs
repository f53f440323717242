use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::binning::{cell_histograms, dimension_weights, info_gains, weighted_divergence, BinScheme, DEFAULT_BINS};
use super::svm::{predict, train_linear_classifier, LinearModel, SvmParams};
use super::{Diagnose, DiagnosisError, InstanceSet};
use crate::scenario::{CellId, ConfigClass};
use crate::sim::{FeatureVector, FEATURE_COUNT};

pub const DEFAULT_BETA: f64 = 1.0;

/// A trained base model. Training data with a single class yields a
/// constant predictor instead of a linear model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classifier {
    Linear(LinearModel),
    Constant { label: ConfigClass },
}

impl Classifier {
    pub fn train(set: &InstanceSet, params: &SvmParams) -> Result<Self, DiagnosisError> {
        match train_linear_classifier(set, None, params) {
            Ok(m) => Ok(Classifier::Linear(m)),
            Err(DiagnosisError::DegenerateTraining(label)) => Ok(Classifier::Constant { label }),
            Err(e) => Err(e),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Classifier::Constant { .. })
    }

    /// Predicted label and its score (0 for a constant predictor).
    pub fn predict(&self, f: &FeatureVector) -> (ConfigClass, f64) {
        match self {
            Classifier::Linear(m) => {
                let (label, scores) = predict(m, f);
                let s = scores.iter().find(|(c, _)| *c == label).map_or(0.0, |p| p.1);
                (label, s)
            }
            Classifier::Constant { label } => (*label, 0.0),
        }
    }
}

/// A model trained on one cell's instances only.
pub fn train_standalone(cell: CellId, set: &InstanceSet, params: &SvmParams) -> Result<Classifier, DiagnosisError> {
    set.require_nonempty("standalone training")?;
    if let Some(other) = set.instances().iter().find(|i| i.cell != cell) {
        return Err(DiagnosisError::Contract(format!(
            "standalone model for cell {cell} given an instance of cell {}",
            other.cell
        )));
    }
    Classifier::train(set, params)
}

/// One model over every cell's instances.
pub fn train_unified(set: &InstanceSet, params: &SvmParams) -> Result<Classifier, DiagnosisError> {
    set.require_nonempty("unified training")?;
    Classifier::train(set, params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMember {
    pub cell: CellId,
    pub divergence: f64,
    pub weight: f64,
    pub model: Classifier,
}

/// Per-cell models voting on a target cell's instances, weighted by
/// ω = exp(−β·D) of their divergence from the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferEnsemble {
    pub target: CellId,
    pub beta: f64,
    pub members: Vec<TransferMember>,
}

/// Shared state for building transfer ensembles over one training pool:
/// the bin scheme and InfoGain weights of the pooled data, and each cell's
/// histograms and model. Per-cell models do not depend on the target, so
/// they are trained once here.
#[derive(Debug, Clone)]
pub struct TransferTrainer {
    pub scheme: BinScheme,
    pub gains: [f64; FEATURE_COUNT],
    dim_weights: [f64; FEATURE_COUNT],
    cells: BTreeMap<CellId, (Vec<Vec<f64>>, Classifier)>,
}

impl TransferTrainer {
    pub fn new(all: &InstanceSet, params: &SvmParams) -> Result<Self, DiagnosisError> {
        all.require_nonempty("transfer training")?;
        let scheme = BinScheme::fit(all, DEFAULT_BINS)?;
        let gains = info_gains(all, &scheme)?;
        let groups: Vec<(CellId, InstanceSet)> = all.by_cell().into_iter().collect();
        let built: Vec<(CellId, (Vec<Vec<f64>>, Classifier))> = groups
            .par_iter()
            .map(|(cell, set)| Ok((*cell, (cell_histograms(set, &scheme), Classifier::train(set, params)?))))
            .collect::<Result<_, DiagnosisError>>()?;
        Ok(TransferTrainer {
            dim_weights: dimension_weights(&gains),
            scheme,
            gains,
            cells: built.into_iter().collect(),
        })
    }

    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        self.cells.keys().copied()
    }

    pub fn model(&self, cell: CellId) -> Option<&Classifier> {
        self.cells.get(&cell).map(|c| &c.1)
    }

    pub fn ensemble(&self, target: CellId, beta: f64) -> Result<TransferEnsemble, DiagnosisError> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(DiagnosisError::Domain(format!("beta must be positive, got {beta}")));
        }
        let (target_hist, _) = self
            .cells
            .get(&target)
            .ok_or_else(|| DiagnosisError::Domain(format!("target cell {target} has no training instances")))?;
        let mut members = Vec::with_capacity(self.cells.len());
        for (&cell, (hist, model)) in &self.cells {
            let (divergence, weight) = if cell == target {
                (0.0, 1.0)
            } else {
                let d = weighted_divergence(target_hist, hist, &self.dim_weights)?;
                // Clamped so a very dissimilar cell keeps a positive weight.
                (d, (-beta * d).exp().max(f64::MIN_POSITIVE))
            };
            members.push(TransferMember {
                cell,
                divergence,
                weight,
                model: model.clone(),
            });
        }
        Ok(TransferEnsemble { target, beta, members })
    }
}

pub fn train_transfer(target: CellId, all: &InstanceSet, beta: f64, params: &SvmParams) -> Result<TransferEnsemble, DiagnosisError> {
    TransferTrainer::new(all, params)?.ensemble(target, beta)
}

/// Weighted vote. The class with the largest summed ω wins; ties go to the
/// larger summed ω·score, then to enum order.
pub fn diagnose(ensemble: &TransferEnsemble, f: &FeatureVector) -> Result<ConfigClass, DiagnosisError> {
    if ensemble.members.is_empty() {
        return Err(DiagnosisError::Contract(format!("empty ensemble for cell {}", ensemble.target)));
    }
    let mut votes = [0.0; ConfigClass::COUNT];
    let mut scores = [0.0; ConfigClass::COUNT];
    for m in &ensemble.members {
        if !(m.weight > 0.0 && m.weight.is_finite()) {
            return Err(DiagnosisError::Contract(format!("cell {} has vote weight {}", m.cell, m.weight)));
        }
        let (label, s) = m.model.predict(f);
        votes[label.index()] += m.weight;
        scores[label.index()] += m.weight * s;
    }
    let mut best = 0;
    for k in 1..ConfigClass::COUNT {
        if votes[k] > votes[best] || (votes[k] == votes[best] && scores[k] > scores[best]) {
            best = k;
        }
    }
    Ok(ConfigClass::from_index(best).expect("class index in range"))
}

/// A trained diagnosis architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnoser {
    /// One model per cell, trained on that cell alone.
    Standalone(BTreeMap<CellId, Classifier>),
    /// One model for every cell.
    Unified(Classifier),
    /// One ensemble per target cell.
    Transfer(BTreeMap<CellId, TransferEnsemble>),
}

impl Diagnose for Diagnoser {
    fn diagnose(&self, cell: CellId, f: &FeatureVector) -> Result<ConfigClass, DiagnosisError> {
        let missing = || DiagnosisError::Contract(format!("no model for cell {cell}"));
        match self {
            Diagnoser::Standalone(m) => Ok(m.get(&cell).ok_or_else(missing)?.predict(f).0),
            Diagnoser::Unified(m) => Ok(m.predict(f).0),
            Diagnoser::Transfer(m) => diagnose(m.get(&cell).ok_or_else(missing)?, f),
        }
    }
}

impl Diagnose for TransferEnsemble {
    fn diagnose(&self, _cell: CellId, f: &FeatureVector) -> Result<ConfigClass, DiagnosisError> {
        diagnose(self, f)
    }
}

impl Diagnose for Classifier {
    fn diagnose(&self, _cell: CellId, f: &FeatureVector) -> Result<ConfigClass, DiagnosisError> {
        Ok(self.predict(f).0)
    }
}
