//! Misconfiguration diagnosis: a linear max-margin base learner and the
//! standalone, unified and transfer architectures built from it.

mod architectures;
mod binning;
mod persist;
mod svm;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::scenario::{CellId, ConfigClass};
use crate::sim::{FeatureVector, Instance};

pub use architectures::{
    diagnose, train_standalone, train_transfer, train_unified, Classifier, Diagnoser, TransferEnsemble,
    TransferMember, TransferTrainer, DEFAULT_BETA,
};
pub use binning::{cell_divergence, entropy_bits, info_gain, info_gains, jeffreys, BinScheme, DEFAULT_BINS, SMOOTHING_ALPHA};
pub use persist::{export_model, import_model, ModelFile, MODEL_SCHEMA_VERSION};
pub use svm::{predict, train_linear_classifier, LinearModel, SvmParams};

#[derive(Debug, Error)]
pub enum DiagnosisError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("training set has a single class ({0}); nothing to separate")]
    DegenerateTraining(ConfigClass),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("model file: {0}")]
    Model(String),
}

/// A set of labeled instances sharing the fixed 13-dimension KPI schema.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InstanceSet {
    instances: Vec<Instance>,
}

impl InstanceSet {
    pub fn new(instances: Vec<Instance>) -> Self {
        InstanceSet { instances }
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn into_inner(self) -> Vec<Instance> {
        self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Instances grouped by cell, in cell-id order.
    pub fn by_cell(&self) -> BTreeMap<CellId, InstanceSet> {
        let mut out: BTreeMap<CellId, InstanceSet> = BTreeMap::new();
        for inst in &self.instances {
            out.entry(inst.cell).or_default().instances.push(inst.clone());
        }
        out
    }

    pub fn of_cell(&self, cell: CellId) -> InstanceSet {
        InstanceSet::new(self.instances.iter().filter(|i| i.cell == cell).cloned().collect())
    }

    /// Per-class counts indexed by [`ConfigClass::index`].
    pub fn class_counts(&self) -> [usize; ConfigClass::COUNT] {
        let mut c = [0; ConfigClass::COUNT];
        for inst in &self.instances {
            c[inst.label.index()] += 1;
        }
        c
    }

    pub(crate) fn require_nonempty(&self, what: &str) -> Result<(), DiagnosisError> {
        if self.is_empty() {
            Err(DiagnosisError::Domain(format!("{what}: empty instance set")))
        } else {
            Ok(())
        }
    }
}

impl FromIterator<Instance> for InstanceSet {
    fn from_iter<T: IntoIterator<Item = Instance>>(iter: T) -> Self {
        InstanceSet::new(iter.into_iter().collect())
    }
}

/// Anything that maps a KPI vector observed on a cell to a configuration class.
pub trait Diagnose {
    fn diagnose(&self, cell: CellId, features: &FeatureVector) -> Result<ConfigClass, DiagnosisError>;
}

/// Fraction of `test` whose diagnosed class equals its label.
pub fn evaluate_accuracy<D: Diagnose + ?Sized>(diagnoser: &D, test: &[Instance]) -> Result<f64, DiagnosisError> {
    if test.is_empty() {
        return Err(DiagnosisError::Domain("accuracy over an empty test set".into()));
    }
    let mut correct = 0usize;
    for inst in test {
        if diagnoser.diagnose(inst.cell, &inst.features)? == inst.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}
