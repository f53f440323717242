use serde::{Deserialize, Serialize};

use super::{Diagnoser, DiagnosisError};
use crate::sim::FEATURE_NAMES;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// On-disk form of a trained diagnoser.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub feature_names: Vec<String>,
    pub diagnoser: Diagnoser,
}

pub fn export_model(diagnoser: &Diagnoser) -> Result<String, DiagnosisError> {
    let file = ModelFile {
        schema_version: MODEL_SCHEMA_VERSION,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        diagnoser: diagnoser.clone(),
    };
    serde_json::to_string_pretty(&file).map_err(|e| DiagnosisError::Model(e.to_string()))
}

pub fn import_model(text: &str) -> Result<Diagnoser, DiagnosisError> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| DiagnosisError::Model(e.to_string()))?;
    if file.schema_version != MODEL_SCHEMA_VERSION {
        return Err(DiagnosisError::Model(format!(
            "schema version {} (expected {MODEL_SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    if file.feature_names.iter().map(String::as_str).ne(FEATURE_NAMES) {
        return Err(DiagnosisError::Model("feature schema does not match".into()));
    }
    Ok(file.diagnoser)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnosis::{InstanceSet, SvmParams, TransferTrainer};
    use crate::scenario::{CellId, ConfigClass};
    use crate::sim::{FeatureVector, Instance, FEATURE_COUNT};
    use std::collections::BTreeMap;

    fn data() -> InstanceSet {
        (0..36)
            .map(|i| {
                let mut f = [0.0; FEATURE_COUNT];
                for (d, v) in f.iter_mut().enumerate() {
                    *v = ((i * 7 + d * 3) % 11) as f64 / 3.0 + (i % 3) as f64 * 0.1;
                }
                Instance {
                    cell: CellId(1 + (i % 3) as u32),
                    epoch: i as u64,
                    features: FeatureVector(f),
                    label: ConfigClass::ALL[i % 4],
                }
            })
            .collect()
    }

    #[test]
    fn transfer_model_round_trips_exactly() {
        let trainer = TransferTrainer::new(&data(), &SvmParams::default()).unwrap();
        let map: BTreeMap<CellId, _> = trainer.cells().map(|c| (c, trainer.ensemble(c, 1.0).unwrap())).collect();
        let d = Diagnoser::Transfer(map);
        let text = export_model(&d).unwrap();
        assert_eq!(import_model(&text).unwrap(), d);
    }

    #[test]
    fn wrong_version_or_schema_is_rejected() {
        let d = Diagnoser::Unified(crate::diagnosis::Classifier::Constant { label: ConfigClass::Nominal });
        let text = export_model(&d).unwrap();
        assert!(import_model(&text.replace("\"schema_version\": 1", "\"schema_version\": 2")).is_err());
        assert!(import_model(&text.replace("\"dcr\"", "\"dropped\"")).is_err());
        assert!(import_model("{").is_err());
    }
}
