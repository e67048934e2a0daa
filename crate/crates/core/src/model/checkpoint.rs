//! `VCKPT001` checkpoints: network spec, temperature, seed and training
//! history in the JSON header, parameters as little-endian f32.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{self, VCKPT_MAGIC};

use super::classifier::Classifier;
use super::spec::NetworkSpec;
use super::train::TrainHistory;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub classifier: Classifier,
    pub seed: u64,
    pub history: TrainHistory,
    pub config_hash: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    spec: NetworkSpec,
    temperature: f64,
    seed: u64,
    param_count: usize,
    history: TrainHistory,
    config_hash: Option<String>,
}

impl Checkpoint {
    pub fn encode(&self) -> Result<Vec<u8>> {
        let header = Header {
            spec: self.classifier.spec().clone(),
            temperature: self.classifier.temperature(),
            seed: self.seed,
            param_count: self.classifier.params().len(),
            history: self.history.clone(),
            config_hash: self.config_hash.clone(),
        };
        format::encode(VCKPT_MAGIC, &header, self.classifier.params())
    }

    pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
        let (h, params): (Header, Vec<f32>) = format::decode(VCKPT_MAGIC, bytes)?;
        if params.len() != h.param_count {
            return Err(Error::Format(format!(
                "VCKPT001: header declares {} parameters, payload has {}",
                h.param_count,
                params.len()
            )));
        }
        let mut classifier = Classifier::new(h.spec, params)?;
        classifier.set_temperature(h.temperature)?;
        Ok(Checkpoint { classifier, seed: h.seed, history: h.history, config_hash: h.config_hash })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        format::write_file(path, &self.encode()?)
    }

    pub fn read(path: &Path) -> Result<Checkpoint> {
        Checkpoint::decode(&format::read_file(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::spec::build_alexnet2dc;
    use crate::model::spec::Plane;
    use crate::model::train::EpochRecord;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut clf = Classifier::init(build_alexnet2dc([32; 3], Plane::Sagittal, 5, 0.25).unwrap(), 9).unwrap();
        clf.set_temperature(1.7).unwrap();
        let ck = Checkpoint {
            classifier: clf,
            seed: 9,
            history: TrainHistory {
                epochs: vec![EpochRecord { epoch: 1, train_loss: 0.69, validation_loss: 0.7, train_accuracy: 0.5 }],
            },
            config_hash: Some("abc".into()),
        };
        let bytes = ck.encode().unwrap();
        let back = Checkpoint::decode(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.encode().unwrap(), bytes);
        let mut bad = bytes.clone();
        bad[1] = b'X';
        assert!(matches!(Checkpoint::decode(&bad), Err(Error::Format(_))));
        assert!(Checkpoint::decode(&bytes[..bytes.len() - 4]).is_err());
    }
}
