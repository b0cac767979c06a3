//! Versioned on-disk model format. Files are JSON with a format tag, a
//! version, and a kind discriminator; floats round-trip bit-exactly through
//! the shortest-representation encoding.

use std::fs;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::{MFModel, MarkovSequentialModel, ModelError, RatingModel};

const FORMAT: &str = "hybridrec-model";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    kind: String,
    model: T,
}

fn save<T: Serialize>(model: &T, kind: &str, path: &Path) -> Result<(), ModelError> {
    let envelope = Envelope {
        format: FORMAT.to_string(),
        version: VERSION,
        kind: kind.to_string(),
        model,
    };
    let json = serde_json::to_string(&envelope)
        .map_err(|e| ModelError::Format(format!("serialize: {e}")))?;
    fs::write(path, json + "\n")?;
    Ok(())
}

fn load<T: DeserializeOwned>(kind: &str, path: &Path) -> Result<T, ModelError> {
    let text = fs::read_to_string(path)?;
    // Check the envelope before touching the payload so mismatches report
    // precisely.
    let envelope: Envelope<serde_json::Value> = serde_json::from_str(&text)
        .map_err(|e| ModelError::Format(format!("not a {FORMAT} v{VERSION} file: {e}")))?;
    if envelope.format != FORMAT {
        return Err(ModelError::Format(format!(
            "unexpected format tag {:?}, wanted {FORMAT:?}",
            envelope.format
        )));
    }
    if envelope.version != VERSION {
        return Err(ModelError::Format(format!(
            "unsupported version {}, this build reads version {VERSION}",
            envelope.version
        )));
    }
    if envelope.kind != kind {
        return Err(ModelError::Format(format!(
            "model kind {:?} does not match requested {kind:?}",
            envelope.kind
        )));
    }
    serde_json::from_value(envelope.model)
        .map_err(|e| ModelError::Format(format!("corrupt {kind} payload: {e}")))
}

pub fn save_mf(model: &MFModel, path: &Path) -> Result<(), ModelError> {
    save(model, "mf_bpr", path)
}

pub fn load_mf(path: &Path) -> Result<MFModel, ModelError> {
    load("mf_bpr", path)
}

pub fn save_rating(model: &RatingModel, path: &Path) -> Result<(), ModelError> {
    save(model, "rating_mf", path)
}

pub fn load_rating(path: &Path) -> Result<RatingModel, ModelError> {
    load("rating_mf", path)
}

pub fn save_markov(model: &MarkovSequentialModel, path: &Path) -> Result<(), ModelError> {
    save(model, "markov", path)
}

pub fn load_markov(path: &Path) -> Result<MarkovSequentialModel, ModelError> {
    load("markov", path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, RawRecord};
    use crate::recmodels::{train_markov_seq, train_mf_bpr, train_rating_mf, TrainConfig};

    fn corpus() -> Corpus {
        Corpus::from_raw_records(
            vec![
                RawRecord {
                    user: "a".into(),
                    item: "x".into(),
                    rating: Some(4.0),
                    timestamp: Some(1),
                },
                RawRecord {
                    user: "a".into(),
                    item: "y".into(),
                    rating: Some(2.0),
                    timestamp: Some(2),
                },
                RawRecord {
                    user: "b".into(),
                    item: "x".into(),
                    rating: Some(5.0),
                    timestamp: Some(1),
                },
            ],
            (1.0, 5.0),
        )
        .unwrap()
    }

    #[test]
    fn round_trips_are_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = corpus();
        let config = TrainConfig {
            epochs: 3,
            ..TrainConfig::default()
        };

        let mf = train_mf_bpr(&corpus, &config).unwrap();
        let path = dir.path().join("mf.json");
        save_mf(&mf, &path).unwrap();
        assert_eq!(load_mf(&path).unwrap(), mf);

        let rating = train_rating_mf(&corpus, &config).unwrap();
        let path = dir.path().join("rating.json");
        save_rating(&rating, &path).unwrap();
        assert_eq!(load_rating(&path).unwrap(), rating);

        let markov = train_markov_seq(&corpus);
        let path = dir.path().join("markov.json");
        save_markov(&markov, &path).unwrap();
        assert_eq!(load_markov(&path).unwrap(), markov);
    }

    #[test]
    fn corrupt_and_mismatched_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        std::fs::write(&path, "{not json").unwrap();
        assert!(matches!(load_mf(&path), Err(ModelError::Format(_))));

        let corpus = corpus();
        let mf = train_mf_bpr(
            &corpus,
            &TrainConfig {
                epochs: 0,
                ..TrainConfig::default()
            },
        )
        .unwrap();
        save_mf(&mf, &path).unwrap();
        let err = load_rating(&path).unwrap_err();
        assert!(err.to_string().contains("kind"), "{err}");

        let tampered = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"version\":1", "\"version\":9");
        std::fs::write(&path, tampered).unwrap();
        let err = load_mf(&path).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }
}
