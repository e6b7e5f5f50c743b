//! Trained systems on disk.
//!
//! A system directory holds `manifest.toml`, the sensing matrix as CSV, one
//! binary codebook per stage and the training trace. The manifest embeds
//! the full experiment configuration, so the directory alone reproduces
//! the evaluation.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::io::{decode_codebook, encode_codebook, parse_matrix_csv, write_matrix_csv};
use crate::model::SensingModel;
use crate::ssc::{SscCodec, SscManifest};

use super::config::ExperimentConfig;
use super::experiment::{Quantizer, TrainedSystem};

pub const MANIFEST_FILE: &str = "manifest.toml";
const MATRIX_FILE: &str = "sensing_matrix.csv";
const TRACE_FILE: &str = "training_trace.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub sensing_matrix: String,
    /// Codebook files in stage order, relative to the manifest.
    #[serde(default)]
    pub codebooks: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_distortion: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssc: Option<SscManifest>,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        m.config.validate()?;
        let plain = |f: &String| !f.is_empty() && !f.contains(['/', '\\']) && f != ".." && f != ".";
        if !plain(&m.sensing_matrix) || !m.codebooks.iter().all(plain) {
            return config("manifest file names must be plain names inside the system directory");
        }
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }
}

pub fn save_system(dir: &Path, sys: &TrainedSystem) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(MATRIX_FILE), write_matrix_csv(sys.model.phi(), Some(sys.config.seed)))?;
    let mut codebooks = Vec::new();
    for (l, cb) in sys.codebooks().into_iter().enumerate() {
        let name = format!("stage{l}.cb");
        fs::write(dir.join(&name), encode_codebook(cb))?;
        codebooks.push(name);
    }
    fs::write(dir.join(TRACE_FILE), sys.report.to_csv())?;
    let manifest = RunManifest {
        sensing_matrix: MATRIX_FILE.into(),
        codebooks,
        final_distortion: sys.report.final_distortion(),
        ssc: match &sys.quantizer {
            Quantizer::Ssc { codec, .. } => Some(codec.manifest()),
            _ => None,
        },
        config: sys.config.clone(),
    };
    fs::write(dir.join(MANIFEST_FILE), manifest.to_toml())?;
    Ok(manifest)
}

pub fn load_system(dir: &Path) -> Result<TrainedSystem> {
    let manifest = RunManifest::from_toml(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?;
    let (phi, _) = parse_matrix_csv(&fs::read_to_string(dir.join(&manifest.sensing_matrix))?)?;
    let model = SensingModel::new(phi, manifest.config.sigma_w2)?;
    let codebooks = manifest
        .codebooks
        .iter()
        .map(|f| decode_codebook(&fs::read(dir.join(f))?))
        .collect::<Result<Vec<_>>>()?;
    let mut sys = TrainedSystem::from_parts(manifest.config, model, codebooks)?;
    if let (Some(stored), Quantizer::Ssc { codec, .. }) = (&manifest.ssc, &mut sys.quantizer) {
        // keep the stored scalar codebooks rather than retraining them
        *codec = SscCodec::from_manifest(stored)?;
    }
    Ok(sys)
}
