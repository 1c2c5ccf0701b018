//! Instance files and generators.
//!
//! An instance is a matroid description plus the ordered parts of the online
//! partition matroid, stored as JSON (optionally gzip-compressed when the file
//! name ends in `.gz`).

mod generators;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::element::ElementId;
use crate::matroid::MatroidDescription;
use crate::online::{PartitionInstance, SapError};

pub use generators::{
    gen_adversarial, gen_gammoid, gen_graphic, gen_laminar, gen_random_bipartite, gen_transversal,
    generate, lift_partitioning, parse_params, Params, FAMILIES,
};

pub const FORMAT_VERSION: &str = "mirecourse-instance/1";

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("parse error at `{path}` (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported instance version `{0}` (expected `{FORMAT_VERSION}`)")]
    Version(String),
    #[error(transparent)]
    Invalid(#[from] SapError),
    #[error("generation failed: {0}")]
    Generation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub generator: String,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub version: String,
    pub matroid: MatroidDescription,
    pub parts: Vec<Vec<ElementId>>,
    #[serde(default)]
    pub metadata: Metadata,
}

impl InstanceFile {
    pub fn new(matroid: MatroidDescription, parts: Vec<Vec<ElementId>>, metadata: Metadata) -> Self {
        Self {
            version: FORMAT_VERSION.to_string(),
            matroid,
            parts,
            metadata,
        }
    }

    /// Number of arrivals.
    pub fn n(&self) -> usize {
        self.parts.len()
    }

    pub fn to_instance(&self) -> Result<PartitionInstance, InstanceError> {
        Ok(PartitionInstance::new(
            self.matroid.clone(),
            self.parts.clone(),
        )?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    /// Parses and validates an instance, reporting the failing field path
    /// and position on malformed input.
    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: Self = serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            let inner = err.into_inner();
            InstanceError::Parse {
                path,
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        })?;
        if file.version != FORMAT_VERSION {
            return Err(InstanceError::Version(file.version));
        }
        file.to_instance()?;
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self, InstanceError> {
        let mut reader: Box<dyn Read> = Box::new(BufReader::new(File::open(path)?));
        if is_gz(path) {
            reader = Box::new(GzDecoder::new(reader));
        }
        let mut text = String::new();
        reader.read_to_string(&mut text)?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), InstanceError> {
        let file = BufWriter::new(File::create(path)?);
        if is_gz(path) {
            let mut gz = GzEncoder::new(file, Compression::default());
            gz.write_all(self.to_json().as_bytes())?;
            gz.finish()?.flush()?;
        } else {
            let mut file = file;
            file.write_all(self.to_json().as_bytes())?;
            file.flush()?;
        }
        Ok(())
    }
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}
