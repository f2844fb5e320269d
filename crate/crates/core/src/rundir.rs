//! On-disk layout of a run directory.
//!
//! ```text
//! <rundir>/
//!   suite.json              copy of the input suite
//!   run.json                metadata: tool version, timestamps, config echo
//!   archives/<sha256>.json  one response archive per repetition
//!   matrix.json             pass/fail outcomes of a repeated run
//!   findings.json           detector and inference findings
//!   stabilized_suite.json   suite with flaky assertions disabled
//!   annotations.txt         one annotation line per disabled assertion
//!   stabilization.json      #RF and per-test disabled assertions
//!   categories.json         per-category test counts
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::detector::FlakinessFinding;
use crate::executor::{Captured, ExecutionMatrix, ResponseRecord};
use crate::model::{parse_suite, serialize_suite, ModelError, TestSuite};

pub const SUITE_FILE: &str = "suite.json";
pub const META_FILE: &str = "run.json";
pub const ARCHIVE_DIR: &str = "archives";
pub const MATRIX_FILE: &str = "matrix.json";
pub const FINDINGS_FILE: &str = "findings.json";
pub const STABILIZED_FILE: &str = "stabilized_suite.json";
pub const ANNOTATIONS_FILE: &str = "annotations.txt";
pub const STABILIZATION_FILE: &str = "stabilization.json";
pub const CATEGORIES_FILE: &str = "categories.json";

#[derive(Debug, Error)]
pub enum RunDirError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{0} is missing")]
    Missing(PathBuf),
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Suite {
        path: PathBuf,
        #[source]
        source: ModelError,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub tool_version: String,
    pub created_at: String,
    pub updated_at: String,
    pub base_url: Option<String>,
    pub call_timeout_ms: u64,
    pub test_budget_ms: u64,
    pub reset_hook: Option<String>,
    /// Whether SUT state was reset between repetitions.
    pub state_reset_between_repetitions: bool,
    pub baseline: Option<String>,
    #[serde(default)]
    pub detect_archives: Vec<String>,
    #[serde(default)]
    pub repetition_archives: Vec<String>,
    #[serde(default)]
    pub stages: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResponses {
    pub test: String,
    pub responses: Vec<ResponseRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Archive {
    pub suite: String,
    pub role: String,
    pub repetition: usize,
    pub tests: Vec<TestResponses>,
}

impl Archive {
    pub fn new(suite: &TestSuite, role: &str, repetition: usize, captured: &Captured) -> Self {
        Self {
            suite: suite.name.clone(),
            role: role.to_string(),
            repetition,
            tests: suite
                .tests
                .iter()
                .filter_map(|t| {
                    captured.get(&t.name).map(|r| TestResponses {
                        test: t.name.clone(),
                        responses: r.clone(),
                    })
                })
                .collect(),
        }
    }

    pub fn captured(&self) -> Captured {
        self.tests
            .iter()
            .map(|t| (t.test.clone(), t.responses.clone()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub suite_name: String,
    pub repetitions: usize,
    pub reset_hook: Option<String>,
    pub outcomes: BTreeMap<String, Vec<bool>>,
    pub archives: Vec<String>,
}

impl MatrixDoc {
    pub fn to_matrix(&self) -> ExecutionMatrix {
        ExecutionMatrix {
            suite_name: self.suite_name.clone(),
            repetitions: self.repetitions,
            outcomes: self.outcomes.clone(),
            captured: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FindingsDoc {
    pub findings: Vec<FlakinessFinding>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn open(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn create(root: impl Into<PathBuf>) -> Result<Self, RunDirError> {
        let root = root.into();
        fs::create_dir_all(root.join(ARCHIVE_DIR)).map_err(|source| RunDirError::Io {
            path: root.clone(),
            source,
        })?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn exists(&self, name: &str) -> bool {
        self.path(name).exists()
    }

    pub fn read_bytes(&self, name: &str) -> Result<Vec<u8>, RunDirError> {
        let path = self.path(name);
        fs::read(&path).map_err(|source| {
            if source.kind() == io::ErrorKind::NotFound {
                RunDirError::Missing(path)
            } else {
                RunDirError::Io { path, source }
            }
        })
    }

    pub fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<(), RunDirError> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| RunDirError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        fs::write(&path, bytes).map_err(|source| RunDirError::Io { path, source })
    }

    pub fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<T, RunDirError> {
        let bytes = self.read_bytes(name)?;
        serde_json::from_slice(&bytes).map_err(|source| RunDirError::Json {
            path: self.path(name),
            source,
        })
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), RunDirError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("documents serialize");
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn read_suite(&self, name: &str) -> Result<TestSuite, RunDirError> {
        let bytes = self.read_bytes(name)?;
        parse_suite(&bytes).map_err(|source| RunDirError::Suite {
            path: self.path(name),
            source,
        })
    }

    pub fn write_suite(&self, name: &str, suite: &TestSuite) -> Result<(), RunDirError> {
        self.write_bytes(name, &serialize_suite(suite))
    }

    pub fn read_meta(&self) -> Result<RunMeta, RunDirError> {
        self.read_json(META_FILE)
    }

    pub fn write_meta(&self, meta: &RunMeta) -> Result<(), RunDirError> {
        self.write_json(META_FILE, meta)
    }

    /// Stores an archive under its content hash and returns the hash.
    pub fn write_archive(&self, archive: &Archive) -> Result<String, RunDirError> {
        let mut bytes = serde_json::to_vec_pretty(archive).expect("archives serialize");
        bytes.push(b'\n');
        let hash = hex::encode(Sha256::digest(&bytes));
        self.write_bytes(&format!("{ARCHIVE_DIR}/{hash}.json"), &bytes)?;
        Ok(hash)
    }

    pub fn read_archive(&self, hash: &str) -> Result<Archive, RunDirError> {
        self.read_json(&format!("{ARCHIVE_DIR}/{hash}.json"))
    }
}
