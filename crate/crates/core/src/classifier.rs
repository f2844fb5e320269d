//! Heuristic taxonomy labels for findings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::{FindingKind, FlakinessFinding};
use crate::inference::{infer_volatile, PatternCatalog, VolatileKind, VolatileSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Time,
    Rand,
    Crypt,
    Unord,
    RunMsg,
    State,
    Env,
    Unk,
    GenErr,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::Time,
        Category::Rand,
        Category::Crypt,
        Category::Unord,
        Category::RunMsg,
        Category::State,
        Category::Env,
        Category::Unk,
        Category::GenErr,
    ];

    /// Labels the heuristic may produce; the rest are manual-only.
    pub fn is_auto_assignable(&self) -> bool {
        !matches!(self, Category::State | Category::Env | Category::GenErr)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| format!("unknown category `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    Heuristic,
    Manual,
}

/// Decision order, first hit wins. Structural runtime-message markers come
/// before digests and timestamps because exception text often embeds both.
pub const DECISION_ORDER: [Category; 6] = [
    Category::Unord,
    Category::RunMsg,
    Category::Crypt,
    Category::Time,
    Category::Rand,
    Category::Unk,
];

fn category_of(kind: VolatileKind) -> Option<Category> {
    use VolatileKind::*;
    match kind {
        StackFrame | ObjectIdentity | MemoryAddress => Some(Category::RunMsg),
        BcryptHash | HexDigestMd5 | HexDigestSha1 | HexDigestSha256 | Jwt => Some(Category::Crypt),
        Iso8601 | EpochSeconds | EpochMillis => Some(Category::Time),
        Uuid => Some(Category::Rand),
        Base64Blob | TempPath => None,
    }
}

pub fn classify_finding(finding: &FlakinessFinding, spans_f: &[VolatileSpan], spans_r: &[VolatileSpan]) -> Category {
    if finding.kind == FindingKind::OrderDiff {
        return Category::Unord;
    }
    let present: BTreeSet<Category> = spans_f
        .iter()
        .chain(spans_r)
        .filter_map(|s| category_of(s.kind))
        .collect();
    DECISION_ORDER[1..5]
        .iter()
        .copied()
        .find(|c| present.contains(c))
        .unwrap_or(Category::Unk)
}

/// Labels every finding from the spans found in its two values.
pub fn classify_all(findings: &mut [FlakinessFinding], catalog: &PatternCatalog) {
    for f in findings.iter_mut() {
        let sf = infer_volatile(&f.v_f, catalog);
        let sr = infer_volatile(&f.v_r, catalog);
        f.category = Some(classify_finding(f, &sf, &sr));
    }
}

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("malformed labels file: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManualLabel {
    pub test: String,
    pub category: Category,
}

/// Parses a manual-label overlay: a JSON list of `{"test", "category"}` objects.
pub fn parse_labels(text: &str) -> Result<Vec<ManualLabel>, LabelError> {
    serde_json::from_str(text).map_err(|e| LabelError::Malformed(e.to_string()))
}

/// Per-category count of distinct tests.
pub fn summarize_categories(findings: &[FlakinessFinding]) -> BTreeMap<Category, usize> {
    summarize_with_labels(findings, &[])
}

/// Like [`summarize_categories`], but tests with manual labels are counted
/// under those labels instead of their heuristic ones.
pub fn summarize_with_labels(findings: &[FlakinessFinding], labels: &[ManualLabel]) -> BTreeMap<Category, usize> {
    let mut pairs: BTreeSet<(&str, Category)> = BTreeSet::new();
    let labelled: BTreeSet<&str> = labels.iter().map(|l| l.test.as_str()).collect();
    for f in findings {
        if labelled.contains(f.test_name.as_str()) {
            continue;
        }
        if let Some(c) = f.category {
            pairs.insert((f.test_name.as_str(), c));
        }
    }
    for l in labels {
        pairs.insert((l.test.as_str(), l.category));
    }
    let mut counts: BTreeMap<Category, usize> = Category::ALL.iter().map(|c| (*c, 0)).collect();
    for (_, c) in pairs {
        *counts.get_mut(&c).expect("all categories pre-seeded") += 1;
    }
    counts
}
