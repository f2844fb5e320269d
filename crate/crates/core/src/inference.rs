//! Pattern-based inference of run-dependent values.
//!
//! A [`PatternCatalog`] holds one regular expression per kind of volatile
//! value (timestamps, UUIDs, digests, JVM identity hashes, ...). Matches are
//! replaced by per-kind placeholders so that two values differing only in
//! volatile content canonicalize to the same string.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use base64::Engine as _;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::classify_finding;
use crate::detector::{FindingKind, FlakinessFinding, Origin};
use crate::executor::Captured;
use crate::model::{Expected, Scalar, Target, TestSuite};

const DEFAULT_CATALOG: &str = include_str!("../catalog/default.json");

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("catalog document: {0}")]
    Document(#[from] serde_json::Error),
    #[error("rule for {kind}: {source}")]
    Pattern {
        kind: VolatileKind,
        #[source]
        source: regex::Error,
    },
    #[error("reading catalog: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolatileKind {
    Iso8601,
    EpochSeconds,
    EpochMillis,
    Uuid,
    Base64Blob,
    Jwt,
    HexDigestMd5,
    HexDigestSha1,
    HexDigestSha256,
    BcryptHash,
    ObjectIdentity,
    MemoryAddress,
    StackFrame,
    TempPath,
}

impl VolatileKind {
    pub const ALL: [VolatileKind; 14] = [
        VolatileKind::Iso8601,
        VolatileKind::EpochSeconds,
        VolatileKind::EpochMillis,
        VolatileKind::Uuid,
        VolatileKind::Base64Blob,
        VolatileKind::Jwt,
        VolatileKind::HexDigestMd5,
        VolatileKind::HexDigestSha1,
        VolatileKind::HexDigestSha256,
        VolatileKind::BcryptHash,
        VolatileKind::ObjectIdentity,
        VolatileKind::MemoryAddress,
        VolatileKind::StackFrame,
        VolatileKind::TempPath,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            VolatileKind::Iso8601 => "iso8601",
            VolatileKind::EpochSeconds => "epoch_seconds",
            VolatileKind::EpochMillis => "epoch_millis",
            VolatileKind::Uuid => "uuid",
            VolatileKind::Base64Blob => "base64_blob",
            VolatileKind::Jwt => "jwt",
            VolatileKind::HexDigestMd5 => "hex_digest_md5",
            VolatileKind::HexDigestSha1 => "hex_digest_sha1",
            VolatileKind::HexDigestSha256 => "hex_digest_sha256",
            VolatileKind::BcryptHash => "bcrypt_hash",
            VolatileKind::ObjectIdentity => "object_identity",
            VolatileKind::MemoryAddress => "memory_address",
            VolatileKind::StackFrame => "stack_frame",
            VolatileKind::TempPath => "temp_path",
        }
    }

    /// Upper-case tag embedded in the placeholder. Identity hashes use `OBJECT`.
    pub fn tag(&self) -> String {
        match self {
            VolatileKind::ObjectIdentity => "OBJECT".to_string(),
            other => other.name().to_ascii_uppercase(),
        }
    }

    pub fn placeholder(&self) -> String {
        format!("_EM_POTENTIAL_{}_FLAKINESS_", self.tag())
    }

    /// Checks a candidate the regex alone cannot decide.
    fn accepts(&self, text: &str, whole: &str, start: usize, end: usize) -> bool {
        match self {
            VolatileKind::Iso8601 => valid_iso8601(text),
            VolatileKind::EpochSeconds => text.parse::<u64>().is_ok_and(|v| (978_307_200..=9_999_999_999).contains(&v)),
            VolatileKind::EpochMillis => text
                .parse::<u64>()
                .is_ok_and(|v| (978_307_200_000..=9_999_999_999_999).contains(&v)),
            VolatileKind::Jwt => {
                let header = text.split('.').next().unwrap_or("");
                base64::engine::general_purpose::URL_SAFE_NO_PAD
                    .decode(header.trim_end_matches('='))
                    .ok()
                    .and_then(|b| serde_json::from_slice::<serde_json::Value>(&b).ok())
                    .is_some_and(|v| v.is_object())
            }
            VolatileKind::ObjectIdentity => !matches!(whole[end..].chars().next(), Some('.' | '-')),
            VolatileKind::Base64Blob => {
                let is_b64 = |c: char| c.is_ascii_alphanumeric() || c == '+' || c == '/' || c == '=';
                !whole[..start].chars().next_back().is_some_and(is_b64)
                    && !whole[end..].chars().next().is_some_and(is_b64)
                    && base64::engine::general_purpose::STANDARD.decode(text).is_ok()
            }
            _ => true,
        }
    }
}

impl fmt::Display for VolatileKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn valid_iso8601(text: &str) -> bool {
    let num = |r: std::ops::Range<usize>| text.get(r).and_then(|s| s.parse::<u32>().ok());
    let (Some(month), Some(day)) = (num(5..7), num(8..10)) else {
        return false;
    };
    if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
        return false;
    }
    if text.len() > 10 {
        let (Some(h), Some(m)) = (num(11..13), num(14..16)) else {
            return false;
        };
        if h > 23 || m > 59 {
            return false;
        }
        if text.as_bytes().get(16) == Some(&b':') && num(17..19).is_none_or(|s| s > 60) {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolatileSpan {
    pub kind: VolatileKind,
    pub start: usize,
    pub end: usize,
    pub placeholder: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleDoc {
    pub kind: VolatileKind,
    pub pattern: String,
    pub priority: i32,
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default)]
    pub rationale: String,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CatalogDoc {
    pub rules: Vec<RuleDoc>,
}

#[derive(Debug, Clone)]
pub struct PatternRule {
    pub kind: VolatileKind,
    pub regex: Regex,
    pub priority: i32,
    pub enabled: bool,
    pub rationale: String,
}

#[derive(Debug, Clone)]
pub struct PatternCatalog {
    rules: Vec<PatternRule>,
}

impl Default for PatternCatalog {
    fn default() -> Self {
        Self::from_json(DEFAULT_CATALOG).expect("built-in catalog is valid")
    }
}

impl PatternCatalog {
    pub fn from_json(text: &str) -> Result<Self, CatalogError> {
        let doc: CatalogDoc = serde_json::from_str(text)?;
        Self::from_doc(doc)
    }

    pub fn from_doc(doc: CatalogDoc) -> Result<Self, CatalogError> {
        let rules = doc
            .rules
            .into_iter()
            .map(|r| {
                Ok(PatternRule {
                    kind: r.kind,
                    regex: Regex::new(&r.pattern).map_err(|source| CatalogError::Pattern { kind: r.kind, source })?,
                    priority: r.priority,
                    enabled: r.enabled,
                    rationale: r.rationale,
                })
            })
            .collect::<Result<_, CatalogError>>()?;
        Ok(Self { rules })
    }

    pub fn load(path: &Path) -> Result<Self, CatalogError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn builtin_document() -> &'static str {
        DEFAULT_CATALOG
    }

    pub fn rules(&self) -> &[PatternRule] {
        &self.rules
    }

    pub fn set_enabled(&mut self, kind: VolatileKind, enabled: bool) {
        for r in self.rules.iter_mut().filter(|r| r.kind == kind) {
            r.enabled = enabled;
        }
    }

    pub fn enabled_kinds(&self) -> Vec<VolatileKind> {
        let mut kinds: Vec<_> = self.rules.iter().filter(|r| r.enabled).map(|r| r.kind).collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }
}

struct Candidate {
    kind: VolatileKind,
    priority: i32,
    start: usize,
    end: usize,
}

/// All maximal, non-overlapping volatile spans in `value`, sorted by start.
pub fn infer_volatile(value: &str, catalog: &PatternCatalog) -> Vec<VolatileSpan> {
    let mut candidates = Vec::new();
    for rule in catalog.rules.iter().filter(|r| r.enabled) {
        let mut pos = 0;
        while pos <= value.len() {
            let Some(caps) = rule.regex.captures_at(value, pos) else {
                break;
            };
            let whole = caps.get(0).expect("group 0 always participates");
            let span = caps.name("span").unwrap_or(whole);
            if !span.is_empty() && rule.kind.accepts(span.as_str(), value, span.start(), span.end()) {
                candidates.push(Candidate {
                    kind: rule.kind,
                    priority: rule.priority,
                    start: span.start(),
                    end: span.end(),
                });
                pos = whole.end().max(whole.start() + 1);
            } else {
                // Retry from the next character: a shorter match may validate.
                pos = whole.start() + value[whole.start()..].chars().next().map_or(1, char::len_utf8);
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.priority
            .cmp(&a.priority)
            .then(a.start.cmp(&b.start))
            .then((b.end - b.start).cmp(&(a.end - a.start)))
    });
    let mut chosen: Vec<VolatileSpan> = Vec::new();
    for c in candidates {
        if chosen.iter().all(|s| c.end <= s.start || c.start >= s.end) {
            chosen.push(VolatileSpan {
                kind: c.kind,
                start: c.start,
                end: c.end,
                placeholder: c.kind.placeholder(),
            });
        }
    }
    chosen.sort_by_key(|s| s.start);
    chosen
}

/// Replaces every volatile span with its placeholder.
pub fn canonicalize(value: &str, catalog: &PatternCatalog) -> String {
    apply_spans(value, &infer_volatile(value, catalog))
}

pub fn apply_spans(value: &str, spans: &[VolatileSpan]) -> String {
    let mut out = String::with_capacity(value.len());
    let mut last = 0;
    for s in spans {
        out.push_str(&value[last..s.start]);
        out.push_str(&s.placeholder);
        last = s.end;
    }
    out.push_str(&value[last..]);
    out
}

/// Flags asserted targets whose recorded (or expected) values contain
/// volatile content. Targets already covered by `existing` findings are skipped.
pub fn infer_findings(
    suite: &TestSuite,
    baseline: Option<&Captured>,
    catalog: &PatternCatalog,
    existing: &[FlakinessFinding],
) -> Vec<FlakinessFinding> {
    let mut out: Vec<FlakinessFinding> = Vec::new();
    for test in &suite.tests {
        let responses = baseline.and_then(|b| b.get(&test.name));
        for (ci, call) in test.calls.iter().enumerate() {
            for a in call.assertions.iter().filter(|a| !a.disabled) {
                if a.target == Target::Status {
                    continue;
                }
                let covered = existing
                    .iter()
                    .chain(out.iter())
                    .any(|f| f.test_name == test.name && f.call_index == ci && f.covers(a));
                if covered {
                    continue;
                }
                let recorded = responses.and_then(|rs| rs.get(ci)).and_then(|r| r.render_at(&a.target));
                let literal = match &a.expected {
                    Expected::Scalar(Scalar::String(s)) => Some(s.clone()),
                    _ => None,
                };
                let hit = recorded
                    .into_iter()
                    .chain(literal)
                    .map(|v| {
                        let spans = infer_volatile(&v, catalog);
                        (v, spans)
                    })
                    .find(|(_, spans)| !spans.is_empty());
                if let Some((value, spans)) = hit {
                    let mut f = FlakinessFinding {
                        test_name: test.name.clone(),
                        call_index: ci,
                        target: a.target.clone(),
                        v_r: apply_spans(&value, &spans),
                        v_f: value,
                        kind: FindingKind::ValueDiff,
                        category: None,
                        actionable: true,
                        origin: Origin::Inference,
                    };
                    f.category = Some(classify_finding(&f, &spans, &[]));
                    out.push(f);
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Labelled corpus evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelledSpan {
    pub kind: VolatileKind,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub value: String,
    #[serde(default)]
    pub spans: Vec<LabelledSpan>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KindScore {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    /// `None` when the kind was never predicted.
    pub precision: Option<f64>,
    /// `None` when the kind never occurs in the labels.
    pub recall: Option<f64>,
}

/// Per-kind precision and recall; a prediction counts only on an exact
/// (kind, start, end) match.
pub fn evaluate_corpus(entries: &[CorpusEntry], catalog: &PatternCatalog) -> BTreeMap<VolatileKind, KindScore> {
    let mut scores: BTreeMap<VolatileKind, KindScore> = BTreeMap::new();
    for e in entries {
        let predicted = infer_volatile(&e.value, catalog);
        for p in &predicted {
            let hit = e.spans.iter().any(|l| l.kind == p.kind && l.start == p.start && l.end == p.end);
            let s = scores.entry(p.kind).or_default();
            if hit {
                s.true_positives += 1;
            } else {
                s.false_positives += 1;
            }
        }
        for l in &e.spans {
            let hit = predicted.iter().any(|p| l.kind == p.kind && l.start == p.start && l.end == p.end);
            if !hit {
                scores.entry(l.kind).or_default().false_negatives += 1;
            }
        }
    }
    for s in scores.values_mut() {
        let predicted = s.true_positives + s.false_positives;
        let actual = s.true_positives + s.false_negatives;
        s.precision = (predicted > 0).then(|| s.true_positives as f64 / predicted as f64);
        s.recall = (actual > 0).then(|| s.true_positives as f64 / actual as f64);
    }
    scores
}
