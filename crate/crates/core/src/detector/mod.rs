//! Re-execution based flakiness detection.
//!
//! A response recorded during the baseline run and one observed on
//! re-execution are compared element by element: status, headers (minus a
//! configurable ignore set) and body leaves. Every difference becomes a
//! [`FlakinessFinding`]; findings that hit an asserted target are actionable.

pub mod body;

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{Category, LabelSource};
use crate::executor::{evaluate, Captured, ResponseRecord};
use crate::model::{decimal_close, Assertion, Matcher, Expected, Scalar, Target, TestSuite};
use body::{flatten_body, is_descendant, BodyTree, Leaf, NodeKind};

pub const MISSING: &str = "<missing>";

pub const DEFAULT_IGNORED_HEADERS: [&str; 9] = [
    "date",
    "server",
    "content-length",
    "transfer-encoding",
    "connection",
    "keep-alive",
    "set-cookie",
    "x-request-id",
    "etag",
];

#[derive(Debug, Error, PartialEq)]
pub enum DetectError {
    #[error("input error: {0}")]
    Input(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRules {
    pub ignored_headers: BTreeSet<String>,
    /// Absolute tolerance for numeric leaves; zero means exact decimal equality.
    pub numeric_tolerance: f64,
    pub header_presence_only: bool,
}

impl Default for CompareRules {
    fn default() -> Self {
        Self {
            ignored_headers: DEFAULT_IGNORED_HEADERS.iter().map(|s| s.to_string()).collect(),
            numeric_tolerance: 0.0,
            header_presence_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeaderDiff {
    pub name: String,
    pub v_f: String,
    pub v_r: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BodyDiff {
    pub path: String,
    pub v_f: String,
    pub v_r: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffReport {
    pub status_diff: Option<(u16, u16)>,
    pub header_diffs: Vec<HeaderDiff>,
    pub body_diffs: Vec<BodyDiff>,
    pub unordered_paths: Vec<String>,
}

impl DiffReport {
    pub fn is_empty(&self) -> bool {
        self.status_diff.is_none()
            && self.header_diffs.is_empty()
            && self.body_diffs.is_empty()
            && self.unordered_paths.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    ValueDiff,
    OrderDiff,
    StatusDiff,
    HeaderDiff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    /// Baseline and re-execution responses differed.
    Reexecution,
    /// A volatile pattern was found in a recorded or expected value.
    Inference,
    /// No baseline was recorded; the expected literal stood in for it.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlakinessFinding {
    #[serde(rename = "test")]
    pub test_name: String,
    #[serde(rename = "call")]
    pub call_index: usize,
    pub target: Target,
    pub v_f: String,
    pub v_r: String,
    pub kind: FindingKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    pub actionable: bool,
    pub origin: Origin,
}

impl FlakinessFinding {
    /// Whether disabling `assertion` is required to neutralize this finding.
    ///
    /// An assertion is covered when it checks the finding's exact target; when
    /// the finding reports a reordered array and the assertion checks a
    /// position inside it; or when it is a `contains` check on an ancestor
    /// path whose expected text embeds the volatile fuzz-time value.
    pub fn covers(&self, assertion: &Assertion) -> bool {
        if assertion.target == self.target {
            return true;
        }
        let (Target::BodyPath { path: found }, Target::BodyPath { path: asserted }) = (&self.target, &assertion.target)
        else {
            return false;
        };
        if self.kind == FindingKind::OrderDiff && is_descendant(asserted, found) {
            return true;
        }
        if assertion.matcher == Matcher::Contains && is_descendant(found, asserted) && !self.v_f.is_empty() {
            if let Expected::Scalar(Scalar::String(text)) = &assertion.expected {
                return text.contains(self.v_f.as_str());
            }
        }
        false
    }

    pub fn label_source(&self) -> Option<LabelSource> {
        self.category.map(|_| LabelSource::Heuristic)
    }
}

fn leaf_equal(a: &Leaf, b: &Leaf, tolerance: f64) -> bool {
    match (a, b) {
        (Leaf::Number(x), Leaf::Number(y)) => x == y || decimal_close(x, y, tolerance),
        _ => a == b,
    }
}

fn render_node(tree: &BodyTree, path: &str) -> String {
    match tree.node_kind(path) {
        None => MISSING.to_string(),
        Some(NodeKind::Leaf) => tree.leaves[path].render(),
        Some(NodeKind::Array) if tree.arrays[path].is_empty() => "[]".into(),
        Some(NodeKind::Array) => "<array>".into(),
        Some(NodeKind::Object) if is_empty_object(tree, path) => "{}".into(),
        Some(NodeKind::Object) => "<object>".into(),
    }
}

fn is_empty_object(tree: &BodyTree, path: &str) -> bool {
    !tree
        .leaves
        .keys()
        .chain(tree.arrays.keys())
        .chain(tree.objects.iter())
        .any(|p| is_descendant(p, path))
}

fn is_empty_container(tree: &BodyTree, path: &str) -> bool {
    match tree.node_kind(path) {
        Some(NodeKind::Array) => tree.arrays[path].is_empty(),
        Some(NodeKind::Object) => is_empty_object(tree, path),
        _ => false,
    }
}

pub fn compare_bodies(f: &BodyTree, r: &BodyTree, tolerance: f64) -> (Vec<BodyDiff>, Vec<String>) {
    let mut array_paths: Vec<&String> = f.arrays.keys().filter(|p| r.arrays.contains_key(*p)).collect();
    array_paths.sort_by_key(|p| (body::segments(p).len(), (*p).clone()));
    let mut unordered: Vec<String> = Vec::new();
    for p in array_paths {
        if unordered.iter().any(|u| is_descendant(p, u)) {
            continue;
        }
        let (ef, er) = (&f.arrays[p], &r.arrays[p]);
        if ef != er {
            let (mut sf, mut sr) = (ef.clone(), er.clone());
            sf.sort();
            sr.sort();
            if sf == sr {
                unordered.push(p.clone());
            }
        }
    }
    let suppressed = |p: &str| unordered.iter().any(|u| p == u || is_descendant(p, u));

    let mut diffs = Vec::new();
    let leaf_paths: BTreeSet<&String> = f.leaves.keys().chain(r.leaves.keys()).collect();
    for p in leaf_paths {
        if suppressed(p) {
            continue;
        }
        let same = match (f.leaves.get(p), r.leaves.get(p)) {
            (Some(a), Some(b)) => leaf_equal(a, b, tolerance),
            _ => false,
        };
        if !same {
            diffs.push(BodyDiff {
                path: p.clone(),
                v_f: render_node(f, p),
                v_r: render_node(r, p),
            });
        }
    }
    let node_paths: BTreeSet<&String> = f
        .arrays
        .keys()
        .chain(f.objects.iter())
        .chain(r.arrays.keys())
        .chain(r.objects.iter())
        .collect();
    let seen: HashSet<String> = diffs.iter().map(|d| d.path.clone()).collect();
    for p in node_paths {
        if suppressed(p) || seen.contains(p.as_str()) {
            continue;
        }
        if f.node_kind(p) != r.node_kind(p) && (is_empty_container(f, p) || is_empty_container(r, p)) {
            diffs.push(BodyDiff {
                path: p.clone(),
                v_f: render_node(f, p),
                v_r: render_node(r, p),
            });
        }
    }
    diffs.sort_by(|a, b| a.path.cmp(&b.path));
    (diffs, unordered)
}

/// Element-wise comparison of a baseline and a re-execution response.
pub fn compare_responses(r_f: &ResponseRecord, r_r: &ResponseRecord, rules: &CompareRules) -> DiffReport {
    let status_diff = (r_f.status != r_r.status).then_some((r_f.status, r_r.status));

    let names: BTreeSet<&String> = r_f
        .headers
        .keys()
        .chain(r_r.headers.keys())
        .filter(|n| !rules.ignored_headers.contains(n.as_str()))
        .collect();
    let mut header_diffs = Vec::new();
    for name in names {
        let vf = r_f.headers.get(name).map(|v| v.join(", "));
        let vr = r_r.headers.get(name).map(|v| v.join(", "));
        let differs = if rules.header_presence_only {
            vf.is_some() != vr.is_some()
        } else {
            vf != vr
        };
        if differs {
            header_diffs.push(HeaderDiff {
                name: name.clone(),
                v_f: vf.unwrap_or_else(|| MISSING.into()),
                v_r: vr.unwrap_or_else(|| MISSING.into()),
            });
        }
    }

    let tf = flatten_body(&r_f.body, r_f.content_type.as_deref());
    let tr = flatten_body(&r_r.body, r_r.content_type.as_deref());
    let (body_diffs, unordered_paths) = compare_bodies(&tf, &tr, rules.numeric_tolerance);

    DiffReport {
        status_diff,
        header_diffs,
        body_diffs,
        unordered_paths,
    }
}

fn check_shape(suite: &TestSuite, a: &Captured, b: &Captured, a_name: &str, b_name: &str) -> Result<(), DetectError> {
    let names: HashSet<&str> = suite.tests.iter().map(|t| t.name.as_str()).collect();
    for (side, cap) in [(a_name, a), (b_name, b)] {
        if let Some(extra) = cap.keys().find(|k| !names.contains(k.as_str())) {
            return Err(DetectError::Input(format!("{side} has test {extra} which is not in the suite")));
        }
    }
    for t in &suite.tests {
        let ra = a
            .get(&t.name)
            .ok_or_else(|| DetectError::Input(format!("{a_name} lacks test {}", t.name)))?;
        let rb = b
            .get(&t.name)
            .ok_or_else(|| DetectError::Input(format!("{b_name} lacks test {}", t.name)))?;
        if ra.len() != rb.len() {
            return Err(DetectError::Input(format!(
                "test {}: {a_name} has {} responses, {b_name} has {}",
                t.name,
                ra.len(),
                rb.len()
            )));
        }
    }
    Ok(())
}

/// Findings for every difference between `baseline` and `reexec`.
pub fn detect_flaky(
    suite: &TestSuite,
    baseline: &Captured,
    reexec: &Captured,
    rules: &CompareRules,
) -> Result<Vec<FlakinessFinding>, DetectError> {
    check_shape(suite, baseline, reexec, "baseline", "re-execution")?;
    let mut findings = Vec::new();
    for test in &suite.tests {
        let (rf, rr) = (&baseline[&test.name], &reexec[&test.name]);
        for (ci, (a, b)) in rf.iter().zip(rr).enumerate() {
            let report = compare_responses(a, b, rules);
            let mut push = |target: Target, v_f: String, v_r: String, kind: FindingKind| {
                let mut f = FlakinessFinding {
                    test_name: test.name.clone(),
                    call_index: ci,
                    target,
                    v_f,
                    v_r,
                    kind,
                    category: None,
                    actionable: false,
                    origin: Origin::Reexecution,
                };
                f.actionable = test
                    .calls
                    .get(ci)
                    .is_some_and(|c| c.assertions.iter().any(|x| !x.disabled && f.covers(x)));
                findings.push(f);
            };
            if let Some((sf, sr)) = report.status_diff {
                push(Target::Status, sf.to_string(), sr.to_string(), FindingKind::StatusDiff);
            }
            for h in report.header_diffs {
                push(Target::header(&h.name), h.v_f, h.v_r, FindingKind::HeaderDiff);
            }
            for d in report.body_diffs {
                push(Target::body(&d.path), d.v_f, d.v_r, FindingKind::ValueDiff);
            }
            for p in report.unordered_paths {
                let render = |r: &ResponseRecord| r.render_at(&Target::body(&p)).unwrap_or_else(|| MISSING.into());
                push(Target::body(&p), render(a), render(b), FindingKind::OrderDiff);
            }
        }
    }
    Ok(findings)
}

/// Detection without recordings: each failing assertion's expected literal
/// stands in for the baseline value.
pub fn detect_against_literals(suite: &TestSuite, reexec: &Captured) -> Result<Vec<FlakinessFinding>, DetectError> {
    let mut findings = Vec::new();
    for test in &suite.tests {
        let responses = reexec
            .get(&test.name)
            .ok_or_else(|| DetectError::Input(format!("re-execution lacks test {}", test.name)))?;
        for (ci, (call, resp)) in test.calls.iter().zip(responses).enumerate() {
            for a in call.assertions.iter().filter(|a| !a.disabled) {
                if evaluate(a, resp).is_ok() {
                    continue;
                }
                let kind = match a.target {
                    Target::Status => FindingKind::StatusDiff,
                    Target::Header { .. } => FindingKind::HeaderDiff,
                    Target::BodyPath { .. } => FindingKind::ValueDiff,
                };
                let f = FlakinessFinding {
                    test_name: test.name.clone(),
                    call_index: ci,
                    target: a.target.clone(),
                    v_f: a.expected.to_string(),
                    v_r: resp.render_at(&a.target).unwrap_or_else(|| MISSING.into()),
                    kind,
                    category: None,
                    actionable: true,
                    origin: Origin::Literal,
                };
                if !findings.contains(&f) {
                    findings.push(f);
                }
            }
        }
    }
    Ok(findings)
}

/// Union of findings from several re-executions; the first occurrence of each
/// (test, call, target, kind) wins.
pub fn union_findings(runs: impl IntoIterator<Item = Vec<FlakinessFinding>>) -> Vec<FlakinessFinding> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for run in runs {
        for f in run {
            if seen.insert((f.test_name.clone(), f.call_index, f.target.clone(), f.kind)) {
                out.push(f);
            }
        }
    }
    out
}
