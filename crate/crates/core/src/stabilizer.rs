//! Disables the assertions that actionable findings cover and annotates them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::detector::FlakinessFinding;
use crate::model::{FlakyNote, TestSuite};

#[derive(Debug, Error, PartialEq)]
pub enum StabilizeError {
    #[error("finding references unknown test {0}")]
    UnknownTest(String),
    #[error("finding references call {call} of test {test}, which has {len} calls")]
    UnknownCall { test: String, call: usize, len: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisabledAssertion {
    pub call: usize,
    pub assertion: usize,
    pub note: FlakyNote,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizationResult {
    pub suite: TestSuite,
    /// Assertions newly disabled by this pass.
    pub disabled_count: usize,
    /// Test name → disabled assertions, ordered by (call, assertion).
    pub per_test: BTreeMap<String, Vec<DisabledAssertion>>,
}

impl StabilizationResult {
    pub fn retained_assertions(&self) -> usize {
        self.suite
            .tests
            .iter()
            .flat_map(|t| &t.calls)
            .flat_map(|c| &c.assertions)
            .filter(|a| !a.disabled)
            .count()
    }
}

pub fn stabilize(suite: &TestSuite, findings: &[FlakinessFinding]) -> Result<StabilizationResult, StabilizeError> {
    let mut out = suite.clone();
    let mut per_test: BTreeMap<String, Vec<DisabledAssertion>> = BTreeMap::new();
    let mut disabled_count = 0;

    for f in findings {
        let test = out
            .tests
            .iter_mut()
            .find(|t| t.name == f.test_name)
            .ok_or_else(|| StabilizeError::UnknownTest(f.test_name.clone()))?;
        let len = test.calls.len();
        let call = test.calls.get_mut(f.call_index).ok_or_else(|| StabilizeError::UnknownCall {
            test: f.test_name.clone(),
            call: f.call_index,
            len,
        })?;
        if !f.actionable {
            continue;
        }
        for (ai, a) in call.assertions.iter_mut().enumerate() {
            if a.disabled || !f.covers(a) {
                continue;
            }
            let note = FlakyNote {
                path: f.target.to_string(),
                fuzz_value: f.v_f.clone(),
                reexec_value: f.v_r.clone(),
                category: f.category,
            };
            a.disabled = true;
            a.flaky_note = Some(note.clone());
            disabled_count += 1;
            per_test.entry(f.test_name.clone()).or_default().push(DisabledAssertion {
                call: f.call_index,
                assertion: ai,
                note,
            });
        }
    }
    for entries in per_test.values_mut() {
        entries.sort_by_key(|d| (d.call, d.assertion));
    }
    Ok(StabilizationResult {
        suite: out,
        disabled_count,
        per_test,
    })
}

/// One annotation line: `Flaky value of field "<target>": <v_f> vs. <v_r>`.
///
/// Control characters in the values are escaped so each note stays on one line.
pub fn annotation_line(note: &FlakyNote) -> String {
    format!(
        "Flaky value of field \"{}\": {} vs. {}",
        note.path,
        escape_line(&note.fuzz_value),
        escape_line(&note.reexec_value)
    )
}

fn escape_line(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('\n', "\\n")
        .replace('\r', "\\r")
        .replace('\t', "\\t")
}

/// Annotation report grouped by test in suite order: a `[test]` header line
/// followed by one annotation line per disabled assertion.
pub fn render_annotations(result: &StabilizationResult) -> String {
    let mut out = String::new();
    for test in &result.suite.tests {
        let Some(entries) = result.per_test.get(&test.name) else {
            continue;
        };
        let _ = writeln!(out, "[{}]", test.name);
        for d in entries {
            let _ = writeln!(out, "{}", annotation_line(&d.note));
        }
    }
    out
}
