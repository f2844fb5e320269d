//! Neutral representation of generated REST API test suites.
//!
//! A suite is an ordered list of tests; each test is an ordered list of HTTP
//! calls, and each call carries the assertions that were generated for its
//! response. Suites are stored as JSON documents (one suite per file).

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::classifier::Category;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("duplicate test name {0}")]
    DuplicateTest(String),
    #[error("invalid suite: {0}")]
    Invalid(String),
}

impl From<serde_json::Error> for ModelError {
    fn from(e: serde_json::Error) -> Self {
        ModelError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSuite {
    pub name: String,
    pub metadata: BTreeMap<String, String>,
    pub tests: Vec<TestCase>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub name: String,
    pub calls: Vec<HttpCall>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Get,
    Post,
    Put,
    Patch,
    Delete,
    Head,
    Options,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Get => "GET",
            Method::Post => "POST",
            Method::Put => "PUT",
            Method::Patch => "PATCH",
            Method::Delete => "DELETE",
            Method::Head => "HEAD",
            Method::Options => "OPTIONS",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpCall {
    pub method: Method,
    /// Path relative to the SUT base URL, always starting with `/`.
    pub path: String,
    pub query: Vec<(String, String)>,
    /// Lower-cased header names.
    pub headers: BTreeMap<String, String>,
    pub body: Option<String>,
    pub content_type: Option<String>,
    pub assertions: Vec<Assertion>,
}

impl HttpCall {
    pub fn new(method: Method, path: impl Into<String>) -> Self {
        Self {
            method,
            path: path.into(),
            query: Vec::new(),
            headers: BTreeMap::new(),
            body: None,
            content_type: None,
            assertions: Vec::new(),
        }
    }

    /// True when both calls issue the same request, ignoring assertions.
    pub fn same_request(&self, other: &HttpCall) -> bool {
        self.method == other.method
            && self.path == other.path
            && self.query == other.query
            && self.headers == other.headers
            && self.body == other.body
            && self.content_type == other.content_type
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Status,
    Header { name: String },
    BodyPath { path: String },
}

impl Target {
    pub fn header(name: &str) -> Self {
        Target::Header {
            name: name.to_ascii_lowercase(),
        }
    }

    pub fn body(path: &str) -> Self {
        Target::BodyPath {
            path: path.to_string(),
        }
    }
}

impl fmt::Display for Target {
    /// Renders as the body path, `status`, or `header:<name>`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Status => f.write_str("status"),
            Target::Header { name } => write!(f, "header:{name}"),
            Target::BodyPath { path } => f.write_str(path),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Matcher {
    Equals,
    Contains,
    NumberEquals,
    HasItems,
    IsEmpty,
    SizeEquals,
}

/// A scalar expected value. Numbers keep their decimal text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scalar {
    Null,
    Bool(bool),
    Number(String),
    String(String),
}

impl Scalar {
    fn from_json(v: &Value) -> Option<Self> {
        Some(match v {
            Value::Null => Scalar::Null,
            Value::Bool(b) => Scalar::Bool(*b),
            Value::Number(n) => Scalar::Number(n.to_string()),
            Value::String(s) => Scalar::String(s.clone()),
            _ => return None,
        })
    }

    fn to_json(&self) -> Value {
        match self {
            Scalar::Null => Value::Null,
            Scalar::Bool(b) => Value::Bool(*b),
            Scalar::Number(n) => Value::Number(
                serde_json::Number::from_str(n).expect("numbers are validated at construction"),
            ),
            Scalar::String(s) => Value::String(s.clone()),
        }
    }

    /// Compares against a JSON value; numbers compare as decimals.
    pub fn matches(&self, actual: &Value) -> bool {
        match (self, actual) {
            (Scalar::Null, Value::Null) => true,
            (Scalar::Bool(a), Value::Bool(b)) => a == b,
            (Scalar::String(a), Value::String(b)) => a == b,
            (Scalar::Number(a), Value::Number(b)) => decimal_eq(a, &b.to_string()),
            _ => false,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Null => f.write_str("null"),
            Scalar::Bool(b) => write!(f, "{b}"),
            Scalar::Number(n) => f.write_str(n),
            Scalar::String(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expected {
    Scalar(Scalar),
    List(Vec<Scalar>),
}

impl Expected {
    pub fn string(s: impl Into<String>) -> Self {
        Expected::Scalar(Scalar::String(s.into()))
    }

    /// Panics if `n` is not a decimal literal.
    pub fn number(n: impl Into<String>) -> Self {
        let n = n.into();
        assert!(Decimal::from_str(&n).is_ok(), "not a decimal: {n}");
        Expected::Scalar(Scalar::Number(n))
    }

    pub fn as_scalar(&self) -> Option<&Scalar> {
        match self {
            Expected::Scalar(s) => Some(s),
            Expected::List(_) => None,
        }
    }

    fn from_json(v: &Value) -> Option<Self> {
        match v {
            Value::Array(items) => items
                .iter()
                .map(Scalar::from_json)
                .collect::<Option<Vec<_>>>()
                .map(Expected::List),
            other => Scalar::from_json(other).map(Expected::Scalar),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Expected::Scalar(s) => s.to_json(),
            Expected::List(items) => Value::Array(items.iter().map(Scalar::to_json).collect()),
        }
    }
}

impl fmt::Display for Expected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expected::Scalar(s) => write!(f, "{s}"),
            Expected::List(_) => f.write_str(&self.to_json().to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlakyNote {
    pub path: String,
    pub fuzz_value: String,
    pub reexec_value: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub target: Target,
    pub matcher: Matcher,
    pub expected: Expected,
    pub disabled: bool,
    pub flaky_note: Option<FlakyNote>,
}

impl Assertion {
    pub fn new(target: Target, matcher: Matcher, expected: Expected) -> Self {
        Self {
            target,
            matcher,
            expected,
            disabled: false,
            flaky_note: None,
        }
    }

    pub fn status(code: u16) -> Self {
        Self::new(
            Target::Status,
            Matcher::Equals,
            Expected::number(code.to_string()),
        )
    }

    fn validate(&self) -> Result<(), String> {
        if self.disabled && self.flaky_note.is_none() {
            return Err(format!("disabled assertion on {} lacks flaky_note", self.target));
        }
        if let Target::BodyPath { path } = &self.target {
            if !path.is_empty() && !path.starts_with('/') {
                return Err(format!("body path `{path}` must be empty or start with `/`"));
            }
        }
        let ok = match (self.matcher, &self.expected) {
            (Matcher::NumberEquals, Expected::Scalar(Scalar::Number(_))) => true,
            (Matcher::NumberEquals, _) => false,
            (Matcher::HasItems, Expected::List(_)) => true,
            (Matcher::HasItems, _) => false,
            (Matcher::Contains, Expected::Scalar(Scalar::String(_))) => true,
            (Matcher::Contains, _) => false,
            (Matcher::IsEmpty, Expected::Scalar(Scalar::Null)) => true,
            (Matcher::IsEmpty, _) => false,
            (Matcher::SizeEquals, Expected::Scalar(Scalar::Number(n))) => {
                n.parse::<u64>().is_ok()
            }
            (Matcher::SizeEquals, _) => false,
            (Matcher::Equals, _) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(format!(
                "matcher {:?} on {} cannot take expected value {}",
                self.matcher, self.target, self.expected
            ))
        }
    }
}

/// Exact decimal number, normalized so that `666`, `666.0` and `6.66e2`
/// compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decimal {
    negative: bool,
    /// Significant digits without leading or trailing zeros; empty for zero.
    digits: String,
    exponent: i64,
}

impl FromStr for Decimal {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("not a decimal number: `{s}`");
        let (negative, rest) = match s.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let (mantissa, exp) = match rest.find(['e', 'E']) {
            Some(i) => (
                &rest[..i],
                rest[i + 1..].parse::<i64>().map_err(|_| bad())?,
            ),
            None => (rest, 0),
        };
        let (int, frac) = match mantissa.split_once('.') {
            Some((i, f)) => (i, f),
            None => (mantissa, ""),
        };
        if int.is_empty() && frac.is_empty()
            || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        let all = format!("{int}{frac}");
        let mut exponent = exp - frac.len() as i64;
        let trimmed = all.trim_start_matches('0');
        let without_trailing = trimmed.trim_end_matches('0');
        exponent += (trimmed.len() - without_trailing.len()) as i64;
        if without_trailing.is_empty() {
            return Ok(Decimal {
                negative: false,
                digits: String::new(),
                exponent: 0,
            });
        }
        Ok(Decimal {
            negative,
            digits: without_trailing.to_string(),
            exponent,
        })
    }
}

impl Decimal {
    pub fn to_f64(&self) -> f64 {
        if self.digits.is_empty() {
            return 0.0;
        }
        let v: f64 = format!("{}e{}", self.digits, self.exponent)
            .parse()
            .unwrap_or(f64::NAN);
        if self.negative {
            -v
        } else {
            v
        }
    }
}

/// Exact decimal equality of two numeric literals; false if either does not parse.
pub fn decimal_eq(a: &str, b: &str) -> bool {
    match (Decimal::from_str(a), Decimal::from_str(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => false,
    }
}

/// Numeric comparison with an absolute tolerance; zero tolerance is exact.
pub fn decimal_close(a: &str, b: &str, tolerance: f64) -> bool {
    match (Decimal::from_str(a), Decimal::from_str(b)) {
        (Ok(x), Ok(y)) if tolerance <= 0.0 => x == y,
        (Ok(x), Ok(y)) => {
            x == y
                || (x.to_f64() - y.to_f64())
                    .abs()
                    .partial_cmp(&tolerance)
                    .is_some_and(|o| o != Ordering::Greater)
        }
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// On-disk document format
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct SuiteDoc {
    name: String,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
    tests: Vec<TestDoc>,
}

#[derive(Serialize, Deserialize)]
struct TestDoc {
    name: String,
    calls: Vec<CallDoc>,
}

#[derive(Serialize, Deserialize)]
struct CallDoc {
    method: Method,
    path: String,
    #[serde(default)]
    query: Vec<(String, String)>,
    #[serde(default)]
    headers: BTreeMap<String, String>,
    #[serde(default)]
    body: Option<String>,
    #[serde(default)]
    content_type: Option<String>,
    #[serde(default)]
    assertions: Vec<AssertionDoc>,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum TargetKind {
    Status,
    Header,
    BodyPath,
}

#[derive(Serialize, Deserialize)]
struct AssertionDoc {
    target: TargetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    path: Option<String>,
    matcher: Matcher,
    #[serde(default)]
    expected: Value,
    #[serde(default)]
    disabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    flaky_note: Option<FlakyNote>,
}

#[derive(Debug, Clone, Copy)]
pub struct ParseOptions {
    /// Reject unknown fields instead of warning about them.
    pub strict: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self { strict: true }
    }
}

pub fn parse_suite(document: &[u8]) -> Result<TestSuite, ModelError> {
    parse_suite_with(document, ParseOptions::default())
}

pub fn parse_suite_with(document: &[u8], opts: ParseOptions) -> Result<TestSuite, ModelError> {
    let mut de = serde_json::Deserializer::from_slice(document);
    let mut unknown = Vec::new();
    let doc: SuiteDoc = serde_ignored::deserialize(&mut de, |path| unknown.push(path.to_string()))?;
    de.end()?;
    if let Some(first) = unknown.first() {
        if opts.strict {
            return Err(ModelError::UnknownField(first.clone()));
        }
        for field in &unknown {
            log::warn!("ignoring unknown suite field `{field}`");
        }
    }
    let suite = TestSuite {
        name: doc.name,
        metadata: doc.metadata,
        tests: doc
            .tests
            .into_iter()
            .map(test_from_doc)
            .collect::<Result<_, _>>()?,
    };
    validate_suite(&suite)?;
    Ok(suite)
}

fn test_from_doc(doc: TestDoc) -> Result<TestCase, ModelError> {
    let calls = doc
        .calls
        .into_iter()
        .map(|c| call_from_doc(&doc.name, c))
        .collect::<Result<_, _>>()?;
    Ok(TestCase {
        name: doc.name,
        calls,
    })
}

fn call_from_doc(test: &str, doc: CallDoc) -> Result<HttpCall, ModelError> {
    let assertions = doc
        .assertions
        .into_iter()
        .map(|a| assertion_from_doc(test, a))
        .collect::<Result<_, _>>()?;
    Ok(HttpCall {
        method: doc.method,
        path: doc.path,
        query: doc.query,
        headers: doc
            .headers
            .into_iter()
            .map(|(k, v)| (k.to_ascii_lowercase(), v))
            .collect(),
        body: doc.body,
        content_type: doc.content_type,
        assertions,
    })
}

fn assertion_from_doc(test: &str, doc: AssertionDoc) -> Result<Assertion, ModelError> {
    let invalid = |m: &str| ModelError::Invalid(format!("test {test}: {m}"));
    let target = match doc.target {
        TargetKind::Status => Target::Status,
        TargetKind::Header => Target::header(
            doc.name
                .as_deref()
                .ok_or_else(|| invalid("header assertion without `name`"))?,
        ),
        TargetKind::BodyPath => Target::body(
            doc.path
                .as_deref()
                .ok_or_else(|| invalid("body_path assertion without `path`"))?,
        ),
    };
    let expected = Expected::from_json(&doc.expected)
        .ok_or_else(|| invalid("expected must be a scalar or a list of scalars"))?;
    Ok(Assertion {
        target,
        matcher: doc.matcher,
        expected,
        disabled: doc.disabled,
        flaky_note: doc.flaky_note,
    })
}

/// Checks every suite invariant that the type system does not enforce.
pub fn validate_suite(suite: &TestSuite) -> Result<(), ModelError> {
    let mut seen = HashSet::new();
    for test in &suite.tests {
        if !seen.insert(test.name.as_str()) {
            return Err(ModelError::DuplicateTest(test.name.clone()));
        }
        if test.calls.is_empty() {
            return Err(ModelError::Invalid(format!("test {} has no calls", test.name)));
        }
        for call in &test.calls {
            if !call.path.starts_with('/') {
                return Err(ModelError::Invalid(format!(
                    "test {}: path `{}` must start with `/`",
                    test.name, call.path
                )));
            }
            if call.path.contains("://") {
                return Err(ModelError::Invalid(format!(
                    "test {}: path `{}` embeds a base URL",
                    test.name, call.path
                )));
            }
            if call.headers.keys().any(|k| k.chars().any(|c| c.is_ascii_uppercase())) {
                return Err(ModelError::Invalid(format!(
                    "test {}: header names must be lower-case",
                    test.name
                )));
            }
            for a in &call.assertions {
                a.validate()
                    .map_err(|m| ModelError::Invalid(format!("test {}: {m}", test.name)))?;
            }
        }
    }
    Ok(())
}

pub fn serialize_suite(suite: &TestSuite) -> Vec<u8> {
    let doc = SuiteDoc {
        name: suite.name.clone(),
        metadata: suite.metadata.clone(),
        tests: suite
            .tests
            .iter()
            .map(|t| TestDoc {
                name: t.name.clone(),
                calls: t.calls.iter().map(call_to_doc).collect(),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("suite documents always serialize");
    out.push(b'\n');
    out
}

fn call_to_doc(call: &HttpCall) -> CallDoc {
    CallDoc {
        method: call.method,
        path: call.path.clone(),
        query: call.query.clone(),
        headers: call.headers.clone(),
        body: call.body.clone(),
        content_type: call.content_type.clone(),
        assertions: call
            .assertions
            .iter()
            .map(|a| {
                let (target, name, path) = match &a.target {
                    Target::Status => (TargetKind::Status, None, None),
                    Target::Header { name } => (TargetKind::Header, Some(name.clone()), None),
                    Target::BodyPath { path } => (TargetKind::BodyPath, None, Some(path.clone())),
                };
                AssertionDoc {
                    target,
                    name,
                    path,
                    matcher: a.matcher,
                    expected: a.expected.to_json(),
                    disabled: a.disabled,
                    flaky_note: a.flaky_note.clone(),
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
      "name": "s",
      "tests": [
        {"name": "t1", "calls": [
          {"method": "GET", "path": "/stable",
           "assertions": [{"target": "status", "matcher": "equals", "expected": 200}]}
        ]}
      ]
    }"#;

    #[test]
    fn parses_minimal_document() {
        let s = parse_suite(MINIMAL.as_bytes()).unwrap();
        assert_eq!(s.tests.len(), 1);
        assert_eq!(s.tests[0].calls.len(), 1);
        assert_eq!(s.tests[0].calls[0].assertions.len(), 1);
        assert_eq!(s.tests[0].calls[0].assertions[0].target, Target::Status);
    }

    #[test]
    fn duplicate_test_names_are_rejected() {
        let doc = r#"{"name":"s","tests":[
            {"name":"t1","calls":[{"method":"GET","path":"/a"}]},
            {"name":"t1","calls":[{"method":"GET","path":"/b"}]}]}"#;
        let err = parse_suite(doc.as_bytes()).unwrap_err();
        assert_eq!(err.to_string(), "duplicate test name t1");
    }

    #[test]
    fn malformed_document_reports_position() {
        let err = parse_suite(b"{\n  \"name\": \"s\",\n  \"tests\": [,]\n}").unwrap_err();
        match err {
            ModelError::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_matcher_is_a_parse_error() {
        let doc = MINIMAL.replace("\"equals\"", "\"matchesRegex\"");
        assert!(matches!(
            parse_suite(doc.as_bytes()),
            Err(ModelError::Parse { .. })
        ));
    }

    #[test]
    fn unknown_fields_strict_and_lenient() {
        let doc = MINIMAL.replace("\"name\": \"s\",", "\"name\": \"s\", \"generator\": 1,");
        assert!(matches!(
            parse_suite(doc.as_bytes()),
            Err(ModelError::UnknownField(f)) if f == "generator"
        ));
        let lenient = parse_suite_with(doc.as_bytes(), ParseOptions { strict: false }).unwrap();
        assert_eq!(lenient.name, "s");
    }

    #[test]
    fn header_names_are_lower_cased() {
        let doc = r#"{"name":"s","tests":[{"name":"t","calls":[
            {"method":"GET","path":"/a","headers":{"X-EMextraHeader123":""},
             "assertions":[{"target":"header","name":"Content-Type","matcher":"contains","expected":"json"}]}]}]}"#;
        let s = parse_suite(doc.as_bytes()).unwrap();
        let call = &s.tests[0].calls[0];
        assert!(call.headers.contains_key("x-emextraheader123"));
        assert_eq!(call.assertions[0].target, Target::header("content-type"));
    }

    #[test]
    fn arity_rules_are_enforced() {
        for (matcher, expected) in [
            ("number_equals", "\"abc\""),
            ("has_items", "\"x\""),
            ("size_equals", "-1"),
            ("is_empty", "3"),
            ("contains", "[1]"),
        ] {
            let doc = MINIMAL
                .replace("\"equals\"", &format!("\"{matcher}\""))
                .replace("\"expected\": 200", &format!("\"expected\": {expected}"));
            assert!(
                matches!(parse_suite(doc.as_bytes()), Err(ModelError::Invalid(_))),
                "{matcher} with {expected}"
            );
        }
    }

    #[test]
    fn disabled_requires_note() {
        let doc = MINIMAL.replace("\"expected\": 200", "\"expected\": 200, \"disabled\": true");
        assert!(matches!(
            parse_suite(doc.as_bytes()),
            Err(ModelError::Invalid(_))
        ));
    }

    #[test]
    fn paths_must_be_relative() {
        let doc = MINIMAL.replace("\"/stable\"", "\"http://localhost:8080/stable\"");
        assert!(parse_suite(doc.as_bytes()).is_err());
    }

    #[test]
    fn empty_suite_serializes_and_reparses() {
        let s = TestSuite {
            name: "empty".into(),
            metadata: BTreeMap::new(),
            tests: vec![],
        };
        let bytes = serialize_suite(&s);
        assert_eq!(parse_suite(&bytes).unwrap(), s);
    }

    #[test]
    fn disabled_assertion_serializes_note() {
        let mut s = parse_suite(MINIMAL.as_bytes()).unwrap();
        let a = &mut s.tests[0].calls[0].assertions[0];
        a.disabled = true;
        a.flaky_note = Some(FlakyNote {
            path: "status".into(),
            fuzz_value: "400".into(),
            reexec_value: "500".into(),
            category: None,
        });
        let text = String::from_utf8(serialize_suite(&s)).unwrap();
        assert!(text.contains("\"disabled\": true"));
        assert!(text.contains("\"flaky_note\""));
        assert!(text.contains("\"reexec_value\": \"500\""));
        assert_eq!(parse_suite(text.as_bytes()).unwrap(), s);
    }

    #[test]
    fn numbers_keep_their_text() {
        let doc = MINIMAL.replace("\"expected\": 200", "\"expected\": 200.0");
        let s = parse_suite(doc.as_bytes()).unwrap();
        let text = String::from_utf8(serialize_suite(&s)).unwrap();
        assert!(text.contains("\"expected\": 200.0"));
    }

    #[test]
    fn decimal_equality() {
        assert!(decimal_eq("666", "666.0"));
        assert!(decimal_eq("6.66e2", "666"));
        assert!(decimal_eq("-0", "0.000"));
        assert!(decimal_eq("0.10", "1e-1"));
        assert!(!decimal_eq("666", "666.0001"));
        assert!(!decimal_eq("-1", "1"));
        assert!(!decimal_eq("abc", "abc"));
        assert!(decimal_close("1.0", "1.05", 0.1));
        assert!(!decimal_close("1.0", "1.05", 0.0));
    }

    #[test]
    fn target_rendering() {
        assert_eq!(Target::Status.to_string(), "status");
        assert_eq!(Target::header("Content-Type").to_string(), "header:content-type");
        assert_eq!(Target::body("/jitter").to_string(), "/jitter");
    }
}
