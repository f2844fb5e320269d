//! Executes suites against a live SUT and records everything it sees.

use std::collections::BTreeMap;
use std::io::Read;
use std::process::Command;
use std::time::{Duration, Instant};

use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use url::Url;

use crate::detector::body::{self, render_value, RAW_PATH};
use crate::model::{decimal_eq, Assertion, Expected, HttpCall, Matcher, Scalar, Target, TestCase, TestSuite};

pub const DEFAULT_CALL_TIMEOUT: Duration = Duration::from_secs(30);
pub const DEFAULT_TEST_BUDGET: Duration = Duration::from_secs(60);
const MAX_BODY_BYTES: u64 = 16 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("environment error: {0}")]
    Environment(String),
}

/// One captured HTTP response: status, headers and verbatim body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "ResponseDoc", try_from = "ResponseDoc")]
pub struct ResponseRecord {
    pub status: u16,
    pub headers: BTreeMap<String, Vec<String>>,
    pub body: Vec<u8>,
    pub content_type: Option<String>,
    pub elapsed_ms: u64,
}

#[derive(Serialize, Deserialize)]
struct ResponseDoc {
    status: u16,
    headers: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    body: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    body_base64: Option<String>,
    content_type: Option<String>,
    elapsed_ms: u64,
}

impl From<ResponseRecord> for ResponseDoc {
    fn from(r: ResponseRecord) -> Self {
        let (body, body_base64) = match String::from_utf8(r.body) {
            Ok(s) => (Some(s), None),
            Err(e) => (
                None,
                Some(base64::engine::general_purpose::STANDARD.encode(e.as_bytes())),
            ),
        };
        ResponseDoc {
            status: r.status,
            headers: r.headers,
            body,
            body_base64,
            content_type: r.content_type,
            elapsed_ms: r.elapsed_ms,
        }
    }
}

impl TryFrom<ResponseDoc> for ResponseRecord {
    type Error = String;

    fn try_from(d: ResponseDoc) -> Result<Self, Self::Error> {
        if !(100..=599).contains(&d.status) {
            return Err(format!("status {} outside 100..=599", d.status));
        }
        let body = match (d.body, d.body_base64) {
            (Some(s), None) => s.into_bytes(),
            (None, Some(b)) => base64::engine::general_purpose::STANDARD
                .decode(b)
                .map_err(|e| e.to_string())?,
            (None, None) => Vec::new(),
            (Some(_), Some(_)) => return Err("both body and body_base64 present".into()),
        };
        Ok(ResponseRecord {
            status: d.status,
            headers: d.headers,
            body,
            content_type: d.content_type,
            elapsed_ms: d.elapsed_ms,
        })
    }
}

impl ResponseRecord {
    pub fn header(&self, name: &str) -> Option<String> {
        self.headers
            .get(&name.to_ascii_lowercase())
            .map(|vs| vs.join(", "))
    }

    pub fn json_body(&self) -> Option<Value> {
        if body::is_structured(self.content_type.as_deref()) {
            serde_json::from_slice(&self.body).ok()
        } else {
            None
        }
    }

    /// The value an assertion on `target` would observe, if any.
    pub fn value_at(&self, target: &Target) -> Option<Value> {
        match target {
            Target::Status => Some(Value::Number(self.status.into())),
            Target::Header { name } => self.header(name).map(Value::String),
            Target::BodyPath { path } => match self.json_body() {
                Some(v) => body::resolve(&v, path).cloned(),
                None if path == RAW_PATH => {
                    Some(Value::String(String::from_utf8_lossy(&self.body).into_owned()))
                }
                None => None,
            },
        }
    }

    /// Rendering of the value at `target`, as used in findings and notes.
    pub fn render_at(&self, target: &Target) -> Option<String> {
        self.value_at(target).map(|v| render_value(&v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Assertion,
    Transport,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedAssertion {
    pub call_index: usize,
    /// `None` for transport failures.
    pub assertion_index: Option<usize>,
    pub kind: FailureKind,
    pub observed: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub test_name: String,
    pub passed: bool,
    pub failed_assertions: Vec<FailedAssertion>,
    pub responses: Vec<ResponseRecord>,
}

/// Test name → one response per issued call.
pub type Captured = BTreeMap<String, Vec<ResponseRecord>>;

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionMatrix {
    pub suite_name: String,
    pub repetitions: usize,
    /// Test name → per-repetition verdicts (`true` = passed).
    pub outcomes: BTreeMap<String, Vec<bool>>,
    /// Test name → per-repetition response lists.
    pub captured: BTreeMap<String, Vec<Vec<ResponseRecord>>>,
}

impl ExecutionMatrix {
    /// Responses of one repetition, keyed by test name.
    pub fn repetition(&self, i: usize) -> Captured {
        self.captured
            .iter()
            .filter_map(|(t, reps)| reps.get(i).map(|r| (t.clone(), r.clone())))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct ExecConfig {
    pub call_timeout: Duration,
    pub test_budget: Duration,
}

impl Default for ExecConfig {
    fn default() -> Self {
        Self {
            call_timeout: DEFAULT_CALL_TIMEOUT,
            test_budget: DEFAULT_TEST_BUDGET,
        }
    }
}

/// Sequential HTTP executor bound to one SUT base URL.
pub struct Executor {
    agent: ureq::Agent,
    base_url: String,
    config: ExecConfig,
}

impl Executor {
    pub fn new(base_url: &str, config: ExecConfig) -> Result<Self, ExecError> {
        validate_base_url(base_url)?;
        let agent = ureq::AgentBuilder::new()
            .redirects(0)
            .timeout(config.call_timeout)
            .build();
        Ok(Self {
            agent,
            base_url: base_url.to_string(),
            config,
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    pub fn execute_call(&self, call: &HttpCall) -> Result<ResponseRecord, ExecError> {
        self.execute_call_within(call, self.config.call_timeout)
    }

    fn execute_call_within(&self, call: &HttpCall, timeout: Duration) -> Result<ResponseRecord, ExecError> {
        let url = build_url(&self.base_url, call)?;
        let mut req = self
            .agent
            .request(call.method.as_str(), url.as_str())
            .timeout(timeout);
        for (name, value) in &call.headers {
            req = req.set(name, value);
        }
        if let Some(ct) = &call.content_type {
            req = req.set("content-type", ct);
        }
        let started = Instant::now();
        let result = match &call.body {
            Some(b) => req.send_bytes(b.as_bytes()),
            None => req.call(),
        };
        let resp = match result {
            Ok(r) => r,
            Err(ureq::Error::Status(_, r)) => r,
            Err(ureq::Error::Transport(t)) => return Err(ExecError::Transport(t.to_string())),
        };
        let status = resp.status();
        let mut headers: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for name in resp.headers_names() {
            let values = resp.all(&name).into_iter().map(str::to_string).collect();
            headers.insert(name.to_ascii_lowercase(), values);
        }
        let content_type = resp.header("content-type").map(str::to_string);
        let mut body = Vec::new();
        resp.into_reader()
            .take(MAX_BODY_BYTES)
            .read_to_end(&mut body)
            .map_err(|e| ExecError::Transport(e.to_string()))?;
        Ok(ResponseRecord {
            status,
            headers,
            body,
            content_type,
            elapsed_ms: started.elapsed().as_millis() as u64,
        })
    }

    /// Issues the test's calls in order and evaluates enabled assertions.
    pub fn run_test(&self, test: &TestCase) -> TestOutcome {
        let started = Instant::now();
        let mut failed = Vec::new();
        let mut responses = Vec::new();
        for (ci, call) in test.calls.iter().enumerate() {
            let remaining = self.config.test_budget.saturating_sub(started.elapsed());
            if remaining.is_zero() {
                failed.push(FailedAssertion {
                    call_index: ci,
                    assertion_index: None,
                    kind: FailureKind::Transport,
                    observed: "test time budget exhausted".into(),
                });
                break;
            }
            match self.execute_call_within(call, remaining.min(self.config.call_timeout)) {
                Ok(resp) => {
                    for (ai, a) in call.assertions.iter().enumerate() {
                        if a.disabled {
                            continue;
                        }
                        if let Err(observed) = evaluate(a, &resp) {
                            failed.push(FailedAssertion {
                                call_index: ci,
                                assertion_index: Some(ai),
                                kind: FailureKind::Assertion,
                                observed,
                            });
                        }
                    }
                    responses.push(resp);
                }
                Err(e) => {
                    failed.push(FailedAssertion {
                        call_index: ci,
                        assertion_index: None,
                        kind: FailureKind::Transport,
                        observed: e.to_string(),
                    });
                    break;
                }
            }
        }
        TestOutcome {
            test_name: test.name.clone(),
            passed: failed.is_empty(),
            failed_assertions: failed,
            responses,
        }
    }

    /// Runs the whole suite once, in order.
    pub fn run_suite(&self, suite: &TestSuite) -> Vec<TestOutcome> {
        suite.tests.iter().map(|t| self.run_test(t)).collect()
    }

    /// Runs the suite `n` times, invoking `reset_hook` between repetitions.
    pub fn repeat_execute(
        &self,
        suite: &TestSuite,
        n: usize,
        reset_hook: Option<&str>,
    ) -> Result<ExecutionMatrix, ExecError> {
        self.repeat_execute_with(suite, n, reset_hook, |_, _| {})
    }

    /// Like [`Executor::repeat_execute`], reporting each finished repetition.
    pub fn repeat_execute_with(
        &self,
        suite: &TestSuite,
        n: usize,
        reset_hook: Option<&str>,
        mut on_repetition: impl FnMut(usize, &[TestOutcome]),
    ) -> Result<ExecutionMatrix, ExecError> {
        if n == 0 {
            return Err(ExecError::Config("repetition count must be at least 1".into()));
        }
        let mut matrix = ExecutionMatrix {
            suite_name: suite.name.clone(),
            repetitions: n,
            outcomes: BTreeMap::new(),
            captured: BTreeMap::new(),
        };
        for rep in 0..n {
            if rep > 0 {
                if let Some(hook) = reset_hook {
                    run_reset_hook(hook)?;
                }
            }
            let outcomes = self.run_suite(suite);
            on_repetition(rep, &outcomes);
            for o in outcomes {
                matrix.outcomes.entry(o.test_name.clone()).or_default().push(o.passed);
                matrix.captured.entry(o.test_name).or_default().push(o.responses);
            }
        }
        Ok(matrix)
    }
}

pub fn execute_call(call: &HttpCall, base_url: &str, timeout: Duration) -> Result<ResponseRecord, ExecError> {
    let exec = Executor::new(
        base_url,
        ExecConfig {
            call_timeout: timeout,
            ..ExecConfig::default()
        },
    )?;
    exec.execute_call(call)
}

pub fn run_test(test: &TestCase, base_url: &str) -> Result<TestOutcome, ExecError> {
    Ok(Executor::new(base_url, ExecConfig::default())?.run_test(test))
}

pub fn repeat_execute(
    suite: &TestSuite,
    base_url: &str,
    n: usize,
    reset_hook: Option<&str>,
) -> Result<ExecutionMatrix, ExecError> {
    Executor::new(base_url, ExecConfig::default())?.repeat_execute(suite, n, reset_hook)
}

fn run_reset_hook(hook: &str) -> Result<(), ExecError> {
    let status = Command::new("sh")
        .arg("-c")
        .arg(hook)
        .status()
        .map_err(|e| ExecError::Environment(format!("reset hook `{hook}` failed to start: {e}")))?;
    if status.success() {
        Ok(())
    } else {
        Err(ExecError::Environment(format!("reset hook `{hook}` exited with {status}")))
    }
}

pub fn validate_base_url(base_url: &str) -> Result<Url, ExecError> {
    let url = Url::parse(base_url).map_err(|e| ExecError::Config(format!("invalid base URL `{base_url}`: {e}")))?;
    if !matches!(url.scheme(), "http" | "https") {
        return Err(ExecError::Config(format!("base URL `{base_url}` is not http(s)")));
    }
    if base_url.ends_with('/') {
        return Err(ExecError::Config(format!("base URL `{base_url}` has a trailing slash")));
    }
    if url.query().is_some() || url.fragment().is_some() {
        return Err(ExecError::Config(format!("base URL `{base_url}` carries a query or fragment")));
    }
    Ok(url)
}

pub fn build_url(base_url: &str, call: &HttpCall) -> Result<String, ExecError> {
    let mut url = format!("{base_url}{}", call.path);
    if !call.query.is_empty() {
        let mut ser = url::form_urlencoded::Serializer::new(String::new());
        for (k, v) in &call.query {
            ser.append_pair(k, v);
        }
        url.push('?');
        url.push_str(&ser.finish());
    }
    Url::parse(&url).map_err(|e| ExecError::Config(format!("invalid request URL `{url}`: {e}")))?;
    Ok(url)
}

/// Evaluates one assertion; `Err` carries a rendering of what was observed.
pub fn evaluate(assertion: &Assertion, resp: &ResponseRecord) -> Result<(), String> {
    let actual = resp.value_at(&assertion.target);
    let ok = match &actual {
        None => false,
        Some(v) => matches(assertion.matcher, &assertion.expected, v),
    };
    if ok {
        Ok(())
    } else {
        let seen = actual.as_ref().map(render_value).unwrap_or_else(|| "<missing>".into());
        Err(format!(
            "{} {:?} {}: observed {}",
            assertion.target, assertion.matcher, assertion.expected, seen
        ))
    }
}

fn matches(matcher: Matcher, expected: &Expected, actual: &Value) -> bool {
    match (matcher, expected) {
        (Matcher::Equals, Expected::Scalar(s)) => s.matches(actual),
        (Matcher::Equals, Expected::List(items)) => match actual {
            Value::Array(vs) => vs.len() == items.len() && items.iter().zip(vs).all(|(e, v)| e.matches(v)),
            _ => false,
        },
        (Matcher::Contains, Expected::Scalar(Scalar::String(needle))) => render_value(actual).contains(needle.as_str()),
        (Matcher::NumberEquals, Expected::Scalar(Scalar::Number(n))) => match actual {
            Value::Number(a) => decimal_eq(n, &a.to_string()),
            _ => false,
        },
        (Matcher::HasItems, Expected::List(items)) => match actual {
            Value::Array(vs) => items.iter().all(|e| vs.iter().any(|v| e.matches(v))),
            _ => false,
        },
        (Matcher::IsEmpty, _) => match actual {
            Value::Array(vs) => vs.is_empty(),
            Value::Object(m) => m.is_empty(),
            Value::String(s) => s.is_empty(),
            _ => false,
        },
        (Matcher::SizeEquals, Expected::Scalar(Scalar::Number(n))) => {
            let len = match actual {
                Value::Array(vs) => vs.len(),
                Value::Object(m) => m.len(),
                _ => return false,
            };
            n.parse::<usize>().is_ok_and(|want| want == len)
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Method;

    fn json_response(status: u16, body: &str) -> ResponseRecord {
        ResponseRecord {
            status,
            headers: BTreeMap::from([("content-type".into(), vec!["application/json".into()])]),
            body: body.as_bytes().to_vec(),
            content_type: Some("application/json".into()),
            elapsed_ms: 1,
        }
    }

    fn body_assert(path: &str, matcher: Matcher, expected: Expected) -> Assertion {
        Assertion::new(Target::body(path), matcher, expected)
    }

    #[test]
    fn matcher_semantics() {
        let r = json_response(
            200,
            r#"{"base":666,"total":669.0,"msg":"Bad Request: x","tags":["a","b"],"e":[],"o":{"k":1}}"#,
        );
        let s = |v: &str| Scalar::String(v.into());
        let cases = [
            (Assertion::status(200), true),
            (Assertion::status(500), false),
            (body_assert("/base", Matcher::NumberEquals, Expected::number("666.0")), true),
            (body_assert("/total", Matcher::NumberEquals, Expected::number("669")), true),
            (body_assert("/base", Matcher::NumberEquals, Expected::number("3")), false),
            (body_assert("/msg", Matcher::Contains, Expected::string("Bad Request")), true),
            (body_assert("/msg", Matcher::Equals, Expected::string("Bad Request")), false),
            (body_assert("/tags", Matcher::HasItems, Expected::List(vec![s("b")])), true),
            (body_assert("/tags", Matcher::HasItems, Expected::List(vec![s("c")])), false),
            (body_assert("/tags", Matcher::Equals, Expected::List(vec![s("a"), s("b")])), true),
            (body_assert("/tags", Matcher::Equals, Expected::List(vec![s("b"), s("a")])), false),
            (body_assert("/tags", Matcher::SizeEquals, Expected::number("2")), true),
            (body_assert("/o", Matcher::SizeEquals, Expected::number("1")), true),
            (body_assert("/e", Matcher::IsEmpty, Expected::Scalar(Scalar::Null)), true),
            (body_assert("/tags", Matcher::IsEmpty, Expected::Scalar(Scalar::Null)), false),
            (body_assert("/missing", Matcher::Contains, Expected::string("")), false),
            (body_assert("", Matcher::Contains, Expected::string("\"base\":666")), true),
            (
                Assertion::new(Target::header("Content-Type"), Matcher::Contains, Expected::string("json")),
                true,
            ),
        ];
        for (a, want) in cases {
            assert_eq!(evaluate(&a, &r).is_ok(), want, "{a:?}");
        }
    }

    #[test]
    fn raw_bodies_are_addressable() {
        let r = ResponseRecord {
            status: 500,
            headers: BTreeMap::new(),
            body: b"boom".to_vec(),
            content_type: Some("text/plain".into()),
            elapsed_ms: 0,
        };
        assert!(evaluate(&body_assert("/raw", Matcher::Equals, Expected::string("boom")), &r).is_ok());
    }

    #[test]
    fn url_building_keeps_query_order() {
        let mut call = HttpCall::new(Method::Get, "/price/estimate");
        call.query = vec![("z".into(), "1".into()), ("a".into(), "x y".into())];
        assert_eq!(
            build_url("http://localhost:8080", &call).unwrap(),
            "http://localhost:8080/price/estimate?z=1&a=x+y"
        );
    }

    #[test]
    fn base_url_validation() {
        assert!(validate_base_url("http://localhost:1").is_ok());
        assert!(validate_base_url("http://localhost:1/api").is_ok());
        assert!(matches!(validate_base_url("localhost:1"), Err(ExecError::Config(_))));
        assert!(matches!(validate_base_url("ftp://x"), Err(ExecError::Config(_))));
        assert!(matches!(validate_base_url("http://x/"), Err(ExecError::Config(_))));
    }

    #[test]
    fn non_utf8_bodies_round_trip() {
        let r = ResponseRecord {
            status: 200,
            headers: BTreeMap::new(),
            body: vec![0xff, 0x00, 0xfe],
            content_type: None,
            elapsed_ms: 3,
        };
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("body_base64"));
        assert_eq!(serde_json::from_str::<ResponseRecord>(&text).unwrap(), r);
    }

    #[test]
    fn out_of_range_status_is_rejected() {
        let doc = r#"{"status":99,"headers":{},"content_type":null,"elapsed_ms":0}"#;
        assert!(serde_json::from_str::<ResponseRecord>(doc).is_err());
    }

    #[test]
    fn reset_hook_failure_is_environment_error() {
        assert!(run_reset_hook("true").is_ok());
        assert!(matches!(run_reset_hook("exit 3"), Err(ExecError::Environment(_))));
    }
}
