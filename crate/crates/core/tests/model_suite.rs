use std::collections::BTreeMap;

use proptest::prelude::*;

use restflake::executor::{evaluate, ResponseRecord};
use restflake::model::{
    parse_suite, parse_suite_with, serialize_suite, Assertion, Expected, FlakyNote, HttpCall, Matcher, Method,
    ModelError, ParseOptions, Scalar, Target, TestCase, TestSuite,
};

/// One test per concern; together they exercise every matcher.
const THREE_TESTS: &str = r#"{
  "name": "three",
  "metadata": {"generator": "hand-written"},
  "tests": [
    {"name": "scalars", "calls": [{"method": "GET", "path": "/item",
      "query": [["id", "7"], ["id", "8"]],
      "assertions": [
        {"target": "status", "matcher": "equals", "expected": 200},
        {"target": "header", "name": "content-type", "matcher": "contains", "expected": "json"},
        {"target": "body_path", "path": "/id", "matcher": "number_equals", "expected": 7.0},
        {"target": "body_path", "path": "/name", "matcher": "equals", "expected": "seven"},
        {"target": "body_path", "path": "/ok", "matcher": "equals", "expected": true},
        {"target": "body_path", "path": "/none", "matcher": "equals", "expected": null}
      ]}]},
    {"name": "collections", "calls": [{"method": "GET", "path": "/item",
      "assertions": [
        {"target": "body_path", "path": "/tags", "matcher": "has_items", "expected": ["b", "a"]},
        {"target": "body_path", "path": "/tags", "matcher": "size_equals", "expected": 3},
        {"target": "body_path", "path": "/tags", "matcher": "equals", "expected": ["a", "b", "c"]},
        {"target": "body_path", "path": "/empty", "matcher": "is_empty", "expected": null}
      ]}]},
    {"name": "disabled", "calls": [{"method": "POST", "path": "/item",
      "body": "{\"id\": 7}", "content_type": "application/json",
      "headers": {"accept": "*/*"},
      "assertions": [
        {"target": "body_path", "path": "/id", "matcher": "number_equals", "expected": 8,
         "disabled": true,
         "flaky_note": {"path": "/id", "fuzz_value": "8", "reexec_value": "7", "category": "Unk"}}
      ]}]}
  ]
}"#;

fn canned() -> ResponseRecord {
    ResponseRecord {
        status: 200,
        headers: BTreeMap::from([("content-type".into(), vec!["application/json".into()])]),
        body: br#"{"id":7,"name":"seven","ok":true,"none":null,"tags":["a","b","c"],"empty":[]}"#.to_vec(),
        content_type: Some("application/json".into()),
        elapsed_ms: 0,
    }
}

#[test]
fn every_matcher_passes_on_the_canned_response() {
    let suite = parse_suite(THREE_TESTS.as_bytes()).unwrap();
    assert_eq!(suite.tests.len(), 3);
    let r = canned();
    let mut seen = std::collections::HashSet::new();
    for a in suite.tests.iter().flat_map(|t| &t.calls).flat_map(|c| &c.assertions).filter(|a| !a.disabled) {
        seen.insert(format!("{:?}", a.matcher));
        assert_eq!(evaluate(a, &r), Ok(()), "{a:?}");
    }
    assert_eq!(seen.len(), 6);
    let disabled = &suite.tests[2].calls[0].assertions[0];
    assert!(disabled.disabled);
    assert!(evaluate(disabled, &r).is_err());
    assert_eq!(suite.tests[0].calls[0].query, vec![("id".into(), "7".into()), ("id".into(), "8".into())]);
}

#[test]
fn serialization_is_a_fixed_point() {
    let suite = parse_suite(THREE_TESTS.as_bytes()).unwrap();
    let bytes = serialize_suite(&suite);
    assert_eq!(parse_suite(&bytes).unwrap(), suite);
    assert_eq!(serialize_suite(&parse_suite(&bytes).unwrap()), bytes);
}

#[test]
fn unknown_fields_are_strict_by_default() {
    let doc = THREE_TESTS.replacen("\"metadata\"", "\"colour\": 1, \"metadata\"", 1);
    assert!(matches!(parse_suite(doc.as_bytes()), Err(ModelError::UnknownField(f)) if f == "colour"));
    let lenient = parse_suite_with(doc.as_bytes(), ParseOptions { strict: false }).unwrap();
    assert_eq!(lenient.name, "three");
}

#[test]
fn parse_errors_carry_positions() {
    match parse_suite(b"{\n  \"name\": \"x\",\n  \"tests\": [,]\n}") {
        Err(ModelError::Parse { line, column, .. }) => assert_eq!((line, column), (3, 13)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn validation_rules() {
    let bad = [
        THREE_TESTS.replace("\"name\": \"collections\"", "\"name\": \"scalars\""),
        THREE_TESTS.replacen("\"path\": \"/item\"", "\"path\": \"http://x/item\"", 1),
        THREE_TESTS.replacen("\"path\": \"/item\"", "\"path\": \"item\"", 1),
        THREE_TESTS.replace("\"expected\": 7.0", "\"expected\": \"7\""),
        THREE_TESTS.replace("\"expected\": [\"b\", \"a\"]", "\"expected\": \"b\""),
        THREE_TESTS.replace("\"matcher\": \"size_equals\", \"expected\": 3", "\"matcher\": \"size_equals\", \"expected\": 2.5"),
        THREE_TESTS.replace(
            ",\n         \"flaky_note\": {\"path\": \"/id\", \"fuzz_value\": \"8\", \"reexec_value\": \"7\", \"category\": \"Unk\"}",
            "",
        ),
    ];
    for (i, doc) in bad.iter().enumerate() {
        assert_ne!(doc, THREE_TESTS, "case {i} did not change the document");
        assert!(parse_suite(doc.as_bytes()).is_err(), "case {i} parsed");
    }
    assert!(matches!(
        parse_suite(bad[0].as_bytes()),
        Err(ModelError::DuplicateTest(n)) if n == "scalars"
    ));
}

fn scalar() -> impl Strategy<Value = Scalar> {
    prop_oneof![
        Just(Scalar::Null),
        any::<bool>().prop_map(Scalar::Bool),
        (-1000i64..1000).prop_map(|n| Scalar::Number(n.to_string())),
        "[a-z \"\\\\\n]{0,6}".prop_map(Scalar::String),
    ]
}

fn assertion() -> impl Strategy<Value = Assertion> {
    let target = prop_oneof![
        Just(Target::Status),
        "[a-z-]{1,8}".prop_map(|n| Target::header(&n)),
        "(/[a-z0-9]{1,4}){0,3}".prop_map(|p| Target::body(&p)),
    ];
    let shape = prop_oneof![
        scalar().prop_map(|s| (Matcher::Equals, Expected::Scalar(s))),
        prop::collection::vec(scalar(), 0..3).prop_map(|l| (Matcher::Equals, Expected::List(l))),
        "[a-z]{0,5}".prop_map(|s| (Matcher::Contains, Expected::string(s))),
        (0u32..100).prop_map(|n| (Matcher::NumberEquals, Expected::number(n.to_string()))),
        prop::collection::vec(scalar(), 0..3).prop_map(|l| (Matcher::HasItems, Expected::List(l))),
        Just((Matcher::IsEmpty, Expected::Scalar(Scalar::Null))),
        (0u32..9).prop_map(|n| (Matcher::SizeEquals, Expected::number(n.to_string()))),
    ];
    (target, shape, prop::option::of("[a-z0-9 ]{0,6}")).prop_map(|(target, (matcher, expected), note)| {
        let mut a = Assertion::new(target, matcher, expected);
        if let Some(v) = note {
            a.disabled = true;
            a.flaky_note = Some(FlakyNote {
                path: a.target.to_string(),
                fuzz_value: v.clone(),
                reexec_value: format!("{v}!"),
                category: None,
            });
        }
        a
    })
}

fn call() -> impl Strategy<Value = HttpCall> {
    (
        prop_oneof![Just(Method::Get), Just(Method::Post), Just(Method::Delete)],
        "(/[a-z0-9]{1,5}){1,3}",
        prop::collection::vec(("[a-z]{1,3}", "[a-z0-9 &=]{0,4}"), 0..3),
        prop::collection::btree_map("[a-z-]{1,6}", "[ -~]{0,6}", 0..3),
        prop::option::of("[ -~]{0,12}"),
        prop::collection::vec(assertion(), 0..4),
    )
        .prop_map(|(method, path, query, headers, body, assertions)| {
            let mut c = HttpCall::new(method, path);
            c.query = query;
            c.headers = headers;
            c.content_type = body.as_ref().map(|_| "application/json".to_string());
            c.body = body;
            c.assertions = assertions;
            c
        })
}

fn suite() -> impl Strategy<Value = TestSuite> {
    (
        "[a-z]{1,8}",
        prop::collection::btree_map("[a-z]{1,4}", "[a-z]{0,4}", 0..2),
        prop::collection::vec(prop::collection::vec(call(), 1..3), 0..4),
    )
        .prop_map(|(name, metadata, tests)| TestSuite {
            name,
            metadata,
            tests: tests
                .into_iter()
                .enumerate()
                .map(|(i, calls)| TestCase { name: format!("test_{i}"), calls })
                .collect(),
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn round_trip_and_byte_determinism(s in suite()) {
        let bytes = serialize_suite(&s);
        let back = parse_suite(&bytes).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(serialize_suite(&back), bytes);
    }
}
