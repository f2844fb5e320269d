use std::sync::LazyLock;

use proptest::prelude::*;

use restflake::inference::{canonicalize, evaluate_corpus, infer_volatile, CorpusEntry, PatternCatalog, VolatileKind};

const CORPUS: &str = include_str!("../fixtures/inference_corpus.json");

static CATALOG: LazyLock<PatternCatalog> = LazyLock::new(PatternCatalog::default);

fn fragment() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("2026-12-03T06:38:31.272230".to_string()),
        Just("java.io.ByteArrayInputStream@72c11c70".to_string()),
        Just("[Ljava.util.regex.Pattern$Flag;@5372cc34".to_string()),
        Just("$2a$10$Nv9OKJP1TjI9uQfwWdYZsumNi0tLOC2a/q5Dco4klHcOHsUZVACQi".to_string()),
        Just("5d41402abc4b2a76b9719d911017c592".to_string()),
        Just("at com.example.Foo.bar(Foo.java:12)".to_string()),
        Just("0x7ffd5a3c2b10".to_string()),
        Just("1700000000".to_string()),
        Just("1700000000123".to_string()),
        "[0-9a-f]{8}-[0-9a-f]{4}-4[0-9a-f]{3}-[89ab][0-9a-f]{3}-[0-9a-f]{12}",
        "[0-9a-f]{64}",
        "[0-9a-f]{40}",
        "20[0-9]{2}-(0[1-9]|1[0-2])-(0[1-9]|1[0-9]|2[0-8])T([01][0-9]|2[0-3]):[0-5][0-9]:[0-5][0-9]Z",
        "[A-Za-z][a-z]{0,5}@[0-9a-f]{8}",
        Just("_EM_POTENTIAL_TIME_FLAKINESS_".to_string()),
    ]
}

fn noise() -> impl Strategy<Value = String> {
    prop_oneof![
        "[ a-zA-Z0-9:;,._@$/-]{0,12}",
        Just(" ".to_string()),
        Just("Bad Request".to_string()),
        Just("; line: 1, column: 20".to_string()),
    ]
}

fn mixed_value() -> impl Strategy<Value = String> {
    prop::collection::vec((noise(), prop::option::of(fragment())), 1..5).prop_map(|parts| {
        parts
            .into_iter()
            .map(|(n, f)| format!("{n}{}", f.unwrap_or_default()))
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn canonicalization_is_idempotent_and_placeholders_are_fixed_points(v in mixed_value()) {
        let cat = &*CATALOG;
        let once = canonicalize(&v, cat);
        let twice = canonicalize(&once, cat);
        prop_assert_eq!(&once, &twice);
        for kind in VolatileKind::ALL {
            let p = kind.placeholder();
            prop_assert_eq!(canonicalize(&p, cat), p.clone());
            prop_assert!(infer_volatile(&p, cat).is_empty());
        }
        let spans = infer_volatile(&v, cat);
        for w in spans.windows(2) {
            prop_assert!(w[0].end <= w[1].start);
        }
    }
}

#[test]
fn shipped_corpus_has_perfect_scores() {
    let entries: Vec<CorpusEntry> = serde_json::from_str(CORPUS).unwrap();
    assert!(entries.len() >= 60);
    let scores = evaluate_corpus(&entries, &PatternCatalog::default());
    let in_scope = PatternCatalog::default().enabled_kinds();
    assert_eq!(in_scope.len(), 12);
    for kind in in_scope {
        let s = scores.get(&kind).unwrap_or_else(|| panic!("{kind} absent from corpus"));
        assert_eq!((s.precision, s.recall), (Some(1.0), Some(1.0)), "{kind}: {s:?}");
    }
}

#[test]
fn disabling_a_kind_removes_its_spans() {
    let mut cat = PatternCatalog::default();
    let v = "at 2026-12-03T06:38:31.272230";
    assert_eq!(infer_volatile(v, &cat).len(), 1);
    cat.set_enabled(VolatileKind::Iso8601, false);
    assert!(infer_volatile(v, &cat).is_empty());
}
