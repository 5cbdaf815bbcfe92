use lmt_cli::document::{parse_document, parse_tree, serialize_tree, TreeDocument};
use lmt_core::{induced_matrix, Label};
use lmt_testkit as kit;
use proptest::prelude::*;

const TWO_LEAF: &str = r#"{
  "version": 1,
  "nodes": [
    {"id": "a", "f": 0, "parent": "m", "labels": [1]},
    {"id": "b", "f": 1, "parent": "m", "labels": [2]},
    {"id": "m", "f": 2, "parent": "r", "labels": []},
    {"id": "r", "f": "inf"}
  ],
  "metadata": {"source": "hand"}
}"#;

#[test]
fn two_leaf_document() {
    let t = parse_tree(TWO_LEAF.as_bytes()).unwrap();
    assert_eq!(t.leaf_count(), 2);
    assert_eq!(t.vertex_count(), 4);
    assert_eq!(induced_matrix(&t).unwrap().rows(), vec![vec![0.0, 2.0], vec![2.0, 1.0]]);
    assert!(t.tree().value(t.root()).is_infinite());
    assert_eq!(t.vertex_of(Label(2)).unwrap(), 1);
    assert!(t.embedding().is_none());
}

fn kind_of(text: &str) -> (&'static str, String, Vec<String>) {
    let f = parse_tree(text.as_bytes()).unwrap_err();
    (f.kind, f.message, f.violations)
}

#[test]
fn equal_values_on_an_edge_are_rejected() {
    let text = TWO_LEAF.replace(r#""f": 1, "parent": "m""#, r#""f": 2, "parent": "m""#);
    let (kind, _, violations) = kind_of(&text);
    assert_eq!(kind, "invalid_tree");
    assert!(violations.iter().any(|v| v.starts_with("equal_values_on_edge (b-m)")), "{violations:?}");
}

#[test]
fn structural_errors() {
    assert_eq!(kind_of(&TWO_LEAF.replace(r#""id": "b""#, r#""id": "a""#)).0, "document");
    assert_eq!(kind_of(&TWO_LEAF.replace(r#""parent": "m", "labels": [2]"#, r#""parent": "q", "labels": [2]"#)).0, "document");
    assert_eq!(kind_of(&TWO_LEAF.replace(r#""inf""#, r#""infinity""#)).0, "document");
    assert_eq!(kind_of(&TWO_LEAF.replace(r#""labels": [2]"#, r#""labels": [1]"#)).0, "document");
    assert_eq!(kind_of(&TWO_LEAF.replace(r#""version": 1"#, r#""version": 7"#)).0, "document");
    assert_eq!(kind_of(&TWO_LEAF.replace(r#""labels": [1]}"#, r#""labels": [1], "x": 1.0}"#)).0, "document");
    assert_eq!(kind_of(&TWO_LEAF.replace(r#""labels": [2]"#, r#""labels": []"#)).0, "input");
    assert_eq!(kind_of(&TWO_LEAF.replace(r#""id": "r", "f": "inf""#, r#""id": "r", "f": "inf", "labels": [3]"#)).0, "input");
    assert_eq!(kind_of(r#"{"version": 1, "nodes": []}"#).0, "document");
    assert_eq!(kind_of("{\"version\": 1, ").0, "syntax");
    assert_eq!(kind_of(r#"{"version": 1, "nodes": [], "extra": 0}"#).0, "syntax");
}

#[test]
fn coordinates_become_an_embedding() {
    let text = r#"{"version": 1, "nodes": [
        {"id": "a", "f": 0, "parent": "r", "labels": [1], "x": 1.5, "y": 0},
        {"id": "r", "f": "inf", "x": 1.5, "y": 1}]}"#;
    let t = parse_tree(text.as_bytes()).unwrap();
    let e = t.embedding().unwrap();
    assert_eq!(e.dim(), 2);
    assert_eq!(e.point(1), &[1.5, 1.0]);
    let back = serialize_tree(&t).unwrap();
    assert_eq!(parse_tree(back.as_bytes()).unwrap(), t);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn serialize_parse_is_identity(seed: u64, leaves in 1usize..=16, extra in 0usize..4, embed: bool) {
        let mut rng = kit::rng(seed);
        let base = kit::random_tree(&mut rng, leaves, false);
        let mut t = kit::with_extra_labels(&mut rng, &base, extra);
        if embed {
            t = kit::with_random_embedding(&mut rng, &t);
        }
        let text = serialize_tree(&t).unwrap();
        let back = parse_tree(text.as_bytes()).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(serialize_tree(&back).unwrap(), text.clone());
        let doc = parse_document(text.as_bytes()).unwrap();
        prop_assert_eq!(TreeDocument::from_tree(&back).unwrap(), doc);
    }
}
