//! Path-level decomposition of response bodies.
//!
//! Paths are `/`-separated: object keys appear verbatim, array indices in
//! decimal, and the root is the empty string. Keys that themselves contain
//! `/` are not escaped, so such bodies cannot be rebuilt unambiguously.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{Map, Value};

pub const RAW_PATH: &str = "/raw";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Leaf {
    String(String),
    /// Decimal text as it appeared in the body.
    Number(String),
    Bool(bool),
    Null,
}

impl Leaf {
    pub fn render(&self) -> String {
        match self {
            Leaf::String(s) => s.clone(),
            Leaf::Number(n) => n.clone(),
            Leaf::Bool(b) => b.to_string(),
            Leaf::Null => "null".to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Leaf::String(s) => Value::String(s.clone()),
            Leaf::Number(n) => n.parse::<serde_json::Number>().map(Value::Number).unwrap_or(Value::Null),
            Leaf::Bool(b) => Value::Bool(*b),
            Leaf::Null => Value::Null,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BodyTree {
    pub leaves: BTreeMap<String, Leaf>,
    /// Array node path → canonical rendering of each element, in order.
    pub arrays: BTreeMap<String, Vec<String>>,
    pub objects: BTreeSet<String>,
    /// Set when the body was declared structured but did not parse.
    pub fallback: bool,
}

impl BodyTree {
    pub fn is_array(&self, path: &str) -> bool {
        self.arrays.contains_key(path)
    }

    pub fn node_kind(&self, path: &str) -> Option<NodeKind> {
        if self.arrays.contains_key(path) {
            Some(NodeKind::Array)
        } else if self.objects.contains(path) {
            Some(NodeKind::Object)
        } else if self.leaves.contains_key(path) {
            Some(NodeKind::Leaf)
        } else {
            None
        }
    }

    /// Rebuilds the body a structured tree was flattened from.
    pub fn rebuild(&self) -> Value {
        if let Some(leaf) = self.leaves.get("") {
            return leaf.to_json();
        }
        let mut root = if self.arrays.contains_key("") {
            Value::Array(Vec::new())
        } else {
            Value::Object(Map::new())
        };
        // Shorter paths first so parents exist before children.
        let mut nodes: Vec<(&str, Value)> = self
            .objects
            .iter()
            .filter(|p| !p.is_empty())
            .map(|p| (p.as_str(), Value::Object(Map::new())))
            .chain(
                self.arrays
                    .keys()
                    .filter(|p| !p.is_empty())
                    .map(|p| (p.as_str(), Value::Array(Vec::new()))),
            )
            .chain(self.leaves.iter().map(|(p, l)| (p.as_str(), l.to_json())))
            .collect();
        nodes.sort_by_key(|(p, _)| (depth(p), segments(p).last().and_then(|s| s.parse::<usize>().ok())));
        for (path, value) in nodes {
            insert_at(&mut root, path, value);
        }
        root
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Object,
    Array,
    Leaf,
}

pub fn is_structured(content_type: Option<&str>) -> bool {
    content_type
        .map(|ct| ct.to_ascii_lowercase())
        .is_some_and(|ct| ct.contains("/json") || ct.contains("+json"))
}

pub fn flatten_body(body: &[u8], content_type: Option<&str>) -> BodyTree {
    let mut tree = BodyTree::default();
    if is_structured(content_type) {
        match serde_json::from_slice::<Value>(body) {
            Ok(v) => {
                flatten_value(&v, String::new(), &mut tree);
                return tree;
            }
            Err(_) => tree.fallback = true,
        }
    }
    if !body.is_empty() || tree.fallback {
        tree.leaves.insert(
            RAW_PATH.to_string(),
            Leaf::String(String::from_utf8_lossy(body).into_owned()),
        );
    }
    tree
}

pub fn flatten_value(v: &Value, path: String, tree: &mut BodyTree) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                flatten_value(child, format!("{path}/{k}"), tree);
            }
            tree.objects.insert(path);
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten_value(child, format!("{path}/{i}"), tree);
            }
            tree.arrays.insert(path, items.iter().map(canonical_json).collect());
        }
        Value::String(s) => {
            tree.leaves.insert(path, Leaf::String(s.clone()));
        }
        Value::Number(n) => {
            tree.leaves.insert(path, Leaf::Number(n.to_string()));
        }
        Value::Bool(b) => {
            tree.leaves.insert(path, Leaf::Bool(*b));
        }
        Value::Null => {
            tree.leaves.insert(path, Leaf::Null);
        }
    }
}

/// Compact JSON with sorted object keys.
pub fn canonical_json(v: &Value) -> String {
    // serde_json's default map is ordered, so plain serialization is canonical.
    serde_json::to_string(v).expect("values always serialize")
}

/// Renders a value for reports: strings as their text, everything else as JSON.
pub fn render_value(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => canonical_json(other),
    }
}

pub fn segments(path: &str) -> Vec<&str> {
    if path.is_empty() {
        Vec::new()
    } else {
        path.strip_prefix('/').unwrap_or(path).split('/').collect()
    }
}

fn depth(path: &str) -> usize {
    segments(path).len()
}

/// Looks up a canonical path inside a JSON value.
pub fn resolve<'a>(root: &'a Value, path: &str) -> Option<&'a Value> {
    let mut cur = root;
    for seg in segments(path) {
        cur = match cur {
            Value::Object(map) => map.get(seg)?,
            Value::Array(items) => items.get(seg.parse::<usize>().ok()?)?,
            _ => return None,
        };
    }
    Some(cur)
}

/// True if `path` lies strictly below `ancestor`.
pub fn is_descendant(path: &str, ancestor: &str) -> bool {
    path.len() > ancestor.len() && path.starts_with(ancestor) && path.as_bytes()[ancestor.len()] == b'/'
}

fn insert_at(root: &mut Value, path: &str, value: Value) {
    let segs = segments(path);
    let Some((last, parents)) = segs.split_last() else {
        *root = value;
        return;
    };
    let mut cur = root;
    for seg in parents {
        cur = match cur {
            Value::Object(map) => map.entry(seg.to_string()).or_insert(Value::Null),
            Value::Array(items) => {
                let i: usize = seg.parse().expect("array segments are indices");
                if items.len() <= i {
                    items.resize(i + 1, Value::Null);
                }
                &mut items[i]
            }
            _ => return,
        };
    }
    match cur {
        Value::Object(map) => {
            map.insert(last.to_string(), value);
        }
        Value::Array(items) => {
            let i: usize = last.parse().expect("array segments are indices");
            if items.len() <= i {
                items.resize(i + 1, Value::Null);
            }
            items[i] = value;
        }
        _ => {}
    }
}
