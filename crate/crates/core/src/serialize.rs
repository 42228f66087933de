//! JSON tree documents.
//!
//! A document carries the feature space it was built against, so it can be
//! read back without other inputs. Thresholds are written with full
//! precision and round-trip exactly.
//!
//! ```json
//! {"format": "treestab-tree/1", "space_digest": "…", "space": {"features": […]},
//!  "class_count": 2, "root": 2, "depth": 1,
//!  "nodes": [{"id": 0, "kind": "leaf", "label": 0, "distribution": [1, 0], "samples": 4},
//!            {"id": 1, "kind": "leaf", "label": 1, "distribution": [0, 1], "samples": 3},
//!            {"id": 2, "kind": "split", "feature": 0, "threshold": 2.5, "left": 0, "right": 1}]}
//! ```

use serde_json::{Map, Value, json};

use crate::error::{Error, Result};
use crate::mask::CategoryMask;
use crate::space::FeatureSpace;
use crate::tree::{DecisionTree, Node, SplitRule};

pub const FORMAT: &str = "treestab-tree/1";

pub fn to_value(tree: &DecisionTree, space: &FeatureSpace) -> Result<Value> {
    if tree.space_digest() != space.digest() {
        return Err(Error::Config("tree and space digests differ".into()));
    }
    let nodes: Vec<Value> = tree
        .nodes()
        .iter()
        .enumerate()
        .map(|(id, n)| match n {
            Node::Split {
                feature,
                rule: SplitRule::Threshold(t),
                left,
                right,
            } => json!({"id": id, "kind": "split", "feature": feature, "threshold": t, "left": left, "right": right}),
            Node::Split {
                feature,
                rule: SplitRule::Categories(m),
                left,
                right,
            } => json!({"id": id, "kind": "split", "feature": feature,
                        "categories": m.iter().collect::<Vec<_>>(), "left": left, "right": right}),
            Node::Leaf {
                label,
                distribution,
                samples,
            } => json!({"id": id, "kind": "leaf", "label": label, "distribution": distribution, "samples": samples}),
        })
        .collect();
    Ok(json!({
        "format": FORMAT,
        "space_digest": space.digest().as_str(),
        "space": serde_json::to_value(space)?,
        "class_count": tree.class_count(),
        "root": tree.root(),
        "depth": tree.depth(),
        "nodes": nodes,
    }))
}

pub fn to_json(tree: &DecisionTree, space: &FeatureSpace) -> Result<String> {
    Ok(serde_json::to_string_pretty(&to_value(tree, space)?)? + "\n")
}

fn field<'a>(obj: &'a Map<String, Value>, at: &str, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::parse(format!("{at}.{key}"), "missing field"))
}

fn as_index(v: &Value, path: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::parse(path, format!("expected a non-negative integer, got {v}")))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| Error::parse(path, format!("expected a number, got {v}")))
}

/// Parses a document, checking its digest against the embedded space.
pub fn from_json(text: &str) -> Result<(DecisionTree, FeatureSpace)> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::parse("$", e.to_string()))?;
    let top = doc.as_object().ok_or_else(|| Error::parse("$", "expected an object"))?;
    match field(top, "$", "format")?.as_str() {
        Some(FORMAT) => {}
        other => {
            return Err(Error::parse("$.format", format!("unsupported format {other:?}")));
        }
    }
    let space: FeatureSpace = serde_json::from_value(field(top, "$", "space")?.clone())
        .map_err(|e| Error::parse("$.space", e.to_string()))?;
    let digest = field(top, "$", "space_digest")?
        .as_str()
        .ok_or_else(|| Error::parse("$.space_digest", "expected a string"))?;
    if digest != space.digest().as_str() {
        return Err(Error::parse(
            "$.space_digest",
            format!("digest {digest} does not match the embedded space ({})", space.digest()),
        ));
    }
    let k = as_index(field(top, "$", "class_count")?, "$.class_count")?;
    let root = as_index(field(top, "$", "root")?, "$.root")?;
    let raw = field(top, "$", "nodes")?
        .as_array()
        .ok_or_else(|| Error::parse("$.nodes", "expected an array"))?;
    let mut nodes = Vec::with_capacity(raw.len());
    for (i, v) in raw.iter().enumerate() {
        let at = format!("$.nodes[{i}]");
        let obj = v.as_object().ok_or_else(|| Error::parse(&at, "expected an object"))?;
        if let Some(id) = obj.get("id")
            && as_index(id, &format!("{at}.id"))? != i
        {
            return Err(Error::parse(format!("{at}.id"), "ids must equal array positions"));
        }
        let node = match field(obj, &at, "kind")?.as_str() {
            Some("leaf") => {
                let dist = field(obj, &at, "distribution")?
                    .as_array()
                    .ok_or_else(|| Error::parse(format!("{at}.distribution"), "expected an array"))?
                    .iter()
                    .enumerate()
                    .map(|(c, p)| as_f64(p, &format!("{at}.distribution[{c}]")))
                    .collect::<Result<Vec<_>>>()?;
                Node::Leaf {
                    label: as_index(field(obj, &at, "label")?, &format!("{at}.label"))?,
                    distribution: dist,
                    samples: match obj.get("samples") {
                        Some(s) => as_index(s, &format!("{at}.samples"))?,
                        None => 0,
                    },
                }
            }
            Some("split") => {
                let feature = as_index(field(obj, &at, "feature")?, &format!("{at}.feature"))?;
                let rule = match (obj.get("threshold"), obj.get("categories")) {
                    (Some(t), None) => SplitRule::Threshold(as_f64(t, &format!("{at}.threshold"))?),
                    (None, Some(c)) => {
                        let card = space.cardinality(feature).ok_or_else(|| {
                            Error::parse(
                                format!("{at}.categories"),
                                format!("feature {feature} is not categorical"),
                            )
                        })?;
                        let members = c
                            .as_array()
                            .ok_or_else(|| Error::parse(format!("{at}.categories"), "expected an array"))?
                            .iter()
                            .enumerate()
                            .map(|(m, x)| {
                                let path = format!("{at}.categories[{m}]");
                                let x = as_index(x, &path)?;
                                if x >= card {
                                    return Err(Error::parse(path, format!("category {x} not below {card}")));
                                }
                                Ok(x)
                            })
                            .collect::<Result<Vec<_>>>()?;
                        SplitRule::Categories(CategoryMask::from_indices(card, members))
                    }
                    _ => {
                        return Err(Error::parse(
                            &at,
                            "a split needs exactly one of threshold or categories",
                        ));
                    }
                };
                Node::Split {
                    feature,
                    rule,
                    left: as_index(field(obj, &at, "left")?, &format!("{at}.left"))?,
                    right: as_index(field(obj, &at, "right")?, &format!("{at}.right"))?,
                }
            }
            other => {
                return Err(Error::parse(
                    format!("{at}.kind"),
                    format!("unknown node kind {other:?}"),
                ));
            }
        };
        nodes.push(node);
    }
    let tree = DecisionTree::new(nodes, root, &space, k)?;
    if let Some(d) = top.get("depth")
        && as_index(d, "$.depth")? != tree.depth()
    {
        return Err(Error::parse(
            "$.depth",
            format!("stated depth differs from actual {}", tree.depth()),
        ));
    }
    Ok((tree, space))
}
