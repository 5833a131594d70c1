use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{chain, Assembler, BuildError, ItemDecl, RuleBinding, StandardRules};
use crate::graph::{Direction, Graph};
use crate::render::Role;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TreeRules {
    pub next_sibling: RuleBinding,
    pub prev_sibling: RuleBinding,
    pub drill: RuleBinding,
    pub up: RuleBinding,
}

impl Default for TreeRules {
    fn default() -> Self {
        TreeRules {
            next_sibling: RuleBinding::new("right", &["ArrowRight"]),
            prev_sibling: RuleBinding::new("left", &["ArrowLeft"]),
            drill: RuleBinding::new("drill", &["Enter"]),
            up: RuleBinding::new("up", &["Backspace"]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNodeDecl {
    #[serde(flatten)]
    pub item: ItemDecl,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
}

impl TreeNodeDecl {
    pub fn new(id: impl Into<String>, parent: Option<&str>) -> Self {
        TreeNodeDecl {
            item: ItemDecl::new(id),
            parent: parent.map(str::to_string),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TreeSpec {
    pub nodes: Vec<TreeNodeDecl>,
    #[serde(default)]
    pub sibling_circular: bool,
    #[serde(default)]
    pub rules: TreeRules,
    #[serde(default)]
    pub standard: StandardRules,
    #[serde(default)]
    pub exit_target: Option<String>,
}

/// Builds a hierarchy from a parent relation. Children keep declaration
/// order; the parent drills into its first child.
pub fn build_tree(spec: &TreeSpec) -> Result<Graph, BuildError> {
    let mut index = BTreeMap::new();
    for (i, n) in spec.nodes.iter().enumerate() {
        if index.insert(n.item.id.as_str(), i).is_some() {
            return Err(BuildError::DuplicateId(n.item.id.clone()));
        }
    }
    let roots: Vec<&str> = spec
        .nodes
        .iter()
        .filter(|n| n.parent.is_none())
        .map(|n| n.item.id.as_str())
        .collect();
    let root = match roots.as_slice() {
        [] => return Err(BuildError::NoRoot),
        [one] => *one,
        _ => {
            return Err(BuildError::MultipleRoots(
                roots.iter().map(|s| s.to_string()).collect(),
            ))
        }
    };
    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for n in &spec.nodes {
        if let Some(p) = &n.parent {
            if !index.contains_key(p.as_str()) {
                return Err(BuildError::UnknownParent {
                    node: n.item.id.clone(),
                    parent: p.clone(),
                });
            }
            children.entry(p.as_str()).or_default().push(&n.item.id);
        }
    }
    // With one root and every parent known, a node that cannot reach the
    // root sits on a cycle.
    for n in &spec.nodes {
        let mut at = n;
        for _ in 0..=spec.nodes.len() {
            match &at.parent {
                None => break,
                Some(p) => at = &spec.nodes[index[p.as_str()]],
            }
        }
        if at.parent.is_some() {
            return Err(BuildError::CycleDetected(n.item.id.clone()));
        }
    }

    let rules = &spec.rules;
    let mut asm = Assembler::default();
    for n in &spec.nodes {
        let position = n.parent.as_deref().map(|p| {
            let sibs = &children[p];
            let at = sibs.iter().position(|s| *s == n.item.id).unwrap_or(0);
            (at + 1, sibs.len())
        });
        let role = if children.contains_key(n.item.id.as_str()) {
            Role::Group
        } else {
            Role::Listitem
        };
        asm.add_node(n.item.to_node(role, position))?;
    }
    asm.rule(&rules.next_sibling, Direction::TowardTarget);
    asm.rule(&rules.prev_sibling, Direction::TowardSource);
    asm.rule(&rules.drill, Direction::TowardTarget);
    asm.rule(&rules.up, Direction::TowardSource);
    for n in &spec.nodes {
        let Some(kids) = children.get(n.item.id.as_str()) else {
            continue;
        };
        asm.link("drill", &n.item.id, kids[0], &[&rules.drill.name]);
        for kid in kids {
            asm.link("up", &n.item.id, kid, &[&rules.up.name]);
        }
        chain(
            &mut asm,
            "sibling",
            kids,
            &rules.next_sibling.name,
            &rules.prev_sibling.name,
            spec.sibling_circular,
        );
    }
    asm.standard(&spec.standard);
    asm.finish(root, spec.exit_target.clone(), &rules.drill.name)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::super::testutil::reachable;
    use super::*;
    use crate::engine::{MoveStatus, Session};

    fn spec(pairs: &[(&str, Option<&str>)]) -> TreeSpec {
        TreeSpec {
            nodes: pairs.iter().map(|(id, p)| TreeNodeDecl::new(*id, *p)).collect(),
            ..Default::default()
        }
    }

    fn small() -> Graph {
        build_tree(&spec(&[
            ("root", None),
            ("a", Some("root")),
            ("b", Some("root")),
            ("c", Some("root")),
        ]))
        .unwrap()
    }

    fn step(g: &Graph, at: &str, rule: &str) -> (MoveStatus, Option<String>) {
        let (mut s, _) = Session::enter(Arc::new(g.clone()), Some(at)).unwrap();
        let r = s.navigate(rule).unwrap();
        (r.status, r.to.map(|t| t.to_string()))
    }

    #[test]
    fn drill_goes_to_first_child() {
        assert_eq!(
            step(&small(), "root", "drill"),
            (MoveStatus::Moved, Some("a".into()))
        );
    }

    #[test]
    fn sibling_chain_is_open_by_default() {
        assert_eq!(step(&small(), "c", "right").0, MoveStatus::Blocked);
        assert_eq!(step(&small(), "b", "right").1.as_deref(), Some("c"));
    }

    #[test]
    fn up_from_any_child_reaches_parent() {
        for child in ["a", "b", "c"] {
            assert_eq!(step(&small(), child, "up").1.as_deref(), Some("root"));
        }
    }

    #[test]
    fn three_levels_all_reachable() {
        let g = build_tree(&spec(&[
            ("root", None),
            ("a", Some("root")),
            ("b", Some("root")),
            ("a1", Some("a")),
            ("a2", Some("a")),
            ("b1", Some("b")),
        ]))
        .unwrap();
        assert_eq!(reachable(&g).len(), 6);
    }

    #[test]
    fn structural_errors() {
        assert_eq!(
            build_tree(&spec(&[("a", None), ("b", None)])).unwrap_err(),
            BuildError::MultipleRoots(vec!["a".into(), "b".into()])
        );
        assert_eq!(
            build_tree(&spec(&[("a", Some("b")), ("b", Some("a"))])).unwrap_err(),
            BuildError::NoRoot
        );
        assert!(matches!(
            build_tree(&spec(&[("r", None), ("a", Some("b")), ("b", Some("a"))])).unwrap_err(),
            BuildError::CycleDetected(_)
        ));
        assert_eq!(
            build_tree(&spec(&[("r", None), ("a", Some("zz"))])).unwrap_err(),
            BuildError::UnknownParent {
                node: "a".into(),
                parent: "zz".into()
            }
        );
    }
}
