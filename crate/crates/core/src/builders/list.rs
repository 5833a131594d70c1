use serde::{Deserialize, Serialize};

use super::{chain, Assembler, BuildError, ItemDecl, RuleBinding, StandardRules};
use crate::graph::{Direction, Graph, DEFAULT_DRILL_RULE};
use crate::render::Role;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ListRules {
    pub forward: RuleBinding,
    pub backward: RuleBinding,
}

impl Default for ListRules {
    fn default() -> Self {
        ListRules {
            forward: RuleBinding::new("forward", &["ArrowRight", "ArrowDown"]),
            backward: RuleBinding::new("backward", &["ArrowLeft", "ArrowUp"]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ListSpec {
    pub items: Vec<ItemDecl>,
    #[serde(default)]
    pub circular: bool,
    #[serde(default)]
    pub rules: ListRules,
    #[serde(default)]
    pub standard: StandardRules,
    #[serde(default)]
    pub exit_target: Option<String>,
}

pub fn build_list(spec: &ListSpec) -> Result<Graph, BuildError> {
    if spec.items.is_empty() {
        return Err(BuildError::EmptyList);
    }
    let mut asm = Assembler::default();
    let n = spec.items.len();
    for (i, item) in spec.items.iter().enumerate() {
        asm.add_node(item.to_node(Role::Listitem, Some((i + 1, n))))?;
    }
    asm.rule(&spec.rules.forward, Direction::TowardTarget);
    asm.rule(&spec.rules.backward, Direction::TowardSource);
    let ids: Vec<&str> = spec.items.iter().map(|i| i.id.as_str()).collect();
    chain(
        &mut asm,
        "seq",
        &ids,
        &spec.rules.forward.name,
        &spec.rules.backward.name,
        spec.circular,
    );
    asm.standard(&spec.standard);
    asm.finish(ids[0], spec.exit_target.clone(), DEFAULT_DRILL_RULE)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::engine::{MoveStatus, Session};
    use crate::graph::{error_count, validate};

    fn spec(n: usize, circular: bool) -> ListSpec {
        ListSpec {
            items: (1..=n).map(|i| ItemDecl::new(format!("item{i}"))).collect(),
            circular,
            ..Default::default()
        }
    }

    fn walk(g: Graph, start: &str, rule: &str) -> (MoveStatus, Option<String>) {
        let (mut s, _) = Session::enter(Arc::new(g), Some(start)).unwrap();
        let r = s.navigate(rule).unwrap();
        (r.status, r.to.map(|t| t.to_string()))
    }

    #[test]
    fn open_chain_blocks_at_end() {
        let g = build_list(&spec(3, false)).unwrap();
        assert_eq!(walk(g, "item3", "forward").0, MoveStatus::Blocked);
    }

    #[test]
    fn circular_chain_wraps() {
        let g = build_list(&spec(3, true)).unwrap();
        assert_eq!(
            walk(g.clone(), "item3", "forward"),
            (MoveStatus::Moved, Some("item1".into()))
        );
        assert_eq!(
            walk(g, "item1", "backward"),
            (MoveStatus::Moved, Some("item3".into()))
        );
    }

    #[test]
    fn single_item_blocks_everywhere() {
        for circular in [false, true] {
            let g = build_list(&spec(1, circular)).unwrap();
            assert_eq!(error_count(&validate(&g)), 0);
            assert_eq!(walk(g.clone(), "item1", "forward").0, MoveStatus::Blocked);
            assert_eq!(walk(g, "item1", "backward").0, MoveStatus::Blocked);
        }
    }

    #[test]
    fn empty_list_rejected() {
        assert_eq!(build_list(&spec(0, false)).unwrap_err(), BuildError::EmptyList);
    }

    #[test]
    fn positions_are_filled() {
        let g = build_list(&spec(4, false)).unwrap();
        let pos = g.node("item2").unwrap().semantics.position.unwrap();
        assert_eq!((pos.index, pos.count), (2, 4));
    }
}
