use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{chain, Assembler, BuildError, ItemDecl, RuleBinding, StandardRules};
use crate::graph::Direction;
use crate::graph::Graph;
use crate::render::Role;

pub const RING_UP_EDGE: &str = "ring-up";
pub const RING_NEXT_EDGE: &str = "ring-next";
pub const RING_PREV_EDGE: &str = "ring-prev";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AdjacencyRules {
    pub next_region: RuleBinding,
    pub prev_region: RuleBinding,
    pub drill: RuleBinding,
    pub drill_to_neighbor_list: RuleBinding,
    pub next_neighbor: RuleBinding,
    pub prev_neighbor: RuleBinding,
    pub up: RuleBinding,
}

impl Default for AdjacencyRules {
    fn default() -> Self {
        AdjacencyRules {
            next_region: RuleBinding::new("next-region", &["ArrowDown"]),
            prev_region: RuleBinding::new("prev-region", &["ArrowUp"]),
            drill: RuleBinding::new("drill", &["Enter"]),
            drill_to_neighbor_list: RuleBinding::new("neighbors", &["KeyN"]),
            next_neighbor: RuleBinding::new("next-neighbor", &["ArrowRight"]),
            prev_neighbor: RuleBinding::new("prev-neighbor", &["ArrowLeft"]),
            up: RuleBinding::new("up", &["Backspace"]),
        }
    }
}

/// Regions with a symmetric border relation. Each region gets an ordered
/// neighbor ring; entering it records the anchor so `up` can return there.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AdjacencySpec {
    pub root: ItemDecl,
    pub regions: Vec<ItemDecl>,
    pub borders: Vec<(String, String)>,
    #[serde(default)]
    pub rules: AdjacencyRules,
    #[serde(default)]
    pub standard: StandardRules,
    #[serde(default)]
    pub exit_target: Option<String>,
}

pub fn build_adjacency(spec: &AdjacencySpec) -> Result<Graph, BuildError> {
    if spec.regions.is_empty() {
        return Err(BuildError::EmptyList);
    }
    let ids: Vec<&str> = spec.regions.iter().map(|r| r.id.as_str()).collect();
    let known: BTreeSet<&str> = ids.iter().copied().collect();
    // neighbor rings in region declaration order
    let mut rings: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
    let order: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    for (a, b) in &spec.borders {
        for side in [a, b] {
            if !known.contains(side.as_str()) {
                return Err(BuildError::UnknownRegionInBorder(side.clone()));
            }
        }
        if a == b {
            return Err(BuildError::SelfBorder(a.clone()));
        }
        rings.entry(a.as_str()).or_default().insert(order[b.as_str()]);
        rings.entry(b.as_str()).or_default().insert(order[a.as_str()]);
    }

    let r = &spec.rules;
    let mut asm = Assembler::default();
    let root = spec.root.id.as_str();
    asm.add_node(spec.root.to_node(Role::Figure, None))?;
    for (i, region) in spec.regions.iter().enumerate() {
        asm.add_node(region.to_node(Role::Listitem, Some((i + 1, ids.len()))))?;
    }
    asm.rule(&r.next_region, Direction::TowardTarget);
    asm.rule(&r.prev_region, Direction::TowardSource);
    asm.rule(&r.drill, Direction::TowardTarget);
    asm.rule(&r.drill_to_neighbor_list, Direction::TowardTarget);
    asm.rule(&r.next_neighbor, Direction::TowardTarget);
    asm.rule(&r.prev_neighbor, Direction::TowardTarget);
    asm.rule(&r.up, Direction::TowardTarget);

    asm.generic(RING_UP_EDGE, "current", "ring-anchor", &[&r.up.name]);
    asm.generic(RING_NEXT_EDGE, "current", "ring-next", &[&r.next_neighbor.name]);
    asm.generic(RING_PREV_EDGE, "current", "ring-prev", &[&r.prev_neighbor.name]);
    // ring-up goes first so it shadows the plain lift while inside a ring
    for id in &ids {
        for edge in [RING_UP_EDGE, RING_NEXT_EDGE, RING_PREV_EDGE] {
            asm.attach(id, edge);
        }
    }
    for id in &ids {
        for &n in rings.get(id).into_iter().flatten() {
            asm.link("border", id, ids[n], &[&r.drill_to_neighbor_list.name]);
        }
    }
    asm.link("drill", root, ids[0], &[&r.drill.name]);
    chain(
        &mut asm,
        "region",
        &ids,
        &r.next_region.name,
        &r.prev_region.name,
        false,
    );
    for id in &ids {
        asm.link("lift", id, root, &[&r.up.name]);
    }
    asm.standard(&spec.standard);
    asm.finish(root, spec.exit_target.clone(), &r.drill.name)
}
