use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{chain, Assembler, BuildError, ItemDecl, RuleBinding, StandardRules};
use crate::graph::{Direction, Graph};
use crate::render::Role;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DualRules {
    pub stack_forward: RuleBinding,
    pub stack_backward: RuleBinding,
    pub across_forward: RuleBinding,
    pub across_backward: RuleBinding,
    pub drill: RuleBinding,
    /// Lifts a cell to its dimension-A category, and a category to its parent.
    pub to_a: RuleBinding,
    pub to_b: RuleBinding,
}

impl Default for DualRules {
    fn default() -> Self {
        DualRules {
            stack_forward: RuleBinding::new("down", &["ArrowDown"]),
            stack_backward: RuleBinding::new("up", &["ArrowUp"]),
            across_forward: RuleBinding::new("right", &["ArrowRight"]),
            across_backward: RuleBinding::new("left", &["ArrowLeft"]),
            drill: RuleBinding::new("drill", &["Enter"]),
            to_a: RuleBinding::new("up-a", &["KeyL"]),
            to_b: RuleBinding::new("up-b", &["Backspace"]),
        }
    }
}

/// One dimension: a scaffold node and its categories in order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dimension {
    pub parent: ItemDecl,
    pub categories: Vec<ItemDecl>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDecl {
    pub a: String,
    pub b: String,
    #[serde(flatten)]
    pub item: ItemDecl,
}

fn default_true() -> bool {
    true
}

/// Two categorical dimensions over one set of cells. Dimension A categories
/// run along the stack rules, dimension B along the across rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct DualHierarchySpec {
    pub root: ItemDecl,
    pub dim_a: Dimension,
    pub dim_b: Dimension,
    pub cells: Vec<CellDecl>,
    #[serde(default = "default_true")]
    pub circular_within_stack: bool,
    #[serde(default)]
    pub circular_across: bool,
    #[serde(default)]
    pub rules: DualRules,
    #[serde(default)]
    pub standard: StandardRules,
    #[serde(default)]
    pub exit_target: Option<String>,
}

pub fn build_dual_hierarchy(spec: &DualHierarchySpec) -> Result<Graph, BuildError> {
    let a_ids: Vec<&str> = spec.dim_a.categories.iter().map(|c| c.id.as_str()).collect();
    let b_ids: Vec<&str> = spec.dim_b.categories.iter().map(|c| c.id.as_str()).collect();
    let expected = a_ids.len() * b_ids.len();
    if spec.cells.len() != expected {
        return Err(BuildError::CellCountMismatch {
            expected,
            found: spec.cells.len(),
        });
    }
    let mut grid: BTreeMap<(&str, &str), &str> = BTreeMap::new();
    for cell in &spec.cells {
        for (cat, known) in [(&cell.a, &a_ids), (&cell.b, &b_ids)] {
            if !known.contains(&cat.as_str()) {
                return Err(BuildError::UnknownCategory {
                    cell: cell.item.id.clone(),
                    category: cat.clone(),
                });
            }
        }
        if grid
            .insert((cell.a.as_str(), cell.b.as_str()), cell.item.id.as_str())
            .is_some()
        {
            return Err(BuildError::DuplicateCell {
                a: cell.a.clone(),
                b: cell.b.clone(),
            });
        }
    }

    let r = &spec.rules;
    let mut asm = Assembler::default();
    let a_parent = spec.dim_a.parent.id.as_str();
    let b_parent = spec.dim_b.parent.id.as_str();
    let root = spec.root.id.as_str();

    asm.add_node(spec.root.to_node(Role::Figure, None))?;
    asm.add_node(spec.dim_b.parent.to_node(Role::Group, Some((1, 2))))?;
    asm.add_node(spec.dim_a.parent.to_node(Role::Group, Some((2, 2))))?;
    for (i, c) in spec.dim_a.categories.iter().enumerate() {
        asm.add_node(c.to_node(Role::Listitem, Some((i + 1, a_ids.len()))))?;
    }
    for (i, c) in spec.dim_b.categories.iter().enumerate() {
        asm.add_node(c.to_node(Role::Listitem, Some((i + 1, b_ids.len()))))?;
    }
    for cell in &spec.cells {
        let at = a_ids.iter().position(|a| *a == cell.a).unwrap_or(0);
        asm.add_node(cell.item.to_node(Role::Image, Some((at + 1, a_ids.len()))))?;
    }

    asm.rule(&r.stack_forward, Direction::TowardTarget);
    asm.rule(&r.stack_backward, Direction::TowardSource);
    asm.rule(&r.across_forward, Direction::TowardTarget);
    asm.rule(&r.across_backward, Direction::TowardSource);
    asm.rule(&r.drill, Direction::TowardTarget);
    asm.rule(&r.to_a, Direction::TowardTarget);
    asm.rule(&r.to_b, Direction::TowardTarget);

    let (down, up) = (r.stack_forward.name.as_str(), r.stack_backward.name.as_str());
    let (right, left) = (r.across_forward.name.as_str(), r.across_backward.name.as_str());
    let (drill, to_a, to_b) = (r.drill.name.as_str(), r.to_a.name.as_str(), r.to_b.name.as_str());

    // scaffold
    asm.link("drill", root, b_parent, &[drill]);
    asm.link("across", b_parent, a_parent, &[right, left]);
    asm.link("lift", a_parent, root, &[to_a]);
    asm.link("lift", b_parent, root, &[to_b]);

    // categories
    chain(&mut asm, "stack", &a_ids, down, up, spec.circular_within_stack);
    chain(&mut asm, "across", &b_ids, right, left, spec.circular_across);
    if let (Some(a0), Some(b0)) = (a_ids.first(), b_ids.first()) {
        asm.link("drill", a_parent, a0, &[drill]);
        asm.link("drill", b_parent, b0, &[drill]);
        for a in &a_ids {
            asm.link("drill", a, grid[&(*a, *b0)], &[drill]);
        }
        for b in &b_ids {
            asm.link("drill", b, grid[&(*a0, *b)], &[drill]);
        }
    }
    for a in &a_ids {
        asm.link("lift", a, a_parent, &[to_a]);
    }
    for b in &b_ids {
        asm.link("lift", b, b_parent, &[to_b]);
    }

    // cells
    for b in &b_ids {
        let stack: Vec<&str> = a_ids.iter().map(|a| grid[&(*a, *b)]).collect();
        chain(&mut asm, "stack", &stack, down, up, spec.circular_within_stack);
    }
    for a in &a_ids {
        let row: Vec<&str> = b_ids.iter().map(|b| grid[&(*a, *b)]).collect();
        chain(&mut asm, "across", &row, right, left, spec.circular_across);
    }
    for cell in &spec.cells {
        asm.link("lift", &cell.item.id, &cell.a, &[to_a]);
        asm.link("lift", &cell.item.id, &cell.b, &[to_b]);
    }

    asm.standard(&spec.standard);
    asm.finish(root, spec.exit_target.clone(), drill)
}
