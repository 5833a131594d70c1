use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::{Graph, NodeId, ResolverContext};

pub type ResolverFn = Arc<dyn Fn(&Graph, &ResolverContext<'_>) -> Option<NodeId> + Send + Sync>;

pub(crate) const CURRENT: &str = "current";
pub(crate) const PREVIOUS: &str = "previous";
pub(crate) const ENTRY: &str = "entry";
pub(crate) const EXIT_RESOLVER: &str = "exit";
pub(crate) const FIRST_CHILD: &str = "first-child";
pub(crate) const RING_NEXT: &str = "ring-next";
pub(crate) const RING_PREV: &str = "ring-prev";
pub(crate) const RING_ANCHOR: &str = "ring-anchor";

/// Names of the resolvers every registry starts with.
pub const BUILTIN_RESOLVERS: &[&str] = &[
    CURRENT,
    PREVIOUS,
    ENTRY,
    EXIT_RESOLVER,
    FIRST_CHILD,
    RING_NEXT,
    RING_PREV,
    RING_ANCHOR,
];

pub(crate) fn is_ring_resolver(name: &str) -> bool {
    name == RING_NEXT || name == RING_PREV
}

/// Named endpoint resolvers. Graph files refer to resolvers by name only,
/// so custom resolvers must be registered before a graph is built or loaded.
#[derive(Clone)]
pub struct ResolverRegistry {
    map: BTreeMap<String, ResolverFn>,
}

impl fmt::Debug for ResolverRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.map.keys()).finish()
    }
}

impl Default for ResolverRegistry {
    fn default() -> Self {
        let mut reg = ResolverRegistry {
            map: BTreeMap::new(),
        };
        reg.register(CURRENT, |_, ctx| Some(ctx.current.clone()));
        reg.register(PREVIOUS, |_, ctx| ctx.previous().cloned());
        reg.register(ENTRY, |_, ctx| Some(ctx.entry.clone()));
        reg.register(EXIT_RESOLVER, |_, _| Some(NodeId::exit()));
        reg.register(FIRST_CHILD, |g, ctx| {
            g.literal_destinations(ctx.current, g.drill_rule())
                .into_iter()
                .find(|id| !id.is_exit())
        });
        reg.register(RING_NEXT, |g, ctx| ring_step(g, ctx, 1));
        reg.register(RING_PREV, |g, ctx| ring_step(g, ctx, -1));
        reg.register(RING_ANCHOR, |g, ctx| ring_anchor(g, ctx).map(|(a, _)| a));
        reg
    }
}

impl ResolverRegistry {
    pub fn register<F>(&mut self, name: impl Into<String>, f: F)
    where
        F: Fn(&Graph, &ResolverContext<'_>) -> Option<NodeId> + Send + Sync + 'static,
    {
        self.map.insert(name.into(), Arc::new(f));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.map.contains_key(name)
    }

    pub fn get(&self, name: &str) -> Option<&ResolverFn> {
        self.map.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }
}

/// Finds the node whose neighbor ring the focus is currently inside.
///
/// History entries left through ring rules are skipped; the entry below them
/// is the anchor, and its ring is the literal destinations of the rule that
/// left it. The current node must belong to that ring.
fn ring_anchor(graph: &Graph, ctx: &ResolverContext<'_>) -> Option<(NodeId, Vec<NodeId>)> {
    let mut depth = ctx.history.len();
    while depth > 0 {
        match &ctx.history[depth - 1].rule {
            Some(rule) if graph.is_ring_rule(rule) => depth -= 1,
            _ => break,
        }
    }
    let anchor = ctx.history.get(depth.checked_sub(1)?)?;
    let rule = anchor.rule.as_deref()?;
    let ring = graph.literal_destinations(&anchor.node, rule);
    if !ring.contains(ctx.current) {
        return None;
    }
    Some((anchor.node.clone(), ring))
}

fn ring_step(graph: &Graph, ctx: &ResolverContext<'_>, step: isize) -> Option<NodeId> {
    let (_, ring) = ring_anchor(graph, ctx)?;
    if ring.len() < 2 {
        return None;
    }
    let len = ring.len() as isize;
    let at = ring.iter().position(|id| id == ctx.current)? as isize;
    Some(ring[(at + step).rem_euclid(len) as usize].clone())
}
