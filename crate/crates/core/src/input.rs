//! Input tokens to navigation rules.
//!
//! Recognition (speech, gesture models, hardware) happens upstream; this
//! module only sees normalized tokens. Key tokens use the UI-Events `code`
//! names (`ArrowLeft`, `Enter`, `KeyL`); other modalities use `family-verb`
//! tokens such as `swipe-left`. Every rule name is also a command word,
//! matched case-insensitively after trimming.

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::engine::{EngineError, MoveResult, Session};
use crate::graph::Graph;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InputError {
    #[error("token `{token}` is bound to both `{first}` and `{second}`")]
    ConflictingBinding {
        token: String,
        first: String,
        second: String,
    },
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("invalid remap preferences: {0}")]
    BadPreferences(String),
}

/// Token to rule lookup for one graph. Immutable; remapping returns a copy.
#[derive(Debug, Clone)]
pub struct BindingTable {
    graph: Arc<Graph>,
    keys: BTreeMap<String, String>,
    commands: BTreeMap<String, String>,
}

fn normalize_word(text: &str) -> String {
    text.trim().to_lowercase()
}

impl BindingTable {
    /// Collects each rule's declared bindings plus its name as a command word.
    pub fn from_graph(graph: Arc<Graph>) -> Result<Self, InputError> {
        let mut keys: BTreeMap<String, String> = BTreeMap::new();
        let mut commands: BTreeMap<String, String> = BTreeMap::new();
        for rule in graph.rules() {
            for token in &rule.bindings {
                if let Some(first) = keys.get(token) {
                    if first != &rule.name {
                        return Err(InputError::ConflictingBinding {
                            token: token.clone(),
                            first: first.clone(),
                            second: rule.name.clone(),
                        });
                    }
                }
                keys.insert(token.clone(), rule.name.clone());
            }
            let word = normalize_word(&rule.name);
            if let Some(first) = commands.get(&word) {
                return Err(InputError::ConflictingBinding {
                    token: word,
                    first: first.clone(),
                    second: rule.name.clone(),
                });
            }
            commands.insert(word, rule.name.clone());
        }
        Ok(BindingTable {
            graph,
            keys,
            commands,
        })
    }

    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    /// Key and gesture bindings, sorted by token.
    pub fn key_bindings(&self) -> impl Iterator<Item = (&str, &str)> {
        self.keys.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn command_words(&self) -> impl Iterator<Item = (&str, &str)> {
        self.commands.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Points `token` at `rule`, replacing any previous binding for it.
    pub fn remap(&self, token: &str, rule: &str) -> Result<Self, InputError> {
        if self.graph.rule(rule).is_none() {
            return Err(InputError::UnknownRule(rule.to_string()));
        }
        let mut next = self.clone();
        next.keys.insert(token.to_string(), rule.to_string());
        Ok(next)
    }

    /// Applies a `{"token": "rule"}` JSON preference document.
    pub fn apply_preferences(&self, json: &str) -> Result<Self, InputError> {
        let prefs: BTreeMap<String, String> =
            serde_json::from_str(json).map_err(|e| InputError::BadPreferences(e.to_string()))?;
        prefs
            .iter()
            .try_fold(self.clone(), |table, (token, rule)| table.remap(token, rule))
    }

    pub fn parse_command(&self, text: &str) -> Option<&str> {
        self.commands
            .get(&normalize_word(text))
            .map(String::as_str)
    }

    /// Key token first, then command word.
    pub fn lookup(&self, token: &str) -> Option<&str> {
        self.keys
            .get(token)
            .map(String::as_str)
            .or_else(|| self.parse_command(token))
    }

    /// Runs the rule bound to `token`. Unbound tokens return `Ok(None)` and
    /// leave the session alone.
    pub fn dispatch(
        &self,
        session: &mut Session,
        token: &str,
    ) -> Result<Option<MoveResult>, EngineError> {
        match self.lookup(token) {
            Some(rule) => session.navigate(rule).map(Some),
            None => Ok(None),
        }
    }
}

pub fn default_bindings(graph: Arc<Graph>) -> Result<BindingTable, InputError> {
    BindingTable::from_graph(graph)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, Direction, Edge, Endpoint, GraphDecl, NavigationRule, Node};

    fn graph(left_bindings: &[&str], right_bindings: &[&str]) -> Result<Arc<Graph>, String> {
        let mut d = GraphDecl::new("a");
        d.rules = vec![
            NavigationRule::new("left", Direction::TowardSource).bound_to(left_bindings.to_vec()),
            NavigationRule::new("right", Direction::TowardTarget).bound_to(right_bindings.to_vec()),
        ];
        d.edges = vec![Edge::new(
            "ab",
            Endpoint::literal("a"),
            Endpoint::literal("b"),
            ["left", "right"],
        )];
        d.nodes = vec![Node::new("a").with_edges(["ab"]), Node::new("b").with_edges(["ab"])];
        build_graph(d).map(Arc::new).map_err(|e| e.to_string())
    }

    #[test]
    fn defaults_include_command_words() {
        let t = BindingTable::from_graph(graph(&[], &[]).unwrap()).unwrap();
        assert_eq!(t.key_bindings().count(), 0);
        let words: Vec<_> = t.command_words().collect();
        assert_eq!(words, [("left", "left"), ("right", "right")]);
    }

    #[test]
    fn conflicting_declared_bindings() {
        let g = graph(&["ArrowLeft"], &["ArrowLeft"]).unwrap();
        assert_eq!(
            BindingTable::from_graph(g).unwrap_err(),
            InputError::ConflictingBinding {
                token: "ArrowLeft".into(),
                first: "left".into(),
                second: "right".into()
            }
        );
    }

    #[test]
    fn remap_is_last_write_wins() {
        let t = BindingTable::from_graph(graph(&["ArrowLeft"], &["ArrowRight"]).unwrap()).unwrap();
        let t2 = t.remap("KeyJ", "right").unwrap();
        assert_eq!(t2.lookup("KeyJ"), Some("right"));
        let t3 = t2.remap("ArrowLeft", "right").unwrap();
        assert_eq!(t3.lookup("ArrowLeft"), Some("right"));
        // the original table is untouched
        assert_eq!(t.lookup("ArrowLeft"), Some("left"));
        assert_eq!(
            t.remap("KeyX", "teleport").unwrap_err(),
            InputError::UnknownRule("teleport".into())
        );
    }

    #[test]
    fn parse_command_normalizes() {
        let t = BindingTable::from_graph(graph(&[], &[]).unwrap()).unwrap();
        assert_eq!(t.parse_command("left"), Some("left"));
        assert_eq!(t.parse_command("  LEFT "), Some("left"));
        assert_eq!(t.parse_command("sideways"), None);
    }

    #[test]
    fn dispatch_unbound_is_noop() {
        let g = graph(&["ArrowLeft", "swipe-left"], &["ArrowRight"]).unwrap();
        let t = BindingTable::from_graph(g.clone()).unwrap();
        let (mut s, _) = Session::enter(g, None).unwrap();
        let before = s.snapshot();
        assert_eq!(t.dispatch(&mut s, "F13").unwrap(), None);
        assert_eq!(s.snapshot(), before);
        let r = t.dispatch(&mut s, "ArrowRight").unwrap().unwrap();
        assert_eq!(r.to.unwrap(), "b");
    }

    #[test]
    fn preferences_file() {
        let t = BindingTable::from_graph(graph(&[], &[]).unwrap()).unwrap();
        let t = t
            .apply_preferences(r#"{"KeyH": "left", "KeyL": "right"}"#)
            .unwrap();
        assert_eq!(t.lookup("KeyH"), Some("left"));
        assert!(matches!(
            t.apply_preferences("[1,2]"),
            Err(InputError::BadPreferences(_))
        ));
        assert_eq!(
            t.apply_preferences(r#"{"KeyH": "nope"}"#).unwrap_err(),
            InputError::UnknownRule("nope".into())
        );
    }
}
