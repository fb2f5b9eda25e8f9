use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{CellId, CellKind, Session};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TreeNode {
    pub id: CellId,
    pub parent_id: Option<CellId>,
    pub kind: CellKind,
    pub archived: bool,
    pub summary: String,
    /// Mark of the first chart, as a compact glyph hint.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thumbnail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub from: CellId,
    pub to: CellId,
}

/// Every cell ever created, archived ones included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSnapshot {
    pub nodes: Vec<TreeNode>,
    pub edges: Vec<TreeEdge>,
}

impl TreeSnapshot {
    pub fn children(&self, id: CellId) -> Vec<CellId> {
        self.edges.iter().filter(|e| e.from == id).map(|e| e.to).collect()
    }

    /// Graphviz rendering; archived cells are gray and dashed.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph notebook {\n  node [shape=box, fontname=\"Helvetica\"];\n");
        for node in &self.nodes {
            let label = format!("{}: {}", node.id, truncate(&node.summary, 60));
            let label = label.replace('\\', "\\\\").replace('"', "\\\"");
            let style = if node.archived {
                ", style=dashed, color=gray, fontcolor=gray"
            } else {
                ""
            };
            let shape = match node.kind {
                CellKind::Visualization => "",
                CellKind::ActionList => ", shape=note",
            };
            let _ = writeln!(out, "  c{} [label=\"{label}\"{shape}{style}];", node.id);
        }
        for edge in &self.edges {
            let _ = writeln!(out, "  c{} -> c{};", edge.from, edge.to);
        }
        out.push_str("}\n");
        out
    }
}

fn truncate(s: &str, max: usize) -> String {
    if s.chars().count() <= max {
        return s.to_string();
    }
    let mut t: String = s.chars().take(max - 3).collect();
    t.push_str("...");
    t
}

impl Session {
    pub fn tree(&self) -> TreeSnapshot {
        let nodes = self
            .cells
            .iter()
            .map(|c| TreeNode {
                id: c.id,
                parent_id: c.parent_id,
                kind: c.kind(),
                archived: c.archived,
                summary: c.summary(),
                thumbnail: match &c.content {
                    super::CellContent::Visualization { charts } => {
                        charts.first().map(|ch| format!("{:?}", ch.chart.mark).to_lowercase())
                    }
                    super::CellContent::ActionList { .. } => None,
                },
            })
            .collect();
        let edges = self
            .cells
            .iter()
            .filter_map(|c| c.parent_id.map(|p| TreeEdge { from: p, to: c.id }))
            .collect();
        TreeSnapshot { nodes, edges }
    }
}
