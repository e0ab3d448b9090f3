//! Ego-network extraction and DOT / JSON export.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::UserGraph;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoNode {
    pub id: String,
    pub prob: Option<f64>,
}

/// Focal user, its followers and followees, and all edges among them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoExport {
    pub nodes: Vec<EgoNode>,
    pub edges: Vec<(String, String)>,
}

pub fn ego_network(g: &UserGraph, user: &str, probabilities: &HashMap<String, f64>) -> Result<EgoExport> {
    let u = g.require(user)?;
    let mut members: Vec<usize> = vec![u];
    members.extend(g.in_neighbors(u).iter().map(|&v| v as usize));
    members.extend(g.out_neighbors(u).iter().map(|&v| v as usize));
    let sub = g.induced_subgraph(&members);
    let nodes = sub
        .ids()
        .iter()
        .map(|id| EgoNode {
            id: id.clone(),
            prob: probabilities.get(id).copied(),
        })
        .collect();
    let edges = sub
        .edges()
        .map(|(a, b)| (sub.id(a).to_owned(), sub.id(b).to_owned()))
        .collect();
    Ok(EgoExport { nodes, edges })
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

impl EgoExport {
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph ego {\n");
        for node in &self.nodes {
            match node.prob {
                Some(p) => writeln!(out, "  {} [prob=\"{:.3}\"];", dot_quote(&node.id), p),
                None => writeln!(out, "  {};", dot_quote(&node.id)),
            }
            .expect("write to string");
        }
        for (a, b) in &self.edges {
            writeln!(out, "  {} -> {};", dot_quote(a), dot_quote(b)).expect("write to string");
        }
        out.push_str("}\n");
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ego export serializes")
    }
}
