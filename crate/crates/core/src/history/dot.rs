use std::fmt::Write as _;

use super::tree::{HistoryTree, NodeId};

/// Renders a history tree (or a view's tree) as Graphviz DOT.
///
/// Black edges are solid, red edges dashed and labeled with their
/// multiplicity when it exceeds 1. Nodes are labeled with their input and,
/// when `anonymities` is given, with `a=<anonymity>`. Each level is one rank.
pub fn to_dot(tree: &HistoryTree, anonymities: Option<&[u64]>, highlight: Option<NodeId>) -> String {
    let mut out = String::new();
    writeln!(out, "digraph history {{").unwrap();
    writeln!(out, "  rankdir=TB;").unwrap();
    writeln!(out, "  node [shape=circle, fontsize=10];").unwrap();
    for level in -1..=tree.depth() {
        write!(out, "  {{ rank=same;").unwrap();
        for &id in tree.level(level) {
            write!(out, " n{};", id.0).unwrap();
        }
        writeln!(out, " }}").unwrap();
    }
    for id in tree.node_ids() {
        let mut text = match tree.label(id) {
            Some(l) if l.leader => format!("L:{}", l.value),
            Some(l) => l.value.to_string(),
            None => "r".to_string(),
        };
        if let Some(a) = anonymities {
            write!(text, "\\na={}", a[id.index()]).unwrap();
        }
        let style = if Some(id) == highlight { ", style=filled, fillcolor=lightblue" } else { "" };
        writeln!(out, "  n{} [label=\"{}\"{}];", id.0, escape(&text), style).unwrap();
    }
    for id in tree.node_ids() {
        if let Some(p) = tree.parent(id) {
            writeln!(out, "  n{} -> n{} [color=black, arrowhead=none];", p.0, id.0).unwrap();
        }
    }
    for id in tree.node_ids() {
        for &(u, m) in tree.red_edges(id) {
            let label = if m > 1 { format!(", label=\"{m}\"") } else { String::new() };
            writeln!(
                out,
                "  n{} -> n{} [color=red, style=dashed, arrowhead=none, constraint=false{}];",
                u.0, id.0, label
            )
            .unwrap();
        }
    }
    writeln!(out, "}}").unwrap();
    out
}

fn escape(s: &str) -> String {
    s.replace('"', "\\\"")
}
