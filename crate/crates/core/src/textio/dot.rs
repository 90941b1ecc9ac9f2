use std::fmt::Write as _;

use crate::model::{Arena, Negotiation, Player};
use crate::semantics::{MarkingStatus, StateSpace};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// DOT rendering of an arena. Every target of a hyper-arc becomes one edge
/// labelled `outcome/agent`. Atoms of Player 1 are drawn as filled boxes.
/// When `indices` is given, each atom's label carries its attractor index
/// (`inf` for atoms outside the attractor).
pub fn export_dot(arena: &Arena, indices: Option<&[Option<u32>]>) -> String {
    let neg = arena.negotiation();
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(neg.name())).unwrap();
    for n in neg.atom_ids() {
        let name = neg.atom_name(n);
        let mut label = name.to_string();
        if let Some(idx) = indices {
            match idx[n.index()] {
                Some(k) => write!(label, "\n{k}").unwrap(),
                None => label.push_str("\ninf"),
            }
        }
        let mut attrs = vec![format!("label={}", quote(&label))];
        if arena.owner(n) == Player::One {
            attrs.push("shape=box".into());
            attrs.push("style=filled".into());
            attrs.push("fillcolor=lightgrey".into());
        } else {
            attrs.push("shape=ellipse".into());
        }
        if n == neg.initial() {
            attrs.push("penwidth=2".into());
        }
        if n == neg.final_atom() {
            attrs.push("peripheries=2".into());
        }
        writeln!(out, "  {} [{}];", quote(name), attrs.join(", ")).unwrap();
    }
    for (n, a, r, targets) in neg.triples() {
        for &t in targets {
            writeln!(
                out,
                "  {} -> {} [label={}];",
                quote(neg.atom_name(n)),
                quote(neg.atom_name(t)),
                quote(&format!("{}/{}", neg.outcome_name(n, r), neg.agent_name(a)))
            )
            .unwrap();
        }
    }
    out.push_str("}\n");
    out
}

/// DOT rendering of an explored state space. Nodes are markings numbered in
/// exploration order, edges are labelled with the occurring step.
pub fn export_state_graph(negotiation: &Negotiation, space: &StateSpace) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(&format!("{}-states", negotiation.name()))).unwrap();
    for (i, m) in space.markings.iter().enumerate() {
        let label = format!("x{i}\n{}", m.display(negotiation));
        let style = match space.status[i] {
            MarkingStatus::Final => ", peripheries=2",
            MarkingStatus::Deadlock => ", style=filled, fillcolor=salmon",
            MarkingStatus::Live => "",
        };
        writeln!(out, "  x{i} [shape=box, label={}{style}];", quote(&label)).unwrap();
    }
    for (i, edges) in space.edges.iter().enumerate() {
        for (step, to) in edges {
            writeln!(
                out,
                "  x{i} -> x{to} [label={}];",
                quote(&step.display(negotiation).to_string())
            )
            .unwrap();
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{self, load};
    use crate::semantics::explore;

    #[test]
    fn family_acyclic_hyper_arc_is_two_edges() {
        let arena = load(fixtures::FAMILY_ACYCLIC);
        let dot = export_dot(&arena, None);
        let nodes = dot.lines().filter(|l| l.contains("[label=") && !l.contains("->")).count();
        assert_eq!(nodes, 4);
        let hyper: Vec<&str> = dot.lines().filter(|l| l.contains("label=\"st/M\"")).collect();
        assert_eq!(hyper.len(), 2);
        assert!(hyper[0].contains("\"n0\" -> \"n2\""));
        assert!(hyper[1].contains("\"n0\" -> \"nf\""));
        assert!(!dot.contains("\"nf\" ->"));
        assert!(!dot.contains("inf"));
    }

    #[test]
    fn indices_and_player1_style() {
        let arena = load(fixtures::TWO_DAUGHTERS);
        let idx: Vec<Option<u32>> = (0..arena.negotiation().atom_count())
            .map(|i| if i == 0 { None } else { Some(i as u32) })
            .collect();
        let dot = export_dot(&arena, Some(&idx));
        assert!(dot.contains("label=\"n0\\ninf\""));
        assert!(dot.contains("label=\"n2\\n2\", shape=box"));
    }

    #[test]
    fn state_graph_marks_deadlocks() {
        let arena = load(fixtures::FAMILY_DEADLOCK);
        let neg = arena.negotiation();
        let space = explore(neg, 1000).unwrap();
        let dot = export_state_graph(neg, &space);
        assert!(dot.contains("fillcolor=salmon"));
        assert!(dot.contains("x0 -> x1 [label=\"(n0,st)\"]"));
    }
}
